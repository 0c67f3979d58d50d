use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eigen, hermitize, identity, max_abs, trace, CMatrix, CVector, DensityOperator, KrausChannel,
    RankOneSum,
};
use crate::scheme::split::SplitLayout;
use crate::scheme::{HidingScheme, PartySplit};

/// Eigenvalues of `N` at or below this fraction of its largest eigenvalue
/// are treated as zero by the inverse square root.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

const TRACE_TOL: f64 = 1e-8;

fn check_split(scheme: &HidingScheme, split: &PartySplit) -> Result<()> {
    let p = scheme.params();
    if split.n() != p.n || split.k() != p.k {
        return Err(Error::Parameter(format!(
            "split with n = {}, k = {} does not match scheme with n = {}, k = {}",
            split.n(),
            split.k(),
            p.n,
            p.k
        )));
    }
    Ok(())
}

fn block_of(m: &CMatrix, layout: &SplitLayout, l: usize) -> CMatrix {
    CMatrix::from_fn(layout.d_x, layout.d_x, |a, b| m[(layout.index(l, a), layout.index(l, b))])
}

fn rows_of(v: &CVector, layout: &SplitLayout, l: usize) -> CVector {
    CVector::from_fn(layout.d_x, |a, _| v[layout.index(l, a)])
}

/// One outcome `l` of the complement measurement.
#[derive(Debug, Clone)]
pub struct LocalOutcome {
    pub outcome: usize,
    pub probability: f64,
    /// Renormalized state on the authorized parties; `None` when the outcome
    /// has zero probability.
    pub post_state: Option<DensityOperator>,
}

/// Measures the complement parties in the computational basis.
///
/// Returns every outcome `l ∈ [d^{n−k}]`, including those with zero
/// probability. With `k = n` there is a single outcome carrying `ρ` itself.
pub fn local_measurement(
    scheme: &HidingScheme,
    split: &PartySplit,
    rho: &DensityOperator,
) -> Result<Vec<LocalOutcome>> {
    check_split(scheme, split)?;
    if rho.dim() != scheme.dim() {
        return Err(Error::dim_mismatch("measured state", scheme.dim(), rho.dim()));
    }
    let layout = SplitLayout::new(split, scheme.params().d);
    let mut out = Vec::with_capacity(layout.d_w);
    let mut total = 0.0;
    for l in 0..layout.d_w {
        let block = block_of(rho.matrix(), &layout, l);
        let p = trace(&block).re.max(0.0);
        total += p;
        let post_state = if p > 1e-14 { Some(DensityOperator::new(block / c(p, 0.0))?) } else { None };
        out.push(LocalOutcome { outcome: l, probability: p, post_state });
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("outcome probabilities sum to {total}")));
    }
    Ok(out)
}

/// Vectors `ξ_ijl = P_l U_i|j⟩ / √(rs)` on the full space, ordered by
/// `(i, j, l)` with `l` fastest.
pub fn xi_vectors(scheme: &HidingScheme, split: &PartySplit) -> Result<Vec<XiVector>> {
    check_split(scheme, split)?;
    let p = scheme.params();
    let layout = SplitLayout::new(split, p.d);
    let scale = c(1.0 / ((p.r * p.s) as f64).sqrt(), 0.0);
    let mut out = Vec::with_capacity(p.r * p.s * layout.d_w);
    for (i, u) in scheme.unitaries().iter().enumerate() {
        for j in 0..p.s {
            for l in 0..layout.d_w {
                let mut v = CVector::zeros(scheme.dim());
                for x in 0..layout.d_x {
                    let row = layout.index(l, x);
                    v[row] = u[(row, j)] * scale;
                }
                out.push(XiVector { i, j, l, vector: v });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct XiVector {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub vector: CVector,
}

/// `N = Σ_i Σ_l P_l U_i (P_S / rs) U_i† P_l`, built from projectors on the
/// full space.
pub fn build_normalization(scheme: &HidingScheme, split: &PartySplit) -> Result<CMatrix> {
    check_split(scheme, split)?;
    let p = scheme.params();
    let layout = SplitLayout::new(split, p.d);
    let ps = scheme.code_projector();
    let mut inner = CMatrix::zeros(scheme.dim(), scheme.dim());
    for u in scheme.unitaries() {
        inner += u * &ps * u.adjoint();
    }
    inner /= c((p.r * p.s) as f64, 0.0);
    let mut n = CMatrix::zeros(scheme.dim(), scheme.dim());
    for l in 0..layout.d_w {
        let pl = CMatrix::from_fn(scheme.dim(), scheme.dim(), |a, b| {
            if a == b && (0..layout.d_x).any(|x| layout.index(l, x) == a) {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        n += &pl * &inner * &pl;
    }
    Ok(hermitize(&n))
}

/// `N = Σ_{ijl} |ξ_ijl⟩⟨ξ_ijl|`.
pub fn build_normalization_from_xi(scheme: &HidingScheme, split: &PartySplit) -> Result<CMatrix> {
    let mut n = CMatrix::zeros(scheme.dim(), scheme.dim());
    for xi in xi_vectors(scheme, split)? {
        n += &xi.vector * xi.vector.adjoint();
    }
    Ok(hermitize(&n))
}

#[derive(Debug, Clone)]
struct DecoderBlock {
    n_block: CMatrix,
    inv_sqrt: CMatrix,
    /// `T_il` restricted to the block, `s × d^k`, one per unitary.
    kraus: Vec<CMatrix>,
    /// `I − Σ_i T_il†T_il` on the block, clamped to be PSD.
    completion: CMatrix,
}

/// Transpose-channel decoder for one authorized set, completed to a
/// trace-preserving map.
///
/// Every operator involved is block diagonal in the complement outcome `l`,
/// so only the `d^k × d^k` blocks are stored.
#[derive(Debug, Clone)]
pub struct TransposeDecoder {
    split: PartySplit,
    layout: SplitLayout,
    dim: usize,
    r: usize,
    s: usize,
    blocks: Vec<DecoderBlock>,
}

/// Output of one decode call.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub state: DensityOperator,
    /// Weight on the completion branch, which outputs `I/s`.
    pub leakage: f64,
}

impl TransposeDecoder {
    pub fn build(scheme: &HidingScheme, split: &PartySplit) -> Result<Self> {
        check_split(scheme, split)?;
        let p = scheme.params();
        let layout = SplitLayout::new(split, p.d);
        let scale = c(1.0 / ((p.r * p.s) as f64).sqrt(), 0.0);

        // B_il: rows of U_i's code columns in block l, scaled by 1/√(rs)
        let mut pieces: Vec<Vec<CMatrix>> = Vec::with_capacity(layout.d_w);
        let mut n_blocks = Vec::with_capacity(layout.d_w);
        for l in 0..layout.d_w {
            let mut n_block = CMatrix::zeros(layout.d_x, layout.d_x);
            let mut row = Vec::with_capacity(p.r);
            for u in scheme.unitaries() {
                let b = CMatrix::from_fn(layout.d_x, p.s, |x, j| u[(layout.index(l, x), j)] * scale);
                n_block += &b * b.adjoint();
                row.push(b);
            }
            pieces.push(row);
            n_blocks.push(hermitize(&n_block));
        }

        let mut spectra = Vec::with_capacity(layout.d_w);
        let mut lam_max = 0.0f64;
        for nb in &n_blocks {
            let (values, vectors) = hermitian_eigen(nb)?;
            lam_max = lam_max.max(values.last().copied().unwrap_or(0.0));
            spectra.push((values, vectors));
        }
        let total: f64 = n_blocks.iter().map(|nb| trace(nb).re).sum();
        if !(lam_max > 1e-14 && total.is_finite()) {
            return Err(Error::Degenerate(format!("normalization operator vanishes (trace {total:.3e})")));
        }
        let cutoff = SUPPORT_REL_TOL * lam_max;

        let mut blocks = Vec::with_capacity(layout.d_w);
        for ((n_block, (values, vectors)), row) in n_blocks.into_iter().zip(spectra).zip(pieces) {
            let mut inv_sqrt = CMatrix::zeros(layout.d_x, layout.d_x);
            for (k, &lam) in values.iter().enumerate() {
                if lam > cutoff {
                    let v = vectors.column(k);
                    inv_sqrt += (v * v.adjoint()) * c(1.0 / lam.sqrt(), 0.0);
                }
            }
            let inv_sqrt = hermitize(&inv_sqrt);
            let kraus: Vec<CMatrix> = row.iter().map(|b| b.adjoint() * &inv_sqrt).collect();
            let mut covered = CMatrix::zeros(layout.d_x, layout.d_x);
            for t in &kraus {
                covered += t.adjoint() * t;
            }
            let completion = clamp_psd(&(identity(layout.d_x) - covered))?;
            blocks.push(DecoderBlock { n_block, inv_sqrt, kraus, completion });
        }
        Ok(Self { split: split.clone(), layout, dim: scheme.dim(), r: p.r, s: p.s, blocks })
    }

    pub fn split(&self) -> &PartySplit {
        &self.split
    }

    pub fn outcome_count(&self) -> usize {
        self.layout.d_w
    }

    pub fn code_dim(&self) -> usize {
        self.s
    }

    pub fn in_dim(&self) -> usize {
        self.dim
    }

    /// `max |Σ_il T_il†T_il + R − I|` over the full space.
    pub fn completeness_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let mut sum = b.completion.clone();
                for t in &b.kraus {
                    sum += t.adjoint() * t;
                }
                max_abs(&(sum - identity(self.layout.d_x)))
            })
            .fold(0.0, f64::max)
    }

    fn embed_block(&self, l: usize, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in 0..self.layout.d_x {
            for b in 0..self.layout.d_x {
                out[(self.layout.index(l, a), self.layout.index(l, b))] = m[(a, b)];
            }
        }
        out
    }

    /// `N` on the full space.
    pub fn n_operator(&self) -> CMatrix {
        (0..self.layout.d_w).map(|l| self.embed_block(l, &self.blocks[l].n_block)).sum()
    }

    /// `N^{−1/2}` (pseudo-inverse on the support) on the full space.
    pub fn n_inv_sqrt(&self) -> CMatrix {
        (0..self.layout.d_w).map(|l| self.embed_block(l, &self.blocks[l].inv_sqrt)).sum()
    }

    /// `R = I − Σ_il T_il†T_il`, clamped PSD, on the full space.
    pub fn completion_operator(&self) -> CMatrix {
        (0..self.layout.d_w).map(|l| self.embed_block(l, &self.blocks[l].completion)).sum()
    }

    /// `T_il` as an `s × d^n` matrix.
    pub fn kraus_full(&self, i: usize, l: usize) -> CMatrix {
        let t = &self.blocks[l].kraus[i];
        let mut out = CMatrix::zeros(self.s, self.dim);
        for x in 0..self.layout.d_x {
            out.set_column(self.layout.index(l, x), &t.column(x));
        }
        out
    }

    /// `T_il` restricted to block `l`, `s × d^k`.
    pub fn kraus_block(&self, i: usize, l: usize) -> &CMatrix {
        &self.blocks[l].kraus[i]
    }

    /// The whole decoder as a Kraus channel from `C^{d^n}` to `C^s`. The
    /// completion branch contributes `√(λ/s) |j⟩⟨v|` per eigenpair of `R`.
    pub fn as_channel(&self) -> Result<KrausChannel> {
        let mut ops = Vec::new();
        for l in 0..self.layout.d_w {
            for i in 0..self.r {
                ops.push(self.kraus_full(i, l));
            }
        }
        for l in 0..self.layout.d_w {
            let (values, vectors) = hermitian_eigen(&self.blocks[l].completion)?;
            for (k, &lam) in values.iter().enumerate() {
                if lam <= 1e-15 {
                    continue;
                }
                let w = (lam / self.s as f64).sqrt();
                for j in 0..self.s {
                    let mut op = CMatrix::zeros(self.s, self.dim);
                    for x in 0..self.layout.d_x {
                        op[(j, self.layout.index(l, x))] = vectors[(x, k)].conj() * w;
                    }
                    ops.push(op);
                }
            }
        }
        KrausChannel::new(ops, None)
    }

    /// Complement measurement followed by the transpose channel.
    pub fn decode(&self, rho: &DensityOperator) -> Result<Decoded> {
        if rho.dim() != self.dim {
            return Err(Error::dim_mismatch("decoder input", self.dim, rho.dim()));
        }
        let mut out = CMatrix::zeros(self.s, self.s);
        let mut leakage = 0.0;
        for (l, b) in self.blocks.iter().enumerate() {
            let block = block_of(rho.matrix(), &self.layout, l);
            for t in &b.kraus {
                out += t * &block * t.adjoint();
            }
            leakage += trace(&(&b.completion * &block)).re;
        }
        self.finish(out, leakage)
    }

    /// Decodes `Σ_k c_k |v_k⟩⟨v_k|` without forming the dense input.
    pub fn decode_rank_one(&self, rho: &RankOneSum) -> Result<Decoded> {
        if rho.dim() != self.dim {
            return Err(Error::dim_mismatch("decoder input", self.dim, rho.dim()));
        }
        let mut out = CMatrix::zeros(self.s, self.s);
        let mut leakage = 0.0;
        for (coef, v) in rho.coeffs().iter().zip(rho.vectors().column_iter()) {
            let v = v.into_owned();
            for (l, b) in self.blocks.iter().enumerate() {
                let vl = rows_of(&v, &self.layout, l);
                if vl.norm_squared() == 0.0 {
                    continue;
                }
                for t in &b.kraus {
                    let w = t * &vl;
                    out += (&w * w.adjoint()) * c(*coef, 0.0);
                }
                leakage += coef * (vl.adjoint() * &b.completion * &vl)[(0, 0)].re;
            }
        }
        self.finish(out, leakage)
    }

    fn finish(&self, mut out: CMatrix, leakage: f64) -> Result<Decoded> {
        let leakage = leakage.max(0.0);
        out += identity(self.s) * c(leakage / self.s as f64, 0.0);
        let tr = trace(&out).re;
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::Domain(format!("decoded state has trace {tr}")));
        }
        Ok(Decoded { state: DensityOperator::from_hermitian_unchecked(out), leakage })
    }
}

fn clamp_psd(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &lam) in values.iter().enumerate() {
        if lam > 0.0 {
            let v = vectors.column(k);
            out += (v * v.adjoint()) * c(lam, 0.0);
        }
    }
    Ok(hermitize(&out))
}

/// Block layout facts exposed for reports.
#[derive(Debug, Clone, Serialize)]
pub struct DecoderSummary {
    pub split: String,
    pub outcomes: usize,
    pub completeness_residual: f64,
}

impl From<&TransposeDecoder> for DecoderSummary {
    fn from(d: &TransposeDecoder) -> Self {
        Self { split: d.split.label(), outcomes: d.outcome_count(), completeness_residual: d.completeness_residual() }
    }
}
