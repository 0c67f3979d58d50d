use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    c, identity, max_abs, trace, CMatrix, CVector, DensityOperator, PureState, RankOneSum, DEFAULT_DIM_CAP,
};
use crate::random::sample_haar_unitary;
use crate::scheme::SchemeParams;

const UNITARY_TOL: f64 = 1e-10;

/// Sampled unitaries `U_1..U_r` on `C^{d^n}` and the code subspace `S`,
/// the span of the first `s` computational basis vectors.
#[derive(Debug, Clone)]
pub struct HidingScheme {
    params: SchemeParams,
    dim: usize,
    unitaries: Vec<CMatrix>,
}

impl HidingScheme {
    /// Samples `r` independent Haar unitaries, in order, from `rng`.
    pub fn build<R: Rng + ?Sized>(params: SchemeParams, rng: &mut R) -> Result<Self> {
        Self::build_capped(params, rng, DEFAULT_DIM_CAP)
    }

    pub fn build_capped<R: Rng + ?Sized>(params: SchemeParams, rng: &mut R, cap: usize) -> Result<Self> {
        let dim = checked_dim(&params, cap)?;
        let unitaries = (0..params.r).map(|_| sample_haar_unitary(dim, rng)).collect::<Result<_>>()?;
        Ok(Self { params, dim, unitaries })
    }

    /// A scheme with caller-supplied unitaries, each checked to 1e-10.
    pub fn from_unitaries(params: SchemeParams, unitaries: Vec<CMatrix>) -> Result<Self> {
        let dim = checked_dim(&params, DEFAULT_DIM_CAP)?;
        if unitaries.len() != params.r {
            return Err(Error::Parameter(format!("expected {} unitaries, got {}", params.r, unitaries.len())));
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(Error::dim_mismatch("unitary", dim, u.nrows()));
            }
            let defect = unitarity_defect(u);
            if !(defect <= UNITARY_TOL) {
                return Err(Error::Domain(format!("unitary {i} fails the unitarity check ({defect:.3e})")));
            }
        }
        Ok(Self { params, dim, unitaries })
    }

    /// Skips the unitarity check; only for fault-injection tests.
    #[doc(hidden)]
    pub fn from_unitaries_unchecked(params: SchemeParams, unitaries: Vec<CMatrix>) -> Result<Self> {
        let dim = checked_dim(&params, DEFAULT_DIM_CAP)?;
        Ok(Self { params, dim, unitaries })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn code_dim(&self) -> usize {
        self.params.s
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// Largest `max |U†U − I|` over the scheme's unitaries.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitaries.iter().map(unitarity_defect).fold(0.0, f64::max)
    }

    /// `P_S = Σ_{j<s} |j⟩⟨j|`.
    pub fn code_projector(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| if i == j && i < self.params.s { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    /// `U_i|j⟩` for `j < s`: the first `s` columns of `U_i`.
    pub fn code_columns(&self, i: usize) -> CMatrix {
        self.unitaries[i].columns(0, self.params.s).into_owned()
    }

    pub fn embed_state(&self, phi: &PureState) -> Result<CVector> {
        if phi.dim() != self.params.s {
            return Err(Error::dim_mismatch("code state", self.params.s, phi.dim()));
        }
        let mut v = CVector::zeros(self.dim);
        v.rows_mut(0, self.params.s).copy_from(phi.amplitudes());
        Ok(v)
    }

    pub fn embed_density(&self, rho: &DensityOperator) -> Result<CMatrix> {
        if rho.dim() != self.params.s {
            return Err(Error::dim_mismatch("code density operator", self.params.s, rho.dim()));
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        m.view_mut((0, 0), (self.params.s, self.params.s)).copy_from(rho.matrix());
        Ok(m)
    }

    /// `E(ρ) = (1/r) Σ_i U_i ρ U_i†` for `ρ` on the code space.
    pub fn encode(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.params.s {
            return Err(Error::dim_mismatch("code density operator", self.params.s, rho.dim()));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.params.r {
            let cols = self.code_columns(i);
            out += &cols * rho.matrix() * cols.adjoint();
        }
        out /= c(self.params.r as f64, 0.0);
        let tr = trace(&out);
        if (tr.re - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("encoding lost trace: {tr}")));
        }
        DensityOperator::new(out)
    }

    /// `E(φ)` for a pure code state, as `(1/r) Σ_i |U_iφ⟩⟨U_iφ|`.
    pub fn encode_pure(&self, phi: &PureState) -> Result<RankOneSum> {
        let v = self.embed_state(phi)?;
        let cols: Vec<CVector> = self.unitaries.iter().map(|u| u * &v).collect();
        RankOneSum::new(vec![1.0 / self.params.r as f64; self.params.r], CMatrix::from_columns(&cols))
    }

    /// One run of the encoder: picks `i` uniformly and returns `(i, U_i|φ⟩)`.
    pub fn encode_sampled<R: Rng + ?Sized>(&self, phi: &PureState, rng: &mut R) -> Result<(usize, PureState)> {
        let v = self.embed_state(phi)?;
        let i = rng.random_range(0..self.params.r);
        Ok((i, PureState::normalized(&self.unitaries[i] * v)?))
    }
}

fn checked_dim(params: &SchemeParams, cap: usize) -> Result<usize> {
    match params.total_dim() {
        Some(dim) if dim <= cap => Ok(dim),
        _ => Err(Error::Dimension(format!("d^n = {}^{} exceeds the dimension cap {cap}", params.d, params.n))),
    }
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}
