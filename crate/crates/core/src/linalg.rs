//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Operators that are
//! Hermitian by construction are symmetrized before any spectral call, and
//! spectra are always returned in ascending order so that downstream tie
//! breaking is deterministic.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative eigenvalue threshold (against the largest eigenvalue) below which
/// an eigenvalue is treated as outside the support.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Largest total Hilbert-space dimension any constructor will accept.
pub const DEFAULT_DIM_CAP: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
const KRAUS_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

fn require_finite(m: &CMatrix, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite entries")))
    }
}

/// Spectral decomposition of a Hermitian matrix (symmetrized first).
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// as columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = require_square(m)?;
    require_finite(m, "matrix")?;
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

/// Kronecker product with the lexicographic index convention
/// `(A ⊗ B)[i·p + k, j·q + l] = A[i, j] · B[k, l]`.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    tensor_product_capped(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_product_capped(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= cap && c <= cap => Ok(a.kronecker(b)),
        _ => Err(Error::Dimension(format!(
            "tensor product of {}x{} and {}x{} exceeds the dimension cap {cap}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        ))),
    }
}

/// Sum of singular values of a square matrix.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    require_square(a)?;
    require_finite(a, "matrix")?;
    let scale = max_abs(a).max(1.0);
    if hermiticity_defect(a) <= 1e-12 * scale {
        let (values, _) = hermitian_eigen(a)?;
        return Ok(values.iter().map(|v| v.abs()).sum());
    }
    let svd = a.clone().svd(false, false);
    Ok(svd.singular_values.iter().sum())
}

/// `M^{-1/2}` on the support of a positive-semidefinite Hermitian `M`, zero
/// elsewhere. Eigenvalues at or below `rel_tol · λ_max` count as zero.
pub fn pinv_sqrt(m: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    spectral_map(m, rel_tol, |lam| 1.0 / lam.sqrt())
}

/// `M^{1/2}` for a positive-semidefinite Hermitian `M`.
pub fn psd_sqrt(m: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    spectral_map(m, rel_tol, f64::sqrt)
}

/// Orthogonal projector onto the support of a positive-semidefinite `M`.
pub fn support_projector(m: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    spectral_map(m, rel_tol, |_| 1.0)
}

fn spectral_map(m: &CMatrix, rel_tol: f64, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let n = require_square(m)?;
    require_finite(m, "matrix")?;
    let scale = max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::Domain(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    let (values, vectors) = hermitian_eigen(m)?;
    let lam_max = values.last().copied().unwrap_or(0.0);
    if values[0] < -PSD_TOL * lam_max.max(1.0) {
        return Err(Error::Domain(format!("matrix is not positive semidefinite (min eigenvalue {:.3e})", values[0])));
    }
    let cutoff = rel_tol * lam_max;
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        if lam <= cutoff || lam <= 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (v * v.adjoint()) * c(f(lam), 0.0);
    }
    Ok(hermitize(&out))
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidState("empty state vector".into()));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self { amplitudes: v / c(norm, 0.0) })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension(format!("basis index {index} out of range for dimension {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator { matrix: self.projector() }
    }
}

/// Trace-one positive-semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity (all to 1e-10).
    /// The stored matrix is symmetrized.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix)?;
        require_finite(&matrix, "density operator")?;
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let matrix = hermitize(&matrix);
        if !is_psd(&matrix, PSD_TOL) {
            return Err(Error::InvalidState("not positive semidefinite".into()));
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: identity(dim) * c(1.0 / dim as f64, 0.0) }
    }

    pub(crate) fn from_hermitian_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(is_finite(&matrix));
        Self { matrix: hermitize(&matrix) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::dim_mismatch("trace distance", self.dim(), other.dim()));
        }
        trace_norm(&(&self.matrix - &other.matrix))
    }
}

/// Minimum eigenvalue at least `-tol`, tested with a Cholesky factorization
/// of `m + tol·I` for large matrices and an eigendecomposition for small ones.
pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    if n <= 64 {
        return hermitian_eigen(m).map(|(v, _)| v[0] >= -tol).unwrap_or(false);
    }
    let shifted = hermitize(m) + identity(n) * c(tol, 0.0);
    nalgebra::Cholesky::new(shifted).is_some()
}

/// Completely positive map given by Kraus operators, trace preserving on a
/// designated subspace (the whole input space when no projector is given).
#[derive(Debug, Clone)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    operators: Vec<CMatrix>,
    domain_projector: Option<CMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<CMatrix>, domain_projector: Option<CMatrix>) -> Result<Self> {
        let first =
            operators.first().ok_or_else(|| Error::Parameter("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = first.shape();
        for k in &operators {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::Dimension(format!(
                    "Kraus operator shape {:?} differs from {:?}",
                    k.shape(),
                    (out_dim, in_dim)
                )));
            }
            require_finite(k, "Kraus operator")?;
        }
        if let Some(p) = &domain_projector {
            if p.shape() != (in_dim, in_dim) {
                return Err(Error::dim_mismatch("domain projector", in_dim, p.nrows()));
            }
        }
        let channel = Self { in_dim, out_dim, operators, domain_projector };
        let residual = channel.completeness_residual();
        if residual > KRAUS_TOL {
            return Err(Error::Domain(format!(
                "Kraus operators are not complete on the domain (residual {residual:.3e})"
            )));
        }
        Ok(channel)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn domain_projector(&self) -> Option<&CMatrix> {
        self.domain_projector.as_ref()
    }

    /// `max |Σ K†K − Π|` where `Π` is the domain projector (or identity).
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.operators {
            sum += k.adjoint() * k;
        }
        match &self.domain_projector {
            Some(p) => max_abs(&(sum - p)),
            None => max_abs(&(sum - identity(self.in_dim))),
        }
    }
}

/// `Σ_m K_m ρ K_m†`.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != ch.in_dim {
        return Err(Error::dim_mismatch("channel input", ch.in_dim, rho.dim()));
    }
    if let Some(p) = &ch.domain_projector {
        let outside = 1.0 - trace(&(p * rho.matrix())).re;
        if outside > KRAUS_TOL {
            return Err(Error::Domain(format!("input has weight {outside:.3e} outside the channel domain")));
        }
    }
    let mut out = CMatrix::zeros(ch.out_dim, ch.out_dim);
    for k in &ch.operators {
        out += k * rho.matrix() * k.adjoint();
    }
    Ok(DensityOperator::from_hermitian_unchecked(out))
}

/// `⟨φ|ρ|φ⟩`, clamped to `[0, 1]`.
pub fn fidelity_with_pure(phi: &PureState, rho: &DensityOperator) -> Result<f64> {
    if phi.dim() != rho.dim() {
        return Err(Error::dim_mismatch("fidelity", rho.dim(), phi.dim()));
    }
    let v = phi.amplitudes();
    let f = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
    Ok(f.clamp(0.0, 1.0))
}

/// Hermitian operator `Σ_k c_k |v_k⟩⟨v_k|` with real (possibly negative)
/// coefficients, kept in factored form. Encoded pure states and their
/// differences live here, which keeps attack evaluation linear in the rank.
#[derive(Debug, Clone)]
pub struct RankOneSum {
    coeffs: Vec<f64>,
    vectors: CMatrix,
}

impl RankOneSum {
    pub fn new(coeffs: Vec<f64>, vectors: CMatrix) -> Result<Self> {
        if coeffs.len() != vectors.ncols() {
            return Err(Error::dim_mismatch("rank-one terms", vectors.ncols(), coeffs.len()));
        }
        require_finite(&vectors, "rank-one vectors")?;
        Ok(Self { coeffs, vectors })
    }

    /// Eigendecomposition of a dense Hermitian matrix, dropping zero modes.
    pub fn from_hermitian(m: &CMatrix) -> Result<Self> {
        let (values, vectors) = hermitian_eigen(m)?;
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k].abs() > 1e-15 * scale.max(1e-300)).collect();
        let cols: Vec<CVector> = keep.iter().map(|&k| vectors.column(k).into_owned()).collect();
        let vectors = if cols.is_empty() { CMatrix::zeros(m.nrows(), 0) } else { CMatrix::from_columns(&cols) };
        Ok(Self { coeffs: keep.iter().map(|&k| values[k]).collect(), vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn rank_bound(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// `self − other`.
    pub fn difference(&self, other: &RankOneSum) -> Result<RankOneSum> {
        if self.dim() != other.dim() {
            return Err(Error::dim_mismatch("rank-one difference", self.dim(), other.dim()));
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.extend(other.coeffs.iter().map(|c| -c));
        let mut vectors = CMatrix::zeros(self.dim(), coeffs.len());
        vectors.columns_mut(0, self.coeffs.len()).copy_from(&self.vectors);
        vectors.columns_mut(self.coeffs.len(), other.coeffs.len()).copy_from(&other.vectors);
        Ok(RankOneSum { coeffs, vectors })
    }

    pub fn to_dense(&self) -> CMatrix {
        let scaled = CMatrix::from_fn(self.dim(), self.coeffs.len(), |r, k| self.vectors[(r, k)] * self.coeffs[k]);
        hermitize(&(scaled * self.vectors.adjoint()))
    }

    /// `⟨z|A|z⟩`.
    pub fn expectation(&self, z: &CVector) -> f64 {
        let overlaps = self.vectors.adjoint() * z;
        overlaps.iter().zip(&self.coeffs).map(|(o, c)| c * o.norm_sqr()).sum()
    }

    /// Trace norm through the small matrix `R C R†`, where `V = QR`.
    pub fn trace_norm(&self) -> Result<f64> {
        let m = self.coeffs.len();
        if m == 0 {
            return Ok(0.0);
        }
        if m >= self.dim() {
            return trace_norm(&self.to_dense());
        }
        let r = self.vectors.clone().qr().r();
        let rc = CMatrix::from_fn(r.nrows(), m, |i, k| r[(i, k)] * self.coeffs[k]);
        let small = hermitize(&(rc * r.adjoint()));
        let (values, _) = hermitian_eigen(&small)?;
        Ok(values.iter().map(|v| v.abs()).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c(v, 0.0))))
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = identity(2);
        assert_eq!(tensor_product(&i2, &i2).unwrap(), identity(4));
    }

    #[test]
    fn basis_projector_tensor_bookkeeping() {
        let e0 = PureState::basis(2, 0).unwrap().projector();
        let e1 = PureState::basis(2, 1).unwrap().projector();
        let prod = tensor_product(&e0, &e1).unwrap();
        assert_eq!(prod, PureState::basis(4, 1).unwrap().projector());
    }

    #[test]
    fn tensor_product_respects_cap() {
        let a = identity(8);
        assert!(matches!(tensor_product_capped(&a, &a, 32), Err(Error::Dimension(_))));
        assert!(tensor_product_capped(&a, &a, 64).is_ok());
    }

    #[test]
    fn trace_norm_simple_cases() {
        assert!((trace_norm(&identity(5)).unwrap() - 5.0).abs() < 1e-12);
        assert!((trace_norm(&diag(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-12);
        let rect = CMatrix::zeros(2, 3);
        assert!(matches!(trace_norm(&rect), Err(Error::Shape { .. })));
    }

    #[test]
    fn pinv_sqrt_diagonal_cases() {
        let out = pinv_sqrt(&diag(&[4.0, 1.0]), DEFAULT_REL_TOL).unwrap();
        assert!(max_abs(&(out - diag(&[0.5, 1.0]))) < 1e-12);
        let out = pinv_sqrt(&diag(&[4.0, 0.0]), DEFAULT_REL_TOL).unwrap();
        assert!(max_abs(&(out - diag(&[0.5, 0.0]))) < 1e-12);
    }

    #[test]
    fn pinv_sqrt_rejects_non_hermitian() {
        let mut m = diag(&[1.0, 1.0]);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(pinv_sqrt(&m, DEFAULT_REL_TOL), Err(Error::Domain(_))));
    }

    #[test]
    fn identity_channel_and_dephasing() {
        let rho =
            DensityOperator::new(CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]))
                .unwrap();
        let id = KrausChannel::new(vec![identity(2)], None).unwrap();
        assert!(max_abs(&(apply_channel(&id, &rho).unwrap().into_matrix() - rho.matrix())) < 1e-15);

        let p0 = PureState::basis(2, 0).unwrap().projector();
        let p1 = PureState::basis(2, 1).unwrap().projector();
        let dephase = KrausChannel::new(vec![p0, p1], None).unwrap();
        let out = apply_channel(&dephase, &rho).unwrap();
        assert!(max_abs(&(out.into_matrix() - diag(&[0.7, 0.3]))) < 1e-15);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let p0 = PureState::basis(2, 0).unwrap().projector();
        assert!(KrausChannel::new(vec![p0.clone()], None).is_err());
        // complete on the span of |0>
        assert!(KrausChannel::new(vec![p0.clone()], Some(p0)).is_ok());
    }

    #[test]
    fn channel_rejects_dimension_mismatch() {
        let id = KrausChannel::new(vec![identity(2)], None).unwrap();
        let rho = DensityOperator::maximally_mixed(3);
        assert!(matches!(apply_channel(&id, &rho), Err(Error::Dimension(_))));
    }

    #[test]
    fn fidelity_cases() {
        let phi = PureState::basis(3, 1).unwrap();
        assert!((fidelity_with_pure(&phi, &phi.to_density()).unwrap() - 1.0).abs() < 1e-15);
        let other = PureState::basis(3, 2).unwrap();
        assert_eq!(fidelity_with_pure(&phi, &other.to_density()).unwrap(), 0.0);
        let mixed = DensityOperator::maximally_mixed(3);
        assert!((fidelity_with_pure(&phi, &mixed).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(fidelity_with_pure(&phi, &DensityOperator::maximally_mixed(2)).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(diag(&[0.5, 0.6])).is_err());
        assert!(DensityOperator::new(diag(&[1.2, -0.2])).is_err());
        assert!(DensityOperator::new(diag(&[0.25, 0.75])).is_ok());
        assert!(PureState::new(CVector::from_element(2, c(1.0, 0.0))).is_err());
    }

    #[test]
    fn rank_one_sum_trace_norm_matches_dense() {
        let v = CMatrix::from_fn(6, 3, |r, k| c((r * 3 + k) as f64 * 0.1 - 0.4, (r as f64 - k as f64) * 0.2));
        let sum = RankOneSum::new(vec![0.5, -1.0, 0.25], v).unwrap();
        let dense = sum.to_dense();
        assert!((sum.trace_norm().unwrap() - trace_norm(&dense).unwrap()).abs() < 1e-12);
        let back = RankOneSum::from_hermitian(&dense).unwrap();
        assert!(max_abs(&(back.to_dense() - dense)) < 1e-12);
    }

    #[test]
    fn eigen_is_sorted() {
        let (values, vectors) = hermitian_eigen(&diag(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(values, vec![-1.0, 2.0, 3.0]);
        assert!((vectors[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
