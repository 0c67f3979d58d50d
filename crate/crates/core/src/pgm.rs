//! Pretty good measurement for sub-normalized ensembles.
//!
//! An ensemble is a list of vectors `|ξ_i⟩` whose squared norms are the
//! priors. The measurement is `M_i = N^{−1/2}|ξ_i⟩⟨ξ_i|N^{−1/2}` with
//! `N = Σ_i |ξ_i⟩⟨ξ_i|`, and its success probabilities can be read off the
//! square root of the Gram matrix `T_ij = ⟨ξ_i|ξ_j⟩`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitize, max_abs, pinv_sqrt, psd_sqrt, support_projector, CMatrix, CVector, PureState, DEFAULT_REL_TOL,
};

const NORM_FLOOR: f64 = 1e-14;
const PRIOR_SLACK: f64 = 1e-9;
const WAYS_TOL: f64 = 1e-9;
const BOUND_SLACK: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SubnormalizedEnsemble {
    dim: usize,
    vectors: Vec<CVector>,
}

impl SubnormalizedEnsemble {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        let dim = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Parameter("empty ensemble".into()))?;
        let mut total = 0.0;
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::dim_mismatch("ensemble vector", dim, v.len()));
            }
            let w = v.norm_squared();
            if !(w.sqrt() > NORM_FLOOR) {
                return Err(Error::InvalidState(format!("ensemble vector {i} is zero")));
            }
            total += w;
        }
        if total > 1.0 + PRIOR_SLACK {
            return Err(Error::InvalidState(format!("ensemble weights sum to {total} > 1")));
        }
        Ok(Self { dim, vectors })
    }

    /// Scales each state by the square root of its probability.
    pub fn from_weighted(states: &[(PureState, f64)]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(states.len());
        for (state, p) in states {
            if !(*p >= 0.0) {
                return Err(Error::Parameter(format!("probability {p} is negative")));
            }
            vectors.push(state.amplitudes() * c(p.sqrt(), 0.0));
        }
        Self::new(vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn total_weight(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm_squared()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Pgm {
    ensemble: SubnormalizedEnsemble,
    n_operator: CMatrix,
    n_inv_sqrt: CMatrix,
    povm: Vec<CMatrix>,
    gram: CMatrix,
    gram_sqrt: CMatrix,
}

pub fn build_pgm(ensemble: &SubnormalizedEnsemble) -> Result<Pgm> {
    let dim = ensemble.dim;
    let mut n_operator = CMatrix::zeros(dim, dim);
    for v in &ensemble.vectors {
        n_operator += v * v.adjoint();
    }
    let n_operator = hermitize(&n_operator);
    if !(max_abs(&n_operator) > NORM_FLOOR * NORM_FLOOR) {
        return Err(Error::Degenerate("ensemble operator vanishes".into()));
    }
    let n_inv_sqrt = pinv_sqrt(&n_operator, DEFAULT_REL_TOL)?;
    let povm = ensemble
        .vectors
        .iter()
        .map(|v| {
            let w = &n_inv_sqrt * v;
            hermitize(&(&w * w.adjoint()))
        })
        .collect();
    let m = ensemble.len();
    let gram = hermitize(&CMatrix::from_fn(m, m, |i, j| ensemble.vectors[i].dotc(&ensemble.vectors[j])));
    let gram_sqrt = psd_sqrt(&gram, DEFAULT_REL_TOL)?;
    let pgm = Pgm { ensemble: ensemble.clone(), n_operator, n_inv_sqrt, povm, gram, gram_sqrt };
    let residual = pgm.completeness_residual()?;
    if residual > 1e-8 {
        return Err(Error::Domain(format!("PGM elements do not sum to the support projector ({residual:.3e})")));
    }
    let sq = max_abs(&(&pgm.gram_sqrt * &pgm.gram_sqrt - &pgm.gram));
    if sq > 1e-8 {
        return Err(Error::Domain(format!("Gram square root check failed ({sq:.3e})")));
    }
    Ok(pgm)
}

/// Both sides of `(√T)_ii / √T_ii ≥ 1 − ½ Σ_{j≠i} |T_ij|² / T_ii²`.
#[derive(Debug, Clone, Serialize)]
pub struct SqrtInequalityReport {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Pgm {
    pub fn ensemble(&self) -> &SubnormalizedEnsemble {
        &self.ensemble
    }

    pub fn n_operator(&self) -> &CMatrix {
        &self.n_operator
    }

    pub fn n_inv_sqrt(&self) -> &CMatrix {
        &self.n_inv_sqrt
    }

    pub fn povm_elements(&self) -> &[CMatrix] {
        &self.povm
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn gram_sqrt(&self) -> &CMatrix {
        &self.gram_sqrt
    }

    /// `max |Σ_i M_i − Π_N|`.
    pub fn completeness_residual(&self) -> Result<f64> {
        let mut sum = CMatrix::zeros(self.ensemble.dim, self.ensemble.dim);
        for m in &self.povm {
            sum += m;
        }
        Ok(max_abs(&(sum - support_projector(&self.n_operator, DEFAULT_REL_TOL)?)))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.ensemble.len() {
            return Err(Error::Parameter(format!("index {i} outside ensemble of {}", self.ensemble.len())));
        }
        Ok(())
    }

    /// `(⟨ξ_i|M_i|ξ_i⟩ / ⟨ξ_i|ξ_i⟩, (√T)_ii² / T_ii)`.
    pub fn success_probability_both(&self, i: usize) -> Result<(f64, f64)> {
        self.check_index(i)?;
        let v = &self.ensemble.vectors[i];
        let t_ii = v.norm_squared();
        let via_povm = (v.adjoint() * &self.povm[i] * v)[(0, 0)].re / t_ii;
        let via_gram = self.gram_sqrt[(i, i)].re.powi(2) / t_ii;
        Ok((via_povm, via_gram))
    }

    /// Probability of identifying `i` given that `ξ_i` was sent. Errors if
    /// the POVM and Gram-matrix evaluations differ by more than 1e-9.
    pub fn success_probability(&self, i: usize) -> Result<f64> {
        let (a, b) = self.success_probability_both(i)?;
        if (a - b).abs() > WAYS_TOL {
            return Err(Error::Domain(format!("success probability evaluations disagree: {a} vs {b}")));
        }
        Ok(a.clamp(0.0, 1.0))
    }

    /// `Σ_{j≠i} |T_ij|² / T_ii²`. Errors if the actual error probability
    /// exceeds it by more than 1e-10.
    pub fn error_upper_bound(&self, i: usize) -> Result<f64> {
        let bound = self.off_diagonal_ratio(i)?;
        let err = 1.0 - self.success_probability(i)?;
        if err > bound + BOUND_SLACK {
            return Err(Error::Domain(format!("error probability {err} exceeds bound {bound}")));
        }
        Ok(bound)
    }

    fn off_diagonal_ratio(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        let t_ii = self.gram[(i, i)].re;
        Ok((0..self.ensemble.len()).filter(|&j| j != i).map(|j| self.gram[(i, j)].norm_sqr()).sum::<f64>()
            / (t_ii * t_ii))
    }

    pub fn matrix_sqrt_inequality_check(&self, i: usize) -> Result<SqrtInequalityReport> {
        let ratio = self.off_diagonal_ratio(i)?;
        let lhs = self.gram_sqrt[(i, i)].re / self.gram[(i, i)].re.sqrt();
        let rhs = 1.0 - 0.5 * ratio;
        let report = SqrtInequalityReport { index: i, lhs, rhs, margin: lhs - rhs };
        if report.margin < -BOUND_SLACK {
            return Err(Error::Domain(format!("square-root inequality fails at {i}: {lhs} < {rhs}")));
        }
        Ok(report)
    }
}
