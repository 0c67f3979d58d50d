//! Seeded sampling of complex Gaussians, Haar unitaries and Haar states, and
//! Monte Carlo checks of the Gaussian and Haar concentration bounds.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, PureState, C64};

/// Default concentration constant `1 / (6 ln 2)`.
pub const DEFAULT_C: f64 = 1.0 / (6.0 * std::f64::consts::LN_2);

/// Stream ids at or above this value are reserved for auxiliary draws that
/// must not collide with per-trial streams.
pub const AUX_STREAM_BASE: u64 = 1 << 62;

/// ChaCha8 generator addressed by `(seed, stream_id)`.
///
/// Trial `t` of any sweep uses `stream_id = t`, so serial and parallel runs
/// draw identical samples.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh generator on another stream of the same seed.
    pub fn stream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    /// Derives an independent seed from the next output, for handing a whole
    /// family of streams to a sub-computation.
    pub fn derive_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Base used when evaluating `exp(·)` in the analytic bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExpBase {
    #[default]
    Two,
    Natural,
}

impl ExpBase {
    /// `base^{-x}`.
    pub fn decay(self, x: f64) -> f64 {
        match self {
            ExpBase::Two => (-x).exp2(),
            ExpBase::Natural => (-x).exp(),
        }
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    c(x * std::f64::consts::FRAC_1_SQRT_2, y * std::f64::consts::FRAC_1_SQRT_2)
}

/// `count` independent standard complex Gaussians (`E|g|² = 1`).
pub fn sample_complex_gaussian<R: Rng + ?Sized>(count: usize, rng: &mut R) -> CVector {
    CVector::from_fn(count, |_, _| complex_gaussian(rng))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps column j's entries contiguous in the stream
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Ginibre matrix with each column of `Q`
/// multiplied by the phase of the matching diagonal entry of `R`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::Parameter("unitary dimension must be at least 1".into()));
    }
    let qr = ginibre(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Haar-random pure state: a complex Gaussian vector divided by its norm.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim == 0 {
        return Err(Error::Parameter("state dimension must be at least 1".into()));
    }
    loop {
        let g = sample_complex_gaussian(dim, rng);
        if g.norm() > 0.0 {
            return PureState::normalized(g);
        }
    }
}

/// Empirical tail rates next to an analytic large-deviation bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheckReport {
    pub trials: usize,
    pub epsilon: f64,
    pub n_samples: usize,
    pub empirical_upper_rate: f64,
    pub empirical_lower_rate: f64,
    pub analytic_bound: f64,
}

impl TailCheckReport {
    pub fn max_rate(&self) -> f64 {
        self.empirical_upper_rate.max(self.empirical_lower_rate)
    }

    /// Resolution rule: when `bound · trials ≥ 10` every empirical rate must be
    /// at most `bound + 3·sqrt(bound / trials)`; below that resolution the
    /// rates must be exactly zero.
    pub fn within_envelope(&self) -> bool {
        let t = self.trials as f64;
        if self.analytic_bound * t >= 10.0 {
            let limit = self.analytic_bound + 3.0 * (self.analytic_bound / t).sqrt();
            self.max_rate() <= limit
        } else {
            self.max_rate() == 0.0
        }
    }

    /// Binomial-standard-error variant, applied only when `bound ≥ 10/trials`.
    pub fn within_binomial_envelope(&self) -> bool {
        let t = self.trials as f64;
        if self.analytic_bound < 10.0 / t {
            return true;
        }
        let b = self.analytic_bound.min(1.0);
        self.max_rate() <= self.analytic_bound + 3.0 * (b * (1.0 - b) / t).sqrt()
    }
}

/// Options shared by the concentration checks.
#[derive(Debug, Clone, Copy)]
pub struct BoundOptions {
    pub c_const: f64,
    pub base: ExpBase,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { c_const: DEFAULT_C, base: ExpBase::Two }
    }
}

/// Tail rates of `(1/N) Σ |g_i|²` about its mean 1, against `exp(−C N ε²)`.
pub fn check_gaussian_tail(
    n_samples: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
    opts: BoundOptions,
) -> Result<TailCheckReport> {
    if trials == 0 || n_samples == 0 {
        return Err(Error::Parameter("trials and sample count must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Parameter(format!("epsilon {epsilon} outside (0, 1]")));
    }
    let (upper, lower) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRng::new(seed, t as u64);
            let mean = (0..n_samples).map(|_| complex_gaussian(&mut rng).norm_sqr()).sum::<f64>() / n_samples as f64;
            ((mean >= 1.0 + epsilon) as usize, (mean <= 1.0 - epsilon) as usize)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(TailCheckReport {
        trials,
        epsilon,
        n_samples,
        empirical_upper_rate: upper as f64 / trials as f64,
        empirical_lower_rate: lower as f64 / trials as f64,
        analytic_bound: opts.base.decay(opts.c_const * n_samples as f64 * epsilon * epsilon),
    })
}

/// Tail rates of `(1/N) Σ Tr(U_i φ U_i† P)` about `p/d` for Haar `U_i`, a fixed
/// sampled state `φ` and the computational projector `P` onto the first `p`
/// basis vectors, against `exp(−C N p ε²)`.
pub fn check_haar_trace_tail(
    dim: usize,
    proj_rank: usize,
    n_unitaries: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
    opts: BoundOptions,
) -> Result<TailCheckReport> {
    if proj_rank == 0 || proj_rank > dim {
        return Err(Error::Parameter(format!("projector rank {proj_rank} outside [1, {dim}]")));
    }
    if trials == 0 || n_unitaries == 0 {
        return Err(Error::Parameter("trials and unitary count must be at least 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon {epsilon} must be positive")));
    }
    let phi = sample_haar_state(dim, &mut SeededRng::new(seed, AUX_STREAM_BASE))?;
    let mean = proj_rank as f64 / dim as f64;
    let counts: Result<Vec<(usize, usize)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeededRng::new(seed, t as u64);
            let mut acc = 0.0;
            for _ in 0..n_unitaries {
                let u = sample_haar_unitary(dim, &mut rng)?;
                let rotated = &u * phi.amplitudes();
                acc += rotated.rows(0, proj_rank).norm_squared();
            }
            let avg = acc / n_unitaries as f64;
            // Tr(UφU†P) = 1 identically for a full-rank projector
            let dev = if proj_rank == dim { 0.0 } else { avg - mean };
            Ok(((dev >= epsilon * mean) as usize, (dev <= -epsilon * mean) as usize))
        })
        .collect();
    let (upper, lower) = counts?.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(TailCheckReport {
        trials,
        epsilon,
        n_samples: n_unitaries,
        empirical_upper_rate: upper as f64 / trials as f64,
        empirical_lower_rate: lower as f64 / trials as f64,
        analytic_bound: opts.base.decay(opts.c_const * n_unitaries as f64 * proj_rank as f64 * epsilon * epsilon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};

    #[test]
    fn default_c_matches_definition() {
        assert!((DEFAULT_C - 1.0 / (6.0 * std::f64::consts::LN_2)).abs() < 1e-16);
    }

    #[test]
    fn same_stream_same_samples() {
        let a = sample_complex_gaussian(16, &mut SeededRng::new(9, 3));
        let b = sample_complex_gaussian(16, &mut SeededRng::new(9, 3));
        let other = sample_complex_gaussian(16, &mut SeededRng::new(9, 4));
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn gaussian_moments() {
        let g = sample_complex_gaussian(100_000, &mut SeededRng::new(1, 0));
        let n = g.len() as f64;
        let second = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let mean: C64 = g.iter().sum::<C64>() / n;
        assert!((second - 1.0).abs() < 0.02, "{second}");
        assert!(mean.re.abs() < 0.02 && mean.im.abs() < 0.02, "{mean}");
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = SeededRng::new(2, 0);
        for dim in [1usize, 2, 5, 16] {
            let u = sample_haar_unitary(dim, &mut rng).unwrap();
            assert!(max_abs(&(u.adjoint() * &u - identity(dim))) <= 1e-10);
        }
        let u = sample_haar_unitary(1, &mut rng).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_state_norm() {
        let mut rng = SeededRng::new(3, 0);
        for dim in [1usize, 3, 64] {
            let s = sample_haar_state(dim, &mut rng).unwrap();
            assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_report_shapes() {
        let r = check_gaussian_tail(1, 0.5, 200, 4, BoundOptions::default()).unwrap();
        assert!((0.0..=1.0).contains(&r.empirical_upper_rate));
        assert!((0.0..=1.0).contains(&r.empirical_lower_rate));
        let r = check_gaussian_tail(10, 1.0, 10, 4, BoundOptions::default()).unwrap();
        assert!((r.analytic_bound - (-10.0 * DEFAULT_C).exp2()).abs() < 1e-15);
        assert!(check_haar_trace_tail(4, 5, 1, 0.5, 1, 0, BoundOptions::default()).is_err());
    }

    #[test]
    fn natural_base_switch() {
        let natural = BoundOptions { c_const: 1.0 / 6.0, base: ExpBase::Natural };
        let two = BoundOptions::default();
        let a = check_gaussian_tail(20, 0.5, 10, 1, natural).unwrap().analytic_bound;
        let b = check_gaussian_tail(20, 0.5, 10, 1, two).unwrap().analytic_bound;
        // exp2(-N eps^2 / (6 ln 2)) = exp(-N eps^2 / 6)
        assert!((a - b).abs() < 1e-14);
    }
}
