use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::random::{ginibre, ExpBase, SeededRng, TailCheckReport};
use crate::scheme::split::SplitLayout;
use crate::scheme::PartySplit;

/// Monte Carlo rates of the two events that control the decoder error.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorControlReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub s: usize,
    pub beta: f64,
    /// `k = n`: the same-unitary overlap term vanishes identically.
    pub trivial: bool,
    /// Rate of `Δ²_000 > β` in `empirical_upper_rate`, against
    /// `4s · 2^{−β d^k / (128 ln 2)}`.
    pub delta2: TailCheckReport,
    /// Rate of `1/⟨0|U†P_0U|0⟩ ≥ 2 d^{n−k}` in `empirical_lower_rate`
    /// (the weight falling to half its mean), against `2^{−d^k / (24 ln 2)}`.
    pub denominator: TailCheckReport,
}

impl ErrorControlReport {
    pub fn within_envelope(&self) -> bool {
        self.delta2.within_envelope() && self.denominator.within_envelope()
    }
}

/// Samples the first `s` columns of `U_0` as Gram–Schmidt of independent
/// Gaussian vectors (distributed as the first columns of a Haar unitary) and
/// evaluates `Δ²` and the denominator at `(i, j, l) = (0, 0, 0)` for the first
/// `k` parties. Only `U_0` enters, so `r` is recorded but not sampled.
#[allow(clippy::too_many_arguments)]
pub fn check_overlap_tail(
    n: usize,
    k: usize,
    d: usize,
    r: usize,
    s: usize,
    beta: f64,
    trials: usize,
    rng: &mut SeededRng,
) -> Result<ErrorControlReport> {
    if n == 0 || k == 0 || k > n || d < 2 {
        return Err(Error::Parameter(format!("invalid (n, k, d) = ({n}, {k}, {d})")));
    }
    if s < 2 || r == 0 || trials == 0 {
        return Err(Error::Parameter("need s >= 2, r >= 1 and at least one trial".into()));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Parameter(format!("beta = {beta} outside (0, 1]")));
    }
    let dim = d
        .checked_pow(n as u32)
        .filter(|&v| v <= crate::linalg::DEFAULT_DIM_CAP)
        .ok_or_else(|| Error::Dimension("d^n exceeds the dimension cap".into()))?;
    if s > dim {
        return Err(Error::Parameter(format!("s = {s} exceeds d^n = {dim}")));
    }
    let layout = SplitLayout::new(&PartySplit::leading(n, k)?, d);
    let dk = d.pow(k as u32) as f64;
    let dnk = d.pow((n - k) as u32) as f64;
    let seed = rng.derive_seed();

    let (over, low) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(usize, usize)> {
            let mut local = SeededRng::new(seed, t as u64);
            let q = ginibre(dim, s, &mut local).qr().q();
            let block = |j: usize| {
                let rows: Vec<_> = (0..layout.d_x).map(|x| q[(layout.index(0, x), j)]).collect();
                nalgebra::DVector::from_vec(rows)
            };
            let a0 = block(0);
            let denom = a0.norm_squared();
            let delta2: f64 = (1..s).map(|j| block(j).dotc(&a0).norm_sqr()).sum::<f64>() / (denom * denom);
            Ok(((delta2 > beta) as usize, (1.0 / denom >= 2.0 * dnk) as usize))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let ln2 = std::f64::consts::LN_2;
    let delta2 = TailCheckReport {
        trials,
        epsilon: beta,
        n_samples: dk as usize,
        empirical_upper_rate: over as f64 / trials as f64,
        empirical_lower_rate: 0.0,
        analytic_bound: 4.0 * s as f64 * ExpBase::Two.decay(beta * dk / (128.0 * ln2)),
    };
    let denominator = TailCheckReport {
        trials,
        epsilon: 0.5,
        n_samples: dk as usize,
        empirical_upper_rate: 0.0,
        empirical_lower_rate: low as f64 / trials as f64,
        analytic_bound: ExpBase::Two.decay(dk / (24.0 * ln2)),
    };
    Ok(ErrorControlReport { n, k, d, r, s, beta, trivial: k == n, delta2, denominator })
}
