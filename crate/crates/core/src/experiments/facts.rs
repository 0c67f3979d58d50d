use serde::Serialize;

use crate::attack::{check_overlap_tail, ErrorControlReport};
use crate::error::Result;
use crate::experiments::ExperimentConfig;
use crate::random::{check_gaussian_tail, check_haar_trace_tail, BoundOptions, SeededRng, TailCheckReport};

/// `(N, ε)` cases for the Gaussian average.
pub const GAUSSIAN_CASES: &[(usize, f64)] = &[(10, 0.5), (100, 0.3), (1000, 0.5)];

/// `(dim, rank, N, ε)` cases for the Haar trace average.
pub const HAAR_CASES: &[(usize, usize, usize, f64)] = &[(8, 4, 50, 0.5), (8, 4, 5, 0.5)];

#[derive(Debug, Clone, Serialize)]
pub struct HaarTraceCase {
    pub dim: usize,
    pub proj_rank: usize,
    pub report: TailCheckReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactChecks {
    pub gaussian: Vec<TailCheckReport>,
    pub haar_trace: Vec<HaarTraceCase>,
    /// Absent when the configured scheme has `s < 2`.
    pub error_control: Option<ErrorControlReport>,
    pub all_within_envelope: bool,
}

/// Runs the concentration checks with `config.fact_trials` trials and the
/// error-control check at the configured scheme size.
pub fn run_fact_checks(config: &ExperimentConfig, seed: u64) -> Result<FactChecks> {
    let mut rng = SeededRng::new(seed, 0);
    let opts = BoundOptions { c_const: config.c_const, ..Default::default() };
    let gaussian = GAUSSIAN_CASES
        .iter()
        .map(|&(n, eps)| check_gaussian_tail(n, eps, config.fact_trials, rng.derive_seed(), opts))
        .collect::<Result<Vec<_>>>()?;
    let haar_trace = HAAR_CASES
        .iter()
        .map(|&(dim, rank, n, eps)| {
            let report = check_haar_trace_tail(dim, rank, n, eps, config.fact_trials, rng.derive_seed(), opts)?;
            Ok(HaarTraceCase { dim, proj_rank: rank, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let error_control = if config.s >= 2 {
        let mut overlap_rng = SeededRng::new(rng.derive_seed(), 0);
        Some(check_overlap_tail(
            config.n,
            config.k,
            config.d,
            config.r,
            config.s,
            config.beta,
            config.overlap_trials,
            &mut overlap_rng,
        )?)
    } else {
        None
    };
    let all_within_envelope = gaussian.iter().all(TailCheckReport::within_envelope)
        && haar_trace.iter().all(|h| h.report.within_envelope())
        && error_control.as_ref().is_none_or(ErrorControlReport::within_envelope);
    Ok(FactChecks { gaussian, haar_trace, error_control, all_within_envelope })
}
