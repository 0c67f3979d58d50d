use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::fidelity_with_pure;
use crate::random::{sample_haar_state, SeededRng};
use crate::scheme::{HidingScheme, TransposeDecoder};

const BOUND_SLACK: f64 = 1e-8;

/// One row of a decode sweep.
#[derive(Debug, Clone, Serialize)]
pub struct StateRecord {
    pub state_index: usize,
    pub fidelity: f64,
    /// `‖D(E(φ)) − φ‖₁`.
    pub trace_distance: f64,
    /// `2√(1 − F)`.
    pub fidelity_bound: f64,
    pub leakage: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelitySweep {
    pub split: String,
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
    pub max_fidelity: f64,
    pub max_trace_distance: f64,
    pub records: Vec<StateRecord>,
}

/// Decodes `E(φ)` for `n_states` Haar-random code states. State `t` is drawn
/// from stream `t` of `rng`'s seed, so results do not depend on scheduling.
///
/// Errors if any trace distance exceeds `2√(1 − F) + 1e-8`.
pub fn decode_fidelity_sweep(
    scheme: &HidingScheme,
    decoder: &TransposeDecoder,
    n_states: usize,
    rng: &SeededRng,
) -> Result<FidelitySweep> {
    if n_states == 0 {
        return Err(Error::Parameter("sweep needs at least one state".into()));
    }
    let records = (0..n_states)
        .into_par_iter()
        .map(|t| {
            let mut local = rng.stream(t as u64);
            let phi = sample_haar_state(scheme.code_dim(), &mut local)?;
            let out = decoder.decode_rank_one(&scheme.encode_pure(&phi)?)?;
            let fidelity = fidelity_with_pure(&phi, &out.state)?;
            let trace_distance = out.state.trace_distance(&phi.to_density())?;
            Ok(StateRecord {
                state_index: t,
                fidelity,
                trace_distance,
                fidelity_bound: 2.0 * (1.0 - fidelity).max(0.0).sqrt(),
                leakage: out.leakage,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = records.iter().find(|r| r.trace_distance > r.fidelity_bound + BOUND_SLACK) {
        return Err(Error::Domain(format!(
            "state {}: trace distance {} exceeds 2√(1−F) = {}",
            bad.state_index, bad.trace_distance, bad.fidelity_bound
        )));
    }
    let fids = records.iter().map(|r| r.fidelity);
    Ok(FidelitySweep {
        split: decoder.split().label(),
        min_fidelity: fids.clone().fold(f64::INFINITY, f64::min),
        mean_fidelity: fids.clone().sum::<f64>() / n_states as f64,
        max_fidelity: fids.fold(f64::NEG_INFINITY, f64::max),
        max_trace_distance: records.iter().map(|r| r.trace_distance).fold(0.0, f64::max),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{PartySplit, SchemeParams};

    fn sweep(n: usize, k: usize, d: usize, r: usize, s: usize, seed: u64, states: usize) -> FidelitySweep {
        let params = SchemeParams::new(n, k, d, r, s, 0.5, 0.5).unwrap();
        let sc = HidingScheme::build(params, &mut SeededRng::new(seed, 0)).unwrap();
        let dec = TransposeDecoder::build(&sc, &PartySplit::leading(n, k).unwrap()).unwrap();
        decode_fidelity_sweep(&sc, &dec, states, &SeededRng::new(seed, 1)).unwrap()
    }

    #[test]
    fn exact_recovery_sweep() {
        let out = sweep(2, 2, 3, 1, 3, 4, 16);
        assert!(out.min_fidelity > 1.0 - 1e-9);
        assert!(out.max_trace_distance < 1e-9);
        assert_eq!(out.records.len(), 16);
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = sweep(2, 1, 3, 2, 2, 7, 8);
        let b = sweep(2, 1, 3, 2, 2, 7, 8);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.fidelity.to_bits(), y.fidelity.to_bits());
        }
        assert!(a.min_fidelity <= a.mean_fidelity && a.mean_fidelity <= a.max_fidelity);
    }
}
