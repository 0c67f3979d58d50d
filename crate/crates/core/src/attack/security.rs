use rayon::prelude::*;
use serde::Serialize;

use crate::attack::{
    attack_value_factored, sample_product_measurement, seesaw_optimize_operator, GroupPartition, SeesawBudget,
};
use crate::error::{Error, Result};
use crate::linalg::{c, fidelity_with_pure, PureState};
use crate::random::{sample_complex_gaussian, sample_haar_state, SeededRng};
use crate::scheme::{HidingScheme, PartySplit, TransposeDecoder};

const BASELINE_SLACK: f64 = 1e-8;

/// Best restricted values found for one pair and one partition.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionAttack {
    pub partition: String,
    pub sampled_value: f64,
    pub samples: usize,
    pub seesaw_value: f64,
    pub seesaw_iterations: usize,
    pub seesaw_converged: bool,
    pub seesaw_adaptive: bool,
    /// Larger of the sampled and see-saw values.
    pub restricted_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub pair_index: usize,
    /// `‖E(φ0) − E(φ1)‖₁`.
    pub helstrom_baseline: f64,
    /// `‖D(E(φ0)) − D(E(φ1))‖₁` for the first `k` parties.
    pub decoded_distinguishability: f64,
    /// `2 − 2√(1−F0) − 2√(1−F1)`, clamped at zero.
    pub fidelity_implied_distinguishability: f64,
    pub attacks: Vec<PartitionAttack>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecurityReport {
    pub note: Option<String>,
    pub pairs: Vec<PairReport>,
    /// Largest restricted value over all pairs and partitions. A lower bound
    /// on the separable-measurement supremum.
    pub epsilon_hat: f64,
    /// Every restricted value is strictly below its pair's baseline.
    pub strictly_below_baseline: bool,
}

/// A Haar-random state and a Haar-random state orthogonal to it.
pub fn orthogonal_pair(dim: usize, rng: &mut SeededRng) -> Result<(PureState, PureState)> {
    if dim < 2 {
        return Err(Error::Parameter("orthogonal pairs need dimension at least 2".into()));
    }
    let a = sample_haar_state(dim, rng)?;
    loop {
        let g = sample_complex_gaussian(dim, rng);
        let proj = a.amplitudes() * a.amplitudes().dotc(&g);
        let b = g - proj;
        if b.norm() > 1e-8 {
            let b = &b / c(b.norm(), 0.0);
            return Ok((a, PureState::normalized(b)?));
        }
    }
}

/// Restricted versus unrestricted distinguishability of encoded orthogonal
/// pairs. Pair `p` is drawn from stream `p`; measurement samples and see-saw
/// runs use their own derived seeds.
pub fn security_report(
    scheme: &HidingScheme,
    n_pairs: usize,
    partitions: &[GroupPartition],
    samples_per_partition: usize,
    budget: SeesawBudget,
    rng: &mut SeededRng,
) -> Result<SecurityReport> {
    let p = scheme.params();
    if n_pairs == 0 {
        return Err(Error::Parameter("security report needs at least one pair".into()));
    }
    if let Some(bad) = partitions.iter().find(|q| q.n() != p.n || q.max_group_size() >= p.k) {
        return Err(Error::Parameter(format!("partition {} is not sub-threshold", bad.label())));
    }
    let pair_seed = rng.derive_seed();
    let sample_seed = rng.derive_seed();
    let seesaw_seed = rng.derive_seed();
    let decoder = TransposeDecoder::build(scheme, &PartySplit::leading(p.n, p.k)?)?;
    let note = (p.k == 1 || partitions.is_empty()).then(|| "no unauthorized measurements".to_string());

    let mut pairs = Vec::with_capacity(n_pairs);
    for pair_index in 0..n_pairs {
        let (phi0, phi1) = orthogonal_pair(p.s, &mut SeededRng::new(pair_seed, pair_index as u64))?;
        let enc0 = scheme.encode_pure(&phi0)?;
        let enc1 = scheme.encode_pure(&phi1)?;
        let diff = enc0.difference(&enc1)?;
        let helstrom_baseline = diff.trace_norm()?;

        let dec0 = decoder.decode_rank_one(&enc0)?.state;
        let dec1 = decoder.decode_rank_one(&enc1)?.state;
        let decoded_distinguishability = dec0.trace_distance(&dec1)?;
        let b0 = 2.0 * (1.0 - fidelity_with_pure(&phi0, &dec0)?).max(0.0).sqrt();
        let b1 = 2.0 * (1.0 - fidelity_with_pure(&phi1, &dec1)?).max(0.0).sqrt();

        let mut attacks = Vec::with_capacity(partitions.len());
        for (qi, part) in partitions.iter().enumerate() {
            let slot = (pair_index * partitions.len() + qi) as u64;
            let sampled_value = (0..samples_per_partition)
                .into_par_iter()
                .map(|t| {
                    let stream = slot * samples_per_partition as u64 + t as u64;
                    let m = sample_product_measurement(part, p.d, &mut SeededRng::new(sample_seed, stream))?;
                    attack_value_factored(&m, &diff)
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let seesaw = seesaw_optimize_operator(part, p.d, &diff, budget, &mut SeededRng::new(seesaw_seed, slot))?;
            let restricted_value = sampled_value.max(seesaw.value);
            if restricted_value > helstrom_baseline + BASELINE_SLACK {
                return Err(Error::Domain(format!(
                    "restricted value {restricted_value} exceeds baseline {helstrom_baseline}"
                )));
            }
            attacks.push(PartitionAttack {
                partition: part.label(),
                sampled_value,
                samples: samples_per_partition,
                seesaw_value: seesaw.value,
                seesaw_iterations: seesaw.iterations,
                seesaw_converged: seesaw.converged,
                seesaw_adaptive: seesaw.best_measurement.is_adaptive(),
                restricted_value,
            });
        }
        pairs.push(PairReport {
            pair_index,
            helstrom_baseline,
            decoded_distinguishability,
            fidelity_implied_distinguishability: (2.0 - b0 - b1).max(0.0),
            attacks,
        });
    }
    let epsilon_hat = pairs.iter().flat_map(|pr| pr.attacks.iter().map(|a| a.restricted_value)).fold(0.0, f64::max);
    let strictly_below_baseline =
        pairs.iter().all(|pr| pr.attacks.iter().all(|a| a.restricted_value < pr.helstrom_baseline));
    Ok(SecurityReport { note, pairs, epsilon_hat, strictly_below_baseline })
}
