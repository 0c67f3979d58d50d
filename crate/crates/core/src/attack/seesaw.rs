use rayon::prelude::*;
use serde::Serialize;

use crate::attack::measurement::apply_group;
use crate::attack::{AdaptiveStage, GroupPartition, ProductMeasurement};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigen, hermitize, CMatrix, PureState, RankOneSum};
use crate::random::{sample_haar_unitary, SeededRng};
use crate::scheme::HidingScheme;

/// Stop when one sweep over all groups improves the value by less than this.
pub const IMPROVEMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeesawBudget {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for SeesawBudget {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 100 }
    }
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    /// `Σ_m |Tr(Z_m (ρ0 − ρ1))|` of the best measurement found.
    pub value: f64,
    pub best_measurement: ProductMeasurement,
    /// Sweeps over the groups performed by the winning restart.
    pub iterations: usize,
    /// `‖ρ0 − ρ1‖₁`.
    pub helstrom_baseline: f64,
    /// Value after each sweep of the winning restart, then after the
    /// adaptive stage; non-decreasing.
    pub history: Vec<f64>,
    pub converged: bool,
}

/// Alternating ascent over product measurements for `E(φ0)` versus `E(φ1)`.
pub fn seesaw_optimize(
    scheme: &HidingScheme,
    partition: &GroupPartition,
    phi0: &PureState,
    phi1: &PureState,
    budget: SeesawBudget,
    rng: &mut SeededRng,
) -> Result<AttackResult> {
    if partition.n() != scheme.params().n {
        return Err(Error::Parameter("partition and scheme disagree on n".into()));
    }
    let diff = scheme.encode_pure(phi0)?.difference(&scheme.encode_pure(phi1)?)?;
    seesaw_optimize_operator(partition, scheme.params().d, &diff, budget, rng)
}

/// Ascent on `Σ_m |Tr(Z_m Δ)|` for any Hermitian `Δ` in factored form.
///
/// Each restart starts from Haar-random local bases. One sweep updates the
/// groups in turn: with the signs of the current outcome weights frozen, the
/// objective is a sum of quadratic forms in the group's basis vectors, and
/// the polar factor of the shifted gradient does not decrease it. After the
/// sweeps, each group in turn is allowed to choose its basis after seeing the
/// other groups' outcomes, which makes its step exact (an eigenbasis of the
/// conditional operator). The best restart wins, ties going to the lowest
/// restart index.
pub fn seesaw_optimize_operator(
    partition: &GroupPartition,
    d: usize,
    diff: &RankOneSum,
    budget: SeesawBudget,
    rng: &mut SeededRng,
) -> Result<AttackResult> {
    if budget.restarts == 0 {
        return Err(Error::Parameter("see-saw needs at least one restart".into()));
    }
    let layouts = partition.layouts(d)?;
    let dim = layouts[0].d_w * layouts[0].d_x;
    if diff.dim() != dim {
        return Err(Error::dim_mismatch("see-saw operator", dim, diff.dim()));
    }
    let helstrom_baseline = diff.trace_norm()?;
    let seed = rng.derive_seed();
    let runs = (0..budget.restarts)
        .into_par_iter()
        .map(|t| run_restart(partition, d, diff, budget.max_iters, &mut SeededRng::new(seed, t as u64)))
        .collect::<Result<Vec<_>>>()?;
    let best = runs.into_iter().reduce(|a, b| if b.value > a.value { b } else { a }).expect("at least one restart");
    Ok(AttackResult { helstrom_baseline, ..best })
}

fn run_restart(
    partition: &GroupPartition,
    d: usize,
    diff: &RankOneSum,
    max_iters: usize,
    rng: &mut SeededRng,
) -> Result<AttackResult> {
    let bases = partition
        .groups()
        .iter()
        .map(|g| sample_haar_unitary(d.pow(g.len() as u32), rng))
        .collect::<Result<Vec<_>>>()?;
    let mut meas = ProductMeasurement::new(partition.clone(), d, bases)?;
    let groups = partition.groups().len();
    let mut blocks = conditional_blocks(&meas, 0, diff);
    let mut value = block_value(&blocks, &meas.bases()[0]);
    let mut history = vec![value];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let start = value;
        for q in 0..groups {
            if q > 0 || iterations > 1 {
                blocks = conditional_blocks(&meas, q, diff);
            }
            let candidate = polar_step(&blocks, &meas.bases()[q])?;
            // the blocks already carry every other group's basis
            let v = block_value(&blocks, &candidate);
            if v >= value {
                let mut bases = meas.bases().to_vec();
                bases[q] = candidate;
                meas = ProductMeasurement::new(partition.clone(), d, bases)?;
                value = v;
            }
        }
        history.push(value);
        if value - start < IMPROVEMENT_TOL {
            converged = true;
            break;
        }
    }

    // adaptive last stage
    let mut best_adaptive: Option<(f64, AdaptiveStage)> = None;
    for q in 0..partition.groups().len() {
        let blocks = conditional_blocks(&meas, q, diff);
        let mut total = 0.0;
        let mut bases = Vec::with_capacity(blocks.len());
        for block in &blocks {
            let (values, vectors) = hermitian_eigen(block)?;
            total += values.iter().map(|v| v.abs()).sum::<f64>();
            bases.push(vectors);
        }
        if best_adaptive.as_ref().is_none_or(|(v, _)| total > *v) {
            best_adaptive = Some((total, AdaptiveStage { group: q, bases }));
        }
    }
    if let Some((v, stage)) = best_adaptive {
        if v > value {
            meas = meas.with_adaptive(stage)?;
            value = v;
        }
    }
    history.push(value);
    Ok(AttackResult { value, best_measurement: meas, iterations, helstrom_baseline: 0.0, history, converged })
}

/// `Σ_o Σ_b |⟨b|Δ_o|b⟩|` over the columns `b` of `basis`.
fn block_value(blocks: &[CMatrix], basis: &CMatrix) -> f64 {
    blocks
        .iter()
        .map(|block| {
            let p = block * basis;
            (0..basis.ncols()).map(|b| basis.column(b).dotc(&p.column(b)).re.abs()).sum::<f64>()
        })
        .sum()
}

/// `Δ_o` on group `q`'s space for every joint outcome `o` of the other
/// groups, with their current bases applied.
fn conditional_blocks(meas: &ProductMeasurement, q: usize, diff: &RankOneSum) -> Vec<CMatrix> {
    let layouts = meas.layouts();
    let mut v = diff.vectors().clone();
    for (p, lay) in layouts.iter().enumerate() {
        if p != q {
            apply_group(&mut v, lay, |_| meas.bases()[p].adjoint());
        }
    }
    let lay = &layouts[q];
    let coeffs = diff.coeffs();
    (0..lay.d_w)
        .map(|o| {
            let w = CMatrix::from_fn(lay.d_x, v.ncols(), |x, k| v[(lay.index(o, x), k)]);
            let wc = CMatrix::from_fn(lay.d_x, v.ncols(), |x, k| w[(x, k)] * coeffs[k]);
            hermitize(&(wc * w.adjoint()))
        })
        .collect()
}

/// One minorize-maximize step for a group basis `B` given the blocks `Δ_o`.
fn polar_step(blocks: &[CMatrix], basis: &CMatrix) -> Result<CMatrix> {
    let dq = basis.nrows();
    let mut g = CMatrix::zeros(dq, dq);
    for b in 0..dq {
        let col = basis.column(b).into_owned();
        let mut h = CMatrix::zeros(dq, dq);
        for block in blocks {
            let e = (col.adjoint() * block * &col)[(0, 0)].re;
            if e >= 0.0 {
                h += block;
            } else {
                h -= block;
            }
        }
        let shift = psd_shift(&h)?;
        let gb = &h * &col + &col * c(shift, 0.0);
        g.set_column(b, &gb);
    }
    let svd = g.svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::Domain("SVD failed in see-saw step".into())),
    }
}

/// Some `c ≥ max(0, −λ_min(h))`: exact for small blocks, a norm bound
/// otherwise.
fn psd_shift(h: &CMatrix) -> Result<f64> {
    if h.nrows() <= 64 {
        let (values, _) = hermitian_eigen(h)?;
        return Ok((-values[0]).max(0.0));
    }
    let frob = h.norm();
    let rows = h.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    Ok(frob.min(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::attack_value_factored;
    use crate::random::sample_haar_state;

    fn objective(meas: &ProductMeasurement, diff: &RankOneSum) -> f64 {
        attack_value_factored(meas, diff).unwrap()
    }
    use crate::scheme::SchemeParams;

    fn scheme(n: usize, k: usize, d: usize, r: usize, s: usize, seed: u64) -> HidingScheme {
        let params = SchemeParams::new(n, k, d, r, s, 0.5, 0.5).unwrap();
        HidingScheme::build(params, &mut SeededRng::new(seed, 0)).unwrap()
    }

    #[test]
    fn identical_encodings_give_zero() {
        let sc = scheme(2, 2, 3, 1, 2, 1);
        let phi = sample_haar_state(2, &mut SeededRng::new(2, 0)).unwrap();
        let part = GroupPartition::new(2, vec![vec![0], vec![1]]).unwrap();
        let res = seesaw_optimize(
            &sc,
            &part,
            &phi,
            &phi,
            SeesawBudget { restarts: 2, max_iters: 5 },
            &mut SeededRng::new(3, 0),
        )
        .unwrap();
        assert!(res.value < 1e-12);
    }

    #[test]
    fn joint_group_reaches_helstrom_value() {
        let sc = scheme(2, 2, 2, 3, 2, 4);
        let part = GroupPartition::joint(2).unwrap();
        let mut rng = SeededRng::new(5, 0);
        for _ in 0..5 {
            let a = sample_haar_state(2, &mut rng).unwrap();
            let b = sample_haar_state(2, &mut rng).unwrap();
            let res =
                seesaw_optimize(&sc, &part, &a, &b, SeesawBudget { restarts: 2, max_iters: 20 }, &mut rng).unwrap();
            assert!((res.value - res.helstrom_baseline).abs() < 1e-6);
        }
    }

    #[test]
    fn history_is_monotone_and_bounded() {
        let sc = scheme(2, 2, 4, 4, 2, 6);
        let part = GroupPartition::new(2, vec![vec![0], vec![1]]).unwrap();
        let mut rng = SeededRng::new(7, 0);
        let a = sample_haar_state(2, &mut rng).unwrap();
        let b = sample_haar_state(2, &mut rng).unwrap();
        let res = seesaw_optimize(&sc, &part, &a, &b, SeesawBudget { restarts: 3, max_iters: 30 }, &mut rng).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*res.history.last().unwrap(), res.value);
        let diff = sc.encode_pure(&a).unwrap().difference(&sc.encode_pure(&b).unwrap()).unwrap();
        assert!((objective(&res.best_measurement, &diff) - res.value).abs() < 1e-10);
        assert!(res.value <= res.helstrom_baseline + 1e-8);
        assert!(res.best_measurement.completeness_residual() <= 1e-8);
        assert!(res.best_measurement.dense_completeness_residual().unwrap() <= 1e-8);
    }

    #[test]
    fn polar_step_never_decreases() {
        let sc = scheme(3, 3, 2, 2, 2, 8);
        let part = GroupPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let mut rng = SeededRng::new(9, 0);
        let a = sample_haar_state(2, &mut rng).unwrap();
        let b = sample_haar_state(2, &mut rng).unwrap();
        let diff = sc.encode_pure(&a).unwrap().difference(&sc.encode_pure(&b).unwrap()).unwrap();
        let bases = vec![sample_haar_unitary(4, &mut rng).unwrap(), sample_haar_unitary(2, &mut rng).unwrap()];
        let mut meas = ProductMeasurement::new(part.clone(), 2, bases).unwrap();
        let mut value = objective(&meas, &diff);
        for step in 0..20 {
            let q = step % 2;
            let blocks = conditional_blocks(&meas, q, &diff);
            let mut bases = meas.bases().to_vec();
            bases[q] = polar_step(&blocks, &bases[q]).unwrap();
            meas = ProductMeasurement::new(part.clone(), 2, bases).unwrap();
            let next = objective(&meas, &diff);
            assert!(next >= value - 1e-12, "step {step}: {next} < {value}");
            value = next;
        }
    }
}
