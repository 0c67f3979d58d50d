use std::time::Instant;

use serde::Serialize;

use crate::attack::{
    attack_value_factored, enumerate_partitions, sample_product_measurement, seesaw_optimize, GroupPartition,
    SeesawBudget,
};
use crate::error::{Error, Result};
use crate::experiments::facts::run_fact_checks;
use crate::experiments::ExperimentConfig;
use crate::linalg::{c, fidelity_with_pure, is_psd, max_abs, trace, CMatrix, CVector, DensityOperator};
use crate::pgm::{build_pgm, SubnormalizedEnsemble};
use crate::random::{sample_complex_gaussian, sample_haar_state, SeededRng};
use crate::scheme::{
    all_delta_diagnostics, build_normalization, build_normalization_from_xi, decode_fidelity_sweep, derive_parameters,
    local_measurement, net_cardinality_bound, xi_vectors, HidingScheme, PartySplit, SchemeParams, TransposeDecoder,
};

/// Invariant suites in execution order.
pub const SUITES: &[&str] = &[
    "unitarity",
    "encoder",
    "measurement",
    "decoder",
    "recovery",
    "decode-bound",
    "pgm",
    "pgm-transpose",
    "overlap",
    "product-measurement",
    "seesaw",
    "concentration",
    "parameters",
    "determinism",
];

/// Deliberate corruption for checking that failures are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Scales the first unitary of every test scheme by 1.01.
    BrokenUnitary,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Resolves a comma-separated selection; `all` selects every suite.
pub fn select_suites(spec: &str) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            return Ok(SUITES.to_vec());
        }
        let found = SUITES
            .iter()
            .find(|s| **s == name)
            .ok_or_else(|| Error::Config(format!("unknown suite {name:?}; known: {}", SUITES.join(", "))))?;
        if !out.contains(found) {
            out.push(*found);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no suites selected".into()));
    }
    Ok(out)
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    fault: Option<Fault>,
}

impl Ctx<'_> {
    fn rng(&self, salt: u64) -> SeededRng {
        SeededRng::new(self.config.seed, salt)
    }

    fn scheme(&self, n: usize, k: usize, d: usize, r: usize, s: usize, salt: u64) -> Result<HidingScheme> {
        let params = SchemeParams::new(n, k, d, r, s, 0.5, 0.5)?;
        let sc = HidingScheme::build(params.clone(), &mut self.rng(salt))?;
        match self.fault {
            Some(Fault::BrokenUnitary) => {
                let mut us = sc.unitaries().to_vec();
                us[0] *= c(1.01, 0.0);
                HidingScheme::from_unitaries_unchecked(params, us)
            }
            None => Ok(sc),
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}

/// Runs the selected suites in order. Every suite runs even after a failure.
pub fn run_suites(names: &[&str], config: &ExperimentConfig, fault: Option<Fault>) -> Vec<SuiteOutcome> {
    let ctx = Ctx { config, fault };
    names
        .iter()
        .map(|&name| {
            let start = Instant::now();
            let result = run_one(name, &ctx);
            let (passed, detail) = match result {
                Ok(detail) => (true, detail),
                Err(e) => (false, e.to_string()),
            };
            SuiteOutcome { name: name.to_string(), passed, detail, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

fn run_one(name: &str, ctx: &Ctx) -> Result<String> {
    match name {
        "unitarity" => unitarity(ctx),
        "encoder" => encoder(ctx),
        "measurement" => measurement(ctx),
        "decoder" => decoder(ctx),
        "recovery" => recovery(ctx),
        "decode-bound" => decode_bound(ctx),
        "pgm" => pgm(ctx),
        "pgm-transpose" => pgm_transpose(ctx),
        "overlap" => overlap(ctx),
        "product-measurement" => product_measurement(ctx),
        "seesaw" => seesaw(ctx),
        "concentration" => concentration(ctx),
        "parameters" => parameters(),
        "determinism" => determinism(ctx),
        other => Err(Error::Config(format!("unknown suite {other:?}"))),
    }
}

fn unitarity(ctx: &Ctx) -> Result<String> {
    let mut worst: f64 = 0.0;
    for (salt, (n, d, r)) in [(2, 2, 4), (2, 3, 3), (3, 2, 5)].into_iter().enumerate() {
        let sc = ctx.scheme(n, 1, d, r, 2, salt as u64)?;
        worst = worst.max(sc.max_unitarity_defect());
    }
    ensure(worst <= 1e-10, || format!("unitarity defect {worst:.3e} exceeds 1e-10"))?;
    Ok(format!("max defect {worst:.3e}"))
}

fn encoder(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(2, 1, 3, 3, 2, 10)?;
    let mut rng = ctx.rng(11);
    for _ in 0..10 {
        let phi = sample_haar_state(2, &mut rng)?;
        let enc = sc.encode(&phi.to_density())?;
        let tr = trace(enc.matrix()).re;
        ensure((tr - 1.0).abs() <= 1e-10, || format!("encoded trace {tr}"))?;
        ensure(is_psd(enc.matrix(), 1e-10), || "encoded state is not PSD".into())?;
        let dense = sc.encode_pure(&phi)?.to_dense();
        let gap = max_abs(&(dense - enc.matrix()));
        ensure(gap <= 1e-12, || format!("factored and dense encodings differ by {gap:.3e}"))?;
    }
    Ok("10 states".into())
}

fn measurement(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(3, 2, 2, 3, 2, 20)?;
    let mut rng = ctx.rng(21);
    let mut count = 0;
    for split in PartySplit::all(3, 2)? {
        let phi = sample_haar_state(2, &mut rng)?;
        let outcomes = local_measurement(&sc, &split, &sc.encode(&phi.to_density())?)?;
        ensure(outcomes.len() == 2, || "wrong outcome count".into())?;
        let xi = xi_vectors(&sc, &split)?;
        for a in &xi {
            for b in xi.iter().filter(|b| b.l != a.l) {
                let ov = a.vector.dotc(&b.vector).norm();
                ensure(ov <= 1e-14, || format!("vectors for outcomes {} and {} overlap by {ov:.3e}", a.l, b.l))?;
            }
        }
        count += 1;
    }
    Ok(format!("{count} splits"))
}

fn decoder(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(3, 2, 2, 4, 2, 30)?;
    let mut worst: f64 = 0.0;
    for split in PartySplit::all(3, 2)? {
        let dec = TransposeDecoder::build(&sc, &split)?;
        let res = dec.completeness_residual();
        ensure(res <= 1e-8, || format!("completeness residual {res:.3e} on {}", split.label()))?;
        let projector_form = build_normalization(&sc, &split)?;
        let xi_form = build_normalization_from_xi(&sc, &split)?;
        let gap = max_abs(&(projector_form - xi_form));
        ensure(gap <= 1e-12, || format!("normalization forms differ by {gap:.3e}"))?;
        let mut sum = CMatrix::zeros(sc.dim(), sc.dim());
        for i in 0..4 {
            for l in 0..dec.outcome_count() {
                let t = dec.kraus_full(i, l);
                sum += t.adjoint() * t;
            }
        }
        let slack = CMatrix::identity(sc.dim(), sc.dim()) - sum;
        ensure(is_psd(&slack, 1e-9), || "transpose Kraus operators exceed the identity".into())?;
        worst = worst.max(res);
    }
    Ok(format!("max residual {worst:.3e}"))
}

fn recovery(ctx: &Ctx) -> Result<String> {
    // one unitary and full access: decoding is exactly U†
    let sc = ctx.scheme(2, 2, 2, 1, 4, 40)?;
    let dec = TransposeDecoder::build(&sc, &PartySplit::leading(2, 2)?)?;
    let mut rng = ctx.rng(41);
    let mut worst: f64 = 1.0;
    for _ in 0..20 {
        let phi = sample_haar_state(4, &mut rng)?;
        let out = dec.decode(&sc.encode(&phi.to_density())?)?;
        worst = worst.min(fidelity_with_pure(&phi, &out.state)?);
    }
    ensure(worst >= 1.0 - 1e-10, || format!("fidelity {worst} below 1 - 1e-10"))?;
    Ok(format!("min fidelity {worst:.12}"))
}

fn decode_bound(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(2, 1, 8, 3, 2, 50)?;
    let mut lines = 0;
    for split in PartySplit::all(2, 1)? {
        let dec = TransposeDecoder::build(&sc, &split)?;
        let sweep = decode_fidelity_sweep(&sc, &dec, 10, &ctx.rng(51))?;
        lines += sweep.records.len();
    }
    Ok(format!("{lines} decodes within 2 sqrt(1 - F)"))
}

fn pgm(ctx: &Ctx) -> Result<String> {
    let mut rng = ctx.rng(60);
    for t in 0..20 {
        let dim = 2 + t % 4;
        let m = 2 + t % 5;
        let raw: Vec<CVector> = (0..m).map(|_| sample_complex_gaussian(dim, &mut rng)).collect();
        let total: f64 = raw.iter().map(|v| v.norm_squared()).sum::<f64>() * 1.25;
        let ens = SubnormalizedEnsemble::new(raw.into_iter().map(|v| v / c(total.sqrt(), 0.0)).collect())?;
        let p = build_pgm(&ens)?;
        let res = p.completeness_residual()?;
        ensure(res <= 1e-8, || format!("PGM completeness residual {res:.3e}"))?;
        for i in 0..m {
            ensure(is_psd(&p.povm_elements()[i], 1e-10), || format!("POVM element {i} is not PSD"))?;
            p.error_upper_bound(i)?;
            p.matrix_sqrt_inequality_check(i)?;
        }
    }
    Ok("20 ensembles".into())
}

fn pgm_transpose(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(2, 1, 3, 2, 2, 70)?;
    let split = PartySplit::leading(2, 1)?;
    let dec = TransposeDecoder::build(&sc, &split)?;
    let xi = xi_vectors(&sc, &split)?;
    let p = build_pgm(&SubnormalizedEnsemble::new(xi.iter().map(|x| x.vector.clone()).collect())?)?;
    let gap = max_abs(&(p.n_operator() - dec.n_operator()));
    ensure(gap <= 1e-12, || format!("normalizations differ by {gap:.3e}"))?;
    let mut worst: f64 = 0.0;
    for (idx, x) in xi.iter().enumerate() {
        let row = dec.kraus_full(x.i, x.l).row(x.j).adjoint();
        let element = &row * row.adjoint();
        worst = worst.max(max_abs(&(element - &p.povm_elements()[idx])));
    }
    ensure(worst <= 1e-10, || format!("POVM elements differ by {worst:.3e}"))?;
    Ok(format!("max element gap {worst:.3e}"))
}

fn overlap(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(2, 1, 8, 3, 2, 80)?;
    let dec = TransposeDecoder::build(&sc, &PartySplit::leading(2, 1)?)?;
    let all = all_delta_diagnostics(&sc, &dec)?;
    for d in &all {
        let sum = d.delta1 + d.delta2;
        ensure((d.delta - sum).abs() <= 1e-10 * d.delta.max(1.0), || "overlap terms do not add up".into())?;
    }
    let full = ctx.scheme(2, 2, 3, 3, 2, 81)?;
    let dec = TransposeDecoder::build(&full, &PartySplit::leading(2, 2)?)?;
    let worst = all_delta_diagnostics(&full, &dec)?.iter().map(|d| d.delta2).fold(0.0, f64::max);
    ensure(worst <= 1e-20, || format!("same-unitary term {worst:.3e} with full access"))?;
    Ok(format!("{} entries", all.len()))
}

fn product_measurement(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(3, 3, 2, 3, 2, 90)?;
    let mut rng = ctx.rng(91);
    let parts = enumerate_partitions(3, 3)?;
    for part in &parts {
        let m = sample_product_measurement(part, 2, &mut rng)?;
        let res = m.dense_completeness_residual()?;
        ensure(res <= 1e-10, || format!("completeness residual {res:.3e} for {}", part.label()))?;
        let phi0 = sample_haar_state(2, &mut rng)?;
        let phi1 = sample_haar_state(2, &mut rng)?;
        let diff = sc.encode_pure(&phi0)?.difference(&sc.encode_pure(&phi1)?)?;
        let v = attack_value_factored(&m, &diff)?;
        let full = diff.trace_norm()?;
        ensure(v <= full + 1e-10, || format!("measured value {v} exceeds trace norm {full}"))?;
    }
    Ok(format!("{} partitions", parts.len()))
}

fn seesaw(ctx: &Ctx) -> Result<String> {
    let sc = ctx.scheme(2, 2, 2, 2, 2, 100)?;
    let mut rng = ctx.rng(101);
    let phi0 = sample_haar_state(2, &mut rng)?;
    let phi1 = sample_haar_state(2, &mut rng)?;
    let budget = SeesawBudget { restarts: 2, max_iters: 20 };
    let part = GroupPartition::new(2, vec![vec![0], vec![1]])?;
    let res = seesaw_optimize(&sc, &part, &phi0, &phi1, budget, &mut rng)?;
    ensure(res.history.windows(2).all(|w| w[1] >= w[0] - 1e-12), || "see-saw history decreased".into())?;
    ensure(res.value <= res.helstrom_baseline + 1e-8, || "see-saw value exceeds the baseline".into())?;
    let joint = seesaw_optimize(&sc, &GroupPartition::joint(2)?, &phi0, &phi1, budget, &mut rng)?;
    let gap = (joint.value - joint.helstrom_baseline).abs();
    ensure(gap <= 1e-6, || format!("joint measurement misses the baseline by {gap:.3e}"))?;
    Ok(format!("product {:.6}, baseline {:.6}", res.value, res.helstrom_baseline))
}

fn concentration(ctx: &Ctx) -> Result<String> {
    let f = run_fact_checks(ctx.config, ctx.config.seed)?;
    ensure(f.all_within_envelope, || "a tail rate lies outside its envelope".into())?;
    Ok(format!("{} trials per case", ctx.config.fact_trials))
}

fn parameters() -> Result<String> {
    let a = derive_parameters(2, 1, 64, 0.5, 0.5, crate::random::DEFAULT_C)?;
    let b = derive_parameters(2, 1, 128, 0.5, 0.5, crate::random::DEFAULT_C)?;
    ensure(b.r > a.r && b.s >= a.s, || "derived parameters are not monotone in d".into())?;
    let tight = derive_parameters(3, 2, 4, 1.0, 1.0, crate::random::DEFAULT_C)?;
    ensure(!tight.feasibility.feasible, || "a tiny instance was reported feasible".into())?;
    ensure(net_cardinality_bound(1, 0.5)?.to_string() == "100", || "net bound (5/0.5)^2 != 100".into())?;
    Ok("derivations consistent".into())
}

fn determinism(ctx: &Ctx) -> Result<String> {
    let a = ctx.scheme(2, 1, 3, 2, 2, 110)?;
    let b = ctx.scheme(2, 1, 3, 2, 2, 110)?;
    ensure(a.unitaries() == b.unitaries(), || "same seed produced different unitaries".into())?;
    let split = PartySplit::leading(2, 1)?;
    let dec = TransposeDecoder::build(&a, &split)?;
    let s1 = decode_fidelity_sweep(&a, &dec, 5, &ctx.rng(111))?;
    let s2 = decode_fidelity_sweep(&b, &dec, 5, &ctx.rng(111))?;
    ensure(serde_json::to_string(&s1)? == serde_json::to_string(&s2)?, || "sweeps differ".into())?;
    let rho = DensityOperator::maximally_mixed(2);
    ensure(dec.decode(&a.encode(&rho)?)?.state.dim() == 2, || "decoded dimension".into())?;
    Ok("bitwise identical".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ConfigLayer;

    fn config() -> ExperimentConfig {
        let layer = ConfigLayer {
            r: Some(2),
            s: Some(2),
            fact_trials: Some(500),
            overlap_trials: Some(100),
            ..Default::default()
        };
        ExperimentConfig::resolve(&layer).unwrap()
    }

    #[test]
    fn selection() {
        assert_eq!(select_suites("all").unwrap().len(), SUITES.len());
        assert_eq!(select_suites("pgm, unitarity,pgm").unwrap(), vec!["pgm", "unitarity"]);
        assert!(select_suites("").is_err());
        assert!(select_suites(" , ").is_err());
        assert!(select_suites("nope").is_err());
    }

    #[test]
    fn all_suites_pass() {
        let names = select_suites("all").unwrap();
        for out in run_suites(&names, &config(), None) {
            assert!(out.passed, "{}: {}", out.name, out.detail);
        }
    }

    #[test]
    fn broken_unitary_is_named_first() {
        let out = run_suites(&select_suites("unitarity,pgm").unwrap(), &config(), Some(Fault::BrokenUnitary));
        assert!(!out[0].passed);
        assert_eq!(out[0].name, "unitarity");
        assert!(out[1].passed);
    }
}
