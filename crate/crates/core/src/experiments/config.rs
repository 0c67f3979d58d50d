use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::random::DEFAULT_C;
use crate::scheme::{derive_parameters, SchemeParams};

/// One layer of settings: a config file or the command line. Unset keys fall
/// through to lower layers and finally to defaults.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct ConfigLayer {
    /// Number of parties.
    #[arg(long)]
    pub n: Option<usize>,
    /// Threshold.
    #[arg(long)]
    pub k: Option<usize>,
    /// Local dimension per party.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of unitaries (overrides the derived value).
    #[arg(long)]
    pub r: Option<usize>,
    /// Code dimension (overrides the derived value).
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Concentration constant; defaults to 1/(6 ln 2).
    #[arg(long)]
    pub c_const: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Haar states per authorized set in the decode sweep.
    #[arg(long)]
    pub n_states: Option<usize>,
    /// Orthogonal state pairs in the security report.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Sampled product measurements per pair and partition.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Run the concentration and error-control checks as part of `run`.
    #[arg(long)]
    pub facts: Option<bool>,
    #[arg(long)]
    pub fact_trials: Option<usize>,
    #[arg(long)]
    pub overlap_trials: Option<usize>,
    /// Threshold for the same-unitary overlap event.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Largest total dimension d^n a scheme may have.
    #[arg(long)]
    pub dim_cap: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! layer_keys {
    ($($field:ident),*) => {
        impl ConfigLayer {
            /// Keys accepted in config files, in echo order.
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
                match key {
                    $(stringify!($field) => {
                        self.$field = Some(value.parse().map_err(|_| {
                            Error::Config(format!("line {line}: cannot parse {key} = {value:?}"))
                        })?);
                    })*
                    _ => return Err(Error::Config(format!("line {line}: unknown key {key:?}"))),
                }
                Ok(())
            }

            /// Keys set in `top` replace those in `self`.
            pub fn overlay(self, top: ConfigLayer) -> ConfigLayer {
                ConfigLayer { $($field: top.$field.or(self.$field)),* }
            }
        }
    };
}

layer_keys!(
    n,
    k,
    d,
    r,
    s,
    epsilon,
    delta,
    c_const,
    seed,
    n_states,
    pairs,
    samples,
    restarts,
    max_iters,
    facts,
    fact_trials,
    overlap_trials,
    beta,
    dim_cap,
    out
);

impl ConfigLayer {
    /// Parses `key = value` lines. `#` starts a comment; dashes in keys are
    /// read as underscores.
    pub fn parse(text: &str) -> Result<Self> {
        let mut layer = ConfigLayer::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", idx + 1)))?;
            let key = key.trim().replace('-', "_");
            layer.set(&key, value.trim(), idx + 1)?;
        }
        Ok(layer)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Fully resolved settings for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub r: usize,
    pub s: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub c_const: f64,
    pub seed: u64,
    pub n_states: usize,
    pub pairs: usize,
    pub samples: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub facts: bool,
    pub fact_trials: usize,
    pub overlap_trials: usize,
    pub beta: f64,
    pub dim_cap: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

impl ExperimentConfig {
    /// Fills defaults. `r` and `s` come from the closed-form derivation
    /// when not given, which only works when it is feasible and small.
    pub fn resolve(layer: &ConfigLayer) -> Result<Self> {
        let n = layer.n.unwrap_or(2);
        let k = layer.k.unwrap_or(n.min(2));
        let d = layer.d.unwrap_or(4);
        let epsilon = layer.epsilon.unwrap_or(0.5);
        let delta = layer.delta.unwrap_or(0.5);
        let c_const = layer.c_const.unwrap_or(DEFAULT_C);
        let (r, s) = match (layer.r, layer.s) {
            (Some(r), Some(s)) => (r, s),
            _ => {
                let derived = derive_parameters(n, k, d, epsilon, delta, c_const)?;
                if !derived.feasibility.feasible {
                    return Err(Error::Config(format!(
                        "derived parameters are infeasible (r = {}, s = {}); give r and s explicitly",
                        derived.r, derived.s
                    )));
                }
                let p = derived.to_scheme_params()?;
                (layer.r.unwrap_or(p.r), layer.s.unwrap_or(p.s))
            }
        };
        let config = Self {
            n,
            k,
            d,
            r,
            s,
            epsilon,
            delta,
            c_const,
            seed: layer.seed.unwrap_or(DEFAULT_SEED),
            n_states: layer.n_states.unwrap_or(20),
            pairs: layer.pairs.unwrap_or(3),
            samples: layer.samples.unwrap_or(50),
            restarts: layer.restarts.unwrap_or(4),
            max_iters: layer.max_iters.unwrap_or(50),
            facts: layer.facts.unwrap_or(false),
            fact_trials: layer.fact_trials.unwrap_or(10_000),
            overlap_trials: layer.overlap_trials.unwrap_or(1_000),
            beta: layer.beta.unwrap_or(1.0),
            dim_cap: layer.dim_cap.unwrap_or(crate::linalg::DEFAULT_DIM_CAP),
            out: layer.out.clone(),
        };
        config.scheme_params()?;
        Ok(config)
    }

    pub fn scheme_params(&self) -> Result<SchemeParams> {
        let p = SchemeParams::with_constant(
            self.n,
            self.k,
            self.d,
            self.r,
            self.s,
            self.epsilon,
            self.delta,
            self.c_const,
        )?;
        match p.total_dim() {
            Some(dim) if dim <= self.dim_cap => Ok(p),
            _ => {
                Err(Error::Dimension(format!("d^n = {}^{} exceeds the dimension cap {}", self.d, self.n, self.dim_cap)))
            }
        }
    }

    /// The settings as a config file that reproduces this run.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        let value = serde_json::to_value(self).expect("config serializes");
        for key in ConfigLayer::KEYS {
            if let Some(v) = value.get(*key) {
                let _ = writeln!(out, "{key} = {}", v.to_string().trim_matches('"'));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_overlay() {
        let file = ConfigLayer::parse("# demo\nn = 3\nk=2 # inline\nn-states = 5\n\nd = 2\n").unwrap();
        assert_eq!(file.n, Some(3));
        assert_eq!(file.n_states, Some(5));
        let cli = ConfigLayer { n: Some(2), ..Default::default() };
        let merged = file.overlay(cli);
        assert_eq!(merged.n, Some(2));
        assert_eq!(merged.k, Some(2));
        assert_eq!(merged.d, Some(2));
    }

    #[test]
    fn parse_errors() {
        assert!(ConfigLayer::parse("bogus = 1").is_err());
        assert!(ConfigLayer::parse("n = two").is_err());
        assert!(ConfigLayer::parse("n").is_err());
    }

    #[test]
    fn infeasible_derivation_needs_overrides() {
        let layer = ConfigLayer { n: Some(2), k: Some(2), d: Some(4), ..Default::default() };
        assert!(matches!(ExperimentConfig::resolve(&layer), Err(Error::Config(_))));
        let layer = ConfigLayer { r: Some(2), s: Some(2), ..layer };
        assert!(ExperimentConfig::resolve(&layer).is_ok());
    }

    #[test]
    fn config_text_round_trips() {
        let layer = ConfigLayer { r: Some(3), s: Some(2), seed: Some(9), epsilon: Some(0.1), ..Default::default() };
        let config = ExperimentConfig::resolve(&layer).unwrap();
        let again = ExperimentConfig::resolve(&ConfigLayer::parse(&config.to_config_text()).unwrap()).unwrap();
        assert_eq!(config, again);
    }
}
