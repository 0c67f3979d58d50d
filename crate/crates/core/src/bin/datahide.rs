use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use datahide::experiments::{
    run_experiment, run_fact_checks, run_suites, select_suites, write_run_outputs, ConfigLayer, ExperimentConfig, Fault,
};
use datahide::scheme::{derive_parameters, net_cardinality_bound};
use datahide::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "datahide", version, about = "Multiparty quantum data hiding experiments")]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form r and s with feasibility flags.
    DeriveParams {
        #[command(flatten)]
        layer: ConfigLayer,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Build a scheme, sweep decoders and attacks, write reports.
    Run {
        #[command(flatten)]
        layer: ConfigLayer,
    },
    /// Run invariant suites.
    Verify {
        #[command(flatten)]
        layer: ConfigLayer,
        /// Comma-separated suite names, or `all`.
        #[arg(long, default_value = "all")]
        suites: String,
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
    },
    /// Monte Carlo concentration and error-control checks.
    CheckFacts {
        #[command(flatten)]
        layer: ConfigLayer,
    },
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter(_) | Error::Dimension(_) => Failure::Usage(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

fn layered(file: &Option<PathBuf>, cli: ConfigLayer) -> Result<ConfigLayer, Failure> {
    let base = match file {
        Some(path) => ConfigLayer::from_file(path)?,
        None => ConfigLayer::default(),
    };
    Ok(base.overlay(cli))
}

fn derive(layer: ConfigLayer, json: bool) -> Result<(), Failure> {
    let missing: Vec<&str> = [("n", layer.n.is_none()), ("k", layer.k.is_none()), ("d", layer.d.is_none())]
        .into_iter()
        .filter_map(|(name, absent)| absent.then_some(name))
        .collect();
    if !missing.is_empty() {
        return Err(Failure::Usage(format!("derive-params needs {}", missing.join(", "))));
    }
    let c_const = layer.c_const.unwrap_or(datahide::random::DEFAULT_C);
    let out = derive_parameters(
        layer.n.unwrap_or_default(),
        layer.k.unwrap_or_default(),
        layer.d.unwrap_or_default(),
        layer.epsilon.unwrap_or(0.5),
        layer.delta.unwrap_or(0.5),
        c_const,
    )?;
    if json {
        println!("{}", serde_json::to_string_pretty(&out).map_err(Error::from)?);
    } else {
        let f = &out.feasibility;
        println!("n = {}  k = {}  d = {}  epsilon = {}  delta = {}", out.n, out.k, out.d, out.epsilon, out.delta);
        println!("r = {}", out.r);
        println!("s = {}", out.s);
        println!("d^k > 48/delta^2              {}", f.dk_condition);
        println!("d^n > 10(n+2)/epsilon         {}", f.dn_condition);
        match f.k1_condition {
            Some(v) => println!("d/log2 d > 2840(2n+3)/delta^2 {v}"),
            None => println!("d/log2 d > 2840(2n+3)/delta^2 n/a"),
        }
        println!("s >= 1                        {}", f.s_positive);
        println!("feasible                      {}", f.feasible);
        println!("net size (5/epsilon)^(2s)     {}", net_estimate(&out.s, out.epsilon));
    }
    if out.feasibility.feasible {
        Ok(())
    } else {
        Err(Failure::Failed("parameters are infeasible".into()))
    }
}

/// The net cardinality bound, abbreviated to its order of magnitude when large.
fn net_estimate(s: &num_bigint::BigUint, epsilon: f64) -> String {
    let dim = match usize::try_from(s) {
        Ok(v) if (1..=1 << 16).contains(&v) => v,
        _ => return "n/a".into(),
    };
    match net_cardinality_bound(dim, epsilon) {
        Ok(v) if v.bits() <= 128 => v.to_string(),
        Ok(v) => format!("~10^{}", v.to_string().len() - 1),
        Err(_) => "n/a".into(),
    }
}

fn run(layer: ConfigLayer) -> Result<(), Failure> {
    if layer.seed.is_none() {
        return Err(Failure::Usage("run needs --seed (or seed in the config file)".into()));
    }
    let config = ExperimentConfig::resolve(&layer)?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("datahide-out"));
    let report = run_experiment(&config)?;
    write_run_outputs(&report, &out)?;
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    println!("epsilon_hat = {:.6}", report.security.epsilon_hat);
    println!("wrote {}", out.display());
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Failed("some checks failed".into()))
    }
}

fn verify(layer: ConfigLayer, suites: &str, fault: Option<Fault>) -> Result<(), Failure> {
    let names = select_suites(suites)?;
    let layer = ConfigLayer { r: layer.r.or(Some(2)), s: layer.s.or(Some(2)), ..layer };
    let config = ExperimentConfig::resolve(&layer)?;
    let outcomes = run_suites(&names, &config, fault);
    for o in &outcomes {
        println!("{} {} ({:.2}s): {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.seconds, o.detail);
    }
    match outcomes.iter().find(|o| !o.passed) {
        Some(first) => Err(Failure::Failed(format!("suite {} failed: {}", first.name, first.detail))),
        None => Ok(()),
    }
}

fn check_facts(layer: ConfigLayer) -> Result<(), Failure> {
    let layer = ConfigLayer { r: layer.r.or(Some(2)), s: layer.s.or(Some(2)), ..layer };
    let config = ExperimentConfig::resolve(&layer)?;
    let facts = run_fact_checks(&config, config.seed)?;
    println!("{}", serde_json::to_string_pretty(&facts).map_err(Error::from)?);
    if facts.all_within_envelope {
        Ok(())
    } else {
        Err(Failure::Failed("a tail rate lies outside its envelope".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DeriveParams { layer, json } => layered(&cli.config, layer).and_then(|l| derive(l, json)),
        Command::Run { layer } => layered(&cli.config, layer).and_then(run),
        Command::Verify { layer, suites, inject_fault } => {
            layered(&cli.config, layer).and_then(|l| verify(l, &suites, inject_fault))
        }
        Command::CheckFacts { layer } => layered(&cli.config, layer).and_then(check_facts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
