use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfmimo::harness::config::{Format, Scenario};
use cfmimo::harness::{emit_cdf, presets, resolve_config, run_experiment_with};
use cfmimo::{Error, Result, Seed};

/// Cell-free massive MIMO experiments.
#[derive(Parser)]
#[command(name = "cfsim", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Downlink SE with a chosen precoder.
    Dl(RunArgs),
    /// Uplink SE at the four cooperation levels.
    Ul(RunArgs),
    /// Network-assisted full duplex.
    Nafd(RunArgs),
    /// NOMA clusters versus OMA.
    Noma(RunArgs),
    /// Secrecy under pilot spoofing.
    Pls(RunArgs),
    /// Wireless power transfer with AP mode selection.
    Eh(RunArgs),
    /// RIS-assisted uplink and downlink.
    Ris(RunArgs),
    /// Monte Carlo checks of the random-matrix identities.
    Lemmas {
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prints every figure preset.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file, or JSON when the extension is `.json`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = presets::preset_names())]
    preset: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metric for CDF files, e.g. `se` or `se:sum`.
    #[arg(long)]
    cdf: Option<String>,
}

fn run_scenario(scenario: Scenario, a: RunArgs) -> Result<()> {
    let text = match &a.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.clone(), source })?),
        None => None,
    };
    let origin = a.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    let file = match (&text, &a.config) {
        (Some(t), Some(p)) => Some((t.as_str(), Format::of(p), origin.as_str())),
        _ => None,
    };
    let mut cfg = resolve_config(file, a.preset.as_deref(), Some(scenario))?;
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    if a.cdf.is_some() {
        cfg.cdf = a.cdf;
    }
    cfg.validate()?;
    let total = cfg.seeds;
    let out = cfg.out.clone();
    let table = run_experiment_with(&cfg, |t, done| {
        eprintln!("cfsim: {done}/{total} seeds");
        match &out {
            Some(p) => t.write_csv(p),
            None => Ok(()),
        }
    })?;
    if out.is_none() {
        print!("{}", table.to_csv());
    }
    if let Some(metric) = &cfg.cdf {
        let base = out.unwrap_or_else(|| PathBuf::from("cfsim.csv"));
        for p in emit_cdf(&table, metric, &base)? {
            eprintln!("cfsim: wrote {}", p.display());
        }
    }
    Ok(())
}

fn run_lemmas(trials: usize, seed: u64) -> Result<()> {
    let checks = cfmimo::lemmas::run_all(trials, Seed(seed))?;
    println!("check,statistic,target,stderr,z,passed");
    let mut failed = Vec::new();
    for (name, r) in &checks {
        println!("{name},{},{},{},{:.3},{}", r.statistic, r.target, r.stderr, r.z_score(), r.passed);
        if !r.passed {
            failed.push(name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::NumericalDomain(format!("checks outside tolerance: {}", failed.join("; "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Dl(a) => run_scenario(Scenario::Dl, a),
        Cmd::Ul(a) => run_scenario(Scenario::Ul, a),
        Cmd::Nafd(a) => run_scenario(Scenario::Nafd, a),
        Cmd::Noma(a) => run_scenario(Scenario::Noma, a),
        Cmd::Pls(a) => run_scenario(Scenario::Pls, a),
        Cmd::Eh(a) => run_scenario(Scenario::Eh, a),
        Cmd::Ris(a) => run_scenario(Scenario::Ris, a),
        Cmd::Lemmas { trials, seed } => run_lemmas(trials, seed),
        Cmd::Presets => {
            print!("{}", presets::dump());
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
