//! Runs a config file end to end: CSV table, CDF files and a median summary.
//!
//! ```text
//! cargo run --release --example config_experiment -- configs/ul_levels.toml out/ul.csv se
//! ```

use std::path::{Path, PathBuf};

use cfmimo::harness::{emit_cdf, load_config, run_experiment_with};

pub fn run(config: &Path, out: &Path, metric: &str, seeds: Option<u64>) -> cfmimo::Result<Vec<PathBuf>> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    cfg.validate()?;
    let table = run_experiment_with(&cfg, |t, done| {
        eprintln!("{done}/{} seeds", cfg.seeds);
        t.write_csv(out)
    })?;
    for (scheme, case, v) in table.medians(metric)? {
        println!("{scheme:<14} {case:<14} median {metric} {v:.4}");
    }
    let mut files = vec![out.to_path_buf()];
    files.extend(emit_cdf(&table, metric, out)?);
    Ok(files)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/ul_levels.toml".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "results.csv".into()));
    let metric = args.next().unwrap_or_else(|| "se".into());
    for f in run(&config, &out, &metric, None)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
