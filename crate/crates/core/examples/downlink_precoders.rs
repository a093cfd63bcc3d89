//! Median per-UE downlink SE of every precoder.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
scenario = "DL"
trials = 300
schemes = ["CB", "NCB", "ECB", "FZF", "PZF", "PPZF", "CZF"]

[dl]
m = 12
k = 4
n = 6
area_side = 500.0"#
    );
    let cfg = parse_config(&text, Format::Toml)?;
    let table = run_experiment(&cfg)?;
    let medians = table.medians("se")?;
    for (scheme, case, v) in &medians {
        println!("{scheme:<14} {case:<14} median se {v:.4}");
    }
    Ok(medians)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    run(seeds).map(|_| ())
}
