//! Sum harvested energy with optimal and random AP mode selection.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
preset = "fig8"
schemes = ["Optimal", "Benchmark1", "Benchmark2"]

[eh]
m = 8
n = 4
k_d = 2
l = 3
energy_floor = 2e-9
se_floor = 1.0"#
    );
    let cfg = parse_config(&text, Format::Toml)?;
    let table = run_experiment(&cfg)?;
    let medians = table.medians("harvested_j:sum")?;
    for (scheme, case, v) in &medians {
        println!("{scheme:<14} {case:<14} median harvested_j:sum {v:.3e}");
    }
    Ok(medians)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    run(seeds).map(|_| ())
}
