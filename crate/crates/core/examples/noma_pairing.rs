//! NOMA with three pairing rules against OMA, median per-UE SE.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
preset = "fig6"

[noma]
m = 10
l = 6
k_l = 2
n = 8
area_side = 600.0"#
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
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    run(seeds).map(|_| ())
}
