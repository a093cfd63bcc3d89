//! Secrecy SE under an active pilot-spoofing attack, PPZF against MRT.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
preset = "fig9"

[pls]
m_values = [12, 24]
radii = [20.0, 40.0]

[pls.setup]
k = 10
area_side = 1000.0"#
    );
    let cfg = parse_config(&text, Format::Toml)?;
    let table = run_experiment(&cfg)?;
    let medians = table.medians("secrecy_se")?;
    for (scheme, case, v) in &medians {
        println!("{scheme:<14} {case:<14} median secrecy_se {v:.4}");
    }
    Ok(medians)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    run(seeds).map(|_| ())
}
