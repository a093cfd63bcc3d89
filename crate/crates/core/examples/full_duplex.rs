//! Network-assisted full duplex against classic full and half duplex, median sum SE.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
preset = "fig4"
schemes = ["NAFD", "FD", "HD"]

[nafd]
m = 8
area_side = 500.0"#
    );
    let cfg = parse_config(&text, Format::Toml)?;
    let table = run_experiment(&cfg)?;
    let medians = table.medians("se:sum")?;
    for (scheme, case, v) in &medians {
        println!("{scheme:<14} {case:<14} median se:sum {v:.4}");
    }
    Ok(medians)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    run(seeds).map(|_| ())
}
