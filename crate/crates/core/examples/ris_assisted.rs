//! RIS-assisted uplink against no RIS and a blocked RIS, median sum SE.

use cfmimo::harness::{parse_config, run_experiment, Format};

pub fn run(seeds: u64) -> cfmimo::Result<Vec<(String, String, f64)>> {
    let text = format!(
        r#"seeds = {seeds}
preset = "fig10"

[ris]
m = 20
n_ris = 64
k = 5
p_direct = 0.2
area_side = 447.2"#
    );
    let cfg = parse_config(&text, Format::Toml)?;
    let table = run_experiment(&cfg)?;
    let mut medians = table.medians("ul_se:sum")?;
    medians.extend(table.medians("dl_se:sum")?);
    for (i, (scheme, _, v)) in medians.iter().enumerate() {
        let link = if i < medians.len() / 2 { "UL" } else { "DL" };
        println!("{scheme:<14} median sum {link} SE {v:.4}");
    }
    Ok(medians)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    run(seeds).map(|_| ())
}
