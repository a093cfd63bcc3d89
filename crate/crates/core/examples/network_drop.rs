//! Drops APs and UEs, then prints large-scale fading and how strongly each UE
//! is tied to its best AP.

use cfmimo::netmodel::{drop_network, noise_power_w, three_slope_beta, LargeScaleModel, PathLossParams};
use cfmimo::Seed;

pub fn run(m: usize, k: usize, seed: u64) -> cfmimo::Result<Vec<f64>> {
    let seed = Seed(seed);
    let geom = drop_network(m, k, 1000.0, seed.named("geometry"))?;
    let beta = three_slope_beta(&geom, &PathLossParams::default(), seed.named("shadowing"))?;
    let noise = noise_power_w(20e6, 9.0);
    let lsm = LargeScaleModel::correlated(&geom, beta.clone(), 4, 10f64.to_radians(), 0.5, noise)?;
    println!("M={m} K={k}, noise {noise:.3e} W, trace identity error {:.2e}", lsm.trace_identity_error());
    let mut best_db = Vec::with_capacity(k);
    for kk in 0..k {
        let col = beta.column(kk);
        let best = col.iter().cloned().fold(0.0, f64::max);
        let share = best / col.sum();
        best_db.push(10.0 * (best / noise).log10());
        println!(
            "UE {kk} at ({:.0}, {:.0}) m: best beta/noise {:.1} dB, best AP carries {:.0}% of the total",
            geom.ue_positions[kk][0],
            geom.ue_positions[kk][1],
            best_db[kk],
            100.0 * share
        );
    }
    Ok(best_db)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    run(16, 6, seed).map(|_| ())
}
