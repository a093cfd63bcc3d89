//! Median per-UE uplink SE at the four cooperation levels.

use cfmimo::netmodel::{drop_network, noise_power_w, three_slope_beta, LargeScaleModel, PathLossParams};
use cfmimo::training::PilotBook;
use cfmimo::ulink::*;
use cfmimo::Seed;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

/// Median per-UE SE at levels 1 to 4.
pub fn run(seeds: u64, side: f64, trials: usize) -> cfmimo::Result<Vec<f64>> {
    let (m, k, n) = (10, 5, 2);
    let noise = noise_power_w(20e6, 9.0);
    let mut levels = vec![Vec::new(); 4];
    for s in 0..seeds {
        let seed = Seed(s);
        let geom = drop_network(m, k, side, seed.named("geometry"))?;
        let beta = three_slope_beta(&geom, &PathLossParams::default(), seed.named("shadowing"))?;
        let lsm = LargeScaleModel::uncorrelated(beta, n, noise)?;
        let pilots = PilotBook::round_robin(k, k, 0.1)?;
        let serving = ServingSets::all_serve(m, k);
        let st = UlSettings { rho_u: 0.1 / noise, varsigma: vec![1.0; k], trials, prelog: 1.0 };
        let mc = seed.named("channels");
        let l4 = ul_se_level4(&lsm, &pilots, &serving, CombinerScheme::Cmmse, &st, mc)?;
        let mom = ul_moments_montecarlo(&lsm, &pilots, &serving, CombinerScheme::Mr, &st, mc)?;
        levels[0].extend(ul_se_level1(&mom, 1.0).per_ue_se);
        levels[1].extend(ul_se_level2(&mom, 1.0).per_ue_se);
        levels[2].extend(ul_se_level3_optimal(&mom, 1.0)?.per_ue_se);
        levels[3].extend(l4.per_ue_se);
    }
    let out: Vec<f64> = levels.into_iter().map(median).collect();
    for (i, v) in out.iter().enumerate() {
        println!("level {}: median SE {v:.4}", i + 1);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seeds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let side = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(500.0);
    run(seeds, side, 2000).map(|_| ())
}
