//! MMSE estimation quality with and without pilot contamination.

use cfmimo::netmodel::{draw_channels, drop_network, noise_power_w, three_slope_beta, LargeScaleModel, PathLossParams};
use cfmimo::training::{contamination_collinearity, mmse_estimate, EstimationStats, PilotBook};
use cfmimo::Seed;

/// Returns the mean NMSE for each pilot length in `taus`.
pub fn run(taus: &[usize], seed: u64) -> cfmimo::Result<Vec<f64>> {
    let (m, k, n) = (8, 6, 4);
    let seed = Seed(seed);
    let geom = drop_network(m, k, 500.0, seed.named("geometry"))?;
    let beta = three_slope_beta(&geom, &PathLossParams::default(), seed.named("shadowing"))?;
    let noise = noise_power_w(20e6, 9.0);
    let lsm = LargeScaleModel::correlated(&geom, beta, n, 10f64.to_radians(), 0.5, noise)?;
    let mut out = Vec::new();
    for &tau in taus {
        let pilots = PilotBook::round_robin(k, tau, 0.1)?;
        let stats = EstimationStats::new(&lsm, &pilots)?;
        let mut nmse = 0.0;
        for mm in 0..m {
            for kk in 0..k {
                let r = lsm.r(mm, kk).trace().re;
                nmse += 1.0 - stats.est_cov[mm * k + kk].trace().re / r;
            }
        }
        nmse /= (m * k) as f64;
        let h = draw_channels(&lsm, seed.named("channel").child(tau as u64));
        let est = mmse_estimate(&lsm, &h, &pilots, seed.named("noise").child(tau as u64))?;
        let pairs = contamination_collinearity(&est, &pilots);
        println!("tau_up={tau}: mean NMSE {nmse:.4}, {} co-pilot pairs", pairs.len());
        out.push(nmse);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    run(&[1, 2, 3, 6], seed).map(|_| ())
}
