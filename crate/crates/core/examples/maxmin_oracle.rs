//! Max-min power control against a brute-force grid on 2-AP, 2-UE networks.

use cfmimo::powerctrl::{grid_maxmin_2x2, solve_maxmin_bisection, MaxMinOptions, PowerProblem};
use cfmimo::training::{gamma_uncorrelated, PilotBook};
use cfmimo::Seed;
use nalgebra::DMatrix;
use rand::Rng;

/// Returns the worst ratio of the solver value to the grid value.
pub fn run(instances: u64, step: f64) -> cfmimo::Result<f64> {
    let pilots = PilotBook::round_robin(2, 2, 1.0)?;
    let mut worst = f64::INFINITY;
    for i in 0..instances {
        let mut rng = Seed(i).rng();
        let beta = DMatrix::from_fn(2, 2, |_, _| 10f64.powf(rng.random_range(-2.0..0.0)));
        let gamma = gamma_uncorrelated(&beta, &pilots, 10.0);
        let p = PowerProblem::cb_downlink(&beta, &gamma, 100.0, 1, None)?;
        let sol = solve_maxmin_bisection(&p, &MaxMinOptions::default())?;
        let grid = grid_maxmin_2x2(&p, step)?;
        let spread = sol.user_sinr.iter().cloned().fold(0.0, f64::max) / sol.min_sinr - 1.0;
        println!(
            "instance {i}: solver {:.6} grid {:.6} ratio {:.5} SINR spread {spread:.2e}",
            sol.min_sinr,
            grid.value,
            sol.min_sinr / grid.value
        );
        worst = worst.min(sol.min_sinr / grid.value);
    }
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let instances = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    run(instances, 1e-3).map(|_| ())
}
