//! Monte Carlo checks of the random-matrix identities used in closed forms.

use cfmimo::lemmas::run_all;
use cfmimo::Seed;

pub fn run(trials: usize, seed: u64) -> cfmimo::Result<bool> {
    let mut ok = true;
    for (name, r) in run_all(trials, Seed(seed))? {
        println!(
            "{name:<45} mean {:>10.5} target {:>10.5} z {:>6.2} {}",
            r.statistic,
            r.target,
            r.z_score(),
            if r.passed { "ok" } else { "FAIL" }
        );
        ok &= r.passed;
    }
    Ok(ok)
}

#[allow(dead_code)]
fn main() -> cfmimo::Result<()> {
    let trials = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    run(trials, 0).map(|_| ())
}
