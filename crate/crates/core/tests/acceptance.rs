//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line
//! (visible with `--nocapture`) and then asserts.

use std::sync::Arc;
use std::time::{Duration, Instant};

use cfmimo::casestudies::eh::EhParams;
use cfmimo::casestudies::median;
use cfmimo::dlink::{dl_se_closed_cb, dl_se_montecarlo, uniform_cb_eta, DlMcSettings, DlPower, PrecoderScheme};
use cfmimo::harness::{parse_config, run_experiment, ExperimentConfig, Format, ResultTable};
use cfmimo::lemmas::{check_projection_expectation, check_wishart_inverse_trace};
use cfmimo::netmodel::{draw_channels_with, LargeScaleModel};
use cfmimo::powerctrl::{grid_maxmin_2x2, solve_maxmin_bisection, MaxMinOptions, PowerProblem};
use cfmimo::training::{contamination_collinearity, gamma_uncorrelated, EstimationStats, PilotBook};
use cfmimo::Seed;
use nalgebra::DMatrix;
use rand::Rng;

fn verdict(n: u32, what: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} ({what}): {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn config(text: &str) -> ExperimentConfig {
    parse_config(text, Format::Toml).expect("acceptance config")
}

/// Median over seeds of a per-row reduction, one value per scheme.
fn medians(t: &ResultTable, metric: &str, reduce: impl Fn(&[f64]) -> f64) -> Vec<(String, f64)> {
    t.schemes()
        .into_iter()
        .map(|s| {
            let v: Vec<f64> = t.select(&s, metric).map(|r| reduce(&r.values)).collect();
            (s, median(&v))
        })
        .collect()
}

fn get(m: &[(String, f64)], s: &str) -> f64 {
    m.iter().find(|x| x.0 == s).map(|x| x.1).unwrap_or_else(|| panic!("no scheme {s}"))
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

#[test]
fn criterion_01_random_matrix_identities() {
    let t0 = Instant::now();
    let w = check_wishart_inverse_trace(2, 4, 100_000, Seed(11)).unwrap().at_sigmas(5.0);
    let p = check_projection_expectation(4, 2, 100_000, Seed(12)).unwrap();
    let dt = t0.elapsed();
    let pass = w.passed && p.statistic <= 0.01 && dt < Duration::from_secs(30);
    verdict(
        1,
        "inverse Wishart trace and projection mean",
        pass,
        format!("E tr = {:.5} (z = {:.2}), max-abs dev = {:.4}, {:.1?}", w.statistic, w.z_score(), p.statistic, dt),
    );
}

#[test]
fn criterion_02_scalar_mmse_and_copilots() {
    let mut rng = Seed(21).rng();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let tau = rng.random_range(1..=4usize);
        let rho = 10f64.powf(rng.random_range(-1.0..1.5));
        let lsm = LargeScaleModel::uncorrelated(DMatrix::from_element(1, 1, beta), 1, 1.0).unwrap();
        let pilots = PilotBook::new(tau, vec![0], rho).unwrap();
        let stats = Arc::new(EstimationStats::new(&lsm, &pilots).unwrap());
        let mut r = Seed(100 + i).rng();
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = draw_channels_with(&lsm, &mut r);
            acc += stats.estimate_with(&h, &mut r).get(0, 0).norm_squared();
        }
        let tr = tau as f64 * rho;
        let gamma = tr * beta * beta / (tr * beta + 1.0);
        worst = worst.max((acc / draws as f64 / gamma - 1.0).abs());
    }
    // Three UEs on one pilot at four antennas and three APs.
    let beta = DMatrix::from_fn(3, 3, |m, k| 0.2 + 0.3 * ((m * 3 + k) % 4) as f64);
    let lsm = LargeScaleModel::uncorrelated(beta, 4, 1.0).unwrap();
    let pilots = PilotBook::new(1, vec![0, 0, 0], 2.0).unwrap();
    let stats = Arc::new(EstimationStats::new(&lsm, &pilots).unwrap());
    let mut r = Seed(29).rng();
    let h = draw_channels_with(&lsm, &mut r);
    let est = stats.estimate_with(&h, &mut r);
    let col = contamination_collinearity(&est, &pilots);
    let col_err = col.iter().filter_map(|c| c.cosine).map(|c| (1.0 - c).abs()).fold(0.0, f64::max);
    let pass = worst < 0.02 && !col.is_empty() && col_err < 1e-10;
    verdict(2, "MMSE variance and copilot collinearity", pass, format!("worst rel err {worst:.4}, 1 - |cos| <= {col_err:.1e}"));
}

#[test]
fn criterion_03_cb_closed_form_vs_montecarlo() {
    let mut rng = Seed(31).rng();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let m = rng.random_range(2..=10usize);
        let k = rng.random_range(1..=5usize);
        let n = rng.random_range(1..=4usize);
        let beta = DMatrix::from_fn(m, k, |_, _| 10f64.powf(rng.random_range(-1.5..0.5)));
        let rho_p = 10f64.powf(rng.random_range(0.0..1.0));
        let rho_d = 10f64.powf(rng.random_range(0.0..1.0));
        let lsm = LargeScaleModel::uncorrelated(beta.clone(), n, 1.0).unwrap();
        let pilots = PilotBook::round_robin(k, k, rho_p).unwrap();
        let gamma = gamma_uncorrelated(&beta, &pilots, rho_p);
        let eta = uniform_cb_eta(&gamma, n);
        let cf = dl_se_closed_cb(&beta, &gamma, &eta, rho_d, n, 1.0);
        let st = DlMcSettings { scheme: PrecoderScheme::Cb, groups: None, trials: 100_000, prelog: 1.0 };
        let mc = dl_se_montecarlo(&lsm, &pilots, &DlPower { eta, rho_d }, &st, Seed(300 + i)).unwrap();
        for (a, b) in cf.per_ue_se.iter().zip(&mc.report.per_ue_se) {
            worst = worst.max((b / a - 1.0).abs());
        }
    }
    verdict(3, "CB closed form vs Monte Carlo", worst < 0.02, format!("worst rel SE gap {worst:.4}"));
}

#[test]
fn criterion_04_maxmin_vs_grid() {
    let t0 = Instant::now();
    let pilots = PilotBook::round_robin(2, 2, 1.0).unwrap();
    let opts = MaxMinOptions::default();
    let (mut worst_ratio, mut worst_spread): (f64, f64) = (f64::INFINITY, 0.0);
    for i in 0..20 {
        let mut rng = Seed(400 + i).rng();
        let beta = DMatrix::from_fn(2, 2, |_, _| 10f64.powf(rng.random_range(-2.0..0.0)));
        let gamma = gamma_uncorrelated(&beta, &pilots, 10.0);
        let p = PowerProblem::cb_downlink(&beta, &gamma, 100.0, 1, None).unwrap();
        let sol = solve_maxmin_bisection(&p, &opts).unwrap();
        let grid = grid_maxmin_2x2(&p, 1e-3).unwrap();
        worst_ratio = worst_ratio.min(sol.min_sinr / grid.value);
        let hi = sol.user_sinr.iter().cloned().fold(0.0, f64::max);
        worst_spread = worst_spread.max(hi / sol.min_sinr - 1.0);
    }
    let dt = t0.elapsed();
    let pass = worst_ratio >= 0.99 && worst_spread <= opts.tol && dt < Duration::from_secs(300);
    verdict(
        4,
        "max-min against a 1e-3 grid",
        pass,
        format!("worst ratio {worst_ratio:.5}, SINR spread {worst_spread:.1e}, {dt:.1?}"),
    );
}

#[test]
fn criterion_05_uplink_level_ordering() {
    let c = config(
        "scenario = \"UL\"\nseeds = 50\nmaster_seed = 5\ntrials = 2000\n\
         [ul]\nm = 10\nk = 5\nn = 2\ntau_up = 5\narea_side = 500.0\ncombiner = \"MR\"\n",
    );
    let t = run_experiment(&c).unwrap();
    let pooled = |s: &str| median(&t.select(s, "se").flat_map(|r| r.values.clone()).collect::<Vec<_>>());
    let l: Vec<f64> = ["L1", "L2", "L3", "L4"].iter().map(|s| pooled(s)).collect();
    let pass = l[3] >= l[2] && l[2] >= l[1] && l[1] >= l[0];
    verdict(5, "uplink levels", pass, format!("median per-UE SE L1..L4 = {:.4} {:.4} {:.4} {:.4}", l[0], l[1], l[2], l[3]));
}

fn nafd_config(workers: usize) -> ExperimentConfig {
    config(&format!(
        "preset = \"fig4\"\nseeds = 50\nmaster_seed = 6\nworkers = {workers}\nschemes = [\"NAFD\", \"FD\", \"HD\"]\n\
         [nafd]\nm = 10\narea_side = 500.0\n"
    ))
}

#[test]
fn criterion_06_nafd_beats_fd_and_hd() {
    let t0 = Instant::now();
    let t = run_experiment(&nafd_config(1)).unwrap();
    let dt = t0.elapsed();
    let m = medians(&t, "se", sum);
    let (nafd, fd, hd) = (get(&m, "NAFD"), get(&m, "FD"), get(&m, "HD"));
    let pass = nafd > fd && nafd > hd && dt < Duration::from_secs(600);
    verdict(6, "NAFD ordering", pass, format!("median sum SE NAFD {nafd:.3}, FD {fd:.3}, HD {hd:.3}, {dt:.1?}"));
}

#[test]
fn criterion_07_noma_pairing_ordering() {
    let c = config(
        "preset = \"fig6\"\nseeds = 50\nmaster_seed = 7\nschemes = [\"NOMA-far\", \"NOMA-random\", \"NOMA-close\"]\n\
         [noma]\nm = 10\nl = 10\nk_l = 2\nn = 8\narea_side = 707.1\n",
    );
    let t = run_experiment(&c).unwrap();
    let pooled = |s: &str| median(&t.select(s, "se").flat_map(|r| r.values.clone()).collect::<Vec<_>>());
    let (far, rnd, close) = (pooled("NOMA-far"), pooled("NOMA-random"), pooled("NOMA-close"));
    let pass = far >= rnd && rnd >= close;
    verdict(7, "NOMA pairing", pass, format!("median per-UE SE far {far:.4}, random {rnd:.4}, close {close:.4}"));
}

#[test]
fn criterion_08_eh_mode_selection() {
    let c = config(
        "preset = \"fig8\"\nseeds = 50\nmaster_seed = 8\nschemes = [\"Optimal\", \"Benchmark1\", \"Benchmark2\"]\n\
         [eh]\nm = 10\nn = 4\nk_d = 2\nl = 3\nenergy_floor = 2e-9\nse_floor = 1.0\n",
    );
    let t = run_experiment(&c).unwrap();
    let m = medians(&t, "harvested_j", sum);
    let (o, b1, b2) = (get(&m, "Optimal"), get(&m, "Benchmark1"), get(&m, "Benchmark2"));
    let pass = o > b1 && b1 > b2;
    verdict(8, "EH ordering", pass, format!("median sum energy Optimal {o:.3e}, B1 {b1:.3e}, B2 {b2:.3e} J"));
}

#[test]
fn criterion_09_ppzf_secrecy_beats_mrt() {
    let c = config(
        "preset = \"fig9\"\nseeds = 50\nmaster_seed = 9\n[pls]\nm_values = [24]\n[pls.setup]\nk = 10\narea_side = 1000.0\n",
    );
    let t = run_experiment(&c).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for r in [20, 40] {
        let case = format!("M24_N10_r{r}");
        let pick = |s: &str| {
            median(&t.select(s, "secrecy_se").filter(|x| x.case == case).map(|x| x.values[0]).collect::<Vec<_>>())
        };
        let (ppzf, mrt) = (pick("PPZF"), pick("MRT"));
        pass &= ppzf > mrt;
        detail.push(format!("r={r}: PPZF {ppzf:.3} vs MRT {mrt:.3}"));
    }
    let nonneg = t.rows.iter().filter(|r| r.metric == "secrecy_se").all(|r| r.values.iter().all(|v| *v >= 0.0));
    verdict(9, "secrecy ordering", pass && nonneg, format!("{}, all R_sec >= 0: {nonneg}", detail.join(", ")));
}

#[test]
fn criterion_10_ris_assisted_ordering() {
    let c = config(
        "preset = \"fig10\"\nseeds = 50\nmaster_seed = 10\n[ris]\nm = 20\nn_ris = 64\nk = 5\np_direct = 0.2\narea_side = 447.2\n",
    );
    let t = run_experiment(&c).unwrap();
    let ul = medians(&t, "ul_se", sum);
    let dl = medians(&t, "dl_se", sum);
    let (a, n, b) = ("RIS-CF-mMIMO", "CF-mMIMO", "RIS-CF-mMIMO-blocked");
    let pass = get(&ul, a) > get(&ul, n) && get(&ul, a) > get(&ul, b) && get(&dl, a) > get(&dl, n) && get(&dl, a) > get(&dl, b);
    verdict(
        10,
        "RIS ordering",
        pass,
        format!(
            "UL {:.3}/{:.3}/{:.3}, DL {:.3}/{:.3}/{:.3} (RIS/no-RIS/blocked)",
            get(&ul, a),
            get(&ul, n),
            get(&ul, b),
            get(&dl, a),
            get(&dl, n),
            get(&dl, b)
        ),
    );
}

#[test]
fn criterion_11_rectifier_shape() {
    let p = EhParams::default();
    let zero = p.harvested(0.0) == 0.0;
    let grid: Vec<f64> = (0..1000).map(|i| p.harvested(i as f64 * 1e-3)).collect();
    let mono = grid.windows(2).all(|w| w[1] >= w[0]);
    let sat = p.harvested(1e6 * p.chi);
    let pass = zero && mono && sat > 0.999 * p.phi;
    verdict(11, "rectifier", pass, format!("Phi(0) = {}, monotone {mono}, Phi(1e6 chi)/phi = {:.6}", p.harvested(0.0), sat / p.phi));
}

#[test]
fn criterion_12_worker_count_invariance() {
    let a = run_experiment(&nafd_config(1)).unwrap().to_csv();
    let b = run_experiment(&nafd_config(8)).unwrap().to_csv();
    let ul = |w: usize| {
        config(&format!(
            "scenario = \"UL\"\nseeds = 4\nworkers = {w}\ntrials = 3000\n[ul]\nm = 6\nk = 3\nn = 2\ntau_up = 2\n"
        ))
    };
    let c = run_experiment(&ul(1)).unwrap().to_csv();
    let d = run_experiment(&ul(8)).unwrap().to_csv();
    let pass = a == b && c == d;
    verdict(12, "determinism across workers", pass, format!("NAFD {} bytes, UL {} bytes", a.len(), c.len()));
}
