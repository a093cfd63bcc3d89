//! Deterministic execution of an experiment over (seed, scheme) tasks.

use rayon::prelude::*;

use super::config::{DlSetup, ExperimentConfig, Scenario, UlSetup};
use super::table::{ResultRow, ResultTable};
use crate::casestudies::eh::{run_eh_scheme, EhFloors, EhScalars, EhScheme};
use crate::casestudies::nafd::{run_nafd_scheme, NafdScalars, NafdScheme};
use crate::casestudies::noma::{noma_drop_se, Pairing};
use crate::casestudies::pls::pls_secrecy;
use crate::casestudies::pls::PlsScalars;
use crate::casestudies::ris::{run_ris_scheme, RisDrop, RisScheme};
use crate::dlink::{
    dl_se_montecarlo, empirical_norms, lsf_groups, uniform_cb_eta, uniform_cb_se, uniform_eta_from_norms, DlMcSettings,
    DlPower, PrecoderScheme, UserGroups,
};
use crate::netmodel::{drop_network, three_slope_beta, LargeScaleModel};
use crate::powerctrl::MaxMinOptions;
use crate::training::{gamma_uncorrelated, PilotBook};
use crate::ulink::{
    ul_moments_montecarlo, ul_se_level1, ul_se_level2, ul_se_level3_optimal, ul_se_level4, CombinerScheme, ServingSets,
    UlSettings,
};
use crate::{Error, Result, Seed};

/// Seeds per batch between partial flushes.
pub const FLUSH_EVERY: u64 = 10;

/// Seed of drop `index` under a master seed.
pub fn drop_seed(master: u64, index: u64) -> Seed {
    Seed(master).child(index)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_experiment_with(cfg, |_, _| Ok(()))
}

/// Runs every task, calling `flush(table_so_far, seeds_done)` after each batch
/// of [`FLUSH_EVERY`] seeds. Rows are ordered by seed, then scheme, then case
/// and metric, whatever the worker count.
pub fn run_experiment_with<F>(cfg: &ExperimentConfig, mut flush: F) -> Result<ResultTable>
where
    F: FnMut(&ResultTable, u64) -> Result<()>,
{
    cfg.validate()?;
    let scenario = cfg.scenario()?;
    let schemes = cfg.selected_schemes()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    let mut table = ResultTable::default();
    let mut start = 0;
    while start < cfg.seeds {
        let end = (start + FLUSH_EVERY).min(cfg.seeds);
        let tasks: Vec<(u64, &str)> =
            (start..end).flat_map(|s| schemes.iter().map(move |sch| (s, *sch))).collect();
        let batch: Vec<Result<Vec<ResultRow>>> = pool.install(|| {
            tasks
                .par_iter()
                .map(|&(s, sch)| {
                    run_task(cfg, scenario, sch, s).map_err(|e| Error::Seeded { seed: s, source: Box::new(e) })
                })
                .collect()
        });
        for rows in batch {
            table.rows.extend(rows?);
        }
        flush(&table, end)?;
        start = end;
    }
    check_floors(&table, scenario)?;
    Ok(table)
}

/// The optimising schemes must meet their floors on at least one drop.
fn check_floors(table: &ResultTable, scenario: Scenario) -> Result<()> {
    let scheme = match scenario {
        Scenario::Nafd => "NAFD",
        Scenario::Eh => "Optimal",
        _ => return Ok(()),
    };
    let flags: Vec<f64> = table.select(scheme, "feasible").map(|r| r.values[0]).collect();
    if !flags.is_empty() && flags.iter().all(|f| *f == 0.0) {
        return Err(Error::Infeasible(format!("{scheme} misses its floors on all {} drops", flags.len())));
    }
    Ok(())
}

fn run_task(cfg: &ExperimentConfig, scenario: Scenario, scheme: &str, index: u64) -> Result<Vec<ResultRow>> {
    let seed = drop_seed(cfg.master_seed, index);
    let row = |case: &str, metric: &str, v: Vec<f64>| ResultRow::new(index, scheme, case, metric, v);
    match scenario {
        Scenario::Dl => Ok(vec![row("", "se", dl_task(&cfg.dl, scheme, cfg.trials, seed)?)]),
        Scenario::Ul => Ok(vec![row("", "se", ul_task(&cfg.ul, scheme, cfg.trials, seed)?)]),
        Scenario::Nafd => {
            let sch = NafdScheme::parse(scheme).ok_or_else(|| Error::config("schemes", scheme))?;
            let sc = NafdScalars::draw(&cfg.nafd, seed)?;
            let o = run_nafd_scheme(&sc, sch, cfg.nafd.se_floor, seed)?;
            let all: Vec<f64> = o.se.dl_se.iter().chain(&o.se.ul_se).cloned().collect();
            Ok(vec![
                row("", "se", all),
                row("", "se_dl", o.se.dl_se.clone()),
                row("", "se_ul", o.se.ul_se.clone()),
                row("", "feasible", vec![o.feasible as u8 as f64]),
            ])
        }
        Scenario::Noma => {
            let p = Pairing::ALL.into_iter().find(|p| p.label() == scheme);
            let se = noma_drop_se(&cfg.noma, p, seed, &MaxMinOptions::default())?;
            Ok(vec![row("", "se", se)])
        }
        Scenario::Pls => {
            let mut out = Vec::new();
            for (case, setup) in cfg.pls.cases()? {
                let sc = PlsScalars::draw(&setup, seed)?;
                let groups = if scheme == "PPZF" {
                    sc.ppzf_groups(setup.strong_fraction)
                } else {
                    UserGroups::all_weak(sc.m(), sc.k())
                };
                let r = pls_secrecy(&sc, &groups, &sc.uniform_eta())?;
                out.push(row(&case, "secrecy_se", vec![r.secrecy_se]));
                out.push(row(&case, "sinr_eve", vec![r.sinr_eve]));
            }
            Ok(out)
        }
        Scenario::Eh => {
            let sch = EhScheme::ALL.into_iter().find(|s| s.label() == scheme).ok_or_else(|| Error::config("schemes", scheme))?;
            let sc = EhScalars::draw(&cfg.eh, seed)?;
            let e = run_eh_scheme(&sc, sch, EhFloors::of(&cfg.eh), seed, &MaxMinOptions::default())?;
            Ok(vec![
                row("", "harvested_j", e.harvested_j),
                row("", "iu_se", e.iu_se),
                row("", "feasible", vec![e.feasible as u8 as f64]),
            ])
        }
        Scenario::Ris => {
            let sch = RisScheme::ALL.into_iter().find(|s| s.label() == scheme).ok_or_else(|| Error::config("schemes", scheme))?;
            let drop = RisDrop::draw(&cfg.ris, seed)?;
            let se = run_ris_scheme(&cfg.ris, &drop, sch, seed)?;
            Ok(vec![row("", "ul_se", se.ul_se), row("", "dl_se", se.dl_se)])
        }
        Scenario::Lemmas => {
            let checks = crate::lemmas::run_all(cfg.trials, seed)?;
            Ok(checks
                .into_iter()
                .flat_map(|(name, r)| {
                    [
                        ResultRow::new(index, scheme, &name, "statistic", vec![r.statistic]),
                        ResultRow::new(index, scheme, &name, "target", vec![r.target]),
                        ResultRow::new(index, scheme, &name, "z_score", vec![r.z_score()]),
                        ResultRow::new(index, scheme, &name, "passed", vec![r.passed as u8 as f64]),
                    ]
                })
                .collect())
        }
    }
}

/// Per-UE DL SE with equal power shares. CB may use the closed form.
pub fn dl_task(d: &DlSetup, scheme: &str, trials: usize, seed: Seed) -> Result<Vec<f64>> {
    let sch = PrecoderScheme::parse(scheme).ok_or_else(|| Error::config("schemes", scheme))?;
    let geo = drop_network(d.m, d.k, d.area_side, seed.named("geometry"))?;
    let beta = three_slope_beta(&geo, &d.pathloss, seed.named("beta"))?;
    let noise = d.radio.noise_w();
    let (rho_p, rho_d) = (d.radio.snr(d.p_p), d.radio.snr(d.p_d));
    let pilots = PilotBook::round_robin(d.k, d.tau_up, d.p_p)?;
    let prelog = (d.tau_c - d.tau_up) as f64 / d.tau_c as f64;
    if sch == PrecoderScheme::Cb && d.closed_form_cb {
        return Ok(uniform_cb_se(&beta, &pilots, d.n, rho_p, rho_d, prelog));
    }
    let lsm = LargeScaleModel::uncorrelated(beta.clone(), d.n, noise)?;
    let groups = matches!(sch, PrecoderScheme::Pzf | PrecoderScheme::Ppzf)
        .then(|| lsf_groups(&beta, d.strong_fraction, Some(d.n.saturating_sub(1).max(1))));
    let cb_eta = uniform_cb_eta(&gamma_uncorrelated(&beta, &pilots, rho_p), d.n);
    let eta = if sch == PrecoderScheme::Cb {
        cb_eta
    } else {
        let norms = empirical_norms(&lsm, &pilots, sch, groups.as_ref(), trials.min(200), seed.named("norms"))?;
        uniform_eta_from_norms(&norms, &cb_eta)
    };
    let settings = DlMcSettings { scheme: sch, groups, trials, prelog };
    let mc = dl_se_montecarlo(&lsm, &pilots, &DlPower { eta, rho_d }, &settings, seed.named("channels"))?;
    Ok(mc.report.per_ue_se)
}

/// Per-UE UL SE at level `L1`..`L4`. Levels 1 to 3 share one moment estimate.
pub fn ul_task(u: &UlSetup, scheme: &str, trials: usize, seed: Seed) -> Result<Vec<f64>> {
    let geo = drop_network(u.m, u.k, u.area_side, seed.named("geometry"))?;
    let beta = three_slope_beta(&geo, &u.pathloss, seed.named("beta"))?;
    let lsm = LargeScaleModel::uncorrelated(beta, u.n, u.radio.noise_w())?;
    let pilots = PilotBook::round_robin(u.k, u.tau_up, u.p_p)?;
    let serving = ServingSets::all_serve(u.m, u.k);
    let prelog = (u.tau_c - u.tau_up) as f64 / u.tau_c as f64;
    let st = UlSettings { rho_u: u.radio.snr(u.p_u), varsigma: vec![1.0; u.k], trials, prelog };
    let mc = seed.named("channels");
    if scheme == "L4" {
        return Ok(ul_se_level4(&lsm, &pilots, &serving, CombinerScheme::Cmmse, &st, mc)?.per_ue_se);
    }
    let mom = ul_moments_montecarlo(&lsm, &pilots, &serving, u.combiner, &st, mc)?;
    let rep = match scheme {
        "L1" => ul_se_level1(&mom, prelog),
        "L2" => ul_se_level2(&mom, prelog),
        "L3" => ul_se_level3_optimal(&mom, prelog)?,
        other => return Err(Error::config("schemes", other)),
    };
    Ok(rep.per_ue_se)
}

#[cfg(test)]
mod tests {
    use super::super::config::{parse_config, Format};
    use super::*;

    #[test]
    fn single_seed_single_row() {
        let c = parse_config("scenario = \"DL\"\ntrials = 1\n", Format::Toml).unwrap();
        let t = run_experiment(&c).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.rows[0].values.len(), c.dl.k);
    }

    #[test]
    fn rows_are_seeds_times_schemes() {
        let c = parse_config(
            "scenario = \"UL\"\nseeds = 3\ntrials = 50\n[ul]\nm = 4\nk = 2\nn = 2\ntau_up = 2\n",
            Format::Toml,
        )
        .unwrap();
        let t = run_experiment(&c).unwrap();
        assert_eq!(t.len(), 3 * 4);
        assert_eq!(t.schemes(), vec!["L1", "L2", "L3", "L4"]);
        assert!(t.rows.windows(2).all(|w| w[0].seed <= w[1].seed));
    }

    #[test]
    fn partial_flushes_every_ten_seeds() {
        let c = parse_config("scenario = \"PLS\"\nseeds = 23\n[pls.setup]\nm = 6\nn = 4\nk = 3\n", Format::Toml).unwrap();
        let mut seen = Vec::new();
        let t = run_experiment_with(&c, |t, done| {
            seen.push((done, t.len()));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![(10, 40), (20, 80), (23, 92)]);
        assert_eq!(t.len(), 92);
    }

    #[test]
    fn engine_errors_carry_the_seed() {
        // Twelve APs is fine; thirteen exceeds the exhaustive search.
        let c = parse_config("scenario = \"NAFD\"\nschemes = [\"NAFD\"]\n[nafd]\nm = 13\n", Format::Toml).unwrap();
        let e = run_experiment(&c).unwrap_err();
        assert!(matches!(e, Error::Seeded { seed: 0, .. }), "{e}");
        assert!(matches!(e.root(), Error::TooLarge(_)));
    }

    #[test]
    fn unmeetable_floors_are_infeasible() {
        let text = "scenario = \"EH\"\nseeds = 2\nschemes = [\"SCHEME\"]\n[eh]\nm = 4\nn = 2\nk_d = 1\nl = 1\nenergy_floor = 1.0\n";
        let c = parse_config(&text.replace("SCHEME", "Optimal"), Format::Toml).unwrap();
        let e = run_experiment(&c).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        let c = parse_config(&text.replace("SCHEME", "Benchmark2"), Format::Toml).unwrap();
        let t = run_experiment(&c).unwrap();
        assert!(t.select("Benchmark2", "feasible").all(|r| r.values[0] == 0.0));
    }
}
