//! Simultaneous wireless information and power transfer. Each AP serves
//! either the information users (IUs) with PZF or the energy users (EUs)
//! with protective MRT, and EUs harvest through a saturating rectifier.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{clean_gamma, log2_1p, Radio};
use crate::netmodel::{drop_network, three_slope_between, PathLossParams};
use crate::powerctrl::{solve_maxmin_bisection, MaxMinOptions, PowerGroup, PowerProblem, SinrLink};
use crate::{Error, Result, Seed};

pub const MAX_EXHAUSTIVE_APS: usize = 12;

/// Logistic rectifier constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EhParams {
    /// Saturation output in watts.
    pub phi: f64,
    pub xi: f64,
    pub chi: f64,
}

impl Default for EhParams {
    fn default() -> Self {
        EhParams { phi: 0.024, xi: 150.0, chi: 0.014 }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl EhParams {
    pub fn omega(&self) -> f64 {
        logistic(-self.xi * self.chi)
    }

    pub fn psi(&self, e: f64) -> f64 {
        self.phi * logistic(self.xi * (e - self.chi))
    }

    /// DC output for RF input `e` watts; zero at zero input.
    pub fn harvested(&self, e: f64) -> f64 {
        let e = e.max(0.0);
        self.phi * (logistic(self.xi * (e - self.chi)) - logistic(-self.xi * self.chi)) / (1.0 - self.omega())
    }

    pub fn derivative(&self, e: f64) -> f64 {
        let s = logistic(self.xi * (e.max(0.0) - self.chi));
        self.phi * self.xi * s * (1.0 - s) / (1.0 - self.omega())
    }
}

pub fn eh_harvested(e_in: f64, params: &EhParams) -> f64 {
    params.harvested(e_in)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EhSetup {
    pub m: usize,
    pub n: usize,
    pub k_d: usize,
    pub l: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub p_p: f64,
    pub p_d: f64,
    /// Per-EU harvested-energy floor in joules.
    pub energy_floor: f64,
    /// Per-IU SE floor in bit/s/Hz.
    pub se_floor: f64,
    /// Seconds over which harvested power is accumulated.
    pub window_s: f64,
    pub rectifier: EhParams,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for EhSetup {
    fn default() -> Self {
        EhSetup {
            m: 50,
            n: 10,
            k_d: 4,
            l: 4,
            area_side: 100.0,
            tau_c: 200,
            p_p: 0.1,
            p_d: 1.0,
            energy_floor: 100e-6,
            se_floor: 1.0,
            window_s: 1.0,
            rectifier: EhParams::default(),
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

impl EhSetup {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k_d + self.l == 0 || self.n <= self.k_d {
            return Err(Error::invalid("EH needs APs, UEs and more antennas than IUs"));
        }
        if self.k_d + self.l >= self.tau_c {
            return Err(Error::invalid("pilots must fit in tau_c"));
        }
        if !(self.p_p > 0.0 && self.p_d > 0.0 && self.window_s > 0.0 && self.area_side > 0.0) {
            return Err(Error::invalid("powers, window and area must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EhScalars {
    /// M×K_d, raw gains.
    pub beta_iu: DMatrix<f64>,
    /// M×L, raw gains.
    pub beta_eu: DMatrix<f64>,
    pub gamma_iu: DMatrix<f64>,
    pub gamma_eu: DMatrix<f64>,
    pub n: usize,
    pub p_d: f64,
    pub rho_d: f64,
    /// `τ_d/τ_c`.
    pub prelog: f64,
    pub window_s: f64,
    pub rectifier: EhParams,
}

impl EhScalars {
    pub fn draw(setup: &EhSetup, seed: Seed) -> Result<Self> {
        setup.validate()?;
        let (kd, l) = (setup.k_d, setup.l);
        let geo = drop_network(setup.m, kd + l, setup.area_side, seed.named("geometry"))?;
        let beta = three_slope_between(&geo.ap_positions, &geo.ue_positions, &geo, &setup.pathloss, seed.named("beta"))?;
        let tau = kd + l;
        let gamma = clean_gamma(&beta, tau as f64 * setup.radio.snr(setup.p_p));
        Ok(EhScalars {
            beta_iu: beta.columns(0, kd).into_owned(),
            beta_eu: beta.columns(kd, l).into_owned(),
            gamma_iu: gamma.columns(0, kd).into_owned(),
            gamma_eu: gamma.columns(kd, l).into_owned(),
            n: setup.n,
            p_d: setup.p_d,
            rho_d: setup.radio.snr(setup.p_d),
            prelog: (setup.tau_c - tau) as f64 / setup.tau_c as f64,
            window_s: setup.window_s,
            rectifier: setup.rectifier,
        })
    }

    pub fn m(&self) -> usize {
        self.beta_iu.nrows()
    }

    pub fn k_d(&self) -> usize {
        self.beta_iu.ncols()
    }

    pub fn l(&self) -> usize {
        self.beta_eu.ncols()
    }

    fn dof(&self) -> f64 {
        (self.n - self.k_d()) as f64
    }
}

/// Mode bits (`true` = I-AP) and power coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct EhDesign {
    pub a: Vec<bool>,
    /// M×K_d.
    pub eta_i: DMatrix<f64>,
    /// M×L.
    pub eta_e: DMatrix<f64>,
}

impl EhDesign {
    /// Equal shares at full power: `1/K_d` on I-APs, `1/L` on E-APs.
    pub fn uniform(sc: &EhScalars, a: Vec<bool>) -> Self {
        let (m, kd, l) = (sc.m(), sc.k_d(), sc.l());
        let eta_i = DMatrix::from_fn(m, kd, |mm, _| if a[mm] { 1.0 / kd as f64 } else { 0.0 });
        let eta_e = DMatrix::from_fn(m, l, |mm, _| if a[mm] { 0.0 } else { 1.0 / l as f64 });
        EhDesign { a, eta_i, eta_e }
    }

    fn loads(&self) -> Vec<f64> {
        (0..self.a.len()).map(|m| if self.a[m] { self.eta_i.row(m).sum() } else { self.eta_e.row(m).sum() }).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (m, &a) in self.a.iter().enumerate() {
            let (si, se) = (self.eta_i.row(m).sum(), self.eta_e.row(m).sum());
            let (ci, ce) = if a { (1.0, 0.0) } else { (0.0, 1.0) };
            if si > ci + 1e-9 || se > ce + 1e-9 || self.eta_i.row(m).iter().chain(self.eta_e.row(m).iter()).any(|x| *x < 0.0) {
                return Err(Error::invalid(format!("AP {m} violates its mode power limits")));
            }
        }
        Ok(())
    }
}

/// IU SINRs with PZF at I-APs and leakage from E-APs.
pub fn eh_iu_sinr(sc: &EhScalars, d: &EhDesign) -> Vec<f64> {
    let loads = d.loads();
    (0..sc.k_d())
        .map(|k| {
            let sig: f64 = (0..sc.m()).filter(|&m| d.a[m]).map(|m| (d.eta_i[(m, k)] * sc.gamma_iu[(m, k)]).sqrt()).sum();
            let den: f64 =
                (0..sc.m()).map(|m| loads[m] * (sc.beta_iu[(m, k)] - sc.gamma_iu[(m, k)])).sum::<f64>() * sc.rho_d + 1.0;
            sc.rho_d * sc.dof() * sig * sig / den
        })
        .collect()
}

pub fn eh_iu_se(sc: &EhScalars, d: &EhDesign) -> Vec<f64> {
    eh_iu_sinr(sc, d).into_iter().map(|s| sc.prelog * log2_1p(s)).collect()
}

/// Mean RF power in watts at every EU: the coherent E-AP beam plus the
/// total transmit power of every AP through `β`.
pub fn eh_received_rf(sc: &EhScalars, d: &EhDesign) -> Vec<f64> {
    let loads = d.loads();
    (0..sc.l())
        .map(|l| {
            let coh: f64 =
                (0..sc.m()).filter(|&m| !d.a[m]).map(|m| (d.eta_e[(m, l)] * sc.dof() * sc.gamma_eu[(m, l)]).sqrt()).sum();
            let spread: f64 = (0..sc.m()).map(|m| loads[m] * sc.beta_eu[(m, l)]).sum();
            sc.p_d * (coh * coh + spread)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EhEval {
    pub iu_se: Vec<f64>,
    pub rf_w: Vec<f64>,
    /// Joules over the accumulation window.
    pub harvested_j: Vec<f64>,
    pub sum_harvested_j: f64,
    pub feasible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EhFloors {
    pub energy_j: f64,
    pub se: f64,
}

impl EhFloors {
    pub fn of(setup: &EhSetup) -> Self {
        EhFloors { energy_j: setup.energy_floor, se: setup.se_floor }
    }

    /// Energy floor as a DC power over the harvesting window.
    pub fn power_w(&self, sc: &EhScalars) -> f64 {
        self.energy_j / (sc.window_s * sc.prelog)
    }
}

pub fn eh_evaluate(sc: &EhScalars, d: &EhDesign, floors: EhFloors) -> EhEval {
    let iu_se = eh_iu_se(sc, d);
    let rf_w = eh_received_rf(sc, d);
    let t = sc.window_s * sc.prelog;
    let harvested_j: Vec<f64> = rf_w.iter().map(|e| t * sc.rectifier.harvested(*e)).collect();
    let feasible = iu_se.iter().all(|s| *s >= floors.se) && harvested_j.iter().all(|h| *h >= floors.energy_j);
    EhEval { sum_harvested_j: harvested_j.iter().sum(), iu_se, rf_w, harvested_j, feasible }
}

/// Weight of the shortfall penalty that pushes every EU towards its floor.
const FLOOR_PENALTY: f64 = 1000.0;

/// Splits each E-AP's budget (scaled by `s`) across EUs by projected
/// gradient ascent on the summed rectifier output, less a penalty on any
/// shortfall below `floor_w`. I-APs run at full power.
fn optimise_energy_split(sc: &EhScalars, a: &[bool], s: f64, floor_w: f64) -> DMatrix<f64> {
    let (m, l) = (sc.m(), sc.l());
    let mut out = DMatrix::zeros(m, l);
    if l == 0 || a.iter().all(|x| *x) {
        return out;
    }
    let r = DMatrix::from_fn(m, l, |mm, ll| (sc.dof() * sc.gamma_eu[(mm, ll)]).sqrt());
    let base: Vec<f64> =
        (0..l).map(|ll| sc.p_d * (0..m).map(|mm| if a[mm] { 1.0 } else { s } * sc.beta_eu[(mm, ll)]).sum::<f64>()).collect();
    let value = |x: &DMatrix<f64>| -> (f64, Vec<f64>) {
        let coh: Vec<f64> = (0..l).map(|ll| (0..m).map(|mm| x[(mm, ll)] * r[(mm, ll)]).sum()).collect();
        let f = (0..l)
            .map(|ll| {
                let h = sc.rectifier.harvested(base[ll] + sc.p_d * s * coh[ll] * coh[ll]);
                h - FLOOR_PENALTY * (floor_w - h).max(0.0)
            })
            .sum();
        (f, coh)
    };
    let project = |x: &mut DMatrix<f64>| {
        for mm in 0..m {
            if a[mm] {
                x.row_mut(mm).fill(0.0);
                continue;
            }
            x.row_mut(mm).iter_mut().for_each(|v| *v = v.max(0.0));
            let nrm = x.row(mm).norm();
            if nrm > 0.0 {
                x.row_mut(mm).iter_mut().for_each(|v| *v /= nrm);
            } else {
                x.row_mut(mm).fill(1.0 / (l as f64).sqrt());
            }
        }
    };
    let mut uniform = DMatrix::from_element(m, l, 1.0 / (l as f64).sqrt());
    project(&mut uniform);
    let mut greedy = DMatrix::zeros(m, l);
    for mm in 0..m {
        let best = (0..l).max_by(|&x, &y| r[(mm, x)].total_cmp(&r[(mm, y)])).unwrap();
        greedy[(mm, best)] = 1.0;
    }
    project(&mut greedy);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for mut x in [uniform, greedy] {
        let (mut f, mut coh) = value(&x);
        for _ in 0..200 {
            let mut g = DMatrix::from_fn(m, l, |mm, ll| {
                let e = base[ll] + sc.p_d * s * coh[ll] * coh[ll];
                let w = if sc.rectifier.harvested(e) < floor_w { 1.0 + FLOOR_PENALTY } else { 1.0 };
                w * sc.rectifier.derivative(e) * sc.p_d * s * 2.0 * coh[ll] * r[(mm, ll)]
            });
            let gmax = g.amax();
            if !(gmax > 0.0) {
                break;
            }
            g /= gmax;
            let mut t = 0.5;
            let mut moved = false;
            while t > 1e-6 {
                let mut y = &x + &g * t;
                project(&mut y);
                let (fy, cy) = value(&y);
                if fy > f + 1e-12 * f.abs() {
                    x = y;
                    f = fy;
                    coh = cy;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| f > b.0) {
            best = Some((f, x));
        }
    }
    let x = best.unwrap().1;
    for mm in 0..m {
        for ll in 0..l {
            out[(mm, ll)] = s * x[(mm, ll)].powi(2);
        }
    }
    out
}

/// Max-min IU split on the I-APs with E-APs at load `s`.
fn iu_maxmin(sc: &EhScalars, a: &[bool], s: f64, opts: &MaxMinOptions) -> Result<DMatrix<f64>> {
    let (m, kd) = (sc.m(), sc.k_d());
    let var = |mm: usize, k: usize| mm * kd + k;
    let groups = (0..m)
        .map(|mm| PowerGroup { members: (0..kd).map(|k| (var(mm, k), 1.0)).collect(), budget: if a[mm] { 1.0 } else { 0.0 } })
        .collect();
    let links = (0..kd)
        .map(|k| {
            let leak = |mm: usize| sc.rho_d * (sc.beta_iu[(mm, k)] - sc.gamma_iu[(mm, k)]);
            SinrLink {
                signal: (0..m).filter(|&mm| a[mm]).map(|mm| (var(mm, k), (sc.rho_d * sc.dof() * sc.gamma_iu[(mm, k)]).sqrt())).collect(),
                coherent: Vec::new(),
                load_gain: (0..m).filter(|&mm| a[mm]).map(|mm| (mm, leak(mm))).collect(),
                noise: 1.0 + s * (0..m).filter(|&mm| !a[mm]).map(leak).sum::<f64>(),
            }
        })
        .collect();
    let p = PowerProblem { n_vars: m * kd, links, users: (0..kd).map(|k| vec![k]).collect(), groups, floors: None };
    let sol = solve_maxmin_bisection(&p, opts)?;
    let mut eta = DMatrix::from_fn(m, kd, |mm, k| sol.mu[var(mm, k)].powi(2));
    // Unused budget on an I-AP is spread evenly; it only adds harvested energy.
    for mm in (0..m).filter(|&mm| a[mm]) {
        let spare = 1.0 - eta.row(mm).sum();
        if spare > 0.0 {
            eta.row_mut(mm).iter_mut().for_each(|v| *v += spare / kd as f64);
        }
    }
    Ok(eta)
}

/// Inner power design for fixed modes: E-APs at the largest load `s ≤ 1`
/// that still lets the IUs reach the SE floor, energy split optimised,
/// IU split by max-min when equal shares fall short. Returns the design and
/// whether every floor holds.
pub fn optimise_powers(sc: &EhScalars, a: &[bool], floors: EhFloors, opts: &MaxMinOptions) -> Result<(EhDesign, bool)> {
    let kd = sc.k_d();
    let build = |s: f64| -> Result<(EhDesign, bool)> {
        let mut d = EhDesign::uniform(sc, a.to_vec());
        d.eta_e = optimise_energy_split(sc, a, s, floors.power_w(sc));
        if kd > 0 && a.iter().any(|x| *x) && eh_iu_se(sc, &d).iter().any(|x| *x < floors.se) {
            let mut alt = d.clone();
            alt.eta_i = iu_maxmin(sc, a, s, opts)?;
            if eh_iu_se(sc, &alt).iter().cloned().fold(f64::INFINITY, f64::min)
                > eh_iu_se(sc, &d).iter().cloned().fold(f64::INFINITY, f64::min)
            {
                d = alt;
            }
        }
        let ok = eh_iu_se(sc, &d).iter().all(|x| *x >= floors.se);
        Ok((d, ok))
    };
    let (full, ok) = build(1.0)?;
    if ok || a.iter().all(|x| !*x) {
        let f = eh_evaluate(sc, &full, floors).feasible;
        return Ok((full, f));
    }
    let (zero, ok0) = build(0.0)?;
    if !ok0 {
        return Ok((zero, false));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = zero;
    for _ in 0..12 {
        let s = 0.5 * (lo + hi);
        let (d, ok) = build(s)?;
        if ok {
            lo = s;
            best = d;
        } else {
            hi = s;
        }
    }
    let f = eh_evaluate(sc, &best, floors).feasible;
    Ok((best, f))
}

fn key(ev: &EhEval) -> (bool, f64, f64) {
    (ev.feasible, ev.sum_harvested_j, ev.iu_se.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn better(a: (bool, f64, f64), b: (bool, f64, f64)) -> bool {
    (a.0 && !b.0) || (a.0 == b.0 && (a.1 > b.1 || (a.1 == b.1 && a.2 > b.2)))
}

/// Enumerates every mode vector. Candidates are visited in decreasing order
/// of their full-power energy, which bounds what the inner design can reach,
/// and the scan stops once no remaining bound can win.
pub fn exhaustive_design(sc: &EhScalars, floors: EhFloors, opts: &MaxMinOptions) -> Result<(EhDesign, EhEval)> {
    let m = sc.m();
    if m > MAX_EXHAUSTIVE_APS {
        return Err(Error::TooLarge(format!("exhaustive mode search over {m} APs (limit {MAX_EXHAUSTIVE_APS})")));
    }
    if sc.l() == 0 {
        let (d, _) = optimise_powers(sc, &vec![true; m], floors, opts)?;
        let ev = eh_evaluate(sc, &d, floors);
        return Ok((d, ev));
    }
    let mut cands: Vec<(f64, Vec<bool>)> = (0u32..(1 << m))
        .map(|mask| {
            let a: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
            let mut d = EhDesign::uniform(sc, a.clone());
            d.eta_e = optimise_energy_split(sc, &a, 1.0, floors.power_w(sc));
            (eh_evaluate(sc, &d, floors).sum_harvested_j, a)
        })
        .collect();
    cands.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut best: Option<(EhDesign, EhEval)> = None;
    for (bound, a) in cands {
        if let Some((_, ev)) = &best {
            if ev.feasible && bound < ev.sum_harvested_j {
                break;
            }
        }
        let (d, _) = optimise_powers(sc, &a, floors, opts)?;
        let ev = eh_evaluate(sc, &d, floors);
        if best.as_ref().is_none_or(|(_, b)| better(key(&ev), key(b))) {
            best = Some((d, ev));
        }
    }
    Ok(best.expect("at least one mode vector"))
}

/// Random modes with at least one AP of each kind when both user kinds exist.
pub fn random_modes(sc: &EhScalars, seed: Seed) -> Vec<bool> {
    let m = sc.m();
    let mut rng = seed.rng();
    loop {
        let a: Vec<bool> = (0..m).map(|_| rng.random::<bool>()).collect();
        let need_i = sc.k_d() > 0 && !a.iter().any(|x| *x);
        let need_e = sc.l() > 0 && !a.iter().any(|x| !*x);
        if m < 2 || !(need_i || need_e) {
            return a;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EhScheme {
    Optimal,
    /// Random modes with optimised powers.
    Bench1,
    /// Random modes with equal shares.
    Bench2,
    /// All APs, information and energy in separate half frames.
    Bench3,
}

impl EhScheme {
    pub const ALL: [EhScheme; 4] = [EhScheme::Optimal, EhScheme::Bench1, EhScheme::Bench2, EhScheme::Bench3];

    pub fn label(self) -> &'static str {
        match self {
            EhScheme::Optimal => "Optimal",
            EhScheme::Bench1 => "Benchmark1",
            EhScheme::Bench2 => "Benchmark2",
            EhScheme::Bench3 => "Benchmark3",
        }
    }
}

pub fn run_eh_scheme(sc: &EhScalars, scheme: EhScheme, floors: EhFloors, seed: Seed, opts: &MaxMinOptions) -> Result<EhEval> {
    match scheme {
        EhScheme::Optimal => Ok(exhaustive_design(sc, floors, opts)?.1),
        EhScheme::Bench1 => {
            let (d, _) = optimise_powers(sc, &random_modes(sc, seed.named("modes")), floors, opts)?;
            Ok(eh_evaluate(sc, &d, floors))
        }
        EhScheme::Bench2 => Ok(eh_evaluate(sc, &EhDesign::uniform(sc, random_modes(sc, seed.named("modes"))), floors)),
        EhScheme::Bench3 => {
            let m = sc.m();
            let info = EhDesign::uniform(sc, vec![true; m]);
            let mut power = EhDesign::uniform(sc, vec![false; m]);
            power.eta_e = optimise_energy_split(sc, &power.a, 1.0, 2.0 * floors.power_w(sc));
            let a = eh_evaluate(sc, &info, floors);
            let b = eh_evaluate(sc, &power, floors);
            let iu_se: Vec<f64> = a.iu_se.iter().map(|s| 0.5 * s).collect();
            let harvested_j: Vec<f64> = a.harvested_j.iter().zip(&b.harvested_j).map(|(x, y)| 0.5 * (x + y)).collect();
            let rf_w = a.rf_w.iter().zip(&b.rf_w).map(|(x, y)| 0.5 * (x + y)).collect();
            let feasible = iu_se.iter().all(|s| *s >= floors.se) && harvested_j.iter().all(|h| *h >= floors.energy_j);
            Ok(EhEval { sum_harvested_j: harvested_j.iter().sum(), iu_se, rf_w, harvested_j, feasible })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectifier_shape() {
        let p = EhParams::default();
        assert_eq!(p.harvested(0.0), 0.0);
        assert!(p.harvested(1e6 * p.chi) > 0.999 * p.phi);
        let mid = p.phi * (0.5 - p.omega()) / (1.0 - p.omega());
        assert!((p.harvested(p.chi) - mid).abs() < 1e-15);
        assert!((p.psi(p.chi) - 0.5 * p.phi).abs() < 1e-15);
        let mut last = 0.0;
        for i in 1..=1000 {
            let v = p.harvested(i as f64 * 1e-4);
            assert!(v > last);
            last = v;
        }
    }

    fn small(l: usize, seed: u64) -> EhScalars {
        let setup = EhSetup { m: 6, n: 4, k_d: 2, l, area_side: 60.0, ..EhSetup::default() };
        EhScalars::draw(&setup, Seed(seed)).unwrap()
    }

    #[test]
    fn no_information_aps_means_no_information() {
        let sc = small(2, 1);
        let d = EhDesign::uniform(&sc, vec![false; 6]);
        assert!(eh_iu_se(&sc, &d).iter().all(|s| *s == 0.0));
    }

    #[test]
    fn hand_evaluated_iu_se() {
        let sc = EhScalars {
            beta_iu: DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.4, 0.9, 0.2, 0.3]),
            beta_eu: DMatrix::from_row_slice(3, 1, &[0.1, 0.2, 0.7]),
            gamma_iu: DMatrix::from_row_slice(3, 2, &[0.8, 0.3, 0.2, 0.6, 0.1, 0.2]),
            gamma_eu: DMatrix::from_row_slice(3, 1, &[0.05, 0.1, 0.5]),
            n: 4,
            p_d: 2.0,
            rho_d: 5.0,
            prelog: 0.9,
            window_s: 1.0,
            rectifier: EhParams::default(),
        };
        let d = EhDesign {
            a: vec![true, true, false],
            eta_i: DMatrix::from_row_slice(3, 2, &[0.3, 0.4, 0.5, 0.2, 0.0, 0.0]),
            eta_e: DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 0.6]),
        };
        d.validate().unwrap();
        let want0 = {
            let sig = (0.3f64 * 0.8).sqrt() + (0.5f64 * 0.2).sqrt();
            let den = 5.0 * (0.7 * 0.2 + 0.7 * 0.2 + 0.6 * 0.1) + 1.0;
            0.9 * (1.0 + 5.0 * 2.0 * sig * sig / den).log2()
        };
        assert!((eh_iu_se(&sc, &d)[0] - want0).abs() < 1e-12);
        let mut no_e = d.clone();
        no_e.eta_e.fill(0.0);
        let s = eh_iu_sinr(&sc, &no_e)[1];
        let sig = (0.4f64 * 0.3).sqrt() + (0.2f64 * 0.6).sqrt();
        let want1 = 5.0 * 2.0 * sig * sig / (5.0 * (0.7 * 0.2 + 0.7 * 0.3) + 1.0);
        assert!((s - want1).abs() < 1e-12 * want1);
        let rf = eh_received_rf(&sc, &d)[0];
        let want_rf = 2.0 * (0.6 * 2.0 * 0.5 + 0.7 * 0.1 + 0.7 * 0.2 + 0.6 * 0.7);
        assert!((rf - want_rf).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_dominates_random() {
        let floors = EhFloors { energy_j: 0.0, se: 0.1 };
        let opts = MaxMinOptions::default();
        for seed in 0..3 {
            let sc = small(2, 30 + seed);
            let (d, best) = exhaustive_design(&sc, floors, &opts).unwrap();
            d.validate().unwrap();
            let b1 = run_eh_scheme(&sc, EhScheme::Bench1, floors, Seed(seed), &opts).unwrap();
            assert!(best.sum_harvested_j >= 0.0 && b1.sum_harvested_j >= 0.0);
            if b1.feasible {
                assert!(best.feasible && best.sum_harvested_j >= b1.sum_harvested_j * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn without_energy_users_every_ap_informs() {
        let sc = small(0, 5);
        let (d, ev) = exhaustive_design(&sc, EhFloors { energy_j: 0.0, se: 0.0 }, &MaxMinOptions::default()).unwrap();
        assert!(d.a.iter().all(|x| *x));
        assert_eq!(ev.sum_harvested_j, 0.0);
    }
}
