//! Single-antenna cell-free network assisted by one RIS. Aggregated
//! channels are estimated by linear MMSE, the RIS phases target the total
//! NMSE, and UL/DL SEs follow the closed forms with all trace cross terms.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log2_1p, Radio};
use crate::linalg::{CMat, C64};
use crate::netmodel::{drop_network, three_slope_between, PathLossParams};
use crate::training::PilotBook;
use crate::{Error, Result, Seed};

/// `sin(πx)/(πx)`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let p = std::f64::consts::PI * x;
        p.sin() / p
    }
}

/// Isotropic-scattering correlation of a planar array:
/// `R_ij = sinc(2 d_ij / λ)`, elements laid out row by row on a
/// `⌈√N⌉`-wide grid with `spacing` wavelengths between neighbours.
pub fn ris_correlation(n: usize, spacing: f64) -> DMatrix<f64> {
    let w = (n as f64).sqrt().ceil().max(1.0) as usize;
    let pos = |i: usize| ((i % w) as f64, (i / w) as f64);
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (pos(i), pos(j));
        sinc(2.0 * spacing * (a.0 - b.0).hypot(a.1 - b.1))
    })
}

/// RIS with correlation `R_m = a_m R` towards AP `m` and `R̃_k = b_k R`
/// towards UE `k`.
#[derive(Clone, Debug)]
pub struct RisModel {
    pub shape: DMatrix<f64>,
    pub ap_gain: Vec<f64>,
    pub ue_gain: Vec<f64>,
    pub phases: Vec<f64>,
}

/// Phase-dependent trace summaries: `tr(Θ_{mk}) = a_m b_k t1` and
/// `tr(Θ_{mk}Θ_{m'k'}) = a_m b_k a_{m'} b_{k'} t2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RisTraces {
    pub t1: f64,
    pub t2: f64,
}

impl RisModel {
    pub fn n(&self) -> usize {
        self.shape.nrows()
    }

    /// No surface at all: every reflected term vanishes.
    pub fn absent(m: usize, k: usize) -> Self {
        RisModel { shape: DMatrix::zeros(0, 0), ap_gain: vec![0.0; m], ue_gain: vec![0.0; k], phases: Vec::new() }
    }

    fn phase_vec(&self) -> Vec<C64> {
        self.phases.iter().map(|t| C64::from_polar(1.0, *t)).collect()
    }

    /// `φᴴ (R ⊙ R) φ` for the given phases.
    pub fn t1_of(&self, phases: &[f64]) -> f64 {
        let n = self.n();
        let v: Vec<C64> = phases.iter().map(|t| C64::from_polar(1.0, *t)).collect();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += v[i].conj() * self.shape[(i, j)] * self.shape[(j, i)] * v[j];
            }
        }
        s.re
    }

    pub fn traces(&self) -> RisTraces {
        let n = self.n();
        if n == 0 {
            return RisTraces { t1: 0.0, t2: 0.0 };
        }
        let v = self.phase_vec();
        let r = self.shape.map(|x| C64::new(x, 0.0));
        let a = CMat::from_fn(n, n, |i, j| v[i].conj() * r[(i, j)] * v[j]);
        let q = &a * &r;
        let mut t2 = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                t2 += q[(i, j)] * q[(j, i)];
            }
        }
        let t1: C64 = (0..n).map(|i| q[(i, i)]).sum();
        RisTraces { t1: t1.re, t2: t2.re.max(0.0) }
    }
}

/// Estimation statistics of the aggregated channels.
#[derive(Clone, Debug)]
pub struct RisEstimate {
    pub delta: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub nmse: DMatrix<f64>,
}

fn estimate_with(beta: &DMatrix<f64>, ris: &RisModel, t1: f64, pilots: &PilotBook, rho_p: f64) -> RisEstimate {
    let (m, k) = beta.shape();
    let tr = pilots.tau_up as f64 * rho_p;
    let delta = DMatrix::from_fn(m, k, |mm, kk| beta[(mm, kk)] + ris.ap_gain[mm] * ris.ue_gain[kk] * t1);
    let c = DMatrix::from_fn(m, k, |mm, kk| {
        let tot: f64 = pilots.copilots(kk).iter().map(|&j| delta[(mm, j)]).sum();
        tr.sqrt() * delta[(mm, kk)] / (tr * tot + 1.0)
    });
    let gamma = DMatrix::from_fn(m, k, |mm, kk| tr.sqrt() * delta[(mm, kk)] * c[(mm, kk)]);
    let nmse = DMatrix::from_fn(m, k, |mm, kk| {
        let d = delta[(mm, kk)];
        if d > 0.0 { (1.0 - gamma[(mm, kk)] / d).clamp(0.0, 1.0) } else { 0.0 }
    });
    RisEstimate { delta, c, gamma, nmse }
}

pub fn ris_estimate(ris: &RisModel, beta: &DMatrix<f64>, pilots: &PilotBook, rho_p: f64) -> RisEstimate {
    estimate_with(beta, ris, ris.traces().t1, pilots, rho_p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Equal,
    Random,
    CoordinateDescent,
}

pub const PHASE_GRID: usize = 64;
pub const MAX_SWEEPS: usize = 20;

fn nmse_objective(beta: &DMatrix<f64>, ris: &RisModel, t1: f64, pilots: &PilotBook, rho_p: f64) -> f64 {
    estimate_with(beta, ris, t1, pilots, rho_p).nmse.sum()
}

/// Total NMSE for the current phases.
pub fn ris_nmse_objective(ris: &RisModel, beta: &DMatrix<f64>, pilots: &PilotBook, rho_p: f64) -> f64 {
    nmse_objective(beta, ris, ris.t1_of(&ris.phases), pilots, rho_p)
}

/// Cyclic coordinate descent over a uniform phase grid from `start`.
/// Returns the phases and the objective after every sweep.
pub fn coordinate_descent(
    ris: &RisModel,
    beta: &DMatrix<f64>,
    pilots: &PilotBook,
    rho_p: f64,
    start: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = ris.n();
    let s = ris.shape.map(|x| x * x);
    let mut th = start.to_vec();
    let mut v: Vec<C64> = th.iter().map(|t| C64::from_polar(1.0, *t)).collect();
    let mut t1 = ris.t1_of(&th);
    let mut obj = nmse_objective(beta, ris, t1, pilots, rho_p);
    let mut trace = vec![obj];
    let grid: Vec<f64> =
        (0..PHASE_GRID).map(|i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / PHASE_GRID as f64).collect();
    for _ in 0..MAX_SWEEPS {
        let before = obj;
        for i in 0..n {
            // t1 = const + 2 Re(conj(v_i) w_i) with w_i = Σ_{j≠i} S_ij v_j.
            let w: C64 = (0..n).filter(|&j| j != i).map(|j| v[j] * s[(i, j)]).sum();
            let rest = t1 - 2.0 * (v[i].conj() * w).re;
            for &g in &grid {
                let cand = rest + 2.0 * (C64::from_polar(1.0, g).conj() * w).re;
                let o = nmse_objective(beta, ris, cand, pilots, rho_p);
                if o < obj - 1e-15 * obj.abs().max(1.0) {
                    obj = o;
                    t1 = cand;
                    th[i] = g;
                    v[i] = C64::from_polar(1.0, g);
                }
            }
        }
        trace.push(obj);
        if obj >= before {
            break;
        }
    }
    (th, trace)
}

pub fn ris_phase_design(
    ris: &RisModel,
    beta: &DMatrix<f64>,
    pilots: &PilotBook,
    rho_p: f64,
    mode: PhaseMode,
    seed: Seed,
) -> Vec<f64> {
    let n = ris.n();
    match mode {
        PhaseMode::Equal => vec![0.0; n],
        PhaseMode::Random => random_phases(n, seed),
        PhaseMode::CoordinateDescent => coordinate_descent(ris, beta, pilots, rho_p, &vec![0.0; n]).0,
    }
}

pub fn random_phases(n: usize, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n).map(|_| std::f64::consts::PI * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// `β_{mk} a_{mk}` with `a_{mk} ~ Bernoulli(p_direct)`.
pub fn ris_blocking(beta_bar: &DMatrix<f64>, p_direct: f64, seed: Seed) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&p_direct) {
        return Err(Error::invalid("p_direct must lie in [0, 1]"));
    }
    let mut rng = seed.rng();
    Ok(beta_bar.map(|b| if rng.random::<f64>() < p_direct { b } else { 0.0 }))
}

/// Everything the SINR expressions need for one configuration.
#[derive(Clone, Debug)]
pub struct RisScalars {
    pub beta: DMatrix<f64>,
    pub ris: RisModel,
    pub traces: RisTraces,
    pub est: RisEstimate,
    pub pilots: PilotBook,
    pub rho_p: f64,
    pub rho_u: f64,
    pub rho_d: f64,
}

impl RisScalars {
    pub fn new(beta: DMatrix<f64>, ris: RisModel, pilots: PilotBook, rho_p: f64, rho_u: f64, rho_d: f64) -> Self {
        let traces = ris.traces();
        let est = estimate_with(&beta, &ris, traces.t1, &pilots, rho_p);
        RisScalars { beta, ris, traces, est, pilots, rho_p, rho_u, rho_d }
    }

    pub fn m(&self) -> usize {
        self.beta.nrows()
    }

    pub fn k(&self) -> usize {
        self.beta.ncols()
    }

    /// `tr(Θ_{mk})`.
    pub fn tr_theta(&self, m: usize, k: usize) -> f64 {
        self.ris.ap_gain[m] * self.ris.ue_gain[k] * self.traces.t1
    }

    /// `tr(Θ_{mk} Θ_{m'k'})`.
    pub fn tr_cross(&self, m: usize, k: usize, m2: usize, k2: usize) -> f64 {
        let g = &self.ris;
        g.ap_gain[m] * g.ue_gain[k] * g.ap_gain[m2] * g.ue_gain[k2] * self.traces.t2
    }

    /// Conjugate beamforming at full power: `η_{mk} = 1/Σ_{k'} γ_{mk'}`.
    pub fn full_power_eta(&self) -> DMatrix<f64> {
        let g = &self.est.gamma;
        DMatrix::from_fn(self.m(), self.k(), |m, _| {
            let s = g.row(m).sum();
            if s > 0.0 { 1.0 / s } else { 0.0 }
        })
    }
}

pub fn ris_ul_sinr(sc: &RisScalars, varsigma: &[f64]) -> Vec<f64> {
    let (m, k) = (sc.m(), sc.k());
    let (g, d, c) = (&sc.est.gamma, &sc.est.delta, &sc.est.c);
    let tp = sc.pilots.tau_up as f64 * sc.rho_p;
    let ru = sc.rho_u;
    (0..k)
        .map(|u| {
            let pk = sc.pilots.copilots(u);
            let sg: f64 = (0..m).map(|mm| g[(mm, u)]).sum();
            let num = ru * varsigma[u] * sg * sg;
            let mut den = 0.0;
            for kp in 0..k {
                for mm in 0..m {
                    den += ru * varsigma[kp] * g[(mm, u)] * d[(mm, kp)];
                }
            }
            if sc.traces.t2 > 0.0 {
                let mut t = 0.0;
                for kp in 0..k {
                    for &k2 in &pk {
                        for mm in 0..m {
                            for m2 in 0..m {
                                t += varsigma[kp] * c[(mm, u)] * c[(m2, u)] * sc.tr_cross(mm, kp, m2, k2);
                            }
                        }
                    }
                }
                den += tp * ru * t;
                let mut t = 0.0;
                for &kp in &pk {
                    for mm in 0..m {
                        t += varsigma[kp] * c[(mm, u)].powi(2) * sc.tr_cross(mm, kp, mm, kp);
                    }
                }
                den += tp * ru * t;
            }
            den += sg;
            for &kp in pk.iter().filter(|&&j| j != u) {
                let s: f64 = (0..m).map(|mm| c[(mm, u)] * d[(mm, kp)]).sum();
                den += tp * ru * varsigma[kp] * s * s;
            }
            if num == 0.0 { 0.0 } else { num / den }
        })
        .collect()
}

pub fn ris_dl_sinr(sc: &RisScalars, eta: &DMatrix<f64>) -> Vec<f64> {
    let (m, k) = (sc.m(), sc.k());
    let (g, d, c) = (&sc.est.gamma, &sc.est.delta, &sc.est.c);
    let tp = sc.pilots.tau_up as f64 * sc.rho_p;
    let rd = sc.rho_d;
    (0..k)
        .map(|u| {
            let sig: f64 = (0..m).map(|mm| eta[(mm, u)].sqrt() * g[(mm, u)]).sum();
            let num = rd * sig * sig;
            let mut den = 1.0;
            for kp in 0..k {
                for mm in 0..m {
                    den += rd * eta[(mm, kp)] * g[(mm, kp)] * d[(mm, u)];
                }
            }
            if sc.traces.t2 > 0.0 {
                let mut t = 0.0;
                for kp in 0..k {
                    for &k2 in &sc.pilots.copilots(kp) {
                        for mm in 0..m {
                            for m2 in 0..m {
                                t += (eta[(mm, kp)] * eta[(m2, kp)]).sqrt()
                                    * c[(mm, kp)]
                                    * c[(m2, kp)]
                                    * sc.tr_cross(mm, u, m2, k2);
                            }
                        }
                    }
                }
                den += tp * rd * t;
                let mut t = 0.0;
                for &kp in &sc.pilots.copilots(u) {
                    for mm in 0..m {
                        t += eta[(mm, kp)] * c[(mm, kp)].powi(2) * sc.tr_cross(mm, u, mm, u);
                    }
                }
                den += tp * rd * t;
            }
            for kp in sc.pilots.copilots(u).into_iter().filter(|&j| j != u) {
                let s: f64 = (0..m).map(|mm| eta[(mm, kp)].sqrt() * c[(mm, kp)] * d[(mm, u)]).sum();
                den += tp * rd * s * s;
            }
            if num == 0.0 { 0.0 } else { num / den }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RisSe {
    pub ul_se: Vec<f64>,
    pub dl_se: Vec<f64>,
    pub sum_ul: f64,
    pub sum_dl: f64,
}

pub fn ris_se(sc: &RisScalars, eta: &DMatrix<f64>, varsigma: &[f64], prelog_ul: f64, prelog_dl: f64) -> RisSe {
    let ul_se: Vec<f64> = ris_ul_sinr(sc, varsigma).into_iter().map(|s| prelog_ul * log2_1p(s)).collect();
    let dl_se: Vec<f64> = ris_dl_sinr(sc, eta).into_iter().map(|s| prelog_dl * log2_1p(s)).collect();
    RisSe { sum_ul: ul_se.iter().sum(), sum_dl: dl_se.iter().sum(), ul_se, dl_se }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RisSetup {
    pub m: usize,
    pub k: usize,
    pub n_ris: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub tau_up: usize,
    pub p_direct: f64,
    pub p_p: f64,
    pub p_u: f64,
    pub p_d: f64,
    /// Reflected-path gain `10^((intercept − slope·log10 d)/10)`, d in metres.
    pub ris_intercept_db: f64,
    pub ris_slope: f64,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub phase_mode: PhaseMode,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for RisSetup {
    fn default() -> Self {
        RisSetup {
            m: 100,
            k: 10,
            n_ris: 900,
            area_side: 1000.0,
            tau_c: 200,
            tau_up: 5,
            p_direct: 0.2,
            p_p: 0.1,
            p_u: 0.1,
            p_d: 0.5,
            ris_intercept_db: -20.0,
            ris_slope: 22.0,
            element_spacing: 0.25,
            phase_mode: PhaseMode::Equal,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

impl RisSetup {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.tau_up == 0 || self.tau_up >= self.tau_c {
            return Err(Error::invalid("RIS needs APs, UEs and 0 < tau_up < tau_c"));
        }
        if !(0.0..=1.0).contains(&self.p_direct) {
            return Err(Error::invalid("p_direct must lie in [0, 1]"));
        }
        if !(self.p_p > 0.0 && self.p_u >= 0.0 && self.p_d >= 0.0 && self.area_side > 0.0) {
            return Err(Error::invalid("powers and area must be nonnegative"));
        }
        Ok(())
    }

    /// `τ_u/τ_c = τ_d/τ_c`, the data phase split evenly.
    pub fn prelog(&self) -> f64 {
        0.5 * (self.tau_c - self.tau_up) as f64 / self.tau_c as f64
    }

    fn reflect_gain(&self, d: f64) -> f64 {
        10f64.powf((self.ris_intercept_db - self.ris_slope * d.max(1.0).log10()) / 10.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RisScheme {
    Assisted,
    NoRis,
    Blocked,
}

impl RisScheme {
    pub const ALL: [RisScheme; 3] = [RisScheme::Assisted, RisScheme::NoRis, RisScheme::Blocked];

    pub fn label(self) -> &'static str {
        match self {
            RisScheme::Assisted => "RIS-CF-mMIMO",
            RisScheme::NoRis => "CF-mMIMO",
            RisScheme::Blocked => "RIS-CF-mMIMO-blocked",
        }
    }
}

/// One drop: geometry, unblocked gains, blocking mask and RIS gains.
#[derive(Clone, Debug)]
pub struct RisDrop {
    pub beta_bar: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub surface: RisModel,
}

impl RisDrop {
    pub fn draw(setup: &RisSetup, seed: Seed) -> Result<Self> {
        setup.validate()?;
        let geo = drop_network(setup.m, setup.k, setup.area_side, seed.named("geometry"))?;
        let beta_bar =
            three_slope_between(&geo.ap_positions, &geo.ue_positions, &geo, &setup.pathloss, seed.named("beta"))?;
        let beta = ris_blocking(&beta_bar, setup.p_direct, seed.named("blocking"))?;
        let centre = [0.5 * setup.area_side, 0.5 * setup.area_side];
        let ap_gain = geo.ap_positions.iter().map(|p| setup.reflect_gain(geo.distance(*p, centre))).collect();
        let ue_gain = geo.ue_positions.iter().map(|p| setup.reflect_gain(geo.distance(*p, centre))).collect();
        let surface =
            RisModel { shape: ris_correlation(setup.n_ris, setup.element_spacing), ap_gain, ue_gain, phases: vec![0.0; setup.n_ris] };
        Ok(RisDrop { beta_bar, beta, surface })
    }
}

pub fn run_ris_scheme(setup: &RisSetup, drop: &RisDrop, scheme: RisScheme, seed: Seed) -> Result<RisSe> {
    let (m, k) = drop.beta.shape();
    let pilots = PilotBook::round_robin(k, setup.tau_up, setup.p_p)?;
    let rho_p = setup.radio.snr(setup.p_p);
    let (beta, mut surface) = match scheme {
        RisScheme::Assisted => (drop.beta.clone(), drop.surface.clone()),
        RisScheme::NoRis => (drop.beta.clone(), RisModel::absent(m, k)),
        RisScheme::Blocked => (DMatrix::zeros(m, k), drop.surface.clone()),
    };
    if surface.n() > 0 {
        surface.phases = ris_phase_design(&surface, &beta, &pilots, rho_p, setup.phase_mode, seed.named("phases"));
    }
    let sc = RisScalars::new(beta, surface, pilots, rho_p, setup.radio.snr(setup.p_u), setup.radio.snr(setup.p_d));
    let eta = sc.full_power_eta();
    Ok(ris_se(&sc, &eta, &vec![1.0; k], setup.prelog(), setup.prelog()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_model(n: usize, a: Vec<f64>, b: Vec<f64>) -> RisModel {
        RisModel { shape: DMatrix::identity(n, n), ap_gain: a, ue_gain: b, phases: vec![0.0; n] }
    }

    #[test]
    fn identity_trace() {
        let ris = diag_model(7, vec![1.0], vec![1.0]);
        let beta = DMatrix::from_element(1, 1, 0.3);
        let pb = PilotBook::round_robin(1, 1, 0.1).unwrap();
        let e = ris_estimate(&ris, &beta, &pb, 2.0);
        assert!((e.delta[(0, 0)] - 7.3).abs() < 1e-12);
        assert_eq!(ris.traces(), RisTraces { t1: 7.0, t2: 7.0 });
    }

    #[test]
    fn hand_estimate_two_elements() {
        let ris = RisModel {
            shape: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            ap_gain: vec![0.5, 2.0],
            ue_gain: vec![0.4, 1.0],
            phases: vec![0.3, -1.2],
        };
        let beta = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 0.0]);
        let pb = PilotBook::new(1, vec![0, 0], 0.1).unwrap();
        let rho = 3.0;
        let e = ris_estimate(&ris, &beta, &pb, rho);
        let d = [[1.0 + 0.5 * 0.4 * 2.0, 0.2 + 0.5 * 2.0], [0.1 + 2.0 * 0.4 * 2.0, 2.0 * 2.0]];
        for m in 0..2 {
            for k in 0..2 {
                let c = rho.sqrt() * d[m][k] / (rho * (d[m][0] + d[m][1]) + 1.0);
                assert!((e.delta[(m, k)] - d[m][k]).abs() < 1e-12);
                assert!((e.c[(m, k)] - c).abs() < 1e-12);
                assert!((e.gamma[(m, k)] - rho.sqrt() * d[m][k] * c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_limit() {
        let ris = diag_model(4, vec![1.0], vec![0.5]);
        let beta = DMatrix::from_element(1, 1, 1.0);
        let pb = PilotBook::round_robin(1, 1, 0.1).unwrap();
        let e = ris_estimate(&ris, &beta, &pb, 1e6 * 3.0);
        assert!(e.nmse[(0, 0)] < 1e-3);
    }

    #[test]
    fn single_element_phase_is_irrelevant() {
        let ris = RisModel { shape: ris_correlation(1, 0.25), ap_gain: vec![1.0, 0.5], ue_gain: vec![0.3], phases: vec![0.0] };
        let beta = DMatrix::from_row_slice(2, 1, &[0.4, 0.2]);
        let pb = PilotBook::round_robin(1, 1, 0.1).unwrap();
        let base = ris_nmse_objective(&ris, &beta, &pb, 5.0);
        for i in 0..PHASE_GRID {
            let mut r = ris.clone();
            r.phases = vec![-3.0 + 6.0 * i as f64 / PHASE_GRID as f64];
            assert!((ris_nmse_objective(&r, &beta, &pb, 5.0) - base).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_phases_are_optimal_without_direct_links() {
        let ris = RisModel { shape: ris_correlation(9, 0.25), ap_gain: vec![1.0, 0.3], ue_gain: vec![0.2, 0.6, 0.1], phases: vec![0.0; 9] };
        let beta = DMatrix::zeros(2, 3);
        let pb = PilotBook::round_robin(3, 2, 0.1).unwrap();
        let eq = ris_nmse_objective(&ris, &beta, &pb, 2.0);
        let start = random_phases(9, Seed(3));
        let (th, trace) = coordinate_descent(&ris, &beta, &pb, 2.0, &start);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        let mut r = ris.clone();
        r.phases = th;
        assert!(eq <= ris_nmse_objective(&r, &beta, &pb, 2.0) + 1e-9);
    }

    #[test]
    fn descent_beats_its_random_start() {
        let ris = RisModel { shape: ris_correlation(16, 0.25), ap_gain: vec![1.0, 0.3], ue_gain: vec![0.2, 0.6], phases: vec![0.0; 16] };
        let beta = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 2.0]);
        let pb = PilotBook::round_robin(2, 1, 0.1).unwrap();
        let start = random_phases(16, Seed(8));
        let (_, trace) = coordinate_descent(&ris, &beta, &pb, 1.0, &start);
        assert!(trace.last().unwrap() <= &trace[0]);
    }

    #[test]
    fn blocking_extremes_and_rate() {
        let b = DMatrix::from_element(4, 5, 0.7);
        assert_eq!(ris_blocking(&b, 1.0, Seed(1)).unwrap(), b);
        assert!(ris_blocking(&b, 0.0, Seed(1)).unwrap().iter().all(|x| *x == 0.0));
        let big = DMatrix::from_element(1000, 100, 1.0);
        let frac = ris_blocking(&big, 0.2, Seed(2)).unwrap().sum() / 1e5;
        assert!((frac - 0.2).abs() < 0.005);
        assert!(ris_blocking(&b, 1.5, Seed(1)).is_err());
    }

    #[test]
    fn trace_factorisation_matches_dense_product() {
        let n = 5;
        let ris = RisModel { shape: ris_correlation(n, 0.25), ap_gain: vec![0.7, 1.3], ue_gain: vec![0.4, 2.0], phases: random_phases(n, Seed(11)) };
        let v: Vec<C64> = ris.phases.iter().map(|t| C64::from_polar(1.0, *t)).collect();
        let phi = CMat::from_fn(n, n, |i, j| if i == j { v[i] } else { C64::new(0.0, 0.0) });
        let r = ris.shape.map(|x| C64::new(x, 0.0));
        let theta = |m: usize, k: usize| phi.adjoint() * (&r * C64::new(ris.ap_gain[m], 0.0)) * &phi * (&r * C64::new(ris.ue_gain[k], 0.0));
        let t = ris.traces();
        let sc = RisScalars::new(DMatrix::zeros(2, 2), ris.clone(), PilotBook::round_robin(2, 2, 0.1).unwrap(), 1.0, 1.0, 1.0);
        for (m, k, m2, k2) in [(0, 0, 1, 1), (1, 0, 0, 1), (1, 1, 1, 1)] {
            let dense = (theta(m, k) * theta(m2, k2)).trace();
            assert!((dense.re - sc.tr_cross(m, k, m2, k2)).abs() < 1e-10 * dense.norm().max(1.0));
            assert!(dense.im.abs() < 1e-10);
        }
        assert!((theta(1, 0).trace().re - 1.3 * 0.4 * t.t1).abs() < 1e-10);
    }

    #[test]
    fn zero_powers_give_zero_se() {
        let setup = RisSetup { m: 4, k: 3, n_ris: 4, area_side: 200.0, tau_up: 3, ..RisSetup::default() };
        let d = RisDrop::draw(&setup, Seed(1)).unwrap();
        let pb = PilotBook::round_robin(3, 3, 0.1).unwrap();
        let sc = RisScalars::new(d.beta.clone(), d.surface.clone(), pb, 10.0, 10.0, 10.0);
        let se = ris_se(&sc, &DMatrix::zeros(4, 3), &[0.0; 3], 0.4, 0.4);
        assert_eq!(se.sum_ul, 0.0);
        assert_eq!(se.sum_dl, 0.0);
    }

    #[test]
    fn without_surface_matches_cell_free_closed_form() {
        let beta = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.2, 0.1, 0.8, 0.5, 0.4, 0.2, 0.9]);
        let pb = PilotBook::new(2, vec![0, 1, 0], 0.1).unwrap();
        let (rp, ru, rd) = (2.0, 3.0, 4.0);
        let sc = RisScalars::new(beta.clone(), RisModel::absent(3, 3), pb.clone(), rp, ru, rd);
        let g = &sc.est.gamma;
        let vs = [1.0, 0.5, 0.7];
        let ul = ris_ul_sinr(&sc, &vs);
        for k in 0..3 {
            let sg: f64 = (0..3).map(|m| g[(m, k)]).sum();
            let mut den = sg;
            for kp in 0..3 {
                den += ru * vs[kp] * (0..3).map(|m| g[(m, k)] * beta[(m, kp)]).sum::<f64>();
                if kp != k && pb.assignment[kp] == pb.assignment[k] {
                    let s: f64 = (0..3).map(|m| g[(m, k)] * beta[(m, kp)] / beta[(m, k)]).sum();
                    den += ru * vs[kp] * s * s;
                }
            }
            let want = ru * vs[k] * sg * sg / den;
            assert!((ul[k] - want).abs() < 1e-10 * want, "{k}");
        }
        let eta = sc.full_power_eta();
        let dl = ris_dl_sinr(&sc, &eta);
        for k in 0..3 {
            let sig: f64 = (0..3).map(|m| eta[(m, k)].sqrt() * g[(m, k)]).sum();
            let mut den = 1.0 + rd * (0..3).map(|m| beta[(m, k)] * (0..3).map(|kp| eta[(m, kp)] * g[(m, kp)]).sum::<f64>()).sum::<f64>();
            for kp in 0..3 {
                if kp != k && pb.assignment[kp] == pb.assignment[k] {
                    let s: f64 = (0..3).map(|m| eta[(m, kp)].sqrt() * g[(m, kp)] * beta[(m, k)] / beta[(m, kp)]).sum();
                    den += rd * s * s;
                }
            }
            let want = rd * sig * sig / den;
            assert!((dl[k] - want).abs() < 1e-10 * want, "{k}");
        }
    }
}
