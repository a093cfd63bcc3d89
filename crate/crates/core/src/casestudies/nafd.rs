//! Network-assisted full duplex. Every AP either transmits to DL UEs or
//! receives from UL UEs in the same band. FD and HD networks use the same
//! expressions with different antenna counts, interference terms and prelogs.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log2_1p, Radio};
use crate::netmodel::{drop_network, three_slope_between, PathLossParams};
use crate::powerctrl::{solve_sumse_pgd, PgdOptions, PowerGroup, PowerProblem, SinrLink};
use crate::training::{gamma_uncorrelated, PilotBook};
use crate::{Error, Result, Seed};

/// Largest network the exhaustive mode search accepts.
pub const MAX_EXHAUSTIVE_APS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NafdSetup {
    pub m: usize,
    pub k_d: usize,
    pub k_u: usize,
    pub n: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub tau_up: usize,
    pub p_u: f64,
    pub p_p: f64,
    pub p_d: f64,
    /// Residual self-interference over noise, in dB.
    pub si_db: f64,
    /// Transmit and receive antennas of FD and HD APs.
    pub n_t: usize,
    pub n_r: usize,
    /// Per-UE SE floor used to rank mode assignments.
    pub se_floor: f64,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for NafdSetup {
    fn default() -> Self {
        NafdSetup {
            m: 40,
            k_d: 5,
            k_u: 5,
            n: 2,
            area_side: 1000.0,
            tau_c: 200,
            tau_up: 10,
            p_u: 0.1,
            p_p: 0.1,
            p_d: 1.0,
            si_db: 50.0,
            n_t: 1,
            n_r: 1,
            se_floor: 0.2,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

impl NafdSetup {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k_d + self.k_u == 0 || self.n_t == 0 || self.n_r == 0 {
            return Err(Error::invalid("NAFD needs APs, antennas and at least one UE"));
        }
        if self.tau_up == 0 || self.tau_up >= self.tau_c {
            return Err(Error::invalid("need 0 < tau_up < tau_c"));
        }
        if !(self.p_u > 0.0 && self.p_p > 0.0 && self.p_d > 0.0 && self.area_side > 0.0) {
            return Err(Error::invalid("powers and area must be positive"));
        }
        Ok(())
    }
}

/// Large-scale quantities of one drop, in noise-normalised units.
#[derive(Clone, Debug)]
pub struct NafdScalars {
    /// M×K_d.
    pub beta_dl: DMatrix<f64>,
    /// M×K_u.
    pub beta_ul: DMatrix<f64>,
    /// M×M inter-AP gains; the diagonal is the residual self-interference.
    pub beta_ap: DMatrix<f64>,
    /// K_d×K_u UE-to-UE gains.
    pub beta_du: DMatrix<f64>,
    pub gamma_dl: DMatrix<f64>,
    pub gamma_ul: DMatrix<f64>,
    pub n: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub rho_u: f64,
    pub rho_d: f64,
    /// `(τ_c − τ_up)/τ_c`.
    pub prelog: f64,
}

impl NafdScalars {
    pub fn m(&self) -> usize {
        self.beta_dl.nrows()
    }

    pub fn k_d(&self) -> usize {
        self.beta_dl.ncols()
    }

    pub fn k_u(&self) -> usize {
        self.beta_ul.ncols()
    }

    /// Drops a network and computes every gain. DL UEs take the first
    /// `k_d` pilots of a round-robin book, UL UEs the rest.
    pub fn draw(setup: &NafdSetup, seed: Seed) -> Result<Self> {
        setup.validate()?;
        let (m, kd, ku) = (setup.m, setup.k_d, setup.k_u);
        let geo = drop_network(m, kd + ku, setup.area_side, seed.named("geometry"))?;
        let beta = three_slope_between(&geo.ap_positions, &geo.ue_positions, &geo, &setup.pathloss, seed.named("beta"))?;
        let rho_p = setup.radio.snr(setup.p_p);
        let rho_d = setup.radio.snr(setup.p_d);
        let pilots = PilotBook::round_robin(kd + ku, setup.tau_up, 1.0)?;
        let gamma = gamma_uncorrelated(&beta, &pilots, rho_p);
        let mut beta_ap = three_slope_between(&geo.ap_positions, &geo.ap_positions, &geo, &setup.pathloss, seed.named("inter-ap"))?;
        let si = 10f64.powf(setup.si_db / 10.0) / rho_d;
        for i in 0..m {
            beta_ap[(i, i)] = si;
            for j in 0..i {
                beta_ap[(i, j)] = beta_ap[(j, i)];
            }
        }
        let (dl_pos, ul_pos) = geo.ue_positions.split_at(kd);
        let beta_du = three_slope_between(dl_pos, ul_pos, &geo, &setup.pathloss, seed.named("ue-ue"))?;
        Ok(NafdScalars {
            beta_dl: beta.columns(0, kd).into_owned(),
            beta_ul: beta.columns(kd, ku).into_owned(),
            beta_ap,
            beta_du,
            gamma_dl: gamma.columns(0, kd).into_owned(),
            gamma_ul: gamma.columns(kd, ku).into_owned(),
            n: setup.n,
            n_t: setup.n_t,
            n_r: setup.n_r,
            rho_u: setup.radio.snr(setup.p_u),
            rho_d,
            prelog: (setup.tau_c - setup.tau_up) as f64 / setup.tau_c as f64,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Duplex {
    Nafd,
    Fd,
    Hd,
}

impl Duplex {
    /// `(N_t, N_r, cross-link terms, prelog factor)`.
    fn shape(self, sc: &NafdScalars) -> (usize, usize, bool, f64) {
        match self {
            Duplex::Nafd => (sc.n, sc.n, true, 1.0),
            Duplex::Fd => (sc.n_t, sc.n_r, true, 1.0),
            Duplex::Hd => (sc.n_t, sc.n_r, false, 0.5),
        }
    }
}

/// Modes, power coefficients and LSFD weights of one network.
#[derive(Clone, Debug, PartialEq)]
pub struct NafdState {
    pub dl: Vec<bool>,
    pub ul: Vec<bool>,
    /// M×K_d.
    pub theta: DMatrix<f64>,
    pub varsigma: Vec<f64>,
    /// M×K_u.
    pub alpha: DMatrix<f64>,
}

impl NafdState {
    /// `θ_{mk} = a_m / √(N_t K_d γ_{mk})`, `ς = 1`, `α = 1`.
    pub fn fixed_rule(sc: &NafdScalars, dl: Vec<bool>, ul: Vec<bool>, n_t: usize) -> Self {
        let kd = sc.k_d();
        let theta = DMatrix::from_fn(sc.m(), kd, |m, k| {
            let g = sc.gamma_dl[(m, k)];
            if dl[m] && g > 0.0 {
                1.0 / (n_t as f64 * kd as f64 * g).sqrt()
            } else {
                0.0
            }
        });
        NafdState { dl, ul, theta, varsigma: vec![1.0; sc.k_u()], alpha: DMatrix::from_element(sc.m(), sc.k_u(), 1.0) }
    }

    /// NAFD assignment with `a_m` = DL and `b_m = 1 − a_m`.
    pub fn from_modes(sc: &NafdScalars, a: &[bool]) -> Self {
        Self::fixed_rule(sc, a.to_vec(), a.iter().map(|x| !x).collect(), sc.n)
    }

    pub fn full_duplex(sc: &NafdScalars) -> Self {
        Self::fixed_rule(sc, vec![true; sc.m()], vec![true; sc.m()], sc.n_t)
    }

    pub fn half_duplex(sc: &NafdScalars) -> Self {
        Self::full_duplex(sc)
    }

    /// Checks the per-AP budget and the coefficient ranges.
    pub fn validate(&self, sc: &NafdScalars, duplex: Duplex) -> Result<()> {
        let (n_t, ..) = duplex.shape(sc);
        for m in 0..sc.m() {
            let load: f64 = (0..sc.k_d()).map(|k| n_t as f64 * sc.gamma_dl[(m, k)] * self.theta[(m, k)].powi(2)).sum();
            if load > 1.0 + 1e-9 {
                return Err(Error::invalid(format!("AP {m} exceeds its power budget")));
            }
            if !self.dl[m] && self.theta.row(m).iter().any(|t| *t != 0.0) {
                return Err(Error::invalid(format!("AP {m} transmits without DL mode")));
            }
            if duplex == Duplex::Nafd && self.dl[m] == self.ul[m] {
                return Err(Error::invalid(format!("AP {m} must be exactly one of DL or UL")));
            }
        }
        if self.varsigma.iter().any(|s| !(0.0..=1.0).contains(s)) || self.alpha.iter().any(|a| a.abs() > 1.0) {
            return Err(Error::invalid("varsigma must lie in [0, 1] and |alpha| <= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NafdSe {
    pub ul_sinr: Vec<f64>,
    pub dl_sinr: Vec<f64>,
    pub ul_se: Vec<f64>,
    pub dl_se: Vec<f64>,
    pub sum_se: f64,
}

impl NafdSe {
    pub fn min_se(&self) -> f64 {
        self.ul_se.iter().chain(&self.dl_se).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn meets(&self, floor: f64) -> bool {
        self.ul_se.iter().chain(&self.dl_se).all(|s| *s >= floor)
    }
}

/// UL and DL SINRs of every UE.
pub fn nafd_sinr(sc: &NafdScalars, st: &NafdState, duplex: Duplex) -> (Vec<f64>, Vec<f64>) {
    let (n_t, n_r, cross, _) = duplex.shape(sc);
    let (m, kd, ku) = (sc.m(), sc.k_d(), sc.k_u());
    let (nt, nr) = (n_t as f64, n_r as f64);
    // Transmit load N_t Σ_k θ² γ of every DL AP.
    let load: Vec<f64> = (0..m)
        .map(|i| if st.dl[i] { (0..kd).map(|k| nt * st.theta[(i, k)].powi(2) * sc.gamma_dl[(i, k)]).sum() } else { 0.0 })
        .collect();
    let ul = (0..ku)
        .map(|l| {
            let mut sig = 0.0;
            let mut den = 0.0;
            for mm in (0..m).filter(|&mm| st.ul[mm]) {
                let (a, g) = (st.alpha[(mm, l)], sc.gamma_ul[(mm, l)]);
                let w = a * a * g;
                sig += a * g;
                let ui: f64 = (0..ku).map(|q| st.varsigma[q] * sc.beta_ul[(mm, q)]).sum();
                den += sc.rho_u * w * ui + w;
                if cross {
                    let ai: f64 = (0..m).map(|i| sc.beta_ap[(mm, i)] * load[i]).sum();
                    den += sc.rho_d * w * ai;
                }
            }
            if den > 0.0 {
                nr * sc.rho_u * st.varsigma[l] * sig * sig / den
            } else {
                0.0
            }
        })
        .collect();
    let dl = (0..kd)
        .map(|k| {
            let sig: f64 = (0..m).filter(|&mm| st.dl[mm]).map(|mm| st.theta[(mm, k)] * sc.gamma_dl[(mm, k)]).sum();
            let mut den: f64 = 1.0 + (0..m).filter(|&mm| st.dl[mm]).map(|mm| sc.rho_d * sc.beta_dl[(mm, k)] * load[mm]).sum::<f64>();
            if cross {
                den += (0..ku).map(|l| sc.rho_u * st.varsigma[l] * sc.beta_du[(k, l)]).sum::<f64>();
            }
            sc.rho_d * nt * nt * sig * sig / den
        })
        .collect();
    (ul, dl)
}

pub fn nafd_se(sc: &NafdScalars, st: &NafdState, duplex: Duplex) -> NafdSe {
    let (_, _, _, frac) = duplex.shape(sc);
    let pre = sc.prelog * frac;
    let (ul_sinr, dl_sinr) = nafd_sinr(sc, st, duplex);
    let ul_se: Vec<f64> = ul_sinr.iter().map(|s| pre * log2_1p(*s)).collect();
    let dl_se: Vec<f64> = dl_sinr.iter().map(|s| pre * log2_1p(*s)).collect();
    let sum_se = ul_se.iter().chain(&dl_se).sum();
    NafdSe { ul_sinr, dl_sinr, ul_se, dl_se, sum_se }
}

/// Power problem over `θ` (index `m K_d + k`) and `√ς` (index `M K_d + ℓ`)
/// for fixed modes and LSFD weights. DL users come first.
pub fn nafd_power_problem(sc: &NafdScalars, st: &NafdState, duplex: Duplex) -> Result<PowerProblem> {
    let (n_t, n_r, cross, _) = duplex.shape(sc);
    let (m, kd, ku) = (sc.m(), sc.k_d(), sc.k_u());
    let nt = n_t as f64;
    let th = |mm: usize, k: usize| mm * kd + k;
    let vs = |l: usize| m * kd + l;
    let mut groups: Vec<PowerGroup> = (0..m)
        .map(|mm| PowerGroup {
            members: (0..kd).map(|k| (th(mm, k), nt * sc.gamma_dl[(mm, k)])).collect(),
            budget: if st.dl[mm] { 1.0 } else { 0.0 },
        })
        .collect();
    groups.extend((0..ku).map(|l| PowerGroup { members: vec![(vs(l), 1.0)], budget: 1.0 }));
    let mut links = Vec::with_capacity(kd + ku);
    for k in 0..kd {
        let signal = (0..m).filter(|&mm| st.dl[mm]).map(|mm| (th(mm, k), sc.rho_d.sqrt() * nt * sc.gamma_dl[(mm, k)])).collect();
        let mut load_gain: Vec<(usize, f64)> = (0..m).filter(|&mm| st.dl[mm]).map(|mm| (mm, sc.rho_d * sc.beta_dl[(mm, k)])).collect();
        if cross {
            load_gain.extend((0..ku).map(|l| (m + l, sc.rho_u * sc.beta_du[(k, l)])));
        }
        links.push(SinrLink { signal, coherent: Vec::new(), load_gain, noise: 1.0 });
    }
    for l in 0..ku {
        let rx: Vec<usize> = (0..m).filter(|&mm| st.ul[mm]).collect();
        let w = |mm: usize| st.alpha[(mm, l)].powi(2) * sc.gamma_ul[(mm, l)];
        let s: f64 = rx.iter().map(|&mm| st.alpha[(mm, l)] * sc.gamma_ul[(mm, l)]).sum();
        let noise: f64 = rx.iter().map(|&mm| w(mm)).sum();
        if noise <= 0.0 {
            links.push(SinrLink { signal: Vec::new(), coherent: Vec::new(), load_gain: Vec::new(), noise: 1.0 });
            continue;
        }
        let mut load_gain: Vec<(usize, f64)> =
            (0..ku).map(|q| (m + q, sc.rho_u * rx.iter().map(|&mm| w(mm) * sc.beta_ul[(mm, q)]).sum::<f64>())).collect();
        if cross {
            load_gain.extend((0..m).map(|i| (i, sc.rho_d * rx.iter().map(|&mm| w(mm) * sc.beta_ap[(mm, i)]).sum::<f64>())));
        }
        let signal = vec![(vs(l), (n_r as f64 * sc.rho_u).sqrt() * s)];
        links.push(SinrLink { signal, coherent: Vec::new(), load_gain, noise });
    }
    let p = PowerProblem {
        n_vars: m * kd + ku,
        links,
        users: (0..kd + ku).map(|u| vec![u]).collect(),
        groups,
        floors: None,
    };
    p.validate()?;
    Ok(p)
}

impl NafdState {
    pub fn to_mu(&self) -> Vec<f64> {
        self.theta.transpose().iter().cloned().chain(self.varsigma.iter().map(|s| s.sqrt())).collect()
    }

    pub fn with_mu(&self, sc: &NafdScalars, mu: &[f64]) -> Self {
        let (m, kd) = (sc.m(), sc.k_d());
        let mut out = self.clone();
        out.theta = DMatrix::from_fn(m, kd, |mm, k| mu[mm * kd + k]);
        out.varsigma = mu[m * kd..].iter().map(|x| (x * x).min(1.0)).collect();
        out
    }
}

/// Sum-SE power refinement from `st`. The refined point is kept only when it
/// raises the sum without breaking a floor the start point met.
pub fn refine_power(sc: &NafdScalars, st: &NafdState, duplex: Duplex, floor: f64) -> Result<NafdState> {
    let p = nafd_power_problem(sc, st, duplex)?;
    let opts = PgdOptions { max_iter: 400, tol: 1e-8, ..PgdOptions::default() };
    let sol = solve_sumse_pgd(&p, &opts, Some(&st.to_mu()))?;
    let cand = st.with_mu(sc, &sol.mu);
    let (a, b) = (nafd_se(sc, st, duplex), nafd_se(sc, &cand, duplex));
    if b.sum_se > a.sum_se && (b.meets(floor) || !a.meets(floor)) {
        Ok(cand)
    } else {
        Ok(st.clone())
    }
}

/// Best NAFD assignment over all `2^M` mode vectors under the fixed power
/// rule. Assignments meeting the floor win over those that do not.
pub fn exhaustive_modes(sc: &NafdScalars, floor: f64) -> Result<(Vec<bool>, NafdSe, bool)> {
    let m = sc.m();
    if m > MAX_EXHAUSTIVE_APS {
        return Err(Error::TooLarge(format!("exhaustive mode search over {m} APs (limit {MAX_EXHAUSTIVE_APS})")));
    }
    let mut best: Option<(Vec<bool>, NafdSe, bool)> = None;
    for mask in 0u32..(1 << m) {
        let a: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
        let se = nafd_se(sc, &NafdState::from_modes(sc, &a), Duplex::Nafd);
        let ok = se.meets(floor);
        let better = match &best {
            None => true,
            Some((_, b, bok)) => (ok && !bok) || (ok == *bok && se.sum_se > b.sum_se),
        };
        if better {
            best = Some((a, se, ok));
        }
    }
    Ok(best.expect("at least one assignment"))
}

/// Greedy assignment: starting with every AP idle, each step gives one AP
/// the mode that maximises the resulting sum-SE. Returns the modes and the
/// objective after every step.
pub fn greedy_modes(sc: &NafdScalars) -> (Vec<bool>, Vec<f64>) {
    let m = sc.m();
    let mut dl = vec![false; m];
    let mut ul = vec![false; m];
    let mut trace = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, bool, f64)> = None;
        for i in (0..m).filter(|&i| !dl[i] && !ul[i]) {
            for to_dl in [true, false] {
                let (mut d, mut u) = (dl.clone(), ul.clone());
                if to_dl {
                    d[i] = true;
                } else {
                    u[i] = true;
                }
                let v = nafd_se(sc, &NafdState::fixed_rule(sc, d, u, sc.n), Duplex::Nafd).sum_se;
                if best.is_none_or(|b| v > b.2) {
                    best = Some((i, to_dl, v));
                }
            }
        }
        let (i, to_dl, v) = best.expect("an idle AP remains");
        if to_dl {
            dl[i] = true;
        } else {
            ul[i] = true;
        }
        trace.push(v);
    }
    (dl, trace)
}

pub fn random_modes(m: usize, seed: Seed) -> Vec<bool> {
    let mut rng = seed.rng();
    (0..m).map(|_| rng.random::<bool>()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NafdScheme {
    /// Exhaustive modes, then sum-SE power refinement.
    Exhaustive,
    /// Greedy modes, then power refinement.
    Greedy,
    /// Random modes, then power refinement.
    Random,
    Fd,
    Hd,
}

impl NafdScheme {
    pub const ALL: [NafdScheme; 5] = [NafdScheme::Exhaustive, NafdScheme::Greedy, NafdScheme::Random, NafdScheme::Fd, NafdScheme::Hd];

    pub fn label(self) -> &'static str {
        match self {
            NafdScheme::Exhaustive => "NAFD",
            NafdScheme::Greedy => "G-NAFD",
            NafdScheme::Random => "R-NAFD",
            NafdScheme::Fd => "FD",
            NafdScheme::Hd => "HD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.label().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Debug)]
pub struct NafdOutcome {
    pub scheme: NafdScheme,
    pub state: NafdState,
    pub se: NafdSe,
    /// Whether every UE meets the SE floor.
    pub feasible: bool,
}

pub fn run_nafd_scheme(sc: &NafdScalars, scheme: NafdScheme, floor: f64, seed: Seed) -> Result<NafdOutcome> {
    let (state, duplex) = match scheme {
        NafdScheme::Exhaustive => {
            let (a, ..) = exhaustive_modes(sc, floor)?;
            (refine_power(sc, &NafdState::from_modes(sc, &a), Duplex::Nafd, floor)?, Duplex::Nafd)
        }
        NafdScheme::Greedy => {
            let a = greedy_modes(sc).0;
            (refine_power(sc, &NafdState::from_modes(sc, &a), Duplex::Nafd, floor)?, Duplex::Nafd)
        }
        NafdScheme::Random => {
            let a = random_modes(sc.m(), seed.named("modes"));
            (refine_power(sc, &NafdState::from_modes(sc, &a), Duplex::Nafd, floor)?, Duplex::Nafd)
        }
        NafdScheme::Fd => (refine_power(sc, &NafdState::full_duplex(sc), Duplex::Fd, floor)?, Duplex::Fd),
        NafdScheme::Hd => (refine_power(sc, &NafdState::half_duplex(sc), Duplex::Hd, floor)?, Duplex::Hd),
    };
    let se = nafd_se(sc, &state, duplex);
    Ok(NafdOutcome { scheme, feasible: se.meets(floor), state, se })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m: usize, seed: u64) -> NafdScalars {
        let setup = NafdSetup { m, k_d: 2, k_u: 2, area_side: 300.0, ..NafdSetup::default() };
        NafdScalars::draw(&setup, Seed(seed)).unwrap()
    }

    #[test]
    fn no_receiving_ap_means_no_uplink() {
        let sc = small(4, 1);
        let se = nafd_se(&sc, &NafdState::from_modes(&sc, &[true; 4]), Duplex::Nafd);
        assert!(se.ul_se.iter().all(|s| *s == 0.0));
        assert!(se.dl_se.iter().all(|s| *s > 0.0));
    }

    #[test]
    fn full_duplex_matches_direct_formula() {
        let sc = small(4, 2);
        let st = NafdState::full_duplex(&sc);
        let (ul, dl) = nafd_sinr(&sc, &st, Duplex::Fd);
        let nt = sc.n_t as f64;
        for l in 0..2 {
            let mut num = 0.0;
            let mut den = 0.0;
            for m in 0..4 {
                let g = sc.gamma_ul[(m, l)];
                num += g;
                den += sc.rho_u * g * (sc.beta_ul[(m, 0)] + sc.beta_ul[(m, 1)]) + g;
                for i in 0..4 {
                    for k in 0..2 {
                        den += sc.rho_d * nt * st.theta[(i, k)].powi(2) * g * sc.beta_ap[(m, i)] * sc.gamma_dl[(i, k)];
                    }
                }
            }
            let want = sc.n_r as f64 * sc.rho_u * num * num / den;
            assert!((ul[l] - want).abs() <= 1e-12 * want);
        }
        assert!(dl.iter().all(|s| s.is_finite() && *s > 0.0));
        st.validate(&sc, Duplex::Fd).unwrap();
    }

    #[test]
    fn huge_self_interference_kills_fd_uplink() {
        let mut sc = small(3, 3);
        for i in 0..3 {
            sc.beta_ap[(i, i)] = 1e12;
        }
        let (ul, _) = nafd_sinr(&sc, &NafdState::full_duplex(&sc), Duplex::Fd);
        assert!(ul.iter().all(|s| *s < 1e-6));
    }

    #[test]
    fn dl_only_matches_half_duplex_terms() {
        let setup = NafdSetup { m: 4, k_d: 3, k_u: 0, n: 2, n_t: 2, n_r: 2, area_side: 300.0, ..NafdSetup::default() };
        let sc = NafdScalars::draw(&setup, Seed(4)).unwrap();
        let st = NafdState::from_modes(&sc, &[true; 4]);
        let a = nafd_se(&sc, &st, Duplex::Nafd);
        let b = nafd_se(&sc, &st, Duplex::Hd);
        for (x, y) in a.dl_sinr.iter().zip(&b.dl_sinr) {
            assert!((x - y).abs() <= 1e-12 * x);
        }
        for (x, y) in a.dl_se.iter().zip(&b.dl_se) {
            assert!((x - 2.0 * y).abs() <= 1e-12 * x);
        }
        let (dl, _) = greedy_modes(&sc);
        assert!(dl.iter().all(|d| *d));
    }

    #[test]
    fn exhaustive_dominates_greedy_and_single_ap_agrees() {
        for seed in 0..4 {
            let sc = small(6, 10 + seed);
            let (_, ex, _) = exhaustive_modes(&sc, 0.0).unwrap();
            let (g, trace) = greedy_modes(&sc);
            let gs = nafd_se(&sc, &NafdState::from_modes(&sc, &g), Duplex::Nafd).sum_se;
            assert!(ex.sum_se >= gs - 1e-12);
            assert!((trace.last().unwrap() - gs).abs() < 1e-12);
        }
        let sc = small(1, 7);
        let (a, ex, _) = exhaustive_modes(&sc, 0.0).unwrap();
        let (g, _) = greedy_modes(&sc);
        assert_eq!(a, g);
        assert!(ex.sum_se > 0.0);
        let too_big = small(13, 1);
        assert!(matches!(exhaustive_modes(&too_big, 0.0), Err(Error::TooLarge(_))));
    }

    #[test]
    fn refinement_respects_budgets() {
        let sc = small(5, 21);
        let (a, ..) = exhaustive_modes(&sc, 0.0).unwrap();
        let st = NafdState::from_modes(&sc, &a);
        let r = refine_power(&sc, &st, Duplex::Nafd, 0.0).unwrap();
        r.validate(&sc, Duplex::Nafd).unwrap();
        assert!(nafd_se(&sc, &r, Duplex::Nafd).sum_se >= nafd_se(&sc, &st, Duplex::Nafd).sum_se);
        let p = nafd_power_problem(&sc, &st, Duplex::Nafd).unwrap();
        let (ul, dl) = nafd_sinr(&sc, &st, Duplex::Nafd);
        let via = p.user_sinr(&st.to_mu());
        for (x, y) in dl.iter().chain(&ul).zip(&via) {
            assert!((x - y).abs() <= 1e-9 * x.max(1e-12), "{x} {y}");
        }
    }
}
