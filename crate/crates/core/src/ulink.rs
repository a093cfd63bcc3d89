//! Uplink combining and the four cooperation levels.
//!
//! Levels 1 to 3 share one set of statistics per UE: the mean effective
//! gain `E{g_kk}`, the weighted interference matrix
//! `S_k = Σ_i ρ_u ς_i E{g_ki g_kiᴴ}` and the noise diagonal `D_k`, all indexed
//! by the APs serving UE `k`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dlink::SeReport;
use crate::linalg::{c, hpd_inverse, hpd_solve, CMat, CVec, C64};
use crate::netmodel::{draw_channels_with, LargeScaleModel};
use crate::rng::{chunked_trials, Seed};
use crate::training::{ChannelEstimate, EstimationStats, PilotBook};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CombinerScheme {
    Mr,
    Lmmse,
    Lpmmse,
    Cmmse,
}

impl CombinerScheme {
    pub fn label(self) -> &'static str {
        match self {
            CombinerScheme::Mr => "MR",
            CombinerScheme::Lmmse => "L-MMSE",
            CombinerScheme::Lpmmse => "LP-MMSE",
            CombinerScheme::Cmmse => "C-MMSE",
        }
    }

    pub fn is_local(self) -> bool {
        !matches!(self, CombinerScheme::Cmmse)
    }
}

/// Which APs serve which UEs. `ap_serves[ℓ]` is D_ℓ and `ue_served_by[k]` is M_k.
#[derive(Clone, Debug, PartialEq)]
pub struct ServingSets {
    pub ap_serves: Vec<Vec<usize>>,
    pub ue_served_by: Vec<Vec<usize>>,
}

impl ServingSets {
    pub fn all_serve(m: usize, k: usize) -> Self {
        ServingSets { ap_serves: vec![(0..k).collect(); m], ue_served_by: vec![(0..m).collect(); k] }
    }

    /// Each UE keeps the fewest APs that capture `delta` of its total β.
    pub fn user_centric(beta: &DMatrix<f64>, delta: f64) -> Self {
        let (m, k) = beta.shape();
        let mut ue_served_by = Vec::with_capacity(k);
        for kk in 0..k {
            let total: f64 = beta.column(kk).iter().sum();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| beta[(b, kk)].partial_cmp(&beta[(a, kk)]).unwrap().then(a.cmp(&b)));
            let mut set = Vec::new();
            let mut acc = 0.0;
            for &l in &order {
                set.push(l);
                acc += beta[(l, kk)];
                if acc >= delta * total {
                    break;
                }
            }
            set.sort_unstable();
            ue_served_by.push(set);
        }
        Self::from_ue_sets(m, ue_served_by)
    }

    pub fn from_ue_sets(m: usize, ue_served_by: Vec<Vec<usize>>) -> Self {
        let mut ap_serves = vec![Vec::new(); m];
        for (kk, set) in ue_served_by.iter().enumerate() {
            for &l in set {
                ap_serves[l].push(kk);
            }
        }
        ServingSets { ap_serves, ue_served_by }
    }

    pub fn serves(&self, l: usize, k: usize) -> bool {
        self.ap_serves[l].contains(&k)
    }

    /// `k ∈ D_ℓ ⇔ ℓ ∈ M_k`.
    pub fn is_consistent(&self) -> bool {
        self.ap_serves.iter().enumerate().all(|(l, d)| d.iter().all(|&k| self.ue_served_by[k].contains(&l)))
            && self.ue_served_by.iter().enumerate().all(|(k, s)| s.iter().all(|&l| self.ap_serves[l].contains(&k)))
    }
}

#[derive(Clone, Debug)]
pub struct CombinerSet {
    pub scheme: CombinerScheme,
    pub k: usize,
    /// Local vectors `v_{kℓ}` indexed `ℓ*K + k`; zero when ℓ does not serve k.
    pub local: Vec<CVec>,
    /// Stacked MN-vectors for centralized combining.
    pub collective: Option<Vec<CVec>>,
}

impl CombinerSet {
    pub fn get(&self, l: usize, k: usize) -> &CVec {
        &self.local[l * self.k + k]
    }
}

fn local_mmse_matrix(est: &ChannelEstimate, l: usize, users: &[usize], rho_u: f64, varsigma: &[f64]) -> CMat {
    let n = est.stats.n;
    let mut z = CMat::identity(n, n);
    for &i in users {
        let h = est.get(l, i);
        let w = c(rho_u * varsigma[i]);
        z += (h * h.adjoint() + est.stats.err_cov(l, i)) * w;
    }
    z
}

/// Stacked estimate of UE `k` over all APs.
fn stacked(est: &ChannelEstimate, k: usize) -> CVec {
    let (m, n) = (est.stats.m, est.stats.n);
    let mut v = CVec::zeros(m * n);
    for l in 0..m {
        v.rows_mut(l * n, n).copy_from(est.get(l, k));
    }
    v
}

/// `ρ_u Σ_i ς_i (ĥ_i ĥ_iᴴ + C_i) + I` on the stacked space.
fn collective_matrix(est: &ChannelEstimate, rho_u: f64, varsigma: &[f64]) -> CMat {
    let (m, k, n) = (est.stats.m, est.stats.k, est.stats.n);
    let mut z = CMat::identity(m * n, m * n);
    let hs: Vec<CVec> = (0..k).map(|i| stacked(est, i)).collect();
    for (i, h) in hs.iter().enumerate() {
        let w = c(rho_u * varsigma[i]);
        z += h * h.adjoint() * w;
        for l in 0..m {
            let mut blk = z.view_mut((l * n, l * n), (n, n));
            blk += est.stats.err_cov(l, i) * w;
        }
    }
    z
}

fn served_indices(serving: &ServingSets, k: usize, n: usize) -> Vec<usize> {
    serving.ue_served_by[k].iter().flat_map(|&l| (l * n)..(l * n + n)).collect()
}

fn select(v: &CVec, idx: &[usize]) -> CVec {
    CVec::from_fn(idx.len(), |r, _| v[idx[r]])
}

fn select_sq(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |r, cc| a[(idx[r], idx[cc])])
}

fn scatter(v: &CVec, idx: &[usize], len: usize) -> CVec {
    let mut out = CVec::zeros(len);
    for (r, &i) in idx.iter().enumerate() {
        out[i] = v[r];
    }
    out
}

fn check_varsigma(varsigma: &[f64], k: usize) -> Result<()> {
    if varsigma.len() != k || varsigma.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("varsigma must hold K values in [0, 1]"));
    }
    Ok(())
}

pub fn build_combiner(
    scheme: CombinerScheme,
    est: &ChannelEstimate,
    serving: &ServingSets,
    rho_u: f64,
    varsigma: &[f64],
) -> Result<CombinerSet> {
    let (m, k, n) = (est.stats.m, est.stats.k, est.stats.n);
    check_varsigma(varsigma, k)?;
    let mut local = vec![CVec::zeros(n); m * k];
    let mut collective = None;
    match scheme {
        CombinerScheme::Mr => {
            for l in 0..m {
                for &kk in &serving.ap_serves[l] {
                    local[l * k + kk] = est.get(l, kk).clone();
                }
            }
        }
        CombinerScheme::Lmmse | CombinerScheme::Lpmmse => {
            let all: Vec<usize> = (0..k).collect();
            for l in 0..m {
                if serving.ap_serves[l].is_empty() {
                    continue;
                }
                let users = if scheme == CombinerScheme::Lmmse { &all } else { &serving.ap_serves[l] };
                let zinv = hpd_inverse(&local_mmse_matrix(est, l, users, rho_u, varsigma))?;
                for &kk in &serving.ap_serves[l] {
                    local[l * k + kk] = &zinv * est.get(l, kk) * c(varsigma[kk] * rho_u);
                }
            }
        }
        CombinerScheme::Cmmse => {
            let z = collective_matrix(est, rho_u, varsigma);
            let mut vs = Vec::with_capacity(k);
            for kk in 0..k {
                let idx = served_indices(serving, kk, n);
                let h = select(&stacked(est, kk), &idx);
                let zs = select_sq(&z, &idx);
                let hm = CMat::from_column_slice(h.len(), 1, h.as_slice());
                let v = hpd_solve(&zs, &hm)?.column(0).into_owned() * c(varsigma[kk] * rho_u);
                vs.push(scatter(&v, &idx, m * n));
            }
            collective = Some(vs);
        }
    }
    Ok(CombinerSet { scheme, k, local, collective })
}

/// Shared inputs for uplink evaluations.
#[derive(Clone, Debug)]
pub struct UlSettings {
    pub rho_u: f64,
    pub varsigma: Vec<f64>,
    pub trials: usize,
    pub prelog: f64,
}

/// Level 4: average over draws of the instantaneous SINR of a stacked
/// combiner. Local schemes are stacked across serving APs.
pub fn ul_se_level4(
    lsm: &LargeScaleModel,
    pilots: &PilotBook,
    serving: &ServingSets,
    scheme: CombinerScheme,
    settings: &UlSettings,
    seed: Seed,
) -> Result<SeReport> {
    let (m, k, n) = (lsm.m(), lsm.k(), lsm.n());
    check_varsigma(&settings.varsigma, k)?;
    if settings.trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let stats = Arc::new(EstimationStats::new(lsm, pilots)?);
    let rho = settings.rho_u;
    let vs = &settings.varsigma;
    let sums = chunked_trials(
        seed,
        settings.trials,
        128,
        |rng, len| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut se = vec![0.0; k];
            let mut sinr_acc = vec![0.0; k];
            for _ in 0..len {
                let h = draw_channels_with(lsm, rng);
                let est = stats.estimate_with(&h, rng);
                let comb = build_combiner(scheme, &est, serving, rho, vs)?;
                let z = collective_matrix(&est, rho, vs);
                for kk in 0..k {
                    let hk = stacked(&est, kk);
                    let v = match &comb.collective {
                        Some(cv) => cv[kk].clone(),
                        None => {
                            let mut v = CVec::zeros(m * n);
                            for l in 0..m {
                                v.rows_mut(l * n, n).copy_from(comb.get(l, kk));
                            }
                            v
                        }
                    };
                    let sig = rho * vs[kk] * v.dotc(&hk).norm_sqr();
                    let tot = v.dotc(&(&z * &v)).re;
                    let s = if sig > 0.0 { sig / (tot - sig).max(f64::MIN_POSITIVE) } else { 0.0 };
                    sinr_acc[kk] += s;
                    se[kk] += (1.0 + s).log2();
                }
            }
            Ok((se, sinr_acc))
        },
        |a, b| {
            let (a, b) = (a?, b?);
            Ok((
                a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect(),
                a.1.iter().zip(&b.1).map(|(x, y)| x + y).collect(),
            ))
        },
    )
    .expect("at least one chunk")?;
    let t = settings.trials as f64;
    let se: Vec<f64> = sums.0.iter().map(|s| settings.prelog * s / t).collect();
    // Average instantaneous SINR is reported for reference; SE is the mean of logs.
    let sinr: Vec<f64> = sums.1.iter().map(|s| s / t).collect();
    Ok(SeReport::from_parts(sinr, se))
}

/// Statistics of the local effective gains per UE, indexed by its serving APs.
#[derive(Clone, Debug)]
pub struct UlMoments {
    pub serving: Vec<Vec<usize>>,
    pub mean_gain: Vec<CVec>,
    pub interference: Vec<CMat>,
    pub noise: Vec<DVector<f64>>,
    pub rho_u: f64,
    pub varsigma: Vec<f64>,
}

#[derive(Clone)]
struct MomAcc {
    mean: Vec<CVec>,
    inter: Vec<CMat>,
    noise: Vec<DVector<f64>>,
}

impl MomAcc {
    fn merge(mut a: MomAcc, b: MomAcc) -> MomAcc {
        for (x, y) in a.mean.iter_mut().zip(b.mean) {
            *x += y;
        }
        for (x, y) in a.inter.iter_mut().zip(b.inter) {
            *x += y;
        }
        for (x, y) in a.noise.iter_mut().zip(b.noise) {
            *x += y;
        }
        a
    }
}

/// Sample moments of `g_ki = [v_{kℓ}ᴴ h_{iℓ}]_{ℓ∈M_k}` for a local combiner.
pub fn ul_moments_montecarlo(
    lsm: &LargeScaleModel,
    pilots: &PilotBook,
    serving: &ServingSets,
    scheme: CombinerScheme,
    settings: &UlSettings,
    seed: Seed,
) -> Result<UlMoments> {
    if !scheme.is_local() {
        return Err(Error::invalid("moments need a local combiner"));
    }
    let (m, k) = (lsm.m(), lsm.k());
    check_varsigma(&settings.varsigma, k)?;
    if serving.ue_served_by.len() != k || serving.ap_serves.len() != m {
        return Err(Error::invalid("serving sets do not match the network"));
    }
    if settings.trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let stats = Arc::new(EstimationStats::new(lsm, pilots)?);
    let rho = settings.rho_u;
    let vs = &settings.varsigma;
    let sizes: Vec<usize> = serving.ue_served_by.iter().map(Vec::len).collect();
    let empty = MomAcc {
        mean: sizes.iter().map(|&s| CVec::zeros(s)).collect(),
        inter: sizes.iter().map(|&s| CMat::zeros(s, s)).collect(),
        noise: sizes.iter().map(|&s| DVector::zeros(s)).collect(),
    };
    let acc = chunked_trials(
        seed,
        settings.trials,
        128,
        |rng, len| -> Result<MomAcc> {
            let mut acc = empty.clone();
            for _ in 0..len {
                let h = draw_channels_with(lsm, rng);
                let est = stats.estimate_with(&h, rng);
                let comb = build_combiner(scheme, &est, serving, rho, vs)?;
                for kk in 0..k {
                    let aps = &serving.ue_served_by[kk];
                    let mut g = CVec::zeros(aps.len());
                    for i in 0..k {
                        for (j, &l) in aps.iter().enumerate() {
                            g[j] = comb.get(l, kk).dotc(h.get(l, i));
                        }
                        if i == kk {
                            acc.mean[kk] += &g;
                        }
                        acc.inter[kk] += &g * g.adjoint() * c(rho * vs[i]);
                    }
                    for (j, &l) in aps.iter().enumerate() {
                        acc.noise[kk][j] += comb.get(l, kk).norm_squared();
                    }
                }
            }
            Ok(acc)
        },
        |a, b| Ok(MomAcc::merge(a?, b?)),
    )
    .expect("at least one chunk")?;
    let t = settings.trials as f64;
    Ok(UlMoments {
        serving: serving.ue_served_by.clone(),
        mean_gain: acc.mean.into_iter().map(|v| v / c(t)).collect(),
        interference: acc.inter.into_iter().map(|v| v / c(t)).collect(),
        noise: acc.noise.into_iter().map(|v| v / t).collect(),
        rho_u: rho,
        varsigma: vs.clone(),
    })
}

/// Exact MR moments for uncorrelated fading.
pub fn ul_moments_closed_mr(
    beta: &DMatrix<f64>,
    pilots: &PilotBook,
    rho_p: f64,
    n: usize,
    serving: &ServingSets,
    rho_u: f64,
    varsigma: &[f64],
) -> Result<UlMoments> {
    let (_, k) = beta.shape();
    check_varsigma(varsigma, k)?;
    let nf = n as f64;
    let tau = pilots.tau_up as f64;
    let gamma = crate::training::gamma_uncorrelated(beta, pilots, rho_p);
    let a = |t: usize| (tau * rho_p * pilots.pilot_power[t]).sqrt();
    // E{ĥ_kℓᴴ h_iℓ}/N for copilot i.
    let cross = |l: usize, kk: usize, i: usize| {
        let phi: f64 = pilots.copilots(kk).iter().map(|&t| a(t).powi(2) * beta[(l, t)]).sum::<f64>() + 1.0;
        a(kk) * beta[(l, kk)] / phi * a(i) * beta[(l, i)]
    };
    let mut mean_gain = Vec::with_capacity(k);
    let mut interference = Vec::with_capacity(k);
    let mut noise = Vec::with_capacity(k);
    for kk in 0..k {
        let aps = &serving.ue_served_by[kk];
        let s = aps.len();
        mean_gain.push(CVec::from_fn(s, |j, _| c(nf * gamma[(aps[j], kk)])));
        let mut inter = CMat::zeros(s, s);
        for i in 0..k {
            let w = rho_u * varsigma[i];
            let copilot = pilots.assignment[i] == pilots.assignment[kk];
            for (j1, &l1) in aps.iter().enumerate() {
                for (j2, &l2) in aps.iter().enumerate() {
                    let v = if j1 == j2 {
                        let coh = if copilot { (nf * cross(l1, kk, i)).powi(2) } else { 0.0 };
                        nf * gamma[(l1, kk)] * beta[(l1, i)] + coh
                    } else if copilot {
                        nf * cross(l1, kk, i) * nf * cross(l2, kk, i)
                    } else {
                        0.0
                    };
                    inter[(j1, j2)] += c(w * v);
                }
            }
        }
        interference.push(inter);
        noise.push(DVector::from_fn(s, |j, _| nf * gamma[(aps[j], kk)]));
    }
    Ok(UlMoments {
        serving: serving.ue_served_by.clone(),
        mean_gain,
        interference,
        noise,
        rho_u,
        varsigma: varsigma.to_vec(),
    })
}

/// SINR of UE `k` for combining weights `a` over its serving APs.
pub fn lsfd_sinr(mom: &UlMoments, k: usize, a: &CVec) -> f64 {
    let b = &mom.mean_gain[k];
    let sig = mom.rho_u * mom.varsigma[k] * a.dotc(b).norm_sqr();
    if sig <= 0.0 {
        return 0.0;
    }
    let inter = a.dotc(&(&mom.interference[k] * a)).re;
    let noise: f64 = a.iter().zip(mom.noise[k].iter()).map(|(x, d)| x.norm_sqr() * d).sum();
    sig / (inter - sig + noise).max(f64::MIN_POSITIVE)
}

/// Optimal weights `(S_k + D_k)⁻¹ E{g_kk}` for every UE.
pub fn lsfd_optimal(mom: &UlMoments) -> Result<Vec<CVec>> {
    (0..mom.mean_gain.len())
        .map(|k| {
            let mut a = mom.interference[k].clone();
            for (j, d) in mom.noise[k].iter().enumerate() {
                a[(j, j)] += c(*d);
            }
            let a = (&a + a.adjoint()) * c(0.5);
            let b = CMat::from_column_slice(mom.mean_gain[k].len(), 1, mom.mean_gain[k].as_slice());
            if b.is_empty() {
                return Ok(CVec::zeros(0));
            }
            hpd_solve(&a, &b)
                .map(|x| x.column(0).into_owned())
                .map_err(|_| Error::NumericalDomain(format!("LSFD system for UE {k} is singular")))
        })
        .collect()
}

pub fn ul_se_level3(mom: &UlMoments, weights: &[CVec], prelog: f64) -> SeReport {
    let sinr = (0..weights.len()).map(|k| lsfd_sinr(mom, k, &weights[k])).collect();
    SeReport::from_sinr(sinr, prelog)
}

pub fn ul_se_level3_optimal(mom: &UlMoments, prelog: f64) -> Result<SeReport> {
    Ok(ul_se_level3(mom, &lsfd_optimal(mom)?, prelog))
}

/// Level 2: plain sum of the local estimates.
pub fn ul_se_level2(mom: &UlMoments, prelog: f64) -> SeReport {
    let ones: Vec<CVec> = mom.mean_gain.iter().map(|b| CVec::from_element(b.len(), C64::new(1.0, 0.0))).collect();
    ul_se_level3(mom, &ones, prelog)
}

/// Level 1: each UE decoded at its best serving AP.
pub fn ul_se_level1(mom: &UlMoments, prelog: f64) -> SeReport {
    let sinr = (0..mom.mean_gain.len())
        .map(|k| {
            let s = mom.mean_gain[k].len();
            (0..s)
                .map(|j| {
                    let mut e = CVec::zeros(s);
                    e[j] = c(1.0);
                    lsfd_sinr(mom, k, &e)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    SeReport::from_sinr(sinr, prelog)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (LargeScaleModel, PilotBook, DMatrix<f64>) {
        let beta = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.2, 2.0, 0.4, 0.5, 0.3, 1.2]);
        (LargeScaleModel::uncorrelated(beta.clone(), 2, 1.0).unwrap(), PilotBook::new(2, vec![0, 1, 0], 1.0).unwrap(), beta)
    }

    #[test]
    fn closed_mr_moments_match_montecarlo() {
        let (lsm, pilots, beta) = setup();
        let serving = ServingSets::all_serve(3, 3);
        let st = UlSettings { rho_u: 2.0, varsigma: vec![1.0; 3], trials: 40000, prelog: 1.0 };
        let mc = ul_moments_montecarlo(&lsm, &pilots, &serving, CombinerScheme::Mr, &st, Seed(2)).unwrap();
        let cf = ul_moments_closed_mr(&beta, &pilots, 1.0, 2, &serving, 2.0, &st.varsigma).unwrap();
        let a = ul_se_level3_optimal(&mc, 1.0).unwrap();
        let b = ul_se_level3_optimal(&cf, 1.0).unwrap();
        for k in 0..3 {
            let rel = (a.per_ue_sinr[k] - b.per_ue_sinr[k]).abs() / b.per_ue_sinr[k];
            assert!(rel < 0.03, "{k}: {} vs {}", a.per_ue_sinr[k], b.per_ue_sinr[k]);
        }
    }

    #[test]
    fn optimal_beats_ones_and_single_ap() {
        let (_, pilots, beta) = setup();
        let serving = ServingSets::all_serve(3, 3);
        let mom = ul_moments_closed_mr(&beta, &pilots, 1.0, 2, &serving, 2.0, &[1.0; 3]).unwrap();
        let l3 = ul_se_level3_optimal(&mom, 1.0).unwrap();
        let l2 = ul_se_level2(&mom, 1.0);
        let l1 = ul_se_level1(&mom, 1.0);
        for k in 0..3 {
            assert!(l3.per_ue_se[k] >= l2.per_ue_se[k] - 1e-12);
            assert!(l3.per_ue_se[k] >= l1.per_ue_se[k] - 1e-12);
        }
    }

    #[test]
    fn lpmmse_equals_lmmse_when_all_serve() {
        let (lsm, pilots, _) = setup();
        let stats = Arc::new(EstimationStats::new(&lsm, &pilots).unwrap());
        let mut rng = Seed(4).rng();
        let h = draw_channels_with(&lsm, &mut rng);
        let est = stats.estimate_with(&h, &mut rng);
        let serving = ServingSets::all_serve(3, 3);
        let a = build_combiner(CombinerScheme::Lmmse, &est, &serving, 1.5, &[1.0; 3]).unwrap();
        let b = build_combiner(CombinerScheme::Lpmmse, &est, &serving, 1.5, &[1.0; 3]).unwrap();
        assert_eq!(a.local, b.local);
    }

    #[test]
    fn user_centric_sets_are_consistent() {
        let (_, _, beta) = setup();
        let s = ServingSets::user_centric(&beta, 0.9);
        assert!(s.is_consistent());
        assert!(s.ue_served_by.iter().all(|v| !v.is_empty()));
    }
}
