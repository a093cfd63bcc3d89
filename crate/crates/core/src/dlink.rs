//! Downlink precoding and spectral efficiency.
//!
//! Effective gains follow `a_{kk'} = Σ_ℓ √η_{ℓk'} h_{ℓk}ᴴ w_{ℓk'}`, so the
//! conjugate beamformer is simply `w = ĥ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, hpd_inverse, trace, CMat, CVec, C64};
use crate::netmodel::{draw_channels_with, LargeScaleModel};
use crate::rng::{chunked_trials, Seed};
use crate::training::{ChannelEstimate, EstimationStats, PilotBook};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PrecoderScheme {
    Cb,
    Ncb,
    Ecb,
    Fzf,
    Pzf,
    Ppzf,
    Czf,
}

impl PrecoderScheme {
    pub const ALL: [PrecoderScheme; 7] = [
        PrecoderScheme::Cb,
        PrecoderScheme::Ncb,
        PrecoderScheme::Ecb,
        PrecoderScheme::Fzf,
        PrecoderScheme::Pzf,
        PrecoderScheme::Ppzf,
        PrecoderScheme::Czf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PrecoderScheme::Cb => "CB",
            PrecoderScheme::Ncb => "NCB",
            PrecoderScheme::Ecb => "ECB",
            PrecoderScheme::Fzf => "FZF",
            PrecoderScheme::Pzf => "PZF",
            PrecoderScheme::Ppzf => "PPZF",
            PrecoderScheme::Czf => "CZF",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.label().eq_ignore_ascii_case(s))
    }

    fn needs_groups(self) -> bool {
        matches!(self, PrecoderScheme::Pzf | PrecoderScheme::Ppzf)
    }
}

/// Per-AP split of UEs into strongly and weakly served sets.
#[derive(Clone, Debug, PartialEq)]
pub struct UserGroups {
    pub strong: Vec<Vec<usize>>,
    pub weak: Vec<Vec<usize>>,
}

impl UserGroups {
    pub fn is_strong(&self, m: usize, k: usize) -> bool {
        self.strong[m].contains(&k)
    }

    /// Everybody weak: PPZF and PZF then collapse to MRT.
    pub fn all_weak(m: usize, k: usize) -> Self {
        UserGroups { strong: vec![Vec::new(); m], weak: vec![(0..k).collect(); m] }
    }
}

/// Smallest set of UEs per AP whose β jointly captures `fraction` of the AP's
/// total, optionally capped at `max_strong` members.
pub fn lsf_groups(beta: &DMatrix<f64>, fraction: f64, max_strong: Option<usize>) -> UserGroups {
    let (m, k) = beta.shape();
    let mut strong = Vec::with_capacity(m);
    let mut weak = Vec::with_capacity(m);
    for mm in 0..m {
        let total: f64 = beta.row(mm).iter().sum();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| beta[(mm, b)].partial_cmp(&beta[(mm, a)]).unwrap().then(a.cmp(&b)));
        let mut s = Vec::new();
        let mut acc = 0.0;
        for &u in &order {
            if total <= 0.0 || acc >= fraction * total {
                break;
            }
            if max_strong.is_some_and(|cap| s.len() >= cap) {
                break;
            }
            s.push(u);
            acc += beta[(mm, u)];
        }
        s.sort_unstable();
        let w: Vec<usize> = (0..k).filter(|u| !s.contains(u)).collect();
        strong.push(s);
        weak.push(w);
    }
    UserGroups { strong, weak }
}

#[derive(Clone, Debug)]
pub struct PrecoderSet {
    pub scheme: PrecoderScheme,
    pub k: usize,
    /// Indexed `m*K + k`.
    pub w: Vec<CVec>,
    pub groups: Option<UserGroups>,
    /// Analytic `E{‖w‖²}` per pair where known, `NaN` otherwise.
    pub expected_norm_sq: DMatrix<f64>,
    /// Set when a Gram matrix needed the diagonal ridge.
    pub ridge_used: bool,
}

impl PrecoderSet {
    pub fn get(&self, m: usize, k: usize) -> &CVec {
        &self.w[m * self.k + k]
    }
}

/// Pilot-observation basis at one AP, each column scaled to unit
/// per-antenna variance.
fn pilot_basis(est: &ChannelEstimate, m: usize, pilots: &[usize]) -> CMat {
    let n = est.stats.n;
    let mut b = CMat::zeros(n, pilots.len());
    for (j, &p) in pilots.iter().enumerate() {
        let s = 1.0 / est.stats.obs_var[(m, p)].sqrt();
        b.set_column(j, &(est.observation(m, p) * c(s)));
    }
    b
}

/// `(BᴴB)⁻¹`, falling back to a small ridge when the Gram is singular.
fn gram_inverse(b: &CMat, ridge_used: &mut bool) -> CMat {
    let g = b.adjoint() * b;
    if let Ok(inv) = hpd_inverse(&g) {
        if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return inv;
        }
    }
    *ridge_used = true;
    let t = trace(&g).re.max(f64::MIN_POSITIVE);
    let n = g.nrows();
    hpd_inverse(&(g + CMat::identity(n, n) * c(1e-12 * t))).unwrap_or_else(|_| CMat::zeros(n, n))
}

/// Builds every precoding vector for one channel-estimate draw.
pub fn build_precoder(
    scheme: PrecoderScheme,
    est: &ChannelEstimate,
    pilots: &PilotBook,
    groups: Option<&UserGroups>,
) -> Result<PrecoderSet> {
    let stats = &est.stats;
    let (m, k, n) = (stats.m, stats.k, stats.n);
    if scheme.needs_groups() && groups.is_none() {
        return Err(Error::invalid(format!("{} needs strong/weak user groups", scheme.label())));
    }
    let mut w = vec![CVec::zeros(n); m * k];
    let mut en = DMatrix::from_element(m, k, f64::NAN);
    let mut ridge_used = false;
    let gamma_n = |mm: usize, kk: usize| trace(stats.est_cov(mm, kk)).re;
    match scheme {
        PrecoderScheme::Cb => {
            for mm in 0..m {
                for kk in 0..k {
                    w[mm * k + kk] = est.get(mm, kk).clone();
                    en[(mm, kk)] = gamma_n(mm, kk);
                }
            }
        }
        PrecoderScheme::Ncb => {
            for mm in 0..m {
                for kk in 0..k {
                    let h = est.get(mm, kk);
                    let nrm = h.norm();
                    if nrm > 0.0 {
                        w[mm * k + kk] = h * c(1.0 / nrm);
                    }
                    en[(mm, kk)] = 1.0;
                }
            }
        }
        PrecoderScheme::Ecb => {
            for mm in 0..m {
                for kk in 0..k {
                    let h = est.get(mm, kk);
                    let nsq = h.norm_squared();
                    if nsq > 0.0 {
                        w[mm * k + kk] = h * c(1.0 / nsq);
                    }
                    let g = stats.gamma[(mm, kk)];
                    if n > 1 && g > 0.0 && !pilots_correlated(stats) {
                        en[(mm, kk)] = 1.0 / ((n as f64 - 1.0) * g);
                    }
                }
            }
        }
        PrecoderScheme::Fzf => {
            let used = pilots.used_pilots();
            if n <= used.len() {
                return Err(Error::InvalidConfiguration {
                    ap: 0,
                    reason: format!("FZF needs N > {} pilots in use, got N = {n}", used.len()),
                });
            }
            let scale = c(((n - used.len()) as f64).sqrt());
            for mm in 0..m {
                let b = pilot_basis(est, mm, &used);
                let bw = &b * gram_inverse(&b, &mut ridge_used) * scale;
                for kk in 0..k {
                    let col = used.iter().position(|&p| p == pilots.assignment[kk]).unwrap();
                    if stats.gamma[(mm, kk)] > 0.0 {
                        w[mm * k + kk] = bw.column(col).into_owned();
                    }
                    en[(mm, kk)] = if stats.gamma[(mm, kk)] > 0.0 { 1.0 } else { 0.0 };
                }
            }
        }
        PrecoderScheme::Pzf | PrecoderScheme::Ppzf => {
            let groups = groups.unwrap();
            for mm in 0..m {
                let mut sp: Vec<usize> = groups.strong[mm].iter().map(|&u| pilots.assignment[u]).collect();
                sp.sort_unstable();
                sp.dedup();
                if n <= sp.len() {
                    return Err(Error::InvalidConfiguration {
                        ap: mm,
                        reason: format!(
                            "{} needs N > {} strong pilots, got N = {n}",
                            scheme.label(),
                            sp.len()
                        ),
                    });
                }
                let b = pilot_basis(est, mm, &sp);
                let ginv = gram_inverse(&b, &mut ridge_used);
                let zf = &b * &ginv * c(((n - sp.len()) as f64).sqrt());
                let proj = CMat::identity(n, n) - &b * &ginv * b.adjoint();
                for kk in 0..k {
                    let g = stats.gamma[(mm, kk)];
                    let idx = mm * k + kk;
                    if g <= 0.0 {
                        en[(mm, kk)] = 0.0;
                        continue;
                    }
                    if groups.is_strong(mm, kk) {
                        let col = sp.iter().position(|&p| p == pilots.assignment[kk]).unwrap();
                        w[idx] = zf.column(col).into_owned();
                        en[(mm, kk)] = 1.0;
                    } else if scheme == PrecoderScheme::Pzf {
                        w[idx] = est.get(mm, kk) * c(1.0 / gamma_n(mm, kk).sqrt());
                        en[(mm, kk)] = 1.0;
                    } else {
                        let dof = (n - sp.len()) as f64;
                        w[idx] = &proj * est.get(mm, kk) * c(1.0 / (dof * g).sqrt());
                        en[(mm, kk)] = if sp.contains(&pilots.assignment[kk]) { 0.0 } else { 1.0 };
                    }
                }
            }
        }
        PrecoderScheme::Czf => {
            if m * n < k {
                return Err(Error::InvalidConfiguration {
                    ap: 0,
                    reason: format!("centralized ZF needs MN >= K, got MN = {} and K = {k}", m * n),
                });
            }
            let mut g = CMat::zeros(m * n, k);
            for mm in 0..m {
                for kk in 0..k {
                    g.view_mut((mm * n, kk), (n, 1)).copy_from(est.get(mm, kk));
                }
            }
            let wz = &g * gram_inverse(&g, &mut ridge_used);
            for mm in 0..m {
                for kk in 0..k {
                    w[mm * k + kk] = wz.view((mm * n, kk), (n, 1)).column(0).into_owned();
                }
            }
        }
    }
    Ok(PrecoderSet {
        scheme,
        k,
        w,
        groups: groups.cloned(),
        expected_norm_sq: en,
        ridge_used,
    })
}

fn pilots_correlated(stats: &EstimationStats) -> bool {
    stats.est_cov.iter().any(|e| {
        let d = e[(0, 0)].re;
        e.iter().enumerate().any(|(i, z)| {
            let (r, cc) = (i % e.nrows(), i / e.nrows());
            if r == cc {
                (z.re - d).abs() > 1e-12 * d.abs().max(1e-300)
            } else {
                z.norm() > 1e-12 * d.abs().max(1e-300)
            }
        })
    })
}

/// Downlink power coefficients η (M×K) and normalised SNR `ρ_d = p_d/σ²`.
#[derive(Clone, Debug, PartialEq)]
pub struct DlPower {
    pub eta: DMatrix<f64>,
    pub rho_d: f64,
}

/// Per-UE SINR and SE with aggregates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeReport {
    pub per_ue_sinr: Vec<f64>,
    pub per_ue_se: Vec<f64>,
    pub sum_se: f64,
    pub min_se: f64,
}

impl SeReport {
    pub fn from_sinr(sinr: Vec<f64>, prelog: f64) -> Self {
        let se: Vec<f64> = sinr.iter().map(|s| prelog * (1.0 + s.max(0.0)).log2()).collect();
        Self::from_parts(sinr, se)
    }

    pub fn from_parts(sinr: Vec<f64>, se: Vec<f64>) -> Self {
        let sum_se = se.iter().sum();
        let min_se = se.iter().cloned().fold(f64::INFINITY, f64::min);
        SeReport { per_ue_sinr: sinr, per_ue_se: se, sum_se, min_se: if min_se.is_finite() { min_se } else { 0.0 } }
    }
}

/// Monte Carlo output: the hardening bound plus diagnostics.
#[derive(Clone, Debug)]
pub struct DlMonteCarlo {
    pub report: SeReport,
    /// Sample `E{‖s_ℓ‖²}/ρ_d` per AP.
    pub ap_power: Vec<f64>,
    /// `Var(a_kk)/|E{a_kk}|²` per UE.
    pub hardening: Vec<f64>,
    /// Sample `E{a_kk}` per UE.
    pub mean_gain: Vec<C64>,
    /// Sample `E{|a_kk'|²}` (K×K).
    pub second_moment: DMatrix<f64>,
    pub ridge_used: bool,
}

#[derive(Clone)]
struct DlAcc {
    n: usize,
    mean: Vec<C64>,
    second: DMatrix<f64>,
    power: Vec<f64>,
    ridge: bool,
}

impl DlAcc {
    fn new(m: usize, k: usize) -> Self {
        DlAcc { n: 0, mean: vec![C64::new(0.0, 0.0); k], second: DMatrix::zeros(k, k), power: vec![0.0; m], ridge: false }
    }

    fn merge(mut a: DlAcc, b: DlAcc) -> DlAcc {
        a.n += b.n;
        for (x, y) in a.mean.iter_mut().zip(b.mean) {
            *x += y;
        }
        a.second += b.second;
        for (x, y) in a.power.iter_mut().zip(b.power) {
            *x += y;
        }
        a.ridge |= b.ridge;
        a
    }
}

/// Settings shared by all Monte Carlo downlink evaluations.
#[derive(Clone, Debug)]
pub struct DlMcSettings {
    pub scheme: PrecoderScheme,
    pub groups: Option<UserGroups>,
    pub trials: usize,
    pub prelog: f64,
}

/// Hardening-bound SE from sample moments of the effective gains.
pub fn dl_se_montecarlo(
    lsm: &LargeScaleModel,
    pilots: &PilotBook,
    power: &DlPower,
    settings: &DlMcSettings,
    seed: Seed,
) -> Result<DlMonteCarlo> {
    let (m, k) = (lsm.m(), lsm.k());
    if power.eta.shape() != (m, k) {
        return Err(Error::invalid("eta must be M×K"));
    }
    if power.eta.iter().any(|e| *e < 0.0) {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    if settings.trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let stats = Arc::new(EstimationStats::new(lsm, pilots)?);
    let sqrt_eta = power.eta.map(f64::sqrt);
    // Surface configuration errors before spawning work.
    {
        let mut rng = seed.named("probe").rng();
        let h = draw_channels_with(lsm, &mut rng);
        let est = stats.estimate_with(&h, &mut rng);
        build_precoder(settings.scheme, &est, pilots, settings.groups.as_ref())?;
    }
    let acc = chunked_trials(
        seed,
        settings.trials,
        256,
        |rng, len| {
            let mut acc = DlAcc::new(m, k);
            for _ in 0..len {
                let h = draw_channels_with(lsm, rng);
                let est = stats.estimate_with(&h, rng);
                let pre = build_precoder(settings.scheme, &est, pilots, settings.groups.as_ref())
                    .expect("checked above");
                acc.ridge |= pre.ridge_used;
                for mm in 0..m {
                    let mut p = 0.0;
                    for kk in 0..k {
                        p += power.eta[(mm, kk)] * pre.get(mm, kk).norm_squared();
                    }
                    acc.power[mm] += p;
                }
                for kk in 0..k {
                    for kp in 0..k {
                        let mut a = C64::new(0.0, 0.0);
                        for mm in 0..m {
                            let s = sqrt_eta[(mm, kp)];
                            if s > 0.0 {
                                a += h.get(mm, kk).dotc(pre.get(mm, kp)) * s;
                            }
                        }
                        if kk == kp {
                            acc.mean[kk] += a;
                        }
                        acc.second[(kk, kp)] += a.norm_sqr();
                    }
                }
                acc.n += 1;
            }
            acc
        },
        DlAcc::merge,
    )
    .expect("at least one chunk");
    let t = acc.n as f64;
    let mean: Vec<C64> = acc.mean.iter().map(|z| z / t).collect();
    let second = acc.second / t;
    let mut sinr = Vec::with_capacity(k);
    let mut hardening = Vec::with_capacity(k);
    for kk in 0..k {
        let sig = mean[kk].norm_sqr();
        let total: f64 = second.row(kk).iter().sum();
        let denom = total - sig + 1.0 / power.rho_d;
        sinr.push(if sig > 0.0 { sig / denom } else { 0.0 });
        hardening.push(if sig > 0.0 { (second[(kk, kk)] - sig).max(0.0) / sig } else { f64::NAN });
    }
    Ok(DlMonteCarlo {
        report: SeReport::from_sinr(sinr, settings.prelog),
        ap_power: acc.power.iter().map(|p| p / t).collect(),
        hardening,
        mean_gain: mean,
        second_moment: second,
        ridge_used: acc.ridge,
    })
}

/// Closed-form CB SINR for uncorrelated fading and orthogonal pilots:
/// `(N√ρ Σ√η γ)² / (ρN Σ_{k'} Σ_m η_{mk'} β_{mk} γ_{mk'} + 1)`.
pub fn dl_sinr_closed_cb(beta: &DMatrix<f64>, gamma: &DMatrix<f64>, eta: &DMatrix<f64>, rho_d: f64, n: usize) -> Vec<f64> {
    let (m, k) = beta.shape();
    let nf = n as f64;
    (0..k)
        .map(|kk| {
            let coh: f64 = (0..m).map(|mm| eta[(mm, kk)].sqrt() * gamma[(mm, kk)]).sum();
            let num = rho_d * (nf * coh).powi(2);
            let mut inter = 0.0;
            for kp in 0..k {
                for mm in 0..m {
                    inter += eta[(mm, kp)] * beta[(mm, kk)] * gamma[(mm, kp)];
                }
            }
            num / (rho_d * nf * inter + 1.0)
        })
        .collect()
}

pub fn dl_se_closed_cb(
    beta: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    eta: &DMatrix<f64>,
    rho_d: f64,
    n: usize,
    prelog: f64,
) -> SeReport {
    SeReport::from_sinr(dl_sinr_closed_cb(beta, gamma, eta, rho_d, n), prelog)
}

/// Closed-form CB SINR with pilot contamination (uncorrelated fading).
/// Reduces to [`dl_sinr_closed_cb`] for orthogonal pilots.
pub fn dl_sinr_closed_cb_contaminated(
    beta: &DMatrix<f64>,
    eta: &DMatrix<f64>,
    pilots: &PilotBook,
    rho_p: f64,
    rho_d: f64,
    n: usize,
) -> Vec<f64> {
    let (m, k) = beta.shape();
    let nf = n as f64;
    let tau = pilots.tau_up as f64;
    let gamma = crate::training::gamma_uncorrelated(beta, pilots, rho_p);
    let phi = |mm: usize, kk: usize| -> f64 {
        pilots.copilots(kk).iter().map(|&t| tau * rho_p * pilots.pilot_power[t] * beta[(mm, t)]).sum::<f64>() + 1.0
    };
    (0..k)
        .map(|kk| {
            let coh: f64 = (0..m).map(|mm| eta[(mm, kk)].sqrt() * gamma[(mm, kk)]).sum();
            let num = rho_d * (nf * coh).powi(2);
            let mut contam = 0.0;
            for &kp in pilots.copilots(kk).iter().filter(|&&t| t != kk) {
                let s: f64 = (0..m)
                    .map(|mm| {
                        let x = tau * rho_p * (pilots.pilot_power[kk] * pilots.pilot_power[kp]).sqrt()
                            * beta[(mm, kk)]
                            * beta[(mm, kp)]
                            / phi(mm, kk);
                        eta[(mm, kp)].sqrt() * x
                    })
                    .sum();
                contam += (nf * s).powi(2);
            }
            let mut inter = 0.0;
            for kp in 0..k {
                for mm in 0..m {
                    inter += eta[(mm, kp)] * beta[(mm, kk)] * gamma[(mm, kp)];
                }
            }
            num / (rho_d * contam + rho_d * nf * inter + 1.0)
        })
        .collect()
}

/// Full-power CB coefficients with equal share per UE: `η_{mk} = 1/(N Σ_k γ_{mk})`.
pub fn uniform_cb_eta(gamma: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let (m, k) = gamma.shape();
    DMatrix::from_fn(m, k, |mm, _| {
        let s: f64 = gamma.row(mm).iter().sum();
        if s > 0.0 {
            1.0 / (n as f64 * s)
        } else {
            0.0
        }
    })
}

/// Closed-form CB SE at uniform full power for a pilot book; the default
/// evaluator for greedy pilot assignment.
pub fn uniform_cb_se(
    beta: &DMatrix<f64>,
    pilots: &PilotBook,
    n: usize,
    rho_p: f64,
    rho_d: f64,
    prelog: f64,
) -> Vec<f64> {
    let gamma = crate::training::gamma_uncorrelated(beta, pilots, rho_p);
    let eta = uniform_cb_eta(&gamma, n);
    let sinr = dl_sinr_closed_cb_contaminated(beta, &eta, pilots, rho_p, rho_d, n);
    sinr.iter().map(|s| prelog * (1.0 + s).log2()).collect()
}

/// Equal-share coefficients `η_{mk} = 1/(K E{‖w_{mk}‖²})`, using the analytic
/// norm where the scheme provides one and `fallback` otherwise.
pub fn uniform_eta_from_norms(expected_norm_sq: &DMatrix<f64>, fallback: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, k) = expected_norm_sq.shape();
    DMatrix::from_fn(m, k, |mm, kk| {
        let e = expected_norm_sq[(mm, kk)];
        let e = if e.is_finite() { e } else { fallback[(mm, kk)] };
        if e > 0.0 && e.is_finite() {
            1.0 / (k as f64 * e)
        } else {
            0.0
        }
    })
}

/// Sample `E{‖w_{mk}‖²}` over `trials` estimate draws.
pub fn empirical_norms(
    lsm: &LargeScaleModel,
    pilots: &PilotBook,
    scheme: PrecoderScheme,
    groups: Option<&UserGroups>,
    trials: usize,
    seed: Seed,
) -> Result<DMatrix<f64>> {
    let stats = Arc::new(EstimationStats::new(lsm, pilots)?);
    let (m, k) = (lsm.m(), lsm.k());
    let mut acc = DMatrix::zeros(m, k);
    let mut rng = seed.rng();
    for _ in 0..trials.max(1) {
        let h = draw_channels_with(lsm, &mut rng);
        let est = stats.estimate_with(&h, &mut rng);
        let pre = build_precoder(scheme, &est, pilots, groups)?;
        for mm in 0..m {
            for kk in 0..k {
                acc[(mm, kk)] += pre.get(mm, kk).norm_squared();
            }
        }
    }
    Ok(acc / trials.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_closed_form() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let s = dl_sinr_closed_cb(&one, &one, &one, 1.0, 1);
        assert!((s[0] - 0.5).abs() < 1e-15);
        let zero = DMatrix::zeros(1, 1);
        assert_eq!(dl_sinr_closed_cb(&one, &one, &zero, 1.0, 1)[0], 0.0);
    }

    #[test]
    fn groups_partition() {
        let beta = DMatrix::from_row_slice(2, 3, &[10.0, 1.0, 0.1, 1.0, 1.0, 1.0]);
        let g = lsf_groups(&beta, 0.95, None);
        assert_eq!(g.strong[0], vec![0, 1]);
        assert_eq!(g.weak[0], vec![2]);
        assert_eq!(g.strong[1].len(), 3);
        let capped = lsf_groups(&beta, 0.95, Some(1));
        assert_eq!(capped.strong[1], vec![0]);
    }

    #[test]
    fn scheme_labels_roundtrip() {
        for s in PrecoderScheme::ALL {
            assert_eq!(PrecoderScheme::parse(s.label()), Some(s));
        }
    }

    #[test]
    fn montecarlo_matches_closed_form_cb() {
        let beta = DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.5, 0.8, 0.1, 2.0]);
        let lsm = LargeScaleModel::uncorrelated(beta.clone(), 4, 1.0).unwrap();
        let pilots = PilotBook::round_robin(2, 2, 1.0).unwrap();
        let gamma = crate::training::gamma_uncorrelated(&beta, &pilots, 1.0);
        let eta = uniform_cb_eta(&gamma, 4);
        let power = DlPower { eta: eta.clone(), rho_d: 2.0 };
        let settings = DlMcSettings { scheme: PrecoderScheme::Cb, groups: None, trials: 20000, prelog: 1.0 };
        let mc = dl_se_montecarlo(&lsm, &pilots, &power, &settings, Seed(3)).unwrap();
        let cf = dl_sinr_closed_cb(&beta, &gamma, &eta, 2.0, 4);
        for k in 0..2 {
            let rel = (mc.report.per_ue_sinr[k] - cf[k]).abs() / cf[k];
            assert!(rel < 0.03, "{k}: {} vs {}", mc.report.per_ue_sinr[k], cf[k]);
        }
        for p in &mc.ap_power {
            assert!((p - 1.0).abs() < 0.03, "{p}");
        }
    }

    #[test]
    fn contaminated_matches_montecarlo() {
        let beta = DMatrix::from_row_slice(2, 3, &[1.0, 0.4, 0.7, 0.3, 1.5, 0.9]);
        let lsm = LargeScaleModel::uncorrelated(beta.clone(), 3, 1.0).unwrap();
        let pilots = PilotBook::new(2, vec![0, 1, 0], 1.0).unwrap();
        let gamma = crate::training::gamma_uncorrelated(&beta, &pilots, 1.0);
        let eta = uniform_cb_eta(&gamma, 3);
        let power = DlPower { eta: eta.clone(), rho_d: 3.0 };
        let settings = DlMcSettings { scheme: PrecoderScheme::Cb, groups: None, trials: 40000, prelog: 1.0 };
        let mc = dl_se_montecarlo(&lsm, &pilots, &power, &settings, Seed(5)).unwrap();
        let cf = dl_sinr_closed_cb_contaminated(&beta, &eta, &pilots, 1.0, 3.0, 3);
        for k in 0..3 {
            let rel = (mc.report.per_ue_sinr[k] - cf[k]).abs() / cf[k];
            assert!(rel < 0.03, "{k}: {} vs {}", mc.report.per_ue_sinr[k], cf[k]);
        }
    }

    #[test]
    fn full_zf_nulls_other_pilots() {
        let beta = DMatrix::from_row_slice(1, 3, &[1.0, 0.5, 0.2]);
        let lsm = LargeScaleModel::uncorrelated(beta, 6, 1.0).unwrap();
        let pilots = PilotBook::round_robin(3, 3, 10.0).unwrap();
        let stats = Arc::new(EstimationStats::new(&lsm, &pilots).unwrap());
        let mut rng = Seed(1).rng();
        let h = draw_channels_with(&lsm, &mut rng);
        let est = stats.estimate_with(&h, &mut rng);
        let pre = build_precoder(PrecoderScheme::Fzf, &est, &pilots, None).unwrap();
        for k in 0..3 {
            for j in 0..3 {
                let v = est.get(0, j).dotc(pre.get(0, k)).norm();
                if j != k {
                    assert!(v < 1e-9, "{v}");
                } else {
                    assert!(v > 1e-6);
                }
            }
        }
        let ncb = build_precoder(PrecoderScheme::Ncb, &est, &pilots, None).unwrap();
        assert!((ncb.get(0, 1).norm() - 1.0).abs() < 1e-12);
    }
}
