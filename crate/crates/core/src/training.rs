//! Pilot assignment and MMSE channel estimation.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::{c, cosine, hpd_inverse, trace, CMat, CVec};
use crate::netmodel::{ChannelRealization, LargeScaleModel, NetworkGeometry};
use crate::rng::{cn01, Seed, SimRng};
use crate::{Error, Result};

/// Pilot indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotBook {
    pub tau_up: usize,
    pub assignment: Vec<usize>,
    /// Per-UE pilot power fraction ς_k.
    pub pilot_power: Vec<f64>,
    /// Pilot symbol power in watts.
    pub p_p: f64,
}

impl PilotBook {
    pub fn new(tau_up: usize, assignment: Vec<usize>, p_p: f64) -> Result<Self> {
        if tau_up == 0 {
            return Err(Error::invalid("tau_up must be at least 1"));
        }
        if let Some(bad) = assignment.iter().find(|&&i| i >= tau_up) {
            return Err(Error::invalid(format!("pilot index {bad} out of range for tau_up={tau_up}")));
        }
        if p_p < 0.0 {
            return Err(Error::invalid("pilot power must be nonnegative"));
        }
        let k = assignment.len();
        Ok(PilotBook { tau_up, assignment, pilot_power: vec![1.0; k], p_p })
    }

    /// UE `k` gets pilot `k mod tau_up`.
    pub fn round_robin(k: usize, tau_up: usize, p_p: f64) -> Result<Self> {
        Self::new(tau_up, (0..k).map(|i| i % tau_up.max(1)).collect(), p_p)
    }

    pub fn with_pilot_power(mut self, varsigma: Vec<f64>) -> Result<Self> {
        if varsigma.len() != self.assignment.len() || varsigma.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("pilot power fractions must be K values in [0, 1]"));
        }
        self.pilot_power = varsigma;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.assignment.len()
    }

    /// The set P_k of UEs sharing the pilot of UE `k` (including `k`).
    pub fn copilots(&self, k: usize) -> Vec<usize> {
        let p = self.assignment[k];
        (0..self.k()).filter(|&t| self.assignment[t] == p).collect()
    }

    pub fn users_of_pilot(&self, pilot: usize) -> Vec<usize> {
        (0..self.k()).filter(|&t| self.assignment[t] == pilot).collect()
    }

    pub fn is_orthogonal(&self) -> bool {
        let mut seen = vec![false; self.tau_up];
        for &p in &self.assignment {
            if seen[p] {
                return false;
            }
            seen[p] = true;
        }
        true
    }

    /// Pilots that at least one UE uses, ascending.
    pub fn used_pilots(&self) -> Vec<usize> {
        let mut v = self.assignment.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

pub fn assign_pilots_random(k: usize, tau_up: usize, p_p: f64, seed: Seed) -> Result<PilotBook> {
    if tau_up == 0 {
        return Err(Error::invalid("tau_up must be at least 1"));
    }
    let mut rng = seed.rng();
    let assignment = if tau_up >= k {
        let mut all: Vec<usize> = (0..tau_up).collect();
        all.shuffle(&mut rng);
        all.truncate(k);
        all
    } else {
        (0..k).map(|_| rng.random_range(0..tau_up)).collect()
    };
    PilotBook::new(tau_up, assignment, p_p)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Repeatedly moves the weakest UE to the pilot that maximises the minimum
/// SE reported by `evaluator`. Stops after `iterations` updates or when no
/// candidate strictly improves the minimum.
pub fn assign_pilots_greedy<F>(initial: &PilotBook, iterations: usize, evaluator: F) -> Result<PilotBook>
where
    F: Fn(&PilotBook) -> Result<Vec<f64>>,
{
    let mut current = initial.clone();
    let mut se = evaluator(&current)?;
    for _ in 0..iterations {
        let worst = se
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc })
            .0;
        let base = min_of(&se);
        let mut best: Option<(PilotBook, Vec<f64>, f64)> = None;
        for p in 0..current.tau_up {
            if p == current.assignment[worst] {
                continue;
            }
            let mut cand = current.clone();
            cand.assignment[worst] = p;
            let cse = evaluator(&cand)?;
            let cmin = min_of(&cse);
            if cmin > best.as_ref().map_or(base, |b| b.2) {
                best = Some((cand, cse, cmin));
            }
        }
        match best {
            Some((b, bse, _)) => {
                current = b;
                se = bse;
            }
            None => break,
        }
    }
    Ok(current)
}

/// Location clustering: ⌈K/τ⌉ clusters of at most τ UEs each, orthogonal
/// pilots inside every cluster.
pub fn assign_pilots_kmeans(geometry: &NetworkGeometry, tau_up: usize, p_p: f64) -> Result<PilotBook> {
    let k = geometry.k();
    if tau_up == 0 {
        return Err(Error::invalid("tau_up must be at least 1"));
    }
    let n_clusters = k.div_ceil(tau_up);
    let pos = &geometry.ue_positions;
    let dist = |a: [f64; 2], b: [f64; 2]| geometry.distance(a, b);

    let mut centroids: Vec<[f64; 2]> = vec![pos[0]];
    while centroids.len() < n_clusters {
        let mut best = (0usize, -1.0f64);
        for (i, p) in pos.iter().enumerate() {
            let d = centroids.iter().map(|c| dist(*p, *c)).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (i, d);
            }
        }
        centroids.push(pos[best.0]);
    }

    let mut labels = vec![usize::MAX; k];
    for _ in 0..50 {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * n_clusters);
        for (i, p) in pos.iter().enumerate() {
            for (j, cc) in centroids.iter().enumerate() {
                pairs.push((dist(*p, *cc), i, j));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut new_labels = vec![usize::MAX; k];
        let mut load = vec![0usize; n_clusters];
        for (_, i, j) in pairs {
            if new_labels[i] == usize::MAX && load[j] < tau_up {
                new_labels[i] = j;
                load[j] += 1;
            }
        }
        let changed = new_labels != labels;
        labels = new_labels;
        for (j, cc) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..k).filter(|&i| labels[i] == j).collect();
            if !members.is_empty() {
                let n = members.len() as f64;
                *cc = [
                    members.iter().map(|&i| pos[i][0]).sum::<f64>() / n,
                    members.iter().map(|&i| pos[i][1]).sum::<f64>() / n,
                ];
            }
        }
        if !changed {
            break;
        }
    }

    let mut assignment = vec![0; k];
    let mut next = vec![0usize; n_clusters];
    for i in 0..k {
        let j = labels[i];
        assignment[i] = next[j];
        next[j] += 1;
    }
    PilotBook::new(tau_up, assignment, p_p)
}

/// Deterministic MMSE statistics shared by every channel draw of one drop.
#[derive(Debug)]
pub struct EstimationStats {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// Normalised pilot SNR `p_p / σ²`.
    pub rho_p: f64,
    /// `√(τ ς_k ρ_p) R Φ⁻¹`, indexed `m*K + k`.
    pub filter: Vec<CMat>,
    /// Estimate covariance `τ ς ρ_p R Φ⁻¹ R`.
    pub est_cov: Vec<CMat>,
    /// Error covariance `R − est_cov`.
    pub err_cov: Vec<CMat>,
    /// `tr(est_cov)/N`, equal to γ_{mk} for uncorrelated fading.
    pub gamma: DMatrix<f64>,
    pub pilots: PilotBook,
    /// Mean per-antenna variance of the pilot observation `y_{m,i}` (M×τ).
    pub obs_var: DMatrix<f64>,
    /// Scalar filter coefficient per pair when fading is uncorrelated.
    scalar: Option<Vec<f64>>,
    sqrt_power: Vec<f64>,
}

impl EstimationStats {
    pub fn new(lsm: &LargeScaleModel, pilots: &PilotBook) -> Result<Self> {
        let (m, k, n) = (lsm.m(), lsm.k(), lsm.n());
        if pilots.k() != k {
            return Err(Error::invalid("pilot book and large-scale model disagree on K"));
        }
        if !(lsm.noise_power > 0.0) {
            return Err(Error::NumericalDomain("noise power must be positive".into()));
        }
        let rho_p = pilots.p_p / lsm.noise_power;
        let tau = pilots.tau_up as f64;
        let sqrt_power: Vec<f64> = (0..k).map(|t| (tau * pilots.pilot_power[t] * rho_p).sqrt()).collect();
        let mut filter = Vec::with_capacity(m * k);
        let mut est_cov = Vec::with_capacity(m * k);
        let mut err_cov = Vec::with_capacity(m * k);
        let mut gamma = DMatrix::zeros(m, k);
        let mut scalar = if lsm.correlated { None } else { Some(Vec::with_capacity(m * k)) };
        for mm in 0..m {
            for kk in 0..k {
                let r = lsm.r(mm, kk);
                if let Some(sc) = scalar.as_mut() {
                    let denom: f64 = pilots
                        .copilots(kk)
                        .iter()
                        .map(|&t| sqrt_power[t].powi(2) * lsm.beta[(mm, t)])
                        .sum::<f64>()
                        + 1.0;
                    let b = lsm.beta[(mm, kk)];
                    let coef = sqrt_power[kk] * b / denom;
                    let g = sqrt_power[kk] * b * coef;
                    sc.push(coef);
                    filter.push(CMat::identity(n, n) * c(coef));
                    est_cov.push(CMat::identity(n, n) * c(g));
                    err_cov.push(CMat::identity(n, n) * c(b - g));
                    gamma[(mm, kk)] = g;
                } else {
                    let mut phi = CMat::identity(n, n);
                    for &t in &pilots.copilots(kk) {
                        phi += lsm.r(mm, t) * c(sqrt_power[t].powi(2));
                    }
                    let phi_inv = hpd_inverse(&phi)?;
                    let f = r * &phi_inv * c(sqrt_power[kk]);
                    let ec = &f * r * c(sqrt_power[kk]);
                    let ec = (&ec + ec.adjoint()) * c(0.5);
                    gamma[(mm, kk)] = trace(&ec).re / n as f64;
                    err_cov.push(r - &ec);
                    est_cov.push(ec);
                    filter.push(f);
                }
            }
        }
        let mut obs_var = DMatrix::zeros(m, pilots.tau_up);
        for mm in 0..m {
            for p in 0..pilots.tau_up {
                let mut v = 1.0;
                for t in pilots.users_of_pilot(p) {
                    v += sqrt_power[t].powi(2) * trace(lsm.r(mm, t)).re / n as f64;
                }
                obs_var[(mm, p)] = v;
            }
        }
        Ok(EstimationStats {
            m,
            obs_var,
            k,
            n,
            rho_p,
            filter,
            est_cov,
            err_cov,
            gamma,
            pilots: pilots.clone(),
            scalar,
            sqrt_power,
        })
    }

    pub fn est_cov(&self, m: usize, k: usize) -> &CMat {
        &self.est_cov[m * self.k + k]
    }

    pub fn err_cov(&self, m: usize, k: usize) -> &CMat {
        &self.err_cov[m * self.k + k]
    }

    /// Forms the pilot observations for one draw and the resulting estimates.
    pub fn estimate_with(self: &Arc<Self>, h: &ChannelRealization, rng: &mut SimRng) -> ChannelEstimate {
        let tau = self.pilots.tau_up;
        let n = self.n;
        let users: Vec<Vec<usize>> = (0..tau).map(|p| self.pilots.users_of_pilot(p)).collect();
        let mut y = Vec::with_capacity(self.m * tau);
        for m in 0..self.m {
            for us in users.iter() {
                let mut v = CVec::from_fn(n, |_, _| cn01(rng));
                for &t in us {
                    v.axpy(c(self.sqrt_power[t]), h.get(m, t), c(1.0));
                }
                y.push(v);
            }
        }
        let mut h_hat = Vec::with_capacity(self.m * self.k);
        for m in 0..self.m {
            for k in 0..self.k {
                let yy = &y[m * tau + self.pilots.assignment[k]];
                let idx = m * self.k + k;
                match &self.scalar {
                    Some(sc) => h_hat.push(yy * c(sc[idx])),
                    None => h_hat.push(&self.filter[idx] * yy),
                }
            }
        }
        ChannelEstimate { k: self.k, tau_up: tau, h_hat, y, stats: Arc::clone(self) }
    }
}

/// Estimates for one draw together with the pilot observations they came from.
#[derive(Clone, Debug)]
pub struct ChannelEstimate {
    pub k: usize,
    pub tau_up: usize,
    pub h_hat: Vec<CVec>,
    /// Observation `y_{m,i}` for AP `m` and pilot `i`, indexed `m*τ + i`.
    pub y: Vec<CVec>,
    pub stats: Arc<EstimationStats>,
}

impl ChannelEstimate {
    pub fn get(&self, m: usize, k: usize) -> &CVec {
        &self.h_hat[m * self.k + k]
    }

    pub fn observation(&self, m: usize, pilot: usize) -> &CVec {
        &self.y[m * self.tau_up + pilot]
    }
}

/// One-shot estimate with fresh pilot noise drawn from `seed`.
pub fn mmse_estimate(
    lsm: &LargeScaleModel,
    realization: &ChannelRealization,
    pilots: &PilotBook,
    seed: Seed,
) -> Result<ChannelEstimate> {
    let stats = Arc::new(EstimationStats::new(lsm, pilots)?);
    Ok(stats.estimate_with(realization, &mut seed.rng()))
}

/// Scalar MMSE variance `τρς β² / (τρ Σ_{P_k} ς β + 1)` for uncorrelated fading.
pub fn gamma_uncorrelated(beta: &DMatrix<f64>, pilots: &PilotBook, rho_p: f64) -> DMatrix<f64> {
    let (m, k) = beta.shape();
    let tau = pilots.tau_up as f64;
    DMatrix::from_fn(m, k, |mm, kk| {
        let denom: f64 = pilots
            .copilots(kk)
            .iter()
            .map(|&t| tau * rho_p * pilots.pilot_power[t] * beta[(mm, t)])
            .sum::<f64>()
            + 1.0;
        tau * rho_p * pilots.pilot_power[kk] * beta[(mm, kk)].powi(2) / denom
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollinearityEntry {
    pub ap: usize,
    pub k: usize,
    pub t: usize,
    /// `None` when one of the estimates is the zero vector.
    pub cosine: Option<f64>,
}

/// Cosine similarity of every co-pilot estimate pair at every AP.
pub fn contamination_collinearity(est: &ChannelEstimate, pilots: &PilotBook) -> Vec<CollinearityEntry> {
    let m = est.stats.m;
    let mut out = Vec::new();
    for ap in 0..m {
        for k in 0..pilots.k() {
            for t in (k + 1)..pilots.k() {
                if pilots.assignment[k] == pilots.assignment[t] {
                    out.push(CollinearityEntry { ap, k, t, cosine: cosine(est.get(ap, k), est.get(ap, t)) });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copilot_sets_are_symmetric() {
        let pb = PilotBook::new(2, vec![0, 1, 0, 1], 0.1).unwrap();
        for k in 0..4 {
            for t in pb.copilots(k) {
                assert!(pb.copilots(t).contains(&k));
            }
            assert!(pb.copilots(k).contains(&k));
        }
        assert!(!pb.is_orthogonal());
    }

    #[test]
    fn bad_index_rejected() {
        assert!(PilotBook::new(2, vec![0, 2], 0.1).is_err());
    }

    #[test]
    fn zero_pilot_power_gives_zero_estimate() {
        let beta = DMatrix::from_element(2, 2, 1e-9);
        let lsm = LargeScaleModel::uncorrelated(beta, 3, 1e-13).unwrap();
        let pb = PilotBook::new(2, vec![0, 1], 0.0).unwrap();
        let h = crate::netmodel::draw_channels(&lsm, Seed(1));
        let est = mmse_estimate(&lsm, &h, &pb, Seed(2)).unwrap();
        assert!(est.h_hat.iter().all(|v| v.norm() == 0.0));
        assert!(est.stats.gamma.iter().all(|g| *g == 0.0));
    }
}
