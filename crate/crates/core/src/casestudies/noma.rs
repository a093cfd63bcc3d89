//! Downlink NOMA: UEs are paired into clusters that share a pilot and a CB
//! beam, and each UE removes weaker UEs' messages by SIC.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{clean_gamma, log2_1p, Radio};
use crate::dlink::SeReport;
use crate::netmodel::{drop_network, three_slope_beta, NetworkGeometry, PathLossParams};
use crate::powerctrl::{solve_maxmin_bisection, MaxMinOptions, PowerGroup, PowerProblem, SinrLink};
use crate::{Error, Result, Seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NomaSetup {
    pub m: usize,
    /// Number of clusters.
    pub l: usize,
    /// UEs per cluster.
    pub k_l: usize,
    pub n: usize,
    pub area_side: f64,
    pub tau_c: usize,
    pub p_p: f64,
    pub p_d: f64,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for NomaSetup {
    fn default() -> Self {
        NomaSetup {
            m: 20,
            l: 50,
            k_l: 2,
            n: 15,
            area_side: 1000.0,
            tau_c: 110,
            p_p: 0.1,
            p_d: 0.2,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

impl NomaSetup {
    pub fn k(&self) -> usize {
        self.l * self.k_l
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 || self.k_l == 0 || self.n == 0 {
            return Err(Error::invalid("NOMA needs APs, antennas and nonempty clusters"));
        }
        if self.k() >= self.tau_c {
            return Err(Error::invalid("orthogonal pilots for every UE must fit in tau_c"));
        }
        if !(self.p_p > 0.0 && self.p_d > 0.0 && self.area_side > 0.0) {
            return Err(Error::invalid("powers and area must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pairing {
    Close,
    Far,
    Random,
}

impl Pairing {
    pub const ALL: [Pairing; 3] = [Pairing::Close, Pairing::Far, Pairing::Random];

    pub fn label(self) -> &'static str {
        match self {
            Pairing::Close => "NOMA-close",
            Pairing::Far => "NOMA-far",
            Pairing::Random => "NOMA-random",
        }
    }
}

/// Greedy sequential pairing: CLOSE repeatedly pairs the two nearest
/// unpaired UEs, FAR the two farthest, RANDOM shuffles and pairs neighbours.
pub fn pair_users(geo: &NetworkGeometry, scheme: Pairing, seed: Seed) -> Result<Vec<Vec<usize>>> {
    let k = geo.k();
    if k % 2 == 1 {
        return Err(Error::invalid(format!("pairing needs an even number of UEs, got {k}")));
    }
    if scheme == Pairing::Random {
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(&mut seed.rng());
        return Ok(order.chunks(2).map(|c| c.to_vec()).collect());
    }
    let mut pairs = Vec::new();
    let mut free = vec![true; k];
    for _ in 0..k / 2 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..k).filter(|&i| free[i]) {
            for j in (i + 1..k).filter(|&j| free[j]) {
                let d = geo.distance(geo.ue_positions[i], geo.ue_positions[j]);
                let better = match best {
                    None => true,
                    Some((.., b)) => (scheme == Pairing::Close && d < b) || (scheme == Pairing::Far && d > b),
                };
                if better {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, _) = best.expect("two free UEs remain");
        free[i] = false;
        free[j] = false;
        pairs.push(vec![i, j]);
    }
    Ok(pairs)
}

/// `(c, γ)` of the cluster-sum estimate from the summed LSF `Σ_k β_{mℓk}`.
pub fn noma_cluster_estimate(sum_beta: &DMatrix<f64>, tau_up: usize, rho_p: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let tr = tau_up as f64 * rho_p;
    let c = sum_beta.map(|s| tr.sqrt() * s / (tr * s + 1.0));
    let gamma = sum_beta.zip_map(&c, |s, c| tr.sqrt() * s * c);
    (c, gamma)
}

/// Clusters with their estimation statistics. Members are stored in
/// decoding order: strongest (largest `Σ_m β`) first.
#[derive(Clone, Debug)]
pub struct NomaNetwork {
    pub clusters: Vec<Vec<usize>>,
    /// M×K over UE indices.
    pub beta: DMatrix<f64>,
    /// M×L.
    pub sum_beta: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub n: usize,
    pub rho_d: f64,
    /// First slot of every cluster in the flattened `(ℓ, k)` layout.
    offsets: Vec<usize>,
}

impl NomaNetwork {
    /// One pilot per cluster, so `τ_up = L`.
    pub fn new(beta: DMatrix<f64>, mut clusters: Vec<Vec<usize>>, n: usize, rho_p: f64, rho_d: f64) -> Result<Self> {
        let (m, k) = beta.shape();
        let mut seen = vec![false; k];
        for u in clusters.iter().flatten() {
            if *u >= k || std::mem::replace(&mut seen[*u], true) {
                return Err(Error::invalid(format!("UE {u} is missing or listed twice")));
            }
        }
        if clusters.iter().any(Vec::is_empty) {
            return Err(Error::invalid("empty cluster"));
        }
        let strength = |u: usize| beta.column(u).sum();
        for cl in clusters.iter_mut() {
            cl.sort_by(|&a, &b| strength(b).total_cmp(&strength(a)).then(a.cmp(&b)));
        }
        let l = clusters.len();
        let sum_beta = DMatrix::from_fn(m, l, |mm, ll| clusters[ll].iter().map(|&u| beta[(mm, u)]).sum());
        let (c, gamma) = noma_cluster_estimate(&sum_beta, l, rho_p);
        let mut offsets = Vec::with_capacity(l);
        let mut acc = 0;
        for cl in &clusters {
            offsets.push(acc);
            acc += cl.len();
        }
        Ok(NomaNetwork { clusters, beta, sum_beta, c, gamma, n, rho_d, offsets })
    }

    pub fn m(&self) -> usize {
        self.beta.nrows()
    }

    /// Total number of `(ℓ, k)` slots.
    pub fn slots(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    pub fn slot(&self, l: usize, k: usize) -> usize {
        self.offsets[l] + k
    }

    /// UE index of every slot.
    pub fn slot_ue(&self) -> Vec<usize> {
        self.clusters.iter().flatten().cloned().collect()
    }

    /// `γ_{mℓ} β_{mℓj} / Σ_i β_{mℓi}`: the per-AP amplitude of cluster `ℓ`'s
    /// beam at member `j`.
    fn amp(&self, m: usize, l: usize, j: usize) -> f64 {
        let s = self.sum_beta[(m, l)];
        if s > 0.0 {
            self.gamma[(m, l)] * self.beta[(m, self.clusters[l][j])] / s
        } else {
            0.0
        }
    }

    /// `η_{mℓk} = 1 / (N Σ_ℓ K_ℓ γ_{mℓ})`: full power, equal shares.
    pub fn uniform_eta(&self) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_fn(m, self.slots(), |mm, _| {
            let s: f64 = self.clusters.iter().enumerate().map(|(l, cl)| cl.len() as f64 * self.gamma[(mm, l)]).sum();
            if s > 0.0 {
                1.0 / (self.n as f64 * s)
            } else {
                0.0
            }
        })
    }
}

/// SINR of message `k` of cluster `l` at member `j`, with messages `k' < k`
/// still present and every cluster's beam as interference.
pub fn noma_sinr(net: &NomaNetwork, eta: &DMatrix<f64>, l: usize, j: usize, k: usize) -> f64 {
    let m = net.m();
    let nf = net.n as f64;
    let coh = |kk: usize| -> f64 { (0..m).map(|mm| eta[(mm, net.slot(l, kk))].sqrt() * net.amp(mm, l, j)).sum() };
    let num = net.rho_d * nf * nf * coh(k).powi(2);
    let sic: f64 = (0..k).map(|kk| coh(kk).powi(2)).sum();
    let u = net.clusters[l][j];
    let mut spread = 0.0;
    for (lp, cl) in net.clusters.iter().enumerate() {
        for kp in 0..cl.len() {
            let s = net.slot(lp, kp);
            spread += (0..m).map(|mm| eta[(mm, s)] * net.beta[(mm, u)] * net.gamma[(mm, lp)]).sum::<f64>();
        }
    }
    num / (net.rho_d * nf * nf * sic + net.rho_d * nf * spread + 1.0)
}

/// Effective SINR per slot: message `k` must be decodable by every member
/// `j ≤ k` that removes it before reaching its own.
pub fn noma_effective_sinr(net: &NomaNetwork, eta: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; net.slots()];
    for (l, cl) in net.clusters.iter().enumerate() {
        for k in 0..cl.len() {
            out[net.slot(l, k)] = (0..=k).map(|j| noma_sinr(net, eta, l, j, k)).fold(f64::INFINITY, f64::min);
        }
    }
    out
}

/// Per-slot SE report.
pub fn noma_se(net: &NomaNetwork, eta: &DMatrix<f64>, prelog: f64) -> SeReport {
    let sinr = noma_effective_sinr(net, eta);
    let se = sinr.iter().map(|s| prelog * log2_1p(*s)).collect();
    SeReport::from_parts(sinr, se)
}

/// Max-min problem over `√η` (index `m · slots + slot`) with per-AP budget
/// `N Σ η γ ≤ 1`. Each slot is a user whose links are its decoders.
pub fn noma_power_problem(net: &NomaNetwork) -> Result<PowerProblem> {
    let (m, s) = (net.m(), net.slots());
    let nf = net.n as f64;
    let var = |mm: usize, slot: usize| mm * s + slot;
    let rd = net.rho_d.sqrt();
    let groups = (0..m)
        .map(|mm| {
            let members = net
                .clusters
                .iter()
                .enumerate()
                .flat_map(|(l, cl)| (0..cl.len()).map(move |k| (l, k)))
                .map(|(l, k)| (var(mm, net.slot(l, k)), nf * net.gamma[(mm, l)]))
                .collect();
            PowerGroup { members, budget: 1.0 }
        })
        .collect();
    let mut links = Vec::new();
    let mut users = vec![Vec::new(); s];
    for (l, cl) in net.clusters.iter().enumerate() {
        for k in 0..cl.len() {
            for j in 0..=k {
                let beam = |kk: usize| -> Vec<(usize, f64)> {
                    (0..m).map(|mm| (var(mm, net.slot(l, kk)), rd * nf * net.amp(mm, l, j))).collect()
                };
                let u = cl[j];
                users[net.slot(l, k)].push(links.len());
                links.push(SinrLink {
                    signal: beam(k),
                    coherent: (0..k).map(beam).collect(),
                    load_gain: (0..m).map(|mm| (mm, net.rho_d * net.beta[(mm, u)])).collect(),
                    noise: 1.0,
                });
            }
        }
    }
    let p = PowerProblem { n_vars: m * s, links, users, groups, floors: None };
    p.validate()?;
    Ok(p)
}

pub fn noma_maxmin(net: &NomaNetwork, opts: &MaxMinOptions) -> Result<DMatrix<f64>> {
    let p = noma_power_problem(net)?;
    let sol = solve_maxmin_bisection(&p, opts)?;
    let (m, s) = (net.m(), net.slots());
    Ok(DMatrix::from_fn(m, s, |mm, slot| sol.mu[mm * s + slot].powi(2)))
}

/// OMA reference: every UE has its own pilot (`τ_up = K`) and CB beam, with
/// max-min power control.
pub fn oma_maxmin(beta: &DMatrix<f64>, n: usize, rho_p: f64, rho_d: f64, opts: &MaxMinOptions) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = beta.ncols();
    let gamma = clean_gamma(beta, k as f64 * rho_p);
    let p = PowerProblem::cb_downlink(beta, &gamma, rho_d, n, None)?;
    let sol = solve_maxmin_bisection(&p, opts)?;
    Ok((PowerProblem::eta_matrix(&sol.mu, beta.nrows(), k), sol.user_sinr))
}

/// Per-UE SE of one drop for a pairing scheme (or OMA with `None`), indexed by UE.
pub fn noma_drop_se(setup: &NomaSetup, scheme: Option<Pairing>, seed: Seed, opts: &MaxMinOptions) -> Result<Vec<f64>> {
    setup.validate()?;
    let geo = drop_network(setup.m, setup.k(), setup.area_side, seed.named("geometry"))?;
    let beta = three_slope_beta(&geo, &setup.pathloss, seed.named("beta"))?;
    let rho_p = setup.radio.snr(setup.p_p);
    let rho_d = setup.radio.snr(setup.p_d);
    let k = setup.k();
    match scheme {
        None => {
            let (_, sinr) = oma_maxmin(&beta, setup.n, rho_p, rho_d, opts)?;
            let pre = (setup.tau_c - k) as f64 / setup.tau_c as f64;
            Ok(sinr.iter().map(|s| pre * log2_1p(*s)).collect())
        }
        Some(p) => {
            if setup.k_l != 2 {
                return Err(Error::invalid("pairing schemes build clusters of two"));
            }
            let clusters = pair_users(&geo, p, seed.named("pairing"))?;
            let net = NomaNetwork::new(beta, clusters, setup.n, rho_p, rho_d)?;
            let eta = noma_maxmin(&net, opts)?;
            let pre = (setup.tau_c - setup.l) as f64 / setup.tau_c as f64;
            let rep = noma_se(&net, &eta, pre);
            let mut out = vec![0.0; k];
            for (slot, u) in net.slot_ue().into_iter().enumerate() {
                out[u] = rep.per_ue_se[slot];
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlink::dl_sinr_closed_cb;

    fn line(xs: &[f64]) -> NetworkGeometry {
        NetworkGeometry {
            area_side: 100.0,
            ap_positions: vec![[0.0, 0.0]],
            ue_positions: xs.iter().map(|&x| [x, 0.0]).collect(),
            wrap_around: false,
        }
    }

    #[test]
    fn pairing_on_a_line() {
        let g = line(&[0.0, 1.0, 10.0, 11.0]);
        let close = pair_users(&g, Pairing::Close, Seed(1)).unwrap();
        assert_eq!(close, vec![vec![0, 1], vec![2, 3]]);
        let far = pair_users(&g, Pairing::Far, Seed(1)).unwrap();
        assert_eq!(far, vec![vec![0, 3], vec![1, 2]]);
        let two = line(&[0.0, 5.0]);
        for p in Pairing::ALL {
            assert_eq!(pair_users(&two, p, Seed(3)).unwrap(), vec![vec![0, 1]]);
        }
        assert!(pair_users(&line(&[0.0, 1.0, 2.0]), Pairing::Close, Seed(0)).is_err());
    }

    #[test]
    fn cluster_estimate_by_hand() {
        let s = DMatrix::from_element(1, 1, 3.0);
        let (c, g) = noma_cluster_estimate(&s, 10, 1.0);
        let want_c = 10f64.sqrt() * 3.0 / 31.0;
        assert!((c[(0, 0)] - want_c).abs() < 1e-12);
        assert!((g[(0, 0)] - 90.0 / 31.0).abs() < 1e-12);
        let (_, g0) = noma_cluster_estimate(&DMatrix::zeros(1, 1), 10, 1.0);
        assert_eq!(g0[(0, 0)], 0.0);
    }

    #[test]
    fn singleton_clusters_reduce_to_oma_cb() {
        let beta = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.05, 0.3, 0.9, 0.4, 0.1, 0.5, 1.3]);
        let net = NomaNetwork::new(beta.clone(), vec![vec![0], vec![1], vec![2]], 4, 2.0, 7.0).unwrap();
        let eta = net.uniform_eta();
        let gamma = clean_gamma(&beta, 3.0 * 2.0);
        let want = dl_sinr_closed_cb(&beta, &gamma, &eta, 7.0, 4);
        let got = noma_effective_sinr(&net, &eta);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * b, "{a} {b}");
        }
    }

    #[test]
    fn two_member_cluster_by_hand() {
        // One cluster, M = 2, UE 0 stronger than UE 1.
        let beta = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.5, 0.5]);
        let net = NomaNetwork::new(beta, vec![vec![1, 0]], 2, 1.0, 3.0).unwrap();
        assert_eq!(net.clusters[0], vec![0, 1]);
        let eta = DMatrix::from_row_slice(2, 2, &[0.05, 0.1, 0.08, 0.12]);
        let g = [1.25 * 1.25 / 2.25, 1.0 / 2.0];
        let s = [1.25, 1.0];
        let b = [[1.0, 0.25], [0.5, 0.5]];
        let amp = |m: usize, j: usize| g[m] * b[m][j] / s[m];
        let spread = |j: usize| (0..2).map(|m| (eta[(m, 0)] + eta[(m, 1)]) * b[m][j] * g[m]).sum::<f64>();
        let coh = |k: usize, j: usize| (0..2).map(|m| eta[(m, k)].sqrt() * amp(m, j)).sum::<f64>();
        let hand = |j: usize, k: usize| {
            let sic: f64 = (0..k).map(|kk| coh(kk, j).powi(2)).sum();
            3.0 * 4.0 * coh(k, j).powi(2) / (3.0 * 4.0 * sic + 3.0 * 2.0 * spread(j) + 1.0)
        };
        for (j, k) in [(0, 0), (0, 1), (1, 1)] {
            let v = noma_sinr(&net, &eta, 0, j, k);
            assert!((v - hand(j, k)).abs() <= 1e-12 * v);
        }
        let eff = noma_effective_sinr(&net, &eta);
        assert!((eff[1] - hand(0, 1).min(hand(1, 1))).abs() < 1e-12 * eff[1]);
        assert_eq!(noma_sinr(&net, &DMatrix::zeros(2, 2), 0, 0, 0), 0.0);
        let p = noma_power_problem(&net).unwrap();
        let mu: Vec<f64> = (0..2).flat_map(|m| (0..2).map(move |s| (m, s))).map(|(m, s)| eta[(m, s)].sqrt()).collect();
        for (a, b) in p.user_sinr(&mu).iter().zip(&eff) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn maxmin_equalises_symmetric_clusters() {
        let beta = DMatrix::from_row_slice(2, 4, &[1.0, 0.3, 0.3, 1.0, 0.3, 1.0, 1.0, 0.3]);
        let net = NomaNetwork::new(beta, vec![vec![0, 1], vec![2, 3]], 4, 5.0, 5.0).unwrap();
        let eta = noma_maxmin(&net, &MaxMinOptions::default()).unwrap();
        let s = noma_effective_sinr(&net, &eta);
        let (lo, hi) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi - lo <= 2e-3 * lo, "{s:?}");
        for m in 0..2 {
            let load: f64 = (0..4).map(|slot| eta[(m, slot)] * 4.0 * net.gamma[(m, slot / 2)]).sum();
            assert!(load <= 1.0 + 1e-9);
        }
    }
}
