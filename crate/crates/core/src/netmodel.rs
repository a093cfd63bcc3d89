//! Network drops, large-scale fading and small-scale fading.

use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::{c, herm_sqrt, CMat, CVec, C64};
use crate::rng::{cn01, normal, Seed, SimRng};
use crate::{Error, Result};

/// Sample budget of one TDD coherence block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoherenceBlock {
    pub tau_c: usize,
    pub tau_up: usize,
    pub tau_d: usize,
    pub tau_u: usize,
}

impl CoherenceBlock {
    pub fn new(tau_c: usize, tau_up: usize, tau_d: usize, tau_u: usize) -> Result<Self> {
        if tau_up == 0 {
            return Err(Error::invalid("tau_up must be at least 1"));
        }
        if tau_up + tau_d + tau_u > tau_c {
            return Err(Error::invalid(format!(
                "tau_up + tau_d + tau_u = {} exceeds tau_c = {tau_c}",
                tau_up + tau_d + tau_u
            )));
        }
        Ok(CoherenceBlock { tau_c, tau_up, tau_d, tau_u })
    }

    /// Whole data phase used for downlink.
    pub fn downlink_only(tau_c: usize, tau_up: usize) -> Result<Self> {
        Self::new(tau_c, tau_up, tau_c.saturating_sub(tau_up), 0)
    }

    /// Whole data phase used for uplink.
    pub fn uplink_only(tau_c: usize, tau_up: usize) -> Result<Self> {
        Self::new(tau_c, tau_up, 0, tau_c.saturating_sub(tau_up))
    }

    pub fn prelog_dl(&self) -> f64 {
        self.tau_d as f64 / self.tau_c as f64
    }

    pub fn prelog_ul(&self) -> f64 {
        self.tau_u as f64 / self.tau_c as f64
    }

    /// Fraction of the block left after training.
    pub fn prelog_data(&self) -> f64 {
        (self.tau_c - self.tau_up) as f64 / self.tau_c as f64
    }
}

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkGeometry {
    pub area_side: f64,
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub wrap_around: bool,
}

impl NetworkGeometry {
    pub fn m(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn k(&self) -> usize {
        self.ue_positions.len()
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let mut dx = (a[0] - b[0]).abs();
        let mut dy = (a[1] - b[1]).abs();
        if self.wrap_around {
            dx = dx.min(self.area_side - dx);
            dy = dy.min(self.area_side - dy);
        }
        dx.hypot(dy)
    }

    pub fn ap_ue_distance(&self, m: usize, k: usize) -> f64 {
        self.distance(self.ap_positions[m], self.ue_positions[k])
    }

    /// Angle of arrival of UE `k` as seen from AP `m`.
    pub fn ap_ue_angle(&self, m: usize, k: usize) -> f64 {
        let a = self.ap_positions[m];
        let b = self.ue_positions[k];
        (b[1] - a[1]).atan2(b[0] - a[0])
    }
}

fn uniform_points(rng: &mut SimRng, n: usize, side: f64) -> Vec<Point> {
    (0..n).map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side]).collect()
}

/// Uniform i.i.d. placement of `m` APs and `k` UEs in a square.
pub fn drop_network(m: usize, k: usize, area_side: f64, seed: Seed) -> Result<NetworkGeometry> {
    if m == 0 || k == 0 {
        return Err(Error::invalid("drop_network needs at least one AP and one UE"));
    }
    if !(area_side > 0.0) || !area_side.is_finite() {
        return Err(Error::invalid("area side must be positive"));
    }
    let mut rng = seed.rng();
    let ap_positions = uniform_points(&mut rng, m, area_side);
    let ue_positions = uniform_points(&mut rng, k, area_side);
    Ok(NetworkGeometry { area_side, ap_positions, ue_positions, wrap_around: false })
}

/// Constants of the three-slope path-loss model.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossParams {
    pub carrier_mhz: f64,
    pub h_ap: f64,
    pub h_ue: f64,
    /// Breakpoints in meters.
    pub d0: f64,
    pub d1: f64,
    pub min_distance: f64,
    pub shadow_std_db: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams {
            carrier_mhz: 1900.0,
            h_ap: 15.0,
            h_ue: 1.65,
            d0: 10.0,
            d1: 50.0,
            min_distance: 1.0,
            shadow_std_db: 8.0,
        }
    }
}

impl PathLossParams {
    fn l_db(&self) -> f64 {
        let lf = self.carrier_mhz.log10();
        46.3 + 33.9 * lf - 13.82 * self.h_ap.log10() - (1.1 * lf - 0.7) * self.h_ue
            + (1.56 * lf - 0.8)
    }

    /// Deterministic gain in dB (negative) at distance `d` meters.
    pub fn gain_db(&self, d: f64) -> f64 {
        let d = d.max(self.min_distance);
        let l = self.l_db();
        let km = |x: f64| (x / 1000.0).log10();
        if d > self.d1 {
            -l - 35.0 * km(d)
        } else if d > self.d0 {
            -l - 15.0 * km(self.d1) - 20.0 * km(d)
        } else {
            -l - 15.0 * km(self.d1) - 20.0 * km(self.d0)
        }
    }

    /// Linear gain with log-normal shadowing in the far slope.
    pub fn sample_gain(&self, d: f64, rng: &mut SimRng) -> f64 {
        let mut g = self.gain_db(d);
        if d.max(self.min_distance) > self.d1 && self.shadow_std_db > 0.0 {
            g += self.shadow_std_db * normal(rng);
        }
        10f64.powf(g / 10.0)
    }
}

/// Thermal noise power in watts.
pub fn noise_power_w(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    10f64.powf((-174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db - 30.0) / 10.0)
}

/// Large-scale fading between two point sets.
pub fn three_slope_between(
    from: &[Point],
    to: &[Point],
    geometry: &NetworkGeometry,
    params: &PathLossParams,
    seed: Seed,
) -> Result<DMatrix<f64>> {
    if params.shadow_std_db < 0.0 {
        return Err(Error::invalid("shadowing std must be nonnegative"));
    }
    let mut rng = seed.rng();
    Ok(DMatrix::from_fn(from.len(), to.len(), |i, j| {
        params.sample_gain(geometry.distance(from[i], to[j]), &mut rng)
    }))
}

/// AP-to-UE large-scale fading matrix (M×K).
pub fn three_slope_beta(
    geometry: &NetworkGeometry,
    params: &PathLossParams,
    seed: Seed,
) -> Result<DMatrix<f64>> {
    three_slope_between(&geometry.ap_positions, &geometry.ue_positions, geometry, params, seed)
}

/// Gaussian local-scattering correlation for a uniform linear array.
pub fn local_scattering_correlation(
    beta: f64,
    angle: f64,
    angular_std: f64,
    n: usize,
    antenna_spacing: f64,
) -> Result<CMat> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(Error::invalid("beta must be nonnegative"));
    }
    if n == 0 {
        return Err(Error::invalid("antenna count must be positive"));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(CMat::from_fn(n, n, |l, m| {
        let dist = antenna_spacing * (l as f64 - m as f64);
        let phase = two_pi * dist * angle.sin();
        let spread = two_pi * dist * angle.cos() * angular_std;
        C64::from_polar(beta * (-0.5 * spread * spread).exp(), phase)
    }))
}

/// Large-scale statistics of one drop: β, spatial correlation and noise.
#[derive(Clone, Debug)]
pub struct LargeScaleModel {
    pub n_antennas: usize,
    pub beta: DMatrix<f64>,
    pub noise_power: f64,
    pub correlated: bool,
    r: Vec<CMat>,
    r_sqrt: Vec<CMat>,
}

impl LargeScaleModel {
    /// `R = β I` for every pair.
    pub fn uncorrelated(beta: DMatrix<f64>, n: usize, noise_power: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("antenna count must be positive"));
        }
        if beta.iter().any(|b| *b < 0.0 || !b.is_finite()) {
            return Err(Error::invalid("beta must be finite and nonnegative"));
        }
        let mut r = Vec::with_capacity(beta.len());
        let mut r_sqrt = Vec::with_capacity(beta.len());
        for m in 0..beta.nrows() {
            for k in 0..beta.ncols() {
                let b = beta[(m, k)];
                r.push(CMat::identity(n, n) * c(b));
                r_sqrt.push(CMat::identity(n, n) * c(b.sqrt()));
            }
        }
        Ok(LargeScaleModel { n_antennas: n, beta, noise_power, correlated: false, r, r_sqrt })
    }

    /// Builds the model from explicit correlation matrices indexed `m*K + k`.
    /// β is recovered from the traces.
    pub fn from_correlations(m: usize, k: usize, r: Vec<CMat>, noise_power: f64) -> Result<Self> {
        if r.len() != m * k || r.is_empty() {
            return Err(Error::invalid("need one correlation matrix per AP-UE pair"));
        }
        let n = r[0].nrows();
        let mut beta = DMatrix::zeros(m, k);
        let mut r_sqrt = Vec::with_capacity(r.len());
        for mm in 0..m {
            for kk in 0..k {
                let rr = &r[mm * k + kk];
                if rr.nrows() != n || rr.ncols() != n {
                    return Err(Error::invalid("correlation matrices must all be N×N"));
                }
                beta[(mm, kk)] = crate::linalg::trace(rr).re / n as f64;
                r_sqrt.push(herm_sqrt(rr)?);
            }
        }
        Ok(LargeScaleModel { n_antennas: n, beta, noise_power, correlated: true, r, r_sqrt })
    }

    /// Local-scattering correlation with angles taken from the geometry.
    pub fn correlated(
        geometry: &NetworkGeometry,
        beta: DMatrix<f64>,
        n: usize,
        angular_std: f64,
        antenna_spacing: f64,
        noise_power: f64,
    ) -> Result<Self> {
        let (m, k) = beta.shape();
        let mut r = Vec::with_capacity(m * k);
        for mm in 0..m {
            for kk in 0..k {
                let angle = geometry.ap_ue_angle(mm, kk);
                r.push(local_scattering_correlation(beta[(mm, kk)], angle, angular_std, n, antenna_spacing)?);
            }
        }
        let mut lsm = Self::from_correlations(m, k, r, noise_power)?;
        lsm.beta = beta;
        Ok(lsm)
    }

    pub fn m(&self) -> usize {
        self.beta.nrows()
    }

    pub fn k(&self) -> usize {
        self.beta.ncols()
    }

    pub fn n(&self) -> usize {
        self.n_antennas
    }

    pub fn r(&self, m: usize, k: usize) -> &CMat {
        &self.r[m * self.k() + k]
    }

    pub fn r_sqrt(&self, m: usize, k: usize) -> &CMat {
        &self.r_sqrt[m * self.k() + k]
    }

    /// Largest relative violation of `tr(R)/N = β`.
    pub fn trace_identity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.m() {
            for k in 0..self.k() {
                let b = self.beta[(m, k)];
                let t = crate::linalg::trace(self.r(m, k)).re / self.n() as f64;
                let err = if b == 0.0 { t.abs() } else { (t - b).abs() / b };
                worst = worst.max(err);
            }
        }
        worst
    }
}

/// One small-scale fading draw, indexed `m*K + k`.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub k: usize,
    pub h: Vec<CVec>,
}

impl ChannelRealization {
    pub fn get(&self, m: usize, k: usize) -> &CVec {
        &self.h[m * self.k + k]
    }
}

pub fn draw_channels_with(lsm: &LargeScaleModel, rng: &mut SimRng) -> ChannelRealization {
    let n = lsm.n();
    let mut h = Vec::with_capacity(lsm.m() * lsm.k());
    for m in 0..lsm.m() {
        for k in 0..lsm.k() {
            let z = CVec::from_fn(n, |_, _| cn01(rng));
            if lsm.correlated {
                h.push(lsm.r_sqrt(m, k) * z);
            } else {
                h.push(z * c(lsm.beta[(m, k)].sqrt()));
            }
        }
    }
    ChannelRealization { k: lsm.k(), h }
}

pub fn draw_channels(lsm: &LargeScaleModel, seed: Seed) -> ChannelRealization {
    draw_channels_with(lsm, &mut seed.rng())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_validation() {
        assert!(CoherenceBlock::new(200, 0, 100, 100).is_err());
        assert!(CoherenceBlock::new(200, 10, 100, 100).is_err());
        let b = CoherenceBlock::new(200, 10, 95, 95).unwrap();
        assert!((b.prelog_dl() - 0.475).abs() < 1e-15);
    }

    #[test]
    fn slopes_are_continuous() {
        let p = PathLossParams::default();
        for d in [p.d0, p.d1] {
            let lo = p.gain_db(d * (1.0 - 1e-12));
            let hi = p.gain_db(d * (1.0 + 1e-12));
            assert!((lo - hi).abs() <= 1e-9 * lo.abs());
        }
    }

    #[test]
    fn gain_decreases_with_distance() {
        let p = PathLossParams::default();
        assert!(p.gain_db(100.0) > p.gain_db(200.0));
        assert_eq!(p.gain_db(0.0), p.gain_db(1.0));
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(drop_network(0, 1, 10.0, Seed(0)).is_err());
        assert!(drop_network(1, 1, 0.0, Seed(0)).is_err());
    }

    #[test]
    fn noise_default() {
        let n = noise_power_w(20e6, 9.0);
        let dbm = 10.0 * (n * 1e3).log10();
        assert!((dbm - (-174.0 + 73.0103 + 9.0)).abs() < 1e-3);
    }
}
