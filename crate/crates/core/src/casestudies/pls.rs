//! Secrecy under a pilot-spoofing eavesdropper. Eve replays the pilot of
//! UE 0, contaminating its estimate and steering part of its beam to Eve.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{clean_gamma, log2_1p, Radio};
use crate::dlink::{lsf_groups, UserGroups};
use crate::netmodel::{drop_network, three_slope_between, PathLossParams};
use crate::{Error, Result, Seed};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlsSetup {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub area_side: f64,
    pub p_p: f64,
    /// Eve's pilot power.
    pub p_e: f64,
    pub p_d: f64,
    /// Eve lies uniformly in a disc of this radius around UE 0.
    pub radius: f64,
    /// Share of each AP's total LSF captured by its strong set.
    pub strong_fraction: f64,
    pub radio: Radio,
    pub pathloss: PathLossParams,
}

impl Default for PlsSetup {
    fn default() -> Self {
        PlsSetup {
            m: 24,
            n: 10,
            k: 10,
            area_side: 1000.0,
            p_p: 0.1,
            p_e: 0.05,
            p_d: 1.0,
            radius: 20.0,
            strong_fraction: 0.95,
            radio: Radio::default(),
            pathloss: PathLossParams::default(),
        }
    }
}

impl PlsSetup {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n < 2 || self.k == 0 {
            return Err(Error::invalid("PLS needs APs with at least two antennas and one UE"));
        }
        if !(self.p_p > 0.0 && self.p_e >= 0.0 && self.p_d > 0.0 && self.radius >= 0.0 && self.area_side > 0.0) {
            return Err(Error::invalid("powers, radius and area must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.strong_fraction) {
            return Err(Error::invalid("strong_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// `(γ_{ℓk}, γ_{ℓE})` with orthogonal pilots for legitimate UEs and Eve on
/// the pilot of UE 0. `rho_u` is the UE pilot SNR, `rho_e` Eve's.
pub fn pls_gamma(
    beta: &DMatrix<f64>,
    beta_e: &DVector<f64>,
    rho_u: f64,
    rho_e: f64,
    tau_up: usize,
) -> (DMatrix<f64>, DVector<f64>) {
    let tau = tau_up as f64;
    let mut gamma = clean_gamma(beta, tau * rho_u);
    let mut gamma_e = DVector::zeros(beta.nrows());
    for l in 0..beta.nrows() {
        let b1 = beta[(l, 0)];
        let g1 = tau * rho_u * b1 * b1 / (tau * rho_u * b1 + tau * rho_e * beta_e[l] + 1.0);
        gamma[(l, 0)] = g1;
        let alpha = if b1 > 0.0 { rho_e * beta_e[l].powi(2) / (rho_u * b1 * b1) } else { 0.0 };
        gamma_e[l] = alpha * g1;
    }
    (gamma, gamma_e)
}

#[derive(Clone, Debug)]
pub struct PlsScalars {
    pub beta: DMatrix<f64>,
    pub beta_e: DVector<f64>,
    pub gamma: DMatrix<f64>,
    pub gamma_e: DVector<f64>,
    pub n: usize,
    pub rho_d: f64,
}

impl PlsScalars {
    pub fn draw(setup: &PlsSetup, seed: Seed) -> Result<Self> {
        setup.validate()?;
        let geo = drop_network(setup.m, setup.k, setup.area_side, seed.named("geometry"))?;
        let beta = three_slope_between(&geo.ap_positions, &geo.ue_positions, &geo, &setup.pathloss, seed.named("beta"))?;
        let mut rng = seed.named("eve").rng();
        let r = setup.radius * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let u0 = geo.ue_positions[0];
        let eve = [u0[0] + r * phi.cos(), u0[1] + r * phi.sin()];
        let be = three_slope_between(&geo.ap_positions, &[eve], &geo, &setup.pathloss, seed.named("beta-eve"))?;
        let beta_e = DVector::from_column_slice(be.as_slice());
        let (gamma, gamma_e) = pls_gamma(&beta, &beta_e, setup.radio.snr(setup.p_p), setup.radio.snr(setup.p_e), setup.k);
        Ok(PlsScalars { beta, beta_e, gamma, gamma_e, n: setup.n, rho_d: setup.radio.snr(setup.p_d) })
    }

    pub fn m(&self) -> usize {
        self.beta.nrows()
    }

    pub fn k(&self) -> usize {
        self.beta.ncols()
    }

    /// Strong sets capped at `N − 1` members so the PZF part keeps a
    /// degree of freedom.
    pub fn ppzf_groups(&self, fraction: f64) -> UserGroups {
        lsf_groups(&self.beta, fraction, Some(self.n - 1))
    }

    /// Equal share of unit-norm precoders: `η_{ℓt} = 1/K`.
    pub fn uniform_eta(&self) -> DMatrix<f64> {
        DMatrix::from_element(self.m(), self.k(), 1.0 / self.k() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlsResult {
    pub sinr: Vec<f64>,
    pub sinr_eve: f64,
    pub secrecy_se: f64,
}

/// Legitimate SINRs, Eve's SINR on UE 0's message and the clamped secrecy
/// SE. MRT is the all-weak grouping.
pub fn pls_secrecy(sc: &PlsScalars, groups: &UserGroups, eta: &DMatrix<f64>) -> Result<PlsResult> {
    let (m, k) = (sc.m(), sc.k());
    let nf = sc.n as f64;
    let mut dof = vec![0.0; m];
    for l in 0..m {
        let s = groups.strong[l].len();
        if s >= sc.n {
            return Err(Error::InvalidConfiguration { ap: l, reason: format!("{s} strong UEs need more than {} antennas", sc.n) });
        }
        dof[l] = nf - s as f64;
    }
    let delta = |l: usize, u: usize| if groups.is_strong(l, u) { 1.0 } else { 0.0 };
    let noise = 1.0 / sc.rho_d;
    let sinr: Vec<f64> = (0..k)
        .map(|u| {
            let sig: f64 = (0..m).map(|l| (dof[l] * eta[(l, u)] * sc.gamma[(l, u)]).sqrt()).sum();
            let den: f64 = (0..m)
                .map(|l| {
                    let tot: f64 = eta.row(l).sum();
                    tot * (sc.beta[(l, u)] - delta(l, u) * sc.gamma[(l, u)])
                })
                .sum::<f64>()
                + noise;
            sig * sig / den
        })
        .collect();
    let coh: f64 = (0..m).map(|l| (eta[(l, 0)] * dof[l] * sc.gamma_e[l]).sqrt()).sum();
    let leak: f64 = (0..m).map(|l| eta[(l, 0)] * (sc.beta_e[l] - delta(l, 0) * sc.gamma_e[l])).sum();
    let den: f64 = (0..m)
        .map(|l| {
            let others: f64 = (1..k).map(|t| eta[(l, t)]).sum();
            others * (sc.beta_e[l] - delta(l, 0) * sc.gamma_e[l])
        })
        .sum::<f64>()
        + noise;
    let sinr_eve = (coh * coh + leak) / den;
    let secrecy_se = secrecy_rate(sinr[0], sinr_eve);
    Ok(PlsResult { sinr, sinr_eve, secrecy_se })
}

/// `[log2((1 + SINR_1)/(1 + SINR_E))]⁺`.
pub fn secrecy_rate(sinr_1: f64, sinr_e: f64) -> f64 {
    (log2_1p(sinr_1) - log2_1p(sinr_e)).max(0.0)
}
