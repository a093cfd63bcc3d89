//! Case-study engines built on the core model: network-assisted full duplex,
//! NOMA clusters, pilot spoofing, wireless power transfer and RIS.

pub mod eh;
pub mod nafd;
pub mod noma;
pub mod pls;
pub mod ris;

use nalgebra::DMatrix;

use crate::netmodel::noise_power_w;

/// Radio constants shared by every case study.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Radio {
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for Radio {
    fn default() -> Self {
        Radio { bandwidth_hz: 20e6, noise_figure_db: 9.0 }
    }
}

impl Radio {
    pub fn noise_w(&self) -> f64 {
        noise_power_w(self.bandwidth_hz, self.noise_figure_db)
    }

    /// Transmit power in watts to a noise-normalised SNR.
    pub fn snr(&self, p_w: f64) -> f64 {
        p_w / self.noise_w()
    }
}

/// `τρβ² / (τρβ + 1)` elementwise: the MMSE estimate variance with a
/// dedicated pilot.
pub fn clean_gamma(beta: &DMatrix<f64>, tau_rho: f64) -> DMatrix<f64> {
    beta.map(|b| tau_rho * b * b / (tau_rho * b + 1.0))
}

pub(crate) fn log2_1p(x: f64) -> f64 {
    x.max(0.0).ln_1p() / std::f64::consts::LN_2
}

pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().cloned().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
