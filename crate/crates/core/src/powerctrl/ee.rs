use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Network power consumption model with load-dependent fronthaul.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    /// Maximum radiated power per AP (W).
    pub p_max: f64,
    /// Power amplifier efficiency in (0, 1].
    pub amp_efficiency: f64,
    /// Circuit power per AP antenna (W).
    pub p_antenna: f64,
    pub n_antennas: usize,
    /// Fixed fronthaul power per active AP (W).
    pub p0: f64,
    /// Traffic-dependent fronthaul power (W per bit/s).
    pub pbt: f64,
    pub bandwidth: f64,
    /// Total UE circuit power (W).
    pub p_ue: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            p_max: 0.2,
            amp_efficiency: 0.4,
            p_antenna: 0.2,
            n_antennas: 1,
            p0: 0.825,
            pbt: 0.25e-9,
            bandwidth: 20e6,
            p_ue: 0.0,
        }
    }
}

/// Bits per Joule. `loads` are per-AP transmit loads in `[0, 1]` relative to
/// `p_max`; inactive APs draw nothing.
pub fn total_ee(se_sum: f64, model: &PowerModel, loads: &[f64], active: &[bool]) -> Result<f64> {
    if loads.len() != active.len() {
        return Err(Error::invalid("one load per AP"));
    }
    let nonneg = [model.p_max, model.p_antenna, model.p0, model.pbt, model.bandwidth, model.p_ue];
    if nonneg.iter().any(|x| *x < 0.0 || !x.is_finite()) || !(model.amp_efficiency > 0.0) || se_sum < 0.0 {
        return Err(Error::invalid("power model entries must be nonnegative"));
    }
    let rate = model.bandwidth * se_sum;
    let mut total = model.p_ue;
    for (load, on) in loads.iter().zip(active) {
        if *on {
            total += load.max(0.0) * model.p_max / model.amp_efficiency
                + model.n_antennas as f64 * model.p_antenna
                + model.p0
                + rate * model.pbt;
        }
    }
    if !(total > 0.0) {
        return Err(Error::invalid("total power is zero"));
    }
    Ok(rate / total)
}
