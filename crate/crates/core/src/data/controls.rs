//! Raw device control values and their linear mapping to [0, 1].
//!
//! Ranges: LA-2A peak reduction [0, 100], mode switch {0, 1}; CL 1B
//! threshold [0, -40] dBu, ratio [2:1, 10:1], attack [0.5, 500] ms, release
//! [0.005, 10] s. The knobs' true scales are unmarked on the hardware, so
//! the mapping is linear between the printed extremes.

use crate::blocks::ControlParams;
use crate::error::{Error, Result};
use crate::model::Device;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawControls {
    La2a {
        peak_reduction: f64,
        /// 0 = compress, 1 = limit.
        limit_switch: f64,
    },
    Cl1b {
        threshold_dbu: f64,
        ratio: f64,
        attack_ms: f64,
        release_s: f64,
    },
}

impl RawControls {
    pub fn device(&self) -> Device {
        match self {
            RawControls::La2a { .. } => Device::La2a,
            RawControls::Cl1b { .. } => Device::Cl1b,
        }
    }
}

fn lin(name: &str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    let t = (value - lo) / (hi - lo);
    if !(0.0..=1.0).contains(&t) || !t.is_finite() {
        return Err(Error::Config(format!(
            "{name} = {value} outside device range [{lo}, {hi}]"
        )));
    }
    Ok(t)
}

pub fn normalize_controls(raw: &RawControls) -> Result<ControlParams> {
    match *raw {
        RawControls::La2a {
            peak_reduction,
            limit_switch,
        } => {
            let pr = lin("peak_reduction", peak_reduction, 0.0, 100.0)?;
            if limit_switch != 0.0 && limit_switch != 1.0 {
                return Err(Error::Config(format!(
                    "limit_switch must be 0 or 1, got {limit_switch}"
                )));
            }
            ControlParams::new(Device::La2a, vec![pr, limit_switch], vec![])
        }
        RawControls::Cl1b {
            threshold_dbu,
            ratio,
            attack_ms,
            release_s,
        } => {
            let thr = lin("threshold", threshold_dbu, 0.0, -40.0)?;
            let rat = lin("ratio", ratio, 2.0, 10.0)?;
            let atk = lin("attack", attack_ms, 0.5, 500.0)?;
            let rel = lin("release", release_s, 0.005, 10.0)?;
            ControlParams::new(Device::Cl1b, vec![thr, rat], vec![atk, rel])
        }
    }
}

pub fn denormalize_controls(ctrl: &ControlParams) -> RawControls {
    match ctrl.device() {
        Device::La2a => RawControls::La2a {
            peak_reduction: ctrl.co()[0] * 100.0,
            limit_switch: ctrl.co()[1],
        },
        Device::Cl1b => RawControls::Cl1b {
            threshold_dbu: ctrl.co()[0] * -40.0,
            ratio: 2.0 + ctrl.co()[1] * 8.0,
            attack_ms: 0.5 + ctrl.ti()[0] * 499.5,
            release_s: 0.005 + ctrl.ti()[1] * 9.995,
        },
    }
}
