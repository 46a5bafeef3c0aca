//! Normalized control-parameter vectors for the two devices.

use crate::error::{Error, Result};
use crate::model::Device;

/// Control values already scaled into [0, 1], split into the
/// compression-amount group p_co and the timing group p_ti.
///
/// - la2a: p_co = [peak_reduction, switch], p_ti = []
/// - cl1b: p_co = [threshold, ratio],      p_ti = [attack, release]
#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    device: Device,
    co: Vec<f64>,
    ti: Vec<f64>,
}

impl ControlParams {
    pub fn new(device: Device, co: Vec<f64>, ti: Vec<f64>) -> Result<Self> {
        if co.len() != device.co_dim() || ti.len() != device.ti_dim() {
            return Err(Error::Config(format!(
                "{device} control vectors must have widths ({}, {}), got ({}, {})",
                device.co_dim(),
                device.ti_dim(),
                co.len(),
                ti.len()
            )));
        }
        for &v in co.iter().chain(ti.iter()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "normalized control value {v} outside [0, 1]"
                )));
            }
        }
        Ok(ControlParams { device, co, ti })
    }

    pub fn device(&self) -> Device {
        self.device
    }

    pub fn co(&self) -> &[f64] {
        &self.co
    }

    pub fn ti(&self) -> &[f64] {
        &self.ti
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_are_enforced_per_device() {
        assert!(ControlParams::new(Device::Cl1b, vec![0.5, 0.5], vec![0.0, 1.0]).is_ok());
        assert!(ControlParams::new(Device::Cl1b, vec![0.5, 0.5], vec![]).is_err());
        assert!(ControlParams::new(Device::La2a, vec![0.4, 1.0], vec![]).is_ok());
        assert!(ControlParams::new(Device::La2a, vec![0.4], vec![]).is_err());
    }

    #[test]
    fn out_of_range_values_rejected() {
        assert!(ControlParams::new(Device::La2a, vec![1.2, 0.0], vec![]).is_err());
        assert!(ControlParams::new(Device::Cl1b, vec![0.5, -0.1], vec![0.0, 0.0]).is_err());
    }
}
