//! One recorded input/output pair at a fixed device setting.

use crate::blocks::ControlParams;
use crate::data::{normalize_controls, RawControls, SAMPLE_RATE};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Recording {
    pub name: String,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    pub sample_rate: u32,
    pub raw_controls: RawControls,
    pub controls: ControlParams,
}

impl Recording {
    pub fn new(
        name: impl Into<String>,
        input: Vec<f64>,
        output: Vec<f64>,
        sample_rate: u32,
        raw_controls: RawControls,
    ) -> Result<Self> {
        if input.len() != output.len() {
            return Err(Error::Data(format!(
                "input and output lengths differ: {} vs {}",
                input.len(),
                output.len()
            )));
        }
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Data(format!(
                "recordings must be {SAMPLE_RATE} Hz, got {sample_rate}"
            )));
        }
        let controls = normalize_controls(&raw_controls)?;
        Ok(Recording {
            name: name.into(),
            input,
            output,
            sample_rate,
            raw_controls,
            controls,
        })
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    /// Time-slice copy keeping the same controls.
    pub fn slice(&self, range: std::ops::Range<usize>, suffix: &str) -> Recording {
        Recording {
            name: format!("{}{suffix}", self.name),
            input: self.input[range.clone()].to_vec(),
            output: self.output[range].to_vec(),
            sample_rate: self.sample_rate,
            raw_controls: self.raw_controls,
            controls: self.controls.clone(),
        }
    }
}
