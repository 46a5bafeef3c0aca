//! Recording-level train/test split: the initial fraction of each recording
//! trains, the rest tests, with the cut moved to the nearest brief silence
//! so no sound event straddles the boundary.

use crate::data::Recording;
use crate::error::{Error, Result};

/// Silence window: 10 ms.
const SILENCE_WIN_S: f64 = 0.010;
/// Silence threshold: -60 dBFS RMS.
const SILENCE_RMS: f64 = 1e-3;
/// Search radius around the nominal split point: 2 s.
const SEARCH_RADIUS_S: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub name: String,
    pub split_index: usize,
    /// True when no silence was found in the search radius and the exact
    /// fractional point was used instead.
    pub fell_back: bool,
}

/// Splits every recording at (approximately) `fraction` of its length.
/// Every control combination therefore appears in both sets.
pub fn split_train_test(
    recordings: &[Recording],
    fraction: f64,
) -> Result<(Vec<Recording>, Vec<Recording>, Vec<SplitOutcome>)> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut outcomes = Vec::new();
    for rec in recordings {
        let n = rec.len();
        let win = (SILENCE_WIN_S * rec.sample_rate as f64) as usize;
        if n < 2 * win + 2 {
            return Err(Error::Data(format!(
                "recording `{}` too short to split ({n} samples)",
                rec.name
            )));
        }
        let target = (fraction * n as f64).round() as usize;
        let radius = (SEARCH_RADIUS_S * rec.sample_rate as f64) as usize;
        let lo = target.saturating_sub(radius).max(win);
        let hi = (target + radius).min(n - win - 1);

        // prefix energies make each 10 ms RMS an O(1) lookup
        let mut prefix = vec![0.0f64; n + 1];
        for (i, &x) in rec.input.iter().enumerate() {
            prefix[i + 1] = prefix[i] + x * x;
        }
        let rms_at = |p: usize| ((prefix[p + win] - prefix[p]) / win as f64).sqrt();

        let mut best: Option<usize> = None;
        for p in lo..=hi {
            if rms_at(p) < SILENCE_RMS {
                let better = match best {
                    None => true,
                    Some(b) => {
                        (p as i64 - target as i64).abs() < (b as i64 - target as i64).abs()
                    }
                };
                if better {
                    best = Some(p);
                }
            }
        }
        let (split, fell_back) = match best {
            Some(p) => (p, false),
            None => (target.min(n - 1).max(1), true),
        };
        train.push(rec.slice(0..split, ".train"));
        test.push(rec.slice(split..n, ".test"));
        outcomes.push(SplitOutcome {
            name: rec.name.clone(),
            split_index: split,
            fell_back,
        });
    }
    Ok((train, test, outcomes))
}
