//! Stateful batch assembly. The train region is partitioned into B
//! contiguous strips; batch t stacks, for every live strip, the example at
//! strip offset t (a 64-sample window, the controls, one target sample).
//! Consecutive batches advance every strip by one sample, so recurrent
//! states carried per strip stay valid; every target sample appears in
//! exactly one row per epoch.

use crate::data::Recording;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Strip {
    pub recording: usize,
    pub start: usize,
    pub len: usize,
}

/// One training example: a window ending at the target sample.
#[derive(Debug, Clone)]
pub struct BatchRow {
    pub strip: usize,
    pub recording: usize,
    /// Absolute index of the target sample in the recording.
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct BatchPlan {
    strips: Vec<Strip>,
    batch_size: usize,
    max_len: usize,
    window: usize,
}

impl BatchPlan {
    /// Partitions the usable region [0, usable_len) of each recording into
    /// strips. The `seed` is accepted for interface stability; assembly is
    /// fully deterministic.
    pub fn build(
        region_lens: &[usize],
        batch_size: usize,
        window: usize,
        _seed: u64,
    ) -> Result<BatchPlan> {
        let total: usize = region_lens.iter().sum();
        if total < batch_size {
            return Err(Error::Data(format!(
                "need at least {batch_size} samples to form one batch, have {total}"
            )));
        }
        // strips per recording by largest remainder, at least one per
        // non-empty region
        let mut counts = vec![0usize; region_lens.len()];
        let mut remainders: Vec<(f64, usize)> = Vec::new();
        let mut assigned = 0usize;
        for (i, &len) in region_lens.iter().enumerate() {
            if len == 0 {
                continue;
            }
            let exact = batch_size as f64 * len as f64 / total as f64;
            let base = (exact.floor() as usize).min(len).max(1);
            counts[i] = base;
            assigned += base;
            remainders.push((exact - base as f64, i));
        }
        remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut k = 0;
        while assigned < batch_size && !remainders.is_empty() {
            let i = remainders[k % remainders.len()].1;
            if counts[i] < region_lens[i] {
                counts[i] += 1;
                assigned += 1;
            }
            k += 1;
            if k > 4 * batch_size {
                break;
            }
        }
        while assigned > batch_size {
            // over-assignment can only come from the at-least-1 rule
            let i = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 1)
                .max_by_key(|(_, &c)| c)
                .map(|(i, _)| i)
                .ok_or_else(|| Error::Data("cannot balance strips across recordings".into()))?;
            counts[i] -= 1;
            assigned -= 1;
        }

        let mut strips = Vec::with_capacity(batch_size);
        for (rec, (&len, &count)) in region_lens.iter().zip(&counts).enumerate() {
            if count == 0 {
                continue;
            }
            let base = len / count;
            let extra = len % count;
            let mut start = 0;
            for s in 0..count {
                let slen = base + usize::from(s < extra);
                strips.push(Strip {
                    recording: rec,
                    start,
                    len: slen,
                });
                start += slen;
            }
            debug_assert_eq!(start, len);
        }
        let max_len = strips.iter().map(|s| s.len).max().unwrap_or(0);
        Ok(BatchPlan {
            strips,
            batch_size,
            max_len,
            window,
        })
    }

    pub fn strip_count(&self) -> usize {
        self.strips.len()
    }

    pub fn strips(&self) -> &[Strip] {
        &self.strips
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Number of batches per epoch (the longest strip length).
    pub fn batches_per_epoch(&self) -> usize {
        self.max_len
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Rows of batch `t`: one per strip still holding a sample at offset t.
    pub fn fill_batch(&self, t: usize, rows: &mut Vec<BatchRow>) {
        rows.clear();
        for (si, strip) in self.strips.iter().enumerate() {
            if t < strip.len {
                rows.push(BatchRow {
                    strip: si,
                    recording: strip.recording,
                    index: strip.start + t,
                });
            }
        }
    }

    /// Copies the 64-sample window ending at `row.index` (newest last),
    /// zero-padding positions before the recording start.
    pub fn window_for(&self, recordings: &[Recording], row: &BatchRow, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.window);
        let rec = &recordings[row.recording];
        let end = row.index + 1;
        let have = end.min(self.window);
        let pad = self.window - have;
        out[..pad].iter_mut().for_each(|v| *v = 0.0);
        out[pad..].copy_from_slice(&rec.input[end - have..end]);
    }

    pub fn target_for(&self, recordings: &[Recording], row: &BatchRow) -> f64 {
        recordings[row.recording].output[row.index]
    }
}
