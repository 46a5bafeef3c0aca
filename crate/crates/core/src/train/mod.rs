//! Training: MSE loss over single-sample predictions, Adam with global
//! gradient-norm clipping, the exponential learning-rate decay, stateful
//! truncated BPTT over (B, 1, 64)-shaped batches, early stopping on
//! validation loss, and best-weights checkpointing.

mod optim;

pub use optim::{clip_by_global_norm, Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use crate::data::{BatchPlan, BatchRow, Recording};
use crate::error::{Error, Result};
use crate::model::{Arch, Model, ModelState, WeightStore};
use crate::tape::{NodeId, Tape};
use std::fmt::Write as _;
use std::path::Path;

/// Initial learning rate.
pub const LR0: f64 = 3e-4;
/// Per-epoch decay base: lr(e) = DECAY_BASE^e * LR0.
pub const DECAY_BASE: f64 = 0.25;

/// Loss magnitude treated as unrecoverable divergence.
const DIVERGENCE_LOSS: f64 = 1e30;

/// lr(e) with the default constants.
pub fn lr_schedule(epoch: usize) -> f64 {
    DECAY_BASE.powi(epoch as i32) * LR0
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Consecutive non-improving validation epochs before stopping.
    pub patience: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub decay_base: f64,
    pub clip_norm: f64,
    /// Steps unrolled on-tape per optimizer update; 1 detaches the carried
    /// state every sample, matching the (B, 1, 64) input shape.
    pub tbptt_window: usize,
    /// Fraction of each recording carved off (at the end) for validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            patience: 30,
            batch_size: 2400,
            lr0: LR0,
            decay_base: DECAY_BASE,
            clip_norm: 1.0,
            tbptt_window: 1,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn lr(&self, epoch: usize) -> f64 {
        self.decay_base.powi(epoch as i32) * self.lr0
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0
            || self.patience == 0
            || self.batch_size == 0
            || self.tbptt_window == 0
        {
            return Err(Error::Config(
                "epochs, patience, batch size and tbptt window must be positive".into(),
            ));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.lr0 <= 0.0 || self.clip_norm <= 0.0 {
            return Err(Error::Config("lr0 and clip_norm must be positive".into()));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Tracks the best validation loss; `observe` returns true when training
/// should stop (no improvement for `patience` consecutive epochs).
#[derive(Debug, Clone)]
pub struct EarlyStop {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        EarlyStop {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            false
        } else {
            self.since_best += 1;
            self.since_best >= self.patience
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    /// Final optimizer state, for the checkpoint sidecar.
    pub optimizer: Adam,
}

/// Tab-separated history table: epoch, train loss, val loss, lr.
pub fn render_history(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch\ttrain_loss\tval_loss\tlr\n");
    for h in history {
        let _ = writeln!(
            out,
            "{}\t{:.10e}\t{:.10e}\t{:.10e}",
            h.epoch, h.train_loss, h.val_loss, h.lr
        );
    }
    out
}

pub fn train(
    store: &mut WeightStore,
    recordings: &[Recording],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_filtered(store, recordings, cfg, |_| true)
}

/// Training with a per-tensor trainable filter (by tensor name); frozen
/// tensors receive zero gradient.
pub fn train_filtered(
    store: &mut WeightStore,
    recordings: &[Recording],
    cfg: &TrainConfig,
    trainable: impl Fn(&str) -> bool,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if recordings.is_empty() {
        return Err(Error::Data("training needs at least one recording".into()));
    }
    let mut model = Model::attach(store)?;
    let window = model.config().buffer_len;

    // trainable mask over the flat parameter buffer
    let mut mask = vec![false; store.len()];
    for name in store.names().map(String::from).collect::<Vec<_>>() {
        let id = store.id(&name).expect("name from iteration");
        let (off, len) = store.span(id);
        let keep = trainable(&name);
        for m in mask.iter_mut().skip(off).take(len) {
            *m = keep;
        }
    }

    // validation = trailing fraction of each recording
    let mut train_lens = Vec::with_capacity(recordings.len());
    let mut val_starts = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let carve = ((1.0 - cfg.validation_fraction) * rec.len() as f64).ceil() as usize;
        let carve = carve.clamp(1, rec.len().saturating_sub(1).max(1));
        train_lens.push(carve);
        val_starts.push(carve);
    }

    let plan = BatchPlan::build(&train_lens, cfg.batch_size, window, cfg.seed)?;
    let mut adam = Adam::new(store.len());
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut history = Vec::new();
    let mut best_params = store.flat().to_vec();
    let mut stopped_early = false;

    let mut tape = Tape::new();
    let mut strip_states: Vec<ModelState> = Vec::new();
    let mut window_buf = vec![0.0; window];
    let mut re = vec![0.0; model.config().fft_size];
    let mut im = vec![0.0; model.config().fft_size];
    let mut mags = vec![0.0; model.config().spectrum_bins()];
    let mut grads: Vec<f64> = Vec::new();
    let mut preds: Vec<NodeId> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.lr(epoch);
        strip_states.clear();
        strip_states.resize_with(plan.strip_count(), || model.new_state());

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        let mut t = 0;
        while t < plan.batches_per_epoch() {
            tape.reset(store.len());
            let nodes = model.nodes(&mut tape, store);
            preds.clear();
            targets.clear();

            // every live strip advances tbptt_window samples on-tape
            let mut final_states: Vec<(usize, crate::model::ModelStateNodes)> = Vec::new();
            for (si, strip) in plan.strips().iter().enumerate() {
                if t >= strip.len {
                    continue;
                }
                let mut snodes = model.state_nodes(&mut tape, &strip_states[si]);
                let steps = cfg.tbptt_window.min(strip.len - t);
                for w in 0..steps {
                    let row = BatchRow {
                        strip: si,
                        recording: strip.recording,
                        index: strip.start + t + w,
                    };
                    plan.window_for(recordings, &row, &mut window_buf);
                    model.window_spectrum_into(&window_buf, &mut re, &mut im, &mut mags);
                    let ctrl = &recordings[row.recording].controls;
                    let (y, next) =
                        model.step_tape(&mut tape, &nodes, &snodes, &window_buf, &mags, ctrl);
                    snodes = next;
                    preds.push(y);
                    targets.push(plan.target_for(recordings, &row));
                }
                final_states.push((si, snodes));
            }
            if preds.is_empty() {
                break;
            }
            let loss = tape.mse_many(&preds, &targets);
            let loss_val = tape.val(loss)[0];
            if !loss_val.is_finite() || loss_val > DIVERGENCE_LOSS {
                return Err(Error::Numeric(format!(
                    "training diverged (loss {loss_val:e}) at epoch {epoch}, batch offset {t}"
                )));
            }
            loss_sum += loss_val * preds.len() as f64;
            loss_count += preds.len();
            tape.backward(loss)?;

            // detach: carried states become plain numbers again
            for (si, snodes) in &final_states {
                model.store_state_from_tape(&tape, snodes, &mut strip_states[*si]);
            }

            grads.clear();
            grads.extend_from_slice(tape.param_grads());
            for (g, &keep) in grads.iter_mut().zip(&mask) {
                if !keep {
                    *g = 0.0;
                }
            }
            clip_by_global_norm(&mut grads, cfg.clip_norm);
            adam.step(store.flat_mut(), &grads, lr);
            project_constraints(&model, store);

            t += cfg.tbptt_window;
        }

        let train_loss = loss_sum / loss_count.max(1) as f64;
        model.refresh(store)?;
        let val_loss = validation_loss(&model, store, recordings, &val_starts)?;
        if !val_loss.is_finite() || val_loss > DIVERGENCE_LOSS {
            return Err(Error::Numeric(format!(
                "validation diverged (loss {val_loss:e}) at epoch {epoch}"
            )));
        }
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            lr,
        });

        let improved = val_loss < stopper.best_loss();
        let stop = stopper.observe(epoch, val_loss);
        if improved {
            best_params.copy_from_slice(store.flat());
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    store.flat_mut().copy_from_slice(&best_params);
    Ok(TrainOutcome {
        history,
        best_epoch: stopper.best_epoch(),
        best_val_loss: stopper.best_loss(),
        stopped_early,
        optimizer: adam,
    })
}

/// Keeps constrained parameters in their stable region after an optimizer
/// step (S4D continuous poles must stay in the left half-plane).
fn project_constraints(model: &Model, store: &mut WeightStore) {
    if model.config().arch != Arch::S4d {
        return;
    }
    for name in ["block1.ssm.lambda_re", "block2.ssm.lambda_re"] {
        if let Some(id) = store.id(name) {
            for v in store.values_mut(id) {
                if *v > -1e-4 {
                    *v = -1e-4;
                }
            }
        }
    }
}

/// Streaming MSE over the validation tail of each recording. The stream is
/// warm-started with the 64 samples preceding the validation region and a
/// zero recurrent state, so the figure is deterministic per epoch.
fn validation_loss(
    model: &Model,
    store: &WeightStore,
    recordings: &[Recording],
    val_starts: &[usize],
) -> Result<f64> {
    let window = model.config().buffer_len;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (rec, &start) in recordings.iter().zip(val_starts) {
        if start >= rec.len() {
            continue;
        }
        let mut stream = model.new_stream();
        let mut seed = vec![0.0; window];
        let have = start.min(window);
        seed[window - have..].copy_from_slice(&rec.input[start - have..start]);
        stream.seed_buffer(&seed);
        for i in start..rec.len() {
            let y = model.process_sample(store, &mut stream, rec.input[i], &rec.controls)?;
            let d = y - rec.output[i];
            acc += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Data("validation region is empty".into()));
    }
    Ok(acc / count as f64)
}

/// Writes the optimizer state next to a weight checkpoint.
pub fn save_optimizer_sidecar(adam: &Adam, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "optossm-optstate v1");
    let _ = writeln!(out, "step {}", adam.step_count());
    for (tag, vals) in [("m", adam.first_moments()), ("v", adam.second_moments())] {
        let _ = writeln!(out, "{tag} {}", vals.len());
        for (j, v) in vals.iter().enumerate() {
            if j > 0 {
                out.push(if j % 8 == 0 { '\n' } else { ' ' });
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
