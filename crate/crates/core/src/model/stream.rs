//! Model assembly and streaming inference.
//!
//! Skeleton: input FC (64 -> 2) -> recurrent block -> conditioning block ->
//! second recurrent block -> 1-unit linear FC that emits the gain
//! coefficient g; the output sample is y_n = g * x_n.

use crate::blocks::{
    BlockNodes, BlockParams, BlockPrepared, BlockState, BlockStateNodes, ConditioningNodes,
    ConditioningParams, ControlParams,
};
use crate::error::{Error, Result};
use crate::kernels::{rfft_magnitude_into, Fft, Rng};
use crate::layers::{Activation, DenseNodes, DenseParams, GruState, GruStateNodes};
use crate::model::{ModelConfig, WeightStore};
use crate::tape::{NodeId, Tape};

/// Typed view over a store's tensors plus the input-independent
/// precomputation (FFT plan, S4D discretization). Immutable and shareable
/// across streams; rebuild via [`Model::attach`] or refresh via
/// [`Model::refresh`] after mutating SSM parameters.
#[derive(Debug, Clone)]
pub struct Model {
    cfg: ModelConfig,
    pub fc_in: DenseParams,
    pub block1: BlockParams,
    pub cond: ConditioningParams,
    pub block2: BlockParams,
    pub fc_out: DenseParams,
    prepared1: BlockPrepared,
    prepared2: BlockPrepared,
    fft: Fft,
}

/// Recurrent state only (no audio buffer): both block states plus the
/// conditioning GRU. This is what training strips carry between batches.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub block1: BlockState,
    pub gru: GruState,
    pub block2: BlockState,
}

impl ModelState {
    pub fn reset(&mut self) {
        self.block1.reset();
        self.gru.reset();
        self.block2.reset();
    }

    pub fn flatten(&self, out: &mut Vec<f64>) {
        self.block1.flatten(out);
        out.extend_from_slice(&self.gru.h);
        self.block2.flatten(out);
    }
}

/// Tape handles for one row's recurrent state.
#[derive(Debug, Clone)]
pub struct ModelStateNodes {
    pub block1: BlockStateNodes,
    pub gru: GruStateNodes,
    pub block2: BlockStateNodes,
}

/// Parameter leaves for one tape, shared across rows and steps.
#[derive(Debug, Clone)]
pub struct ModelNodes {
    pub fc_in: DenseNodes,
    pub block1: BlockNodes,
    pub cond: ConditioningNodes,
    pub block2: BlockNodes,
    pub fc_out: DenseNodes,
}

/// All per-stream mutable state: the 64-sample input buffer, the recurrent
/// state, FFT scratch, and the last gain coefficient.
#[derive(Debug, Clone)]
pub struct StreamState {
    buf: Vec<f64>,
    pub state: ModelState,
    scratch_re: Vec<f64>,
    scratch_im: Vec<f64>,
    mags: Vec<f64>,
    last_gain: f64,
}

impl StreamState {
    pub fn reset(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = 0.0);
        self.state.reset();
        self.last_gain = 0.0;
    }

    /// Newest-last view of the input window.
    pub fn buffer(&self) -> &[f64] {
        &self.buf
    }

    /// Pre-seeds the input window (newest-last), e.g. to warm-start a stream
    /// mid-recording.
    pub fn seed_buffer(&mut self, window: &[f64]) {
        self.buf.copy_from_slice(window);
    }

    pub fn last_gain(&self) -> f64 {
        self.last_gain
    }

    /// Full state flattened; its length must be constant over the stream's
    /// lifetime.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.buf);
        self.state.flatten(&mut out);
        out.push(self.last_gain);
        out
    }
}

impl Model {
    fn declare_params(store: &mut WeightStore) -> Result<Model> {
        let cfg = store.config().clone();
        cfg.validate()?;
        let fc_in = DenseParams::declare(store, "fc_in", cfg.buffer_len, cfg.d_model, Activation::Linear)?;
        let block1 = BlockParams::declare(store, "block1", &cfg, true)?;
        let cond = ConditioningParams::declare(store, "cond", &cfg)?;
        let block2 = BlockParams::declare(store, "block2", &cfg, false)?;
        let fc_out = DenseParams::declare(store, "fc_out", cfg.d_model, 1, Activation::Linear)?;
        let fft = Fft::new(cfg.fft_size)?;
        Ok(Model {
            cfg,
            fc_in,
            block1,
            cond,
            block2,
            fc_out,
            prepared1: BlockPrepared::Plain,
            prepared2: BlockPrepared::Plain,
            fft,
        })
    }

    /// Locates (or creates, on unsealed stores) every tensor of the
    /// configured architecture and precomputes streaming-side quantities.
    pub fn attach(store: &mut WeightStore) -> Result<Model> {
        let mut model = Model::declare_params(store)?;
        model.refresh(store)?;
        Ok(model)
    }

    /// Recomputes cached input-independent quantities (S4D discretization)
    /// after parameter updates.
    pub fn refresh(&mut self, store: &WeightStore) -> Result<()> {
        self.prepared1 = self.block1.prepare(store)?;
        self.prepared2 = self.block2.prepare(store)?;
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn new_state(&self) -> ModelState {
        ModelState {
            block1: self.block1.new_state(),
            gru: self.cond.new_state(),
            block2: self.block2.new_state(),
        }
    }

    pub fn new_stream(&self) -> StreamState {
        StreamState {
            buf: vec![0.0; self.cfg.buffer_len],
            state: self.new_state(),
            scratch_re: vec![0.0; self.cfg.fft_size],
            scratch_im: vec![0.0; self.cfg.fft_size],
            mags: vec![0.0; self.cfg.spectrum_bins()],
            last_gain: 0.0,
        }
    }

    fn check_controls(&self, ctrl: &ControlParams) -> Result<()> {
        if ctrl.device() != self.cfg.device {
            return Err(Error::Config(format!(
                "weights are for device {}, controls are for {}",
                self.cfg.device,
                ctrl.device()
            )));
        }
        Ok(())
    }

    /// Core per-step computation over an explicit window (newest-last) and
    /// its magnitude spectrum. Returns the gain coefficient g.
    pub fn gain_for_window(
        &self,
        store: &WeightStore,
        state: &mut ModelState,
        window: &[f64],
        mags: &[f64],
        ctrl: &ControlParams,
    ) -> f64 {
        let mut v0 = [0.0f64; 2];
        self.fc_in.step(store, window, &mut v0);
        let mut u1 = [0.0f64; 2];
        self.block1
            .step(store, &self.prepared1, &mut state.block1, &v0, &mut u1);
        let mut g_c = [0.0f64; 2];
        self.cond.step(
            store,
            &mut state.gru,
            &u1,
            mags,
            ctrl.co(),
            ctrl.ti(),
            &mut g_c,
        );
        let mut u2 = [0.0f64; 2];
        self.block2
            .step(store, &self.prepared2, &mut state.block2, &g_c, &mut u2);
        let mut g = [0.0f64; 1];
        self.fc_out.step(store, &u2, &mut g);
        g[0]
    }

    /// One streaming step: the new sample enters the buffer, the oldest is
    /// discarded, and y_n = g * x_n comes back.
    pub fn process_sample(
        &self,
        store: &WeightStore,
        s: &mut StreamState,
        x: f64,
        ctrl: &ControlParams,
    ) -> Result<f64> {
        self.check_controls(ctrl)?;
        Ok(self.process_sample_unchecked(store, s, x, ctrl))
    }

    fn process_sample_unchecked(
        &self,
        store: &WeightStore,
        s: &mut StreamState,
        x: f64,
        ctrl: &ControlParams,
    ) -> f64 {
        s.buf.copy_within(1.., 0);
        let n = s.buf.len();
        s.buf[n - 1] = x;
        rfft_magnitude_into(
            &s.buf,
            &self.fft,
            &mut s.scratch_re,
            &mut s.scratch_im,
            &mut s.mags,
        );
        let g = self.gain_for_window(store, &mut s.state, &s.buf, &s.mags, ctrl);
        s.last_gain = g;
        g * x
    }

    /// Processes a whole signal in chunks of `chunk` samples. The chunk size
    /// is call granularity only: outputs are bit-identical for any chunking.
    pub fn process_stream(
        &self,
        store: &WeightStore,
        s: &mut StreamState,
        x: &[f64],
        ctrl: &ControlParams,
        chunk: usize,
    ) -> Result<Vec<f64>> {
        self.check_controls(ctrl)?;
        let chunk = chunk.max(1);
        let mut out = Vec::with_capacity(x.len());
        for block in x.chunks(chunk) {
            for &sample in block {
                out.push(self.process_sample_unchecked(store, s, sample, ctrl));
            }
        }
        Ok(out)
    }

    /// Magnitude spectrum of an arbitrary 64-sample window.
    pub fn window_spectrum(&self, window: &[f64]) -> Vec<f64> {
        let mut re = vec![0.0; self.cfg.fft_size];
        let mut im = vec![0.0; self.cfg.fft_size];
        let mut mags = vec![0.0; self.cfg.spectrum_bins()];
        self.window_spectrum_into(window, &mut re, &mut im, &mut mags);
        mags
    }

    /// Allocation-free spectrum for hot loops; `re`/`im` are fft_size
    /// scratch, `mags` receives the bins.
    pub fn window_spectrum_into(
        &self,
        window: &[f64],
        re: &mut [f64],
        im: &mut [f64],
        mags: &mut [f64],
    ) {
        rfft_magnitude_into(window, &self.fft, re, im, mags);
    }

    // ---- tape forms ---------------------------------------------------------

    pub fn nodes(&self, tape: &mut Tape, store: &WeightStore) -> ModelNodes {
        ModelNodes {
            fc_in: self.fc_in.nodes(tape, store),
            block1: self.block1.nodes(tape, store),
            cond: self.cond.nodes(tape, store),
            block2: self.block2.nodes(tape, store),
            fc_out: self.fc_out.nodes(tape, store),
        }
    }

    pub fn state_nodes(&self, tape: &mut Tape, state: &ModelState) -> ModelStateNodes {
        ModelStateNodes {
            block1: self.block1.state_nodes(tape, &state.block1),
            gru: GruStateNodes {
                h: tape.constant(&state.gru.h),
            },
            block2: self.block2.state_nodes(tape, &state.block2),
        }
    }

    /// Tape step over an explicit window. Returns the node of y = g * x_n
    /// (x_n is the newest window sample) and the advanced state.
    pub fn step_tape(
        &self,
        tape: &mut Tape,
        nodes: &ModelNodes,
        state: &ModelStateNodes,
        window: &[f64],
        mags: &[f64],
        ctrl: &ControlParams,
    ) -> (NodeId, ModelStateNodes) {
        let x_node = tape.constant(window);
        let v0 = self.fc_in.step_tape(tape, &nodes.fc_in, x_node);
        let (u1, b1_next) = self.block1.step_tape(tape, &nodes.block1, &state.block1, v0);
        let (g_c, gru_next) = self.cond.step_tape(
            tape,
            &nodes.cond,
            &state.gru,
            u1,
            mags,
            ctrl.co(),
            ctrl.ti(),
        );
        let (u2, b2_next) = self.block2.step_tape(tape, &nodes.block2, &state.block2, g_c);
        let g = self.fc_out.step_tape(tape, &nodes.fc_out, u2);
        let x_n = window[window.len() - 1];
        let y = tape.scale(g, x_n);
        (
            y,
            ModelStateNodes {
                block1: b1_next,
                gru: gru_next,
                block2: b2_next,
            },
        )
    }

    pub fn store_state_from_tape(
        &self,
        tape: &Tape,
        nodes: &ModelStateNodes,
        state: &mut ModelState,
    ) {
        self.block1
            .store_state_from_tape(tape, &nodes.block1, &mut state.block1);
        state.gru.h.copy_from_slice(tape.val(nodes.gru.h));
        self.block2
            .store_state_from_tape(tape, &nodes.block2, &mut state.block2);
    }
}

/// Deterministic weight initialization for a configuration: same (config,
/// seed) twice gives bit-identical stores.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<WeightStore> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    cfg.validate()?;
    let mut store = WeightStore::new(cfg);
    let model = Model::declare_params(&mut store)?;
    let mut rng = Rng::new(seed);
    model.fc_in.init(&mut store, &mut rng);
    model.block1.init(&mut store, &mut rng);
    model.cond.init(&mut store, &mut rng);
    model.block2.init(&mut store, &mut rng);
    model.fc_out.init(&mut store, &mut rng);
    // identity-gain start: g = 1 when the trunk contributes nothing yet
    let fc_out_b = model.fc_out.b;
    store.values_mut(fc_out_b)[0] = 1.0;
    Ok(store)
}
