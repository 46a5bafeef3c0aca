//! Dataset plumbing: WAV ingestion/emission, control normalization, the
//! recording-level 90/10 split with silence-seeking split points, stateful
//! batch assembly, and a synthetic feed-forward compressor used to generate
//! ground truth at desk scale.

mod batch;
mod controls;
mod manifest;
mod recording;
mod split;
mod synth;
mod wav;

pub use batch::{BatchPlan, BatchRow};
pub use controls::{denormalize_controls, normalize_controls, RawControls};
pub use manifest::{load_manifest, write_manifest, ManifestEntry};
pub use recording::Recording;
pub use split::{split_train_test, SplitOutcome};
pub use synth::{synth_compressor, test_signal, OracleSettings};
pub use wav::{load_wav, save_wav, WavData};

/// The only sample rate the pipeline accepts.
pub const SAMPLE_RATE: u32 = 48_000;
