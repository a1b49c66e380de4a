//! Orthogonal space-time coded continuous phase modulation.
//!
//! * [`cpm`]: single-antenna CPM modulation and symbol helpers.
//! * [`stc`]: space-time mappings, correction phases, block encoder and
//!   the numerical orthogonality check.
//! * [`channel`]: flat fading MIMO channel with AWGN.
//! * [`mlse`]: trellis receivers (joint, blockwise and symbolwise metrics)
//!   and an exhaustive reference decoder.
//! * [`harness`]: BER simulation, diversity slope fitting, PSD estimation and
//!   initial-phase sweeps.

pub mod channel;
pub mod cpm;
pub mod error;
pub mod exec;
pub mod harness;
pub mod mlse;
pub mod seed;
pub mod stc;

pub use channel::{ChannelRealization, FadingModel};
pub use cpm::{CpmParams, ModIndex, PhaseState, PulseShape, Waveform};
pub use error::{Error, Result};
pub use exec::Execution;
pub use stc::{CorrectionFamily, Encoder, MappingScheme, Scheme, SignalBlock, StCode};
