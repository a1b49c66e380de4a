//! Monte Carlo BER curves, diversity slopes, Welch spectra and initial-phase
//! sweeps.
//!
//! Every result is a pure function of the configuration and the master
//! seed. A trial is one frame; its data, fading and noise generators are
//! derived from `(seed, trial)` alone, so two configurations simulated with
//! the same seed see the same data and, antenna by antenna, the same
//! channel and noise draws. Adding a receive antenna only adds draws.

mod ber;
mod output;
mod psd;
mod sweep;

use serde::{Deserialize, Serialize};

pub use ber::{
    estimate_diversity_slope, fit_slope, run_ber, run_point, simulate_frame, top_window, wilson_interval,
    BerCurve, BerPoint, FrameOutcome,
};
pub use output::{write_ber_csv, write_psd_csv, write_sweep_csv};
pub use psd::{spectral_shift, welch_psd, PsdEstimate, WelchOptions, Window};
pub use sweep::{sweep_initial_phases, PhaseSweepGrid};

use crate::channel::FadingModel;
use crate::cpm::CpmParams;
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::mlse::DecoderConfig;
use crate::stc::Scheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Receive antennas.
    pub lr: usize,
    pub fading: FadingModel,
    /// Slots over which the gains stay constant; `None` means one code
    /// block. Must be a multiple of the number of transmit antennas.
    pub coherence_slots: Option<usize>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            lr: 1,
            fading: FadingModel::Rayleigh,
            coherence_slots: None,
        }
    }
}

/// A point ends once it has `min_errors` bit errors or `max_bits` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 100,
            max_bits: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub params: CpmParams,
    pub channel: ChannelConfig,
    pub decoder: DecoderConfig,
    /// Symbols per frame; a multiple of the coherence interval.
    pub frame_slots: usize,
    pub stop: StopRule,
    pub seed: u64,
    pub exec: Execution,
    /// Frames handed to the executor at once.
    pub batch: usize,
}

impl SimConfig {
    pub fn new(scheme: Scheme, params: CpmParams) -> Self {
        let decoder = DecoderConfig::for_scheme(&scheme);
        Self {
            scheme,
            params,
            channel: ChannelConfig::default(),
            decoder,
            frame_slots: 60,
            stop: StopRule::default(),
            seed: 0,
            exec: Execution::default(),
            batch: 64,
        }
    }

    pub fn coherence(&self) -> usize {
        self.channel.coherence_slots.unwrap_or(self.scheme.lt())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let lt = self.scheme.lt();
        let coh = self.coherence();
        if self.channel.lr == 0 {
            return Err(invalid("Lr", "at least one receive antenna is required"));
        }
        if coh == 0 || !coh.is_multiple_of(lt) {
            return Err(invalid(
                "coherence",
                format!("coherence of {coh} slots is not a multiple of Lt={lt}"),
            ));
        }
        if self.frame_slots == 0 || !self.frame_slots.is_multiple_of(coh) {
            return Err(invalid(
                "frame_slots",
                format!("frame of {} slots is not a multiple of the coherence interval {coh}", self.frame_slots),
            ));
        }
        if self.batch == 0 {
            return Err(invalid("batch", "batch size must be positive"));
        }
        if self.stop.max_bits == 0 {
            return Err(invalid("max_bits", "bit budget must be positive"));
        }
        Ok(())
    }

    /// Short hash of the configuration, stable for a given build.
    pub fn fingerprint(&self) -> String {
        let text = format!("{:?}|{:?}|{:?}|{:?}|{}|{:?}", self.scheme, self.params, self.channel, self.decoder, self.frame_slots, self.stop);
        // FNV-1a
        let hash = text
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        format!("{hash:016x}")
    }
}
