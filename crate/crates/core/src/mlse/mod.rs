//! Maximum-likelihood sequence estimation for space-time coded CPM.
//!
//! The receiver knows the path gains of every block. Three metrics are
//! available:
//!
//! * joint: `D1 = sum_n int |y_n - sum_m alpha_nm s_m|^2`, the ML metric for
//!   any code;
//! * blockwise: `D2 = sum_m sum_n int |y_n - alpha_nm s_m|^2 - (Lt - 1) sum_n int |y_n|^2`,
//!   which drops the cross terms between antennas and equals `D1` for
//!   orthogonal codes;
//! * symbolwise: `D3`, the distance to the summed hypothesis
//!   `sum_m alpha_nm s_m` over one slot, on a per-symbol trellis. Needs the
//!   parallel mapping; summed over a block it equals `D1`.
//!
//! Joint and blockwise trellises advance one code block per stage with
//! `M^Lt` branches per state; the symbolwise trellis advances one slot per
//! stage with `M` branches.

mod exhaustive;
mod metric;
mod trellis;
mod viterbi;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use exhaustive::{exhaustive_ml, ExhaustiveResult, EXHAUSTIVE_LIMIT};
pub use metric::{metric_blockwise, metric_joint, metric_symbolwise};
pub use trellis::Trellis;
pub use viterbi::{DecodeStats, Decoded, Decoder, DecoderConfig};

use crate::channel::ChannelRealization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Joint,
    Blockwise,
    Symbolwise,
    /// `D3` integrated directly from each hypothesised waveform. Slow; kept
    /// as a cross-check of the correlator form.
    Direct,
}

impl std::str::FromStr for Metric {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" | "d1" => Ok(Metric::Joint),
            "blockwise" | "d2" => Ok(Metric::Blockwise),
            "symbolwise" => Ok(Metric::Symbolwise),
            "direct" | "d3" => Ok(Metric::Direct),
            _ => Err(crate::error::invalid("metric", format!("unknown metric `{s}`"))),
        }
    }
}

/// Received samples of one code block on every receive antenna, with the
/// block's path gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedBlock {
    /// `y[n][sample]`, `Lt * oversampling + 1` samples per antenna.
    pub y: Vec<Vec<Complex64>>,
    pub channel: ChannelRealization,
}
