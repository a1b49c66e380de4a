//! Brute-force sequence detection over every data sequence, used as the
//! reference for the trellis receivers.

use serde::{Deserialize, Serialize};

use crate::cpm::{index_to_symbol, CpmParams};
use crate::error::{Error, Result};
use crate::stc::{Encoder, Scheme};

use super::{metric_blockwise, metric_joint, Metric, ReceivedBlock};

/// Longest sequence (in symbols) searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub symbols: Vec<i32>,
    pub metric: f64,
    pub candidates: usize,
}

/// Minimises the chosen metric over all `M^n` sequences, `n = blocks * Lt`.
/// Ties keep the lexicographically smallest sequence.
pub fn exhaustive_ml(
    scheme: &Scheme,
    params: &CpmParams,
    blocks: &[ReceivedBlock],
    metric: Metric,
) -> Result<ExhaustiveResult> {
    let lt = scheme.lt();
    let n = blocks.len() * lt;
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLong {
            n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let m = params.m as usize;
    let total = m.pow(n as u32);
    let mut best: Option<(f64, Vec<i32>)> = None;
    let mut d = vec![0i32; n];
    for idx in 0..total {
        let mut rest = idx;
        for slot in d.iter_mut().rev() {
            *slot = index_to_symbol((rest % m) as u32, params.m);
            rest /= m;
        }
        let mut enc = Encoder::new(scheme, params);
        let mut value = 0.0;
        for (l, rx) in blocks.iter().enumerate() {
            let block = enc.push_block(&d[l * lt..(l + 1) * lt], None)?;
            value += match metric {
                Metric::Blockwise => metric_blockwise(rx, &block)?,
                _ => metric_joint(rx, &block)?,
            };
        }
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, d.clone()));
        }
    }
    let (metric, symbols) = best.expect("at least one candidate");
    Ok(ExhaustiveResult {
        symbols,
        metric,
        candidates: total,
    })
}
