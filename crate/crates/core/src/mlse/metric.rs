//! Block metrics integrated directly from hypothesised waveforms.

use num_complex::Complex64;

use crate::cpm::trapezoid;
use crate::error::{Error, Result};
use crate::stc::SignalBlock;

use super::ReceivedBlock;

fn check(rx: &ReceivedBlock, block: &SignalBlock) -> Result<()> {
    if rx.channel.lt() != block.lt() || rx.channel.lr() != rx.y.len() {
        return Err(Error::LengthMismatch {
            expected: block.lt(),
            actual: rx.channel.lt(),
        });
    }
    if let Some(bad) = rx.y.iter().find(|y| y.len() != block.samples_per_antenna()) {
        return Err(Error::LengthMismatch {
            expected: block.samples_per_antenna(),
            actual: bad.len(),
        });
    }
    Ok(())
}

fn residual_energy(y: &[Complex64], gains: &[Complex64], block: &SignalBlock, range: std::ops::RangeInclusive<usize>) -> f64 {
    trapezoid(
        block.dt(),
        range.map(|k| {
            let s: Complex64 = gains
                .iter()
                .zip(&block.waveforms)
                .map(|(a, wf)| a * wf.samples[k])
                .sum();
            (y[k] - s).norm_sqr()
        }),
    )
}

/// `sum_n int |y_n - sum_m alpha_nm s_m|^2` over the block.
pub fn metric_joint(rx: &ReceivedBlock, block: &SignalBlock) -> Result<f64> {
    check(rx, block)?;
    let last = block.samples_per_antenna() - 1;
    Ok(rx
        .y
        .iter()
        .zip(&rx.channel.alpha)
        .map(|(y, gains)| residual_energy(y, gains, block, 0..=last))
        .sum())
}

/// `sum_m sum_n int |y_n - alpha_nm s_m|^2 - (Lt - 1) sum_n int |y_n|^2`.
pub fn metric_blockwise(rx: &ReceivedBlock, block: &SignalBlock) -> Result<f64> {
    check(rx, block)?;
    let dt = block.dt();
    let lt = block.lt();
    let mut total = 0.0;
    for (y, gains) in rx.y.iter().zip(&rx.channel.alpha) {
        for (a, wf) in gains.iter().zip(&block.waveforms) {
            total += trapezoid(dt, y.iter().zip(&wf.samples).map(|(v, s)| (v - a * s).norm_sqr()));
        }
        total -= (lt as f64 - 1.0) * trapezoid(dt, y.iter().map(|v| v.norm_sqr()));
    }
    Ok(total)
}

/// Joint metric accumulated slot by slot. Identical to [`metric_joint`] up to
/// rounding, since the trapezoid rule splits exactly at slot boundaries.
pub fn metric_symbolwise(rx: &ReceivedBlock, block: &SignalBlock) -> Result<f64> {
    check(rx, block)?;
    let lt = block.lt();
    let n = (block.samples_per_antenna() - 1) / lt;
    let mut total = 0.0;
    for r in 0..lt {
        for (y, gains) in rx.y.iter().zip(&rx.channel.alpha) {
            total += residual_energy(y, gains, block, r * n..=(r + 1) * n);
        }
    }
    Ok(total)
}
