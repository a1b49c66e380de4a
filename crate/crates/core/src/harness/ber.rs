//! Bit error rate simulation and diversity slope fitting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{noise_density, receive_antenna, ChannelRealization};
use crate::cpm::{bits_to_symbol, symbol_to_bits};
use crate::error::{Error, Result};
use crate::mlse::{DecodeStats, Decoder, ReceivedBlock};
use crate::seed::{rng_for, stream};
use crate::stc::Encoder;

use super::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub sent: Vec<i32>,
    pub decoded: Vec<i32>,
    pub bits: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub stats: DecodeStats,
}

/// Simulates frame `trial` at `ebn0_db`.
pub fn simulate_frame(cfg: &SimConfig, decoder: &Decoder, ebn0_db: f64, trial: u64) -> Result<FrameOutcome> {
    let params = &cfg.params;
    let lt = cfg.scheme.lt();
    let width = params.bits_per_symbol() as usize;
    let mut data_rng = rng_for(cfg.seed, &[stream::DATA, trial]);
    let bits: Vec<u8> = (0..cfg.frame_slots * width).map(|_| data_rng.random_range(0..2u8)).collect();
    let sent: Vec<i32> = bits.chunks(width).map(|b| bits_to_symbol(b, params.m)).collect();

    let blocks = Encoder::new(&cfg.scheme, params).encode_stream(&sent)?;
    let n0 = noise_density(params, ebn0_db);
    let blocks_per_interval = cfg.coherence() / lt;
    let intervals = blocks.len().div_ceil(blocks_per_interval);

    let mut received: Vec<ReceivedBlock> = blocks
        .iter()
        .map(|_| ReceivedBlock {
            y: Vec::with_capacity(cfg.channel.lr),
            channel: ChannelRealization { alpha: Vec::with_capacity(cfg.channel.lr) },
        })
        .collect();
    for n in 0..cfg.channel.lr {
        let mut fade_rng = rng_for(cfg.seed, &[stream::FADING, trial, n as u64]);
        let mut noise_rng = rng_for(cfg.seed, &[stream::NOISE, trial, n as u64]);
        let gains: Vec<Vec<_>> = (0..intervals)
            .map(|_| (0..lt).map(|_| cfg.channel.fading.draw(&mut fade_rng)).collect())
            .collect();
        for (l, (block, rx)) in blocks.iter().zip(received.iter_mut()).enumerate() {
            let row = &gains[l / blocks_per_interval];
            rx.y.push(receive_antenna(block, row, n0, &mut noise_rng)?);
            rx.channel.alpha.push(row.clone());
        }
    }

    let out = decoder.decode(&received)?;
    let mut decoded_bits = Vec::with_capacity(bits.len());
    for &d in &out.symbols {
        symbol_to_bits(d, params.m, &mut decoded_bits);
    }
    let bit_errors = bits.iter().zip(&decoded_bits).filter(|(a, b)| a != b).count() as u64;
    let symbol_errors = sent.iter().zip(&out.symbols).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameOutcome {
        sent,
        decoded: out.symbols,
        bits: bits.len() as u64,
        bit_errors,
        symbol_errors,
        stats: out.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub frames: u64,
    pub symbol_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub fingerprint: String,
    pub seed: u64,
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(errors: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs one Eb/N0 point until the stop rule triggers. Frames are evaluated
/// in batches, but the point is cut at the first frame index where the rule
/// holds, so the result does not depend on the batch size or thread count.
pub fn run_point(cfg: &SimConfig, decoder: &Decoder, ebn0_db: f64) -> Result<(BerPoint, DecodeStats)> {
    cfg.validate()?;
    let mut errors = 0u64;
    let mut bits = 0u64;
    let mut symbol_errors = 0u64;
    let mut frames = 0u64;
    let mut stats = DecodeStats::default();
    'outer: loop {
        let start = frames;
        let batch = cfg.exec.map(cfg.batch, |i| simulate_frame(cfg, decoder, ebn0_db, start + i as u64));
        for outcome in batch {
            let o = outcome?;
            errors += o.bit_errors;
            bits += o.bits;
            symbol_errors += o.symbol_errors;
            frames += 1;
            stats.merge(&o.stats);
            if errors >= cfg.stop.min_errors || bits >= cfg.stop.max_bits {
                break 'outer;
            }
        }
    }
    let (ci_lo, ci_hi) = wilson_interval(errors, bits);
    Ok((
        BerPoint {
            ebn0_db,
            errors,
            bits,
            ber: errors as f64 / bits as f64,
            ci_lo,
            ci_hi,
            frames,
            symbol_errors,
        },
        stats,
    ))
}

pub fn run_ber(cfg: &SimConfig, ebn0_db: &[f64]) -> Result<BerCurve> {
    cfg.validate()?;
    let decoder = Decoder::new(&cfg.scheme, &cfg.params, cfg.decoder)?;
    let points = ebn0_db
        .iter()
        .map(|&e| run_point(cfg, &decoder, e).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        points,
        fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
    })
}

/// Negative least-squares slope of `log10 BER` against `log10(Eb/N0)`.
pub fn fit_slope(ebn0_db: &[f64], ber: &[f64]) -> Result<f64> {
    if ebn0_db.len() != ber.len() {
        return Err(Error::LengthMismatch {
            expected: ebn0_db.len(),
            actual: ber.len(),
        });
    }
    let pts: Vec<(f64, f64)> = ebn0_db
        .iter()
        .zip(ber)
        .filter(|(_, &b)| b > 0.0)
        .map(|(&e, &b)| (e / 10.0, b.log10()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            available: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            available: 1,
        });
    }
    Ok(-sxy / sxx)
}

/// Points within `width_db` of the highest simulated Eb/N0.
pub fn top_window(curve: &BerCurve, width_db: f64) -> Vec<BerPoint> {
    let top = curve.points.iter().map(|p| p.ebn0_db).fold(f64::NEG_INFINITY, f64::max);
    curve
        .points
        .iter()
        .filter(|p| p.ebn0_db >= top - width_db - 1e-9)
        .cloned()
        .collect()
}

/// Diversity slope over the points of `window`, each of which must carry at
/// least `min_errors` errors.
pub fn estimate_diversity_slope(window: &[BerPoint], min_errors: u64) -> Result<f64> {
    let usable: Vec<&BerPoint> = window.iter().filter(|p| p.errors >= min_errors.max(1)).collect();
    if usable.len() < 3 || usable.len() < window.len() {
        return Err(Error::InsufficientPoints {
            needed: window.len().max(3),
            available: usable.len(),
        });
    }
    let x: Vec<f64> = usable.iter().map(|p| p.ebn0_db).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.ber).collect();
    fit_slope(&x, &y)
}
