//! Welch power spectral density and spectral shift measurement.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann, so 50% overlapped windows sum to a constant
            Window::Hann => (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchOptions {
    pub segment: usize,
    /// Overlap as a fraction of the segment, in `[0, 1)`.
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchOptions {
    fn default() -> Self {
        Self {
            segment: 4096,
            overlap: 0.5,
            window: Window::Hann,
        }
    }
}

/// Two-sided spectrum on an increasing frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Frequencies normalised by the bit duration, `f * T_d`.
    pub freqs: Vec<f64>,
    /// Power density in dB.
    pub power_db: Vec<f64>,
    /// Bin spacing in `f * T_d` units.
    pub df: f64,
    /// Bin spacing in Hz (per unit time).
    pub df_hz: f64,
    pub segments: usize,
    pub options: WelchOptions,
}

impl PsdEstimate {
    pub fn power_linear(&self) -> Vec<f64> {
        self.power_db.iter().map(|p| 10f64.powf(p / 10.0)).collect()
    }

    /// `sum P(f) df` in signal units, comparable with the mean power.
    pub fn total_power(&self) -> f64 {
        self.power_linear().iter().sum::<f64>() * self.df_hz
    }
}

/// Welch estimate of `signal` sampled at `dt`. `bit_time` normalises the
/// frequency axis.
pub fn welch_psd(signal: &[Complex64], dt: f64, bit_time: f64, opts: &WelchOptions) -> Result<PsdEstimate> {
    let seg = opts.segment;
    if seg < 8 {
        return Err(invalid("segment", "segment length must be at least 8"));
    }
    if !(0.0..1.0).contains(&opts.overlap) {
        return Err(invalid("overlap", "overlap must lie in [0, 1)"));
    }
    let hop = ((seg as f64) * (1.0 - opts.overlap)).round().max(1.0) as usize;
    let needed = seg + 3 * hop;
    if signal.len() < needed {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed,
        });
    }
    let w = opts.window.coefficients(seg);
    let w_energy: f64 = w.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(seg);
    let mut acc = vec![0.0; seg];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg];
    let mut segments = 0;
    let mut start = 0;
    while start + seg <= signal.len() {
        for (b, (x, wk)) in buf.iter_mut().zip(signal[start..start + seg].iter().zip(&w)) {
            *b = x * wk;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let fs = 1.0 / dt;
    let scale = 1.0 / (fs * w_energy * segments as f64);
    let df_hz = fs / seg as f64;
    let half = seg / 2;
    // fftshift: bins seg/2..seg are the negative frequencies
    let mut freqs = Vec::with_capacity(seg);
    let mut power_db = Vec::with_capacity(seg);
    for i in 0..seg {
        let k = (i + half) % seg;
        let f = if k >= half { k as f64 - seg as f64 } else { k as f64 } * df_hz;
        freqs.push(f * bit_time);
        power_db.push(10.0 * (acc[k] * scale).max(1e-300).log10());
    }
    Ok(PsdEstimate {
        freqs,
        power_db,
        df: df_hz * bit_time,
        df_hz,
        segments,
        options: *opts,
    })
}

/// Shift `delta` (in `f * T_d`) that best maps `b` onto `a`, i.e.
/// `a(f) ~ b(f - delta)`, found by minimising the mean absolute difference of
/// the linear spectra over the overlapping bins, then refined with a parabola
/// through the cost at the best integer shift and its neighbours.
pub fn spectral_shift(a: &PsdEstimate, b: &PsdEstimate) -> Result<f64> {
    if a.freqs.len() != b.freqs.len() || (a.df - b.df).abs() > 1e-12 * a.df.abs().max(1.0) {
        return Err(Error::LengthMismatch {
            expected: a.freqs.len(),
            actual: b.freqs.len(),
        });
    }
    let pa = a.power_linear();
    let pb = b.power_linear();
    let n = pa.len() as isize;
    let max_shift = n / 4;
    let cost = |s: isize| -> f64 {
        let lo = s.max(0);
        let hi = (n + s).min(n);
        let total: f64 = (lo..hi).map(|i| (pa[i as usize] - pb[(i - s) as usize]).abs()).sum();
        total / (hi - lo) as f64
    };
    let costs: Vec<f64> = (-max_shift..=max_shift).map(cost).collect();
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    let mut shift = best as f64 - max_shift as f64;
    if best > 0 && best + 1 < costs.len() {
        let (cm, c0, cp) = (costs[best - 1], costs[best], costs[best + 1]);
        let denom = cm - 2.0 * c0 + cp;
        if denom > 0.0 {
            shift += (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok(shift * a.df)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f0: f64, dt: f64, n: usize) -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * f0 * k as f64 * dt)).collect()
    }

    #[test]
    fn tone_peaks_at_its_frequency() {
        let dt = 1.0 / 64.0;
        let opts = WelchOptions { segment: 1024, ..Default::default() };
        let psd = welch_psd(&tone(5.0, dt, 20_000), dt, 1.0, &opts).unwrap();
        let peak = psd
            .power_db
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap()
            .0;
        assert!((psd.freqs[peak] - 5.0).abs() <= psd.df);
        assert!((psd.total_power() - 1.0).abs() < 0.05);
    }

    #[test]
    fn shift_between_tones() {
        let dt = 1.0 / 64.0;
        let opts = WelchOptions { segment: 1024, ..Default::default() };
        let a = welch_psd(&tone(3.0, dt, 20_000), dt, 1.0, &opts).unwrap();
        let b = welch_psd(&tone(-2.0, dt, 20_000), dt, 1.0, &opts).unwrap();
        assert!((spectral_shift(&a, &b).unwrap() - 5.0).abs() < 0.5 * a.df);
        assert!(spectral_shift(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn short_signals_are_rejected() {
        let x = vec![Complex64::new(1.0, 0.0); 100];
        assert!(matches!(
            welch_psd(&x, 1.0, 1.0, &WelchOptions { segment: 64, ..Default::default() }),
            Err(Error::SignalTooShort { .. })
        ));
    }
}
