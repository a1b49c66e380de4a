//! Flat fading MIMO channel with complex AWGN.
//!
//! Receive antenna `n` sees `y_n(t) = sum_m alpha[n][m] s_m(t) + w_n(t)`. The
//! noise is white with two-sided density `N0`; sampled at spacing `dt` this is
//! a variance of `N0 / (2 dt)` per real dimension, so that a correlator
//! `sum y s* dt` sees noise of variance `N0 * E`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cpm::CpmParams;
use crate::error::{invalid, Result};
use crate::stc::SignalBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingModel {
    /// `alpha ~ CN(0, 1)`: Rayleigh amplitude with uniform phase.
    #[default]
    Rayleigh,
    /// Real, Rayleigh distributed gains with `E alpha^2 = 1` and no phase rotation.
    RayleighAmplitude,
    /// `alpha = 1` on every path.
    None,
}

impl std::str::FromStr for FadingModel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rayleigh" | "cn" => Ok(FadingModel::Rayleigh),
            "rayleigh-amplitude" | "amplitude" => Ok(FadingModel::RayleighAmplitude),
            "none" | "awgn" => Ok(FadingModel::None),
            _ => Err(invalid("fading", format!("unknown fading model `{s}`"))),
        }
    }
}

impl FadingModel {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            FadingModel::Rayleigh => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            FadingModel::RayleighAmplitude => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new((0.5 * (re * re + im * im)).sqrt(), 0.0)
            }
            FadingModel::None => Complex64::new(1.0, 0.0),
        }
    }
}

/// Path gains `alpha[n][m]` from transmit antenna `m` to receive antenna `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub alpha: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn identity(lr: usize, lt: usize) -> Self {
        Self {
            alpha: vec![vec![Complex64::new(1.0, 0.0); lt]; lr],
        }
    }

    pub fn lr(&self) -> usize {
        self.alpha.len()
    }

    pub fn lt(&self) -> usize {
        self.alpha.first().map_or(0, Vec::len)
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.alpha[n]
    }
}

/// Draws all `lr * lt` gains from one generator.
pub fn draw_fading<R: Rng + ?Sized>(model: FadingModel, lr: usize, lt: usize, rng: &mut R) -> ChannelRealization {
    ChannelRealization {
        alpha: (0..lr)
            .map(|_| (0..lt).map(|_| model.draw(rng)).collect())
            .collect(),
    }
}

/// `N0` for a target `Eb/N0` in dB, with `Eb = Es / log2 M`. Infinite
/// `Eb/N0` gives a noiseless channel.
pub fn noise_density(params: &CpmParams, ebn0_db: f64) -> f64 {
    if ebn0_db == f64::INFINITY {
        return 0.0;
    }
    let eb = params.es / params.bits_per_symbol() as f64;
    eb / 10f64.powf(ebn0_db / 10.0)
}

/// Adds complex white noise of density `n0` to `samples` in place.
pub fn add_noise<R: Rng + ?Sized>(samples: &mut [Complex64], n0: f64, dt: f64, rng: &mut R) {
    if n0 == 0.0 {
        return;
    }
    let sigma = (n0 / (2.0 * dt)).sqrt();
    for s in samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re, im) * sigma;
    }
}

/// Received signal of receive antenna `n` for one block, noise drawn from `rng`.
pub fn receive_antenna<R: Rng + ?Sized>(
    block: &SignalBlock,
    gains: &[Complex64],
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if gains.len() != block.lt() {
        return Err(crate::error::Error::LengthMismatch {
            expected: block.lt(),
            actual: gains.len(),
        });
    }
    let len = block.samples_per_antenna();
    let mut y = vec![Complex64::new(0.0, 0.0); len];
    for (wf, &a) in block.waveforms.iter().zip(gains) {
        for (acc, &s) in y.iter_mut().zip(&wf.samples) {
            *acc += a * s;
        }
    }
    add_noise(&mut y, n0, block.dt(), rng);
    Ok(y)
}

/// Received signals of all receive antennas, `[n][sample]`.
pub fn apply_channel<R: Rng + ?Sized>(
    block: &SignalBlock,
    channel: &ChannelRealization,
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>> {
    channel
        .alpha
        .iter()
        .map(|row| receive_antenna(block, row, n0, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpm::{ModIndex, PulseShape};
    use crate::stc::{CorrectionFamily, Encoder, Scheme, StCode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fading_has_unit_power() {
        for model in [FadingModel::Rayleigh, FadingModel::RayleighAmplitude] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let n = 100_000;
            let p: f64 = (0..n).map(|_| model.draw(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
            assert!((p - 1.0).abs() < 0.02, "{model:?}: {p}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = FadingModel::RayleighAmplitude.draw(&mut rng);
        assert_eq!(a.im, 0.0);
        assert!(a.re >= 0.0);
    }

    #[test]
    fn noise_variance_matches_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let (n0, dt) = (0.3, 1.0 / 64.0);
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        add_noise(&mut x, n0, dt, &mut rng);
        let var = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let want = n0 / dt;
        assert!((var / want - 1.0).abs() < 0.02, "{var} vs {want}");
    }

    #[test]
    fn identity_channel_without_noise_sums_antennas() {
        let p = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 4, 1, PulseShape::Rec).unwrap();
        let code = StCode::family(2, CorrectionFamily::Pc2Generic).unwrap();
        let block = Encoder::new(&Scheme::Coded(code), &p).push_block(&[1, -3], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = apply_channel(&block, &ChannelRealization::identity(2, 2), 0.0, &mut rng).unwrap();
        for n in 0..2 {
            for (k, v) in y[n].iter().enumerate() {
                let want = block.waveforms[0].samples[k] + block.waveforms[1].samples[k];
                assert!((v - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn ebn0_to_density() {
        let p = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 4, 1, PulseShape::Rec).unwrap();
        assert!((noise_density(&p, 0.0) - 0.5).abs() < 1e-15);
        assert!((noise_density(&p, 10.0) - 0.05).abs() < 1e-15);
        assert_eq!(noise_density(&p, f64::INFINITY), 0.0);
    }
}
