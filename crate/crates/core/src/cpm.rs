//! Constant-envelope CPM baseband modulation.
//!
//! Phases are carried in cycles: a sample is `A * exp(j 2 pi phi)`. Within a
//! symbol slot the phase is
//!
//! ```text
//! phi(tau) = theta + h * sum_{i=0}^{gamma-1} d_{k-i} q(tau + i T) + c(tau),   0 <= tau <= T
//! ```
//!
//! where `theta` is the phase memory, `d_{k-i}` the current symbol and its
//! `gamma - 1` predecessors, `q` the phase smoothing function and `c` an
//! optional additive correction phase.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Modulation index `h = 2 m0 / p` with `gcd(m0, p) = 1`, kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModIndex {
    m0: u32,
    p: u32,
}

impl ModIndex {
    pub fn new(m0: u32, p: u32) -> Result<Self> {
        if m0 == 0 || p == 0 {
            return Err(invalid("h", "m0 and p must be positive"));
        }
        if gcd(m0 as u64, p as u64) != 1 {
            return Err(invalid("h", format!("m0={m0} and p={p} are not coprime")));
        }
        Ok(Self { m0, p })
    }

    /// Builds the index from the plain fraction `num/den`.
    pub fn from_fraction(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(invalid("h", "numerator and denominator must be positive"));
        }
        let twice_den = 2 * den as u64;
        let g = gcd(num as u64, twice_den);
        Self::new((num as u64 / g) as u32, (twice_den / g) as u32)
    }

    pub fn m0(&self) -> u32 {
        self.m0
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `h` as a float, for phase evaluation only.
    pub fn value(&self) -> f64 {
        2.0 * self.m0 as f64 / self.p as f64
    }

    /// The reduced fraction `(num, den)` equal to `h`.
    pub fn as_fraction(&self) -> (u32, u32) {
        let num = 2 * self.m0 as u64;
        let den = self.p as u64;
        let g = gcd(num, den);
        ((num / g) as u32, (den / g) as u32)
    }
}

impl fmt::Display for ModIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.as_fraction();
        write!(f, "{n}/{d}")
    }
}

impl std::str::FromStr for ModIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("h", format!("expected `num/den`, got `{s}`"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: u32 = n.parse().map_err(|_| bad())?;
        let den: u32 = d.parse().map_err(|_| bad())?;
        Self::from_fraction(num, den)
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Frequency pulse family; the pulse length is always `gamma * T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// Rectangular frequency pulse (linear phase ramp), LREC.
    Rec,
    /// Raised-cosine frequency pulse, LRC.
    Rc,
}

impl std::str::FromStr for PulseShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rec" | "lrec" => Ok(PulseShape::Rec),
            "rc" | "lrc" => Ok(PulseShape::Rc),
            _ => Err(invalid("pulse", format!("unknown pulse `{s}` (expected rec or rc)"))),
        }
    }
}

/// All CPM constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpmParams {
    pub h: ModIndex,
    /// Alphabet size `M`, a power of two.
    pub m: u32,
    /// Memory length in symbols.
    pub gamma: u32,
    pub pulse: PulseShape,
    /// Symbol energy, summed over all transmit antennas.
    pub es: f64,
    /// Symbol duration.
    pub t: f64,
    /// Sample intervals per symbol slot.
    pub oversampling: usize,
}

impl CpmParams {
    /// Parameters with `E_s = 1`, `T = 1` and 64 samples per slot.
    pub fn new(h: ModIndex, m: u32, gamma: u32, pulse: PulseShape) -> Result<Self> {
        let params = Self {
            h,
            m,
            gamma,
            pulse,
            es: 1.0,
            t: 1.0,
            oversampling: 64,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_oversampling(mut self, oversampling: usize) -> Result<Self> {
        self.oversampling = oversampling;
        self.validate()?;
        Ok(self)
    }

    pub fn with_energy(mut self, es: f64) -> Result<Self> {
        self.es = es;
        self.validate()?;
        Ok(self)
    }

    pub fn with_symbol_time(mut self, t: f64) -> Result<Self> {
        self.t = t;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ModIndex::new(self.h.m0, self.h.p)?;
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(invalid("M", "M must be a power of 2"));
        }
        if self.gamma < 1 {
            return Err(invalid("gamma", "gamma must be at least 1"));
        }
        if self.oversampling < 8 {
            return Err(invalid("oversampling", "oversampling must be at least 8"));
        }
        if !(self.es.is_finite() && self.es > 0.0) {
            return Err(invalid("Es", "symbol energy must be positive"));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(invalid("T", "symbol duration must be positive"));
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.m.trailing_zeros()
    }

    /// Sample spacing `T / oversampling`.
    pub fn dt(&self) -> f64 {
        self.t / self.oversampling as f64
    }

    /// Constant envelope of one antenna when `lt` antennas share `E_s`.
    pub fn amplitude(&self, lt: usize) -> f64 {
        (self.es / (lt as f64 * self.t)).sqrt()
    }

    /// Sample times within one slot, both endpoints included.
    pub fn slot_times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.dt();
        (0..=self.oversampling).map(move |n| n as f64 * dt)
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.m, 0.0)
    }
}

/// Evaluates the phase smoothing function `q(t)` in cycles.
pub fn phase_pulse(t: f64, params: &CpmParams) -> f64 {
    let len = params.gamma as f64 * params.t;
    if t <= 0.0 {
        0.0
    } else if t >= len {
        0.5
    } else {
        let x = t / len;
        match params.pulse {
            PulseShape::Rec => 0.5 * x,
            PulseShape::Rc => 0.5 * (x - (2.0 * PI * x).sin() / (2.0 * PI)),
        }
    }
}

/// Maps a symbol index `0..M` to the alphabet value `2k - M + 1`.
pub fn index_to_symbol(index: u32, m: u32) -> i32 {
    2 * index as i32 - m as i32 + 1
}

/// Inverse of [`index_to_symbol`]; `None` for values outside the alphabet.
pub fn symbol_to_index(symbol: i32, m: u32) -> Option<u32> {
    let shifted = symbol + m as i32 - 1;
    if shifted < 0 || shifted % 2 != 0 || shifted / 2 >= m as i32 {
        None
    } else {
        Some((shifted / 2) as u32)
    }
}

/// Binary-reflected Gray code of a symbol index.
pub fn gray_encode(index: u32) -> u32 {
    index ^ (index >> 1)
}

pub fn gray_decode(mut code: u32) -> u32 {
    let mut index = code;
    while code > 0 {
        code >>= 1;
        index ^= code;
    }
    index
}

/// Maps `log2 M` bits (MSB first) to an alphabet symbol so that neighbouring
/// symbols differ in one bit.
pub fn bits_to_symbol(bits: &[u8], m: u32) -> i32 {
    let code = bits.iter().fold(0u32, |acc, &b| (acc << 1) | (b as u32 & 1));
    index_to_symbol(gray_decode(code), m)
}

pub fn symbol_to_bits(symbol: i32, m: u32, out: &mut Vec<u8>) {
    let width = m.trailing_zeros();
    let code = gray_encode(symbol_to_index(symbol, m).expect("symbol outside alphabet"));
    for b in (0..width).rev() {
        out.push(((code >> b) & 1) as u8);
    }
}

/// The set `{-M+1+offset, -M+3+offset, ..., M-1+offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    pub m: u32,
    pub offset: f64,
}

impl Alphabet {
    pub fn new(m: u32, offset: f64) -> Self {
        Self { m, offset }
    }

    pub fn symbols(&self) -> Vec<f64> {
        (0..self.m)
            .map(|k| index_to_symbol(k, self.m) as f64 + self.offset)
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let base = x - self.offset + self.m as f64 - 1.0;
        let k = (base / 2.0).round();
        (base - 2.0 * k).abs() < 1e-9 && k >= 0.0 && k < self.m as f64
    }
}

/// Phase memory of one antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    /// Phase memory in cycles, kept in `[0, 1)`.
    pub theta: f64,
    /// The `gamma - 1` most recent symbols, newest first.
    pub history: Vec<f64>,
}

impl PhaseState {
    /// Phase `theta0` with a zero-filled history.
    pub fn new(theta0: f64, gamma: u32) -> Self {
        Self {
            theta: wrap_unit(theta0),
            history: vec![0.0; gamma as usize - 1],
        }
    }

    /// Returns the state after `symbol` with phase increment `xi`.
    pub fn advance(&self, symbol: f64, xi: f64) -> Self {
        let mut history = self.history.clone();
        if !history.is_empty() {
            history.pop();
            history.insert(0, symbol);
        }
        Self {
            theta: wrap_unit(self.theta + xi),
            history,
        }
    }

    /// Current symbol followed by the history, length `gamma`.
    pub fn window(&self, symbol: f64) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.history.len() + 1);
        w.push(symbol);
        w.extend_from_slice(&self.history);
        w
    }
}

/// Reduces a phase to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed distance between two phases, in `[-1/2, 1/2)`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}

/// Uniformly sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub dt: f64,
    pub start_time: f64,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trapezoidal integral of `|s|^2`.
    pub fn energy(&self) -> f64 {
        trapezoid(self.dt, self.samples.iter().map(|s| s.norm_sqr()))
    }
}

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid<I: IntoIterator<Item = f64>>(dt: f64, values: I) -> f64 {
    let mut iter = values.into_iter();
    let Some(first) = iter.next() else {
        return 0.0;
    };
    let mut sum = 0.5 * first;
    let mut last = None;
    for v in iter {
        if let Some(prev) = last.replace(v) {
            sum += prev;
        }
    }
    match last {
        Some(end) => (sum + 0.5 * end) * dt,
        None => 0.0,
    }
}

/// Trapezoidal inner product `int a(t) conj(b(t)) dt`.
pub fn inner_product(dt: f64, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a[1..n - 1].iter().zip(&b[1..n - 1]) {
        acc += x * y.conj();
    }
    acc += 0.5 * (a[0] * b[0].conj() + a[n - 1] * b[n - 1].conj());
    acc * dt
}

/// Data part of the slot phase, `h sum_i window[i] q(tau + i T)`.
pub(crate) fn data_phase(params: &CpmParams, window: &[f64], tau: f64) -> f64 {
    let h = params.h.value();
    window
        .iter()
        .enumerate()
        .map(|(i, &d)| d * phase_pulse(tau + i as f64 * params.t, params))
        .sum::<f64>()
        * h
}

/// Phase in cycles at slot-local time `tau` for the given symbol window
/// (current symbol first) and correction `c`.
pub fn symbol_phase<C: Fn(f64) -> f64>(
    params: &CpmParams,
    state: &PhaseState,
    window: &[f64],
    correction: C,
    tau: f64,
) -> Result<f64> {
    if !(0.0..=params.t * (1.0 + 1e-12)).contains(&tau) {
        return Err(Error::OutsideSlot {
            tau,
            period: params.t,
        });
    }
    if window.len() != params.gamma as usize {
        return Err(Error::LengthMismatch {
            expected: params.gamma as usize,
            actual: window.len(),
        });
    }
    Ok(state.theta + data_phase(params, window, tau) + correction(tau))
}

/// The conventional phase increment `(h/2) d_{k-gamma+1}` for `symbol`
/// entering at `state`.
pub fn conventional_xi(params: &CpmParams, state: &PhaseState, symbol: f64) -> f64 {
    let oldest = state.history.last().copied().unwrap_or(symbol);
    0.5 * params.h.value() * oldest
}

/// Emits one slot (`oversampling + 1` samples, both endpoints) for `symbol`
/// drawn from `alphabet`, and the state advanced by `xi`.
///
/// `lt` is the number of antennas sharing the symbol energy.
#[allow(clippy::too_many_arguments)]
pub fn modulate_symbol<C: Fn(f64) -> f64>(
    params: &CpmParams,
    lt: usize,
    alphabet: &Alphabet,
    state: &PhaseState,
    symbol: f64,
    correction: C,
    xi: f64,
) -> Result<(Waveform, PhaseState)> {
    if !alphabet.contains(symbol) {
        return Err(Error::SymbolOutOfAlphabet { symbol });
    }
    let amp = params.amplitude(lt);
    let window = state.window(symbol);
    let samples = params
        .slot_times()
        .map(|tau| {
            let phi = state.theta + data_phase(params, &window, tau) + correction(tau);
            Complex64::from_polar(amp, 2.0 * PI * phi)
        })
        .collect();
    let wf = Waveform {
        samples,
        dt: params.dt(),
        start_time: 0.0,
    };
    Ok((wf, state.advance(symbol, xi)))
}

/// Conventional single-antenna CPM over a symbol sequence, returned as one
/// contiguous stream (shared slot endpoints are emitted once).
pub fn modulate_conventional(
    params: &CpmParams,
    alphabet: &Alphabet,
    theta0: f64,
    symbols: &[f64],
    lt: usize,
) -> Result<(Vec<Complex64>, PhaseState)> {
    let mut state = PhaseState::new(theta0, params.gamma);
    let mut out = Vec::with_capacity(symbols.len() * params.oversampling + 1);
    for (k, &d) in symbols.iter().enumerate() {
        let xi = conventional_xi(params, &state, d);
        let (wf, next) = modulate_symbol(params, lt, alphabet, &state, d, |_| 0.0, xi)?;
        let skip = usize::from(k > 0);
        out.extend_from_slice(&wf.samples[skip..]);
        state = next;
    }
    Ok((out, state))
}
