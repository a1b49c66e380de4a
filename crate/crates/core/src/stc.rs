//! Space-time coding of CPM: data mapping, correction phases, phase-memory
//! increments, block encoding and numerical orthogonality certification.
//!
//! Antennas and slots are 0-based. A code block `l` spans slots
//! `lt*l .. lt*l + lt`; every slot is sampled with `oversampling + 1` points
//! and consecutive slots of one antenna share their boundary sample, so an
//! antenna's block waveform has `lt * oversampling + 1` samples.
//!
//! The phase of antenna `m` in slot `r` of a block is `theta_m + shape(tau)`
//! where `shape` is the mapped data part plus the correction phase. The
//! increment `xi` between slots is `shape_r(T) - shape_{r+1}(0)`, which makes
//! every antenna's phase continuous whatever the mapping or correction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cpm::{
    data_phase, index_to_symbol, inner_product, phase_distance, phase_pulse, wrap_unit, Alphabet,
    CpmParams, PhaseState, Waveform,
};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingScheme {
    /// Antenna 2 sends the negated symbol pattern of antenna 1's other slot.
    Crosswise,
    /// Each antenna repeats one pattern in both slots of a block.
    Repetitive,
    /// All antennas send the same symbols in the same slots.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionFamily {
    /// No correction on any antenna.
    None,
    /// Data-dependent correction on antenna 2 of the crosswise two-antenna code.
    WangXia,
    /// Two antennas, linear ramp from 0 to 1/2 per slot on antenna 2.
    Pc2Generic,
    /// Three antennas, linear ramps of +-1/3 per slot on antennas 1 and 3.
    LinPc,
    /// Three antennas, raised-cosine ramps of +-1/3 per slot.
    RcPc,
    /// CPM-shaped correction, equivalent to a shifted alphabet (two or three antennas).
    OffPc,
    /// `Pc2Generic` with antenna 2's correction scaled by 0.9; never orthogonal.
    Corrupted,
}

impl CorrectionFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CorrectionFamily::None => "none",
            CorrectionFamily::WangXia => "wang-xia",
            CorrectionFamily::Pc2Generic => "pc2",
            CorrectionFamily::LinPc => "linpc",
            CorrectionFamily::RcPc => "rcpc",
            CorrectionFamily::OffPc => "offpc",
            CorrectionFamily::Corrupted => "corrupted",
        }
    }

    pub fn supports(&self, lt: usize) -> bool {
        match self {
            CorrectionFamily::None => true,
            CorrectionFamily::WangXia | CorrectionFamily::Pc2Generic | CorrectionFamily::Corrupted => {
                lt == 2
            }
            CorrectionFamily::LinPc | CorrectionFamily::RcPc => lt == 3,
            CorrectionFamily::OffPc => lt == 2 || lt == 3,
        }
    }

    pub fn is_data_dependent(&self) -> bool {
        matches!(self, CorrectionFamily::WangXia)
    }

    /// Correction phase of antenna `m` at slot-local time `tau`. The same
    /// function repeats in every slot.
    pub(crate) fn eval(&self, params: &CpmParams, lt: usize, m: usize, tau: f64, w: &DataWindow) -> f64 {
        let t = params.t;
        let cpm_sum = || {
            (0..params.gamma)
                .map(|i| phase_pulse(tau + i as f64 * t, params))
                .sum::<f64>()
        };
        match (self, lt, m) {
            (CorrectionFamily::Pc2Generic, 2, 1) => tau / (2.0 * t),
            (CorrectionFamily::Corrupted, 2, 1) => 0.9 * tau / (2.0 * t),
            (CorrectionFamily::LinPc, 3, 0) => tau / (3.0 * t),
            (CorrectionFamily::LinPc, 3, 2) => -tau / (3.0 * t),
            (CorrectionFamily::RcPc, 3, 0 | 2) => {
                let x = tau / t;
                let v = (x - (2.0 * PI * x).sin() / (2.0 * PI)) / 3.0;
                if m == 0 {
                    v
                } else {
                    -v
                }
            }
            (CorrectionFamily::OffPc, 2, 1) => cpm_sum(),
            (CorrectionFamily::OffPc, 3, 0) => 2.0 / 3.0 * cpm_sum(),
            (CorrectionFamily::OffPc, 3, 2) => -2.0 / 3.0 * cpm_sum(),
            (CorrectionFamily::WangXia, 2, 1) => {
                let h = params.h.value();
                (0..params.gamma as isize)
                    .map(|i| {
                        let pair = (w.sym(-i) + w.sym(1 - i)) as f64;
                        (h * pair + 1.0) * phase_pulse(tau + i as f64 * t, params)
                    })
                    .sum()
            }
            _ => 0.0,
        }
    }
}

impl std::str::FromStr for CorrectionFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "none" => CorrectionFamily::None,
            "wang-xia" | "wangxia" => CorrectionFamily::WangXia,
            "pc2" | "pc2-generic" => CorrectionFamily::Pc2Generic,
            "linpc" => CorrectionFamily::LinPc,
            "rcpc" => CorrectionFamily::RcPc,
            "offpc" => CorrectionFamily::OffPc,
            "corrupted" | "corrupted-demo" => CorrectionFamily::Corrupted,
            _ => return Err(invalid("code", format!("unknown correction family `{s}`"))),
        })
    }
}

/// Code identity: antenna count, mapping, correction family and initial phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StCode {
    lt: usize,
    mapping: MappingScheme,
    correction: CorrectionFamily,
    theta0: Vec<f64>,
}

impl StCode {
    /// Validates the combination. Only the named codes are accepted: the
    /// crosswise Wang-Xia code and the parallel-mapped families.
    pub fn new(
        lt: usize,
        mapping: MappingScheme,
        correction: CorrectionFamily,
        theta0: Vec<f64>,
    ) -> Result<Self> {
        if !(2..=3).contains(&lt) {
            return Err(invalid("Lt", "the number of transmit antennas must be 2 or 3"));
        }
        if theta0.len() != lt {
            return Err(invalid("theta0", format!("expected {lt} initial phases, got {}", theta0.len())));
        }
        if theta0.iter().any(|t| !t.is_finite()) {
            return Err(invalid("theta0", "initial phases must be finite"));
        }
        if !correction.supports(lt) {
            return Err(Error::FamilyMismatch {
                family: correction.name(),
                lt,
            });
        }
        let expected = match correction {
            CorrectionFamily::WangXia => MappingScheme::Crosswise,
            _ => MappingScheme::Parallel,
        };
        if mapping != expected {
            return Err(Error::Unsupported(format!(
                "{:?} mapping is not wired to the {} correction family",
                mapping,
                correction.name()
            )));
        }
        Ok(Self {
            lt,
            mapping,
            correction,
            theta0: theta0.into_iter().map(wrap_unit).collect(),
        })
    }

    /// Named code with zero initial phases.
    pub fn family(lt: usize, correction: CorrectionFamily) -> Result<Self> {
        let mapping = if correction == CorrectionFamily::WangXia {
            MappingScheme::Crosswise
        } else {
            MappingScheme::Parallel
        };
        Self::new(lt, mapping, correction, vec![0.0; lt])
    }

    pub fn with_theta0(self, theta0: Vec<f64>) -> Result<Self> {
        Self::new(self.lt, self.mapping, self.correction, theta0)
    }

    /// Single-antenna conventional CPM, used as the reference system.
    pub(crate) fn reference() -> Self {
        Self {
            lt: 1,
            mapping: MappingScheme::Parallel,
            correction: CorrectionFamily::None,
            theta0: vec![0.0],
        }
    }

    pub fn lt(&self) -> usize {
        self.lt
    }

    pub fn mapping(&self) -> MappingScheme {
        self.mapping
    }

    pub fn correction(&self) -> CorrectionFamily {
        self.correction
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn is_parallel(&self) -> bool {
        self.mapping == MappingScheme::Parallel
    }

    /// Initial per-antenna phase states.
    pub fn initial_states(&self, params: &CpmParams) -> Vec<PhaseState> {
        self.theta0
            .iter()
            .map(|&t| PhaseState::new(t, params.gamma))
            .collect()
    }
}

/// A transmitter: either a space-time code or the single-antenna reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Reference,
    Coded(StCode),
}

impl Scheme {
    pub(crate) fn layout(&self) -> std::borrow::Cow<'_, StCode> {
        match self {
            Scheme::Reference => std::borrow::Cow::Owned(StCode::reference()),
            Scheme::Coded(c) => std::borrow::Cow::Borrowed(c),
        }
    }

    pub fn lt(&self) -> usize {
        match self {
            Scheme::Reference => 1,
            Scheme::Coded(c) => c.lt,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Scheme::Reference => "reference".into(),
            Scheme::Coded(c) => format!("{}x{}", c.correction.name(), c.lt),
        }
    }
}

impl From<StCode> for Scheme {
    fn from(c: StCode) -> Self {
        Scheme::Coded(c)
    }
}

/// The symbols a block can see: `gamma - 1` symbols of history, the block's
/// own `lt` symbols and, when known, the next block's symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct DataWindow {
    /// Oldest first.
    pub history: Vec<i32>,
    pub block: Vec<i32>,
    pub lookahead: Option<Vec<i32>>,
}

impl DataWindow {
    /// Window of block `l` in a stream; indices before the stream start read
    /// as zero.
    pub fn from_stream(d: &[i32], l: usize, lt: usize, gamma: u32) -> Result<Self> {
        let start = lt * l;
        if d.len() < start + lt {
            return Err(Error::DataExhausted {
                block: l,
                needed: start + lt,
                available: d.len(),
            });
        }
        let hist_len = gamma as usize - 1;
        let history = (0..hist_len)
            .map(|j| {
                let idx = start as isize - hist_len as isize + j as isize;
                if idx < 0 {
                    0
                } else {
                    d[idx as usize]
                }
            })
            .collect();
        let lookahead = (d.len() >= start + 2 * lt).then(|| d[start + lt..start + 2 * lt].to_vec());
        Ok(Self {
            history,
            block: d[start..start + lt].to_vec(),
            lookahead,
        })
    }

    /// Symbol at offset `j` from the block start (negative = history).
    pub fn sym(&self, j: isize) -> i32 {
        let lt = self.block.len() as isize;
        if j < 0 {
            let idx = self.history.len() as isize + j;
            if idx < 0 {
                0
            } else {
                self.history[idx as usize]
            }
        } else if j < lt {
            self.block[j as usize]
        } else {
            self.lookahead
                .as_ref()
                .and_then(|la| la.get((j - lt) as usize).copied())
                .unwrap_or(0)
        }
    }

    /// Window of the following block (its own lookahead unknown).
    pub fn next(&self) -> Self {
        let lt = self.block.len();
        let mut all = self.history.clone();
        all.extend_from_slice(&self.block);
        let history = all[all.len() - self.history.len()..].to_vec();
        Self {
            history,
            block: self.lookahead.clone().unwrap_or_else(|| vec![0; lt]),
            lookahead: None,
        }
    }
}

/// `symbols[m][r][i]`: symbol at memory lag `i` in slot `r` of antenna `m`.
pub type SymbolMatrix = Vec<Vec<Vec<i32>>>;

pub fn map_window(scheme: MappingScheme, w: &DataWindow, lt: usize, gamma: u32) -> Result<SymbolMatrix> {
    if scheme != MappingScheme::Parallel && lt != 2 {
        return Err(Error::FamilyMismatch {
            family: match scheme {
                MappingScheme::Crosswise => "crosswise mapping",
                _ => "repetitive mapping",
            },
            lt,
        });
    }
    let g = gamma as isize;
    let lags = |base: isize, sign: i32| -> Vec<i32> { (0..g).map(|i| sign * w.sym(base - i)).collect() };
    Ok((0..lt)
        .map(|m| {
            (0..lt)
                .map(|r| {
                    let r = r as isize;
                    match scheme {
                        MappingScheme::Parallel => lags(r, 1),
                        MappingScheme::Crosswise if m == 0 => lags(r, 1),
                        MappingScheme::Crosswise => lags(1 - r, -1),
                        MappingScheme::Repetitive => lags(m as isize, 1),
                    }
                })
                .collect()
        })
        .collect())
}

/// Symbol matrix of block `l` of stream `d`.
pub fn map_data(scheme: MappingScheme, d: &[i32], l: usize, lt: usize, gamma: u32) -> Result<SymbolMatrix> {
    map_window(scheme, &DataWindow::from_stream(d, l, lt, gamma)?, lt, gamma)
}

/// Correction phase of antenna `m` in slot `r` at slot-local time `tau`.
/// The Wang-Xia family reads the block's data from `window`.
pub fn correction_value(
    family: CorrectionFamily,
    params: &CpmParams,
    lt: usize,
    m: usize,
    r: usize,
    tau: f64,
    window: Option<&DataWindow>,
) -> Result<f64> {
    if !family.supports(lt) {
        return Err(Error::FamilyMismatch {
            family: family.name(),
            lt,
        });
    }
    if m >= lt || r >= lt {
        return Err(invalid("antenna", format!("antenna {m} / slot {r} out of range for Lt={lt}")));
    }
    if !(0.0..=params.t * (1.0 + 1e-12)).contains(&tau) {
        return Err(Error::OutsideSlot { tau, period: params.t });
    }
    let zeros;
    let w = match window {
        Some(w) => w,
        None if family.is_data_dependent() => {
            return Err(Error::Unsupported(
                "the Wang-Xia correction needs the block's data window".into(),
            ))
        }
        None => {
            zeros = DataWindow {
                history: vec![0; params.gamma as usize - 1],
                block: vec![0; lt],
                lookahead: None,
            };
            &zeros
        }
    };
    Ok(family.eval(params, lt, m, tau, w))
}

/// Evaluates slot shapes (data phase plus correction) for one block.
struct BlockShapes<'a> {
    code: &'a StCode,
    params: &'a CpmParams,
    window: &'a DataWindow,
    symbols: Vec<Vec<Vec<f64>>>,
}

impl<'a> BlockShapes<'a> {
    fn new(code: &'a StCode, params: &'a CpmParams, window: &'a DataWindow) -> Result<Self> {
        let symbols = map_window(code.mapping, window, code.lt, params.gamma)?
            .into_iter()
            .map(|ant| {
                ant.into_iter()
                    .map(|slot| slot.into_iter().map(f64::from).collect())
                    .collect()
            })
            .collect();
        Ok(Self {
            code,
            params,
            window,
            symbols,
        })
    }

    fn shape(&self, m: usize, r: usize, tau: f64) -> f64 {
        data_phase(self.params, &self.symbols[m][r], tau)
            + self.code.correction.eval(self.params, self.code.lt, m, tau, self.window)
    }
}

/// Phase-memory increment of antenna `m` across the boundary that ends slot
/// `r` of the block described by `window`.
///
/// For the last slot the next block's first-slot phase is needed. None of
/// the implemented codes lets that start phase depend on the next block's
/// symbols, so an unknown lookahead may be left out.
pub fn xi_value(code: &StCode, params: &CpmParams, m: usize, r: usize, window: &DataWindow) -> Result<f64> {
    if m >= code.lt || r >= code.lt {
        return Err(invalid("antenna", "antenna or slot out of range"));
    }
    let cur = BlockShapes::new(code, params, window)?;
    let end = cur.shape(m, r, params.t);
    let start_next = if r + 1 < code.lt {
        cur.shape(m, r + 1, 0.0)
    } else {
        let next_window = window.next();
        BlockShapes::new(code, params, &next_window)?.shape(m, 0, 0.0)
    };
    Ok(end - start_next)
}

/// Sampled block: one waveform per antenna covering all `lt` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBlock {
    pub index: usize,
    pub waveforms: Vec<Waveform>,
}

impl SignalBlock {
    pub fn lt(&self) -> usize {
        self.waveforms.len()
    }

    pub fn dt(&self) -> f64 {
        self.waveforms[0].dt
    }

    pub fn samples_per_antenna(&self) -> usize {
        self.waveforms[0].samples.len()
    }
}

/// Block output together with phase bookkeeping for continuity checks.
#[derive(Debug, Clone)]
pub(crate) struct EncodedBlock {
    pub block: SignalBlock,
    pub thetas: Vec<f64>,
    /// `(phase at slot start, phase at slot end)` per antenna and slot.
    pub boundaries: Vec<Vec<(f64, f64)>>,
}

/// Pulse and correction values on the slot sample grid.
#[derive(Debug, Clone)]
pub(crate) struct SlotGrid {
    /// `q[i][n] = q(n dt + i T)`.
    q: Vec<Vec<f64>>,
    /// Data-independent correction `corr[m][n]`; empty for Wang-Xia.
    corr: Vec<Vec<f64>>,
}

impl SlotGrid {
    pub(crate) fn new(code: &StCode, params: &CpmParams) -> Self {
        let times: Vec<f64> = params.slot_times().collect();
        let q = (0..params.gamma)
            .map(|i| {
                times
                    .iter()
                    .map(|&tau| phase_pulse(tau + i as f64 * params.t, params))
                    .collect()
            })
            .collect();
        let corr = if code.correction.is_data_dependent() {
            Vec::new()
        } else {
            let zeros = DataWindow {
                history: vec![0; params.gamma as usize - 1],
                block: vec![0; code.lt],
                lookahead: None,
            };
            (0..code.lt)
                .map(|m| {
                    times
                        .iter()
                        .map(|&tau| code.correction.eval(params, code.lt, m, tau, &zeros))
                        .collect()
                })
                .collect()
        };
        Self { q, corr }
    }

    fn shape(&self, shapes: &BlockShapes<'_>, m: usize, r: usize, n: usize) -> f64 {
        let h = shapes.params.h.value();
        let data: f64 = shapes.symbols[m][r]
            .iter()
            .zip(&self.q)
            .map(|(&d, q)| d * q[n])
            .sum();
        let corr = if self.corr.is_empty() {
            if shapes.code.lt == 2 && m == 1 {
                let w = shapes.window;
                self.q
                    .iter()
                    .enumerate()
                    .map(|(i, q)| {
                        let i = i as isize;
                        (h * (w.sym(-i) + w.sym(1 - i)) as f64 + 1.0) * q[n]
                    })
                    .sum()
            } else {
                0.0
            }
        } else {
            self.corr[m][n]
        };
        h * data + corr
    }
}

pub(crate) fn encode_window(
    code: &StCode,
    params: &CpmParams,
    grid: &SlotGrid,
    thetas: &[f64],
    window: &DataWindow,
    block_index: usize,
) -> Result<EncodedBlock> {
    let lt = code.lt;
    let n = params.oversampling;
    let amp = params.amplitude(lt);
    let shapes = BlockShapes::new(code, params, window)?;
    let next_window = window.next();
    let next_shapes = BlockShapes::new(code, params, &next_window)?;

    let mut waveforms = Vec::with_capacity(lt);
    let mut new_thetas = Vec::with_capacity(lt);
    let mut boundaries = Vec::with_capacity(lt);
    for m in 0..lt {
        let mut theta = thetas[m];
        let mut samples = Vec::with_capacity(lt * n + 1);
        let mut bounds = Vec::with_capacity(lt);
        for r in 0..lt {
            let first = usize::from(r > 0);
            for k in first..=n {
                let phi = theta + grid.shape(&shapes, m, r, k);
                samples.push(Complex64::from_polar(amp, 2.0 * PI * phi));
            }
            let end = grid.shape(&shapes, m, r, n);
            bounds.push((theta + grid.shape(&shapes, m, r, 0), theta + end));
            let start_next = if r + 1 < lt {
                grid.shape(&shapes, m, r + 1, 0)
            } else {
                grid.shape(&next_shapes, m, 0, 0)
            };
            theta = wrap_unit(theta + end - start_next);
        }
        waveforms.push(Waveform {
            samples,
            dt: params.dt(),
            start_time: (block_index * lt) as f64 * params.t,
        });
        new_thetas.push(theta);
        boundaries.push(bounds);
    }
    Ok(EncodedBlock {
        block: SignalBlock {
            index: block_index,
            waveforms,
        },
        thetas: new_thetas,
        boundaries,
    })
}

fn check_block_symbols(params: &CpmParams, symbols: &[i32]) -> Result<()> {
    let alphabet = params.alphabet();
    match symbols.iter().find(|&&d| !alphabet.contains(d as f64)) {
        Some(&d) => Err(Error::SymbolOutOfAlphabet { symbol: d as f64 }),
        None => Ok(()),
    }
}

fn advance_history(history: &[f64], block: &[i32]) -> Vec<f64> {
    // newest first
    let mut all: Vec<f64> = block.iter().rev().map(|&d| d as f64).collect();
    all.extend_from_slice(history);
    all.truncate(history.len());
    all
}

/// Encodes block `l` of stream `d` from the per-antenna `states`.
pub fn encode_block(
    code: &StCode,
    params: &CpmParams,
    states: &[PhaseState],
    d: &[i32],
    l: usize,
) -> Result<(SignalBlock, Vec<PhaseState>)> {
    if !(2..=3).contains(&code.lt) {
        return Err(invalid("Lt", "the number of transmit antennas must be 2 or 3"));
    }
    if states.len() != code.lt {
        return Err(Error::LengthMismatch {
            expected: code.lt,
            actual: states.len(),
        });
    }
    let window = DataWindow::from_stream(d, l, code.lt, params.gamma)?;
    check_block_symbols(params, &window.block)?;
    let thetas: Vec<f64> = states.iter().map(|s| s.theta).collect();
    let grid = SlotGrid::new(code, params);
    let enc = encode_window(code, params, &grid, &thetas, &window, l)?;
    let next = states
        .iter()
        .zip(&enc.thetas)
        .map(|(s, &theta)| PhaseState {
            theta,
            history: advance_history(&s.history, &window.block),
        })
        .collect();
    Ok((enc.block, next))
}

/// Streaming encoder for a [`Scheme`]; one call per code block.
#[derive(Debug, Clone)]
pub struct Encoder {
    code: StCode,
    params: CpmParams,
    thetas: Vec<f64>,
    history: Vec<i32>,
    block: usize,
    grid: SlotGrid,
}

impl Encoder {
    pub fn new(scheme: &Scheme, params: &CpmParams) -> Self {
        let code = scheme.layout().into_owned();
        Self {
            grid: SlotGrid::new(&code, params),
            thetas: code.theta0.clone(),
            history: vec![0; params.gamma as usize - 1],
            block: 0,
            params: params.clone(),
            code,
        }
    }

    pub fn lt(&self) -> usize {
        self.code.lt
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Encodes the next block. `lookahead` is the following block's data, if known.
    pub fn push_block(&mut self, symbols: &[i32], lookahead: Option<&[i32]>) -> Result<SignalBlock> {
        Ok(self.push_block_detailed(symbols, lookahead)?.block)
    }

    pub(crate) fn push_block_detailed(
        &mut self,
        symbols: &[i32],
        lookahead: Option<&[i32]>,
    ) -> Result<EncodedBlock> {
        if symbols.len() != self.code.lt {
            return Err(Error::LengthMismatch {
                expected: self.code.lt,
                actual: symbols.len(),
            });
        }
        check_block_symbols(&self.params, symbols)?;
        let window = DataWindow {
            history: self.history.clone(),
            block: symbols.to_vec(),
            lookahead: lookahead.map(<[i32]>::to_vec),
        };
        let enc = encode_window(&self.code, &self.params, &self.grid, &self.thetas, &window, self.block)?;
        self.thetas.clone_from(&enc.thetas);
        self.history = window.next().history;
        self.block += 1;
        Ok(enc)
    }

    /// Encodes a whole stream (length a multiple of `lt`).
    pub fn encode_stream(&mut self, d: &[i32]) -> Result<Vec<SignalBlock>> {
        let lt = self.code.lt;
        if !d.len().is_multiple_of(lt) {
            return Err(Error::LengthMismatch {
                expected: d.len().div_ceil(lt) * lt,
                actual: d.len(),
            });
        }
        let blocks: Vec<&[i32]> = d.chunks(lt).collect();
        (0..blocks.len())
            .map(|l| self.push_block(blocks[l], blocks.get(l + 1).copied()))
            .collect()
    }
}

/// Joins block waveforms of one antenna into a contiguous stream; the
/// duplicated boundary sample between blocks is emitted once.
pub fn antenna_stream(blocks: &[SignalBlock], antenna: usize) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let s = &b.waveforms[antenna].samples;
        out.extend_from_slice(if i == 0 { s } else { &s[1..] });
    }
    out
}

/// Phase offset of antenna `m` relative to conventional CPM started at
/// phase 0, at the start of `slot`. For parallel codes this is
/// `theta0 + slot * (c(T) - c(0))`; for the crosswise code it is only
/// defined at block starts, where it equals `theta0`.
pub(crate) fn theta_offset(code: &StCode, params: &CpmParams, m: usize, slot: usize) -> f64 {
    match code.mapping {
        MappingScheme::Parallel => {
            let zeros = DataWindow {
                history: vec![0; params.gamma as usize - 1],
                block: vec![0; code.lt],
                lookahead: None,
            };
            let drift = code.correction.eval(params, code.lt, m, params.t, &zeros)
                - code.correction.eval(params, code.lt, m, 0.0, &zeros);
            wrap_unit(code.theta0[m] + slot as f64 * drift)
        }
        _ => {
            debug_assert_eq!(slot % code.lt, 0, "crosswise offsets exist at block starts only");
            code.theta0[m]
        }
    }
}

/// `G[m][m'] = int s_m conj(s_m') dt` over the block.
pub fn gram_matrix(block: &SignalBlock) -> Vec<Vec<Complex64>> {
    let dt = block.dt();
    block
        .waveforms
        .iter()
        .map(|a| {
            block
                .waveforms
                .iter()
                .map(|b| inner_product(dt, &a.samples, &b.samples))
                .collect()
        })
        .collect()
}

/// Shifted alphabet realised by an offset-correction antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAlphabet {
    pub base: Alphabet,
    pub offset: f64,
}

impl EffectiveAlphabet {
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.base.m, self.offset)
    }
}

pub fn effective_alphabet(code: &StCode, params: &CpmParams, m: usize) -> Result<EffectiveAlphabet> {
    if code.correction != CorrectionFamily::OffPc {
        return Err(Error::Unsupported(format!(
            "{} is not an offset-alphabet family",
            code.correction.name()
        )));
    }
    if m >= code.lt {
        return Err(invalid("antenna", format!("antenna {m} out of range")));
    }
    let h = params.h.value();
    let offset = match (code.lt, m) {
        (2, 1) => 1.0 / h,
        (3, 0) => 2.0 / (3.0 * h),
        (3, 2) => -2.0 / (3.0 * h),
        _ => 0.0,
    };
    Ok(EffectiveAlphabet {
        base: params.alphabet(),
        offset,
    })
}

/// Maxima of the orthogonality and continuity defects over random blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub blocks_checked: usize,
    pub boundaries_checked: usize,
    /// `max |G[m][m']| / E_s` for `m != m'`.
    pub max_offdiag_ratio: f64,
    /// `max |G[m][m] / E_s - 1|`.
    pub max_diag_deviation: f64,
    /// Largest phase jump at a slot boundary, in cycles.
    pub max_continuity_jump: f64,
}

impl VerifyReport {
    pub fn orthogonal(&self, tol: f64) -> bool {
        self.max_offdiag_ratio < tol && self.max_diag_deviation <= tol
    }

    pub fn continuous(&self, tol: f64) -> bool {
        self.max_continuity_jump < tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub blocks_per_trial: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 50,
            blocks_per_trial: 4,
            seed: 0,
        }
    }
}

/// Certifies a code on `trials` random data streams.
pub fn verify_code(code: &StCode, params: &CpmParams, trials: usize, seed: u64) -> Result<VerifyReport> {
    verify_code_with(
        code,
        params,
        &VerifyOptions {
            trials,
            seed,
            ..VerifyOptions::default()
        },
        Execution::default(),
    )
}

pub fn verify_code_with(
    code: &StCode,
    params: &CpmParams,
    opts: &VerifyOptions,
    exec: Execution,
) -> Result<VerifyReport> {
    if opts.trials == 0 || opts.blocks_per_trial == 0 {
        return Err(invalid("trials", "at least one trial with one block is required"));
    }
    let scheme = Scheme::Coded(code.clone());
    let per_trial = exec.map(opts.trials, |trial| -> Result<(f64, f64, f64, usize)> {
        let mut rng = seed::rng_for(opts.seed, &[seed::stream::DATA, trial as u64]);
        let d: Vec<i32> = (0..opts.blocks_per_trial * code.lt)
            .map(|_| index_to_symbol(rng.random_range(0..params.m), params.m))
            .collect();
        let mut enc = Encoder::new(&scheme, params);
        let blocks: Vec<&[i32]> = d.chunks(code.lt).collect();
        let (mut off, mut diag, mut jump) = (0.0f64, 0.0f64, 0.0f64);
        let mut boundaries = 0;
        let mut prev_end: Vec<Option<f64>> = vec![None; code.lt];
        for l in 0..blocks.len() {
            let e = enc.push_block_detailed(blocks[l], blocks.get(l + 1).copied())?;
            let g = gram_matrix(&e.block);
            for (m, row) in g.iter().enumerate() {
                for (mp, v) in row.iter().enumerate() {
                    if m == mp {
                        diag = diag.max((v.re / params.es - 1.0).abs().max(v.im.abs() / params.es));
                    } else {
                        off = off.max(v.norm() / params.es);
                    }
                }
            }
            for (m, bounds) in e.boundaries.iter().enumerate() {
                for &(start, end) in bounds {
                    if let Some(p) = prev_end[m] {
                        jump = jump.max(phase_distance(start, p).abs());
                        boundaries += 1;
                    }
                    prev_end[m] = Some(end);
                }
            }
        }
        Ok((off, diag, jump, boundaries))
    });
    let mut report = VerifyReport {
        trials: opts.trials,
        blocks_checked: opts.trials * opts.blocks_per_trial,
        boundaries_checked: 0,
        max_offdiag_ratio: 0.0,
        max_diag_deviation: 0.0,
        max_continuity_jump: 0.0,
    };
    for r in per_trial {
        let (off, diag, jump, boundaries) = r?;
        report.max_offdiag_ratio = report.max_offdiag_ratio.max(off);
        report.max_diag_deviation = report.max_diag_deviation.max(diag);
        report.max_continuity_jump = report.max_continuity_jump.max(jump);
        report.boundaries_checked += boundaries;
    }
    Ok(report)
}
