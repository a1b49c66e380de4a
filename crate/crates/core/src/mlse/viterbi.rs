//! Viterbi decoder with fixed-depth traceback.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cpm::{inner_product, trapezoid, wrap_unit, CpmParams};
use crate::error::{Error, Result};
use crate::stc::{encode_window, theta_offset, DataWindow, Scheme, SlotGrid, StCode};

use super::{Metric, ReceivedBlock, Trellis};

/// Upper bound on stored candidate samples for block-level trellises.
const CANDIDATE_SAMPLE_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub metric: Metric,
    /// Traceback depth in code blocks.
    pub truncation: usize,
}

impl DecoderConfig {
    /// The fastest exact receiver for the scheme: symbolwise for parallel
    /// mappings, blockwise otherwise.
    pub fn for_scheme(scheme: &Scheme) -> Self {
        let metric = if scheme.layout().is_parallel() {
            Metric::Symbolwise
        } else {
            Metric::Blockwise
        };
        Self {
            metric,
            truncation: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub blocks: usize,
    pub stages: usize,
    /// Branch metric evaluations over the whole sequence.
    pub branch_metrics: u64,
    /// Sum over stages of (branch metrics / active states).
    per_state: f64,
}

impl DecodeStats {
    /// Branch metrics evaluated per active state and code block.
    pub fn branches_per_state_block(&self) -> f64 {
        if self.blocks == 0 {
            0.0
        } else {
            self.per_state / self.blocks as f64
        }
    }

    pub fn merge(&mut self, other: &DecodeStats) {
        self.blocks += other.blocks;
        self.stages += other.stages;
        self.branch_metrics += other.branch_metrics;
        self.per_state += other.per_state;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// Decided data symbols, one per slot.
    pub symbols: Vec<i32>,
    /// Accumulated metric of the surviving path.
    pub metric: f64,
    pub stats: DecodeStats,
}

/// Per-block hypothesis waveforms at zero phase memory.
#[derive(Debug, Clone)]
struct Candidate {
    s: Vec<Vec<Complex64>>,
    gram: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone)]
enum Tables {
    Slot {
        /// Unit data waveform `u` of every `(hist, symbol)` window over one slot.
        u: Vec<Vec<Complex64>>,
        /// `exp(-j 2 pi c_m(tau))` per antenna.
        corr_conj: Vec<Vec<Complex64>>,
    },
    Block {
        /// Indexed `hist * M^Lt + combo`; empty for unreachable histories.
        cands: Vec<Option<Candidate>>,
    },
}

/// Trellis receiver for one scheme and parameter set. Construction
/// precomputes all hypothesis waveforms; [`Decoder::decode`] can then be
/// called concurrently.
#[derive(Debug, Clone)]
pub struct Decoder {
    code: StCode,
    params: CpmParams,
    config: DecoderConfig,
    trellis: Trellis,
    tables: Tables,
    drift: Vec<f64>,
}

impl Decoder {
    pub fn new(scheme: &Scheme, params: &CpmParams, config: DecoderConfig) -> Result<Self> {
        params.validate()?;
        if config.truncation == 0 {
            return Err(crate::error::invalid("truncation", "traceback depth must be at least one block"));
        }
        let code = scheme.layout().into_owned();
        let trellis = Trellis::new(params);
        let slotwise = matches!(config.metric, Metric::Symbolwise | Metric::Direct);
        if slotwise && !code.is_parallel() {
            return Err(Error::Unsupported(format!(
                "the {:?} metric needs a parallel mapping; use joint or blockwise",
                config.metric
            )));
        }
        let tables = if slotwise {
            slot_tables(&code, params, &trellis)
        } else {
            block_tables(&code, params, &trellis)?
        };
        let drift = (0..code.lt())
            .map(|m| {
                if code.is_parallel() {
                    theta_offset(&code, params, m, 1) - theta_offset(&code, params, m, 0)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            code,
            params: params.clone(),
            config,
            trellis,
            tables,
            drift,
        })
    }

    pub fn config(&self) -> DecoderConfig {
        self.config
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    fn offsets(&self, slot: usize) -> Vec<f64> {
        self.code
            .theta0()
            .iter()
            .zip(&self.drift)
            .map(|(&t0, &d)| wrap_unit(t0 + slot as f64 * d))
            .collect()
    }

    /// `w[n][m] = alpha_nm exp(j 2 pi off_m)`.
    fn weights(&self, rx: &ReceivedBlock, offs: &[f64]) -> Vec<Vec<Complex64>> {
        rx.channel
            .alpha
            .iter()
            .map(|row| {
                row.iter()
                    .zip(offs)
                    .map(|(a, &o)| a * Complex64::from_polar(1.0, 2.0 * PI * o))
                    .collect()
            })
            .collect()
    }

    fn check_block(&self, rx: &ReceivedBlock) -> Result<()> {
        let len = self.code.lt() * self.params.oversampling + 1;
        if rx.channel.lt() != self.code.lt() {
            return Err(Error::LengthMismatch {
                expected: self.code.lt(),
                actual: rx.channel.lt(),
            });
        }
        if rx.y.len() != rx.channel.lr() || rx.y.is_empty() {
            return Err(Error::LengthMismatch {
                expected: rx.channel.lr(),
                actual: rx.y.len(),
            });
        }
        match rx.y.iter().find(|y| y.len() != len) {
            Some(y) => Err(Error::LengthMismatch {
                expected: len,
                actual: y.len(),
            }),
            None => Ok(()),
        }
    }

    /// Decodes a frame that started from the initial trellis state.
    pub fn decode(&self, blocks: &[ReceivedBlock]) -> Result<Decoded> {
        for rx in blocks {
            self.check_block(rx)?;
        }
        let lt = self.code.lt();
        let slotwise = matches!(self.tables, Tables::Slot { .. });
        let (stages_per_block, syms_per_stage) = if slotwise { (lt, 1) } else { (1, lt) };
        let n_stages = blocks.len() * stages_per_block;
        let combos = (self.params.m as usize).pow(syms_per_stage as u32);
        let n_states = self.trellis.n_states();
        let depth = self.config.truncation * stages_per_block;

        // next state of every (state, combo), filled on demand
        let mut next_of = vec![usize::MAX; n_states * combos];
        let mut combo_syms = vec![0u32; syms_per_stage];

        let mut metrics = vec![f64::INFINITY; n_states];
        metrics[self.trellis.initial_state()] = 0.0;
        let mut back: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n_stages);
        let mut decided: Vec<Option<u32>> = vec![None; n_stages];
        let mut stats = DecodeStats {
            blocks: blocks.len(),
            stages: n_stages,
            ..DecodeStats::default()
        };

        for stage in 0..n_stages {
            let rx = &blocks[stage / stages_per_block];
            let r = stage % stages_per_block;
            let active: Vec<usize> = (0..n_states).filter(|&s| metrics[s].is_finite()).collect();
            let bm = self.branch_metrics(rx, stage / stages_per_block, r, &active, combos)?;

            let mut new_metrics = vec![f64::INFINITY; n_states];
            let mut bp = vec![(u32::MAX, u32::MAX); n_states];
            for (ai, &s) in active.iter().enumerate() {
                for c in 0..combos {
                    let slot = &mut next_of[s * combos + c];
                    if *slot == usize::MAX {
                        self.trellis.combo(c, syms_per_stage, &mut combo_syms);
                        *slot = self.trellis.step(s, &combo_syms);
                    }
                    let ns = *slot;
                    let cand = metrics[s] + bm[ai * combos + c];
                    if cand < new_metrics[ns] {
                        new_metrics[ns] = cand;
                        bp[ns] = (s as u32, c as u32);
                    }
                }
            }
            stats.branch_metrics += (active.len() * combos) as u64;
            stats.per_state += combos as f64;
            metrics = new_metrics;
            back.push(bp);

            if stage + 1 >= depth {
                let target = stage + 1 - depth;
                let mut s = argmin(&metrics);
                for j in (target..=stage).rev() {
                    let (prev, c) = back[j][s];
                    if j == target {
                        decided[target] = Some(c);
                    }
                    s = prev as usize;
                }
            }
        }

        let best = argmin(&metrics);
        let mut s = best;
        for j in (0..n_stages).rev() {
            let (prev, c) = back[j][s];
            if decided[j].is_none() {
                decided[j] = Some(c);
            }
            s = prev as usize;
        }

        let mut symbols = Vec::with_capacity(n_stages * syms_per_stage);
        for c in decided {
            self.trellis.combo(c.unwrap_or(0) as usize, syms_per_stage, &mut combo_syms);
            symbols.extend(combo_syms.iter().map(|&d| self.trellis.digit_value(d)));
        }
        Ok(Decoded {
            symbols,
            metric: metrics[best],
            stats,
        })
    }

    /// Branch metrics `[active index * combos + combo]` for one stage.
    fn branch_metrics(
        &self,
        rx: &ReceivedBlock,
        block: usize,
        r: usize,
        active: &[usize],
        combos: usize,
    ) -> Result<Vec<f64>> {
        let p = self.trellis.p();
        let rot: Vec<Complex64> = (0..p)
            .map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / p as f64))
            .collect();
        let lt = self.code.lt();
        let n = self.params.oversampling;
        let dt = self.params.dt();
        let mut hists: Vec<usize> = active.iter().map(|&s| self.trellis.hist(s)).collect();
        hists.sort_unstable();
        hists.dedup();
        let hist_pos = |h: usize| hists.binary_search(&h).expect("active history");

        let mut out = vec![0.0; active.len() * combos];
        match (&self.tables, self.config.metric) {
            (Tables::Slot { u, corr_conj }, metric) => {
                let slot = block * lt + r;
                let offs = self.offsets(slot);
                let w = self.weights(rx, &offs);
                let range = r * n..=(r + 1) * n;
                let amp = self.params.amplitude(lt);
                let ey: f64 = rx
                    .y
                    .iter()
                    .map(|y| trapezoid(dt, y[range.clone()].iter().map(|v| v.norm_sqr())))
                    .sum();
                if metric == Metric::Direct {
                    // beta_n(tau) = sum_m w_nm exp(j 2 pi c_m(tau))
                    let beta: Vec<Vec<Complex64>> = w
                        .iter()
                        .map(|wn| {
                            (0..=n)
                                .map(|k| wn.iter().zip(corr_conj).map(|(a, c)| a * c[k].conj()).sum())
                                .collect()
                        })
                        .collect();
                    for (ai, &s) in active.iter().enumerate() {
                        let h = self.trellis.hist(s);
                        let phase = rot[self.trellis.theta_idx(s) as usize].conj() * amp;
                        for c in 0..combos {
                            let u = &u[h * combos + c];
                            let mut total = 0.0;
                            for (y, b) in rx.y.iter().zip(&beta) {
                                total += trapezoid(
                                    dt,
                                    (0..=n).map(|k| (y[r * n + k] - phase * u[k] * b[k]).norm_sqr()),
                                );
                            }
                            out[ai * combos + c] = total;
                        }
                    }
                } else {
                    let g: Vec<Complex64> = (0..=n)
                        .map(|k| {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for (y, wn) in rx.y.iter().zip(&w) {
                                let yk = y[r * n + k];
                                for (wm, cc) in wn.iter().zip(corr_conj) {
                                    acc += wm.conj() * yk * cc[k];
                                }
                            }
                            acc
                        })
                        .collect();
                    // int |sum_m w_nm exp(j 2 pi c_m)|^2 does not depend on the data
                    // under parallel mapping, so the summed hypothesis costs
                    // no more than the per-antenna correlations
                    let energy: f64 = w
                        .iter()
                        .map(|wn| {
                            trapezoid(
                                dt,
                                (0..=n).map(|k| {
                                    wn.iter()
                                        .zip(corr_conj)
                                        .map(|(a, c)| a * c[k].conj())
                                        .sum::<Complex64>()
                                        .norm_sqr()
                                }),
                            )
                        })
                        .sum::<f64>()
                        * amp
                        * amp;
                    let corr: Vec<Vec<Complex64>> = hists
                        .iter()
                        .map(|&h| {
                            (0..combos)
                                .map(|c| amp * inner_product(dt, &g, &u[h * combos + c]))
                                .collect()
                        })
                        .collect();
                    for (ai, &s) in active.iter().enumerate() {
                        let x = &corr[hist_pos(self.trellis.hist(s))];
                        let rt = rot[self.trellis.theta_idx(s) as usize];
                        for c in 0..combos {
                            out[ai * combos + c] = ey - 2.0 * (rt * x[c]).re + energy;
                        }
                    }
                }
            }
            (Tables::Block { cands }, metric) => {
                let offs = if self.code.is_parallel() {
                    self.offsets(block * lt)
                } else {
                    self.code.theta0().to_vec()
                };
                let w = self.weights(rx, &offs);
                let ey: f64 = rx
                    .y
                    .iter()
                    .map(|y| trapezoid(dt, y.iter().map(|v| v.norm_sqr())))
                    .sum();
                let joint = metric == Metric::Joint;
                let terms: Vec<Vec<(Complex64, f64)>> = hists
                    .iter()
                    .map(|&h| {
                        (0..combos)
                            .map(|c| {
                                let cand = cands[h * combos + c].as_ref().expect("reachable history");
                                let mut x = Complex64::new(0.0, 0.0);
                                let mut q = 0.0;
                                for (y, wn) in rx.y.iter().zip(&w) {
                                    for (m, wm) in wn.iter().enumerate() {
                                        x += wm.conj() * inner_product(dt, y, &cand.s[m]);
                                        if joint {
                                            for (mp, wmp) in wn.iter().enumerate() {
                                                q += (wm * wmp.conj() * cand.gram[m][mp]).re;
                                            }
                                        } else {
                                            q += wm.norm_sqr() * cand.gram[m][m].re;
                                        }
                                    }
                                }
                                (x, q)
                            })
                            .collect()
                    })
                    .collect();
                for (ai, &s) in active.iter().enumerate() {
                    let t = &terms[hist_pos(self.trellis.hist(s))];
                    let rt = rot[self.trellis.theta_idx(s) as usize];
                    for c in 0..combos {
                        let (x, q) = t[c];
                        out[ai * combos + c] = ey - 2.0 * (rt * x).re + q;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Histories whose padding digits sit only in the oldest positions.
fn reachable_hist(trellis: &Trellis, hist: usize, m: u32) -> bool {
    let digits = trellis.hist_digits(hist);
    let pads = digits.iter().take_while(|&&d| d == m).count();
    digits[pads..].iter().all(|&d| d != m)
}

fn slot_tables(code: &StCode, params: &CpmParams, trellis: &Trellis) -> Tables {
    let m = params.m as usize;
    let h = params.h.value();
    let times: Vec<f64> = params.slot_times().collect();
    let q: Vec<Vec<f64>> = (0..params.gamma)
        .map(|i| {
            times
                .iter()
                .map(|&tau| crate::cpm::phase_pulse(tau + i as f64 * params.t, params))
                .collect()
        })
        .collect();
    let mut u = Vec::with_capacity(trellis.hist_count() * m);
    for hist in 0..trellis.hist_count() {
        let past = trellis.hist_values(hist);
        for d in 0..m {
            // current symbol first, then history newest first
            let mut window = vec![crate::cpm::index_to_symbol(d as u32, params.m)];
            window.extend(past.iter().rev());
            u.push(
                (0..times.len())
                    .map(|k| {
                        let phi: f64 = window.iter().zip(&q).map(|(&s, qi)| s as f64 * qi[k]).sum::<f64>() * h;
                        Complex64::from_polar(1.0, 2.0 * PI * phi)
                    })
                    .collect(),
            );
        }
    }
    let zeros = DataWindow {
        history: vec![0; params.gamma as usize - 1],
        block: vec![0; code.lt()],
        lookahead: None,
    };
    let corr_conj = (0..code.lt())
        .map(|mm| {
            times
                .iter()
                .map(|&tau| {
                    let c = code.correction().eval(params, code.lt(), mm, tau, &zeros);
                    Complex64::from_polar(1.0, -2.0 * PI * c)
                })
                .collect()
        })
        .collect();
    Tables::Slot { u, corr_conj }
}

fn block_tables(code: &StCode, params: &CpmParams, trellis: &Trellis) -> Result<Tables> {
    let lt = code.lt();
    let combos = (params.m as usize).pow(lt as u32);
    let total = trellis.hist_count() * combos * lt * (lt * params.oversampling + 1);
    if total > CANDIDATE_SAMPLE_LIMIT {
        return Err(Error::Unsupported(format!(
            "block trellis needs {total} stored samples; use the symbolwise metric or a smaller oversampling"
        )));
    }
    let grid = SlotGrid::new(code, params);
    let zero_theta = vec![0.0; lt];
    let mut syms = vec![0u32; lt];
    let mut cands = Vec::with_capacity(trellis.hist_count() * combos);
    for hist in 0..trellis.hist_count() {
        let reachable = reachable_hist(trellis, hist, params.m);
        for c in 0..combos {
            if !reachable {
                cands.push(None);
                continue;
            }
            trellis.combo(c, lt, &mut syms);
            let window = DataWindow {
                history: trellis.hist_values(hist),
                block: syms.iter().map(|&d| trellis.digit_value(d)).collect(),
                lookahead: None,
            };
            let enc = encode_window(code, params, &grid, &zero_theta, &window, 0)?;
            let gram = crate::stc::gram_matrix(&enc.block);
            cands.push(Some(Candidate {
                s: enc.block.waveforms.into_iter().map(|w| w.samples).collect(),
                gram,
            }));
        }
    }
    Ok(Tables::Block { cands })
}
