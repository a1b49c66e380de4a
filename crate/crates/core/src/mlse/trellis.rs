//! Trellis of conventional CPM seen from the receiver.
//!
//! A state is the conventional phase memory `theta = idx / p` together with
//! the `gamma - 1` most recent symbols. History digits run `0..=M`, where `M`
//! marks a padding position before the first transmitted symbol; those
//! states only occur while the trellis fills up. In steady state there are
//! `p * M^(gamma - 1)` reachable states.

use crate::cpm::{index_to_symbol, CpmParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    p: u32,
    m0: u32,
    m: u32,
    hist_len: usize,
    radix: usize,
    hist_count: usize,
}

impl Trellis {
    pub fn new(params: &CpmParams) -> Self {
        let hist_len = params.gamma as usize - 1;
        let radix = params.m as usize + 1;
        Self {
            p: params.h.p(),
            m0: params.h.m0(),
            m: params.m,
            hist_len,
            radix,
            hist_count: radix.pow(hist_len as u32),
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Size of the state index space, padding states included.
    pub fn n_states(&self) -> usize {
        self.p as usize * self.hist_count
    }

    pub fn hist_count(&self) -> usize {
        self.hist_count
    }

    /// States reachable once the padding has been flushed.
    pub fn steady_state_count(&self) -> usize {
        self.p as usize * (self.m as usize).pow(self.hist_len as u32)
    }

    pub fn initial_state(&self) -> usize {
        self.state(0, self.pad_hist())
    }

    fn pad_hist(&self) -> usize {
        (0..self.hist_len).map(|j| self.m as usize * self.radix.pow(j as u32)).sum()
    }

    pub fn state(&self, theta_idx: u32, hist: usize) -> usize {
        hist * self.p as usize + theta_idx as usize
    }

    pub fn theta_idx(&self, state: usize) -> u32 {
        (state % self.p as usize) as u32
    }

    pub fn hist(&self, state: usize) -> usize {
        state / self.p as usize
    }

    /// History digits of a history code, oldest first.
    pub fn hist_digits(&self, hist: usize) -> Vec<u32> {
        let mut h = hist;
        (0..self.hist_len)
            .map(|_| {
                let d = (h % self.radix) as u32;
                h /= self.radix;
                d
            })
            .collect()
    }

    fn hist_code(&self, digits: &[u32]) -> usize {
        digits
            .iter()
            .enumerate()
            .map(|(j, &d)| d as usize * self.radix.pow(j as u32))
            .sum()
    }

    /// Symbol value of a digit; the padding digit reads as 0.
    pub fn digit_value(&self, digit: u32) -> i32 {
        if digit == self.m {
            0
        } else {
            index_to_symbol(digit, self.m)
        }
    }

    /// History symbol values, oldest first.
    pub fn hist_values(&self, hist: usize) -> Vec<i32> {
        self.hist_digits(hist).into_iter().map(|d| self.digit_value(d)).collect()
    }

    /// Next state after the symbol indices `syms` (oldest first).
    pub fn step(&self, state: usize, syms: &[u32]) -> usize {
        let mut full = self.hist_digits(self.hist(state));
        full.extend_from_slice(syms);
        let dtheta: i64 = (0..syms.len())
            .map(|r| self.m0 as i64 * self.digit_value(full[r]) as i64)
            .sum();
        let theta = (self.theta_idx(state) as i64 + dtheta).rem_euclid(self.p as i64) as u32;
        let hist = self.hist_code(&full[full.len() - self.hist_len..]);
        self.state(theta, hist)
    }

    /// Decodes a combination index into `len` symbol indices, most
    /// significant first, so increasing indices are lexicographic.
    pub fn combo(&self, mut index: usize, len: usize, out: &mut [u32]) {
        for slot in out[..len].iter_mut().rev() {
            *slot = (index % self.m as usize) as u32;
            index /= self.m as usize;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpm::{conventional_xi, ModIndex, PhaseState, PulseShape};

    #[test]
    fn steady_state_counts() {
        let p = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 4, 2, PulseShape::Rec).unwrap();
        let t = Trellis::new(&p);
        assert_eq!(t.steady_state_count(), 16);
        assert_eq!(t.n_states(), 20);
        let p = CpmParams::new(ModIndex::from_fraction(2, 3).unwrap(), 8, 1, PulseShape::Rec).unwrap();
        assert_eq!(Trellis::new(&p).steady_state_count(), 3);
    }

    #[test]
    fn transitions_follow_the_modulator() {
        let p = CpmParams::new(ModIndex::from_fraction(2, 3).unwrap(), 4, 3, PulseShape::Rc).unwrap();
        let t = Trellis::new(&p);
        let mut s = t.initial_state();
        let mut ps = PhaseState::new(0.0, 3);
        for (k, idx) in [3u32, 0, 1, 2, 2, 0, 3, 1].into_iter().enumerate() {
            let d = index_to_symbol(idx, 4) as f64;
            ps = ps.advance(d, conventional_xi(&p, &ps, d));
            s = t.step(s, &[idx]);
            let theta = t.theta_idx(s) as f64 / t.p() as f64;
            assert!((crate::cpm::phase_distance(theta, ps.theta)).abs() < 1e-12, "slot {k}");
            let hist: Vec<f64> = t.hist_values(t.hist(s)).iter().rev().map(|&v| v as f64).collect();
            assert_eq!(hist, ps.history);
        }
        // two symbols at once equal two single steps
        let a = t.step(t.step(s, &[1]), &[2]);
        assert_eq!(a, t.step(s, &[1, 2]));
    }

    #[test]
    fn combos_are_lexicographic() {
        let p = CpmParams::new(ModIndex::from_fraction(1, 2).unwrap(), 4, 1, PulseShape::Rec).unwrap();
        let t = Trellis::new(&p);
        let mut out = [0u32; 2];
        t.combo(6, 2, &mut out);
        assert_eq!(out, [1, 2]);
    }
}
