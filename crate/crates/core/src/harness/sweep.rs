//! BER as a function of the initial antenna phases.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::mlse::Decoder;
use crate::stc::Scheme;

use super::{run_point, BerPoint, SimConfig};

/// BER over a `G x G` grid of `(theta1(0), theta2(0))` with `theta3(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepGrid {
    /// Grid values in cycles, `k / G`.
    pub theta: Vec<f64>,
    pub ebn0_db: f64,
    /// `cells[i][j]` at `theta1 = theta[i]`, `theta2 = theta[j]`.
    pub cells: Vec<Vec<BerPoint>>,
    pub seed: u64,
}

impl PhaseSweepGrid {
    pub fn ber(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].ber
    }

    /// Cell with the lowest BER; the first in row-major order on ties.
    pub fn argmin(&self) -> (usize, usize) {
        self.extreme(|a, b| a < b)
    }

    pub fn argmax(&self) -> (usize, usize) {
        self.extreme(|a, b| a > b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if better(c.ber, self.ber(best.0, best.1)) {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// `max BER / min BER` over the grid; infinite when some cell saw no errors.
    pub fn max_min_ratio(&self) -> f64 {
        let (lo, hi) = (self.argmin(), self.argmax());
        self.ber(hi.0, hi.1) / self.ber(lo.0, lo.1)
    }
}

/// Simulates every grid cell with the same frame seeds, so differences
/// between cells come from the initial phases rather than from the draws.
pub fn sweep_initial_phases(cfg: &SimConfig, ebn0_db: f64, grid: usize) -> Result<PhaseSweepGrid> {
    let Scheme::Coded(code) = &cfg.scheme else {
        return Err(Error::Unsupported("the phase sweep needs a space-time code".into()));
    };
    if code.lt() != 3 {
        return Err(Error::FamilyMismatch {
            family: "initial-phase sweep",
            lt: code.lt(),
        });
    }
    if grid == 0 {
        return Err(invalid("grid", "grid resolution must be positive"));
    }
    cfg.validate()?;
    let theta: Vec<f64> = (0..grid).map(|k| k as f64 / grid as f64).collect();
    let flat = cfg.exec.map(grid * grid, |cell| -> Result<BerPoint> {
        let (i, j) = (cell / grid, cell % grid);
        let cell_code = code.clone().with_theta0(vec![theta[i], theta[j], 0.0])?;
        let mut cell_cfg = cfg.clone();
        cell_cfg.scheme = Scheme::Coded(cell_code);
        // cells already run in parallel
        cell_cfg.exec = Execution::Sequential;
        let decoder = Decoder::new(&cell_cfg.scheme, &cell_cfg.params, cell_cfg.decoder)?;
        run_point(&cell_cfg, &decoder, ebn0_db).map(|(p, _)| p)
    });
    let mut cells = Vec::with_capacity(grid);
    let mut iter = flat.into_iter();
    for _ in 0..grid {
        cells.push(iter.by_ref().take(grid).collect::<Result<Vec<_>>>()?);
    }
    Ok(PhaseSweepGrid {
        theta,
        ebn0_db,
        cells,
        seed: cfg.seed,
    })
}
