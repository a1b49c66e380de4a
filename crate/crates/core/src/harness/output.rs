//! CSV writers for curves, spectra and sweeps.

use std::io::{self, Write};

use super::{BerCurve, PhaseSweepGrid, PsdEstimate};

pub fn write_ber_csv<W: Write>(curve: &BerCurve, mut out: W) -> io::Result<()> {
    writeln!(out, "ebn0_db,errors,bits,ber,ci_lo,ci_hi")?;
    for p in &curve.points {
        writeln!(out, "{},{},{},{:e},{:e},{:e}", p.ebn0_db, p.errors, p.bits, p.ber, p.ci_lo, p.ci_hi)?;
    }
    Ok(())
}

pub fn write_psd_csv<W: Write>(psd: &PsdEstimate, mut out: W) -> io::Result<()> {
    writeln!(out, "f_td,power_db")?;
    for (f, p) in psd.freqs.iter().zip(&psd.power_db) {
        writeln!(out, "{f},{p}")?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(grid: &PhaseSweepGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "theta1,theta2,ber")?;
    for (i, row) in grid.cells.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            writeln!(out, "{},{},{:e}", grid.theta[i], grid.theta[j], cell.ber)?;
        }
    }
    Ok(())
}
