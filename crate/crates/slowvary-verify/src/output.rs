//! CSV tables.

use std::io::Write;

use num_complex::Complex64;

use crate::dispersion::DispersionRow;
use crate::emergence::Emergence;
use crate::error::Result;
use crate::grid::Grid;
use crate::sim::SimResult;

fn number(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:e}", z.re)
    } else {
        format!("{:e}{:+e}i", z.re, z.im)
    }
}

/// Columns `k, lambda_full, lambda_model, abs_err`.
pub fn write_dispersion<W: Write>(out: W, rows: &[DispersionRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "lambda_full", "lambda_model", "abs_err"])?;
    for r in rows {
        w.write_record([format!("{:e}", r.k), number(r.lambda_full), number(r.lambda_model), format!("{:e}", r.abs_err)])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t, distance`.
pub fn write_emergence<W: Write>(out: W, e: &Emergence) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "distance"])?;
    for (t, d) in e.times.iter().zip(&e.distance) {
        w.write_record([format!("{t}"), format!("{d:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t`, then the L² norm and mean of each field.
pub fn write_series<W: Write>(out: W, grid: &Grid, sim: &SimResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for n in &sim.names {
        header.push(format!("{n}_l2"));
        header.push(format!("{n}_mean"));
    }
    w.write_record(&header)?;
    for (t, u) in sim.times.iter().zip(&sim.snapshots) {
        let mut row = vec![format!("{t}")];
        for f in u {
            row.push(format!("{:e}", grid.l2(f)));
            row.push(number(grid.integral(f) / grid.length));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
