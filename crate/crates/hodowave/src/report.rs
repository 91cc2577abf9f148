//! Run reports (JSON) and data dumps (CSV).
//!
//! Data files carry full double precision (17 significant digits) so that
//! refinement studies can be done on the emitted files alone, and contain no
//! timestamps: identical configurations produce byte-identical artifacts.

use crate::crosscheck::FamilyDeviation;
use crate::error::Result;
use crate::grid::{FieldQuartet, HodographGrid};
use crate::reconstruct::{PhysicalLattice, ResidualSummary};
use crate::solver::{IterationReport, Window};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub config_digest: String,
    pub window: Window,
    pub delta_initial: f64,
    pub delta_final: f64,
    pub halvings: usize,
    pub solver: IterationReport,
    /// sup deviation against the y-independent reference integration, when
    /// the scenario admits one
    pub oracle_max_abs_dev: Option<f64>,
    pub jacobian_min: Option<f64>,
    pub jacobian_floor: Option<f64>,
    pub residuals: Option<ResidualSummary>,
    pub exit: String,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::Error::Validation(format!("report serialization: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// field.csv: tau, y, U1..U4 over the reported grid nodes.
pub fn write_field_csv(path: &Path, grid: &HodographGrid, field: &FieldQuartet) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "tau,y,U1,U2,U3,U4")?;
    for k in 0..grid.n_levels() {
        for j in grid.user_cols() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt(grid.taus[k]),
                fmt(grid.y_nodes[j]),
                fmt(field.get(0, k, j)),
                fmt(field.get(1, k, j)),
                fmt(field.get(2, k, j)),
                fmt(field.get(3, k, j)),
            )?;
        }
    }
    Ok(())
}

/// physical.csv: the rectangular (t, x) sample with invariants, Jacobian and
/// consistency residuals.
pub fn write_physical_csv(path: &Path, lat: &PhysicalLattice) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,x,u,v,R1,S1,R2,S2,J,H1,H2")?;
    let nc = lat.x_nodes.len();
    for (row, &t) in lat.t_nodes.iter().enumerate() {
        for (col, &x) in lat.x_nodes.iter().enumerate() {
            let i = row * nc + col;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt(t),
                fmt(x),
                fmt(lat.u[i]),
                fmt(lat.v[i]),
                fmt(lat.r1[i]),
                fmt(lat.s1[i]),
                fmt(lat.r2[i]),
                fmt(lat.s2[i]),
                fmt(lat.jac[i]),
                fmt(lat.h1[i]),
                fmt(lat.h2[i]),
            )?;
        }
    }
    Ok(())
}

pub fn write_crosscheck_csv(path: &Path, families: &[FamilyDeviation]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "family,max_rel_dev,tau_worst,y_worst,raw,transcribed")?;
    for f in families {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            f.family,
            fmt(f.max_rel_dev),
            fmt(f.tau_worst),
            fmt(f.y_worst),
            fmt(f.raw_worst),
            fmt(f.transcribed_worst),
        )?;
    }
    Ok(())
}

/// One row of a refinement study.
#[derive(Debug, Clone, Serialize)]
pub struct OrderRow {
    pub quantity: String,
    pub n_tau: usize,
    pub norm: f64,
    /// measured order against the previous grid, when defined
    pub order: Option<f64>,
    /// norms at or below this threshold are classified exact
    pub exact: bool,
}

pub fn write_orders_csv(path: &Path, rows: &[OrderRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "quantity,n_tau,norm,order,exact")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.quantity,
            r.n_tau,
            fmt(r.norm),
            r.order.map(fmt).unwrap_or_default(),
            r.exact,
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub kappa: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "lambda,kappa,converged,iterations")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt(r.lambda),
            fmt(r.kappa),
            r.converged,
            r.iterations
        )?;
    }
    Ok(())
}

/// Coefficient-table dump for one (tau, y) probe point.
pub fn write_coeff_dump(
    path: &Path,
    tau: f64,
    y: f64,
    t: &[[f64; 4]; 4],
    f: &[f64; 4],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "name,tau,y,value")?;
    for (i, row) in t.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            writeln!(out, "T{}{},{},{},{}", i + 1, j + 1, fmt(tau), fmt(y), fmt(*v))?;
        }
    }
    for (i, v) in f.iter().enumerate() {
        writeln!(out, "F{},{},{},{}", i + 1, fmt(tau), fmt(y), fmt(*v))?;
    }
    Ok(())
}
