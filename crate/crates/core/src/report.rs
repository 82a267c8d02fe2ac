//! CSV emission for tradeoff curves and simulation reports.
//!
//! Numbers are written in scientific notation with 12 significant digits so
//! outputs are byte-stable across runs of the same configuration.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::ratedist::{theta_inverse, TradeoffPoint};
use crate::sim::SimulationReport;

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes `gamma,rate_bits,relaxed_rate_bits,feasible,trace_P` rows, one per
/// point. Infeasible points leave the numeric fields empty.
pub fn write_tradeoff_csv<W: Write>(points: &[TradeoffPoint], mut out: W) -> Result<()> {
    writeln!(out, "gamma,rate_bits,relaxed_rate_bits,feasible,trace_P")?;
    for point in points {
        if point.feasible {
            let rate = point.rate_bits.expect("feasible point carries a rate");
            let relaxed = theta_inverse(rate.max(0.0))?;
            let trace_p = point
                .p_opt
                .as_ref()
                .map(|p| p.trace())
                .expect("feasible point carries P");
            writeln!(
                out,
                "{},{},{},true,{}",
                sig12(point.gamma),
                sig12(rate),
                sig12(relaxed),
                sig12(trace_p)
            )?;
        } else {
            writeln!(out, "{},,,false,", sig12(point.gamma))?;
        }
    }
    Ok(())
}

/// Writes a tradeoff CSV to a file path.
pub fn emit_tradeoff_csv(points: &[TradeoffPoint], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_tradeoff_csv(points, std::io::BufWriter::new(file))
}

/// Writes the aggregate simulation report as a single CSV row.
pub fn write_simulation_csv<W: Write>(report: &SimulationReport, mut out: W) -> Result<()> {
    writeln!(
        out,
        "avg_bits,avg_cost,bound_at_cost,relaxed_bound_at_cost,gap_bits,eps_stat"
    )?;
    writeln!(
        out,
        "{},{},{},{},{},{}",
        sig12(report.avg_bits),
        sig12(report.avg_cost),
        sig12(report.bound_at_cost),
        sig12(report.relaxed_bound_at_cost),
        sig12(report.gap_bits),
        sig12(report.eps_stat)
    )?;
    Ok(())
}

/// Writes a simulation CSV to a file path.
pub fn emit_simulation_csv(report: &SimulationReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_simulation_csv(report, std::io::BufWriter::new(file))
}
