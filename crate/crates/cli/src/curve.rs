//! Fidelity and trace distance of `xz_flip(p)` against its depolarized versions
//! `xz_flip_depolarized(p, r)` over a grid in `r`, written as CSV.

use std::io::Write;
use std::path::Path;

use qbcast_core::metrics::{avg_gate_distance, avg_gate_fidelity, AverageMethod};
use qbcast_core::KrausChannel;

use crate::error::CliError;

pub const HEADER: [&str; 5] = ["r", "p", "avg_fidelity", "std_error", "avg_trace_distance"];
pub const SIGNIFICANT_DIGITS: usize = 12;
/// Slack allowed before a value outside `[0, 1]` counts as an invariant violation.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub r: f64,
    pub p: f64,
    pub avg_fidelity: f64,
    /// Monte Carlo only.
    pub std_error: Option<f64>,
    pub avg_trace_distance: f64,
}

/// Reference points with their tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub p: f64,
    pub r: f64,
    pub expected: f64,
    pub tolerance: f64,
}

pub const ANCHORS: [Anchor; 2] = [
    Anchor { p: 0.0, r: 1.0, expected: std::f64::consts::FRAC_1_SQRT_2, tolerance: 0.005 },
    Anchor { p: 2.0 / 3.0, r: 1.0, expected: 0.9856, tolerance: 0.005 },
];

impl Anchor {
    pub fn find<'a>(&self, rows: &'a [CurveRow]) -> Option<&'a CurveRow> {
        rows.iter().find(|row| (row.p - self.p).abs() < 1e-12 && (row.r - self.r).abs() < 1e-12)
    }

    pub fn passes(&self, value: f64) -> bool {
        (value - self.expected).abs() <= self.tolerance
    }
}

/// `steps` evenly spaced points on `[0, 1]`, both ends included.
pub fn r_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|j| j as f64 / (steps - 1) as f64).collect()
}

pub fn validate(p_list: &[f64], r_steps: usize) -> Result<(), CliError> {
    if p_list.is_empty() {
        return Err(CliError::Parse("p-list is empty".into()));
    }
    if let Some(p) = p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Invariant(format!("p = {p} is outside [0, 1]")));
    }
    if r_steps < 2 {
        return Err(CliError::Invariant(format!("r-steps must be at least 2, got {r_steps}")));
    }
    Ok(())
}

fn in_unit_interval(name: &str, value: f64, p: f64, r: f64) -> Result<f64, CliError> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&value) {
        return Err(CliError::Invariant(format!("{name} = {value} outside [0, 1] at p = {p}, r = {r}")));
    }
    Ok(value.clamp(0.0, 1.0))
}

pub fn compute(p_list: &[f64], r_steps: usize, method: &AverageMethod) -> Result<Vec<CurveRow>, CliError> {
    validate(p_list, r_steps)?;
    let grid = r_grid(r_steps);
    let mut rows = Vec::with_capacity(p_list.len() * grid.len());
    for &p in p_list {
        let ideal = KrausChannel::xz_flip(p)?;
        for &r in &grid {
            let noisy = KrausChannel::xz_flip_depolarized(p, r)?;
            let f = avg_gate_fidelity(&ideal, &noisy, method)?;
            let d = avg_gate_distance(&ideal, &noisy, method)?;
            rows.push(CurveRow {
                r,
                p,
                avg_fidelity: in_unit_interval("avg_fidelity", f.value, p, r)?,
                std_error: f.std_error,
                avg_trace_distance: in_unit_interval("avg_trace_distance", d.value, p, r)?,
            });
        }
    }
    Ok(rows)
}

/// Decimal notation with `digits` significant digits.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.99.. -> 10.0)
    let rounded: f64 = text.parse().unwrap_or(x);
    if rounded != 0.0 && rounded.abs().log10().floor() as i64 > magnitude && decimals > 0 {
        return format!("{x:.prec$}", prec = decimals - 1);
    }
    text
}

pub fn write_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for row in rows {
        let fmt = |x: f64| format_significant(x, SIGNIFICANT_DIGITS);
        w.write_record([fmt(row.r), fmt(row.p), fmt(row.avg_fidelity), row.std_error.map(fmt).unwrap_or_default(), fmt(row.avg_trace_distance)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Write to a temporary file beside `path`, then rename it into place.
pub fn write_csv_atomic(rows: &[CurveRow], path: &Path) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    write_csv(rows, tmp.as_file_mut())?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(std::f64::consts::FRAC_1_SQRT_2, 12), "0.707106781187");
        assert_eq!(format_significant(1.0, 12), "1.00000000000");
        assert_eq!(format_significant(0.01, 12), "0.0100000000000");
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(0.99999999999999, 12), "1.00000000000");
    }

    #[test]
    fn grid_includes_both_ends() {
        let g = r_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], 1.0);
    }

    #[test]
    fn validation() {
        assert!(validate(&[0.5], 3).is_ok());
        assert_eq!(validate(&[1.5], 3).unwrap_err().exit_code(), 3);
        assert_eq!(validate(&[0.5], 1).unwrap_err().exit_code(), 3);
        assert_eq!(validate(&[], 3).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn zero_noise_row_is_exact() {
        let rows = compute(&[0.3], 2, &AverageMethod::quadrature()).unwrap();
        assert!((rows[0].avg_fidelity - 1.0).abs() < 1e-12);
        assert!(rows[0].avg_trace_distance.abs() < 1e-12);
    }
}
