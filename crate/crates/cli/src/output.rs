//! File emission: field CSVs, metric tables, and PGM heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use qnp_core::field::{BoundaryKind, Field2D};
use qnp_core::pde_suite::CaseReport;

/// Writes a field as CSV: a `H,W,h` header line, then H rows of W values
/// with 17 significant digits.
pub fn write_field_csv(path: &Path, field: &Field2D) -> io::Result<()> {
    let mut out = String::new();
    let (h, w) = field.shape();
    writeln!(out, "{},{},{:.16e}", h, w, field.spacing()).unwrap();
    for i in 0..h {
        let row: Vec<String> = (0..w).map(|j| format!("{:.16e}", field.at(i, j))).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    fs::write(path, out)
}

/// Reads a field back from the CSV layout written by `write_field_csv`.
pub fn read_field_csv(path: &Path) -> io::Result<Field2D> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "empty field file"))?;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 3 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "field header must be H,W,h",
        ));
    }
    let parse_err = |e: std::num::ParseFloatError| {
        io::Error::new(io::ErrorKind::InvalidData, format!("bad number: {e}"))
    };
    let h: usize = parts[0]
        .trim()
        .parse()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad height: {e}")))?;
    let w: usize = parts[1]
        .trim()
        .parse()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("bad width: {e}")))?;
    let spacing: f64 = parts[2].trim().parse().map_err(parse_err)?;
    let mut values = Vec::with_capacity(h * w);
    for line in lines.take(h) {
        for cell in line.split(',') {
            values.push(cell.trim().parse::<f64>().map_err(parse_err)?);
        }
    }
    Field2D::from_values(values, h, w, spacing, BoundaryKind::DirichletZero)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
}

/// 8-bit binary PGM with min-max normalization; the scale goes to a sidecar
/// `<name>.range.txt` so values stay recoverable.
pub fn write_field_pgm(path: &Path, field: &Field2D) -> io::Result<()> {
    let (h, w) = field.shape();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in field.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend(
        field
            .values()
            .iter()
            .map(|&v| (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, bytes)?;
    let sidecar = path.with_extension("range.txt");
    fs::write(sidecar, format!("min={lo:.16e}\nmax={hi:.16e}\n"))
}

/// Per-cycle/per-step series as one CSV table: `step` column plus one column
/// per series (shorter series leave trailing cells empty). Key ordering is
/// the report's BTreeMap order, so identical runs emit identical bytes.
pub fn metrics_csv(report: &CaseReport) -> String {
    let mut out = String::new();
    let names: Vec<&String> = report.series.keys().collect();
    let rows = report.series.values().map(Vec::len).max().unwrap_or(0);
    let cols: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    writeln!(out, "step,{}", cols.join(",")).unwrap();
    for r in 0..rows {
        let mut row = vec![format!("{}", r + 1)];
        for name in &names {
            let series = &report.series[*name];
            row.push(
                series
                    .get(r)
                    .map(|v| format!("{v:.16e}"))
                    .unwrap_or_default(),
            );
        }
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

/// Scalar metrics and parameters as `key,value` rows.
pub fn report_csv(report: &CaseReport) -> String {
    let mut out = String::new();
    writeln!(out, "key,value").unwrap();
    writeln!(out, "case,{}", report.name).unwrap();
    writeln!(
        out,
        "grid,{}x{}@{:.16e}",
        report.grid.0, report.grid.1, report.grid.2
    )
    .unwrap();
    for (k, v) in &report.parameters {
        writeln!(out, "param.{k},{v:.16e}").unwrap();
    }
    for (k, v) in &report.metrics {
        writeln!(out, "{k},{v:.16e}").unwrap();
    }
    if let Some(step) = report.failed_at_step {
        writeln!(out, "failed_at_step,{step}").unwrap();
    }
    out
}

pub fn emit_report(dir: &Path, report: &CaseReport, heatmaps: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(report))?;
    fs::write(dir.join("report.csv"), report_csv(report))?;
    for (name, field) in &report.snapshots {
        write_field_csv(&dir.join(format!("field_{name}.csv")), field)?;
        if heatmaps {
            write_field_pgm(&dir.join(format!("field_{name}.pgm")), field)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn field_csv_roundtrip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let field = Field2D::from_fn(3, 4, 0.125, BoundaryKind::DirichletZero, |i, j| {
            (i as f64 + 1.0) / (j as f64 + 3.0) * 1e-7 - 0.3
        });
        write_field_csv(&path, &field).unwrap();
        let back = read_field_csv(&path).unwrap();
        assert_eq!(back.shape(), (3, 4));
        assert_eq!(back.spacing(), 0.125);
        assert_eq!(back.values(), field.values());
    }

    #[test]
    fn pgm_has_header_and_sidecar() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let field = Field2D::from_fn(2, 3, 1.0, BoundaryKind::DirichletZero, |i, j| {
            (i * 3 + j) as f64
        });
        write_field_pgm(&path, &field).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n3 2\n255\n".len() + 6);
        let range = fs::read_to_string(dir.path().join("f.range.txt")).unwrap();
        assert!(range.contains("min=0"));
    }
}
