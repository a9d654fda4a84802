//! Diagnostics persistence as CSV with a fixed header.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::RunSink;
use crate::norms::DiagnosticsRecord;

pub const HEADER: &str =
    "t,l2_energy,h3,hN,hr5,F_func,E_func,D_func,alpha_grad_B_hr3,div_u_max,div_b_max,cancel_max";

pub const COLUMNS: [&str; 12] = [
    "t",
    "l2_energy",
    "h3",
    "hN",
    "hr5",
    "F_func",
    "E_func",
    "D_func",
    "alpha_grad_B_hr3",
    "div_u_max",
    "div_b_max",
    "cancel_max",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_value).unwrap_or_default()
}

pub fn format_record(r: &DiagnosticsRecord) -> String {
    [
        fmt_value(r.t),
        fmt_value(r.l2_energy),
        fmt_value(r.h3),
        fmt_opt(r.h_n),
        fmt_opt(r.h_r5),
        fmt_opt(r.f_func),
        fmt_opt(r.e_func),
        fmt_opt(r.d_func),
        fmt_opt(r.alpha_grad_b_hr3),
        fmt_value(r.div_u_max),
        fmt_value(r.div_b_max),
        fmt_opt(r.cancel_max),
    ]
    .join(",")
}

fn parse_cells(line: &str, names: &[&str]) -> std::result::Result<Vec<Option<f64>>, String> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != names.len() {
        return Err(format!("expected {} fields, found {}", names.len(), cells.len()));
    }
    cells
        .iter()
        .zip(names)
        .map(|(c, name)| {
            let c = c.trim();
            if c.is_empty() {
                Ok(None)
            } else {
                c.parse::<f64>()
                    .map(Some)
                    .map_err(|_| format!("column {name}: cannot parse '{c}'"))
            }
        })
        .collect()
}

pub fn parse_record(line: &str) -> std::result::Result<DiagnosticsRecord, String> {
    let v = parse_cells(line, &COLUMNS)?;
    let required = |i: usize| v[i].ok_or_else(|| format!("column {} must not be empty", COLUMNS[i]));
    Ok(DiagnosticsRecord {
        t: required(0)?,
        l2_energy: required(1)?,
        h3: required(2)?,
        h_n: v[3],
        h_r5: v[4],
        f_func: v[5],
        e_func: v[6],
        d_func: v[7],
        alpha_grad_b_hr3: v[8],
        div_u_max: required(9)?,
        div_b_max: required(10)?,
        cancel_max: v[11],
    })
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut go = || -> std::io::Result<()> {
        writeln!(w, "{HEADER}")?;
        for r in records {
            writeln!(w, "{}", format_record(r))?;
        }
        w.flush()
    };
    go().map_err(|e| Error::io(path, e))
}

fn data_error(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}:{line}: {msg}", path.display()))
}

fn check_header(path: &Path, first: Option<std::io::Result<String>>) -> Result<()> {
    let header = match first {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Err(data_error(path, 1, "missing header")),
    };
    if header.trim_end() != HEADER {
        return Err(data_error(path, 1, format!("unexpected header '{header}'")));
    }
    Ok(())
}

/// Raw rows of a diagnostics file, one `Option<f64>` per column.
fn read_rows(path: &Path) -> Result<Vec<Vec<Option<f64>>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    check_header(path, lines.next())?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_cells(&line, &COLUMNS).map_err(|m| data_error(path, i + 2, m))?);
    }
    Ok(rows)
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    check_header(path, lines.next())?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line).map_err(|m| data_error(path, i + 2, m))?);
    }
    Ok(out)
}

/// `(t, value)` pairs of one named column, skipping empty cells.
///
/// Works on any comma-separated file whose header names a `t` column, so
/// diagnostics files, `norms.csv` and hand-made series are all accepted.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<(f64, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => return Err(data_error(path, 1, "missing header")),
    };
    let names: Vec<&str> = header.trim_end().split(',').map(str::trim).collect();
    let t_col = names
        .iter()
        .position(|&c| c == "t")
        .ok_or_else(|| data_error(path, 1, "header has no 't' column"))?;
    let col = names.iter().position(|&c| c == column).ok_or_else(|| {
        Error::Usage(format!(
            "unknown column '{column}', file has {}",
            names.join(", ")
        ))
    })?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells = parse_cells(&line, &names).map_err(|m| data_error(path, i + 2, m))?;
        if let (Some(t), Some(y)) = (cells[t_col], cells[col]) {
            out.push((t, y));
        }
    }
    Ok(out)
}

/// Streams records to a CSV file as they arrive.
pub struct CsvSink {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl CsvSink {
    /// Creates the file and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        writeln!(writer, "{HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(CsvSink {
            path: path.to_path_buf(),
            writer,
        })
    }

    /// Opens an existing diagnostics file for appending (used on resume).
    pub fn append(path: &Path) -> Result<Self> {
        read_rows(path)?;
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(CsvSink {
            path: path.to_path_buf(),
            writer: BufWriter::new(file),
        })
    }
}

impl RunSink for CsvSink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.writer, "{}", format_record(record))
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            l2_energy: 0.1 + t,
            h3: std::f64::consts::PI * 1e-7,
            h_n: None,
            h_r5: Some(1.0 / 3.0),
            f_func: Some(-2.5e-300),
            e_func: None,
            d_func: None,
            alpha_grad_b_hr3: None,
            div_u_max: 0.0,
            div_b_max: 1.2345678901234567e-13,
            cancel_max: Some(f64::MIN_POSITIVE),
        }
    }

    #[test]
    fn header_only_for_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_diagnostics(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{HEADER}\n"));
        assert!(read_diagnostics(&p).unwrap().is_empty());
    }

    #[test]
    fn record_round_trips_bit_exactly() {
        let r = record(0.1);
        assert_eq!(parse_record(&format_record(&r)).unwrap(), r);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_diagnostics(&[r, record(0.2)], &p).unwrap();
        assert_eq!(read_diagnostics(&p).unwrap(), vec![r, record(0.2)]);
        let col = read_column(&p, "hN").unwrap();
        assert!(col.is_empty());
        assert_eq!(read_column(&p, "hr5").unwrap().len(), 2);
        assert!(read_column(&p, "nope").is_err());
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "t,energy\n1,2\n").unwrap();
        assert!(matches!(read_diagnostics(&p), Err(Error::Config(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_diagnostics(Path::new("/nonexistent/diag.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/diag.csv"));
    }
}
