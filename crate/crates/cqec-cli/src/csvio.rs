//! CSV output for engine time series.
//!
//! Values are printed with 17 significant digits (`{:.16e}`) so that
//! comparisons downstream are never limited by serialization, and files are
//! written to a temporary name and renamed into place.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use cqec_core::StepRecord;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, body: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(body)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)
}

/// Write the shared record schema: t, p0..pN, r0x..rNz, fidelity.
pub fn write_records(
    path: &Path,
    syndrome_count: usize,
    records: &[StepRecord],
) -> std::io::Result<()> {
    let mut body = String::new();
    body.push_str(&StepRecord::column_names(syndrome_count).join(","));
    body.push('\n');
    for rec in records {
        let row: Vec<String> = rec.values().iter().map(|&v| fmt(v)).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

/// Monte Carlo output: the shared schema plus one standard-error column per
/// observable.
pub fn write_mc_records(
    path: &Path,
    syndrome_count: usize,
    records: &[StepRecord],
    standard_errors: &[Vec<f64>],
) -> std::io::Result<()> {
    let names = StepRecord::column_names(syndrome_count);
    let mut header: Vec<String> = names.clone();
    header.extend(names.iter().skip(1).map(|n| format!("se_{n}")));
    let mut body = String::new();
    body.push_str(&header.join(","));
    body.push('\n');
    for (rec, ses) in records.iter().zip(standard_errors) {
        let mut row: Vec<String> = rec.values().iter().map(|&v| fmt(v)).collect();
        row.extend(ses.iter().map(|&v| fmt(v)));
        body.push_str(&row.join(","));
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_and_layout() {
        let rec = StepRecord {
            t: 0.1,
            probs: vec![0.4, 0.2, 0.2, 0.2],
            bloch: vec![[1.0 / 3.0, 0.0, 0.0]; 4],
            fidelity: 0.9768451557849797,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_records(&path, 4, &[rec]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("t,p0,p1,p2,p3,r0x"));
        assert!(header.ends_with("fidelity"));
        let row = lines.next().unwrap();
        assert!(row.contains("9.7684515578497"));
        assert!(row.contains("3.3333333333333331e-1"));
    }
}
