//! `diff` verb: column-wise comparison of two output tables, used for
//! regression pinning and solver cross-checks.
//!
//! Accepts either two CSV files or two run manifests; manifests are
//! compared file by file over the output names they share.

use std::path::{Path, PathBuf};

use crate::output::RunManifest;
use crate::CliError;

/// A parsed CSV table: the column names and the numeric cells; empty
/// cells become `None`.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

fn load_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header_line = lines
        .next()
        .ok_or_else(|| CliError::config(format!("{} has no column row", path.display())))?;
    let header: Vec<String> = header_line.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(header.len());
        for cell in line.split(',') {
            if cell.is_empty() {
                row.push(None);
            } else {
                let v = cell.parse::<f64>().map_err(|_| {
                    CliError::config(format!(
                        "{} row {}: non-numeric cell '{cell}'",
                        path.display(),
                        i + 1
                    ))
                })?;
                row.push(Some(v));
            }
        }
        if row.len() != header.len() {
            return Err(CliError::config(format!(
                "{} row {}: {} cells under {} columns",
                path.display(),
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Per-column comparison outcome.
enum ColumnDiff {
    /// both sides numeric everywhere: (max-abs, rms)
    Numeric(f64, f64),
    /// at least one side has empty cells in this column
    NotComparable,
}

fn diff_tables(a: &Table, b: &Table) -> Vec<ColumnDiff> {
    let n_rows = a.rows.len().min(b.rows.len());
    a.header
        .iter()
        .enumerate()
        .map(|(col, _)| {
            let mut max_abs = 0.0f64;
            let mut sum_sq = 0.0f64;
            for i in 0..n_rows {
                match (a.rows[i][col], b.rows[i][col]) {
                    (Some(x), Some(y)) => {
                        let d = (x - y).abs();
                        max_abs = max_abs.max(d);
                        sum_sq += d * d;
                    }
                    _ => return ColumnDiff::NotComparable,
                }
            }
            let rms = if n_rows == 0 { 0.0 } else { (sum_sq / n_rows as f64).sqrt() };
            ColumnDiff::Numeric(max_abs, rms)
        })
        .collect()
}

/// Compare two CSV files; prints the per-column table.
fn diff_csv(a_path: &Path, b_path: &Path) -> Result<(), CliError> {
    let a = load_table(a_path)?;
    let b = load_table(b_path)?;
    if a.header != b.header {
        return Err(CliError::config(format!(
            "column schema mismatch:\n  {}: {}\n  {}: {}",
            a_path.display(),
            a.header.join(","),
            b_path.display(),
            b.header.join(",")
        )));
    }
    let n_rows = a.rows.len().min(b.rows.len());
    println!("comparing {} vs {}", a_path.display(), b_path.display());
    if a.rows.len() == b.rows.len() {
        println!("  {n_rows} rows");
    } else {
        println!(
            "  row counts differ ({} vs {}); comparing the first {n_rows}",
            a.rows.len(),
            b.rows.len()
        );
    }
    let diffs = diff_tables(&a, &b);
    println!("  {:<16} {:>13} {:>13}", "column", "max_abs", "rms");
    let mut worst: Option<(&str, f64)> = None;
    for (name, diff) in a.header.iter().zip(&diffs) {
        match diff {
            ColumnDiff::Numeric(max_abs, rms) => {
                println!("  {name:<16} {max_abs:>13.6e} {rms:>13.6e}");
                if worst.map_or(true, |(_, w)| *max_abs > w) {
                    worst = Some((name, *max_abs));
                }
            }
            ColumnDiff::NotComparable => {
                println!("  {name:<16} {:>13} {:>13}", "n/a", "n/a");
            }
        }
    }
    match worst {
        Some((name, w)) => println!("  largest column difference: {w:.6e} ({name})"),
        None => println!("  no numerically comparable columns"),
    }
    Ok(())
}

fn is_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Entry point for the `diff` verb. Two manifests are compared over their
/// shared output files; anything else is treated as a CSV pair.
pub fn run_diff(a: &Path, b: &Path) -> Result<(), CliError> {
    if is_manifest(a) != is_manifest(b) {
        return Err(CliError::config(
            "cannot diff a manifest against a CSV; pass two manifests or two tables",
        ));
    }
    if !is_manifest(a) {
        return diff_csv(a, b);
    }
    let ma = RunManifest::from_path(a)?;
    let mb = RunManifest::from_path(b)?;
    let dir_a = a.parent().unwrap_or(Path::new("."));
    let dir_b = b.parent().unwrap_or(Path::new("."));
    let files_b: Vec<&str> = mb.outputs.iter().map(|e| e.file.as_str()).collect();
    let mut common: Vec<&str> = ma
        .outputs
        .iter()
        .map(|e| e.file.as_str())
        .filter(|f| files_b.contains(f))
        .collect();
    common.dedup();
    if common.is_empty() {
        return Err(CliError::config(
            "the two manifests share no output file names; nothing to compare",
        ));
    }
    for entry in ma.outputs.iter().map(|e| e.file.as_str()) {
        if !files_b.contains(&entry) {
            println!("only in {}: {entry}", a.display());
        }
    }
    for entry in &files_b {
        if !ma.outputs.iter().any(|e| e.file == *entry) {
            println!("only in {}: {entry}", b.display());
        }
    }
    for file in common {
        let pa: PathBuf = dir_a.join(file);
        let pb: PathBuf = dir_b.join(file);
        diff_csv(&pa, &pb)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("diff_test_{}.csv", std::process::id()));
        std::fs::write(&path, text).unwrap();
        let t = load_table(&path).unwrap();
        std::fs::remove_file(&path).ok();
        t
    }

    #[test]
    fn parses_metadata_and_empty_cells() {
        let t = table("# config_hash=abc version=0.1.0\nt_g,purity\n0e0,\n1e0,5e-1\n");
        assert_eq!(t.header, ["t_g", "purity"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0][1], None);
        assert_eq!(t.rows[1][1], Some(0.5));
    }

    #[test]
    fn column_diffs_flag_missing_cells() {
        let a = table("x,y\n1e0,\n2e0,1e0\n");
        let b = table("x,y\n1e0,0e0\n3e0,1e0\n");
        let diffs = diff_tables(&a, &b);
        match diffs[0] {
            ColumnDiff::Numeric(max_abs, rms) => {
                assert_eq!(max_abs, 1.0);
                assert!((rms - (0.5f64).sqrt()).abs() < 1e-15);
            }
            ColumnDiff::NotComparable => panic!("x is numeric on both sides"),
        }
        assert!(matches!(diffs[1], ColumnDiff::NotComparable));
    }
}
