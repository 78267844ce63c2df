//! CSV learning curves and JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::theory::to_db;

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Creates `dir` (and parents) if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

/// Predicted curves written next to the simulated one, in dB.
#[derive(Debug, Clone, Copy)]
pub struct TheoryColumns<'a> {
    pub ideal: &'a [f64],
    pub noisy: &'a [f64],
}

/// Writes `iteration,msd_linear,msd_db[,theory_ideal_db,theory_noisy_db]`.
/// Row `i` (one-based) holds the MSD after `i` iterations; theory slices are
/// indexed the same way, so `theory.ideal[i]` goes with row `i`.
pub fn write_curve_csv(path: &Path, msd: &[f64], theory: Option<TheoryColumns<'_>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["iteration", "msd_linear", "msd_db"];
    if theory.is_some() {
        header.extend(["theory_ideal_db", "theory_noisy_db"]);
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, &x) in msd.iter().enumerate() {
        let it = i + 1;
        let mut row = vec![it.to_string(), format_number(x), format_number(to_db(x))];
        if let Some(t) = theory {
            for col in [t.ideal, t.noisy] {
                row.push(col.get(it).map(|&v| format_number(to_db(v))).unwrap_or_default());
            }
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        other => Error::config(format!("cannot write {}: {other:?}", path.display())),
    }
}

/// Shortest decimal that round-trips, `inf` for infinities.
fn format_number(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// Pretty-printed JSON with a trailing newline. Non-finite floats become
/// `null`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::numeric(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// `dir/name`.
pub fn output_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
