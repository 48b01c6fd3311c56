//! CSV and metadata emission. Decimals carry 17 significant digits so
//! reports are reproducible bit for bit.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::LabResult;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Write rows of already-formatted cells under a header line.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> LabResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Sidecar `<output>.meta` listing configuration, seeds and target
/// constants.
pub fn write_meta(output: &Path, lines: &[String]) -> LabResult<()> {
    let mut path = PathBuf::from(output);
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta");
    path.set_file_name(name);
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
