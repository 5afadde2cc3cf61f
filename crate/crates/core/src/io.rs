//! Plain-text output helpers shared by the command-line frontend and the
//! CSV exports.

use std::fs;
use std::path::Path;

use crate::error::Result;

/// Shortest round-trip decimal for `v` (at most 17 significant digits).
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}
