//! Artifact writers. Every file starts with (or embeds) the tool version
//! and the SHA-256 of the effective config.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::CliResult;

pub const TOOL: &str = concat!("pulse ", env!("CARGO_PKG_VERSION"));

pub struct Meta {
    pub command: &'static str,
    pub config_sha256: String,
}

impl Meta {
    pub fn csv_header(&self) -> String {
        format!(
            "# tool: {TOOL}\n# command: {}\n# config_sha256: {}\n",
            self.command, self.config_sha256
        )
    }

    pub fn json_block(&self) -> serde_json::Value {
        serde_json::json!({
            "tool": TOOL,
            "command": self.command,
            "config_sha256": self.config_sha256,
        })
    }
}

/// Write a CSV with metadata comments, a header row, and shortest
/// round-trip numeric formatting (bit-exact reimport).
pub fn write_csv(
    path: &Path,
    meta: &Meta,
    extra_comments: &[String],
    columns: &[&str],
    rows: impl Iterator<Item = Vec<f64>>,
) -> CliResult<()> {
    let mut text = meta.csv_header();
    for line in extra_comments {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "{}", columns.join(","));
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            let _ = write!(text, "{v}");
            first = false;
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Write a JSON artifact as `{ "meta": ..., "data": ... }`.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, data: &T) -> CliResult<()> {
    let doc = serde_json::json!({
        "meta": meta.json_block(),
        "data": data,
    });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| crate::CliError::Config(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
