//! Result rendering and provenance.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::commands::{Outcome, Table};
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::OUT_DIR_ENV;

/// SHA-256 of the canonical config text, lowercase hex.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.serialize().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Provenance {
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config_sha256: String,
    pub wall_time_seconds: f64,
    /// Set when the divergence limit was exceeded.
    pub partial: bool,
    pub config: String,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig, wall_time_seconds: f64, partial: bool) -> Self {
        Provenance {
            version: env!("CARGO_PKG_VERSION"),
            command: cfg.command.to_string(),
            seed: cfg.opt_u64("seed"),
            config_sha256: config_hash(cfg),
            wall_time_seconds,
            partial,
            config: cfg.serialize(),
        }
    }

    fn csv_lines(&self) -> String {
        let mut s = format!("# heavytail {}\n# command: {}\n", self.version, self.command);
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s.push_str(&format!(
            "# config_sha256: {}\n# wall_time_seconds: {}\n# partial: {}\n",
            self.config_sha256, self.wall_time_seconds, self.partial
        ));
        for line in self.config.lines() {
            s.push_str(&format!("# config: {line}\n"));
        }
        s
    }

    fn to_json(&self) -> Json {
        let config: serde_json::Map<String, Json> = self
            .config
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        json!({
            "version": self.version,
            "command": self.command,
            "seed": self.seed,
            "config_sha256": self.config_sha256,
            "wall_time_seconds": self.wall_time_seconds,
            "partial": self.partial,
            "config": config,
        })
    }
}

fn render_table(table: &Table, provenance: &Provenance) -> String {
    let mut s = provenance.csv_lines();
    s.push_str(&table.header.join(","));
    s.push('\n');
    for row in &table.rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Full text of the main result file.
pub fn render(outcome: &Outcome, format: Format, provenance: &Provenance) -> String {
    match format {
        Format::Csv => render_table(&outcome.table, provenance),
        Format::Json => {
            let doc = json!({ "provenance": provenance.to_json(), "result": outcome.json });
            serde_json::to_string_pretty(&doc).expect("json value serialises") + "\n"
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Where the main result goes: the `output` key, else the directory in
/// `HEAVYTAIL_OUT_DIR`, else stdout (`None`).
pub fn output_path(cfg: &ExperimentConfig) -> Option<PathBuf> {
    if let Some(p) = &cfg.output {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty())?;
    Some(PathBuf::from(dir).join(format!("{}.{}", cfg.command, cfg.format.extension())))
}

/// Write the main result and any extra table.
pub fn emit(cfg: &ExperimentConfig, outcome: &Outcome, provenance: &Provenance) -> Result<(), CliError> {
    let text = render(outcome, cfg.format, provenance);
    match output_path(cfg) {
        Some(path) => write_file(&path, &text)?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    if let Some(extra) = &outcome.extra {
        write_file(Path::new(&extra.path), &render_table(&extra.table, provenance))?;
    }
    Ok(())
}
