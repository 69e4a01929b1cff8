//! Output files: fixed-format CSV tables, JSON documents and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// 17 significant digits in scientific notation.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Config(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row.iter().map(|v| fmt(*v))).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Long-format plot table `series, param, sample, variable, value`.
    pub fn plot_data(&mut self, name: &str, series: &[PlotSeries]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(["series", "param", "sample", "variable", "value"]).map_err(io)?;
        for s in series {
            for (k, row) in s.rows.iter().enumerate() {
                for (var, v) in s.variables.iter().zip(row) {
                    w.write_record([s.name.as_str(), &fmt(s.param), &k.to_string(), var, &fmt(*v)]).map_err(io)?;
                }
            }
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        write_json(&self.root.join(name), value)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

pub struct PlotSeries {
    pub name: String,
    pub param: f64,
    pub variables: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub status: &'static str,
    pub exit_code: i32,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub parameters: serde_json::Value,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
    pub error: Option<String>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub command: String,
    pub kind: String,
    pub message: String,
    pub detail: String,
}
