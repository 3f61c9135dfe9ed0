use crate::config::{Command, ExperimentConfig};
use crate::CliError;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Version of the JSON result envelope.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: Command,
    config: &'a ExperimentConfig,
    results: &'a T,
}

/// Collects the files written by one run.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    /// Writes through a temporary file in the same directory and renames it
    /// into place, so readers never observe a partial file.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let temp = self.dir.join(format!(".{name}.tmp{}", std::process::id()));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", target.display()));
        let mut file = fs::File::create(&temp).map_err(io)?;
        file.write_all(contents).map_err(io)?;
        file.sync_all().map_err(io)?;
        drop(file);
        fs::rename(&temp, &target).map_err(io)?;
        self.written.push(target.clone());
        Ok(target)
    }

    /// Writes `results` wrapped with the schema version and the resolved config.
    pub fn write_json<T: Serialize>(
        &mut self,
        name: &str,
        command: Command,
        config: &ExperimentConfig,
        results: &T,
    ) -> Result<PathBuf, CliError> {
        let envelope = Envelope { schema_version: SCHEMA_VERSION, command, config, results };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Shortest round-trip representation of a float.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
