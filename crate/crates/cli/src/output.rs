use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kle_core::KleError;
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_INPUT: u8 = 4;
pub const EXIT_RESOURCE: u8 = 5;

/// Dense-matrix memory the commands may plan for without `--force`.
pub const MEMORY_BUDGET_BYTES: f64 = 4.0 * 1024.0 * 1024.0 * 1024.0;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INPUT, message)
    }
}

impl From<KleError> for CliError {
    fn from(e: KleError) -> Self {
        let code = match &e {
            KleError::InvalidArgument(_) => EXIT_USAGE,
            KleError::Numerical(_) | KleError::Disconnected { .. } | KleError::OutOfRange(_) => EXIT_NUMERIC,
            KleError::InvalidElement { .. }
            | KleError::InvalidVertex { .. }
            | KleError::Format(_)
            | KleError::Io(_)
            | KleError::Csv(_)
            | KleError::Json(_) => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

/// Estimated peak bytes for `copies` dense `n x n` f64 matrices; refuses
/// to go past [`MEMORY_BUDGET_BYTES`] unless forced.
pub fn memory_guard(n: usize, copies: usize, force: bool, what: &str) -> Result<(), CliError> {
    let bytes = (n as f64).powi(2) * 8.0 * copies as f64;
    if bytes > MEMORY_BUDGET_BYTES && !force {
        return Err(CliError::new(
            EXIT_RESOURCE,
            format!(
                "{what} with N={n} needs about {:.1} GiB (limit {:.0} GiB); pass --force to run anyway",
                bytes / 1024f64.powi(3),
                MEMORY_BUDGET_BYTES / 1024f64.powi(3)
            ),
        ));
    }
    Ok(())
}

/// Output directory of one run plus the manifest being collected for it.
pub struct Run {
    dir: PathBuf,
    command: &'static str,
    args: Value,
    seeds: Vec<u64>,
    outputs: Vec<String>,
    diagnostics: serde_json::Map<String, Value>,
    started: Instant,
}

impl Run {
    pub fn start(command: &'static str, dir: &Path, args: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new(EXIT_FAILURE, format!("cannot create {}: {e}", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command,
            args: serde_json::to_value(args).expect("flags serialize"),
            seeds: Vec::new(),
            outputs: Vec::new(),
            diagnostics: serde_json::Map::new(),
            started: Instant::now(),
        })
    }

    pub fn seeds(&mut self, seeds: &[u64]) {
        self.seeds = seeds.to_vec();
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(
            key.to_string(),
            serde_json::to_value(value).expect("diagnostic serializes"),
        );
    }

    /// Creates `name` in the run directory and hands a buffered writer to `fill`.
    pub fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut BufWriter<File>) -> kle_core::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let fail = |e: String| CliError::new(EXIT_FAILURE, format!("writing {}: {e}", path.display()));
        let file = File::create(&path).map_err(|e| fail(e.to_string()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w).map_err(|e| fail(e.to_string()))?;
        std::io::Write::flush(&mut w).map_err(|e| fail(e.to_string()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json`.
    pub fn finish(self) -> Result<(), CliError> {
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "flags": self.args,
            "seeds": self.seeds,
            "threads": std::env::var("KLE_THREADS").ok(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
        });
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::new(EXIT_FAILURE, format!("writing {}: {e}", path.display())))
    }
}

/// File-name tag for a correlation length, e.g. `lc0.5`.
pub fn lc_tag(lc: f64) -> String {
    format!("lc{lc}")
}

pub fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{name} must be positive, got {v}")))
    }
}
