//! Output directory bookkeeping: every file goes through [`OutputDir::write`]
//! so the manifest lists exactly what was emitted.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use msrr_core::budget::format_value;
use msrr_core::circuit::PortMode;
use msrr_core::fieldmap::FieldComponent;
use msrr_core::geometry::DesignParameter;

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_path: String,
    pub config_sha256: String,
    pub overrides: BTreeMap<String, String>,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub timings_s: BTreeMap<String, f64>,
    pub timestamp_unix_s: u64,
    pub files: Vec<FileEntry>,
}

pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
    timings: BTreeMap<String, f64>,
    quiet: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl OutputDir {
    pub fn create(root: &Path, quiet: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            timings: BTreeMap::new(),
            quiet,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: Table) -> Result<(), CliError> {
        let bytes = table.into_bytes().map_err(|e| io(&self.root.join(name), e))?;
        self.write(name, &bytes)
    }

    pub fn record(&mut self, stage: &str, seconds: f64) {
        self.timings.insert(stage.to_string(), seconds);
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let t0 = Instant::now();
        let r = f();
        self.timings.insert(stage.to_string(), t0.elapsed().as_secs_f64());
        r
    }

    pub fn finish(self, command: &str, config_path: &Path, config_text: &str, overrides: BTreeMap<String, String>) -> Result<(), CliError> {
        let manifest = Manifest {
            command: command.to_string(),
            config_path: config_path.display().to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            overrides,
            versions: BTreeMap::from([("msrr-cli", env!("CARGO_PKG_VERSION")), ("msrr-core", msrr_core::VERSION)]),
            timings_s: self.timings,
            timestamp_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        if !self.quiet {
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn io(path: &Path, e: impl Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Text form of one output value; floats go through [`format_value`].
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format_value(*self)
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {
        $(impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_cell!(bool, usize, PortMode, FieldComponent, DesignParameter);

/// Header plus rows of pre-formatted cells.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<C: Cell>(&mut self, row: impl IntoIterator<Item = C>) {
        self.rows.push(row.into_iter().map(|c| c.cell()).collect());
    }

    fn into_bytes(self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }
}

/// `key = value unit` lines.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Self { text: format!("# {title}\n") }
    }

    pub fn line(&mut self, key: &str, value: impl Cell, unit: &str) {
        self.text.push_str(&format!("{key} = {} {unit}\n", value.cell()));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}
