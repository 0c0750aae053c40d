//! Output files, checksums and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Reals with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Everything in the output directory goes through here so that each file
/// is checksummed.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(FileEntry {
            name: name.into(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| io::Error::other(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        self.write(name, bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

/// The reproducible part of a run: identical across repeated runs.
#[derive(Clone, Debug, Serialize)]
pub struct RunHeader {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

impl RunHeader {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: sha256_hex(
                serde_json::to_string(config)
                    .expect("config serialises")
                    .as_bytes(),
            ),
            config: config.clone(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    #[serde(flatten)]
    header: &'a RunHeader,
    files: &'a [FileEntry],
    data: &'a T,
}

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    header: &'a RunHeader,
    stages: &'a [StageTime],
    files: &'a [FileEntry],
}

/// Writes `report.json` (header, data files and data) and `manifest.json`
/// (header, wall times, every file including the report).
pub fn finish<T: Serialize>(
    mut out: OutputDir,
    header: &RunHeader,
    data: &T,
    stages: &[StageTime],
) -> io::Result<()> {
    let data_files = out.files.clone();
    out.json(
        "report.json",
        &Report {
            header,
            files: &data_files,
            data,
        },
    )?;
    let all = out.files.clone();
    let mut bytes = serde_json::to_vec_pretty(&Manifest {
        header,
        stages,
        files: &all,
    })
    .map_err(io::Error::other)?;
    bytes.push(b'\n');
    fs::write(out.dir.join("manifest.json"), bytes)
}
