//! Output files and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use suretynet::netgraph::{write_csv, write_json};
use suretynet::ContractorNetwork;

use crate::args::{Cli, Format};
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Written alongside every output set. Contains no timestamps, so a rerun
/// with the same inputs and flags reproduces it byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub input_digests: BTreeMap<String, String>,
    pub tool_version: String,
    pub output_digests: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Digests of the input file, or of every `.csv`/`.json` file in an input
/// directory. Keys are file names.
pub fn input_digests(input: Option<&Path>) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let Some(path) = input else { return Ok(out) };
    let files: Vec<PathBuf> = if path.is_dir() {
        let entries = std::fs::read_dir(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut v: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json")))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    for f in files {
        let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.insert(name, sha256_hex(&read(&f)?));
    }
    Ok(out)
}

/// Collects the files of one run and their digests.
pub struct OutputSet {
    dir: PathBuf,
    format: Format,
    digests: BTreeMap<String, String>,
    resolved: Option<serde_json::Value>,
}

impl OutputSet {
    pub fn create(dir: &Path, format: Format) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            format,
            digests: BTreeMap::new(),
            resolved: None,
        })
    }

    /// Configuration assembled at run time (e.g. from a spec file); hashed
    /// into the manifest with the parsed flags.
    pub fn resolve<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        self.resolved = Some(serde_json::to_value(value)?);
        Ok(())
    }

    fn put(&mut self, name: String, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(&name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.digests.insert(name, sha256_hex(bytes));
        Ok(())
    }

    /// `<stem>.csv`, or `<stem>.json` as an array of records.
    pub fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    w.serialize(row)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
                self.put(format!("{stem}.csv"), &bytes)
            }
            Format::Json => self.json(stem, &rows),
        }
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.put(format!("{stem}.json"), &bytes)
    }

    /// `nodes.csv` + `edges.csv`, or `network.json`.
    pub fn network(&mut self, net: &ContractorNetwork) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                write_csv(net, &self.dir)?;
                for name in ["nodes.csv", "edges.csv"] {
                    let bytes = read(&self.dir.join(name))?;
                    self.digests.insert(name.to_string(), sha256_hex(&bytes));
                }
                Ok(())
            }
            Format::Json => {
                let mut bytes = Vec::new();
                write_json(net, &mut bytes)?;
                self.put("network.json".to_string(), &bytes)
            }
        }
    }

    pub fn finish(self, cli: &Cli) -> Result<RunManifest, CliError> {
        let mut config = serde_json::to_value(cli)?;
        if let (Some(r), Some(obj)) = (self.resolved, config.as_object_mut()) {
            obj.insert("resolved".to_string(), r);
        }
        let manifest = RunManifest {
            command: cli.command.name().to_string(),
            config_digest: sha256_hex(&serde_json::to_vec(&config)?),
            seed: cli.global.seed,
            input_digests: input_digests(cli.global.input.as_deref())?,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            output_digests: self.digests,
            config,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        Ok(manifest)
    }
}
