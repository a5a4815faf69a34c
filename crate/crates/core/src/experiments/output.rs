use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "manifest";

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write through a temporary file so an interrupted run never leaves a
/// truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A CSV table held in memory until it is written.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Output directory: CSV files plus a manifest of their checksums.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
    config_hash: String,
}

impl OutputDir {
    pub fn create(root: &Path, config_hash: &str) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), config_hash: config_hash.to_string() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_table(&self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, &table.to_bytes()?)?;
        log::info!("wrote {} ({} rows)", path.display(), table.rows.len());
        Ok(path)
    }

    /// Rewrite the manifest over every CSV (and the resolved `config.toml`)
    /// currently in the directory.
    pub fn write_manifest(&self) -> Result<PathBuf> {
        let mut names: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n.ends_with(".csv") || n == "config.toml")
            .collect();
        names.sort();
        let mut text = format!(
            "config_hash {}\ncode_version {} {}\n",
            self.config_hash,
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        for name in names {
            let bytes = fs::read(self.root.join(&name))?;
            text.push_str(&format!("sha256 {} {}\n", sha256_hex(&bytes), name));
        }
        let path = self.root.join(MANIFEST_NAME);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    config_hash: String,
    payload: T,
}

/// Per-cell results stored as TOML so interrupted sweeps can resume.
/// A checkpoint written under a different config hash is ignored.
#[derive(Clone, Debug)]
pub struct Checkpoints {
    dir: PathBuf,
    config_hash: String,
}

impl Checkpoints {
    pub fn new(dir: &Path, config_hash: &str) -> Self {
        Checkpoints { dir: dir.to_path_buf(), config_hash: config_hash.to_string() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.toml"))
    }

    pub fn load<T: DeserializeOwned>(&self, name: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(name)).ok()?;
        match toml::from_str::<Envelope<T>>(&text) {
            Ok(env) if env.config_hash == self.config_hash => {
                log::info!("resuming {name} from checkpoint");
                Some(env.payload)
            }
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring unreadable checkpoint {name}: {e}");
                None
            }
        }
    }

    pub fn store<T: Serialize>(&self, name: &str, payload: &T) -> Result<()> {
        let env = Envelope { config_hash: self.config_hash.clone(), payload };
        let text = toml::to_string(&env).map_err(|e| Error::Config(e.to_string()))?;
        write_atomic(&self.path(name), text.as_bytes())
    }
}

/// Checkpoint/file-name fragment for a kick strength, e.g. `k0.01`.
pub fn k_tag(k: f64) -> String {
    format!("k{}", fmt_f64(k))
}
