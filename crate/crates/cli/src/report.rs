//! Output emission: CSV tables, the JSON sidecar with content hashes, and
//! the float formatting rule shared by every command.
//!
//! Numbers are rendered with Rust's shortest round-trip `f64` formatting
//! (`f64::to_string`), so a value parses back to the identical bits; absent
//! optional values (e.g. standard errors in exact mode) render as empty
//! fields.  Nothing in an output depends on wall-clock time or thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Shortest round-trip decimal form of a float.
pub fn fmt_f64(x: f64) -> String {
    x.to_string()
}

/// Optional float; `None` renders as an empty CSV field.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// An in-memory CSV table with a fixed header.
#[derive(Clone, Debug)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| CliError::Run(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| CliError::Run(e.to_string()))?;
        }
        w.into_inner().map_err(|e| CliError::Run(e.to_string()))
    }
}

/// Collects a command's output files, then writes them together with a
/// sidecar `<command>.json` carrying the config echo, the seed, hashes of
/// any input files, and hashes of every emitted file.
pub struct OutputBundle {
    command: String,
    files: BTreeMap<String, Vec<u8>>,
    inputs: BTreeMap<String, String>,
}

impl OutputBundle {
    pub fn new(command: &str) -> Self {
        OutputBundle { command: command.to_string(), files: BTreeMap::new(), inputs: BTreeMap::new() }
    }

    pub fn add_csv(&mut self, name: &str, table: &CsvTable) -> CliResult<()> {
        self.files.insert(name.to_string(), table.to_bytes()?);
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Run(e.to_string()))?;
        bytes.push(b'\n');
        self.files.insert(name.to_string(), bytes);
        Ok(())
    }

    /// Records an input artifact (config file, coefficient file) by hash.
    pub fn note_input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.insert(label.to_string(), sha256_hex(bytes));
    }

    /// Writes all collected files plus the sidecar into `out_dir` and returns
    /// the paths written, sidecar last.
    pub fn finish<C: Serialize, E: Serialize>(
        self,
        out_dir: &Path,
        seed: u64,
        exact: bool,
        config_echo: &C,
        extra: &E,
    ) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir)?;
        let mut written = Vec::new();
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.files {
            let path = out_dir.join(name);
            std::fs::write(&path, bytes)?;
            outputs.insert(name.clone(), sha256_hex(bytes));
            written.push(path);
        }
        let sidecar = Sidecar {
            command: &self.command,
            seed,
            exact,
            config: config_echo,
            inputs: &self.inputs,
            outputs: &outputs,
            results: extra,
        };
        let mut bytes =
            serde_json::to_vec_pretty(&sidecar).map_err(|e| CliError::Run(e.to_string()))?;
        bytes.push(b'\n');
        let path = out_dir.join(format!("{}.json", self.command));
        std::fs::write(&path, bytes)?;
        written.push(path);
        Ok(written)
    }
}

#[derive(Serialize)]
struct Sidecar<'a, C: Serialize, E: Serialize> {
    command: &'a str,
    seed: u64,
    exact: bool,
    config: &'a C,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
    results: &'a E,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, -3.5e-9, 1.0 / 3.0, 12345.6789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_f64(1.0), "1");
    }

    #[test]
    fn bundle_writes_files_and_a_hashed_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let mut table = CsvTable::new(&["a", "b"]);
        table.push(vec!["1".into(), "2".into()]);
        let mut bundle = OutputBundle::new("demo");
        bundle.add_csv("demo.csv", &table).unwrap();
        bundle.note_input("config", b"{}");
        let written = bundle
            .finish(dir.path(), 7, false, &serde_json::json!({"x": 1}), &serde_json::json!({}))
            .unwrap();
        assert_eq!(written.len(), 2);
        let csv_bytes = std::fs::read(&written[0]).unwrap();
        assert_eq!(String::from_utf8_lossy(&csv_bytes), "a,b\n1,2\n");
        let sidecar: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&written[1]).unwrap()).unwrap();
        assert_eq!(sidecar["command"], "demo");
        assert_eq!(sidecar["outputs"]["demo.csv"], sha256_hex(&csv_bytes));
        assert_eq!(sidecar["inputs"]["config"], sha256_hex(b"{}"));
        assert!(sidecar.get("timestamp").is_none());
    }

    #[test]
    fn identical_content_hashes_identically() {
        let mut t1 = CsvTable::new(&["v"]);
        t1.push(vec![fmt_f64(0.30000000000000004)]);
        let b1 = t1.to_bytes().unwrap();
        let mut t2 = CsvTable::new(&["v"]);
        t2.push(vec![fmt_f64(0.1 + 0.2)]);
        assert_eq!(sha256_hex(&b1), sha256_hex(&t2.to_bytes().unwrap()));
    }
}
