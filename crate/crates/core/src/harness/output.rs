use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid_spectral::{vlf1, GridField};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// One file written by an experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the artifact directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes files under one directory and records their hashes.
pub struct ArtifactWriter {
    root: PathBuf,
    pub records: Vec<OutputRecord>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), records: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, bytes)?;
        self.records.retain(|r| r.path != rel);
        self.records.push(OutputRecord { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// CSV with a header row; cells are written verbatim.
    pub fn write_csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "{}", header.join(","))?;
        for row in rows {
            writeln!(buf, "{}", row.join(","))?;
        }
        self.write_bytes(rel, &buf)
    }

    pub fn write_field(&mut self, rel: &str, field: &GridField) -> Result<()> {
        let mut buf = Vec::new();
        vlf1::write_field(&mut buf, field)?;
        self.write_bytes(rel, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Format(e.to_string()))?;
        self.write_bytes(rel, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn writer_records_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write_csv("a/b.csv", &["x", "y"], &[vec![fmt_f64(1.0), fmt_f64(2.0)]]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("a/b.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x,y");
        assert_eq!(w.records[0].sha256, sha256_hex(text.as_bytes()));
    }
}
