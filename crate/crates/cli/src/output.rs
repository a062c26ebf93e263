//! Deterministic file outputs: CSV with 17-significant-digit floats,
//! atomic-rename writes, and a run manifest carrying the resolved config,
//! stage timings and a checksummed file inventory.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Render a float with 17 significant digits (lossless round-trip).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Accumulates output files and timings for one run.
pub struct RunWriter {
    dir: PathBuf,
    files: Vec<(String, String)>,
    stages: Vec<(String, f64)>,
    stage_start: Instant,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_file: &'a str,
    stages_seconds: &'a [(String, f64)],
    files: Vec<ManifestFile<'a>>,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    name: &'a str,
    sha256: &'a str,
}

impl RunWriter {
    pub fn create(dir: &Path) -> std::io::Result<RunWriter> {
        fs::create_dir_all(dir)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            stages: Vec::new(),
            stage_start: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Record elapsed time since the previous stage mark.
    pub fn stage(&mut self, name: &str) {
        let dt = self.stage_start.elapsed().as_secs_f64();
        self.stages.push((name.to_string(), dt));
        self.stage_start = Instant::now();
    }

    /// Write a file atomically (temp + rename) and record its checksum.
    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let fin = self.dir.join(name);
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(contents.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &fin)?;
        let mut hasher = Sha256::new();
        hasher.update(contents.as_bytes());
        self.files.push((name.to_string(), format!("{:x}", hasher.finalize())));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).expect("serializable");
        self.write(name, &text)
    }

    /// Emit the manifest; call last.
    pub fn finish(&mut self, command: &str) -> std::io::Result<()> {
        self.stage("finish");
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_file: "resolved.toml",
            stages_seconds: &self.stages,
            files: self
                .files
                .iter()
                .map(|(n, h)| ManifestFile { name: n, sha256: h })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest");
        let tmp = self.dir.join(".manifest.json.tmp");
        fs::write(&tmp, &text)?;
        fs::rename(tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

/// Build a CSV from a header and rows of already-formatted cells.
pub struct Csv {
    buf: String,
    n_cols: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Csv {
        Csv { buf: format!("{}\n", header.join(",")), n_cols: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.n_cols, "column count mismatch");
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 3.0 * std::f64::consts::PI / 301.0, 1.0 / 3.0, -2.5e-17] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn atomic_write_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::create(dir.path()).unwrap();
        w.write("a.csv", "x\n1\n").unwrap();
        w.stage("write");
        w.finish("test").unwrap();
        let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(manifest.contains("a.csv"));
        assert!(manifest.contains("sha256"));
    }
}
