//! Run manifests: one `key = value` text file per run, written next to the
//! outputs, holding everything needed to repeat the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{write_file, CliError};

pub struct RunManifest {
    command: String,
    argv: Vec<String>,
    seed: Option<u64>,
    config: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `<output>.manifest` beside a file output.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest");
    output.with_file_name(name)
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self {
            command: command.to_string(),
            argv: argv.to_vec(),
            seed: None,
            config: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let hash = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), hash));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &str| writeln!(out, "{k} = {v}").unwrap();
        put("tool", "bridgekit");
        put("version", env!("CARGO_PKG_VERSION"));
        put("command", &self.command);
        put("argv", &self.argv.join(" "));
        if let Some(seed) = self.seed {
            put("seed", &seed.to_string());
        }
        for (k, v) in &self.config {
            put(&format!("config.{k}"), v);
        }
        for (p, h) in &self.inputs {
            put(&format!("input.sha256.{}", p.display()), h);
        }
        for p in &self.outputs {
            put("output", &p.display().to_string());
        }
        put(
            "duration_ms",
            &self.started.elapsed().as_millis().to_string(),
        );
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(
            manifest_path_for(Path::new("out/run.csv")),
            Path::new("out/run.csv.manifest")
        );
    }

    #[test]
    fn hash_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn render_lists_fields() {
        let mut m = RunManifest::new("generate", &["bridgekit".into(), "generate".into()]);
        m.seed(7);
        m.set("dataset", "moon");
        m.output(Path::new("a.csv"));
        let text = m.render();
        for key in [
            "version = ",
            "command = generate",
            "seed = 7",
            "config.dataset = moon",
            "output = a.csv",
            "duration_ms = ",
        ] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
    }
}
