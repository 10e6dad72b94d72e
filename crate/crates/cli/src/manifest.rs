use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prng {
    pub id: String,
    pub seed: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and compare its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub prng: Option<Prng>,
    pub tool_version: String,
    pub elapsed_ms: u128,
    pub outputs: Vec<OutputFile>,
    /// Digest over the output digests, in order.
    pub result_digest: String,
    pub exit_code: i32,
}

pub struct Recorder {
    command: String,
    args: Vec<String>,
    inputs: Vec<InputFile>,
    prng: Option<Prng>,
    outputs: Vec<OutputFile>,
    start: Instant,
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        Recorder {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            inputs: Vec::new(),
            prng: None,
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn prng(&mut self, id: &str, seed: u64) {
        self.prng = Some(Prng { id: id.to_string(), seed: seed.to_string() });
    }

    /// Reads an input file, recording its digest.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputFile { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputFile { path: path.display().to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json(&mut self, path: &Path, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    /// Writes `manifest.json` into `dir` (or next to the first output).
    pub fn finish(self, dir: Option<&Path>, exit_code: i32) -> Result<RunManifest> {
        let joined: String = self.outputs.iter().map(|o| o.sha256.as_str()).collect::<Vec<_>>().join("\n");
        let manifest = RunManifest {
            command: self.command,
            args: self.args,
            inputs: self.inputs,
            prng: self.prng,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            elapsed_ms: self.start.elapsed().as_millis(),
            result_digest: sha256_hex(joined.as_bytes()),
            outputs: self.outputs,
            exit_code,
        };
        let target: Option<PathBuf> = dir
            .map(Path::to_path_buf)
            .or_else(|| manifest.outputs.first().and_then(|o| Path::new(&o.path).parent().map(Path::to_path_buf)));
        if let Some(d) = target {
            let path = if d.as_os_str().is_empty() { PathBuf::from("manifest.json") } else { d.join("manifest.json") };
            std::fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(manifest)
    }
}
