use std::path::PathBuf;
use std::process::ExitCode;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ToolkitConfig, DEFAULT_OUTPUT_DIR};
use crate::{Cli, CliError};

pub const OUTPUT_ENV: &str = "GPG_OUTPUT_DIR";
pub const MANIFEST: &str = "manifest.json";

/// One invocation: where artifacts go and what the manifest records.
pub struct Run {
    dir: PathBuf,
    config_sha256: Option<String>,
    seed: u64,
    command: Vec<String>,
    artifacts: Vec<(String, String)>,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Arguments that do not affect results are left out of the manifest so
/// that reruns elsewhere produce identical bytes.
fn recorded_args(argv: Vec<String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for arg in argv {
        if skip {
            skip = false;
            continue;
        }
        let name = arg.split('=').next().unwrap_or("");
        if matches!(name, "--output" | "-o" | "--threads" | "--config" | "-c") {
            skip = !arg.contains('=');
            continue;
        }
        out.push(arg);
    }
    out
}

impl Run {
    pub fn new(cli: &Cli, config: &ToolkitConfig, config_bytes: Option<&[u8]>, argv: Vec<String>) -> Self {
        let dir = cli
            .output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .or_else(|| config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Run {
            dir,
            config_sha256: config_bytes.map(sha256),
            seed: cli.seed.unwrap_or(config.budgets.seed),
            command: recorded_args(argv),
            artifacts: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        std::fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push((name.to_string(), sha256(bytes)));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<Value, CliError> {
        let value = serde_json::to_value(value).expect("results serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())?;
        Ok(value)
    }

    pub fn csv(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        fill(&mut bytes)?;
        self.write(name, &bytes)
    }

    fn manifest(&self, status: &str, error: Option<Value>) -> Value {
        let artifacts: Vec<Value> = self
            .artifacts
            .iter()
            .map(|(name, hash)| json!({ "name": name, "sha256": hash }))
            .collect();
        let mut m = json!({
            "tool": "graphprod",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "status": status,
            "artifacts": artifacts,
        });
        if let Some(e) = error {
            m["error"] = e;
        }
        m
    }

    fn write_manifest(&self, manifest: &Value) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(self.dir.join(MANIFEST), text)
    }

    pub fn finish(self) -> ExitCode {
        match self.write_manifest(&self.manifest("ok", None)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                let err = CliError::Io(e);
                eprintln!("{}", error_json(&err));
                ExitCode::FAILURE
            }
        }
    }

    pub fn fail(&mut self, err: &CliError) -> ExitCode {
        let body = error_json(err);
        eprintln!("{body}");
        let _ = self.write_manifest(&self.manifest("error", Some(body["error"].clone())));
        ExitCode::FAILURE
    }
}

pub fn error_json(err: &CliError) -> Value {
    json!({ "error": { "kind": err.kind(), "message": err.to_string() } })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_args_drop_locations() {
        let argv = ["--output", "/tmp/x", "normalize", "--threads=2", "b a", "-c", "p3.json"];
        let got = recorded_args(argv.iter().map(|s| s.to_string()).collect());
        assert_eq!(got, ["normalize", "b a"]);
    }
}
