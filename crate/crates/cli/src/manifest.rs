use std::path::{Path, PathBuf};

use serde::Serialize;

/// Written next to every output as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, parameters: &impl Serialize, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn input(mut self, p: &Path) -> Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Records `output` and writes the manifest beside it.
    pub fn write_for(mut self, output: &Path) -> anyhow::Result<()> {
        self.outputs.push(output.to_path_buf());
        std::fs::write(Self::path_for(output), serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(())
    }
}
