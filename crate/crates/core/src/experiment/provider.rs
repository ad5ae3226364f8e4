use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProviderMode {
    /// External program; tokens may contain `{dataset_root}` and `{output_dir}`.
    Command { command: Vec<String> },
    /// Prediction files already on disk, either per modifier under
    /// `<root>/<modifier name>` or a single tree at `<root>`.
    Precomputed { predictions_root: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionProvider {
    pub name: String,
    #[serde(flatten)]
    pub mode: ProviderMode,
}

const DATASET_ROOT: &str = "{dataset_root}";
const OUTPUT_DIR: &str = "{output_dir}";

impl PredictionProvider {
    pub fn command(name: impl Into<String>, command: Vec<String>) -> Self {
        PredictionProvider {
            name: name.into(),
            mode: ProviderMode::Command { command },
        }
    }

    pub fn precomputed(name: impl Into<String>, root: impl Into<PathBuf>) -> Self {
        PredictionProvider {
            name: name.into(),
            mode: ProviderMode::Precomputed {
                predictions_root: root.into(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("provider name is empty"));
        }
        if let ProviderMode::Command { command } = &self.mode {
            let has = |p: &str| command.iter().any(|t| t.contains(p));
            if command.is_empty() || !has(DATASET_ROOT) || !has(OUTPUT_DIR) {
                return Err(Error::invalid(format!(
                    "provider {}: command must use {DATASET_ROOT} and {OUTPUT_DIR}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Produces predictions for one dataset variant and returns the file or
    /// directory holding them.
    pub fn obtain(&self, dataset_root: &Path, modifier: &str, output_dir: &Path) -> Result<PathBuf> {
        match &self.mode {
            ProviderMode::Precomputed { predictions_root } => {
                let per_modifier = predictions_root.join(modifier);
                if per_modifier.exists() {
                    Ok(per_modifier)
                } else if predictions_root.exists() {
                    Ok(predictions_root.clone())
                } else {
                    Err(Error::Provider(format!(
                        "{}: predictions root {} does not exist",
                        self.name,
                        predictions_root.display()
                    )))
                }
            }
            ProviderMode::Command { command } => {
                std::fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
                let args: Vec<String> = command
                    .iter()
                    .map(|t| {
                        t.replace(DATASET_ROOT, &dataset_root.to_string_lossy())
                            .replace(OUTPUT_DIR, &output_dir.to_string_lossy())
                    })
                    .collect();
                log::info!("{}: running {:?}", self.name, args);
                let out = Command::new(&args[0])
                    .args(&args[1..])
                    .output()
                    .map_err(|e| Error::Provider(format!("{}: cannot start {:?}: {e}", self.name, args[0])))?;
                if !out.status.success() {
                    let stderr = String::from_utf8_lossy(&out.stderr);
                    let tail: Vec<&str> = stderr.lines().rev().take(20).collect();
                    let tail: Vec<&str> = tail.into_iter().rev().collect();
                    return Err(Error::Provider(format!(
                        "{}: command exited with {}: {}",
                        self.name,
                        out.status,
                        tail.join("\n")
                    )));
                }
                Ok(output_dir.to_path_buf())
            }
        }
    }
}
