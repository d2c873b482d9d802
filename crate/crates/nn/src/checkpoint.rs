//! On-disk model format: a JSON manifest next to a raw little-endian `f32`
//! blob. The manifest records the architecture, where every tensor lives in
//! the blob, and free-form metadata (seeds, hyperparameters, ...).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::network::{Network, Weights};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEntry {
    pub layer: usize,
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in `f32` elements.
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub network: Network,
    /// File name of the blob, relative to the manifest.
    pub blob: String,
    pub params: Vec<ParamEntry>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub weights: Weights<f32>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

impl Checkpoint {
    pub fn new(network: Network, weights: Weights<f32>) -> Self {
        Checkpoint {
            network,
            weights,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn manifest(&self, blob: String) -> CheckpointManifest {
        let mut params = Vec::new();
        let mut offset = 0;
        for (layer, spec) in self.network.layers().iter().enumerate() {
            for (name, shape) in spec.param_shapes() {
                let len = shape.iter().product();
                params.push(ParamEntry {
                    layer,
                    name: name.to_string(),
                    shape,
                    offset,
                    len,
                });
                offset += len;
            }
        }
        CheckpointManifest {
            format_version: FORMAT_VERSION,
            network: self.network.clone(),
            blob,
            params,
            metadata: self.metadata.clone(),
        }
    }

    /// Writes `path` (manifest) and `path` with a `.bin` extension (blob).
    pub fn save(&self, path: &Path) -> Result<()> {
        let blob = blob_path(path);
        let blob_name = blob
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| NnError::InvalidArgument(format!("bad path {}", path.display())))?
            .to_string();
        let manifest = self.manifest(blob_name);
        let bytes: Vec<u8> = self
            .weights
            .to_flat()
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        fs::write(&blob, bytes)?;
        let mut js = serde_json::to_string_pretty(&manifest)?;
        js.push('\n');
        fs::write(path, js)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(NnError::Format(format!(
                "unsupported format version {}",
                manifest.format_version
            )));
        }
        let blob = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&manifest.blob);
        let bytes = fs::read(&blob)?;
        if bytes.len() % 4 != 0 {
            return Err(NnError::Format(format!(
                "blob {} is not a whole number of f32 values",
                blob.display()
            )));
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let expected = Checkpoint::new(manifest.network.clone(), manifest.network.zero_weights())
            .manifest(manifest.blob.clone());
        if expected.params != manifest.params {
            return Err(NnError::Format(
                "parameter table does not match the architecture".into(),
            ));
        }
        let weights = Weights::from_flat(&manifest.network, &values)
            .map_err(|e| NnError::Format(format!("blob size: {e}")))?;
        Ok(Checkpoint {
            network: manifest.network,
            weights,
            metadata: manifest.metadata,
        })
    }
}
