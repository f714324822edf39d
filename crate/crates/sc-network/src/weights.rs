//! Weight manifest ingestion.
//!
//! Manifests are JSON documents listing, per layer, the kind, shape,
//! row-major weight array and bias array. Convolution weights are ordered
//! filter-major, then input channel, then kernel row, then kernel column;
//! fully connected weights are unit-major over channel-major flattened
//! inputs. Any layer whose largest weight or bias magnitude exceeds 1 is
//! rescaled to the stream-representable range and the factor recorded.

use crate::error::{NetworkError, Result};
use crate::topology::NetworkTopology;
use sc_core::ActivationKind;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerManifest {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_channels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<usize>,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightManifest {
    pub name: String,
    pub activation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_test_error: Option<f64>,
    pub layers: Vec<LayerManifest>,
}

/// One layer's tensors after ingestion.
#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    /// Factor the stored values were divided by at load time (1.0 when the
    /// manifest was already in range).
    pub rescale: f64,
}

impl LayerWeights {
    /// Row of weights feeding one output unit/filter, excluding the bias.
    pub fn unit_row(&self, unit: usize, row_len: usize) -> &[f32] {
        &self.weights[unit * row_len..(unit + 1) * row_len]
    }
}

#[derive(Debug, Clone)]
pub struct WeightSet {
    pub name: String,
    pub activation: ActivationKind,
    pub reference_test_error: Option<f64>,
    pub layers: Vec<LayerWeights>,
}

/// Load a manifest and check it against the topology.
pub fn load_weights(path: &Path, topology: &NetworkTopology) -> Result<WeightSet> {
    let data = std::fs::read(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let manifest: WeightManifest = serde_json::from_slice(&data)
        .map_err(|e| NetworkError::format(format!("manifest parse error: {e}")))?;
    ingest_manifest(manifest, topology)
}

pub fn ingest_manifest(manifest: WeightManifest, topology: &NetworkTopology) -> Result<WeightSet> {
    let activation = ActivationKind::parse(&manifest.activation).ok_or_else(|| {
        NetworkError::format(format!("unknown activation {:?}", manifest.activation))
    })?;
    if manifest.layers.len() != topology.layers.len() {
        return Err(NetworkError::ShapeMismatch {
            layer: format!("layer {}", manifest.layers.len()),
            detail: format!(
                "manifest has {} layers, topology needs {}",
                manifest.layers.len(),
                topology.layers.len()
            ),
        });
    }
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (idx, (entry, spec)) in manifest.layers.iter().zip(&topology.layers).enumerate() {
        let name = format!("{} #{idx}", spec.kind_name());
        if entry.kind != spec.kind_name() {
            return Err(NetworkError::ShapeMismatch {
                layer: name,
                detail: format!("manifest kind {:?}, topology kind {:?}", entry.kind, spec.kind_name()),
            });
        }
        if entry.weights.len() != spec.weight_count() || entry.bias.len() != spec.bias_count() {
            return Err(NetworkError::ShapeMismatch {
                layer: name,
                detail: format!(
                    "weights {} / bias {} in manifest, topology needs {} / {}",
                    entry.weights.len(),
                    entry.bias.len(),
                    spec.weight_count(),
                    spec.bias_count()
                ),
            });
        }
        if entry.weights.iter().chain(&entry.bias).any(|v| !v.is_finite()) {
            return Err(NetworkError::format(format!("non-finite value in {name}")));
        }
        let max_mag = entry
            .weights
            .iter()
            .chain(&entry.bias)
            .fold(0f32, |acc, v| acc.max(v.abs()));
        let (weights, bias, rescale) = if max_mag > 1.0 {
            let inv = 1.0 / max_mag;
            (
                entry.weights.iter().map(|w| w * inv).collect(),
                entry.bias.iter().map(|b| b * inv).collect(),
                max_mag as f64,
            )
        } else {
            (entry.weights.clone(), entry.bias.clone(), 1.0)
        };
        layers.push(LayerWeights {
            weights,
            bias,
            rescale,
        });
    }
    Ok(WeightSet {
        name: manifest.name,
        activation,
        reference_test_error: manifest.reference_test_error,
        layers,
    })
}

/// Serialize a weight set back to manifest form (stored values, i.e. after
/// any load-time rescaling).
pub fn save_weights(set: &WeightSet, topology: &NetworkTopology, path: &Path) -> Result<()> {
    let layers = set
        .layers
        .iter()
        .zip(&topology.layers)
        .map(|(lw, spec)| {
            let mut entry = LayerManifest {
                kind: spec.kind_name().to_string(),
                filters: None,
                in_channels: None,
                kernel: None,
                units: None,
                inputs: None,
                weights: lw.weights.clone(),
                bias: lw.bias.clone(),
            };
            match spec {
                crate::topology::LayerSpec::ConvPool {
                    in_channels,
                    filters,
                    kernel,
                    ..
                } => {
                    entry.filters = Some(*filters);
                    entry.in_channels = Some(*in_channels);
                    entry.kernel = Some(*kernel);
                }
                crate::topology::LayerSpec::FullyConnected { inputs, units }
                | crate::topology::LayerSpec::Output { inputs, units } => {
                    entry.inputs = Some(*inputs);
                    entry.units = Some(*units);
                }
            }
            entry
        })
        .collect();
    let manifest = WeightManifest {
        name: set.name.clone(),
        activation: set.activation.name().to_string(),
        reference_test_error: set.reference_test_error,
        layers,
    };
    let data = serde_json::to_vec(&manifest)
        .map_err(|e| NetworkError::format(format!("manifest encode error: {e}")))?;
    std::fs::write(path, data).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}
