//! Network topology: layer shapes and the LeNet-5 construction.

use crate::error::{NetworkError, Result};
use sc_core::ActivationKind;

/// One layer of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Valid 2D convolution fused with square average pooling and the
    /// activation FSM. Every kernel connects to a k x k receptive field per
    /// input channel.
    ConvPool {
        in_channels: usize,
        filters: usize,
        kernel: usize,
        in_size: usize,
        pool_side: usize,
    },
    /// Fully connected layer with the activation FSM (pooling factor 1).
    FullyConnected { inputs: usize, units: usize },
    /// Final fully connected layer read out as plain accumulated sums.
    Output { inputs: usize, units: usize },
}

impl LayerSpec {
    /// Spatial size after the convolution (valid padding).
    pub fn conv_size(&self) -> usize {
        match self {
            LayerSpec::ConvPool {
                in_size, kernel, ..
            } => in_size - kernel + 1,
            _ => 0,
        }
    }

    /// Spatial size after pooling.
    pub fn out_size(&self) -> usize {
        match self {
            LayerSpec::ConvPool { pool_side, .. } => self.conv_size() / pool_side,
            _ => 0,
        }
    }

    /// Number of output values/streams the layer produces.
    pub fn output_count(&self) -> usize {
        match self {
            LayerSpec::ConvPool { filters, .. } => filters * self.out_size() * self.out_size(),
            LayerSpec::FullyConnected { units, .. } | LayerSpec::Output { units, .. } => *units,
        }
    }

    /// Input-and-weight pairs per convolution block, bias included.
    pub fn pairs_per_block(&self) -> usize {
        match self {
            LayerSpec::ConvPool {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel * kernel + 1,
            LayerSpec::FullyConnected { inputs, .. } | LayerSpec::Output { inputs, .. } => {
                inputs + 1
            }
        }
    }

    /// Pooling factor q (blocks pooled into one neuron).
    pub fn pooling(&self) -> usize {
        match self {
            LayerSpec::ConvPool { pool_side, .. } => pool_side * pool_side,
            _ => 1,
        }
    }

    /// Weight count excluding biases.
    pub fn weight_count(&self) -> usize {
        match self {
            LayerSpec::ConvPool {
                in_channels,
                filters,
                kernel,
                ..
            } => filters * in_channels * kernel * kernel,
            LayerSpec::FullyConnected { inputs, units } | LayerSpec::Output { inputs, units } => {
                inputs * units
            }
        }
    }

    pub fn bias_count(&self) -> usize {
        match self {
            LayerSpec::ConvPool { filters, .. } => *filters,
            LayerSpec::FullyConnected { units, .. } | LayerSpec::Output { units, .. } => *units,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::ConvPool { .. } => "conv",
            LayerSpec::FullyConnected { .. } => "fc",
            LayerSpec::Output { .. } => "fc",
        }
    }
}

/// Ordered layers plus the activation used by the hidden layers.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    pub layers: Vec<LayerSpec>,
    pub activation: ActivationKind,
    pub input_count: usize,
}

impl NetworkTopology {
    /// Layer-size signature: input count, then per conv layer the raw
    /// convolution count and the pooled count, then each fully connected
    /// width.
    pub fn signature(&self) -> Vec<usize> {
        let mut sig = vec![self.input_count];
        for layer in &self.layers {
            if let LayerSpec::ConvPool { filters, .. } = layer {
                sig.push(filters * layer.conv_size() * layer.conv_size());
            }
            sig.push(layer.output_count());
        }
        sig
    }

    /// Check that consecutive layer shapes compose.
    pub fn validate(&self) -> Result<()> {
        let mut current = self.input_count;
        for (idx, layer) in self.layers.iter().enumerate() {
            let expected_in = match layer {
                LayerSpec::ConvPool {
                    in_channels,
                    in_size,
                    ..
                } => in_channels * in_size * in_size,
                LayerSpec::FullyConnected { inputs, .. } | LayerSpec::Output { inputs, .. } => {
                    *inputs
                }
            };
            if expected_in != current {
                return Err(NetworkError::ShapeMismatch {
                    layer: format!("{} #{idx}", layer.kind_name()),
                    detail: format!("expects {expected_in} inputs, previous layer makes {current}"),
                });
            }
            current = layer.output_count();
        }
        Ok(())
    }
}

/// The LeNet-5 arrangement: two 5x5 convolution layers with 4-to-1 average
/// pooling (20 then 50 filters), a 500-unit fully connected layer, and a
/// 10-way output.
pub fn build_lenet5(activation: ActivationKind) -> NetworkTopology {
    let topology = NetworkTopology {
        layers: vec![
            LayerSpec::ConvPool {
                in_channels: 1,
                filters: 20,
                kernel: 5,
                in_size: 28,
                pool_side: 2,
            },
            LayerSpec::ConvPool {
                in_channels: 20,
                filters: 50,
                kernel: 5,
                in_size: 12,
                pool_side: 2,
            },
            LayerSpec::FullyConnected {
                inputs: 800,
                units: 500,
            },
            LayerSpec::Output {
                inputs: 500,
                units: 10,
            },
        ],
        activation,
        input_count: 784,
    };
    debug_assert_eq!(
        topology.signature(),
        vec![784, 11520, 2880, 3200, 800, 500, 10]
    );
    topology
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lenet5_signature() {
        let t = build_lenet5(ActivationKind::Tanh);
        assert_eq!(t.signature(), vec![784, 11520, 2880, 3200, 800, 500, 10]);
        t.validate().unwrap();
    }

    #[test]
    fn conv1_spatial_size() {
        let t = build_lenet5(ActivationKind::Tanh);
        assert_eq!(t.layers[0].conv_size(), 24); // 28 - 5 + 1
        assert_eq!(t.layers[0].out_size(), 12);
    }

    #[test]
    fn conv2_pair_count_composes() {
        // 2880 pooled outputs from layer 1 are 20 channels of 12x12; a conv2
        // neuron therefore connects to 20 * 5 * 5 = 500 inputs (plus bias)
        let t = build_lenet5(ActivationKind::Tanh);
        assert_eq!(t.layers[1].pairs_per_block(), 501);
        assert_eq!(t.layers[0].output_count(), 2880);
        assert_eq!(t.layers[1].output_count(), 800);
    }

    #[test]
    fn mismatched_layers_fail_validation() {
        let mut t = build_lenet5(ActivationKind::Relu);
        t.layers[2] = LayerSpec::FullyConnected {
            inputs: 799,
            units: 500,
        };
        assert!(t.validate().is_err());
    }
}
