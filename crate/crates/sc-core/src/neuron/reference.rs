//! Floating-point and 8-bit fixed-point reference neurons.
//!
//! The float reference is the oracle for every inaccuracy measurement; the
//! fixed-point neuron exists only as an accuracy baseline for comparisons
//! against LUT-based binary hardware.

use super::ActivationKind;

/// The software activation function.
pub fn reference_activation(kind: ActivationKind, z: f64) -> f64 {
    match kind {
        ActivationKind::Tanh => z.tanh(),
        ActivationKind::Logistic => 1.0 / (1.0 + (-z).exp()),
        ActivationKind::Relu => z.max(0.0),
    }
}

/// A neuron instance as plain real vectors: q blocks of (inputs, weights).
#[derive(Debug, Clone)]
pub struct ValueNeuron {
    pub blocks: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ValueNeuron {
    /// Average-pooled inner product: `(Σ_j <x_j, w_j>) / q`.
    pub fn pooled_inner_product(&self) -> f64 {
        let total: f64 = self
            .blocks
            .iter()
            .map(|(x, w)| x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        total / self.blocks.len() as f64
    }
}

/// Exact float neuron: pooled inner product followed by the activation.
pub fn reference_neuron(values: &ValueNeuron, kind: ActivationKind) -> f64 {
    reference_activation(kind, values.pooled_inner_product())
}

/// 8-bit fixed-point reference: sign + 2 integer bits + 5 fraction bits.
pub mod fixed_point {
    use super::{reference_activation, ActivationKind, ValueNeuron};

    /// Q2.5: step 1/32, range [-4, 127/32].
    pub const FRACTION_BITS: u32 = 5;
    pub const SCALE: f64 = 32.0;

    /// Round to the nearest grid code (ties to even), saturating.
    pub fn quantize(x: f64) -> i8 {
        let code = (x * SCALE).round_ties_even();
        code.clamp(i8::MIN as f64, i8::MAX as f64) as i8
    }

    pub fn dequantize(code: i8) -> f64 {
        code as f64 / SCALE
    }

    /// 256-entry activation lookup table over pre-activation codes.
    pub struct ActivationLut {
        table: [i8; 256],
    }

    impl ActivationLut {
        pub fn new(kind: ActivationKind) -> Self {
            let mut table = [0i8; 256];
            for (i, slot) in table.iter_mut().enumerate() {
                let code = i as u8 as i8;
                *slot = quantize(reference_activation(kind, dequantize(code)));
            }
            ActivationLut { table }
        }

        pub fn lookup(&self, pre: i8) -> i8 {
            self.table[pre as u8 as usize]
        }
    }

    /// Fixed-point neuron: quantized inputs and weights, exact integer
    /// accumulation, saturating requantization of the pooled pre-activation,
    /// then the activation LUT. Overflow saturates rather than erroring.
    pub fn fixed_point_reference_neuron(values: &ValueNeuron, kind: ActivationKind) -> f64 {
        let lut = ActivationLut::new(kind);
        fixed_point_reference_neuron_with(values, &lut)
    }

    /// Same, with a caller-held LUT for corpus loops.
    pub fn fixed_point_reference_neuron_with(values: &ValueNeuron, lut: &ActivationLut) -> f64 {
        let q = values.blocks.len() as i64;
        // products of Q2.5 codes carry scale 32*32 = 1024
        let total: i64 = values
            .blocks
            .iter()
            .map(|(x, w)| {
                x.iter()
                    .zip(w)
                    .map(|(&a, &b)| quantize(a) as i64 * quantize(b) as i64)
                    .sum::<i64>()
            })
            .sum();
        // pooled pre-activation back on the 8-bit grid, saturating at ±4
        let pre_code = ((total as f64) / (SCALE * q as f64)).round_ties_even();
        let pre = pre_code.clamp(i8::MIN as f64, i8::MAX as f64) as i8;
        dequantize(lut.lookup(pre))
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_neuron() -> ValueNeuron {
        ValueNeuron {
            blocks: vec![(vec![0.0; 5], vec![0.3; 5]); 2],
        }
    }

    #[test]
    fn reference_trivial_points() {
        assert_eq!(reference_neuron(&zero_neuron(), ActivationKind::Tanh), 0.0);
        assert_eq!(reference_neuron(&zero_neuron(), ActivationKind::Logistic), 0.5);
        // inner-product average 0.3 passes through relu unchanged
        let v = ValueNeuron {
            blocks: vec![(vec![0.6], vec![0.5])],
        };
        assert!((reference_neuron(&v, ActivationKind::Relu) - 0.3).abs() < 1e-12);
        assert_eq!(reference_activation(ActivationKind::Relu, -2.0), 0.0);
    }

    #[test]
    fn pooled_inner_product_averages_blocks() {
        let v = ValueNeuron {
            blocks: vec![
                (vec![1.0, 1.0], vec![0.5, 0.25]),
                (vec![-1.0, 0.0], vec![0.25, 0.9]),
            ],
        };
        assert!((v.pooled_inner_product() - (0.75 - 0.25) / 2.0).abs() < 1e-12);
    }
}
