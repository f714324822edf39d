//! The hyperbolic-tangent neuron: XNOR products, parallel-counter block
//! sums, q-to-1 pooling into a saturating counter, threshold output.

use super::{pooled_step_sums, ActivationKind, NeuronConfig, NeuronDesign, NeuronInputs, SaturatedCounter};
use crate::bitstream::{BitStream, Format};
use crate::error::{Error, Result};

/// Tanh neuron design: boundary state e/2, no compensation.
pub struct ScTanhNeuron;

impl NeuronDesign for ScTanhNeuron {
    fn kind(&self) -> ActivationKind {
        ActivationKind::Tanh
    }

    fn reference(&self, z: f64) -> f64 {
        z.tanh()
    }

    fn boundary_state(&self, e: u32) -> u32 {
        e / 2
    }

    fn evaluate(&self, inputs: &NeuronInputs, config: &NeuronConfig) -> Result<BitStream> {
        let steps = pooled_step_sums(inputs, config)?;
        self.evaluate_steps(&steps, config)
    }

    fn evaluate_steps(&self, steps: &[i32], config: &NeuronConfig) -> Result<BitStream> {
        config.validate()?;
        if config.activation != ActivationKind::Tanh {
            return Err(Error::invalid("config is not a tanh neuron"));
        }
        if steps.len() != config.m {
            return Err(Error::LengthMismatch {
                left: config.m,
                right: steps.len(),
            });
        }
        let mut counter = SaturatedCounter::new(config.e, self.boundary_state(config.e), config.q);
        let mut out = BitStream::zeros(config.m, Format::Bipolar)?;
        for (k, &total) in steps.iter().enumerate() {
            if counter.update(total) {
                out.set_bit(k, true);
            }
        }
        Ok(out)
    }
}

/// Evaluate a tanh neuron on explicit streams.
pub fn sc_tanh_neuron(inputs: &NeuronInputs, config: &NeuronConfig) -> Result<BitStream> {
    ScTanhNeuron.evaluate(inputs, config)
}

#[cfg(test)]
mod tests {
    use super::super::tests::random_inputs;
    use super::*;
    use crate::bitstream::decode;

    #[test]
    fn saturates_positive_and_negative() {
        let cfg = NeuronConfig::new(ActivationKind::Tanh, 4, 2, 16, 512);
        let all_ones = random_inputs(3, &cfg, |_, _, _| 1.0);
        let out = sc_tanh_neuron(&all_ones, &cfg).unwrap();
        let transient = cfg.e as f64 / (2.0 * cfg.m as f64);
        assert!(decode(&out) >= 1.0 - 2.0 * transient, "got {}", decode(&out));

        // inputs +1, weights -1: every product is -1
        let negated = random_inputs(3, &cfg, |_, _, is_weight| if is_weight { -1.0 } else { 1.0 });
        let out = sc_tanh_neuron(&negated, &cfg).unwrap();
        assert!(decode(&out) <= -1.0 + 2.0 * transient, "got {}", decode(&out));
    }

    #[test]
    fn literal_per_cycle_datapath_matches() {
        // the streamed engine against a direct transcription of the
        // per-cycle pseudocode, on a q = 1 configuration (integer counter)
        let cfg = NeuronConfig::new(ActivationKind::Tanh, 5, 1, 8, 257);
        let inputs = random_inputs(17, &cfg, |j, i, w| {
            (((j + 3 * i + usize::from(w) * 5) % 11) as f64 / 5.0 - 1.0).clamp(-1.0, 1.0)
        });
        let fast = sc_tanh_neuron(&inputs, &cfg).unwrap();

        let mut s: i64 = (cfg.e / 2) as i64;
        let block = &inputs.blocks[0];
        for k in 0..cfg.m {
            let mut ones = 0i64;
            for (x, w) in block.inputs.iter().zip(&block.weights) {
                if !(x.bit(k) ^ w.bit(k)) {
                    ones += 1;
                }
            }
            s += 2 * ones - cfg.n as i64;
            s = s.clamp(0, cfg.e as i64 - 1);
            assert_eq!(fast.bit(k), s >= (cfg.e / 2) as i64, "cycle {k}");
        }
    }

    #[test]
    fn rejects_mismatched_config() {
        let cfg = NeuronConfig::new(ActivationKind::Relu, 2, 1, 8, 16);
        assert!(ScTanhNeuron.evaluate_steps(&[0; 16], &cfg).is_err());
        let cfg = NeuronConfig::new(ActivationKind::Tanh, 2, 1, 8, 16);
        assert!(ScTanhNeuron.evaluate_steps(&[0; 8], &cfg).is_err());
    }
}
