//! The logistic and ReLU neurons.
//!
//! Both keep a shift-register history of the last alpha output bits and a
//! shadow counter delta holding the history popcount. A cycle whose history
//! sum predicts a negative current value (delta < alpha/2) emits a forced 1
//! as compensation and skips the datapath; otherwise the tanh datapath runs.
//! The logistic design moves the boundary state to e/4 so the output
//! midpoint sits at 0.5; ReLU keeps e/2.

use super::{pooled_step_sums, ActivationKind, NeuronConfig, NeuronDesign, NeuronInputs, SaturatedCounter};
use crate::bitstream::{BitStream, Format};
use crate::error::{Error, Result};

/// Last-alpha output bits plus their running popcount.
#[derive(Debug, Clone)]
pub struct HistoryTracker {
    bits: u64,
    len: usize,
    delta: u32,
}

impl HistoryTracker {
    /// All-zero start: the first alpha/2 cycles are forced compensation.
    pub fn zeros(alpha: usize) -> Self {
        debug_assert!((2..=super::MAX_ALPHA).contains(&alpha));
        HistoryTracker {
            bits: 0,
            len: alpha,
            delta: 0,
        }
    }

    /// Alternating-bit start with delta = alpha/2, for transient-sensitivity
    /// experiments.
    pub fn neutral(alpha: usize) -> Self {
        debug_assert!((2..=super::MAX_ALPHA).contains(&alpha));
        let mask = Self::mask(alpha);
        let bits = 0x5555_5555_5555_5555u64 & mask;
        HistoryTracker {
            bits,
            len: alpha,
            delta: bits.count_ones(),
        }
    }

    fn mask(alpha: usize) -> u64 {
        if alpha == 64 {
            u64::MAX
        } else {
            (1u64 << alpha) - 1
        }
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// Shift a new output bit in and drop the oldest.
    #[inline]
    pub fn push(&mut self, bit: bool) {
        let outgoing = (self.bits >> (self.len - 1)) & 1;
        self.bits = ((self.bits << 1) | bit as u64) & Self::mask(self.len);
        self.delta = self.delta + bit as u32 - outgoing as u32;
        debug_assert_eq!(
            self.delta,
            self.bits.count_ones(),
            "shadow counter departed from the history popcount"
        );
    }
}

fn run_compensated(
    steps: &[i32],
    config: &NeuronConfig,
    boundary_state: u32,
    bypass_compensation: bool,
) -> Result<BitStream> {
    config.validate()?;
    if steps.len() != config.m {
        return Err(Error::LengthMismatch {
            left: config.m,
            right: steps.len(),
        });
    }
    let mut counter = SaturatedCounter::new(config.e, boundary_state, config.q);
    let mut history = if config.neutral_history {
        HistoryTracker::neutral(config.alpha)
    } else {
        HistoryTracker::zeros(config.alpha)
    };
    let comp_threshold = (config.alpha / 2) as u32;
    let mut out = BitStream::zeros(config.m, Format::Bipolar)?;
    for (k, &total) in steps.iter().enumerate() {
        let z = if !bypass_compensation && history.delta() < comp_threshold {
            // negative value predicted: forced 1; the datapath is skipped
            // this cycle while the streams advance with the clock
            true
        } else {
            counter.update(total)
        };
        if !bypass_compensation {
            history.push(z);
        }
        if z {
            out.set_bit(k, true);
        }
    }
    Ok(out)
}

macro_rules! compensated_design {
    ($name:ident, $kind:expr, $boundary:expr, $reference:expr) => {
        pub struct $name;

        impl NeuronDesign for $name {
            fn kind(&self) -> ActivationKind {
                $kind
            }

            fn reference(&self, z: f64) -> f64 {
                $reference(z)
            }

            fn boundary_state(&self, e: u32) -> u32 {
                $boundary(e)
            }

            fn evaluate(&self, inputs: &NeuronInputs, config: &NeuronConfig) -> Result<BitStream> {
                let steps = pooled_step_sums(inputs, config)?;
                self.evaluate_steps(&steps, config)
            }

            fn evaluate_steps(&self, steps: &[i32], config: &NeuronConfig) -> Result<BitStream> {
                if config.activation != self.kind() {
                    return Err(Error::invalid(format!(
                        "config activation {} does not match the {} design",
                        config.activation,
                        self.name()
                    )));
                }
                run_compensated(steps, config, self.boundary_state(config.e), false)
            }
        }
    };
}

compensated_design!(
    ScLogisticNeuron,
    ActivationKind::Logistic,
    |e| e / 4,
    |z: f64| 1.0 / (1.0 + (-z).exp())
);

compensated_design!(
    ScReluNeuron,
    ActivationKind::Relu,
    |e| e / 2,
    |z: f64| if z > 0.0 { z } else { 0.0 }
);

/// Evaluate a logistic or ReLU neuron on explicit streams.
pub fn sc_logistic_relu_neuron(inputs: &NeuronInputs, config: &NeuronConfig) -> Result<BitStream> {
    match config.activation {
        ActivationKind::Logistic => ScLogisticNeuron.evaluate(inputs, config),
        ActivationKind::Relu => ScReluNeuron.evaluate(inputs, config),
        ActivationKind::Tanh => Err(Error::invalid(
            "sc_logistic_relu_neuron requires a logistic or relu config",
        )),
    }
}

/// The compensated datapath with compensation bypassed and the boundary
/// forced to e/2. Exists to check that the design then reduces cycle for
/// cycle to the tanh neuron.
pub fn evaluate_steps_without_compensation(
    steps: &[i32],
    config: &NeuronConfig,
) -> Result<BitStream> {
    run_compensated(steps, config, config.e / 2, true)
}
