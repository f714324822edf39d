//! FSM-based stochastic neurons.
//!
//! Three neuron designs share one datapath shape: XNOR products, exact
//! parallel counting per convolution block, q-to-1 average pooling into a
//! saturating counter, and threshold output logic. They differ in boundary
//! state and in whether a history register compensates negative values.
//! Each design sits behind [`NeuronDesign`] and is registered by name, so
//! callers select one at runtime.

mod logistic_relu;
mod reference;
mod tanh;

pub use logistic_relu::{
    evaluate_steps_without_compensation, sc_logistic_relu_neuron, HistoryTracker,
    ScLogisticNeuron, ScReluNeuron,
};
pub use reference::{fixed_point, reference_activation, reference_neuron, ValueNeuron};
pub use tanh::{sc_tanh_neuron, ScTanhNeuron};

use crate::bitstream::{BitStream, Format};
use crate::error::{Error, Result};
use crate::primitives::ColumnCounter;

/// Which activation a neuron approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Tanh,
    Logistic,
    Relu,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Logistic => "logistic",
            ActivationKind::Relu => "relu",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(ActivationKind::Tanh),
            "logistic" => Some(ActivationKind::Logistic),
            "relu" => Some(ActivationKind::Relu),
            _ => None,
        }
    }

    /// The registered design implementing this activation.
    pub fn design(self) -> &'static dyn NeuronDesign {
        match self {
            ActivationKind::Tanh => &ScTanhNeuron,
            ActivationKind::Logistic => &ScLogisticNeuron,
            ActivationKind::Relu => &ScReluNeuron,
        }
    }
}

impl std::fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// All registered neuron designs.
pub fn designs() -> &'static [&'static dyn NeuronDesign] {
    &[&ScTanhNeuron, &ScLogisticNeuron, &ScReluNeuron]
}

/// Look a neuron design up by its registry name.
pub fn design_named(name: &str) -> Option<&'static dyn NeuronDesign> {
    designs().iter().copied().find(|d| d.name() == name)
}

/// One of the interchangeable neuron designs.
pub trait NeuronDesign: Send + Sync {
    fn kind(&self) -> ActivationKind;
    fn name(&self) -> &'static str {
        self.kind().name()
    }
    /// The software activation this design approximates.
    fn reference(&self, z: f64) -> f64;
    /// FSM boundary state for a given state count.
    fn boundary_state(&self, e: u32) -> u32;
    /// Run the full stream datapath.
    fn evaluate(&self, inputs: &NeuronInputs, config: &NeuronConfig) -> Result<BitStream>;
    /// Run the FSM on precomputed per-cycle block-sum totals
    /// (`steps[k]` is the sum of the q block outputs at cycle k).
    fn evaluate_steps(&self, steps: &[i32], config: &NeuronConfig) -> Result<BitStream>;
}

/// Static configuration of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronConfig {
    pub activation: ActivationKind,
    /// Input pairs per convolution block.
    pub n: usize,
    /// Pooling factor: blocks pooled q-to-1.
    pub q: usize,
    /// FSM state count; a multiple of 4 so both e/2 and e/4 are states.
    pub e: u32,
    /// History length for the compensated designs.
    pub alpha: usize,
    /// Stream length in bits.
    pub m: usize,
    /// Start the history at alternating bits instead of all zeros.
    pub neutral_history: bool,
}

pub const DEFAULT_ALPHA: usize = 16;
/// History registers live in one machine word.
pub const MAX_ALPHA: usize = 64;

impl NeuronConfig {
    pub fn new(activation: ActivationKind, n: usize, q: usize, e: u32, m: usize) -> Self {
        NeuronConfig {
            activation,
            n,
            q,
            e,
            alpha: DEFAULT_ALPHA,
            m,
            neutral_history: false,
        }
    }

    pub fn with_alpha(mut self, alpha: usize) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.e < 4 || self.e % 4 != 0 {
            return Err(Error::invalid(format!(
                "state count e must be a positive multiple of 4, got {}",
                self.e
            )));
        }
        if self.alpha < 2 || self.alpha % 2 != 0 || self.alpha > MAX_ALPHA {
            return Err(Error::invalid(format!(
                "history length alpha must be even, >= 2 and <= {MAX_ALPHA}, got {}",
                self.alpha
            )));
        }
        if self.n == 0 || self.q == 0 || self.m == 0 {
            return Err(Error::invalid("n, q and m must all be >= 1"));
        }
        Ok(())
    }
}

/// The q blocks of (input stream, weight stream) pairs feeding one neuron.
#[derive(Debug, Clone)]
pub struct NeuronInputs {
    pub blocks: Vec<NeuronBlock>,
}

#[derive(Debug, Clone)]
pub struct NeuronBlock {
    pub inputs: Vec<BitStream>,
    pub weights: Vec<BitStream>,
}

impl NeuronInputs {
    pub fn validate(&self, config: &NeuronConfig) -> Result<()> {
        if self.blocks.len() != config.q {
            return Err(Error::invalid(format!(
                "expected q = {} blocks, got {}",
                config.q,
                self.blocks.len()
            )));
        }
        for block in &self.blocks {
            if block.inputs.len() != config.n || block.weights.len() != config.n {
                return Err(Error::invalid(format!(
                    "expected n = {} pairs per block, got {} inputs / {} weights",
                    config.n,
                    block.inputs.len(),
                    block.weights.len()
                )));
            }
            for s in block.inputs.iter().chain(block.weights.iter()) {
                if s.format() != Format::Bipolar {
                    return Err(Error::invalid("neuron streams must be bipolar"));
                }
                if s.len() != config.m {
                    return Err(Error::LengthMismatch {
                        left: config.m,
                        right: s.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-cycle sum of all q block outputs: `steps[k] = Σ_j t_j[k]` where
/// `t_j = 2 * popcount(products of block j) - n`.
///
/// Products never cross blocks, so one column counter over all q*n product
/// streams gives the total directly.
pub fn pooled_step_sums(inputs: &NeuronInputs, config: &NeuronConfig) -> Result<Vec<i32>> {
    inputs.validate(config)?;
    let mut counter = ColumnCounter::new(config.m);
    for block in &inputs.blocks {
        for (x, w) in block.inputs.iter().zip(block.weights.iter()) {
            counter.add_xnor(x.words(), w.words());
        }
    }
    Ok(counter.bipolar_sums())
}

/// Saturating FSM counter shared by the neuron designs.
///
/// Algorithm state is the rational S of the pseudocode scaled by q: adding a
/// block-sum total advances S by total/q without truncation loss, and the
/// clamp and threshold comparisons scale with it. For q = 1 this is exactly
/// the integer counter.
pub(crate) struct SaturatedCounter {
    scaled: i64,
    top: i64,
    bound: i64,
}

impl SaturatedCounter {
    pub(crate) fn new(e: u32, boundary_state: u32, q: usize) -> Self {
        let q = q as i64;
        let bound = q * boundary_state as i64;
        SaturatedCounter {
            scaled: bound, // S starts at the boundary state
            top: q * (e as i64 - 1),
            bound,
        }
    }

    /// Advance by one cycle's block-sum total; returns the output bit.
    ///
    /// The comparison is inclusive (z = 1 iff S >= S_bound): exactly half
    /// the states emit 1 for a boundary of e/2 and exactly three quarters
    /// for e/4, which keeps the tanh output centered on 0 and the logistic
    /// midpoint on 0.5.
    #[inline]
    pub(crate) fn update(&mut self, block_sum_total: i32) -> bool {
        self.scaled = (self.scaled + block_sum_total as i64).clamp(0, self.top);
        debug_assert!(
            (0..=self.top).contains(&self.scaled),
            "counter left its state range"
        );
        self.scaled >= self.bound
    }
}
