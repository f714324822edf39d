//! Bit-accurate simulation of stochastic-computing neural hardware.
//!
//! Numbers travel as the ones-density of pseudo-random bit streams;
//! multiplication is an XNOR gate, addition an exact parallel counter, and
//! nonlinear activation a saturating FSM reading the pooled counts. The
//! crate provides the packed stream type and its encoders, the hardware
//! primitives, three FSM neuron designs (tanh, logistic, relu) behind a
//! common trait, and the state-count calibration that tunes a neuron to its
//! input size.

pub mod bitstream;
pub mod calibrate;
pub mod error;
pub mod neuron;
pub mod primitives;
pub mod sng;

pub use bitstream::{
    clamp_to_format, decode, encode, encode_exact, encode_exact_value, BitStream, EncodedValue,
    Format,
};
pub use error::{Error, Result};
pub use neuron::{
    designs, design_named, fixed_point, reference_activation, reference_neuron,
    sc_logistic_relu_neuron, sc_tanh_neuron, ActivationKind, NeuronBlock, NeuronConfig,
    NeuronDesign, NeuronInputs, ValueNeuron,
};
pub use sng::{derive_stream_seed, GeneratorKind, StreamGenerator, StreamRole};
