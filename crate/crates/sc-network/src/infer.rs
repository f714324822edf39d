//! Floating-point and stochastic forward passes.
//!
//! The float path is the software baseline every stochastic run is compared
//! against. The stochastic path encodes the image and the weights as bipolar
//! streams, pushes them through XNOR products, exact parallel counting,
//! pooled FSM activations, and reads the final layer out of plain integer
//! accumulators.

use crate::error::{NetworkError, Result};
use crate::topology::{LayerSpec, NetworkTopology};
use crate::weights::WeightSet;
use sc_core::calibrate::{search_state_count, state_count_ceiling};
use sc_core::neuron::DEFAULT_ALPHA;
use sc_core::primitives::ColumnCounter;
use sc_core::{
    encode, BitStream, Format, GeneratorKind, NeuronConfig, StreamGenerator, StreamRole,
};

// ── Float path ───────────────────────────────────────────────────────────────

fn conv_pool_float(
    spec: &LayerSpec,
    weights: &crate::weights::LayerWeights,
    input: &[f64],
    activation: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let LayerSpec::ConvPool {
        in_channels,
        filters,
        kernel,
        in_size,
        pool_side,
    } = *spec
    else {
        unreachable!("conv_pool_float on a non-conv layer");
    };
    let conv_size = in_size - kernel + 1;
    let out_size = conv_size / pool_side;
    let row_len = in_channels * kernel * kernel;
    let mut out = vec![0.0; filters * out_size * out_size];
    for f in 0..filters {
        let w = weights.unit_row(f, row_len);
        let b = weights.bias[f] as f64;
        for py in 0..out_size {
            for px in 0..out_size {
                let mut pooled = 0.0;
                for dy in 0..pool_side {
                    for dx in 0..pool_side {
                        let (cy, cx) = (py * pool_side + dy, px * pool_side + dx);
                        let mut t = b;
                        for c in 0..in_channels {
                            for ky in 0..kernel {
                                let irow = (cy + ky) * in_size + cx;
                                let wrow = c * kernel * kernel + ky * kernel;
                                for kx in 0..kernel {
                                    t += input[c * in_size * in_size + irow + kx]
                                        * w[wrow + kx] as f64;
                                }
                            }
                        }
                        pooled += t;
                    }
                }
                out[f * out_size * out_size + py * out_size + px] =
                    activation(pooled / (pool_side * pool_side) as f64);
            }
        }
    }
    out
}

fn fc_float(
    weights: &crate::weights::LayerWeights,
    input: &[f64],
    units: usize,
    activation: impl Fn(f64) -> f64,
) -> Vec<f64> {
    (0..units)
        .map(|u| {
            let row = weights.unit_row(u, input.len());
            let z = weights.bias[u] as f64
                + row.iter().zip(input).map(|(&w, &x)| w as f64 * x).sum::<f64>();
            activation(z)
        })
        .collect()
}

/// Exact floating-point forward pass; returns the 10 class scores.
pub fn infer_float(
    topology: &NetworkTopology,
    weights: &WeightSet,
    image: &[f64],
) -> Result<Vec<f64>> {
    check_shapes(topology, weights, image)?;
    let act_kind = topology.activation;
    let act = move |z: f64| sc_core::reference_activation(act_kind, z);
    let mut current = image.to_vec();
    for (spec, lw) in topology.layers.iter().zip(&weights.layers) {
        current = match spec {
            LayerSpec::ConvPool { .. } => conv_pool_float(spec, lw, &current, act),
            LayerSpec::FullyConnected { units, .. } => fc_float(lw, &current, *units, act),
            LayerSpec::Output { units, .. } => fc_float(lw, &current, *units, |z| z),
        };
    }
    Ok(current)
}

/// Index of the largest score, lowest index on ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn check_shapes(topology: &NetworkTopology, weights: &WeightSet, image: &[f64]) -> Result<()> {
    topology.validate()?;
    if image.len() != topology.input_count {
        return Err(NetworkError::ShapeMismatch {
            layer: "input".into(),
            detail: format!(
                "image has {} values, topology wants {}",
                image.len(),
                topology.input_count
            ),
        });
    }
    if weights.layers.len() != topology.layers.len() {
        return Err(NetworkError::ShapeMismatch {
            layer: "weights".into(),
            detail: "layer count mismatch".into(),
        });
    }
    Ok(())
}

// ── Stream storage ───────────────────────────────────────────────────────────

struct StreamBank {
    words: Vec<u64>,
    words_per_stream: usize,
}

impl StreamBank {
    fn new(count: usize, m: usize) -> Self {
        let wps = m.div_ceil(64);
        StreamBank {
            words: vec![0; count * wps],
            words_per_stream: wps,
        }
    }

    #[inline]
    fn stream(&self, idx: usize) -> &[u64] {
        &self.words[idx * self.words_per_stream..(idx + 1) * self.words_per_stream]
    }

    fn set(&mut self, idx: usize, words: &[u64]) {
        let base = idx * self.words_per_stream;
        self.words[base..base + self.words_per_stream].copy_from_slice(words);
    }
}

// ── Shared per-neuron datapath ───────────────────────────────────────────────

/// Per-cycle block-sum totals of one pooled convolution neuron, computed on
/// the real stream banks (weight streams shared across the q blocks, input
/// streams shared across overlapping windows, exactly as the layer runs).
fn conv_neuron_steps(
    spec: &LayerSpec,
    inputs: &StreamBank,
    weights: &StreamBank,
    counter: &mut ColumnCounter,
    filter: usize,
    py: usize,
    px: usize,
) -> Vec<i32> {
    let LayerSpec::ConvPool {
        in_channels,
        kernel,
        in_size,
        pool_side,
        ..
    } = *spec
    else {
        unreachable!("conv_neuron_steps on a non-conv layer");
    };
    let n = spec.pairs_per_block();
    let wbase = filter * n;
    counter.reset();
    for dy in 0..pool_side {
        for dx in 0..pool_side {
            let (cy, cx) = (py * pool_side + dy, px * pool_side + dx);
            for c in 0..in_channels {
                for ky in 0..kernel {
                    let irow = c * in_size * in_size + (cy + ky) * in_size + cx;
                    let wrow = wbase + c * kernel * kernel + ky * kernel;
                    for kx in 0..kernel {
                        counter.add_xnor(inputs.stream(irow + kx), weights.stream(wrow + kx));
                    }
                }
            }
            // bias pair: the all-ones input leaves the weight stream as the
            // product
            counter.add_plane(weights.stream(wbase + n - 1));
        }
    }
    counter.bipolar_sums()
}

/// Per-cycle totals of one fully connected neuron.
fn fc_neuron_steps(
    n: usize,
    inputs: &StreamBank,
    weights: &StreamBank,
    counter: &mut ColumnCounter,
    unit: usize,
) -> Vec<i32> {
    let wbase = unit * n;
    counter.reset();
    for i in 0..n - 1 {
        counter.add_xnor(inputs.stream(i), weights.stream(wbase + i));
    }
    counter.add_plane(weights.stream(wbase + n - 1));
    counter.bipolar_sums()
}

/// Float pooled pre-activation of one convolution neuron.
fn conv_pooled_preact(
    spec: &LayerSpec,
    lw: &crate::weights::LayerWeights,
    input: &[f64],
    filter: usize,
    py: usize,
    px: usize,
) -> f64 {
    let LayerSpec::ConvPool {
        in_channels,
        kernel,
        in_size,
        pool_side,
        ..
    } = *spec
    else {
        unreachable!();
    };
    let row = lw.unit_row(filter, in_channels * kernel * kernel);
    let mut pooled = 0.0;
    for dy in 0..pool_side {
        for dx in 0..pool_side {
            let (cy, cx) = (py * pool_side + dy, px * pool_side + dx);
            let mut t = lw.bias[filter] as f64;
            for c in 0..in_channels {
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        t += input[c * in_size * in_size + (cy + ky) * in_size + cx + kx]
                            * row[c * kernel * kernel + ky * kernel + kx] as f64;
                    }
                }
            }
            pooled += t;
        }
    }
    pooled / (pool_side * pool_side) as f64
}

fn fc_preact(lw: &crate::weights::LayerWeights, input: &[f64], unit: usize) -> f64 {
    let row = lw.unit_row(unit, input.len());
    lw.bias[unit] as f64 + row.iter().zip(input).map(|(&w, &x)| w as f64 * x).sum::<f64>()
}


/// Deterministic weight stream: exactly round(p*m) ones spread evenly, then
/// cyclically rotated by a seed-derived phase. Static weight registers get
/// exact-popcount sequence generators in hardware, and the per-stream phase
/// keeps products of distinct streams uncorrelated.
fn rotated_exact_stream(value: f64, m: usize, seed: u64) -> Result<BitStream> {
    let base = sc_core::encode_exact(value, m, Format::Bipolar)?;
    let mut h = seed ^ 0xD07A7E;
    let rot = (uniform_pm1(&mut h) * 0.5 + 0.5 * 1.0) * m as f64;
    let rot = (rot as usize).min(m - 1);
    let bits: Vec<bool> = (0..m).map(|k| base.bit((k + rot) % m)).collect();
    Ok(BitStream::from_bits(&bits, Format::Bipolar)?)
}

// ── Stochastic path ──────────────────────────────────────────────────────────

/// Configuration of a stochastic network run.
#[derive(Debug, Clone, Copy)]
pub struct ScNetworkConfig {
    /// Stream length in bits.
    pub m: usize,
    /// History length for the compensated activations.
    pub alpha: usize,
    /// Master seed every stream seed derives from.
    pub master_seed: u64,
    /// Stream source kind.
    pub generator: GeneratorKind,
    /// Neuron instances per layer used when calibrating state counts.
    pub calibration_samples: usize,
}

impl ScNetworkConfig {
    pub fn new(m: usize, master_seed: u64) -> Self {
        ScNetworkConfig {
            m,
            alpha: DEFAULT_ALPHA,
            master_seed,
            generator: GeneratorKind::lfsr_for_len(m),
            calibration_samples: 160,
        }
    }
}

/// A LeNet-style network lowered onto the stochastic datapath: weight
/// streams generated once and shared across spatial positions and images,
/// per-layer FSM state counts calibrated against the loaded weights.
pub struct ScNetwork<'a> {
    topology: &'a NetworkTopology,
    weights: &'a WeightSet,
    config: ScNetworkConfig,
    layer_e: Vec<u32>,
    weight_banks: Vec<StreamBank>,
}

fn uniform_pm1(state: &mut u64) -> f64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    *state = z;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Calibrate one layer's FSM state count on the layer's true datapath
/// geometry. Probe input planes are encoded and wired exactly as the layer
/// runs (weight streams shared across the pooled blocks and across spatial
/// positions, input streams shared across overlapping receptive fields),
/// and the targets are the reference activation of the float pooled
/// pre-activation on the same plane, times the layer's recorded rescale.
pub fn calibrate_layer(
    topology: &NetworkTopology,
    weights: &WeightSet,
    layer_idx: usize,
    config: &ScNetworkConfig,
    probe_inputs: Option<&[Vec<f64>]>,
) -> Result<u32> {
    let net = ScNetwork::new(topology, weights, *config, None, probe_inputs)?;
    Ok(net.layer_e()[layer_idx])
}

fn synthetic_plane(state: &mut u64, len: usize) -> Vec<f64> {
    (0..len).map(|_| uniform_pm1(state)).collect()
}

impl<'a> ScNetwork<'a> {
    /// Build the stochastic network: generate the weight streams and, when
    /// no explicit state counts are given, calibrate each layer on probe
    /// planes (caller-supplied unlabeled inputs, or synthetic ones derived
    /// from the master seed).
    pub fn new(
        topology: &'a NetworkTopology,
        weights: &'a WeightSet,
        config: ScNetworkConfig,
        layer_e: Option<Vec<u32>>,
        probe_inputs: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        topology.validate()?;
        if weights.layers.len() != topology.layers.len() {
            return Err(NetworkError::ShapeMismatch {
                layer: "weights".into(),
                detail: "layer count mismatch".into(),
            });
        }
        let explicit = layer_e.is_some();
        let layer_e = match layer_e {
            Some(es) => {
                if es.len() != topology.layers.len() {
                    return Err(NetworkError::ShapeMismatch {
                        layer: "layer_e".into(),
                        detail: format!(
                            "{} state counts for {} layers",
                            es.len(),
                            topology.layers.len()
                        ),
                    });
                }
                for (idx, (&e, spec)) in es.iter().zip(&topology.layers).enumerate() {
                    let is_output = matches!(spec, LayerSpec::Output { .. });
                    if !is_output {
                        NeuronConfig::new(
                            topology.activation,
                            spec.pairs_per_block(),
                            spec.pooling(),
                            e,
                            config.m,
                        )
                        .with_alpha(config.alpha)
                        .validate()
                        .map_err(|e| NetworkError::format(format!("layer {idx}: {e}")))?;
                    }
                }
                es
            }
            None => vec![0; topology.layers.len()],
        };

        let mut net = ScNetwork {
            topology,
            weights,
            config,
            layer_e,
            weight_banks: Vec::new(),
        };
        net.generate_weight_streams()?;
        if !explicit {
            // in-situ calibration: each layer is calibrated on the stream
            // outputs the already-calibrated layers produce for the probe
            // planes, so stream autocorrelation and sharing effects are all
            // present in the corpus
            let float_planes = net.probe_planes(probe_inputs);
            let mut banks: Vec<StreamBank> = float_planes[0]
                .iter()
                .map(|plane| net.encode_image(plane))
                .collect::<Result<_>>()?;
            for idx in 0..topology.layers.len() {
                if matches!(topology.layers[idx], LayerSpec::Output { .. }) {
                    break;
                }
                net.layer_e[idx] = net.calibrate_layer_on_banks(idx, &banks, &float_planes[idx])?;
                let next: Result<Vec<StreamBank>> = banks
                    .iter()
                    .map(|bank| match topology.layers[idx] {
                        LayerSpec::ConvPool { .. } => net.run_conv_pool(idx, bank),
                        LayerSpec::FullyConnected { units, .. } => net.run_fc(idx, bank, units),
                        LayerSpec::Output { .. } => unreachable!(),
                    })
                    .collect();
                banks = next?;
            }
        }
        Ok(net)
    }

    /// Float input planes feeding each layer, for calibration: the given
    /// probe inputs (or synthetic uniform planes) pushed through the float
    /// forward pass.
    fn probe_planes(&self, probe_inputs: Option<&[Vec<f64>]>) -> Vec<Vec<Vec<f64>>> {
        const MAX_PLANES: usize = 8;
        let base: Vec<Vec<f64>> = match probe_inputs {
            Some(planes) => planes.iter().take(MAX_PLANES).cloned().collect(),
            None => {
                let mut state = self.config.master_seed ^ 0x9B0BE5;
                (0..MAX_PLANES)
                    .map(|_| synthetic_plane(&mut state, self.topology.input_count))
                    .collect()
            }
        };
        let act_kind = self.topology.activation;
        let act = move |z: f64| sc_core::reference_activation(act_kind, z);
        let mut per_layer = vec![base];
        for (idx, spec) in self.topology.layers.iter().enumerate() {
            if matches!(spec, LayerSpec::Output { .. }) {
                break;
            }
            let lw = &self.weights.layers[idx];
            let next: Vec<Vec<f64>> = per_layer[idx]
                .iter()
                .map(|plane| match spec {
                    LayerSpec::ConvPool { .. } => conv_pool_float(spec, lw, plane, act),
                    LayerSpec::FullyConnected { units, .. } => fc_float(lw, plane, *units, act),
                    LayerSpec::Output { .. } => unreachable!(),
                })
                .collect();
            per_layer.push(next);
        }
        per_layer
    }

    /// Calibrate one layer's state count: sample neurons, compute their
    /// per-cycle totals from the given input stream banks (the real
    /// datapath), and search for the state count whose decoded outputs best
    /// match the reference activation of the float pooled pre-activations.
    fn calibrate_layer_on_banks(
        &self,
        layer_idx: usize,
        banks: &[StreamBank],
        planes: &[Vec<f64>],
    ) -> Result<u32> {
        let spec = &self.topology.layers[layer_idx];
        let lw = &self.weights.layers[layer_idx];
        let design = self.topology.activation.design();
        let rescale = lw.rescale;
        let n = spec.pairs_per_block();
        let m = self.config.m;
        let samples = self.config.calibration_samples;

        let mut counter = ColumnCounter::new(m);
        let mut steps = Vec::with_capacity(samples);
        let mut pooled = Vec::with_capacity(samples);
        let mut scatter = self.config.master_seed ^ (layer_idx as u64).wrapping_mul(0xD15C0);
        match spec {
            LayerSpec::ConvPool { filters, .. } => {
                let out_size = spec.out_size();
                let neuron_count = filters * out_size * out_size;
                for s in 0..samples {
                    let plane_idx = s % banks.len();
                    let pick = (uniform_pm1(&mut scatter) * 0.5 + 0.5) * neuron_count as f64;
                    let pick = (pick as usize).min(neuron_count - 1);
                    let f = pick / (out_size * out_size);
                    let py = (pick / out_size) % out_size;
                    let px = pick % out_size;
                    steps.push(conv_neuron_steps(
                        spec,
                        &banks[plane_idx],
                        &self.weight_banks[layer_idx],
                        &mut counter,
                        f,
                        py,
                        px,
                    ));
                    pooled.push(conv_pooled_preact(spec, lw, &planes[plane_idx], f, py, px));
                }
            }
            LayerSpec::FullyConnected { units, .. } | LayerSpec::Output { units, .. } => {
                for s in 0..samples {
                    let plane_idx = s % banks.len();
                    let unit = (s / banks.len()) % units;
                    steps.push(fc_neuron_steps(
                        n,
                        &banks[plane_idx],
                        &self.weight_banks[layer_idx],
                        &mut counter,
                        unit,
                    ));
                    pooled.push(fc_preact(lw, &planes[plane_idx], unit));
                }
            }
        }
        let corpus = sc_core::calibrate::CalibrationCorpus {
            steps,
            pooled,
            n,
            q: spec.pooling(),
            m,
        };
        search_state_count(&corpus, design, self.config.alpha, state_count_ceiling(n), |z| {
            design.reference(rescale * z)
        })
        .map_err(NetworkError::from)
    }

    /// Calibrated (or supplied) state count per layer; 0 marks the plain
    /// accumulator output layer.
    pub fn layer_e(&self) -> &[u32] {
        &self.layer_e
    }

    pub fn config(&self) -> &ScNetworkConfig {
        &self.config
    }

    fn generate_weight_streams(&mut self) -> Result<()> {
        let m = self.config.m;
        self.weight_banks.clear();
        for (idx, (spec, lw)) in self
            .topology
            .layers
            .iter()
            .zip(&self.weights.layers)
            .enumerate()
        {
            let n = spec.pairs_per_block();
            let row_len = n - 1;
            let units = spec.bias_count();
            let mut bank = StreamBank::new(units * n, m);
            for unit in 0..units {
                let row = lw.unit_row(unit, row_len);
                for tap in 0..n {
                    let value = if tap == row_len {
                        lw.bias[unit] as f64
                    } else {
                        row[tap] as f64
                    };
                    let seed = sc_core::derive_stream_seed(
                        self.config.master_seed,
                        StreamRole::Weight,
                        idx as u32 + 1,
                        unit as u32,
                        tap as u32,
                    );
                    let stream = rotated_exact_stream(value, m, seed)?;
                    bank.set(unit * n + tap, stream.words());
                }
            }
            self.weight_banks.push(bank);
        }
        Ok(())
    }

    fn encode_image(&self, image: &[f64]) -> Result<StreamBank> {
        let m = self.config.m;
        let mut bank = StreamBank::new(image.len(), m);
        for (i, &value) in image.iter().enumerate() {
            let seed = sc_core::derive_stream_seed(
                self.config.master_seed,
                StreamRole::Input,
                0,
                i as u32,
                0,
            );
            let mut gen = StreamGenerator::new(seed, self.config.generator);
            let stream = encode(value, m, Format::Bipolar, &mut gen)?;
            bank.set(i, stream.words());
        }
        Ok(bank)
    }

    fn neuron_config(&self, layer_idx: usize) -> NeuronConfig {
        let spec = &self.topology.layers[layer_idx];
        NeuronConfig::new(
            self.topology.activation,
            spec.pairs_per_block(),
            spec.pooling(),
            self.layer_e[layer_idx],
            self.config.m,
        )
        .with_alpha(self.config.alpha)
    }

    fn run_conv_pool(&self, layer_idx: usize, prev: &StreamBank) -> Result<StreamBank> {
        let LayerSpec::ConvPool {
            in_channels,
            filters,
            kernel,
            in_size,
            pool_side,
        } = self.topology.layers[layer_idx]
        else {
            unreachable!()
        };
        let m = self.config.m;
        let spec = &self.topology.layers[layer_idx];
        let n = spec.pairs_per_block();
        let out_size = spec.out_size();
        let cfg = self.neuron_config(layer_idx);
        let design = self.topology.activation.design();
        let bank = &self.weight_banks[layer_idx];
        let mut out = StreamBank::new(filters * out_size * out_size, m);
        let mut counter = ColumnCounter::new(m);
        for f in 0..filters {
            for py in 0..out_size {
                for px in 0..out_size {
                    let steps = conv_neuron_steps(
                        &self.topology.layers[layer_idx],
                        prev,
                        bank,
                        &mut counter,
                        f,
                        py,
                        px,
                    );
                    let stream = design.evaluate_steps(&steps, &cfg)?;
                    out.set(f * out_size * out_size + py * out_size + px, stream.words());
                }
            }
        }
        let _ = (in_channels, kernel, in_size, pool_side, n);
        Ok(out)
    }

    fn run_fc(&self, layer_idx: usize, prev: &StreamBank, units: usize) -> Result<StreamBank> {
        let m = self.config.m;
        let spec = &self.topology.layers[layer_idx];
        let n = spec.pairs_per_block();
        let cfg = self.neuron_config(layer_idx);
        let design = self.topology.activation.design();
        let bank = &self.weight_banks[layer_idx];
        let mut out = StreamBank::new(units, m);
        let mut counter = ColumnCounter::new(m);
        for u in 0..units {
            let steps = fc_neuron_steps(n, prev, bank, &mut counter, u);
            let stream = design.evaluate_steps(&steps, &cfg)?;
            out.set(u, stream.words());
        }
        Ok(out)
    }

    fn run_output(&self, layer_idx: usize, prev: &StreamBank, units: usize) -> Vec<i64> {
        let m = self.config.m as i64;
        let spec = &self.topology.layers[layer_idx];
        let n = spec.pairs_per_block();
        let bank = &self.weight_banks[layer_idx];
        let tail = sc_core::bitstream::tail_mask(self.config.m);
        (0..units)
            .map(|u| {
                let wbase = u * n;
                let mut ones: i64 = 0;
                for i in 0..n - 1 {
                    let a = prev.stream(i);
                    let b = bank.stream(wbase + i);
                    let last = a.len() - 1;
                    for w in 0..a.len() {
                        let mut x = !(a[w] ^ b[w]);
                        if w == last {
                            x &= tail;
                        }
                        ones += x.count_ones() as i64;
                    }
                }
                for &w in bank.stream(wbase + n - 1) {
                    ones += w.count_ones() as i64;
                }
                // accumulated parallel-counter sums over all cycles
                2 * ones - n as i64 * m
            })
            .collect()
    }

    /// Stream outputs of the first `upto` layers (activation layers only).
    fn run_layers(&self, image: &[f64], upto: usize) -> Result<StreamBank> {
        let mut bank = self.encode_image(image)?;
        for idx in 0..upto {
            bank = match self.topology.layers[idx] {
                LayerSpec::ConvPool { .. } => self.run_conv_pool(idx, &bank)?,
                LayerSpec::FullyConnected { units, .. } => self.run_fc(idx, &bank, units)?,
                LayerSpec::Output { .. } => {
                    return Err(NetworkError::format(
                        "run_layers stops before the output layer",
                    ))
                }
            };
        }
        Ok(bank)
    }

    /// Decoded values of the streams leaving hidden layer `upto - 1`.
    pub fn layer_values(&self, image: &[f64], upto: usize) -> Result<Vec<f64>> {
        check_shapes(self.topology, self.weights, image)?;
        let bank = self.run_layers(image, upto)?;
        let count = self.topology.layers[upto - 1].output_count();
        let m = self.config.m;
        Ok((0..count)
            .map(|i| {
                let stream =
                    BitStream::from_words(bank.stream(i).to_vec(), m, Format::Bipolar).unwrap();
                sc_core::decode(&stream)
            })
            .collect())
    }

    /// Decoded values of the first hidden layer's output streams.
    pub fn layer1_values(&self, image: &[f64]) -> Result<Vec<f64>> {
        self.layer_values(image, 1)
    }

    /// Final class scores as accumulated counter sums.
    pub fn infer_scores(&self, image: &[f64]) -> Result<Vec<i64>> {
        check_shapes(self.topology, self.weights, image)?;
        let hidden = self.topology.layers.len() - 1;
        let bank = self.run_layers(image, hidden)?;
        let LayerSpec::Output { units, .. } = self.topology.layers[hidden] else {
            return Err(NetworkError::format("last layer must be the output layer"));
        };
        Ok(self.run_output(hidden, &bank, units))
    }

    /// Predicted class for one image.
    pub fn infer(&self, image: &[f64]) -> Result<usize> {
        let scores = self.infer_scores(image)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }
}
