//! The stochastic computing building blocks: XNOR multiplication, MUX and
//! parallel-counter addition, shift-based average pooling, and the
//! stream-input FSM tanh.

use crate::bitstream::{tail_mask, BitStream, Format};
use crate::error::{Error, Result};
use crate::sng::StreamGenerator;

fn require_bipolar(s: &BitStream, what: &str) -> Result<()> {
    if s.format() != Format::Bipolar {
        return Err(Error::invalid(format!("{what} must be a bipolar stream")));
    }
    Ok(())
}

fn require_same_len(a: &BitStream, b: &BitStream) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Bipolar multiplication: one XNOR gate per bit position.
///
/// With independent operand streams the output stream decodes to the product
/// of the operand values.
pub fn xnor_multiply(a: &BitStream, b: &BitStream) -> Result<BitStream> {
    require_bipolar(a, "xnor operand")?;
    require_bipolar(b, "xnor operand")?;
    require_same_len(a, b)?;
    let words: Vec<u64> = a
        .words()
        .iter()
        .zip(b.words())
        .map(|(&x, &y)| !(x ^ y))
        .collect();
    BitStream::from_words(words, a.len(), Format::Bipolar)
}

/// Scaled bipolar addition: each output bit copies one uniformly selected
/// input bit, so the output decodes to the mean of the input values.
///
/// The select source must be independent of every data stream; correlation
/// between select and data biases the sum.
pub fn mux_add(inputs: &[&BitStream], select: &mut StreamGenerator) -> Result<BitStream> {
    if inputs.len() < 2 {
        return Err(Error::invalid("mux_add needs at least 2 inputs"));
    }
    let m = inputs[0].len();
    for s in inputs {
        require_bipolar(s, "mux input")?;
        require_same_len(inputs[0], s)?;
    }
    let mut out = BitStream::zeros(m, Format::Bipolar)?;
    for k in 0..m {
        let idx = select.next_index(inputs.len());
        if inputs[idx].bit(k) {
            out.set_bit(k, true);
        }
    }
    Ok(out)
}

/// One cycle of parallel-counter output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParallelCounterOutput {
    /// Bipolar sum `2 * ones - n`, in `[-n, n]`.
    pub value: i32,
    /// Bit width of the hardware counter output.
    pub width: u32,
}

/// Exact parallel counter over the product bits of one cycle.
///
/// The counter interface is the plug-in point for approximate compressor
/// trees; this implementation is the exact popcount.
pub fn parallel_count(product_bits: &[bool]) -> ParallelCounterOutput {
    let n = product_bits.len();
    assert!(n >= 1, "parallel_count needs at least one input");
    let ones = product_bits.iter().filter(|&&b| b).count() as i32;
    let width = 64 - (n as u64).leading_zeros() + 1;
    ParallelCounterOutput {
        value: 2 * ones - n as i32,
        width,
    }
}

/// Column-wise ones counter over packed streams.
///
/// Accumulates product streams as bit planes so that the per-cycle counts of
/// `n` parallel bits come out of word-level logic instead of an `n * m` bit
/// loop. Equivalent to running [`parallel_count`] at every cycle, which is
/// exactly how the tests check it.
pub struct ColumnCounter {
    planes: Vec<Vec<u64>>,
    carry: Vec<u64>,
    words: usize,
    len: usize,
    added: usize,
}

impl ColumnCounter {
    pub fn new(len: usize) -> Self {
        let words = len.div_ceil(64);
        ColumnCounter {
            planes: Vec::new(),
            carry: vec![0; words],
            words,
            len,
            added: 0,
        }
    }

    pub fn added(&self) -> usize {
        self.added
    }

    /// Clear accumulated planes for reuse, keeping allocations.
    pub fn reset(&mut self) {
        for plane in &mut self.planes {
            plane.fill(0);
        }
        self.added = 0;
    }

    /// Add one packed bit plane (tail bits beyond `len` must be zero).
    pub fn add_plane(&mut self, plane: &[u64]) {
        debug_assert_eq!(plane.len(), self.words);
        self.carry.copy_from_slice(plane);
        self.ripple();
        self.added += 1;
    }

    /// XNOR two packed operands and add the product plane.
    pub fn add_xnor(&mut self, a: &[u64], b: &[u64]) {
        debug_assert_eq!(a.len(), self.words);
        debug_assert_eq!(b.len(), self.words);
        let tail = tail_mask(self.len);
        let last = self.words - 1;
        for i in 0..self.words {
            let mut w = !(a[i] ^ b[i]);
            if i == last {
                w &= tail;
            }
            self.carry[i] = w;
        }
        self.ripple();
        self.added += 1;
    }

    fn ripple(&mut self) {
        let mut level = 0;
        loop {
            let mut any = 0u64;
            if level == self.planes.len() {
                self.planes.push(vec![0; self.words]);
            }
            let plane = &mut self.planes[level];
            for (p, c) in plane.iter_mut().zip(self.carry.iter_mut()) {
                let new_carry = *p & *c;
                *p ^= *c;
                *c = new_carry;
                any |= new_carry;
            }
            if any == 0 {
                return;
            }
            level += 1;
        }
    }

    /// Per-cycle ones counts (length `len`).
    pub fn counts(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.len];
        for (l, plane) in self.planes.iter().enumerate() {
            for (w, &word) in plane.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out[w * 64 + b] += 1 << l;
                    bits &= bits - 1;
                }
            }
        }
        out
    }

    /// Per-cycle bipolar sums `2 * count - added`.
    pub fn bipolar_sums(&self) -> Vec<i32> {
        let n = self.added as i32;
        self.counts().into_iter().map(|c| 2 * c as i32 - n).collect()
    }
}

/// Average pooling as the hardware does it: add the block sums and drop the
/// low bits, which is floor division toward negative infinity (an arithmetic
/// right shift when `q` is a power of two).
pub fn average_pool(sums: &[i64], q: usize) -> Result<i64> {
    if q == 0 {
        return Err(Error::invalid("pooling factor q must be >= 1"));
    }
    let total: i64 = sums.iter().sum();
    Ok(total.div_euclid(q as i64))
}

/// FSM-based tanh over a stochastic input stream.
///
/// A saturating counter over `[0, e-1]` starts at `e/2`, moves up on input 1
/// and down on input 0, and emits 1 while the state is in the upper half.
/// For long streams the output decodes near `tanh((e/2) * x)`.
pub fn stanh(input: &BitStream, e: u32) -> Result<BitStream> {
    if e < 2 || e % 2 != 0 {
        return Err(Error::invalid(format!(
            "stanh state count must be even and >= 2, got {e}"
        )));
    }
    require_bipolar(input, "stanh input")?;
    let top = (e - 1) as i64;
    let threshold = (e / 2) as i64; // states e/2 .. e-1 emit 1
    let mut state = threshold;
    let mut out = BitStream::zeros(input.len(), Format::Bipolar)?;
    for k in 0..input.len() {
        state += if input.bit(k) { 1 } else { -1 };
        state = state.clamp(0, top);
        if state >= threshold {
            out.set_bit(k, true);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::{decode, encode, Format};
    use crate::sng::{derive_stream_seed, GeneratorKind, StreamGenerator, StreamRole};
    use proptest::prelude::*;

    fn bip(bits: &str) -> BitStream {
        BitStream::from_str_bits(bits, Format::Bipolar).unwrap()
    }

    #[test]
    fn xnor_identity_and_negation() {
        let ones = BitStream::ones(5, Format::Bipolar).unwrap();
        let b = bip("10110");
        let c = xnor_multiply(&ones, &b).unwrap();
        assert_eq!(c, b);

        let zeros = BitStream::zeros(5, Format::Bipolar).unwrap();
        let c = xnor_multiply(&zeros, &b).unwrap();
        assert_eq!(c, bip("01001"));
        assert!((decode(&c) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn xnor_monte_carlo_quarter() {
        // 0.5 * 0.5 with independent seeds at m = 1024
        let mut sum = 0.0;
        let trials = 100;
        for i in 0..trials {
            let kind = GeneratorKind::lfsr_for_len(1024);
            let mut ga = StreamGenerator::new(
                derive_stream_seed(71, StreamRole::Input, 0, i, 0),
                kind,
            );
            let mut gb = StreamGenerator::new(
                derive_stream_seed(71, StreamRole::Weight, 0, i, 0),
                kind,
            );
            let a = encode(0.5, 1024, Format::Bipolar, &mut ga).unwrap();
            let b = encode(0.5, 1024, Format::Bipolar, &mut gb).unwrap();
            let c = xnor_multiply(&a, &b).unwrap();
            // per-pair check against the product of the decoded operands
            assert!((decode(&c) - decode(&a) * decode(&b)).abs() < 0.12);
            sum += decode(&c);
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.25).abs() < 0.06, "mean {mean}");
    }

    #[test]
    fn xnor_length_mismatch_is_error() {
        let a = bip("1011");
        let b = bip("10110");
        assert!(matches!(
            xnor_multiply(&a, &b),
            Err(Error::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn xnor_commutes(bits_a in proptest::collection::vec(any::<bool>(), 1..200),
                         bits_b in proptest::collection::vec(any::<bool>(), 1..200)) {
            let n = bits_a.len().min(bits_b.len());
            let a = BitStream::from_bits(&bits_a[..n], Format::Bipolar).unwrap();
            let b = BitStream::from_bits(&bits_b[..n], Format::Bipolar).unwrap();
            prop_assert_eq!(xnor_multiply(&a, &b).unwrap(), xnor_multiply(&b, &a).unwrap());
        }

        #[test]
        fn parallel_count_matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
            let out = parallel_count(&bits);
            let ones = bits.iter().filter(|&&b| b).count() as i32;
            prop_assert_eq!(out.value, 2 * ones - bits.len() as i32);
            // parity invariant: value ≡ n (mod 2)
            prop_assert_eq!(out.value.rem_euclid(2), (bits.len() as i32).rem_euclid(2));
        }

        #[test]
        fn column_counter_matches_per_cycle_parallel_count(
            n in 1usize..40, m in 1usize..150, seed in any::<u64>()
        ) {
            // bitsliced column sums against the per-cycle popcount oracle
            let kind = GeneratorKind::SplittableProng;
            let streams: Vec<(BitStream, BitStream)> = (0..n)
                .map(|i| {
                    let mut ga = StreamGenerator::new(
                        derive_stream_seed(seed, StreamRole::Input, 0, i as u32, 0), kind);
                    let mut gb = StreamGenerator::new(
                        derive_stream_seed(seed, StreamRole::Weight, 0, i as u32, 0), kind);
                    (
                        encode(0.3, m, Format::Bipolar, &mut ga).unwrap(),
                        encode(-0.4, m, Format::Bipolar, &mut gb).unwrap(),
                    )
                })
                .collect();
            let mut counter = ColumnCounter::new(m);
            for (a, b) in &streams {
                counter.add_xnor(a.words(), b.words());
            }
            let sums = counter.bipolar_sums();
            for k in 0..m {
                let bits: Vec<bool> = streams
                    .iter()
                    .map(|(a, b)| !(a.bit(k) ^ b.bit(k)))
                    .collect();
                prop_assert_eq!(sums[k], parallel_count(&bits).value);
            }
        }

        #[test]
        fn average_pool_is_floor_division(sums in proptest::collection::vec(-200i64..200, 1..8)) {
            let total: i64 = sums.iter().sum();
            let got = average_pool(&sums, 4).unwrap();
            prop_assert_eq!(got, (total as f64 / 4.0).floor() as i64);
            prop_assert_eq!(got, total >> 2); // arithmetic shift for q = 4
        }
    }

    #[test]
    fn parallel_count_examples() {
        let out = parallel_count(&[true, false, true, true]);
        assert_eq!(out.value, 2);
        assert_eq!(out.width, 4); // ceil(log2(5)) + 1
        assert_eq!(parallel_count(&[false; 16]).value, -16);
    }

    #[test]
    fn average_pool_examples() {
        assert_eq!(average_pool(&[3, 5, -2, 6], 4).unwrap(), 3);
        assert_eq!(average_pool(&[13], 4).unwrap(), 3);
        assert_eq!(average_pool(&[-1, 0, 0, 0], 4).unwrap(), -1);
        assert!(average_pool(&[1], 0).is_err());
    }

    #[test]
    fn mux_idempotent_and_saturating() {
        let kind = GeneratorKind::lfsr_for_len(64);
        let mut sel = StreamGenerator::new(5, kind);
        let s = bip("1011001110");
        let out = mux_add(&[&s, &s], &mut sel).unwrap();
        assert_eq!(out, s);

        let ones = BitStream::ones(128, Format::Bipolar).unwrap();
        let mut sel = StreamGenerator::new(6, kind);
        let out = mux_add(&[&ones, &ones, &ones, &ones], &mut sel).unwrap();
        assert_eq!(decode(&out), 1.0);

        let mut sel = StreamGenerator::new(7, kind);
        assert!(mux_add(&[&s], &mut sel).is_err());
    }

    #[test]
    fn mux_noisier_than_parallel_counter() {
        // 16 inputs encoding 0.5 at m = 1024: the MUX path shows more spread
        // than the parallel-counter path on identical inputs.
        let m = 1024;
        let kind = GeneratorKind::lfsr_for_len(m);
        let mut mux_errs = Vec::new();
        let mut apc_errs = Vec::new();
        for trial in 0..60u32 {
            let streams: Vec<BitStream> = (0..16u32)
                .map(|i| {
                    let mut g = StreamGenerator::new(
                        derive_stream_seed(90, StreamRole::Input, trial, i, 0),
                        kind,
                    );
                    encode(0.5, m, Format::Bipolar, &mut g).unwrap()
                })
                .collect();
            let refs: Vec<&BitStream> = streams.iter().collect();
            let mut sel = StreamGenerator::new(
                derive_stream_seed(90, StreamRole::Select, trial, 0, 0),
                kind,
            );
            let mux = mux_add(&refs, &mut sel).unwrap();
            mux_errs.push(decode(&mux) - 0.5);

            let mut counter = ColumnCounter::new(m);
            for s in &streams {
                counter.add_plane(s.words());
            }
            let total: i64 = counter.bipolar_sums().iter().map(|&t| t as i64).sum();
            let apc_mean = total as f64 / (16 * m) as f64;
            apc_errs.push(apc_mean - 0.5);
        }
        let rms = |v: &[f64]| (v.iter().map(|e| e * e).sum::<f64>() / v.len() as f64).sqrt();
        let (rm, ra) = (rms(&mux_errs), rms(&apc_errs));
        assert!(rm > ra, "mux rms {rm} <= apc rms {ra}");
    }

    #[test]
    fn stanh_saturates() {
        let e = 8;
        let m = 4096;
        let ones = BitStream::ones(m, Format::Bipolar).unwrap();
        let out = stanh(&ones, e).unwrap();
        assert!(decode(&out) >= 1.0 - (e as f64) / (2.0 * m as f64));
        let zeros = BitStream::zeros(m, Format::Bipolar).unwrap();
        let out = stanh(&zeros, e).unwrap();
        assert!(decode(&out) <= -1.0 + (e as f64) / (2.0 * m as f64));
    }

    #[test]
    fn stanh_tracks_tanh_law() {
        // decode(stanh(x)) ~ tanh((e/2) x); the FSM's exact stationary law
        // deviates most at e = 4 near |x| = 0.8, still inside 0.08.
        let m = 8192;
        for &e in &[4u32, 8] {
            for &x in &[-0.8, -0.4, 0.0, 0.4, 0.8] {
                let mut g = StreamGenerator::new(
                    derive_stream_seed(31, StreamRole::Input, e, (x * 10.0) as u32, 0),
                    GeneratorKind::lfsr_for_len(m),
                );
                let input = encode(x, m, Format::Bipolar, &mut g).unwrap();
                let out = decode(&stanh(&input, e).unwrap());
                let target = ((e as f64 / 2.0) * x).tanh();
                assert!(
                    (out - target).abs() <= 0.08,
                    "e={e} x={x}: got {out}, want {target}"
                );
            }
        }
    }

    #[test]
    fn stanh_halfway_point() {
        // e = 4, x = 0.5: decode near tanh(1.0) = 0.7616
        let m = 4096;
        let mut g = StreamGenerator::new(
            derive_stream_seed(32, StreamRole::Input, 0, 0, 0),
            GeneratorKind::lfsr_for_len(m),
        );
        let input = encode(0.5, m, Format::Bipolar, &mut g).unwrap();
        let out = decode(&stanh(&input, 4).unwrap());
        assert!((out - 1.0f64.tanh()).abs() <= 0.08, "got {out}");
    }

    #[test]
    fn stanh_rejects_odd_state_counts() {
        let s = bip("1010");
        assert!(stanh(&s, 0).is_err());
        assert!(stanh(&s, 5).is_err());
    }
}
