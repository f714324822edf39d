//! Stochastic number representation: packed bit streams, encoding and decoding.
//!
//! A number is carried by the ones-density of a bit stream: unipolar streams
//! encode x in [0, 1] as P(bit = 1) = x, bipolar streams encode x in [-1, 1]
//! as P(bit = 1) = (x + 1) / 2. Streams are stored packed into `u64` words,
//! least significant bit first, and every operation works on whole words.

use crate::error::{Error, Result};
use crate::sng::StreamGenerator;

/// Stream encoding format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Unipolar,
    Bipolar,
}

impl Format {
    /// Encodable value range.
    pub fn range(self) -> (f64, f64) {
        match self {
            Format::Unipolar => (0.0, 1.0),
            Format::Bipolar => (-1.0, 1.0),
        }
    }

    /// Ones-probability that encodes `value`.
    pub fn probability(self, value: f64) -> f64 {
        match self {
            Format::Unipolar => value,
            Format::Bipolar => (value + 1.0) / 2.0,
        }
    }

    /// Value represented by a ones-fraction.
    pub fn value(self, ones_fraction: f64) -> f64 {
        match self {
            Format::Unipolar => ones_fraction,
            Format::Bipolar => 2.0 * ones_fraction - 1.0,
        }
    }
}

/// Clamp a value into the encodable range of `format`.
///
/// Encoding rejects out-of-range values; data-preparation code that wants
/// saturation must call this explicitly.
pub fn clamp_to_format(value: f64, format: Format) -> f64 {
    let (lo, hi) = format.range();
    value.clamp(lo, hi)
}

/// A packed stochastic bit stream.
///
/// Bit `k` lives in word `k / 64` at position `k % 64`. Unused tail bits of
/// the last word are always zero; every constructor and operation preserves
/// this so popcounts never need a final mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
    format: Format,
}

impl BitStream {
    /// Stream of `len` zeros.
    pub fn zeros(len: usize, format: Format) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("stream length must be >= 1"));
        }
        Ok(BitStream {
            words: vec![0; len.div_ceil(64)],
            len,
            format,
        })
    }

    /// Stream of `len` ones (encodes 1.0 in either format).
    pub fn ones(len: usize, format: Format) -> Result<Self> {
        let mut s = Self::zeros(len, format)?;
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.mask_tail();
        Ok(s)
    }

    /// Build from explicit bits, mostly for tests and displays.
    pub fn from_bits(bits: &[bool], format: Format) -> Result<Self> {
        let mut s = Self::zeros(bits.len(), format)?;
        for (k, &b) in bits.iter().enumerate() {
            if b {
                s.words[k / 64] |= 1u64 << (k % 64);
            }
        }
        Ok(s)
    }

    /// Parse a "10110"-style string.
    pub fn from_str_bits(bits: &str, format: Format) -> Result<Self> {
        let v: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("invalid stream character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_bits(&v, format)
    }

    /// Assemble from pre-packed words. Tail bits are masked off.
    pub fn from_words(mut words: Vec<u64>, len: usize, format: Format) -> Result<Self> {
        if len == 0 {
            return Err(Error::invalid("stream length must be >= 1"));
        }
        if words.len() != len.div_ceil(64) {
            return Err(Error::invalid("word count does not match stream length"));
        }
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Ok(BitStream { words, len, format })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false // length is always >= 1
    }

    pub fn format(&self) -> Format {
        self.format
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, k: usize) -> bool {
        debug_assert!(k < self.len);
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    pub fn set_bit(&mut self, k: usize, value: bool) {
        debug_assert!(k < self.len);
        let mask = 1u64 << (k % 64);
        if value {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter_bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |k| self.bit(k))
    }

    /// Mask covering the valid bits of the last word.
    pub(crate) fn mask_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }
}

/// Mask selecting the valid bits of the last word of a stream of `len` bits.
pub fn tail_mask(len: usize) -> u64 {
    let rem = len % 64;
    if rem == 0 {
        u64::MAX
    } else {
        (1u64 << rem) - 1
    }
}

/// A real value paired with the stream that carries it.
#[derive(Debug, Clone)]
pub struct EncodedValue {
    pub value: f64,
    pub stream: BitStream,
}

fn check_encode_args(value: f64, m: usize, format: Format) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("stream length m must be >= 1"));
    }
    let (lo, hi) = format.range();
    if !value.is_finite() || value < lo || value > hi {
        return Err(Error::OutOfRange { value, format });
    }
    Ok(())
}

/// Encode `value` as an `m`-bit stream, drawing each bit from `gen`.
///
/// The expected ones-fraction equals the format's encoding probability;
/// identical (seed, kind, value, m, format) always yields the identical
/// stream.
pub fn encode(value: f64, m: usize, format: Format, gen: &mut StreamGenerator) -> Result<BitStream> {
    check_encode_args(value, m, format)?;
    let p = format.probability(value);
    let mut s = BitStream::zeros(m, format)?;
    gen.fill_bernoulli(p, m, &mut s.words);
    s.mask_tail();
    Ok(s)
}

/// Deterministic low-discrepancy encoder: emits exactly `round(p*m)` ones
/// spread evenly across the stream.
pub fn encode_exact(value: f64, m: usize, format: Format) -> Result<BitStream> {
    check_encode_args(value, m, format)?;
    let p = format.probability(value);
    let ones = (p * m as f64).round() as u64;
    let mut s = BitStream::zeros(m, format)?;
    // Bresenham spreading: bit k set iff the running quota crosses an integer.
    let m64 = m as u64;
    for k in 0..m64 {
        if (k + 1) * ones / m64 > k * ones / m64 {
            s.words[(k / 64) as usize] |= 1u64 << (k % 64);
        }
    }
    Ok(s)
}

/// Convenience wrapper keeping the encoded value next to its stream.
pub fn encode_exact_value(value: f64, m: usize, format: Format) -> Result<EncodedValue> {
    Ok(EncodedValue {
        value,
        stream: encode_exact(value, m, format)?,
    })
}

/// Decode a stream back to the value it represents.
pub fn decode(stream: &BitStream) -> f64 {
    let fraction = stream.popcount() as f64 / stream.len() as f64;
    stream.format().value(fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sng::{derive_stream_seed, GeneratorKind, StreamGenerator, StreamRole};

    #[test]
    fn decode_paper_examples() {
        let s = BitStream::from_str_bits("10110", Format::Bipolar).unwrap();
        assert!((decode(&s) - 0.2).abs() < 1e-12);
        let u = BitStream::from_str_bits("01000", Format::Unipolar).unwrap();
        assert!((decode(&u) - 0.2).abs() < 1e-12);
        let z = BitStream::from_str_bits("00000", Format::Bipolar).unwrap();
        assert_eq!(decode(&z), -1.0);
    }

    #[test]
    fn encode_exact_popcounts() {
        // bipolar 0.2 at m=5: p = 0.6, 3 ones
        let s = encode_exact(0.2, 5, Format::Bipolar).unwrap();
        assert_eq!(s.popcount(), 3);
        // bipolar zero is half ones
        let s = encode_exact(0.0, 4, Format::Bipolar).unwrap();
        assert_eq!(s.popcount(), 2);
        // unipolar 0.5 at m=1024
        let s = encode_exact(0.5, 1024, Format::Unipolar).unwrap();
        assert_eq!(s.popcount(), 512);
    }

    #[test]
    fn encode_saturation_is_all_ones() {
        let mut gen = StreamGenerator::new(42, GeneratorKind::lfsr_for_len(8));
        let s = encode(1.0, 8, Format::Bipolar, &mut gen).unwrap();
        assert_eq!(s.popcount(), 8);
        assert_eq!(decode(&s), 1.0);
    }

    #[test]
    fn encode_unipolar_mean_density() {
        // 0.2 at m=5 carries a single one on average
        let mut ones = 0u64;
        let trials = 400;
        for seed in 0..trials {
            let mut gen = StreamGenerator::new(
                derive_stream_seed(9, StreamRole::Input, 0, seed, 0),
                GeneratorKind::lfsr_for_len(5),
            );
            ones += encode(0.2, 5, Format::Unipolar, &mut gen).unwrap().popcount();
        }
        let mean = ones as f64 / trials as f64;
        assert!((mean - 1.0).abs() < 0.15, "mean ones {mean}");
    }

    #[test]
    fn encode_monte_carlo_mean_converges() {
        // 0.2 bipolar at m=1024 over 200 independent seeds: mean within 0.02
        for kind in [
            GeneratorKind::lfsr_for_len(1024),
            GeneratorKind::CounterComparator,
            GeneratorKind::SplittableProng,
        ] {
            let mut sum = 0.0;
            for i in 0..200u32 {
                let seed = derive_stream_seed(1234, StreamRole::Input, 0, i, 0);
                let mut gen = StreamGenerator::new(seed, kind);
                sum += decode(&encode(0.2, 1024, Format::Bipolar, &mut gen).unwrap());
            }
            let mean = sum / 200.0;
            assert!((mean - 0.2).abs() < 0.02, "{kind:?}: mean {mean}");
        }
    }

    #[test]
    fn stochastic_consistency_standard_error() {
        // decode averaged over >= 100 seeds converges within 2*sqrt(1/(4m))
        for &m in &[64usize, 256, 1024] {
            for &x in &[-0.7, -0.2, 0.3, 0.9] {
                let mut sum = 0.0;
                for i in 0..100u32 {
                    let seed = derive_stream_seed(555, StreamRole::Input, 0, i, 0);
                    let mut gen = StreamGenerator::new(seed, GeneratorKind::lfsr_for_len(m));
                    sum += decode(&encode(x, m, Format::Bipolar, &mut gen).unwrap());
                }
                let mean = sum / 100.0;
                let bound = 2.0 * (1.0 / (4.0 * m as f64)).sqrt();
                assert!(
                    (mean - x).abs() <= bound,
                    "m={m} x={x}: mean {mean}, bound {bound}"
                );
            }
        }
    }

    #[test]
    fn encode_rejects_out_of_range_and_zero_length() {
        let mut gen = StreamGenerator::new(1, GeneratorKind::lfsr_for_len(16));
        assert!(matches!(
            encode(1.5, 16, Format::Bipolar, &mut gen),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            encode(-0.1, 16, Format::Unipolar, &mut gen),
            Err(Error::OutOfRange { .. })
        ));
        assert!(encode(0.5, 0, Format::Unipolar, &mut gen).is_err());
        assert!(encode_exact(2.0, 16, Format::Bipolar).is_err());
    }

    #[test]
    fn clamp_is_explicit() {
        assert_eq!(clamp_to_format(1.7, Format::Bipolar), 1.0);
        assert_eq!(clamp_to_format(-1.7, Format::Bipolar), -1.0);
        assert_eq!(clamp_to_format(-0.3, Format::Unipolar), 0.0);
        assert_eq!(clamp_to_format(0.3, Format::Unipolar), 0.3);
    }

    #[test]
    fn determinism_across_runs() {
        for kind in [
            GeneratorKind::lfsr_for_len(512),
            GeneratorKind::CounterComparator,
            GeneratorKind::SplittableProng,
        ] {
            let mut g1 = StreamGenerator::new(77, kind);
            let mut g2 = StreamGenerator::new(77, kind);
            let a = encode(0.37, 512, Format::Bipolar, &mut g1).unwrap();
            let b = encode(0.37, 512, Format::Bipolar, &mut g2).unwrap();
            assert_eq!(a, b);
        }
    }
}
