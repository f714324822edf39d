//! Stochastic number generation.
//!
//! Every logical stream owns one generator. A generator is a uniform draw
//! source compared against a threshold each cycle, which is how hardware
//! SNGs work: an RNG register plus a comparator. Three interchangeable draw
//! sources are registered here:
//!
//! * `lfsr` — maximal-length LFSR of width `ceil(log2 m) + 4`, the default;
//! * `counter-comparator` — scrambled bit-reversed counter, a deterministic
//!   balanced source useful in tests;
//! * `splittable` — SplitMix64, a fast software PRNG.
//!
//! Seeds for the streams of a larger computation are derived from one master
//! seed by hashing the stream's role and coordinates, so any run is
//! reproducible bit for bit while distinct streams stay statistically
//! independent.

/// SplitMix64 step; also the seed-derivation hash.
#[inline]
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(h: u64, v: u64) -> u64 {
    let mut s = h ^ v.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut s)
}

/// What a derived stream is for; part of the seed so roles never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Input,
    Weight,
    Select,
    CorpusInput,
    CorpusWeight,
}

/// Deterministically derive the seed for one logical stream from a master
/// seed and the stream's coordinates.
pub fn derive_stream_seed(master: u64, role: StreamRole, layer: u32, unit: u32, tap: u32) -> u64 {
    let mut h = mix(master, 0x5EED_0F_5EED);
    h = mix(h, role as u64 + 1);
    h = mix(h, layer as u64);
    h = mix(h, unit as u64);
    h = mix(h, tap as u64);
    h
}

// ── Draw sources ────────────────────────────────────────────────────────────

/// A uniform integer source feeding the encoding comparator.
pub trait DrawSource {
    /// Next draw, uniform over `[0, modulus())`.
    fn next_draw(&mut self) -> u64;
    /// Number of distinct draw values.
    fn modulus(&self) -> u64;
}

/// Fibonacci tap sets for maximal-length LFSRs, widths 4..=24.
/// Each entry is verified to have period `2^w - 1` by a unit test.
const LFSR_TAPS: [&[u32]; 21] = [
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
];

pub const LFSR_MIN_WIDTH: u32 = 4;
pub const LFSR_MAX_WIDTH: u32 = 24;

/// Tap mask for `width`, choosing the tabulated polynomial or its reciprocal.
/// The reciprocal of a maximal polynomial is maximal too, which doubles the
/// polynomial pool and lowers the chance that two derived streams land on
/// overlapping sequence phases.
fn lfsr_tap_mask(width: u32, reciprocal: bool) -> u64 {
    let taps = LFSR_TAPS[(width - LFSR_MIN_WIDTH) as usize];
    let mut mask = 0u64;
    if reciprocal {
        mask |= 1 << (width - 1);
        for &t in taps.iter().filter(|&&t| t != width) {
            mask |= 1 << (width - t - 1);
        }
    } else {
        for &t in taps {
            mask |= 1 << (t - 1);
        }
    }
    mask
}

/// Per-seed bijection on `width` bits: odd multiplies and xor-shifts.
///
/// Raw comparator sources have heavy structure across cycles (a shift
/// register re-uses all but one state bit; a counter's top reversed bit
/// alternates), and that structure both skews FSMs that integrate the
/// stream and phase-locks streams sharing a clock. Passing the raw value
/// through a seed-specific bijection removes both while visiting every
/// value exactly once per period, so full-period ones counts stay exact.
/// Zero maps to zero, which keeps nonzero LFSR states nonzero.
#[derive(Clone, Copy)]
struct BitMixer {
    mask: u64,
    half: u32,
    mul1: u64,
    mul2: u64,
}

impl BitMixer {
    fn from_seed(h: &mut u64, width: u32) -> Self {
        let mask = (1u64 << width) - 1;
        BitMixer {
            mask,
            half: width.div_ceil(2),
            mul1: (splitmix64(h) & mask) | 1,
            mul2: (splitmix64(h) & mask) | 1,
        }
    }

    #[inline]
    fn apply(&self, mut x: u64) -> u64 {
        x ^= x >> self.half;
        x = x.wrapping_mul(self.mul1) & self.mask;
        x ^= x >> self.half;
        x = x.wrapping_mul(self.mul2) & self.mask;
        x ^= x >> self.half;
        x
    }
}

/// Maximal-length Fibonacci LFSR behind a per-seed output mixer.
pub struct Lfsr {
    state: u64,
    taps: u64,
    width: u32,
    mixer: BitMixer,
}

impl Lfsr {
    pub fn new(seed: u64, width: u32) -> Self {
        assert!(
            (LFSR_MIN_WIDTH..=LFSR_MAX_WIDTH).contains(&width),
            "unsupported LFSR width {width}"
        );
        let mut h = mix(seed, width as u64);
        let reciprocal = splitmix64(&mut h) & 1 == 1;
        let period = (1u64 << width) - 1;
        // any state in [1, 2^w - 1] is valid; 0 is the lock-up state
        let state = splitmix64(&mut h) % period + 1;
        let mixer = BitMixer::from_seed(&mut h, width);
        Lfsr {
            state,
            taps: lfsr_tap_mask(width, reciprocal),
            width,
            mixer,
        }
    }

    #[inline]
    fn step(&mut self) -> u64 {
        let fb = (self.state & self.taps).count_ones() as u64 & 1;
        self.state = ((self.state << 1) | fb) & ((1u64 << self.width) - 1);
        self.state
    }
}

impl DrawSource for Lfsr {
    #[inline]
    fn next_draw(&mut self) -> u64 {
        let s = self.step();
        self.mixer.apply(s) - 1
    }

    fn modulus(&self) -> u64 {
        (1u64 << self.width) - 1
    }
}

/// Scrambled counter-comparator: a deterministic counter behind the
/// bit-reversal and a per-seed mixer.
///
/// Exactly balanced over its full period and reproducible from the seed
/// alone. For the strictly evenly-spread encoding of a single value use
/// `encode_exact`; this source exists as the deterministic generator kind,
/// and the mixer keeps streams with distinct seeds free of the phase lock
/// a shared counter clock would otherwise impose.
pub struct CounterComparator {
    counter: u64,
    stride: u64,
    width: u32,
    mixer: BitMixer,
}

impl CounterComparator {
    pub fn new(seed: u64, width: u32) -> Self {
        let mut h = mix(seed, 0xC0);
        let counter = splitmix64(&mut h);
        // odd stride: a bijection over the 2^w counter values, and distinct
        // strides stop streams sharing one global phase
        let stride = splitmix64(&mut h) | 1;
        let mixer = BitMixer::from_seed(&mut h, width);
        CounterComparator {
            counter,
            stride,
            width,
            mixer,
        }
    }
}

impl DrawSource for CounterComparator {
    #[inline]
    fn next_draw(&mut self) -> u64 {
        let v = self.counter & ((1u64 << self.width) - 1);
        self.counter = self.counter.wrapping_add(self.stride);
        self.mixer.apply(v.reverse_bits() >> (64 - self.width))
    }

    fn modulus(&self) -> u64 {
        1u64 << self.width
    }
}

/// SplitMix64 draw source with 48-bit draws.
pub struct SplittableProng {
    state: u64,
}

impl SplittableProng {
    pub fn new(seed: u64) -> Self {
        SplittableProng {
            state: mix(seed, 0x5B1717AB1E),
        }
    }
}

impl DrawSource for SplittableProng {
    #[inline]
    fn next_draw(&mut self) -> u64 {
        splitmix64(&mut self.state) >> 16
    }

    fn modulus(&self) -> u64 {
        1u64 << 48
    }
}

// ── Generator front end ─────────────────────────────────────────────────────

/// Which draw source a generator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Lfsr { width: u32 },
    CounterComparator,
    SplittableProng,
}

impl GeneratorKind {
    /// Default hardware choice: LFSR sized for streams of length `m`.
    pub fn lfsr_for_len(m: usize) -> Self {
        GeneratorKind::Lfsr {
            width: lfsr_width_for_len(m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Lfsr { .. } => "lfsr",
            GeneratorKind::CounterComparator => "counter-comparator",
            GeneratorKind::SplittableProng => "splittable",
        }
    }

    /// Look a kind up by registry name, sizing widths for streams of
    /// length `m`.
    pub fn by_name(name: &str, m: usize) -> Option<Self> {
        match name {
            "lfsr" => Some(Self::lfsr_for_len(m)),
            "counter-comparator" => Some(GeneratorKind::CounterComparator),
            "splittable" => Some(GeneratorKind::SplittableProng),
            _ => None,
        }
    }

    /// Registered source names.
    pub fn names() -> &'static [&'static str] {
        &["lfsr", "counter-comparator", "splittable"]
    }

    fn build(self, seed: u64) -> Box<dyn DrawSource + Send> {
        match self {
            GeneratorKind::Lfsr { width } => Box::new(Lfsr::new(seed, width)),
            GeneratorKind::CounterComparator => Box::new(CounterComparator::new(seed, 24)),
            GeneratorKind::SplittableProng => Box::new(SplittableProng::new(seed)),
        }
    }
}

/// LFSR width rule: `ceil(log2 m) + 4`, clamped to the supported widths.
pub fn lfsr_width_for_len(m: usize) -> u32 {
    let ceil_log2 = if m <= 1 {
        0
    } else {
        64 - (m as u64 - 1).leading_zeros()
    };
    (ceil_log2 + 4).clamp(LFSR_MIN_WIDTH, LFSR_MAX_WIDTH)
}

/// Stateful pseudo-random source turning values into stream bits.
///
/// Single-owner mutable state: concurrent encoding wants one generator per
/// stream, which the seed-derivation scheme makes cheap.
pub struct StreamGenerator {
    seed: u64,
    kind: GeneratorKind,
    source: Box<dyn DrawSource + Send>,
}

impl StreamGenerator {
    pub fn new(seed: u64, kind: GeneratorKind) -> Self {
        StreamGenerator {
            seed,
            kind,
            source: kind.build(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// One Bernoulli(p) bit.
    #[inline]
    pub fn next_bit(&mut self, p: f64) -> bool {
        let threshold = (p * self.source.modulus() as f64).round() as u64;
        self.source.next_draw() < threshold
    }

    /// Uniform index in `[0, count)` by rejection sampling.
    pub fn next_index(&mut self, count: usize) -> usize {
        debug_assert!(count >= 1);
        let count = count as u64;
        let modulus = self.source.modulus();
        let limit = modulus - modulus % count;
        loop {
            let d = self.source.next_draw();
            if d < limit {
                return (d % count) as usize;
            }
        }
    }

    /// Fill `words` with `m` Bernoulli(p) bits, packed LSB-first.
    pub(crate) fn fill_bernoulli(&mut self, p: f64, m: usize, words: &mut [u64]) {
        let threshold = (p * self.source.modulus() as f64).round() as u64;
        for (word_idx, word) in words.iter_mut().enumerate() {
            let bits = (m - word_idx * 64).min(64);
            let mut w = 0u64;
            for bit in 0..bits {
                if self.source.next_draw() < threshold {
                    w |= 1u64 << bit;
                }
            }
            *word = w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::{decode, encode, Format};

    #[test]
    fn all_tabulated_polynomials_are_maximal() {
        for width in LFSR_MIN_WIDTH..=LFSR_MAX_WIDTH {
            for reciprocal in [false, true] {
                let taps = lfsr_tap_mask(width, reciprocal);
                let wmask = (1u64 << width) - 1;
                let mut state = 1u64;
                let mut period = 0u64;
                loop {
                    let fb = (state & taps).count_ones() as u64 & 1;
                    state = ((state << 1) | fb) & wmask;
                    period += 1;
                    if state == 1 {
                        break;
                    }
                    assert!(state != 0, "width {width} hit the lock-up state");
                    assert!(period <= wmask, "width {width} cycled early");
                }
                assert_eq!(
                    period, wmask,
                    "width {width} reciprocal={reciprocal} is not maximal"
                );
            }
        }
    }

    #[test]
    fn width_rule() {
        assert_eq!(lfsr_width_for_len(1), 4);
        assert_eq!(lfsr_width_for_len(16), 8);
        assert_eq!(lfsr_width_for_len(1024), 14);
        assert_eq!(lfsr_width_for_len(4096), 16);
        assert_eq!(lfsr_width_for_len(1 << 30), 24);
    }

    fn correlation(a: &crate::bitstream::BitStream, b: &crate::bitstream::BitStream) -> f64 {
        let m = a.len() as f64;
        let pa = a.popcount() as f64 / m;
        let pb = b.popcount() as f64 / m;
        let both: u64 = a
            .words()
            .iter()
            .zip(b.words())
            .map(|(x, y)| (x & y).count_ones() as u64)
            .sum();
        let pab = both as f64 / m;
        let denom = (pa * (1.0 - pa) * pb * (1.0 - pb)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (pab - pa * pb) / denom
        }
    }

    #[test]
    fn distinct_seeds_are_independent_proxy() {
        // pairwise |rho| < 0.1 at m = 4096 for every registered source kind
        let m = 4096;
        for kind in [
            GeneratorKind::lfsr_for_len(m),
            GeneratorKind::CounterComparator,
            GeneratorKind::SplittableProng,
        ] {
            let streams: Vec<_> = (0..14u32)
                .map(|i| {
                    let seed = derive_stream_seed(2024, StreamRole::Weight, 1, i, 3);
                    let mut gen = StreamGenerator::new(seed, kind);
                    encode(0.4, m, Format::Bipolar, &mut gen).unwrap()
                })
                .collect();
            for i in 0..streams.len() {
                for j in (i + 1)..streams.len() {
                    let rho = correlation(&streams[i], &streams[j]);
                    assert!(
                        rho.abs() < 0.1,
                        "{kind:?}: |rho|={:.3} for pair ({i},{j})",
                        rho.abs()
                    );
                }
            }
        }
    }

    #[test]
    fn counter_comparator_stays_near_target_density() {
        for seed in [3u64, 19, 72] {
            let mut gen = StreamGenerator::new(seed, GeneratorKind::CounterComparator);
            let s = encode(0.25, 1024, Format::Unipolar, &mut gen).unwrap();
            let v = decode(&s);
            assert!((v - 0.25).abs() < 0.05, "seed {seed}: decoded {v}");
        }
    }

    #[test]
    fn next_index_is_uniform_enough() {
        let mut gen = StreamGenerator::new(11, GeneratorKind::lfsr_for_len(4096));
        let mut counts = [0usize; 5];
        for _ in 0..5000 {
            counts[gen.next_index(5)] += 1;
        }
        for &c in &counts {
            assert!((800..1200).contains(&c), "counts {counts:?}");
        }
    }

    #[test]
    fn derived_seeds_do_not_collide() {
        let mut seen = std::collections::HashSet::new();
        for layer in 0..4 {
            for unit in 0..50 {
                for tap in 0..30 {
                    for role in [StreamRole::Input, StreamRole::Weight] {
                        assert!(seen.insert(derive_stream_seed(1, role, layer, unit, tap)));
                    }
                }
            }
        }
    }
}
