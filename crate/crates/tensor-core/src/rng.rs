/// Deterministic pseudo-random generator used everywhere randomness is needed.
///
/// The generator is SplitMix64: the 64-bit state advances by the odd constant
/// `0x9E3779B97F4A7C15` and each output is the finalizer
///
/// ```text
/// z  = state
/// z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
/// z ^= z >> 27;  z *= 0x94D049BB133111EB
/// z ^= z >> 31
/// ```
///
/// Identical seeds yield identical streams on every platform. Derived values
/// are pinned as follows:
/// - `next_f64` maps the top 53 bits to `[0, 1)` via `(u >> 11) * 2^-53`.
/// - `next_below(n)` is the multiply-shift bound `(u * n) >> 64` on 128 bits.
/// - `normal()` is one Box-Muller draw, `sqrt(-2 ln u1) * cos(2 pi u2)`,
///   consuming exactly two uniforms per call (the sine branch is discarded).
///
/// An `Rng` is single-owner state: give each worker its own instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// Standard normal draw (Box-Muller, cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]; ln stays finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i + 1);
            items.swap(i, j);
        }
    }

    /// `count` distinct indices from `0..n`, in draw order: a partial
    /// Fisher-Yates over the index vector.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        debug_assert!(count <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.next_below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
