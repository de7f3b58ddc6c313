//! Counter-based Gaussian stream for reproducible parallel Monte Carlo.
//!
//! Every draw is a pure function of (seed, path, step, component): the value
//! at a given key never depends on how many draws happened before it or on
//! which thread asks for it, so serial and parallel ensembles are
//! bitwise-identical. The construction is a splitmix64-style keyed mix
//! feeding a Box-Muller transform.

/// splitmix64 finalizer: a strong 64 -> 64 bit mixer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mix the full key (seed, path, step, component, word) into one u64.
#[inline]
fn keyed_word(seed: u64, path: u64, step: u64, comp: u64, word: u64) -> u64 {
    let mut z = mix64(seed);
    z = mix64(z ^ path.wrapping_mul(0xd1342543de82ef95));
    z = mix64(z ^ step.wrapping_mul(0xaf251af3b0f025b5));
    z = mix64(z ^ comp.wrapping_mul(0x9e3779b97f4a7c15));
    mix64(z ^ word)
}

/// Uniform in (0, 1]: 53 mantissa bits, never zero (safe under log).
#[inline]
fn uniform_open(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform in [0, 1).
#[inline]
fn uniform_half_open(w: u64) -> f64 {
    (w >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Deterministic source of standard normal variates keyed by
/// (path, step, component).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianStream {
    seed: u64,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Standard normal draw at stream offset (path, step, component).
    pub fn standard_normal(&self, path: u64, step: u64, comp: u64) -> f64 {
        let u1 = uniform_open(keyed_word(self.seed, path, step, comp, 0));
        let u2 = uniform_half_open(keyed_word(self.seed, path, step, comp, 1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform draw in [lo, hi) at stream offset (path, step, component).
    /// Used for deterministic sample-point generation.
    pub fn uniform_in(&self, path: u64, step: u64, comp: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * uniform_half_open(keyed_word(self.seed, path, step, comp, 2))
    }
}
