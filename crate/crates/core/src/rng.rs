//! Seeding and the random primitives shared by the simulators and samplers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator used everywhere a seed is accepted.
pub type QRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of stream `index` from a master seed.
///
/// `seed = mix(master + (index + 1) * GOLDEN_GAMMA)` where `mix` is the
/// SplitMix64 finaliser. For a fixed master the map `index -> seed` is a
/// bijection on `u64`, so distinct indices never share a seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64_mix(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// One draw from the standard complex normal: real and imaginary parts are
/// independent N(0, 1/2), so `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn fill_complex_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [Complex64]) {
    for v in out.iter_mut() {
        *v = complex_normal(rng);
    }
}

/// Uniform on the open interval (-1/2, 1/2).
pub fn centered_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        if u != -0.5 {
            return u;
        }
    }
}

/// Uniform on (0, 1], safe to take the log of.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
