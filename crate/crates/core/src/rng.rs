//! Deterministic per-item random streams.
//!
//! Every parallelizable computation derives one generator per work item
//! keyed by `(seed, stream)`, so results do not depend on thread schedule.

use crate::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for work item `stream` of the run keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0x6c62_272e_07bb_0142;
    let mut key = [0u8; 32];
    // fold the stream index in before expanding
    state = state.wrapping_add(splitmix64(&mut { stream ^ 0x517c_c1b7_2722_0a95 }));
    state ^= stream.rotate_left(17);
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Standard complex Gaussian (Box-Muller).
pub fn gaussian_complex<R: Rng>(rng: &mut R) -> C64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-2.0 * u.ln()).sqrt();
    C64::new(r * v.cos(), r * v.sin())
}

/// Uniform point in the closed disk of radius `r`.
pub fn complex_in_disk<R: Rng>(rng: &mut R, r: f64) -> C64 {
    let rho = r * rng.gen_range(0.0f64..=1.0).sqrt();
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::new(rho * th.cos(), rho * th.sin())
}

/// Uniform point in the square `[-half, half]^2` of the complex plane.
pub fn complex_in_square<R: Rng>(rng: &mut R, half: f64) -> C64 {
    C64::new(
        rng.gen_range(-half..=half),
        rng.gen_range(-half..=half),
    )
}
