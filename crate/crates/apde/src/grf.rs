//! Gaussian random fields by spectral synthesis.
//!
//! A draw starts from iid standard-normal white noise, moves to Fourier
//! space, damps mode `(k_x, k_y)` by `amplitude · (1 + |k|²)^(-exponent/2)`
//! with integer wavenumbers, and transforms back. The DC mode is zeroed and
//! the sample mean removed, so every draw averages to exactly zero. Larger
//! exponents give smoother fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fft::{fft2, real_field, signed_freq, to_complex};
use crate::field::Field;

/// Spectral damping factor for one mode.
#[inline]
fn mode_gain(kx: i64, ky: i64, amplitude: f64, exponent: f64) -> f64 {
    let k2 = (kx * kx + ky * ky) as f64;
    amplitude * (1.0 + k2).powf(-exponent / 2.0)
}

/// Draw one field of side `size` (power of two) with the given spectrum.
///
/// Deterministic in `seed`: identical arguments give bit-identical fields.
pub fn sample_grf(size: usize, amplitude: f64, exponent: f64, seed: u64) -> Field {
    assert!(amplitude > 0.0, "amplitude must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = Field::zeros(size);
    for v in noise.as_mut_slice() {
        *v = rng.sample(StandardNormal);
    }

    let mut buf = to_complex(&noise);
    fft2(&mut buf, size, false);
    for y in 0..size {
        let ky = signed_freq(y, size);
        for x in 0..size {
            let kx = signed_freq(x, size);
            buf[y * size + x] *= mode_gain(kx, ky, amplitude, exponent);
        }
    }
    buf[0] = rustfft::num_complex::Complex::new(0.0, 0.0);
    fft2(&mut buf, size, true);

    let mut field = real_field(&buf, size);
    field.remove_mean();
    field
}

/// Per-pixel variance implied by the spectrum, in closed form.
///
/// White noise has `E[ŵ_k ŵ_l*] = N δ_kl`, so after damping and the
/// normalized inverse transform each pixel has variance `(1/N) Σ_k g_k²`
/// (DC excluded). Exposed for tests and for choosing level thresholds.
pub fn grf_pixel_variance(size: usize, amplitude: f64, exponent: f64) -> f64 {
    let mut sum = 0.0;
    for y in 0..size {
        let ky = signed_freq(y, size);
        for x in 0..size {
            let kx = signed_freq(x, size);
            if kx == 0 && ky == 0 {
                continue;
            }
            let g = mode_gain(kx, ky, amplitude, exponent);
            sum += g * g;
        }
    }
    sum / (size * size) as f64
}

/// Two-level quantization: values above `threshold` map to `high`, the rest
/// to `low`. Used to turn a smooth draw into a binary permeability field.
pub fn threshold_binary(field: &Field, threshold: f64, low: f64, high: f64) -> Field {
    field.map(|v| if v > threshold { high } else { low })
}
