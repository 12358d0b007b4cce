//! Spectral transform helpers built on rustfft.
//!
//! Provides a cached-planner 2-D complex FFT for periodic grids and a 2-D
//! DST-I (odd sine transform) for Dirichlet grids. Forward transforms are
//! unnormalized; [`fft2`] with `inverse = true` folds in the `1/N²` factor so
//! that a forward/inverse round trip is the identity.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::field::Field;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Signed integer wavenumber for FFT bin `i` on a grid of side `size`.
#[inline]
pub fn signed_freq(i: usize, size: usize) -> i64 {
    if i <= size / 2 {
        i as i64
    } else {
        i as i64 - size as i64
    }
}

/// In-place 2-D FFT of a row-major `size × size` complex buffer.
///
/// The inverse transform divides by `size²` so it exactly undoes the forward.
pub fn fft2(buf: &mut [Complex<f64>], size: usize, inverse: bool) {
    assert_eq!(buf.len(), size * size, "buffer must be size^2");
    let fft = plan(size, inverse);

    // Row pass: the buffer is a stack of contiguous length-`size` rows.
    fft.process(buf);

    // Column pass through a gather/scatter scratch row.
    let mut col = vec![Complex::new(0.0, 0.0); size];
    for x in 0..size {
        for y in 0..size {
            col[y] = buf[y * size + x];
        }
        fft.process(&mut col);
        for y in 0..size {
            buf[y * size + x] = col[y];
        }
    }

    if inverse {
        let scale = 1.0 / (size * size) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Copy a real field into a complex buffer with zero imaginary parts.
pub fn to_complex(field: &Field) -> Vec<Complex<f64>> {
    field
        .as_slice()
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect()
}

/// Real parts of a complex buffer as a field of side `size`.
pub fn real_field(buf: &[Complex<f64>], size: usize) -> Field {
    assert_eq!(buf.len(), size * size);
    Field::from_vec(size, buf.iter().map(|c| c.re).collect())
}

/// Unnormalized DST-I along one dimension:
/// `S_k = Σ_{j=1..m} s_j · sin(π j k / (m+1))`, `k = 1..m`.
///
/// Computed through a length `2(m+1)` FFT of the odd extension. Applying the
/// transform twice scales by `(m+1)/2` per dimension, so the inverse is the
/// same transform times `2/(m+1)`.
fn dst1_row(row: &mut [f64], scratch: &mut [Complex<f64>], fft: &Arc<dyn Fft<f64>>) {
    let m = row.len();
    let ext = 2 * (m + 1);
    debug_assert_eq!(scratch.len(), ext);
    scratch[0] = Complex::new(0.0, 0.0);
    scratch[m + 1] = Complex::new(0.0, 0.0);
    for j in 0..m {
        scratch[j + 1] = Complex::new(row[j], 0.0);
        scratch[ext - 1 - j] = Complex::new(-row[j], 0.0);
    }
    fft.process(scratch);
    for k in 0..m {
        row[k] = -0.5 * scratch[k + 1].im;
    }
}

/// In-place unnormalized 2-D DST-I of a row-major `m × m` buffer.
pub fn dst1_2d(data: &mut [f64], m: usize) {
    assert_eq!(data.len(), m * m, "buffer must be m^2");
    let ext = 2 * (m + 1);
    let fft = plan(ext, false);
    let mut scratch = vec![Complex::new(0.0, 0.0); ext];

    for row in data.chunks_exact_mut(m) {
        dst1_row(row, &mut scratch, &fft);
    }
    let mut col = vec![0.0; m];
    for x in 0..m {
        for y in 0..m {
            col[y] = data[y * m + x];
        }
        dst1_row(&mut col, &mut scratch, &fft);
        for y in 0..m {
            data[y * m + x] = col[y];
        }
    }
}
