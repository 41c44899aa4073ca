//! Row-major n-dimensional FFT on top of the 1-D planner.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// In-place forward (`inverse = false`) or inverse (`inverse = true`) DFT
/// along every axis of a row-major array. The inverse includes the `1/N`
/// normalization, so `ifft(fft(x)) = x`.
pub fn fft_nd(data: &mut [Complex<f64>], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::<f64>::new();
    let ndim = shape.len();
    for axis in 0..ndim {
        let len = shape[axis];
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        // stride of the axis and number of 1-D lines
        let stride: usize = shape[axis + 1..].iter().product();
        let block = stride * len;
        let mut line = vec![Complex::default(); len];
        for base in 0..(total / block) {
            for off in 0..stride {
                let start = base * block + off;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process(&mut line);
                for (k, slot) in line.iter().enumerate() {
                    data[start + k * stride] = *slot;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Signed lattice offset of a wrapped DFT index: `0..=N/2` stay, the rest
/// map to negatives.
#[inline]
pub fn centered_offset(k: usize, len: usize) -> i64 {
    if k <= len / 2 {
        k as i64
    } else {
        k as i64 - len as i64
    }
}

/// DFT frequency (cycles per unit length) of bin `k` on an axis of `len`
/// cells with spacing `h`.
#[inline]
pub fn frequency(k: usize, len: usize, h: f64) -> f64 {
    centered_offset(k, len) as f64 / (len as f64 * h)
}
