//! Centered 2D discrete Fourier transform.
//!
//! For even `N` divisible by 4 the centered DFT
//! `X[m] = sum_n x[n] exp(-2 pi i (n - N/2)(m - N/2) / N)`
//! equals `(-1)^m DFT[(-1)^n x[n]]`, so centering costs two checkerboard
//! sign flips instead of index shifts. Grid sizes are powers of two >= 8,
//! which satisfies the divisibility condition.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

fn checkerboard(a: &mut Array2<Complex64>) {
    a.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (j, v) in row.iter_mut().enumerate() {
                if (i + j) % 2 == 1 {
                    *v = -*v;
                }
            }
        });
}

fn transform_rows(a: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
    let len = fft.get_inplace_scratch_len();
    a.axis_iter_mut(Axis(0)).into_par_iter().for_each_init(
        || vec![Complex64::new(0.0, 0.0); len],
        |scratch, mut row| {
            let slice = row.as_slice_mut().expect("standard-layout rows are contiguous");
            fft.process_with_scratch(slice, scratch);
        },
    );
}

/// Unnormalised centered 2D transform, in place on a standard-layout array.
///
/// Rows are independent, so the parallel split does not change the result:
/// the output is bit-identical across thread counts.
pub fn centered_fft2(data: &mut Array2<Complex64>, direction: FftDirection) {
    let (nx, ny) = data.dim();
    assert!(nx % 4 == 0 && ny % 4 == 0, "centered FFT needs sizes divisible by 4");
    if !data.is_standard_layout() {
        *data = data.as_standard_layout().into_owned();
    }
    let mut planner = FftPlanner::new();
    let fft_y = planner.plan_fft(ny, direction);
    let fft_x = planner.plan_fft(nx, direction);

    checkerboard(data);
    transform_rows(data, &fft_y);
    let mut t = data.t().as_standard_layout().into_owned();
    transform_rows(&mut t, &fft_x);
    *data = t.t().as_standard_layout().into_owned();
    checkerboard(data);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(x: &Array2<Complex64>) -> Array2<Complex64> {
        let (nx, ny) = x.dim();
        let (cx, cy) = ((nx / 2) as f64, (ny / 2) as f64);
        Array2::from_shape_fn((nx, ny), |(m, l)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..nx {
                for k in 0..ny {
                    let ph = -2.0
                        * PI
                        * ((n as f64 - cx) * (m as f64 - cx) / nx as f64
                            + (k as f64 - cy) * (l as f64 - cy) / ny as f64);
                    acc += x[[n, k]] * Complex64::from_polar(1.0, ph);
                }
            }
            acc
        })
    }

    #[test]
    fn matches_naive_centered_dft() {
        let x = Array2::from_shape_fn((8, 16), |(i, j)| {
            Complex64::new((i * 3 + j) as f64 * 0.1, ((i as f64) - (j as f64)).sin())
        });
        let mut y = x.clone();
        centered_fft2(&mut y, FftDirection::Forward);
        let z = naive(&x);
        for (a, b) in y.iter().zip(z.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let x = Array2::from_shape_fn((16, 8), |(i, j)| Complex64::new(i as f64, j as f64));
        let mut y = x.clone();
        centered_fft2(&mut y, FftDirection::Forward);
        centered_fft2(&mut y, FftDirection::Inverse);
        for (a, b) in y.iter().zip(x.iter()) {
            assert!((a / 128.0 - b).norm() < 1e-12);
        }
    }
}
