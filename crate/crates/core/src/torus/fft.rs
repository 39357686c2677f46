use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place DFT over a row-major `n^dim` array.
pub(crate) fn fft_nd(buf: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n.pow(dim as u32));
    let fft = plan(n, inverse);
    // `process` handles every consecutive chunk of length `n`.
    fft.process(buf);
    if dim == 2 {
        transpose_square(buf, n);
        fft.process(buf);
        transpose_square(buf, n);
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_transform_matches_direct_sum() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = data.clone();
        fft_nd(&mut buf, 2, n, false);
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let ang =
                            -2.0 * std::f64::consts::PI * ((k0 * i + k1 * j) as f64) / n as f64;
                        acc += data[i * n + j] * Complex64::from_polar(1.0, ang);
                    }
                }
                assert!((acc - buf[k0 * n + k1]).norm() < 1e-12);
            }
        }
    }
}
