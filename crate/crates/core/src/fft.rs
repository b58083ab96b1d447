//! Two-dimensional DFT helpers on row-major grids (`data[iy * nx + ix]`).

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized 2-D DFT. `Forward` uses `exp(-i...)`.
pub fn fft2(data: &mut [Complex64], nx: usize, ny: usize, direction: FftDirection) {
    assert_eq!(data.len(), nx * ny);
    let mut planner = FftPlanner::new();
    if nx > 1 {
        let fx = planner.plan_fft(nx, direction);
        fx.process(data);
    }
    if ny > 1 {
        let fy = planner.plan_fft(ny, direction);
        let mut col = vec![Complex64::new(0.0, 0.0); ny];
        for ix in 0..nx {
            for iy in 0..ny {
                col[iy] = data[iy * nx + ix];
            }
            fy.process(&mut col);
            for iy in 0..ny {
                data[iy * nx + ix] = col[iy];
            }
        }
    }
}

/// Unnormalized 1-D DFT.
pub fn fft1(data: &mut [Complex64], direction: FftDirection) {
    if data.len() > 1 {
        FftPlanner::new().plan_fft(data.len(), direction).process(data);
    }
}

/// Residue of a signed frequency index modulo `n`.
pub fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}
