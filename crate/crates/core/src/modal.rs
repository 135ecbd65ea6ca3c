//! Multi-dimensional FFT over the active axes of a periodic grid and the
//! matching angular wave vectors.

use crate::grid::Grid;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// In-place FFT along every active axis. The inverse is normalized so that
/// `inverse(forward(x)) = x`.
pub fn fft_active(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..grid.active() {
        let np = grid.axes[axis].points;
        let s = grid.stride(axis);
        let fft = if inverse { planner.plan_fft_inverse(np) } else { planner.plan_fft_forward(np) };
        let block = np * s;
        let mut line = vec![Complex64::new(0.0, 0.0); np];
        for start in (0..data.len()).step_by(block) {
            for off in 0..s {
                for j in 0..np {
                    line[j] = data[start + off + j * s];
                }
                fft.process(&mut line);
                for j in 0..np {
                    data[start + off + j * s] = line[j];
                }
            }
        }
        if inverse {
            let inv = 1.0 / np as f64;
            data.iter_mut().for_each(|v| *v *= inv);
        }
    }
}

pub fn forward_real(grid: &Grid, f: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = f.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_active(grid, &mut c, false);
    c
}

pub fn inverse_real(grid: &Grid, c: &[Complex64]) -> Vec<f64> {
    let mut c = c.to_vec();
    fft_active(grid, &mut c, true);
    c.into_iter().map(|v| v.re).collect()
}

/// Signed integer wave number of FFT bin `j` on an axis with `np` points.
pub fn signed_bin(j: usize, np: usize) -> i64 {
    if j <= np / 2 {
        j as i64
    } else {
        j as i64 - np as i64
    }
}

/// Angular wave vector `ξ` (length n, zero on inactive axes) of each FFT
/// node. Nyquist bins are reported as zero, matching modal differentiation.
pub fn wave_vectors(grid: &Grid) -> Vec<Vec<f64>> {
    (0..grid.nnodes())
        .map(|p| {
            let mut xi = vec![0.0; grid.n];
            for (a, ax) in grid.axes.iter().enumerate() {
                let j = grid.index(p, a);
                let k = signed_bin(j, ax.points);
                if !(ax.points % 2 == 0 && j == ax.points / 2) {
                    xi[a] = 2.0 * PI * k as f64 / ax.period();
                }
            }
            xi
        })
        .collect()
}

/// Integer wave numbers of each FFT node (Nyquist bins keep their index).
pub fn integer_modes(grid: &Grid) -> Vec<Vec<i64>> {
    (0..grid.nnodes())
        .map(|p| grid.axes.iter().enumerate().map(|(a, ax)| signed_bin(grid.index(p, a), ax.points)).collect())
        .collect()
}
