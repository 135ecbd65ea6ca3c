//! Structured chart grids and partial derivatives along grid axes.
//!
//! A grid carries `m` active coordinate axes out of the `n` chart coordinates.
//! Fields never depend on the inactive coordinates, so their partials vanish.
//! Node order is row-major over the active axes (last axis fastest).

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(points: usize, lo: f64, hi: f64) -> Self {
        Axis { points, lo, hi, periodic: true }
    }

    pub fn bounded(points: usize, lo: f64, hi: f64) -> Self {
        Axis { points, lo, hi, periodic: false }
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.points as f64
        } else {
            (self.hi - self.lo) / (self.points - 1) as f64
        }
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.spacing()
    }

    /// Length of the periodic extension used by modal differentiation.
    pub fn period(&self) -> f64 {
        self.points as f64 * self.spacing()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub axes: Vec<Axis>,
    strides: Vec<usize>,
    nnodes: usize,
}

impl Grid {
    pub fn new(n: usize, axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > n {
            return Err(Error::InvalidParameter(format!(
                "need 1..={n} active axes, got {}",
                axes.len()
            )));
        }
        for (a, ax) in axes.iter().enumerate() {
            if ax.points < 2 || !(ax.hi > ax.lo) {
                return Err(Error::InvalidParameter(format!("degenerate axis {a}")));
            }
        }
        let m = axes.len();
        let mut strides = vec![1; m];
        for a in (0..m.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].points;
        }
        let nnodes = axes.iter().map(|a| a.points).product();
        Ok(Grid { n, axes, strides, nnodes })
    }

    pub fn active(&self) -> usize {
        self.axes.len()
    }

    pub fn nnodes(&self) -> usize {
        self.nnodes
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.axes[axis].points
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Chart coordinates of a node; inactive coordinates are reported as zero.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (a, ax) in self.axes.iter().enumerate() {
            x[a] = ax.coord(self.index(node, a));
        }
        x
    }

    /// Coordinate arrays for every active axis, each `nnodes` long.
    pub fn coordinate_arrays(&self) -> Vec<Vec<f64>> {
        (0..self.active())
            .map(|a| (0..self.nnodes).map(|p| self.axes[a].coord(self.index(p, a))).collect())
            .collect()
    }

    /// Product of active spacings (inactive directions carry unit measure).
    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    /// Smallest number of nodes between `node` and a bounded edge.
    pub fn boundary_distance(&self, node: usize) -> usize {
        let mut d = usize::MAX;
        for (a, ax) in self.axes.iter().enumerate() {
            if !ax.periodic {
                let j = self.index(node, a);
                d = d.min(j).min(ax.points - 1 - j);
            }
        }
        d
    }

    pub fn refined(&self, factor: usize) -> Grid {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let points = if a.periodic { a.points * factor } else { (a.points - 1) * factor + 1 };
                Axis { points, ..a.clone() }
            })
            .collect();
        Grid::new(self.n, axes).expect("refinement of a valid grid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Deriv {
    /// Centered finite differences of the given even order (2, 4, 6 or 8).
    Fd(usize),
    /// Fourier differentiation of the periodic extension along each axis.
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub deriv: Deriv,
    /// Reject inputs that do not vanish near bounded edges.
    pub strict: bool,
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme { deriv: Deriv::Fd(4), strict: true }
    }
}

fn fd_weights(order: usize) -> Result<&'static [f64]> {
    match order {
        2 => Ok(&[0.5]),
        4 => Ok(&[2.0 / 3.0, -1.0 / 12.0]),
        6 => Ok(&[0.75, -0.15, 1.0 / 60.0]),
        8 => Ok(&[0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0]),
        _ => Err(Error::InvalidParameter(format!("unsupported stencil order {order}"))),
    }
}

impl Scheme {
    pub fn fd(order: usize) -> Self {
        Scheme { deriv: Deriv::Fd(order), strict: true }
    }

    pub fn spectral() -> Self {
        Scheme { deriv: Deriv::Spectral, strict: true }
    }

    pub fn lenient(self) -> Self {
        Scheme { strict: false, ..self }
    }

    pub fn radius(&self) -> usize {
        match self.deriv {
            Deriv::Fd(o) => o / 2,
            Deriv::Spectral => 2,
        }
    }

    /// Formal order of accuracy (modal differentiation reported as 16).
    pub fn order(&self) -> usize {
        match self.deriv {
            Deriv::Fd(o) => o,
            Deriv::Spectral => 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Deriv::Fd(o) = self.deriv {
            fd_weights(o)?;
        }
        Ok(())
    }

    fn check_margin(&self, grid: &Grid, f: &[f64], axis: usize) -> Result<()> {
        let ax = &grid.axes[axis];
        // Modal differentiation treats every axis as periodic; its accuracy
        // depends on the smoothness of the periodic extension, not on a margin.
        if !self.strict || ax.periodic || self.deriv == Deriv::Spectral {
            return Ok(());
        }
        let r = self.radius().min(ax.points / 2);
        let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(());
        }
        let tol = 1e-10 * scale;
        for (p, v) in f.iter().enumerate() {
            let j = grid.index(p, axis);
            if (j < r || j + r >= ax.points) && v.abs() > tol {
                return Err(Error::Margin { axis, radius: r });
            }
        }
        Ok(())
    }

    /// Partial derivative of a nodal scalar array along an active axis.
    pub fn partial(&self, grid: &Grid, f: &[f64], axis: usize) -> Result<Vec<f64>> {
        if f.len() != grid.nnodes() {
            return Err(Error::Shape(format!("{} values for {} nodes", f.len(), grid.nnodes())));
        }
        self.check_margin(grid, f, axis)?;
        match self.deriv {
            Deriv::Fd(o) => Ok(fd_partial(grid, f, axis, fd_weights(o)?)),
            Deriv::Spectral => Ok(spectral_partial(grid, f, axis)),
        }
    }
}

fn fd_partial(grid: &Grid, f: &[f64], axis: usize, w: &[f64]) -> Vec<f64> {
    let ax = &grid.axes[axis];
    let np = ax.points;
    let s = grid.stride(axis);
    let inv_h = 1.0 / ax.spacing();
    let block = np * s;
    let mut out = vec![0.0; f.len()];
    let shift = |j: usize, k: usize, up: bool| -> Option<usize> {
        if up {
            if j + k < np {
                Some(j + k)
            } else if ax.periodic {
                Some((j + k) % np)
            } else {
                None
            }
        } else if j >= k {
            Some(j - k)
        } else if ax.periodic {
            Some((j + np * k - k) % np)
        } else {
            None
        }
    };
    for b in 0..f.len() / block {
        let base = b * block;
        for j in 0..np {
            let o0 = base + j * s;
            for (k1, c) in w.iter().enumerate() {
                let k = k1 + 1;
                let c = c * inv_h;
                if let Some(jp) = shift(j, k, true) {
                    let p0 = base + jp * s;
                    for o in 0..s {
                        out[o0 + o] += c * f[p0 + o];
                    }
                }
                if let Some(jm) = shift(j, k, false) {
                    let m0 = base + jm * s;
                    for o in 0..s {
                        out[o0 + o] -= c * f[m0 + o];
                    }
                }
            }
        }
    }
    out
}

fn spectral_partial(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let ax = &grid.axes[axis];
    let np = ax.points;
    let s = grid.stride(axis);
    let block = np * s;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(np);
    let inv = planner.plan_fft_inverse(np);
    let two_pi_over_l = 2.0 * std::f64::consts::PI / ax.period();
    let mult: Vec<Complex<f64>> = (0..np)
        .map(|q| {
            let kq = if 2 * q < np {
                q as f64
            } else if 2 * q == np {
                0.0
            } else {
                q as f64 - np as f64
            };
            Complex::new(0.0, kq * two_pi_over_l / np as f64)
        })
        .collect();
    let mut out = vec![0.0; f.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); np];
    for b in 0..f.len() / block {
        for o in 0..s {
            let base = b * block + o;
            for (j, z) in buf.iter_mut().enumerate() {
                *z = Complex::new(f[base + j * s], 0.0);
            }
            fwd.process(&mut buf);
            for (z, m) in buf.iter_mut().zip(&mult) {
                *z *= m;
            }
            inv.process(&mut buf);
            for (j, z) in buf.iter().enumerate() {
                out[base + j * s] = z.re;
            }
        }
    }
    out
}
