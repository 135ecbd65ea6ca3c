//! Seeded smooth test fields: bump envelopes times low-order trigonometric
//! polynomials, plus structured samples for each splitting component.

use crate::curvature_ops::{kulkarni_nomizu, weyl_projection};
use crate::error::{Error, Result};
use crate::field::{Symmetry, TensorField};
use crate::geometry::Geometry;
use crate::grid::Grid;
use crate::tensor_fields::{conformal_killing, contracted_derivative, pure_trace, traceless_part};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Envelope shape used inside a [`Support`] box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// `exp(1 − 1/(1 − r²))` for `r < 1`, exactly zero outside.
    Bump,
    /// `exp(−25 r²)`, below `2e−11` outside the box; entire, so modal
    /// differentiation of its periodic extension converges spectrally.
    Gaussian,
    /// `(1 − r²)^p` for `r < 1`: compactly supported and `C^{p−1}`, with
    /// derivatives far milder than [`Profile::Bump`] near the edge of the box.
    Polynomial(u32),
}

/// Support box on the bounded active axes (periodic axes are unconstrained).
#[derive(Clone, Debug)]
pub struct Support {
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    pub profile: Profile,
}

impl Support {
    /// Box centered in the grid, leaving `margin` nodes free at each bounded edge.
    pub fn centered(grid: &Grid, margin: usize) -> Result<Self> {
        let mut center = Vec::new();
        let mut radius = Vec::new();
        for ax in &grid.axes {
            center.push(0.5 * (ax.lo + ax.hi));
            let r = 0.5 * (ax.hi - ax.lo) - margin as f64 * ax.spacing();
            if !ax.periodic && r <= 0.0 {
                return Err(Error::InvalidParameter(format!("margin {margin} leaves no support on a {}-point axis", ax.points)));
            }
            radius.push(r);
        }
        Ok(Support { center, radius, profile: Profile::Bump })
    }

    /// Sub-box with the same center and radii scaled by `s`.
    pub fn shrunk(&self, s: f64) -> Self {
        Support { center: self.center.clone(), radius: self.radius.iter().map(|r| r * s).collect(), profile: self.profile }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    /// Sub-box displaced by `frac` of the radius along each axis and scaled by `s`.
    pub fn offset(&self, frac: &[f64], s: f64) -> Self {
        let center = self.center.iter().zip(&self.radius).zip(frac).map(|((c, r), f)| c + f * r).collect();
        let radius = self.radius.iter().zip(frac).map(|(r, f)| r * (1.0 - f.abs()) * s).collect();
        Support { center, radius, profile: self.profile }
    }
}

/// Envelope of the support box (bounded axes only; periodic axes are free).
pub fn bump(grid: &Grid, support: &Support) -> Vec<f64> {
    let x = grid.coordinate_arrays();
    (0..grid.nnodes())
        .map(|p| {
            let mut r2 = 0.0;
            for (a, ax) in grid.axes.iter().enumerate() {
                if !ax.periodic {
                    let t = (x[a][p] - support.center[a]) / support.radius[a];
                    r2 += t * t;
                }
            }
            match support.profile {
                Profile::Bump if r2 < 1.0 => (1.0 - 1.0 / (1.0 - r2)).exp(),
                Profile::Bump => 0.0,
                Profile::Gaussian => (-25.0 * r2).exp(),
                Profile::Polynomial(p) if r2 < 1.0 => (1.0 - r2).powi(p as i32),
                Profile::Polynomial(_) => 0.0,
            }
        })
        .collect()
}

/// Seeded smooth scalar: bump times a sum of three random low-frequency waves.
fn random_scalar(grid: &Grid, support: &Support, env: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let x = grid.coordinate_arrays();
    let m = grid.active();
    let terms: Vec<(f64, Vec<f64>, f64)> = (0..3)
        .map(|_| {
            let amp = rng.random_range(-1.0..1.0);
            let k: Vec<f64> = (0..m).map(|_| rng.random_range(0..3) as f64).collect();
            let phase = rng.random_range(0.0..2.0 * PI);
            (amp, k, phase)
        })
        .collect();
    (0..grid.nnodes())
        .map(|p| {
            if env[p] == 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for (amp, k, phase) in &terms {
                let mut arg = *phase;
                for (a, ax) in grid.axes.iter().enumerate() {
                    arg += if ax.periodic {
                        2.0 * PI * k[a] * x[a][p] / (ax.hi - ax.lo)
                    } else {
                        0.5 * PI * k[a] * (x[a][p] - support.center[a]) / support.radius[a]
                    };
                }
                s += amp * arg.cos();
            }
            env[p] * s
        })
        .collect()
}

/// Seeded random tensor field of the given rank (all components independent).
pub fn random_field(grid: &Grid, rank: usize, support: &Support, seed: u64) -> TensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = bump(grid, support);
    let mut out = TensorField::zeros(rank, grid.n, grid.nnodes());
    for c in 0..out.ncomp() {
        let s = random_scalar(grid, support, &env, &mut rng);
        out.comp_mut(c).copy_from_slice(&s);
    }
    out
}

pub fn random_scalar_field(grid: &Grid, support: &Support, seed: u64) -> TensorField {
    random_field(grid, 0, support, seed)
}

pub fn random_one_form(grid: &Grid, support: &Support, seed: u64) -> TensorField {
    random_field(grid, 1, support, seed)
}

pub fn random_sym2(grid: &Grid, support: &Support, seed: u64) -> TensorField {
    random_field(grid, 2, support, seed).with_symmetry(Symmetry::Sym2).expect("rank 2")
}

pub fn random_traceless(geo: &Geometry, support: &Support, seed: u64) -> TensorField {
    traceless_part(geo, &random_sym2(&geo.grid, support, seed))
}

/// Pure-trace sample `f h`. With `mean_zero`, `f` combines two disjoint
/// bumps so that `∫ f dvol = 0`.
pub fn trace_sample(geo: &Geometry, support: &Support, seed: u64, mean_zero: bool) -> Result<TensorField> {
    let f = if mean_zero {
        let m = geo.grid.active();
        let mut left = vec![0.0; m];
        let mut right = vec![0.0; m];
        left[0] = -0.5;
        right[0] = 0.5;
        let s1 = support.offset(&left, 0.95);
        let s2 = support.offset(&right, 0.95);
        let f1 = random_scalar_field(&geo.grid, &s1, seed).data;
        let f2 = bump(&geo.grid, &s2);
        let (i1, i2) = (geo.integrate(&f1), geo.integrate(&f2));
        f1.iter().zip(&f2).map(|(a, b)| a - i1 / i2 * b).collect()
    } else {
        random_scalar_field(&geo.grid, support, seed).data
    };
    Ok(pure_trace(geo, &f))
}

/// `Kα` for a seeded compactly supported 1-form `α`.
pub fn im_k_sample(geo: &Geometry, support: &Support, seed: u64) -> Result<(TensorField, TensorField)> {
    let alpha = random_one_form(&geo.grid, support, seed);
    let v = conformal_killing(geo, &alpha)?;
    Ok((alpha, v))
}

/// Transverse-traceless sample on a constant-curvature background:
/// `t_ij = ∇^k ∇^l U_kijl` with `U` the Weyl part of `a ⊙ b`.
/// On constant curvature `t` is symmetric, traceless and divergence-free up to
/// discretization error; the exact projection is applied for symmetry and trace.
pub fn tt_sample(geo: &Geometry, support: &Support, seed: u64) -> Result<TensorField> {
    let a = random_sym2(&geo.grid, support, seed);
    let b = random_sym2(&geo.grid, support, seed ^ 0x9e37_79b9_7f4a_7c15);
    let u = weyl_projection(geo, &kulkarni_nomizu(&a, &b));
    let inner = contracted_derivative(geo, &u, 3)?;
    let t = contracted_derivative(geo, &inner, 0)?;
    let t = t.with_symmetry(Symmetry::Sym2)?;
    Ok(traceless_part(geo, &t))
}

/// Explicit transverse-traceless Fourier mode on a flat torus: a traceless
/// constant tensor orthogonal to the wave vector, times `cos(2π k·x)`.
pub fn torus_tt_mode(grid: &Grid, k: &[i64], amplitude: f64) -> Result<TensorField> {
    let n = grid.n;
    let x = grid.coordinate_arrays();
    let m = grid.active();
    if k.len() != m {
        return Err(Error::Shape("wave vector length must equal the active axis count".into()));
    }
    // Polarization e_p ⊗ e_q + e_q ⊗ e_p with p, q ⟂ k.
    let perp: Vec<usize> = (0..n).filter(|&i| i >= m || k[i] == 0).collect();
    if perp.len() < 2 {
        return Err(Error::InvalidParameter("need two directions orthogonal to the wave vector".into()));
    }
    let (p, q) = (perp[0], perp[1]);
    let mut v = TensorField::zeros(2, n, grid.nnodes());
    let vals: Vec<f64> = (0..grid.nnodes())
        .map(|node| {
            let mut arg = 0.0;
            for (a, ax) in grid.axes.iter().enumerate() {
                arg += 2.0 * PI * k[a] as f64 * (x[a][node] - ax.lo) / (ax.hi - ax.lo);
            }
            amplitude * arg.cos()
        })
        .collect();
    v.at_mut(&[p, q]).copy_from_slice(&vals);
    v.at_mut(&[q, p]).copy_from_slice(&vals);
    v.with_symmetry(Symmetry::Sym2)
}
