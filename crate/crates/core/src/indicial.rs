//! Indicial roots of `λ − L` at the conformal boundary of hyperbolic space.
//!
//! `L` preserves four subspaces: pure trace (`V0`), `f(−(n−1)dx² + h_E)`
//! (`V1`), mixed `dx·dy` components (`V2`) and tangential traceless (`V3`).
//! On each the indicial polynomial is a quartic whose roots come in pairs
//! symmetric about `(n−1)/2` in the `dx/ρ` frame (`(n−5)/2` in the `dx`
//! frame, where every root is shifted down by 2).
//!
//! Every family has the shape `μ = (n−1)/2 ± ½√(A ± B√(D − kλ))`, with the
//! quartic `p(μ) = −[(4(μ − (n−1)/2)² − A)² − B²D]/32`, so `λ − L` is
//! singular on `ρ^μ` exactly when `p(μ) = λ`.

use crate::error::{Error, Result};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subspace {
    V0,
    V1,
    V2,
    V3,
}

impl Subspace {
    pub const ALL: [Subspace; 4] = [Subspace::V0, Subspace::V1, Subspace::V2, Subspace::V3];

    pub fn name(self) -> &'static str {
        match self {
            Subspace::V0 => "V0",
            Subspace::V1 => "V1",
            Subspace::V2 => "V2",
            Subspace::V3 => "V3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(A, B, D, k)` in `½√(A ± B√(D − kλ))`.
    fn radical(self, n: f64) -> (f64, f64, f64, f64) {
        match self {
            Subspace::V0 | Subspace::V1 => (n * n + 1.0, 2.0, n * n, 8.0),
            Subspace::V2 => (n * n - 2.0 * n + 5.0, 4.0, (n - 1.0) * (n - 1.0), 2.0),
            Subspace::V3 => (n * n - 4.0 * n + 5.0, 2.0, (n - 2.0) * (n - 2.0), 8.0),
        }
    }
}

/// Power of the boundary-defining function: `dx` frame (`γ`) or `dx/ρ`
/// frame (`μ = γ + 2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Dx,
    DxOverRho,
}

impl Basis {
    /// Offset added to a `dx/ρ` root to express it in this basis.
    pub fn shift(self) -> f64 {
        match self {
            Basis::Dx => -2.0,
            Basis::DxOverRho => 0.0,
        }
    }

    pub fn center(self, n: usize) -> f64 {
        (n as f64 - 1.0) / 2.0 + self.shift()
    }
}

/// Threshold constants of the indicial analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub n: usize,
    /// `(n²−1)²/32`.
    pub eps_v0: f64,
    /// `((n−2)²−1)²/32`.
    pub eps_v1: f64,
    /// Equal to `eps_v0`.
    pub eps_v2: f64,
    /// `((n−1)²−4)²/32`.
    pub eps_v3: f64,
    /// `(n−2)(3n−11)(5n−13)/128`.
    pub a: f64,
    /// `(n−1)/8`, the radius guaranteed on `Re λ > −a`.
    pub r: f64,
}

impl Thresholds {
    /// Value of `−Re λ` at which the inner root pair of the given family
    /// collapses onto the center. The tangential traceless family is governed
    /// by `eps_v1` and the mixed family by `eps_v3`.
    pub fn for_subspace(&self, s: Subspace) -> f64 {
        match s {
            Subspace::V0 => self.eps_v0,
            Subspace::V1 => self.eps_v2,
            Subspace::V2 => self.eps_v3,
            Subspace::V3 => self.eps_v1,
        }
    }
}

pub fn thresholds(n: usize) -> Thresholds {
    let nf = n as f64;
    let sq = |x: f64| x * x;
    let eps_v0 = sq(nf * nf - 1.0) / 32.0;
    Thresholds {
        n,
        eps_v0,
        eps_v1: sq(sq(nf - 2.0) - 1.0) / 32.0,
        eps_v2: eps_v0,
        eps_v3: sq(sq(nf - 1.0) - 4.0) / 32.0,
        a: (nf - 2.0) * (3.0 * nf - 11.0) * (5.0 * nf - 13.0) / 128.0,
        r: (nf - 1.0) / 8.0,
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("indicial analysis needs n >= 4, got {n}")));
    }
    Ok(())
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients `[c0, c1, c2, c3, c4]` (ascending powers of `γ`, the `dx`
/// frame exponent) of `p_V(γ) − λ`, whose zeros are the indicial roots of
/// `λ − L` on `V`. The leading coefficient is `−½`.
pub fn indicial_polynomial(subspace: Subspace, n: usize, lambda: Complex64) -> Result<[Complex64; 5]> {
    check_n(n)?;
    let nf = n as f64;
    let (a, b, d, _) = subspace.radical(nf);
    // In γ, (μ − (n−1)/2) = γ − (n−5)/2.
    let s = (nf - 5.0) / 2.0;
    let shifted = [-s, 1.0];
    let sq = poly_mul(&shifted, &shifted);
    let inner: Vec<f64> = vec![4.0 * sq[0] - a, 4.0 * sq[1], 4.0 * sq[2]];
    let quartic = poly_mul(&inner, &inner);
    let mut out = [Complex64::new(0.0, 0.0); 5];
    for (i, q) in quartic.iter().enumerate() {
        let mut v = -q / 32.0;
        if i == 0 {
            v += b * b * d / 32.0;
        }
        out[i] = Complex64::new(v, 0.0);
    }
    out[0] -= lambda;
    Ok(out)
}

pub fn eval_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Closed-form roots in the requested basis, ordered by the sign pair
/// `(outer, inner)` = `(−,+), (−,−), (+,−), (+,+)`: the first two are the
/// lower members of their pairs, the last two their mirror images.
pub fn indicial_roots(subspace: Subspace, n: usize, lambda: Complex64, basis: Basis) -> Result<[Complex64; 4]> {
    check_n(n)?;
    let nf = n as f64;
    let (a, b, d, k) = subspace.radical(nf);
    let inner = (Complex64::new(d, 0.0) - k * lambda).sqrt();
    let outer_plus = (a + b * inner).sqrt() * 0.5;
    let outer_minus = (a - b * inner).sqrt() * 0.5;
    let c = Complex64::new((nf - 1.0) / 2.0, 0.0);
    let rho = [c - outer_plus, c - outer_minus, c + outer_minus, c + outer_plus];
    Ok(rho.map(|z| z + basis.shift()))
}

/// Largest relative quartic residual `|q(γ)| / Σ|c_i||γ|^i` over the four
/// closed-form roots (evaluated in the `dx` frame).
pub fn root_residual(subspace: Subspace, n: usize, lambda: Complex64) -> Result<f64> {
    let poly = indicial_polynomial(subspace, n, lambda)?;
    let roots = indicial_roots(subspace, n, lambda, Basis::Dx)?;
    Ok(roots
        .iter()
        .map(|z| {
            let scale: f64 = poly.iter().enumerate().map(|(i, c)| c.norm() * z.norm().powi(i as i32)).sum();
            eval_poly(&poly, *z).norm() / scale.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max))
}

/// All 16 indicial roots of `λ − L` at one `λ`.
#[derive(Clone, Debug)]
pub struct IndicialResult {
    pub n: usize,
    pub lambda: Complex64,
    pub basis: Basis,
    /// Indexed by [`Subspace::index`].
    pub roots: [[Complex64; 4]; 4],
    /// `min |Re root − center|` over all 16 roots (basis independent).
    pub radius: f64,
    pub thresholds: Thresholds,
}

impl IndicialResult {
    pub fn compute(n: usize, lambda: Complex64, basis: Basis) -> Result<Self> {
        let mut roots = [[Complex64::new(0.0, 0.0); 4]; 4];
        for s in Subspace::ALL {
            roots[s.index()] = indicial_roots(s, n, lambda, basis)?;
        }
        let center = basis.center(n);
        let radius = roots.iter().flatten().map(|z| (z.re - center).abs()).fold(f64::INFINITY, f64::min);
        Ok(IndicialResult { n, lambda, basis, roots, radius, thresholds: thresholds(n) })
    }

    pub fn subspace_roots(&self, s: Subspace) -> &[Complex64; 4] {
        &self.roots[s.index()]
    }

    /// `|Re root − center|` minimized over one family.
    pub fn subspace_radius(&self, s: Subspace) -> f64 {
        let center = self.basis.center(self.n);
        self.roots[s.index()].iter().map(|z| (z.re - center).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation of a root pair's midpoint from the center.
    pub fn pair_symmetry_defect(&self) -> f64 {
        let center = Complex64::new(self.basis.center(self.n), 0.0);
        self.roots
            .iter()
            .flat_map(|r| [(r[0] + r[3]) * 0.5 - center, (r[1] + r[2]) * 0.5 - center])
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Rows `(n, Re λ, Im λ, subspace, root index, Re μ, Im μ, radius)`.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::with_capacity(16);
        for s in Subspace::ALL {
            for (i, z) in self.roots[s.index()].iter().enumerate() {
                rows.push(format!(
                    "{},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e}",
                    self.n,
                    self.lambda.re,
                    self.lambda.im,
                    s.name(),
                    i,
                    z.re,
                    z.im,
                    self.radius
                ));
            }
        }
        rows
    }
}

pub const CSV_HEADER: &str = "n,re_lambda,im_lambda,subspace,root_index,re_mu,im_mu,radius";

pub fn indicial_radius(n: usize, lambda: Complex64) -> Result<f64> {
    Ok(IndicialResult::compute(n, lambda, Basis::DxOverRho)?.radius)
}

/// The λ = 0 roots in the `dx` frame, as integers, per family.
pub fn zero_lambda_table(n: usize) -> [[i64; 4]; 4] {
    let n = n as i64;
    [[-3, -2, n - 3, n - 2], [-3, -2, n - 3, n - 2], [-3, -1, n - 4, n - 2], [-2, -1, n - 4, n - 3]]
}

/// Tensor grid of sample values of `λ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl LambdaGrid {
    /// `n_re` real parts in `(−a_bound, re_max]` and `n_im` imaginary parts in
    /// `[−im_max, im_max]`, both clustered near the origin by a sinh map so
    /// the grid resolves `|λ| ≲ 1` while reaching `|Im λ| = im_max`.
    pub fn standard(a_bound: f64, n_re: usize, n_im: usize, re_max: f64, im_max: f64, delta: f64) -> Self {
        let lo = -a_bound + delta;
        let re = if n_re < 2 {
            vec![lo; n_re]
        } else {
            let t_hi = (re_max - lo).asinh();
            (0..n_re).map(|i| lo + (t_hi * i as f64 / (n_re - 1) as f64).sinh()).collect()
        };
        let im = if n_im < 2 {
            vec![0.0; n_im]
        } else {
            let t = im_max.asinh();
            (0..n_im).map(|j| (t * (2.0 * j as f64 / (n_im - 1) as f64 - 1.0)).sinh()).collect()
        };
        LambdaGrid { re, im }
    }

    pub fn len(&self) -> usize {
        self.re.len() * self.im.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.re.iter().flat_map(|x| self.im.iter().map(move |y| Complex64::new(*x, *y))).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanReport {
    pub n: usize,
    pub a_bound: f64,
    pub points: usize,
    pub min_radius: f64,
    pub argmin_re: f64,
    pub argmin_im: f64,
    /// Largest relative quartic residual over the scan.
    pub max_root_residual: f64,
    /// Sample points with `Re λ ≤ −a_bound` are skipped.
    pub skipped: usize,
}

/// Minimum indicial radius over grid points with `Re λ > −a_bound`. A finite
/// sample: a falsification test of a lower bound, not a proof of it.
pub fn scan_half_plane(n: usize, a_bound: f64, grid: &LambdaGrid) -> Result<ScanReport> {
    check_n(n)?;
    let pts: Vec<Complex64> = grid.points().into_iter().filter(|z| z.re > -a_bound).collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    let skipped = grid.len() - pts.len();
    let per_point: Vec<(f64, Complex64, f64)> = pts
        .par_iter()
        .map(|&z| -> Result<(f64, Complex64, f64)> {
            let r = indicial_radius(n, z)?;
            let mut res = 0.0f64;
            for s in Subspace::ALL {
                res = res.max(root_residual(s, n, z)?);
            }
            Ok((r, z, res))
        })
        .collect::<Result<_>>()?;
    let (min_radius, arg, _) =
        per_point.iter().copied().fold((f64::INFINITY, Complex64::new(0.0, 0.0), 0.0), |best, p| {
            if p.0 < best.0 {
                p
            } else {
                best
            }
        });
    let max_root_residual = per_point.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(ScanReport {
        n,
        a_bound,
        points: pts.len(),
        min_radius,
        argmin_re: arg.re,
        argmin_im: arg.im,
        max_root_residual,
        skipped,
    })
}

/// Behavior of the outer radicands on the imaginary axis `λ = ±iy`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticSample {
    pub y: f64,
    /// Largest distance of `arg(A ± B√(D − kλ))` from the nearest of
    /// `±π/4, ±3π/4`, over both signs of `y`, both outer signs and all families.
    pub max_arg_deviation: f64,
    /// Smallest `½|Re √(A ± B√(D − kλ))|`, i.e. the radius at `λ = ±iy`.
    pub min_radius: f64,
}

pub fn asymptotic_argument_check(n: usize, ys: &[f64]) -> Result<Vec<AsymptoticSample>> {
    check_n(n)?;
    let nf = n as f64;
    let targets = [
        std::f64::consts::FRAC_PI_4,
        -std::f64::consts::FRAC_PI_4,
        3.0 * std::f64::consts::FRAC_PI_4,
        -3.0 * std::f64::consts::FRAC_PI_4,
    ];
    Ok(ys
        .iter()
        .map(|&y| {
            let mut dev = 0.0f64;
            let mut rad = f64::INFINITY;
            for s in Subspace::ALL {
                let (a, b, d, k) = s.radical(nf);
                for lam in [Complex64::new(0.0, y), Complex64::new(0.0, -y)] {
                    let inner = (Complex64::new(d, 0.0) - k * lam).sqrt();
                    for sign in [1.0, -1.0] {
                        let x = a + sign * b * inner;
                        let arg = x.arg();
                        let dist = targets.iter().map(|t| (arg - t).abs()).fold(f64::INFINITY, f64::min);
                        dev = dev.max(dist);
                        rad = rad.min(0.5 * x.sqrt().re.abs());
                    }
                }
            }
            AsymptoticSample { y, max_arg_deviation: dev, min_radius: rad }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_between_bases() {
        let lam = Complex64::new(0.3, -1.2);
        for s in Subspace::ALL {
            let a = indicial_roots(s, 5, lam, Basis::Dx).unwrap();
            let b = indicial_roots(s, 5, lam, Basis::DxOverRho).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(*x, *y - 2.0);
            }
        }
    }

    #[test]
    fn small_n_rejected() {
        assert!(indicial_roots(Subspace::V0, 3, Complex64::new(0.0, 0.0), Basis::Dx).is_err());
    }
}
