//! L²-orthogonal splitting `v = Kα + f h + v°` of symmetric 2-tensors.
//!
//! Since `Kα` is pointwise traceless, `f = tr v / n` exactly. The 1-form
//! `α` minimizes `‖v₀ − Kα‖²` for the traceless part `v₀`: on a flat torus
//! this is an exact per-mode solve, elsewhere conjugate gradients on
//! `KᵀK α = Kᵀ v₀` with `Kᵀ` the exact transpose of the discrete `K` under
//! the quadrature pairing.

use crate::error::{Error, Result};
use crate::field::{Symmetry, TensorField};
use crate::geometry::Geometry;
use crate::grid::Deriv;
use crate::modal::{fft_active, wave_vectors};
use crate::tensor_fields::{conformal_killing, divergence, pure_trace, trace, traceless_part};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rustfft::num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct SplitOptions {
    /// Relative residual at which conjugate gradients stop.
    pub tolerance: f64,
    /// Iteration cap; `None` means 10 × the number of unknowns' grid nodes.
    pub max_iterations: Option<usize>,
    /// `α` is restricted to nodes at least this many nodes from bounded edges.
    pub margin: usize,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { tolerance: 1e-10, max_iterations: None, margin: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct SplitResiduals {
    /// `‖δv°‖ / ‖v‖` over nodes at least `2 × margin` from bounded edges.
    /// Near the edges of a slab `α` is clamped to zero, so `v°` is only
    /// divergence-free in the interior there.
    pub divergence: f64,
    /// `‖tr v°‖ / ‖v‖`.
    pub trace: f64,
    /// `|(Kα, fh)| / ‖v‖²`.
    pub orth_k_trace: f64,
    /// `|(Kα, v°)| / ‖v‖²`.
    pub orth_k_tt: f64,
    /// `|(fh, v°)| / ‖v‖²`.
    pub orth_trace_tt: f64,
    /// `‖v − Kα − fh − v°‖ / ‖v‖`.
    pub reconstruction: f64,
}

#[derive(Clone, Debug)]
pub struct SplitResult {
    pub alpha: TensorField,
    pub f: TensorField,
    pub k_alpha: TensorField,
    pub tt: TensorField,
    pub residuals: SplitResiduals,
    pub iterations: usize,
    /// Smallest Ritz value of `KᵀK` (weighted pairing) seen by the solver;
    /// `None` for the modal path. A value near zero flags conformal Killing fields.
    pub min_ritz: Option<f64>,
    pub solver_residual: f64,
}

fn is_flat_torus(geo: &Geometry) -> bool {
    geo.curvature == Some(0.0)
        && geo.is_flat_chart()
        && geo.grid.axes.iter().all(|a| a.periodic)
        && geo.scheme.deriv == Deriv::Spectral
}

pub fn split(geo: &Geometry, v: &TensorField, opts: &SplitOptions) -> Result<SplitResult> {
    if v.rank != 2 {
        return Err(Error::Shape("split takes a symmetric 2-tensor".into()));
    }
    let n = geo.n as f64;
    let tr = trace(geo, v);
    let f = TensorField::scalar(tr.data.iter().map(|t| t / n).collect(), geo.n);
    let v0 = traceless_part(geo, v);
    let (alpha, k_alpha, iterations, min_ritz, solver_residual) = if is_flat_torus(geo) {
        let (a, ka) = modal_solve(geo, &v0);
        (a, ka, 0, None, 0.0)
    } else {
        let cg = cg_solve(geo, &v0, opts)?;
        let ka = conformal_killing(geo, &cg.alpha)?;
        (cg.alpha, ka, cg.iterations, Some(cg.min_ritz), cg.residual)
    };
    let fh = pure_trace(geo, &f.data);
    let mut tt = v0.sub(&k_alpha);
    tt.sym = Symmetry::Sym2;
    let vn2 = geo.l2_norm_sq(v).max(f64::MIN_POSITIVE);
    let vn = vn2.sqrt();
    let inner = geo.interior_mask(2 * opts.margin);
    let div = divergence(geo, &tt).map(|d| geo.l2_norm_sq(&d.masked(&inner)).sqrt() / vn).unwrap_or(f64::NAN);
    let rec = v.sub(&k_alpha).sub(&fh).sub(&tt);
    let residuals = SplitResiduals {
        divergence: div,
        trace: geo.l2_norm_sq(&trace(geo, &tt)).sqrt() / vn,
        orth_k_trace: geo.l2_inner(&k_alpha, &fh).abs() / vn2,
        orth_k_tt: geo.l2_inner(&k_alpha, &tt).abs() / vn2,
        orth_trace_tt: geo.l2_inner(&fh, &tt).abs() / vn2,
        reconstruction: geo.l2_norm_sq(&rec).sqrt() / vn,
    };
    Ok(SplitResult { alpha, f, k_alpha, tt, residuals, iterations, min_ritz, solver_residual })
}

/// Transverse-traceless part of `v`.
pub fn tt_project(geo: &Geometry, v: &TensorField, opts: &SplitOptions) -> Result<TensorField> {
    Ok(split(geo, v, opts)?.tt)
}

/// `‖Kα‖² / ‖α‖²`.
pub fn coercivity_check_k(geo: &Geometry, alpha: &TensorField) -> Result<f64> {
    let a2 = geo.l2_norm_sq(alpha);
    if a2 == 0.0 {
        return Err(Error::InvalidParameter("coercivity ratio needs a nonzero 1-form".into()));
    }
    Ok(geo.l2_norm_sq(&conformal_killing(geo, alpha)?) / a2)
}

/// Exact transpose of the discrete `K` under the quadrature pairing:
/// `(Kα, w) = (α, Kᵀw)` for all grid 1-forms `α`.
///
/// Centered stencils with zero extension and modal differentiation are both
/// skew-symmetric matrices, so `∂ᵀ = −∂` exactly.
pub fn k_transpose(geo: &Geometry, w: &TensorField) -> Result<TensorField> {
    let n = geo.n;
    let nn = geo.nnodes();
    let scheme = geo.scheme.lenient();
    // U^{ij} = weight · (S P₀ w)^{ij}.
    let mut s = traceless_part(geo, w);
    s = s.add(&s.permute(&[1, 0])).scaled(0.5);
    let up = geo.raise(&geo.raise(&s, 0), 1);
    let u = up.times_scalar(&geo.weight);
    let mut rho = TensorField::zeros(1, n, nn);
    for l in 0..n {
        let dst_comp = l;
        let mut acc = vec![0.0; nn];
        for j in 0..geo.grid.active() {
            let ulj = u.at(&[l, j]);
            if ulj.iter().all(|v| *v == 0.0) {
                continue;
            }
            let d = scheme.partial(&geo.grid, ulj, j)?;
            acc.iter_mut().zip(&d).for_each(|(a, b)| *a -= b);
        }
        for i in 0..n {
            for j in 0..n {
                if let Some(g) = geo.gamma_comp(l, i, j) {
                    let uij = u.at(&[i, j]);
                    for q in 0..nn {
                        acc[q] -= g[q] * uij[q];
                    }
                }
            }
        }
        rho.comp_mut(dst_comp).copy_from_slice(&acc);
    }
    let beta = geo.lower(&rho, 0);
    let inv_w: Vec<f64> = geo.weight.iter().map(|w| 1.0 / w).collect();
    Ok(beta.times_scalar(&inv_w))
}

struct CgOutcome {
    alpha: TensorField,
    iterations: usize,
    min_ritz: f64,
    residual: f64,
}

fn cg_solve(geo: &Geometry, v0: &TensorField, opts: &SplitOptions) -> Result<CgOutcome> {
    let n = geo.n;
    let nn = geo.nnodes();
    let mask = geo.interior_mask(opts.margin);
    let apply = |a: &TensorField| -> Result<TensorField> {
        let ka = conformal_killing(geo, a)?;
        Ok(k_transpose(geo, &ka)?.masked(&mask))
    };
    let b = k_transpose(geo, v0)?.masked(&mask);
    let bnorm = geo.l2_norm_sq(&b).sqrt();
    let mut x = TensorField::zeros(1, n, nn);
    if bnorm == 0.0 {
        return Ok(CgOutcome { alpha: x, iterations: 0, min_ritz: f64::NAN, residual: 0.0 });
    }
    let max_it = opts.max_iterations.unwrap_or(10 * nn);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = geo.l2_norm_sq(&r);
    // Lanczos coefficients for the Ritz diagnostic.
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_it {
        let ap = apply(&p)?;
        let pap = geo.l2_inner(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence { residual: rel, iterations: it });
        }
        let a = rr / pap;
        x.axpy(a, &p);
        r.axpy(-a, &ap);
        let rr_new = geo.l2_norm_sq(&r);
        let beta = rr_new / rr;
        alphas.push(a);
        betas.push(beta);
        rr = rr_new;
        it += 1;
        rel = rr.sqrt() / bnorm;
        if rel <= opts.tolerance {
            break;
        }
        p = r.add(&p.scaled(beta));
    }
    if rel > opts.tolerance {
        return Err(Error::NoConvergence { residual: rel, iterations: it });
    }
    Ok(CgOutcome { alpha: x, iterations: it, min_ritz: min_ritz_value(&alphas, &betas), residual: rel })
}

/// Smallest eigenvalue of the Lanczos tridiagonal matrix assembled from CG
/// step lengths `a_k` and direction coefficients `b_k`.
fn min_ritz_value(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    if m == 0 {
        return f64::NAN;
    }
    let mut t = DMatrix::zeros(m, m);
    for k in 0..m {
        let mut d = 1.0 / a[k];
        if k > 0 {
            d += b[k - 1] / a[k - 1];
        }
        t[(k, k)] = d;
        if k + 1 < m {
            let off = b[k].sqrt() / a[k];
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    SymmetricEigen::new(t).eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v))
}

/// Per-mode normal-equation solve on a flat torus (identity metric).
fn modal_solve(geo: &Geometry, v0: &TensorField) -> (TensorField, TensorField) {
    let n = geo.n;
    let nn = geo.nnodes();
    let grid = &geo.grid;
    let xi = wave_vectors(grid);
    let zero = Complex64::new(0.0, 0.0);
    let mut vh: Vec<Vec<Complex64>> = (0..n * n)
        .map(|c| {
            let mut d: Vec<Complex64> = v0.comp(c).iter().map(|x| Complex64::new(*x, 0.0)).collect();
            fft_active(grid, &mut d, false);
            d
        })
        .collect();
    let mut ah = vec![vec![zero; nn]; n];
    let mut kah = vec![vec![zero; nn]; n * n];
    let i_unit = Complex64::new(0.0, 1.0);
    for p in 0..nn {
        let x = &xi[p];
        let x2: f64 = x.iter().map(|v| v * v).sum();
        if x2 == 0.0 {
            continue;
        }
        // K̂α = i(½(ξ_j α_i + ξ_i α_j) − (ξ·α/n) δ_ij); its adjoint on w is
        // −i(w ξ)_i for traceless symmetric w, and K̂*K̂ = ½|ξ|² + (½ − 1/n) ξ ξᵀ.
        let mut rhs = DVector::from_element(n, zero);
        for i in 0..n {
            for j in 0..n {
                rhs[i] += -i_unit * vh[i * n + j][p] * x[j];
            }
        }
        let m = DMatrix::from_fn(n, n, |a, b| {
            let d = if a == b { 0.5 * x2 } else { 0.0 };
            Complex64::new(d + (0.5 - 1.0 / n as f64) * x[a] * x[b], 0.0)
        });
        let sol = m.lu().solve(&rhs).unwrap_or_else(|| DVector::from_element(n, zero));
        let dot: Complex64 = (0..n).map(|a| sol[a] * x[a]).sum();
        for i in 0..n {
            ah[i][p] = sol[i];
            for j in 0..n {
                let mut k = 0.5 * (sol[i] * x[j] + sol[j] * x[i]);
                if i == j {
                    k -= dot / n as f64;
                }
                kah[i * n + j][p] = i_unit * k;
            }
        }
    }
    let to_real = |mut d: Vec<Complex64>| -> Vec<f64> {
        fft_active(grid, &mut d, true);
        d.into_iter().map(|c| c.re).collect()
    };
    let mut alpha = TensorField::zeros(1, n, nn);
    for (i, d) in ah.into_iter().enumerate() {
        alpha.comp_mut(i).copy_from_slice(&to_real(d));
    }
    let mut ka = TensorField::zeros(2, n, nn);
    for (c, d) in kah.into_iter().enumerate() {
        ka.comp_mut(c).copy_from_slice(&to_real(d));
    }
    vh.clear();
    (alpha, ka.with_symmetry(Symmetry::Sym2).expect("rank 2"))
}
