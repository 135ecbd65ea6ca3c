//! Spectral estimates for `L` at constant-curvature backgrounds: exact modal
//! spectra, integral identities behind the nonpositivity bounds, and seeded
//! Rayleigh-quotient sampling per splitting component.
//!
//! Sign conventions follow [`crate::tensor_fields`]: `Δ` is the rough
//! Laplacian `trace ∇²` (nonpositive), `Δ_H = −(dd* + d*d)`, `δ` is the
//! negative divergence and form norms carry the `p!` weight.

use crate::error::{Error, Result};
use crate::field::{Symmetry, TensorField};
use crate::geometry::Geometry;
use crate::linearized_operator::{apply_l, quadratic_form};
use crate::samples::{im_k_sample, trace_sample, tt_sample, Support};
use crate::tensor_fields::{
    a_tensor, conformal_killing, contracted_derivative, covariant_derivative, d_nabla, d_nabla_star, delta_star,
    divergence, form_inner, hodge_d, hodge_dstar, hodge_laplacian_1form, pure_trace, rough_laplacian, t_tensor,
    trace, twisted_laplacian,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Summand of the splitting `v = Kα + f h + v°`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Trace,
    ImK,
    Tt,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Trace, Component::ImK, Component::Tt];

    pub fn name(self) -> &'static str {
        match self {
            Component::Trace => "trace",
            Component::ImK => "im_k",
            Component::Tt => "tt",
        }
    }
}

fn curvature_of(geo: &Geometry) -> Result<f64> {
    geo.curvature.ok_or_else(|| Error::InvalidParameter("needs a constant-curvature background".into()))
}

fn norm(geo: &Geometry, u: &TensorField) -> f64 {
    geo.l2_norm_sq(u).sqrt()
}

// ---------------------------------------------------------------------------
// Torus modes

/// Spectrum of `L` on the Fourier mode `k` of the period-1 flat torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusModeSpectrum {
    pub k: Vec<i64>,
    pub n: usize,
    /// `|k|²`.
    pub k_sq: i64,
    /// `−½(4π²|k|²)²`, shared by every symmetric 2-tensor component.
    pub eigenvalue: f64,
    /// Number of symmetric 2-tensor components, `n(n+1)/2`.
    pub multiplicity: usize,
}

pub fn torus_mode_spectrum(k: &[i64], n: usize) -> TorusModeSpectrum {
    let k_sq: i64 = k.iter().map(|v| v * v).sum();
    let w = 4.0 * PI * PI * k_sq as f64;
    TorusModeSpectrum { k: k.to_vec(), n, k_sq, eigenvalue: -0.5 * w * w, multiplicity: n * (n + 1) / 2 }
}

/// Comparison of the grid operator with the modal eigenvalue on one mode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusModeCheck {
    pub modal: TorusModeSpectrum,
    /// `(v, Lv) / ‖v‖²` with the grid operator.
    pub rayleigh: f64,
    /// `|rayleigh − eigenvalue| / |eigenvalue|` (absolute when the eigenvalue is 0).
    pub relative_error: f64,
    /// `‖Lv − σ v‖ / ‖σ v‖`.
    pub residual: f64,
}

/// Every symmetric component carries `cos(2π k·x + φ_pq)` with distinct phases.
pub fn torus_mode_field(geo: &Geometry, k: &[i64]) -> Result<TensorField> {
    let grid = &geo.grid;
    if k.len() != grid.active() {
        return Err(Error::Shape("wave vector length must equal the active axis count".into()));
    }
    let n = geo.n;
    let x = grid.coordinate_arrays();
    let mut v = TensorField::zeros(2, n, grid.nnodes());
    for p in 0..n {
        for q in p..n {
            let phase = 0.7 * (p * n + q) as f64;
            let vals: Vec<f64> = (0..grid.nnodes())
                .map(|node| {
                    let mut arg = phase;
                    for (a, ax) in grid.axes.iter().enumerate() {
                        arg += 2.0 * PI * k[a] as f64 * (x[a][node] - ax.lo) / ax.period();
                    }
                    arg.cos()
                })
                .collect();
            v.at_mut(&[p, q]).copy_from_slice(&vals);
            if p != q {
                v.at_mut(&[q, p]).copy_from_slice(&vals);
            }
        }
    }
    v.with_symmetry(Symmetry::Sym2)
}

/// Applies the grid `L` to a single Fourier mode of a flat torus and compares
/// with [`torus_mode_spectrum`]. Axis periods must be 1.
pub fn torus_mode_check(geo: &Geometry, k: &[i64]) -> Result<TorusModeCheck> {
    if curvature_of(geo)? != 0.0 || !geo.grid.axes.iter().all(|a| a.periodic && (a.period() - 1.0).abs() < 1e-12) {
        return Err(Error::InvalidParameter("mode check needs a flat torus of period 1".into()));
    }
    let modal = torus_mode_spectrum(k, geo.n);
    let v = torus_mode_field(geo, k)?;
    let lv = apply_l(geo, &v)?;
    let vv = geo.l2_norm_sq(&v);
    let rayleigh = geo.l2_inner(&v, &lv) / vv;
    let sigma = modal.eigenvalue;
    let relative_error = if sigma == 0.0 { rayleigh.abs() } else { (rayleigh - sigma).abs() / sigma.abs() };
    let residual = norm(geo, &lv.sub(&v.scaled(sigma))) / (sigma.abs() * vv.sqrt()).max(f64::MIN_POSITIVE);
    Ok(TorusModeCheck { modal, rayleigh, relative_error, residual })
}

// ---------------------------------------------------------------------------
// Sphere trace modes

/// `L(fh) = μ_k f h` for a degree-k spherical harmonic `f` on the unit `S^n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereTraceMode {
    pub k: usize,
    /// Laplace eigenvalue `λ_k = k(k + n − 1)`.
    pub lambda: f64,
    /// `−½λ_k² + (n/2)λ_k`.
    pub eigenvalue: f64,
    /// Dimension of the degree-k harmonics on `S^n`.
    pub multiplicity: usize,
}

fn binomial(a: usize, b: usize) -> usize {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    (0..b).fold(1usize, |acc, i| acc * (a - i) / (i + 1))
}

/// Degrees `1..=k_max`; constants are excluded by the volume constraint.
pub fn sphere_trace_spectrum(k_max: usize, n: usize) -> Vec<SphereTraceMode> {
    let nf = n as f64;
    (1..=k_max)
        .map(|k| {
            let lambda = (k * (k + n - 1)) as f64;
            let multiplicity = binomial(n + k, n) - if k >= 2 { binomial(n + k - 2, n) } else { 0 };
            SphereTraceMode { k, lambda, eigenvalue: -0.5 * lambda * lambda + 0.5 * nf * lambda, multiplicity }
        })
        .collect()
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half(m: usize) -> f64 {
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `∫_{S^n} x^β dσ` for a monomial in `n + 1` variables.
fn sphere_moment(beta: &[u32]) -> f64 {
    if beta.iter().any(|b| b % 2 == 1) {
        return 0.0;
    }
    let num: f64 = beta.iter().map(|&b| gamma_half(b as usize + 1)).product();
    let total: usize = beta.iter().map(|&b| b as usize + 1).sum();
    2.0 * num / gamma_half(total)
}

type Poly = BTreeMap<Vec<u32>, f64>;

fn monomials(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(vars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::new(), &mut out);
    out.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
    out
}

/// Laplace–Beltrami operator of `S^n` on the restriction of a polynomial:
/// on each homogeneous piece of degree `d`, `Δ_S F = Δ_R F − d(d + n − 1) F`.
fn sphere_laplacian(p: &Poly, n: usize) -> Poly {
    let mut out = Poly::new();
    for (m, &c) in p {
        let d: u32 = m.iter().sum();
        *out.entry(m.clone()).or_insert(0.0) -= (d * (d + n as u32 - 1)) as f64 * c;
        for i in 0..m.len() {
            if m[i] >= 2 {
                let mut t = m.clone();
                t[i] -= 2;
                *out.entry(t).or_insert(0.0) += (m[i] * (m[i] - 1)) as f64 * c;
            }
        }
    }
    out
}

/// Trace-component coefficient operator `f ↦ −½Δ²f − (cn/2)Δf` at `c = 1`.
fn trace_operator(p: &Poly, n: usize) -> Poly {
    let l1 = sphere_laplacian(p, n);
    let l2 = sphere_laplacian(&l1, n);
    let mut out = Poly::new();
    for (m, c) in l2 {
        *out.entry(m).or_insert(0.0) += -0.5 * c;
    }
    for (m, c) in l1 {
        *out.entry(m).or_insert(0.0) += -0.5 * n as f64 * c;
    }
    out
}

/// Numerical kernel of the trace operator on the unit sphere.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereKernelReport {
    pub n: usize,
    pub degree: u32,
    /// Dimension of the Galerkin space after removing constants.
    pub basis_dim: usize,
    /// Singular values in ascending order.
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    /// First nonzero singular value over the largest kernel singular value.
    pub separation: f64,
}

/// Galerkin discretization of `f ↦ −½Δ²f − (n/2)Δf` on polynomials of degree
/// at most `degree` restricted to `S^n ⊂ R^{n+1}`, with exact sphere moments.
/// Constants are projected out (volume-preserving variations).
pub fn sphere_trace_kernel(n: usize, degree: u32) -> Result<SphereKernelReport> {
    if n < 2 {
        return Err(Error::InvalidParameter("sphere dimension must be at least 2".into()));
    }
    let mons = monomials(n + 1, degree);
    let m = mons.len();
    let add = |a: &[u32], b: &[u32]| -> Vec<u32> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    let gram = DMatrix::from_fn(m, m, |i, j| sphere_moment(&add(&mons[i], &mons[j])));
    let images: Vec<Poly> = mons
        .iter()
        .map(|mo| {
            let mut p = Poly::new();
            p.insert(mo.clone(), 1.0);
            trace_operator(&p, n)
        })
        .collect();
    let stiff = DMatrix::from_fn(m, m, |i, j| images[j].iter().map(|(mo, c)| c * sphere_moment(&add(&mons[i], mo))).sum());
    // Orthonormal basis of the restricted polynomial space.
    let eig = SymmetricEigen::new(gram.clone());
    let gmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 1e-10 * gmax).collect();
    let q = DMatrix::from_fn(m, keep.len(), |a, j| eig.eigenvectors[(a, keep[j])] / eig.eigenvalues[keep[j]].sqrt());
    let mat = q.transpose() * &stiff * &q;
    // Remove the constant direction.
    let mut e0 = DMatrix::zeros(m, 1);
    e0[(0, 0)] = 1.0;
    let mut cvec = q.transpose() * &gram * e0;
    cvec /= cvec.norm();
    let dim = keep.len();
    let proj = DMatrix::identity(dim, dim) - &cvec * cvec.transpose();
    let peig = SymmetricEigen::new(proj);
    let comp: Vec<usize> = (0..dim).filter(|&i| peig.eigenvalues[i] > 0.5).collect();
    let u = DMatrix::from_fn(dim, comp.len(), |a, j| peig.eigenvectors[(a, comp[j])]);
    let reduced = u.transpose() * mat * &u;
    let mut sv: Vec<f64> = reduced.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| a.partial_cmp(b).expect("finite singular values"));
    let smax = sv.last().cloned().unwrap_or(0.0);
    let kernel_dim = sv.iter().filter(|s| **s <= 1e-9 * smax).count();
    let separation = if kernel_dim == 0 || kernel_dim == sv.len() {
        f64::NAN
    } else {
        sv[kernel_dim] / sv[kernel_dim - 1].max(f64::MIN_POSITIVE)
    };
    Ok(SphereKernelReport { n, degree, basis_dim: comp.len(), singular_values: sv, kernel_dim, separation })
}

// ---------------------------------------------------------------------------
// Identities

/// Residual of one identity: `residual = ‖lhs − rhs‖` (pointwise identities,
/// L² norm) or `|lhs − rhs|` (integral identities), and `scale` the sum of
/// the magnitudes of the individual terms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub residual: f64,
    pub scale: f64,
    pub terms: Vec<(String, f64)>,
}

impl IdentityCheck {
    fn integral(name: &str, lhs: f64, terms: Vec<(&str, f64)>) -> Self {
        let rhs: f64 = terms.iter().map(|(_, v)| v).sum();
        let scale = lhs.abs() + terms.iter().map(|(_, v)| v.abs()).sum::<f64>();
        let mut t = vec![("lhs".to_string(), lhs)];
        t.extend(terms.into_iter().map(|(k, v)| (k.to_string(), v)));
        IdentityCheck { name: name.into(), residual: (lhs - rhs).abs(), scale, terms: t }
    }

    /// `lhs = Σ terms` as fields.
    fn pointwise(geo: &Geometry, name: &str, lhs: &TensorField, terms: Vec<(&str, TensorField)>) -> Self {
        let mut diff = lhs.clone();
        let mut t = vec![("lhs".to_string(), norm(geo, lhs))];
        let mut scale = norm(geo, lhs);
        for (k, f) in &terms {
            diff.axpy(-1.0, f);
            let nf = norm(geo, f);
            scale += nf;
            t.push((k.to_string(), nf));
        }
        IdentityCheck { name: name.into(), residual: norm(geo, &diff), scale, terms: t }
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// `½‖T‖² = ‖∇v‖² − ‖δv‖² + c(n‖v‖² − ‖tr v‖²)` for compactly supported `v`.
pub fn koiso_identity_residual(geo: &Geometry, v: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let t = t_tensor(geo, v)?;
    let lhs = 0.5 * geo.l2_norm_sq(&t);
    Ok(IdentityCheck::integral(
        "koiso",
        lhs,
        vec![
            ("grad", geo.l2_norm_sq(&covariant_derivative(geo, v)?)),
            ("div", -geo.l2_norm_sq(&divergence(geo, v)?)),
            ("norm", c * n * geo.l2_norm_sq(v)),
            ("trace", -c * geo.l2_norm_sq(&trace(geo, v))),
        ],
    ))
}

/// For traceless compactly supported `v`:
/// `‖A‖² = 2‖∇²v‖² − 2‖∇δv‖² + 4cn‖δv‖² + 2c(n+2)‖∇v‖² − 2c²(n²+n)‖v‖²`.
pub fn a_norm_identity_residual(geo: &Geometry, v: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let a = a_tensor(geo, v)?;
    let g1 = covariant_derivative(geo, v)?;
    let g2 = covariant_derivative(geo, &g1)?;
    let dv = divergence(geo, v)?;
    Ok(IdentityCheck::integral(
        "a_norm",
        geo.l2_norm_sq(&a),
        vec![
            ("hessian", 2.0 * geo.l2_norm_sq(&g2)),
            ("grad_div", -2.0 * geo.l2_norm_sq(&covariant_derivative(geo, &dv)?)),
            ("div", 4.0 * c * n * geo.l2_norm_sq(&dv)),
            ("grad", 2.0 * c * (n + 2.0) * geo.l2_norm_sq(&g1)),
            ("norm", -2.0 * c * c * (n * n + n) * geo.l2_norm_sq(v)),
        ],
    ))
}

/// `Δα = Δ_H α + c(n−1)α` on 1-forms.
pub fn weitzenbock_residual(geo: &Geometry, alpha: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    Ok(IdentityCheck::pointwise(
        geo,
        "weitzenbock",
        &rough_laplacian(geo, alpha)?,
        vec![("hodge", hodge_laplacian_1form(geo, alpha)?), ("curvature", alpha.scaled(c * (n - 1.0)))],
    ))
}

/// `ΔKα − KΔα = c(n+1)Kα`.
pub fn k_commutator_residual(geo: &Geometry, alpha: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let ka = conformal_killing(geo, alpha)?;
    Ok(IdentityCheck::pointwise(
        geo,
        "k_commutator",
        &rough_laplacian(geo, &ka)?,
        vec![("k_laplacian", conformal_killing(geo, &rough_laplacian(geo, alpha)?)?), ("curvature", ka.scaled(c * (n + 1.0)))],
    ))
}

/// `Δδ*α − δ*Δα = c(n+1)δ*α + 2c(δα)h`.
pub fn delta_star_commutator_residual(geo: &Geometry, alpha: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let ds = delta_star(geo, alpha)?;
    let da = hodge_dstar(geo, alpha)?;
    Ok(IdentityCheck::pointwise(
        geo,
        "delta_star_commutator",
        &rough_laplacian(geo, &ds)?,
        vec![
            ("delta_star_laplacian", delta_star(geo, &rough_laplacian(geo, alpha)?)?),
            ("curvature", ds.scaled(c * (n + 1.0))),
            ("divergence", pure_trace(geo, &da.data).scaled(2.0 * c)),
        ],
    ))
}

/// `Δ²v = ∇^m∇^p ∇_p∇_m v − c(n−1)Δv + 4c²(tr v)h − 4c²n v`.
pub fn bilaplacian_commutator_residual(geo: &Geometry, v: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let lap = rough_laplacian(geo, v)?;
    let g2 = covariant_derivative(geo, &covariant_derivative(geo, v)?)?;
    let w = contracted_derivative(geo, &contracted_derivative(geo, &g2, 3)?, 2)?;
    Ok(IdentityCheck::pointwise(
        geo,
        "bilaplacian_commutator",
        &rough_laplacian(geo, &lap)?,
        vec![
            ("reordered", w),
            ("laplacian", lap.scaled(-c * (n - 1.0))),
            ("trace", pure_trace(geo, &trace(geo, v).data).scaled(4.0 * c * c)),
            ("zeroth", v.scaled(-4.0 * c * c * n)),
        ],
    ))
}

/// Fifth-order commutation for traceless `v`, with `X_j = v_{jk,}^k`:
/// `∇^k Δ ∇_i v_{jk} = ∇_i ΔX_j + 2c X_{i,j} − 2c (v_{pm,}^{mp}) h_{ij}
///  + c(n+2) Δv_{ij} + 2c(n−1) X_{j,i} + c²(n²+n) v_{ij}`.
pub fn traceless_commutator_residual(geo: &Geometry, v: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let lhs = contracted_derivative(geo, &rough_laplacian(geo, &covariant_derivative(geo, v)?)?, 1)?;
    let x = contracted_derivative(geo, v, 1)?;
    let gx = covariant_derivative(geo, &x)?;
    let dd = contracted_derivative(geo, &x, 0)?;
    Ok(IdentityCheck::pointwise(
        geo,
        "traceless_commutator",
        &lhs,
        vec![
            ("grad_laplacian_div", covariant_derivative(geo, &rough_laplacian(geo, &x)?)?),
            ("grad_div_swapped", gx.permute(&[1, 0]).scaled(2.0 * c)),
            ("double_divergence", pure_trace(geo, &dd.data).scaled(-2.0 * c)),
            ("laplacian", rough_laplacian(geo, v)?.scaled(c * (n + 2.0))),
            ("grad_div", gx.scaled(2.0 * c * (n - 1.0))),
            ("zeroth", v.scaled(c * c * (n * n + n))),
        ],
    ))
}

/// `K*Kα = δKα = −½Δ_H α + ((n−2)/(2n)) dd*α − c(n−1)α`.
pub fn k_adjoint_k_residual(geo: &Geometry, alpha: &TensorField) -> Result<IdentityCheck> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let lhs = divergence(geo, &conformal_killing(geo, alpha)?)?;
    Ok(IdentityCheck::pointwise(
        geo,
        "k_adjoint_k",
        &lhs,
        vec![
            ("hodge", hodge_laplacian_1form(geo, alpha)?.scaled(-0.5)),
            ("exact", hodge_d(geo, &hodge_dstar(geo, alpha)?)?.scaled((n - 2.0) / (2.0 * n))),
            ("zeroth", alpha.scaled(-c * (n - 1.0))),
        ],
    ))
}

/// `(Kα, LKα)` computed directly and as a sum of five nonpositive terms
/// (hyperbolic background).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImKExpansion {
    pub direct: f64,
    pub terms: Vec<(String, f64)>,
    pub expansion: f64,
    pub check: IdentityCheck,
}

pub fn imk_form_expansion(geo: &Geometry, alpha: &TensorField) -> Result<ImKExpansion> {
    if curvature_of(geo)? != -1.0 {
        return Err(Error::InvalidParameter("the five-term expansion is stated for c = -1".into()));
    }
    let n = geo.n as f64;
    let ka = conformal_killing(geo, alpha)?;
    let direct = quadratic_form(geo, &ka)?;
    let da = hodge_d(geo, alpha)?;
    let dsa = hodge_dstar(geo, alpha)?;
    let ddd = hodge_d(geo, &hodge_dstar(geo, &da)?)?;
    let dsdds = hodge_dstar(geo, &hodge_d(geo, &dsa)?)?;
    let lap_h = hodge_laplacian_1form(geo, alpha)?;
    let terms: Vec<(&str, f64)> = vec![
        ("d_dstar_d", -0.25 * form_inner(geo, &ddd, &ddd, 2)),
        ("dstar_d_dstar", -(n - 1.0) / (2.0 * n) * form_inner(geo, &dsdds, &dsdds, 0)),
        ("hodge_laplacian", -(n - 1.0) * form_inner(geo, &lap_h, &lap_h, 1)),
        ("d", -(n - 1.0) * (n - 1.0) * form_inner(geo, &da, &da, 2)),
        ("dstar", -n * (n - 1.0) / 2.0 * form_inner(geo, &dsa, &dsa, 0)),
    ];
    let expansion = terms.iter().map(|(_, v)| v).sum();
    let check = IdentityCheck::integral("imk_expansion", direct, terms.clone());
    Ok(ImKExpansion {
        direct,
        terms: terms.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        expansion,
        check,
    })
}

/// Norms entering the 1-form gap and the `‖Kα‖` bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OneFormBounds {
    pub alpha_sq: f64,
    /// `‖dα‖²` (2-form norm).
    pub d_sq: f64,
    /// `‖d*α‖²`.
    pub dstar_sq: f64,
    pub k_sq: f64,
}

impl OneFormBounds {
    /// `‖dα‖² + ‖d*α‖² − ¼(n−3)²‖α‖²`, nonnegative on hyperbolic space.
    pub fn gap_margin(&self, n: usize) -> f64 {
        let n = n as f64;
        self.d_sq + self.dstar_sq - 0.25 * (n - 3.0) * (n - 3.0) * self.alpha_sq
    }

    /// `5(n−1)(‖dα‖² + ‖d*α‖²) − ‖Kα‖²`.
    pub fn k_bound_margin(&self, n: usize) -> f64 {
        5.0 * (n as f64 - 1.0) * (self.d_sq + self.dstar_sq) - self.k_sq
    }
}

pub fn one_form_bounds(geo: &Geometry, alpha: &TensorField) -> Result<OneFormBounds> {
    let da = hodge_d(geo, alpha)?;
    let dsa = hodge_dstar(geo, alpha)?;
    Ok(OneFormBounds {
        alpha_sq: form_inner(geo, alpha, alpha, 1),
        d_sq: form_inner(geo, &da, &da, 2),
        dstar_sq: form_inner(geo, &dsa, &dsa, 0),
        k_sq: geo.l2_norm_sq(&conformal_killing(geo, alpha)?),
    })
}

/// Identity chain for a (numerically) transverse-traceless `v` on a
/// hyperbolic background.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TtFormReport {
    /// `(v, Lv)`.
    pub form: f64,
    pub norm_sq: f64,
    /// `ε_TT = ‖δv‖/‖∇v‖ + ‖tr v‖/‖v‖`.
    pub tt_residual: f64,
    /// `(v,Lv) = −½‖∇²v‖² + ((2n+1)/2)‖∇v‖² + n‖v‖²`.
    pub hessian_form: IdentityCheck,
    /// `(v,Lv) = −¼(‖A‖² − (n−1)‖T‖²)`.
    pub a_t_form: IdentityCheck,
    /// `(v,Lv) = −⅛(‖d^∇T‖² + ‖(d^∇)*T‖²) − ((n−2)/4)‖T‖²`.
    pub refined_form: IdentityCheck,
    /// `Δ^∇T = ΔT + (2n−3)T`.
    pub bochner: IdentityCheck,
    /// `−((n−2)/4)‖T‖² − (v,Lv)`, nonnegative when the bound holds.
    pub t_bound_margin: f64,
    /// `−((n−2)(n−3)²/8)‖v‖² − (v,Lv)`, nonnegative when the bound holds.
    pub norm_bound_margin: f64,
}

/// Relative budget granted per unit `ε_TT` to identities that assume `v` is TT.
pub const TT_BUDGET_FACTOR: f64 = 10.0;

impl TtFormReport {
    /// `TT_BUDGET_FACTOR · ε_TT`, the first-order allowance on `relative()`.
    pub fn budget(&self) -> f64 {
        TT_BUDGET_FACTOR * self.tt_residual
    }

    pub fn identities(&self) -> [&IdentityCheck; 4] {
        [&self.hessian_form, &self.a_t_form, &self.refined_form, &self.bochner]
    }

    /// Every identity within `budget() + tol` and both bounds within `tol` (relative).
    pub fn passes(&self, tol: f64) -> bool {
        let scale = self.form.abs().max(f64::MIN_POSITIVE);
        self.identities().iter().all(|c| c.relative() <= self.budget() + tol)
            && self.t_bound_margin >= -tol * scale
            && self.norm_bound_margin >= -tol * scale
    }
}

pub fn tt_form_checks(geo: &Geometry, v: &TensorField) -> Result<TtFormReport> {
    if curvature_of(geo)? != -1.0 {
        return Err(Error::InvalidParameter("the transverse-traceless chain is stated for c = -1".into()));
    }
    let n = geo.n as f64;
    let form = quadratic_form(geo, v)?;
    let v2 = geo.l2_norm_sq(v);
    let g1 = covariant_derivative(geo, v)?;
    let g2 = covariant_derivative(geo, &g1)?;
    let gv2 = geo.l2_norm_sq(&g1);
    let dv = divergence(geo, v)?;
    let tr = trace(geo, v);
    let tt_residual = norm(geo, &dv) / gv2.sqrt().max(f64::MIN_POSITIVE) + norm(geo, &tr) / v2.sqrt().max(f64::MIN_POSITIVE);
    let t = t_tensor(geo, v)?;
    let t2 = geo.l2_norm_sq(&t);
    let a = covariant_derivative(geo, &t)?;
    let a2 = geo.l2_norm_sq(&a);
    let dt = d_nabla(geo, &t)?;
    let dst = d_nabla_star(geo, &t)?;
    let hessian_form = IdentityCheck::integral(
        "tt_hessian_form",
        form,
        vec![("hessian", -0.5 * geo.l2_norm_sq(&g2)), ("grad", (2.0 * n + 1.0) / 2.0 * gv2), ("norm", n * v2)],
    );
    let a_t_form = IdentityCheck::integral("tt_a_t_form", form, vec![("a", -0.25 * a2), ("t", 0.25 * (n - 1.0) * t2)]);
    let refined_form = IdentityCheck::integral(
        "tt_refined_form",
        form,
        vec![
            ("d_nabla", -0.125 * form_inner(geo, &dt, &dt, 3)),
            ("d_nabla_star", -0.125 * form_inner(geo, &dst, &dst, 1)),
            ("t", -(n - 2.0) / 4.0 * t2),
        ],
    );
    let bochner = IdentityCheck::pointwise(
        geo,
        "tt_bochner",
        &twisted_laplacian(geo, &t)?,
        vec![("laplacian", rough_laplacian(geo, &t)?), ("zeroth", t.scaled(2.0 * n - 3.0))],
    );
    Ok(TtFormReport {
        form,
        norm_sq: v2,
        tt_residual,
        hessian_form,
        a_t_form,
        refined_form,
        bochner,
        t_bound_margin: -(n - 2.0) / 4.0 * t2 - form,
        norm_bound_margin: -(n - 2.0) * (n - 3.0) * (n - 3.0) / 8.0 * v2 - form,
    })
}

// ---------------------------------------------------------------------------
// Gap constants and Rayleigh sampling

/// Component gaps on hyperbolic space and their minimum `a(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapConstants {
    pub n: usize,
    /// `n(n−1)²/8`.
    pub trace: f64,
    /// `n/10`.
    pub im_k: f64,
    /// `(n−2)(n−3)²/8`.
    pub tt: f64,
    pub a: f64,
}

pub fn gap_constants(n: usize) -> GapConstants {
    let nf = n as f64;
    let trace = nf * (nf - 1.0) * (nf - 1.0) / 8.0;
    let im_k = nf / 10.0;
    let tt = (nf - 2.0) * (nf - 3.0) * (nf - 3.0) / 8.0;
    GapConstants { n, trace, im_k, tt, a: trace.min(im_k).min(tt) }
}

/// Upper bound asserted for `(v,Lv)/‖v‖²` on one component.
pub fn claimed_bound(component: Component, c: i32, n: usize) -> f64 {
    let g = gap_constants(n);
    match (c, component) {
        (-1, Component::Trace) => -g.trace,
        (-1, Component::ImK) => -g.im_k,
        (-1, Component::Tt) => -g.tt,
        (1, Component::ImK | Component::Tt) => -(n as f64),
        _ => 0.0,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayleighSample {
    pub seed: u64,
    pub quotient: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub component: Component,
    pub c: i32,
    pub n: usize,
    pub samples: Vec<RayleighSample>,
    pub identity_residuals: Vec<IdentityCheck>,
    pub claimed_bound: f64,
    pub tolerance: f64,
}

impl SpectralReport {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }

    pub fn max_quotient(&self) -> f64 {
        self.samples.iter().map(|s| s.quotient).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Seeded admissible field in one component. On the sphere, trace samples
/// have mean-zero `f` (volume-preserving variations).
pub fn component_sample(geo: &Geometry, component: Component, support: &Support, seed: u64) -> Result<TensorField> {
    match component {
        Component::Trace => trace_sample(geo, support, seed, geo.curvature == Some(1.0)),
        Component::ImK => Ok(im_k_sample(geo, support, seed)?.1),
        Component::Tt => tt_sample(geo, support, seed),
    }
}

/// `(v,Lv)/‖v‖²` over seeded samples of one component, each compared with
/// [`claimed_bound`] plus `tolerance`. Samples run in parallel.
pub fn rayleigh_sample(
    geo: &Geometry,
    component: Component,
    support: &Support,
    seeds: &[u64],
    tolerance: f64,
) -> Result<SpectralReport> {
    let c = curvature_of(geo)?;
    let ci = c.round() as i32;
    let bound = claimed_bound(component, ci, geo.n);
    let samples = seeds
        .par_iter()
        .map(|&seed| -> Result<RayleighSample> {
            let v = component_sample(geo, component, support, seed)?;
            let q = quadratic_form(geo, &v)? / geo.l2_norm_sq(&v);
            Ok(RayleighSample { seed, quotient: q, pass: q <= bound + tolerance })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralReport {
        component,
        c: ci,
        n: geo.n,
        samples,
        identity_residuals: Vec::new(),
        claimed_bound: bound,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_gamma() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn sphere_area_from_moments() {
        // |S^2| = 4π, |S^4| = 8π²/3.
        assert!((sphere_moment(&[0, 0, 0]) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_moment(&[0; 5]) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        // ∫ x² over S^2 is 4π/3.
        assert!((sphere_moment(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_multiplicities() {
        let s = sphere_trace_spectrum(3, 4);
        assert_eq!(s.iter().map(|m| m.multiplicity).collect::<Vec<_>>(), vec![5, 14, 30]);
    }
}
