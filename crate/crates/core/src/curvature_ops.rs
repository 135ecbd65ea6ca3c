//! Curvature of a general metric field on a model-space chart: Levi-Civita
//! connection, Riemann/Ricci/scalar curvature, Schouten and Weyl tensors,
//! the Bach tensor, the Bianchi operator, the gauge vector and the
//! gauge-adjusted flow right-hand side.
//!
//! Conventions: `R_ijkl = g_lm R^m_ijk` with
//! `R^m_ijk = ∂_i Γ^m_jk − ∂_j Γ^m_ik + Γ^m_ip Γ^p_jk − Γ^m_jp Γ^p_ik`,
//! so a space of constant curvature `c` has `R_ijkl = c(g_il g_jk − g_ik g_jl)`
//! and `Ric_jk = g^il R_ijkl`.
//!
//! Derivatives are split into an exact background part and finite
//! differences of compactly supported differences (`g − h`, `Γ(g) − Γ(h)`,
//! `P − (c/2) g`, `Ric − c(n−1) g`), so non-polynomial background metrics add
//! no truncation error.

use crate::error::{Error, Result};
use crate::field::{decode, encode, Symmetry, TensorField};
use crate::geometry::{Comps, Geometry};
use crate::grid::{Grid, Scheme};
use crate::model_spaces::ModelSpace;
use crate::tensor_fields::{
    contracted_derivative, covariant_derivative, delta_star, divergence, hessian, rough_laplacian, trace,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// A constant-curvature background with its nodal geometry and (optionally)
/// exact first derivatives of the metric and Christoffel symbols.
#[derive(Clone, Debug)]
pub struct Background {
    pub geo: Geometry,
    pub c: f64,
    exact: Option<(Comps, Comps)>,
}

impl Background {
    pub fn new(space: &ModelSpace, scheme: Scheme) -> Result<Self> {
        let geo = space.geometry(scheme)?;
        let exact = Some((space.metric_derivative_comps(), space.christoffel_derivative_comps()));
        Ok(Background { geo, c: space.c as f64, exact })
    }

    /// Background whose metric is differentiated numerically like any other
    /// field (used to measure truncation of the full pipeline).
    pub fn fd_only(space: &ModelSpace, scheme: Scheme) -> Result<Self> {
        Ok(Background { geo: space.geometry(scheme.lenient())?, c: space.c as f64, exact: None })
    }

    pub fn n(&self) -> usize {
        self.geo.n
    }

    pub fn nnodes(&self) -> usize {
        self.geo.nnodes()
    }

    pub fn metric(&self) -> TensorField {
        let mut h = self.geo.metric_field();
        h.sym = Symmetry::Sym2;
        h
    }

    /// `h + v`.
    pub fn perturbed(&self, v: &TensorField, s: f64) -> TensorField {
        let mut g = self.metric();
        g.axpy(s, v);
        g.sym = Symmetry::Sym2;
        g
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Background {
        Background { geo: self.geo.with_scheme(scheme), ..self.clone() }
    }
}

fn partial_opt(scheme: &Scheme, grid: &Grid, f: &[f64], axis: usize) -> Result<Option<Vec<f64>>> {
    if axis >= grid.active() || f.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    Ok(Some(scheme.partial(grid, f, axis)?))
}

fn add_opt(a: Option<&[f64]>, b: Option<Vec<f64>>) -> Option<Vec<f64>> {
    match (a, b) {
        (None, b) => b,
        (Some(a), None) => Some(a.to_vec()),
        (Some(a), Some(mut b)) => {
            b.iter_mut().zip(a).for_each(|(x, y)| *x += y);
            Some(b)
        }
    }
}

/// Derivatives `∂_d X_I` of a component list, index `I * n + d`, combining
/// an exact background part with finite differences of `X − X_bg`.
fn split_partials(
    bg: &Background,
    x: &Comps,
    x_bg: &Comps,
    exact: Option<&Comps>,
) -> Result<Comps> {
    let n = bg.n();
    let grid = &bg.geo.grid;
    let scheme = bg.geo.scheme;
    let nn = grid.nnodes();
    let jobs: Vec<(usize, usize)> = (0..x.len()).flat_map(|i| (0..n).map(move |d| (i, d))).collect();
    jobs.par_iter()
        .map(|&(i, d)| -> Result<Option<Vec<f64>>> {
            match exact {
                Some(ex) => {
                    let diff: Vec<f64> = match (&x[i], &x_bg[i]) {
                        (None, None) => return Ok(ex[i * n + d].clone()),
                        (Some(a), None) => a.clone(),
                        (None, Some(b)) => b.iter().map(|v| -v).collect(),
                        // Differences at round-off level are snapped to zero so that
                        // exactly unperturbed regions stay exactly compact.
                        (Some(a), Some(b)) => a
                            .iter()
                            .zip(b)
                            .map(|(p, q)| if (p - q).abs() <= 1e3 * f64::EPSILON * p.abs().max(q.abs()) { 0.0 } else { p - q })
                            .collect(),
                    };
                    let fd = partial_opt(&scheme, grid, &diff, d)?;
                    Ok(add_opt(ex[i * n + d].as_deref(), fd))
                }
                None => match &x[i] {
                    Some(a) => partial_opt(&scheme.lenient(), grid, a, d),
                    None => Ok(None),
                },
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| {
            debug_assert!(v.iter().flatten().all(|c| c.len() == nn));
            v
        })
}

fn field_comps(f: &TensorField) -> Comps {
    (0..f.ncomp()).map(|c| if f.comp_is_zero(c) { None } else { Some(f.comp(c).to_vec()) }).collect()
}

/// Levi-Civita data of a metric field: its geometry and `∂_d Γ^l_bc`
/// (index `((l n + b) n + c) n + d`).
pub struct Connection {
    pub geo: Geometry,
    pub dgamma: Comps,
}

pub fn levi_civita(bg: &Background, g: &TensorField) -> Result<Connection> {
    let n = bg.n();
    let nn = bg.nnodes();
    if g.rank != 2 || g.n != n || g.nnodes != nn {
        return Err(Error::Shape("metric field must be a rank-2 field on the background grid".into()));
    }
    // Pointwise inverse and volume factor.
    let mut inv = vec![vec![0.0; nn]; n * n];
    let mut weight = vec![0.0; nn];
    let cell = bg.geo.grid.cell_measure();
    let per_node: Vec<Result<(Vec<f64>, f64)>> = (0..nn)
        .into_par_iter()
        .map(|p| {
            let m = DMatrix::from_fn(n, n, |a, b| 0.5 * (g.value(&[a, b], p) + g.value(&[b, a], p)));
            let ch = m.cholesky().ok_or(Error::NotPositiveDefinite(p))?;
            let det = ch.l_dirty().diagonal().iter().map(|d| d * d).product::<f64>();
            let mi = ch.inverse();
            Ok((mi.iter().copied().collect(), det.sqrt()))
        })
        .collect();
    for (p, r) in per_node.into_iter().enumerate() {
        let (mi, sd) = r?;
        // nalgebra is column-major; the inverse is symmetric.
        for k in 0..n * n {
            inv[k][p] = mi[k];
        }
        weight[p] = sd * cell;
    }
    let inverse: Comps = inv.into_iter().map(|v| if v.iter().all(|x| *x == 0.0) { None } else { Some(v) }).collect();
    let metric = field_comps(g);

    let (dh, dgam_h) = match &bg.exact {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let dg = split_partials(bg, &metric, &bg.geo.metric, dh)?;

    // Γ^l_bc = ½ g^{la}(∂_b g_ac + ∂_c g_ab − ∂_a g_bc).
    let d = |a: usize, b: usize, dd: usize| dg[(a * n + b) * n + dd].as_deref();
    let gamma: Comps = (0..n * n * n)
        .into_par_iter()
        .map(|lbc| {
            let (l, b, c) = (lbc / (n * n), (lbc / n) % n, lbc % n);
            let mut out: Option<Vec<f64>> = None;
            for a in 0..n {
                let Some(gla) = inverse[l * n + a].as_deref() else { continue };
                for (arr, sign) in [(d(a, c, b), 0.5), (d(a, b, c), 0.5), (d(b, c, a), -0.5)] {
                    if let Some(arr) = arr {
                        let o = out.get_or_insert_with(|| vec![0.0; nn]);
                        for q in 0..nn {
                            o[q] += sign * gla[q] * arr[q];
                        }
                    }
                }
            }
            out.filter(|v| v.iter().any(|x| *x != 0.0))
        })
        .collect();
    let dgamma = split_partials(bg, &gamma, &bg.geo.gamma, dgam_h)?;
    let geo = Geometry::new(bg.geo.grid.clone(), bg.geo.scheme, metric, inverse, gamma, weight, None)?;
    Ok(Connection { geo, dgamma })
}

/// Curvature of a metric field together with its Levi-Civita geometry.
pub struct Curvature {
    pub geo: Geometry,
    /// `R_ijkl`.
    pub riemann: TensorField,
    pub ricci: TensorField,
    pub scal: Vec<f64>,
}

pub fn curvature_from_metric(bg: &Background, g: &TensorField) -> Result<Curvature> {
    let conn = levi_civita(bg, g)?;
    let geo = conn.geo;
    let n = geo.n;
    let nn = geo.nnodes();
    let dgam = |l: usize, b: usize, c: usize, d: usize| conn.dgamma[((l * n + b) * n + c) * n + d].as_deref();
    // R^m_ijk, stored at encode([m, i, j, k]).
    let mut up = TensorField::zeros(4, n, nn);
    up.data.par_chunks_mut(nn).enumerate().for_each(|(comp, dst)| {
        let idx = decode(n, 4, comp);
        let (m, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
        if i == j {
            return;
        }
        if let Some(a) = dgam(m, j, k, i) {
            dst.iter_mut().zip(a).for_each(|(x, y)| *x += y);
        }
        if let Some(a) = dgam(m, i, k, j) {
            dst.iter_mut().zip(a).for_each(|(x, y)| *x -= y);
        }
        for p in 0..n {
            if let (Some(a), Some(b)) = (geo.gamma_comp(m, i, p), geo.gamma_comp(p, j, k)) {
                for q in 0..nn {
                    dst[q] += a[q] * b[q];
                }
            }
            if let (Some(a), Some(b)) = (geo.gamma_comp(m, j, p), geo.gamma_comp(p, i, k)) {
                for q in 0..nn {
                    dst[q] -= a[q] * b[q];
                }
            }
        }
    });
    // R_ijkl = g_lm R^m_ijk.
    let mut riemann = TensorField::zeros(4, n, nn);
    riemann.data.par_chunks_mut(nn).enumerate().for_each(|(comp, dst)| {
        let idx = decode(n, 4, comp);
        for m in 0..n {
            if let Some(glm) = geo.metric_comp(idx[3], m) {
                let src = up.at(&[m, idx[0], idx[1], idx[2]]);
                for q in 0..nn {
                    dst[q] += glm[q] * src[q];
                }
            }
        }
    });
    let mut ricci = TensorField::zeros(2, n, nn);
    for j in 0..n {
        for k in 0..n {
            let dst = ricci.at_mut(&[j, k]);
            for i in 0..n {
                let src = up.at(&[i, i, j, k]);
                dst.iter_mut().zip(src).for_each(|(x, y)| *x += y);
            }
        }
    }
    let ricci = ricci.with_symmetry(Symmetry::Sym2)?;
    let scal = geo.trace(&ricci, 0, 1).data;
    Ok(Curvature { geo, riemann, ricci, scal })
}

/// `P = (Ric − S g / (2(n−1))) / (n−2)`.
pub fn schouten(curv: &Curvature) -> TensorField {
    let n = curv.geo.n as f64;
    let g = curv.geo.metric_field();
    let mut p = curv.ricci.clone();
    let s: Vec<f64> = curv.scal.iter().map(|v| -v / (2.0 * (n - 1.0))).collect();
    p.axpy(1.0, &g.times_scalar(&s));
    let mut p = p.scaled(1.0 / (n - 2.0));
    p.sym = Symmetry::Sym2;
    p
}

/// `(a ⊙ b)_ijkl = a_il b_jk + a_jk b_il − a_ik b_jl − a_jl b_ik`.
pub fn kulkarni_nomizu(a: &TensorField, b: &TensorField) -> TensorField {
    let n = a.n;
    let nn = a.nnodes;
    let mut out = TensorField::zeros(4, n, nn);
    out.data.par_chunks_mut(nn).enumerate().for_each(|(comp, dst)| {
        let x = decode(n, 4, comp);
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let terms = [
            (a.at(&[i, l]), b.at(&[j, k]), 1.0),
            (a.at(&[j, k]), b.at(&[i, l]), 1.0),
            (a.at(&[i, k]), b.at(&[j, l]), -1.0),
            (a.at(&[j, l]), b.at(&[i, k]), -1.0),
        ];
        for (p, q, s) in terms {
            for t in 0..nn {
                dst[t] += s * p[t] * q[t];
            }
        }
    });
    out
}

/// Weyl part `U − P_U ⊙ g` of an algebraic curvature tensor `U`, where `P_U`
/// is the Schouten-type trace built from `Ric_U = g^il U_ijkl`.
pub fn weyl_projection(geo: &Geometry, u: &TensorField) -> TensorField {
    let n = geo.n as f64;
    let ric = geo.trace(u, 0, 3);
    let s = geo.trace(&ric, 0, 1).data;
    let g = geo.metric_field();
    let mut p = ric.clone();
    let sc: Vec<f64> = s.iter().map(|v| -v / (2.0 * (n - 1.0))).collect();
    p.axpy(1.0, &g.times_scalar(&sc));
    let p = p.scaled(1.0 / (n - 2.0));
    u.sub(&kulkarni_nomizu(&p, &g))
}

/// `W = R − P ⊙ g`.
pub fn weyl(curv: &Curvature) -> TensorField {
    let p = schouten(curv);
    curv.riemann.sub(&kulkarni_nomizu(&p, &curv.geo.metric_field()))
}

/// `out_{rest} = Σ_ab up_ab t_{..a@s1..b@s2..}` for a rank-4 `t`.
fn contract_with(t: &TensorField, up: &TensorField, s1: usize, s2: usize) -> TensorField {
    let n = t.n;
    let nn = t.nnodes;
    let mut out = TensorField::zeros(2, n, nn);
    out.data.par_chunks_mut(nn).enumerate().for_each(|(comp, dst)| {
        let rest = decode(n, 2, comp);
        for a in 0..n {
            for b in 0..n {
                let w = up.at(&[a, b]);
                if w.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let mut idx = [0usize; 4];
                let mut r = rest.iter();
                for (s, slot) in idx.iter_mut().enumerate() {
                    *slot = if s == s1 {
                        a
                    } else if s == s2 {
                        b
                    } else {
                        *r.next().unwrap()
                    };
                }
                let src = t.comp(encode(n, &idx));
                for q in 0..nn {
                    dst[q] += w[q] * src[q];
                }
            }
        }
    });
    out
}

fn raise_both(geo: &Geometry, u: &TensorField) -> TensorField {
    geo.raise(&geo.raise(u, 0), 1)
}

/// Pieces shared by the Bach tensor, the flow and the consistency checks.
struct BachParts {
    curv: Curvature,
    p: TensorField,
    /// `P − (c/2) g`, compactly supported.
    p_rel: TensorField,
    /// `Ric − c(n−1) g`, compactly supported.
    ric_rel: TensorField,
    /// `S − c n(n−1)`, compactly supported.
    scal_rel: TensorField,
    p_up: TensorField,
}

/// `a − b` with differences at round-off level (relative to `|a|`, `|b|`)
/// set to zero, so unperturbed regions stay exactly compact.
fn snapped_diff(a: &TensorField, b: &TensorField) -> TensorField {
    let mut out = a.clone();
    for (x, y) in out.data.iter_mut().zip(&b.data) {
        let d = *x - y;
        *x = if d.abs() <= 1e3 * f64::EPSILON * x.abs().max(y.abs()) { 0.0 } else { d };
    }
    out
}

fn bach_parts(bg: &Background, g: &TensorField) -> Result<BachParts> {
    let curv = curvature_from_metric(bg, g)?;
    let n = bg.n() as f64;
    let c = bg.c;
    let gm = curv.geo.metric_field();
    let p = schouten(&curv);
    let p_rel = snapped_diff(&p, &gm.scaled(0.5 * c));
    let ric_rel = snapped_diff(&curv.ricci, &gm.scaled(c * (n - 1.0)));
    let s_bg = TensorField::scalar(vec![c * n * (n - 1.0); curv.scal.len()], bg.n());
    let scal_rel = snapped_diff(&TensorField::scalar(curv.scal.clone(), bg.n()), &s_bg);
    let p_up = raise_both(&curv.geo, &p);
    Ok(BachParts { curv, p, p_rel, ric_rel, scal_rel, p_up })
}

/// `B_ij = P_ij,k^k − P_ik,j^k + P^kl W_kijl`.
pub fn bach_tensor(bg: &Background, g: &TensorField) -> Result<TensorField> {
    let parts = bach_parts(bg, g)?;
    let geo = &parts.curv.geo;
    let lap = rough_laplacian(geo, &parts.p_rel)?;
    let dp = covariant_derivative(geo, &parts.p_rel)?;
    let cross = contracted_derivative(geo, &dp, 1)?;
    let w = weyl(&parts.curv);
    let pw = contract_with(&w, &parts.p_up, 0, 3);
    let mut b = lap.sub(&cross).add(&pw);
    b = b.with_symmetry(Symmetry::Sym2)?;
    Ok(b)
}

/// The three printed expressions for `B + ΔS g / (2(n−1)(n−2))` and the
/// directly computed value.
pub struct ModifiedBachForms {
    pub direct: TensorField,
    pub schouten_form: TensorField,
    pub weyl_form: TensorField,
    pub kulkarni_form: TensorField,
}

pub fn modified_bach_forms(bg: &Background, g: &TensorField) -> Result<ModifiedBachForms> {
    let parts = bach_parts(bg, g)?;
    let geo = &parts.curv.geo;
    let n = bg.n() as f64;
    let gm = geo.metric_field();
    let lap_p = rough_laplacian(geo, &parts.p_rel)?;
    let dp = covariant_derivative(geo, &parts.p_rel)?;
    let cross = contracted_derivative(geo, &dp, 1)?;
    let w = weyl(&parts.curv);
    let pw = contract_with(&w, &parts.p_up, 0, 3);
    let lap_s = rough_laplacian(geo, &parts.scal_rel)?;
    let trace_term = gm.times_scalar(&lap_s.data).scaled(1.0 / (2.0 * (n - 1.0) * (n - 2.0)));
    let direct = lap_p.sub(&cross).add(&pw).add(&trace_term);

    let lap_ric = rough_laplacian(geo, &parts.ric_rel)?.scaled(1.0 / (n - 2.0));
    let schouten_form = lap_ric.sub(&cross).add(&pw);

    let hess_s = hessian(geo, &parts.scal_rel)?.scaled(1.0 / (2.0 * (n - 1.0)));
    let (q1, q2, q3) = quadratic_terms(&parts);
    // −R_jki^m P_m^k = ½ q1.
    let weyl_form = lap_ric.sub(&hess_s).add(&q1.scaled(0.5)).add(&q2).add(&pw);
    let kulkarni_form = lap_ric.sub(&hess_s).add(&q1).add(&q2).add(&q3);
    Ok(ModifiedBachForms { direct, schouten_form, weyl_form, kulkarni_form })
}

/// `Q1 = −2 R_jki^m P_m^k`, `Q2 = −Ric_j^m P_im`, `Q3 = −P^kl (P ⊙ g)_kijl`.
fn quadratic_terms(parts: &BachParts) -> (TensorField, TensorField, TensorField) {
    let geo = &parts.curv.geo;
    let q1 = contract_with(&parts.curv.riemann, &parts.p_up, 1, 3).permute(&[1, 0]).scaled(-2.0);
    let ric_mixed = geo.raise(&parts.curv.ricci, 1);
    let n = geo.n;
    let nn = geo.nnodes();
    let mut q2 = TensorField::zeros(2, n, nn);
    for i in 0..n {
        for j in 0..n {
            let dst = q2.at_mut(&[i, j]);
            for m in 0..n {
                let (r, p) = (ric_mixed.at(&[j, m]), parts.p.at(&[i, m]));
                for q in 0..nn {
                    dst[q] -= r[q] * p[q];
                }
            }
        }
    }
    let pg = kulkarni_nomizu(&parts.p, &geo.metric_field());
    let q3 = contract_with(&pg, &parts.p_up, 0, 3).scaled(-1.0);
    (q1, q2, q3)
}

/// `[β_h(g)]_i = −h^jk g_ij,k + ½ (h^jk g_jk)_,i` with `h`-covariant derivatives.
pub fn bianchi(bg: &Background, g: &TensorField) -> Result<TensorField> {
    let w = g.sub(&bg.metric());
    bianchi_linear(&bg.geo, &w)
}

fn bianchi_linear(geo: &Geometry, w: &TensorField) -> Result<TensorField> {
    let div = divergence(geo, w)?;
    let dtr = covariant_derivative(geo, &trace(geo, w))?;
    Ok(div.add(&dtr.scaled(0.5)))
}

/// Gauge vector `Z = ½ Δ_h β_h(g) + μ δ_h g + ν d(tr^h g)`; every term only
/// sees `g − h` because `β_h(h)`, `δ_h h` and `d(tr^h h)` vanish.
pub fn gauge_vector_general(bg: &Background, g: &TensorField, mu: f64, nu: f64) -> Result<TensorField> {
    let geo = &bg.geo;
    let w = g.sub(&bg.metric());
    let beta = bianchi_linear(geo, &w)?;
    let mut z = rough_laplacian(geo, &beta)?.scaled(0.5);
    if mu != 0.0 {
        z.axpy(mu, &divergence(geo, &w)?);
    }
    if nu != 0.0 {
        z.axpy(nu, &covariant_derivative(geo, &trace(geo, &w))?);
    }
    Ok(z)
}

/// Gauge vector with the self-adjoint choice `μ = −c(n−1)/2`, `ν = −c/4`.
pub fn gauge_vector(bg: &Background, g: &TensorField) -> Result<TensorField> {
    let n = bg.n() as f64;
    gauge_vector_general(bg, g, -bg.c * (n - 1.0) / 2.0, -bg.c / 4.0)
}

/// Right-hand side of the gauge-adjusted flow with gauge constants `(μ, ν)`:
/// `(Δ_g Ric + 2 δ*_g Z) / (n−2) − 2 R_jki^m P_m^k − Ric_j^m P_im − P^kl (P⊙g)_kijl`.
pub fn flow_rhs_general(bg: &Background, g: &TensorField, mu: f64, nu: f64) -> Result<TensorField> {
    let parts = bach_parts(bg, g)?;
    let geo = &parts.curv.geo;
    let n = bg.n() as f64;
    let z = gauge_vector_general(bg, g, mu, nu)?;
    let mut f = rough_laplacian(geo, &parts.ric_rel)?;
    f.axpy(2.0, &delta_star(geo, &z)?);
    let mut f = f.scaled(1.0 / (n - 2.0));
    let (q1, q2, q3) = quadratic_terms(&parts);
    f = f.add(&q1).add(&q2).add(&q3);
    f.with_symmetry(Symmetry::Sym2)
}

pub fn flow_rhs(bg: &Background, g: &TensorField) -> Result<TensorField> {
    let n = bg.n() as f64;
    flow_rhs_general(bg, g, -bg.c * (n - 1.0) / 2.0, -bg.c / 4.0)
}

/// `∫ tr^g F dvol_g`, the volume rate of the flow (times 2).
pub fn volume_rate(bg: &Background, g: &TensorField, f: &TensorField) -> Result<f64> {
    let conn = levi_civita(bg, g)?;
    let tr = conn.geo.trace(f, 0, 1);
    Ok(conn.geo.integrate(&tr.data))
}

/// Riemannian volume of a metric field.
pub fn metric_volume(bg: &Background, g: &TensorField) -> Result<f64> {
    Ok(levi_civita(bg, g)?.geo.volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_spaces::{make_model, Chart, ChartParams};

    #[test]
    fn hyperbolic_background_has_exact_curvature() {
        let sp = make_model(
            -1,
            4,
            &ChartParams { chart: Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }, points: vec![12, 8] },
        )
        .unwrap();
        let bg = Background::new(&sp, Scheme::fd(4)).unwrap();
        let curv = curvature_from_metric(&bg, &bg.metric()).unwrap();
        for s in &curv.scal {
            assert!((s + 12.0).abs() < 1e-11, "{s}");
        }
        let w = weyl(&curv);
        assert!(w.max_abs() < 1e-9);
    }

    #[test]
    fn kulkarni_nomizu_of_metric_with_itself() {
        let sp = make_model(0, 3, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points: vec![2] }).unwrap();
        let geo = sp.geometry(Scheme::default()).unwrap();
        let h = geo.metric_field();
        let hh = kulkarni_nomizu(&h, &h);
        assert_eq!(hh.value(&[0, 1, 1, 0], 0), 2.0);
        assert_eq!(hh.value(&[0, 1, 0, 1], 0), -2.0);
        assert_eq!(hh.value(&[0, 0, 1, 1], 0), 0.0);
    }
}
