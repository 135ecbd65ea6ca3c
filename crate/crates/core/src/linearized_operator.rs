//! Linearization of the gauge-adjusted flow at a constant-curvature metric.
//!
//! With `Δ` the rough Laplacian (trace of `∇²`), `dd v = v_pm,^mp` and
//! `Hess(tr v)` the covariant Hessian of the trace, the general-gauge
//! operator is
//!
//! `Lv = −½Δ²v + (c(n+2)/2)Δv − c(dd v)h − c(Δ tr v)h − (c−2μ)δ*δv
//!       − ((c−4ν)/2)Hess(tr v) + c² (tr v) h − c² n v`,
//!
//! and the flow linearizes to `L/(n−2)`.

use crate::curvature_ops::{flow_rhs, Background};
use crate::error::{Error, Result};
use crate::field::{Symmetry, TensorField};
use crate::geometry::Geometry;
use crate::tensor_fields::{
    conformal_killing, contracted_derivative, covariant_derivative, delta_star, divergence, hessian, hodge_d,
    pure_trace, rough_laplacian, trace,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub mu: f64,
    pub nu: f64,
}

impl GaugeParams {
    pub fn new(mu: f64, nu: f64) -> Self {
        GaugeParams { mu, nu }
    }

    /// The gauge making `L` formally self-adjoint: `μ = −c(n−1)/2`, `ν = −c/4`.
    pub fn self_adjoint(c: f64, n: usize) -> Self {
        GaugeParams { mu: -c * (n as f64 - 1.0) / 2.0, nu: -c / 4.0 }
    }
}

fn curvature_of(geo: &Geometry) -> Result<f64> {
    geo.curvature.ok_or_else(|| Error::InvalidParameter("operator needs a constant-curvature background".into()))
}

/// `dd v = v_pm,^mp` (equal to `δδv`).
pub fn double_divergence(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let d1 = contracted_derivative(geo, v, 1)?;
    contracted_derivative(geo, &d1, 0)
}

/// `∂_s Ric` at `h` in direction `v`:
/// `−½Δv + ½(v_ip,^p_j + v_jp,^p_i) − ½ Hess(tr v) − c(tr v)h + c n v`.
pub fn linearized_ricci(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let tr = trace(geo, v);
    let mut out = rough_laplacian(geo, v)?.scaled(-0.5);
    // v_ip,^p_j + v_jp,^p_i = 2 δ*(−δv).
    out.axpy(-1.0, &delta_star(geo, &divergence(geo, v)?)?);
    out.axpy(-0.5, &hessian(geo, &tr)?);
    out.axpy(-c, &pure_trace(geo, &tr.data));
    out.axpy(c * n, v);
    out.with_symmetry(Symmetry::Sym2)
}

/// `∂_s P` at `h` in direction `v`, from the closed-form variation.
pub fn linearized_schouten(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let tr = trace(geo, v);
    let k = 1.0 / (n - 2.0);
    let mut out = rough_laplacian(geo, v)?.scaled(-0.5 * k);
    out.axpy(-k, &delta_star(geo, &divergence(geo, v)?)?);
    out.axpy(-0.5 * k, &hessian(geo, &tr)?);
    let lap_tr = rough_laplacian(geo, &tr)?;
    let dd = double_divergence(geo, v)?;
    let s: Vec<f64> = lap_tr
        .data
        .iter()
        .zip(&dd.data)
        .zip(&tr.data)
        .map(|((l, d), t)| (l - d) / (2.0 * (n - 1.0) * (n - 2.0)) - c * t / (2.0 * (n - 2.0)))
        .collect();
    out.axpy(1.0, &pure_trace(geo, &s));
    out.axpy(c * n * k / 2.0, v);
    out.with_symmetry(Symmetry::Sym2)
}

/// `h^ab ∂_s P_ab = (dd v − Δ tr v) / (2(n−1))`.
pub fn linearized_schouten_trace(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let n = geo.n as f64;
    let dd = double_divergence(geo, v)?;
    let lap_tr = rough_laplacian(geo, &trace(geo, v))?;
    Ok(dd.sub(&lap_tr).scaled(1.0 / (2.0 * (n - 1.0))))
}

/// Each named term of `Lv` (or of the adjoint), kept separately so a failing
/// identity can be traced to one term.
#[derive(Clone, Debug)]
pub struct LTerms {
    pub terms: Vec<(&'static str, TensorField)>,
}

impl LTerms {
    pub fn total(&self) -> TensorField {
        let mut it = self.terms.iter();
        let mut out = it.next().expect("at least one term").1.clone();
        for (_, t) in it {
            out.axpy(1.0, t);
        }
        out.sym = Symmetry::Sym2;
        out
    }

    pub fn term(&self, name: &str) -> Option<&TensorField> {
        self.terms.iter().find(|(k, _)| *k == name).map(|(_, t)| t)
    }

    /// `(name, ‖term‖²)` pairs for diagnostics.
    pub fn norms(&self, geo: &Geometry) -> Vec<(&'static str, f64)> {
        self.terms.iter().map(|(k, t)| (*k, geo.l2_norm_sq(t))).collect()
    }
}

fn l_terms(geo: &Geometry, v: &TensorField, gauge: GaugeParams, adjoint: bool) -> Result<LTerms> {
    if v.rank != 2 {
        return Err(Error::Shape(format!("L acts on symmetric 2-tensors, got rank {}", v.rank)));
    }
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let tr = trace(geo, v);
    let lap = rough_laplacian(geo, v)?;
    let mut terms = vec![("bilaplacian", rough_laplacian(geo, &lap)?.scaled(-0.5))];
    if c != 0.0 {
        terms.push(("laplacian", lap.scaled(c * (n + 2.0) / 2.0)));
    }
    let hess_tr = || hessian(geo, &tr);
    let dd_h = || -> Result<TensorField> { Ok(pure_trace(geo, &double_divergence(geo, v)?.data)) };
    if c != 0.0 {
        let t = if adjoint { hess_tr()? } else { dd_h()? };
        terms.push(("double_divergence", t.scaled(-c)));
        let lap_tr = rough_laplacian(geo, &tr)?;
        terms.push(("laplacian_trace", pure_trace(geo, &lap_tr.data).scaled(-c)));
    }
    let k_dd = -(c - 2.0 * gauge.mu);
    if k_dd != 0.0 {
        terms.push(("delta_star_delta", delta_star(geo, &divergence(geo, v)?)?.scaled(k_dd)));
    }
    let k_h = -(c - 4.0 * gauge.nu) / 2.0;
    if k_h != 0.0 {
        let t = if adjoint { dd_h()? } else { hess_tr()? };
        terms.push(("hessian_trace", t.scaled(k_h)));
    }
    if c != 0.0 {
        terms.push(("trace", pure_trace(geo, &tr.data).scaled(c * c)));
        terms.push(("zeroth", v.scaled(-c * c * n)));
    }
    Ok(LTerms { terms })
}

pub fn l_terms_general(geo: &Geometry, v: &TensorField, gauge: GaugeParams) -> Result<LTerms> {
    l_terms(geo, v, gauge, false)
}

pub fn apply_l_general(geo: &Geometry, v: &TensorField, gauge: GaugeParams) -> Result<TensorField> {
    Ok(l_terms(geo, v, gauge, false)?.total())
}

/// Formal L² adjoint of [`apply_l_general`]: the double-divergence and
/// trace-Hessian terms exchange their roles.
pub fn apply_l_adjoint_general(geo: &Geometry, v: &TensorField, gauge: GaugeParams) -> Result<TensorField> {
    Ok(l_terms(geo, v, gauge, true)?.total())
}

/// `L` in the self-adjoint gauge.
pub fn apply_l(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    apply_l_general(geo, v, GaugeParams::self_adjoint(c, geo.n))
}

/// Coefficient of `L(f h) = (−½Δ²f − (cn/2)Δf) h`.
pub fn apply_l_trace(geo: &Geometry, f: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let lap = rough_laplacian(geo, f)?;
    let mut out = rough_laplacian(geo, &lap)?.scaled(-0.5);
    out.axpy(-c * n / 2.0, &lap);
    Ok(out)
}

/// `L` restricted to transverse-traceless tensors: `−½Δ²v + (c(n+2)/2)Δv − c² n v`.
pub fn apply_l_tt(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    let n = geo.n as f64;
    let lap = rough_laplacian(geo, v)?;
    let mut out = rough_laplacian(geo, &lap)?.scaled(-0.5);
    out.axpy(c * (n + 2.0) / 2.0, &lap);
    out.axpy(-c * c * n, v);
    out.with_symmetry(Symmetry::Sym2)
}

/// `L(Kα)` on a hyperbolic background:
/// `−½Δ²Kα − ((n+2)/2)ΔKα + n KδKα − n Kα`.
pub fn apply_l_k(geo: &Geometry, alpha: &TensorField) -> Result<TensorField> {
    let c = curvature_of(geo)?;
    if c != -1.0 {
        return Err(Error::InvalidParameter("the image-of-K form is stated for c = -1".into()));
    }
    let n = geo.n as f64;
    let ka = conformal_killing(geo, alpha)?;
    let lap = rough_laplacian(geo, &ka)?;
    let mut out = rough_laplacian(geo, &lap)?.scaled(-0.5);
    out.axpy(-(n + 2.0) / 2.0, &lap);
    out.axpy(n, &conformal_killing(geo, &divergence(geo, &ka)?)?);
    out.axpy(-n, &ka);
    out.with_symmetry(Symmetry::Sym2)
}

/// `(v, Lv)` by quadrature.
pub fn quadratic_form(geo: &Geometry, v: &TensorField) -> Result<f64> {
    Ok(geo.l2_inner(v, &apply_l(geo, v)?))
}

/// `‖u‖²_{H²} = ‖u‖² + ‖∇u‖² + ‖∇∇u‖²`, the natural norm for a fourth-order form.
pub fn h2_norm_sq(geo: &Geometry, u: &TensorField) -> Result<f64> {
    let g1 = covariant_derivative(geo, u)?;
    let g2 = covariant_derivative(geo, &g1)?;
    Ok(geo.l2_norm_sq(u) + geo.l2_norm_sq(&g1) + geo.l2_norm_sq(&g2))
}

/// Asymmetry `|(Lu, w) − (u, Lw)|` normalized by `‖u‖_{H²} ‖w‖_{H²}`, the
/// bound of the bilinear form, in a given gauge.
pub fn asymmetry_defect(geo: &Geometry, u: &TensorField, w: &TensorField, gauge: GaugeParams) -> Result<f64> {
    let lu = apply_l_general(geo, u, gauge)?;
    let lw = apply_l_general(geo, w, gauge)?;
    let d = geo.l2_inner(&lu, w) - geo.l2_inner(u, &lw);
    Ok(d.abs() / (h2_norm_sq(geo, u)? * h2_norm_sq(geo, w)?).sqrt())
}

/// The pair `u = f h`, `w = K(df)` built from one scalar `f`. The symmetric
/// part of `(Lu, w)` is small for this pair while the gauge-dependent terms
/// (`(dd v)h` against `Hess tr v`) pair at full strength, so it separates the
/// self-adjoint gauge from others.
pub fn designated_pair(geo: &Geometry, f: &TensorField) -> Result<(TensorField, TensorField)> {
    if f.rank != 0 {
        return Err(Error::Shape(format!("designated pair needs a scalar, got rank {}", f.rank)));
    }
    let u = pure_trace(geo, &f.data);
    let w = conformal_killing(geo, &hodge_d(geo, f)?)?;
    Ok((u, w))
}

/// Symmetric-difference check of the linearization of the flow at `h`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizationOracle {
    pub steps: Vec<f64>,
    /// `‖(F(h+sv) − F(h−sv))/(2s) − Lv/(n−2)‖ / ‖Lv/(n−2)‖` per step.
    pub errors: Vec<f64>,
    /// Least-squares slope of `ln error` against `ln s`.
    pub order: f64,
}

/// Runs the symmetric-difference check at `s0, s0/2, ..` (`levels` steps).
pub fn linearization_oracle(bg: &Background, v: &TensorField, s0: f64, levels: usize) -> Result<LinearizationOracle> {
    if levels < 2 || !(s0 > 0.0) {
        return Err(Error::InvalidParameter("oracle needs s0 > 0 and at least two levels".into()));
    }
    let geo = &bg.geo;
    let n = geo.n as f64;
    let lv = apply_l(geo, v)?.scaled(1.0 / (n - 2.0));
    let scale = geo.l2_norm_sq(&lv).sqrt();
    if scale == 0.0 {
        return Err(Error::InvalidParameter("Lv vanishes; the oracle is undefined".into()));
    }
    let mut steps = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for l in 0..levels {
        let s = s0 / (1u64 << l) as f64;
        let fp = flow_rhs(bg, &bg.perturbed(v, s))?;
        let fm = flow_rhs(bg, &bg.perturbed(v, -s))?;
        let d = fp.sub(&fm).scaled(0.5 / s);
        steps.push(s);
        errors.push(geo.l2_norm_sq(&d.sub(&lv)).sqrt() / scale);
    }
    let pts: Vec<(f64, f64)> = steps.iter().zip(&errors).map(|(s, e)| (s.ln(), e.max(f64::MIN_POSITIVE).ln())).collect();
    let m = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    Ok(LinearizationOracle { steps, errors, order: sxy / sxx })
}
