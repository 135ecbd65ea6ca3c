//! Covariant calculus on grid tensor fields: ∇, contracted derivatives,
//! δ, δ*, K, the rough Laplacian, Hodge operators on 0- and 1-forms, the
//! T and A tensors, and the coupled exterior derivative d^∇.
//!
//! Conventions: the derivative index of `∇u` is appended last, so
//! `(∇v)_{ijk} = v_{ij,k}`; a p-form `ω` has `(dα)_{ij} = ½(α_{j,i} − α_{i,j})`
//! and forms (including T*M-valued forms) pair with weight p!.

use crate::error::Result;
use crate::field::{decode, encode, Symmetry, TensorField};
use crate::geometry::Geometry;
use rayon::prelude::*;

/// One component of `∇_b u` at multi-index `idx`, written into `buf`.
fn grad_comp(geo: &Geometry, u: &TensorField, idx: &[usize], b: usize, buf: &mut [f64]) -> Result<()> {
    let n = geo.n;
    let c = encode(n, idx);
    buf.iter_mut().for_each(|v| *v = 0.0);
    if b < geo.grid.active() && !u.comp_is_zero(c) {
        let d = geo.scheme.partial(&geo.grid, u.comp(c), b)?;
        buf.copy_from_slice(&d);
    }
    let mut t = idx.to_vec();
    for s in 0..idx.len() {
        for &l in geo.gamma_uppers(b, idx[s]) {
            t[s] = l;
            let src = u.comp(encode(n, &t));
            let g = geo.gamma_comp(l, b, idx[s]).expect("listed Christoffel component");
            for q in 0..buf.len() {
                buf[q] -= g[q] * src[q];
            }
        }
        t[s] = idx[s];
    }
    Ok(())
}

/// `∇u`, rank k+1, derivative index last.
pub fn covariant_derivative(geo: &Geometry, u: &TensorField) -> Result<TensorField> {
    let n = geo.n;
    let nn = u.nnodes;
    let mut out = TensorField::zeros(u.rank + 1, n, nn);
    out.data.par_chunks_mut(n * nn).enumerate().try_for_each(|(c, chunk)| -> Result<()> {
        let idx = decode(n, u.rank, c);
        for b in 0..n {
            grad_comp(geo, u, &idx, b, &mut chunk[b * nn..(b + 1) * nn])?;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Derivative contracted into a value slot: `g^{ab} ∇_b u_{..a..}`, rank k−1.
pub fn contracted_derivative(geo: &Geometry, u: &TensorField, slot: usize) -> Result<TensorField> {
    assert!(slot < u.rank);
    let n = geo.n;
    let nn = u.nnodes;
    let mut out = TensorField::zeros(u.rank - 1, n, nn);
    out.data.par_chunks_mut(nn).enumerate().try_for_each(|(j, dst)| -> Result<()> {
        let rest = decode(n, u.rank - 1, j);
        let mut buf = vec![0.0; nn];
        for a in 0..n {
            let mut idx = rest.clone();
            idx.insert(slot, a);
            for &b in geo.inverse_row(a) {
                grad_comp(geo, u, &idx, b, &mut buf)?;
                let gab = geo.inverse_comp(a, b).expect("listed inverse component");
                for q in 0..nn {
                    dst[q] += gab[q] * buf[q];
                }
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Rough Laplacian `g^{ab} u_{I,ab}` (nonpositive spectrum).
pub fn rough_laplacian(geo: &Geometry, u: &TensorField) -> Result<TensorField> {
    if geo.is_flat_chart() {
        return flat_laplacian(geo, u);
    }
    let g = covariant_derivative(geo, u)?;
    let mut out = contracted_derivative(geo, &g, u.rank)?;
    out.sym = u.sym;
    Ok(out)
}

fn flat_laplacian(geo: &Geometry, u: &TensorField) -> Result<TensorField> {
    let nn = u.nnodes;
    let mut out = TensorField::zeros(u.rank, u.n, nn);
    out.data.par_chunks_mut(nn).enumerate().try_for_each(|(c, dst)| -> Result<()> {
        if u.comp_is_zero(c) {
            return Ok(());
        }
        for b in 0..geo.grid.active() {
            if let Some(gbb) = geo.inverse_comp(b, b) {
                let d1 = geo.scheme.partial(&geo.grid, u.comp(c), b)?;
                let d2 = geo.scheme.partial(&geo.grid, &d1, b)?;
                for q in 0..nn {
                    dst[q] += gbb[q] * d2[q];
                }
            }
        }
        Ok(())
    })?;
    out.sym = u.sym;
    Ok(out)
}

/// `[δv]_i = −v_{ij,}^j`.
pub fn divergence(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    Ok(contracted_derivative(geo, v, 1)?.scaled(-1.0))
}

/// Symmetric part of the last two slots of a rank-k field (k ≥ 2).
fn symmetrize_last_two(u: &TensorField) -> TensorField {
    let k = u.rank;
    let mut perm: Vec<usize> = (0..k).collect();
    perm.swap(k - 2, k - 1);
    let mut s = u.add(&u.permute(&perm));
    s.data.iter_mut().for_each(|v| *v *= 0.5);
    s
}

/// `[δ*ω]_{ij} = ½(ω_{i,j} + ω_{j,i})`.
pub fn delta_star(geo: &Geometry, w: &TensorField) -> Result<TensorField> {
    let g = covariant_derivative(geo, w)?;
    symmetrize_last_two(&g).with_symmetry(Symmetry::Sym2)
}

/// Conformal Killing operator `Kα = δ*α − (1/n) α_{k,}^k h`.
pub fn conformal_killing(geo: &Geometry, alpha: &TensorField) -> Result<TensorField> {
    let ds = delta_star(geo, alpha)?;
    Ok(traceless_part(geo, &ds))
}

/// `v − (tr v / n) g`.
pub fn traceless_part(geo: &Geometry, v: &TensorField) -> TensorField {
    let tr = geo.trace(v, 0, 1);
    let mut out = v.clone();
    let g = geo.metric_field().times_scalar(&tr.data);
    out.axpy(-1.0 / geo.n as f64, &g);
    out.sym = v.sym;
    out
}

/// `f g` for a scalar field `f`.
pub fn pure_trace(geo: &Geometry, f: &[f64]) -> TensorField {
    let mut out = geo.metric_field().times_scalar(f);
    out.sym = Symmetry::Sym2;
    out
}

pub fn trace(geo: &Geometry, v: &TensorField) -> TensorField {
    geo.trace(v, 0, 1)
}

/// Covariant Hessian `f_{,ij}`.
pub fn hessian(geo: &Geometry, f: &TensorField) -> Result<TensorField> {
    let g = covariant_derivative(geo, f)?;
    covariant_derivative(geo, &g)
}

/// Exterior derivative on 0-forms (p = 0) and 1-forms (p = 1).
pub fn hodge_d(geo: &Geometry, u: &TensorField) -> Result<TensorField> {
    match u.rank {
        0 => covariant_derivative(geo, u),
        1 => {
            let g = covariant_derivative(geo, u)?;
            let mut d = g.permute(&[1, 0]).sub(&g);
            d.data.iter_mut().for_each(|v| *v *= 0.5);
            Ok(d)
        }
        r => Err(crate::error::Error::Shape(format!("hodge_d implemented for 0- and 1-forms, got rank {r}"))),
    }
}

/// Codifferential on 1-forms (`−α_{k,}^k`) and 2-forms (`−2 ω_{ij,}^i`).
pub fn hodge_dstar(geo: &Geometry, u: &TensorField) -> Result<TensorField> {
    match u.rank {
        1 => Ok(contracted_derivative(geo, u, 0)?.scaled(-1.0)),
        2 => Ok(contracted_derivative(geo, u, 0)?.scaled(-2.0)),
        r => Err(crate::error::Error::Shape(format!("hodge_dstar implemented for 1- and 2-forms, got rank {r}"))),
    }
}

/// Hodge Laplacian `Δ_H = −(dd* + d*d)` on 1-forms.
pub fn hodge_laplacian_1form(geo: &Geometry, alpha: &TensorField) -> Result<TensorField> {
    let a = hodge_d(geo, &hodge_dstar(geo, alpha)?)?;
    let b = hodge_dstar(geo, &hodge_d(geo, alpha)?)?;
    Ok(a.add(&b).scaled(-1.0))
}

/// Form pairing `(a, b) = p! ∫ a_I b^I` for (possibly T*M-valued) p-forms.
pub fn form_inner(geo: &Geometry, a: &TensorField, b: &TensorField, p: usize) -> f64 {
    let fact: f64 = (1..=p).map(|k| k as f64).product();
    fact * geo.l2_inner(a, b)
}

/// `T_{ijk} = v_{ij,k} − v_{jk,i}`, a 2-form in (i, k) with values in T*M.
pub fn t_tensor(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    let g = covariant_derivative(geo, v)?;
    g.sub(&g.permute(&[1, 2, 0])).with_symmetry(Symmetry::SkewFirstLast)
}

/// `A = ∇T`.
pub fn a_tensor(geo: &Geometry, v: &TensorField) -> Result<TensorField> {
    covariant_derivative(geo, &t_tensor(geo, v)?)
}

/// Coupled exterior derivative on T*M-valued 1-forms (rank 2) and 2-forms (rank 3).
pub fn d_nabla(geo: &Geometry, t: &TensorField) -> Result<TensorField> {
    let h = covariant_derivative(geo, t)?;
    match t.rank {
        2 => {
            let mut out = h.permute(&[2, 1, 0]).sub(&h);
            out.data.iter_mut().for_each(|v| *v *= 0.5);
            Ok(out)
        }
        3 => {
            let mut out = h.permute(&[2, 1, 3, 0]).add(&h.permute(&[3, 1, 0, 2])).add(&h);
            out.data.iter_mut().for_each(|v| *v /= 3.0);
            Ok(out)
        }
        r => Err(crate::error::Error::Shape(format!("d_nabla takes rank 2 or 3, got {r}"))),
    }
}

/// Formal adjoint of [`d_nabla`] under the p!-weighted pairing.
pub fn d_nabla_star(geo: &Geometry, w: &TensorField) -> Result<TensorField> {
    let c0 = contracted_derivative(geo, w, 0)?;
    match w.rank {
        3 => Ok(c0.permute(&[1, 0]).scaled(-2.0)),
        4 => Ok(c0.permute(&[1, 0, 2]).scaled(-3.0)),
        r => Err(crate::error::Error::Shape(format!("d_nabla_star takes rank 3 or 4, got {r}"))),
    }
}

/// Twisted Hodge Laplacian `Δ^∇ = −(d^∇ (d^∇)* + (d^∇)* d^∇)` on T*M-valued 2-forms.
pub fn twisted_laplacian(geo: &Geometry, t: &TensorField) -> Result<TensorField> {
    let a = d_nabla(geo, &d_nabla_star(geo, t)?)?;
    let b = d_nabla_star(geo, &d_nabla(geo, t)?)?;
    Ok(a.add(&b).scaled(-1.0))
}
