//! Nodal metric data (metric, inverse, Christoffel symbols, volume weights)
//! shared by every differential operator.
//!
//! Arrays are stored per component; `None` marks a component that vanishes
//! identically, which lets diagonal charts skip most of the index algebra.

use crate::error::{Error, Result};
use crate::field::{decode, encode, TensorField};
use crate::grid::{Grid, Scheme};

pub type Comps = Vec<Option<Vec<f64>>>;

#[derive(Clone, Debug)]
pub struct Geometry {
    pub grid: Grid,
    pub scheme: Scheme,
    pub n: usize,
    /// `g_ab`, index `a * n + b`.
    pub metric: Comps,
    /// `g^ab`, index `a * n + b`.
    pub inverse: Comps,
    /// `Γ^l_bc`, index `(l * n + b) * n + c`.
    pub gamma: Comps,
    /// `sqrt(det g)` times the cell measure.
    pub weight: Vec<f64>,
    /// Sectional curvature when the metric is a constant-curvature background.
    pub curvature: Option<f64>,
    gamma_by_bc: Vec<Vec<usize>>,
    inverse_rows: Vec<Vec<usize>>,
}

impl Geometry {
    pub fn new(
        grid: Grid,
        scheme: Scheme,
        metric: Comps,
        inverse: Comps,
        gamma: Comps,
        weight: Vec<f64>,
        curvature: Option<f64>,
    ) -> Result<Self> {
        let n = grid.n;
        let nn = grid.nnodes();
        if metric.len() != n * n || inverse.len() != n * n || gamma.len() != n * n * n || weight.len() != nn {
            return Err(Error::Shape("geometry arrays do not match the grid".into()));
        }
        let ok = |c: &Comps| c.iter().flatten().all(|v| v.len() == nn);
        if !ok(&metric) || !ok(&inverse) || !ok(&gamma) {
            return Err(Error::Shape("geometry component length mismatch".into()));
        }
        scheme.validate()?;
        let mut gamma_by_bc = vec![Vec::new(); n * n];
        for l in 0..n {
            for bc in 0..n * n {
                if gamma[l * n * n + bc].is_some() {
                    gamma_by_bc[bc].push(l);
                }
            }
        }
        let inverse_rows = (0..n).map(|a| (0..n).filter(|&b| inverse[a * n + b].is_some()).collect()).collect();
        Ok(Geometry { grid, scheme, n, metric, inverse, gamma, weight, curvature, gamma_by_bc, inverse_rows })
    }

    pub fn nnodes(&self) -> usize {
        self.grid.nnodes()
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Geometry {
        Geometry { scheme, ..self.clone() }
    }

    pub fn is_flat_chart(&self) -> bool {
        self.gamma.iter().all(|g| g.is_none())
    }

    /// Upper indices `l` with `Γ^l_bc` not identically zero.
    pub fn gamma_uppers(&self, b: usize, c: usize) -> &[usize] {
        &self.gamma_by_bc[b * self.n + c]
    }

    pub fn gamma_comp(&self, l: usize, b: usize, c: usize) -> Option<&[f64]> {
        self.gamma[(l * self.n + b) * self.n + c].as_deref()
    }

    /// Indices `b` with `g^ab` not identically zero.
    pub fn inverse_row(&self, a: usize) -> &[usize] {
        &self.inverse_rows[a]
    }

    pub fn inverse_comp(&self, a: usize, b: usize) -> Option<&[f64]> {
        self.inverse[a * self.n + b].as_deref()
    }

    pub fn metric_comp(&self, a: usize, b: usize) -> Option<&[f64]> {
        self.metric[a * self.n + b].as_deref()
    }

    pub fn metric_field(&self) -> TensorField {
        comps_to_field(&self.metric, self.n, self.nnodes())
    }

    pub fn inverse_field(&self) -> TensorField {
        comps_to_field(&self.inverse, self.n, self.nnodes())
    }

    /// Raise one slot: `out_{..a..} = g^{ab} u_{..b..}`.
    pub fn raise(&self, u: &TensorField, slot: usize) -> TensorField {
        self.contract_slot(u, slot, &self.inverse)
    }

    /// Lower one slot with the metric.
    pub fn lower(&self, u: &TensorField, slot: usize) -> TensorField {
        self.contract_slot(u, slot, &self.metric)
    }

    fn contract_slot(&self, u: &TensorField, slot: usize, m: &Comps) -> TensorField {
        let n = self.n;
        let mut out = TensorField::zeros(u.rank, n, u.nnodes);
        for c in 0..u.ncomp() {
            if u.comp_is_zero(c) {
                continue;
            }
            let idx = decode(n, u.rank, c);
            let b = idx[slot];
            for a in 0..n {
                if let Some(mab) = m[a * n + b].as_deref() {
                    let mut t = idx.clone();
                    t[slot] = a;
                    let src = u.comp(c);
                    let dst = out.comp_mut(encode(n, &t));
                    for q in 0..dst.len() {
                        dst[q] += mab[q] * src[q];
                    }
                }
            }
        }
        out.sym = u.sym;
        out
    }

    /// Metric trace over two slots `s1 < s2`.
    pub fn trace(&self, u: &TensorField, s1: usize, s2: usize) -> TensorField {
        assert!(s1 < s2 && s2 < u.rank);
        let n = self.n;
        let mut out = TensorField::zeros(u.rank - 2, n, u.nnodes);
        for c in 0..u.ncomp() {
            if u.comp_is_zero(c) {
                continue;
            }
            let idx = decode(n, u.rank, c);
            if let Some(gab) = self.inverse_comp(idx[s1], idx[s2]) {
                let rest: Vec<usize> =
                    idx.iter().enumerate().filter(|(s, _)| *s != s1 && *s != s2).map(|(_, &i)| i).collect();
                let src = u.comp(c);
                let dst = out.comp_mut(encode(n, &rest));
                for q in 0..dst.len() {
                    dst[q] += gab[q] * src[q];
                }
            }
        }
        out
    }

    /// Pointwise full contraction `u_I w^I`.
    pub fn dot(&self, u: &TensorField, w: &TensorField) -> Vec<f64> {
        assert_eq!(u.rank, w.rank);
        let mut up = w.clone();
        for s in 0..w.rank {
            up = self.raise(&up, s);
        }
        let mut out = vec![0.0; u.nnodes];
        for c in 0..u.ncomp() {
            let (a, b) = (u.comp(c), up.comp(c));
            for q in 0..out.len() {
                out[q] += a[q] * b[q];
            }
        }
        out
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weight).map(|(a, w)| a * w).sum()
    }

    /// L² pairing by quadrature with the volume weight.
    pub fn l2_inner(&self, u: &TensorField, w: &TensorField) -> f64 {
        self.integrate(&self.dot(u, w))
    }

    pub fn l2_norm_sq(&self, u: &TensorField) -> f64 {
        self.l2_inner(u, u)
    }

    pub fn volume(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Nodes at least `margin` nodes away from every bounded edge.
    pub fn interior_mask(&self, margin: usize) -> Vec<bool> {
        (0..self.nnodes()).map(|p| self.grid.boundary_distance(p) >= margin).collect()
    }
}

pub fn comps_to_field(c: &Comps, n: usize, nnodes: usize) -> TensorField {
    let mut out = TensorField::zeros(2, n, nnodes);
    for (k, v) in c.iter().enumerate() {
        if let Some(v) = v {
            out.comp_mut(k).copy_from_slice(v);
        }
    }
    out
}

pub fn field_to_comps(f: &TensorField) -> Comps {
    (0..f.ncomp()).map(|c| if f.comp_is_zero(c) { None } else { Some(f.comp(c).to_vec()) }).collect()
}
