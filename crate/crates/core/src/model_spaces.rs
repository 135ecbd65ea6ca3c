//! Constant-curvature backgrounds on single-patch charts.
//!
//! Every chart here has a diagonal metric `h_ii = exp(2 a_i)` whose log-scales
//! `a_i` depend only on the active coordinates, so Christoffel symbols and
//! their first derivatives have closed forms in terms of `∂a` and `∂²a`.

use crate::error::{Error, Result};
use crate::geometry::{Comps, Geometry};
use crate::grid::{Axis, Grid, Scheme};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chart {
    /// Flat torus with the given period on every active axis.
    FlatTorus { period: f64 },
    /// Unit sphere in stereographic coordinates on the box `[-w, w]^n`.
    SphereStereographic { half_width: f64 },
    /// Upper half-space `x > 0` with metric `x^-2 δ`; axis 0 is `x`.
    HyperbolicHalfSpace { x_min: f64, x_max: f64, y_half_width: f64 },
    /// Unit sphere in torus-adapted hyperspherical angles; the cyclic angles
    /// are the inactive coordinates. `inset` keeps the angular box away from
    /// the degenerate orbits.
    SphereToric { inset: f64 },
}

impl Chart {
    pub fn curvature(&self) -> i32 {
        match self {
            Chart::FlatTorus { .. } => 0,
            Chart::SphereStereographic { .. } | Chart::SphereToric { .. } => 1,
            Chart::HyperbolicHalfSpace { .. } => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartParams {
    pub chart: Chart,
    /// Grid points per active axis; its length is the number of active axes.
    pub points: Vec<usize>,
}

/// Number of angle axes of the toric sphere chart in dimension `n`.
pub fn toric_active_axes(n: usize) -> usize {
    let q = (n + 1) / 2;
    let e = n + 1 - 2 * q;
    q + e - 1
}

/// One term `ln sin θ_axis` (or `ln cos θ_axis`) of a log-scale.
#[derive(Clone, Copy, Debug)]
struct LogTrig {
    axis: usize,
    cos: bool,
}

#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub c: i32,
    pub n: usize,
    pub chart: Chart,
    pub grid: Grid,
    toric_terms: Vec<Vec<LogTrig>>,
}

/// Log-scales and derivatives at one point: `a[i]`, `da[i][j]`, `dda[i][j][k]`.
pub struct LogScale {
    pub a: Vec<f64>,
    pub da: Vec<Vec<f64>>,
    pub dda: Vec<Vec<Vec<f64>>>,
}

pub fn make_model(c: i32, n: usize, params: &ChartParams) -> Result<ModelSpace> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 3, got {n}")));
    }
    if !(-1..=1).contains(&c) {
        return Err(Error::InvalidParameter(format!("curvature sign must be -1, 0 or 1, got {c}")));
    }
    if params.chart.curvature() != c {
        return Err(Error::InvalidParameter(format!("chart {:?} does not have curvature {c}", params.chart)));
    }
    let m = params.points.len();
    let axes: Vec<Axis> = match &params.chart {
        Chart::FlatTorus { period } => {
            if !(*period > 0.0) {
                return Err(Error::InvalidParameter("torus period must be positive".into()));
            }
            params.points.iter().map(|&p| Axis::periodic(p, 0.0, *period)).collect()
        }
        Chart::SphereStereographic { half_width } => {
            if m != n {
                return Err(Error::InvalidParameter("stereographic chart needs every axis active".into()));
            }
            params.points.iter().map(|&p| Axis::bounded(p, -half_width, *half_width)).collect()
        }
        Chart::HyperbolicHalfSpace { x_min, x_max, y_half_width } => {
            if !(*x_min > 0.0) {
                return Err(Error::InvalidParameter(format!("x_min must be positive, got {x_min}")));
            }
            if !(x_max > x_min) || !(*y_half_width > 0.0) {
                return Err(Error::InvalidParameter("empty half-space slab".into()));
            }
            params
                .points
                .iter()
                .enumerate()
                .map(|(a, &p)| {
                    if a == 0 {
                        Axis::bounded(p, *x_min, *x_max)
                    } else {
                        Axis::bounded(p, -y_half_width, *y_half_width)
                    }
                })
                .collect()
        }
        Chart::SphereToric { inset } => {
            let d = toric_active_axes(n);
            if m != d {
                return Err(Error::InvalidParameter(format!("toric sphere chart in dimension {n} has {d} angle axes")));
            }
            if !(*inset > 0.0 && *inset < PI / 4.0) {
                return Err(Error::InvalidParameter("toric inset must lie in (0, π/4)".into()));
            }
            let e = n + 1 - 2 * ((n + 1) / 2);
            params
                .points
                .iter()
                .enumerate()
                .map(|(a, &p)| {
                    let hi = if a == 0 && e == 1 { PI } else { PI / 2.0 };
                    Axis::bounded(p, *inset, hi - inset)
                })
                .collect()
        }
    };
    let grid = Grid::new(n, axes)?;
    let toric_terms = match params.chart {
        Chart::SphereToric { .. } => toric_log_terms(n),
        _ => Vec::new(),
    };
    Ok(ModelSpace { c, n, chart: params.chart.clone(), grid, toric_terms })
}

/// Log-scale terms of the toric chart: `S^n ⊂ C^q × R^e` with `q` cyclic angles.
fn toric_log_terms(n: usize) -> Vec<Vec<LogTrig>> {
    let q = (n + 1) / 2;
    let e = n + 1 - 2 * q;
    let d = q + e - 1;
    let sin = |axis| LogTrig { axis, cos: false };
    let cosine = |axis| LogTrig { axis, cos: true };
    // u_k (1-based) are the unit-vector coordinates of the angle chart.
    let u = |k: usize| -> Vec<LogTrig> {
        let mut t: Vec<LogTrig> = (0..(k - 1).min(d)).map(sin).collect();
        if k <= d {
            t.push(cosine(k - 1));
        }
        t
    };
    let mut terms = Vec::with_capacity(n);
    for b in 0..d {
        terms.push((0..b).map(sin).collect());
    }
    for j in 1..=q {
        terms.push(u(j + e));
    }
    terms
}

impl ModelSpace {
    pub fn nnodes(&self) -> usize {
        self.grid.nnodes()
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.nnodes() {
            return Err(Error::OutOfRange { node, nnodes: self.nnodes() });
        }
        Ok(())
    }

    /// Closed-form log-scales at chart coordinates `x` (length n).
    pub fn log_scale(&self, x: &[f64]) -> LogScale {
        let n = self.n;
        let mut ls = LogScale { a: vec![0.0; n], da: vec![vec![0.0; n]; n], dda: vec![vec![vec![0.0; n]; n]; n] };
        match &self.chart {
            Chart::FlatTorus { .. } => {}
            Chart::SphereStereographic { .. } => {
                let s = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
                for i in 0..n {
                    ls.a[i] = (2.0 / s).ln();
                    for j in 0..n {
                        ls.da[i][j] = -2.0 * x[j] / s;
                        for k in 0..n {
                            let dl = if j == k { 1.0 } else { 0.0 };
                            ls.dda[i][j][k] = -2.0 * dl / s + 4.0 * x[j] * x[k] / (s * s);
                        }
                    }
                }
            }
            Chart::HyperbolicHalfSpace { .. } => {
                for i in 0..n {
                    ls.a[i] = -x[0].ln();
                    ls.da[i][0] = -1.0 / x[0];
                    ls.dda[i][0][0] = 1.0 / (x[0] * x[0]);
                }
            }
            Chart::SphereToric { .. } => {
                for (i, terms) in self.toric_terms.iter().enumerate() {
                    for t in terms {
                        let th = x[t.axis];
                        let (s, c) = th.sin_cos();
                        if t.cos {
                            ls.a[i] += c.ln();
                            ls.da[i][t.axis] += -s / c;
                            ls.dda[i][t.axis][t.axis] += -1.0 / (c * c);
                        } else {
                            ls.a[i] += s.ln();
                            ls.da[i][t.axis] += c / s;
                            ls.dda[i][t.axis][t.axis] += -1.0 / (s * s);
                        }
                    }
                }
            }
        }
        ls
    }

    pub fn metric_at(&self, node: usize) -> Result<Vec<Vec<f64>>> {
        self.check_node(node)?;
        let ls = self.log_scale(&self.grid.coords(node));
        let n = self.n;
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            h[i][i] = (2.0 * ls.a[i]).exp();
        }
        Ok(h)
    }

    /// `Γ^l_bc` at a node, indexed `[l][b][c]`.
    pub fn christoffel_at(&self, node: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        self.check_node(node)?;
        let ls = self.log_scale(&self.grid.coords(node));
        Ok(christoffel_from_log_scale(&ls))
    }

    /// `∂_d Γ^l_bc` at a node, indexed `[l][b][c][d]`.
    pub fn christoffel_derivative_at(&self, node: usize) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
        self.check_node(node)?;
        let ls = self.log_scale(&self.grid.coords(node));
        Ok(christoffel_derivative_from_log_scale(&ls))
    }

    pub fn volume_weight_at(&self, node: usize) -> Result<f64> {
        self.check_node(node)?;
        let ls = self.log_scale(&self.grid.coords(node));
        Ok(ls.a.iter().sum::<f64>().exp() * self.grid.cell_measure())
    }

    /// Boundary defining function: `x` on the half-space, 1 elsewhere.
    pub fn rho_at(&self, node: usize) -> Result<f64> {
        self.check_node(node)?;
        Ok(match self.chart {
            Chart::HyperbolicHalfSpace { .. } => self.grid.coords(node)[0],
            _ => 1.0,
        })
    }

    /// Exact `R_ijkl = c (h_il h_jk - h_ik h_jl)` at a node, indexed `[i][j][k][l]`.
    pub fn riemann_at(&self, node: usize) -> Result<Vec<f64>> {
        let h = self.metric_at(node)?;
        let n = self.n;
        let c = self.c as f64;
        let mut r = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        r[((i * n + j) * n + k) * n + l] = c * (h[i][l] * h[j][k] - h[i][k] * h[j][l]);
                    }
                }
            }
        }
        Ok(r)
    }

    pub fn ricci_at(&self, node: usize) -> Result<Vec<Vec<f64>>> {
        let h = self.metric_at(node)?;
        let f = self.c as f64 * (self.n as f64 - 1.0);
        Ok(h.iter().map(|row| row.iter().map(|v| f * v).collect()).collect())
    }

    pub fn scalar_curvature(&self) -> f64 {
        let n = self.n as f64;
        self.c as f64 * n * (n - 1.0)
    }

    /// Nodal geometry for the differential operators.
    pub fn geometry(&self, scheme: Scheme) -> Result<Geometry> {
        let n = self.n;
        let nn = self.nnodes();
        let mut metric: Comps = vec![None; n * n];
        let mut inverse: Comps = vec![None; n * n];
        let mut gamma_data = vec![vec![0.0; nn]; n * n * n];
        let mut weight = vec![0.0; nn];
        let mut diag = vec![vec![0.0; nn]; n];
        let cell = self.grid.cell_measure();
        for p in 0..nn {
            let ls = self.log_scale(&self.grid.coords(p));
            for i in 0..n {
                diag[i][p] = ls.a[i];
            }
            weight[p] = ls.a.iter().sum::<f64>().exp() * cell;
            let g = christoffel_from_log_scale(&ls);
            for l in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        gamma_data[(l * n + b) * n + c][p] = g[l][b][c];
                    }
                }
            }
        }
        for i in 0..n {
            metric[i * n + i] = Some(diag[i].iter().map(|a| (2.0 * a).exp()).collect());
            inverse[i * n + i] = Some(diag[i].iter().map(|a| (-2.0 * a).exp()).collect());
        }
        let gamma = gamma_data.into_iter().map(|v| if v.iter().all(|x| *x == 0.0) { None } else { Some(v) }).collect();
        Geometry::new(self.grid.clone(), scheme, metric, inverse, gamma, weight, Some(self.c as f64))
    }

    /// Closed-form `∂_d Γ^l_bc` arrays, index `((l n + b) n + c) n + d`.
    pub fn christoffel_derivative_comps(&self) -> Comps {
        let n = self.n;
        let nn = self.nnodes();
        let mut data = vec![vec![0.0; nn]; n * n * n * n];
        for p in 0..nn {
            let dg = christoffel_derivative_from_log_scale(&self.log_scale(&self.grid.coords(p)));
            for l in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            data[((l * n + b) * n + c) * n + d][p] = dg[l][b][c][d];
                        }
                    }
                }
            }
        }
        data.into_iter().map(|v| if v.iter().all(|x| *x == 0.0) { None } else { Some(v) }).collect()
    }

    /// Closed-form `∂_d h_ab` arrays, index `(a n + b) n + d`.
    pub fn metric_derivative_comps(&self) -> Comps {
        let n = self.n;
        let nn = self.nnodes();
        let mut data = vec![vec![0.0; nn]; n * n * n];
        for p in 0..nn {
            let ls = self.log_scale(&self.grid.coords(p));
            for i in 0..n {
                let g = (2.0 * ls.a[i]).exp();
                for d in 0..n {
                    data[(i * n + i) * n + d][p] = 2.0 * ls.da[i][d] * g;
                }
            }
        }
        data.into_iter().map(|v| if v.iter().all(|x| *x == 0.0) { None } else { Some(v) }).collect()
    }
}

fn christoffel_from_log_scale(ls: &LogScale) -> Vec<Vec<Vec<f64>>> {
    let n = ls.a.len();
    let mut g = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][i][j] = ls.da[i][j];
            g[i][j][i] = ls.da[i][j];
        }
        for k in 0..n {
            if k != i {
                g[k][i][i] = -(2.0 * (ls.a[i] - ls.a[k])).exp() * ls.da[i][k];
            }
        }
    }
    g
}

fn christoffel_derivative_from_log_scale(ls: &LogScale) -> Vec<Vec<Vec<Vec<f64>>>> {
    let n = ls.a.len();
    let mut dg = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for d in 0..n {
                dg[i][i][j][d] = ls.dda[i][j][d];
                dg[i][j][i][d] = ls.dda[i][j][d];
            }
        }
        for k in 0..n {
            if k != i {
                let e = (2.0 * (ls.a[i] - ls.a[k])).exp();
                for d in 0..n {
                    dg[k][i][i][d] =
                        -e * (2.0 * (ls.da[i][d] - ls.da[k][d]) * ls.da[i][k] + ls.dda[i][k][d]);
                }
            }
        }
    }
    dg
}
