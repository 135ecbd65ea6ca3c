//! Time evolution near constant-curvature metrics: the exact modal linear
//! flow on the flat torus, explicit RK4 stepping of `dv/dt = Lv/(n−2)` on
//! any chart, short-time RK4 stepping of the nonlinear gauge-adjusted flow
//! on the torus, and exponential decay-rate fits.
//!
//! Only `L²` norms are measured; the decay is a finite-window observation
//! and says nothing about long-time nonlinear behavior on noncompact spaces.

use crate::curvature_ops::{bach_tensor, flow_rhs, gauge_vector, metric_volume, Background};
use crate::error::{Error, Result};
use crate::field::{Symmetry, TensorField};
use crate::geometry::Geometry;
use crate::linearized_operator::apply_l;
use crate::modal::{fft_active, integer_modes};
use crate::tensor_fields::trace;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

/// Norm growth beyond this factor of the initial norm aborts a stepped flow.
pub const BLOW_UP_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// States are perturbations `v(t)` of the background metric.
    Linear,
    /// States are full metrics `g(t)`.
    Nonlinear,
}

/// Diagnostics at one stored time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub time: f64,
    /// `‖v‖` (linear) or `‖g − h‖` (nonlinear), in `L²(h)`.
    pub norm: f64,
    /// Linear: first-order volume change `½∫ tr v`. Nonlinear: `Vol(g)`.
    pub volume: f64,
    /// Linear only: `(v, Lv)`.
    pub form: Option<f64>,
    /// Nonlinear only: `‖B(g)‖` in `L²(h)`.
    pub bach_norm: Option<f64>,
    /// Nonlinear only: `‖Z(g)‖` in `L²(h)`.
    pub gauge_norm: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    pub kind: FlowKind,
    pub n: usize,
    pub times: Vec<f64>,
    /// Empty when states were not retained.
    pub states: Vec<TensorField>,
    pub diagnostics: Vec<Diagnostics>,
    /// Step size used (zero for the exact modal flow).
    pub dt: f64,
}

pub const CSV_HEADER: &str = "time,norm,volume,form,bach_norm,gauge_norm";

impl FlowTrajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.norm).collect()
    }

    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for d in &self.diagnostics {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{},{},{}\n",
                d.time,
                d.norm,
                d.volume,
                opt(d.form),
                opt(d.bach_norm),
                opt(d.gauge_norm)
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.csv())?;
        Ok(())
    }
}

/// Stepping controls.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Store diagnostics every this many steps (the final time is always stored).
    pub save_every: usize,
    pub keep_states: bool,
}

/// Default step `0.2 · dx⁴ · (n−2)/8`, with `dx` the smallest physical node
/// spacing along an active axis.
pub fn default_dt(geo: &Geometry) -> f64 {
    let mut dx = f64::INFINITY;
    for (a, ax) in geo.grid.axes.iter().enumerate() {
        let h = ax.spacing();
        match geo.metric_comp(a, a) {
            Some(g) => {
                for v in g {
                    dx = dx.min(h * v.sqrt());
                }
            }
            None => dx = dx.min(h),
        }
    }
    0.2 * dx.powi(4) * (geo.n as f64 - 2.0) / 8.0
}

fn check_opts(opts: &StepOptions) -> Result<()> {
    if !(opts.t_final >= 0.0) || !(opts.dt > 0.0) || opts.save_every == 0 {
        return Err(Error::InvalidParameter(format!(
            "need t_final >= 0, dt > 0 and save_every >= 1 (got {}, {}, {})",
            opts.t_final, opts.dt, opts.save_every
        )));
    }
    Ok(())
}

fn flat_torus(geo: &Geometry) -> Result<()> {
    if geo.curvature != Some(0.0) || !geo.grid.axes.iter().all(|a| a.periodic) {
        return Err(Error::InvalidParameter("needs a flat periodic torus".into()));
    }
    Ok(())
}

fn n_minus_two(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("the flow needs n >= 3, got {n}")));
    }
    Ok(n as f64 - 2.0)
}

fn linear_diagnostics(geo: &Geometry, v: &TensorField, time: f64, with_form: bool) -> Result<Diagnostics> {
    let form = if with_form { Some(geo.l2_inner(v, &apply_l(geo, v)?)) } else { None };
    Ok(Diagnostics {
        time,
        norm: geo.l2_norm_sq(v).sqrt(),
        volume: 0.5 * geo.integrate(&trace(geo, v).data),
        form,
        bach_norm: None,
        gauge_norm: None,
    })
}

/// Exact linear flow on a flat torus: each Fourier mode `k` is multiplied by
/// `exp(t σ(k)/(n−2))` with `σ(k) = −½|ξ|⁴`, `ξ = 2πk/period`.
pub fn linear_flow_torus(geo: &Geometry, v0: &TensorField, times: &[f64], keep_states: bool) -> Result<FlowTrajectory> {
    flat_torus(geo)?;
    let n = geo.n;
    let scale = n_minus_two(n)?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("times must be strictly increasing".into()));
    }
    let nn = geo.nnodes();
    let sigma: Vec<f64> = integer_modes(&geo.grid)
        .iter()
        .map(|k| {
            let xi_sq: f64 = k
                .iter()
                .zip(&geo.grid.axes)
                .map(|(ki, ax)| (2.0 * PI * *ki as f64 / ax.period()).powi(2))
                .sum();
            -0.5 * xi_sq * xi_sq
        })
        .collect();
    let spectra: Vec<Vec<Complex64>> = (0..v0.ncomp())
        .map(|c| {
            let mut z: Vec<Complex64> = v0.comp(c).iter().map(|x| Complex64::new(*x, 0.0)).collect();
            if z.iter().any(|x| x.re != 0.0) {
                fft_active(&geo.grid, &mut z, false);
            }
            z
        })
        .collect();
    let mut traj = FlowTrajectory { kind: FlowKind::Linear, n, times: vec![], states: vec![], diagnostics: vec![], dt: 0.0 };
    for &t in times {
        let mut v = TensorField::zeros(2, n, nn);
        for (c, spec) in spectra.iter().enumerate() {
            if spec.iter().all(|x| x.norm() == 0.0) {
                continue;
            }
            let mut z: Vec<Complex64> = spec.iter().zip(&sigma).map(|(x, s)| x * (t * s / scale).exp()).collect();
            fft_active(&geo.grid, &mut z, true);
            v.comp_mut(c).iter_mut().zip(&z).for_each(|(d, s)| *d = s.re);
        }
        v.sym = v0.sym;
        traj.diagnostics.push(linear_diagnostics(geo, &v, t, true)?);
        traj.times.push(t);
        if keep_states {
            traj.states.push(v);
        }
    }
    Ok(traj)
}

/// Classical RK4 with blow-up detection; `diag` is called at stored steps.
fn rk4<F, D>(y0: &TensorField, opts: &StepOptions, kind: FlowKind, n: usize, rhs: F, diag: D) -> Result<FlowTrajectory>
where
    F: Fn(&TensorField) -> Result<TensorField>,
    D: Fn(&TensorField, f64) -> Result<Diagnostics>,
{
    check_opts(opts)?;
    let steps = (opts.t_final / opts.dt).ceil() as usize;
    let dt = if steps == 0 { opts.dt } else { opts.t_final / steps as f64 };
    let mut traj = FlowTrajectory { kind, n, times: vec![], states: vec![], diagnostics: vec![], dt };
    let mut y = y0.clone();
    let first = diag(&y, 0.0)?;
    let norm0 = first.norm;
    let push = |traj: &mut FlowTrajectory, y: &TensorField, d: Diagnostics| {
        traj.times.push(d.time);
        traj.diagnostics.push(d);
        if opts.keep_states {
            traj.states.push(y.clone());
        }
    };
    push(&mut traj, &y, first);
    for s in 1..=steps {
        let k1 = rhs(&y)?;
        let mut y2 = y.clone();
        y2.axpy(0.5 * dt, &k1);
        let k2 = rhs(&y2)?;
        let mut y3 = y.clone();
        y3.axpy(0.5 * dt, &k2);
        let k3 = rhs(&y3)?;
        let mut y4 = y.clone();
        y4.axpy(dt, &k3);
        let k4 = rhs(&y4)?;
        y.axpy(dt / 6.0, &k1);
        y.axpy(dt / 3.0, &k2);
        y.axpy(dt / 3.0, &k3);
        y.axpy(dt / 6.0, &k4);
        y.sym = Symmetry::Sym2;
        let t = s as f64 * dt;
        if s % opts.save_every == 0 || s == steps {
            let d = diag(&y, t)?;
            if !d.norm.is_finite() || (norm0 > 0.0 && d.norm > BLOW_UP_FACTOR * norm0) {
                return Err(Error::BlowUp { time: t, growth: d.norm / norm0 });
            }
            push(&mut traj, &y, d);
        }
    }
    Ok(traj)
}

/// Explicit RK4 stepping of `dv/dt = Lv/(n−2)` on any constant-curvature
/// chart. Growth of `‖v‖` beyond [`BLOW_UP_FACTOR`] aborts with
/// [`Error::BlowUp`], which signals a step above the stability limit.
pub fn linear_flow_slab(geo: &Geometry, v0: &TensorField, opts: &StepOptions) -> Result<FlowTrajectory> {
    let n = geo.n;
    let scale = 1.0 / n_minus_two(n)?;
    geo.curvature.ok_or_else(|| Error::InvalidParameter("needs a constant-curvature background".into()))?;
    rk4(
        v0,
        opts,
        FlowKind::Linear,
        n,
        |v| Ok(apply_l(geo, v)?.scaled(scale)),
        |v, t| linear_diagnostics(geo, v, t, true),
    )
}

/// Largest `|g − h|` entry allowed by [`nonlinear_flow_torus`].
pub const NONLINEAR_MAX_PERTURBATION: f64 = 1e-2;

fn nonlinear_diagnostics(bg: &Background, g: &TensorField, time: f64) -> Result<Diagnostics> {
    let geo = &bg.geo;
    let w = g.sub(&bg.metric());
    Ok(Diagnostics {
        time,
        norm: geo.l2_norm_sq(&w).sqrt(),
        volume: metric_volume(bg, g)?,
        form: None,
        bach_norm: Some(geo.l2_norm_sq(&bach_tensor(bg, g)?).sqrt()),
        gauge_norm: Some(geo.l2_norm_sq(&gauge_vector(bg, g)?).sqrt()),
    })
}

/// Explicit RK4 stepping of the gauge-adjusted flow `dg/dt = F(g)` for a
/// small perturbation of the flat torus metric.
pub fn nonlinear_flow_torus(bg: &Background, g0: &TensorField, opts: &StepOptions) -> Result<FlowTrajectory> {
    flat_torus(&bg.geo)?;
    n_minus_two(bg.n())?;
    let dev = g0.sub(&bg.metric()).max_abs();
    if dev > NONLINEAR_MAX_PERTURBATION {
        return Err(Error::InvalidParameter(format!(
            "initial perturbation {dev:e} exceeds {NONLINEAR_MAX_PERTURBATION:e}"
        )));
    }
    rk4(g0, opts, FlowKind::Nonlinear, bg.n(), |g| flow_rhs(bg, g), |g, t| nonlinear_diagnostics(bg, g, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `−slope` of `ln ‖v(t)‖`.
    pub rate: f64,
    pub r_squared: f64,
    /// Time interval of the samples used.
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares fit of `ln y = b − rate · t` over samples with `t` in
/// `window` (all samples when `None`) and `y > 0`.
pub fn decay_rate_fit_series(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Shape("times and values differ in length".into()));
    }
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= lo && **t <= hi && **y > 0.0 && y.is_finite())
        .map(|(t, y)| (*t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("decay fit needs at least two positive samples".into()));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::InvalidParameter("decay fit needs distinct times".into()));
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Ok(DecayFit { rate: -slope, r_squared, window: (pts[0].0, pts[pts.len() - 1].0), points: pts.len() })
}

pub fn decay_rate_fit(traj: &FlowTrajectory, window: Option<(f64, f64)>) -> Result<DecayFit> {
    decay_rate_fit_series(&traj.times, &traj.norms(), window)
}

/// Self-describing header of a state checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub kind: FlowKind,
    pub n: usize,
    pub rank: usize,
    pub nnodes: usize,
    /// Points per active axis.
    pub points: Vec<usize>,
    /// Free-form chart description (the serialized chart of the run).
    pub chart: serde_json::Value,
    pub times: Vec<f64>,
    /// Body layout: for each time, component-major `f64` little-endian values.
    pub layout: String,
}

const MAGIC: &[u8; 8] = b"BFCKPT01";

/// Serializes `MAGIC`, the header length (u64 LE), the JSON header and the
/// states as little-endian `f64`.
pub fn checkpoint_bytes(traj: &FlowTrajectory, points: &[usize], chart: serde_json::Value) -> Result<Vec<u8>> {
    let first = traj.states.first().ok_or_else(|| Error::InvalidParameter("trajectory holds no states".into()))?;
    let header = CheckpointHeader {
        format: "bachflow-checkpoint".into(),
        version: 1,
        kind: traj.kind,
        n: traj.n,
        rank: first.rank,
        nnodes: first.nnodes,
        points: points.to_vec(),
        chart,
        times: traj.times.clone(),
        layout: "time-major, component-major, node-major f64 LE".into(),
    };
    let json = serde_json::to_vec(&header)?;
    let body: usize = traj.states.iter().map(|s| s.data.len()).sum();
    let mut out = Vec::with_capacity(16 + json.len() + 8 * body);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for s in &traj.states {
        for v in &s.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_checkpoint(path: &Path, traj: &FlowTrajectory, points: &[usize], chart: serde_json::Value) -> Result<()> {
    std::fs::write(path, checkpoint_bytes(traj, points, chart)?)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, Vec<TensorField>)> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a checkpoint file".into()));
    }
    let mut len = [0u8; 8];
    f.read_exact(&mut len)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    f.read_exact(&mut json)?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    let per = header.n.pow(header.rank as u32) * header.nnodes;
    let mut states = Vec::with_capacity(header.times.len());
    let mut buf = [0u8; 8];
    for _ in &header.times {
        let mut data = Vec::with_capacity(per);
        for _ in 0..per {
            f.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        let mut t = TensorField::from_data(header.rank, header.n, header.nnodes, data)?;
        if header.rank == 2 {
            t.sym = Symmetry::Sym2;
        }
        states.push(t);
    }
    Ok((header, states))
}
