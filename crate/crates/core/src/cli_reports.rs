//! Experiment runner: JSON configs, named suites, per-check reports and
//! plot-ready CSV tables.
//!
//! Every check record carries an anchor string naming the mathematical claim
//! it tests, or the literal `"plumbing"` for infrastructure checks. Reports
//! are deterministic given the config and seeds apart from the timestamp.

use crate::curvature_ops::{flow_rhs, Background};
use crate::error::{Error, Result};
use crate::flow::{
    checkpoint_bytes, decay_rate_fit, default_dt, linear_flow_slab, linear_flow_torus, nonlinear_flow_torus,
    FlowTrajectory, StepOptions,
};
use crate::field::TensorField;
use crate::geometry::Geometry;
use crate::grid::Scheme;
use crate::indicial::{
    asymptotic_argument_check, scan_half_plane, thresholds, zero_lambda_table, Basis, IndicialResult, LambdaGrid,
    Subspace, CSV_HEADER as INDICIAL_CSV_HEADER,
};
use crate::linearized_operator::{asymmetry_defect, designated_pair, linearization_oracle, GaugeParams};
use crate::model_spaces::{make_model, toric_active_axes, Chart, ChartParams};
use crate::samples::{bump, random_one_form, random_sym2, random_traceless, torus_tt_mode, Profile, Support};
use crate::spectral_analysis::{
    a_norm_identity_residual, bilaplacian_commutator_residual, claimed_bound, delta_star_commutator_residual,
    gap_constants, imk_form_expansion, k_adjoint_k_residual, k_commutator_residual, koiso_identity_residual,
    rayleigh_sample, sphere_trace_kernel, torus_mode_check, torus_mode_field, torus_mode_spectrum,
    traceless_commutator_residual, weitzenbock_residual, Component, IdentityCheck,
};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Name, one-line description and accepted tolerance keys (with defaults).
pub struct SuiteInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub tolerances: &'static [(&'static str, f64)],
}

pub const SUITES: &[SuiteInfo] = &[
    SuiteInfo {
        name: "indicial-table",
        description: "closed-form indicial roots at lambda = 0 against the integer table, and the radius (n-3)/2",
        tolerances: &[("root_error", 1e-12), ("radius_error", 1e-12)],
    },
    SuiteInfo {
        name: "indicial-scan",
        description: "threshold constants, half-plane radius scan and imaginary-axis asymptotics",
        tolerances: &[("radius", 1e-9), ("root_residual", 1e-10), ("threshold", 1e-15)],
    },
    SuiteInfo {
        name: "sphere-kernel",
        description: "kernel of L on trace tensors of the round sphere (Galerkin on polynomials)",
        tolerances: &[("separation", 1e6)],
    },
    SuiteInfo {
        name: "torus-modes",
        description: "grid operator on flat-torus Fourier modes against -1/2 (4 pi^2 |k|^2)^2",
        tolerances: &[("mode_rel_error", 1e-3)],
    },
    SuiteInfo {
        name: "torus-flow",
        description: "decay rate of the linear flow of one torus mode (modal and grid RK4)",
        tolerances: &[("rate_rel_error", 5e-3)],
    },
    SuiteInfo {
        name: "identities",
        description: "integral and pointwise identities on a hyperbolic slab, with refinement order",
        tolerances: &[("relative", 1e-4), ("order", 3.5)],
    },
    SuiteInfo {
        name: "spectra",
        description: "seeded Rayleigh quotients per splitting component against the claimed bounds",
        tolerances: &[("nonpositivity", 1e-6), ("gap", 1e-3)],
    },
    SuiteInfo {
        name: "linearization",
        description: "finite-difference linearization oracle and self-adjointness of L",
        tolerances: &[("order", 1.8), ("asymmetry", 1e-6), ("zero_gauge_asymmetry", 1e-3)],
    },
    SuiteInfo {
        name: "nonlinear-flow",
        description: "short-time nonlinear gauge-adjusted flow on the flat torus",
        tolerances: &[("stationary", 1e-10), ("volume_drift", 1e-8), ("rate_rel_error", 5e-2), ("bach_monotone", 1e-12)],
    },
    SuiteInfo {
        name: "slab-flow",
        description: "RK4 linear flow on a hyperbolic slab: energy identity and decay",
        tolerances: &[("energy_identity", 1e-2)],
    },
];

pub fn list_suites() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

fn suite_info(name: &str) -> Option<&'static SuiteInfo> {
    SUITES.iter().find(|s| s.name == name)
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_values: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<Chart>,
    /// Points per active axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    /// `"fd2"`, `"fd4"`, `"fd6"`, `"fd8"` or `"spectral"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// Nodes kept free of the sample support at each bounded edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub start: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<i64>>,
    #[serde(default)]
    pub checkpoint: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_re: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_im: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_max: Option<f64>,
    /// Scan `Re λ > −a_factor · a(n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub suite: String,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub scan: ScanConfig,
}

impl ExperimentConfig {
    /// Defaults for a registered suite.
    pub fn for_suite(suite: &str) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_string(),
            model: ModelConfig::default(),
            seeds: SeedConfig::default(),
            tolerances: BTreeMap::new(),
            output_dir: None,
            flow: FlowConfig::default(),
            scan: ScanConfig::default(),
        }
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        if let Some(v) = self.tolerances.get(key) {
            return *v;
        }
        suite_info(&self.suite)
            .and_then(|s| s.tolerances.iter().find(|(k, _)| *k == key))
            .map(|(_, v)| *v)
            .unwrap_or(f64::NAN)
    }

    fn seed_list(&self, default: usize) -> Vec<u64> {
        let count = self.seeds.count.unwrap_or(default);
        (0..count as u64).map(|i| self.seeds.start + i).collect()
    }

    fn n_values(&self, default: &[usize]) -> Vec<usize> {
        if let Some(v) = &self.model.n_values {
            return v.clone();
        }
        match self.model.n {
            Some(n) => vec![n],
            None => default.to_vec(),
        }
    }

    fn c_values(&self, default: &[i32]) -> Vec<i32> {
        if let Some(v) = &self.model.c_values {
            return v.clone();
        }
        match self.model.c {
            Some(c) => vec![c],
            None => default.to_vec(),
        }
    }

    fn scheme_or(&self, default: Scheme) -> Result<Scheme> {
        match &self.model.scheme {
            Some(s) => parse_scheme(s),
            None => Ok(default),
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme> {
    match s {
        "spectral" => Ok(Scheme::spectral()),
        "fd2" | "fd4" | "fd6" | "fd8" => Ok(Scheme::fd(s[2..].parse().expect("digit"))),
        _ => Err(Error::Config(format!("unknown scheme `{s}` (expected fd2, fd4, fd6, fd8 or spectral)"))),
    }
}

/// Semantic diagnostics of a parsed config; empty means valid.
pub fn config_diagnostics(cfg: &ExperimentConfig) -> Vec<String> {
    let mut d = Vec::new();
    if cfg.schema_version != SCHEMA_VERSION {
        d.push(format!("schema_version: expected {SCHEMA_VERSION}, got {}", cfg.schema_version));
    }
    let info = suite_info(&cfg.suite);
    if info.is_none() {
        d.push(format!("suite: unknown suite `{}` (registered: {})", cfg.suite, list_suites().join(", ")));
    }
    for (k, v) in &cfg.tolerances {
        if let Some(info) = info {
            if !info.tolerances.iter().any(|(name, _)| name == k) {
                let known: Vec<&str> = info.tolerances.iter().map(|t| t.0).collect();
                d.push(format!("tolerances.{k}: unknown tolerance for suite `{}` (known: {})", cfg.suite, known.join(", ")));
            }
        }
        if !(*v > 0.0) || !v.is_finite() {
            d.push(format!("tolerances.{k}: must be a positive finite number, got {v}"));
        }
    }
    let m = &cfg.model;
    for n in m.n.iter().chain(m.n_values.iter().flatten()) {
        if *n < 3 {
            d.push(format!("model.n: dimension must be at least 3, got {n}"));
        }
    }
    for c in m.c.iter().chain(m.c_values.iter().flatten()) {
        if ![-1, 0, 1].contains(c) {
            d.push(format!("model.c: curvature must be -1, 0 or 1, got {c}"));
        }
    }
    if let Some(g) = &m.grid {
        if g.is_empty() || g.iter().any(|p| *p < 4) {
            d.push("model.grid: need at least one axis with at least 4 points each".into());
        }
    }
    if let Some(s) = &m.scheme {
        if let Err(e) = parse_scheme(s) {
            d.push(format!("model.scheme: {e}"));
        }
    }
    let f = &cfg.flow;
    for (name, v) in [("t_final", f.t_final), ("dt", f.dt), ("amplitude", f.amplitude)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                d.push(format!("flow.{name}: must be positive, got {v}"));
            }
        }
    }
    if f.save_every == Some(0) {
        d.push("flow.save_every: must be at least 1".into());
    }
    let s = &cfg.scan;
    if s.n_re == Some(0) || s.n_im == Some(0) {
        d.push("scan: grid counts must be positive".into());
    }
    for (name, v) in [("re_max", s.re_max), ("im_max", s.im_max), ("a_factor", s.a_factor)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                d.push(format!("scan.{name}: must be positive, got {v}"));
            }
        }
    }
    d
}

/// Parses a config document; JSON errors (including unknown keys) and
/// semantic problems are returned as diagnostics.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| vec![e.to_string()])?;
    let d = config_diagnostics(&cfg);
    if d.is_empty() {
        Ok(cfg)
    } else {
        Err(d)
    }
}

/// Diagnostics for the config at `path` (empty when valid).
pub fn validate_config(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match parse_config(&text) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|d| Error::Config(d.join("; ")))
}

// ---------------------------------------------------------------------------
// Reports

mod json_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    /// Non-finite values are written as the strings `"inf"`, `"-inf"`, `"nan"`.
    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else if v.is_nan() {
            "nan".serialize(s)
        } else if *v > 0.0 {
            "inf".serialize(s)
        } else {
            "-inf".serialize(s)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(serde::de::Error::custom(format!("bad number `{s}`"))),
            },
        }
    }
}

/// Direction of the comparison of `measured` with `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `measured ≤ bound + tolerance`.
    AtMost,
    /// `measured ≥ bound − tolerance`.
    AtLeast,
    /// `|measured − bound| ≤ tolerance`.
    Equals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    /// The claim under test, or `"plumbing"`.
    pub anchor: String,
    #[serde(with = "json_f64")]
    pub measured: f64,
    #[serde(with = "json_f64")]
    pub bound: f64,
    pub relation: Relation,
    #[serde(with = "json_f64")]
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(id: impl Into<String>, anchor: &str, measured: f64, relation: Relation, bound: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => measured <= bound + tolerance,
            Relation::AtLeast => measured >= bound - tolerance,
            Relation::Equals => (measured - bound).abs() <= tolerance,
        };
        CheckRecord { id: id.into(), anchor: anchor.to_string(), measured, bound, relation, tolerance, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvStamp {
    pub version: String,
    pub seed_start: u64,
    pub seed_count: usize,
    /// Grid points per active axis of the main resolution (empty for
    /// closed-form suites).
    pub resolution: Vec<usize>,
    pub threads: usize,
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: String,
    pub checks: Vec<CheckRecord>,
    pub notes: Vec<String>,
    pub env: EnvStamp,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// A CSV table produced by a suite.
#[derive(Clone, Debug, PartialEq)]
pub struct DataTable {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl DataTable {
    pub fn new(name: &str, header: &str) -> Self {
        DataTable { name: name.into(), header: header.into(), rows: Vec::new() }
    }

    pub fn csv(&self) -> String {
        let mut s = self.header.clone();
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

/// Everything a suite produces.
#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub tables: Vec<DataTable>,
    /// Binary artifacts (file name, bytes), such as state checkpoints.
    pub binaries: Vec<(String, Vec<u8>)>,
}

impl SuiteRun {
    /// Writes `report.json`, one CSV per table and the binary artifacts.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.report)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), t.csv())?;
        }
        for (name, bytes) in &self.binaries {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Process exit code: 0 all checks pass, 1 a check failed or a module error
/// occurred, 2 configuration or output error, 3 numerical blow-up.
pub fn exit_code(result: &Result<SuiteReport>) -> i32 {
    match result {
        Ok(r) if r.all_pass() => 0,
        Ok(_) => 1,
        Err(e) => match e.root() {
            Error::BlowUp { .. } => 3,
            Error::Config(_) | Error::Json(_) | Error::Io(_) => 2,
            _ => 1,
        },
    }
}

/// Thread cap from `BACHFLOW_THREADS` (unset or invalid means no cap).
pub fn thread_cap() -> Option<usize> {
    std::env::var("BACHFLOW_THREADS").ok()?.trim().parse().ok().filter(|n: &usize| *n > 0)
}

/// Installs the global rayon pool with the `BACHFLOW_THREADS` cap, if set.
/// Returns the number of worker threads in effect.
pub fn configure_threads() -> usize {
    if let Some(n) = thread_cap() {
        // A pool may already exist (e.g. in tests); the cap then does not apply.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    rayon::current_num_threads()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    checks: Vec<CheckRecord>,
    tables: Vec<DataTable>,
    binaries: Vec<(String, Vec<u8>)>,
    notes: Vec<String>,
    resolution: Vec<usize>,
    seed_count: usize,
}

impl Ctx<'_> {
    fn tol(&self, key: &str) -> f64 {
        self.cfg.tolerance(key)
    }

    fn push(&mut self, rec: CheckRecord) {
        self.checks.push(rec);
    }
}

fn now() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs one suite. Module errors are wrapped with the id of the failing check.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteRun> {
    let diag = config_diagnostics(cfg);
    if !diag.is_empty() {
        return Err(Error::Config(diag.join("; ")));
    }
    let mut ctx = Ctx {
        cfg,
        checks: Vec::new(),
        tables: Vec::new(),
        binaries: Vec::new(),
        notes: Vec::new(),
        resolution: Vec::new(),
        seed_count: 0,
    };
    match cfg.suite.as_str() {
        "indicial-table" => suite_indicial_table(&mut ctx)?,
        "indicial-scan" => suite_indicial_scan(&mut ctx)?,
        "sphere-kernel" => suite_sphere_kernel(&mut ctx)?,
        "torus-modes" => suite_torus_modes(&mut ctx)?,
        "torus-flow" => suite_torus_flow(&mut ctx)?,
        "identities" => suite_identities(&mut ctx)?,
        "spectra" => suite_spectra(&mut ctx)?,
        "linearization" => suite_linearization(&mut ctx)?,
        "nonlinear-flow" => suite_nonlinear_flow(&mut ctx)?,
        "slab-flow" => suite_slab_flow(&mut ctx)?,
        other => return Err(Error::Config(format!("unknown suite `{other}`"))),
    }
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        suite: cfg.suite.clone(),
        checks: ctx.checks,
        notes: ctx.notes,
        env: EnvStamp {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed_start: cfg.seeds.start,
            seed_count: ctx.seed_count,
            resolution: ctx.resolution,
            threads: rayon::current_num_threads(),
            timestamp: now(),
        },
    };
    Ok(SuiteRun { report, tables: ctx.tables, binaries: ctx.binaries })
}

fn tag<T>(r: Result<T>, id: &str) -> Result<T> {
    r.map_err(|e| e.in_check(id))
}

fn fmt_k(k: &[i64]) -> String {
    k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Indicial suites

const ANCHOR_INDICIAL_TABLE: &str = "indicial roots of L at lambda = 0 are the integer table in each invariant subspace";
const ANCHOR_INDICIAL_RADIUS: &str = "indicial radius of L equals (n-3)/2";
const ANCHOR_HALF_PLANE: &str = "indicial radius of lambda - L is at least (n-1)/8 for Re lambda > -a(n)";

fn suite_indicial_table(ctx: &mut Ctx) -> Result<()> {
    let mut table = DataTable::new("indicial_roots", INDICIAL_CSV_HEADER);
    for n in ctx.cfg.n_values(&[4, 5, 6, 7, 8, 9, 10]) {
        let id = format!("indicial.table.n{n}");
        let res = tag(IndicialResult::compute(n, Complex64::new(0.0, 0.0), Basis::Dx), &id)?;
        let want = zero_lambda_table(n);
        let mut err = 0.0f64;
        for s in Subspace::ALL {
            let mut got: Vec<Complex64> = res.subspace_roots(s).to_vec();
            got.sort_by(|a, b| a.re.total_cmp(&b.re));
            let mut w = want[s.index()];
            w.sort();
            for (g, w) in got.iter().zip(w) {
                err = err.max((g - Complex64::new(w as f64, 0.0)).norm());
            }
        }
        ctx.push(CheckRecord::new(&id, ANCHOR_INDICIAL_TABLE, err, Relation::AtMost, 0.0, ctx.tol("root_error")));
        ctx.push(CheckRecord::new(
            format!("indicial.radius.n{n}"),
            ANCHOR_INDICIAL_RADIUS,
            res.radius,
            Relation::Equals,
            (n as f64 - 3.0) / 2.0,
            ctx.tol("radius_error"),
        ));
        table.rows.extend(res.csv_rows());
    }
    ctx.tables.push(table);
    Ok(())
}

fn suite_indicial_scan(ctx: &mut Ctx) -> Result<()> {
    let sc = &ctx.cfg.scan;
    let (n_re, n_im) = (sc.n_re.unwrap_or(50), sc.n_im.unwrap_or(401));
    let (re_max, im_max) = (sc.re_max.unwrap_or(100.0), sc.im_max.unwrap_or(1e4));
    let a_factor = sc.a_factor.unwrap_or(1.0);
    let mut scan_table =
        DataTable::new("indicial_scan", "n,a_bound,points,min_radius,argmin_re,argmin_im,guaranteed_radius");
    let mut asym_table = DataTable::new("indicial_asymptotics", "n,y,max_arg_deviation,min_radius");
    ctx.notes.push(
        "the half-plane scan is a finite sample (falsification test of the radius bound, not a proof)".into(),
    );
    for n in ctx.cfg.n_values(&[4, 5, 6]) {
        let t = thresholds(n);
        let nf = n as f64;
        let sq = |x: f64| x * x;
        let exact = [
            ("eps_v0", t.eps_v0, sq(nf * nf - 1.0) / 32.0),
            ("eps_v1", t.eps_v1, sq(sq(nf - 2.0) - 1.0) / 32.0),
            ("eps_v3", t.eps_v3, sq(sq(nf - 1.0) - 4.0) / 32.0),
            ("a", t.a, (nf - 2.0) * (3.0 * nf - 11.0) * (5.0 * nf - 13.0) / 128.0),
            ("r", t.r, (nf - 1.0) / 8.0),
        ];
        for (name, got, want) in exact {
            ctx.push(CheckRecord::new(
                format!("indicial.threshold.{name}.n{n}"),
                "closed-form threshold constants of the indicial analysis",
                got,
                Relation::Equals,
                want,
                ctx.tol("threshold") * want.abs().max(1.0),
            ));
        }
        ctx.push(CheckRecord::new(
            format!("indicial.threshold.ordering.n{n}"),
            "threshold ordering eps_V1 <= eps_V3 < eps_V0",
            (t.eps_v1 <= t.eps_v3 && t.eps_v3 < t.eps_v0) as u8 as f64,
            Relation::Equals,
            1.0,
            0.5,
        ));
        let a_bound = a_factor * t.a;
        let id = format!("indicial.scan.n{n}");
        let grid = LambdaGrid::standard(a_bound, n_re, n_im, re_max, im_max, 1e-9);
        let rep = tag(scan_half_plane(n, a_bound, &grid), &id)?;
        ctx.push(CheckRecord::new(&id, ANCHOR_HALF_PLANE, rep.min_radius, Relation::AtLeast, t.r, ctx.tol("radius")));
        ctx.push(CheckRecord::new(
            format!("indicial.scan_points.n{n}"),
            "plumbing",
            rep.points as f64,
            Relation::AtLeast,
            1e4,
            0.0,
        ));
        ctx.push(CheckRecord::new(
            format!("indicial.root_residual.n{n}"),
            "closed-form roots zero the indicial quartic",
            rep.max_root_residual,
            Relation::AtMost,
            0.0,
            ctx.tol("root_residual"),
        ));
        scan_table.rows.push(format!(
            "{n},{a_bound},{},{},{},{},{}",
            rep.points, rep.min_radius, rep.argmin_re, rep.argmin_im, t.r
        ));
        let asym = tag(asymptotic_argument_check(n, &[1e2, 1e3, 1e4]), &id)?;
        let monotone = asym.windows(2).all(|w| w[1].max_arg_deviation < w[0].max_arg_deviation);
        let min_rad = asym.iter().map(|s| s.min_radius).fold(f64::INFINITY, f64::min);
        ctx.push(CheckRecord::new(
            format!("indicial.asymptotic_arguments.n{n}"),
            "on the imaginary axis the outer radicands approach arguments +-pi/4, +-3pi/4",
            monotone as u8 as f64,
            Relation::Equals,
            1.0,
            0.5,
        ));
        ctx.push(CheckRecord::new(
            format!("indicial.asymptotic_radius.n{n}"),
            "roots stay off the critical line for large |Im lambda|",
            min_rad,
            Relation::AtLeast,
            t.r,
            ctx.tol("radius"),
        ));
        for s in asym {
            asym_table.rows.push(format!("{n},{},{},{}", s.y, s.max_arg_deviation, s.min_radius));
        }
    }
    ctx.tables.push(scan_table);
    ctx.tables.push(asym_table);
    Ok(())
}

// ---------------------------------------------------------------------------
// Spectra of model cases

fn suite_sphere_kernel(ctx: &mut Ctx) -> Result<()> {
    let mut table = DataTable::new("sphere_kernel", "n,index,singular_value");
    for n in ctx.cfg.n_values(&[4]) {
        let id = format!("sphere.kernel.n{n}");
        let rep = tag(sphere_trace_kernel(n, 4), &id)?;
        ctx.push(CheckRecord::new(
            &id,
            "kernel of L on volume-preserving trace tensors of the round sphere is the first harmonics",
            rep.kernel_dim as f64,
            Relation::Equals,
            (n + 1) as f64,
            0.5,
        ));
        ctx.push(CheckRecord::new(
            format!("sphere.separation.n{n}"),
            "plumbing",
            rep.separation,
            Relation::AtLeast,
            ctx.tol("separation"),
            0.0,
        ));
        for (i, s) in rep.singular_values.iter().enumerate() {
            table.rows.push(format!("{n},{i},{s}"));
        }
    }
    ctx.tables.push(table);
    Ok(())
}

fn torus_geometry(n: usize, points: &[usize], scheme: Scheme) -> Result<Geometry> {
    make_model(0, n, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points: points.to_vec() })?.geometry(scheme)
}

/// Representatives with `|k|² ≤ 4`, truncated to `m` active axes.
fn torus_wave_vectors(m: usize) -> Vec<Vec<i64>> {
    let mut ks = Vec::new();
    for ones in 1..=m.min(4) {
        let mut k = vec![0; m];
        k[..ones].iter_mut().for_each(|v| *v = 1);
        ks.push(k);
    }
    let mut k = vec![0; m];
    k[0] = 2;
    ks.push(k);
    ks
}

fn suite_torus_modes(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.cfg.model.n.unwrap_or(4);
    let points = ctx.cfg.model.grid.clone().unwrap_or_else(|| vec![32; n]);
    let scheme = ctx.cfg.scheme_or(Scheme::fd(6))?;
    ctx.resolution = points.clone();
    let geo = tag(torus_geometry(n, &points, scheme), "torus.setup")?;
    let mut table = DataTable::new("torus_modes", "k,k_sq,modal,rayleigh,relative_error,residual");
    for k in torus_wave_vectors(points.len()) {
        let id = format!("torus.mode.{}", k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_"));
        let r = tag(torus_mode_check(&geo, &k), &id)?;
        ctx.push(CheckRecord::new(
            &id,
            "L on the flat torus multiplies mode k by -1/2 (4 pi^2 |k|^2)^2",
            r.relative_error,
            Relation::AtMost,
            0.0,
            ctx.tol("mode_rel_error"),
        ));
        table.rows.push(format!(
            "{},{},{},{},{},{}",
            fmt_k(&k),
            r.modal.k_sq,
            r.modal.eigenvalue,
            r.rayleigh,
            r.relative_error,
            r.residual
        ));
    }
    ctx.tables.push(table);
    Ok(())
}

fn suite_torus_flow(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.cfg.model.n.unwrap_or(4);
    let points = ctx.cfg.model.grid.clone().unwrap_or_else(|| vec![16, 16]);
    let scheme = ctx.cfg.scheme_or(Scheme::fd(6))?;
    ctx.resolution = points.clone();
    let mut k = ctx.cfg.flow.k.clone().unwrap_or_else(|| vec![1]);
    k.resize(points.len(), 0);
    let geo = tag(torus_geometry(n, &points, scheme), "torus_flow.setup")?;
    let modal = torus_mode_spectrum(&k, n);
    let predicted = -modal.eigenvalue / (n as f64 - 2.0);
    let v0 = tag(torus_mode_field(&geo, &k), "torus_flow.setup")?;
    let t_final = ctx.cfg.flow.t_final.unwrap_or(1.0 / predicted);
    let mut fit_table = DataTable::new("torus_flow", "method,k,k_sq,fitted_rate,predicted_rate,rel_error,r_squared");
    let times: Vec<f64> = (0..=40).map(|i| t_final * i as f64 / 40.0).collect();
    let exact = tag(linear_flow_torus(&geo, &v0, &times, false), "torus_flow.modal")?;
    let dt = ctx.cfg.flow.dt.unwrap_or_else(|| default_dt(&geo));
    let steps = (t_final / dt).ceil() as usize;
    let opts = StepOptions { t_final, dt, save_every: ctx.cfg.flow.save_every.unwrap_or((steps / 40).max(1)), keep_states: false };
    let grid = tag(linear_flow_slab(&geo, &v0, &opts), "torus_flow.grid")?;
    for (method, traj) in [("modal", &exact), ("grid_rk4", &grid)] {
        let id = format!("torus_flow.rate.{method}");
        let fit = tag(decay_rate_fit(traj, None), &id)?;
        let rel = (fit.rate - predicted).abs() / predicted;
        ctx.push(CheckRecord::new(
            &id,
            "the linear flow decays mode k at rate (1/2)(4 pi^2 |k|^2)^2 / (n-2)",
            rel,
            Relation::AtMost,
            0.0,
            ctx.tol("rate_rel_error"),
        ));
        let monotone = traj.norms().windows(2).all(|w| w[1] <= w[0]);
        ctx.push(CheckRecord::new(
            format!("torus_flow.monotone.{method}"),
            "the linear flow on the torus does not increase the L2 norm",
            monotone as u8 as f64,
            Relation::Equals,
            1.0,
            0.5,
        ));
        fit_table.rows.push(format!(
            "{method},{},{},{},{predicted},{rel},{}",
            fmt_k(&k),
            modal.k_sq,
            fit.rate,
            fit.r_squared
        ));
        ctx.tables.push(trajectory_table(&format!("torus_flow_{method}"), traj));
    }
    ctx.tables.insert(0, fit_table);
    Ok(())
}

fn trajectory_table(name: &str, traj: &FlowTrajectory) -> DataTable {
    let csv = traj.csv();
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default().to_string();
    DataTable { name: name.into(), header, rows: lines.map(String::from).collect() }
}

// ---------------------------------------------------------------------------
// Identity suite

const ANCHOR_IDENTITY: &str = "integral and pointwise identities behind the nonpositivity estimates on hyperbolic space";

fn identity_geometry(points: usize, scheme: Scheme, chart: &Chart) -> Result<Geometry> {
    make_model(-1, 4, &ChartParams { chart: chart.clone(), points: vec![points, points] })?.geometry(scheme.lenient())
}

/// The nine identity checks for one seed.
pub fn identity_battery(geo: &Geometry, support: &Support, seed: u64) -> Result<Vec<IdentityCheck>> {
    let v = random_sym2(&geo.grid, support, seed);
    let vt = random_traceless(geo, support, seed);
    let a = random_one_form(&geo.grid, support, seed);
    Ok(vec![
        koiso_identity_residual(geo, &v)?,
        a_norm_identity_residual(geo, &vt)?,
        weitzenbock_residual(geo, &a)?,
        k_commutator_residual(geo, &a)?,
        delta_star_commutator_residual(geo, &a)?,
        bilaplacian_commutator_residual(geo, &v)?,
        traceless_commutator_residual(geo, &vt)?,
        k_adjoint_k_residual(geo, &a)?,
        imk_form_expansion(geo, &a)?.check,
    ])
}

/// Default identity-suite chart: the slab `x ∈ [0.5, 1.5]`, `|y| ≤ 0.5`.
pub fn identity_chart() -> Chart {
    Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }
}

fn suite_identities(ctx: &mut Ctx) -> Result<()> {
    let points = ctx.cfg.model.grid.as_ref().map(|g| g[0]).unwrap_or(129);
    let margin = ctx.cfg.model.margin.unwrap_or(8);
    let scheme = ctx.cfg.scheme_or(Scheme::fd(4))?;
    let chart = ctx.cfg.model.chart.clone().unwrap_or_else(identity_chart);
    let seeds = ctx.cfg.seed_list(64);
    ctx.seed_count = seeds.len();
    ctx.resolution = vec![points, points];
    let order_seeds: Vec<u64> = seeds.iter().copied().take(8).collect();
    let coarse = tag(identity_geometry(points, scheme, &chart), "identities.setup")?;
    let fine = tag(identity_geometry(2 * points - 1, scheme, &chart), "identities.setup")?;
    let sup_c = tag(Support::centered(&coarse.grid, margin), "identities.setup")?.with_profile(Profile::Polynomial(12));
    let sup_f = tag(Support::centered(&fine.grid, 2 * margin), "identities.setup")?.with_profile(Profile::Polynomial(12));
    let coarse_runs: Vec<Vec<IdentityCheck>> = seeds
        .par_iter()
        .map(|&s| tag(identity_battery(&coarse, &sup_c, s), &format!("identities.seed{s}")))
        .collect::<Result<_>>()?;
    let fine_runs: Vec<Vec<IdentityCheck>> = order_seeds
        .par_iter()
        .map(|&s| tag(identity_battery(&fine, &sup_f, s), &format!("identities.refined.seed{s}")))
        .collect::<Result<_>>()?;
    let mut table = DataTable::new("identities", "seed,points,identity,residual,scale,relative");
    for (s, run) in seeds.iter().zip(&coarse_runs) {
        for c in run {
            table.rows.push(format!("{s},{points},{},{},{},{}", c.name, c.residual, c.scale, c.relative()));
        }
    }
    for (s, run) in order_seeds.iter().zip(&fine_runs) {
        for c in run {
            table.rows.push(format!("{s},{},{},{},{},{}", 2 * points - 1, c.name, c.residual, c.scale, c.relative()));
        }
    }
    ctx.tables.push(table);
    if seeds.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = coarse_runs[0].iter().map(|c| c.name.clone()).collect();
    for (i, name) in names.iter().enumerate() {
        let worst = coarse_runs.iter().map(|r| r[i].relative()).fold(0.0, f64::max);
        ctx.push(CheckRecord::new(
            format!("identity.{name}.relative"),
            ANCHOR_IDENTITY,
            worst,
            Relation::AtMost,
            0.0,
            ctx.tol("relative"),
        ));
        let orders: Vec<f64> =
            coarse_runs.iter().zip(&fine_runs).map(|(c, f)| (c[i].relative() / f[i].relative()).log2()).collect();
        let rms = (orders.iter().map(|o| o * o).sum::<f64>() / orders.len() as f64).sqrt();
        ctx.push(CheckRecord::new(
            format!("identity.{name}.order"),
            ANCHOR_IDENTITY,
            rms,
            Relation::AtLeast,
            ctx.tol("order"),
            0.0,
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rayleigh sampling

/// Default chart, grid and scheme for Rayleigh sampling at curvature `c`.
pub fn sampling_setup(c: i32, n: usize) -> (Chart, Vec<usize>, Scheme) {
    match c {
        -1 => (identity_chart(), vec![33, 33], Scheme::fd(4).lenient()),
        0 => (Chart::FlatTorus { period: 1.0 }, vec![24, 24], Scheme::spectral()),
        _ => {
            let m = toric_active_axes(n);
            (Chart::SphereToric { inset: 0.2 }, vec![if m <= 2 { 33 } else { 21 }; m], Scheme::fd(4).lenient())
        }
    }
}

fn curvature_word(c: i32) -> &'static str {
    match c {
        -1 => "hyperbolic",
        0 => "flat",
        _ => "spherical",
    }
}

fn suite_spectra(ctx: &mut Ctx) -> Result<()> {
    let seeds = ctx.cfg.seed_list(64);
    ctx.seed_count = seeds.len();
    let margin = ctx.cfg.model.margin.unwrap_or(2);
    let mut table = DataTable::new("rayleigh", "c,n,component,seed,quotient,bound,pass");
    ctx.notes.push("Rayleigh sampling is falsification-style: samples test the bounds, not their sharpness".into());
    for c in ctx.cfg.c_values(&[-1, 0, 1]) {
        for n in ctx.cfg.n_values(&[4, 5, 6]) {
            let (chart, pts, scheme) = sampling_setup(c, n);
            let chart = ctx.cfg.model.chart.clone().filter(|ch| ch.curvature() == c).unwrap_or(chart);
            let pts = ctx.cfg.model.grid.clone().unwrap_or(pts);
            let scheme = ctx.cfg.scheme_or(scheme)?;
            if ctx.resolution.is_empty() {
                ctx.resolution = pts.clone();
            }
            let setup = format!("spectra.c{c}.n{n}.setup");
            let geo = tag(make_model(c, n, &ChartParams { chart, points: pts }).and_then(|sp| sp.geometry(scheme)), &setup)?;
            let sup = tag(Support::centered(&geo.grid, margin), &setup)?.with_profile(Profile::Polynomial(12));
            for comp in Component::ALL {
                let id = format!("spectra.c{c}.n{n}.{}", comp.name());
                let bound = claimed_bound(comp, c, n);
                let tol = if bound < 0.0 { ctx.tol("gap") } else { ctx.tol("nonpositivity") };
                let rep = tag(rayleigh_sample(&geo, comp, &sup, &seeds, tol), &id)?;
                for s in &rep.samples {
                    table.rows.push(format!("{c},{n},{},{},{},{bound},{}", comp.name(), s.seed, s.quotient, s.pass));
                }
                if seeds.is_empty() {
                    continue;
                }
                let anchor = format!(
                    "(v, Lv) <= {} |v|^2 on the {} component ({})",
                    if bound < 0.0 { "-gap" } else { "0" },
                    comp.name(),
                    curvature_word(c)
                );
                ctx.push(CheckRecord::new(&id, &anchor, rep.max_quotient(), Relation::AtMost, bound, tol));
                if c == -1 {
                    ctx.push(CheckRecord::new(
                        format!("{id}.uniform_gap"),
                        "(v, Lv) <= -a(n) |v|^2 on hyperbolic space",
                        rep.max_quotient(),
                        Relation::AtMost,
                        -gap_constants(n).a,
                        ctx.tol("gap"),
                    ));
                }
            }
        }
    }
    ctx.tables.push(table);
    Ok(())
}

// ---------------------------------------------------------------------------
// Linearization

/// Chart and grid for the linearization oracle at curvature `c` (spectral
/// derivatives with Gaussian samples).
pub fn oracle_setup(c: i32) -> (Chart, Vec<usize>) {
    match c {
        -1 => (identity_chart(), vec![33, 33]),
        0 => (Chart::FlatTorus { period: 1.0 }, vec![24, 24]),
        _ => (Chart::SphereToric { inset: 0.2 }, vec![33, 33]),
    }
}

/// Wide hyperbolic slab for the designated self-adjointness pair.
pub fn designated_pair_chart() -> (Chart, Vec<usize>) {
    (Chart::HyperbolicHalfSpace { x_min: 0.25, x_max: 2.25, y_half_width: 1.0 }, vec![64, 64])
}

/// Relative first step of the symmetric-difference oracle: `s0 = 1e−2/‖v‖`.
pub const ORACLE_STEP: f64 = 1e-2;

fn suite_linearization(ctx: &mut Ctx) -> Result<()> {
    let seeds = ctx.cfg.seed_list(8);
    ctx.seed_count = seeds.len();
    let n = ctx.cfg.model.n.unwrap_or(4);
    let mut table = DataTable::new("linearization", "c,seed,kind,value");
    for c in ctx.cfg.c_values(&[-1, 0, 1]) {
        let (chart, pts) = oracle_setup(c);
        if ctx.resolution.is_empty() {
            ctx.resolution = pts.clone();
        }
        let setup = format!("linearization.c{c}.setup");
        let sp = tag(make_model(c, n, &ChartParams { chart, points: pts }), &setup)?;
        let bg = tag(Background::new(&sp, Scheme::spectral()), &setup)?;
        let sup = tag(Support::centered(&bg.geo.grid, 2), &setup)?.with_profile(Profile::Gaussian);
        let id = format!("linearization.c{c}.order");
        let results: Vec<(f64, f64)> = seeds
            .par_iter()
            .map(|&s| -> Result<(f64, f64)> {
                let v = random_sym2(&bg.geo.grid, &sup, s);
                let s0 = ORACLE_STEP / bg.geo.l2_norm_sq(&v).sqrt();
                let o = linearization_oracle(&bg, &v, s0, 3)?;
                let u = random_sym2(&bg.geo.grid, &sup, s ^ 0x5bd1_e995);
                let asym = asymmetry_defect(&bg.geo, &v, &u, GaugeParams::self_adjoint(c as f64, n))?;
                Ok((o.order, asym))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_check(&id))?;
        for (s, (o, a)) in seeds.iter().zip(&results) {
            table.rows.push(format!("{c},{s},oracle_order,{o}"));
            table.rows.push(format!("{c},{s},asymmetry,{a}"));
        }
        if seeds.is_empty() {
            continue;
        }
        let min_order = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        ctx.push(CheckRecord::new(
            &id,
            "L/(n-2) is the linearization of the gauge-adjusted flow at h",
            min_order,
            Relation::AtLeast,
            ctx.tol("order"),
            0.0,
        ));
        let max_asym = results.iter().map(|r| r.1).fold(0.0, f64::max);
        ctx.push(CheckRecord::new(
            format!("linearization.c{c}.asymmetry"),
            "L is formally self-adjoint in the gauge mu = -c(n-1)/2, nu = -c/4",
            max_asym,
            Relation::AtMost,
            0.0,
            ctx.tol("asymmetry"),
        ));
    }
    let (chart, pts) = designated_pair_chart();
    let id = "linearization.designated_pair";
    let geo = tag(make_model(-1, n, &ChartParams { chart, points: pts }).and_then(|sp| sp.geometry(Scheme::spectral())), id)?;
    let sup = tag(Support::centered(&geo.grid, 2), id)?.with_profile(Profile::Gaussian);
    let f = TensorField::scalar(bump(&geo.grid, &sup), n);
    let (u, w) = tag(designated_pair(&geo, &f), id)?;
    let sa = tag(asymmetry_defect(&geo, &u, &w, GaugeParams::self_adjoint(-1.0, n)), id)?;
    let zero = tag(asymmetry_defect(&geo, &u, &w, GaugeParams::new(0.0, 0.0)), id)?;
    ctx.push(CheckRecord::new(
        "linearization.designated_pair.self_adjoint_gauge",
        "L is formally self-adjoint in the gauge mu = -c(n-1)/2, nu = -c/4",
        sa,
        Relation::AtMost,
        0.0,
        ctx.tol("asymmetry"),
    ));
    ctx.push(CheckRecord::new(
        "linearization.designated_pair.zero_gauge",
        "with mu = nu = 0 the operator is not self-adjoint (the gauge choice matters)",
        zero,
        Relation::AtLeast,
        ctx.tol("zero_gauge_asymmetry"),
        0.0,
    ));
    table.rows.push(format!("-1,designated,self_adjoint_gauge,{sa}"));
    table.rows.push(format!("-1,designated,zero_gauge,{zero}"));
    ctx.tables.push(table);
    Ok(())
}

// ---------------------------------------------------------------------------
// Flows

fn suite_nonlinear_flow(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.cfg.model.n.unwrap_or(4);
    let points = ctx.cfg.model.grid.clone().unwrap_or_else(|| vec![16]);
    let scheme = ctx.cfg.scheme_or(Scheme::spectral())?;
    ctx.resolution = points.clone();
    let chart = Chart::FlatTorus { period: 1.0 };
    let setup = "nonlinear_flow.setup";
    let sp = tag(make_model(0, n, &ChartParams { chart: chart.clone(), points: points.clone() }), setup)?;
    let bg = tag(Background::new(&sp, scheme), setup)?;
    let fh = tag(flow_rhs(&bg, &bg.metric()), "nonlinear_flow.stationary")?;
    ctx.push(CheckRecord::new(
        "nonlinear_flow.stationary",
        "the flat metric is a stationary point of the flow",
        fh.max_abs(),
        Relation::AtMost,
        0.0,
        ctx.tol("stationary"),
    ));
    let mut k = ctx.cfg.flow.k.clone().unwrap_or_else(|| vec![1]);
    k.resize(points.len(), 0);
    let amp = ctx.cfg.flow.amplitude.unwrap_or(1e-3);
    let v = tag(torus_tt_mode(&bg.geo.grid, &k, amp), setup)?;
    let g0 = bg.perturbed(&v, 1.0);
    let modal = torus_mode_spectrum(&k, n);
    let predicted = -modal.eigenvalue / (n as f64 - 2.0);
    let t_final = ctx.cfg.flow.t_final.unwrap_or(1.5 / predicted);
    let dt = ctx.cfg.flow.dt.unwrap_or_else(|| default_dt(&bg.geo));
    let steps = (t_final / dt).ceil() as usize;
    let keep = ctx.cfg.flow.checkpoint;
    let opts = StepOptions { t_final, dt, save_every: ctx.cfg.flow.save_every.unwrap_or((steps / 20).max(1)), keep_states: keep };
    let traj = tag(nonlinear_flow_torus(&bg, &g0, &opts), "nonlinear_flow.run")?;
    let vols: Vec<f64> = traj.diagnostics.iter().map(|d| d.volume).collect();
    let drift = (vols[vols.len() - 1] - vols[0]).abs() / t_final;
    ctx.push(CheckRecord::new(
        "nonlinear_flow.volume_drift",
        "the gauge-adjusted flow preserves volume",
        drift,
        Relation::AtMost,
        0.0,
        ctx.tol("volume_drift"),
    ));
    let fit = tag(decay_rate_fit(&traj, None), "nonlinear_flow.rate")?;
    let rel = (fit.rate - predicted).abs() / predicted;
    ctx.push(CheckRecord::new(
        "nonlinear_flow.rate",
        "small transverse-traceless perturbations decay at the linear rate sigma(k)/(n-2)",
        rel,
        Relation::AtMost,
        0.0,
        ctx.tol("rate_rel_error"),
    ));
    let bach: Vec<f64> = traj.diagnostics.iter().filter_map(|d| d.bach_norm).collect();
    let worst_rise = bach.windows(2).map(|w| (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max);
    ctx.push(CheckRecord::new(
        "nonlinear_flow.bach_monotone",
        "sanity: |B(g(t))| nonincreasing on the sampled window (observation, not a theorem)",
        worst_rise.max(0.0),
        Relation::AtMost,
        0.0,
        ctx.tol("bach_monotone"),
    ));
    let mut fit_table = DataTable::new("nonlinear_flow_fit", "k,amplitude,fitted_rate,predicted_rate,rel_error,volume_drift");
    fit_table.rows.push(format!("{},{amp},{},{predicted},{rel},{drift}", fmt_k(&k), fit.rate));
    ctx.tables.push(fit_table);
    ctx.tables.push(trajectory_table("nonlinear_flow", &traj));
    if keep {
        let chart_json = serde_json::to_value(&chart)?;
        ctx.binaries.push(("nonlinear_flow.ckpt".into(), checkpoint_bytes(&traj, &points, chart_json)?));
    }
    ctx.notes.push(
        "long-time nonlinear convergence on hyperbolic space is not simulated; spectral bounds and linear decay stand in"
            .into(),
    );
    Ok(())
}

fn suite_slab_flow(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.cfg.model.n.unwrap_or(4);
    let points = ctx.cfg.model.grid.clone().unwrap_or_else(|| vec![17, 17]);
    let scheme = ctx.cfg.scheme_or(Scheme::fd(4))?.lenient();
    let chart = ctx.cfg.model.chart.clone().filter(|c| c.curvature() == -1).unwrap_or_else(identity_chart);
    ctx.resolution = points.clone();
    let seeds = ctx.cfg.seed_list(1);
    ctx.seed_count = seeds.len();
    let setup = "slab_flow.setup";
    let geo = tag(make_model(-1, n, &ChartParams { chart, points }).and_then(|sp| sp.geometry(scheme)), setup)?;
    let margin = ctx.cfg.model.margin.unwrap_or(2);
    let sup = tag(Support::centered(&geo.grid, margin), setup)?.with_profile(Profile::Polynomial(12));
    let gap = gap_constants(n);
    let mut fit_table = DataTable::new("slab_flow_fit", "seed,fitted_rate,claimed_rate,energy_identity_error");
    for &seed in &seeds {
        let id = format!("slab_flow.seed{seed}");
        let v0 = tag(crate::spectral_analysis::component_sample(&geo, Component::Trace, &sup, seed), &id)?;
        let dt = ctx.cfg.flow.dt.unwrap_or_else(|| default_dt(&geo));
        let t_final = ctx.cfg.flow.t_final.unwrap_or(400.0 * dt);
        let opts = StepOptions { t_final, dt, save_every: ctx.cfg.flow.save_every.unwrap_or(4), keep_states: false };
        let traj = tag(linear_flow_slab(&geo, &v0, &opts), &id)?;
        // Late half of the window, after the fastest transients have died out.
        let fit = tag(decay_rate_fit(&traj, Some((0.5 * t_final, t_final))), &id)?;
        let claimed = gap.a / (n as f64 - 2.0);
        ctx.push(CheckRecord::new(
            format!("{id}.rate"),
            "the linear flow on hyperbolic space decays at least at rate a(n)/(n-2)",
            fit.rate,
            Relation::AtLeast,
            claimed,
            0.0,
        ));
        let err = energy_identity_error(&traj, n);
        ctx.push(CheckRecord::new(
            format!("{id}.energy_identity"),
            "d/dt |v|^2 = 2 (v, Lv)/(n-2) along the linear flow",
            err,
            Relation::AtMost,
            0.0,
            ctx.tol("energy_identity"),
        ));
        fit_table.rows.push(format!("{seed},{},{claimed},{err}", fit.rate));
        ctx.tables.push(trajectory_table(&format!("slab_flow_seed{seed}"), &traj));
    }
    ctx.tables.insert(0, fit_table);
    Ok(())
}

/// Largest relative mismatch between the centered difference of `‖v‖²` and
/// `2(v, Lv)/(n−2)` at interior stored times.
pub fn energy_identity_error(traj: &FlowTrajectory, n: usize) -> f64 {
    let d = &traj.diagnostics;
    let mut worst = 0.0f64;
    for i in 1..d.len().saturating_sub(1) {
        let (Some(form), true) = (d[i].form, d[i + 1].time > d[i - 1].time) else { continue };
        let rate = (d[i + 1].norm.powi(2) - d[i - 1].norm.powi(2)) / (d[i + 1].time - d[i - 1].time);
        let want = 2.0 * form / (n as f64 - 2.0);
        worst = worst.max((rate - want).abs() / want.abs().max(f64::MIN_POSITIVE));
    }
    worst
}
