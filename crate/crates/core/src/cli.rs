//! Batch command-line frontend: one command per invocation, configured by an
//! optional JSON file plus flag overrides, emitting deterministic JSON
//! reports that embed the resolved configuration.
//!
//! Exit codes: `0` success, `1` numerical failure, `2` failed assertion,
//! `3` configuration error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{self, BoundaryManifold, NormalField};
use crate::checks;
use crate::expansion::{expand_minimal_graph, hemisphere_neumann, GraphExpansion};
use crate::phg::{Coefficient, Stencil};
use crate::renvol::{self, HemisphereTail, TailProvider};
use crate::solver::{self, Family, ProfileSolution, SolverOptions};
use crate::variation::killing_check;

/// Failure of a CLI run, mapped onto an exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Assertion(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Assertion(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Numerical(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn numerical<E: fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn config<E: fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Expand,
    Rv,
    Vary,
    Solve,
    Check,
}

/// Boundary geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// Round sphere `S^{m-1}(R)` in `R^m`.
    Sphere { radius: f64 },
    /// Circle of radius `R` sampled at `samples` points.
    Circle { radius: f64, samples: usize },
    /// Ellipse with semi-axes `a`, `b`.
    Ellipse { a: f64, b: f64, samples: usize },
    /// Closed curve read from a CSV or JSON file.
    Curve { path: PathBuf, #[serde(default)] stencil: Stencil },
}

/// Where the free Neumann coefficient `u_{m+1}` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NeumannSource {
    Zero,
    /// The exact value for a geodesic hemisphere over the given sphere.
    Hemisphere,
    Constant(f64),
    File(PathBuf),
    /// Fitted from a numerically solved rotational surface (`family`).
    SolverFit,
}

impl FromStr for NeumannSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zero" => Ok(NeumannSource::Zero),
            "hemisphere" => Ok(NeumannSource::Hemisphere),
            "solver-fit" | "solver_fit" => Ok(NeumannSource::SolverFit),
            _ => {
                if let Some(p) = s.strip_prefix("file:") {
                    return Ok(NeumannSource::File(PathBuf::from(p)));
                }
                s.parse::<f64>().map(NeumannSource::Constant).map_err(|_| {
                    format!("invalid Neumann source `{s}` (expected zero, hemisphere, solver-fit, file:PATH or a number)")
                })
            }
        }
    }
}

impl TryFrom<String> for NeumannSource {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<NeumannSource> for String {
    fn from(s: NeumannSource) -> String {
        match s {
            NeumannSource::Zero => "zero".into(),
            NeumannSource::Hemisphere => "hemisphere".into(),
            NeumannSource::SolverFit => "solver-fit".into(),
            NeumannSource::Constant(c) => format!("{c}"),
            NeumannSource::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Hemisphere,
    Catenoid,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Riesz,
    Hadamard,
    #[default]
    Both,
}

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Relative tolerance for the `vary` finite-difference comparison.
    pub compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = SolverOptions::default();
        Tolerances { rtol: o.rtol, atol: o.atol, compare: 2e-3 }
    }
}

/// A complete run description. Every field may come from the JSON config
/// file or a command-line flag; flags win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandKind>,
    pub geometry: Option<GeometrySpec>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub order: Option<usize>,
    pub neumann: Option<NeumannSource>,
    pub family: Option<FamilyKind>,
    pub radius: Option<f64>,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
    pub method: Option<MethodChoice>,
    pub delta: Option<f64>,
    pub param_step: Option<f64>,
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub tolerances: Option<Tolerances>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    /// Parse a JSON config; errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Overlay the fields set in `other`.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(command, geometry, n, m, order, neumann, family, radius, inner, outer, method, delta, param_step, suite, seed, tolerances, output, csv);
        self
    }

    /// Fill defaults and validate dimensional consistency.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let command = self.command.ok_or_else(|| config("no command given"))?;
        if self.family.is_none() && matches!(command, CommandKind::Solve | CommandKind::Vary) && self.geometry.is_none() {
            self.family = Some(FamilyKind::Catenoid);
        }
        if self.geometry.is_none() && self.family.is_none() && command != CommandKind::Check {
            return Err(config("no geometry given (use --sphere, --circle, --ellipse, --curve or --family)"));
        }
        // dimensions
        let m_default = match &self.geometry {
            Some(GeometrySpec::Sphere { .. }) => self.n.unwrap_or(2),
            Some(_) => 2,
            None => match self.family {
                Some(FamilyKind::Cap) => 3,
                _ => self.n.unwrap_or(2),
            },
        };
        let m = *self.m.get_or_insert(m_default);
        let n_default = match (&self.geometry, self.family) {
            (Some(GeometrySpec::Curve { .. }), _) => 2,
            (_, Some(FamilyKind::Cap)) => m + 1,
            _ => m,
        };
        let n = *self.n.get_or_insert(n_default);
        if m < 2 || m > n {
            return Err(config(format!("need 2 ≤ m ≤ n (got m = {m}, n = {n})")));
        }
        if let Some(GeometrySpec::Sphere { .. }) = self.geometry {
            if n != m {
                return Err(config(format!("a sphere boundary bounds a hypersurface: need n = m (got m = {m}, n = {n})")));
            }
        }
        if matches!(self.geometry, Some(GeometrySpec::Circle { .. } | GeometrySpec::Ellipse { .. } | GeometrySpec::Curve { .. })) && m != 2 {
            return Err(config(format!("curve boundaries bound surfaces: need m = 2 (got {m})")));
        }
        let order = *self.order.get_or_insert(m + 4);
        if order < m + 2 {
            return Err(config(format!("order must be at least m + 2 = {} (got {order})", m + 2)));
        }
        if self.family.is_some() {
            let r = *self.radius.get_or_insert(1.0);
            let inner = *self.inner.get_or_insert(1.0);
            let outer = *self.outer.get_or_insert(2.0);
            if r <= 0.0 || inner <= 0.0 || outer <= inner {
                return Err(config("family radii must satisfy radius > 0 and 0 < inner < outer"));
            }
        }
        if self.neumann.is_none() {
            self.neumann = Some(match (&self.geometry, self.family) {
                (_, Some(_)) => NeumannSource::SolverFit,
                (Some(GeometrySpec::Sphere { .. }), None) => NeumannSource::Hemisphere,
                _ => NeumannSource::Zero,
            });
        }
        if self.neumann == Some(NeumannSource::SolverFit) && self.family.is_none() {
            return Err(config("neumann = solver-fit needs a --family"));
        }
        if self.neumann == Some(NeumannSource::Hemisphere) && !matches!(self.geometry, Some(GeometrySpec::Sphere { .. })) {
            return Err(config("neumann = hemisphere needs a sphere boundary"));
        }
        self.method.get_or_insert(MethodChoice::Both);
        let step = *self.param_step.get_or_insert(1e-3);
        if !(step > 0.0 && step < 0.1) {
            return Err(config(format!("param_step must lie in (0, 0.1) (got {step})")));
        }
        if let Some(d) = self.delta {
            if d <= 0.0 {
                return Err(config("delta must be positive"));
            }
        }
        let suite = self.suite.get_or_insert_with(|| "all".into()).clone();
        if checks::suite_ids(&suite).is_none() {
            let names: Vec<&str> = checks::SUITES.iter().map(|s| s.0).collect();
            return Err(config(format!("unknown suite `{suite}` (one of {})", names.join(", "))));
        }
        self.seed.get_or_insert(7);
        self.tolerances.get_or_insert_with(Tolerances::default);
        Ok(self)
    }

    fn solver_family(&self) -> Option<Family> {
        Some(match self.family? {
            FamilyKind::Hemisphere => Family::Hemisphere { radius: self.radius? },
            FamilyKind::Catenoid => Family::Catenoid { inner: self.inner?, outer: self.outer? },
            FamilyKind::Cap => Family::Cap { radius: self.radius?, n: self.n? },
        })
    }

    fn solver_options(&self) -> SolverOptions {
        let t = self.tolerances.unwrap_or_default();
        SolverOptions { rtol: t.rtol, atol: t.atol, ..SolverOptions::default() }
    }
}

/// Parse `key=value[,key=value…]`.
fn key_values(s: &str) -> Result<Vec<(String, f64)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("expected key=value, got `{p}`"))?;
            let v = v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"))?;
            Ok((k.trim().to_ascii_lowercase(), v))
        })
        .collect()
}

fn lookup(kv: &[(String, f64)], keys: &[&str], default: Option<f64>) -> Result<f64, String> {
    kv.iter()
        .find(|(k, _)| keys.contains(&k.as_str()))
        .map(|x| x.1)
        .or(default)
        .ok_or_else(|| format!("missing `{}=`", keys[0]))
}

fn check_keys(kv: &[(String, f64)], allowed: &[&str]) -> Result<(), String> {
    match kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(format!("unknown key `{k}` (allowed: {})", allowed.join(", "))),
        None => Ok(()),
    }
}

fn samples(kv: &[(String, f64)], default: usize) -> Result<usize, String> {
    let p = lookup(kv, &["samples", "p"], Some(default as f64))?;
    if p < 8.0 || p.fract() != 0.0 {
        return Err(format!("samples must be an integer ≥ 8 (got {p})"));
    }
    Ok(p as usize)
}

fn parse_sphere(s: &str) -> Result<GeometrySpec, String> {
    let kv = key_values(s)?;
    check_keys(&kv, &["r", "radius"])?;
    Ok(GeometrySpec::Sphere { radius: lookup(&kv, &["r", "radius"], Some(1.0))? })
}

fn parse_circle(s: &str) -> Result<GeometrySpec, String> {
    let kv = key_values(s)?;
    check_keys(&kv, &["r", "radius", "samples", "p"])?;
    Ok(GeometrySpec::Circle { radius: lookup(&kv, &["r", "radius"], Some(1.0))?, samples: samples(&kv, 64)? })
}

fn parse_ellipse(s: &str) -> Result<GeometrySpec, String> {
    let kv = key_values(s)?;
    check_keys(&kv, &["a", "b", "samples", "p"])?;
    Ok(GeometrySpec::Ellipse { a: lookup(&kv, &["a"], None)?, b: lookup(&kv, &["b"], Some(1.0))?, samples: samples(&kv, 128)? })
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args, Default)]
pub struct Overrides {
    /// JSON configuration file (flags override its fields).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Round sphere boundary, e.g. `R=1`.
    #[arg(long, value_parser = parse_sphere, group = "geom")]
    pub sphere: Option<GeometrySpec>,
    /// Circle boundary, e.g. `R=1,samples=64`.
    #[arg(long, value_parser = parse_circle, group = "geom")]
    pub circle: Option<GeometrySpec>,
    /// Ellipse boundary, e.g. `a=2,b=1,samples=128`.
    #[arg(long, value_parser = parse_ellipse, group = "geom")]
    pub ellipse: Option<GeometrySpec>,
    /// Closed curve from a CSV (one point per row) or JSON file.
    #[arg(long, group = "geom")]
    pub curve: Option<PathBuf>,
    /// Ambient boundary dimension (the space is H^{n+1}).
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension of the minimal submanifold.
    #[arg(long)]
    pub m: Option<usize>,
    /// Truncation order of the boundary expansion.
    #[arg(long)]
    pub order: Option<usize>,
    /// Neumann data: zero | hemisphere | solver-fit | file:PATH | a number.
    #[arg(long)]
    pub neumann: Option<NeumannSource>,
    /// Rotational family solved numerically.
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub inner: Option<f64>,
    #[arg(long)]
    pub outer: Option<f64>,
    /// Regularization for `rv`.
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Split point of the Riesz integral.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Finite-difference step for `vary`.
    #[arg(long)]
    pub param_step: Option<f64>,
    /// Acceptance suite for `check`.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write plot data (x, value) as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "hyperrv", version, about = "Renormalized volumes of minimal submanifolds of hyperbolic space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary expansion of the minimal graph.
    Expand(Overrides),
    /// Renormalized volume.
    Rv(Overrides),
    /// First/second variation reports.
    Vary(Overrides),
    /// Numerical rotational minimal surfaces.
    Solve(Overrides),
    /// Acceptance suite.
    Check(Overrides),
}

impl Command {
    fn split(self) -> (CommandKind, Overrides) {
        match self {
            Command::Expand(o) => (CommandKind::Expand, o),
            Command::Rv(o) => (CommandKind::Rv, o),
            Command::Vary(o) => (CommandKind::Vary, o),
            Command::Solve(o) => (CommandKind::Solve, o),
            Command::Check(o) => (CommandKind::Check, o),
        }
    }
}

impl Overrides {
    fn into_config(self, command: CommandKind) -> RunConfig {
        let geometry = self
            .sphere
            .or(self.circle)
            .or(self.ellipse)
            .or(self.curve.map(|path| GeometrySpec::Curve { path, stencil: Stencil::default() }));
        RunConfig {
            command: Some(command),
            geometry,
            n: self.n,
            m: self.m,
            order: self.order,
            neumann: self.neumann,
            family: self.family,
            radius: self.radius,
            inner: self.inner,
            outer: self.outer,
            method: self.method,
            delta: self.delta,
            param_step: self.param_step,
            suite: self.suite,
            seed: self.seed,
            tolerances: None,
            output: self.output,
            csv: self.csv,
        }
    }
}

/// Result of a successful command: the JSON report and optional CSV rows.
pub struct Outcome {
    pub report: Value,
    pub csv: Option<Vec<u8>>,
    /// Human-readable summary for standard error.
    pub summary: Vec<String>,
    /// Set when an asserted check failed (exit code 2).
    pub failure: Option<String>,
}

/// Build the resolved configuration from parsed arguments.
pub fn configure(cli: Cli) -> Result<RunConfig, CliError> {
    let (kind, overrides) = cli.command.split();
    let base = match &overrides.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    base.merge(overrides.into_config(kind)).resolve()
}

fn build_boundary(cfg: &RunConfig) -> Result<BoundaryManifold, CliError> {
    let n = cfg.n.unwrap_or(2);
    let b = match cfg.geometry.as_ref().ok_or_else(|| config("no geometry given"))? {
        GeometrySpec::Sphere { radius } => BoundaryManifold::sphere(*radius, cfg.m.unwrap_or(2)),
        GeometrySpec::Circle { radius, samples } => BoundaryManifold::circle(*radius, n, *samples),
        GeometrySpec::Ellipse { a, b, samples } => BoundaryManifold::ellipse(*a, *b, n, *samples),
        GeometrySpec::Curve { path, stencil } => boundary::read_boundary(path, *stencil),
    };
    let b = b.map_err(config)?;
    if b.n() != n {
        return Err(config(format!("boundary lives in R^{} but n = {n}", b.n())));
    }
    Ok(b)
}

fn read_grid(path: &Path, len: usize) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let last = line.split(',').next_back().unwrap_or(line).trim();
        out.push(last.parse::<f64>().map_err(|_| config(format!("{}:{}: `{last}` is not a number", path.display(), i + 1)))?);
    }
    if out.len() != len && out.len() != 1 {
        return Err(config(format!("{}: expected {len} Neumann values, found {}", path.display(), out.len())));
    }
    Ok(out)
}

fn sphere_radius(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.geometry {
        Some(GeometrySpec::Sphere { radius }) => Ok(radius),
        _ => Err(config("hemisphere data needs a sphere boundary")),
    }
}

fn neumann_field(cfg: &RunConfig, b: &BoundaryManifold) -> Result<NormalField, CliError> {
    let codim = b.codim();
    let scalar = |c: f64| -> Result<NormalField, CliError> {
        if codim != 1 {
            return Err(config("a scalar Neumann datum needs a codimension-1 boundary (n = 2 for curves)"));
        }
        Ok(NormalField::scalar(c))
    };
    match cfg.neumann.as_ref().unwrap_or(&NeumannSource::Zero) {
        NeumannSource::Zero => Ok(NormalField::zero(b)),
        NeumannSource::Constant(c) => scalar(*c),
        NeumannSource::Hemisphere => scalar(hemisphere_neumann(sphere_radius(cfg)?, cfg.m.unwrap_or(2))),
        NeumannSource::File(p) => {
            if codim != 1 {
                return Err(config("file Neumann data needs a codimension-1 boundary"));
            }
            let v = read_grid(p, b.grid_len().unwrap_or(1))?;
            Ok(NormalField { components: vec![if v.len() == 1 { Coefficient::Scalar(v[0]) } else { Coefficient::Grid(v) }] })
        }
        NeumannSource::SolverFit => Err(config("solver-fit Neumann data is only available with --family")),
    }
}

fn solve(cfg: &RunConfig) -> Result<ProfileSolution, CliError> {
    let family = cfg.solver_family().ok_or_else(|| config("no --family given"))?;
    solver::solve_rotational(family, cfg.m.unwrap_or(2), &cfg.solver_options()).map_err(|e| match e {
        solver::SolverError::Nonexistence { .. } | solver::SolverError::InvalidParameters(_) => config(e),
        other => numerical(other),
    })
}

/// Graph expansions for the configured geometry: one per boundary
/// component (rotational families), or the single prescribed boundary.
fn expansions(cfg: &RunConfig) -> Result<(Vec<GraphExpansion>, Option<ProfileSolution>), CliError> {
    let (m, n, order) = (cfg.m.unwrap_or(2), cfg.n.unwrap_or(2), cfg.order.unwrap_or(6));
    if cfg.family.is_some() && cfg.geometry.is_none() {
        let p = solve(cfg)?;
        let grid = 64;
        let gs = (0..p.components()).map(|c| solver::component_expansion(&p, c, order, grid)).collect::<Result<Vec<_>, _>>();
        return Ok((gs.map_err(numerical)?, Some(p)));
    }
    let b = build_boundary(cfg)?;
    let nf = neumann_field(cfg, &b)?;
    let g = expand_minimal_graph(&b, m, n, &nf, order).map_err(numerical)?;
    Ok((vec![g], None))
}

fn cmd_expand(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (gs, _) = expansions(cfg)?;
    let comps: Vec<_> = gs.iter().map(|g| g.to_json()).collect();
    let report = if comps.len() == 1 { json!(comps[0]) } else { json!({ "components": comps }) };
    Ok(Outcome { report, csv: None, summary: vec![format!("expanded {} boundary component(s) to order {}", gs.len(), cfg.order.unwrap_or(0))], failure: None })
}

fn cmd_rv(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let method = cfg.method.unwrap_or_default();
    let m = cfg.m.unwrap_or(2);
    let (riesz, hadamard) = if cfg.family.is_some() && cfg.geometry.is_none() {
        let p = solve(cfg)?;
        let delta = cfg.delta.unwrap_or_else(|| renvol::default_delta(&p));
        let riesz = match method {
            MethodChoice::Hadamard => None,
            _ => Some(solver::profile_riesz(&p, delta, cfg.order.unwrap_or(m + 4)).map_err(numerical)?),
        };
        let hadamard = match method {
            MethodChoice::Riesz => None,
            _ => Some(renvol::hadamard_rv(|e| p.tail(e, 0.0), m, &renvol::default_ladder(m, p.length_scale())).map_err(numerical)?),
        };
        (riesz, hadamard)
    } else {
        let b = build_boundary(cfg)?;
        if !matches!(cfg.neumann, Some(NeumannSource::Hemisphere)) {
            return Err(config("the renormalized volume needs a global surface: use a sphere boundary with hemisphere Neumann data, or --family"));
        }
        let r = sphere_radius(cfg)?;
        let tail = HemisphereTail::new(r, m);
        let g = expand_minimal_graph(&b, m, m, &NormalField::scalar(hemisphere_neumann(r, m)), cfg.order.unwrap_or(m + 4)).map_err(numerical)?;
        let delta = cfg.delta.unwrap_or_else(|| renvol::default_delta(&tail));
        let riesz = match method {
            MethodChoice::Hadamard => None,
            _ => Some(renvol::riesz_rv(&g, &tail, delta).map_err(numerical)?),
        };
        let hadamard = match method {
            MethodChoice::Riesz => None,
            _ => Some(renvol::hadamard_rv(|e| tail.tail(e, 0.0), m, &renvol::default_ladder(m, tail.length_scale())).map_err(numerical)?),
        };
        (riesz, hadamard)
    };
    let mut summary = Vec::new();
    if let Some(r) = &riesz {
        summary.push(format!("Riesz    V = {:.12}", r.finite_part));
    }
    if let Some(h) = &hadamard {
        summary.push(format!("Hadamard V = {:.12}", h.finite_part));
    }
    let difference = match (&riesz, &hadamard) {
        (Some(r), Some(h)) => Some(r.finite_part - h.finite_part),
        _ => None,
    };
    let value = riesz.as_ref().or(hadamard.as_ref()).map(|r| r.finite_part);
    Ok(Outcome {
        report: json!({"renormalized_volume": value, "riesz": riesz, "hadamard": hadamard, "riesz_minus_hadamard": difference}),
        csv: None,
        summary,
        failure: None,
    })
}

fn cmd_vary(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.family.is_some() && cfg.geometry.is_none() {
        if cfg.m != Some(2) || cfg.family == Some(FamilyKind::Cap) {
            return Err(config("`vary --family` compares first variations of hemispheres and catenoids in H³ (m = n = 2)"));
        }
        let family = cfg.solver_family().ok_or_else(|| config("no --family given"))?;
        let step = cfg.param_step.unwrap_or(1e-3);
        let rows = checks::first_variation_table(&family, step).map_err(numerical)?;
        let tol = cfg.tolerances.unwrap_or_default().compare;
        let mut summary = vec![format!("{:<14} {:>12} {:>16} {:>16} {:>10}", "parameter", "value", "finite diff", "formula", "error")];
        let mut csv = b"parameter,value,finite_difference,closed_form,general,error\n".to_vec();
        for r in &rows {
            summary.push(format!("{:<14} {:>12.6} {:>16.9} {:>16.9} {:>10.2e}", r.parameter, r.value, r.finite_difference, r.closed_form, r.error));
            csv.extend(format!("{},{},{},{},{},{}\n", r.parameter, r.value, r.finite_difference, r.closed_form, r.general, r.error).bytes());
        }
        let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        let failure = (worst >= tol).then(|| format!("first-variation error {worst:.2e} exceeds {tol:.1e}"));
        return Ok(Outcome { report: json!({"step": step, "tolerance": tol, "comparison": rows, "max_error": worst}), csv: Some(csv), summary, failure });
    }
    // prescribed boundary: Killing (translation) flows, whose second
    // variation must vanish
    let (gs, _) = expansions(cfg)?;
    let g = &gs[0];
    if !g.codim1() {
        return Err(config("`vary` needs a hypersurface (codimension 1)"));
    }
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for k in 0..g.n {
        let r = killing_check(g, Some(k)).map_err(numerical)?;
        summary.push(format!("translation e{}: D²V general {:.3e}, closed form {:?}", k + 1, r.second, r.closed_form.map(|c| c.total)));
        reports.push(r);
    }
    let all = killing_check(g, None).map_err(numerical)?;
    Ok(Outcome { report: json!({"translations": reports, "summed": all}), csv: None, summary, failure: None })
}

fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = solve(cfg)?;
    let mut csv = Vec::new();
    p.write_csv(&mut csv).map_err(numerical)?;
    let summary = p
        .coefficients
        .iter()
        .map(|c| format!("component {} (R = {:.6}): u = {:?}", c.component, c.radius, c.u))
        .collect();
    Ok(Outcome { report: serde_json::to_value(&p).map_err(numerical)?, csv: Some(csv), summary, failure: None })
}

fn cmd_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suite = cfg.suite.clone().unwrap_or_else(|| "all".into());
    let ids = checks::suite_ids(&suite).ok_or_else(|| config(format!("unknown suite `{suite}`")))?;
    let results = checks::run_suite(ids, cfg.seed.unwrap_or(7));
    let failed: Vec<usize> = results.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    let summary = results.iter().map(|c| c.line()).collect();
    let failure = (!failed.is_empty()).then(|| format!("criteria {failed:?} failed"));
    Ok(Outcome { report: json!({"suite": suite, "passed": failed.is_empty(), "criteria": results}), csv: None, summary, failure })
}

/// Execute a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut out = match cfg.command {
        Some(CommandKind::Expand) => cmd_expand(cfg),
        Some(CommandKind::Rv) => cmd_rv(cfg),
        Some(CommandKind::Vary) => cmd_vary(cfg),
        Some(CommandKind::Solve) => cmd_solve(cfg),
        Some(CommandKind::Check) => cmd_check(cfg),
        None => Err(config("no command given")),
    }?;
    out.report = json!({"config": cfg, "result": out.report});
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| numerical(format!("{}: {e}", path.display())))
}

/// Parse, run and report; returns the process exit code.
pub fn main_with(cli: Cli) -> ExitCode {
    let result = configure(cli).and_then(|cfg| {
        let out = execute(&cfg)?;
        let mut text = serde_json::to_string_pretty(&out.report).map_err(numerical)?;
        text.push('\n');
        match &cfg.output {
            Some(p) => write_file(p, text.as_bytes())?,
            None => print!("{text}"),
        }
        if let (Some(p), Some(csv)) = (&cfg.csv, &out.csv) {
            write_file(p, csv)?;
        }
        for line in &out.summary {
            eprintln!("{line}");
        }
        match out.failure {
            Some(f) => Err(CliError::Assertion(f)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut v = vec!["hyperrv"];
        v.extend_from_slice(args);
        configure(Cli::try_parse_from(v).map_err(config)?)
    }

    #[test]
    fn sphere_flag_and_defaults() {
        let c = parse(&["rv", "--sphere", "R=1", "--n", "2", "--m", "2"]).unwrap();
        assert_eq!(c.geometry, Some(GeometrySpec::Sphere { radius: 1.0 }));
        assert_eq!(c.order, Some(6));
        assert_eq!(c.neumann, Some(NeumannSource::Hemisphere));
    }

    #[test]
    fn dimension_and_order_validation() {
        assert!(matches!(parse(&["expand", "--sphere", "R=1", "--n", "3", "--m", "2"]), Err(CliError::Config(_))));
        assert!(matches!(parse(&["expand", "--circle", "R=1", "--order", "3"]), Err(CliError::Config(_))));
        assert!(matches!(parse(&["expand", "--ellipse", "b=1"]), Err(CliError::Config(_))));
        assert!(matches!(parse(&["check", "--suite", "nope"]), Err(CliError::Config(_))));
    }

    #[test]
    fn config_errors_are_line_precise() {
        let text = "{\n  \"m\": 2,\n  \"ordr\": 5\n}";
        let e = RunConfig::from_json(text).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = RunConfig::from_json("{\n\"neumann\": \"sideways\",\n\"m\": 2\n}").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("sideways"), "{e}");
    }

    #[test]
    fn flags_override_file() {
        let base = RunConfig::from_json(r#"{"m": 3, "order": 9, "geometry": {"kind": "sphere", "radius": 2.0}}"#).unwrap();
        let over = RunConfig { command: Some(CommandKind::Expand), order: Some(8), ..Default::default() };
        let c = base.merge(over).resolve().unwrap();
        assert_eq!((c.m, c.n, c.order), (Some(3), Some(3), Some(8)));
    }

    #[test]
    fn neumann_round_trip() {
        for s in ["zero", "hemisphere", "solver-fit", "file:u3.csv", "0.25"] {
            let v: NeumannSource = s.parse().unwrap();
            assert_eq!(String::from(v), s);
        }
    }

    #[test]
    fn rv_reports_minus_two_pi() {
        let c = parse(&["rv", "--sphere", "R=1", "--n", "2", "--m", "2"]).unwrap();
        let out = execute(&c).unwrap();
        let v = out.report["result"]["renormalized_volume"].as_f64().unwrap();
        assert!((v + 2.0 * std::f64::consts::PI).abs() < 1e-6);
        assert_eq!(out.report["config"]["command"], "rv");
    }

    #[test]
    fn reports_are_deterministic() {
        let c = parse(&["expand", "--ellipse", "a=2,b=1,samples=32"]).unwrap();
        let a = serde_json::to_string(&execute(&c).unwrap().report).unwrap();
        let b = serde_json::to_string(&execute(&c).unwrap().report).unwrap();
        assert_eq!(a, b);
    }
}
