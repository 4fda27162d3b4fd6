//! Rotationally symmetric minimal hypersurfaces of the half-space model and
//! the global data (tails, free coefficients) their boundary expansions need.
//!
//! A profile `(r, x)` of an `m`-dimensional hypersurface of revolution is
//! minimal iff, in arclength, `r' = cos φ`, `x' = sin φ`,
//! `φ' = −(m−1) sin φ / r − m cos φ / x`. Near the boundary the profile is a
//! graph `r(x)` with `r'' = (1 + r'²)((m−1)/r + m r'/x)`, integrated toward
//! `x → 0` where the homogeneous `x^m` mode decays. Dilations are isometries,
//! so `r^{m−1}(r cos φ + x sin φ)/x^m` is conserved; its drift is the solver
//! residual.
//!
//! Catenoids spanning concentric spheres are invariant under inversion in the
//! unit sphere once normalized to `R₁R₂ = 1`; only the inner half is solved,
//! by shooting from the fixed unit hemisphere.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{unit_sphere_area, BoundaryManifold, NormalField};
use crate::expansion::{expand_minimal_graph, ExpansionError, GraphExpansion};
use crate::ode::{self, OdeError, OdeOptions, Solution};
use crate::phg::Coefficient;
use crate::quad::{self, QuadError};
use crate::renvol::{self, FinitePartResult, RenvolError, TailProvider};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Renvol(#[from] RenvolError),
    #[error("no catenoid spans radii ratio {ratio:.6} (maximal ratio {max_ratio:.6})")]
    Nonexistence { ratio: f64, max_ratio: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("profile left the graphical regime: {0}")]
    NotGraphical(String),
    #[error("cutoff {delta} outside the resolved range [{lo}, {hi}]")]
    DeltaOutOfRange { delta: f64, lo: f64, hi: f64 },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("Newton iteration failed to converge: {0}")]
    Newton(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Surface family and its parameters (physical lengths).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Geodesic hemisphere of dimension `m` in `H^{m+1}`.
    Hemisphere { radius: f64 },
    /// Catenoid spanning concentric spheres of radii `inner < outer`.
    Catenoid { inner: f64, outer: f64 },
    /// Totally geodesic `m`-dimensional cap in `H^{n+1}`.
    Cap { radius: f64, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Lowest sample height relative to the boundary radius.
    pub floor: f64,
    /// Fitting window relative to the boundary radius; by default
    /// `[w/100, w]` with `w = 10^{−4/m}`, so that `x^{m+1}` stays resolved.
    pub window: Option<(f64, f64)>,
    pub points_per_decade: usize,
    pub fit_points: usize,
    /// Where the arclength phase hands over to the graph phase: `sin φ < −switch`.
    pub switch: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-13,
            atol: 1e-15,
            floor: 1e-5,
            window: None,
            points_per_decade: 20,
            fit_points: 40,
            switch: 0.98,
        }
    }
}

/// One profile sample `(x, r)` on boundary component `component`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub component: usize,
    pub x: f64,
    pub r: f64,
}

/// Fitted boundary coefficients of `u(x) = r(x) − R` on one component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentFit {
    pub component: usize,
    /// Fitted boundary radius `R` (the constant term).
    pub radius: f64,
    /// `(k, u_k)` for the reported orders `2, 4, …, m+1`.
    pub u: Vec<(usize, f64)>,
    /// Standard errors matching `u`.
    pub std_err: Vec<f64>,
    /// Coefficient of `x^{m+1} log x` (odd `m`).
    pub log: Option<f64>,
    pub u2_expected: f64,
    pub condition_number: f64,
    pub fit_rms: f64,
    /// `max |u| / x²` over the mesh.
    pub quadratic_bound: f64,
    pub window: (f64, f64),
}

impl ComponentFit {
    pub fn coefficient(&self, k: usize) -> Option<f64> {
        self.u.iter().find(|(j, _)| *j == k).map(|(_, v)| *v)
    }
}

/// Inner half of a profile: optional arclength phase then graph phase.
#[derive(Debug, Clone)]
struct Branch {
    arc: Option<Solution>,
    arc_len: f64,
    graph: Solution,
    x_sw: f64,
    x_end: f64,
}

impl Branch {
    /// `(r, r_x)` on the graph phase.
    fn graph_at(&self, x: f64) -> (f64, f64) {
        let y = self.graph.eval(x.clamp(self.x_end, self.x_sw));
        (y[0], y[1])
    }

    fn radius_at_boundary(&self) -> f64 {
        let (r, _) = self.graph_at(self.x_end);
        r + self.x_end * self.x_end / (2.0 * r)
    }
}

/// Solved profile with its samples, fits and residual.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileSolution {
    pub family: Family,
    pub m: usize,
    /// Physical length of one normalized unit.
    pub scale: f64,
    pub boundary_radii: Vec<f64>,
    pub samples: Vec<ProfileSample>,
    /// Conserved dilation flux (normalized units).
    pub flux: f64,
    /// Maximal drift of the flux identity at the samples.
    pub residual: f64,
    pub coefficients: Vec<ComponentFit>,
    /// Shooting angle on the unit hemisphere (catenoids).
    pub start_angle: Option<f64>,
    pub options: SolverOptions,
    #[serde(skip)]
    branch: Branch,
    #[serde(skip)]
    inner_radius: f64,
}

fn ode_opts(o: &SolverOptions) -> OdeOptions {
    OdeOptions { rtol: o.rtol, atol: o.atol, h0: 1e-6, h_max: 0.05, max_steps: 400_000 }
}

fn arc_rhs(m: f64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |_, y| {
        let (r, x, phi) = (y[0], y[1], y[2]);
        vec![phi.cos(), phi.sin(), -(m - 1.0) * phi.sin() / r - m * phi.cos() / x]
    }
}

fn graph_rhs(m: f64) -> impl Fn(f64, &[f64]) -> Vec<f64> {
    move |x, y| {
        let (r, rx) = (y[0], y[1]);
        vec![rx, (1.0 + rx * rx) * ((m - 1.0) / r + m * rx / x)]
    }
}

/// Shoot from `(r, x, φ)` in arclength until the profile is steep, then
/// follow the graph down to `x_end`.
fn shoot(m: usize, start: [f64; 3], opts: &SolverOptions, x_end_rel: f64) -> Result<Branch> {
    let mf = m as f64;
    let oo = ode_opts(opts);
    let (arc, arc_len, state) = if start[2].sin() > -opts.switch {
        let sol = ode::integrate(
            arc_rhs(mf),
            0.0,
            &start,
            20.0,
            &oo,
            Some(|_: f64, y: &[f64]| (y[2].sin() + opts.switch).min(y[0]).min(y[1])),
        )?;
        if !sol.event || sol.y_end[0] <= 0.0 || sol.y_end[1] <= 0.0 {
            return Err(SolverError::NotGraphical("profile did not reach the boundary steeply".into()));
        }
        let y = sol.y_end.clone();
        let len = sol.t_end;
        (Some(sol), len, y)
    } else {
        (None, 0.0, start.to_vec())
    };
    let (r0, x0, phi) = (state[0], state[1], state[2]);
    let rx0 = phi.cos() / phi.sin();
    let x_end = x_end_rel * r0;
    let graph = ode::integrate(
        graph_rhs(mf),
        x0,
        &[r0, rx0],
        x_end,
        &oo,
        Some(|_: f64, y: &[f64]| y[0].min(1e3 - y[1].abs())),
    )?;
    if graph.event {
        return Err(SolverError::NotGraphical("graph phase degenerated".into()));
    }
    Ok(Branch { arc, arc_len, graph, x_sw: x0, x_end })
}

fn hemisphere_branch(m: usize, opts: &SolverOptions) -> Result<Branch> {
    // apex of the unit hemisphere; the start error is O(σ³)
    let s0 = 1e-5;
    shoot(m, [s0, 1.0 - 0.5 * s0 * s0, -s0], opts, 1e-7)
}

fn catenoid_branch(m: usize, alpha: f64, opts: &SolverOptions) -> Result<Branch> {
    shoot(m, [alpha.cos(), alpha.sin(), alpha + PI], opts, 1e-7)
}

fn catenoid_inner_radius(m: usize, alpha: f64, opts: &SolverOptions) -> Result<f64> {
    Ok(catenoid_branch(m, alpha, opts)?.radius_at_boundary())
}

/// Smallest normalized inner radius reachable, with its shooting angle.
pub fn catenoid_threshold(m: usize, opts: &SolverOptions) -> Result<(f64, f64)> {
    let f = |a: f64| catenoid_inner_radius(m, a, opts).unwrap_or(f64::INFINITY);
    let grid: Vec<f64> = (1..=60).map(|i| 1.55 * i as f64 / 60.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&a| f(a)).collect();
    let imin = (0..vals.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let (mut a, mut b) = (grid[imin.saturating_sub(1)], grid[(imin + 1).min(grid.len() - 1)]);
    // golden-section refinement
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let am = 0.5 * (a + b);
    Ok((am, f(am)))
}

/// Profile `(r, x)` of boundary component `comp` at graph parameter `p`.
fn component_point(branch: &Branch, comp: usize, p: f64) -> (f64, f64) {
    let (r, _) = branch.graph_at(p);
    if comp == 0 {
        (r, p)
    } else {
        let d = r * r + p * p;
        (r / d, p / d)
    }
}

/// Graph parameter whose image on component `comp` has height `xc`.
fn component_param(branch: &Branch, comp: usize, xc: f64, r_inner: f64) -> Result<f64> {
    if comp == 0 {
        return Ok(xc);
    }
    let mut p = xc * r_inner * r_inner;
    for _ in 0..60 {
        let (r, rx) = branch.graph_at(p);
        let d = r * r + p * p;
        let g = p / d - xc;
        let dg = (d - p * (2.0 * r * rx + 2.0 * p)) / (d * d);
        let step = g / dg;
        p -= step;
        if step.abs() <= 1e-16 * p.abs() {
            break;
        }
    }
    if !(p >= branch.x_end && p <= branch.x_sw) {
        return Err(SolverError::DeltaOutOfRange { delta: xc, lo: branch.x_end, hi: branch.x_sw });
    }
    Ok(p)
}

/// Euclidean boundary-sphere measure times arclength per unit height of
/// component `comp` (the factor multiplying `x^{−m}` in the area density).
fn component_density(branch: &Branch, comp: usize, p: f64, m: usize) -> f64 {
    let (r, rx) = branch.graph_at(p);
    let ds = (1.0 + rx * rx).sqrt();
    let s = unit_sphere_area(m - 1);
    if comp == 0 {
        s * r.powi(m as i32 - 1) * ds
    } else {
        // inversion scales lengths by 1/|P|²
        let d = r * r + p * p;
        let dxo = (d - p * (2.0 * r * rx + 2.0 * p)) / (d * d);
        s * (r / d).powi(m as i32 - 1) * ds / d / dxo
    }
}

impl ProfileSolution {
    pub fn components(&self) -> usize {
        self.boundary_radii.len()
    }

    /// Normalized radius of component `comp`.
    fn norm_radius(&self, comp: usize) -> f64 {
        if comp == 0 {
            self.inner_radius
        } else {
            1.0 / self.inner_radius
        }
    }

    /// Physical `r` on component `comp` at physical height `x`.
    pub fn radius_at(&self, comp: usize, x: f64) -> Result<f64> {
        let xc = x / self.scale;
        let p = component_param(&self.branch, comp, xc, self.inner_radius)?;
        let (r, _) = component_point(&self.branch, comp, p);
        Ok(self.scale * r)
    }

    /// `∫_γ q̄ dA_γ` of component `comp` at physical height `x`.
    pub fn component_boundary_density(&self, comp: usize, x: f64) -> Result<f64> {
        let xc = x / self.scale;
        let p = component_param(&self.branch, comp, xc, self.inner_radius)?;
        // component 1's density is already per unit of its own height
        let per_height = component_density(&self.branch, comp, p, self.m);
        Ok(per_height * self.scale.powi(self.m as i32 - 1))
    }

    /// `∫_{x ≥ δ} x^z dA` over the solved surface, with its error estimate.
    pub fn tail_volume(&self, delta: f64, z: f64) -> Result<(f64, f64)> {
        let b = &self.branch;
        let dn = delta / self.scale;
        let lo = b.x_end * 10.0;
        if !(dn > lo) {
            return Err(SolverError::DeltaOutOfRange { delta, lo: lo * self.scale, hi: f64::INFINITY });
        }
        let m = self.m;
        let s_area = unit_sphere_area(m - 1);
        let lam_z = self.scale.powf(z);
        let mut total = 0.0;
        let mut err = 0.0;
        let halves: &[bool] = if self.components() == 2 { &[false, true] } else { &[false] };
        for &inverted in halves {
            let height = |r: f64, x: f64| if inverted { x / (r * r + x * x) } else { x };
            // graph phase, parameter p ∈ [x_end, x_sw]
            {
                let dens = |p: f64| {
                    let (r, rx) = b.graph_at(p);
                    let h = height(r, p);
                    s_area * r.powi(m as i32 - 1) * (1.0 + rx * rx).sqrt() * p.powi(-(m as i32)) * (lam_z * h.powf(z))
                };
                let cond = |p: f64| {
                    let (r, _) = b.graph_at(p);
                    height(r, p) - dn
                };
                let (v, e) = integrate_where(dens, cond, b.x_end, b.x_sw, true)?;
                total += v;
                err += e;
            }
            if let Some(arc) = &b.arc {
                let dens = |s: f64| {
                    let y = arc.eval(s);
                    let h = height(y[0], y[1]);
                    s_area * y[0].powi(m as i32 - 1) * y[1].powi(-(m as i32)) * (lam_z * h.powf(z))
                };
                let cond = |s: f64| {
                    let y = arc.eval(s);
                    height(y[0], y[1]) - dn
                };
                let (v, e) = integrate_where(dens, cond, 0.0, b.arc_len, false)?;
                total += v;
                err += e;
            }
        }
        if self.components() == 1 && matches!(self.family, Family::Hemisphere { .. } | Family::Cap { .. }) {
            // the apex cap below the arclength start is a disc of radius σ₀
            let s0: f64 = 1e-5;
            if dn < 1.0 - s0 {
                total += s_area * s0.powi(m as i32) / m as f64 * lam_z;
            }
        }
        Ok((total, err))
    }

    /// CSV export of the samples (`component,x,r`).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["component", "x", "r"])?;
        for s in &self.samples {
            wr.write_record(&[s.component.to_string(), format!("{:.17e}", s.x), format!("{:.17e}", s.r)])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `∫_a^b f` restricted to `{cond ≥ 0}`; breakpoints by sampling plus bisection.
fn integrate_where(
    f: impl Fn(f64) -> f64,
    cond: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    geometric: bool,
) -> Result<(f64, f64)> {
    let n = 400;
    let at = |i: usize| {
        let t = i as f64 / n as f64;
        if geometric {
            a * (b / a).powf(t)
        } else {
            a + (b - a) * t
        }
    };
    let mut cuts = vec![a];
    let mut prev = cond(a);
    for i in 1..=n {
        let (t0, t1) = (at(i - 1), at(i));
        let c1 = cond(t1);
        if (prev >= 0.0) != (c1 >= 0.0) {
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (cond(mid) >= 0.0) == (prev >= 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = c1;
    }
    cuts.push(b);
    let (mut v, mut e) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if w[1] > w[0] && cond(mid) >= 0.0 {
            let q = if geometric {
                quad::integrate_graded(&f, w[0], w[1], 1e-12, 1e-14)?
            } else {
                quad::integrate(&f, w[0], w[1], 1e-12, 1e-14)?
            };
            v += q.value;
            e += q.error;
        }
    }
    Ok((v, e))
}

/// Solve the profile of `family` for dimension `m`.
pub fn solve_rotational(family: Family, m: usize, opts: &SolverOptions) -> Result<ProfileSolution> {
    if m < 2 {
        return Err(SolverError::InvalidParameters(format!("dimension m = {m} must be at least 2")));
    }
    let (branch, scale, start_angle, comps) = match family {
        Family::Hemisphere { radius } | Family::Cap { radius, .. } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(SolverError::InvalidParameters(format!("radius {radius}")));
            }
            if let Family::Cap { n, .. } = family {
                if n < m {
                    return Err(SolverError::InvalidParameters(format!("cap of dimension {m} in H^{}", n + 1)));
                }
            }
            (hemisphere_branch(m, opts)?, radius, None, 1)
        }
        Family::Catenoid { inner, outer } => {
            if !(inner > 0.0 && outer > inner && outer.is_finite()) {
                return Err(SolverError::InvalidParameters(format!("radii {inner}, {outer}")));
            }
            let target = (inner / outer).sqrt();
            let (a_min, r_min) = catenoid_threshold(m, opts)?;
            if target < r_min {
                return Err(SolverError::Nonexistence { ratio: outer / inner, max_ratio: 1.0 / (r_min * r_min) });
            }
            // stable branch: R₁(α) decreases from 1 at α = 0 to its minimum
            let f = |a: f64| catenoid_inner_radius(m, a, opts).map(|r| r - target);
            let (mut lo, mut hi) = (1e-6, a_min);
            let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
            if flo < 0.0 {
                return Err(SolverError::InvalidParameters("radii too close to resolve".into()));
            }
            let mut side = 0;
            for _ in 0..200 {
                let c = if fhi != flo { (lo * fhi - hi * flo) / (fhi - flo) } else { 0.5 * (lo + hi) };
                let fc = f(c)?;
                if fc.abs() < 1e-15 || (hi - lo).abs() < 1e-15 {
                    lo = c;
                    hi = c;
                    break;
                }
                if (fc > 0.0) == (flo > 0.0) {
                    lo = c;
                    flo = fc;
                    if side == 1 {
                        fhi *= 0.5;
                    }
                    side = 1;
                } else {
                    hi = c;
                    fhi = fc;
                    if side == -1 {
                        flo *= 0.5;
                    }
                    side = -1;
                }
            }
            let alpha = 0.5 * (lo + hi);
            (catenoid_branch(m, alpha, opts)?, (inner * outer).sqrt(), Some(alpha), 2)
        }
    };
    let inner_radius = branch.radius_at_boundary();
    let mut sol = ProfileSolution {
        family,
        m,
        scale,
        boundary_radii: Vec::new(),
        samples: Vec::new(),
        flux: 0.0,
        residual: 0.0,
        coefficients: Vec::new(),
        start_angle,
        options: *opts,
        branch,
        inner_radius,
    };
    sol.boundary_radii = (0..comps).map(|c| sol.norm_radius(c) * scale).collect();
    sol.sample_profile()?;
    sol.coefficients = (0..comps).map(|c| extract_component(&sol, c)).collect::<Result<_>>()?;
    Ok(sol)
}

impl ProfileSolution {
    fn sample_profile(&mut self) -> Result<()> {
        let b = &self.branch;
        let m = self.m as i32;
        let floor = self.options.floor.max(2.0 * b.x_end / self.inner_radius) * self.inner_radius;
        let decades = (b.x_sw / floor).log10();
        let count = (decades * self.options.points_per_decade as f64).ceil().max(2.0) as usize;
        let params: Vec<f64> = (0..=count).map(|i| floor * (b.x_sw / floor).powf(i as f64 / count as f64)).collect();
        // flux from the graph phase, oriented toward increasing x
        let flux_at = |r: f64, x: f64, rx: f64| r.powi(m - 1) * (r * rx + x) / (1.0 + rx * rx).sqrt();
        let (r_sw, rx_sw) = b.graph_at(b.x_sw);
        let flux = flux_at(r_sw, b.x_sw, rx_sw) / b.x_sw.powi(m);
        let mut residual: f64 = 0.0;
        let mut samples = Vec::new();
        for &p in &params {
            let (r, rx) = b.graph_at(p);
            residual = residual.max((flux_at(r, p, rx) - flux * p.powi(m)).abs());
            for c in 0..self.boundary_radii.len() {
                let (rc, xc) = component_point(b, c, p);
                samples.push(ProfileSample { component: c, x: xc * self.scale, r: rc * self.scale });
            }
        }
        if let Some(arc) = &b.arc {
            for i in 0..=50 {
                let s = b.arc_len * i as f64 / 50.0;
                let y = arc.eval(s);
                let g = -y[0].powi(m - 1) * (y[0] * y[2].cos() + y[1] * y[2].sin());
                residual = residual.max((g - flux * y[1].powi(m)).abs());
                for c in 0..self.boundary_radii.len() {
                    let (rc, xc) = if c == 0 { (y[0], y[1]) } else { let d = y[0] * y[0] + y[1] * y[1]; (y[0] / d, y[1] / d) };
                    samples.push(ProfileSample { component: c, x: xc * self.scale, r: rc * self.scale });
                }
            }
        }
        self.flux = flux;
        self.residual = residual;
        self.samples = samples;
        Ok(())
    }
}

/// Default relative fitting window for dimension `m`.
pub fn default_window(m: usize) -> (f64, f64) {
    let hi = 10f64.powf(-4.0 / m as f64);
    (hi / 100.0, hi)
}

/// Basis exponents `(k, log)` for component fits: the constant, the
/// reported orders `2, 4, …, m+1` (with `x^{m+1} log x` for odd `m`) and
/// nuisance orders absorbing truncation bias.
fn fit_basis(m: usize) -> (Vec<(usize, bool)>, usize) {
    let mut basis = vec![(0, false)];
    let mut k = 2;
    while k <= m {
        basis.push((k, false));
        k += 2;
    }
    basis.push((m + 1, false));
    if m % 2 == 1 {
        basis.push((m + 1, true));
    }
    let reported = basis.len();
    for j in m + 2..=m + 5 {
        basis.push((j, false));
        if m % 2 == 1 && j >= m + 3 && (j - m) % 2 == 1 {
            basis.push((j, true));
        }
    }
    (basis, reported)
}

fn extract_component(p: &ProfileSolution, comp: usize) -> Result<ComponentFit> {
    let m = p.m;
    let rn = p.norm_radius(comp);
    let (w_lo, w_hi) = p.options.window.unwrap_or_else(|| default_window(m));
    let (w_lo, w_hi) = (w_lo * rn, w_hi * rn);
    let npts = p.options.fit_points.max(12);
    let xs: Vec<f64> = (0..npts).map(|i| w_lo * (w_hi / w_lo).powf(i as f64 / (npts - 1) as f64)).collect();
    let mut ys = Vec::with_capacity(npts);
    for &x in &xs {
        let q = component_param(&p.branch, comp, x, p.inner_radius)?;
        ys.push(component_point(&p.branch, comp, q).0);
    }
    let (basis, reported) = fit_basis(m);
    let t_of = |x: f64| x / w_hi;
    let mut a = DMatrix::<f64>::zeros(npts, basis.len());
    for (i, &x) in xs.iter().enumerate() {
        let t = t_of(x);
        for (j, &(k, l)) in basis.iter().enumerate() {
            a[(i, j)] = t.powi(k as i32) * if l { t.ln() } else { 1.0 };
        }
    }
    let y = DVector::from_vec(ys.clone());
    let svd = a.clone().svd(true, true);
    let cond = svd.singular_values.max() / svd.singular_values.min();
    if !(cond < 1e12) {
        return Err(SolverError::Fit(format!("condition number {cond:.3e}")));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| SolverError::Fit(e.to_string()))?;
    let resid = &a * &coef - &y;
    let dof = (npts - basis.len()).max(1) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let vt = svd.v_t.as_ref().ok_or_else(|| SolverError::Fit("missing V".into()))?;
    let var = |j: usize| (0..basis.len()).map(|i| (vt[(i, j)] / svd.singular_values[i]).powi(2)).sum::<f64>() * sigma2;
    // undo t = x / w_hi and the log shift, then the normalization
    let lw = w_hi.ln();
    let scale = p.scale;
    let phys = |k: usize, v: f64| v * scale.powi(1 - k as i32);
    let mut u = Vec::new();
    let mut std_err = Vec::new();
    let mut log = None;
    let mut radius = 0.0;
    for (j, &(k, l)) in basis.iter().enumerate().take(reported) {
        let wk = w_hi.powi(k as i32);
        if k == 0 {
            radius = coef[j] * scale;
        } else if l {
            log = Some(phys(k, coef[j] / wk));
        } else {
            let mut v = coef[j];
            if let Some(jl) = basis.iter().position(|&b| b == (k, true)) {
                v -= coef[jl] * lw;
            }
            u.push((k, phys(k, v / wk)));
            std_err.push(phys(k, var(j).sqrt() / wk));
        }
    }
    let quadratic_bound = p
        .samples
        .iter()
        .filter(|s| s.component == comp && s.x < 0.5 * radius)
        .map(|s| (s.r - radius).abs() / (s.x * s.x))
        .fold(0.0, f64::max);
    Ok(ComponentFit {
        component: comp,
        radius,
        u,
        std_err,
        log,
        u2_expected: -1.0 / (2.0 * radius),
        condition_number: cond,
        fit_rms: (sigma2).sqrt() * scale,
        quadratic_bound,
        window: (w_lo * scale, w_hi * scale),
    })
}

/// Coefficient fits of a solved profile (already stored on the solution).
pub fn extract_coefficients(p: &ProfileSolution) -> &[ComponentFit] {
    &p.coefficients
}

impl TailProvider for ProfileSolution {
    fn tail(&self, delta: f64, z: f64) -> renvol::Result<f64> {
        self.tail_volume(delta, z).map(|(v, _)| v).map_err(|e| RenvolError::Tail(e.to_string()))
    }

    fn tail_error(&self) -> f64 {
        1e-10
    }

    fn boundary_density(&self, x: f64) -> Option<f64> {
        (0..self.components()).map(|c| self.component_boundary_density(c, x).ok()).sum()
    }

    fn length_scale(&self) -> f64 {
        self.boundary_radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// One boundary component seen by the Riesz engine: the full tail is charged
/// to component 0 only.
struct ComponentTail<'a> {
    sol: &'a ProfileSolution,
    comp: usize,
}

impl TailProvider for ComponentTail<'_> {
    fn tail(&self, delta: f64, z: f64) -> renvol::Result<f64> {
        if self.comp == 0 {
            self.sol.tail(delta, z)
        } else {
            Ok(0.0)
        }
    }

    fn boundary_density(&self, x: f64) -> Option<f64> {
        self.sol.component_boundary_density(self.comp, x).ok()
    }
}

/// Boundary expansion of component `comp` seeded with the fitted free datum.
pub fn component_expansion(p: &ProfileSolution, comp: usize, order: usize, grid: usize) -> Result<GraphExpansion> {
    let fit = &p.coefficients[comp];
    let r = p.boundary_radii[comp];
    let m = p.m;
    let b = if m == 2 { BoundaryManifold::circle(r, 2, grid).map_err(ExpansionError::from)? } else { BoundaryManifold::sphere(r, m).map_err(ExpansionError::from)? };
    let datum = fit.coefficient(m + 1).unwrap_or(0.0);
    Ok(expand_minimal_graph(&b, m, m, &NormalField { components: vec![Coefficient::Scalar(datum)] }, order)?)
}

/// Riesz renormalized volume of a solved profile: per-component series
/// heads plus the solved tail.
pub fn profile_riesz(p: &ProfileSolution, delta: f64, order: usize) -> Result<FinitePartResult> {
    let mut total: Option<FinitePartResult> = None;
    for comp in 0..p.components() {
        let g = component_expansion(p, comp, order, 64)?;
        let tail = ComponentTail { sol: p, comp };
        let r = renvol::riesz_rv(&g, &tail, delta)?;
        total = Some(match total {
            None => r,
            Some(mut acc) => {
                acc.finite_part += r.finite_part;
                for (a, b) in acc.poles.iter_mut().zip(&r.poles) {
                    *a += b;
                }
                acc.log_pole += r.log_pole;
                acc.remainder = Some(acc.remainder.unwrap_or(0.0) + r.remainder.unwrap_or(0.0));
                acc
            }
        });
    }
    total.ok_or_else(|| SolverError::InvalidParameters("no boundary components".into()))
}

/// A catenoid between two unit circles at center distance `d`, obtained from
/// the concentric one by an inversion centered on the boundary plane.
#[derive(Debug, Clone, Serialize)]
pub struct CirclePair {
    pub separation: f64,
    /// Concentric radius ratio with the same inversive distance.
    pub ratio: f64,
    pub centers: [f64; 2],
    /// Sample angles `θ_j = 2πj/P` about each center.
    pub angles: Vec<f64>,
    /// `u₂(θ)` and `u₃(θ)` per circle (outward normals).
    pub u2: [Vec<f64>; 2],
    pub u3: [Vec<f64>; 2],
    pub window: (f64, f64),
    pub max_fit_rms: f64,
}

/// Concentric radius ratio for two unit circles at center distance `d > 2`.
pub fn ratio_for_separation(d: f64) -> f64 {
    (0.5 * (d * d - 2.0)).acosh().exp()
}

/// Re-graph a concentric catenoid (m = 2) over the symmetric pair of unit circles.
pub fn mobius_pair(p: &ProfileSolution, grid: usize) -> Result<CirclePair> {
    if p.m != 2 || p.components() != 2 {
        return Err(SolverError::InvalidParameters("circle pairs need a catenoid in H³".into()));
    }
    let b = &p.branch;
    let r1 = p.inner_radius;
    let k2 = (1.0 - r1 * r1) / r1;
    let inv_center = [1.0, 0.0];
    let centers = [1.0 - 1.0 / r1, 1.0 + r1];
    let mobius = |y: [f64; 3]| {
        let d = [y[0] - inv_center[0], y[1] - inv_center[1], y[2]];
        let n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        [inv_center[0] + k2 * d[0] / n2, inv_center[1] + k2 * d[1] / n2, k2 * d[2] / n2]
    };
    let w_hi = (0.5 * b.x_sw * k2 / (1.0 + r1).powi(2)).min(0.2);
    let w_lo = w_hi / 30.0;
    let npts = 24;
    let xs: Vec<f64> = (0..npts)
        .map(|i| {
            let c = (PI * (i as f64 + 0.5) / npts as f64).cos();
            0.5 * (w_lo + w_hi) + 0.5 * (w_hi - w_lo) * c
        })
        .collect();
    let angles: Vec<f64> = (0..grid).map(|j| 2.0 * PI * j as f64 / grid as f64).collect();
    let mut u2 = [vec![0.0; grid], vec![0.0; grid]];
    let mut u3 = [vec![0.0; grid], vec![0.0; grid]];
    let mut max_rms: f64 = 0.0;
    for comp in 0..2 {
        let c = centers[comp];
        for (j, &th) in angles.iter().enumerate() {
            let (ct, st) = (th.cos(), th.sin());
            // preimage of the boundary point (inversions are involutions)
            let q = mobius([c + ct, st, 0.0]);
            let mut psi = q[1].atan2(q[0]);
            let rc = if comp == 0 { r1 } else { 1.0 / r1 };
            let pc = |x: f64| if comp == 0 { x } else { x * r1 * r1 };
            let dist2 = (q[0] - 1.0).powi(2) + q[1] * q[1];
            let _ = rc;
            let mut ys = Vec::with_capacity(npts);
            for &xt in &xs {
                let mut prm = pc(xt * dist2 / k2);
                let eval = |psi: f64, prm: f64| {
                    let (r, x) = component_point(b, comp, prm);
                    let y = mobius([r * psi.cos(), r * psi.sin(), x]);
                    let (dx, dy) = (y[0] - c, y[1]);
                    ([y[2] - xt, -dx * st + dy * ct], dx * ct + dy * st)
                };
                let mut ok = false;
                for _ in 0..50 {
                    let (f0, _) = eval(psi, prm);
                    let hp = 1e-7;
                    let hq = 1e-7 * prm;
                    let (fa, _) = eval(psi + hp, prm);
                    let (fb, _) = eval(psi, prm + hq);
                    let j11 = (fa[0] - f0[0]) / hp;
                    let j21 = (fa[1] - f0[1]) / hp;
                    let j12 = (fb[0] - f0[0]) / hq;
                    let j22 = (fb[1] - f0[1]) / hq;
                    let det = j11 * j22 - j12 * j21;
                    let dpsi = (f0[0] * j22 - f0[1] * j12) / det;
                    let dprm = (j11 * f0[1] - j21 * f0[0]) / det;
                    psi -= dpsi;
                    prm -= dprm;
                    if !(prm > b.x_end && prm < b.x_sw) {
                        return Err(SolverError::Newton(format!("left the graph phase at θ = {th}")));
                    }
                    if dpsi.abs() < 1e-15 && dprm.abs() < 1e-15 * prm {
                        ok = true;
                        break;
                    }
                }
                let (res, radial) = eval(psi, prm);
                if !ok && res[0].abs().max(res[1].abs()) > 1e-13 {
                    return Err(SolverError::Newton(format!("residual {:.3e} at θ = {th}", res[0].abs().max(res[1].abs()))));
                }
                ys.push(radial - 1.0);
            }
            // u(x) = Σ_{k=2..9} a_k x^k on the Chebyshev window
            let ks: Vec<i32> = (2..=9).collect();
            let a = DMatrix::from_fn(npts, ks.len(), |i, jj| (xs[i] / w_hi).powi(ks[jj]));
            let yv = DVector::from_vec(ys);
            let svd = a.clone().svd(true, true);
            let coef = svd.solve(&yv, 0.0).map_err(|e| SolverError::Fit(e.to_string()))?;
            let rms = ((&a * &coef - &yv).norm_squared() / npts as f64).sqrt();
            max_rms = max_rms.max(rms);
            u2[comp][j] = coef[0] / w_hi.powi(2);
            u3[comp][j] = coef[1] / w_hi.powi(3);
        }
    }
    Ok(CirclePair {
        separation: r1 + 1.0 / r1,
        ratio: 1.0 / (r1 * r1),
        centers,
        angles,
        u2,
        u3,
        window: (w_lo, w_hi),
        max_fit_rms: max_rms,
    })
}
