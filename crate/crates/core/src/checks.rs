//! The acceptance suite: nine end-to-end checks of the library against exact
//! solutions, independent oracles and published values. Shared by the CLI
//! `check` command and the integration tests.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::{json, Value};

use crate::boundary::{BoundaryManifold, NormalField};
use crate::expansion::{apply_indicial, expand_minimal_graph, hemisphere_neumann, solve_indicial, GraphExpansion};
use crate::phg::{Coefficient, Parity, PhgSeries, PARITY_TOL};
use crate::renvol::{self, HemisphereTail, TailProvider};
use crate::solver::{self, Family, ProfileSolution, SolverOptions};
use crate::variation::{self, killing_check};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub details: Value,
    /// Wall-clock budget in seconds.
    pub budget_s: f64,
    /// Wall-clock time (excluded from reports to keep them reproducible).
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {} ({:.2} s / {:.0} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget_s,
            self.summary
        )
    }
}

/// Suites selectable from the command line.
pub const SUITES: &[(&str, &[usize])] = &[
    ("renvol", &[1, 4, 9]),
    ("expansion", &[2]),
    ("parity", &[3]),
    ("variation", &[5, 6, 7]),
    ("indicial", &[8]),
    ("all", &[1, 2, 3, 4, 5, 6, 7, 8, 9]),
];

pub fn suite_ids(name: &str) -> Option<&'static [usize]> {
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, ids)| *ids)
}

type Body = fn(u64) -> std::result::Result<(bool, String, Value), String>;

fn registry() -> [(usize, &'static str, f64, Body); 9] {
    [
        (1, "renormalized area of geodesic hemispheres", 3.0, hemisphere_area),
        (2, "u2 = H/(2(m-1)) in series and solver fits", 5.0, expansion_lemma),
        (3, "parity and log structure", 10.0, parity_suite),
        (4, "Hadamard = Riesz (m even), stable defect (m odd)", 10.0, hadamard_riesz),
        (5, "first variation along the catenoid separation family", 60.0, first_variation_oracle),
        (6, "second variation vanishes along translations", 30.0, killing_isometry),
        (7, "L2 identity for <u2, u_{n+1}>", 60.0, l2_identity),
        (8, "indicial operator round trip", 1.0, indicial_round_trip),
        (9, "special defining function invariance", 30.0, special_bdf),
    ]
}

/// Run one criterion by number (1–9).
pub fn run(id: usize, seed: u64) -> Option<Criterion> {
    let (id, name, budget, body) = registry().into_iter().find(|r| r.0 == id)?;
    let t = Instant::now();
    let (ok, summary, details) = match body(seed) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), Value::Null),
    };
    let elapsed = t.elapsed();
    let in_time = elapsed.as_secs_f64() <= budget;
    Some(Criterion {
        id,
        name: name.to_string(),
        passed: ok && in_time,
        summary: if in_time { summary } else { format!("{summary}; over the time budget") },
        details,
        budget_s: budget,
        elapsed,
    })
}

pub fn run_suite(ids: &[usize], seed: u64) -> Vec<Criterion> {
    ids.iter().filter_map(|&i| run(i, seed)).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn hemisphere_expansion(r: f64, m: usize, order: usize) -> std::result::Result<GraphExpansion, String> {
    let b = BoundaryManifold::sphere(r, m).map_err(err)?;
    expand_minimal_graph(&b, m, m, &NormalField::scalar(hemisphere_neumann(r, m)), order).map_err(err)
}

fn hemisphere_area(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut rows = Vec::new();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let t = Instant::now();
        let g = hemisphere_expansion(r, 2, 8)?;
        let tail = HemisphereTail::new(r, 2);
        let riesz = renvol::riesz_rv(&g, &tail, renvol::default_delta(&tail)).map_err(err)?.finite_part;
        let hadamard = renvol::hadamard_rv(|e| tail.tail(e, 0.0), 2, &renvol::default_ladder(2, r)).map_err(err)?.finite_part;
        let secs = t.elapsed().as_secs_f64();
        let dev = (riesz + 2.0 * PI).abs().max((hadamard + 2.0 * PI).abs()).max((riesz - hadamard).abs());
        worst = worst.max(dev);
        ok &= dev < 1e-6 && secs < 1.0;
        rows.push(json!({"radius": r, "riesz": riesz, "hadamard": hadamard, "max_deviation": dev}));
    }
    Ok((ok, format!("max |V + 2π|, |Riesz − Hadamard| = {worst:.2e} (tol 1e-6)"), json!(rows)))
}

fn expansion_lemma(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut series_err: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let b = BoundaryManifold::circle(r, 2, 64).map_err(err)?;
        let g = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 6).map_err(err)?;
        let h = b.mean_curvature();
        let u2 = g.u_coeff(0, 2).map_err(err)?;
        for i in 0..64 {
            series_err = series_err.max((u2.at(i) - h.components[0].at(i) / 2.0).abs());
        }
        for m in [2, 3, 4] {
            let g = hemisphere_expansion(r, m, m + 3)?;
            let u2 = g.u_coeff(0, 2).map_err(err)?.at(0);
            let hm = -(m as f64 - 1.0) / r;
            series_err = series_err.max((u2 - hm / (2.0 * (m as f64 - 1.0))).abs());
        }
    }
    let mut fit_err: f64 = 0.0;
    let opts = SolverOptions::default();
    for m in [2, 3, 4] {
        for r in [0.5, 2.0] {
            let p = solver::solve_rotational(Family::Hemisphere { radius: r }, m, &opts).map_err(err)?;
            let f = &p.coefficients[0];
            fit_err = fit_err.max((f.coefficient(2).unwrap_or(f64::NAN) - f.u2_expected).abs());
        }
    }
    let cat = solver::solve_rotational(Family::Catenoid { inner: 1.0, outer: 2.0 }, 2, &opts).map_err(err)?;
    for f in &cat.coefficients {
        fit_err = fit_err.max((f.coefficient(2).unwrap_or(f64::NAN) - f.u2_expected).abs());
    }
    let ok = series_err < 1e-8 && fit_err < 5e-4;
    Ok((
        ok,
        format!("series error {series_err:.2e} (tol 1e-8), solver-fit error {fit_err:.2e} (tol 5e-4)"),
        json!({"series_max_error": series_err, "fit_max_error": fit_err}),
    ))
}

fn parity_suite(seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut cases = Vec::new();
    let mut ok = true;
    for _ in 0..4 {
        let a = rng.gen_range(1.1..3.0);
        for n in [2, 3] {
            let b = BoundaryManifold::ellipse(a, 1.0, n, 128).map_err(err)?;
            let g = expand_minimal_graph(&b, 2, n, &NormalField::zero(&b), 6).map_err(err)?;
            let u_even = g.u.iter().all(|s| s.parity(PARITY_TOL).is_compatible_with(Parity::Even));
            let hsx_odd = g.metric.h_sx.parity(PARITY_TOL).is_compatible_with(Parity::Odd)
                && g.metric.h_sx.parity_through(6, PARITY_TOL) == Parity::Odd;
            let q_even = g.metric.q.parity(PARITY_TOL) == Parity::Even;
            let no_log = g.u.iter().all(|s| s.first_log_order(1e-12).is_none_or(|k| k > 3));
            ok &= u_even && hsx_odd && q_even && no_log;
            cases.push(json!({"a": a, "n": n, "F(u)": u_even, "F(h_sx)": hsx_odd, "F(q)": q_even, "log_free": no_log}));
        }
    }
    // m = 3 cap in H⁴: no log below order 4; the resonance slot sits at order 4
    let g = hemisphere_expansion(1.0, 3, 8)?;
    let first_log = g.u[0].first_log_order(1e-12);
    let big_u = g.log_coefficient.as_ref().map(|l| l.components[0].max_abs()).unwrap_or(f64::NAN);
    let fit = solver::solve_rotational(Family::Cap { radius: 1.0, n: 3 }, 3, &SolverOptions::default()).map_err(err)?;
    let fit_log = fit.coefficients[0].log.unwrap_or(f64::NAN);
    let cap_ok = first_log.is_none_or(|k| k >= 4) && big_u.is_finite() && fit_log.abs() < 1e-3;
    ok &= cap_ok;
    Ok((
        ok,
        format!(
            "{} ellipse cases; m=3 cap: first log order {:?}, resonant log coefficient U = {big_u:.1e} at order 4 (fit {fit_log:.1e})",
            cases.len(),
            first_log
        ),
        json!({"ellipses": cases, "cap": {"first_log_order": first_log, "U": big_u, "fitted_log": fit_log}}),
    ))
}

fn hadamard_riesz(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut ok = true;
    let mut even = Vec::new();
    for m in [2, 4] {
        let g = hemisphere_expansion(1.0, m, m + 4)?;
        let rep = renvol::check_equivalence(&g, &HemisphereTail::new(1.0, m), 1e-6).map_err(err)?;
        ok &= rep.riesz_minus_hadamard.abs() < 1e-6;
        even.push(json!({"m": m, "riesz": rep.riesz.finite_part, "hadamard": rep.hadamard.finite_part, "difference": rep.riesz_minus_hadamard}));
    }
    let g = hemisphere_expansion(1.0, 3, 8)?;
    let tail = HemisphereTail::new(1.0, 3);
    let hadamard = renvol::hadamard_rv(|e| tail.tail(e, 0.0), 3, &renvol::default_ladder(3, 1.0)).map_err(err)?.finite_part;
    let special = renvol::special_bdf_defect(&g).map_err(err)?;
    let mut defects = Vec::new();
    for d in [0.05, 0.1, 0.2] {
        let r = renvol::riesz_rv(&g, &tail, d).map_err(err)?.finite_part;
        defects.push((d, r - hadamard, r));
    }
    let spread = defects.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max) - defects.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    ok &= spread < 1e-4;
    Ok((
        ok,
        format!(
            "m=2,4: |R − H| ≤ {:.1e}; m=3: Riesz − Hadamard = {:.6} spread {spread:.1e} over δ (tol 1e-4), localized x_Y defect {special:.6}",
            even.iter().map(|e| e["difference"].as_f64().unwrap_or(f64::NAN).abs()).fold(0.0, f64::max),
            defects[1].1
        ),
        json!({"even": even, "m3": {"hadamard": hadamard, "defect_by_delta": defects, "spread": spread, "special_defect": special}}),
    ))
}

/// Concentric catenoid of ratio `ρ` normalized to `R₁R₂ = 1`.
fn catenoid(rho: f64) -> std::result::Result<ProfileSolution, String> {
    solver::solve_rotational(Family::Catenoid { inner: 1.0 / rho.sqrt(), outer: rho.sqrt() }, 2, &SolverOptions::default()).map_err(err)
}

fn catenoid_area(rho: f64) -> std::result::Result<f64, String> {
    let p = catenoid(rho)?;
    Ok(solver::profile_riesz(&p, 0.1 / rho.sqrt(), 8).map_err(err)?.finite_part)
}

/// Graph expansion over the unit circle with grid Neumann data.
fn unit_circle_expansion(u3: &[f64]) -> std::result::Result<GraphExpansion, String> {
    let b = BoundaryManifold::circle(1.0, 2, u3.len()).map_err(err)?;
    expand_minimal_graph(&b, 2, 2, &NormalField { components: vec![Coefficient::Grid(u3.to_vec())] }, 6).map_err(err)
}

/// Derivative of the catenoid area in the separation of two unit circles:
/// centered finite difference with one Richardson step, the codim-1 closed
/// form and the general formula, at concentric ratio `rho`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationDerivative {
    pub ratio: f64,
    pub separation: f64,
    pub finite_difference: f64,
    pub closed_form: f64,
    pub general: f64,
    pub max_fit_rms: f64,
}

pub fn separation_derivative(rho: f64, step: f64) -> std::result::Result<SeparationDerivative, String> {
    let p = catenoid(rho)?;
    let pair = solver::mobius_pair(&p, 64).map_err(err)?;
    let d = pair.separation;
    // the area depends on the separation only through the concentric ratio
    let dv = |h: f64| -> std::result::Result<f64, String> {
        Ok((catenoid_area(solver::ratio_for_separation(d + h))? - catenoid_area(solver::ratio_for_separation(d - h))?) / (2.0 * h))
    };
    let (a, b) = (dv(2.0 * step)?, dv(step)?);
    // the two circles move apart: φ̇₀ = ∓½ cos θ
    let mut general = 0.0;
    let mut closed = 0.0;
    for comp in 0..2 {
        let g = unit_circle_expansion(&pair.u3[comp])?;
        let sign = if comp == 0 { -0.5 } else { 0.5 };
        let phi0: Vec<f64> = pair.angles.iter().map(|t| sign * t.cos()).collect();
        let j = variation::jacobi_expansion(&g, &NormalField { components: vec![Coefficient::Grid(phi0)] }, &NormalField::zero(&g.boundary), 6)
            .map_err(err)?;
        let rep = variation::first_variation(&g, &j).map_err(err)?;
        general += rep.first;
        closed += rep.first_closed_form.unwrap_or(f64::NAN);
    }
    Ok(SeparationDerivative {
        ratio: rho,
        separation: d,
        finite_difference: (4.0 * b - a) / 3.0,
        closed_form: closed,
        general,
        max_fit_rms: pair.max_fit_rms,
    })
}

/// One line of a first-variation comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub parameter: String,
    pub value: f64,
    pub finite_difference: f64,
    pub closed_form: f64,
    pub general: f64,
    /// `|closed − FD| / max(|FD|, 1)`.
    pub error: f64,
}

impl ComparisonRow {
    fn new(parameter: &str, value: f64, fd: f64, closed: f64, general: f64) -> Self {
        ComparisonRow {
            parameter: parameter.to_string(),
            value,
            finite_difference: fd,
            closed_form: closed,
            general,
            error: (closed - fd).abs() / fd.abs().max(1.0),
        }
    }
}

fn family_area(family: &Family) -> std::result::Result<f64, String> {
    let p = solver::solve_rotational(*family, 2, &SolverOptions::default()).map_err(err)?;
    let delta = 0.1 * p.boundary_radii.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(solver::profile_riesz(&p, delta, 8).map_err(err)?.finite_part)
}

/// Finite differences of the renormalized area against the first-variation
/// formulas, for each boundary radius of a rotational family in H³ (and the
/// separation of the two circles for a catenoid).
pub fn first_variation_table(family: &Family, step: f64) -> std::result::Result<Vec<ComparisonRow>, String> {
    let p = solver::solve_rotational(*family, 2, &SolverOptions::default()).map_err(err)?;
    let with = |comp: usize, r: f64| match family {
        Family::Hemisphere { .. } => Family::Hemisphere { radius: r },
        Family::Catenoid { inner, outer } => {
            if comp == 0 {
                Family::Catenoid { inner: r, outer: *outer }
            } else {
                Family::Catenoid { inner: *inner, outer: r }
            }
        }
        Family::Cap { n, .. } => Family::Cap { radius: r, n: *n },
    };
    let names = ["inner radius", "outer radius"];
    let mut rows = Vec::new();
    for comp in 0..p.components() {
        let r = p.boundary_radii[comp];
        let fd = (family_area(&with(comp, r + step))? - family_area(&with(comp, r - step))?) / (2.0 * step);
        // the moving circle is displaced along its outward normal
        let (mut general, mut closed) = (0.0, 0.0);
        for c in 0..p.components() {
            let g = solver::component_expansion(&p, c, 6, 64).map_err(err)?;
            let phi0 = if c == comp { 1.0 } else { 0.0 };
            let j = variation::jacobi_expansion(&g, &NormalField::scalar(phi0), &NormalField::zero(&g.boundary), 6).map_err(err)?;
            let rep = variation::first_variation(&g, &j).map_err(err)?;
            general += rep.first;
            closed += rep.first_closed_form.unwrap_or(f64::NAN);
        }
        let name = if p.components() == 1 { "radius" } else { names[comp] };
        rows.push(ComparisonRow::new(name, r, fd, closed, general));
    }
    if let Family::Catenoid { inner, outer } = family {
        let s = separation_derivative(outer / inner, step)?;
        rows.push(ComparisonRow::new("separation", s.separation, s.finite_difference, s.closed_form, s.general));
    }
    Ok(rows)
}

fn first_variation_oracle(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let s = separation_derivative(2.0, 1e-3)?;
    let rel = (s.closed_form - s.finite_difference).abs() / s.finite_difference.abs();
    let agree = (s.general - s.closed_form).abs();
    // radial check on the concentric family
    let radial = first_variation_table(&Family::Catenoid { inner: 1.0, outer: 2.0 }, 1e-3)?;
    let ok = rel < 2e-3 && agree < 1e-8;
    Ok((
        ok,
        format!(
            "dV/dd: formula {:.6} vs FD {:.6} (rel {rel:.1e}, tol 2e-3); general − closed = {agree:.1e} (tol 1e-8)",
            s.closed_form, s.finite_difference
        ),
        json!({"separation_family": s, "relative_error": rel, "general_minus_closed": agree, "radial_rows": radial}),
    ))
}

fn killing_isometry(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let b = BoundaryManifold::circle(1.0, 2, 64).map_err(err)?;
    let g = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 8).map_err(err)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for k in [Some(0), Some(1), None] {
        let r = killing_check(&g, k).map_err(err)?;
        let cf = r.closed_form.map(|c| c.total).unwrap_or(f64::NAN);
        worst = worst.max(cf.abs()).max(r.second.abs());
        rows.push(json!({"direction": k, "closed_form": cf, "general": r.second, "terms": r.terms}));
    }
    Ok((worst < 1e-5, format!("max |D²V| over translations = {worst:.1e} (tol 1e-5)"), json!(rows)))
}

fn l2_identity(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    // concentric catenoid: both boundary spheres
    let rho = 2.0;
    let p = catenoid(rho)?;
    let mut concentric = Vec::new();
    let (mut lhs_c, mut scale_c, mut killing_c) = (0.0, 0.0, 0.0);
    for comp in 0..2 {
        let g = solver::component_expansion(&p, comp, 8, 64).map_err(err)?;
        let r = killing_check(&g, None).map_err(err)?;
        let vol = g.boundary.volume();
        let u2 = g.u_coeff(0, 2).map_err(err)?.at(0);
        let u3 = g.u_coeff(0, 3).map_err(err)?.at(0);
        lhs_c += r.l2_ratio * vol;
        scale_c += (u2 * u3).abs() * vol;
        killing_c += r.second;
        concentric.push(json!({"radius": p.boundary_radii[comp], "u2": u2, "u3": u3, "killing_second_variation": r.second}));
    }
    // the same catenoid moved to two unit circles
    let pair = solver::mobius_pair(&p, 64).map_err(err)?;
    let (mut lhs_p, mut scale_p, mut killing_p) = (0.0, 0.0, 0.0);
    for comp in 0..2 {
        let g = unit_circle_expansion(&pair.u3[comp])?;
        let u2 = g.u_coeff(0, 2).map_err(err)?;
        let u3 = g.u_coeff(0, 3).map_err(err)?;
        lhs_p += g.boundary.l2_inner(&u2, &u3).map_err(err)?;
        scale_p += g.boundary.integrate(&u2.zip_with(&u3, |a, b| (a * b).abs()).map_err(err)?).map_err(err)?;
        killing_p += killing_check(&g, None).map_err(err)?.second;
    }
    // independent oracle for the second-variation formula: V'' along R₂
    let (r1, r2) = (p.boundary_radii[0], p.boundary_radii[1]);
    let h = 1e-3;
    let area = |x: f64| catenoid_area(x / r1);
    let (vp, v0, vm) = (area(r2 + h)?, area(r2)?, area(r2 - h)?);
    let v2_fd = (vp - 2.0 * v0 + vm) / (h * h);
    let u3_of = |x: f64| -> std::result::Result<f64, String> {
        let q = solver::solve_rotational(Family::Catenoid { inner: r1, outer: x }, 2, &SolverOptions::default()).map_err(err)?;
        q.coefficients[1].coefficient(3).ok_or_else(|| "missing u3".to_string())
    };
    let u3 = u3_of(r2)?;
    let du3 = (u3_of(r2 + h)? - u3_of(r2 - h)?) / (2.0 * h);
    let u2 = -0.5 / r2;
    // radial field: φ̇₀ = 1, φ̈₀ = 0, φ̇₃ = ∂u₃/∂R₂ − 6u₂u₃
    let phi3 = du3 - 6.0 * u2 * u3;
    let v2_formula = 2.0 * PI * r2 * (-phi3 - 20.0 * u2 * u3);

    // n = 4 hemisphere: evaluated and reported only
    let g4 = hemisphere_expansion(1.0, 4, 8)?;
    let r4 = killing_check(&g4, None).map_err(err)?;
    let n4_reported = r4.l2_predicted.is_some();

    let ok_c = lhs_c.abs() < 2e-3 * scale_c;
    let ok_p = lhs_p.abs() < 2e-3 * scale_p;
    let ok = ok_c && ok_p && n4_reported;
    Ok((
        ok,
        format!(
            "n=2: Σ<u2,u3> = {lhs_c:.4} (scale {scale_c:.4}) concentric, {lhs_p:.4} (scale {scale_p:.4}) two unit circles; \
             translation D²V = {killing_c:.3}/{killing_p:.3} (isometry ⇒ 0); V''(R2) FD {v2_fd:.4} vs formula {v2_formula:.4}; \
             n=4 hemisphere <u2,u5>/Vol = {:.3} vs predicted {:.4} (reported)",
            r4.l2_ratio,
            r4.l2_predicted.unwrap_or(f64::NAN)
        ),
        json!({
            "n2": {
                "concentric": {"components": concentric, "sum_inner_product": lhs_c, "scale": scale_c, "killing_sum": killing_c},
                "unit_circles": {"separation": pair.separation, "sum_inner_product": lhs_p, "scale": scale_p, "killing_sum": killing_p},
                "second_variation_oracle": {"R1": r1, "R2": r2, "finite_difference": v2_fd, "formula": v2_formula},
            },
            "n4_hemisphere": {"ratio": r4.l2_ratio, "predicted": r4.l2_predicted, "residual": r4.l2_residual,
                               "killing_general": r4.second, "killing_closed_form": r4.closed_form},
        }),
    ))
}

fn indicial_round_trip(seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..50 {
        let m = rng.gen_range(2..=6);
        let order = m + 4;
        let mut src = PhgSeries::zero(order, m, true);
        for k in 0..order {
            src.add_term(k, false, &Coefficient::Scalar(rng.gen_range(-1.0..1.0))).map_err(err)?;
            if k > m && rng.gen_bool(0.5) {
                src.add_term(k, true, &Coefficient::Scalar(rng.gen_range(-1.0..1.0))).map_err(err)?;
            }
        }
        let back = apply_indicial(&solve_indicial(&src, m).map_err(err)?, m).map_err(err)?;
        worst = worst.max(back.sub(&src).map_err(err)?.max_abs());
        count += 1;
    }
    Ok((worst < 1e-12, format!("{count} random sources, max round-trip error {worst:.1e}"), json!({"cases": count, "max_error": worst})))
}

fn special_bdf(_seed: u64) -> std::result::Result<(bool, String, Value), String> {
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for r in [0.5, 1.0, 2.0] {
        let g = hemisphere_expansion(r, 2, 8)?;
        let tail = HemisphereTail::new(r, 2);
        let rep = renvol::check_equivalence(&g, &tail, 1e-6).map_err(err)?;
        let cutoff = rep.hadamard_special.map(|h| h - rep.hadamard.finite_part).unwrap_or(f64::NAN);
        worst = worst.max(rep.special_defect.abs()).max(cutoff.abs());
        rows.push(json!({"surface": "hemisphere", "radius": r, "localized_defect": rep.special_defect, "cutoff_defect": cutoff}));
    }
    // ellipse boundary carrying the catenoid's fitted Neumann profile
    let p = catenoid(2.0)?;
    let pair = solver::mobius_pair(&p, 128).map_err(err)?;
    for (a, b) in [(2.0, 1.0), (1.5, 1.0)] {
        let bm = BoundaryManifold::ellipse(a, b, 2, 128).map_err(err)?;
        let g = expand_minimal_graph(&bm, 2, 2, &NormalField { components: vec![Coefficient::Grid(pair.u3[0].clone())] }, 8).map_err(err)?;
        let defect = renvol::special_bdf_defect(&g).map_err(err)?;
        worst = worst.max(defect.abs());
        rows.push(json!({"surface": "ellipse", "a": a, "b": b, "localized_defect": defect}));
    }
    Ok((worst < 1e-6, format!("max |FP∫x_Y^z − FP∫x^z| = {worst:.1e} (tol 1e-6)"), json!(rows)))
}
