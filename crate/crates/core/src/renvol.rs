//! Renormalized volume: finite parts of `∫ x^z b dA_Y` (Riesz) and constant
//! terms of cutoff volumes `Vol(Y ∩ {x > ε})` (Hadamard).
//!
//! Near the boundary `dA_Y = x^{-m} q̄ dA_γ dx`. Writing
//! `c_k = ∫_γ [b q̄]_k` and `c*_k = ∫_γ [b q̄]_{k,log}`, the meromorphic
//! function `z^p ∫ x^{z-j} b dA_Y` has a finite part at `z = 0` equal to
//! `c_{m+j-1}` for `p = 1`, `-c*_{m+j-1}` for `p = 2` and `0` for `p ≥ 3`.
//! For `p = 0` the series head on `x < δ` is integrated in closed form and
//! the rest is delegated to a [`TailProvider`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryManifold};
use crate::expansion::{ExpansionError, GraphExpansion};
use crate::phg::{Coefficient, PhgError, PhgSeries};
use crate::quad::{self, QuadError};

#[derive(Debug, Error)]
pub enum RenvolError {
    #[error(transparent)]
    Phg(#[from] PhgError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("series order {order} is insufficient (need {needed})")]
    InsufficientOrder { order: usize, needed: usize },
    #[error("a tail provider is required for p = 0")]
    MissingTail,
    #[error("log term at order {0} lies below the admissible order m")]
    EarlyLog(usize),
    #[error("ill-conditioned fit (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("cutoff ladder too short: {got} samples for {needed} unknowns")]
    LadderTooShort { got: usize, needed: usize },
    #[error("tail evaluation failed: {0}")]
    Tail(String),
}

pub type Result<T> = std::result::Result<T, RenvolError>;

/// Global data on `{x ≥ δ}` that the boundary expansion cannot supply.
pub trait TailProvider {
    /// `∫_{Y ∩ {x ≥ δ}} x^z dA_Y`.
    fn tail(&self, delta: f64, z: f64) -> Result<f64>;

    /// Estimated absolute error of [`TailProvider::tail`].
    fn tail_error(&self) -> f64 {
        0.0
    }

    /// True boundary-integrated density `∫_γ q̄(s, x) dA_γ`, if known, used
    /// to integrate the series remainder on `x < δ`.
    fn boundary_density(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Cutoff volume with respect to a special defining function, if known.
    fn special_area(&self, _eps: f64) -> Option<f64> {
        None
    }

    /// Characteristic length used to scale cutoffs.
    fn length_scale(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Riesz,
    Hadamard,
}

/// Finite part with its pole ledger.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FinitePartResult {
    pub method: Method,
    pub finite_part: f64,
    /// Riesz: `c_0 … c_{m+j-1}`. Hadamard: coefficients of the divergent
    /// powers `ε^{-m+1}, ε^{-m+3}, …`.
    pub poles: Vec<f64>,
    /// Riesz: `c*_{m+j-1}`. Hadamard: coefficient of `log(1/ε)` (odd `m`).
    pub log_pole: f64,
    pub delta: Option<f64>,
    pub tail: Option<f64>,
    pub tail_error: Option<f64>,
    pub remainder: Option<f64>,
    pub condition_number: Option<f64>,
}

/// `c_k` and `c*_k` of `b q̄` integrated over the boundary.
pub fn boundary_coefficients(bq: &PhgSeries, boundary: &BoundaryManifold) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = bq.order();
    let mut plain = Vec::with_capacity(n + 1);
    let mut log = Vec::with_capacity(n + 1);
    for k in 0..=n {
        plain.push(boundary.integrate(&bq.coeff(k, false)?)?);
        log.push(boundary.integrate(&bq.coeff(k, true)?)?);
    }
    Ok((plain, log))
}

/// `FP_{z=0} z^p ∫ x^{z-j} b dA_Y`.
#[allow(clippy::too_many_arguments)]
pub fn finite_part(
    b: &PhgSeries,
    q: &PhgSeries,
    boundary: &BoundaryManifold,
    m: usize,
    j: usize,
    p: usize,
    tail: Option<&dyn TailProvider>,
    delta: f64,
) -> Result<FinitePartResult> {
    let crit = m + j - 1;
    let bq = b.mul(q)?;
    let needed = if p == 0 { m + j } else { crit };
    if bq.order() < needed {
        return Err(RenvolError::InsufficientOrder { order: bq.order(), needed });
    }
    if let Some(k) = bq.first_log_order(0.0) {
        if k < m {
            return Err(RenvolError::EarlyLog(k));
        }
    }
    let (c, cs) = boundary_coefficients(&bq, boundary)?;
    let mut res = FinitePartResult {
        method: Method::Riesz,
        finite_part: 0.0,
        poles: c[..=crit].to_vec(),
        log_pole: cs[crit],
        delta: None,
        tail: None,
        tail_error: None,
        remainder: None,
        condition_number: None,
    };
    match p {
        1 => res.finite_part = c[crit],
        2 => res.finite_part = -cs[crit],
        p if p >= 3 => {}
        _ => {
            let tail = tail.ok_or(RenvolError::MissingTail)?;
            let l = delta.ln();
            let mut head = 0.0;
            for k in 0..=bq.order() {
                let a = k as f64 - (m + j) as f64;
                if k == crit {
                    head += c[k] * l + cs[k] * l * l / 2.0;
                } else {
                    let e = a + 1.0;
                    let dpow = delta.powf(e);
                    head += c[k] * dpow / e + cs[k] * dpow * (l / e - 1.0 / (e * e));
                }
            }
            let remainder = match tail.boundary_density(delta) {
                Some(_) => {
                    let series = |x: f64| {
                        let lx = x.ln();
                        (0..=bq.order()).map(|k| x.powi(k as i32) * (c[k] + cs[k] * lx)).sum::<f64>()
                    };
                    let lo = 0.02 * delta;
                    let f = |x: f64| {
                        let truth = tail.boundary_density(x).unwrap_or(f64::NAN);
                        x.powf(-((m + j) as f64)) * (truth - series(x))
                    };
                    // cancellation noise ~ε·x^{-m} caps the attainable accuracy
                    let noise = 1e3 * f64::EPSILON * lo.powf(1.0 - (m + j) as f64) * tail.boundary_density(lo).unwrap_or(0.0).abs();
                    match quad::integrate(f, lo, delta, 1e-10, 1e-10) {
                        Ok(q) => q.value,
                        Err(QuadError::NoConvergence { value, error, .. }) if error < noise.max(1e-8) => value,
                        Err(e) => return Err(e.into()),
                    }
                }
                None => 0.0,
            };
            let t = tail.tail(delta, -(j as f64))?;
            res.finite_part = head + remainder + t;
            res.delta = Some(delta);
            res.tail = Some(t);
            res.tail_error = Some(tail.tail_error());
            res.remainder = Some(remainder);
        }
    }
    Ok(res)
}

/// Default split radius for the Riesz engine.
pub fn default_delta(tail: &dyn TailProvider) -> f64 {
    0.1 * tail.length_scale()
}

/// `FP_{z=0} ∫ x^z dA_Y`.
pub fn riesz_rv(g: &GraphExpansion, tail: &dyn TailProvider, delta: f64) -> Result<FinitePartResult> {
    let one = PhgSeries::constant(1.0, g.order, g.m, g.codim1());
    finite_part(&one, &g.metric.q, &g.boundary, g.m, 0, 0, Some(tail), delta)
}

/// Geometric cutoff ladder; the lower end is raised for large `m` so the
/// divergent head stays below ~1e6 (keeps double-precision cancellation small).
pub fn default_ladder(m: usize, scale: f64) -> Vec<f64> {
    let lo = 1e-4f64.max(1e-6f64.powf(1.0 / (m as f64 - 1.0)));
    let (a, b) = (1e-1f64.ln(), lo.ln());
    (0..24).map(|i| scale * (a + (b - a) * i as f64 / 23.0).exp()).collect()
}

/// Constant term of `Vol(Y ∩ {x > ε}) ≈ Σ a_i ε^{-m+1+2i} (+ L log(1/ε)) + V`.
pub fn hadamard_rv(area: impl Fn(f64) -> Result<f64>, m: usize, ladder: &[f64]) -> Result<FinitePartResult> {
    let n_div = (m - 1).div_ceil(2);
    let odd = m % 2 == 1;
    let nuisance: Vec<(i32, bool)> = if odd {
        vec![(1, false), (2, false), (3, false), (2, true), (4, false)]
    } else {
        vec![(1, false), (2, false), (3, false), (4, false)]
    };
    let ncols = n_div + usize::from(odd) + 1 + nuisance.len();
    if ladder.len() < ncols + 2 {
        return Err(RenvolError::LadderTooShort { got: ladder.len(), needed: ncols + 2 });
    }
    let scale = ladder.iter().cloned().fold(0.0, f64::max);
    let rows = ladder.len();
    let mut a = DMatrix::<f64>::zeros(rows, ncols);
    let mut y = DVector::<f64>::zeros(rows);
    for (r, &eps) in ladder.iter().enumerate() {
        // fit in scaled variables t = ε / scale
        let t = eps / scale;
        let mut col = 0;
        for i in 0..n_div {
            a[(r, col)] = t.powi(-(m as i32) + 1 + 2 * i as i32);
            col += 1;
        }
        if odd {
            a[(r, col)] = (1.0 / t).ln();
            col += 1;
        }
        a[(r, col)] = 1.0;
        col += 1;
        for &(k, lg) in &nuisance {
            a[(r, col)] = t.powi(k) * if lg { t.ln() } else { 1.0 };
            col += 1;
        }
        y[r] = area(eps)?;
    }
    let norms: Vec<f64> = (0..ncols).map(|c| a.column(c).norm()).collect();
    for (c, nrm) in norms.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / nrm);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(cond < 1e13) {
        return Err(RenvolError::IllConditioned(cond));
    }
    let sol = svd.solve(&y, 1e-15 * smax).map_err(|e| RenvolError::Tail(e.to_string()))?;
    let coef: Vec<f64> = (0..ncols).map(|c| sol[c] / norms[c]).collect();
    // undo the scaling t = ε / scale
    let poles: Vec<f64> = (0..n_div).map(|i| coef[i] * scale.powi(m as i32 - 1 - 2 * i as i32)).collect();
    let (log_pole, constant) = if odd {
        let lcoef = coef[n_div];
        // L log(scale/ε) = L log(1/ε) + L log(scale)
        (lcoef, coef[n_div + 1] + lcoef * scale.ln())
    } else {
        (0.0, coef[n_div])
    };
    Ok(FinitePartResult {
        method: Method::Hadamard,
        finite_part: constant,
        poles,
        log_pole,
        delta: None,
        tail: None,
        tail_error: None,
        remainder: None,
        condition_number: Some(cond),
    })
}

/// `FP ∫ x_Y^z dA − FP ∫ x^z dA` for `x_Y = x e^ω`, by localization:
/// `x_Y^z = x^z Σ_p z^p ω^p / p!` and only `p = 1, 2` contribute.
pub fn special_bdf_defect(g: &GraphExpansion) -> Result<f64> {
    let mut total = 0.0;
    let mut power = PhgSeries::constant(1.0, g.order, g.m, g.codim1());
    let mut fact = 1.0;
    for p in 1..=2 {
        power = power.mul(&g.omega)?;
        fact *= p as f64;
        let b = power.scale(1.0 / fact);
        total += finite_part(&b, &g.metric.q, &g.boundary, g.m, 0, p, None, 0.0)?.finite_part;
    }
    Ok(total)
}

/// Riesz vs Hadamard, and `x` vs the special defining function.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub m: usize,
    pub riesz: FinitePartResult,
    pub hadamard: FinitePartResult,
    pub riesz_minus_hadamard: f64,
    /// Localized `FP∫x_Y^z − FP∫x^z`.
    pub special_defect: f64,
    /// Hadamard constant computed with the special cutoff `{x_Y > ε}`, if available.
    pub hadamard_special: Option<f64>,
    /// Riesz values at `δ/2, δ, 2δ`.
    pub riesz_delta_scan: Vec<(f64, f64)>,
    pub passed: bool,
}

pub fn check_equivalence(g: &GraphExpansion, tail: &dyn TailProvider, tol: f64) -> Result<EquivalenceReport> {
    let delta = default_delta(tail);
    let riesz = riesz_rv(g, tail, delta)?;
    let ladder = default_ladder(g.m, tail.length_scale());
    let hadamard = hadamard_rv(|e| tail.tail(e, 0.0), g.m, &ladder)?;
    let special_defect = special_bdf_defect(g)?;
    let hadamard_special = if tail.special_area(ladder[0]).is_some() {
        Some(hadamard_rv(|e| tail.special_area(e).ok_or(RenvolError::MissingTail), g.m, &ladder)?.finite_part)
    } else {
        None
    };
    let mut scan = Vec::new();
    for f in [0.5, 1.0, 2.0] {
        scan.push((f * delta, riesz_rv(g, tail, f * delta)?.finite_part));
    }
    let diff = riesz.finite_part - hadamard.finite_part;
    let spread = scan.iter().map(|s| (s.1 - riesz.finite_part).abs()).fold(0.0, f64::max);
    let mut passed = diff.abs() < tol && spread < tol.max(1e-6 * riesz.finite_part.abs());
    if g.m.is_multiple_of(2) {
        passed &= special_defect.abs() < tol;
        if let Some(hs) = hadamard_special {
            passed &= (hs - hadamard.finite_part).abs() < tol;
        }
    }
    Ok(EquivalenceReport {
        m: g.m,
        riesz_minus_hadamard: diff,
        riesz,
        hadamard,
        special_defect,
        hadamard_special,
        riesz_delta_scan: scan,
        passed,
    })
}

/// Closed-form geodesic hemisphere `{|y|² + x² = R²}` of dimension `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereTail {
    pub radius: f64,
    pub m: usize,
}

impl HemisphereTail {
    pub fn new(radius: f64, m: usize) -> Self {
        Self { radius, m }
    }

    fn sphere_area(&self) -> f64 {
        crate::boundary::unit_sphere_area(self.m - 1)
    }

    /// Hyperbolic area element per unit height: `|S^{m-1}| R r^{m-2} x^{-m}`.
    fn density(&self, x: f64) -> f64 {
        let r2 = (self.radius * self.radius - x * x).max(0.0);
        self.sphere_area() * self.radius * r2.powf((self.m as f64 - 2.0) / 2.0)
    }
}

impl TailProvider for HemisphereTail {
    fn tail(&self, delta: f64, z: f64) -> Result<f64> {
        let (r, m) = (self.radius, self.m as f64);
        if delta >= r {
            return Ok(0.0);
        }
        if self.m == 2 && z == 0.0 {
            return Ok(2.0 * std::f64::consts::PI * r * (1.0 / delta - 1.0 / r));
        }
        // substitute x = R sin t to remove the endpoint square root
        let t0 = (delta / r).asin();
        let f = |t: f64| {
            let x = r * t.sin();
            self.density(x) * x.powf(z - m) * r * t.cos()
        };
        Ok(quad::integrate_graded(f, t0, std::f64::consts::FRAC_PI_2, 1e-13, 1e-14)?.value)
    }

    fn boundary_density(&self, x: f64) -> Option<f64> {
        Some(self.density(x))
    }

    fn special_area(&self, eps: f64) -> Option<f64> {
        // on the hemisphere x_Y = 2R tan(t/2) with x = R sin t
        let r = self.radius;
        let t = 2.0 * (eps / (2.0 * r)).atan();
        self.tail(r * t.sin(), 0.0).ok()
    }

    fn length_scale(&self) -> f64 {
        self.radius
    }
}

/// Constant-in-`s` helper used by tests and the CLI.
pub fn scalar_integral(boundary: &BoundaryManifold, c: f64) -> Result<f64> {
    Ok(boundary.integrate(&Coefficient::Scalar(c))?)
}
