//! Formal solution of the minimal-graph equation near the boundary.
//!
//! Starting from `u = 0`, each pass reads the lowest-order coefficient of the
//! mean-curvature residual and removes it with the indicial operator. The
//! free kernel coefficient at order `m + 1` is injected from Neumann data;
//! for odd `m` the resonance there forces an `x^{m+1} log x` term.

mod bdf;
mod geometry;
mod indicial;

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryManifold, NormalField};
use crate::phg::{Coefficient, PhgError, PhgSeries, SeriesJson};

pub use bdf::{eikonal_residual, special_bdf};
pub use geometry::{induced_metric, mean_curvature_series, normal_series, translation_acceleration, MetricSeries, NormalSeries};
pub(crate) use geometry::mean_curvature_unchecked;
pub use indicial::{apply_indicial, indicial_polynomial, solve_indicial};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error(transparent)]
    Phg(#[from] PhgError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("truncation order {order} too low (need at least {needed})")]
    OrderTooLow { order: usize, needed: usize },
    #[error("non-graphical data: {0}")]
    NonGraphical(String),
    #[error("residual at order {k} does not vanish (|r| = {value:.3e})")]
    ResidualNotVanishing { k: usize, value: f64 },
    #[error("log source at the resonant order {0} is outside the tracked class")]
    LogAtResonance(usize),
    #[error("operation requires codimension one (got {0})")]
    CodimNotOne(usize),
    #[error("operation requires m = n")]
    NotHypersurface,
}

pub type Result<T> = std::result::Result<T, ExpansionError>;

/// Relative tolerance for residual checks (scaled by the curvature length).
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Free datum of the geodesic hemisphere of radius `R` over a round sphere:
/// the `x^{m+1}` coefficient of `√(R² − x²) − R` (zero for even `m`).
pub fn hemisphere_neumann(radius: f64, m: usize) -> f64 {
    if m.is_multiple_of(2) {
        return 0.0;
    }
    let j = m.div_ceil(2);
    let mut binom = 1.0;
    for i in 0..j {
        binom *= (0.5 - i as f64) / (i as f64 + 1.0);
    }
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * binom * radius.powi(1 - 2 * j as i32)
}

/// Inverse characteristic length of the boundary: coefficients of order `k`
/// scale like `inverse_length^{k-1}`.
pub fn inverse_length(b: &BoundaryManifold) -> f64 {
    match b {
        BoundaryManifold::RoundSphere(s) => 1.0 / s.radius,
        BoundaryManifold::Curve(c) => {
            let kmax = c.kappa.iter().flatten().fold(0.0f64, |a, k| a.max(k.abs()));
            kmax.max(2.0 * std::f64::consts::PI / c.length)
        }
    }
}

/// The solved formal minimal graph and derived series.
#[derive(Debug, Clone)]
pub struct GraphExpansion {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub boundary: BoundaryManifold,
    pub u: Vec<PhgSeries>,
    pub neumann: NormalField,
    /// Coefficient `U` of `x^{m+1} log x` (odd `m` only).
    pub log_coefficient: Option<NormalField>,
    pub metric: MetricSeries,
    pub normal: Option<NormalSeries>,
    pub omega: PhgSeries,
}

impl GraphExpansion {
    pub fn codim1(&self) -> bool {
        self.boundary.codim() == 1
    }

    /// `u_k` of component `i`.
    pub fn u_coeff(&self, i: usize, k: usize) -> Result<Coefficient> {
        Ok(self.u[i].coeff(k, false)?)
    }

    pub fn normal(&self) -> Result<&NormalSeries> {
        self.normal.as_ref().ok_or(ExpansionError::CodimNotOne(self.boundary.codim()))
    }

    /// Mean-curvature residual of the stored `u`.
    pub fn residual(&self) -> Result<Vec<PhgSeries>> {
        mean_curvature_series(&self.u, &self.boundary, self.m)
    }

    pub fn to_json(&self) -> ExpansionJson {
        let s = |p: &PhgSeries| p.to_json();
        let nf = |f: &NormalField| {
            f.components
                .iter()
                .map(|c| match c {
                    Coefficient::Scalar(v) => serde_json::json!(v),
                    Coefficient::Grid(v) => serde_json::json!(v),
                })
                .collect::<Vec<_>>()
        };
        ExpansionJson {
            n: self.n,
            m: self.m,
            order: self.order,
            boundary: self.boundary.report(),
            u: self.u.iter().map(s).collect(),
            neumann: nf(&self.neumann),
            log_coefficient: self.log_coefficient.as_ref().map(nf),
            metric: MetricJson {
                h_ss: s(&self.metric.h_ss),
                h_sx: s(&self.metric.h_sx),
                h_xx: s(&self.metric.h_xx),
                hinv_ss: s(&self.metric.hinv_ss),
                hinv_sx: s(&self.metric.hinv_sx),
                hinv_xx: s(&self.metric.hinv_xx),
                sqrt_det: s(&self.metric.q),
            },
            normal: self.normal.as_ref().map(|nr| NormalJson { cz: s(&nr.cz), cx: s(&nr.cx), ca: s(&nr.ca) }),
            omega: s(&self.omega),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionJson {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub boundary: crate::boundary::BoundaryReport,
    pub u: Vec<SeriesJson>,
    pub neumann: Vec<serde_json::Value>,
    pub log_coefficient: Option<Vec<serde_json::Value>>,
    pub metric: MetricJson,
    pub normal: Option<NormalJson>,
    pub omega: SeriesJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricJson {
    pub h_ss: SeriesJson,
    pub h_sx: SeriesJson,
    pub h_xx: SeriesJson,
    pub hinv_ss: SeriesJson,
    pub hinv_sx: SeriesJson,
    pub hinv_xx: SeriesJson,
    pub sqrt_det: SeriesJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalJson {
    pub cz: SeriesJson,
    pub cx: SeriesJson,
    pub ca: SeriesJson,
}

fn validate(b: &BoundaryManifold, m: usize, n: usize, neumann: &NormalField, order: usize) -> Result<()> {
    if b.m() != m || b.n() != n {
        return Err(ExpansionError::DimensionMismatch(format!(
            "boundary supports (m, n) = ({}, {}), requested ({m}, {n})",
            b.m(),
            b.n()
        )));
    }
    if m < 2 || m > n {
        return Err(ExpansionError::DimensionMismatch(format!("need 2 <= m <= n, got m = {m}, n = {n}")));
    }
    if order < m + 2 {
        return Err(ExpansionError::OrderTooLow { order, needed: m + 2 });
    }
    if neumann.components.len() != b.codim() {
        return Err(ExpansionError::DimensionMismatch(format!(
            "{} Neumann components for codimension {}",
            neumann.components.len(),
            b.codim()
        )));
    }
    for c in &neumann.components {
        match (c, b.grid_len()) {
            (Coefficient::Grid(v), Some(p)) if v.len() != p => {
                return Err(ExpansionError::DimensionMismatch(format!("Neumann grid has {} samples, boundary {p}", v.len())))
            }
            (Coefficient::Grid(_), None) => {
                return Err(ExpansionError::DimensionMismatch("grid Neumann data on a round sphere".into()))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Solve the minimal-graph equation formally through order `order`.
pub fn expand_minimal_graph(
    b: &BoundaryManifold,
    m: usize,
    n: usize,
    neumann: &NormalField,
    order: usize,
) -> Result<GraphExpansion> {
    validate(b, m, n, neumann, order)?;
    let codim = b.codim();
    let codim1 = codim == 1;
    let lam = inverse_length(b);
    let tol_at = |k: usize| RESIDUAL_TOL * lam.powi(k as i32).max(1.0);
    let mut u = vec![PhgSeries::zero(order, m, codim1); codim];
    let mut log_coeff = vec![Coefficient::Scalar(0.0); codim];

    for k in 2..=order {
        let h = mean_curvature_series(&u, b, m)?;
        for i in 0..codim {
            let r = h[i].coeff(k, false)?;
            let rl = h[i].coeff(k, true)?;
            if k == m + 1 {
                if rl.max_abs() > tol_at(k) {
                    return Err(ExpansionError::ResidualNotVanishing { k, value: rl.max_abs() });
                }
                if m.is_multiple_of(2) {
                    if r.max_abs() > tol_at(k) {
                        return Err(ExpansionError::ResidualNotVanishing { k, value: r.max_abs() });
                    }
                } else {
                    let big_u = r.scale(-1.0 / (m as f64 + 1.0));
                    // a vanishing resonance leaves the expansion log-free
                    if big_u.max_abs() > tol_at(k) {
                        u[i].set(k, true, big_u.clone())?;
                    }
                    log_coeff[i] = big_u;
                }
                u[i].set(k, false, neumann.components[i].clone())?;
                continue;
            }
            let mut src = PhgSeries::zero(order, m, codim1);
            src.add_term(k - 1, false, &r.scale(-1.0))?;
            src.add_term(k - 1, true, &rl.scale(-1.0))?;
            let du = solve_indicial(&src, m)?.shift_up(1).truncate(order);
            u[i] = u[i].add(&du)?;
        }
    }

    let h = mean_curvature_series(&u, b, m)?;
    for (i, hi) in h.iter().enumerate() {
        for k in 0..=order {
            let r = hi.coeff(k, false)?.max_abs().max(hi.coeff(k, true)?.max_abs());
            if r > tol_at(k) {
                let _ = i;
                return Err(ExpansionError::ResidualNotVanishing { k, value: r });
            }
        }
    }

    let metric = induced_metric(&u, b)?;
    let normal = if codim1 { Some(normal_series(&u, b)?) } else { None };
    let omega = special_bdf(&metric, b, RESIDUAL_TOL)?;
    Ok(GraphExpansion {
        n,
        m,
        order,
        boundary: b.clone(),
        u,
        neumann: neumann.clone(),
        log_coefficient: if m % 2 == 1 { Some(NormalField { components: log_coeff }) } else { None },
        metric,
        normal,
        omega,
    })
}

/// Both routes to `[h̄^{xx}]_{n+1} + [√det h̄]_{n+1}` for a hypersurface.
#[derive(Debug, Clone, Serialize)]
pub struct HxxPlusQ {
    /// Value read off the computed series.
    pub series: Vec<f64>,
    /// `(n-1)(n-2) - 8(n-1) u_2 u_{n+1}` (ambient trace slot zero).
    pub closed_form: Vec<f64>,
    pub max_difference: f64,
}

pub fn hxx_plus_q_coefficient(g: &GraphExpansion) -> Result<HxxPlusQ> {
    if !g.codim1() {
        return Err(ExpansionError::CodimNotOne(g.boundary.codim()));
    }
    if g.m != g.n {
        return Err(ExpansionError::NotHypersurface);
    }
    let n = g.n;
    if g.order < n + 1 {
        return Err(ExpansionError::OrderTooLow { order: g.order, needed: n + 1 });
    }
    let series = g.metric.hinv_xx.coeff(n + 1, false)?.add(&g.metric.q.coeff(n + 1, false)?)?;
    let u2 = g.u_coeff(0, 2)?;
    let un1 = g.u_coeff(0, n + 1)?;
    let nf = n as f64;
    let closed = u2.mul(&un1)?.scale(-8.0 * (nf - 1.0)).add(&Coefficient::Scalar((nf - 1.0) * (nf - 2.0)))?;
    let p = g.boundary.grid_len().unwrap_or(1);
    let sv = series.to_grid(p);
    let cv = closed.to_grid(p);
    let max_difference = sv.iter().zip(&cv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(HxxPlusQ { series: sv, closed_form: cv, max_difference })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phg::PARITY_TOL;
    use crate::phg::Parity;

    fn hemisphere_u(order: usize, m: usize) -> PhgSeries {
        // √(1 - x²) - 1 = -x²/2 - x⁴/8 - x⁶/16 - 5x⁸/128
        PhgSeries::from_scalars(&[0.0, 0.0, -0.5, 0.0, -0.125, 0.0, -0.0625, 0.0, -5.0 / 128.0], order, m, true)
    }

    fn scalar(c: &Coefficient) -> f64 {
        c.at(0)
    }

    #[test]
    fn flat_data_leading_curvature() {
        let b = BoundaryManifold::circle(1.0, 2, 64).unwrap();
        let u = vec![PhgSeries::zero(6, 2, true)];
        let h = mean_curvature_series(&u, &b, 2).unwrap();
        let c2 = h[0].coeff(2, false).unwrap();
        assert!((0..64).all(|i| (c2.at(i) + 1.0).abs() < 1e-6));
        let b2 = BoundaryManifold::circle(2.0, 2, 64).unwrap();
        let h2 = mean_curvature_series(&u, &b2, 2).unwrap();
        assert!((h2[0].coeff(2, false).unwrap().at(3) + 0.5).abs() < 1e-6);
    }

    #[test]
    fn hemisphere_is_minimal_on_both_backends() {
        let b = BoundaryManifold::circle(1.0, 2, 64).unwrap();
        let grid_u = PhgSeries::from_terms(8, 2, true, hemisphere_u(8, 2).terms().map(|(k, l, c)| (k, l, Coefficient::Grid(vec![c.at(0); 64])))).unwrap();
        let h = mean_curvature_series(&[grid_u], &b, 2).unwrap();
        assert!(h[0].max_abs() < 1e-6, "{}", h[0].max_abs());
        for m in [2, 3, 4] {
            let s = BoundaryManifold::sphere(1.0, m).unwrap();
            let h = mean_curvature_series(&[hemisphere_u(8, m)], &s, m).unwrap();
            assert!(h[0].max_abs() < 1e-14);
        }
    }

    #[test]
    fn expansion_of_unit_circle_is_hemisphere() {
        let b = BoundaryManifold::circle(1.0, 2, 64).unwrap();
        let g = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 8).unwrap();
        let exact = hemisphere_u(8, 2);
        for k in 0..=8 {
            let c = g.u[0].coeff(k, false).unwrap();
            let e = scalar(&exact.coeff(k, false).unwrap());
            assert!((0..64).all(|i| (c.at(i) - e).abs() < 1e-8), "order {k}");
        }
        assert_eq!(g.u[0].parity(PARITY_TOL), Parity::Even);
    }

    #[test]
    fn sphere_m3_with_hemisphere_data() {
        let r = 1.5;
        let b = BoundaryManifold::sphere(r, 3).unwrap();
        let data = NormalField::scalar(hemisphere_neumann(r, 3));
        let g = expand_minimal_graph(&b, 3, 3, &data, 8).unwrap();
        // √(R² − x²) − R = −x²/(2R) − x⁴/(8R³) − x⁶/(16R⁵) − 5x⁸/(128R⁷)
        let exact = [(2, -0.5 / r), (4, -1.0 / (8.0 * r.powi(3))), (6, -1.0 / (16.0 * r.powi(5))), (8, -5.0 / (128.0 * r.powi(7)))];
        for (k, e) in exact {
            assert!((scalar(&g.u_coeff(0, k).unwrap()) - e).abs() < 1e-12, "order {k}");
        }
        assert!(!g.u[0].has_log());
    }

    #[test]
    fn sphere_m4_coefficients() {
        let b = BoundaryManifold::sphere(1.0, 4).unwrap();
        let g = expand_minimal_graph(&b, 4, 4, &NormalField::zero(&b), 8).unwrap();
        assert!((scalar(&g.u_coeff(0, 2).unwrap()) + 0.5).abs() < 1e-12);
        assert!((scalar(&g.u_coeff(0, 4).unwrap()) + 0.125).abs() < 1e-12);
        assert_eq!(scalar(&g.u_coeff(0, 5).unwrap()), 0.0);
    }

    #[test]
    fn codim_two_planar_circle() {
        let b = BoundaryManifold::circle(1.0, 3, 64).unwrap();
        let g = expand_minimal_graph(&b, 2, 3, &NormalField::zero(&b), 6).unwrap();
        assert!(g.u[1].max_abs() < 1e-10);
        assert!((g.u_coeff(0, 4).unwrap().at(7) + 0.125).abs() < 1e-8);
        assert!(g.normal.is_none());
    }

    #[test]
    fn hemisphere_normal_and_bdf() {
        let b = BoundaryManifold::sphere(1.0, 2).unwrap();
        let g = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 8).unwrap();
        let nr = g.normal().unwrap();
        // exact: c^x = x, c^z = √(1 - x²)
        assert!((scalar(&nr.cx.coeff(1, false).unwrap()) - 1.0).abs() < 1e-14);
        assert!(nr.cx.truncate(8).sub(&PhgSeries::from_scalars(&[0.0, 1.0], 8, 2, true)).unwrap().max_abs() < 1e-13);
        // ω = -log((1 + √(1 - x²))/2) = x²/4 + 3x⁴/32 + 5x⁶/96 + ...
        let w = &g.omega;
        assert!((scalar(&w.coeff(2, false).unwrap()) - 0.25).abs() < 1e-14);
        assert!((scalar(&w.coeff(4, false).unwrap()) - 3.0 / 32.0).abs() < 1e-14);
        assert!((scalar(&w.coeff(6, false).unwrap()) - 5.0 / 96.0).abs() < 1e-14);
        assert_eq!(scalar(&w.coeff(1, false).unwrap()), 0.0);
    }

    #[test]
    fn flat_cylinder_bdf_is_trivial() {
        let b = BoundaryManifold::sphere(1.0, 2).unwrap();
        let u = vec![PhgSeries::zero(6, 2, true)];
        // metric of the flat cylinder over a straight line: use the u = 0 sphere metric but
        // with the tangential factor irrelevant (no s-dependence)
        let metric = induced_metric(&u, &b).unwrap();
        let w = special_bdf(&metric, &b, 1e-12).unwrap();
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn hxx_plus_q_routes() {
        for r in [1.0, 2.5] {
            let b = BoundaryManifold::sphere(r, 2).unwrap();
            let g = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 6).unwrap();
            let res = hxx_plus_q_coefficient(&g).unwrap();
            assert!(res.max_difference < 1e-8);
        }
        let b = BoundaryManifold::sphere(1.0, 4).unwrap();
        let g = expand_minimal_graph(&b, 4, 4, &NormalField::zero(&b), 7).unwrap();
        let res = hxx_plus_q_coefficient(&g).unwrap();
        assert!(res.series[0].abs() < 1e-12);
        assert_eq!(res.closed_form[0], 6.0);
    }

    #[test]
    fn m_odd_cap_has_no_log_below_resonance() {
        let b = BoundaryManifold::sphere(1.0, 3).unwrap();
        let g = expand_minimal_graph(&b, 3, 3, &NormalField::scalar(0.3), 8).unwrap();
        assert_eq!(g.u[0].first_log_order(1e-12), None);
        let big_u = g.log_coefficient.as_ref().unwrap().components[0].max_abs();
        assert!(big_u < 1e-12);
        assert!((scalar(&g.u_coeff(0, 4).unwrap()) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn order_and_dimension_validation() {
        let b = BoundaryManifold::sphere(1.0, 4).unwrap();
        assert!(matches!(
            expand_minimal_graph(&b, 4, 4, &NormalField::zero(&b), 5),
            Err(ExpansionError::OrderTooLow { .. })
        ));
        assert!(matches!(
            expand_minimal_graph(&b, 3, 4, &NormalField::zero(&b), 8),
            Err(ExpansionError::DimensionMismatch(_))
        ));
    }
}

#[cfg(test)]
mod ellipse_tests {
    use super::*;
    use crate::phg::{Parity, PARITY_TOL};

    #[test]
    fn ellipse_expansion_parities() {
        for n in [2, 3] {
            let b = BoundaryManifold::ellipse(2.0, 1.0, n, 128).unwrap();
            let g = expand_minimal_graph(&b, 2, n, &NormalField::zero(&b), 6).unwrap();
            for ui in &g.u {
                assert!(matches!(ui.parity(PARITY_TOL), Parity::Even | Parity::Zero));
                assert_eq!(ui.first_log_order(1e-12), None);
            }
            assert!(g.metric.h_sx.parity(PARITY_TOL).is_compatible_with(Parity::Odd));
            assert_eq!(g.metric.h_sx.parity_through(6, PARITY_TOL), Parity::Odd);
            assert_eq!(g.metric.q.parity(PARITY_TOL), Parity::Even);
            assert_eq!(g.omega.parity(PARITY_TOL), Parity::Even);
            // u_2 = H_γ / 2
            let h = b.mean_curvature();
            let u2 = g.u_coeff(0, 2).unwrap();
            assert!((0..128).all(|i| (u2.at(i) - h.components[0].at(i) / 2.0).abs() < 1e-8));
            if n == 2 {
                assert_eq!(g.normal().unwrap().cx.parity(PARITY_TOL), Parity::Odd);
            }
        }
    }
}
