//! Special boundary defining function `x_Y = x e^ω` on the minimal graph.
//!
//! `x_Y` is special when `|d log x_Y|_g = 1` for `g = h̄ / x²`, i.e.
//!
//! `E(ω) = h̄^{xx}(1 + xω_x)² + 2x h̄^{sx} ω_s (1 + xω_x) + x² h̄^{ss} ω_s² - 1 = 0`.
//!
//! The linear part of `E` is `2 x∂x ω`, so `ω` is solved order by order.

use crate::boundary::BoundaryManifold;
use crate::phg::{Coefficient, PhgSeries};

use super::geometry::MetricSeries;
use super::{ExpansionError, Result};

/// `E(ω)` as a series.
pub fn eikonal_residual(omega: &PhgSeries, metric: &MetricSeries, b: &BoundaryManifold) -> Result<PhgSeries> {
    let one = Coefficient::Scalar(1.0);
    let n = omega.order();
    let w = omega.with_order(n + 1);
    let f = w.x_dx().add_const(&one)?;
    let mut e = metric.hinv_xx.mul(&f.mul(&f)?)?;
    if let Some(tan) = b.tangential() {
        let ws = w.d_s(&tan);
        let cross = metric.hinv_sx.mul(&ws)?.mul(&f)?.shift_up(1).scale(2.0);
        let tang = metric.hinv_ss.mul(&ws.mul(&ws)?)?.shift_up(2);
        e = e.add(&cross)?.add(&tang)?;
    }
    Ok(e.add_const(&Coefficient::Scalar(-1.0))?.truncate(n))
}

/// Solve `E(ω) = 0` through the truncation order of the metric.
pub fn special_bdf(metric: &MetricSeries, b: &BoundaryManifold, tol: f64) -> Result<PhgSeries> {
    let n = metric.hinv_xx.order();
    let (m, codim1) = (metric.hinv_xx.m(), metric.hinv_xx.codim1());
    let mut omega = PhgSeries::zero(n, m, codim1);
    for k in 1..=n {
        let e = eikonal_residual(&omega, metric, b)?;
        let kf = k as f64;
        let plain = e.coeff(k, false)?;
        let log = e.coeff(k, true)?;
        omega.add_term(k, false, &plain.scale(-1.0 / (2.0 * kf)))?;
        if !log.is_exact_zero() {
            // 2 x∂x (c x^k log x + d x^k) = -b x^k log x
            omega.add_term(k, true, &log.scale(-1.0 / (2.0 * kf)))?;
            omega.add_term(k, false, &log.scale(1.0 / (2.0 * kf * kf)))?;
        }
    }
    let e = eikonal_residual(&omega, metric, b)?;
    let lam = super::inverse_length(b);
    for k in 0..=n {
        let r = e.coeff(k, false)?.max_abs().max(e.coeff(k, true)?.max_abs());
        if r > tol * lam.powi(k as i32).max(1.0) {
            return Err(ExpansionError::ResidualNotVanishing { k, value: r });
        }
    }
    Ok(omega)
}
