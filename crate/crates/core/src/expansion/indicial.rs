//! The indicial operator `(x∂x + 1)(x∂x - m)` and its right inverse.
//!
//! Acting on `x^K` the operator multiplies by `P(K) = (K + 1)(K - m)`. At the
//! resonant exponent `K = m` the particular solution picks up a logarithm:
//! `(x∂x + 1)(x∂x - m)(x^m log x) = (m + 1) x^m`.

use crate::phg::PhgSeries;

use super::{ExpansionError, Result};

/// Indicial polynomial `P(K) = (K + 1)(K - m)`.
pub fn indicial_polynomial(k: i64, m: usize) -> f64 {
    ((k + 1) * (k - m as i64)) as f64
}

fn indicial_derivative(k: i64, m: usize) -> f64 {
    (2 * k + 1 - m as i64) as f64
}

/// Apply `(x∂x + 1)(x∂x - m)`.
pub fn apply_indicial(s: &PhgSeries, m: usize) -> Result<PhgSeries> {
    let t = s.x_dx().sub(&s.scale(m as f64))?;
    Ok(t.x_dx().add(&t)?)
}

/// Particular solution `w` of `(x∂x + 1)(x∂x - m) w = source`.
///
/// Plain terms `a x^K` map to `a x^K / P(K)`, except `K = m` which maps to
/// `a x^m log x / (m + 1)`. Log terms `b x^K log x` (`K ≠ m`) map to
/// `c x^K log x + d x^K` with `c P(K) = b`, `d P(K) + c P'(K) = 0`.
pub fn solve_indicial(source: &PhgSeries, m: usize) -> Result<PhgSeries> {
    let mut out = PhgSeries::zero(source.order(), source.m(), source.codim1());
    for (k, log, a) in source.terms() {
        if a.is_exact_zero() {
            continue;
        }
        let ki = k as i64;
        if !log {
            if k == m {
                out.add_term(k, true, &a.scale(1.0 / (m as f64 + 1.0)))?;
            } else {
                out.add_term(k, false, &a.scale(1.0 / indicial_polynomial(ki, m)))?;
            }
        } else {
            if k == m {
                return Err(ExpansionError::LogAtResonance(k));
            }
            let p = indicial_polynomial(ki, m);
            let c = a.scale(1.0 / p);
            let d = c.scale(-indicial_derivative(ki, m) / p);
            out.add_term(k, true, &c)?;
            out.add_term(k, false, &d)?;
        }
    }
    Ok(out)
}
