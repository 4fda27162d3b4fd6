//! Truncated polyhomogeneous series in `x` with at most one power of `log x`.
//!
//! A [`PhgSeries`] stores terms `c_{k,t} x^k (log x)^t` for `0 <= k <= N`
//! and `t in {0, 1}`. Coefficients are either scalars or functions sampled
//! on a periodic boundary grid. Everything is immutable; operations return
//! new series.

use std::f64::consts::PI;
use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance used to tell a vanishing coefficient from a
/// nonzero one in parity queries.
pub const PARITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhgError {
    #[error("grid length mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("log-power overflow at order {k}: (log x)^2 is outside the tracked class")]
    LogOverflow { k: usize },
    #[error("leading coefficient must be strictly positive")]
    NonPositiveLeading,
    #[error("order {k} exceeds truncation order {order}")]
    OrderOutOfRange { k: usize, order: usize },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("cannot divide by x^{shift}: nonzero term at order {k}")]
    NegativeExponent { shift: usize, k: usize },
    #[error("log term at order 0 is not admissible here")]
    LogAtOrigin,
    #[error("malformed series: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, PhgError>;

/// A coefficient function `f_k(s)`: a constant or samples on the boundary grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Scalar(f64),
    Grid(Vec<f64>),
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::Scalar(0.0)
    }

    /// Grid length, or `None` for scalars.
    pub fn len(&self) -> Option<usize> {
        match self {
            Coefficient::Scalar(_) => None,
            Coefficient::Grid(v) => Some(v.len()),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Coefficient::Grid(_))
    }

    /// Value at grid index `i` (scalars are constant).
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Coefficient::Scalar(c) => *c,
            Coefficient::Grid(v) => v[i],
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Coefficient::Scalar(c) => c.abs(),
            Coefficient::Grid(v) => v.iter().fold(0.0, |a, b| a.max(b.abs())),
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Coefficient::Scalar(c) => *c,
            Coefficient::Grid(v) => v.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Coefficient::Scalar(c) => c.is_finite(),
            Coefficient::Grid(v) => v.iter().all(|c| c.is_finite()),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        match self {
            Coefficient::Scalar(c) => *c == 0.0,
            Coefficient::Grid(v) => v.iter().all(|c| *c == 0.0),
        }
    }

    /// Promote to a grid of length `p`.
    pub fn to_grid(&self, p: usize) -> Vec<f64> {
        match self {
            Coefficient::Scalar(c) => vec![*c; p],
            Coefficient::Grid(v) => v.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Coefficient {
        match self {
            Coefficient::Scalar(c) => Coefficient::Scalar(f(*c)),
            Coefficient::Grid(v) => Coefficient::Grid(v.iter().map(|c| f(*c)).collect()),
        }
    }

    /// Pointwise binary operation with scalar-to-grid promotion.
    pub fn zip_with(&self, other: &Coefficient, f: impl Fn(f64, f64) -> f64) -> Result<Coefficient> {
        use Coefficient::*;
        Ok(match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(f(*a, *b)),
            (Scalar(a), Grid(b)) => Grid(b.iter().map(|y| f(*a, *y)).collect()),
            (Grid(a), Scalar(b)) => Grid(a.iter().map(|y| f(*y, *b)).collect()),
            (Grid(a), Grid(b)) => {
                if a.len() != b.len() {
                    return Err(PhgError::GridMismatch { left: a.len(), right: b.len() });
                }
                Grid(a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
            }
        })
    }

    pub fn add(&self, other: &Coefficient) -> Result<Coefficient> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Coefficient) -> Result<Coefficient> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Coefficient) -> Result<Coefficient> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn div(&self, other: &Coefficient) -> Result<Coefficient> {
        self.zip_with(other, |a, b| a / b)
    }

    pub fn scale(&self, c: f64) -> Coefficient {
        self.map(|a| a * c)
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Scalar(c)
    }
}

impl From<Vec<f64>> for Coefficient {
    fn from(v: Vec<f64>) -> Self {
        Coefficient::Grid(v)
    }
}

/// Periodic stencil used for tangential derivatives of grid coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    #[default]
    Spectral,
    FourthOrder,
}

/// Tangential differentiation on a uniform periodic grid of the given period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangential {
    pub period: f64,
    pub stencil: Stencil,
}

impl Tangential {
    pub fn new(period: f64, stencil: Stencil) -> Self {
        Self { period, stencil }
    }

    /// Derivative of periodic samples `f(s_i)`, `s_i = i * period / P`.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        match self.stencil {
            Stencil::Spectral => spectral_derivative(f, self.period),
            Stencil::FourthOrder => fd4_derivative(f, self.period),
        }
    }

    pub fn apply(&self, c: &Coefficient) -> Coefficient {
        match c {
            // constants have zero tangential derivative
            Coefficient::Scalar(_) => Coefficient::Scalar(0.0),
            Coefficient::Grid(v) => Coefficient::Grid(self.derivative(v)),
        }
    }
}

fn spectral_derivative(f: &[f64], period: f64) -> Vec<f64> {
    let p = f.len();
    if p == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let w = 2.0 * PI / period;
    for (j, c) in buf.iter_mut().enumerate() {
        let k = if j <= p / 2 { j as f64 } else { j as f64 - p as f64 };
        if p.is_multiple_of(2) && j == p / 2 {
            // the Nyquist mode has no well-defined odd derivative
            *c = Complex::new(0.0, 0.0);
        } else {
            *c *= Complex::new(0.0, w * k);
        }
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / p as f64).collect()
}

fn fd4_derivative(f: &[f64], period: f64) -> Vec<f64> {
    let p = f.len();
    let h = period / p as f64;
    (0..p)
        .map(|i| {
            let at = |o: isize| f[((i as isize + o).rem_euclid(p as isize)) as usize];
            (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h)
        })
        .collect()
}

/// Value of the parity functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Zero,
    Even,
    Odd,
    Undefined,
}

impl Parity {
    pub fn as_int(self) -> Option<i32> {
        match self {
            Parity::Zero => Some(0),
            Parity::Even => Some(1),
            Parity::Odd => Some(-1),
            Parity::Undefined => None,
        }
    }
}

impl Parity {
    /// Agreement in the loose sense where a vanishing head (`Zero`) is
    /// compatible with either definite parity.
    pub fn is_compatible_with(self, expected: Parity) -> bool {
        self == expected || (self == Parity::Zero && matches!(expected, Parity::Even | Parity::Odd))
    }

    /// Parity of a product of definite parities.
    pub fn times(self, other: Parity) -> Parity {
        match (self.as_int(), other.as_int()) {
            (Some(a), Some(b)) => match a * b {
                0 => Parity::Zero,
                1 => Parity::Even,
                _ => Parity::Odd,
            },
            _ => Parity::Undefined,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_int() {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "undefined"),
        }
    }
}

/// Truncated polyhomogeneous expansion `sum c_{k,t} x^k (log x)^t + O(x^{N+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhgSeries {
    order: usize,
    m: usize,
    codim1: bool,
    plain: Vec<Option<Coefficient>>,
    log: Vec<Option<Coefficient>>,
}

impl PhgSeries {
    /// The zero series with the given truncation order and tags.
    pub fn zero(order: usize, m: usize, codim1: bool) -> Self {
        Self { order, m, codim1, plain: vec![None; order + 1], log: vec![None; order + 1] }
    }

    pub fn constant(c: impl Into<Coefficient>, order: usize, m: usize, codim1: bool) -> Self {
        let mut s = Self::zero(order, m, codim1);
        s.plain[0] = Some(c.into());
        s
    }

    /// `c x^k` (or `c x^k log x`), zero if `k > order`.
    pub fn monomial(c: impl Into<Coefficient>, k: usize, log: bool, order: usize, m: usize, codim1: bool) -> Self {
        let mut s = Self::zero(order, m, codim1);
        if k <= order {
            s.slot_mut(log)[k] = Some(c.into());
        }
        s
    }

    /// Build from `(k, log, coefficient)` triples; repeated slots are summed.
    pub fn from_terms(
        order: usize,
        m: usize,
        codim1: bool,
        terms: impl IntoIterator<Item = (usize, bool, Coefficient)>,
    ) -> Result<Self> {
        let mut s = Self::zero(order, m, codim1);
        for (k, log, c) in terms {
            s.add_term(k, log, &c)?;
        }
        s.check_grids()?;
        Ok(s)
    }

    /// Scalar series from plain coefficients `c_0, c_1, ...`.
    pub fn from_scalars(coeffs: &[f64], order: usize, m: usize, codim1: bool) -> Self {
        let mut s = Self::zero(order, m, codim1);
        for (k, &c) in coeffs.iter().enumerate().take(order + 1) {
            if c != 0.0 {
                s.plain[k] = Some(Coefficient::Scalar(c));
            }
        }
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn codim1(&self) -> bool {
        self.codim1
    }

    /// Same terms, different parity tags.
    pub fn with_tags(mut self, m: usize, codim1: bool) -> Self {
        self.m = m;
        self.codim1 = codim1;
        self
    }

    fn slot(&self, log: bool) -> &Vec<Option<Coefficient>> {
        if log {
            &self.log
        } else {
            &self.plain
        }
    }

    fn slot_mut(&mut self, log: bool) -> &mut Vec<Option<Coefficient>> {
        if log {
            &mut self.log
        } else {
            &mut self.plain
        }
    }

    /// Stored coefficient, if any.
    pub fn get(&self, k: usize, log: bool) -> Option<&Coefficient> {
        self.slot(log).get(k).and_then(|c| c.as_ref())
    }

    /// Coefficient of `x^k` (or `x^k log x`); absent terms are exactly zero.
    pub fn coeff(&self, k: usize, log: bool) -> Result<Coefficient> {
        if k > self.order {
            return Err(PhgError::OrderOutOfRange { k, order: self.order });
        }
        Ok(self.get(k, log).cloned().unwrap_or_else(Coefficient::zero))
    }

    /// Overwrite one coefficient.
    pub fn set(&mut self, k: usize, log: bool, c: Coefficient) -> Result<()> {
        if k > self.order {
            return Err(PhgError::OrderOutOfRange { k, order: self.order });
        }
        self.slot_mut(log)[k] = Some(c);
        self.check_grids()
    }

    /// Add `c` into one slot; terms beyond the truncation order are dropped.
    pub fn add_term(&mut self, k: usize, log: bool, c: &Coefficient) -> Result<()> {
        if k > self.order {
            return Ok(());
        }
        let slot = &mut self.slot_mut(log)[k];
        *slot = Some(match slot.take() {
            Some(old) => old.add(c)?,
            None => c.clone(),
        });
        Ok(())
    }

    /// Iterate over stored terms as `(k, log, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, bool, &Coefficient)> {
        let plain = self.plain.iter().enumerate().filter_map(|(k, c)| c.as_ref().map(|c| (k, false, c)));
        let log = self.log.iter().enumerate().filter_map(|(k, c)| c.as_ref().map(|c| (k, true, c)));
        plain.chain(log)
    }

    /// Common grid length of the coefficients (None if all scalar).
    pub fn grid_len(&self) -> Option<usize> {
        self.terms().find_map(|(_, _, c)| c.len())
    }

    fn check_grids(&self) -> Result<()> {
        let mut p = None;
        for (_, _, c) in self.terms() {
            if let Some(l) = c.len() {
                match p {
                    None => p = Some(l),
                    Some(q) if q != l => return Err(PhgError::GridMismatch { left: q, right: l }),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn check_finite(self, op: &'static str) -> Result<Self> {
        if self.terms().all(|(_, _, c)| c.is_finite()) {
            Ok(self)
        } else {
            Err(PhgError::NonFinite(op))
        }
    }

    /// Largest coefficient magnitude over all stored terms.
    pub fn max_abs(&self) -> f64 {
        self.terms().fold(0.0, |a, (_, _, c)| a.max(c.max_abs()))
    }

    pub fn has_log(&self) -> bool {
        self.log.iter().any(|c| c.as_ref().is_some_and(|c| !c.is_exact_zero()))
    }

    /// Lowest order carrying a nonzero log coefficient.
    pub fn first_log_order(&self, tol: f64) -> Option<usize> {
        self.log.iter().position(|c| c.as_ref().is_some_and(|c| c.max_abs() > tol))
    }

    /// Same series, truncated to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            order,
            m: self.m,
            codim1: self.codim1,
            plain: self.plain[..=order].to_vec(),
            log: self.log[..=order].to_vec(),
        }
    }

    /// Change the truncation order. Raising it declares every term above the
    /// current order to be exactly zero (used for polynomial data such as a
    /// finite Taylor jet); lowering it truncates.
    pub fn with_order(&self, order: usize) -> Self {
        if order <= self.order {
            return self.truncate(order);
        }
        let mut out = self.clone();
        out.order = order;
        out.plain.resize(order + 1, None);
        out.log.resize(order + 1, None);
        out
    }

    /// Lowest order with a coefficient above `tol` (None for the zero series).
    pub fn valuation(&self, tol: f64) -> Option<usize> {
        (0..=self.order).find(|&k| {
            self.get(k, false).is_some_and(|c| c.max_abs() > tol) || self.get(k, true).is_some_and(|c| c.max_abs() > tol)
        })
    }

    fn binary(&self, other: &Self, f: impl Fn(&Coefficient, &Coefficient) -> Result<Coefficient>) -> Result<Self> {
        let order = self.order.min(other.order);
        let mut out = Self::zero(order, self.m, self.codim1);
        for log in [false, true] {
            for k in 0..=order {
                let a = self.get(k, log);
                let b = other.get(k, log);
                let c = match (a, b) {
                    (None, None) => None,
                    (Some(a), None) => Some(f(a, &Coefficient::zero())?),
                    (None, Some(b)) => Some(f(&Coefficient::zero(), b)?),
                    (Some(a), Some(b)) => Some(f(a, b)?),
                };
                out.slot_mut(log)[k] = c;
            }
        }
        Ok(out)
    }

    /// Termwise sum; order is the smaller of the two.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, |a, b| a.add(b))?.check_finite("add")
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(other, |a, b| a.sub(b))?.check_finite("sub")
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_coeffs(|a| a.scale(c))
    }

    fn map_coeffs(&self, f: impl Fn(&Coefficient) -> Coefficient) -> Self {
        let mut out = self.clone();
        for slot in out.plain.iter_mut().chain(out.log.iter_mut()) {
            if let Some(c) = slot.as_mut() {
                *c = f(c);
            }
        }
        out
    }

    /// Multiply every coefficient pointwise by a coefficient function.
    pub fn mul_coeff(&self, c: &Coefficient) -> Result<Self> {
        let mut out = self.clone();
        for slot in out.plain.iter_mut().chain(out.log.iter_mut()) {
            if let Some(a) = slot.as_mut() {
                *a = a.mul(c)?;
            }
        }
        out.check_finite("mul_coeff")
    }

    /// Add a coefficient function to the constant term.
    pub fn add_const(&self, c: &Coefficient) -> Result<Self> {
        let mut out = self.clone();
        out.add_term(0, false, c)?;
        out.check_grids()?;
        Ok(out)
    }

    /// Cauchy product with log bookkeeping, truncated to `min(N_a, N_b)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let order = self.order.min(other.order);
        let mut out = Self::zero(order, self.m, self.codim1);
        for (ka, la, ca) in self.terms() {
            if ka > order {
                continue;
            }
            for (kb, lb, cb) in other.terms() {
                let k = ka + kb;
                if k > order {
                    continue;
                }
                let prod = ca.mul(cb)?;
                match (la, lb) {
                    (true, true) => {
                        if prod.max_abs() > 0.0 {
                            return Err(PhgError::LogOverflow { k });
                        }
                    }
                    _ => out.add_term(k, la || lb, &prod)?,
                }
            }
        }
        out.check_finite("mul")
    }

    /// Multiply by `x^j`; the known order grows by `j`.
    pub fn shift_up(&self, j: usize) -> Self {
        let order = self.order + j;
        let mut out = Self::zero(order, self.m, self.codim1);
        for (k, log, c) in self.terms() {
            out.slot_mut(log)[k + j] = Some(c.clone());
        }
        out
    }

    /// Divide by `x^j`; every stored term below order `j` must vanish exactly.
    pub fn shift_down(&self, j: usize) -> Result<Self> {
        if j > self.order {
            return Err(PhgError::OrderOutOfRange { k: j, order: self.order });
        }
        for (k, _, c) in self.terms() {
            if k < j && !c.is_exact_zero() {
                return Err(PhgError::NegativeExponent { shift: j, k });
            }
        }
        let order = self.order - j;
        let mut out = Self::zero(order, self.m, self.codim1);
        for (k, log, c) in self.terms() {
            if k >= j {
                out.slot_mut(log)[k - j] = Some(c.clone());
            }
        }
        Ok(out)
    }

    /// `x d/dx`: `x^k -> k x^k`, `x^k log x -> k x^k log x + x^k`.
    pub fn x_dx(&self) -> Self {
        let mut out = Self::zero(self.order, self.m, self.codim1);
        for (k, log, c) in self.terms() {
            if k > 0 {
                // add_term cannot fail: every coefficient shares the grid length
                let _ = out.add_term(k, log, &c.scale(k as f64));
            }
            if log {
                let _ = out.add_term(k, false, c);
            }
        }
        out
    }

    /// `d/dx`; the known order drops by one.
    pub fn dx(&self) -> Result<Self> {
        if self.get(0, true).is_some_and(|c| !c.is_exact_zero()) {
            return Err(PhgError::LogAtOrigin);
        }
        if self.order == 0 {
            return Ok(Self::zero(0, self.m, self.codim1));
        }
        let mut d = self.x_dx();
        d.plain[0] = None;
        d.shift_down(1)
    }

    /// Termwise tangential derivative of the coefficient functions.
    pub fn d_s(&self, tangential: &Tangential) -> Self {
        self.map_coeffs(|c| tangential.apply(c))
    }

    fn split_leading(&self) -> Result<(Coefficient, Self)> {
        if self.get(0, true).is_some_and(|c| !c.is_exact_zero()) {
            return Err(PhgError::LogAtOrigin);
        }
        let a0 = self.coeff(0, false)?;
        if !(a0.min_value() > 0.0) {
            return Err(PhgError::NonPositiveLeading);
        }
        let inv = a0.map(|v| 1.0 / v);
        let mut b = self.mul_coeff(&inv)?;
        b.plain[0] = None;
        Ok((a0, b))
    }

    /// `sum_j w_j b^j` through the truncation order, for `b = O(x)`.
    fn compose(b: &Self, weights: impl Fn(usize) -> f64) -> Result<Self> {
        let mut out = Self::constant(weights(0), b.order, b.m, b.codim1);
        let mut power = Self::constant(1.0, b.order, b.m, b.codim1);
        for j in 1..=b.order {
            power = power.mul(b)?;
            if power.max_abs() == 0.0 {
                break;
            }
            out = out.add(&power.scale(weights(j)))?;
        }
        Ok(out)
    }

    /// Real power `a^alpha` for a series with positive leading coefficient.
    pub fn powf(&self, alpha: f64) -> Result<Self> {
        let (a0, b) = self.split_leading()?;
        let series = Self::compose(&b, |j| binomial(alpha, j))?;
        series.mul_coeff(&a0.map(|v| v.powf(alpha)))?.check_finite("powf")
    }

    /// Multiplicative inverse; `mul(a, invert(a)) = 1 + O(x^{N+1})`.
    pub fn invert(&self) -> Result<Self> {
        let (a0, b) = self.split_leading()?;
        let series = Self::compose(&b, |j| if j % 2 == 0 { 1.0 } else { -1.0 })?;
        series.mul_coeff(&a0.map(|v| 1.0 / v))?.check_finite("invert")
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.powf(0.5)
    }

    /// `exp(a)` for a series whose constant term is plain.
    pub fn exp(&self) -> Result<Self> {
        if self.get(0, true).is_some_and(|c| !c.is_exact_zero()) {
            return Err(PhgError::LogAtOrigin);
        }
        let a0 = self.coeff(0, false)?;
        let mut b = self.clone();
        b.plain[0] = None;
        let series = Self::compose(&b, |j| 1.0 / factorial(j))?;
        series.mul_coeff(&a0.map(f64::exp))?.check_finite("exp")
    }

    /// Evaluate at height `x` and grid index `i` (scalars ignore `i`).
    pub fn eval_at(&self, i: usize, x: f64) -> f64 {
        let lx = if x > 0.0 { x.ln() } else { 0.0 };
        let mut acc = 0.0;
        for (k, log, c) in self.terms() {
            let xk = x.powi(k as i32);
            acc += c.at(i) * if log { xk * lx } else { xk };
        }
        acc
    }

    /// Evaluate a scalar (or grid-index-0) series at height `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_at(0, x)
    }

    /// The parity functional with a relative zero tolerance.
    ///
    /// Terms are inspected through order `m` (`m` even), through `x^m log x`
    /// when the codim-1 flag marks `m = n` even, and through `x^{m+1} log x`
    /// for `m` odd. Log terms count with the parity of their power of `x`.
    pub fn parity(&self, tol: f64) -> Parity {
        let m = self.m;
        let (cut, log_cut) = if m % 2 == 1 {
            (m + 1, Some(m + 1))
        } else if self.codim1 {
            (m, Some(m))
        } else {
            (m, None)
        };
        self.classify(cut, log_cut, tol)
    }

    /// Parity of every stored term through order `k_max` (plain and log),
    /// a stricter check than [`PhgSeries::parity`] for series whose leading
    /// terms sit above the dimension cutoff.
    pub fn parity_through(&self, k_max: usize, tol: f64) -> Parity {
        self.classify(k_max, Some(k_max), tol)
    }

    fn classify(&self, cut: usize, log_cut: Option<usize>, tol: f64) -> Parity {
        let scale = self.max_abs();
        let thresh = tol * scale.max(f64::MIN_POSITIVE);
        let mut even = false;
        let mut odd = false;
        for (k, log, c) in self.terms() {
            let in_range = if log { log_cut.is_some_and(|lc| k <= lc) } else { k <= cut };
            if !in_range || c.max_abs() <= thresh {
                continue;
            }
            if k % 2 == 0 {
                even = true;
            } else {
                odd = true;
            }
        }
        match (even, odd) {
            (false, false) => Parity::Zero,
            (true, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Undefined,
        }
    }

    pub fn to_json(&self) -> SeriesJson {
        let mut terms: Vec<TermJson> = self
            .terms()
            .map(|(k, log, c)| TermJson {
                k,
                log,
                coeff: match c {
                    Coefficient::Scalar(v) => CoeffJson::Scalar(*v),
                    Coefficient::Grid(v) => CoeffJson::Grid(v.clone()),
                },
            })
            .collect();
        terms.sort_by_key(|t| (t.k, t.log));
        SeriesJson { order: self.order, m: self.m, codim1: self.codim1, terms }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        let terms = j.terms.iter().map(|t| {
            let c = match &t.coeff {
                CoeffJson::Scalar(v) => Coefficient::Scalar(*v),
                CoeffJson::Grid(v) => Coefficient::Grid(v.clone()),
            };
            (t.k, t.log, c)
        });
        for t in &j.terms {
            if t.k > j.order {
                return Err(PhgError::Malformed(format!("term order {} above truncation {}", t.k, j.order)));
            }
        }
        Self::from_terms(j.order, j.m, j.codim1, terms)
    }
}

fn binomial(alpha: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (alpha - i as f64) / (i as f64 + 1.0))
}

fn factorial(j: usize) -> f64 {
    (1..=j).fold(1.0, |acc, i| acc * i as f64)
}

/// JSON form of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub order: usize,
    pub m: usize,
    pub codim1: bool,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub k: usize,
    pub log: bool,
    pub coeff: CoeffJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffJson {
    Scalar(f64),
    Grid(Vec<f64>),
}

impl Serialize for PhgSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhgSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SeriesJson::deserialize(d)?;
        PhgSeries::from_json(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[f64], n: usize) -> PhgSeries {
        PhgSeries::from_scalars(c, n, 2, false)
    }

    fn close(a: &PhgSeries, b: &PhgSeries, tol: f64) -> bool {
        a.sub(b).unwrap().max_abs() <= tol
    }

    #[test]
    fn additive_inverse_is_zero() {
        let a = s(&[0.0, 0.0, 1.0], 4);
        assert_eq!(a.add(&a.neg()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn disjoint_supports_add() {
        let a = s(&[1.0, 0.0, 1.0], 4);
        let b = s(&[0.0, 0.0, 0.0, 1.0], 4);
        let c = a.add(&b).unwrap();
        assert_eq!(c.coeff(3, false).unwrap(), Coefficient::Scalar(1.0));
        assert_eq!(c.coeff(2, false).unwrap(), Coefficient::Scalar(1.0));
    }

    #[test]
    fn grid_sum_matches_pointwise_loop() {
        let p = 64;
        let f: Vec<f64> = (0..p).map(|i| (i as f64).sin()).collect();
        let g: Vec<f64> = (0..p).map(|i| (i as f64 * 0.3).cos()).collect();
        let a = PhgSeries::monomial(f.clone(), 2, false, 4, 2, false);
        let b = PhgSeries::monomial(g.clone(), 2, false, 4, 2, false);
        let c = a.add(&b).unwrap().coeff(2, false).unwrap();
        for i in 0..p {
            assert_eq!(c.at(i), f[i] + g[i]);
        }
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = PhgSeries::monomial(vec![1.0; 4], 1, false, 3, 2, false);
        let b = PhgSeries::monomial(vec![1.0; 5], 1, false, 3, 2, false);
        assert!(matches!(a.add(&b), Err(PhgError::GridMismatch { .. })));
    }

    #[test]
    fn product_of_conjugates() {
        let c = s(&[1.0, 0.0, 1.0], 4).mul(&s(&[1.0, 0.0, -1.0], 4)).unwrap();
        assert!(close(&c, &s(&[1.0, 0.0, 0.0, 0.0, -1.0], 4), 0.0));
    }

    #[test]
    fn log_exponents_add() {
        let a = PhgSeries::monomial(1.0, 2, true, 6, 2, false);
        let c = a.mul(&s(&[0.0, 1.0], 6)).unwrap();
        assert_eq!(c.coeff(3, true).unwrap(), Coefficient::Scalar(1.0));
        assert_eq!(c.coeff(3, false).unwrap(), Coefficient::Scalar(0.0));
    }

    #[test]
    fn log_squared_is_rejected() {
        let a = PhgSeries::monomial(1.0, 2, true, 6, 2, false);
        assert!(matches!(a.mul(&a), Err(PhgError::LogOverflow { k: 4 })));
        // beyond the truncation order it is simply dropped
        let b = PhgSeries::monomial(1.0, 4, true, 6, 2, false);
        assert!(b.mul(&b).is_ok());
    }

    #[test]
    fn geometric_inverse() {
        let inv = s(&[1.0, 0.0, 1.0], 4).invert().unwrap();
        assert!(close(&inv, &s(&[1.0, 0.0, -1.0, 0.0, 1.0], 4), 1e-15));
    }

    #[test]
    fn sqrt_taylor() {
        assert!(close(&s(&[1.0], 4).sqrt().unwrap(), &s(&[1.0], 4), 0.0));
        let r = s(&[1.0, 0.0, -1.0], 6).sqrt().unwrap();
        let expect = s(&[1.0, 0.0, -0.5, 0.0, -0.125, 0.0, -0.0625], 6);
        assert!(close(&r, &expect, 1e-15));
    }

    #[test]
    fn nonpositive_leading_rejected() {
        assert_eq!(s(&[0.0, 1.0], 3).invert().unwrap_err(), PhgError::NonPositiveLeading);
        assert_eq!(s(&[-1.0], 3).sqrt().unwrap_err(), PhgError::NonPositiveLeading);
    }

    #[test]
    fn x_dx_rules() {
        assert!(close(&s(&[0.0, 0.0, 0.0, 1.0], 4).x_dx(), &s(&[0.0, 0.0, 0.0, 3.0], 4), 0.0));
        assert_eq!(s(&[5.0], 4).x_dx().max_abs(), 0.0);
        let l = PhgSeries::monomial(1.0, 2, true, 4, 2, false).x_dx();
        assert_eq!(l.coeff(2, true).unwrap(), Coefficient::Scalar(2.0));
        assert_eq!(l.coeff(2, false).unwrap(), Coefficient::Scalar(1.0));
    }

    #[test]
    fn exp_of_small_series() {
        // exp(x) through x^4
        let e = s(&[0.0, 1.0], 4).exp().unwrap();
        let expect = s(&[1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0], 4);
        assert!(close(&e, &expect, 1e-15));
    }

    #[test]
    fn spectral_derivatives_of_sine() {
        let p = 128;
        let period = 2.0 * PI;
        let t = Tangential::new(period, Stencil::Spectral);
        let f: Vec<f64> = (0..p).map(|i| (period * i as f64 / p as f64).sin()).collect();
        let d = t.derivative(&f);
        let dd = t.derivative(&d);
        for i in 0..p {
            let s = period * i as f64 / p as f64;
            assert!((d[i] - s.cos()).abs() < 1e-8);
            assert!((dd[i] + s.sin()).abs() < 1e-6);
        }
        let zero = t.derivative(&vec![3.0; p]);
        assert!(zero.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn fourth_order_fallback_converges() {
        let err = |p: usize| {
            let t = Tangential::new(2.0 * PI, Stencil::FourthOrder);
            let f: Vec<f64> = (0..p).map(|i| (2.0 * PI * i as f64 / p as f64).sin()).collect();
            let d = t.derivative(&f);
            (0..p).map(|i| (d[i] - (2.0 * PI * i as f64 / p as f64).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn coeff_queries() {
        let a = s(&[1.0, 0.0, 3.0], 4);
        assert_eq!(a.coeff(2, false).unwrap(), Coefficient::Scalar(3.0));
        assert!(matches!(a.coeff(5, false), Err(PhgError::OrderOutOfRange { .. })));
        let l = PhgSeries::monomial(1.0, 2, true, 4, 2, false);
        assert_eq!(l.coeff(2, true).unwrap(), Coefficient::Scalar(1.0));
    }

    #[test]
    fn parity_table() {
        let m4 = |c: &[f64]| PhgSeries::from_scalars(c, 6, 4, false);
        assert_eq!(m4(&[0.0, 0.0, 1.0, 0.0, 1.0]).parity(PARITY_TOL), Parity::Even);
        assert_eq!(m4(&[0.0, 1.0, 0.0, 1.0]).parity(PARITY_TOL), Parity::Odd);
        assert_eq!(m4(&[0.0, 0.0, 1.0, 1.0]).parity(PARITY_TOL), Parity::Undefined);
        assert_eq!(m4(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).parity(PARITY_TOL), Parity::Zero);
        // m = 3: inspected through x^4 log x
        let mut odd_m = PhgSeries::from_scalars(&[1.0, 0.0, 1.0], 6, 3, true);
        odd_m.set(4, true, Coefficient::Scalar(2.0)).unwrap();
        assert_eq!(odd_m.parity(PARITY_TOL), Parity::Even);
        odd_m.set(3, false, Coefficient::Scalar(1.0)).unwrap();
        assert_eq!(odd_m.parity(PARITY_TOL), Parity::Undefined);
    }

    #[test]
    fn json_round_trip() {
        let mut a = PhgSeries::from_terms(
            5,
            3,
            true,
            [(2, false, Coefficient::Grid(vec![1.0, 2.0])), (4, true, Coefficient::Scalar(-0.5))],
        )
        .unwrap();
        a.set(0, false, Coefficient::Scalar(1.0)).unwrap();
        let text = serde_json::to_string(&a).unwrap();
        let back: PhgSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
        assert!(text.contains("\"order\":5"));
    }
}
