//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {value:.6e}, error {error:.3e} after {intervals} intervals")]
    NoConvergence { value: f64, error: f64, intervals: usize },
    #[error("non-finite integrand value at {0}")]
    NonFinite(f64),
}

/// Result of a quadrature with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        if !f1.is_finite() || !f2.is_finite() {
            return Err(QuadError::NonFinite(c - x));
        }
        rk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            rg += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((rk * h, ((rk - rg) * h).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol·|I|)` by global adaptive bisection.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature, QuadError> {
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    let max_panels = 4000;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(QuadError::NoConvergence { value: total, error: err, intervals: heap.len() });
        }
        let p = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval cannot be split further in floating point
            heap.push(p);
            return Err(QuadError::NoConvergence { value: total, error: err, intervals: heap.len() });
        }
        let (v1, e1) = gk15(&mut f, p.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, p.b)?;
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
    // recompute sums to shed accumulated cancellation
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Quadrature { value, error })
}

/// Integrate over `[a, b]` with geometric panels toward `a` (for integrands
/// with an integrable singularity or boundary layer at `a > 0`-scale).
pub fn integrate_graded(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature, QuadError> {
    if a <= 0.0 || b <= a {
        return integrate(f, a, b, abs_tol, rel_tol);
    }
    let decades = (b / a).log10().ceil().max(1.0) as usize;
    let ratio = (b / a).powf(1.0 / decades as f64);
    let mut out = Quadrature { value: 0.0, error: 0.0 };
    let mut lo = a;
    for i in 0..decades {
        let hi = if i + 1 == decades { b } else { lo * ratio };
        let q = integrate(&mut f, lo, hi, abs_tol / decades as f64, rel_tol)?;
        out.value += q.value;
        out.error += q.error;
        lo = hi;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x.powi(6) - 3.0 * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((q.value - (128.0 / 7.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn log_singularity() {
        // ∫_0^1 x log x = -1/4
        let q = integrate(|x| if x > 0.0 { x * x.ln() } else { 0.0 }, 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((q.value + 0.25).abs() < 1e-12);
        // ∫_0^1 log x = -1
        let q = integrate(|x| x.ln(), 0.0, 1.0, 1e-11, 0.0).unwrap();
        assert!((q.value + 1.0).abs() < 1e-10);
    }

    #[test]
    fn graded_power() {
        // ∫_{1e-4}^{1} x^{-2} = 1e4 - 1
        let q = integrate_graded(|x| x.powi(-2), 1e-4, 1.0, 1e-9, 1e-14).unwrap();
        assert!((q.value - 9999.0).abs() < 1e-8);
    }
}
