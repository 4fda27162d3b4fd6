//! Dormand–Prince 5(4) integrator with dense output and terminal events.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, h0: 1e-6, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct Step {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl Step {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Dense output inside the step.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        (0..r1.len()).map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])))).collect()
    }
}

/// Accepted steps plus the terminal event, if one fired.
#[derive(Debug, Clone)]
pub struct Solution {
    pub steps: Vec<Step>,
    pub t_end: f64,
    pub y_end: Vec<f64>,
    pub event: bool,
}

impl Solution {
    /// Dense evaluation anywhere in the integrated range (either direction).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let forward = self.steps.first().is_none_or(|s| s.h > 0.0);
        let idx = self.steps.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        let s = &self.steps[idx.min(self.steps.len() - 1)];
        s.eval(t)
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate `y' = f(t, y)` from `t0` toward `t_end`, stopping early at the
/// first sign change of `event(t, y)` (located on the dense output).
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
    mut event: Option<G>,
) -> Result<Solution, OdeError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
    G: FnMut(f64, &[f64]) -> f64,
{
    let dir = (t_end - t0).signum();
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = opts.h0.abs().min((t_end - t0).abs()) * dir;
    let mut k1 = f(t, &y);
    let mut steps = Vec::new();
    let mut g_prev = event.as_mut().map(|g| g(t, &y));
    let mut fac_old = 1e-4f64;

    for _ in 0..opts.max_steps {
        if (t_end - t) * dir <= 1e-13 * (t_end - t0).abs() {
            return Ok(Solution { steps, t_end: t, y_end: y, event: false });
        }
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < 1e-15 * t.abs().max(1e-300) {
            return Err(OdeError::StepUnderflow(t));
        }
        let mut k: Vec<Vec<f64>> = vec![k1.clone()];
        for s in 1..7 {
            let ys: Vec<f64> = (0..n).map(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>()).collect();
            k.push(f(t + C[s] * h, &ys));
        }
        let y1: Vec<f64> = (0..n).map(|i| y[i] + h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>()).collect();
        let err = ((0..n)
            .map(|i| {
                let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
                (e / sc).powi(2)
            })
            .sum::<f64>()
            / n as f64)
            .sqrt();
        if !err.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            // Lund stabilisation of the step-size controller
            let fac11 = err.max(1e-16).powf(0.17);
            let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            fac_old = err.max(1e-4);
            let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
            let rcont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                (0..n).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect(),
                (0..n).map(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect(),
            ];
            let step = Step { t0: t, h, rcont };
            if let (Some(g), Some(gp)) = (event.as_mut(), g_prev) {
                let g1 = g(t + h, &y1);
                if gp == 0.0 || gp.signum() != g1.signum() {
                    let te = locate_root(|tt| g(tt, &step.eval(tt)), t, t + h, gp, g1);
                    let ye = step.eval(te);
                    let mut cut = step.clone();
                    cut.h = h;
                    steps.push(cut);
                    return Ok(Solution { steps, t_end: te, y_end: ye, event: true });
                }
                g_prev = Some(g1);
            }
            steps.push(step);
            t += h;
            y = y1;
            k1 = k[6].clone();
            h /= fac;
            if h.abs() > opts.h_max {
                h = opts.h_max * dir;
            }
        } else {
            h /= (err.powf(0.2) / 0.9).min(10.0);
        }
    }
    Err(OdeError::TooManySteps(opts.max_steps))
}

/// Illinois-modified regula falsi on a bracketing interval.
fn locate_root(mut g: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = g(c);
        if fc == 0.0 || (b - a).abs() < 4.0 * f64::EPSILON * c.abs().max(1e-300) {
            return c;
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}
