//! Discretized boundary geometry in `R^n = {x = 0}`.
//!
//! Two modes are supported: closed curves (`n = 2, 3`) resampled to uniform
//! arclength with a rotation-minimizing normal frame, and round spheres
//! `S^{n-1}(R)` in rotationally symmetric (scalar) mode.
//!
//! Sign convention: boundary normals point outward, so a circle of radius
//! `R` has curvature component `-1/R` on its outward normal.

use std::f64::consts::PI;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phg::{Coefficient, Stencil, Tangential};

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("need at least 16 samples, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate curve: {0}")]
    Degenerate(String),
    #[error("self-intersection between segments {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("curves are supported in R^2 and R^3 only (got R^{0})")]
    UnsupportedDimension(usize),
    #[error("inconsistent point dimensions")]
    Ragged,
    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("grid coefficient given for a round sphere (scalars only)")]
    GridOnSphere,
    #[error("invalid sphere parameters: {0}")]
    InvalidSphere(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, BoundaryError>;

/// Area of the unit sphere `S^{d}` in `R^{d+1}`.
pub fn unit_sphere_area(d: usize) -> f64 {
    // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2)
    2.0 * PI.powf((d as f64 + 1.0) / 2.0) / gamma_half((d + 1) as u32)
}

/// `Gamma(k/2)` for positive integers `k`.
fn gamma_half(k: u32) -> f64 {
    match k {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// Closed curve sampled at uniform arclength with a normal frame.
#[derive(Debug, Clone)]
pub struct Curve {
    /// Ambient boundary dimension `n` (the curve lives in `R^n`).
    pub n: usize,
    pub length: f64,
    pub points: Vec<Vec<f64>>,
    pub tangent: Vec<Vec<f64>>,
    /// `normals[i][j]`: normal `N_i` at sample `j`.
    pub normals: Vec<Vec<Vec<f64>>>,
    /// `kappa[i][j] = <T'(s_j), N_i(s_j)>`.
    pub kappa: Vec<Vec<f64>>,
    /// Constant normal-connection rate: `N_1' = -k_1 T + tau N_2`.
    pub tau: f64,
    pub stencil: Stencil,
}

impl Curve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn codim(&self) -> usize {
        self.n - 1
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.len() as f64
    }

    pub fn arclength(&self, j: usize) -> f64 {
        self.spacing() * j as f64
    }

    pub fn tangential(&self) -> Tangential {
        Tangential::new(self.length, self.stencil)
    }
}

/// Round sphere `S^{n-1}(R) ⊂ R^n` handled through rotationally invariant scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSphere {
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: usize,
}

impl RoundSphere {
    pub fn new(radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(BoundaryError::InvalidSphere(format!("radius {radius}")));
        }
        if n < 2 {
            return Err(BoundaryError::InvalidSphere(format!("dimension n = {n}")));
        }
        Ok(Self { radius, n })
    }

    pub fn volume(&self) -> f64 {
        unit_sphere_area(self.n - 1) * self.radius.powi(self.n as i32 - 1)
    }
}

#[derive(Debug, Clone)]
pub enum BoundaryManifold {
    Curve(Curve),
    RoundSphere(RoundSphere),
}

/// Normal-bundle valued data: one coefficient per normal direction.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    pub components: Vec<Coefficient>,
}

impl NormalField {
    pub fn zero(b: &BoundaryManifold) -> Self {
        Self { components: vec![Coefficient::Scalar(0.0); b.codim()] }
    }

    pub fn scalar(c: f64) -> Self {
        Self { components: vec![Coefficient::Scalar(c)] }
    }
}

impl BoundaryManifold {
    pub fn sphere(radius: f64, n: usize) -> Result<Self> {
        Ok(BoundaryManifold::RoundSphere(RoundSphere::new(radius, n)?))
    }

    /// Circle of radius `r` centred at the origin of `R^n`, in the first two axes.
    pub fn circle(r: f64, n: usize, p: usize) -> Result<Self> {
        let pts = (0..p)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / p as f64;
                let mut v = vec![0.0; n];
                v[0] = r * t.cos();
                v[1] = r * t.sin();
                v
            })
            .collect::<Vec<_>>();
        build_curve(&pts, Stencil::Spectral)
    }

    /// Ellipse with semi-axes `a`, `b` in the first two axes of `R^n`.
    pub fn ellipse(a: f64, b: f64, n: usize, p: usize) -> Result<Self> {
        let pts = (0..p)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / p as f64;
                let mut v = vec![0.0; n];
                v[0] = a * t.cos();
                v[1] = b * t.sin();
                v
            })
            .collect::<Vec<_>>();
        build_curve(&pts, Stencil::Spectral)
    }

    /// Ambient boundary dimension `n`.
    pub fn n(&self) -> usize {
        match self {
            BoundaryManifold::Curve(c) => c.n,
            BoundaryManifold::RoundSphere(s) => s.n,
        }
    }

    /// Dimension of the filling minimal submanifold, `dim(γ) + 1`.
    pub fn m(&self) -> usize {
        match self {
            BoundaryManifold::Curve(_) => 2,
            BoundaryManifold::RoundSphere(s) => s.n,
        }
    }

    pub fn codim(&self) -> usize {
        match self {
            BoundaryManifold::Curve(c) => c.codim(),
            BoundaryManifold::RoundSphere(_) => 1,
        }
    }

    /// Number of grid samples (None in symmetric mode).
    pub fn grid_len(&self) -> Option<usize> {
        match self {
            BoundaryManifold::Curve(c) => Some(c.len()),
            BoundaryManifold::RoundSphere(_) => None,
        }
    }

    /// Total length / volume of the boundary.
    pub fn volume(&self) -> f64 {
        match self {
            BoundaryManifold::Curve(c) => c.length,
            BoundaryManifold::RoundSphere(s) => s.volume(),
        }
    }

    /// Mean curvature vector of `γ ⊂ R^n` in the stored (outward) frame.
    pub fn mean_curvature(&self) -> NormalField {
        match self {
            BoundaryManifold::Curve(c) => {
                NormalField { components: c.kappa.iter().map(|k| Coefficient::Grid(k.clone())).collect() }
            }
            BoundaryManifold::RoundSphere(s) => NormalField::scalar(-(s.n as f64 - 1.0) / s.radius),
        }
    }

    fn check(&self, f: &Coefficient) -> Result<()> {
        match (self, f) {
            (BoundaryManifold::Curve(c), Coefficient::Grid(v)) if v.len() != c.len() => {
                Err(BoundaryError::GridMismatch { expected: c.len(), got: v.len() })
            }
            (BoundaryManifold::RoundSphere(_), Coefficient::Grid(_)) => Err(BoundaryError::GridOnSphere),
            _ => Ok(()),
        }
    }

    /// `∫_γ f dA_γ` with the stored quadrature.
    pub fn integrate(&self, f: &Coefficient) -> Result<f64> {
        self.check(f)?;
        Ok(match (self, f) {
            (BoundaryManifold::Curve(c), Coefficient::Grid(v)) => c.spacing() * v.iter().sum::<f64>(),
            (_, Coefficient::Scalar(a)) => a * self.volume(),
            _ => unreachable!("checked above"),
        })
    }

    pub fn l2_inner(&self, f: &Coefficient, g: &Coefficient) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let prod = f.mul(g).map_err(|_| BoundaryError::Ragged)?;
        self.integrate(&prod)
    }

    pub fn tangential(&self) -> Option<Tangential> {
        match self {
            BoundaryManifold::Curve(c) => Some(c.tangential()),
            BoundaryManifold::RoundSphere(_) => None,
        }
    }

    pub fn report(&self) -> BoundaryReport {
        match self {
            BoundaryManifold::Curve(c) => {
                let k0 = &c.kappa[0];
                BoundaryReport {
                    mode: "curve".into(),
                    n: c.n,
                    samples: Some(c.len()),
                    volume: c.length,
                    curvature_min: k0.iter().cloned().fold(f64::INFINITY, f64::min),
                    curvature_max: k0.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    twist: Some(c.tau),
                }
            }
            BoundaryManifold::RoundSphere(s) => {
                let h = -(s.n as f64 - 1.0) / s.radius;
                BoundaryReport {
                    mode: "round_sphere".into(),
                    n: s.n,
                    samples: None,
                    volume: s.volume(),
                    curvature_min: h,
                    curvature_max: h,
                    twist: None,
                }
            }
        }
    }
}

/// Summary emitted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundaryReport {
    pub mode: String,
    pub n: usize,
    pub samples: Option<usize>,
    pub volume: f64,
    /// Extrema of the first (outward) curvature component.
    pub curvature_min: f64,
    pub curvature_max: f64,
    pub twist: Option<f64>,
}

/// Trigonometric interpolant of periodic samples on `t in [0, 1)`.
struct TrigInterp {
    coeffs: Vec<Complex<f64>>,
}

impl TrigInterp {
    fn new(samples: &[f64]) -> Self {
        let p = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(p).process(&mut buf);
        for c in buf.iter_mut() {
            *c /= p as f64;
        }
        Self { coeffs: buf }
    }

    fn freq(&self, j: usize) -> f64 {
        let p = self.coeffs.len();
        if j <= p / 2 {
            j as f64
        } else {
            j as f64 - p as f64
        }
    }

    /// Value and derivative at `t`.
    fn eval(&self, t: f64) -> (f64, f64) {
        let p = self.coeffs.len();
        let (mut v, mut d) = (0.0, 0.0);
        for (j, c) in self.coeffs.iter().enumerate() {
            let k = self.freq(j);
            let ang = 2.0 * PI * k * t;
            if p.is_multiple_of(2) && j == p / 2 {
                v += c.re * ang.cos();
                continue;
            }
            let e = Complex::new(ang.cos(), ang.sin());
            v += (c * e).re;
            d += (c * e * Complex::new(0.0, 2.0 * PI * k)).re;
        }
        (v, d)
    }

    /// Zero-mean antiderivative evaluated at `t`, plus the mean times `t`.
    fn integral(&self, t: f64) -> f64 {
        let p = self.coeffs.len();
        let mut v = self.coeffs[0].re * t;
        for (j, c) in self.coeffs.iter().enumerate().skip(1) {
            if p.is_multiple_of(2) && j == p / 2 {
                continue;
            }
            let k = self.freq(j);
            let w = Complex::new(0.0, 2.0 * PI * k);
            let ang = 2.0 * PI * k * t;
            let e = Complex::new(ang.cos(), ang.sin());
            v += (c / w * (e - 1.0)).re;
        }
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

fn spectral_d(f: &[f64], period: f64) -> Vec<f64> {
    Tangential::new(period, Stencil::Spectral).derivative(f)
}

/// Resample a closed curve to uniform arclength and build its normal frame.
///
/// The input is interpreted as samples of a smooth periodic parameterization.
pub fn build_curve(samples: &[Vec<f64>], stencil: Stencil) -> Result<BoundaryManifold> {
    let p = samples.len();
    if p < 16 {
        return Err(BoundaryError::TooFewSamples(p));
    }
    let n = samples[0].len();
    if samples.iter().any(|v| v.len() != n) {
        return Err(BoundaryError::Ragged);
    }
    if !(2..=3).contains(&n) {
        return Err(BoundaryError::UnsupportedDimension(n));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BoundaryError::Degenerate("non-finite coordinates".into()));
    }
    check_simple(samples)?;

    let mut pts: Vec<Vec<f64>> = samples.to_vec();
    // orient planar curves counter-clockwise so the rotated tangent points outward
    if signed_area(&pts) < 0.0 {
        pts.reverse();
    }

    // resample to uniform arclength via the trigonometric interpolant
    let coords: Vec<TrigInterp> = (0..n).map(|d| TrigInterp::new(&pts.iter().map(|v| v[d]).collect::<Vec<_>>())).collect();
    let speed: Vec<f64> = (0..p)
        .map(|j| {
            let t = j as f64 / p as f64;
            coords.iter().map(|c| c.eval(t).1.powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    if speed.iter().any(|s| *s < 1e-12) {
        return Err(BoundaryError::Degenerate("vanishing speed".into()));
    }
    let sp = TrigInterp::new(&speed);
    let length = sp.coeffs[0].re;
    if !(length > 1e-12) {
        return Err(BoundaryError::Degenerate("zero length".into()));
    }
    let mut points = Vec::with_capacity(p);
    let mut t = 0.0;
    for j in 0..p {
        let target = length * j as f64 / p as f64;
        for _ in 0..50 {
            let f = sp.integral(t) - target;
            let df = coords.iter().map(|c| c.eval(t).1.powi(2)).sum::<f64>().sqrt();
            let step = f / df;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        points.push(coords.iter().map(|c| c.eval(t).0).collect::<Vec<_>>());
    }

    // tangent and curvature vector by spectral differentiation in arclength
    let comp = |d: usize, v: &Vec<Vec<f64>>| v.iter().map(|x| x[d]).collect::<Vec<_>>();
    let dcoords: Vec<Vec<f64>> = (0..n).map(|d| spectral_d(&comp(d, &points), length)).collect();
    let tangent: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let v: Vec<f64> = (0..n).map(|d| dcoords[d][j]).collect();
            let s = norm(&v);
            v.iter().map(|x| x / s).collect()
        })
        .collect();
    let dtan: Vec<Vec<f64>> = (0..n).map(|d| spectral_d(&comp(d, &tangent), length)).collect();
    let kvec: Vec<Vec<f64>> = (0..p).map(|j| (0..n).map(|d| dtan[d][j]).collect()).collect();

    let (normals, tau) = if n == 2 {
        let nrm: Vec<Vec<f64>> = tangent.iter().map(|t| vec![t[1], -t[0]]).collect();
        (vec![nrm], 0.0)
    } else {
        rotation_minimizing_frame(&points, &tangent, &kvec, length)
    };
    let kappa: Vec<Vec<f64>> = normals.iter().map(|nf| (0..p).map(|j| dot(&kvec[j], &nf[j])).collect()).collect();

    Ok(BoundaryManifold::Curve(Curve { n, length, points, tangent, normals, kappa, tau, stencil }))
}

/// Double-reflection transport in `R^3`, with the loop holonomy removed by a
/// uniform twist. Returns the two normal fields and the constant twist rate.
fn rotation_minimizing_frame(
    points: &[Vec<f64>],
    tangent: &[Vec<f64>],
    kvec: &[Vec<f64>],
    length: f64,
) -> (Vec<Vec<Vec<f64>>>, f64) {
    let p = points.len();
    let t0 = &tangent[0];
    // initial N_1: opposite the curvature vector (outward for convex planar curves)
    let mut r = if norm(&kvec[0]) > 1e-10 {
        kvec[0].iter().map(|v| -v).collect::<Vec<_>>()
    } else {
        let mut e = vec![0.0; 3];
        let i = (0..3).min_by(|&a, &b| t0[a].abs().total_cmp(&t0[b].abs())).unwrap_or(0);
        e[i] = 1.0;
        e
    };
    r = axpy(-dot(&r, t0), t0, &r);
    let s = norm(&r);
    r.iter_mut().for_each(|v| *v /= s);

    let mut n1 = vec![r.clone()];
    let mut cur = r;
    for i in 0..p {
        let j = (i + 1) % p;
        let v1: Vec<f64> = (0..3).map(|d| points[j][d] - points[i][d]).collect();
        let c1 = dot(&v1, &v1);
        let rl = axpy(-2.0 / c1 * dot(&v1, &cur), &v1, &cur);
        let tl = axpy(-2.0 / c1 * dot(&v1, &tangent[i]), &v1, &tangent[i]);
        let v2: Vec<f64> = (0..3).map(|d| tangent[j][d] - tl[d]).collect();
        let c2 = dot(&v2, &v2);
        cur = if c2 > 1e-300 { axpy(-2.0 / c2 * dot(&v2, &rl), &v2, &rl) } else { rl };
        if j != 0 {
            n1.push(cur.clone());
        }
    }
    // holonomy: angle from the start frame to the transported end frame
    let b0 = cross(t0, &n1[0]);
    let theta = dot(&cur, &b0).atan2(dot(&cur, &n1[0]));
    let rotate = |j: usize, n1v: &[f64], ang: f64| -> Vec<f64> {
        let b = cross(&tangent[j], n1v);
        (0..3).map(|d| ang.cos() * n1v[d] + ang.sin() * b[d]).collect()
    };
    let corrected: Vec<Vec<f64>> = (0..p).map(|j| rotate(j, &n1[j], -theta * j as f64 / p as f64)).collect();

    // smooth the discrete twist so that N_1' . N_2 is exactly constant
    let n2: Vec<Vec<f64>> = (0..p).map(|j| cross(&tangent[j], &corrected[j])).collect();
    let dn1: Vec<Vec<f64>> = (0..3).map(|d| spectral_d(&corrected.iter().map(|v| v[d]).collect::<Vec<_>>(), length)).collect();
    let twist: Vec<f64> = (0..p).map(|j| (0..3).map(|d| dn1[d][j] * n2[j][d]).sum()).collect();
    let mean = twist.iter().sum::<f64>() / p as f64;
    let dev = TrigInterp::new(&twist.iter().map(|t| t - mean).collect::<Vec<_>>());
    let frame1: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let alpha = -length * dev.integral(j as f64 / p as f64);
            rotate(j, &corrected[j], alpha)
        })
        .collect();
    let frame2: Vec<Vec<f64>> = (0..p).map(|j| cross(&tangent[j], &frame1[j])).collect();
    (vec![frame1, frame2], mean)
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn signed_area(pts: &[Vec<f64>]) -> f64 {
    let p = pts.len();
    (0..p)
        .map(|i| {
            let j = (i + 1) % p;
            pts[i][0] * pts[j][1] - pts[j][0] * pts[i][1]
        })
        .sum::<f64>()
        / 2.0
}

/// Segment-pair test with bounding-box rejection.
fn check_simple(pts: &[Vec<f64>]) -> Result<()> {
    let p = pts.len();
    let n = pts[0].len();
    let seg = |i: usize| (&pts[i], &pts[(i + 1) % p]);
    let total: f64 = (0..p).map(|i| {
        let (a, b) = seg(i);
        norm(&axpy(-1.0, a, b))
    }).sum();
    if total < 1e-12 {
        return Err(BoundaryError::Degenerate("zero length".into()));
    }
    let tol = 1e-9 * total;
    let bbox = |i: usize| {
        let (a, b) = seg(i);
        (0..n).map(|d| (a[d].min(b[d]) - tol, a[d].max(b[d]) + tol)).collect::<Vec<_>>()
    };
    let boxes: Vec<_> = (0..p).map(bbox).collect();
    for i in 0..p {
        for j in (i + 2)..p {
            if i == 0 && j == p - 1 {
                continue;
            }
            let overlap = (0..n).all(|d| boxes[i][d].0 <= boxes[j][d].1 && boxes[j][d].0 <= boxes[i][d].1);
            if overlap && segment_distance(seg(i), seg(j)) < tol {
                return Err(BoundaryError::SelfIntersection(i, j));
            }
        }
    }
    Ok(())
}

/// Minimum distance between two segments in `R^n`.
fn segment_distance((p0, p1): (&Vec<f64>, &Vec<f64>), (q0, q1): (&Vec<f64>, &Vec<f64>)) -> f64 {
    let d1 = axpy(-1.0, p0, p1);
    let d2 = axpy(-1.0, q0, q1);
    let r = axpy(-1.0, q0, p0);
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let c = dot(&d1, &r);
    let b = dot(&d1, &d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    let cp: Vec<f64> = (0..p0.len()).map(|d| p0[d] + s * d1[d] - q0[d] - t * d2[d]).collect();
    norm(&cp)
}

/// Geometry specification accepted from JSON input.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GeometryJson {
    Sphere(RoundSphere),
    Points { points: Vec<Vec<f64>> },
    List(Vec<Vec<f64>>),
}

/// Read a boundary from a CSV file of points or a JSON document.
pub fn read_boundary(path: &Path, stencil: Stencil) -> Result<BoundaryManifold> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with(['[', '{']);
    if is_json {
        let g: GeometryJson = serde_json::from_str(&text).map_err(|e| BoundaryError::Parse(e.to_string()))?;
        return from_geometry(&g, stencil);
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut pts = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| BoundaryError::Parse(e.to_string()))?;
        let row: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match row {
            Ok(v) => pts.push(v),
            // a header row is allowed on the first line only
            Err(_) if line == 0 => {}
            Err(e) => return Err(BoundaryError::Parse(format!("line {}: {e}", line + 1))),
        }
    }
    build_curve(&pts, stencil)
}

pub fn from_geometry(g: &GeometryJson, stencil: Stencil) -> Result<BoundaryManifold> {
    match g {
        GeometryJson::Sphere(s) => BoundaryManifold::sphere(s.radius, s.n),
        GeometryJson::Points { points } | GeometryJson::List(points) => build_curve(points, stencil),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(b: &BoundaryManifold) -> &Curve {
        match b {
            BoundaryManifold::Curve(c) => c,
            _ => panic!("expected a curve"),
        }
    }

    #[test]
    fn unit_circle_outward_curvature() {
        let b = BoundaryManifold::circle(1.0, 2, 128).unwrap();
        let c = curve(&b);
        assert!(c.kappa[0].iter().all(|k| (k + 1.0).abs() < 1e-6));
        assert!((c.length - 2.0 * PI).abs() < 1e-10);
        // outward: N points away from the origin
        assert!(c.points.iter().zip(&c.normals[0]).all(|(p, n)| dot(p, n) > 0.99));
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let b = BoundaryManifold::ellipse(2.0, 1.0, 2, 256).unwrap();
        let c = curve(&b);
        // sample 0 stays at (2, 0)
        assert!((c.points[0][0] - 2.0).abs() < 1e-10);
        assert!((c.kappa[0][0] + 2.0).abs() < 1e-4, "{}", c.kappa[0][0]);
    }

    #[test]
    fn planar_circle_in_r3() {
        let b = BoundaryManifold::circle(1.0, 3, 128).unwrap();
        let c = curve(&b);
        assert!(c.kappa[1].iter().all(|k| k.abs() < 1e-8));
        assert!(c.kappa[0].iter().all(|k| (k + 1.0).abs() < 1e-6));
        assert!(c.tau.abs() < 1e-10);
    }

    #[test]
    fn frame_is_orthonormal_on_space_curve() {
        // a (2,3) torus knot is too wild; use a tilted, wobbling loop
        let p = 200;
        let pts: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / p as f64;
                vec![t.cos(), 1.5 * t.sin(), 0.4 * (2.0 * t).sin()]
            })
            .collect();
        let b = build_curve(&pts, Stencil::Spectral).unwrap();
        let c = curve(&b);
        for j in 0..c.len() {
            assert!((norm(&c.tangent[j]) - 1.0).abs() < 1e-8);
            for i in 0..2 {
                assert!(dot(&c.normals[i][j], &c.tangent[j]).abs() < 1e-8);
                assert!((norm(&c.normals[i][j]) - 1.0).abs() < 1e-8);
            }
            assert!(dot(&c.normals[0][j], &c.normals[1][j]).abs() < 1e-8);
        }
        // the frame derivative has the declared normal connection
        let tan = c.tangential();
        let dn1: Vec<Vec<f64>> =
            (0..3).map(|d| tan.derivative(&c.normals[0].iter().map(|v| v[d]).collect::<Vec<_>>())).collect();
        for j in 0..c.len() {
            let t: f64 = (0..3).map(|d| dn1[d][j] * c.normals[1][j][d]).sum();
            assert!((t - c.tau).abs() < 1e-6, "twist {t} vs {}", c.tau);
        }
    }

    #[test]
    fn sphere_mean_curvature_and_volume() {
        let s2 = BoundaryManifold::sphere(1.0, 2).unwrap();
        assert_eq!(s2.mean_curvature().components[0], Coefficient::Scalar(-1.0));
        let s4 = BoundaryManifold::sphere(1.0, 4).unwrap();
        assert_eq!(s4.mean_curvature().components[0], Coefficient::Scalar(-3.0));
        assert!((s4.integrate(&Coefficient::Scalar(1.0)).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn quadrature_on_circle() {
        let b = BoundaryManifold::circle(1.0, 2, 64).unwrap();
        assert!((b.integrate(&Coefficient::Scalar(1.0)).unwrap() - 2.0 * PI).abs() < 1e-10);
        let s: Vec<f64> = (0..64).map(|j| (2.0 * PI * j as f64 / 64.0).sin()).collect();
        let c: Vec<f64> = (0..64).map(|j| (2.0 * PI * j as f64 / 64.0).cos()).collect();
        assert!(b.l2_inner(&s.clone().into(), &c.into()).unwrap().abs() < 1e-10);
        assert!((b.l2_inner(&s.clone().into(), &s.into()).unwrap() - PI).abs() < 1e-10);
        assert!(b.integrate(&vec![1.0; 10].into()).is_err());
    }

    #[test]
    fn curvature_scales_inversely() {
        let b1 = BoundaryManifold::circle(1.0, 2, 64).unwrap();
        let b2 = BoundaryManifold::circle(2.0, 2, 64).unwrap();
        let k1 = curve(&b1).kappa[0][5];
        let k2 = curve(&b2).kappa[0][5];
        assert!((k1 - 2.0 * k2).abs() < 1e-6);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let pts: Vec<Vec<f64>> = (0..64)
            .map(|j| {
                let t = -2.0 * PI * j as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let b = build_curve(&pts, Stencil::Spectral).unwrap();
        assert!(curve(&b).kappa[0].iter().all(|k| (k + 1.0).abs() < 1e-6));
    }

    #[test]
    fn rejects_bad_input() {
        let figure_eight: Vec<Vec<f64>> = (0..64)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / 64.0;
                vec![t.sin(), (2.0 * t).sin() / 2.0]
            })
            .collect();
        assert!(matches!(build_curve(&figure_eight, Stencil::Spectral), Err(BoundaryError::SelfIntersection(..))));
        assert!(matches!(build_curve(&vec![vec![0.0, 0.0]; 20], Stencil::Spectral), Err(BoundaryError::Degenerate(_))));
        assert!(matches!(build_curve(&vec![vec![0.0, 0.0]; 5], Stencil::Spectral), Err(BoundaryError::TooFewSamples(5))));
    }
}
