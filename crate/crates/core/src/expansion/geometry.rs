//! Series-level geometry of a graph over the boundary cylinder `γ × [0, ε)`.
//!
//! The graph is `F(s, x) = γ(s) + u^i(s, x) N_i(s) + x e_x` in the half-space
//! model. All vectors are expressed in the orthonormal frame
//! `(T, N_1, …, N_c, e_x)`, with the frame relations `T' = Σ k_i N_i`,
//! `N_1' = -k_1 T + τ N_2`, `N_2' = -k_2 T - τ N_1`.
//!
//! The hyperbolic mean curvature (as a trace) of the graph is
//! `H = (x² h̄^{αβ} F_{αβ} + m x e_x)^⊥`, the conformal-change formula for
//! `g = ḡ / x²`. Its components are reported against the frame normals `N_i`.

use crate::boundary::{BoundaryManifold, Curve};
use crate::phg::{Coefficient, PhgSeries};

use super::{ExpansionError, Result};

/// Compactified (Euclidean) induced metric and its volume density.
///
/// For curves the coordinates are `(s, x)`. For round spheres the tangential
/// block is `h_ss` times the round metric of `γ`, and `q` is the density
/// relative to `dA_γ`.
#[derive(Debug, Clone)]
pub struct MetricSeries {
    pub h_ss: PhgSeries,
    pub h_sx: PhgSeries,
    pub h_xx: PhgSeries,
    pub hinv_ss: PhgSeries,
    pub hinv_sx: PhgSeries,
    pub hinv_xx: PhgSeries,
    /// `√det h̄` relative to `dA_γ dx`.
    pub q: PhgSeries,
}

/// Unit normal of a codimension-one graph in the frame `(T, N, e_x)`.
#[derive(Debug, Clone)]
pub struct NormalSeries {
    pub cz: PhgSeries,
    pub cx: PhgSeries,
    pub ca: PhgSeries,
}

type Vector = Vec<PhgSeries>;

fn vdot(a: &Vector, b: &Vector) -> Result<PhgSeries> {
    let mut acc: Option<PhgSeries> = None;
    for (x, y) in a.iter().zip(b) {
        let p = x.mul(y)?;
        acc = Some(match acc {
            None => p,
            Some(s) => s.add(&p)?,
        });
    }
    acc.ok_or(ExpansionError::DimensionMismatch("empty vector".into()))
}

fn vcomb(terms: &[(&PhgSeries, &Vector)]) -> Result<Vector> {
    let dim = terms[0].1.len();
    (0..dim)
        .map(|d| {
            let mut acc = terms[0].0.mul(&terms[0].1[d])?;
            for (c, v) in &terms[1..] {
                acc = acc.add(&c.mul(&v[d])?)?;
            }
            Ok(acc)
        })
        .collect()
}

fn common_order(u: &[PhgSeries]) -> usize {
    u.iter().map(|s| s.order()).min().unwrap_or(0)
}

/// Common valuation-aware preparation: raising the order by two makes every
/// x-derivative below exact through the original order.
fn padded(u: &[PhgSeries]) -> (usize, Vec<PhgSeries>) {
    let n = common_order(u);
    (n, u.iter().map(|s| s.with_order(n + 2)).collect())
}

struct CurveVectors {
    g_s: Vector,
    g_x: Vector,
    g_ss: Vector,
    g_sx: Vector,
    g_xx: Vector,
}

fn check_components(u: &[PhgSeries], b: &BoundaryManifold) -> Result<()> {
    if u.len() != b.codim() {
        return Err(ExpansionError::DimensionMismatch(format!(
            "{} graph components for codimension {}",
            u.len(),
            b.codim()
        )));
    }
    Ok(())
}

fn curve_vectors(u: &[PhgSeries], curve: &Curve) -> Result<CurveVectors> {
    let c = curve.codim();
    let tan = curve.tangential();
    let proto = &u[0];
    let (order, m, codim1) = (proto.order(), proto.m(), proto.codim1());
    let zero = PhgSeries::zero(order, m, codim1);
    let one = PhgSeries::constant(1.0, order, m, codim1);
    let k: Vec<Coefficient> = curve.kappa.iter().map(|v| Coefficient::Grid(v.clone())).collect();
    let dk: Vec<Coefficient> = k.iter().map(|kc| tan.apply(kc)).collect();
    let tau = curve.tau;
    // tau[j][i]: component of N_j' along N_i
    let conn = |j: usize, i: usize| -> f64 {
        match (j, i) {
            (0, 1) => tau,
            (1, 0) => -tau,
            _ => 0.0,
        }
    };

    let u_s: Vec<PhgSeries> = u.iter().map(|s| s.d_s(&tan)).collect();
    let mut du = Vec::with_capacity(c);
    for i in 0..c {
        let mut d = u_s[i].clone();
        for (j, uj) in u.iter().enumerate() {
            let w = conn(j, i);
            if w != 0.0 {
                d = d.add(&uj.scale(w))?;
            }
        }
        du.push(d);
    }
    let u_x: Vec<PhgSeries> = u.iter().map(|s| s.dx()).collect::<std::result::Result<_, _>>()?;
    let u_xx: Vec<PhgSeries> = u_x.iter().map(|s| s.dx()).collect::<std::result::Result<_, _>>()?;

    let mut a = one.clone();
    for i in 0..c {
        a = a.sub(&u[i].mul_coeff(&k[i])?)?;
    }
    let mut a_s = zero.clone();
    let mut a_x = zero.clone();
    for i in 0..c {
        a_s = a_s.sub(&u[i].mul_coeff(&dk[i])?)?.sub(&u_s[i].mul_coeff(&k[i])?)?;
        a_x = a_x.sub(&u_x[i].mul_coeff(&k[i])?)?;
    }

    let mut g_s = vec![a.clone()];
    let mut g_x = vec![zero.clone()];
    let mut ss_t = a_s.clone();
    for j in 0..c {
        ss_t = ss_t.sub(&du[j].mul_coeff(&k[j])?)?;
    }
    let mut g_ss = vec![ss_t];
    let mut g_sx = vec![a_x];
    let mut g_xx = vec![zero.clone()];
    for i in 0..c {
        g_s.push(du[i].clone());
        g_x.push(u_x[i].clone());
        let mut ni = a.mul_coeff(&k[i])?.add(&du[i].d_s(&tan))?;
        for (j, duj) in du.iter().enumerate() {
            let w = conn(j, i);
            if w != 0.0 {
                ni = ni.add(&duj.scale(w))?;
            }
        }
        g_ss.push(ni);
        g_sx.push(du[i].dx()?);
        g_xx.push(u_xx[i].clone());
    }
    g_s.push(zero.clone());
    g_x.push(one);
    g_ss.push(zero.clone());
    g_sx.push(zero.clone());
    g_xx.push(zero);
    Ok(CurveVectors { g_s, g_x, g_ss, g_sx, g_xx })
}

fn inverse_2x2(h_ss: &PhgSeries, h_sx: &PhgSeries, h_xx: &PhgSeries) -> Result<(PhgSeries, PhgSeries, PhgSeries, PhgSeries)> {
    let det = h_ss.mul(h_xx)?.sub(&h_sx.mul(h_sx)?)?;
    let idet = det.invert()?;
    Ok((h_xx.mul(&idet)?, h_sx.mul(&idet)?.neg(), h_ss.mul(&idet)?, det))
}

/// Induced compactified metric, its inverse and volume density.
pub fn induced_metric(u: &[PhgSeries], b: &BoundaryManifold) -> Result<MetricSeries> {
    check_components(u, b)?;
    let (n, u) = padded(u);
    let cut = |s: PhgSeries| s.truncate(n);
    match b {
        BoundaryManifold::Curve(curve) => {
            let v = curve_vectors(&u, curve)?;
            let h_ss = vdot(&v.g_s, &v.g_s)?;
            let h_sx = vdot(&v.g_s, &v.g_x)?;
            let h_xx = vdot(&v.g_x, &v.g_x)?;
            let (hinv_ss, hinv_sx, hinv_xx, det) = inverse_2x2(&h_ss, &h_sx, &h_xx)?;
            Ok(MetricSeries {
                q: cut(det.sqrt()?),
                h_ss: cut(h_ss),
                h_sx: cut(h_sx),
                h_xx: cut(h_xx),
                hinv_ss: cut(hinv_ss),
                hinv_sx: cut(hinv_sx),
                hinv_xx: cut(hinv_xx),
            })
        }
        BoundaryManifold::RoundSphere(s) => {
            let u0 = &u[0];
            let m = b.m();
            let a = u0.scale(1.0 / s.radius).add_const(&Coefficient::Scalar(1.0))?;
            let u_x = u0.dx()?;
            let h_xx = u_x.mul(&u_x)?.add_const(&Coefficient::Scalar(1.0))?;
            let h_ss = a.mul(&a)?;
            let q = a.powf(m as f64 - 1.0)?.mul(&h_xx.sqrt()?)?;
            Ok(MetricSeries {
                hinv_ss: cut(h_ss.invert()?),
                hinv_xx: cut(h_xx.invert()?),
                hinv_sx: cut(PhgSeries::zero(n, u0.m(), u0.codim1())),
                h_sx: cut(PhgSeries::zero(n, u0.m(), u0.codim1())),
                h_ss: cut(h_ss),
                h_xx: cut(h_xx),
                q: cut(q),
            })
        }
    }
}

/// Hyperbolic mean curvature of the graph, component-wise against `N_i`.
pub fn mean_curvature_series(u: &[PhgSeries], b: &BoundaryManifold, m: usize) -> Result<Vec<PhgSeries>> {
    check_graphical(u, b)?;
    mean_curvature_unchecked(u, b, m)
}

/// Mean curvature without the graphicality guard; used for linearizations
/// whose perturbations move the boundary (nonzero `x^0` terms).
pub(crate) fn mean_curvature_unchecked(u: &[PhgSeries], b: &BoundaryManifold, m: usize) -> Result<Vec<PhgSeries>> {
    check_components(u, b)?;
    let (n, u) = padded(u);
    let mf = m as f64;
    match b {
        BoundaryManifold::Curve(curve) => {
            let v = curve_vectors(&u, curve)?;
            let h_ss = vdot(&v.g_s, &v.g_s)?;
            let h_sx = vdot(&v.g_s, &v.g_x)?;
            let h_xx = vdot(&v.g_x, &v.g_x)?;
            let (hi_ss, hi_sx, hi_xx, _) = inverse_2x2(&h_ss, &h_sx, &h_xx)?;
            let two_hi_sx = hi_sx.scale(2.0);
            let trace = vcomb(&[(&hi_ss, &v.g_ss), (&two_hi_sx, &v.g_sx), (&hi_xx, &v.g_xx)])?;
            let mut w: Vector = trace.iter().map(|s| s.shift_up(2).truncate(n + 2)).collect();
            let last = w.len() - 1;
            w[last] = w[last].add(&PhgSeries::monomial(mf, 1, false, n + 2, u[0].m(), u[0].codim1()))?;
            let ws = vdot(&w, &v.g_s)?;
            let wx = vdot(&w, &v.g_x)?;
            let alpha = hi_ss.mul(&ws)?.add(&hi_sx.mul(&wx)?)?;
            let beta = hi_sx.mul(&ws)?.add(&hi_xx.mul(&wx)?)?;
            (1..=curve.codim())
                .map(|i| {
                    let perp = w[i].sub(&alpha.mul(&v.g_s[i])?)?.sub(&beta.mul(&v.g_x[i])?)?;
                    Ok(perp.truncate(n))
                })
                .collect()
        }
        BoundaryManifold::RoundSphere(s) => {
            let u0 = &u[0];
            let r = s.radius;
            let one = Coefficient::Scalar(1.0);
            let a = u0.scale(1.0 / r).add_const(&one)?;
            let u_x = u0.dx()?;
            let u_xx = u_x.dx()?;
            let j = u_x.mul(&u_x)?.add_const(&one)?.invert()?;
            // V_N = -(m-1)/(R A) + u_xx / (1 + u_x²)
            let vn = a.invert()?.scale(-(mf - 1.0) / r).add(&u_xx.mul(&j)?)?;
            let h = vn.shift_up(2).sub(&u_x.shift_up(1).scale(mf))?.mul(&j)?;
            Ok(vec![h.truncate(n)])
        }
    }
}

/// Unit normal series (codimension one only).
pub fn normal_series(u: &[PhgSeries], b: &BoundaryManifold) -> Result<NormalSeries> {
    if b.codim() != 1 {
        return Err(ExpansionError::CodimNotOne(b.codim()));
    }
    check_components(u, b)?;
    let (n, u) = padded(u);
    let one = Coefficient::Scalar(1.0);
    let u0 = &u[0];
    let u_x = u0.dx()?;
    match b {
        BoundaryManifold::Curve(curve) => {
            let tan = curve.tangential();
            let k = Coefficient::Grid(curve.kappa[0].clone());
            let a = u0.mul_coeff(&k)?.neg().add_const(&one)?;
            let ratio = u0.d_s(&tan).mul(&a.invert()?)?;
            let cz = ratio.mul(&ratio)?.add(&u_x.mul(&u_x)?)?.add_const(&one)?.powf(-0.5)?;
            Ok(NormalSeries {
                cx: u_x.mul(&cz)?.neg().truncate(n),
                ca: ratio.mul(&cz)?.neg().truncate(n),
                cz: cz.truncate(n),
            })
        }
        BoundaryManifold::RoundSphere(_) => {
            let cz = u_x.mul(&u_x)?.add_const(&one)?.powf(-0.5)?;
            Ok(NormalSeries {
                cx: u_x.mul(&cz)?.neg().truncate(n),
                ca: PhgSeries::zero(n, u0.m(), u0.codim1()),
                cz: cz.truncate(n),
            })
        }
    }
}

/// `II(e^⊤, e^⊤)` against the unit normal `ν̄ = c^a T + c^z N + c^x e_x` for a
/// constant horizontal vector `e` of a planar boundary curve: the second
/// derivative of the normal-graph function of the translated family `Y + t e`.
pub fn translation_acceleration(u: &[PhgSeries], b: &BoundaryManifold, e: [f64; 2]) -> Result<PhgSeries> {
    let curve = match b {
        BoundaryManifold::Curve(c) if c.n == 2 => c,
        _ => return Err(ExpansionError::NotHypersurface),
    };
    check_components(u, b)?;
    let nu = normal_series(u, b)?;
    let (n, u) = padded(u);
    let v = curve_vectors(&u, curve)?;
    let e_t = Coefficient::Grid(curve.tangent.iter().map(|t| t[0] * e[0] + t[1] * e[1]).collect());
    let e_n = Coefficient::Grid(curve.normals[0].iter().map(|t| t[0] * e[0] + t[1] * e[1]).collect());
    let h_ss = vdot(&v.g_s, &v.g_s)?;
    let h_sx = vdot(&v.g_s, &v.g_x)?;
    let h_xx = vdot(&v.g_x, &v.g_x)?;
    let (hi_ss, hi_sx, hi_xx, _) = inverse_2x2(&h_ss, &h_sx, &h_xx)?;
    // ⟨e, G_s⟩ and ⟨e, G_x⟩ in the frame (T, N, e_x)
    let es = v.g_s[0].mul_coeff(&e_t)?.add(&v.g_s[1].mul_coeff(&e_n)?)?;
    let ex = v.g_x[0].mul_coeff(&e_t)?.add(&v.g_x[1].mul_coeff(&e_n)?)?;
    let a = hi_ss.mul(&es)?.add(&hi_sx.mul(&ex)?)?;
    let c = hi_sx.mul(&es)?.add(&hi_xx.mul(&ex)?)?;
    let nu_vec = vec![nu.ca.with_order(n + 2), nu.cz.with_order(n + 2), nu.cx.with_order(n + 2)];
    let ii_ss = vdot(&v.g_ss, &nu_vec)?;
    let ii_sx = vdot(&v.g_sx, &nu_vec)?;
    let ii_xx = vdot(&v.g_xx, &nu_vec)?;
    let out = a.mul(&a)?.mul(&ii_ss)?.add(&a.mul(&c)?.mul(&ii_sx)?.scale(2.0))?.add(&c.mul(&c)?.mul(&ii_xx)?)?;
    Ok(out.truncate(n))
}

/// Reject data that is not a graph approaching the boundary quadratically.
fn check_graphical(u: &[PhgSeries], b: &BoundaryManifold) -> Result<()> {
    let hmax = b.mean_curvature().components.iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    let scale = hmax.max(1.0 / b.volume().max(1e-300).powf(1.0 / (b.m() as f64 - 1.0)));
    for s in u {
        for k in 0..=1.min(s.order()) {
            for log in [false, true] {
                if s.get(k, log).is_some_and(|c| c.max_abs() > 1e-12) {
                    return Err(ExpansionError::NonGraphical(format!("nonzero x^{k} term")));
                }
            }
        }
        if s.order() >= 2 {
            let u2 = s.get(2, false).map(|c| c.max_abs()).unwrap_or(0.0);
            let bound = scale / (2.0 * (b.m() as f64 - 1.0));
            if u2 > 10.0 * bound {
                return Err(ExpansionError::NonGraphical(format!(
                    "|u_2| = {u2:.3e} exceeds ten times the quadratic bound {bound:.3e}"
                )));
            }
        }
    }
    Ok(())
}
