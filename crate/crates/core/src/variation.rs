//! First and second variation of renormalized volume as boundary integrals,
//! Jacobi-field expansions, and Killing-field identities.
//!
//! A variation `Ṡ = φ̇ ν̄` is measured along the Euclidean unit normal of the
//! compactified graph. With `q = √det h̄` and `c^x = ⟨ν̄, e_x⟩`,
//!
//! * `DV(φ̇) = ∫_γ [φ̇ c^x q]^{(m)}`,
//! * `D²V = I₁ + … + I₆` with
//!   `I₁ = −[(φ̇c^x)² q]^{(m+1, log)}`, `I₂ = −[(φ̇c^x)² q]^{(m+1)}`,
//!   `I₃ = ½[φ̇² Δx q]^{(m)}`, `I₄ = −½[φ̇² h̄^{xx} q]^{(m+1)}`,
//!   `I₅ = c₅[φ̇² h̄^{xx} q]^{(m+1, log)}`, `I₆ = [φ̈ c^x q]^{(m)}`,
//!
//! where `φ̇² Δx q = φ̇²[∂_s(q h̄^{sx}) + (2−m)x^{−1} q h̄^{xx} + ∂_x(q h̄^{xx})]`
//! and `c₅ = −½` for even `m`, `−1` for odd `m`. All of these depend on `φ̇`
//! only through `φ̇²`, so sums over families of fields can be fed as a single
//! quadratic density.

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{BoundaryManifold, NormalField};
use crate::expansion::{
    inverse_length, mean_curvature_unchecked, solve_indicial, translation_acceleration, ExpansionError, GraphExpansion,
};
use crate::phg::{Coefficient, PhgError, PhgSeries};

#[derive(Debug, Error)]
pub enum VariationError {
    #[error(transparent)]
    Phg(#[from] PhgError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Boundary(#[from] crate::boundary::BoundaryError),
    #[error("truncation order {order} too low (need at least {needed})")]
    OrderTooLow { order: usize, needed: usize },
    #[error("operation requires a codimension-one expansion")]
    CodimNotOne,
    #[error("linearized residual at order {k} does not vanish (|r| = {value:.3e})")]
    Resonance { k: usize, value: f64 },
    #[error("second variation needs the acceleration φ̈")]
    MissingAcceleration,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, VariationError>;

/// Jacobi field along a minimal graph, as a formal series.
#[derive(Debug, Clone)]
pub struct JacobiExpansion {
    /// `φ̇` in the `ν̄` frame (codim 1) or graph-frame components (codim ≥ 2).
    pub phi_dot: Vec<PhgSeries>,
    /// First-order change `v` of the graph function: `φ̇ = c^z v` in codim 1.
    pub graph_variation: Vec<PhgSeries>,
    pub dirichlet: NormalField,
    pub neumann: NormalField,
    /// Coefficient of `x^{m+1} log x` in `φ̇` (odd `m`).
    pub log_coefficient: Option<NormalField>,
    /// Optional acceleration `φ̈` (codim 1).
    pub phi_ddot: Option<PhgSeries>,
    /// Largest linearized residual over orders `1..=order`.
    pub residual: f64,
}

/// Directional derivative `d/dε H(u + εv)` by Richardson-extrapolated
/// central differences.
fn linearized_mean_curvature(g: &GraphExpansion, v: &[PhgSeries], order: usize) -> Result<Vec<PhgSeries>> {
    let vmax = v.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    let codim = v.len();
    if vmax == 0.0 {
        return Ok(vec![PhgSeries::zero(order, g.m, g.codim1()); codim]);
    }
    let eps0 = 1e-2 / (vmax * inverse_length(&g.boundary));
    let u: Vec<PhgSeries> = g.u.iter().map(|s| s.truncate(order)).collect();
    let diff = |eps: f64| -> Result<Vec<PhgSeries>> {
        let plus: Vec<PhgSeries> = u.iter().zip(v).map(|(a, b)| a.add(&b.scale(eps))).collect::<std::result::Result<_, _>>()?;
        let minus: Vec<PhgSeries> = u.iter().zip(v).map(|(a, b)| a.sub(&b.scale(eps))).collect::<std::result::Result<_, _>>()?;
        let hp = mean_curvature_unchecked(&plus, &g.boundary, g.m)?;
        let hm = mean_curvature_unchecked(&minus, &g.boundary, g.m)?;
        hp.iter().zip(&hm).map(|(a, b)| Ok(a.sub(b)?.scale(0.5 / eps))).collect()
    };
    let d1 = diff(eps0)?;
    let d2 = diff(eps0 / 2.0)?;
    let d4 = diff(eps0 / 4.0)?;
    // eliminate ε² then ε⁴
    (0..codim)
        .map(|i| {
            let r1 = d2[i].scale(4.0).sub(&d1[i])?.scale(1.0 / 3.0);
            let r2 = d4[i].scale(4.0).sub(&d2[i])?.scale(1.0 / 3.0);
            Ok(r2.scale(16.0).sub(&r1)?.scale(1.0 / 15.0))
        })
        .collect()
}

/// Solve the linearized minimal-graph equation order by order, with the
/// free data at orders `0` (Dirichlet) and `m+1` (Neumann) prescribed for
/// `φ̇` in the `ν̄` frame.
pub fn jacobi_expansion(
    g: &GraphExpansion,
    dirichlet: &NormalField,
    neumann: &NormalField,
    order: usize,
) -> Result<JacobiExpansion> {
    let m = g.m;
    if order < m + 2 {
        return Err(VariationError::OrderTooLow { order, needed: m + 2 });
    }
    if order > g.order {
        return Err(VariationError::OrderTooLow { order: g.order, needed: order });
    }
    let codim = g.boundary.codim();
    if dirichlet.components.len() != codim || neumann.components.len() != codim {
        return Err(ExpansionError::DimensionMismatch(format!("free data must have {codim} components")).into());
    }
    let codim1 = g.codim1();
    let cz = if codim1 { Some(g.normal()?.cz.truncate(order)) } else { None };
    let lam = inverse_length(&g.boundary);
    let data_scale = dirichlet
        .components
        .iter()
        .chain(&neumann.components)
        .map(|c| c.max_abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    // residuals are judged against the largest coefficient met so far, in
    // units of the boundary length scale
    let coeff_scale = |v: &[PhgSeries]| -> Result<f64> {
        let mut s: f64 = 0.0;
        for vi in v {
            for k in 0..=vi.order() {
                let c = vi.coeff(k, false)?.max_abs().max(vi.coeff(k, true)?.max_abs());
                s = s.max(c / lam.powi(k as i32).max(1.0));
            }
        }
        Ok(s)
    };
    let tol_at = |k: usize, scale: f64| 1e-6 * scale * lam.powi(k as i32).max(1.0);

    let mut v: Vec<PhgSeries> = dirichlet
        .components
        .iter()
        .map(|c| PhgSeries::constant(c.clone(), order, m, codim1))
        .collect();
    let mut log_coeff = vec![Coefficient::Scalar(0.0); codim];
    for k in 1..=order {
        let lv = linearized_mean_curvature(g, &v, order)?;
        let scale = data_scale.max(coeff_scale(&v)?);
        for i in 0..codim {
            let r = lv[i].coeff(k, false)?;
            let rl = lv[i].coeff(k, true)?;
            if k == m + 1 {
                if rl.max_abs() > tol_at(k, scale) {
                    return Err(VariationError::Resonance { k, value: rl.max_abs() });
                }
                if m.is_multiple_of(2) {
                    if r.max_abs() > tol_at(k, scale) {
                        return Err(VariationError::Resonance { k, value: r.max_abs() });
                    }
                } else {
                    let big = r.scale(-1.0 / (m as f64 + 1.0));
                    if big.max_abs() > tol_at(k, scale) {
                        v[i].set(k, true, big.clone())?;
                    }
                    log_coeff[i] = big;
                }
                // [c^z v]_{m+1} = neumann
                let mut target = neumann.components[i].clone();
                if let Some(cz) = &cz {
                    for j in 1..=k {
                        let c = cz.coeff(j, false)?;
                        if !c.is_exact_zero() {
                            target = target.sub(&c.mul(&v[i].coeff(k - j, false)?)?)?;
                        }
                    }
                }
                v[i].set(k, false, target)?;
                continue;
            }
            let mut src = PhgSeries::zero(order, m, codim1);
            src.add_term(k - 1, false, &r.scale(-1.0))?;
            src.add_term(k - 1, true, &rl.scale(-1.0))?;
            let dv = solve_indicial(&src, m)?.shift_up(1).truncate(order);
            v[i] = v[i].add(&dv)?;
        }
    }
    let lv = linearized_mean_curvature(g, &v, order)?;
    let scale = data_scale.max(coeff_scale(&v)?);
    let mut residual: f64 = 0.0;
    for s in &lv {
        for k in 0..order {
            let r = s.coeff(k, false)?.max_abs().max(s.coeff(k, true)?.max_abs());
            if r > tol_at(k, scale) {
                return Err(VariationError::Resonance { k, value: r });
            }
            residual = residual.max(r / lam.powi(k as i32).max(1.0));
        }
    }
    let phi_dot = match &cz {
        Some(cz) => vec![cz.mul(&v[0])?.truncate(order)],
        None => v.clone(),
    };
    Ok(JacobiExpansion {
        phi_dot,
        graph_variation: v,
        dirichlet: dirichlet.clone(),
        neumann: neumann.clone(),
        log_coefficient: if m % 2 == 1 { Some(NormalField { components: log_coeff }) } else { None },
        phi_ddot: None,
        residual,
    })
}

impl JacobiExpansion {
    pub fn with_acceleration(mut self, phi_ddot: PhgSeries) -> Self {
        self.phi_ddot = Some(phi_ddot);
        self
    }

    fn scalar(&self) -> Result<&PhgSeries> {
        if self.phi_dot.len() != 1 {
            return Err(VariationError::CodimNotOne);
        }
        Ok(&self.phi_dot[0])
    }
}

/// The six boundary terms of the second variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariationTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub i5: f64,
    pub i6: f64,
}

impl SecondVariationTerms {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2 + self.i3 + self.i4 + self.i5 + self.i6
    }
}

/// Pieces of the codimension-one closed form for `m = n` even:
/// `∫ −(n+1)φ̈₀u_{n+1} + (1−n)φ̇₀φ̇_{n+1} + φ̇₀²[(n−1)(n−2) − 4(3n−1)u₂u_{n+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormTerms {
    pub acceleration: f64,
    pub neumann: f64,
    pub quadratic: f64,
    pub total: f64,
    /// The same expression with `(n−1)(n−2) − 8(n−1)u₂u_{n+1}` replaced by the
    /// series value of `[h̄^{xx} + q]_{n+1}`.
    pub total_series_route: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub m: usize,
    pub n: usize,
    pub first: f64,
    /// `−(n+1)∫φ̇₀u_{n+1}` (codim 1, `m = n` even).
    pub first_closed_form: Option<f64>,
    pub first_difference: Option<f64>,
    pub second: Option<f64>,
    pub terms: Option<SecondVariationTerms>,
    pub second_closed_form: Option<ClosedFormTerms>,
    pub second_difference: Option<f64>,
}

fn codim1_parts(g: &GraphExpansion) -> Result<(&PhgSeries, &PhgSeries)> {
    if !g.codim1() {
        return Err(VariationError::CodimNotOne);
    }
    Ok((&g.normal()?.cx, &g.metric.q))
}

fn even_hypersurface(g: &GraphExpansion) -> bool {
    g.codim1() && g.m == g.n && g.m.is_multiple_of(2)
}

fn integrate_coeff(b: &BoundaryManifold, s: &PhgSeries, k: usize, log: bool) -> Result<f64> {
    Ok(b.integrate(&s.coeff(k, log)?)?)
}

/// `DV(φ̇) = ∫_γ [φ̇ c^x q]^{(m)}` with the even closed form when defined.
pub fn first_variation(g: &GraphExpansion, j: &JacobiExpansion) -> Result<VariationReport> {
    let (cx, q) = codim1_parts(g)?;
    let phi = j.scalar()?;
    let m = g.m;
    let order = phi.order().min(g.order);
    if order < m + 1 {
        return Err(VariationError::OrderTooLow { order, needed: m + 1 });
    }
    let density = phi.truncate(order).mul(cx)?.mul(q)?;
    let first = integrate_coeff(&g.boundary, &density, m, false)?;
    let closed = if even_hypersurface(g) {
        let n = g.n;
        let c = phi.coeff(0, false)?.mul(&g.u_coeff(0, n + 1)?)?.scale(-(n as f64 + 1.0));
        Some(g.boundary.integrate(&c)?)
    } else {
        None
    };
    Ok(VariationReport {
        m,
        n: g.n,
        first,
        first_closed_form: closed,
        first_difference: closed.map(|c| (c - first).abs()),
        second: None,
        terms: None,
        second_closed_form: None,
        second_difference: None,
    })
}

/// Second variation from the quadratic density `S = φ̇²` (or `φ̇ψ̇` for the
/// polar form, or `Σ_k φ̇_k²` for sums of fields) and the acceleration `φ̈`.
pub fn second_variation_quadratic(
    g: &GraphExpansion,
    phi_sq: &PhgSeries,
    phi_ddot: &PhgSeries,
) -> Result<(SecondVariationTerms, Option<ClosedFormTerms>)> {
    let (cx, q) = codim1_parts(g)?;
    let m = g.m;
    let b = &g.boundary;
    let order = phi_sq.order().min(g.order);
    if order < m + 2 {
        return Err(VariationError::OrderTooLow { order, needed: m + 2 });
    }
    let s = phi_sq.truncate(order);
    let cx2q = cx.mul(cx)?.mul(q)?;
    let a = s.mul(&cx2q)?;
    let i1 = -integrate_coeff(b, &a, m + 1, true)?;
    let i2 = -integrate_coeff(b, &a, m + 1, false)?;
    let qh = q.mul(&g.metric.hinv_xx)?;
    // x·Δx·q = x ∂_s(q h̄^{sx}) + (2−m) q h̄^{xx} + x ∂_x(q h̄^{xx})
    let mut lap = qh.scale(2.0 - m as f64).add(&qh.x_dx())?;
    if let Some(tan) = b.tangential() {
        let qs = q.mul(&g.metric.hinv_sx)?.d_s(&tan).shift_up(1);
        lap = lap.add(&qs)?;
    }
    let i3 = 0.5 * integrate_coeff(b, &s.mul(&lap)?, m + 1, false)?;
    let sh = s.mul(&qh)?;
    let i4 = -0.5 * integrate_coeff(b, &sh, m + 1, false)?;
    let c5 = if m.is_multiple_of(2) { -0.5 } else { -1.0 };
    let i5 = c5 * integrate_coeff(b, &sh, m + 1, true)?;
    let i6 = integrate_coeff(b, &phi_ddot.truncate(order).mul(cx)?.mul(q)?, m, false)?;
    let terms = SecondVariationTerms { i1, i2, i3, i4, i5, i6 };

    let closed = if even_hypersurface(g) {
        let n = g.n;
        let nf = n as f64;
        let u2 = g.u_coeff(0, 2)?;
        let un1 = g.u_coeff(0, n + 1)?;
        let s0 = s.coeff(0, false)?;
        // φ̇ has no odd terms below n+1, so [φ̇²]_{n+1} = 2 φ̇₀ φ̇_{n+1}
        let cross = s.coeff(n + 1, false)?.scale(0.5);
        let acceleration = b.integrate(&phi_ddot.coeff(0, false)?.mul(&un1)?.scale(-(nf + 1.0)))?;
        let neumann = (1.0 - nf) * b.integrate(&cross)?;
        let bracket = u2.mul(&un1)?.scale(-4.0 * (3.0 * nf - 1.0)).add(&Coefficient::Scalar((nf - 1.0) * (nf - 2.0)))?;
        let quadratic = b.integrate(&s0.mul(&bracket)?)?;
        // series route: replace (n−1)(n−2) − 8(n−1)u₂u_{n+1} by [h̄^{xx} + q]_{n+1}
        let hq = g.metric.hinv_xx.coeff(n + 1, false)?.add(&q.coeff(n + 1, false)?)?;
        let alt = hq.add(&u2.mul(&un1)?.scale(-4.0 * (3.0 * nf - 1.0) + 8.0 * (nf - 1.0)))?;
        let quadratic_series = b.integrate(&s0.mul(&alt)?)?;
        Some(ClosedFormTerms {
            acceleration,
            neumann,
            quadratic,
            total: acceleration + neumann + quadratic,
            total_series_route: acceleration + neumann + quadratic_series,
        })
    } else {
        None
    };
    Ok((terms, closed))
}

/// First and second variation of a Jacobi field with acceleration.
pub fn second_variation(g: &GraphExpansion, j: &JacobiExpansion) -> Result<VariationReport> {
    let phi_ddot = j.phi_ddot.as_ref().ok_or(VariationError::MissingAcceleration)?;
    let phi = j.scalar()?;
    let mut report = first_variation(g, j)?;
    let (terms, closed) = second_variation_quadratic(g, &phi.mul(phi)?, phi_ddot)?;
    let total = terms.total();
    report.second = Some(total);
    report.terms = Some(terms);
    report.second_difference = closed.map(|c| (c.total - total).abs());
    report.second_closed_form = closed;
    Ok(report)
}

/// Symmetric bilinear part of the second variation (the `φ̇`-quadratic terms).
pub fn second_variation_bilinear(g: &GraphExpansion, a: &JacobiExpansion, b: &JacobiExpansion) -> Result<f64> {
    let prod = a.scalar()?.mul(b.scalar()?)?;
    let zero = PhgSeries::zero(prod.order(), g.m, true);
    Ok(second_variation_quadratic(g, &prod, &zero)?.0.total())
}

/// Killing data of the horizontal translation `∂_{y_k}` along a planar-curve
/// expansion: `φ̇ = ⟨e_k, ν̄⟩` and `φ̈ = II(e_k^⊤, e_k^⊤)`.
pub fn translation_field(g: &GraphExpansion, direction: usize) -> Result<JacobiExpansion> {
    let curve = match &g.boundary {
        BoundaryManifold::Curve(c) if c.n == 2 && g.codim1() => c,
        _ => return Err(VariationError::Unsupported("per-direction Killing data needs a planar curve".into())),
    };
    let mut e = [0.0; 2];
    e[direction.min(1)] = 1.0;
    let nr = g.normal()?;
    let e_n = Coefficient::Grid(curve.normals[0].iter().map(|v| v[0] * e[0] + v[1] * e[1]).collect());
    let e_t = Coefficient::Grid(curve.tangent.iter().map(|v| v[0] * e[0] + v[1] * e[1]).collect());
    let phi = nr.cz.mul_coeff(&e_n)?.add(&nr.ca.mul_coeff(&e_t)?)?;
    let phi_ddot = translation_acceleration(&g.u, &g.boundary, e)?;
    let neumann = phi.coeff(g.m + 1, false)?;
    Ok(JacobiExpansion {
        graph_variation: vec![phi.mul(&nr.cz.invert()?)?],
        phi_dot: vec![phi],
        dirichlet: NormalField { components: vec![e_n] },
        neumann: NormalField { components: vec![neumann] },
        log_coefficient: None,
        phi_ddot: Some(phi_ddot),
        residual: 0.0,
    })
}

/// `(Σ_k φ̇_k², Σ_k φ̈_k)` over all horizontal translations for a rotational
/// graph over a round sphere of radius `R`:
/// `Σφ̇² = (c^z)²`, `Σφ̈ = −(m−1)c^z/r + u_x² u_xx / (1+u_x²)^{5/2}`, `r = R + u`.
fn sphere_translation_sums(g: &GraphExpansion) -> Result<(PhgSeries, PhgSeries)> {
    let radius = match &g.boundary {
        BoundaryManifold::RoundSphere(s) => s.radius,
        _ => return Err(VariationError::Unsupported("sphere sums need a round sphere".into())),
    };
    let m = g.m as f64;
    let order = g.order;
    let u = g.u[0].with_order(order + 2);
    let one = Coefficient::Scalar(1.0);
    let cz = g.normal()?.cz.clone();
    let r = u.add_const(&Coefficient::Scalar(radius))?;
    let ux = u.dx()?;
    let uxx = ux.dx()?;
    let w = ux.mul(&ux)?.add_const(&one)?;
    let acc = cz
        .with_order(order + 2)
        .mul(&r.invert()?)?
        .scale(-(m - 1.0))
        .add(&ux.mul(&ux)?.mul(&uxx)?.mul(&w.powf(-2.5)?)?)?;
    Ok((cz.mul(&cz)?.truncate(order), acc.truncate(order)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KillingReport {
    /// Translation directions summed (`None` = all horizontal directions).
    pub direction: Option<usize>,
    pub terms: SecondVariationTerms,
    /// Second variation, general formula (vanishes for an isometry flow).
    pub second: f64,
    pub closed_form: Option<ClosedFormTerms>,
    /// `⟨u₂, u_{n+1}⟩_{L²(γ)} / Vol(γ)` and the value the identity predicts.
    pub l2_ratio: f64,
    pub l2_predicted: Option<f64>,
    pub l2_residual: Option<f64>,
}

/// `−(n−1)(n−2) / (2(n² − 6n + 1))`: the even-dimensional `⟨u₂,u_{n+1}⟩/Vol` value.
pub fn even_l2_prediction(n: usize) -> f64 {
    let nf = n as f64;
    -(nf - 1.0) * (nf - 2.0) / (2.0 * (nf * nf - 6.0 * nf + 1.0))
}

/// Second variation along horizontal translations. For planar curves a
/// single `direction` (0 or 1) or the sum over both; for round spheres the
/// sum over all directions.
pub fn killing_check(g: &GraphExpansion, direction: Option<usize>) -> Result<KillingReport> {
    if !g.codim1() {
        return Err(VariationError::CodimNotOne);
    }
    let (s, acc) = match (&g.boundary, direction) {
        (BoundaryManifold::Curve(_), Some(k)) => {
            let f = translation_field(g, k)?;
            let p = &f.phi_dot[0];
            (p.mul(p)?, f.phi_ddot.unwrap_or_else(|| PhgSeries::zero(g.order, g.m, true)))
        }
        (BoundaryManifold::Curve(_), None) => {
            let a = translation_field(g, 0)?;
            let b = translation_field(g, 1)?;
            let s = a.phi_dot[0].mul(&a.phi_dot[0])?.add(&b.phi_dot[0].mul(&b.phi_dot[0])?)?;
            let acc = a.phi_ddot.as_ref().zip(b.phi_ddot.as_ref()).map(|(x, y)| x.add(y)).transpose()?;
            (s, acc.unwrap_or_else(|| PhgSeries::zero(g.order, g.m, true)))
        }
        (BoundaryManifold::RoundSphere(_), None) => sphere_translation_sums(g)?,
        (BoundaryManifold::RoundSphere(_), Some(_)) => {
            return Err(VariationError::Unsupported("single directions on round spheres (only the sum is rotation invariant)".into()))
        }
    };
    let (terms, closed) = second_variation_quadratic(g, &s, &acc)?;
    let n = g.n;
    let l2_ratio = g.boundary.l2_inner(&g.u_coeff(0, 2)?, &g.u_coeff(0, n + 1)?)? / g.boundary.volume();
    let l2_predicted = if g.m == n && n.is_multiple_of(2) { Some(even_l2_prediction(n)) } else { None };
    Ok(KillingReport {
        direction,
        second: terms.total(),
        terms,
        closed_form: closed,
        l2_ratio,
        l2_predicted,
        l2_residual: l2_predicted.map(|p| l2_ratio - p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{expand_minimal_graph, hemisphere_neumann};
    use std::f64::consts::PI;

    fn circle_expansion(r: f64, p: usize, neumann: Coefficient) -> GraphExpansion {
        let b = BoundaryManifold::circle(r, 2, p).unwrap();
        expand_minimal_graph(&b, 2, 2, &NormalField { components: vec![neumann] }, 8).unwrap()
    }

    fn cos_grid(p: usize, k: f64, phase: f64) -> Vec<f64> {
        (0..p).map(|i| (k * 2.0 * PI * i as f64 / p as f64 + phase).cos()).collect()
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let g = circle_expansion(1.0, 32, Coefficient::Scalar(0.0));
        let j = jacobi_expansion(&g, &NormalField::zero(&g.boundary), &NormalField::zero(&g.boundary), 6).unwrap();
        assert_eq!(j.phi_dot[0].max_abs(), 0.0);
    }

    #[test]
    fn translation_field_of_hemisphere() {
        // φ̇ = ⟨e₁, ν̄⟩ = √(1 − x²) cos θ on the unit hemisphere
        let p = 32;
        let g = circle_expansion(1.0, p, Coefficient::Scalar(0.0));
        let c = Coefficient::Grid(cos_grid(p, 1.0, 0.0));
        let j = jacobi_expansion(&g, &NormalField { components: vec![c] }, &NormalField::scalar(0.0), 6).unwrap();
        let exact = [(0, 1.0), (2, -0.5), (4, -0.125)];
        for (k, e) in exact {
            let got = j.phi_dot[0].coeff(k, false).unwrap();
            let cg = cos_grid(p, 1.0, 0.0);
            assert!((0..p).all(|i| (got.at(i) - e * cg[i]).abs() < 1e-6), "order {k}");
        }
        for k in [1, 3, 5] {
            assert!(j.phi_dot[0].coeff(k, false).unwrap().max_abs() < 1e-6, "order {k}");
        }
        // agrees with the direct Killing data
        let t = translation_field(&g, 0).unwrap();
        let d = j.phi_dot[0].sub(&t.phi_dot[0]).unwrap().max_abs();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn dilation_field_matches_finite_differences() {
        // graphs over circles R ± h, re-expressed over the radius-R cylinder
        let r = 1.3;
        let g = circle_expansion(r, 16, Coefficient::Scalar(0.0));
        let j = jacobi_expansion(&g, &NormalField::scalar(1.0), &NormalField::scalar(0.0), 6).unwrap();
        let fd = |h: f64| {
            let a = circle_expansion(r + h, 16, Coefficient::Scalar(0.0));
            let b = circle_expansion(r - h, 16, Coefficient::Scalar(0.0));
            (1..=6).map(|k| (a.u_coeff(0, k).unwrap().at(0) - b.u_coeff(0, k).unwrap().at(0)) / (2.0 * h)).collect::<Vec<_>>()
        };
        let (f1, f2) = (fd(1e-3), fd(5e-4));
        for k in 1..=6 {
            let oracle = (4.0 * f2[k - 1] - f1[k - 1]) / 3.0;
            let got = j.graph_variation[0].coeff(k, false).unwrap().at(0);
            assert!((got - oracle).abs() < 1e-5, "order {k}: {got} vs {oracle}");
        }
        // the concentric dilation moves every point by a unit normal distance
        assert!(j.phi_dot[0].sub(&PhgSeries::constant(1.0, 6, 2, true)).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn odd_m_sphere_dilation() {
        let r = 1.0;
        let b = BoundaryManifold::sphere(r, 3).unwrap();
        let g = expand_minimal_graph(&b, 3, 3, &NormalField::scalar(hemisphere_neumann(r, 3)), 8).unwrap();
        let j = jacobi_expansion(&g, &NormalField::scalar(1.0), &NormalField::scalar(0.0), 7).unwrap();
        assert!(j.phi_dot[0].sub(&PhgSeries::constant(1.0, 7, 3, true)).unwrap().max_abs() < 1e-6);
        assert!(j.log_coefficient.unwrap().components[0].max_abs() < 1e-8);
    }

    #[test]
    fn hemisphere_first_variation_vanishes() {
        let p = 32;
        let g = circle_expansion(1.0, p, Coefficient::Scalar(0.0));
        let c = Coefficient::Grid(cos_grid(p, 2.0, 0.3));
        let j = jacobi_expansion(&g, &NormalField { components: vec![c] }, &NormalField::scalar(0.2), 6).unwrap();
        let r = first_variation(&g, &j).unwrap();
        assert!(r.first.abs() < 1e-10 && r.first_closed_form.unwrap().abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn general_and_closed_forms_agree_on_random_data() {
        let p = 64;
        let u3: Vec<f64> = (0..p).map(|i| 0.3 * cos_grid(p, 2.0, 0.1)[i] - 0.2 * cos_grid(p, 3.0, 1.0)[i] + 0.05).collect();
        let g = circle_expansion(1.0, p, Coefficient::Grid(u3));
        let d: Vec<f64> = (0..p).map(|i| 0.7 + cos_grid(p, 1.0, 0.4)[i] - 0.4 * cos_grid(p, 2.0, 2.0)[i]).collect();
        let nm: Vec<f64> = (0..p).map(|i| 0.1 * cos_grid(p, 1.0, 0.0)[i] + 0.3 * cos_grid(p, 4.0, 0.5)[i]).collect();
        let acc: Vec<f64> = (0..p).map(|i| 0.5 - 0.2 * cos_grid(p, 3.0, 0.2)[i]).collect();
        let j = jacobi_expansion(&g, &NormalField { components: vec![Coefficient::Grid(d)] }, &NormalField { components: vec![Coefficient::Grid(nm)] }, 6)
            .unwrap()
            .with_acceleration(PhgSeries::constant(Coefficient::Grid(acc), 6, 2, true));
        let r = second_variation(&g, &j).unwrap();
        assert!(r.first_difference.unwrap() < 1e-8, "{r:?}");
        assert!(r.second_difference.unwrap() < 1e-8, "{r:?}");
        let t = r.terms.unwrap();
        assert!(t.i1.abs() < 1e-12 && t.i5.abs() < 1e-12, "{t:?}");
    }

    #[test]
    fn acceleration_only_leaves_the_neumann_term() {
        let p = 32;
        let u3: Vec<f64> = cos_grid(p, 2.0, 0.0).iter().map(|c| 0.2 * c + 0.1).collect();
        let g = circle_expansion(1.0, p, Coefficient::Grid(u3.clone()));
        let j = jacobi_expansion(&g, &NormalField::zero(&g.boundary), &NormalField::zero(&g.boundary), 6)
            .unwrap()
            .with_acceleration(PhgSeries::constant(0.7, 6, 2, true));
        let r = second_variation(&g, &j).unwrap();
        let expected = -3.0 * 0.7 * g.boundary.integrate(&Coefficient::Grid(u3)).unwrap();
        assert!((r.second.unwrap() - expected).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn hemisphere_translations_are_isometries() {
        let g = circle_expansion(1.0, 32, Coefficient::Scalar(0.0));
        for k in [Some(0), Some(1), None] {
            let r = killing_check(&g, k).unwrap();
            assert!(r.second.abs() < 1e-10, "{r:?}");
            assert!(r.closed_form.unwrap().total.abs() < 1e-10);
        }
        let b = BoundaryManifold::sphere(1.0, 2).unwrap();
        let gs = expand_minimal_graph(&b, 2, 2, &NormalField::zero(&b), 8).unwrap();
        assert!(killing_check(&gs, None).unwrap().second.abs() < 1e-12);
    }

    #[test]
    fn four_dimensional_hemisphere_report() {
        let b = BoundaryManifold::sphere(1.0, 4).unwrap();
        let g = expand_minimal_graph(&b, 4, 4, &NormalField::zero(&b), 8).unwrap();
        let r = killing_check(&g, None).unwrap();
        assert_eq!(r.l2_ratio, 0.0);
        assert!((r.l2_predicted.unwrap() - 3.0 / 7.0).abs() < 1e-15);
        assert!(r.second.abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn bilinear_form_is_symmetric() {
        let p = 32;
        let g = circle_expansion(1.0, p, Coefficient::Grid(cos_grid(p, 2.0, 0.0).iter().map(|c| 0.1 * c).collect()));
        let mk = |k: f64, ph: f64, nm: f64| {
            jacobi_expansion(&g, &NormalField { components: vec![Coefficient::Grid(cos_grid(p, k, ph))] }, &NormalField::scalar(nm), 6).unwrap()
        };
        let (a, b) = (mk(1.0, 0.2, 0.1), mk(2.0, 1.1, -0.3));
        let ab = second_variation_bilinear(&g, &a, &b).unwrap();
        let ba = second_variation_bilinear(&g, &b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        // polarization: Q(a+b) − Q(a−b) = 4B(a, b)
        let sum = |s: f64| {
            let phi = a.phi_dot[0].add(&b.phi_dot[0].scale(s)).unwrap();
            let zero = PhgSeries::zero(6, 2, true);
            second_variation_quadratic(&g, &phi.mul(&phi).unwrap(), &zero).unwrap().0.total()
        };
        assert!((sum(1.0) - sum(-1.0) - 4.0 * ab).abs() < 1e-10);
    }
}
