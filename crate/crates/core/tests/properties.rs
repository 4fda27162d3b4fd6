//! Property-based tests of the library invariants.

use std::f64::consts::PI;

use hyperrv::boundary::{build_curve, BoundaryManifold, NormalField};
use hyperrv::expansion::{apply_indicial, expand_minimal_graph, hemisphere_neumann, solve_indicial, GraphExpansion};
use hyperrv::phg::{Coefficient, Parity, PhgSeries, Stencil, PARITY_TOL};
use hyperrv::renvol::{self, HemisphereTail, TailProvider};
use hyperrv::solver::{self, Family, SolverOptions};
use hyperrv::variation::{jacobi_expansion, second_variation, second_variation_bilinear};
use proptest::prelude::*;

const ORDER: usize = 6;
const GRID: usize = 8;

/// A coefficient: scalar or a grid of `GRID` samples.
fn coefficient() -> impl Strategy<Value = Coefficient> {
    prop_oneof![
        (-1.0..1.0f64).prop_map(Coefficient::Scalar),
        prop::collection::vec(-1.0..1.0f64, GRID).prop_map(Coefficient::Grid),
    ]
}

/// Plain series `Σ c_k x^k` through `ORDER` for `m` in 2..=5.
fn plain_series(m: usize) -> impl Strategy<Value = PhgSeries> {
    prop::collection::vec(prop::option::of(coefficient()), ORDER + 1).prop_map(move |cs| {
        PhgSeries::from_terms(ORDER, m, true, cs.into_iter().enumerate().filter_map(|(k, c)| c.map(|c| (k, false, c)))).unwrap()
    })
}

/// Series with optional `x^k log x` terms above order 1.
fn log_series(m: usize) -> impl Strategy<Value = PhgSeries> {
    (plain_series(m), prop::collection::vec(prop::option::of(-1.0..1.0f64), ORDER + 1)).prop_map(move |(mut s, logs)| {
        for (k, c) in logs.into_iter().enumerate().skip(1) {
            if let Some(c) = c {
                s.add_term(k, true, &Coefficient::Scalar(c)).unwrap();
            }
        }
        s
    })
}

/// Series of one parity with nonvanishing leading term.
fn parity_series(m: usize, odd: bool) -> impl Strategy<Value = PhgSeries> {
    prop::collection::vec(0.2..1.0f64, ORDER + 1).prop_map(move |cs| {
        let terms = cs.into_iter().enumerate().filter(|(k, _)| (k % 2 == 1) == odd).map(|(k, c)| (k, false, Coefficient::Scalar(c)));
        PhgSeries::from_terms(ORDER, m, true, terms).unwrap()
    })
}

fn close(a: &PhgSeries, b: &PhgSeries, tol: f64) -> bool {
    a.sub(b).unwrap().max_abs() <= tol * (1.0 + a.max_abs().max(b.max_abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws((a, b, c) in (2usize..=5).prop_flat_map(|m| (log_series(m), plain_series(m), plain_series(m)))) {
        prop_assert!(close(&a.add(&b).unwrap(), &b.add(&a).unwrap(), 1e-12));
        prop_assert!(close(&a.add(&b).unwrap().add(&c).unwrap(), &a.add(&b.add(&c).unwrap()).unwrap(), 1e-12));
        prop_assert!(close(&a.mul(&b).unwrap(), &b.mul(&a).unwrap(), 1e-12));
        prop_assert!(close(&a.mul(&b).unwrap().mul(&c).unwrap(), &a.mul(&b.mul(&c).unwrap()).unwrap(), 1e-12));
        prop_assert!(close(&a.mul(&b.add(&c).unwrap()).unwrap(), &a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap(), 1e-12));
    }

    #[test]
    fn invert_and_sqrt_round_trip(lead in 0.5..2.0f64, rest in prop::collection::vec(-0.5..0.5f64, ORDER), m in 2usize..=5) {
        let mut cs = vec![lead];
        cs.extend(rest);
        let a = PhgSeries::from_scalars(&cs, ORDER, m, true);
        let one = PhgSeries::constant(1.0, ORDER, m, true);
        prop_assert!(a.mul(&a.invert().unwrap()).unwrap().sub(&one).unwrap().max_abs() < 1e-10);
        let r = a.sqrt().unwrap();
        prop_assert!(r.mul(&r).unwrap().sub(&a).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn parity_is_multiplicative(
        (odd_a, odd_b, a, b) in (2usize..=5, any::<bool>(), any::<bool>())
            .prop_flat_map(|(m, oa, ob)| (Just(oa), Just(ob), parity_series(m, oa), parity_series(m, ob)))
    ) {
        let (fa, fb) = (a.parity(PARITY_TOL), b.parity(PARITY_TOL));
        prop_assert_eq!(fa, if odd_a { Parity::Odd } else { Parity::Even });
        prop_assert_eq!(fb, if odd_b { Parity::Odd } else { Parity::Even });
        prop_assert_eq!(a.mul(&b).unwrap().parity(PARITY_TOL), fa.times(fb));
    }

    #[test]
    fn x_dx_preserves_support(s in log_series(3)) {
        let d = s.x_dx();
        for (k, _, c) in d.terms() {
            if c.max_abs() > 0.0 {
                prop_assert!(s.get(k, false).is_some() || s.get(k, true).is_some(), "x∂x created order {}", k);
            }
        }
    }

    #[test]
    fn indicial_round_trip(m in 2usize..=6, plain in prop::collection::vec(-1.0..1.0f64, 11), logs in prop::collection::vec(prop::option::of(-1.0..1.0f64), 11)) {
        let order = m + 4;
        let mut src = PhgSeries::zero(order, m, true);
        for k in 0..order {
            src.add_term(k, false, &Coefficient::Scalar(plain[k])).unwrap();
            // a log source at the resonant order has no polyhomogeneous preimage
            if let (true, Some(c)) = (k != m, logs[k]) {
                src.add_term(k, true, &Coefficient::Scalar(c)).unwrap();
            }
        }
        let w = solve_indicial(&src, m).unwrap();
        prop_assert!(apply_indicial(&w, m).unwrap().sub(&src).unwrap().max_abs() < 1e-12);
    }
}

/// Smooth closed curve: a circle with small Fourier wobbles.
fn wobbly_curve(n: usize, amp: &[f64], p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / p as f64;
            let r = 1.0 + amp[0] * (2.0 * t).cos() + amp[1] * (3.0 * t + 0.4).sin();
            let mut v = vec![r * t.cos(), r * t.sin()];
            if n == 3 {
                v.push(amp[2] * (2.0 * t).sin() + amp[3] * t.cos());
            }
            v
        })
        .collect()
}

fn curve_of(b: &BoundaryManifold) -> &hyperrv::boundary::Curve {
    match b {
        BoundaryManifold::Curve(c) => c,
        _ => panic!("expected a curve"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trigonometric_quadrature_is_exact(a in 1.0..2.5f64, b in 0.5..1.0f64, k in 1usize..16) {
        let p = 64;
        let bm = BoundaryManifold::ellipse(a, b, 2, p).unwrap();
        let c = curve_of(&bm);
        let f: Vec<f64> = (0..p).map(|j| (2.0 * PI * k as f64 * c.arclength(j) / c.length).cos()).collect();
        prop_assert!(bm.integrate(&Coefficient::Grid(f)).unwrap().abs() < 1e-10 * c.length);
        prop_assert!((bm.integrate(&Coefficient::Scalar(1.0)).unwrap() - c.length).abs() < 1e-12 * c.length);
    }

    #[test]
    fn frames_are_orthonormal(amp in prop::collection::vec(-0.15..0.15f64, 4)) {
        let b = build_curve(&wobbly_curve(3, &amp, 128), Stencil::Spectral).unwrap();
        let c = curve_of(&b);
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        for j in 0..c.len() {
            for i in 0..2 {
                prop_assert!(dot(&c.normals[i][j], &c.tangent[j]).abs() < 1e-8);
                prop_assert!((dot(&c.normals[i][j], &c.normals[i][j]) - 1.0).abs() < 1e-8);
            }
            prop_assert!(dot(&c.normals[0][j], &c.normals[1][j]).abs() < 1e-8);
        }
    }

    #[test]
    fn circle_curvature_scales_inversely(r in 0.2..5.0f64) {
        let h = |r: f64| BoundaryManifold::circle(r, 2, 32).unwrap().mean_curvature().components[0].at(0);
        prop_assert!((h(2.0 * r) - 0.5 * h(r)).abs() < 1e-6 * h(r).abs());
    }
}

fn planar_expansion(amp: &[f64], neumann: f64, order: usize) -> GraphExpansion {
    let b = build_curve(&wobbly_curve(2, amp, 64), Stencil::Spectral).unwrap();
    expand_minimal_graph(&b, 2, 2, &NormalField::scalar(neumann), order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn expansion_residual_vanishes(amp in prop::collection::vec(-0.1..0.1f64, 2), nu in -1.0..1.0f64) {
        let g = planar_expansion(&amp, nu, ORDER);
        let scale = g.u[0].max_abs();
        for r in g.residual().unwrap() {
            for k in 0..ORDER {
                let c = r.coeff(k, false).unwrap().max_abs().max(r.coeff(k, true).unwrap().max_abs());
                prop_assert!(c < 1e-8 * scale, "order {} residual {:e}", k, c);
            }
        }
    }

    #[test]
    fn neumann_enters_affinely_above_order_m(amp in prop::collection::vec(-0.1..0.1f64, 2), n1 in -1.0..1.0f64, n2 in -1.0..1.0f64) {
        let d = planar_expansion(&amp, n1, ORDER).u[0].sub(&planar_expansion(&amp, n2, ORDER).u[0]).unwrap();
        for k in 0..=2 {
            prop_assert!(d.coeff(k, false).unwrap().max_abs() < 1e-12);
        }
        prop_assert!((d.coeff(3, false).unwrap().max_abs() - (n1 - n2).abs()).abs() < 1e-10);
    }

    #[test]
    fn expansion_scales_with_the_boundary(r in 0.3..3.0f64, lambda in 0.5..2.0f64) {
        let u = |r: f64| {
            let b = BoundaryManifold::circle(r, 2, 16).unwrap();
            expand_minimal_graph(&b, 2, 2, &NormalField::scalar(0.0), ORDER).unwrap().u[0].clone()
        };
        let (a, b) = (u(r), u(lambda * r));
        prop_assert!((a.coeff(2, false).unwrap().at(0) + 0.5 / r).abs() < 1e-12);
        for k in 0..=ORDER {
            let expected = a.coeff(k, false).unwrap().at(0) * lambda.powi(1 - k as i32);
            prop_assert!((b.coeff(k, false).unwrap().at(0) - expected).abs() < 1e-10 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn expansion_parities(a in 1.1..2.5f64, n in 2usize..=3) {
        let b = BoundaryManifold::ellipse(a, 1.0, n, 64).unwrap();
        let g = expand_minimal_graph(&b, 2, n, &NormalField::zero(&b), ORDER).unwrap();
        for u in &g.u {
            prop_assert!(u.parity(PARITY_TOL).is_compatible_with(Parity::Even));
        }
        prop_assert!(g.metric.h_sx.parity(PARITY_TOL).is_compatible_with(Parity::Odd));
        prop_assert_eq!(g.metric.q.parity(PARITY_TOL), Parity::Even);
        prop_assert!(g.u.iter().all(|u| u.first_log_order(1e-12).is_none_or(|k| k > 3)));
    }

    #[test]
    fn riesz_is_independent_of_the_split(r in 0.5..2.0f64, m in 2usize..=4) {
        let b = BoundaryManifold::sphere(r, m).unwrap();
        let g = expand_minimal_graph(&b, m, m, &NormalField::scalar(hemisphere_neumann(r, m)), m + 4).unwrap();
        let tail = HemisphereTail::new(r, m);
        let a = renvol::riesz_rv(&g, &tail, 0.05 * r).unwrap().finite_part;
        let c = renvol::riesz_rv(&g, &tail, 0.2 * r).unwrap().finite_part;
        prop_assert!((a - c).abs() < 1e-6 * a.abs().max(1.0), "{} vs {}", a, c);
    }

    #[test]
    fn finite_part_is_linear_in_b(b1 in prop::collection::vec(-1.0..1.0f64, 5), b2 in prop::collection::vec(-1.0..1.0f64, 5), s in -2.0..2.0f64, p in 1usize..=2) {
        let bm = BoundaryManifold::sphere(1.0, 2).unwrap();
        let g = expand_minimal_graph(&bm, 2, 2, &NormalField::scalar(0.0), ORDER).unwrap();
        let (b1, b2) = (PhgSeries::from_scalars(&b1, ORDER, 2, true), PhgSeries::from_scalars(&b2, ORDER, 2, true));
        let f = |b: &PhgSeries| renvol::finite_part(b, &g.metric.q, &g.boundary, 2, 0, p, None, 0.0).unwrap().finite_part;
        let lhs = f(&b1.scale(s).add(&b2).unwrap());
        prop_assert!((lhs - s * f(&b1) - f(&b2)).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn localized_finite_parts_ignore_high_orders(b in prop::collection::vec(-1.0..1.0f64, 4), hi in -5.0..5.0f64, p in 1usize..=2) {
        let bm = BoundaryManifold::sphere(1.0, 2).unwrap();
        let g = expand_minimal_graph(&bm, 2, 2, &NormalField::scalar(0.0), ORDER).unwrap();
        let base = PhgSeries::from_scalars(&b, ORDER, 2, true);
        let bumped = base.add(&PhgSeries::monomial(hi, 5, false, ORDER, 2, true)).unwrap();
        let f = |b: &PhgSeries| renvol::finite_part(b, &g.metric.q, &g.boundary, 2, 0, p, None, 0.0).unwrap().finite_part;
        prop_assert_eq!(f(&base), f(&bumped));
    }

    #[test]
    fn bilinear_second_variation_is_symmetric(c1 in prop::collection::vec(-1.0..1.0f64, 3), c2 in prop::collection::vec(-1.0..1.0f64, 3), u3 in -0.3..0.3f64) {
        let p = 32;
        let b = BoundaryManifold::circle(1.0, 2, p).unwrap();
        let g = expand_minimal_graph(&b, 2, 2, &NormalField::scalar(u3), ORDER).unwrap();
        let field = |c: &[f64]| {
            let d: Vec<f64> = (0..p).map(|j| {
                let t = 2.0 * PI * j as f64 / p as f64;
                c[0] + c[1] * t.cos() + c[2] * (2.0 * t).sin()
            }).collect();
            jacobi_expansion(&g, &NormalField { components: vec![Coefficient::Grid(d)] }, &NormalField::scalar(c[0] * 0.1), ORDER).unwrap()
        };
        let (a, bb) = (field(&c1), field(&c2));
        let ab = second_variation_bilinear(&g, &a, &bb).unwrap();
        let ba = second_variation_bilinear(&g, &bb, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10 * (1.0 + ab.abs()));
        // I₁ and I₅ vanish in the even codimension-1 case
        let t = second_variation(&g, &a.with_acceleration(PhgSeries::constant(0.3, ORDER, 2, true))).unwrap().terms.unwrap();
        prop_assert!(t.i1.abs() < 1e-12 && t.i5.abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn solver_hemisphere_area(r in 0.5..2.0f64) {
        let p = solver::solve_rotational(Family::Hemisphere { radius: r }, 2, &SolverOptions::default()).unwrap();
        let v = solver::profile_riesz(&p, 0.1 * r, 8).unwrap().finite_part;
        prop_assert!((v + 2.0 * PI).abs() < 1e-5, "{}", v);
        let fit = &p.coefficients[0];
        prop_assert!((fit.coefficient(2).unwrap() + 0.5 / r).abs() < 5e-4);
    }

    #[test]
    fn tail_is_continuous_in_z(rho in 1.2..2.5f64) {
        let p = solver::solve_rotational(Family::Catenoid { inner: 1.0, outer: rho }, 2, &SolverOptions::default()).unwrap();
        let t = |z: f64| p.tail(0.1, z).unwrap();
        let t0 = t(0.0);
        let (d1, d2) = (t(1e-4) - t0, t(2e-4) - t0);
        // Lipschitz with the first-order slope
        prop_assert!((d2 - 2.0 * d1).abs() < 1e-3 * d1.abs().max(1e-9));
        prop_assert!(d1.abs() < 1e-2 * t0.abs().max(1.0));
    }
}

#[test]
fn catenoid_area_is_smooth_in_the_ratio() {
    let v: Vec<f64> = (0..5)
        .map(|i| {
            let rho = 1.8 + 0.05 * i as f64;
            let p = solver::solve_rotational(Family::Catenoid { inner: 1.0, outer: rho }, 2, &SolverOptions::default()).unwrap();
            solver::profile_riesz(&p, 0.1, 8).unwrap().finite_part
        })
        .collect();
    let first: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let second: Vec<f64> = first.windows(2).map(|w| w[1] - w[0]).collect();
    let bound = first.iter().map(|d| d.abs()).fold(0.0, f64::max);
    assert!(second.iter().all(|d| d.abs() < 0.5 * bound), "first {first:?}, second {second:?}");
    let third: Vec<f64> = second.windows(2).map(|w| w[1] - w[0]).collect();
    let sbound = second.iter().map(|d| d.abs()).fold(0.0, f64::max);
    assert!(third.iter().all(|d| d.abs() < 0.5 * sbound.max(1e-9)), "second {second:?}, third {third:?}");
}

#[test]
fn solver_coefficients_converge_with_tolerance() {
    // the profile ODE is integrated adaptively: tightening the tolerance
    // must not increase the u₂ error of a catenoid component
    let err = |rtol: f64| {
        let opts = SolverOptions { rtol, atol: rtol * 1e-2, ..SolverOptions::default() };
        let p = solver::solve_rotational(Family::Catenoid { inner: 1.0, outer: 2.0 }, 2, &opts).unwrap();
        p.coefficients.iter().map(|f| (f.coefficient(2).unwrap() - f.u2_expected).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(1e-7), err(1e-13));
    assert!(fine <= coarse.max(1e-9), "coarse {coarse:e}, fine {fine:e}");
    assert!(fine < 5e-4);
}
