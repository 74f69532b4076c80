use std::collections::BTreeMap;

use super::*;
use crate::field::{constant, expr_field};

fn metric(coords: &[&str], comps: &[&str]) -> MetricField {
    let p = BTreeMap::new();
    let c = comps
        .iter()
        .map(|s| expr_field(s, coords, &p).unwrap())
        .collect();
    MetricField::new(coords, c).unwrap()
}

const X4: [&str; 4] = ["x1", "x2", "x3", "x4"];

fn generic4() -> MetricField {
    metric(
        &X4,
        &[
            "-1 + 0.1*x1*x2", "0.2*sin(x3)", "1", "0.05*x4^2",
            "1 + 0.1*x1^2", "0.1*x2*x3", "0",
            "-1 + 0.05*exp(x4)", "0.1*x1",
            "1 + 0.1*cos(x2)",
        ],
    )
}

fn max_abs(v: &[Jet]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.value().abs()))
}

#[test]
fn flat_metric_has_no_curvature() {
    let m = metric(&X4, &["-1", "0", "0", "0", "1", "0", "0", "-1", "0", "1"]);
    let geo = m.geometry(&[0.1, 0.2, 0.3, 0.4], 3).unwrap();
    assert_eq!(max_abs(&geo.gamma), 0.0);
    assert_eq!(max_abs(&geo.riem), 0.0);
    assert_eq!(max_abs(&geo.ricci), 0.0);
    assert_eq!(geo.tau.value(), 0.0);
    assert_eq!(max_abs(&geo.weyl().unwrap()), 0.0);
    assert_eq!(max_abs(&geo.cotton().unwrap()), 0.0);
}

#[test]
fn constant_rescaling_stays_flat() {
    let m = metric(&X4, &["-3", "0", "0", "0", "3", "0", "0", "-3", "0", "3"]);
    let geo = m.geometry(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
    assert_eq!(max_abs(&geo.gamma), 0.0);
    assert_eq!(max_abs(&geo.riem), 0.0);
}

#[test]
fn round_sphere_scalar_curvature() {
    // frozen regression value under the curvature sign used here
    let m = metric(&["th", "ph"], &["1", "0", "sin(th)^2"]);
    for th in [0.4, 1.0, 2.2] {
        let geo = m.geometry(&[th, 0.3], 2).unwrap();
        assert!((geo.tau.value() - 2.0).abs() < 1e-12);
        // ρ = g on the unit sphere
        assert!((geo.ricci[0].value() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn riemann_symmetries_and_bianchi() {
    let m = generic4();
    let geo = m.geometry(&[0.3, -0.2, 0.5, 0.7], 3).unwrap();
    let n = 4;
    let r = |a, b, c, d| geo.riem[i4(n, a, b, c, d)].value();
    let scale = max_abs(&geo.riem).max(1.0);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    assert!((r(a, b, c, d) + r(b, a, c, d)).abs() < 1e-9 * scale);
                    assert!((r(a, b, c, d) + r(a, b, d, c)).abs() < 1e-9 * scale);
                    assert!((r(a, b, c, d) - r(c, d, a, b)).abs() < 1e-9 * scale);
                    assert!((r(a, b, c, d) + r(b, c, a, d) + r(c, a, b, d)).abs() < 1e-9 * scale);
                }
            }
        }
    }
    // Ricci symmetric
    for a in 0..n {
        for b in 0..n {
            assert!((geo.ricci[i2(n, a, b)].value() - geo.ricci[i2(n, b, a)].value()).abs() < 1e-10);
        }
    }
}

#[test]
fn weyl_is_trace_free() {
    let m = generic4();
    let geo = m.geometry(&[0.3, -0.2, 0.5, 0.7], 2).unwrap();
    let w = geo.weyl().unwrap();
    let n = 4;
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += geo.ginv_at(i, k).value() * w[i4(n, i, j, k, l)].value();
                }
            }
            assert!(s.abs() < 1e-8, "trace {s}");
        }
    }
}

#[test]
fn weyl_vanishes_in_dimension_three() {
    let m = metric(
        &["a", "b", "c"],
        &["1 + a^2", "0.3*b", "0.1*c", "2 + sin(a)", "0.2*a*b", "1 + c^2"],
    );
    let geo = m.geometry(&[0.3, 0.4, 0.5], 2).unwrap();
    assert!(max_abs(&geo.weyl().unwrap()) < 1e-8);
    let m2 = metric(&["a", "b"], &["1", "0", "1"]);
    let geo2 = m2.geometry(&[0.0, 0.0], 3).unwrap();
    assert!(matches!(geo2.weyl(), Err(Error::UnsupportedDimension(_))));
}

#[test]
fn einstein_three_sphere_has_no_cotton() {
    let m = metric(
        &["a", "b", "c"],
        &["1", "0", "0", "sin(a)^2", "0", "sin(a)^2*sin(b)^2"],
    );
    let geo = m.geometry(&[1.0, 0.8, 0.1], 3).unwrap();
    assert!((geo.tau.value() - 6.0).abs() < 1e-10);
    assert!(max_abs(&geo.cotton().unwrap()) < 1e-10);
    assert!(max_abs(&geo.nabla_ricci().unwrap()) < 1e-10);
}

#[test]
fn cotton_matches_weyl_divergence() {
    let m = generic4();
    let geo = m.geometry(&[0.3, -0.2, 0.5, 0.7], 3).unwrap();
    let c = geo.cotton().unwrap();
    let d = geo.div4_weyl().unwrap();
    let scale = max_abs(&c).max(1e-3);
    for (cv, dv) in c.iter().zip(&d) {
        // C = −(n−2)/(n−3) div₄W with n = 4
        assert!((cv.value() + 2.0 * dv.value()).abs() < 1e-9 * scale);
    }
    assert!(scale > 1e-3);
}

#[test]
fn hessian_of_product_in_flat_space() {
    let m = metric(&X4, &["-1", "0", "0", "0", "1", "0", "0", "-1", "0", "1"]);
    let f = expr_field("x1*x2", &X4, &BTreeMap::new()).unwrap();
    let p = [0.5, 0.25, 0.0, 0.0];
    let geo = m.geometry(&p, 2).unwrap();
    let h = geo.hessian(&f.eval_jet(&p, 2).unwrap()).unwrap();
    assert_eq!(h[i2(4, 0, 1)].value(), 1.0);
    assert_eq!(h[i2(4, 1, 0)].value(), 1.0);
    assert_eq!(h[0].value(), 0.0);
    // Δf = 2 g^12 = 0 for a diagonal metric
    assert_eq!(geo.laplacian(&f.eval_jet(&p, 2).unwrap()).unwrap().value(), 0.0);
}

#[test]
fn hessian_matches_finite_differences() {
    let m = generic4();
    let f = expr_field("sin(x1)*x2 + x3*x4^2", &X4, &BTreeMap::new()).unwrap();
    let p = [0.3, -0.2, 0.5, 0.7];
    let geo = m.geometry(&p, 2).unwrap();
    let h = geo.hessian(&f.eval_jet(&p, 2).unwrap()).unwrap();
    let fv = |q: &[f64]| f.eval(q).unwrap();
    let eps = 1e-4;
    for i in 0..4 {
        for j in 0..4 {
            let mut pp = p;
            pp[i] += eps;
            pp[j] += eps;
            let mut pm = p;
            pm[i] += eps;
            pm[j] -= eps;
            let mut mp = p;
            mp[i] -= eps;
            mp[j] += eps;
            let mut mm = p;
            mm[i] -= eps;
            mm[j] -= eps;
            let d2 = (fv(&pp) - fv(&pm) - fv(&mp) + fv(&mm)) / (4.0 * eps * eps);
            let mut grad = [0.0; 4];
            for (k, gk) in grad.iter_mut().enumerate() {
                let mut a = p;
                a[k] += eps;
                let mut b = p;
                b[k] -= eps;
                *gk = (fv(&a) - fv(&b)) / (2.0 * eps);
            }
            let corr: f64 = (0..4).map(|k| geo.gamma_at(i, j, k).value() * grad[k]).sum();
            assert!((h[i2(4, i, j)].value() - (d2 - corr)).abs() < 1e-6);
            assert_eq!(h[i2(4, i, j)].value(), h[i2(4, j, i)].value());
        }
    }
}

#[test]
fn christoffel_symmetric_and_degenerate_rejected() {
    let m = generic4();
    let geo = m.geometry(&[0.1, 0.2, 0.3, 0.4], 2).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                assert!((geo.gamma_at(i, j, k).value() - geo.gamma_at(j, i, k).value()).abs() < 1e-14);
            }
        }
    }
    let deg = MetricField::new(&["a", "b"], vec![constant(1.0, 2), constant(1.0, 2), constant(1.0, 2)]).unwrap();
    assert!(matches!(deg.geometry(&[0.0, 0.0], 2), Err(Error::Singular { .. })));
}

#[test]
fn jet_inverse_is_inverse() {
    let m = generic4();
    let geo = m.geometry(&[0.1, 0.2, 0.3, 0.4], 3).unwrap();
    let prod = matmul(&geo.g, &geo.ginv, 4);
    for (idx, x) in prod.iter().enumerate() {
        let want = if idx % 5 == 0 { 1.0 } else { 0.0 };
        assert!((x.value() - want).abs() < 1e-13);
        assert!(x.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }
}
