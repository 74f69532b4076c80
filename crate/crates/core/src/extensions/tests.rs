use super::*;
use crate::affine::models::{s_kappa, type_a};
use crate::duality::{hodge_star, weyl_blocks, PAIRS};
use crate::field::{expr_field, fn_field};
use std::collections::BTreeMap;

fn bx() -> CoordBox {
    CoordBox::new(&[(0.5, 2.0), (0.5, 2.0)]).unwrap()
}

fn e2(text: &str) -> FieldRef {
    expr_field(text, &["x1", "x2"], &BTreeMap::new()).unwrap()
}

fn flat() -> AffineSurface {
    type_a([0.0; 6], bx()).unwrap()
}

const P: [f64; 4] = [1.0, 1.0, 0.3, 0.7];

#[test]
fn flat_surface_gives_flat_metric() {
    let g = build_deformed(&flat(), &zero_sym2()).unwrap();
    let geo = g.geometry(&P, 2).unwrap();
    assert!(geo.riem.iter().all(|r| r.value() == 0.0));
    assert!(geo.gamma.iter().all(|r| r.value() == 0.0));
}

#[test]
fn deformed_s_kappa_entries() {
    let k = 1.5;
    let g = build_deformed(&s_kappa(k, bx()).unwrap(), &zero_sym2()).unwrap();
    let m = g.values(&P).unwrap();
    assert!((m[(0, 0)] + 2.0 * 0.3 * k / 2.0).abs() < 1e-15);
    assert!((m[(1, 1)] + 2.0 * 0.7 * k / 2.0).abs() < 1e-15);
    assert_eq!(m[(0, 1)], 0.0);
    assert_eq!((m[(0, 2)], m[(1, 3)], m[(0, 3)], m[(2, 3)], m[(2, 2)]), (1.0, 1.0, 0.0, 0.0, 0.0));
}

#[test]
fn deformed_extensions_are_self_dual() {
    let s = s_kappa(2.0, bx()).unwrap();
    let phi = [e2("x1*x2"), e2("sin(x1)"), e2("x2^2")];
    let g = build_deformed(&s, &phi).unwrap();
    for p in [P, [1.3, 0.8, -0.4, 1.1]] {
        let geo = g.geometry(&p, 2).unwrap();
        let wb = weyl_blocks(&geo, g.orientation).unwrap();
        assert!(wb.w_minus_norm <= 1e-8, "{wb:?}");
        assert!(wb.w_plus_norm > 1e-4, "{wb:?}");
    }
}

#[test]
fn modified_reduces_to_deformed() {
    let s = s_kappa(2.0, bx()).unwrap();
    let phi = [e2("x1"), e2("0"), e2("x2*x1")];
    let a = build_deformed(&s, &phi).unwrap();
    let b = build_modified(&s, &phi, &zero_endo(), &identity_endo()).unwrap();
    let ga = a.geometry(&P, 2).unwrap();
    let gb = b.geometry(&P, 2).unwrap();
    for (x, y) in ga.g.iter().zip(&gb.g) {
        assert_eq!(x.coeffs(), y.coeffs());
    }
}

#[test]
fn modified_identity_block() {
    let g = build_modified(&flat(), &zero_sym2(), &identity_endo(), &identity_endo()).unwrap();
    let m = g.values(&P).unwrap();
    assert!((m[(0, 0)] - 0.09).abs() < 1e-15);
    assert!((m[(0, 1)] - 0.21).abs() < 1e-15);
    assert!((m[(1, 1)] - 0.49).abs() < 1e-15);
}

#[test]
fn general_with_x_cubic_term() {
    let x = [constant(1.0, 2), zero(2)];
    let g = build_general_with_x(&flat(), &zero_sym2(), &zero_endo(), &x).unwrap();
    for p in [P, [0.2, -0.5, 1.3, -0.8], [2.0, 1.0, -0.6, 0.25]] {
        let m = g.values(&p).unwrap();
        assert!((m[(0, 0)] - p[2].powi(3)).abs() < 1e-14);
        assert!((m[(0, 1)] - p[2] * p[2] * p[3]).abs() < 1e-14);
        assert!((m[(1, 1)] - p[2] * p[3] * p[3]).abs() < 1e-14);
    }
    let none = build_general_with_x(&flat(), &zero_sym2(), &zero_endo(), &[zero(2), zero(2)]).unwrap();
    assert!(none.component(0, 0).is_zero());
}

#[test]
fn general_with_x_scalar_curvature() {
    // τ = 3(tr T) + 12 x_k' X^k for constant T, X over a flat surface
    let t: Endo = [[constant(0.4, 2), constant(-0.3, 2)], [constant(0.2, 2), constant(1.1, 2)]];
    let x = [constant(0.5, 2), constant(-0.7, 2)];
    let g = build_general_with_x(&flat(), &zero_sym2(), &t, &x).unwrap();
    for p in [P, [0.2, -0.5, 1.3, -0.8]] {
        let tau = g.geometry(&p, 2).unwrap().tau.value();
        let want = 3.0 * (0.4 + 1.1) + 12.0 * (0.5 * p[2] - 0.7 * p[3]);
        assert!((tau - want).abs() < 1e-11, "{tau} vs {want}");
    }
}

#[test]
fn nilpotent_family() {
    // u = v = 0 still leaves a₁₁ = x2p², which is curved (anti-self-dual, τ = 0)
    let (_, g0) = build_nilpotent_tt(zero(1), zero(1), bx()).unwrap();
    let geo = g0.geometry(&P, 2).unwrap();
    assert!(geo.riem.iter().any(|r| r.value().abs() > 0.5));
    assert_eq!(geo.tau.value(), 0.0);
    assert_eq!(weyl_blocks(&geo, g0.orientation).unwrap().w_plus_norm, 0.0);
    let u = fn_field(1, "u", |p, k| Ok(Jet::seed(p, 0, k)?.sin()));
    let v = fn_field(1, "v", |p, k| Ok(Jet::seed(p, 0, k)?.exp()));
    let (_, g) = build_nilpotent_tt(u, v, bx()).unwrap();
    let m = g.values(&P).unwrap();
    assert!((m[(0, 0)] - (0.49 - 1.4 * (1f64.sin() + 1f64.exp()))).abs() < 1e-14);
    for p in [P, [1.4, 0.6, -0.9, 0.5]] {
        let geo = g.geometry(&p, 2).unwrap();
        let wb = weyl_blocks(&geo, g.orientation).unwrap();
        assert!(wb.w_plus_norm <= 1e-8 && wb.w_minus_norm > 1e-4, "{wb:?}");
        assert!(geo.tau.value().abs() < 1e-12);
    }
}

#[test]
fn pullback_is_null_and_distribution_parallel() {
    let s = s_kappa(2.0, bx()).unwrap();
    let t = scalar_endo(e2("exp(-x1)"));
    let g = build_modified(&s, &[e2("x1"), e2("x2"), e2("1")], &t, &identity_endo()).unwrap();
    let f = pullback(e2("sin(x1)+x2")).unwrap();
    let fj = f.eval_jet(&P, 2).unwrap();
    assert_eq!(fj.d1(2), 0.0);
    assert_eq!(fj.d1(3), 0.0);
    let geo = g.geometry(&P, 2).unwrap();
    assert!(geo.grad_norm_sq(&fj).value().abs() < 1e-14);
    for a in 0..4 {
        for ip in 2..4 {
            for m in 0..2 {
                assert!(geo.gamma_at(a, ip, m).value().abs() < 1e-14);
            }
        }
    }
    // ⋆𝔇 = 𝔇: the 2-form metrically dual to ∂_{x1p}∧∂_{x2p} is dx¹∧dx²
    let star = hodge_star(&g.values(&P).unwrap(), g.orientation).unwrap();
    for r in 0..6 {
        let want = if r == 0 { 1.0 } else { 0.0 };
        assert!((star[(r, 0)] - want).abs() < 1e-12);
    }
    let flat = build_walker([zero(4), zero(4), zero(4)]).unwrap();
    let star = hodge_star(&flat.values(&P).unwrap(), flat.orientation).unwrap();
    let k = PAIRS.iter().position(|&q| q == (2, 3)).unwrap();
    assert_eq!(star[(k, k)], 1.0);
}

