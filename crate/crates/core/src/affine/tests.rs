use std::sync::Arc;

use super::models::*;
use super::ode::*;
use super::*;
use crate::field::{constant, fn_field, zero};

fn bx(a: (f64, f64), b: (f64, f64)) -> CoordBox {
    CoordBox::new(&[a, b]).unwrap()
}

fn skappa(k: f64) -> AffineSurface {
    s_kappa(k, bx((0.5, 2.0), (0.5, 2.0))).unwrap()
}

fn power_of_sum(alpha: f64, c: f64) -> FieldRef {
    fn_field(2, "(x1+x2)^a", move |p, k| {
        let s = &Jet::seed(p, 0, k)? + &Jet::seed(p, 1, k)?;
        Ok(s.powf(alpha)?.scale(c))
    })
}

#[test]
fn s_kappa_ricci_and_recurrence() {
    for kappa in [1.0, -2.0, 3.0] {
        let s = skappa(kappa);
        for p in [[1.0, 1.0], [0.7, 1.9], [1.5, 0.6]] {
            let sum = p[0] + p[1];
            let r = affine_ricci(&s, &p).unwrap();
            let want = kappa / (sum * sum);
            assert!((r.rho[0][1] - want).abs() < 1e-12 * want.abs());
            assert!((r.rho[1][0] - want).abs() < 1e-12 * want.abs());
            assert!(r.rho[0][0].abs() < 1e-14 && r.rho[1][1].abs() < 1e-14);
            assert_eq!(r.rank_s, 2);
            let rec = recurrence_form(&s, &p).unwrap();
            let w = -(2.0 + kappa) / sum;
            assert!((rec.omega[0] - w).abs() < 1e-12 && (rec.omega[1] - w).abs() < 1e-12);
            assert!(rec.recurrent);
        }
    }
}

#[test]
fn s_kappa_hessian_closed_form() {
    let (kappa, mu, alpha) = (1.5, 0.8, 1.3);
    let s = skappa(kappa);
    let h = power_of_sum(alpha, 1.0);
    let p = [0.9, 1.4];
    let r = qee_residual(&s, &h, mu, &p).unwrap();
    let f = (p[0] + p[1]).powf(alpha - 2.0);
    let diag = alpha * (alpha - kappa - 1.0) * f;
    let off = (alpha * alpha - alpha - mu * kappa) * f;
    assert!((r[0][0] - diag).abs() < 1e-12 && (r[1][1] - diag).abs() < 1e-12);
    assert!((r[0][1] - off).abs() < 1e-12 && (r[1][0] - off).abs() < 1e-12);
}

#[test]
fn s_kappa_eigenfunctions() {
    for kappa in [1.0, 2.0, -3.0] {
        let s = skappa(kappa);
        let h = power_of_sum(kappa + 1.0, 1.0);
        let r = qee_residual(&s, &h, kappa + 1.0, &[1.1, 0.8]).unwrap();
        assert!(mat2_max_abs(&r) < 1e-10, "{kappa}: {r:?}");
    }
    let s = skappa(-2.0);
    let h = fn_field(2, "(x1-x2)/(x1+x2)", |p, k| {
        let (a, b) = (Jet::seed(p, 0, k)?, Jet::seed(p, 1, k)?);
        (&a - &b).div(&(&a + &b))
    });
    assert!(mat2_max_abs(&qee_residual(&s, &h, -1.0, &[1.2, 0.7]).unwrap()) < 1e-10);
}

#[test]
fn dim_e_s_kappa() {
    let p = [1.0, 1.0];
    let s = skappa(2.0);
    for (mu, want) in [(3.0, 1), (0.0, 1), (-1.0, 0), (1.7, 0), (1.5, 0)] {
        let r = dim_e(&s, &p, mu, 4).unwrap();
        assert_eq!(r.dim_e, want, "κ=2 μ={mu}: {:?}", r.singular_values);
        assert!(!r.indeterminate);
        assert_eq!(r.constraint_matrix.len(), 6);
    }
    let s = skappa(-2.0);
    // x1·x2/(x1+x2) is a third solution besides (x1+x2)⁻¹{1, x1−x2}: S₋₂ is
    // a symmetric space, hence strongly projectively flat.
    for (mu, want) in [(-1.0, 3), (0.0, 1), (0.5, 0)] {
        assert_eq!(dim_e(&s, &p, mu, 4).unwrap().dim_e, want, "κ=−2 μ={mu}");
    }
}

#[test]
fn dim_e_flat_and_homogeneity() {
    let flat = type_a([0.0; 6], bx((-1.0, 1.0), (-1.0, 1.0))).unwrap();
    for mu in [-1.0, 0.7, 2.0] {
        assert_eq!(dim_e(&flat, &[0.1, 0.2], mu, 4).unwrap().dim_e, 3);
    }
    let s = skappa(2.0);
    for p in [[1.0, 1.0], [0.6, 1.7], [1.9, 0.8], [1.3, 1.3]] {
        assert_eq!(dim_e(&s, &p, 3.0, 4).unwrap().dim_e, 1);
    }
    assert!(dim_e(&s, &[1.0, 1.0], 1.0, 7).is_err());
}

#[test]
fn type_a_rank_one_instance() {
    // Γ₁₁¹ = 1, Γ₁₂² = 2: ρ = −2 dx¹⊗dx¹
    let s = type_a([1.0, 0.0, 0.0, 2.0, 0.0, 0.0], bx((-1.0, 1.0), (-1.0, 1.0))).unwrap();
    let r = affine_ricci(&s, &[0.0, 0.0]).unwrap();
    assert_eq!(r.rank_s, 1, "{r:?}");
    for mu in [0.31, 1.7, -2.5] {
        assert_eq!(dim_e(&s, &[0.0, 0.0], mu, 4).unwrap().dim_e, 2, "μ={mu}");
    }
    assert_eq!(dim_e(&s, &[0.0, 0.0], -1.0, 4).unwrap().dim_e, 3);
}

#[test]
fn killing_fields() {
    let a = type_a([0.3, -1.0, 0.5, 2.0, 0.1, 0.7], bx((-1.0, 1.0), (-1.0, 1.0))).unwrap();
    for x in type_a_killing() {
        assert!(affine_killing_residual(&a, &x, &[0.2, -0.3]).unwrap() < 1e-14);
    }
    let b = type_b([0.3, -1.0, 0.5, 2.0, 0.1, 0.7], bx((0.5, 2.0), (-1.0, 1.0))).unwrap();
    for x in type_b_killing() {
        assert!(affine_killing_residual(&b, &x, &[1.2, -0.3]).unwrap() < 1e-13);
    }
    let s = skappa(2.0);
    let x = [
        fn_field(2, "x2^2", |p, k| Ok(&Jet::seed(p, 1, k)? * &Jet::seed(p, 1, k)?)),
        constant(1.0, 2),
    ];
    assert!(affine_killing_residual(&s, &x, &[1.0, 1.0]).unwrap() > 1e-3);
}

#[test]
fn type_b_normal_forms() {
    let c = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let pred = type_b_predicted_mu(&c).unwrap();
    assert_eq!(pred.case, Some(1));
    assert_eq!(pred.mu, Some(1.0));
    let s = type_b(c, bx((0.5, 2.0), (-1.0, 1.0))).unwrap();
    assert!(dim_e(&s, &[1.0, 0.0], 1.0, 4).unwrap().dim_e >= 1);
    assert_eq!(dim_e(&s, &[1.0, 0.0], 0.37, 4).unwrap().dim_e, 0);

    let c2 = [0.0, 0.0, 0.5, 0.0, 0.0, 0.5];
    let pred = type_b_predicted_mu(&c2).unwrap();
    assert_eq!((pred.case, pred.mu), (Some(2), Some(-1.0)));
    let s = type_b(c2, bx((0.5, 2.0), (-1.0, 1.0))).unwrap();
    assert!(dim_e(&s, &[1.0, 0.0], -1.0, 4).unwrap().dim_e >= 1);

    let none = type_b_predicted_mu(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
    assert_eq!(none.case, None);
    assert!(none.also_type_a);
    assert!(type_b_predicted_mu(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).is_err());
}

#[test]
fn type_b_case_one_sign_pairing() {
    // C₂₂² = 2·C₂₂¹·C₁₁²: the pairing that the prolongation confirms.
    for (c221, c112) in [(1.0, 0.5), (-1.0, 0.5), (1.0, -0.3), (-1.0, 0.7)] {
        let c = [0.4, c112, 0.0, 0.2, c221, 2.0 * c221 * c112];
        let mu = type_b_predicted_mu(&c).unwrap().mu.unwrap();
        let s = type_b(c, bx((0.5, 2.0), (-1.0, 1.0))).unwrap();
        let d = dim_e(&s, &[1.0, 0.2], mu, 4).unwrap();
        assert!(d.dim_e >= 1, "{c:?} μ={mu} sv={:?}", d.singular_values);
        assert_eq!(dim_e(&s, &[1.0, 0.2], mu + 0.25, 4).unwrap().dim_e, 0);
    }
}

#[test]
fn wong_ricci_and_recurrence() {
    let u = fn_field(1, "sin", |p, k| Ok(Jet::seed(p, 0, k)?.sin()));
    let v = fn_field(1, "1+t^2", |p, k| Ok((&Jet::seed(p, 0, k)? * &Jet::seed(p, 0, k)?).add_scalar(1.0)));
    let w = wong_nilpotent(u, v, bx((-1.0, 1.0), (-1.0, 1.0))).unwrap();
    let p = [0.4, -0.2];
    let r = affine_ricci(&w.surface, &p).unwrap();
    let vv = 1.0 + p[0] * p[0];
    assert!((r.rho_s[0][0] - vv).abs() < 1e-13);
    assert!(r.rho_s[0][1].abs() < 1e-13 && r.rho_s[1][1].abs() < 1e-13);
    assert!(mat2_max_abs(&r.rho_a) < 1e-13);
    let rec = recurrence_form(&w.surface, &p).unwrap();
    assert!((rec.omega[0] - 2.0 * p[0] / vv).abs() < 1e-12 && rec.omega[1].abs() < 1e-12);
}

#[test]
fn symmetric_space_has_zero_recurrence() {
    let rec = recurrence_form(&skappa(-2.0), &[0.8, 1.1]).unwrap();
    assert!(rec.omega[0].abs() < 1e-13 && rec.omega[1].abs() < 1e-13);
    assert!(rec.d_rho_norm < 1e-12 && rec.recurrent);
}

#[test]
fn change_of_variables() {
    let s = skappa(1.3);
    let f = fn_field(2, "f", |p, k| {
        let (a, b) = (Jet::seed(p, 0, k)?, Jet::seed(p, 1, k)?);
        Ok(&a.sin() + &(&a * &b).scale(0.3))
    });
    let mu = 0.7;
    let p = [0.9, 1.2];
    let fj = f.eval_jet(&p, 2).unwrap();
    let h = fj.scale(-mu / 2.0).exp();
    let geo = s.geometry(&p, 1).unwrap();
    // ĥ = e^{−μf̂/2} linearizes the nonlinear equation taken at μ/2
    let q = geo.qee_residual(&h, mu).unwrap();
    let g = geo.gqe_affine_residual(&fj, mu / 2.0).unwrap();
    for i in 0..4 {
        assert!((q[i].value() + mu * h.value() / 2.0 * g[i].value()).abs() < 1e-12);
    }
}

#[test]
fn rk4_reproduces_power() {
    for mu in [2.0, 3.0] {
        let tr = rk4_fixed(&AnsatzOde { mu }, 1.0, &[1.0, mu, mu * (mu - 1.0)], 2.0, 1024).unwrap();
        assert_eq!(tr.t.len(), 1025);
        let err = tr.t.iter().zip(&tr.y).fold(0.0f64, |a, (t, y)| a.max((y[0] - t.powf(mu)).abs()));
        assert!(err < 1e-8, "μ={mu}: {err:e}");
    }
}

#[test]
fn fhat_free_matches_closed_form() {
    let (mu, c) = (0.8, 0.5);
    let sys = FhatSystem { mu, v: zero(1) };
    let tr = rk4_fixed(&sys, 0.0, &[0.2, c], 1.5, 256).unwrap();
    for (t, y) in tr.t.iter().zip(&tr.y) {
        assert!((y[0] - fhat_free_solution(mu, 0.2, c, 0.0, *t)).abs() < 1e-7);
    }
}

#[test]
fn ode_guards() {
    let sys = AnsatzOde { mu: 1.0 };
    assert!(matches!(rk4_fixed(&sys, 1.0, &[1.0, 1.0, 0.0], 2.0, 8), Err(Error::Argument(_))));
    match rk4_fixed(&sys, 1.0, &[1.0, 0.0, 1.0], 2.0, 32) {
        Err(Error::Ode { t, .. }) => assert_eq!(t, 1.0),
        other => panic!("{other:?}"),
    }
    let tr = rk4_fixed(&FhatSystem { mu: 0.0, v: zero(1) }, 0.0, &[1.0, 0.0], 1.0, 16).unwrap();
    assert!(tr.y.iter().all(|y| y == &vec![1.0, 0.0]));
}

#[test]
fn ode_field_derivatives() {
    let mu = 2.5;
    let sys: Arc<dyn OdeSystem> = Arc::new(AnsatzOde { mu });
    let g = OdeField::solve(sys, 1.0, &[1.0, mu, mu * (mu - 1.0)], 2.0, 512).unwrap();
    let t = 1.3337;
    let j = g[0].eval_jet(&[t], 4).unwrap();
    let mut fall = 1.0;
    for i in 0..=4 {
        let want = fall * t.powf(mu - i as f64);
        assert!((j.coeffs()[i] - want).abs() < 1e-9 * want.abs().max(1.0), "order {i}");
        fall *= mu - i as f64;
    }
    assert!(g[0].eval_jet(&[2.5], 1).is_err());
}

#[test]
fn ansatz_ode_invariants() {
    let mu = 2.0;
    let a = ansatz_ode(mu, [1.0, 0.5, 0.3], (1.0, 3.0), 2048, bx((0.6, 1.4), (0.6, 1.4))).unwrap();
    let p = [0.9, 1.1];
    let r = qee_residual(&a.surface, &a.phi, mu, &p).unwrap();
    assert!(mat2_max_abs(&r) < 1e-8, "{r:?}");
    let t = p[0] + p[1];
    let gj: Vec<f64> = (0..3).map(|i| a.gamma[i].eval(&[t]).unwrap()).collect();
    let (g, g1, g2) = (gj[0], gj[1], gj[2]);
    let ric = affine_ricci(&a.surface, &p).unwrap();
    assert!((ric.rho_s[0][1] - g2 / (mu * g)).abs() < 1e-9);
    let rec = recurrence_form(&a.surface, &p).unwrap();
    let w = -(1.0 + mu) * g1 / (mu * g);
    assert!((rec.omega[0] - w).abs() < 1e-8 && (rec.omega[1] - w).abs() < 1e-8);
    let e = e_invariant(&a.surface, &p).unwrap();
    let want = 4.0 * (1.0 + mu).powi(2) * g1 * g1 / (mu * g * g2);
    assert!((e.e - want).abs() < 1e-7 * want.abs(), "{} vs {want}", e.e);
    let h = 1e-5;
    let ep = e_invariant(&a.surface, &[p[0] + h, p[1]]).unwrap().e;
    let em = e_invariant(&a.surface, &[p[0] - h, p[1]]).unwrap().e;
    assert!((e.de[0] - (ep - em) / (2.0 * h)).abs() < 1e-5 * e.de[0].abs().max(1.0));
}

#[test]
fn custom_surface_from_exprs() {
    let mut m = BTreeMap::new();
    m.insert("11^1".to_string(), "kappa/(x1+x2)".to_string());
    m.insert("Gamma.22^2".to_string(), "kappa/(x1+x2)".to_string());
    let mut params = BTreeMap::new();
    params.insert("kappa".to_string(), 2.0);
    let s = AffineSurface::from_exprs("custom", &m, &params, bx((0.5, 2.0), (0.5, 2.0))).unwrap();
    let r = affine_ricci(&s, &[1.0, 1.0]).unwrap();
    assert!((r.rho[0][1] - 0.5).abs() < 1e-14);
    m.insert("21^1".into(), "1".into());
    m.insert("12^1".into(), "1".into());
    assert!(AffineSurface::from_exprs("dup", &m, &params, bx((0.5, 2.0), (0.5, 2.0))).is_err());
    assert!(normalize_key("13^1").is_err());
    assert!(s_kappa(1.0, bx((-1.0, 0.0), (-1.0, 0.5))).is_err());
}

