//! Constructors for the model surfaces: Type A, Type B, `S_κ`, the nilpotent
//! Wong family and the `φ` ansatz.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::ode::{AnsatzOde, OdeField, OdeSystem};
use super::{AffineSurface, Mat2, GAMMA_KEYS};
use crate::error::{Error, Result};
use crate::field::{self, constant, fn_field, zero, FieldRef};
use crate::jet::Jet;
use crate::tensor::CoordBox;

/// Christoffel constants in [`GAMMA_KEYS`] order.
pub type Constants = [f64; 6];

pub fn constants_from_map(map: &BTreeMap<String, f64>) -> Result<Constants> {
    let mut c = [0.0; 6];
    for (k, v) in map {
        let key = super::normalize_key(k)?;
        let i = GAMMA_KEYS.iter().position(|g| *g == key).expect("normalized key");
        c[i] = *v;
    }
    Ok(c)
}

/// Evaluates `pred` on a 5×5 grid over the box.
fn check_box(domain: &CoordBox, what: &str, pred: impl Fn(&[f64]) -> Result<bool>) -> Result<()> {
    if domain.dim() != 2 {
        return Err(Error::Domain("surface domain must be 2-dimensional".into()));
    }
    for a in 0..5 {
        for b in 0..5 {
            let p = [
                domain.lo[0] + (domain.hi[0] - domain.lo[0]) * a as f64 / 4.0,
                domain.lo[1] + (domain.hi[1] - domain.lo[1]) * b as f64 / 4.0,
            ];
            if !pred(&p)? {
                return Err(Error::Domain(format!("{what} fails at {p:?}")));
            }
        }
    }
    Ok(())
}

pub fn type_a(c: Constants, domain: CoordBox) -> Result<AffineSurface> {
    let gamma = c.iter().map(|&v| constant(v, 2)).collect();
    AffineSurface::new("type_A", gamma, domain)
}

pub fn type_b(c: Constants, domain: CoordBox) -> Result<AffineSurface> {
    if domain.dim() != 2 || domain.lo[0] <= 0.0 {
        return Err(Error::Domain("Type B surfaces live on x1 > 0".into()));
    }
    let gamma = c
        .iter()
        .map(|&v| {
            if v == 0.0 {
                zero(2)
            } else {
                fn_field(2, "C/x1", move |p, k| Ok(Jet::seed(p, 0, k)?.recip()?.scale(v)))
            }
        })
        .collect();
    AffineSurface::new("type_B", gamma, domain)
}

/// `Γ₁₁¹ = Γ₂₂² = κ/(x1 + x2)`.
pub fn s_kappa(kappa: f64, domain: CoordBox) -> Result<AffineSurface> {
    if domain.dim() != 2 || domain.lo[0] + domain.lo[1] <= 0.0 {
        return Err(Error::Domain("S_kappa lives on x1 + x2 > 0".into()));
    }
    let g = fn_field(2, "kappa/(x1+x2)", move |p, k| {
        let s = &Jet::seed(p, 0, k)? + &Jet::seed(p, 1, k)?;
        Ok(s.recip()?.scale(kappa))
    });
    let gamma = vec![g.clone(), zero(2), zero(2), zero(2), zero(2), g];
    AffineSurface::new(&format!("s_kappa({kappa})"), gamma, domain)
}

/// The surface with only `Γ₁₁² = u(x1) + x2 v(x1)`, together with its
/// parallel nilpotent endomorphism `T∂₁ = ∂₂`, `T∂₂ = 0`.
#[derive(Debug, Clone)]
pub struct WongSurface {
    pub surface: AffineSurface,
    pub u: FieldRef,
    pub v: FieldRef,
    /// `t[r][i] = T^r_i`.
    pub t: Mat2,
}

pub fn wong_nilpotent(u: FieldRef, v: FieldRef, domain: CoordBox) -> Result<WongSurface> {
    if u.n_vars() != 1 || v.n_vars() != 1 {
        return Err(Error::Argument("u and v are functions of x1 alone".into()));
    }
    let (uu, vv) = (u.clone(), v.clone());
    let g = if u.is_zero() && v.is_zero() {
        zero(2)
    } else {
        fn_field(2, "u(x1)+x2*v(x1)", move |p, k| {
            let u = uu.eval_jet(&p[..1], k)?.embed(2, &[0])?;
            let v = vv.eval_jet(&p[..1], k)?.embed(2, &[0])?;
            Ok(&u + &(&Jet::seed(p, 1, k)? * &v))
        })
    };
    let gamma = vec![zero(2), g, zero(2), zero(2), zero(2), zero(2)];
    let surface = AffineSurface::new("wong", gamma, domain)?;
    let t = [[0.0, 0.0], [1.0, 0.0]];
    let defect = (0..9)
        .map(|i| {
            let p = [
                surface.domain.lo[0] + (surface.domain.hi[0] - surface.domain.lo[0]) * (i / 3) as f64 / 2.0,
                surface.domain.lo[1] + (surface.domain.hi[1] - surface.domain.lo[1]) * (i % 3) as f64 / 2.0,
            ];
            parallel_defect(&surface, &t, &p)
        })
        .try_fold(0.0f64, |a, d| d.map(|d| a.max(d)))?;
    if defect > 1e-12 {
        return Err(Error::Precondition(format!("T is not parallel (defect {defect:e})")));
    }
    Ok(WongSurface { surface, u, v, t })
}

/// Largest component of `DT` for a constant endomorphism `T^r_i`.
pub fn parallel_defect(surface: &AffineSurface, t: &Mat2, point: &[f64]) -> Result<f64> {
    let geo = surface.geometry(point, 1)?;
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut v = 0.0;
                for m in 0..2 {
                    v += geo.gamma_at(i, m, k).value() * t[m][j];
                    v -= geo.gamma_at(i, j, m).value() * t[k][m];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// `Γ_ii^i = φ_ii/φ_i`, all other symbols zero.
pub fn ansatz_phi(phi: FieldRef, domain: CoordBox) -> Result<AffineSurface> {
    if phi.n_vars() != 2 {
        return Err(Error::Argument("φ must be a function of (x1, x2)".into()));
    }
    check_box(&domain, "φ₁ ≠ 0 ≠ φ₂", |p| {
        let j = phi.eval_jet(p, 1)?;
        Ok(j.d1(0).abs() > 1e-12 && j.d1(1).abs() > 1e-12)
    })?;
    let ratio = |i: usize| {
        let phi = phi.clone();
        fn_field(2, "phi_ii/phi_i", move |p, k| {
            let d = phi.eval_jet(p, k + 2)?.derivative(i);
            d.derivative(i).div(&d.truncate(k))
        })
    };
    let gamma = vec![ratio(0), zero(2), zero(2), zero(2), zero(2), ratio(1)];
    AffineSurface::new("ansatz", gamma, domain)
}

/// The ansatz surface for `φ = γ(x1 + x2)` with `γ` solving the ansatz ODE from
/// `(γ, γ', γ'')(t0) = init` on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct AnsatzSurface {
    pub surface: AffineSurface,
    pub mu: f64,
    pub phi: FieldRef,
    /// `γ, γ', γ''` as fields of one variable.
    pub gamma: Vec<FieldRef>,
}

pub fn ansatz_ode(
    mu: f64,
    init: [f64; 3],
    t_range: (f64, f64),
    steps: usize,
    domain: CoordBox,
) -> Result<AnsatzSurface> {
    let sys: Arc<dyn OdeSystem> = Arc::new(AnsatzOde { mu });
    let gamma = OdeField::solve(sys, t_range.0, &init, t_range.1, steps)?;
    let (lo, hi) = (t_range.0.min(t_range.1), t_range.0.max(t_range.1));
    if domain.dim() != 2 || domain.lo[0] + domain.lo[1] < lo || domain.hi[0] + domain.hi[1] > hi {
        return Err(Error::Domain(format!(
            "x1 + x2 over the box must stay inside the integrated interval [{lo}, {hi}]"
        )));
    }
    let sum = fn_field(2, "x1+x2", |p, k| Ok(&Jet::seed(p, 0, k)? + &Jet::seed(p, 1, k)?));
    let phi = field::compose(gamma[0].clone(), sum)?;
    let surface = ansatz_phi(phi.clone(), domain)?;
    Ok(AnsatzSurface {
        surface,
        mu,
        phi,
        gamma,
    })
}

/// The affine Killing fields `∂₁`, `∂₂` of a Type A model.
pub fn type_a_killing() -> [[FieldRef; 2]; 2] {
    [[constant(1.0, 2), zero(2)], [zero(2), constant(1.0, 2)]]
}

/// The affine Killing fields `x1∂₁ + x2∂₂`, `∂₂` of a Type B model.
pub fn type_b_killing() -> [[FieldRef; 2]; 2] {
    let x = |i: usize| fn_field(2, "coordinate", move |p, k| Jet::seed(p, i, k));
    [[x(0), x(1)], [zero(2), constant(1.0, 2)]]
}

/// `dim E(μ)` for a Type A model with `μ ≠ 0`, from the rank of `ρ`.
pub fn type_a_predicted_dim(rank: usize, mu: f64) -> Option<usize> {
    if mu == 0.0 {
        return None;
    }
    if mu == -1.0 {
        return Some(3);
    }
    match rank {
        0 => Some(3),
        1 => Some(2),
        2 => Some(0),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeBPrediction {
    /// 1 or 2 for the two normal forms, `None` if neither applies.
    pub case: Option<u8>,
    pub mu: Option<f64>,
    pub also_type_a: bool,
}

pub fn type_b_also_type_a(c: &Constants) -> bool {
    // keys: 11^1 11^2 12^1 12^2 22^1 22^2
    c[2] == 0.0 && c[4] == 0.0 && c[5] == 0.0
}

/// The single eigenvalue `μ ≠ 0` allowed for a Type B model in one of the
/// two normal forms. In form 1 the sign `ε = C₂₂¹ = ±1` also fixes
/// `C₂₂² = 2εC₁₁²` and the sign of the `(C₁₁²)²` term; with `ε = −1` this is
/// what the prolongation scanner confirms.
pub fn type_b_predicted_mu(c: &Constants) -> Result<TypeBPrediction> {
    const EPS: f64 = 1e-12;
    let [c111, c112, c121, c122, c221, c222] = *c;
    let also_type_a = type_b_also_type_a(c);
    if (c221.abs() - 1.0).abs() <= EPS && c121.abs() <= EPS && (c222 - 2.0 * c221 * c112).abs() <= EPS {
        let delta = -c111 + c122 + 1.0;
        if delta.abs() <= EPS {
            return Err(Error::Precondition(
                "normal form 1 with Δ = −C11^1 + C12^2 + 1 = 0 is excluded".into(),
            ));
        }
        let eps = c221.signum();
        let mu = (-c111 * c111 + 2.0 * c111 * c122 + 2.0 * eps * c112 * c112 - c122 * c122
            + 2.0 * c122
            + 1.0)
            / (delta * delta);
        return Ok(TypeBPrediction {
            case: Some(1),
            mu: Some(mu),
            also_type_a,
        });
    }
    if c221.abs() <= EPS && c121.abs() > EPS && (c121 - c222).abs() <= EPS {
        return Ok(TypeBPrediction {
            case: Some(2),
            mu: Some(-1.0),
            also_type_a,
        });
    }
    Ok(TypeBPrediction {
        case: None,
        mu: None,
        also_type_a,
    })
}
