//! Built-in scenarios: each binds a construction to the checks it must pass.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::Value;

use crate::affine::models::{ansatz_ode, s_kappa, AnsatzSurface};
use crate::affine::ode::{FhatSystem, OdeField, OdeSystem};
use crate::affine::{AffineSurface, SURFACE_COORDS};
use crate::error::{Error, Result};
use crate::extensions::{
    build_deformed, build_modified, build_nilpotent_tt, build_walker, identity_endo, pullback, scalar_endo,
    Endo, Sym2, WALKER_COORDS,
};
use crate::field::{self, constant, expr_field, fn_field, zero, FieldRef};
use crate::tensor::{i2, CoordBox};

use super::{GqeInstance, LambdaMode};

pub type Params = BTreeMap<String, Value>;

pub const SCENARIO_IDS: [&str; 8] = [
    "flat_sanity",
    "conf_einstein_example52",
    "thm13_case1_skappa",
    "thm13_case1_ode",
    "thm13_case2",
    "asd_nilpotent",
    "ansatz_phi_e26",
    "walker_distribution",
];

/// What a check's value is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Threshold {
    /// `≤ tol.residual`
    Residual,
    /// `≤ tol.identity`
    Identity,
    AtMost(f64),
    AtLeast(f64),
    /// Reported, never fails.
    Info,
}

#[derive(Debug, Clone)]
pub enum Probe {
    Gqe,
    /// `|λ − expected|` with `λ` from the trace.
    LambdaExpected(FieldRef),
    LambdaTau4,
    WPlus,
    WMinus,
    /// Frame form of self-duality (`+1`) or anti-self-duality (`−1`).
    FrameDuality(f64),
    Tau,
    GradNormSq,
    GradMax,
    RicciForm,
    ParallelDist,
    RicciNorm,
    RicciSquare,
    Identity(usize),
    Identity4SingleTerm,
    Identity5Reduced,
    Cotton,
    QPrimed,
    QFull,
    /// `Hes f̂ + 2ρ_s − μ df̂⊗df̂` at the projected point.
    AffineGqe { surface: AffineSurface, f_hat: FieldRef, mu: f64 },
    /// Largest `|Γ_{a,i'}^m|` for unprimed `m`.
    WalkerParallel,
    /// Largest `|g(∂_ip, ∂_jp)|`.
    DistributionNull,
    /// Largest unprimed component of `∇f`.
    GradInDistribution,
    PhiEigen,
    RecurrenceOmega,
    RecurrenceResidual,
    RicciFormula,
    EFormula,
}

impl Probe {
    /// Metric jet order the probe needs.
    pub fn order(&self) -> usize {
        match self {
            Probe::Identity(_) | Probe::Identity4SingleTerm | Probe::Identity5Reduced | Probe::Cotton => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub probe: Probe,
    pub threshold: Threshold,
}

fn check(name: &str, probe: Probe, threshold: Threshold) -> Check {
    Check {
        name: name.to_string(),
        probe,
        threshold,
    }
}

#[derive(Debug, Clone)]
pub enum Subject {
    Metric {
        instance: GqeInstance,
        /// Orientation used for W± and the null frame.
        orientation: f64,
    },
    Surface(AnsatzSurface),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub description: String,
    pub params: Params,
    pub sample_box: CoordBox,
    pub subject: Subject,
    pub checks: Vec<Check>,
}

impl Scenario {
    pub fn order(&self) -> usize {
        self.checks.iter().map(|c| c.probe.order()).max().unwrap_or(2)
    }
}

/// Defaults merged with overrides; unknown keys are rejected.
fn merge(id: &str, defaults: &[(&str, Value)], overrides: &Params) -> Result<Params> {
    let mut p: Params = defaults.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    for (k, v) in overrides {
        if !p.contains_key(k) {
            let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
            return Err(Error::Config(format!(
                "scenario {id} has no parameter '{k}' (known: {})",
                known.join(", ")
            )));
        }
        p.insert(k.clone(), v.clone());
    }
    Ok(p)
}

fn num(p: &Params, k: &str) -> Result<f64> {
    p.get(k)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("parameter '{k}' must be a finite number")))
}

fn text<'a>(p: &'a Params, k: &str) -> Result<&'a str> {
    match p.get(k) {
        Some(Value::String(s)) => Ok(s),
        _ => Err(Error::Config(format!("parameter '{k}' must be an expression string"))),
    }
}

fn steps(p: &Params, k: &str) -> Result<usize> {
    let v = num(p, k)?;
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::Config(format!("parameter '{k}' must be a positive integer")));
    }
    Ok(v as usize)
}

fn no_params() -> BTreeMap<String, f64> {
    BTreeMap::new()
}

fn surface_expr(p: &Params, k: &str) -> Result<FieldRef> {
    expr_field(text(p, k)?, &SURFACE_COORDS, &no_params()).map_err(|e| tag(e, k))
}

fn x1_expr(p: &Params, k: &str) -> Result<FieldRef> {
    expr_field(text(p, k)?, &["x1"], &no_params()).map_err(|e| tag(e, k))
}

fn tag(e: Error, k: &str) -> Error {
    match e {
        Error::Parse { offset, msg } => Error::Parse {
            offset,
            msg: format!("{msg} (parameter '{k}')"),
        },
        Error::UnknownIdentifier(s) => Error::Config(format!("unknown identifier '{s}' in parameter '{k}'")),
        e => e,
    }
}

fn phi_params(p: &Params) -> Result<Sym2> {
    Ok([surface_expr(p, "Phi11")?, surface_expr(p, "Phi12")?, surface_expr(p, "Phi22")?])
}

fn surface_box(b: &CoordBox) -> Result<CoordBox> {
    CoordBox::new(&[(b.lo[0], b.hi[0]), (b.lo[1], b.hi[1])])
}

fn check_box_dim(b: &CoordBox, dim: usize, id: &str) -> Result<()> {
    if b.dim() != dim {
        return Err(Error::Config(format!("scenario {id} samples a {dim}-dimensional box, got {}", b.dim())));
    }
    Ok(())
}

/// One-line summary of a built-in scenario.
pub fn describe(id: &str) -> Option<&'static str> {
    Some(match id {
        "flat_sanity" => "flat Walker metric with a pulled-back linear potential",
        "conf_einstein_example52" => {
            "conformally Einstein modified Riemannian extension, μ = −1/2, conformal factor depending on x1p"
        }
        "thm13_case1_skappa" => "deformed Riemannian extension of S_κ with f̂ = −2 log(x1 + x2), λ = 0",
        "thm13_case1_ode" => "deformed Riemannian extension of a nilpotent-Ricci surface, f̂ from its ODE, λ = 0",
        "thm13_case2" => "modified Riemannian extension with T = C e^(−f̂) Id and λ = (3/2) C e^(−f)",
        "asd_nilpotent" => "anti-self-dual extension with a parallel nilpotent T, f̂ from the ODE",
        "ansatz_phi_e26" => "ansatz surface Γ_ii^i = φ_ii/φ_i with φ = γ(x1 + x2), γ from the third-order ODE",
        "walker_distribution" => "general Walker metric with a pulled-back potential",
        _ => return None,
    })
}

/// Builds a registered scenario. `sample_box` overrides the default box.
pub fn build(id: &str, overrides: &Params, sample_box: Option<CoordBox>) -> Result<Scenario> {
    let mut sc = match id {
        "flat_sanity" => flat_sanity(overrides, sample_box)?,
        "conf_einstein_example52" => example52(overrides, sample_box)?,
        "thm13_case1_skappa" => case1_skappa(overrides, sample_box)?,
        "thm13_case1_ode" => case1_ode(overrides, sample_box)?,
        "thm13_case2" => case2(overrides, sample_box)?,
        "asd_nilpotent" => asd_nilpotent(overrides, sample_box)?,
        "ansatz_phi_e26" => ansatz(overrides, sample_box)?,
        "walker_distribution" => walker_distribution(overrides, sample_box)?,
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario '{id}' (known: {})",
                SCENARIO_IDS.join(", ")
            )))
        }
    };
    sc.description = describe(id).unwrap_or_default().to_string();
    Ok(sc)
}

fn metric_scenario(
    id: &str,
    params: Params,
    instance: GqeInstance,
    orientation: f64,
    checks: Vec<Check>,
) -> Scenario {
    Scenario {
        id: id.to_string(),
        description: String::new(),
        params,
        sample_box: instance.sample_box.clone(),
        subject: Subject::Metric { instance, orientation },
        checks,
    }
}

/// Checks shared by the self-dual isotropic scenarios.
fn self_dual_isotropic_checks() -> Vec<Check> {
    vec![
        check("gqe_residual", Probe::Gqe, Threshold::Residual),
        check("w_minus", Probe::WMinus, Threshold::Residual),
        check("w_plus", Probe::WPlus, Threshold::Info),
        check("frame_self_duality", Probe::FrameDuality(1.0), Threshold::AtMost(1e-7)),
        check("grad_norm_sq", Probe::GradNormSq, Threshold::Residual),
        check("grad_max", Probe::GradMax, Threshold::AtLeast(1e-6)),
        check("lambda_tau4", Probe::LambdaTau4, Threshold::AtMost(1e-7)),
        check("ricci_form", Probe::RicciForm, Threshold::AtMost(1e-7)),
        check("parallel_distribution", Probe::ParallelDist, Threshold::AtMost(1e-7)),
        check("q_primed_block", Probe::QPrimed, Threshold::Residual),
    ]
}

fn set_threshold(checks: &mut [Check], name: &str, t: Threshold) {
    for c in checks.iter_mut().filter(|c| c.name == name) {
        c.threshold = t;
    }
}

fn flat_sanity(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "flat_sanity";
    let p = merge(id, &[("f_hat", "x1 + 2*x2".into()), ("mu", 0.0.into())], o)?;
    let bx = bx.unwrap_or(CoordBox::new(&[(-1.0, 1.0); 4])?);
    check_box_dim(&bx, 4, id)?;
    let metric = build_walker([zero(4), zero(4), zero(4)])?;
    let f = pullback(surface_expr(&p, "f_hat")?)?;
    let inst = GqeInstance::new(metric, f, num(&p, "mu")?, bx)?;
    let mut checks = self_dual_isotropic_checks();
    set_threshold(&mut checks, "w_plus", Threshold::Residual);
    checks.push(check("tau", Probe::Tau, Threshold::Residual));
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

fn example52(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "conf_einstein_example52";
    let p = merge(
        id,
        &[
            ("alpha", "x1*x2".into()),
            ("beta", "x2".into()),
            ("gamma", "1 + x1^2".into()),
            ("psi1", "0".into()),
            ("psi2", "0".into()),
            ("mu", (-0.5).into()),
        ],
        o,
    )?;
    let bx = bx.unwrap_or(CoordBox::new(&[(-1.0, 1.0), (-1.0, 1.0), (1.5, 3.0), (-1.0, 1.0)])?);
    check_box_dim(&bx, 4, id)?;
    let (a, b, g) = (text(&p, "alpha")?, text(&p, "beta")?, text(&p, "gamma")?);
    let (psi1, psi2) = (text(&p, "psi1")?, text(&p, "psi2")?);
    for k in ["alpha", "beta", "gamma", "psi1", "psi2"] {
        surface_expr(&p, k)?;
    }
    for k in ["psi1", "psi2"] {
        if expr_field(text(&p, k)?, &["x2"], &no_params()).is_err() {
            return Err(Error::Config(format!("parameter '{k}' must be a function of x2 alone")));
        }
    }
    let e = |s: String| expr_field(&s, &SURFACE_COORDS, &no_params());
    let surface = AffineSurface::new(
        "example52",
        vec![
            zero(2),
            zero(2),
            e(a.to_string())?,
            zero(2),
            e(b.to_string())?,
            e(format!("({a}) + ({psi1})"))?,
        ],
        surface_box(&bx)?,
    )?;
    let ratio = e(format!("({a})/({g})"))?;
    let phi: Sym2 = [
        field::linear_combination(2, vec![(-4.0, field::derivative(ratio.clone(), 0))]),
        field::linear_combination(
            2,
            vec![
                (1.0, e(format!("2*({a})^2/({g})"))?),
                (-2.0, field::derivative(ratio, 1)),
            ],
        ),
        e(format!("4*({a})*({b})/({g}) + ({psi2})"))?,
    ];
    let t: Endo = [[zero(2), e(g.to_string())?], [zero(2), zero(2)]];
    let metric = build_modified(&surface, &phi, &t, &identity_endo())?;
    // the displayed function is the conformal factor h = e^{−μf}, so f = 2 log h
    let f = expr_field(&format!("2*log(x1p - 2*({a})/({g}))"), &WALKER_COORDS, &no_params())?;
    let inst = GqeInstance::new(metric, f, num(&p, "mu")?, bx)?;
    let checks = vec![
        check("gqe_residual", Probe::Gqe, Threshold::Residual),
        check("grad_norm_sq", Probe::GradNormSq, Threshold::Residual),
        check("grad_max", Probe::GradMax, Threshold::AtLeast(1e-6)),
        check("ricci_norm", Probe::RicciNorm, Threshold::AtLeast(1e-6)),
        check("ricci_square", Probe::RicciSquare, Threshold::Residual),
        check("gqe_identity_5_reduced", Probe::Identity5Reduced, Threshold::Identity),
        check("w_plus", Probe::WPlus, Threshold::Info),
        check("w_minus", Probe::WMinus, Threshold::Info),
        check("lambda_tau4", Probe::LambdaTau4, Threshold::Info),
        check("ricci_form", Probe::RicciForm, Threshold::Info),
        check("parallel_distribution", Probe::ParallelDist, Threshold::Info),
        check("q_primed_block", Probe::QPrimed, Threshold::Info),
    ];
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

fn case1_skappa(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "thm13_case1_skappa";
    let p = merge(
        id,
        &[
            ("kappa", 2.0.into()),
            ("Phi11", "x1*x2".into()),
            ("Phi12", "0".into()),
            ("Phi22", "cos(x2)".into()),
        ],
        o,
    )?;
    let bx = bx.unwrap_or(CoordBox::new(&[(0.5, 2.0), (0.5, 2.0), (-1.0, 1.0), (-1.0, 1.0)])?);
    check_box_dim(&bx, 4, id)?;
    let kappa = num(&p, "kappa")?;
    let surface = s_kappa(kappa, surface_box(&bx)?)?;
    // metric μ is half the affine eigenvalue κ + 1
    let mu = 0.5 * (kappa + 1.0);
    let f_hat = if kappa == -2.0 {
        // E(−1) basis element (3 + x1 − x2)/(x1 + x2), f̂ = 2 log ĥ
        expr_field("2*log((3 + x1 - x2)/(x1 + x2))", &SURFACE_COORDS, &no_params())?
    } else {
        expr_field("-2*log(x1 + x2)", &SURFACE_COORDS, &no_params())?
    };
    let metric = build_deformed(&surface, &phi_params(&p)?)?;
    let inst = GqeInstance::new(metric, pullback(f_hat.clone())?, mu, bx)?
        .with_lambda(LambdaMode::Explicit(constant(0.0, 4)));
    let mut checks = self_dual_isotropic_checks();
    if kappa != -2.0 {
        // S_κ is projectively flat only for κ = −2
        set_threshold(&mut checks, "w_plus", Threshold::AtLeast(1e-4));
    }
    checks.push(check("q_full", Probe::QFull, Threshold::Residual));
    checks.push(check(
        "affine_gqe_residual",
        Probe::AffineGqe { surface, f_hat, mu },
        Threshold::Residual,
    ));
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

/// `f̂(x1)` solving `f̂'' = μ f̂'² − 2v` from `(f0, f1)` at the left edge
/// of the `x1` range, pulled back to the surface.
fn fhat_from_ode(p: &Params, v: FieldRef, mu: f64, x1_range: (f64, f64)) -> Result<FieldRef> {
    let sys: Arc<dyn OdeSystem> = Arc::new(FhatSystem { mu, v });
    let sol = OdeField::solve(
        sys,
        x1_range.0,
        &[num(p, "f0")?, num(p, "f1")?],
        x1_range.1,
        steps(p, "steps")?,
    )?;
    field::lift(sol[0].clone(), 2, &[0])
}

fn ode_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("u", "0.3*x1".into()),
        ("v", "0.5 + 0.25*x1".into()),
        ("mu", 0.5.into()),
        ("f0", 0.0.into()),
        ("f1", 0.2.into()),
        ("steps", 2048.into()),
    ]
}

fn case1_ode(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "thm13_case1_ode";
    let mut d = ode_defaults();
    d.extend([("Phi11", "0".into()), ("Phi12", "x2".into()), ("Phi22", "x1^2".into())]);
    let p = merge(id, &d, o)?;
    let bx = bx.unwrap_or(CoordBox::new(&[(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)])?);
    check_box_dim(&bx, 4, id)?;
    let mu = num(&p, "mu")?;
    let (u, v) = (x1_expr(&p, "u")?, x1_expr(&p, "v")?);
    let (w, _) = build_nilpotent_tt(u, v.clone(), surface_box(&bx)?)?;
    let f_hat = fhat_from_ode(&p, v, mu, (bx.lo[0], bx.hi[0]))?;
    let metric = build_deformed(&w.surface, &phi_params(&p)?)?;
    let inst = GqeInstance::new(metric, pullback(f_hat.clone())?, mu, bx)?
        .with_lambda(LambdaMode::Explicit(constant(0.0, 4)));
    let mut checks = self_dual_isotropic_checks();
    checks.push(check("q_full", Probe::QFull, Threshold::Residual));
    checks.push(check(
        "affine_gqe_residual",
        Probe::AffineGqe {
            surface: w.surface,
            f_hat,
            mu,
        },
        Threshold::Residual,
    ));
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

fn case2(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "thm13_case2";
    let p = merge(
        id,
        &[
            ("f_hat", "sin(x1) + x2".into()),
            ("C", 1.0.into()),
            ("mu", 0.5.into()),
            ("kappa", 1.0.into()),
        ],
        o,
    )?;
    let bx = bx.unwrap_or(CoordBox::new(&[(0.5, 1.5), (0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)])?);
    check_box_dim(&bx, 4, id)?;
    let c = num(&p, "C")?;
    if c == 0.0 {
        return Err(Error::Config("parameter 'C' must be nonzero".into()));
    }
    let mu = num(&p, "mu")?;
    let surface = s_kappa(num(&p, "kappa")?, surface_box(&bx)?)?;
    let f_hat = surface_expr(&p, "f_hat")?;
    let phi = phi_case2(&surface, &f_hat, c, mu);
    let t = {
        let fh = f_hat.clone();
        scalar_endo(fn_field(2, "C exp(-f̂)", move |q, k| Ok(fh.eval_jet(q, k)?.scale(-1.0).exp().scale(c))))
    };
    let metric = build_modified(&surface, &phi, &t, &identity_endo())?;
    let f = pullback(f_hat)?;
    let expected = {
        let f = f.clone();
        fn_field(4, "(3/2) C exp(-f)", move |q, k| Ok(f.eval_jet(q, k)?.scale(-1.0).exp().scale(1.5 * c)))
    };
    let inst = GqeInstance::new(metric, f, mu, bx)?;
    let mut checks = self_dual_isotropic_checks();
    set_threshold(&mut checks, "w_plus", Threshold::AtLeast(1e-4));
    checks.extend([
        check("lambda_expected", Probe::LambdaExpected(expected), Threshold::Residual),
        check("gqe_identity_1", Probe::Identity(1), Threshold::Identity),
        check("gqe_identity_2", Probe::Identity(2), Threshold::Identity),
        check("gqe_identity_3", Probe::Identity(3), Threshold::Identity),
        check("gqe_identity_4", Probe::Identity(4), Threshold::Identity),
        check("gqe_identity_5", Probe::Identity(5), Threshold::Identity),
        check("gqe_identity_4_single_term", Probe::Identity4SingleTerm, Threshold::Info),
        check("cotton_vs_div_weyl", Probe::Cotton, Threshold::AtMost(1e-7)),
    ]);
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

/// `Φ = (2/C) e^{f̂} (Hes f̂ + 2ρ_s − μ df̂⊗df̂)`.
fn phi_case2(surface: &AffineSurface, f_hat: &FieldRef, c: f64, mu: f64) -> Sym2 {
    [(0, 0), (0, 1), (1, 1)].map(|(i, j)| {
        let (s, fh) = (surface.clone(), f_hat.clone());
        fn_field(2, "Φ", move |q, k| {
            let geo = s.geometry(q, k + 1)?;
            let fj = fh.eval_jet(q, k + 2)?;
            let r = geo.gqe_affine_residual(&fj, mu)?;
            let e = fj.truncate(k).exp().scale(2.0 / c);
            Ok(&e * &r[i2(2, i, j)].truncate(k))
        })
    })
}

fn asd_nilpotent(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "asd_nilpotent";
    let p = merge(id, &ode_defaults(), o)?;
    let bx = bx.unwrap_or(CoordBox::new(&[(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)])?);
    check_box_dim(&bx, 4, id)?;
    let mu = num(&p, "mu")?;
    let (u, v) = (x1_expr(&p, "u")?, x1_expr(&p, "v")?);
    let (w, metric) = build_nilpotent_tt(u, v.clone(), surface_box(&bx)?)?;
    let f_hat = fhat_from_ode(&p, v, mu, (bx.lo[0], bx.hi[0]))?;
    let inst = GqeInstance::new(metric, pullback(f_hat.clone())?, mu, bx)?
        .with_lambda(LambdaMode::Explicit(constant(0.0, 4)));
    let checks = vec![
        check("gqe_residual", Probe::Gqe, Threshold::Residual),
        check("w_plus", Probe::WPlus, Threshold::Residual),
        check("w_minus", Probe::WMinus, Threshold::AtLeast(1e-4)),
        check("frame_anti_self_duality", Probe::FrameDuality(-1.0), Threshold::AtMost(1e-7)),
        check("tau", Probe::Tau, Threshold::AtMost(1e-9)),
        check("grad_norm_sq", Probe::GradNormSq, Threshold::Residual),
        check("grad_max", Probe::GradMax, Threshold::AtLeast(1e-6)),
        check("lambda_tau4", Probe::LambdaTau4, Threshold::AtMost(1e-7)),
        check("ricci_form", Probe::RicciForm, Threshold::AtMost(1e-7)),
        check("parallel_distribution", Probe::ParallelDist, Threshold::AtMost(1e-7)),
        check(
            "affine_gqe_residual",
            Probe::AffineGqe {
                surface: w.surface,
                f_hat,
                mu,
            },
            Threshold::Residual,
        ),
    ];
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

fn ansatz(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "ansatz_phi_e26";
    let p = merge(
        id,
        &[
            ("mu", 0.5.into()),
            ("gamma0", 1.0.into()),
            ("gamma1", 0.8.into()),
            ("gamma2", 0.3.into()),
            ("t0", 1.0.into()),
            ("t1", 3.0.into()),
            ("steps", 2048.into()),
        ],
        o,
    )?;
    let bx = bx.unwrap_or(CoordBox::new(&[(0.6, 1.4), (0.6, 1.4)])?);
    check_box_dim(&bx, 2, id)?;
    let mu = num(&p, "mu")?;
    if mu == 0.0 {
        return Err(Error::Config("the ansatz needs μ ≠ 0".into()));
    }
    let a = ansatz_ode(
        mu,
        [num(&p, "gamma0")?, num(&p, "gamma1")?, num(&p, "gamma2")?],
        (num(&p, "t0")?, num(&p, "t1")?),
        steps(&p, "steps")?,
        bx.clone(),
    )?;
    let checks = vec![
        check("phi_eigenfunction", Probe::PhiEigen, Threshold::Residual),
        check("recurrence_residual", Probe::RecurrenceResidual, Threshold::AtMost(1e-7)),
        check("recurrence_omega", Probe::RecurrenceOmega, Threshold::AtMost(1e-7)),
        check("ricci_formula", Probe::RicciFormula, Threshold::AtMost(1e-7)),
        check("e_formula", Probe::EFormula, Threshold::AtMost(1e-7)),
    ];
    Ok(Scenario {
        id: id.to_string(),
        description: String::new(),
        params: p,
        sample_box: bx,
        subject: Subject::Surface(a),
        checks,
    })
}

fn walker_distribution(o: &Params, bx: Option<CoordBox>) -> Result<Scenario> {
    let id = "walker_distribution";
    let p = merge(
        id,
        &[
            ("a11", "x1p^2 + x2".into()),
            ("a12", "x1*x2p".into()),
            ("a22", "sin(x1p) + x1*x2p".into()),
            ("f_hat", "x1 + 0.5*x2^2".into()),
        ],
        o,
    )?;
    let bx = bx.unwrap_or(CoordBox::new(&[(-1.0, 1.0); 4])?);
    check_box_dim(&bx, 4, id)?;
    let a = |k: &str| expr_field(text(&p, k)?, &WALKER_COORDS, &no_params()).map_err(|e| tag(e, k));
    let metric = build_walker([a("a11")?, a("a12")?, a("a22")?])?;
    let inst = GqeInstance::new(metric, pullback(surface_expr(&p, "f_hat")?)?, 0.0, bx)?;
    let checks = vec![
        check("distribution_null", Probe::DistributionNull, Threshold::Residual),
        check("distribution_parallel", Probe::WalkerParallel, Threshold::Residual),
        check("grad_in_distribution", Probe::GradInDistribution, Threshold::Residual),
        check("grad_norm_sq", Probe::GradNormSq, Threshold::Residual),
        check("grad_max", Probe::GradMax, Threshold::AtLeast(1e-6)),
        check("parallel_distribution", Probe::ParallelDist, Threshold::AtMost(1e-7)),
    ];
    Ok(metric_scenario(id, p, inst, 1.0, checks))
}

/// Values used by the surface probes of the ansatz scenario.
pub(crate) fn ansatz_predictions(a: &AnsatzSurface, point: &[f64]) -> Result<[f64; 4]> {
    let s = point[0] + point[1];
    let g: Vec<f64> = a.gamma.iter().map(|f| f.eval(&[s])).collect::<Result<_>>()?;
    let mu = a.mu;
    let omega = -(1.0 + mu) * g[1] / (mu * g[0]);
    let rho12 = g[2] / (mu * g[0]);
    let e = 4.0 * (1.0 + mu).powi(2) * g[1] * g[1] / (mu * g[0] * g[2]);
    Ok([omega, rho12, e, g[0]])
}
