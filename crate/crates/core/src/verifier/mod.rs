//! Generalized quasi-Einstein checks `Hes_f + ρ − μ df⊗df = λ g` and the
//! identities that follow from them.

pub mod report;
pub mod scenarios;

use nalgebra::{DMatrix, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::duality::{covariant_derivative_vector, gval, null_frame_from_gradient};
use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::jet::Jet;
use crate::tensor::{i2, i3, i4, normalized_norm, CoordBox, Geometry, MetricField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    pub residual: f64,
    pub identity: f64,
    pub rank: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            residual: 1e-8,
            identity: 1e-6,
            rank: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LambdaMode {
    /// `λ = (τ + Δf − μ‖∇f‖²)/n`, differentiated through jets.
    AutoTrace,
    Explicit(FieldRef),
}

#[derive(Debug, Clone)]
pub struct GqeInstance {
    pub metric: MetricField,
    pub f: FieldRef,
    pub mu: f64,
    pub lambda: LambdaMode,
    pub sample_box: CoordBox,
    pub tol: ToleranceProfile,
}

/// Metric curvature and `f` expanded at one point.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub geo: Geometry,
    pub f: Jet,
}

impl GqeInstance {
    pub fn new(metric: MetricField, f: FieldRef, mu: f64, sample_box: CoordBox) -> Result<GqeInstance> {
        if !mu.is_finite() {
            return Err(Error::Argument(format!("μ = {mu} is not finite")));
        }
        if f.n_vars() != metric.dim || sample_box.dim() != metric.dim {
            return Err(Error::Argument(
                "f, the metric and the sample box must share one chart".into(),
            ));
        }
        Ok(GqeInstance {
            metric,
            f,
            mu,
            lambda: LambdaMode::AutoTrace,
            sample_box,
            tol: ToleranceProfile::default(),
        })
    }

    pub fn with_lambda(mut self, lambda: LambdaMode) -> GqeInstance {
        self.lambda = lambda;
        self
    }

    /// Metric jets of order `order` and `f` of the same order.
    pub fn eval(&self, point: &[f64], order: usize) -> Result<PointEval> {
        let geo = self.metric.geometry(point, order)?;
        let f = self.f.eval_jet(point, order)?;
        Ok(PointEval { geo, f })
    }
}

/// `λ` as a jet; the trace form loses two orders against the metric.
pub fn lambda_jet(inst: &GqeInstance, pe: &PointEval) -> Result<Jet> {
    match &inst.lambda {
        LambdaMode::Explicit(l) => l.eval_jet(&pe.geo.point, pe.geo.k - 2),
        LambdaMode::AutoTrace => {
            let geo = &pe.geo;
            let o = geo.curv_order();
            let lap = geo.laplacian(&pe.f)?.truncate(o);
            let nn = geo.grad_norm_sq(&pe.f).truncate(o);
            let s = &(&geo.tau + &lap) - &nn.scale(inst.mu);
            Ok(s.scale(1.0 / geo.n as f64))
        }
    }
}

pub fn infer_lambda(inst: &GqeInstance, point: &[f64]) -> Result<f64> {
    let pe = inst.eval(point, 2)?;
    let l = match inst.lambda {
        LambdaMode::AutoTrace => lambda_jet(inst, &pe)?,
        LambdaMode::Explicit(_) => lambda_jet(
            &GqeInstance {
                lambda: LambdaMode::AutoTrace,
                ..inst.clone()
            },
            &pe,
        )?,
    };
    Ok(l.value())
}

#[derive(Debug, Clone, Serialize)]
pub struct GqeResidual {
    /// Row-major `n × n` residual tensor.
    pub tensor: Vec<f64>,
    pub norm: f64,
    pub lambda_used: f64,
}

/// `Hes_f + ρ − μ df⊗df − λ g` as jets of the curvature order.
pub fn residual_jets(inst: &GqeInstance, pe: &PointEval, lambda: &Jet) -> Result<Vec<Jet>> {
    let geo = &pe.geo;
    let n = geo.n;
    let o = geo.curv_order();
    let hes = geo.hessian(&pe.f)?;
    let o = o.min(hes[0].order()).min(lambda.order());
    let df: Vec<Jet> = (0..n).map(|i| pe.f.derivative(i).truncate(o)).collect();
    let lam = lambda.truncate(o);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let a = &hes[i2(n, i, j)].truncate(o) + &geo.ricci[i2(n, i, j)].truncate(o);
            let b = &(&df[i] * &df[j]).scale(inst.mu) + &(&lam * &geo.g[i2(n, i, j)].truncate(o));
            out.push(&a - &b);
        }
    }
    Ok(out)
}

pub fn gqe_residual_at(inst: &GqeInstance, pe: &PointEval) -> Result<GqeResidual> {
    let lambda = lambda_jet(inst, pe)?;
    let r = residual_jets(inst, pe, &lambda)?;
    let tensor: Vec<f64> = r.iter().map(Jet::value).collect();
    Ok(GqeResidual {
        norm: normalized_norm(tensor.iter().copied(), 2, pe.geo.gmax()),
        tensor,
        lambda_used: lambda.value(),
    })
}

pub fn gqe_residual(inst: &GqeInstance, point: &[f64]) -> Result<GqeResidual> {
    gqe_residual_at(inst, &inst.eval(point, 2)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct QTensorCheck {
    /// `𝔔(h)` row-major.
    pub q: Vec<f64>,
    /// Largest `|𝔔(h)(∂_ip, ∂_jp) + ∂²h/∂x_ip∂x_jp|`.
    pub primed_block_residual: f64,
    /// Largest `|∂²h/∂x_ip∂x_jp|`.
    pub primed_second_partials: f64,
    pub norm: f64,
}

/// `𝔔(h) = −Hes_h + μh(ρ − (τ/4) g)` for `h = e^{−μf}` on a Walker chart,
/// where the last two coordinates are the primed ones.
pub fn q_tensor(inst: &GqeInstance, point: &[f64]) -> Result<QTensorCheck> {
    let pe = inst.eval(point, 2)?;
    q_tensor_at(inst, &pe)
}

pub fn q_tensor_at(inst: &GqeInstance, pe: &PointEval) -> Result<QTensorCheck> {
    let geo = &pe.geo;
    let n = geo.n;
    if n != 4 {
        return Err(Error::UnsupportedDimension("𝔔(h) is defined on 4-dimensional Walker charts".into()));
    }
    let h = pe.f.truncate(2).scale(-inst.mu).exp();
    let hes = geo.hessian(&h)?;
    let hv = h.value();
    let tau = geo.tau.value();
    let mut q = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = -hes[i2(n, i, j)].value()
                + inst.mu * hv * (geo.ricci[i2(n, i, j)].value() - 0.25 * tau * geo.g[i2(n, i, j)].value());
            q.push(v);
        }
    }
    let mut worst = 0.0f64;
    let mut d2max = 0.0f64;
    for i in 2..4 {
        for j in 2..4 {
            let d2 = h.derivative(i).derivative(j).value();
            worst = worst.max((q[i2(n, i, j)] + d2).abs());
            d2max = d2max.max(d2.abs());
        }
    }
    Ok(QTensorCheck {
        norm: normalized_norm(q.iter().copied(), 2, geo.gmax()),
        q,
        primed_block_residual: worst,
        primed_second_partials: d2max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Isotropy {
    Nonisotropic,
    Isotropic,
    Mixed,
    CriticalFZero,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotropyRow {
    pub point: Vec<f64>,
    pub grad_norm_sq: f64,
    pub grad_max: f64,
    pub class: Isotropy,
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotropyReport {
    pub verdict: Isotropy,
    pub rows: Vec<IsotropyRow>,
}

pub const ISOTROPY_TOL: f64 = 1e-10;

pub fn isotropy_at(pe: &PointEval) -> IsotropyRow {
    let geo = &pe.geo;
    let grad: Vec<f64> = geo.gradient(&pe.f).iter().map(Jet::value).collect();
    let gmax = grad.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let nn = geo.grad_norm_sq(&pe.f).value();
    let df = (0..geo.n).fold(0.0f64, |a, i| a.max(pe.f.d1(i).abs()));
    let scale = (1.0 + geo.gmax()) * (1.0 + gmax.max(df).powi(2));
    let class = if gmax <= ISOTROPY_TOL {
        Isotropy::CriticalFZero
    } else if nn.abs() <= ISOTROPY_TOL * scale {
        Isotropy::Isotropic
    } else {
        Isotropy::Nonisotropic
    };
    IsotropyRow {
        point: geo.point.clone(),
        grad_norm_sq: nn,
        grad_max: gmax,
        class,
    }
}

/// Per-point classes aggregated over the sample; disagreement is `Mixed`.
pub fn classify_isotropy(inst: &GqeInstance, points: &[Vec<f64>]) -> Result<IsotropyReport> {
    let rows = points
        .iter()
        .map(|p| Ok(isotropy_at(&inst.eval(p, 2)?)))
        .collect::<Result<Vec<_>>>()?;
    let verdict = aggregate_isotropy(rows.iter().map(|r| r.class));
    Ok(IsotropyReport { verdict, rows })
}

pub fn aggregate_isotropy(classes: impl IntoIterator<Item = Isotropy>) -> Isotropy {
    let mut it = classes.into_iter();
    let Some(first) = it.next() else {
        return Isotropy::CriticalFZero;
    };
    if it.all(|c| c == first) {
        first
    } else {
        Isotropy::Mixed
    }
}

/// Residuals of the five curvature identities of a GQE structure, plus the
/// curvature identity in the form with a single `∇ρ` term and the `η = 0`
/// reduction of item (5).
#[derive(Debug, Clone, Serialize)]
pub struct GqeIdentities {
    pub items: [f64; 5],
    /// Item (4) with `(∇_Yρ)(X,Z)` but without `−(∇_Xρ)(Y,Z)`.
    pub item4_single_term: f64,
    /// `W(X,Y,Z,∇f) + C(X,Y,Z)`.
    pub item5_reduced: f64,
    pub eta: f64,
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Evaluates the identities on the coordinate frame. Needs order-3 jets.
pub fn gqe_identities(inst: &GqeInstance, point: &[f64]) -> Result<GqeIdentities> {
    gqe_identities_at(inst, &inst.eval(point, 3)?)
}

pub fn gqe_identities_at(inst: &GqeInstance, pe: &PointEval) -> Result<GqeIdentities> {
    let geo = &pe.geo;
    if geo.k < 3 || pe.f.order() < 3 {
        return Err(Error::Argument("the identity suite needs jets of order 3".into()));
    }
    let n = geo.n;
    let nf = n as f64;
    let mu = inst.mu;
    let gmax = geo.gmax();
    let lam = lambda_jet(inst, pe)?;
    let tau = &geo.tau;
    let lap = geo.laplacian(&pe.f)?;
    let nn = geo.grad_norm_sq(&pe.f);
    let hes = geo.hessian(&pe.f)?;
    let grad: Vec<f64> = geo.gradient(&pe.f).iter().map(Jet::value).collect();
    let df: Vec<f64> = (0..n).map(|i| pe.f.d1(i)).collect();
    let g = |i: usize, j: usize| geo.g[i2(n, i, j)].value();
    let rho = |i: usize, j: usize| geo.ricci[i2(n, i, j)].value();
    let hv = |i: usize, j: usize| hes[i2(n, i, j)].value();
    let dlam: Vec<f64> = (0..n).map(|i| lam.d1(i)).collect();
    let dtau: Vec<f64> = (0..n).map(|i| tau.d1(i)).collect();
    let lv = lam.value();
    let tv = tau.value();

    let item1 = (tv + lap.value() - mu * nn.value() - nf * lv).abs() / (1.0 + gmax);

    let item2 = max_abs((0..n).map(|i| {
        let h_grad: f64 = (0..n).map(|a| hv(a, i) * grad[a]).sum();
        dtau[i] + lap.d1(i) - 2.0 * mu * h_grad - nf * dlam[i]
    }));

    let item3 = max_abs((0..n).map(|i| {
        let r_grad: f64 = (0..n).map(|a| rho(a, i) * grad[a]).sum();
        dtau[i] + 2.0 * mu * (lv * (nf - 1.0) - tv) * df[i] + 2.0 * (mu - 1.0) * r_grad
            - 2.0 * (nf - 1.0) * dlam[i]
    }));

    let dr = geo.nabla_ricci()?; // [a][j][k] = (∇_a ρ)_jk
    let drv = |a: usize, j: usize, k: usize| dr[i3(n, a, j, k)].value();
    let riem_grad = |x: usize, y: usize, z: usize| -> f64 {
        (0..n).map(|l| geo.riem[i4(n, x, y, z, l)].value() * grad[l]).sum()
    };
    let mut item4 = 0.0f64;
    let mut item4_single = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let base = dlam[x] * g(y, z) - dlam[y] * g(x, z)
                    + mu * (df[y] * hv(x, z) - df[x] * hv(y, z));
                let lhs = riem_grad(x, y, z);
                item4 = item4.max((lhs - (base + drv(y, x, z) - drv(x, y, z))).abs());
                item4_single = item4_single.max((lhs - (base + drv(y, x, z))).abs());
            }
        }
    }

    let w = geo.weyl()?;
    let c = geo.cotton()?;
    let eta = mu * (nf - 2.0) + 1.0;
    let rho_grad: Vec<f64> = (0..n).map(|i| (0..n).map(|a| rho(i, a) * grad[a]).sum()).collect();
    let d1 = (nf - 1.0) * (nf - 2.0);
    let d2 = nf - 2.0;
    let mut item5 = 0.0f64;
    let mut item5_reduced = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let lhs: f64 = (0..n).map(|l| w[i4(n, x, y, z, l)].value() * grad[l]).sum();
                let cv = c[i3(n, x, y, z)].value();
                let rhs = -cv
                    + tv * eta * (df[y] * g(x, z) - df[x] * g(y, z)) / d1
                    + eta * (rho_grad[x] * g(y, z) - rho_grad[y] * g(x, z)) / d1
                    + eta * (rho(y, z) * df[x] - rho(x, z) * df[y]) / d2;
                item5 = item5.max((lhs - rhs).abs());
                item5_reduced = item5_reduced.max((lhs + cv).abs());
            }
        }
    }
    let s = 1.0 + gmax.powf(1.5);
    Ok(GqeIdentities {
        items: [item1, item2 / s, item3 / s, item4 / s, item5 / s],
        item4_single_term: item4_single / s,
        item5_reduced: item5_reduced / s,
        eta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotropicStructure {
    /// Deviation of the Ricci operator in the frame `(∇f, U, V, T)` from
    /// the isotropic normal form.
    pub ricci_form_residual: f64,
    pub lambda_tau4_residual: f64,
    /// Largest of `g(∇_X N, N)`, `g(∇_X U, U)`, `g(∇_X U, N)`, `g(∇_X N, U)`.
    pub parallel_dist_residual: f64,
    pub ricci_norm: f64,
    pub ricci_square_norm: f64,
    pub ricci_nilpotent: bool,
    /// Ricci operator matrix in the null frame, row-major.
    pub ricci_frame: Vec<f64>,
}

/// Ricci operator matrix `M` with `Ric(e_c) = Σ_a M[a][c] e_a`.
fn ricci_operator_in(geo: &Geometry, basis: &[Vector4<f64>; 4]) -> Result<Matrix4<f64>> {
    let n = geo.n;
    let pair = |t: &dyn Fn(usize, usize) -> f64, a: &Vector4<f64>, b: &Vector4<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * t(i, j) * b[j];
            }
        }
        s
    };
    let gf = |i: usize, j: usize| geo.g[i2(n, i, j)].value();
    let rf = |i: usize, j: usize| geo.ricci[i2(n, i, j)].value();
    let gb = Matrix4::from_fn(|a, b| pair(&gf, &basis[a], &basis[b]));
    let rb = Matrix4::from_fn(|a, b| pair(&rf, &basis[a], &basis[b]));
    let gi = gb
        .try_inverse()
        .ok_or_else(|| Error::singular("null frame is degenerate"))?;
    Ok(gi * rb)
}

/// Null-frame checks for an isotropic instance. `orientation` selects which
/// family of null planes `U` is taken from.
pub fn isotropic_structure_checks(inst: &GqeInstance, point: &[f64], orientation: f64) -> Result<IsotropicStructure> {
    isotropic_structure_at(inst, &inst.eval(point, 2)?, orientation)
}

pub fn isotropic_structure_at(inst: &GqeInstance, pe: &PointEval, orientation: f64) -> Result<IsotropicStructure> {
    let geo = &pe.geo;
    if geo.n != 4 {
        return Err(Error::UnsupportedDimension("null frames need dimension 4".into()));
    }
    let frame = null_frame_from_gradient(geo, &pe.f, orientation)?;
    let vals = frame.values();
    let m = ricci_operator_in(geo, &vals)?;
    let tau = geo.tau.value();
    let q = 0.25 * tau;
    let mut dev = 0.0f64;
    for i in 0..4 {
        dev = dev.max((m[(i, i)] - q).abs());
    }
    for &(a, b) in &[(0, 1), (1, 0), (2, 0), (2, 1), (2, 3), (3, 0), (3, 1), (3, 2)] {
        dev = dev.max(m[(a, b)].abs());
    }
    dev = dev.max((m[(0, 3)] - m[(1, 2)]).abs());
    let scale = 1.0 + max_abs(m.iter().copied());

    let lam = lambda_jet(inst, pe)?.value();

    let nv: Vec<f64> = (0..4).map(|i| vals[0][i]).collect();
    let uv: Vec<f64> = (0..4).map(|i| vals[1][i]).collect();
    let mut par = 0.0f64;
    for x in &vals {
        let dn = covariant_derivative_vector(geo, x, &frame.n);
        let du = covariant_derivative_vector(geo, x, &frame.u);
        for r in [gval(geo, &dn, &nv), gval(geo, &du, &uv), gval(geo, &du, &nv), gval(geo, &dn, &uv)] {
            par = par.max(r.abs());
        }
    }

    let gm = DMatrix::from_fn(4, 4, |i, j| geo.g[i2(4, i, j)].value());
    let gi = gm
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::singular("degenerate metric"))?;
    let rm = DMatrix::from_fn(4, 4, |i, j| geo.ricci[i2(4, i, j)].value());
    let ric = &gi * &rm;
    let ric2 = &ric * &ric;
    let ricci_norm = max_abs(ric.iter().copied());
    let ricci_square_norm = max_abs(ric2.iter().copied());
    Ok(IsotropicStructure {
        ricci_form_residual: dev / scale,
        lambda_tau4_residual: (lam - q).abs(),
        parallel_dist_residual: par,
        ricci_norm,
        ricci_square_norm,
        ricci_nilpotent: ricci_norm > 1e-8 && ricci_square_norm <= 1e-8 * (1.0 + ricci_norm),
        ricci_frame: m.transpose().iter().copied().collect(),
    })
}
