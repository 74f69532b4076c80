//! Fixed-step RK4 for the scenario ODEs, and a bridge that turns a trajectory
//! into a field evaluable to jets.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, FieldRef};
use crate::jet::{Jet, MAX_ORDER};

pub const MIN_STEPS: usize = 16;
pub const MAX_STEPS: usize = 1 << 22;

/// An autonomous-or-not first-order system `y' = F(t, y)` that can also be
/// evaluated on univariate jets in `t`.
pub trait OdeSystem: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `t` is the seed jet of the independent variable.
    fn rhs_jet(&self, t: &Jet, y: &[Jet]) -> Result<Vec<Jet>>;

    fn rhs(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let tj = Jet::constant(t, 1, 0)?;
        let yj: Vec<Jet> = y.iter().map(|&v| Jet::constant(v, 1, 0)).collect::<Result<_>>()?;
        Ok(self.rhs_jet(&tj, &yj)?.iter().map(|j| j.value()).collect())
    }
}

/// `γ''' = −(γ'²γ'' − μγγ''²)/(μγγ')` on `y = (γ, γ', γ'')`.
#[derive(Debug, Clone)]
pub struct AnsatzOde {
    pub mu: f64,
}

impl OdeSystem for AnsatzOde {
    fn dim(&self) -> usize {
        3
    }

    fn rhs_jet(&self, _t: &Jet, y: &[Jet]) -> Result<Vec<Jet>> {
        let (g, g1, g2) = (&y[0], &y[1], &y[2]);
        let den = (g * g1).scale(self.mu);
        if den.value().abs() < 1e-12 {
            return Err(Error::singular(format!(
                "μγγ' = {:e} vanishes (γ = {:e}, γ' = {:e})",
                den.value(),
                g.value(),
                g1.value()
            )));
        }
        let num = &(&(g1 * g1) * g2) - &(&(g * g2) * g2).scale(self.mu);
        Ok(vec![g1.clone(), g2.clone(), -&num.div(&den)?])
    }
}

/// `f̂'' = μ f̂'² − 2v(t)` on `y = (f̂, f̂')`.
#[derive(Debug, Clone)]
pub struct FhatSystem {
    pub mu: f64,
    pub v: FieldRef,
}

impl OdeSystem for FhatSystem {
    fn dim(&self) -> usize {
        2
    }

    fn rhs_jet(&self, t: &Jet, y: &[Jet]) -> Result<Vec<Jet>> {
        let v = self.v.eval_jet(&[t.value()], t.order())?;
        let d2 = &(&y[1] * &y[1]).scale(self.mu) - &v.scale(2.0);
        Ok(vec![y[1].clone(), d2])
    }
}

/// Closed-form check for `FhatSystem` with `v = 0`: the solution through
/// `(f0, c)` at `t0`.
pub fn fhat_free_solution(mu: f64, f0: f64, c: f64, t0: f64, t: f64) -> f64 {
    if mu == 0.0 {
        f0 + c * (t - t0)
    } else {
        f0 - (1.0 - mu * c * (t - t0)).abs().ln() / mu
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("t");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, y) in self.t.iter().zip(&self.y) {
            out.push_str(&format!("{t:.17e}"));
            for v in y {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn t0(&self) -> f64 {
        self.t[0]
    }

    pub fn t1(&self) -> f64 {
        *self.t.last().expect("trajectories are never empty")
    }
}

fn ode_err(t: f64, e: Error) -> Error {
    match e {
        Error::Ode { .. } => e,
        Error::Singular { context, .. } => Error::Ode { t, msg: context },
        other => Error::Ode {
            t,
            msg: other.to_string(),
        },
    }
}

fn rk4_step(sys: &dyn OdeSystem, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let eval = |tt: f64, yy: &[f64]| sys.rhs(tt, yy).map_err(|e| ode_err(tt, e));
    let shift = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let k1 = eval(t, y)?;
    let k2 = eval(t + h / 2.0, &shift(y, &k1, h / 2.0))?;
    let k3 = eval(t + h / 2.0, &shift(y, &k2, h / 2.0))?;
    let k4 = eval(t + h, &shift(y, &k3, h))?;
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if let Some(v) = next.iter().find(|v| !v.is_finite()) {
        return Err(Error::Ode {
            t: t + h,
            msg: format!("solution left the finite range ({v})"),
        });
    }
    Ok(next)
}

/// Classical RK4 with `steps` equal steps from `t0` to `t1`.
pub fn rk4_fixed(sys: &dyn OdeSystem, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Result<Trajectory> {
    if steps < MIN_STEPS {
        return Err(Error::Argument(format!("RK4 needs at least {MIN_STEPS} steps, got {steps}")));
    }
    if steps > MAX_STEPS {
        return Err(Error::Argument(format!("RK4 takes at most {MAX_STEPS} steps, got {steps}")));
    }
    if y0.len() != sys.dim() {
        return Err(Error::Argument(format!(
            "initial data has {} components, system has {}",
            y0.len(),
            sys.dim()
        )));
    }
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(Error::Argument("integration interval must be finite and non-empty".into()));
    }
    let h = (t1 - t0) / steps as f64;
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    t.push(t0);
    y.push(y0.to_vec());
    for i in 0..steps {
        let next = rk4_step(sys, t[i], &y[i], h)?;
        t.push(if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h });
        y.push(next);
    }
    Ok(Trajectory { t, y })
}

/// Taylor coefficients of the solution through `(t, y)`, as univariate jets
/// of the given order.
pub fn taylor_jets(sys: &dyn OdeSystem, t: f64, y: &[f64], order: usize) -> Result<Vec<Jet>> {
    let mut jets: Vec<Jet> = y.iter().map(|&v| Jet::constant(v, 1, 0)).collect::<Result<_>>()?;
    for r in 0..order {
        let tj = Jet::seed(&[t], 0, r)?;
        let d = sys.rhs_jet(&tj, &jets).map_err(|e| ode_err(t, e))?;
        jets = y
            .iter()
            .zip(&d)
            .map(|(&y0, dj)| {
                let mut c = Vec::with_capacity(r + 2);
                c.push(y0);
                c.extend_from_slice(dj.coeffs());
                Jet::from_coeffs(1, r + 1, c)
            })
            .collect::<Result<_>>()?;
    }
    Ok(jets)
}

/// One component of an ODE solution as a field of one variable. Values
/// between stored nodes come from re-integrating from the nearest node;
/// derivatives come from the ODE itself.
#[derive(Clone)]
pub struct OdeField {
    sys: Arc<dyn OdeSystem>,
    traj: Arc<Trajectory>,
    component: usize,
}

impl fmt::Debug for OdeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "OdeField({:?}, component {}, t ∈ [{}, {}])",
            self.sys,
            self.component,
            self.traj.t0(),
            self.traj.t1()
        )
    }
}

impl OdeField {
    pub fn new(sys: Arc<dyn OdeSystem>, traj: Arc<Trajectory>, component: usize) -> Result<OdeField> {
        if component >= sys.dim() {
            return Err(Error::Argument(format!(
                "component {component} out of range for a system of dimension {}",
                sys.dim()
            )));
        }
        Ok(OdeField { sys, traj, component })
    }

    /// Solves and wraps every component.
    pub fn solve(
        sys: Arc<dyn OdeSystem>,
        t0: f64,
        y0: &[f64],
        t1: f64,
        steps: usize,
    ) -> Result<Vec<FieldRef>> {
        let traj = Arc::new(rk4_fixed(sys.as_ref(), t0, y0, t1, steps)?);
        (0..sys.dim())
            .map(|c| Ok(Arc::new(OdeField::new(sys.clone(), traj.clone(), c)?) as FieldRef))
            .collect()
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    fn state_at(&self, t: f64) -> Result<Vec<f64>> {
        let tr = &self.traj;
        let (lo, hi) = if tr.t0() <= tr.t1() { (tr.t0(), tr.t1()) } else { (tr.t1(), tr.t0()) };
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!(
                "t = {t} outside the integrated interval [{lo}, {hi}]"
            )));
        }
        let h = (tr.t1() - tr.t0()) / (tr.t.len() - 1) as f64;
        let idx = (((t - tr.t0()) / h).round().max(0.0) as usize).min(tr.t.len() - 1);
        let (tn, yn) = (tr.t[idx], &tr.y[idx]);
        if t == tn {
            return Ok(yn.clone());
        }
        let sub = (t - tn) / 2.0;
        let mid = rk4_step(self.sys.as_ref(), tn, yn, sub)?;
        rk4_step(self.sys.as_ref(), tn + sub, &mid, sub)
    }
}

impl Field for OdeField {
    fn n_vars(&self) -> usize {
        1
    }

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        if point.len() != 1 {
            return Err(Error::Argument("an ODE field has one variable".into()));
        }
        if order > MAX_ORDER {
            return Err(Error::Argument(format!("order {order} exceeds {MAX_ORDER}")));
        }
        let t = point[0];
        let y = self.state_at(t)?;
        let jets = taylor_jets(self.sys.as_ref(), t, &y, order)?;
        Ok(jets[self.component].clone())
    }
}
