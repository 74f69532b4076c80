//! Scalar fields: anything that can be expanded to a [`Jet`] at a point.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse, Compiled, Expr};
use crate::jet::Jet;

pub trait Field: Send + Sync + fmt::Debug {
    fn n_vars(&self) -> usize;

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet>;

    /// True only when the field is known to vanish identically.
    fn is_zero(&self) -> bool {
        false
    }

    fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval_jet(point, 0)?.value())
    }
}

pub type FieldRef = Arc<dyn Field>;

fn check_point(n: usize, point: &[f64]) -> Result<()> {
    if point.len() != n {
        return Err(Error::Argument(format!(
            "point has {} coordinates, field expects {n}",
            point.len()
        )));
    }
    Ok(())
}

/// A parsed expression over named coordinates with bound parameters.
#[derive(Clone)]
pub struct ScalarField {
    pub expr: Expr,
    pub coords: Vec<String>,
    pub params: BTreeMap<String, f64>,
    compiled: Compiled,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({} over {:?})", self.expr, self.coords)
    }
}

impl ScalarField {
    pub fn new(expr: Expr, coords: &[&str], params: &BTreeMap<String, f64>) -> Result<ScalarField> {
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let compiled = Compiled::compile(&expr, &coords, params)?;
        Ok(ScalarField {
            expr,
            coords,
            params: params.clone(),
            compiled,
        })
    }

    pub fn parse(text: &str, coords: &[&str], params: &BTreeMap<String, f64>) -> Result<ScalarField> {
        ScalarField::new(parse(text)?, coords, params)
    }

    pub fn into_ref(self) -> FieldRef {
        Arc::new(self)
    }
}

impl Field for ScalarField {
    fn n_vars(&self) -> usize {
        self.coords.len()
    }

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        check_point(self.coords.len(), point)?;
        self.compiled
            .eval_jet(point, order)
            .map_err(|e| e.at_point(point))
    }

    fn is_zero(&self) -> bool {
        self.compiled.is_zero()
    }
}

/// Parses an expression and wraps it as a shared field.
pub fn expr_field(text: &str, coords: &[&str], params: &BTreeMap<String, f64>) -> Result<FieldRef> {
    Ok(ScalarField::parse(text, coords, params)?.into_ref())
}

#[derive(Debug, Clone)]
pub struct ConstantField {
    pub value: f64,
    pub n: usize,
}

impl Field for ConstantField {
    fn n_vars(&self) -> usize {
        self.n
    }

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        check_point(self.n, point)?;
        Jet::constant(self.value, self.n, order)
    }

    fn is_zero(&self) -> bool {
        self.value == 0.0
    }
}

pub fn constant(value: f64, n: usize) -> FieldRef {
    Arc::new(ConstantField { value, n })
}

pub fn zero(n: usize) -> FieldRef {
    constant(0.0, n)
}

/// A field on fewer variables viewed on a larger space: variable `i` of the
/// inner field is coordinate `var_map[i]` of the outer one.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub inner: FieldRef,
    pub n_outer: usize,
    pub var_map: Vec<usize>,
}

impl Field for Lifted {
    fn n_vars(&self) -> usize {
        self.n_outer
    }

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        check_point(self.n_outer, point)?;
        let sub: Vec<f64> = self.var_map.iter().map(|&v| point[v]).collect();
        self.inner
            .eval_jet(&sub, order)?
            .embed(self.n_outer, &self.var_map)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

pub fn lift(inner: FieldRef, n_outer: usize, var_map: &[usize]) -> Result<FieldRef> {
    if var_map.len() != inner.n_vars() || var_map.iter().any(|&v| v >= n_outer) {
        return Err(Error::Argument("invalid variable map for lifted field".into()));
    }
    if inner.is_zero() {
        return Ok(zero(n_outer));
    }
    Ok(Arc::new(Lifted {
        inner,
        n_outer,
        var_map: var_map.to_vec(),
    }))
}

type JetFn = dyn Fn(&[f64], usize) -> Result<Jet> + Send + Sync;

/// A field defined by a closure producing jets.
#[derive(Clone)]
pub struct FnField {
    pub n: usize,
    pub label: String,
    f: Arc<JetFn>,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnField({}, n = {})", self.label, self.n)
    }
}

impl Field for FnField {
    fn n_vars(&self) -> usize {
        self.n
    }

    fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        check_point(self.n, point)?;
        (self.f)(point, order).map_err(|e| e.at_point(point))
    }
}

pub fn fn_field<F>(n: usize, label: &str, f: F) -> FieldRef
where
    F: Fn(&[f64], usize) -> Result<Jet> + Send + Sync + 'static,
{
    Arc::new(FnField {
        n,
        label: label.to_string(),
        f: Arc::new(f),
    })
}

/// `Σ c_i f_i`, skipping identically zero terms.
pub fn linear_combination(n: usize, terms: Vec<(f64, FieldRef)>) -> FieldRef {
    let terms: Vec<(f64, FieldRef)> = terms
        .into_iter()
        .filter(|(c, f)| *c != 0.0 && !f.is_zero())
        .collect();
    if terms.is_empty() {
        return zero(n);
    }
    if terms.len() == 1 && terms[0].0 == 1.0 {
        return terms[0].1.clone();
    }
    fn_field(n, "linear combination", move |p, k| {
        let mut acc = terms[0].1.eval_jet(p, k)?.scale(terms[0].0);
        for (c, f) in &terms[1..] {
            acc = &acc + &f.eval_jet(p, k)?.scale(*c);
        }
        Ok(acc)
    })
}

/// Pointwise product of fields.
pub fn product(n: usize, factors: Vec<FieldRef>) -> FieldRef {
    if factors.iter().any(|f| f.is_zero()) {
        return zero(n);
    }
    fn_field(n, "product", move |p, k| {
        let mut acc = Jet::constant(1.0, n, k)?;
        for f in &factors {
            acc = &acc * &f.eval_jet(p, k)?;
        }
        Ok(acc)
    })
}

/// `∂f/∂x^var`, evaluated by expanding `f` one order higher.
pub fn derivative(f: FieldRef, var: usize) -> FieldRef {
    if f.is_zero() {
        return zero(f.n_vars());
    }
    let n = f.n_vars();
    fn_field(n, "derivative", move |p, k| {
        if k + 1 > crate::jet::MAX_ORDER {
            return Err(Error::Argument(format!(
                "derivative field needs jets of order {}",
                k + 1
            )));
        }
        Ok(f.eval_jet(p, k + 1)?.derivative(var))
    })
}

/// `outer ∘ arg` for a field `outer` of one variable.
pub fn compose(outer: FieldRef, arg: FieldRef) -> Result<FieldRef> {
    if outer.n_vars() != 1 {
        return Err(Error::Argument("outer field of a composition must have one variable".into()));
    }
    let n = arg.n_vars();
    Ok(fn_field(n, "composition", move |p, k| {
        let a = arg.eval_jet(p, k)?;
        let d = outer.eval_jet(&[a.value()], k)?;
        Ok(a.compose(d.coeffs()))
    }))
}
