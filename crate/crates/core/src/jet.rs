//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores every partial derivative `∂^α f(p)` with `|α| ≤ order`
//! of a scalar function at a base point `p`. The derivative convention (as
//! opposed to monomial coefficients `∂^α f / α!`) means curvature formulas can
//! read raw partials straight out of the coefficient vector, and taking a
//! partial derivative of a jet is just a re-indexing.
//!
//! Multi-indices are enumerated in graded order: all indices of total degree
//! `d` come before those of degree `d + 1`, and the order inside a degree does
//! not depend on the jet order. Truncation is therefore a prefix slice.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Highest supported differentiation order.
pub const MAX_ORDER: usize = 6;
/// Highest supported number of variables.
pub const MAX_VARS: usize = 8;

/// Absolute threshold on a divisor's leading value.
pub const DIV_THRESHOLD: f64 = 1e-300;

struct Layout {
    order: usize,
    indices: Vec<Vec<u8>>,
    /// `(i, j, k, w)`: `out[k] += w * a[i] * b[j]`.
    mul: Vec<(u32, u32, u32, f64)>,
    /// `shift[v][t]` is the index of `α_t + e_v` in this layout, for every
    /// `t` in the layout of order `order - 1`.
    shift: Vec<Vec<u32>>,
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64;
        r /= (i + 1) as f64;
    }
    r
}

fn multi_indices(n: usize, order: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == n - 1 {
            cur[pos] = left as u8;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[pos] = k as u8;
            rec(n, pos + 1, left - k, cur, out);
        }
    }
    let mut out = Vec::new();
    for d in 0..=order {
        let mut cur = vec![0u8; n];
        rec(n, 0, d, &mut cur, &mut out);
    }
    out
}

fn rank_of(indices: &[Vec<u8>], alpha: &[u8]) -> Option<usize> {
    indices.iter().position(|a| a.as_slice() == alpha)
}

impl Layout {
    fn build(n: usize, order: usize) -> Layout {
        let indices = multi_indices(n, order);
        let lookup: std::collections::HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut mul = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            let da: usize = a.iter().map(|&x| x as usize).sum();
            for (j, b) in indices.iter().enumerate() {
                let db: usize = b.iter().map(|&x| x as usize).sum();
                if da + db > order {
                    continue;
                }
                let g: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let k = lookup[&g];
                let w: f64 = a
                    .iter()
                    .zip(&g)
                    .map(|(&ai, &gi)| binomial(gi as u32, ai as u32))
                    .product();
                mul.push((i as u32, j as u32, k as u32, w));
            }
        }
        let mut shift = Vec::with_capacity(n);
        if order > 0 {
            let lower = multi_indices(n, order - 1);
            for v in 0..n {
                let col = lower
                    .iter()
                    .map(|a| {
                        let mut b = a.clone();
                        b[v] += 1;
                        lookup[&b] as u32
                    })
                    .collect();
                shift.push(col);
            }
        }
        Layout {
            order,
            indices,
            mul,
            shift,
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }
}

#[allow(clippy::declare_interior_mutable_const)]
const CELL: OnceLock<Layout> = OnceLock::new();
#[allow(clippy::declare_interior_mutable_const)]
const ROW: [OnceLock<Layout>; MAX_ORDER + 1] = [CELL; MAX_ORDER + 1];
static LAYOUTS: [[OnceLock<Layout>; MAX_ORDER + 1]; MAX_VARS + 1] = [ROW; MAX_VARS + 1];

fn layout(n: usize, order: usize) -> &'static Layout {
    LAYOUTS[n][order].get_or_init(|| Layout::build(n, order))
}

/// Number of coefficients of a jet in `n` variables truncated at `order`.
pub fn coeff_count(n: usize, order: usize) -> usize {
    (binomial((n + order) as u32, order as u32)).round() as usize
}

fn check_shape(n_vars: usize, order: usize) -> Result<()> {
    if n_vars == 0 || n_vars > MAX_VARS {
        return Err(Error::Argument(format!(
            "jet variable count {n_vars} outside 1..={MAX_VARS}"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::Argument(format!(
            "jet order {order} exceeds maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Truncated Taylor expansion of a scalar in `n_vars` variables.
#[derive(Clone)]
pub struct Jet {
    n_vars: usize,
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("n_vars", &self.n_vars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.n_vars == other.n_vars && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// The constant jet `c`.
    pub fn constant(c: f64, n_vars: usize, order: usize) -> Result<Jet> {
        check_shape(n_vars, order)?;
        let layout = layout(n_vars, order);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = c;
        Ok(Jet {
            n_vars,
            layout,
            coeffs,
        })
    }

    /// The jet of the coordinate function `x^var_index` at `point`.
    pub fn seed(point: &[f64], var_index: usize, order: usize) -> Result<Jet> {
        if var_index >= point.len() {
            return Err(Error::Argument(format!(
                "seed variable {var_index} out of range for {} coordinates",
                point.len()
            )));
        }
        let mut j = Jet::constant(point[var_index], point.len(), order)?;
        if order > 0 {
            // degree-one indices are e_0, e_1, ... in that order
            j.coeffs[1 + var_index] = 1.0;
        }
        Ok(j)
    }

    /// Builds a jet from a raw coefficient vector in this crate's ordering.
    pub fn from_coeffs(n_vars: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_shape(n_vars, order)?;
        let layout = layout(n_vars, order);
        if coeffs.len() != layout.len() {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                layout.len(),
                coeffs.len()
            )));
        }
        Ok(Jet {
            n_vars,
            layout,
            coeffs,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> &[Vec<u8>] {
        &self.layout.indices
    }

    /// `∂f/∂x^i`, requires order ≥ 1.
    pub fn d1(&self, i: usize) -> f64 {
        self.coeffs[1 + i]
    }

    /// `∂^α f` for the given multi-index.
    pub fn partial(&self, alpha: &[u8]) -> Result<f64> {
        if alpha.len() != self.n_vars {
            return Err(Error::Argument(format!(
                "multi-index has {} entries, jet has {} variables",
                alpha.len(),
                self.n_vars
            )));
        }
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order() {
            return Err(Error::Argument(format!(
                "derivative of degree {deg} requested from a jet of order {}",
                self.order()
            )));
        }
        let idx = rank_of(&self.layout.indices, alpha).expect("multi-index in layout");
        Ok(self.coeffs[idx])
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// Drops all coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.n_vars, order);
        Jet {
            n_vars: self.n_vars,
            layout,
            coeffs: self.coeffs[..layout.len()].to_vec(),
        }
    }

    /// `∂_v` of the jet; the result has order one less.
    pub fn derivative(&self, v: usize) -> Jet {
        assert!(v < self.n_vars, "derivative variable out of range");
        assert!(self.order() > 0, "cannot differentiate an order-0 jet");
        let layout = layout(self.n_vars, self.order() - 1);
        let coeffs = self.layout.shift[v]
            .iter()
            .map(|&s| self.coeffs[s as usize])
            .collect();
        Jet {
            n_vars: self.n_vars,
            layout,
            coeffs,
        }
    }

    /// Re-expresses the jet in `n_new` variables, sending variable `i` to
    /// `var_map[i]`. The new variables not in the image carry zero derivatives.
    pub fn embed(&self, n_new: usize, var_map: &[usize]) -> Result<Jet> {
        if var_map.len() != self.n_vars || var_map.iter().any(|&v| v >= n_new) {
            return Err(Error::Argument("invalid variable map for jet embedding".into()));
        }
        check_shape(n_new, self.order())?;
        let target = layout(n_new, self.order());
        let mut coeffs = vec![0.0; target.len()];
        let mut beta = vec![0u8; n_new];
        for (alpha, &c) in self.layout.indices.iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            beta.iter_mut().for_each(|b| *b = 0);
            for (i, &a) in alpha.iter().enumerate() {
                beta[var_map[i]] += a;
            }
            let k = rank_of(&target.indices, &beta).expect("embedded index");
            coeffs[k] = c;
        }
        Ok(Jet {
            n_vars: n_new,
            layout: target,
            coeffs,
        })
    }

    fn pair<'a>(&'a self, other: &'a Jet) -> (std::borrow::Cow<'a, Jet>, std::borrow::Cow<'a, Jet>) {
        use std::borrow::Cow;
        assert_eq!(
            self.n_vars, other.n_vars,
            "jet arithmetic on mismatched variable counts"
        );
        match self.order().cmp(&other.order()) {
            std::cmp::Ordering::Equal => (Cow::Borrowed(self), Cow::Borrowed(other)),
            std::cmp::Ordering::Less => (Cow::Borrowed(self), Cow::Owned(other.truncate(self.order()))),
            std::cmp::Ordering::Greater => (Cow::Owned(self.truncate(other.order())), Cow::Borrowed(other)),
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::Argument(format!(
                "jet variable counts differ: {} vs {}",
                self.n_vars, other.n_vars
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self - other)
    }

    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self * other)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            n_vars: self.n_vars,
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// `self / other`.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self * &other.recip()?)
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if !(a0.abs() >= DIV_THRESHOLD) {
            return Err(Error::singular(format!("division by {a0:e}")));
        }
        let k = self.order();
        let mut d = Vec::with_capacity(k + 1);
        let inv = 1.0 / a0;
        let mut term = inv;
        for i in 0..=k {
            d.push(term);
            term *= -((i + 1) as f64) * inv;
        }
        Ok(self.compose(&d))
    }

    /// Composes a univariate function, given its derivatives
    /// `[f(a0), f'(a0), …]` at the jet's value, with the jet.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let k = self.order().min(derivs.len().saturating_sub(1));
        let mut delta = self.truncate(k);
        delta.coeffs[0] = 0.0;
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
        }
        let mut acc = Jet {
            n_vars: self.n_vars,
            layout: delta.layout,
            coeffs: vec![0.0; delta.coeffs.len()],
        };
        acc.coeffs[0] = derivs[k] / fact;
        for i in (0..k).rev() {
            fact /= (i + 1) as f64;
            acc = &acc * &delta;
            acc.coeffs[0] += derivs[i] / fact;
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(Error::singular(format!("log of non-positive value {a0:e}")));
        }
        let mut d = vec![a0.ln()];
        let mut term = 1.0 / a0;
        for i in 1..=self.order() {
            d.push(term);
            term *= -(i as f64) / a0;
        }
        Ok(self.compose(&d))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order()).map(|i| cycle[i % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order()).map(|i| cycle[i % 4]).collect();
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if !(self.value() > 0.0) {
            return Err(Error::singular(format!(
                "sqrt of non-positive value {:e}",
                self.value()
            )));
        }
        self.powf(0.5)
    }

    /// `self^r` for a real exponent. Non-integer exponents need a positive base.
    pub fn powf(&self, r: f64) -> Result<Jet> {
        let a0 = self.value();
        let integral = r.fract() == 0.0 && r.abs() < 9.0e15;
        if !integral && !(a0 > 0.0) {
            return Err(Error::singular(format!(
                "non-integer power {r} of non-positive value {a0:e}"
            )));
        }
        let k = self.order();
        let mut d = Vec::with_capacity(k + 1);
        let mut falling = 1.0;
        for i in 0..=k {
            if falling == 0.0 {
                d.push(0.0);
                continue;
            }
            let e = r - i as f64;
            let p = if integral {
                if a0 == 0.0 && e < 0.0 {
                    return Err(Error::singular("negative power of zero".to_string()));
                }
                a0.powi(e as i32)
            } else {
                a0.powf(e)
            };
            d.push(falling * p);
            falling *= r - i as f64;
        }
        Ok(self.compose(&d))
    }

    /// `self^other` with a jet-valued exponent.
    pub fn pow(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        if other.is_constant() {
            return self.powf(other.value());
        }
        let l = self.ln()?;
        Ok((&l * other).exp())
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (a, b) = self.pair(rhs);
        Jet {
            n_vars: a.n_vars,
            layout: a.layout,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        }
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let (a, b) = self.pair(rhs);
        Jet {
            n_vars: a.n_vars,
            layout: a.layout,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect(),
        }
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (a, b) = self.pair(rhs);
        let layout = a.layout;
        let mut out = vec![0.0; layout.len()];
        let (ac, bc) = (&a.coeffs, &b.coeffs);
        for &(i, j, k, w) in &layout.mul {
            out[k as usize] += w * ac[i as usize] * bc[j as usize];
        }
        Jet {
            n_vars: a.n_vars,
            layout,
            coeffs: out,
        }
    }
}

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl std::ops::$tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                std::ops::$tr::$m(&self, &rhs)
            }
        }
        impl std::ops::$tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                std::ops::$tr::$m(&self, rhs)
            }
        }
        impl std::ops::$tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                std::ops::$tr::$m(self, &rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a, I: IntoIterator<Item = &'a Jet>>(it: I) -> Option<Jet> {
    let mut it = it.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}
