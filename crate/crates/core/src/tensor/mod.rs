//! Pseudo-Riemannian curvature from metric jets.
//!
//! Sign conventions: `𝓡(X,Y)Z = ∇_[X,Y] Z − [∇_X, ∇_Y] Z`, so in coordinates
//!
//! ```text
//! 𝓡(∂_i,∂_j)∂_k = −(∂_iΓ_jk^m − ∂_jΓ_ik^m + Γ_jk^a Γ_ia^m − Γ_ik^a Γ_ja^m) ∂_m
//! R_ijkl = 𝓡_ijk^m g_ml,   ρ_ik = 𝓡_imk^m,   τ = g^ik ρ_ik
//! ```
//!
//! With this choice the round sphere has τ = +2.

mod sample;

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

pub use sample::{sample_points, CoordBox};

use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::jet::{Jet, MAX_ORDER};

/// A symmetric metric whose components are scalar fields.
#[derive(Clone)]
pub struct MetricField {
    pub dim: usize,
    pub coords: Vec<String>,
    /// Upper-triangular components `g_ij`, `i ≤ j`, row-major.
    comps: Vec<FieldRef>,
    /// Sign applied to the coordinate volume form.
    pub orientation: f64,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("coords", &self.coords)
            .field("orientation", &self.orientation)
            .finish()
    }
}

fn tri(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricField {
    /// `comps` lists `g_ij` for `i ≤ j` in row-major order.
    pub fn new(coords: &[&str], comps: Vec<FieldRef>) -> Result<MetricField> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::UnsupportedDimension(format!("metric of dimension {n}")));
        }
        if comps.len() != n * (n + 1) / 2 {
            return Err(Error::Argument(format!(
                "a {n}-dimensional metric needs {} components, got {}",
                n * (n + 1) / 2,
                comps.len()
            )));
        }
        if let Some(c) = comps.iter().find(|c| c.n_vars() != n) {
            return Err(Error::Argument(format!(
                "metric component over {} variables in a {n}-dimensional chart",
                c.n_vars()
            )));
        }
        Ok(MetricField {
            dim: n,
            coords: coords.iter().map(|s| s.to_string()).collect(),
            comps,
            orientation: 1.0,
        })
    }

    pub fn with_orientation(mut self, sign: f64) -> MetricField {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn component(&self, i: usize, j: usize) -> &FieldRef {
        &self.comps[tri(self.dim, i, j)]
    }

    /// Values of `g_ij` at a point.
    pub fn values(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.component(i, j).eval(point)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    /// Curvature data from metric jets of order `order` (at least 2).
    pub fn geometry(&self, point: &[f64], order: usize) -> Result<Geometry> {
        Geometry::new(self, point, order)
    }
}

/// Index-normalized max norm: `max |T| / (1 + gmax^(valence/2))`.
pub fn normalized_norm(values: impl IntoIterator<Item = f64>, valence: usize, gmax: f64) -> f64 {
    let m = values.into_iter().fold(0.0f64, |a, v| a.max(v.abs()));
    m / (1.0 + gmax.powf(valence as f64 / 2.0))
}

/// Inverse of a jet-valued matrix via the Neumann series around its value.
pub fn invert_jets(a: &[Jet], n: usize, point: &[f64]) -> Result<Vec<Jet>> {
    let nv = a[0].n_vars();
    let k = a[0].order();
    let a0 = DMatrix::from_fn(n, n, |i, j| a[i * n + j].value());
    let scale = a0.amax().max(1e-300);
    let det = a0.determinant();
    if !(det.abs() >= 1e-12 * scale.powi(n as i32)) {
        return Err(Error::Singular {
            point: Some(point.to_vec()),
            span: None,
            context: format!("degenerate matrix (det = {det:e})"),
        });
    }
    let inv0 = a0.try_inverse().ok_or_else(|| Error::singular("matrix inversion failed").at_point(point))?;
    let inv0j: Vec<Jet> = (0..n * n)
        .map(|idx| Jet::constant(inv0[(idx / n, idx % n)], nv, k))
        .collect::<Result<_>>()?;
    // M = −A0⁻¹ N where N = A − A0 has zero value
    let nil: Vec<Jet> = a
        .iter()
        .map(|x| x.add_scalar(-x.value()))
        .collect();
    let m = matmul(&inv0j, &nil, n).into_iter().map(|x| -x).collect::<Vec<_>>();
    // X = (I + M + M² + … + M^k) A0⁻¹
    let mut acc = inv0j.clone();
    let mut term = inv0j;
    for _ in 0..k {
        term = matmul(&m, &term, n);
        acc = acc.iter().zip(&term).map(|(a, b)| a + b).collect();
    }
    Ok(acc)
}

fn matmul(a: &[Jet], b: &[Jet], n: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut s = &a[i * n] * &b[j];
            for l in 1..n {
                s = &s + &(&a[i * n + l] * &b[l * n + j]);
            }
            out.push(s);
        }
    }
    out
}

/// Jet-valued curvature at a point.
///
/// `g`, `ginv` carry order `k`; `gamma` order `k − 1`; the curvature tensors
/// order `k − 2`.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub n: usize,
    pub point: Vec<f64>,
    pub k: usize,
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    /// `Γ_ij^m` at `(i*n + j)*n + m`.
    pub gamma: Vec<Jet>,
    /// `𝓡_ijk^m` at `((i*n + j)*n + k)*n + m`.
    pub riem_op: Vec<Jet>,
    /// `R_ijkl`.
    pub riem: Vec<Jet>,
    pub ricci: Vec<Jet>,
    pub tau: Jet,
}

#[inline]
pub fn i2(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}
#[inline]
pub fn i3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}
#[inline]
pub fn i4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

impl Geometry {
    pub fn new(metric: &MetricField, point: &[f64], k: usize) -> Result<Geometry> {
        let n = metric.dim;
        if point.len() != n {
            return Err(Error::Argument(format!(
                "point has {} coordinates, metric is {n}-dimensional",
                point.len()
            )));
        }
        if !(2..=MAX_ORDER).contains(&k) {
            return Err(Error::Argument(format!("metric jet order {k} outside 2..={MAX_ORDER}")));
        }
        let mut g = vec![Jet::constant(0.0, n, k)?; n * n];
        for i in 0..n {
            for j in i..n {
                let v = metric.component(i, j).eval_jet(point, k)?;
                g[i2(n, j, i)] = v.clone();
                g[i2(n, i, j)] = v;
            }
        }
        let ginv = invert_jets(&g, n, point)?;

        // first kind: [ij,l] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let dg: Vec<Jet> = (0..n * n * n)
            .map(|idx| {
                let (ij, l) = (idx / n, idx % n);
                g[ij].derivative(l)
            })
            .collect(); // dg[(i*n+j)*n + l] = ∂_l g_ij
        let mut first = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let s = &(&dg[i3(n, j, l, i)] + &dg[i3(n, i, l, j)]) - &dg[i3(n, i, j, l)];
                    first.push(s.scale(0.5));
                }
            }
        }
        let ginv_t: Vec<Jet> = ginv.iter().map(|x| x.truncate(k - 1)).collect();
        let mut gamma = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    let mut s = &ginv_t[i2(n, m, 0)] * &first[i3(n, i, j, 0)];
                    for l in 1..n {
                        s = &s + &(&ginv_t[i2(n, m, l)] * &first[i3(n, i, j, l)]);
                    }
                    gamma.push(s);
                }
            }
        }
        let (riem_op, riem, ricci, tau) = curvature_from_gamma(n, &gamma, &g, &ginv)?;
        Ok(Geometry {
            n,
            point: point.to_vec(),
            k,
            g,
            ginv,
            gamma,
            riem_op,
            riem,
            ricci,
            tau,
        })
    }

    /// Order of the curvature jets.
    pub fn curv_order(&self) -> usize {
        self.k - 2
    }

    pub fn g_at(&self, a: usize, b: usize) -> &Jet {
        &self.g[i2(self.n, a, b)]
    }

    pub fn ginv_at(&self, a: usize, b: usize) -> &Jet {
        &self.ginv[i2(self.n, a, b)]
    }

    pub fn gamma_at(&self, i: usize, j: usize, m: usize) -> &Jet {
        &self.gamma[i3(self.n, i, j, m)]
    }

    pub fn gmax(&self) -> f64 {
        self.g.iter().fold(0.0f64, |a, x| a.max(x.value().abs()))
    }

    fn zero(&self, order: usize) -> Jet {
        Jet::constant(0.0, self.n, order).expect("valid shape")
    }

    /// Weyl tensor `W_ijkl`, order `k − 2`.
    pub fn weyl(&self) -> Result<Vec<Jet>> {
        let n = self.n;
        if n < 3 {
            return Err(Error::UnsupportedDimension(format!(
                "Weyl tensor needs dimension ≥ 3, got {n}"
            )));
        }
        let o = self.curv_order();
        let g: Vec<Jet> = self.g.iter().map(|x| x.truncate(o)).collect();
        let c1 = self.tau.scale(1.0 / ((n - 1) as f64 * (n - 2) as f64));
        let c2 = 1.0 / (n - 2) as f64;
        let mut w = Vec::with_capacity(n.pow(4));
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    for t in 0..n {
                        let gg = &(&g[i2(n, x, z)] * &g[i2(n, y, t)]) - &(&g[i2(n, x, t)] * &g[i2(n, y, z)]);
                        let rg = &(&(&self.ricci[i2(n, x, t)] * &g[i2(n, y, z)])
                            - &(&self.ricci[i2(n, x, z)] * &g[i2(n, y, t)]))
                            + &(&(&self.ricci[i2(n, y, z)] * &g[i2(n, x, t)])
                                - &(&self.ricci[i2(n, y, t)] * &g[i2(n, x, z)]));
                        let v = &(&self.riem[i4(n, x, y, z, t)] + &(&c1 * &gg)) + &rg.scale(c2);
                        w.push(v);
                    }
                }
            }
        }
        Ok(w)
    }

    /// Covariant derivative of a covariant tensor of the given rank.
    /// Output index order is `[a, i1, …, ir]` for `(∇_a T)_{i1…ir}`; the
    /// order drops by one.
    pub fn covariant_derivative(&self, t: &[Jet], rank: usize) -> Result<Vec<Jet>> {
        let n = self.n;
        if t.len() != n.pow(rank as u32) {
            return Err(Error::Argument("tensor size does not match rank".into()));
        }
        let o = t[0].order();
        if o == 0 {
            return Err(Error::Argument(
                "covariant derivative needs jets of order ≥ 1".into(),
            ));
        }
        let gam: Vec<Jet> = self.gamma.iter().map(|x| x.truncate(o - 1)).collect();
        let size = t.len();
        let mut out = Vec::with_capacity(n * size);
        let mut idx = vec![0usize; rank];
        for a in 0..n {
            for flat in 0..size {
                let mut r = flat;
                for s in (0..rank).rev() {
                    idx[s] = r % n;
                    r /= n;
                }
                let mut v = t[flat].derivative(a);
                for s in 0..rank {
                    let stride = n.pow((rank - 1 - s) as u32);
                    let base = flat - idx[s] * stride;
                    for p in 0..n {
                        let term = &gam[i3(n, a, idx[s], p)] * &t[base + p * stride].truncate(o - 1);
                        v = &v - &term;
                    }
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    /// `(∇_a ρ)_jk`, order `k − 3`.
    pub fn nabla_ricci(&self) -> Result<Vec<Jet>> {
        self.covariant_derivative(&self.ricci, 2)
    }

    /// Cotton tensor `C_ijk = (∇_iρ)_jk − (∇_jρ)_ik − (∂_iτ g_jk − ∂_jτ g_ik)/(2(n−1))`.
    pub fn cotton(&self) -> Result<Vec<Jet>> {
        let n = self.n;
        if n < 3 {
            return Err(Error::UnsupportedDimension(format!(
                "Cotton tensor needs dimension ≥ 3, got {n}"
            )));
        }
        let dr = self.nabla_ricci()?;
        let o = dr[0].order();
        let dtau: Vec<Jet> = (0..n).map(|i| self.tau.derivative(i)).collect();
        let g: Vec<Jet> = self.g.iter().map(|x| x.truncate(o)).collect();
        let c = 1.0 / (2.0 * (n - 1) as f64);
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = &dr[i3(n, i, j, k)] - &dr[i3(n, j, i, k)];
                    let b = &(&dtau[i] * &g[i2(n, j, k)]) - &(&dtau[j] * &g[i2(n, i, k)]);
                    out.push(&a - &b.scale(c));
                }
            }
        }
        Ok(out)
    }

    /// `div₄W(X,Y,Z) = g^ab (∇_a W)(X,Y,Z,∂_b)`, order `k − 3`.
    pub fn div4_weyl(&self) -> Result<Vec<Jet>> {
        let n = self.n;
        let w = self.weyl()?;
        let dw = self.covariant_derivative(&w, 4)?;
        let o = dw[0].order();
        let gi: Vec<Jet> = self.ginv.iter().map(|x| x.truncate(o)).collect();
        let mut out = Vec::with_capacity(n * n * n);
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let mut s = self.zero(o);
                    for a in 0..n {
                        for b in 0..n {
                            let t = &gi[i2(n, a, b)] * &dw[(a * n * n * n * n) + i4(n, x, y, z, b)];
                            s = &s + &t;
                        }
                    }
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    /// `Hes_ij = ∂_ij f − Γ_ij^k ∂_k f`; order is `min(f.order − 2, k − 1)`.
    pub fn hessian(&self, f: &Jet) -> Result<Vec<Jet>> {
        let n = self.n;
        if f.order() < 2 || f.n_vars() != n {
            return Err(Error::Argument("Hessian needs a jet of order ≥ 2 on the chart".into()));
        }
        let o = (f.order() - 2).min(self.k - 1);
        let df: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = df[i].derivative(j).truncate(o);
                for m in 0..n {
                    v = &v - &(&self.gamma[i3(n, i, j, m)].truncate(o) * &df[m].truncate(o));
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    /// `∇f^i = g^ij ∂_j f`; order `f.order − 1`, capped by `k`.
    pub fn gradient(&self, f: &Jet) -> Vec<Jet> {
        let n = self.n;
        let df: Vec<Jet> = (0..n).map(|i| f.derivative(i)).collect();
        (0..n)
            .map(|i| {
                let mut s = &self.ginv[i2(n, i, 0)] * &df[0];
                for j in 1..n {
                    s = &s + &(&self.ginv[i2(n, i, j)] * &df[j]);
                }
                s
            })
            .collect()
    }

    /// `‖∇f‖² = g^ij ∂_i f ∂_j f`.
    pub fn grad_norm_sq(&self, f: &Jet) -> Jet {
        let n = self.n;
        let grad = self.gradient(f);
        let mut s = &grad[0] * &f.derivative(0);
        for i in 1..n {
            s = &s + &(&grad[i] * &f.derivative(i));
        }
        s
    }

    /// Full contraction `g^ij T_ij` of a (0,2) tensor.
    pub fn trace(&self, t: &[Jet]) -> Jet {
        let n = self.n;
        let o = t[0].order();
        let mut s = self.zero(o);
        for i in 0..n {
            for j in 0..n {
                s = &s + &(&self.ginv[i2(n, i, j)].truncate(o) * &t[i2(n, i, j)]);
            }
        }
        s
    }

    pub fn laplacian(&self, f: &Jet) -> Result<Jet> {
        Ok(self.trace(&self.hessian(f)?))
    }

    /// Real-valued snapshot of the curvature data.
    pub fn pack(&self) -> Result<CurvaturePack> {
        let n = self.n;
        let vals = |v: &[Jet]| v.iter().map(Jet::value).collect::<Vec<_>>();
        let (weyl, cotton) = if n >= 3 {
            let c = if self.k >= 3 { Some(vals(&self.cotton()?)) } else { None };
            (Some(vals(&self.weyl()?)), c)
        } else {
            (None, None)
        };
        Ok(CurvaturePack {
            point: self.point.clone(),
            dim: n,
            g: vals(&self.g),
            g_inv: vals(&self.ginv),
            gamma: vals(&self.gamma),
            riemann: vals(&self.riem),
            ricci: vals(&self.ricci),
            scalar: self.tau.value(),
            weyl,
            cotton,
        })
    }
}

/// `𝓡_ijk^m` from Christoffel jets; the order drops by one.
pub(crate) fn curvature_operator(n: usize, gamma: &[Jet]) -> Result<Vec<Jet>> {
    let og = gamma[0].order();
    if og == 0 {
        return Err(Error::Argument("curvature needs Christoffel jets of order ≥ 1".into()));
    }
    let gt: Vec<Jet> = gamma.iter().map(|x| x.truncate(og - 1)).collect();
    let mut op = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    let mut v = &gamma[i3(n, j, k, m)].derivative(i) - &gamma[i3(n, i, k, m)].derivative(j);
                    for a in 0..n {
                        v = &v + &(&gt[i3(n, j, k, a)] * &gt[i3(n, i, a, m)]);
                        v = &v - &(&gt[i3(n, i, k, a)] * &gt[i3(n, j, a, m)]);
                    }
                    op.push(-v);
                }
            }
        }
    }
    Ok(op)
}

/// `ρ_ik = 𝓡_imk^m`.
pub(crate) fn ricci_from_operator(n: usize, op: &[Jet]) -> Vec<Jet> {
    let mut ricci = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let mut v = op[i4(n, i, 0, k, 0)].clone();
            for m in 1..n {
                v = &v + &op[i4(n, i, m, k, m)];
            }
            ricci.push(v);
        }
    }
    ricci
}

/// `𝓡`, `R`, `ρ`, `τ` from Christoffel jets. Output order is one below `gamma`.
pub(crate) fn curvature_from_gamma(
    n: usize,
    gamma: &[Jet],
    g: &[Jet],
    ginv: &[Jet],
) -> Result<(Vec<Jet>, Vec<Jet>, Vec<Jet>, Jet)> {
    let op = curvature_operator(n, gamma)?;
    let o = op[0].order();
    let gtr: Vec<Jet> = g.iter().map(|x| x.truncate(o)).collect();
    let mut riem = Vec::with_capacity(n.pow(4));
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = &op[i4(n, i, j, k, 0)] * &gtr[i2(n, 0, l)];
                    for m in 1..n {
                        v = &v + &(&op[i4(n, i, j, k, m)] * &gtr[i2(n, m, l)]);
                    }
                    riem.push(v);
                }
            }
        }
    }
    let ricci = ricci_from_operator(n, &op);
    let mut tau = Jet::constant(0.0, n, o)?;
    for i in 0..n {
        for j in 0..n {
            tau = &tau + &(&ginv[i2(n, i, j)].truncate(o) * &ricci[i2(n, i, j)]);
        }
    }
    Ok((op, riem, ricci, tau))
}

/// Point values of the curvature data, flattened row-major.
#[derive(Debug, Clone, Serialize)]
pub struct CurvaturePack {
    pub point: Vec<f64>,
    pub dim: usize,
    pub g: Vec<f64>,
    pub g_inv: Vec<f64>,
    pub gamma: Vec<f64>,
    pub riemann: Vec<f64>,
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub weyl: Option<Vec<f64>>,
    pub cotton: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests;
