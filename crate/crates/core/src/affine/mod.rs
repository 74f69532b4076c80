//! Affine surface geometry: Ricci tensor, Hessian, the affine quasi-Einstein
//! equation, eigenspace dimensions, recurrence, the invariant 𝓔 and affine
//! Killing fields.

pub mod models;
pub mod ode;
mod prolong;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Matrix2;
use serde::Serialize;

pub use prolong::{dim_e, ProlongationResult};

use crate::error::{Error, Result};
use crate::field::{expr_field, FieldRef};
use crate::jet::Jet;
use crate::tensor::{curvature_operator, i2, i3, ricci_from_operator, CoordBox};

/// Keys of the stored Christoffel symbols `Γ_ij^k`, `i ≤ j`.
pub const GAMMA_KEYS: [&str; 6] = ["11^1", "11^2", "12^1", "12^2", "22^1", "22^2"];

pub const SURFACE_COORDS: [&str; 2] = ["x1", "x2"];

fn slot(i: usize, j: usize, k: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    let p = match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        _ => 2,
    };
    2 * p + k
}

/// A torsion-free connection on a coordinate patch of the plane.
#[derive(Clone)]
pub struct AffineSurface {
    gamma: Vec<FieldRef>,
    pub domain: CoordBox,
    pub label: String,
}

impl fmt::Debug for AffineSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AffineSurface({}, {:?})", self.label, self.domain)
    }
}

impl AffineSurface {
    /// `gamma` lists `Γ_ij^k` in the order of [`GAMMA_KEYS`].
    pub fn new(label: &str, gamma: Vec<FieldRef>, domain: CoordBox) -> Result<AffineSurface> {
        if gamma.len() != 6 {
            return Err(Error::Argument(format!(
                "a surface needs 6 Christoffel symbols, got {}",
                gamma.len()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| g.n_vars() != 2) {
            return Err(Error::Argument(format!(
                "Christoffel symbol over {} variables; surface fields depend on (x1, x2) only",
                g.n_vars()
            )));
        }
        if domain.dim() != 2 {
            return Err(Error::Argument("surface domain must be a 2-dimensional box".into()));
        }
        Ok(AffineSurface {
            gamma,
            domain,
            label: label.to_string(),
        })
    }

    /// Builds a surface from expression strings keyed like `"12^1"`; missing
    /// keys are zero.
    pub fn from_exprs(
        label: &str,
        exprs: &BTreeMap<String, String>,
        params: &BTreeMap<String, f64>,
        domain: CoordBox,
    ) -> Result<AffineSurface> {
        for k in exprs.keys() {
            let norm = normalize_key(k)?;
            if exprs.keys().filter(|o| normalize_key(o).ok() == Some(norm.clone())).count() > 1 {
                return Err(Error::Config(format!("Christoffel symbol {norm} given twice")));
            }
        }
        let mut gamma = Vec::with_capacity(6);
        for key in GAMMA_KEYS {
            let text = exprs
                .iter()
                .find(|(k, _)| normalize_key(k).ok().as_deref() == Some(key))
                .map(|(_, v)| v.as_str())
                .unwrap_or("0");
            gamma.push(expr_field(text, &SURFACE_COORDS, params)?);
        }
        AffineSurface::new(label, gamma, domain)
    }

    pub fn gamma_field(&self, i: usize, j: usize, k: usize) -> &FieldRef {
        &self.gamma[slot(i, j, k)]
    }

    pub fn gamma_fields(&self) -> &[FieldRef] {
        &self.gamma
    }

    /// All eight `Γ_ij^k` jets, indexed `(i*2 + j)*2 + k`.
    pub fn gamma_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let stored: Vec<Jet> = self
            .gamma
            .iter()
            .map(|g| g.eval_jet(point, order))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(8);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out.push(stored[slot(i, j, k)].clone());
                }
            }
        }
        Ok(out)
    }

    pub fn geometry(&self, point: &[f64], order: usize) -> Result<AffineGeometry> {
        AffineGeometry::new(self, point, order)
    }
}

/// Accepts `"12^1"`, `"21^1"` and `"Gamma.12^1"` style keys.
pub fn normalize_key(k: &str) -> Result<String> {
    let k = k.trim().trim_start_matches("Gamma.");
    let b = k.as_bytes();
    let ok = b.len() == 4
        && b[2] == b'^'
        && [b[0], b[1], b[3]].iter().all(|c| *c == b'1' || *c == b'2');
    if !ok {
        return Err(Error::Config(format!("malformed Christoffel key '{k}'")));
    }
    let (i, j) = if b[0] <= b[1] { (b[0], b[1]) } else { (b[1], b[0]) };
    Ok(format!("{}{}^{}", i as char, j as char, b[3] as char))
}

/// Jet-valued affine curvature at a point. Christoffel jets have order `k`,
/// Ricci jets order `k − 1`.
#[derive(Debug, Clone)]
pub struct AffineGeometry {
    pub point: Vec<f64>,
    pub k: usize,
    pub gamma: Vec<Jet>,
    pub ricci: Vec<Jet>,
    pub rho_s: Vec<Jet>,
    pub rho_a: Vec<Jet>,
}

impl AffineGeometry {
    pub fn new(surface: &AffineSurface, point: &[f64], k: usize) -> Result<AffineGeometry> {
        if point.len() != 2 {
            return Err(Error::Argument(format!(
                "surface point needs 2 coordinates, got {}",
                point.len()
            )));
        }
        if k == 0 {
            return Err(Error::Argument("affine curvature needs Christoffel jets of order ≥ 1".into()));
        }
        let gamma = surface.gamma_jets(point, k)?;
        let op = curvature_operator(2, &gamma)?;
        let ricci = ricci_from_operator(2, &op);
        let mut rho_s = Vec::with_capacity(4);
        let mut rho_a = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let (a, b) = (&ricci[i2(2, i, j)], &ricci[i2(2, j, i)]);
                rho_s.push((a + b).scale(0.5));
                rho_a.push((a - b).scale(0.5));
            }
        }
        Ok(AffineGeometry {
            point: point.to_vec(),
            k,
            gamma,
            ricci,
            rho_s,
            rho_a,
        })
    }

    pub fn gamma_at(&self, i: usize, j: usize, m: usize) -> &Jet {
        &self.gamma[i3(2, i, j, m)]
    }

    /// `Hes_ij = ∂_ij h − Γ_ij^k ∂_k h`, order `min(h.order − 2, k)`.
    pub fn hessian(&self, h: &Jet) -> Result<Vec<Jet>> {
        if h.order() < 2 || h.n_vars() != 2 {
            return Err(Error::Argument("affine Hessian needs a 2-variable jet of order ≥ 2".into()));
        }
        let o = (h.order() - 2).min(self.k);
        let dh: Vec<Jet> = (0..2).map(|i| h.derivative(i)).collect();
        let mut out = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let mut v = dh[i].derivative(j).truncate(o);
                for m in 0..2 {
                    v = &v - &(&self.gamma_at(i, j, m).truncate(o) * &dh[m].truncate(o));
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    /// `Hes h − μ h ρ_s`.
    pub fn qee_residual(&self, h: &Jet, mu: f64) -> Result<Vec<Jet>> {
        let hes = self.hessian(h)?;
        let o = hes[0].order();
        let ht = h.truncate(o);
        Ok(hes
            .iter()
            .zip(&self.rho_s)
            .map(|(a, r)| a - &(&ht * &r.truncate(o)).scale(mu))
            .collect())
    }

    /// `Hes f + 2ρ_s − μ df⊗df`.
    pub fn gqe_affine_residual(&self, f: &Jet, mu: f64) -> Result<Vec<Jet>> {
        let hes = self.hessian(f)?;
        let o = hes[0].order();
        let df: Vec<Jet> = (0..2).map(|i| f.derivative(i).truncate(o)).collect();
        let mut out = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let v = &(&hes[i2(2, i, j)] + &self.rho_s[i2(2, i, j)].truncate(o).scale(2.0))
                    - &(&df[i] * &df[j]).scale(mu);
                out.push(v);
            }
        }
        Ok(out)
    }

    /// `(D_k T)_ij = ∂_k T_ij − Γ_ki^a T_aj − Γ_kj^a T_ia`, indexed `[k][i][j]`.
    pub fn covariant_derivative2(&self, t: &[Jet]) -> Result<Vec<Jet>> {
        let o = t[0].order();
        if o == 0 {
            return Err(Error::Argument("covariant derivative needs jets of order ≥ 1".into()));
        }
        let mut out = Vec::with_capacity(8);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = t[i2(2, i, j)].derivative(k);
                    for a in 0..2 {
                        v = &v - &(&self.gamma_at(k, i, a).truncate(o - 1) * &t[i2(2, a, j)].truncate(o - 1));
                        v = &v - &(&self.gamma_at(k, j, a).truncate(o - 1) * &t[i2(2, i, a)].truncate(o - 1));
                    }
                    out.push(v);
                }
            }
        }
        Ok(out)
    }
}

pub type Mat2 = [[f64; 2]; 2];

fn mat2(v: &[Jet]) -> Mat2 {
    [[v[0].value(), v[1].value()], [v[2].value(), v[3].value()]]
}

pub fn mat2_max_abs(m: &Mat2) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineRicci {
    pub rho: Mat2,
    pub rho_s: Mat2,
    pub rho_a: Mat2,
    pub rank_s: usize,
}

/// Numerical rank of a symmetric 2×2 matrix with tolerance `rel · scale`.
pub fn rank2(m: &Mat2, scale: f64) -> usize {
    let sv = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).singular_values();
    let tol = 1e-9 * scale.max(sv.max());
    sv.iter().filter(|&&s| s > tol && s > 0.0).count()
}

pub fn affine_ricci(surface: &AffineSurface, point: &[f64]) -> Result<AffineRicci> {
    let geo = surface.geometry(point, 1)?;
    let gmax = geo.gamma.iter().fold(0.0f64, |a, g| a.max(g.value().abs()).max(g.max_abs()));
    let rho_s = mat2(&geo.rho_s);
    Ok(AffineRicci {
        rho: mat2(&geo.ricci),
        rho_s,
        rho_a: mat2(&geo.rho_a),
        rank_s: rank2(&rho_s, gmax * gmax),
    })
}

pub fn affine_hessian(surface: &AffineSurface, h: &FieldRef, point: &[f64]) -> Result<Mat2> {
    let geo = surface.geometry(point, 1)?;
    Ok(mat2(&geo.hessian(&h.eval_jet(point, 2)?)?))
}

pub fn qee_residual(surface: &AffineSurface, h: &FieldRef, mu: f64, point: &[f64]) -> Result<Mat2> {
    let geo = surface.geometry(point, 1)?;
    Ok(mat2(&geo.qee_residual(&h.eval_jet(point, 2)?, mu)?))
}

pub fn gqe_affine_residual(
    surface: &AffineSurface,
    f_hat: &FieldRef,
    mu: f64,
    point: &[f64],
) -> Result<Mat2> {
    let geo = surface.geometry(point, 1)?;
    Ok(mat2(&geo.gqe_affine_residual(&f_hat.eval_jet(point, 2)?, mu)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct Recurrence {
    pub omega: [f64; 2],
    pub residual: f64,
    pub d_rho_norm: f64,
    pub recurrent: bool,
}

/// Least-squares fit of `Dρ = ω ⊗ ρ`.
pub fn recurrence_form(surface: &AffineSurface, point: &[f64]) -> Result<Recurrence> {
    let geo = surface.geometry(point, 2)?;
    let drho = geo.covariant_derivative2(&geo.ricci)?;
    let rho: Vec<f64> = geo.ricci.iter().map(|x| x.value()).collect();
    let rr: f64 = rho.iter().map(|x| x * x).sum();
    let gmax = geo.gamma.iter().fold(0.0f64, |a, g| a.max(g.value().abs()));
    if rr.sqrt() <= 1e-12 * (1.0 + gmax * gmax) {
        return Err(Error::Precondition(
            "Ricci tensor vanishes, recurrence form undefined".into(),
        ));
    }
    let mut omega = [0.0; 2];
    let mut misfit = 0.0;
    let mut dnorm = 0.0;
    for k in 0..2 {
        let d: Vec<f64> = (0..4).map(|ij| drho[4 * k + ij].value()).collect();
        omega[k] = d.iter().zip(&rho).map(|(a, b)| a * b).sum::<f64>() / rr;
        for ij in 0..4 {
            misfit += (d[ij] - omega[k] * rho[ij]).powi(2);
            dnorm += d[ij] * d[ij];
        }
    }
    let residual = misfit.sqrt();
    let d_rho_norm = dnorm.sqrt();
    Ok(Recurrence {
        omega,
        residual,
        d_rho_norm,
        recurrent: residual <= 1e-7 * d_rho_norm || d_rho_norm == 0.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EInvariant {
    pub e: f64,
    pub de: [f64; 2],
}

/// `𝓔 = ρ^ia ρ^jb ρ^kc ρ_ij;k ρ_ab;c` for the symmetric Ricci tensor.
pub fn e_invariant(surface: &AffineSurface, point: &[f64]) -> Result<EInvariant> {
    let e = e_invariant_jet(surface, point, 1)?;
    Ok(EInvariant {
        e: e.value(),
        de: [e.d1(0), e.d1(1)],
    })
}

/// 𝓔 as a jet of the given order.
pub fn e_invariant_jet(surface: &AffineSurface, point: &[f64], order: usize) -> Result<Jet> {
    let geo = surface.geometry(point, order + 2)?;
    let d = geo.covariant_derivative2(&geo.rho_s)?;
    let rs: Vec<Jet> = geo.rho_s.iter().map(|x| x.truncate(order)).collect();
    let det = &(&rs[0] * &rs[3]) - &(&rs[1] * &rs[2]);
    let scale = rs.iter().fold(0.0f64, |a, x| a.max(x.value().abs()));
    if det.value().abs() <= 1e-12 * scale * scale || scale == 0.0 {
        return Err(Error::Precondition(
            "symmetric Ricci tensor is degenerate at the point".into(),
        ));
    }
    let dinv = det.recip()?;
    let inv = [&rs[3] * &dinv, -&(&rs[1] * &dinv), -&(&rs[2] * &dinv), &rs[0] * &dinv];
    // d[k][i][j] = ρ_ij;k
    let mut e = Jet::constant(0.0, 2, order)?;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            let t = &(&(&inv[i2(2, i, a)] * &inv[i2(2, j, b)]) * &inv[i2(2, k, c)])
                                * &(&d[4 * k + i2(2, i, j)] * &d[4 * c + i2(2, a, b)]);
                            e = &e + &t;
                        }
                    }
                }
            }
        }
    }
    Ok(e)
}

/// Largest component of the Lie derivative `L_X Γ`.
pub fn affine_killing_residual(surface: &AffineSurface, x: &[FieldRef; 2], point: &[f64]) -> Result<f64> {
    let geo = surface.geometry(point, 1)?;
    let xj: Vec<Jet> = x.iter().map(|f| f.eval_jet(point, 2)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let mut v = xj[k].derivative(i).derivative(j).value();
                for m in 0..2 {
                    v += xj[m].value() * geo.gamma_at(i, j, k).d1(m);
                    v -= xj[k].d1(m) * geo.gamma_at(i, j, m).value();
                    v += xj[m].d1(i) * geo.gamma_at(m, j, k).value();
                    v += xj[m].d1(j) * geo.gamma_at(i, m, k).value();
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
