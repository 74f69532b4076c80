//! Walker metrics on the cotangent bundle of an affine surface, in the
//! canonical chart `(x1, x2, x1p, x2p)`.

use std::sync::Arc;

use crate::affine::models::{wong_nilpotent, WongSurface};
use crate::affine::AffineSurface;
use crate::error::{Error, Result};
use crate::field::{constant, fn_field, lift, zero, FieldRef};
use crate::jet::Jet;
use crate::tensor::{CoordBox, MetricField};

pub const WALKER_COORDS: [&str; 4] = ["x1", "x2", "x1p", "x2p"];

/// Volume-form sign for which `⋆(dx1p∧dx2p) = dx1p∧dx2p`.
pub const WALKER_ORIENTATION: f64 = 1.0;

/// A (1,1)-tensor field on the surface, `e[r][i] = T^r_i`.
pub type Endo = [[FieldRef; 2]; 2];

/// A symmetric 2-tensor on the surface, `[Φ11, Φ12, Φ22]`.
pub type Sym2 = [FieldRef; 3];

pub fn identity_endo() -> Endo {
    [[constant(1.0, 2), zero(2)], [zero(2), constant(1.0, 2)]]
}

pub fn zero_endo() -> Endo {
    [[zero(2), zero(2)], [zero(2), zero(2)]]
}

pub fn zero_sym2() -> Sym2 {
    [zero(2), zero(2), zero(2)]
}

/// `f · Id`.
pub fn scalar_endo(f: FieldRef) -> Endo {
    [[f.clone(), zero(2)], [zero(2), f]]
}

fn sym_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (0, 1) => 1,
        _ => 2,
    }
}

/// shape: `g_{i,i'} = 1`, upper-left block `a`, primed block zero.
pub fn build_walker(a: Sym2) -> Result<MetricField> {
    if let Some(f) = a.iter().find(|f| f.n_vars() != 4) {
        return Err(Error::Argument(format!(
            "Walker block entries depend on all four coordinates, got {} variables",
            f.n_vars()
        )));
    }
    let [a11, a12, a22] = a;
    let one = constant(1.0, 4);
    let z = zero(4);
    // row-major upper triangle of a 4×4 matrix
    let comps = vec![
        a11,
        a12,
        one.clone(),
        z.clone(),
        a22,
        z.clone(),
        one,
        z.clone(),
        z.clone(),
        z,
    ];
    Ok(MetricField::new(&WALKER_COORDS, comps)?.with_orientation(WALKER_ORIENTATION))
}

fn check_surface_fields(fields: &[&FieldRef], what: &str) -> Result<()> {
    if fields.iter().any(|f| f.n_vars() != 2) {
        return Err(Error::Argument(format!("{what} must be a function of (x1, x2) only")));
    }
    Ok(())
}

#[derive(Debug)]
struct Data {
    surface: AffineSurface,
    phi: Sym2,
    t: Option<Endo>,
    s: Option<Endo>,
    x: Option<[FieldRef; 2]>,
}

fn lifted(f: &FieldRef, p: &[f64], k: usize) -> Result<Option<Jet>> {
    if f.is_zero() {
        return Ok(None);
    }
    Ok(Some(f.eval_jet(&p[..2], k)?.embed(4, &[0, 1])?))
}

impl Data {
    fn entry(&self, i: usize, j: usize, p: &[f64], k: usize) -> Result<Jet> {
        let xp = [Jet::seed(p, 2, k)?, Jet::seed(p, 3, k)?];
        let mut acc = Jet::constant(0.0, 4, k)?;
        if let Some(phi) = lifted(&self.phi[sym_index(i, j)], p, k)? {
            acc = &acc + &phi;
        }
        for m in 0..2 {
            if let Some(g) = lifted(self.surface.gamma_field(i, j, m), p, k)? {
                acc = &acc - &(&xp[m] * &g).scale(2.0);
            }
        }
        if let (Some(t), Some(s)) = (&self.t, &self.s) {
            // ½ x_r' x_s' (T^r_i S^s_j + T^r_j S^s_i)
            for r in 0..2 {
                for q in 0..2 {
                    let mut c = Jet::constant(0.0, 4, k)?;
                    let mut any = false;
                    for (a, b) in [(i, j), (j, i)] {
                        if let (Some(tt), Some(ss)) = (lifted(&t[r][a], p, k)?, lifted(&s[q][b], p, k)?) {
                            c = &c + &(&tt * &ss);
                            any = true;
                        }
                    }
                    if any {
                        acc = &acc + &(&(&xp[r] * &xp[q]) * &c).scale(0.5);
                    }
                }
            }
        }
        if let Some(x) = &self.x {
            let mut ix = Jet::constant(0.0, 4, k)?;
            for m in 0..2 {
                if let Some(xm) = lifted(&x[m], p, k)? {
                    ix = &ix + &(&xp[m] * &xm);
                }
            }
            acc = &acc + &(&ix * &(&xp[i] * &xp[j]));
        }
        Ok(acc)
    }

    fn is_zero_entry(&self, i: usize, j: usize) -> bool {
        self.phi[sym_index(i, j)].is_zero()
            && (0..2).all(|m| self.surface.gamma_field(i, j, m).is_zero())
            && self.t.is_none()
            && self.x.is_none()
    }
}

fn build(data: Data) -> Result<MetricField> {
    let data = Arc::new(data);
    let mut a = Vec::with_capacity(3);
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        if data.is_zero_entry(i, j) {
            a.push(zero(4));
            continue;
        }
        let d = data.clone();
        a.push(fn_field(4, &format!("a{}{}", i + 1, j + 1), move |p, k| d.entry(i, j, p, k)));
    }
    build_walker([a[0].clone(), a[1].clone(), a[2].clone()])
}

/// Deformed extension: `a_ij = −2 x_k' Γ_ij^k + Φ_ij`.
pub fn build_deformed(surface: &AffineSurface, phi: &Sym2) -> Result<MetricField> {
    check_surface_fields(&phi.iter().collect::<Vec<_>>(), "Φ")?;
    build(Data {
        surface: surface.clone(),
        phi: phi.clone(),
        t: None,
        s: None,
        x: None,
    })
}

/// Modified extension: adds `½ x_r' x_s' (T^r_i S^s_j + T^r_j S^s_i)`.
pub fn build_modified(surface: &AffineSurface, phi: &Sym2, t: &Endo, s: &Endo) -> Result<MetricField> {
    let all: Vec<&FieldRef> = phi.iter().chain(t.iter().flatten()).chain(s.iter().flatten()).collect();
    check_surface_fields(&all, "Φ, T and S")?;
    let trivial = t.iter().flatten().all(|f| f.is_zero()) || s.iter().flatten().all(|f| f.is_zero());
    build(Data {
        surface: surface.clone(),
        phi: phi.clone(),
        t: if trivial { None } else { Some(t.clone()) },
        s: if trivial { None } else { Some(s.clone()) },
        x: None,
    })
}

/// General extension: `ιX(ιId∘ιId) + ιT∘ιId + g_{D,Φ}`, i.e. the modified extension
/// with `S = Id` plus `(x_k' X^k) x_i' x_j'`.
pub fn build_general_with_x(
    surface: &AffineSurface,
    phi: &Sym2,
    t: &Endo,
    x: &[FieldRef; 2],
) -> Result<MetricField> {
    let all: Vec<&FieldRef> = phi.iter().chain(t.iter().flatten()).chain(x.iter()).collect();
    check_surface_fields(&all, "Φ, T and X")?;
    let t_trivial = t.iter().flatten().all(|f| f.is_zero());
    let x_trivial = x.iter().all(|f| f.is_zero());
    build(Data {
        surface: surface.clone(),
        phi: phi.clone(),
        t: if t_trivial { None } else { Some(t.clone()) },
        s: if t_trivial { None } else { Some(identity_endo()) },
        x: if x_trivial { None } else { Some(x.clone()) },
    })
}

/// The nilpotent family: `Γ₁₁² = u + x2·v`, `T = S` with `T∂₁ = ∂₂`,
/// `Φ = 0`; `a₁₁ = x2p² − 2 x2p (u + x2·v)`.
pub fn build_nilpotent_tt(u: FieldRef, v: FieldRef, domain: CoordBox) -> Result<(WongSurface, MetricField)> {
    let w = wong_nilpotent(u, v, domain)?;
    let t: Endo = [
        [constant(w.t[0][0], 2), constant(w.t[0][1], 2)],
        [constant(w.t[1][0], 2), constant(w.t[1][1], 2)],
    ];
    let g = build_modified(&w.surface, &zero_sym2(), &t, &t)?;
    Ok((w, g))
}

/// `f = π*f̂` on the four Walker coordinates.
pub fn pullback(f_hat: FieldRef) -> Result<FieldRef> {
    if f_hat.n_vars() != 2 {
        return Err(Error::Argument("f̂ must be a function of (x1, x2)".into()));
    }
    lift(f_hat, 4, &[0, 1])
}

#[cfg(test)]
mod tests;
