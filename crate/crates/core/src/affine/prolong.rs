//! Jet prolongation of `Hes ĥ = μ ĥ ρ_s` at a point.
//!
//! Every Taylor coefficient of a solution is a linear function of the 1-jet
//! `(ĥ, ∂₁ĥ, ∂₂ĥ)(p)`. Coefficients reachable along more than one
//! differentiation path give homogeneous constraints on that 1-jet.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::AffineSurface;
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::tensor::i2;

/// Relative singular-value cutoff for the numerical rank.
pub const RANK_REL_TOL: f64 = 1e-8;
const INDETERMINATE_BAND: (f64, f64) = (1e-10, 1e-6);

#[derive(Debug, Clone, Serialize)]
pub struct ProlongationResult {
    pub point: Vec<f64>,
    pub mu: f64,
    pub order: usize,
    pub constraint_matrix: Vec<[f64; 3]>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub dim_e: usize,
    /// Some singular-value ratio falls in the band where rounding the rank
    /// would be a guess.
    pub indeterminate: bool,
}

type Lin = [f64; 3];

fn axpy(acc: &mut Lin, s: f64, v: &Lin) {
    for i in 0..3 {
        acc[i] += s * v[i];
    }
}

fn binom(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// `∂^β(a·h_γ)` where `h_γ` is the (shifted) solution coefficient table.
fn leibniz(
    a: &Jet,
    beta: [u8; 2],
    shift: [u8; 2],
    coeffs: &HashMap<[u8; 2], Lin>,
) -> Result<Lin> {
    let mut out = [0.0; 3];
    for g0 in 0..=beta[0] {
        for g1 in 0..=beta[1] {
            let da = a.partial(&[g0, g1])?;
            if da == 0.0 {
                continue;
            }
            let c = binom(beta[0], g0) * binom(beta[1], g1);
            let key = [beta[0] - g0 + shift[0], beta[1] - g1 + shift[1]];
            let h = coeffs.get(&key).ok_or_else(|| {
                Error::Argument(format!("prolongation coefficient {key:?} not yet known"))
            })?;
            axpy(&mut out, c * da, h);
        }
    }
    Ok(out)
}

/// Dimension of the solution space of `Hes ĥ = μ ĥ ρ_s` near `point`,
/// from constraints up to `order`.
pub fn dim_e(surface: &AffineSurface, point: &[f64], mu: f64, order: usize) -> Result<ProlongationResult> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(Error::Argument(format!(
            "prolongation order must lie in [2, {MAX_ORDER}], got {order}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::Argument("μ must be finite".into()));
    }
    let geo = surface.geometry(point, (order - 1).max(1))?;
    let mut coeffs: HashMap<[u8; 2], Lin> = HashMap::new();
    coeffs.insert([0, 0], [1.0, 0.0, 0.0]);
    coeffs.insert([1, 0], [0.0, 1.0, 0.0]);
    coeffs.insert([0, 1], [0.0, 0.0, 1.0]);
    let mut rows: Vec<Lin> = Vec::new();

    for m in 2..=order as u8 {
        let mut fresh = Vec::new();
        for a in (0..=m).rev() {
            let alpha = [a, m - a];
            let mut first: Option<Lin> = None;
            for (i, j) in [(0usize, 0usize), (0, 1), (1, 1)] {
                let mut beta = alpha;
                let mut ok = true;
                for v in [i, j] {
                    if beta[v] == 0 {
                        ok = false;
                        break;
                    }
                    beta[v] -= 1;
                }
                if !ok {
                    continue;
                }
                let mut val = [0.0; 3];
                for k in 0..2 {
                    let mut shift = [0u8; 2];
                    shift[k] = 1;
                    let t = leibniz(geo.gamma_at(i, j, k), beta, shift, &coeffs)?;
                    axpy(&mut val, 1.0, &t);
                }
                let t = leibniz(&geo.rho_s[i2(2, i, j)], beta, [0, 0], &coeffs)?;
                axpy(&mut val, mu, &t);
                match &first {
                    None => first = Some(val),
                    Some(f) => rows.push([val[0] - f[0], val[1] - f[1], val[2] - f[2]]),
                }
            }
            fresh.push((alpha, first.expect("every multi-index of degree ≥ 2 decomposes")));
        }
        coeffs.extend(fresh);
    }

    let (rank, singular_values, indeterminate) = numerical_rank(&rows);
    Ok(ProlongationResult {
        point: point.to_vec(),
        mu,
        order,
        constraint_matrix: rows,
        singular_values,
        rank,
        dim_e: 3 - rank,
        indeterminate,
    })
}

fn numerical_rank(rows: &[Lin]) -> (usize, Vec<f64>, bool) {
    if rows.is_empty() {
        return (0, Vec::new(), false);
    }
    let m = DMatrix::from_fn(rows.len(), 3, |r, c| rows[r][c]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv[0];
    if smax <= 1e-12 {
        return (0, sv, false);
    }
    let rank = sv.iter().filter(|&&s| s > RANK_REL_TOL * smax).count();
    let indeterminate = sv
        .iter()
        .any(|&s| (INDETERMINATE_BAND.0..=INDETERMINATE_BAND.1).contains(&(s / smax)));
    (rank, sv, indeterminate)
}

