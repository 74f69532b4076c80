//! Hodge star on 2-forms in signature (2,2), the Λ± splitting of the Weyl
//! operator, orthonormal and null frames.
//!
//! 2-forms use the basis `dx^a∧dx^b`, `a < b`, in the order
//! (12, 13, 14, 23, 24, 34). A frame is positively oriented when
//! `orientation · det[E1 E2 E3 E4] > 0`.

use nalgebra::{DMatrix, Matrix4, Matrix6, SymmetricEigen, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::{i2, i3, i4, Geometry};

pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn levi_civita(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] == p[j] {
                return 0.0;
            }
        }
    }
    let mut s = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

fn check_dim4(g: &DMatrix<f64>) -> Result<Matrix4<f64>> {
    if g.nrows() != 4 || g.ncols() != 4 {
        return Err(Error::UnsupportedDimension(format!(
            "Hodge star needs dimension 4, got {}",
            g.nrows()
        )));
    }
    Ok(Matrix4::from_fn(|i, j| g[(i, j)]))
}

fn inverse4(g: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let det = g.determinant();
    if !(det.abs() >= 1e-12 * g.amax().powi(4).max(1e-300)) {
        return Err(Error::singular(format!("degenerate metric (det = {det:e})")));
    }
    g.try_inverse().ok_or_else(|| Error::singular("metric inversion failed"))
}

/// Matrix of `⋆` on 2-forms: column `P` holds the components of `⋆(e_P)`.
pub fn hodge_star(g: &DMatrix<f64>, orientation: f64) -> Result<Matrix6<f64>> {
    let g = check_dim4(g)?;
    let gi = inverse4(&g)?;
    let vol = orientation.signum() * g.determinant().abs().sqrt();
    let mut star = Matrix6::zeros();
    for (col, &(a, b)) in PAIRS.iter().enumerate() {
        for (row, &(e, f)) in PAIRS.iter().enumerate() {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    let eps = levi_civita(c, d, e, f);
                    if eps == 0.0 {
                        continue;
                    }
                    let up = gi[(c, a)] * gi[(d, b)] - gi[(c, b)] * gi[(d, a)];
                    s += 0.5 * up * eps;
                }
            }
            star[(row, col)] = vol * s;
        }
    }
    Ok(star)
}

/// `⋆` with its eigenprojectors `½(I ± ⋆)`.
#[derive(Debug, Clone)]
pub struct TwoFormPack {
    pub star: Matrix6<f64>,
    pub proj_plus: Matrix6<f64>,
    pub proj_minus: Matrix6<f64>,
}

pub fn two_form_pack(g: &DMatrix<f64>, orientation: f64) -> Result<TwoFormPack> {
    let star = hodge_star(g, orientation)?;
    let id = Matrix6::identity();
    Ok(TwoFormPack {
        star,
        proj_plus: (id + star) * 0.5,
        proj_minus: (id - star) * 0.5,
    })
}

/// Components of the 2-form `α∧β` for 1-forms `α`, `β`.
pub fn wedge(alpha: &Vector4<f64>, beta: &Vector4<f64>) -> nalgebra::Vector6<f64> {
    nalgebra::Vector6::from_fn(|k, _| {
        let (a, b) = PAIRS[k];
        alpha[a] * beta[b] - alpha[b] * beta[a]
    })
}

/// The Weyl tensor as an operator on 2-forms, `M[(a,b),(p,q)] = W_ab^pq`.
pub fn weyl_operator(geo: &Geometry, w: &[Jet]) -> Result<Matrix6<f64>> {
    if geo.n != 4 {
        return Err(Error::UnsupportedDimension(format!(
            "Weyl operator needs dimension 4, got {}",
            geo.n
        )));
    }
    let gi = |a: usize, b: usize| geo.ginv_at(a, b).value();
    let mut m = Matrix6::zeros();
    for (row, &(a, b)) in PAIRS.iter().enumerate() {
        for (col, &(p, q)) in PAIRS.iter().enumerate() {
            let mut s = 0.0;
            for c in 0..4 {
                for d in 0..4 {
                    s += gi(p, c) * gi(q, d) * w[i4(4, a, b, c, d)].value();
                }
            }
            m[(row, col)] = s;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeylBlocks {
    pub w_plus_norm: f64,
    pub w_minus_norm: f64,
    #[serde(skip)]
    pub operator: Matrix6<f64>,
}

/// Frobenius norms of `P± W P±`.
pub fn weyl_blocks(geo: &Geometry, orientation: f64) -> Result<WeylBlocks> {
    let w = geo.weyl()?;
    weyl_blocks_with(geo, &w, orientation)
}

pub fn weyl_blocks_with(geo: &Geometry, w: &[Jet], orientation: f64) -> Result<WeylBlocks> {
    let op = weyl_operator(geo, w)?;
    let g = values(geo);
    let pack = two_form_pack(&g, orientation)?;
    let plus = pack.proj_plus * op * pack.proj_plus;
    let minus = pack.proj_minus * op * pack.proj_minus;
    Ok(WeylBlocks {
        w_plus_norm: plus.norm(),
        w_minus_norm: minus.norm(),
        operator: op,
    })
}

/// Metric values at the geometry's base point.
pub fn values(geo: &Geometry) -> DMatrix<f64> {
    DMatrix::from_fn(geo.n, geo.n, |i, j| geo.g_at(i, j).value())
}

pub const FRAME_SIGNS: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];

fn gram(g: &DMatrix<f64>, frame: &[Vector4<f64>; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += frame[i][a] * g[(a, b)] * frame[j][b];
            }
        }
        s
    })
}

/// Largest deviation of the frame's Gram matrix from diag(−1, 1, −1, 1).
pub fn orthonormality_defect(g: &DMatrix<f64>, frame: &[Vector4<f64>; 4]) -> f64 {
    let gr = gram(g, frame);
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { FRAME_SIGNS[i] } else { 0.0 };
            m = m.max((gr[(i, j)] - want).abs());
        }
    }
    m
}

pub fn frame_orientation(frame: &[Vector4<f64>; 4]) -> f64 {
    Matrix4::from_columns(frame).determinant().signum()
}

/// Orthonormal frame with signs (−, +, −, +) from the eigenvectors of `g`.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<[Vector4<f64>; 4]> {
    let g4 = check_dim4(g)?;
    let eig = SymmetricEigen::new(g4);
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for k in 0..4 {
        let lam = eig.eigenvalues[k];
        let mut v: Vector4<f64> = eig.eigenvectors.column(k).into();
        // deterministic sign and tie-break key: largest-magnitude component
        let (imax, _) = v.iter().enumerate().fold((0, -1.0), |(bi, bv), (i, x)| {
            if x.abs() > bv + 1e-12 {
                (i, x.abs())
            } else {
                (bi, bv)
            }
        });
        if v[imax] < 0.0 {
            v = -v;
        }
        if lam.abs() < 1e-12 * eig.eigenvalues.amax().max(1e-300) {
            return Err(Error::singular("degenerate metric in frame construction"));
        }
        let e = v / lam.abs().sqrt();
        if lam < 0.0 {
            neg.push((imax, e));
        } else {
            pos.push((imax, e));
        }
    }
    if neg.len() != 2 || pos.len() != 2 {
        return Err(Error::Precondition(format!(
            "metric signature is ({}, {}), not (2, 2)",
            neg.len(),
            pos.len()
        )));
    }
    neg.sort_by_key(|x| x.0);
    pos.sort_by_key(|x| x.0);
    Ok([neg[0].1, pos[0].1, neg[1].1, pos[1].1])
}

/// Flips `E4` when needed so the frame has the requested orientation sign.
pub fn orient_frame(mut frame: [Vector4<f64>; 4], orientation: f64) -> [Vector4<f64>; 4] {
    if orientation * frame_orientation(&frame) < 0.0 {
        frame[3] = -frame[3];
    }
    frame
}

/// Self-duality residual of a frame:
/// `max |W(E1,Ei,X,Y) − sign·σ_ijk ε_j ε_k W(Ej,Ek,X,Y)|` over cyclic
/// `(i,j,k)` of (2,3,4) and coordinate `X`, `Y`. With `sign = +1` this
/// vanishes exactly for self-dual metrics, with `sign = −1` for
/// anti-self-dual ones. The frame must be positively oriented.
pub fn frame_self_duality_check(
    geo: &Geometry,
    w: &[Jet],
    frame: &[Vector4<f64>; 4],
    sign: f64,
) -> Result<f64> {
    let g = values(geo);
    let defect = orthonormality_defect(&g, frame);
    if defect > 1e-8 {
        return Err(Error::Argument(format!(
            "frame is not orthonormal (Gram defect {defect:e})"
        )));
    }
    let wv = |a: &Vector4<f64>, b: &Vector4<f64>, x: usize, y: usize| {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                s += a[p] * b[q] * w[i4(4, p, q, x, y)].value();
            }
        }
        s
    };
    let mut worst = 0.0f64;
    for &(i, j, k) in &[(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
        let c = sign * FRAME_SIGNS[j] * FRAME_SIGNS[k];
        for x in 0..4 {
            for y in 0..4 {
                let r = wv(&frame[0], &frame[i], x, y) - c * wv(&frame[j], &frame[k], x, y);
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// Hyperbolic frame `(N = ∇f, U, V, T)` with `g(N,V) = g(U,T) = 1` and all
/// other pairings zero, carried as jets so it can be differentiated.
#[derive(Debug, Clone)]
pub struct NullFrame {
    pub n: Vec<Jet>,
    pub u: Vec<Jet>,
    pub v: Vec<Jet>,
    pub t: Vec<Jet>,
}

impl NullFrame {
    pub fn vectors(&self) -> [&Vec<Jet>; 4] {
        [&self.n, &self.u, &self.v, &self.t]
    }

    pub fn values(&self) -> [Vector4<f64>; 4] {
        let f = |v: &Vec<Jet>| Vector4::from_fn(|i, _| v[i].value());
        [f(&self.n), f(&self.u), f(&self.v), f(&self.t)]
    }

    /// Orthonormal frame `E1 = (N − V)/√2, E2 = (N + V)/√2,
    /// E3 = (T − U)/√2, E4 = (T + U)/√2`.
    pub fn orthonormal(&self) -> [Vector4<f64>; 4] {
        let [n, u, v, t] = self.values();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [(n - v) * r, (n + v) * r, (t - u) * r, (t + u) * r]
    }
}

fn gdot(geo: &Geometry, a: &[Jet], b: &[Jet]) -> Jet {
    let n = geo.n;
    let o = a[0].order().min(b[0].order());
    let mut s = Jet::constant(0.0, n, o).expect("shape");
    for i in 0..n {
        for j in 0..n {
            s = &s + &(&(&geo.g[i2(n, i, j)] * &a[i]) * &b[j]);
        }
    }
    s
}

fn axpy(a: &Jet, x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    x.iter().zip(y).map(|(xi, yi)| &(a * xi) + yi).collect()
}

/// Builds the null frame from an isotropic gradient.
///
/// The frame is chosen so that the associated orthonormal frame has
/// orientation sign `orientation` (`+1` for the self-dual normalisation,
/// `−1` when working with the reversed orientation).
pub fn null_frame_from_gradient(geo: &Geometry, f: &Jet, orientation: f64) -> Result<NullFrame> {
    let n = geo.n;
    if n != 4 {
        return Err(Error::UnsupportedDimension("null frame needs dimension 4".into()));
    }
    let grad = geo.gradient(f);
    let gmax = geo.gmax();
    let gnorm = grad.iter().fold(0.0f64, |a, x| a.max(x.value().abs()));
    if gnorm <= 1e-10 {
        return Err(Error::Precondition("gradient vanishes at the point".into()));
    }
    let nn = geo.grad_norm_sq(f);
    if nn.value().abs() > 1e-9 * (1.0 + gmax) * (1.0 + gnorm * gnorm) {
        return Err(Error::Precondition(format!(
            "gradient is not null (‖∇f‖² = {:e})",
            nn.value()
        )));
    }
    let o = grad[0].order();
    let basis = |w: usize| -> Vec<Jet> {
        (0..n)
            .map(|i| Jet::constant(if i == w { 1.0 } else { 0.0 }, n, o).expect("shape"))
            .collect()
    };
    // V from the coordinate vector pairing most strongly with N
    let df: Vec<Jet> = (0..n).map(|i| f.derivative(i).truncate(o)).collect();
    let w = (0..n)
        .max_by(|&a, &b| df[a].value().abs().total_cmp(&df[b].value().abs()))
        .expect("n > 0");
    let ew = basis(w);
    let c = df[w].clone();
    let cinv = c.recip()?;
    let gww = geo.g[i2(n, w, w)].truncate(o);
    let coef = -&(&gww * &(&cinv * &cinv)).scale(0.5);
    // V = (e_w − ½ g_ww / c · N) / c
    let v: Vec<Jet> = axpy(&(&coef * &c), &grad, &ew)
        .iter()
        .map(|x| x * &cinv)
        .collect();

    let project = |e: &[Jet]| -> Vec<Jet> {
        let ev = gdot(geo, e, &v);
        let en = gdot(geo, e, &grad);
        let a = axpy(&(-&ev), &grad, e);
        axpy(&(-&en), &v, &a)
    };
    let mut cands: Vec<Vec<Jet>> = (0..n).map(|i| project(&basis(i))).collect();
    for i in 0..n {
        for j in i + 1..n {
            let s: Vec<Jet> = basis(i).iter().zip(&basis(j)).map(|(a, b)| a + b).collect();
            cands.push(project(&s));
        }
    }
    let norm_of = |x: &[Jet]| gdot(geo, x, x);
    let normalize = |x: &[Jet]| -> Result<(Vec<Jet>, f64)> {
        let q = norm_of(x);
        let s = q.value().signum();
        let r = q.scale(s).sqrt()?.recip()?;
        Ok((x.iter().map(|c| c * &r).collect(), s))
    };
    let pick = |cs: &[Vec<Jet>]| {
        cs.iter()
            .max_by(|a, b| norm_of(a).value().abs().total_cmp(&norm_of(b).value().abs()))
            .cloned()
            .expect("candidates")
    };
    let first = pick(&cands);
    if norm_of(&first).value().abs() < 1e-10 {
        return Err(Error::Precondition("could not complete the null frame".into()));
    }
    let (e1, s1) = normalize(&first)?;
    let rest: Vec<Vec<Jet>> = cands
        .iter()
        .map(|x| {
            let d = gdot(geo, x, &e1).scale(s1);
            axpy(&(-&d), &e1, x)
        })
        .collect();
    let second = pick(&rest);
    if norm_of(&second).value().abs() < 1e-10 {
        return Err(Error::Precondition("could not complete the null frame".into()));
    }
    let (e2, s2) = normalize(&second)?;
    if s1 == s2 {
        return Err(Error::Precondition("metric signature is not (2, 2)".into()));
    }
    let (eminus, eplus) = if s1 < 0.0 { (e1, e2) } else { (e2, e1) };
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut u: Vec<Jet> = eplus.iter().zip(&eminus).map(|(p, m)| (p - m).scale(r)).collect();
    let mut t: Vec<Jet> = eplus.iter().zip(&eminus).map(|(p, m)| (p + m).scale(r)).collect();
    let mut frame = NullFrame {
        n: grad,
        u: u.clone(),
        v,
        t: t.clone(),
    };
    if frame_orientation(&frame.orthonormal()) * orientation < 0.0 {
        std::mem::swap(&mut u, &mut t);
        frame.u = u;
        frame.t = t;
    }
    Ok(frame)
}

/// `(∇_X Y)^m = X^a (∂_a Y^m + Γ_ak^m Y^k)` for a jet-valued `Y`.
pub fn covariant_derivative_vector(geo: &Geometry, x: &Vector4<f64>, y: &[Jet]) -> Vec<f64> {
    let n = geo.n;
    (0..n)
        .map(|m| {
            let mut s = 0.0;
            for a in 0..n {
                let mut inner = y[m].derivative(a).value();
                for k in 0..n {
                    inner += geo.gamma[i3(n, a, k, m)].value() * y[k].value();
                }
                s += x[a] * inner;
            }
            s
        })
        .collect()
}

/// `g(a, b)` for plain vectors at the base point.
pub fn gval(geo: &Geometry, a: &[f64], b: &[f64]) -> f64 {
    let n = geo.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * geo.g_at(i, j).value() * b[j];
        }
    }
    s
}
