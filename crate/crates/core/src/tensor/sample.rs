use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CoordBox {
    pub fn new(ranges: &[(f64, f64)]) -> Result<CoordBox> {
        for &(a, b) in ranges {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::Config(format!("invalid coordinate range [{a}, {b}]")));
            }
        }
        Ok(CoordBox {
            lo: ranges.iter().map(|r| r.0).collect(),
            hi: ranges.iter().map(|r| r.1).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    r
}

/// `count` Halton points in `bx` with a seeded Cranley–Patterson shift.
/// Points for which `accept` returns false are skipped.
pub fn sample_points(
    bx: &CoordBox,
    count: usize,
    seed: u64,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<Vec<f64>>> {
    let d = bx.dim();
    if d == 0 || d > PRIMES.len() {
        return Err(Error::Argument(format!("cannot sample a {d}-dimensional box")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    let mut out = Vec::with_capacity(count);
    let max_tries = 64 * count.max(1) as u64;
    let mut i = 1u64;
    while out.len() < count {
        if i > max_tries {
            return Err(Error::Domain(format!(
                "only {} of {count} sample points in the box are regular",
                out.len()
            )));
        }
        let p: Vec<f64> = (0..d)
            .map(|k| {
                let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                bx.lo[k] + u * (bx.hi[k] - bx.lo[k])
            })
            .collect();
        i += 1;
        if accept(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_lie_in_box_and_are_reproducible() {
        let bx = CoordBox::new(&[(0.5, 1.5), (-1.0, 1.0), (2.0, 2.0)]).unwrap();
        let a = sample_points(&bx, 16, 42, |_| true).unwrap();
        let b = sample_points(&bx, 16, 42, |_| true).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| bx.contains(p)));
        let c = sample_points(&bx, 16, 43, |_| true).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejection_and_exhaustion() {
        let bx = CoordBox::new(&[(-1.0, 1.0)]).unwrap();
        let pos = sample_points(&bx, 8, 1, |p| p[0] > 0.0).unwrap();
        assert!(pos.iter().all(|p| p[0] > 0.0));
        assert!(sample_points(&bx, 4, 1, |_| false).is_err());
        assert!(CoordBox::new(&[(1.0, 0.0)]).is_err());
    }
}
