//! A rank-one Type A model found by a seeded search and stored as a surface
//! file, so the eigenspace table can be checked on a fixed instance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qeforge_core::affine::models::{type_a, type_a_predicted_dim, Constants};
use qeforge_core::affine::{affine_ricci, dim_e, GAMMA_KEYS};
use qeforge_core::loaders::surface_from_json;
use qeforge_core::tensor::CoordBox;

const FIXTURE: &str = include_str!("fixtures/type_a_rank1.json");

/// First instance with a rank-one Ricci tensor among sparse integer
/// Christoffel tables drawn from ChaCha8 with seed 7.
fn search() -> Constants {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let domain = CoordBox::new(&[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
    loop {
        let c: Constants = std::array::from_fn(|_| if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(-2..=2) as f64 });
        let s = type_a(c, domain.clone()).unwrap();
        if affine_ricci(&s, &[0.0, 0.0]).unwrap().rank_s == 1 {
            return c;
        }
    }
}

#[test]
fn fixture_is_the_search_result() {
    let s = surface_from_json(FIXTURE).unwrap();
    let found = search();
    for (i, key) in GAMMA_KEYS.iter().enumerate() {
        let (a, b, c) = (key.as_bytes()[0] - b'1', key.as_bytes()[1] - b'1', key.as_bytes()[3] - b'1');
        let v = s.gamma_field(a as usize, b as usize, c as usize).eval_jet(&[0.0, 0.0], 0).unwrap().value();
        assert_eq!(v, found[i], "{key}");
    }
}

#[test]
fn fixture_eigenspaces() {
    let s = surface_from_json(FIXTURE).unwrap();
    let p = [0.2, -0.3];
    assert_eq!(affine_ricci(&s, &p).unwrap().rank_s, 1);
    for mu in [-1.0, 0.31, 1.7, -0.5] {
        let got = dim_e(&s, &p, mu, 4).unwrap().dim_e;
        assert_eq!(Some(got), type_a_predicted_dim(1, mu), "mu = {mu}");
    }
}
