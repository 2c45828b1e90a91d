mod common;

use common::minimal_displacement;
use degenlab::sl2c::{classify, translation_length, Classification, Mobius};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_unimodular(rng: &mut impl Rng) -> Mobius {
    let mut c = || Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    Mobius::new(c(), c(), c(), c()).normalized().unwrap()
}

#[test]
fn translation_length_is_minimal_displacement() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 60 {
        let m = random_unimodular(&mut rng);
        if classify(&m) != Classification::Loxodromic || translation_length(&m) < 0.05 {
            continue;
        }
        let oracle = minimal_displacement(&m);
        let l = translation_length(&m);
        assert!((oracle - l).abs() < 1e-6 * l.max(1.0), "{l} vs {oracle}");
        checked += 1;
    }
}

#[test]
fn elliptic_elements_fix_a_point() {
    let m = Mobius::diag(Complex64::from_polar(1.0, 0.4));
    assert!(minimal_displacement(&m) < 1e-6);
    assert_eq!(translation_length(&m), 0.0);
}

proptest! {
    #[test]
    fn trace_sandwich(re in prop::array::uniform4(-3.0f64..3.0), im in prop::array::uniform4(-3.0f64..3.0)) {
        let c = |i: usize| Complex64::new(re[i], im[i]);
        let Ok(m) = Mobius::new(c(0), c(1), c(2), c(3)).normalized() else { return Ok(()) };
        prop_assume!(classify(&m) == Classification::Loxodromic);
        let l = translation_length(&m);
        let tr = m.trace().norm();
        prop_assert!(2.0 * (l / 2.0).sinh() <= tr + 1e-9);
        prop_assert!(tr <= 2.0 * (l / 2.0).cosh() + 1e-9);
    }
}
