#![allow(dead_code)]

use fermon::fock::DenseState;
use fermon::CovarianceMatrix;
use rand_chacha::ChaCha8Rng;

pub const LN2: f64 = std::f64::consts::LN_2;

pub fn random_pair(n: usize, rng: &mut ChaCha8Rng) -> (DenseState, CovarianceMatrix) {
    fermon::validation::random_pair(n, rng).unwrap()
}

pub fn random_charge_pair(n: usize, rng: &mut ChaCha8Rng) -> (DenseState, CovarianceMatrix) {
    fermon::validation::random_charge_pair(n, rng).unwrap()
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
