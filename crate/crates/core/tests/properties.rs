//! Property tests over random states, regions and gate sequences.

mod common;

use common::random_pair;
use fermon::covariance::CovarianceMatrix;
use fermon::entanglement::{contour, entropy, mutual_information, RegionSpec};
use fermon::gates::{apply_factor, class_a_probabilities, sample_a, sample_aiii, sample_diii, ChoiCache, GateSpec, Site, Sublattice, UnitaryVariant};
use fermon::Sign;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(n: usize, seed: u64) -> CovarianceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parities: Vec<Sign> = (0..n / 2).map(|_| if rng.random() { Sign::Plus } else { Sign::Minus }).collect();
    CovarianceMatrix::random_pure_state(n, &parities, false, &mut rng).unwrap()
}

fn charge_state(cells: usize, seed: u64) -> CovarianceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parities: Vec<Sign> = (0..2 * cells).map(|x| if x % 2 == 0 { Sign::Plus } else { Sign::Minus }).collect();
    CovarianceMatrix::random_pure_state(4 * cells, &parities, true, &mut rng).unwrap()
}

/// A random region and its complement.
fn split(n: usize, seed: u64) -> (RegionSpec, RegionSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let mut ix: Vec<usize> = (0..n).collect();
    ix.shuffle(&mut rng);
    let k = rng.random_range(1..n);
    let a = RegionSpec::new(ix[..k].to_vec(), "A").unwrap();
    let b = RegionSpec::new(ix[k..].to_vec(), "B").unwrap();
    (a, b)
}

fn site(mode: usize) -> Site {
    Site::new(mode / 2, if mode % 2 == 0 { Sublattice::A } else { Sublattice::B })
}

/// Applies one random gate from any family (on whole unit cells) and returns its factors.
fn random_gate(g: &mut CovarianceMatrix, cache: &mut ChoiCache, rng: &mut ChaCha8Rng) -> Vec<GateSpec> {
    let n = g.len();
    let modes = n / 2;
    let x = rng.random_range(0..modes);
    let y = (x + rng.random_range(1..modes)) % modes;
    let (a, b) = (site(x), site(y));
    let t1 = rng.random_range(-3.0..3.0);
    let t2 = rng.random_range(-3.0..3.0);
    let alpha = rng.random_range(0.0..3.0);
    match rng.random_range(0..4) {
        0 => {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let p = rng.random();
            sample_diii(g, i, j, p, rng).unwrap().applied
        }
        1 => sample_aiii(g, cache, a, b, alpha, t1, t2, rng).unwrap().applied,
        _ => {
            let variant = [UnitaryVariant::Onsite, UnitaryVariant::Longrange, UnitaryVariant::ChiralBreaking]
                [rng.random_range(0..3)];
            sample_a(g, cache, a, b, alpha, t1, t2, variant, rng).unwrap().applied
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gates_preserve_structure_and_purity(cells in 1usize..4, seed in any::<u64>(), gates in 1usize..40) {
        let n = 4 * cells;
        let mut g = state(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut cache = ChoiCache::new();
        for _ in 0..gates {
            // Strong non-unitary gates amplify an existing purity error, so
            // each gate starts from a purified state.
            g.polish().unwrap();
            let before = g.purity_defect();
            prop_assert!(before < 1e-12);
            random_gate(&mut g, &mut cache, &mut rng);
            prop_assert_eq!(g.antisymmetry_defect(), 0.0);
            prop_assert!(g.max_singular_value() <= 1.0 + 1e-8);
            prop_assert!(g.purity_defect() <= before + 1e-8, "defect {} -> {}", before, g.purity_defect());
        }
        g.polish().unwrap();
        prop_assert!(g.purity_defect() < 1e-8);
    }

    #[test]
    fn contour_sums_to_entropy(half in 1usize..10, seed in any::<u64>()) {
        let n = 2 * half;
        let g = state(n, seed);
        let (a, _) = split(n.max(2), seed);
        let c = contour(&g, &a).unwrap();
        let s = entropy(&g, &a).unwrap();
        prop_assert!((c.total - s).abs() < 1e-8);
        prop_assert!((c.values.iter().sum::<f64>() - c.total).abs() < 1e-12);
        prop_assert!(c.values.iter().all(|&v| v >= -1e-10));
        prop_assert!(s >= 0.0 && s <= a.len() as f64 * 0.5 * std::f64::consts::LN_2 + 1e-10);
    }

    #[test]
    fn pure_state_complement_symmetry(half in 1usize..12, seed in any::<u64>()) {
        let n = 2 * half;
        let g = state(n, seed);
        let (a, b) = split(n, seed);
        prop_assert!((entropy(&g, &a).unwrap() - entropy(&g, &b).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn subadditivity_and_mutual_information_sign(half in 2usize..10, seed in any::<u64>()) {
        let n = 2 * half;
        let g = state(n, seed);
        let (a, rest) = split(n, seed);
        let k = rest.len() / 2;
        let b = RegionSpec::new(rest.indices[..k.max(1)].to_vec(), "B").unwrap();
        let u = a.union(&b).unwrap();
        let (sa, sb, sab) = (entropy(&g, &a).unwrap(), entropy(&g, &b).unwrap(), entropy(&g, &u).unwrap());
        prop_assert!(sab <= sa + sb + 1e-8);
        let i_ab = mutual_information(&g, &a, &b).unwrap();
        prop_assert!(i_ab >= -1e-8);
        prop_assert!((i_ab - mutual_information(&g, &b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rotation_inverse_is_identity(half in 1usize..12, seed in any::<u64>(), theta in -10.0f64..10.0) {
        let n = 2 * half.max(2);
        let g = state(n, seed);
        let mut h = g.clone();
        let (i, j) = ((seed % n as u64) as usize, ((seed / 7 + 1) % n as u64) as usize);
        prop_assume!(i != j);
        h.apply_rotation(i, j, theta).unwrap();
        h.apply_rotation(i, j, -theta).unwrap();
        prop_assert!((h.matrix() - g.matrix()).amax() < 1e-12);
    }

    #[test]
    fn parity_probabilities_sum_to_one(half in 1usize..10, seed in any::<u64>()) {
        let n = 2 * half.max(2);
        let g = state(n, seed);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let (pp, pm) = g.parity_probability(i, j).unwrap();
                    prop_assert_eq!(pp + pm, 1.0);
                }
            }
        }
    }

    #[test]
    fn class_a_weights_are_normalized(cells in 2usize..6, seed in any::<u64>(), alpha in 0.0f64..4.0) {
        let g = charge_state(cells, seed);
        let mut cache = ChoiCache::new();
        let (pp, pm) = class_a_probabilities(&g, &mut cache, Site::a(0), Site::b(cells - 1), alpha).unwrap();
        prop_assert!((pp + pm - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&pp));
    }

    #[test]
    fn charge_is_invariant_along_complex_class_trajectories(cells in 2usize..5, seed in any::<u64>(), aiii in any::<bool>()) {
        let mut g = charge_state(cells, seed);
        let q = g.charge();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 77);
        let mut cache = ChoiCache::new();
        for _ in 0..30 {
            let x = rng.random_range(0..2 * cells);
            let y = (x + rng.random_range(1..2 * cells)) % (2 * cells);
            let (a, b) = (site(x), site(y));
            let alpha = rng.random_range(0.0..2.5);
            let (t1, t2) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            if aiii {
                sample_aiii(&mut g, &mut cache, a, b, alpha, t1, t2, &mut rng).unwrap();
            } else {
                sample_a(&mut g, &mut cache, a, b, alpha, t1, t2, UnitaryVariant::Longrange, &mut rng).unwrap();
            }
            prop_assert!((g.charge() - q).abs() < 1e-8);
        }
    }

    #[test]
    fn unitary_factors_match_their_rotation(seed in any::<u64>(), theta in -4.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, g) = random_pair(8, &mut rng);
        let spec = GateSpec::AChiralBreakingUnitary { a: Site::a(0), b: Site::b(1), theta };
        let mut via_rotation = g.clone();
        apply_factor(&mut via_rotation, &spec, &mut ChoiCache::new()).unwrap();
        let op = fermon::fock::choi_covariance(&spec.to_dense().unwrap()).unwrap();
        let mut via_choi = g.clone();
        via_choi.contract(&op, &spec.majorana_support()).unwrap();
        prop_assert!((via_rotation.matrix() - via_choi.matrix()).amax() < 1e-10);
    }
}
