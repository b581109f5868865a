mod common;

use common::{assert_close, random_pair, LN2};
use fermon::covariance::CovarianceMatrix;
use fermon::entanglement::{binary_entropy, contour, entropy, mutual_information, RegionSpec};
use fermon::experiments::with_reference;
use fermon::fock::{dense_entropy, dense_from_dimers};
use fermon::{Error, Sign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn region(ix: &[usize]) -> RegionSpec {
    RegionSpec::new(ix.to_vec(), "r").unwrap()
}

fn chain(n: usize) -> CovarianceMatrix {
    CovarianceMatrix::product_state(&vec![Sign::Plus; n / 2])
}

#[test]
fn binary_entropy_limits() {
    assert_eq!(binary_entropy(1.0), 0.0);
    assert_close(binary_entropy(0.0), LN2, 1e-15, "h(0)");
    assert_eq!(binary_entropy(-0.3), binary_entropy(0.3));
}

#[test]
fn dimer_entropies() {
    let g = chain(8);
    assert_eq!(entropy(&g, &region(&[2, 3])).unwrap(), 0.0);
    assert_close(entropy(&g, &region(&[3])).unwrap(), 0.5 * LN2, 1e-12, "one cut Majorana");
    assert_close(entropy(&g, &region(&[1, 2])).unwrap(), LN2, 1e-12, "two cut dimers");
    assert_close(entropy(&g, &region(&[1, 2, 3, 4])).unwrap(), LN2, 1e-12, "contiguous block");
    let dense = dense_from_dimers(&[(0, 1, Sign::Plus), (2, 3, Sign::Plus)], 4).unwrap();
    assert_close(dense_entropy(&dense, &[1, 2]).unwrap(), LN2, 1e-12, "oracle");
}

#[test]
fn cut_dimer_contour_sits_on_the_inside_majorana() {
    let g = chain(6);
    let c = contour(&g, &region(&[1, 2, 3])).unwrap();
    assert_close(c.values[0], 0.5 * LN2, 1e-12, "m inside");
    assert_close(c.values[1], 0.0, 1e-12, "uncut dimer");
    assert_close(c.values[2], 0.0, 1e-12, "uncut dimer");
    assert_close(c.total, 0.5 * LN2, 1e-12, "total");
    assert_close(c.window_sum([0, 1]), 0.5 * LN2, 1e-12, "window");
}

#[test]
fn reference_construction_is_maximally_entangled() {
    let (g, regions) = with_reference(128).unwrap();
    assert_close(entropy(&g, &regions.physical).unwrap(), 64.0 * LN2, 1e-9, "S_p");
    assert_close(entropy(&g, &regions.reference).unwrap(), 64.0 * LN2, 1e-9, "S_ref");
    let c = contour(&g, &regions.physical).unwrap();
    assert!(c.values.iter().all(|&v| (v - 0.5 * LN2).abs() < 1e-10));
    assert!(with_reference(7).is_err());
}

#[test]
fn mutual_information_examples() {
    let g = chain(8);
    assert_close(mutual_information(&g, &region(&[0, 1]), &region(&[4, 5])).unwrap(), 0.0, 1e-12, "product");
    let a = region(&[0, 2]);
    let b = region(&[1, 3]);
    assert_close(mutual_information(&g, &a, &b).unwrap(), 2.0 * LN2, 1e-12, "straddling dimers");
    assert_eq!(
        mutual_information(&g, &a, &b).unwrap(),
        mutual_information(&g, &b, &a).unwrap()
    );
    assert!(matches!(
        mutual_information(&g, &a, &region(&[2, 5])),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn straddling_mutual_information_matches_the_oracle() {
    let pairs = [(0, 4, Sign::Plus), (1, 5, Sign::Minus), (2, 6, Sign::Plus), (3, 7, Sign::Plus)];
    let dense = dense_from_dimers(&pairs, 8).unwrap();
    let g = CovarianceMatrix::from_dimers(&pairs, 8).unwrap();
    let (a, b) = ([0, 1], [4, 5]);
    let oracle = dense_entropy(&dense, &a).unwrap() + dense_entropy(&dense, &b).unwrap()
        - dense_entropy(&dense, &[0, 1, 4, 5]).unwrap();
    let mi = mutual_information(&g, &region(&a), &region(&b)).unwrap();
    assert_close(mi, oracle, 1e-10, "MI");
    assert_close(mi, 2.0 * LN2, 1e-10, "value");
}

#[test]
fn region_validation() {
    assert!(RegionSpec::new(vec![1, 2, 1], "dup").is_err());
    let g = chain(4);
    assert!(entropy(&g, &region(&[0, 4])).is_err());
    let wrap = RegionSpec::contiguous(6, 4, 8, "w").unwrap();
    assert_eq!(wrap.indices, vec![6, 7, 0, 1]);
    assert!(RegionSpec::contiguous(0, 9, 8, "x").is_err());
    assert_eq!(entropy(&g, &region(&[])).unwrap(), 0.0);
}

#[test]
fn entropies_match_the_oracle_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (dense, g) = random_pair(12, &mut rng);
    for r in [vec![0], vec![0, 1, 2], vec![3, 7, 11, 1], vec![2, 4, 6, 8, 10]] {
        let got = entropy(&g, &region(&r)).unwrap();
        assert_close(got, dense_entropy(&dense, &r).unwrap(), 1e-8, "entropy");
        assert_close(contour(&g, &region(&r)).unwrap().total, got, 1e-8, "contour total");
    }
}

#[test]
fn mixed_restriction_out_of_range_is_rejected() {
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.3, -1.3, 0.0]);
    let g = CovarianceMatrix::from_matrix(m).unwrap();
    assert!(matches!(entropy(&g, &region(&[0, 1])), Err(Error::InvariantViolation(_))));
}
