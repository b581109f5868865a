//! Covariance engine: initialization, contraction, rotations, measurements,
//! purification, charge and serialization.

mod common;

use common::{assert_close, max_abs_diff, random_charge_pair, random_pair};
use fermon::covariance::CovarianceMatrix;
use fermon::experiments::{run_trajectory, Circuit, Probes, RunOptions};
use fermon::fock::{
    choi_covariance, dense_apply, dense_covariance, majorana_operator, DenseGate, DenseState, C64,
};
use fermon::gates::{
    alpha_from_tanh_sq, alpha_max, apply_factor, sample_a, sample_diii, ChoiCache, GateSpec, Site,
    UnitaryVariant,
};
use fermon::schedules::{DiiiProgram, Geometry};
use fermon::{Error, Sign};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: Sign = Sign::Plus;
const M: Sign = Sign::Minus;

fn dimers(pairs: &[(usize, usize)], n: usize) -> CovarianceMatrix {
    let p: Vec<_> = pairs.iter().map(|&(a, b)| (a, b, P)).collect();
    CovarianceMatrix::from_dimers(&p, n).unwrap()
}

#[test]
fn product_state_is_block_diagonal() {
    let g = CovarianceMatrix::product_state(&[P, P]);
    let want = DMatrix::from_row_slice(
        4,
        4,
        &[0., 1., 0., 0., -1., 0., 0., 0., 0., 0., 0., 1., 0., 0., -1., 0.],
    );
    assert_eq!(g.matrix(), &want);
}

#[test]
fn random_pure_states_are_pure() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CovarianceMatrix::random_pure_state(64, &[P; 32], false, &mut rng).unwrap();
        assert!(g.purity_defect() < 1e-10, "defect {}", g.purity_defect());
        assert_eq!(g.antisymmetry_defect(), 0.0);
    }
}

#[test]
fn charge_conserving_initialization_sits_at_half_filling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = CovarianceMatrix::random_pure_state(8, &[P, M, P, M], true, &mut rng).unwrap();
    assert_close(g.charge(), 2.0, 1e-10, "charge");
    assert!(g.purity_defect() < 1e-10);
    // The covariance has no pairing terms: ⟨c_x c_y⟩ = 0 for all modes.
    let m = g.matrix();
    for x in 0..4 {
        for y in 0..4 {
            let (a0, a1, b0, b1) = (2 * x, 2 * x + 1, 2 * y, 2 * y + 1);
            assert!((m[(a0, b0)] - m[(a1, b1)]).abs() < 1e-10);
            assert!((m[(a0, b1)] + m[(a1, b0)]).abs() < 1e-10);
        }
    }
}

#[test]
fn initialization_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        CovarianceMatrix::random_pure_state(5, &[P, P], false, &mut rng),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        CovarianceMatrix::random_pure_state(8, &[P, P, P, M], true, &mut rng),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        CovarianceMatrix::random_pure_state(8, &[P, P], false, &mut rng),
        Err(Error::InvalidInput(_))
    ));
    assert!(CovarianceMatrix::from_matrix(DMatrix::identity(4, 4)).is_err());
    assert!(CovarianceMatrix::from_dimers(&[(0, 1, P), (1, 2, P)], 4).is_err());
}

#[test]
fn identity_gate_leaves_the_state_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (_, g) = random_pair(12, &mut rng);
    let id2 = choi_covariance(&DenseGate::rotation(0, 1, 0.0).unwrap()).unwrap();
    let id4 = choi_covariance(
        &GateSpec::ALongrangeUnitary {
            a: Site::a(0),
            b: Site::a(1),
            theta: 0.0,
        }
        .to_dense()
        .unwrap(),
    )
    .unwrap();
    for (op, support) in [(&id2, vec![3, 8]), (&id4, vec![0, 5, 9, 2])] {
        let mut h = g.clone();
        h.contract(op, &support).unwrap();
        assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-12);
    }
}

#[test]
fn rotation_matches_contraction_and_oracle() {
    let theta = std::f64::consts::PI / 8.0;
    let gate = DenseGate::rotation(1, 2, theta).unwrap();
    let dense = fermon::fock::dense_from_dimers(&[(0, 1, P), (2, 3, P)], 4).unwrap();
    let oracle = dense_covariance(&dense_apply(&gate, &dense).unwrap().0);

    let mut rotated = dimers(&[(0, 1), (2, 3)], 4);
    rotated.apply_rotation(1, 2, theta).unwrap();
    let mut contracted = dimers(&[(0, 1), (2, 3)], 4);
    contracted.contract(&choi_covariance(&gate).unwrap(), &[1, 2]).unwrap();

    assert!(max_abs_diff(rotated.matrix(), oracle.matrix()) < 1e-12);
    assert!(max_abs_diff(contracted.matrix(), rotated.matrix()) < 1e-10);
    // Conjugation by exp(θγ1γ2) sends γ1 to cos 2θ γ1 − sin 2θ γ2.
    let (s, c) = (2.0 * theta).sin_cos();
    assert_close(rotated.get(0, 1), c, 1e-14, "Γ01");
    assert_close(rotated.get(0, 2), -s, 1e-14, "Γ02");
}

#[test]
fn rotation_periodicity_and_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, g) = random_pair(10, &mut rng);
    let mut h = g.clone();
    h.apply_rotation(2, 7, 0.0).unwrap();
    assert_eq!(h.matrix(), g.matrix());
    h.apply_rotation(2, 7, std::f64::consts::PI).unwrap();
    assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-12);
    h.apply_rotation(4, 1, 0.77).unwrap();
    h.apply_rotation(4, 1, -0.77).unwrap();
    assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-12);
    assert!(h.apply_rotation(3, 3, 0.1).is_err());
}

#[test]
fn local_contraction_agrees_with_full_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (_, g) = random_pair(12, &mut rng);
    let mut cache = ChoiCache::new();
    let spec = GateSpec::AWeak {
        a: Site::a(0),
        b: Site::b(2),
        alpha: 0.9,
        sign: M,
    };
    let op = cache.get(&spec).unwrap().clone();
    let support = spec.majorana_support();
    let full = g.contract_dense_reference(&op, &support).unwrap();
    let mut local = g.clone();
    local.contract(&op, &support).unwrap();
    assert!(max_abs_diff(local.matrix(), full.matrix()) < 1e-10);
}

#[test]
fn parity_probability_examples() {
    let g = dimers(&[(0, 1), (2, 3)], 4);
    assert_eq!(g.parity_probability(0, 1).unwrap(), (1.0, 0.0));
    assert_eq!(g.parity_probability(1, 0).unwrap(), (0.0, 1.0));
    assert_eq!(g.parity_probability(0, 2).unwrap(), (0.5, 0.5));
    assert!(g.parity_probability(0, 0).is_err());
    let bad = CovarianceMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0., 1.5, -1.5, 0.])).unwrap();
    assert!(matches!(bad.parity_probability(0, 1), Err(Error::InvariantViolation(_))));
}

#[test]
fn born_frequencies_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (dense, g) = random_pair(8, &mut rng);
    let cases = [(0usize, 1usize), (2, 5)];
    let crossed = dimers(&[(0, 2), (1, 3)], 4);
    let dense_crossed = fermon::fock::dense_from_dimers(&[(0, 2, P), (1, 3, P)], 4).unwrap();
    let runs = 10_000;
    let mut check = |state: &CovarianceMatrix, d: &DenseState, i: usize, j: usize| {
        let proj = DenseGate::parity_projector(i, j, P).unwrap();
        let p = dense_apply(&proj, d).map(|(_, w)| w).unwrap_or(0.0);
        let mut hits = 0;
        for _ in 0..runs {
            let mut s = state.clone();
            let out = sample_diii(&mut s, i, j, 1.0, &mut rng).unwrap();
            if s.get(i, j) > 0.0 {
                hits += 1;
            }
            assert_eq!(out.draws, 2);
        }
        let freq = hits as f64 / runs as f64;
        let sigma = (p * (1.0 - p) / runs as f64).sqrt();
        assert!((freq - p).abs() <= 3.0 * sigma, "freq {freq} vs {p} (σ {sigma})");
    };
    check(&crossed, &dense_crossed, 0, 1);
    for (i, j) in cases {
        check(&g, &dense, i, j);
    }
}

#[test]
fn projective_examples() {
    let mut g = dimers(&[(0, 1), (2, 3)], 4);
    let before = g.clone();
    g.project_parity(0, 1, P).unwrap();
    assert_eq!(g, before);

    g.project_parity(1, 2, P).unwrap();
    assert_eq!(g.get(1, 2), 1.0);
    assert_close(g.get(0, 3), 1.0, 1e-14, "partner pair");
    assert!(g.purity_defect() < 1e-12);
    let dense = fermon::fock::dense_from_dimers(&[(0, 1, P), (2, 3, P)], 4).unwrap();
    let (after, _) = dense_apply(&DenseGate::parity_projector(1, 2, P).unwrap(), &dense).unwrap();
    assert!(max_abs_diff(dense_covariance(&after).matrix(), g.matrix()) < 1e-12);

    let once = g.clone();
    g.project_parity(1, 2, P).unwrap();
    assert_eq!(g, once);
    assert!(matches!(
        g.project_parity(1, 2, M),
        Err(Error::AnnihilatedTrajectory { .. })
    ));
}

#[test]
fn projection_matches_oracle_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let (dense, mut g) = random_pair(10, &mut rng);
        let i = rng.random_range(0..10);
        let j = (i + rng.random_range(1..10)) % 10;
        let s = if rng.random::<bool>() { P } else { M };
        g.project_parity(i, j, s).unwrap();
        let (after, _) = dense_apply(&DenseGate::parity_projector(i, j, s).unwrap(), &dense).unwrap();
        assert!(max_abs_diff(dense_covariance(&after).matrix(), g.matrix()) < 1e-10);
        assert!(g.purity_defect() < 1e-10);
    }
}

fn aiii_weights(state: &CovarianceMatrix, cache: &mut ChoiCache, a: Site, b: Site, alpha: f64) -> Vec<f64> {
    let mut out = vec![];
    for s_plus in [P, M] {
        for s_minus in [P, M] {
            let spec = GateSpec::AiiiWeak {
                a,
                b,
                alpha,
                s_plus,
                s_minus,
            };
            let op = cache.get(&spec).unwrap();
            out.push(state.born_weight(op, &spec.majorana_support()).unwrap());
        }
    }
    out
}

#[test]
fn zero_strength_measurement_is_trivial() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (_, g) = random_charge_pair(8, &mut rng);
    let mut cache = ChoiCache::new();
    let (a, b) = (Site::a(0), Site::b(1));
    let w = aiii_weights(&g, &mut cache, a, b, 0.0);
    for x in &w {
        assert_close(*x, 0.25, 1e-12, "branch weight");
    }
    let mut h = g.clone();
    let spec = GateSpec::AWeak { a, b, alpha: 0.0, sign: P };
    let wa = apply_factor(&mut h, &spec, &mut cache).unwrap();
    assert_close(wa, 0.25, 1e-12, "class-A weight");
    assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-12);
}

#[test]
fn aiii_branch_weights_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, g) = random_charge_pair(12, &mut rng);
    let mut cache = ChoiCache::new();
    for alpha in [0.1, 0.8, 2.5] {
        let w: f64 = aiii_weights(&g, &mut cache, Site::b(0), Site::a(2), alpha).iter().sum();
        assert_close(w, 1.0, 1e-12, "AIII total");
    }
}

#[test]
fn uncorrelated_half_filled_modes_have_equal_sign_weights() {
    // Modes (0,A) and (1,B) are each maximally entangled with a spectator.
    let g = dimers(&[(0, 2), (1, 3), (6, 4), (7, 5)], 8);
    let mut cache = ChoiCache::new();
    let (a, b) = (Site::a(0), Site::b(1));
    let alpha = alpha_from_tanh_sq(0.96);
    let w: Vec<f64> = [P, M]
        .into_iter()
        .map(|sign| {
            let spec = GateSpec::AWeak { a, b, alpha, sign };
            g.born_weight(cache.get(&spec).unwrap(), &spec.majorana_support()).unwrap()
        })
        .collect();
    assert_close(w[0], w[1], 1e-12, "s=± weights");
}

/// `⟨c_a† c_b + h.c.⟩ = (Γ_{a1,b0} − Γ_{a0,b1})/2`.
fn hopping_expectation(g: &CovarianceMatrix, a: Site, b: Site) -> f64 {
    let [a0, a1] = a.majoranas();
    let [b0, b1] = b.majoranas();
    0.5 * (g.get(a1, b0) - g.get(a0, b1))
}

fn dense_hopping(state: &DenseState, a: Site, b: Site) -> f64 {
    let n = state.num_majoranas();
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    let lower = |s: Site| {
        let [m0, m1] = s.majoranas();
        (majorana_operator(m0, n) - majorana_operator(m1, n) * i) * half
    };
    let (ca, cb) = (lower(a), lower(b));
    let h = ca.adjoint() * &cb + cb.adjoint() * &ca;
    state.expectation(&h).re
}

#[test]
fn strong_measurement_selects_the_hopping_eigenstate() {
    let (a, b) = (Site::a(0), Site::b(0));
    let g = CovarianceMatrix::product_state(&[M, P]);
    let dense = fermon::fock::dense_from_dimers(&[(0, 1, M), (2, 3, P)], 4).unwrap();
    let mut cache = ChoiCache::new();
    for sign in [P, M] {
        let spec = GateSpec::AWeak {
            a,
            b,
            alpha: alpha_max(),
            sign,
        };
        let mut h = g.clone();
        let w = apply_factor(&mut h, &spec, &mut cache).unwrap();
        let (after, dw) = dense_apply(&spec.to_dense().unwrap(), &dense).unwrap();
        assert_close(w, dw, 1e-8, "Born weight");
        let e = hopping_expectation(&h, a, b);
        assert_close(e, dense_hopping(&after, a, b), 1e-8, "hopping expectation");
        assert!(sign.value() * e >= 0.999, "sign {sign:?}: ⟨hop⟩ = {e}");
        assert!(h.purity_defect() < 1e-8);
    }
    let over = GateSpec::AWeak {
        a,
        b,
        alpha: 2.0 * alpha_max(),
        sign: P,
    };
    assert!(over.validate().is_err());
}

#[test]
fn purification_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (_, g) = random_pair(12, &mut rng);
    let mut h = g.clone();
    let rep = h.purify().unwrap();
    assert!(rep.max_deviation < 1e-10);
    assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-10);
    assert_eq!(rep.pi_values.len(), 6);

    let mut scaled = CovarianceMatrix::from_matrix(g.matrix() * 0.999).unwrap();
    let rep = scaled.purify().unwrap();
    assert_close(rep.max_deviation, 1e-3, 1e-10, "snapped deviation");
    assert!(scaled.purity_defect() < 1e-12);
    assert!(max_abs_diff(scaled.matrix(), g.matrix()) < 1e-10);

    let mut mixed = CovarianceMatrix::from_matrix(g.matrix() * 0.3).unwrap();
    assert!(matches!(mixed.purify(), Err(Error::TooMixed { .. })));
    let mut zero = CovarianceMatrix::from_matrix(DMatrix::zeros(4, 4)).unwrap();
    assert!(matches!(zero.purify(), Err(Error::TooMixed { .. })));
}

#[test]
fn polish_restores_purity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (_, g) = random_pair(12, &mut rng);
    let mut h = CovarianceMatrix::from_matrix(g.matrix() * (1.0 - 1e-5)).unwrap();
    let before = h.polish().unwrap();
    assert!(before > 1e-5);
    assert!(h.purity_defect() < 1e-13);
    assert!(max_abs_diff(h.matrix(), g.matrix()) < 1e-10);
}

#[test]
fn long_diii_run_stays_pure_between_purifications() {
    let geometry = Geometry::ring(64).unwrap();
    let steps = 10_000usize.div_ceil(64);
    let circuit = Circuit::Diii {
        program: DiiiProgram::uniform(0.5, steps).unwrap(),
        geometry,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let init = CovarianceMatrix::random_pure_state(64, &[P; 32], false, &mut rng).unwrap();
    let options = RunOptions { purify_every: Some(10) };
    let (rec, state) = run_trajectory(&circuit, init, 99, &[0], &Probes::default(), &options).unwrap();
    assert!(rec.max_purity_drift < 1e-6, "drift {}", rec.max_purity_drift);
    assert!(rec.max_purity_drift > 0.0);
    state.check_invariants().unwrap();
}

#[test]
fn charge_is_conserved_by_class_a_gates() {
    let g = CovarianceMatrix::product_state(&[P; 6]);
    assert_eq!(g.charge(), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cells = 4;
    let parities: Vec<Sign> = (0..2 * cells).map(|x| if x % 2 == 0 { P } else { M }).collect();
    let mut g = CovarianceMatrix::random_pure_state(4 * cells, &parities, true, &mut rng).unwrap();
    let q0 = g.charge();
    assert_close(q0, cells as f64, 1e-10, "half filling");
    let mut cache = ChoiCache::new();
    let variants = [UnitaryVariant::Onsite, UnitaryVariant::Longrange, UnitaryVariant::ChiralBreaking];
    for k in 0..1000 {
        let x = rng.random_range(0..cells);
        let y = (x + 1 + rng.random_range(0..cells - 1)) % cells;
        let (a, b) = if k % 3 == 0 { (Site::a(x), Site::a(y)) } else { (Site::a(x), Site::b(y)) };
        let t1 = rng.random_range(-3.0..3.0);
        let t2 = rng.random_range(-3.0..3.0);
        let alpha = rng.random_range(0.0..2.0);
        sample_a(&mut g, &mut cache, a, b, alpha, t1, t2, variants[k % 3], &mut rng).unwrap();
        if k % 50 == 0 {
            g.polish().unwrap();
        }
        assert!((g.charge() - q0).abs() < 1e-8, "step {k}: {}", g.charge());
    }
}

#[test]
fn binary_and_csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (_, g) = random_pair(8, &mut rng);
    let mut buf = vec![];
    g.write_binary(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 + 8 * 64);
    assert_eq!(&buf[..8], &8u64.to_le_bytes());
    let back = CovarianceMatrix::read_binary(buf.as_slice()).unwrap();
    assert_eq!(back, g);
    assert!(CovarianceMatrix::read_binary(&buf[..20]).is_err());

    let csv = g.to_csv();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 8);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            assert_eq!(v, g.get(i, j));
        }
    }
}
