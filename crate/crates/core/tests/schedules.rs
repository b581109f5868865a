mod common;

use common::LN2;
use fermon::experiments::{braid_run, RunOptions};
use fermon::schedules::presets::{class_a_range_profile, class_a_two_walls, class_a_wall_classes, diii_crossing_walls};
use fermon::schedules::{
    braiding_program, class_a_schedule, sigmoid, smooth_profile, staggered_diii, ClassAProgram, ComplexClass,
    DiiiProgram, DwSegment, Geometry, Profile,
};
use fermon::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ring_links_cover_every_bond_once() {
    let g = Geometry::ring(8).unwrap();
    let odd: Vec<_> = g.odd_links().iter().map(|l| (l.i, l.j)).collect();
    let even: Vec<_> = g.even_links().iter().map(|l| (l.i, l.j)).collect();
    assert_eq!(odd, vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
    assert_eq!(even, vec![(1, 2), (3, 4), (5, 6), (7, 0)]);
    let open = Geometry::open_chain(8).unwrap();
    assert_eq!(open.even_links().len(), 3);
    assert!(Geometry::ring(7).is_err());
    assert!(Geometry::ring(2).is_err());
}

#[test]
fn staggered_probabilities_are_complementary() {
    let program = diii_crossing_walls(64, 80).unwrap();
    let geom = Geometry::ring(64).unwrap();
    for t in [1, 10, 30, 48, 70] {
        let [odd, even] = staggered_diii(&program, &geom, t).unwrap();
        assert_eq!(odd.len(), 32);
        assert_eq!(even.len(), 32);
        for (slot, link) in even.iter().zip(geom.even_links()) {
            let p_odd = program.p_odd_at(link.x, t as f64).unwrap();
            assert_eq!(slot.p, 1.0 - p_odd);
        }
        assert!(odd.iter().chain(&even).all(|s| (0.0..=1.0).contains(&s.p)));
    }
    let tj = Geometry::t_junction(8).unwrap();
    assert!(matches!(
        staggered_diii(&DiiiProgram::uniform(0.5, 4).unwrap(), &tj, 1),
        Err(Error::Schedule(_))
    ));
    assert!(DiiiProgram::uniform(1.2, 4).is_err());
}

#[test]
fn crossing_walls_layout() {
    let l = 64;
    let program = diii_crossing_walls(l, 80).unwrap();
    let geom = Geometry::ring(l).unwrap();
    let [odd, _] = staggered_diii(&program, &geom, 0).unwrap();
    assert!(odd.iter().all(|s| s.p < 0.4), "t = 0 is uniformly trivial");
    let Profile::Walls(w) = &program.p_odd else {
        panic!("expected walls")
    };
    let mut at_start: Vec<f64> = w.walls_at(1.0).unwrap().iter().map(|w| w.x).collect();
    at_start.sort_by(f64::total_cmp);
    assert_eq!(at_start, vec![16.0, 48.0]);
    for wall in w.walls_at(47.5).unwrap() {
        assert!((wall.x - 32.0).abs() < 0.6, "walls meet near L/2, got {}", wall.x);
    }
    // Between the walls the even links are dimerized before the crossing.
    assert!(program.p_odd_at(32.0, 5.0).unwrap() > 0.89);
    assert!(program.p_odd_at(2.0, 5.0).unwrap() < 0.11);
}

#[test]
fn smooth_wall_shape() {
    let w = smooth_profile(vec![DwSegment::new((0.0, 10.0), (20.0, 20.0), 0.1, 0.9)], 0.5, 0.1, None).unwrap();
    assert!((w.value(20.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
    assert!((w.value(10.0, 1.0).unwrap() - 0.1).abs() < 1e-3);
    assert!((w.value(30.0, 1.0).unwrap() - 0.9).abs() < 1e-3);
    assert_eq!(w.value(20.0, 10.0).unwrap(), 0.1, "inactive after t_end");

    let sharp = smooth_profile(vec![DwSegment::new((0.0, 10.0), (20.0, 20.0), 0.1, 0.9)], 1e3, 0.1, None).unwrap();
    assert!((sharp.value(19.5, 1.0).unwrap() - 0.1).abs() < 1e-12);
    assert!((sharp.value(20.5, 1.0).unwrap() - 0.9).abs() < 1e-12);

    assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    assert!(smooth_profile(vec![], 0.0, 0.1, None).is_err());
}

#[test]
fn contradictory_plateaus_are_rejected() {
    let segments = vec![
        DwSegment::new((0.0, 10.0), (10.0, 10.0), 0.1, 0.9),
        DwSegment::new((0.0, 10.0), (30.0, 30.0), 0.5, 0.1),
    ];
    assert!(matches!(smooth_profile(segments, 0.5, 0.1, None), Err(Error::Schedule(_))));
    let backward = vec![DwSegment::new((5.0, 5.0), (1.0, 1.0), 0.1, 0.9)];
    assert!(smooth_profile(backward, 0.5, 0.1, None).is_err());
}

#[test]
fn wall_class_steps_sum_to_zero_on_the_ring() {
    let w = class_a_wall_classes().unwrap();
    for t in 1..128 {
        let walls = w.walls_at(t as f64).unwrap();
        let total: f64 = walls.iter().map(|w| w.right - w.left).sum();
        assert!(total.abs() < 1e-12, "t = {t}: net wall class {total}");
    }
    let classes: Vec<f64> = w.walls_at(1.0).unwrap().iter().map(|w| w.right - w.left).collect();
    assert_eq!(classes, vec![1.0, 2.0, -1.0, -2.0]);
    assert!(w.walls_at(130.0).unwrap().is_empty());
    let Profile::Walls(r) = class_a_range_profile().unwrap() else {
        panic!("expected walls")
    };
    assert_eq!(r.value(50.0, 200.0).unwrap(), 0.0);
    assert!(class_a_two_walls(32, 10).is_ok());
}

fn sweep_program(r: Profile, cells: usize) -> ClassAProgram {
    ClassAProgram {
        r,
        ..ClassAProgram::sweep(ComplexClass::A, cells, 0.5, 0.7, 4)
    }
}

#[test]
fn integer_range_is_deterministic() {
    let program = sweep_program(Profile::Uniform { value: 2.0 }, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let [first, second] = class_a_schedule(&program, 1, &mut rng).unwrap();
        for i in 0..8 {
            assert_eq!(first[i].a.cell, i);
            assert_eq!(first[i].b.cell, (i + 2) % 8);
            assert_eq!(second[i].b.cell, (i + 3) % 8);
            assert_eq!(first[i].alpha, 0.5);
            assert_eq!(second[i].alpha, 0.7);
        }
    }
}

#[test]
fn fractional_range_mixes_neighbouring_offsets() {
    let cells = 8;
    let program = sweep_program(Profile::Uniform { value: 0.5 }, cells);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rounds = 1000;
    let mut far = 0usize;
    for _ in 0..rounds {
        let [first, _] = class_a_schedule(&program, 1, &mut rng).unwrap();
        for (i, s) in first.iter().enumerate() {
            let off = (s.b.cell + cells - i) % cells;
            assert!(off <= 1);
            far += off;
        }
    }
    let n = (rounds * cells) as f64;
    let frac = far as f64 / n;
    let sigma = (0.25 / n).sqrt();
    assert!((frac - 0.5).abs() < 3.0 * sigma, "offset 1 fraction {frac}");
}

#[test]
fn range_limits_are_enforced() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let wide = sweep_program(Profile::Uniform { value: 7.0 }, 8);
    assert!(matches!(class_a_schedule(&wide, 1, &mut rng), Err(Error::Schedule(_))));
    let negative = sweep_program(Profile::Uniform { value: -0.5 }, 8);
    assert!(class_a_schedule(&negative, 1, &mut rng).is_err());
}

#[test]
fn sweep_layout_pairs_within_and_across_cells() {
    let program = ClassAProgram::sweep(ComplexClass::Aiii, 4, 0.3, 0.9, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let [intra, inter] = class_a_schedule(&program, 1, &mut rng).unwrap();
    for i in 0..4 {
        assert_eq!((intra[i].a.cell, intra[i].b.cell), (i, i));
        assert_eq!((inter[i].a.cell, inter[i].b.cell), (i, (i + 1) % 4));
        assert!(intra[i].theta1.abs() <= std::f64::consts::PI);
    }
}

#[test]
fn braiding_stages_are_ordered() {
    let p = braiding_program(32).unwrap();
    let s = p.stage_times();
    assert!(s.t0 < s.t1 && s.t1 < s.t2 && s.t2 < s.t3 && s.t3 < s.end);
    let windows = p.hold_windows();
    for w in windows {
        assert_eq!(w.1 - w.0, p.hold);
    }
    for pair in windows.windows(2) {
        assert!(pair[0].1 <= pair[1].0);
    }
    assert!(braiding_program(30).is_err());
    assert!(braiding_program(4).is_err());
}

#[test]
fn braiding_gates_have_valid_supports() {
    let p = braiding_program(16).unwrap();
    let geom = Geometry::t_junction(16).unwrap();
    for t in 1..=p.steps() {
        for half in p.gates(&geom, t).unwrap() {
            for s in half {
                assert!(s.i < 48 && s.j < 48 && s.i != s.j);
                assert!((0.0..=1.0).contains(&s.p));
            }
        }
    }
    assert!(p.gates(&Geometry::t_junction(20).unwrap(), 1).is_err());
    assert!(p.gates(&Geometry::ring(16).unwrap(), 1).is_err());
}

#[test]
fn idealized_braiding_moves_the_shared_pair() {
    let p = braiding_program(64).unwrap().idealized();
    let windows = p.hold_windows();
    let tol = 0.01 * LN2;
    for seed in 0..6 {
        let rec = braid_run(&p, seed, 0, &RunOptions::default()).unwrap();
        // Series order (AB, BC, CA); probe row k is time k.
        let expected = [[0.0, 0.0, 0.0], [0.0, 0.0, 2.0], [1.0, 1.0, 1.0], [2.0, 0.0, 0.0]];
        for (w, want) in windows.iter().zip(expected) {
            let got = &rec.mutual_information[w.1 - 1];
            for r in 0..3 {
                assert!((got[r] - want[r] * LN2).abs() < tol, "seed {seed}, window {w:?}: {got:?}");
            }
        }
    }
}
