//! Trajectory-matched comparison of the covariance engine with the dense
//! simulator of [`crate::fock`].
//!
//! A run samples gates on the covariance side, replays the applied factors on
//! the dense state, and tracks the worst deviation of `Γ`, of region entropies
//! and of branch probabilities.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::entanglement::entropy_of;
use crate::error::{invalid, Result};
use crate::fock::{dense_apply, dense_covariance, dense_entropy, dense_from_dimers, DenseGate, DenseState};
use crate::gates::{
    alpha_from_tanh_sq, apply_factor, sample_a, sample_aiii, sample_diii, ChoiCache, GateSpec, SampledOutcome,
    Site, Sublattice, UnitaryVariant,
};
use crate::Sign;

/// Gate family exercised by one comparison run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DiiiMeasure,
    DiiiUnitary,
    DiiiMixed,
    AiiiWeak,
    AOnsite,
    ALongrange,
    AChiralBreakingUnitary,
    AChiralBreakingMeasure,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::DiiiMeasure,
        Family::DiiiUnitary,
        Family::DiiiMixed,
        Family::AiiiWeak,
        Family::AOnsite,
        Family::ALongrange,
        Family::AChiralBreakingUnitary,
        Family::AChiralBreakingMeasure,
    ];

    fn conserves_charge(self) -> bool {
        !matches!(self, Family::DiiiMeasure | Family::DiiiUnitary | Family::DiiiMixed)
    }

    fn post_selected(self) -> bool {
        matches!(
            self,
            Family::AOnsite | Family::ALongrange | Family::AChiralBreakingUnitary | Family::AChiralBreakingMeasure
        )
    }

    /// Smallest Majorana count the family can act on.
    pub fn min_majoranas(self) -> usize {
        match self {
            Family::AChiralBreakingMeasure => 8,
            _ => 4,
        }
    }
}

/// Worst deviations seen along one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub family: Family,
    pub majoranas: usize,
    pub steps: usize,
    pub covariance: f64,
    pub entropy: f64,
    pub probability: f64,
}

impl Deviation {
    pub fn max(&self) -> f64 {
        self.covariance.max(self.entropy).max(self.probability)
    }
}

/// A generic pure Gaussian state on `n` Majoranas, built identically on the
/// dense and covariance sides by random pair rotations of the vacuum.
pub fn random_pair(n: usize, rng: &mut ChaCha8Rng) -> Result<(DenseState, CovarianceMatrix)> {
    let pairs: Vec<_> = (0..n / 2).map(|x| (2 * x, 2 * x + 1, Sign::Plus)).collect();
    let mut dense = dense_from_dimers(&pairs, n)?;
    let mut cov = CovarianceMatrix::from_dimers(&pairs, n)?;
    for _ in 0..6 * n {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n);
        while b == a {
            b = rng.random_range(0..n);
        }
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        dense = dense_apply(&DenseGate::rotation(a, b, theta)?, &dense)?.0;
        cov.apply_rotation(a, b, theta)?;
    }
    Ok((dense, cov))
}

fn site_of(mode: usize) -> Site {
    Site::new(mode / 2, if mode % 2 == 0 { Sublattice::A } else { Sublattice::B })
}

/// A random pure Gaussian state with fixed charge: onsite phases and
/// charge-conserving hoppings applied to a half-filled product state.
pub fn random_charge_pair(n: usize, rng: &mut ChaCha8Rng) -> Result<(DenseState, CovarianceMatrix)> {
    let modes = n / 2;
    let pairs: Vec<_> = (0..modes)
        .map(|x| (2 * x, 2 * x + 1, if x % 2 == 0 { Sign::Plus } else { Sign::Minus }))
        .collect();
    let mut dense = dense_from_dimers(&pairs, n)?;
    let mut cov = CovarianceMatrix::from_dimers(&pairs, n)?;
    let mut cache = ChoiCache::new();
    for _ in 0..4 * n {
        let a = rng.random_range(0..modes);
        let mut b = rng.random_range(0..modes);
        while b == a {
            b = rng.random_range(0..modes);
        }
        let (sa, sb) = (site_of(a), site_of(b));
        let theta = rng.random_range(-3.0..3.0);
        let hop = if sa.sub == sb.sub {
            GateSpec::ALongrangeUnitary { a: sa, b: sb, theta }
        } else {
            GateSpec::AChiralBreakingUnitary { a: sa, b: sb, theta }
        };
        let phase = GateSpec::AOnsiteUnitary {
            site: sa,
            theta: rng.random_range(-3.0..3.0),
        };
        for spec in [hop, phase] {
            apply_factor(&mut cov, &spec, &mut cache)?;
            dense = dense_apply(&spec.to_dense()?, &dense)?.0;
        }
    }
    Ok((dense, cov))
}

fn random_sites(n: usize, same_sublattice: bool, rng: &mut ChaCha8Rng) -> (Site, Site) {
    loop {
        let a = site_of(rng.random_range(0..n / 2));
        let b = site_of(rng.random_range(0..n / 2));
        if a != b && (a.sub == b.sub) == same_sublattice {
            return (a, b);
        }
    }
}

/// Applies `applied` to `dense` and returns the state with the product of weights.
pub fn replay(dense: &DenseState, applied: &[GateSpec]) -> Result<(DenseState, f64)> {
    let mut state = dense.clone();
    let mut weight = 1.0;
    for g in applied {
        let (next, w) = dense_apply(&g.to_dense()?, &state)?;
        state = next;
        weight *= w;
    }
    Ok((state, weight))
}

/// Dense post-selected probability of the chosen class-A branch: the weight
/// of the applied factors over the weight of both branches of the final one.
pub fn dense_class_a_probability(dense: &DenseState, applied: &[GateSpec]) -> Result<f64> {
    let (_, w_sel) = replay(dense, applied)?;
    let mut flipped = applied.to_vec();
    let Some(last) = flipped.last_mut() else {
        return invalid("empty class-A factor list");
    };
    *last = match *last {
        GateSpec::AWeak { a, b, alpha, sign } => GateSpec::AWeak { a, b, alpha, sign: sign.flip() },
        GateSpec::AChiralBreakingMeasure { a, b, alpha, sign } => GateSpec::AChiralBreakingMeasure {
            a,
            b,
            alpha,
            sign: sign.flip(),
        },
        other => return invalid(format!("class-A factor list ends in {other:?}")),
    };
    let (_, w_other) = replay(dense, &flipped)?;
    Ok(w_sel / (w_sel + w_other))
}

fn sample(
    family: Family,
    n: usize,
    cov: &mut CovarianceMatrix,
    cache: &mut ChoiCache,
    rng: &mut ChaCha8Rng,
) -> Result<SampledOutcome> {
    let strengths = [0.3, 1.0, alpha_from_tanh_sq(0.04), alpha_from_tanh_sq(0.96)];
    let alpha = *strengths.choose(rng).expect("non-empty");
    let t1 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let t2 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    match family {
        Family::DiiiMeasure | Family::DiiiUnitary | Family::DiiiMixed => {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n);
            while j == i {
                j = rng.random_range(0..n);
            }
            let p = match family {
                Family::DiiiMeasure => 1.0,
                Family::DiiiUnitary => 0.0,
                _ => 0.5,
            };
            sample_diii(cov, i, j, p, rng)
        }
        Family::AiiiWeak => {
            let (a, b) = random_sites(n, false, rng);
            sample_aiii(cov, cache, a, b, alpha, t1, t2, rng)
        }
        Family::AOnsite | Family::ALongrange | Family::AChiralBreakingUnitary => {
            let (a, b) = random_sites(n, false, rng);
            let variant = match family {
                Family::AOnsite => UnitaryVariant::Onsite,
                Family::ALongrange => UnitaryVariant::Longrange,
                _ => UnitaryVariant::ChiralBreaking,
            };
            sample_a(cov, cache, a, b, alpha, t1, t2, variant, rng)
        }
        Family::AChiralBreakingMeasure => {
            let (a, b) = random_sites(n, true, rng);
            sample_a(cov, cache, a, b, alpha, t1, t2, UnitaryVariant::Onsite, rng)
        }
    }
}

/// Runs `steps` random gates of `family` on `n` Majoranas, comparing against
/// the dense simulator after every gate. Stops early once `Γ` deviates by
/// more than `stop_above`.
pub fn run_family(family: Family, n: usize, steps: usize, seed: u64, stop_above: f64) -> Result<Deviation> {
    if n % 4 != 0 || n < family.min_majoranas() || n > crate::fock::MAX_MAJORANAS {
        return invalid(format!("{family:?} cannot run on {n} Majoranas"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dense, mut cov) = if family.conserves_charge() {
        random_charge_pair(n, &mut rng)?
    } else {
        random_pair(n, &mut rng)?
    };
    let mut cache = ChoiCache::new();
    let mut dev = Deviation {
        family,
        majoranas: n,
        steps: 0,
        covariance: 0.0,
        entropy: 0.0,
        probability: 0.0,
    };
    for _ in 0..steps {
        let out = sample(family, n, &mut cov, &mut cache, &mut rng)?;
        let (next, weight) = replay(&dense, &out.applied)?;
        let expected = if family.post_selected() {
            dense_class_a_probability(&dense, &out.applied)?
        } else {
            weight
        };
        dev.probability = dev.probability.max((expected - out.weight).abs());
        dense = next;
        dev.covariance = dev.covariance.max((dense_covariance(&dense).matrix() - cov.matrix()).amax());
        let size = rng.random_range(1..=n / 2);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let region = &idx[..size];
        dev.entropy = dev
            .entropy
            .max((dense_entropy(&dense, region)? - entropy_of(&cov, region)?).abs());
        dev.steps += 1;
        if dev.covariance > stop_above {
            break;
        }
    }
    Ok(dev)
}

/// Every family at 4, 8 and 12 Majoranas (where the family fits).
pub fn oracle_suite(steps: usize, seed: u64, stop_above: f64) -> Result<Vec<Deviation>> {
    let mut out = Vec::new();
    for family in Family::ALL {
        for (k, n) in [4usize, 8, 12].into_iter().enumerate() {
            if n >= family.min_majoranas() {
                out.push(run_family(family, n, steps, seed + k as u64, stop_above)?);
            }
        }
    }
    Ok(out)
}
