//! Kraus ensembles and trajectory samplers.
//!
//! A sampled gate is recorded as the ordered list of elementary Gaussian
//! factors it applied ([`GateSpec`]), which is enough to replay the same
//! trajectory on the dense simulator.
//!
//! Class-A and AIII gates act on complex modes labelled by a unit cell and a
//! sublattice. Mode `2·cell + sub` (with `A = 0`, `B = 1`) owns the Majoranas
//! `2·mode` and `2·mode + 1`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceMatrix, OperatorCovariance};
use crate::error::{invalid, Error, Result};
use crate::fock::{self, DenseGate, GateForm, C64};
use crate::Sign;

/// Largest weak-measurement strength, `atanh(√(1 − 10⁻⁶))`.
pub fn alpha_max() -> f64 {
    (1.0f64 - 1e-6).sqrt().atanh()
}

/// Strength with `tanh²α = t`.
pub fn alpha_from_tanh_sq(t: f64) -> f64 {
    t.clamp(0.0, 1.0).sqrt().atanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// A complex-fermion site `(cell, sublattice)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub cell: usize,
    pub sub: Sublattice,
}

impl Site {
    pub fn new(cell: usize, sub: Sublattice) -> Self {
        Self { cell, sub }
    }

    pub fn a(cell: usize) -> Self {
        Self::new(cell, Sublattice::A)
    }

    pub fn b(cell: usize) -> Self {
        Self::new(cell, Sublattice::B)
    }

    /// Complex-mode index.
    pub fn mode(self) -> usize {
        2 * self.cell + if self.sub == Sublattice::A { 0 } else { 1 }
    }

    /// The two Majorana indices of this mode.
    pub fn majoranas(self) -> [usize; 2] {
        [2 * self.mode(), 2 * self.mode() + 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    DiiiMeasure,
    DiiiUnitary,
    AiiiWeak,
    AWeak,
    AOnsiteUnitary,
    ALongrangeUnitary,
    AChiralBreakingMeasure,
    AChiralBreakingUnitary,
}

/// One elementary Gaussian factor of a Kraus operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GateSpec {
    /// `√p (1 ± i γ_i γ_j)/2`.
    DiiiMeasure { i: usize, j: usize, p: f64, outcome: Sign },
    /// `√(1−p) exp(θ γ_i γ_j)`.
    DiiiUnitary { i: usize, j: usize, p: f64, theta: f64 },
    /// `exp(s₊α(n₊ − ½) + s₋α(n₋ − ½)) / (2 cosh α)` with `c_± = (c_a ± c_b)/√2`.
    AiiiWeak {
        a: Site,
        b: Site,
        alpha: f64,
        s_plus: Sign,
        s_minus: Sign,
    },
    /// `exp(sα(c_a† c_b + h.c.)) / (2 cosh α)` across sublattices.
    AWeak { a: Site, b: Site, alpha: f64, sign: Sign },
    /// `exp(iθ(n − ½))`.
    AOnsiteUnitary { site: Site, theta: f64 },
    /// `exp(i θ/2 (c_a† c_b − c_a c_b†))` within one sublattice.
    ALongrangeUnitary { a: Site, b: Site, theta: f64 },
    /// Same operator as [`GateSpec::AWeak`] on two sites of one sublattice.
    AChiralBreakingMeasure { a: Site, b: Site, alpha: f64, sign: Sign },
    /// `exp(i θ/2 (c_a† c_b + h.c.))` across sublattices.
    AChiralBreakingUnitary { a: Site, b: Site, theta: f64 },
}

/// Majorana generator `O` with `Σ_ab O_ab γ_a γ_b = Σ_xy h_xy (c_x† c_y − δ_xy/2)`.
///
/// Rows of `h` index the listed modes; the result is ordered
/// `(γ_{x0}, γ_{x0+1}, γ_{x1}, …)` mode by mode.
pub fn hopping_to_majorana(h: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    let quarter = C64::new(0.25, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut raw = DMatrix::from_element(2 * n, 2 * n, C64::new(0.0, 0.0));
    for x in 0..n {
        for y in 0..n {
            let v = h[(x, y)] * quarter;
            raw[(2 * x, 2 * y)] += v;
            raw[(2 * x + 1, 2 * y + 1)] += v;
            raw[(2 * x + 1, 2 * y)] += i * v;
            raw[(2 * x, 2 * y + 1)] -= i * v;
        }
    }
    let mut o = (&raw - raw.transpose()) * C64::new(0.5, 0.0);
    for k in 0..2 * n {
        o[(k, k)] = C64::new(0.0, 0.0);
    }
    o
}

fn two_mode_hopping(coupling: C64, diag: C64) -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[diag, coupling, coupling.conj(), diag])
}

fn check_strength(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return invalid(format!("measurement strength must be finite and non-negative, got {alpha}"));
    }
    if alpha > alpha_max() * (1.0 + 1e-12) {
        return invalid(format!(
            "measurement strength {alpha} exceeds α_max = {}; use projective updates",
            alpha_max()
        ));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("probability must lie in [0, 1], got {p}"));
    }
    Ok(())
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() {
        return invalid(format!("angle must be finite, got {theta}"));
    }
    Ok(())
}

fn distinct(a: Site, b: Site) -> Result<()> {
    if a == b {
        return invalid(format!("gate sites must differ, got {a:?} twice"));
    }
    Ok(())
}

impl GateSpec {
    pub fn family(&self) -> Family {
        match self {
            GateSpec::DiiiMeasure { .. } => Family::DiiiMeasure,
            GateSpec::DiiiUnitary { .. } => Family::DiiiUnitary,
            GateSpec::AiiiWeak { .. } => Family::AiiiWeak,
            GateSpec::AWeak { .. } => Family::AWeak,
            GateSpec::AOnsiteUnitary { .. } => Family::AOnsiteUnitary,
            GateSpec::ALongrangeUnitary { .. } => Family::ALongrangeUnitary,
            GateSpec::AChiralBreakingMeasure { .. } => Family::AChiralBreakingMeasure,
            GateSpec::AChiralBreakingUnitary { .. } => Family::AChiralBreakingUnitary,
        }
    }

    /// Checks parameter ranges and support consistency.
    pub fn validate(&self) -> Result<()> {
        match *self {
            GateSpec::DiiiMeasure { i, j, p, .. } => {
                check_probability(p)?;
                if i == j {
                    return invalid("measured Majoranas must differ");
                }
            }
            GateSpec::DiiiUnitary { i, j, p, theta } => {
                check_probability(p)?;
                check_angle(theta)?;
                if i == j {
                    return invalid("rotated Majoranas must differ");
                }
            }
            GateSpec::AiiiWeak { a, b, alpha, .. } => {
                check_strength(alpha)?;
                distinct(a, b)?;
            }
            GateSpec::AWeak { a, b, alpha, .. } => {
                check_strength(alpha)?;
                if a.sub == b.sub {
                    return invalid("class-A measurements act across sublattices");
                }
            }
            GateSpec::AChiralBreakingMeasure { a, b, alpha, .. } => {
                check_strength(alpha)?;
                distinct(a, b)?;
                if a.sub != b.sub {
                    return invalid("chiral-breaking measurements act within one sublattice");
                }
            }
            GateSpec::AOnsiteUnitary { theta, .. } => check_angle(theta)?,
            GateSpec::ALongrangeUnitary { a, b, theta } => {
                check_angle(theta)?;
                if a.sub != b.sub {
                    return invalid("long-range unitaries act within one sublattice");
                }
            }
            GateSpec::AChiralBreakingUnitary { a, b, theta } => {
                check_angle(theta)?;
                if a.sub == b.sub {
                    return invalid("chiral-breaking unitaries act across sublattices");
                }
            }
        }
        Ok(())
    }

    /// Majorana indices the gate acts on, in generator order.
    pub fn majorana_support(&self) -> Vec<usize> {
        match *self {
            GateSpec::DiiiMeasure { i, j, .. } | GateSpec::DiiiUnitary { i, j, .. } => vec![i, j],
            GateSpec::AOnsiteUnitary { site, .. } => site.majoranas().to_vec(),
            GateSpec::ALongrangeUnitary { a, b, .. } if a == b => a.majoranas().to_vec(),
            GateSpec::AiiiWeak { a, b, .. }
            | GateSpec::AWeak { a, b, .. }
            | GateSpec::ALongrangeUnitary { a, b, .. }
            | GateSpec::AChiralBreakingMeasure { a, b, .. }
            | GateSpec::AChiralBreakingUnitary { a, b, .. } => {
                let [a0, a1] = a.majoranas();
                let [b0, b1] = b.majoranas();
                vec![a0, a1, b0, b1]
            }
        }
    }

    /// Scalar prefactor of the Kraus factor.
    pub fn prefactor(&self) -> f64 {
        match *self {
            GateSpec::DiiiMeasure { p, .. } => p.sqrt(),
            GateSpec::DiiiUnitary { p, .. } => (1.0 - p).sqrt(),
            GateSpec::AiiiWeak { alpha, .. }
            | GateSpec::AWeak { alpha, .. }
            | GateSpec::AChiralBreakingMeasure { alpha, .. } => 1.0 / (2.0 * alpha.cosh()),
            _ => 1.0,
        }
    }

    /// Whether the factor is unitary up to its prefactor.
    pub fn is_unitary(&self) -> bool {
        matches!(
            self,
            GateSpec::DiiiUnitary { .. }
                | GateSpec::AOnsiteUnitary { .. }
                | GateSpec::ALongrangeUnitary { .. }
                | GateSpec::AChiralBreakingUnitary { .. }
        )
    }

    /// Antisymmetric generator over [`majorana_support`](Self::majorana_support).
    ///
    /// Parity projectors have none and return the zero matrix.
    pub fn majorana_generator(&self) -> Result<DMatrix<C64>> {
        self.validate()?;
        let zero = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        Ok(match *self {
            GateSpec::DiiiMeasure { .. } => DMatrix::from_element(2, 2, zero),
            GateSpec::DiiiUnitary { theta, .. } => {
                let mut g = DMatrix::from_element(2, 2, zero);
                g[(0, 1)] = C64::new(theta / 2.0, 0.0);
                g[(1, 0)] = C64::new(-theta / 2.0, 0.0);
                g
            }
            GateSpec::AiiiWeak {
                alpha,
                s_plus,
                s_minus,
                ..
            } => {
                let (sp, sm) = (s_plus.value(), s_minus.value());
                let diag = C64::new(alpha * (sp + sm) / 2.0, 0.0);
                let coupling = C64::new(alpha * (sp - sm) / 2.0, 0.0);
                hopping_to_majorana(&two_mode_hopping(coupling, diag))
            }
            GateSpec::AWeak { alpha, sign, .. } | GateSpec::AChiralBreakingMeasure { alpha, sign, .. } => {
                let coupling = C64::new(sign.value() * alpha, 0.0);
                hopping_to_majorana(&two_mode_hopping(coupling, zero))
            }
            GateSpec::AOnsiteUnitary { theta, .. } => {
                hopping_to_majorana(&DMatrix::from_element(1, 1, i * theta))
            }
            GateSpec::ALongrangeUnitary { a, b, theta } if a == b => {
                // c†c − c c† = 2(n − ½): the onsite phase.
                hopping_to_majorana(&DMatrix::from_element(1, 1, i * theta))
            }
            GateSpec::ALongrangeUnitary { theta, .. } | GateSpec::AChiralBreakingUnitary { theta, .. } => {
                // iθ/2 (c_a†c_b + c_b†c_a): an anti-Hermitian, hence unitary, exponent.
                let c = i * (theta / 2.0);
                hopping_to_majorana(&DMatrix::from_row_slice(2, 2, &[zero, c, c, zero]))
            }
        })
    }

    /// Dense-oracle form of the factor.
    pub fn to_dense(&self) -> Result<DenseGate> {
        let support = self.majorana_support();
        match *self {
            GateSpec::DiiiMeasure { i, j, outcome, .. } => {
                Ok(DenseGate::parity_projector(i, j, outcome)?.with_prefactor(self.prefactor()))
            }
            _ => DenseGate::new(
                self.majorana_generator()?,
                support,
                GateForm::Exponential,
                self.prefactor(),
            ),
        }
    }

    /// Orthogonal Majorana rotation of a unitary factor, `R = exp(4 O)`.
    pub fn rotation_matrix(&self) -> Result<DMatrix<f64>> {
        if !self.is_unitary() {
            return invalid(format!("{:?} is not unitary", self.family()));
        }
        let o = self.majorana_generator()?;
        let real = o.map(|z| 4.0 * z.re);
        Ok(real.exp())
    }

    fn cache_key(&self) -> Option<CacheKey> {
        let q = |a: f64| (a * 1e12).round() as i64;
        match *self {
            GateSpec::AiiiWeak {
                alpha,
                s_plus,
                s_minus,
                ..
            } => Some(CacheKey {
                family: Family::AiiiWeak,
                alpha: q(alpha),
                signs: (s_plus, s_minus),
            }),
            GateSpec::AWeak { alpha, sign, .. } => Some(CacheKey {
                family: Family::AWeak,
                alpha: q(alpha),
                signs: (sign, sign),
            }),
            GateSpec::AChiralBreakingMeasure { alpha, sign, .. } => Some(CacheKey {
                family: Family::AChiralBreakingMeasure,
                alpha: q(alpha),
                signs: (sign, sign),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    family: Family,
    alpha: i64,
    signs: (Sign, Sign),
}

/// Per-trajectory cache of Choi covariances for the weak-measurement factors.
#[derive(Debug, Default, Clone)]
pub struct ChoiCache {
    entries: HashMap<CacheKey, OperatorCovariance>,
}

impl ChoiCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Choi covariance of a non-unitary, non-projective factor.
    pub fn get(&mut self, spec: &GateSpec) -> Result<&OperatorCovariance> {
        let key = spec
            .cache_key()
            .ok_or_else(|| Error::InvalidInput(format!("{:?} has no cached Choi form", spec.family())))?;
        if !self.entries.contains_key(&key) {
            let op = fock::choi_covariance(&spec.to_dense()?)?;
            self.entries.insert(key, op);
        }
        Ok(&self.entries[&key])
    }
}

/// Applies one factor to the state and returns its Born weight `⟨K†K⟩`
/// evaluated on the state it acts on.
pub fn apply_factor(state: &mut CovarianceMatrix, spec: &GateSpec, cache: &mut ChoiCache) -> Result<f64> {
    spec.validate()?;
    match *spec {
        GateSpec::DiiiMeasure { i, j, p, outcome } => {
            let (pp, pm) = state.parity_probability(i, j)?;
            state.project_parity(i, j, outcome)?;
            Ok(p * if outcome == Sign::Plus { pp } else { pm })
        }
        GateSpec::DiiiUnitary { i, j, p, theta } => {
            state.apply_rotation(i, j, theta)?;
            Ok(1.0 - p)
        }
        GateSpec::AOnsiteUnitary { site, theta } => {
            let [m0, m1] = site.majoranas();
            state.apply_rotation(m0, m1, theta / 2.0)?;
            Ok(1.0)
        }
        GateSpec::ALongrangeUnitary { a, b, theta } if a == b => {
            let [m0, m1] = a.majoranas();
            state.apply_rotation(m0, m1, theta / 2.0)?;
            Ok(1.0)
        }
        GateSpec::ALongrangeUnitary { .. } | GateSpec::AChiralBreakingUnitary { .. } => {
            let r = spec.rotation_matrix()?;
            state.apply_orthogonal(&spec.majorana_support(), &r)?;
            Ok(1.0)
        }
        GateSpec::AiiiWeak { .. } | GateSpec::AWeak { .. } | GateSpec::AChiralBreakingMeasure { .. } => {
            let support = spec.majorana_support();
            let op = cache.get(spec)?;
            let w = state.born_weight(op, &support)?;
            if w < crate::covariance::ANNIHILATION_THRESHOLD {
                return Err(Error::AnnihilatedTrajectory { weight: w });
            }
            state.contract(op, &support)?;
            Ok(w)
        }
    }
}

/// Which branch of an ensemble a sample selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Branch {
    Unitary { theta: f64 },
    Parity { outcome: Sign },
    Aiii { s_plus: Sign, s_minus: Sign },
    ClassA { sign: Sign },
}

/// Result of one sampled gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledOutcome {
    pub branch: Branch,
    /// Probability of the selected branch (post-selected for class A).
    pub weight: f64,
    /// Uniform draws consumed from the generator.
    pub draws: u32,
    /// Elementary factors in application order.
    pub applied: Vec<GateSpec>,
}

/// One DIII gate: a projective parity measurement with probability `p`,
/// otherwise `exp(θ γ_i γ_j)` with `θ` uniform on `[0, 2π)`.
pub fn sample_diii<R: Rng + ?Sized>(
    state: &mut CovarianceMatrix,
    i: usize,
    j: usize,
    p: f64,
    rng: &mut R,
) -> Result<SampledOutcome> {
    check_probability(p)?;
    let u: f64 = rng.random();
    if u < p {
        let (pp, _) = state.parity_probability(i, j)?;
        let v: f64 = rng.random();
        let outcome = if v < pp { Sign::Plus } else { Sign::Minus };
        let branch_p = if outcome == Sign::Plus { pp } else { 1.0 - pp };
        state.project_parity(i, j, outcome)?;
        Ok(SampledOutcome {
            branch: Branch::Parity { outcome },
            weight: p * branch_p,
            draws: 2,
            applied: vec![GateSpec::DiiiMeasure { i, j, p, outcome }],
        })
    } else {
        let theta = rng.random_range(0.0..2.0 * PI);
        state.apply_rotation(i, j, theta)?;
        Ok(SampledOutcome {
            branch: Branch::Unitary { theta },
            weight: 1.0 - p,
            draws: 2,
            applied: vec![GateSpec::DiiiUnitary { i, j, p, theta }],
        })
    }
}

/// Unitary dressing of a class-A or AIII Kraus operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryVariant {
    /// `e^{iθ₁(n_a − ½)} e^{iθ₂(n_b − ½)}`.
    Onsite,
    /// Hopping within each sublattice between the cells of `a` and `b`.
    Longrange,
    /// Hopping across sublattices inside the cells of `a` and `b`.
    ChiralBreaking,
}

/// Unitary factors of a Kraus operator on sites `(a, b)`, in application order.
pub fn dressing(a: Site, b: Site, theta1: f64, theta2: f64, variant: UnitaryVariant) -> Vec<GateSpec> {
    match variant {
        UnitaryVariant::Onsite => vec![
            GateSpec::AOnsiteUnitary { site: b, theta: theta2 },
            GateSpec::AOnsiteUnitary { site: a, theta: theta1 },
        ],
        UnitaryVariant::Longrange => vec![
            GateSpec::ALongrangeUnitary {
                a: Site::b(a.cell),
                b: Site::b(b.cell),
                theta: theta2,
            },
            GateSpec::ALongrangeUnitary {
                a: Site::a(a.cell),
                b: Site::a(b.cell),
                theta: theta1,
            },
        ],
        UnitaryVariant::ChiralBreaking => vec![
            GateSpec::AChiralBreakingUnitary {
                a: Site::a(b.cell),
                b: Site::b(b.cell),
                theta: theta2,
            },
            GateSpec::AChiralBreakingUnitary {
                a: Site::a(a.cell),
                b: Site::b(a.cell),
                theta: theta1,
            },
        ],
    }
}

fn choose<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// AIII gate on `(a, b)`: onsite phases, then one of the four weak-measurement
/// branches `(s₊, s₋)` drawn from its exact Born weight.
#[allow(clippy::too_many_arguments)]
pub fn sample_aiii<R: Rng + ?Sized>(
    state: &mut CovarianceMatrix,
    cache: &mut ChoiCache,
    a: Site,
    b: Site,
    alpha: f64,
    theta1: f64,
    theta2: f64,
    rng: &mut R,
) -> Result<SampledOutcome> {
    check_strength(alpha)?;
    distinct(a, b)?;
    let mut applied = dressing(a, b, theta1, theta2, UnitaryVariant::Onsite);
    for u in &applied {
        apply_factor(state, u, cache)?;
    }
    let branches = [
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ];
    let support = GateSpec::AiiiWeak {
        a,
        b,
        alpha,
        s_plus: Sign::Plus,
        s_minus: Sign::Plus,
    }
    .majorana_support();
    let mut weights = [0.0; 4];
    for (k, &(sp, sm)) in branches.iter().enumerate() {
        let spec = GateSpec::AiiiWeak {
            a,
            b,
            alpha,
            s_plus: sp,
            s_minus: sm,
        };
        weights[k] = state.born_weight(cache.get(&spec)?, &support)?;
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvariantViolation(format!("AIII branch weights sum to {total}")));
    }
    let k = choose(&weights, total, rng);
    let (s_plus, s_minus) = branches[k];
    let spec = GateSpec::AiiiWeak {
        a,
        b,
        alpha,
        s_plus,
        s_minus,
    };
    apply_factor(state, &spec, cache)?;
    applied.push(spec);
    Ok(SampledOutcome {
        branch: Branch::Aiii { s_plus, s_minus },
        weight: weights[k] / total,
        draws: 1,
        applied,
    })
}

/// Class-A gate on `(a, b)`: the unitary dressing, then `exp(±α(c_a†c_b + h.c.))`
/// with the post-selected Born rule over the two retained signs.
///
/// If `a` and `b` share a sublattice the measurement is the chiral-breaking one.
#[allow(clippy::too_many_arguments)]
pub fn sample_a<R: Rng + ?Sized>(
    state: &mut CovarianceMatrix,
    cache: &mut ChoiCache,
    a: Site,
    b: Site,
    alpha: f64,
    theta1: f64,
    theta2: f64,
    variant: UnitaryVariant,
    rng: &mut R,
) -> Result<SampledOutcome> {
    check_strength(alpha)?;
    distinct(a, b)?;
    let make = |sign: Sign| {
        if a.sub == b.sub {
            GateSpec::AChiralBreakingMeasure { a, b, alpha, sign }
        } else {
            GateSpec::AWeak { a, b, alpha, sign }
        }
    };
    let mut applied = dressing(a, b, theta1, theta2, variant);
    for u in &applied {
        apply_factor(state, u, cache)?;
    }
    let support = make(Sign::Plus).majorana_support();
    let w_plus = state.born_weight(cache.get(&make(Sign::Plus))?, &support)?;
    let w_minus = state.born_weight(cache.get(&make(Sign::Minus))?, &support)?;
    let total = w_plus + w_minus;
    if total < crate::covariance::ANNIHILATION_THRESHOLD {
        return Err(Error::PostSelectionImpossible);
    }
    let p_plus = w_plus / total;
    let u: f64 = rng.random();
    let sign = if u < p_plus { Sign::Plus } else { Sign::Minus };
    let spec = make(sign);
    apply_factor(state, &spec, cache)?;
    applied.push(spec);
    Ok(SampledOutcome {
        branch: Branch::ClassA { sign },
        weight: if sign == Sign::Plus { p_plus } else { 1.0 - p_plus },
        draws: 1,
        applied,
    })
}

/// Post-selected class-A probabilities `(p₊, p₋)` after the unitary dressing.
pub fn class_a_probabilities(
    state: &CovarianceMatrix,
    cache: &mut ChoiCache,
    a: Site,
    b: Site,
    alpha: f64,
) -> Result<(f64, f64)> {
    let spec = |sign| GateSpec::AWeak { a, b, alpha, sign };
    let support = spec(Sign::Plus).majorana_support();
    let wp = state.born_weight(cache.get(&spec(Sign::Plus))?, &support)?;
    let wm = state.born_weight(cache.get(&spec(Sign::Minus))?, &support)?;
    let total = wp + wm;
    if total < crate::covariance::ANNIHILATION_THRESHOLD {
        return Err(Error::PostSelectionImpossible);
    }
    let pp = wp / total;
    Ok((pp, 1.0 - pp))
}

/// A Kraus ensemble with fixed parameters, for dense diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "snake_case")]
pub enum Ensemble {
    Diii { p: f64, theta: f64 },
    Aiii { alpha: f64, theta1: f64, theta2: f64 },
    ClassA {
        alpha: f64,
        theta1: f64,
        theta2: f64,
        variant: UnitaryVariant,
    },
}

/// Reference sites used for dense checks: two unit cells, `a = (0, A)` and `b = (1, B)`.
const REF_A: Site = Site {
    cell: 0,
    sub: Sublattice::A,
};
const REF_B: Site = Site {
    cell: 1,
    sub: Sublattice::B,
};
const REF_MAJORANAS: usize = 8;

impl Ensemble {
    /// Every Kraus operator as its factor list in application order.
    pub fn kraus_factors(&self) -> Vec<Vec<GateSpec>> {
        match *self {
            Ensemble::Diii { p, theta } => vec![
                vec![GateSpec::DiiiMeasure {
                    i: 0,
                    j: 1,
                    p,
                    outcome: Sign::Plus,
                }],
                vec![GateSpec::DiiiMeasure {
                    i: 0,
                    j: 1,
                    p,
                    outcome: Sign::Minus,
                }],
                vec![GateSpec::DiiiUnitary { i: 0, j: 1, p, theta }],
            ],
            Ensemble::Aiii { alpha, theta1, theta2 } => {
                let mut out = Vec::new();
                for s_plus in [Sign::Plus, Sign::Minus] {
                    for s_minus in [Sign::Plus, Sign::Minus] {
                        let mut f = dressing(REF_A, REF_B, theta1, theta2, UnitaryVariant::Onsite);
                        f.push(GateSpec::AiiiWeak {
                            a: REF_A,
                            b: REF_B,
                            alpha,
                            s_plus,
                            s_minus,
                        });
                        out.push(f);
                    }
                }
                out
            }
            Ensemble::ClassA {
                alpha,
                theta1,
                theta2,
                variant,
            } => [Sign::Plus, Sign::Minus]
                .into_iter()
                .map(|sign| {
                    let mut f = dressing(REF_A, REF_B, theta1, theta2, variant);
                    f.push(GateSpec::AWeak {
                        a: REF_A,
                        b: REF_B,
                        alpha,
                        sign,
                    });
                    f
                })
                .collect(),
        }
    }

    /// Dense Fock-space matrices of all Kraus operators on the reference system.
    pub fn dense_kraus(&self) -> Result<Vec<DMatrix<C64>>> {
        self.kraus_factors()
            .iter()
            .map(|factors| dense_product(factors, REF_MAJORANAS))
            .collect()
    }
}

/// Dense matrix of a factor list applied in order.
pub fn dense_product(factors: &[GateSpec], num_majoranas: usize) -> Result<DMatrix<C64>> {
    let dim = 1usize << (num_majoranas / 2);
    let mut k = DMatrix::<C64>::identity(dim, dim);
    for f in factors {
        f.validate()?;
        if f.prefactor() == 0.0 {
            return Ok(DMatrix::zeros(dim, dim));
        }
        k = f.to_dense()?.operator(num_majoranas)? * k;
    }
    Ok(k)
}

/// Operator norm of `Σ_K K†K − 𝟙`.
pub fn povm_defect(ensemble: &Ensemble) -> Result<f64> {
    let ops = ensemble.dense_kraus()?;
    let dim = ops[0].nrows();
    let mut sum = -DMatrix::<C64>::identity(dim, dim);
    for k in &ops {
        sum += k.adjoint() * k;
    }
    let eig = nalgebra::SymmetricEigen::new(sum);
    Ok(eig.eigenvalues.iter().fold(0.0, |m, &e| m.max(e.abs())))
}

/// `‖𝒞 K 𝒞⁻¹ − K‖_max` for the antiunitary `c_A → −c_A†`, `c_B → c_B†`, `i → −i`.
///
/// `sublattices[x]` tags complex mode `x` of the Fock space `K` acts on.
pub fn chiral_defect(kraus: &DMatrix<C64>, sublattices: &[Sublattice]) -> Result<f64> {
    let n = 2 * sublattices.len();
    let dim = 1usize << sublattices.len();
    if kraus.nrows() != dim || kraus.ncols() != dim {
        return invalid("Kraus matrix does not match the sublattice list");
    }
    // 𝒞 = W 𝒦 with W a Majorana string: the particle-hole map on every mode
    // combined with the conjugation of the (real-string) occupation basis.
    let mut w = DMatrix::<C64>::identity(dim, dim);
    for (x, sub) in sublattices.iter().enumerate() {
        let m = if *sub == Sublattice::A { 2 * x + 1 } else { 2 * x };
        w *= fock::majorana_operator(m, n);
    }
    if sublattices.len() % 2 == 0 {
        let mut parity = DMatrix::<C64>::identity(dim, dim);
        for x in 0..dim {
            if x.count_ones() % 2 == 1 {
                parity[(x, x)] = C64::new(-1.0, 0.0);
            }
        }
        w *= parity;
    }
    let conj = kraus.map(|z| z.conj());
    let transformed = &w * conj * w.adjoint();
    Ok((transformed - kraus).iter().fold(0.0, |m, z| m.max(z.norm())))
}

/// Complex-valued helper re-exported for callers building custom generators.
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}
