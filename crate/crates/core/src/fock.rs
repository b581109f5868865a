//! Dense reference simulator.
//!
//! States live in the full `2^(L/2)`-dimensional Fock space. Basis index bit
//! `x` is the occupation of complex mode `x`; Jordan-Wigner strings run over
//! lower mode indices. Everything here is brute force and meant as ground
//! truth for the covariance engine, so clarity wins over speed.

use nalgebra::{Complex, DMatrix, DVector};

use crate::covariance::{CovarianceMatrix, OperatorCovariance};
use crate::error::{invalid, Error, Result};
use crate::Sign;

pub type C64 = Complex<f64>;

/// Largest Majorana count the dense path accepts.
pub const MAX_MAJORANAS: usize = 12;

/// Branch weights below this are treated as impossible outcomes.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// A normalized pure state on `num_majoranas` Majorana modes.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    num_majoranas: usize,
    amplitudes: DVector<C64>,
}

impl DenseState {
    /// Wraps and normalizes an amplitude vector.
    pub fn new(num_majoranas: usize, amplitudes: DVector<C64>) -> Result<Self> {
        check_size(num_majoranas)?;
        if amplitudes.len() != 1 << (num_majoranas / 2) {
            return invalid(format!(
                "amplitude vector has length {}, expected {}",
                amplitudes.len(),
                1usize << (num_majoranas / 2)
            ));
        }
        let norm = amplitudes.norm();
        if norm < ANNIHILATION_THRESHOLD {
            return invalid("zero amplitude vector");
        }
        Ok(Self {
            num_majoranas,
            amplitudes: amplitudes / C64::from(norm),
        })
    }

    /// The Fock vacuum, i.e. every complex mode empty.
    pub fn vacuum(num_majoranas: usize) -> Result<Self> {
        check_size(num_majoranas)?;
        let mut v = DVector::from_element(1 << (num_majoranas / 2), ZERO);
        v[0] = ONE;
        Ok(Self {
            num_majoranas,
            amplitudes: v,
        })
    }

    pub fn num_majoranas(&self) -> usize {
        self.num_majoranas
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// `⟨ψ|A|ψ⟩` for an operator on the full Fock space.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

fn check_size(num_majoranas: usize) -> Result<()> {
    if num_majoranas == 0 || num_majoranas % 2 == 1 {
        return invalid(format!("Majorana count must be even and positive, got {num_majoranas}"));
    }
    if num_majoranas > MAX_MAJORANAS {
        return invalid(format!(
            "dense simulation limited to {MAX_MAJORANAS} Majoranas, got {num_majoranas}"
        ));
    }
    Ok(())
}

/// Action of a single Majorana on one basis state: `(target index, phase)`.
fn majorana_on_basis(m: usize, n: usize) -> (usize, C64) {
    let x = m / 2;
    let string = if (n & ((1 << x) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    let occupied = n & (1 << x) != 0;
    let phase = if m % 2 == 0 {
        C64::new(string, 0.0)
    } else if occupied {
        C64::new(0.0, string)
    } else {
        C64::new(0.0, -string)
    };
    (n ^ (1 << x), phase)
}

fn apply_majorana(m: usize, v: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::from_element(v.len(), ZERO);
    for (n, amp) in v.iter().enumerate() {
        let (t, phase) = majorana_on_basis(m, n);
        out[t] += phase * amp;
    }
    out
}

/// Matrix of `γ_m` on the Fock space of `num_majoranas` Majoranas.
pub fn majorana_operator(m: usize, num_majoranas: usize) -> DMatrix<C64> {
    let dim = 1 << (num_majoranas / 2);
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for n in 0..dim {
        let (t, phase) = majorana_on_basis(m, n);
        out[(t, n)] = phase;
    }
    out
}

/// Many-body bilinear `Σ_ab O_ab γ_{s_a} γ_{s_b}`.
pub fn quadratic_operator(
    generator: &DMatrix<C64>,
    support: &[usize],
    num_majoranas: usize,
) -> DMatrix<C64> {
    let gammas: Vec<DMatrix<C64>> = support
        .iter()
        .map(|&m| majorana_operator(m, num_majoranas))
        .collect();
    let dim = 1 << (num_majoranas / 2);
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for a in 0..support.len() {
        for b in 0..support.len() {
            let o = generator[(a, b)];
            if o != ZERO {
                out += (&gammas[a] * &gammas[b]) * o;
            }
        }
    }
    out
}

/// Operator form of a [`DenseGate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateForm {
    /// `prefactor · exp(Σ_ab O_ab γ_a γ_b)`.
    Exponential,
    /// `prefactor · (1 ± i γ_a γ_b)/2` on a two-Majorana support.
    ParityProjector(Sign),
}

/// A Gaussian operator on a few Majoranas, in dense form.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGate {
    generator: DMatrix<C64>,
    support: Vec<usize>,
    form: GateForm,
    prefactor: f64,
}

impl DenseGate {
    pub fn new(
        generator: DMatrix<C64>,
        support: Vec<usize>,
        form: GateForm,
        prefactor: f64,
    ) -> Result<Self> {
        let s = support.len();
        if generator.nrows() != s || generator.ncols() != s {
            return invalid(format!(
                "generator is {}x{}, support has {s} entries",
                generator.nrows(),
                generator.ncols()
            ));
        }
        let asym = (&generator + generator.transpose()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if asym > 1e-12 {
            return invalid(format!("generator not antisymmetric (defect {asym:e})"));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != s {
            return invalid("support indices must be distinct");
        }
        if let GateForm::ParityProjector(_) = form {
            if s != 2 {
                return invalid("parity projector needs exactly two Majoranas");
            }
        }
        if !(prefactor.is_finite() && prefactor > 0.0) {
            return invalid(format!("prefactor must be positive, got {prefactor}"));
        }
        Ok(Self {
            generator,
            support,
            form,
            prefactor,
        })
    }

    /// `exp(Σ O γ γ)` without prefactor.
    pub fn exponential(generator: DMatrix<C64>, support: Vec<usize>) -> Result<Self> {
        Self::new(generator, support, GateForm::Exponential, 1.0)
    }

    /// `(1 + s i γ_a γ_b)/2`.
    pub fn parity_projector(a: usize, b: usize, outcome: Sign) -> Result<Self> {
        Self::new(
            DMatrix::from_element(2, 2, ZERO),
            vec![a, b],
            GateForm::ParityProjector(outcome),
            1.0,
        )
    }

    /// The unitary `exp(θ γ_a γ_b)`.
    pub fn rotation(a: usize, b: usize, theta: f64) -> Result<Self> {
        let mut g = DMatrix::from_element(2, 2, ZERO);
        g[(0, 1)] = C64::new(theta / 2.0, 0.0);
        g[(1, 0)] = C64::new(-theta / 2.0, 0.0);
        Self::exponential(g, vec![a, b])
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn generator(&self) -> &DMatrix<C64> {
        &self.generator
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn form(&self) -> GateForm {
        self.form
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// The gate relabelled onto a different support.
    pub fn relabel(&self, support: Vec<usize>) -> Result<Self> {
        Self::new(self.generator.clone(), support, self.form, self.prefactor)
    }

    /// Full Fock-space matrix of the gate.
    pub fn operator(&self, num_majoranas: usize) -> Result<DMatrix<C64>> {
        check_size(num_majoranas)?;
        if let Some(&m) = self.support.iter().find(|&&m| m >= num_majoranas) {
            return invalid(format!("support index {m} outside {num_majoranas} Majoranas"));
        }
        let dim = 1 << (num_majoranas / 2);
        let scale = C64::from(self.prefactor);
        let op = match self.form {
            GateForm::Exponential => {
                quadratic_operator(&self.generator, &self.support, num_majoranas).exp()
            }
            GateForm::ParityProjector(s) => {
                let ga = majorana_operator(self.support[0], num_majoranas);
                let gb = majorana_operator(self.support[1], num_majoranas);
                let parity = (ga * gb) * (I * s.value());
                (DMatrix::identity(dim, dim) + parity) * C64::from(0.5)
            }
        };
        Ok(op * scale)
    }
}

/// Applies `K` to the state and renormalizes; returns the Born weight `‖K|ψ⟩‖²`.
pub fn dense_apply(gate: &DenseGate, state: &DenseState) -> Result<(DenseState, f64)> {
    let op = gate.operator(state.num_majoranas)?;
    dense_apply_operator(&op, state)
}

/// Like [`dense_apply`] for an arbitrary Fock-space matrix.
pub fn dense_apply_operator(op: &DMatrix<C64>, state: &DenseState) -> Result<(DenseState, f64)> {
    if op.nrows() != state.dim() || op.ncols() != state.dim() {
        return invalid("operator dimension does not match state");
    }
    let v = op * &state.amplitudes;
    let weight = v.norm_squared();
    if weight < ANNIHILATION_THRESHOLD {
        return Err(Error::AnnihilatedTrajectory { weight });
    }
    let next = DenseState {
        num_majoranas: state.num_majoranas,
        amplitudes: v / C64::from(weight.sqrt()),
    };
    Ok((next, weight))
}

/// Covariance matrix `Γ_ij = i⟨γ_i γ_j⟩` (`i ≠ j`) of a dense state.
pub fn dense_covariance(state: &DenseState) -> CovarianceMatrix {
    let n = state.num_majoranas;
    let images: Vec<DVector<C64>> = (0..n).map(|m| apply_majorana(m, &state.amplitudes)).collect();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            // ⟨γ_i γ_j⟩ = ⟨γ_i ψ | γ_j ψ⟩ because γ_i is Hermitian.
            let v = -images[i].dotc(&images[j]).im;
            g[(i, j)] = v;
            g[(j, i)] = -v;
        }
    }
    CovarianceMatrix::from_antisymmetric_unchecked(g)
}

/// Covariance of a positive operator `E`, normalized by its trace.
pub fn operator_covariance_of(op: &DMatrix<C64>, num_majoranas: usize) -> DMatrix<f64> {
    let tr = op.trace();
    let gammas: Vec<DMatrix<C64>> = (0..num_majoranas)
        .map(|m| majorana_operator(m, num_majoranas))
        .collect();
    let mut g = DMatrix::<f64>::zeros(num_majoranas, num_majoranas);
    for i in 0..num_majoranas {
        for j in (i + 1)..num_majoranas {
            let v = (I * (&gammas[i] * &gammas[j] * op).trace() / tr).re;
            g[(i, j)] = v;
            g[(j, i)] = -v;
        }
    }
    g
}

/// Von Neumann entropy of the reduced state on a set of Majoranas.
///
/// The reduced density matrix is rebuilt from all monomial expectations in
/// the region and diagonalized on a fresh Fock space. Odd regions are padded
/// with one unused Majorana whose half-bit of mixedness is subtracted again.
pub fn dense_entropy(state: &DenseState, region: &[usize]) -> Result<f64> {
    let n = state.num_majoranas;
    let mut sorted = region.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != region.len() {
        return invalid("region indices must be distinct");
    }
    if let Some(&m) = region.iter().find(|&&m| m >= n) {
        return invalid(format!("region index {m} outside {n} Majoranas"));
    }
    let m = region.len();
    if m == 0 {
        return Ok(0.0);
    }
    let padded = m + m % 2;
    let dim = 1usize << (padded / 2);
    let mut rho = DMatrix::from_element(dim, dim, ZERO);
    for mask in 0usize..(1 << m) {
        let members: Vec<usize> = (0..m).filter(|k| mask & (1 << k) != 0).collect();
        // ⟨(γ_S)^†⟩ with γ_S the ordered product over the members.
        let mut v = state.amplitudes.clone();
        for &k in members.iter().rev() {
            v = apply_majorana(region[k], &v);
        }
        let mut coef = state.amplitudes.dotc(&v).conj();
        if coef.norm() < 1e-15 {
            continue;
        }
        coef /= C64::from(dim as f64);
        for col in 0..dim {
            let mut target = col;
            let mut phase = ONE;
            for &k in members.iter().rev() {
                let (t, p) = majorana_on_basis(k, target);
                target = t;
                phase *= p;
            }
            rho[(target, col)] += coef * phase;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(rho);
    let mut s = 0.0;
    for &p in eig.eigenvalues.iter() {
        if p > 1e-15 {
            s -= p * p.ln();
        }
    }
    if m % 2 == 1 {
        s -= 0.5 * std::f64::consts::LN_2;
    }
    Ok(s.max(0.0))
}

/// Simultaneous eigenstate of `i γ_a γ_b` for every pair in a perfect matching.
pub fn dense_from_dimers(pairing: &[(usize, usize, Sign)], num_majoranas: usize) -> Result<DenseState> {
    check_size(num_majoranas)?;
    let mut seen = vec![false; num_majoranas];
    for &(a, b, _) in pairing {
        for m in [a, b] {
            if m >= num_majoranas || seen[m] {
                return invalid("pairing is not a perfect matching");
            }
            seen[m] = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return invalid("pairing is not a perfect matching");
    }
    let dim = 1usize << (num_majoranas / 2);
    let mut projector = DMatrix::<C64>::identity(dim, dim);
    for &(a, b, s) in pairing {
        let p = DenseGate::parity_projector(a, b, s)?.operator(num_majoranas)?;
        projector = p * projector;
    }
    let (best, _) = (0..dim)
        .map(|c| (c, projector.column(c).norm_squared()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    DenseState::new(num_majoranas, projector.column(best).into_owned())
}

/// Choi covariance of an exponential-form gate.
///
/// The gate acts on the output copy `η` of a maximally entangled pair
/// `i η_a ξ_a = +1`. The returned blocks are normalized; the scalar weight is
/// `tr(K†K)/2^{s/2}` and the effect covariance is that of `K†K / tr(K†K)`.
pub fn choi_covariance(gate: &DenseGate) -> Result<OperatorCovariance> {
    if let GateForm::ParityProjector(_) = gate.form {
        return invalid("parity projectors have no finite Choi covariance; use project_parity");
    }
    let s = gate.support.len();
    if s == 0 || s % 2 == 1 || s > 4 {
        return invalid(format!("Choi construction needs an even support of at most 4, got {s}"));
    }
    let local = gate.relabel((0..s).collect())?;
    let pairs: Vec<(usize, usize, Sign)> = (0..s).map(|a| (a, s + a, Sign::Plus)).collect();
    let epr = dense_from_dimers(&pairs, 2 * s)?;
    let (choi, weight) = dense_apply(&local, &epr)?;
    let doubled = dense_covariance(&choi);

    let k = local.operator(s)?;
    let effect_op = k.adjoint() * &k;
    let effect = operator_covariance_of(&effect_op, s);
    OperatorCovariance::new(doubled.into_matrix(), weight, effect)
}
