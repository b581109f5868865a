//! Covariance-matrix engine for Gaussian states.
//!
//! All updates keep `Γ` exactly antisymmetric: only the strict upper triangle
//! is computed and the lower triangle is mirrored from it.

use std::io::{Read, Write};

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::Sign;

/// Singular-value slack tolerated before an invariant violation is raised.
pub const SINGULAR_VALUE_SLACK: f64 = 1e-8;

/// Branch probabilities below this are treated as impossible outcomes.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-12;

/// Reciprocal condition number below which a contraction is rejected.
pub const RCOND_THRESHOLD: f64 = 1e-13;

/// Real antisymmetric covariance matrix of a Gaussian state on `L` Majoranas.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    gamma: DMatrix<f64>,
}

/// Outcome of a purification pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    /// Magnitudes of the canonical pair parities before snapping, one per pair, ascending.
    pub pi_values: Vec<f64>,
    /// `max |1 − |Π||` over all pairs.
    pub max_deviation: f64,
}

/// Choi covariance of a Gaussian operator on `s` Majoranas.
///
/// The doubled matrix is ordered `(η_0..η_{s−1}, ξ_0..ξ_{s−1})`, where the
/// operator acts on the `η` copy of a maximally entangled pair `i η_a ξ_a = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCovariance {
    doubled: DMatrix<f64>,
    weight: f64,
    effect: DMatrix<f64>,
}

impl OperatorCovariance {
    /// `doubled` is the `2s × 2s` Choi covariance, `weight = tr(K†K)/2^{s/2}`
    /// and `effect` the covariance of `K†K` normalized by its trace.
    pub fn new(doubled: DMatrix<f64>, weight: f64, effect: DMatrix<f64>) -> Result<Self> {
        let n = doubled.nrows();
        if n != doubled.ncols() || n % 4 != 0 || n == 0 {
            return invalid(format!("Choi covariance must be 2s×2s with s even, got {n}"));
        }
        if effect.nrows() != n / 2 || effect.ncols() != n / 2 {
            return invalid("effect covariance must match the support size");
        }
        let defect = (&doubled + doubled.transpose()).amax();
        if defect > 1e-10 {
            return invalid(format!("Choi covariance not antisymmetric (defect {defect:e})"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return invalid(format!("Kraus weight must be positive, got {weight}"));
        }
        let doubled = (&doubled - doubled.transpose()) * 0.5;
        let effect = (&effect - effect.transpose()) * 0.5;
        Ok(Self {
            doubled,
            weight,
            effect,
        })
    }

    pub fn support_len(&self) -> usize {
        self.doubled.nrows() / 2
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn doubled(&self) -> &DMatrix<f64> {
        &self.doubled
    }

    pub fn effect(&self) -> &DMatrix<f64> {
        &self.effect
    }

    fn block(&self, r: usize, c: usize) -> DMatrix<f64> {
        let s = self.support_len();
        self.doubled.view((r * s, c * s), (s, s)).into_owned()
    }

    pub fn eta_eta(&self) -> DMatrix<f64> {
        self.block(0, 0)
    }

    pub fn eta_xi(&self) -> DMatrix<f64> {
        self.block(0, 1)
    }

    pub fn xi_eta(&self) -> DMatrix<f64> {
        self.block(1, 0)
    }

    pub fn xi_xi(&self) -> DMatrix<f64> {
        self.block(1, 1)
    }

    /// Largest singular value of the doubled matrix.
    pub fn max_singular_value(&self) -> f64 {
        self.doubled.clone().singular_values().max()
    }
}

fn check_pair(len: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return invalid(format!("pair indices must differ, got ({i}, {j})"));
    }
    if i >= len || j >= len {
        return invalid(format!("pair ({i}, {j}) outside {len} Majoranas"));
    }
    Ok(())
}

fn check_support(len: usize, support: &[usize]) -> Result<()> {
    for (k, &m) in support.iter().enumerate() {
        if m >= len {
            return invalid(format!("support index {m} outside {len} Majoranas"));
        }
        if support[..k].contains(&m) {
            return invalid(format!("support index {m} repeated"));
        }
    }
    Ok(())
}

/// Haar-random element of SO(n).
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Haar-random element of U(n).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let a = DMatrix::<Complex<f64>>::from_fn(n, n, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / Complex::from(norm);
            let mut col = q.column_mut(k);
            col *= phase;
        }
    }
    q
}

/// Orthogonal Majorana rotation induced by the single-particle unitary `c_x → Σ_y U_xy c_y`.
pub fn embed_unitary(u: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut v = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for x in 0..n {
        for y in 0..n {
            let (a, b) = (u[(x, y)].re, u[(x, y)].im);
            v[(2 * x, 2 * y)] = a;
            v[(2 * x, 2 * y + 1)] = b;
            v[(2 * x + 1, 2 * y)] = -b;
            v[(2 * x + 1, 2 * y + 1)] = a;
        }
    }
    v
}

impl CovarianceMatrix {
    /// Validates squareness, even size and antisymmetry (within `1e-10`), then
    /// stores the exactly antisymmetrized matrix.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return invalid(format!("covariance must be square, got {}x{}", m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 || m.nrows() % 2 == 1 {
            return invalid(format!("Majorana count must be even and positive, got {}", m.nrows()));
        }
        let defect = (&m + m.transpose()).amax();
        if defect > 1e-10 {
            return invalid(format!("matrix not antisymmetric (defect {defect:e})"));
        }
        Ok(Self::from_antisymmetric_unchecked(m))
    }

    pub(crate) fn from_antisymmetric_unchecked(m: DMatrix<f64>) -> Self {
        let gamma = (&m - m.transpose()) * 0.5;
        Self { gamma }
    }

    /// Product of dimers `i γ_{2x} γ_{2x+1} = parities[x]`.
    pub fn product_state(parities: &[Sign]) -> Self {
        let n = 2 * parities.len();
        let mut g = DMatrix::zeros(n, n);
        for (x, p) in parities.iter().enumerate() {
            g[(2 * x, 2 * x + 1)] = p.value();
            g[(2 * x + 1, 2 * x)] = -p.value();
        }
        Self { gamma: g }
    }

    /// Product of dimers over an arbitrary perfect matching.
    pub fn from_dimers(pairing: &[(usize, usize, Sign)], len: usize) -> Result<Self> {
        if len == 0 || len % 2 == 1 {
            return invalid(format!("Majorana count must be even and positive, got {len}"));
        }
        let mut seen = vec![false; len];
        let mut g = DMatrix::zeros(len, len);
        for &(a, b, s) in pairing {
            for m in [a, b] {
                if m >= len || seen[m] {
                    return invalid("pairing is not a perfect matching");
                }
                seen[m] = true;
            }
            g[(a, b)] = s.value();
            g[(b, a)] = -s.value();
        }
        if seen.iter().any(|&s| !s) {
            return invalid("pairing is not a perfect matching");
        }
        Ok(Self { gamma: g })
    }

    /// `Γ = V · ⊕_x Π_x J · Vᵀ` with `V` Haar in SO(L), or Haar in U(L/2)
    /// embedded in SO(L) when `charge_conserving`.
    pub fn random_pure_state<R: Rng + ?Sized>(
        len: usize,
        parities: &[Sign],
        charge_conserving: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if len == 0 || len % 2 == 1 {
            return invalid(format!("Majorana count must be even and positive, got {len}"));
        }
        if parities.len() != len / 2 {
            return invalid(format!("expected {} parities, got {}", len / 2, parities.len()));
        }
        let base = Self::product_state(parities);
        let v = if charge_conserving {
            let total: f64 = parities.iter().map(|p| p.value()).sum();
            if total != 0.0 {
                return invalid("charge-conserving initialization needs parities summing to zero");
            }
            embed_unitary(&haar_unitary(len / 2, rng))
        } else {
            haar_orthogonal(len, rng)
        };
        let g = &v * base.gamma * v.transpose();
        Ok(Self::from_antisymmetric_unchecked(g))
    }

    pub fn len(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.nrows() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.gamma
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[(i, j)]
    }

    /// Restriction `Γ_A` to an ordered subset of indices.
    pub fn restrict(&self, indices: &[usize]) -> DMatrix<f64> {
        let n = indices.len();
        DMatrix::from_fn(n, n, |a, b| self.gamma[(indices[a], indices[b])])
    }

    /// `‖Γ² + 𝟙‖_max`.
    pub fn purity_defect(&self) -> f64 {
        let mut sq = &self.gamma * &self.gamma;
        for k in 0..self.len() {
            sq[(k, k)] += 1.0;
        }
        sq.amax()
    }

    /// `‖Γ + Γᵀ‖_max`; zero by construction.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.gamma + self.gamma.transpose()).amax()
    }

    pub fn max_singular_value(&self) -> f64 {
        let gtg = self.gamma.transpose() * &self.gamma;
        let m = (&gtg + gtg.transpose()) * 0.5;
        m.symmetric_eigenvalues().max().max(0.0).sqrt()
    }

    /// Checks antisymmetry and the singular-value bound.
    pub fn check_invariants(&self) -> Result<()> {
        let a = self.antisymmetry_defect();
        if a != 0.0 {
            return Err(Error::InvariantViolation(format!("antisymmetry defect {a:e}")));
        }
        let s = self.max_singular_value();
        if s > 1.0 + SINGULAR_VALUE_SLACK {
            return Err(Error::InvariantViolation(format!("singular value {s} exceeds 1")));
        }
        Ok(())
    }

    /// Total charge `Σ_x (1 − Γ_{a_x b_x})/2` for complex modes built from `(a_x, b_x)`.
    pub fn charge_expectation(&self, modes: &[(usize, usize)]) -> f64 {
        modes
            .iter()
            .map(|&(a, b)| 0.5 * (1.0 - self.gamma[(a, b)]))
            .sum()
    }

    /// Charge with the default pairing `(2x, 2x+1)`.
    pub fn charge(&self) -> f64 {
        (0..self.len() / 2)
            .map(|x| 0.5 * (1.0 - self.gamma[(2 * x, 2 * x + 1)]))
            .sum()
    }

    /// Applies `exp(θ γ_i γ_j)`: a rotation by `2θ` in the `(i, j)` plane.
    pub fn apply_rotation(&mut self, i: usize, j: usize, theta: f64) -> Result<()> {
        check_pair(self.len(), i, j)?;
        let (s, c) = (2.0 * theta).sin_cos();
        let n = self.len();
        let g = &mut self.gamma;
        for k in 0..n {
            let (ri, rj) = (g[(i, k)], g[(j, k)]);
            g[(i, k)] = c * ri + s * rj;
            g[(j, k)] = c * rj - s * ri;
        }
        for k in 0..n {
            let (ci, cj) = (g[(k, i)], g[(k, j)]);
            g[(k, i)] = c * ci + s * cj;
            g[(k, j)] = c * cj - s * ci;
        }
        g[(i, i)] = 0.0;
        g[(j, j)] = 0.0;
        let v = g[(i, j)];
        g[(j, i)] = -v;
        Ok(())
    }

    /// `Γ → R Γ Rᵀ` on the given support, `R` orthogonal of size `|support|`.
    pub fn apply_orthogonal(&mut self, support: &[usize], r: &DMatrix<f64>) -> Result<()> {
        check_support(self.len(), support)?;
        let s = support.len();
        if r.nrows() != s || r.ncols() != s {
            return invalid("rotation size does not match support");
        }
        let n = self.len();
        let rows = DMatrix::from_fn(s, n, |a, k| self.gamma[(support[a], k)]);
        let new_rows = r * rows;
        for a in 0..s {
            for k in 0..n {
                self.gamma[(support[a], k)] = new_rows[(a, k)];
            }
        }
        let cols = DMatrix::from_fn(n, s, |k, a| self.gamma[(k, support[a])]);
        let new_cols = cols * r.transpose();
        for a in 0..s {
            for k in 0..n {
                self.gamma[(k, support[a])] = new_cols[(k, a)];
            }
        }
        self.resymmetrize_rows(support);
        Ok(())
    }

    /// Mirrors the support rows onto the support columns.
    fn resymmetrize_rows(&mut self, support: &[usize]) {
        let n = self.len();
        for &a in support {
            for k in 0..n {
                if support.contains(&k) && a > k {
                    continue;
                }
                let v = if a == k { 0.0 } else { self.gamma[(a, k)] };
                self.gamma[(a, k)] = v;
                self.gamma[(k, a)] = -v;
            }
        }
    }

    /// Born probabilities `p_± = (1 ± Γ_ij)/2` of measuring `i γ_i γ_j`.
    pub fn parity_probability(&self, i: usize, j: usize) -> Result<(f64, f64)> {
        check_pair(self.len(), i, j)?;
        let g = self.gamma[(i, j)];
        if g.abs() > 1.0 + SINGULAR_VALUE_SLACK {
            return Err(Error::InvariantViolation(format!("|Γ_{i}{j}| = {} > 1", g.abs())));
        }
        let g = g.clamp(-1.0, 1.0);
        let p_plus = 0.5 * (1.0 + g);
        Ok((p_plus, 1.0 - p_plus))
    }

    /// Conditions the state on the outcome `i γ_i γ_j = outcome`.
    pub fn project_parity(&mut self, i: usize, j: usize, outcome: Sign) -> Result<()> {
        let (pp, pm) = self.parity_probability(i, j)?;
        let p = if outcome == Sign::Plus { pp } else { pm };
        if p < ANNIHILATION_THRESHOLD {
            return Err(Error::AnnihilatedTrajectory { weight: p });
        }
        let s = outcome.value();
        let kappa = s / (2.0 * p);
        let u = DMatrix::from_fn(self.len(), 2, |k, c| self.gamma[(k, if c == 0 { i } else { j })]);
        let w = DMatrix::from_row_slice(2, 2, &[0.0, -kappa, kappa, 0.0]);
        self.antisym_update(&u, &w);
        let n = self.len();
        for k in 0..n {
            for m in [i, j] {
                self.gamma[(m, k)] = 0.0;
                self.gamma[(k, m)] = 0.0;
            }
        }
        self.gamma[(i, j)] = s;
        self.gamma[(j, i)] = -s;
        Ok(())
    }

    /// `Γ += U W Uᵀ` for antisymmetric `W`, computed on the upper triangle and mirrored.
    fn antisym_update(&mut self, u: &DMatrix<f64>, w: &DMatrix<f64>) {
        let n = self.len();
        let r = u.ncols();
        let y = u * w;
        let g = self.gamma.as_mut_slice();
        for j in 0..n {
            let col = &mut g[j * n..j * n + j];
            for k in 0..r {
                let ujk = u[(j, k)];
                if ujk == 0.0 {
                    continue;
                }
                let yk = &y.as_slice()[k * n..k * n + j];
                for (gij, &yik) in col.iter_mut().zip(yk) {
                    *gij += yik * ujk;
                }
            }
        }
        for j in 0..n {
            g[j * n + j] = 0.0;
            for i in 0..j {
                g[i * n + j] = -g[j * n + i];
            }
        }
    }

    /// Born weight `⟨K†K⟩` of a Gaussian operator acting on `support`.
    pub fn born_weight(&self, op: &OperatorCovariance, support: &[usize]) -> Result<f64> {
        check_support(self.len(), support)?;
        if op.support_len() != support.len() {
            return invalid("operator support size mismatch");
        }
        let g = self.restrict(support);
        let s = support.len();
        let m = DMatrix::<f64>::identity(s, s) - g * op.effect();
        let det = m.determinant();
        Ok(op.weight() * det.max(0.0).sqrt())
    }

    /// Applies a Gaussian operator via its Choi covariance and renormalizes:
    /// `Γ' = Γ_ηη + Γ_ηξ (Γ_ξξ + Γ⁻¹)⁻¹ Γ_ηξᵀ`, with the gate acting as the
    /// identity off its support.
    ///
    /// Only the support rows and columns and a rank-`s` correction of the
    /// rest are touched, so the cost is `O(L² s)`.
    pub fn contract(&mut self, op: &OperatorCovariance, support: &[usize]) -> Result<()> {
        check_support(self.len(), support)?;
        let s = support.len();
        if op.support_len() != s {
            return invalid("operator support size mismatch");
        }
        let (g_out, g_cross, g_in) = (op.eta_eta(), op.eta_xi(), op.xi_xi());
        let id = DMatrix::<f64>::identity(s, s);
        let gss = self.restrict(support);
        let inner = &id + &gss * &g_in;
        let inner_t = &id + &g_in * &gss;
        let x = invert_checked(inner)?;
        let xt = invert_checked(inner_t)?;

        let out_ss = &g_out + &g_cross * &x * &gss * g_cross.transpose();
        let w = {
            let raw = &g_in * &x;
            (&raw - raw.transpose()) * 0.5
        };
        let n = self.len();
        let u = DMatrix::from_fn(n, s, |k, a| self.gamma[(k, support[a])]);
        let new_cols = &u * (&xt * g_cross.transpose());
        self.antisym_update(&u, &w);
        for a in 0..s {
            for k in 0..n {
                let v = new_cols[(k, a)];
                self.gamma[(k, support[a])] = v;
                self.gamma[(support[a], k)] = -v;
            }
        }
        for a in 0..s {
            for b in 0..s {
                let v = 0.5 * (out_ss[(a, b)] - out_ss[(b, a)]);
                self.gamma[(support[a], support[b])] = v;
            }
        }
        Ok(())
    }

    /// Reference implementation of [`contract`](Self::contract) using the full
    /// `L × L` Choi embedding and a numerical inverse of `Γ`.
    pub fn contract_dense_reference(&self, op: &OperatorCovariance, support: &[usize]) -> Result<Self> {
        check_support(self.len(), support)?;
        let n = self.len();
        let s = support.len();
        let (g_out, g_cross, g_in) = (op.eta_eta(), op.eta_xi(), op.xi_xi());
        let mut a_out = DMatrix::<f64>::zeros(n, n);
        let mut a_in = DMatrix::<f64>::zeros(n, n);
        let mut a_cross = DMatrix::<f64>::identity(n, n);
        for &m in support {
            a_cross[(m, m)] = 0.0;
        }
        for a in 0..s {
            for b in 0..s {
                a_out[(support[a], support[b])] = g_out[(a, b)];
                a_in[(support[a], support[b])] = g_in[(a, b)];
                a_cross[(support[a], support[b])] = g_cross[(a, b)];
            }
        }
        let gamma_inv = invert_checked(self.gamma.clone())?;
        let inner = invert_checked(a_in + gamma_inv)?;
        let out = a_out + &a_cross * inner * a_cross.transpose();
        Ok(Self::from_antisymmetric_unchecked(out))
    }

    /// Projects onto the nearest pure state, `Γ (ΓᵀΓ)^{-1/2}`, via a symmetric
    /// eigendecomposition, and reports the pair parities it snapped.
    pub fn purify(&mut self) -> Result<PurityReport> {
        let gtg = self.gamma.transpose() * &self.gamma;
        let eig = nalgebra::SymmetricEigen::new(gtg);
        let mut mags: Vec<f64> = eig.eigenvalues.iter().map(|&m| m.max(0.0).sqrt()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pi_values: Vec<f64> = mags.iter().step_by(2).copied().collect();
        let min_pi = pi_values.first().copied().unwrap_or(1.0);
        if min_pi < 0.5 {
            return Err(Error::TooMixed { min_pi });
        }
        let max_deviation = pi_values.iter().map(|p| (1.0 - p).abs()).fold(0.0, f64::max);
        let q = &eig.eigenvectors;
        let scale = DMatrix::from_diagonal(&eig.eigenvalues.map(|m| 1.0 / m.sqrt()));
        let g = &self.gamma * q * scale * q.transpose();
        self.gamma = (&g - g.transpose()) * 0.5;
        Ok(PurityReport {
            pi_values,
            max_deviation,
        })
    }

    /// Cheap purification by Newton-Schulz iteration on the polar factor.
    ///
    /// Returns the purity defect measured before the first iteration. Falls
    /// back to [`purify`](Self::purify) when the state is far from pure.
    pub fn polish(&mut self) -> Result<f64> {
        let n = self.len();
        let mut sq = &self.gamma * &self.gamma;
        let mut defect = purity_defect_of(&sq);
        let before = defect;
        if defect > 0.1 {
            self.purify()?;
            return Ok(before);
        }
        for _ in 0..8 {
            if defect < 1e-14 {
                break;
            }
            // X ← X (3 + X²)/2, the Newton-Schulz step for antisymmetric X.
            for k in 0..n {
                sq[(k, k)] += 3.0;
            }
            let next = &self.gamma * &sq * 0.5;
            self.gamma = (&next - next.transpose()) * 0.5;
            sq = &self.gamma * &self.gamma;
            defect = purity_defect_of(&sq);
        }
        Ok(before)
    }

    /// Row-major `f64` dump preceded by an 8-byte little-endian `L`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.len();
        w.write_all(&(n as u64).to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                w.write_all(&self.gamma[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let n = u64::from_le_bytes(head) as usize;
        let mut m = DMatrix::zeros(n, n);
        let mut buf = [0u8; 8];
        for i in 0..n {
            for j in 0..n {
                r.read_exact(&mut buf).map_err(|e| Error::InvalidInput(e.to_string()))?;
                m[(i, j)] = f64::from_le_bytes(buf);
            }
        }
        Self::from_matrix(m)
    }

    /// CSV text form: one row of `Γ` per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let row: Vec<String> = (0..self.len())
                .map(|j| crate::output::format_float(self.gamma[(i, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn purity_defect_of(sq: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..sq.ncols() {
        for i in 0..sq.nrows() {
            let v = if i == j { sq[(i, j)] + 1.0 } else { sq[(i, j)] };
            worst = worst.max(v.abs());
        }
    }
    worst
}

fn invert_checked(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = m.amax().max(1.0);
    let lu = m.lu();
    let diag_min = lu.u().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let rcond = diag_min / norm;
    if !(rcond > RCOND_THRESHOLD) {
        return Err(Error::IllConditioned { rcond });
    }
    lu.try_inverse().ok_or(Error::IllConditioned { rcond: 0.0 })
}
