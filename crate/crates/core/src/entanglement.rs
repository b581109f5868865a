//! Entanglement diagnostics of Gaussian states.
//!
//! For a region `A` with restriction `Γ_A`, the eigenvalues `μ_k` of
//! `Γ_Aᵀ Γ_A` come in degenerate pairs `λ²` (one extra zero for odd regions).
//! Each eigenvector carries half of the binary entropy `h(λ)` of its pair, so
//! that `S_A = Σ_k h(√μ_k)/2` and the contour is `s_A(i) = Σ_k h(√μ_k)/2 · Q_ik²`.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::error::{invalid, Error, Result};

/// Spectral slack on `|λ| ≤ 1` before an invariant violation is raised.
pub const SPECTRUM_SLACK: f64 = 1e-6;

/// A labelled set of Majorana indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub indices: Vec<usize>,
    pub label: String,
}

impl RegionSpec {
    pub fn new(indices: Vec<usize>, label: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        if let Some(&d) = indices.iter().find(|&&i| !seen.insert(i)) {
            return invalid(format!("region index {d} repeated"));
        }
        Ok(Self {
            indices,
            label: label.into(),
        })
    }

    /// `len` consecutive indices starting at `start`, wrapping modulo `period`.
    pub fn contiguous(start: usize, len: usize, period: usize, label: impl Into<String>) -> Result<Self> {
        if len > period {
            return invalid(format!("region of length {len} exceeds period {period}"));
        }
        Self::new((0..len).map(|k| (start + k) % period).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Disjoint union with another region.
    pub fn union(&self, other: &RegionSpec) -> Result<RegionSpec> {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        RegionSpec::new(indices, format!("{}∪{}", self.label, other.label))
    }

    fn check(&self, state: &CovarianceMatrix) -> Result<()> {
        if let Some(&i) = self.indices.iter().find(|&&i| i >= state.len()) {
            return invalid(format!(
                "region '{}' index {i} outside {} Majoranas",
                self.label,
                state.len()
            ));
        }
        Ok(())
    }
}

/// Per-index entanglement contour of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourVector {
    /// `s_A(i)` in the order of the region's indices.
    pub values: Vec<f64>,
    pub total: f64,
}

impl ContourVector {
    /// Sum of the entries whose region position lies in `positions`.
    pub fn window_sum(&self, positions: impl IntoIterator<Item = usize>) -> f64 {
        positions.into_iter().map(|p| self.values[p]).sum()
    }
}

/// Binary entropy of the pair parameter `λ ∈ [0, 1]`, natural log.
pub fn binary_entropy(lambda: f64) -> f64 {
    let l = lambda.abs().clamp(0.0, 1.0);
    let q = 0.5 * (1.0 + l);
    let p = 1.0 - q;
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(q) + term(p)
}

fn pair_parameters(mu: impl Iterator<Item = f64>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for m in mu {
        let lambda = m.max(0.0).sqrt();
        if lambda > 1.0 + SPECTRUM_SLACK {
            return Err(Error::InvariantViolation(format!(
                "restricted covariance has |λ| = {lambda} > 1"
            )));
        }
        out.push(lambda.min(1.0));
    }
    Ok(out)
}

fn gram(sub: &DMatrix<f64>) -> DMatrix<f64> {
    let g = sub.transpose() * sub;
    (&g + g.transpose()) * 0.5
}

/// Entropy of the Majoranas at `indices` (no validation).
pub fn entropy_of(state: &CovarianceMatrix, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let sub = state.restrict(indices);
    let mu = gram(&sub).symmetric_eigenvalues();
    let lambdas = pair_parameters(mu.iter().copied())?;
    Ok(lambdas.iter().map(|&l| 0.5 * binary_entropy(l)).sum::<f64>().max(0.0))
}

/// Von Neumann entropy `S_A` (natural log).
pub fn entropy(state: &CovarianceMatrix, region: &RegionSpec) -> Result<f64> {
    region.check(state)?;
    entropy_of(state, &region.indices)
}

/// Entanglement contour: diagonal of `f(Γ_A)` in the region's index order.
pub fn contour(state: &CovarianceMatrix, region: &RegionSpec) -> Result<ContourVector> {
    region.check(state)?;
    let n = region.len();
    if n == 0 {
        return Ok(ContourVector {
            values: vec![],
            total: 0.0,
        });
    }
    let sub = state.restrict(&region.indices);
    let eig = SymmetricEigen::new(gram(&sub));
    let lambdas = pair_parameters(eig.eigenvalues.iter().copied())?;
    let weights: Vec<f64> = lambdas.iter().map(|&l| 0.5 * binary_entropy(l)).collect();
    let q = &eig.eigenvectors;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| weights[k] * q[(i, k)] * q[(i, k)])
                .sum::<f64>()
                .max(0.0)
        })
        .collect();
    let total = values.iter().sum();
    Ok(ContourVector { values, total })
}

/// `I_{A,B} = S_A + S_B − S_{A∪B}` for disjoint regions.
pub fn mutual_information(state: &CovarianceMatrix, a: &RegionSpec, b: &RegionSpec) -> Result<f64> {
    a.check(state)?;
    b.check(state)?;
    let set: HashSet<usize> = a.indices.iter().copied().collect();
    if b.indices.iter().any(|i| set.contains(i)) {
        return invalid(format!("regions '{}' and '{}' overlap", a.label, b.label));
    }
    let union = a.union(b)?;
    let sa = entropy_of(state, &a.indices)?;
    let sb = entropy_of(state, &b.indices)?;
    let sab = entropy_of(state, &union.indices)?;
    Ok(sa + sb - sab)
}
