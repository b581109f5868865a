//! Covariance-matrix simulation of monitored free-fermion circuits.
//!
//! States are fermionic Gaussian states on `L` Majorana modes, represented by
//! their real antisymmetric covariance matrix `Γ_ij = i⟨[γ_i, γ_j]⟩/2`.
//! All Majorana indices are 0-based. Complex mode `x` is built from the pair
//! `(γ_{2x}, γ_{2x+1})` with
//!
//! ```text
//! γ_{2x}   = c_x + c_x†
//! γ_{2x+1} = i (c_x − c_x†)
//! ```
//!
//! so that `i γ_{2x} γ_{2x+1} = 1 − 2 n_x` and an empty mode has `Γ_{2x,2x+1} = +1`.
//!
//! Module map:
//! - [`fock`]: dense many-body reference simulator for at most 12 Majoranas.
//! - [`covariance`]: the production engine (initialization, contraction, measurements).
//! - [`entanglement`]: entropy, contour and mutual information.
//! - [`gates`]: Kraus ensembles and trajectory samplers for classes DIII, AIII and A.
//! - [`schedules`]: geometries and spacetime programs.
//! - [`experiments`]: trajectory runner and ensemble drivers.
//! - [`validation`]: trajectory-matched comparison against the dense simulator.

pub mod covariance;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gates;
pub mod output;
pub mod rng;
pub mod schedules;
pub mod validation;

pub use covariance::{CovarianceMatrix, OperatorCovariance, PurityReport};
pub use entanglement::{ContourVector, RegionSpec};
pub use error::{Error, Result};
pub use gates::{GateSpec, SampledOutcome};

use serde::{Deserialize, Serialize};

/// A measurement outcome or Kraus branch sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_value(v: f64) -> Result<Sign> {
        if v == 1.0 {
            Ok(Sign::Plus)
        } else if v == -1.0 {
            Ok(Sign::Minus)
        } else {
            Err(Error::InvalidInput(format!("sign must be ±1, got {v}")))
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        self.flip()
    }
}
