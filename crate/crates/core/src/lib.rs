//! Numerical verification of subgaussian concentration for conjugate
//! posteriors, and the adaptive curator/analyst game built on it.
//!
//! The core math is generic over a scalar type: [`Scalar`] covers `f32`,
//! `f64` and exact rationals ([`BigRational`]), [`Real`] the two float
//! types. The aliases below fix the common instantiations.

pub mod conjecture;
pub mod dist;
pub mod error;
pub mod game;
pub mod martingale;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod subgaussian;

pub use num_rational::BigRational;

pub use dist::{BetaParams, DirichletParams, GammaParams, MomentSequence};
pub use error::{Error, Result};
pub use sampling::SeedSpec;
pub use scalar::{Real, Scalar};

pub type Beta = BetaParams<f64>;
pub type Beta32 = BetaParams<f32>;
pub type ExactBeta = BetaParams<BigRational>;
pub type Dirichlet = DirichletParams<f64>;
pub type ExactDirichlet = DirichletParams<BigRational>;
pub type Gamma = GammaParams<f64>;
pub type Moments = MomentSequence<f64>;
pub type ExactMoments = MomentSequence<BigRational>;
