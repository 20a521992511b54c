//! Finite-population estimation with two auxiliary variables under simple
//! random sampling without replacement (SRSWOR).
//!
//! * [`moments`]: population means, central cross-moments, the `L1..L4`
//!   coefficients and the expectation terms `V_pqr = E[e0^p e1^q e2^r]`.
//! * [`estimators`]: the five ratio/product/exponential estimator families.
//! * [`approximation`]: first- and second-order Taylor bias/MSE, optimal
//!   parameters, the regression benchmark.
//! * [`simulation`]: exact enumeration and seeded Monte Carlo ground truth.

pub mod approximation;
pub mod combin;
pub mod error;
pub mod estimators;
pub mod moments;
pub mod poly;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{EstimatorSpec, Family, SampleView};
pub use moments::{Means, Population, Powers, Provenance, VTable};
