//! Largest eigenvalues of sample covariance matrices with random weights:
//! the deterministic edge, its limit laws, spike tests and a multiplier
//! bootstrap for factor counts.
//!
//! Numerical code is generic over `f32`/`f64` through [`scalar::Real`]; the
//! aliases below fix the usual `f64` instantiation.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix_model;
pub mod population;
pub mod quadrature;
pub mod scalar;
pub mod seed;
pub mod special;
pub mod spike;
pub mod stats;
pub mod stieltjes;
pub mod weight_laws;

pub use error::{Error, Result};
pub use scalar::Real;

pub type WeightLaw64 = weight_laws::WeightLaw<f64>;
pub type WeightLaw32 = weight_laws::WeightLaw<f32>;
pub type PopulationSpec64 = population::PopulationSpec<f64>;
pub type PopulationSpec32 = population::PopulationSpec<f32>;
pub type SolverEnv64 = stieltjes::SolverEnv<f64>;
pub type SolverEnv32 = stieltjes::SolverEnv<f32>;
pub type EdgeReport64 = stieltjes::EdgeReport<f64>;
pub type DataSample64 = matrix_model::DataSample<f64>;
pub type DataSample32 = matrix_model::DataSample<f32>;
pub type Mat64 = linalg::Mat<f64>;
pub type SpikeTestConfig64 = spike::SpikeTestConfig<f64>;
pub type FactorTestConfig64 = bootstrap::FactorTestConfig<f64>;
