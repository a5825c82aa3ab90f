//! Galerkin finite-element pricing of European calls under Leland's
//! transaction-cost model.
//!
//! The price is computed in log-price/time-to-expiry coordinates, where the model
//! becomes `u_τ = u_xx − u_x + Le·|u_xx − u_x|`, using P1 or P2 elements on
//! `[−R, R]`, a mixed formulation for `v = u_xx − u_x`, and a θ-scheme with a
//! lagged `|v|` and backward-Euler startup steps.

pub mod assembly;
pub mod banded;
pub mod convergence;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod mesh;
pub mod model;
pub mod oracles;
pub mod quadrature;
pub mod stability;
pub mod timestepper;

pub use assembly::{GlobalSystem, VRows};
pub use convergence::{study, RatioRule, Reference, RefinementStudy, StudyConfig};
pub use banded::{solve_banded, BandedMatrix};
pub use elements::{p1_matrices, p2_matrices, verify_by_quadrature, ElementMatrices};
pub use error::{Error, Result};
pub use experiment::{compute_experiment, list_presets, preset, run_experiment, Discretization, ExperimentResult, RunConfig};
pub use mesh::{ElementOrder, Mesh1D};
pub use model::{MarketParams, PriceCurve, TransformConstants};
pub use stability::{analyze, ratio_check, RatioAdvisory, StabilityConfig, StabilityReport};
pub use oracles::{bs_call_adjusted, bs_call_closed_form, fdm_solve, FdmConfig};
pub use timestepper::{price_curve_at, run, step, MassVariant, SchemeConfig, SolutionHistory};
