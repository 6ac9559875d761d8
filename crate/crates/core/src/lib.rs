//! Third-order inertial gradient dynamics for convex minimization.
//!
//! The crate is organised bottom-up:
//!
//! * [`problems`]: convex test objectives with hand-coded oracles and
//!   finite-difference checkers.
//! * [`moreau`]: proximal mappings and the Moreau envelope, used to smooth
//!   nonsmooth objectives.
//! * [`dynamics`]: each evolution system written as an explicit first-order
//!   vector field on `(u, u̇, ü)` (or `(x, ẋ)` for the second-order systems),
//!   plus the change-of-variable points and reduction residuals.
//! * [`integrator`]: an embedded Dormand–Prince 5(4) integrator with
//!   proportional-integral step control and dense output.
//! * [`diagnostics`]: gap series, Lyapunov energies, log-log rate fits,
//!   monotonicity and integral checks along trajectories.
//!
//! The crate is `no_std` (it needs `alloc`); file formats and the experiment
//! runner live in the companion `toges` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(a < b)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod integrator;
pub(crate) mod linalg;
pub mod moreau;
pub mod problems;

pub use diagnostics::{
    check_monotone, distance_to_argmin_series, energy_report, fit_rate, gap_series,
    grad_integral, lyapunov_e, lyapunov_sc, EnergyForms, EnergyReport, GapSelector, GapSeries,
    RateEstimate, StrongConvexityBounds, Violation,
};
pub use dynamics::{
    aux_point_v, aux_point_y, field, rescale_equivalence, residual_reduction, DynamicsConfig,
    PhaseState, SystemKind,
};
pub use error::Error;
pub use integrator::{integrate, log_grid, sample_at, IntegratorConfig, Sample, Trajectory};
pub use moreau::{moreau_grad, moreau_value, regularize, AbsSum, BoxIndicator, ProxOracle};
pub use problems::{builtin_problem, check_gradient, check_hvp, Builtin, Objective, Scaled};

pub type Result<T, E = Error> = core::result::Result<T, E>;
