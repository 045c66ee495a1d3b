//! Drivers built on the summation core.

pub mod bve;
pub mod greens;
pub mod harmonics;
pub mod metrics;
pub mod sal;

pub use bve::{BveConfig, BveInitial, BveSolver, BveState};
pub use greens::solve_greens;
pub use harmonics::real_sph_harm;
pub use metrics::{loglog_slope, relative_l2_error};
pub use sal::sal_potential;
