//! Self-attraction and loading potential of a sea-surface height field.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kernels::{Sal, SalParams};
use crate::summation::{fast_sum, Method, SumReport, TraversalConfig};

/// Tree settings used for SAL by default: θ = 0.7, degree 2.
pub fn default_sal_config() -> TraversalConfig {
    TraversalConfig { mac: 0.7, degree: 2, leaf_size: None, shrink: true, method: Method::Csfmm }
}

/// `η_SAL(x_i) = Σ_j G_SAL(x_i, x_j) η(x_j) A_j`, skipping the self term.
pub fn sal_potential(
    points: &[Vec3],
    areas: &[f64],
    ssh: &[f64],
    params: SalParams,
    cfg: &TraversalConfig,
) -> Result<(Vec<f64>, SumReport)> {
    if areas.len() != points.len() {
        return Err(Error::InputFormat(format!("{} points but {} cell areas", points.len(), areas.len())));
    }
    if ssh.len() != points.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: ssh.len() });
    }
    let weights: Vec<f64> = ssh.iter().zip(areas).map(|(h, a)| h * a).collect();
    fast_sum(points, points, &weights, &Sal::new(params), cfg)
}
