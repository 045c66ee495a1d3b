//! Poisson and biharmonic solves by convolution with the Green's function.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kernels::{Biharmonic, KernelKind, Laplace};
use crate::summation::{fast_sum, SumReport, TraversalConfig};

/// `φ(x_i) = Σ_j G(x_i, x_j) f(x_j) A_j` with the method in `cfg`.
pub fn solve_greens(
    points: &[Vec3],
    areas: &[f64],
    values: &[f64],
    kernel: KernelKind,
    cfg: &TraversalConfig,
) -> Result<(Vec<f64>, SumReport)> {
    if values.len() != points.len() || areas.len() != points.len() {
        let got = if values.len() != points.len() { values.len() } else { areas.len() };
        return Err(Error::LengthMismatch { expected: points.len(), got });
    }
    let weights: Vec<f64> = values.iter().zip(areas).map(|(f, a)| f * a).collect();
    match kernel {
        KernelKind::Laplace => {
            let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mean = weights.iter().sum::<f64>() / areas.iter().sum::<f64>();
            if mean.abs() > 1e-8 * max {
                log::warn!("Poisson data has nonzero mean {mean:e}; the solution is for f minus its mean");
            }
            fast_sum(points, points, &weights, &Laplace, cfg)
        }
        KernelKind::Biharmonic => fast_sum(points, points, &weights, &Biharmonic, cfg),
        other => Err(Error::Config(format!("{} is not a Green's function solver kernel", other.name()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apps::harmonics::real_sph_harm;
    use crate::apps::metrics::relative_l2_error;
    use crate::grid::{build_grid, GridKind};
    use crate::summation::Method;

    #[test]
    fn zero_field() {
        let g = build_grid(GridKind::CubedSphere, 2).unwrap();
        let f = vec![0.0; g.len()];
        let (phi, _) =
            solve_greens(&g.centers, &g.areas, &f, KernelKind::Laplace, &TraversalConfig::default()).unwrap();
        assert!(phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn y43_eigenvalues_level4() {
        let g = build_grid(GridKind::Icosahedral, 4).unwrap();
        let f: Vec<f64> = g.centers.iter().map(|&p| real_sph_harm(4, 3, p)).collect();
        let cfg = TraversalConfig { method: Method::Direct, ..Default::default() };
        for (kind, eig) in [(KernelKind::Laplace, 20.0), (KernelKind::Biharmonic, 400.0)] {
            let (phi, _) = solve_greens(&g.centers, &g.areas, &f, kind, &cfg).unwrap();
            let exact: Vec<f64> = f.iter().map(|v| v / eig).collect();
            let e = relative_l2_error(&phi, &exact, &exact, &g.areas).unwrap();
            // Dominated by the omitted self cell for Laplace.
            assert!(e < 0.1, "{kind:?}: {e}");
        }
    }

    #[test]
    fn rejects_other_kernels() {
        let g = build_grid(GridKind::CubedSphere, 1).unwrap();
        let f = vec![1.0; g.len()];
        assert!(solve_greens(&g.centers, &g.areas, &f, KernelKind::BiotSavart, &TraversalConfig::default()).is_err());
    }
}
