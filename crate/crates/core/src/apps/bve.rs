//! Lagrangian vortex method for the barotropic vorticity equation.
//!
//! Particles carry relative vorticity and move with the Biot-Savart velocity.
//! Absolute vorticity `ζ + 2Ωz` is conserved along trajectories, so each RK4
//! stage recovers `ζ` from the stage position. After every step the conserved
//! quantities are refitted onto the original grid centres with a local
//! quadratic least-squares fit, and the particles return to those centres.

use std::f64::consts::PI;
use std::str::FromStr;

use kiddo::{KdTree, SquaredEuclidean};
use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apps::metrics::relative_l2_error;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::SphericalGrid;
use crate::kernels::BiotSavart;
use crate::summation::{fast_sum, Method, TraversalConfig};

/// Earth's rotation rate in radians per day.
pub const EARTH_OMEGA: f64 = 2.0 * PI;

/// Neighbours per remeshing stencil, the originating particle included.
pub const DEFAULT_STENCIL: usize = 12;

#[derive(Clone, Debug)]
pub struct BveState {
    pub positions: Vec<Vec3>,
    /// Relative vorticity, 1/day.
    pub zeta: Vec<f64>,
    pub areas: Vec<f64>,
    pub tracer: Option<Vec<f64>>,
    pub omega: f64,
    /// Days.
    pub time: f64,
}

impl BveState {
    /// Samples `zeta0` at the grid centres.
    pub fn from_fn(grid: &SphericalGrid, omega: f64, zeta0: impl Fn(Vec3) -> f64) -> Self {
        BveState {
            positions: grid.centers.clone(),
            zeta: grid.centers.iter().map(|&p| zeta0(p)).collect(),
            areas: grid.areas.clone(),
            tracer: None,
            omega,
            time: 0.0,
        }
    }

    /// Adds the tracer `q₀ = z`.
    pub fn with_z_tracer(mut self) -> Self {
        self.tracer = Some(self.positions.iter().map(|p| p.z).collect());
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `ζ_i + 2Ω z_i`.
    pub fn absolute_vorticity(&self) -> Vec<f64> {
        self.zeta.iter().zip(&self.positions).map(|(z, p)| z + 2.0 * self.omega * p.z).collect()
    }

    pub fn total_vorticity(&self) -> f64 {
        self.zeta.iter().zip(&self.areas).map(|(z, a)| z * a).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BveInitial {
    RossbyHaurwitz,
    GaussianVortex,
}

impl FromStr for BveInitial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rossby_haurwitz" | "rh" => Ok(BveInitial::RossbyHaurwitz),
            "gaussian_vortex" | "gaussian" | "gv" => Ok(BveInitial::GaussianVortex),
            other => Err(Error::Config(format!("unknown initial condition `{other}`"))),
        }
    }
}

impl BveInitial {
    pub fn name(self) -> &'static str {
        match self {
            BveInitial::RossbyHaurwitz => "rossby_haurwitz",
            BveInitial::GaussianVortex => "gaussian_vortex",
        }
    }

    pub fn zeta(self, p: Vec3) -> f64 {
        match self {
            BveInitial::RossbyHaurwitz => rossby_haurwitz(p),
            BveInitial::GaussianVortex => gaussian_vortex(p),
        }
    }

    /// Initial state on `grid` with `Ω = 2π/day`.
    pub fn state(self, grid: &SphericalGrid) -> BveState {
        BveState::from_fn(grid, EARTH_OMEGA, |p| self.zeta(p))
    }
}

/// `(2π/7) sinθ + 30 sinθ cos⁴θ cos 4λ` with θ the latitude.
pub fn rossby_haurwitz(p: Vec3) -> f64 {
    let (lon, lat) = p.lon_lat();
    let (s, c) = lat.sin_cos();
    2.0 * PI / 7.0 * s + 30.0 * s * c.powi(4) * (4.0 * lon).cos()
}

pub fn gaussian_vortex_center() -> Vec3 {
    Vec3::from_lon_lat(0.0, PI / 20.0)
}

/// `4π exp(−16|x − x_c|²) − 0.196353`.
pub fn gaussian_vortex(p: Vec3) -> f64 {
    4.0 * PI * (-16.0 * p.dist_sq(gaussian_vortex_center())).exp() - 0.196353
}

/// Local fit used when remeshing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemeshFit {
    /// 5-term quadratic forced through the particle that left the centre,
    /// least squares over that particle's original neighbours.
    #[default]
    Pinned,
    /// Full 6-term quadratic, least squares over the nearest moved particles.
    LeastSquares,
}

impl FromStr for RemeshFit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "least_squares" | "ls" => Ok(RemeshFit::LeastSquares),
            "pinned" => Ok(RemeshFit::Pinned),
            other => Err(Error::Config(format!("unknown remeshing fit `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BveConfig {
    pub sum: TraversalConfig,
    pub remesh: bool,
    pub fit: RemeshFit,
    pub stencil: usize,
}

impl Default for BveConfig {
    fn default() -> Self {
        BveConfig { sum: TraversalConfig::default(), remesh: true, fit: RemeshFit::default(), stencil: DEFAULT_STENCIL }
    }
}

/// Stepper tied to the grid the particles are remeshed onto.
pub struct BveSolver {
    pub cfg: BveConfig,
    centers: Vec<Vec3>,
    frames: Vec<(Vec3, Vec3)>,
    stencils: Vec<Vec<u32>>,
}

impl BveSolver {
    pub fn new(grid: &SphericalGrid, cfg: BveConfig) -> Result<Self> {
        if cfg.stencil < 6 {
            return Err(Error::Config("remeshing stencil needs at least 6 points".into()));
        }
        cfg.sum.validate()?;
        let centers = grid.centers.clone();
        let mut tree: KdTree<f64, 3> = KdTree::new();
        for (i, p) in centers.iter().enumerate() {
            tree.add(&p.to_array(), i as u64);
        }
        let k = cfg.stencil.min(centers.len());
        let stencils = centers
            .par_iter()
            .map(|p| tree.nearest_n::<SquaredEuclidean>(&p.to_array(), k).iter().map(|n| n.item as u32).collect())
            .collect();
        let frames = centers.iter().map(|&c| tangent_frame(c)).collect();
        Ok(BveSolver { cfg, centers, frames, stencils })
    }

    /// `dx_i/dt = Σ_j K_BS(x_i, x_j) ζ_j A_j`.
    pub fn velocity(&self, positions: &[Vec3], zeta: &[f64], areas: &[f64]) -> Result<Vec<Vec3>> {
        bve_velocity(positions, zeta, areas, &self.cfg.sum)
    }

    /// One RK4 step without remeshing.
    pub fn advect(&self, state: &BveState, dt: f64) -> Result<BveState> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let x0 = &state.positions;
        let two_omega = 2.0 * state.omega;
        let zeta_at = |x: &[Vec3]| -> Vec<f64> {
            state.zeta.iter().zip(x0).zip(x).map(|((z, p0), p)| z + two_omega * (p0.z - p.z)).collect()
        };
        let stage =
            |k: &[Vec3], h: f64| -> Vec<Vec3> { x0.iter().zip(k).map(|(&p, &v)| (p + v * h).normalized()).collect() };

        let k1 = self.velocity(x0, &state.zeta, &state.areas)?;
        let x1 = stage(&k1, 0.5 * dt);
        let k2 = self.velocity(&x1, &zeta_at(&x1), &state.areas)?;
        let x2 = stage(&k2, 0.5 * dt);
        let k3 = self.velocity(&x2, &zeta_at(&x2), &state.areas)?;
        let x3 = stage(&k3, dt);
        let k4 = self.velocity(&x3, &zeta_at(&x3), &state.areas)?;
        let positions: Vec<Vec3> = (0..x0.len())
            .map(|i| (x0[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0)).normalized())
            .collect();
        let zeta = zeta_at(&positions);
        Ok(BveState { positions, zeta, time: state.time + dt, ..state.clone() })
    }

    /// RK4 step followed by remeshing onto the grid (if enabled).
    pub fn step(&self, state: &BveState, dt: f64) -> Result<BveState> {
        if state.len() != self.centers.len() {
            return Err(Error::LengthMismatch { expected: self.centers.len(), got: state.len() });
        }
        let moved = self.advect(state, dt)?;
        if self.cfg.remesh {
            Ok(self.remesh(&moved))
        } else {
            Ok(moved)
        }
    }

    /// Refits absolute vorticity and tracer onto the grid centres and puts the
    /// particles back there. Particle `i` must have started at centre `i`.
    pub fn remesh(&self, state: &BveState) -> BveState {
        let two_omega = 2.0 * state.omega;
        let q = state.absolute_vorticity();
        let fields: Vec<&[f64]> = match &state.tracer {
            Some(t) => vec![&q, t],
            None => vec![&q],
        };
        let fitted: Vec<[f64; 2]> = match self.cfg.fit {
            RemeshFit::Pinned => {
                (0..self.centers.len()).into_par_iter().map(|i| self.fit_pinned(i, &state.positions, &fields)).collect()
            }
            RemeshFit::LeastSquares => {
                let mut tree: KdTree<f64, 3> = KdTree::new();
                for (i, p) in state.positions.iter().enumerate() {
                    tree.add(&p.to_array(), i as u64);
                }
                let k = self.cfg.stencil.min(state.len());
                (0..self.centers.len())
                    .into_par_iter()
                    .map(|i| {
                        let near: Vec<usize> = tree
                            .nearest_n::<SquaredEuclidean>(&self.centers[i].to_array(), k)
                            .iter()
                            .map(|n| n.item as usize)
                            .collect();
                        self.fit_free(i, &near, &state.positions, &fields)
                    })
                    .collect()
            }
        };
        let zeta = fitted.iter().zip(&self.centers).map(|(f, c)| f[0] - two_omega * c.z).collect();
        let tracer = state.tracer.as_ref().map(|_| fitted.iter().map(|f| f[1]).collect());
        BveState {
            positions: self.centers.clone(),
            zeta,
            tracer,
            areas: state.areas.clone(),
            omega: state.omega,
            time: state.time,
        }
    }

    /// Quadratic through particle `i`'s value, least squares over its stencil,
    /// evaluated at centre `i`. Coordinates are gnomonic in the tangent plane
    /// at the centre.
    fn fit_pinned(&self, i: usize, pos: &[Vec3], fields: &[&[f64]]) -> [f64; 2] {
        let c = self.centers[i];
        let (e1, e2) = self.frames[i];
        // Offsets from the centre's own projection so that it maps to exactly 0.
        let (c1, c2) = (c.dot(e1), c.dot(e2));
        let plane = |p: Vec3| {
            let d = p.dot(c);
            (p.dot(e1) / d - c1, p.dot(e2) / d - c2)
        };
        let (xi, yi) = plane(pos[i]);
        let coords: Vec<(usize, f64, f64)> = self.stencils[i]
            .iter()
            .map(|&j| j as usize)
            .filter(|&j| j != i)
            .map(|j| {
                let (x, y) = plane(pos[j]);
                (j, x, y)
            })
            .collect();
        let h = coords.iter().map(|&(_, x, y)| (x - xi).hypot(y - yi)).fold(0.0, f64::max);
        let mut out = [0.0; 2];
        for (f, vals) in fields.iter().enumerate() {
            out[f] = vals[i];
        }
        if h == 0.0 {
            return out;
        }
        let basis = |x: f64, y: f64| {
            let (x, y) = (x / h, y / h);
            SVector::<f64, 5>::new(x, y, x * x, x * y, y * y)
        };
        let bi = basis(xi, yi);
        let mut ata = SMatrix::<f64, 5, 5>::zeros();
        let mut atb = [SVector::<f64, 5>::zeros(); 2];
        for &(j, x, y) in &coords {
            let row = basis(x, y) - bi;
            ata += row * row.transpose();
            for (f, vals) in fields.iter().enumerate() {
                atb[f] += row * (vals[j] - vals[i]);
            }
        }
        let Some(chol) = ata.cholesky() else {
            return out;
        };
        // Value at the centre, where the basis vanishes.
        for f in 0..fields.len() {
            let beta = chol.solve(&atb[f]);
            out[f] = fields[f][i] - beta.dot(&bi);
        }
        out
    }

    /// Full quadratic in tangent-plane coordinates at centre `i`, least
    /// squares over the particles `near`, evaluated at the centre.
    fn fit_free(&self, i: usize, near: &[usize], pos: &[Vec3], fields: &[&[f64]]) -> [f64; 2] {
        let c = self.centers[i];
        let (e1, e2) = self.frames[i];
        let (c1, c2) = (c.dot(e1), c.dot(e2));
        let pts: Vec<(usize, f64, f64)> = near
            .iter()
            .map(|&j| {
                let d = pos[j].dot(c);
                (j, pos[j].dot(e1) / d - c1, pos[j].dot(e2) / d - c2)
            })
            .collect();
        let h = pts.iter().map(|&(_, x, y)| x.hypot(y)).fold(0.0, f64::max);
        let mut out = [0.0; 2];
        let nearest = pts[0].0;
        for (f, vals) in fields.iter().enumerate() {
            out[f] = vals[nearest];
        }
        if h == 0.0 {
            return out;
        }
        let mut ata = SMatrix::<f64, 6, 6>::zeros();
        let mut atb = [SVector::<f64, 6>::zeros(); 2];
        for &(j, x, y) in &pts {
            let (x, y) = (x / h, y / h);
            let row = SVector::<f64, 6>::from([1.0, x, y, x * x, x * y, y * y]);
            ata += row * row.transpose();
            for (f, vals) in fields.iter().enumerate() {
                atb[f] += row * vals[j];
            }
        }
        let Some(chol) = ata.cholesky() else {
            return out;
        };
        for f in 0..fields.len() {
            out[f] = chol.solve(&atb[f])[0];
        }
        out
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }
}

/// Orthonormal tangent vectors at `c`.
fn tangent_frame(c: Vec3) -> (Vec3, Vec3) {
    let helper = if c.z.abs() < 0.9 { Vec3::new(0.0, 0.0, 1.0) } else { Vec3::new(1.0, 0.0, 0.0) };
    let e1 = helper.cross(c).normalized();
    (e1, c.cross(e1))
}

/// Biot-Savart velocity of a particle set, self term omitted.
pub fn bve_velocity(positions: &[Vec3], zeta: &[f64], areas: &[f64], cfg: &TraversalConfig) -> Result<Vec<Vec3>> {
    if zeta.len() != positions.len() || areas.len() != positions.len() {
        return Err(Error::LengthMismatch { expected: positions.len(), got: zeta.len().min(areas.len()) });
    }
    let w: Vec<f64> = zeta.iter().zip(areas).map(|(z, a)| z * a).collect();
    if w.iter().all(|&v| v == 0.0) {
        return Ok(vec![Vec3::ZERO; positions.len()]);
    }
    Ok(fast_sum(positions, positions, &w, &BiotSavart, cfg)?.0)
}

/// Relative ℓ₂ vorticity error against a reference field on the same points.
pub fn vorticity_error(state: &BveState, exact: &[f64]) -> Result<f64> {
    relative_l2_error(&state.zeta, exact, exact, &state.areas)
}

/// Integrates `steps` steps of size `dt`, calling `observe` after each.
pub fn run(
    solver: &BveSolver,
    mut state: BveState,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(usize, &BveState),
) -> Result<BveState> {
    for k in 1..=steps {
        state = solver.step(&state, dt)?;
        observe(k, &state);
    }
    Ok(state)
}

/// Direct-sum configuration for reference runs.
pub fn direct_config() -> BveConfig {
    BveConfig { sum: TraversalConfig { method: Method::Direct, ..Default::default() }, ..Default::default() }
}
