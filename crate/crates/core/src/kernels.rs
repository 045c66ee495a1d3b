//! Interaction kernels on the unit sphere.
//!
//! Every kernel is written in terms of the chordal distance `|x − y|`, using
//! `1 − x·y = |x − y|²/2` on the sphere; this keeps full relative precision for
//! nearby points where `1 − x·y` would cancel.

use std::f64::consts::PI;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dilog::dilog_unchecked;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Pairs with `1 − x·y` below this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-14;

const INV_4PI: f64 = 0.25 / PI;

/// Value type produced by a kernel: a scalar or a 3-vector.
pub trait Potential:
    Copy
    + Default
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + AddAssign
    + Mul<f64, Output = Self>
    + 'static
{
    const DIM: usize;
    fn component(&self, i: usize) -> f64;
    fn from_components(c: &[f64]) -> Self;

    fn norm_sq(&self) -> f64 {
        (0..Self::DIM).map(|i| self.component(i).powi(2)).sum()
    }
}

impl Potential for f64 {
    const DIM: usize = 1;

    #[inline]
    fn component(&self, _i: usize) -> f64 {
        *self
    }

    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl Potential for Vec3 {
    const DIM: usize = 3;

    #[inline]
    fn component(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn from_components(c: &[f64]) -> Self {
        Vec3::new(c[0], c[1], c[2])
    }
}

/// `true` when `x` and `y` are closer than the coincidence threshold.
#[inline]
pub fn coincident(x: Vec3, y: Vec3) -> bool {
    0.5 * x.dist_sq(y) < COINCIDENCE_TOL
}

/// A pairwise interaction kernel `K(x, y)` on the unit sphere.
pub trait Kernel: Send + Sync {
    type Output: Potential;

    /// Whether `K` blows up at `x = y`; such pairs are skipped in sums.
    const SINGULAR: bool;

    fn name(&self) -> &'static str;

    /// Evaluates `K(x, y)` without checking for coincident arguments.
    fn eval(&self, x: Vec3, y: Vec3) -> Self::Output;

    fn out_dim(&self) -> usize {
        Self::Output::DIM
    }

    fn singular_at_coincidence(&self) -> bool {
        Self::SINGULAR
    }

    fn try_eval(&self, x: Vec3, y: Vec3) -> Result<Self::Output> {
        if Self::SINGULAR && coincident(x, y) {
            Err(Error::Singular)
        } else {
            Ok(self.eval(x, y))
        }
    }

    /// `K(x, y)`, or zero for a skipped coincident pair.
    #[inline]
    fn eval_or_skip(&self, x: Vec3, y: Vec3) -> Self::Output {
        if Self::SINGULAR && coincident(x, y) {
            Self::Output::default()
        } else {
            self.eval(x, y)
        }
    }
}

/// Green's function of the Laplace–Beltrami operator, `−ln(1 − x·y)/4π`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Laplace;

impl Kernel for Laplace {
    type Output = f64;
    const SINGULAR: bool = true;

    fn name(&self) -> &'static str {
        "laplace"
    }

    #[inline]
    fn eval(&self, x: Vec3, y: Vec3) -> f64 {
        -INV_4PI * (0.5 * x.dist_sq(y)).ln()
    }
}

/// Biharmonic Green's function, `dilog((1 + x·y)/2)/4π`. Finite everywhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct Biharmonic;

impl Kernel for Biharmonic {
    type Output = f64;
    const SINGULAR: bool = false;

    fn name(&self) -> &'static str {
        "biharmonic"
    }

    #[inline]
    fn eval(&self, x: Vec3, y: Vec3) -> f64 {
        INV_4PI * dilog_unchecked((1.0 - 0.25 * x.dist_sq(y)).max(0.0))
    }
}

/// Spherical Biot–Savart kernel, `−(x × y) / (4π (1 − x·y))`.
#[derive(Clone, Copy, Debug, Default)]
pub struct BiotSavart;

impl Kernel for BiotSavart {
    type Output = Vec3;
    const SINGULAR: bool = true;

    fn name(&self) -> &'static str {
        "biot_savart"
    }

    #[inline]
    fn eval(&self, x: Vec3, y: Vec3) -> Vec3 {
        let s = -INV_4PI / (0.5 * x.dist_sq(y));
        x.cross(y) * s
    }
}

/// Which closed form of the self-attraction-and-loading kernel to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SalForm {
    /// Sum of the fitted Legendre series:
    /// `(1−b0)/γ − (a1−b1) ln(½γ(1 + ½γ))`, with `½γ = sin(θ/2)`.
    #[default]
    SeriesConsistent,
    /// `(1−b0)/γ − (a1−b1) ln(γ(1 + γ))` as commonly quoted.
    Published,
}

impl FromStr for SalForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" | "series_consistent" => Ok(SalForm::SeriesConsistent),
            "published" => Ok(SalForm::Published),
            other => Err(Error::Config(format!("unknown SAL form `{other}`"))),
        }
    }
}

/// Load Love number fit `k'_n ≈ a1/n`, `h'_n ≈ b0 + b1/n` and the
/// seawater-to-Earth density ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SalParams {
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub rho_ratio: f64,
    pub form: SalForm,
}

impl Default for SalParams {
    fn default() -> Self {
        SalParams { a1: -2.7, b0: -6.21196, b1: 6.1, rho_ratio: 1025.0 / 5517.0, form: SalForm::SeriesConsistent }
    }
}

impl SalParams {
    /// Coefficient `1 + k'_n − h'_n` of `P_n` in the fitted Legendre series.
    pub fn legendre_coefficient(&self, n: usize) -> f64 {
        if n == 0 {
            1.0 - self.b0
        } else {
            (1.0 - self.b0) + (self.a1 - self.b1) / n as f64
        }
    }

    /// Overall factor `3ρ_w / (4πρ_e)`.
    pub fn prefactor(&self) -> f64 {
        3.0 * self.rho_ratio * INV_4PI
    }
}

/// Self-attraction and loading kernel in closed form.
#[derive(Clone, Copy, Debug)]
pub struct Sal {
    pub params: SalParams,
    scale: f64,
    c_inv: f64,
    c_log: f64,
    log_arg: f64,
}

impl Sal {
    pub fn new(params: SalParams) -> Self {
        Sal {
            params,
            scale: params.prefactor(),
            c_inv: 1.0 - params.b0,
            c_log: params.a1 - params.b1,
            log_arg: match params.form {
                SalForm::SeriesConsistent => 0.5,
                SalForm::Published => 1.0,
            },
        }
    }
}

impl Default for Sal {
    fn default() -> Self {
        Sal::new(SalParams::default())
    }
}

impl Kernel for Sal {
    type Output = f64;
    const SINGULAR: bool = true;

    fn name(&self) -> &'static str {
        "sal"
    }

    #[inline]
    fn eval(&self, x: Vec3, y: Vec3) -> f64 {
        let gamma = x.dist(y);
        let s = self.log_arg * gamma;
        self.scale * (self.c_inv / gamma - self.c_log * (s * (1.0 + s)).ln())
    }
}

/// Kernel selection by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Laplace,
    Biharmonic,
    BiotSavart,
    Sal,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Laplace => "laplace",
            KernelKind::Biharmonic => "biharmonic",
            KernelKind::BiotSavart => "biot_savart",
            KernelKind::Sal => "sal",
        }
    }

    pub fn out_dim(self) -> usize {
        if self == KernelKind::BiotSavart {
            3
        } else {
            1
        }
    }

    pub fn singular_at_coincidence(self) -> bool {
        self != KernelKind::Biharmonic
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "laplace" => Ok(KernelKind::Laplace),
            "biharmonic" => Ok(KernelKind::Biharmonic),
            "biot_savart" | "biotsavart" | "bs" => Ok(KernelKind::BiotSavart),
            "sal" => Ok(KernelKind::Sal),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Checked single evaluations, mainly for callers outside the summation core.
pub fn eval_laplace(x: Vec3, y: Vec3) -> Result<f64> {
    Laplace.try_eval(x, y)
}

pub fn eval_biharmonic(x: Vec3, y: Vec3) -> f64 {
    Biharmonic.eval(x, y)
}

pub fn eval_biot_savart(x: Vec3, y: Vec3) -> Result<Vec3> {
    BiotSavart.try_eval(x, y)
}

pub fn eval_sal(x: Vec3, y: Vec3, params: SalParams) -> Result<f64> {
    Sal::new(params).try_eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilog::dilog;

    fn at_dot(t: f64) -> (Vec3, Vec3) {
        (Vec3::new(0.0, 0.0, 1.0), Vec3::new((1.0 - t * t).sqrt(), 0.0, t))
    }

    #[test]
    fn laplace_values() {
        let (x, y) = at_dot(0.0);
        assert!(eval_laplace(x, y).unwrap().abs() < 1e-16);
        let (x, y) = at_dot(-1.0);
        let v = eval_laplace(x, y).unwrap();
        assert!((v + 2f64.ln() / (4.0 * PI)).abs() < 1e-16);
        assert!((v + 0.0551589).abs() < 1e-7);
        assert_eq!(eval_laplace(x, x), Err(Error::Singular));
    }

    #[test]
    fn biharmonic_values() {
        let (x, y) = at_dot(-1.0);
        assert!(eval_biharmonic(x, y).abs() < 1e-16);
        assert!((eval_biharmonic(x, x) - PI / 24.0).abs() < 1e-15);
        let (x, y) = at_dot(0.0);
        assert!((eval_biharmonic(x, y) - dilog(0.5).unwrap() / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn biot_savart_values() {
        let x = Vec3::new(0.0, 0.0, 1.0);
        let y = Vec3::new(1.0, 0.0, 0.0);
        let v = eval_biot_savart(x, y).unwrap();
        assert!(v.dist(Vec3::new(0.0, -1.0 / (4.0 * PI), 0.0)) < 1e-16);
        assert_eq!(eval_biot_savart(x, -x).unwrap().norm(), 0.0);
        assert!(eval_biot_savart(y, y).is_err());
    }

    #[test]
    fn sal_published_form_values() {
        let p = SalParams { rho_ratio: 0.18579, form: SalForm::Published, ..Default::default() };
        let c = 3.0 * p.rho_ratio / (4.0 * PI);
        let (x, y) = at_dot(-1.0);
        let want = c * ((1.0 - p.b0) / 2.0 - (p.a1 - p.b1) * 6f64.ln());
        assert!((eval_sal(x, y, p).unwrap() - want).abs() < 1e-14);
        let (x, y) = at_dot(0.0);
        let g = 2f64.sqrt();
        let want = c * ((1.0 - p.b0) / g - (p.a1 - p.b1) * (g * (1.0 + g)).ln());
        assert!((eval_sal(x, y, p).unwrap() - want).abs() < 1e-14);
        assert!(eval_sal(x, x, p).is_err());
    }

    #[test]
    fn sal_series_form_antipodal() {
        let p = SalParams { rho_ratio: 0.18579, ..Default::default() };
        let c = 3.0 * p.rho_ratio / (4.0 * PI);
        let (x, y) = at_dot(-1.0);
        // s = sin(π/2) = 1.
        let want = c * ((1.0 - p.b0) / 2.0 - (p.a1 - p.b1) * 2f64.ln());
        assert!((eval_sal(x, y, p).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn kind_metadata() {
        assert_eq!("biot_savart".parse::<KernelKind>().unwrap().out_dim(), 3);
        assert!(!KernelKind::Biharmonic.singular_at_coincidence());
        assert!(KernelKind::Sal.singular_at_coincidence());
        assert!("yukawa".parse::<KernelKind>().is_err());
        assert_eq!(BiotSavart.out_dim(), 3);
        assert!(!Biharmonic.singular_at_coincidence());
    }
}
