//! Built-in scalar fields for grid input.

use std::str::FromStr;

use csfmm::apps::harmonics::real_sph_harm;
use csfmm::kernels::KernelKind;
use csfmm::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    One,
    /// `Y_n^m`.
    Harmonic(usize, i32),
    /// `Σ_{n=2}^{10} Y_n^{⌊n/2⌋}`.
    Band,
    /// Uniform on `[−1, 1]` from a seed.
    Random,
}

impl FromStr for Field {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "one" | "1" => return Ok(Field::One),
            "band" => return Ok(Field::Band),
            "random" => return Ok(Field::Random),
            _ => {}
        }
        let bad = || CliError::Field(format!("unknown field `{s}`; use one, band, random or yNM (e.g. y43)"));
        let digits = s.strip_prefix('y').ok_or_else(bad)?;
        let (n, m) = match digits.split_once(',') {
            Some((n, m)) => (n, m),
            None if digits.len() == 2 => digits.split_at(1),
            None => return Err(bad()),
        };
        let n: usize = n.parse().map_err(|_| bad())?;
        let m: i32 = m.parse().map_err(|_| bad())?;
        if m.unsigned_abs() as usize > n {
            return Err(CliError::Field(format!("|m| = {} exceeds n = {n}", m.abs())));
        }
        Ok(Field::Harmonic(n, m))
    }
}

impl Field {
    pub fn values(self, points: &[Vec3], seed: u64) -> Vec<f64> {
        match self {
            Field::One => vec![1.0; points.len()],
            Field::Harmonic(n, m) => points.iter().map(|&p| real_sph_harm(n, m, p)).collect(),
            Field::Band => points.iter().map(|&p| band(p)).collect(),
            Field::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..points.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        }
    }

    /// Exact Green's function solution for fields built from harmonics of
    /// degree ≥ 1: `Y_n / (n(n+1))^k` with `k = 1` (Laplace) or `2` (biharmonic).
    pub fn exact_solution(self, kernel: KernelKind, points: &[Vec3]) -> Option<Vec<f64>> {
        let power = match kernel {
            KernelKind::Laplace => 1,
            KernelKind::Biharmonic => 2,
            _ => return None,
        };
        let inv = |n: usize| 1.0 / ((n * (n + 1)) as f64).powi(power);
        match self {
            Field::Harmonic(n, m) if n >= 1 => Some(points.iter().map(|&p| real_sph_harm(n, m, p) * inv(n)).collect()),
            Field::Band => Some(
                points.iter().map(|&p| (2..=10).map(|n| real_sph_harm(n, (n / 2) as i32, p) * inv(n)).sum()).collect(),
            ),
            _ => None,
        }
    }
}

fn band(p: Vec3) -> f64 {
    (2..=10).map(|n| real_sph_harm(n, (n / 2) as i32, p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse() {
        assert_eq!("y43".parse::<Field>().unwrap(), Field::Harmonic(4, 3));
        assert_eq!("Y12,-5".parse::<Field>().unwrap(), Field::Harmonic(12, -5));
        assert_eq!("band".parse::<Field>().unwrap(), Field::Band);
        assert!("y35".parse::<Field>().is_err());
        assert!("sin".parse::<Field>().is_err());
        assert_eq!("x".parse::<Field>().unwrap_err().code(), "E_FIELD");
    }

    #[test]
    fn exact_solutions() {
        let p = [Vec3::new(0.6, 0.0, 0.8)];
        let f = Field::Harmonic(4, 3);
        let y = f.values(&p, 0)[0];
        assert!((f.exact_solution(KernelKind::Laplace, &p).unwrap()[0] - y / 20.0).abs() < 1e-17);
        assert!((f.exact_solution(KernelKind::Biharmonic, &p).unwrap()[0] - y / 400.0).abs() < 1e-18);
        assert!(Field::One.exact_solution(KernelKind::Laplace, &p).is_none());
        assert!(f.exact_solution(KernelKind::Sal, &p).is_none());
    }

    #[test]
    fn random_is_seeded() {
        let p = vec![Vec3::new(0.0, 0.0, 1.0); 5];
        assert_eq!(Field::Random.values(&p, 3), Field::Random.values(&p, 3));
        assert_ne!(Field::Random.values(&p, 3), Field::Random.values(&p, 4));
    }
}
