//! Orthonormal real spherical harmonics in terms of latitude and longitude.

use std::f64::consts::PI;

use crate::geometry::Vec3;

/// `Y_n^m` at `p`, orthonormal over the sphere. Positive `m` carries
/// `cos(mλ)`, negative `m` carries `sin(|m|λ)`; no Condon-Shortley phase.
pub fn real_sph_harm(n: usize, m: i32, p: Vec3) -> f64 {
    let ma = m.unsigned_abs() as usize;
    assert!(ma <= n, "|m| must not exceed n");
    let (lon, _) = p.lon_lat();
    let z = p.z.clamp(-1.0, 1.0);
    let legendre = normalized_legendre(n, ma, z);
    match m {
        0 => legendre,
        m if m > 0 => std::f64::consts::SQRT_2 * legendre * (ma as f64 * lon).cos(),
        _ => std::f64::consts::SQRT_2 * legendre * (ma as f64 * lon).sin(),
    }
}

/// Associated Legendre function scaled so that `P̄_n^m(z) e^{imλ}` has unit
/// norm on the sphere; `z` is the sine of latitude.
pub fn normalized_legendre(n: usize, m: usize, z: f64) -> f64 {
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut pmm = (0.25 / PI).sqrt();
    for k in 1..=m {
        pmm *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    if n == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = ((2 * m + 3) as f64).sqrt() * z * pmm;
    let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
    for l in m + 2..=n {
        let next = a(l) * (z * cur - prev / a(l - 1));
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};

    #[test]
    fn closed_form_y43() {
        // Y_4^3 = (3/4) sqrt(35/2π) z (1 − z²)^{3/2} cos 3λ
        let c = 0.75 * (35.0 / (2.0 * PI)).sqrt();
        for &(lon, lat) in &[(0.3, 0.2), (2.0, -1.1), (-0.7, 0.9)] {
            let p = Vec3::from_lon_lat(lon, lat);
            let z: f64 = lat.sin();
            let want = c * z * (1.0 - z * z).powf(1.5) * (3.0 * lon).cos();
            assert!((real_sph_harm(4, 3, p) - want).abs() < 1e-13);
        }
    }

    #[test]
    fn orthonormal_under_quadrature() {
        let g = build_grid(GridKind::LatLon, 5).unwrap();
        let idx = [(2, 1), (4, 3), (4, -3), (5, 4), (0, 0)];
        for (i, &(n1, m1)) in idx.iter().enumerate() {
            for &(n2, m2) in &idx[i..] {
                let s: f64 = g
                    .centers
                    .iter()
                    .zip(&g.areas)
                    .map(|(&p, a)| real_sph_harm(n1, m1, p) * real_sph_harm(n2, m2, p) * a)
                    .sum();
                let want = if (n1, m1) == (n2, m2) { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 2e-3, "({n1},{m1}) ({n2},{m2}) {s}");
            }
        }
    }
}
