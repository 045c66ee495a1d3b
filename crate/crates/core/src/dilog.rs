//! Real dilogarithm `Li2(x) = −∫₀ˣ ln(1−t)/t dt` for `x ≤ 1`.
//!
//! The argument is reduced to `[0, 1/2]` with the inversion, Landen and
//! reflection identities, where the Bernoulli-number series in
//! `u = −ln(1−x)` converges geometrically with ratio below `(ln 2 / 2π)²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const PI2_6: f64 = PI * PI / 6.0;

/// `B_{2k} / (2k+1)!` for `k = 1..=10`.
const BERNOULLI_COEFFS: [f64; 10] = [
    1.0 / 36.0,
    -1.0 / 3600.0,
    1.0 / 211680.0,
    -1.0 / 10886400.0,
    1.0 / 526901760.0,
    -4.064761645144226e-11,
    8.921691020456453e-13,
    -1.993929586072108e-14,
    4.518980029619918e-16,
    -1.0356517612181247e-17,
];

/// Dilogarithm with a domain check.
pub fn dilog(x: f64) -> Result<f64> {
    if x > 1.0 || x.is_nan() {
        return Err(Error::DilogDomain(x));
    }
    Ok(dilog_unchecked(x))
}

/// Dilogarithm without the domain check; callers guarantee `x ≤ 1`.
#[inline]
pub fn dilog_unchecked(x: f64) -> f64 {
    if x >= 1.0 {
        PI2_6
    } else if x > 0.5 {
        let y = 1.0 - x;
        PI2_6 - x.ln() * y.ln() - series(y)
    } else if x >= 0.0 {
        series(x)
    } else if x >= -1.0 {
        // Landen: maps [-1, 0) onto (0, 1/2].
        let l = (-x).ln_1p();
        -series(x / (x - 1.0)) - 0.5 * l * l
    } else {
        let l = (-x).ln();
        -PI2_6 - 0.5 * l * l - dilog_unchecked(1.0 / x)
    }
}

/// Bernoulli series, valid for `0 ≤ x ≤ 1/2`.
#[inline]
fn series(x: f64) -> f64 {
    let u = -(-x).ln_1p();
    let u2 = u * u;
    let mut poly = 0.0;
    for &c in BERNOULLI_COEFFS.iter().rev() {
        poly = poly * u2 + c;
    }
    u - 0.25 * u2 + u * u2 * poly
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_series(x: f64) -> f64 {
        let mut s = 0.0;
        let mut p = x;
        for k in 1..4000 {
            s += p / (k * k) as f64;
            p *= x;
            if p.abs() < 1e-300 {
                break;
            }
        }
        s
    }

    #[test]
    fn coefficients_match_bernoulli_numbers() {
        // B12 = −691/2730, B14 = 7/6, B16 = −3617/510, B18 = 43867/798, B20 = −174611/330
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        let b = [
            (-691.0 / 2730.0, 13),
            (7.0 / 6.0, 15),
            (-3617.0 / 510.0, 17),
            (43867.0 / 798.0, 19),
            (-174611.0 / 330.0, 21),
        ];
        for (i, &(bn, f)) in b.iter().enumerate() {
            let c = bn / fact(f);
            assert!((c - BERNOULLI_COEFFS[5 + i]).abs() <= 1e-15 * c.abs());
        }
    }

    #[test]
    fn classical_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI2_6).abs() < 1e-15);
        let half = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        assert!((dilog(0.5).unwrap() - half).abs() < 1e-13 * half);
        assert!((dilog(-1.0).unwrap() + PI * PI / 12.0).abs() < 1e-15);
    }

    #[test]
    fn matches_power_series_on_unit_interval() {
        for i in -99..=95 {
            let x = i as f64 / 100.0;
            let want = power_series(x);
            let got = dilog(x).unwrap();
            assert!((got - want).abs() <= 1e-13 * want.abs().max(1e-300), "x={x} {got} {want}");
        }
    }

    #[test]
    fn inversion_branch_consistent() {
        // Li2(x) + Li2(1/x) = −π²/6 − ln²(−x)/2 for x < 0, checked via the
        // Landen branch on 1/x.
        for &x in &[-1.5, -3.0, -10.0, -1e4] {
            let lhs = dilog(x).unwrap() + dilog(1.0 / x).unwrap();
            let rhs = -PI2_6 - 0.5 * (-x).ln().powi(2);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_error() {
        assert!(matches!(dilog(1.0 + 1e-12), Err(Error::DilogDomain(_))));
        assert!(dilog(f64::NAN).is_err());
    }
}
