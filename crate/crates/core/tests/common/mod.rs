//! Fixed-seed property checks shared by the property tests and the
//! acceptance runner.
#![allow(dead_code)]

use csfmm::geometry::{face_project, unproject, Face, Vec3};
use csfmm::interp::{transfer_matrix, CellInterpolant, Chebyshev, Rect};
use csfmm::kernels::{Biharmonic, BiotSavart, Kernel, Laplace, Sal, SalParams};
use csfmm::summation::{csfmm_sum, cstc_sum, TraversalConfig};
use csfmm::tree::ClusterTree;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<(), String>;
pub type NamedCheck = (&'static str, fn() -> Check);

pub fn runner(cases: u32, seed: u8) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]))
}

fn finish(r: std::result::Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Check {
    r.map_err(|e| e.to_string())
}

pub fn unit_vector() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, lon)| {
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * lon.cos(), r * lon.sin(), z)
    })
}

/// Rodrigues rotation about `axis` by `angle`.
pub fn rotate(p: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    p * c + axis.cross(p) * s + axis * (axis.dot(p) * (1.0 - c))
}

pub fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let lon: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            Vec3::new(r * lon.cos(), r * lon.sin(), z)
        })
        .collect()
}

pub fn random_weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn face_round_trip() -> Check {
    let q = std::f64::consts::FRAC_PI_4 - 1e-9;
    finish(runner(256, 1).run(&(0usize..6, -q..q, -q..q), |(f, xi, eta)| {
        let c = face_project(unproject(Face::new(f).unwrap(), xi, eta));
        ensure(c.face.id() == f && (c.xi - xi).abs() < 1e-12 && (c.eta - eta).abs() < 1e-12, || {
            format!("face {f} ({xi}, {eta}) -> {c:?}")
        })
    }))
}

pub fn partition_of_unity() -> Check {
    finish(runner(128, 2).run(&(1usize..12, -1.0f64..1.0, -1.0f64..1.0), |(n, u, v)| {
        let c = Chebyshev::new(n).unwrap();
        let s: f64 = csfmm::interp::tensor_basis(&c, u, v).iter().sum();
        ensure((s - 1.0).abs() < 1e-12, || format!("n={n} sum={s}"))
    }))
}

pub fn polynomial_reproduction() -> Check {
    let coeffs = prop::collection::vec(-1.0f64..1.0, 16);
    finish(runner(64, 3).run(&(coeffs, -0.7f64..0.7, -0.7f64..0.7, 0.05f64..0.3), |(a, xi0, eta0, w)| {
        // Degree 3 in each variable, interpolated with n = 3 in reference coordinates.
        let c = Chebyshev::new(3).unwrap();
        let rect = Rect { xi0, xi1: xi0 + w, eta0, eta1: eta0 + w };
        let face = Face::new(1).unwrap();
        let cell = CellInterpolant::new(face, rect, &c);
        let q = |u: f64, v: f64| {
            (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| a[4 * i + j] * u.powi(i as i32) * v.powi(j as i32))
                .sum::<f64>()
        };
        let vals: Vec<f64> =
            c.nodes().iter().flat_map(|&u| c.nodes().iter().map(move |&v| (u, v))).map(|(u, v)| q(u, v)).collect();
        let scale = vals.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for (u, v) in [(0.1, -0.3), (0.77, 0.5), (-0.9, 0.95)] {
            let (xi, eta) = rect.from_reference(u, v);
            let b = cell.basis(unproject(face, xi, eta)).unwrap();
            let got: f64 = b.iter().zip(&vals).map(|(l, f)| l * f).sum();
            ensure((got - q(u, v)).abs() < 1e-11 * scale, || format!("{got} vs {}", q(u, v)))?;
        }
        Ok(())
    }))
}

pub fn transfer_identity() -> Check {
    finish(runner(64, 4).run(&(2usize..10, 0usize..4, 0.0f64..1.0), |(n, quadrant, t)| {
        let c = Chebyshev::new(n).unwrap();
        let (p0, p1) = (-0.3, 0.5);
        let mid = 0.5 * (p0 + p1);
        let (c0, c1) = if quadrant % 2 == 0 { (p0, mid) } else { (mid, p1) };
        let m = transfer_matrix(&c, (p0, p1), (c0, c1));
        let y = c0 + t * (c1 - c0);
        let lp = c.basis((2.0 * y - p0 - p1) / (p1 - p0));
        let lc = c.basis((2.0 * y - c0 - c1) / (c1 - c0));
        for k in 0..=n {
            let via: f64 = (0..=n).map(|i| m[k * (n + 1) + i] * lc[i]).sum();
            ensure((via - lp[k]).abs() < 1e-12, || format!("n={n} k={k} {via} {}", lp[k]))?;
        }
        Ok(())
    }))
}

fn scalar_symmetric<K: Kernel<Output = f64>>(k: &K, x: Vec3, y: Vec3) -> std::result::Result<(), TestCaseError> {
    let (a, b) = (k.eval(x, y), k.eval(y, x));
    ensure((a - b).abs() <= 1e-13 * a.abs().max(1.0), || format!("{} asymmetric: {a} {b}", k.name()))
}

pub fn kernel_symmetry() -> Check {
    finish(runner(256, 5).run(&(unit_vector(), unit_vector()), |(x, y)| {
        prop_assume!(x.dist(y) > 1e-6);
        scalar_symmetric(&Laplace, x, y)?;
        scalar_symmetric(&Biharmonic, x, y)?;
        scalar_symmetric(&Sal::new(SalParams::default()), x, y)?;
        let (a, b) = (BiotSavart.eval(x, y), BiotSavart.eval(y, x));
        ensure((a + b).norm() <= 1e-13 * a.norm().max(1.0), || format!("Biot-Savart not antisymmetric: {a:?} {b:?}"))
    }))
}

pub fn kernel_rotation() -> Check {
    finish(runner(256, 6).run(&(unit_vector(), unit_vector(), unit_vector(), 0.0f64..6.0), |(x, y, axis, angle)| {
        prop_assume!(x.dist(y) > 1e-3);
        let (rx, ry) = (rotate(x, axis, angle), rotate(y, axis, angle));
        for (name, a, b) in [
            ("laplace", Laplace.eval(x, y), Laplace.eval(rx, ry)),
            ("biharmonic", Biharmonic.eval(x, y), Biharmonic.eval(rx, ry)),
            ("sal", Sal::default().eval(x, y), Sal::default().eval(rx, ry)),
        ] {
            ensure((a - b).abs() <= 1e-13 * a.abs().max(1.0), || format!("{name}: {a} vs {b}"))?;
        }
        let a = rotate(BiotSavart.eval(x, y), axis, angle);
        let b = BiotSavart.eval(rx, ry);
        ensure((a - b).norm() <= 1e-13 * a.norm().max(1.0), || format!("biot-savart: {a:?} vs {b:?}"))
    }))
}

/// Adaptive Simpson quadrature of `−ln(1−t)/t` on `[0, x]`.
pub fn dilog_by_quadrature(x: f64) -> f64 {
    fn f(t: f64) -> f64 {
        if t == 0.0 {
            1.0
        } else {
            -(-t).ln_1p() / t
        }
    }
    fn simpson(a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn adapt(a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(a, m), simpson(m, b));
        if depth == 0 || (l + r - whole).abs() < 15.0 * tol {
            l + r + (l + r - whole) / 15.0
        } else {
            adapt(a, m, l, 0.5 * tol, depth - 1) + adapt(m, b, r, 0.5 * tol, depth - 1)
        }
    }
    adapt(0.0, x, simpson(0.0, x), 1e-13, 40)
}

pub fn dilog_integral() -> Check {
    for x in [0.2, 0.5, 0.9] {
        let (a, b) = (csfmm::dilog::dilog(x).unwrap(), dilog_by_quadrature(x));
        if (a - b).abs() > 1e-10 {
            return Err(format!("dilog({x}) = {a}, quadrature {b}"));
        }
    }
    Ok(())
}

pub fn tree_determinism_and_shrink() -> Check {
    finish(runner(16, 7).run(&(50usize..800, any::<u64>(), 4usize..40), |(n, seed, n0)| {
        let pts = random_points(n, seed);
        let a = ClusterTree::build(&pts, 3, n0, true).unwrap();
        let b = ClusterTree::build(&pts, 3, n0, true).unwrap();
        ensure(a.perm() == b.perm() && a.clusters().len() == b.clusters().len(), || "tree not deterministic".into())?;
        let plain = ClusterTree::build(&pts, 3, n0, false).unwrap();
        ensure(plain.perm().len() == n && a.perm().len() == n, || "particles lost".into())?;
        // Same root membership; shrinking may only tighten the root radius.
        for f in 0..6 {
            let (s, p) = (a.cluster(a.roots()[f]), plain.cluster(plain.roots()[f]));
            ensure(s.len() == p.len(), || "root sizes differ".into())?;
            ensure(s.radius <= p.radius + 1e-15 || s.is_empty(), || {
                format!("shrunk radius {} > {}", s.radius, p.radius)
            })?;
        }
        Ok(())
    }))
}

pub fn mass_conservation() -> Check {
    finish(runner(16, 8).run(&(50usize..1500, any::<u64>(), 1usize..9), |(n, seed, deg)| {
        let pts = random_points(n, seed);
        let w = random_weights(n, seed ^ 0x5555);
        let tree = ClusterTree::build(&pts, deg, 30, true).unwrap();
        let wt = tree.to_tree_order(&w);
        let proxy = tree.upward_pass(&wt);
        for (id, c) in tree.clusters().iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            let total: f64 = proxy[id].iter().sum();
            let direct: f64 = wt[c.begin..c.end].iter().sum();
            ensure((total - direct).abs() < 1e-12 * (1.0 + c.len() as f64), || {
                format!("cluster {id}: {total} vs {direct}")
            })?;
        }
        Ok(())
    }))
}

pub fn pass_linearity() -> Check {
    finish(runner(8, 9).run(&(100usize..1500, any::<u64>(), -3.0f64..3.0, -3.0f64..3.0), |(n, seed, alpha, beta)| {
        let pts = random_points(n, seed);
        let tree = ClusterTree::build(&pts, 5, 40, true).unwrap();
        let u = random_weights(n, seed ^ 1);
        let v = random_weights(n, seed ^ 2);
        let mix: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
        let (pu, pv, pm) = (tree.upward_pass(&u), tree.upward_pass(&v), tree.upward_pass(&mix));
        for id in 0..pu.len() {
            for k in 0..pu[id].len() {
                let want = alpha * pu[id][k] + beta * pv[id][k];
                ensure((pm[id][k] - want).abs() < 1e-12 * (1.0 + want.abs()), || format!("upward {id}/{k}"))?;
            }
        }
        // Downward: random proxy potentials on every non-empty cluster.
        let pot = |s: u64| -> Vec<Vec<f64>> {
            tree.clusters()
                .iter()
                .enumerate()
                .map(|(i, c)| if c.is_empty() { Vec::new() } else { random_weights(tree.proxy_count(), s + i as u64) })
                .collect()
        };
        let (a, b) = (pot(100), pot(20000));
        let m: Vec<Vec<f64>> =
            a.iter().zip(&b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect()).collect();
        let (da, db, dm) = (tree.downward_pass(a), tree.downward_pass(b), tree.downward_pass(m));
        for i in 0..n {
            let want = alpha * da[i] + beta * db[i];
            ensure((dm[i] - want).abs() < 1e-12 * (1.0 + want.abs()), || format!("downward {i}"))?;
        }
        Ok(())
    }))
}

pub fn sum_linearity() -> Check {
    finish(runner(6, 10).run(&(200usize..2000, any::<u64>(), -4.0f64..4.0), |(n, seed, alpha)| {
        let pts = random_points(n, seed);
        let w = random_weights(n, seed ^ 3);
        let aw: Vec<f64> = w.iter().map(|v| alpha * v).collect();
        let cfg = TraversalConfig { leaf_size: Some(50), degree: 5, ..Default::default() };
        for (base, scaled) in [
            (cstc_sum(&pts, &pts, &w, &Laplace, &cfg).unwrap().0, cstc_sum(&pts, &pts, &aw, &Laplace, &cfg).unwrap().0),
            (
                csfmm_sum(&pts, &pts, &w, &Laplace, &cfg).unwrap().0,
                csfmm_sum(&pts, &pts, &aw, &Laplace, &cfg).unwrap().0,
            ),
        ] {
            let scale = base.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (b, s) in base.iter().zip(&scaled) {
                ensure((alpha * b - s).abs() <= 1e-12 * scale * alpha.abs().max(1.0), || {
                    format!("{} vs {}", alpha * b, s)
                })?;
            }
        }
        Ok(())
    }))
}

pub fn sum_rotation() -> Check {
    finish(runner(3, 11).run(&(unit_vector(), 0.1f64..6.0, any::<u64>()), |(axis, angle, seed)| {
        let pts = random_points(3000, seed);
        let w = random_weights(3000, seed ^ 4);
        let rp: Vec<Vec3> = pts.iter().map(|&p| rotate(p, axis, angle)).collect();
        let cfg = TraversalConfig { mac: 0.3, degree: 10, leaf_size: Some(100), ..Default::default() };
        let (a, _) = csfmm_sum(&pts, &pts, &w, &Laplace, &cfg).unwrap();
        let (b, _) = csfmm_sum(&rp, &rp, &w, &Laplace, &cfg).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        ensure(gap <= 1e-10 * scale, || format!("rotation gap {gap:e} (scale {scale:e})"))
    }))
}

/// Every named invariant, in a fixed order.
pub fn all_invariants() -> Vec<NamedCheck> {
    vec![
        ("face round trip", face_round_trip),
        ("partition of unity", partition_of_unity),
        ("polynomial reproduction", polynomial_reproduction),
        ("parent/child transfer identity", transfer_identity),
        ("kernel (anti)symmetry", kernel_symmetry),
        ("kernel rotation invariance", kernel_rotation),
        ("dilog defining integral", dilog_integral),
        ("tree determinism and shrink", tree_determinism_and_shrink),
        ("proxy weight mass conservation", mass_conservation),
        ("upward/downward linearity", pass_linearity),
        ("summation linearity", sum_linearity),
        ("summation rotation invariance", sum_rotation),
    ]
}
