//! Barycentric Lagrange interpolation at Chebyshev points of the second kind,
//! in one dimension and as a tensor product over cubed-sphere cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{local_angles, unproject, Face, Vec3, SEAM_SLACK};

/// Distance below which an evaluation point is treated as a node.
pub const NODE_TOL: f64 = 1e-14;

/// Chebyshev points `s_k = cos(kπ/n)` and their barycentric weights.
#[derive(Clone, Debug)]
pub struct Chebyshev {
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Chebyshev {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("interpolation degree must be at least 1".into()));
        }
        let n = degree as f64;
        let nodes = (0..=degree)
            .map(|k| {
                // Exact zero in the middle for even degrees.
                if 2 * k == degree {
                    0.0
                } else {
                    (k as f64 * std::f64::consts::PI / n).cos()
                }
            })
            .collect();
        let weights = (0..=degree)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == degree {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Ok(Chebyshev { degree, nodes, weights })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of nodes, `n + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Writes all `n + 1` Lagrange basis values at `x` into `out`.
    #[inline]
    pub fn basis_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        let mut sum = 0.0;
        for k in 0..self.len() {
            let d = x - self.nodes[k];
            if d.abs() < NODE_TOL {
                out.iter_mut().for_each(|v| *v = 0.0);
                out[k] = 1.0;
                return;
            }
            let t = self.weights[k] / d;
            out[k] = t;
            sum += t;
        }
        let inv = 1.0 / sum;
        out.iter_mut().for_each(|v| *v *= inv);
    }

    pub fn basis(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.basis_into(x, &mut out);
        out
    }

    /// Interpolates nodal values `f(s_k)` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        self.basis(x).iter().zip(values).map(|(l, v)| l * v).sum()
    }
}

/// Axis-aligned rectangle in the local angles of one face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xi0: f64,
    pub xi1: f64,
    pub eta0: f64,
    pub eta1: f64,
}

impl Rect {
    pub fn full_face() -> Rect {
        let q = std::f64::consts::FRAC_PI_4;
        Rect { xi0: -q, xi1: q, eta0: -q, eta1: q }
    }

    #[inline]
    pub fn mid(&self) -> (f64, f64) {
        (0.5 * (self.xi0 + self.xi1), 0.5 * (self.eta0 + self.eta1))
    }

    /// Affine map from local angles to the reference square `[-1, 1]²`.
    #[inline]
    pub fn to_reference(&self, xi: f64, eta: f64) -> (f64, f64) {
        (
            (2.0 * xi - (self.xi0 + self.xi1)) / (self.xi1 - self.xi0),
            (2.0 * eta - (self.eta0 + self.eta1)) / (self.eta1 - self.eta0),
        )
    }

    #[inline]
    pub fn from_reference(&self, u: f64, v: f64) -> (f64, f64) {
        (
            0.5 * (self.xi0 + self.xi1) + 0.5 * (self.xi1 - self.xi0) * u,
            0.5 * (self.eta0 + self.eta1) + 0.5 * (self.eta1 - self.eta0) * v,
        )
    }

    pub fn contains(&self, xi: f64, eta: f64, slack: f64) -> bool {
        xi >= self.xi0 - slack && xi <= self.xi1 + slack && eta >= self.eta0 - slack && eta <= self.eta1 + slack
    }
}

/// Tensor-product Chebyshev interpolation on a cubed-sphere cell.
///
/// Proxy point `k = k1·(n+1) + k2` sits at reference coordinates
/// `(s_{k1}, s_{k2})`, with `k1` along `xi` and `k2` along `eta`.
#[derive(Clone, Debug)]
pub struct CellInterpolant<'a> {
    pub face: Face,
    pub rect: Rect,
    cheb: &'a Chebyshev,
    proxy_points: Vec<Vec3>,
}

impl<'a> CellInterpolant<'a> {
    pub fn new(face: Face, rect: Rect, cheb: &'a Chebyshev) -> Self {
        let proxy_points = proxy_points(face, &rect, cheb);
        CellInterpolant { face, rect, cheb, proxy_points }
    }

    pub fn degree(&self) -> usize {
        self.cheb.degree()
    }

    pub fn proxy_points(&self) -> &[Vec3] {
        &self.proxy_points
    }

    /// Tensor basis values at `p`, which must lie in the cell.
    pub fn basis(&self, p: Vec3) -> Result<Vec<f64>> {
        if p.dot(self.face.axis()) <= 0.0 {
            return Err(Error::OutOfCell { u: f64::NAN, v: f64::NAN });
        }
        let (xi, eta) = local_angles(self.face, p);
        if !self.rect.contains(xi, eta, SEAM_SLACK) {
            let (u, v) = self.rect.to_reference(xi, eta);
            return Err(Error::OutOfCell { u, v });
        }
        let (u, v) = self.rect.to_reference(xi, eta);
        Ok(tensor_basis(self.cheb, u, v))
    }
}

/// Proxy points of a cell, ordered as in [`CellInterpolant`].
pub fn proxy_points(face: Face, rect: &Rect, cheb: &Chebyshev) -> Vec<Vec3> {
    let nodes = cheb.nodes();
    let mut pts = Vec::with_capacity(nodes.len() * nodes.len());
    for &u in nodes {
        for &v in nodes {
            let (xi, eta) = rect.from_reference(u, v);
            pts.push(unproject(face, xi, eta));
        }
    }
    pts
}

/// `L_{k1}(u) L_{k2}(v)` for all `(n+1)²` index pairs.
pub fn tensor_basis(cheb: &Chebyshev, u: f64, v: f64) -> Vec<f64> {
    let lu = cheb.basis(u);
    let lv = cheb.basis(v);
    let mut out = Vec::with_capacity(lu.len() * lv.len());
    for a in &lu {
        for b in &lv {
            out.push(a * b);
        }
    }
    out
}

/// Matrix `M[k][m] = L_k(map(s_m))` of parent basis functions evaluated at the
/// child's nodes, where `map` takes child reference coordinates to parent ones
/// along one axis. Stored row-major, `(n+1) × (n+1)`.
pub fn transfer_matrix(cheb: &Chebyshev, parent: (f64, f64), child: (f64, f64)) -> Vec<f64> {
    let len = cheb.len();
    let (p0, p1) = parent;
    let (c0, c1) = child;
    let mut cols = vec![0.0; len];
    let mut m = vec![0.0; len * len];
    for (mi, &s) in cheb.nodes().iter().enumerate() {
        let x = 0.5 * (c0 + c1) + 0.5 * (c1 - c0) * s;
        let u = (2.0 * x - (p0 + p1)) / (p1 - p0);
        cheb.basis_into(u, &mut cols);
        for k in 0..len {
            m[k * len + mi] = cols[k];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::face_project;

    #[test]
    fn weights_and_nodes() {
        let c = Chebyshev::new(5).unwrap();
        assert_eq!(c.nodes()[0], 1.0);
        assert!((c.nodes()[5] + 1.0).abs() < 1e-15);
        assert!(c.nodes().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(c.weights(), &[0.5, -1.0, 1.0, -1.0, 1.0, -0.5]);
        assert!(Chebyshev::new(0).is_err());
    }

    #[test]
    fn node_coincidence_gives_unit_vector() {
        let c = Chebyshev::new(2).unwrap();
        assert_eq!(c.basis(0.0), vec![0.0, 1.0, 0.0]);
        assert_eq!(c.basis(1.0), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn cubic_reproduced() {
        let c = Chebyshev::new(3).unwrap();
        let vals: Vec<f64> = c.nodes().iter().map(|s| s * s * s).collect();
        assert!((c.interpolate(&vals, 0.3) - 0.027).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_1d() {
        let c = Chebyshev::new(7).unwrap();
        for i in 0..=100 {
            let x = -1.0 + 0.02 * i as f64;
            let s: f64 = c.basis(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn proxy_point_basis_is_indicator() {
        let c = Chebyshev::new(4).unwrap();
        let rect = Rect { xi0: -0.3, xi1: 0.1, eta0: 0.2, eta1: 0.5 };
        let cell = CellInterpolant::new(Face::new(2).unwrap(), rect, &c);
        for (k, &p) in cell.proxy_points().iter().enumerate() {
            let b = cell.basis(p).unwrap();
            for (m, v) in b.iter().enumerate() {
                let want = if m == k { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "k={k} m={m} v={v}");
            }
        }
    }

    #[test]
    fn out_of_cell_rejected() {
        let c = Chebyshev::new(3).unwrap();
        let rect = Rect { xi0: 0.0, xi1: 0.1, eta0: 0.0, eta1: 0.1 };
        let cell = CellInterpolant::new(Face::new(0).unwrap(), rect, &c);
        let outside = unproject(Face::new(0).unwrap(), 0.3, 0.05);
        assert!(matches!(cell.basis(outside), Err(Error::OutOfCell { .. })));
        let other_face = Vec3::new(-1.0, 0.0, 0.0);
        assert!(cell.basis(other_face).is_err());
        let inside = unproject(Face::new(0).unwrap(), 0.05, 0.05);
        assert_eq!(face_project(inside).face.id(), 0);
        assert!(cell.basis(inside).is_ok());
    }

    #[test]
    fn transfer_matrix_reproduces_parent_basis() {
        let c = Chebyshev::new(6).unwrap();
        let m = transfer_matrix(&c, (-0.4, 0.4), (0.0, 0.4));
        // L^p_k(y) = Σ_m L^p_k(s^c_m) L^c_m(y) for y in the child.
        for &y in &[0.01, 0.17, 0.33] {
            let lp = c.basis((2.0 * y - 0.0) / 0.8);
            let lc = c.basis((2.0 * y - 0.4) / 0.4);
            for k in 0..7 {
                let via: f64 = (0..7).map(|mi| m[k * 7 + mi] * lc[mi]).sum();
                assert!((via - lp[k]).abs() < 1e-12);
            }
        }
    }
}
