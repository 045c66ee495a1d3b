//! Points on the unit sphere and the equiangular gnomonic cubed-sphere map.
//!
//! Face orientation convention used throughout the crate:
//!
//! | face | centre axis | `xi` direction | `eta` direction |
//! |------|-------------|----------------|-----------------|
//! | 0    | +x          | +y (east)      | +z (north)      |
//! | 1    | +y          | −x (east)      | +z (north)      |
//! | 2    | −x          | −y (east)      | +z (north)      |
//! | 3    | −y          | +x (east)      | +z (north)      |
//! | 4    | +z          | +y             | −x              |
//! | 5    | −z          | +y             | +x              |
//!
//! With `X = tan(xi)` and `Y = tan(eta)` the unnormalized cube point is
//! `(1, X, Y)`, `(−X, 1, Y)`, `(−1, −X, Y)`, `(X, −1, Y)`, `(−Y, X, 1)` and
//! `(Y, X, −1)` for faces 0 through 5. Faces 4 and 5 share their `xi` axis
//! with face 0 so that `xi` is continuous across the edges of face 0.

use std::f64::consts::FRAC_PI_4;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on the `[-π/4, π/4]` face bounds.
pub const SEAM_SLACK: f64 = 1e-12;

/// A point (or direction) in R³.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Projects onto the unit sphere. The zero vector is returned unchanged.
    #[inline]
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n > 0.0 {
            self / n
        } else {
            self
        }
    }

    /// Squared chordal distance.
    #[inline]
    pub fn dist_sq(self, o: Vec3) -> f64 {
        (self - o).norm_sq()
    }

    #[inline]
    pub fn dist(self, o: Vec3) -> f64 {
        self.dist_sq(o).sqrt()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    /// Longitude and latitude in radians.
    pub fn lon_lat(self) -> (f64, f64) {
        let lon = self.y.atan2(self.x);
        let lat = self.z.atan2((self.x * self.x + self.y * self.y).sqrt());
        (lon, lat)
    }

    /// Unit vector at the given longitude and latitude (radians).
    pub fn from_lon_lat(lon: f64, lat: f64) -> Vec3 {
        let (sl, cl) = lat.sin_cos();
        let (so, co) = lon.sin_cos();
        Vec3::new(cl * co, cl * so, sl)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Identifier of one of the six cube faces, see the module docs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face(u8);

impl Face {
    pub const ALL: [Face; 6] = [Face(0), Face(1), Face(2), Face(3), Face(4), Face(5)];

    pub fn new(id: usize) -> Result<Face> {
        if id < 6 {
            Ok(Face(id as u8))
        } else {
            Err(Error::InvalidFace(id))
        }
    }

    #[inline]
    pub fn id(self) -> usize {
        self.0 as usize
    }

    /// Outward unit normal through the face centre.
    pub fn axis(self) -> Vec3 {
        match self.0 {
            0 => Vec3::new(1.0, 0.0, 0.0),
            1 => Vec3::new(0.0, 1.0, 0.0),
            2 => Vec3::new(-1.0, 0.0, 0.0),
            3 => Vec3::new(0.0, -1.0, 0.0),
            4 => Vec3::new(0.0, 0.0, 1.0),
            _ => Vec3::new(0.0, 0.0, -1.0),
        }
    }

    /// Unnormalized cube point for gnomonic coordinates `X = tan xi`, `Y = tan eta`.
    #[inline]
    fn cube_point(self, big_x: f64, big_y: f64) -> Vec3 {
        match self.0 {
            0 => Vec3::new(1.0, big_x, big_y),
            1 => Vec3::new(-big_x, 1.0, big_y),
            2 => Vec3::new(-1.0, -big_x, big_y),
            3 => Vec3::new(big_x, -1.0, big_y),
            4 => Vec3::new(-big_y, big_x, 1.0),
            _ => Vec3::new(big_y, big_x, -1.0),
        }
    }

    /// Gnomonic coordinates `(X, Y)` of `p` relative to this face. Only
    /// meaningful when `p` lies in the open half-space of the face axis.
    #[inline]
    fn gnomonic(self, p: Vec3) -> (f64, f64) {
        match self.0 {
            0 => (p.y / p.x, p.z / p.x),
            1 => (-p.x / p.y, p.z / p.y),
            2 => (p.y / p.x, -p.z / p.x),
            3 => (-p.x / p.y, -p.z / p.y),
            4 => (p.y / p.z, -p.x / p.z),
            _ => (-p.y / p.z, -p.x / p.z),
        }
    }
}

/// Equiangular coordinates of a point on one cube face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceCoords {
    pub face: Face,
    pub xi: f64,
    pub eta: f64,
}

/// Face containing `p` and its local angles. Points on a seam go to the
/// lowest adjacent face id.
pub fn face_project(p: Vec3) -> FaceCoords {
    let face = face_of(p);
    let (xi, eta) = local_angles(face, p);
    FaceCoords { face, xi, eta }
}

/// Face selection alone: largest axis component, ties to the lowest id.
pub fn face_of(p: Vec3) -> Face {
    let comps = [p.x, p.y, -p.x, -p.y, p.z, -p.z];
    let mut best = 0;
    for (i, &c) in comps.iter().enumerate().skip(1) {
        if c > comps[best] {
            best = i;
        }
    }
    Face(best as u8)
}

/// Local angles of `p` with respect to a given face. Used when a point is
/// known to belong to `face` (e.g. proxy points of a cluster on that face).
#[inline]
pub fn local_angles(face: Face, p: Vec3) -> (f64, f64) {
    let (bx, by) = face.gnomonic(p);
    (bx.atan(), by.atan())
}

/// Inverse of [`face_project`]: the unit vector at the given local angles.
pub fn face_unproject(c: FaceCoords) -> Vec3 {
    unproject(c.face, c.xi, c.eta)
}

#[inline]
pub fn unproject(face: Face, xi: f64, eta: f64) -> Vec3 {
    face.cube_point(xi.tan(), eta.tan()).normalized()
}

/// Checked variant of [`face_unproject`] taking a raw face id.
pub fn face_unproject_checked(face: usize, xi: f64, eta: f64) -> Result<Vec3> {
    let face = Face::new(face)?;
    let lim = FRAC_PI_4 + SEAM_SLACK;
    if !(xi.abs() <= lim && eta.abs() <= lim) {
        return Err(Error::OutOfFace { xi, eta });
    }
    Ok(unproject(face, xi, eta))
}

/// Solid angle subtended by the gnomonic rectangle `[x0,x1]×[y0,y1]` in tan
/// coordinates on any face.
pub fn gnomonic_rect_area(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let f = |a: f64, b: f64| (a * b / (1.0 + a * a + b * b).sqrt()).atan();
    f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0)
}

/// Solid angle of the equiangular rectangle `[xi0,xi1]×[eta0,eta1]`.
pub fn equiangular_rect_area(xi0: f64, xi1: f64, eta0: f64, eta1: f64) -> f64 {
    gnomonic_rect_area(xi0.tan(), xi1.tan(), eta0.tan(), eta1.tan())
}

/// Area of the spherical triangle with unit-vector vertices (Van Oosterom–Strackee).
pub fn spherical_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = a.dot(b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}
