//! Spherical partitions used for midpoint-rule quadrature.
//!
//! * Icosahedral: the particles are the vertices of the recursively bisected
//!   icosahedron (`10·4^k + 2` of them) and each cell is the spherical Voronoi
//!   region of its vertex.
//! * Cubed sphere: `2^k × 2^k` equiangular cells on each face.
//! * Latitude-longitude: `45·2^(k−4)` latitude bands by twice as many
//!   longitudes, i.e. 4° spacing at level 4, halving with every level.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{equiangular_rect_area, spherical_triangle_area, unproject, Face, Vec3};

/// Highest level any generator accepts.
pub const MAX_LEVEL: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Icosahedral,
    CubedSphere,
    LatLon,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Icosahedral => "icosahedral",
            GridKind::CubedSphere => "cubed_sphere",
            GridKind::LatLon => "latlon",
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "icosahedral" | "icos" | "ico" => Ok(GridKind::Icosahedral),
            "cubed_sphere" | "cubedsphere" | "cubed" | "cs" => Ok(GridKind::CubedSphere),
            "latlon" | "lat_lon" | "ll" => Ok(GridKind::LatLon),
            other => Err(Error::UnsupportedGrid(format!("unknown grid kind `{other}`"))),
        }
    }
}

/// Cell centres and exact cell areas of a sphere partition.
#[derive(Clone, Debug)]
pub struct SphericalGrid {
    pub kind: GridKind,
    pub level: u32,
    pub centers: Vec<Vec3>,
    pub areas: Vec<f64>,
}

impl SphericalGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }
}

/// Particle count of a grid without building it.
pub fn grid_size(kind: GridKind, level: u32) -> Result<usize> {
    check_level(kind, level)?;
    let k = level as usize;
    Ok(match kind {
        GridKind::Icosahedral => 10 * (1 << (2 * k)) + 2,
        GridKind::CubedSphere => 6 * (1 << (2 * k)),
        GridKind::LatLon => {
            let nlat = 45 << (k - 4);
            2 * nlat * nlat
        }
    })
}

fn check_level(kind: GridKind, level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::UnsupportedGrid(format!("{kind} level {level} exceeds {MAX_LEVEL}")));
    }
    if kind == GridKind::LatLon && level < 4 {
        return Err(Error::UnsupportedGrid(format!("latlon grids start at level 4 (4° spacing), got level {level}")));
    }
    Ok(())
}

pub fn build_grid(kind: GridKind, level: u32) -> Result<SphericalGrid> {
    check_level(kind, level)?;
    let (centers, areas) = match kind {
        GridKind::Icosahedral => icosahedral(level),
        GridKind::CubedSphere => cubed_sphere(level),
        GridKind::LatLon => lat_lon(level),
    };
    Ok(SphericalGrid { kind, level, centers, areas })
}

fn cubed_sphere(level: u32) -> (Vec<Vec3>, Vec<f64>) {
    let m = 1usize << level;
    let d = 2.0 * FRAC_PI_4 / m as f64;
    let mut centers = Vec::with_capacity(6 * m * m);
    let mut areas = Vec::with_capacity(6 * m * m);
    for face in Face::ALL {
        for j in 0..m {
            let eta0 = -FRAC_PI_4 + j as f64 * d;
            for i in 0..m {
                let xi0 = -FRAC_PI_4 + i as f64 * d;
                centers.push(unproject(face, xi0 + 0.5 * d, eta0 + 0.5 * d));
                areas.push(equiangular_rect_area(xi0, xi0 + d, eta0, eta0 + d));
            }
        }
    }
    (centers, areas)
}

fn lat_lon(level: u32) -> (Vec<Vec3>, Vec<f64>) {
    let nlat = 45usize << (level - 4);
    let nlon = 2 * nlat;
    let d = PI / nlat as f64;
    let mut centers = Vec::with_capacity(nlat * nlon);
    let mut areas = Vec::with_capacity(nlat * nlon);
    for i in 0..nlat {
        let lat0 = -FRAC_PI_2 + i as f64 * d;
        let lat1 = lat0 + d;
        let band = d * (lat1.sin() - lat0.sin());
        let latc = lat0 + 0.5 * d;
        for j in 0..nlon {
            let lon = (j as f64 + 0.5) * d;
            centers.push(Vec3::from_lon_lat(lon, latc));
            areas.push(band);
        }
    }
    (centers, areas)
}

/// Vertices and triangles of the bisected icosahedron at `level`.
pub fn icosahedral_mesh(level: u32) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::with_capacity(tris.len() * 3 / 2);
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push((verts[a as usize] + verts[b as usize]).normalized());
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    (verts, tris)
}

fn icosahedral(level: u32) -> (Vec<Vec3>, Vec<f64>) {
    let (verts, tris) = icosahedral_mesh(level);
    let circum: Vec<Vec3> = tris
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| verts[i as usize]);
            let n = (b - a).cross(c - a).normalized();
            if n.dot(a + b + c) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect();

    let mut incident: Vec<Vec<u32>> = vec![Vec::with_capacity(6); verts.len()];
    for (ti, t) in tris.iter().enumerate() {
        for &v in t {
            incident[v as usize].push(ti as u32);
        }
    }

    let areas = verts
        .iter()
        .zip(&incident)
        .map(|(&v, tri_ids)| {
            // Order the Voronoi vertices counter-clockwise around v.
            let helper = if v.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
            let e1 = helper.cross(v).normalized();
            let e2 = v.cross(e1);
            let mut ring: Vec<(f64, Vec3)> = tri_ids
                .iter()
                .map(|&t| {
                    let c = circum[t as usize];
                    let d = c - v;
                    (d.dot(e2).atan2(d.dot(e1)), c)
                })
                .collect();
            ring.sort_by(|a, b| a.0.total_cmp(&b.0));
            (0..ring.len()).map(|i| spherical_triangle_area(v, ring[i].1, ring[(i + 1) % ring.len()].1)).sum()
        })
        .collect();
    (verts, areas)
}
