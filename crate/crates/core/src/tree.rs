//! Cubed-sphere quadtree over a particle set, with proxy points and the
//! upward (proxy weight) and downward (proxy potential) passes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{face_project, unproject, Face, Vec3};
use crate::grid::SphericalGrid;
use crate::interp::{proxy_points, transfer_matrix, Chebyshev, Rect};
use crate::kernels::Potential;

/// Shrunk rectangles are never narrower than this (radians) along either axis.
pub const MIN_CELL_WIDTH: f64 = 1e-9;

/// Depth cap; only reached by (near-)duplicate particles.
pub const MAX_DEPTH: usize = 48;

/// Positions on the unit sphere with quadrature weights `w_j = f(x_j) A_j`.
#[derive(Clone, Debug, Default)]
pub struct ParticleSet {
    pub positions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn new(positions: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: positions.len(), got: weights.len() });
        }
        if let Some(p) = positions.iter().find(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InputFormat(format!("point {p:?} is not on the unit sphere")));
        }
        Ok(ParticleSet { positions, weights })
    }

    /// Midpoint-rule weights `f(x_j) A_j` for cell values on a grid.
    pub fn from_grid(grid: &SphericalGrid, values: &[f64]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        let weights = values.iter().zip(&grid.areas).map(|(f, a)| f * a).collect();
        Ok(ParticleSet { positions: grid.centers.clone(), weights })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One node of the quadtree.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub face: Face,
    pub rect: Rect,
    pub center: Vec3,
    /// Largest chordal distance from `center` to a member particle.
    pub radius: f64,
    /// Member particles occupy `begin..end` in tree order.
    pub begin: usize,
    pub end: usize,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub level: usize,
    pub proxy_points: Vec<Vec3>,
}

impl Cluster {
    #[inline]
    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TreeStats {
    pub particles: usize,
    pub clusters: usize,
    pub leaves: usize,
    pub depth: usize,
    pub max_leaf_size: usize,
    pub min_leaf_size: usize,
    /// Number of leaves per depth.
    pub leaves_per_level: Vec<usize>,
}

/// Quadtree rooted at the six cube faces.
#[derive(Clone, Debug)]
pub struct ClusterTree {
    clusters: Vec<Cluster>,
    roots: [usize; 6],
    levels: Vec<Vec<usize>>,
    /// `perm[tree_position] = input_index`.
    perm: Vec<usize>,
    points: Vec<Vec3>,
    /// Local angles of each particle on its face, in tree order.
    angles: Vec<(f64, f64)>,
    cheb: Chebyshev,
    leaf_size: usize,
}

struct Work {
    xi: f64,
    eta: f64,
    index: usize,
}

impl ClusterTree {
    /// Builds the quadtree. Clusters with more than `leaf_size` particles are
    /// split at the midpoint of their rectangle; with `shrink` every rectangle
    /// is first tightened to the bounding box of its particles.
    pub fn build(positions: &[Vec3], degree: usize, leaf_size: usize, shrink: bool) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyTree);
        }
        if leaf_size == 0 {
            return Err(Error::Config("maximum leaf size must be at least 1".into()));
        }
        let cheb = Chebyshev::new(degree)?;

        let mut by_face: [Vec<Work>; 6] = Default::default();
        for (index, &p) in positions.iter().enumerate() {
            let c = face_project(p);
            by_face[c.face.id()].push(Work { xi: c.xi, eta: c.eta, index });
        }

        let mut builder = Builder {
            clusters: Vec::new(),
            work: Vec::with_capacity(positions.len()),
            positions,
            cheb: &cheb,
            leaf_size,
            shrink,
        };
        let mut roots = [0; 6];
        for face in Face::ALL {
            let items = std::mem::take(&mut by_face[face.id()]);
            let begin = builder.work.len();
            builder.work.extend(items);
            let end = builder.work.len();
            roots[face.id()] = builder.build(face, Rect::full_face(), begin, end, 0, None);
        }

        let mut levels: Vec<Vec<usize>> = Vec::new();
        for (id, c) in builder.clusters.iter().enumerate() {
            if levels.len() <= c.level {
                levels.resize(c.level + 1, Vec::new());
            }
            levels[c.level].push(id);
        }
        let perm: Vec<usize> = builder.work.iter().map(|w| w.index).collect();
        let points = perm.iter().map(|&i| positions[i]).collect();
        let angles = builder.work.iter().map(|w| (w.xi, w.eta)).collect();
        let clusters = builder.clusters;
        Ok(ClusterTree { clusters, roots, levels, perm, points, angles, cheb, leaf_size })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: usize) -> &Cluster {
        &self.clusters[id]
    }

    /// Root cluster ids indexed by face.
    pub fn roots(&self) -> [usize; 6] {
        self.roots
    }

    /// Cluster ids grouped by depth, roots first.
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn degree(&self) -> usize {
        self.cheb.degree()
    }

    pub fn chebyshev(&self) -> &Chebyshev {
        &self.cheb
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn num_particles(&self) -> usize {
        self.perm.len()
    }

    /// Particle positions in tree order.
    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    /// `perm()[tree_position] = input_index`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn proxy_count(&self) -> usize {
        self.cheb.len() * self.cheb.len()
    }

    pub fn to_tree_order<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| input[i]).collect()
    }

    pub fn to_input_order<T: Copy + Default>(&self, tree: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); tree.len()];
        for (pos, &i) in self.perm.iter().enumerate() {
            out[i] = tree[pos];
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters.iter().enumerate().filter(|(_, c)| c.is_leaf() && !c.is_empty()).map(|(i, _)| i)
    }

    pub fn stats(&self) -> TreeStats {
        let mut leaves_per_level = vec![0; self.levels.len()];
        let mut max_leaf = 0;
        let mut min_leaf = usize::MAX;
        let mut leaves = 0;
        for id in self.leaves() {
            let c = &self.clusters[id];
            leaves += 1;
            leaves_per_level[c.level] += 1;
            max_leaf = max_leaf.max(c.len());
            min_leaf = min_leaf.min(c.len());
        }
        TreeStats {
            particles: self.num_particles(),
            clusters: self.clusters.len(),
            leaves,
            depth: self.levels.len().saturating_sub(1),
            max_leaf_size: max_leaf,
            min_leaf_size: if leaves == 0 { 0 } else { min_leaf },
            leaves_per_level,
        }
    }

    /// 1D basis values of particle `pos` (tree order) in `cluster`'s rectangle.
    #[inline]
    fn particle_basis(&self, cluster: &Cluster, pos: usize, lu: &mut [f64], lv: &mut [f64]) {
        let (xi, eta) = self.angles[pos];
        let (u, v) = cluster.rect.to_reference(xi, eta);
        self.cheb.basis_into(u, lu);
        self.cheb.basis_into(v, lv);
    }

    /// Proxy weights of one cluster straight from its particles:
    /// `w̄_k = Σ_j L_k(y_j) w_j`. `weights` are in tree order.
    pub fn direct_proxy_weights(&self, id: usize, weights: &[f64]) -> Vec<f64> {
        let c = &self.clusters[id];
        let len = self.cheb.len();
        let mut out = vec![0.0; len * len];
        let mut lu = vec![0.0; len];
        let mut lv = vec![0.0; len];
        for (pos, &w) in weights.iter().enumerate().take(c.end).skip(c.begin) {
            self.particle_basis(c, pos, &mut lu, &mut lv);
            for k1 in 0..len {
                let a = w * lu[k1];
                let row = &mut out[k1 * len..(k1 + 1) * len];
                for (r, b) in row.iter_mut().zip(&lv) {
                    *r += a * b;
                }
            }
        }
        out
    }

    /// Per-axis matrices `M[k][m] = L^parent_k(s^child_m)`.
    fn transfer(&self, parent: &Cluster, child: &Cluster) -> (Vec<f64>, Vec<f64>) {
        let (p, c) = (&parent.rect, &child.rect);
        (
            transfer_matrix(&self.cheb, (p.xi0, p.xi1), (c.xi0, c.xi1)),
            transfer_matrix(&self.cheb, (p.eta0, p.eta1), (c.eta0, c.eta1)),
        )
    }

    /// Upward pass: proxy weights for every cluster, leaves computed directly
    /// and parents assembled from their children. `weights` are in tree order.
    pub fn upward_pass(&self, weights: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(weights.len(), self.num_particles());
        let len = self.cheb.len();
        let mut out: Vec<Vec<f64>> = vec![Vec::new(); self.clusters.len()];
        for level in self.levels.iter().rev() {
            let computed: Vec<(usize, Vec<f64>)> = level
                .par_iter()
                .map(|&id| {
                    let c = &self.clusters[id];
                    if c.is_leaf() {
                        return (id, self.direct_proxy_weights(id, weights));
                    }
                    let mut acc = vec![0.0; len * len];
                    let mut tmp = vec![0.0; len * len];
                    for &ch in &c.children {
                        let (ax, ae) = self.transfer(c, &self.clusters[ch]);
                        let wc = &out[ch];
                        // tmp[m1][k2] = Σ_m2 wc[m1][m2] ae[k2][m2]
                        for m1 in 0..len {
                            for k2 in 0..len {
                                let mut s = 0.0;
                                for m2 in 0..len {
                                    s += wc[m1 * len + m2] * ae[k2 * len + m2];
                                }
                                tmp[m1 * len + k2] = s;
                            }
                        }
                        // acc[k1][k2] += Σ_m1 ax[k1][m1] tmp[m1][k2]
                        for k1 in 0..len {
                            for m1 in 0..len {
                                let a = ax[k1 * len + m1];
                                for k2 in 0..len {
                                    acc[k1 * len + k2] += a * tmp[m1 * len + k2];
                                }
                            }
                        }
                    }
                    (id, acc)
                })
                .collect();
            for (id, w) in computed {
                out[id] = w;
            }
        }
        out
    }

    /// Interpolates one cluster's proxy potentials to its own particles,
    /// returning values for `begin..end` in tree order.
    pub fn interpolate_to_particles<P: Potential>(&self, id: usize, proxy: &[P]) -> Vec<P> {
        let c = &self.clusters[id];
        let len = self.cheb.len();
        let mut lu = vec![0.0; len];
        let mut lv = vec![0.0; len];
        (c.begin..c.end)
            .map(|pos| {
                self.particle_basis(c, pos, &mut lu, &mut lv);
                let mut acc = P::default();
                for k1 in 0..len {
                    let mut row = P::default();
                    for k2 in 0..len {
                        row += proxy[k1 * len + k2] * lv[k2];
                    }
                    acc += row * lu[k1];
                }
                acc
            })
            .collect()
    }

    /// Downward pass: pushes proxy potentials from parents to children through
    /// all levels, then interpolates leaf proxy potentials to the particles.
    /// `proxy` holds one vector per cluster (empty means zero). Returns
    /// potentials in tree order.
    pub fn downward_pass<P: Potential>(&self, mut proxy: Vec<Vec<P>>) -> Vec<P> {
        assert_eq!(proxy.len(), self.clusters.len());
        let len = self.cheb.len();
        for level in self.levels.iter().skip(1) {
            let incoming: Vec<(usize, Vec<P>)> = level
                .par_iter()
                .filter_map(|&id| {
                    let c = &self.clusters[id];
                    let pid = c.parent?;
                    let pp = &proxy[pid];
                    if pp.is_empty() {
                        return None;
                    }
                    let (ax, ae) = self.transfer(&self.clusters[pid], c);
                    // child[n1][n2] = Σ_{m1,m2} ax[m1][n1] pp[m1][m2] ae[m2][n2]
                    let mut tmp = vec![P::default(); len * len];
                    for m1 in 0..len {
                        for n2 in 0..len {
                            let mut s = P::default();
                            for m2 in 0..len {
                                s += pp[m1 * len + m2] * ae[m2 * len + n2];
                            }
                            tmp[m1 * len + n2] = s;
                        }
                    }
                    let mut add = if proxy[id].is_empty() { vec![P::default(); len * len] } else { proxy[id].clone() };
                    for m1 in 0..len {
                        for n1 in 0..len {
                            let a = ax[m1 * len + n1];
                            for n2 in 0..len {
                                add[n1 * len + n2] += tmp[m1 * len + n2] * a;
                            }
                        }
                    }
                    Some((id, add))
                })
                .collect();
            for (id, v) in incoming {
                proxy[id] = v;
            }
        }
        let mut out = vec![P::default(); self.num_particles()];
        let leaves: Vec<usize> = self.leaves().filter(|&id| !proxy[id].is_empty()).collect();
        let values: Vec<(usize, Vec<P>)> = leaves
            .par_iter()
            .map(|&id| (self.clusters[id].begin, self.interpolate_to_particles(id, &proxy[id])))
            .collect();
        for (begin, v) in values {
            out[begin..begin + v.len()].copy_from_slice(&v);
        }
        out
    }

    /// Interpolates every cluster's own proxy potentials straight to its
    /// particles, without passing through the intermediate levels.
    pub fn interpolate_all_direct<P: Potential>(&self, proxy: &[Vec<P>]) -> Vec<P> {
        let mut out = vec![P::default(); self.num_particles()];
        for (id, pp) in proxy.iter().enumerate() {
            if pp.is_empty() {
                continue;
            }
            let c = &self.clusters[id];
            for (o, v) in out[c.begin..c.end].iter_mut().zip(self.interpolate_to_particles(id, pp)) {
                *o += v;
            }
        }
        out
    }
}

struct Builder<'a> {
    clusters: Vec<Cluster>,
    work: Vec<Work>,
    positions: &'a [Vec3],
    cheb: &'a Chebyshev,
    leaf_size: usize,
    shrink: bool,
}

impl Builder<'_> {
    fn build(
        &mut self,
        face: Face,
        rect: Rect,
        begin: usize,
        end: usize,
        level: usize,
        parent: Option<usize>,
    ) -> usize {
        let items = &self.work[begin..end];
        let radius_from = |r: &Rect| {
            let (mx, my) = r.mid();
            let c = unproject(face, mx, my);
            (c, items.iter().map(|w| c.dist(self.positions[w.index])).fold(0.0, f64::max))
        };
        let outer = rect;
        let rect = if self.shrink && !items.is_empty() { bounding_rect(items) } else { rect };
        let (mx, my) = rect.mid();
        let (mut center, mut radius) = radius_from(&rect);
        if self.shrink {
            // The tighter box can still have an off-centre midpoint; keep
            // whichever centre gives the smaller enclosing ball.
            let (c, r) = radius_from(&outer);
            if r < radius {
                (center, radius) = (c, r);
            }
        }

        let id = self.clusters.len();
        self.clusters.push(Cluster {
            face,
            rect,
            center,
            radius,
            begin,
            end,
            children: Vec::new(),
            parent,
            level,
            proxy_points: proxy_points(face, &rect, self.cheb),
        });

        let splittable = rect.xi1 - rect.xi0 > MIN_CELL_WIDTH || rect.eta1 - rect.eta0 > MIN_CELL_WIDTH;
        if end - begin <= self.leaf_size || level >= MAX_DEPTH || !splittable {
            return id;
        }

        let quadrant = |w: &Work| (w.xi >= mx) as usize + 2 * (w.eta >= my) as usize;
        self.work[begin..end].sort_by_key(quadrant);
        let mut bounds = [begin; 5];
        for (q, b) in bounds.iter_mut().enumerate().skip(1) {
            *b = begin + self.work[begin..end].iter().filter(|w| quadrant(w) < q).count();
        }
        let quads = [
            Rect { xi0: rect.xi0, xi1: mx, eta0: rect.eta0, eta1: my },
            Rect { xi0: mx, xi1: rect.xi1, eta0: rect.eta0, eta1: my },
            Rect { xi0: rect.xi0, xi1: mx, eta0: my, eta1: rect.eta1 },
            Rect { xi0: mx, xi1: rect.xi1, eta0: my, eta1: rect.eta1 },
        ];
        let mut children = Vec::with_capacity(4);
        for q in 0..4 {
            if bounds[q + 1] > bounds[q] {
                children.push(self.build(face, quads[q], bounds[q], bounds[q + 1], level + 1, Some(id)));
            }
        }
        // A split that leaves everything in one child with an unchanged
        // rectangle would recurse forever; the depth cap handles it.
        self.clusters[id].children = children;
        id
    }
}

fn bounding_rect(items: &[Work]) -> Rect {
    let mut r = Rect { xi0: f64::MAX, xi1: f64::MIN, eta0: f64::MAX, eta1: f64::MIN };
    for w in items {
        r.xi0 = r.xi0.min(w.xi);
        r.xi1 = r.xi1.max(w.xi);
        r.eta0 = r.eta0.min(w.eta);
        r.eta1 = r.eta1.max(w.eta);
    }
    widen(&mut r.xi0, &mut r.xi1);
    widen(&mut r.eta0, &mut r.eta1);
    r
}

fn widen(lo: &mut f64, hi: &mut f64) {
    if *hi - *lo < MIN_CELL_WIDTH {
        let m = 0.5 * (*lo + *hi);
        *lo = m - 0.5 * MIN_CELL_WIDTH;
        *hi = m + 0.5 * MIN_CELL_WIDTH;
    }
}
