//! Direct summation, the cluster-particle tree code and the cluster-cluster
//! fast multipole method for `φ(x_i) = Σ_j K(x_i, y_j) w_j`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kernels::{Kernel, Potential};
use crate::tree::{Cluster, ClusterTree, TreeStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Cstc,
    Csfmm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Cstc => "cstc",
            Method::Csfmm => "csfmm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" | "ds" => Ok(Method::Direct),
            "cstc" | "treecode" | "tc" => Ok(Method::Cstc),
            "csfmm" | "fmm" => Ok(Method::Csfmm),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Tree and traversal parameters shared by both fast methods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraversalConfig {
    /// Multipole acceptance parameter θ.
    pub mac: f64,
    /// Interpolation degree n.
    pub degree: usize,
    /// Maximum leaf size N0; `None` means `4n²`.
    pub leaf_size: Option<usize>,
    /// Tighten each cluster rectangle to its particles.
    pub shrink: bool,
    pub method: Method,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        TraversalConfig { mac: 0.7, degree: 6, leaf_size: None, shrink: true, method: Method::Csfmm }
    }
}

impl TraversalConfig {
    pub fn leaf_size(&self) -> usize {
        self.leaf_size.unwrap_or(4 * self.degree * self.degree).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mac > 0.0 && self.mac < 1.0) {
            return Err(Error::Config(format!("MAC parameter must lie in (0, 1), got {}", self.mac)));
        }
        if self.degree == 0 {
            return Err(Error::Config("interpolation degree must be at least 1".into()));
        }
        if self.leaf_size == Some(0) {
            return Err(Error::Config("maximum leaf size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionCounts {
    pub pp: u64,
    pub pc: u64,
    pub cp: u64,
    pub cc: u64,
    /// Total kernel evaluations.
    pub kernel_evals: u64,
}

impl std::ops::Add for InteractionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        InteractionCounts {
            pp: self.pp + o.pp,
            pc: self.pc + o.pc,
            cp: self.cp + o.cp,
            cc: self.cc + o.cc,
            kernel_evals: self.kernel_evals + o.kernel_evals,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub tree_build: f64,
    pub upward: f64,
    pub traversal: f64,
    pub evaluation: f64,
    pub downward: f64,
    pub total: f64,
}

impl PhaseTimings {
    pub fn phase_sum(&self) -> f64 {
        self.tree_build + self.upward + self.traversal + self.evaluation + self.downward
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SumReport {
    pub method: Option<Method>,
    pub timings: PhaseTimings,
    pub counts: InteractionCounts,
    pub source_tree: Option<TreeStats>,
    pub target_tree: Option<TreeStats>,
}

fn check_inputs(sources: &[Vec3], weights: &[f64]) -> Result<()> {
    if sources.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: sources.len(), got: weights.len() });
    }
    Ok(())
}

/// `O(MN)` reference sum. Coincident pairs of singular kernels are skipped.
pub fn direct_sum<K: Kernel>(targets: &[Vec3], sources: &[Vec3], weights: &[f64], kernel: &K) -> Vec<K::Output> {
    assert_eq!(sources.len(), weights.len());
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = K::Output::default();
            for (&y, &w) in sources.iter().zip(weights) {
                acc += kernel.eval_or_skip(x, y) * w;
            }
            acc
        })
        .collect()
}

/// Dispatches on `cfg.method`.
pub fn fast_sum<K: Kernel>(
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    kernel: &K,
    cfg: &TraversalConfig,
) -> Result<(Vec<K::Output>, SumReport)> {
    match cfg.method {
        Method::Direct => {
            check_inputs(sources, weights)?;
            let t = Instant::now();
            let out = direct_sum(targets, sources, weights, kernel);
            let total = t.elapsed().as_secs_f64();
            let n = (targets.len() * sources.len()) as u64;
            let report = SumReport {
                method: Some(Method::Direct),
                timings: PhaseTimings { evaluation: total, total, ..Default::default() },
                counts: InteractionCounts { kernel_evals: n, ..Default::default() },
                ..Default::default()
            };
            Ok((out, report))
        }
        Method::Cstc => cstc_sum(targets, sources, weights, kernel, cfg),
        Method::Csfmm => csfmm_sum(targets, sources, weights, kernel, cfg),
    }
}

/// Target particle vs source cluster: `(r_s) / R < θ`, `R` measured from the
/// cluster centre.
#[inline]
pub fn well_separated_pc(x: Vec3, source: &Cluster, mac: f64) -> bool {
    let r = x.dist(source.center);
    r > 0.0 && source.radius < mac * r
}

/// Cluster vs cluster: `(r_t + r_s) / R < θ`.
#[inline]
pub fn well_separated_cc(target: &Cluster, source: &Cluster, mac: f64) -> bool {
    let r = target.center.dist(source.center);
    r > 0.0 && target.radius + source.radius < mac * r
}

/// Sum of `K(x, y_j) w_j` over a source cluster's particles.
#[inline]
fn particle_block<K: Kernel>(kernel: &K, x: Vec3, pts: &[Vec3], w: &[f64]) -> K::Output {
    let mut acc = K::Output::default();
    for (&y, &wj) in pts.iter().zip(w) {
        acc += kernel.eval_or_skip(x, y) * wj;
    }
    acc
}

/// Sum over proxy points; a target sitting on a proxy point is skipped like
/// any other coincident pair.
#[inline]
fn proxy_block<K: Kernel>(kernel: &K, x: Vec3, proxies: &[Vec3], w: &[f64]) -> K::Output {
    particle_block(kernel, x, proxies, w)
}

/// Cluster-particle tree code.
pub fn cstc_sum<K: Kernel>(
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    kernel: &K,
    cfg: &TraversalConfig,
) -> Result<(Vec<K::Output>, SumReport)> {
    cfg.validate()?;
    check_inputs(sources, weights)?;
    let start = Instant::now();
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let tree = ClusterTree::build(sources, cfg.degree, cfg.leaf_size(), cfg.shrink)?;
    let w_tree = tree.to_tree_order(weights);
    timings.tree_build = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let proxy_w = tree.upward_pass(&w_tree);
    timings.upward = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let n0 = tree.leaf_size();
    let pts = tree.points();
    let np = tree.proxy_count() as u64;
    let roots = tree.roots();
    let results: Vec<(K::Output, InteractionCounts)> = targets
        .par_iter()
        .map(|&x| {
            let mut acc = K::Output::default();
            let mut counts = InteractionCounts::default();
            let mut stack: Vec<usize> = roots.iter().rev().copied().collect();
            while let Some(id) = stack.pop() {
                let c = tree.cluster(id);
                if c.is_empty() {
                    continue;
                }
                if well_separated_pc(x, c, cfg.mac) && c.len() > n0 {
                    acc += proxy_block(kernel, x, &c.proxy_points, &proxy_w[id]);
                    counts.pc += 1;
                    counts.kernel_evals += np;
                } else if !well_separated_pc(x, c, cfg.mac) && !c.is_leaf() {
                    stack.extend(c.children.iter().rev());
                } else {
                    acc += particle_block(kernel, x, &pts[c.begin..c.end], &w_tree[c.begin..c.end]);
                    counts.pp += 1;
                    counts.kernel_evals += c.len() as u64;
                }
            }
            (acc, counts)
        })
        .collect();
    timings.evaluation = t.elapsed().as_secs_f64();

    let counts = results.iter().fold(InteractionCounts::default(), |a, r| a + r.1);
    let out = results.into_iter().map(|r| r.0).collect();
    timings.total = start.elapsed().as_secs_f64();
    let report =
        SumReport { method: Some(Method::Cstc), timings, counts, source_tree: Some(tree.stats()), target_tree: None };
    Ok((out, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteractionKind {
    Pp,
    Pc,
    Cp,
    Cc,
}

/// Interaction lists from the dual traversal, as `(target, source)` cluster
/// pairs.
#[derive(Clone, Debug, Default)]
pub struct InteractionLists {
    pub pp: Vec<(usize, usize)>,
    pub pc: Vec<(usize, usize)>,
    pub cp: Vec<(usize, usize)>,
    pub cc: Vec<(usize, usize)>,
}

impl InteractionLists {
    pub fn len(&self) -> usize {
        self.pp.len() + self.pc.len() + self.cp.len() + self.cc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dual tree traversal over all pairs of non-empty root clusters.
pub fn dual_traversal(targets: &ClusterTree, sources: &ClusterTree, mac: f64) -> InteractionLists {
    let n0 = sources.leaf_size().max(targets.leaf_size());
    let mut lists = InteractionLists::default();
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &t in targets.roots().iter().rev() {
        for &s in sources.roots().iter().rev() {
            if !targets.cluster(t).is_empty() && !sources.cluster(s).is_empty() {
                stack.push((t, s));
            }
        }
    }
    while let Some((ti, si)) = stack.pop() {
        let (t, s) = (targets.cluster(ti), sources.cluster(si));
        let big_t = t.len() > n0;
        let big_s = s.len() > n0;
        if well_separated_cc(t, s, mac) && (big_t || big_s) {
            match (big_t, big_s) {
                (false, true) => lists.pc.push((ti, si)),
                (true, false) => lists.cp.push((ti, si)),
                _ => lists.cc.push((ti, si)),
            }
        } else if big_t || big_s {
            let split_target = t.len() > s.len();
            let (first, second) = if split_target { (t, s) } else { (s, t) };
            if !first.is_leaf() {
                push_children(&mut stack, ti, si, split_target, &first.children);
            } else if !second.is_leaf() {
                push_children(&mut stack, ti, si, !split_target, &second.children);
            } else {
                lists.pp.push((ti, si));
            }
        } else {
            lists.pp.push((ti, si));
        }
    }
    lists
}

fn push_children(stack: &mut Vec<(usize, usize)>, ti: usize, si: usize, target_side: bool, children: &[usize]) {
    for &c in children.iter().rev() {
        stack.push(if target_side { (c, si) } else { (ti, c) });
    }
}

/// Groups `(target, source)` pairs by target cluster, preserving order.
fn group_by_target(pairs: &[(usize, usize)], n: usize) -> Vec<Vec<usize>> {
    let mut g = vec![Vec::new(); n];
    for &(t, s) in pairs {
        g[t].push(s);
    }
    g
}

/// How CP/CC proxy potentials reach the target particles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DownwardMode {
    /// Through the tree, parent to child, then leaves to particles.
    #[default]
    Hierarchical,
    /// Straight from each cluster's proxy points to its own particles.
    Direct,
}

/// Cluster-cluster fast multipole method.
pub fn csfmm_sum<K: Kernel>(
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    kernel: &K,
    cfg: &TraversalConfig,
) -> Result<(Vec<K::Output>, SumReport)> {
    csfmm_sum_with(targets, sources, weights, kernel, cfg, DownwardMode::Hierarchical)
}

pub fn csfmm_sum_with<K: Kernel>(
    targets: &[Vec3],
    sources: &[Vec3],
    weights: &[f64],
    kernel: &K,
    cfg: &TraversalConfig,
    mode: DownwardMode,
) -> Result<(Vec<K::Output>, SumReport)> {
    cfg.validate()?;
    check_inputs(sources, weights)?;
    let start = Instant::now();
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let n0 = cfg.leaf_size();
    let (ttree, stree) = rayon::join(
        || ClusterTree::build(targets, cfg.degree, n0, cfg.shrink),
        || ClusterTree::build(sources, cfg.degree, n0, cfg.shrink),
    );
    let (ttree, stree) = (ttree?, stree?);
    let w_tree = stree.to_tree_order(weights);
    timings.tree_build = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let proxy_w = stree.upward_pass(&w_tree);
    timings.upward = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let lists = dual_traversal(&ttree, &stree, cfg.mac);
    timings.traversal = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let nt = ttree.clusters().len();
    let np = stree.proxy_count();
    let spts = stree.points();
    let tpts = ttree.points();

    // PP and PC land directly on target particles.
    let near = group_by_target(&lists.pp, nt);
    let far = group_by_target(&lists.pc, nt);
    let near_targets: Vec<usize> = (0..nt).filter(|&i| !near[i].is_empty() || !far[i].is_empty()).collect();
    let direct_part: Vec<(usize, Vec<K::Output>)> = near_targets
        .par_iter()
        .map(|&ti| {
            let c = ttree.cluster(ti);
            let vals = tpts[c.begin..c.end]
                .iter()
                .map(|&x| {
                    let mut acc = K::Output::default();
                    for &si in &near[ti] {
                        let s = stree.cluster(si);
                        acc += particle_block(kernel, x, &spts[s.begin..s.end], &w_tree[s.begin..s.end]);
                    }
                    for &si in &far[ti] {
                        acc += proxy_block(kernel, x, &stree.cluster(si).proxy_points, &proxy_w[si]);
                    }
                    acc
                })
                .collect();
            (c.begin, vals)
        })
        .collect();

    // CP and CC land on target proxy points.
    let cp = group_by_target(&lists.cp, nt);
    let cc = group_by_target(&lists.cc, nt);
    let proxy_targets: Vec<usize> = (0..nt).filter(|&i| !cp[i].is_empty() || !cc[i].is_empty()).collect();
    let proxy_part: Vec<(usize, Vec<K::Output>)> = proxy_targets
        .par_iter()
        .map(|&ti| {
            let tc = ttree.cluster(ti);
            let vals = tc
                .proxy_points
                .iter()
                .map(|&x| {
                    let mut acc = K::Output::default();
                    for &si in &cp[ti] {
                        let s = stree.cluster(si);
                        acc += particle_block(kernel, x, &spts[s.begin..s.end], &w_tree[s.begin..s.end]);
                    }
                    for &si in &cc[ti] {
                        acc += proxy_block(kernel, x, &stree.cluster(si).proxy_points, &proxy_w[si]);
                    }
                    acc
                })
                .collect();
            (ti, vals)
        })
        .collect();
    timings.evaluation = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut proxy_pot: Vec<Vec<K::Output>> = vec![Vec::new(); nt];
    for (ti, v) in proxy_part {
        proxy_pot[ti] = v;
    }
    let mut phi = match mode {
        DownwardMode::Hierarchical => ttree.downward_pass(proxy_pot),
        DownwardMode::Direct => ttree.interpolate_all_direct(&proxy_pot),
    };
    for (begin, vals) in direct_part {
        for (o, v) in phi[begin..begin + vals.len()].iter_mut().zip(vals) {
            *o += v;
        }
    }
    let out = ttree.to_input_order(&phi);
    timings.downward = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    let cluster_len = |tree: &ClusterTree, id: usize| tree.cluster(id).len() as u64;
    let mut counts = InteractionCounts {
        pp: lists.pp.len() as u64,
        pc: lists.pc.len() as u64,
        cp: lists.cp.len() as u64,
        cc: lists.cc.len() as u64,
        kernel_evals: 0,
    };
    let np = np as u64;
    counts.kernel_evals += lists.pp.iter().map(|&(t, s)| cluster_len(&ttree, t) * cluster_len(&stree, s)).sum::<u64>();
    counts.kernel_evals += lists.pc.iter().map(|&(t, _)| cluster_len(&ttree, t) * np).sum::<u64>();
    counts.kernel_evals += lists.cp.iter().map(|&(_, s)| np * cluster_len(&stree, s)).sum::<u64>();
    counts.kernel_evals += lists.cc.len() as u64 * np * np;

    let report = SumReport {
        method: Some(Method::Csfmm),
        timings,
        counts,
        source_tree: Some(stree.stats()),
        target_tree: Some(ttree.stats()),
    };
    Ok((out, report))
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `‖a − b‖₂ / ‖b‖₂` over all components.
pub fn relative_l2_gap<P: Potential>(approx: &[P], reference: &[P]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in approx.iter().zip(reference) {
        num += (*a - *b).norm_sq();
        den += b.norm_sq();
    }
    (num / den).sqrt()
}

/// `max|a − b| / max|b|` over all components.
pub fn relative_max_error<P: Potential>(approx: &[P], reference: &[P]) -> f64 {
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (a, b) in approx.iter().zip(reference) {
        for i in 0..P::DIM {
            num = num.max((a.component(i) - b.component(i)).abs());
            den = den.max(b.component(i).abs());
        }
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::kernels::{Biharmonic, BiotSavart, Laplace};

    fn setup(level: u32) -> (Vec<Vec3>, Vec<f64>) {
        let g = build_grid(GridKind::CubedSphere, level).unwrap();
        let w = g.centers.iter().zip(&g.areas).map(|(p, a)| (p.x + 2.0 * p.y * p.z) * a).collect();
        (g.centers, w)
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = TraversalConfig::default();
        assert_eq!(c.leaf_size(), 144);
        assert!(TraversalConfig { mac: 1.2, ..c }.validate().is_err());
        assert!(TraversalConfig { degree: 0, ..c }.validate().is_err());
        assert_eq!("fmm".parse::<Method>().unwrap(), Method::Csfmm);
    }

    #[test]
    fn length_mismatch() {
        let (p, w) = setup(2);
        let r = cstc_sum(&p, &p, &w[1..], &Laplace, &TraversalConfig::default());
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn fast_methods_agree_with_direct() {
        let (p, w) = setup(5);
        let cfg = TraversalConfig { degree: 8, leaf_size: Some(64), ..Default::default() };
        let exact = direct_sum(&p, &p, &w, &Laplace);
        let (tc, rep) = cstc_sum(&p, &p, &w, &Laplace, &cfg).unwrap();
        assert!(rep.counts.pc > 0);
        let (fm, rep) = csfmm_sum(&p, &p, &w, &Laplace, &cfg).unwrap();
        assert!(rep.counts.cc > 0, "{:?}", rep.counts);
        assert!(relative_l2_gap(&tc, &exact) < 1e-5);
        assert!(relative_l2_gap(&fm, &exact) < 1e-5);
    }

    #[test]
    fn vector_and_smooth_kernels() {
        let (p, w) = setup(3);
        let cfg = TraversalConfig { degree: 6, leaf_size: Some(32), ..Default::default() };
        let exact = direct_sum(&p, &p, &w, &BiotSavart);
        let (fm, _) = csfmm_sum(&p, &p, &w, &BiotSavart, &cfg).unwrap();
        assert!(relative_l2_gap(&fm, &exact) < 1e-4);
        let exact = direct_sum(&p, &p, &w, &Biharmonic);
        let (tc, _) = cstc_sum(&p, &p, &w, &Biharmonic, &cfg).unwrap();
        assert!(relative_l2_gap(&tc, &exact) < 1e-6);
    }

    #[test]
    fn downward_modes_match() {
        let (p, w) = setup(4);
        let cfg = TraversalConfig { degree: 5, leaf_size: Some(40), ..Default::default() };
        let (a, _) = csfmm_sum_with(&p, &p, &w, &Laplace, &cfg, DownwardMode::Hierarchical).unwrap();
        let (b, _) = csfmm_sum_with(&p, &p, &w, &Laplace, &cfg, DownwardMode::Direct).unwrap();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn every_source_reaches_every_target_once() {
        // Unit weights with a constant kernel: every method must return N.
        struct One;
        impl Kernel for One {
            type Output = f64;
            const SINGULAR: bool = false;
            fn name(&self) -> &'static str {
                "one"
            }
            fn eval(&self, _: Vec3, _: Vec3) -> f64 {
                1.0
            }
        }
        let (p, _) = setup(3);
        let w = vec![1.0; p.len()];
        let cfg = TraversalConfig { degree: 3, leaf_size: Some(10), ..Default::default() };
        for (out, _) in [cstc_sum(&p, &p, &w, &One, &cfg).unwrap(), csfmm_sum(&p, &p, &w, &One, &cfg).unwrap()] {
            for v in out {
                assert!((v - p.len() as f64).abs() < 1e-9 * p.len() as f64);
            }
        }
    }
}
