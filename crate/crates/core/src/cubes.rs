//! Dyadic cubes on a lattice sample.
//!
//! Centers at scale `k` form a maximal `τ^k`-separated net `N_k`, the nets
//! being nested (`N_{k+1} ⊆ N_k`) and grown greedily in lattice-index order.
//! Each center `z ∈ N_k` reserves the closed ball `B(z, τ^{k-1})`. Roundness
//! forces: if a point lies in `B(a, τ^{i-1})` and `B(w, τ^{j-1})` with
//! `i < j`, the scale-`j` ancestor of `a` must be `w`. Parents are chosen top
//! down as the nearest center satisfying those constraints; a point then
//! descends from its finest reserving center (or the nearest bottom center)
//! by nearest children, and its cube at every scale is the ancestor of that
//! chain.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::GradedLattice;
use crate::spatial::FirstLayerGrid;

/// Cubes up to this many points get an exact brute-force diameter.
pub const EXACT_DIAMETER_MAX: usize = 6300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub tau: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl TreeParams {
    /// `k_max` smallest with `τ^{k_max} ≥ 2R`, `k_min` smallest with
    /// `τ^{k_min} ≥ h`.
    pub fn auto(lattice: &GradedLattice, tau: f64) -> Self {
        let lg = |x: f64| libm::ceil(libm::log(x) / libm::log(tau) - 1e-9) as i32;
        TreeParams {
            tau,
            k_min: lg(lattice.resolution()),
            k_max: lg(2.0 * lattice.radius()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub id: usize,
    pub scale: i32,
    /// Lattice index of `z_Q`.
    pub center: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub points: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diameter {
    pub value: f64,
    pub exact: bool,
}

/// Results of checking partition, nesting and roundness on every cube.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TreeAudit {
    pub partition_failures: usize,
    pub nesting_failures: usize,
    /// Cubes missing a lattice point of `B(z_Q, τ^{k-1})`.
    pub inner_ball_failures: usize,
    /// Cubes with a point outside `B(z_Q, τ^{k+1})`.
    pub outer_ball_failures: usize,
    /// Points reserved by two centers of the same scale.
    pub reservation_conflicts: usize,
    pub cubes: usize,
}

impl TreeAudit {
    pub fn passed(&self) -> bool {
        self.partition_failures == 0
            && self.nesting_failures == 0
            && self.inner_ball_failures == 0
            && self.outer_ball_failures == 0
    }
}

/// Boundary-smallness statistic over middle-scale cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    /// Per cube: `(id, fraction near boundary at t = 1/4, at t = 1/8)`.
    pub per_cube: Vec<(usize, f64, f64)>,
    /// Share of cubes whose fraction drops from `t = 1/4` to `t = 1/8`
    /// (or is already zero at `1/4`).
    pub decreasing_share: f64,
}

#[derive(Debug)]
pub struct CubeTree {
    lattice: GradedLattice,
    params: TreeParams,
    cubes: Vec<Cube>,
    /// `by_level[s]`: cube ids at scale `k_max - s`.
    by_level: Vec<Vec<usize>>,
    /// `member[s][x]`: cube id containing point `x` at level `s`.
    member: Vec<Vec<u32>>,
    audit: TreeAudit,
    diam: Vec<OnceCell<Diameter>>,
    radius_from_center: Vec<OnceCell<f64>>,
    two_q: Vec<OnceCell<Vec<u32>>>,
}

struct Net {
    centers: Vec<usize>,
    grid: FirstLayerGrid,
}

fn strictly_within(lat: &GradedLattice, grid: &FirstLayerGrid, x: &[f64], r: f64) -> bool {
    let mut hit = false;
    grid.for_candidates(x, r, |i| {
        if lat.metric().dist(x, lat.point(i)) < r {
            hit = true;
            return false;
        }
        true
    });
    hit
}

impl CubeTree {
    pub fn build(lattice: GradedLattice, params: TreeParams) -> Result<Self> {
        let TreeParams { tau, k_min, k_max } = params;
        if !(tau > 1.0) {
            return Err(Error::InvalidParameter("tau must exceed 1".into()));
        }
        if k_min > k_max {
            return Err(Error::InvalidParameter("k_min must not exceed k_max".into()));
        }
        let side = |k: i32| libm::pow(tau, k as f64);
        if side(k_max) < 2.0 * lattice.radius() * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter("tau^k_max must be at least 2R".into()));
        }
        if side(k_min) < lattice.resolution() * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter("tau^k_min must be at least h".into()));
        }
        let levels = (k_max - k_min + 1) as usize;
        let np = lattice.len();
        let scale_of = |s: usize| k_max - s as i32;

        // nested greedy nets, level 0 = root
        let mut nets: Vec<Net> = Vec::with_capacity(levels);
        for s in 0..levels {
            let r = side(scale_of(s));
            let mut centers: Vec<usize> = if s == 0 { vec![0] } else { nets[s - 1].centers.clone() };
            let mut grid = FirstLayerGrid::new(lattice.metric(), lattice.coords(), centers.iter().copied(), r);
            if s > 0 {
                let mut is_center = vec![false; np];
                for &c in &centers {
                    is_center[c] = true;
                }
                for i in 0..np {
                    if is_center[i] {
                        continue;
                    }
                    if !strictly_within(&lattice, &grid, lattice.point(i), r) {
                        centers.push(i);
                        grid.insert(lattice.coords(), lattice.dim(), i);
                    }
                }
            }
            nets.push(Net { centers, grid });
        }

        // reserved balls: reserve[s][y] = position of the reserving center
        let mut audit = TreeAudit::default();
        let mut reserve: Vec<Vec<u32>> = vec![vec![u32::MAX; np]; levels];
        for s in 0..levels {
            let r = side(scale_of(s) - 1);
            for (pos, &c) in nets[s].centers.iter().enumerate() {
                for y in lattice.within(lattice.point(c), r) {
                    if reserve[s][y] != u32::MAX && reserve[s][y] != pos as u32 {
                        audit.reservation_conflicts += 1;
                        continue;
                    }
                    reserve[s][y] = pos as u32;
                }
            }
        }

        // parents, top down; parent[s][pos] = position at level s-1
        let mut parent: Vec<Vec<u32>> = vec![Vec::new(); levels];
        let mut children: Vec<Vec<Vec<u32>>> = vec![Vec::new(); levels];
        children[0] = vec![Vec::new(); 1];
        let ancestor = |parent: &Vec<Vec<u32>>, s: usize, pos: u32, target: usize| {
            let mut p = pos;
            let mut lv = s;
            while lv > target {
                p = parent[lv][p as usize];
                lv -= 1;
            }
            p
        };
        for s in 1..levels {
            let ns = nets[s].centers.len();
            parent[s] = vec![0; ns];
            children[s] = vec![Vec::new(); ns];
            let r = side(scale_of(s) - 1);
            for pos in 0..ns {
                let z = nets[s].centers[pos];
                // constraints (level, position) from points of the reserved ball
                let mut cons: BTreeSet<(usize, u32)> = BTreeSet::new();
                for y in lattice.within(lattice.point(z), r) {
                    if reserve[s][y] != pos as u32 {
                        continue;
                    }
                    for t in 0..s {
                        if reserve[t][y] != u32::MAX {
                            cons.insert((t, reserve[t][y]));
                        }
                    }
                }
                let feasible = |p: u32| {
                    cons.iter()
                        .all(|&(t, w)| ancestor(&parent, s - 1, p, t) == w)
                };
                let zc = lattice.point(z);
                let mut best: Option<(f64, usize, u32)> = None;
                let consider = |p: u32, best: &mut Option<(f64, usize, u32)>| {
                    if !feasible(p) {
                        return;
                    }
                    let c = nets[s - 1].centers[p as usize];
                    let d = lattice.metric().dist(zc, lattice.point(c));
                    let better = match *best {
                        None => true,
                        Some((bd, bc, _)) => d < bd || (d == bd && c < bc),
                    };
                    if better {
                        *best = Some((d, c, p));
                    }
                };
                if let Some(&(t0, w0)) = cons.iter().max_by_key(|&&(t, _)| t) {
                    // descendants of the finest constraining center at level s-1
                    let mut frontier = vec![w0];
                    for kids in &children[t0..s - 1] {
                        frontier = frontier
                            .iter()
                            .flat_map(|&p| kids[p as usize].iter().copied())
                            .collect();
                    }
                    for p in frontier {
                        consider(p, &mut best);
                    }
                } else {
                    for p in 0..nets[s - 1].centers.len() as u32 {
                        consider(p, &mut best);
                    }
                }
                let p = match best {
                    Some((_, _, p)) => p,
                    None => {
                        audit.nesting_failures += 1;
                        0
                    }
                };
                parent[s][pos] = p;
                children[s - 1][p as usize].push(pos as u32);
            }
        }

        // bottom chain per point
        let bottom = levels - 1;
        let mut member_pos: Vec<Vec<u32>> = vec![vec![0; np]; levels];
        for y in 0..np {
            let yc = lattice.point(y);
            let finest = (0..levels).rev().find(|&s| reserve[s][y] != u32::MAX);
            let (mut s, mut pos) = match finest {
                Some(s) => (s, reserve[s][y]),
                None => {
                    let (c, _) = nets[bottom]
                        .grid
                        .nearest(lattice.metric(), lattice.coords(), yc, side(k_min))
                        .expect("bottom net nonempty");
                    let p = nets[bottom].centers.iter().position(|&z| z == c).unwrap() as u32;
                    (bottom, p)
                }
            };
            member_pos[s][y] = pos;
            while s < bottom {
                let mut best: Option<(f64, usize, u32)> = None;
                for &ch in &children[s][pos as usize] {
                    let c = nets[s + 1].centers[ch as usize];
                    let d = lattice.metric().dist(yc, lattice.point(c));
                    let better = match best {
                        None => true,
                        Some((bd, bc, _)) => d < bd || (d == bd && c < bc),
                    };
                    if better {
                        best = Some((d, c, ch));
                    }
                }
                pos = best.expect("every center is its own child").2;
                s += 1;
                member_pos[s][y] = pos;
            }
            // ancestors above the starting level
            let mut lv = finest.unwrap_or(bottom);
            let mut p = member_pos[lv][y];
            while lv > 0 {
                p = parent[lv][p as usize];
                lv -= 1;
                member_pos[lv][y] = p;
            }
        }

        // materialize cubes, ids scale-major from the root
        let mut base = vec![0usize; levels];
        let mut total = 0;
        for s in 0..levels {
            base[s] = total;
            total += nets[s].centers.len();
        }
        let mut cubes: Vec<Cube> = Vec::with_capacity(total);
        let mut by_level = vec![Vec::new(); levels];
        for s in 0..levels {
            for (pos, &c) in nets[s].centers.iter().enumerate() {
                let id = base[s] + pos;
                by_level[s].push(id);
                cubes.push(Cube {
                    id,
                    scale: scale_of(s),
                    center: c,
                    parent: if s == 0 { None } else { Some(base[s - 1] + parent[s][pos] as usize) },
                    children: if s + 1 < levels {
                        children[s][pos].iter().map(|&ch| base[s + 1] + ch as usize).collect()
                    } else {
                        Vec::new()
                    },
                    points: Vec::new(),
                });
            }
        }
        let mut member: Vec<Vec<u32>> = vec![vec![0; np]; levels];
        for s in 0..levels {
            for y in 0..np {
                let id = base[s] + member_pos[s][y] as usize;
                member[s][y] = id as u32;
                cubes[id].points.push(y as u32);
            }
        }
        let ncubes = cubes.len();
        let mut tree = CubeTree {
            lattice,
            params,
            cubes,
            by_level,
            member,
            audit,
            diam: (0..ncubes).map(|_| OnceCell::new()).collect(),
            radius_from_center: (0..ncubes).map(|_| OnceCell::new()).collect(),
            two_q: (0..ncubes).map(|_| OnceCell::new()).collect(),
        };
        tree.audit = tree.run_audit();
        Ok(tree)
    }

    fn run_audit(&self) -> TreeAudit {
        let mut a = self.audit.clone();
        a.cubes = self.cubes.len();
        let np = self.lattice.len();
        let levels = self.levels();
        for s in 0..levels {
            let total: usize = self.by_level[s].iter().map(|&id| self.cubes[id].points.len()).sum();
            if total != np {
                a.partition_failures += 1;
            }
            for &id in &self.by_level[s] {
                for &y in &self.cubes[id].points {
                    if self.member[s][y as usize] as usize != id {
                        a.partition_failures += 1;
                    }
                }
            }
        }
        for s in 1..levels {
            for y in 0..np {
                let q = self.member[s][y] as usize;
                if self.cubes[q].parent != Some(self.member[s - 1][y] as usize) {
                    a.nesting_failures += 1;
                }
            }
        }
        for q in &self.cubes {
            let s = self.level_of(q.scale);
            let z = self.lattice.point(q.center);
            let inner = self.side(q.scale) / self.params.tau;
            if self
                .lattice
                .within(z, inner)
                .iter()
                .any(|&y| self.member[s][y] as usize != q.id)
            {
                a.inner_ball_failures += 1;
            }
            let outer = self.side(q.scale) * self.params.tau;
            if q.points.iter().any(|&y| self.lattice.metric().dist(z, self.lattice.point(y as usize)) > outer) {
                a.outer_ball_failures += 1;
            }
        }
        a
    }

    pub fn lattice(&self) -> &GradedLattice {
        &self.lattice
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn audit(&self) -> &TreeAudit {
        &self.audit
    }

    pub fn levels(&self) -> usize {
        self.by_level.len()
    }

    pub fn level_of(&self, scale: i32) -> usize {
        (self.params.k_max - scale) as usize
    }

    /// `ℓ = τ^k`.
    pub fn side(&self, scale: i32) -> f64 {
        libm::pow(self.params.tau, scale as f64)
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> Result<&Cube> {
        self.cubes.get(id).ok_or(Error::UnknownCube(id))
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn cubes_at_scale(&self, scale: i32) -> &[usize] {
        &self.by_level[self.level_of(scale)]
    }

    /// Cube at `scale` containing lattice point `x`.
    pub fn cube_of(&self, x: usize, scale: i32) -> usize {
        self.member[self.level_of(scale)][x] as usize
    }

    /// `Δ(S)`: `S` and all its descendants, top down.
    pub fn descendants(&self, s: usize) -> Vec<usize> {
        let mut out = vec![s];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.cubes[out[i]].children.iter().copied());
            i += 1;
        }
        out
    }

    /// Scale-`k` ancestor of cube `q` (itself when `k` is its scale).
    pub fn ancestor(&self, q: usize, scale: i32) -> Option<usize> {
        let mut c = q;
        while self.cubes[c].scale < scale {
            c = self.cubes[c].parent?;
        }
        (self.cubes[c].scale == scale).then_some(c)
    }

    pub fn diameter(&self, q: usize) -> Diameter {
        *self.diam[q].get_or_init(|| self.compute_diameter(q))
    }

    fn compute_diameter(&self, q: usize) -> Diameter {
        let pts = &self.cubes[q].points;
        let lat = &self.lattice;
        if pts.len() <= EXACT_DIAMETER_MAX {
            let mut best: f64 = 0.0;
            for (a, &x) in pts.iter().enumerate() {
                let px = lat.point(x as usize);
                for &y in &pts[a + 1..] {
                    best = best.max(lat.metric().dist(px, lat.point(y as usize)));
                }
            }
            return Diameter { value: best, exact: true };
        }
        // iterated farthest point from a spread of seeds
        let mut best: f64 = 0.0;
        let stride = (pts.len() / 64).max(1);
        for start in (0..pts.len()).step_by(stride) {
            let mut cur = pts[start] as usize;
            for _ in 0..3 {
                let pc = lat.point(cur);
                let (far, d) = pts
                    .iter()
                    .map(|&y| (y as usize, lat.metric().dist(pc, lat.point(y as usize))))
                    .fold((cur, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
                best = best.max(d);
                if far == cur {
                    break;
                }
                cur = far;
            }
        }
        Diameter { value: best, exact: false }
    }

    /// `max_{x ∈ Q} d(z_Q, x)`.
    pub fn center_radius(&self, q: usize) -> f64 {
        *self.radius_from_center[q].get_or_init(|| {
            let z = self.lattice.point(self.cubes[q].center);
            self.cubes[q]
                .points
                .iter()
                .map(|&y| self.lattice.metric().dist(z, self.lattice.point(y as usize)))
                .fold(0.0, f64::max)
        })
    }

    /// `λQ`: lattice points within `(λ - 1)·diam(Q)` of `Q`, sorted.
    pub fn dilate_cube(&self, q: usize, lambda: f64) -> Vec<u32> {
        if lambda == 2.0 {
            return self.two_q(q).to_vec();
        }
        self.compute_dilate(q, lambda)
    }

    fn compute_dilate(&self, q: usize, lambda: f64) -> Vec<u32> {
        let cube = &self.cubes[q];
        let r = (lambda - 1.0).max(0.0) * self.diameter(q).value;
        if r == 0.0 {
            let mut v = cube.points.clone();
            v.sort_unstable();
            return v;
        }
        let lat = &self.lattice;
        let s = self.level_of(cube.scale);
        let reach = lat.metric().config().quasi_constant * (self.center_radius(q) + r) * (1.0 + 1e-9);
        let local = FirstLayerGrid::new(
            lat.metric(),
            lat.coords(),
            cube.points.iter().map(|&y| y as usize),
            r.max(lat.resolution()),
        );
        let mut out: Vec<u32> = lat
            .within(lat.point(cube.center), reach)
            .into_iter()
            .filter(|&y| {
                self.member[s][y] as usize == q || local.any_within(lat.metric(), lat.coords(), lat.point(y), r)
            })
            .map(|y| y as u32)
            .collect();
        // points of Q beyond the reach (possible for a quasi-metric) stay in
        for &y in &cube.points {
            if out.binary_search(&y).is_err() {
                let at = out.partition_point(|&v| v < y);
                out.insert(at, y);
            }
        }
        out
    }

    /// `2Q`, cached.
    pub fn two_q(&self, q: usize) -> &[u32] {
        self.two_q[q].get_or_init(|| self.compute_dilate(q, 2.0))
    }

    pub fn in_two_q(&self, q: usize, y: usize) -> bool {
        self.two_q(q).binary_search(&(y as u32)).is_ok()
    }

    /// `Q̂`: cubes of the same scale meeting `2Q` (always contains `Q`).
    pub fn hat_cube(&self, q: usize) -> Vec<usize> {
        let s = self.level_of(self.cubes[q].scale);
        let mut out: Vec<usize> = self.two_q(q).iter().map(|&y| self.member[s][y as usize] as usize).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Finest cube `Q ∋ x` with `y ∈ 2Q`, and `d(x, y) / diam(Q)`.
    pub fn smallest_cube_2q(&self, x: usize, y: usize) -> (usize, f64) {
        let d = self.lattice.dist(x, y);
        for s in (0..self.levels()).rev() {
            let q = self.member[s][x] as usize;
            if self.in_two_q(q, y) {
                let dm = self.diameter(q).value;
                return (q, if dm > 0.0 { d / dm } else { f64::INFINITY });
            }
        }
        let dm = self.diameter(0).value;
        (0, if dm > 0.0 { d / dm } else { f64::INFINITY })
    }

    /// `T`: the largest `|Q̂| - 1` over all cubes.
    pub fn doubling_count(&self) -> usize {
        (0..self.cubes.len()).map(|q| self.hat_cube(q).len() - 1).max().unwrap_or(0)
    }

    /// Fraction of the points of `Q` within `t·ℓ(Q)` of a lattice point
    /// outside `Q`.
    pub fn boundary_fraction(&self, q: usize, t: f64) -> f64 {
        let cube = &self.cubes[q];
        if cube.points.is_empty() {
            return 0.0;
        }
        let s = self.level_of(cube.scale);
        let r = t * self.side(cube.scale);
        let lat = &self.lattice;
        let near = cube
            .points
            .iter()
            .filter(|&&x| {
                let px = lat.point(x as usize);
                let mut hit = false;
                lat.index().for_candidates(px, r, |y| {
                    if self.member[s][y] as usize != q && lat.metric().dist(px, lat.point(y)) <= r {
                        hit = true;
                        return false;
                    }
                    true
                });
                hit
            })
            .count();
        near as f64 / cube.points.len() as f64
    }

    /// Boundary statistic at `t ∈ {1/4, 1/8}` over the scales strictly
    /// between the root and the bottom.
    pub fn boundary_smallness(&self) -> BoundaryReport {
        let mut per_cube = Vec::new();
        let levels = self.levels();
        for s in 1..levels.saturating_sub(1) {
            for &q in &self.by_level[s] {
                per_cube.push((q, self.boundary_fraction(q, 0.25), self.boundary_fraction(q, 0.125)));
            }
        }
        let good = per_cube.iter().filter(|&&(_, a, b)| a == 0.0 || b < a).count();
        BoundaryReport {
            decreasing_share: if per_cube.is_empty() { 1.0 } else { good as f64 / per_cube.len() as f64 },
            per_cube,
        }
    }

    /// Uniformly sampled distinct pairs of lattice points.
    pub fn sample_pairs(&self, count: usize, seed: u64) -> Vec<(usize, usize)> {
        let n = self.lattice.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        if n < 2 {
            return out;
        }
        while out.len() < count {
            let x = rng.random_range(0..n);
            let y = rng.random_range(0..n);
            if x != y {
                out.push((x, y));
            }
        }
        out
    }
}

/// Measured `b` from the inequality `d(x,y) ≥ 10 b diam(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BEstimate {
    pub b: f64,
    pub min_ratio: f64,
    pub pairs: usize,
    /// Pairs whose smallest cube is at the bottom scale, where the inequality
    /// is not expected to hold at finite resolution.
    pub skipped: usize,
}

/// `b = min(1/10, min ratio / 10)` over the given pairs.
pub fn estimate_b_from_pairs(tree: &CubeTree, pairs: &[(usize, usize)]) -> BEstimate {
    let mut min_ratio = f64::INFINITY;
    let mut skipped = 0;
    let bottom = tree.params().k_min;
    for &(x, y) in pairs {
        let (q, ratio) = tree.smallest_cube_2q(x, y);
        if tree.cubes()[q].scale == bottom {
            skipped += 1;
            continue;
        }
        min_ratio = min_ratio.min(ratio);
    }
    BEstimate {
        b: (min_ratio / 10.0).min(0.1),
        min_ratio,
        pairs: pairs.len(),
        skipped,
    }
}

pub fn estimate_b(tree: &CubeTree, pairs: usize, seed: u64) -> BEstimate {
    estimate_b_from_pairs(tree, &tree.sample_pairs(pairs, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use crate::group::CarnotGroup;
    use crate::lattice::DEFAULT_BUDGET;
    use crate::norm::Metric;
    use num_rational::BigRational;

    fn heis_tree(h: f64) -> CubeTree {
        let m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, h, DEFAULT_BUDGET).unwrap();
        let p = TreeParams::auto(&lat, 4.0);
        CubeTree::build(lat, p).unwrap()
    }

    #[test]
    fn default_scales() {
        let t = heis_tree(0.125);
        assert_eq!((t.params().k_min, t.params().k_max), (-1, 1));
        assert_eq!(t.cubes_at_scale(1), &[0]);
    }

    #[test]
    fn heisenberg_tree_audits() {
        let t = heis_tree(0.125);
        let a = t.audit();
        assert!(a.passed(), "{a:?}");
        let n = t.lattice().len();
        for k in -1..=1 {
            let total: usize = t.cubes_at_scale(k).iter().map(|&q| t.cubes()[q].points.len()).sum();
            assert_eq!(total, n);
        }
    }

    #[test]
    fn dilation_and_hat() {
        let t = heis_tree(0.25);
        for q in 0..t.cubes().len() {
            let two = t.two_q(q);
            for &y in &t.cubes()[q].points {
                assert!(two.binary_search(&y).is_ok());
            }
            assert!(t.hat_cube(q).contains(&q));
        }
        // root's double is everything
        assert_eq!(t.two_q(0).len(), t.lattice().len());
    }

    #[test]
    fn dilation_matches_brute_force() {
        let t = heis_tree(0.25);
        let lat = t.lattice();
        for &q in t.cubes_at_scale(0) {
            let r = t.diameter(q).value;
            let brute: Vec<u32> = (0..lat.len())
                .filter(|&y| t.cubes()[q].points.iter().any(|&x| lat.dist(x as usize, y) <= r))
                .map(|y| y as u32)
                .collect();
            assert_eq!(t.two_q(q), &brute[..]);
        }
    }

    #[test]
    fn smallest_cube_and_b() {
        let t = heis_tree(0.25);
        let (q, _) = t.smallest_cube_2q(0, t.lattice().len() - 1);
        assert!(t.in_two_q(q, t.lattice().len() - 1));
        let e = estimate_b(&t, 200, 1);
        assert!(e.b > 0.0 && e.b <= 0.1);
    }

    #[test]
    fn single_level_tree() {
        let m = Metric::unit(&CarnotGroup::new(abelian::<BigRational>(2).unwrap()));
        let lat = GradedLattice::build(&m, &[0.0; 2], 1.0, 1.0, DEFAULT_BUDGET).unwrap();
        let p = TreeParams { tau: 4.0, k_min: 1, k_max: 1 };
        let t = CubeTree::build(lat, p).unwrap();
        assert!(t.audit().passed());
        assert_eq!(estimate_b(&t, 10, 0).b, 0.1);
    }

    #[test]
    fn bad_params() {
        let m = Metric::unit(&CarnotGroup::new(abelian::<BigRational>(2).unwrap()));
        let lat = GradedLattice::build(&m, &[0.0; 2], 1.0, 0.5, DEFAULT_BUDGET).unwrap();
        assert!(CubeTree::build(lat.clone(), TreeParams { tau: 1.0, k_min: 0, k_max: 1 }).is_err());
        assert!(CubeTree::build(lat.clone(), TreeParams { tau: 4.0, k_min: 0, k_max: 0 }).is_err());
        assert!(CubeTree::build(lat, TreeParams { tau: 4.0, k_min: -2, k_max: 1 }).is_err());
    }
}
