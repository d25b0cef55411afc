//! Hausdorff-content upper bounds, ε-nets of homomorphic images, and the
//! direct weak-biLipschitz test on a cube.
//!
//! Content at radius `r` partitions the points by graded cells (layer `j`
//! side `(r/λ_j)^j`, keyed relative to the lower layers' center) and covers
//! each occupied cell by the ball about the cell's geometric center through
//! its farthest point, with radius at least the resolution floor. A fixed
//! cell grid makes the estimate monotone under subsets, and subadditive at
//! each radius once the floor is positive.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cubes::CubeTree;
use crate::error::{Error, Result};
use crate::lattice::GradedLattice;
use crate::maps::{LipschitzMap, MapSample};
use crate::norm::Metric;
use crate::spatial::FirstLayerGrid;

/// `R · 2^{-j}` for `j = 0..=levels`.
pub fn geometric_radii(r: f64, levels: usize) -> Vec<f64> {
    (0..=levels).map(|j| r / libm::pow(2.0, j as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentConfig {
    /// Homogeneous dimension `N` of the content.
    pub dimension: f64,
    pub radii: Vec<f64>,
    /// Smallest ball radius used for an occupied cell. With a zero floor a
    /// set of diameter zero has content zero; with a positive floor every
    /// sample point is covered by at least one such ball.
    pub floor: f64,
    /// Center of the single-ball candidate cover.
    pub anchor: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContentEstimate {
    pub upper: f64,
    pub cover: Vec<(Vec<f64>, f64)>,
    pub dimension: f64,
    /// Grid radius achieving `upper` (`None` for the single-ball cover or a
    /// one-point set).
    pub best_radius: Option<f64>,
    /// `(r, Σ (2ρ)^N)` per grid radius.
    pub per_radius: Vec<(f64, f64)>,
}

/// Integer cell key of `x` and the cell's center. Layer `j` is keyed after
/// left-translating by the center built from layers `< j`, so the center is
/// close to every point of its cell in each layer.
fn cell_of(metric: &Metric, x: &[f64], r: f64) -> (Vec<i64>, Vec<f64>) {
    let lam = &metric.config().lambdas;
    let n = x.len();
    let mut key = Vec::with_capacity(n);
    let mut center = vec![0.0; n];
    let mut step = vec![0.0; n];
    for j in 1..=metric.step() {
        let side = libm::pow(r / lam[j - 1], j as f64);
        let u = metric.mul(&metric.inverse(&center), x);
        step.iter_mut().for_each(|c| *c = 0.0);
        for i in metric.layer_range(j) {
            let k = libm::floor(u[i] / side) as i64;
            key.push(k);
            step[i] = (k as f64 + 0.5) * side;
        }
        center = metric.mul(&center, &step);
    }
    (key, center)
}

/// Cell cover at one radius: `(Σ (2ρ)^N, balls)`.
pub fn cell_cover(metric: &Metric, points: &[f64], r: f64, floor: f64, dimension: f64) -> (f64, Vec<(Vec<f64>, f64)>) {
    let n = metric.dim();
    let mut cells: BTreeMap<Vec<i64>, (Vec<f64>, f64)> = BTreeMap::new();
    for p in points.chunks_exact(n) {
        let (key, c) = cell_of(metric, p, r);
        let e = cells.entry(key).or_insert((c, floor));
        e.1 = e.1.max(metric.dist(&e.0, p));
    }
    let total = cells.values().map(|(_, rho)| libm::pow(2.0 * rho, dimension)).sum();
    let cover = cells.into_values().collect();
    (total, cover)
}

/// Upper bound on `ℋ^N_∞` of a finite point set (flat coordinates).
pub fn content_upper(metric: &Metric, points: &[f64], cfg: &ContentConfig) -> Result<ContentEstimate> {
    let n = metric.dim();
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let first = &points[..n];
    // with a positive floor every sample stands for a cell of that radius
    if cfg.floor == 0.0 && points.chunks_exact(n).all(|p| p == first) {
        return Ok(ContentEstimate {
            upper: 0.0,
            cover: vec![(first.to_vec(), 0.0)],
            dimension: cfg.dimension,
            best_radius: None,
            per_radius: Vec::new(),
        });
    }
    let mut best: Option<ContentEstimate> = None;
    if let Some(anchor) = &cfg.anchor {
        let rho = points.chunks_exact(n).map(|p| metric.dist(anchor, p)).fold(cfg.floor, f64::max);
        best = Some(ContentEstimate {
            upper: libm::pow(2.0 * rho, cfg.dimension),
            cover: vec![(anchor.clone(), rho)],
            dimension: cfg.dimension,
            best_radius: None,
            per_radius: Vec::new(),
        });
    }
    let mut per_radius = Vec::new();
    for &r in &cfg.radii {
        let (total, cover) = cell_cover(metric, points, r, cfg.floor, cfg.dimension);
        per_radius.push((r, total));
        if best.as_ref().is_none_or(|b| total < b.upper) {
            best = Some(ContentEstimate {
                upper: total,
                cover,
                dimension: cfg.dimension,
                best_radius: Some(r),
                per_radius: Vec::new(),
            });
        }
    }
    let mut est = best.ok_or_else(|| Error::InvalidParameter("content needs a radius grid or an anchor".into()))?;
    est.per_radius = per_radius;
    Ok(est)
}

/// Whether every point lies in some ball of the cover.
pub fn cover_covers(metric: &Metric, points: &[f64], cover: &[(Vec<f64>, f64)]) -> bool {
    points
        .chunks_exact(metric.dim())
        .all(|p| cover.iter().any(|(c, r)| metric.dist(c, p) <= *r * (1.0 + 1e-12) + 1e-15))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetCover {
    /// Flat codomain coordinates of the net.
    pub net: Vec<f64>,
    pub eps: f64,
    /// `ε·ℓ`.
    pub radius: f64,
    pub count: usize,
    pub images: usize,
    pub covers_all: bool,
    pub min_separation: f64,
}

/// Greedy maximal `εℓ`-separated net of `f(B)` for the lattice ball `B` of
/// radius `ℓ`, scanned in lattice-index order.
pub fn epsilon_net_cover(f: &LipschitzMap, lattice: &GradedLattice, eps: f64) -> Result<NetCover> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let cod = f.codomain();
    let cd = cod.dim();
    let radius = eps * lattice.radius();
    let mut images = vec![0.0; lattice.len() * cd];
    for i in 0..lattice.len() {
        f.apply_into(lattice.point(i), &mut images[i * cd..(i + 1) * cd]);
    }
    let mut ids: Vec<usize> = Vec::new();
    let mut grid = FirstLayerGrid::new(cod, &images, core::iter::empty(), radius);
    for i in 0..lattice.len() {
        let p = &images[i * cd..(i + 1) * cd];
        let mut close = false;
        grid.for_candidates(p, radius, |k| {
            if cod.dist(&images[k * cd..(k + 1) * cd], p) < radius {
                close = true;
                return false;
            }
            true
        });
        if !close {
            ids.push(i);
            grid.insert(&images, cd, i);
        }
    }
    let mut min_separation = f64::INFINITY;
    for (a, &i) in ids.iter().enumerate() {
        for &k in &ids[a + 1..] {
            min_separation = min_separation.min(cod.dist(&images[i * cd..(i + 1) * cd], &images[k * cd..(k + 1) * cd]));
        }
    }
    let covers_all = (0..lattice.len()).all(|i| grid.any_within(cod, &images, &images[i * cd..(i + 1) * cd], radius));
    let mut net = Vec::with_capacity(ids.len() * cd);
    for &i in &ids {
        net.extend_from_slice(&images[i * cd..(i + 1) * cd]);
    }
    Ok(NetCover {
        count: ids.len(),
        net,
        eps,
        radius,
        images: lattice.len(),
        covers_all,
        min_separation,
    })
}

/// Least-squares slope of `log N_ε` against `log(1/ε)`.
pub fn loglog_slope(samples: &[(f64, usize)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(e, c)| (libm::log(1.0 / e), libm::log(c as f64)))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeakBilip {
    Pass {
        min_ratio: f64,
        pairs: usize,
        exhaustive: bool,
        /// No pair of `2Q` is farther apart than `b·diam(Q)`.
        vacuous: bool,
    },
    Violation {
        x: usize,
        y: usize,
        ratio: f64,
        pairs: usize,
    },
}

/// Tests `d_H(f x, f x') > δ d(x, x')` over pairs of `2Q` with
/// `d(x, x') > b·diam(Q)`: every pair when there are at most `cap` of them,
/// otherwise `samples` random pairs. Reports the worst pair.
pub fn weak_bilip_check(
    f: &LipschitzMap,
    values: &MapSample,
    tree: &CubeTree,
    q: usize,
    delta: f64,
    b: f64,
    cap: usize,
    samples: usize,
    seed: u64,
) -> WeakBilip {
    let pts = tree.two_q(q);
    let lat = tree.lattice();
    let threshold = b * tree.diameter(q).value;
    let cod = f.codomain();
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut pairs = 0;
    let mut test = |x: usize, y: usize| {
        let d = lat.dist(x, y);
        if d > threshold {
            pairs += 1;
            let ratio = cod.dist(values.image(x), values.image(y)) / d;
            if worst.is_none_or(|w| ratio < w.2) {
                worst = Some((x, y, ratio));
            }
        }
    };
    let m = pts.len();
    let exhaustive = m * m.saturating_sub(1) / 2 <= cap;
    if exhaustive {
        for a in 0..m {
            for c in a + 1..m {
                test(pts[a] as usize, pts[c] as usize);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let a = rng.random_range(0..m);
            let c = rng.random_range(0..m);
            if a != c {
                test(pts[a] as usize, pts[c] as usize);
            }
        }
    }
    match worst {
        Some((x, y, ratio)) if ratio <= delta => WeakBilip::Violation { x, y, ratio, pairs },
        Some((_, _, ratio)) => WeakBilip::Pass { min_ratio: ratio, pairs, exhaustive, vacuous: false },
        None => WeakBilip::Pass { min_ratio: f64::INFINITY, pairs: 0, exhaustive, vacuous: true },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use crate::cubes::{estimate_b, TreeParams};
    use crate::group::CarnotGroup;
    use crate::hom::Homomorphism;
    use crate::lattice::DEFAULT_BUDGET;
    use crate::scalar::rat;
    use num_rational::BigRational;

    fn heis() -> Metric {
        Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()))
    }

    fn cfg(radii: Vec<f64>, anchor: Option<Vec<f64>>) -> ContentConfig {
        ContentConfig { dimension: 4.0, radii, floor: 0.0, anchor }
    }

    #[test]
    fn content_examples() {
        let m = heis();
        let one = content_upper(&m, &[0.3, 0.1, 0.2], &cfg(vec![0.5], None)).unwrap();
        assert_eq!(one.upper, 0.0);
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        let ball = content_upper(&m, lat.coords(), &cfg(geometric_radii(1.0, 3), Some(vec![0.0; 3]))).unwrap();
        assert!(ball.upper <= 16.0 + 1e-12);
        assert!(cover_covers(&m, lat.coords(), &ball.cover));
        // horizontal unit segment
        let seg: Vec<f64> = (0..=256).flat_map(|i| [i as f64 / 256.0, 0.0, 0.0]).collect();
        let est = content_upper(&m, &seg, &cfg(vec![1.0 / 16.0], None)).unwrap();
        assert!(est.upper <= 0.01, "{}", est.upper);
        assert!(cover_covers(&m, &seg, &est.cover));
        assert!(content_upper(&m, &[], &cfg(vec![1.0], None)).is_err());
    }

    #[test]
    fn identity_net_and_collapse_slope() {
        let m = heis();
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 1.0 / 16.0, DEFAULT_BUDGET).unwrap();
        let id = LipschitzMap::identity(&m);
        let net = epsilon_net_cover(&id, &lat, 1.0).unwrap();
        assert!(net.count >= 1 && net.count < 20 && net.covers_all);
        let g = heisenberg::<BigRational>();
        let line = abelian::<BigRational>(1).unwrap();
        let proj = Homomorphism::from_first_layer(vec![vec![rat(1, 1), rat(0, 1)]], &g, &line).unwrap();
        let cod = Metric::unit(&CarnotGroup::new(line));
        let f = LipschitzMap::collapse(&proj, &m, &cod).unwrap();
        let mut counts = Vec::new();
        for eps in [0.25, 0.125, 0.0625] {
            let c = epsilon_net_cover(&f, &lat, eps).unwrap();
            assert!(c.covers_all && c.min_separation >= c.radius);
            counts.push((eps, c.count));
        }
        let slope = loglog_slope(&counts);
        assert!(slope <= 3.3 && slope > 0.5, "{slope}");
    }

    #[test]
    fn weak_bilip_examples() {
        let m = heis();
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        let p = TreeParams::auto(&lat, 4.0);
        let tree = CubeTree::build(lat, p).unwrap();
        let b = estimate_b(&tree, 2000, 1).b;
        let q = tree.cubes_at_scale(0)[0];
        let id = LipschitzMap::identity(&m);
        let vals = MapSample::new(&id, tree.lattice(), 100, 1).unwrap();
        match weak_bilip_check(&id, &vals, &tree, q, 0.5, b, 10_000_000, 0, 0) {
            WeakBilip::Pass { min_ratio, exhaustive, .. } => {
                assert!((min_ratio - 1.0).abs() < 1e-12 && exhaustive)
            }
            v => panic!("{v:?}"),
        }
        let c = LipschitzMap::constant(&m, &m);
        let vals = MapSample::new(&c, tree.lattice(), 100, 1).unwrap();
        assert!(matches!(
            weak_bilip_check(&c, &vals, &tree, q, 0.5, b, 10_000_000, 0, 0),
            WeakBilip::Violation { .. }
        ));
    }
}
