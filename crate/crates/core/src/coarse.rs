//! Coarse differentiation: the `p`-parallelogram excess `∂_f^(p)` of a map
//! along horizontal segments, its segment average `α_f^(p)`, the cube
//! average `α_f^(p)(Q, L)` over lines through `B(z_Q, Lℓ)`, and the Carleson
//! sum over a cube's descendants.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cubes::CubeTree;
use crate::error::{Error, Result};
use crate::maps::LipschitzMap;
use crate::norm::Metric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaParams {
    pub p: f64,
    /// Enlargement `L ≥ 1`.
    pub l_scale: f64,
    pub directions: usize,
    /// Translates per direction.
    pub translates: usize,
    /// Full-step intervals of the quadrature grid on each segment.
    pub segment_nodes: usize,
    /// Nodes used to locate a line's intersection with `B(z_Q, 3Lℓ)`.
    pub scan_nodes: usize,
    /// Layer `j ≥ 2` of the translate box has half-width `K (Lℓ)^j`.
    pub slab_factor: f64,
}

impl Default for AlphaParams {
    fn default() -> Self {
        AlphaParams {
            p: 2.0,
            l_scale: 1.0,
            directions: 8,
            translates: 16,
            segment_nodes: 16,
            scan_nodes: 64,
            slab_factor: 4.0,
        }
    }
}

impl AlphaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        if !(self.l_scale >= 1.0) {
            return Err(Error::InvalidParameter("L must be at least 1".into()));
        }
        if self.directions == 0 || self.translates == 0 || self.segment_nodes < 2 || self.scan_nodes < 3 {
            return Err(Error::InvalidParameter("sample counts must be positive".into()));
        }
        if !(self.slab_factor > 0.0) {
            return Err(Error::InvalidParameter("slab factor must be positive".into()));
        }
        Ok(())
    }
}

/// `t ↦ base · exp(t·dir)` for `t ∈ [a, b]`, `dir` a unit first-layer vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub base: Vec<f64>,
    pub dir: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl Segment {
    pub fn point(&self, metric: &Metric, t: f64) -> Vec<f64> {
        metric.horizontal_point(&self.base, &self.dir, t)
    }
}

/// `∂^(p)` from the three image distances and `|y - x|`.
pub fn partial_from_distances(d_xm: f64, d_my: f64, d_xy: f64, len: f64, p: f64) -> f64 {
    let half = len / 2.0;
    0.5 * (libm::pow(d_xm / half, p) + libm::pow(d_my / half, p)) - libm::pow(d_xy / len, p)
}

/// `∂_f^(p)(x, y)` for parameters `x < y` of the segment's line.
pub fn partial_p(f: &LipschitzMap, seg: &Segment, x: f64, y: f64, p: f64) -> Result<f64> {
    if !(y > x) {
        return Err(Error::DegenerateSegment);
    }
    let dom = f.domain();
    let fx = f.apply(&seg.point(dom, x));
    let fm = f.apply(&seg.point(dom, 0.5 * (x + y)));
    let fy = f.apply(&seg.point(dom, y));
    let cod = f.codomain();
    Ok(partial_from_distances(cod.dist(&fx, &fm), cod.dist(&fm, &fy), cod.dist(&fx, &fy), y - x, p))
}

/// Quadrature of `α` on `n` full-step intervals. Images are taken on the
/// half-step grid so every midpoint is a node; trapezoid weights in each
/// variable, summed over `i < j`.
fn alpha_from_images(cod: &Metric, images: &[Vec<f64>], len: f64, p: f64, min_partial: &mut f64) -> f64 {
    let n = (images.len() - 1) / 2;
    let step = len / n as f64;
    let w = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..=n {
            let (x, m, y) = (&images[2 * i], &images[i + j], &images[2 * j]);
            let d = partial_from_distances(cod.dist(x, m), cod.dist(m, y), cod.dist(x, y), (j - i) as f64 * step, p);
            *min_partial = min_partial.min(d);
            sum += w(i) * w(j) * d;
        }
    }
    sum * step * step / (2.0 * len * len)
}

fn segment_images(f: &LipschitzMap, seg: &Segment, n: usize) -> Vec<Vec<f64>> {
    (0..=2 * n)
        .map(|k| f.apply(&seg.point(f.domain(), seg.a + (seg.b - seg.a) * k as f64 / (2 * n) as f64)))
        .collect()
}

/// `α_f^(p)([a, b]) = (2(b-a)²)^{-1} ∬_{a ≤ x < y ≤ b} ∂ dx dy`.
pub fn alpha_segment(f: &LipschitzMap, seg: &Segment, p: f64, nodes: usize) -> Result<f64> {
    if nodes < 2 || !(seg.b > seg.a) {
        return Err(Error::DegenerateSegment);
    }
    let images = segment_images(f, seg, nodes);
    let mut min = f64::INFINITY;
    Ok(alpha_from_images(f.codomain(), &images, seg.b - seg.a, p, &mut min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeAlpha {
    pub cube: usize,
    pub scale: i32,
    pub alpha: f64,
    /// `|Q|` as point count times `h^N`.
    pub measure: f64,
    pub lines: usize,
    pub lines_hit: usize,
    /// Smallest `∂` evaluated.
    pub min_partial: f64,
}

fn mix(seed: u64, a: u64) -> u64 {
    // splitmix64 step
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cube generator, independent of evaluation order.
pub fn cube_rng(seed: u64, scale: i32, cube: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed, scale as i64 as u64), cube as u64))
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    libm::sqrt(-2.0 * libm::log(u)) * libm::cos(core::f64::consts::TAU * v)
}

/// Unit directions of `V_1`: `±1` in dimension 1, stratified angles in
/// dimension 2, normalized Gaussians otherwise.
fn directions<R: Rng>(rng: &mut R, m1: usize, count: usize) -> Vec<Vec<f64>> {
    match m1 {
        1 => vec![vec![1.0]; count],
        2 => {
            let off: f64 = rng.random();
            (0..count)
                .map(|i| {
                    let th = core::f64::consts::TAU * (i as f64 + off) / count as f64;
                    vec![libm::cos(th), libm::sin(th)]
                })
                .collect()
        }
        _ => (0..count)
            .map(|_| loop {
                let g: Vec<f64> = (0..m1).map(|_| gaussian(rng)).collect();
                let n = libm::sqrt(g.iter().map(|c| c * c).sum::<f64>());
                if n > 1e-9 {
                    break g.iter().map(|c| c / n).collect();
                }
            })
            .collect(),
    }
}

/// Orthonormal basis of `v^⊥` in `R^m` by Gram-Schmidt on the standard basis.
fn orthogonal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let m = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for e in 0..m {
        let mut u = vec![0.0; m];
        u[e] = 1.0;
        for b in &basis {
            let dot: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let n = libm::sqrt(u.iter().map(|c| c * c).sum::<f64>());
        if n > 1e-6 {
            basis.push(u.iter().map(|c| c / n).collect());
        }
        if basis.len() == m {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Monte Carlo `α_f^(p)(Q, L)`. Translates `x = z_Q · exp(w)` are drawn
/// uniformly from a box in `v^⊥ ⊕ V_2 ⊕ …` (first layer `|w_i| ≤ Lℓ/λ_1`,
/// layer `j` `|w_i| ≤ K (Lℓ)^j`), which contains every translate whose line
/// meets `B(z_Q, Lℓ)`. On each line the segment is the hull of the scan
/// nodes inside `B(z_Q, 3Lℓ)`. The `x`-integral is the box volume times
/// the sample mean, divided by `(Lℓ)^{N-1}`.
pub fn alpha_cube(f: &LipschitzMap, tree: &CubeTree, q: usize, params: &AlphaParams, seed: u64) -> Result<CubeAlpha> {
    params.validate()?;
    let cube = tree.cube(q)?;
    let metric = f.domain();
    let lat = tree.lattice();
    let z = lat.point(cube.center).to_vec();
    let ll = params.l_scale * tree.side(cube.scale);
    let lam1 = metric.config().lambdas[0];
    let m1 = metric.layer_dims()[0];
    let n_dim = metric.homogeneous_dimension() as f64;
    let mut rng = cube_rng(seed, cube.scale, q);

    let w1 = ll / lam1;
    let mut volume = libm::pow(2.0 * w1, (m1 - 1) as f64);
    for j in 2..=metric.step() {
        let wj = params.slab_factor * libm::pow(ll, j as f64);
        volume *= libm::pow(2.0 * wj, metric.layer_dims()[j - 1] as f64);
    }
    let t_max = 3.0 * ll / lam1;
    let mut total = 0.0;
    let mut hit = 0;
    let mut min_partial = f64::INFINITY;
    let mut w = vec![0.0; metric.dim()];
    for v in directions(&mut rng, m1, params.directions) {
        let perp = orthogonal_complement(&v);
        let mut acc = 0.0;
        for _ in 0..params.translates {
            w.iter_mut().for_each(|c| *c = 0.0);
            for b in &perp {
                let s = rng.random_range(-w1..=w1);
                for (i, c) in b.iter().enumerate() {
                    w[i] += s * c;
                }
            }
            for j in 2..=metric.step() {
                let wj = params.slab_factor * libm::pow(ll, j as f64);
                for i in metric.layer_range(j) {
                    w[i] = rng.random_range(-wj..=wj);
                }
            }
            let base = metric.mul(&z, &w);
            // the first layer of z⁻¹·x·exp(tv) is w_1 + tv with w_1 ⊥ v, so
            // every relevant parameter lies in [-3Lℓ/λ_1, 3Lℓ/λ_1]
            let mut near = false;
            let mut first: Option<f64> = None;
            let mut last = 0.0;
            for k in 0..params.scan_nodes {
                let t = -t_max + 2.0 * t_max * k as f64 / (params.scan_nodes - 1) as f64;
                let d = metric.dist(&z, &metric.horizontal_point(&base, &v, t));
                if d <= ll {
                    near = true;
                }
                if d <= 3.0 * ll {
                    first.get_or_insert(t);
                    last = t;
                }
            }
            if !near {
                continue;
            }
            hit += 1;
            let a = first.expect("a node within Lℓ is within 3Lℓ");
            if last > a {
                let seg = Segment { base, dir: v.clone(), a, b: last };
                let images = segment_images(f, &seg, params.segment_nodes);
                acc += alpha_from_images(f.codomain(), &images, last - a, params.p, &mut min_partial);
            }
        }
        total += acc / params.translates as f64;
    }
    let mean = total / params.directions as f64;
    let alpha = volume * mean / libm::pow(ll, n_dim - 1.0);
    Ok(CubeAlpha {
        cube: q,
        scale: cube.scale,
        alpha,
        measure: cube.points.len() as f64 * lat.cell_volume(),
        lines: params.directions * params.translates,
        lines_hit: hit,
        min_partial,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlesonReport {
    pub root: usize,
    /// `Σ_{Q ∈ Δ(S)} α(Q)|Q| / |S|`.
    pub total: f64,
    /// `(scale, partial sum)`, coarsest first.
    pub per_scale: Vec<(i32, f64)>,
    pub min_alpha: f64,
}

/// Carleson sum over `Δ(S)` from precomputed cube values (indexed by cube id).
pub fn carleson_from(tree: &CubeTree, s: usize, alphas: &[CubeAlpha]) -> CarlesonReport {
    let cubes = tree.cubes();
    let measure = |q: usize| cubes[q].points.len() as f64 * tree.lattice().cell_volume();
    let s_measure = measure(s);
    let mut per_scale: Vec<(i32, f64)> = Vec::new();
    let mut min_alpha = f64::INFINITY;
    for q in tree.descendants(s) {
        let a = alphas[q].alpha;
        min_alpha = min_alpha.min(a);
        let term = a * measure(q) / s_measure;
        match per_scale.iter_mut().find(|(k, _)| *k == cubes[q].scale) {
            Some(e) => e.1 += term,
            None => per_scale.push((cubes[q].scale, term)),
        }
    }
    CarlesonReport {
        root: s,
        total: per_scale.iter().map(|e| e.1).sum(),
        per_scale,
        min_alpha,
    }
}

/// `α` for every cube of `Δ(S)`; entries outside `Δ(S)` are left at zero.
pub fn alpha_all(f: &LipschitzMap, tree: &CubeTree, s: usize, params: &AlphaParams, seed: u64) -> Result<Vec<CubeAlpha>> {
    let mut out: Vec<CubeAlpha> = tree
        .cubes()
        .iter()
        .map(|c| CubeAlpha {
            cube: c.id,
            scale: c.scale,
            alpha: 0.0,
            measure: c.points.len() as f64 * tree.lattice().cell_volume(),
            lines: 0,
            lines_hit: 0,
            min_partial: f64::INFINITY,
        })
        .collect();
    for q in tree.descendants(s) {
        out[q] = alpha_cube(f, tree, q, params, seed)?;
    }
    Ok(out)
}

pub fn carleson_sum(f: &LipschitzMap, tree: &CubeTree, s: usize, params: &AlphaParams, seed: u64) -> Result<CarlesonReport> {
    let alphas = alpha_all(f, tree, s, params, seed)?;
    Ok(carleson_from(tree, s, &alphas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use crate::cubes::TreeParams;
    use crate::group::CarnotGroup;
    use crate::lattice::{GradedLattice, DEFAULT_BUDGET};
    use num_rational::BigRational;

    fn line() -> Metric {
        Metric::unit(&CarnotGroup::new(abelian::<BigRational>(1).unwrap()))
    }

    fn unit_segment(a: f64, b: f64) -> Segment {
        Segment { base: vec![0.0], dir: vec![1.0], a, b }
    }

    /// Midpoint double Riemann sum of the closed-form excess of `|t|`.
    fn fold_oracle(a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            let x = a + (i as f64 + 0.5) * h;
            for j in i + 1..m {
                let y = a + (j as f64 + 0.5) * h;
                let mid = 0.5 * (x + y);
                let half = 0.5 * (y - x);
                let t1 = (x.abs() - mid.abs()).abs() / half;
                let t2 = (mid.abs() - y.abs()).abs() / half;
                let t3 = (y.abs() - x.abs()).abs() / (y - x);
                s += 0.5 * (t1 * t1 + t2 * t2) - t3 * t3;
            }
        }
        s * h * h / (2.0 * (b - a) * (b - a))
    }

    #[test]
    fn partial_examples() {
        let m = line();
        let fold = LipschitzMap::fold(&m, 0).unwrap();
        let seg = unit_segment(-1.0, 1.0);
        assert!((partial_p(&fold, &seg, -1.0, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let id = LipschitzMap::identity(&m);
        assert!(partial_p(&id, &seg, -0.3, 0.8, 2.0).unwrap().abs() < 1e-12);
        let c = LipschitzMap::constant(&m, &m);
        assert_eq!(partial_p(&c, &seg, -0.3, 0.8, 2.0).unwrap(), 0.0);
        assert!(partial_p(&id, &seg, 0.5, 0.5, 2.0).is_err());
    }

    #[test]
    fn fold_alpha_matches_oracle() {
        let m = line();
        let fold = LipschitzMap::fold(&m, 0).unwrap();
        let oracle = fold_oracle(-1.0, 1.0, 3000);
        assert!(oracle > 0.0);
        for nodes in [200, 400] {
            let a = alpha_segment(&fold, &unit_segment(-1.0, 1.0), 2.0, nodes).unwrap();
            assert!((a - oracle).abs() < 0.01 * oracle, "{nodes}: {a} vs {oracle}");
        }
    }

    #[test]
    fn alpha_scale_covariance() {
        let m = line();
        let fold = LipschitzMap::fold(&m, 0).unwrap();
        let a = alpha_segment(&fold, &unit_segment(-1.0, 1.0), 2.0, 64).unwrap();
        let b = alpha_segment(&fold, &unit_segment(-3.0, 3.0), 2.0, 64).unwrap();
        assert!((a - b).abs() < 1e-12);
        let id = LipschitzMap::identity(&m);
        assert!(alpha_segment(&id, &unit_segment(-1.0, 1.0), 2.0, 32).unwrap().abs() < 1e-12);
        assert!(alpha_segment(&id, &unit_segment(1.0, 1.0), 2.0, 32).is_err());
    }

    #[test]
    fn homomorphism_cube_alpha_vanishes() {
        let m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        let p = TreeParams::auto(&lat, 4.0);
        let tree = CubeTree::build(lat, p).unwrap();
        let id = LipschitzMap::identity(&m);
        let params = AlphaParams { directions: 4, translates: 4, ..AlphaParams::default() };
        for q in 0..tree.cubes().len().min(20) {
            let a = alpha_cube(&id, &tree, q, &params, 7).unwrap();
            assert!(a.alpha.abs() < 1e-6, "{a:?}");
            assert!(a.lines_hit > 0);
        }
        let r = carleson_sum(&id, &tree, 0, &params, 7).unwrap();
        assert!(r.total.abs() < 1e-6);
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = [0.6, 0.8, 0.0];
        let b = orthogonal_complement(&v);
        assert_eq!(b.len(), 2);
        for u in &b {
            let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!(dot.abs() < 1e-12);
        }
    }
}
