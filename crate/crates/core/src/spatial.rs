//! Bucket index on first-layer coordinates. Since the first layer of
//! `x⁻¹y` is `y_1 - x_1`, `d(x, y) ≥ λ_1 |y_1 - x_1|`, so a ball query only
//! needs buckets within `r / λ_1` of the query's first layer.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::norm::Metric;

#[derive(Debug, Clone)]
pub struct FirstLayerGrid {
    m1: usize,
    cell: f64,
    lambda1: f64,
    buckets: BTreeMap<Vec<i64>, Vec<u32>>,
}

impl FirstLayerGrid {
    /// Index the points `ids` of the flat coordinate array `coords`
    /// (stride `metric.dim()`).
    pub fn new(metric: &Metric, coords: &[f64], ids: impl IntoIterator<Item = usize>, cell: f64) -> Self {
        let n = metric.dim();
        let m1 = metric.layer_dims()[0];
        let mut buckets: BTreeMap<Vec<i64>, Vec<u32>> = BTreeMap::new();
        for i in ids {
            let key = Self::key_of(&coords[i * n..i * n + m1], cell);
            buckets.entry(key).or_default().push(i as u32);
        }
        FirstLayerGrid {
            m1,
            cell,
            lambda1: metric.config().lambdas[0],
            buckets,
        }
    }

    /// Index one more point.
    pub fn insert(&mut self, coords: &[f64], n: usize, i: usize) {
        let key = Self::key_of(&coords[i * n..i * n + self.m1], self.cell);
        self.buckets.entry(key).or_default().push(i as u32);
    }

    fn key_of(x1: &[f64], cell: f64) -> Vec<i64> {
        x1.iter().map(|&c| libm::floor(c / cell) as i64).collect()
    }

    /// Calls `f(i)` for every indexed point whose first layer lies in the
    /// box of half-width `r / λ_1` around `x`'s first layer. Stops early when
    /// `f` returns `false`.
    pub fn for_candidates(&self, x: &[f64], r: f64, mut f: impl FnMut(usize) -> bool) {
        let w = r / self.lambda1;
        let lo: Vec<i64> = (0..self.m1).map(|i| libm::floor((x[i] - w) / self.cell) as i64).collect();
        let hi: Vec<i64> = (0..self.m1).map(|i| libm::floor((x[i] + w) / self.cell) as i64).collect();
        let total: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a + 1).product();
        if total as usize > 4 * self.buckets.len() {
            // query box covers more cells than exist: scan buckets directly
            for (k, ids) in &self.buckets {
                if k.iter().enumerate().all(|(i, &c)| c >= lo[i] && c <= hi[i]) {
                    for &id in ids {
                        if !f(id as usize) {
                            return;
                        }
                    }
                }
            }
            return;
        }
        let mut key = lo.clone();
        loop {
            if let Some(ids) = self.buckets.get(&key) {
                for &id in ids {
                    if !f(id as usize) {
                        return;
                    }
                }
            }
            let mut d = 0;
            loop {
                if d == self.m1 {
                    return;
                }
                key[d] += 1;
                if key[d] <= hi[d] {
                    break;
                }
                key[d] = lo[d];
                d += 1;
            }
        }
    }

    /// Indexed points within distance `r` of `x`.
    pub fn within(&self, metric: &Metric, coords: &[f64], x: &[f64], r: f64) -> Vec<usize> {
        let n = metric.dim();
        let mut out = Vec::new();
        self.for_candidates(x, r, |i| {
            if metric.dist(x, &coords[i * n..(i + 1) * n]) <= r {
                out.push(i);
            }
            true
        });
        out.sort_unstable();
        out
    }

    /// Whether some indexed point lies within `r` of `x`.
    pub fn any_within(&self, metric: &Metric, coords: &[f64], x: &[f64], r: f64) -> bool {
        let n = metric.dim();
        let mut found = false;
        self.for_candidates(x, r, |i| {
            if metric.dist(x, &coords[i * n..(i + 1) * n]) <= r {
                found = true;
                return false;
            }
            true
        });
        found
    }

    /// Nearest indexed point to `x` (ties by smallest index), searching
    /// outward from radius `start`.
    pub fn nearest(&self, metric: &Metric, coords: &[f64], x: &[f64], start: f64) -> Option<(usize, f64)> {
        if self.buckets.is_empty() {
            return None;
        }
        let n = metric.dim();
        let mut r = start.max(self.cell);
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_candidates(x, r, |i| {
                let d = metric.dist(x, &coords[i * n..(i + 1) * n]);
                match best {
                    Some((bi, bd)) if bd < d || (bd == d && bi < i) => {}
                    _ => best = Some((i, d)),
                }
                true
            });
            // a hit within r is final: anything outside the box is farther than r
            if let Some((i, d)) = best {
                if d <= r {
                    return Some((i, d));
                }
            }
            r *= 2.0;
            if r > 1e12 {
                return best;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

/// Brute-force nearest point, used as an oracle in tests.
pub fn nearest_brute(metric: &Metric, coords: &[f64], x: &[f64]) -> Option<(usize, f64)> {
    let n = metric.dim();
    let mut best: Option<(usize, f64)> = None;
    for i in 0..coords.len() / n {
        let d = metric.dist(x, &coords[i * n..(i + 1) * n]);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best
}

/// Flat copy of the selected points.
pub fn gather(coords: &[f64], n: usize, ids: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; ids.len() * n];
    for (k, &i) in ids.iter().enumerate() {
        out[k * n..(k + 1) * n].copy_from_slice(&coords[i * n..(i + 1) * n]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg;
    use crate::group::CarnotGroup;
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nearest_matches_brute_force() {
        let m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut coords = Vec::new();
        for _ in 0..500 {
            coords.extend(m.sample_box(&mut rng, 1.0));
        }
        let grid = FirstLayerGrid::new(&m, &coords, 0..500, 0.1);
        assert_eq!(grid.len(), 500);
        for _ in 0..50 {
            let x = m.sample_box(&mut rng, 1.2);
            let (i, d) = grid.nearest(&m, &coords, &x, 0.05).unwrap();
            let (j, e) = nearest_brute(&m, &coords, &x).unwrap();
            assert_eq!(d, e);
            assert_eq!(i, j);
            let w = grid.within(&m, &coords, &x, 0.3);
            let brute: Vec<usize> = (0..500).filter(|&k| m.dist(&x, &coords[k * 3..k * 3 + 3]) <= 0.3).collect();
            assert_eq!(w, brute);
        }
    }
}
