//! Graded-lattice samples of balls: points `c·q` where layer `j` of `q` lies
//! on the grid `h^j Z` and `N_∞(q) ≤ R`.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::norm::Metric;
use crate::spatial::FirstLayerGrid;

/// Default cap on the number of lattice points.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone)]
pub struct GradedLattice {
    metric: Metric,
    center: Vec<f64>,
    radius: f64,
    h: f64,
    coords: Vec<f64>,
    offsets: Vec<Vec<i64>>,
    index: FirstLayerGrid,
}

/// Upper bound on the number of grid points in the coordinate box that
/// contains the ball.
pub fn estimate_count(metric: &Metric, radius: f64, h: f64) -> u64 {
    let mut total: f64 = 1.0;
    for j in 1..=metric.step() {
        let half = libm::pow(radius / metric.config().lambdas[j - 1], j as f64);
        let per = 2.0 * libm::floor(half / libm::pow(h, j as f64) + 1e-9) + 1.0;
        total *= libm::pow(per, metric.layer_dims()[j - 1] as f64);
    }
    if total > u64::MAX as f64 {
        u64::MAX
    } else {
        total as u64
    }
}

impl GradedLattice {
    pub fn build(metric: &Metric, center: &[f64], radius: f64, h: f64, budget: u64) -> Result<Self> {
        if !(radius > 0.0) || !(h > 0.0) || h > radius {
            return Err(Error::InvalidParameter("lattice needs R > 0 and 0 < h <= R".into()));
        }
        let n = metric.dim();
        if center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: center.len(),
            });
        }
        let estimated = estimate_count(metric, radius, h);
        if estimated > budget {
            return Err(Error::BudgetExceeded {
                estimated,
                cap: budget,
            });
        }
        // integer ranges per coordinate
        let mut bound = vec![0i64; n];
        let mut step = vec![0.0; n];
        for j in 1..=metric.step() {
            let half = libm::pow(radius / metric.config().lambdas[j - 1], j as f64);
            let hj = libm::pow(h, j as f64);
            for i in metric.layer_range(j) {
                bound[i] = libm::floor(half / hj + 1e-9) as i64;
                step[i] = hj;
            }
        }
        let mut offsets: Vec<Vec<i64>> = vec![vec![0; n]];
        let mut coords: Vec<f64> = center.to_vec();
        let mut m: Vec<i64> = bound.iter().map(|b| -b).collect();
        let mut q = vec![0.0; n];
        let mut p = vec![0.0; n];
        'outer: loop {
            if m.iter().any(|&x| x != 0) {
                for i in 0..n {
                    q[i] = m[i] as f64 * step[i];
                }
                if metric.norm(&q) <= radius * (1.0 + 1e-12) {
                    metric.mul_into(center, &q, &mut p);
                    coords.extend_from_slice(&p);
                    offsets.push(m.clone());
                }
            }
            // odometer, last coordinate fastest (lexicographic order)
            let mut d = n;
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                m[d] += 1;
                if m[d] <= bound[d] {
                    break;
                }
                m[d] = -bound[d];
            }
        }
        let count = offsets.len();
        let index = FirstLayerGrid::new(metric, &coords, 0..count, h.max(radius / 64.0));
        Ok(GradedLattice {
            metric: metric.clone(),
            center: center.to_vec(),
            radius,
            h,
            coords,
            offsets,
            index,
        })
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.coords[i * n..(i + 1) * n]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Integer grid offsets of point `i` relative to the center.
    pub fn offset(&self, i: usize) -> &[i64] {
        &self.offsets[i]
    }

    pub fn index(&self) -> &FirstLayerGrid {
        &self.index
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(self.point(i), self.point(j))
    }

    /// Lattice points within distance `r` of `x`, sorted.
    pub fn within(&self, x: &[f64], r: f64) -> Vec<usize> {
        self.index.within(&self.metric, &self.coords, x, r)
    }

    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        self.index
            .nearest(&self.metric, &self.coords, x, self.h)
            .expect("lattice contains its center")
    }

    /// Volume of one grid cell, `h^N`.
    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.h, self.metric.homogeneous_dimension() as f64)
    }

    /// Largest distance from a random ball point to the lattice, over
    /// `samples` points drawn uniformly (in coordinates) from the ball.
    pub fn covering_radius(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let q = self.metric.sample_box(&mut rng, self.radius / self.metric.config().lambdas[0].min(1.0));
            if self.metric.norm(&q) > self.radius {
                continue;
            }
            taken += 1;
            let x = self.metric.mul(&self.center, &q);
            worst = worst.max(self.nearest(&x).1);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use crate::group::CarnotGroup;
    use num_rational::BigRational;

    fn heis() -> Metric {
        Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()))
    }

    #[test]
    fn center_first_and_inside_ball() {
        let m = heis();
        let c = [0.2, -0.1, 0.05];
        let lat = GradedLattice::build(&m, &c, 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        assert_eq!(lat.point(0), &c);
        for i in 0..lat.len() {
            assert!(m.dist(&c, lat.point(i)) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn h_equal_r_gives_center() {
        let lat = GradedLattice::build(&heis(), &[0.0; 3], 1.0, 1.0, DEFAULT_BUDGET).unwrap();
        assert!(lat.len() >= 1);
    }

    #[test]
    fn budget_and_parameters() {
        let m = heis();
        assert!(matches!(
            GradedLattice::build(&m, &[0.0; 3], 1.0, 0.01, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(GradedLattice::build(&m, &[0.0; 3], 1.0, 2.0, DEFAULT_BUDGET).is_err());
        assert!(GradedLattice::build(&m, &[0.0; 2], 1.0, 0.5, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn abelian_count() {
        let m = Metric::unit(&CarnotGroup::new(abelian::<BigRational>(2).unwrap()));
        let lat = GradedLattice::build(&m, &[0.0; 2], 1.0, 0.1, DEFAULT_BUDGET).unwrap();
        // Gauss circle count for radius 10
        assert_eq!(lat.len(), 317);
    }
}
