//! Homogeneous norm `N_∞` and the float geometry used by everything
//! downstream of the exact algebra.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bch::{FloatBch, MAX_DIM};
use crate::error::{Error, Result};
use crate::group::CarnotGroup;
use crate::scalar::Scalar;

/// Layer weights `λ_k` and the measured quasi-triangle constant `C_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormConfig {
    pub lambdas: Vec<f64>,
    pub quasi_constant: f64,
}

impl NormConfig {
    /// All `λ_k = 1`.
    pub fn ones(step: usize) -> Self {
        NormConfig {
            lambdas: vec![1.0; step],
            quasi_constant: 1.0,
        }
    }

    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("norm weights must be positive".into()));
        }
        Ok(NormConfig {
            lambdas,
            quasi_constant: 1.0,
        })
    }
}

/// Float geometry of a Carnot group: product, norm and distance.
#[derive(Debug, Clone)]
pub struct Metric {
    layer_dims: Vec<usize>,
    offsets: Vec<usize>,
    bch: FloatBch,
    cfg: NormConfig,
}

impl Metric {
    pub fn new<K: Scalar>(group: &CarnotGroup<K>, cfg: NormConfig) -> Result<Self> {
        let alg = group.algebra();
        if cfg.lambdas.len() != alg.step() {
            return Err(Error::DimensionMismatch {
                expected: alg.step(),
                found: cfg.lambdas.len(),
            });
        }
        if alg.dim() > MAX_DIM {
            return Err(Error::InvalidParameter("group dimension exceeds 32".into()));
        }
        let mut offsets = vec![0];
        for d in alg.layer_dims() {
            offsets.push(offsets.last().unwrap() + d);
        }
        Ok(Metric {
            layer_dims: alg.layer_dims().to_vec(),
            offsets,
            bch: group.float_bch().clone(),
            cfg,
        })
    }

    /// Metric with all `λ_k = 1`.
    pub fn unit<K: Scalar>(group: &CarnotGroup<K>) -> Self {
        Self::new(group, NormConfig::ones(group.algebra().step())).expect("unit weights are valid")
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layer_range(&self, j: usize) -> core::ops::Range<usize> {
        self.offsets[j - 1]..self.offsets[j]
    }

    pub fn homogeneous_dimension(&self) -> usize {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1) * d)
            .sum()
    }

    pub fn config(&self) -> &NormConfig {
        &self.cfg
    }

    pub fn set_quasi_constant(&mut self, c: f64) {
        self.cfg.quasi_constant = c;
    }

    pub fn mul_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.bch.eval_into(x, y, out);
    }

    pub fn mul(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.bch.eval(x, y)
    }

    /// Euclidean norm of the layer-`j` segment.
    pub fn layer_norm(&self, g: &[f64], j: usize) -> f64 {
        let s: f64 = g[self.layer_range(j)].iter().map(|c| c * c).sum();
        libm::sqrt(s)
    }

    /// `N_∞(g) = max_k λ_k |g_k|^{1/k}`.
    pub fn norm(&self, g: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for j in 1..=self.step() {
            let s = self.layer_norm(g, j);
            if s == 0.0 {
                continue;
            }
            let v = self.cfg.lambdas[j - 1] * if j == 1 { s } else { libm::pow(s, 1.0 / j as f64) };
            if v > best {
                best = v;
            }
        }
        best
    }

    /// `d(x, y) = N_∞(x⁻¹ y)`.
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim();
        let mut xi = [0.0f64; MAX_DIM];
        for i in 0..n {
            xi[i] = -x[i];
        }
        let mut out = [0.0f64; MAX_DIM];
        self.bch.eval_into(&xi[..n], y, &mut out[..n]);
        self.norm(&out[..n])
    }

    pub fn inverse(&self, g: &[f64]) -> Vec<f64> {
        g.iter().map(|c| -c).collect()
    }

    pub fn dilate(&self, lambda: f64, g: &[f64]) -> Vec<f64> {
        let mut out = g.to_vec();
        let mut pow = 1.0;
        for j in 1..=self.step() {
            pow *= lambda;
            for i in self.layer_range(j) {
                out[i] *= pow;
            }
        }
        out
    }

    /// `x · exp(t v)` for a first-layer vector `v`.
    pub fn horizontal_point(&self, x: &[f64], v: &[f64], t: f64) -> Vec<f64> {
        let mut step = vec![0.0; self.dim()];
        for (i, c) in v.iter().enumerate() {
            step[i] = c * t;
        }
        self.mul(x, &step)
    }

    /// Uniform sample from the coordinate box with layer-`j` half-width `s^j`.
    pub fn sample_box<R: Rng>(&self, rng: &mut R, s: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for j in 1..=self.step() {
            let w = libm::pow(s, j as f64);
            for i in self.layer_range(j) {
                g[i] = rng.random_range(-w..=w);
            }
        }
        g
    }
}

/// Outcome of sampling the triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleReport {
    /// Worst `d(x,z) / (d(x,y) + d(y,z))` seen; at least 1 (from `y = x`).
    pub worst: f64,
    pub samples: usize,
    pub witness: Option<[Vec<f64>; 3]>,
}

/// Sample triples and record the worst triangle ratio; stores it as `C_Q`.
pub fn validate_triangle(metric: &mut Metric, samples: usize, seed: u64) -> Result<TriangleReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 1.0;
    let mut witness = None;
    for _ in 0..samples {
        let x = metric.sample_box(&mut rng, 1.0);
        // mix scales so near-degenerate triples are also covered
        let s = libm::pow(2.0, -(rng.random_range(0..6) as f64));
        let dy = metric.sample_box(&mut rng, s);
        let dz = metric.sample_box(&mut rng, 1.0);
        let y = metric.mul(&x, &dy);
        let z = metric.mul(&x, &dz);
        let den = metric.dist(&x, &y) + metric.dist(&y, &z);
        if den == 0.0 {
            continue;
        }
        let r = metric.dist(&x, &z) / den;
        if r > worst {
            worst = r;
            witness = Some([x, y, z]);
        }
    }
    metric.set_quasi_constant(worst);
    Ok(TriangleReport {
        worst,
        samples,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use num_rational::BigRational;

    #[test]
    fn norm_values() {
        let m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        assert_eq!(m.norm(&[3.0, 0.0, 0.0]), 3.0);
        assert!((m.norm(&[0.0, 0.0, 4.0]) - 2.0).abs() < 1e-15);
        assert_eq!(m.norm(&[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn abelian_triangle_is_euclidean() {
        let mut m = Metric::unit(&CarnotGroup::new(abelian::<BigRational>(3).unwrap()));
        let rep = validate_triangle(&mut m, 2000, 7).unwrap();
        assert!(rep.worst <= 1.0 + 1e-12);
        assert_eq!(m.config().quasi_constant, rep.worst);
    }

    #[test]
    fn heisenberg_triangle_recorded() {
        let mut m = Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()));
        let rep = validate_triangle(&mut m, 2000, 1).unwrap();
        assert!(rep.worst >= 1.0);
        assert!(validate_triangle(&mut m, 0, 1).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(NormConfig::new(vec![1.0, 0.0]).is_err());
        assert!(NormConfig::new(vec![]).is_err());
    }
}
