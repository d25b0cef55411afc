//! Carnot groups in exponential coordinates.

use alloc::vec::Vec;

use crate::algebra::StratifiedAlgebra;
use crate::bch::{BchProgram, FloatBch};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Element `exp(g_1 + ... + g_r)` stored by its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint<K> {
    pub coords: Vec<K>,
}

impl<K: Scalar> GroupPoint<K> {
    pub fn new(coords: Vec<K>) -> Self {
        GroupPoint { coords }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }
}

/// A Carnot group with its BCH product compiled for the scalar field `K`.
#[derive(Debug, Clone)]
pub struct CarnotGroup<K> {
    alg: StratifiedAlgebra<K>,
    bch: BchProgram<K>,
    float_bch: FloatBch,
}

impl<K: Scalar> CarnotGroup<K> {
    pub fn new(alg: StratifiedAlgebra<K>) -> Self {
        let bch = BchProgram::compile(&alg);
        let float_bch = bch.to_float();
        CarnotGroup {
            alg,
            bch,
            float_bch,
        }
    }

    pub fn algebra(&self) -> &StratifiedAlgebra<K> {
        &self.alg
    }

    pub fn bch(&self) -> &BchProgram<K> {
        &self.bch
    }

    pub fn float_bch(&self) -> &FloatBch {
        &self.float_bch
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    pub fn identity(&self) -> GroupPoint<K> {
        GroupPoint::new(alloc::vec![K::zero(); self.dim()])
    }

    /// Checked constructor from coordinates.
    pub fn point(&self, coords: Vec<K>) -> Result<GroupPoint<K>> {
        self.check(&coords)?;
        Ok(GroupPoint::new(coords))
    }

    fn check(&self, c: &[K]) -> Result<()> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.len(),
            });
        }
        Ok(())
    }

    /// Group product `g·h` via the compiled BCH polynomials.
    pub fn multiply(&self, g: &GroupPoint<K>, h: &GroupPoint<K>) -> Result<GroupPoint<K>> {
        self.check(&g.coords)?;
        self.check(&h.coords)?;
        Ok(GroupPoint::new(self.bch.eval(&g.coords, &h.coords)))
    }

    /// `exp(v)^{-1} = exp(-v)`.
    pub fn invert(&self, g: &GroupPoint<K>) -> GroupPoint<K> {
        GroupPoint::new(g.coords.iter().map(|c| -c.clone()).collect())
    }

    /// Dilation `δ_λ`, scaling layer `j` by `λ^j`.
    pub fn dilate(&self, lambda: &K, g: &GroupPoint<K>) -> Result<GroupPoint<K>> {
        self.check(&g.coords)?;
        if !(lambda.to_f64() > 0.0) || lambda.is_zero() {
            return Err(Error::InvalidParameter("dilation factor must be positive".into()));
        }
        let mut out = g.coords.clone();
        let mut pow = K::one();
        for j in 1..=self.alg.step() {
            pow = pow * lambda.clone();
            for i in self.alg.layer_range(j) {
                out[i] = out[i].clone() * pow.clone();
            }
        }
        Ok(GroupPoint::new(out))
    }

    /// `x·exp(t v)` for a unit vector `v` of the first layer.
    pub fn horizontal_point(&self, x: &GroupPoint<K>, v: &[K], t: &K) -> Result<GroupPoint<K>> {
        let m1 = self.alg.layer_dims()[0];
        if v.len() != m1 {
            return Err(Error::DimensionMismatch {
                expected: m1,
                found: v.len(),
            });
        }
        let norm2 = v
            .iter()
            .fold(K::zero(), |acc, c| acc + c.clone() * c.clone());
        if !(norm2 - K::one()).is_zero() {
            return Err(Error::InvalidParameter("direction must be a unit vector".into()));
        }
        let mut step = alloc::vec![K::zero(); self.dim()];
        for (i, c) in v.iter().enumerate() {
            step[i] = c.clone() * t.clone();
        }
        self.multiply(x, &GroupPoint::new(step))
    }
}
