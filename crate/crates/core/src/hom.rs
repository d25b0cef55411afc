//! Graded homomorphisms between stratified algebras, generated by their
//! first-layer block, and the layer-collapse diagnostics built on them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, LinearSolution, Matrix};
use crate::norm::NormConfig;
use crate::scalar::Scalar;

/// Blockwise linear map `A_j : V_j(g) → V_j(h)`. Blocks past the codomain's
/// step have zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Homomorphism<K> {
    domain: StratifiedAlgebra<K>,
    codomain: StratifiedAlgebra<K>,
    blocks: Vec<Matrix<K>>,
}

fn codomain_dim<K: Scalar>(h: &StratifiedAlgebra<K>, j: usize) -> usize {
    if j <= h.step() {
        h.layer_dims()[j - 1]
    } else {
        0
    }
}

impl<K: Scalar> Homomorphism<K> {
    /// Derive every block from `a1` (shape `dim V_1(h) × dim V_1(g)`), then
    /// check `A([u, v]) = [A u, A v]` on all basis pairs.
    pub fn from_first_layer(
        a1: Matrix<K>,
        domain: &StratifiedAlgebra<K>,
        codomain: &StratifiedAlgebra<K>,
    ) -> Result<Self> {
        let (m1g, m1h) = (domain.layer_dims()[0], codomain.layer_dims()[0]);
        if a1.len() != m1h || a1.iter().any(|row| row.len() != m1g) {
            return Err(Error::DimensionMismatch {
                expected: m1h * m1g,
                found: a1.iter().map(|r| r.len()).sum(),
            });
        }
        let mut hom = Homomorphism {
            domain: domain.clone(),
            codomain: codomain.clone(),
            blocks: vec![a1],
        };
        for j in 1..domain.step() {
            let rows_out = codomain_dim(codomain, j + 1);
            let cols = domain.layer_dims()[j];
            // each spanning bracket [e_a, e_b] (a in V_1, b in V_j) gives one
            // linear equation per output coordinate
            let mut sys: Matrix<K> = Vec::new();
            let mut rhs: Vec<Vec<K>> = Vec::new();
            for a in domain.layer_range(1) {
                for b in domain.layer_range(j) {
                    let br = domain.basis_bracket(a, b);
                    sys.push(br[domain.layer_range(j + 1)].to_vec());
                    let img = hom.image_bracket(a, b);
                    rhs.push(img);
                }
            }
            let mut block = vec![vec![K::zero(); cols]; rows_out];
            for c in 0..rows_out {
                let col: Vec<K> = rhs.iter().map(|r| r[c].clone()).collect();
                match linalg::solve(&sys, &col, cols) {
                    LinearSolution::Unique(x) | LinearSolution::Underdetermined { x, .. } => {
                        for (i, xi) in x.into_iter().enumerate() {
                            block[c][i] = xi;
                        }
                    }
                    LinearSolution::Inconsistent => {
                        return Err(Error::IllDefinedHomomorphism(format!(
                            "bracket images into layer {} are inconsistent",
                            j + 1
                        )))
                    }
                }
            }
            hom.blocks.push(block);
        }
        hom.check_compatibility()?;
        Ok(hom)
    }

    /// `[A e_a, A e_b]` restricted to the codomain layer `j(a) + j(b)`.
    fn image_bracket(&self, a: usize, b: usize) -> Vec<K> {
        let ja = self.domain.layer_of(a);
        let jb = self.domain.layer_of(b);
        let target = ja + jb;
        let out_dim = codomain_dim(&self.codomain, target);
        if out_dim == 0 {
            return Vec::new();
        }
        let ua = self.basis_image(a);
        let ub = self.basis_image(b);
        let br = self.codomain.bracket(&ua, &ub).expect("same codomain");
        br[self.codomain.layer_range(target)].to_vec()
    }

    /// Image of basis vector `e_a` as a full codomain vector.
    fn basis_image(&self, a: usize) -> Vec<K> {
        let j = self.domain.layer_of(a);
        let mut out = vec![K::zero(); self.codomain.dim()];
        if j > self.codomain.step() {
            return out;
        }
        let col = a - self.domain.layer_range(j).start;
        let start = self.codomain.layer_range(j).start;
        for (r, row) in self.blocks[j - 1].iter().enumerate() {
            out[start + r] = row[col].clone();
        }
        out
    }

    fn check_compatibility(&self) -> Result<()> {
        let n = self.domain.dim();
        for a in 0..n {
            for b in 0..n {
                let target = self.domain.layer_of(a) + self.domain.layer_of(b);
                if target > self.domain.step() {
                    // [e_a, e_b] = 0 in the domain, so the images must commute
                    if target <= self.codomain.step() {
                        let img = self.image_bracket(a, b);
                        if img.iter().any(|c| !c.is_zero()) {
                            return Err(Error::IllDefinedHomomorphism(format!(
                                "images of e{a} and e{b} do not commute"
                            )));
                        }
                    }
                    continue;
                }
                let lhs = self.apply(&self.domain.basis_bracket(a, b));
                let rhs = self
                    .codomain
                    .bracket(&self.basis_image(a), &self.basis_image(b))
                    .expect("same codomain");
                if lhs.iter().zip(&rhs).any(|(x, y)| !(x.clone() - y.clone()).is_zero()) {
                    return Err(Error::IllDefinedHomomorphism(format!(
                        "bracket relation [e{a}, e{b}] is not preserved"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &StratifiedAlgebra<K> {
        &self.domain
    }

    pub fn codomain(&self) -> &StratifiedAlgebra<K> {
        &self.codomain
    }

    /// Block `A_j` (1-based layer).
    pub fn block(&self, j: usize) -> &Matrix<K> {
        &self.blocks[j - 1]
    }

    pub fn blocks(&self) -> &[Matrix<K>] {
        &self.blocks
    }

    /// Blockwise image of exponential coordinates.
    pub fn apply(&self, g: &[K]) -> Vec<K> {
        let mut out = vec![K::zero(); self.codomain.dim()];
        for j in 1..=self.domain.step().min(self.codomain.step()) {
            let seg = &g[self.domain.layer_range(j)];
            let img = linalg::mat_vec(&self.blocks[j - 1], seg);
            let start = self.codomain.layer_range(j).start;
            for (i, v) in img.into_iter().enumerate() {
                out[start + i] = v;
            }
        }
        out
    }

    /// Same map with every block scaled by `s^j`; composing with a dilation
    /// keeps it a homomorphism.
    pub fn scaled(&self, s: &K) -> Self {
        let mut pow = K::one();
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                pow = pow.clone() * s.clone();
                b.iter()
                    .map(|row| row.iter().map(|c| c.clone() * pow.clone()).collect())
                    .collect()
            })
            .collect();
        Homomorphism {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            blocks,
        }
    }

    pub fn to_f64(&self) -> Homomorphism<f64> {
        Homomorphism {
            domain: self.domain.to_f64(),
            codomain: self.codomain.to_f64(),
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|r| r.iter().map(|c| c.to_f64()).collect()).collect())
                .collect(),
        }
    }

    fn float_block(&self, j: usize) -> Vec<Vec<f64>> {
        self.blocks[j - 1]
            .iter()
            .map(|r| r.iter().map(|c| c.to_f64()).collect())
            .collect()
    }

    /// Per-layer collapse values `λ^h_j σ_min(A_j)^{1/j} / λ^g_j` with the
    /// right singular vector achieving each.
    pub fn layer_collapse(&self, dom: &NormConfig, cod: &NormConfig) -> Vec<(f64, Vec<f64>)> {
        (1..=self.domain.step())
            .map(|j| {
                let cols = self.domain.layer_dims()[j - 1];
                let (s, v) = linalg::min_singular(&self.float_block(j), cols);
                let lam_h = cod.lambdas.get(j - 1).copied().unwrap_or(1.0);
                let value = lam_h * libm::pow(s, 1.0 / j as f64) / dom.lambdas[j - 1];
                (value, v)
            })
            .collect()
    }

    /// Lowest-layer witness of collapse at level `eps`: a unit `v ∈ V_j(g)`
    /// with `N_∞(L(e^v)) < eps · N_∞(e^v)`. `None` certifies
    /// `N_∞(L g) ≥ eps N_∞(g)` for every `g`.
    pub fn collapse_witness(&self, eps: f64, dom: &NormConfig, cod: &NormConfig) -> Option<CollapseWitness> {
        self.layer_collapse(dom, cod)
            .into_iter()
            .enumerate()
            .find(|(_, (val, _))| *val < eps)
            .map(|(i, (value, v))| CollapseWitness {
                layer: i + 1,
                v,
                value,
            })
    }

    /// Volume scaling of the map: zero when some block has a kernel,
    /// `Π |det A_j|` for square blocks, `Π sqrt(det A_jᵀA_j)` otherwise.
    pub fn jacobian(&self) -> Jacobian {
        let mut value = 1.0;
        for j in 1..=self.domain.step() {
            let cols = self.domain.layer_dims()[j - 1];
            let rows = self.blocks[j - 1].len();
            if linalg::rank(&self.blocks[j - 1]) < cols {
                return Jacobian::Zero;
            }
            let b = self.float_block(j);
            value *= if rows == cols {
                libm::fabs(linalg::det(&b))
            } else {
                linalg::gram_volume(&b, cols)
            };
        }
        Jacobian::Value(value)
    }
}

/// A direction collapsed by a homomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseWitness {
    pub layer: usize,
    pub v: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Jacobian {
    Zero,
    Value(f64),
}

/// Identity homomorphism of an algebra.
pub fn identity<K: Scalar>(alg: &StratifiedAlgebra<K>) -> Homomorphism<K> {
    let m = alg.layer_dims()[0];
    let a1 = (0..m)
        .map(|i| (0..m).map(|j| if i == j { K::one() } else { K::zero() }).collect())
        .collect();
    Homomorphism::from_first_layer(a1, alg, alg).expect("identity is a homomorphism")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{abelian, heisenberg};
    use crate::scalar::rat;
    use num_rational::BigRational;

    #[test]
    fn diagonal_heisenberg_block() {
        let h = heisenberg::<BigRational>();
        let a1 = vec![vec![rat(2, 1), rat(0, 1)], vec![rat(0, 1), rat(3, 1)]];
        let l = Homomorphism::from_first_layer(a1, &h, &h).unwrap();
        assert_eq!(l.block(2), &vec![vec![rat(6, 1)]]);
        assert_eq!(l.jacobian(), Jacobian::Value(36.0));
    }

    #[test]
    fn abelian_to_heisenberg() {
        let a = abelian::<BigRational>(2).unwrap();
        let h = heisenberg::<BigRational>();
        let id = vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]];
        assert!(matches!(
            Homomorphism::from_first_layer(id, &a, &h),
            Err(Error::IllDefinedHomomorphism(_))
        ));
        // both axes onto X: images commute
        let col = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(0, 1), rat(0, 1)]];
        assert!(Homomorphism::from_first_layer(col, &a, &h).is_ok());
    }

    #[test]
    fn projection_to_line_collapses() {
        let h = heisenberg::<BigRational>();
        let line = abelian::<BigRational>(1).unwrap();
        let p = Homomorphism::from_first_layer(vec![vec![rat(1, 1), rat(0, 1)]], &h, &line).unwrap();
        assert_eq!(p.apply(&[rat(2, 1), rat(5, 1), rat(7, 1)]), vec![rat(2, 1)]);
        let w = p
            .collapse_witness(1e-6, &NormConfig::ones(2), &NormConfig::ones(1))
            .unwrap();
        assert_eq!(w.layer, 1);
        assert!((w.v[1].abs() - 1.0).abs() < 1e-12);
        assert_eq!(p.jacobian(), Jacobian::Zero);
    }

    #[test]
    fn identity_has_no_witness() {
        let h = heisenberg::<BigRational>();
        let id = identity(&h);
        assert!(id
            .collapse_witness(0.5, &NormConfig::ones(2), &NormConfig::ones(2))
            .is_none());
        assert_eq!(id.jacobian(), Jacobian::Value(1.0));
    }
}
