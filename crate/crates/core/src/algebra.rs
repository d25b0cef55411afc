//! Stratified Lie algebras given by exact structure constants.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// One nonzero structure constant: `[e_a, e_b]` has coefficient `c` on `e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstant<K> {
    pub a: usize,
    pub b: usize,
    pub k: usize,
    pub c: K,
}

/// A bracket given by the user: `[e_a, e_b] = Σ coeffs[k] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketSpec<K> {
    pub a: usize,
    pub b: usize,
    pub coeffs: Vec<K>,
}

/// Stratified Lie algebra `g = V_1 ⊕ ... ⊕ V_r` in a graded basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedAlgebra<K> {
    layer_dims: Vec<usize>,
    offsets: Vec<usize>,
    layer_of: Vec<usize>,
    table: Vec<K>,
    sparse: Vec<StructureConstant<K>>,
}

/// Result of checking the algebra axioms on every basis pair and triple.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlgebraAudit {
    pub antisymmetric: bool,
    pub jacobi_failures: Vec<(usize, usize, usize)>,
    pub graded: bool,
    /// For every `j < r`, rank of `[V_1, V_j]` compared with `dim V_{j+1}`.
    pub stratification_ranks: Vec<(usize, usize)>,
}

impl AlgebraAudit {
    pub fn stratified(&self) -> bool {
        self.stratification_ranks.iter().all(|(r, d)| r == d)
    }

    pub fn passed(&self) -> bool {
        self.antisymmetric && self.jacobi_failures.is_empty() && self.graded && self.stratified()
    }
}

impl<K: Scalar> StratifiedAlgebra<K> {
    /// Build and validate an algebra. Brackets not listed are zero; the
    /// antisymmetric partner of each listed bracket is filled in.
    pub fn new(layer_dims: Vec<usize>, brackets: &[BracketSpec<K>]) -> Result<Self> {
        let alg = Self::new_unchecked(layer_dims, brackets)?;
        let audit = alg.audit();
        if !audit.antisymmetric {
            return Err(Error::InvalidAlgebra("bracket table is not antisymmetric".into()));
        }
        if !audit.graded {
            return Err(Error::InvalidAlgebra("bracket table violates the grading".into()));
        }
        if let Some(&(a, b, c)) = audit.jacobi_failures.first() {
            return Err(Error::InvalidAlgebra(format!(
                "Jacobi identity fails on basis triple ({a}, {b}, {c})"
            )));
        }
        if !audit.stratified() {
            return Err(Error::InvalidAlgebra(format!(
                "[V_1, V_j] does not span V_(j+1): ranks {:?}",
                audit.stratification_ranks
            )));
        }
        Ok(alg)
    }

    /// Build the bracket table without checking the axioms.
    pub fn new_unchecked(layer_dims: Vec<usize>, brackets: &[BracketSpec<K>]) -> Result<Self> {
        if layer_dims.is_empty() || layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidAlgebra(
                "layer dimensions must be nonempty and positive".into(),
            ));
        }
        let mut offsets = vec![0];
        for d in &layer_dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        let n = *offsets.last().unwrap();
        let mut layer_of = Vec::with_capacity(n);
        for (i, d) in layer_dims.iter().enumerate() {
            layer_of.extend(core::iter::repeat(i + 1).take(*d));
        }
        let mut table = vec![K::zero(); n * n * n];
        let mut set = vec![false; n * n];
        for br in brackets {
            if br.a >= n || br.b >= n {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index out of range: ({}, {})",
                    br.a, br.b
                )));
            }
            if br.coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: br.coeffs.len(),
                });
            }
            if br.a == br.b {
                if br.coeffs.iter().any(|c| !c.is_zero()) {
                    return Err(Error::InvalidAlgebra(format!(
                        "[e_{0}, e_{0}] must vanish",
                        br.a
                    )));
                }
                continue;
            }
            let (a, b) = (br.a, br.b);
            if set[a * n + b] || set[b * n + a] {
                let already: Vec<K> = (0..n).map(|k| table[(a * n + b) * n + k].clone()).collect();
                if already != br.coeffs {
                    return Err(Error::InvalidAlgebra(format!(
                        "bracket ({a}, {b}) given twice with different values"
                    )));
                }
            }
            for k in 0..n {
                table[(a * n + b) * n + k] = br.coeffs[k].clone();
                table[(b * n + a) * n + k] = -br.coeffs[k].clone();
            }
            set[a * n + b] = true;
            set[b * n + a] = true;
        }
        let mut alg = StratifiedAlgebra {
            layer_dims,
            offsets,
            layer_of,
            table,
            sparse: Vec::new(),
        };
        alg.rebuild_sparse();
        Ok(alg)
    }

    fn rebuild_sparse(&mut self) {
        let n = self.dim();
        self.sparse.clear();
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let c = &self.table[(a * n + b) * n + k];
                    if !c.is_zero() {
                        self.sparse.push(StructureConstant {
                            a,
                            b,
                            k,
                            c: c.clone(),
                        });
                    }
                }
            }
        }
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

    /// Index range of layer `j` (1-based) in the coordinate vector.
    pub fn layer_range(&self, j: usize) -> core::ops::Range<usize> {
        self.offsets[j - 1]..self.offsets[j]
    }

    /// 1-based layer of basis vector `i`.
    pub fn layer_of(&self, i: usize) -> usize {
        self.layer_of[i]
    }

    /// Structure constant `c_{ab}^k`.
    pub fn constant(&self, a: usize, b: usize, k: usize) -> &K {
        let n = self.dim();
        &self.table[(a * n + b) * n + k]
    }

    pub fn structure_constants(&self) -> &[StructureConstant<K>] {
        &self.sparse
    }

    /// Bracket `[e_a, e_b]` as a coordinate vector.
    pub fn basis_bracket(&self, a: usize, b: usize) -> Vec<K> {
        let n = self.dim();
        self.table[(a * n + b) * n..(a * n + b + 1) * n].to_vec()
    }

    /// Bilinear extension of the structure constants.
    pub fn bracket(&self, u: &[K], v: &[K]) -> Result<Vec<K>> {
        let n = self.dim();
        if u.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u.len(),
            });
        }
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let mut out = vec![K::zero(); n];
        for sc in &self.sparse {
            if u[sc.a].is_zero() || v[sc.b].is_zero() {
                continue;
            }
            out[sc.k] = out[sc.k].clone() + sc.c.clone() * u[sc.a].clone() * v[sc.b].clone();
        }
        Ok(out)
    }

    /// Homogeneous dimension `Σ i · dim V_i`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1) * d)
            .sum()
    }

    /// Check antisymmetry, Jacobi on all basis triples, grading and the
    /// stratification rank condition.
    pub fn audit(&self) -> AlgebraAudit {
        let n = self.dim();
        let r = self.step();
        let mut audit = AlgebraAudit {
            antisymmetric: true,
            graded: true,
            ..Default::default()
        };
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let c = self.constant(a, b, k);
                    if !(c.clone() + self.constant(b, a, k).clone()).is_zero() {
                        audit.antisymmetric = false;
                    }
                    if !c.is_zero() {
                        let target = self.layer_of[a] + self.layer_of[b];
                        if target > r || self.layer_of[k] != target {
                            audit.graded = false;
                        }
                    }
                }
            }
        }
        let e = |i: usize| {
            let mut v = vec![K::zero(); n];
            v[i] = K::one();
            v
        };
        for a in 0..n {
            for b in (a + 1)..n {
                for c in (b + 1)..n {
                    let (ea, eb, ec) = (e(a), e(b), e(c));
                    let t1 = self.bracket(&ea, &self.bracket(&eb, &ec).unwrap()).unwrap();
                    let t2 = self.bracket(&eb, &self.bracket(&ec, &ea).unwrap()).unwrap();
                    let t3 = self.bracket(&ec, &self.bracket(&ea, &eb).unwrap()).unwrap();
                    let ok = (0..n).all(|k| {
                        (t1[k].clone() + t2[k].clone() + t3[k].clone()).is_zero()
                    });
                    if !ok {
                        audit.jacobi_failures.push((a, b, c));
                    }
                }
            }
        }
        for j in 1..r {
            let mut rows = Vec::new();
            for a in self.layer_range(1) {
                for b in self.layer_range(j) {
                    let br = self.basis_bracket(a, b);
                    rows.push(br[self.layer_range(j + 1)].to_vec());
                }
            }
            audit
                .stratification_ranks
                .push((linalg::rank(&rows), self.layer_dims[j]));
        }
        audit
    }

    /// Same algebra with coefficients mapped into another field.
    pub fn map_scalars<K2: Scalar>(&self, f: impl Fn(&K) -> K2) -> StratifiedAlgebra<K2> {
        let mut out = StratifiedAlgebra {
            layer_dims: self.layer_dims.clone(),
            offsets: self.offsets.clone(),
            layer_of: self.layer_of.clone(),
            table: self.table.iter().map(&f).collect(),
            sparse: Vec::new(),
        };
        out.rebuild_sparse();
        out
    }

    /// Float projection of the algebra.
    pub fn to_f64(&self) -> StratifiedAlgebra<f64> {
        self.map_scalars(|c| c.to_f64())
    }

    /// Nonzero brackets `[e_a, e_b]` with `a < b`, for reports.
    pub fn bracket_list(&self) -> Vec<BracketSpec<K>> {
        let n = self.dim();
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let coeffs = self.basis_bracket(a, b);
                if coeffs.iter().any(|c| !c.is_zero()) {
                    out.push(BracketSpec { a, b, coeffs });
                }
            }
        }
        out
    }

    /// Human-readable name of basis vector `i`, e.g. `e3 (layer 2)`.
    pub fn basis_name(&self, i: usize) -> String {
        format!("e{} (layer {})", i, self.layer_of[i])
    }
}

fn unit<K: Scalar>(n: usize, k: usize, c: K) -> Vec<K> {
    let mut v = vec![K::zero(); n];
    v[k] = c;
    v
}

/// First Heisenberg algebra: `[X, Y] = Z`.
pub fn heisenberg<K: Scalar>() -> StratifiedAlgebra<K> {
    StratifiedAlgebra::new(
        vec![2, 1],
        &[BracketSpec {
            a: 0,
            b: 1,
            coeffs: unit(3, 2, K::one()),
        }],
    )
    .expect("heisenberg preset is valid")
}

/// Engel algebra: `[X1, X2] = X3`, `[X1, X3] = X4`.
pub fn engel<K: Scalar>() -> StratifiedAlgebra<K> {
    StratifiedAlgebra::new(
        vec![2, 1, 1],
        &[
            BracketSpec {
                a: 0,
                b: 1,
                coeffs: unit(4, 2, K::one()),
            },
            BracketSpec {
                a: 0,
                b: 2,
                coeffs: unit(4, 3, K::one()),
            },
        ],
    )
    .expect("engel preset is valid")
}

/// Abelian algebra `R^n` (step 1).
pub fn abelian<K: Scalar>(n: usize) -> Result<StratifiedAlgebra<K>> {
    if n == 0 {
        return Err(Error::InvalidParameter("abelian dimension must be positive".into()));
    }
    StratifiedAlgebra::new(vec![n], &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn heisenberg_bracket() {
        let h = heisenberg::<BigRational>();
        let x = unit(3, 0, BigRational::one());
        let y = unit(3, 1, BigRational::one());
        let z = unit(3, 2, BigRational::one());
        assert_eq!(h.bracket(&x, &y).unwrap(), z);
        assert_eq!(h.bracket(&y, &x).unwrap(), unit(3, 2, -BigRational::one()));
        assert!(h.bracket(&x, &x).unwrap().iter().all(|c| c.is_zero()));
        assert_eq!(h.homogeneous_dimension(), 4);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let h = heisenberg::<f64>();
        assert!(matches!(
            h.bracket(&[1.0, 0.0], &[0.0, 1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn presets_pass_audit() {
        assert!(heisenberg::<BigRational>().audit().passed());
        assert!(engel::<BigRational>().audit().passed());
        let a = abelian::<BigRational>(3).unwrap();
        assert!(a.audit().passed());
        assert_eq!(a.homogeneous_dimension(), 3);
        assert_eq!(engel::<f64>().homogeneous_dimension(), 7);
    }

    #[test]
    fn non_stratified_rejected() {
        // [X, Y] = 0 but layer 2 present: V_2 not generated.
        let err = StratifiedAlgebra::<BigRational>::new(vec![2, 1], &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidAlgebra(_)));
    }

    #[test]
    fn axiom_violations_detected() {
        let one = BigRational::one();
        let off_grade = StratifiedAlgebra::<BigRational>::new_unchecked(
            vec![2, 1],
            &[BracketSpec { a: 0, b: 1, coeffs: unit(3, 0, one.clone()) }],
        )
        .unwrap();
        assert!(!off_grade.audit().graded);
        // [e0,e1] = e0, [e0,e2] = e1: the cyclic sum on (e0,e1,e2) is -e1
        let jac = StratifiedAlgebra::<BigRational>::new_unchecked(
            vec![1, 1, 1],
            &[
                BracketSpec { a: 0, b: 1, coeffs: unit(3, 0, one.clone()) },
                BracketSpec { a: 0, b: 2, coeffs: unit(3, 1, one.clone()) },
            ],
        )
        .unwrap();
        assert_eq!(jac.audit().jacobi_failures, vec![(0, 1, 2)]);
        assert!(StratifiedAlgebra::new(vec![1, 1, 1], &jac.bracket_list()).is_err());
    }
}
