//! Small dense linear algebra over any [`Scalar`] field, plus a few
//! float-only routines (symmetric eigenvalues, determinants).

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::Scalar;

/// Row-major dense matrix.
pub type Matrix<K> = Vec<Vec<K>>;

fn pivot_row<K: Scalar>(m: &[Vec<K>], col: usize, from: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (r, row) in m.iter().enumerate().skip(from) {
        if row[col].is_zero() {
            continue;
        }
        let mag = libm::fabs(row[col].to_f64());
        match best {
            Some((_, b)) if b >= mag => {}
            _ => best = Some((r, mag)),
        }
    }
    best.map(|(r, _)| r)
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<K: Scalar>(m: &mut [Vec<K>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = pivot_row(m, c, r) else { continue };
        m.swap(r, p);
        let inv = K::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let v = m[r][j].clone();
                    m[i][j] = m[i][j].clone() - factor.clone() * v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<K: Scalar>(rows: &[Vec<K>]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m).len()
}

/// Outcome of solving `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution<K> {
    Unique(Vec<K>),
    /// Solution with free variables set to zero; `free` counts them.
    Underdetermined { x: Vec<K>, free: usize },
    Inconsistent,
}

/// Solve `A x = b` with `A` of shape `m × n`.
pub fn solve<K: Scalar>(a: &[Vec<K>], b: &[K], n: usize) -> LinearSolution<K> {
    let mut aug: Vec<Vec<K>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    if aug.is_empty() {
        return if n == 0 {
            LinearSolution::Unique(Vec::new())
        } else {
            LinearSolution::Underdetermined {
                x: vec![K::zero(); n],
                free: n,
            }
        };
    }
    let pivots = rref(&mut aug);
    if pivots.contains(&n) {
        return LinearSolution::Inconsistent;
    }
    let mut x = vec![K::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    if pivots.len() == n {
        LinearSolution::Unique(x)
    } else {
        LinearSolution::Underdetermined {
            x,
            free: n - pivots.len(),
        }
    }
}

/// Matrix-vector product.
pub fn mat_vec<K: Scalar>(m: &[Vec<K>], v: &[K]) -> Vec<K> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(K::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
        })
        .collect()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are eigenvectors.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if libm::fabs(m[p][q]) < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i][i]).collect(), v)
}

/// Smallest singular value of an `rows × cols` matrix (as a map from
/// `R^cols`) together with a unit right singular vector achieving it.
/// A map into a space of smaller dimension has smallest singular value 0.
pub fn min_singular(a: &[Vec<f64>], cols: usize) -> (f64, Vec<f64>) {
    if cols == 0 {
        return (f64::INFINITY, Vec::new());
    }
    let mut ata = vec![vec![0.0; cols]; cols];
    for row in a {
        for i in 0..cols {
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let (vals, vecs) = symmetric_eigen(&ata);
    let (idx, &min) = vals
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(core::cmp::Ordering::Equal))
        .expect("nonempty");
    let v: Vec<f64> = (0..cols).map(|i| vecs[i][idx]).collect();
    (libm::sqrt(min.max(0.0)), v)
}

/// Operator norm (largest singular value) of an `rows × cols` matrix.
pub fn max_singular(a: &[Vec<f64>], cols: usize) -> f64 {
    if cols == 0 || a.is_empty() {
        return 0.0;
    }
    let mut ata = vec![vec![0.0; cols]; cols];
    for row in a {
        for i in 0..cols {
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let (vals, _) = symmetric_eigen(&ata);
    libm::sqrt(vals.iter().cloned().fold(0.0, f64::max))
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if libm::fabs(m[r][c]) > libm::fabs(m[p][c]) {
                p = r;
            }
        }
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// `sqrt(det(AᵀA))`, the volume scaling factor of an injective linear map.
pub fn gram_volume(a: &[Vec<f64>], cols: usize) -> f64 {
    let mut ata = vec![vec![0.0; cols]; cols];
    for row in a {
        for i in 0..cols {
            for j in 0..cols {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    libm::sqrt(det(&ata).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use num_rational::BigRational;

    #[test]
    fn exact_rank_and_solve() {
        let a: Vec<Vec<BigRational>> = vec![
            vec![rat(1, 1), rat(2, 1)],
            vec![rat(2, 1), rat(4, 1)],
        ];
        assert_eq!(rank(&a), 1);
        match solve(&a, &[rat(1, 1), rat(3, 1)], 2) {
            LinearSolution::Inconsistent => {}
            other => panic!("expected inconsistent, got {other:?}"),
        }
        let b: Vec<Vec<BigRational>> = vec![
            vec![rat(1, 1), rat(1, 1)],
            vec![rat(1, 1), rat(-1, 1)],
        ];
        assert_eq!(
            solve(&b, &[rat(3, 1), rat(1, 1)], 2),
            LinearSolution::Unique(vec![rat(2, 1), rat(1, 1)])
        );
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 0.1]];
        let (s, v) = min_singular(&a, 2);
        assert!((s - 0.1).abs() < 1e-12);
        assert!((v[1].abs() - 1.0).abs() < 1e-12);
        // projection R^2 -> R
        let p = vec![vec![1.0, 0.0]];
        let (s, v) = min_singular(&p, 2);
        assert!(s.abs() < 1e-12);
        assert!((v[1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        assert!((det(&a) - 5.0).abs() < 1e-12);
    }
}
