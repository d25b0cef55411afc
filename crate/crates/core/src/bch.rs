//! Baker–Campbell–Hausdorff products in exponential coordinates.
//!
//! The series `log(e^U e^V)` is expanded once in the free associative
//! algebra on two letters, truncated at the step, and turned into a Lie
//! polynomial by the Dynkin map `w ↦ [w]/|w|` (left-normed brackets).
//! For a given algebra the resulting bracket polynomial is compiled into
//! explicit polynomials in the `2n` coordinates of `U` and `V`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::algebra::StratifiedAlgebra;
use crate::scalar::Scalar;

/// Largest coordinate dimension handled by the allocation-free float path.
pub const MAX_DIM: usize = 32;

type Word = Vec<u8>;

fn series_mul(a: &BTreeMap<Word, BigRational>, b: &BTreeMap<Word, BigRational>, r: usize) -> BTreeMap<Word, BigRational> {
    let mut out: BTreeMap<Word, BigRational> = BTreeMap::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > r {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            let e = out.entry(w).or_insert_with(|| <BigRational as Scalar>::zero());
            *e += ca * cb;
        }
    }
    out.retain(|_, c| !Scalar::is_zero(c));
    out
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Coefficients of `log(e^U e^V)` in the free associative algebra on the
/// letters `0 = U`, `1 = V`, for words of length `1..=r`.
pub fn log_series(r: usize) -> BTreeMap<Word, BigRational> {
    // e^U e^V - 1 = Σ_{i+j ≥ 1} U^i V^j / (i! j!)
    let mut x: BTreeMap<Word, BigRational> = BTreeMap::new();
    for i in 0..=r {
        for j in 0..=(r - i) {
            if i + j == 0 {
                continue;
            }
            let mut w = vec![0u8; i];
            w.extend(core::iter::repeat(1u8).take(j));
            x.insert(w, BigRational::new(BigInt::one(), factorial(i) * factorial(j)));
        }
    }
    let mut out: BTreeMap<Word, BigRational> = BTreeMap::new();
    let mut power = x.clone();
    for k in 1..=r {
        let coeff = BigRational::new(
            if k % 2 == 1 { BigInt::one() } else { -BigInt::one() },
            BigInt::from(k),
        );
        for (w, c) in &power {
            let e = out.entry(w.clone()).or_insert_with(|| <BigRational as Scalar>::zero());
            *e += &coeff * c;
        }
        power = series_mul(&power, &x, r);
    }
    out.retain(|_, c| !Scalar::is_zero(c));
    out
}

/// Dynkin-weighted coefficients `c_w / |w|`: the BCH Lie polynomial is
/// `Σ_w (c_w/|w|) [w]` with `[w] = [..[[w_1, w_2], w_3].., w_k]`.
/// Words whose left-normed bracket vanishes identically are dropped.
pub fn dynkin_coefficients(r: usize) -> Vec<(Word, BigRational)> {
    log_series(r)
        .into_iter()
        .filter(|(w, _)| w.len() == 1 || w[0] != w[1])
        .map(|(w, c)| {
            let n = BigRational::from_integer(BigInt::from(w.len()));
            (w, c / n)
        })
        .collect()
}

/// Left-normed bracket of a word evaluated on concrete vectors.
pub fn eval_word<K: Scalar>(alg: &StratifiedAlgebra<K>, w: &[u8], u: &[K], v: &[K]) -> Vec<K> {
    let letter = |l: u8| if l == 0 { u } else { v };
    let mut acc = letter(w[0]).to_vec();
    for &l in &w[1..] {
        acc = alg.bracket(&acc, letter(l)).expect("dimensions checked by caller");
    }
    acc
}

/// BCH product `log(e^u e^v)` computed by summing the Dynkin word series
/// directly. Slow; used as an independent check of [`BchProgram`].
pub fn bch_by_words<K: Scalar>(alg: &StratifiedAlgebra<K>, u: &[K], v: &[K]) -> Vec<K> {
    let n = alg.dim();
    let mut out = vec![K::zero(); n];
    for (w, c) in dynkin_coefficients(alg.step()) {
        let term = eval_word(alg, &w, u, v);
        let c = K::from_rational(&c);
        for k in 0..n {
            if !term[k].is_zero() {
                out[k] = out[k].clone() + c.clone() * term[k].clone();
            }
        }
    }
    out
}

// Polynomials in 2n variables, keyed by exponent vectors.
type Poly<K> = BTreeMap<Vec<u8>, K>;

fn poly_mul<K: Scalar>(p: &Poly<K>, q: &Poly<K>) -> Poly<K> {
    let mut out: Poly<K> = BTreeMap::new();
    for (ep, cp) in p {
        for (eq, cq) in q {
            let e: Vec<u8> = ep.iter().zip(eq).map(|(a, b)| a + b).collect();
            let prod = cp.clone() * cq.clone();
            match out.get_mut(&e) {
                Some(c) => *c = c.clone() + prod,
                None => {
                    out.insert(e, prod);
                }
            }
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_add_scaled<K: Scalar>(acc: &mut Poly<K>, p: &Poly<K>, s: &K) {
    for (e, c) in p {
        let add = s.clone() * c.clone();
        match acc.get_mut(e) {
            Some(x) => *x = x.clone() + add,
            None => {
                acc.insert(e.clone(), add);
            }
        }
    }
    acc.retain(|_, c| !c.is_zero());
}

fn poly_bracket<K: Scalar>(alg: &StratifiedAlgebra<K>, p: &[Poly<K>], q: &[Poly<K>]) -> Vec<Poly<K>> {
    let n = alg.dim();
    let mut out: Vec<Poly<K>> = vec![BTreeMap::new(); n];
    for sc in alg.structure_constants() {
        if p[sc.a].is_empty() || q[sc.b].is_empty() {
            continue;
        }
        let prod = poly_mul(&p[sc.a], &q[sc.b]);
        poly_add_scaled(&mut out[sc.k], &prod, &sc.c);
    }
    out
}

/// One monomial `coeff · Π x_var^pow` of a compiled coordinate polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<K> {
    pub coeff: K,
    pub factors: Vec<(usize, u8)>,
}

/// BCH product compiled to polynomials: coordinate `k` of `log(e^u e^v)` is
/// `u_k + v_k + Σ terms[k]`, variables `0..n` being `u` and `n..2n` being `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BchProgram<K> {
    n: usize,
    terms: Vec<Vec<Term<K>>>,
}

impl<K: Scalar> BchProgram<K> {
    pub fn compile(alg: &StratifiedAlgebra<K>) -> Self {
        let n = alg.dim();
        let var = |i: usize| {
            let mut e = vec![0u8; 2 * n];
            e[i] = 1;
            let mut p: Poly<K> = BTreeMap::new();
            p.insert(e, K::one());
            p
        };
        let u: Vec<Poly<K>> = (0..n).map(var).collect();
        let v: Vec<Poly<K>> = (n..2 * n).map(var).collect();
        let coeffs: BTreeMap<Word, BigRational> = dynkin_coefficients(alg.step())
            .into_iter()
            .filter(|(w, _)| w.len() >= 2)
            .collect();
        let mut acc: Vec<Poly<K>> = vec![BTreeMap::new(); n];
        // depth-first over word prefixes so left-normed brackets share work
        let mut stack: Vec<(Word, Vec<Poly<K>>)> = vec![(vec![0], u.clone()), (vec![1], v.clone())];
        while let Some((w, val)) = stack.pop() {
            if let Some(c) = coeffs.get(&w) {
                let c = K::from_rational(c);
                for k in 0..n {
                    poly_add_scaled(&mut acc[k], &val[k], &c);
                }
            }
            if w.len() == alg.step() || val.iter().all(|p| p.is_empty()) {
                continue;
            }
            for l in [0u8, 1u8] {
                let mut next = w.clone();
                next.push(l);
                if !coeffs.keys().any(|k| k.starts_with(&next)) {
                    continue;
                }
                let rhs = if l == 0 { &u } else { &v };
                stack.push((next, poly_bracket(alg, &val, rhs)));
            }
        }
        let terms = acc
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|(e, coeff)| Term {
                        coeff,
                        factors: e
                            .iter()
                            .enumerate()
                            .filter(|(_, &d)| d > 0)
                            .map(|(i, &d)| (i, d))
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        BchProgram { n, terms }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Compiled polynomial terms of coordinate `k` beyond `u_k + v_k`.
    pub fn terms(&self, k: usize) -> &[Term<K>] {
        &self.terms[k]
    }

    pub fn term_count(&self) -> usize {
        self.terms.iter().map(|t| t.len()).sum()
    }

    pub fn eval(&self, u: &[K], v: &[K]) -> Vec<K> {
        let n = self.n;
        let x = |i: usize| if i < n { &u[i] } else { &v[i - n] };
        (0..n)
            .map(|k| {
                let mut s = u[k].clone() + v[k].clone();
                for t in &self.terms[k] {
                    let mut m = t.coeff.clone();
                    for &(i, d) in &t.factors {
                        for _ in 0..d {
                            m = m * x(i).clone();
                        }
                    }
                    s = s + m;
                }
                s
            })
            .collect()
    }

    /// Same program with coefficients mapped to `f64`, flattened for the
    /// allocation-free evaluator.
    pub fn to_float(&self) -> FloatBch {
        let mut coeffs = Vec::new();
        let mut factor_start = vec![0usize];
        let mut factors = Vec::new();
        let mut out_start = vec![0usize];
        for k in 0..self.n {
            for t in &self.terms[k] {
                coeffs.push(t.coeff.to_f64());
                for &(i, d) in &t.factors {
                    factors.push((i as u16, d));
                }
                factor_start.push(factors.len());
            }
            out_start.push(coeffs.len());
        }
        FloatBch {
            n: self.n,
            coeffs,
            factor_start,
            factors,
            out_start,
        }
    }
}

/// Flattened float version of a [`BchProgram`].
#[derive(Debug, Clone, PartialEq)]
pub struct FloatBch {
    n: usize,
    coeffs: Vec<f64>,
    factor_start: Vec<usize>,
    factors: Vec<(u16, u8)>,
    out_start: Vec<usize>,
}

impl FloatBch {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Writes `log(e^u e^v)` into `out`; no heap allocation.
    pub fn eval_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert!(n <= MAX_DIM);
        let mut x = [0.0f64; 2 * MAX_DIM];
        x[..n].copy_from_slice(&u[..n]);
        x[n..2 * n].copy_from_slice(&v[..n]);
        for k in 0..n {
            let mut s = u[k] + v[k];
            for t in self.out_start[k]..self.out_start[k + 1] {
                let mut m = self.coeffs[t];
                for &(i, d) in &self.factors[self.factor_start[t]..self.factor_start[t + 1]] {
                    let xi = x[i as usize];
                    for _ in 0..d {
                        m *= xi;
                    }
                }
                s += m;
            }
            out[k] = s;
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(u, v, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{engel, heisenberg};
    use crate::scalar::rat;

    #[test]
    fn low_order_coefficients() {
        let c: BTreeMap<Word, BigRational> = dynkin_coefficients(3).into_iter().collect();
        // Lie element ½[U,V]: words UV and VU contribute ¼ and -¼
        assert_eq!(c[&vec![0, 1]], rat(1, 4));
        assert_eq!(c[&vec![1, 0]], rat(-1, 4));
        assert_eq!(c[&vec![0]], rat(1, 1));
    }

    #[test]
    fn heisenberg_step_two() {
        let h = heisenberg::<BigRational>();
        let x = vec![rat(1, 1), rat(0, 1), rat(0, 1)];
        let y = vec![rat(0, 1), rat(1, 1), rat(0, 1)];
        let prog = BchProgram::compile(&h);
        assert_eq!(prog.eval(&x, &y), vec![rat(1, 1), rat(1, 1), rat(1, 2)]);
        assert_eq!(bch_by_words(&h, &x, &y), prog.eval(&x, &y));
    }

    #[test]
    fn engel_matches_third_order_formula() {
        // U + V + ½[U,V] + 1/12 [U,[U,V]] - 1/12 [V,[U,V]]
        let e = engel::<BigRational>();
        let u = vec![rat(2, 3), rat(-1, 2), rat(5, 7), rat(1, 3)];
        let v = vec![rat(-3, 4), rat(1, 5), rat(2, 1), rat(-1, 9)];
        let uv = e.bracket(&u, &v).unwrap();
        let uuv = e.bracket(&u, &uv).unwrap();
        let vuv = e.bracket(&v, &uv).unwrap();
        let expected: Vec<BigRational> = (0..4)
            .map(|k| {
                &u[k] + &v[k] + rat(1, 2) * &uv[k] + rat(1, 12) * &uuv[k] - rat(1, 12) * &vuv[k]
            })
            .collect();
        assert_eq!(BchProgram::compile(&e).eval(&u, &v), expected);
        assert_eq!(bch_by_words(&e, &u, &v), expected);
    }

    #[test]
    fn float_path_agrees() {
        let e = engel::<BigRational>();
        let prog = BchProgram::compile(&e);
        let fl = prog.to_float();
        let u = [0.3, -1.2, 0.7, 2.0];
        let v = [1.1, 0.4, -0.5, 0.25];
        let got = fl.eval(&u, &v);
        let uq: Vec<BigRational> = u.iter().map(|&x| BigRational::from_float(x).unwrap()).collect();
        let vq: Vec<BigRational> = v.iter().map(|&x| BigRational::from_float(x).unwrap()).collect();
        let exact = prog.eval(&uq, &vq);
        for k in 0..4 {
            assert!((got[k] - exact[k].to_f64()).abs() < 1e-12);
        }
    }
}
