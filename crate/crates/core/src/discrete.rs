//! The step-6 algebra with relations `[X,Y] = Z_2`, `[X,Z_i] = t_{i+1} Z_{i+1}`,
//! `[Y,Z_i] = Z_{i+1}`, and the exact checks behind its nondiscretizability:
//! commutator leading terms, Möbius rationality and the density probe.
//!
//! The brackets `[Z_i, Z_j]` are not given by the relations above. They are
//! solved from the Jacobi identity. The Jacobi triples `(X, Y, Z_i)` force
//! `[Z_i, Z_2] = (t_{i+1} - t_{i+2}) Z_{i+2}`, so `t_3 = t_4`; together with
//! `(X, Z_2, Z_3)` and `(Y, Z_2, Z_3)` this leaves a solution only when all
//! four `t_i` coincide. Other parameters are reported as inconsistent.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{BracketSpec, StratifiedAlgebra};
use crate::error::{Error, Result};
use crate::group::{CarnotGroup, GroupPoint};
use crate::linalg::{self, LinearSolution};
use crate::scalar::{QSqrt2, Scalar};

/// Basis order: `X = 0`, `Y = 1`, `Z_i = i` for `i = 2..=6`.
pub const X: usize = 0;
pub const Y: usize = 1;
pub const DIM: usize = 7;

/// Affine expression `c_0 + Σ c_u x_u` in the unknown structure constants.
#[derive(Clone, Debug)]
struct Affine<K> {
    c: Vec<K>,
}

impl<K: Scalar> Affine<K> {
    fn constant(v: K, nu: usize) -> Self {
        let mut c = vec![K::zero(); nu + 1];
        c[0] = v;
        Affine { c }
    }

    fn var(u: usize, nu: usize) -> Self {
        let mut c = vec![K::zero(); nu + 1];
        c[u + 1] = K::one();
        Affine { c }
    }

    fn is_const(&self) -> bool {
        self.c[1..].iter().all(|x| x.is_zero())
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    fn add(&mut self, o: &Affine<K>) {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a = a.clone() + b.clone();
        }
    }

    fn mul(&self, o: &Affine<K>) -> Result<Affine<K>> {
        if !self.is_const() && !o.is_const() {
            return Err(Error::InvalidParameter(
                "Jacobi system is nonlinear in the unknown brackets".into(),
            ));
        }
        let (k, e) = if self.is_const() { (&self.c[0], o) } else { (&o.c[0], self) };
        Ok(Affine {
            c: e.c.iter().map(|x| x.clone() * k.clone()).collect(),
        })
    }
}

/// Outcome of completing a partially specified bracket table.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion<K> {
    pub algebra: StratifiedAlgebra<K>,
    /// Solved brackets `(a, b, coefficients)` for the unknown pairs.
    pub solved: Vec<BracketSpec<K>>,
    /// Number of free unknowns set to zero (0 when the solution is unique).
    pub free: usize,
}

/// Solve the unknown brackets `[e_a, e_b]`, `(a, b) ∈ unknown`, so that the
/// Jacobi identity holds on every basis triple. Each unknown bracket ranges
/// over the layer `j(a) + j(b)`.
pub fn complete_by_jacobi<K: Scalar>(
    layer_dims: Vec<usize>,
    known: &[BracketSpec<K>],
    unknown: &[(usize, usize)],
) -> Result<Completion<K>> {
    let skeleton = StratifiedAlgebra::new_unchecked(layer_dims.clone(), known)?;
    let n = skeleton.dim();
    let r = skeleton.step();
    // one variable per (unknown pair, output coordinate)
    let mut vars: Vec<(usize, usize, usize)> = Vec::new();
    for &(a, b) in unknown {
        let t = skeleton.layer_of(a) + skeleton.layer_of(b);
        if t <= r {
            for k in skeleton.layer_range(t) {
                vars.push((a, b, k));
            }
        }
    }
    let nu = vars.len();
    let mut table: Vec<Affine<K>> = (0..n * n * n)
        .map(|i| Affine::constant(skeleton.constant(i / (n * n), (i / n) % n, i % n).clone(), nu))
        .collect();
    for (u, &(a, b, k)) in vars.iter().enumerate() {
        table[(a * n + b) * n + k] = Affine::var(u, nu);
        let mut neg = Affine::var(u, nu);
        neg.c[u + 1] = -K::one();
        table[(b * n + a) * n + k] = neg;
    }
    let at = |a: usize, b: usize, k: usize| &table[(a * n + b) * n + k];
    let mut rows: Vec<Vec<K>> = Vec::new();
    let mut rhs: Vec<K> = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for k in 0..n {
                    let mut sum = Affine::constant(K::zero(), nu);
                    for (p, q, s) in [(a, b, c), (b, c, a), (c, a, b)] {
                        // [e_p, [e_q, e_s]]_k = Σ_m C(q,s,m) C(p,m,k)
                        for m in 0..n {
                            let x = at(q, s, m);
                            let y = at(p, m, k);
                            if x.is_zero() || y.is_zero() {
                                continue;
                            }
                            sum.add(&x.mul(y)?);
                        }
                    }
                    if sum.is_zero() {
                        continue;
                    }
                    rows.push(sum.c[1..].to_vec());
                    rhs.push(-sum.c[0].clone());
                }
            }
        }
    }
    let (x, free) = match linalg::solve(&rows, &rhs, nu) {
        LinearSolution::Unique(x) => (x, 0),
        LinearSolution::Underdetermined { x, free } => (x, free),
        LinearSolution::Inconsistent => {
            return Err(Error::InconsistentJacobi(String::from(
                "no choice of the unknown brackets satisfies the Jacobi identity",
            )))
        }
    };
    let mut brackets = known.to_vec();
    let mut solved = Vec::new();
    for &(a, b) in unknown {
        let mut coeffs = vec![K::zero(); n];
        for (u, &(va, vb, k)) in vars.iter().enumerate() {
            if (va, vb) == (a, b) {
                coeffs[k] = x[u].clone();
            }
        }
        let spec = BracketSpec { a, b, coeffs };
        solved.push(spec.clone());
        brackets.push(spec);
    }
    let algebra = StratifiedAlgebra::new(layer_dims, &brackets)?;
    Ok(Completion {
        algebra,
        solved,
        free,
    })
}

/// Parameters `t_3, t_4, t_5, t_6` in `Q(√2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleParams {
    pub t: [QSqrt2; 4],
}

impl ExampleParams {
    /// `t_i` for `i ∈ 3..=6`.
    pub fn t(&self, i: usize) -> &QSqrt2 {
        &self.t[i - 3]
    }

    pub fn constant(t: QSqrt2) -> Self {
        ExampleParams {
            t: [t.clone(), t.clone(), t.clone(), t],
        }
    }
}

fn unit(k: usize, c: QSqrt2) -> Vec<QSqrt2> {
    let mut v = vec![QSqrt2::zero(); DIM];
    v[k] = c;
    v
}

/// The given relations of the example; the `[Z_i, Z_j]` are left out.
pub fn example_relations(p: &ExampleParams) -> Vec<BracketSpec<QSqrt2>> {
    let mut out = vec![BracketSpec {
        a: X,
        b: Y,
        coeffs: unit(2, QSqrt2::one()),
    }];
    for i in 2..=5 {
        out.push(BracketSpec {
            a: X,
            b: i,
            coeffs: unit(i + 1, p.t(i + 1).clone()),
        });
        out.push(BracketSpec {
            a: Y,
            b: i,
            coeffs: unit(i + 1, QSqrt2::one()),
        });
    }
    out
}

/// Complete the example's bracket table from the Jacobi identity.
pub fn build_example_algebra(p: &ExampleParams) -> Result<Completion<QSqrt2>> {
    let mut unknown = Vec::new();
    for i in 2..=6 {
        for j in (i + 1)..=6 {
            if i + j <= 6 {
                unknown.push((i, j));
            }
        }
    }
    complete_by_jacobi(vec![2, 1, 1, 1, 1, 1], &example_relations(p), &unknown).map_err(|e| match e {
        Error::InconsistentJacobi(_) => Error::InconsistentJacobi(format!(
            "t = ({}, {}, {}, {}): the triples (X,Y,Z_i), (X,Z_2,Z_3), (Y,Z_2,Z_3) \
             force t_3 = t_4 = t_5 = t_6",
            p.t[0], p.t[1], p.t[2], p.t[3]
        )),
        other => other,
    })
}

/// Exact coordinates of `g u g⁻¹ u⁻¹` for `g = exp(aX + bY)`, `u = exp(s Z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub i: usize,
    pub coords: Vec<QSqrt2>,
    /// `Z_{i+1}` coordinate.
    pub leading: QSqrt2,
    /// `(a t_{i+1} + b) s`.
    pub expected: QSqrt2,
    /// All coordinates in layers `≤ i` vanish.
    pub lower_vanish: bool,
}

impl CommutatorReport {
    pub fn holds(&self) -> bool {
        self.lower_vanish && self.leading == self.expected
    }
}

pub fn commutator_leading_term(
    group: &CarnotGroup<QSqrt2>,
    p: &ExampleParams,
    a: &QSqrt2,
    b: &QSqrt2,
    i: usize,
    s: &QSqrt2,
) -> Result<CommutatorReport> {
    if !(2..=6).contains(&i) {
        return Err(Error::InvalidParameter(format!("Z index {i} outside 2..=6")));
    }
    let mut g = vec![QSqrt2::zero(); DIM];
    g[X] = a.clone();
    g[Y] = b.clone();
    let g = GroupPoint::new(g);
    let u = GroupPoint::new(unit(i, s.clone()));
    let gu = group.multiply(&g, &u)?;
    let gug = group.multiply(&gu, &group.invert(&g))?;
    let c = group.multiply(&gug, &group.invert(&u))?;
    // layer of Z_k is k, so coordinates 0..=i are the layers ≤ i
    let lower_vanish = c.coords[..=i].iter().all(|x| x.is_zero());
    let (leading, expected) = if i < 6 {
        (
            c.coords[i + 1].clone(),
            (a.clone() * p.t(i + 1).clone() + b.clone()) * s.clone(),
        )
    } else {
        (QSqrt2::zero(), QSqrt2::zero())
    };
    Ok(CommutatorReport {
        i,
        coords: c.coords,
        leading,
        expected,
        lower_vanish,
    })
}

/// Value of `(a t + b)/(c t + d)` and whether it is rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Rationality {
    pub value: QSqrt2,
    pub rational: bool,
}

pub fn mobius_rationality(
    a: &QSqrt2,
    b: &QSqrt2,
    c: &QSqrt2,
    d: &QSqrt2,
    t: &QSqrt2,
) -> Result<Rationality> {
    if a.clone() * d.clone() - b.clone() * c.clone() != QSqrt2::one() {
        return Err(Error::InvalidParameter("ad - bc must equal 1".into()));
    }
    let den = c.clone() * t.clone() + d.clone();
    if den.is_zero() {
        return Err(Error::Pole);
    }
    let value = (a.clone() * t.clone() + b.clone()) / den;
    Ok(Rationality {
        rational: value.is_rational(),
        value,
    })
}

/// Result of searching the subgroup `{p α + q β}` for small elements.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityOutcome {
    /// `|p α + q β| < eps`.
    Found { p: BigInt, q: BigInt, value: QSqrt2 },
    /// `α/β` is rational and the subgroup is `gap · Z` with `gap ≥ eps`.
    Discrete { gap: QSqrt2 },
}

fn combo(p: &BigInt, a: &QSqrt2, q: &BigInt, b: &QSqrt2) -> QSqrt2 {
    let pr = QSqrt2::rational(BigRational::from_integer(p.clone()));
    let qr = QSqrt2::rational(BigRational::from_integer(q.clone()));
    pr * a.clone() + qr * b.clone()
}

/// Find integers with `|p α + q β| < eps` from the continued-fraction
/// convergents of `α/β`, or show the subgroup is discrete at scale `eps`.
/// Returns the first convergent meeting the bound.
pub fn density_probe(alpha: &QSqrt2, beta: &QSqrt2, eps: &BigRational) -> Result<DensityOutcome> {
    if beta.is_zero() {
        return Err(Error::InvalidParameter("beta must be nonzero".into()));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let eps_q = QSqrt2::rational(eps.clone());
    let small = |v: &QSqrt2| v.abs() < eps_q;
    if small(alpha) {
        return Ok(DensityOutcome::Found {
            p: BigInt::one(),
            q: BigInt::zero(),
            value: alpha.clone(),
        });
    }
    let ratio = alpha.clone() / beta.clone();
    if ratio.is_rational() {
        // p n/m + q ranges over (1/m) Z, scaled by β
        let n = ratio.a.numer().clone();
        let m = ratio.a.denom().clone();
        let gap = beta.abs() / QSqrt2::rational(BigRational::from_integer(m.clone()));
        if !small(&gap) {
            return Ok(DensityOutcome::Discrete { gap });
        }
        let e = n.extended_gcd(&m);
        let (p, q) = (e.x, e.y);
        let value = combo(&p, alpha, &q, beta);
        return Ok(DensityOutcome::Found { p, q, value });
    }
    // convergents h_k / k_k of x = α/β; p = -k_k... chosen so p α + q β = β (q + p x)
    let mut x = ratio;
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    for _ in 0..10_000 {
        let a = x.floor();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        // x ≈ h2/k2, so k2 α - h2 β = β (k2 x - h2) is small
        let (p, q) = (-k2.clone(), h2.clone());
        let value = combo(&p, alpha, &q, beta);
        if small(&value) {
            return Ok(DensityOutcome::Found { p, q, value });
        }
        h0 = core::mem::replace(&mut h1, h2);
        k0 = core::mem::replace(&mut k1, k2);
        let frac = x.clone() - QSqrt2::rational(BigRational::from_integer(a));
        x = QSqrt2::one() / frac;
    }
    Err(Error::InvalidParameter("continued fraction did not reach eps".into()))
}

/// Random rational unimodular `(a, b, c, d)`, i.e. `ad - bc = 1`.
pub fn random_unimodular<R: Rng>(rng: &mut R) -> [BigRational; 4] {
    let mut draw = |nonzero: bool| loop {
        let num: i64 = rng.random_range(-9..=9);
        let den: i64 = rng.random_range(1..=9);
        if !nonzero || num != 0 {
            break BigRational::new(BigInt::from(num), BigInt::from(den));
        }
    };
    let a = draw(true);
    let b = draw(false);
    let c = draw(false);
    let d = (<BigRational as Scalar>::one() + &b * &c) / &a;
    [a, b, c, d]
}

/// Draws of random unimodular maps checked against the four conditions
/// `(a t_i + b)/(c t_i + d) ∈ Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionReport {
    pub draws: usize,
    /// Draws for which the condition at `t_6` fails.
    pub fail_at_t6: usize,
    /// Draws for which at least one of the four conditions fails.
    pub some_fail: usize,
    /// Draws skipped because `c t_i + d = 0` for some `i`.
    pub poles: usize,
}

pub fn obstruction_check(p: &ExampleParams, draws: usize, seed: u64) -> ObstructionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ObstructionReport {
        draws,
        fail_at_t6: 0,
        some_fail: 0,
        poles: 0,
    };
    for _ in 0..draws {
        let [a, b, c, d] = random_unimodular(&mut rng).map(QSqrt2::rational);
        let mut any = false;
        let mut pole = false;
        for i in 3..=6 {
            match mobius_rationality(&a, &b, &c, &d, p.t(i)) {
                Ok(r) => {
                    if !r.rational {
                        any = true;
                        if i == 6 {
                            rep.fail_at_t6 += 1;
                        }
                    }
                }
                Err(_) => pole = true,
            }
        }
        if pole {
            rep.poles += 1;
        }
        if any {
            rep.some_fail += 1;
        }
    }
    rep
}

/// Parse an element of `Q(√2)`: `p`, `p/q`, `sqrt2`, `r*sqrt2`, `a+r*sqrt2`,
/// `a-r*sqrt2`.
pub fn parse_qsqrt2(s: &str) -> Result<QSqrt2> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidParameter(format!("cannot parse '{s}' as an element of Q(sqrt2)"));
    let rational = |t: &str| -> Result<BigRational> {
        if t.is_empty() || t == "+" {
            return Ok(<BigRational as Scalar>::one());
        }
        if t == "-" {
            return Ok(-<BigRational as Scalar>::one());
        }
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n, d),
            None => (t, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(BigRational::new(num, den))
    };
    let Some(pos) = s.find("sqrt2") else {
        return Ok(QSqrt2::rational(rational(&s)?));
    };
    if pos + 5 != s.len() {
        return Err(bad());
    }
    let head = &s[..pos];
    let head = head.strip_suffix('*').unwrap_or(head);
    // split the rational part from the √2 coefficient at the last sign
    let split = head
        .char_indices()
        .filter(|&(i, c)| i > 0 && (c == '+' || c == '-') && !head[..i].ends_with('/'))
        .map(|(i, _)| i)
        .last();
    let (a, b) = match split {
        Some(i) => (rational(&head[..i])?, rational(&head[i..])?),
        None => (<BigRational as Scalar>::zero(), rational(head)?),
    };
    Ok(QSqrt2::new(a, b))
}

/// `Ordering` of `|x|` against a rational bound, exposed for reports.
pub fn abs_cmp(x: &QSqrt2, bound: &BigRational) -> Ordering {
    (x.abs() - QSqrt2::rational(bound.clone())).signum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn q(p: i64, d: i64) -> QSqrt2 {
        QSqrt2::rational(rat(p, d))
    }

    #[test]
    fn all_equal_t_completes_with_zero_brackets() {
        let c = build_example_algebra(&ExampleParams::constant(q(1, 1))).unwrap();
        assert_eq!(c.free, 0);
        for s in &c.solved {
            assert!(s.coeffs.iter().all(|x| x.is_zero()));
        }
        assert!(c.algebra.audit().passed());
        assert_eq!(c.algebra.homogeneous_dimension(), 22);
    }

    #[test]
    fn distinct_t_is_inconsistent() {
        let p = ExampleParams {
            t: [q(1, 1), q(2, 1), q(3, 1), QSqrt2::sqrt2()],
        };
        assert!(matches!(build_example_algebra(&p), Err(Error::InconsistentJacobi(_))));
        // t_3 = t_4 but t_5 different is still inconsistent
        let p = ExampleParams {
            t: [q(1, 1), q(1, 1), q(2, 1), q(3, 1)],
        };
        assert!(matches!(build_example_algebra(&p), Err(Error::InconsistentJacobi(_))));
    }

    #[test]
    fn bracket_x_z2() {
        let c = build_example_algebra(&ExampleParams::constant(QSqrt2::sqrt2())).unwrap();
        let mut x = vec![QSqrt2::zero(); DIM];
        x[X] = QSqrt2::one();
        let z2 = unit(2, QSqrt2::one());
        assert_eq!(c.algebra.bracket(&x, &z2).unwrap(), unit(3, QSqrt2::sqrt2()));
    }

    #[test]
    fn mobius() {
        let one = q(1, 1);
        let r = mobius_rationality(&one, &one, &q(0, 1), &one, &q(2, 1)).unwrap();
        assert!(r.rational);
        assert_eq!(r.value, q(3, 1));
        let r = mobius_rationality(&q(2, 1), &q(1, 1), &q(1, 1), &q(1, 1), &QSqrt2::sqrt2()).unwrap();
        assert!(!r.rational);
        // c t + d = 0 at t = -1 for c = d = 1
        assert_eq!(
            mobius_rationality(&q(2, 1), &q(1, 1), &q(1, 1), &q(1, 1), &q(-1, 1)),
            Err(Error::Pole)
        );
        assert!(mobius_rationality(&one, &one, &one, &one, &one).is_err());
    }

    #[test]
    fn density_probe_sqrt2() {
        let out = density_probe(&q(1, 1), &QSqrt2::sqrt2(), &rat(1, 100)).unwrap();
        match out {
            DensityOutcome::Found { p, q: qq, value } => {
                assert_eq!((p, qq), (BigInt::from(-99), BigInt::from(70)));
                assert!(value.to_f64().abs() < 0.01);
            }
            other => panic!("{other:?}"),
        }
        match density_probe(&q(1, 1), &QSqrt2::sqrt2(), &rat(1, 200)).unwrap() {
            DensityOutcome::Found { p, q: qq, .. } => {
                assert_eq!((p, qq), (BigInt::from(-239), BigInt::from(169)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn density_probe_rational() {
        match density_probe(&q(2, 1), &q(3, 1), &rat(1, 2)).unwrap() {
            DensityOutcome::Discrete { gap } => assert_eq!(gap, q(1, 1)),
            other => panic!("{other:?}"),
        }
        match density_probe(&q(1, 100), &q(1, 1), &rat(1, 2)).unwrap() {
            DensityOutcome::Found { p, q: qq, .. } => assert_eq!((p, qq), (BigInt::one(), BigInt::zero())),
            other => panic!("{other:?}"),
        }
        match density_probe(&q(2, 1), &q(3, 1), &rat(2, 1)).unwrap() {
            DensityOutcome::Found { value, .. } => assert_eq!(value.abs(), q(1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_qsqrt2("3/4").unwrap(), q(3, 4));
        assert_eq!(parse_qsqrt2("sqrt2").unwrap(), QSqrt2::sqrt2());
        assert_eq!(parse_qsqrt2("-sqrt2").unwrap(), -QSqrt2::sqrt2());
        assert_eq!(parse_qsqrt2("1/2*sqrt2").unwrap(), QSqrt2::new(rat(0, 1), rat(1, 2)));
        assert_eq!(parse_qsqrt2("1-2*sqrt2").unwrap(), QSqrt2::new(rat(1, 1), rat(-2, 1)));
        assert_eq!(parse_qsqrt2("-1/3+sqrt2").unwrap(), QSqrt2::new(rat(-1, 3), rat(1, 1)));
        assert!(parse_qsqrt2("pi").is_err());
        assert!(parse_qsqrt2("1/0").is_err());
    }

    #[test]
    fn display_round_trips() {
        for (a, b) in [(0, 1), (1, 0), (-3, 2), (5, -7), (0, -1), (-1, -1)] {
            let x = QSqrt2::new(rat(a, 2), rat(b, 3));
            assert_eq!(parse_qsqrt2(&alloc::format!("{x}")).unwrap(), x, "{x}");
        }
    }
}
