//! Lipschitz map presets and their sampled images.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::abelian;
use crate::error::{Error, Result};
use crate::group::CarnotGroup;
use crate::hom::Homomorphism;
use crate::lattice::GradedLattice;
use crate::linalg;
use crate::norm::Metric;
use crate::scalar::Scalar;

pub const MAP_PRESETS: &[&str] = &["hom", "identity", "fold", "constant", "collapse"];

#[derive(Debug, Clone)]
pub enum MapKind {
    Identity,
    Hom(Homomorphism<f64>),
    /// `exp(g_1 + …) ↦ exp(φ(g_1))` into the abelian group on `V_1`, with
    /// `φ` taking the absolute value of coordinate `axis`.
    Fold { axis: usize },
    Constant,
}

#[derive(Debug, Clone)]
pub struct LipschitzMap {
    name: String,
    kind: MapKind,
    domain: Metric,
    codomain: Metric,
    declared: f64,
}

/// `max_j (λ^h_j / λ^g_j) ‖A_j‖^{1/j}`, which bounds `N(L g) / N(g)`.
pub fn hom_lipschitz_bound(h: &Homomorphism<f64>, dom: &Metric, cod: &Metric) -> f64 {
    let mut bound: f64 = 0.0;
    for j in 1..=dom.step().min(cod.step()) {
        let op = linalg::max_singular(h.block(j), dom.layer_dims()[j - 1]);
        let ratio = cod.config().lambdas[j - 1] / dom.config().lambdas[j - 1];
        bound = bound.max(ratio * libm::pow(op, 1.0 / j as f64));
    }
    bound
}

impl LipschitzMap {
    /// A homomorphism, precomposed with a dilation when needed so that it is
    /// 1-Lipschitz.
    pub fn hom<K: Scalar>(h: &Homomorphism<K>, dom: &Metric, cod: &Metric) -> Result<Self> {
        Self::hom_named("hom", h, dom, cod)
    }

    /// A (typically rank-deficient) homomorphism used for net tests.
    pub fn collapse<K: Scalar>(h: &Homomorphism<K>, dom: &Metric, cod: &Metric) -> Result<Self> {
        Self::hom_named("collapse", h, dom, cod)
    }

    fn hom_named<K: Scalar>(name: &str, h: &Homomorphism<K>, dom: &Metric, cod: &Metric) -> Result<Self> {
        let h = h.to_f64();
        if h.domain().layer_dims() != dom.layer_dims() || h.codomain().layer_dims() != cod.layer_dims() {
            return Err(Error::InvalidParameter("homomorphism does not match the given metrics".into()));
        }
        let bound = hom_lipschitz_bound(&h, dom, cod);
        let h = if bound > 1.0 { h.scaled(&(1.0 / bound)) } else { h };
        Ok(LipschitzMap {
            name: name.into(),
            kind: MapKind::Hom(h),
            domain: dom.clone(),
            codomain: cod.clone(),
            declared: 1.0,
        })
    }

    pub fn identity(metric: &Metric) -> Self {
        LipschitzMap {
            name: "identity".into(),
            kind: MapKind::Identity,
            domain: metric.clone(),
            codomain: metric.clone(),
            declared: 1.0,
        }
    }

    /// `|Δφ(g_1)| ≤ |Δg_1| ≤ d / λ_1`, so the declared constant is `1/λ_1`.
    pub fn fold(dom: &Metric, axis: usize) -> Result<Self> {
        let m1 = dom.layer_dims()[0];
        if axis >= m1 {
            return Err(Error::InvalidParameter("fold axis must index the first layer".into()));
        }
        let cod = Metric::unit(&CarnotGroup::new(abelian::<f64>(m1)?));
        Ok(LipschitzMap {
            name: "fold".into(),
            kind: MapKind::Fold { axis },
            domain: dom.clone(),
            declared: 1.0 / dom.config().lambdas[0],
            codomain: cod,
        })
    }

    /// Everything to the identity of `cod`.
    pub fn constant(dom: &Metric, cod: &Metric) -> Self {
        LipschitzMap {
            name: "constant".into(),
            kind: MapKind::Constant,
            domain: dom.clone(),
            codomain: cod.clone(),
            declared: 0.0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn domain(&self) -> &Metric {
        &self.domain
    }

    pub fn codomain(&self) -> &Metric {
        &self.codomain
    }

    pub fn declared_lipschitz(&self) -> f64 {
        self.declared
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            MapKind::Identity => out.copy_from_slice(x),
            MapKind::Hom(h) => out.copy_from_slice(&h.apply(x)),
            MapKind::Fold { axis } => {
                let m1 = out.len();
                out.copy_from_slice(&x[..m1]);
                out[*axis] = libm::fabs(out[*axis]);
            }
            MapKind::Constant => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.codomain.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// `d_H(f(x), f(y))`.
    pub fn image_dist(&self, x: &[f64], y: &[f64]) -> f64 {
        self.codomain.dist(&self.apply(x), &self.apply(y))
    }
}

/// Image of every lattice point, with the Lipschitz constant measured on
/// sampled pairs.
#[derive(Debug, Clone)]
pub struct MapSample {
    values: Vec<f64>,
    cod_dim: usize,
    pub measured: f64,
    pub declared: f64,
}

impl MapSample {
    /// Evaluates `f` on the lattice and measures `max d_H(f x, f y) / d(x, y)`
    /// over `pairs` random pairs plus all neighbors within `2h` of `pairs / 8`
    /// random points. Fails when the measured constant exceeds the declared
    /// one by more than 1%.
    pub fn new(map: &LipschitzMap, lattice: &GradedLattice, pairs: usize, seed: u64) -> Result<Self> {
        let cd = map.codomain().dim();
        let n = lattice.len();
        let mut values = vec![0.0; n * cd];
        for i in 0..n {
            map.apply_into(lattice.point(i), &mut values[i * cd..(i + 1) * cd]);
        }
        let mut s = MapSample {
            values,
            cod_dim: cd,
            measured: 0.0,
            declared: map.declared_lipschitz(),
        };
        let cod = map.codomain();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut ratio = |x: usize, y: usize| {
            let d = lattice.dist(x, y);
            if d > 0.0 {
                worst = worst.max(cod.dist(s.image(x), s.image(y)) / d);
            }
        };
        if n > 1 {
            for _ in 0..pairs {
                ratio(rng.random_range(0..n), rng.random_range(0..n));
            }
            for _ in 0..pairs / 8 {
                let x = rng.random_range(0..n);
                for y in lattice.within(lattice.point(x), 2.0 * lattice.resolution()) {
                    ratio(x, y);
                }
            }
        }
        s.measured = worst;
        if s.measured > s.declared * 1.01 + 1e-12 {
            return Err(Error::InvalidParameter(alloc::format!(
                "map '{}' measured Lipschitz constant {} exceeds declared {}",
                map.name(),
                s.measured,
                s.declared
            )));
        }
        Ok(s)
    }

    pub fn image(&self, i: usize) -> &[f64] {
        &self.values[i * self.cod_dim..(i + 1) * self.cod_dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cod_dim(&self) -> usize {
        self.cod_dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.cod_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::heisenberg;
    use crate::hom::identity;
    use crate::lattice::DEFAULT_BUDGET;
    use crate::scalar::rat;
    use num_rational::BigRational;

    fn heis() -> Metric {
        Metric::unit(&CarnotGroup::new(heisenberg::<BigRational>()))
    }

    #[test]
    fn hom_identity_is_one_lipschitz() {
        let m = heis();
        let f = LipschitzMap::hom(&identity(&heisenberg::<BigRational>()), &m, &m).unwrap();
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        let s = MapSample::new(&f, &lat, 2000, 1).unwrap();
        assert!((s.measured - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hom_is_rescaled() {
        let g = heisenberg::<BigRational>();
        let a1 = vec![vec![rat(3, 1), rat(0, 1)], vec![rat(0, 1), rat(2, 1)]];
        let h = Homomorphism::from_first_layer(a1, &g, &g).unwrap();
        let m = heis();
        let f = LipschitzMap::hom(&h, &m, &m).unwrap();
        let MapKind::Hom(scaled) = f.kind() else { panic!() };
        assert!((hom_lipschitz_bound(scaled, &m, &m) - 1.0).abs() < 1e-12);
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.25, DEFAULT_BUDGET).unwrap();
        assert!(MapSample::new(&f, &lat, 2000, 2).unwrap().measured <= 1.0 + 1e-12);
    }

    #[test]
    fn fold_on_heisenberg() {
        let m = heis();
        let f = LipschitzMap::fold(&m, 0).unwrap();
        assert_eq!(f.apply(&[-0.5, 0.25, 0.1]), vec![0.5, 0.25]);
        let lat = GradedLattice::build(&m, &[0.0; 3], 1.0, 0.125, DEFAULT_BUDGET).unwrap();
        let s = MapSample::new(&f, &lat, 5000, 3).unwrap();
        assert!(s.measured <= 1.01 && s.measured > 0.5);
        assert!(LipschitzMap::fold(&m, 2).is_err());
    }

    #[test]
    fn constant_map() {
        let m = heis();
        let f = LipschitzMap::constant(&m, &m);
        assert_eq!(f.apply(&[1.0, 2.0, 3.0]), vec![0.0; 3]);
        assert_eq!(f.image_dist(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), 0.0);
    }
}
