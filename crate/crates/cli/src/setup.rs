//! Turns a [`RunConfig`] into metrics, a Lipschitz map and a lattice.

use anyhow::{bail, Context, Result};
use carnot_core::algebra::{AlgebraAudit, StratifiedAlgebra};
use carnot_core::group::CarnotGroup;
use carnot_core::hom::Homomorphism;
use carnot_core::lattice::GradedLattice;
use carnot_core::maps::{LipschitzMap, MapSample};
use carnot_core::norm::{validate_triangle, Metric, NormConfig, TriangleReport};
use carnot_core::scalar::{QSqrt2, Scalar};
use serde::Serialize;

use crate::config::{Coeff, MapSpec, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct TriangleSummary {
    /// Worst sampled `d(x,z) / (d(x,y) + d(y,z))`.
    pub worst: f64,
    pub samples: usize,
    /// `C_Q ≤ 1`, i.e. the norm is a metric on the sample.
    pub is_metric: bool,
}

impl From<&TriangleReport> for TriangleSummary {
    fn from(r: &TriangleReport) -> Self {
        TriangleSummary {
            worst: r.worst,
            samples: r.samples,
            is_metric: r.worst <= 1.0 + 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraSummary {
    pub group: String,
    pub layer_dims: Vec<usize>,
    pub homogeneous_dimension: usize,
    pub antisymmetric: bool,
    pub jacobi_failures: Vec<(usize, usize, usize)>,
    pub graded: bool,
    /// `(layer, rank of [V_1, V_j])` against `dim V_{j+1}`.
    pub stratification_ranks: Vec<(usize, usize)>,
    pub passed: bool,
}

impl AlgebraSummary {
    pub fn new(label: String, alg: &StratifiedAlgebra<QSqrt2>) -> Self {
        let AlgebraAudit {
            antisymmetric,
            jacobi_failures,
            graded,
            stratification_ranks,
        } = alg.audit();
        let passed = alg.audit().passed();
        AlgebraSummary {
            group: label,
            layer_dims: alg.layer_dims().to_vec(),
            homogeneous_dimension: alg.homogeneous_dimension(),
            antisymmetric,
            jacobi_failures,
            graded,
            stratification_ranks,
            passed,
        }
    }
}

pub struct Setup {
    pub domain_alg: StratifiedAlgebra<QSqrt2>,
    pub codomain_alg: StratifiedAlgebra<QSqrt2>,
    pub domain_label: String,
    pub codomain_label: String,
    pub domain: Metric,
    pub triangle: TriangleReport,
    pub codomain_triangle: TriangleReport,
    pub map: LipschitzMap,
}

impl Setup {
    pub fn algebra_summaries(&self) -> Vec<AlgebraSummary> {
        vec![
            AlgebraSummary::new(self.domain_label.clone(), &self.domain_alg),
            AlgebraSummary::new(self.codomain_label.clone(), &self.codomain_alg),
        ]
    }

    pub fn homogeneous_dimension(&self) -> usize {
        self.domain.homogeneous_dimension()
    }
}

fn norm_config(lambdas: &Option<Vec<f64>>, step: usize, field: &str) -> Result<NormConfig> {
    match lambdas {
        None => Ok(NormConfig::ones(step)),
        Some(l) if l.len() != step => bail!("{field}: expected {step} weights, got {}", l.len()),
        Some(l) => Ok(NormConfig::new(l.clone()).context(field.to_string())?),
    }
}

fn matrix(rows: &[Vec<Coeff>]) -> Vec<Vec<QSqrt2>> {
    rows.iter().map(|r| r.iter().map(|c| c.0.clone()).collect()).collect()
}

/// `[[1,0,…],[0,1,…],…]` truncated to `rows × cols`.
fn leading_identity(rows: usize, cols: usize) -> Vec<Vec<QSqrt2>> {
    (0..rows)
        .map(|i| (0..cols).map(|j| if i == j { QSqrt2::one() } else { QSqrt2::zero() }).collect())
        .collect()
}

pub fn build_setup(cfg: &RunConfig) -> Result<Setup> {
    let domain_alg = cfg.domain.build().context("domain")?;
    let domain_group = CarnotGroup::new(domain_alg.clone());
    let mut domain = Metric::new(&domain_group, norm_config(&cfg.lambdas, domain_alg.step(), "lambdas")?)?;
    let triangle = validate_triangle(&mut domain, cfg.limits.triangle_samples, cfg.seeds.triangle)?;

    let codomain_src = cfg.codomain_source(&domain_alg)?;
    let codomain_label = codomain_src.as_ref().map_or_else(|| cfg.domain.label(), |c| c.label());
    let codomain_alg = match &codomain_src {
        Some(c) => c.build().context("codomain")?,
        None => domain_alg.clone(),
    };
    let codomain_group = CarnotGroup::new(codomain_alg.clone());
    let mut codomain = Metric::new(
        &codomain_group,
        norm_config(&cfg.codomain_lambdas, codomain_alg.step(), "codomain_lambdas")?,
    )?;
    let codomain_triangle = validate_triangle(&mut codomain, cfg.limits.triangle_samples, cfg.seeds.triangle)?;

    let map = match &cfg.map {
        MapSpec::Identity => {
            if codomain_alg != domain_alg || codomain.config().lambdas != domain.config().lambdas {
                bail!("map: identity needs the codomain to equal the domain");
            }
            LipschitzMap::identity(&domain)
        }
        MapSpec::Constant => LipschitzMap::constant(&domain, &codomain),
        MapSpec::Fold { axis } => {
            let f = LipschitzMap::fold(&domain, *axis).context("map")?;
            if f.codomain().layer_dims() != codomain_alg.layer_dims() || cfg.codomain_lambdas.is_some() {
                bail!("map: fold maps into the abelian group on the first layer with unit weights");
            }
            f
        }
        MapSpec::Hom { matrix: m } => {
            let h = Homomorphism::from_first_layer(matrix(m), &domain_alg, &codomain_alg).context("map.matrix")?;
            LipschitzMap::hom(&h, &domain, &codomain)?
        }
        MapSpec::Collapse { matrix: m } => {
            let a1 = match m {
                Some(m) => matrix(m),
                None => leading_identity(codomain_alg.layer_dims()[0], domain_alg.layer_dims()[0]),
            };
            let h = Homomorphism::from_first_layer(a1, &domain_alg, &codomain_alg).context("map.matrix")?;
            LipschitzMap::collapse(&h, &domain, &codomain)?
        }
    };
    Ok(Setup {
        domain_label: cfg.domain.label(),
        codomain_label,
        domain_alg,
        codomain_alg,
        domain,
        triangle,
        codomain_triangle,
        map,
    })
}

pub fn build_lattice(cfg: &RunConfig, domain: &Metric) -> Result<GradedLattice> {
    let center = vec![0.0; domain.dim()];
    GradedLattice::build(domain, &center, cfg.r, cfg.h, cfg.limits.budget).context("stage lattice")
}

/// Samples the map on the lattice; fails when the measured Lipschitz
/// constant exceeds the declared one by more than 1%.
pub fn sample_map(cfg: &RunConfig, map: &LipschitzMap, lattice: &GradedLattice) -> Result<MapSample> {
    MapSample::new(map, lattice, cfg.limits.lipschitz_pairs, cfg.seeds.lipschitz).context("stage lipschitz check")
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzSummary {
    pub map: String,
    pub declared: f64,
    pub measured: f64,
    pub passed: bool,
}

impl LipschitzSummary {
    pub fn new(map: &LipschitzMap, s: &MapSample) -> Self {
        LipschitzSummary {
            map: map.name().to_string(),
            declared: s.declared,
            measured: s.measured,
            passed: s.measured <= s.declared * 1.01 + 1e-12,
        }
    }
}
