//! `verify-group`: exact group laws on random rational points and the norm
//! laws of `N_∞`.

use std::path::Path;

use anyhow::{Context, Result};
use carnot_core::algebra::StratifiedAlgebra;
use carnot_core::group::{CarnotGroup, GroupPoint};
use carnot_core::hom::Homomorphism;
use carnot_core::norm::{validate_triangle, Metric, NormConfig};
use carnot_core::presets::parse_preset;
use carnot_core::scalar::QSqrt2;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Outcome;
use crate::config::{GroupSource, GroupSpec};
use crate::report::{num, Check, Constants, Header, OutDir};
use crate::setup::{AlgebraSummary, TriangleSummary};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyInputs {
    pub group: GroupSource,
    pub lambdas: Option<Vec<f64>>,
    pub samples: usize,
    pub triangle_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupVerification {
    pub algebra: AlgebraSummary,
    pub samples: usize,
    pub associativity_failures: usize,
    pub inverse_failures: usize,
    /// Failures of `φ(xy) = φ(x)φ(y)` for dilations, inner automorphisms
    /// and (when it extends) a random first-layer map.
    pub homomorphism_failures: usize,
    pub homomorphisms_tested: usize,
    /// Largest `|N(δ_λ x) - λ N(x)| / (λ N(x))`.
    pub homogeneity_error: f64,
    /// Largest `|d(zx, zy) - d(x, y)|` with the group products taken exactly.
    pub left_invariance_error: f64,
    /// The same with the products taken in floating point.
    pub left_invariance_error_float: f64,
    /// Points with `N(g) ≠ N(g⁻¹)` as floats.
    pub symmetry_failures: usize,
    pub triangle: TriangleSummary,
    pub checks: Vec<Check>,
}

/// Reads a preset name, or a group spec from a JSON file when `arg` names
/// an existing file.
pub fn group_source(arg: &str) -> Result<GroupSource> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let spec: GroupSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let p = e.path().to_string();
            anyhow::anyhow!("{arg}: {p}: {}", e.into_inner())
        })?;
        Ok(GroupSource::Spec(spec))
    } else {
        parse_preset(arg)?;
        Ok(GroupSource::Preset(arg.to_string()))
    }
}

fn draw_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.random_range(-12i64..=12)), BigInt::from(rng.random_range(1i64..=6)))
}

fn draw_point(rng: &mut ChaCha8Rng, dim: usize) -> GroupPoint<QSqrt2> {
    GroupPoint::new((0..dim).map(|_| QSqrt2::rational(draw_rational(rng))).collect())
}

pub fn verify(alg: &StratifiedAlgebra<QSqrt2>, label: &str, lambdas: Option<Vec<f64>>, samples: usize, triangle_samples: usize, seed: u64) -> Result<GroupVerification> {
    let group = CarnotGroup::new(alg.clone());
    let cfg = match lambdas {
        Some(l) => NormConfig::new(l)?,
        None => NormConfig::ones(alg.step()),
    };
    let mut metric = Metric::new(&group, cfg)?;
    let triangle = validate_triangle(&mut metric, triangle_samples.max(1), seed ^ 0x7417)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = group.dim();
    let e = group.identity();
    let m1 = alg.layer_dims()[0];
    let first_layer: Vec<Vec<QSqrt2>> = (0..m1).map(|_| (0..m1).map(|_| QSqrt2::rational(draw_rational(&mut rng))).collect()).collect();
    let extra = Homomorphism::from_first_layer(first_layer, alg, alg).ok();

    let mut out = GroupVerification {
        algebra: AlgebraSummary::new(label.to_string(), alg),
        samples,
        associativity_failures: 0,
        inverse_failures: 0,
        homomorphism_failures: 0,
        homomorphisms_tested: 2 + usize::from(extra.is_some()),
        homogeneity_error: 0.0,
        left_invariance_error: 0.0,
        left_invariance_error_float: 0.0,
        symmetry_failures: 0,
        triangle: (&triangle).into(),
        checks: Vec::new(),
    };
    for _ in 0..samples {
        let (x, y, z) = (draw_point(&mut rng, dim), draw_point(&mut rng, dim), draw_point(&mut rng, dim));
        let xy = group.multiply(&x, &y)?;
        if group.multiply(&xy, &z)? != group.multiply(&x, &group.multiply(&y, &z)?)? {
            out.associativity_failures += 1;
        }
        let xi = group.invert(&x);
        if group.multiply(&x, &xi)? != e || group.multiply(&xi, &x)? != e {
            out.inverse_failures += 1;
        }

        let lambda = QSqrt2::rational(BigRational::new(BigInt::from(rng.random_range(1i64..=12)), BigInt::from(rng.random_range(1i64..=6))));
        let dil = |g: &GroupPoint<QSqrt2>| group.dilate(&lambda, g);
        let conj = |g: &GroupPoint<QSqrt2>| -> carnot_core::Result<GroupPoint<QSqrt2>> {
            group.multiply(&group.multiply(&z, g)?, &group.invert(&z))
        };
        if dil(&xy)? != group.multiply(&dil(&x)?, &dil(&y)?)? {
            out.homomorphism_failures += 1;
        }
        if conj(&xy)? != group.multiply(&conj(&x)?, &conj(&y)?)? {
            out.homomorphism_failures += 1;
        }
        if let Some(h) = &extra {
            let ap = |g: &GroupPoint<QSqrt2>| GroupPoint::new(h.apply(&g.coords));
            if ap(&xy) != group.multiply(&ap(&x), &ap(&y))? {
                out.homomorphism_failures += 1;
            }
        }

        let xf = x.to_f64();
        let nx = metric.norm(&xf);
        let l = 0.01 + 50.0 * rng.random_range(0.0..1.0);
        if nx > 0.0 {
            let err = (metric.norm(&metric.dilate(l, &xf)) - l * nx).abs() / (l * nx);
            out.homogeneity_error = out.homogeneity_error.max(err);
        }
        if metric.norm(&metric.inverse(&xf)) != nx {
            out.symmetry_failures += 1;
        }
        let d0 = metric.norm(&group.multiply(&xi, &y)?.to_f64());
        let zx = group.multiply(&z, &x)?;
        let zy = group.multiply(&z, &y)?;
        let d1 = metric.norm(&group.multiply(&group.invert(&zx), &zy)?.to_f64());
        out.left_invariance_error = out.left_invariance_error.max((d1 - d0).abs());
        let (zf, yf) = (z.to_f64(), y.to_f64());
        let d2 = metric.dist(&metric.mul(&zf, &xf), &metric.mul(&zf, &yf));
        out.left_invariance_error_float = out.left_invariance_error_float.max((d2 - d0).abs());
    }
    out.checks = vec![
        Check::new("algebra", out.algebra.passed, "antisymmetry, Jacobi, grading, stratification"),
        Check::new("associativity", out.associativity_failures == 0, format!("{} failures", out.associativity_failures)),
        Check::new("inverse", out.inverse_failures == 0, format!("{} failures", out.inverse_failures)),
        Check::new("homomorphism", out.homomorphism_failures == 0, format!("{} failures over {} maps", out.homomorphism_failures, out.homomorphisms_tested)),
        Check::new("homogeneity", out.homogeneity_error <= 1e-12, format!("max relative error {}", num(out.homogeneity_error))),
        Check::new("left_invariance", out.left_invariance_error <= 1e-12, format!("max error {}", num(out.left_invariance_error))),
        Check::new("symmetry", out.symmetry_failures == 0, format!("{} failures", out.symmetry_failures)),
    ];
    Ok(out)
}

#[derive(Serialize)]
struct GroupReport<'a> {
    header: &'a Header,
    passed: bool,
    #[serde(flatten)]
    result: &'a GroupVerification,
}

pub fn run(inputs: &VerifyInputs, out_dir: &Path) -> Result<Outcome> {
    let alg = inputs.group.build()?;
    let res = verify(&alg, &inputs.group.label(), inputs.lambdas.clone(), inputs.samples, inputs.triangle_samples, inputs.seed)?;
    let header = Header::from_inputs(
        "verify-group",
        inputs,
        Constants {
            c_q: Some(res.triangle.worst),
            ..Constants::default()
        },
    );
    let mut out = OutDir::create(out_dir)?;
    out.json(
        "group.json",
        &GroupReport {
            header: &header,
            passed: crate::report::all_passed(&res.checks),
            result: &res,
        },
    )?;
    let summary = format!(
        "{}: {} samples, C_Q = {}, homogeneity error {}, float left-invariance error {}",
        inputs.group.label(),
        inputs.samples,
        num(res.triangle.worst),
        num(res.homogeneity_error),
        num(res.left_invariance_error_float)
    );
    Ok(Outcome {
        checks: res.checks,
        summary,
    })
}
