//! `discreteness`: certificate for the step-6 example. Completes the bracket
//! table from the Jacobi identity, checks the commutator leading terms,
//! samples the Möbius rationality obstruction and runs the density probe.

use std::path::Path;

use anyhow::Result;
use carnot_core::discrete::{build_example_algebra, commutator_leading_term, density_probe, obstruction_check, parse_qsqrt2, DensityOutcome, ExampleParams};
use carnot_core::group::CarnotGroup;
use carnot_core::scalar::{QSqrt2, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Outcome;
use crate::report::{Check, Constants, Header, OutDir};
use crate::setup::AlgebraSummary;

#[derive(Debug, Clone, Serialize)]
pub struct DiscretenessInputs {
    /// `t_3, t_4, t_5, t_6` of the algebra, as strings in `Q(√2)`.
    pub t: [String; 4],
    /// Parameters of the rationality obstruction.
    pub obstruction_t: [String; 4],
    pub commutator_draws: usize,
    pub draws: usize,
    /// Density probe: `|p α + q β| < eps`.
    pub alpha: String,
    pub beta: String,
    pub eps: String,
    pub max_q: u64,
    pub seed: u64,
}

impl Default for DiscretenessInputs {
    fn default() -> Self {
        let s = || "sqrt2".to_string();
        DiscretenessInputs {
            t: [s(), s(), s(), s()],
            obstruction_t: ["1/2".into(), "1/3".into(), "2".into(), s()],
            commutator_draws: 50,
            draws: 1000,
            alpha: "1".into(),
            beta: "sqrt2".into(),
            eps: "1/100".into(),
            max_q: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub a: String,
    pub b: String,
    /// Nonzero coefficients as `(basis element, value)`.
    pub value: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletionSummary {
    pub consistent: bool,
    pub reason: Option<String>,
    pub free_parameters: usize,
    pub solved: Vec<Bracket>,
    pub table: Vec<Bracket>,
    pub audit: Option<AlgebraSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorSummary {
    pub i: usize,
    pub draws: usize,
    pub failures: usize,
    /// First failing draw as `(a, b, s)`.
    pub first_failure: Option<(String, String, String)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionSummary {
    pub t: [String; 4],
    pub draws: usize,
    pub fail_at_t6: usize,
    pub some_fail: usize,
    pub poles: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensitySummary {
    pub alpha: String,
    pub beta: String,
    pub eps: String,
    pub found: bool,
    pub p: Option<String>,
    pub q: Option<String>,
    pub value: Option<String>,
    pub value_f64: Option<f64>,
    pub gap: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub completion: CompletionSummary,
    pub commutators: Vec<CommutatorSummary>,
    pub obstruction: ObstructionSummary,
    pub density: DensitySummary,
    pub checks: Vec<Check>,
}

fn parse4(ts: &[String; 4], what: &str) -> Result<ExampleParams> {
    let mut out = Vec::with_capacity(4);
    for (i, s) in ts.iter().enumerate() {
        out.push(parse_qsqrt2(s).map_err(|e| anyhow::anyhow!("{what}[{i}]: {e}"))?);
    }
    Ok(ExampleParams {
        t: out.try_into().expect("four entries"),
    })
}

/// `X`, `Y`, `Z_2`, …, `Z_6`.
fn basis_name(i: usize) -> String {
    match i {
        0 => "X".into(),
        1 => "Y".into(),
        _ => format!("Z_{i}"),
    }
}

fn brackets(list: &[carnot_core::algebra::BracketSpec<QSqrt2>]) -> Vec<Bracket> {
    list.iter()
        .map(|b| Bracket {
            a: basis_name(b.a),
            b: basis_name(b.b),
            value: b
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| (basis_name(k), c.to_string()))
                .collect(),
        })
        .collect()
}

fn small_rational(rng: &mut ChaCha8Rng) -> QSqrt2 {
    QSqrt2::rational(BigRational::new(BigInt::from(rng.random_range(-9i64..=9)), BigInt::from(rng.random_range(1i64..=9))))
}

pub fn certificate(inputs: &DiscretenessInputs) -> Result<Certificate> {
    let params = parse4(&inputs.t, "t")?;
    let mut checks = Vec::new();
    let mut commutators = Vec::new();
    let completion = match build_example_algebra(&params) {
        Ok(c) => {
            let audit = AlgebraSummary::new("example6".into(), &c.algebra);
            checks.push(Check::new("jacobi", audit.passed, format!("{} Jacobi failures", audit.jacobi_failures.len())));
            let group = CarnotGroup::new(c.algebra.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed);
            for i in 2..=6 {
                let mut s = CommutatorSummary {
                    i,
                    draws: inputs.commutator_draws,
                    failures: 0,
                    first_failure: None,
                };
                for _ in 0..inputs.commutator_draws {
                    let (a, b, sv) = (small_rational(&mut rng), small_rational(&mut rng), small_rational(&mut rng));
                    if !commutator_leading_term(&group, &params, &a, &b, i, &sv)?.holds() {
                        s.failures += 1;
                        s.first_failure.get_or_insert((a.to_string(), b.to_string(), sv.to_string()));
                    }
                }
                checks.push(Check::new(&format!("commutator i={i}"), s.failures == 0, format!("{} of {} draws fail", s.failures, s.draws)));
                commutators.push(s);
            }
            CompletionSummary {
                consistent: true,
                reason: None,
                free_parameters: c.free,
                solved: brackets(&c.solved),
                table: brackets(&c.algebra.bracket_list()),
                audit: Some(audit),
            }
        }
        Err(e) => {
            checks.push(Check::new("jacobi", false, e.to_string()));
            CompletionSummary {
                consistent: false,
                reason: Some(e.to_string()),
                free_parameters: 0,
                solved: Vec::new(),
                table: Vec::new(),
                audit: None,
            }
        }
    };

    let op = parse4(&inputs.obstruction_t, "obstruction_t")?;
    let rep = obstruction_check(&op, inputs.draws, inputs.seed ^ 0x0b57);
    let t6_irrational = !op.t(6).is_rational();
    if t6_irrational {
        checks.push(Check::new(
            "obstruction",
            rep.fail_at_t6 == rep.draws,
            format!("condition at t6 fails in {} of {} draws", rep.fail_at_t6, rep.draws),
        ));
    }
    let obstruction = ObstructionSummary {
        t: inputs.obstruction_t.clone(),
        draws: rep.draws,
        fail_at_t6: rep.fail_at_t6,
        some_fail: rep.some_fail,
        poles: rep.poles,
    };

    let alpha = parse_qsqrt2(&inputs.alpha).map_err(|e| anyhow::anyhow!("alpha: {e}"))?;
    let beta = parse_qsqrt2(&inputs.beta).map_err(|e| anyhow::anyhow!("beta: {e}"))?;
    let eps = parse_qsqrt2(&inputs.eps).map_err(|e| anyhow::anyhow!("eps: {e}"))?;
    if !eps.is_rational() {
        anyhow::bail!("eps: must be rational");
    }
    let mut density = DensitySummary {
        alpha: inputs.alpha.clone(),
        beta: inputs.beta.clone(),
        eps: inputs.eps.clone(),
        found: false,
        p: None,
        q: None,
        value: None,
        value_f64: None,
        gap: None,
    };
    match density_probe(&alpha, &beta, &eps.a)? {
        DensityOutcome::Found { p, q, value } => {
            let ok = q.magnitude() <= &inputs.max_q.into();
            checks.push(Check::new("density", ok, format!("|{p}·α + {q}·β| = {} < {}", Scalar::to_f64(&value.abs()), inputs.eps)));
            density.found = true;
            density.value_f64 = Some(Scalar::to_f64(&value));
            density.p = Some(p.to_string());
            density.q = Some(q.to_string());
            density.value = Some(value.to_string());
        }
        DensityOutcome::Discrete { gap } => {
            checks.push(Check::new("density", false, format!("subgroup is discrete with gap {gap}")));
            density.gap = Some(gap.to_string());
        }
    }
    Ok(Certificate {
        completion,
        commutators,
        obstruction,
        density,
        checks,
    })
}

#[derive(Serialize)]
struct Report<'a> {
    header: &'a Header,
    passed: bool,
    #[serde(flatten)]
    certificate: &'a Certificate,
}

pub fn run(inputs: &DiscretenessInputs, out_dir: &Path) -> Result<Outcome> {
    let cert = certificate(inputs)?;
    let header = Header::from_inputs("discreteness", inputs, Constants::default());
    let mut out = OutDir::create(out_dir)?;
    out.json(
        "discreteness.json",
        &Report {
            header: &header,
            passed: crate::report::all_passed(&cert.checks),
            certificate: &cert,
        },
    )?;
    let summary = format!(
        "completion {}, obstruction at t6 fails in {}/{} draws, density {}",
        if cert.completion.consistent { "consistent" } else { "inconsistent" },
        cert.obstruction.fail_at_t6,
        cert.obstruction.draws,
        match (&cert.density.p, &cert.density.q) {
            (Some(p), Some(q)) => format!("(p, q) = ({p}, {q})"),
            _ => "not found".into(),
        }
    );
    Ok(Outcome {
        checks: cert.checks,
        summary,
    })
}
