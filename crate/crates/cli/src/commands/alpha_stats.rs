//! `alpha-stats`: α on every cube and the Carleson sum over the root.

use std::path::Path;

use anyhow::{Context, Result};
use carnot_core::coarse::{alpha_all, carleson_from};
use carnot_core::cubes::{estimate_b, CubeTree, TreeParams};
use serde::Serialize;

use super::{write_alpha_csv, Outcome, TreeAuditSummary};
use crate::config::RunConfig;
use crate::report::{num, Check, Constants, Header, OutDir};
use crate::setup::{build_lattice, build_setup, sample_map, LipschitzSummary, TriangleSummary};

#[derive(Serialize)]
struct Carleson {
    root: usize,
    /// `Σ_{Q ∈ Δ(S)} α(Q)|Q| / |S|`.
    total: f64,
    per_scale: Vec<(i32, f64)>,
    min_alpha: f64,
}

#[derive(Serialize)]
struct AlphaReport<'a> {
    header: &'a Header,
    passed: bool,
    checks: &'a [Check],
    points: usize,
    carleson: Carleson,
    /// Smallest sampled `∂` over all cubes.
    min_partial: f64,
    lines: usize,
    lines_hit: usize,
    codomain_triangle: TriangleSummary,
    lipschitz: LipschitzSummary,
    tree: TreeAuditSummary,
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let setup = build_setup(cfg)?;
    let lattice = build_lattice(cfg, &setup.domain)?;
    let values = sample_map(cfg, &setup.map, &lattice)?;
    let n = lattice.len();
    let tree_params = TreeParams::auto(&lattice, cfg.tau);
    let tree = CubeTree::build(lattice, tree_params).context("stage cubes")?;
    let params = cfg.alpha_params();
    params.validate()?;
    let root = tree.root();
    let alphas = alpha_all(&setup.map, &tree, root, &params, cfg.seeds.pipeline).context("stage alpha")?;
    let report = carleson_from(&tree, root, &alphas);
    let b = estimate_b(&tree, cfg.limits.b_pairs, cfg.seeds.pipeline);

    let min_partial = alphas.iter().filter(|a| a.lines_hit > 0).map(|a| a.min_partial).fold(f64::INFINITY, f64::min);
    let codomain_triangle = TriangleSummary::from(&setup.codomain_triangle);
    // α averages ∂, so it inherits the same roundoff allowance
    let summands_ok = alphas.iter().all(|a| a.alpha.is_finite() && a.alpha >= -1e-9);
    let tree_audit = TreeAuditSummary::new(&tree);
    let mut checks = vec![
        Check::new("tree", tree_audit.passed, "partition, nesting, inner and outer balls"),
        Check::new("summands", summands_ok, format!("min α = {}", num(report.min_alpha))),
        Check::new("carleson_finite", report.total.is_finite(), format!("total = {}", num(report.total))),
    ];
    if codomain_triangle.is_metric {
        checks.push(Check::new(
            "partial_nonnegative",
            !(min_partial < -1e-9),
            format!("min ∂ = {}", num(min_partial)),
        ));
    }

    let header = Header::new(
        "alpha-stats",
        cfg,
        Constants {
            c_q: Some(setup.triangle.worst),
            b: Some(b.b),
            ..Constants::default()
        },
    );
    let mut out = OutDir::create(out_dir)?;
    write_alpha_csv(&mut out, &tree, &alphas)?;
    out.json(
        "alpha_stats.json",
        &AlphaReport {
            header: &header,
            passed: crate::report::all_passed(&checks),
            checks: &checks,
            points: n,
            carleson: Carleson {
                root,
                total: report.total,
                per_scale: report.per_scale.clone(),
                min_alpha: report.min_alpha,
            },
            min_partial,
            lines: alphas.iter().map(|a| a.lines).sum(),
            lines_hit: alphas.iter().map(|a| a.lines_hit).sum(),
            codomain_triangle,
            lipschitz: LipschitzSummary::new(&setup.map, &values),
            tree: tree_audit,
        },
    )?;
    let summary = format!(
        "{} points, {} cubes, Carleson sum {}, min α {}, min ∂ {}",
        n,
        tree.cubes().len(),
        num(report.total),
        num(report.min_alpha),
        num(min_partial)
    );
    Ok(Outcome { checks, summary })
}
