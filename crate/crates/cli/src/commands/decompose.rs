//! `decompose`: build the lattice and cube tree, split the sample into
//! biLipschitz pieces plus a garbage set, and certify every piece.

use std::path::Path;

use anyhow::{Context, Result};
use carnot_core::cubes::{CubeTree, TreeParams};
use carnot_core::decompose::{certify, decompose, Certification, Decomposition};
use serde::Serialize;

use super::{cube_dump, write_alpha_csv, CubeDump, Outcome, TreeAuditSummary};
use crate::config::RunConfig;
use crate::report::{num, Check, Constants, Header, OutDir};
use crate::setup::{build_lattice, build_setup, sample_map, AlgebraSummary, LipschitzSummary, TriangleSummary};

#[derive(Serialize)]
struct Summary {
    points: usize,
    pieces: usize,
    piece_bound: f64,
    garbage: usize,
    r1: usize,
    r2: usize,
    unresolved: usize,
    #[serde(rename = "T")]
    t: usize,
    l: usize,
    #[serde(rename = "L_mult")]
    l_mult: usize,
    b: f64,
    b_min_ratio: f64,
    b_pairs: usize,
    b_skipped: usize,
    max_word_len: usize,
    doubling: usize,
}

#[derive(Serialize)]
struct RunSummary {
    root: usize,
    b1: usize,
    b2: usize,
    b1_factor: f64,
    alpha_threshold: f64,
    r1: usize,
    r2: usize,
    r2_hat_mass: usize,
    #[serde(rename = "L_mult")]
    l_mult: usize,
    unresolved: usize,
    alphabet: usize,
    conflicts: usize,
    #[serde(rename = "T")]
    t: usize,
    violations: Vec<(usize, usize)>,
}

#[derive(Serialize)]
struct PieceSummary {
    piece: usize,
    root: usize,
    word: Vec<u32>,
    points: usize,
}

#[derive(Serialize)]
struct DecompositionReport<'a> {
    header: &'a Header,
    summary: Summary,
    runs: Vec<RunSummary>,
    pieces: Vec<PieceSummary>,
}

#[derive(Serialize)]
struct PieceCert {
    piece: usize,
    points: usize,
    pairs: u64,
    exhaustive: bool,
    min_ratio: f64,
    failure_count: u64,
    /// `[x, y, d_H(f x, f y) / d(x, y)]`, at most ten.
    failures: Vec<(u32, u32, f64)>,
}

#[derive(Serialize)]
struct CertificationReport<'a> {
    header: &'a Header,
    delta: f64,
    all_pass: bool,
    exhaustive: bool,
    homogeneous_dimension: usize,
    garbage_content: f64,
    r1_content: f64,
    r2_content: f64,
    c: f64,
    pieces: Vec<PieceCert>,
}

#[derive(Serialize)]
struct AuditReport<'a> {
    header: &'a Header,
    passed: bool,
    checks: &'a [Check],
    triangle: TriangleSummary,
    codomain_triangle: TriangleSummary,
    lipschitz: LipschitzSummary,
    algebras: Vec<AlgebraSummary>,
    tree: TreeAuditSummary,
}

#[derive(Serialize)]
struct TreeReport<'a> {
    header: &'a Header,
    audit: TreeAuditSummary,
    cubes: Vec<CubeDump>,
}

/// Garbage class of each point: the first of `R1`, `R2`, unresolved that
/// holds it.
fn classes(dec: &Decomposition, n: usize) -> Vec<&'static str> {
    let mut class = vec!["piece"; n];
    for &x in &dec.garbage {
        class[x as usize] = "garbage";
    }
    for run in dec.runs.iter().rev() {
        for &x in &run.unresolved {
            class[x as usize] = "unresolved";
        }
    }
    for run in dec.runs.iter().rev() {
        for &x in &run.r2.points {
            class[x as usize] = "R2";
        }
    }
    for run in dec.runs.iter().rev() {
        for &x in &run.r1 {
            class[x as usize] = "R1";
        }
    }
    class
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let setup = build_setup(cfg)?;
    let lattice = build_lattice(cfg, &setup.domain)?;
    let values = sample_map(cfg, &setup.map, &lattice)?;
    let n = lattice.len();
    let tree_params = TreeParams::auto(&lattice, cfg.tau);
    let tree = CubeTree::build(lattice, tree_params).context("stage cubes")?;
    let params = cfg.decompose_params();
    params.validate()?;
    let dec = decompose(&setup.map, &values, &tree, &params).context("stage decompose")?;
    let cert = certify(&setup.map, &values, &tree, &dec, &params).context("stage certify")?;

    let constants = Constants {
        c_q: Some(setup.triangle.worst),
        b: Some(dec.b.b),
        t: Some(dec.t),
        l: Some(dec.l),
        c: Some(cert.c),
    };
    let header = Header::new("decompose", cfg, constants);
    let tree_audit = TreeAuditSummary::new(&tree);
    let algebras = setup.algebra_summaries();
    let lipschitz = LipschitzSummary::new(&setup.map, &values);
    let violations: usize = dec.runs.iter().map(|r| r.violations.len()).sum();
    let checks = vec![
        Check::new("algebra", algebras.iter().all(|a| a.passed), "antisymmetry, Jacobi, grading, stratification"),
        Check::new("lipschitz", lipschitz.passed, format!("measured {} ≤ 1.01 × declared {}", num(lipschitz.measured), num(lipschitz.declared))),
        Check::new("tree", tree_audit.passed, "partition, nesting, inner and outer balls"),
        Check::new("partition", dec.check_partition(n), "pieces and Z partition the sample"),
        Check::new("coding", violations == 0, format!("{violations} word-rule violations")),
        Check::new(
            "piece_bound",
            dec.pieces.len() as f64 <= dec.piece_bound(),
            format!("{} pieces, bound (T+1)^(L_mult+1) = {}", dec.pieces.len(), num(dec.piece_bound())),
        ),
        Check::new("certification", cert.all_pass, certification_detail(&cert)),
    ];

    let mut out = OutDir::create(out_dir)?;
    out.json("decomposition.json", &decomposition_report(&header, &dec, n))?;
    out.json("certification.json", &certification_report(&header, &cert, setup.homogeneous_dimension()))?;
    write_assignment(&mut out, &tree, &values, &dec)?;
    write_alpha_csv(&mut out, &tree, &dec.alphas)?;
    out.json(
        "audit.json",
        &AuditReport {
            header: &header,
            passed: crate::report::all_passed(&checks),
            checks: &checks,
            triangle: (&setup.triangle).into(),
            codomain_triangle: (&setup.codomain_triangle).into(),
            lipschitz,
            algebras,
            tree: tree_audit.clone(),
        },
    )?;
    out.json(
        "tree.json",
        &TreeReport {
            header: &header,
            audit: tree_audit,
            cubes: cube_dump(&tree),
        },
    )?;

    let summary = format!(
        "{} points, {} pieces (bound {}), |Z| = {}, b = {}, T = {}, l = {}, L_mult = {}, c = {}",
        n,
        dec.pieces.len(),
        num(dec.piece_bound()),
        dec.garbage.len(),
        num(dec.b.b),
        dec.t,
        dec.l,
        dec.l_mult(),
        num(cert.c)
    );
    Ok(Outcome { checks, summary })
}

fn certification_detail(cert: &Certification) -> String {
    let failing = cert.pieces.iter().filter(|p| p.failure_count > 0).count();
    format!("{} pieces, {} failing, delta = {}", cert.pieces.len(), failing, num(cert.delta))
}

fn decomposition_report<'a>(header: &'a Header, dec: &Decomposition, n: usize) -> DecompositionReport<'a> {
    let count = |f: &dyn Fn(&carnot_core::decompose::RootRun) -> usize| dec.runs.iter().map(f).sum::<usize>();
    DecompositionReport {
        header,
        summary: Summary {
            points: n,
            pieces: dec.pieces.len(),
            piece_bound: dec.piece_bound(),
            garbage: dec.garbage.len(),
            r1: count(&|r| r.r1.len()),
            r2: count(&|r| r.r2.points.len()),
            unresolved: count(&|r| r.unresolved.len()),
            t: dec.t,
            l: dec.l,
            l_mult: dec.l_mult(),
            b: dec.b.b,
            b_min_ratio: dec.b.min_ratio,
            b_pairs: dec.b.pairs,
            b_skipped: dec.b.skipped,
            max_word_len: dec.max_word_len,
            doubling: dec.doubling,
        },
        runs: dec
            .runs
            .iter()
            .map(|r| RunSummary {
                root: r.root,
                b1: r.families.b1.len(),
                b2: r.families.b2.len(),
                b1_factor: r.families.b1_factor,
                alpha_threshold: r.families.alpha_threshold,
                r1: r.r1.len(),
                r2: r.r2.points.len(),
                r2_hat_mass: r.r2.hat_mass,
                l_mult: r.r2.l_mult,
                unresolved: r.unresolved.len(),
                alphabet: r.coding.alphabet,
                conflicts: r.coding.conflicts.len(),
                t: r.t,
                violations: r.violations.clone(),
            })
            .collect(),
        pieces: dec
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| PieceSummary {
                piece: i,
                root: p.root,
                word: p.word.clone(),
                points: p.points.len(),
            })
            .collect(),
    }
}

fn certification_report<'a>(header: &'a Header, cert: &Certification, dimension: usize) -> CertificationReport<'a> {
    CertificationReport {
        header,
        delta: cert.delta,
        all_pass: cert.all_pass,
        exhaustive: cert.pieces.iter().all(|p| p.exhaustive),
        homogeneous_dimension: dimension,
        garbage_content: cert.garbage_content,
        r1_content: cert.r1_content,
        r2_content: cert.r2_content,
        c: cert.c,
        pieces: cert
            .pieces
            .iter()
            .map(|p| PieceCert {
                piece: p.piece,
                points: p.points,
                pairs: p.pairs,
                exhaustive: p.exhaustive,
                min_ratio: p.min_ratio,
                failure_count: p.failure_count,
                failures: p.failures.clone(),
            })
            .collect(),
    }
}

/// One row per lattice point: coordinates, image, piece (empty in `Z`) and
/// class (`piece`, `R1`, `R2`, `unresolved`).
fn write_assignment(out: &mut OutDir, tree: &CubeTree, values: &carnot_core::maps::MapSample, dec: &Decomposition) -> Result<()> {
    let lat = tree.lattice();
    let n = lat.len();
    let class = classes(dec, n);
    let mut header = vec!["index".to_string()];
    header.extend((0..lat.dim()).map(|i| format!("x{i}")));
    header.extend((0..values.cod_dim()).map(|i| format!("f{i}")));
    header.push("piece".into());
    header.push("class".into());
    out.csv("assignment.csv", &header, |w| {
        for x in 0..n {
            let mut row = vec![x.to_string()];
            row.extend(lat.point(x).iter().map(|&v| num(v)));
            row.extend(values.image(x).iter().map(|&v| num(v)));
            row.push(dec.assignment[x].map_or_else(String::new, |p| p.to_string()));
            row.push(class[x].to_string());
            w.write_record(&row)?;
        }
        Ok(())
    })
}
