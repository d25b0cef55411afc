//! `net-cover`: greedy `εR`-nets of `f(B(0, R))` and the growth of their
//! size as `ε` shrinks.

use std::path::Path;

use anyhow::Result;
use carnot_core::content::{epsilon_net_cover, loglog_slope};
use carnot_core::maps::MapKind;
use serde::Serialize;

use super::Outcome;
use crate::config::RunConfig;
use crate::report::{num, Check, Constants, Header, OutDir};
use crate::setup::{build_lattice, build_setup, sample_map, LipschitzSummary};

#[derive(Serialize)]
struct Witness {
    layer: usize,
    v: Vec<f64>,
    value: f64,
}

#[derive(Serialize)]
struct CoverSummary {
    eps: f64,
    radius: f64,
    count: usize,
    images: usize,
    covers_all: bool,
    min_separation: Option<f64>,
    separated: bool,
    /// A unit vector of some layer shrunk below `ε`, when the map is a
    /// homomorphism and one exists.
    collapse_witness: Option<Witness>,
    net: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CoverReport<'a> {
    header: &'a Header,
    passed: bool,
    checks: &'a [Check],
    homogeneous_dimension: usize,
    slope: Option<f64>,
    slope_bound: f64,
    lipschitz: LipschitzSummary,
    covers: Vec<CoverSummary>,
}

pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let setup = build_setup(cfg)?;
    let lattice = build_lattice(cfg, &setup.domain)?;
    let values = sample_map(cfg, &setup.map, &lattice)?;
    let dim = setup.homogeneous_dimension();
    let bound = dim as f64 - 1.0 + 0.3;
    let cd = setup.map.codomain().dim();

    let mut covers = Vec::new();
    let mut checks = Vec::new();
    for &eps in &cfg.net_eps {
        let cover = epsilon_net_cover(&setup.map, &lattice, eps)?;
        let witness = match setup.map.kind() {
            MapKind::Hom(h) => h
                .collapse_witness(eps, setup.map.domain().config(), setup.map.codomain().config())
                .map(|w| Witness {
                    layer: w.layer,
                    v: w.v,
                    value: w.value,
                }),
            _ => None,
        };
        let separated = cover.count < 2 || cover.min_separation >= cover.radius;
        checks.push(Check::new(&format!("cover eps={}", num(eps)), cover.covers_all, format!("{} centers", cover.count)));
        checks.push(Check::new(
            &format!("separation eps={}", num(eps)),
            separated,
            format!("min separation {}", num(cover.min_separation)),
        ));
        covers.push(CoverSummary {
            eps,
            radius: cover.radius,
            count: cover.count,
            images: cover.images,
            covers_all: cover.covers_all,
            min_separation: cover.min_separation.is_finite().then_some(cover.min_separation),
            separated,
            collapse_witness: witness,
            net: cover.net.chunks_exact(cd.max(1)).map(|c| c.to_vec()).collect(),
        });
    }
    let slope = (covers.len() >= 2).then(|| loglog_slope(&covers.iter().map(|c| (c.eps, c.count)).collect::<Vec<_>>()));
    // the growth bound is claimed only for maps that collapse at every ε
    if let Some(s) = slope {
        if covers.iter().all(|c| c.collapse_witness.is_some()) {
            checks.push(Check::new("slope", s <= bound, format!("slope {} against N - 1 + 0.3 = {}", num(s), num(bound))));
        }
    }

    let header = Header::new(
        "net-cover",
        cfg,
        Constants {
            c_q: Some(setup.triangle.worst),
            ..Constants::default()
        },
    );
    let mut out = OutDir::create(out_dir)?;
    let counts: Vec<String> = covers.iter().map(|c| format!("N({})={}", num(c.eps), c.count)).collect();
    out.json(
        "cover.json",
        &CoverReport {
            header: &header,
            passed: crate::report::all_passed(&checks),
            checks: &checks,
            homogeneous_dimension: dim,
            slope,
            slope_bound: bound,
            lipschitz: LipschitzSummary::new(&setup.map, &values),
            covers,
        },
    )?;
    let summary = format!(
        "{}; slope {} (bound {})",
        counts.join(", "),
        slope.map_or_else(|| "n/a".to_string(), num),
        num(bound)
    );
    Ok(Outcome { checks, summary })
}
