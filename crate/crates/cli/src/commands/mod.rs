pub mod alpha_stats;
pub mod decompose;
pub mod discreteness;
pub mod net_cover;
pub mod verify_group;

use carnot_core::coarse::CubeAlpha;
use carnot_core::cubes::{CubeTree, TreeAudit};
use serde::Serialize;

use crate::report::{num, Check, OutDir};

/// What a command reports back to `main`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        crate::report::all_passed(&self.checks)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeAuditSummary {
    pub cubes: usize,
    pub levels: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub tau: f64,
    pub partition_failures: usize,
    pub nesting_failures: usize,
    pub inner_ball_failures: usize,
    pub outer_ball_failures: usize,
    pub reservation_conflicts: usize,
    pub passed: bool,
}

impl TreeAuditSummary {
    pub fn new(tree: &CubeTree) -> Self {
        let TreeAudit {
            partition_failures,
            nesting_failures,
            inner_ball_failures,
            outer_ball_failures,
            reservation_conflicts,
            cubes,
        } = tree.audit().clone();
        let p = tree.params();
        TreeAuditSummary {
            cubes,
            levels: tree.levels(),
            k_min: p.k_min,
            k_max: p.k_max,
            tau: p.tau,
            partition_failures,
            nesting_failures,
            inner_ball_failures,
            outer_ball_failures,
            reservation_conflicts,
            passed: tree.audit().passed(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeDump {
    pub id: usize,
    pub scale: i32,
    pub center: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub size: usize,
}

pub fn cube_dump(tree: &CubeTree) -> Vec<CubeDump> {
    tree.cubes()
        .iter()
        .map(|c| CubeDump {
            id: c.id,
            scale: c.scale,
            center: c.center,
            parent: c.parent,
            children: c.children.clone(),
            size: c.points.len(),
        })
        .collect()
}

/// One row per cube: id, scale, size, center coordinates, α and its
/// sampling statistics.
pub fn write_alpha_csv(out: &mut OutDir, tree: &CubeTree, alphas: &[CubeAlpha]) -> anyhow::Result<()> {
    let lat = tree.lattice();
    let mut header: Vec<String> = ["cube", "scale", "size"].iter().map(|s| s.to_string()).collect();
    header.extend((0..lat.dim()).map(|i| format!("z{i}")));
    header.extend(["alpha", "measure", "lines", "lines_hit", "min_partial"].iter().map(|s| s.to_string()));
    out.csv("alpha.csv", &header, |w| {
        for a in alphas {
            let c = &tree.cubes()[a.cube];
            let mut row = vec![a.cube.to_string(), a.scale.to_string(), c.points.len().to_string()];
            row.extend(lat.point(c.center).iter().map(|&v| num(v)));
            row.push(num(a.alpha));
            row.push(num(a.measure));
            row.push(a.lines.to_string());
            row.push(a.lines_hit.to_string());
            row.push(if a.lines_hit > 0 { num(a.min_partial) } else { String::new() });
            w.write_record(&row)?;
        }
        Ok(())
    })
}
