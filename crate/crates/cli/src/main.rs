use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use carnot::commands::discreteness::DiscretenessInputs;
use carnot::commands::verify_group::{group_source, VerifyInputs};
use carnot::commands::{alpha_stats, decompose, discreteness, net_cover, verify_group, Outcome};
use carnot::config::{load_config, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "carnot", version, about = "Lipschitz maps between Carnot groups: decomposition into biLipschitz pieces and supporting checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the sample into biLipschitz pieces plus garbage and certify them.
    Decompose(RunArgs),
    /// α on every cube and the Carleson sum.
    AlphaStats(RunArgs),
    /// Greedy nets of the image of a ball at the radii in `net_eps`.
    NetCover(RunArgs),
    /// Exact group laws and norm laws for a preset or a group spec file.
    VerifyGroup(VerifyArgs),
    /// Certificate for the step-6 example.
    Discreteness(DiscretenessArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config; defaults apply to every missing field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set seeds.pipeline=3` or
    /// `--set map={"name":"fold"}`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Domain group preset.
    #[arg(long)]
    domain: Option<String>,
    /// Map preset name: identity, constant, fold, hom, collapse.
    #[arg(long)]
    map: Option<String>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = Vec::new();
        if let Some(d) = &self.domain {
            overrides.push(format!("domain={}", serde_json::Value::String(d.clone())));
        }
        if let Some(m) = &self.map {
            overrides.push(format!("map={}", serde_json::json!({ "name": m })));
        }
        for (key, v) in [("R", self.r), ("h", self.h), ("delta", self.delta), ("tau", self.tau)] {
            if let Some(v) = v {
                overrides.push(format!("{key}={v}"));
            }
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seeds.pipeline={s}"));
        }
        overrides.extend(self.set.iter().cloned());
        load_config(self.config.as_deref(), &overrides)
    }

    fn out_dir(&self, cfg: &RunConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.output.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Preset name or path to a group spec JSON file.
    #[arg(long, default_value = "heisenberg")]
    group: String,
    /// Comma-separated layer weights.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 20_000)]
    triangle_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DiscretenessArgs {
    /// `t3,t4,t5,t6` of the algebra.
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<String>>,
    /// `t3,t4,t5,t6` for the rationality obstruction.
    #[arg(long, value_delimiter = ',')]
    obstruction_t: Option<Vec<String>>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    commutator_draws: Option<usize>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    max_q: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn four(v: Vec<String>, what: &str) -> Result<[String; 4]> {
    v.try_into().map_err(|_| anyhow::anyhow!("{what}: expected four comma-separated values"))
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Decompose(a) => {
            let cfg = a.load()?;
            decompose::run(&cfg, &a.out_dir(&cfg))
        }
        Command::AlphaStats(a) => {
            let cfg = a.load()?;
            alpha_stats::run(&cfg, &a.out_dir(&cfg))
        }
        Command::NetCover(a) => {
            let cfg = a.load()?;
            net_cover::run(&cfg, &a.out_dir(&cfg))
        }
        Command::VerifyGroup(a) => {
            let inputs = VerifyInputs {
                group: group_source(&a.group)?,
                lambdas: a.lambdas,
                samples: a.samples,
                triangle_samples: a.triangle_samples,
                seed: a.seed,
            };
            verify_group::run(&inputs, &a.out)
        }
        Command::Discreteness(a) => {
            let mut inputs = DiscretenessInputs::default();
            if let Some(t) = a.t {
                inputs.t = four(t, "t")?;
            }
            if let Some(t) = a.obstruction_t {
                inputs.obstruction_t = four(t, "obstruction_t")?;
            }
            inputs.draws = a.draws.unwrap_or(inputs.draws);
            inputs.commutator_draws = a.commutator_draws.unwrap_or(inputs.commutator_draws);
            inputs.alpha = a.alpha.unwrap_or(inputs.alpha);
            inputs.beta = a.beta.unwrap_or(inputs.beta);
            inputs.eps = a.eps.unwrap_or(inputs.eps);
            inputs.max_q = a.max_q.unwrap_or(inputs.max_q);
            inputs.seed = a.seed.unwrap_or(inputs.seed);
            discreteness::run(&inputs, Path::new(&a.out))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for c in &outcome.checks {
                println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
