//! Batch experiment runner: every command reads a JSON config, runs the
//! corresponding library routine, and writes `report.json` (plus `trace.csv`
//! where a trace is produced) into the output directory.
//!
//! Exit codes: 0 all checks passed, 1 a mathematical check failed (the
//! report carries the witness), 2 configuration or usage error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use config::*;
use proxgeo::*;

#[derive(Parser)]
#[command(name = "proxgeo", version, about = "experiments on geodesic spaces: axiom sweeps, operator audits, iteration and rate certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the convexity axioms (and optionally a modulus claim) of a space.
    Verify(CommonArgs),
    /// Audit an operator for firm nonexpansiveness on sampled pairs.
    AuditOperator(CommonArgs),
    /// Run a Picard iteration and report displacement analytics.
    Iterate(CommonArgs),
    /// Issue and check asymptotic-regularity rate certificates.
    Rate(CommonArgs),
    /// Run the proximal point algorithm on a convex functional.
    Prox(CommonArgs),
    /// Asymptotic centers and the Delta-convergence diagnostic of an orbit.
    Centers(CommonArgs),
    /// Fixed-point search on a union of convex pieces.
    UnionFixpoint(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the seed recorded in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json / trace.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Verify(a) => ("verify", a),
        Command::AuditOperator(a) => ("audit-operator", a),
        Command::Iterate(a) => ("iterate", a),
        Command::Rate(a) => ("rate", a),
        Command::Prox(a) => ("prox", a),
        Command::Centers(a) => ("centers", a),
        Command::UnionFixpoint(a) => ("union-fixpoint", a),
    };
    match run(name, args) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("proxgeo {name}: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct Outcome {
    pass: bool,
    seed: Option<u64>,
    report: serde_json::Value,
    trace: Option<(Space, IterationTrace, Vec<SpacePoint>)>,
}

fn run(name: &str, args: &CommonArgs) -> Result<bool> {
    let raw = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let outcome = match name {
        "verify" => run_verify(&raw, args.seed)?,
        "audit-operator" => run_audit(&raw, args.seed)?,
        "iterate" => run_iterate(&raw)?,
        "rate" => run_rate(&raw)?,
        "prox" => run_prox(&raw)?,
        "centers" => run_centers(&raw)?,
        "union-fixpoint" => run_union(&raw)?,
        _ => unreachable!(),
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    // the timestamp is the single nondeterministic key of the report
    let envelope = json!({
        "command": name,
        "seed": outcome.seed,
        "pass": outcome.pass,
        "report": outcome.report,
        "timestamp": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    });
    write_pretty(&args.out.join("report.json"), &envelope)?;
    if let Some((space, trace, anchors)) = &outcome.trace {
        let file = fs::File::create(args.out.join("trace.csv")).context("creating trace.csv")?;
        trace
            .write_csv(space, anchors, file)
            .map_err(|e| anyhow::anyhow!("writing trace.csv: {e}"))?;
    }
    println!(
        "proxgeo {name}: {} (report: {})",
        if outcome.pass { "pass" } else { "FAIL" },
        args.out.join("report.json").display()
    );
    Ok(outcome.pass)
}

fn write_pretty(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn lib_err(e: proxgeo::Error) -> anyhow::Error {
    anyhow::anyhow!("{e}")
}

fn run_verify(raw: &str, seed_override: Option<u64>) -> Result<Outcome> {
    let mut cfg: VerifyConfig = serde_json::from_str(raw).context("parsing verify config")?;
    if let Some(seed) = seed_override {
        cfg.sampler.seed = seed;
    }
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    let axioms = verify_space_axioms(&space, &cfg.sampler, cfg.tol, cfg.force_cn).map_err(lib_err)?;
    let modulus = cfg
        .modulus
        .as_ref()
        .map(|m| modulus_audit(&space, m, &cfg.sampler, cfg.tol))
        .transpose()
        .map_err(lib_err)?;
    let pass = axioms.pass && modulus.as_ref().map_or(true, |m| m.pass);
    Ok(Outcome {
        pass,
        seed: Some(cfg.sampler.seed),
        report: json!({ "axioms": axioms, "modulus": modulus }),
        trace: None,
    })
}

fn run_audit(raw: &str, seed_override: Option<u64>) -> Result<Outcome> {
    let mut cfg: AuditOperatorConfig = serde_json::from_str(raw).context("parsing audit config")?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    cfg.operator.validate(&space).map_err(lib_err)?;
    let grid = cfg.lambda_grid.clone().unwrap_or_else(standard_lambda_grid);
    let pairs = sample_operator_pairs(&space, &cfg.operator, cfg.pairs, cfg.seed).map_err(lib_err)?;
    let rep = firm_nonexpansiveness_audit(&space, &cfg.operator, &grid, &pairs, cfg.tol)
        .map_err(lib_err)?;
    Ok(Outcome {
        pass: rep.pass,
        seed: Some(cfg.seed),
        report: serde_json::to_value(&rep)?,
        trace: None,
    })
}

fn run_iterate(raw: &str) -> Result<Outcome> {
    let cfg: IterateConfig = serde_json::from_str(raw).context("parsing iterate config")?;
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    let trace = picard_trace(&space, &cfg.operator, &cfg.x0, cfg.steps).map_err(lib_err)?;
    let analytics = displacement_analytics(&space, &trace, cfg.k_max, cfg.tail).map_err(lib_err)?;
    let fejer = if cfg.anchors.is_empty() {
        None
    } else {
        Some(fejer_audit(&space, &trace, &cfg.anchors).map_err(lib_err)?)
    };
    let pass = analytics.tail_monotone && fejer.as_ref().map_or(true, |f| f.pass);
    Ok(Outcome {
        pass,
        seed: None,
        report: json!({ "analytics": analytics, "fejer": fejer }),
        trace: Some((space, trace, cfg.anchors)),
    })
}

fn run_rate(raw: &str) -> Result<Outcome> {
    let cfg: RateConfig = serde_json::from_str(raw).context("parsing rate config")?;
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    cfg.operator.validate(&space).map_err(lib_err)?;
    let mut items = Vec::new();
    for &kind in &cfg.kinds {
        for &eps in &cfg.epsilons {
            let cert = rate_bound(&space, kind, eps, cfg.lambda, cfg.b, cfg.modulus.as_ref())
                .map_err(lib_err)?;
            items.push((cert, cfg.hypothesis.clone()));
        }
    }
    let reports =
        certify_many_by_iteration(&space, &cfg.operator, &cfg.x0, &items, cfg.checks).map_err(lib_err)?;
    let pass = reports.iter().all(|r| r.verdict == CertVerdict::Pass);
    let trace =
        picard_trace(&space, &cfg.operator, &cfg.x0, cfg.trace_steps).map_err(lib_err)?;
    Ok(Outcome {
        pass,
        seed: None,
        report: json!({ "certificates": reports }),
        trace: Some((space, trace, Vec::new())),
    })
}

fn run_prox(raw: &str) -> Result<Outcome> {
    let cfg: ProxConfig = serde_json::from_str(raw).context("parsing prox config")?;
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    let steps = cfg.step_sizes.to_vec();
    let rep = proximal_point_run(&space, &cfg.functional, &steps, &cfg.x0, cfg.divergence_threshold)
        .map_err(lib_err)?;
    let report = json!({
        "step_sum": rep.step_sum,
        "steps_divergent_past_threshold": rep.steps_divergent_past_threshold,
        "divergence_threshold": rep.divergence_threshold,
        "final_displacement": rep.trace.displacements.last(),
    });
    Ok(Outcome {
        pass: true,
        seed: None,
        report,
        trace: Some((space, rep.trace, Vec::new())),
    })
}

fn run_centers(raw: &str) -> Result<Outcome> {
    let cfg: CentersConfig = serde_json::from_str(raw).context("parsing centers config")?;
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    let set = cfg.set.clone().unwrap_or(ConvexSet::Whole);
    let trace = picard_trace(&space, &cfg.operator, &cfg.x0, cfg.steps).map_err(lib_err)?;
    let rep = delta_convergence_diagnostic(&space, &trace, &cfg.operator, &set, &cfg.windows, cfg.tol)
        .map_err(lib_err)?;
    let pass = rep.verdict == proxgeo::centers::DELTA_CONSISTENT;
    Ok(Outcome {
        pass,
        seed: None,
        report: serde_json::to_value(&rep)?,
        trace: Some((space, trace, Vec::new())),
    })
}

fn run_union(raw: &str) -> Result<Outcome> {
    let cfg: UnionFixpointConfig = serde_json::from_str(raw).context("parsing union config")?;
    let space = Space::from_config(&cfg.space).map_err(lib_err)?;
    let res = union_fixed_point_search(
        &space,
        &cfg.operator,
        &cfg.pieces,
        &cfg.z,
        cfg.window,
        cfg.tol,
        cfg.orbit_cap,
    )
    .map_err(lib_err)?;
    Ok(Outcome {
        pass: true,
        seed: None,
        report: serde_json::to_value(&res)?,
        trace: None,
    })
}
