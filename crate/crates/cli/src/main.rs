//! Command-line runner for the small-cell scheduling pipeline.
//!
//! Subcommands: `run` executes one scenario end to end, `sweep` executes an
//! experiment plan from the config's `[sweep]` section, and `solve-dump`
//! solves a plain-text program dump (a debugging aid for the conic solver).

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fdcell_core::alg::{run_algorithm1, run_plan_point, PlanOutput, RunOutput, SolveMode};
use fdcell_core::channel::draw_channels;
use fdcell_core::phy;
use fdcell_core::solver;
use rayon::prelude::*;

use config::FileConfig;
use output::{admm_trace_csv, axis_csv, gnuplot_script, point_tag, run_summary_csv, spca_trace_csv, write, Axis};

#[derive(Parser)]
#[command(
    name = "fdcell",
    about = "Joint beamformer/power/sub-carrier scheduling for full-duplex energy-harvesting small cells",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its reports.
    Run(RunArgs),
    /// Run the experiment plan from the config's [sweep] section.
    Sweep(SweepArgs),
    /// Solve a plain-text conic-program dump.
    SolveDump(SolveDumpArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the solve mode (centralized | admm).
    #[arg(long)]
    mode: Option<String>,
    /// Override the energy setup (A | B | C).
    #[arg(long)]
    setup: Option<String>,
    /// Override the duplex mode (fd | hd).
    #[arg(long)]
    duplex: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also dump the drawn channel set.
    #[arg(long)]
    dump_channels: bool,
    /// Verify the run-level invariants and exit nonzero on any failure.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration file with a [sweep] section.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent runs (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct SolveDumpArgs {
    /// Program dump file.
    file: PathBuf,
    /// Duality-gap tolerance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::SolveDump(args) => cmd_solve_dump(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut scenario_config = file.scenario_config()?;
    if let Some(seed) = args.seed {
        scenario_config.seed = seed;
    }
    if let Some(setup) = &args.setup {
        scenario_config.setup = config::parse_setup(setup)?;
    }
    if let Some(duplex) = &args.duplex {
        scenario_config.duplex = config::parse_duplex(duplex)?;
    }
    let mut options = file.algorithm_options()?;
    if let Some(mode) = &args.mode {
        options.mode = config::parse_mode(mode)?;
    }

    let scenario = file.build_scenario(scenario_config)?;
    let channels = draw_channels(&scenario.topology, &scenario.config);
    let run = run_algorithm1(&scenario, &channels, &options)
        .map_err(|e| anyhow::anyhow!("run failed: {e}"))?;

    write(&args.out.join("summary.csv"), &run_summary_csv(&run))?;
    write(&args.out.join("rate_report.csv"), &run.report.to_csv())?;
    write(&args.out.join("power_breakdown.csv"), &output::power_breakdown_csv(&run))?;
    write(&args.out.join("spca_trace.csv"), &spca_trace_csv(&run.metrics.spca_trace))?;
    if !run.metrics.admm_traces.is_empty() {
        write(&args.out.join("admm_trace.csv"), &admm_trace_csv(&run.metrics.admm_traces))?;
    }
    if args.dump_channels {
        write(&args.out.join("channels.txt"), &channels.to_text())?;
    }

    let m = &run.metrics;
    println!(
        "objective {:.4} bits | residual backlog {:.4} bits | DL {:.3} UL {:.3} bits/s/Hz | {} SPCA iterations | extraction gap {:.3e} bits",
        m.objective_bits,
        m.residual_backlog_bits,
        m.dl_sum_rate,
        m.ul_sum_rate,
        m.spca_trace.len(),
        m.rank_one_gap_bits
    );
    println!("reports written to {}", args.out.display());

    if args.check {
        let failures = check_run(&run, &scenario, &channels, &options)?;
        if failures.is_empty() {
            println!("check: all run-level invariants hold");
        } else {
            for f in &failures {
                eprintln!("check FAILED: {f}");
            }
            return Ok(ExitCode::FAILURE);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Run-level invariants behind `--check`: constraint feasibility of the
/// extracted solution, rank-one covariances, non-negative extraction gap,
/// monotone SPCA trace, metrics matching a fresh physical recomputation, and
/// (in ADMM mode) consensus residuals below tolerance.
fn check_run(
    run: &RunOutput,
    scenario: &fdcell_core::scenario::Scenario,
    channels: &fdcell_core::channel::ChannelSet,
    options: &fdcell_core::alg::AlgorithmOptions,
) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    if !run.metrics.validation.feasible {
        for entry in run.metrics.validation.entries.iter().filter(|e| !e.ok) {
            failures.push(format!("constraint {} violated by {:e}", entry.label, -entry.slack));
        }
    }
    for (i, per_n) in run.metrics.validation.ranks.iter().enumerate() {
        for (n, &rank) in per_n.iter().enumerate() {
            if rank > 1 {
                failures.push(format!("covariance U[{i},{n}] has rank {rank} after extraction"));
            }
        }
    }
    if run.metrics.rank_one_gap_bits < -1e-6 {
        failures.push(format!(
            "extraction gap {:e} bits is negative beyond tolerance",
            run.metrics.rank_one_gap_bits
        ));
    }
    for w in run.metrics.spca_trace.windows(2) {
        if w[1].objective_bits > w[0].objective_bits + 1e-6 {
            failures.push(format!(
                "SPCA objective rose from {:.6} to {:.6} bits",
                w[0].objective_bits, w[1].objective_bits
            ));
        }
    }
    let report = phy::rate_report(&run.beams, &run.powers, scenario, channels)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    if (report.dl_sum_rate() - run.metrics.dl_sum_rate).abs() > 1e-9
        || (report.ul_sum_rate() - run.metrics.ul_sum_rate).abs() > 1e-9
        || (report.objective_bits() - run.metrics.objective_bits).abs() > 1e-9
    {
        failures.push("reported metrics do not match the physical recomputation".into());
    }
    if options.mode == SolveMode::Admm {
        if let Some(last) = run.metrics.admm_traces.last().and_then(|t| t.last()) {
            if last.primal_residual >= 1e-4 || last.dual_residual >= 1e-4 {
                failures.push(format!(
                    "consensus residuals {:e}/{:e} above 1e-4",
                    last.primal_residual, last.dual_residual
                ));
            }
        }
    }
    Ok(failures)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let file = FileConfig::load(&args.config)?;
    let plan = file.experiment_plan()?;
    let points = plan.points();
    println!("sweep: {} runs", points.len());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .context("building worker pool")?;
    let records: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|point| {
                let record = run_plan_point(point, &plan.options);
                match &record.outcome {
                    Ok(m) => println!(
                        "  done {}: objective {:.4} bits",
                        point_tag(point),
                        m.objective_bits
                    ),
                    Err(e) => eprintln!("  FAILED {}: {e}", point_tag(point)),
                }
                record
            })
            .collect()
    });
    let output = PlanOutput { records };

    write(&args.out.join("summary.csv"), &output.summary_csv())?;
    write(&args.out.join("aggregate.csv"), &output.aggregate_csv())?;
    let has_eh = !plan.eh_ratio_grid.is_empty();
    let has_alpha = !plan.alpha_grid.is_empty();
    if has_eh {
        write(&args.out.join("eh_sweep.csv"), &axis_csv(&output, Axis::EhRatio))?;
    }
    if has_alpha {
        write(&args.out.join("alpha_sweep.csv"), &axis_csv(&output, Axis::Alpha))?;
    }
    for record in &output.records {
        if let Ok(metrics) = &record.outcome {
            let tag = point_tag(&record.point);
            write(
                &args.out.join(format!("trace_{tag}.csv")),
                &spca_trace_csv(&metrics.spca_trace),
            )?;
        }
    }
    write(&args.out.join("plot.gp"), &gnuplot_script(has_eh, has_alpha))?;

    let failures = output.records.iter().filter(|r| r.outcome.is_err()).count();
    println!(
        "sweep finished: {} ok, {failures} failed; outputs in {}",
        output.records.len() - failures,
        args.out.display()
    );
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_solve_dump(args: SolveDumpArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.file)
        .with_context(|| format!("reading {}", args.file.display()))?;
    let program = solver::dump::parse_program(&text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let solution = solver::solve(&program, args.tol).map_err(|e| anyhow::anyhow!("{e}"))?;
    println!(
        "status {:?} | objective {:e} | gap proxy {:e} | {} Newton iterations",
        solution.status, solution.objective, solution.gap_proxy, solution.newton_iters
    );
    println!(
        "kkt: stationarity {:e}, primal {:e}, dual {:e}, complementarity {:e}",
        solution.kkt.stationarity,
        solution.kkt.primal_violation,
        solution.kkt.dual_violation,
        solution.kkt.complementarity
    );
    for (name, value) in program.var_names.iter().zip(solution.y.iter()) {
        println!("  {name} = {value:e}");
    }
    if !solution.kkt.violated.is_empty() {
        println!("violated constraints: {}", solution.kkt.violated.join(", "));
    }
    Ok(ExitCode::SUCCESS)
}
