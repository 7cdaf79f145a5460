//! File emission for runs and sweeps: CSV traces, summaries, channel dumps
//! and a gnuplot script for the sweep figures.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fdcell_core::admm::AdmmIterRecord;
use fdcell_core::alg::{PlanOutput, RunOutput, SpcaIterRecord};
use fdcell_core::scenario::{Duplex, Setup};

pub fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn spca_trace_csv(trace: &[SpcaIterRecord]) -> String {
    let mut out = String::from(SpcaIterRecord::csv_header());
    out.push('\n');
    for r in trace {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn admm_trace_csv(traces: &[Vec<AdmmIterRecord>]) -> String {
    let mut out = String::from("spca_iteration,");
    out.push_str(AdmmIterRecord::csv_header());
    out.push('\n');
    for (r, rounds) in traces.iter().enumerate() {
        for rec in rounds {
            out.push_str(&format!("{r},{}\n", rec.to_csv_row()));
        }
    }
    out
}

pub fn run_summary_csv(run: &RunOutput) -> String {
    let m = &run.metrics;
    let mut out = String::from(
        "objective_bits,residual_backlog_bits,dl_sum_rate,ul_sum_rate,rank_one_gap_bits,spca_iterations,feasible\n",
    );
    out.push_str(&format!(
        "{:e},{:e},{:e},{:e},{:e},{},{}\n",
        m.objective_bits,
        m.residual_backlog_bits,
        m.dl_sum_rate,
        m.ul_sum_rate,
        m.rank_one_gap_bits,
        m.spca_trace.len(),
        m.validation.feasible
    ));
    out
}

pub fn power_breakdown_csv(run: &RunOutput) -> String {
    let mut out = String::from("cell,transmit_w,circuit_w,decode_w,available_w\n");
    for (b, p) in run.metrics.power_breakdown.iter().enumerate() {
        out.push_str(&format!(
            "{b},{:e},{:e},{:e},{:e}\n",
            p.transmit_w, p.circuit_w, p.decode_w, p.available_w
        ));
    }
    out
}

fn setup_name(s: Setup) -> &'static str {
    match s {
        Setup::A => "A",
        Setup::B => "B",
        Setup::C => "C",
    }
}

fn duplex_name(d: Duplex) -> &'static str {
    match d {
        Duplex::Fd => "fd",
        Duplex::Hd => "hd",
    }
}

/// Stable file tag for one plan point.
pub fn point_tag(point: &fdcell_core::alg::PlanPoint) -> String {
    let mut tag = format!("{}_{}", setup_name(point.setup), duplex_name(point.duplex));
    if let Some(e) = point.eh_ratio {
        tag.push_str(&format!("_eh{e}"));
    }
    if let Some(a) = point.alpha {
        tag.push_str(&format!("_a{a}"));
    }
    tag.push_str(&format!("_s{}", point.seed));
    tag.replace('.', "p")
}

/// Aggregate rows restricted to one sweep axis, as a standalone CSV.
pub fn axis_csv(output: &PlanOutput, axis: Axis) -> String {
    let mut out = String::from(match axis {
        Axis::EhRatio => "setup,duplex,eh_ratio,dl_sum_rate_mean,dl_sum_rate_se,ul_sum_rate_mean,ul_sum_rate_se,residual_backlog_mean,residual_backlog_se\n",
        Axis::Alpha => "setup,duplex,alpha,dl_sum_rate_mean,dl_sum_rate_se,ul_sum_rate_mean,ul_sum_rate_se,residual_backlog_mean,residual_backlog_se\n",
    });
    let mut aggregates = output.aggregates();
    aggregates.sort_by(|a, b| {
        let ka = (setup_name(a.setup), duplex_name(a.duplex), a.eh_ratio, a.alpha);
        let kb = (setup_name(b.setup), duplex_name(b.duplex), b.eh_ratio, b.alpha);
        ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
    });
    for a in aggregates {
        let x = match axis {
            Axis::EhRatio => a.eh_ratio,
            Axis::Alpha => a.alpha,
        };
        let Some(x) = x else { continue };
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            setup_name(a.setup),
            duplex_name(a.duplex),
            x,
            a.dl_mean,
            a.dl_se,
            a.ul_mean,
            a.ul_se,
            a.backlog_mean,
            a.backlog_se
        ));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub enum Axis {
    EhRatio,
    Alpha,
}

/// gnuplot script plotting whichever sweep CSVs were produced.
pub fn gnuplot_script(has_eh: bool, has_alpha: bool) -> String {
    let mut out = String::from(
        "# gnuplot script for the sweep outputs in this directory\n\
         set datafile separator ','\n\
         set key outside\n\
         set grid\n",
    );
    if has_eh {
        out.push_str(
            "\nset terminal pngcairo size 900,600\n\
             set output 'eh_sweep.png'\n\
             set xlabel 'normalized EH arrival rate'\n\
             set ylabel 'sum rate (bits/s/Hz)'\n\
             plot 'eh_sweep.csv' using 3:($1 eq 'B' ? $4 : 1/0) with linespoints title 'Setup B DL', \\\n\
                  'eh_sweep.csv' using 3:($1 eq 'B' ? $6 : 1/0) with linespoints title 'Setup B UL', \\\n\
                  'eh_sweep.csv' using 3:($1 eq 'C' ? $4 : 1/0) with linespoints title 'Setup C DL', \\\n\
                  'eh_sweep.csv' using 3:($1 eq 'C' ? $6 : 1/0) with linespoints title 'Setup C UL'\n",
        );
    }
    if has_alpha {
        out.push_str(
            "\nset terminal pngcairo size 900,600\n\
             set output 'alpha_sweep.png'\n\
             set xlabel 'decoding-energy coefficient'\n\
             set logscale x\n\
             set ylabel 'sum rate (bits/s/Hz)'\n\
             plot 'alpha_sweep.csv' using 3:4 with linespoints title 'DL', \\\n\
                  'alpha_sweep.csv' using 3:6 with linespoints title 'UL'\n",
        );
    }
    out.push_str(
        "\n# convergence traces: plot any trace_*.csv, e.g.\n\
         #   plot 'trace_C_fd_s0.csv' using 1:2 with linespoints title 'objective (bits)'\n",
    );
    out
}
