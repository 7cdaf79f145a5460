//! End-to-end scheduling runs: the outer SPCA loop with a centralized or
//! consensus (ADMM) inner solve, Gaussian-randomization rank-one extraction,
//! and the experiment sweeps that drive the trend studies.
//!
//! Every reported metric is recomputed by the `phy` module from the final
//! beamformers and powers; nothing is read out of solver internals.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::admm::{self, AdmmError, AdmmIterRecord, AdmmState, PenaltyParams};
use crate::channel::{draw_channels, ChannelSet};
use crate::linalg::{complex_normal, CMat};
use crate::phy::{self, BeamformerSet, FeasibilityReport, PhyError, PowerSet, RateReport};
use crate::scenario::{Duplex, Scenario, ScenarioConfig, Setup};
use crate::solver::{self, SolveStatus};
use crate::surrogate::{
    build_surrogate, initial_iterate, update_xi, Scope, SpcaIterate, SurrogateError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Centralized,
    Admm,
}

#[derive(Debug, Clone)]
pub struct AlgorithmOptions {
    pub mode: SolveMode,
    /// Outer SPCA iteration cap (I_max1).
    pub max_spca_iters: usize,
    /// Inner consensus iteration cap (I_max2).
    pub max_admm_iters: usize,
    /// Queue-convergence threshold: relative objective change per SPCA step.
    pub spca_rel_tol: f64,
    /// Gaussian randomization trials for rank-one extraction.
    pub rank_one_trials: usize,
    pub rho: PenaltyParams,
    pub solver_tol: f64,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        Self {
            mode: SolveMode::Centralized,
            max_spca_iters: 50,
            max_admm_iters: 300,
            spca_rel_tol: 1e-4,
            rank_one_trials: 200,
            rho: PenaltyParams { adaptive: true, ..PenaltyParams::default() },
            solver_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AlgError {
    Surrogate(SurrogateError),
    Admm(AdmmError),
    Phy(PhyError),
    Solver(String),
    CentralSolveFailed { iter: usize, status: SolveStatus },
    ZeroTrials,
    /// No randomization candidate admitted a feasible rescaling.
    ExtractionInfeasible,
    EmptyAxis(&'static str),
    DuplicateSeeds,
}

impl core::fmt::Display for AlgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            AlgError::Surrogate(e) => write!(f, "{e}"),
            AlgError::Admm(e) => write!(f, "{e}"),
            AlgError::Phy(e) => write!(f, "{e}"),
            AlgError::Solver(msg) => write!(f, "solver: {msg}"),
            AlgError::CentralSolveFailed { iter, status } => {
                write!(f, "centralized solve failed at SPCA iteration {iter}: {status:?}")
            }
            AlgError::ZeroTrials => write!(f, "rank-one extraction needs at least one trial"),
            AlgError::ExtractionInfeasible => {
                write!(f, "no randomization candidate could be rescaled into feasibility")
            }
            AlgError::EmptyAxis(axis) => write!(f, "experiment plan axis '{axis}' is empty"),
            AlgError::DuplicateSeeds => write!(f, "experiment plan seeds must be distinct"),
        }
    }
}

impl core::error::Error for AlgError {}

impl From<SurrogateError> for AlgError {
    fn from(e: SurrogateError) -> Self {
        AlgError::Surrogate(e)
    }
}

impl From<AdmmError> for AlgError {
    fn from(e: AdmmError) -> Self {
        AlgError::Admm(e)
    }
}

impl From<PhyError> for AlgError {
    fn from(e: PhyError) -> Self {
        AlgError::Phy(e)
    }
}

/// One row of the outer-loop trace.
#[derive(Debug, Clone)]
pub struct SpcaIterRecord {
    pub iter: usize,
    /// Surrogate objective at the new iterate, bits.
    pub objective_bits: f64,
    pub rel_change: f64,
}

impl SpcaIterRecord {
    pub fn csv_header() -> &'static str {
        "iteration,objective_bits,rel_change"
    }

    pub fn to_csv_row(&self) -> String {
        format!("{},{:e},{:e}", self.iter, self.objective_bits, self.rel_change)
    }
}

#[derive(Debug, Clone)]
pub struct PowerBreakdown {
    pub transmit_w: f64,
    pub circuit_w: f64,
    pub decode_w: f64,
    pub available_w: f64,
}

/// Everything measured on one run. Rates and backlogs come from a fresh
/// physical-layer evaluation of the extracted solution.
#[derive(Debug, Clone)]
pub struct MetricsLog {
    pub objective_bits: f64,
    pub residual_backlog_bits: f64,
    pub q_dev_dl: Vec<f64>,
    pub q_dev_ul: Vec<f64>,
    pub dl_sum_rate: f64,
    pub ul_sum_rate: f64,
    pub power_breakdown: Vec<PowerBreakdown>,
    pub spca_trace: Vec<SpcaIterRecord>,
    pub admm_traces: Vec<Vec<AdmmIterRecord>>,
    /// Objective increase incurred by rank-one extraction, bits.
    pub rank_one_gap_bits: f64,
    pub validation: FeasibilityReport,
}

/// Final solution of one run: rank-one covariances, the extracted vectors,
/// uplink powers, and the metrics log.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub beams: BeamformerSet,
    pub beam_vectors: Vec<Vec<Vec<Complex64>>>,
    pub powers: PowerSet,
    pub report: RateReport,
    pub metrics: MetricsLog,
}

/// Run the full scheduling algorithm on one scenario: SPCA outer loop with
/// the selected inner solve, then rank-one extraction and final metrics.
pub fn run_algorithm1(
    scenario: &Scenario,
    channels: &ChannelSet,
    options: &AlgorithmOptions,
) -> Result<RunOutput, AlgError> {
    let channels_norm = channels.normalized();
    let mut iterate = initial_iterate(scenario, channels, &channels_norm)?;
    let mut admm_state = match options.mode {
        SolveMode::Admm => Some(AdmmState::initialize(
            &iterate,
            scenario,
            &channels_norm,
            options.rho.clone(),
        )),
        SolveMode::Centralized => None,
    };

    let mut spca_trace = Vec::new();
    let mut admm_traces = Vec::new();
    let mut central_warm: Option<Vec<f64>> = None;
    let mut prev_obj = iterate.objective_nats(scenario);
    for r in 0..options.max_spca_iters {
        update_xi(&mut iterate);
        let next = match (&options.mode, admm_state.as_mut()) {
            (SolveMode::Centralized, _) => {
                let sp = build_surrogate(&iterate, scenario, &channels_norm, Scope::Network)?;
                let warm = central_warm
                    .take()
                    .filter(|w| w.len() == sp.program.num_vars())
                    .unwrap_or_else(|| sp.warm_start(&iterate, scenario, &channels_norm));
                let sol = solver::solve_warm(&sp.program, options.solver_tol, Some(&warm))
                    .map_err(|e| AlgError::Solver(e.to_string()))?;
                if !matches!(sol.status, SolveStatus::Optimal | SolveStatus::MaxIter) {
                    return Err(AlgError::CentralSolveFailed { iter: r, status: sol.status });
                }
                central_warm = Some(sol.y.clone());
                sp.extract_iterate(&sol, &iterate)
            }
            (SolveMode::Admm, Some(state)) => {
                let (merged, trace) = admm::admm_loop(
                    &iterate,
                    scenario,
                    &channels_norm,
                    state,
                    options.max_admm_iters,
                )?;
                admm_traces.push(trace);
                merged
            }
            (SolveMode::Admm, None) => unreachable!("admm state initialized above"),
        };
        let obj = next.objective_nats(scenario);
        let rel = (prev_obj - obj).abs() / prev_obj.abs().max(1e-12);
        spca_trace.push(SpcaIterRecord {
            iter: r,
            objective_bits: obj / phy::LN_2,
            rel_change: rel,
        });
        iterate = next;
        prev_obj = obj;
        // queue convergence: relative objective change below tolerance (or
        // the backlog is fully served)
        if rel < options.spca_rel_tol || obj <= 1e-6 {
            break;
        }
    }

    // The epigraph rates t are what the schedule budgeted (and what the
    // energy constraint charged for); powers beyond the level that achieves
    // them are redundant allocation. Scale every transmit quantity down to
    // its scheduled operating point so the achieved rates equal the budget.
    polish_to_scheduled_rates(&mut iterate, scenario, channels)?;

    // relaxed-solution objective for the extraction gap
    let relaxed_report = phy::rate_report(&iterate.beams, &iterate.powers, scenario, channels)?;
    let relaxed_obj = relaxed_report.objective_bits();

    let (beams, beam_vectors) = extract_rank_one(
        &iterate.beams,
        options.rank_one_trials,
        scenario,
        channels,
        &iterate.powers,
    )?;
    let report = phy::rate_report(&beams, &iterate.powers, scenario, channels)?;
    let validation = phy::validate_solution(&beams, &iterate.powers, scenario, channels)?;
    let avail = scenario.available_power();
    let alpha = scenario.config.effective_alpha();
    let power_breakdown = (0..scenario.config.num_sbs)
        .map(|b| {
            let transmit_w = beams.cell_tx_power(&scenario.topology, b);
            let decode_w = alpha
                * scenario
                    .topology
                    .ul_set(b)
                    .iter()
                    .map(|&j| report.rate_ul[j].iter().sum::<f64>())
                    .sum::<f64>();
            PowerBreakdown {
                transmit_w,
                circuit_w: scenario.config.circuit_power_w,
                decode_w,
                available_w: avail[b],
            }
        })
        .collect();

    let metrics = MetricsLog {
        objective_bits: report.objective_bits(),
        residual_backlog_bits: report.residual_backlog_bits(),
        q_dev_dl: report.q_dev_dl.clone(),
        q_dev_ul: report.q_dev_ul.clone(),
        dl_sum_rate: report.dl_sum_rate(),
        ul_sum_rate: report.ul_sum_rate(),
        power_breakdown,
        spca_trace,
        admm_traces,
        rank_one_gap_bits: report.objective_bits() - relaxed_obj,
        validation,
    };
    Ok(RunOutput { beams, beam_vectors, powers: iterate.powers, report, metrics })
}

/// Scale beamformers and uplink powers down until every link's achieved SINR
/// equals its scheduled value `e^t - 1`.
///
/// Shrinking one transmitter only raises everyone else's SINR, so repeated
/// sweeps decrease every power monotonically and converge to the point where
/// all links sit exactly at their scheduled rates. Auxiliary iterate fields
/// are left at their solver values; callers recompute any physical metrics.
fn polish_to_scheduled_rates(
    iterate: &mut SpcaIterate,
    scenario: &Scenario,
    channels: &ChannelSet,
) -> Result<(), AlgError> {
    let topo = &scenario.topology;
    let n_sub = scenario.config.num_subcarriers;
    for _pass in 0..40 {
        let mut max_rel_change: f64 = 0.0;
        for i in 0..iterate.beams.num_dl_ues() {
            for n in 0..n_sub {
                if !scenario.dl_carrier_active(n) {
                    continue;
                }
                let gamma = phy::sinr_dl(i, n, &iterate.beams, &iterate.powers, channels, topo);
                if gamma <= 0.0 {
                    continue;
                }
                let target = (crate::fmath::exp(iterate.rate_dl[i][n]) - 1.0).max(0.0);
                if gamma > target * (1.0 + 1e-12) {
                    let s = target / gamma;
                    iterate.beams.u[i][n] = iterate.beams.u[i][n].scale(s);
                    max_rel_change = max_rel_change.max(1.0 - s);
                }
            }
        }
        for b in 0..topo.num_cells() {
            let order = phy::default_sic_order(topo, b);
            for &j in &order {
                for n in 0..n_sub {
                    if !scenario.ul_carrier_active(n) {
                        continue;
                    }
                    let gamma = phy::sinr_ul_mmse_sic(
                        j,
                        n,
                        &iterate.beams,
                        &iterate.powers,
                        channels,
                        topo,
                        &order,
                    )?;
                    if gamma <= 0.0 {
                        continue;
                    }
                    let target = (crate::fmath::exp(iterate.rate_ul[j][n]) - 1.0).max(0.0);
                    if gamma > target * (1.0 + 1e-12) {
                        let s = target / gamma;
                        iterate.powers.p[j][n] *= s;
                        max_rel_change = max_rel_change.max(1.0 - s);
                    }
                }
            }
        }
        if max_rel_change < 1e-12 {
            break;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// rank-one extraction
// ---------------------------------------------------------------------------

/// Ratio of second to first eigenvalue below which a covariance counts as
/// rank-one and its principal component is returned exactly.
const RANK_ONE_RATIO: f64 = 1e-8;

fn feasible_at(
    beams: &BeamformerSet,
    powers: &PowerSet,
    scenario: &Scenario,
    channels: &ChannelSet,
) -> bool {
    // (8b)
    let cfg = &scenario.config;
    for b in 0..scenario.config.num_sbs {
        if beams.cell_tx_power(&scenario.topology, b) > cfg.sbs_max_power_w + 1e-12 {
            return false;
        }
    }
    // (8d)
    for j in 0..powers.p.len() {
        if powers.ue_total(j) > cfg.ue_max_power_w + 1e-12 {
            return false;
        }
    }
    // (8c) with the rates actually achieved by these beamformers
    if !matches!(cfg.setup, Setup::A) {
        let Ok(report) = phy::rate_report(beams, powers, scenario, channels) else {
            return false;
        };
        let avail = scenario.available_power();
        for b in 0..cfg.num_sbs {
            if phy::power_consumption(b, beams, &report.rate_ul, scenario) > avail[b] - 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Largest feasible scale factor for a candidate beam set, capped at 1:
/// randomization draws are shrunk into the power and energy budgets but never
/// amplified beyond the relaxed solution's level (amplification would only
/// over-serve the queues).
fn best_scale(
    unit_beams: &BeamformerSet,
    powers: &PowerSet,
    scenario: &Scenario,
    channels: &ChannelSet,
) -> Option<f64> {
    let cfg = &scenario.config;
    let mut c_max: f64 = 1.0;
    for b in 0..cfg.num_sbs {
        let tx = unit_beams.cell_tx_power(&scenario.topology, b);
        if tx > 0.0 {
            c_max = c_max.min(cfg.sbs_max_power_w / tx);
        }
    }
    let all_zero = unit_beams
        .u
        .iter()
        .flatten()
        .all(|u| u.trace().re <= 1e-14);
    if all_zero {
        return feasible_at(unit_beams, powers, scenario, channels).then_some(1.0);
    }
    let scaled = |c: f64| -> BeamformerSet {
        let mut b = unit_beams.clone();
        for per_n in b.u.iter_mut() {
            for u in per_n.iter_mut() {
                *u = u.scale(c);
            }
        }
        b
    };
    let ok = |c: f64| feasible_at(&scaled(c), powers, scenario, channels);
    if ok(c_max) {
        return Some(c_max);
    }
    // walk down for any feasible point, then bisect back up to the boundary
    let mut lo = None;
    let mut probe = c_max;
    for _ in 0..40 {
        probe *= 0.7;
        if ok(probe) {
            lo = Some(probe);
            break;
        }
    }
    let mut lo = lo?;
    let mut hi = c_max;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Gaussian-randomization rank-one extraction.
///
/// Covariances that are already (numerically) rank one contribute their
/// principal component exactly; the rest draw `trials` candidate vector sets
/// with the relaxed covariance, each rescaled by the largest factor keeping
/// the power and energy constraints feasible, keeping the set that minimizes
/// the queue-deviation objective.
pub fn extract_rank_one(
    relaxed: &BeamformerSet,
    trials: usize,
    scenario: &Scenario,
    channels: &ChannelSet,
    powers: &PowerSet,
) -> Result<(BeamformerSet, Vec<Vec<Vec<Complex64>>>), AlgError> {
    if trials == 0 {
        return Err(AlgError::ZeroTrials);
    }
    let kd = relaxed.num_dl_ues();
    let n_sub = relaxed.num_subcarriers();
    let mt = scenario.config.tx_antennas;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.config.seed.wrapping_add(0xDECAF));

    // classification and fixed parts
    let mut fixed: Vec<Vec<Option<Vec<Complex64>>>> = vec![vec![None; n_sub]; kd];
    let mut sqrt_cov: Vec<Vec<Option<CMat>>> = vec![vec![None; n_sub]; kd];
    for i in 0..kd {
        for n in 0..n_sub {
            let u = &relaxed.u[i][n];
            let trace = u.trace().re;
            if trace <= 1e-14 {
                fixed[i][n] = Some(vec![Complex64::new(0.0, 0.0); mt]);
                continue;
            }
            let (vals, vecs) = u.eigen_hermitian();
            let lead = vals[mt - 1].max(0.0);
            let second = if mt >= 2 { vals[mt - 2].max(0.0) } else { 0.0 };
            if second <= RANK_ONE_RATIO * lead {
                let scale = crate::fmath::sqrt(lead);
                let v: Vec<Complex64> = (0..mt).map(|r| vecs[(r, mt - 1)] * scale).collect();
                fixed[i][n] = Some(v);
            } else {
                sqrt_cov[i][n] = Some(u.sqrt_psd());
            }
        }
    }

    let beams_from = |vectors: &Vec<Vec<Vec<Complex64>>>| -> BeamformerSet {
        let mut beams = BeamformerSet::zeros(kd, n_sub, mt);
        for i in 0..kd {
            for n in 0..n_sub {
                beams.u[i][n] = CMat::outer(&vectors[i][n]);
            }
        }
        beams
    };

    let needs_randomization = sqrt_cov.iter().flatten().any(Option::is_some);
    let trial_count = if needs_randomization { trials } else { 1 };

    let mut best: Option<(f64, Vec<Vec<Vec<Complex64>>>, BeamformerSet)> = None;
    for _trial in 0..trial_count {
        let mut vectors: Vec<Vec<Vec<Complex64>>> =
            vec![vec![vec![Complex64::new(0.0, 0.0); mt]; n_sub]; kd];
        for i in 0..kd {
            for n in 0..n_sub {
                if let Some(v) = &fixed[i][n] {
                    vectors[i][n] = v.clone();
                } else if let Some(s) = &sqrt_cov[i][n] {
                    let draw: Vec<Complex64> = (0..mt).map(|_| complex_normal(&mut rng)).collect();
                    vectors[i][n] = s.mul_vec(&draw);
                }
            }
        }
        let unit = beams_from(&vectors);
        let Some(c) = best_scale(&unit, powers, scenario, channels) else {
            continue;
        };
        let root = crate::fmath::sqrt(c);
        for per_n in vectors.iter_mut() {
            for v in per_n.iter_mut() {
                for z in v.iter_mut() {
                    *z *= root;
                }
            }
        }
        let beams = beams_from(&vectors);
        let report = phy::rate_report(&beams, powers, scenario, channels)?;
        let obj = report.objective_bits();
        if best.as_ref().is_none_or(|(b, _, _)| obj < *b) {
            best = Some((obj, vectors, beams));
        }
    }

    let (_, vectors, beams) = best.ok_or(AlgError::ExtractionInfeasible)?;
    Ok((beams, vectors))
}

// ---------------------------------------------------------------------------
// experiment plans
// ---------------------------------------------------------------------------

/// Sweep definition: every combination of setup, duplex mode, grid point and
/// seed becomes one run. Empty grids mean "no sweep on that axis".
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub setups: Vec<Setup>,
    pub duplex_modes: Vec<Duplex>,
    /// Normalized energy arrival rates; mapped to a harvest power via
    /// `P_H = ratio * (P_cir + 5 * P_b_max)`.
    pub eh_ratio_grid: Vec<f64>,
    /// Decoding-energy coefficients to sweep.
    pub alpha_grid: Vec<f64>,
    pub options: AlgorithmOptions,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), AlgError> {
        if self.seeds.is_empty() {
            return Err(AlgError::EmptyAxis("seeds"));
        }
        for (a, &s) in self.seeds.iter().enumerate() {
            if self.seeds[..a].contains(&s) {
                return Err(AlgError::DuplicateSeeds);
            }
        }
        if self.setups.is_empty() {
            return Err(AlgError::EmptyAxis("setups"));
        }
        if self.duplex_modes.is_empty() {
            return Err(AlgError::EmptyAxis("duplex_modes"));
        }
        Ok(())
    }

    /// Harvest power corresponding to a normalized EH arrival rate.
    pub fn harvest_power_for_ratio(base: &ScenarioConfig, ratio: f64) -> f64 {
        ratio * (base.circuit_power_w + 5.0 * base.sbs_max_power_w)
    }

    /// Enumerate the scenario configurations of the plan.
    pub fn points(&self) -> Vec<PlanPoint> {
        let eh: Vec<Option<f64>> = if self.eh_ratio_grid.is_empty() {
            vec![None]
        } else {
            self.eh_ratio_grid.iter().copied().map(Some).collect()
        };
        let alphas: Vec<Option<f64>> = if self.alpha_grid.is_empty() {
            vec![None]
        } else {
            self.alpha_grid.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &setup in &self.setups {
            for &duplex in &self.duplex_modes {
                for &eh_ratio in &eh {
                    for &alpha in &alphas {
                        for &seed in &self.seeds {
                            let mut config = self.base.clone();
                            config.setup = setup;
                            config.duplex = duplex;
                            config.seed = seed;
                            if let Some(r) = eh_ratio {
                                config.harvest_power_w =
                                    Self::harvest_power_for_ratio(&self.base, r);
                            }
                            if let Some(a) = alpha {
                                config.decode_energy_per_bit = a;
                            }
                            out.push(PlanPoint { config, setup, duplex, eh_ratio, alpha, seed });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PlanPoint {
    pub config: ScenarioConfig,
    pub setup: Setup,
    pub duplex: Duplex,
    pub eh_ratio: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub point: PlanPoint,
    pub outcome: Result<MetricsLog, String>,
}

#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub records: Vec<RunRecord>,
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

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| String::from(""), |x| format!("{x:e}"))
}

impl PlanOutput {
    /// One CSV row per run.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "setup,duplex,eh_ratio,alpha,seed,status,objective_bits,residual_backlog_bits,dl_sum_rate,ul_sum_rate,rank_one_gap_bits\n",
        );
        for r in &self.records {
            let p = &r.point;
            match &r.outcome {
                Ok(m) => out.push_str(&format!(
                    "{},{},{},{},{},ok,{:e},{:e},{:e},{:e},{:e}\n",
                    setup_name(p.setup),
                    duplex_name(p.duplex),
                    opt(p.eh_ratio),
                    opt(p.alpha),
                    p.seed,
                    m.objective_bits,
                    m.residual_backlog_bits,
                    m.dl_sum_rate,
                    m.ul_sum_rate,
                    m.rank_one_gap_bits,
                )),
                Err(e) => out.push_str(&format!(
                    "{},{},{},{},{},error: {},,,,\n",
                    setup_name(p.setup),
                    duplex_name(p.duplex),
                    opt(p.eh_ratio),
                    opt(p.alpha),
                    p.seed,
                    e.replace(',', ";"),
                )),
            }
        }
        out
    }

    /// Seed-averaged aggregates per (setup, duplex, grid point): means and
    /// standard errors of the sum rates and residual backlog.
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(
            "setup,duplex,eh_ratio,alpha,runs,dl_sum_rate_mean,dl_sum_rate_se,ul_sum_rate_mean,ul_sum_rate_se,residual_backlog_mean,residual_backlog_se\n",
        );
        for agg in self.aggregates() {
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                setup_name(agg.setup),
                duplex_name(agg.duplex),
                opt(agg.eh_ratio),
                opt(agg.alpha),
                agg.runs,
                agg.dl_mean,
                agg.dl_se,
                agg.ul_mean,
                agg.ul_se,
                agg.backlog_mean,
                agg.backlog_se,
            ));
        }
        out
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut groups: Vec<(Setup, Duplex, Option<f64>, Option<f64>, Vec<&MetricsLog>)> =
            Vec::new();
        for r in &self.records {
            let Ok(m) = &r.outcome else { continue };
            let p = &r.point;
            let key = (p.setup, p.duplex, p.eh_ratio, p.alpha);
            match groups.iter_mut().find(|(s, d, e, a, _)| (*s, *d, *e, *a) == key) {
                Some((_, _, _, _, v)) => v.push(m),
                None => groups.push((p.setup, p.duplex, p.eh_ratio, p.alpha, vec![m])),
            }
        }
        groups
            .into_iter()
            .map(|(setup, duplex, eh_ratio, alpha, ms)| {
                let stats = |f: &dyn Fn(&MetricsLog) -> f64| -> (f64, f64) {
                    let n = ms.len() as f64;
                    let mean = ms.iter().map(|m| f(m)).sum::<f64>() / n;
                    if ms.len() < 2 {
                        return (mean, 0.0);
                    }
                    let var = ms.iter().map(|m| (f(m) - mean) * (f(m) - mean)).sum::<f64>()
                        / (n - 1.0);
                    (mean, crate::fmath::sqrt(var / n))
                };
                let (dl_mean, dl_se) = stats(&|m| m.dl_sum_rate);
                let (ul_mean, ul_se) = stats(&|m| m.ul_sum_rate);
                let (backlog_mean, backlog_se) = stats(&|m| m.residual_backlog_bits);
                Aggregate {
                    setup,
                    duplex,
                    eh_ratio,
                    alpha,
                    runs: ms.len(),
                    dl_mean,
                    dl_se,
                    ul_mean,
                    ul_se,
                    backlog_mean,
                    backlog_se,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub setup: Setup,
    pub duplex: Duplex,
    pub eh_ratio: Option<f64>,
    pub alpha: Option<f64>,
    pub runs: usize,
    pub dl_mean: f64,
    pub dl_se: f64,
    pub ul_mean: f64,
    pub ul_se: f64,
    pub backlog_mean: f64,
    pub backlog_se: f64,
}

/// Execute every run of a plan sequentially. Individual run failures are
/// recorded in the output and do not stop the plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutput, AlgError> {
    plan.validate()?;
    let records = plan
        .points()
        .into_iter()
        .map(|point| run_plan_point(&point, &plan.options))
        .collect();
    Ok(PlanOutput { records })
}

/// Run one plan point (exposed so the CLI can parallelize across points).
pub fn run_plan_point(point: &PlanPoint, options: &AlgorithmOptions) -> RunRecord {
    let outcome = (|| -> Result<MetricsLog, String> {
        let scenario = Scenario::generate(point.config.clone()).map_err(|e| e.to_string())?;
        let channels = draw_channels(&scenario.topology, &scenario.config);
        let run = run_algorithm1(&scenario, &channels, options).map_err(|e| e.to_string())?;
        Ok(run.metrics)
    })();
    RunRecord { point: point.clone(), outcome }
}
