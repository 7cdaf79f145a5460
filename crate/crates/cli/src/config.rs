//! TOML configuration: a `[scenario]` table of flat key/value parameters,
//! an optional `[solver]` table, and an optional `[sweep]` table with
//! per-axis arrays. Omitted keys fall back to the library defaults.

use anyhow::{bail, Context, Result};
use fdcell_core::admm::PenaltyParams;
use fdcell_core::alg::{AlgorithmOptions, ExperimentPlan, SolveMode};
use fdcell_core::scenario::{Duplex, Scenario, ScenarioConfig, Setup};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub num_sbs: Option<usize>,
    pub dl_ues_per_cell: Option<usize>,
    pub ul_ues_per_cell: Option<usize>,
    pub num_subcarriers: Option<usize>,
    pub tx_antennas: Option<usize>,
    pub rx_antennas: Option<usize>,
    pub macro_radius_m: Option<f64>,
    pub cell_radius_m: Option<f64>,
    pub sbs_max_power_w: Option<f64>,
    pub ue_max_power_w: Option<f64>,
    pub circuit_power_w: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub noise_density_dbm_hz: Option<f64>,
    pub noise_figure_sbs_db: Option<f64>,
    pub noise_figure_ue_db: Option<f64>,
    pub si_variance_db: Option<f64>,
    pub rician_k: Option<f64>,
    pub los_ref_distance_m: Option<f64>,
    pub decode_energy_per_bit: Option<f64>,
    /// "A", "B" or "C"
    pub setup: Option<String>,
    /// "fd" or "hd"
    pub duplex: Option<String>,
    pub period_s: Option<f64>,
    pub battery_max_j: Option<f64>,
    pub harvest_power_w: Option<f64>,
    pub leftover_power_w: Option<f64>,
    pub queue_bits_min: Option<u32>,
    pub queue_bits_max: Option<u32>,
    pub sbs_intensity: Option<f64>,
    pub ue_intensity: Option<f64>,
    pub seed: Option<u64>,
    /// Explicit buffers; longer vectors are truncated with a warning,
    /// shorter ones are an error.
    pub dl_queue_bits: Option<Vec<f64>>,
    pub ul_queue_bits: Option<Vec<f64>>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        // all None: every field falls back to the library default
        toml::from_str("").expect("empty section")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// "centralized" or "admm"
    pub mode: Option<String>,
    pub max_spca_iters: Option<usize>,
    pub max_admm_iters: Option<usize>,
    pub spca_rel_tol: Option<f64>,
    pub rank_one_trials: Option<usize>,
    pub rho: Option<f64>,
    pub adaptive_rho: Option<bool>,
    pub solver_tol: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        toml::from_str("").expect("empty section")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub setups: Vec<String>,
    #[serde(default)]
    pub duplex: Vec<String>,
    #[serde(default)]
    pub eh_ratio_grid: Vec<f64>,
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
}

pub fn parse_setup(s: &str) -> Result<Setup> {
    match s.to_ascii_uppercase().as_str() {
        "A" => Ok(Setup::A),
        "B" => Ok(Setup::B),
        "C" => Ok(Setup::C),
        other => bail!("unknown setup '{other}' (expected A, B or C)"),
    }
}

pub fn parse_duplex(s: &str) -> Result<Duplex> {
    match s.to_ascii_lowercase().as_str() {
        "fd" => Ok(Duplex::Fd),
        "hd" => Ok(Duplex::Hd),
        other => bail!("unknown duplex mode '{other}' (expected fd or hd)"),
    }
}

pub fn parse_mode(s: &str) -> Result<SolveMode> {
    match s.to_ascii_lowercase().as_str() {
        "centralized" | "central" => Ok(SolveMode::Centralized),
        "admm" | "distributed" => Ok(SolveMode::Admm),
        other => bail!("unknown solve mode '{other}' (expected centralized or admm)"),
    }
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: FileConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let s = &self.scenario;
        let mut config = ScenarioConfig::default();
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = s.$field.clone() { config.$field = v; })*
            };
        }
        take!(
            num_sbs,
            dl_ues_per_cell,
            ul_ues_per_cell,
            num_subcarriers,
            tx_antennas,
            rx_antennas,
            macro_radius_m,
            cell_radius_m,
            sbs_max_power_w,
            ue_max_power_w,
            circuit_power_w,
            bandwidth_hz,
            noise_density_dbm_hz,
            noise_figure_sbs_db,
            noise_figure_ue_db,
            si_variance_db,
            rician_k,
            los_ref_distance_m,
            decode_energy_per_bit,
            period_s,
            battery_max_j,
            harvest_power_w,
            leftover_power_w,
            queue_bits_min,
            queue_bits_max,
            sbs_intensity,
            ue_intensity,
            seed
        );
        if let Some(setup) = &s.setup {
            config.setup = parse_setup(setup)?;
        }
        if let Some(duplex) = &s.duplex {
            config.duplex = parse_duplex(duplex)?;
        }
        config.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(config)
    }

    /// Instantiate the scenario, applying explicit queue vectors when given.
    /// Oversized vectors are truncated to the UE counts with a warning on
    /// stderr; undersized ones are an error.
    pub fn build_scenario(&self, config: ScenarioConfig) -> Result<Scenario> {
        let (dl, ul) = (&self.scenario.dl_queue_bits, &self.scenario.ul_queue_bits);
        match (dl, ul) {
            (None, None) => Scenario::generate(config).map_err(|e| anyhow::anyhow!("{e}")),
            (Some(dl), Some(ul)) => {
                let kd = config.total_dl_ues();
                let ku = config.total_ul_ues();
                let dl = truncate_with_warning("dl_queue_bits", dl, kd)?;
                let ul = truncate_with_warning("ul_queue_bits", ul, ku)?;
                Scenario::generate_with_queues(config, dl, ul)
                    .map_err(|e| anyhow::anyhow!("{e}"))
            }
            _ => bail!("dl_queue_bits and ul_queue_bits must be given together"),
        }
    }

    pub fn algorithm_options(&self) -> Result<AlgorithmOptions> {
        let s = &self.solver;
        let mut options = AlgorithmOptions::default();
        if let Some(mode) = &s.mode {
            options.mode = parse_mode(mode)?;
        }
        if let Some(v) = s.max_spca_iters {
            options.max_spca_iters = v;
        }
        if let Some(v) = s.max_admm_iters {
            options.max_admm_iters = v;
        }
        if let Some(v) = s.spca_rel_tol {
            options.spca_rel_tol = v;
        }
        if let Some(v) = s.rank_one_trials {
            options.rank_one_trials = v;
        }
        if let Some(rho) = s.rho {
            options.rho =
                PenaltyParams { rho1: rho, rho2: rho, rho3: rho, rho4: rho, ..options.rho };
        }
        if let Some(adaptive) = s.adaptive_rho {
            options.rho.adaptive = adaptive;
        }
        if let Some(v) = s.solver_tol {
            options.solver_tol = v;
        }
        Ok(options)
    }

    pub fn experiment_plan(&self) -> Result<ExperimentPlan> {
        let Some(sweep) = &self.sweep else {
            bail!("config has no [sweep] section");
        };
        let base = self.scenario_config()?;
        let setups = if sweep.setups.is_empty() {
            vec![base.setup]
        } else {
            sweep.setups.iter().map(|s| parse_setup(s)).collect::<Result<_>>()?
        };
        let duplex_modes = if sweep.duplex.is_empty() {
            vec![base.duplex]
        } else {
            sweep.duplex.iter().map(|s| parse_duplex(s)).collect::<Result<_>>()?
        };
        let plan = ExperimentPlan {
            base,
            seeds: sweep.seeds.clone(),
            setups,
            duplex_modes,
            eh_ratio_grid: sweep.eh_ratio_grid.clone(),
            alpha_grid: sweep.alpha_grid.clone(),
            options: self.algorithm_options()?,
        };
        plan.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(plan)
    }
}

fn truncate_with_warning<'a>(name: &str, values: &'a [f64], want: usize) -> Result<&'a [f64]> {
    if values.len() < want {
        bail!("{name} has {} entries but the scenario needs {want}", values.len());
    }
    if values.len() > want {
        eprintln!(
            "warning: {name} has {} entries for {want} UEs; using the first {want}",
            values.len()
        );
    }
    Ok(&values[..want])
}
