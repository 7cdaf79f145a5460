//! Network scenarios: topology generation, UE association, traffic buffers and
//! energy budgets. Everything is a pure function of the configuration and its
//! seed, so regenerating a scenario is bit-identical.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Energy setup, mirroring the three simulated system configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    /// Grid-powered: no energy-causality constraint.
    A,
    /// Harvested energy, no decoding-energy term (alpha treated as zero).
    B,
    /// Harvested energy shared between transmission and uplink decoding.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duplex {
    /// Full duplex: every sub-carrier carries both directions.
    Fd,
    /// Half duplex: per cell, the first ceil(N/2) sub-carriers are
    /// downlink-only and the rest uplink-only.
    Hd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    InvalidConfig(String),
    QueueLengthMismatch { expected: usize, got: usize, direction: &'static str },
    NegativeQueueEntry { direction: &'static str, index: usize, value: f64 },
}

impl core::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ScenarioError::InvalidConfig(msg) => write!(f, "invalid scenario config: {msg}"),
            ScenarioError::QueueLengthMismatch { expected, got, direction } => write!(
                f,
                "{direction} queue vector has {got} entries but the scenario has {expected} UEs"
            ),
            ScenarioError::NegativeQueueEntry { direction, index, value } => {
                write!(f, "{direction} queue entry {index} is negative ({value})")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

/// Full experiment configuration. Defaults follow a typical dense
/// small-cell evaluation setup (counts are set by the caller).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_sbs: usize,
    pub dl_ues_per_cell: usize,
    pub ul_ues_per_cell: usize,
    pub num_subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    /// Macro-cell deployment radius in meters.
    pub macro_radius_m: f64,
    /// Small-cell serving radius in meters.
    pub cell_radius_m: f64,
    /// Maximum SBS downlink transmit power, watts.
    pub sbs_max_power_w: f64,
    /// Maximum per-UE uplink transmit power, watts.
    pub ue_max_power_w: f64,
    /// SBS circuit power, watts.
    pub circuit_power_w: f64,
    /// Total system bandwidth, hertz (split evenly over sub-carriers).
    pub bandwidth_hz: f64,
    /// Thermal noise density, dBm/Hz.
    pub noise_density_dbm_hz: f64,
    pub noise_figure_sbs_db: f64,
    pub noise_figure_ue_db: f64,
    /// Residual self-interference variance after cancellation, dB.
    pub si_variance_db: f64,
    /// Rician factor of the self-interference channel.
    pub rician_k: f64,
    /// LOS probability reference distance, meters: p_los(d) = exp(-d/d0).
    pub los_ref_distance_m: f64,
    /// Decoding-energy coefficient alpha, watts per bit/s/Hz.
    pub decode_energy_per_bit: f64,
    pub setup: Setup,
    pub duplex: Duplex,
    /// Scheduling period length, seconds.
    pub period_s: f64,
    /// Battery capacity, joules.
    pub battery_max_j: f64,
    /// Per-SBS energy-harvesting rate, watts.
    pub harvest_power_w: f64,
    /// Per-SBS leftover (carried-over) power, watts.
    pub leftover_power_w: f64,
    /// Queue-draw range (inclusive), bits, used when no explicit buffers given.
    pub queue_bits_min: u32,
    pub queue_bits_max: u32,
    /// Deployment intensities; unused once counts are fixed, kept as
    /// config metadata only.
    pub sbs_intensity: f64,
    pub ue_intensity: f64,
    pub seed: u64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    crate::fmath::powf(10.0, (dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    crate::fmath::powf(10.0, db / 10.0)
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_sbs: 2,
            dl_ues_per_cell: 2,
            ul_ues_per_cell: 2,
            num_subcarriers: 2,
            tx_antennas: 2,
            rx_antennas: 2,
            macro_radius_m: 500.0,
            cell_radius_m: 50.0,
            sbs_max_power_w: dbm_to_watts(24.0),
            ue_max_power_w: dbm_to_watts(23.0),
            circuit_power_w: dbm_to_watts(30.0),
            bandwidth_hz: 10.0e6,
            noise_density_dbm_hz: -174.0,
            noise_figure_sbs_db: 13.0,
            noise_figure_ue_db: 9.0,
            si_variance_db: -110.0,
            rician_k: 1.0,
            los_ref_distance_m: 50.0,
            decode_energy_per_bit: 0.1,
            setup: Setup::C,
            duplex: Duplex::Fd,
            period_s: 1.0,
            battery_max_j: 10.0,
            harvest_power_w: 1.0,
            leftover_power_w: dbm_to_watts(30.0),
            queue_bits_min: 1,
            queue_bits_max: 7,
            sbs_intensity: 10.0,
            ue_intensity: 20.0,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn total_dl_ues(&self) -> usize {
        self.num_sbs * self.dl_ues_per_cell
    }

    pub fn total_ul_ues(&self) -> usize {
        self.num_sbs * self.ul_ues_per_cell
    }

    /// Decoding-energy coefficient actually charged to the SBS budget: the
    /// term is active only in Setup C.
    pub fn effective_alpha(&self) -> f64 {
        match self.setup {
            Setup::C => self.decode_energy_per_bit,
            Setup::A | Setup::B => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::InvalidConfig(msg));
        if self.num_sbs == 0 {
            return fail(String::from("num_sbs must be at least 1"));
        }
        if self.num_subcarriers == 0 {
            return fail(String::from("num_subcarriers must be at least 1"));
        }
        if self.tx_antennas == 0 || self.rx_antennas == 0 {
            return fail(String::from("antenna counts must be at least 1"));
        }
        if self.dl_ues_per_cell + self.ul_ues_per_cell == 0 {
            return fail(String::from("each cell needs at least one UE"));
        }
        for (name, v) in [
            ("macro_radius_m", self.macro_radius_m),
            ("cell_radius_m", self.cell_radius_m),
            ("sbs_max_power_w", self.sbs_max_power_w),
            ("ue_max_power_w", self.ue_max_power_w),
            ("circuit_power_w", self.circuit_power_w),
            ("bandwidth_hz", self.bandwidth_hz),
            ("period_s", self.period_s),
            ("los_ref_distance_m", self.los_ref_distance_m),
        ] {
            if !(v > 0.0) {
                return fail(format!("{name} must be positive (got {v})"));
            }
        }
        if self.cell_radius_m > self.macro_radius_m {
            return fail(format!(
                "cell_radius_m ({}) exceeds macro_radius_m ({})",
                self.cell_radius_m, self.macro_radius_m
            ));
        }
        if self.decode_energy_per_bit < 0.0 {
            return fail(String::from("decode_energy_per_bit must be non-negative"));
        }
        if self.battery_max_j < 0.0 || self.harvest_power_w < 0.0 || self.leftover_power_w < 0.0 {
            return fail(String::from("energy parameters must be non-negative"));
        }
        if self.queue_bits_min > self.queue_bits_max {
            return fail(String::from("queue_bits_min exceeds queue_bits_max"));
        }
        if !(self.rician_k >= 0.0) {
            return fail(String::from("rician_k must be non-negative"));
        }
        Ok(())
    }
}

/// SBS and UE placements plus the per-cell association sets.
///
/// UEs are dropped inside their serving cell's disc, so association is by
/// construction and the per-cell sets partition the UE indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub sbs_positions: Vec<[f64; 2]>,
    pub dl_ue_positions: Vec<[f64; 2]>,
    pub ul_ue_positions: Vec<[f64; 2]>,
    /// Serving cell of each DL UE.
    pub dl_serving: Vec<usize>,
    /// Serving cell of each UL UE.
    pub ul_serving: Vec<usize>,
}

impl Topology {
    pub fn num_cells(&self) -> usize {
        self.sbs_positions.len()
    }

    /// DL UEs associated with cell `b`, ascending index.
    pub fn dl_set(&self, b: usize) -> Vec<usize> {
        (0..self.dl_serving.len()).filter(|&i| self.dl_serving[i] == b).collect()
    }

    /// UL UEs associated with cell `b`, ascending index.
    pub fn ul_set(&self, b: usize) -> Vec<usize> {
        (0..self.ul_serving.len()).filter(|&j| self.ul_serving[j] == b).collect()
    }
}

pub fn distance_m(a: [f64; 2], b: [f64; 2]) -> f64 {
    crate::fmath::hypot(a[0] - b[0], a[1] - b[1])
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    // splitmix-style stream separation
    seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn uniform_in_disc<R: Rng>(rng: &mut R, center: [f64; 2], radius: f64) -> [f64; 2] {
    let r = radius * crate::fmath::sqrt(rng.gen::<f64>());
    let theta = core::f64::consts::TAU * rng.gen::<f64>();
    [center[0] + r * crate::fmath::cos(theta), center[1] + r * crate::fmath::sin(theta)]
}

/// Draw a topology: a fixed number of SBSs uniformly in the macro disc (a
/// fixed-count conditional PPP) and the configured number of DL/UL UEs
/// uniformly inside each serving disc.
pub fn generate_topology(config: &ScenarioConfig) -> Result<Topology, ScenarioError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 1));
    let sbs_positions: Vec<[f64; 2]> = (0..config.num_sbs)
        .map(|_| uniform_in_disc(&mut rng, [0.0, 0.0], config.macro_radius_m))
        .collect();
    let mut dl_ue_positions = Vec::with_capacity(config.total_dl_ues());
    let mut ul_ue_positions = Vec::with_capacity(config.total_ul_ues());
    let mut dl_serving = Vec::with_capacity(config.total_dl_ues());
    let mut ul_serving = Vec::with_capacity(config.total_ul_ues());
    for (b, &center) in sbs_positions.iter().enumerate() {
        for _ in 0..config.dl_ues_per_cell {
            dl_ue_positions.push(uniform_in_disc(&mut rng, center, config.cell_radius_m));
            dl_serving.push(b);
        }
        for _ in 0..config.ul_ues_per_cell {
            ul_ue_positions.push(uniform_in_disc(&mut rng, center, config.cell_radius_m));
            ul_serving.push(b);
        }
    }
    Ok(Topology { sbs_positions, dl_ue_positions, ul_ue_positions, dl_serving, ul_serving })
}

/// Backlogged bits waiting in each UE's buffer at the scheduling instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficState {
    pub dl_backlog_bits: Vec<f64>,
    pub ul_backlog_bits: Vec<f64>,
}

impl TrafficState {
    pub fn total_bits(&self) -> f64 {
        self.dl_backlog_bits.iter().sum::<f64>() + self.ul_backlog_bits.iter().sum::<f64>()
    }
}

/// Initialize traffic buffers, either from explicit vectors (lengths must
/// match the UE counts exactly) or drawn uniformly from the configured
/// integer range.
pub fn init_queues(
    config: &ScenarioConfig,
    values: Option<(&[f64], &[f64])>,
) -> Result<TrafficState, ScenarioError> {
    config.validate()?;
    let (kd, ku) = (config.total_dl_ues(), config.total_ul_ues());
    match values {
        Some((dl, ul)) => {
            if dl.len() != kd {
                return Err(ScenarioError::QueueLengthMismatch {
                    expected: kd,
                    got: dl.len(),
                    direction: "DL",
                });
            }
            if ul.len() != ku {
                return Err(ScenarioError::QueueLengthMismatch {
                    expected: ku,
                    got: ul.len(),
                    direction: "UL",
                });
            }
            for (dir, vs) in [("DL", dl), ("UL", ul)] {
                if let Some((idx, &v)) = vs.iter().enumerate().find(|(_, v)| **v < 0.0) {
                    return Err(ScenarioError::NegativeQueueEntry {
                        direction: dir,
                        index: idx,
                        value: v,
                    });
                }
            }
            Ok(TrafficState { dl_backlog_bits: dl.to_vec(), ul_backlog_bits: ul.to_vec() })
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, 2));
            let span = (config.queue_bits_max - config.queue_bits_min + 1) as u64;
            let mut draw = |count: usize| -> Vec<f64> {
                (0..count)
                    .map(|_| (config.queue_bits_min as u64 + rng.gen_range(0..span)) as f64)
                    .collect()
            };
            Ok(TrafficState { dl_backlog_bits: draw(kd), ul_backlog_bits: draw(ku) })
        }
    }
}

/// Per-SBS energy availability for one scheduling period.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    /// Harvesting rate per SBS, watts.
    pub harvest_w: Vec<f64>,
    /// Leftover power from previous periods per SBS, watts.
    pub leftover_w: Vec<f64>,
    /// Battery capacity, joules.
    pub battery_max_j: f64,
    /// Scheduling period, seconds.
    pub period_s: f64,
}

impl EnergyProfile {
    pub fn uniform(config: &ScenarioConfig) -> Self {
        Self {
            harvest_w: vec![config.harvest_power_w; config.num_sbs],
            leftover_w: vec![config.leftover_power_w; config.num_sbs],
            battery_max_j: config.battery_max_j,
            period_s: config.period_s,
        }
    }
}

/// Average power available at each SBS over the period:
/// `P_b = min(B_max, T*(P_H + P_B)) / T`.
pub fn available_power(profile: &EnergyProfile) -> Vec<f64> {
    let t = profile.period_s;
    profile
        .harvest_w
        .iter()
        .zip(profile.leftover_w.iter())
        .map(|(&ph, &pb)| (profile.battery_max_j.min(t * (ph + pb))) / t)
        .collect()
}

/// One fully-instantiated experiment: configuration plus all drawn state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub traffic: TrafficState,
    pub energy: EnergyProfile,
}

impl Scenario {
    /// Generate a scenario from the config, drawing topology and traffic.
    pub fn generate(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        let topology = generate_topology(&config)?;
        let traffic = init_queues(&config, None)?;
        let energy = EnergyProfile::uniform(&config);
        Ok(Self { config, topology, traffic, energy })
    }

    /// Same, with explicit traffic buffers.
    pub fn generate_with_queues(
        config: ScenarioConfig,
        dl: &[f64],
        ul: &[f64],
    ) -> Result<Self, ScenarioError> {
        let topology = generate_topology(&config)?;
        let traffic = init_queues(&config, Some((dl, ul)))?;
        let energy = EnergyProfile::uniform(&config);
        Ok(Self { config, topology, traffic, energy })
    }

    pub fn available_power(&self) -> Vec<f64> {
        available_power(&self.energy)
    }

    /// Sub-carriers on which the downlink is active (all of them in FD; the
    /// first ceil(N/2) in HD).
    pub fn dl_carrier_active(&self, n: usize) -> bool {
        match self.config.duplex {
            Duplex::Fd => true,
            Duplex::Hd => n < self.config.num_subcarriers.div_ceil(2),
        }
    }

    pub fn ul_carrier_active(&self, n: usize) -> bool {
        match self.config.duplex {
            Duplex::Fd => true,
            Duplex::Hd => n >= self.config.num_subcarriers.div_ceil(2),
        }
    }
}
