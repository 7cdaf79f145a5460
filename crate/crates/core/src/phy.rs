//! Physical-layer evaluation of a candidate solution: SINRs (downlink and
//! MMSE-SIC uplink), achieved rates, queue deviations, per-SBS power
//! consumption and full feasibility checking.
//!
//! Everything here evaluates the exact system-model formulas on given
//! beamformer covariances and powers; nothing is approximated. The surrogate
//! and ADMM modules use these routines both for iterate bookkeeping and as
//! the final source of truth for reported metrics.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::linalg::CMat;
use crate::scenario::{Scenario, Setup, Topology};

/// Absolute feasibility tolerance on constraint slacks, matching the solver's
/// KKT tolerance scale.
pub const FEAS_TOL: f64 = 1e-6;

pub const LN_2: f64 = core::f64::consts::LN_2;

/// Downlink beamformer covariances `U[i][n]` (Hermitian PSD, M_T x M_T, watts).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub u: Vec<Vec<CMat>>,
}

impl BeamformerSet {
    pub fn zeros(num_dl_ues: usize, num_subcarriers: usize, tx_antennas: usize) -> Self {
        Self {
            u: vec![vec![CMat::zeros(tx_antennas, tx_antennas); num_subcarriers]; num_dl_ues],
        }
    }

    pub fn num_dl_ues(&self) -> usize {
        self.u.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    /// Total transmit power of cell `b`: sum of traces over its DL UEs.
    pub fn cell_tx_power(&self, topology: &Topology, b: usize) -> f64 {
        let mut acc = 0.0;
        for i in topology.dl_set(b) {
            for n in 0..self.num_subcarriers() {
                acc += self.u[i][n].trace().re;
            }
        }
        acc
    }
}

/// Uplink transmit powers `p[j][n]` in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSet {
    pub p: Vec<Vec<f64>>,
}

impl PowerSet {
    pub fn zeros(num_ul_ues: usize, num_subcarriers: usize) -> Self {
        Self { p: vec![vec![0.0; num_subcarriers]; num_ul_ues] }
    }

    pub fn ue_total(&self, j: usize) -> f64 {
        self.p[j].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhyError {
    /// The SIC order must be a permutation of the serving cell's UL UEs.
    BadSicOrder { cell: usize, ue: usize },
    /// The interference-plus-noise matrix failed to factor.
    IllConditioned { ue: usize, subcarrier: usize },
}

impl core::fmt::Display for PhyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PhyError::BadSicOrder { cell, ue } => {
                write!(f, "SIC order for cell {cell} is not a permutation containing UE {ue}")
            }
            PhyError::IllConditioned { ue, subcarrier } => write!(
                f,
                "interference covariance for UL UE {ue} on sub-carrier {subcarrier} is not positive definite"
            ),
        }
    }
}

impl core::error::Error for PhyError {}

/// Received downlink SINR of UE `i` on sub-carrier `n`: the desired-signal
/// quadratic form over noise plus all other DL transmissions plus the
/// cross interference from every UL UE.
pub fn sinr_dl(
    i: usize,
    n: usize,
    beams: &BeamformerSet,
    powers: &PowerSet,
    channels: &ChannelSet,
    topology: &Topology,
) -> f64 {
    let serving = topology.dl_serving[i];
    let signal = beams.u[i][n].quad_form(&channels.h_dl[serving][i][n]);
    let mut denom = channels.sigma2_ue;
    for k in 0..beams.num_dl_ues() {
        if k == i {
            continue;
        }
        denom += beams.u[k][n].quad_form(&channels.h_dl[topology.dl_serving[k]][i][n]);
    }
    for (j, pj) in powers.p.iter().enumerate() {
        denom += pj[n] * channels.g[j][i][n].norm_sqr();
    }
    signal / denom
}

/// Default successive-cancellation order of cell `b`: ascending UE index.
pub fn default_sic_order(topology: &Topology, b: usize) -> Vec<usize> {
    topology.ul_set(b)
}

/// Interference-plus-noise covariance seen when decoding UL UE `j` on
/// sub-carrier `n` under MMSE-SIC: noise, own-cell UEs not yet decoded
/// (those after `j` in `order`), every out-of-cell UL UE, and all downlink
/// covariances arriving through the inter-SBS (or self-interference) channels.
pub fn ul_interference_matrix(
    j: usize,
    n: usize,
    beams: &BeamformerSet,
    powers: &PowerSet,
    channels: &ChannelSet,
    topology: &Topology,
    order: &[usize],
) -> Result<CMat, PhyError> {
    let b = topology.ul_serving[j];
    let cell_set = topology.ul_set(b);
    let is_perm = order.len() == cell_set.len() && cell_set.iter().all(|ue| order.contains(ue));
    let pos = order.iter().position(|&l| l == j);
    let pos = match (is_perm, pos) {
        (true, Some(p)) => p,
        _ => return Err(PhyError::BadSicOrder { cell: b, ue: j }),
    };
    let mr = channels.h_ul[b][j][n].len();
    let mut x = CMat::scaled_identity(mr, channels.sigma2_sbs);
    for &l in &order[pos + 1..] {
        x.add_scaled(&CMat::outer(&channels.h_ul[b][l][n]), powers.p[l][n]);
    }
    for l in 0..powers.p.len() {
        if topology.ul_serving[l] != b {
            x.add_scaled(&CMat::outer(&channels.h_ul[b][l][n]), powers.p[l][n]);
        }
    }
    for i in 0..beams.num_dl_ues() {
        let hm = &channels.h_bs[b][topology.dl_serving[i]][n];
        x.add_scaled(&hm.congruence(&beams.u[i][n]), 1.0);
    }
    x.hermitianize();
    Ok(x)
}

/// Uplink MMSE-SIC SINR: `p_j * h^H X^{-1} h` with `X` from
/// [`ul_interference_matrix`].
pub fn sinr_ul_mmse_sic(
    j: usize,
    n: usize,
    beams: &BeamformerSet,
    powers: &PowerSet,
    channels: &ChannelSet,
    topology: &Topology,
    order: &[usize],
) -> Result<f64, PhyError> {
    let b = topology.ul_serving[j];
    let x = ul_interference_matrix(j, n, beams, powers, channels, topology, order)?;
    let chol = x
        .cholesky()
        .ok_or(PhyError::IllConditioned { ue: j, subcarrier: n })?;
    let h = &channels.h_ul[b][j][n];
    let sol = chol.solve(h);
    let quad: f64 = h
        .iter()
        .zip(sol.iter())
        .map(|(hi, si)| (hi.conj() * si).re)
        .sum();
    Ok(powers.p[j][n] * quad)
}

/// Residual backlog after serving `rates` bits: `Q - sum(rates)`. May be
/// negative when a UE is over-served.
pub fn queue_deviation(backlog_bits: f64, rates_bits: &[f64]) -> f64 {
    backlog_bits - rates_bits.iter().sum::<f64>()
}

/// Total power consumption of SBS `b`: transmit traces plus circuit power
/// plus (in Setup C) the rate-dependent uplink decoding energy.
pub fn power_consumption(
    b: usize,
    beams: &BeamformerSet,
    ul_rates_bits: &[Vec<f64>],
    scenario: &Scenario,
) -> f64 {
    let mut total = beams.cell_tx_power(&scenario.topology, b) + scenario.config.circuit_power_w;
    let alpha = scenario.config.effective_alpha();
    if alpha > 0.0 {
        for j in scenario.topology.ul_set(b) {
            total += alpha * ul_rates_bits[j].iter().sum::<f64>();
        }
    }
    total
}

/// Full per-UE/per-carrier evaluation of one solution.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub sinr_dl: Vec<Vec<f64>>,
    pub sinr_ul: Vec<Vec<f64>>,
    /// bits/s/Hz, `log2(1 + sinr)`
    pub rate_dl: Vec<Vec<f64>>,
    pub rate_ul: Vec<Vec<f64>>,
    pub q_dev_dl: Vec<f64>,
    pub q_dev_ul: Vec<f64>,
    pub power_total: Vec<f64>,
}

impl RateReport {
    pub fn dl_sum_rate(&self) -> f64 {
        self.rate_dl.iter().flatten().sum()
    }

    pub fn ul_sum_rate(&self) -> f64 {
        self.rate_ul.iter().flatten().sum()
    }

    /// The network objective: l2 norms of the DL and UL deviation vectors.
    pub fn objective_bits(&self) -> f64 {
        let norm = |v: &[f64]| crate::fmath::sqrt(v.iter().map(|q| q * q).sum::<f64>());
        norm(&self.q_dev_dl) + norm(&self.q_dev_ul)
    }

    /// Total residual backlog in bits, clamped at zero per UE.
    pub fn residual_backlog_bits(&self) -> f64 {
        self.q_dev_dl
            .iter()
            .chain(self.q_dev_ul.iter())
            .map(|&q| q.max(0.0))
            .sum()
    }

    /// One CSV row per UE per sub-carrier.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("direction,ue,subcarrier,sinr,rate_bits_per_s_per_hz,queue_deviation_bits\n");
        for (i, per_n) in self.sinr_dl.iter().enumerate() {
            for n in 0..per_n.len() {
                out.push_str(&format!(
                    "dl,{i},{n},{:e},{:e},{:e}\n",
                    self.sinr_dl[i][n], self.rate_dl[i][n], self.q_dev_dl[i]
                ));
            }
        }
        for (j, per_n) in self.sinr_ul.iter().enumerate() {
            for n in 0..per_n.len() {
                out.push_str(&format!(
                    "ul,{j},{n},{:e},{:e},{:e}\n",
                    self.sinr_ul[j][n], self.rate_ul[j][n], self.q_dev_ul[j]
                ));
            }
        }
        out
    }
}

/// Evaluate SINRs, rates, queue deviations and per-SBS powers for a solution,
/// using the default (ascending-index) SIC order in every cell.
pub fn rate_report(
    beams: &BeamformerSet,
    powers: &PowerSet,
    scenario: &Scenario,
    channels: &ChannelSet,
) -> Result<RateReport, PhyError> {
    let topo = &scenario.topology;
    let kd = beams.num_dl_ues();
    let ku = powers.p.len();
    let n_sub = scenario.config.num_subcarriers;
    let mut sinr_dl_v = vec![vec![0.0; n_sub]; kd];
    let mut sinr_ul_v = vec![vec![0.0; n_sub]; ku];
    for i in 0..kd {
        for n in 0..n_sub {
            sinr_dl_v[i][n] = sinr_dl(i, n, beams, powers, channels, topo);
        }
    }
    for b in 0..topo.num_cells() {
        let order = default_sic_order(topo, b);
        for &j in &order {
            for n in 0..n_sub {
                sinr_ul_v[j][n] = sinr_ul_mmse_sic(j, n, beams, powers, channels, topo, &order)?;
            }
        }
    }
    let rate = |s: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        s.iter()
            .map(|per_n| per_n.iter().map(|&g| crate::fmath::ln(1.0 + g) / LN_2).collect())
            .collect()
    };
    let rate_dl = rate(&sinr_dl_v);
    let rate_ul = rate(&sinr_ul_v);
    let q_dev_dl: Vec<f64> = (0..kd)
        .map(|i| queue_deviation(scenario.traffic.dl_backlog_bits[i], &rate_dl[i]))
        .collect();
    let q_dev_ul: Vec<f64> = (0..ku)
        .map(|j| queue_deviation(scenario.traffic.ul_backlog_bits[j], &rate_ul[j]))
        .collect();
    let power_total: Vec<f64> = (0..topo.num_cells())
        .map(|b| power_consumption(b, beams, &rate_ul, scenario))
        .collect();
    Ok(RateReport {
        sinr_dl: sinr_dl_v,
        sinr_ul: sinr_ul_v,
        rate_dl,
        rate_ul,
        q_dev_dl,
        q_dev_ul,
        power_total,
    })
}

/// One constraint's slack in a feasibility report. `slack >= -FEAS_TOL` is
/// considered satisfied; infeasibility is data, not an error.
#[derive(Debug, Clone)]
pub struct ConstraintSlack {
    pub label: String,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub entries: Vec<ConstraintSlack>,
    /// Numerical rank of each beamformer covariance (eigenvalues above
    /// `1e-8 * max`); reported but not enforced under the relaxation.
    pub ranks: Vec<Vec<usize>>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn slack(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.slack)
    }
}

/// Check every constraint of the scheduling problem on a candidate solution:
/// per-SBS DL power, energy causality (Setups B and C), per-UE UL power,
/// PSD-ness of each covariance, and power non-negativity.
pub fn validate_solution(
    beams: &BeamformerSet,
    powers: &PowerSet,
    scenario: &Scenario,
    channels: &ChannelSet,
) -> Result<FeasibilityReport, PhyError> {
    let topo = &scenario.topology;
    let cfg = &scenario.config;
    let mut entries = Vec::new();
    let mut push = |label: String, slack: f64| {
        entries.push(ConstraintSlack { label, slack, ok: slack >= -FEAS_TOL });
    };

    for b in 0..topo.num_cells() {
        push(
            format!("dl_power[b={b}]"),
            cfg.sbs_max_power_w - beams.cell_tx_power(topo, b),
        );
    }
    if !matches!(cfg.setup, Setup::A) {
        let report = rate_report(beams, powers, scenario, channels)?;
        let avail = scenario.available_power();
        for b in 0..topo.num_cells() {
            push(
                format!("energy[b={b}]"),
                avail[b] - power_consumption(b, beams, &report.rate_ul, scenario),
            );
        }
    }
    for (j, _) in powers.p.iter().enumerate() {
        push(format!("ul_power[j={j}]"), cfg.ue_max_power_w - powers.ue_total(j));
    }
    let mut ranks = vec![vec![0usize; beams.num_subcarriers()]; beams.num_dl_ues()];
    for (i, per_n) in beams.u.iter().enumerate() {
        for (n, u) in per_n.iter().enumerate() {
            let (vals, _) = u.eigen_hermitian();
            let max = vals.last().copied().unwrap_or(0.0).max(0.0);
            ranks[i][n] = vals.iter().filter(|&&v| v > 1e-8 * max.max(1e-300)).count();
            push(format!("psd[i={i},n={n}]"), vals[0]);
        }
    }
    for (j, per_n) in powers.p.iter().enumerate() {
        for (n, &pv) in per_n.iter().enumerate() {
            push(format!("nonneg_p[j={j},n={n}]"), pv);
        }
    }
    let feasible = entries.iter().all(|e| e.ok);
    Ok(FeasibilityReport { entries, ranks, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complex_normal, standard_normal};
    use num_complex::Complex64;
    use crate::scenario::{EnergyProfile, ScenarioConfig, TrafficState};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Hand-built single-cell world with unit noise; channels set per test.
    pub(crate) struct World {
        pub scenario: Scenario,
        pub channels: ChannelSet,
    }

    pub(crate) fn simple_world(mt: usize, mr: usize, kd: usize, ku: usize) -> World {
        let config = ScenarioConfig {
            num_sbs: 1,
            dl_ues_per_cell: kd,
            ul_ues_per_cell: ku,
            num_subcarriers: 1,
            tx_antennas: mt,
            rx_antennas: mr,
            ..ScenarioConfig::default()
        };
        let topology = Topology {
            sbs_positions: vec![[0.0, 0.0]],
            dl_ue_positions: vec![[10.0, 0.0]; kd],
            ul_ue_positions: vec![[0.0, 10.0]; ku],
            dl_serving: vec![0; kd],
            ul_serving: vec![0; ku],
        };
        let zero = c(0.0, 0.0);
        let channels = ChannelSet {
            h_dl: vec![vec![vec![vec![zero; mt]; 1]; kd]; 1],
            h_ul: vec![vec![vec![vec![zero; mr]; 1]; ku]; 1],
            g: vec![vec![vec![zero; 1]; kd]; ku],
            h_bs: vec![vec![vec![CMat::zeros(mr, mt); 1]; 1]; 1],
            sigma2_sbs: 1.0,
            sigma2_ue: 1.0,
        };
        let traffic = TrafficState {
            dl_backlog_bits: vec![0.0; kd],
            ul_backlog_bits: vec![0.0; ku],
        };
        let energy = EnergyProfile::uniform(&config);
        World { scenario: Scenario { config, topology, traffic, energy }, channels }
    }

    #[test]
    fn dl_sinr_direct_substitution() {
        // h = (1,0), U = I, sigma2 = 1, no interference -> 1
        let mut w = simple_world(2, 2, 1, 1);
        w.channels.h_dl[0][0][0] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::identity(2);
        let powers = PowerSet::zeros(1, 1);
        let g = sinr_dl(0, 0, &beams, &powers, &w.channels, &w.scenario.topology);
        assert!((g - 1.0).abs() < 1e-12);

        // add a UL interferer with p=1 and |g|=1 -> denominator 2
        let mut powers = powers;
        powers.p[0][0] = 1.0;
        let mut ch = w.channels.clone();
        ch.g[0][0][0] = c(1.0, 0.0);
        let g = sinr_dl(0, 0, &beams, &powers, &ch, &w.scenario.topology);
        assert!((g - 0.5).abs() < 1e-12);

        // zero beamformer -> zero SINR
        let zero_beams = BeamformerSet::zeros(1, 1, 2);
        let g = sinr_dl(0, 0, &zero_beams, &powers, &ch, &w.scenario.topology);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn ul_sinr_noise_only() {
        // single UL UE, no DL: h=(1,0), p=4, sigma2=1 -> 4
        let mut w = simple_world(2, 2, 1, 1);
        w.channels.h_ul[0][0][0] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let beams = BeamformerSet::zeros(1, 1, 2);
        let mut powers = PowerSet::zeros(1, 1);
        powers.p[0][0] = 4.0;
        let g = sinr_ul_mmse_sic(0, 0, &beams, &powers, &w.channels, &w.scenario.topology, &[0])
            .unwrap();
        assert!((g - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ul_sinr_with_self_interference() {
        // H = I, U = I makes X = 2I; h=(1,0), p=4 -> 2 (2x2 inversion oracle)
        let mut w = simple_world(2, 2, 1, 1);
        w.channels.h_ul[0][0][0] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        w.channels.h_bs[0][0][0] = CMat::identity(2);
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::identity(2);
        let mut powers = PowerSet::zeros(1, 1);
        powers.p[0][0] = 4.0;
        let g = sinr_ul_mmse_sic(0, 0, &beams, &powers, &w.channels, &w.scenario.topology, &[0])
            .unwrap();
        assert!((g - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ul_sinr_rejects_bad_order() {
        let w = simple_world(2, 2, 1, 2);
        let beams = BeamformerSet::zeros(1, 1, 2);
        let powers = PowerSet::zeros(2, 1);
        // missing UE 1 from the order
        let err = sinr_ul_mmse_sic(0, 0, &beams, &powers, &w.channels, &w.scenario.topology, &[0])
            .unwrap_err();
        assert!(matches!(err, PhyError::BadSicOrder { .. }));
    }

    /// Independent dense oracle: Gauss-Jordan inversion, then the quadratic
    /// form, on randomly generated two-UE instances.
    fn gauss_jordan_inverse(a: &CMat) -> CMat {
        let n = a.rows;
        let mut aug = CMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = a[(i, j)];
            }
            aug[(i, n + i)] = c(1.0, 0.0);
        }
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if aug[(r, col)].norm() > aug[(piv, col)].norm() {
                    piv = r;
                }
            }
            if piv != col {
                for j in 0..2 * n {
                    let tmp = aug[(col, j)];
                    aug[(col, j)] = aug[(piv, j)];
                    aug[(piv, j)] = tmp;
                }
            }
            let d = aug[(col, col)];
            for j in 0..2 * n {
                aug[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = aug[(r, col)];
                for j in 0..2 * n {
                    let sub = f * aug[(col, j)];
                    aug[(r, j)] -= sub;
                }
            }
        }
        CMat::from_fn(n, n, |i, j| aug[(i, n + j)])
    }

    #[test]
    fn ul_sinr_matches_dense_inversion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let mut w = simple_world(2, 2, 2, 2);
            for per_ue in w.channels.h_ul[0].iter_mut() {
                for per_n in per_ue.iter_mut() {
                    *per_n = (0..2).map(|_| complex_normal(&mut rng)).collect();
                }
            }
            w.channels.h_bs[0][0][0] = CMat::from_fn(2, 2, |_, _| complex_normal(&mut rng));
            let mut beams = BeamformerSet::zeros(2, 1, 2);
            for i in 0..2 {
                let gmat = CMat::from_fn(2, 2, |_, _| complex_normal(&mut rng));
                beams.u[i][0] = gmat.matmul(&gmat.adjoint()).scale(0.5);
            }
            let mut powers = PowerSet::zeros(2, 1);
            for j in 0..2 {
                powers.p[j][0] = standard_normal(&mut rng).abs() + 0.1;
            }
            let order = [0usize, 1];
            for j in 0..2 {
                let x = ul_interference_matrix(
                    j, 0, &beams, &powers, &w.channels, &w.scenario.topology, &order,
                )
                .unwrap();
                let inv = gauss_jordan_inverse(&x);
                let h = &w.channels.h_ul[0][j][0];
                let oracle = powers.p[j][0] * inv.quad_form(h);
                let got = sinr_ul_mmse_sic(
                    j, 0, &beams, &powers, &w.channels, &w.scenario.topology, &order,
                )
                .unwrap();
                assert!(
                    (got - oracle).abs() <= 1e-10 * oracle.abs().max(1.0),
                    "j={j}: {got} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn queue_deviation_examples() {
        assert_eq!(queue_deviation(6.0, &[1.0, 1.0]), 4.0);
        assert_eq!(queue_deviation(6.0, &[]), 6.0);
        assert_eq!(queue_deviation(2.0, &[3.0]), -1.0);
    }

    proptest! {
        #[test]
        fn queue_deviation_of_zero_rates_is_identity(q in 0.0..1e6f64) {
            prop_assert_eq!(queue_deviation(q, &[0.0, 0.0]), q);
        }
    }

    #[test]
    fn power_consumption_examples() {
        // trace sum 2 W, P_cir 1 W, alpha 0.1, sum rate 10 -> 4 W in Setup C
        let mut w = simple_world(2, 2, 1, 1);
        w.scenario.config.circuit_power_w = 1.0;
        w.scenario.config.decode_energy_per_bit = 0.1;
        w.scenario.config.setup = Setup::C;
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::identity(2); // trace 2
        let rates = vec![vec![10.0]];
        let p = power_consumption(0, &beams, &rates, &w.scenario);
        assert!((p - 4.0).abs() < 1e-12);

        // Setup B forces alpha to 0 -> 3 W
        w.scenario.config.setup = Setup::B;
        let p = power_consumption(0, &beams, &rates, &w.scenario);
        assert!((p - 3.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_default_is_table_value() {
        assert_eq!(ScenarioConfig::default().decode_energy_per_bit, 0.1);
    }

    #[test]
    fn sinr_monotone_in_interferer_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut w = simple_world(2, 2, 1, 1);
        w.channels.h_dl[0][0][0] = vec![complex_normal(&mut rng), complex_normal(&mut rng)];
        w.channels.g[0][0][0] = complex_normal(&mut rng);
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::identity(2);
        let mut prev = f64::INFINITY;
        for k in 0..6 {
            let mut powers = PowerSet::zeros(1, 1);
            powers.p[0][0] = k as f64 * 0.5;
            let g = sinr_dl(0, 0, &beams, &powers, &w.channels, &w.scenario.topology);
            assert!(g <= prev + 1e-15);
            prev = g;
        }
    }

    #[test]
    fn validate_all_zero_solution_has_full_budgets() {
        let w = simple_world(2, 2, 1, 1);
        let beams = BeamformerSet::zeros(1, 1, 2);
        let powers = PowerSet::zeros(1, 1);
        let report = validate_solution(&beams, &powers, &w.scenario, &w.channels).unwrap();
        assert!(report.feasible);
        let cfg = &w.scenario.config;
        let slack = report.slack("dl_power[b=0]").unwrap();
        assert!((slack - cfg.sbs_max_power_w).abs() < 1e-12);
        let slack = report.slack("ul_power[j=0]").unwrap();
        assert!((slack - cfg.ue_max_power_w).abs() < 1e-12);
    }

    #[test]
    fn validate_boundary_dl_power_has_zero_slack() {
        let mut w = simple_world(2, 2, 1, 1);
        w.scenario.config.setup = Setup::A;
        let pmax = w.scenario.config.sbs_max_power_w;
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::scaled_identity(2, pmax / 2.0);
        let powers = PowerSet::zeros(1, 1);
        let report = validate_solution(&beams, &powers, &w.scenario, &w.channels).unwrap();
        assert!(report.slack("dl_power[b=0]").unwrap().abs() < 1e-12);
        assert!(report.feasible);
    }

    #[test]
    fn validate_flags_energy_violation_under_huge_alpha() {
        let mut w = simple_world(2, 2, 1, 1);
        w.scenario.config.setup = Setup::C;
        w.scenario.config.decode_energy_per_bit = 1e6;
        w.scenario.config.circuit_power_w = 1.0;
        w.scenario.config.harvest_power_w = 1.05;
        w.scenario.config.leftover_power_w = 0.0;
        w.scenario.energy = EnergyProfile::uniform(&w.scenario.config);
        // give the UL UE an actual rate so the decode term bites
        w.channels.h_ul[0][0][0] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let beams = BeamformerSet::zeros(1, 1, 2);
        let mut powers = PowerSet::zeros(1, 1);
        powers.p[0][0] = 0.1;
        let report = validate_solution(&beams, &powers, &w.scenario, &w.channels).unwrap();
        assert!(!report.feasible);
        assert!(report.slack("energy[b=0]").unwrap() < 0.0);
    }

    #[test]
    fn rank_reported_not_enforced() {
        let w = simple_world(2, 2, 1, 1);
        let mut beams = BeamformerSet::zeros(1, 1, 2);
        beams.u[0][0] = CMat::identity(2).scale(0.01);
        let powers = PowerSet::zeros(1, 1);
        let report = validate_solution(&beams, &powers, &w.scenario, &w.channels).unwrap();
        assert_eq!(report.ranks[0][0], 2);
        assert!(report.feasible, "rank-two is allowed under the relaxation");
    }

    #[test]
    fn rate_report_rates_match_sinrs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut w = simple_world(2, 2, 2, 2);
        for per_ue in w.channels.h_dl[0].iter_mut() {
            for per_n in per_ue.iter_mut() {
                *per_n = (0..2).map(|_| complex_normal(&mut rng)).collect();
            }
        }
        for per_ue in w.channels.h_ul[0].iter_mut() {
            for per_n in per_ue.iter_mut() {
                *per_n = (0..2).map(|_| complex_normal(&mut rng)).collect();
            }
        }
        let mut beams = BeamformerSet::zeros(2, 1, 2);
        beams.u[0][0] = CMat::identity(2).scale(0.2);
        let mut powers = PowerSet::zeros(2, 1);
        powers.p[0][0] = 0.3;
        let report = rate_report(&beams, &powers, &w.scenario, &w.channels).unwrap();
        for i in 0..2 {
            let expect = crate::fmath::ln(1.0 + report.sinr_dl[i][0]) / LN_2;
            assert!((report.rate_dl[i][0] - expect).abs() < 1e-12);
        }
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 + 2);
    }
}
