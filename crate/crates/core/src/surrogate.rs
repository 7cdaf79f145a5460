//! Successive parametric convex approximation of the queue-minimization
//! problem.
//!
//! Around a feasible iterate, every non-convex piece is replaced by a convex
//! restriction:
//!
//! - the downlink signal/SINR product constraint uses the AM-GM upper bound
//!   `F(z, beta, xi) = beta^2/(2 xi) + xi z^2/2 >= z * beta`, tight at
//!   `xi = beta / z`;
//! - the uplink SINR function `x^2 h^H X^{-1} h` (jointly convex in `(x, X)`)
//!   is replaced by its first-order affine minorant at the iterate;
//! - the rate definitions become exponential epigraphs `e^t <= 1 + z` with
//!   rates carried in nats.
//!
//! The emitted [`ConicProgram`] works in noise-normalized channel units
//! (receiver noise power 1), which keeps the interior-point Hessians well
//! conditioned; beamformer and transmit powers stay in watts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::linalg::CMat;
use crate::phy::{self, BeamformerSet, PowerSet, LN_2};
use crate::scenario::{Scenario, Setup};
use crate::solver::{AffExpr, BlockId, ConicProgram, Objective, Solution, VarId};

/// Floor applied to `z` when tightening `xi = beta / z`.
pub const XI_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SurrogateError {
    NonPositiveXi(f64),
    NotPositiveDefinite,
    DimensionMismatch(String),
    /// Circuit power alone exceeds the available energy at an SBS; the
    /// scheduling problem has no feasible point.
    EnergyInfeasible { cell: usize, circuit_w: f64, available_w: f64 },
    ChannelsNotNormalized,
}

impl core::fmt::Display for SurrogateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SurrogateError::NonPositiveXi(v) => write!(f, "xi must be positive, got {v}"),
            SurrogateError::NotPositiveDefinite => {
                write!(f, "matrix argument must be positive definite")
            }
            SurrogateError::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            SurrogateError::EnergyInfeasible { cell, circuit_w, available_w } => write!(
                f,
                "cell {cell}: circuit power {circuit_w} W exceeds available {available_w} W; no feasible schedule"
            ),
            SurrogateError::ChannelsNotNormalized => {
                write!(f, "surrogate construction expects noise-normalized channels")
            }
        }
    }
}

impl core::error::Error for SurrogateError {}

/// Current SPCA iterate: beamformer covariances and uplink powers in watts,
/// plus all auxiliary variables. Interference bounds (`inr_bound`) and SINR
/// floors are in noise-normalized units; rates are in nats.
#[derive(Debug, Clone)]
pub struct SpcaIterate {
    pub beams: BeamformerSet,
    pub powers: PowerSet,
    /// beta: downlink interference-plus-noise bound per DL UE per carrier.
    pub inr_bound: Vec<Vec<f64>>,
    /// t: rate epigraph values, nats.
    pub rate_dl: Vec<Vec<f64>>,
    pub rate_ul: Vec<Vec<f64>>,
    /// z: SINR floors.
    pub sinr_dl: Vec<Vec<f64>>,
    pub sinr_ul: Vec<Vec<f64>>,
    /// x: uplink amplitude, sqrt-watts.
    pub amp: Vec<Vec<f64>>,
    /// xi: AM-GM parameter per DL UE per carrier.
    pub xi: Vec<Vec<f64>>,
}

impl SpcaIterate {
    /// Network objective `||q_D||_2 + ||q_U||_2` in nats implied by the
    /// iterate's epigraph rates.
    pub fn objective_nats(&self, scenario: &Scenario) -> f64 {
        let q_dl: Vec<f64> = scenario
            .traffic
            .dl_backlog_bits
            .iter()
            .enumerate()
            .map(|(i, &q)| q * LN_2 - self.rate_dl[i].iter().sum::<f64>())
            .collect();
        let q_ul: Vec<f64> = scenario
            .traffic
            .ul_backlog_bits
            .iter()
            .enumerate()
            .map(|(j, &q)| q * LN_2 - self.rate_ul[j].iter().sum::<f64>())
            .collect();
        let norm = |v: &[f64]| crate::fmath::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        norm(&q_dl) + norm(&q_ul)
    }

    pub fn objective_bits(&self, scenario: &Scenario) -> f64 {
        self.objective_nats(scenario) / LN_2
    }
}

/// AM-GM upper bound `F(z, beta, xi) = beta^2/(2 xi) + xi z^2 / 2`.
///
/// `F >= z * beta` for every positive `xi`, with equality iff `xi = beta/z`.
pub fn amgm_bound(z: f64, beta: f64, xi: f64) -> Result<f64, SurrogateError> {
    if !(xi > 0.0) {
        return Err(SurrogateError::NonPositiveXi(xi));
    }
    Ok(beta * beta / (2.0 * xi) + xi * z * z / 2.0)
}

/// Tighten the AM-GM parameters at the iterate: `xi = beta / max(z, floor)`.
pub fn update_xi(iterate: &mut SpcaIterate) {
    for i in 0..iterate.xi.len() {
        for n in 0..iterate.xi[i].len() {
            let z = iterate.sinr_dl[i][n].max(XI_FLOOR);
            let beta = iterate.inr_bound[i][n];
            if beta > 0.0 {
                iterate.xi[i][n] = beta / z;
            }
        }
    }
}

/// The exact matrix-fractional function `x^2 * h^H X^{-1} h`.
pub fn matrix_fractional(x: f64, x_mat: &CMat, h: &[Complex64]) -> Result<f64, SurrogateError> {
    let chol = x_mat.cholesky().ok_or(SurrogateError::NotPositiveDefinite)?;
    let sol = chol.solve(h);
    let quad: f64 = h.iter().zip(sol.iter()).map(|(hi, si)| (hi.conj() * si).re).sum();
    Ok(x * x * quad)
}

/// Affine minorant of the matrix-fractional function at `(x0, X0)`:
///
/// `fhat(x, X) = f0 + 2 x0 g0 (x - x0) - x0^2 tr(X0^{-1} h h^H X0^{-1} (X - X0))`
///
/// Joint convexity of `f` makes `fhat <= f` everywhere with equality at the
/// expansion point.
#[derive(Debug, Clone)]
pub struct MfLinearization {
    /// Constant term when written as `constant + x_coeff * x + <x_matrix, X>`.
    pub constant: f64,
    pub x_coeff: f64,
    /// Hermitian coefficient of `X` (equals `-x0^2 X0^{-1} h h^H X0^{-1}`).
    pub x_matrix: CMat,
}

impl MfLinearization {
    pub fn eval(&self, x: f64, x_mat: &CMat) -> f64 {
        self.constant + self.x_coeff * x + self.x_matrix.inner(x_mat)
    }
}

pub fn linearize_matrix_fractional(
    x0: f64,
    x0_mat: &CMat,
    h: &[Complex64],
) -> Result<MfLinearization, SurrogateError> {
    let chol = x0_mat.cholesky().ok_or(SurrogateError::NotPositiveDefinite)?;
    let w = chol.solve(h); // X0^{-1} h
    let gamma0: f64 = h.iter().zip(w.iter()).map(|(hi, wi)| (hi.conj() * wi).re).sum();
    let f0 = x0 * x0 * gamma0;
    let x_coeff = 2.0 * x0 * gamma0;
    // G = X0^{-1} h h^H X0^{-1} = w w^H
    let mut g = CMat::outer(&w);
    g.hermitianize();
    let x_matrix = g.scale(-(x0 * x0));
    // constant chosen so fhat(x0, X0) = f0
    let constant = f0 - x_coeff * x0 - x_matrix.inner(x0_mat);
    Ok(MfLinearization { constant, x_coeff, x_matrix })
}

// ---------------------------------------------------------------------------
// iterate initialization
// ---------------------------------------------------------------------------

/// Compute all auxiliary variables self-consistently from `(beams, powers)`:
/// beta from the exact interference, `z` from the exact SINRs, `t = ln(1+z)`,
/// `x = sqrt(p)`, `xi = beta/z`.
pub fn iterate_from_solution(
    beams: BeamformerSet,
    powers: PowerSet,
    scenario: &Scenario,
    channels_norm: &ChannelSet,
) -> Result<SpcaIterate, SurrogateError> {
    if channels_norm.sigma2_ue != 1.0 || channels_norm.sigma2_sbs != 1.0 {
        return Err(SurrogateError::ChannelsNotNormalized);
    }
    let topo = &scenario.topology;
    let kd = beams.num_dl_ues();
    let ku = powers.p.len();
    let n_sub = scenario.config.num_subcarriers;
    let mut iterate = SpcaIterate {
        inr_bound: vec![vec![0.0; n_sub]; kd],
        rate_dl: vec![vec![0.0; n_sub]; kd],
        rate_ul: vec![vec![0.0; n_sub]; ku],
        sinr_dl: vec![vec![0.0; n_sub]; kd],
        sinr_ul: vec![vec![0.0; n_sub]; ku],
        amp: vec![vec![0.0; n_sub]; ku],
        xi: vec![vec![1.0; n_sub]; kd],
        beams,
        powers,
    };
    for i in 0..kd {
        for n in 0..n_sub {
            if !scenario.dl_carrier_active(n) {
                continue;
            }
            let serving = topo.dl_serving[i];
            let signal = iterate.beams.u[i][n].quad_form(&channels_norm.h_dl[serving][i][n]);
            let mut inr = 1.0; // normalized noise
            for k in 0..kd {
                if k == i {
                    continue;
                }
                inr += iterate.beams.u[k][n]
                    .quad_form(&channels_norm.h_dl[topo.dl_serving[k]][i][n]);
            }
            for (j, pj) in iterate.powers.p.iter().enumerate() {
                inr += pj[n] * channels_norm.g[j][i][n].norm_sqr();
            }
            let z = signal / inr;
            iterate.inr_bound[i][n] = inr;
            iterate.sinr_dl[i][n] = z;
            iterate.rate_dl[i][n] = crate::fmath::ln(1.0 + z);
            iterate.xi[i][n] = inr / z.max(XI_FLOOR);
        }
    }
    for b in 0..topo.num_cells() {
        let order = phy::default_sic_order(topo, b);
        for &j in &order {
            for n in 0..n_sub {
                if !scenario.ul_carrier_active(n) {
                    continue;
                }
                let z = phy::sinr_ul_mmse_sic(
                    j,
                    n,
                    &iterate.beams,
                    &iterate.powers,
                    channels_norm,
                    topo,
                    &order,
                )
                .map_err(|_| SurrogateError::NotPositiveDefinite)?;
                iterate.sinr_ul[j][n] = z;
                iterate.rate_ul[j][n] = crate::fmath::ln(1.0 + z);
                iterate.amp[j][n] = crate::fmath::sqrt(iterate.powers.p[j][n]);
            }
        }
    }
    Ok(iterate)
}

/// Build the first iterate: identity covariances at half the per-carrier
/// power share, uplink powers at half the per-carrier share, bisection-scaled
/// down until energy causality holds in Setups B and C.
pub fn initial_iterate(
    scenario: &Scenario,
    channels: &ChannelSet,
    channels_norm: &ChannelSet,
) -> Result<SpcaIterate, SurrogateError> {
    let topo = &scenario.topology;
    let cfg = &scenario.config;
    let kd = cfg.total_dl_ues();
    let ku = cfg.total_ul_ues();
    let n_sub = cfg.num_subcarriers;
    let n_dl_active = (0..n_sub).filter(|&n| scenario.dl_carrier_active(n)).count().max(1);
    let n_ul_active = (0..n_sub).filter(|&n| scenario.ul_carrier_active(n)).count().max(1);

    let build = |scale: f64| -> (BeamformerSet, PowerSet) {
        let mut beams = BeamformerSet::zeros(kd, n_sub, cfg.tx_antennas);
        for i in 0..kd {
            let cell_size = topo.dl_set(topo.dl_serving[i]).len().max(1);
            let level = scale * cfg.sbs_max_power_w
                / (2.0 * n_dl_active as f64 * cell_size as f64 * cfg.tx_antennas as f64);
            for n in 0..n_sub {
                if scenario.dl_carrier_active(n) {
                    beams.u[i][n] = CMat::scaled_identity(cfg.tx_antennas, level);
                }
            }
        }
        let mut powers = PowerSet::zeros(ku, n_sub);
        for j in 0..ku {
            for n in 0..n_sub {
                if scenario.ul_carrier_active(n) {
                    powers.p[j][n] = scale * cfg.ue_max_power_w / (2.0 * n_ul_active as f64);
                }
            }
        }
        (beams, powers)
    };

    let scale = if matches!(cfg.setup, Setup::A) {
        1.0
    } else {
        let avail = scenario.available_power();
        if let Some((cell, &a)) = avail.iter().enumerate().find(|(_, &a)| a < cfg.circuit_power_w)
        {
            return Err(SurrogateError::EnergyInfeasible {
                cell,
                circuit_w: cfg.circuit_power_w,
                available_w: a,
            });
        }
        let feasible = |s: f64| -> bool {
            let (beams, powers) = build(s);
            let Ok(report) = phy::rate_report(&beams, &powers, scenario, channels) else {
                return false;
            };
            (0..topo.num_cells()).all(|b| {
                phy::power_consumption(b, &beams, &report.rate_ul, scenario) <= avail[b] - 1e-9
            })
        };
        if feasible(1.0) {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // step safely inside the feasible region
            0.9 * lo
        }
    };
    let (beams, powers) = build(scale);
    iterate_from_solution(beams, powers, scenario, channels_norm)
}

// ---------------------------------------------------------------------------
// surrogate construction
// ---------------------------------------------------------------------------

/// Which slice of the network a surrogate covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// All cells, exact cross-cell terms (the centralized program).
    Network,
    /// One cell's variables. Cross-cell interference is replaced by local
    /// copy variables when `consensus_copies`, otherwise frozen at the
    /// iterate's values.
    Cell { b: usize, consensus_copies: bool },
}

/// Variable bookkeeping for reading solver output back into domain objects.
#[derive(Debug, Clone, Default)]
pub struct VariableLayout {
    pub u: BTreeMap<(usize, usize), BlockId>,
    pub p: BTreeMap<(usize, usize), VarId>,
    pub beta: BTreeMap<(usize, usize), VarId>,
    pub t_dl: BTreeMap<(usize, usize), VarId>,
    pub t_ul: BTreeMap<(usize, usize), VarId>,
    pub z_dl: BTreeMap<(usize, usize), VarId>,
    pub z_ul: BTreeMap<(usize, usize), VarId>,
    pub x: BTreeMap<(usize, usize), VarId>,
}

/// Consensus-copy variable ids of one cell's subproblem.
///
/// "Caused" copies bound the interference this cell produces toward a foreign
/// victim UE; "received" copies stand in for the interference a foreign
/// producer cell inflicts on this cell's own UEs. Keys are
/// `(producer cell, victim UE, carrier)` with the redundant producer/victim
/// index dropped where implied.
#[derive(Debug, Clone, Default)]
pub struct CopyIds {
    /// (victim foreign DL UE i, n) -> psi caused by this cell
    pub psi_caused: BTreeMap<(usize, usize), VarId>,
    pub phi_caused: BTreeMap<(usize, usize), VarId>,
    /// (victim foreign UL UE j, n) -> covariance copies caused by this cell
    pub psi_mat_caused: BTreeMap<(usize, usize), BlockId>,
    pub phi_mat_caused: BTreeMap<(usize, usize), BlockId>,
    /// (producer cell, own DL UE i, n) -> received interference copies
    pub psi_recv: BTreeMap<(usize, usize, usize), VarId>,
    pub phi_recv: BTreeMap<(usize, usize, usize), VarId>,
    /// (producer cell, own UL UE j, n) -> received covariance copies
    pub psi_mat_recv: BTreeMap<(usize, usize, usize), BlockId>,
    pub phi_mat_recv: BTreeMap<(usize, usize, usize), BlockId>,
}

#[derive(Debug, Clone)]
pub struct SurrogateProblem {
    pub program: ConicProgram,
    pub layout: VariableLayout,
    pub copies: CopyIds,
    pub scope: Scope,
}

impl SurrogateProblem {
    /// Read the solver output back into a full iterate, keeping entries that
    /// are outside this surrogate's scope (masked carriers, foreign cells)
    /// from `previous`.
    pub fn extract_iterate(&self, solution: &Solution, previous: &SpcaIterate) -> SpcaIterate {
        let mut next = previous.clone();
        let y = &solution.y;
        for (&(i, n), &blk) in &self.layout.u {
            next.beams.u[i][n] = self.program.block_matrix(blk, y);
        }
        for (&(j, n), &id) in &self.layout.p {
            next.powers.p[j][n] = y[id];
        }
        for (&(i, n), &id) in &self.layout.beta {
            next.inr_bound[i][n] = y[id];
        }
        for (&(i, n), &id) in &self.layout.t_dl {
            next.rate_dl[i][n] = y[id];
        }
        for (&(j, n), &id) in &self.layout.t_ul {
            next.rate_ul[j][n] = y[id];
        }
        for (&(i, n), &id) in &self.layout.z_dl {
            next.sinr_dl[i][n] = y[id];
        }
        for (&(j, n), &id) in &self.layout.z_ul {
            next.sinr_ul[j][n] = y[id];
        }
        for (&(j, n), &id) in &self.layout.x {
            next.amp[j][n] = y[id];
        }
        next
    }

    fn own_cell(&self) -> usize {
        match self.scope {
            Scope::Cell { b, .. } => b,
            Scope::Network => panic!("consensus copies only exist in per-cell scope"),
        }
    }

    /// Warm-start vector at the iterate (copies start at the interference
    /// they bound, which is their consensus-consistent value).
    pub fn warm_start(
        &self,
        iterate: &SpcaIterate,
        scenario: &Scenario,
        channels_norm: &ChannelSet,
    ) -> Vec<f64> {
        let mut y = vec![0.0; self.program.num_vars()];
        let put_block = |y: &mut Vec<f64>, blk: BlockId, m: &CMat| {
            let def = self.program.block(blk);
            let coords = ConicProgram::block_coords(m);
            y[def.first..def.first + coords.len()].copy_from_slice(&coords);
        };
        for (&(i, n), &blk) in &self.layout.u {
            put_block(&mut y, blk, &iterate.beams.u[i][n]);
        }
        for (&(j, n), &id) in &self.layout.p {
            y[id] = iterate.powers.p[j][n];
        }
        for (&(i, n), &id) in &self.layout.beta {
            y[id] = iterate.inr_bound[i][n];
        }
        for (&(i, n), &id) in &self.layout.t_dl {
            y[id] = iterate.rate_dl[i][n];
        }
        for (&(j, n), &id) in &self.layout.t_ul {
            y[id] = iterate.rate_ul[j][n];
        }
        for (&(i, n), &id) in &self.layout.z_dl {
            y[id] = iterate.sinr_dl[i][n];
        }
        for (&(j, n), &id) in &self.layout.z_ul {
            y[id] = iterate.sinr_ul[j][n];
        }
        for (&(j, n), &id) in &self.layout.x {
            y[id] = iterate.amp[j][n];
        }
        let topo = &scenario.topology;
        if !self.copies.psi_caused.is_empty()
            || !self.copies.psi_mat_caused.is_empty()
            || !self.copies.psi_recv.is_empty()
        {
            let own = self.own_cell();
            for (&(i, n), &id) in &self.copies.psi_caused {
                y[id] = caused_dl_interference(iterate, topo, channels_norm, own, i, n);
            }
            for (&(i, n), &id) in &self.copies.phi_caused {
                y[id] = caused_ul_interference(iterate, topo, channels_norm, own, i, n);
            }
            for (&(j, n), &blk) in &self.copies.psi_mat_caused {
                let m = caused_ul_covariance(iterate, topo, channels_norm, own, j, n);
                put_block(&mut y, blk, &m);
            }
            for (&(j, n), &blk) in &self.copies.phi_mat_caused {
                let m = caused_dl_covariance(iterate, topo, channels_norm, own, j, n);
                put_block(&mut y, blk, &m);
            }
            for (&(src, i, n), &id) in &self.copies.psi_recv {
                y[id] = caused_dl_interference(iterate, topo, channels_norm, src, i, n);
            }
            for (&(src, i, n), &id) in &self.copies.phi_recv {
                y[id] = caused_ul_interference(iterate, topo, channels_norm, src, i, n);
            }
            for (&(src, j, n), &blk) in &self.copies.psi_mat_recv {
                let m = caused_ul_covariance(iterate, topo, channels_norm, src, j, n);
                put_block(&mut y, blk, &m);
            }
            for (&(src, j, n), &blk) in &self.copies.phi_mat_recv {
                let m = caused_dl_covariance(iterate, topo, channels_norm, src, j, n);
                put_block(&mut y, blk, &m);
            }
        }
        y
    }
}

/// Interference produced by cell `src`'s downlink onto DL UE `i` (scalar,
/// normalized units): `sum_{k in D_src} h^H U_k h`.
pub fn caused_dl_interference(
    iterate: &SpcaIterate,
    topo: &crate::scenario::Topology,
    ch: &ChannelSet,
    src: usize,
    i: usize,
    n: usize,
) -> f64 {
    topo.dl_set(src)
        .iter()
        .map(|&k| iterate.beams.u[k][n].quad_form(&ch.h_dl[src][i][n]))
        .sum()
}

/// Interference produced by cell `src`'s uplink UEs onto DL UE `i`.
pub fn caused_ul_interference(
    iterate: &SpcaIterate,
    topo: &crate::scenario::Topology,
    ch: &ChannelSet,
    src: usize,
    i: usize,
    n: usize,
) -> f64 {
    topo.ul_set(src)
        .iter()
        .map(|&l| iterate.powers.p[l][n] * ch.g[l][i][n].norm_sqr())
        .sum()
}

/// Covariance of the interference produced by cell `src`'s uplink UEs at the
/// serving SBS of UL UE `j`.
pub fn caused_ul_covariance(
    iterate: &SpcaIterate,
    topo: &crate::scenario::Topology,
    ch: &ChannelSet,
    src: usize,
    j: usize,
    n: usize,
) -> CMat {
    let victim_bs = topo.ul_serving[j];
    let mr = ch.h_ul[victim_bs][j][n].len();
    let mut m = CMat::zeros(mr, mr);
    for &l in &topo.ul_set(src) {
        m.add_scaled(&CMat::outer(&ch.h_ul[victim_bs][l][n]), iterate.powers.p[l][n]);
    }
    m.hermitianize();
    m
}

/// Covariance of the interference produced by cell `src`'s downlink (through
/// the SBS-to-SBS channel) at the serving SBS of UL UE `j`.
pub fn caused_dl_covariance(
    iterate: &SpcaIterate,
    topo: &crate::scenario::Topology,
    ch: &ChannelSet,
    src: usize,
    j: usize,
    n: usize,
) -> CMat {
    let victim_bs = topo.ul_serving[j];
    let hm = &ch.h_bs[victim_bs][src][n];
    let mut m = CMat::zeros(hm.rows, hm.rows);
    for &k in &topo.dl_set(src) {
        m.add_scaled(&hm.congruence(&iterate.beams.u[k][n]), 1.0);
    }
    m.hermitianize();
    m
}

/// Build the convex restriction around `iterate`.
///
/// `channels_norm` must be noise-normalized (see [`ChannelSet::normalized`]).
/// In `Scope::Network` mode the program is the full centralized surrogate;
/// in `Scope::Cell` mode it contains one cell's variables, with cross-cell
/// interference either frozen at the iterate or represented by consensus
/// copies (constraints only; the ADMM module appends multiplier and penalty
/// objective terms).
pub fn build_surrogate(
    iterate: &SpcaIterate,
    scenario: &Scenario,
    channels_norm: &ChannelSet,
    scope: Scope,
) -> Result<SurrogateProblem, SurrogateError> {
    if channels_norm.sigma2_ue != 1.0 || channels_norm.sigma2_sbs != 1.0 {
        return Err(SurrogateError::ChannelsNotNormalized);
    }
    let topo = &scenario.topology;
    let cfg = &scenario.config;
    let kd = cfg.total_dl_ues();
    let ku = cfg.total_ul_ues();
    let n_sub = cfg.num_subcarriers;
    if iterate.beams.num_dl_ues() != kd || iterate.powers.p.len() != ku {
        return Err(SurrogateError::DimensionMismatch(format!(
            "iterate sized {}x{} for a {kd}x{ku} scenario",
            iterate.beams.num_dl_ues(),
            iterate.powers.p.len()
        )));
    }

    let cells: Vec<usize> = match scope {
        Scope::Network => (0..topo.num_cells()).collect(),
        Scope::Cell { b, .. } => vec![b],
    };
    let in_scope_dl = |i: usize| cells.contains(&topo.dl_serving[i]);
    let in_scope_ul = |j: usize| cells.contains(&topo.ul_serving[j]);
    let use_copies = matches!(scope, Scope::Cell { consensus_copies: true, .. });

    let mut prog = ConicProgram::new();
    let mut layout = VariableLayout::default();
    let mut copies = CopyIds::default();

    // --- variables ---
    for i in (0..kd).filter(|&i| in_scope_dl(i)) {
        for n in (0..n_sub).filter(|&n| scenario.dl_carrier_active(n)) {
            layout.u.insert((i, n), prog.add_psd_block(&format!("U[{i},{n}]"), cfg.tx_antennas));
            layout.beta.insert((i, n), prog.add_var(format!("beta[{i},{n}]")));
            layout.t_dl.insert((i, n), prog.add_var_lb(format!("t_dl[{i},{n}]"), 0.0));
            layout.z_dl.insert((i, n), prog.add_var_lb(format!("z_dl[{i},{n}]"), 0.0));
        }
    }
    for j in (0..ku).filter(|&j| in_scope_ul(j)) {
        for n in (0..n_sub).filter(|&n| scenario.ul_carrier_active(n)) {
            layout.p.insert((j, n), prog.add_var_lb(format!("p[{j},{n}]"), 0.0));
            layout.t_ul.insert((j, n), prog.add_var_lb(format!("t_ul[{j},{n}]"), 0.0));
            layout.z_ul.insert((j, n), prog.add_var_lb(format!("z_ul[{j},{n}]"), 0.0));
            layout.x.insert((j, n), prog.add_var_lb(format!("x[{j},{n}]"), 0.0));
        }
    }
    if use_copies {
        let b = cells[0];
        for i in (0..kd).filter(|&i| !in_scope_dl(i)) {
            for n in (0..n_sub).filter(|&n| scenario.dl_carrier_active(n)) {
                copies.psi_caused.insert((i, n), prog.add_var_lb(format!("psi_c[{i},{n}]"), 0.0));
                copies.phi_caused.insert((i, n), prog.add_var_lb(format!("phi_c[{i},{n}]"), 0.0));
            }
        }
        for j in (0..ku).filter(|&j| !in_scope_ul(j)) {
            for n in (0..n_sub).filter(|&n| scenario.ul_carrier_active(n)) {
                copies.psi_mat_caused.insert(
                    (j, n),
                    prog.add_psd_block(&format!("PsiC[{j},{n}]"), cfg.rx_antennas),
                );
                copies.phi_mat_caused.insert(
                    (j, n),
                    prog.add_psd_block(&format!("PhiC[{j},{n}]"), cfg.rx_antennas),
                );
            }
        }
        for src in (0..topo.num_cells()).filter(|&s| s != b) {
            for i in topo.dl_set(b) {
                for n in (0..n_sub).filter(|&n| scenario.dl_carrier_active(n)) {
                    copies
                        .psi_recv
                        .insert((src, i, n), prog.add_var_lb(format!("psi_r[{src},{i},{n}]"), 0.0));
                    copies
                        .phi_recv
                        .insert((src, i, n), prog.add_var_lb(format!("phi_r[{src},{i},{n}]"), 0.0));
                }
            }
            for j in topo.ul_set(b) {
                for n in (0..n_sub).filter(|&n| scenario.ul_carrier_active(n)) {
                    copies.psi_mat_recv.insert(
                        (src, j, n),
                        prog.add_psd_block(&format!("PsiR[{src},{j},{n}]"), cfg.rx_antennas),
                    );
                    copies.phi_mat_recv.insert(
                        (src, j, n),
                        prog.add_psd_block(&format!("PhiR[{src},{j},{n}]"), cfg.rx_antennas),
                    );
                }
            }
        }
    }

    // --- downlink constraints ---
    for (&(i, n), &u_blk) in &layout.u {
        let b = topo.dl_serving[i];
        let beta = layout.beta[&(i, n)];
        let z = layout.z_dl[&(i, n)];
        let t = layout.t_dl[&(i, n)];
        let xi = iterate.xi[i][n].max(XI_FLOOR);

        // signal >= F(z, beta, xi): SOC encoding of
        //   beta^2/(2 xi) + xi z^2 / 2 <= q  with q = h^H U h
        let q = prog.quad_form_expr(u_blk, &channels_norm.h_dl[b][i][n]);
        let mut half_minus = AffExpr::constant(-0.5);
        half_minus.add_expr(&q, 0.5);
        let rows = vec![
            AffExpr::term(beta, 1.0 / crate::fmath::sqrt(2.0 * xi)),
            AffExpr::term(z, crate::fmath::sqrt(xi / 2.0)),
            half_minus,
        ];
        let mut rhs = AffExpr::constant(0.5);
        rhs.add_expr(&q, 0.5);
        prog.add_soc(format!("dl_signal[{i},{n}]"), rows, rhs);

        // interference-plus-noise <= beta
        let mut inr = AffExpr::constant(channels_norm.sigma2_ue);
        for k in 0..kd {
            if k == i {
                continue;
            }
            if let Some(&k_blk) = layout.u.get(&(k, n)) {
                inr.add_expr(
                    &prog.quad_form_expr(k_blk, &channels_norm.h_dl[topo.dl_serving[k]][i][n]),
                    1.0,
                );
            }
        }
        for j in 0..ku {
            if let Some(&p_id) = layout.p.get(&(j, n)) {
                inr.add_term(p_id, channels_norm.g[j][i][n].norm_sqr());
            }
        }
        match scope {
            Scope::Network => {}
            Scope::Cell { b: own, consensus_copies } => {
                for src in (0..topo.num_cells()).filter(|&s| s != own) {
                    if consensus_copies {
                        inr.add_term(copies.psi_recv[&(src, i, n)], 1.0);
                        inr.add_term(copies.phi_recv[&(src, i, n)], 1.0);
                    } else {
                        inr.add_constant(caused_dl_interference(
                            iterate, topo, channels_norm, src, i, n,
                        ));
                        inr.add_constant(caused_ul_interference(
                            iterate, topo, channels_norm, src, i, n,
                        ));
                    }
                }
            }
        }
        inr.add_term(beta, -1.0);
        prog.add_affine(format!("dl_inr[{i},{n}]"), inr);

        // e^t <= 1 + z
        prog.add_exp_epigraph(format!("dl_rate[{i},{n}]"), AffExpr::var(t), AffExpr::var(z));
    }

    // --- uplink constraints ---
    for (&(j, n), &x_id) in &layout.x {
        let b = topo.ul_serving[j];
        let z = layout.z_ul[&(j, n)];
        let t = layout.t_ul[&(j, n)];
        let p_id = layout.p[&(j, n)];

        // linearized SINR floor: z <= fhat(x, X)
        let order = phy::default_sic_order(topo, b);
        let x0_mat = phy::ul_interference_matrix(
            j,
            n,
            &iterate.beams,
            &iterate.powers,
            channels_norm,
            topo,
            &order,
        )
        .map_err(|_| SurrogateError::NotPositiveDefinite)?;
        let h = &channels_norm.h_ul[b][j][n];
        let lin = linearize_matrix_fractional(iterate.amp[j][n], &x0_mat, h)?;

        // fhat as an affine expression: constant + x term + <x_matrix, X(y)>
        // where X(y) = I + own residual UL + all DL covariances (+ copies)
        let mut fhat = AffExpr::constant(lin.constant);
        fhat.add_term(x_id, lin.x_coeff);
        fhat.add_constant(lin.x_matrix.trace().re); // <M, sigma^2 I>, sigma^2 = 1
        let pos = order.iter().position(|&l| l == j).expect("ue in own cell order");
        for &l in &order[pos + 1..] {
            if let Some(&pl) = layout.p.get(&(l, n)) {
                fhat.add_term(pl, lin.x_matrix.quad_form(&channels_norm.h_ul[b][l][n]));
            }
        }
        for l in (0..ku).filter(|&l| topo.ul_serving[l] != b) {
            if matches!(scope, Scope::Network) {
                fhat.add_term(
                    layout.p[&(l, n)],
                    lin.x_matrix.quad_form(&channels_norm.h_ul[b][l][n]),
                );
            }
        }
        for i in 0..kd {
            let src = topo.dl_serving[i];
            if let Some(&u_blk) = layout.u.get(&(i, n)) {
                let hm = &channels_norm.h_bs[b][src][n];
                let mut g_herm = hm.adjoint().matmul(&lin.x_matrix).matmul(hm);
                g_herm.hermitianize();
                fhat.add_expr(&prog.herm_inner_expr(u_blk, &g_herm), 1.0);
            }
        }
        match scope {
            Scope::Network => {}
            Scope::Cell { b: own, consensus_copies } => {
                for src in (0..topo.num_cells()).filter(|&s| s != own) {
                    if consensus_copies {
                        let psi_blk = copies.psi_mat_recv[&(src, j, n)];
                        let phi_blk = copies.phi_mat_recv[&(src, j, n)];
                        fhat.add_expr(&prog.herm_inner_expr(psi_blk, &lin.x_matrix), 1.0);
                        fhat.add_expr(&prog.herm_inner_expr(phi_blk, &lin.x_matrix), 1.0);
                    } else {
                        let psi = caused_ul_covariance(iterate, topo, channels_norm, src, j, n);
                        let phi = caused_dl_covariance(iterate, topo, channels_norm, src, j, n);
                        fhat.add_constant(lin.x_matrix.inner(&psi) + lin.x_matrix.inner(&phi));
                    }
                }
            }
        }
        let mut con = AffExpr::var(z);
        con.add_expr(&fhat, -1.0);
        prog.add_affine(format!("ul_sinr[{j},{n}]"), con);

        // e^t <= 1 + z
        prog.add_exp_epigraph(format!("ul_rate[{j},{n}]"), AffExpr::var(t), AffExpr::var(z));

        // x^2 <= p as a second-order cone
        let mut pm = AffExpr::term(p_id, 0.5);
        pm.add_constant(-0.5);
        let mut pp = AffExpr::term(p_id, 0.5);
        pp.add_constant(0.5);
        prog.add_soc(format!("ul_amp[{j},{n}]"), vec![AffExpr::var(x_id), pm], pp);
    }

    // --- caused-copy dominance constraints (consensus mode only) ---
    if use_copies {
        let own = cells[0];
        for (&(i, n), &psi_id) in &copies.psi_caused {
            let mut expr = AffExpr::default();
            for &k in &topo.dl_set(own) {
                if let Some(&k_blk) = layout.u.get(&(k, n)) {
                    expr.add_expr(&prog.quad_form_expr(k_blk, &channels_norm.h_dl[own][i][n]), 1.0);
                }
            }
            expr.add_term(psi_id, -1.0);
            prog.add_affine(format!("caused_dl[{i},{n}]"), expr);
        }
        for (&(i, n), &phi_id) in &copies.phi_caused {
            let mut expr = AffExpr::default();
            for &l in &topo.ul_set(own) {
                if let Some(&pl) = layout.p.get(&(l, n)) {
                    expr.add_term(pl, channels_norm.g[l][i][n].norm_sqr());
                }
            }
            expr.add_term(phi_id, -1.0);
            prog.add_affine(format!("caused_ul[{i},{n}]"), expr);
        }
        for (&(j, n), &psi_blk) in &copies.psi_mat_caused {
            // Psi >= sum_l p_l h h^H at the victim's serving SBS
            let victim_bs = topo.ul_serving[j];
            let mut coeffs = prog.block_basis(psi_blk);
            for &l in &topo.ul_set(own) {
                if let Some(&pl) = layout.p.get(&(l, n)) {
                    coeffs.push((pl, CMat::outer(&channels_norm.h_ul[victim_bs][l][n]).scale(-1.0)));
                }
            }
            prog.add_psd(
                format!("caused_ul_cov[{j},{n}]"),
                cfg.rx_antennas,
                CMat::zeros(cfg.rx_antennas, cfg.rx_antennas),
                coeffs,
            );
        }
        for (&(j, n), &phi_blk) in &copies.phi_mat_caused {
            // Phi >= sum_k H U_k H^H through the victim's SBS-to-SBS channel
            let victim_bs = topo.ul_serving[j];
            let hm = &channels_norm.h_bs[victim_bs][own][n];
            let mut coeffs = prog.block_basis(phi_blk);
            for &k in &topo.dl_set(own) {
                if let Some(&k_blk) = layout.u.get(&(k, n)) {
                    for (id, c) in prog.congruence_basis(k_blk, hm) {
                        coeffs.push((id, c.scale(-1.0)));
                    }
                }
            }
            prog.add_psd(
                format!("caused_dl_cov[{j},{n}]"),
                cfg.rx_antennas,
                CMat::zeros(cfg.rx_antennas, cfg.rx_antennas),
                coeffs,
            );
        }
    }

    // --- per-cell power and energy budgets ---
    let avail = scenario.available_power();
    for &b in &cells {
        let mut tx = AffExpr::default();
        for &i in &topo.dl_set(b) {
            for n in 0..n_sub {
                if let Some(&u_blk) = layout.u.get(&(i, n)) {
                    tx.add_expr(&prog.trace_expr(u_blk), 1.0);
                }
            }
        }
        let mut dl_power = tx.clone();
        dl_power.add_constant(-cfg.sbs_max_power_w);
        prog.add_affine(format!("dl_power[b={b}]"), dl_power);

        if !matches!(cfg.setup, Setup::A) {
            // circuit + decode + transmit <= available; alpha converted from
            // per-bit to per-nat
            let alpha_nat = cfg.effective_alpha() / LN_2;
            let mut energy = tx;
            energy.add_constant(cfg.circuit_power_w - avail[b]);
            for &j in &topo.ul_set(b) {
                for n in 0..n_sub {
                    if let Some(&t_id) = layout.t_ul.get(&(j, n)) {
                        energy.add_term(t_id, alpha_nat);
                    }
                }
            }
            prog.add_affine(format!("energy[b={b}]"), energy);
        }
    }

    // per-UE uplink power budgets
    for j in (0..ku).filter(|&j| in_scope_ul(j)) {
        let mut total = AffExpr::constant(-cfg.ue_max_power_w);
        for n in 0..n_sub {
            if let Some(&p_id) = layout.p.get(&(j, n)) {
                total.add_term(p_id, 1.0);
            }
        }
        prog.add_affine(format!("ul_power[j={j}]"), total);
    }

    // --- objective: per-scope queue-deviation norms (nats) ---
    let mut dl_rows = Vec::new();
    for i in (0..kd).filter(|&i| in_scope_dl(i)) {
        let mut q = AffExpr::constant(scenario.traffic.dl_backlog_bits[i] * LN_2);
        for n in 0..n_sub {
            if let Some(&t_id) = layout.t_dl.get(&(i, n)) {
                q.add_term(t_id, -1.0);
            }
        }
        dl_rows.push(q);
    }
    let mut ul_rows = Vec::new();
    for j in (0..ku).filter(|&j| in_scope_ul(j)) {
        let mut q = AffExpr::constant(scenario.traffic.ul_backlog_bits[j] * LN_2);
        for n in 0..n_sub {
            if let Some(&t_id) = layout.t_ul.get(&(j, n)) {
                q.add_term(t_id, -1.0);
            }
        }
        ul_rows.push(q);
    }
    prog.objective = Objective { norms: vec![dl_rows, ul_rows], ..Objective::default() };

    Ok(SurrogateProblem { program: prog, layout, copies, scope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channels;
    use crate::scenario::{Duplex, ScenarioConfig};
    use crate::solver::{solve_warm, Constraint, SolveStatus};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn amgm_examples() {
        // equality at xi = beta / z
        assert_eq!(amgm_bound(2.0, 4.0, 2.0).unwrap(), 8.0);
        // strict upper bound
        assert_eq!(amgm_bound(1.0, 1.0, 4.0).unwrap(), 0.125 + 2.0);
        assert_eq!(amgm_bound(3.0, 2.0, 1.0).unwrap(), 2.0 + 4.5);
        assert!(amgm_bound(3.0, 2.0, 1.0).unwrap() >= 6.0);
        assert!(amgm_bound(1.0, 1.0, 0.0).is_err());
        assert!(amgm_bound(1.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn update_xi_tightens_bound() {
        let mut iterate = SpcaIterate {
            beams: BeamformerSet::zeros(1, 1, 2),
            powers: PowerSet::zeros(1, 1),
            inr_bound: vec![vec![4.0]],
            rate_dl: vec![vec![0.0]],
            rate_ul: vec![vec![0.0]],
            sinr_dl: vec![vec![2.0]],
            sinr_ul: vec![vec![0.0]],
            amp: vec![vec![0.0]],
            xi: vec![vec![1.0]],
        };
        update_xi(&mut iterate);
        assert_eq!(iterate.xi[0][0], 2.0);
        let f = amgm_bound(2.0, 4.0, iterate.xi[0][0]).unwrap();
        assert!((f - 8.0).abs() < 1e-12, "tight after update");

        // z = 0 caps at beta / floor and the bound still holds
        iterate.sinr_dl[0][0] = 0.0;
        update_xi(&mut iterate);
        assert_eq!(iterate.xi[0][0], 4.0 / XI_FLOOR);
        assert!(amgm_bound(0.0, 4.0, iterate.xi[0][0]).unwrap() >= 0.0);
    }

    #[test]
    fn matrix_fractional_examples() {
        let h2 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!((matrix_fractional(2.0, &CMat::identity(2), &h2).unwrap() - 4.0).abs() < 1e-12);

        let mut diag = CMat::zeros(2, 2);
        diag[(0, 0)] = Complex64::new(2.0, 0.0);
        diag[(1, 1)] = Complex64::new(1.0, 0.0);
        let h11 = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        // direct inversion: 1/2 + 1 = 1.5
        assert!((matrix_fractional(1.0, &diag, &h11).unwrap() - 1.5).abs() < 1e-12);

        assert_eq!(matrix_fractional(0.0, &CMat::identity(2), &h2).unwrap(), 0.0);

        let mut indef = CMat::identity(2);
        indef[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(matrix_fractional(1.0, &indef, &h2).is_err());
    }

    fn random_pd(rng: &mut ChaCha8Rng, dim: usize) -> CMat {
        let g = CMat::from_fn(dim, dim, |_, _| crate::linalg::complex_normal(rng));
        let mut m = g.matmul(&g.adjoint());
        m.add_scaled(&CMat::identity(dim), 0.05);
        m.hermitianize();
        m
    }

    #[test]
    fn linearization_matches_at_expansion_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let x0_mat = random_pd(&mut rng, 2);
            let h: Vec<Complex64> =
                (0..2).map(|_| crate::linalg::complex_normal(&mut rng)).collect();
            let x0 = rng.gen::<f64>() + 0.1;
            let lin = linearize_matrix_fractional(x0, &x0_mat, &h).unwrap();
            let f0 = matrix_fractional(x0, &x0_mat, &h).unwrap();
            assert!((lin.eval(x0, &x0_mat) - f0).abs() < 1e-10 * (1.0 + f0.abs()));
        }
    }

    #[test]
    fn linearization_is_global_minorant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let x0_mat = random_pd(&mut rng, 2);
            let h: Vec<Complex64> =
                (0..2).map(|_| crate::linalg::complex_normal(&mut rng)).collect();
            let x0 = rng.gen::<f64>() + 0.05;
            let lin = linearize_matrix_fractional(x0, &x0_mat, &h).unwrap();
            for _ in 0..200 {
                let x_mat = random_pd(&mut rng, 2);
                let x = rng.gen::<f64>() * 3.0;
                let f = matrix_fractional(x, &x_mat, &h).unwrap();
                let fhat = lin.eval(x, &x_mat);
                assert!(fhat <= f + 1e-9 * (1.0 + f.abs()), "fhat {fhat} > f {f}");
            }
        }
    }

    #[test]
    fn linearization_at_zero_amplitude_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x0_mat = random_pd(&mut rng, 2);
        let h: Vec<Complex64> = (0..2).map(|_| crate::linalg::complex_normal(&mut rng)).collect();
        let lin = linearize_matrix_fractional(0.0, &x0_mat, &h).unwrap();
        for _ in 0..20 {
            let x_mat = random_pd(&mut rng, 2);
            let x = rng.gen::<f64>() * 5.0;
            assert!(lin.eval(x, &x_mat).abs() < 1e-14);
        }
    }

    fn tiny_scenario(setup: Setup) -> (Scenario, ChannelSet, ChannelSet) {
        let config = ScenarioConfig {
            num_sbs: 1,
            dl_ues_per_cell: 1,
            ul_ues_per_cell: 1,
            num_subcarriers: 1,
            setup,
            seed: 3,
            ..ScenarioConfig::default()
        };
        let scenario = Scenario::generate(config).unwrap();
        let channels = draw_channels(&scenario.topology, &scenario.config);
        let norm = channels.normalized();
        (scenario, channels, norm)
    }

    #[test]
    fn constraint_census_single_link() {
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        let count = |prefix: &str| {
            sp.program.constraints.iter().filter(|c| c.label.starts_with(prefix)).count()
        };
        assert_eq!(count("dl_signal"), 1);
        assert_eq!(count("ul_sinr"), 1);
        assert_eq!(count("dl_power"), 1);
        assert_eq!(count("energy"), 1);
        assert_eq!(count("dl_rate"), 1);
        assert_eq!(count("dl_inr"), 1);
        assert_eq!(count("ul_rate"), 1);
        assert_eq!(count("ul_amp"), 1);
        // carried over: UL budget, PSD block, p >= 0
        assert_eq!(count("ul_power"), 1);
        assert_eq!(count("psd[U"), 1);
        assert_eq!(count("lb[p"), 1);
    }

    #[test]
    fn setup_a_omits_energy_constraint() {
        let (scenario, channels, norm) = tiny_scenario(Setup::A);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        assert!(sp.program.constraints.iter().all(|c| !c.label.starts_with("energy")));
    }

    #[test]
    fn setup_b_keeps_energy_without_decode_term() {
        let (scenario, channels, norm) = tiny_scenario(Setup::B);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        let energy = sp
            .program
            .constraints
            .iter()
            .find(|c| c.label.starts_with("energy"))
            .expect("energy constraint present in Setup B");
        let t_ul = sp.layout.t_ul[&(0, 0)];
        if let Constraint::Affine { expr } = &energy.kind {
            assert!(
                expr.terms.iter().all(|&(id, w)| id != t_ul || w == 0.0),
                "decode term must vanish when alpha is forced to zero"
            );
        } else {
            panic!("energy constraint should be affine");
        }
    }

    #[test]
    fn initial_iterate_is_feasible_and_self_consistent() {
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let report =
            phy::validate_solution(&iterate.beams, &iterate.powers, &scenario, &channels).unwrap();
        assert!(report.feasible, "{:?}", report.entries);
        // z matches the physical SINR computed from unnormalized channels
        let g = phy::sinr_dl(0, 0, &iterate.beams, &iterate.powers, &channels, &scenario.topology);
        assert!((iterate.sinr_dl[0][0] / g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn energy_infeasible_scenario_is_reported() {
        let config = ScenarioConfig {
            num_sbs: 1,
            dl_ues_per_cell: 1,
            ul_ues_per_cell: 1,
            harvest_power_w: 0.1,
            leftover_power_w: 0.1,
            setup: Setup::C,
            ..ScenarioConfig::default()
        };
        let scenario = Scenario::generate(config).unwrap();
        let channels = draw_channels(&scenario.topology, &scenario.config);
        let norm = channels.normalized();
        let err = initial_iterate(&scenario, &channels, &norm).unwrap_err();
        assert!(matches!(err, SurrogateError::EnergyInfeasible { .. }));
    }

    #[test]
    fn surrogate_solution_respects_physical_sinrs() {
        // any surrogate-feasible point must satisfy gamma >= z on both links
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        let warm = sp.warm_start(&iterate, &scenario, &norm);
        let sol = solve_warm(&sp.program, 1e-7, Some(&warm)).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "kkt: {:?}", sol.kkt);
        let next = sp.extract_iterate(&sol, &iterate);
        let g_dl = phy::sinr_dl(0, 0, &next.beams, &next.powers, &channels, &scenario.topology);
        assert!(g_dl >= next.sinr_dl[0][0] - 1e-6 * (1.0 + g_dl));
        let order = phy::default_sic_order(&scenario.topology, 0);
        let g_ul = phy::sinr_ul_mmse_sic(
            0, 0, &next.beams, &next.powers, &channels, &scenario.topology, &order,
        )
        .unwrap();
        assert!(g_ul >= next.sinr_ul[0][0] - 1e-6 * (1.0 + g_ul));
    }

    #[test]
    fn spca_objective_descends_on_tiny_instance() {
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let mut iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let mut prev_obj = f64::INFINITY;
        for _round in 0..4 {
            update_xi(&mut iterate);
            let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
            let warm = sp.warm_start(&iterate, &scenario, &norm);
            let sol = solve_warm(&sp.program, 1e-7, Some(&warm)).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!(
                sol.objective <= prev_obj + 1e-6,
                "objective rose: {prev_obj} -> {}",
                sol.objective
            );
            prev_obj = sol.objective;
            iterate = sp.extract_iterate(&sol, &iterate);
        }
    }

    #[test]
    fn surrogate_program_survives_dump_roundtrip() {
        use crate::solver::dump::{parse_program, write_program};
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        let text = write_program(&sp.program);
        let back = parse_program(&text).unwrap();
        assert_eq!(sp.program, back);
        let warm = sp.warm_start(&iterate, &scenario, &norm);
        let a = solve_warm(&sp.program, 1e-7, Some(&warm)).unwrap();
        let b = solve_warm(&back, 1e-7, Some(&warm)).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn per_cell_scope_freezes_foreign_interference() {
        let config = ScenarioConfig {
            num_sbs: 2,
            dl_ues_per_cell: 1,
            ul_ues_per_cell: 1,
            num_subcarriers: 1,
            setup: Setup::C,
            seed: 13,
            ..ScenarioConfig::default()
        };
        let scenario = Scenario::generate(config).unwrap();
        let channels = draw_channels(&scenario.topology, &scenario.config);
        let norm = channels.normalized();
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(
            &iterate,
            &scenario,
            &norm,
            Scope::Cell { b: 0, consensus_copies: false },
        )
        .unwrap();
        // only cell 0's variables, no consensus copies
        let own_dl: Vec<usize> = scenario.topology.dl_set(0);
        assert!(sp.layout.u.keys().all(|&(i, _)| own_dl.contains(&i)));
        assert!(sp.copies.psi_caused.is_empty() && sp.copies.psi_recv.is_empty());
        // the frozen foreign interference shows up as a constant in the
        // beta constraint, so it must exceed the own-cell-only noise floor
        let inr = sp
            .program
            .constraints
            .iter()
            .find(|c| c.label.starts_with("dl_inr"))
            .unwrap();
        if let Constraint::Affine { expr } = &inr.kind {
            assert!(expr.constant > 1.0, "foreign interference folded in: {}", expr.constant);
        } else {
            panic!("dl_inr should be affine");
        }
        // and the subproblem solves on its own
        let warm = sp.warm_start(&iterate, &scenario, &norm);
        let sol = solve_warm(&sp.program, 1e-7, Some(&warm)).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn solver_output_feasible_for_next_surrogate() {
        use crate::solver::kkt::constraint_violation;
        let (scenario, channels, norm) = tiny_scenario(Setup::C);
        let mut iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        for _round in 0..3 {
            update_xi(&mut iterate);
            let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
            let warm = sp.warm_start(&iterate, &scenario, &norm);
            for c in &sp.program.constraints {
                let v = constraint_violation(&c.kind, &warm);
                assert!(v <= 1e-7, "{} violated by {v:e} at the previous iterate", c.label);
            }
            let sol = solve_warm(&sp.program, 1e-7, Some(&warm)).unwrap();
            iterate = sp.extract_iterate(&sol, &iterate);
        }
    }

    #[test]
    fn hd_mask_drops_cross_direction_variables() {
        let config = ScenarioConfig {
            num_sbs: 1,
            dl_ues_per_cell: 1,
            ul_ues_per_cell: 1,
            num_subcarriers: 2,
            duplex: Duplex::Hd,
            setup: Setup::A,
            seed: 5,
            ..ScenarioConfig::default()
        };
        let scenario = Scenario::generate(config).unwrap();
        let channels = draw_channels(&scenario.topology, &scenario.config);
        let norm = channels.normalized();
        let iterate = initial_iterate(&scenario, &channels, &norm).unwrap();
        let sp = build_surrogate(&iterate, &scenario, &norm, Scope::Network).unwrap();
        // carrier 0 is DL-only, carrier 1 UL-only
        assert!(sp.layout.u.contains_key(&(0, 0)));
        assert!(!sp.layout.u.contains_key(&(0, 1)));
        assert!(!sp.layout.p.contains_key(&(0, 0)));
        assert!(sp.layout.p.contains_key(&(0, 1)));
    }
}
