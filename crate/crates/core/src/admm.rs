//! Distributed consensus solve of the surrogate problem.
//!
//! Each base station owns a local copy of every interference quantity that
//! couples it to a neighbour: scalars toward downlink victims, Hermitian
//! covariance matrices toward uplink victims, in both the "caused" and
//! "received" directions. A global variable per (producer, victim, carrier)
//! triple links the two copies. One iteration solves all per-BS subproblems
//! against the fixed globals/multipliers, exchanges the copies over a
//! simulated synchronous message bus, averages them into new globals, and
//! takes a multiplier ascent step.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::channel::ChannelSet;
use crate::linalg::CMat;
use crate::scenario::Scenario;
use crate::solver::{self, AffExpr, ConicProgram, SolveStatus, Solution};
use crate::surrogate::{
    build_surrogate, caused_dl_covariance, caused_dl_interference, caused_ul_covariance,
    caused_ul_interference, Scope, SpcaIterate, SurrogateError, SurrogateProblem,
};

/// Consensus tolerance on both primal and dual residuals.
pub const CONSENSUS_TOL: f64 = 1e-4;
/// Tolerance handed to the inner conic solves.
pub const SUBPROBLEM_TOL: f64 = 1e-7;

/// Key of a consensus variable: (producer cell, victim UE index, carrier).
pub type ConsensusKey = (usize, usize, usize);
/// Key of a local copy: (owning cell, producer cell, victim UE, carrier).
pub type CopyKey = (usize, usize, usize, usize);

/// Penalty parameters of the four consensus families.
#[derive(Debug, Clone)]
pub struct PenaltyParams {
    /// scalar DL-interference copies (psi)
    pub rho1: f64,
    /// scalar UL-interference copies (phi)
    pub rho2: f64,
    /// UL covariance copies (Psi)
    pub rho3: f64,
    /// DL covariance copies (Phi)
    pub rho4: f64,
    /// Residual balancing: double/halve all four when the primal/dual
    /// residual ratio exceeds 10.
    pub adaptive: bool,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self { rho1: 1.0, rho2: 1.0, rho3: 1.0, rho4: 1.0, adaptive: false }
    }
}

impl PenaltyParams {
    fn scale(&mut self, factor: f64) {
        self.rho1 *= factor;
        self.rho2 *= factor;
        self.rho3 *= factor;
        self.rho4 *= factor;
    }
}

/// Global consensus variables, one per coupled triple.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalState {
    pub psi: BTreeMap<ConsensusKey, f64>,
    pub phi: BTreeMap<ConsensusKey, f64>,
    pub psi_mat: BTreeMap<ConsensusKey, CMat>,
    pub phi_mat: BTreeMap<ConsensusKey, CMat>,
}

/// Lagrange multipliers, one per local copy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Multipliers {
    pub theta: BTreeMap<CopyKey, f64>,
    pub omega: BTreeMap<CopyKey, f64>,
    pub theta_mat: BTreeMap<CopyKey, CMat>,
    pub omega_mat: BTreeMap<CopyKey, CMat>,
}

/// One base station's copy values after its subproblem solve.
#[derive(Debug, Clone)]
pub struct LocalState {
    pub owner: usize,
    pub psi: BTreeMap<ConsensusKey, f64>,
    pub phi: BTreeMap<ConsensusKey, f64>,
    pub psi_mat: BTreeMap<ConsensusKey, CMat>,
    pub phi_mat: BTreeMap<ConsensusKey, CMat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopyFamily {
    Psi,
    Phi,
    PsiMat,
    PhiMat,
}

/// One hop of the synchronous exchange round.
#[derive(Debug, Clone)]
pub struct ConsensusMessage {
    pub from: usize,
    pub family: CopyFamily,
    pub key: ConsensusKey,
    pub scalar: Option<f64>,
    pub matrix: Option<CMat>,
}

impl ConsensusMessage {
    /// Payload size in bytes (8 per real coordinate).
    pub fn bytes(&self) -> usize {
        match (&self.scalar, &self.matrix) {
            (Some(_), _) => 8,
            (_, Some(m)) => 8 * m.rows * m.rows,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum AdmmError {
    Surrogate(SurrogateError),
    /// A per-BS subproblem failed; carries the cell, solver status and the
    /// violated / offending constraint labels known at abort time.
    SubproblemFailed { cell: usize, status: SolveStatus, violated: Vec<String> },
    /// Exchange ran before every base station solved this round.
    StaleState { missing_cell: usize },
}

impl core::fmt::Display for AdmmError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            AdmmError::Surrogate(e) => write!(f, "{e}"),
            AdmmError::SubproblemFailed { cell, status, violated } => {
                write!(f, "subproblem of BS {cell} ended as {status:?}")?;
                if !violated.is_empty() {
                    write!(f, " (constraints: {})", violated.join(", "))?;
                }
                Ok(())
            }
            AdmmError::StaleState { missing_cell } => {
                write!(f, "exchange before BS {missing_cell} solved this round")
            }
        }
    }
}

impl core::error::Error for AdmmError {}

impl From<SurrogateError> for AdmmError {
    fn from(e: SurrogateError) -> Self {
        AdmmError::Surrogate(e)
    }
}

// ---------------------------------------------------------------------------
// state initialization
// ---------------------------------------------------------------------------

/// Enumerate every consensus triple of the scenario (respecting any
/// half-duplex carrier mask).
fn consensus_keys(scenario: &Scenario) -> (Vec<ConsensusKey>, Vec<ConsensusKey>) {
    let topo = &scenario.topology;
    let n_sub = scenario.config.num_subcarriers;
    let mut dl_keys = Vec::new();
    let mut ul_keys = Vec::new();
    for b in 0..topo.num_cells() {
        for i in 0..topo.dl_serving.len() {
            if topo.dl_serving[i] == b {
                continue;
            }
            for n in (0..n_sub).filter(|&n| scenario.dl_carrier_active(n)) {
                dl_keys.push((b, i, n));
            }
        }
        for j in 0..topo.ul_serving.len() {
            if topo.ul_serving[j] == b {
                continue;
            }
            for n in (0..n_sub).filter(|&n| scenario.ul_carrier_active(n)) {
                ul_keys.push((b, j, n));
            }
        }
    }
    (dl_keys, ul_keys)
}

/// Mutable ADMM machinery carried across SPCA rounds: globals, multipliers,
/// penalties, and per-BS warm starts.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub globals: GlobalState,
    pub multipliers: Multipliers,
    pub rho: PenaltyParams,
    warm: Vec<Option<Vec<f64>>>,
}

impl AdmmState {
    /// Fresh state: globals at the iterate's true interference values,
    /// multipliers at zero.
    pub fn initialize(
        iterate: &SpcaIterate,
        scenario: &Scenario,
        channels_norm: &ChannelSet,
        rho: PenaltyParams,
    ) -> Self {
        let topo = &scenario.topology;
        let (dl_keys, ul_keys) = consensus_keys(scenario);
        let mut globals = GlobalState::default();
        let mut multipliers = Multipliers::default();
        for &(b, i, n) in &dl_keys {
            globals
                .psi
                .insert((b, i, n), caused_dl_interference(iterate, topo, channels_norm, b, i, n));
            globals
                .phi
                .insert((b, i, n), caused_ul_interference(iterate, topo, channels_norm, b, i, n));
            let victim_bs = topo.dl_serving[i];
            for owner in [b, victim_bs] {
                multipliers.theta.insert((owner, b, i, n), 0.0);
                multipliers.omega.insert((owner, b, i, n), 0.0);
            }
        }
        let mr = scenario.config.rx_antennas;
        for &(b, j, n) in &ul_keys {
            globals
                .psi_mat
                .insert((b, j, n), caused_ul_covariance(iterate, topo, channels_norm, b, j, n));
            globals
                .phi_mat
                .insert((b, j, n), caused_dl_covariance(iterate, topo, channels_norm, b, j, n));
            let victim_bs = topo.ul_serving[j];
            for owner in [b, victim_bs] {
                multipliers.theta_mat.insert((owner, b, j, n), CMat::zeros(mr, mr));
                multipliers.omega_mat.insert((owner, b, j, n), CMat::zeros(mr, mr));
            }
        }
        Self {
            globals,
            multipliers,
            rho,
            warm: vec![None; scenario.config.num_sbs],
        }
    }
}

// ---------------------------------------------------------------------------
// subproblem construction
// ---------------------------------------------------------------------------

fn attach_scalar_consensus(
    program: &mut ConicProgram,
    var: solver::VarId,
    global: f64,
    multiplier: f64,
    rho: f64,
) {
    program.objective.linear.add_term(var, multiplier);
    program.objective.linear.add_constant(-multiplier * global);
    let mut dev = AffExpr::term(var, 1.0);
    dev.add_constant(-global);
    program.objective.quads.push((0.5 * rho, dev));
}

fn attach_matrix_consensus(
    program: &mut ConicProgram,
    block: solver::BlockId,
    global: &CMat,
    multiplier: &CMat,
    rho: f64,
) {
    // tr(Theta (Psi - G)) is linear in the block coordinates
    let lin = program.herm_inner_expr(block, multiplier);
    program.objective.linear.add_expr(&lin, 1.0);
    program.objective.linear.add_constant(-multiplier.inner(global));
    // (rho/2) ||Psi - G||_F^2: diagonal coords weigh rho/2, off-diagonal
    // (re, im) coords appear twice in the Frobenius sum
    let g_coords = ConicProgram::block_coords(global);
    let def = program.block(block);
    let (first, dim) = (def.first, def.dim);
    for (k, &gc) in g_coords.iter().enumerate() {
        let w = if k < dim { 0.5 * rho } else { rho };
        let mut dev = AffExpr::term(first + k, 1.0);
        dev.add_constant(-gc);
        program.objective.quads.push((w, dev));
    }
}

/// Augment a per-cell surrogate with the consensus objective: multiplier
/// inner products plus quadratic penalties around the current globals.
pub fn attach_consensus_objective(
    sp: &mut SurrogateProblem,
    b: usize,
    globals: &GlobalState,
    multipliers: &Multipliers,
    rho: &PenaltyParams,
) {
    let copies = sp.copies.clone();
    for (&(i, n), &id) in &copies.psi_caused {
        attach_scalar_consensus(
            &mut sp.program,
            id,
            globals.psi[&(b, i, n)],
            multipliers.theta[&(b, b, i, n)],
            rho.rho1,
        );
    }
    for (&(i, n), &id) in &copies.phi_caused {
        attach_scalar_consensus(
            &mut sp.program,
            id,
            globals.phi[&(b, i, n)],
            multipliers.omega[&(b, b, i, n)],
            rho.rho2,
        );
    }
    for (&(src, i, n), &id) in &copies.psi_recv {
        attach_scalar_consensus(
            &mut sp.program,
            id,
            globals.psi[&(src, i, n)],
            multipliers.theta[&(b, src, i, n)],
            rho.rho1,
        );
    }
    for (&(src, i, n), &id) in &copies.phi_recv {
        attach_scalar_consensus(
            &mut sp.program,
            id,
            globals.phi[&(src, i, n)],
            multipliers.omega[&(b, src, i, n)],
            rho.rho2,
        );
    }
    for (&(j, n), &blk) in &copies.psi_mat_caused {
        attach_matrix_consensus(
            &mut sp.program,
            blk,
            &globals.psi_mat[&(b, j, n)],
            &multipliers.theta_mat[&(b, b, j, n)],
            rho.rho3,
        );
    }
    for (&(j, n), &blk) in &copies.phi_mat_caused {
        attach_matrix_consensus(
            &mut sp.program,
            blk,
            &globals.phi_mat[&(b, j, n)],
            &multipliers.omega_mat[&(b, b, j, n)],
            rho.rho4,
        );
    }
    for (&(src, j, n), &blk) in &copies.psi_mat_recv {
        attach_matrix_consensus(
            &mut sp.program,
            blk,
            &globals.psi_mat[&(src, j, n)],
            &multipliers.theta_mat[&(b, src, j, n)],
            rho.rho3,
        );
    }
    for (&(src, j, n), &blk) in &copies.phi_mat_recv {
        attach_matrix_consensus(
            &mut sp.program,
            blk,
            &globals.phi_mat[&(src, j, n)],
            &multipliers.omega_mat[&(b, src, j, n)],
            rho.rho4,
        );
    }
}

/// Build the complete subproblem of BS `b`: the per-cell surrogate with
/// consensus copies plus the augmented-Lagrangian objective terms.
pub fn build_local_subproblem(
    b: usize,
    iterate: &SpcaIterate,
    scenario: &Scenario,
    channels_norm: &ChannelSet,
    globals: &GlobalState,
    multipliers: &Multipliers,
    rho: &PenaltyParams,
) -> Result<SurrogateProblem, SurrogateError> {
    let mut sp = build_surrogate(
        iterate,
        scenario,
        channels_norm,
        Scope::Cell { b, consensus_copies: true },
    )?;
    attach_consensus_objective(&mut sp, b, globals, multipliers, rho);
    Ok(sp)
}

/// Read the copy values out of a solved subproblem.
fn local_state(b: usize, sp: &SurrogateProblem, solution: &Solution) -> LocalState {
    let mut local = LocalState {
        owner: b,
        psi: BTreeMap::new(),
        phi: BTreeMap::new(),
        psi_mat: BTreeMap::new(),
        phi_mat: BTreeMap::new(),
    };
    for (&(i, n), &id) in &sp.copies.psi_caused {
        local.psi.insert((b, i, n), solution.y[id]);
    }
    for (&(i, n), &id) in &sp.copies.phi_caused {
        local.phi.insert((b, i, n), solution.y[id]);
    }
    for (&(src, i, n), &id) in &sp.copies.psi_recv {
        local.psi.insert((src, i, n), solution.y[id]);
    }
    for (&(src, i, n), &id) in &sp.copies.phi_recv {
        local.phi.insert((src, i, n), solution.y[id]);
    }
    for (&(j, n), &blk) in &sp.copies.psi_mat_caused {
        local.psi_mat.insert((b, j, n), sp.program.block_matrix(blk, &solution.y));
    }
    for (&(j, n), &blk) in &sp.copies.phi_mat_caused {
        local.phi_mat.insert((b, j, n), sp.program.block_matrix(blk, &solution.y));
    }
    for (&(src, j, n), &blk) in &sp.copies.psi_mat_recv {
        local.psi_mat.insert((src, j, n), sp.program.block_matrix(blk, &solution.y));
    }
    for (&(src, j, n), &blk) in &sp.copies.phi_mat_recv {
        local.phi_mat.insert((src, j, n), sp.program.block_matrix(blk, &solution.y));
    }
    local
}

// ---------------------------------------------------------------------------
// exchange / averaging / multiplier steps
// ---------------------------------------------------------------------------

/// Synchronous exchange round: every BS emits each of its local copies once.
/// Fails when some BS has not produced copies for a triple it owns.
pub fn exchange(
    locals: &[LocalState],
    globals: &GlobalState,
) -> Result<Vec<ConsensusMessage>, AdmmError> {
    let mut messages = Vec::new();
    for local in locals {
        for (&key, &v) in &local.psi {
            messages.push(ConsensusMessage {
                from: local.owner,
                family: CopyFamily::Psi,
                key,
                scalar: Some(v),
                matrix: None,
            });
        }
        for (&key, &v) in &local.phi {
            messages.push(ConsensusMessage {
                from: local.owner,
                family: CopyFamily::Phi,
                key,
                scalar: Some(v),
                matrix: None,
            });
        }
        for (&key, m) in &local.psi_mat {
            messages.push(ConsensusMessage {
                from: local.owner,
                family: CopyFamily::PsiMat,
                key,
                scalar: None,
                matrix: Some(m.clone()),
            });
        }
        for (&key, m) in &local.phi_mat {
            messages.push(ConsensusMessage {
                from: local.owner,
                family: CopyFamily::PhiMat,
                key,
                scalar: None,
                matrix: Some(m.clone()),
            });
        }
    }
    // every consensus triple needs exactly its two copies
    for (family, keys) in [
        (CopyFamily::Psi, globals.psi.keys().copied().collect::<Vec<_>>()),
        (CopyFamily::Phi, globals.phi.keys().copied().collect()),
        (CopyFamily::PsiMat, globals.psi_mat.keys().copied().collect()),
        (CopyFamily::PhiMat, globals.phi_mat.keys().copied().collect()),
    ] {
        for key in keys {
            let copies =
                messages.iter().filter(|m| m.family == family && m.key == key).count();
            if copies != 2 {
                return Err(AdmmError::StaleState { missing_cell: key.0 });
            }
        }
    }
    Ok(messages)
}

/// Average the two copies of every consensus triple.
pub fn update_globals(messages: &[ConsensusMessage]) -> GlobalState {
    let mut globals = GlobalState::default();
    for m in messages {
        match (m.family, &m.scalar, &m.matrix) {
            (CopyFamily::Psi, Some(v), _) => {
                *globals.psi.entry(m.key).or_insert(0.0) += 0.5 * v;
            }
            (CopyFamily::Phi, Some(v), _) => {
                *globals.phi.entry(m.key).or_insert(0.0) += 0.5 * v;
            }
            (CopyFamily::PsiMat, _, Some(mat)) => {
                globals
                    .psi_mat
                    .entry(m.key)
                    .or_insert_with(|| CMat::zeros(mat.rows, mat.cols))
                    .add_scaled(mat, 0.5);
            }
            (CopyFamily::PhiMat, _, Some(mat)) => {
                globals
                    .phi_mat
                    .entry(m.key)
                    .or_insert_with(|| CMat::zeros(mat.rows, mat.cols))
                    .add_scaled(mat, 0.5);
            }
            _ => {}
        }
    }
    globals
}

/// Multiplier ascent: `multiplier += rho * (local copy - new global)`, for
/// every copy of every BS. Matrix multipliers pair with their own family
/// (theta with Psi, omega with Phi) and use the plain Hermitian residual.
pub fn update_multipliers(
    locals: &[LocalState],
    globals: &GlobalState,
    multipliers: &Multipliers,
    rho: &PenaltyParams,
) -> Multipliers {
    let mut next = multipliers.clone();
    for local in locals {
        let b = local.owner;
        for (&(src, i, n), &v) in &local.psi {
            let key = (b, src, i, n);
            let residual = v - globals.psi[&(src, i, n)];
            *next.theta.get_mut(&key).expect("theta key") += rho.rho1 * residual;
        }
        for (&(src, i, n), &v) in &local.phi {
            let key = (b, src, i, n);
            let residual = v - globals.phi[&(src, i, n)];
            *next.omega.get_mut(&key).expect("omega key") += rho.rho2 * residual;
        }
        for (&(src, j, n), m) in &local.psi_mat {
            let key = (b, src, j, n);
            let residual = m.sub(&globals.psi_mat[&(src, j, n)]);
            next.theta_mat.get_mut(&key).expect("theta_mat key").add_scaled(&residual, rho.rho3);
        }
        for (&(src, j, n), m) in &local.phi_mat {
            let key = (b, src, j, n);
            let residual = m.sub(&globals.phi_mat[&(src, j, n)]);
            next.omega_mat.get_mut(&key).expect("omega_mat key").add_scaled(&residual, rho.rho4);
        }
    }
    next
}

fn primal_residual(locals: &[LocalState], globals: &GlobalState) -> f64 {
    let mut r: f64 = 0.0;
    for local in locals {
        for (&key, &v) in &local.psi {
            r = r.max((v - globals.psi[&key]).abs());
        }
        for (&key, &v) in &local.phi {
            r = r.max((v - globals.phi[&key]).abs());
        }
        for (&key, m) in &local.psi_mat {
            r = r.max(m.sub(&globals.psi_mat[&key]).max_abs());
        }
        for (&key, m) in &local.phi_mat {
            r = r.max(m.sub(&globals.phi_mat[&key]).max_abs());
        }
    }
    r
}

fn global_change(old: &GlobalState, new: &GlobalState) -> f64 {
    let mut r: f64 = 0.0;
    for (key, v) in &new.psi {
        r = r.max((v - old.psi[key]).abs());
    }
    for (key, v) in &new.phi {
        r = r.max((v - old.phi[key]).abs());
    }
    for (key, m) in &new.psi_mat {
        r = r.max(m.sub(&old.psi_mat[key]).max_abs());
    }
    for (key, m) in &new.phi_mat {
        r = r.max(m.sub(&old.phi_mat[key]).max_abs());
    }
    r
}

// ---------------------------------------------------------------------------
// the loop
// ---------------------------------------------------------------------------

/// One row of the per-iteration consensus trace.
#[derive(Debug, Clone)]
pub struct AdmmIterRecord {
    pub iter: usize,
    /// Network queue-deviation objective (nats) at the assembled iterate.
    pub objective_nats: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub messages: usize,
    pub bytes: usize,
}

impl AdmmIterRecord {
    pub fn csv_header() -> &'static str {
        "iteration,objective_nats,primal_residual,dual_residual,messages,bytes"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{},{}",
            self.iter,
            self.objective_nats,
            self.primal_residual,
            self.dual_residual,
            self.messages,
            self.bytes
        )
    }
}

/// Run consensus iterations on the surrogate built around `iterate` until
/// both residuals fall below [`CONSENSUS_TOL`] or `i_max2` is reached.
///
/// Returns the assembled network-wide iterate (every cell's subproblem slice
/// merged) and the per-iteration trace. `state` carries globals, multipliers
/// and warm starts across SPCA rounds.
pub fn admm_loop(
    iterate: &SpcaIterate,
    scenario: &Scenario,
    channels_norm: &ChannelSet,
    state: &mut AdmmState,
    i_max2: usize,
) -> Result<(SpcaIterate, Vec<AdmmIterRecord>), AdmmError> {
    let b_count = scenario.config.num_sbs;
    // constraint structure is fixed within one SPCA round; only the
    // consensus objective changes between iterations
    let mut bases = Vec::with_capacity(b_count);
    for b in 0..b_count {
        bases.push(build_surrogate(
            iterate,
            scenario,
            channels_norm,
            Scope::Cell { b, consensus_copies: true },
        )?);
    }

    let mut trace = Vec::new();
    let mut merged = iterate.clone();
    for v in 0..i_max2.max(1) {
        let mut locals = Vec::with_capacity(b_count);
        merged = iterate.clone();
        for (b, base) in bases.iter().enumerate() {
            let mut sp = base.clone();
            attach_consensus_objective(&mut sp, b, &state.globals, &state.multipliers, &state.rho);
            let warm = state.warm[b]
                .clone()
                .unwrap_or_else(|| sp.warm_start(iterate, scenario, channels_norm));
            let solution = solver::solve_warm(&sp.program, SUBPROBLEM_TOL, Some(&warm))
                .map_err(|e| AdmmError::SubproblemFailed {
                    cell: b,
                    status: SolveStatus::NumericalFailure,
                    violated: vec![e.to_string()],
                })?;
            if !matches!(solution.status, SolveStatus::Optimal | SolveStatus::MaxIter) {
                return Err(AdmmError::SubproblemFailed {
                    cell: b,
                    status: solution.status,
                    violated: solution.kkt.violated.clone(),
                });
            }
            state.warm[b] = Some(solution.y.clone());
            merged = sp.extract_iterate(&solution, &merged);
            locals.push(local_state(b, &sp, &solution));
        }

        let messages = exchange(&locals, &state.globals)?;
        let message_count = messages.len();
        let message_bytes: usize = messages.iter().map(ConsensusMessage::bytes).sum();
        let new_globals = update_globals(&messages);
        let primal = primal_residual(&locals, &new_globals);
        let dual_scale = state.rho.rho1.max(state.rho.rho2).max(state.rho.rho3).max(state.rho.rho4);
        let dual = dual_scale * global_change(&state.globals, &new_globals);
        state.multipliers =
            update_multipliers(&locals, &new_globals, &state.multipliers, &state.rho);
        state.globals = new_globals;

        trace.push(AdmmIterRecord {
            iter: v,
            objective_nats: merged.objective_nats(scenario),
            primal_residual: primal,
            dual_residual: dual,
            messages: message_count,
            bytes: message_bytes,
        });

        if primal < CONSENSUS_TOL && dual < CONSENSUS_TOL {
            break;
        }
        if state.rho.adaptive {
            if primal > 10.0 * dual {
                state.rho.scale(2.0);
            } else if dual > 10.0 * primal {
                state.rho.scale(0.5);
            }
        }
    }
    Ok((merged, trace))
}
