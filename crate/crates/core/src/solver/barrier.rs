//! Barrier/Newton path-following over the real parametrization of a
//! [`ConicProgram`](super::ConicProgram).
//!
//! Norm objective terms are lifted to epigraph variables with second-order
//! constraints, so the centering objective is smooth. Each constraint kind
//! contributes its own log barrier:
//!
//! - affine `e <= 0`:        `-log(-e)`
//! - SOC `||u|| <= t`:       `-log(t^2 - ||u||^2)` (with `t > 0` as a domain check)
//! - PSD `S(y) >= 0`:        `-log det S`
//! - exp `e^t <= 1 + z`:     `-log(z + 1 - e^t)`
//!
//! The schedule follows mu <- mu/10 from mu = 1 until the duality-gap proxy
//! `mu * (total barrier degree)` falls below the requested tolerance, with a
//! damped Newton method (Armijo backtracking, factor 0.5) per center.
//! Infeasible or boundary starts go through a phase-I slack-minimization
//! program built with the same machinery.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    kkt, validate_program, AffExpr, ConicProgram, Constraint, DualValue, Solution, SolveStatus,
    SolverError,
};
use crate::linalg::{solve_sym_pd_in_place, CMat};

const NEWTON_TOL: f64 = 1e-9;
const MAX_NEWTON_PER_CENTER: usize = 150;
const MAX_LINE_SEARCH: usize = 60;
const ARMIJO_SLOPE: f64 = 0.25;
const BACKTRACK: f64 = 0.5;
/// Variable box for the phase-I program. The slack objective is flat in the
/// original variables, so without a box the barrier would chase unbounded
/// recession directions of the relaxed feasible set.
const PHASE1_BOX: f64 = 1e9;
/// Default solve tolerance (duality-gap proxy).
pub const DEFAULT_TOL: f64 = 1e-7;

/// Solve a program to the given duality-gap tolerance from a cold start.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<Solution, SolverError> {
    solve_warm(program, tol, None)
}

/// Solve with an optional warm-start vector (values for the program's
/// variables). The warm start only needs to be approximately feasible;
/// phase-I runs whenever it is not strictly interior.
pub fn solve_warm(
    program: &ConicProgram,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<Solution, SolverError> {
    validate_program(program)?;
    let n_user = program.num_vars();
    if let Some(w) = warm {
        if w.len() != n_user {
            return Err(SolverError::MalformedProgram(format!(
                "warm start has {} entries for {} variables",
                w.len(),
                n_user
            )));
        }
    }

    let mut y_user: Vec<f64> = warm.map_or_else(|| vec![0.0; n_user], <[f64]>::to_vec);
    if y_user.iter().any(|v| !v.is_finite()) {
        y_user = vec![0.0; n_user];
    }

    // ---- phase I: slack minimization until strictly interior ----
    let user_cons: Vec<Constraint> = program.constraints.iter().map(|c| c.kind.clone()).collect();
    let mut newton_total = 0usize;
    if strict_margin(&user_cons, &y_user) <= 0.0 {
        match phase_one(program, &user_cons, &mut y_user, tol, &mut newton_total) {
            PhaseOneOutcome::Feasible => {}
            PhaseOneOutcome::Infeasible => {
                return Ok(failed_solution(program, y_user, SolveStatus::Infeasible, newton_total));
            }
            PhaseOneOutcome::Stalled => {
                return Ok(failed_solution(
                    program,
                    y_user,
                    SolveStatus::NumericalFailure,
                    newton_total,
                ));
            }
        }
    }

    // ---- phase II: extended problem with norm epigraphs ----
    let norm_groups: Vec<&Vec<AffExpr>> =
        program.objective.norms.iter().filter(|rows| !rows.is_empty()).collect();
    let n_ext = n_user + norm_groups.len();
    let mut cons = user_cons;
    let mut y = y_user;
    y.resize(n_ext, 0.0);
    for (k, rows) in norm_groups.iter().enumerate() {
        let s_id = n_user + k;
        let norm_val = crate::fmath::sqrt(rows.iter().map(|e| crate::fmath::powi(e.eval(&y), 2)).sum::<f64>());
        y[s_id] = norm_val * 1.001 + 1e-6;
        cons.push(Constraint::SecondOrder {
            rows: (*rows).clone(),
            rhs: AffExpr::var(s_id),
        });
    }
    let mut linear = program.objective.linear.clone();
    for k in 0..norm_groups.len() {
        linear.add_term(n_user + k, 1.0);
    }
    linear.normalize();
    let objective = SmoothObjective::new(n_ext, linear, &program.objective.quads);

    let nu: f64 = cons.iter().map(Constraint::barrier_degree).sum::<f64>().max(1.0);
    let mut mu = 1.0;
    let mut status = SolveStatus::MaxIter;
    for _stage in 0..48 {
        let outcome = center(&cons, &objective, &mut y, mu, &mut newton_total, None);
        match outcome {
            CenterOutcome::Converged | CenterOutcome::MaxIter => {}
            CenterOutcome::Failed => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        }
        if mu * nu <= tol {
            // only a converged final center certifies the gap proxy
            status = match outcome {
                CenterOutcome::Converged => SolveStatus::Optimal,
                _ => SolveStatus::MaxIter,
            };
            break;
        }
        mu /= 10.0;
    }

    // ---- duals and reporting ----
    let mut all_duals: Vec<DualValue> =
        cons.iter().map(|c| constraint_dual(c, &y, mu)).collect();
    polish_duals(&cons, &objective, &y, &mut all_duals);
    let n_user_cons = program.constraints.len();
    let mut duals = Vec::with_capacity(n_user_cons);
    let mut norm_epi_duals = Vec::new();
    for (idx, dual) in all_duals.into_iter().enumerate() {
        if idx < n_user_cons {
            duals.push(dual);
        } else if let DualValue::Scalar(v) = dual {
            norm_epi_duals.push(v);
        }
    }
    let y_out: Vec<f64> = y[..n_user].to_vec();
    let norm_epi: Vec<f64> = y[n_user..].to_vec();
    let mut solution = Solution {
        status,
        objective: program.objective.eval(&y_out),
        y: y_out,
        duals,
        norm_epi,
        norm_epi_duals,
        gap_proxy: mu * nu,
        newton_iters: newton_total,
        kkt: kkt::KktReport::default(),
    };
    solution.kkt = kkt::check_kkt(program, &solution);
    Ok(solution)
}

fn failed_solution(
    program: &ConicProgram,
    y: Vec<f64>,
    status: SolveStatus,
    newton_iters: usize,
) -> Solution {
    let mut solution = Solution {
        status,
        objective: program.objective.eval(&y),
        duals: program.constraints.iter().map(|_| DualValue::Scalar(0.0)).collect(),
        norm_epi: Vec::new(),
        norm_epi_duals: Vec::new(),
        gap_proxy: f64::INFINITY,
        newton_iters,
        kkt: kkt::KktReport::default(),
        y,
    };
    solution.kkt = kkt::check_kkt(program, &solution);
    solution
}

// ---------------------------------------------------------------------------
// smooth objective (linear + quadratic; norms already lifted)
// ---------------------------------------------------------------------------

struct SmoothObjective {
    linear: AffExpr,
    quads: Vec<(f64, AffExpr)>,
    /// constant part of the Hessian (from the quadratic terms), dense n x n
    h_base: Vec<f64>,
    n: usize,
}

impl SmoothObjective {
    fn new(n: usize, linear: AffExpr, quads: &[(f64, AffExpr)]) -> Self {
        let mut h_base = vec![0.0; n * n];
        for (w, e) in quads {
            for &(i, wi) in &e.terms {
                for &(j, wj) in &e.terms {
                    h_base[i * n + j] += 2.0 * w * wi * wj;
                }
            }
        }
        Self { linear, quads: quads.to_vec(), h_base, n }
    }

    fn phase_one(n: usize, s_id: usize) -> Self {
        Self { linear: AffExpr::var(s_id), quads: Vec::new(), h_base: vec![0.0; n * n], n }
    }

    fn value(&self, y: &[f64]) -> f64 {
        let mut v = self.linear.eval(y);
        for (w, e) in &self.quads {
            v += w * crate::fmath::powi(e.eval(y), 2);
        }
        v
    }

    fn add_gradient(&self, y: &[f64], g: &mut [f64]) {
        self.linear.accumulate_gradient(g, 1.0);
        for (w, e) in &self.quads {
            e.accumulate_gradient(g, 2.0 * w * e.eval(y));
        }
    }
}

// ---------------------------------------------------------------------------
// barrier evaluation
// ---------------------------------------------------------------------------

/// Barrier value of one constraint at `y`; `None` when `y` is outside the
/// constraint's strict interior.
fn barrier_value(c: &Constraint, y: &[f64]) -> Option<f64> {
    match c {
        Constraint::Affine { expr } => {
            let r = -expr.eval(y);
            (r > 0.0 && r.is_finite()).then(|| -crate::fmath::ln(r))
        }
        Constraint::SecondOrder { rows, rhs } => {
            let t = rhs.eval(y);
            if !(t > 0.0) || !t.is_finite() {
                return None;
            }
            let u2: f64 = rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum();
            let r = t * t - u2;
            (r > 0.0 && r.is_finite()).then(|| -crate::fmath::ln(r))
        }
        Constraint::PsdDominance { dim, constant, coeffs } => {
            let mut s = constant.clone();
            for (id, m) in coeffs {
                s.add_scaled(m, y[*id]);
            }
            debug_assert_eq!(s.rows, *dim);
            s.hermitianize();
            s.cholesky().map(|f| -f.log_det())
        }
        Constraint::ExpEpigraph { t, z } => {
            let tv = t.eval(y);
            let r = z.eval(y) + 1.0 - crate::fmath::exp(tv);
            (r > 0.0 && r.is_finite()).then(|| -crate::fmath::ln(r))
        }
    }
}

/// Strict interior test with a uniform margin: affine/exp/SOC residuals must
/// exceed `margin` and the PSD matrices must stay PD after subtracting
/// `margin * I`.
fn strictly_feasible(cons: &[Constraint], y: &[f64], margin: f64) -> bool {
    cons.iter().all(|c| match c {
        Constraint::Affine { expr } => -expr.eval(y) > margin,
        Constraint::SecondOrder { rows, rhs } => {
            let t = rhs.eval(y);
            if !(t > 0.0) {
                return false;
            }
            let u2: f64 = rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum();
            t * t - u2 > margin
        }
        Constraint::PsdDominance { dim, constant, coeffs } => {
            let mut m = constant.clone();
            for (id, cm) in coeffs {
                m.add_scaled(cm, y[*id]);
            }
            m.add_scaled(&CMat::identity(*dim), -margin);
            m.hermitianize();
            m.cholesky().is_some()
        }
        Constraint::ExpEpigraph { t, z } => {
            let r = z.eval(y) + 1.0 - crate::fmath::exp(t.eval(y));
            r.is_finite() && r > margin
        }
    })
}

/// Minimum strict-interior margin across constraints (positive when strictly
/// feasible). Used only as a fast path to skip phase-I for interior starts.
fn strict_margin(cons: &[Constraint], y: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for c in cons {
        let r = match c {
            Constraint::Affine { expr } => -expr.eval(y),
            Constraint::SecondOrder { rows, rhs } => {
                let t = rhs.eval(y);
                if !(t > 0.0) {
                    return -1.0;
                }
                let u2: f64 = rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum();
                t * t - u2
            }
            Constraint::PsdDominance { constant, coeffs, .. } => {
                let mut s = constant.clone();
                for (id, m) in coeffs {
                    s.add_scaled(m, y[*id]);
                }
                s.hermitianize();
                match s.cholesky() {
                    Some(_) => s.min_eigenvalue(),
                    None => return -1.0,
                }
            }
            Constraint::ExpEpigraph { t, z } => z.eval(y) + 1.0 - crate::fmath::exp(t.eval(y)),
        };
        if !r.is_finite() {
            return -1.0;
        }
        m = m.min(r);
    }
    m
}

/// Add `mu` times the barrier gradient and Hessian of one constraint.
/// Assumes `y` is strictly interior for it.
fn add_barrier_derivs(c: &Constraint, y: &[f64], mu: f64, g: &mut [f64], h: &mut [f64], n: usize) {
    match c {
        Constraint::Affine { expr } => {
            let r = -expr.eval(y);
            let inv = 1.0 / r;
            // -log(r): grad = coeffs/r, hess = coeffs coeffs^T / r^2
            expr.accumulate_gradient(g, mu * inv);
            for &(i, wi) in &expr.terms {
                for &(j, wj) in &expr.terms {
                    h[i * n + j] += mu * wi * wj * inv * inv;
                }
            }
        }
        Constraint::SecondOrder { rows, rhs } => {
            let t = rhs.eval(y);
            let uvals: Vec<f64> = rows.iter().map(|e| e.eval(y)).collect();
            let r = t * t - uvals.iter().map(|u| u * u).sum::<f64>();
            let inv = 1.0 / r;
            // grad r = 2 t grad(t) - 2 sum u_m grad(u_m)
            let mut grad_r = vec![0.0; n];
            rhs.accumulate_gradient(&mut grad_r, 2.0 * t);
            for (e, &u) in rows.iter().zip(uvals.iter()) {
                e.accumulate_gradient(&mut grad_r, -2.0 * u);
            }
            for (k, gr) in grad_r.iter().enumerate() {
                g[k] -= mu * gr * inv;
            }
            // hess = grad_r grad_r^T / r^2 - hess_r / r,
            // hess_r = 2 grad(t) grad(t)^T - 2 sum grad(u_m) grad(u_m)^T
            for (i, gi) in grad_r.iter().enumerate() {
                if *gi == 0.0 {
                    continue;
                }
                for (j, gj) in grad_r.iter().enumerate() {
                    h[i * n + j] += mu * gi * gj * inv * inv;
                }
            }
            for &(i, wi) in &rhs.terms {
                for &(j, wj) in &rhs.terms {
                    h[i * n + j] -= 2.0 * mu * wi * wj * inv;
                }
            }
            for e in rows {
                for &(i, wi) in &e.terms {
                    for &(j, wj) in &e.terms {
                        h[i * n + j] += 2.0 * mu * wi * wj * inv;
                    }
                }
            }
        }
        Constraint::PsdDominance { constant, coeffs, .. } => {
            let mut s = constant.clone();
            for (id, m) in coeffs {
                s.add_scaled(m, y[*id]);
            }
            s.hermitianize();
            let chol = s.cholesky().expect("interior point");
            let s_inv = chol.inverse();
            // T_k = S^{-1} C_k; grad_k = -mu tr(T_k); hess_kl = mu tr(T_k T_l)
            let t_mats: Vec<(usize, CMat)> =
                coeffs.iter().map(|(id, m)| (*id, s_inv.matmul(m))).collect();
            for (id, t) in &t_mats {
                g[*id] -= mu * t.trace().re;
            }
            for (i, ti) in &t_mats {
                for (j, tj) in &t_mats {
                    h[*i * n + *j] += mu * ti.matmul(tj).trace().re;
                }
            }
        }
        Constraint::ExpEpigraph { t, z } => {
            let tv = t.eval(y);
            let et = crate::fmath::exp(tv);
            let r = z.eval(y) + 1.0 - et;
            let inv = 1.0 / r;
            // grad r = grad(z) - e^t grad(t)
            let mut grad_r = vec![0.0; n];
            z.accumulate_gradient(&mut grad_r, 1.0);
            t.accumulate_gradient(&mut grad_r, -et);
            for (k, gr) in grad_r.iter().enumerate() {
                g[k] -= mu * gr * inv;
            }
            for (i, gi) in grad_r.iter().enumerate() {
                if *gi == 0.0 {
                    continue;
                }
                for (j, gj) in grad_r.iter().enumerate() {
                    h[i * n + j] += mu * gi * gj * inv * inv;
                }
            }
            // -hess_r / r with hess_r = -e^t grad(t) grad(t)^T
            for &(i, wi) in &t.terms {
                for &(j, wj) in &t.terms {
                    h[i * n + j] += mu * et * wi * wj * inv;
                }
            }
        }
    }
}

/// Dual estimate induced by the barrier at (`y`, `mu`).
fn constraint_dual(c: &Constraint, y: &[f64], mu: f64) -> DualValue {
    match c {
        Constraint::Affine { expr } => DualValue::Scalar(mu / (-expr.eval(y)).max(1e-300)),
        Constraint::SecondOrder { rows, rhs } => {
            let t = rhs.eval(y);
            let u2: f64 = rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum();
            DualValue::Scalar(mu / (t * t - u2).max(1e-300))
        }
        Constraint::PsdDominance { constant, coeffs, .. } => {
            let mut s = constant.clone();
            for (id, m) in coeffs {
                s.add_scaled(m, y[*id]);
            }
            s.hermitianize();
            match s.cholesky() {
                Some(chol) => DualValue::Matrix(chol.inverse().scale(mu)),
                None => DualValue::Matrix(CMat::zeros(s.rows, s.cols)),
            }
        }
        Constraint::ExpEpigraph { t, z } => {
            let r = z.eval(y) + 1.0 - crate::fmath::exp(t.eval(y));
            DualValue::Scalar(mu / r.max(1e-300))
        }
    }
}

// ---------------------------------------------------------------------------
// Newton centering
// ---------------------------------------------------------------------------

enum CenterOutcome {
    Converged,
    MaxIter,
    Failed,
}

fn merit(cons: &[Constraint], objective: &SmoothObjective, y: &[f64], mu: f64) -> Option<f64> {
    let mut v = objective.value(y);
    if !v.is_finite() {
        return None;
    }
    for c in cons {
        v += mu * barrier_value(c, y)?;
    }
    v.is_finite().then_some(v)
}

fn center(
    cons: &[Constraint],
    objective: &SmoothObjective,
    y: &mut Vec<f64>,
    mu: f64,
    newton_total: &mut usize,
    stop_early: Option<&dyn Fn(&[f64]) -> bool>,
) -> CenterOutcome {
    let n = objective.n;
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    let mut scaled = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut diag_scale = vec![0.0; n];

    for _it in 0..MAX_NEWTON_PER_CENTER {
        *newton_total += 1;
        if let Some(stop) = stop_early {
            if stop(y) {
                return CenterOutcome::Converged;
            }
        }
        let val = match merit(cons, objective, y, mu) {
            Some(v) => v,
            None => return CenterOutcome::Failed,
        };
        g.iter_mut().for_each(|v| *v = 0.0);
        h.copy_from_slice(&objective.h_base);
        objective.add_gradient(y, &mut g);
        for c in cons {
            add_barrier_derivs(c, y, mu, &mut g, &mut h, n);
        }

        // Jacobi-equilibrated Cholesky with ridge escalation.
        let mut solved = false;
        let mut ridge = 0.0;
        let mut d = vec![0.0; n];
        while !solved {
            for i in 0..n {
                let hd = h[i * n + i].max(1e-300);
                diag_scale[i] = 1.0 / crate::fmath::sqrt(hd);
            }
            for i in 0..n {
                for j in 0..n {
                    scaled[i * n + j] = h[i * n + j] * diag_scale[i] * diag_scale[j];
                }
                scaled[i * n + i] += ridge;
            }
            for i in 0..n {
                rhs[i] = -g[i] * diag_scale[i];
            }
            if solve_sym_pd_in_place(&mut scaled, n, &mut rhs) {
                for i in 0..n {
                    d[i] = rhs[i] * diag_scale[i];
                }
                solved = true;
            } else {
                ridge = if ridge == 0.0 { 1e-12 } else { ridge * 100.0 };
                if ridge > 1.0 {
                    return CenterOutcome::Failed;
                }
            }
        }

        let slope: f64 = g.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
        let dec2 = -slope; // Newton decrement squared (exact when ridge = 0)
        if dec2 <= 2.0 * NEWTON_TOL {
            return CenterOutcome::Converged;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ls in 0..MAX_LINE_SEARCH {
            let y_try: Vec<f64> =
                y.iter().zip(d.iter()).map(|(v, dv)| v + alpha * dv).collect();
            if let Some(v_try) = merit(cons, objective, &y_try, mu) {
                if v_try <= val + ARMIJO_SLOPE * alpha * slope {
                    *y = y_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= BACKTRACK;
        }
        if !accepted {
            // Line-search stall: accept if already near the center.
            return if dec2 <= 1e-6 { CenterOutcome::Converged } else { CenterOutcome::Failed };
        }
    }
    CenterOutcome::MaxIter
}

// ---------------------------------------------------------------------------
// phase I
// ---------------------------------------------------------------------------

enum PhaseOneOutcome {
    Feasible,
    Infeasible,
    Stalled,
}

/// Slack needed to make constraint `c` strictly feasible by `eps` at `y`.
fn needed_slack(c: &Constraint, y: &[f64], eps: f64) -> f64 {
    match c {
        Constraint::Affine { expr } => expr.eval(y) + eps,
        Constraint::SecondOrder { rows, rhs } => {
            let t = rhs.eval(y);
            let u = crate::fmath::sqrt(rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum::<f64>());
            (u - t + eps).max(-t + eps)
        }
        Constraint::PsdDominance { constant, coeffs, .. } => {
            let mut s = constant.clone();
            for (id, m) in coeffs {
                s.add_scaled(m, y[*id]);
            }
            s.hermitianize();
            -s.min_eigenvalue() + eps
        }
        Constraint::ExpEpigraph { t, z } => {
            let et = crate::fmath::exp(t.eval(y));
            if !et.is_finite() {
                return f64::INFINITY;
            }
            et - 1.0 - z.eval(y) + eps
        }
    }
}

/// Relax constraint `c` by the slack variable: every kind admits an affine
/// shift that enlarges its interior.
fn relax(c: &Constraint, slack: super::VarId) -> Constraint {
    match c.clone() {
        Constraint::Affine { mut expr } => {
            expr.add_term(slack, -1.0);
            expr.normalize();
            Constraint::Affine { expr }
        }
        Constraint::SecondOrder { rows, mut rhs } => {
            rhs.add_term(slack, 1.0);
            rhs.normalize();
            Constraint::SecondOrder { rows, rhs }
        }
        Constraint::PsdDominance { dim, constant, mut coeffs } => {
            coeffs.push((slack, CMat::identity(dim)));
            Constraint::PsdDominance { dim, constant, coeffs }
        }
        Constraint::ExpEpigraph { t, mut z } => {
            z.add_term(slack, 1.0);
            z.normalize();
            Constraint::ExpEpigraph { t, z }
        }
    }
}

fn phase_one(
    program: &ConicProgram,
    user_cons: &[Constraint],
    y_user: &mut Vec<f64>,
    tol: f64,
    newton_total: &mut usize,
) -> PhaseOneOutcome {
    let n_user = program.num_vars();
    let s_id = n_user;
    let n = n_user + 1;
    let mut relaxed: Vec<Constraint> = user_cons.iter().map(|c| relax(c, s_id)).collect();
    // Bound every variable: the slack objective is flat in y, so recession
    // directions of the relaxed set would otherwise send the centering to
    // minus infinity. The box is far outside any meaningful operating point.
    for k in 0..n_user {
        let mut ub = AffExpr::term(k, 1.0);
        ub.add_constant(-PHASE1_BOX);
        relaxed.push(Constraint::Affine { expr: ub });
        let mut lb = AffExpr::term(k, -1.0);
        lb.add_constant(-PHASE1_BOX);
        relaxed.push(Constraint::Affine { expr: lb });
    }
    // Slack below -1 buys nothing.
    let mut s_lb = AffExpr::term(s_id, -1.0);
    s_lb.add_constant(-1.0);
    relaxed.push(Constraint::Affine { expr: s_lb });

    let mut y = y_user.clone();
    let mut s0: f64 = 0.0;
    for c in user_cons {
        s0 = s0.max(needed_slack(c, &y, 1e-6));
    }
    if !s0.is_finite() {
        // start from the origin instead of a degenerate warm start
        y.iter_mut().for_each(|v| *v = 0.0);
        s0 = user_cons.iter().map(|c| needed_slack(c, &y, 1e-6)).fold(0.0, f64::max);
        if !s0.is_finite() {
            return PhaseOneOutcome::Stalled;
        }
    }
    y.push(s0 + 1e-3);

    let objective = SmoothObjective::phase_one(n, s_id);
    let nu: f64 = relaxed.iter().map(Constraint::barrier_degree).sum::<f64>().max(1.0);
    // done as soon as the unshifted constraints are strictly interior; the
    // slack value itself is immaterial
    let deep_enough = |y: &[f64]| {
        y[s_id] <= -1e-4 || strictly_feasible(user_cons, &y[..n_user], 1e-6)
    };
    let mut mu = 1.0;
    for _stage in 0..48 {
        match center(&relaxed, &objective, &mut y, mu, newton_total, Some(&deep_enough)) {
            CenterOutcome::Converged | CenterOutcome::MaxIter => {}
            CenterOutcome::Failed => return PhaseOneOutcome::Stalled,
        }
        // strictly feasible with margin: done early
        if y[s_id] <= -1e-7 || strictly_feasible(user_cons, &y[..n_user], 1e-6) {
            break;
        }
        if mu * nu <= tol.min(1e-7) {
            break;
        }
        mu /= 10.0;
    }

    let s_final = y[s_id];
    y_user.copy_from_slice(&y[..n_user]);
    if strict_margin(user_cons, y_user) > 0.0 {
        return PhaseOneOutcome::Feasible;
    }
    if s_final > tol {
        PhaseOneOutcome::Infeasible
    } else {
        // minimal slack within tolerance but no strict interior reachable
        PhaseOneOutcome::Stalled
    }
}

// ---------------------------------------------------------------------------
// dual polish
// ---------------------------------------------------------------------------

/// Hermitian basis of the `dim x dim` matrices, matching the block layout.
fn hermitian_basis(dim: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(dim * dim);
    for d in 0..dim {
        let mut m = CMat::zeros(dim, dim);
        m[(d, d)] = num_complex::Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut re = CMat::zeros(dim, dim);
            re[(i, j)] = num_complex::Complex64::new(1.0, 0.0);
            re[(j, i)] = num_complex::Complex64::new(1.0, 0.0);
            out.push(re);
            let mut im = CMat::zeros(dim, dim);
            im[(i, j)] = num_complex::Complex64::new(0.0, 1.0);
            im[(j, i)] = num_complex::Complex64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

/// Least-squares correction of the barrier-path duals over the active
/// constraints.
///
/// The barrier duals `mu / r_i` satisfy stationarity only up to the Newton
/// residual, which is floored by `eps * ||Hessian||` near active constraints;
/// fitting the active multipliers to the objective gradient removes that
/// floor without touching complementarity (active residuals are tiny).
fn polish_duals(
    cons: &[Constraint],
    objective: &SmoothObjective,
    y: &[f64],
    duals: &mut [DualValue],
) {
    let n = objective.n;
    // Lagrangian gradient with the current duals.
    let mut rho = vec![0.0; n];
    objective.add_gradient(y, &mut rho);

    enum Col {
        Scalar { con: usize },
        Psd { con: usize, basis: usize },
    }
    // Each candidate direction carries the sensitivity of its complementarity
    // residual to the correction; inactive constraints (large residual) get a
    // proportionally large Tikhonov weight, which pins their multipliers.
    let mut cols: Vec<(Col, Vec<f64>, f64)> = Vec::new();

    for (idx, (c, dual)) in cons.iter().zip(duals.iter()).enumerate() {
        match (c, dual) {
            (Constraint::Affine { expr }, DualValue::Scalar(l)) => {
                expr.accumulate_gradient(&mut rho, *l);
                let mut col = vec![0.0; n];
                expr.accumulate_gradient(&mut col, 1.0);
                cols.push((Col::Scalar { con: idx }, col, -expr.eval(y)));
            }
            (Constraint::SecondOrder { rows, rhs }, DualValue::Scalar(l)) => {
                let mut col = vec![0.0; n];
                for e in rows {
                    e.accumulate_gradient(&mut col, 2.0 * e.eval(y));
                }
                rhs.accumulate_gradient(&mut col, -2.0 * rhs.eval(y));
                for (r, cv) in rho.iter_mut().zip(col.iter()) {
                    *r += l * cv;
                }
                let res = crate::fmath::powi(rhs.eval(y), 2)
                    - rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum::<f64>();
                cols.push((Col::Scalar { con: idx }, col, res));
            }
            (Constraint::ExpEpigraph { t, z }, DualValue::Scalar(l)) => {
                let et = crate::fmath::exp(t.eval(y));
                let mut col = vec![0.0; n];
                t.accumulate_gradient(&mut col, et);
                z.accumulate_gradient(&mut col, -1.0);
                for (r, cv) in rho.iter_mut().zip(col.iter()) {
                    *r += l * cv;
                }
                cols.push((Col::Scalar { con: idx }, col, z.eval(y) + 1.0 - et));
            }
            (Constraint::PsdDominance { dim, constant, coeffs }, DualValue::Matrix(lam)) => {
                for (id, cm) in coeffs {
                    rho[*id] -= lam.inner(cm);
                }
                let mut s = constant.clone();
                for (id, m) in coeffs {
                    s.add_scaled(m, y[*id]);
                }
                s.hermitianize();
                for (m, basis) in hermitian_basis(*dim).into_iter().enumerate() {
                    let mut col = vec![0.0; n];
                    for (id, cm) in coeffs {
                        col[*id] -= basis.inner(cm);
                    }
                    let sens = basis.inner(&s);
                    cols.push((Col::Psd { con: idx, basis: m }, col, sens));
                }
            }
            _ => {}
        }
    }

    let k = cols.len();
    if k == 0 {
        return;
    }
    // regularized normal equations
    let mut ata = vec![0.0; k * k];
    let mut atr = vec![0.0; k];
    for (a, (_, ca, sens_a)) in cols.iter().enumerate() {
        for (b, (_, cb, _)) in cols.iter().enumerate().skip(a) {
            let dot: f64 = ca.iter().zip(cb.iter()).map(|(x, z)| x * z).sum();
            ata[a * k + b] = dot;
            ata[b * k + a] = dot;
        }
        ata[a * k + a] += sens_a * sens_a + 1e-12 * (1.0 + ata[a * k + a]);
        atr[a] = -ca.iter().zip(rho.iter()).map(|(x, r)| x * r).sum::<f64>();
    }
    if !solve_sym_pd_in_place(&mut ata, k, &mut atr) {
        return;
    }

    for ((col, _, _), delta) in cols.iter().zip(atr.iter()) {
        match col {
            Col::Scalar { con } => {
                if let DualValue::Scalar(l) = &mut duals[*con] {
                    *l = (*l + delta).max(0.0);
                }
            }
            Col::Psd { con, basis } => {
                if let (Constraint::PsdDominance { dim, .. }, DualValue::Matrix(lam)) =
                    (&cons[*con], &mut duals[*con])
                {
                    lam.add_scaled(&hermitian_basis(*dim)[*basis], *delta);
                }
            }
        }
    }
    // keep matrix duals in the PSD cone
    for dual in duals.iter_mut() {
        if let DualValue::Matrix(lam) = dual {
            if lam.min_eigenvalue() < 0.0 {
                let (vals, vecs) = lam.eigen_hermitian();
                let dim = lam.rows;
                let mut proj = CMat::zeros(dim, dim);
                for (kk, &v) in vals.iter().enumerate() {
                    if v <= 0.0 {
                        continue;
                    }
                    for i in 0..dim {
                        for j in 0..dim {
                            proj[(i, j)] += vecs[(i, kk)] * vecs[(j, kk)].conj() * v;
                        }
                    }
                }
                *lam = proj;
            }
        }
    }
}
