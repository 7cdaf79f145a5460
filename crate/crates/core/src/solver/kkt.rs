//! Independent KKT residual computation.
//!
//! Recomputes primal feasibility, dual feasibility, complementarity and
//! stationarity from a program plus a candidate solution, without touching
//! any solver internals. The norm objective terms are handled in the same
//! lifted form the solver uses (epigraph variable + second-order cone), whose
//! auxiliaries travel inside [`Solution`](super::Solution).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{AffExpr, ConicProgram, Constraint, DualValue, Solution};
use crate::linalg::CMat;

/// Violation threshold for listing a constraint as violated.
const VIOLATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
pub struct KktReport {
    /// `||grad f + sum lambda_i grad c_i||_inf` over the lifted variables.
    pub stationarity: f64,
    /// Largest primal constraint violation (0 for any feasible point).
    pub primal_violation: f64,
    /// Largest dual-feasibility violation (negative multipliers).
    pub dual_violation: f64,
    /// Largest complementary-slackness residual `|lambda_i c_i|`.
    pub complementarity: f64,
    /// Labels of constraints violated beyond tolerance.
    pub violated: Vec<String>,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal_violation)
            .max(self.dual_violation)
            .max(self.complementarity)
    }
}

fn psd_matrix(constant: &CMat, coeffs: &[(usize, CMat)], y: &[f64]) -> CMat {
    let mut s = constant.clone();
    for (id, m) in coeffs {
        s.add_scaled(m, y[*id]);
    }
    s.hermitianize();
    s
}

/// Primal violation of one constraint in its natural units.
pub fn constraint_violation(kind: &Constraint, y: &[f64]) -> f64 {
    match kind {
        Constraint::Affine { expr } => expr.eval(y).max(0.0),
        Constraint::SecondOrder { rows, rhs } => {
            let u = crate::fmath::sqrt(rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum::<f64>());
            (u - rhs.eval(y)).max(0.0)
        }
        Constraint::PsdDominance { constant, coeffs, .. } => {
            (-psd_matrix(constant, coeffs, y).min_eigenvalue()).max(0.0)
        }
        Constraint::ExpEpigraph { t, z } => (crate::fmath::exp(t.eval(y)) - z.eval(y) - 1.0).max(0.0),
    }
}

/// Recompute all KKT residuals for `solution` against `program`.
pub fn check_kkt(program: &ConicProgram, solution: &Solution) -> KktReport {
    let n_user = program.num_vars();
    let norm_groups: Vec<&Vec<AffExpr>> =
        program.objective.norms.iter().filter(|rows| !rows.is_empty()).collect();
    let n_ext = n_user + norm_groups.len();

    let mut y = solution.y.clone();
    y.resize(n_ext, 0.0);
    for (k, rows) in norm_groups.iter().enumerate() {
        y[n_user + k] = solution
            .norm_epi
            .get(k)
            .copied()
            .unwrap_or_else(|| crate::fmath::sqrt(rows.iter().map(|e| crate::fmath::powi(e.eval(&y), 2)).sum::<f64>()));
    }

    // gradient of the lifted objective
    let mut lagr = vec![0.0; n_ext];
    program.objective.linear.accumulate_gradient(&mut lagr, 1.0);
    for (w, e) in &program.objective.quads {
        e.accumulate_gradient(&mut lagr, 2.0 * w * e.eval(&y));
    }
    for k in 0..norm_groups.len() {
        lagr[n_user + k] += 1.0;
    }

    let mut report = KktReport::default();
    let add_scalar_dual = |lambda: f64, residual: f64, report: &mut KktReport| {
        report.dual_violation = report.dual_violation.max(-lambda);
        report.complementarity = report.complementarity.max((lambda * residual).abs());
    };

    // SOC stationarity uses the smooth form u^2 - t^2 <= 0 matching the
    // barrier's dual definition.
    let add_soc_gradient = |rows: &[AffExpr], rhs: &AffExpr, lambda: f64, y: &[f64], lagr: &mut [f64]| {
        for e in rows {
            e.accumulate_gradient(lagr, 2.0 * lambda * e.eval(y));
        }
        rhs.accumulate_gradient(lagr, -2.0 * lambda * rhs.eval(y));
    };

    for (c, dual) in program.constraints.iter().zip(solution.duals.iter()) {
        let viol = constraint_violation(&c.kind, &y);
        report.primal_violation = report.primal_violation.max(viol);
        if viol > VIOLATION_TOL {
            report.violated.push(c.label.clone());
        }
        match (&c.kind, dual) {
            (Constraint::Affine { expr }, DualValue::Scalar(l)) => {
                expr.accumulate_gradient(&mut lagr, *l);
                add_scalar_dual(*l, expr.eval(&y), &mut report);
            }
            (Constraint::SecondOrder { rows, rhs }, DualValue::Scalar(l)) => {
                add_soc_gradient(rows, rhs, *l, &y, &mut lagr);
                let res = rows.iter().map(|e| crate::fmath::powi(e.eval(&y), 2)).sum::<f64>()
                    - crate::fmath::powi(rhs.eval(&y), 2);
                add_scalar_dual(*l, res, &mut report);
            }
            (Constraint::PsdDominance { constant, coeffs, .. }, DualValue::Matrix(lam)) => {
                for (id, cm) in coeffs {
                    lagr[*id] -= lam.inner(cm);
                }
                let s = psd_matrix(constant, coeffs, &y);
                report.dual_violation = report.dual_violation.max(-lam.min_eigenvalue());
                report.complementarity = report.complementarity.max(lam.inner(&s).abs());
            }
            (Constraint::ExpEpigraph { t, z }, DualValue::Scalar(l)) => {
                let et = crate::fmath::exp(t.eval(&y));
                t.accumulate_gradient(&mut lagr, l * et);
                z.accumulate_gradient(&mut lagr, -l);
                add_scalar_dual(*l, et - z.eval(&y) - 1.0, &mut report);
            }
            // mismatched dual kind (failed solve); count as zero multiplier
            _ => {}
        }
    }

    for (k, rows) in norm_groups.iter().enumerate() {
        let rhs = AffExpr::var(n_user + k);
        let lambda = solution.norm_epi_duals.get(k).copied().unwrap_or(0.0);
        add_soc_gradient(rows, &rhs, lambda, &y, &mut lagr);
        let res =
            rows.iter().map(|e| crate::fmath::powi(e.eval(&y), 2)).sum::<f64>() - crate::fmath::powi(rhs.eval(&y), 2);
        add_scalar_dual(lambda, res, &mut report);
    }

    report.stationarity = lagr.iter().fold(0.0, |m, g| m.max(g.abs()));
    report
}
