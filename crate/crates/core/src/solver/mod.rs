//! Small-scale convex solver over scalar and Hermitian-PSD block variables.
//!
//! Programs mix four constraint kinds — affine inequalities, second-order
//! cones, PSD dominance of affine-in-variables Hermitian matrices, and
//! exponential epigraphs `e^t <= 1 + z` — under an objective of linear terms,
//! l2 norms of affine maps, and convex quadratic penalties. That is exactly
//! the family produced by the SPCA surrogate and its per-BS ADMM subproblems.
//!
//! The solve itself ([`barrier`]) is a plain barrier/Newton path-following
//! method on a real parametrization of the Hermitian blocks; every block here
//! is tiny (antenna counts of 2), so dense Newton steps are cheap and the
//! whole solver stays dependency-free and deterministic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::linalg::CMat;

pub mod barrier;
pub mod dump;
pub mod kkt;

pub use barrier::{solve, solve_warm};
pub use kkt::{check_kkt, KktReport};

pub type VarId = usize;

/// Sparse affine expression `constant + sum w_k * y_k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl AffExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(id: VarId) -> Self {
        Self { terms: vec![(id, 1.0)], constant: 0.0 }
    }

    pub fn term(id: VarId, w: f64) -> Self {
        Self { terms: vec![(id, w)], constant: 0.0 }
    }

    pub fn add_term(&mut self, id: VarId, w: f64) -> &mut Self {
        if w != 0.0 {
            self.terms.push((id, w));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &AffExpr, scale: f64) -> &mut Self {
        self.constant += other.constant * scale;
        for &(id, w) in &other.terms {
            self.add_term(id, w * scale);
        }
        self
    }

    /// Merge duplicate variable ids; keeps evaluation and derivative loops
    /// cheap and makes the textual dump canonical.
    pub fn normalize(&mut self) {
        self.terms.sort_unstable_by_key(|&(id, _)| id);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(id, w) in &self.terms {
            match merged.last_mut() {
                Some((last_id, last_w)) if *last_id == id => *last_w += w,
                _ => merged.push((id, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        self.terms = merged;
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(id, w)| w * y[id]).sum::<f64>()
    }

    /// `g += scale * coefficients`.
    pub fn accumulate_gradient(&self, g: &mut [f64], scale: f64) {
        for &(id, w) in &self.terms {
            g[id] += scale * w;
        }
    }
}

/// One constraint; all kinds describe a convex set with the variables only
/// entering affinely.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `expr(y) <= 0`
    Affine { expr: AffExpr },
    /// `|| rows(y) ||_2 <= rhs(y)`
    SecondOrder { rows: Vec<AffExpr>, rhs: AffExpr },
    /// `constant + sum y_k coeff_k  >= 0` (Hermitian PSD dominance)
    PsdDominance { dim: usize, constant: CMat, coeffs: Vec<(VarId, CMat)> },
    /// `exp(t(y)) <= 1 + z(y)`
    ExpEpigraph { t: AffExpr, z: AffExpr },
}

impl Constraint {
    pub fn kind_tag(&self) -> &'static str {
        match self {
            Constraint::Affine { .. } => "affine",
            Constraint::SecondOrder { .. } => "soc",
            Constraint::PsdDominance { .. } => "psd",
            Constraint::ExpEpigraph { .. } => "exp",
        }
    }

    /// Degree of the associated log barrier (used in the duality-gap proxy).
    pub fn barrier_degree(&self) -> f64 {
        match self {
            Constraint::Affine { .. } => 1.0,
            Constraint::SecondOrder { .. } => 2.0,
            Constraint::PsdDominance { dim, .. } => *dim as f64,
            Constraint::ExpEpigraph { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintDef {
    pub label: String,
    pub kind: Constraint,
}

/// Objective `linear(y) + sum_k ||norm_k(y)||_2 + sum_m w_m * quad_m(y)^2`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    pub linear: AffExpr,
    pub norms: Vec<Vec<AffExpr>>,
    pub quads: Vec<(f64, AffExpr)>,
}

impl Objective {
    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut v = self.linear.eval(y);
        for rows in &self.norms {
            v += crate::fmath::sqrt(rows.iter().map(|e| crate::fmath::powi(e.eval(y), 2)).sum::<f64>());
        }
        for (w, e) in &self.quads {
            v += w * crate::fmath::powi(e.eval(y), 2);
        }
        v
    }
}

/// Hermitian block registration: `dim * dim` real coordinates starting at
/// `first`, laid out as the `dim` diagonal entries followed by the strict
/// upper triangle in row-major (re, im) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDef {
    pub name: String,
    pub first: VarId,
    pub dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    pub var_names: Vec<String>,
    pub blocks: Vec<BlockDef>,
    pub constraints: Vec<ConstraintDef>,
    pub objective: Objective,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_var(&mut self, name: String) -> VarId {
        self.var_names.push(name);
        self.var_names.len() - 1
    }

    /// Scalar variable with a lower bound, realized as an affine constraint.
    pub fn add_var_lb(&mut self, name: String, lo: f64) -> VarId {
        let id = self.add_var(name);
        let mut expr = AffExpr::constant(lo);
        expr.add_term(id, -1.0);
        self.add_affine(format!("lb[{}]", self.var_names[id]), expr);
        id
    }

    pub fn add_affine(&mut self, label: String, mut expr: AffExpr) {
        expr.normalize();
        self.constraints.push(ConstraintDef { label, kind: Constraint::Affine { expr } });
    }

    pub fn add_soc(&mut self, label: String, mut rows: Vec<AffExpr>, mut rhs: AffExpr) {
        for r in rows.iter_mut() {
            r.normalize();
        }
        rhs.normalize();
        self.constraints.push(ConstraintDef { label, kind: Constraint::SecondOrder { rows, rhs } });
    }

    pub fn add_psd(&mut self, label: String, dim: usize, constant: CMat, coeffs: Vec<(VarId, CMat)>) {
        debug_assert_eq!(constant.rows, dim);
        self.constraints
            .push(ConstraintDef { label, kind: Constraint::PsdDominance { dim, constant, coeffs } });
    }

    pub fn add_exp_epigraph(&mut self, label: String, mut t: AffExpr, mut z: AffExpr) {
        t.normalize();
        z.normalize();
        self.constraints.push(ConstraintDef { label, kind: Constraint::ExpEpigraph { t, z } });
    }

    /// Register a Hermitian PSD block variable of the given dimension. The
    /// `dim^2` real coordinates are appended and the PSD constraint on the
    /// block itself is added immediately.
    pub fn add_psd_block(&mut self, name: &str, dim: usize) -> BlockId {
        let id = self.add_block_raw(name, dim);
        let coeffs = self.block_basis(id);
        self.add_psd(format!("psd[{name}]"), dim, CMat::zeros(dim, dim), coeffs);
        id
    }

    /// Register the block coordinates without the PSD constraint (used by the
    /// dump parser, which reads constraints explicitly).
    pub fn add_block_raw(&mut self, name: &str, dim: usize) -> BlockId {
        let first = self.num_vars();
        for d in 0..dim {
            self.add_var(format!("{name}.d{d}"));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                self.add_var(format!("{name}.re{i}{j}"));
                self.add_var(format!("{name}.im{i}{j}"));
            }
        }
        self.blocks.push(BlockDef { name: String::from(name), first, dim });
        BlockId(self.blocks.len() - 1)
    }

    pub fn block(&self, id: BlockId) -> &BlockDef {
        &self.blocks[id.0]
    }

    /// Coordinate index of the (i, j) upper-triangle entry's (re, im) pair.
    fn offdiag_index(dim: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // entries before row i: sum_{r<i} (dim-1-r), each two coordinates
        let before: usize = (0..i).map(|r| dim - 1 - r).sum();
        let in_row = j - i - 1;
        dim + 2 * (before + in_row)
    }

    /// Hermitian basis matrices of a block: for each real coordinate `k`, the
    /// matrix `C_k` with `M(y) = sum_k y_k C_k`.
    pub fn block_basis(&self, id: BlockId) -> Vec<(VarId, CMat)> {
        let def = self.block(id);
        let dim = def.dim;
        let mut out = Vec::with_capacity(dim * dim);
        for d in 0..dim {
            let mut m = CMat::zeros(dim, dim);
            m[(d, d)] = Complex64::new(1.0, 0.0);
            out.push((def.first + d, m));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let k = def.first + Self::offdiag_index(dim, i, j);
                let mut re = CMat::zeros(dim, dim);
                re[(i, j)] = Complex64::new(1.0, 0.0);
                re[(j, i)] = Complex64::new(1.0, 0.0);
                out.push((k, re));
                let mut im = CMat::zeros(dim, dim);
                im[(i, j)] = Complex64::new(0.0, 1.0);
                im[(j, i)] = Complex64::new(0.0, -1.0);
                out.push((k + 1, im));
            }
        }
        out
    }

    /// Reconstruct a block's Hermitian matrix from a solution vector.
    pub fn block_matrix(&self, id: BlockId, y: &[f64]) -> CMat {
        let def = self.block(id);
        let dim = def.dim;
        let mut m = CMat::zeros(dim, dim);
        for d in 0..dim {
            m[(d, d)] = Complex64::new(y[def.first + d], 0.0);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let k = def.first + Self::offdiag_index(dim, i, j);
                m[(i, j)] = Complex64::new(y[k], y[k + 1]);
                m[(j, i)] = m[(i, j)].conj();
            }
        }
        m
    }

    /// Coordinates of a Hermitian matrix in block layout (for warm starts).
    pub fn block_coords(m: &CMat) -> Vec<f64> {
        let dim = m.rows;
        let mut out = Vec::with_capacity(dim * dim);
        for d in 0..dim {
            out.push(m[(d, d)].re);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                out.push(m[(i, j)].re);
                out.push(m[(i, j)].im);
            }
        }
        out
    }

    /// `tr(U)` of a block as an affine expression.
    pub fn trace_expr(&self, id: BlockId) -> AffExpr {
        let def = self.block(id);
        let mut e = AffExpr::default();
        for d in 0..def.dim {
            e.add_term(def.first + d, 1.0);
        }
        e
    }

    /// `Re tr(G U)` for Hermitian `G` as an affine expression in the block
    /// coordinates: diagonal weights `G_dd`, off-diagonal weights
    /// `2 Re G_ij` and `2 Im G_ij`.
    pub fn herm_inner_expr(&self, id: BlockId, g: &CMat) -> AffExpr {
        let def = self.block(id);
        let dim = def.dim;
        debug_assert_eq!(g.rows, dim);
        let mut e = AffExpr::default();
        for d in 0..dim {
            e.add_term(def.first + d, g[(d, d)].re);
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let k = def.first + Self::offdiag_index(dim, i, j);
                e.add_term(k, 2.0 * g[(i, j)].re);
                e.add_term(k + 1, 2.0 * g[(i, j)].im);
            }
        }
        e
    }

    /// `h^H U h` as an affine expression (the quadratic form is linear in the
    /// block coordinates): `tr(U h h^H)`.
    pub fn quad_form_expr(&self, id: BlockId, h: &[Complex64]) -> AffExpr {
        self.herm_inner_expr(id, &CMat::outer(h))
    }

    /// Basis for the congruence `A U A^H` of a block: for each coordinate `k`
    /// of `U`, the Hermitian matrix `A C_k A^H`. Used to express covariance
    /// dominance constraints like `Phi >= sum_k H U_k H^H`.
    pub fn congruence_basis(&self, id: BlockId, a: &CMat) -> Vec<(VarId, CMat)> {
        self.block_basis(id)
            .into_iter()
            .map(|(k, c)| (k, a.congruence(&c)))
            .collect()
    }

    /// Total barrier degree; the duality-gap proxy is `mu * degree`.
    pub fn barrier_degree(&self) -> f64 {
        self.constraints.iter().map(|c| c.kind.barrier_degree()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
    NumericalFailure,
}

/// Per-constraint dual estimate.
#[derive(Debug, Clone)]
pub enum DualValue {
    Scalar(f64),
    Matrix(CMat),
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    /// Values of the program's variables.
    pub y: Vec<f64>,
    /// True objective value at `y`.
    pub objective: f64,
    /// Barrier-induced dual estimates, one per program constraint.
    pub duals: Vec<DualValue>,
    /// Norm-epigraph auxiliaries appended by the solver (one per objective
    /// norm term) with their SOC duals; kept so that the KKT check can
    /// reconstruct the smooth extended problem.
    pub norm_epi: Vec<f64>,
    pub norm_epi_duals: Vec<f64>,
    /// `mu * barrier_degree` at termination.
    pub gap_proxy: f64,
    pub newton_iters: usize,
    /// Independently recomputed KKT residuals.
    pub kkt: kkt::KktReport,
}

impl Solution {
    pub fn block_matrix(&self, program: &ConicProgram, id: BlockId) -> CMat {
        program.block_matrix(id, &self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// A constraint or objective references a variable that does not exist.
    MalformedProgram(String),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::MalformedProgram(msg) => write!(f, "malformed program: {msg}"),
        }
    }
}

impl core::error::Error for SolverError {}

pub(crate) fn validate_program(program: &ConicProgram) -> Result<(), SolverError> {
    let n = program.num_vars();
    let check_expr = |e: &AffExpr, what: &str| -> Result<(), SolverError> {
        for &(id, w) in &e.terms {
            if id >= n {
                return Err(SolverError::MalformedProgram(format!(
                    "{what} references variable {id} but the program has {n}"
                )));
            }
            if !w.is_finite() {
                return Err(SolverError::MalformedProgram(format!(
                    "{what} has a non-finite coefficient"
                )));
            }
        }
        if !e.constant.is_finite() {
            return Err(SolverError::MalformedProgram(format!("{what} has a non-finite constant")));
        }
        Ok(())
    };
    check_expr(&program.objective.linear, "objective")?;
    for rows in &program.objective.norms {
        for r in rows {
            check_expr(r, "objective norm")?;
        }
    }
    for (w, e) in &program.objective.quads {
        if !(*w >= 0.0) {
            return Err(SolverError::MalformedProgram(format!(
                "quadratic weight {w} must be non-negative"
            )));
        }
        check_expr(e, "objective quad")?;
    }
    for c in &program.constraints {
        match &c.kind {
            Constraint::Affine { expr } => check_expr(expr, &c.label)?,
            Constraint::SecondOrder { rows, rhs } => {
                for r in rows {
                    check_expr(r, &c.label)?;
                }
                check_expr(rhs, &c.label)?;
            }
            Constraint::PsdDominance { dim, constant, coeffs } => {
                if constant.rows != *dim || constant.cols != *dim {
                    return Err(SolverError::MalformedProgram(format!(
                        "{}: constant matrix dimension mismatch",
                        c.label
                    )));
                }
                for (id, m) in coeffs {
                    if *id >= n {
                        return Err(SolverError::MalformedProgram(format!(
                            "{}: references variable {id} out of range",
                            c.label
                        )));
                    }
                    if m.rows != *dim || m.cols != *dim {
                        return Err(SolverError::MalformedProgram(format!(
                            "{}: coefficient matrix dimension mismatch",
                            c.label
                        )));
                    }
                }
            }
            Constraint::ExpEpigraph { t, z } => {
                check_expr(t, &c.label)?;
                check_expr(z, &c.label)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_layout_roundtrip() {
        let mut prog = ConicProgram::new();
        let b = prog.add_psd_block("U", 3);
        assert_eq!(prog.num_vars(), 9);
        let m = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new(1.0 + i as f64, 0.0)
            } else if i < j {
                Complex64::new(0.1 * (i + j) as f64, 0.2 * (j - i) as f64)
            } else {
                Complex64::new(0.1 * (i + j) as f64, -0.2 * (i - j) as f64)
            }
        });
        let coords = ConicProgram::block_coords(&m);
        let back = prog.block_matrix(b, &coords);
        assert!(back.sub(&m).max_abs() < 1e-15);
    }

    #[test]
    fn quad_form_expr_matches_direct_quadratic_form() {
        let mut prog = ConicProgram::new();
        let b = prog.add_psd_block("U", 2);
        let h = [Complex64::new(0.7, -0.3), Complex64::new(-1.1, 0.4)];
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::new(2.0, 0.0),
            (1, 1) => Complex64::new(1.5, 0.0),
            (0, 1) => Complex64::new(0.3, 0.9),
            _ => Complex64::new(0.3, -0.9),
        });
        let y = ConicProgram::block_coords(&m);
        let expr = prog.quad_form_expr(b, &h);
        assert!((expr.eval(&y) - m.quad_form(&h)).abs() < 1e-12);
    }

    #[test]
    fn block_basis_reconstructs_matrix() {
        let mut prog = ConicProgram::new();
        let b = prog.add_psd_block("X", 2);
        let m = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (1, 1) => Complex64::new(-2.0, 0.0),
            (0, 1) => Complex64::new(0.5, -1.5),
            _ => Complex64::new(0.5, 1.5),
        });
        let y = ConicProgram::block_coords(&m);
        let mut recon = CMat::zeros(2, 2);
        for (k, c) in prog.block_basis(b) {
            recon.add_scaled(&c, y[k]);
        }
        assert!(recon.sub(&m).max_abs() < 1e-15);
    }

    #[test]
    fn affexpr_normalize_merges_terms() {
        let mut e = AffExpr::default();
        e.add_term(3, 1.0).add_term(1, 2.0).add_term(3, -0.5).add_constant(4.0);
        e.normalize();
        assert_eq!(e.terms, vec![(1, 2.0), (3, 0.5)]);
        assert_eq!(e.eval(&[0.0, 10.0, 0.0, 2.0]), 4.0 + 20.0 + 1.0);
    }

    #[test]
    fn validation_rejects_out_of_range_vars() {
        let mut prog = ConicProgram::new();
        let _x = prog.add_var(String::from("x"));
        prog.add_affine(String::from("bad"), AffExpr::term(5, 1.0));
        assert!(validate_program(&prog).is_err());
    }
}
