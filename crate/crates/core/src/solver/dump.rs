//! Plain-text program dump.
//!
//! One declaration per line; affine expressions are written as
//! `c=<constant> <var>:<weight> ...` and multiple expressions on one line are
//! separated by `|`. Hermitian matrices are written as `dim` followed by
//! `re,im` entries in row-major order. The format is exact (floats round-trip
//! through Rust's shortest representation) and is consumed by the CLI's
//! `solve-dump` subcommand for solver regression tests.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_complex::Complex64;

use super::{AffExpr, BlockDef, ConicProgram, Constraint};
use crate::linalg::CMat;

#[derive(Debug, Clone, PartialEq)]
pub struct DumpError(pub String);

impl core::fmt::Display for DumpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "malformed program dump: {}", self.0)
    }
}

impl core::error::Error for DumpError {}

fn write_expr(out: &mut String, e: &AffExpr) {
    out.push_str(&format!("c={:e}", e.constant));
    for (id, w) in &e.terms {
        out.push_str(&format!(" {id}:{w:e}"));
    }
}

fn write_matrix(out: &mut String, m: &CMat) {
    out.push_str(&format!("{}", m.rows));
    for i in 0..m.rows {
        for j in 0..m.cols {
            out.push_str(&format!(" {:e},{:e}", m[(i, j)].re, m[(i, j)].im));
        }
    }
}

/// Serialize a program to the plain-text dump format.
pub fn write_program(program: &ConicProgram) -> String {
    let mut out = String::from("fdcell-program v1\n");
    for name in &program.var_names {
        out.push_str(&format!("var {}\n", name.replace(' ', "_")));
    }
    for b in &program.blocks {
        out.push_str(&format!("block {} {} {}\n", b.name.replace(' ', "_"), b.first, b.dim));
    }
    out.push_str("obj_linear ");
    write_expr(&mut out, &program.objective.linear);
    out.push('\n');
    for rows in &program.objective.norms {
        out.push_str("obj_norm ");
        for (i, r) in rows.iter().enumerate() {
            if i > 0 {
                out.push_str(" | ");
            }
            write_expr(&mut out, r);
        }
        out.push('\n');
    }
    for (w, e) in &program.objective.quads {
        out.push_str(&format!("obj_quad {w:e} "));
        write_expr(&mut out, e);
        out.push('\n');
    }
    for c in &program.constraints {
        let label = c.label.replace(' ', "_");
        match &c.kind {
            Constraint::Affine { expr } => {
                out.push_str(&format!("con affine {label} "));
                write_expr(&mut out, expr);
                out.push('\n');
            }
            Constraint::SecondOrder { rows, rhs } => {
                out.push_str(&format!("con soc {label} "));
                for r in rows {
                    write_expr(&mut out, r);
                    out.push_str(" | ");
                }
                write_expr(&mut out, rhs);
                out.push('\n');
            }
            Constraint::PsdDominance { dim: _, constant, coeffs } => {
                out.push_str(&format!("con psd {label} "));
                write_matrix(&mut out, constant);
                for (id, m) in coeffs {
                    out.push_str(&format!(" @{id} "));
                    write_matrix(&mut out, m);
                }
                out.push('\n');
            }
            Constraint::ExpEpigraph { t, z } => {
                out.push_str(&format!("con exp {label} "));
                write_expr(&mut out, t);
                out.push_str(" | ");
                write_expr(&mut out, z);
                out.push('\n');
            }
        }
    }
    out
}

fn parse_expr(text: &str) -> Result<AffExpr, DumpError> {
    let mut e = AffExpr::default();
    let mut saw_const = false;
    for tok in text.split_whitespace() {
        if let Some(c) = tok.strip_prefix("c=") {
            e.constant = c.parse().map_err(|_| DumpError(format!("bad constant '{c}'")))?;
            saw_const = true;
        } else {
            let (id, w) = tok
                .split_once(':')
                .ok_or_else(|| DumpError(format!("bad term '{tok}'")))?;
            let id = id.parse().map_err(|_| DumpError(format!("bad var id '{id}'")))?;
            let w = w.parse().map_err(|_| DumpError(format!("bad weight '{w}'")))?;
            e.add_term(id, w);
        }
    }
    if !saw_const {
        return Err(DumpError(format!("expression '{text}' missing constant")));
    }
    e.normalize();
    Ok(e)
}

fn parse_matrix(text: &str) -> Result<CMat, DumpError> {
    let mut toks = text.split_whitespace();
    let dim: usize = toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| DumpError("matrix missing dimension".to_string()))?;
    let mut m = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let tok = toks
                .next()
                .ok_or_else(|| DumpError("matrix entry missing".to_string()))?;
            let (re, im) = tok
                .split_once(',')
                .ok_or_else(|| DumpError(format!("bad matrix entry '{tok}'")))?;
            m[(i, j)] = Complex64::new(
                re.parse().map_err(|_| DumpError(format!("bad real '{re}'")))?,
                im.parse().map_err(|_| DumpError(format!("bad imag '{im}'")))?,
            );
        }
    }
    if toks.next().is_some() {
        return Err(DumpError("trailing matrix entries".to_string()));
    }
    Ok(m)
}

/// Parse a program dump produced by [`write_program`].
pub fn parse_program(text: &str) -> Result<ConicProgram, DumpError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("fdcell-program v1") {
        return Err(DumpError("missing 'fdcell-program v1' header".to_string()));
    }
    let mut program = ConicProgram::new();
    for line in lines {
        let (tag, rest) = line.split_once(' ').unwrap_or((line.trim(), ""));
        match tag {
            "var" => {
                program.add_var(rest.trim().to_string());
            }
            "block" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(DumpError(format!("bad block line '{line}'")));
                }
                let first = toks[1].parse().map_err(|_| DumpError("bad block offset".to_string()))?;
                let dim = toks[2].parse().map_err(|_| DumpError("bad block dim".to_string()))?;
                program.blocks.push(BlockDef { name: toks[0].to_string(), first, dim });
            }
            "obj_linear" => program.objective.linear = parse_expr(rest)?,
            "obj_norm" => {
                let rows: Result<Vec<AffExpr>, _> = rest.split('|').map(parse_expr).collect();
                program.objective.norms.push(rows?);
            }
            "obj_quad" => {
                let (w, expr) = rest
                    .split_once(' ')
                    .ok_or_else(|| DumpError(format!("bad quad line '{line}'")))?;
                let w: f64 = w.parse().map_err(|_| DumpError(format!("bad weight '{w}'")))?;
                program.objective.quads.push((w, parse_expr(expr)?));
            }
            "con" => {
                let (kind, rest) = rest
                    .split_once(' ')
                    .ok_or_else(|| DumpError(format!("bad constraint line '{line}'")))?;
                let (label, body) = rest
                    .split_once(' ')
                    .ok_or_else(|| DumpError(format!("bad constraint line '{line}'")))?;
                let label = label.to_string();
                match kind {
                    "affine" => program.add_affine(label, parse_expr(body)?),
                    "soc" => {
                        let mut parts: Vec<AffExpr> =
                            body.split('|').map(parse_expr).collect::<Result<_, _>>()?;
                        let rhs = parts
                            .pop()
                            .ok_or_else(|| DumpError("soc needs an rhs".to_string()))?;
                        program.add_soc(label, parts, rhs);
                    }
                    "psd" => {
                        let mut sections = body.split('@');
                        let constant = parse_matrix(
                            sections.next().ok_or_else(|| DumpError("psd missing constant".to_string()))?,
                        )?;
                        let mut coeffs = Vec::new();
                        for sect in sections {
                            let (id, mat) = sect
                                .trim()
                                .split_once(' ')
                                .ok_or_else(|| DumpError("psd coefficient missing matrix".to_string()))?;
                            let id = id
                                .parse()
                                .map_err(|_| DumpError(format!("bad psd var id '{id}'")))?;
                            coeffs.push((id, parse_matrix(mat)?));
                        }
                        let dim = constant.rows;
                        program.add_psd(label, dim, constant, coeffs);
                    }
                    "exp" => {
                        let (t, z) = body
                            .split_once('|')
                            .ok_or_else(|| DumpError("exp needs t | z".to_string()))?;
                        program.add_exp_epigraph(label, parse_expr(t)?, parse_expr(z)?);
                    }
                    other => return Err(DumpError(format!("unknown constraint kind '{other}'"))),
                }
            }
            other => return Err(DumpError(format!("unknown line tag '{other}'"))),
        }
    }
    super::validate_program(&program).map_err(|e| DumpError(e.to_string()))?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, Objective};
    use alloc::vec;

    #[test]
    fn roundtrip_preserves_program_and_solution() {
        let mut prog = ConicProgram::new();
        let u = prog.add_psd_block("U", 2);
        let x = prog.add_var("x".to_string());
        let h = [Complex64::new(0.8, -0.1), Complex64::new(0.3, 0.5)];
        let mut floor = AffExpr::constant(1.0);
        floor.add_expr(&prog.quad_form_expr(u, &h), -1.0);
        prog.add_affine("signal".to_string(), floor);
        prog.add_exp_epigraph("rate".to_string(), AffExpr::var(x), AffExpr::constant(3.0));
        prog.add_soc(
            "cap".to_string(),
            vec![AffExpr::var(x)],
            AffExpr::constant(10.0),
        );
        let mut lin = prog.trace_expr(u);
        lin.add_term(x, -1.0);
        prog.objective = Objective {
            linear: lin,
            norms: vec![vec![AffExpr::term(x, 1.0), AffExpr::constant(0.5)]],
            quads: vec![(0.3, AffExpr::var(x))],
        };

        let text = write_program(&prog);
        let back = parse_program(&text).unwrap();
        assert_eq!(prog, back);

        let a = solve(&prog, 1e-8).unwrap();
        let b = solve(&back, 1e-8).unwrap();
        assert_eq!(a.y, b.y, "identical programs must solve identically");
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(parse_program("nope").is_err());
        assert!(parse_program("fdcell-program v1\nwat 3").is_err());
        assert!(parse_program("fdcell-program v1\ncon affine bad c=x").is_err());
    }
}
