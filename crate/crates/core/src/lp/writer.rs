//! Line-oriented LP-file dump (CPLEX LP layout) for cross-checking problems
//! against external solvers. Output is deterministic for a given problem:
//! coefficients print with the shortest round-trip float representation.

use std::fmt::Write as _;

use super::{RowSense, StandardFormLp};

/// Integrality and SOS annotations appended by the MILP layer.
#[derive(Debug, Clone, Default)]
pub struct MilpAnnotations {
    pub binaries: Vec<usize>,
    /// Ordered SOS2 groups as lists of column indices.
    pub sos2: Vec<Vec<usize>>,
}

fn fmt_coeff(out: &mut String, first: bool, coeff: f64, name: &str) {
    if coeff < 0.0 {
        let _ = write!(out, "{}{} {}", if first { "-" } else { "- " }, -coeff, name);
    } else {
        let _ = write!(out, "{}{} {}", if first { "" } else { "+ " }, coeff, name);
    }
}

pub fn write_lp(lp: &StandardFormLp, name: &str, annotations: Option<&MilpAnnotations>) -> String {
    let n = lp.n_cols();
    let m = lp.n_rows();
    let col_name = |j: usize| format!("x{j}");
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {name}");
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for j in 0..n {
        let c = lp.objective[j];
        if c != 0.0 {
            out.push(' ');
            fmt_coeff(&mut out, first, c, &col_name(j));
            first = false;
        }
    }
    if first {
        out.push_str(" 0 x0");
    }
    out.push('\n');

    out.push_str("Subject To\n");
    // gather rows from the column-major matrix
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (r, c, v) in lp.a.triplets() {
        rows[r].push((c, v));
    }
    for i in 0..m {
        let _ = write!(out, " c{i}:");
        let mut first = true;
        for &(j, v) in &rows[i] {
            out.push(' ');
            fmt_coeff(&mut out, first, v, &col_name(j));
            first = false;
        }
        if first {
            out.push_str(" 0 x0");
        }
        let op = match lp.senses[i] {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", lp.rhs[i]);
    }

    out.push_str("Bounds\n");
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let nm = col_name(j);
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {nm} free");
        } else if l == u {
            let _ = writeln!(out, " {nm} = {l}");
        } else if u == f64::INFINITY {
            let _ = writeln!(out, " {l} <= {nm}");
        } else if l == f64::NEG_INFINITY {
            let _ = writeln!(out, " {nm} <= {u}");
        } else {
            let _ = writeln!(out, " {l} <= {nm} <= {u}");
        }
    }

    if let Some(ann) = annotations {
        if !ann.binaries.is_empty() {
            out.push_str("Binaries\n");
            for &j in &ann.binaries {
                let _ = writeln!(out, " {}", col_name(j));
            }
        }
        if !ann.sos2.is_empty() {
            out.push_str("SOS\n");
            for (g, group) in ann.sos2.iter().enumerate() {
                let _ = write!(out, " s{g}: S2::");
                for (pos, &j) in group.iter().enumerate() {
                    let _ = write!(out, " {}:{}", col_name(j), pos + 1);
                }
                out.push('\n');
            }
        }
    }
    out.push_str("End\n");
    out
}
