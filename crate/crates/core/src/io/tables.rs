//! LaTeX `tabular` rows for eigenvalue and radii tables.

use std::fmt::Write as _;

use crate::analysis::{RadiiSummary, SpectrumComparison};
use crate::solvers::Method;

/// Rounds to `decimals` places and drops trailing zeros: `0.4500 -> 0.45`.
pub fn compact(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Two decimals for magnitudes of at least one, four below.
pub fn eigenvalue_cell(x: f64) -> String {
    compact(x, if x.abs() >= 1.0 { 2 } else { 4 })
}

pub fn method_display_name(m: Method) -> &'static str {
    match m {
        Method::RnmGr => "RNM-Gr",
        Method::RnmSt => "RNM-St",
        Method::MrnmSt => "mRNM-St",
        Method::Nmlm => "NMLM",
    }
}

fn row(out: &mut String, label: &str, cells: impl Iterator<Item = String>) {
    let cells: Vec<String> = cells.collect();
    let _ = writeln!(out, "{label} & {} \\\\", cells.join(" & "));
}

/// Paired Grassmann/Stiefel eigenvalue rows, `per_row` values each, with
/// `\midrule` between blocks and the extra Stiefel eigenvalues last.
pub fn eigenvalue_table(cmp: &SpectrumComparison, per_row: usize) -> String {
    let per_row = per_row.max(1);
    let dim_gr = cmp.eigs_gr.len();
    let mut out = String::new();
    let mut blocks = 0;
    for start in (0..dim_gr).step_by(per_row) {
        let end = (start + per_row).min(dim_gr);
        if blocks > 0 {
            out.push_str("\\midrule\n");
        }
        row(&mut out, "RNM-Gr", cmp.eigs_gr[start..end].iter().map(|&x| eigenvalue_cell(x)));
        row(&mut out, "RNM-St", cmp.eigs_st[start..end].iter().map(|&x| eigenvalue_cell(x)));
        blocks += 1;
    }
    for start in (dim_gr..cmp.eigs_st.len()).step_by(per_row) {
        let end = (start + per_row).min(cmp.eigs_st.len());
        if blocks > 0 {
            out.push_str("\\midrule\n");
        }
        row(&mut out, "RNM-St", cmp.eigs_st[start..end].iter().map(|&x| eigenvalue_cell(x)));
        blocks += 1;
    }
    out
}

/// `Method & R_min & R_avg & R_max \\` rows with three decimals.
pub fn radii_table(rows: &[(Method, RadiiSummary)]) -> String {
    let mut out = String::new();
    for (m, s) in rows {
        row(
            &mut out,
            method_display_name(*m),
            [s.r_min, s.r_avg, s.r_max].into_iter().map(|x| compact(x, 3)),
        );
    }
    out
}
