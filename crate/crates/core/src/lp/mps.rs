use std::fmt::Write;

use super::{LinearProgram, Relation};

/// Fixed-field MPS rendering of `lp`.
///
/// Fixed MPS allows 8-character names, so rows and columns are renamed to
/// `R0000001` / `C0000001` and the original names are listed in `*` comment
/// lines. Output is byte-deterministic for a given program.
pub fn write_fixed_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let col = |j: usize| format!("C{:07}", j + 1);
    let row = |i: usize| format!("R{:07}", i + 1);

    let _ = writeln!(out, "* generated by gridplan-core");
    for (j, n) in lp.var_names.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", col(j), n);
    }
    for (i, r) in lp.rows.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row(i), r.name);
    }
    let _ = writeln!(out, "NAME          {}", truncate(name, 8));
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  COST");
    for (i, r) in lp.rows.iter().enumerate() {
        let t = match r.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
            Relation::Ge => "G",
        };
        let _ = writeln!(out, " {:<2} {}", t, row(i));
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, r) in lp.rows.iter().enumerate() {
        for &(j, a) in &r.coeffs {
            by_col[j].push((i, a));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, entries) in by_col.iter().enumerate() {
        let mut fields: Vec<(String, f64)> = Vec::new();
        if lp.objective[j] != 0.0 {
            fields.push(("COST".to_string(), lp.objective[j]));
        }
        fields.extend(entries.iter().map(|&(i, a)| (row(i), a)));
        if fields.is_empty() {
            // keep the column declared
            fields.push(("COST".to_string(), 0.0));
        }
        for pair in fields.chunks(2) {
            write_data_line(&mut out, "", &col(j), pair);
        }
    }

    let _ = writeln!(out, "RHS");
    let rhs: Vec<(String, f64)> = lp
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rhs != 0.0)
        .map(|(i, r)| (row(i), r.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        write_data_line(&mut out, "", "RHS", pair);
    }

    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo == hi {
            write_data_line(&mut out, "FX", "BND", &[(col(j), lo)]);
            continue;
        }
        if lo != 0.0 {
            write_data_line(&mut out, "LO", "BND", &[(col(j), lo)]);
        }
        if hi.is_finite() {
            write_data_line(&mut out, "UP", "BND", &[(col(j), hi)]);
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn write_data_line(out: &mut String, kind: &str, name: &str, pairs: &[(String, f64)]) {
    // columns: 2-3 kind, 5-12 name, 15-22 name, 25-36 value, 40-47 name, 50-61 value
    let mut line = format!(
        " {:<2} {:<8}  {:<8}  {:>12}",
        kind,
        name,
        pairs[0].0,
        fmt_value(pairs[0].1)
    );
    if let Some((n, v)) = pairs.get(1) {
        let _ = write!(line, "   {:<8}  {:>12}", n, fmt_value(*v));
    }
    let _ = writeln!(out, "{}", line.trim_end());
}

/// Shortest rendering that fits the 12-character value field.
fn fmt_value(v: f64) -> String {
    let plain = format!("{}", v);
    if plain.len() <= 12 {
        return plain;
    }
    for digits in (0..=7).rev() {
        let s = format!("{:.*e}", digits, v);
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{:.0e}", v)
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}
