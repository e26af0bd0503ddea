//! Fixed-format MPS export (and a reader for the same dialect).
//!
//! MPS minimizes by convention, so the objective row `OBJ` carries the
//! negated coefficients and a comment record notes the original sense.
//! Variables are named `X<j>` and rows `R<i>`; both fit the 8-character
//! name fields for up to 10^7 entries. Numbers are written in the 12-character
//! value fields with as many significant digits as fit.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use crate::model::{LinearProgram, Sense};
use crate::LpError;

const FIELD_WIDTH: usize = 12;

/// Format `v` in at most 12 characters, keeping as much precision as fits.
pub fn format_number(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= FIELD_WIDTH {
        return plain;
    }
    let fixed = (0..16).map(|d| format!("{v:.d$}"));
    let sci = (0..16).map(|d| format!("{v:.d$E}"));
    fixed
        .chain(sci)
        .filter(|s| s.len() <= FIELD_WIDTH)
        .min_by(|a, b| relative_error(a, v).total_cmp(&relative_error(b, v)))
        .unwrap_or(plain)
}

fn relative_error(text: &str, v: f64) -> f64 {
    text.parse::<f64>().map(|p| ((p - v) / v).abs()).unwrap_or(f64::INFINITY)
}

fn name_field(prefix: char, idx: usize) -> String {
    format!("{prefix}{idx}")
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

/// Render `lp` as a fixed-format MPS document.
pub fn to_mps_string(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* objective sense: MAXIMIZE; OBJ row holds negated coefficients");
    let _ = writeln!(out, "{}{}", pad("NAME", 14), name);
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  OBJ");
    for (i, row) in lp.constraints().iter().enumerate() {
        let code = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {}  {}", code, name_field('R', i));
    }

    // Column-major entries.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.constraints().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, col) in cols.iter().enumerate() {
        let var = name_field('X', j);
        let c = lp.objective()[j];
        let mut entries: Vec<(String, f64)> = Vec::with_capacity(col.len() + 1);
        if c != 0.0 {
            entries.push(("OBJ".to_string(), -c));
        }
        entries.extend(col.iter().map(|&(i, a)| (name_field('R', i), a)));
        if entries.is_empty() {
            // Keep the column declared so its bounds refer to a known name.
            entries.push(("OBJ".to_string(), 0.0));
        }
        for chunk in entries.chunks(2) {
            let mut line = format!("    {}  {}  {:>12}", pad(&var, 8), pad(&chunk[0].0, 8), format_number(chunk[0].1));
            if let Some((row, v)) = chunk.get(1) {
                let _ = write!(line, "   {}  {:>12}", pad(row, 8), format_number(*v));
            }
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(out, "RHS");
    for (i, row) in lp.constraints().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    {}  {}  {:>12}", pad("RHS", 8), pad(&name_field('R', i), 8), format_number(row.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.num_vars() {
        let var = name_field('X', j);
        let (lo, hi) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        let mut bound = |code: &str, v: Option<f64>| {
            let value = v.map(|v| format!("  {:>12}", format_number(v))).unwrap_or_default();
            let _ = writeln!(out, " {} {}  {}{}", code, pad("BND", 8), pad(&var, 8), value);
        };
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) if lo == hi => bound("FX", Some(lo)),
            (false, false) => bound("FR", None),
            (lo_f, hi_f) => {
                if !lo_f {
                    bound("MI", None);
                } else if lo != 0.0 {
                    bound("LO", Some(lo));
                }
                if hi_f {
                    bound("UP", Some(hi));
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

/// Write `lp` as fixed-format MPS to `path`.
pub fn export_mps(lp: &LinearProgram, path: &Path, name: &str) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(to_mps_string(lp, name).as_bytes())?;
    f.flush()
}

/// Parse an MPS document written by [`to_mps_string`] (or any fixed/free MPS
/// using whitespace-separated fields). The objective row is negated back so
/// the result is again a maximization.
pub fn read_mps<R: BufRead>(reader: R) -> Result<LinearProgram, LpError> {
    use std::collections::HashMap;

    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
    }
    let bad = |line: usize, msg: &str| LpError::Malformed(format!("MPS line {}: {msg}", line + 1));

    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut var_index: HashMap<String, usize> = HashMap::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: Vec<(usize, String, Option<f64>)> = Vec::new();

    for (ln, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LpError::Malformed(e.to_string()))?;
        if line.starts_with('*') || line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            let head = line.split_whitespace().next().unwrap_or("");
            section = match head {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                other => return Err(bad(ln, &format!("unsupported section {other}"))),
            };
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(ln, &format!("bad number {s}")));
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(bad(ln, "ROWS record needs two fields"));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(bad(ln, &format!("unknown row type {other}"))),
                };
                row_index.insert(f[1].to_string(), rows.len());
                rows.push((f[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(bad(ln, "COLUMNS record needs 3 or 5 fields"));
                }
                let j = *var_index.entry(f[0].to_string()).or_insert_with(|| {
                    objective.push(0.0);
                    entries.push(Vec::new());
                    objective.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let v = num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        objective[j] = -v;
                    } else {
                        let i = *row_index.get(pair[0]).ok_or_else(|| bad(ln, &format!("unknown row {}", pair[0])))?;
                        if v != 0.0 {
                            entries[j].push((i, v));
                        }
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(bad(ln, "RHS record needs 3 or 5 fields"));
                }
                for pair in f[1..].chunks(2) {
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let i = *row_index.get(pair[0]).ok_or_else(|| bad(ln, &format!("unknown row {}", pair[0])))?;
                    rhs[i] = num(pair[1])?;
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(bad(ln, "BOUNDS record needs at least three fields"));
                }
                let j = *var_index.get(f[2]).ok_or_else(|| bad(ln, &format!("unknown column {}", f[2])))?;
                let v = f.get(3).map(|s| num(s)).transpose()?;
                bounds.push((j, f[0].to_string(), v));
            }
            Section::None => return Err(bad(ln, "record outside a section")),
        }
    }

    let mut lp = LinearProgram::new(objective.len());
    lp.set_objective_vec(objective)?;
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for (j, col) in entries.iter().enumerate() {
        for &(i, v) in col {
            by_row[i].push((j, v));
        }
    }
    for (i, coeffs) in by_row.into_iter().enumerate() {
        lp.add_constraint(coeffs, rows[i].1, rhs[i]);
    }
    for (j, code, v) in bounds {
        let (lo, hi) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        let need = |v: Option<f64>| v.ok_or_else(|| LpError::Malformed(format!("bound {code} without value")));
        match code.as_str() {
            "LO" => lp.set_bounds(j, need(v)?, hi),
            "UP" => lp.set_bounds(j, lo, need(v)?),
            "FX" => {
                let v = need(v)?;
                lp.set_bounds(j, v, v)
            }
            "FR" => lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY),
            "MI" => lp.set_bounds(j, f64::NEG_INFINITY, hi),
            "PL" => lp.set_bounds(j, lo, f64::INFINITY),
            other => return Err(LpError::Malformed(format!("unsupported bound type {other}"))),
        }
    }
    Ok(lp)
}
