//! Free-format MPS reader and writer.
//!
//! The reader accepts `NAME`, `OBJSENSE`, `ROWS`, `COLUMNS` (with
//! `'MARKER' 'INTORG'/'INTEND'` integrality blocks), `RHS`, `RANGES`, `BOUNDS`
//! and `ENDATA`. Rows are normalized to `≥` form; the writer emits that form.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MipModel, RowSense, SparseRow};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("MPS line {line}: {msg}")]
pub struct MpsError {
    pub line: usize,
    pub msg: String,
}

fn err<R>(line: usize, msg: impl Into<String>) -> Result<R, MpsError> {
    Err(MpsError { line, msg: msg.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

struct RawRow<T> {
    name: String,
    sense: RowSense,
    entries: Vec<(usize, T)>,
    rhs: T,
    range: Option<T>,
}

fn parse_num<T: Scalar>(tok: &str, line: usize) -> Result<T, MpsError> {
    let lower = tok.to_ascii_lowercase();
    match lower.as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" | "1e30" | "1e+30" => return Ok(T::infinity()),
        "-inf" | "-infinity" | "-1e30" | "-1e+30" => return Ok(T::neg_infinity()),
        _ => {}
    }
    let v = tok
        .parse::<T>()
        .map_err(|_| MpsError { line, msg: format!("invalid number `{tok}`") })?;
    if v.as_f64() >= 1e30 {
        Ok(T::infinity())
    } else if v.as_f64() <= -1e30 {
        Ok(T::neg_infinity())
    } else {
        Ok(v)
    }
}

/// Parses a free-format MPS document into a normalized model.
pub fn parse_mps<T: Scalar>(text: &str) -> Result<MipModel<T>, MpsError> {
    let mut section = Section::Start;
    let mut name = String::new();
    let mut maximize = false;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<RawRow<T>> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<(String, bool)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut objective: Vec<T> = Vec::new();
    let mut offset = T::zero();
    let mut bounds: Vec<(Option<T>, Option<T>)> = Vec::new();
    let mut in_int = false;
    let mut current_col: Option<usize> = None;
    let mut seen_entry: HashMap<(usize, usize), usize> = HashMap::new();
    let mut seen_obj: HashMap<usize, usize> = HashMap::new();
    let mut seen_rhs: HashMap<usize, usize> = HashMap::new();
    let mut seen_range: HashMap<usize, usize> = HashMap::new();

    let enter = |sec: Section, cur: &mut Section, line: usize| -> Result<(), MpsError> {
        if sec <= *cur {
            return err(line, format!("section {sec:?} out of order after {cur:?}"));
        }
        *cur = sec;
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if header {
            match toks[0].to_ascii_uppercase().as_str() {
                "NAME" => {
                    enter(Section::Name, &mut section, line)?;
                    name = toks.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                }
                "OBJSENSE" => {
                    enter(Section::ObjSense, &mut section, line)?;
                    if let Some(s) = toks.get(1) {
                        maximize = parse_sense(s, line)?;
                    }
                }
                "ROWS" => enter(Section::Rows, &mut section, line)?,
                "COLUMNS" => enter(Section::Columns, &mut section, line)?,
                "RHS" => enter(Section::Rhs, &mut section, line)?,
                "RANGES" => enter(Section::Ranges, &mut section, line)?,
                "BOUNDS" => enter(Section::Bounds, &mut section, line)?,
                "ENDATA" => {
                    enter(Section::End, &mut section, line)?;
                    break;
                }
                other => return err(line, format!("unknown section `{other}`")),
            }
            continue;
        }

        match section {
            Section::ObjSense => maximize = parse_sense(toks[0], line)?,
            Section::Rows => {
                if toks.len() != 2 {
                    return err(line, "ROWS entry needs a type and a name");
                }
                let rname = toks[1].to_string();
                if row_index.contains_key(&rname) || obj_row.as_deref() == Some(&rname) {
                    return err(line, format!("duplicate row `{rname}`"));
                }
                let sense = match toks[0].to_ascii_uppercase().as_str() {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(rname);
                        }
                        // further free rows are ignored
                        continue;
                    }
                    "G" => RowSense::Ge,
                    "L" => RowSense::Le,
                    "E" => RowSense::Eq,
                    t => return err(line, format!("unknown row type `{t}`")),
                };
                row_index.insert(rname.clone(), rows.len());
                rows.push(RawRow {
                    name: rname,
                    sense,
                    entries: Vec::new(),
                    rhs: T::zero(),
                    range: None,
                });
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    match toks[2].trim_matches('\'').to_ascii_uppercase().as_str() {
                        "INTORG" => in_int = true,
                        "INTEND" => in_int = false,
                        m => return err(line, format!("unknown marker `{m}`")),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return err(line, "COLUMNS entry needs a column and one or two (row, value) pairs");
                }
                let cname = toks[0];
                let col = match col_index.get(cname) {
                    Some(&c) if Some(c) == current_col => c,
                    Some(_) => return err(line, format!("column `{cname}` is not contiguous")),
                    None => {
                        let c = cols.len();
                        col_index.insert(cname.to_string(), c);
                        cols.push((cname.to_string(), in_int));
                        objective.push(T::zero());
                        bounds.push((None, None));
                        current_col = Some(c);
                        c
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let (rname, val) = (pair[0], parse_num::<T>(pair[1], line)?);
                    if obj_row.as_deref() == Some(rname) {
                        if seen_obj.insert(col, line).is_some() {
                            return err(line, format!("duplicate objective entry for `{cname}`"));
                        }
                        objective[col] = val;
                    } else if let Some(&r) = row_index.get(rname) {
                        if seen_entry.insert((r, col), line).is_some() {
                            return err(line, format!("duplicate entry ({rname}, {cname})"));
                        }
                        if val != T::zero() {
                            rows[r].entries.push((col, val));
                        }
                    } else {
                        return err(line, format!("unknown row `{rname}`"));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                // the set name is optional: an odd token count means it is present
                let pairs = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                if pairs.is_empty() {
                    return err(line, "missing (row, value) pair");
                }
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return err(line, "dangling row name without value");
                    }
                    let (rname, val) = (pair[0], parse_num::<T>(pair[1], line)?);
                    if section == Section::Rhs && obj_row.as_deref() == Some(rname) {
                        offset = -val;
                        continue;
                    }
                    let Some(&r) = row_index.get(rname) else {
                        return err(line, format!("unknown row `{rname}`"));
                    };
                    let seen = if section == Section::Rhs { &mut seen_rhs } else { &mut seen_range };
                    if seen.insert(r, line).is_some() {
                        return err(line, format!("duplicate value for row `{rname}`"));
                    }
                    if section == Section::Rhs {
                        rows[r].rhs = val;
                    } else {
                        rows[r].range = Some(val);
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return err(line, "BOUNDS entry too short");
                }
                let kind = toks[0].to_ascii_uppercase();
                let no_value = matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
                // the bound set name is optional
                let (cname, val) = match (no_value, toks.len()) {
                    (true, 3) => (toks[2], None),
                    (true, 2) => (toks[1], None),
                    (false, 4) => (toks[2], Some(toks[3])),
                    (false, 3) => (toks[1], Some(toks[2])),
                    (true, 4) => (toks[2], None),
                    _ => return err(line, "malformed BOUNDS entry"),
                };
                let Some(&c) = col_index.get(cname) else {
                    return err(line, format!("unknown column `{cname}`"));
                };
                let v = val.map(|t| parse_num::<T>(t, line)).transpose()?;
                let b = &mut bounds[c];
                match kind.as_str() {
                    "UP" => b.1 = v,
                    "LO" => b.0 = v,
                    "FX" => {
                        b.0 = v;
                        b.1 = v;
                    }
                    "FR" => {
                        b.0 = Some(T::neg_infinity());
                        b.1 = Some(T::infinity());
                    }
                    "MI" => b.0 = Some(T::neg_infinity()),
                    "PL" => b.1 = Some(T::infinity()),
                    "BV" => {
                        cols[c].1 = true;
                        b.0 = Some(T::zero());
                        b.1 = Some(T::one());
                    }
                    "LI" => {
                        cols[c].1 = true;
                        b.0 = v;
                    }
                    "UI" => {
                        cols[c].1 = true;
                        b.1 = v;
                    }
                    k => return err(line, format!("unknown bound type `{k}`")),
                }
            }
            Section::Start | Section::Name | Section::End => {
                return err(line, "data line outside of a section")
            }
        }
    }
    if section < Section::Columns {
        return err(text.lines().count(), "missing ROWS/COLUMNS sections");
    }

    let mut model = MipModel::new(name);
    model.maximize = maximize;
    model.objective_offset = if maximize { -offset } else { offset };
    for (c, (cname, int)) in cols.into_iter().enumerate() {
        let lb = bounds[c].0.unwrap_or_else(T::zero);
        let ub = bounds[c].1.unwrap_or_else(T::infinity);
        let obj = if maximize { -objective[c] } else { objective[c] };
        model.add_var(cname, lb, ub, int, obj);
    }
    for row in rows {
        let RawRow { name, sense, entries, rhs, range } = row;
        let sparse = SparseRow::new(entries);
        let (lo, hi) = match (sense, range) {
            (RowSense::Ge, None) => (Some(rhs), None),
            (RowSense::Le, None) => (None, Some(rhs)),
            (RowSense::Eq, None) => (Some(rhs), Some(rhs)),
            (RowSense::Ge, Some(r)) => (Some(rhs), Some(rhs + r.abs())),
            (RowSense::Le, Some(r)) => (Some(rhs - r.abs()), Some(rhs)),
            (RowSense::Eq, Some(r)) if r >= T::zero() => (Some(rhs), Some(rhs + r)),
            (RowSense::Eq, Some(r)) => (Some(rhs + r), Some(rhs)),
        };
        match (lo, hi) {
            (Some(l), Some(h)) => {
                model.push_row(name.clone(), sparse.clone(), l);
                model.push_row(format!("{name}_le"), sparse.negated(), -h);
            }
            (Some(l), None) => {
                model.push_row(name, sparse, l);
            }
            (None, Some(h)) => {
                model.push_row(name, sparse.negated(), -h);
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(model)
}

fn parse_sense(tok: &str, line: usize) -> Result<bool, MpsError> {
    match tok.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Ok(true),
        "MIN" | "MINIMIZE" => Ok(false),
        s => err(line, format!("unknown objective sense `{s}`")),
    }
}

fn fmt_num<T: Scalar>(v: T) -> String {
    if v == T::infinity() {
        "1e30".to_string()
    } else if v == T::neg_infinity() {
        "-1e30".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes the model in free MPS, all rows as `G` rows.
pub fn write_mps<T: Scalar>(model: &MipModel<T>) -> String {
    let mut out = String::new();
    let name = if model.name.is_empty() { "model" } else { &model.name };
    let _ = writeln!(out, "NAME {name}");
    if model.maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N obj");
    for rname in &model.row_names {
        let _ = writeln!(out, " G {rname}");
    }

    let n = model.num_vars();
    let mut columns: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    for (r, row) in model.rows.iter().enumerate() {
        for (i, a) in row.iter() {
            columns[i].push((r, a));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for j in 0..n {
        if model.integer[j] != in_int {
            let tag = if model.integer[j] { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' '{tag}'");
            marker += 1;
            in_int = model.integer[j];
        }
        let cname = &model.var_names[j];
        let c = model.external_objective(model.objective[j]);
        if c != T::zero() || columns[j].is_empty() {
            let _ = writeln!(out, "    {cname} obj {}", fmt_num(c));
        }
        for &(r, a) in &columns[j] {
            let _ = writeln!(out, "    {cname} {} {}", model.row_names[r], fmt_num(a));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
    }

    let _ = writeln!(out, "RHS");
    let off = model.external_objective(model.objective_offset);
    if off != T::zero() {
        let _ = writeln!(out, "    rhs obj {}", fmt_num(-off));
    }
    for (r, &b) in model.lhs.iter().enumerate() {
        if b != T::zero() {
            let _ = writeln!(out, "    rhs {} {}", model.row_names[r], fmt_num(b));
        }
    }

    let _ = writeln!(out, "BOUNDS");
    for j in 0..n {
        let (l, u) = (model.lb[j], model.ub[j]);
        let cname = &model.var_names[j];
        if l == u {
            let _ = writeln!(out, " FX bnd {cname} {}", fmt_num(l));
            continue;
        }
        if l == T::neg_infinity() && u == T::infinity() {
            let _ = writeln!(out, " FR bnd {cname}");
            continue;
        }
        if l == T::neg_infinity() {
            let _ = writeln!(out, " MI bnd {cname}");
        } else if l != T::zero() {
            let _ = writeln!(out, " LO bnd {cname} {}", fmt_num(l));
        }
        if u != T::infinity() {
            let _ = writeln!(out, " UP bnd {cname} {}", fmt_num(u));
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}
