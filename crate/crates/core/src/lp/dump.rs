use std::fmt::Write;

use super::{LinearProgram, LpError, Relation, Sense};
use crate::fmt::sig17;

pub(super) fn write(lp: &LinearProgram) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Min => "min\n",
        Sense::Max => "max\n",
    });
    for (j, c) in lp.columns.iter().enumerate() {
        let lb = if c.free { "-inf".to_string() } else { sig17(0.0) };
        writeln!(out, "col {j} {lb} inf {}", sig17(c.obj)).unwrap();
    }
    for r in &lp.rows {
        write!(out, "row {} {}", r.relation, sig17(r.rhs)).unwrap();
        for &(j, a) in &r.coeffs {
            write!(out, " {j}:{}", sig17(a)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Read a program back from [`LinearProgram::to_dump`] output. Tags are not
/// part of the dump and come back empty.
pub fn parse_dump(text: &str) -> Result<LinearProgram, LpError> {
    let err = |line: usize, message: String| LpError::Dump { line, message };
    let num = |line: usize, s: &str| -> Result<f64, LpError> {
        s.parse::<f64>().map_err(|_| err(line, format!("bad number {s:?}")))
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let sense = match lines.next() {
        Some((_, l)) if l.trim() == "min" => Sense::Min,
        Some((_, l)) if l.trim() == "max" => Sense::Max,
        Some((k, l)) => return Err(err(k + 1, format!("expected sense, found {l:?}"))),
        None => return Err(err(0, "empty dump".into())),
    };
    let mut lp = LinearProgram::new(sense);
    for (k, l) in lines {
        let line = k + 1;
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("col") => {
                let id: usize = tok
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(line, "missing column id".into()))?;
                if id != lp.columns.len() {
                    return Err(err(line, format!("column {id} out of order")));
                }
                let lb = num(line, tok.next().unwrap_or(""))?;
                let ub = num(line, tok.next().unwrap_or(""))?;
                let obj = num(line, tok.next().unwrap_or(""))?;
                let free = if lb == f64::NEG_INFINITY {
                    true
                } else if lb == 0.0 {
                    false
                } else {
                    return Err(err(line, format!("unsupported lower bound {lb}")));
                };
                if ub != f64::INFINITY {
                    return Err(err(line, format!("unsupported upper bound {ub}")));
                }
                lp.add_column(obj, free, "");
            }
            Some("row") => {
                let rel = match tok.next() {
                    Some("<=") => Relation::Le,
                    Some("=") => Relation::Eq,
                    Some(">=") => Relation::Ge,
                    other => return Err(err(line, format!("bad relation {other:?}"))),
                };
                let rhs = num(line, tok.next().unwrap_or(""))?;
                let coeffs = tok
                    .map(|t| {
                        let (j, a) = t.split_once(':').ok_or_else(|| err(line, format!("bad entry {t:?}")))?;
                        let j: usize = j.parse().map_err(|_| err(line, format!("bad index {j:?}")))?;
                        Ok((j, num(line, a)?))
                    })
                    .collect::<Result<Vec<_>, LpError>>()?;
                lp.add_row(coeffs, rel, rhs, "");
            }
            _ => return Err(err(line, format!("unrecognized line {l:?}"))),
        }
    }
    lp.check()?;
    Ok(lp)
}
