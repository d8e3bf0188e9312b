//! Plain-text coordinate format: a header line `m n nnz` followed by `nnz`
//! lines `row col value` with 1-based indices. Lines starting with `%` are
//! comments; blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use eso_core::DataMatrix;

use crate::error::{CliError, FormatError};

fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(k),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..k]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_index(tok: (usize, &str), line: usize, what: &str, bound: usize) -> Result<usize, FormatError> {
    let v: usize = tok
        .1
        .parse()
        .map_err(|_| FormatError::at(line, Some(tok.0), format!("{what} index `{}` is not a positive integer", tok.1)))?;
    if v == 0 || v > bound {
        return Err(FormatError::at(line, Some(tok.0), format!("{what} index {v} out of range 1..={bound}")));
    }
    Ok(v - 1)
}

pub fn parse_matrix(text: &str) -> Result<DataMatrix, FormatError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    let mut seen = std::collections::HashMap::new();
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks = tokens(raw);
        match header {
            None => {
                if toks.len() != 3 {
                    return Err(FormatError::at(line, None, format!("expected header `m n nnz`, found {} fields", toks.len())));
                }
                let mut dims = [0usize; 3];
                for (d, t) in dims.iter_mut().zip(&toks) {
                    *d = t.1.parse().map_err(|_| {
                        FormatError::at(line, Some(t.0), format!("header field `{}` is not a nonnegative integer", t.1))
                    })?;
                }
                header = Some((dims[0], dims[1], dims[2]));
            }
            Some((m, n, nnz)) => {
                if toks.len() != 3 {
                    return Err(FormatError::at(line, None, format!("expected `row col value`, found {} fields", toks.len())));
                }
                if trip.len() == nnz {
                    return Err(FormatError::at(line, None, format!("more entries than the {nnz} declared in the header")));
                }
                let j = parse_index(toks[0], line, "row", m)?;
                let i = parse_index(toks[1], line, "column", n)?;
                let a: f64 = toks[2]
                    .1
                    .parse()
                    .map_err(|_| FormatError::at(line, Some(toks[2].0), format!("value `{}` is not a number", toks[2].1)))?;
                if !a.is_finite() {
                    return Err(FormatError::at(line, Some(toks[2].0), "value is not finite"));
                }
                if let Some(first) = seen.insert((j, i), line) {
                    return Err(FormatError::at(line, None, format!("duplicate entry ({}, {}), first given on line {first}", j + 1, i + 1)));
                }
                trip.push((j, i, a));
            }
        }
    }
    let (m, n, nnz) = header.ok_or_else(|| FormatError::at(last_line.max(1), None, "missing header `m n nnz`"))?;
    if trip.len() != nnz {
        return Err(FormatError::at(last_line.max(1), None, format!("header declares {nnz} entries but {} were given", trip.len())));
    }
    DataMatrix::from_triplets(m, n, &trip).map_err(|e| FormatError::at(last_line.max(1), None, e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<DataMatrix, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(&path.display().to_string(), e))?;
    parse_matrix(&text).map_err(|e| CliError::input(&path.display().to_string(), e))
}

pub fn format_matrix(data: &DataMatrix) -> String {
    let trip = data.triplets();
    let mut s = format!("{} {} {}\n", data.m(), data.n(), trip.len());
    for (j, i, a) in trip {
        let _ = writeln!(s, "{} {} {}", j + 1, i + 1, a);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let text = "% example\n2 3 3\n1 1 1.0\n1 2 1\n\n2 2 2.5\n";
        let a = parse_matrix(text).unwrap();
        assert_eq!(a.col_sq_norms(), vec![1.0, 7.25, 0.0]);
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_matrix("2 2 2\n1 1 1.0\n1 x 2.0\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, Some(3)));
        let e = parse_matrix("2 2 2\n1 1 1.0\n1 1 2.0\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_matrix("2 2 1\n3 1 1.0\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse_matrix("2 2 2\n1 1 1.0\n").unwrap_err();
        assert!(e.message.contains("declares 2"));
        assert!(parse_matrix("% only comments\n").is_err());
    }
}
