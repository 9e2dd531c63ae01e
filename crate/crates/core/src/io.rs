//! Plain-text matrix format.
//!
//! Line 1 is `M N real` or `M N complex`; then `M` rows, each holding `N`
//! floats (real) or `N` whitespace-separated `re im` pairs (complex). Vectors
//! are `M 1` matrices. Blank lines and lines starting with `#` are skipped.
//! Values are written with `{:e}`, which round-trips `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::model::Field;
use crate::{CMatrix, CVector, Error, Result, C64};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn format_matrix(a: &CMatrix, field: Field) -> String {
    let (m, n) = a.shape();
    let mut out = String::new();
    let tag = match field {
        Field::Real => "real",
        Field::Complex => "complex",
    };
    writeln!(out, "{m} {n} {tag}").unwrap();
    for i in 0..m {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let z = a[(i, j)];
            match field {
                Field::Real => row.push(format!("{:e}", z.re)),
                Field::Complex => row.push(format!("{:e} {:e}", z.re, z.im)),
            }
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Writes `a`, choosing `real` when every imaginary part is zero.
pub fn write_matrix(path: &Path, a: &CMatrix) -> Result<()> {
    let field = Field::of(a.iter().copied());
    fs::write(path, format_matrix(a, field))?;
    Ok(())
}

pub fn write_vector(path: &Path, v: &CVector) -> Result<()> {
    let a = CMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix(path, &a)
}

pub fn parse_matrix(text: &str) -> Result<(CMatrix, Field)> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(parse_err(hline, "header must be 'M N real|complex'"));
    }
    let dim = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(parse_err(hline, format!("bad dimension '{s}'"))),
        }
    };
    let (m, n) = (dim(parts[0])?, dim(parts[1])?);
    let field = match parts[2] {
        "real" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(parse_err(hline, format!("unknown field '{other}'"))),
    };
    let per_entry = if field == Field::Real { 1 } else { 2 };
    let mut a = CMatrix::zeros(m, n);
    for i in 0..m {
        let (lno, line) = lines.next().ok_or_else(|| parse_err(hline, format!("expected {m} rows, found {i}")))?;
        let vals = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| parse_err(lno, format!("bad number '{tok}'"))))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != n * per_entry {
            return Err(parse_err(lno, format!("expected {} values, found {}", n * per_entry, vals.len())));
        }
        for j in 0..n {
            a[(i, j)] = match field {
                Field::Real => C64::new(vals[j], 0.0),
                Field::Complex => C64::new(vals[2 * j], vals[2 * j + 1]),
            };
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(lno, format!("trailing data after {m} rows")));
    }
    Ok((a, field))
}

pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = fs::read_to_string(path)?;
    Ok(parse_matrix(&text)?.0)
}

/// Reads an `M 1` file as a vector.
pub fn read_vector(path: &Path) -> Result<CVector> {
    let a = read_matrix(path)?;
    if a.ncols() != 1 {
        return Err(Error::dims(format!("expected a column vector, got {}x{}", a.nrows(), a.ncols())));
    }
    Ok(a.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_round_trip_is_exact() {
        let a = CMatrix::from_fn(3, 2, |i, j| C64::new((i as f64 + 0.1) / (j as f64 + 3.0), 0.0));
        let text = format_matrix(&a, Field::Real);
        assert!(text.starts_with("3 2 real\n"));
        let (b, f) = parse_matrix(&text).unwrap();
        assert_eq!(f, Field::Real);
        assert_eq!(a, b);
    }

    #[test]
    fn complex_round_trip_is_exact() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new(1.0 / 3.0 + i as f64, -std::f64::consts::PI * j as f64));
        let (b, f) = parse_matrix(&format_matrix(&a, Field::Complex)).unwrap();
        assert_eq!(f, Field::Complex);
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_matrix("2 2 real\n1 2\n3 x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_matrix("2 2 real\n1 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_matrix("2 2 quaternion\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_matrix("1 2 complex\n1 2 3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(parse_matrix("1 1 real\n1\n2\n").is_err());
        assert!(parse_matrix("").is_err());
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let (a, _) = parse_matrix("# generated\n\n1 2 real\n5 6\n").unwrap();
        assert_eq!(a[(0, 1)], C64::new(6.0, 0.0));
    }
}
