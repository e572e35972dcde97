//! Matrix Market reader and writer.
//!
//! Accepts `matrix coordinate|array real|integer general|symmetric`. Symmetric
//! storage is expanded to full storage, duplicate coordinate entries are
//! summed and explicit zeros dropped. General files must still be
//! numerically symmetric since every consumer here expects an SPD operator.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{LinalgError, SparseMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("unsupported field `{0}`: only real matrices are accepted")]
    NonRealField(String),
    #[error("pattern-only matrices carry no values")]
    PatternOnly,
    #[error("unsupported symmetry qualifier `{0}`")]
    UnsupportedSymmetry(String),
    #[error("line {line}: entry ({row}, {col}) outside declared {n}x{n} bounds")]
    IndexOutOfBounds { line: usize, row: usize, col: usize, n: usize },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("general matrix is not symmetric: {0}")]
    NotSymmetric(LinalgError),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

fn parse_header(line: &str) -> Result<(Layout, bool), ParseError> {
    let lower = line.to_ascii_lowercase();
    let mut tok = lower.split_whitespace();
    if tok.next() != Some("%%matrixmarket") {
        return Err(ParseError::MalformedHeader("first line must start with %%MatrixMarket".into()));
    }
    if tok.next() != Some("matrix") {
        return Err(ParseError::MalformedHeader("object must be `matrix`".into()));
    }
    let layout = match tok.next() {
        Some("coordinate") => Layout::Coordinate,
        Some("array") => Layout::Array,
        other => return Err(ParseError::MalformedHeader(format!("format must be coordinate or array, got {other:?}"))),
    };
    match tok.next() {
        Some("real") | Some("integer") | Some("double") => {}
        Some("pattern") => return Err(ParseError::PatternOnly),
        Some(f) => return Err(ParseError::NonRealField(f.to_string())),
        None => return Err(ParseError::MalformedHeader("missing field qualifier".into())),
    }
    let symmetric = match tok.next() {
        Some("general") => false,
        Some("symmetric") => true,
        Some(s) => return Err(ParseError::UnsupportedSymmetry(s.to_string())),
        None => return Err(ParseError::MalformedHeader("missing symmetry qualifier".into())),
    };
    Ok((layout, symmetric))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, ParseError> {
    let t = tok.ok_or_else(|| ParseError::Malformed { line, msg: format!("missing {what}") })?;
    t.parse().map_err(|_| ParseError::Malformed { line, msg: format!("cannot parse {what} `{t}`") })
}

pub fn parse_matrix_market(bytes: &[u8]) -> Result<SparseMatrix, ParseError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| ParseError::Malformed { line: 0, msg: format!("not UTF-8: {e}") })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| ParseError::MalformedHeader("empty input".into()))?;
    let (layout, symmetric) = parse_header(header)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) =
        body.next().ok_or_else(|| ParseError::Malformed { line: 0, msg: "missing size line".into() })?;
    let mut tok = size.split_whitespace();
    let rows: usize = num(tok.next(), size_line, "row count")?;
    let cols: usize = num(tok.next(), size_line, "column count")?;
    if rows != cols {
        return Err(ParseError::NotSquare { rows, cols });
    }
    let n = rows;

    let mut triplets = Vec::new();
    let mut push = |i: usize, j: usize, v: f64| {
        triplets.push((i, j, v));
        if symmetric && i != j {
            triplets.push((j, i, v));
        }
    };

    match layout {
        Layout::Coordinate => {
            let declared: usize = num(tok.next(), size_line, "entry count")?;
            let mut found = 0;
            for (line, l) in body {
                let mut t = l.split_whitespace();
                let i: usize = num(t.next(), line, "row index")?;
                let j: usize = num(t.next(), line, "column index")?;
                let v: f64 = num(t.next(), line, "value")?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(ParseError::IndexOutOfBounds { line, row: i, col: j, n });
                }
                found += 1;
                if found > declared {
                    return Err(ParseError::EntryCount { expected: declared, found });
                }
                push(i - 1, j - 1, v);
            }
            if found != declared {
                return Err(ParseError::EntryCount { expected: declared, found });
            }
        }
        Layout::Array => {
            // column-major; symmetric arrays store the lower triangle only
            let positions: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| {
                    let start = if symmetric { j } else { 0 };
                    (start..n).map(move |i| (i, j))
                })
                .collect();
            let mut values = Vec::with_capacity(positions.len());
            for (line, l) in body {
                for t in l.split_whitespace() {
                    values.push(num::<f64>(Some(t), line, "value")?);
                }
            }
            if values.len() != positions.len() {
                return Err(ParseError::EntryCount { expected: positions.len(), found: values.len() });
            }
            for (&(i, j), &v) in positions.iter().zip(&values) {
                push(i, j, v);
            }
        }
    }

    let a =
        SparseMatrix::from_triplets(n, triplets).map_err(|e| ParseError::Malformed { line: 0, msg: e.to_string() })?;
    if !symmetric {
        a.check_symmetric().map_err(ParseError::NotSymmetric)?;
    }
    Ok(a)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix, ParseError> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| ParseError::Io(e.to_string()))?;
    parse_matrix_market(&bytes)
}

/// Writes full storage as `coordinate real general`, values in shortest
/// round-trip form.
pub fn write_matrix_market(a: &SparseMatrix) -> String {
    let mut out = String::with_capacity(32 * a.nnz() + 64);
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.n(), a.n(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<SparseMatrix, ParseError> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn identity_coordinate_symmetric() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n2 2 1.0\n").unwrap();
        assert_eq!(a.row_ptr(), &[0, 1, 2]);
        assert_eq!(a.values(), &[1.0, 1.0]);
    }

    #[test]
    fn symmetric_entries_are_mirrored() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 4\n2 1 -1\n2 2 4\n3 3 2.5e0\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert!(a.check_symmetric().is_ok());
    }

    #[test]
    fn duplicates_summed_zeros_dropped() {
        let a = parse("%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 1\n1 1 2\n2 2 5\n1 2 0\n").unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 3.0);
    }

    #[test]
    fn array_formats() {
        let g = parse("%%MatrixMarket matrix array real general\n2 2\n2\n1\n1\n3\n").unwrap();
        assert_eq!(g.to_dense(), vec![2.0, 1.0, 1.0, 3.0]);
        let s = parse("%%MatrixMarket matrix array real symmetric\n2 2\n2\n1\n3\n").unwrap();
        assert_eq!(s, g);
    }

    #[test]
    fn each_failure_is_distinct() {
        assert!(matches!(
            parse("%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n"),
            Err(ParseError::MalformedHeader(_))
        ));
        assert!(matches!(parse(""), Err(ParseError::MalformedHeader(_))));
        assert_eq!(
            parse("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n"),
            Err(ParseError::NotSquare { rows: 2, cols: 3 })
        );
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n"),
            Err(ParseError::NonRealField(f)) if f == "complex"
        ));
        assert_eq!(
            parse("%%MatrixMarket matrix coordinate pattern symmetric\n2 2 1\n1 1\n"),
            Err(ParseError::PatternOnly)
        );
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 1.0\n"),
            Err(ParseError::IndexOutOfBounds { row: 3, col: 1, n: 2, .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1.0\n"),
            Err(ParseError::UnsupportedSymmetry(_))
        ));
        assert_eq!(
            parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 2 1\n"),
            Err(ParseError::EntryCount { expected: 3, found: 2 })
        );
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1\n"),
            Err(ParseError::NotSymmetric(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n"),
            Err(ParseError::Malformed { line: 3, .. })
        ));
    }

    fn sym_triplets() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
        (1usize..12).prop_flat_map(|n| {
            let entry = (0..n, 0..n, -1e6f64..1e6);
            (Just(n), proptest::collection::vec(entry, 0..40))
        })
    }

    proptest! {
        #[test]
        fn write_then_parse_is_bit_exact((n, raw) in sym_triplets()) {
            let mut t = Vec::new();
            for (i, j, v) in raw {
                t.push((i, j, v));
                if i != j { t.push((j, i, v)); }
            }
            let a = SparseMatrix::from_triplets(n, t).unwrap();
            let b = parse(&write_matrix_market(&a)).unwrap();
            prop_assert_eq!(a.row_ptr(), b.row_ptr());
            prop_assert_eq!(a.col_idx(), b.col_idx());
            let bits = |m: &SparseMatrix| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a), bits(&b));
        }
    }
}
