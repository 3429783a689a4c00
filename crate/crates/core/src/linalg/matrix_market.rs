//! Matrix Market coordinate format (`real general`).

use std::io::{BufRead, Write};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate") {
        return Err(Error::MatrixMarket(format!("unsupported header: {header}")));
    }
    let symmetric = lower.contains("symmetric");
    if lower.contains("complex") || lower.contains("pattern") {
        return Err(Error::MatrixMarket("only real matrices are supported".into()));
    }

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match dims {
            None => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad size line: {t}")));
                }
                let p = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| Error::MatrixMarket(format!("{s}: {e}")))
                };
                let d = (p(fields[0])?, p(fields[1])?, p(fields[2])?);
                triplets.reserve(d.2);
                dims = Some(d);
            }
            Some((rows, cols, _)) => {
                if fields.len() != 3 {
                    return Err(Error::MatrixMarket(format!("bad entry line: {t}")));
                }
                let parse_idx = |s: &str, dim: usize| -> Result<usize> {
                    let k = s
                        .parse::<usize>()
                        .map_err(|e| Error::MatrixMarket(format!("{s}: {e}")))?;
                    if k == 0 || k > dim {
                        return Err(Error::IndexOutOfRange { index: k, dim });
                    }
                    Ok(k - 1)
                };
                let i = parse_idx(fields[0], rows)?;
                let j = parse_idx(fields[1], cols)?;
                let v = fields[2]
                    .parse::<f64>()
                    .map_err(|e| Error::MatrixMarket(format!("{}: {e}", fields[2])))?;
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    let (rows, cols, nnz) = dims.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::MatrixMarket(format!(
            "declared {nnz} entries, found {stored}"
        )));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(entries in proptest::collection::vec((0usize..6, 0usize..5, -1e3f64..1e3), 0..20)) {
            let a = SparseMatrix::from_triplets(6, 5, &entries).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = read_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn reads_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2.0\n2 1 -1.0\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn rejects_bad_counts() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 2.0\n";
        assert!(read_matrix_market(text.as_bytes()).is_err());
    }
}
