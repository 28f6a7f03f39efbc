//! Matrix Market reader for custom problems.
//!
//! Supports `coordinate` and `array` storage of `real` or `integer` data in
//! `general` or `symmetric` form. A dense `n × 1` array reads as a vector.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

fn bad(msg: impl Into<String>) -> Error {
    Error::Io(format!("Matrix Market: {}", msg.into()))
}

pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseMatrix> {
    let mut lines = r.lines();
    let banner = lines.next().ok_or_else(|| bad("empty input"))??;
    let b: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if b.len() != 5 || b[0] != "%%matrixmarket" || b[1] != "matrix" {
        return Err(bad(format!("bad banner {banner:?}")));
    }
    let coordinate = match b[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(bad(format!("unsupported format {f}"))),
    };
    if b[3] != "real" && b[3] != "integer" {
        return Err(bad(format!("unsupported field {}", b[3])));
    }
    let symmetric = match b[4].as_str() {
        "general" => false,
        "symmetric" => true,
        s => return Err(bad(format!("unsupported symmetry {s}"))),
    };

    let mut body = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('%') {
            body.push(t.to_string());
        }
    }
    let mut it = body.iter();
    let size: Vec<usize> = it
        .next()
        .ok_or_else(|| bad("missing size line"))?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad(format!("bad size {s:?}"))))
        .collect::<Result<_>>()?;
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad value {s:?}")));

    let mut t = Vec::new();
    let (rows, cols) = if coordinate {
        let [rows, cols, nnz] = size[..] else {
            return Err(bad("coordinate size line needs rows, cols, nnz"));
        };
        for _ in 0..nnz {
            let f: Vec<&str> = it
                .next()
                .ok_or_else(|| bad("fewer entries than declared"))?
                .split_whitespace()
                .collect();
            if f.len() != 3 {
                return Err(bad(format!("entry needs three fields, got {f:?}")));
            }
            let i: usize = f[0].parse().map_err(|_| bad(format!("bad index {:?}", f[0])))?;
            let j: usize = f[1].parse().map_err(|_| bad(format!("bad index {:?}", f[1])))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(bad(format!("index ({i}, {j}) outside {rows}×{cols}")));
            }
            let v = num(f[2])?;
            t.push((i - 1, j - 1, v));
            if symmetric && i != j {
                t.push((j - 1, i - 1, v));
            }
        }
        (rows, cols)
    } else {
        let [rows, cols] = size[..] else {
            return Err(bad("array size line needs rows, cols"));
        };
        let vals: Vec<f64> = it.flat_map(|l| l.split_whitespace()).map(num).collect::<Result<_>>()?;
        // Column-major; symmetric arrays store the lower triangle only.
        let mut k = 0;
        for j in 0..cols {
            let start = if symmetric { j } else { 0 };
            for i in start..rows {
                let v = *vals.get(k).ok_or_else(|| bad("fewer values than declared"))?;
                k += 1;
                t.push((i, j, v));
                if symmetric && i != j {
                    t.push((j, i, v));
                }
            }
        }
        if k != vals.len() {
            return Err(bad("more values than declared"));
        }
        return Ok(SparseMatrix::from_triplets(rows, cols, t)?);
    };
    if it.next().is_some() {
        return Err(bad("more entries than declared"));
    }
    Ok(SparseMatrix::from_triplets(rows, cols, t)?)
}

pub fn load_matrix(path: &Path) -> Result<SparseMatrix> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Load a single-column matrix as a vector.
pub fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let m = load_matrix(path)?;
    if m.cols() != 1 {
        return Err(bad(format!(
            "{} has {} columns, expected a vector",
            path.display(),
            m.cols()
        )));
    }
    Ok(m.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_general() {
        let src = "%%MatrixMarket matrix coordinate real general\n% comment\n2 3 3\n1 1 1.5\n2 3 -2\n1 2 4e-1\n";
        let m = read_matrix_market(src.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), vec![1.5, 0.4, 0.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn coordinate_symmetric_mirrors() {
        let src = "%%MatrixMarket matrix coordinate integer symmetric\n2 2 2\n1 1 2\n2 1 -1\n";
        let m = read_matrix_market(src.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), vec![2.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn array_is_column_major() {
        let src = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = read_matrix_market(src.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), vec![1.0, 3.0, 2.0, 4.0]);
        let sym = "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n";
        assert_eq!(
            read_matrix_market(sym.as_bytes()).unwrap().to_dense(),
            vec![1.0, 2.0, 2.0, 3.0]
        );
    }

    #[test]
    fn malformed_inputs() {
        for src in [
            "",
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n2 1 1\n",
            "%%MatrixMarket matrix array real general\n2 1\n1\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 x\n",
        ] {
            assert!(read_matrix_market(src.as_bytes()).is_err(), "{src:?}");
        }
    }
}
