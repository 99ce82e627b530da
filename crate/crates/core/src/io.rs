//! Matrix Market exchange and small CSV helpers.

use std::io::Write;

use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::{SpMat, TripletBuilder};

/// Largest row or column count the reader accepts.
pub const MAX_DIM: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmFormat {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmSymmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// A parsed Matrix Market file with symmetric storage already expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub nrows: usize,
    pub ncols: usize,
    pub format: MmFormat,
    pub symmetry: MmSymmetry,
    /// Zero-based `(row, col, value)`; duplicates are kept.
    pub entries: Vec<(usize, usize, f64)>,
}

impl MatrixMarket {
    pub fn to_sparse(&self) -> SpMat {
        let mut b = TripletBuilder::new(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            b.add(i, j, v);
        }
        b.build()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads `real`, `integer` and `pattern` matrices in coordinate or array
/// layout with general, symmetric or skew-symmetric storage.
pub fn read_matrix_market(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (ln, banner) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let words: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(ln, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let format = match words[2].as_str() {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        other => return Err(parse_err(ln, format!("unsupported format '{other}'"))),
    };
    let pattern = match words[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if format == MmFormat::Coordinate => true,
        other => return Err(parse_err(ln, format!("unsupported field '{other}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        other => return Err(parse_err(ln, format!("unsupported symmetry '{other}'"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (ln, size) = data.next().ok_or_else(|| parse_err(ln, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(ln, format!("bad size line: {e}")))?;
    let expected_dims = if format == MmFormat::Coordinate { 3 } else { 2 };
    if dims.len() != expected_dims {
        return Err(parse_err(ln, format!("size line needs {expected_dims} integers")));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if nrows > MAX_DIM || ncols > MAX_DIM {
        return Err(parse_err(ln, format!("dimension exceeds {MAX_DIM}")));
    }
    if symmetry != MmSymmetry::General && nrows != ncols {
        return Err(parse_err(ln, "symmetric storage requires a square matrix"));
    }

    let mut entries = Vec::new();
    let mut push = |i: usize, j: usize, v: f64, ln: usize| -> Result<()> {
        match symmetry {
            MmSymmetry::General => entries.push((i, j, v)),
            MmSymmetry::Symmetric | MmSymmetry::SkewSymmetric => {
                if j > i {
                    return Err(parse_err(ln, "symmetric storage lists the lower triangle only"));
                }
                if symmetry == MmSymmetry::SkewSymmetric && i == j {
                    return Err(parse_err(ln, "skew-symmetric diagonal must be omitted"));
                }
                entries.push((i, j, v));
                if i != j {
                    let w = if symmetry == MmSymmetry::Symmetric { v } else { -v };
                    entries.push((j, i, w));
                }
            }
        }
        Ok(())
    };

    match format {
        MmFormat::Coordinate => {
            let nnz = dims[2];
            let mut count = 0usize;
            for (ln, line) in data {
                if count == nnz {
                    return Err(parse_err(ln, "more entries than declared"));
                }
                let mut it = line.split_whitespace();
                let mut index = |name: &str, bound: usize| -> Result<usize> {
                    let w = it.next().ok_or_else(|| parse_err(ln, format!("missing {name}")))?;
                    let k: usize = w
                        .parse()
                        .map_err(|_| parse_err(ln, format!("bad {name} '{w}'")))?;
                    if k == 0 || k > bound {
                        return Err(parse_err(ln, format!("{name} {k} out of range 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let i = index("row", nrows)?;
                let j = index("column", ncols)?;
                let v = if pattern { 1.0 } else { parse_value(it.next(), ln)? };
                if it.next().is_some() {
                    return Err(parse_err(ln, "trailing tokens"));
                }
                push(i, j, v, ln)?;
                count += 1;
            }
            if count != nnz {
                return Err(parse_err(ln, format!("declared {nnz} entries, found {count}")));
            }
        }
        MmFormat::Array => {
            // column-major; symmetric storage lists the lower triangle
            let expected = match symmetry {
                MmSymmetry::General => nrows.checked_mul(ncols),
                MmSymmetry::Symmetric => nrows.checked_mul(nrows + 1).map(|x| x / 2),
                MmSymmetry::SkewSymmetric => nrows.checked_mul(nrows.saturating_sub(1)).map(|x| x / 2),
            }
            .ok_or_else(|| parse_err(ln, "array size overflows"))?;
            let (mut i, mut j) = (0usize, 0usize);
            let first_row = |j: usize| match symmetry {
                MmSymmetry::General => 0,
                MmSymmetry::Symmetric => j,
                MmSymmetry::SkewSymmetric => j + 1,
            };
            if nrows > 0 {
                i = first_row(0);
            }
            let mut count = 0usize;
            for (ln, line) in data {
                for w in line.split_whitespace() {
                    if count == expected {
                        return Err(parse_err(ln, "more values than the array holds"));
                    }
                    let v = parse_value(Some(w), ln)?;
                    while i >= nrows {
                        j += 1;
                        i = first_row(j);
                    }
                    push(i, j, v, ln)?;
                    i += 1;
                    count += 1;
                }
            }
            if count != expected {
                return Err(parse_err(ln, format!("array holds {expected} values, found {count}")));
            }
        }
    }

    Ok(MatrixMarket {
        nrows,
        ncols,
        format,
        symmetry,
        entries,
    })
}

fn parse_value(w: Option<&str>, ln: usize) -> Result<f64> {
    let w = w.ok_or_else(|| parse_err(ln, "missing value"))?;
    let v: f64 = w.parse().map_err(|_| parse_err(ln, format!("bad value '{w}'")))?;
    if !v.is_finite() {
        return Err(parse_err(ln, format!("non-finite value '{w}'")));
    }
    Ok(v)
}

/// Writes a sparse matrix in coordinate layout with round-trip precision.
pub fn write_matrix_market<W: Write>(out: &mut W, a: &SpMat) -> Result<()> {
    let a = a.as_ref();
    let nnz = a.val().len();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), nnz)?;
    for t in a.triplet_iter() {
        writeln!(out, "{} {} {:e}", t.row + 1, t.col + 1, t.val)?;
    }
    Ok(())
}

/// Writes a dense matrix in column-major array layout.
pub fn write_dense_matrix_market<W: Write>(out: &mut W, a: &Mat<f64>) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(out, "{:e}", a[(i, j)])?;
        }
    }
    Ok(())
}

/// Writes `header` and then one line per row, values with round-trip
/// precision.
pub fn write_csv_rows<W: Write>(out: &mut W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}
