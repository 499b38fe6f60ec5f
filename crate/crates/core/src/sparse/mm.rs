// SPDX-License-Identifier: Apache-2.0

//! Matrix Market reader and writer.
//!
//! Sparse matrices use the `coordinate` layout (`real` or `integer`,
//! `general` or `symmetric`); dense reduced matrices use the `array` layout.

use std::fmt::Write as _;
use std::path::Path;

use super::SparseMatrix;
use crate::dense::DenseBlock;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

struct Header {
    layout: Layout,
    symmetric: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let toks: Vec<String> = line
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    let bad = |m: &str| Error::Parse {
        line: 1,
        message: format!("Matrix Market header: {m}"),
    };
    if toks.len() < 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(bad(
            "expected `%%MatrixMarket matrix <layout> <field> <symmetry>`",
        ));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(bad(&format!("unsupported layout `{other}`"))),
    };
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(bad(&format!("unsupported field `{}`", toks[3])));
    }
    let symmetric = match toks[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(bad(&format!("unsupported symmetry `{other}`"))),
    };
    Ok(Header { layout, symmetric })
}

/// Data lines with their 1-based line numbers, skipping comments and blanks.
fn body(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            message: "malformed number".into(),
        })
}

pub fn parse_sparse(text: &str) -> Result<SparseMatrix> {
    let header = parse_header(text.lines().next().unwrap_or(""))?;
    if header.layout == Layout::Array {
        let dense = parse_dense(text)?;
        return Ok(SparseMatrix::from_dense(&dense));
    }
    let mut lines = body(text);
    let (ln, size) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing size line".into(),
    })?;
    let mut it = size.split_whitespace();
    let nrows: usize = num(it.next(), ln)?;
    let ncols: usize = num(it.next(), ln)?;
    let nnz: usize = num(it.next(), ln)?;
    let mut t = Vec::with_capacity(if header.symmetric { 2 * nnz } else { nnz });
    for (ln, l) in lines {
        let mut it = l.split_whitespace();
        let i: usize = num(it.next(), ln)?;
        let j: usize = num(it.next(), ln)?;
        let v: f64 = num(it.next(), ln)?;
        if i == 0 || j == 0 {
            return Err(Error::Parse {
                line: ln,
                message: "indices are 1-based".into(),
            });
        }
        t.push((i - 1, j - 1, v));
        if header.symmetric && i != j {
            t.push((j - 1, i - 1, v));
        }
    }
    let declared = t
        .iter()
        .filter(|(i, j, _)| !header.symmetric || i >= j)
        .count();
    if declared != nnz {
        return Err(Error::Parse {
            line: 0,
            message: format!("declared {nnz} entries, found {declared}"),
        });
    }
    SparseMatrix::from_triplets(nrows, ncols, &t)
}

pub fn parse_dense(text: &str) -> Result<DenseBlock> {
    let header = parse_header(text.lines().next().unwrap_or(""))?;
    if header.layout == Layout::Coordinate {
        return Ok(parse_sparse(text)?.to_dense());
    }
    let mut lines = body(text);
    let (ln, size) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing size line".into(),
    })?;
    let mut it = size.split_whitespace();
    let nrows: usize = num(it.next(), ln)?;
    let ncols: usize = num(it.next(), ln)?;
    let mut data = Vec::with_capacity(nrows * ncols);
    for (ln, l) in lines {
        for tok in l.split_whitespace() {
            data.push(num::<f64>(Some(tok), ln)?);
        }
    }
    DenseBlock::from_col_major(nrows, ncols, data)
}

pub fn format_sparse(m: &SparseMatrix) -> String {
    let mut s = String::with_capacity(32 * m.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", m.nrows(), m.ncols(), m.nnz());
    for (i, j, v) in m.iter() {
        let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    s
}

pub fn format_dense(d: &DenseBlock) -> String {
    let mut s = String::with_capacity(26 * d.as_slice().len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", d.nrows(), d.ncols());
    for v in d.as_slice() {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

pub fn read_sparse(path: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sparse(&text)
}

pub fn read_dense(path: &Path) -> Result<DenseBlock> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dense(&text)
}

pub fn write_sparse(path: &Path, m: &SparseMatrix) -> Result<()> {
    std::fs::write(path, format_sparse(m)).map_err(|e| Error::io(path, e))
}

pub fn write_dense(path: &Path, d: &DenseBlock) -> Result<()> {
    std::fs::write(path, format_dense(d)).map_err(|e| Error::io(path, e))
}
