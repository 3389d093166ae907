//! The `hjbgrid/1` text format.
//!
//! ```text
//! hjbgrid/1
//! dim 2
//! h 5.0000000000000000e-2
//! origin 0 0
//! range -22 22 -22 22
//! nodes 1234
//! values yes
//! -3 5 I 1.2345678901234567e-1
//! ```
//!
//! One line per valued node in lexicographic index order: integer indices,
//! the class tag (`I` or `B`) and, when `values yes`, the value with 17
//! significant digits.

use std::io::{self, Write};

use super::{Grid, LatticeError, NodeClass};
use crate::scalar::Scalar;

pub const MAGIC: &str = "hjbgrid/1";

pub fn write_dump<T: Scalar, W: Write>(grid: &Grid<T>, values: Option<&[T]>, mut out: W) -> io::Result<()> {
    let dim = grid.dim();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "dim {dim}")?;
    writeln!(out, "h {:.16e}", grid.h().as_f64())?;
    writeln!(out, "origin {}", vec!["0"; dim].join(" "))?;
    let range: Vec<String> = grid.index_range().iter().flat_map(|(l, u)| [l.to_string(), u.to_string()]).collect();
    writeln!(out, "range {}", range.join(" "))?;
    writeln!(out, "nodes {}", grid.n_valued())?;
    writeln!(out, "values {}", if values.is_some() { "yes" } else { "no" })?;
    for s in 0..grid.n_valued() {
        for i in grid.index(s) {
            write!(out, "{i} ")?;
        }
        write!(out, "{}", grid.class(s).tag())?;
        if let Some(v) = values {
            write!(out, " {:.16e}", v[s].as_f64())?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DumpNode {
    pub index: Vec<i64>,
    pub class: NodeClass,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridDump {
    pub dim: usize,
    pub h: f64,
    pub origin: Vec<f64>,
    pub range: Vec<(i64, i64)>,
    pub nodes: Vec<DumpNode>,
}

pub fn parse_dump(text: &str) -> Result<GridDump, LatticeError> {
    let err = |line: usize, msg: &str| LatticeError::DumpParse { line: line + 1, msg: msg.to_string() };
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<(usize, Vec<String>), LatticeError> {
        let (n, l) = lines.next().ok_or_else(|| err(0, "truncated header"))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(err(n, &format!("expected `{key}`")));
        }
        Ok((n, parts.map(str::to_string).collect()))
    };
    let (n, magic) = header(MAGIC)?;
    if !magic.is_empty() {
        return Err(err(n, "unexpected tokens after magic"));
    }
    let (n, dim) = header("dim")?;
    let dim: usize = dim.first().and_then(|d| d.parse().ok()).ok_or_else(|| err(n, "bad dim"))?;
    let (n, h) = header("h")?;
    let h: f64 = h.first().and_then(|d| d.parse().ok()).ok_or_else(|| err(n, "bad h"))?;
    let (n, origin) = header("origin")?;
    let origin: Vec<f64> =
        origin.iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| err(n, "bad origin"))?;
    let (n, range) = header("range")?;
    let range: Vec<i64> = range.iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| err(n, "bad range"))?;
    if origin.len() != dim || range.len() != 2 * dim {
        return Err(err(n, "header arity does not match dim"));
    }
    let (n, count) = header("nodes")?;
    let count: usize = count.first().and_then(|d| d.parse().ok()).ok_or_else(|| err(n, "bad node count"))?;
    let (n, has_values) = header("values")?;
    let has_values = match has_values.first().map(String::as_str) {
        Some("yes") => true,
        Some("no") => false,
        _ => return Err(err(n, "values must be yes or no")),
    };

    let mut nodes = Vec::with_capacity(count);
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let expected = dim + 1 + usize::from(has_values);
        if toks.len() != expected {
            return Err(err(n, &format!("expected {expected} fields")));
        }
        let index: Vec<i64> =
            toks[..dim].iter().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| err(n, "bad index"))?;
        let class = match toks[dim] {
            "I" => NodeClass::Interior,
            "B" => NodeClass::BoundaryBand,
            _ => return Err(err(n, "class tag must be I or B")),
        };
        let value =
            if has_values { Some(toks[dim + 1].parse::<f64>().map_err(|_| err(n, "bad value"))?) } else { None };
        nodes.push(DumpNode { index, class, value });
    }
    if nodes.len() != count {
        return Err(err(0, &format!("header announces {count} nodes, found {}", nodes.len())));
    }
    Ok(GridDump { dim, h, origin, range: range.chunks(2).map(|c| (c[0], c[1])).collect(), nodes })
}
