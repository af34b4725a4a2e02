//! Plain-text file formats.
//!
//! * tree: TSV, first line `n<TAB>root`, then `u<TAB>v<TAB>length` per edge
//! * reals (caps, line locations): one value per line
//! * points: CSV, one row per point
//! * embedding: CSV with a `dim=D` header line

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::{Embedding, PointSet, WeightedTree};

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.trim().parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse {tok:?}") })
}

fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

pub fn write_tree(tree: &WeightedTree) -> String {
    let mut s = format!("{}\t{}\n", tree.n(), tree.root());
    for &(u, v, l) in tree.edges() {
        writeln!(s, "{u}\t{v}\t{l}").unwrap();
    }
    s
}

pub fn read_tree(s: &str) -> Result<WeightedTree> {
    let mut lines = content_lines(s);
    let (ln, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty tree file".into() })?;
    let f: Vec<&str> = head.split('\t').collect();
    if f.len() != 2 {
        return Err(Error::Parse { line: ln, msg: "expected `n<TAB>root`".into() });
    }
    let n: usize = parse(f[0], ln)?;
    let root: usize = parse(f[1], ln)?;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (ln, l) in lines {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::Parse { line: ln, msg: "expected `u<TAB>v<TAB>length`".into() });
        }
        edges.push((parse(f[0], ln)?, parse(f[1], ln)?, parse(f[2], ln)?));
    }
    WeightedTree::new(n, root, edges)
}

pub fn write_reals(xs: &[f64]) -> String {
    let mut s = String::new();
    for x in xs {
        writeln!(s, "{x}").unwrap();
    }
    s
}

pub fn read_reals(s: &str) -> Result<Vec<f64>> {
    content_lines(s).map(|(ln, l)| parse(l, ln)).collect()
}

fn write_rows(s: &mut String, rows: &[Vec<f64>]) {
    for r in rows {
        for (k, x) in r.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{x}").unwrap();
        }
        s.push('\n');
    }
}

fn read_rows<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<Vec<f64>>> {
    lines.map(|(ln, l)| l.split(',').map(|t| parse(t, ln)).collect()).collect()
}

pub fn write_points(p: &PointSet) -> String {
    let mut s = String::new();
    write_rows(&mut s, p.points());
    s
}

pub fn read_points(s: &str) -> Result<PointSet> {
    PointSet::new(read_rows(content_lines(s))?)
}

pub fn write_embedding(e: &Embedding) -> String {
    let mut s = format!("dim={}\n", e.dim());
    write_rows(&mut s, e.rows());
    s
}

pub fn read_embedding(s: &str) -> Result<Embedding> {
    let mut lines = content_lines(s);
    let (ln, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty embedding file".into() })?;
    let dim: usize = match head.strip_prefix("dim=") {
        Some(d) => parse(d, ln)?,
        None => return Err(Error::Parse { line: ln, msg: "expected `dim=D` header".into() }),
    };
    let rows = read_rows(lines)?;
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Parse { line: ln, msg: format!("rows do not have {dim} columns") });
    }
    Embedding::new(rows)
}
