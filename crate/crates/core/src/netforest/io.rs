//! Text format: a header line
//! `netforest v1 n=<n> dim=<d> t=<t> tau=11 root_level=<l>` followed by one
//! `node <id> parent=<id|-> level=<l> rep=<p> children=<list> rel=<list>`
//! line per node, lists comma separated.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{NetForest, NetNode};
use crate::error::{Error, Result};

pub fn format_forest(forest: &NetForest) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "netforest v1 n={} dim={} t={} tau=11 root_level={}",
        forest.n(),
        forest.dim(),
        forest.t(),
        forest.root_level()
    );
    for v in forest.nodes() {
        let parent = v.parent.map_or_else(|| "-".to_string(), |p| p.to_string());
        let _ = writeln!(
            out,
            "node {} parent={parent} level={} rep={} children={} rel={}",
            v.id,
            v.level,
            v.rep,
            join(&v.children),
            join(&v.rel)
        );
    }
    out
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Value of `key=value` token `tok`.
pub(crate) fn field<'a>(line: usize, tok: Option<&'a str>, key: &str) -> Result<&'a str> {
    tok.and_then(|s| s.strip_prefix(key))
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| perr(line, format!("expected `{key}=`")))
}

pub(crate) fn num<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| perr(line, format!("bad {what} `{s}`")))
}

fn list(line: usize, s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| num(line, x, "node id")).collect()
}

pub fn parse_forest(text: &str) -> Result<NetForest> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty forest file"))?;
    let mut tok = header.split(' ');
    if tok.next() != Some("netforest") || tok.next() != Some("v1") {
        return Err(perr(1, "expected `netforest v1` header"));
    }
    let n: usize = num(1, field(1, tok.next(), "n")?, "n")?;
    let dim: usize = num(1, field(1, tok.next(), "dim")?, "dim")?;
    let t: f64 = num(1, field(1, tok.next(), "t")?, "t")?;
    if field(1, tok.next(), "tau")? != "11" {
        return Err(perr(1, "only tau=11 is supported"));
    }
    let root_level: i32 = num(1, field(1, tok.next(), "root_level")?, "root_level")?;
    if tok.next().is_some() {
        return Err(perr(1, "trailing header fields"));
    }
    let mut nodes = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split(' ');
        if tok.next() != Some("node") {
            return Err(perr(ln, "expected a `node` line"));
        }
        let id: usize = num(ln, tok.next().unwrap_or(""), "node id")?;
        let parent = match field(ln, tok.next(), "parent")? {
            "-" => None,
            s => Some(num(ln, s, "parent")?),
        };
        let level = num(ln, field(ln, tok.next(), "level")?, "level")?;
        let rep = num(ln, field(ln, tok.next(), "rep")?, "rep")?;
        let children = list(ln, field(ln, tok.next(), "children")?)?;
        let rel = list(ln, field(ln, tok.next(), "rel")?)?;
        if tok.next().is_some() {
            return Err(perr(ln, "trailing node fields"));
        }
        nodes.push(NetNode { id, rep, level, parent, children, rel });
    }
    NetForest::from_nodes(n, dim, t, root_level, nodes)
}

pub fn read_forest(path: &Path) -> Result<NetForest> {
    parse_forest(&std::fs::read_to_string(path)?)
}
