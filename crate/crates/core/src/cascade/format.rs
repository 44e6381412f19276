//! Text formats: cascade files, global-graph edge lists, id-map sidecars.
//!
//! Cascade lines are `id<TAB>root<TAB>pub_time<TAB>final_count<TAB>paths`
//! where each path `u0/u1/.../uk:t` says `uk` adopted at offset `t` from
//! `u(k-1)`. Paths may be separated by commas or whitespace; `final_count`
//! may be `-` when unknown.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{CascadeEdge, CascadeRecord, GlobalGraph, IdMap, UserId};
use crate::{par, Error, Result};

pub fn parse_cascade_file(reader: impl BufRead) -> Result<Vec<CascadeRecord>> {
    let lines: Vec<(usize, String)> = reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::io::Result<_>>()?;
    let parsed = par::map(&lines, |(no, line)| parse_line(*no, line));
    let mut out = Vec::with_capacity(parsed.len());
    for p in parsed {
        if let Some(r) = p? {
            out.push(r);
        }
    }
    Ok(out)
}

fn parse_line(no: usize, line: &str) -> Result<Option<CascadeRecord>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Ok(None);
    }
    let perr = |msg: String| Error::Parse { line: no, msg };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(perr(format!("expected 5 tab-separated fields, found {}", fields.len())));
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err(perr("empty cascade id".into()));
    }
    let root: UserId = fields[1]
        .trim()
        .parse()
        .map_err(|_| perr(format!("bad root user {:?}", fields[1])))?;
    let publish_time: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| perr(format!("bad publish time {:?}", fields[2])))?;
    let final_popularity = match fields[3].trim() {
        "" | "-" => None,
        s => Some(
            s.parse::<u64>()
                .map_err(|_| perr(format!("bad final count {s:?}")))?,
        ),
    };

    let mut edges = Vec::new();
    for path in fields[4]
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
    {
        let (chain, time) = path
            .rsplit_once(':')
            .ok_or_else(|| perr(format!("path {path:?} has no ':time' suffix")))?;
        let time: f64 = time
            .parse()
            .map_err(|_| perr(format!("bad time in path {path:?}")))?;
        let users = chain
            .split('/')
            .map(|u| u.parse::<UserId>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| perr(format!("bad user id in path {path:?}")))?;
        match users.as_slice() {
            [] => unreachable!("split yields at least one item"),
            [only] if *only == root => {}
            [only] => return Err(perr(format!("single-user path {only} is not the root {root}"))),
            [.., parent, child] => {
                edges.push(CascadeEdge::new(*parent, *child, time).map_err(|e| perr(e.to_string()))?)
            }
        }
    }
    CascadeRecord::new(id, root, publish_time, edges, final_popularity)
        .map(Some)
        .map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {no}: {msg}")),
            other => other,
        })
}

/// Writes records in canonical form: the root path first, then one full
/// root-to-child path per edge in time order.
pub fn write_cascade_file<'a>(
    records: impl IntoIterator<Item = &'a CascadeRecord>,
    mut w: impl Write,
) -> Result<()> {
    for r in records {
        let parent: HashMap<UserId, UserId> = r.edges.iter().map(|e| (e.child, e.parent)).collect();
        let mut paths = vec![format!("{}:0", r.root)];
        for e in &r.edges {
            let mut chain = vec![e.child];
            let mut cur = e.child;
            while let Some(&p) = parent.get(&cur) {
                chain.push(p);
                if p == r.root || chain.len() > r.edges.len() + 1 {
                    break;
                }
                cur = p;
            }
            let chain: Vec<String> = chain.iter().rev().map(|u| u.to_string()).collect();
            paths.push(format!("{}:{}", chain.join("/"), e.time));
        }
        let count = r
            .final_popularity
            .map_or_else(|| "-".to_string(), |c| c.to_string());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.id,
            r.root,
            r.publish_time,
            count,
            paths.join(",")
        )?;
    }
    Ok(())
}

/// Reads `u<TAB>v` lines into a [`GlobalGraph`]. Blank lines and lines
/// starting with `#` are ignored.
pub fn build_global_graph(reader: impl BufRead) -> Result<GlobalGraph> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split(['\t', ' ']).filter(|s| !s.is_empty());
        let mut next = || -> Result<UserId> {
            let tok = it.next().ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected two user ids".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("non-integer user id {tok:?}"),
            })
        };
        let (u, v) = (next()?, next()?);
        pairs.push((u, v));
    }
    Ok(GlobalGraph::from_pairs(pairs))
}

/// Writes the undirected edges with original ids, one `u<TAB>v` per line.
pub fn write_global_graph(g: &GlobalGraph, mut w: impl Write) -> Result<()> {
    for (a, b) in g.edges() {
        writeln!(w, "{}\t{}", g.ids().original(a), g.ids().original(b))?;
    }
    Ok(())
}

/// CSV sidecar `original_id,dense_id`.
pub fn write_id_map(ids: &IdMap, w: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["original_id", "dense_id"])?;
    for (orig, dense) in ids.iter() {
        csv.write_record([orig.to_string(), dense.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_id_map(r: impl std::io::Read) -> Result<IdMap> {
    let mut csv = csv::Reader::from_reader(r);
    let mut rows: Vec<(UserId, usize)> = Vec::new();
    for rec in csv.deserialize() {
        rows.push(rec?);
    }
    rows.sort_by_key(|&(_, d)| d);
    let mut ids = IdMap::default();
    for (orig, dense) in rows {
        if ids.intern(orig) != dense {
            return Err(Error::Format("id map dense ids are not a contiguous range".into()));
        }
    }
    Ok(ids)
}
