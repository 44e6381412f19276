//! Cascade records, the global context graph, corpus files and splits.

mod format;
mod split;
mod synthetic;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::graph::CsrMatrix;
use crate::{Error, Result};

pub use format::{
    build_global_graph, parse_cascade_file, read_id_map, write_cascade_file, write_global_graph,
    write_id_map,
};
pub use split::{split_corpus, split_indices, Split};
pub use synthetic::{generate_synthetic_corpus, SyntheticConfig};

/// User identifier as it appears in the input files.
pub type UserId = u64;

/// One adoption: `child` re-shared the item from `parent` at `time` seconds
/// after the root post.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeEdge {
    pub parent: UserId,
    pub child: UserId,
    pub time: f64,
}

impl CascadeEdge {
    pub fn new(parent: UserId, child: UserId, time: f64) -> Result<Self> {
        if parent == child {
            return Err(Error::Validation(format!("user {child} cannot adopt from itself")));
        }
        if !(time >= 0.0) {
            return Err(Error::Validation(format!(
                "edge {parent}->{child} has negative or NaN time {time}"
            )));
        }
        Ok(Self { parent, child, time })
    }
}

/// A single item's diffusion tree over its full recorded horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeRecord {
    pub id: String,
    pub root: UserId,
    pub publish_time: f64,
    /// Sorted non-decreasing by time; each child appears once.
    pub edges: Vec<CascadeEdge>,
    /// Popularity at the prediction horizon, root included.
    pub final_popularity: Option<u64>,
}

impl CascadeRecord {
    /// Sorts the edges by time and checks the tree property.
    pub fn new(
        id: impl Into<String>,
        root: UserId,
        publish_time: f64,
        mut edges: Vec<CascadeEdge>,
        final_popularity: Option<u64>,
    ) -> Result<Self> {
        let id = id.into();
        edges.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut seen = HashSet::with_capacity(edges.len() + 1);
        seen.insert(root);
        for e in &edges {
            if !seen.insert(e.child) {
                return Err(Error::Validation(format!(
                    "cascade {id}: user {} adopts more than once",
                    e.child
                )));
            }
        }
        if final_popularity == Some(0) {
            return Err(Error::Validation(format!(
                "cascade {id}: final popularity must count the root"
            )));
        }
        Ok(Self {
            id,
            root,
            publish_time,
            edges,
            final_popularity,
        })
    }

    /// Number of users that adopted at or before `t` (root included).
    pub fn popularity_at(&self, t: f64) -> usize {
        1 + self.edges.partition_point(|e| e.time <= t)
    }

    pub fn max_time(&self) -> f64 {
        self.edges.last().map_or(0.0, |e| e.time)
    }
}

/// The cascade as observed up to `observation_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeGraph {
    /// `(user, adoption time)`, root first, then by adoption order.
    pub users: Vec<(UserId, f64)>,
    pub edges: Vec<CascadeEdge>,
    pub observation_time: f64,
}

/// Restricts `record` to adoptions at or before `t_obs`.
pub fn build_cascade_graph(record: &CascadeRecord, t_obs: f64) -> CascadeGraph {
    let edges: Vec<CascadeEdge> = record
        .edges
        .iter()
        .take_while(|e| e.time <= t_obs)
        .copied()
        .collect();
    let users = std::iter::once((record.root, 0.0))
        .chain(edges.iter().map(|e| (e.child, e.time)))
        .collect();
    CascadeGraph {
        users,
        edges,
        observation_time: t_obs,
    }
}

impl CascadeGraph {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn index_map(&self) -> HashMap<UserId, usize> {
        self.users
            .iter()
            .enumerate()
            .map(|(i, &(u, _))| (u, i))
            .collect()
    }

    /// Undirected adjacency over positions in `users`. Edges whose parent
    /// was never observed are skipped.
    pub fn adjacency(&self) -> CsrMatrix {
        let index = self.index_map();
        let trip: Vec<_> = self
            .edges
            .iter()
            .filter_map(|e| Some((*index.get(&e.parent)?, *index.get(&e.child)?)))
            .flat_map(|(a, b)| [(a, b, 1.0), (b, a, 1.0)])
            .collect();
        let n = self.users.len();
        CsrMatrix::from_triplets(n, n, trip).expect("indices from the user list")
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut depth: HashMap<UserId, usize> = HashMap::with_capacity(self.users.len());
        depth.insert(self.users[0].0, 0);
        let mut best = 0;
        for e in &self.edges {
            let d = depth.get(&e.parent).map_or(1, |d| d + 1);
            depth.insert(e.child, d);
            best = best.max(d);
        }
        best
    }
}

/// Dense re-indexing of original user ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    dense: HashMap<UserId, usize>,
    original: Vec<UserId>,
}

impl IdMap {
    /// Returns the dense id, assigning the next one on first sight.
    pub fn intern(&mut self, id: UserId) -> usize {
        let next = self.original.len();
        *self.dense.entry(id).or_insert_with(|| {
            self.original.push(id);
            next
        })
    }

    pub fn get(&self, id: UserId) -> Option<usize> {
        self.dense.get(&id).copied()
    }

    pub fn original(&self, dense: usize) -> UserId {
        self.original[dense]
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, usize)> + '_ {
        self.original.iter().enumerate().map(|(d, &o)| (o, d))
    }
}

/// Social or citation context graph: symmetric, no self-loops, dense ids.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGraph {
    adjacency: CsrMatrix,
    ids: IdMap,
}

impl GlobalGraph {
    /// Builds the graph from undirected pairs of original ids.
    /// Self-loops are dropped but still register their node.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (UserId, UserId)>) -> Self {
        let mut ids = IdMap::default();
        let mut set = HashSet::new();
        for (u, v) in pairs {
            let (a, b) = (ids.intern(u), ids.intern(v));
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let n = ids.len();
        let trip = set.into_iter().flat_map(|(a, b)| [(a, b, 1.0), (b, a, 1.0)]);
        let adjacency = CsrMatrix::from_triplets(n, n, trip).expect("dense ids");
        Self { adjacency, ids }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn ids(&self) -> &IdMap {
        &self.ids
    }

    pub fn degree(&self, dense: usize) -> usize {
        self.adjacency.row_nnz(dense)
    }

    pub fn neighbors(&self, dense: usize) -> &[usize] {
        self.adjacency.row(dense).0
    }

    /// Undirected edges `(a, b)` with `a < b`, in dense ids.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count())
            .flat_map(move |a| self.neighbors(a).iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| a < b)
    }
}

/// Descriptive metadata carried alongside a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub name: String,
    /// Full recorded duration, seconds.
    pub total_duration: f64,
    pub observation_time: f64,
    pub prediction_time: f64,
}

impl CorpusMeta {
    /// Observation and prediction windows of the known public datasets
    /// (first observation window of each).
    pub fn preset(name: &str) -> Option<Self> {
        const HOUR: f64 = 3600.0;
        const DAY: f64 = 24.0 * HOUR;
        const YEAR: f64 = 365.0 * DAY;
        let (total, obs) = match name.to_ascii_lowercase().as_str() {
            "weibo" => (24.0 * HOUR, 0.5 * HOUR),
            "twitter" => (32.0 * DAY, DAY),
            "aps" => (20.0 * YEAR, 3.0 * YEAR),
            _ => return None,
        };
        Some(Self {
            name: name.to_ascii_lowercase(),
            total_duration: total,
            observation_time: obs,
            prediction_time: total,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<CascadeRecord>,
    pub global: GlobalGraph,
    pub meta: CorpusMeta,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
