//! Edge sets over labeled vertices.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// An undirected or directed edge set over `d` vertices, 0-based.
///
/// Undirected edges are stored as (low, high); directed edges as
/// (source, target). Iteration is always in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    d: usize,
    directed: bool,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn undirected(d: usize) -> Self {
        Graph {
            d,
            directed: false,
            edges: BTreeSet::new(),
        }
    }

    pub fn directed(d: usize) -> Self {
        Graph {
            d,
            directed: true,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges<I>(d: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = if directed { Graph::directed(d) } else { Graph::undirected(d) };
        for (a, b) in edges {
            g.insert(a, b)?;
        }
        Ok(g)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Inserts an edge; for undirected graphs the pair is normalized to
    /// (low, high). Self-loops and out-of-range vertices are rejected.
    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::invalid_param("edge", format!("self-loop at {a}")));
        }
        if a >= self.d || b >= self.d {
            return Err(Error::invalid_param(
                "edge",
                format!("({a}, {b}) out of range for d = {}", self.d),
            ));
        }
        let key = if self.directed || a < b { (a, b) } else { (b, a) };
        self.edges.insert(key);
        Ok(())
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        if a == b || a >= self.d || b >= self.d {
            return false;
        }
        let key = if self.directed || a < b { (a, b) } else { (b, a) };
        self.edges.contains(&key)
    }

    /// Edges in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Number of edges present in both graphs.
    pub fn intersection_len(&self, other: &Graph) -> usize {
        self.edges.intersection(&other.edges).count()
    }

    /// Number of edges present in exactly one of the two graphs.
    pub fn symmetric_difference_len(&self, other: &Graph) -> usize {
        self.edges.symmetric_difference(&other.edges).count()
    }
}
