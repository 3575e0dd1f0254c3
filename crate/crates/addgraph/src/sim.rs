//! Synthetic data from random directed acyclic graphs.
//!
//! Data are drawn through additive structural equations: in topological
//! order, each node is the sum of per-edge component functions of its
//! parents plus standard normal noise, every realized component rescaled
//! to unit sample variance. Linear components give multivariate normal
//! data; cubic ones give data with no standard joint distribution.
//!
//! All draws come from keyed ChaCha substreams (per-edge for
//! coefficients, per-node for noise), so coefficient draws do not depend
//! on the total number of variables or on traversal order, and a seed
//! fully determines the output.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;

const STREAM_EDGES: u64 = 1;
const STREAM_COEFFS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Component-function family for the structural equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// f(v) = v, giving jointly Gaussian data.
    Linear,
    /// f(v) = b1 v + b2 v^2 + b3 v^3 with b1 ~ N(0,1), b2, b3 ~ N(0, 0.5).
    Cubic,
}

/// Ground-truth directed acyclic graph with per-edge structural-equation
/// coefficients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagSpec {
    pub d: usize,
    /// Directed edges (source, target), sorted.
    pub edges: Vec<(usize, usize)>,
    pub scheme: Scheme,
    /// One (b1, b2, b3) triple per edge, aligned with `edges`.
    pub coeffs: Vec<[f64; 3]>,
    pub seed: u64,
}

fn substream(seed: u64, stream: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

impl DagSpec {
    /// Validates index ranges, acyclicity and coefficient alignment.
    pub fn validate(&self) -> Result<()> {
        for &(src, dst) in &self.edges {
            if src == dst || src >= self.d || dst >= self.d {
                return Err(Error::invalid_param(
                    "edges",
                    format!("edge ({src}, {dst}) invalid for d = {}", self.d),
                ));
            }
        }
        if !self.coeffs.is_empty() && self.coeffs.len() != self.edges.len() {
            return Err(Error::shape(format!(
                "{} coefficient triples for {} edges",
                self.coeffs.len(),
                self.edges.len()
            )));
        }
        self.topological_order().map(|_| ())
    }

    /// A topological order of the nodes (Kahn's algorithm; ties broken by
    /// index for determinism).
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let mut indegree = vec![0usize; self.d];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); self.d];
        for &(src, dst) in &self.edges {
            indegree[dst] += 1;
            children[src].push(dst);
        }
        let mut ready: std::collections::BTreeSet<usize> = (0..self.d)
            .filter(|&v| indegree[v] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.d);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != self.d {
            return Err(Error::invalid_param("edges", "graph contains a cycle"));
        }
        Ok(order)
    }

    /// Parents of each node, in edge order.
    fn parents(&self) -> Vec<Vec<(usize, usize)>> {
        let mut parents: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.d];
        for (e, &(src, dst)) in self.edges.iter().enumerate() {
            parents[dst].push((src, e));
        }
        parents
    }

    /// The directed edge set as a graph.
    pub fn truth_directed(&self) -> Graph {
        Graph::from_edges(self.d, true, self.edges.iter().copied()).expect("validated edges")
    }
}

/// Draws `m` of the d(d-1)/2 unordered pairs uniformly without
/// replacement and orients each low index -> high index, so the identity
/// permutation is a valid causal ordering.
pub fn random_dag(d: usize, m: usize, seed: u64) -> Result<DagSpec> {
    let total = d * d.saturating_sub(1) / 2;
    if m > total {
        return Err(Error::TooManyEdges {
            requested: m,
            available: total,
        });
    }
    let mut rng = substream(seed, STREAM_EDGES, d as u64, m as u64);
    // Floyd's sampling: uniform m-subset of 0..total.
    let mut chosen = std::collections::BTreeSet::new();
    for i in (total - m)..total {
        let t = rng.random_range(0..=i);
        if !chosen.insert(t) {
            chosen.insert(i);
        }
    }
    let edges = chosen.into_iter().map(|idx| decode_pair(d, idx)).collect();
    Ok(DagSpec {
        d,
        edges,
        scheme: Scheme::Linear,
        coeffs: Vec::new(),
        seed,
    })
}

/// Inverse of the lexicographic pair enumeration (0,1), (0,2), ...
fn decode_pair(d: usize, mut idx: usize) -> (usize, usize) {
    for a in 0..d {
        let row = d - a - 1;
        if idx < row {
            return (a, a + idx + 1);
        }
        idx -= row;
    }
    unreachable!("pair index out of range");
}

/// Fills per-edge coefficients: the cubic scheme draws
/// (b1, b2, b3) ~ N(0,1) x N(0,0.5) x N(0,0.5) from a per-edge substream;
/// the linear scheme fixes (1, 0, 0).
pub fn gen_coeffs(spec: &mut DagSpec, scheme: Scheme) {
    spec.scheme = scheme;
    spec.coeffs = spec
        .edges
        .iter()
        .map(|&(src, dst)| match scheme {
            Scheme::Linear => [1.0, 0.0, 0.0],
            Scheme::Cubic => {
                let mut rng = substream(spec.seed, STREAM_COEFFS, src as u64, dst as u64);
                let b1 = Normal::new(0.0, 1.0).unwrap().sample(&mut rng);
                let b2 = Normal::new(0.0, 0.5f64.sqrt()).unwrap().sample(&mut rng);
                let b3 = Normal::new(0.0, 0.5f64.sqrt()).unwrap().sample(&mut rng);
                [b1, b2, b3]
            }
        })
        .collect();
}

fn component(coeff: &[f64; 3], parent: &Array1<f64>) -> Array1<f64> {
    parent.mapv(|v| coeff[0] * v + coeff[1] * v * v + coeff[2] * v * v * v)
}

/// Samples `n` observations through the structural equations, in
/// topological order. Every realized component column is rescaled to unit
/// sample variance before entering its child.
pub fn sample(spec: &DagSpec, n: usize) -> Result<DataMatrix> {
    spec.validate()?;
    if spec.coeffs.len() != spec.edges.len() {
        return Err(Error::invalid_param("coeffs", "coefficients not generated"));
    }
    if n < 2 {
        return Err(Error::invalid_param("n", format!("need n >= 2, got {n}")));
    }
    let order = spec.topological_order()?;
    let parents = spec.parents();
    let nf = n as f64;
    let mut columns: Vec<Option<Array1<f64>>> = vec![None; spec.d];
    for &j in &order {
        let mut rng = substream(spec.seed, STREAM_NOISE, j as u64, 0);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut col = Array1::from_shape_fn(n, |_| noise.sample(&mut rng));
        for &(src, e) in &parents[j] {
            let parent = columns[src].as_ref().expect("topological order");
            let raw = component(&spec.coeffs[e], parent);
            let mean = raw.sum() / nf;
            let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
            if var < 1e-12 {
                return Err(Error::DegenerateComponent { parent: src, child: j });
            }
            col += &(&raw / var.sqrt());
        }
        columns[j] = Some(col);
    }
    let mut values = Array2::zeros((n, spec.d));
    for (j, col) in columns.into_iter().enumerate() {
        values.column_mut(j).assign(&col.expect("all nodes sampled"));
    }
    DataMatrix::with_default_names(values)
}

/// The conditional independence graph of the DAG: every directed edge
/// undirected, plus an edge between every pair of parents sharing a child.
pub fn moralize(spec: &DagSpec) -> Graph {
    let mut g = Graph::undirected(spec.d);
    for &(src, dst) in &spec.edges {
        g.insert(src, dst).expect("validated edges");
    }
    let parents = spec.parents();
    for list in &parents {
        for (i, &(a, _)) in list.iter().enumerate() {
            for &(b, _) in &list[i + 1..] {
                if a != b {
                    g.insert(a, b).expect("validated edges");
                }
            }
        }
    }
    g
}

/// Block-diagonal replication of a DAG: `copies` disjoint copies of the
/// base graph. Coefficients are redrawn per block through the per-edge
/// substreams unless `clone_coeffs` is set, in which case every block
/// reuses the base coefficients.
pub fn replicate(base: &DagSpec, copies: usize, clone_coeffs: bool) -> Result<DagSpec> {
    base.validate()?;
    if copies == 0 {
        return Err(Error::invalid_param("copies", "need at least one copy"));
    }
    let d = base.d * copies;
    let mut edges = Vec::with_capacity(base.edges.len() * copies);
    let mut coeffs = Vec::new();
    for block in 0..copies {
        let offset = block * base.d;
        for &(src, dst) in &base.edges {
            edges.push((src + offset, dst + offset));
        }
    }
    let mut spec = DagSpec {
        d,
        edges,
        scheme: base.scheme,
        coeffs: Vec::new(),
        seed: base.seed,
    };
    if !base.coeffs.is_empty() {
        if clone_coeffs {
            for _ in 0..copies {
                coeffs.extend_from_slice(&base.coeffs);
            }
            spec.coeffs = coeffs;
        } else {
            gen_coeffs(&mut spec, base.scheme);
        }
    }
    Ok(spec)
}
