//! Directed acyclic graph estimation under a known causal ordering.
//!
//! Each node is regressed on additive functions of its predecessors only,
//! with a per-block group penalty `lambda * sum_k ||psi_jk b_jk||_2`. The
//! per-node problems share no parameters and are solved independently and
//! in parallel.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::basis::ExpandedDesign;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::path::{assemble_path, validate_grid, PathResult};
use crate::solver::{CoefficientSet, FitResult, SolverOptions};

/// A permutation of the variables; edges may only point from earlier to
/// later positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalOrdering {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl CausalOrdering {
    /// `order[p]` is the variable at position `p`. Must be a permutation
    /// of `0..d`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let d = order.len();
        if d == 0 {
            return Err(Error::InvalidOrdering {
                reason: "ordering is empty".to_string(),
            });
        }
        let mut seen = vec![false; d];
        for &v in &order {
            if v >= d {
                return Err(Error::InvalidOrdering {
                    reason: format!("index {v} out of range for {d} variables"),
                });
            }
            if seen[v] {
                return Err(Error::InvalidOrdering {
                    reason: format!("index {v} appears twice"),
                });
            }
            seen[v] = true;
        }
        let mut position = vec![0; d];
        for (p, &v) in order.iter().enumerate() {
            position[v] = p;
        }
        Ok(CausalOrdering { order, position })
    }

    pub fn identity(d: usize) -> Self {
        CausalOrdering {
            order: (0..d).collect(),
            position: (0..d).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self) -> &[usize] {
        &self.position
    }

    /// True when `k` precedes `j`.
    pub fn precedes(&self, k: usize, j: usize) -> bool {
        self.position[k] < self.position[j]
    }

    /// Variables preceding `j`, in ordering order.
    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.order[..self.position[j]]
    }
}

/// Per-node analog of `lambda_max`: the smallest penalty at which every
/// node's parent set is empty.
pub fn dag_lambda_max(design: &ExpandedDesign, x: &DataMatrix, ordering: &CausalOrdering) -> f64 {
    let n = design.n() as f64;
    let mut best = 0.0f64;
    for j in 0..design.d() {
        for &k in ordering.predecessors(j) {
            let block = design.block(j, k);
            if block.r() == 0 {
                continue;
            }
            let proj = block.psi().t().dot(&x.column(j)) / n;
            let norm = proj.iter().map(|v| v * v).sum::<f64>().sqrt();
            best = best.max(norm / n.sqrt());
        }
    }
    best
}

struct NodeOutcome {
    beta: Vec<Array1<f64>>,
    residual: Array1<f64>,
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
    kkt: f64,
    objective: f64,
}

fn solve_node(
    design: &ExpandedDesign,
    x_col: ArrayView1<'_, f64>,
    node: usize,
    preds: &[usize],
    lambda: f64,
    opts: &SolverOptions,
    warm: Option<&[Array1<f64>]>,
) -> NodeOutcome {
    let n = design.n() as f64;
    let mut beta: Vec<Array1<f64>> = match warm {
        Some(w) => w.to_vec(),
        None => preds
            .iter()
            .map(|&k| Array1::zeros(design.r(node, k)))
            .collect(),
    };
    let mut residual = x_col.to_owned();
    for (i, &k) in preds.iter().enumerate() {
        if beta[i].iter().any(|v| *v != 0.0) {
            residual -= &design.block(node, k).psi().dot(&beta[i]);
        }
    }
    let objective_of = |resid: &Array1<f64>, beta: &[Array1<f64>]| -> f64 {
        let loss = resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * n);
        let pen: f64 = beta
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        loss + lambda * n.sqrt() * pen
    };
    let mut trace = vec![objective_of(&residual, &beta)];
    let mut sweeps = 0;
    let mut converged = preds.is_empty();
    while !preds.is_empty() {
        if sweeps >= opts.max_sweeps {
            converged = false;
            break;
        }
        let mut max_delta = 0.0f64;
        for (i, &k) in preds.iter().enumerate() {
            let block = design.block(node, k);
            if block.r() == 0 {
                continue;
            }
            let mut bhat = block.psi().t().dot(&residual);
            bhat.mapv_inplace(|v| v / n);
            bhat += &beta[i];
            let norm = bhat.iter().map(|v| v * v).sum::<f64>().sqrt();
            // ||psi bhat|| = sqrt(n) ||bhat||, so the threshold is at
            // lambda * sqrt(n).
            let s = if norm * n.sqrt() > n * lambda {
                1.0 - lambda * n.sqrt() / norm
            } else {
                0.0
            };
            let new = &bhat * s;
            let delta = &new - &beta[i];
            let delta_norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if delta_norm > 0.0 {
                residual -= &block.psi().dot(&delta);
            }
            beta[i] = new;
            max_delta = max_delta.max(delta_norm);
        }
        sweeps += 1;
        if opts.residual_refresh > 0 && sweeps % opts.residual_refresh == 0 {
            residual = x_col.to_owned();
            for (i, &k) in preds.iter().enumerate() {
                if beta[i].iter().any(|v| *v != 0.0) {
                    residual -= &design.block(node, k).psi().dot(&beta[i]);
                }
            }
        }
        let prev = *trace.last().unwrap();
        let obj = objective_of(&residual, &beta);
        trace.push(obj);
        if max_delta < opts.block_tol && (prev - obj).abs() <= opts.objective_tol * prev.abs().max(1.0)
        {
            converged = true;
            break;
        }
    }
    // Exact residual and optimality certificate.
    let mut fitted = Array1::zeros(residual.len());
    for (i, &k) in preds.iter().enumerate() {
        if beta[i].iter().any(|v| *v != 0.0) {
            fitted += &design.block(node, k).psi().dot(&beta[i]);
        }
    }
    let residual = &x_col.to_owned() - &fitted;
    let mut kkt = 0.0f64;
    for (i, &k) in preds.iter().enumerate() {
        let block = design.block(node, k);
        if block.r() == 0 {
            continue;
        }
        let proj = block.psi().t().dot(&residual) / n;
        let norm = beta[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let stat = &(&beta[i] * (lambda * n.sqrt() / norm)) - &proj;
            kkt = kkt.max(stat.iter().map(|v| v * v).sum::<f64>().sqrt());
        } else {
            let sq = proj.iter().map(|v| v * v).sum::<f64>() * n * n;
            kkt = kkt.max((sq / (lambda * lambda * n * n * n) - 1.0).max(0.0));
        }
    }
    let objective = objective_of(&residual, &beta);
    NodeOutcome {
        beta,
        residual,
        sweeps,
        converged,
        trace,
        kkt,
        objective,
    }
}

fn check_dag_inputs(
    design: &ExpandedDesign,
    x: &DataMatrix,
    ordering: &CausalOrdering,
) -> Result<()> {
    if design.d() != x.d() || design.n() != x.n() {
        return Err(Error::shape(format!(
            "design is {} x {} variables, data is {} x {}",
            design.n(),
            design.d(),
            x.n(),
            x.d()
        )));
    }
    if ordering.d() != x.d() {
        return Err(Error::InvalidOrdering {
            reason: format!("ordering covers {} variables, data has {}", ordering.d(), x.d()),
        });
    }
    Ok(())
}

fn assemble_dag_fit(
    design: &ExpandedDesign,
    x: &DataMatrix,
    ordering: &CausalOrdering,
    lambda: f64,
    outcomes: Vec<NodeOutcome>,
) -> FitResult {
    let d = design.d();
    let n = design.n();
    let mut coefficients = CoefficientSet::zeros_where(design, |t, s| ordering.precedes(s, t));
    let mut fitted = Array2::zeros((n, d));
    let mut residuals = Array2::zeros((n, d));
    let mut objective = 0.0;
    let mut kkt = 0.0f64;
    let mut sweeps = 0;
    let mut converged = true;
    let trace_len = outcomes.iter().map(|o| o.trace.len()).max().unwrap_or(1);
    let mut trace = vec![0.0; trace_len];
    for (j, outcome) in outcomes.into_iter().enumerate() {
        for (i, &k) in ordering.predecessors(j).iter().enumerate() {
            coefficients.set(j, k, outcome.beta[i].clone());
        }
        residuals.column_mut(j).assign(&outcome.residual);
        let fit_col = &x.column(j) - &outcome.residual;
        fitted.column_mut(j).assign(&fit_col);
        objective += outcome.objective;
        kkt = kkt.max(outcome.kkt);
        sweeps = sweeps.max(outcome.sweeps);
        converged &= outcome.converged;
        // Nodes converge at different sweep counts; hold each node's last
        // value so the summed trace stays comparable across sweeps.
        for (s, slot) in trace.iter_mut().enumerate() {
            *slot += outcome.trace[s.min(outcome.trace.len() - 1)];
        }
    }
    FitResult {
        coefficients,
        fitted,
        residuals,
        objective,
        objective_trace: trace,
        sweeps,
        converged,
        lambda,
        kkt,
    }
}

/// Directed edge set: `source -> target` when `||b_{target,source}|| > tol`.
pub fn parent_edges(beta: &CoefficientSet, ordering: &CausalOrdering, tol: f64) -> Graph {
    let d = beta.d();
    let mut g = Graph::directed(d);
    for j in 0..d {
        for &k in ordering.predecessors(j) {
            if beta.norm_sq(j, k).sqrt() > tol {
                g.insert(k, j).expect("indices in range");
            }
        }
    }
    g
}

/// Fits every node on its predecessors at one penalty level.
pub fn fit_dag(
    design: &ExpandedDesign,
    x: &DataMatrix,
    ordering: &CausalOrdering,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<(FitResult, Graph)> {
    check_dag_inputs(design, x, ordering)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid_param("lambda", format!("must be positive, got {lambda}")));
    }
    let outcomes: Vec<NodeOutcome> = (0..design.d())
        .into_par_iter()
        .map(|j| solve_node(design, x.column(j), j, ordering.predecessors(j), lambda, opts, None))
        .collect();
    for o in &outcomes {
        if !o.objective.is_finite() {
            return Err(Error::NonFinite {
                context: "node objective".to_string(),
            });
        }
    }
    let fit = assemble_dag_fit(design, x, ordering, lambda, outcomes);
    let graph = parent_edges(&fit.coefficients, ordering, opts.edge_tol);
    Ok((fit, graph))
}

/// Warm-started penalty path of per-node fits, scored by the same summed
/// BIC as the undirected path.
pub fn fit_dag_path(
    design: &ExpandedDesign,
    x: &DataMatrix,
    ordering: &CausalOrdering,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<PathResult> {
    check_dag_inputs(design, x, ordering)?;
    validate_grid(grid)?;
    let d = design.d();
    let mut warm: Vec<Option<Vec<Array1<f64>>>> = vec![None; d];
    let mut fits = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let outcomes: Vec<NodeOutcome> = (0..d)
            .into_par_iter()
            .map(|j| {
                solve_node(
                    design,
                    x.column(j),
                    j,
                    ordering.predecessors(j),
                    lambda,
                    opts,
                    warm[j].as_deref(),
                )
            })
            .collect();
        for (j, o) in outcomes.iter().enumerate() {
            if !o.objective.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("node {j} objective"),
                });
            }
            warm[j] = Some(o.beta.clone());
        }
        fits.push(assemble_dag_fit(design, x, ordering, lambda, outcomes));
    }
    assemble_path(grid.to_vec(), fits, true)
}
