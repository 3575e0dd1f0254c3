//! Marginal canonical-correlation screening and per-component solving.
//!
//! The marginal association of a pair is the largest sample canonical
//! correlation between the two basis expansions. Pairs at or above a
//! threshold `lambda2` form a marginal graph; the coupled solver then
//! runs independently on each connected component, with every
//! cross-component coefficient pinned at exactly zero. At `lambda2 = 0`
//! the marginal graph is complete and the decomposition reproduces the
//! full solve identically.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::basis::ExpandedDesign;
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg;
use crate::solver::{fit, objective, CoefficientSet, FitResult, SolverOptions};

/// Marginal graph, its connected components, and the association matrix.
#[derive(Debug, Clone)]
pub struct ScreenReport {
    pub marginal_graph: Graph,
    /// Component id per variable; ids are dense and ordered by each
    /// component's smallest member.
    pub components: Vec<usize>,
    /// Symmetric matrix of sample canonical correlations (diagonal unused,
    /// set to zero).
    pub rho: Array2<f64>,
    pub lambda2: f64,
}

impl ScreenReport {
    pub fn component_count(&self) -> usize {
        self.components.iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Members of each component, ascending within and across components.
    pub fn component_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.component_count()];
        for (v, &c) in self.components.iter().enumerate() {
            members[c].push(v);
        }
        members
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            let root = self.find(self.parent[v]);
            self.parent[v] = root;
        }
        self.parent[v]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Largest sample canonical correlation between the column spaces of two
/// column-centered, full-rank matrices with the same row count.
pub fn canonical_corr(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::shape(format!(
            "row counts differ: {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    if a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::invalid_param("a/b", "need at least one column"));
    }
    let qa = orthonormal_factor(a)?;
    let qb = orthonormal_factor(b)?;
    let cross = qa.transpose() * qb;
    Ok(linalg::max_singular_value(&cross).clamp(0.0, 1.0))
}

fn orthonormal_factor(m: ArrayView2<'_, f64>) -> Result<nalgebra::DMatrix<f64>> {
    let na = linalg::to_na(m);
    let sigma_min = {
        let mut scaled = na.clone();
        for mut c in scaled.column_iter_mut() {
            let norm = c.norm();
            if norm > 0.0 {
                c /= norm;
            }
        }
        linalg::min_singular_value(&scaled)
    };
    if !sigma_min.is_finite() || sigma_min < crate::basis::RANK_THRESHOLD {
        return Err(Error::RankDeficientMatrix {
            sigma_min,
            threshold: crate::basis::RANK_THRESHOLD,
        });
    }
    let (q, _) = linalg::thin_qr(&na);
    Ok(q)
}

/// Builds the marginal graph at threshold `lambda2` and its components.
///
/// The design blocks already satisfy `psi' psi / n = I`, so the canonical
/// correlation of a pair is the largest singular value of the r x r
/// cross-product `psi_kj' psi_jk / n`.
pub fn marginal_graph(design: &ExpandedDesign, lambda2: f64) -> Result<ScreenReport> {
    if !(0.0..=1.0).contains(&lambda2) {
        return Err(Error::invalid_param(
            "lambda2",
            format!("must be in [0, 1], got {lambda2}"),
        ));
    }
    let d = design.d();
    let n = design.n() as f64;
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| ((j + 1)..d).map(move |k| (j, k)))
        .collect();
    let rhos: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, k)| {
            // psi_kj spans functions of x_j, psi_jk functions of x_k.
            let basis_j = design.block(k, j).psi();
            let basis_k = design.block(j, k).psi();
            if basis_j.ncols() == 0 || basis_k.ncols() == 0 {
                return 0.0;
            }
            let cross = basis_j.t().dot(basis_k) / n;
            linalg::max_singular_value(&linalg::to_na(cross.view())).clamp(0.0, 1.0)
        })
        .collect();
    let mut rho = Array2::zeros((d, d));
    let mut graph = Graph::undirected(d);
    let mut uf = UnionFind::new(d);
    for (&(j, k), &val) in pairs.iter().zip(&rhos) {
        rho[[j, k]] = val;
        rho[[k, j]] = val;
        if val >= lambda2 {
            graph.insert(j, k).expect("indices in range");
            uf.union(j, k);
        }
    }
    // Dense component ids ordered by smallest member.
    let mut ids = vec![usize::MAX; d];
    let mut next = 0;
    let mut components = vec![0; d];
    for v in 0..d {
        let root = uf.find(v);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        components[v] = ids[root];
    }
    Ok(ScreenReport {
        marginal_graph: graph,
        components,
        rho,
        lambda2,
    })
}

/// Screened solve: the coupled problem restricted to within-component
/// pairs, solved independently per component. Cross-component
/// coefficients are exactly zero. With `lambda2 = 0` the result is
/// identical to the unscreened fit.
pub fn fit_screened(
    design: &ExpandedDesign,
    x: &DataMatrix,
    lambda: f64,
    lambda2: f64,
    opts: &SolverOptions,
) -> Result<(FitResult, ScreenReport)> {
    if design.d() != x.d() || design.n() != x.n() {
        return Err(Error::shape(format!(
            "design is {} x {} variables, data is {} x {}",
            design.n(),
            design.d(),
            x.n(),
            x.d()
        )));
    }
    let report = marginal_graph(design, lambda2)?;
    let members = report.component_members();
    let solves: Vec<Result<Option<FitResult>>> = members
        .par_iter()
        .map(|vars| {
            if vars.len() < 2 {
                return Ok(None);
            }
            let sub_design = design.restrict(vars);
            let sub_x = x.restrict_columns(vars);
            fit(&sub_design, &sub_x, lambda, opts).map(Some)
        })
        .collect();

    let n = x.n();
    let d = x.d();
    let mut coefficients = CoefficientSet::zeros(design);
    let mut fitted = Array2::zeros((n, d));
    let mut sweeps = 0;
    let mut converged = true;
    let mut kkt = 0.0f64;
    let mut trace_len = 1;
    let mut traces: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for (vars, solve) in members.iter().zip(solves) {
        let Some(sub) = solve? else {
            continue;
        };
        for (a, &va) in vars.iter().enumerate() {
            for (b, &vb) in vars.iter().enumerate() {
                if a == b {
                    continue;
                }
                coefficients.set(va, vb, sub.coefficients.get(a, b).to_owned());
            }
            fitted.column_mut(va).assign(&sub.fitted.column(a));
        }
        sweeps = sweeps.max(sub.sweeps);
        converged &= sub.converged;
        kkt = kkt.max(sub.kkt);
        trace_len = trace_len.max(sub.objective_trace.len());
        traces.push((vars.clone(), sub.objective_trace));
    }
    let residuals = x.values() - &fitted;
    let objective = objective(design, x, &coefficients, lambda)?;
    // Summed per-component traces, holding finished components at their
    // final value; singleton components contribute a constant loss term.
    let singleton_loss: f64 = members
        .iter()
        .filter(|vars| vars.len() < 2)
        .flat_map(|vars| vars.iter())
        .map(|&v| x.column(v).iter().map(|u| u * u).sum::<f64>() / (2.0 * n as f64))
        .sum();
    let mut trace = vec![singleton_loss; trace_len];
    for (_, t) in &traces {
        for (s, slot) in trace.iter_mut().enumerate() {
            *slot += t[s.min(t.len() - 1)];
        }
    }
    let fit_result = FitResult {
        coefficients,
        fitted,
        residuals,
        objective,
        objective_trace: trace,
        sweeps,
        converged,
        lambda,
        kkt,
    };
    Ok((fit_result, report))
}
