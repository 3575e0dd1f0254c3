//! Shared test support: independent reference solvers and statistics
//! helpers. The proximal-gradient oracles evaluate gradients through
//! explicit Gram systems and apply textbook group proximal steps; they
//! share no code with the block-coordinate-descent implementation they
//! check.

#![allow(dead_code)]

use addgraph::sim::{gen_coeffs, random_dag, sample, DagSpec, Scheme};
use addgraph::{CoefficientSet, DataMatrix, ExpandedDesign};
use ndarray::{Array1, Array2};

/// Simulated dataset: random DAG, structural-equation draw, standardized.
pub fn sim_dataset(d: usize, m: usize, n: usize, scheme: Scheme, seed: u64) -> (DagSpec, DataMatrix) {
    let mut spec = random_dag(d, m, seed).expect("valid dag size");
    gen_coeffs(&mut spec, scheme);
    let x = sample(&spec, n).expect("sampling succeeds");
    (spec, x.standardize().expect("nondegenerate columns"))
}

fn power_iteration_lmax(g: &Array2<f64>) -> f64 {
    let w = g.nrows();
    if w == 0 {
        return 0.0;
    }
    let mut v = Array1::from_elem(w, (w as f64).powf(-0.5));
    let mut lmax = 0.0;
    for _ in 0..300 {
        let gv = g.dot(&v);
        let norm = gv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lmax = norm;
        v = gv / norm;
    }
    lmax
}

struct TargetSystem {
    /// Concatenated basis for one response column.
    psi: Array2<f64>,
    gram: Array2<f64>,
    lin: Array1<f64>,
    constant: f64,
    /// Source variable and (offset, len) of each block in the flat vector.
    layout: Vec<(usize, usize, usize)>,
}

fn build_target_system(
    design: &ExpandedDesign,
    x: &DataMatrix,
    target: usize,
    sources: &[usize],
) -> TargetSystem {
    let n = design.n();
    let nf = n as f64;
    let mut layout = Vec::new();
    let mut width = 0;
    for &s in sources {
        let r = design.r(target, s);
        layout.push((s, width, r));
        width += r;
    }
    let mut psi = Array2::zeros((n, width));
    for &(s, off, r) in &layout {
        let block = design.block(target, s).psi();
        for c in 0..r {
            psi.column_mut(off + c).assign(&block.column(c));
        }
    }
    let gram = psi.t().dot(&psi) / nf;
    let lin = psi.t().dot(&x.column(target)) / nf;
    let constant = x.column(target).iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
    TargetSystem {
        psi,
        gram,
        lin,
        constant,
        layout,
    }
}

fn smooth_value(sys: &TargetSystem, beta: &Array1<f64>) -> f64 {
    0.5 * beta.dot(&sys.gram.dot(beta)) - sys.lin.dot(beta) + sys.constant
}

fn smooth_grad(sys: &TargetSystem, beta: &Array1<f64>) -> Array1<f64> {
    sys.gram.dot(beta) - &sys.lin
}

/// Proximal-gradient (FISTA with monotone restart) solution of the
/// coupled objective. Returns the coefficients and the objective
/// evaluated by explicit residual and fitted-norm products.
pub fn prox_oracle_coupled(
    design: &ExpandedDesign,
    x: &DataMatrix,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> (CoefficientSet, f64) {
    let d = design.d();
    let nf = design.n() as f64;
    let systems: Vec<TargetSystem> = (0..d)
        .map(|t| {
            let sources: Vec<usize> = (0..d).filter(|&s| s != t).collect();
            build_target_system(design, x, t, &sources)
        })
        .collect();
    let lip = systems
        .iter()
        .map(|s| power_iteration_lmax(&s.gram))
        .fold(0.0f64, f64::max)
        * 1.01
        + 1e-12;
    let offset_of = |t: usize, s: usize| -> (usize, usize) {
        let (_, off, r) = *systems[t]
            .layout
            .iter()
            .find(|&&(src, _, _)| src == s)
            .expect("source present");
        (off, r)
    };
    let group_weight = lambda * nf.sqrt();
    let objective = |betas: &[Array1<f64>]| -> f64 {
        let mut val = 0.0;
        for (t, sys) in systems.iter().enumerate() {
            val += smooth_value(sys, &betas[t]);
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let (oj, rj) = offset_of(j, k);
                let (ok, rk) = offset_of(k, j);
                let mut sq = 0.0;
                for c in 0..rj {
                    sq += betas[j][oj + c] * betas[j][oj + c];
                }
                for c in 0..rk {
                    sq += betas[k][ok + c] * betas[k][ok + c];
                }
                val += group_weight * sq.sqrt();
            }
        }
        val
    };
    let prox = |z: &mut [Array1<f64>], step: f64| {
        for j in 0..d {
            for k in (j + 1)..d {
                let (oj, rj) = offset_of(j, k);
                let (ok, rk) = offset_of(k, j);
                let mut sq = 0.0;
                for c in 0..rj {
                    sq += z[j][oj + c] * z[j][oj + c];
                }
                for c in 0..rk {
                    sq += z[k][ok + c] * z[k][ok + c];
                }
                let norm = sq.sqrt();
                let factor = if norm > step * group_weight {
                    1.0 - step * group_weight / norm
                } else {
                    0.0
                };
                for c in 0..rj {
                    z[j][oj + c] *= factor;
                }
                for c in 0..rk {
                    z[k][ok + c] *= factor;
                }
            }
        }
    };

    let mut beta: Vec<Array1<f64>> = systems
        .iter()
        .map(|s| Array1::zeros(s.psi.ncols()))
        .collect();
    let mut beta_prev = beta.clone();
    let mut obj = objective(&beta);
    let step = 1.0 / lip;
    let mut t_cur = 1.0f64;
    let mut momentum = 0.0f64;
    for _ in 0..max_iter {
        let mut y: Vec<Array1<f64>> = beta
            .iter()
            .zip(&beta_prev)
            .map(|(b, p)| b + &((b - p) * momentum))
            .collect();
        for (t, sys) in systems.iter().enumerate() {
            let g = smooth_grad(sys, &y[t]);
            y[t] -= &(g * step);
        }
        prox(&mut y, step);
        let new_obj = objective(&y);
        if new_obj > obj {
            // Momentum overshot: restart from the last iterate.
            t_cur = 1.0;
            momentum = 0.0;
            beta_prev = beta.clone();
            continue;
        }
        let max_change = y
            .iter()
            .zip(&beta)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
            .fold(0.0f64, f64::max);
        beta_prev = std::mem::replace(&mut beta, y);
        let done = max_change < tol && (obj - new_obj).abs() < 1e-14 * obj.abs().max(1.0);
        obj = new_obj;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_cur * t_cur).sqrt());
        momentum = (t_cur - 1.0) / t_next;
        t_cur = t_next;
        if done {
            break;
        }
    }

    let mut coef = CoefficientSet::zeros(design);
    for t in 0..d {
        for &(s, off, r) in &systems[t].layout {
            let mut b = Array1::zeros(r);
            for c in 0..r {
                b[c] = beta[t][off + c];
            }
            coef.set(t, s, b);
        }
    }
    let final_obj = explicit_objective(design, x, &coef, lambda);
    (coef, final_obj)
}

/// Objective recomputed term by term with explicit residual and fitted
/// norms (no orthonormality shortcut).
pub fn explicit_objective(
    design: &ExpandedDesign,
    x: &DataMatrix,
    coef: &CoefficientSet,
    lambda: f64,
) -> f64 {
    let d = design.d();
    let nf = design.n() as f64;
    let mut loss = 0.0;
    for t in 0..d {
        let mut resid = x.column(t).to_owned();
        for s in 0..d {
            if s == t || coef.get(t, s).len() == 0 {
                continue;
            }
            resid -= &design.block(t, s).psi().dot(&coef.get(t, s));
        }
        loss += resid.iter().map(|v| v * v).sum::<f64>();
    }
    loss /= 2.0 * nf;
    let mut penalty = 0.0;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sq = 0.0;
            for (t, s) in [(j, k), (k, j)] {
                if coef.get(t, s).len() == 0 {
                    continue;
                }
                let f = design.block(t, s).psi().dot(&coef.get(t, s));
                sq += f.iter().map(|v| v * v).sum::<f64>();
            }
            penalty += sq.sqrt();
        }
    }
    loss + lambda * penalty
}

/// Proximal-gradient reference for one node's group-lasso regression on
/// its predecessors (uncoupled per-block penalty).
pub fn prox_oracle_node(
    design: &ExpandedDesign,
    x: &DataMatrix,
    node: usize,
    preds: &[usize],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> (Vec<Array1<f64>>, f64) {
    let nf = design.n() as f64;
    if preds.is_empty() {
        let loss = x.column(node).iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
        return (Vec::new(), loss);
    }
    let sys = build_target_system(design, x, node, preds);
    let lip = power_iteration_lmax(&sys.gram) * 1.01 + 1e-12;
    let step = 1.0 / lip;
    let group_weight = lambda * nf.sqrt();
    let penalty = |b: &Array1<f64>| -> f64 {
        sys.layout
            .iter()
            .map(|&(_, off, r)| {
                (0..r).map(|c| b[off + c] * b[off + c]).sum::<f64>().sqrt()
            })
            .sum::<f64>()
            * group_weight
    };
    let mut beta: Array1<f64> = Array1::zeros(sys.psi.ncols());
    let mut beta_prev = beta.clone();
    let mut obj = smooth_value(&sys, &beta) + penalty(&beta);
    let mut t_cur = 1.0f64;
    let mut momentum = 0.0f64;
    for _ in 0..max_iter {
        let mut y = &beta + &((&beta - &beta_prev) * momentum);
        let g = smooth_grad(&sys, &y);
        y -= &(g * step);
        for &(_, off, r) in &sys.layout {
            let norm = (0..r).map(|c| y[off + c] * y[off + c]).sum::<f64>().sqrt();
            let factor = if norm > step * group_weight {
                1.0 - step * group_weight / norm
            } else {
                0.0
            };
            for c in 0..r {
                y[off + c] *= factor;
            }
        }
        let new_obj = smooth_value(&sys, &y) + penalty(&y);
        if new_obj > obj {
            t_cur = 1.0;
            momentum = 0.0;
            beta_prev = beta.clone();
            continue;
        }
        let max_change = y
            .iter()
            .zip(beta.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        beta_prev = std::mem::replace(&mut beta, y);
        let done = max_change < tol && (obj - new_obj).abs() < 1e-14 * obj.abs().max(1.0);
        obj = new_obj;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_cur * t_cur).sqrt());
        momentum = (t_cur - 1.0) / t_next;
        t_cur = t_next;
        if done {
            break;
        }
    }
    let blocks: Vec<Array1<f64>> = sys
        .layout
        .iter()
        .map(|&(_, off, r)| {
            let mut b = Array1::zeros(r);
            for c in 0..r {
                b[c] = beta[off + c];
            }
            b
        })
        .collect();
    // Explicit objective.
    let mut resid = x.column(node).to_owned();
    for (i, &(s, _, _)) in sys.layout.iter().enumerate() {
        resid -= &design.block(node, s).psi().dot(&blocks[i]);
    }
    let loss = resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
    let pen: f64 = sys
        .layout
        .iter()
        .enumerate()
        .map(|(i, &(s, _, _))| {
            let f = design.block(node, s).psi().dot(&blocks[i]);
            f.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .sum::<f64>()
        * lambda;
    (blocks, loss + pen)
}

/// Definition-based moralization: undirected edge when a directed edge
/// exists in either direction or the two vertices share a child.
pub fn brute_force_moralize(spec: &DagSpec) -> Vec<(usize, usize)> {
    let d = spec.d;
    let mut adj = vec![vec![false; d]; d];
    for &(src, dst) in &spec.edges {
        adj[src][dst] = true;
    }
    let mut edges = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            let direct = adj[a][b] || adj[b][a];
            let shared_child = (0..d).any(|c| adj[a][c] && adj[b][c]);
            if direct || shared_child {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// One-sided sign-test p-value: P(X >= positives) for X ~ Bin(trials, 1/2).
pub fn sign_test_p(positives: usize, trials: usize) -> f64 {
    let mut p = 0.0;
    for k in positives..=trials {
        p += binomial(trials, k);
    }
    p / 2.0f64.powi(trials as i32)
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut num = 1.0f64;
    for i in 0..k {
        num = num * (n - i) as f64 / (i + 1) as f64;
    }
    num
}

/// Jarque-Bera statistic of one sample.
pub fn jarque_bera(sample: &Array1<f64>) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.sum() / n;
    let m2 = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = sample.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = sample.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let excess = m4 / (m2 * m2) - 3.0;
    n / 6.0 * (skew * skew + excess * excess / 4.0)
}

/// 0.999 quantile of the chi-squared distribution with 2 degrees of
/// freedom: -2 ln(0.001).
pub const CHI2_2_Q999: f64 = 13.815510557964274;

/// t statistic of the cubic coefficient in an OLS fit of y on
/// (1, x, x^2, x^3).
pub fn cubic_term_t_stat(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let n = x.len();
    let mut design = nalgebra::DMatrix::zeros(n, 4);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = x[i];
        design[(i, 2)] = x[i] * x[i];
        design[(i, 3)] = x[i] * x[i] * x[i];
    }
    let yv = nalgebra::DVector::from_fn(n, |i, _| y[i]);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * &yv;
    let xtx_inv = xtx.try_inverse().expect("well conditioned");
    let coef = &xtx_inv * xty;
    let resid = &yv - design * &coef;
    let dof = (n - 4) as f64;
    let sigma2 = resid.norm_squared() / dof;
    let se = (sigma2 * xtx_inv[(3, 3)]).sqrt();
    coef[3] / se
}
