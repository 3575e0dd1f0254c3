//! Scoring estimated graphs against ground truth.

use serde::Serialize;

use crate::dag::{parent_edges, CausalOrdering};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::path::PathResult;
use crate::solver::edge_set;

/// Pairwise confusion counts.
///
/// The universe is the d(d-1)/2 unordered pairs; `tn` is the remainder
/// after tp, fp and fn, so the counts always sum to the universe. For
/// directed graphs that do not share an ordering, a pair estimated in the
/// wrong direction counts as one fp and one fn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

/// Compares an estimated graph against the truth. Both must have the same
/// vertex count and directedness.
pub fn confusion(est: &Graph, truth: &Graph) -> Result<Confusion> {
    if est.d() != truth.d() {
        return Err(Error::DimensionMismatch {
            context: format!("estimate has {} vertices, truth {}", est.d(), truth.d()),
        });
    }
    if est.is_directed() != truth.is_directed() {
        return Err(Error::DimensionMismatch {
            context: "estimate and truth differ in directedness".to_string(),
        });
    }
    let tp = est.intersection_len(truth);
    let fp = est.len() - tp;
    let fn_ = truth.len() - tp;
    let universe = est.d() * (est.d().saturating_sub(1)) / 2;
    let tn = universe - tp - fp - fn_;
    Ok(Confusion { tp, fp, fn_, tn })
}

/// One penalty level of a recovery curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RocRow {
    pub lambda: f64,
    pub tp: usize,
    pub fp: usize,
    pub edges: usize,
    pub bic_total: f64,
}

/// Correct-vs-incorrect edge counts along a penalty path.
#[derive(Debug, Clone)]
pub struct RocTable {
    pub rows: Vec<RocRow>,
}

/// Scores every fit of a path against the truth. Directed paths require a
/// directed truth plus the ordering used for the fit.
pub fn roc_table(
    path: &PathResult,
    truth: &Graph,
    ordering: Option<&CausalOrdering>,
    edge_tol: f64,
) -> Result<RocTable> {
    if path.directed != truth.is_directed() {
        return Err(Error::DimensionMismatch {
            context: "path and truth differ in directedness".to_string(),
        });
    }
    let mut rows = Vec::with_capacity(path.fits.len());
    for (i, fit) in path.fits.iter().enumerate() {
        let est = if path.directed {
            let ordering = ordering.ok_or_else(|| Error::InvalidOrdering {
                reason: "directed roc table needs the causal ordering".to_string(),
            })?;
            parent_edges(&fit.coefficients, ordering, edge_tol)
        } else {
            edge_set(&fit.coefficients, edge_tol)
        };
        let c = confusion(&est, truth)?;
        rows.push(RocRow {
            lambda: path.lambdas[i],
            tp: c.tp,
            fp: c.fp,
            edges: est.len(),
            bic_total: path.bic_total[i],
        });
    }
    Ok(RocTable { rows })
}

/// Replicate-averaged recovery curve, aggregated by penalty-grid index.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AveragedRocRow {
    pub lambda_index: usize,
    pub lambda_mean: f64,
    pub tp_mean: f64,
    pub fp_mean: f64,
    pub edges_mean: f64,
}

/// Averages tp and fp pointwise per penalty index. Every replicate must
/// use a grid of the same length (each anchored at its own lambda_max).
pub fn average_by_index(tables: &[RocTable]) -> Result<Vec<AveragedRocRow>> {
    if tables.is_empty() {
        return Err(Error::invalid_param("tables", "need at least one table"));
    }
    let len = tables[0].rows.len();
    if tables.iter().any(|t| t.rows.len() != len) {
        return Err(Error::shape("replicate tables have different lengths".to_string()));
    }
    let m = tables.len() as f64;
    Ok((0..len)
        .map(|i| AveragedRocRow {
            lambda_index: i,
            lambda_mean: tables.iter().map(|t| t.rows[i].lambda).sum::<f64>() / m,
            tp_mean: tables.iter().map(|t| t.rows[i].tp as f64).sum::<f64>() / m,
            fp_mean: tables.iter().map(|t| t.rows[i].fp as f64).sum::<f64>() / m,
            edges_mean: tables.iter().map(|t| t.rows[i].edges as f64).sum::<f64>() / m,
        })
        .collect())
}

/// Linear interpolation of tp at a target fp, walking the path from
/// sparse to dense. Returns None when the curve never reaches the target.
pub fn tp_at_fp(fps: &[f64], tps: &[f64], target_fp: f64) -> Option<f64> {
    debug_assert_eq!(fps.len(), tps.len());
    let mut prev: Option<(f64, f64)> = None;
    for (&fp, &tp) in fps.iter().zip(tps) {
        if fp >= target_fp {
            return Some(match prev {
                Some((fp0, tp0)) if fp > fp0 => {
                    tp0 + (tp - tp0) * (target_fp - fp0) / (fp - fp0)
                }
                _ => tp,
            });
        }
        prev = Some((fp, tp));
    }
    None
}

/// Averages replicate curves on a common fp grid (interpolated
/// aggregation, for plotting). Replicates that never reach an fp value
/// are skipped at that value.
pub fn average_by_fp(tables: &[RocTable], fp_grid: &[f64]) -> Vec<(f64, f64)> {
    fp_grid
        .iter()
        .filter_map(|&target| {
            let samples: Vec<f64> = tables
                .iter()
                .filter_map(|t| {
                    let fps: Vec<f64> = t.rows.iter().map(|r| r.fp as f64).collect();
                    let tps: Vec<f64> = t.rows.iter().map(|r| r.tp as f64).collect();
                    tp_at_fp(&fps, &tps, target)
                })
                .collect();
            if samples.is_empty() {
                None
            } else {
                Some((target, samples.iter().sum::<f64>() / samples.len() as f64))
            }
        })
        .collect()
}

/// Minimal SVG line plot of tp versus fp for an averaged curve.
pub fn roc_svg(rows: &[AveragedRocRow]) -> String {
    let width = 640.0;
    let height = 480.0;
    let margin = 50.0;
    let max_fp = rows.iter().map(|r| r.fp_mean).fold(1.0f64, f64::max);
    let max_tp = rows.iter().map(|r| r.tp_mean).fold(1.0f64, f64::max);
    let sx = |fp: f64| margin + (width - 2.0 * margin) * fp / max_fp;
    let sy = |tp: f64| height - margin - (height - 2.0 * margin) * tp / max_tp;
    let points: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2},{:.2}", sx(r.fp_mean), sy(r.tp_mean)))
        .collect();
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<line x1=\"{m}\" y1=\"{ybase}\" x2=\"{xend}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{ybase}\" stroke=\"black\"/>\n",
            "<text x=\"{xmid}\" y=\"{h_label}\" text-anchor=\"middle\" font-size=\"13\">incorrect edges</text>\n",
            "<text x=\"14\" y=\"{ymid}\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 {ymid})\">correct edges</text>\n",
            "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = width,
        h = height,
        m = margin,
        ybase = height - margin,
        xend = width - margin,
        xmid = width / 2.0,
        ymid = height / 2.0,
        h_label = height - 12.0,
        pts = points.join(" ")
    )
}
