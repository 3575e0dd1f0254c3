//! Per-pair polynomial basis expansion.
//!
//! Each additive component f(source) is modeled on a matrix of powers of
//! the source column, centered and then orthonormalized so that
//! `psi' psi / n = I`. That convention turns every block regression in the
//! solvers into a plain matrix-vector product.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Rank threshold on the smallest singular value of the centered,
/// column-scaled raw basis.
pub const RANK_THRESHOLD: f64 = 1e-10;

/// Ordered set of positive integer polynomial powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    degrees: Vec<u32>,
}

impl BasisSpec {
    /// Degrees must be nonempty, strictly increasing and at least 1.
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::invalid_param("degrees", "must be nonempty"));
        }
        if degrees[0] < 1 {
            return Err(Error::invalid_param("degrees", "powers must be >= 1"));
        }
        if degrees.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid_param("degrees", "powers must be strictly increasing"));
        }
        Ok(BasisSpec { degrees })
    }

    /// Linear basis {1}.
    pub fn linear() -> Self {
        BasisSpec { degrees: vec![1] }
    }

    /// Cubic polynomial basis {1, 2, 3}.
    pub fn cubic() -> Self {
        BasisSpec { degrees: vec![1, 2, 3] }
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Number of basis functions.
    pub fn r(&self) -> usize {
        self.degrees.len()
    }
}

/// What to do when the centered raw basis for some column is numerically
/// rank deficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankPolicy {
    /// Fail with `RankDeficient`.
    Strict,
    /// Drop dependent columns, reducing r for that pair.
    DropColumns,
}

/// Centered, orthonormalized basis for one regressor column.
#[derive(Debug)]
pub struct BasisBlock {
    psi: Array2<f64>,
    transform: Array2<f64>,
    col_means: Array1<f64>,
    degrees: Vec<u32>,
}

impl BasisBlock {
    /// The n x r orthonormalized basis matrix (`psi' psi / n = I`).
    pub fn psi(&self) -> &Array2<f64> {
        &self.psi
    }

    /// Change of basis T with `psi = centered_raw . T`.
    pub fn transform(&self) -> &Array2<f64> {
        &self.transform
    }

    /// Means removed from the raw power columns.
    pub fn col_means(&self) -> &Array1<f64> {
        &self.col_means
    }

    /// Powers retained for this column (may be fewer than requested under
    /// `RankPolicy::DropColumns`).
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn r(&self) -> usize {
        self.psi.ncols()
    }

    /// Maps orthonormal-basis coefficients back to coefficients on the
    /// centered raw power columns.
    pub fn raw_coefficients(&self, coef: &Array1<f64>) -> Array1<f64> {
        self.transform.dot(coef)
    }
}

/// The collection of per-pair basis matrices.
///
/// Under the polynomial construction the basis for pair (target, source)
/// depends only on the source column, so blocks are stored once per column
/// and shared; the accessor is still indexed by the ordered pair so that
/// pair-specific bases remain possible.
#[derive(Debug, Clone)]
pub struct ExpandedDesign {
    n: usize,
    d: usize,
    nominal_r: usize,
    blocks: Vec<Arc<BasisBlock>>,
}

impl ExpandedDesign {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The requested number of basis functions (pairs may carry fewer
    /// under `RankPolicy::DropColumns`).
    pub fn nominal_r(&self) -> usize {
        self.nominal_r
    }

    /// Basis for the ordered pair (target, source).
    pub fn block(&self, target: usize, source: usize) -> &BasisBlock {
        debug_assert!(target != source, "no basis for a variable on itself");
        let _ = target;
        &self.blocks[source]
    }

    /// Number of basis functions for the ordered pair (target, source).
    pub fn r(&self, target: usize, source: usize) -> usize {
        self.block(target, source).r()
    }

    /// Restriction of the design to a subset of the variables, in the
    /// given order. Blocks are shared, not copied.
    pub fn restrict(&self, members: &[usize]) -> ExpandedDesign {
        ExpandedDesign {
            n: self.n,
            d: members.len(),
            nominal_r: self.nominal_r,
            blocks: members.iter().map(|&v| Arc::clone(&self.blocks[v])).collect(),
        }
    }
}

/// Builds the centered, orthonormalized basis for every ordered pair.
///
/// Requires n > r so each block can have full column rank.
pub fn expand(x: &DataMatrix, spec: &BasisSpec, policy: RankPolicy) -> Result<ExpandedDesign> {
    let n = x.n();
    let d = x.d();
    if n <= spec.r() {
        return Err(Error::invalid_param(
            "spec",
            format!("need n > r, got n = {n}, r = {}", spec.r()),
        ));
    }
    let mut blocks = Vec::with_capacity(d);
    for source in 0..d {
        let block = build_block(x, source, spec, policy)?;
        blocks.push(Arc::new(block));
    }
    Ok(ExpandedDesign {
        n,
        d,
        nominal_r: spec.r(),
        blocks,
    })
}

fn build_block(x: &DataMatrix, source: usize, spec: &BasisSpec, policy: RankPolicy) -> Result<BasisBlock> {
    let n = x.n();
    let col = x.column(source);
    let mut degrees: Vec<u32> = spec.degrees().to_vec();
    loop {
        let r = degrees.len();
        if r == 0 {
            // Every power degenerated; the pair can never carry an edge.
            return Ok(BasisBlock {
                psi: Array2::zeros((n, 0)),
                transform: Array2::zeros((0, 0)),
                col_means: Array1::zeros(0),
                degrees,
            });
        }
        let mut raw = Array2::zeros((n, r));
        let mut means = Array1::zeros(r);
        for (t, &p) in degrees.iter().enumerate() {
            let mut c: Array1<f64> = col.mapv(|v| v.powi(p as i32));
            let mean = c.sum() / n as f64;
            c.mapv_inplace(|v| v - mean);
            raw.column_mut(t).assign(&c);
            means[t] = mean;
        }
        match orthonormalize(&raw) {
            Ok((psi, transform)) => {
                return Ok(BasisBlock {
                    psi,
                    transform,
                    col_means: means,
                    degrees,
                });
            }
            Err(Error::RankDeficientMatrix { .. }) => match policy {
                RankPolicy::Strict => {
                    // Target index is irrelevant to the failure; report the
                    // lowest ordered pair this block serves.
                    let target = if source == 0 { 1 } else { 0 };
                    return Err(Error::RankDeficient { target, regressor: source });
                }
                RankPolicy::DropColumns => {
                    let drop = most_dependent_column(&raw);
                    degrees.remove(drop);
                }
            },
            Err(e) => return Err(e),
        }
    }
}

/// Index of the column contributing most to the smallest singular
/// direction of the column-scaled matrix; ties break toward the highest
/// power so low-order terms survive.
fn most_dependent_column(raw: &Array2<f64>) -> usize {
    let scaled = scale_columns(raw);
    // Columns that vanish entirely are dropped first.
    for j in (0..raw.ncols()).rev() {
        if scaled.column(j).iter().all(|v| *v == 0.0) {
            return j;
        }
    }
    let m = linalg::to_na(scaled.view());
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("svd with v requested");
    let sv = &svd.singular_values;
    let mut min_idx = 0;
    for i in 1..sv.len() {
        if sv[i] < sv[min_idx] {
            min_idx = i;
        }
    }
    let mut best = 0;
    let mut best_mag = -1.0;
    for j in 0..raw.ncols() {
        let mag = v_t[(min_idx, j)].abs();
        if mag >= best_mag {
            best_mag = mag;
            best = j;
        }
    }
    best
}

fn scale_columns(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut c in out.columns_mut() {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            c.mapv_inplace(|v| v / norm);
        }
    }
    out
}

/// An n x r matrix of centered powers of one column: the raw material the
/// design orthonormalizes per pair.
pub fn centered_powers(column: &Array1<f64>, degrees: &[u32]) -> Array2<f64> {
    let n = column.len();
    let mut out = Array2::zeros((n, degrees.len()));
    for (t, &p) in degrees.iter().enumerate() {
        let mut c = column.mapv(|v| v.powi(p as i32));
        let mean = c.sum() / n as f64;
        c.mapv_inplace(|v| v - mean);
        out.column_mut(t).assign(&c);
    }
    out
}

/// Orthonormalizes `m` so that `q' q / n = I`, returning `(q, t)` with
/// `q = m . t`.
///
/// Rank is checked on the centered, column-scaled copy of `m`; the
/// smallest singular value must reach `RANK_THRESHOLD`.
pub fn orthonormalize(m: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = m.nrows();
    let r = m.ncols();
    if r == 0 || n <= r {
        return Err(Error::invalid_param(
            "m",
            format!("need n > r >= 1, got shape {n} x {r}"),
        ));
    }
    let mut centered = m.clone();
    for mut c in centered.columns_mut() {
        let mean = c.sum() / n as f64;
        c.mapv_inplace(|v| v - mean);
    }
    let scaled = scale_columns(&centered);
    let sigma_min = linalg::min_singular_value(&linalg::to_na(scaled.view()));
    if !sigma_min.is_finite() || sigma_min < RANK_THRESHOLD {
        return Err(Error::RankDeficientMatrix {
            sigma_min,
            threshold: RANK_THRESHOLD,
        });
    }
    let (q, rr) = linalg::thin_qr(&linalg::to_na(m.view()));
    let sqrt_n = (n as f64).sqrt();
    let psi = linalg::to_nd(&(&q * sqrt_n));
    let transform = linalg::to_nd(&(linalg::upper_triangular_inverse(&rr) * sqrt_n));
    Ok((psi, transform))
}
