//! Observation matrices and column standardization.
//!
//! All fitting routines operate on standardized columns (sample mean 0,
//! sample variance 1, with variance taken over `n`, not `n - 1`). Under
//! that convention every standardized column satisfies `||x||^2 = n`,
//! which the solver and tuning criteria rely on.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Variance below this is treated as a constant column.
const VARIANCE_FLOOR: f64 = 1e-30;

/// An `n x d` observation matrix with column labels.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: Array2<f64>,
    names: Vec<String>,
    standardized: bool,
    /// Column means removed by `standardize`, for mapping fits back to raw scale.
    center: Option<Array1<f64>>,
    /// Column standard deviations divided out by `standardize`.
    scale: Option<Array1<f64>>,
}

impl DataMatrix {
    /// Wraps raw observations. Requires at least two rows and one name per column.
    pub fn new(values: Array2<f64>, names: Vec<String>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::invalid_param(
                "values",
                format!("need at least 2 rows, got {}", values.nrows()),
            ));
        }
        if names.len() != values.ncols() {
            return Err(Error::shape(format!(
                "{} column names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        Ok(DataMatrix {
            values,
            names,
            standardized: false,
            center: None,
            scale: None,
        })
    }

    /// Wraps raw observations with default names `x1..xd`.
    pub fn with_default_names(values: Array2<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|j| format!("x{j}")).collect();
        DataMatrix::new(values, names)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Means removed during standardization, if any.
    pub fn center(&self) -> Option<&Array1<f64>> {
        self.center.as_ref()
    }

    /// Standard deviations divided out during standardization, if any.
    pub fn scale(&self) -> Option<&Array1<f64>> {
        self.scale.as_ref()
    }

    /// Copies the named columns (in the given order) into a new matrix,
    /// preserving the standardization flag and recorded transform.
    pub(crate) fn restrict_columns(&self, members: &[usize]) -> DataMatrix {
        let n = self.n();
        let mut values = Array2::zeros((n, members.len()));
        for (i, &v) in members.iter().enumerate() {
            values.column_mut(i).assign(&self.column(v));
        }
        let pick = |a: &Option<Array1<f64>>| {
            a.as_ref()
                .map(|arr| members.iter().map(|&v| arr[v]).collect::<Array1<f64>>())
        };
        DataMatrix {
            values,
            names: members.iter().map(|&v| self.names[v].clone()).collect(),
            standardized: self.standardized,
            center: pick(&self.center),
            scale: pick(&self.scale),
        }
    }

    /// Returns a copy whose columns have sample mean 0 and sample variance 1.
    ///
    /// Standardizing an already-standardized matrix is the identity.
    /// The removed means and divided-out standard deviations are recorded
    /// so that fitted functions can be mapped back to the raw scale.
    pub fn standardize(&self) -> Result<DataMatrix> {
        if self.standardized {
            return Ok(self.clone());
        }
        let n = self.n() as f64;
        let mut values = self.values.clone();
        let mut center = Array1::zeros(self.d());
        let mut scale = Array1::zeros(self.d());
        for (j, mut col) in values.columns_mut().into_iter().enumerate() {
            let mean = col.sum() / n;
            col.mapv_inplace(|v| v - mean);
            let var = col.iter().map(|v| v * v).sum::<f64>() / n;
            if var <= VARIANCE_FLOOR {
                return Err(Error::ConstantColumn { column: j });
            }
            let sd = var.sqrt();
            col.mapv_inplace(|v| v / sd);
            center[j] = mean;
            scale[j] = sd;
        }
        Ok(DataMatrix {
            values,
            names: self.names.clone(),
            standardized: true,
            center: Some(center),
            scale: Some(scale),
        })
    }
}
