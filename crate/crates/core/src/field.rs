//! State-dependent coefficients x ↦ scalar, vector or matrix.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// x ↦ f(x) ∈ ℝ.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<ScalarFn>,
    label: String,
    constant: Option<f64>,
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField {
            f: Arc::new(move |_| c),
            label: format!("{c}"),
            constant: Some(c),
        }
    }

    pub fn from_expr(e: Expr) -> Self {
        let label = e.source().to_string();
        let constant = e.is_constant().then(|| e.eval(&[]));
        ScalarField {
            f: Arc::new(move |x| e.eval(x)),
            label,
            constant,
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::from_expr(Expr::parse(src)?))
    }

    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            f: Arc::new(f),
            label: label.into(),
            constant: None,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

/// x ↦ v(x) ∈ ℝ^n.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(comps: Vec<ScalarField>) -> Self {
        VectorField { comps }
    }

    pub fn zero(n: usize) -> Self {
        VectorField {
            comps: vec![ScalarField::constant(0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.as_constant() == Some(0.0))
    }
}

/// x ↦ M(x) ∈ ℝ^{rows×cols}, entries stored row-major.
#[derive(Clone, Debug)]
pub struct MatrixField {
    rows: usize,
    cols: usize,
    entries: Vec<ScalarField>,
}

impl MatrixField {
    pub fn new(rows: usize, cols: usize, entries: Vec<ScalarField>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::Dimension {
                context: "matrix field entries",
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(MatrixField {
            rows,
            cols,
            entries,
        })
    }

    /// s(x)·I_n.
    pub fn scalar(n: usize, s: ScalarField) -> Self {
        let zero = ScalarField::constant(0.0);
        let entries = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    s.clone()
                } else {
                    zero.clone()
                }
            })
            .collect();
        MatrixField {
            rows: n,
            cols: n,
            entries,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, ScalarField::constant(1.0))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.entries.iter().map(|e| e.eval(x)))
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }
}
