//! Symmetric bilinear forms on a tangent space, stored in an orthonormal frame.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, Point, TangentVector};

/// `H(e_i, e_j)` for an orthonormal frame `e` at `base` (chart components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianForm {
    pub base: Point,
    pub matrix: DMatrix<f64>,
    pub frame: Vec<DVector<f64>>,
}

impl HessianForm {
    pub fn new(base: Point, matrix: DMatrix<f64>, frame: Vec<DVector<f64>>) -> Self {
        Self { base, matrix, frame }
    }

    /// Zero form in the canonical frame at `base`.
    pub fn zeros(model: &ManifoldModel, base: &Point) -> Self {
        let n = model.dim();
        Self::new(base.clone(), DMatrix::zeros(n, n), model.orthonormal_frame(base))
    }

    /// `s * identity` in the canonical frame at `base`.
    pub fn scaled_identity(model: &ManifoldModel, base: &Point, s: f64) -> Self {
        let n = model.dim();
        Self::new(base.clone(), DMatrix::identity(n, n) * s, model.orthonormal_frame(base))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `max |λ|`, the sup of `|H(v, v)|` over unit `v`.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Frame components of `v`.
    pub fn components(&self, model: &ManifoldModel, v: &TangentVector) -> Result<DVector<f64>> {
        let v = model.align(&self.base, v)?;
        Ok(DVector::from_iterator(
            self.frame.len(),
            self.frame.iter().map(|e| model.inner(&self.base, &v.components, e)),
        ))
    }

    /// `H(v, v)`.
    pub fn quadratic(&self, model: &ManifoldModel, v: &TangentVector) -> Result<f64> {
        let c = self.components(model, v)?;
        Ok((&self.matrix * &c).dot(&c))
    }

    /// Adds `other` (which must share the base point and frame).
    pub fn add_assign(&mut self, other: &HessianForm) -> Result<()> {
        if self.matrix.shape() != other.matrix.shape() {
            return Err(Error::BaseMismatch);
        }
        let same_frame = self
            .frame
            .iter()
            .zip(&other.frame)
            .all(|(a, b)| (a - b).amax() <= 1e-12 * (1.0 + a.amax()));
        if self.base.chart != other.base.chart || (&self.base.coords - &other.base.coords).amax() > 1e-12 || !same_frame {
            return Err(Error::BaseMismatch);
        }
        self.matrix += &other.matrix;
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.matrix *= s;
    }
}
