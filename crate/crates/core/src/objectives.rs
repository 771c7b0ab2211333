//! Data-fit functionals `F(ρ) = S(Tρ)` with gradients taken as Riesz
//! representatives for `⟨A, B⟩ = tr(AB)` on Herm(N), i.e. `∇F = T*(∇S)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::herm::HermitianMatrix;
use crate::operators::{MeasurementData, MeasurementOperator};

/// Guard on `(Tρ)_{m,k}` inside logarithms and divisions.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitKind {
    /// `-Σ y ln(Tρ)`.
    #[serde(rename = "nll")]
    NegLogLikelihood,
    /// `½ ‖y - Tρ‖²`.
    #[serde(rename = "l2")]
    LeastSquares,
}

/// `{"fit":"nll"|"l2","floor":1e-12}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveDescriptor {
    pub fit: FitKind,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

impl Default for ObjectiveDescriptor {
    fn default() -> Self {
        Self {
            fit: FitKind::NegLogLikelihood,
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Objective {
    operator: Arc<MeasurementOperator>,
    data: MeasurementData,
    kind: FitKind,
    floor: f64,
}

impl Objective {
    pub fn new(operator: Arc<MeasurementOperator>, data: MeasurementData, kind: FitKind) -> Result<Self> {
        let expected = (operator.rows(), operator.cols());
        if data.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: data.shape(),
            });
        }
        Ok(Self {
            operator,
            data,
            kind,
            floor: DEFAULT_FLOOR,
        })
    }

    pub fn from_descriptor(
        operator: Arc<MeasurementOperator>,
        data: MeasurementData,
        desc: ObjectiveDescriptor,
    ) -> Result<Self> {
        Self::new(operator, data, desc.fit)?.with_floor(desc.floor)
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::InvalidParameter(format!("floor must be positive, got {floor}")));
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn operator(&self) -> &MeasurementOperator {
        &self.operator
    }

    pub fn operator_arc(&self) -> &Arc<MeasurementOperator> {
        &self.operator
    }

    pub fn data(&self) -> &MeasurementData {
        &self.data
    }

    pub fn kind(&self) -> FitKind {
        self.kind
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Same operator and fit on different data.
    pub fn with_data(&self, data: MeasurementData) -> Result<Self> {
        Ok(Self::new(self.operator.clone(), data, self.kind)?
            .with_floor(self.floor)
            .expect("floor already validated"))
    }

    fn value_from_forward(&self, forward: &DMatrix<f64>) -> f64 {
        let y = self.data.values();
        match self.kind {
            FitKind::NegLogLikelihood => -y
                .iter()
                .zip(forward.iter())
                .filter(|(&yv, _)| yv != 0.0)
                .map(|(&yv, &t)| yv * t.max(self.floor).ln())
                .sum::<f64>(),
            FitKind::LeastSquares => {
                0.5 * y
                    .iter()
                    .zip(forward.iter())
                    .map(|(&yv, &t)| (yv - t) * (yv - t))
                    .sum::<f64>()
            }
        }
    }

    fn weights_from_forward(&self, forward: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.data.values();
        match self.kind {
            FitKind::NegLogLikelihood => y.zip_map(forward, |yv, t| -yv / t.max(self.floor)),
            FitKind::LeastSquares => forward - y,
        }
    }

    pub fn value(&self, rho: &HermitianMatrix) -> Result<f64> {
        Ok(self.value_from_forward(&self.operator.apply(rho)?))
    }

    pub fn gradient(&self, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        let forward = self.operator.apply(rho)?;
        self.operator.adjoint(&self.weights_from_forward(&forward))
    }

    pub fn value_and_gradient(&self, rho: &HermitianMatrix) -> Result<(f64, HermitianMatrix)> {
        let forward = self.operator.apply(rho)?;
        let g = self.operator.adjoint(&self.weights_from_forward(&forward))?;
        Ok((self.value_from_forward(&forward), g))
    }

    /// `F(ρ + d) - F(ρ)` without the cancellation of subtracting two large
    /// values; descent tests near a minimizer rely on it.
    pub fn value_change(&self, rho: &HermitianMatrix, d: &HermitianMatrix) -> Result<f64> {
        Ok(self.change_from_forward(&self.operator.apply(rho)?, &self.operator.apply(d)?))
    }

    /// Value and gradient at a state whose forward image `p = Tρ` is known.
    pub(crate) fn value_and_gradient_from_forward(&self, p: &DMatrix<f64>) -> Result<(f64, HermitianMatrix)> {
        let g = self.operator.adjoint(&self.weights_from_forward(p))?;
        Ok((self.value_from_forward(p), g))
    }

    /// [`Self::value_change`] from `p = Tρ` and `dp = Td`.
    pub(crate) fn change_from_forward(&self, p: &DMatrix<f64>, dp: &DMatrix<f64>) -> f64 {
        let y = self.data.values();
        let floor = self.floor;
        let mut acc = 0.0;
        for ((&yv, &pv), &dv) in y.iter().zip(p.iter()).zip(dp.iter()) {
            acc += match self.kind {
                FitKind::NegLogLikelihood if yv == 0.0 => 0.0,
                FitKind::NegLogLikelihood => {
                    let q = pv + dv;
                    if pv > floor && q > floor {
                        -yv * (dv / pv).ln_1p()
                    } else {
                        -yv * (q.max(floor).ln() - pv.max(floor).ln())
                    }
                }
                FitKind::LeastSquares => (pv - yv) * dv + 0.5 * dv * dv,
            };
        }
        acc
    }

    /// `R(ρ) = T*(y / Tρ)`, the negative likelihood gradient. Defined for
    /// either fit kind since it only depends on the data.
    pub fn likelihood_ratio(&self, rho: &HermitianMatrix) -> Result<HermitianMatrix> {
        let forward = self.operator.apply(rho)?;
        let w = self
            .data
            .values()
            .zip_map(&forward, |yv, t| yv / t.max(self.floor));
        self.operator.adjoint(&w)
    }

    /// Number of entries of `Tρ` at or below the floor.
    pub fn floor_hits(&self, rho: &HermitianMatrix) -> Result<usize> {
        Ok(self
            .operator
            .apply(rho)?
            .iter()
            .filter(|&&t| t <= self.floor)
            .count())
    }
}
