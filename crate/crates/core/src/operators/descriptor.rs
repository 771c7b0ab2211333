use serde::{Deserialize, Serialize};

use super::{homodyne_operator, pauli_six_state, MeasurementOperator, DEFAULT_QUAD_ORDER};
use crate::error::Result;

/// JSON description of a measurement operator:
/// `{"kind":"pauli6"}` or
/// `{"kind":"homodyne","dim":N,"angles":[...],"bin_edges":[...],"quad_order":q}` or
/// the equispaced shorthand
/// `{"kind":"homodyne_grid","dim":N,"angles":15,"bins":50,"range":[-7,7]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OperatorDescriptor {
    #[serde(rename = "pauli6")]
    Pauli6,
    #[serde(rename = "homodyne")]
    Homodyne {
        dim: usize,
        angles: Vec<f64>,
        bin_edges: Vec<f64>,
        #[serde(default = "default_quad_order")]
        quad_order: usize,
    },
    #[serde(rename = "homodyne_grid")]
    HomodyneGrid {
        dim: usize,
        #[serde(default = "default_angle_count")]
        angles: usize,
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default = "default_range")]
        range: [f64; 2],
        #[serde(default = "default_quad_order")]
        quad_order: usize,
    },
}

fn default_angle_count() -> usize {
    15
}

fn default_bins() -> usize {
    50
}

fn default_range() -> [f64; 2] {
    [-7.0, 7.0]
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

impl OperatorDescriptor {
    /// 15 equispaced angles on `[0, π)` and 50 equal bins on `[-7, 7]`.
    pub fn standard_homodyne(dim: usize) -> Self {
        Self::Homodyne {
            dim,
            angles: super::equispaced_angles(15),
            bin_edges: super::equispaced_edges(-7.0, 7.0, 50),
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pauli6 => 2,
            Self::Homodyne { dim, .. } | Self::HomodyneGrid { dim, .. } => *dim,
        }
    }

    pub fn build(&self) -> Result<MeasurementOperator> {
        match self {
            Self::Pauli6 => Ok(pauli_six_state()),
            Self::Homodyne {
                dim,
                angles,
                bin_edges,
                quad_order,
            } => homodyne_operator(*dim, angles, bin_edges, *quad_order),
            Self::HomodyneGrid {
                dim,
                angles,
                bins,
                range,
                quad_order,
            } => homodyne_operator(
                *dim,
                &super::equispaced_angles(*angles),
                &super::equispaced_edges(range[0], range[1], *bins),
                *quad_order,
            ),
        }
    }
}
