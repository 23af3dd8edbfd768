//! Polygon spec documents: `{"name", "normals", "offsets", "nut"?}`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harmonic::NutParameter;
use crate::polygon::{LatticeVector, MomentPolygon};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSpec {
    pub name: String,
    pub normals: Vec<[i64; 2]>,
    pub offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nut: Option<[f64; 2]>,
}

impl PolygonSpec {
    pub fn from_polygon(name: &str, polygon: &MomentPolygon, nut: Option<NutParameter>) -> Self {
        Self {
            name: name.to_string(),
            normals: polygon.normals().iter().map(|n| [n.a, n.b]).collect(),
            offsets: polygon.offsets().to_vec(),
            nut: nut.map(|n| n.as_array()),
        }
    }

    /// Validated polygon, translated into gauge if needed.
    pub fn polygon(&self) -> Result<MomentPolygon> {
        MomentPolygon::translated(
            self.normals.iter().map(|n| LatticeVector::new(n[0], n[1])).collect(),
            self.offsets.clone(),
        )
    }

    pub fn nut(&self) -> NutParameter {
        self.nut.map(|n| NutParameter::new(n[0], n[1])).unwrap_or_default()
    }
}
