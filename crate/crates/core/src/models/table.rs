//! Finite-λ models declared as probability tables in JSON.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "two-point",
//!   "weights": [0.5, 0.5],
//!   "a_degrees": [0, 90],
//!   "b_degrees": [0, 90],
//!   "flags": {"deterministic": false, "claims_pi": true, "claims_oi": true},
//!   "tables": [{"a": 0, "b": 0, "lambda": 0, "p": [[0.25, 0.25], [0.25, 0.25]]}]
//! }
//! ```
//!
//! `tables` must hold exactly one entry per `(a, b, λ)` combination.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HvModel, Lambda, LambdaSpace, ModelError, ModelFlags};
use crate::quantum::{JointDistribution, Setting};

pub const TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableModelSpec {
    pub schema_version: u32,
    pub name: String,
    pub weights: Vec<f64>,
    pub a_degrees: Vec<f64>,
    pub b_degrees: Vec<f64>,
    #[serde(default)]
    pub flags: ModelFlags,
    pub tables: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub a: f64,
    pub b: f64,
    pub lambda: usize,
    pub p: [[f64; 2]; 2],
}

const ANGLE_MATCH: f64 = 1e-9;

fn find(settings: &[Setting], s: &Setting) -> Option<usize> {
    if !s.is_planar() {
        return None;
    }
    settings.iter().position(|t| t.angle_to(s) < ANGLE_MATCH)
}

fn settings_from(degrees: &[f64], side: &str) -> Result<Vec<Setting>, ModelError> {
    let settings = degrees
        .iter()
        .map(|d| Setting::try_from_degrees(*d).map_err(|e| ModelError::Schema(format!("{side}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, s) in settings.iter().enumerate() {
        if find(&settings[..i], s).is_some() {
            return Err(ModelError::Schema(format!("{side} lists {s} twice")));
        }
    }
    if settings.is_empty() {
        return Err(ModelError::Schema(format!("{side} is empty")));
    }
    Ok(settings)
}

impl TableModelSpec {
    pub fn build(&self) -> Result<HvModel, ModelError> {
        if self.schema_version != TABLE_SCHEMA_VERSION {
            return Err(ModelError::Schema(format!(
                "schema_version {} is not supported (expected {TABLE_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let a_settings = settings_from(&self.a_degrees, "a_degrees")?;
        let b_settings = settings_from(&self.b_degrees, "b_degrees")?;
        let n_lambda = self.weights.len();
        let space = LambdaSpace::finite((0..n_lambda).map(Lambda::Index).collect(), self.weights.clone())?;

        let (na, nb) = (a_settings.len(), b_settings.len());
        let mut cells: Vec<Option<JointDistribution>> = vec![None; na * nb * n_lambda];
        for entry in &self.tables {
            let a = Setting::try_from_degrees(entry.a).map_err(|e| ModelError::Schema(e.to_string()))?;
            let b = Setting::try_from_degrees(entry.b).map_err(|e| ModelError::Schema(e.to_string()))?;
            let i = find(&a_settings, &a)
                .ok_or_else(|| ModelError::Schema(format!("table a={} is not declared", entry.a)))?;
            let j = find(&b_settings, &b)
                .ok_or_else(|| ModelError::Schema(format!("table b={} is not declared", entry.b)))?;
            if entry.lambda >= n_lambda {
                return Err(ModelError::Schema(format!(
                    "table λ index {} out of range",
                    entry.lambda
                )));
            }
            let d = JointDistribution::new(entry.p).map_err(|e| {
                ModelError::Schema(format!("table (a={}, b={}, λ={}): {e}", entry.a, entry.b, entry.lambda))
            })?;
            let slot = &mut cells[(i * nb + j) * n_lambda + entry.lambda];
            if slot.replace(d).is_some() {
                return Err(ModelError::Schema(format!(
                    "duplicate table (a={}, b={}, λ={})",
                    entry.a, entry.b, entry.lambda
                )));
            }
        }
        let cells = cells
            .into_iter()
            .enumerate()
            .map(|(idx, c)| {
                c.ok_or_else(|| {
                    let k = idx % n_lambda;
                    let j = (idx / n_lambda) % nb;
                    let i = idx / (n_lambda * nb);
                    ModelError::Schema(format!(
                        "missing table (a={}, b={}, λ={k})",
                        self.a_degrees[i], self.b_degrees[j]
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let (ka, kb) = (a_settings.clone(), b_settings.clone());
        let model = HvModel::new(
            self.name.clone(),
            space,
            self.flags,
            move |a: &Setting, b: &Setting, lambda: &Lambda| {
                let (Some(i), Some(j)) = (find(&ka, a), find(&kb, b)) else {
                    return Err(ModelError::OffGrid {
                        pair: Box::new((*a, *b)),
                    });
                };
                let Lambda::Index(k) = *lambda else {
                    return Err(ModelError::InvalidSpace(format!(
                        "table model expects an index λ, got {lambda:?}"
                    )));
                };
                cells
                    .get((i * nb + j) * n_lambda + k)
                    .copied()
                    .ok_or_else(|| ModelError::InvalidSpace(format!("λ index {k} out of range")))
            },
        );
        Ok(model.with_declared_settings(a_settings, b_settings))
    }
}

pub fn parse_table_model(json: &str) -> Result<HvModel, ModelError> {
    let spec: TableModelSpec = serde_json::from_str(json).map_err(|e| ModelError::Schema(e.to_string()))?;
    spec.build()
}

pub fn load_table_model(path: &Path) -> Result<HvModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_table_model(&text)
}
