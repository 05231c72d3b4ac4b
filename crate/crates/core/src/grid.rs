//! Setting-pair grids shared by the checkers, the models and the pipeline.

use serde::{Deserialize, Serialize};

use crate::quantum::Setting;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid is empty")]
    Empty,
    #[error("duplicate setting pair ({}, {})", .0.0, .0.1)]
    Duplicate(Box<(Setting, Setting)>),
    #[error("invalid grid spec: {0}")]
    Spec(String),
}

/// Nonempty list of pairwise distinct `(a, b)` setting pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsGrid {
    pairs: Vec<(Setting, Setting)>,
}

impl Default for SettingsGrid {
    /// 13×13 over `[0°, 180°]` in 15° steps.
    fn default() -> Self {
        SettingsGrid::square_degrees(0.0, 180.0, 15.0).expect("default grid is valid")
    }
}

impl SettingsGrid {
    pub fn from_pairs(pairs: Vec<(Setting, Setting)>) -> Result<Self, GridError> {
        if pairs.is_empty() {
            return Err(GridError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for (a, b) in &pairs {
            if !seen.insert((a.key(), b.key())) {
                return Err(GridError::Duplicate(Box::new((*a, *b))));
            }
        }
        Ok(SettingsGrid { pairs })
    }

    /// Every pair of the listed settings.
    pub fn cartesian(a_values: &[Setting], b_values: &[Setting]) -> Result<Self, GridError> {
        let pairs = a_values
            .iter()
            .flat_map(|a| b_values.iter().map(move |b| (*a, *b)))
            .collect();
        Self::from_pairs(pairs)
    }

    /// Degree values `start, start+step, …, ≤ stop` on both sides.
    pub fn square_degrees(start: f64, stop: f64, step: f64) -> Result<Self, GridError> {
        let values = degree_range(start, stop, step)?;
        Self::cartesian(&values, &values)
    }

    pub fn pairs(&self) -> &[(Setting, Setting)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Distinct `a` settings in first-seen order.
    pub fn a_settings(&self) -> Vec<Setting> {
        distinct(self.pairs.iter().map(|p| p.0))
    }

    pub fn b_settings(&self) -> Vec<Setting> {
        distinct(self.pairs.iter().map(|p| p.1))
    }

    /// Pair indices grouped by their `a` setting.
    pub(crate) fn group_by_a(&self) -> Vec<Vec<usize>> {
        group(self.pairs.iter().map(|p| p.0.key()))
    }

    pub(crate) fn group_by_b(&self) -> Vec<Vec<usize>> {
        group(self.pairs.iter().map(|p| p.1.key()))
    }

    /// For each pair, the index of the first pair sharing its `a`.
    pub(crate) fn reference_by_a(&self) -> Vec<usize> {
        reference_index(self.group_by_a(), self.len())
    }

    /// For each pair, the index of the first pair sharing its `b`.
    pub(crate) fn reference_by_b(&self) -> Vec<usize> {
        reference_index(self.group_by_b(), self.len())
    }
}

/// Settings at `start, start+step, …` up to `stop` inclusive (degrees).
pub fn degree_range(start: f64, stop: f64, step: f64) -> Result<Vec<Setting>, GridError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(GridError::Spec(format!(
            "need finite start <= stop and step > 0, got {start}..{stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(GridError::Spec(format!("{count} grid values is too many")));
    }
    Ok((0..count)
        .map(|i| Setting::from_degrees(start + i as f64 * step))
        .collect())
}

fn reference_index(groups: Vec<Vec<usize>>, n: usize) -> Vec<usize> {
    let mut reference = vec![0; n];
    for group in groups {
        for &i in &group {
            reference[i] = group[0];
        }
    }
    reference
}

fn distinct(iter: impl Iterator<Item = Setting>) -> Vec<Setting> {
    let mut seen = std::collections::HashSet::new();
    iter.filter(|s| seen.insert(s.key())).collect()
}

fn group<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Vec<Vec<usize>> {
    let mut index = std::collections::HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, key) in keys.enumerate() {
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }
    groups
}
