//! Shannon entropy of how an entity's occurrences spread across locations.

use std::collections::BTreeMap;

use crate::ingestion::OccurrenceRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("all counts are zero")]
    AllZero,
    #[error("count {0} is negative or not finite")]
    InvalidCount(f64),
    #[error("{labels} labels but {counts} counts")]
    LengthMismatch { labels: usize, counts: usize },
}

/// Occurrence counts of one entity per state.
#[derive(Debug, Clone, PartialEq)]
pub struct OccurrenceVector {
    labels: Vec<String>,
    counts: Vec<f64>,
}

impl OccurrenceVector {
    pub fn new(labels: Vec<String>, counts: Vec<f64>) -> Result<Self, EntropyError> {
        if labels.len() != counts.len() {
            return Err(EntropyError::LengthMismatch {
                labels: labels.len(),
                counts: counts.len(),
            });
        }
        if let Some(&c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(EntropyError::InvalidCount(c));
        }
        if !counts.iter().any(|&c| c > 0.0) {
            return Err(EntropyError::AllZero);
        }
        Ok(OccurrenceVector { labels, counts })
    }

    /// Unlabelled counts; states are numbered from zero.
    pub fn from_counts(counts: &[f64]) -> Result<Self, EntropyError> {
        Self::new((0..counts.len()).map(|i| i.to_string()).collect(), counts.to_vec())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }
}

/// `H = -sum p ln p` with `p = count / total`; zero counts contribute nothing.
pub fn shannon_entropy(v: &OccurrenceVector) -> f64 {
    let total: f64 = v.counts.iter().sum();
    let h: f64 = v
        .counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum();
    // A single state gives -1 * ln 1 = -0.0.
    h.max(0.0)
}

/// Per-entity count vectors over states. Records without a state are
/// grouped under the empty label. Entities whose counts are all zero are
/// left out.
pub fn state_vectors(records: &[OccurrenceRecord]) -> BTreeMap<String, OccurrenceVector> {
    let mut by_entity: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        *by_entity
            .entry(&r.entity_id)
            .or_default()
            .entry(r.state.as_deref().unwrap_or(""))
            .or_default() += r.count as f64;
    }
    by_entity
        .into_iter()
        .filter_map(|(id, states)| {
            let (labels, counts) = states.into_iter().map(|(s, c)| (s.to_string(), c)).unzip();
            OccurrenceVector::new(labels, counts).ok().map(|v| (id.to_string(), v))
        })
        .collect()
}
