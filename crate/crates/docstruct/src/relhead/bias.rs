//! Frequency bias: empirical relation-type distribution per ordered category
//! pair, estimated from training annotations.

use crate::model::{Category, CategorySet, DocumentGraph, EntityId, RelationType};
use std::collections::BTreeMap;

/// Log-probabilities of the three relation types per ordered category pair,
/// Laplace-smoothed. Ordered entity pairs without an annotated relation
/// count as `null`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBiasTable {
    categories: CategorySet,
    /// `|C| * |C| * 3`, indexed by (subject, object, type).
    log_probs: Vec<f64>,
}

impl FrequencyBiasTable {
    /// Uniform table: every pair gets `ln(1/3)` per type.
    pub fn uniform(categories: CategorySet) -> Self {
        let n = categories.len();
        FrequencyBiasTable {
            categories,
            log_probs: vec![(1.0f64 / 3.0).ln(); n * n * 3],
        }
    }

    pub fn categories(&self) -> &CategorySet {
        &self.categories
    }

    fn offset(&self, subject: Category, object: Category) -> Option<usize> {
        let si = self.categories.index_of(subject)?;
        let oi = self.categories.index_of(object)?;
        Some((si * self.categories.len() + oi) * 3)
    }

    /// Log-probability vector `[parent_of, followed_by, null]` for the pair.
    pub fn log_probs(&self, subject: Category, object: Category) -> [f64; 3] {
        match self.offset(subject, object) {
            Some(o) => [self.log_probs[o], self.log_probs[o + 1], self.log_probs[o + 2]],
            // Outside the active set: no preference.
            None => [(1.0f64 / 3.0).ln(); 3],
        }
    }

    /// Most likely relation type for the pair under the bias alone.
    pub fn argmax(&self, subject: Category, object: Category) -> RelationType {
        let lp = self.log_probs(subject, object);
        let mut best = 0;
        for i in 1..3 {
            if lp[i] > lp[best] {
                best = i;
            }
        }
        RelationType::from_index(best)
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.log_probs
    }

    pub(crate) fn from_raw(categories: CategorySet, log_probs: Vec<f64>) -> Self {
        let n = categories.len();
        assert_eq!(log_probs.len(), n * n * 3, "bias table size");
        FrequencyBiasTable { categories, log_probs }
    }
}

/// Counts relation types over every ordered pair of distinct entities in the
/// training documents (absent pairs count as `null`), applies add-one
/// smoothing, and converts to log-probabilities.
pub fn build_bias_table(training: &[DocumentGraph], categories: &CategorySet) -> FrequencyBiasTable {
    let n = categories.len();
    let mut counts = vec![0u64; n * n * 3];

    for doc in training {
        let mut annotated: BTreeMap<(&EntityId, &EntityId), RelationType> = BTreeMap::new();
        for r in &doc.relations {
            // Structural annotation wins over an explicit null for the pair.
            let slot = annotated.entry((&r.subject, &r.object)).or_insert(r.rtype);
            if *slot == RelationType::Null && r.rtype != RelationType::Null {
                *slot = r.rtype;
            }
        }
        for subj in &doc.entities {
            for obj in &doc.entities {
                if subj.id == obj.id {
                    continue;
                }
                let (Some(si), Some(oi)) =
                    (categories.index_of(subj.category), categories.index_of(obj.category))
                else {
                    continue;
                };
                let rtype = annotated
                    .get(&(&subj.id, &obj.id))
                    .copied()
                    .unwrap_or(RelationType::Null);
                counts[(si * n + oi) * 3 + rtype.index()] += 1;
            }
        }
    }

    let mut log_probs = vec![0.0; n * n * 3];
    for pair in 0..n * n {
        let o = pair * 3;
        let total: u64 = counts[o..o + 3].iter().sum();
        for t in 0..3 {
            let p = (counts[o + t] as f64 + 1.0) / (total as f64 + 3.0);
            log_probs[o + t] = p.ln();
        }
    }
    FrequencyBiasTable { categories: categories.clone(), log_probs }
}
