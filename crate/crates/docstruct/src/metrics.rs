//! Strict structure-evaluation protocol.
//!
//! Entity detection is scored with IoU-based unique matching and per-category
//! average precision (101-point interpolation, mean over categories present
//! in the ground truth). Structure generation is scored with exact
//! relation-triple precision/recall/F1: a predicted triple counts only if its
//! type matches and both endpoints were uniquely matched to the ground-truth
//! triple's endpoints.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{BBox, Category, DocumentGraph, Entity, EntityId, RelationType};

/// Intersection-over-union of two boxes; 0 when the union has zero area.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Unique matching between predictions and ground truth at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(predicted id, ground-truth id, IoU)`, every IoU above the threshold.
    pub pairs: Vec<(EntityId, EntityId, f64)>,
    /// False positives.
    pub unmatched_predictions: Vec<EntityId>,
    /// False negatives.
    pub unmatched_ground_truth: Vec<EntityId>,
}

impl MatchResult {
    /// Predicted id -> matched ground-truth id.
    pub fn pred_to_gt(&self) -> BTreeMap<&EntityId, &EntityId> {
        self.pairs.iter().map(|(p, g, _)| (p, g)).collect()
    }
}

/// Greedy unique matching: ground-truth entities are processed in descending
/// order of their best still-available IoU; each is matched to the available
/// same-category prediction with the highest IoU strictly above `threshold`.
/// Ties break on the smaller ground-truth id, then the smaller predicted id.
pub fn match_entities(pred: &[Entity], gt: &[Entity], threshold: f64) -> MatchResult {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold in (0, 1]");

    // Candidate IoUs per ground-truth entity, same category only.
    let mut candidates: Vec<Vec<(usize, f64)>> = gt
        .iter()
        .map(|g| {
            pred.iter()
                .enumerate()
                .filter(|(_, p)| p.category == g.category)
                .map(|(pi, p)| (pi, iou(&p.bbox, &g.bbox)))
                .filter(|(_, v)| *v > threshold)
                .collect()
        })
        .collect();

    let mut gt_taken = vec![false; gt.len()];
    let mut pred_taken = vec![false; pred.len()];
    let mut pairs: Vec<(EntityId, EntityId, f64)> = Vec::new();

    loop {
        // Best available candidate per unmatched ground-truth entity.
        let mut best: Option<(f64, usize, usize)> = None;
        for (gi, cands) in candidates.iter().enumerate() {
            if gt_taken[gi] {
                continue;
            }
            let avail = cands
                .iter()
                .filter(|(pi, _)| !pred_taken[*pi])
                .max_by(|a, b| {
                    a.1.partial_cmp(&b.1)
                        .unwrap()
                        .then_with(|| pred[b.0].id.cmp(&pred[a.0].id))
                });
            if let Some(&(pi, v)) = avail {
                let better = match best {
                    None => true,
                    Some((bv, bgi, _)) => v > bv || (v == bv && gt[gi].id < gt[bgi].id),
                };
                if better {
                    best = Some((v, gi, pi));
                }
            }
        }
        match best {
            Some((v, gi, pi)) => {
                gt_taken[gi] = true;
                pred_taken[pi] = true;
                pairs.push((pred[pi].id.clone(), gt[gi].id.clone(), v));
                candidates[gi].clear();
            }
            None => break,
        }
    }

    let mut unmatched_predictions: Vec<EntityId> = pred
        .iter()
        .enumerate()
        .filter(|(i, _)| !pred_taken[*i])
        .map(|(_, p)| p.id.clone())
        .collect();
    unmatched_predictions.sort();
    let mut unmatched_ground_truth: Vec<EntityId> = gt
        .iter()
        .enumerate()
        .filter(|(i, _)| !gt_taken[*i])
        .map(|(_, g)| g.id.clone())
        .collect();
    unmatched_ground_truth.sort();

    MatchResult {
        pairs,
        unmatched_predictions,
        unmatched_ground_truth,
    }
}

/// One detection pooled into a precision-recall sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SweepPoint {
    confidence: f64,
    is_tp: bool,
}

/// Score-ordered per-document detection labelling for one category, the
/// matching convention of COCO-style average precision: detections are
/// processed in descending confidence and each takes the still-available
/// ground-truth entity with the highest IoU strictly above the threshold.
fn label_detections(
    pred: &[Entity],
    gt: &[Entity],
    category: Category,
    threshold: f64,
) -> (Vec<SweepPoint>, usize) {
    let gts: Vec<&Entity> = gt.iter().filter(|e| e.category == category).collect();
    let mut dets: Vec<&Entity> = pred.iter().filter(|e| e.category == category).collect();
    dets.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then_with(|| a.id.cmp(&b.id))
    });

    let mut gt_taken = vec![false; gts.len()];
    let mut points = Vec::with_capacity(dets.len());
    for det in dets {
        let best = gts
            .iter()
            .enumerate()
            .filter(|(gi, _)| !gt_taken[*gi])
            .map(|(gi, g)| (gi, iou(&det.bbox, &g.bbox)))
            .filter(|(_, v)| *v > threshold)
            .max_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .unwrap()
                    .then_with(|| gts[b.0].id.cmp(&gts[a.0].id))
            });
        match best {
            Some((gi, _)) => {
                gt_taken[gi] = true;
                points.push(SweepPoint { confidence: det.confidence, is_tp: true });
            }
            None => points.push(SweepPoint { confidence: det.confidence, is_tp: false }),
        }
    }
    (points, gts.len())
}

/// 101-point interpolated AP from pooled sweep points, on a 0-100 scale.
fn ap_from_sweep(mut points: Vec<SweepPoint>, gt_count: usize) -> f64 {
    if gt_count == 0 {
        return 0.0;
    }
    // Equal confidences order canonically (true positives first) so pooling
    // across documents is independent of document order.
    points.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then_with(|| b.is_tp.cmp(&a.is_tp))
    });
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut curve: Vec<(f64, f64)> = Vec::with_capacity(points.len()); // (recall, precision)
    for p in &points {
        if p.is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        curve.push((tp as f64 / gt_count as f64, tp as f64 / (tp + fp) as f64));
    }
    let mut total = 0.0;
    for step in 0..=100 {
        let r = step as f64 / 100.0;
        let best = curve
            .iter()
            .filter(|(rec, _)| *rec >= r - 1e-12)
            .map(|(_, prec)| *prec)
            .fold(0.0, f64::max);
        total += best;
    }
    100.0 * total / 101.0
}

/// Average precision for one category on a 0-100 scale.
///
/// Returns `None` when the ground truth contains no entity of the category
/// (AP undefined, excluded from mAP rather than scored 0).
pub fn average_precision(
    pred: &[Entity],
    gt: &[Entity],
    category: Category,
    threshold: f64,
) -> Option<f64> {
    let (points, gt_count) = label_detections(pred, gt, category, threshold);
    if gt_count == 0 {
        return None;
    }
    Some(ap_from_sweep(points, gt_count))
}

/// Precision/recall/F1 triple for relation prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Raw counts behind a [`RelationScores`]; summable across documents.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TripleCounts {
    pub matched: usize,
    pub predicted: usize,
    pub ground_truth: usize,
}

impl TripleCounts {
    pub fn add(&mut self, other: TripleCounts) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.ground_truth += other.ground_truth;
    }

    pub fn scores(&self) -> RelationScores {
        let precision = if self.predicted == 0 {
            0.0
        } else {
            self.matched as f64 / self.predicted as f64
        };
        let recall = if self.ground_truth == 0 {
            0.0
        } else {
            self.matched as f64 / self.ground_truth as f64
        };
        RelationScores {
            precision,
            recall,
            f1: harmonic_f1(precision, recall),
        }
    }
}

/// Exact triple matching for one document pair. Entity matching runs first;
/// a predicted triple matches a ground-truth triple iff the type is equal and
/// both endpoints were uniquely matched to the ground-truth triple's
/// endpoints. Each ground-truth triple is consumed at most once and null
/// relations are excluded from counting.
pub fn relation_triple_counts(
    pred: &DocumentGraph,
    gt: &DocumentGraph,
    threshold: f64,
) -> TripleCounts {
    let matching = match_entities(&pred.entities, &gt.entities, threshold);
    let map = matching.pred_to_gt();

    let mut pred_triples: Vec<(&EntityId, &EntityId, RelationType)> = pred
        .relations
        .iter()
        .filter(|r| r.rtype != RelationType::Null)
        .map(|r| (&r.subject, &r.object, r.rtype))
        .collect();
    pred_triples.sort();
    let gt_triples: BTreeSet<(&EntityId, &EntityId, RelationType)> = gt
        .relations
        .iter()
        .filter(|r| r.rtype != RelationType::Null)
        .map(|r| (&r.subject, &r.object, r.rtype))
        .collect();

    let mut consumed: BTreeSet<(&EntityId, &EntityId, RelationType)> = BTreeSet::new();
    let mut matched = 0usize;
    for (s, o, t) in &pred_triples {
        if let (Some(gs), Some(go)) = (map.get(s), map.get(o)) {
            let key = (*gs, *go, *t);
            if gt_triples.contains(&key) && consumed.insert(key) {
                matched += 1;
            }
        }
    }

    TripleCounts {
        matched,
        predicted: pred_triples.len(),
        ground_truth: gt_triples.len(),
    }
}

/// Relation precision/recall/F1 for one document pair.
pub fn relation_f1(pred: &DocumentGraph, gt: &DocumentGraph, threshold: f64) -> RelationScores {
    relation_triple_counts(pred, gt, threshold).scores()
}

/// Full evaluation report for one IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    /// AP per category present in the ground truth, 0-100.
    pub per_category_ap: BTreeMap<Category, f64>,
    /// Arithmetic mean of `per_category_ap`, 0-100.
    pub map: f64,
    pub relation: RelationScores,
}

/// Evaluates a corpus of (prediction, ground truth) page pairs at one IoU
/// threshold. Detections are labelled per page and pooled per category for
/// the AP sweep; triple counts are summed. The aggregation is a fold that is
/// independent of document order.
pub fn evaluate_corpus(pairs: &[(&DocumentGraph, &DocumentGraph)], threshold: f64) -> EvalReport {
    let mut sweeps: BTreeMap<Category, Vec<SweepPoint>> = BTreeMap::new();
    let mut gt_counts: BTreeMap<Category, usize> = BTreeMap::new();
    let mut triples = TripleCounts::default();

    for (pred, gt) in pairs {
        let present: BTreeSet<Category> = pred
            .entities
            .iter()
            .chain(gt.entities.iter())
            .map(|e| e.category)
            .collect();
        for category in present {
            let (points, n_gt) =
                label_detections(&pred.entities, &gt.entities, category, threshold);
            sweeps.entry(category).or_default().extend(points);
            *gt_counts.entry(category).or_insert(0) += n_gt;
        }
        triples.add(relation_triple_counts(pred, gt, threshold));
    }

    let mut per_category_ap = BTreeMap::new();
    for (category, n_gt) in &gt_counts {
        if *n_gt == 0 {
            continue; // never in ground truth: AP undefined, excluded
        }
        let points = sweeps.remove(category).unwrap_or_default();
        per_category_ap.insert(*category, ap_from_sweep(points, *n_gt));
    }
    let map = if per_category_ap.is_empty() {
        0.0
    } else {
        per_category_ap.values().sum::<f64>() / per_category_ap.len() as f64
    };

    EvalReport {
        iou_threshold: threshold,
        per_category_ap,
        map,
        relation: triples.scores(),
    }
}

/// Evaluates a single page pair.
pub fn evaluate_pair(pred: &DocumentGraph, gt: &DocumentGraph, threshold: f64) -> EvalReport {
    evaluate_corpus(&[(pred, gt)], threshold)
}
