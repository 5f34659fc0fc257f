//! Joint training of the refinement and relation heads.
//!
//! The loss is the sum of two cross-entropies: class refinement over all
//! entities and relation classification over a per-iteration sample of
//! entity pairs, with positive (non-null) pairs oversampled to at most half
//! of the sample. Optimization is plain mini-batch SGD, deterministic per
//! seed, with early stopping on validation relation F1.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::bias::build_bias_table;
use super::linalg::{cross_entropy, softmax, Matrix};
use super::{
    context_features, infer_graph, pair_logits, refine_logits, ModelDims, RelationModel, GEO_DIM,
};
use crate::metrics::relation_triple_counts;
use crate::model::{CategorySet, DocumentGraph, RelationType};

/// Training hyperparameters. Every field must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub batch_size: usize,
    /// Entity pairs sampled per document per iteration.
    pub pair_sample_size: usize,
    pub seed: u64,
    /// Validation checks without improvement before stopping.
    pub early_stopping_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            max_iterations: 5000,
            batch_size: 4,
            pair_sample_size: 128,
            seed: 0,
            // Checks run every 50 iterations; geometry-dependent relations
            // can plateau for a long stretch before improving.
            early_stopping_patience: 40,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<(), TrainError> {
        if self.learning_rate > 0.0
            && self.batch_size > 0
            && self.pair_sample_size > 0
            && self.early_stopping_patience > 0
        {
            Ok(())
        } else {
            Err(TrainError::InvalidConfig)
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("every training config field must be positive")]
    InvalidConfig,
    #[error("document contains a category outside the model's category set")]
    UnknownCategory,
}

/// Loss of one batch, split by head. `refinement` and `relation` are the
/// optimized quantities (per-document sums normalized by batch size);
/// `entities` and `pairs` are the batch totals behind them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub refinement: f64,
    pub relation: f64,
    pub entities: usize,
    pub pairs: usize,
    batch_len: usize,
}

impl LossBreakdown {
    /// The optimized objective.
    pub fn total(&self) -> f64 {
        self.refinement + self.relation
    }

    /// Per-entity plus per-pair mean cross-entropy, comparable across
    /// batches of different pair counts. This is what the loss history
    /// records.
    pub fn per_example(&self) -> f64 {
        let b = self.batch_len as f64;
        let r = if self.entities == 0 { 0.0 } else { self.refinement * b / self.entities as f64 };
        let p = if self.pairs == 0 { 0.0 } else { self.relation * b / self.pairs as f64 };
        r + p
    }
}

/// Training record: per-iteration loss and validation F1 checkpoints.
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
    /// `(iteration, validation F1)` at each check.
    pub val_f1_history: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub best_val_f1: f64,
}

/// Gradients for every parameter matrix.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub category_embeddings: Matrix,
    pub w_pair_1: Matrix,
    pub w_pair_2: Matrix,
    pub w_pair_rel: Matrix,
    pub refine_weights: Matrix,
}

impl Gradients {
    fn zeros(model: &RelationModel) -> Self {
        Gradients {
            category_embeddings: Matrix::zeros(
                model.category_embeddings.rows(),
                model.category_embeddings.cols(),
            ),
            w_pair_1: Matrix::zeros(model.w_pair_1.rows(), model.w_pair_1.cols()),
            w_pair_2: Matrix::zeros(model.w_pair_2.rows(), model.w_pair_2.cols()),
            w_pair_rel: Matrix::zeros(model.w_pair_rel.rows(), model.w_pair_rel.cols()),
            refine_weights: Matrix::zeros(model.refine_weights.rows(), model.refine_weights.cols()),
        }
    }
}

/// One document with the pair sample to train on this iteration.
pub(crate) struct TrainItem<'a> {
    pub doc: &'a DocumentGraph,
    /// `(subject index, object index, gold type)`.
    pub pairs: Vec<(usize, usize, RelationType)>,
}

/// One sampled entity pair with its gold relation type, indices into the
/// document's entity list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSample {
    pub subject: usize,
    pub object: usize,
    pub gold: RelationType,
}

/// Every ordered pair of distinct entities with its gold type (`null` when
/// unannotated).
pub fn all_gold_pairs(doc: &DocumentGraph) -> Vec<PairSample> {
    gold_pair_types(doc)
        .into_iter()
        .map(|(subject, object, gold)| PairSample { subject, object, gold })
        .collect()
}

/// Joint loss and analytical gradients for a batch of documents with
/// explicit pair samples. This is the exact objective the trainer descends;
/// it exists publicly so the gradients can be checked against finite
/// differences.
pub fn loss_and_gradients(
    model: &RelationModel,
    batch: &[(&DocumentGraph, &[PairSample])],
) -> (LossBreakdown, Gradients) {
    let items: Vec<TrainItem> = batch
        .iter()
        .map(|(doc, pairs)| TrainItem {
            doc,
            pairs: pairs.iter().map(|p| (p.subject, p.object, p.gold)).collect(),
        })
        .collect();
    loss_and_grads(model, &items)
}

/// Gold relation type per ordered index pair; absent pairs are null.
pub(crate) fn gold_pair_types(doc: &DocumentGraph) -> Vec<(usize, usize, RelationType)> {
    let index = doc.entity_index();
    let mut gold: std::collections::BTreeMap<(usize, usize), RelationType> =
        std::collections::BTreeMap::new();
    for r in &doc.relations {
        if r.rtype == RelationType::Null {
            continue;
        }
        let s = index[&r.subject];
        let o = index[&r.object];
        gold.entry((s, o)).or_insert(r.rtype);
    }
    let n = doc.entities.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1) * n);
    for s in 0..n {
        for o in 0..n {
            if s != o {
                let t = gold.get(&(s, o)).copied().unwrap_or(RelationType::Null);
                out.push((s, o, t));
            }
        }
    }
    out
}

/// Forward and backward pass over a batch. Both heads sum their
/// cross-entropies per document and normalize by the batch size, the usual
/// detection-head convention; per-example means at this pair count would
/// starve the minority pairs of gradient.
pub(crate) fn loss_and_grads(model: &RelationModel, batch: &[TrainItem]) -> (LossBreakdown, Gradients) {
    let mut grads = Gradients::zeros(model);
    let n_entities: usize = batch.iter().map(|item| item.doc.entities.len()).sum();
    let n_pairs: usize = batch.iter().map(|item| item.pairs.len()).sum();
    let ent_scale = if batch.is_empty() { 0.0 } else { 1.0 / batch.len() as f64 };
    let pair_scale = ent_scale;

    let mut loss_ref = 0.0;
    let mut loss_rel = 0.0;
    let base_dim = model.dims.base();
    let ctx_dim = model.dims.ctx();

    for item in batch {
        let doc = item.doc;
        let state = context_features(doc, model);
        let n = doc.entities.len();
        // Accumulated dL/dctx per entity (list order).
        let mut dctx = vec![vec![0.0; ctx_dim]; n];

        // Refinement head.
        for (i, e) in doc.entities.iter().enumerate() {
            let logits = refine_logits(model, &state.ctx[i]);
            let gold = model.category_index(e.category);
            loss_ref += ent_scale * cross_entropy(&logits, gold);
            let mut dz = softmax(&logits);
            dz[gold] -= 1.0;
            for v in dz.iter_mut() {
                *v *= ent_scale;
            }
            grads.refine_weights.add_outer(&dz, &state.ctx[i], 1.0);
            let back = model.refine_weights.matvec_transposed(&dz);
            for (acc, v) in dctx[i].iter_mut().zip(back.iter()) {
                *acc += v;
            }
        }

        // Relation head over the sampled pairs.
        for &(s, o, gold) in &item.pairs {
            let fwd = pair_logits(model, doc, &state, s, o);
            loss_rel += pair_scale * cross_entropy(&fwd.logits, gold.index());
            let mut dz = softmax(&fwd.logits);
            dz[gold.index()] -= 1.0;
            for v in dz.iter_mut() {
                *v *= pair_scale;
            }
            // logits = w_pair_rel * fused + bias.
            grads.w_pair_rel.add_outer(&dz, &fwd.fused, 1.0);
            let dfused = model.w_pair_rel.matvec_transposed(&dz);
            let da: Vec<f64> = dfused.iter().zip(fwd.b.iter()).map(|(d, b)| d * b).collect();
            let db: Vec<f64> = dfused.iter().zip(fwd.a.iter()).map(|(d, a)| d * a).collect();
            grads.w_pair_1.add_outer(&da, &fwd.rho1, 1.0);
            grads.w_pair_2.add_outer(&db, &fwd.rho2, 1.0);
            let drho2 = model.w_pair_2.matvec_transposed(&db);
            for (acc, v) in dctx[s].iter_mut().zip(drho2[..ctx_dim].iter()) {
                *acc += v;
            }
            for (acc, v) in dctx[o].iter_mut().zip(drho2[ctx_dim..].iter()) {
                *acc += v;
            }
        }

        // Context -> base features. ctx_k = [base_k ; mean of earlier bases],
        // so the mean slice distributes over every earlier entity in
        // refinement order with weight 1/k.
        let mut dbase = vec![vec![0.0; base_dim]; n];
        for i in 0..n {
            for (acc, v) in dbase[i].iter_mut().zip(dctx[i][..base_dim].iter()) {
                *acc += v;
            }
        }
        // Suffix accumulation over the ordered positions: position j receives
        // sum over k > j of dmean_k / k.
        let mut suffix = vec![0.0; base_dim];
        for k in (1..n).rev() {
            let idx = state.order[k];
            for (sfx, v) in suffix.iter_mut().zip(dctx[idx][base_dim..].iter()) {
                *sfx += v / k as f64;
            }
            let prev = state.order[k - 1];
            for (acc, sfx) in dbase[prev].iter_mut().zip(suffix.iter()) {
                *acc += sfx;
            }
        }

        // Base -> embeddings (the geometry slice has no parameters).
        for (i, e) in doc.entities.iter().enumerate() {
            let row = model.category_index(e.category);
            for d in 0..model.dims.embed {
                let v = grads.category_embeddings.get(row, d) + dbase[i][GEO_DIM + d];
                grads.category_embeddings.set(row, d, v);
            }
        }
    }

    (
        LossBreakdown {
            refinement: loss_ref,
            relation: loss_rel,
            entities: n_entities,
            pairs: n_pairs,
            batch_len: batch.len(),
        },
        grads,
    )
}

/// Samples up to `pair_sample_size` pairs for one document with positives
/// capped at half the sample.
pub(crate) fn sample_pairs(
    doc: &DocumentGraph,
    sample_size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, RelationType)> {
    let all = gold_pair_types(doc);
    let mut positives: Vec<(usize, usize, RelationType)> =
        all.iter().copied().filter(|(_, _, t)| *t != RelationType::Null).collect();
    let mut negatives: Vec<(usize, usize, RelationType)> =
        all.iter().copied().filter(|(_, _, t)| *t == RelationType::Null).collect();
    positives.shuffle(rng);
    negatives.shuffle(rng);
    let n_pos = positives.len().min(sample_size / 2);
    let n_neg = negatives.len().min(sample_size - n_pos);
    let mut out = positives[..n_pos].to_vec();
    out.extend_from_slice(&negatives[..n_neg]);
    out
}

/// Relation F1 of raw predictions (refine + predict, no grammar repair)
/// against the gold graphs.
pub(crate) fn validation_f1(model: &RelationModel, val: &[DocumentGraph], threshold: f64) -> f64 {
    let mut counts = crate::metrics::TripleCounts::default();
    for doc in val {
        let pred = infer_graph(doc, model);
        counts.add(relation_triple_counts(&pred, doc, threshold));
    }
    counts.scores().f1
}

/// Trains a model on gold graphs. The frequency-bias table is built from the
/// training split; weights start at the seeded random initialization. Runs
/// are deterministic per seed. With `max_iterations == 0` the initialized
/// model is returned untouched.
pub fn train(
    corpus: &[DocumentGraph],
    val: &[DocumentGraph],
    categories: &CategorySet,
    dims: ModelDims,
    cfg: &TrainConfig,
) -> Result<(RelationModel, TrainReport), TrainError> {
    cfg.check()?;
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    for doc in corpus.iter().chain(val.iter()) {
        if doc.entities.iter().any(|e| categories.index_of(e.category).is_none()) {
            return Err(TrainError::UnknownCategory);
        }
    }

    let mut model = RelationModel::init(categories.clone(), dims, cfg.seed);
    model.bias_table = build_bias_table(corpus, categories);
    let mut report = TrainReport::default();
    if cfg.max_iterations == 0 {
        return Ok((model, report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let eval_every = 50usize;
    let mut best: Option<(f64, RelationModel)> = None;
    let mut stale_checks = 0usize;

    for iter in 0..cfg.max_iterations {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let doc = &corpus[rng.gen_range(0..corpus.len())];
            let pairs = sample_pairs(doc, cfg.pair_sample_size, &mut rng);
            batch.push(TrainItem { doc, pairs });
        }
        let (loss, grads) = loss_and_grads(&model, &batch);
        report.loss_history.push(loss.per_example());

        model.category_embeddings.add_scaled(&grads.category_embeddings, -cfg.learning_rate);
        model.w_pair_1.add_scaled(&grads.w_pair_1, -cfg.learning_rate);
        model.w_pair_2.add_scaled(&grads.w_pair_2, -cfg.learning_rate);
        model.w_pair_rel.add_scaled(&grads.w_pair_rel, -cfg.learning_rate);
        model.refine_weights.add_scaled(&grads.refine_weights, -cfg.learning_rate);

        report.iterations_run = iter + 1;
        let last = (iter + 1) == cfg.max_iterations;
        if !val.is_empty() && ((iter + 1) % eval_every == 0 || last) {
            let f1 = validation_f1(&model, val, 0.5);
            report.val_f1_history.push((iter + 1, f1));
            let improved = best.as_ref().map(|(b, _)| f1 > *b).unwrap_or(true);
            if improved {
                best = Some((f1, model.clone()));
                stale_checks = 0;
            } else {
                stale_checks += 1;
            }
            if f1 >= 1.0 || stale_checks >= cfg.early_stopping_patience {
                break;
            }
        }
    }

    if let Some((f1, best_model)) = best {
        report.best_val_f1 = f1;
        model = best_model;
    }
    Ok((model, report))
}
