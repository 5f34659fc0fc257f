//! Trainable relation classifier and entity refinement.
//!
//! Entities are embedded with geometric features and learned category
//! embeddings. The refinement head reads each entity's features plus the
//! mean features of its left neighbors (entities are ordered left-to-right
//! by box center) and re-scores its category. The relation head scores every
//! ordered entity pair by fusing the union-box geometry with both entities'
//! refinement context through two weight matrices combined elementwise, adds
//! the frequency-bias log-probabilities for the category pair, and accepts
//! the argmax non-null type when its probability clears the threshold `tau`.
//!
//! Deep visual features and recurrent context encoders are out of scope
//! here; geometric features and the left-neighbor mean context stand in for
//! them, which keeps the full fusion/bias/threshold mechanism intact and
//! exactly differentiable.

mod bias;
mod linalg;
mod serial;
mod train;

pub use bias::{build_bias_table, FrequencyBiasTable};
pub use linalg::{cross_entropy, softmax, Matrix};
pub use serial::ModelIoError;
pub use train::{
    all_gold_pairs, loss_and_gradients, train, Gradients, LossBreakdown, PairSample, TrainConfig,
    TrainError, TrainReport,
};

use crate::grammar::PairScores;
use crate::model::{
    BBox, Category, CategorySet, DocumentGraph, Entity, EntityId, PageSize, RelationType,
};

/// Number of geometric features per box.
pub const GEO_DIM: usize = 9;

/// Dimension configuration for a [`RelationModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    /// Category-embedding width.
    pub embed: usize,
    /// Fusion width of the pairwise head.
    pub fusion: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        // Embedding width 200; fusion kept at desk scale.
        ModelDims { embed: 200, fusion: 256 }
    }
}

impl ModelDims {
    /// Entity base feature width: geometry plus category embedding.
    pub fn base(&self) -> usize {
        GEO_DIM + self.embed
    }

    /// Refinement context width: own base features plus left-neighbor mean.
    pub fn ctx(&self) -> usize {
        2 * self.base()
    }

    /// Pairwise concatenation width: both entities' contexts.
    pub fn pair2(&self) -> usize {
        2 * self.ctx()
    }
}

/// Learned parameters of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationModel {
    pub categories: CategorySet,
    pub dims: ModelDims,
    /// `|C| x embed`, row order = category-set order.
    pub category_embeddings: Matrix,
    /// `fusion x GEO_DIM`, applied to the union-box geometry.
    pub w_pair_1: Matrix,
    /// `fusion x pair2`, applied to the concatenated contexts.
    pub w_pair_2: Matrix,
    /// `3 x fusion`, maps the fused feature to relation-type logits.
    pub w_pair_rel: Matrix,
    /// `|C| x ctx`, the refinement classifier.
    pub refine_weights: Matrix,
    pub bias_table: FrequencyBiasTable,
    /// Relation acceptance threshold, in `(0, 1)`.
    pub tau: f64,
}

impl RelationModel {
    /// Seeded initialization. Category embeddings are uniform in
    /// `[-0.1, 0.1]`; the fusion matrices use width-scaled uniform ranges.
    /// The refinement head starts as an identity reader of the embedding
    /// slice (it refines an upstream category prediction, so trusting the
    /// input category is the natural starting point) plus symmetry-breaking
    /// noise. The bias table starts uniform; training replaces it with
    /// corpus counts.
    pub fn init(categories: CategorySet, dims: ModelDims, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = categories.len();
        let embeddings = Matrix::random(n, dims.embed, 0.1, &mut rng);

        let glorot = |rows: usize, cols: usize| (6.0 / (rows + cols) as f64).sqrt();
        let w_pair_1 = Matrix::random(dims.fusion, GEO_DIM, glorot(dims.fusion, GEO_DIM), &mut rng);
        let w_pair_2 =
            Matrix::random(dims.fusion, dims.pair2(), glorot(dims.fusion, dims.pair2()), &mut rng);
        // The output layer starts at unit scale: its magnitude multiplies
        // the gradient reaching both fusion matrices, and the multiplicative
        // path is too slow to leave its initial regime otherwise.
        let w_pair_rel = Matrix::random(3, dims.fusion, 1.0, &mut rng);

        let mut refine_weights = Matrix::random(n, dims.ctx(), 0.01, &mut rng);
        let mean_sq_norm: f64 = (0..n)
            .map(|c| embeddings.row(c).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / n as f64;
        let kappa = 4.0 / mean_sq_norm.max(1e-9);
        for c in 0..n {
            for d in 0..dims.embed {
                let v = refine_weights.get(c, GEO_DIM + d) + kappa * embeddings.get(c, d);
                refine_weights.set(c, GEO_DIM + d, v);
            }
        }

        RelationModel {
            category_embeddings: embeddings,
            w_pair_1,
            w_pair_2,
            w_pair_rel,
            refine_weights,
            bias_table: FrequencyBiasTable::uniform(categories.clone()),
            categories,
            dims,
            tau: 0.5,
        }
    }

    /// All learned weights zero: pair scores reduce to the bias table.
    pub fn zero_weights(categories: CategorySet, dims: ModelDims, bias: FrequencyBiasTable) -> Self {
        let n = categories.len();
        RelationModel {
            category_embeddings: Matrix::zeros(n, dims.embed),
            w_pair_1: Matrix::zeros(dims.fusion, GEO_DIM),
            w_pair_2: Matrix::zeros(dims.fusion, dims.pair2()),
            w_pair_rel: Matrix::zeros(3, dims.fusion),
            refine_weights: Matrix::zeros(n, dims.ctx()),
            bias_table: bias,
            categories,
            dims,
            tau: 0.5,
        }
    }

    pub fn category_index(&self, c: Category) -> usize {
        self.categories
            .index_of(c)
            .expect("graph categories validated against the model's set")
    }

    pub fn save_json(&self) -> String {
        serial::to_json(self)
    }

    pub fn load_json(s: &str) -> Result<RelationModel, ModelIoError> {
        serial::from_json(s)
    }
}

/// Geometric feature proxy for one box: coordinates, extent, area, and
/// center, each normalized by the page dimensions. Zero page dimensions are
/// unrepresentable ([`PageSize`] construction rejects them).
pub fn geometric_features(bbox: &BBox, page: PageSize) -> Vec<f64> {
    let (w, h) = (page.width, page.height);
    let (cx, cy) = bbox.center();
    vec![
        bbox.x0 / w,
        bbox.x1 / w,
        bbox.y0 / h,
        bbox.y1 / h,
        bbox.width() / w,
        bbox.height() / h,
        bbox.area() / (w * h),
        cx / w,
        cy / h,
    ]
}

/// Left-to-right processing order: ascending x-center, ties on ascending
/// y-center then id, independent of entity list order.
pub(crate) fn refinement_order(entities: &[Entity]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entities.len()).collect();
    order.sort_by(|&a, &b| {
        let (ax, ay) = entities[a].bbox.center();
        let (bx, by) = entities[b].bbox.center();
        ax.partial_cmp(&bx)
            .unwrap()
            .then(ay.partial_cmp(&by).unwrap())
            .then_with(|| entities[a].id.cmp(&entities[b].id))
    });
    order
}

/// Per-entity forward state shared by the refinement and relation heads.
pub(crate) struct ContextState {
    /// Base feature (geometry then embedding) per entity, list order.
    #[allow(dead_code)] // read by tests; backward only needs ctx and order
    pub base: Vec<Vec<f64>>,
    /// Context feature (base then left-neighbor mean) per entity, list order.
    pub ctx: Vec<Vec<f64>>,
    /// Refinement order (indices into the entity list).
    pub order: Vec<usize>,
}

/// Computes base and context features for every entity of the graph, using
/// the graph's current categories for the embedding lookup.
pub(crate) fn context_features(g: &DocumentGraph, model: &RelationModel) -> ContextState {
    let n = g.entities.len();
    let base_dim = model.dims.base();
    let mut base = vec![Vec::new(); n];
    for (i, e) in g.entities.iter().enumerate() {
        let mut v = geometric_features(&e.bbox, g.page_size);
        v.extend_from_slice(model.category_embeddings.row(model.category_index(e.category)));
        base[i] = v;
    }

    let order = refinement_order(&g.entities);
    let mut ctx = vec![Vec::new(); n];
    let mut running = vec![0.0; base_dim];
    for (k, &idx) in order.iter().enumerate() {
        let mut v = base[idx].clone();
        if k == 0 {
            v.extend(std::iter::repeat(0.0).take(base_dim));
        } else {
            v.extend(running.iter().map(|s| s / k as f64));
        }
        ctx[idx] = v;
        for (r, b) in running.iter_mut().zip(base[idx].iter()) {
            *r += b;
        }
    }
    ContextState { base, ctx, order }
}

/// Refinement logits for one context vector.
pub(crate) fn refine_logits(model: &RelationModel, ctx: &[f64]) -> Vec<f64> {
    model.refine_weights.matvec(ctx)
}

/// Re-scores every entity's category and confidence from its context
/// features. Ids, boxes, relations, and entity order are unchanged.
pub fn refine_entities(g: &DocumentGraph, model: &RelationModel) -> DocumentGraph {
    let state = context_features(g, model);
    let cats: Vec<Category> = model.categories.iter().collect();
    let mut out = g.clone();
    for (i, e) in out.entities.iter_mut().enumerate() {
        let probs = softmax(&refine_logits(model, &state.ctx[i]));
        let mut best = 0;
        for c in 1..probs.len() {
            if probs[c] > probs[best] {
                best = c;
            }
        }
        e.category = cats[best];
        e.confidence = probs[best];
    }
    out
}

/// Scored ordered entity pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub subject: EntityId,
    pub object: EntityId,
    /// Probabilities `[parent_of, followed_by, null]`, strictly positive and
    /// summing to one.
    pub probs: [f64; 3],
}

/// Relation-type logits for the pair `(s, o)` given precomputed contexts.
pub(crate) fn pair_logits(
    model: &RelationModel,
    g: &DocumentGraph,
    state: &ContextState,
    s: usize,
    o: usize,
) -> PairForward {
    let union = g.entities[s].bbox.union_box(&g.entities[o].bbox);
    let rho1 = geometric_features(&union, g.page_size);
    let mut rho2 = state.ctx[s].clone();
    rho2.extend_from_slice(&state.ctx[o]);

    let a = model.w_pair_1.matvec(&rho1);
    let b = model.w_pair_2.matvec(&rho2);
    let fused: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();
    let mut logits = model.w_pair_rel.matvec(&fused);
    let bias = model
        .bias_table
        .log_probs(g.entities[s].category, g.entities[o].category);
    for t in 0..3 {
        logits[t] += bias[t];
    }
    PairForward { rho1, rho2, a, b, fused, logits }
}

/// Intermediate pair activations kept for backpropagation.
pub(crate) struct PairForward {
    pub rho1: Vec<f64>,
    pub rho2: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub fused: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Scores every ordered pair of distinct entities. No geometric constraint
/// is applied: non-overlapping pairs are scored like any other. Results are
/// sorted by `(subject, object)` and independent of entity list order.
pub fn score_pairs(g: &DocumentGraph, model: &RelationModel) -> Vec<ScoredPair> {
    let state = context_features(g, model);
    let mut out = Vec::with_capacity(g.entities.len().saturating_sub(1) * g.entities.len());
    for s in 0..g.entities.len() {
        for o in 0..g.entities.len() {
            if s == o {
                continue;
            }
            let fwd = pair_logits(model, g, &state, s, o);
            let p = softmax(&fwd.logits);
            out.push(ScoredPair {
                subject: g.entities[s].id.clone(),
                object: g.entities[o].id.clone(),
                probs: [p[0], p[1], p[2]],
            });
        }
    }
    out.sort_by(|x, y| (&x.subject, &x.object).cmp(&(&y.subject, &y.object)));
    out
}

/// [`score_pairs`] packaged for the grammar stage.
pub fn pair_score_table(g: &DocumentGraph, model: &RelationModel) -> PairScores {
    score_pairs(g, model)
        .into_iter()
        .map(|p| (p.subject, p.object, p.probs))
        .collect()
}

/// Emits a relation for every pair whose argmax type is non-null with
/// probability above `tau`. The output replaces any existing relations and
/// may be invalid as a tree; the grammar stage repairs it.
pub fn predict_relations(g: &DocumentGraph, model: &RelationModel) -> DocumentGraph {
    let mut out = g.clone();
    out.relations.clear();
    for pair in score_pairs(g, model) {
        let mut best = 0;
        for t in 1..3 {
            if pair.probs[t] > pair.probs[best] {
                best = t;
            }
        }
        let rtype = RelationType::from_index(best);
        if rtype != RelationType::Null && pair.probs[best] > model.tau {
            out.relations.push(crate::model::Relation::new(
                pair.subject,
                pair.object,
                rtype,
                pair.probs[best],
            ));
        }
    }
    out
}

/// Full inference for one page: refinement then relation prediction.
pub fn infer_graph(g: &DocumentGraph, model: &RelationModel) -> DocumentGraph {
    let refined = refine_entities(g, model);
    predict_relations(&refined, model)
}
