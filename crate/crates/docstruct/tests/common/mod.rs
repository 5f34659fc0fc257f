//! Shared generators and independent oracles for the integration suites.
//!
//! The oracles reimplement the checked behavior from scratch (rasterization,
//! exhaustive assignment, explicit triple enumeration) and never call the
//! code paths they verify.

#![allow(dead_code)] // each integration test binary uses a subset

use docstruct::hocr::Word;
use docstruct::model::{
    BBox, Category, DocumentGraph, DocumentTree, Entity, EntityId, PageSize, Relation,
    RelationType,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
    BBox::new(x0, y0, x1, y1).unwrap()
}

pub fn ent(id: &str, cat: Category, bbox: BBox, conf: f64) -> Entity {
    Entity::new(id, cat, bbox, conf).unwrap()
}

// ---------------------------------------------------------------------------
// Oracles

/// IoU by unit-cell rasterization; exact on integer boxes.
pub fn rasterized_iou(a: &BBox, b: &BBox) -> f64 {
    let cell_count =
        |x0: i64, y0: i64, x1: i64, y1: i64| (x1 - x0).max(0) * (y1 - y0).max(0);
    let (ax0, ay0, ax1, ay1) = (a.x0 as i64, a.y0 as i64, a.x1 as i64, a.y1 as i64);
    let (bx0, by0, bx1, by1) = (b.x0 as i64, b.y0 as i64, b.x1 as i64, b.y1 as i64);
    let mut inter = 0i64;
    for x in ax0.max(bx0)..ax1.min(bx1) {
        for y in ay0.max(by0)..ay1.min(by1) {
            let in_a = x >= ax0 && x < ax1 && y >= ay0 && y < ay1;
            let in_b = x >= bx0 && x < bx1 && y >= by0 && y < by1;
            if in_a && in_b {
                inter += 1;
            }
        }
    }
    let union = cell_count(ax0, ay0, ax1, ay1) + cell_count(bx0, by0, bx1, by1) - inter;
    if union <= 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Exhaustive optimal one-to-one assignment value: (matched count, total
/// IoU) maximized in that order, same-category pairs above the threshold
/// only.
pub fn exhaustive_assignment(pred: &[Entity], gt: &[Entity], threshold: f64) -> (usize, f64) {
    fn overlap(a: &BBox, b: &BBox) -> f64 {
        let ix = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
        let iy = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
        let inter = ix * iy;
        let union = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
    fn go(
        gi: usize,
        gt: &[Entity],
        pred: &[Entity],
        threshold: f64,
        taken: &mut Vec<bool>,
    ) -> (usize, f64) {
        if gi == gt.len() {
            return (0, 0.0);
        }
        let mut best = go(gi + 1, gt, pred, threshold, taken);
        for (pi, p) in pred.iter().enumerate() {
            if taken[pi] || p.category != gt[gi].category {
                continue;
            }
            let v = overlap(&p.bbox, &gt[gi].bbox);
            if v <= threshold {
                continue;
            }
            taken[pi] = true;
            let (c, s) = go(gi + 1, gt, pred, threshold, taken);
            taken[pi] = false;
            if c + 1 > best.0 || (c + 1 == best.0 && s + v > best.1) {
                best = (c + 1, s + v);
            }
        }
        best
    }
    let mut taken = vec![false; pred.len()];
    go(0, gt, pred, threshold, &mut taken)
}

/// Brute-force strict triple scores: the entity matching is recomputed
/// exhaustively, then ground-truth triples are consumed by explicit scan.
pub fn brute_force_triple_scores(
    pred: &DocumentGraph,
    gt: &DocumentGraph,
    threshold: f64,
) -> (usize, usize, usize) {
    fn overlap(a: &BBox, b: &BBox) -> f64 {
        let ix = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
        let iy = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
        let inter = ix * iy;
        let union = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
    // Enumerate every injective assignment, keep the lexicographically
    // smallest among the (count, total IoU) maxima for determinism.
    fn enumerate(
        gi: usize,
        gt: &[Entity],
        pred: &[Entity],
        threshold: f64,
        taken: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        best: &mut (usize, f64, Vec<(usize, usize)>),
    ) {
        if gi == gt.len() {
            let count = current.len();
            let total: f64 = current
                .iter()
                .map(|(g, p)| overlap(&pred[*p].bbox, &gt[*g].bbox))
                .sum();
            let better = count > best.0
                || (count == best.0 && total > best.1 + 1e-12)
                || (count == best.0 && (total - best.1).abs() <= 1e-12 && *current < best.2);
            if better {
                *best = (count, total, current.clone());
            }
            return;
        }
        enumerate(gi + 1, gt, pred, threshold, taken, current, best);
        for (pi, p) in pred.iter().enumerate() {
            if taken[pi] || p.category != gt[gi].category {
                continue;
            }
            if overlap(&p.bbox, &gt[gi].bbox) <= threshold {
                continue;
            }
            taken[pi] = true;
            current.push((gi, pi));
            enumerate(gi + 1, gt, pred, threshold, taken, current, best);
            current.pop();
            taken[pi] = false;
        }
    }
    let mut taken = vec![false; pred.entities.len()];
    let mut current = Vec::new();
    let mut best = (0usize, 0.0f64, Vec::new());
    enumerate(0, &gt.entities, &pred.entities, threshold, &mut taken, &mut current, &mut best);
    let map: BTreeMap<&EntityId, &EntityId> = best
        .2
        .iter()
        .map(|(g, p)| (&pred.entities[*p].id, &gt.entities[*g].id))
        .collect();

    let gt_triples: Vec<(&EntityId, &EntityId, RelationType)> = gt
        .relations
        .iter()
        .filter(|r| r.rtype != RelationType::Null)
        .map(|r| (&r.subject, &r.object, r.rtype))
        .collect();
    let mut pred_triples: Vec<(&EntityId, &EntityId, RelationType)> = pred
        .relations
        .iter()
        .filter(|r| r.rtype != RelationType::Null)
        .map(|r| (&r.subject, &r.object, r.rtype))
        .collect();
    pred_triples.sort();
    let mut used = vec![false; gt_triples.len()];
    let mut matched = 0usize;
    for (s, o, t) in &pred_triples {
        let (Some(ms), Some(mo)) = (map.get(s), map.get(o)) else { continue };
        for (i, (gs, go, gtp)) in gt_triples.iter().enumerate() {
            if !used[i] && gs == ms && go == mo && gtp == t {
                used[i] = true;
                matched += 1;
                break;
            }
        }
    }
    (matched, pred_triples.len(), gt_triples.len())
}

// ---------------------------------------------------------------------------
// Random graph generators

/// Realistic jittered detection instance: mostly disjoint ground truth plus
/// perturbed and spurious predictions.
pub fn jittered_instance(
    rng: &mut ChaCha8Rng,
    max_gt: usize,
    max_pred: usize,
) -> (Vec<Entity>, Vec<Entity>) {
    let n_gt = rng.gen_range(0..=max_gt);
    let cats = [Category::TextBlock, Category::Figure, Category::Heading];
    let mut gt = Vec::new();
    for i in 0..n_gt {
        let col = i % 2;
        let row = i / 2;
        let x0 = 15.0 + 70.0 * col as f64 + rng.gen_range(-5.0..5.0);
        let y0 = 12.0 + 45.0 * row as f64 + rng.gen_range(-5.0..5.0);
        gt.push(ent(
            &format!("g{i}"),
            cats[rng.gen_range(0..cats.len())],
            bb(x0, y0, x0 + rng.gen_range(25.0..55.0), y0 + rng.gen_range(16.0..32.0)),
            1.0,
        ));
    }
    let n_pred = rng.gen_range(0..=max_pred);
    let mut pred = Vec::new();
    for i in 0..n_pred {
        let conf = rng.gen_range(0.05..1.0);
        if !gt.is_empty() && rng.gen_bool(0.7) {
            let src = &gt[rng.gen_range(0..gt.len())];
            let j = 4.0;
            let x0 = (src.bbox.x0 + rng.gen_range(-j..j)).max(0.0);
            let y0 = (src.bbox.y0 + rng.gen_range(-j..j)).max(0.0);
            let x1 = (src.bbox.x1 + rng.gen_range(-j..j)).max(x0 + 1.0);
            let y1 = (src.bbox.y1 + rng.gen_range(-j..j)).max(y0 + 1.0);
            pred.push(ent(&format!("p{i}"), src.category, bb(x0, y0, x1, y1), conf));
        } else {
            let x0 = rng.gen_range(0.0..150.0);
            let y0 = rng.gen_range(0.0..150.0);
            pred.push(ent(
                &format!("p{i}"),
                cats[rng.gen_range(0..cats.len())],
                bb(x0, y0, x0 + rng.gen_range(5.0..45.0), y0 + rng.gen_range(5.0..30.0)),
                conf,
            ));
        }
    }
    (pred, gt)
}

/// Random possibly-invalid predicted graph (fuzz input for the grammar).
pub fn fuzz_graph(rng: &mut ChaCha8Rng, max_entities: usize, max_relations: usize) -> DocumentGraph {
    let page = PageSize::new(1000.0, 1400.0).unwrap();
    let n = rng.gen_range(0..=max_entities);
    let cats: Vec<Category> = Category::ALL
        .iter()
        .copied()
        .filter(|c| *c != Category::DocumentRoot)
        .collect();
    let mut entities = Vec::new();
    if n > 0 && rng.gen_bool(0.7) {
        entities.push(ent("e0", Category::DocumentRoot, bb(0.0, 0.0, 1000.0, 1400.0), rng.gen_range(0.5..1.0)));
    }
    while entities.len() < n {
        let i = entities.len();
        let x0 = rng.gen_range(0.0..900.0);
        let y0 = rng.gen_range(0.0..1300.0);
        let w = rng.gen_range(1.0..(1000.0 - x0));
        let h = rng.gen_range(1.0..(1400.0 - y0));
        entities.push(ent(
            &format!("e{i}"),
            cats[rng.gen_range(0..cats.len())],
            bb(x0, y0, x0 + w, y0 + h),
            rng.gen_range(0.0..1.0),
        ));
    }
    let mut relations: Vec<Relation> = Vec::new();
    let mut keys = BTreeSet::new();
    if entities.len() >= 2 {
        for _ in 0..rng.gen_range(0..=max_relations) {
            let a = rng.gen_range(0..entities.len());
            let mut b = rng.gen_range(0..entities.len());
            if a == b {
                b = (b + 1) % entities.len();
            }
            let rtype = match rng.gen_range(0..10) {
                0 => RelationType::Null,
                1..=5 => RelationType::ParentOf,
                _ => RelationType::FollowedBy,
            };
            let rel = Relation::new(
                entities[a].id.clone(),
                entities[b].id.clone(),
                rtype,
                rng.gen_range(0.0..1.0),
            );
            if keys.insert(rel.key()) {
                relations.push(rel);
            }
        }
    }
    DocumentGraph::new(page, entities, relations).unwrap()
}

// ---------------------------------------------------------------------------
// Synthetic learnable corpus (relations = category pair + containment)

/// One synthetic magazine page. Relations are a deterministic function of
/// the category pair plus geometry: the article parents what it contains,
/// groups parent their contents, headings are followed by the block directly
/// below, blocks chain downward, figures parent their graphic and caption.
pub fn learnable_page(id_prefix: &str, rng: &mut ChaCha8Rng) -> DocumentGraph {
    let page = PageSize::new(1000.0, 1400.0).unwrap();
    let dx = rng.gen_range(0.0..60.0_f64).round();
    let with_figure = rng.gen_bool(0.5);
    let n_blocks = rng.gen_range(2..=3usize);

    let mut entities = vec![
        ent(&format!("{id_prefix}root"), Category::DocumentRoot, bb(0.0, 0.0, 1000.0, 1400.0), 1.0),
        ent(&format!("{id_prefix}art"), Category::Article, bb(16.0 + dx, 40.0, 980.0, 1380.0), 1.0),
        ent(&format!("{id_prefix}h"), Category::Heading, bb(40.0 + dx, 60.0, 700.0 + dx, 110.0), 1.0),
    ];
    let mut relations = vec![
        Relation::new(format!("{id_prefix}root"), format!("{id_prefix}art"), RelationType::ParentOf, 1.0),
        Relation::new(format!("{id_prefix}art"), format!("{id_prefix}h"), RelationType::ParentOf, 1.0),
    ];
    let mut prev = format!("{id_prefix}h");
    let mut y = 130.0;
    for b in 0..n_blocks {
        let tb = format!("{id_prefix}t{b}");
        let height = rng.gen_range(150.0..280.0_f64).round();
        entities.push(ent(&tb, Category::TextBlock, bb(40.0 + dx, y, 700.0 + dx, y + height), 1.0));
        relations.push(Relation::new(
            format!("{id_prefix}art"),
            tb.clone(),
            RelationType::ParentOf,
            1.0,
        ));
        relations.push(Relation::new(prev.clone(), tb.clone(), RelationType::FollowedBy, 1.0));
        prev = tb;
        y += height + 20.0;
    }
    if with_figure {
        let f = format!("{id_prefix}f");
        let fg = format!("{id_prefix}fg");
        let fc = format!("{id_prefix}fc");
        let fy = (y + 20.0).min(1100.0);
        entities.push(ent(&f, Category::Figure, bb(80.0 + dx, fy, 640.0 + dx, fy + 260.0), 1.0));
        entities.push(ent(&fg, Category::FigureGraphic, bb(90.0 + dx, fy + 10.0, 630.0 + dx, fy + 190.0), 1.0));
        entities.push(ent(&fc, Category::FigureCaption, bb(100.0 + dx, fy + 200.0, 620.0 + dx, fy + 250.0), 1.0));
        relations.push(Relation::new(format!("{id_prefix}art"), f.clone(), RelationType::ParentOf, 1.0));
        relations.push(Relation::new(f.clone(), fg, RelationType::ParentOf, 1.0));
        relations.push(Relation::new(f.clone(), fc, RelationType::ParentOf, 1.0));
        relations.push(Relation::new(prev.clone(), f, RelationType::FollowedBy, 1.0));
    }
    DocumentGraph::new(page, entities, relations).unwrap()
}

pub fn learnable_corpus(n: usize, seed: u64) -> Vec<DocumentGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| learnable_page(&format!("d{i}-"), &mut rng)).collect()
}

// ---------------------------------------------------------------------------
// Random valid trees with words (integer geometry, exact round trips)

pub struct TreeWithWords {
    pub tree: DocumentTree,
    pub words: Vec<Word>,
}

/// Random valid tree: plausible parent-child categories, nested integer
/// boxes, partial reading-order chains, words inside some leaves.
pub fn random_valid_tree(rng: &mut ChaCha8Rng) -> TreeWithWords {
    let page = PageSize::new(1000.0, 1400.0).unwrap();
    let mut entities = vec![
        ent("root", Category::DocumentRoot, bb(0.0, 0.0, 1000.0, 1400.0), 1.0),
        ent("meta", Category::Meta, bb(0.0, 0.0, 1000.0, 30.0), 1.0),
        ent("art", Category::Article, bb(10.0, 40.0, 990.0, 1390.0), 1.0),
    ];
    let mut relations = vec![
        Relation::new("root", "meta", RelationType::ParentOf, 1.0),
        Relation::new("root", "art", RelationType::ParentOf, 1.0),
    ];

    // Containers that may still take children: (id, bbox, category, depth)
    let mut containers: Vec<(EntityId, BBox, Category)> =
        vec![(EntityId::new("art"), bb(10.0, 40.0, 990.0, 1390.0), Category::Article)];
    let n_extra = rng.gen_range(0..=12usize);
    let mut children_of: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for i in 0..n_extra {
        let (parent_id, parent_box, parent_cat) =
            containers[rng.gen_range(0..containers.len())].clone();
        let menu: &[Category] = match parent_cat {
            Category::Article => &[
                Category::OrderedGroup,
                Category::UnorderedGroup,
                Category::Heading,
                Category::TextBlock,
                Category::Figure,
                Category::Itemize,
            ],
            Category::OrderedGroup | Category::UnorderedGroup => &[
                Category::Heading,
                Category::TextBlock,
                Category::Figure,
                Category::Itemize,
            ],
            Category::Figure => &[Category::FigureGraphic, Category::FigureCaption],
            Category::Itemize => &[Category::Item],
            _ => &[Category::TextBlock],
        };
        let cat = menu[rng.gen_range(0..menu.len())];
        // Integer sub-box strictly inside the parent.
        let px0 = parent_box.x0 as i64;
        let py0 = parent_box.y0 as i64;
        let px1 = parent_box.x1 as i64;
        let py1 = parent_box.y1 as i64;
        if px1 - px0 < 12 || py1 - py0 < 12 {
            continue;
        }
        let x0 = rng.gen_range(px0 + 1..px1 - 10);
        let y0 = rng.gen_range(py0 + 1..py1 - 10);
        let x1 = rng.gen_range(x0 + 4..=(px1 - 1).min(x0 + 400));
        let y1 = rng.gen_range(y0 + 4..=(py1 - 1).min(y0 + 300));
        let id = EntityId::new(format!("n{i}"));
        let child_box = bb(x0 as f64, y0 as f64, x1 as f64, y1 as f64);
        entities.push(ent(id.as_str(), cat, child_box, rounded_conf(rng)));
        relations.push(Relation::new(
            parent_id.clone(),
            id.clone(),
            RelationType::ParentOf,
            rounded_conf(rng),
        ));
        children_of.entry(parent_id.clone()).or_default().push(id.clone());
        if matches!(
            cat,
            Category::OrderedGroup | Category::UnorderedGroup | Category::Figure | Category::Itemize
        ) {
            containers.push((id, child_box, cat));
        }
    }

    // Partial chains among siblings; unordered_group entities stay out of
    // sequential relations.
    let cat_of: BTreeMap<&EntityId, Category> =
        entities.iter().map(|e| (&e.id, e.category)).collect();
    for (_, kids) in &children_of {
        let eligible: Vec<&EntityId> = kids
            .iter()
            .filter(|k| cat_of[*k] != Category::UnorderedGroup)
            .collect();
        if eligible.len() >= 2 && rng.gen_bool(0.7) {
            let chain_len = rng.gen_range(2..=eligible.len());
            for w in eligible[..chain_len].windows(2) {
                relations.push(Relation::new(
                    (*w[0]).clone(),
                    (*w[1]).clone(),
                    RelationType::FollowedBy,
                    rounded_conf(rng),
                ));
            }
        }
    }

    let graph = DocumentGraph::new(page, entities, relations).unwrap();
    let tree = DocumentTree::from_graph(graph).expect("generator builds valid trees");

    // Words inside leaf boxes, listed in document order. Leaf boxes may
    // overlap, so only keep a word when its intended leaf strictly wins the
    // overlap contest; otherwise the engine's reassignment would permute the
    // word list and the exact round-trip identity would not be well posed.
    fn plain_iou(a: &BBox, b: &BBox) -> f64 {
        let ix = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
        let iy = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
        let inter = ix * iy;
        let union = a.area() + b.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
    let mut words = Vec::new();
    let doc = docstruct::hocr::HocrDocument::build(tree.clone(), vec![]).unwrap();
    let leaf_set: BTreeSet<EntityId> = tree.leaf_ids().into_iter().collect();
    let leaf_boxes: Vec<(EntityId, BBox)> = doc
        .nodes()
        .iter()
        .filter_map(|n| {
            let id = n.entity_id.clone()?;
            leaf_set.contains(&id).then_some((id, n.bbox))
        })
        .collect();
    for (leaf_id, b) in &leaf_boxes {
        if (b.x1 - b.x0) < 12.0 || (b.y1 - b.y0) < 8.0 {
            continue;
        }
        for w in 0..rng.gen_range(0..4usize) {
            let x0 = rng.gen_range(b.x0 as i64..b.x1 as i64 - 6);
            let y0 = rng.gen_range(b.y0 as i64..b.y1 as i64 - 4);
            let x1 = rng.gen_range(x0 + 2..=(b.x1 as i64 - 1).min(x0 + 80));
            let y1 = rng.gen_range(y0 + 2..=(b.y1 as i64 - 1).min(y0 + 24));
            let wb = bb(x0 as f64, y0 as f64, x1 as f64, y1 as f64);
            let own = plain_iou(&wb, b);
            let unambiguous = leaf_boxes
                .iter()
                .all(|(other, ob)| other == leaf_id || plain_iou(&wb, ob) < own);
            if unambiguous {
                words.push(
                    Word::new(format!("w{}x{}", w, rng.gen_range(0..100000)), wb).unwrap(),
                );
            }
        }
    }
    TreeWithWords { tree, words }
}

/// Random confidence from a coarse grid (keeps JSON short; any f64 would
/// round-trip regardless).
fn rounded_conf(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(1..=64) as f64 / 64.0
}

// ---------------------------------------------------------------------------
// Reconstruction of the published example document

/// Magazine page holding a table of contents row, two headings, and a
/// biography block, with the word content the published example queries
/// return.
pub fn example_magazine_doc() -> docstruct::hocr::HocrDocument {
    let page = PageSize::new(1000.0, 1400.0).unwrap();
    let entities = vec![
        ent("root", Category::DocumentRoot, bb(0.0, 0.0, 1000.0, 1400.0), 1.0),
        ent("meta", Category::Meta, bb(0.0, 0.0, 1000.0, 30.0), 1.0),
        ent("art", Category::Article, bb(10.0, 40.0, 990.0, 1390.0), 1.0),
        // table of contents block: table -> tabular -> row -> row
        ent("tbl", Category::Table, bb(40.0, 60.0, 900.0, 360.0), 1.0),
        ent("tabular", Category::Tabular, bb(50.0, 70.0, 890.0, 350.0), 1.0),
        ent("rowgrp", Category::Row, bb(60.0, 80.0, 880.0, 340.0), 1.0),
        ent("row-dip", Category::Row, bb(70.0, 90.0, 870.0, 130.0), 1.0),
        // first article part
        ent("og1", Category::OrderedGroup, bb(40.0, 400.0, 900.0, 700.0), 1.0),
        ent("h1", Category::Heading, bb(50.0, 410.0, 700.0, 460.0), 1.0),
        // second article part: biography
        ent("og2", Category::OrderedGroup, bb(40.0, 740.0, 900.0, 1300.0), 1.0),
        ent("h2", Category::Heading, bb(50.0, 750.0, 700.0, 800.0), 1.0),
        ent("tb1", Category::TextBlock, bb(50.0, 820.0, 700.0, 1280.0), 1.0),
    ];
    let relations = vec![
        Relation::new("root", "meta", RelationType::ParentOf, 1.0),
        Relation::new("root", "art", RelationType::ParentOf, 1.0),
        Relation::new("art", "tbl", RelationType::ParentOf, 1.0),
        Relation::new("tbl", "tabular", RelationType::ParentOf, 1.0),
        Relation::new("tabular", "rowgrp", RelationType::ParentOf, 1.0),
        Relation::new("rowgrp", "row-dip", RelationType::ParentOf, 1.0),
        Relation::new("art", "og1", RelationType::ParentOf, 1.0),
        Relation::new("og1", "h1", RelationType::ParentOf, 1.0),
        Relation::new("art", "og2", RelationType::ParentOf, 1.0),
        Relation::new("og2", "h2", RelationType::ParentOf, 1.0),
        Relation::new("og2", "tb1", RelationType::ParentOf, 1.0),
        Relation::new("h2", "tb1", RelationType::FollowedBy, 1.0),
    ];
    let graph = DocumentGraph::new(page, entities, relations).unwrap();
    let tree = DocumentTree::from_graph(graph).unwrap();
    let words = vec![
        Word::new("Institutionen,", bb(75.0, 95.0, 240.0, 125.0)).unwrap(),
        Word::new("Kurse,", bb(250.0, 95.0, 360.0, 125.0)).unwrap(),
        Word::new("Diplome,", bb(370.0, 95.0, 520.0, 125.0)).unwrap(),
        Word::new("XII", bb(800.0, 95.0, 860.0, 125.0)).unwrap(),
        Word::new("Das Wallis im Profil", bb(55.0, 415.0, 640.0, 455.0)).unwrap(),
        Word::new("Biographie", bb(55.0, 755.0, 230.0, 795.0)).unwrap(),
        Word::new("-", bb(240.0, 755.0, 255.0, 795.0)).unwrap(),
        Word::new("Bibliographie", bb(265.0, 755.0, 470.0, 795.0)).unwrap(),
        Word::new("Maurice", bb(480.0, 755.0, 600.0, 795.0)).unwrap(),
        Word::new("Chappaz", bb(610.0, 755.0, 698.0, 795.0)).unwrap(),
        Word::new("Geboren", bb(55.0, 830.0, 180.0, 860.0)).unwrap(),
        Word::new("am", bb(190.0, 830.0, 230.0, 860.0)).unwrap(),
        Word::new("21.12.191", bb(240.0, 830.0, 380.0, 860.0)).unwrap(),
        Word::new("6", bb(382.0, 830.0, 395.0, 860.0)).unwrap(),
        Word::new("in", bb(405.0, 830.0, 430.0, 860.0)).unwrap(),
        Word::new("Martigny", bb(440.0, 830.0, 570.0, 860.0)).unwrap(),
        Word::new("VS", bb(580.0, 830.0, 620.0, 860.0)).unwrap(),
    ];
    docstruct::hocr::HocrDocument::build(tree, words).unwrap()
}
