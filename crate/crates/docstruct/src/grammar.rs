//! Grammar-based postprocessing: turns a possibly invalid predicted
//! [`DocumentGraph`] into a valid [`DocumentTree`].
//!
//! Three stages run in sequence:
//!
//! 1. root skeleton — add `document_root` / `meta` / `article` entities where
//!    missing,
//! 2. illegal relations — delete relations that violate the document grammar
//!    (root as child, symmetric pairs, duplicate incoming edges, multiple
//!    successors, sequences on unordered groups, cycles, non-sibling
//!    sequences), always keeping the higher-confidence side of a conflict,
//! 3. missing relations — give every parentless entity the best-scoring
//!    legal parent, falling back to a static containment ranking when no
//!    classifier scores are supplied.
//!
//! Every repair is logged in a [`RepairTrace`]; replaying the trace on the
//! input graph reproduces the output exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    BBox, Category, DocumentGraph, DocumentTree, Entity, EntityId, Relation, RelationType,
};
use crate::validation::RelationRef;

/// Options for the repair stages.
#[derive(Debug, Clone, Copy, Default)]
pub struct GrammarConfig {
    /// Strip sequential relations among the children of `unordered_group`
    /// parents as well, not only on the group entities themselves.
    pub strict_unordered_group: bool,
}

/// Per-pair relation-type probabilities from the classifier, keyed by
/// `(subject id, object id)`.
#[derive(Debug, Clone, Default)]
pub struct PairScores {
    scores: BTreeMap<(EntityId, EntityId), [f64; 3]>,
}

impl PairScores {
    pub fn insert(&mut self, subject: EntityId, object: EntityId, probs: [f64; 3]) {
        self.scores.insert((subject, object), probs);
    }

    pub fn get(&self, subject: &EntityId, object: &EntityId) -> Option<&[f64; 3]> {
        self.scores.get(&(subject.clone(), object.clone()))
    }

    pub fn parent_of(&self, subject: &EntityId, object: &EntityId) -> Option<f64> {
        self.get(subject, object)
            .map(|p| p[RelationType::ParentOf.index()])
    }
}

impl FromIterator<(EntityId, EntityId, [f64; 3])> for PairScores {
    fn from_iter<T: IntoIterator<Item = (EntityId, EntityId, [f64; 3])>>(iter: T) -> Self {
        let mut s = PairScores::default();
        for (a, b, p) in iter {
            s.insert(a, b, p);
        }
        s
    }
}

/// Repair stage identifiers, serialized with their grammar-rule names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepairStage {
    #[serde(rename = "g_rt")]
    RootSkeleton,
    #[serde(rename = "g_ilg")]
    IllegalRelations,
    #[serde(rename = "g_mis")]
    MissingRelations,
}

/// One applied repair. `kept` records the winning relation of a pairwise
/// conflict so confidence monotonicity can be audited from the trace alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RepairAction {
    AddedEntity {
        entity: Entity,
    },
    RemovedRelation {
        relation: Relation,
        #[serde(skip_serializing_if = "Option::is_none")]
        kept: Option<RelationRef>,
    },
    AddedRelation {
        relation: Relation,
    },
    /// Reserved: relations never change type or endpoints in this version.
    Retyped {
        relation: Relation,
        new_type: RelationType,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub stage: RepairStage,
    #[serde(flatten)]
    pub action: RepairAction,
}

/// Ordered log of every repair applied by [`postprocess`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RepairTrace {
    pub repairs: Vec<Repair>,
}

impl RepairTrace {
    pub fn is_empty(&self) -> bool {
        self.repairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.repairs.len()
    }

    /// Applies the logged repairs to `input`, reproducing the repaired graph.
    pub fn replay(&self, input: &DocumentGraph) -> DocumentGraph {
        let mut g = input.clone();
        for repair in &self.repairs {
            match &repair.action {
                RepairAction::AddedEntity { entity } => g.entities.push(entity.clone()),
                RepairAction::AddedRelation { relation } => g.relations.push(relation.clone()),
                RepairAction::RemovedRelation { relation, .. } => {
                    let key = relation.key();
                    g.relations.retain(|r| r.key() != key);
                }
                RepairAction::Retyped { relation, new_type } => {
                    let key = relation.key();
                    for r in &mut g.relations {
                        if r.key() == key {
                            r.rtype = *new_type;
                        }
                    }
                }
            }
        }
        g
    }

    pub fn to_canonical_json(&self) -> String {
        crate::model::to_canonical_json(self)
    }
}

fn full_page_box(g: &DocumentGraph) -> BBox {
    BBox::new(0.0, 0.0, g.page_size.width, g.page_size.height).expect("positive page")
}

/// Allocates `gen-<n>` ids, skipping any that already exist.
struct IdGen {
    taken: BTreeSet<EntityId>,
    counter: usize,
}

impl IdGen {
    fn new(g: &DocumentGraph) -> Self {
        IdGen {
            taken: g.entities.iter().map(|e| e.id.clone()).collect(),
            counter: 0,
        }
    }

    fn next(&mut self) -> EntityId {
        loop {
            let id = EntityId::new(format!("gen-{}", self.counter));
            self.counter += 1;
            if self.taken.insert(id.clone()) {
                return id;
            }
        }
    }
}

/// The document root this repair pass anchors on: the highest-confidence
/// `document_root` entity, ties broken on the smaller id.
fn canonical_root(g: &DocumentGraph) -> Option<EntityId> {
    g.entities
        .iter()
        .filter(|e| e.category == Category::DocumentRoot)
        .max_by(|a, b| {
            a.confidence
                .partial_cmp(&b.confidence)
                .unwrap()
                .then_with(|| b.id.cmp(&a.id))
        })
        .map(|e| e.id.clone())
}

fn orphan_ids(g: &DocumentGraph) -> Vec<EntityId> {
    let with_parent: BTreeSet<&EntityId> = g
        .relations_of_type(RelationType::ParentOf)
        .map(|r| &r.object)
        .collect();
    let mut ids: Vec<EntityId> = g
        .entities
        .iter()
        .filter(|e| !with_parent.contains(&e.id))
        .map(|e| e.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Stage `g_rt`: ensures the skeleton entities exist.
///
/// A `document_root` and a `meta` are added when missing (full-page boxes,
/// confidence 1). `article` entities are added only for groups of orphaned
/// content-level entities that have no article candidate: orphans connected
/// through predicted relations form one group each, and orphans with no
/// relations at all share a single page-level group.
pub fn add_root_skeleton(g: &DocumentGraph) -> (DocumentGraph, Vec<Repair>) {
    let mut out = g.clone();
    let mut repairs = Vec::new();
    let mut ids = IdGen::new(g);
    let page_box = full_page_box(g);

    let add = |out: &mut DocumentGraph, repairs: &mut Vec<Repair>, ids: &mut IdGen, cat| {
        let entity = Entity::new(ids.next(), cat, page_box, 1.0).expect("skeleton entity");
        out.entities.push(entity.clone());
        repairs.push(Repair {
            stage: RepairStage::RootSkeleton,
            action: RepairAction::AddedEntity { entity },
        });
    };

    if canonical_root(&out).is_none() {
        add(&mut out, &mut repairs, &mut ids, Category::DocumentRoot);
    }
    if !out.entities.iter().any(|e| e.category == Category::Meta) {
        add(&mut out, &mut repairs, &mut ids, Category::Meta);
    }

    // Group orphaned content entities by connectivity over the predicted
    // structural relations; singletons merge into one page-level group.
    let skeleton =
        |c: Category| matches!(c, Category::DocumentRoot | Category::Meta | Category::Article);
    let orphans: BTreeSet<EntityId> = orphan_ids(&out)
        .into_iter()
        .filter(|id| {
            let e = out.entity(id).expect("orphan resolves");
            !skeleton(e.category)
        })
        .collect();
    if orphans.is_empty() {
        return (out, repairs);
    }

    // Union-find over entity ids, edges = structural relations.
    let mut uf: BTreeMap<EntityId, EntityId> =
        out.entities.iter().map(|e| (e.id.clone(), e.id.clone())).collect();
    fn find(uf: &mut BTreeMap<EntityId, EntityId>, id: &EntityId) -> EntityId {
        let p = uf[id].clone();
        if &p == id {
            return p;
        }
        let root = find(uf, &p);
        uf.insert(id.clone(), root.clone());
        root
    }
    let mut linked: BTreeSet<EntityId> = BTreeSet::new();
    for r in &out.relations {
        if r.rtype == RelationType::Null {
            continue;
        }
        linked.insert(r.subject.clone());
        linked.insert(r.object.clone());
        let a = find(&mut uf, &r.subject);
        let b = find(&mut uf, &r.object);
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            uf.insert(hi, lo);
        }
    }

    // Component key per orphan: its union-find root, or the shared marker
    // for relation-free orphans.
    let mut groups: BTreeMap<Option<EntityId>, Vec<EntityId>> = BTreeMap::new();
    for id in &orphans {
        let key = if linked.contains(id) {
            Some(find(&mut uf, id))
        } else {
            None
        };
        groups.entry(key).or_default().push(id.clone());
    }

    let any_article = out.entities.iter().any(|e| e.category == Category::Article);
    let group_keys: Vec<Option<EntityId>> = groups.keys().cloned().collect();
    for key in group_keys {
        let covered = match &key {
            // Relation-free orphans: any existing article can take them.
            None => any_article,
            Some(component) => out.entities.iter().any(|e| {
                e.category == Category::Article
                    && linked.contains(&e.id)
                    && find(&mut uf, &e.id) == *component
            }),
        };
        if !covered {
            add(&mut out, &mut repairs, &mut ids, Category::Article);
        }
    }

    (out, repairs)
}

/// Sorts relation references for deterministic rule application.
fn rel_sort_key(r: &Relation) -> (EntityId, EntityId, usize) {
    (r.subject.clone(), r.object.clone(), r.rtype.index())
}

/// Stage `g_ilg`: deletes relations violating the document grammar, in a
/// fixed rule order. Pairwise conflicts always keep the higher-confidence
/// relation (ties keep the lexicographically smaller `(subject, object)`).
pub fn remove_illegal(g: &DocumentGraph) -> (DocumentGraph, Vec<Repair>) {
    let mut out = g.clone();
    let mut repairs = Vec::new();

    fn remove(
        out: &mut DocumentGraph,
        repairs: &mut Vec<Repair>,
        victim: &Relation,
        kept: Option<RelationRef>,
    ) {
        let key = victim.key();
        out.relations.retain(|r| r.key() != key);
        repairs.push(Repair {
            stage: RepairStage::IllegalRelations,
            action: RepairAction::RemovedRelation { relation: victim.clone(), kept },
        });
    }

    // Null relations assert no structure; drop them up front so the repaired
    // tree carries only structural edges.
    let nulls: Vec<Relation> = out.relations_of_type(RelationType::Null).cloned().collect();
    for r in nulls {
        remove(&mut out, &mut repairs, &r, None);
    }

    // (1) The root may only appear as the parent side of a relation.
    if let Some(root) = canonical_root(&out) {
        let mut illegal: Vec<Relation> = out
            .relations
            .iter()
            .filter(|r| {
                r.object == root || (r.subject == root && r.rtype == RelationType::FollowedBy)
            })
            .cloned()
            .collect();
        illegal.sort_by_key(rel_sort_key);
        for r in illegal {
            remove(&mut out, &mut repairs, &r, None);
        }
    }

    // (2) Anti-symmetry: keep only the direction of the strongest relation.
    let mut pairs: BTreeSet<(EntityId, EntityId)> = BTreeSet::new();
    for r in &out.relations {
        let (a, b) = if r.subject < r.object {
            (r.subject.clone(), r.object.clone())
        } else {
            (r.object.clone(), r.subject.clone())
        };
        pairs.insert((a, b));
    }
    for (a, b) in pairs {
        let both: Vec<Relation> = out
            .relations
            .iter()
            .filter(|r| (r.subject == a && r.object == b) || (r.subject == b && r.object == a))
            .cloned()
            .collect();
        let has_fwd = both.iter().any(|r| r.subject == a);
        let has_rev = both.iter().any(|r| r.subject == b);
        if !(has_fwd && has_rev) {
            continue;
        }
        let winner = both
            .iter()
            .max_by(|x, y| {
                x.confidence
                    .partial_cmp(&y.confidence)
                    .unwrap()
                    .then_with(|| rel_sort_key(y).cmp(&rel_sort_key(x)))
            })
            .expect("non-empty")
            .clone();
        let kept = RelationRef::new(&winner.subject, &winner.object, winner.rtype);
        let mut losers: Vec<Relation> =
            both.into_iter().filter(|r| r.subject != winner.subject).collect();
        losers.sort_by_key(rel_sort_key);
        for r in losers {
            remove(&mut out, &mut repairs, &r, Some(kept.clone()));
        }
    }

    // (3) No two same-type structural relations may end in the same entity.
    for rtype in [RelationType::ParentOf, RelationType::FollowedBy] {
        let mut by_object: BTreeMap<EntityId, Vec<Relation>> = BTreeMap::new();
        for r in out.relations_of_type(rtype) {
            by_object.entry(r.object.clone()).or_default().push(r.clone());
        }
        for (_, group) in by_object {
            if group.len() < 2 {
                continue;
            }
            let winner = group
                .iter()
                .max_by(|x, y| {
                    x.confidence
                        .partial_cmp(&y.confidence)
                        .unwrap()
                        .then_with(|| rel_sort_key(y).cmp(&rel_sort_key(x)))
                })
                .expect("non-empty")
                .clone();
            let kept = RelationRef::new(&winner.subject, &winner.object, winner.rtype);
            let mut losers: Vec<Relation> =
                group.into_iter().filter(|r| r.key() != winner.key()).collect();
            losers.sort_by_key(rel_sort_key);
            for r in losers {
                remove(&mut out, &mut repairs, &r, Some(kept.clone()));
            }
        }
    }

    // (4) At most one followed_by successor per entity.
    let mut by_subject: BTreeMap<EntityId, Vec<Relation>> = BTreeMap::new();
    for r in out.relations_of_type(RelationType::FollowedBy) {
        by_subject.entry(r.subject.clone()).or_default().push(r.clone());
    }
    for (_, group) in by_subject {
        if group.len() < 2 {
            continue;
        }
        let winner = group
            .iter()
            .max_by(|x, y| {
                x.confidence
                    .partial_cmp(&y.confidence)
                    .unwrap()
                    .then_with(|| rel_sort_key(y).cmp(&rel_sort_key(x)))
            })
            .expect("non-empty")
            .clone();
        let kept = RelationRef::new(&winner.subject, &winner.object, winner.rtype);
        let mut losers: Vec<Relation> =
            group.into_iter().filter(|r| r.key() != winner.key()).collect();
        losers.sort_by_key(rel_sort_key);
        for r in losers {
            remove(&mut out, &mut repairs, &r, Some(kept.clone()));
        }
    }

    // (5) Unordered groups take part in no sequential relation.
    let unordered: BTreeSet<EntityId> = out
        .entities
        .iter()
        .filter(|e| e.category == Category::UnorderedGroup)
        .map(|e| e.id.clone())
        .collect();
    let mut sequential: Vec<Relation> = out
        .relations_of_type(RelationType::FollowedBy)
        .filter(|r| unordered.contains(&r.subject) || unordered.contains(&r.object))
        .cloned()
        .collect();
    sequential.sort_by_key(rel_sort_key);
    for r in sequential {
        remove(&mut out, &mut repairs, &r, None);
    }

    // (6) Break cycles in the combined digraph, deleting the lowest-
    // confidence edge per detected cycle.
    while let Some(cycle_edges) = find_one_cycle(&out) {
        let victim = cycle_edges
            .iter()
            .min_by(|x, y| {
                x.confidence
                    .partial_cmp(&y.confidence)
                    .unwrap()
                    .then_with(|| rel_sort_key(x).cmp(&rel_sort_key(y)))
            })
            .expect("cycle has edges")
            .clone();
        remove(&mut out, &mut repairs, &victim, None);
    }

    // (7) Sequential relations only between siblings, for pairs whose
    // parents are already both known. Orphan endpoints are re-checked once
    // parents are completed.
    enforce_sibling_rule(&mut out, &mut repairs, false);

    (out, repairs)
}

/// Removes `followed_by` edges between entities that are provably not
/// siblings. With `require_parents`, an endpoint without a parent also
/// disqualifies the edge (the post-completion pass).
fn enforce_sibling_rule(out: &mut DocumentGraph, repairs: &mut Vec<Repair>, require_parents: bool) {
    let parent: BTreeMap<EntityId, EntityId> = out
        .relations_of_type(RelationType::ParentOf)
        .map(|r| (r.object.clone(), r.subject.clone()))
        .collect();
    let mut victims: Vec<Relation> = out
        .relations_of_type(RelationType::FollowedBy)
        .filter(|r| match (parent.get(&r.subject), parent.get(&r.object)) {
            (Some(a), Some(b)) => a != b,
            _ => require_parents,
        })
        .cloned()
        .collect();
    victims.sort_by_key(rel_sort_key);
    for r in victims {
        let key = r.key();
        out.relations.retain(|x| x.key() != key);
        repairs.push(Repair {
            stage: RepairStage::IllegalRelations,
            action: RepairAction::RemovedRelation { relation: r, kept: None },
        });
    }
}

/// Finds one cycle in the combined structural digraph, returning its edges.
/// DFS visits nodes and successors in id order, so detection is
/// deterministic.
fn find_one_cycle(g: &DocumentGraph) -> Option<Vec<Relation>> {
    let mut adj: BTreeMap<&EntityId, Vec<&Relation>> = BTreeMap::new();
    for r in &g.relations {
        if r.rtype != RelationType::Null {
            adj.entry(&r.subject).or_default().push(r);
        }
    }
    for v in adj.values_mut() {
        v.sort_by(|a, b| rel_sort_key(a).cmp(&rel_sort_key(b)));
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let mut mark: BTreeMap<&EntityId, Mark> =
        g.entities.iter().map(|e| (&e.id, Mark::White)).collect();

    fn dfs<'a>(
        node: &'a EntityId,
        adj: &BTreeMap<&'a EntityId, Vec<&'a Relation>>,
        mark: &mut BTreeMap<&'a EntityId, Mark>,
        stack: &mut Vec<&'a Relation>,
    ) -> Option<Vec<Relation>> {
        mark.insert(node, Mark::Gray);
        if let Some(edges) = adj.get(node) {
            for &edge in edges {
                match mark.get(&edge.object).copied().unwrap_or(Mark::Black) {
                    Mark::White => {
                        stack.push(edge);
                        if let Some(c) = dfs(&edge.object, adj, mark, stack) {
                            return Some(c);
                        }
                        stack.pop();
                    }
                    Mark::Gray => {
                        // Edges from the first occurrence of edge.object on
                        // the stack, plus the closing edge, form the cycle.
                        let start = stack
                            .iter()
                            .position(|r| r.subject == edge.object)
                            .unwrap_or(stack.len());
                        let mut cycle: Vec<Relation> =
                            stack[start..].iter().map(|r| (*r).clone()).collect();
                        cycle.push(edge.clone());
                        return Some(cycle);
                    }
                    Mark::Black => {}
                }
            }
        }
        mark.insert(node, Mark::Black);
        None
    }

    let mut order: Vec<&EntityId> = g.entities.iter().map(|e| &e.id).collect();
    order.sort();
    for node in order {
        if mark[node] == Mark::White {
            let mut stack = Vec::new();
            if let Some(cycle) = dfs(node, &adj, &mut mark, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Static containment plausibility for the score-free parent fallback:
/// 2 = typical nesting, 1 = acceptable container, 0 = implausible.
fn containment_plausibility(parent: Category, child: Category) -> u8 {
    use Category::*;
    match (parent, child) {
        (DocumentRoot, Article) | (DocumentRoot, Meta) | (DocumentRoot, TableOfContents) => 2,
        // The root is the universal legal fallback.
        (DocumentRoot, _) => 1,
        (Article, OrderedGroup)
        | (Article, UnorderedGroup)
        | (Article, Column)
        | (Article, Header)
        | (Article, Footer)
        | (Article, PageNr) => 2,
        (Article, _) => 1,
        (OrderedGroup | UnorderedGroup, Heading)
        | (OrderedGroup | UnorderedGroup, TextBlock)
        | (OrderedGroup | UnorderedGroup, Figure)
        | (OrderedGroup | UnorderedGroup, Itemize)
        | (OrderedGroup | UnorderedGroup, Table)
        | (OrderedGroup | UnorderedGroup, Author)
        | (OrderedGroup | UnorderedGroup, Footnote)
        | (OrderedGroup | UnorderedGroup, Column) => 2,
        (OrderedGroup | UnorderedGroup, _) => 1,
        (Figure, FigureGraphic) | (Figure, FigureCaption) => 2,
        (Figure, Figure) | (Figure, TextBlock) => 1,
        (Table, Tabular) | (Table, FigureCaption) => 2,
        (Tabular, Row) | (Tabular, Column) => 2,
        (Row, Column) | (Row, Row) | (Row, TextBlock) | (Row, Item) => 1,
        (Itemize, Item) => 2,
        (Itemize, Itemize) | (Item, Itemize) | (Item, TextBlock) => 1,
        (Column, TextBlock) | (Column, Heading) | (Column, Row) | (Column, Figure) => 1,
        (TableOfContents, Heading)
        | (TableOfContents, Item)
        | (TableOfContents, Itemize)
        | (TableOfContents, Table)
        | (TableOfContents, Tabular)
        | (TableOfContents, Row)
        | (TableOfContents, TextBlock) => 1,
        _ => 0,
    }
}

/// Stage `g_mis`: attaches every parentless non-root entity to the candidate
/// with the maximal `parent_of` score among candidates that keep the graph
/// acyclic, even when that score would not have cleared the acceptance
/// threshold. Without a score table candidates rank by category
/// plausibility, then geometric containment, then vertical distance.
pub fn complete_missing(
    g: &DocumentGraph,
    scores: Option<&PairScores>,
) -> (DocumentGraph, Vec<Repair>) {
    let mut out = g.clone();
    let mut repairs = Vec::new();
    let root = canonical_root(&out).expect("root skeleton present");

    let orphans: Vec<EntityId> =
        orphan_ids(&out).into_iter().filter(|id| *id != root).collect();

    for orphan_id in orphans {
        let orphan = out.entity(&orphan_id).expect("orphan resolves").clone();
        // Entities reachable FROM the orphan would close a cycle if chosen.
        let reachable = reachable_from(&out, &orphan_id);
        let mut candidates: Vec<Entity> = out
            .entities
            .iter()
            .filter(|e| e.id != orphan_id && !reachable.contains(&e.id))
            .cloned()
            .collect();
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        debug_assert!(
            candidates.iter().any(|c| c.id == root),
            "root is always a legal parent candidate"
        );

        let fallback_key = |c: &Entity| {
            let plaus = containment_plausibility(c.category, orphan.category);
            let containment = c.bbox.containment_of(&orphan.bbox);
            let dy = (c.bbox.center().1 - orphan.bbox.center().1).abs();
            (plaus, containment, -dy)
        };

        let best = candidates
            .iter()
            .max_by(|a, b| {
                let sa = scores.and_then(|s| s.parent_of(&a.id, &orphan_id)).unwrap_or(-1.0);
                let sb = scores.and_then(|s| s.parent_of(&b.id, &orphan_id)).unwrap_or(-1.0);
                sa.partial_cmp(&sb)
                    .unwrap()
                    .then_with(|| {
                        fallback_key(a).partial_cmp(&fallback_key(b)).unwrap()
                    })
                    .then_with(|| b.id.cmp(&a.id))
            })
            .expect("root candidate always exists");

        let confidence = scores
            .and_then(|s| s.parent_of(&best.id, &orphan_id))
            .unwrap_or(1.0)
            .clamp(0.0, 1.0);
        let relation =
            Relation::new(best.id.clone(), orphan_id.clone(), RelationType::ParentOf, confidence);
        out.relations.push(relation.clone());
        repairs.push(Repair {
            stage: RepairStage::MissingRelations,
            action: RepairAction::AddedRelation { relation },
        });
    }

    // Parents are now complete; settle the sibling rule definitively.
    enforce_sibling_rule(&mut out, &mut repairs, true);

    (out, repairs)
}

/// Ids reachable from `start` along structural relations.
fn reachable_from(g: &DocumentGraph, start: &EntityId) -> BTreeSet<EntityId> {
    let mut adj: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    for r in &g.relations {
        if r.rtype != RelationType::Null {
            adj.entry(&r.subject).or_default().push(&r.object);
        }
    }
    let mut seen: BTreeSet<EntityId> = BTreeSet::new();
    let mut stack = vec![start.clone()];
    while let Some(node) = stack.pop() {
        if !seen.insert(node.clone()) {
            continue;
        }
        if let Some(nexts) = adj.get(&node) {
            for n in nexts {
                if !seen.contains(*n) {
                    stack.push((*n).clone());
                }
            }
        }
    }
    seen
}

/// Removes sequential relations among children of unordered groups (the
/// strict variant of the unordered-group rule).
fn strip_unordered_children_sequences(out: &mut DocumentGraph, repairs: &mut Vec<Repair>) {
    let parent: BTreeMap<EntityId, EntityId> = out
        .relations_of_type(RelationType::ParentOf)
        .map(|r| (r.object.clone(), r.subject.clone()))
        .collect();
    let unordered: BTreeSet<&EntityId> = out
        .entities
        .iter()
        .filter(|e| e.category == Category::UnorderedGroup)
        .map(|e| &e.id)
        .collect();
    let mut victims: Vec<Relation> = out
        .relations_of_type(RelationType::FollowedBy)
        .filter(|r| {
            [&r.subject, &r.object]
                .iter()
                .any(|end| parent.get(*end).map(|p| unordered.contains(p)).unwrap_or(false))
        })
        .cloned()
        .collect();
    victims.sort_by_key(rel_sort_key);
    for r in victims {
        let key = r.key();
        out.relations.retain(|x| x.key() != key);
        repairs.push(Repair {
            stage: RepairStage::IllegalRelations,
            action: RepairAction::RemovedRelation { relation: r, kept: None },
        });
    }
}

/// Full repair pipeline: root skeleton, illegal-relation removal, missing-
/// relation completion. The output always satisfies every tree invariant
/// (for inputs with at most one `document_root` entity), and repeating the
/// pass on the output changes nothing.
pub fn postprocess(
    g: &DocumentGraph,
    scores: Option<&PairScores>,
    config: GrammarConfig,
) -> (DocumentTree, RepairTrace) {
    let (g1, mut repairs) = add_root_skeleton(g);
    let (g2, r2) = remove_illegal(&g1);
    repairs.extend(r2);
    let (mut g3, r3) = complete_missing(&g2, scores);
    repairs.extend(r3);
    if config.strict_unordered_group {
        strip_unordered_children_sequences(&mut g3, &mut repairs);
    }

    let root = canonical_root(&g3).expect("root present after skeleton stage");
    let tree = DocumentTree { graph: g3, root };
    (tree, RepairTrace { repairs })
}

/// [`postprocess`] with default configuration and no score table.
pub fn postprocess_default(g: &DocumentGraph) -> (DocumentTree, RepairTrace) {
    postprocess(g, None, GrammarConfig::default())
}
