//! Tree-validity checking and sibling ordering.
//!
//! [`validate_tree`] never fails: malformed graphs yield violation
//! descriptors, not errors, and an empty report means every tree invariant
//! holds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    Category, DocumentGraph, DocumentTree, EntityId, ModelError, Relation, RelationType,
};

/// Options controlling optional validity rules.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationConfig {
    /// Also forbid `followed_by` among the children of an `unordered_group`
    /// parent, not just on the group entity itself.
    pub strict_unordered_group: bool,
}

/// `(subject, object, type)` reference to a relation, for reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationRef {
    pub subject: EntityId,
    pub object: EntityId,
    pub rtype: RelationType,
}

impl RelationRef {
    pub fn new(subject: &EntityId, object: &EntityId, rtype: RelationType) -> Self {
        RelationRef {
            subject: subject.clone(),
            object: object.clone(),
            rtype,
        }
    }
}

/// One violated tree invariant, with the offending entity/relation ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// No entity with category `document_root`.
    MissingRoot,
    /// More than one `document_root` entity.
    MultipleRoots { ids: Vec<EntityId> },
    /// The root is the object of a `parent_of` relation.
    RootHasParent { relation: RelationRef },
    /// A non-root entity has no incoming `parent_of` relation.
    MissingParent { entity: EntityId },
    /// A non-root entity has more than one incoming `parent_of` relation.
    MultipleParents { entity: EntityId, parents: Vec<EntityId> },
    /// `parent_of` edges form a cycle (listed in edge order).
    ParentCycle { cycle: Vec<EntityId> },
    /// Two relations connect the same pair in opposite directions.
    SymmetricPair { first: RelationRef, second: RelationRef },
    /// A `followed_by` relation connects entities with different parents.
    NotSiblings { relation: RelationRef },
    /// An entity has more than one `followed_by` successor.
    MultipleSuccessors { entity: EntityId, successors: Vec<EntityId> },
    /// An entity has more than one `followed_by` predecessor.
    MultiplePredecessors { entity: EntityId, predecessors: Vec<EntityId> },
    /// `followed_by` edges among siblings form a cycle.
    SequenceCycle { cycle: Vec<EntityId> },
    /// An `unordered_group` entity participates in a sequential relation.
    UnorderedGroupInSequence { relation: RelationRef },
    /// Strict variant: a child of an `unordered_group` participates in a
    /// sequential relation.
    UnorderedGroupChildInSequence { relation: RelationRef },
}

impl Violation {
    /// Deterministic sort key: primary entity id, then relation, then kind.
    fn sort_key(&self) -> (String, String, u8) {
        let rel_key = |r: &RelationRef| {
            format!("{}\u{1}{}\u{1}{}", r.subject, r.object, r.rtype.index())
        };
        match self {
            Violation::MissingRoot => (String::new(), String::new(), 0),
            Violation::MultipleRoots { ids } => {
                (ids.first().map(|i| i.0.clone()).unwrap_or_default(), String::new(), 1)
            }
            Violation::RootHasParent { relation } => {
                (relation.object.0.clone(), rel_key(relation), 2)
            }
            Violation::MissingParent { entity } => (entity.0.clone(), String::new(), 3),
            Violation::MultipleParents { entity, .. } => (entity.0.clone(), String::new(), 4),
            Violation::ParentCycle { cycle } => {
                (cycle.first().map(|i| i.0.clone()).unwrap_or_default(), String::new(), 5)
            }
            Violation::SymmetricPair { first, .. } => {
                (first.subject.0.clone(), rel_key(first), 6)
            }
            Violation::NotSiblings { relation } => {
                (relation.subject.0.clone(), rel_key(relation), 7)
            }
            Violation::MultipleSuccessors { entity, .. } => (entity.0.clone(), String::new(), 8),
            Violation::MultiplePredecessors { entity, .. } => (entity.0.clone(), String::new(), 9),
            Violation::SequenceCycle { cycle } => {
                (cycle.first().map(|i| i.0.clone()).unwrap_or_default(), String::new(), 10)
            }
            Violation::UnorderedGroupInSequence { relation } => {
                (relation.subject.0.clone(), rel_key(relation), 11)
            }
            Violation::UnorderedGroupChildInSequence { relation } => {
                (relation.subject.0.clone(), rel_key(relation), 12)
            }
        }
    }
}

/// Result of validating a graph against the tree invariants.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has<F: Fn(&Violation) -> bool>(&self, pred: F) -> bool {
        self.violations.iter().any(pred)
    }
}

/// Checks every [`DocumentTree`] invariant with the default configuration.
pub fn validate_tree(g: &DocumentGraph) -> ValidationReport {
    validate_tree_with(g, ValidationConfig::default())
}

/// Checks every tree invariant, listing each violation with the offending
/// ids, in deterministic order.
pub fn validate_tree_with(g: &DocumentGraph, config: ValidationConfig) -> ValidationReport {
    let mut out = Vec::new();

    let category: BTreeMap<&EntityId, Category> =
        g.entities.iter().map(|e| (&e.id, e.category)).collect();

    // Root existence and uniqueness.
    let mut roots: Vec<&EntityId> = g
        .entities
        .iter()
        .filter(|e| e.category == Category::DocumentRoot)
        .map(|e| &e.id)
        .collect();
    roots.sort();
    let root: Option<&EntityId> = match roots.len() {
        0 => {
            out.push(Violation::MissingRoot);
            None
        }
        1 => Some(roots[0]),
        _ => {
            out.push(Violation::MultipleRoots {
                ids: roots.iter().map(|&r| r.clone()).collect(),
            });
            Some(roots[0])
        }
    };

    // Parent degrees.
    let mut parents: BTreeMap<&EntityId, Vec<&Relation>> = BTreeMap::new();
    for r in g.relations_of_type(RelationType::ParentOf) {
        parents.entry(&r.object).or_default().push(r);
    }
    for e in &g.entities {
        let incoming = parents.get(&e.id).map(|v| v.as_slice()).unwrap_or(&[]);
        if Some(&e.id) == root {
            for r in incoming {
                out.push(Violation::RootHasParent {
                    relation: RelationRef::new(&r.subject, &r.object, r.rtype),
                });
            }
            continue;
        }
        match incoming.len() {
            0 => out.push(Violation::MissingParent { entity: e.id.clone() }),
            1 => {}
            _ => {
                let mut ps: Vec<EntityId> =
                    incoming.iter().map(|r| r.subject.clone()).collect();
                ps.sort();
                out.push(Violation::MultipleParents { entity: e.id.clone(), parents: ps });
            }
        }
    }

    // Cycles in the parent_of digraph (edges parent -> child).
    let children_adj: BTreeMap<&EntityId, Vec<&EntityId>> = {
        let mut m: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
        for r in g.relations_of_type(RelationType::ParentOf) {
            m.entry(&r.subject).or_default().push(&r.object);
        }
        for v in m.values_mut() {
            v.sort();
        }
        m
    };
    for cycle in find_cycles(g.entities.iter().map(|e| &e.id), &children_adj) {
        out.push(Violation::ParentCycle {
            cycle: cycle.into_iter().cloned().collect(),
        });
    }

    // Symmetric pairs over {parent_of, followed_by}.
    let structural: Vec<&Relation> = g
        .relations
        .iter()
        .filter(|r| r.rtype != RelationType::Null)
        .collect();
    let edge_set: BTreeSet<(&EntityId, &EntityId)> =
        structural.iter().map(|r| (&r.subject, &r.object)).collect();
    let mut seen_pairs = BTreeSet::new();
    for r in &structural {
        if r.subject < r.object && edge_set.contains(&(&r.object, &r.subject)) {
            if !seen_pairs.insert((&r.subject, &r.object)) {
                continue;
            }
            let reverse = structural
                .iter()
                .filter(|o| o.subject == r.object && o.object == r.subject)
                .min_by_key(|o| o.rtype.index())
                .expect("reverse edge present");
            out.push(Violation::SymmetricPair {
                first: RelationRef::new(&r.subject, &r.object, r.rtype),
                second: RelationRef::new(&reverse.subject, &reverse.object, reverse.rtype),
            });
        }
    }

    // followed_by degrees, sibling constraint, and chain cycles.
    let parent_of: BTreeMap<&EntityId, &EntityId> = parents
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, v)| (*k, &v[0].subject))
        .collect();
    let mut succs: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    let mut preds: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    for r in g.relations_of_type(RelationType::FollowedBy) {
        succs.entry(&r.subject).or_default().push(&r.object);
        preds.entry(&r.object).or_default().push(&r.subject);

        let ps = parent_of.get(&r.subject);
        let po = parent_of.get(&r.object);
        let siblings = matches!((ps, po), (Some(a), Some(b)) if a == b);
        if !siblings {
            out.push(Violation::NotSiblings {
                relation: RelationRef::new(&r.subject, &r.object, r.rtype),
            });
        }

        for end in [&r.subject, &r.object] {
            if category.get(end) == Some(&Category::UnorderedGroup) {
                out.push(Violation::UnorderedGroupInSequence {
                    relation: RelationRef::new(&r.subject, &r.object, r.rtype),
                });
                break;
            }
        }
        if config.strict_unordered_group {
            for end in [&r.subject, &r.object] {
                let under_unordered = parent_of
                    .get(end)
                    .map(|p| category.get(*p) == Some(&Category::UnorderedGroup))
                    .unwrap_or(false);
                if under_unordered {
                    out.push(Violation::UnorderedGroupChildInSequence {
                        relation: RelationRef::new(&r.subject, &r.object, r.rtype),
                    });
                    break;
                }
            }
        }
    }
    for (id, list) in &succs {
        if list.len() > 1 {
            let mut s: Vec<EntityId> = list.iter().map(|&e| e.clone()).collect();
            s.sort();
            out.push(Violation::MultipleSuccessors { entity: (*id).clone(), successors: s });
        }
    }
    for (id, list) in &preds {
        if list.len() > 1 {
            let mut p: Vec<EntityId> = list.iter().map(|&e| e.clone()).collect();
            p.sort();
            out.push(Violation::MultiplePredecessors { entity: (*id).clone(), predecessors: p });
        }
    }
    let succ_adj: BTreeMap<&EntityId, Vec<&EntityId>> = succs
        .iter()
        .map(|(k, v)| {
            let mut v = v.clone();
            v.sort();
            (*k, v)
        })
        .collect();
    for cycle in find_cycles(g.entities.iter().map(|e| &e.id), &succ_adj) {
        out.push(Violation::SequenceCycle {
            cycle: cycle.into_iter().cloned().collect(),
        });
    }

    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    ValidationReport { violations: out }
}

/// Finds the node-disjoint cycles reachable via DFS in id order. Each cycle
/// is reported once, rotated so the smallest id comes first.
fn find_cycles<'a>(
    nodes: impl Iterator<Item = &'a EntityId>,
    adj: &BTreeMap<&'a EntityId, Vec<&'a EntityId>>,
) -> Vec<Vec<&'a EntityId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Gray,
        Black,
    }
    let mut order: Vec<&EntityId> = nodes.collect();
    order.sort();
    let mut mark: BTreeMap<&EntityId, Mark> =
        order.iter().map(|&n| (n, Mark::White)).collect();
    let mut cycles = Vec::new();

    fn dfs<'a>(
        node: &'a EntityId,
        adj: &BTreeMap<&'a EntityId, Vec<&'a EntityId>>,
        mark: &mut BTreeMap<&'a EntityId, Mark>,
        stack: &mut Vec<&'a EntityId>,
        cycles: &mut Vec<Vec<&'a EntityId>>,
    ) {
        mark.insert(node, Mark::Gray);
        stack.push(node);
        if let Some(nexts) = adj.get(node) {
            for &next in nexts {
                match mark.get(next).copied().unwrap_or(Mark::Black) {
                    Mark::White => dfs(next, adj, mark, stack, cycles),
                    Mark::Gray => {
                        let start = stack.iter().position(|&n| n == next).unwrap();
                        let mut cycle: Vec<&EntityId> = stack[start..].to_vec();
                        let min = cycle
                            .iter()
                            .enumerate()
                            .min_by_key(|(_, id)| *id)
                            .map(|(i, _)| i)
                            .unwrap();
                        cycle.rotate_left(min);
                        cycles.push(cycle);
                    }
                    Mark::Black => {}
                }
            }
        }
        stack.pop();
        mark.insert(node, Mark::Black);
    }

    let mut stack = Vec::new();
    for node in order {
        if mark[node] == Mark::White {
            dfs(node, adj, &mut mark, &mut stack, &mut cycles);
        }
    }
    cycles
}

/// Geometric reading-order key: top-to-bottom, then left-to-right, then id.
fn geometric_key(e: &crate::model::Entity) -> (f64, f64, EntityId) {
    let (cx, cy) = e.bbox.center();
    (cy, cx, e.id.clone())
}

/// Children of `parent` in reading order: `followed_by` chains first (in
/// chain order, chains ordered by the geometry of their head), then unchained
/// children by (y-center, x-center) with the id as the final tie-break.
pub fn children_in_order(t: &DocumentTree, parent: &EntityId) -> Result<Vec<EntityId>, ModelError> {
    if t.graph.entity(parent).is_none() {
        return Err(ModelError::NoSuchEntity(parent.clone()));
    }
    let mut children: Vec<&EntityId> = t
        .graph
        .relations_of_type(RelationType::ParentOf)
        .filter(|r| &r.subject == parent)
        .map(|r| &r.object)
        .collect();
    children.sort();
    let child_set: BTreeSet<&EntityId> = children.iter().copied().collect();

    // Chain edges among these children; a valid tree guarantees at most one
    // successor/predecessor each and no cycles.
    let mut next: BTreeMap<&EntityId, &EntityId> = BTreeMap::new();
    let mut has_pred: BTreeSet<&EntityId> = BTreeSet::new();
    for r in t.graph.relations_of_type(RelationType::FollowedBy) {
        if child_set.contains(&r.subject) && child_set.contains(&r.object) {
            next.insert(&r.subject, &r.object);
            has_pred.insert(&r.object);
        }
    }

    let entity = |id: &EntityId| t.graph.entity(id).expect("child resolves");
    let mut heads: Vec<&EntityId> = children
        .iter()
        .copied()
        .filter(|c| next.contains_key(*c) && !has_pred.contains(*c))
        .collect();
    heads.sort_by(|a, b| {
        let ka = geometric_key(entity(a));
        let kb = geometric_key(entity(b));
        ka.partial_cmp(&kb).expect("finite coordinates")
    });

    let mut ordered: Vec<EntityId> = Vec::with_capacity(children.len());
    let mut placed: BTreeSet<&EntityId> = BTreeSet::new();
    for head in heads {
        let mut cur = head;
        loop {
            if !placed.insert(cur) {
                break; // guards against malformed chains
            }
            ordered.push(cur.clone());
            match next.get(cur) {
                Some(&n) => cur = n,
                None => break,
            }
        }
    }

    let mut loose: Vec<&EntityId> = children
        .iter()
        .copied()
        .filter(|c| !placed.contains(*c))
        .collect();
    loose.sort_by(|a, b| {
        let ka = geometric_key(entity(a));
        let kb = geometric_key(entity(b));
        ka.partial_cmp(&kb).expect("finite coordinates")
    });
    ordered.extend(loose.into_iter().cloned());
    Ok(ordered)
}
