//! Cross-check of `validate_tree` against an independent brute-force
//! validity checker built from explicit reachability and degree counts.

mod common;

use common::fuzz_graph;
use docstruct::model::{
    BBox, Category, DocumentGraph, Entity, EntityId, PageSize, Relation, RelationType,
};
use docstruct::validation::validate_tree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Tree validity decided from first principles: exactly one root, in-degree
/// one for everyone else, full reachability from the root over parent
/// edges, sibling-only sequence edges with degree at most one per side and
/// no chain cycles, and no unordered-group entity in a sequence.
fn brute_force_valid(g: &DocumentGraph) -> bool {
    let roots: Vec<&EntityId> = g
        .entities
        .iter()
        .filter(|e| e.category == Category::DocumentRoot)
        .map(|e| &e.id)
        .collect();
    if roots.len() != 1 {
        return false;
    }
    let root = roots[0];

    let mut parent_in: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    let mut children: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
    for r in g.relations_of_type(RelationType::ParentOf) {
        parent_in.entry(&r.object).or_default().push(&r.subject);
        children.entry(&r.subject).or_default().push(&r.object);
    }
    for e in &g.entities {
        let indeg = parent_in.get(&e.id).map(|v| v.len()).unwrap_or(0);
        let want = usize::from(&e.id != root);
        if indeg != want {
            return false;
        }
    }
    // Reachability from the root covers every entity.
    let mut seen: BTreeSet<&EntityId> = BTreeSet::new();
    let mut queue = VecDeque::from([root]);
    while let Some(node) = queue.pop_front() {
        if !seen.insert(node) {
            continue;
        }
        if let Some(kids) = children.get(node) {
            queue.extend(kids.iter());
        }
    }
    if seen.len() != g.entities.len() {
        return false;
    }

    // Sequence edges: sibling-only, degree at most one per side, no cycles,
    // no unordered-group participant.
    let parent_of: BTreeMap<&EntityId, &EntityId> = parent_in
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, v)| (*k, v[0]))
        .collect();
    let category: BTreeMap<&EntityId, Category> =
        g.entities.iter().map(|e| (&e.id, e.category)).collect();
    let mut succ: BTreeMap<&EntityId, usize> = BTreeMap::new();
    let mut pred: BTreeMap<&EntityId, usize> = BTreeMap::new();
    let mut next: BTreeMap<&EntityId, &EntityId> = BTreeMap::new();
    for r in g.relations_of_type(RelationType::FollowedBy) {
        if category[&r.subject] == Category::UnorderedGroup
            || category[&r.object] == Category::UnorderedGroup
        {
            return false;
        }
        match (parent_of.get(&r.subject), parent_of.get(&r.object)) {
            (Some(a), Some(b)) if a == b => {}
            _ => return false,
        }
        *succ.entry(&r.subject).or_insert(0) += 1;
        *pred.entry(&r.object).or_insert(0) += 1;
        next.insert(&r.subject, &r.object);
    }
    if succ.values().any(|&n| n > 1) || pred.values().any(|&n| n > 1) {
        return false;
    }
    // Chain walks terminate within |entities| steps iff acyclic.
    for start in next.keys() {
        let mut cur = *start;
        for _ in 0..=g.entities.len() {
            match next.get(cur) {
                Some(&n) => {
                    if n == *start {
                        return false;
                    }
                    cur = n;
                }
                None => break,
            }
        }
    }
    true
}

#[test]
fn exhaustive_tiny_graphs_agree_with_the_validator() {
    let page = PageSize::new(100.0, 100.0).unwrap();
    let boxes = [
        BBox::new(0.0, 0.0, 100.0, 100.0).unwrap(),
        BBox::new(10.0, 10.0, 50.0, 40.0).unwrap(),
        BBox::new(20.0, 50.0, 70.0, 90.0).unwrap(),
    ];
    let category_sets = [
        [Category::DocumentRoot, Category::TextBlock, Category::Heading],
        [Category::DocumentRoot, Category::UnorderedGroup, Category::TextBlock],
        [Category::TextBlock, Category::Heading, Category::Figure], // rootless
        [Category::DocumentRoot, Category::DocumentRoot, Category::TextBlock],
    ];
    // All typed directed edges over three entities.
    let mut all_edges = Vec::new();
    for s in 0..3usize {
        for o in 0..3usize {
            if s != o {
                for t in [RelationType::ParentOf, RelationType::FollowedBy] {
                    all_edges.push((s, o, t));
                }
            }
        }
    }
    let mut checked = 0usize;
    for cats in category_sets {
        let entities: Vec<Entity> = (0..3)
            .map(|i| Entity::new(format!("e{i}"), cats[i], boxes[i], 1.0).unwrap())
            .collect();
        let n = all_edges.len();
        // Subsets of size <= 3 by index combination.
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        for a in 0..n {
            subsets.push(vec![a]);
            for b in a + 1..n {
                subsets.push(vec![a, b]);
                for c in b + 1..n {
                    subsets.push(vec![a, b, c]);
                }
            }
        }
        for subset in subsets {
            let relations: Vec<Relation> = subset
                .iter()
                .map(|&k| {
                    let (s, o, t) = all_edges[k];
                    Relation::new(entities[s].id.clone(), entities[o].id.clone(), t, 1.0)
                })
                .collect();
            let g = DocumentGraph::new(page, entities.clone(), relations).unwrap();
            let got = validate_tree(&g).is_valid();
            let want = brute_force_valid(&g);
            assert_eq!(got, want, "graph {g:?}");
            checked += 1;
        }
    }
    assert!(checked > 1000, "only {checked} graphs enumerated");
}

#[test]
fn random_small_graphs_agree_with_the_validator() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut valid_seen = 0usize;
    for i in 0..5000 {
        let g = fuzz_graph(&mut rng, 5, 6);
        let got = validate_tree(&g).is_valid();
        let want = brute_force_valid(&g);
        assert_eq!(got, want, "graph {i}: {g:?}");
        valid_seen += usize::from(got);
    }
    // The distribution must exercise both outcomes.
    assert!(valid_seen > 0);
}
