//! Structure queries over hOCR documents.
//!
//! Three query forms: search by node name, absolute paths from the root,
//! and relative paths introduced by `//`, plus the `followedby(a, b)`
//! combinator over reading-order chains. Paths support the `*` node
//! wildcard, `@*` attribute wildcard, predicates on the semantic category
//! (`[dsg_cat="heading"]`, `dsg_class` is accepted as an alias) and on word
//! text (`[text()="results"]` or `[@text="results"]`), and a trailing `/..`
//! parent step.
//!
//! The grammar ships in `query_grammar.ebnf` at the repository root.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::hocr::{HocrDocument, HocrNode, NodeKind};
use crate::model::{BBox, Category, EntityId};

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

fn perr<T>(offset: usize, message: impl Into<String>) -> Result<T, QueryError> {
    Err(QueryError::Parse { offset, message: message.into() })
}

/// Name test of one path step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NameTest {
    /// `*`: any node.
    Any,
    /// Matches the tag, the hOCR class, or the semantic category.
    Name(String),
}

/// Step predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// `[dsg_cat="X"]` (or `dsg_class`): category equality.
    Category(String),
    /// `[text()="w"]` (or `[@text="w"]`): word-text equality.
    Text(String),
    /// `[@*]`: the node carries at least one attribute.
    AnyAttr,
    /// `[@*="v"]`: some attribute equals the literal.
    AnyAttrEquals(String),
}

/// One path step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// `..`
    Parent,
    Node { name: NameTest, predicates: Vec<Predicate> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathQuery {
    /// Absolute paths anchor at the root; relative paths (`//`) anywhere.
    pub absolute: bool,
    pub steps: Vec<Step>,
}

/// Parsed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Bare name: every node matching it.
    Name(String),
    Path(PathQuery),
    FollowedBy { first: Box<Query>, second: Box<Query> },
}

/// Category literals normalize by lowercasing and dropping underscores;
/// `contentblock` is accepted for `textblock` (both spellings occur in
/// query examples in the wild).
fn normalize_category_literal(s: &str) -> String {
    let squashed: String = s.chars().filter(|c| *c != '_').collect::<String>().to_lowercase();
    if squashed == "contentblock" {
        "textblock".to_owned()
    } else {
        squashed
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Parses a query string. Byte offsets in errors refer to the input.
pub fn parse_query(input: &str) -> Result<Query, QueryError> {
    let s = input.trim();
    let base = input.len() - input.trim_start().len();
    if s.is_empty() {
        return perr(0, "empty query");
    }
    if let Some(rest) = s.strip_prefix("followedby") {
        let rest = rest.trim_start();
        let off = base + s.len() - rest.len();
        let Some(inner) = rest.strip_prefix('(') else {
            return perr(off, "expected `(` after followedby");
        };
        let Some(inner) = inner.strip_suffix(')') else {
            return perr(base + s.len(), "expected closing `)`");
        };
        let (a, b) = split_top_level_comma(inner)
            .ok_or(QueryError::Parse { offset: off, message: "expected two arguments".into() })?;
        let strip_quotes = |arg: &str| {
            let t = arg.trim();
            for q in ['\'', '"'] {
                if t.len() >= 2 && t.starts_with(q) && t.ends_with(q) {
                    return t[1..t.len() - 1].to_owned();
                }
            }
            t.to_owned()
        };
        let first = parse_query(&strip_quotes(a))?;
        let second = parse_query(&strip_quotes(b))?;
        return Ok(Query::FollowedBy { first: Box::new(first), second: Box::new(second) });
    }
    if let Some(rest) = s.strip_prefix("//") {
        let steps = parse_steps(rest, base + 2)?;
        return Ok(Query::Path(PathQuery { absolute: false, steps }));
    }
    if let Some(rest) = s.strip_prefix('/') {
        let steps = parse_steps(rest, base + 1)?;
        return Ok(Query::Path(PathQuery { absolute: true, steps }));
    }
    if s.chars().all(is_name_char) {
        return Ok(Query::Name(s.to_owned()));
    }
    perr(base, format!("expected a name, `/`, `//`, or followedby(..): `{s}`"))
}

/// Splits on the comma that separates the two followedby arguments,
/// ignoring commas inside quotes or brackets.
fn split_top_level_comma(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                '[' | '(' => depth += 1,
                ']' | ')' => depth -= 1,
                ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
                _ => {}
            },
        }
    }
    None
}

fn parse_steps(s: &str, base: usize) -> Result<Vec<Step>, QueryError> {
    if s.is_empty() {
        return perr(base, "empty path");
    }
    let mut steps = Vec::new();
    let mut offset = 0usize;
    for raw in s.split('/') {
        if raw.is_empty() {
            return perr(base + offset, "empty path step (descendant `//` is only allowed at the start)");
        }
        steps.push(parse_step(raw, base + offset)?);
        offset += raw.len() + 1;
    }
    Ok(steps)
}

fn parse_step(s: &str, base: usize) -> Result<Step, QueryError> {
    if s == ".." {
        return Ok(Step::Parent);
    }
    let bracket = s.find('[').unwrap_or(s.len());
    let name_part = &s[..bracket];
    let name = if name_part == "*" {
        NameTest::Any
    } else if !name_part.is_empty() && name_part.chars().all(is_name_char) {
        NameTest::Name(name_part.to_owned())
    } else {
        return perr(base, format!("bad step name `{name_part}`"));
    };

    let mut predicates = Vec::new();
    let mut rest = &s[bracket..];
    let mut rest_off = base + bracket;
    while !rest.is_empty() {
        if !rest.starts_with('[') {
            return perr(rest_off, "expected `[`");
        }
        let close = find_bracket_close(rest)
            .ok_or(QueryError::Parse { offset: rest_off, message: "unterminated `[`".into() })?;
        let inner = &rest[1..close];
        predicates.push(parse_predicate(inner, rest_off + 1)?);
        rest = &rest[close + 1..];
        rest_off += close + 1;
    }
    Ok(Step::Node { name, predicates })
}

fn find_bracket_close(s: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in s.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => quote = Some(c),
                ']' => return Some(i),
                _ => {}
            },
        }
    }
    None
}

fn parse_predicate(s: &str, base: usize) -> Result<Predicate, QueryError> {
    let t = s.trim();
    if t == "@*" {
        return Ok(Predicate::AnyAttr);
    }
    let (lhs, rhs) = match t.find('=') {
        Some(eq) => (t[..eq].trim(), Some(t[eq + 1..].trim())),
        None => (t, None),
    };
    let value = match rhs {
        Some(v) => Some(parse_string_literal(v, base)?),
        None => None,
    };
    let key = lhs.strip_prefix('@').unwrap_or(lhs);
    match (key, value) {
        ("*", Some(v)) => Ok(Predicate::AnyAttrEquals(v)),
        ("dsg_cat" | "dsg_class", Some(v)) => Ok(Predicate::Category(v)),
        ("text()" | "text", Some(v)) => Ok(Predicate::Text(v)),
        (_, None) => perr(base, format!("predicate `{t}` needs a value")),
        (other, _) => perr(base, format!("unsupported predicate attribute `{other}`")),
    }
}

fn parse_string_literal(s: &str, base: usize) -> Result<String, QueryError> {
    for q in ['"', '\''] {
        if let Some(body) = s.strip_prefix(q) {
            return match body.strip_suffix(q) {
                Some(inner) if !inner.contains(q) => Ok(inner.to_owned()),
                _ => perr(base, "unterminated string literal"),
            };
        }
    }
    perr(base, format!("expected quoted string, found `{s}`"))
}

/// Does `name` match the node's tag, hOCR class, or category?
fn name_matches(node: &HocrNode, name: &str) -> bool {
    if node.tag == name {
        return true;
    }
    if node.hocr_class.as_deref() == Some(name) {
        return true;
    }
    if let Some(cat) = node.dsg_cat {
        if cat.squashed_name() == normalize_category_literal(name) {
            return true;
        }
    }
    false
}

/// Word-text predicate: exact match, tolerating trailing punctuation on the
/// span side (OCR tokens keep their punctuation; `text()="Diplome"` matches
/// a `Diplome,` span).
fn text_matches(node: &HocrNode, literal: &str) -> bool {
    match &node.text {
        Some(t) => t == literal || t.trim_end_matches([',', '.', ';', ':', '!', '?']) == literal,
        None => false,
    }
}

fn predicate_matches(doc: &HocrDocument, idx: usize, pred: &Predicate) -> bool {
    let node = &doc.nodes()[idx];
    match pred {
        Predicate::Category(lit) => match node.dsg_cat {
            Some(cat) => cat.squashed_name() == normalize_category_literal(lit),
            None => false,
        },
        Predicate::Text(lit) => text_matches(node, lit),
        // Every emitted node carries attributes (class/title at minimum).
        Predicate::AnyAttr => true,
        Predicate::AnyAttrEquals(lit) => {
            let mut candidates: Vec<String> = Vec::new();
            if let Some(c) = &node.hocr_class {
                candidates.push(c.clone());
            }
            if let Some(id) = &node.entity_id {
                candidates.push(id.to_string());
            }
            if let Some(cat) = node.dsg_cat {
                candidates.push(cat.squashed_name().to_owned());
                candidates.push(cat.name().to_owned());
            }
            if let Some(t) = &node.text {
                candidates.push(t.clone());
            }
            candidates.iter().any(|c| c == lit)
                || node.dsg_cat.map_or(false, |cat| {
                    cat.squashed_name() == normalize_category_literal(lit)
                })
        }
    }
}

fn step_matches(doc: &HocrDocument, idx: usize, name: &NameTest, preds: &[Predicate]) -> bool {
    let node = &doc.nodes()[idx];
    let name_ok = match name {
        NameTest::Any => true,
        NameTest::Name(n) => name_matches(node, n),
    };
    name_ok && preds.iter().all(|p| predicate_matches(doc, idx, p))
}

fn sorted_dedup(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// All nodes matching `name`, in document order.
pub fn query_name(doc: &HocrDocument, name: &str) -> Vec<usize> {
    (0..doc.nodes().len())
        .filter(|&i| name_matches(&doc.nodes()[i], name))
        .collect()
}

/// Evaluates a path query; results in document order, duplicates removed.
pub fn query_path(doc: &HocrDocument, q: &PathQuery) -> Vec<usize> {
    let mut steps = q.steps.iter();
    let mut current: Vec<usize> = match steps.next() {
        None => return Vec::new(),
        Some(Step::Parent) => return Vec::new(),
        Some(Step::Node { name, predicates }) => {
            if q.absolute {
                let root = doc.root_node();
                if step_matches(doc, root, name, predicates) {
                    vec![root]
                } else {
                    Vec::new()
                }
            } else {
                (0..doc.nodes().len())
                    .filter(|&i| step_matches(doc, i, name, predicates))
                    .collect()
            }
        }
    };

    for step in steps {
        let mut next = Vec::new();
        match step {
            Step::Parent => {
                for &i in &current {
                    if let Some(p) = doc.nodes()[i].parent {
                        next.push(p);
                    }
                }
            }
            Step::Node { name, predicates } => {
                for &i in &current {
                    for &c in &doc.nodes()[i].children {
                        if step_matches(doc, c, name, predicates) {
                            next.push(c);
                        }
                    }
                }
            }
        }
        current = sorted_dedup(next);
        if current.is_empty() {
            break;
        }
    }
    current
}

/// Nodes from `second` that follow a node from `first` along the sibling
/// reading-order chain: transitively by default, or only the immediate
/// successor with `direct`.
pub fn followedby(
    doc: &HocrDocument,
    first: &[usize],
    second: &[usize],
    direct: bool,
) -> Vec<usize> {
    let second_set: BTreeSet<usize> = second.iter().copied().collect();
    let mut out = Vec::new();
    for &f in first {
        let mut cur = f;
        let mut hops = 0usize;
        while let Some(next) = doc.successor_node(cur) {
            if second_set.contains(&next) {
                out.push(next);
            }
            cur = next;
            hops += 1;
            if direct || hops > doc.nodes().len() {
                break;
            }
        }
    }
    sorted_dedup(out)
}

/// Evaluates any parsed query.
pub fn run_query(doc: &HocrDocument, q: &Query, direct_followedby: bool) -> Vec<usize> {
    match q {
        Query::Name(n) => query_name(doc, n),
        Query::Path(p) => query_path(doc, p),
        Query::FollowedBy { first, second } => {
            let a = run_query(doc, first, direct_followedby);
            let b = run_query(doc, second, direct_followedby);
            followedby(doc, &a, &b, direct_followedby)
        }
    }
}

/// Parses and evaluates a query string.
pub fn evaluate(doc: &HocrDocument, expr: &str, direct_followedby: bool) -> Result<Vec<usize>, QueryError> {
    let q = parse_query(expr)?;
    Ok(run_query(doc, &q, direct_followedby))
}

/// One matched node, shaped for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryMatch {
    pub id: Option<EntityId>,
    pub category: Option<Category>,
    pub bbox: BBox,
    pub text: Option<String>,
}

impl QueryMatch {
    pub fn from_node(doc: &HocrDocument, idx: usize) -> QueryMatch {
        let node = &doc.nodes()[idx];
        let text = match node.kind {
            NodeKind::Word => node.text.clone(),
            NodeKind::Entity => {
                let texts = doc.texts_under(idx);
                if texts.is_empty() {
                    None
                } else {
                    Some(texts.join(" "))
                }
            }
        };
        QueryMatch {
            id: node.entity_id.clone(),
            category: node.dsg_cat,
            bbox: node.bbox,
            text,
        }
    }
}
