//! hOCR conversion engine.
//!
//! Serializes a valid [`DocumentTree`] plus word boxes into hOCR-flavored
//! XHTML and parses such documents back. Entity nodes are `<div>` elements
//! carrying the mapped hOCR class; categories without an hOCR counterpart
//! (`meta`, `article`) become class-less divs. Hierarchy-specific
//! information rides in `dsg_`-prefixed attributes (`dsg_cat`, `dsg_pconf`,
//! `dsg_next`, `dsg_nconf`), so stripping every `dsg_` attribute leaves a
//! document any generic hOCR consumer can process.
//!
//! Conversion steps: the node tree mirrors the `parent_of` structure; child
//! order follows [`children_in_order`]; each word attaches to the leaf
//! entity with the highest IoU between the word box and the entity box
//! (zero-overlap words go to the nearest leaf by center distance).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::iou;
use crate::model::{
    BBox, Category, DocumentGraph, DocumentTree, Entity, EntityId, PageSize, Relation,
    RelationType,
};
use crate::validation::{children_in_order, validate_tree, ValidationReport};

#[derive(Debug, Error)]
pub enum HocrError {
    #[error("tree fails validation: {0:?}")]
    InvalidTree(ValidationReport),
    #[error("word text must be nonempty")]
    EmptyWord,
    #[error("xml parse error at byte {position}: {message}")]
    Parse { position: u64, message: String },
    #[error("model: {0}")]
    Model(#[from] crate::model::ModelError),
}

/// One OCR word: text and box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    pub bbox: BBox,
}

impl Word {
    pub fn new(text: impl Into<String>, bbox: BBox) -> Result<Self, HocrError> {
        let text = text.into();
        if text.is_empty() {
            return Err(HocrError::EmptyWord);
        }
        Ok(Word { text, bbox })
    }
}

/// Category -> hOCR class. `meta` and `article` have no hOCR counterpart.
pub fn map_category(c: Category) -> Option<&'static str> {
    match c {
        Category::DocumentRoot => Some("ocr_page"),
        Category::Meta => None,
        Category::Author => Some("ocr_author"),
        Category::BackgroundFigure => Some("ocr_float"),
        Category::TextBlock => Some("ocrx_block"),
        Category::Figure => Some("ocr_float"),
        Category::FigureGraphic => Some("ocr_photo"),
        Category::FigureCaption => Some("ocr_caption"),
        Category::Footer => Some("ocr_footer"),
        Category::Footnote => Some("ocr_footer"),
        Category::Header => Some("ocr_header"),
        Category::Heading => Some("ocr_header"),
        Category::Item => Some("ocr_carea"),
        Category::Itemize => Some("ocr_float"),
        Category::OrderedGroup => Some("ocr_carea"),
        Category::PageNr => Some("ocr_pageno"),
        Category::Row => Some("ocr_carea"),
        Category::Table => Some("ocr_table"),
        Category::Tabular => Some("ocr_table"),
        Category::TableOfContents => Some("ocr_table"),
        Category::UnorderedGroup => Some("ocr_float"),
        Category::Article => None,
        Category::Column => Some("ocr_carea"),
    }
}

/// Best-effort inverse of [`map_category`] for externally produced hOCR
/// without `dsg_cat` attributes. Classes shared by several categories
/// resolve to the most frequent one, so the inverse is lossy for them.
fn category_from_class(class: &str) -> Option<Category> {
    match class {
        "ocr_page" => Some(Category::DocumentRoot),
        "ocr_author" => Some(Category::Author),
        "ocrx_block" => Some(Category::TextBlock),
        "ocr_photo" => Some(Category::FigureGraphic),
        "ocr_caption" => Some(Category::FigureCaption),
        "ocr_footer" => Some(Category::Footer),
        "ocr_header" => Some(Category::Heading),
        "ocr_pageno" => Some(Category::PageNr),
        "ocr_table" => Some(Category::Table),
        "ocr_float" => Some(Category::Figure),
        "ocr_carea" => Some(Category::Column),
        _ => None,
    }
}

/// Node kind within a parsed or built hOCR document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Entity,
    Word,
}

/// One XML node of the document, in document (pre-) order.
#[derive(Debug, Clone, PartialEq)]
pub struct HocrNode {
    pub kind: NodeKind,
    /// `div` for entities, `span` for words.
    pub tag: &'static str,
    pub hocr_class: Option<String>,
    /// Semantic category; `None` only for word spans.
    pub dsg_cat: Option<Category>,
    pub bbox: BBox,
    /// Entity id; `None` for word spans.
    pub entity_id: Option<EntityId>,
    /// Word text; `None` for entity nodes.
    pub text: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// In-memory hOCR document: the backing tree and words plus the node arena
/// queries run against.
#[derive(Debug, Clone)]
pub struct HocrDocument {
    pub tree: DocumentTree,
    pub words: Vec<Word>,
    nodes: Vec<HocrNode>,
    root_node: usize,
}

/// Assigns each word (by index) to a leaf entity id: highest IoU wins, ties
/// go to the leaf earlier in document order; words overlapping no leaf go to
/// the nearest leaf by center distance.
fn assign_words(
    tree: &DocumentTree,
    leaves_in_doc_order: &[EntityId],
    words: &[Word],
) -> BTreeMap<usize, Vec<usize>> {
    let mut by_leaf: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    if leaves_in_doc_order.is_empty() {
        return by_leaf;
    }
    for (wi, word) in words.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (li, leaf_id) in leaves_in_doc_order.iter().enumerate() {
            let leaf = tree.graph.entity(leaf_id).expect("leaf resolves");
            let v = iou(&word.bbox, &leaf.bbox);
            let better = match best {
                None => true,
                Some((_, bv)) => v > bv,
            };
            if better {
                best = Some((li, v));
            }
        }
        let (mut li, v) = best.expect("at least one leaf");
        if v == 0.0 {
            // No overlap anywhere: nearest leaf by center distance.
            let (wx, wy) = word.bbox.center();
            let mut best_d = f64::INFINITY;
            for (i, leaf_id) in leaves_in_doc_order.iter().enumerate() {
                let leaf = tree.graph.entity(leaf_id).expect("leaf resolves");
                let (lx, ly) = leaf.bbox.center();
                let d = (wx - lx).powi(2) + (wy - ly).powi(2);
                if d < best_d {
                    best_d = d;
                    li = i;
                }
            }
        }
        by_leaf.entry(li).or_default().push(wi);
    }
    by_leaf
}

impl HocrDocument {
    /// Builds the node arena for a valid tree, running the child ordering
    /// and word assignment steps.
    pub fn build(tree: DocumentTree, words: Vec<Word>) -> Result<Self, HocrError> {
        let report = validate_tree(&tree.graph);
        if !report.is_valid() {
            return Err(HocrError::InvalidTree(report));
        }
        for w in &words {
            if w.text.is_empty() {
                return Err(HocrError::EmptyWord);
            }
        }

        // Document order of entities: pre-order, children ordered by chain
        // then geometry.
        let mut entity_order: Vec<EntityId> = Vec::with_capacity(tree.graph.entities.len());
        let mut stack = vec![tree.root.clone()];
        while let Some(id) = stack.pop() {
            entity_order.push(id.clone());
            let kids = children_in_order(&tree, &id).expect("entity exists");
            for k in kids.into_iter().rev() {
                stack.push(k);
            }
        }

        let leaf_set: std::collections::BTreeSet<EntityId> =
            tree.leaf_ids().into_iter().collect();
        let leaves_in_doc_order: Vec<EntityId> = entity_order
            .iter()
            .filter(|id| leaf_set.contains(id))
            .cloned()
            .collect();
        let leaf_words = assign_words(&tree, &leaves_in_doc_order, &words);
        let leaf_pos: BTreeMap<&EntityId, usize> =
            leaves_in_doc_order.iter().enumerate().map(|(i, id)| (id, i)).collect();

        // Assemble the arena in document order.
        let mut nodes: Vec<HocrNode> = Vec::new();
        let mut node_of_entity: BTreeMap<EntityId, usize> = BTreeMap::new();
        fn descend(
            tree: &DocumentTree,
            id: &EntityId,
            parent: Option<usize>,
            leaf_pos: &BTreeMap<&EntityId, usize>,
            leaf_words: &BTreeMap<usize, Vec<usize>>,
            words: &[Word],
            nodes: &mut Vec<HocrNode>,
            node_of_entity: &mut BTreeMap<EntityId, usize>,
        ) {
            let e = tree.graph.entity(id).expect("entity resolves");
            let idx = nodes.len();
            nodes.push(HocrNode {
                kind: NodeKind::Entity,
                tag: "div",
                hocr_class: map_category(e.category).map(str::to_owned),
                dsg_cat: Some(e.category),
                bbox: e.bbox,
                entity_id: Some(e.id.clone()),
                text: None,
                parent,
                children: Vec::new(),
            });
            node_of_entity.insert(e.id.clone(), idx);
            if let Some(p) = parent {
                nodes[p].children.push(idx);
            }
            if let Some(li) = leaf_pos.get(id) {
                if let Some(word_ids) = leaf_words.get(li) {
                    for &wi in word_ids {
                        let w = &words[wi];
                        let widx = nodes.len();
                        nodes.push(HocrNode {
                            kind: NodeKind::Word,
                            tag: "span",
                            hocr_class: Some("ocrx_word".to_owned()),
                            dsg_cat: None,
                            bbox: w.bbox,
                            entity_id: None,
                            text: Some(w.text.clone()),
                            parent: Some(idx),
                            children: Vec::new(),
                        });
                        nodes[idx].children.push(widx);
                    }
                }
            }
            for kid in children_in_order(tree, id).expect("entity resolves") {
                descend(tree, &kid, Some(idx), leaf_pos, leaf_words, words, nodes, node_of_entity);
            }
        }
        descend(
            &tree,
            &tree.root.clone(),
            None,
            &leaf_pos,
            &leaf_words,
            &words,
            &mut nodes,
            &mut node_of_entity,
        );

        Ok(HocrDocument { tree, words, nodes, root_node: 0 })
    }

    pub fn nodes(&self) -> &[HocrNode] {
        &self.nodes
    }

    pub fn root_node(&self) -> usize {
        self.root_node
    }

    /// Direct `followed_by` successor node of an entity node, if any.
    pub fn successor_node(&self, node: usize) -> Option<usize> {
        let id = self.nodes[node].entity_id.as_ref()?;
        let next = self.tree.successor_of(id)?;
        self.node_of_entity(next)
    }

    pub fn node_of_entity(&self, id: &EntityId) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.entity_id.as_ref() == Some(id))
    }

    /// Word texts under a node, document order.
    pub fn texts_under(&self, node: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            if let Some(t) = &self.nodes[i].text {
                out.push(t.clone());
            }
            for &c in self.nodes[i].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Serializes to hOCR-flavored XHTML.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str("<html xmlns=\"http://www.w3.org/1999/xhtml\">\n");
        out.push_str("<head>\n<title></title>\n");
        out.push_str(
            "<meta http-equiv=\"Content-Type\" content=\"text/html;charset=utf-8\"/>\n",
        );
        out.push_str("<meta name=\"ocr-system\" content=\"docstruct\"/>\n");
        out.push_str(
            "<meta name=\"ocr-capabilities\" content=\"ocr_page ocr_carea ocrx_block ocrx_word\"/>\n",
        );
        out.push_str("</head>\n<body>\n");
        self.write_node(self.root_node, 1, &mut out);
        out.push_str("</body>\n</html>\n");
        out
    }

    fn write_node(&self, idx: usize, depth: usize, out: &mut String) {
        let n = &self.nodes[idx];
        let pad = " ".repeat(depth);
        let fmt_num = |v: f64| {
            let r = v.round();
            format!("{}", r as i64)
        };
        match n.kind {
            NodeKind::Entity => {
                let id = n.entity_id.as_ref().expect("entity node has id");
                let e = self.tree.graph.entity(id).expect("entity resolves");
                out.push_str(&pad);
                out.push_str("<div");
                if let Some(class) = &n.hocr_class {
                    let _ = write!(out, " class=\"{}\"", escape_attr(class));
                }
                let _ = write!(out, " id=\"{}\"", escape_attr(id.as_str()));
                let mut title = format!(
                    "bbox {} {} {} {}",
                    fmt_num(n.bbox.x0),
                    fmt_num(n.bbox.y0),
                    fmt_num(n.bbox.x1),
                    fmt_num(n.bbox.y1)
                );
                if idx == self.root_node {
                    let _ = write!(
                        title,
                        "; x_pagesize {} {}",
                        self.tree.graph.page_size.width, self.tree.graph.page_size.height
                    );
                }
                let _ = write!(title, "; x_confidence {}", e.confidence);
                let _ = write!(out, " title=\"{}\"", escape_attr(&title));
                let _ = write!(
                    out,
                    " dsg_cat=\"{}\"",
                    n.dsg_cat.expect("entity node has category").squashed_name()
                );
                if let Some(parent_rel) = self
                    .tree
                    .graph
                    .relations_of_type(RelationType::ParentOf)
                    .find(|r| &r.object == id)
                {
                    let _ = write!(out, " dsg_pconf=\"{}\"", parent_rel.confidence);
                }
                if let Some(next_rel) = self
                    .tree
                    .graph
                    .relations_of_type(RelationType::FollowedBy)
                    .find(|r| &r.subject == id)
                {
                    let _ = write!(
                        out,
                        " dsg_next=\"{}\" dsg_nconf=\"{}\"",
                        escape_attr(next_rel.object.as_str()),
                        next_rel.confidence
                    );
                }
                if n.children.is_empty() {
                    out.push_str("></div>\n");
                } else {
                    out.push_str(">\n");
                    for &c in &n.children {
                        self.write_node(c, depth + 1, out);
                    }
                    out.push_str(&pad);
                    out.push_str("</div>\n");
                }
            }
            NodeKind::Word => {
                out.push_str(&pad);
                let _ = write!(
                    out,
                    "<span class=\"ocrx_word\" title=\"bbox {} {} {} {}\">{}</span>\n",
                    fmt_num(n.bbox.x0),
                    fmt_num(n.bbox.y0),
                    fmt_num(n.bbox.x1),
                    fmt_num(n.bbox.y1),
                    escape_text(n.text.as_ref().expect("word node has text"))
                );
            }
        }
    }

    /// Parses a document produced by [`to_hocr`] or a structurally
    /// equivalent hOCR file.
    pub fn parse(xml: &str) -> Result<Self, HocrError> {
        parse_document(xml)
    }
}

fn escape_attr(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Converts a valid tree plus words into an hOCR document string.
pub fn to_hocr(tree: &DocumentTree, words: &[Word]) -> Result<String, HocrError> {
    Ok(HocrDocument::build(tree.clone(), words.to_vec())?.to_xml())
}

/// Inverse of [`to_hocr`] up to bbox integer formatting and word regrouping
/// under their leaves. Entities come back in document order; relations in
/// (parent, then sequence) document order.
pub fn from_hocr(xml: &str) -> Result<(DocumentTree, Vec<Word>), HocrError> {
    let doc = HocrDocument::parse(xml)?;
    Ok((doc.tree, doc.words))
}

/// Title-attribute properties: `bbox x0 y0 x1 y1; x_confidence 0.9; ...`.
fn parse_title(title: &str, position: u64) -> Result<BTreeMap<String, Vec<String>>, HocrError> {
    let mut out = BTreeMap::new();
    for part in title.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut it = part.split_whitespace();
        let key = it
            .next()
            .ok_or_else(|| HocrError::Parse { position, message: "empty title property".into() })?;
        out.insert(key.to_owned(), it.map(str::to_owned).collect());
    }
    Ok(out)
}

fn parse_bbox(values: &[String], position: u64) -> Result<BBox, HocrError> {
    if values.len() != 4 {
        return Err(HocrError::Parse {
            position,
            message: format!("bbox needs 4 coordinates, got {}", values.len()),
        });
    }
    let mut c = [0.0f64; 4];
    for (i, v) in values.iter().enumerate() {
        c[i] = v.parse().map_err(|_| HocrError::Parse {
            position,
            message: format!("bad bbox coordinate `{v}`"),
        })?;
    }
    BBox::new(c[0], c[1], c[2], c[3]).map_err(|e| HocrError::Parse {
        position,
        message: e.to_string(),
    })
}

struct PendingEntity {
    id: EntityId,
    category: Category,
    bbox: BBox,
    confidence: f64,
    parent: Option<EntityId>,
    pconf: f64,
    next: Option<(EntityId, f64)>,
    pagesize: Option<(f64, f64)>,
}

fn parse_document(xml: &str) -> Result<HocrDocument, HocrError> {
    use quick_xml::events::Event;
    use quick_xml::Reader;

    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut entities: Vec<PendingEntity> = Vec::new();
    let mut words: Vec<Word> = Vec::new();
    // Stack of entity indices for divs; words attach to the top.
    let mut div_stack: Vec<usize> = Vec::new();
    let mut in_word_span: Option<(BBox, String)> = None;
    let mut gen_counter = 0usize;
    let mut saw_any = false;

    let err = |position: u64, message: String| HocrError::Parse { position, message };

    loop {
        let position = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| err(position, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let name = e.name();
                let tag = std::str::from_utf8(name.as_ref())
                    .map_err(|_| err(position, "non-utf8 tag".into()))?
                    .to_ascii_lowercase();
                let mut attrs: BTreeMap<String, String> = BTreeMap::new();
                for a in e.attributes() {
                    let a = a.map_err(|e| err(position, e.to_string()))?;
                    let key = std::str::from_utf8(a.key.as_ref())
                        .map_err(|_| err(position, "non-utf8 attribute".into()))?
                        .to_ascii_lowercase();
                    let value = a
                        .unescape_value()
                        .map_err(|e| err(position, e.to_string()))?
                        .into_owned();
                    attrs.insert(key, value);
                }
                match tag.as_str() {
                    "div" => {
                        saw_any = true;
                        let title = attrs.get("title").cloned().unwrap_or_default();
                        let props = parse_title(&title, position)?;
                        let bbox = match props.get("bbox") {
                            Some(v) => parse_bbox(v, position)?,
                            None => {
                                return Err(err(position, "div without bbox title".into()));
                            }
                        };
                        let category = match attrs.get("dsg_cat") {
                            Some(name) => Category::from_squashed(name).ok_or_else(|| {
                                err(position, format!("unknown dsg_cat `{name}`"))
                            })?,
                            None => {
                                let class = attrs.get("class").ok_or_else(|| {
                                    err(position, "div without class or dsg_cat".into())
                                })?;
                                category_from_class(class).ok_or_else(|| {
                                    err(position, format!("unknown hOCR class `{class}`"))
                                })?
                            }
                        };
                        let id = match attrs.get("id") {
                            Some(s) => EntityId::new(s.clone()),
                            None => {
                                gen_counter += 1;
                                EntityId::new(format!("node-{gen_counter}"))
                            }
                        };
                        let confidence = props
                            .get("x_confidence")
                            .and_then(|v| v.first())
                            .and_then(|v| v.parse().ok())
                            .unwrap_or(1.0);
                        let pagesize = props.get("x_pagesize").and_then(|v| {
                            if v.len() == 2 {
                                Some((v[0].parse().ok()?, v[1].parse().ok()?))
                            } else {
                                None
                            }
                        });
                        let pconf = attrs
                            .get("dsg_pconf")
                            .and_then(|v| v.parse().ok())
                            .unwrap_or(1.0);
                        let next = attrs.get("dsg_next").map(|n| {
                            let nconf = attrs
                                .get("dsg_nconf")
                                .and_then(|v| v.parse().ok())
                                .unwrap_or(1.0);
                            (EntityId::new(n.clone()), nconf)
                        });
                        let parent = div_stack.last().map(|&i| entities[i].id.clone());
                        entities.push(PendingEntity {
                            id,
                            category,
                            bbox,
                            confidence,
                            parent,
                            pconf,
                            next,
                            pagesize,
                        });
                        if !is_empty {
                            div_stack.push(entities.len() - 1);
                        }
                    }
                    "span" => {
                        let class = attrs.get("class").cloned().unwrap_or_default();
                        if class.split_whitespace().any(|c| c == "ocrx_word" || c == "ocr_word") {
                            let title = attrs.get("title").cloned().unwrap_or_default();
                            let props = parse_title(&title, position)?;
                            let bbox = match props.get("bbox") {
                                Some(v) => parse_bbox(v, position)?,
                                None => {
                                    return Err(err(position, "word span without bbox".into()));
                                }
                            };
                            if is_empty {
                                return Err(err(position, "word span without text".into()));
                            }
                            in_word_span = Some((bbox, String::new()));
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let Some((_, buf)) = in_word_span.as_mut() {
                    let text = t.unescape().map_err(|e| err(position, e.to_string()))?;
                    buf.push_str(&text);
                }
            }
            Event::End(e) => {
                let name = e.name();
                let tag = std::str::from_utf8(name.as_ref()).unwrap_or("").to_ascii_lowercase();
                match tag.as_str() {
                    "div" => {
                        div_stack.pop();
                    }
                    "span" => {
                        if let Some((bbox, text)) = in_word_span.take() {
                            if text.is_empty() {
                                return Err(err(position, "word span without text".into()));
                            }
                            words.push(Word { text, bbox });
                        }
                    }
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if !saw_any {
        return Err(err(0, "no hOCR content found".into()));
    }

    // Assemble the graph: entities in document order, parent edges then
    // sequence edges.
    let pagesize = entities
        .iter()
        .find_map(|e| e.pagesize)
        .or_else(|| {
            entities
                .first()
                .map(|root| (root.bbox.x1.max(1.0), root.bbox.y1.max(1.0)))
        })
        .ok_or_else(|| err(0, "document has no entities".into()))?;
    let page = PageSize::new(pagesize.0, pagesize.1).map_err(|e| err(0, e.to_string()))?;

    let mut ents = Vec::with_capacity(entities.len());
    let mut relations = Vec::new();
    for p in &entities {
        ents.push(
            Entity::new(p.id.clone(), p.category, p.bbox, p.confidence)
                .map_err(|e| err(0, e.to_string()))?,
        );
        if let Some(parent) = &p.parent {
            relations.push(Relation::new(
                parent.clone(),
                p.id.clone(),
                RelationType::ParentOf,
                p.pconf,
            ));
        }
    }
    for p in &entities {
        if let Some((next, nconf)) = &p.next {
            relations.push(Relation::new(
                p.id.clone(),
                next.clone(),
                RelationType::FollowedBy,
                *nconf,
            ));
        }
    }

    let graph = DocumentGraph::new(page, ents, relations).map_err(|e| err(0, e.to_string()))?;
    let tree = DocumentTree::from_graph(graph).map_err(HocrError::InvalidTree)?;
    HocrDocument::build(tree, words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PageSize;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1).unwrap()
    }

    fn ent(id: &str, cat: Category, bbox: BBox) -> Entity {
        Entity::new(id, cat, bbox, 1.0).unwrap()
    }

    pub(crate) fn sample_tree() -> DocumentTree {
        let graph = DocumentGraph::new(
            PageSize::new(1000.0, 1400.0).unwrap(),
            vec![
                ent("root", Category::DocumentRoot, bb(0.0, 0.0, 1000.0, 1400.0)),
                ent("meta", Category::Meta, bb(0.0, 0.0, 1000.0, 30.0)),
                ent("art", Category::Article, bb(10.0, 40.0, 990.0, 1390.0)),
                ent("h", Category::Heading, bb(20.0, 50.0, 700.0, 100.0)),
                ent("t", Category::TextBlock, bb(20.0, 120.0, 700.0, 600.0)),
            ],
            vec![
                Relation::new("root", "meta", RelationType::ParentOf, 1.0),
                Relation::new("root", "art", RelationType::ParentOf, 1.0),
                Relation::new("art", "h", RelationType::ParentOf, 0.9),
                Relation::new("art", "t", RelationType::ParentOf, 0.8),
                Relation::new("h", "t", RelationType::FollowedBy, 0.7),
            ],
        )
        .unwrap();
        DocumentTree::from_graph(graph).unwrap()
    }

    #[test]
    fn category_mapping_matches_the_published_table() {
        let rows: [(Category, Option<&str>); 23] = [
            (Category::DocumentRoot, Some("ocr_page")),
            (Category::Meta, None),
            (Category::Author, Some("ocr_author")),
            (Category::BackgroundFigure, Some("ocr_float")),
            (Category::TextBlock, Some("ocrx_block")),
            (Category::Figure, Some("ocr_float")),
            (Category::FigureGraphic, Some("ocr_photo")),
            (Category::FigureCaption, Some("ocr_caption")),
            (Category::Footer, Some("ocr_footer")),
            (Category::Footnote, Some("ocr_footer")),
            (Category::Header, Some("ocr_header")),
            (Category::Heading, Some("ocr_header")),
            (Category::Item, Some("ocr_carea")),
            (Category::Itemize, Some("ocr_float")),
            (Category::OrderedGroup, Some("ocr_carea")),
            (Category::PageNr, Some("ocr_pageno")),
            (Category::Table, Some("ocr_table")),
            (Category::Tabular, Some("ocr_table")),
            (Category::TableOfContents, Some("ocr_table")),
            (Category::UnorderedGroup, Some("ocr_float")),
            (Category::Article, None),
            (Category::Column, Some("ocr_carea")),
            (Category::Row, Some("ocr_carea")),
        ];
        for (cat, want) in rows {
            assert_eq!(map_category(cat), want, "{cat}");
        }
    }

    #[test]
    fn skeleton_tree_without_words_emits_page_with_meta_child() {
        let graph = DocumentGraph::new(
            PageSize::new(100.0, 100.0).unwrap(),
            vec![
                ent("r", Category::DocumentRoot, bb(0.0, 0.0, 100.0, 100.0)),
                ent("m", Category::Meta, bb(0.0, 0.0, 100.0, 10.0)),
            ],
            vec![Relation::new("r", "m", RelationType::ParentOf, 1.0)],
        )
        .unwrap();
        let tree = DocumentTree::from_graph(graph).unwrap();
        let xml = to_hocr(&tree, &[]).unwrap();
        assert!(xml.contains("class=\"ocr_page\""));
        // meta is class-less but carries its category attribute.
        assert!(xml.contains("<div id=\"m\""));
        assert!(xml.contains("dsg_cat=\"meta\""));
        assert!(!xml.contains("class=\"\""));
    }

    #[test]
    fn words_attach_to_best_leaf_in_input_order() {
        let tree = sample_tree();
        let words = vec![
            Word::new("alpha", bb(25.0, 130.0, 60.0, 150.0)).unwrap(),
            Word::new("beta", bb(70.0, 130.0, 110.0, 150.0)).unwrap(),
            Word::new("gamma", bb(25.0, 160.0, 60.0, 180.0)).unwrap(),
        ];
        let doc = HocrDocument::build(tree, words).unwrap();
        let t_node = doc.node_of_entity(&EntityId::new("t")).unwrap();
        assert_eq!(doc.texts_under(t_node), vec!["alpha", "beta", "gamma"]);
    }

    #[test]
    fn word_prefers_higher_iou_leaf() {
        // Word overlaps two leaves at IoU 0.4 vs 0.1: attaches to the first.
        let graph = DocumentGraph::new(
            PageSize::new(100.0, 100.0).unwrap(),
            vec![
                ent("r", Category::DocumentRoot, bb(0.0, 0.0, 100.0, 100.0)),
                ent("a", Category::TextBlock, bb(0.0, 0.0, 10.0, 4.0)),
                ent("b", Category::TextBlock, bb(0.0, 6.0, 10.0, 22.0)),
            ],
            vec![
                Relation::new("r", "a", RelationType::ParentOf, 1.0),
                Relation::new("r", "b", RelationType::ParentOf, 1.0),
            ],
        )
        .unwrap();
        let tree = DocumentTree::from_graph(graph).unwrap();
        // word [0,0,10,4]: IoU with a = 1.0... use a partial overlap instead.
        let word = Word::new("w", bb(0.0, 2.0, 10.0, 8.0)).unwrap();
        // IoU(word, a) = 20/(60+40-20) = 0.25; IoU(word, b) = 20/(60+160-20) = 0.1
        let doc = HocrDocument::build(tree, vec![word]).unwrap();
        let a_node = doc.node_of_entity(&EntityId::new("a")).unwrap();
        assert_eq!(doc.texts_under(a_node), vec!["w"]);
    }

    #[test]
    fn zero_overlap_word_goes_to_nearest_leaf() {
        let tree = sample_tree();
        let word = Word::new("lost", bb(900.0, 1300.0, 950.0, 1320.0)).unwrap();
        let doc = HocrDocument::build(tree, vec![word]).unwrap();
        // Nearest leaf center: t spans y 120..600 at x 20..700; meta is at the top.
        let t_node = doc.node_of_entity(&EntityId::new("t")).unwrap();
        assert_eq!(doc.texts_under(t_node), vec!["lost"]);
    }

    #[test]
    fn round_trip_restores_tree_and_words() {
        let tree = sample_tree();
        let words = vec![
            Word::new("Das", bb(25.0, 130.0, 60.0, 150.0)).unwrap(),
            Word::new("Wallis", bb(70.0, 130.0, 140.0, 150.0)).unwrap(),
        ];
        let xml = to_hocr(&tree, &words).unwrap();
        let (tree2, words2) = from_hocr(&xml).unwrap();
        assert_eq!(words2, words);
        assert_eq!(tree2.root, tree.root);
        // Entities and relations match as sets (document order may differ).
        let norm = |t: &DocumentTree| {
            let mut es: Vec<Entity> = t.graph.entities.clone();
            es.sort_by(|a, b| a.id.cmp(&b.id));
            let mut rs: Vec<Relation> = t.graph.relations.clone();
            rs.sort_by_key(|r| r.key());
            (es, rs, t.graph.page_size)
        };
        assert_eq!(norm(&tree2), norm(&tree));
        // Second conversion is byte-identical (fixed point).
        let xml2 = to_hocr(&tree2, &words2).unwrap();
        assert_eq!(xml, xml2);
    }

    #[test]
    fn invalid_tree_is_rejected_with_violations() {
        let graph = DocumentGraph::new(
            PageSize::new(100.0, 100.0).unwrap(),
            vec![ent("t", Category::TextBlock, bb(0.0, 0.0, 10.0, 10.0))],
            vec![],
        )
        .unwrap();
        let tree = DocumentTree { graph, root: EntityId::new("t") };
        match to_hocr(&tree, &[]) {
            Err(HocrError::InvalidTree(report)) => assert!(!report.is_valid()),
            other => panic!("expected InvalidTree, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_non_hocr_xml_are_parse_errors() {
        assert!(matches!(from_hocr(""), Err(HocrError::Parse { .. })));
        assert!(matches!(
            from_hocr("<notes><note/></notes>"),
            Err(HocrError::Parse { .. })
        ));
    }

    #[test]
    fn hand_written_minimal_hocr_parses_to_one_node_tree() {
        let xml = r#"<html><body>
            <div class="ocr_page" title="bbox 0 0 200 300"></div>
        </body></html>"#;
        let (tree, words) = from_hocr(xml).unwrap();
        assert!(words.is_empty());
        assert_eq!(tree.graph.entities.len(), 1);
        assert_eq!(tree.graph.entities[0].category, Category::DocumentRoot);
        assert_eq!(tree.graph.page_size, PageSize::new(200.0, 300.0).unwrap());
    }

    #[test]
    fn stripping_dsg_attributes_leaves_parseable_hocr() {
        let tree = sample_tree();
        let words = vec![Word::new("x", bb(25.0, 130.0, 60.0, 150.0)).unwrap()];
        let xml = to_hocr(&tree, &words).unwrap();
        let stripped = strip_dsg_attributes(&xml);
        assert!(!stripped.contains("dsg_"));
        // A generic XML pass over the stripped document succeeds.
        let mut reader = quick_xml::Reader::from_str(&stripped);
        loop {
            match reader.read_event() {
                Ok(quick_xml::events::Event::Eof) => break,
                Ok(_) => {}
                Err(e) => panic!("stripped document no longer parses: {e}"),
            }
        }
    }

    /// Removes every `dsg_*="..."` attribute.
    pub(crate) fn strip_dsg_attributes(xml: &str) -> String {
        let mut out = String::with_capacity(xml.len());
        let mut rest = xml;
        while let Some(pos) = rest.find(" dsg_") {
            out.push_str(&rest[..pos]);
            let tail = &rest[pos + 1..];
            // attribute name up to '=', then a quoted value
            let eq = tail.find('=').expect("dsg attribute has a value");
            let quote_start = eq + 1;
            assert_eq!(&tail[quote_start..quote_start + 1], "\"");
            let quote_end = tail[quote_start + 1..]
                .find('"')
                .expect("closing quote")
                + quote_start
                + 1;
            rest = &tail[quote_end + 1..];
        }
        out.push_str(rest);
        out
    }

    #[test]
    fn every_entity_appears_exactly_once() {
        let tree = sample_tree();
        let doc = HocrDocument::build(tree.clone(), vec![]).unwrap();
        let entity_nodes = doc.nodes().iter().filter(|n| n.kind == NodeKind::Entity).count();
        assert_eq!(entity_nodes, tree.graph.entities.len());
        for e in &tree.graph.entities {
            assert!(doc.node_of_entity(&e.id).is_some());
        }
    }

    #[test]
    fn sibling_xml_order_follows_children_in_order() {
        let tree = sample_tree();
        let doc = HocrDocument::build(tree.clone(), vec![]).unwrap();
        for e in &tree.graph.entities {
            let want = children_in_order(&tree, &e.id).unwrap();
            let node = doc.node_of_entity(&e.id).unwrap();
            let got: Vec<EntityId> = doc.nodes()[node]
                .children
                .iter()
                .filter_map(|&c| doc.nodes()[c].entity_id.clone())
                .collect();
            assert_eq!(got, want);
        }
    }
}
