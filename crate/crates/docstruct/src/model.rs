//! Document data model: entities, relations, graphs, and trees.
//!
//! A page arrives as a flat [`DocumentGraph`] (entities plus predicted or
//! annotated relations, possibly invalid) and leaves the pipeline as a
//! [`DocumentTree`] whose `parent_of` edges form a rooted tree and whose
//! `followed_by` edges order siblings. All types are immutable value objects
//! after construction; every operation on them is a pure function.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while constructing or ingesting model objects.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid bounding box [{x0}, {y0}, {x1}, {y1}]")]
    InvalidBBox { x0: f64, y0: f64, x1: f64, y1: f64 },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("page size must be positive, got {width}x{height}")]
    InvalidPageSize { width: f64, height: f64 },
    #[error("duplicate entity id `{0}`")]
    DuplicateEntityId(EntityId),
    #[error("relation endpoint `{0}` does not resolve to an entity")]
    UnknownEndpoint(EntityId),
    #[error("relation has identical subject and object `{0}`")]
    SelfRelation(EntityId),
    #[error("duplicate relation ({subject}, {object}, {rtype})")]
    DuplicateRelation {
        subject: EntityId,
        object: EntityId,
        rtype: RelationType,
    },
    #[error("category `{0}` is not in the active category set")]
    InactiveCategory(Category),
    #[error("no such entity `{0}`")]
    NoSuchEntity(EntityId),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Axis-aligned rectangle in page pixel coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    /// Requires `x0 <= x1`, `y0 <= y1`, and all coordinates finite and >= 0.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, ModelError> {
        let ok = [x0, y0, x1, y1].iter().all(|c| c.is_finite() && *c >= 0.0)
            && x0 <= x1
            && y0 <= y1;
        if ok {
            Ok(BBox { x0, y0, x1, y1 })
        } else {
            Err(ModelError::InvalidBBox { x0, y0, x1, y1 })
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Intersection rectangle, if the boxes overlap with positive area.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1);
        let y1 = self.y1.min(other.y1);
        if x0 < x1 && y0 < y1 {
            Some(BBox { x0, y0, x1, y1 })
        } else {
            None
        }
    }

    /// Smallest box covering both inputs.
    pub fn union_box(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    /// Fraction of `inner`'s area covered by `self`; 0 for zero-area `inner`.
    pub fn containment_of(&self, inner: &BBox) -> f64 {
        let inner_area = inner.area();
        if inner_area <= 0.0 {
            return 0.0;
        }
        self.intersection(inner).map_or(0.0, |i| i.area() / inner_area)
    }
}

impl Serialize for BBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x0, self.y0, self.x1, self.y1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x0, y0, x1, y1] = <[f64; 4]>::deserialize(d)?;
        BBox::new(x0, y0, x1, y1).map_err(serde::de::Error::custom)
    }
}

/// The closed set of semantic categories (the full magazine configuration).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Article,
    Author,
    BackgroundFigure,
    Column,
    TextBlock,
    DocumentRoot,
    Figure,
    FigureCaption,
    FigureGraphic,
    Footer,
    Footnote,
    Header,
    Heading,
    Item,
    Itemize,
    Meta,
    OrderedGroup,
    PageNr,
    Row,
    Table,
    TableOfContents,
    Tabular,
    UnorderedGroup,
}

impl Category {
    pub const ALL: [Category; 23] = [
        Category::Article,
        Category::Author,
        Category::BackgroundFigure,
        Category::Column,
        Category::TextBlock,
        Category::DocumentRoot,
        Category::Figure,
        Category::FigureCaption,
        Category::FigureGraphic,
        Category::Footer,
        Category::Footnote,
        Category::Header,
        Category::Heading,
        Category::Item,
        Category::Itemize,
        Category::Meta,
        Category::OrderedGroup,
        Category::PageNr,
        Category::Row,
        Category::Table,
        Category::TableOfContents,
        Category::Tabular,
        Category::UnorderedGroup,
    ];

    /// Canonical snake_case name, identical to the interchange spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Category::Article => "article",
            Category::Author => "author",
            Category::BackgroundFigure => "background_figure",
            Category::Column => "column",
            Category::TextBlock => "text_block",
            Category::DocumentRoot => "document_root",
            Category::Figure => "figure",
            Category::FigureCaption => "figure_caption",
            Category::FigureGraphic => "figure_graphic",
            Category::Footer => "footer",
            Category::Footnote => "footnote",
            Category::Header => "header",
            Category::Heading => "heading",
            Category::Item => "item",
            Category::Itemize => "itemize",
            Category::Meta => "meta",
            Category::OrderedGroup => "ordered_group",
            Category::PageNr => "page_nr",
            Category::Row => "row",
            Category::Table => "table",
            Category::TableOfContents => "table_of_contents",
            Category::Tabular => "tabular",
            Category::UnorderedGroup => "unordered_group",
        }
    }

    /// Name with underscores removed, as used in hOCR `dsg_cat` attributes
    /// and query literals (`ordered_group` -> `orderedgroup`).
    pub fn squashed_name(&self) -> &'static str {
        match self {
            Category::Article => "article",
            Category::Author => "author",
            Category::BackgroundFigure => "backgroundfigure",
            Category::Column => "column",
            Category::TextBlock => "textblock",
            Category::DocumentRoot => "documentroot",
            Category::Figure => "figure",
            Category::FigureCaption => "figurecaption",
            Category::FigureGraphic => "figuregraphic",
            Category::Footer => "footer",
            Category::Footnote => "footnote",
            Category::Header => "header",
            Category::Heading => "heading",
            Category::Item => "item",
            Category::Itemize => "itemize",
            Category::Meta => "meta",
            Category::OrderedGroup => "orderedgroup",
            Category::PageNr => "pagenr",
            Category::Row => "row",
            Category::Table => "table",
            Category::TableOfContents => "tableofcontents",
            Category::Tabular => "tabular",
            Category::UnorderedGroup => "unorderedgroup",
        }
    }

    pub fn from_name(name: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Lookup that tolerates underscore-free spellings.
    pub fn from_squashed(name: &str) -> Option<Category> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.squashed_name() == name)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The active category configuration. Ingestion rejects categories outside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySet {
    members: BTreeSet<Category>,
}

impl CategorySet {
    /// The full 23-category magazine configuration.
    pub fn full() -> Self {
        CategorySet {
            members: Category::ALL.iter().copied().collect(),
        }
    }

    pub fn from_members(members: impl IntoIterator<Item = Category>) -> Self {
        CategorySet {
            members: members.into_iter().collect(),
        }
    }

    pub fn contains(&self, c: Category) -> bool {
        self.members.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in a stable (enum declaration independent, name sorted) order.
    pub fn iter(&self) -> impl Iterator<Item = Category> + '_ {
        self.members.iter().copied()
    }

    /// Dense index of a category within this set, if present.
    pub fn index_of(&self, c: Category) -> Option<usize> {
        self.members.iter().position(|m| *m == c)
    }
}

impl Default for CategorySet {
    fn default() -> Self {
        CategorySet::full()
    }
}

/// Opaque entity identifier, unique within one document.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(s: impl Into<String>) -> Self {
        EntityId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_owned())
    }
}

fn default_confidence() -> f64 {
    1.0
}

/// A detected document element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub category: Category,
    pub bbox: BBox,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl Entity {
    pub fn new(
        id: impl Into<EntityId>,
        category: Category,
        bbox: BBox,
        confidence: f64,
    ) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&confidence) || !confidence.is_finite() {
            return Err(ModelError::InvalidConfidence(confidence));
        }
        Ok(Entity {
            id: id.into(),
            category,
            bbox,
            confidence,
        })
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

/// The three relation types; `Null` marks the absence of a relation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    ParentOf,
    FollowedBy,
    Null,
}

impl RelationType {
    pub const ALL: [RelationType; 3] =
        [RelationType::ParentOf, RelationType::FollowedBy, RelationType::Null];

    pub fn name(&self) -> &'static str {
        match self {
            RelationType::ParentOf => "parent_of",
            RelationType::FollowedBy => "followed_by",
            RelationType::Null => "null",
        }
    }

    /// Dense index used by classifier logits and bias tables.
    pub fn index(&self) -> usize {
        match self {
            RelationType::ParentOf => 0,
            RelationType::FollowedBy => 1,
            RelationType::Null => 2,
        }
    }

    pub fn from_index(i: usize) -> RelationType {
        RelationType::ALL[i]
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed directed edge between two entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub subject: EntityId,
    pub object: EntityId,
    #[serde(rename = "type")]
    pub rtype: RelationType,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl Relation {
    pub fn new(
        subject: impl Into<EntityId>,
        object: impl Into<EntityId>,
        rtype: RelationType,
        confidence: f64,
    ) -> Self {
        Relation {
            subject: subject.into(),
            object: object.into(),
            rtype,
            confidence,
        }
    }

    /// The `(subject, object, type)` triple identifying this relation.
    pub fn key(&self) -> (EntityId, EntityId, RelationType) {
        (self.subject.clone(), self.object.clone(), self.rtype)
    }
}

/// Page dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageSize {
    pub width: f64,
    pub height: f64,
}

impl PageSize {
    pub fn new(width: f64, height: f64) -> Result<Self, ModelError> {
        if width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite() {
            Ok(PageSize { width, height })
        } else {
            Err(ModelError::InvalidPageSize { width, height })
        }
    }
}

/// Raw predicted or annotated structure for one page. May be invalid as a
/// tree (cycles, orphans); the grammar module repairs it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentGraph {
    pub page_size: PageSize,
    pub entities: Vec<Entity>,
    pub relations: Vec<Relation>,
}

impl DocumentGraph {
    /// Builds a graph, checking entity id uniqueness, relation endpoint
    /// resolution, subject != object, and triple uniqueness.
    pub fn new(
        page_size: PageSize,
        entities: Vec<Entity>,
        relations: Vec<Relation>,
    ) -> Result<Self, ModelError> {
        let g = DocumentGraph {
            page_size,
            entities,
            relations,
        };
        g.check_well_formed(None)?;
        Ok(g)
    }

    fn check_well_formed(&self, categories: Option<&CategorySet>) -> Result<(), ModelError> {
        let mut ids = BTreeSet::new();
        for e in &self.entities {
            if !ids.insert(&e.id) {
                return Err(ModelError::DuplicateEntityId(e.id.clone()));
            }
            if !(0.0..=1.0).contains(&e.confidence) || !e.confidence.is_finite() {
                return Err(ModelError::InvalidConfidence(e.confidence));
            }
            if let Some(set) = categories {
                if !set.contains(e.category) {
                    return Err(ModelError::InactiveCategory(e.category));
                }
            }
        }
        let mut triples = BTreeSet::new();
        for r in &self.relations {
            if r.subject == r.object {
                return Err(ModelError::SelfRelation(r.subject.clone()));
            }
            for end in [&r.subject, &r.object] {
                if !ids.contains(end) {
                    return Err(ModelError::UnknownEndpoint(end.clone()));
                }
            }
            if !triples.insert((&r.subject, &r.object, r.rtype)) {
                return Err(ModelError::DuplicateRelation {
                    subject: r.subject.clone(),
                    object: r.object.clone(),
                    rtype: r.rtype,
                });
            }
            if !(0.0..=1.0).contains(&r.confidence) || !r.confidence.is_finite() {
                return Err(ModelError::InvalidConfidence(r.confidence));
            }
        }
        Ok(())
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.iter().find(|e| &e.id == id)
    }

    /// Id -> position index over the entity list.
    pub fn entity_index(&self) -> HashMap<&EntityId, usize> {
        self.entities.iter().enumerate().map(|(i, e)| (&e.id, i)).collect()
    }

    pub fn relations_of_type(&self, rtype: RelationType) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.rtype == rtype)
    }

    /// Parses interchange JSON and validates against the full category set.
    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        Self::from_json_str_with(s, &CategorySet::full())
    }

    /// Parses interchange JSON against an explicit category configuration.
    pub fn from_json_str_with(s: &str, categories: &CategorySet) -> Result<Self, ModelError> {
        let g: DocumentGraph = serde_json::from_str(s)?;
        PageSize::new(g.page_size.width, g.page_size.height)?;
        g.check_well_formed(Some(categories))?;
        Ok(g)
    }

    /// Canonical interchange emission: UTF-8, keys sorted, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }
}

/// Serializes any value with sorted object keys and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Value maps are BTreeMaps, so going through Value sorts keys.
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("json string");
    s.push('\n');
    s
}

/// A postprocessed, valid hierarchical structure.
///
/// Construction goes through [`DocumentTree::from_graph`] or the grammar
/// module, both of which guarantee the tree invariants hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTree {
    #[serde(flatten)]
    pub graph: DocumentGraph,
    pub root: EntityId,
}

impl DocumentTree {
    /// Wraps a graph that already satisfies every tree invariant.
    ///
    /// Returns the validation report as the error when it does not.
    pub fn from_graph(graph: DocumentGraph) -> Result<Self, crate::validation::ValidationReport> {
        let report = crate::validation::validate_tree(&graph);
        if !report.is_valid() {
            return Err(report);
        }
        let root = graph
            .entities
            .iter()
            .find(|e| e.category == Category::DocumentRoot)
            .expect("valid tree has a document_root")
            .id
            .clone();
        Ok(DocumentTree { graph, root })
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let t: DocumentTree = serde_json::from_str(s)?;
        PageSize::new(t.graph.page_size.width, t.graph.page_size.height)?;
        t.graph.check_well_formed(Some(&CategorySet::full()))?;
        if t.graph.entity(&t.root).is_none() {
            return Err(ModelError::NoSuchEntity(t.root.clone()));
        }
        Ok(t)
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_json(self)
    }

    /// Parent of `id` via the unique incoming `parent_of` edge.
    pub fn parent_of(&self, id: &EntityId) -> Option<&EntityId> {
        self.graph
            .relations
            .iter()
            .find(|r| r.rtype == RelationType::ParentOf && &r.object == id)
            .map(|r| &r.subject)
    }

    /// Direct `followed_by` successor of `id`, if any.
    pub fn successor_of(&self, id: &EntityId) -> Option<&EntityId> {
        self.graph
            .relations
            .iter()
            .find(|r| r.rtype == RelationType::FollowedBy && &r.subject == id)
            .map(|r| &r.object)
    }

    /// Entities without `parent_of` children (word anchors in hOCR output).
    pub fn leaf_ids(&self) -> Vec<EntityId> {
        let parents: BTreeSet<&EntityId> = self
            .graph
            .relations_of_type(RelationType::ParentOf)
            .map(|r| &r.subject)
            .collect();
        self.graph
            .entities
            .iter()
            .filter(|e| !parents.contains(&e.id))
            .map(|e| e.id.clone())
            .collect()
    }
}
