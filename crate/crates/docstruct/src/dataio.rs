//! Corpus ingestion, split management, and summary statistics.
//!
//! A corpus directory holds one interchange JSON file per page; a page
//! `x.json` may bring OCR words in a sibling `x.words.json`. The split file
//! maps document ids (file stems) to train/val/test:
//! `{"train": [ids], "val": [ids], "test": [ids]}`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hocr::Word;
use crate::model::{Category, CategorySet, DocumentGraph, EntityId, RelationType};
use crate::validation::validate_tree;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Schema { file: PathBuf, message: String },
    #[error("document `{0}` has no split assignment")]
    MissingSplit(String),
    #[error("document id `{0}` appears more than once")]
    DuplicateId(String),
    #[error("split file lists unknown document `{0}`")]
    UnknownDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One ingested page.
#[derive(Debug, Clone)]
pub struct CorpusDocument {
    pub id: String,
    pub graph: DocumentGraph,
    pub words: Option<Vec<Word>>,
    pub split: Split,
}

/// A validated corpus: every page parsed, every relation endpoint resolved,
/// splits disjoint and covering all documents.
#[derive(Debug, Clone)]
pub struct Corpus {
    /// Sorted by document id.
    pub documents: Vec<CorpusDocument>,
    pub categories: CategorySet,
}

impl Corpus {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &CorpusDocument> {
        self.documents.iter().filter(move |d| d.split == split)
    }

    pub fn split_sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.split(Split::Train).count(),
            val: self.split(Split::Val).count(),
            test: self.split(Split::Test).count(),
        }
    }

    pub fn graphs_of(&self, split: Split) -> Vec<DocumentGraph> {
        self.split(split).map(|d| d.graph.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Deserialize)]
struct SplitFile {
    #[serde(default)]
    train: Vec<String>,
    #[serde(default)]
    val: Vec<String>,
    #[serde(default)]
    test: Vec<String>,
}

/// Loads a corpus against the full category configuration.
pub fn load_corpus(root: &Path, split_file: &Path) -> Result<Corpus, DataError> {
    load_corpus_with(root, split_file, &CategorySet::full())
}

/// Loads a corpus, validating every page against `categories`.
pub fn load_corpus_with(
    root: &Path,
    split_file: &Path,
    categories: &CategorySet,
) -> Result<Corpus, DataError> {
    fn io(path: &Path) -> impl Fn(std::io::Error) -> DataError + '_ {
        move |source| DataError::Io { path: path.to_path_buf(), source }
    }

    let split_text = std::fs::read_to_string(split_file).map_err(io(split_file))?;
    let splits: SplitFile = serde_json::from_str(&split_text).map_err(|e| DataError::Schema {
        file: split_file.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut split_of: BTreeMap<String, Split> = BTreeMap::new();
    for (ids, split) in [
        (&splits.train, Split::Train),
        (&splits.val, Split::Val),
        (&splits.test, Split::Test),
    ] {
        for id in ids {
            if split_of.insert(id.clone(), split).is_some() {
                return Err(DataError::DuplicateId(id.clone()));
            }
        }
    }

    let split_canonical = split_file.canonicalize().ok();
    let mut page_files: Vec<PathBuf> = Vec::new();
    for entry in std::fs::read_dir(root).map_err(io(root))? {
        let entry = entry.map_err(io(root))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.canonicalize().ok() == split_canonical {
            continue; // the split file may live next to the pages
        }
        if name.ends_with(".json") && !name.ends_with(".words.json") {
            page_files.push(path);
        }
    }
    page_files.sort();

    let mut documents = Vec::with_capacity(page_files.len());
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for path in page_files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateId(id));
        }
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let graph = DocumentGraph::from_json_str_with(&text, categories).map_err(|e| {
            DataError::Schema { file: path.clone(), message: e.to_string() }
        })?;
        let split = *split_of.get(&id).ok_or_else(|| DataError::MissingSplit(id.clone()))?;

        let words_path = path.with_file_name(format!("{id}.words.json"));
        let words = if words_path.exists() {
            let wtext = std::fs::read_to_string(&words_path).map_err(io(&words_path))?;
            let words: Vec<Word> = serde_json::from_str(&wtext).map_err(|e| DataError::Schema {
                file: words_path.clone(),
                message: e.to_string(),
            })?;
            if let Some(bad) = words.iter().find(|w| w.text.is_empty()) {
                return Err(DataError::Schema {
                    file: words_path.clone(),
                    message: format!("word with empty text at bbox {:?}", bad.bbox),
                });
            }
            Some(words)
        } else {
            None
        };
        documents.push(CorpusDocument { id, graph, words, split });
    }

    for id in split_of.keys() {
        if !seen.contains(id) {
            return Err(DataError::UnknownDocument(id.clone()));
        }
    }

    Ok(Corpus { documents, categories: categories.clone() })
}

/// Per-category corpus statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub frequency: usize,
    /// Fraction of all entities.
    pub percentage: f64,
    /// Mean root-distance (root = 1) over valid-tree documents; absent when
    /// the category never occurs in one.
    pub average_depth: Option<f64>,
}

/// Corpus summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub document_count: usize,
    pub entity_count: usize,
    pub split_sizes: SplitSizes,
    pub per_category: BTreeMap<Category, CategoryStat>,
    /// leaves-per-document -> number of documents.
    pub leaf_histogram: BTreeMap<usize, usize>,
    /// Documents failing tree validation (in frequency stats, excluded from
    /// depth stats).
    pub invalid_tree_documents: usize,
}

impl CorpusStats {
    pub fn to_canonical_json(&self) -> String {
        crate::model::to_canonical_json(self)
    }
}

/// Computes frequencies, percentages, per-category average tree depth
/// (root = 1), and the leaf-count histogram. A pure fold over documents,
/// independent of document order (depth sums are integer).
pub fn compute_stats(corpus: &Corpus) -> CorpusStats {
    let mut frequency: BTreeMap<Category, usize> = BTreeMap::new();
    let mut depth_sum: BTreeMap<Category, u64> = BTreeMap::new();
    let mut depth_count: BTreeMap<Category, u64> = BTreeMap::new();
    let mut leaf_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut invalid = 0usize;
    let mut entity_count = 0usize;

    for doc in &corpus.documents {
        entity_count += doc.graph.entities.len();
        for e in &doc.graph.entities {
            *frequency.entry(e.category).or_insert(0) += 1;
        }

        let parents: BTreeSet<&EntityId> = doc
            .graph
            .relations_of_type(RelationType::ParentOf)
            .map(|r| &r.subject)
            .collect();
        let leaves = doc.graph.entities.iter().filter(|e| !parents.contains(&e.id)).count();
        *leaf_histogram.entry(leaves).or_insert(0) += 1;

        if !validate_tree(&doc.graph).is_valid() {
            invalid += 1;
            continue;
        }
        // Depths via BFS from the root (depth 1).
        let root = doc
            .graph
            .entities
            .iter()
            .find(|e| e.category == Category::DocumentRoot)
            .expect("valid tree has a root");
        let mut children: BTreeMap<&EntityId, Vec<&EntityId>> = BTreeMap::new();
        for r in doc.graph.relations_of_type(RelationType::ParentOf) {
            children.entry(&r.subject).or_default().push(&r.object);
        }
        let mut queue = std::collections::VecDeque::from([(&root.id, 1u64)]);
        while let Some((id, depth)) = queue.pop_front() {
            let cat = doc.graph.entity(id).expect("entity resolves").category;
            *depth_sum.entry(cat).or_insert(0) += depth;
            *depth_count.entry(cat).or_insert(0) += 1;
            if let Some(kids) = children.get(id) {
                for kid in kids {
                    queue.push_back((kid, depth + 1));
                }
            }
        }
    }

    let per_category = frequency
        .iter()
        .map(|(cat, freq)| {
            let average_depth = depth_count
                .get(cat)
                .map(|count| depth_sum[cat] as f64 / *count as f64);
            (
                *cat,
                CategoryStat {
                    frequency: *freq,
                    percentage: if entity_count == 0 {
                        0.0
                    } else {
                        *freq as f64 / entity_count as f64
                    },
                    average_depth,
                },
            )
        })
        .collect();

    CorpusStats {
        document_count: corpus.documents.len(),
        entity_count,
        split_sizes: corpus.split_sizes(),
        per_category,
        leaf_histogram,
        invalid_tree_documents: invalid,
    }
}
