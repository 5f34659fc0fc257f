//! Model serialization: JSON with base64-encoded little-endian f64 matrices.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bias::FrequencyBiasTable;
use super::linalg::Matrix;
use super::{ModelDims, RelationModel, GEO_DIM};
use crate::model::{Category, CategorySet};

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("base64: {0}")]
    Base64(#[from] base64::DecodeError),
    #[error("matrix `{name}` has {got} values, expected {want}")]
    MatrixSize { name: &'static str, got: usize, want: usize },
    #[error("unknown category name `{0}`")]
    UnknownCategory(String),
    #[error("tau {0} outside (0, 1)")]
    InvalidTau(f64),
    #[error("model contains non-finite weights")]
    NonFinite,
}

#[derive(Serialize, Deserialize)]
struct DimsJson {
    categories: usize,
    embed: usize,
    fusion: usize,
    geo: usize,
    ctx: usize,
    pair2: usize,
    relation_types: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    dims: DimsJson,
    categories: Vec<String>,
    category_embeddings: String,
    w_pair_1: String,
    w_pair_2: String,
    w_pair_rel: String,
    refine_weights: String,
    bias_table: String,
    tau: f64,
}

fn encode(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode(name: &'static str, s: &str, want: usize) -> Result<Vec<f64>, ModelIoError> {
    let bytes = B64.decode(s)?;
    if bytes.len() != want * 8 {
        return Err(ModelIoError::MatrixSize { name, got: bytes.len() / 8, want });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub(super) fn to_json(model: &RelationModel) -> String {
    let n = model.categories.len();
    let json = ModelJson {
        dims: DimsJson {
            categories: n,
            embed: model.dims.embed,
            fusion: model.dims.fusion,
            geo: GEO_DIM,
            ctx: model.dims.ctx(),
            pair2: model.dims.pair2(),
            relation_types: 3,
        },
        categories: model.categories.iter().map(|c| c.name().to_owned()).collect(),
        category_embeddings: encode(model.category_embeddings.data()),
        w_pair_1: encode(model.w_pair_1.data()),
        w_pair_2: encode(model.w_pair_2.data()),
        w_pair_rel: encode(model.w_pair_rel.data()),
        refine_weights: encode(model.refine_weights.data()),
        bias_table: encode(model.bias_table.raw()),
        tau: model.tau,
    };
    crate::model::to_canonical_json(&json)
}

pub(super) fn from_json(s: &str) -> Result<RelationModel, ModelIoError> {
    let json: ModelJson = serde_json::from_str(s)?;
    if !(json.tau > 0.0 && json.tau < 1.0) {
        return Err(ModelIoError::InvalidTau(json.tau));
    }
    let mut members = Vec::with_capacity(json.categories.len());
    for name in &json.categories {
        members.push(
            Category::from_name(name)
                .ok_or_else(|| ModelIoError::UnknownCategory(name.clone()))?,
        );
    }
    let categories = CategorySet::from_members(members);
    let n = categories.len();
    let dims = ModelDims { embed: json.dims.embed, fusion: json.dims.fusion };

    let model = RelationModel {
        category_embeddings: Matrix::from_vec(
            n,
            dims.embed,
            decode("category_embeddings", &json.category_embeddings, n * dims.embed)?,
        ),
        w_pair_1: Matrix::from_vec(
            dims.fusion,
            GEO_DIM,
            decode("w_pair_1", &json.w_pair_1, dims.fusion * GEO_DIM)?,
        ),
        w_pair_2: Matrix::from_vec(
            dims.fusion,
            dims.pair2(),
            decode("w_pair_2", &json.w_pair_2, dims.fusion * dims.pair2())?,
        ),
        w_pair_rel: Matrix::from_vec(
            3,
            dims.fusion,
            decode("w_pair_rel", &json.w_pair_rel, 3 * dims.fusion)?,
        ),
        refine_weights: Matrix::from_vec(
            n,
            dims.ctx(),
            decode("refine_weights", &json.refine_weights, n * dims.ctx())?,
        ),
        bias_table: FrequencyBiasTable::from_raw(
            categories.clone(),
            decode("bias_table", &json.bias_table, n * n * 3)?,
        ),
        categories,
        dims,
        tau: json.tau,
    };
    let finite = model.category_embeddings.is_finite()
        && model.w_pair_1.is_finite()
        && model.w_pair_2.is_finite()
        && model.w_pair_rel.is_finite()
        && model.refine_weights.is_finite()
        && model.bias_table.raw().iter().all(|v| v.is_finite());
    if !finite {
        return Err(ModelIoError::NonFinite);
    }
    Ok(model)
}
