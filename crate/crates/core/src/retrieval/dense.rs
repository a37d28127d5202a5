use serde::{Deserialize, Serialize};

use super::{rank_top_k, RetrievalError, RetrievedExample, Strategy};
use crate::corpus::ParallelPair;

/// Scales `v` to unit L2 norm. Zero vectors are returned unchanged.
pub fn normalize(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / norm).collect()
}

/// Exhaustive cosine-similarity index; rows are stored unit-normalized so
/// cosine reduces to a dot product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingIndex {
    pairs: Vec<ParallelPair>,
    vectors: Vec<Vec<f64>>,
    dimension: usize,
    /// Identifies the embedding model that produced the vectors.
    pub fingerprint: String,
}

impl EmbeddingIndex {
    pub fn build(
        pairs: &[ParallelPair],
        embeddings: Vec<Vec<f64>>,
        fingerprint: impl Into<String>,
    ) -> Result<Self, RetrievalError> {
        if pairs.len() != embeddings.len() {
            return Err(RetrievalError::RowCount { pairs: pairs.len(), vectors: embeddings.len() });
        }
        let dimension = embeddings.first().map_or(0, Vec::len);
        if let Some(bad) = embeddings.iter().find(|v| v.len() != dimension) {
            return Err(RetrievalError::DimensionMismatch { expected: dimension, found: bad.len() });
        }
        Ok(Self {
            pairs: pairs.to_vec(),
            vectors: embeddings.iter().map(|v| normalize(v)).collect(),
            dimension,
            fingerprint: fingerprint.into(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Top-k rows by cosine similarity to `query` (normalized here if it is not already).
    pub fn retrieve(&self, query: &[f64], k: usize) -> Result<Vec<RetrievedExample>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        if query.len() != self.dimension {
            return Err(RetrievalError::DimensionMismatch { expected: self.dimension, found: query.len() });
        }
        let q = normalize(query);
        let scored =
            self.pairs.iter().zip(&self.vectors).map(|(p, v)| (p, v.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>()));
        Ok(rank_top_k(scored, k)
            .into_iter()
            .map(|(p, s)| RetrievedExample::new(p.clone(), s, Strategy::Dense))
            .collect())
    }
}
