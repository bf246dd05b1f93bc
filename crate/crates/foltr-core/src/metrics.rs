//! Offline ranking quality: DCG@k / nDCG@k over a held-out test split.
//!
//! Exponential gain `(2^rel - 1)` with `log2(rank + 1)` discount, the LETOR
//! convention. Queries whose ideal DCG is zero (no relevant documents) score
//! 0.0 rather than being excluded, so means stay well-defined on degenerate
//! data. Evaluation never consumes randomness: score ties keep the stable
//! input document order.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParamVector};
use crate::num;

/// One offline evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub round: u64,
    pub ndcg_at_10: f64,
    /// Stable hash of the run configuration, for joining result files.
    pub fingerprint: String,
    pub seed: u64,
}

/// DCG@k of relevance grades already in rank order.
pub fn dcg_at_k(relevances_in_rank_order: &[u8], k: usize) -> f64 {
    assert!(k >= 1, "DCG cutoff must be at least 1");
    relevances_in_rank_order
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &rel)| {
            let gain = ((1u64 << rel) - 1) as f64;
            gain / num::log2((i + 2) as f64)
        })
        .sum()
}

/// nDCG@k: DCG of the ranking normalized by the DCG of the ideal
/// (descending-grade) ordering of the same candidates.
pub fn ndcg_at_k(ranked_relevances: &[u8], all_relevances: &[u8], k: usize) -> f64 {
    let mut ideal = all_relevances.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let ideal_dcg = dcg_at_k(&ideal, k);
    if ideal_dcg == 0.0 {
        return 0.0;
    }
    dcg_at_k(ranked_relevances, k) / ideal_dcg
}

/// Mean nDCG@k of a ranker over every query of the test split. Candidates
/// are ordered by descending score with ties kept in input order.
pub fn offline_eval(
    spec: &ModelSpec,
    params: &ParamVector,
    test: &Dataset,
    k: usize,
) -> Result<f64> {
    if test.queries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for query in &test.queries {
        let mut scored: Vec<(f64, u8)> = Vec::with_capacity(query.documents.len());
        for doc in &query.documents {
            scored.push((spec.score(params, &doc.features)?, doc.relevance));
        }
        // stable sort: equal scores keep input order
        let mut order: Vec<usize> = (0..scored.len()).collect();
        order.sort_by(|&a, &b| scored[b].0.partial_cmp(&scored[a].0).unwrap());
        let ranked: Vec<u8> = order.iter().map(|&i| scored[i].1).collect();
        let all: Vec<u8> = scored.iter().map(|&(_, r)| r).collect();
        total += ndcg_at_k(&ranked, &all, k);
    }
    Ok(total / test.queries.len() as f64)
}
