//! Synthetic ranking data: relevance is a (optionally noisy) linear function
//! of uniformly drawn features, so a linear ranker can always recover it.

use foltr_core::data::{Dataset, Document, QueryGroup};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub queries: usize,
    pub docs_per_query: usize,
    pub features: usize,
    pub grade_levels: u8,
    pub seed: u64,
    /// Probability of bumping a grade one level up or down.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            queries: 200,
            docs_per_query: 10,
            features: 5,
            grade_levels: 5,
            seed: 1,
            noise: 0.0,
        }
    }
}

/// The ground-truth weight vector grades are derived from.
pub fn true_weights(features: usize) -> Vec<f64> {
    (0..features)
        .map(|j| 1.0 - 0.8 * j as f64 / features.max(2) as f64)
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let w = true_weights(spec.features);
    let w_sum: f64 = w.iter().sum();
    let g = spec.grade_levels as f64;

    let queries = (1..=spec.queries)
        .map(|qid| {
            let documents = (0..spec.docs_per_query)
                .map(|d| {
                    let features: Vec<f64> = (0..spec.features)
                        .map(|_| rng.gen_range(0.0..1.0))
                        .collect();
                    let t: f64 = features.iter().zip(w.iter()).map(|(x, wi)| x * wi).sum();
                    let mut grade = ((t / w_sum) * g).floor() as i32;
                    if spec.noise > 0.0 && rng.gen::<f64>() < spec.noise {
                        grade += if rng.gen::<bool>() { 1 } else { -1 };
                    }
                    let grade = grade.clamp(0, spec.grade_levels as i32 - 1) as u8;
                    Document {
                        features,
                        relevance: grade,
                        doc_key: format!("q{qid}_d{d}"),
                    }
                })
                .collect();
            QueryGroup {
                query_id: qid.to_string(),
                documents,
            }
        })
        .collect();

    Dataset {
        queries,
        feature_dim: spec.features,
        grade_levels: spec.grade_levels,
    }
}
