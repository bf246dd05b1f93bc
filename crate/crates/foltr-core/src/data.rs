//! LETOR/SVMLight-style ranking datasets: parsing, feature normalization and
//! query-level train/test splitting.
//!
//! A dataset line looks like
//!
//! ```text
//! 2 qid:10 1:0.5 3:1.0 # docid = GX001
//! ```
//!
//! i.e. an integer relevance grade, a query id, sparse `feature:value` pairs
//! (1-based feature ids, absent ids default to 0.0) and an optional trailing
//! comment that becomes the document key.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num;

/// One query-document pair: dense feature vector plus graded relevance.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub features: Vec<f64>,
    /// Relevance grade in `[0, grade_levels)`.
    pub relevance: u8,
    /// Opaque identifier; the trailing `#` comment when present.
    pub doc_key: String,
}

/// All candidate documents of one query, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: String,
    pub documents: Vec<Document>,
}

/// A parsed dataset: query groups sharing one feature dimension and one
/// relevance grade scale (3-level MQ2007-style or 5-level MSLR-style).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub queries: Vec<QueryGroup>,
    pub feature_dim: usize,
    pub grade_levels: u8,
}

impl Dataset {
    pub fn n_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn n_documents(&self) -> usize {
        self.queries.iter().map(|q| q.documents.len()).sum()
    }

    /// Force a grade scale (e.g. a 5-level dataset whose sample happens to
    /// contain only low grades). Fails if any document grade does not fit.
    pub fn with_grade_levels(mut self, levels: u8) -> Result<Self> {
        if levels != 3 && levels != 5 {
            return Err(Error::InvalidConfig(format!(
                "grade_levels must be 3 or 5, got {levels}"
            )));
        }
        for q in &self.queries {
            for d in &q.documents {
                if d.relevance >= levels {
                    return Err(Error::GradeOutOfRange {
                        grade: d.relevance,
                        levels,
                    });
                }
            }
        }
        self.grade_levels = levels;
        Ok(self)
    }
}

/// Parse LETOR/SVMLight text into a [`Dataset`].
///
/// Queries keep first-appearance order; documents keep line order within
/// their query. `feature_dim` is the largest feature id seen anywhere.
/// The grade scale is inferred: 3 levels when no grade exceeds 2, else 5.
pub fn parse_letor(text: &str) -> Result<Dataset> {
    struct RawDoc {
        qid: String,
        relevance: u8,
        pairs: Vec<(usize, f64)>,
        doc_key: String,
    }

    let mut raw: Vec<RawDoc> = Vec::new();
    let mut max_fid = 0usize;
    let mut max_grade = 0u8;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let perr = |reason: String| Error::Parse {
            line: lineno,
            reason,
        };

        let (body, comment) = match line.find('#') {
            Some(pos) => (&line[..pos], line[pos + 1..].trim()),
            None => (line, ""),
        };
        let body = body.trim();
        if body.is_empty() {
            continue;
        }

        let mut tokens = body.split_whitespace();
        let rel_tok = tokens
            .next()
            .ok_or_else(|| perr("empty line".to_string()))?;
        let relevance: u8 = rel_tok.parse().map_err(|_| {
            perr(format!(
                "relevance label `{rel_tok}` is not a small non-negative integer"
            ))
        })?;
        if relevance > 4 {
            return Err(perr(format!(
                "relevance grade {relevance} exceeds the supported 5-level scale"
            )));
        }

        let qid_tok = tokens
            .next()
            .ok_or_else(|| perr("missing qid field".to_string()))?;
        let qid = qid_tok
            .strip_prefix("qid:")
            .ok_or_else(|| perr(format!("expected `qid:<id>`, got `{qid_tok}`")))?;
        if qid.is_empty() {
            return Err(perr("empty qid".to_string()));
        }

        let mut pairs = Vec::new();
        for tok in tokens {
            let (fid_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected `feature:value`, got `{tok}`")))?;
            let fid: usize = fid_str
                .parse()
                .map_err(|_| perr(format!("feature id `{fid_str}` is not an integer")))?;
            if fid == 0 {
                return Err(perr("feature ids are 1-based; got 0".to_string()));
            }
            let val: f64 = val_str
                .parse()
                .map_err(|_| perr(format!("feature value `{val_str}` is not a number")))?;
            pairs.push((fid, val));
            if fid > max_fid {
                max_fid = fid;
            }
        }

        if relevance > max_grade {
            max_grade = relevance;
        }
        raw.push(RawDoc {
            qid: qid.to_string(),
            relevance,
            pairs,
            doc_key: comment.to_string(),
        });
    }

    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let grade_levels = if max_grade <= 2 { 3 } else { 5 };

    let mut queries: Vec<QueryGroup> = Vec::new();
    for (i, doc) in raw.into_iter().enumerate() {
        let mut features = vec![0.0; max_fid];
        for (fid, val) in doc.pairs {
            features[fid - 1] = val;
        }
        let doc_key = if doc.doc_key.is_empty() {
            format!("q{}_d{}", doc.qid, i)
        } else {
            doc.doc_key
        };
        let document = Document {
            features,
            relevance: doc.relevance,
            doc_key,
        };
        match queries.iter_mut().find(|q| q.query_id == doc.qid) {
            Some(group) => group.documents.push(document),
            None => queries.push(QueryGroup {
                query_id: doc.qid,
                documents: vec![document],
            }),
        }
    }

    Ok(Dataset {
        queries,
        feature_dim: max_fid,
        grade_levels,
    })
}

/// Serialize a dataset back to LETOR text. Zero-valued features are kept so
/// that `parse_letor(to_letor_string(d)) == d` (the feature dimension is
/// preserved even when trailing features are zero).
pub fn to_letor_string(dataset: &Dataset) -> String {
    let mut out = String::new();
    for query in &dataset.queries {
        for doc in &query.documents {
            out.push_str(&format!("{} qid:{}", doc.relevance, query.query_id));
            for (i, v) in doc.features.iter().enumerate() {
                out.push_str(&format!(" {}:{}", i + 1, v));
            }
            out.push_str(&format!(" # {}\n", doc.doc_key));
        }
    }
    out
}

/// Global per-feature min-max scaling: `x' = (x - min) / (max - min)`,
/// computed over the whole dataset. Constant features map to 0.0.
pub fn normalize_features(dataset: &Dataset) -> Dataset {
    let dim = dataset.feature_dim;
    let mut mins = vec![f64::INFINITY; dim];
    let mut maxs = vec![f64::NEG_INFINITY; dim];
    for query in &dataset.queries {
        for doc in &query.documents {
            for (j, &v) in doc.features.iter().enumerate() {
                if v < mins[j] {
                    mins[j] = v;
                }
                if v > maxs[j] {
                    maxs[j] = v;
                }
            }
        }
    }

    let mut out = dataset.clone();
    for query in &mut out.queries {
        for doc in &mut query.documents {
            for (j, v) in doc.features.iter_mut().enumerate() {
                let range = maxs[j] - mins[j];
                *v = if range > 0.0 {
                    (*v - mins[j]) / range
                } else {
                    0.0
                };
            }
        }
    }
    out
}

/// Deterministic query-level split. No query ever appears on both sides;
/// the test side gets `round(test_fraction * n)` queries, clamped so that
/// neither side is empty.
pub fn split_train_test(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction {
            fraction: test_fraction,
        });
    }
    let n = dataset.queries.len();
    if n < 2 {
        return Err(Error::NotEnoughQueries { have: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let requested = num::round(test_fraction * n as f64) as usize;
    let n_test = requested.clamp(1, n - 1);

    let test_ids: &[usize] = &order[..n_test];
    let mut train = Dataset {
        queries: Vec::with_capacity(n - n_test),
        feature_dim: dataset.feature_dim,
        grade_levels: dataset.grade_levels,
    };
    let mut test = Dataset {
        queries: Vec::with_capacity(n_test),
        feature_dim: dataset.feature_dim,
        grade_levels: dataset.grade_levels,
    };
    for (i, query) in dataset.queries.iter().enumerate() {
        if test_ids.contains(&i) {
            test.queries.push(query.clone());
        } else {
            train.queries.push(query.clone());
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_line_with_sparse_features() {
        let ds = parse_letor("2 qid:1 1:0.5 3:1.0").unwrap();
        assert_eq!(ds.queries.len(), 1);
        assert_eq!(ds.feature_dim, 3);
        assert_eq!(ds.grade_levels, 3);
        let doc = &ds.queries[0].documents[0];
        assert_eq!(doc.features, vec![0.5, 0.0, 1.0]);
        assert_eq!(doc.relevance, 2);
    }

    #[test]
    fn groups_lines_sharing_a_qid() {
        let ds = parse_letor("0 qid:7 1:1.0\n1 qid:7 1:2.0").unwrap();
        assert_eq!(ds.queries.len(), 1);
        assert_eq!(ds.queries[0].documents.len(), 2);
    }

    #[test]
    fn grouping_matches_independent_line_count() {
        // Ten lines over qids {1,2,3}; the oracle counts occurrences of each
        // qid token directly on the raw text.
        let text = "\
0 qid:1 1:0.1\n1 qid:2 1:0.2\n2 qid:1 1:0.3\n0 qid:3 1:0.4\n1 qid:1 1:0.5\n\
0 qid:2 1:0.6\n1 qid:3 1:0.7\n0 qid:1 1:0.8\n2 qid:2 1:0.9\n0 qid:3 1:1.0\n";
        let ds = parse_letor(text).unwrap();
        assert_eq!(ds.queries.len(), 3);
        for q in &ds.queries {
            let oracle = text
                .lines()
                .filter(|l| l.contains(&alloc::format!("qid:{} ", q.query_id)))
                .count();
            assert_eq!(q.documents.len(), oracle, "qid {}", q.query_id);
        }
    }

    #[test]
    fn rejects_malformed_lines_with_line_number() {
        match parse_letor("2 qid:1 1:0.5\nnot a line") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_letor("2 noqid 1:0.5"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_letor("1 qid:1 1:abc"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_letor(""), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_letor("1 qid:1 0:0.5"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn comments_become_doc_keys() {
        let ds = parse_letor("1 qid:1 1:0.5 # docid = GX42").unwrap();
        assert_eq!(ds.queries[0].documents[0].doc_key, "docid = GX42");
    }

    #[test]
    fn five_level_scale_inferred_from_high_grades() {
        let ds = parse_letor("4 qid:1 1:0.5\n0 qid:1 1:0.1").unwrap();
        assert_eq!(ds.grade_levels, 5);
    }

    #[test]
    fn normalizes_column_to_unit_range() {
        let ds = parse_letor("0 qid:1 1:0\n0 qid:1 1:5\n0 qid:2 1:10").unwrap();
        let normed = normalize_features(&ds);
        let vals: Vec<f64> = normed
            .queries
            .iter()
            .flat_map(|q| q.documents.iter().map(|d| d.features[0]))
            .collect();
        assert_eq!(vals, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let ds = parse_letor("0 qid:1 1:3\n0 qid:1 1:3").unwrap();
        let normed = normalize_features(&ds);
        for q in &normed.queries {
            for d in &q.documents {
                assert_eq!(d.features[0], 0.0);
            }
        }
    }

    #[test]
    fn normalized_columns_span_unit_interval() {
        // 4 docs x 3 features with distinct values; oracle recomputes the
        // min/max per column with a separate pass over the original data.
        let text = "\
0 qid:1 1:4 2:-1 3:10\n0 qid:1 1:2 2:3 3:-5\n0 qid:2 1:9 2:0 3:2\n0 qid:2 1:1 2:7 3:0\n";
        let ds = parse_letor(text).unwrap();
        let normed = normalize_features(&ds);
        for j in 0..3 {
            let orig: Vec<f64> = ds
                .queries
                .iter()
                .flat_map(|q| q.documents.iter().map(|d| d.features[j]))
                .collect();
            let (lo, hi) = orig
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            for (q, group) in normed.queries.iter().enumerate() {
                for (d, doc) in group.documents.iter().enumerate() {
                    let expect = (ds.queries[q].documents[d].features[j] - lo) / (hi - lo);
                    assert!((doc.features[j] - expect).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn split_sizes_follow_fraction() {
        let text: String = (1..=10)
            .map(|q| alloc::format!("0 qid:{q} 1:0.5\n"))
            .collect();
        let ds = parse_letor(&text).unwrap();
        let (train, test) = split_train_test(&ds, 0.2, 7).unwrap();
        assert_eq!(train.queries.len(), 8);
        assert_eq!(test.queries.len(), 2);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let text: String = (1..=20)
            .map(|q| alloc::format!("0 qid:{q} 1:{}\n", q as f64 / 20.0))
            .collect();
        let ds = parse_letor(&text).unwrap();
        let a = split_train_test(&ds, 0.3, 99).unwrap();
        let b = split_train_test(&ds, 0.3, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_partitions_queries_across_seeds() {
        let text: String = (1..=100)
            .map(|q| alloc::format!("0 qid:{q} 1:0.5\n"))
            .collect();
        let ds = parse_letor(&text).unwrap();
        for seed in 0..5 {
            let (train, test) = split_train_test(&ds, 0.3, seed).unwrap();
            let mut ids: Vec<&str> = train
                .queries
                .iter()
                .chain(test.queries.iter())
                .map(|q| q.query_id.as_str())
                .collect();
            ids.sort_unstable();
            let total = ids.len();
            ids.dedup();
            assert_eq!(ids.len(), total, "a query leaked across the split");
            assert_eq!(total, 100);
        }
    }

    #[test]
    fn split_rejects_degenerate_inputs() {
        let ds = parse_letor("0 qid:1 1:0.5").unwrap();
        assert!(matches!(
            split_train_test(&ds, 0.5, 0),
            Err(Error::NotEnoughQueries { have: 1 })
        ));
        let ds2 = parse_letor("0 qid:1 1:0.5\n0 qid:2 1:0.5").unwrap();
        assert!(matches!(
            split_train_test(&ds2, 0.0, 0),
            Err(Error::InvalidFraction { .. })
        ));
        assert!(matches!(
            split_train_test(&ds2, 1.0, 0),
            Err(Error::InvalidFraction { .. })
        ));
    }

    #[test]
    fn letor_round_trip_preserves_dataset() {
        let text =
            "2 qid:1 1:0.5 3:1.0 # a\n0 qid:1 1:0.25 2:2 3:-1 # b\n1 qid:9 2:4 3:0.125 # c\n";
        let ds = parse_letor(text).unwrap();
        let reparsed = parse_letor(&to_letor_string(&ds)).unwrap();
        assert_eq!(ds, reparsed);
    }
}
