//! Server-side aggregation rules: interaction-weighted FedAvg plus four
//! Byzantine-robust alternatives (Krum, Multi-Krum, coordinate-wise trimmed
//! mean, coordinate-wise median), all over flat parameter vectors.
//!
//! The robust rules deliberately ignore interaction counts: they take the
//! bare weight vectors, matching their usual unweighted definitions. Only
//! FedAvg weights by N_u.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::pdgd::ClientUpdate;

/// Which rule the server runs, with its resolved parameters.
///
/// `m` is the number of malicious clients the server assumes; the usual
/// defaults are `f = n - m` for Multi-Krum and `beta = m` for the trimmed
/// mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationRule {
    FedAvg,
    Krum { m: usize },
    MultiKrum { m: usize, f: usize },
    TrimmedMean { beta: usize },
    Median,
}

impl AggregationRule {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationRule::FedAvg => "fedavg",
            AggregationRule::Krum { .. } => "krum",
            AggregationRule::MultiKrum { .. } => "multi_krum",
            AggregationRule::TrimmedMean { .. } => "trimmed_mean",
            AggregationRule::Median => "median",
        }
    }

    /// Check the rule can aggregate `n` updates at all.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            AggregationRule::FedAvg | AggregationRule::Median => {
                if n == 0 {
                    Err(Error::NoUpdates)
                } else {
                    Ok(())
                }
            }
            AggregationRule::Krum { m } => check_krum_feasible(n, m),
            AggregationRule::MultiKrum { m, f } => {
                check_krum_feasible(n, m)?;
                if f == 0 || f > n {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "multi-krum selection count f={f} outside 1..={n}"
                    )));
                }
                Ok(())
            }
            AggregationRule::TrimmedMean { beta } => {
                if n == 0 {
                    Err(Error::NoUpdates)
                } else if n < 2 * beta + 1 {
                    Err(Error::TrimTooLarge { n, beta })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Run the rule over the submitted updates.
    pub fn aggregate(&self, updates: &[ClientUpdate]) -> Result<ParamVector> {
        match *self {
            AggregationRule::FedAvg => fedavg(updates),
            AggregationRule::Krum { m } => {
                let vectors: Vec<ParamVector> = updates.iter().map(|u| u.params.clone()).collect();
                krum(&vectors, m)
            }
            AggregationRule::MultiKrum { m, f } => {
                let vectors: Vec<ParamVector> = updates.iter().map(|u| u.params.clone()).collect();
                multi_krum(&vectors, m, f)
            }
            AggregationRule::TrimmedMean { beta } => {
                let vectors: Vec<ParamVector> = updates.iter().map(|u| u.params.clone()).collect();
                trimmed_mean(&vectors, beta)
            }
            AggregationRule::Median => {
                let vectors: Vec<ParamVector> = updates.iter().map(|u| u.params.clone()).collect();
                coordinate_median(&vectors)
            }
        }
    }
}

fn check_krum_feasible(n: usize, m: usize) -> Result<()> {
    // need n - m - 2 >= 1 neighbours
    if n < m + 3 {
        Err(Error::TooFewClients { n, required: m + 3 })
    } else {
        Ok(())
    }
}

fn check_lengths<'a>(mut vectors: impl Iterator<Item = &'a ParamVector>) -> Result<usize> {
    let first = vectors.next().ok_or(Error::NoUpdates)?;
    let dim = first.len();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(dim)
}

/// Interaction-count-weighted mean: `sum_u (N_u / sum N) * w_u`.
pub fn fedavg(updates: &[ClientUpdate]) -> Result<ParamVector> {
    let dim = check_lengths(updates.iter().map(|u| &u.params))?;
    let total: u64 = updates.iter().map(|u| u.interactions).sum();
    if total == 0 {
        return Err(Error::InvalidConfig(alloc::string::String::from(
            "fedavg needs a positive total interaction count",
        )));
    }
    let mut out = ParamVector::zeros(dim);
    for u in updates {
        out.add_scaled(&u.params, u.interactions as f64 / total as f64);
    }
    Ok(out)
}

/// Krum scores: `s(i)` = sum of plain Euclidean distances from update `i`
/// to its `n - m - 2` closest other updates.
pub fn krum_scores(vectors: &[ParamVector], m: usize) -> Result<Vec<f64>> {
    let n = vectors.len();
    check_krum_feasible(n, m)?;
    check_lengths(vectors.iter())?;
    let closest = n - m - 2;
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| vectors[i].distance(&vectors[j]))
            .collect();
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        scores.push(dists[..closest].iter().sum());
    }
    Ok(scores)
}

/// Index of the update Krum selects (smallest score, lowest index on ties).
pub fn krum_select(vectors: &[ParamVector], m: usize) -> Result<usize> {
    let scores = krum_scores(vectors, m)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// The update with the smallest Krum score.
pub fn krum(vectors: &[ParamVector], m: usize) -> Result<ParamVector> {
    Ok(vectors[krum_select(vectors, m)?].clone())
}

/// Unweighted mean of the `f` updates with smallest Krum scores.
pub fn multi_krum(vectors: &[ParamVector], m: usize, f: usize) -> Result<ParamVector> {
    let n = vectors.len();
    if f == 0 || f > n {
        return Err(Error::InvalidConfig(alloc::format!(
            "multi-krum selection count f={f} outside 1..={n}"
        )));
    }
    let scores = krum_scores(vectors, m)?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the lowest-index-wins tie break
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let dim = vectors[0].len();
    let mut out = ParamVector::zeros(dim);
    for &i in order.iter().take(f) {
        out.add_scaled(&vectors[i], 1.0 / f as f64);
    }
    Ok(out)
}

/// Coordinate-wise trimmed mean: drop the `beta` largest and smallest values
/// per coordinate, average the rest.
pub fn trimmed_mean(vectors: &[ParamVector], beta: usize) -> Result<ParamVector> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::NoUpdates);
    }
    if n < 2 * beta + 1 {
        return Err(Error::TrimTooLarge { n, beta });
    }
    let dim = check_lengths(vectors.iter())?;
    let mut out = ParamVector::zeros(dim);
    let mut column = vec![0.0; n];
    let kept = n - 2 * beta;
    for j in 0..dim {
        for (i, v) in vectors.iter().enumerate() {
            column[i] = v[j];
        }
        column.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        out[j] = column[beta..n - beta].iter().sum::<f64>() / kept as f64;
    }
    Ok(out)
}

/// Coordinate-wise median; even counts average the middle two values.
pub fn coordinate_median(vectors: &[ParamVector]) -> Result<ParamVector> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::NoUpdates);
    }
    let dim = check_lengths(vectors.iter())?;
    let mut out = ParamVector::zeros(dim);
    let mut column = vec![0.0; n];
    for j in 0..dim {
        for (i, v) in vectors.iter().enumerate() {
            column[i] = v[j];
        }
        column.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        out[j] = if n % 2 == 1 {
            column[n / 2]
        } else {
            (column[n / 2 - 1] + column[n / 2]) / 2.0
        };
    }
    Ok(out)
}
