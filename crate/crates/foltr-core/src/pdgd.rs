//! Pairwise differentiable gradient descent: the local per-interaction
//! update each client runs.
//!
//! One interaction = sample a SERP with a Plackett-Luce model over the
//! current scores, simulate clicks on it, infer pairwise preferences from
//! the click pattern, then take one gradient step on the debiased pairwise
//! objective. Zero-click sessions leave the parameters untouched.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::click::ClickModel;
use crate::data::{Dataset, QueryGroup};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ParamVector};
use crate::num;

/// Displayed result pages are capped at ten documents.
pub const SERP_LEN: usize = 10;

/// One simulated query interaction: what was shown and what was clicked.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub query_id: String,
    /// Document indices into the query group, in display order.
    pub displayed: Vec<usize>,
    pub clicks: Vec<bool>,
}

/// An inferred "preferred over dispreferred" document pair with its
/// position-debiasing weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferencePair {
    pub preferred: usize,
    pub dispreferred: usize,
    /// Debiasing weight rho in (0, 1); 0 until assigned.
    pub weight: f64,
}

/// What a client sends to the server after its local updates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub params: ParamVector,
    /// Interaction count N_u, the FedAvg weight.
    pub interactions: u64,
}

fn all_scores(spec: &ModelSpec, params: &ParamVector, query: &QueryGroup) -> Result<Vec<f64>> {
    query
        .documents
        .iter()
        .map(|d| spec.score(params, &d.features))
        .collect()
}

/// Sample `min(k, n_docs)` documents without replacement, each slot drawn
/// from the softmax of the remaining documents' scores (max-shifted before
/// exponentiation). Ties between equal scores are broken by the sampler's
/// randomness, never by document order.
pub fn sample_serp<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &ParamVector,
    query: &QueryGroup,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let scores = all_scores(spec, params, query)?;
    sample_serp_from_scores(&scores, k, rng)
}

fn sample_serp_from_scores<R: Rng + ?Sized>(
    scores: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    let take = k.min(scores.len());
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::with_capacity(take);
    for _ in 0..take {
        let max_s = remaining
            .iter()
            .map(|&i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| num::exp(scores[i] - max_s))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = remaining.len() - 1;
        for (pos, w) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                chosen = pos;
                break;
            }
        }
        out.push(remaining.remove(chosen));
    }
    Ok(out)
}

/// Infer preference pairs from a click pattern: every clicked document is
/// preferred over every unclicked document displayed above it, and over the
/// first unclicked document displayed below the last click. Weights are
/// left at zero; [`pair_weight`] assigns them.
pub fn infer_preferences(interaction: &Interaction) -> Vec<PreferencePair> {
    let clicks = &interaction.clicks;
    let displayed = &interaction.displayed;
    let clicked: Vec<usize> = (0..clicks.len()).filter(|&p| clicks[p]).collect();
    let Some(&last_click) = clicked.last() else {
        return Vec::new();
    };
    let first_below = (last_click + 1..clicks.len()).find(|&p| !clicks[p]);

    let mut pairs = Vec::new();
    for &c in &clicked {
        for (u, _) in clicks.iter().enumerate().take(c).filter(|&(_, &ck)| !ck) {
            pairs.push(PreferencePair {
                preferred: displayed[c],
                dispreferred: displayed[u],
                weight: 0.0,
            });
        }
        if let Some(below) = first_below {
            pairs.push(PreferencePair {
                preferred: displayed[c],
                dispreferred: displayed[below],
                weight: 0.0,
            });
        }
    }
    pairs
}

/// Log Plackett-Luce probability of displaying exactly `serp` (in order)
/// given the scores of the full candidate set.
fn log_pl_probability(scores: &[f64], serp: &[usize]) -> f64 {
    let mut remaining: Vec<bool> = alloc::vec![true; scores.len()];
    let mut log_p = 0.0;
    for &doc in serp {
        let lse = num::log_sum_exp(
            scores
                .iter()
                .enumerate()
                .filter(|&(i, _)| remaining[i])
                .map(|(_, &s)| s),
        );
        log_p += scores[doc] - lse;
        remaining[doc] = false;
    }
    log_p
}

fn swapped_serp(serp: &[usize], a: usize, b: usize) -> Vec<usize> {
    serp.iter()
        .map(|&d| {
            if d == a {
                b
            } else if d == b {
                a
            } else {
                d
            }
        })
        .collect()
}

/// Debiasing weight `rho = P(R*) / (P(R) + P(R*))` where `R*` is the
/// displayed ranking with the pair's two documents swapped.
pub fn pair_weight(
    spec: &ModelSpec,
    params: &ParamVector,
    query: &QueryGroup,
    serp: &[usize],
    pair: &PreferencePair,
) -> Result<f64> {
    let scores = all_scores(spec, params, query)?;
    Ok(pair_weight_from_scores(&scores, serp, pair))
}

fn pair_weight_from_scores(scores: &[f64], serp: &[usize], pair: &PreferencePair) -> f64 {
    let log_p = log_pl_probability(scores, serp);
    let swapped = swapped_serp(serp, pair.preferred, pair.dispreferred);
    let log_p_star = log_pl_probability(scores, &swapped);
    num::sigmoid(log_p_star - log_p)
}

/// Gradient of the pairwise objective `sigma(s_pref - s_disp)` with respect
/// to the parameters, where `sigma` is the logistic function.
pub fn pair_gradient(
    spec: &ModelSpec,
    params: &ParamVector,
    pref_features: &[f64],
    disp_features: &[f64],
) -> Result<ParamVector> {
    let s_pref = spec.score(params, pref_features)?;
    let s_disp = spec.score(params, disp_features)?;
    let sig = num::sigmoid(s_pref - s_disp);
    let coeff = sig * (1.0 - sig);
    let mut grad = spec.score_gradient(params, pref_features)?;
    let grad_disp = spec.score_gradient(params, disp_features)?;
    grad.scale(coeff);
    grad.add_scaled(&grad_disp, -coeff);
    Ok(grad)
}

/// One full PDGD interaction on one query: sample a SERP, simulate clicks,
/// and take the weighted pairwise gradient step. Returns the new parameters
/// and the interaction record.
pub fn pdgd_update<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &ParamVector,
    query: &QueryGroup,
    click_model: &ClickModel,
    eta: f64,
    rng: &mut R,
) -> Result<(ParamVector, Interaction)> {
    let scores = all_scores(spec, params, query)?;
    let serp = sample_serp_from_scores(&scores, SERP_LEN, rng)?;
    let rels: Vec<u8> = serp.iter().map(|&d| query.documents[d].relevance).collect();
    let clicks = click_model.simulate(&rels, rng)?;
    let interaction = Interaction {
        query_id: query.query_id.clone(),
        displayed: serp.clone(),
        clicks: clicks.clicks,
    };

    let mut pairs = infer_preferences(&interaction);
    if pairs.is_empty() {
        return Ok((params.clone(), interaction));
    }

    let mut step = ParamVector::zeros(params.len());
    for pair in pairs.iter_mut() {
        pair.weight = pair_weight_from_scores(&scores, &serp, pair);
        let grad = pair_gradient(
            spec,
            params,
            &query.documents[pair.preferred].features,
            &query.documents[pair.dispreferred].features,
        )?;
        step.add_scaled(&grad, pair.weight);
    }

    let mut updated = params.clone();
    updated.add_scaled(&step, eta);
    if !updated.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((updated, interaction))
}

/// One client's local training phase: `n_queries` interactions on queries
/// sampled uniformly at random (with replacement) from the client's query
/// pool, starting from the broadcast parameters.
#[allow(clippy::too_many_arguments)]
pub fn client_update<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &ParamVector,
    train: &Dataset,
    query_pool: &[usize],
    click_model: &ClickModel,
    n_queries: u64,
    eta: f64,
    rng: &mut R,
) -> Result<ClientUpdate> {
    if n_queries == 0 {
        return Err(Error::InvalidConfig(String::from(
            "a client must issue at least one query per round",
        )));
    }
    if query_pool.is_empty() {
        return Err(Error::EmptyQueryPool);
    }
    let mut current = params.clone();
    for _ in 0..n_queries {
        let q = query_pool[rng.gen_range(0..query_pool.len())];
        let (next, _) = pdgd_update(spec, &current, &train.queries[q], click_model, eta, rng)?;
        current = next;
    }
    Ok(ClientUpdate {
        params: current,
        interactions: n_queries,
    })
}
