//! The synchronous federated training loop: broadcast the global ranker,
//! run every client's local PDGD updates (honest or poisoned), aggregate,
//! repeat, evaluating the global model on the held-out split at a fixed
//! cadence.
//!
//! Rounds are strictly sequential; within a round the per-client streams
//! are derived from `(master_seed, client, round)` so results cannot depend
//! on execution order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::aggregate::{krum_scores, AggregationRule};
use crate::attack::{
    assign_click_models, fang_krum_craft, fang_trmean_craft, lie_craft, AttackContext, AttackKind,
    FangKrumConfig, SupporterMode, ThreatModel,
};
use crate::click::{ClickModel, ClickModelKind};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{offline_eval, MetricRecord};
use crate::model::{ModelSpec, ParamVector};
use crate::pdgd::{client_update, ClientUpdate};
use crate::seeding::{derive_seed, derived_rng, SeedDomain};

/// Whether clients draw queries from one shared pool or from disjoint
/// per-client partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryDistribution {
    Shared,
    Partitioned,
}

impl QueryDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            QueryDistribution::Shared => "shared",
            QueryDistribution::Partitioned => "partitioned",
        }
    }
}

/// Everything one federated run depends on besides the datasets.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub benign_click: ClickModel,
    pub threat: ThreatModel,
    pub rule: AggregationRule,
    pub eta: f64,
    /// Local interactions per client per round (N_u).
    pub n_queries: u64,
    /// Global rounds (T).
    pub rounds: u64,
    /// Evaluate every this many rounds (plus once before training).
    pub eval_interval: u64,
    /// nDCG cutoff, 10 throughout the experiments.
    pub eval_cutoff: usize,
    pub master_seed: u64,
    pub query_distribution: QueryDistribution,
    pub supporter_mode: SupporterMode,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.threat.validate()?;
        self.rule.validate(self.threat.n)?;
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.eta
            )));
        }
        if self.n_queries == 0 {
            return Err(Error::InvalidConfig(String::from(
                "clients must issue at least one query per round",
            )));
        }
        if self.eval_interval == 0 {
            return Err(Error::InvalidConfig(String::from(
                "evaluation interval must be at least 1",
            )));
        }
        if self.eval_cutoff == 0 {
            return Err(Error::InvalidConfig(String::from(
                "nDCG cutoff must be at least 1",
            )));
        }
        Ok(())
    }

    /// Stable FNV-1a hash of every field that can change results, so result
    /// rows are attributable to an exact configuration.
    pub fn fingerprint(&self) -> String {
        let mut h = Fnv::new();
        match self.model.kind {
            crate::model::ModelKind::Linear => h.u64(1),
            crate::model::ModelKind::Neural { hidden_dim } => {
                h.u64(2);
                h.u64(hidden_dim as u64);
            }
        }
        h.u64(self.model.input_dim as u64);
        for &p in self
            .benign_click
            .p_click
            .iter()
            .chain(self.benign_click.p_stop.iter())
        {
            h.f64(p);
        }
        h.u64(self.threat.n as u64);
        h.u64(self.threat.m as u64);
        h.str(self.threat.knowledge.name());
        h.str(self.threat.attack.name());
        h.str(self.rule.name());
        match self.rule {
            AggregationRule::Krum { m } => h.u64(m as u64),
            AggregationRule::MultiKrum { m, f } => {
                h.u64(m as u64);
                h.u64(f as u64);
            }
            AggregationRule::TrimmedMean { beta } => h.u64(beta as u64),
            _ => {}
        }
        h.f64(self.eta);
        h.u64(self.n_queries);
        h.u64(self.rounds);
        h.u64(self.eval_interval);
        h.u64(self.eval_cutoff as u64);
        h.u64(self.master_seed);
        h.str(self.query_distribution.name());
        h.u64(match self.supporter_mode {
            SupporterMode::Jittered => 0,
            SupporterMode::Identical => 1,
        });
        format!("{:016x}", h.finish())
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    fn byte(&mut self, b: u8) {
        self.0 ^= b as u64;
        self.0 = self.0.wrapping_mul(0x100000001b3);
    }
    fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.byte(b);
        }
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn str(&mut self, s: &str) {
        for b in s.as_bytes() {
            self.byte(*b);
        }
        self.byte(0xff);
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Mutable state the loop threads through rounds.
#[derive(Debug, Clone)]
pub struct FederationState {
    pub round: u64,
    pub global_params: ParamVector,
}

/// Attack diagnostics attached to a round.
#[derive(Debug, Clone)]
pub struct AttackTrace {
    pub lambda: Option<f64>,
    pub halvings: Option<u32>,
    /// False when a search-based attack gave up and submitted its last
    /// candidate.
    pub converged: bool,
    pub crafted_norms: Vec<f64>,
}

/// Everything one round produced, for optional forensic logging.
#[derive(Debug, Clone)]
pub struct RoundTrace {
    pub round: u64,
    /// The n submitted updates, after any model-poisoning replacement.
    pub updates: Vec<ClientUpdate>,
    pub aggregated: ParamVector,
    /// Krum scores of the submitted updates when the rule computes them.
    pub krum_scores: Option<Vec<f64>>,
    pub attack: Option<AttackTrace>,
}

fn poison_model_for(benign: &ClickModel) -> Result<ClickModel> {
    ClickModel::builtin(ClickModelKind::Poison, benign.grade_levels())
}

/// Per-client query pools: one shared pool, or a seeded disjoint partition.
pub fn build_query_pools(cfg: &RunConfig, train: &Dataset) -> Result<Vec<Vec<usize>>> {
    let n = cfg.threat.n;
    let n_queries = train.queries.len();
    match cfg.query_distribution {
        QueryDistribution::Shared => Ok((0..n).map(|_| (0..n_queries).collect()).collect()),
        QueryDistribution::Partitioned => {
            if n_queries < n {
                return Err(Error::InvalidConfig(format!(
                    "cannot partition {n_queries} queries over {n} clients"
                )));
            }
            let mut order: Vec<usize> = (0..n_queries).collect();
            let mut rng = derived_rng(cfg.master_seed, SeedDomain::Partition, 0, 0);
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let mut pools: Vec<Vec<usize>> = (0..n).map(|_| Vec::new()).collect();
            for (i, q) in order.into_iter().enumerate() {
                pools[i % n].push(q);
            }
            Ok(pools)
        }
    }
}

/// Run one synchronous round: local updates, optional crafting, aggregation.
pub fn run_round(
    cfg: &RunConfig,
    train: &Dataset,
    pools: &[Vec<usize>],
    state: &mut FederationState,
) -> Result<RoundTrace> {
    let round = state.round;
    let n = cfg.threat.n;
    let m = cfg.threat.m;
    let wrap = |e: Error| e.in_round(round);

    let poison = poison_model_for(&cfg.benign_click).map_err(wrap)?;
    let click_models = assign_click_models(&cfg.threat, &cfg.benign_click, &poison);

    let mut submitted: Vec<ClientUpdate> = Vec::with_capacity(n);
    for u in 0..n {
        let mut rng = derived_rng(cfg.master_seed, SeedDomain::Client, u as u64, round);
        let update = client_update(
            &cfg.model,
            &state.global_params,
            train,
            &pools[u],
            click_models[u],
            cfg.n_queries,
            cfg.eta,
            &mut rng,
        )
        .map_err(wrap)?;
        submitted.push(update);
    }

    let mut attack_trace = None;
    if cfg.threat.attack.is_model_poisoning() && m > 0 {
        let known: Vec<ParamVector> = match cfg.threat.knowledge {
            crate::attack::Knowledge::Full => submitted.iter().map(|u| u.params.clone()).collect(),
            crate::attack::Knowledge::Partial => {
                submitted.iter().take(m).map(|u| u.params.clone()).collect()
            }
        };
        let ctx = AttackContext {
            known_updates: &known,
            global_params: &state.global_params,
        };
        let mut rng = derived_rng(cfg.master_seed, SeedDomain::Attack, 0, round);
        let (crafted, lambda, halvings, converged) = match cfg.threat.attack {
            AttackKind::Lie => {
                let attacker_own: Vec<ParamVector> =
                    submitted.iter().take(m).map(|u| u.params.clone()).collect();
                let v = lie_craft(&attacker_own, n, m).map_err(wrap)?;
                (alloc::vec![v; m], None, None, true)
            }
            AttackKind::FangKrum => {
                let fang_cfg = FangKrumConfig {
                    supporter_mode: cfg.supporter_mode,
                    ..FangKrumConfig::default()
                };
                let out = fang_krum_craft(&ctx, n, m, &fang_cfg, &mut rng).map_err(wrap)?;
                (
                    out.updates,
                    Some(out.lambda),
                    Some(out.halvings),
                    out.converged,
                )
            }
            AttackKind::FangTrimmedMean => {
                let v = fang_trmean_craft(&ctx, m, cfg.threat.knowledge, &mut rng).map_err(wrap)?;
                (v, None, None, true)
            }
            _ => unreachable!(),
        };
        let crafted_norms = crafted.iter().map(|p| p.norm()).collect();
        for (slot, params) in submitted.iter_mut().zip(crafted) {
            slot.params = params;
        }
        attack_trace = Some(AttackTrace {
            lambda,
            halvings,
            converged,
            crafted_norms,
        });
    }

    let scores = match cfg.rule {
        AggregationRule::Krum { m } | AggregationRule::MultiKrum { m, .. } => {
            let vectors: Vec<ParamVector> = submitted.iter().map(|u| u.params.clone()).collect();
            Some(krum_scores(&vectors, m).map_err(wrap)?)
        }
        _ => None,
    };

    let aggregated = cfg.rule.aggregate(&submitted).map_err(wrap)?;
    if !aggregated.is_finite() {
        return Err(Error::NonFinite.in_round(round));
    }

    state.global_params = aggregated.clone();
    state.round += 1;

    Ok(RoundTrace {
        round,
        updates: submitted,
        aggregated,
        krum_scores: scores,
        attack: attack_trace,
    })
}

/// What a finished run hands back: the evaluation series and the final
/// global model (the flat vector the checkpoint format stores).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<MetricRecord>,
    pub final_params: ParamVector,
}

/// Run a whole experiment, returning one metric record per evaluation
/// point: round 0 plus every `eval_interval`-th round.
pub fn run_experiment(
    cfg: &RunConfig,
    train: &Dataset,
    test: &Dataset,
) -> Result<ExperimentOutput> {
    run_experiment_with_observer(cfg, train, test, |_| {})
}

/// Same as [`run_experiment`] but streaming every [`RoundTrace`] to the
/// observer (used for the optional trace log).
pub fn run_experiment_with_observer(
    cfg: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    mut observer: impl FnMut(&RoundTrace),
) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if train.feature_dim != cfg.model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.model.input_dim,
            got: train.feature_dim,
        });
    }
    if test.feature_dim != cfg.model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.model.input_dim,
            got: test.feature_dim,
        });
    }
    if cfg.benign_click.grade_levels() != train.grade_levels {
        return Err(Error::InvalidConfig(format!(
            "click model covers {} grades but the dataset has {}",
            cfg.benign_click.grade_levels(),
            train.grade_levels
        )));
    }
    if train.queries.is_empty() || test.queries.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let pools = build_query_pools(cfg, train)?;
    let fingerprint = cfg.fingerprint();
    let init_seed = derive_seed(cfg.master_seed, SeedDomain::Init, 0, 0);
    let mut state = FederationState {
        round: 0,
        global_params: cfg.model.init_params(init_seed),
    };

    let mut records = Vec::new();
    let record = |round: u64, params: &ParamVector| -> Result<MetricRecord> {
        Ok(MetricRecord {
            round,
            ndcg_at_10: offline_eval(&cfg.model, params, test, cfg.eval_cutoff)?,
            fingerprint: fingerprint.clone(),
            seed: cfg.master_seed,
        })
    };
    records.push(record(0, &state.global_params)?);

    for _ in 0..cfg.rounds {
        let trace = run_round(cfg, train, pools.as_slice(), &mut state)?;
        observer(&trace);
        if state.round.is_multiple_of(cfg.eval_interval) {
            records.push(record(state.round, &state.global_params)?);
        }
    }
    Ok(ExperimentOutput {
        records,
        final_params: state.global_params,
    })
}
