//! Experiment configuration: a strict TOML schema (unknown keys rejected),
//! CLI-flag overrides, defaults, grid expansion and full validation that
//! reports every problem at once.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use foltr_core::aggregate::AggregationRule;
use foltr_core::attack::{AttackKind, Knowledge, SupporterMode, ThreatModel};
use foltr_core::click::{ClickModel, ClickModelKind};
use foltr_core::data::{normalize_features, parse_letor, split_train_test, Dataset};
use foltr_core::federation::{QueryDistribution, RunConfig};
use foltr_core::model::{ModelSpec, DEFAULT_HIDDEN_DIM};

pub const ENV_OUTPUT_DIR: &str = "FOLTR_OUTPUT_DIR";

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub run: RunSection,
    pub grid: Option<GridSection>,
    /// Custom click tables, used when `experiment.click_model = "custom"`.
    pub click: Option<CustomClickSection>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Pre-split training file (requires `test`).
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Single file split by query (requires `test_fraction`).
    pub file: Option<PathBuf>,
    pub test_fraction: Option<f64>,
    pub split_seed: Option<u64>,
    /// Min-max feature normalization (default true).
    pub normalize: Option<bool>,
    /// Force 3- or 5-level grades instead of inferring from the data.
    pub grade_levels: Option<u8>,
    /// Label used in result rows; defaults to the file stem.
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "linear" (default) or "neural".
    pub kind: Option<String>,
    pub hidden_dim: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub click_model: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub attack: Option<String>,
    pub knowledge: Option<String>,
    pub defense: Option<String>,
    /// Malicious count the server assumes; defaults to `m`.
    pub defense_m: Option<usize>,
    /// Multi-Krum selection count; defaults to `n - defense_m`.
    pub multi_krum_f: Option<usize>,
    /// Trimmed-mean trim count; defaults to `defense_m`.
    pub trim_beta: Option<usize>,
    pub eta: Option<f64>,
    pub n_queries: Option<u64>,
    pub rounds: Option<u64>,
    pub eval_interval: Option<u64>,
    pub eval_cutoff: Option<usize>,
    pub query_distribution: Option<String>,
    pub supporters: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub repeats: Option<usize>,
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Write per-round JSONL traces (aggregator scores, attack diagnostics).
    pub trace: Option<bool>,
    /// Write the final global model of every run as a JSON checkpoint.
    pub save_models: Option<bool>,
}

/// Optional axes crossed with the base experiment; scalar fields above act
/// as the base cell. `attack = "none"` cells collapse to `m = 0`.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub click_models: Option<Vec<String>>,
    pub attacks: Option<Vec<String>>,
    pub defenses: Option<Vec<String>>,
    pub malicious_counts: Option<Vec<usize>>,
    pub knowledge_levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomClickSection {
    pub p_click: Vec<f64>,
    pub p_stop: Vec<f64>,
}

/// Train/test pair ready to run.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub name: String,
    pub train: Dataset,
    pub test: Dataset,
}

/// One grid cell: the experiment labels plus the core run configuration
/// (master seed filled in per repeat).
#[derive(Debug, Clone)]
pub struct Cell {
    pub dataset: String,
    pub click_model: String,
    pub attack: String,
    pub knowledge: String,
    pub defense: String,
    pub n: usize,
    pub m: usize,
    pub run: RunConfig,
}

/// Fully resolved plan: datasets loaded, grid expanded, everything checked.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub data: LoadedData,
    pub cells: Vec<Cell>,
    pub repeats: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub trace: bool,
    pub save_models: bool,
    pub warnings: Vec<String>,
}

pub fn load_config_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let cfg: ConfigFile =
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    Ok(cfg)
}

fn parse_click_kind(name: &str) -> Result<ClickModelKind, String> {
    match name {
        "perfect" => Ok(ClickModelKind::Perfect),
        "navigational" => Ok(ClickModelKind::Navigational),
        "informational" => Ok(ClickModelKind::Informational),
        "poison" => Ok(ClickModelKind::Poison),
        other => Err(format!(
            "unknown click model `{other}` (expected perfect, navigational, informational, poison or custom)"
        )),
    }
}

fn parse_attack(name: &str) -> Result<AttackKind, String> {
    match name {
        "none" => Ok(AttackKind::None),
        "data_poison" => Ok(AttackKind::DataPoison),
        "lie" => Ok(AttackKind::Lie),
        "fang_krum" => Ok(AttackKind::FangKrum),
        "fang_trmean" => Ok(AttackKind::FangTrimmedMean),
        other => Err(format!(
            "unknown attack `{other}` (expected none, data_poison, lie, fang_krum, fang_trmean)"
        )),
    }
}

fn parse_knowledge(name: &str) -> Result<Knowledge, String> {
    match name {
        "partial" => Ok(Knowledge::Partial),
        "full" => Ok(Knowledge::Full),
        other => Err(format!(
            "unknown knowledge level `{other}` (expected partial or full)"
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DefenseKind {
    FedAvg,
    Krum,
    MultiKrum,
    TrimmedMean,
    Median,
}

fn parse_defense_name(name: &str) -> Result<DefenseKind, String> {
    match name {
        "fedavg" => Ok(DefenseKind::FedAvg),
        "krum" => Ok(DefenseKind::Krum),
        "multi_krum" => Ok(DefenseKind::MultiKrum),
        "trimmed_mean" => Ok(DefenseKind::TrimmedMean),
        "median" => Ok(DefenseKind::Median),
        other => Err(format!(
            "unknown defense `{other}` (expected fedavg, krum, multi_krum, trimmed_mean, median)"
        )),
    }
}

fn build_rule(
    kind: DefenseKind,
    n: usize,
    defense_m: usize,
    f: Option<usize>,
    beta: Option<usize>,
) -> AggregationRule {
    match kind {
        DefenseKind::FedAvg => AggregationRule::FedAvg,
        DefenseKind::Krum => AggregationRule::Krum { m: defense_m },
        DefenseKind::MultiKrum => AggregationRule::MultiKrum {
            m: defense_m,
            f: f.unwrap_or_else(|| n.saturating_sub(defense_m)),
        },
        DefenseKind::TrimmedMean => AggregationRule::TrimmedMean {
            beta: beta.unwrap_or(defense_m),
        },
        DefenseKind::Median => AggregationRule::Median,
    }
}

fn parse_distribution(name: &str) -> Result<QueryDistribution, String> {
    match name {
        "shared" => Ok(QueryDistribution::Shared),
        "partitioned" => Ok(QueryDistribution::Partitioned),
        other => Err(format!(
            "unknown query distribution `{other}` (expected shared or partitioned)"
        )),
    }
}

fn parse_supporters(name: &str) -> Result<SupporterMode, String> {
    match name {
        "jittered" => Ok(SupporterMode::Jittered),
        "identical" => Ok(SupporterMode::Identical),
        other => Err(format!(
            "unknown supporter mode `{other}` (expected jittered or identical)"
        )),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

/// Scale train and test with one min-max transform computed over both, then
/// hand the halves back. Keeps pre-split files on a common scale.
fn normalize_pair(train: Dataset, test: Dataset) -> (Dataset, Dataset) {
    let n_train = train.queries.len();
    let mut combined = train;
    combined.queries.extend(test.queries);
    let combined = normalize_features(&combined);
    let mut train_q = combined.queries;
    let test_q = train_q.split_off(n_train);
    (
        Dataset {
            queries: train_q,
            feature_dim: combined.feature_dim,
            grade_levels: combined.grade_levels,
        },
        Dataset {
            queries: test_q,
            feature_dim: combined.feature_dim,
            grade_levels: combined.grade_levels,
        },
    )
}

fn pad_features(ds: &mut Dataset, dim: usize) {
    for q in &mut ds.queries {
        for d in &mut q.documents {
            d.features.resize(dim, 0.0);
        }
    }
    ds.feature_dim = dim;
}

fn load_data(section: &DataSection) -> Result<LoadedData> {
    let normalize = section.normalize.unwrap_or(true);
    let (name, mut train, mut test) = match (&section.train, &section.test, &section.file) {
        (Some(train_path), Some(test_path), None) => {
            let train_text = fs::read_to_string(train_path)
                .with_context(|| format!("cannot read {}", train_path.display()))?;
            let test_text = fs::read_to_string(test_path)
                .with_context(|| format!("cannot read {}", test_path.display()))?;
            let train = parse_letor(&train_text)
                .with_context(|| format!("parsing {}", train_path.display()))?;
            let test = parse_letor(&test_text)
                .with_context(|| format!("parsing {}", test_path.display()))?;
            (file_stem(train_path), train, test)
        }
        (None, None, Some(path)) => {
            let fraction = section.test_fraction.unwrap_or(0.2);
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let full = parse_letor(&text).with_context(|| format!("parsing {}", path.display()))?;
            let (train, test) = split_train_test(&full, fraction, section.split_seed.unwrap_or(1))
                .context("splitting dataset")?;
            (file_stem(path), train, test)
        }
        (None, None, None) => bail!(
            "no dataset configured: set data.train + data.test, or data.file (+ test_fraction)"
        ),
        _ => bail!("configure either data.train + data.test or data.file, not both"),
    };

    // different max feature ids across files mean ragged vectors; pad both
    let dim = train.feature_dim.max(test.feature_dim);
    if train.feature_dim != dim {
        pad_features(&mut train, dim);
    }
    if test.feature_dim != dim {
        pad_features(&mut test, dim);
    }
    let levels = section
        .grade_levels
        .unwrap_or_else(|| train.grade_levels.max(test.grade_levels));
    train = train.with_grade_levels(levels).context("train grades")?;
    test = test.with_grade_levels(levels).context("test grades")?;

    let (train, test) = if normalize {
        normalize_pair(train, test)
    } else {
        (train, test)
    };

    Ok(LoadedData {
        name: section.name.clone().unwrap_or(name),
        train,
        test,
    })
}

/// Expand, default and validate a parsed config into a runnable plan.
/// Collects every validation failure before reporting.
pub fn resolve(file: &ConfigFile, output_override: Option<PathBuf>) -> Result<ExperimentPlan> {
    let mut errors: Vec<String> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    let data = load_data(&file.data)?;
    let grade_levels = data.train.grade_levels;
    let input_dim = data.train.feature_dim;

    let exp = &file.experiment;
    let n = exp.n.unwrap_or(10);
    let base_m = exp.m.unwrap_or(0);
    let eta = exp.eta.unwrap_or(0.1);
    let n_queries = exp.n_queries.unwrap_or(5);
    let rounds = exp.rounds.unwrap_or(10_000);
    let eval_interval = exp.eval_interval.unwrap_or(10);
    let eval_cutoff = exp.eval_cutoff.unwrap_or(10);

    if n == 0 {
        errors.push("experiment.n must be at least 1".into());
    }
    if !(eta > 0.0 && eta.is_finite()) {
        errors.push(format!(
            "experiment.eta (learning rate) must be positive, got {eta}"
        ));
    }
    if n_queries == 0 {
        errors.push("experiment.n_queries must be at least 1".into());
    }
    if eval_interval == 0 {
        errors.push("experiment.eval_interval must be at least 1".into());
    }
    if eval_cutoff == 0 {
        errors.push("experiment.eval_cutoff must be at least 1".into());
    }

    let model = match exp_model(&file.model, input_dim) {
        Ok(m) => m,
        Err(e) => {
            errors.push(e);
            ModelSpec::linear(input_dim)
        }
    };

    let distribution = match file.experiment.query_distribution.as_deref() {
        None => QueryDistribution::Shared,
        Some(s) => parse_distribution(s).unwrap_or_else(|e| {
            errors.push(e);
            QueryDistribution::Shared
        }),
    };

    let supporters = match file.experiment.supporters.as_deref() {
        None => SupporterMode::Jittered,
        Some(s) => parse_supporters(s).unwrap_or_else(|e| {
            errors.push(e);
            SupporterMode::Jittered
        }),
    };

    // grid axes fall back to the scalar base values
    let grid = file.grid.clone().unwrap_or_default();
    let click_names = grid
        .click_models
        .unwrap_or_else(|| vec![exp.click_model.clone().unwrap_or_else(|| "perfect".into())]);
    let attack_names = grid
        .attacks
        .unwrap_or_else(|| vec![exp.attack.clone().unwrap_or_else(|| "none".into())]);
    let defense_names = grid
        .defenses
        .unwrap_or_else(|| vec![exp.defense.clone().unwrap_or_else(|| "fedavg".into())]);
    let m_values = grid.malicious_counts.unwrap_or_else(|| vec![base_m]);
    let knowledge_names = grid
        .knowledge_levels
        .unwrap_or_else(|| vec![exp.knowledge.clone().unwrap_or_else(|| "partial".into())]);

    // parse every axis value before expanding, so one bad name cannot mask
    // validation problems elsewhere
    let clicks: Vec<(String, ClickModel)> = click_names
        .iter()
        .filter_map(|name| {
            let built = match name.as_str() {
                "custom" => match &file.click {
                    Some(custom) => {
                        ClickModel::custom(custom.p_click.clone(), custom.p_stop.clone())
                            .map_err(|e| format!("[click] tables invalid: {e}"))
                    }
                    None => Err("click_model = \"custom\" needs a [click] section".into()),
                },
                other => parse_click_kind(other).and_then(|kind| {
                    ClickModel::builtin(kind, grade_levels)
                        .map_err(|e| format!("click model `{other}`: {e}"))
                }),
            };
            match built {
                Ok(model) => {
                    if model.grade_levels() != grade_levels {
                        errors.push(format!(
                            "click model `{name}` covers {} grades but the dataset has {grade_levels}",
                            model.grade_levels()
                        ));
                        None
                    } else {
                        Some((name.clone(), model))
                    }
                }
                Err(e) => {
                    errors.push(e);
                    None
                }
            }
        })
        .collect();
    let attacks: Vec<AttackKind> = attack_names
        .iter()
        .filter_map(|name| parse_attack(name).map_err(|e| errors.push(e)).ok())
        .collect();
    let defenses: Vec<(String, DefenseKind)> = defense_names
        .iter()
        .filter_map(|name| {
            parse_defense_name(name)
                .map(|kind| (name.clone(), kind))
                .map_err(|e| errors.push(e))
                .ok()
        })
        .collect();
    let knowledges: Vec<Knowledge> = knowledge_names
        .iter()
        .filter_map(|name| parse_knowledge(name).map_err(|e| errors.push(e)).ok())
        .collect();

    let mut cells: Vec<Cell> = Vec::new();
    for (click_name, benign_click) in &clicks {
        for &attack in &attacks {
            for &knowledge_raw in &knowledges {
                // only Fang's attacks read anything beyond the attackers' own
                // updates; collapse the knowledge axis for everything else
                let knowledge =
                    if matches!(attack, AttackKind::FangKrum | AttackKind::FangTrimmedMean) {
                        knowledge_raw
                    } else {
                        Knowledge::Partial
                    };
                for (defense_name, defense_kind) in &defenses {
                    for &m_raw in &m_values {
                        // an honest cell is the same no matter the m axis value
                        let m = if attack == AttackKind::None { 0 } else { m_raw };
                        if attack != AttackKind::None && m == 0 {
                            continue; // no attackers to mount the attack
                        }
                        let defense_m = exp.defense_m.unwrap_or(m);
                        let rule = build_rule(
                            *defense_kind,
                            n,
                            defense_m,
                            exp.multi_krum_f,
                            exp.trim_beta,
                        );
                        let duplicate = cells.iter().any(|c| {
                            c.click_model == *click_name
                                && c.attack == attack.name()
                                && c.knowledge == knowledge.name()
                                && c.defense == *defense_name
                                && c.m == m
                        });
                        if duplicate {
                            continue;
                        }

                        mismatch_warning(attack, &rule, &mut warnings);

                        let run = RunConfig {
                            model,
                            benign_click: benign_click.clone(),
                            threat: ThreatModel {
                                n,
                                m,
                                knowledge,
                                attack,
                            },
                            rule,
                            eta,
                            n_queries,
                            rounds,
                            eval_interval,
                            eval_cutoff,
                            master_seed: 0, // per-repeat
                            query_distribution: distribution,
                            supporter_mode: supporters,
                        };
                        if let Err(e) = run.validate() {
                            errors.push(format!(
                                "cell (click={click_name}, attack={}, defense={defense_name}, m={m}): {e}",
                                attack.name()
                            ));
                            continue;
                        }
                        cells.push(Cell {
                            dataset: data.name.clone(),
                            click_model: click_name.clone(),
                            attack: attack.name().to_string(),
                            knowledge: knowledge.name().to_string(),
                            defense: defense_name.clone(),
                            n,
                            m,
                            run,
                        });
                    }
                }
            }
        }
    }

    if cells.is_empty() && errors.is_empty() {
        errors.push("the configuration expands to zero runnable cells".into());
    }

    let repeats = file.run.repeats.unwrap_or(5);
    if repeats == 0 {
        errors.push("run.repeats must be at least 1".into());
    }

    if !errors.is_empty() {
        let mut seen = std::collections::HashSet::new();
        errors.retain(|e| seen.insert(e.clone()));
        bail!("invalid configuration:\n  - {}", errors.join("\n  - "));
    }

    let output_dir = output_override
        .or_else(|| std::env::var_os(ENV_OUTPUT_DIR).map(PathBuf::from))
        .or_else(|| file.run.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(ExperimentPlan {
        data,
        cells,
        repeats,
        master_seed: file.run.master_seed.unwrap_or(42),
        output_dir,
        trace: file.run.trace.unwrap_or(false),
        save_models: file.run.save_models.unwrap_or(false),
        warnings,
    })
}

fn exp_model(section: &ModelSection, input_dim: usize) -> Result<ModelSpec, String> {
    match section.kind.as_deref().unwrap_or("linear") {
        "linear" => Ok(ModelSpec::linear(input_dim)),
        "neural" => Ok(ModelSpec::neural(
            input_dim,
            section.hidden_dim.unwrap_or(DEFAULT_HIDDEN_DIM),
        )),
        other => Err(format!(
            "unknown model kind `{other}` (expected linear or neural)"
        )),
    }
}

fn mismatch_warning(attack: AttackKind, rule: &AggregationRule, warnings: &mut Vec<String>) {
    let mismatched = match attack {
        AttackKind::FangKrum => !matches!(
            rule,
            AggregationRule::Krum { .. } | AggregationRule::MultiKrum { .. }
        ),
        AttackKind::FangTrimmedMean => !matches!(
            rule,
            AggregationRule::TrimmedMean { .. } | AggregationRule::Median
        ),
        _ => false,
    };
    if mismatched {
        let msg = format!(
            "attack `{}` is tailored to a different rule than defense `{}`; running anyway",
            attack.name(),
            rule.name()
        );
        if !warnings.contains(&msg) {
            warnings.push(msg);
        }
    }
}
