use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use foltr_cli::chart::emit_charts;
use foltr_cli::config::{load_config_file, resolve, ConfigFile, ExperimentPlan};
use foltr_cli::runner::{format_summary_table, run_plan};
use foltr_cli::synth::{generate, SynthSpec};
use foltr_core::data::to_letor_string;

/// Federated online learning-to-rank simulator: poisoning attacks and
/// Byzantine-robust aggregation under simulated click behaviour.
#[derive(Parser)]
#[command(name = "foltr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment (or grid) described by a config file and/or flags.
    Run(RunArgs),
    /// Check a configuration and print the expanded grid without running.
    Validate(RunArgs),
    /// Draw SVG charts from metric CSV files.
    Chart(ChartArgs),
    /// Generate a synthetic LETOR-format dataset.
    Synth(SynthArgs),
}

/// Every config key has a matching flag; flags win over the file.
#[derive(Args)]
struct RunArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: Option<PathBuf>,

    // [data]
    /// Pre-split training file (pairs with --test).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Pre-split test file.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Single dataset split by --test-fraction instead.
    #[arg(long)]
    data_file: Option<PathBuf>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Min-max feature scaling (default true).
    #[arg(long)]
    normalize: Option<bool>,
    /// Force a 3- or 5-level grade scale.
    #[arg(long)]
    grade_levels: Option<u8>,
    /// Dataset label in result rows.
    #[arg(long)]
    dataset_name: Option<String>,

    // [model]
    /// Ranker: linear or neural.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    hidden_dim: Option<usize>,

    // [experiment]
    /// Benign click behaviour: perfect, navigational, informational.
    #[arg(long)]
    click_model: Option<String>,
    /// Number of clients.
    #[arg(long)]
    n: Option<usize>,
    /// Number of malicious clients.
    #[arg(long)]
    m: Option<usize>,
    /// none, data_poison, lie, fang_krum or fang_trmean.
    #[arg(long)]
    attack: Option<String>,
    /// Attacker knowledge: partial or full.
    #[arg(long)]
    knowledge: Option<String>,
    /// fedavg, krum, multi_krum, trimmed_mean or median.
    #[arg(long)]
    defense: Option<String>,
    /// Malicious count the server assumes (default: m).
    #[arg(long)]
    defense_m: Option<usize>,
    /// Multi-Krum selection count (default: n - defense_m).
    #[arg(long)]
    multi_krum_f: Option<usize>,
    /// Trimmed-mean trim count (default: defense_m).
    #[arg(long)]
    trim_beta: Option<usize>,
    /// PDGD learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Queries per client per round (N_u).
    #[arg(long)]
    n_queries: Option<u64>,
    /// Global federated rounds (T).
    #[arg(long)]
    rounds: Option<u64>,
    /// Evaluate every this many rounds.
    #[arg(long)]
    eval_interval: Option<u64>,
    /// nDCG cutoff.
    #[arg(long)]
    eval_cutoff: Option<usize>,
    /// Query pools: shared or partitioned.
    #[arg(long)]
    query_distribution: Option<String>,
    /// Fang-Krum supporting copies: jittered or identical.
    #[arg(long)]
    supporters: Option<String>,

    // [run]
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Output directory (FOLTR_OUTPUT_DIR overrides the config value).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-round JSONL traces.
    #[arg(long)]
    trace: bool,
    /// Save each run's final global model as a JSON checkpoint.
    #[arg(long)]
    save_models: bool,
}

#[derive(Args)]
struct ChartArgs {
    /// Metric CSV files produced by `foltr run`.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Directory for the SVG files.
    #[arg(long, default_value = "charts")]
    output: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Where to write the LETOR-format file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 10)]
    docs: usize,
    #[arg(long, default_value_t = 5)]
    features: usize,
    /// Relevance grade levels (3 or 5).
    #[arg(long, default_value_t = 5)]
    grades: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Probability of perturbing a grade by one level.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

impl RunArgs {
    fn to_config(&self) -> Result<(ConfigFile, Option<PathBuf>)> {
        let mut cfg = match &self.config {
            Some(path) => load_config_file(path)?,
            None => ConfigFile::default(),
        };

        macro_rules! set {
            ($section:ident . $field:ident, $flag:expr) => {
                if let Some(v) = $flag.clone() {
                    cfg.$section.$field = Some(v);
                }
            };
        }
        set!(data.train, self.train);
        set!(data.test, self.test);
        set!(data.file, self.data_file);
        set!(data.test_fraction, self.test_fraction);
        set!(data.split_seed, self.split_seed);
        set!(data.normalize, self.normalize);
        set!(data.grade_levels, self.grade_levels);
        set!(data.name, self.dataset_name);
        set!(model.kind, self.model);
        set!(model.hidden_dim, self.hidden_dim);
        set!(experiment.click_model, self.click_model);
        set!(experiment.n, self.n);
        set!(experiment.m, self.m);
        set!(experiment.attack, self.attack);
        set!(experiment.knowledge, self.knowledge);
        set!(experiment.defense, self.defense);
        set!(experiment.defense_m, self.defense_m);
        set!(experiment.multi_krum_f, self.multi_krum_f);
        set!(experiment.trim_beta, self.trim_beta);
        set!(experiment.eta, self.eta);
        set!(experiment.n_queries, self.n_queries);
        set!(experiment.rounds, self.rounds);
        set!(experiment.eval_interval, self.eval_interval);
        set!(experiment.eval_cutoff, self.eval_cutoff);
        set!(experiment.query_distribution, self.query_distribution);
        set!(experiment.supporters, self.supporters);
        set!(run.repeats, self.repeats);
        set!(run.master_seed, self.master_seed);
        if self.trace {
            cfg.run.trace = Some(true);
        }
        if self.save_models {
            cfg.run.save_models = Some(true);
        }
        Ok((cfg, self.output.clone()))
    }

    fn plan(&self) -> Result<ExperimentPlan> {
        let (cfg, output) = self.to_config()?;
        resolve(&cfg, output)
    }
}

fn describe_plan(plan: &ExperimentPlan) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "dataset `{}`: {} train / {} test queries, {} features, {}-level grades\n",
        plan.data.name,
        plan.data.train.n_queries(),
        plan.data.test.n_queries(),
        plan.data.train.feature_dim,
        plan.data.train.grade_levels,
    ));
    out.push_str(&format!(
        "{} cell(s) x {} repeat(s), master seed {}, output {}\n",
        plan.cells.len(),
        plan.repeats,
        plan.master_seed,
        plan.output_dir.display(),
    ));
    for cell in &plan.cells {
        out.push_str(&format!(
            "  click={} attack={} knowledge={} defense={} n={} m={} rounds={} (fingerprint {})\n",
            cell.click_model,
            cell.attack,
            cell.knowledge,
            cell.defense,
            cell.n,
            cell.m,
            cell.run.rounds,
            cell.run.fingerprint(),
        ));
    }
    out
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let plan = args.plan()?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            eprint!("{}", describe_plan(&plan));
            let outcome = run_plan(&plan)?;
            print!("{}", format_summary_table(&outcome.summary));
            println!("metrics: {}", outcome.metrics_path.display());
            println!("summary: {}", outcome.summary_path.display());
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("run failed: {f}");
                }
                std::process::exit(1);
            }
        }
        Command::Validate(args) => {
            let plan = args.plan()?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", describe_plan(&plan));
        }
        Command::Chart(args) => {
            let written = emit_charts(&args.csv, &args.output)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Synth(args) => {
            if args.grades != 3 && args.grades != 5 {
                anyhow::bail!("--grades must be 3 or 5");
            }
            let spec = SynthSpec {
                queries: args.queries,
                docs_per_query: args.docs,
                features: args.features,
                grade_levels: args.grades,
                seed: args.seed,
                noise: args.noise,
            };
            let dataset = generate(&spec);
            std::fs::write(&args.out, to_letor_string(&dataset))?;
            println!(
                "wrote {} ({} queries x {} docs, {} features)",
                args.out.display(),
                args.queries,
                args.docs,
                args.features
            );
        }
    }
    Ok(())
}
