//! Grid execution: run every (cell, repeat) job, persist metric rows as CSV,
//! compute the per-cell summary against the honest baseline, and optionally
//! stream per-round traces as JSON lines.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use foltr_core::federation::{run_experiment_with_observer, RoundTrace};
use foltr_core::seeding::{derive_seed, SeedDomain};

use crate::config::{Cell, ExperimentPlan};

/// One CSV row; field order fixes the schema
/// `round,ndcg_at_10,dataset,click_model,attack,knowledge,defense,n,m,seed,repeat`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricRow {
    pub round: u64,
    pub ndcg_at_10: f64,
    pub dataset: String,
    pub click_model: String,
    pub attack: String,
    pub knowledge: String,
    pub defense: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub repeat: usize,
}

/// Per-cell aggregate over repeats: mean and sample standard deviation of
/// the final-round nDCG@10, plus the gap to the honest FedAvg baseline of
/// the same dataset and click model when that cell is part of the grid.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub click_model: String,
    pub attack: String,
    pub knowledge: String,
    pub defense: String,
    pub n: usize,
    pub m: usize,
    pub repeats: usize,
    pub mean_final_ndcg: f64,
    pub std_final_ndcg: f64,
    pub delta_vs_honest: Option<f64>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<MetricRow>,
    pub summary: Vec<SummaryRow>,
    /// Human-readable descriptions of failed jobs (runs keep going).
    pub failures: Vec<String>,
    pub metrics_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Effective master seed of one repeat; repeats share seeds across cells so
/// comparisons between cells are paired.
pub fn repeat_seed(master_seed: u64, repeat: usize) -> u64 {
    derive_seed(master_seed, SeedDomain::Repeat, repeat as u64, 0)
}

type TraceSink = Box<dyn FnMut(&RoundTrace)>;

fn run_job(
    plan: &ExperimentPlan,
    cell: &Cell,
    cell_idx: usize,
    repeat: usize,
) -> Result<Vec<MetricRow>> {
    let seed = repeat_seed(plan.master_seed, repeat);
    let mut run = cell.run.clone();
    run.master_seed = seed;

    let mut trace_out: Option<TraceSink> = if plan.trace {
        let path = plan
            .output_dir
            .join(format!("trace_c{cell_idx}_r{repeat}.jsonl"));
        let file =
            fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut writer = std::io::BufWriter::new(file);
        Some(Box::new(move |trace: &RoundTrace| {
            let line = serde_json::json!({
                "round": trace.round,
                "update_norms": trace.updates.iter().map(|u| u.params.norm()).collect::<Vec<_>>(),
                "krum_scores": trace.krum_scores,
                "attack": trace.attack.as_ref().map(|a| serde_json::json!({
                    "lambda": a.lambda,
                    "halvings": a.halvings,
                    "converged": a.converged,
                    "crafted_norms": a.crafted_norms,
                })),
            });
            let _ = writeln!(writer, "{line}");
        }))
    } else {
        None
    };

    let output = run_experiment_with_observer(&run, &plan.data.train, &plan.data.test, |trace| {
        if let Some(out) = trace_out.as_mut() {
            out(trace);
        }
    })
    .with_context(|| {
        format!(
            "cell (click={}, attack={}, defense={}, m={}), repeat {repeat}",
            cell.click_model, cell.attack, cell.defense, cell.m
        )
    })?;

    if plan.save_models {
        let path = plan
            .output_dir
            .join(format!("model_c{cell_idx}_r{repeat}.json"));
        write_checkpoint(&path, &run, &output.final_params, seed)?;
    }

    Ok(output
        .records
        .into_iter()
        .map(|r| MetricRow {
            round: r.round,
            ndcg_at_10: r.ndcg_at_10,
            dataset: cell.dataset.clone(),
            click_model: cell.click_model.clone(),
            attack: cell.attack.clone(),
            knowledge: cell.knowledge.clone(),
            defense: cell.defense.clone(),
            n: cell.n,
            m: cell.m,
            seed: r.seed,
            repeat,
        })
        .collect())
}

/// Run all jobs (cells x repeats), in parallel, in a deterministic output
/// order. Failed jobs are recorded and the rest continue.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RunOutcome> {
    fs::create_dir_all(&plan.output_dir)
        .with_context(|| format!("cannot create {}", plan.output_dir.display()))?;

    let jobs: Vec<(usize, usize)> = (0..plan.cells.len())
        .flat_map(|c| (0..plan.repeats).map(move |r| (c, r)))
        .collect();

    let results: Vec<Result<Vec<MetricRow>>> = jobs
        .par_iter()
        .map(|&(cell_idx, repeat)| run_job(plan, &plan.cells[cell_idx], cell_idx, repeat))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => failures.push(format!("{e:#}")),
        }
    }

    let summary = summarize(plan, &rows);
    let metrics_path = plan.output_dir.join("metrics.csv");
    write_csv(&metrics_path, &rows)?;
    let summary_path = plan.output_dir.join("summary.csv");
    write_csv(&summary_path, &summary)?;

    Ok(RunOutcome {
        rows,
        summary,
        failures,
        metrics_path,
        summary_path,
    })
}

/// Checkpoint format: the architecture plus the flat parameter array.
fn write_checkpoint(
    path: &Path,
    run: &foltr_core::federation::RunConfig,
    params: &foltr_core::model::ParamVector,
    seed: u64,
) -> Result<()> {
    use foltr_core::model::ModelKind;
    let (kind, hidden) = match run.model.kind {
        ModelKind::Linear => ("linear", None),
        ModelKind::Neural { hidden_dim } => ("neural", Some(hidden_dim)),
    };
    let doc = serde_json::json!({
        "fingerprint": run.fingerprint(),
        "seed": seed,
        "model": kind,
        "input_dim": run.model.input_dim,
        "hidden_dim": hidden,
        "params": &params.0,
    });
    std::fs::write(path, serde_json::to_string(&doc)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Final-round nDCG per repeat, aggregated per cell.
fn summarize(plan: &ExperimentPlan, rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut summary: Vec<SummaryRow> = Vec::new();
    for cell in &plan.cells {
        let mut finals: Vec<f64> = Vec::new();
        for repeat in 0..plan.repeats {
            let last = rows
                .iter()
                .filter(|r| {
                    r.repeat == repeat
                        && r.dataset == cell.dataset
                        && r.click_model == cell.click_model
                        && r.attack == cell.attack
                        && r.knowledge == cell.knowledge
                        && r.defense == cell.defense
                        && r.m == cell.m
                })
                .max_by_key(|r| r.round);
            if let Some(r) = last {
                finals.push(r.ndcg_at_10);
            }
        }
        if finals.is_empty() {
            continue;
        }
        let n = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / n;
        let std = if finals.len() > 1 {
            (finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        summary.push(SummaryRow {
            dataset: cell.dataset.clone(),
            click_model: cell.click_model.clone(),
            attack: cell.attack.clone(),
            knowledge: cell.knowledge.clone(),
            defense: cell.defense.clone(),
            n: cell.n,
            m: cell.m,
            repeats: finals.len(),
            mean_final_ndcg: mean,
            std_final_ndcg: std,
            delta_vs_honest: None,
        });
    }

    // honest FedAvg baseline per (dataset, click model)
    let baselines: Vec<(String, String, f64)> = summary
        .iter()
        .filter(|s| s.attack == "none" && s.defense == "fedavg" && s.m == 0)
        .map(|s| (s.dataset.clone(), s.click_model.clone(), s.mean_final_ndcg))
        .collect();
    for row in &mut summary {
        if let Some((_, _, base)) = baselines
            .iter()
            .find(|(d, c, _)| *d == row.dataset && *c == row.click_model)
        {
            row.delta_vs_honest = Some(row.mean_final_ndcg - base);
        }
    }
    summary
}

/// Render the summary as a fixed-width table for stdout.
pub fn format_summary_table(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:<14} {:<12} {:<9} {:<13} {:>2} {:>2} {:>12} {:>10} {:>12}\n",
        "dataset",
        "click_model",
        "attack",
        "knowl.",
        "defense",
        "n",
        "m",
        "final nDCG",
        "std",
        "vs honest"
    ));
    for s in summary {
        let delta = s
            .delta_vs_honest
            .map(|d| format!("{d:+.4}"))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<12} {:<14} {:<12} {:<9} {:<13} {:>2} {:>2} {:>12.4} {:>10.4} {:>12}\n",
            s.dataset,
            s.click_model,
            s.attack,
            s.knowledge,
            s.defense,
            s.n,
            s.m,
            s.mean_final_ndcg,
            s.std_final_ndcg,
            delta
        ));
    }
    out
}
