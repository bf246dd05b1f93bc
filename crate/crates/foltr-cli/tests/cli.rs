//! Config-layer and harness tests: strict parsing, multi-error validation,
//! grid expansion arithmetic, CSV schema stability and chart emission.

use std::path::PathBuf;

use foltr_cli::chart::emit_charts;
use foltr_cli::config::{resolve, ConfigFile, ENV_OUTPUT_DIR};
use foltr_cli::runner::run_plan;
use foltr_cli::synth::{generate, SynthSpec};
use foltr_core::data::to_letor_string;

fn write_synth(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("synth.txt");
    let ds = generate(&SynthSpec {
        queries: 25,
        docs_per_query: 6,
        features: 3,
        grade_levels: 5,
        seed: 5,
        noise: 0.0,
    });
    std::fs::write(&path, to_letor_string(&ds)).unwrap();
    path
}

fn minimal_config(data_path: &std::path::Path) -> String {
    format!(
        "[data]\nfile = \"{}\"\ntest_fraction = 0.2\n",
        data_path.display()
    )
}

#[test]
fn unknown_keys_are_rejected() {
    let err = toml::from_str::<ConfigFile>("[experiment]\nbananas = 3\n").unwrap_err();
    assert!(err.to_string().contains("bananas"), "{err}");
    assert!(toml::from_str::<ConfigFile>("[surprise]\n").is_err());
}

#[test]
fn minimal_config_gets_paper_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let file: ConfigFile = toml::from_str(&minimal_config(&data)).unwrap();
    let plan = resolve(&file, Some(dir.path().join("out"))).unwrap();
    assert_eq!(plan.cells.len(), 1);
    let cell = &plan.cells[0];
    assert_eq!(cell.n, 10);
    assert_eq!(cell.run.n_queries, 5);
    assert_eq!(cell.run.eta, 0.1);
    assert_eq!(cell.run.eval_cutoff, 10);
    assert_eq!(cell.run.rounds, 10_000);
    assert_eq!(cell.attack, "none");
    assert_eq!(cell.defense, "fedavg");
    assert_eq!(plan.repeats, 5);
}

#[test]
fn collusion_bound_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        "{}\n[experiment]\nn = 10\nm = 5\nattack = \"data_poison\"\n",
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let err = resolve(&file, None).unwrap_err().to_string();
    assert!(err.contains("50%"), "{err}");
}

#[test]
fn mismatched_attack_defense_is_a_warning_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        "{}\n[experiment]\nn = 10\nm = 4\nattack = \"fang_krum\"\ndefense = \"fedavg\"\n",
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let plan = resolve(&file, Some(dir.path().join("out"))).unwrap();
    assert_eq!(plan.cells.len(), 1);
    assert!(
        plan.warnings.iter().any(|w| w.contains("tailored")),
        "expected a tailoring warning, got {:?}",
        plan.warnings
    );
}

#[test]
fn validation_reports_every_failure_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        "{}\n[experiment]\nattack = \"warp\"\ndefense = \"prayer\"\neta = -1.0\n",
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let err = resolve(&file, None).unwrap_err().to_string();
    assert!(err.contains("warp"), "{err}");
    assert!(err.contains("prayer"), "{err}");
    assert!(
        err.contains("eta") || err.contains("learning rate"),
        "{err}"
    );
}

#[test]
fn grid_expansion_counts_and_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        r#"{}
[experiment]
n = 6
rounds = 20
eval_interval = 5

[run]
repeats = 2
master_seed = 7

[grid]
attacks = ["none", "data_poison", "lie"]
malicious_counts = [0, 2]
"#,
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let out = dir.path().join("out");
    let plan = resolve(&file, Some(out.clone())).unwrap();
    // none collapses to m=0; the attacks keep only m=2
    assert_eq!(plan.cells.len(), 3);

    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.failures.is_empty());
    // rows = cells x repeats x (T/interval + 1)
    assert_eq!(outcome.rows.len(), 3 * 2 * 5);

    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "round,ndcg_at_10,dataset,click_model,attack,knowledge,defense,n,m,seed,repeat"
    );

    // summary has a baseline delta for the attacked cells
    let attacked = outcome
        .summary
        .iter()
        .find(|s| s.attack == "data_poison")
        .unwrap();
    assert!(attacked.delta_vs_honest.is_some());
}

#[test]
fn charts_render_one_panel_per_dataset_click_pair() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        r#"{}
[experiment]
n = 5
rounds = 10
eval_interval = 5

[run]
repeats = 1

[grid]
click_models = ["perfect", "informational"]
"#,
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let out = dir.path().join("out");
    let plan = resolve(&file, Some(out.clone())).unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.failures.is_empty());

    let charts = dir.path().join("charts");
    let written = emit_charts(&[out.join("metrics.csv")], &charts).unwrap();
    assert_eq!(written.len(), 2);
    for path in &written {
        let svg = std::fs::read_to_string(path).unwrap();
        assert!(svg.starts_with("<svg"), "not an SVG: {}", path.display());
        assert!(
            svg.contains("polyline") || svg.contains("path"),
            "no lines drawn"
        );
    }

    // schema mismatch is an error
    let bogus = dir.path().join("bogus.csv");
    std::fs::write(&bogus, "a,b\n1,2\n").unwrap();
    assert!(emit_charts(&[bogus], &charts).is_err());
}

#[test]
fn failed_runs_are_recorded_without_aborting_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path()); // 25 queries
    let text = format!(
        r#"{}
[experiment]
n = 30
rounds = 5
eval_interval = 5
query_distribution = "partitioned"

[run]
repeats = 2
"#,
        minimal_config(&data)
    );
    // 25 queries cannot be partitioned over 30 clients: every job fails at
    // run time, but the grid itself must complete and report the failures
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let plan = resolve(&file, Some(dir.path().join("out"))).unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert_eq!(outcome.failures.len(), 2);
    assert!(outcome.rows.is_empty());
    assert!(
        outcome.failures[0].contains("partition"),
        "{:?}",
        outcome.failures
    );
}

#[test]
fn env_var_overrides_config_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let env_out = dir.path().join("env_out");
    let text = format!(
        "{}\n[run]\noutput_dir = \"{}\"\n",
        minimal_config(&data),
        dir.path().join("cfg_out").display()
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();

    std::env::set_var(ENV_OUTPUT_DIR, &env_out);
    let plan = resolve(&file, None);
    std::env::remove_var(ENV_OUTPUT_DIR);
    assert_eq!(plan.unwrap().output_dir, env_out);

    // explicit flag wins over everything
    let flag_out = dir.path().join("flag_out");
    let plan = resolve(&file, Some(flag_out.clone())).unwrap();
    assert_eq!(plan.output_dir, flag_out);
}

#[test]
fn model_checkpoints_hold_the_flat_parameter_array() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        r#"{}
[experiment]
n = 4
rounds = 5
eval_interval = 5

[run]
repeats = 1
save_models = true
"#,
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let out = dir.path().join("out");
    let plan = resolve(&file, Some(out.clone())).unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.failures.is_empty());

    let checkpoint = out.join("model_c0_r0.json");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&checkpoint).unwrap()).unwrap();
    assert_eq!(doc["model"], "linear");
    assert_eq!(doc["input_dim"], 3);
    let params = doc["params"].as_array().unwrap();
    assert_eq!(params.len(), 3);
    assert!(params.iter().all(|v| v.is_f64() || v.is_i64()));
    // fingerprint matches the per-repeat configuration (seed filled in)
    let mut run = plan.cells[0].run.clone();
    run.master_seed = foltr_cli::runner::repeat_seed(plan.master_seed, 0);
    assert_eq!(doc["fingerprint"].as_str().unwrap(), run.fingerprint());
    assert_eq!(doc["seed"].as_u64().unwrap(), run.master_seed);
}

#[test]
fn trace_log_lines_are_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_synth(dir.path());
    let text = format!(
        r#"{}
[experiment]
n = 6
m = 2
attack = "fang_krum"
defense = "krum"
rounds = 5
eval_interval = 5

[run]
repeats = 1
trace = true
"#,
        minimal_config(&data)
    );
    let file: ConfigFile = toml::from_str(&text).unwrap();
    let out = dir.path().join("out");
    let plan = resolve(&file, Some(out.clone())).unwrap();
    let outcome = run_plan(&plan).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);

    let trace_path = out.join("trace_c0_r0.jsonl");
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 5);
    for line in lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["round"].is_u64());
        assert!(v["krum_scores"].is_array());
        let attack = &v["attack"];
        assert!(attack["lambda"].is_number());
        assert!(attack["crafted_norms"].as_array().unwrap().len() == 2);
    }
}
