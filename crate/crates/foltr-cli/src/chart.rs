//! SVG line charts from metric CSVs: one panel per (dataset, click model),
//! x = round, y = mean nDCG@10 across repeats, one line per
//! (attack, knowledge, defense, m) combination.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plotters::prelude::*;

use crate::runner::MetricRow;

const PALETTE: [RGBColor; 10] = [
    RGBColor(0, 0, 0),
    RGBColor(214, 39, 40),
    RGBColor(31, 119, 180),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
    RGBColor(23, 190, 207),
];

fn read_rows(paths: &[PathBuf]) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for path in paths {
        let mut reader = csv::Reader::from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        for record in reader.deserialize::<MetricRow>() {
            rows.push(record.with_context(|| {
                format!("{} does not match the metrics CSV schema", path.display())
            })?);
        }
    }
    Ok(rows)
}

/// line key (attack, knowledge, defense, m) -> round -> per-repeat values
type PanelLines = BTreeMap<(String, String, String, usize), BTreeMap<u64, Vec<f64>>>;

fn line_label(attack: &str, knowledge: &str, defense: &str, m: usize) -> String {
    if attack == "none" && m == 0 {
        format!("honest / {defense}")
    } else if attack.starts_with("fang") {
        format!("{attack}({knowledge}) m={m} / {defense}")
    } else {
        format!("{attack} m={m} / {defense}")
    }
}

/// Write one `chart_<dataset>_<click>.svg` per panel; returns the files
/// created.
pub fn emit_charts(csv_paths: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_rows(csv_paths)?;
    if rows.is_empty() {
        anyhow::bail!("no metric rows found in the given CSV files");
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let mut panels: BTreeMap<(String, String), PanelLines> = BTreeMap::new();
    for row in &rows {
        panels
            .entry((row.dataset.clone(), row.click_model.clone()))
            .or_default()
            .entry((
                row.attack.clone(),
                row.knowledge.clone(),
                row.defense.clone(),
                row.m,
            ))
            .or_default()
            .entry(row.round)
            .or_default()
            .push(row.ndcg_at_10);
    }

    let mut written = Vec::new();
    for ((dataset, click), lines) in &panels {
        let path = out_dir.join(format!("chart_{dataset}_{click}.svg"));
        draw_panel(&path, dataset, click, lines)?;
        written.push(path);
    }
    Ok(written)
}

fn draw_panel(path: &Path, dataset: &str, click: &str, lines: &PanelLines) -> Result<()> {
    let max_round = lines
        .values()
        .flat_map(|pts| pts.keys().copied())
        .max()
        .unwrap_or(0)
        .max(1);

    let root = SVGBackend::new(path, (960, 600)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("{dataset} — {click} clicks — nDCG@10"),
            ("sans-serif", 22),
        )
        .margin(14)
        .x_label_area_size(42)
        .y_label_area_size(52)
        .build_cartesian_2d(0f64..max_round as f64, 0f64..1f64)?;
    chart
        .configure_mesh()
        .x_desc("round")
        .y_desc("nDCG@10")
        .draw()?;

    for (i, ((attack, knowledge, defense, m), points)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series: Vec<(f64, f64)> = points
            .iter()
            .map(|(round, vals)| (*round as f64, vals.iter().sum::<f64>() / vals.len() as f64))
            .collect();
        chart
            .draw_series(LineSeries::new(series, color.stroke_width(2)))?
            .label(line_label(attack, knowledge, defense, *m))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2))
            });
    }

    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(RGBColor(120, 120, 120))
        .position(SeriesLabelPosition::LowerRight)
        .draw()?;
    root.present()?;
    Ok(())
}
