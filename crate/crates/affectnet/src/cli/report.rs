//! Report emission: paper-style comparison tables (model rows, metric
//! columns, a relative-change column against the baseline row) in plain
//! text with a machine-readable CSV twin, plus per-class report
//! rendering.

use crate::error::{Error, Result};
use crate::metrics::{ClassificationReport, RegressionReport};

/// One model row of a comparison table, values aligned with the shared
/// metric names.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub model: String,
    pub values: Vec<f64>,
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_text_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(String::len).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String], widths: &[usize]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&fmt_row(headers, &widths));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row, &widths));
        out.push('\n');
    }
    out
}

fn render_csv_table(headers: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(
        &headers
            .iter()
            .map(|h| csv_field(h))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for row in rows {
        out.push_str(
            &row.iter()
                .map(|c| csv_field(c))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

/// Builds the comparison table. The relative-change column reports the
/// percentage change of `primary_metric` against the baseline row, which
/// itself shows "--".
pub fn comparison_table(
    metric_names: &[String],
    rows: &[ComparisonRow],
    baseline_row: usize,
    primary_metric: &str,
) -> Result<(String, String)> {
    let primary_idx = metric_names
        .iter()
        .position(|n| n == primary_metric)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("metric {primary_metric} not among {metric_names:?}"))
        })?;
    let baseline_value = rows
        .get(baseline_row)
        .ok_or_else(|| Error::InvalidArgument("baseline row out of range".into()))?
        .values[primary_idx];

    let mut headers: Vec<String> = vec!["model".into()];
    headers.extend(metric_names.iter().cloned());
    headers.push(format!("rel_change({primary_metric})"));

    let text_rows: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cells = vec![row.model.clone()];
            cells.extend(row.values.iter().map(|v| format!("{v:.4}")));
            cells.push(if i == baseline_row || baseline_value == 0.0 {
                "--".to_string()
            } else {
                let pct = (row.values[primary_idx] - baseline_value) / baseline_value.abs() * 100.0;
                format!("{pct:+.1}%")
            });
            cells
        })
        .collect();

    Ok((
        render_text_table(&headers, &text_rows),
        render_csv_table(&headers, &text_rows),
    ))
}

/// Generic table with a text and a CSV rendering.
pub fn twin_table(headers: &[String], rows: &[Vec<String>]) -> (String, String) {
    (
        render_text_table(headers, rows),
        render_csv_table(headers, rows),
    )
}

/// Per-class classification report as a text table with the weighted
/// averages underneath.
pub fn render_classification(report: &ClassificationReport, class_names: &[String]) -> String {
    let headers: Vec<String> = ["class", "precision", "recall", "f1", "sensitivity", "specificity", "support"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                class_names.get(i).cloned().unwrap_or_else(|| format!("class{i}")),
                format!("{:.4}", c.precision),
                format!("{:.4}", c.recall),
                format!("{:.4}", c.f1),
                format!("{:.4}", c.sensitivity),
                format!("{:.4}", c.specificity),
                c.support.to_string(),
            ]
        })
        .collect();
    let mut out = render_text_table(&headers, &rows);
    out.push('\n');
    out.push_str(&format!(
        "weighted_f1 {:.4}  weighted_sensitivity {:.4}  weighted_specificity {:.4}  accuracy {:.4}  documents {}\n",
        report.weighted_f1,
        report.weighted_sensitivity,
        report.weighted_specificity,
        report.accuracy,
        report.total
    ));
    out
}

pub fn classification_csv(report: &ClassificationReport, class_names: &[String]) -> String {
    let headers: Vec<String> = ["class", "precision", "recall", "f1", "sensitivity", "specificity", "support"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                class_names.get(i).cloned().unwrap_or_else(|| format!("class{i}")),
                c.precision.to_string(),
                c.recall.to_string(),
                c.f1.to_string(),
                c.sensitivity.to_string(),
                c.specificity.to_string(),
                c.support.to_string(),
            ]
        })
        .collect();
    rows.push(vec![
        "weighted_average".into(),
        String::new(),
        report.weighted_sensitivity.to_string(),
        report.weighted_f1.to_string(),
        report.weighted_sensitivity.to_string(),
        report.weighted_specificity.to_string(),
        report.total.to_string(),
    ]);
    render_csv_table(&headers, &rows)
}

pub fn render_regression(report: &RegressionReport) -> String {
    let headers: Vec<String> = ["dimension", "mse"].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<Vec<String>> = report
        .dimensions
        .iter()
        .zip(&report.per_dimension_mse)
        .map(|(d, m)| vec![d.clone(), format!("{m:.6}")])
        .collect();
    rows.push(vec!["mean".into(), format!("{:.6}", report.mean_mse)]);
    let mut out = render_text_table(&headers, &rows);
    out.push('\n');
    out.push_str(&format!("documents {}\n", report.total));
    out
}

pub fn regression_csv(report: &RegressionReport) -> String {
    let headers: Vec<String> = ["dimension", "mse"].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<Vec<String>> = report
        .dimensions
        .iter()
        .zip(&report.per_dimension_mse)
        .map(|(d, m)| vec![d.clone(), m.to_string()])
        .collect();
    rows.push(vec!["mean".into(), report.mean_mse.to_string()]);
    render_csv_table(&headers, &rows)
}
