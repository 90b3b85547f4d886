//! Analysis results and report-table emission.
//!
//! The analyze stage reduces score records into an [`Analysis`] value that
//! is serialized to JSON; the report stage renders that JSON into delimited
//! tables (comma-separated, header row, UTF-8, LF) plus a plain-text
//! summary. The report layer never computes statistics: every emitted
//! number comes from an analysis record, so report emission is a pure
//! function of the analyze output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::stats::{AccessSplit, AurocMethod, AurocReport};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("malformed analysis file {path}: {source}")]
    Malformed {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> ReportError {
    ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// A class was empty (e.g. zero non-member books in the split); no value
    /// is fabricated for such rows.
    Degenerate,
}

/// One cell of the AUROC grid: either a computed report or a degenerate
/// marker carrying the class sizes that made it uncomputable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AurocCell {
    pub method: AurocMethod,
    pub split: AccessSplit,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
}

impl AurocCell {
    pub fn from_report(report: AurocReport) -> Self {
        AurocCell {
            method: report.method,
            split: report.split,
            status: CellStatus::Ok,
            value: Some(report.value),
            ci: report.ci,
            n_pos: report.n_pos,
            n_neg: report.n_neg,
            seed: report.seed,
        }
    }

    pub fn degenerate(method: AurocMethod, split: AccessSplit, n_pos: usize, n_neg: usize) -> Self {
        AurocCell {
            method,
            split,
            status: CellStatus::Degenerate,
            value: None,
            ci: None,
            n_pos,
            n_neg,
            seed: 0,
        }
    }
}

/// Pooled (quiz-weighted) guess-rate pair for one access split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledCell {
    pub split: AccessSplit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_dataset_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dataset_rate: Option<f64>,
    pub n_quizzes_in: u64,
    pub n_quizzes_out: u64,
}

/// Scored-sample accounting for one data split of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCell {
    pub split: String,
    pub n_paragraphs: usize,
    pub mean_word_count: f64,
}

impl SampleCell {
    pub fn new(split: &str, n_paragraphs: usize, mean_word_count: f64) -> Self {
        SampleCell {
            split: split.to_string(),
            n_paragraphs,
            mean_word_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAnalysis {
    pub model_name: String,
    pub cutoff_year: i32,
    pub n_books_scored: usize,
    pub auroc: Vec<AurocCell>,
    pub pooled: Vec<PooledCell>,
    pub samples: Vec<SampleCell>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigramTable {
    pub public: Vec<(String, u64)>,
    pub non_public: Vec<(String, u64)>,
}

/// Everything the analyze stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub version: String,
    pub seed: u64,
    pub models: Vec<ModelAnalysis>,
    pub trigrams: TrigramTable,
}

pub fn write_analysis(path: &Path, analysis: &Analysis) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let json = serde_json::to_string_pretty(analysis).expect("analysis serializes");
    std::fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

pub fn read_analysis(path: &Path) -> Result<Analysis, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|source| ReportError::Malformed {
        path: path.display().to_string(),
        source,
    })
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn fmt_ci(ci: Option<(f64, f64)>) -> (String, String) {
    match ci {
        Some((low, high)) => (format!("{low:.6}"), format!("{high:.6}")),
        None => (String::new(), String::new()),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, source: csv::Error) -> ReportError {
    ReportError::Csv {
        path: path.display().to_string(),
        source,
    }
}

/// Emits the full report-table set into `report_dir` and returns the files
/// written. Emission is deterministic given the analysis value.
pub fn emit_report(analysis: &Analysis, report_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();

    // sample sizes (per model x data split)
    let path = report_dir.join("sample_sizes.csv");
    {
        let mut w = csv_writer(&path)?;
        w.write_record(["model", "data_split", "n_paragraphs", "mean_word_count"])
            .map_err(|e| csv_err(&path, e))?;
        for model in &analysis.models {
            for cell in &model.samples {
                w.write_record([
                    model.model_name.as_str(),
                    cell.split.as_str(),
                    &cell.n_paragraphs.to_string(),
                    &format!("{:.1}", cell.mean_word_count),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    written.push(path);

    // full AUROC grid (6 methods x 3 splits per model)
    let path = report_dir.join("auroc_grid.csv");
    {
        let mut w = csv_writer(&path)?;
        w.write_record([
            "model", "data_split", "method", "auroc", "ci_low", "ci_high", "n_pos", "n_neg",
            "seed", "status",
        ])
        .map_err(|e| csv_err(&path, e))?;
        for model in &analysis.models {
            for cell in &model.auroc {
                let (ci_low, ci_high) = fmt_ci(cell.ci);
                let status = match cell.status {
                    CellStatus::Ok => "ok",
                    CellStatus::Degenerate => "degenerate",
                };
                w.write_record([
                    model.model_name.as_str(),
                    cell.split.label(),
                    cell.method.label(),
                    &fmt_opt(cell.value),
                    &ci_low,
                    &ci_high,
                    &cell.n_pos.to_string(),
                    &cell.n_neg.to_string(),
                    &cell.seed.to_string(),
                    status,
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    written.push(path);

    // CI tables for the two bootstrap-backed methods
    for (file, method) in [
        ("book_level_ci.csv", AurocMethod::BookLevel),
        ("paragraph_level_ci.csv", AurocMethod::ParagraphLevel),
    ] {
        let path = report_dir.join(file);
        let mut w = csv_writer(&path)?;
        w.write_record(["model", "data_split", "auroc", "ci_low", "ci_high"])
            .map_err(|e| csv_err(&path, e))?;
        for model in &analysis.models {
            for cell in model.auroc.iter().filter(|c| c.method == method) {
                let (ci_low, ci_high) = fmt_ci(cell.ci);
                w.write_record([
                    model.model_name.as_str(),
                    cell.split.label(),
                    &fmt_opt(cell.value),
                    &ci_low,
                    &ci_high,
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        written.push(path);
    }

    // pooled guess-rate pairs
    let path = report_dir.join("pooled_rates.csv");
    {
        let mut w = csv_writer(&path)?;
        w.write_record([
            "model", "data_split", "potentially_in_dataset_rate", "out_of_dataset_rate",
            "n_quizzes_in", "n_quizzes_out",
        ])
        .map_err(|e| csv_err(&path, e))?;
        for model in &analysis.models {
            for cell in &model.pooled {
                w.write_record([
                    model.model_name.as_str(),
                    cell.split.label(),
                    &fmt_opt(cell.in_dataset_rate),
                    &fmt_opt(cell.out_dataset_rate),
                    &cell.n_quizzes_in.to_string(),
                    &cell.n_quizzes_out.to_string(),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    written.push(path);

    // trigram diagnostics
    let path = report_dir.join("trigrams.csv");
    {
        let mut w = csv_writer(&path)?;
        w.write_record(["data_split", "rank", "phrase", "count"])
            .map_err(|e| csv_err(&path, e))?;
        for (split, rows) in [
            ("public", &analysis.trigrams.public),
            ("non_public", &analysis.trigrams.non_public),
        ] {
            for (rank, (phrase, count)) in rows.iter().enumerate() {
                w.write_record([
                    split,
                    &(rank + 1).to_string(),
                    phrase.as_str(),
                    &count.to_string(),
                ])
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    written.push(path);

    // human-readable summary
    let path = report_dir.join("summary.txt");
    std::fs::write(&path, render_summary(analysis)).map_err(|e| io_err(&path, e))?;
    written.push(path);

    Ok(written)
}

fn render_summary(analysis: &Analysis) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "audit summary (seed {})", analysis.seed);
    for model in &analysis.models {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "model {} (cutoff year {}, {} books scored)",
            model.model_name, model.cutoff_year, model.n_books_scored
        );
        for cell in &model.pooled {
            if cell.split != AccessSplit::All {
                continue;
            }
            let _ = writeln!(
                out,
                "  pooled guess rate: in-dataset {} vs out-of-dataset {}",
                fmt_percent_or(cell.in_dataset_rate, "n/a"),
                fmt_percent_or(cell.out_dataset_rate, "n/a"),
            );
        }
        for split in AccessSplit::ALL_SPLITS {
            let _ = writeln!(out, "  split {}:", split.label());
            for cell in model.auroc.iter().filter(|c| c.split == split) {
                let line = match cell.status {
                    CellStatus::Ok => {
                        let ci = cell
                            .ci
                            .map(|(lo, hi)| format!(" (95% CI {lo:.3}, {hi:.3})"))
                            .unwrap_or_default();
                        format!(
                            "    {:<24} {:.3}{} [n+ {}, n- {}]",
                            cell.method.label(),
                            cell.value.unwrap_or(f64::NAN),
                            ci,
                            cell.n_pos,
                            cell.n_neg
                        )
                    }
                    CellStatus::Degenerate => format!(
                        "    {:<24} degenerate [n+ {}, n- {}]",
                        cell.method.label(),
                        cell.n_pos,
                        cell.n_neg
                    ),
                };
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}

fn fmt_percent_or(value: Option<f64>, fallback: &str) -> String {
    value
        .map(|v| format!("{:.1}%", v * 100.0))
        .unwrap_or_else(|| fallback.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_analysis() -> Analysis {
        Analysis {
            version: "0.1.0".into(),
            seed: 42,
            models: vec![ModelAnalysis {
                model_name: "synthetic-target".into(),
                cutoff_year: 2023,
                n_books_scored: 38,
                auroc: AccessSplit::ALL_SPLITS
                    .iter()
                    .flat_map(|&split| {
                        AurocMethod::ALL.iter().map(move |&method| AurocCell {
                            method,
                            split,
                            status: CellStatus::Ok,
                            value: Some(0.875),
                            ci: (method == AurocMethod::BookLevel).then_some((0.8, 0.95)),
                            n_pos: 30,
                            n_neg: 8,
                            seed: 7,
                        })
                    })
                    .collect(),
                pooled: vec![PooledCell {
                    split: AccessSplit::All,
                    in_dataset_rate: Some(0.8),
                    out_dataset_rate: Some(0.5),
                    n_quizzes_in: 1000,
                    n_quizzes_out: 400,
                }],
                samples: vec![SampleCell::new("public", 100, 112.5)],
            }],
            trigrams: TrigramTable {
                public: vec![("in this chapter".into(), 138)],
                non_public: vec![("as well as".into(), 455)],
            },
        }
    }

    #[test]
    fn analysis_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("analysis.json");
        let analysis = sample_analysis();
        write_analysis(&path, &analysis).unwrap();
        assert_eq!(read_analysis(&path).unwrap(), analysis);
    }

    #[test]
    fn emit_writes_all_tables() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&sample_analysis(), dir.path()).unwrap();
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            vec![
                "sample_sizes.csv",
                "auroc_grid.csv",
                "book_level_ci.csv",
                "paragraph_level_ci.csv",
                "pooled_rates.csv",
                "trigrams.csv",
                "summary.txt"
            ]
        );
        let grid = std::fs::read_to_string(dir.path().join("auroc_grid.csv")).unwrap();
        // header + 18 rows for the single model
        assert_eq!(grid.lines().count(), 19);
        assert!(grid.starts_with("model,data_split,method,"));
        assert!(grid.contains("synthetic-target,all,paragraph_level,0.875000"));
    }

    #[test]
    fn emission_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let analysis = sample_analysis();
        emit_report(&analysis, dir_a.path()).unwrap();
        emit_report(&analysis, dir_b.path()).unwrap();
        for file in [
            "sample_sizes.csv", "auroc_grid.csv", "book_level_ci.csv",
            "paragraph_level_ci.csv", "pooled_rates.csv", "trigrams.csv", "summary.txt",
        ] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical emissions");
        }
    }

    #[test]
    fn degenerate_cells_emit_empty_values() {
        let mut analysis = sample_analysis();
        analysis.models[0].auroc = vec![AurocCell::degenerate(
            AurocMethod::BookLevel,
            AccessSplit::Public,
            5,
            0,
        )];
        let dir = tempfile::tempdir().unwrap();
        emit_report(&analysis, dir.path()).unwrap();
        let grid = std::fs::read_to_string(dir.path().join("auroc_grid.csv")).unwrap();
        assert!(grid.contains("synthetic-target,public,book_level,,,,5,0,0,degenerate"));
    }
}
