//! Relevance-score ingestion, synthetic score generation and report CSVs.

use std::fs::File;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{RatingScale, RelevanceProfile};

/// Dense users x items score matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevanceMatrix {
    rows: Vec<Vec<f64>>,
    scale: RatingScale,
}

impl RelevanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>, scale: RatingScale) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 {
            return Err(Error::Input("relevance matrix is empty".into()));
        }
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!(
                    "row {l} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some((i, x)) = row.iter().enumerate().find(|(_, x)| !scale.contains(**x)) {
                return Err(Error::Input(format!(
                    "row {l}, column {i}: {x} outside [{}, {}]",
                    scale.min, scale.max
                )));
            }
        }
        Ok(RelevanceMatrix { rows, scale })
    }

    pub fn users(&self) -> usize {
        self.rows.len()
    }

    pub fn items(&self) -> usize {
        self.rows[0].len()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn profiles(&self) -> Result<Vec<RelevanceProfile>> {
        self.rows
            .iter()
            .map(|r| RelevanceProfile::new(r.clone(), self.scale))
            .collect()
    }
}

/// Reads a rectangular numeric CSV with one user per row. A first row that
/// does not parse as numbers is taken as a header.
pub fn load_relevance_csv(path: &Path, scale: RatingScale) -> Result<RelevanceMatrix> {
    let fail = |message: String| Error::Ingestion {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(c) => {
                return Err(fail(format!(
                    "row {}, column {}: non-numeric cell {:?}",
                    line + 1,
                    c + 1,
                    &record[c]
                )))
            }
        };
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(fail(format!(
                "row {}: {} columns, expected {expected}",
                line + 1,
                values.len()
            )));
        }
        if let Some((c, x)) = values
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || !scale.contains(**x))
        {
            return Err(fail(format!(
                "row {}, column {}: {x} outside rating scale [{}, {}]",
                line + 1,
                c + 1,
                scale.min,
                scale.max
            )));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(fail("no data rows".into()));
    }
    RelevanceMatrix::new(rows, scale).map_err(|e| fail(e.to_string()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreDistribution {
    #[default]
    Uniform,
    /// Beta(5, 2) mapped onto the scale: most mass toward high ratings.
    Skewed,
}

pub fn synth_relevance(
    users: usize,
    items: usize,
    seed: u64,
    scale: RatingScale,
    distribution: ScoreDistribution,
) -> Result<RelevanceMatrix> {
    if users == 0 || items == 0 {
        return Err(Error::param("synthetic matrix needs L >= 1 and n >= 1"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let beta = Beta::new(5.0, 2.0).expect("valid beta parameters");
    let span = scale.max - scale.min;
    let rows = (0..users)
        .map(|_| {
            (0..items)
                .map(|_| {
                    let u: f64 = match distribution {
                        ScoreDistribution::Uniform => rng.random(),
                        ScoreDistribution::Skewed => beta.sample(&mut rng),
                    };
                    (scale.min + u * span).clamp(scale.min, scale.max)
                })
                .collect()
        })
        .collect();
    RelevanceMatrix::new(rows, scale)
}

/// One (epsilon, seed) cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub epsilon: f64,
    pub seed: u64,
    pub unfairness_none: f64,
    pub unfairness_central_fair: f64,
    pub unfairness_private: f64,
    pub mean_ndcg: f64,
    pub min_ndcg: f64,
    pub aborts: usize,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
}

const REPORT_HEADER: [&str; 9] = [
    "epsilon",
    "seed",
    "unfairness_none",
    "unfairness_central_fair",
    "unfairness_private",
    "mean_ndcg",
    "min_ndcg",
    "aborts",
    "runtime_ms",
];

pub fn write_report_csv(report: &RunReport, path: &Path) -> Result<()> {
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Ingestion {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    };
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(REPORT_HEADER).map_err(io_err)?;
    for row in &report.rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report_csv(path: &Path) -> Result<RunReport> {
    let fail = |message: String| Error::Ingestion {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let header = reader.headers().map_err(|e| fail(e.to_string()))?;
    if header.iter().ne(REPORT_HEADER) {
        return Err(fail(format!("unexpected header {header:?}")));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(|e| fail(e.to_string()))?;
    Ok(RunReport { rows })
}
