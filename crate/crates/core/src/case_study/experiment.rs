use std::fs;
use std::path::Path;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{sample_size, tree_size_estimate, HypothesisCount, Rounding, TABLE1_C, TABLE1_DELTA, TABLE1_EPSILON, TABLE1_K};
use crate::case_study::rules::{rule_frequency, RULES_CSV_HEADER};
use crate::case_study::{feature_space, NUM_POSITIONS};
use crate::error::{Error, Result};
use crate::extraction::{trepac, ExtractionConfig, TerminationReason};
use crate::feature::enumerate_candidate_splits;
use crate::oracle::{Backend, Distribution, MembershipOracle};
use crate::tree::{DecisionTree, TreeDocument, TreeMeta};

pub const RUNS_CSV_HEADER: &str =
    "model,n,k,m,rep,training_error,training_misclassified,true_error,true_misclassified,query_secs,extract_secs";
pub const AGGREGATE_CSV_HEADER: &str = "model,n,k,m,runs,training_error_mean,training_error_std,training_misclassified_mean,training_misclassified_std,true_error_mean,true_error_std,true_misclassified_mean,true_misclassified_std,query_secs_mean,query_secs_std,extract_secs_mean,extract_secs_std";
pub const PLOT_CSV_HEADER: &str = "figure,model,k,n,metric,mean,std";
pub const ERRORS_CSV_HEADER: &str = "model,n,k,m,rep,oracle_failure,message";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub ks: Vec<u64>,
    pub cs: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub repetitions: usize,
    pub num_features: u32,
    pub rounding: Rounding,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            ks: TABLE1_K.to_vec(),
            cs: TABLE1_C.to_vec(),
            epsilon: TABLE1_EPSILON,
            delta: TABLE1_DELTA,
            repetitions: 10,
            num_features: NUM_POSITIONS as u32,
            rounding: Rounding::Nearest,
        }
    }
}

/// One `(k, n)` grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub k: u64,
    pub c: f64,
    pub n: u64,
    pub m: u64,
}

impl ExperimentGrid {
    /// Cells ordered by `k`, then by `c`.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        let mut out = Vec::with_capacity(self.ks.len() * self.cs.len());
        for &k in &self.ks {
            for &c in &self.cs {
                let n = tree_size_estimate(c, self.epsilon)?;
                if n == 0 {
                    return Err(Error::config(format!("c = {c} gives an empty tree size")));
                }
                let m = sample_size(
                    self.epsilon,
                    self.delta,
                    k,
                    &HypothesisCount::trees(n, self.num_features),
                    self.rounding,
                )?;
                out.push(Cell { k, c, n, m });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub model: String,
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub rep: usize,
    pub seed: u64,
    pub training_error: f64,
    pub training_misclassified: usize,
    pub true_error: f64,
    pub true_misclassified: usize,
    pub query_secs: f64,
    pub extract_secs: f64,
    pub termination_reason: TerminationReason,
    pub queue_exhausted: bool,
    pub tree: DecisionTree,
}

impl RunRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.n,
            self.k,
            self.m,
            self.rep,
            self.training_error,
            self.training_misclassified,
            self.true_error,
            self.true_misclassified,
            self.query_secs,
            self.extract_secs
        )
    }
}

/// A run that failed; the rest of its cell is skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub model: String,
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub rep: usize,
    pub oracle_failure: bool,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub model: String,
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub runs: usize,
    pub training_error: MeanStd,
    pub training_misclassified: MeanStd,
    pub true_error: MeanStd,
    pub true_misclassified: MeanStd,
    pub query_secs: MeanStd,
    pub extract_secs: MeanStd,
}

impl Aggregate {
    fn of(cell: &Cell, model: &str, rows: &[&RunRow]) -> Self {
        let stat = |f: fn(&RunRow) -> f64| MeanStd::of(rows.iter().map(|r| f(r)));
        Aggregate {
            model: model.to_owned(),
            n: cell.n,
            k: cell.k,
            m: cell.m,
            runs: rows.len(),
            training_error: stat(|r| r.training_error),
            training_misclassified: stat(|r| r.training_misclassified as f64),
            true_error: stat(|r| r.true_error),
            true_misclassified: stat(|r| r.true_misclassified as f64),
            query_secs: stat(|r| r.query_secs),
            extract_secs: stat(|r| r.extract_secs),
        }
    }

    pub fn csv_row(&self) -> String {
        let mut out = format!("{},{},{},{},{}", self.model, self.n, self.k, self.m, self.runs);
        for s in [
            self.training_error,
            self.training_misclassified,
            self.true_error,
            self.true_misclassified,
            self.query_secs,
            self.extract_secs,
        ] {
            out.push_str(&format!(",{},{}", s.mean, s.std));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub model: String,
    pub cells: Vec<Cell>,
    pub rows: Vec<RunRow>,
    pub errors: Vec<RunError>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentOutput {
    pub fn runs_csv(&self) -> String {
        let mut out = format!("{RUNS_CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_CSV_HEADER}\n");
        for a in &self.aggregates {
            out.push_str(&a.csv_row());
            out.push('\n');
        }
        out
    }

    /// Long format: one line per (metric, k, n) point of the error and
    /// misclassification plots.
    pub fn plot_csv(&self) -> String {
        let mut out = format!("{PLOT_CSV_HEADER}\n");
        let series: [(&str, &str, fn(&Aggregate) -> MeanStd); 4] = [
            ("training", "training_error", |a| a.training_error),
            ("training", "training_misclassified", |a| a.training_misclassified),
            ("true", "true_error", |a| a.true_error),
            ("true", "true_misclassified", |a| a.true_misclassified),
        ];
        for (figure, metric, get) in series {
            for a in &self.aggregates {
                let s = get(a);
                out.push_str(&format!(
                    "{figure},{},{},{},{metric},{},{}\n",
                    a.model, a.k, a.n, s.mean, s.std
                ));
            }
        }
        out
    }

    pub fn errors_csv(&self) -> String {
        let mut out = format!("{ERRORS_CSV_HEADER}\n");
        for e in &self.errors {
            let message = e.message.replace(['\n', '\r'], " ").replace('"', "'");
            out.push_str(&format!(
                "{},{},{},{},{},{},\"{}\"\n",
                e.model, e.n, e.k, e.m, e.rep, e.oracle_failure, message
            ));
        }
        out
    }

    pub fn trees(&self) -> Vec<&DecisionTree> {
        self.rows.iter().map(|r| &r.tree).collect()
    }

    /// Mean training error per `(k, n)` in cell order.
    pub fn mean_training_error(&self, k: u64, n: u64) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.k == k && a.n == n)
            .map(|a| a.training_error.mean)
    }
}

/// Runs every cell of `grid` `grid.repetitions` times.
///
/// Each run gets its own seed from the `(seed, run index)` stream, so the
/// result does not depend on scheduling. Cells run in parallel unless the
/// oracle is remote. True error is exact over `dist`'s examples, whose target
/// labels are fetched once up front.
pub fn run_experiment(
    oracle: &MembershipOracle,
    grid: &ExperimentGrid,
    dist: &Distribution,
    seed: u64,
) -> Result<ExperimentOutput> {
    let cells = grid.cells()?;
    if dist.is_empty() {
        return Err(Error::domain("distribution has an empty example space"));
    }
    let space = feature_space();
    let splits = enumerate_candidate_splits(&space)?;
    let target = oracle.query_batch(dist.examples())?;
    let model = oracle.model_id().to_owned();

    let run_cell = |(index, cell): (usize, &Cell)| -> (Vec<RunRow>, Option<RunError>) {
        let mut rows = Vec::with_capacity(grid.repetitions);
        for rep in 0..grid.repetitions {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((index * grid.repetitions + rep) as u64);
            let run_seed = rng.next_u64();
            let config = ExtractionConfig::new(cell.n as usize, cell.k, cell.m as usize, splits.clone(), run_seed);
            let outcome = trepac(oracle, &config, dist).and_then(|report| {
                let mut wrong = Vec::new();
                for (i, (example, label)) in dist.examples().iter().zip(&target).enumerate() {
                    if report.tree.classify(example)? != *label {
                        wrong.push(i);
                    }
                }
                let true_error = if dist.is_uniform() {
                    wrong.len() as f64 / dist.len() as f64
                } else {
                    let exact: BigRational = wrong.iter().map(|&i| dist.weight_exact(i)).sum();
                    exact.to_f64().unwrap_or(f64::NAN)
                };
                Ok(RunRow {
                    model: model.clone(),
                    n: cell.n,
                    k: cell.k,
                    m: cell.m,
                    rep,
                    seed: run_seed,
                    training_error: report.training_error,
                    training_misclassified: report.training_misclassified,
                    true_error,
                    true_misclassified: wrong.len(),
                    query_secs: report.querying_secs,
                    extract_secs: report.extraction_secs,
                    termination_reason: report.termination_reason,
                    queue_exhausted: report.queue_exhausted,
                    tree: report.tree,
                })
            });
            match outcome {
                Ok(row) => rows.push(row),
                Err(e) => {
                    let error = RunError {
                        model: model.clone(),
                        n: cell.n,
                        k: cell.k,
                        m: cell.m,
                        rep,
                        oracle_failure: e.is_oracle_failure(),
                        message: e.to_string(),
                    };
                    return (rows, Some(error));
                }
            }
        }
        (rows, None)
    };

    let per_cell: Vec<(Vec<RunRow>, Option<RunError>)> = match oracle.backend() {
        Backend::Remote(_) => cells.iter().enumerate().map(run_cell).collect(),
        _ => cells.par_iter().enumerate().map(run_cell).collect(),
    };

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    let mut aggregates = Vec::new();
    for (cell, (cell_rows, error)) in cells.iter().zip(per_cell) {
        if !cell_rows.is_empty() {
            let refs: Vec<&RunRow> = cell_rows.iter().collect();
            aggregates.push(Aggregate::of(cell, &model, &refs));
        }
        rows.extend(cell_rows);
        errors.extend(error);
    }
    Ok(ExperimentOutput {
        model,
        cells,
        rows,
        errors,
        aggregates,
    })
}

/// Writes `runs.csv`, `aggregates.csv`, `plot.csv`, `rules.csv`,
/// `errors.csv` and one JSON document per extracted tree under `dir/trees`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput, grid: &ExperimentGrid) -> Result<()> {
    let space = feature_space();
    fs::create_dir_all(dir.join("trees"))?;
    fs::write(dir.join("runs.csv"), output.runs_csv())?;
    fs::write(dir.join("aggregates.csv"), output.aggregates_csv())?;
    fs::write(dir.join("plot.csv"), output.plot_csv())?;
    fs::write(dir.join("errors.csv"), output.errors_csv())?;

    let mut rules = format!("{RULES_CSV_HEADER}\n");
    for r in rule_frequency(&output.trees(), &space) {
        rules.push_str(&r.csv_row());
        rules.push('\n');
    }
    fs::write(dir.join("rules.csv"), rules)?;

    for row in &output.rows {
        let meta = TreeMeta {
            feature_space_id: space.id.clone(),
            epsilon: Some(grid.epsilon),
            delta: Some(grid.delta),
            k: Some(row.k),
            m: Some(row.m),
            n: Some(row.n),
            seed: Some(row.seed),
            model_id: Some(row.model.clone()),
        };
        let name = format!(
            "{}_n{}_k{}_rep{}.json",
            sanitize(&row.model),
            row.n,
            row.k,
            row.rep
        );
        TreeDocument::new(row.tree.clone(), meta).write(dir.join("trees").join(name))?;
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::builtin_fixture;

    #[test]
    fn default_grid_matches_sample_size_table() {
        let cells = ExperimentGrid::default().cells().unwrap();
        assert_eq!(cells.len(), 16);
        let ms: Vec<u64> = cells.iter().map(|c| c.m).collect();
        assert_eq!(
            ms,
            vec![124, 201, 257, 321, 204, 280, 336, 401, 277, 353, 409, 474, 349, 425, 481, 546]
        );
        let ns: Vec<u64> = cells[..4].iter().map(|c| c.n).collect();
        assert_eq!(ns, vec![3, 6, 10, 18]);
    }

    #[test]
    fn mean_std() {
        let s = MeanStd::of([1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(MeanStd::of([4.0]).std, 0.0);
    }

    #[test]
    fn small_grid_rows_and_invariants() {
        let oracle = MembershipOracle::from_fixture(builtin_fixture("synthetic-bias").unwrap());
        let dist = Distribution::uniform(crate::case_study::enumerate_examples());
        let grid = ExperimentGrid {
            ks: vec![0, 10],
            cs: vec![0.04, 0.08],
            repetitions: 2,
            ..Default::default()
        };
        let out = run_experiment(&oracle, &grid, &dist, 11).unwrap();
        assert_eq!(out.rows.len(), 8);
        assert!(out.errors.is_empty());
        assert_eq!(out.aggregates.len(), 4);
        for r in &out.rows {
            assert_eq!(r.true_misclassified as f64 / 360.0, r.true_error);
            if r.queue_exhausted {
                assert!(r.training_misclassified as u64 <= r.k);
            }
        }
        let again = run_experiment(&oracle, &grid, &dist, 11).unwrap();
        let strip = |o: &ExperimentOutput| {
            o.rows
                .iter()
                .map(|r| (r.rep, r.n, r.k, r.training_misclassified, r.true_misclassified, r.tree.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&out), strip(&again));
        assert_eq!(out.runs_csv().lines().next().unwrap(), RUNS_CSV_HEADER);
        assert_eq!(out.plot_csv().lines().count(), 1 + 4 * 4);
    }
}
