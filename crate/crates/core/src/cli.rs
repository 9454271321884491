//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/domain/configuration error, 2 oracle or
//! transport failure, 3 a `validate-pac` run that did not pass.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{sample_size, table1, table1_csv, tree_size_estimate, tree_size_estimate_raw, HypothesisCount, Rounding};
use crate::case_study::{self, run_experiment, write_outputs, ExperimentGrid, CLASS_NAMES};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, random_target_tree, validate_pac, EvalResult, ValidationConfig};
use crate::extraction::{trepac, ExtractionConfig};
use crate::feature::{enumerate_candidate_splits, FeatureSpace};
use crate::oracle::{Distribution, FixtureTable, MembershipOracle, RemoteConfig};
use crate::tree::{extract_rules, render_text, RuleOptions, TreeDocument, TreeMeta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "trepac", version, about = "PAC decision-tree extraction from black-box classifiers")]
pub struct Cli {
    /// `quiet` suppresses the reproducibility banner and run summaries.
    #[arg(long, global = true, value_enum, default_value_t = LogLevel::Info)]
    pub log_level: LogLevel,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Quiet,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Nearest,
    Ceil,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Nearest => Rounding::Nearest,
            RoundingArg::Ceil => Rounding::Ceil,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    /// `builtin:<name>`, `fixture:<path>`, `tree:<path>`, `remote:<url>` or
    /// `remote` (endpoint from ORACLE_URL).
    #[arg(long)]
    pub oracle: String,

    /// Model id sent to a remote oracle.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct SpaceArgs {
    /// Feature-space TOML; defaults to the bundled 22-position space.
    #[arg(long)]
    pub space: Option<PathBuf>,

    /// `uniform` or a file of `values...,weight` rows.
    #[arg(long, default_value = "uniform")]
    pub distribution: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Training-set size for a tree size, error budget and confidence.
    SampleSize {
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        k: u64,
        /// Internal nodes of the hypothesis trees.
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 22)]
        features: u32,
        #[arg(long, value_enum, default_value_t = RoundingArg::Nearest)]
        rounding: RoundingArg,
    },
    /// Sample sizes for the default 4×4 grid as CSV.
    Table1 {
        #[arg(long, value_enum, default_value_t = RoundingArg::Nearest)]
        rounding: RoundingArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tree size suggested by the constant `c` and `epsilon`.
    TreeSize {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// Print the unrounded value as well.
        #[arg(long)]
        raw: bool,
    },
    /// Extract a tree from an oracle.
    Extract {
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        space: SpaceArgs,
        /// Size limit (internal nodes).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        k: u64,
        /// Training-set size; computed from the bound when absent.
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = RoundingArg::Nearest)]
        rounding: RoundingArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the tree document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print an indented rendering to stdout.
        #[arg(long)]
        render: bool,
    },
    /// Compare a tree with an oracle over the whole space.
    Evaluate {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Monte-Carlo check of the sample-size guarantee on the bundled space.
    ValidatePac {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        k: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RoundingArg::Ceil)]
        rounding: RoundingArg,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write summary.csv and trials.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the occupational gender-bias grid.
    CaseStudy {
        #[command(flatten)]
        oracle: OracleArgs,
        /// Only `default` is defined.
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Print the leaf rules of tree documents, or their occupation-rule
    /// frequencies.
    Rules {
        #[arg(long = "tree", required = true)]
        trees: Vec<PathBuf>,
        #[arg(long)]
        frequency: bool,
        /// Drop negated one-hot literals implied by a positive one.
        #[arg(long)]
        simplify: bool,
    },
    /// Label every example of the bundled space and write a fixture file.
    ExportFixture {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args`, runs the command and returns the exit code. Errors go to
/// stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match run(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command. Artifacts go to `out`, banner and summaries to `log`.
pub fn run(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<i32> {
    let verbose = cli.log_level == LogLevel::Info;
    if verbose {
        writeln!(log, "# trepac {} {:?}", env!("CARGO_PKG_VERSION"), cli.command)?;
    }
    match cli.command {
        Command::SampleSize {
            epsilon,
            delta,
            k,
            n,
            features,
            rounding,
        } => {
            let m = sample_size(epsilon, delta, k, &HypothesisCount::trees(n, features), rounding.into())?;
            writeln!(out, "{m}")?;
        }
        Command::Table1 { rounding, out: path } => {
            let csv = table1_csv(&table1(rounding.into())?);
            match path {
                Some(p) => fs::write(p, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
        }
        Command::TreeSize { c, epsilon, raw } => {
            let n = tree_size_estimate(c, epsilon)?;
            if raw {
                writeln!(out, "{n} {}", tree_size_estimate_raw(c, epsilon)?)?;
            } else {
                writeln!(out, "{n}")?;
            }
        }
        Command::Extract {
            oracle,
            space,
            n,
            k,
            m,
            epsilon,
            delta,
            rounding,
            seed,
            out: path,
            render,
        } => {
            let fs_space = load_space(space.space.as_deref())?;
            let dist = load_distribution(&space.distribution, &fs_space)?;
            let oracle = build_oracle(&oracle, &fs_space)?;
            let m = match m {
                Some(m) => m,
                None => sample_size(
                    epsilon,
                    delta,
                    k,
                    &HypothesisCount::trees(n as u64, fs_space.len() as u32),
                    rounding.into(),
                )?,
            };
            let splits = enumerate_candidate_splits(&fs_space)?;
            let config = ExtractionConfig::new(n, k, m as usize, splits, seed);
            let report = trepac(&oracle, &config, &dist)?;
            if verbose {
                writeln!(
                    log,
                    "# m={m} termination={} training_error={} training_misclassified={} oracle_calls={} query_secs={:.3} extract_secs={:.3}",
                    report.termination_reason,
                    report.training_error,
                    report.training_misclassified,
                    report.oracle_calls,
                    report.querying_secs,
                    report.extraction_secs
                )?;
            }
            let doc = TreeDocument::new(
                report.tree,
                TreeMeta {
                    feature_space_id: fs_space.id.clone(),
                    epsilon: Some(epsilon),
                    delta: Some(delta),
                    k: Some(k),
                    m: Some(m),
                    n: Some(n as u64),
                    seed: Some(seed),
                    model_id: Some(oracle.model_id().to_owned()),
                },
            );
            if let Some(p) = &path {
                doc.write(p)?;
            }
            if render {
                out.write_all(render_text(&doc.tree, Some(&fs_space), Some(CLASS_NAMES)).as_bytes())?;
            } else if path.is_none() {
                out.write_all(doc.to_json_string()?.as_bytes())?;
            }
        }
        Command::Evaluate { tree, oracle, space } => {
            let fs_space = load_space(space.space.as_deref())?;
            let dist = load_distribution(&space.distribution, &fs_space)?;
            let oracle = build_oracle(&oracle, &fs_space)?;
            let doc = TreeDocument::read(&tree)?;
            let result = evaluate(&doc.tree, &oracle, &dist, None)?;
            writeln!(out, "{}\n{}", EvalResult::CSV_HEADER, result.csv_row())?;
        }
        Command::ValidatePac {
            n,
            epsilon,
            delta,
            k,
            trials,
            seed,
            rounding,
            workers,
            out_dir,
        } => {
            let fs_space = case_study::feature_space();
            let examples = case_study::enumerate_examples();
            let dist = Distribution::uniform(examples.clone());
            let splits = enumerate_candidate_splits(&fs_space)?;
            let mut config = ValidationConfig::new(n, fs_space.len() as u32, epsilon, delta, k, trials, seed);
            config.rounding = rounding.into();
            config.workers = workers;
            let report = validate_pac(&dist, &splits, &config, |rng| {
                random_target_tree(&splits, &examples, n, rng)
            })?;
            out.write_all(report.summary_csv().as_bytes())?;
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)?;
                fs::write(dir.join("summary.csv"), report.summary_csv())?;
                fs::write(dir.join("trials.csv"), report.trials_csv())?;
            }
            if !report.pass {
                return Ok(EXIT_VALIDATION_FAILED);
            }
        }
        Command::CaseStudy {
            oracle,
            grid,
            repetitions,
            seed,
            out_dir,
        } => {
            if grid != "default" {
                return Err(Error::Config(format!("unknown grid {grid:?}; only \"default\" is defined")));
            }
            let mut grid = ExperimentGrid::default();
            if let Some(r) = repetitions {
                grid.repetitions = r;
            }
            let fs_space = case_study::feature_space();
            let oracle = build_oracle(&oracle, &fs_space)?;
            let dist = Distribution::uniform(case_study::enumerate_examples());
            let output = run_experiment(&oracle, &grid, &dist, seed)?;
            write_outputs(&out_dir, &output, &grid)?;
            if verbose {
                writeln!(
                    log,
                    "# {} runs, {} failed cells, outputs in {}",
                    output.rows.len(),
                    output.errors.len(),
                    out_dir.display()
                )?;
            }
            out.write_all(output.aggregates_csv().as_bytes())?;
            if let Some(e) = output.errors.first() {
                writeln!(log, "error: cell n={} k={} rep={}: {}", e.n, e.k, e.rep, e.message)?;
                return Ok(if output.errors.iter().any(|e| e.oracle_failure) { 2 } else { 1 });
            }
        }
        Command::Rules {
            trees,
            frequency,
            simplify,
        } => {
            let fs_space = case_study::feature_space();
            let docs = trees.iter().map(TreeDocument::read).collect::<Result<Vec<_>>>()?;
            if frequency {
                let refs: Vec<_> = docs.iter().map(|d| &d.tree).collect();
                writeln!(out, "{}", case_study::RULES_CSV_HEADER)?;
                for r in case_study::rule_frequency(&refs, &fs_space) {
                    writeln!(out, "{}", r.csv_row())?;
                }
            } else {
                let options = RuleOptions {
                    simplify_one_hot: simplify,
                };
                for (path, doc) in trees.iter().zip(&docs) {
                    let space = (doc.meta.feature_space_id == fs_space.id).then_some(&fs_space);
                    writeln!(out, "# {}", path.display())?;
                    for rule in extract_rules(&doc.tree, space, options) {
                        writeln!(out, "{}", rule.display(space))?;
                    }
                }
            }
        }
        Command::ExportFixture { oracle, out: path } => {
            let fs_space = case_study::feature_space();
            let oracle = build_oracle(&oracle, &fs_space)?;
            let examples = case_study::enumerate_examples();
            let labels = oracle.query_batch(&examples)?;
            let mut table = FixtureTable::new(oracle.model_id());
            for (e, l) in examples.into_iter().zip(labels) {
                table.insert(e, l)?;
            }
            fs::write(path, table.to_text())?;
        }
    }
    Ok(EXIT_OK)
}

fn load_space(path: Option<&Path>) -> Result<FeatureSpace> {
    match path {
        Some(p) => FeatureSpace::from_file(p),
        None => Ok(case_study::feature_space()),
    }
}

fn load_distribution(spec: &str, space: &FeatureSpace) -> Result<Distribution> {
    if spec == "uniform" {
        Distribution::uniform_over(space)
    } else {
        Distribution::from_file(spec, space)
    }
}

/// Resolves an oracle spec string.
pub fn build_oracle(args: &OracleArgs, space: &FeatureSpace) -> Result<MembershipOracle> {
    let spec = args.oracle.as_str();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "builtin" => Ok(MembershipOracle::from_fixture(case_study::builtin_fixture(rest)?)),
        "fixture" => Ok(MembershipOracle::from_fixture(FixtureTable::read(rest, space)?)),
        "tree" => {
            let doc = TreeDocument::read(rest)?;
            let id = doc.meta.model_id.clone().unwrap_or_else(|| "target-tree".to_owned());
            Ok(MembershipOracle::new(crate::oracle::Backend::TargetTree(doc.tree), id))
        }
        "remote" => {
            let model = args
                .model
                .clone()
                .ok_or_else(|| Error::Config("a remote oracle needs --model".into()))?;
            let config = if rest.is_empty() {
                RemoteConfig::from_env(model)?
            } else {
                let mut c = RemoteConfig::new(rest, model);
                c.apply_env()?;
                c
            };
            MembershipOracle::from_remote(config)
        }
        _ => Err(Error::Config(format!(
            "oracle spec {spec:?} must start with builtin:, fixture:, tree: or remote"
        ))),
    }
}
