//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trepac::bounds::{binomial, check_binomial_lemma, table1, tree_size_estimate, Rounding, TABLE1_C};
use trepac::case_study::{self, builtin_fixture, run_experiment, ExperimentGrid, ExperimentOutput, RUNS_CSV_HEADER};
use trepac::evaluation::{
    random_target_tree, true_error_by_leaves, true_error_by_leaves_exact, true_error_enumerate,
    true_error_enumerate_exact, validate_pac, ValidationConfig,
};
use trepac::feature::{enumerate_candidate_splits, CandidateSplit, Constraint, FeatureSpace};
use trepac::{DecisionTree, Distribution, MembershipOracle};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(name: &str, started: Instant, outcome: Outcome, failures: &mut Vec<String>) {
    let verdict = if outcome.pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {name} ({:.2}s): {}",
        started.elapsed().as_secs_f64(),
        outcome.detail
    );
    if !outcome.pass {
        failures.push(name.to_owned());
    }
}

fn within(started: Instant, limit: Duration) -> bool {
    started.elapsed() < limit
}

const TABLE1_EXPECTED: [[u64; 4]; 4] = [
    [124, 201, 257, 321],
    [204, 280, 336, 401],
    [277, 353, 409, 474],
    [349, 425, 481, 546],
];

fn table1_reproduction() -> Outcome {
    let started = Instant::now();
    let rows = table1(Rounding::Nearest).unwrap();
    let mut mismatches = Vec::new();
    for (ki, expected) in TABLE1_EXPECTED.iter().enumerate() {
        for (ci, &m) in expected.iter().enumerate() {
            if rows[ci].m[ki] != m {
                mismatches.push(format!("k-index {ki}, n={}: {} != {m}", rows[ci].n, rows[ci].m[ki]));
            }
        }
    }
    let fast = within(started, Duration::from_secs(1));
    Outcome {
        pass: mismatches.is_empty() && fast,
        detail: if mismatches.is_empty() {
            "16/16 sample sizes match".into()
        } else {
            mismatches.join("; ")
        },
    }
}

fn tree_size_regression() -> Outcome {
    let ns: Vec<u64> = TABLE1_C.iter().map(|&c| tree_size_estimate(c, 0.2).unwrap()).collect();
    Outcome {
        pass: ns == [3, 6, 10, 18],
        detail: format!("n = {ns:?}"),
    }
}

/// Random tree over `features` binary features with up to `max_splits`
/// splits, possibly negated, possibly vacuous.
fn random_tree(rng: &mut ChaCha8Rng, features: usize, max_splits: usize) -> DecisionTree {
    let mut tree = DecisionTree::root_only();
    for _ in 0..rng.gen_range(0..=max_splits) {
        let leaves: Vec<_> = tree.leaves().cloned().collect();
        let leaf = &leaves[rng.gen_range(0..leaves.len())];
        let mut c = Constraint::split(CandidateSplit::eq(rng.gen_range(0..features), 1));
        if rng.gen_bool(0.3) {
            c = Constraint::not(c);
        }
        if rng.gen_bool(0.15) {
            let extra = Constraint::split(CandidateSplit::eq(rng.gen_range(0..features), 1));
            c = if rng.gen_bool(0.5) { Constraint::and(c, extra) } else { Constraint::or(c, extra) };
        }
        tree = tree.split_leaf(leaf, c).unwrap();
    }
    tree
}

fn leaf_decomposition_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let triples = 1200;
    let mut exact_mismatch = 0;
    let mut float_mismatch = 0;
    let mut brute_mismatch = 0;
    for _ in 0..triples {
        let features = rng.gen_range(1..=8);
        let space = FeatureSpace::binary("b", features);
        let examples = space.enumerate().unwrap();
        let mut raw: Vec<u64> = (0..examples.len()).map(|_| rng.gen_range(0..50)).collect();
        if raw.iter().all(|&w| w == 0) {
            raw[0] = 1;
        }
        let total: u64 = raw.iter().sum();
        let exact: Vec<BigRational> = raw
            .iter()
            .map(|&w| BigRational::new(BigInt::from(w), BigInt::from(total)))
            .collect();
        let floats: Vec<f64> = raw.iter().map(|&w| w as f64 / total as f64).collect();
        let dist = Distribution::exact(examples.clone(), exact.clone()).unwrap();
        let fdist = Distribution::float(examples.clone(), floats).unwrap();
        let tree = random_tree(&mut rng, features, 7);
        let target_tree = random_tree(&mut rng, features, 5);
        let target = MembershipOracle::from_tree(target_tree.clone());

        let by_leaves = true_error_by_leaves_exact(&tree, &target, &dist).unwrap();
        if by_leaves != true_error_enumerate_exact(&tree, &target, &dist).unwrap() {
            exact_mismatch += 1;
        }
        // Brute force written out here, independent of the library's sums.
        let mut brute = BigRational::from_integer(BigInt::from(0));
        for (i, e) in examples.iter().enumerate() {
            if tree.classify(e).unwrap() != target_tree.classify(e).unwrap() {
                brute += &exact[i];
            }
        }
        if brute != by_leaves {
            brute_mismatch += 1;
        }
        let f_leaves = true_error_by_leaves(&tree, &target, &fdist).unwrap();
        let f_enum = true_error_enumerate(&tree, &target, &fdist).unwrap();
        if (f_leaves - f_enum).abs() > 1e-12 || (f_leaves - by_leaves.to_f64().unwrap()).abs() > 1e-12 {
            float_mismatch += 1;
        }
    }
    let fast = within(started, Duration::from_secs(60));
    Outcome {
        pass: exact_mismatch == 0 && float_mismatch == 0 && brute_mismatch == 0 && fast,
        detail: format!(
            "{triples} triples, ≤8 features: exact mismatches {exact_mismatch}, brute-force mismatches {brute_mismatch}, float mismatches (>1e-12) {float_mismatch}"
        ),
    }
}

fn binomial_lemma() -> Outcome {
    let started = Instant::now();
    // Pascal's triangle as the independent reference for C(m, j).
    let mut row = vec![BigUint::from(1u32)];
    let mut violations = 0;
    let mut pascal_mismatch = 0;
    for m in 1..=30u64 {
        let mut next = vec![BigUint::from(1u32); m as usize + 1];
        for j in 1..m as usize {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
        for j in 1..=m {
            let c = &row[j as usize];
            if *c != binomial(m, j) {
                pascal_mismatch += 1;
            }
            let bound = (std::f64::consts::E * m as f64 / j as f64).powi(j as i32);
            if c.to_f64().unwrap() > bound {
                violations += 1;
            }
        }
    }
    let lib = check_binomial_lemma(30);
    Outcome {
        pass: violations == 0 && pascal_mismatch == 0 && lib && within(started, Duration::from_secs(1)),
        detail: format!("465 (m, j) pairs, violations {violations}, binomial mismatches {pascal_mismatch}"),
    }
}

struct BudgetLedger {
    runs: usize,
    queue_empty: usize,
    violations: usize,
}

fn pac_guarantee(budget: &mut BudgetLedger) -> Outcome {
    let started = Instant::now();
    let space = case_study::feature_space();
    let examples = case_study::enumerate_examples();
    let dist = Distribution::uniform(examples.clone());
    let splits = enumerate_candidate_splits(&space).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for (k, expected_m) in [(0u64, 124u64), (10, 277)] {
        let mut config = ValidationConfig::new(3, 22, 0.2, 0.1, k, 200, 2024 + k);
        config.rounding = Rounding::Nearest;
        let report = validate_pac(&dist, &splits, &config, |rng| random_target_tree(&splits, &examples, 3, rng)).unwrap();
        budget.runs += report.trials.len();
        budget.queue_empty += report.trials.iter().filter(|t| t.queue_exhausted).count();
        budget.violations += report.budget_violations;
        let ok = report.training_size == expected_m && report.failure_fraction <= 0.1 + 0.064 && report.pass;
        pass &= ok;
        details.push(format!(
            "k={k} m={} failures {}/200 = {:.3} (threshold {:.4})",
            report.training_size, report.failures, report.failure_fraction, report.threshold
        ));
    }
    Outcome {
        pass: pass && within(started, Duration::from_secs(300)),
        detail: details.join("; "),
    }
}

fn record_budget(budget: &mut BudgetLedger, output: &ExperimentOutput) {
    for r in &output.rows {
        budget.runs += 1;
        if r.queue_exhausted {
            budget.queue_empty += 1;
            if r.training_misclassified as u64 > r.k {
                budget.violations += 1;
            }
        }
    }
}

fn case_study_pipeline(budget: &mut BudgetLedger) -> (Outcome, Vec<ExperimentOutput>) {
    let dist = Distribution::uniform(case_study::enumerate_examples());
    let grid = ExperimentGrid::default();
    let mut outputs = Vec::new();
    let mut details = Vec::new();
    let mut pass = true;
    for name in case_study::BUILTIN_FIXTURES {
        let started = Instant::now();
        let oracle = MembershipOracle::from_fixture(builtin_fixture(name).unwrap());
        let out = run_experiment(&oracle, &grid, &dist, 2024).unwrap();
        let elapsed = started.elapsed();
        record_budget(budget, &out);
        let runs = out.runs_csv();
        let header_ok = runs.lines().next() == Some(RUNS_CSV_HEADER);
        let rows_ok = out.rows.len() == 160 && runs.lines().count() == 161 && out.errors.is_empty();
        let columns_ok = runs.lines().all(|l| l.split(',').count() == 11);
        pass &= header_ok && rows_ok && columns_ok && elapsed < Duration::from_secs(120);
        if name == "occupation-depth3" {
            let cell = out.aggregates.iter().find(|a| a.n == 10 && a.k == 0).unwrap();
            let zero = cell.m == 257 && cell.runs == 10 && cell.training_error.mean == 0.0;
            pass &= zero;
            details.push(format!(
                "{name}: cell n=10 k=0 m={} mean training error {} over {} runs",
                cell.m, cell.training_error.mean, cell.runs
            ));
        }
        details.push(format!("{name}: 160 rows in {:.2}s", elapsed.as_secs_f64()));
        outputs.push(out);
    }
    (
        Outcome {
            pass,
            detail: details.join("; "),
        },
        outputs,
    )
}

fn figure_shapes(outputs: &[ExperimentOutput]) -> Outcome {
    let mut breaks = Vec::new();
    let mut above = Vec::new();
    for out in outputs {
        for k in [0u64, 5, 10, 15] {
            let series: Vec<(u64, f64)> = [3u64, 6, 10, 18]
                .iter()
                .map(|&n| (n, out.mean_training_error(k, n).unwrap()))
                .collect();
            for w in series.windows(2) {
                if w[1].1 > w[0].1 {
                    breaks.push(format!(
                        "{} k={k}: n={} {:.4} > n={} {:.4}",
                        out.model, w[1].0, w[1].1, w[0].0, w[0].1
                    ));
                }
            }
            for (n, v) in &series {
                if *v >= 0.2 {
                    above.push(format!("{} k={k} n={n}: {v:.4}", out.model));
                }
            }
        }
    }
    let detail = if breaks.is_empty() && above.is_empty() {
        "all per-k series non-increasing in n and below 0.2".to_owned()
    } else {
        format!(
            "non-monotone steps: [{}]; values ≥ 0.2: [{}]",
            breaks.join(", "),
            above.join(", ")
        )
    };
    Outcome {
        pass: breaks.is_empty() && above.is_empty(),
        detail,
    }
}

fn budget_invariant(budget: &BudgetLedger) -> Outcome {
    Outcome {
        pass: budget.violations == 0,
        detail: format!(
            "{} runs, {} ended with an empty queue, {} exceeded k",
            budget.runs, budget.queue_empty, budget.violations
        ),
    }
}

fn extra_budget_runs(budget: &mut BudgetLedger) {
    // Small size limits and tight k make empty-queue endings common.
    let space = case_study::feature_space();
    let examples = case_study::enumerate_examples();
    let dist = Distribution::uniform(examples.clone());
    let splits = enumerate_candidate_splits(&space).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..200u64 {
        let target = random_target_tree(&splits, &examples, rng.gen_range(0..6), &mut rng).unwrap();
        let oracle = MembershipOracle::from_tree(target);
        let config = trepac::ExtractionConfig::new(rng.gen_range(1..12), rng.gen_range(0..8), 60, splits.clone(), i);
        let r = trepac::trepac(&oracle, &config, &dist).unwrap();
        budget.runs += 1;
        if r.queue_exhausted {
            budget.queue_empty += 1;
            if r.training_misclassified as u64 > config.k {
                budget.violations += 1;
            }
        }
    }
}

fn main() {
    let mut failures = Vec::new();
    let mut budget = BudgetLedger {
        runs: 0,
        queue_empty: 0,
        violations: 0,
    };

    let t = Instant::now();
    report("sample-size table", t, table1_reproduction(), &mut failures);
    let t = Instant::now();
    report("tree-size estimate", t, tree_size_regression(), &mut failures);
    let t = Instant::now();
    report("leaf-decomposition equivalence", t, leaf_decomposition_equivalence(), &mut failures);
    let t = Instant::now();
    report("binomial lemma", t, binomial_lemma(), &mut failures);
    let t = Instant::now();
    report("empirical PAC guarantee", t, pac_guarantee(&mut budget), &mut failures);
    let t = Instant::now();
    let (pipeline, outputs) = case_study_pipeline(&mut budget);
    report("case-study pipeline offline", t, pipeline, &mut failures);
    let t = Instant::now();
    report("figure shapes", t, figure_shapes(&outputs), &mut failures);
    extra_budget_runs(&mut budget);
    let t = Instant::now();
    report("extraction budget invariant", t, budget_invariant(&budget), &mut failures);

    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failed: {}", failures.len(), failures.join(", "));
        std::process::exit(1);
    }
}
