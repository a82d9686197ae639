//! Seeded Monte Carlo study runner.
//!
//! Replicates are embarrassingly parallel: replicate i draws its data from
//! the derived seed stream (seed, i), per-replicate outcomes are collected in
//! replicate order, and aggregation is a deterministic pairwise-summation
//! fold. A study therefore produces bit-identical reports for any worker
//! count, including the single-threaded build.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capture::estimate_cr;
use crate::error::Result;
use crate::fisher::fisher_information;
use crate::mle::{solve_mle, SolverOptions};
use crate::model::{ModelParams, RngSeed};
use crate::moment::{estimate_moment, moment_asymptotic_expectation, moment_asymptotic_variance};
use crate::numeric::pairwise_sum;
use crate::report::{Method, ParamTriple};
use crate::sampling::{derive_stream, sample_full};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MethodSet {
    pub moment: bool,
    pub mle: bool,
    pub capture_recapture: bool,
}

impl MethodSet {
    pub fn all() -> Self {
        Self { moment: true, mle: true, capture_recapture: true }
    }

    pub fn contains(&self, method: Method) -> bool {
        match method {
            Method::Moment => self.moment,
            Method::Mle => self.mle,
            Method::CaptureRecapture => self.capture_recapture,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub params: ModelParams,
    pub m: usize,
    pub replicates: usize,
    pub seed: RngSeed,
    pub methods: MethodSet,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(crate::error::Error::SampleTooSmall(self.m));
        }
        if self.replicates < 1 {
            return Err(crate::error::Error::Domain("replicates must be >= 1".into()));
        }
        Ok(())
    }
}

/// Moments of one estimator over the successful replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub successes: usize,
    /// Failure counts keyed by error kind.
    pub failures: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<ParamTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<ParamTriple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<ParamTriple>,
}

/// Fraction of replicates (among those where both succeeded) with the ML
/// lambda estimate strictly closer to the truth than the moment estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadToHead {
    pub both_succeeded: usize,
    pub ml_better_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub methods: Vec<MethodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub head_to_head: Option<HeadToHead>,
}

impl StudyReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

type MethodOutcome = std::result::Result<[f64; 3], &'static str>;

#[derive(Debug, Clone)]
struct ReplicateOutcome {
    moment: Option<MethodOutcome>,
    mle: Option<MethodOutcome>,
    cr: Option<MethodOutcome>,
}

fn run_replicate(config: &StudyConfig, index: usize) -> ReplicateOutcome {
    let rep_seed = RngSeed(derive_stream(config.seed, index as u64));
    let full = sample_full(config.params, config.m, rep_seed)
        .expect("config.m >= 2 is validated up front");
    let collapsed = if config.methods.moment || config.methods.mle {
        Some(full.collapse())
    } else {
        None
    };
    let moment = config.methods.moment.then(|| {
        estimate_moment(collapsed.as_ref().unwrap())
            .map(|e| [e.lambda_hat, e.p1_hat, e.p2_hat])
            .map_err(|e| e.kind())
    });
    let mle = config.methods.mle.then(|| {
        solve_mle(collapsed.as_ref().unwrap(), SolverOptions::default())
            .map(|e| [e.lambda_star, e.p1_star, e.p2_star])
            .map_err(|e| e.kind())
    });
    let cr = config.methods.capture_recapture.then(|| {
        estimate_cr(&full)
            .map(|e| [e.lambda_hat, e.p1_hat, e.p2_hat])
            .map_err(|e| e.kind())
    });
    ReplicateOutcome { moment, mle, cr }
}

fn summarize_method(
    method: Method,
    outcomes: &[ReplicateOutcome],
    pick: impl Fn(&ReplicateOutcome) -> &Option<MethodOutcome>,
    truth: ModelParams,
) -> MethodSummary {
    let mut failures = BTreeMap::new();
    let mut values: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for outcome in outcomes {
        match pick(outcome).as_ref().expect("method was requested") {
            Ok(triple) => {
                for (store, v) in values.iter_mut().zip(triple) {
                    store.push(*v);
                }
            }
            Err(kind) => *failures.entry(kind.to_string()).or_insert(0) += 1,
        }
    }
    let n = values[0].len();
    let (mean, std) = if n == 0 {
        (None, None)
    } else {
        let means: Vec<f64> = values.iter().map(|v| pairwise_sum(v) / n as f64).collect();
        let stds: Vec<f64> = values
            .iter()
            .zip(&means)
            .map(|(v, &mu)| {
                if n < 2 {
                    0.0
                } else {
                    let sq: Vec<f64> = v.iter().map(|x| (x - mu) * (x - mu)).collect();
                    (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
                }
            })
            .collect();
        (
            Some(ParamTriple { lambda: means[0], p1: means[1], p2: means[2] }),
            Some(ParamTriple { lambda: stds[0], p1: stds[1], p2: stds[2] }),
        )
    };
    let bias = mean.map(|m| ParamTriple {
        lambda: m.lambda - truth.lambda(),
        p1: m.p1 - truth.p1(),
        p2: m.p2 - truth.p2(),
    });
    MethodSummary { method, successes: n, failures, mean, std, bias }
}

fn aggregate(config: &StudyConfig, outcomes: Vec<ReplicateOutcome>) -> StudyReport {
    let mut methods = Vec::new();
    if config.methods.moment {
        methods.push(summarize_method(Method::Moment, &outcomes, |o| &o.moment, config.params));
    }
    if config.methods.mle {
        methods.push(summarize_method(Method::Mle, &outcomes, |o| &o.mle, config.params));
    }
    if config.methods.capture_recapture {
        methods.push(summarize_method(
            Method::CaptureRecapture,
            &outcomes,
            |o| &o.cr,
            config.params,
        ));
    }
    let head_to_head = (config.methods.moment && config.methods.mle).then(|| {
        let truth = config.params.lambda();
        let mut both = 0usize;
        let mut ml_better = 0usize;
        for o in &outcomes {
            if let (Some(Ok(mom)), Some(Ok(ml))) = (o.moment.as_ref(), o.mle.as_ref()) {
                both += 1;
                if (ml[0] - truth).abs() < (mom[0] - truth).abs() {
                    ml_better += 1;
                }
            }
        }
        HeadToHead {
            both_succeeded: both,
            ml_better_fraction: if both == 0 { f64::NAN } else { ml_better as f64 / both as f64 },
        }
    });
    StudyReport { config: *config, methods, head_to_head }
}

/// Run the study; replicate-level parallelism when the `parallel` feature is
/// enabled.
#[cfg(feature = "parallel")]
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    use rayon::prelude::*;
    config.validate()?;
    let outcomes: Vec<ReplicateOutcome> = (0..config.replicates)
        .into_par_iter()
        .map(|i| run_replicate(config, i))
        .collect();
    Ok(aggregate(config, outcomes))
}

#[cfg(not(feature = "parallel"))]
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    run_study_serial(config)
}

/// Single-threaded study run; bit-identical to [`run_study`].
pub fn run_study_serial(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let outcomes: Vec<ReplicateOutcome> =
        (0..config.replicates).map(|i| run_replicate(config, i)).collect();
    Ok(aggregate(config, outcomes))
}

/// Asymptotic std ratio sqrt(VAR(lambda_ML)) / sqrt(VAR(lambda_moment)) for
/// each p2 in the grid; the common 1/M prefactor cancels.
pub fn std_ratio_curve(
    lambda: f64,
    p1: f64,
    p2_grid: &[f64],
    tail_eps: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(p2_grid.len());
    for &p2 in p2_grid {
        let params = ModelParams::new(lambda, p1, p2)?;
        let fisher = fisher_information(params, tail_eps)?;
        let inv11 = fisher.inverse()?[0][0];
        // m * v(m) is m-independent; evaluate at the smallest legal m.
        let (v, _, _) = moment_asymptotic_variance(params, 2)?;
        let moment_prefactor = 2.0 * v;
        out.push((p2, (inv11 / moment_prefactor).sqrt()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub m: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub table: TableId,
    pub replicates: usize,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl std::fmt::Display for TableReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:?} ({} replicates)", self.table, self.replicates)?;
        write!(f, "{:>6}", "M")?;
        for col in &self.columns {
            write!(f, "  {col:>18}")?;
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:>6}", row.m)?;
            for v in &row.values {
                write!(f, "  {v:>18.4}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Sample sizes shared by the three reference tables.
const TABLE_SAMPLE_SIZES: [usize; 3] = [100, 200, 500];
const TABLE_PARAMS: (f64, f64, f64) = (10.0, 0.4, 0.7);
const FISHER_TAIL_EPS: f64 = 1e-10;

/// Reproduce one of the reference tables: simulated columns next to the
/// closed-form ("app.") columns. Default replicate counts are 100_000 for T1
/// and 5000 for T2/T3; override for quick runs.
pub fn reproduce_tables(
    which: TableId,
    replicates_override: Option<usize>,
    seed: RngSeed,
) -> Result<TableReport> {
    let (lambda, p1, p2) = TABLE_PARAMS;
    let params = ModelParams::new(lambda, p1, p2)?;
    let replicates = replicates_override.unwrap_or(match which {
        TableId::T1 => 100_000,
        TableId::T2 | TableId::T3 => 5000,
    });
    let methods = match which {
        TableId::T1 => MethodSet { moment: true, ..Default::default() },
        TableId::T2 => MethodSet { mle: true, ..Default::default() },
        TableId::T3 => MethodSet { moment: true, mle: true, ..Default::default() },
    };
    let fisher_inv11 = match which {
        TableId::T2 => Some(fisher_information(params, FISHER_TAIL_EPS)?.inverse()?[0][0]),
        _ => None,
    };
    let mut rows = Vec::new();
    for (row_idx, &m) in TABLE_SAMPLE_SIZES.iter().enumerate() {
        let config = StudyConfig {
            params,
            m,
            replicates,
            seed: RngSeed(derive_stream(seed, row_idx as u64)),
            methods,
        };
        let report = run_study(&config)?;
        let values = match which {
            TableId::T1 => {
                let s = report.summary(Method::Moment).unwrap();
                let (e_app, _, _) = moment_asymptotic_expectation(params, m)?;
                let (v_app, _, _) = moment_asymptotic_variance(params, m)?;
                vec![
                    s.mean.map(|t| t.lambda).unwrap_or(f64::NAN),
                    e_app,
                    s.std.map(|t| t.lambda).unwrap_or(f64::NAN),
                    v_app.sqrt(),
                ]
            }
            TableId::T2 => {
                let s = report.summary(Method::Mle).unwrap();
                vec![
                    s.std.map(|t| t.lambda).unwrap_or(f64::NAN),
                    (fisher_inv11.unwrap() / m as f64).sqrt(),
                ]
            }
            TableId::T3 => {
                let mom = report.summary(Method::Moment).unwrap();
                let ml = report.summary(Method::Mle).unwrap();
                let h2h = report.head_to_head.as_ref().unwrap();
                vec![
                    mom.mean.map(|t| t.lambda).unwrap_or(f64::NAN),
                    ml.mean.map(|t| t.lambda).unwrap_or(f64::NAN),
                    mom.std.map(|t| t.lambda).unwrap_or(f64::NAN),
                    ml.std.map(|t| t.lambda).unwrap_or(f64::NAN),
                    100.0 * h2h.ml_better_fraction,
                ]
            }
        };
        rows.push(TableRow { m, values });
    }
    let columns = match which {
        TableId::T1 => vec![
            "E(lambda) sim".into(),
            "E(lambda) app".into(),
            "Std(lambda) sim".into(),
            "Std(lambda) app".into(),
        ],
        TableId::T2 => vec!["Std(lambda*) sim".into(), "Std(lambda*) app".into()],
        TableId::T3 => vec![
            "moment mean".into(),
            "ML mean".into(),
            "moment std".into(),
            "ML std".into(),
            "% ML better".into(),
        ],
    };
    Ok(TableReport { table: which, replicates, columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(replicates: usize, m: usize, methods: MethodSet) -> StudyConfig {
        StudyConfig {
            params: ModelParams::new(10.0, 0.4, 0.7).unwrap(),
            m,
            replicates,
            seed: RngSeed(7),
            methods,
        }
    }

    #[test]
    fn serial_and_parallel_reports_are_identical() {
        let cfg = config(64, 50, MethodSet::all());
        let a = run_study(&cfg).unwrap();
        let b = run_study_serial(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_replicate_has_zero_std() {
        let cfg = config(1, 100, MethodSet { moment: true, ..Default::default() });
        let report = run_study(&cfg).unwrap();
        let s = report.summary(Method::Moment).unwrap();
        assert_eq!(s.successes + s.failures.values().sum::<usize>(), 1);
        if s.successes == 1 {
            assert_eq!(s.std.unwrap().lambda, 0.0);
        }
    }

    #[test]
    fn failure_counts_balance_replicates() {
        // Tiny samples at extreme rates produce plenty of estimator failures.
        let cfg = StudyConfig {
            params: ModelParams::new(0.5, 0.9, 0.9).unwrap(),
            m: 3,
            replicates: 200,
            seed: RngSeed(1),
            methods: MethodSet::all(),
        };
        let report = run_study(&cfg).unwrap();
        for s in &report.methods {
            assert_eq!(s.successes + s.failures.values().sum::<usize>(), 200);
        }
        let h2h = report.head_to_head.unwrap();
        assert!(h2h.both_succeeded <= 200);
    }

    #[test]
    fn head_to_head_fraction_in_range() {
        let cfg = config(100, 100, MethodSet { moment: true, mle: true, ..Default::default() });
        let report = run_study(&cfg).unwrap();
        let h2h = report.head_to_head.unwrap();
        assert!(h2h.ml_better_fraction >= 0.0 && h2h.ml_better_fraction <= 1.0);
    }

    #[test]
    fn ratio_curve_anchor_and_symmetry() {
        let curve = std_ratio_curve(10.0, 0.7, &[0.4], 1e-8).unwrap();
        assert!((curve[0].1 - 0.5605).abs() < 0.002, "{}", curve[0].1);
        let swapped = std_ratio_curve(10.0, 0.4, &[0.7], 1e-8).unwrap();
        assert!((curve[0].1 - swapped[0].1).abs() < 1e-6);
    }

    #[test]
    fn table_one_closed_form_column_is_replicate_independent() {
        let a = reproduce_tables(TableId::T1, Some(5), RngSeed(0)).unwrap();
        let b = reproduce_tables(TableId::T1, Some(17), RngSeed(3)).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.values[1], rb.values[1]);
            assert_eq!(ra.values[3], rb.values[3]);
        }
        assert!((a.rows[0].values[1] - 10.46).abs() < 0.005);
        assert!((a.rows[2].values[3] - 0.97).abs() < 0.005);
    }

    #[test]
    fn table_three_smoke_structure() {
        let t = reproduce_tables(TableId::T3, Some(8), RngSeed(5)).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.columns.len(), 5);
        let rendered = format!("{t}");
        assert!(rendered.contains("% ML better"));
    }
}
