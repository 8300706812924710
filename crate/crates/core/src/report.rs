//! Aggregation and file emission for experiment logs: per-trial and global
//! Pareto fronts, paired significance tests between strategies, the
//! scalarized headline metric, and the trials.csv / summary.json /
//! fronts.csv wire formats.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{TrialLog, TrialRecord};
use crate::pareto::pareto_front;
use crate::stats::{wilcoxon_signed_rank, Alternative};

/// A point on some Pareto front, tagged with its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub strategy: String,
    pub trial: usize,
    pub iteration: usize,
    pub utility: f64,
    pub der: f64,
}

/// Paired signed-rank comparison of fair_ehvi against one baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_greater: f64,
    pub p_two_sided: f64,
    /// All per-trial differences were zero; p reported as 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub baseline: String,
    pub best_der: TestReport,
    pub best_utility: TestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub trials: usize,
    /// Points this strategy holds on the cross-strategy front.
    pub global_front_points: usize,
    pub front_utility_mean: f64,
    pub front_utility_std: f64,
    pub front_der_mean: f64,
    pub front_der_std: f64,
    pub best_utility_mean: f64,
    pub best_utility_std: f64,
    pub best_der_mean: f64,
    pub best_der_std: f64,
    /// Mean of min-max-normalized utility and der, best per trial; this
    /// artifact's scalarization convention, not a standard quantity.
    pub scalarized_mean: f64,
    pub scalarized_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_labels: usize,
    pub n_groups: usize,
    pub n_trials: usize,
    pub n_iterations: usize,
    pub degenerate_der_records: usize,
    pub strategies: Vec<StrategySummary>,
    pub comparisons: Vec<MethodComparison>,
    pub global_front: Vec<FrontPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Summary,
    /// Front of each (strategy, trial) pair, for plotting and fronts.csv.
    pub per_trial_fronts: Vec<FrontPoint>,
}

/// The strategy whose superiority the comparisons test.
pub const FOCAL_STRATEGY: &str = "fair_ehvi";

pub fn build_report(log: &TrialLog) -> Result<Report> {
    if log.records.is_empty() {
        return Err(Error::argument("cannot report on an empty log"));
    }
    let strategies = log.strategies();
    let n_trials = log.n_trials();

    // Global front over every record of every strategy.
    let all_points: Vec<(f64, f64)> = log.records.iter().map(|r| (r.utility, r.der)).collect();
    let global_front: Vec<FrontPoint> = pareto_front(&all_points)
        .into_iter()
        .map(|i| front_point(&log.records[i]))
        .collect();

    // Scalarization bounds over the whole log.
    let (u_lo, u_hi) = min_max(log.records.iter().map(|r| r.utility));
    let (d_lo, d_hi) = min_max(log.records.iter().map(|r| r.der));
    let normalize = |v: f64, lo: f64, hi: f64| {
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    };
    let scalarize =
        |r: &TrialRecord| (normalize(r.utility, u_lo, u_hi) + normalize(r.der, d_lo, d_hi)) / 2.0;

    let mut per_trial_fronts = Vec::new();
    let mut summaries = Vec::new();
    for name in &strategies {
        let mut front_utilities = Vec::new();
        let mut front_ders = Vec::new();
        let mut best_utilities = Vec::new();
        let mut best_ders = Vec::new();
        let mut best_scalarized = Vec::new();
        let mut trials_seen = 0usize;

        for trial in 0..n_trials {
            let mut trial_records: Vec<&TrialRecord> = log
                .records
                .iter()
                .filter(|r| &r.strategy == name && r.trial == trial)
                .collect();
            if trial_records.is_empty() {
                continue;
            }
            // Iteration order, so aggregation ignores record order in the log.
            trial_records.sort_by_key(|r| r.iteration);
            trials_seen += 1;
            let points: Vec<(f64, f64)> =
                trial_records.iter().map(|r| (r.utility, r.der)).collect();
            for i in pareto_front(&points) {
                let r = trial_records[i];
                per_trial_fronts.push(front_point(r));
                front_utilities.push(r.utility);
                front_ders.push(r.der);
            }
            best_utilities.push(fold_max(trial_records.iter().map(|r| r.utility)));
            best_ders.push(fold_max(trial_records.iter().map(|r| r.der)));
            best_scalarized.push(fold_max(trial_records.iter().map(|r| scalarize(r))));
        }

        let (fu_mean, fu_std) = mean_std(&front_utilities);
        let (fd_mean, fd_std) = mean_std(&front_ders);
        let (bu_mean, bu_std) = mean_std(&best_utilities);
        let (bd_mean, bd_std) = mean_std(&best_ders);
        let (sc_mean, sc_std) = mean_std(&best_scalarized);
        summaries.push(StrategySummary {
            strategy: name.clone(),
            trials: trials_seen,
            global_front_points: global_front.iter().filter(|p| &p.strategy == name).count(),
            front_utility_mean: fu_mean,
            front_utility_std: fu_std,
            front_der_mean: fd_mean,
            front_der_std: fd_std,
            best_utility_mean: bu_mean,
            best_utility_std: bu_std,
            best_der_mean: bd_mean,
            best_der_std: bd_std,
            scalarized_mean: sc_mean,
            scalarized_std: sc_std,
        });
    }

    let comparisons = if strategies.iter().any(|s| s == FOCAL_STRATEGY) {
        build_comparisons(log, &strategies, n_trials)?
    } else {
        Vec::new()
    };

    Ok(Report {
        summary: Summary {
            n_labels: log.n_labels,
            n_groups: log.n_groups,
            n_trials,
            n_iterations: log.n_iterations(),
            degenerate_der_records: log.records.iter().filter(|r| r.der_degenerate).count(),
            strategies: summaries,
            comparisons,
            global_front,
        },
        per_trial_fronts,
    })
}

fn front_point(r: &TrialRecord) -> FrontPoint {
    FrontPoint {
        strategy: r.strategy.clone(),
        trial: r.trial,
        iteration: r.iteration,
        utility: r.utility,
        der: r.der,
    }
}

fn best_per_trial(log: &TrialLog, strategy: &str, n_trials: usize, pick_der: bool) -> Vec<f64> {
    (0..n_trials)
        .map(|trial| {
            fold_max(
                log.records
                    .iter()
                    .filter(|r| r.strategy == strategy && r.trial == trial)
                    .map(|r| if pick_der { r.der } else { r.utility }),
            )
        })
        .collect()
}

fn build_comparisons(
    log: &TrialLog,
    strategies: &[String],
    n_trials: usize,
) -> Result<Vec<MethodComparison>> {
    let focal_der = best_per_trial(log, FOCAL_STRATEGY, n_trials, true);
    let focal_utility = best_per_trial(log, FOCAL_STRATEGY, n_trials, false);
    let mut out = Vec::new();
    for name in strategies {
        if name == FOCAL_STRATEGY {
            continue;
        }
        let base_der = best_per_trial(log, name, n_trials, true);
        let base_utility = best_per_trial(log, name, n_trials, false);
        out.push(MethodComparison {
            baseline: name.clone(),
            best_der: paired_test(&focal_der, &base_der)?,
            best_utility: paired_test(&focal_utility, &base_utility)?,
        });
    }
    Ok(out)
}

fn paired_test(focal: &[f64], baseline: &[f64]) -> Result<TestReport> {
    let diffs: Vec<f64> = focal.iter().zip(baseline).map(|(a, b)| a - b).collect();
    match wilcoxon_signed_rank(&diffs, Alternative::Greater) {
        Ok(greater) => {
            let two = wilcoxon_signed_rank(&diffs, Alternative::TwoSided)?;
            Ok(TestReport {
                statistic: greater.statistic,
                p_greater: greater.p_value,
                p_two_sided: two.p_value,
                degenerate: false,
            })
        }
        Err(Error::DegenerateSample) => Ok(TestReport {
            statistic: 0.0,
            p_greater: 1.0,
            p_two_sided: 1.0,
            degenerate: true,
        }),
        Err(e) => Err(e),
    }
}

fn fold_max<I: Iterator<Item = f64>>(values: I) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

fn min_max<I: Iterator<Item = f64>>(values: I) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Mean and population standard deviation; (0, 0) for an empty slice.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// trials.csv: one row per record, floats in shortest round-trip form so
/// identical runs produce identical bytes.
pub fn trials_csv(log: &TrialLog) -> String {
    let mut out = String::from("strategy,trial,iteration");
    for k in 0..log.n_labels {
        out.push_str(&format!(",alpha_{k}"));
    }
    out.push_str(",utility,der");
    for g in 0..log.n_groups {
        out.push_str(&format!(",group{g}_util"));
    }
    out.push('\n');
    for r in &log.records {
        out.push_str(&format!("{},{},{}", r.strategy, r.trial, r.iteration));
        for a in &r.alpha {
            out.push_str(&format!(",{a}"));
        }
        out.push_str(&format!(",{},{}", r.utility, r.der));
        for g in &r.group_utilities {
            out.push_str(&format!(",{g}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_trials_csv(log: &TrialLog, path: &Path) -> Result<()> {
    fs::write(path, trials_csv(log))?;
    Ok(())
}

/// Reads a trials.csv back into a log. The per-record degenerate flag is not
/// part of the wire format and comes back unset.
pub fn read_trials_csv(path: &Path) -> Result<TrialLog> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::argument("empty trials.csv"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let n_labels = columns
        .iter()
        .filter(|c| c.starts_with("alpha_"))
        .count();
    let n_groups = columns
        .iter()
        .filter(|c| c.starts_with("group") && c.ends_with("_util"))
        .count();
    if n_labels == 0 || n_groups == 0 || columns.len() != 5 + n_labels + n_groups {
        return Err(Error::argument(format!("malformed trials.csv header `{header}`")));
    }

    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::argument(format!(
                "trials.csv line {}: expected {} fields, got {}",
                i + 2,
                columns.len(),
                fields.len()
            )));
        }
        let bad = |what: &str| Error::argument(format!("trials.csv line {}: bad {what}", i + 2));
        let mut cursor = fields.iter();
        let strategy = cursor.next().unwrap().to_string();
        let trial: usize = cursor.next().unwrap().parse().map_err(|_| bad("trial"))?;
        let iteration: usize = cursor
            .next()
            .unwrap()
            .parse()
            .map_err(|_| bad("iteration"))?;
        let mut alpha = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            alpha.push(cursor.next().unwrap().parse().map_err(|_| bad("alpha"))?);
        }
        let utility: f64 = cursor.next().unwrap().parse().map_err(|_| bad("utility"))?;
        let der: f64 = cursor.next().unwrap().parse().map_err(|_| bad("der"))?;
        let mut group_utilities = Vec::with_capacity(n_groups);
        for _ in 0..n_groups {
            group_utilities.push(cursor.next().unwrap().parse().map_err(|_| bad("group utility"))?);
        }
        records.push(TrialRecord {
            strategy,
            trial,
            iteration,
            alpha,
            utility,
            der,
            group_utilities,
            der_degenerate: false,
        });
    }
    Ok(TrialLog {
        n_labels,
        n_groups,
        records,
    })
}

pub fn write_summary_json(summary: &Summary, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Numerical(format!("summary serialization failed: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// fronts.csv: every per-trial front point plus whether it sits on the
/// global front.
pub fn fronts_csv(report: &Report) -> String {
    let mut out = String::from("strategy,trial,iteration,utility,der,on_global_front\n");
    for p in &report.per_trial_fronts {
        let global = report.summary.global_front.iter().any(|g| {
            g.strategy == p.strategy && g.trial == p.trial && g.iteration == p.iteration
        });
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.strategy,
            p.trial,
            p.iteration,
            p.utility,
            p.der,
            u8::from(global)
        ));
    }
    out
}

pub fn write_fronts_csv(report: &Report, path: &Path) -> Result<()> {
    fs::write(path, fronts_csv(report))?;
    Ok(())
}
