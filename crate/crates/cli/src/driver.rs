//! The run driver: per-replication training, per-mode evaluation, trace and
//! report emission, and cross-replication aggregation.
//!
//! Replications are independent (seed `base_seed + i`) and are dispatched to
//! a worker pool; each worker owns its full simulation state. All trained
//! models are shared across the requested modes within one replication, so a
//! `baseline,poison` run is a paired replay by construction.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use coglink::metrics::{self, percent, percent_or_undefined, MetricsReport};
use coglink::neural::gradcheck::{self, GradCheckReport};
use coglink::simulation::{
    build_report, energy_ledger, read_trace_file, run_eval, train_agents, write_trace_file,
};
use coglink::AttackMode;
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

/// One mode x replication outcome.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub mode: AttackMode,
    pub replication: usize,
    pub seed: u64,
    pub report: MetricsReport,
    pub trace_path: PathBuf,
    pub report_path: PathBuf,
}

/// Mean and sample standard deviation of the ratios across replications.
/// Undefined ratios are excluded from the moments and counted separately.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateStats {
    pub mode: String,
    pub replications: usize,
    pub mean_t: Option<f64>,
    pub std_t: Option<f64>,
    pub undefined_t: usize,
    pub mean_s: Option<f64>,
    pub std_s: Option<f64>,
    pub undefined_s: usize,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_energy: f64,
    pub mean_e_md: Option<f64>,
    pub mean_e_fa: Option<f64>,
    pub mean_adv_e_md: Option<f64>,
    pub mean_adv_e_fa: Option<f64>,
}

#[derive(Serialize)]
struct RunReportFile<'a> {
    mode: String,
    replication: usize,
    seed: u64,
    config: &'a str,
    metrics: &'a MetricsReport,
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    config: &'a str,
    modes: &'a [AggregateStats],
}

pub struct RunSummary {
    pub runs: Vec<RunArtifacts>,
    pub aggregates: Vec<AggregateStats>,
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    mean_std(&defined).0
}

fn aggregate(mode: AttackMode, reports: &[&MetricsReport]) -> AggregateStats {
    let t: Vec<f64> = reports.iter().filter_map(|r| r.throughput.t).collect();
    let s: Vec<f64> = reports.iter().filter_map(|r| r.throughput.s).collect();
    let a: Vec<f64> = reports.iter().map(|r| r.throughput.a).collect();
    let energy: Vec<f64> = reports.iter().map(|r| r.adversary_energy).collect();
    let (mean_t, std_t) = mean_std(&t);
    let (mean_s, std_s) = mean_std(&s);
    let (mean_a, std_a) = mean_std(&a);
    AggregateStats {
        mode: mode.to_string(),
        replications: reports.len(),
        mean_t,
        std_t,
        undefined_t: reports.len() - t.len(),
        mean_s,
        std_s,
        undefined_s: reports.len() - s.len(),
        mean_a: mean_a.unwrap_or(0.0),
        std_a: std_a.unwrap_or(0.0),
        mean_energy: energy.iter().sum::<f64>() / reports.len().max(1) as f64,
        mean_e_md: mean_defined(reports.iter().map(|r| r.transmitter.e_md)),
        mean_e_fa: mean_defined(reports.iter().map(|r| r.transmitter.e_fa)),
        mean_adv_e_md: mean_defined(reports.iter().map(|r| r.adversary.e_md)),
        mean_adv_e_fa: mean_defined(reports.iter().map(|r| r.adversary.e_fa)),
    }
}

fn render_aggregate(stats: &AggregateStats) -> String {
    let pm = |mean: Option<f64>, std: Option<f64>| match (mean, std) {
        (Some(m), Some(sd)) => format!("{} +/- {}", percent(m), percent(sd)),
        _ => "undefined".to_string(),
    };
    format!(
        "{:<9} t={}  s={}  a={}  energy={:.1}  (T errors md={} fa={}, A errors md={} fa={})",
        stats.mode,
        pm(stats.mean_t, stats.std_t),
        pm(stats.mean_s, stats.std_s),
        pm(Some(stats.mean_a), Some(stats.std_a)),
        stats.mean_energy,
        percent_or_undefined(stats.mean_e_md),
        percent_or_undefined(stats.mean_e_fa),
        percent_or_undefined(stats.mean_adv_e_md),
        percent_or_undefined(stats.mean_adv_e_fa),
    )
}

fn render_mean_comparison(baseline: &AggregateStats, attacked: &AggregateStats) -> String {
    let factor = |b: Option<f64>, a: Option<f64>| match (b, a) {
        (Some(b), Some(a)) if a > 0.0 => format!("{:.2}x", b / a),
        (Some(b), Some(_)) if b > 0.0 => "inf".to_string(),
        _ => "n/a".to_string(),
    };
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}{:>14}\n",
        "", "t", "s", "a", "energy"
    ));
    for (label, st) in [("no attack", baseline), ("with attack", attacked)] {
        out.push_str(&format!(
            "{:<14}{:>12}{:>12}{:>12}{:>14.1}\n",
            label,
            percent_or_undefined(st.mean_t),
            percent_or_undefined(st.mean_s),
            percent(st.mean_a),
            st.mean_energy,
        ));
    }
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}\n",
        "reduction",
        factor(baseline.mean_t, attacked.mean_t),
        factor(baseline.mean_s, attacked.mean_s),
        factor(Some(baseline.mean_a), Some(attacked.mean_a)),
    ));
    out
}

/// Execute the full run: for every replication train both agents once, then
/// evaluate each requested mode, writing one trace CSV and one report JSON
/// per mode x replication plus an aggregate report.
pub fn cmd_run(cfg: &RunConfig, verbosity: Verbosity) -> Result<RunSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    let config_echo = crate::config::render_config(cfg);

    let per_replication: Vec<Vec<RunArtifacts>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| -> Result<Vec<RunArtifacts>> {
            let mut scenario = cfg.scenario.clone();
            scenario.seed = cfg.base_seed + rep as u64;
            let trained =
                train_agents(&scenario).with_context(|| format!("training replication {rep}"))?;
            let mut artifacts = Vec::with_capacity(cfg.modes.len());
            for &mode in &cfg.modes {
                let records = run_eval(&scenario, &trained, mode)
                    .with_context(|| format!("evaluating {mode} replication {rep}"))?;
                let report = build_report(&trained, &records)?;
                let trace_path = cfg.output_dir.join(format!("trace_{mode}_rep{rep:03}.csv"));
                write_trace_file(&trace_path, &records)
                    .with_context(|| format!("writing {}", trace_path.display()))?;
                let report_path = cfg
                    .output_dir
                    .join(format!("report_{mode}_rep{rep:03}.json"));
                let file = RunReportFile {
                    mode: mode.to_string(),
                    replication: rep,
                    seed: scenario.seed,
                    config: &config_echo,
                    metrics: &report,
                };
                std::fs::write(&report_path, serde_json::to_string_pretty(&file)?)
                    .with_context(|| format!("writing {}", report_path.display()))?;
                artifacts.push(RunArtifacts {
                    mode,
                    replication: rep,
                    seed: scenario.seed,
                    report,
                    trace_path,
                    report_path,
                });
            }
            Ok(artifacts)
        })
        .collect::<Result<_>>()?;

    let runs: Vec<RunArtifacts> = per_replication.into_iter().flatten().collect();

    let aggregates: Vec<AggregateStats> = cfg
        .modes
        .iter()
        .map(|&mode| {
            let reports: Vec<&MetricsReport> = runs
                .iter()
                .filter(|r| r.mode == mode)
                .map(|r| &r.report)
                .collect();
            aggregate(mode, &reports)
        })
        .collect();

    let aggregate_path = cfg.output_dir.join("aggregate.json");
    let file = AggregateFile {
        config: &config_echo,
        modes: &aggregates,
    };
    std::fs::write(&aggregate_path, serde_json::to_string_pretty(&file)?)
        .with_context(|| format!("writing {}", aggregate_path.display()))?;

    if verbosity != Verbosity::Quiet {
        if verbosity == Verbosity::Verbose {
            for run in &runs {
                println!(
                    "replication {} seed {} mode {}:",
                    run.replication, run.seed, run.mode
                );
                print!(
                    "{}",
                    metrics::render_report(&run.mode.to_string(), &run.report)
                );
            }
        }
        println!("aggregates over {} replication(s):", cfg.replications);
        for stats in &aggregates {
            println!("  {}", render_aggregate(stats));
        }
        // Table-style with/without-attack comparison whenever a baseline and
        // at least one attack mode were both requested.
        if let Some(base_idx) = cfg.modes.iter().position(|&m| m == AttackMode::None) {
            for (i, &mode) in cfg.modes.iter().enumerate() {
                if mode == AttackMode::None {
                    continue;
                }
                println!("\nbaseline vs {mode}:");
                if cfg.replications == 1 {
                    let base = &runs
                        .iter()
                        .find(|r| r.mode == AttackMode::None)
                        .unwrap()
                        .report;
                    let attacked = &runs.iter().find(|r| r.mode == mode).unwrap().report;
                    print!(
                        "{}",
                        metrics::render_comparison(&metrics::compare(base, attacked))
                    );
                } else {
                    print!(
                        "{}",
                        render_mean_comparison(&aggregates[base_idx], &aggregates[i])
                    );
                }
            }
        }
    }

    Ok(RunSummary { runs, aggregates })
}

/// Run the neural property self-test. Returns the report; `perturb` is the
/// negative-control hook that corrupts one gradient component.
pub fn cmd_gradcheck(pairs: usize, seed: u64, perturb: bool, quiet: bool) -> GradCheckReport {
    let report = gradcheck::run_suite(pairs, seed, perturb);
    if !quiet {
        println!(
            "gradient check: {} model/batch pairs, {} components",
            report.pairs, report.components
        );
        println!(
            "  max relative error:        {:.3e} (tolerance {:.0e})",
            report.max_rel_error,
            gradcheck::GRAD_TOL
        );
        println!(
            "  softmax normalization dev: {:.3e} (tolerance {:.0e})",
            report.softmax_max_deviation,
            gradcheck::SOFTMAX_TOL
        );
        println!(
            "  uniform-CE deviation:      {:.3e} (tolerance {:.0e})",
            report.uniform_ce_deviation,
            gradcheck::UNIFORM_CE_TOL
        );
        println!("  result: {}", if report.pass() { "PASS" } else { "FAIL" });
    }
    report
}

/// Re-render the link metrics of a saved trace CSV.
pub fn cmd_report(trace: &Path, as_json: bool) -> Result<String> {
    let records =
        read_trace_file(trace).with_context(|| format!("reading trace {}", trace.display()))?;
    let ratios = metrics::throughput_ratios(&records)?;
    let energy = energy_ledger(&records);
    if as_json {
        #[derive(Serialize)]
        struct TraceReport<'a> {
            trace: String,
            throughput: &'a coglink::ThroughputRatios,
            adversary_energy: f64,
        }
        Ok(serde_json::to_string_pretty(&TraceReport {
            trace: trace.display().to_string(),
            throughput: &ratios,
            adversary_energy: energy,
        })?)
    } else {
        Ok(format!(
            "{}: t={} s={} a={} energy={:.1}  (successes {}, transmissions {}, idle {}, slots {})",
            trace.display(),
            percent_or_undefined(ratios.t),
            percent_or_undefined(ratios.s),
            percent(ratios.a),
            energy,
            ratios.successes,
            ratios.transmissions,
            ratios.idle_slots,
            ratios.total_slots,
        ))
    }
}
