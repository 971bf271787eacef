//! Confusion-count bookkeeping and the reported ratios.
//!
//! Two families of numbers are derived from a run. Classifier quality comes
//! from test-split confusion counts: misdetection rate `n_MD / n_busy` and
//! false-alarm rate `n_FA / n_idle` (for the adversary the positive class is
//! an ACK instead of a busy channel). Link performance comes from the
//! evaluation trace: normalized throughput `t` (successes over true idle
//! slots), success ratio `s` (successes over transmissions), and the
//! all-transmission ratio `a` (transmissions over slots).
//!
//! Ratios with a zero denominator are reported as explicit `undefined`
//! markers (`None` in memory, `null` in JSON), never silently as zero.

use crate::simulation::SlotRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("throughput ratios of an empty trace are undefined")]
    EmptyTrace,
}

/// Binary confusion counts. For the transmitter the positive class is a busy
/// channel; for the adversary it is an ACK outcome (`n_busy` then counts ACK
/// slots and `n_idle` no-ACK slots).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// Positives classified negative (busy -> idle, or ACK -> no-ACK).
    pub n_md: u64,
    /// Negatives classified positive (idle -> busy, or no-ACK -> ACK).
    pub n_fa: u64,
    /// True positives in the sample set.
    pub n_busy: u64,
    /// True negatives in the sample set.
    pub n_idle: u64,
}

impl ConfusionCounts {
    /// Tally `(truth, prediction)` pairs.
    pub fn from_predictions<I: IntoIterator<Item = (bool, bool)>>(pairs: I) -> Self {
        let mut counts = ConfusionCounts::default();
        for (truth, predicted) in pairs {
            if truth {
                counts.n_busy += 1;
                if !predicted {
                    counts.n_md += 1;
                }
            } else {
                counts.n_idle += 1;
                if predicted {
                    counts.n_fa += 1;
                }
            }
        }
        counts
    }
}

/// `(e_MD, e_FA)`; a rate is `None` when its denominator is zero.
pub fn error_rates(c: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let e_md = (c.n_busy > 0).then(|| c.n_md as f64 / c.n_busy as f64);
    let e_fa = (c.n_idle > 0).then(|| c.n_fa as f64 / c.n_idle as f64);
    (e_md, e_fa)
}

/// ACK-domain error rates; the arithmetic is identical with ACK as the
/// positive class.
pub fn adversary_error_rates(c: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    error_rates(c)
}

/// One classifier's test-split assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub decision_threshold: f64,
    pub counts: ConfusionCounts,
    pub e_md: Option<f64>,
    pub e_fa: Option<f64>,
}

impl ErrorReport {
    pub fn new(counts: ConfusionCounts, decision_threshold: f64) -> Self {
        let (e_md, e_fa) = error_rates(&counts);
        Self {
            decision_threshold,
            counts,
            e_md,
            e_fa,
        }
    }
}

/// Link-level ratios over an evaluation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRatios {
    /// Normalized throughput: successes / idle slots.
    pub t: Option<f64>,
    /// Success ratio: successes / transmissions.
    pub s: Option<f64>,
    /// All-transmission ratio: transmissions / slots.
    pub a: f64,
    pub successes: u64,
    pub transmissions: u64,
    pub idle_slots: u64,
    pub total_slots: u64,
}

/// Count successes, transmissions, and idle slots in a trace.
pub fn throughput_ratios(records: &[SlotRecord]) -> Result<ThroughputRatios, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let transmissions = records.iter().filter(|r| r.t_transmit).count() as u64;
    let idle_slots = records.iter().filter(|r| !r.b_busy).count() as u64;
    let total_slots = records.len() as u64;
    Ok(ThroughputRatios {
        t: (idle_slots > 0).then(|| successes as f64 / idle_slots as f64),
        s: (transmissions > 0).then(|| successes as f64 / transmissions as f64),
        a: transmissions as f64 / total_slots as f64,
        successes,
        transmissions,
        idle_slots,
        total_slots,
    })
}

/// Full per-run report: both classifiers plus the evaluation-run ratios and
/// the adversary's energy total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub transmitter: ErrorReport,
    pub adversary: ErrorReport,
    pub throughput: ThroughputRatios,
    /// Power-times-slot-fraction units summed over attacked slots.
    pub adversary_energy: f64,
}

impl MetricsReport {
    pub fn new(
        transmitter: ErrorReport,
        adversary: ErrorReport,
        throughput: ThroughputRatios,
        adversary_energy: f64,
    ) -> Self {
        Self {
            transmitter,
            adversary,
            throughput,
            adversary_energy,
        }
    }
}

/// Two-row with/without-attack comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: ThroughputRatios,
    pub attacked: ThroughputRatios,
    pub baseline_energy: f64,
    pub attacked_energy: f64,
    /// `baseline / attacked` per ratio; `None` when either side is undefined
    /// or the attacked value is zero.
    pub t_reduction: Option<f64>,
    pub s_reduction: Option<f64>,
    pub a_reduction: Option<f64>,
}

fn reduction(baseline: Option<f64>, attacked: Option<f64>) -> Option<f64> {
    match (baseline, attacked) {
        (Some(b), Some(a)) if a > 0.0 => Some(b / a),
        _ => None,
    }
}

/// Summarize an attacked run against its baseline.
pub fn compare(baseline: &MetricsReport, attacked: &MetricsReport) -> ComparisonTable {
    ComparisonTable {
        baseline: baseline.throughput.clone(),
        attacked: attacked.throughput.clone(),
        baseline_energy: baseline.adversary_energy,
        attacked_energy: attacked.adversary_energy,
        t_reduction: reduction(baseline.throughput.t, attacked.throughput.t),
        s_reduction: reduction(baseline.throughput.s, attacked.throughput.s),
        a_reduction: reduction(Some(baseline.throughput.a), Some(attacked.throughput.a)),
    }
}

/// Render a fraction as a percentage with two decimals, rounding half away
/// from zero (so `3.125%` prints as `3.13%`).
pub fn percent(x: f64) -> String {
    format!("{:.2}%", (x * 10_000.0).round() / 100.0)
}

/// As [`percent`], with an explicit marker for undefined ratios.
pub fn percent_or_undefined(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), percent)
}

fn factor(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |f| format!("{f:.2}x"))
}

/// Human-readable per-run table.
pub fn render_report(label: &str, report: &MetricsReport) -> String {
    let tp = &report.throughput;
    let mut out = String::new();
    out.push_str(&format!(
        "{label}: t={} s={} a={}  (successes {}, transmissions {}, idle {}, slots {})\n",
        percent_or_undefined(tp.t),
        percent_or_undefined(tp.s),
        percent(tp.a),
        tp.successes,
        tp.transmissions,
        tp.idle_slots,
        tp.total_slots,
    ));
    out.push_str(&format!(
        "  transmitter: e_MD={} e_FA={} (threshold {:.4})\n",
        percent_or_undefined(report.transmitter.e_md),
        percent_or_undefined(report.transmitter.e_fa),
        report.transmitter.decision_threshold,
    ));
    out.push_str(&format!(
        "  adversary:   e_MD={} e_FA={} (threshold {:.4})\n",
        percent_or_undefined(report.adversary.e_md),
        percent_or_undefined(report.adversary.e_fa),
        report.adversary.decision_threshold,
    ));
    out.push_str(&format!(
        "  adversary energy: {:.1}\n",
        report.adversary_energy
    ));
    out
}

/// Human-readable with/without-attack comparison table.
pub fn render_comparison(table: &ComparisonTable) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}{:>14}\n",
        "", "t", "s", "a", "energy"
    ));
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}{:>14.1}\n",
        "no attack",
        percent_or_undefined(table.baseline.t),
        percent_or_undefined(table.baseline.s),
        percent(table.baseline.a),
        table.baseline_energy,
    ));
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}{:>14.1}\n",
        "with attack",
        percent_or_undefined(table.attacked.t),
        percent_or_undefined(table.attacked.s),
        percent(table.attacked.a),
        table.attacked_energy,
    ));
    out.push_str(&format!(
        "{:<14}{:>12}{:>12}{:>12}\n",
        "reduction",
        factor(table.t_reduction),
        factor(table.s_reduction),
        factor(table.a_reduction),
    ));
    out
}
