//! Byte-stable CSV and JSON renderings of simulation results.
//!
//! Floating-point values are rounded to 9 significant digits and printed in
//! their shortest form; every row, the header included, ends with a newline.

use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::{BroadcastStats, SweepTable};
use crate::error::SimError;
use crate::metrics::{RunSummary, SlotRecord, TxLog};
use crate::theory::FirstPassagePmf;

/// `x` rounded to 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    // Avoid "-0".
    format!("{}", rounded + 0.0)
}

pub fn slots_csv(records: &[SlotRecord]) -> String {
    let mut out = String::from("slot,network_error_m,p95_error_m,undetected,misdetected,neighbors,tx_attempted,tx_sent,tx_collided\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.slot,
            fmt_num(r.network_error),
            fmt_num(r.p95_error()),
            r.undetected,
            r.misdetected,
            r.neighbors,
            r.tx_attempted,
            r.tx_sent,
            r.tx_collided
        );
    }
    out
}

/// Gaps between consecutive transmission decisions, one row per gap.
pub fn intertx_csv(log: &TxLog, slot_dt: f64) -> String {
    let mut out = String::from("vehicle,intertx_s\n");
    for (id, v) in &log.vehicles {
        for w in v.decisions.windows(2) {
            let _ = writeln!(out, "{id},{}", fmt_num((w[1] - w[0]) as f64 * slot_dt));
        }
    }
    out
}

/// Reads the gaps written by [`intertx_csv`] back as whole slots.
pub fn parse_intertx_csv(text: &str, slot_dt: f64) -> Result<Vec<u64>, SimError> {
    let mut gaps = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if n == 0 || line.is_empty() {
            continue;
        }
        let value = line
            .split(',')
            .nth(1)
            .ok_or_else(|| SimError::parse(n + 1, "expected `vehicle,intertx_s`"))?;
        let seconds: f64 = value
            .trim()
            .parse()
            .map_err(|_| SimError::parse(n + 1, format!("not a number: {value:?}")))?;
        if !(seconds >= 0.0) {
            return Err(SimError::parse(n + 1, "negative inter-transmission time"));
        }
        gaps.push((seconds / slot_dt).round() as u64);
    }
    Ok(gaps)
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    #[serde(flatten)]
    summary: &'a RunSummary,
    broadcast_count: u64,
    broadcast_speed_mps: f64,
    broadcast_cov_diag: Vec<f64>,
}

/// Run summary plus the mean state of broadcast estimates, which seeds the
/// analytical model.
pub fn summary_json(summary: &RunSummary, broadcast: &BroadcastStats) -> String {
    let doc = SummaryDocument {
        summary,
        broadcast_count: broadcast.count,
        broadcast_speed_mps: broadcast.mean_speed,
        broadcast_cov_diag: broadcast.mean_cov.diagonal().iter().copied().collect(),
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("policy,parameter,eff_intertx_s,mean_error_m,p95_error_m,detection_error,seeds\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.policy,
            fmt_num(r.parameter),
            fmt_num(r.eff_intertx_s),
            fmt_num(r.mean_error_m),
            fmt_num(r.p95_error_m),
            fmt_num(r.detection_error),
            r.seeds
        );
    }
    out
}

/// Per-policy arg-min rows and every averaged row, worst-5% column included.
pub fn sweep_summary_json(table: &SweepTable) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        argmin: &'a std::collections::BTreeMap<String, crate::engine::SweepRow>,
        rows: &'a [crate::engine::SweepRow],
    }
    serde_json::to_string_pretty(&Doc {
        argmin: &table.argmin,
        rows: &table.rows,
    })
    .expect("sweep serializes")
        + "\n"
}

/// First-passage probabilities per threshold, up to the last step carrying mass.
pub fn pmf_csv(tables: &[(f64, FirstPassagePmf)]) -> String {
    let mut out = String::from("e_thr_m,step,p_tx\n");
    for (e, pmf) in tables {
        let last = pmf.p.iter().rposition(|&v| v > 0.0).map_or(1, |k| k + 1);
        for (k, v) in pmf.p.iter().take(last).enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt_num(*e), k + 1, fmt_num(*v));
        }
    }
    out
}

pub fn qq_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("theoretical_s,empirical_s\n");
    for (t, e) in points {
        let _ = writeln!(out, "{},{}", fmt_num(*t), fmt_num(*e));
    }
    out
}
