//! Run logs: `metrics.csv` (one row per method and round), `servers.csv`
//! and the text summary derived from the rows.

use std::fmt::Write as _;
use std::path::Path;

use dqfl_core::fed::RoundMetrics;

use crate::CliError;

pub const METRICS_HEADER: &str = "round,method,accuracy,loss,messages";
pub const SERVERS_HEADER: &str = "round,method,server,accuracy,loss";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub round: u64,
    pub method: String,
    pub accuracy: f64,
    pub loss: f64,
    pub messages: u64,
}

impl MetricsRow {
    pub fn from_round(method: &str, m: &RoundMetrics) -> Self {
        MetricsRow {
            round: m.round,
            method: method.to_string(),
            accuracy: m.accuracy,
            loss: m.loss,
            messages: m.messages_sent,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{}",
            self.round, self.method, self.accuracy, self.loss, self.messages
        )
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn servers_csv(series: &[(String, Vec<RoundMetrics>)]) -> String {
    let mut out = String::from(SERVERS_HEADER);
    out.push('\n');
    for (method, rounds) in series {
        for m in rounds {
            for (s, (a, l)) in m.server_accuracy.iter().zip(&m.server_loss).enumerate() {
                let _ = writeln!(out, "{},{method},{s},{a:.6},{l:.6}", m.round);
            }
        }
    }
    out
}

/// Parses a metrics file; errors name the 1-based line.
pub fn parse_metrics(text: &str, source: &Path) -> Result<Vec<MetricsRow>, CliError> {
    let bad = |line: usize, what: &str| CliError::config(format!("{}:{line}: {what}", source.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => return Err(bad(1, &format!("expected header {METRICS_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(n, &format!("expected 5 fields, found {}", f.len())));
        }
        let round = f[0].trim().parse().map_err(|_| bad(n, "round is not an integer"))?;
        let method = f[1].trim();
        if method.is_empty() {
            return Err(bad(n, "empty method"));
        }
        let accuracy: f64 = f[2].trim().parse().map_err(|_| bad(n, "accuracy is not a number"))?;
        let loss: f64 = f[3].trim().parse().map_err(|_| bad(n, "loss is not a number"))?;
        if !(0.0..=1.0).contains(&accuracy) || !loss.is_finite() || loss < 0.0 {
            return Err(bad(n, "accuracy outside [0, 1] or invalid loss"));
        }
        let messages = f[4].trim().parse().map_err(|_| bad(n, "messages is not an integer"))?;
        rows.push(MetricsRow {
            round,
            method: method.to_string(),
            accuracy,
            loss,
            messages,
        });
    }
    if rows.is_empty() {
        return Err(bad(1, "no data rows"));
    }
    Ok(rows)
}

/// Rows grouped by method in first-appearance order.
pub fn by_method(rows: &[MetricsRow]) -> Vec<(String, Vec<&MetricsRow>)> {
    let mut groups: Vec<(String, Vec<&MetricsRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.method.clone(), vec![r])),
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub rounds: u64,
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub best_accuracy: f64,
    pub best_round: u64,
    pub min_loss: f64,
    pub messages: u64,
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<MethodSummary> {
    by_method(rows)
        .into_iter()
        .map(|(method, g)| {
            let last = g.iter().max_by_key(|r| r.round).expect("non-empty group");
            let best = g
                .iter()
                .fold(g[0], |b, r| if r.accuracy > b.accuracy { r } else { b });
            MethodSummary {
                method,
                rounds: last.round,
                final_accuracy: last.accuracy,
                final_loss: last.loss,
                best_accuracy: best.accuracy,
                best_round: best.round,
                min_loss: g.iter().map(|r| r.loss).fold(f64::INFINITY, f64::min),
                messages: last.messages,
            }
        })
        .collect()
}

pub fn summary_table(rows: &[MetricsRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>6} {:>9} {:>9} {:>9} {:>5} {:>9} {:>10}",
        "method", "rounds", "final_acc", "final_loss", "best_acc", "at", "min_loss", "messages"
    );
    for s in summarize(rows) {
        let _ = writeln!(
            out,
            "{:<16} {:>6} {:>9.4} {:>9.4} {:>9.4} {:>5} {:>9.4} {:>10}",
            s.method, s.rounds, s.final_accuracy, s.final_loss, s.best_accuracy, s.best_round, s.min_loss, s.messages
        );
    }
    out
}
