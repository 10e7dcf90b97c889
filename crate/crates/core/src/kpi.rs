//! The four KPIs (throughput time, FTE, on-time %, area) plus report
//! aggregation and CSV/JSON emission.

use std::io::Write;
use std::path::Path;

use crate::error::ConfigError;
use crate::model::Order;
use serde::{Deserialize, Serialize};

/// Orders completing within the takt count as on time (inclusive).
pub const ON_TIME_LIMIT_S: f64 = 1500.0;

/// Time from order release to its last pallet reaching outbound staging.
/// `None` while the order is incomplete.
pub fn throughput_time(order: &Order) -> Option<f64> {
    order.completion_time.map(|c| c - order.release_time)
}

/// Time-weighted average of simultaneously busy trucks over `window`,
/// given (time, busy-count-delta) transitions in chronological order.
pub fn average_usage(transitions: &[(f64, i32)], window: (f64, f64)) -> f64 {
    let (start, end) = window;
    if end <= start {
        return 0.0;
    }
    let mut busy = 0i64;
    let mut integral = 0.0;
    let mut cursor = start;
    for &(t, delta) in transitions {
        let clipped = t.clamp(start, end);
        if clipped > cursor {
            integral += busy as f64 * (clipped - cursor);
            cursor = clipped;
        }
        busy += delta as i64;
        if t >= end {
            // Later transitions cannot affect the window.
            if t > end {
                break;
            }
        }
    }
    if end > cursor {
        integral += busy as f64 * (end - cursor);
    }
    integral / (end - start)
}

/// FTE rule: average simultaneous usage times two shifts, ceiling-rounded.
pub fn required_fte(average_simultaneous_usage: f64) -> u32 {
    (2.0 * average_simultaneous_usage).ceil().max(0.0) as u32
}

/// Share of orders fulfilled within the takt, in percent.
pub fn on_time_pct(throughputs_s: &[f64]) -> Option<f64> {
    if throughputs_s.is_empty() {
        return None;
    }
    let on_time = throughputs_s.iter().filter(|t| **t <= ON_TIME_LIMIT_S).count();
    Some(100.0 * on_time as f64 / throughputs_s.len() as f64)
}

/// KPI values of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiValues {
    pub throughput_s_mean: Option<f64>,
    pub fte: u32,
    pub on_time_pct: Option<f64>,
    pub area_m2: f64,
}

/// One replication's row in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationKpi {
    pub replication: u32,
    #[serde(flatten)]
    pub kpi: KpiValues,
    pub usage_avg: f64,
    pub completed_orders: u64,
    pub incomplete_orders: u64,
    pub arrivals_hash: String,
}

/// Mean / standard deviation / min / max of one KPI across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn over(values: impl Iterator<Item = f64>) -> Option<Aggregate> {
        let vals: Vec<f64> = values.collect();
        if vals.is_empty() {
            return None;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Aggregate {
            mean,
            sd: var.sqrt(),
            min: vals.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
            max: vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        })
    }
}

/// Per-scenario report: replication rows plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub scenario: String,
    pub layout: String,
    pub policy: String,
    pub seed: u64,
    pub area_m2: f64,
    pub replications: Vec<ReplicationKpi>,
    pub throughput_s: Option<Aggregate>,
    pub on_time_pct: Option<Aggregate>,
    pub usage: Option<Aggregate>,
    /// Scenario-level FTE: ceil(2 x mean usage across replications).
    pub fte: u32,
    /// Per-day mean throughput (warm-up included) as a Welch-style
    /// warm-up inspection aid.
    pub warmup_profile: Vec<f64>,
}

impl KpiReport {
    pub fn assemble(
        scenario: String,
        layout: String,
        policy: String,
        seed: u64,
        area_m2: f64,
        replications: Vec<ReplicationKpi>,
        warmup_profile: Vec<f64>,
    ) -> KpiReport {
        let throughput_s = Aggregate::over(
            replications
                .iter()
                .filter_map(|r| r.kpi.throughput_s_mean),
        );
        let on_time = Aggregate::over(replications.iter().filter_map(|r| r.kpi.on_time_pct));
        let usage = Aggregate::over(replications.iter().map(|r| r.usage_avg));
        let fte = usage.map_or(0, |u| required_fte(u.mean));
        KpiReport {
            scenario,
            layout,
            policy,
            seed,
            area_m2,
            replications,
            throughput_s,
            on_time_pct: on_time,
            usage,
            fte,
            warmup_profile,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.3}"))
}

/// CSV form: one detail row per scenario x replication plus one aggregate
/// row per scenario (replication column = "mean"). Fixed-precision
/// formatting keeps repeated runs byte-identical.
pub fn to_csv(reports: &[KpiReport]) -> String {
    let mut out = String::new();
    out.push_str("scenario,layout,policy,replication,throughput_s_mean,fte,on_time_pct,area_m2,seed\n");
    for r in reports {
        for rep in &r.replications {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:.3},{}\n",
                r.scenario,
                r.layout,
                r.policy,
                rep.replication,
                fmt_opt(rep.kpi.throughput_s_mean),
                rep.kpi.fte,
                fmt_opt(rep.kpi.on_time_pct),
                rep.kpi.area_m2,
                r.seed,
            ));
        }
        out.push_str(&format!(
            "{},{},{},mean,{},{},{},{:.3},{}\n",
            r.scenario,
            r.layout,
            r.policy,
            fmt_opt(r.throughput_s.map(|a| a.mean)),
            r.fte,
            fmt_opt(r.on_time_pct.map(|a| a.mean)),
            r.area_m2,
            r.seed,
        ));
    }
    out
}

/// Write the CSV and JSON report files into `dir`.
pub fn emit_report(reports: &[KpiReport], dir: &Path, stem: &str) -> Result<(), ConfigError> {
    std::fs::create_dir_all(dir).map_err(|source| ConfigError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source| ConfigError::Io { path: p.clone(), source }
    };
    let mut csv = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    csv.write_all(to_csv(reports).as_bytes())
        .map_err(io_err(&csv_path))?;
    let json = serde_json::to_string_pretty(reports).expect("reports serialize");
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OrderLine;

    fn order(release: f64, complete: Option<f64>) -> Order {
        Order {
            id: 1,
            wave_index: 0,
            release_time: release,
            lines: vec![OrderLine { sku: 0, quantity: 1 }],
            completion_time: complete,
        }
    }

    #[test]
    fn throughput_is_completion_minus_release() {
        assert_eq!(throughput_time(&order(0.0, Some(896.0))), Some(896.0));
        assert_eq!(throughput_time(&order(100.0, Some(100.0))), Some(0.0));
        assert_eq!(throughput_time(&order(0.0, None)), None);
    }

    #[test]
    fn fte_examples() {
        // Constant 10 busy trucks over the window.
        let transitions: Vec<(f64, i32)> = (0..10).map(|_| (0.0, 1)).collect();
        let usage = average_usage(&transitions, (0.0, 1000.0));
        assert!((usage - 10.0).abs() < 1e-12);
        assert_eq!(required_fte(usage), 20);
        // Zero activity.
        assert_eq!(required_fte(average_usage(&[], (0.0, 10.0))), 0);
        // Half the day 8 busy, half 12 busy: average 10 -> 20.
        let mut t = vec![(0.0, 8)];
        t.push((500.0, 4));
        let usage = average_usage(&t, (0.0, 1000.0));
        assert!((usage - 10.0).abs() < 1e-12);
        assert_eq!(required_fte(usage), 20);
    }

    #[test]
    fn usage_clips_to_window() {
        // Busy before the window and idle after half of it.
        let t = vec![(0.0, 5), (150.0, -5)];
        let usage = average_usage(&t, (100.0, 200.0));
        assert!((usage - 2.5).abs() < 1e-12);
    }

    #[test]
    fn on_time_boundaries() {
        assert_eq!(on_time_pct(&[100.0, 900.0, 1500.0]), Some(100.0));
        let mut v = vec![100.0; 99];
        v.push(1501.0);
        assert_eq!(on_time_pct(&v), Some(99.0));
        assert_eq!(on_time_pct(&[]), None);
    }

    fn sample_report(name: &str, reps: usize) -> KpiReport {
        let replications = (0..reps as u32)
            .map(|i| ReplicationKpi {
                replication: i,
                kpi: KpiValues {
                    throughput_s_mean: Some(900.0 + i as f64),
                    fte: 20,
                    on_time_pct: Some(100.0),
                    area_m2: 4000.0,
                },
                usage_avg: 9.8,
                completed_orders: 100,
                incomplete_orders: 0,
                arrivals_hash: "abc".to_string(),
            })
            .collect();
        KpiReport::assemble(
            name.to_string(),
            "conventional".to_string(),
            "random".to_string(),
            42,
            4000.0,
            replications,
            vec![],
        )
    }

    #[test]
    fn csv_row_counts() {
        let reports = vec![sample_report("a", 3), sample_report("b", 3)];
        let csv = to_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        // Header + 2 x (3 detail + 1 aggregate).
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(lines[4].starts_with("a,conventional,random,mean,"));
        assert_eq!(lines[0].split(',').count(), 9);
    }

    #[test]
    fn json_round_trips() {
        let report = sample_report("x", 2);
        let text = serde_json::to_string(&report).unwrap();
        let back: KpiReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn aggregates_cover_mean_sd_min_max() {
        let agg = Aggregate::over([1.0, 2.0, 3.0, 4.0].into_iter()).unwrap();
        assert!((agg.mean - 2.5).abs() < 1e-12);
        assert_eq!(agg.min, 1.0);
        assert_eq!(agg.max, 4.0);
        assert!((agg.sd - (1.25f64).sqrt()).abs() < 1e-12);
    }
}
