//! Multi-scenario comparison under common random numbers, with parallel
//! replication execution and deterministic result merging.

use std::path::Path;

use crate::engine::LogMode;
use crate::error::ConfigError;
use crate::kpi::{emit_report, KpiReport, ReplicationKpi};
use crate::scenario::{layout_kind_name, Scenario};
use crate::sim::{run_replication, ReplicationResult, SimInputs};
use rayon::prelude::*;
use serde::Serialize;

/// Options controlling one comparison run.
#[derive(Debug, Clone)]
pub struct CompareOptions {
    /// Overrides every scenario's master seed when set.
    pub seed: Option<u64>,
    /// Overrides every scenario's replication count when set.
    pub replications: Option<u32>,
    /// Worker threads for replication execution (0 = rayon default).
    pub parallelism: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            seed: None,
            replications: None,
            parallelism: 0,
        }
    }
}

/// Comparison output: one report per scenario plus CRN bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    /// Arrival-channel hashes agree across scenarios for each replication
    /// (the common-random-numbers contract).
    pub crn_arrivals_consistent: bool,
    pub scenarios: Vec<KpiReport>,
}

/// Run every scenario under common random numbers and assemble the joint
/// report. Scenario results are merged in input order and replication
/// order, so output is deterministic regardless of parallelism.
pub fn run_compare(
    scenarios: &[Scenario],
    options: &CompareOptions,
) -> Result<ComparisonReport, ConfigError> {
    if scenarios.len() < 2 {
        return Err(ConfigError::invalid(
            "scenarios",
            "a comparison needs at least 2 scenarios",
        ));
    }
    let mut prepared = Vec::with_capacity(scenarios.len());
    for (i, s) in scenarios.iter().enumerate() {
        let mut scenario = s.clone();
        if let Some(seed) = options.seed {
            scenario.master_seed = seed;
        }
        if let Some(reps) = options.replications {
            scenario.replication.replications = reps;
        }
        let inputs = SimInputs::prepare(scenario).map_err(|e| {
            ConfigError::Parse(format!("scenario[{i}] ({}): {e}", s.effective_name()))
        })?;
        prepared.push(inputs);
    }
    let seed = options.seed.unwrap_or(prepared[0].scenario.master_seed);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| ConfigError::Parse(format!("thread pool: {e}")))?;

    // Flatten scenario x replication jobs; indexed collect keeps order.
    let jobs: Vec<(usize, u32)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(si, inputs)| {
            (0..inputs.scenario.replication.replications).map(move |r| (si, r))
        })
        .collect();
    let results: Vec<(usize, ReplicationResult)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, rep)| (si, run_replication(&prepared[si], rep, LogMode::Hash)))
            .collect()
    });

    let mut reports = Vec::with_capacity(prepared.len());
    let mut per_rep_hashes: Vec<Vec<u64>> = vec![Vec::new(); prepared.len()];
    for (si, inputs) in prepared.iter().enumerate() {
        let mut reps: Vec<&ReplicationResult> = results
            .iter()
            .filter(|(i, _)| *i == si)
            .map(|(_, r)| r)
            .collect();
        reps.sort_by_key(|r| r.replication);
        per_rep_hashes[si] = reps.iter().map(|r| r.arrivals_hash).collect();
        let rows: Vec<ReplicationKpi> = reps
            .iter()
            .map(|r| ReplicationKpi {
                replication: r.replication,
                kpi: r.kpi,
                usage_avg: r.usage_avg,
                completed_orders: r.diagnostics.completed_orders,
                incomplete_orders: r.diagnostics.incomplete_orders,
                arrivals_hash: format!("{:016x}", r.arrivals_hash),
            })
            .collect();
        // Mean warm-up profile across replications, day by day.
        let n_days = inputs.scenario.replication.n_days as usize;
        let mut profile = vec![0.0; n_days];
        for r in &reps {
            for (d, v) in r.warmup_profile.iter().enumerate() {
                profile[d] += v / reps.len() as f64;
            }
        }
        reports.push(KpiReport::assemble(
            inputs.scenario.effective_name(),
            layout_kind_name(inputs.scenario.layout.kind).to_string(),
            inputs.scenario.effective_policy().name().to_string(),
            inputs.scenario.master_seed,
            reps.first().map_or(0.0, |r| r.kpi.area_m2),
            rows,
            profile,
        ));
    }

    // CRN contract: scenarios sharing inbound configuration and seed see
    // identical arrival channels per replication.
    let mut consistent = true;
    let reference = &per_rep_hashes[0];
    for (si, hashes) in per_rep_hashes.iter().enumerate().skip(1) {
        let same_demand = prepared[si].scenario.inbound == prepared[0].scenario.inbound
            && prepared[si].scenario.pallet_mix == prepared[0].scenario.pallet_mix
            && prepared[si].scenario.catalog == prepared[0].scenario.catalog
            && prepared[si].scenario.master_seed == prepared[0].scenario.master_seed;
        if same_demand && hashes != reference {
            consistent = false;
        }
    }

    Ok(ComparisonReport {
        seed,
        crn_arrivals_consistent: consistent,
        scenarios: reports,
    })
}

/// Run the comparison and write `comparison.csv` / `comparison.json` into
/// `out_dir`.
pub fn run_compare_to_dir(
    scenarios: &[Scenario],
    options: &CompareOptions,
    out_dir: &Path,
) -> Result<ComparisonReport, ConfigError> {
    let report = run_compare(scenarios, options)?;
    emit_report(&report.scenarios, out_dir, "comparison")?;
    let json_path = out_dir.join("comparison.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&json_path, json).map_err(|source| ConfigError::Io {
        path: json_path.display().to_string(),
        source,
    })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ReplicationPlan;
    use crate::kpi::to_csv;
    use crate::layout::LayoutKind;
    use crate::scenario::{LayoutChoice, PolicyChoice};
    use crate::slotting::PolicyKind;

    /// A small, fast scenario pair for in-process comparison tests.
    fn tiny(name: &str, kind: LayoutKind, policy: PolicyKind) -> Scenario {
        let mut overrides = toml::Table::new();
        overrides.insert("rows".into(), 6i64.into());
        overrides.insert("bays_per_row".into(), 12i64.into());
        overrides.insert("target_slot_count".into(), 550i64.into());
        Scenario {
            name: name.to_string(),
            master_seed: 11,
            layout: LayoutChoice { kind, overrides },
            policy: PolicyChoice {
                kind: Some(policy),
                params: Default::default(),
            },
            inbound: crate::process::InboundConfig {
                daily_volume_target: 260.0,
                truck_count: 3,
                ..Default::default()
            },
            outbound: crate::process::OutboundConfig {
                skus_per_order: 4,
                line_quantity_mean: 1.7,
                line_quantity_sd: 0.6,
                truck_count: 3,
                ..Default::default()
            },
            replication: ReplicationPlan {
                n_days: 2,
                warm_up_days: 0,
                replications: 2,
                ..Default::default()
            },
            catalog: crate::scenario::CatalogConfig {
                n_skus: 30,
                ..Default::default()
            },
            ..Scenario::default()
        }
    }

    #[test]
    fn self_comparison_is_identical_and_csv_stable() {
        let a = tiny("a", LayoutKind::Conventional, PolicyKind::Random);
        let mut b = a.clone();
        b.name = "b".to_string();
        let options = CompareOptions::default();
        let report1 = run_compare(&[a.clone(), b.clone()], &options).unwrap();
        let report2 = run_compare(&[a, b], &options).unwrap();
        // A scenario compared against itself yields identical KPIs.
        let s0 = &report1.scenarios[0];
        let s1 = &report1.scenarios[1];
        for (r0, r1) in s0.replications.iter().zip(&s1.replications) {
            assert_eq!(r0.kpi.throughput_s_mean, r1.kpi.throughput_s_mean);
            assert_eq!(r0.kpi.on_time_pct, r1.kpi.on_time_pct);
            assert_eq!(r0.arrivals_hash, r1.arrivals_hash);
        }
        assert!(report1.crn_arrivals_consistent);
        // Byte-identical CSV across repeated runs.
        assert_eq!(to_csv(&report1.scenarios), to_csv(&report2.scenarios));
    }

    #[test]
    fn comparison_requires_two_scenarios() {
        let a = tiny("solo", LayoutKind::Conventional, PolicyKind::Random);
        assert!(run_compare(&[a], &CompareOptions::default()).is_err());
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let a = tiny("a", LayoutKind::Conventional, PolicyKind::Random);
        let b = tiny("b", LayoutKind::Conventional, PolicyKind::ClassDistance);
        let serial = run_compare(
            &[a.clone(), b.clone()],
            &CompareOptions {
                parallelism: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let parallel = run_compare(
            &[a, b],
            &CompareOptions {
                parallelism: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(to_csv(&serial.scenarios), to_csv(&parallel.scenarios));
    }
}
