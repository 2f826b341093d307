//! Case-level metrics and batch aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fear::FearConfig;
use crate::grid::{AgentId, GridState};
use crate::influence::TierStructure;

/// Kendall's tau for the three pairings of rank sources. `None` marks an
/// undefined tau (a completely tied rank vector).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TauTriple {
    pub ifear_tier: Option<f64>,
    pub ifear_shapley: Option<f64>,
    pub tier_shapley: Option<f64>,
}

impl TauTriple {
    pub const LABELS: [&'static str; 3] = ["ifear_tier", "ifear_shapley", "tier_shapley"];

    pub fn as_array(&self) -> [Option<f64>; 3] {
        [self.ifear_tier, self.ifear_shapley, self.tier_shapley]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertiveCounts {
    pub n_assertive_ifear: u32,
    pub n_assertive_gfear: u32,
    pub delta_assertive: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub affected: AgentId,
    pub delta_assertive: u32,
    pub n_assertive_ifear: u32,
    pub n_assertive_gfear: u32,
    pub median_manhattan: f64,
    pub taus: TauTriple,
}

/// Number of agents placed in tiers minus the number with positive
/// individual FeAR.
pub fn delta_assertive(fear_column: &[(AgentId, f64)], ts: &TierStructure, cfg: &FearConfig) -> Result<AssertiveCounts> {
    let n_ifear = fear_column.iter().filter(|&&(_, v)| cfg.is_positive(v)).count() as u32;
    let n_gfear = ts.assertive().len() as u32;
    let delta = n_gfear.checked_sub(n_ifear).ok_or_else(|| {
        Error::Inconsistent(format!(
            "agent {}: {n_ifear} solo actors but only {n_gfear} agents in tiers",
            ts.affected
        ))
    })?;
    Ok(AssertiveCounts { n_assertive_ifear: n_ifear, n_assertive_gfear: n_gfear, delta_assertive: delta })
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

/// Median L1 distance from agent `j` to every other agent.
pub fn median_manhattan(state: &GridState, j: AgentId) -> Result<f64> {
    let origin = state.position(j)?;
    let mut d: Vec<f64> = state
        .agents()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j.index())
        .map(|(_, &c)| origin.manhattan(c) as f64)
        .collect();
    median(&mut d).ok_or_else(|| Error::InvalidState("median distance needs at least two agents".into()))
}

/// Per-case metrics tagged with the scenario they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedMetrics {
    pub scenario: String,
    pub metrics: CaseMetrics,
}

/// One scenario and unit-width distance bin `[bin, bin + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub bin: u32,
    pub count: usize,
    pub fraction_nonzero_delta: f64,
    pub mean_delta: f64,
    pub max_n_assertive_gfear: u32,
    pub sd_tau_ifear_tier: Option<f64>,
    pub sd_tau_ifear_shapley: Option<f64>,
    pub sd_tau_tier_shapley: Option<f64>,
    pub excluded_tau_ifear_tier: usize,
    pub excluded_tau_ifear_shapley: usize,
    pub excluded_tau_tier_shapley: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<AggregateRow>,
}

/// Header of the aggregate CSV, one column per [`AggregateRow`] field.
pub const AGGREGATE_CSV_HEADER: [&str; 12] = [
    "scenario",
    "bin",
    "count",
    "fraction_nonzero_delta",
    "mean_delta",
    "max_n_assertive_gfear",
    "sd_tau_ifear_tier",
    "sd_tau_ifear_shapley",
    "sd_tau_tier_shapley",
    "excluded_tau_ifear_tier",
    "excluded_tau_ifear_shapley",
    "excluded_tau_tier_shapley",
];

impl AggregateReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<AggregateRow>, _>>()
            .map_err(|e| Error::Inconsistent(format!("aggregate csv: {e}")))?;
        Ok(AggregateReport { rows })
    }

    pub fn scenarios(&self) -> Vec<String> {
        let mut s: Vec<String> = self.rows.iter().map(|r| r.scenario.clone()).collect();
        s.dedup();
        s
    }

    pub fn rows_for<'a>(&'a self, scenario: &'a str) -> impl Iterator<Item = &'a AggregateRow> + 'a {
        self.rows.iter().filter(move |r| r.scenario == scenario)
    }
}

/// Population standard deviation of values sorted ascending first, so the
/// result does not depend on input order.
pub fn population_sd(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt())
}

pub fn distance_bin(distance: f64) -> u32 {
    distance.max(0.0).floor() as u32
}

/// Group cases by scenario and distance bin and summarise each group.
pub fn aggregate(cases: &[TaggedMetrics]) -> Result<AggregateReport> {
    if cases.is_empty() {
        return Err(Error::InvalidConfig("aggregate needs at least one case".into()));
    }
    let mut groups: BTreeMap<(&str, u32), Vec<&CaseMetrics>> = BTreeMap::new();
    for c in cases {
        groups
            .entry((c.scenario.as_str(), distance_bin(c.metrics.median_manhattan)))
            .or_default()
            .push(&c.metrics);
    }
    let rows = groups
        .into_iter()
        .map(|((scenario, bin), ms)| {
            let count = ms.len();
            let nonzero = ms.iter().filter(|m| m.delta_assertive > 0).count();
            let delta_sum: u64 = ms.iter().map(|m| m.delta_assertive as u64).sum();
            let mut sds = [None; 3];
            let mut excluded = [0usize; 3];
            for (t, (sd, ex)) in sds.iter_mut().zip(excluded.iter_mut()).enumerate() {
                let mut defined: Vec<f64> = ms.iter().filter_map(|m| m.taus.as_array()[t]).collect();
                *ex = count - defined.len();
                *sd = population_sd(&mut defined);
            }
            AggregateRow {
                scenario: scenario.to_string(),
                bin,
                count,
                fraction_nonzero_delta: nonzero as f64 / count as f64,
                mean_delta: delta_sum as f64 / count as f64,
                max_n_assertive_gfear: ms.iter().map(|m| m.n_assertive_gfear).max().unwrap_or(0),
                sd_tau_ifear_tier: sds[0],
                sd_tau_ifear_shapley: sds[1],
                sd_tau_tier_shapley: sds[2],
                excluded_tau_ifear_tier: excluded[0],
                excluded_tau_ifear_shapley: excluded[1],
                excluded_tau_tier_shapley: excluded[2],
            }
        })
        .collect();
    Ok(AggregateReport { rows })
}
