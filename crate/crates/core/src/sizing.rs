//! Storage sizing: sweep capacity fractions per capping policy and pick the
//! smallest capacity that still meets the service-level targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::plant::{min_esd_for_trace, Plant};
use crate::policies::PolicyKind;
use crate::sim::{simulate, SimReport, SimSettings, Workload};

/// Allowed degradation relative to the fully provisioned run of the same
/// policy. Success rate is in absolute fraction points, latencies relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlaMargins {
    pub success_rate_margin: f64,
    pub avg_latency_margin: f64,
    pub p95_latency_margin: f64,
}

impl Default for SlaMargins {
    fn default() -> Self {
        SlaMargins { success_rate_margin: 0.001, avg_latency_margin: 0.03, p95_latency_margin: 0.10 }
    }
}

/// Fixed service-level limits, independent of any baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaLimits {
    pub min_success_rate: f64,
    pub max_avg_latency_ms: f64,
    pub max_p95_latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Sla {
    Relative(SlaMargins),
    Absolute(SlaLimits),
}

impl Default for Sla {
    fn default() -> Self {
        Sla::Relative(SlaMargins::default())
    }
}

impl Sla {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Sla::Relative(m) => {
                [m.success_rate_margin, m.avg_latency_margin, m.p95_latency_margin].iter().all(|&v| v >= 0.0)
            }
            Sla::Absolute(l) => {
                (0.0..=1.0).contains(&l.min_success_rate) && l.max_avg_latency_ms >= 0.0 && l.max_p95_latency_ms >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("SLA values out of range: {self:?}")))
        }
    }

    /// Whether `run` meets the targets given the fully provisioned run.
    pub fn met(&self, run: &SimReport, baseline: &SimReport) -> bool {
        match self {
            Sla::Relative(m) => {
                let rel = |x: f64, base: f64| if base > 0.0 { (x - base) / base } else { x - base };
                baseline.success_rate - run.success_rate <= m.success_rate_margin + 1e-12
                    && rel(run.avg_latency_ms, baseline.avg_latency_ms) <= m.avg_latency_margin + 1e-12
                    && rel(run.p95_latency_ms, baseline.p95_latency_ms) <= m.p95_latency_margin + 1e-12
            }
            Sla::Absolute(l) => {
                run.success_rate >= l.min_success_rate
                    && run.avg_latency_ms <= l.max_avg_latency_ms
                    && run.p95_latency_ms <= l.max_p95_latency_ms
            }
        }
    }
}

/// `{5%, 10%, ..., 100%}`.
pub fn default_fractions() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

/// Fully provisioned capacity: the smallest store that rides out `workload`
/// uncapped.
pub fn baseline_capacity(plant: &Plant, workload: &Workload) -> Result<f64> {
    let c = min_esd_for_trace(plant, workload.demand_w())?;
    if !c.is_finite() {
        return Err(Error::Precondition(
            "no storage size rides out this trace uncapped; the fuel cell is undersized".into(),
        ));
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub policy: PolicyKind,
    pub fraction: f64,
    pub capacity_j: f64,
    pub feasible: bool,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMinimum {
    pub policy: PolicyKind,
    /// Smallest grid fraction from which every larger fraction is feasible.
    pub fraction: Option<f64>,
    pub capacity_j: Option<f64>,
    /// Grid fractions that are infeasible although a smaller one is feasible.
    pub monotonicity_violations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub policy: PolicyKind,
    pub fraction: f64,
    pub capacity_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub baseline_capacity_j: f64,
    pub sla: Sla,
    pub fractions: Vec<f64>,
    /// Fully provisioned run per policy, the reference for relative margins.
    pub baselines: Vec<SimReport>,
    pub points: Vec<SweepPoint>,
    pub minimums: Vec<PolicyMinimum>,
    pub chosen: Chosen,
    /// No policy met the targets below full provisioning.
    pub no_reduction_possible: bool,
}

/// Runs every (policy, fraction) pair and picks the smallest feasible
/// capacity, ties going to the simpler policy.
pub fn sweep(
    plant: &Plant,
    workload: &Workload,
    settings: &SimSettings,
    policies: &[PolicyKind],
    fractions: &[f64],
    sla: &Sla,
) -> Result<SizingResult> {
    sla.validate()?;
    if policies.is_empty() {
        return Err(Error::InvalidArgument("no policies to sweep".into()));
    }
    if fractions.is_empty() || fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::InvalidArgument("capacity fractions must be finite and >= 0".into()));
    }
    let mut policies: Vec<PolicyKind> = PolicyKind::ALL.iter().copied().filter(|p| policies.contains(p)).collect();
    policies.dedup();
    let mut fractions = fractions.to_vec();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();

    let base = baseline_capacity(plant, workload)?;
    let baselines = par::map(&policies, |&p| simulate(&plant.with_capacity(base), workload, settings, Some(p), None))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let grid: Vec<(usize, f64)> = (0..policies.len()).flat_map(|i| fractions.iter().map(move |&f| (i, f))).collect();
    let reports = par::map(&grid, |&(i, f)| {
        simulate(&plant.with_capacity(f * base), workload, settings, Some(policies[i]), None)
    });
    let mut points = Vec::with_capacity(grid.len());
    for (&(i, f), report) in grid.iter().zip(reports) {
        let report = report?;
        let feasible = sla.met(&report, &baselines[i]);
        points.push(SweepPoint { policy: policies[i], fraction: f, capacity_j: f * base, feasible, report });
    }

    let mut minimums = Vec::with_capacity(policies.len());
    for (i, &policy) in policies.iter().enumerate() {
        let row = &points[i * fractions.len()..(i + 1) * fractions.len()];
        let first_ok = row.iter().position(|p| p.feasible);
        let violations: Vec<f64> = match first_ok {
            Some(k) => row[k..].iter().filter(|p| !p.feasible).map(|p| p.fraction).collect(),
            None => Vec::new(),
        };
        if !violations.is_empty() {
            log::warn!("{policy}: feasibility is not monotone in capacity; infeasible at {violations:?}");
        }
        let min = row.iter().rposition(|p| !p.feasible).map_or(Some(0), |k| (k + 1 < row.len()).then_some(k + 1));
        let fraction = min.map(|k| row[k].fraction);
        minimums.push(PolicyMinimum {
            policy,
            fraction,
            capacity_j: fraction.map(|f| f * base),
            monotonicity_violations: violations,
        });
    }

    // Minimums are listed simplest policy first, so a strict comparison
    // keeps the simpler one on ties.
    let mut chosen: Option<Chosen> = None;
    for m in &minimums {
        if let (Some(fraction), Some(capacity_j)) = (m.fraction, m.capacity_j) {
            if chosen.as_ref().is_none_or(|c| capacity_j < c.capacity_j) {
                chosen = Some(Chosen { policy: m.policy, fraction, capacity_j });
            }
        }
    }
    let no_reduction_possible = chosen.as_ref().is_none_or(|c| c.fraction >= 1.0 && base > 0.0);
    let chosen = chosen.unwrap_or(Chosen { policy: policies[0], fraction: 1.0, capacity_j: base });
    Ok(SizingResult {
        baseline_capacity_j: base,
        sla: *sla,
        fractions,
        baselines,
        points,
        minimums,
        chosen,
        no_reduction_possible,
    })
}
