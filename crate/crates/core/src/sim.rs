//! Trace-driven rack simulation under a capping policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esd::Lifetime;
use crate::io::trace::PowerTrace;
use crate::plant::Plant;
use crate::policies::{PlannerInputs, PolicyConstants, PolicyContext, PolicyEngine, PolicyKind, WaSolverConfig};
use crate::workload::{Heterogeneity, MetricsAccumulator, ServerModel, Utility, UtilityModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RackConfig {
    pub n_servers: usize,
    pub server: ServerModel,
    /// How often per-server intensity multipliers are redrawn.
    pub update_period_s: f64,
    /// Standard deviation of the per-server intensity multipliers.
    pub heterogeneity_std: f64,
}

impl Default for RackConfig {
    fn default() -> Self {
        RackConfig { n_servers: 45, server: ServerModel::default(), update_period_s: 180.0, heterogeneity_std: 0.08 }
    }
}

impl RackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_servers == 0 {
            return Err(Error::InvalidParams("rack needs at least one server".into()));
        }
        if !(self.update_period_s > 0.0 && self.heterogeneity_std >= 0.0) {
            return Err(Error::InvalidParams("update period must be > 0 and std-dev >= 0".into()));
        }
        self.server.validate()
    }

    pub fn idle_w(&self) -> f64 {
        self.n_servers as f64 * self.server.p_idle_w
    }

    pub fn peak_w(&self) -> f64 {
        self.n_servers as f64 * self.server.p_peak_w
    }
}

/// Where the workload-aware planner's intensity forecasts come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Foresight {
    /// Read ahead in the trace.
    #[default]
    Perfect,
    /// Assume the current intensities persist.
    Persistence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub dt_s: f64,
    pub t_capping_s: f64,
    pub seed: u64,
    pub wa: WaSolverConfig,
    pub foresight: Foresight,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            dt_s: 0.1,
            t_capping_s: 2.0,
            seed: 1,
            wa: WaSolverConfig::default(),
            foresight: Foresight::Perfect,
        }
    }
}

/// Per-server intensities for a run.
#[derive(Debug, Clone)]
pub enum IntensitySource {
    Generated(Heterogeneity, Vec<f64>),
    /// `[server][step]`
    Explicit(Vec<Vec<f64>>),
}

impl IntensitySource {
    fn fill(&self, step: usize, out: &mut [f64]) {
        match self {
            IntensitySource::Generated(h, mean) => {
                let k = step.min(mean.len() - 1);
                h.intensities_at(k, mean[k], out);
            }
            IntensitySource::Explicit(series) => {
                for (o, s) in out.iter_mut().zip(series) {
                    *o = s[step.min(s.len() - 1)];
                }
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            IntensitySource::Generated(_, mean) => mean.len(),
            IntensitySource::Explicit(series) => series.first().map_or(0, Vec::len),
        }
    }
}

/// A rack workload on the simulation grid: rack demand and the per-server
/// intensities behind it.
#[derive(Debug, Clone)]
pub struct Workload {
    pub rack: RackConfig,
    pub dt_s: f64,
    source: IntensitySource,
    demand_w: Vec<f64>,
}

impl Workload {
    /// Derives the mean intensity from rack demand and spreads it across
    /// servers with seeded multipliers.
    pub fn from_trace(trace: &PowerTrace, rack: &RackConfig, seed: u64) -> Result<Self> {
        rack.validate()?;
        if trace.is_empty() {
            return Err(Error::InvalidArgument("trace is empty".into()));
        }
        let n = rack.n_servers;
        let mean: Vec<f64> = trace.demand_w.iter().map(|&d| rack.server.intensity_for_rack_power(d, n)).collect();
        let per_update = ((rack.update_period_s / trace.period_s).round() as usize).max(1);
        let h = Heterogeneity::generate(n, rack.heterogeneity_std, per_update, mean.len().div_ceil(per_update), seed)?;
        Self::build(rack, trace.period_s, IntensitySource::Generated(h, mean))
    }

    /// Uses measured per-server intensities, `[server][step]`.
    pub fn from_intensities(series: Vec<Vec<f64>>, dt_s: f64, rack: &RackConfig) -> Result<Self> {
        let rack = RackConfig { n_servers: series.len(), ..rack.clone() };
        rack.validate()?;
        let len = series[0].len();
        if len == 0 || series.iter().any(|s| s.len() != len) {
            return Err(Error::InvalidArgument("per-server series must be non-empty and equal length".into()));
        }
        Self::build(&rack, dt_s, IntensitySource::Explicit(series))
    }

    fn build(rack: &RackConfig, dt_s: f64, source: IntensitySource) -> Result<Self> {
        let mut buf = vec![0.0; rack.n_servers];
        let demand_w = (0..source.len())
            .map(|k| {
                source.fill(k, &mut buf);
                buf.iter().map(|&x| rack.server.demand_unchecked(x)).sum()
            })
            .collect();
        Ok(Workload { rack: rack.clone(), dt_s, source, demand_w })
    }

    /// Total rack demand per step.
    pub fn demand_w(&self) -> &[f64] {
        &self.demand_w
    }

    pub fn len(&self) -> usize {
        self.demand_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand_w.is_empty()
    }

    pub fn intensities_at(&self, step: usize, out: &mut [f64]) {
        self.source.fill(step, out);
    }
}

/// One simulated step, as written to the step CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t_s: f64,
    pub demand_w: f64,
    pub p_fc_w: f64,
    pub esd_delivered_w: f64,
    pub esd_energy_j: f64,
    pub shortfall_w: f64,
    pub served_w: f64,
    pub rack_budget_w: f64,
    pub esd_drawn_w: f64,
}

/// One policy decision, as written to the decision log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub t_s: f64,
    pub policy: PolicyKind,
    pub rack_budget_w: f64,
    pub min_server_budget_w: f64,
    pub max_server_budget_w: f64,
    pub messages: usize,
}

pub trait Recorder {
    fn step(&mut self, row: &StepRow) -> Result<()>;
    fn decision(&mut self, _row: &DecisionRow) -> Result<()> {
        Ok(())
    }
}

/// Keeps every row in memory.
#[derive(Debug, Default, Clone)]
pub struct MemoryRecorder {
    pub steps: Vec<StepRow>,
    pub decisions: Vec<DecisionRow>,
}

impl Recorder for MemoryRecorder {
    fn step(&mut self, row: &StepRow) -> Result<()> {
        self.steps.push(*row);
        Ok(())
    }

    fn decision(&mut self, row: &DecisionRow) -> Result<()> {
        self.decisions.push(row.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsdSummary {
    pub capacity_j: f64,
    pub e_min_j: f64,
    pub initial_energy_j: f64,
    pub final_energy_j: f64,
    pub min_energy_j: f64,
    pub delivered_j: f64,
    pub drawn_j: f64,
    pub discharged_j: f64,
    /// |stored change - (eta * drawn - delivered / eta)|, relative.
    pub conservation_residual: f64,
    pub charge_events: u64,
    /// `None` when the run never discharged.
    pub lifetime_years: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    /// `None` for an uncapped run.
    pub policy: Option<PolicyKind>,
    pub capacity_j: f64,
    pub duration_s: f64,
    pub steps: usize,
    pub periods: usize,
    /// Periods in which some server was held below its demand.
    pub capped_periods: usize,
    /// Steps in which load had to be shed because supply ran out.
    pub shed_steps: usize,
    pub unavailability: f64,
    pub shed_energy_j: f64,
    pub success_rate: f64,
    pub avg_latency_ms: f64,
    pub p95_latency_ms: f64,
    pub esd: EsdSummary,
    pub messages_sent: u64,
    pub planner_fallbacks: usize,
    pub even_splits: usize,
}

/// A server counts as capped only when its budget is below demand by more
/// than split rounding.
pub const CAP_TOLERANCE_W: f64 = 1e-6;

/// Runs `workload` on `plant` under `policy` (or uncapped when `None`).
pub fn simulate(
    plant: &Plant,
    workload: &Workload,
    settings: &SimSettings,
    policy: Option<PolicyKind>,
    mut recorder: Option<&mut dyn Recorder>,
) -> Result<SimReport> {
    if workload.is_empty() {
        return Err(Error::InvalidArgument("workload is empty".into()));
    }
    if (workload.dt_s - plant.dt()).abs() > 1e-12 * plant.dt() {
        return Err(Error::InvalidArgument(format!(
            "workload step {} s differs from plant step {} s",
            workload.dt_s,
            plant.dt()
        )));
    }
    let rack = &workload.rack;
    let server = &rack.server;
    let n = rack.n_servers;
    let dt = plant.dt();
    let constants = PolicyConstants::for_plant(plant, settings.t_capping_s)?;
    let spp = constants.steps_per_period;
    let ctx = PolicyContext { plant, server, constants, wa: settings.wa };
    let mut engine = policy.map(PolicyEngine::new);
    let timeout_ms = match &server.utility {
        UtilityModel::Parametric(c) => c.timeout_ms,
        UtilityModel::Table(t) => t.avg_latency_ms.iter().flatten().copied().fold(1.0, f64::max),
    };
    let perfect = Utility { success_rate: 1.0, avg_latency_ms: perfect_latency(server), offline: false };

    let len = workload.len();
    let mut state = plant.initial_state(workload.demand_w()[0])?;
    let initial_energy = state.esd.energy_j;
    let mut intensity = vec![0.0; n];
    workload.intensities_at(0, &mut intensity);
    let mut server_power: Vec<f64> = intensity.iter().map(|&x| server.demand_unchecked(x)).collect();
    let mut budgets = vec![f64::INFINITY; n];
    let mut rack_budget = f64::INFINITY;
    let mut demand = vec![0.0; n];
    let mut consumption = vec![0.0; n];
    let mut future: Vec<Vec<f64>> = Vec::new();
    let mut metrics = MetricsAccumulator::new(timeout_ms);

    let mut report = SimReport {
        policy,
        capacity_j: plant.esd_params().capacity_j,
        duration_s: len as f64 * dt,
        steps: len,
        periods: len.div_ceil(spp),
        capped_periods: 0,
        shed_steps: 0,
        unavailability: 0.0,
        shed_energy_j: 0.0,
        success_rate: 1.0,
        avg_latency_ms: 0.0,
        p95_latency_ms: 0.0,
        esd: EsdSummary {
            capacity_j: plant.esd_params().capacity_j,
            e_min_j: plant.esd_params().e_min(),
            initial_energy_j: initial_energy,
            final_energy_j: initial_energy,
            min_energy_j: initial_energy,
            delivered_j: 0.0,
            drawn_j: 0.0,
            discharged_j: 0.0,
            conservation_residual: 0.0,
            charge_events: 0,
            lifetime_years: None,
        },
        messages_sent: 0,
        planner_fallbacks: 0,
        even_splits: 0,
    };
    let mut period_capped = false;

    for k in 0..len {
        workload.intensities_at(k, &mut intensity);
        if k % spp == 0 {
            if period_capped {
                report.capped_periods += 1;
                period_capped = false;
            }
            if let Some(engine) = engine.as_mut() {
                if policy.is_some_and(PolicyKind::is_workload_aware) {
                    future.clear();
                    // Period j covers steps [k + (j-1)*spp, k + j*spp); its estimate is
                    // the larger of the first and last sample so ramps are not clipped.
                    let mut last = vec![0.0; n];
                    for j in 1..=settings.wa.horizon {
                        let mut lam = vec![0.0; n];
                        match settings.foresight {
                            Foresight::Perfect => {
                                workload.intensities_at((k + (j - 1) * spp).min(len - 1), &mut lam);
                                workload.intensities_at((k + j * spp - 1).min(len - 1), &mut last);
                                for (a, &b) in lam.iter_mut().zip(&last) {
                                    *a = a.max(b);
                                }
                            }
                            Foresight::Persistence => lam.copy_from_slice(&intensity),
                        }
                        future.push(lam);
                    }
                }
                let inputs = PlannerInputs {
                    p_fc_w: state.fc.p_fc,
                    e_esd_measured_j: state.esd.measured_energy(plant.esd_params()),
                    plant_state: &state,
                    p_rack_w: server_power.iter().sum(),
                    server_power_w: &server_power,
                    intensity: &intensity,
                    future_intensity: if future.is_empty() { None } else { Some(&future) },
                };
                let d = engine.decide(&inputs, &ctx)?;
                report.messages_sent += d.messages_sent as u64;
                report.planner_fallbacks += d.planner_fallback as usize;
                report.even_splits += d.even_split as usize;
                rack_budget = d.rack_budget_w;
                if let Some(r) = recorder.as_deref_mut() {
                    r.decision(&DecisionRow {
                        t_s: k as f64 * dt,
                        policy: engine.kind(),
                        rack_budget_w: d.rack_budget_w,
                        min_server_budget_w: d.server_budgets_w.iter().copied().fold(f64::INFINITY, f64::min),
                        max_server_budget_w: d.server_budgets_w.iter().copied().fold(0.0, f64::max),
                        messages: d.messages_sent,
                    })?;
                }
                budgets = d.server_budgets_w;
            }
        }

        let mut wanted = 0.0;
        let mut rack_demand = 0.0;
        let mut capped = false;
        for i in 0..n {
            demand[i] = server.demand_unchecked(intensity[i]);
            consumption[i] = demand[i].min(budgets[i]);
            capped |= consumption[i] < demand[i] - CAP_TOLERANCE_W;
            wanted += consumption[i];
            rack_demand += demand[i];
        }
        period_capped |= capped;
        // The storage controller only recharges once no server is capped.
        state = plant.step_shedding(&state, wanted, !capped)?;
        let served = state.last_rack_power_w;
        if state.shortfall_w > 0.0 {
            report.shed_steps += 1;
            report.shed_energy_j += state.shortfall_w * dt;
            // Every server loses the same share of what it was drawing.
            let keep = if wanted > 0.0 { served / wanted } else { 0.0 };
            consumption.iter_mut().for_each(|c| *c *= keep);
        }
        for i in 0..n {
            let requests = intensity[i] * dt;
            if requests <= 0.0 {
                continue;
            }
            let u = if consumption[i] >= demand[i] { perfect } else { server.utility(consumption[i], intensity[i]) };
            metrics.record(requests, u);
        }
        server_power.copy_from_slice(&consumption);
        report.esd.min_energy_j = report.esd.min_energy_j.min(state.esd.energy_j);
        if let Some(r) = recorder.as_deref_mut() {
            r.step(&StepRow {
                t_s: k as f64 * dt,
                demand_w: rack_demand,
                p_fc_w: state.fc.p_fc,
                esd_delivered_w: state.esd_delivered_w,
                esd_energy_j: state.esd.energy_j,
                shortfall_w: state.shortfall_w,
                served_w: served,
                rack_budget_w: rack_budget,
                esd_drawn_w: state.esd_drawn_w,
            })?;
        }
    }
    if period_capped {
        report.capped_periods += 1;
    }

    let m = metrics.finish()?;
    report.success_rate = m.success_rate;
    report.avg_latency_ms = m.avg_latency_ms;
    report.p95_latency_ms = m.p95_latency_ms;
    report.unavailability = report.shed_steps as f64 / len as f64;

    let esd = plant.esd_params();
    let e = &state.esd;
    let stored_change = e.energy_j - initial_energy;
    let flows = esd.eta * e.drawn_total_j - e.delivered_total_j / esd.eta;
    let scale = esd.capacity_j.max(e.drawn_total_j).max(e.delivered_total_j).max(1.0);
    report.esd.final_energy_j = e.energy_j;
    report.esd.delivered_j = e.delivered_total_j;
    report.esd.drawn_j = e.drawn_total_j;
    report.esd.discharged_j = e.discharged_total_j;
    report.esd.conservation_residual = (stored_change - flows).abs() / scale;
    report.esd.charge_events = e.charge_events;
    report.esd.lifetime_years = match e.lifetime_years(esd, report.duration_s)? {
        Lifetime::Unbounded => None,
        Lifetime::Years(y) => Some(y),
    };
    Ok(report)
}

fn perfect_latency(server: &ServerModel) -> f64 {
    match &server.utility {
        UtilityModel::Parametric(c) => c.latency_base_ms,
        UtilityModel::Table(_) => {
            let u = server.utility(server.p_peak_w, 1.0);
            u.avg_latency_ms
        }
    }
}

/// Average slope of served rack power after storage first hits its floor
/// (within `floor_band_j`): from the lowest served power after that moment
/// until served power first reaches the peak demand seen after it. `None`
/// when storage never empties or the rack never catches up.
pub fn ramp_after_exhaustion(rows: &[StepRow], e_min_j: f64, floor_band_j: f64) -> Option<f64> {
    let start = rows.iter().position(|r| r.esd_energy_j <= e_min_j + floor_band_j)?;
    let target = rows[start..].iter().map(|r| r.demand_w).fold(0.0, f64::max);
    let end = rows[start..].iter().position(|r| r.served_w >= target - 1.0)? + start;
    let trough = (start..=end).min_by(|&i, &j| rows[i].served_w.total_cmp(&rows[j].served_w))?;
    if end == trough {
        return None;
    }
    let (a, b) = (&rows[trough], &rows[end]);
    Some((b.served_w - a.served_w) / (b.t_s - a.t_s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esd::EsdParams;
    use crate::fuelcell::FuelCellParams;
    use crate::io::surge::{gen_surge, SurgeSpec};

    fn setup(capacity_j: f64) -> (Plant, Workload) {
        let plant =
            Plant::new(FuelCellParams::default(), EsdParams { capacity_j, ..EsdParams::default() }, 0.1).unwrap();
        let trace = gen_surge(&SurgeSpec::canonical(), 0.1).unwrap();
        let w = Workload::from_trace(&trace, &RackConfig::default(), 3).unwrap();
        (plant, w)
    }

    #[test]
    fn workload_reproduces_trace_demand() {
        let (_, w) = setup(0.0);
        let trace = gen_surge(&SurgeSpec::canonical(), 0.1).unwrap();
        for (a, b) in w.demand_w().iter().zip(&trace.demand_w) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn ample_storage_never_caps() {
        let (plant, w) = setup(1e7);
        let r = simulate(&plant, &w, &SimSettings::default(), Some(PolicyKind::CFcuWu), None).unwrap();
        assert_eq!(r.capped_periods, 0);
        assert_eq!(r.shed_steps, 0);
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.p95_latency_ms, 20.0);
        assert!(r.esd.conservation_residual < 1e-9);
    }

    #[test]
    fn no_storage_uncapped_sheds() {
        let (plant, w) = setup(0.0);
        let r = simulate(&plant, &w, &SimSettings::default(), None, None).unwrap();
        assert!(r.shed_steps > 0 && r.success_rate < 1.0);
    }

    #[test]
    fn mismatched_step_is_rejected() {
        let (_, w) = setup(0.0);
        let plant = Plant::new(FuelCellParams::default(), EsdParams::default(), 0.05).unwrap();
        assert!(simulate(&plant, &w, &SimSettings::default(), None, None).is_err());
    }
}
