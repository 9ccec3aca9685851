//! Browser bindings: size storage for a surge, run a capping policy on it,
//! and draw the availability curve. Everything returns JSON strings.

use fcrack::esd::EsdParams;
use fcrack::fuelcell::{FuelCellParams, SHORTFALL_TOLERANCE_W};
use fcrack::io::surge::{gen_surge, SurgeSpec};
use fcrack::plant::{availability_sweep, min_esd_for_trace, Plant};
use fcrack::policies::PolicyKind;
use fcrack::sim::{simulate, MemoryRecorder, RackConfig, SimSettings, Workload};
use fcrack::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DT: f64 = 0.1;
// Charts get one point per second.
const EVERY: usize = 10;

fn spec(base_w: f64, magnitude_w: f64, slope_w_per_s: f64, width_s: f64) -> SurgeSpec {
    SurgeSpec { base_w, magnitude_w, slope_w_per_s, width_s, ..SurgeSpec::canonical() }
}

fn plant() -> Result<Plant> {
    Plant::new(FuelCellParams::default(), EsdParams::default(), DT)
}

#[derive(Serialize)]
struct Sizing {
    min_esd_j: f64,
    /// Seconds from ramp start until the fuel cell covers the load again.
    match_s: Option<f64>,
    t_s: Vec<f64>,
    demand_w: Vec<f64>,
    fuel_cell_w: Vec<f64>,
}

pub fn surge_sizing_json(base_w: f64, magnitude_w: f64, slope_w_per_s: f64, width_s: f64) -> Result<String> {
    let s = spec(base_w, magnitude_w, slope_w_per_s, width_s);
    let trace = gen_surge(&s, DT)?;
    let p = plant()?;
    let min_esd_j = min_esd_for_trace(&p, &trace.demand_w)?;

    let big = p.with_capacity(1e9);
    let mut state = big.initial_state(trace.demand_w[0])?;
    let mut out = Sizing { min_esd_j, match_s: None, t_s: vec![], demand_w: vec![], fuel_cell_w: vec![] };
    let mut opened = false;
    for (k, &d) in trace.demand_w.iter().enumerate() {
        state = big.step(&state, d)?;
        if d - state.fc.p_fc > SHORTFALL_TOLERANCE_W {
            opened = true;
        } else if opened && out.match_s.is_none() {
            out.match_s = Some((k + 1) as f64 * DT - s.pre_s);
        }
        if k % EVERY == 0 {
            out.t_s.push(k as f64 * DT);
            out.demand_w.push(d);
            out.fuel_cell_w.push(state.fc.p_fc);
        }
    }
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct Run {
    policy: String,
    capacity_j: f64,
    success_rate: f64,
    avg_latency_ms: f64,
    p95_latency_ms: f64,
    capped_periods: usize,
    shed_steps: usize,
    t_s: Vec<f64>,
    demand_w: Vec<f64>,
    served_w: Vec<f64>,
    fuel_cell_w: Vec<f64>,
    energy_j: Vec<f64>,
}

pub fn run_policy_json(
    policy: &str,
    capacity_frac: f64,
    base_w: f64,
    magnitude_w: f64,
    slope_w_per_s: f64,
    width_s: f64,
) -> Result<String> {
    let kind: Option<PolicyKind> = if policy.eq_ignore_ascii_case("none") { None } else { Some(policy.parse()?) };
    if !(capacity_frac.is_finite() && capacity_frac >= 0.0) {
        return Err(Error::InvalidArgument("capacity fraction must be >= 0".into()));
    }
    let trace = gen_surge(&spec(base_w, magnitude_w, slope_w_per_s, width_s), DT)?;
    let p = plant()?;
    let base = min_esd_for_trace(&p, &trace.demand_w)?;
    if !base.is_finite() {
        return Err(Error::Precondition("no storage size rides out this surge".into()));
    }
    let pl = p.with_capacity(capacity_frac * base);
    let w = Workload::from_trace(&trace, &RackConfig::default(), 1)?;
    let mut rec = MemoryRecorder::default();
    let r = simulate(&pl, &w, &SimSettings::default(), kind, Some(&mut rec))?;
    let rows = rec.steps.iter().step_by(EVERY);
    let out = Run {
        policy: kind.map_or("none".into(), |k| k.to_string()),
        capacity_j: r.capacity_j,
        success_rate: r.success_rate,
        avg_latency_ms: r.avg_latency_ms,
        p95_latency_ms: r.p95_latency_ms,
        capped_periods: r.capped_periods,
        shed_steps: r.shed_steps,
        t_s: rows.clone().map(|s| s.t_s).collect(),
        demand_w: rows.clone().map(|s| s.demand_w).collect(),
        served_w: rows.clone().map(|s| s.served_w).collect(),
        fuel_cell_w: rows.clone().map(|s| s.p_fc_w).collect(),
        energy_j: rows.map(|s| s.esd_energy_j).collect(),
    };
    Ok(serde_json::to_string(&out)?)
}

#[derive(Serialize)]
struct Point {
    fraction: f64,
    capacity_j: f64,
    unavailability: f64,
}

pub fn availability_json(
    base_w: f64,
    magnitude_w: f64,
    slope_w_per_s: f64,
    width_s: f64,
    points: usize,
) -> Result<String> {
    let points = points.clamp(2, 101);
    let trace = gen_surge(&spec(base_w, magnitude_w, slope_w_per_s, width_s), DT)?;
    let p = plant()?;
    let base = min_esd_for_trace(&p, &trace.demand_w)?;
    if !base.is_finite() {
        return Err(Error::Precondition("no storage size rides out this surge".into()));
    }
    let fractions: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let caps: Vec<f64> = fractions.iter().map(|f| f * base).collect();
    let curve: Vec<Point> = availability_sweep(&p, &trace.demand_w, &caps)?
        .into_iter()
        .zip(fractions)
        .map(|((capacity_j, unavailability), fraction)| Point { fraction, capacity_j, unavailability })
        .collect();
    Ok(serde_json::to_string(&curve)?)
}

fn js(r: Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn surge_sizing(base_w: f64, magnitude_w: f64, slope_w_per_s: f64, width_s: f64) -> Result<String, JsError> {
    js(surge_sizing_json(base_w, magnitude_w, slope_w_per_s, width_s))
}

#[wasm_bindgen]
pub fn run_policy(
    policy: &str,
    capacity_frac: f64,
    base_w: f64,
    magnitude_w: f64,
    slope_w_per_s: f64,
    width_s: f64,
) -> Result<String, JsError> {
    js(run_policy_json(policy, capacity_frac, base_w, magnitude_w, slope_w_per_s, width_s))
}

#[wasm_bindgen]
pub fn availability(
    base_w: f64,
    magnitude_w: f64,
    slope_w_per_s: f64,
    width_s: f64,
    points: usize,
) -> Result<String, JsError> {
    js(availability_json(base_w, magnitude_w, slope_w_per_s, width_s, points))
}
