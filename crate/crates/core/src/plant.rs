//! Fuel cell + storage + rack wiring, stepped at a fixed `dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::esd::{measured_energy, EsdParams, EsdState};
use crate::fuelcell::{FuelCellModel, FuelCellParams, FuelCellState, SHORTFALL_TOLERANCE_W};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub fc: FuelCellState,
    pub esd: EsdState,
    pub t_s: f64,
    pub step: u64,
    /// Power the rack actually consumed in the last step.
    pub last_rack_power_w: f64,
    /// Unmet power after storage, zero unless storage sits on its floor.
    pub shortfall_w: f64,
    pub esd_delivered_w: f64,
    pub esd_drawn_w: f64,
    /// Whether the last step needed storage to cover a gap; recharge waits
    /// until a step without one.
    pub deficit: bool,
}

/// Fuel cell and storage bound to a step size.
#[derive(Debug, Clone)]
pub struct Plant {
    fc: FuelCellModel,
    esd: EsdParams,
}

impl Plant {
    pub fn new(fc_params: FuelCellParams, esd_params: EsdParams, dt: f64) -> Result<Self> {
        esd_params.validate()?;
        Ok(Plant { fc: FuelCellModel::new(fc_params, dt)?, esd: esd_params })
    }

    pub fn dt(&self) -> f64 {
        self.fc.dt()
    }

    pub fn fuel_cell(&self) -> &FuelCellModel {
        &self.fc
    }

    pub fn fc_params(&self) -> &FuelCellParams {
        self.fc.params()
    }

    pub fn esd_params(&self) -> &EsdParams {
        &self.esd
    }

    /// Same fuel cell with a different storage capacity.
    pub fn with_capacity(&self, capacity_j: f64) -> Plant {
        Plant { fc: self.fc.clone(), esd: self.esd.with_capacity(capacity_j) }
    }

    /// Fuel cell settled at `demand_w`, storage full.
    pub fn initial_state(&self, demand_w: f64) -> Result<PlantState> {
        Ok(PlantState {
            fc: self.fc.steady_state(demand_w)?,
            esd: EsdState::full(&self.esd),
            t_s: 0.0,
            step: 0,
            last_rack_power_w: demand_w,
            shortfall_w: 0.0,
            esd_delivered_w: 0.0,
            esd_drawn_w: 0.0,
            deficit: false,
        })
    }

    /// Whether the next step draws recharge power, given whether the rack
    /// is running uncapped (the storage controller's go-ahead).
    pub fn recharging(&self, state: &PlantState, allowed: bool) -> bool {
        allowed && state.esd.energy_j < self.esd.capacity_j && !state.deficit
    }

    /// Advances one step with the rack drawing `demand_w`, recharge
    /// permitted. Unmet power is reported in `shortfall_w` once it exceeds
    /// the numeric tolerance.
    pub fn step(&self, state: &PlantState, demand_w: f64) -> Result<PlantState> {
        self.step_gated(state, demand_w, true)
    }

    /// [`Plant::step`] with recharge only when `recharge_allowed`; capped
    /// racks hold it off because their demand is not fully met.
    pub fn step_gated(&self, state: &PlantState, demand_w: f64, recharge_allowed: bool) -> Result<PlantState> {
        if !(demand_w.is_finite() && demand_w >= 0.0) {
            return Err(Error::InvalidArgument(format!("rack demand must be >= 0, got {demand_w}")));
        }
        let dt = self.dt();
        let draw = if self.recharging(state, recharge_allowed) { self.esd.recharge_draw_w } else { 0.0 };
        let fc = self.fc.step(&state.fc, demand_w + draw)?;
        let mut esd = state.esd;
        let gap = demand_w - fc.p_fc;
        let (delivered, drawn, shortfall) = if gap > 0.0 {
            let delivered = esd.discharge(&self.esd, gap, dt);
            let unmet = gap - delivered;
            (delivered, 0.0, if unmet > SHORTFALL_TOLERANCE_W { unmet } else { 0.0 })
        } else {
            (0.0, esd.recharge(&self.esd, -gap, dt), 0.0)
        };
        Ok(PlantState {
            fc,
            esd,
            t_s: (state.step + 1) as f64 * dt,
            step: state.step + 1,
            last_rack_power_w: demand_w,
            shortfall_w: shortfall,
            esd_delivered_w: delivered,
            esd_drawn_w: drawn,
            deficit: gap > 0.0,
        })
    }

    /// Like [`Plant::step`], but when supply falls short the rack is
    /// throttled to what is available, which the fuel cell then sees as its
    /// load. Used by capped runs, where servers are throttled instead of
    /// crashing. `last_rack_power_w` holds the power actually served and
    /// `shortfall_w` the amount shed.
    pub fn step_shedding(&self, state: &PlantState, demand_w: f64, recharge_allowed: bool) -> Result<PlantState> {
        let first = self.step_gated(state, demand_w, recharge_allowed)?;
        if first.shortfall_w <= 0.0 {
            return Ok(first);
        }
        let mut served = demand_w;
        let mut next = first;
        for _ in 0..4 {
            if next.shortfall_w <= 0.0 {
                break;
            }
            served = (served - next.shortfall_w).max(0.0);
            next = self.step_gated(state, served, recharge_allowed)?;
        }
        // Whatever still cannot be covered is shed as well.
        served = (served - next.shortfall_w).max(0.0);
        next.last_rack_power_w = served;
        next.shortfall_w = demand_w - served;
        Ok(next)
    }

    /// Predicted stored energy at the end of each capping period if the rack
    /// drew exactly `budgets[k]` throughout period `k`, starting from the
    /// measured (quantized) energy. A run that would leave load unserved is
    /// reported below the floor by the unserved energy, so callers can use
    /// `prediction >= e_min` as the whole feasibility test.
    pub fn predict_energy(&self, state: &PlantState, budgets: &[f64], steps_per_period: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(budgets.len());
        self.predict_with(state, budgets, steps_per_period, |_, e| {
            out.push(e);
            true
        })?;
        Ok(out)
    }

    /// Rolls the prediction forward and hands `(period, energy)` to `visit`
    /// after each period; stops early when `visit` returns false. Returns
    /// the state after the last simulated period.
    pub fn predict_with(
        &self,
        state: &PlantState,
        budgets: &[f64],
        steps_per_period: usize,
        mut visit: impl FnMut(usize, f64) -> bool,
    ) -> Result<PlantState> {
        let mut s = *state;
        s.esd.energy_j = measured_energy(s.esd.energy_j, &self.esd);
        let mut unserved_j = 0.0;
        let dt = self.dt();
        for (k, &b) in budgets.iter().enumerate() {
            for _ in 0..steps_per_period {
                s = self.step(&s, b)?;
                unserved_j += s.shortfall_w * dt;
            }
            if !visit(k, self.virtual_energy(&s, unserved_j)) {
                break;
            }
        }
        Ok(s)
    }

    fn virtual_energy(&self, s: &PlantState, unserved_j: f64) -> f64 {
        if unserved_j > 0.0 {
            s.esd.energy_j.min(self.esd.e_min()) - unserved_j / self.esd.eta
        } else {
            s.esd.energy_j
        }
    }

    /// Continues a prediction from an intermediate state, accumulating the
    /// unserved energy carried in from earlier periods.
    pub(crate) fn predict_period(
        &self,
        s: &PlantState,
        budget: f64,
        steps_per_period: usize,
        recharge_allowed: bool,
        unserved_j: &mut f64,
    ) -> Result<(PlantState, f64)> {
        let mut s = *s;
        let dt = self.dt();
        for _ in 0..steps_per_period {
            s = self.step_gated(&s, budget, recharge_allowed)?;
            *unserved_j += s.shortfall_w * dt;
        }
        let e = self.virtual_energy(&s, *unserved_j);
        Ok((s, e))
    }

    /// Starting state for a prediction: energy replaced by its measurement.
    pub(crate) fn measured_start(&self, state: &PlantState) -> PlantState {
        let mut s = *state;
        s.esd.energy_j = measured_energy(s.esd.energy_j, &self.esd);
        s
    }
}

/// Outcome of one uncapped pass over a demand series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncappedOutcome {
    pub steps: usize,
    pub shortfall_steps: usize,
    pub unserved_j: f64,
    pub min_energy_j: f64,
}

impl UncappedOutcome {
    pub fn unavailable_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.shortfall_steps as f64 / self.steps as f64
        }
    }
}

/// Runs the plant over `demand` without any capping. With `stop_at_first`
/// the run ends at the first shortfall, which is all a feasibility probe
/// needs.
pub fn run_uncapped(plant: &Plant, demand: &[f64], stop_at_first: bool) -> Result<UncappedOutcome> {
    let first = demand.first().copied().ok_or_else(|| Error::InvalidArgument("demand series is empty".into()))?;
    let mut s = plant.initial_state(first)?;
    let mut out =
        UncappedOutcome { steps: demand.len(), shortfall_steps: 0, unserved_j: 0.0, min_energy_j: s.esd.energy_j };
    for &d in demand {
        s = plant.step(&s, d)?;
        out.min_energy_j = out.min_energy_j.min(s.esd.energy_j);
        if s.shortfall_w > 0.0 {
            out.shortfall_steps += 1;
            out.unserved_j += s.shortfall_w * plant.dt();
            if stop_at_first {
                break;
            }
        }
    }
    Ok(out)
}

/// Unavailable fraction of an uncapped run at each capacity.
pub fn availability_sweep(plant: &Plant, demand: &[f64], capacities_j: &[f64]) -> Result<Vec<(f64, f64)>> {
    if capacities_j.is_empty() {
        return Err(Error::InvalidArgument("capacity list is empty".into()));
    }
    if demand.is_empty() {
        return Err(Error::InvalidArgument("trace is empty".into()));
    }
    let eval = |&c: &f64| -> Result<(f64, f64)> {
        let out = run_uncapped(&plant.with_capacity(c), demand, false)?;
        Ok((c, out.unavailable_fraction()))
    };
    crate::par::map(capacities_j, eval).into_iter().collect()
}

/// Capacity search grid resolution.
pub const CAPACITY_RESOLUTION_J: f64 = 100.0;
/// Largest capacity tried before reporting the trace as unservable.
pub const CAPACITY_CEILING_J: f64 = 1e10;

/// Smallest capacity on the 0.1 kJ grid with no shortfall over the trace
/// and whose measured energy never reads at the floor, or infinity when even
/// the ceiling fails. The second condition keeps a controller that only sees
/// the quantized reading from mistaking the store for exhausted.
pub fn min_esd_for_trace(plant: &Plant, demand: &[f64]) -> Result<f64> {
    let feasible = |units: u64| -> Result<bool> {
        let c = units as f64 * CAPACITY_RESOLUTION_J;
        let p = plant.with_capacity(c);
        let out = run_uncapped(&p, demand, true)?;
        if out.shortfall_steps > 0 {
            return Ok(false);
        }
        let esd = p.esd_params();
        Ok(c == 0.0 || crate::esd::measured_energy(out.min_energy_j, esd) > esd.e_min())
    };
    if demand.is_empty() {
        return Err(Error::InvalidArgument("trace is empty".into()));
    }
    if feasible(0)? {
        return Ok(0.0);
    }
    let ceiling = (CAPACITY_CEILING_J / CAPACITY_RESOLUTION_J) as u64;
    let (mut bad, mut good) = (0u64, 1024u64);
    while !feasible(good)? {
        bad = good;
        if good >= ceiling {
            return Ok(f64::INFINITY);
        }
        good = (good * 2).min(ceiling);
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if feasible(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good as f64 * CAPACITY_RESOLUTION_J)
}
