//! Supercapacitor energy accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_YEAR: f64 = 365.0 * 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsdParams {
    /// Total capacity. Zero means the rack runs without storage.
    pub capacity_j: f64,
    pub eta: f64,
    /// Fraction of capacity kept in reserve for UPS duty.
    pub e_min_fraction: f64,
    pub recharge_draw_w: f64,
    /// The controller reads energy rounded down to this fraction of capacity.
    pub measure_precision_fraction: f64,
    /// `None` means the device is not power-limited.
    pub max_discharge_w: Option<f64>,
    /// Rated charge/discharge cycles.
    pub cycle_budget: f64,
}

impl Default for EsdParams {
    fn default() -> Self {
        EsdParams {
            capacity_j: 100_000.0,
            eta: 0.95,
            e_min_fraction: 0.20,
            recharge_draw_w: 1000.0,
            measure_precision_fraction: 0.01,
            max_discharge_w: None,
            cycle_budget: 1_000_000.0,
        }
    }
}

impl EsdParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.capacity_j.is_finite()
            && self.capacity_j >= 0.0
            && self.eta > 0.0
            && self.eta <= 1.0
            && (0.0..1.0).contains(&self.e_min_fraction)
            && self.recharge_draw_w >= 0.0
            && self.measure_precision_fraction > 0.0
            && self.measure_precision_fraction <= 1.0
            && self.cycle_budget > 0.0
            && self.max_discharge_w.is_none_or(|w| w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("inconsistent storage parameters: {self:?}")))
        }
    }

    pub fn e_min(&self) -> f64 {
        self.e_min_fraction * self.capacity_j
    }

    /// Resolution of the energy measurement.
    pub fn quantum(&self) -> f64 {
        self.measure_precision_fraction * self.capacity_j
    }

    pub fn with_capacity(&self, capacity_j: f64) -> EsdParams {
        EsdParams { capacity_j, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsdState {
    pub energy_j: f64,
    /// Energy removed from the store by discharging (delivered / eta).
    pub discharged_total_j: f64,
    /// Energy handed to the load.
    pub delivered_total_j: f64,
    /// Energy drawn from the fuel cell for recharging.
    pub drawn_total_j: f64,
    /// Number of times a recharge started.
    pub charge_events: u64,
    charging: bool,
}

impl EsdState {
    pub fn full(params: &EsdParams) -> Self {
        Self::with_energy(params.capacity_j)
    }

    pub fn with_energy(energy_j: f64) -> Self {
        EsdState {
            energy_j,
            discharged_total_j: 0.0,
            delivered_total_j: 0.0,
            drawn_total_j: 0.0,
            charge_events: 0,
            charging: false,
        }
    }

    pub fn is_charging(&self) -> bool {
        self.charging
    }

    /// Covers up to `requested_w` for one step; returns the power delivered.
    pub fn discharge(&mut self, params: &EsdParams, requested_w: f64, dt: f64) -> f64 {
        self.charging = false;
        let e_min = params.e_min();
        let usable_w = params.eta * (self.energy_j - e_min).max(0.0) / dt;
        let cap_w = params.max_discharge_w.unwrap_or(f64::INFINITY);
        let delivered = requested_w.max(0.0).min(cap_w);
        if delivered <= 0.0 {
            return 0.0;
        }
        let (delivered, removed) = if delivered >= usable_w {
            // Saturate exactly on the floor instead of accumulating rounding.
            (usable_w, self.energy_j - e_min)
        } else {
            (delivered, delivered * dt / params.eta)
        };
        if removed <= 0.0 {
            return 0.0;
        }
        self.energy_j -= removed;
        if delivered == usable_w {
            self.energy_j = e_min;
        }
        self.discharged_total_j += removed;
        self.delivered_total_j += delivered * dt;
        delivered
    }

    /// Draws up to the configured recharge power out of `surplus_w` for one
    /// step; returns the power drawn. The draw is prorated when the store
    /// would overfill.
    pub fn recharge(&mut self, params: &EsdParams, surplus_w: f64, dt: f64) -> f64 {
        let room = params.capacity_j - self.energy_j;
        if room <= 0.0 || surplus_w <= 0.0 {
            self.charging = false;
            return 0.0;
        }
        let draw = params.recharge_draw_w.min(surplus_w);
        if draw <= 0.0 {
            self.charging = false;
            return 0.0;
        }
        if !self.charging {
            self.charge_events += 1;
            self.charging = true;
        }
        let stored = params.eta * draw * dt;
        let drawn = if stored >= room {
            self.energy_j = params.capacity_j;
            room / (params.eta * dt)
        } else {
            self.energy_j += stored;
            draw
        };
        self.drawn_total_j += drawn * dt;
        drawn
    }

    /// Energy as the controller sees it: rounded down to the measurement grid.
    pub fn measured_energy(&self, params: &EsdParams) -> f64 {
        measured_energy(self.energy_j, params)
    }

    /// Years until the cycle budget is spent at this run's discharge rate.
    pub fn lifetime_years(&self, params: &EsdParams, sim_duration_s: f64) -> Result<Lifetime> {
        if !(sim_duration_s > 0.0) {
            return Err(Error::InvalidArgument("simulation duration must be > 0".into()));
        }
        let usable = params.capacity_j - params.e_min();
        if usable <= 0.0 || self.discharged_total_j <= 0.0 {
            return Ok(Lifetime::Unbounded);
        }
        let cycles = self.discharged_total_j / usable;
        let per_year = cycles * SECONDS_PER_YEAR / sim_duration_s;
        Ok(Lifetime::Years(params.cycle_budget / per_year))
    }
}

pub fn measured_energy(energy_j: f64, params: &EsdParams) -> f64 {
    let q = params.quantum();
    if q <= 0.0 {
        return 0.0;
    }
    // The small bias keeps values a rounding error below a grid line on it.
    ((energy_j / q) + 1e-9).floor() * q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lifetime {
    Unbounded,
    Years(f64),
}

impl Lifetime {
    pub fn years(self) -> f64 {
        match self {
            Lifetime::Unbounded => f64::INFINITY,
            Lifetime::Years(y) => y,
        }
    }
}
