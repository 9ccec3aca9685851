//! Fuel-cell system model: utilization controller, fuel processor and stack.
//!
//! All first-order lags are discretized with a zero-order hold, so a step of
//! `dt` is exact for inputs held constant over that step and results do not
//! depend on how a time span is partitioned.

use serde::{Deserialize, Serialize};

use crate::error::{CalibrationProbe, Channel, Error, Result};

pub const GAS_CONSTANT: f64 = 8.314_462_618;
pub const FARADAY: f64 = 96_485.332_12;

/// Watts of unmet load below which a gap is treated as numeric noise, e.g.
/// the residual of the per-step current solve on a ramping load.
pub const SHORTFALL_TOLERANCE_W: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuelCellParams {
    pub n_cells_series: u32,
    pub e0_volts: f64,
    pub gas_const: f64,
    pub faraday: f64,
    pub stack_temp_k: f64,
    pub r_ohmic: f64,
    /// Molar conversion coefficient, mol/(s*A).
    pub k_r: f64,
    pub u_opt: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Fuel-processor time constant.
    pub t_f_s: f64,
    /// Hydrogen to oxygen flow ratio.
    pub r_h_o: f64,
    pub k_h2: f64,
    pub k_o2: f64,
    pub k_h2o: f64,
    pub t_h2_s: f64,
    pub t_o2_s: f64,
    pub t_h2o_s: f64,
    /// Operating-point pressures; the lagged deviations ride on top of these.
    pub baseline_p_h2: f64,
    pub baseline_p_o2: f64,
    pub baseline_p_h2o: f64,
    pub rated_power_w: f64,
    pub load_following_w_per_s: f64,
}

impl Default for FuelCellParams {
    fn default() -> Self {
        let n_cells_series = 200;
        FuelCellParams {
            n_cells_series,
            e0_volts: 1.0,
            gas_const: GAS_CONSTANT,
            faraday: FARADAY,
            stack_temp_k: 343.15,
            r_ohmic: 0.02,
            k_r: n_cells_series as f64 / (4.0 * FARADAY),
            u_opt: 0.82,
            u_min: 0.7,
            u_max: 0.87,
            t_f_s: CALIBRATED_T_F_S,
            r_h_o: 1.145,
            k_h2: 0.02,
            k_o2: 0.05,
            k_h2o: 0.15,
            t_h2_s: 26.1,
            t_o2_s: 2.91,
            t_h2o_s: 78.3,
            baseline_p_h2: 1.0,
            baseline_p_o2: 1.0,
            baseline_p_h2o: 1.0,
            rated_power_w: 12_500.0,
            load_following_w_per_s: 16.0,
        }
    }
}

/// Fuel-processor time constant produced by running the calibration on the
/// default parameter set against a 16 W/s target over 5.6-12.5 kW.
pub const CALIBRATED_T_F_S: f64 = 24.790_341_208_423_28;

impl FuelCellParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.n_cells_series < 1 {
            return bad("n_cells_series must be at least 1");
        }
        if !(0.0 < self.u_min && self.u_min < self.u_opt && self.u_opt < self.u_max && self.u_max <= 1.0) {
            return bad("utilization must satisfy 0 < u_min < u_opt < u_max <= 1");
        }
        let positive = [
            ("k_r", self.k_r),
            ("r_ohmic", self.r_ohmic),
            ("t_f_s", self.t_f_s),
            ("r_h_o", self.r_h_o),
            ("k_h2", self.k_h2),
            ("k_o2", self.k_o2),
            ("k_h2o", self.k_h2o),
            ("t_h2_s", self.t_h2_s),
            ("t_o2_s", self.t_o2_s),
            ("t_h2o_s", self.t_h2o_s),
            ("baseline_p_h2", self.baseline_p_h2),
            ("baseline_p_o2", self.baseline_p_o2),
            ("baseline_p_h2o", self.baseline_p_h2o),
            ("stack_temp_k", self.stack_temp_k),
            ("gas_const", self.gas_const),
            ("faraday", self.faraday),
            ("e0_volts", self.e0_volts),
            ("rated_power_w", self.rated_power_w),
            ("load_following_w_per_s", self.load_following_w_per_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Current bounds the stack can safely carry for a given hydrogen flow.
    pub fn safe_current_bounds(&self, q_h2: f64) -> (f64, f64) {
        let per_amp = 2.0 * self.k_r;
        (self.u_min * q_h2 / per_amp, self.u_max * q_h2 / per_amp)
    }

    fn nernst_slope(&self) -> f64 {
        self.gas_const * self.stack_temp_k / (2.0 * self.faraday)
    }

    /// Stack terminal voltage for the given absolute pressures and current.
    pub fn stack_voltage(&self, p_h2: f64, p_o2: f64, p_h2o: f64, i_fc: f64) -> f64 {
        let n0 = self.n_cells_series as f64;
        n0 * (self.e0_volts + self.nernst_slope() * (p_h2 * p_o2.sqrt() / p_h2o).ln()) - self.r_ohmic * i_fc
    }

    /// Steady-state absolute pressures for constant flows and current.
    pub fn steady_pressures(&self, q_h2: f64, q_o2: f64, i_fc: f64) -> (f64, f64, f64) {
        (
            self.baseline_p_h2 + (q_h2 - 2.0 * self.k_r * i_fc) / self.k_h2,
            self.baseline_p_o2 + (q_o2 - self.k_r * i_fc) / self.k_o2,
            self.baseline_p_h2o + (-2.0 * self.k_r * i_fc) / self.k_h2o,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelCellState {
    pub p_h2: f64,
    pub p_o2: f64,
    pub p_h2o: f64,
    pub q_h2: f64,
    pub q_o2: f64,
    pub q_h2_set: f64,
    pub i_fc: f64,
    pub v_fc: f64,
    pub p_fc: f64,
}

/// `1 - exp(-dt/tau)`: the fraction of the remaining gap a first-order lag
/// closes in one held step.
#[inline]
pub fn lag_gain(dt: f64, tau: f64) -> f64 {
    -(-dt / tau).exp_m1()
}

/// Demanded current and hydrogen set point for a requested load, using the
/// previous step's voltage.
pub fn controller_step(params: &FuelCellParams, state: &FuelCellState, p_load: f64) -> Result<(f64, f64)> {
    if !p_load.is_finite() || p_load < 0.0 {
        return Err(Error::InvalidState(format!("load must be finite and >= 0, got {p_load}")));
    }
    if !(state.v_fc.is_finite() && state.v_fc > 0.0) {
        return Err(Error::InvalidState(format!("stack voltage must be > 0, got {}", state.v_fc)));
    }
    let i_demand = p_load / state.v_fc;
    let (lo, hi) = params.safe_current_bounds(state.q_h2);
    let i_fc = i_demand.max(lo).min(hi);
    let q_h2_set = (2.0 * params.k_r / params.u_opt * i_demand).max(0.0);
    Ok((i_fc, q_h2_set))
}

/// Advances the fuel-processor lag; returns the new (hydrogen, oxygen) flows.
pub fn processor_step(params: &FuelCellParams, state: &FuelCellState, dt: f64) -> (f64, f64) {
    processor_with_gain(params, state, lag_gain(dt, params.t_f_s))
}

fn processor_with_gain(params: &FuelCellParams, state: &FuelCellState, gain: f64) -> (f64, f64) {
    let q_h2 = state.q_h2 + gain * (state.q_h2_set - state.q_h2);
    (q_h2, q_h2 / params.r_h_o)
}

/// Advances the three pressure channels with flows and current held, then
/// evaluates voltage and power.
pub fn stack_step(params: &FuelCellParams, state: &FuelCellState, dt: f64) -> Result<FuelCellState> {
    let gains = StackGains {
        h2: lag_gain(dt, params.t_h2_s),
        o2: lag_gain(dt, params.t_o2_s),
        h2o: lag_gain(dt, params.t_h2o_s),
    };
    stack_with_gains(params, state, &gains)
}

#[derive(Debug, Clone, Copy)]
struct StackGains {
    h2: f64,
    o2: f64,
    h2o: f64,
}

fn stack_with_gains(params: &FuelCellParams, state: &FuelCellState, g: &StackGains) -> Result<FuelCellState> {
    let (t_h2, t_o2, t_h2o) = params.steady_pressures(state.q_h2, state.q_o2, state.i_fc);
    let p_h2 = state.p_h2 + g.h2 * (t_h2 - state.p_h2);
    let p_o2 = state.p_o2 + g.o2 * (t_o2 - state.p_o2);
    let p_h2o = state.p_h2o + g.h2o * (t_h2o - state.p_h2o);
    for (channel, value_atm) in [(Channel::Hydrogen, p_h2), (Channel::Oxygen, p_o2), (Channel::Water, p_h2o)] {
        if !(value_atm > 0.0) {
            return Err(Error::ModelDivergence { channel, value_atm });
        }
    }
    let v_fc = params.stack_voltage(p_h2, p_o2, p_h2o, state.i_fc);
    if !(v_fc > 0.0) {
        return Err(Error::InvalidState(format!("stack voltage collapsed to {v_fc} V at {} A", state.i_fc)));
    }
    Ok(FuelCellState { p_h2, p_o2, p_h2o, v_fc, p_fc: v_fc * state.i_fc, ..*state })
}

/// Parameter set bound to a fixed step, with the lag gains precomputed.
#[derive(Debug, Clone)]
pub struct FuelCellModel {
    params: FuelCellParams,
    dt: f64,
    processor_gain: f64,
    stack_gains: StackGains,
}

const CURRENT_SOLVE_ITERS: usize = 6;
const CURRENT_SOLVE_TOL_W: f64 = 1e-3;

impl FuelCellModel {
    pub fn new(params: FuelCellParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        Ok(FuelCellModel {
            processor_gain: lag_gain(dt, params.t_f_s),
            stack_gains: StackGains {
                h2: lag_gain(dt, params.t_h2_s),
                o2: lag_gain(dt, params.t_o2_s),
                h2o: lag_gain(dt, params.t_h2o_s),
            },
            params,
            dt,
        })
    }

    pub fn params(&self) -> &FuelCellParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One full step: set point from the demand, processor lag, current clamp
    /// against the updated flow, then the stack. The current is re-solved
    /// against the voltage it produces, so a load step is not undershot by
    /// the instantaneous ohmic drop.
    pub fn step(&self, state: &FuelCellState, p_load: f64) -> Result<FuelCellState> {
        let p = &self.params;
        let (_, q_h2_set) = controller_step(p, state, p_load)?;
        let mut next = FuelCellState { q_h2_set, ..*state };
        let (q_h2, q_o2) = processor_with_gain(p, &next, self.processor_gain);
        next.q_h2 = q_h2;
        next.q_o2 = q_o2;
        let (mut i_fc, _) = controller_step(p, &next, p_load)?;
        let mut out = stack_with_gains(p, &FuelCellState { i_fc, ..next }, &self.stack_gains)?;
        for _ in 0..CURRENT_SOLVE_ITERS {
            if (out.p_fc - p_load).abs() <= CURRENT_SOLVE_TOL_W {
                break;
            }
            let (i, _) = controller_step(p, &FuelCellState { v_fc: out.v_fc, ..next }, p_load)?;
            if i == i_fc {
                break;
            }
            i_fc = i;
            out = stack_with_gains(p, &FuelCellState { i_fc, ..next }, &self.stack_gains)?;
        }
        Ok(out)
    }

    /// Equilibrium state delivering `p_load` with flows at the optimal
    /// utilization. Found by fixed-point iteration on the current.
    pub fn steady_state(&self, p_load: f64) -> Result<FuelCellState> {
        steady_state(&self.params, p_load)
    }
}

pub fn steady_state(p: &FuelCellParams, p_load: f64) -> Result<FuelCellState> {
    if !(p_load.is_finite() && p_load >= 0.0) {
        return Err(Error::InvalidArgument(format!("load must be finite and >= 0, got {p_load}")));
    }
    let eval = |i: f64| -> Result<FuelCellState> {
        let q_h2 = 2.0 * p.k_r / p.u_opt * i;
        let q_o2 = q_h2 / p.r_h_o;
        let (p_h2, p_o2, p_h2o) = p.steady_pressures(q_h2, q_o2, i);
        for (channel, value_atm) in [(Channel::Hydrogen, p_h2), (Channel::Oxygen, p_o2), (Channel::Water, p_h2o)] {
            if !(value_atm > 0.0) {
                return Err(Error::ModelDivergence { channel, value_atm });
            }
        }
        let v_fc = p.stack_voltage(p_h2, p_o2, p_h2o, i);
        Ok(FuelCellState { p_h2, p_o2, p_h2o, q_h2, q_o2, q_h2_set: q_h2, i_fc: i, v_fc, p_fc: v_fc * i })
    };
    let mut state = eval(0.0)?;
    if p_load == 0.0 {
        return Ok(state);
    }
    for _ in 0..500 {
        if !(state.v_fc > 0.0) {
            break;
        }
        let i = p_load / state.v_fc;
        let next = eval(i)?;
        let done = (next.i_fc - state.i_fc).abs() <= 1e-12 * next.i_fc.max(1.0);
        state = next;
        if done {
            return Ok(state);
        }
    }
    Err(Error::InvalidState(format!("no steady operating point for {p_load} W")))
}

/// Result of the calibration search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationLog {
    pub target_w_per_s: f64,
    pub achieved_w_per_s: f64,
    pub probes: Vec<CalibrationProbe>,
}

/// Largest ramp slope (W/s, 0.01 W/s resolution) the stack follows without
/// shortfall from any start point in the range up to its top. Ramps start
/// from several bases across the range; lower bases are the hardest.
pub fn max_following_slope(params: &FuelCellParams, range: (f64, f64), dt: f64) -> Result<f64> {
    let model = FuelCellModel::new(params.clone(), dt)?;
    let (lo, hi) = range;
    let bases: Vec<f64> = (0..4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect();
    let follows = |slope: f64| -> Result<bool> {
        for &base in &bases {
            if ramp_shortfall(&model, base, hi, slope)? > SHORTFALL_TOLERANCE_W {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut ok, mut bad) = (0.5, 2000.0);
    if !follows(ok)? {
        return Ok(0.0);
    }
    if follows(bad)? {
        return Ok(bad);
    }
    while bad - ok > 0.01 {
        let mid = 0.5 * (ok + bad);
        if follows(mid)? {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(ok)
}

/// Peak unmet power while ramping from `base` to `top` at `slope` and then
/// holding the top for a few seconds.
pub fn ramp_shortfall(model: &FuelCellModel, base: f64, top: f64, slope: f64) -> Result<f64> {
    let dt = model.dt();
    let mut state = model.steady_state(base)?;
    let ramp_steps = ((top - base) / slope / dt).ceil() as usize;
    let hold_steps = (5.0 / dt).ceil() as usize;
    let mut worst: f64 = 0.0;
    for k in 1..=ramp_steps + hold_steps {
        let load = (base + slope * k as f64 * dt).min(top);
        state = model.step(&state, load)?;
        worst = worst.max(load - state.p_fc);
    }
    Ok(worst)
}

/// Fits the fuel-processor time constant so the shortfall-free ramp slope
/// over `range` lands on the configured load-following rate (never below it,
/// at most 5% above). Parameters already inside that band come back as is.
pub fn calibrate_load_following(
    params: &FuelCellParams,
    range: (f64, f64),
    dt: f64,
) -> Result<(FuelCellParams, CalibrationLog)> {
    params.validate()?;
    let (lo, hi) = range;
    if !(lo > 0.0 && lo < hi && hi <= params.rated_power_w) {
        return Err(Error::InvalidArgument(format!(
            "operating range ({lo}, {hi}) must lie within (0, {}]",
            params.rated_power_w
        )));
    }
    let target = params.load_following_w_per_s;
    let band = target * 1.05;
    let mut probes = Vec::new();
    let probe = |t_f_s: f64, probes: &mut Vec<CalibrationProbe>| -> Result<f64> {
        let trial = FuelCellParams { t_f_s, ..params.clone() };
        let s = max_following_slope(&trial, range, dt)?;
        probes.push(CalibrationProbe { t_f_s, max_slope_w_per_s: s });
        Ok(s)
    };

    let current = probe(params.t_f_s, &mut probes)?;
    if current >= target && current <= band {
        return Ok((params.clone(), CalibrationLog { target_w_per_s: target, achieved_w_per_s: current, probes }));
    }

    // Slope falls as the processor slows, so search for the slowest
    // processor that still follows the target.
    let (mut fast, mut slow) = (0.05, 5000.0);
    let s_fast = probe(fast, &mut probes)?;
    let s_slow = probe(slow, &mut probes)?;
    if s_fast < target || s_slow >= target {
        return Err(Error::CalibrationInfeasible {
            reason: format!(
                "cannot bracket {target} W/s: T_f={fast} s gives {s_fast:.2} W/s, T_f={slow} s gives {s_slow:.2} W/s"
            ),
            probes,
        });
    }
    let mut achieved = s_fast;
    for _ in 0..80 {
        let mid = (fast * slow).sqrt();
        let s = probe(mid, &mut probes)?;
        if s >= target {
            fast = mid;
            achieved = s;
            if s <= band {
                break;
            }
        } else {
            slow = mid;
        }
        if slow / fast < 1.0 + 1e-9 {
            break;
        }
    }
    if !(achieved >= target && achieved <= band) {
        return Err(Error::CalibrationInfeasible {
            reason: format!("best probe reached {achieved:.2} W/s, outside [{target}, {band}]"),
            probes,
        });
    }
    Ok((
        FuelCellParams { t_f_s: fast, ..params.clone() },
        CalibrationLog { target_w_per_s: target, achieved_w_per_s: achieved, probes },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_at(p: &FuelCellParams, load: f64) -> FuelCellState {
        steady_state(p, load).unwrap()
    }

    #[test]
    fn zero_load_clamps_to_lower_bound() {
        let p = FuelCellParams::default();
        let s = state_at(&p, 6000.0);
        let (i, q) = controller_step(&p, &s, 0.0).unwrap();
        assert_eq!(i, p.u_min * s.q_h2 / (2.0 * p.k_r));
        assert_eq!(q, 0.0);
    }

    #[test]
    fn unclamped_current_is_power_over_voltage() {
        let p = FuelCellParams::default();
        let q_h2 = 2.0 * p.k_r * 10.0 / p.u_opt;
        let s = FuelCellState { v_fc: 100.0, q_h2, ..state_at(&p, 1000.0) };
        let (i, _) = controller_step(&p, &s, 1000.0).unwrap();
        assert_eq!(i, 10.0);
    }

    #[test]
    fn clamps_at_safe_upper_current() {
        let p = FuelCellParams::default();
        // Flow chosen so the upper bound is exactly 50 A.
        let q_h2 = 50.0 * 2.0 * p.k_r / p.u_max;
        let s = FuelCellState { v_fc: 100.0, q_h2, ..state_at(&p, 1000.0) };
        let (i, q_set) = controller_step(&p, &s, 10_000.0).unwrap();
        assert!((i - 50.0).abs() < 1e-9);
        assert!((q_set - 2.0 * p.k_r / p.u_opt * 100.0).abs() < 1e-15);
    }

    #[test]
    fn controller_rejects_bad_inputs() {
        let p = FuelCellParams::default();
        let s = state_at(&p, 1000.0);
        assert!(controller_step(&p, &s, f64::NAN).is_err());
        let dead = FuelCellState { v_fc: 0.0, ..s };
        assert!(matches!(controller_step(&p, &dead, 10.0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn processor_fixed_point_and_step_response() {
        let p = FuelCellParams::default();
        let s = FuelCellState { q_h2: 0.3, q_h2_set: 0.3, ..state_at(&p, 1000.0) };
        assert_eq!(processor_step(&p, &s, 0.1).0, 0.3);

        let s = FuelCellState { q_h2: 0.0, q_h2_set: 1.0, ..s };
        let (q, q_o2) = processor_step(&p, &s, p.t_f_s);
        assert!((q - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(q_o2, q / p.r_h_o);

        let mut s = s;
        for _ in 0..10 {
            s.q_h2 = processor_step(&p, &s, p.t_f_s / 10.0).0;
        }
        assert!((s.q_h2 - (1.0 - (-1.0f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn unity_log_argument_gives_open_circuit_minus_ohmic() {
        let p = FuelCellParams::default();
        let v = p.stack_voltage(1.3, 1.0, 1.3, 40.0);
        let expect = p.n_cells_series as f64 * p.e0_volts - p.r_ohmic * 40.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_current_zero_flow_is_equilibrium() {
        let p = FuelCellParams::default();
        let s = FuelCellState {
            p_h2: p.baseline_p_h2,
            p_o2: p.baseline_p_o2,
            p_h2o: p.baseline_p_h2o,
            q_h2: 0.0,
            q_o2: 0.0,
            q_h2_set: 0.0,
            i_fc: 0.0,
            v_fc: 1.0,
            p_fc: 0.0,
        };
        let next = stack_step(&p, &s, 0.1).unwrap();
        assert_eq!((next.p_h2, next.p_o2, next.p_h2o), (s.p_h2, s.p_o2, s.p_h2o));
        let ocv = p.stack_voltage(p.baseline_p_h2, p.baseline_p_o2, p.baseline_p_h2o, 0.0);
        assert_eq!(next.v_fc, ocv);
        assert_eq!(next.p_fc, 0.0);
    }

    #[test]
    fn held_current_matches_fine_step_reference() {
        let p = FuelCellParams::default();
        let mut s = state_at(&p, 3000.0);
        s.i_fc = 50.0;
        let mut coarse = s;
        for _ in 0..100 {
            coarse = stack_step(&p, &coarse, 0.1).unwrap();
        }
        // Independent oracle: explicit Euler on the pressure ODEs at 1 ms.
        let (t_h2, t_o2, t_h2o) = p.steady_pressures(s.q_h2, s.q_o2, s.i_fc);
        let (mut a, mut b, mut c) = (s.p_h2, s.p_o2, s.p_h2o);
        let h = 1e-3;
        for _ in 0..10_000 {
            a += h * (t_h2 - a) / p.t_h2_s;
            b += h * (t_o2 - b) / p.t_o2_s;
            c += h * (t_h2o - c) / p.t_h2o_s;
        }
        let v = p.stack_voltage(a, b, c, 50.0);
        for (x, y) in [(coarse.p_h2, a), (coarse.p_o2, b), (coarse.p_h2o, c), (coarse.v_fc, v)] {
            assert!(((x - y) / y).abs() < 1e-3, "{x} vs {y}");
        }
    }

    #[test]
    fn divergence_names_the_channel() {
        let p = FuelCellParams::default();
        let mut s = state_at(&p, 3000.0);
        // Huge current drains water pressure through its negative input.
        s.i_fc = 1000.0;
        s.q_h2 = 10.0;
        s.q_o2 = 10.0;
        let mut err = None;
        for _ in 0..10_000 {
            match stack_step(&p, &s, 0.1) {
                Ok(n) => s = n,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(err, Some(Error::ModelDivergence { channel: Channel::Water, .. })));
    }

    #[test]
    fn steady_state_is_a_fixed_point_of_step() {
        let p = FuelCellParams::default();
        let m = FuelCellModel::new(p, 0.1).unwrap();
        let s0 = m.steady_state(7000.0).unwrap();
        assert!((s0.p_fc - 7000.0).abs() < 1e-6);
        let mut s = s0;
        for _ in 0..1000 {
            s = m.step(&s, 7000.0).unwrap();
        }
        assert!((s.p_fc - 7000.0).abs() < 1e-6);
        assert!((s.q_h2 - s0.q_h2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_utilization_order() {
        let p = FuelCellParams { u_min: 0.9, ..FuelCellParams::default() };
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        assert!(FuelCellModel::new(FuelCellParams::default(), 0.0).is_err());
    }
}
