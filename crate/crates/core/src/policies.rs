//! Power-capping policies: a rack budget planner followed by a per-server
//! budget assigner, invoked once per capping period.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{Plant, PlantState};
use crate::workload::ServerModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "D-FCU-WU")]
    DFcuWu,
    #[serde(rename = "C-FCU-WU")]
    CFcuWu,
    #[serde(rename = "D-FCA-WU")]
    DFcaWu,
    #[serde(rename = "C-FCA-WU")]
    CFcaWu,
    #[serde(rename = "C-FCA-WA")]
    CFcaWa,
}

impl PolicyKind {
    /// Ordered simplest first; sizing breaks ties in this order.
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::DFcuWu, PolicyKind::CFcuWu, PolicyKind::DFcaWu, PolicyKind::CFcaWu, PolicyKind::CFcaWa];

    pub fn is_centralized(self) -> bool {
        !matches!(self, PolicyKind::DFcuWu | PolicyKind::DFcaWu)
    }

    pub fn is_fuel_cell_aware(self) -> bool {
        !matches!(self, PolicyKind::DFcuWu | PolicyKind::CFcuWu)
    }

    pub fn is_workload_aware(self) -> bool {
        self == PolicyKind::CFcaWa
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::DFcuWu => "D-FCU-WU",
            PolicyKind::CFcuWu => "C-FCU-WU",
            PolicyKind::DFcaWu => "D-FCA-WU",
            PolicyKind::CFcaWu => "C-FCA-WU",
            PolicyKind::CFcaWa => "C-FCA-WA",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{s}`")))
    }
}

/// Control-loop constants shared by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConstants {
    pub eta: f64,
    pub t_capping_s: f64,
    pub p_following_w_per_s: f64,
    pub e_min_j: f64,
    pub quantum_j: f64,
    pub steps_per_period: usize,
}

impl PolicyConstants {
    pub fn for_plant(plant: &Plant, t_capping_s: f64) -> Result<Self> {
        let steps = (t_capping_s / plant.dt()).round();
        if !(steps >= 1.0 && ((steps * plant.dt()) - t_capping_s).abs() < 1e-9 * t_capping_s.max(1.0)) {
            return Err(Error::InvalidArgument(format!(
                "capping period {t_capping_s} s is not a whole number of {} s steps",
                plant.dt()
            )));
        }
        let esd = plant.esd_params();
        Ok(PolicyConstants {
            eta: esd.eta,
            t_capping_s,
            p_following_w_per_s: plant.fc_params().load_following_w_per_s,
            e_min_j: esd.e_min(),
            quantum_j: esd.quantum(),
            steps_per_period: steps as usize,
        })
    }
}

/// Receding-horizon solver settings for the workload-aware planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaSolverConfig {
    pub horizon: usize,
    pub levels: usize,
    /// Cap on feasibility checks per planning call, after seeding.
    pub max_evals: usize,
}

impl Default for WaSolverConfig {
    fn default() -> Self {
        WaSolverConfig { horizon: 30, levels: 50, max_evals: 300 }
    }
}

/// Everything a planner observes at the start of a capping period.
#[derive(Debug, Clone, Copy)]
pub struct PlannerInputs<'a> {
    pub p_fc_w: f64,
    pub e_esd_measured_j: f64,
    pub plant_state: &'a PlantState,
    /// Rack power consumed over the last step.
    pub p_rack_w: f64,
    pub server_power_w: &'a [f64],
    pub intensity: &'a [f64],
    /// Per-server intensity estimates for the next periods, `[k][server]`
    /// for k = 1..=P.
    pub future_intensity: Option<&'a [Vec<f64>]>,
}

impl PlannerInputs<'_> {
    pub fn n_servers(&self) -> usize {
        self.intensity.len()
    }
}

/// Models a policy may consult.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub plant: &'a Plant,
    pub server: &'a ServerModel,
    pub constants: PolicyConstants,
    pub wa: WaSolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDecision {
    pub rack_budget_w: f64,
    pub server_budgets_w: Vec<f64>,
    pub messages_sent: usize,
    /// Planner hit a model error and fell back to the unaware rule.
    pub planner_fallback: bool,
    /// Decentralized split had no dynamic power to go by and split evenly.
    pub even_split: bool,
}

/// Rack budget from the fuel-cell-unaware rule: spend all usable stored
/// energy within one period, or ramp at the load-following rate once the
/// measured energy is on the floor.
pub fn plan_fcu(inputs: &PlannerInputs, c: &PolicyConstants) -> f64 {
    let usable = inputs.e_esd_measured_j - c.e_min_j;
    if usable < 0.5 * c.quantum_j {
        inputs.p_fc_w + c.p_following_w_per_s * c.t_capping_s
    } else {
        inputs.p_fc_w + c.eta * usable / c.t_capping_s
    }
}

fn fcu_floor(inputs: &PlannerInputs, c: &PolicyConstants) -> f64 {
    inputs.p_fc_w + c.p_following_w_per_s * c.t_capping_s
}

/// Largest budget (1 W resolution) whose one-period prediction keeps the
/// store on or above its floor without leaving load unserved. Never below
/// the load-following ramp.
pub fn plan_fca(inputs: &PlannerInputs, ctx: &PolicyContext) -> Result<f64> {
    let c = &ctx.constants;
    let plant = ctx.plant;
    let start = plant.measured_start(inputs.plant_state);
    let floor = fcu_floor(inputs, c);
    let top = floor.max(inputs.n_servers() as f64 * ctx.server.p_peak_w);
    let e_min = c.e_min_j - 1e-9 * c.e_min_j.max(1.0);
    // Storage only recharges while the rack runs uncapped.
    let demand: f64 = inputs.intensity.iter().map(|&x| ctx.server.demand_unchecked(x)).sum();
    let feasible = |b: f64| -> Result<bool> {
        let mut unserved = 0.0;
        let uncapped = b >= demand;
        let (_, e) = plant.predict_period(&start, b, c.steps_per_period, uncapped, &mut unserved)?;
        Ok(e >= e_min)
    };
    if feasible(top)? {
        return Ok(top);
    }
    if !feasible(floor)? {
        return Ok(floor);
    }
    let (mut ok, mut bad) = (floor, top);
    while bad - ok > 1.0 {
        let mid = 0.5 * (ok + bad);
        if feasible(mid)? {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(ok)
}

/// A maximization over one level per period, `value(k, level)` rising in
/// the level, subject to a black-box feasibility test. Feasibility is mostly
/// monotone but not always: on the stack, a higher early budget ramps the
/// fuel cell sooner and can rescue a later period.
pub trait GridProblem {
    fn periods(&self) -> usize;
    fn levels(&self) -> usize;
    fn value(&self, period: usize, level: usize) -> f64;
    fn feasible(&mut self, plan: &[usize]) -> Result<bool>;

    fn total(&self, plan: &[usize]) -> f64 {
        plan.iter().enumerate().map(|(k, &l)| self.value(k, l)).sum()
    }
}

/// Greedy marginal-gain fill from `start` followed by exchange moves: lower
/// one period by some depth (shallow first), raise another as far as it
/// stays feasible, refill greedily, keep the result if it scores higher.
/// `start` must be feasible.
pub fn coordinate_ascent<P: GridProblem>(problem: &mut P, start: Vec<usize>) -> Result<Vec<usize>> {
    coordinate_ascent_bounded(problem, start, usize::MAX)
}

/// [`coordinate_ascent`] that stops after `max_evals` feasibility checks,
/// returning the best plan found so far (always feasible). Budget left after
/// the first local optimum goes to restarts that each push one period as
/// high as it will go before climbing.
pub fn coordinate_ascent_bounded<P: GridProblem>(
    problem: &mut P,
    start: Vec<usize>,
    max_evals: usize,
) -> Result<Vec<usize>> {
    let mut evals = 0usize;
    let mut best = climb(problem, start.clone(), &mut evals, max_evals)?;
    let top = problem.levels() - 1;
    for k in 0..problem.periods() {
        if evals >= max_evals {
            break;
        }
        let mut y = start.clone();
        while y[k] < top && evals < max_evals {
            y[k] += 1;
            evals += 1;
            if !problem.feasible(&y)? {
                y[k] -= 1;
                break;
            }
        }
        if y[k] == start[k] {
            continue;
        }
        let y = climb(problem, y, &mut evals, max_evals)?;
        if problem.total(&y) > problem.total(&best) + 1e-12 {
            best = y;
        }
    }
    Ok(best)
}

fn climb<P: GridProblem>(
    problem: &mut P,
    start: Vec<usize>,
    evals: &mut usize,
    max_evals: usize,
) -> Result<Vec<usize>> {
    let mut x = greedy_fill(problem, start, evals, max_evals)?;
    let n = problem.periods();
    let top = problem.levels() - 1;
    loop {
        let current = problem.total(&x);
        // Upper bound on what refilling could win back, per period.
        let headroom: Vec<f64> = (0..n).map(|k| problem.value(k, top) - problem.value(k, x[k])).collect();
        let spare: f64 = headroom.iter().sum();
        let mut improved = false;
        'moves: for depth in 1..=top {
            for j in 0..n {
                if x[j] < depth {
                    continue;
                }
                let loss = problem.value(j, x[j]) - problem.value(j, x[j] - depth);
                if spare - headroom[j] <= loss + 1e-12 {
                    continue;
                }
                for k in 0..n {
                    if k == j || x[k] == top {
                        continue;
                    }
                    let mut y = x.clone();
                    y[j] -= depth;
                    while y[k] < top {
                        if *evals >= max_evals {
                            return Ok(x);
                        }
                        y[k] += 1;
                        *evals += 1;
                        if !problem.feasible(&y)? {
                            y[k] -= 1;
                            break;
                        }
                    }
                    if y[k] == x[k] {
                        continue;
                    }
                    let y = greedy_fill(problem, y, evals, max_evals)?;
                    if problem.total(&y) > current + 1e-12 {
                        x = y;
                        improved = true;
                        break 'moves;
                    }
                }
            }
        }
        if !improved {
            return Ok(x);
        }
    }
}

/// Repeatedly raises the period with the best marginal gain that stays
/// feasible; a period that cannot be raised is frozen until some other raise
/// succeeds.
fn greedy_fill<P: GridProblem>(
    problem: &mut P,
    mut x: Vec<usize>,
    evals: &mut usize,
    max_evals: usize,
) -> Result<Vec<usize>> {
    let n = problem.periods();
    let top = problem.levels() - 1;
    let mut frozen = vec![false; n];
    while *evals < max_evals {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            if frozen[k] || x[k] == top {
                continue;
            }
            let gain = problem.value(k, x[k] + 1) - problem.value(k, x[k]);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        let Some((k, _)) = best else { break };
        x[k] += 1;
        *evals += 1;
        if problem.feasible(&x)? {
            // More load earlier ramps the fuel cell sooner, which can make a
            // previously refused raise elsewhere feasible.
            frozen.iter_mut().for_each(|f| *f = false);
        } else {
            x[k] -= 1;
            frozen[k] = true;
        }
    }
    Ok(x)
}

/// Best feasible plan by enumeration; `None` when no plan is feasible.
pub fn exhaustive<P: GridProblem>(problem: &mut P) -> Result<Option<Vec<usize>>> {
    let n = problem.periods();
    let l = problem.levels();
    let mut plan = vec![0; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        if problem.feasible(&plan)? {
            let v = problem.total(&plan);
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, plan.clone()));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(best.map(|(_, p)| p));
            }
            plan[k] += 1;
            if plan[k] < l {
                break;
            }
            plan[k] = 0;
            k += 1;
        }
    }
}

/// The workload-aware horizon problem: per-period budget grids between the
/// load-following floor and the forecast rack demand, feasible when the
/// predicted store stays on or above its floor.
pub struct HorizonProblem<'a> {
    plant: &'a Plant,
    steps_per_period: usize,
    e_min: f64,
    budgets: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    demand: Vec<f64>,
    start: PlantState,
    // Trajectory of the last evaluated plan: state and unserved energy after
    // each period, valid for the first `cached` periods.
    cache_plan: Vec<usize>,
    cache_states: Vec<(PlantState, f64)>,
    cached: usize,
}

impl<'a> HorizonProblem<'a> {
    pub fn new(
        plant: &'a Plant,
        start: &PlantState,
        steps_per_period: usize,
        budgets: Vec<Vec<f64>>,
        values: Vec<Vec<f64>>,
        demand_w: Vec<f64>,
    ) -> Self {
        let n = budgets.len();
        HorizonProblem {
            plant,
            steps_per_period,
            e_min: plant.esd_params().e_min() * (1.0 - 1e-12) - 1e-9,
            budgets,
            values,
            demand: demand_w,
            start: plant.measured_start(start),
            cache_plan: vec![usize::MAX; n],
            cache_states: Vec::with_capacity(n),
            cached: 0,
        }
    }

    pub fn budget(&self, period: usize, level: usize) -> f64 {
        self.budgets[period][level]
    }
}

impl GridProblem for HorizonProblem<'_> {
    fn periods(&self) -> usize {
        self.budgets.len()
    }

    fn levels(&self) -> usize {
        self.budgets[0].len()
    }

    fn value(&self, period: usize, level: usize) -> f64 {
        self.values[period][level]
    }

    fn feasible(&mut self, plan: &[usize]) -> Result<bool> {
        let reuse = plan.iter().zip(&self.cache_plan).take(self.cached).take_while(|(a, b)| a == b).count();
        // Earlier periods of the cached trajectory are already known feasible.
        self.cache_states.truncate(reuse);
        self.cached = reuse;
        let (mut s, mut unserved) = match reuse {
            0 => (self.start, 0.0),
            r => self.cache_states[r - 1],
        };
        for (k, &level) in plan.iter().enumerate().skip(reuse) {
            let b = self.budgets[k][level];
            let uncapped = b >= self.demand[k];
            let (next, e) = self.plant.predict_period(&s, b, self.steps_per_period, uncapped, &mut unserved)?;
            self.cache_plan[k] = level;
            if e < self.e_min {
                return Ok(false);
            }
            s = next;
            self.cache_states.push((s, unserved));
            self.cached = k + 1;
        }
        Ok(true)
    }
}

/// Receding-horizon budget plan maximizing summed predicted success rate.
/// Returns one budget per horizon period; the first is applied.
pub fn plan_fca_wa(inputs: &PlannerInputs, ctx: &PolicyContext, warm_start: Option<&[f64]>) -> Result<Vec<f64>> {
    let future = inputs
        .future_intensity
        .ok_or_else(|| Error::Precondition("workload-aware planning needs future intensity estimates".into()))?;
    let c = &ctx.constants;
    let server = ctx.server;
    let n = inputs.n_servers() as f64;
    let horizon = ctx.wa.horizon.min(future.len()).max(1);
    let levels = ctx.wa.levels.max(2);
    if future.is_empty() {
        return Err(Error::Precondition("future intensity estimates are empty".into()));
    }
    let idle = n * server.p_idle_w;

    let mut budgets = Vec::with_capacity(horizon);
    let mut values = Vec::with_capacity(horizon);
    let mut demands = Vec::with_capacity(horizon);
    for (k, lam) in future.iter().take(horizon).enumerate() {
        let demand: f64 = lam.iter().map(|&x| server.demand_unchecked(x)).sum();
        let mean = lam.iter().sum::<f64>() / n;
        let ramp = inputs.p_fc_w + c.p_following_w_per_s * c.t_capping_s * (k + 1) as f64;
        let floor = ramp.max(idle).min(demand);
        let grid: Vec<f64> = (0..levels).map(|l| floor + (demand - floor) * l as f64 / (levels - 1) as f64).collect();
        values.push(grid.iter().map(|&b| server.utility(b / n, mean).success_rate).collect());
        budgets.push(grid);
        demands.push(demand);
    }
    let mut problem = HorizonProblem::new(ctx.plant, inputs.plant_state, c.steps_per_period, budgets, values, demands);
    let top = vec![levels - 1; horizon];
    if problem.feasible(&top)? {
        return Ok((0..horizon).map(|k| problem.budget(k, levels - 1)).collect());
    }
    let floor = vec![0; horizon];
    if !problem.feasible(&floor)? {
        let b = plan_fca(inputs, ctx)?;
        return Ok(vec![b; horizon]);
    }

    // Seeds: the best flat rack cap (bisected), and the previous plan shifted
    // by a period and snapped onto this grid. Ascent starts from the better.
    let capped = |p: &HorizonProblem, cap: f64| -> Vec<usize> {
        (0..horizon).map(|k| p.budgets[k].iter().rposition(|&g| g <= cap + 1e-9).unwrap_or(0)).collect()
    };
    let (mut lo, mut hi) = (0.0, top.iter().enumerate().map(|(k, &l)| problem.budget(k, l)).fold(0.0, f64::max));
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        let plan = capped(&problem, mid);
        if problem.feasible(&plan)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut seed = capped(&problem, lo);
    if !problem.feasible(&seed)? {
        seed = floor;
    }
    if let Some(prev) = warm_start {
        let snapped: Vec<usize> = (0..horizon)
            .map(|k| {
                let b = prev.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
                problem.budgets[k].iter().rposition(|&g| g <= b + 1e-9).unwrap_or(0)
            })
            .collect();
        if problem.total(&snapped) > problem.total(&seed) + 1e-12 && problem.feasible(&snapped)? {
            seed = snapped;
        }
    }
    let plan = coordinate_ascent_bounded(&mut problem, seed, ctx.wa.max_evals)?;
    Ok(plan.iter().enumerate().map(|(k, &l)| problem.budget(k, l)).collect())
}

/// Idle power to every server, dynamic power in proportion to `weights`,
/// never beyond a server's demand; surplus once every demand is met is
/// handed out in proportion to the weights as headroom.
pub fn assign_centralized(rack_budget_w: f64, weights: &[f64], demand_w: &[f64], p_idle_w: f64) -> Result<Vec<f64>> {
    let n = weights.len();
    let floor = n as f64 * p_idle_w;
    if rack_budget_w < floor * (1.0 - 1e-12) {
        return Err(Error::InfeasibleBudget { budget_w: rack_budget_w, floor_w: floor });
    }
    let mut dynamic = vec![0.0; n];
    let mut open: Vec<usize> = (0..n).collect();
    let mut pool = (rack_budget_w - floor).max(0.0);
    loop {
        let w_sum: f64 = open.iter().map(|&i| weights[i]).sum();
        let share = |i: usize| {
            if w_sum > 0.0 {
                pool * weights[i] / w_sum
            } else {
                pool / open.len() as f64
            }
        };
        let clamped: Vec<usize> = open.iter().copied().filter(|&i| share(i) >= demand_w[i] - p_idle_w).collect();
        if clamped.is_empty() {
            for &i in &open {
                dynamic[i] = share(i);
            }
            break;
        }
        for &i in &clamped {
            dynamic[i] = (demand_w[i] - p_idle_w).max(0.0);
            pool -= dynamic[i];
        }
        open.retain(|i| !clamped.contains(i));
        if open.is_empty() {
            let w_sum: f64 = weights.iter().sum();
            for i in 0..n {
                dynamic[i] += if w_sum > 0.0 { pool * weights[i] / w_sum } else { pool / n as f64 };
            }
            break;
        }
    }
    Ok(dynamic.into_iter().map(|d| p_idle_w + d).collect())
}

/// Each server's own share from its current non-idle power. The flag is set
/// when the rack sits at idle and the budget is split evenly instead.
pub fn assign_decentralized(
    rack_budget_w: f64,
    server_power_w: &[f64],
    p_rack_w: f64,
    p_idle_w: f64,
) -> Result<(Vec<f64>, bool)> {
    let n = server_power_w.len() as f64;
    let floor = n * p_idle_w;
    if rack_budget_w < floor * (1.0 - 1e-12) {
        return Err(Error::InfeasibleBudget { budget_w: rack_budget_w, floor_w: floor });
    }
    let spare = rack_budget_w - floor;
    let active = p_rack_w - floor;
    if !(active > 1e-9 * p_rack_w.max(1.0)) {
        return Ok((vec![rack_budget_w / n; server_power_w.len()], true));
    }
    let budgets = server_power_w.iter().map(|&p| p_idle_w + spare * (p - p_idle_w) / active).collect();
    Ok((budgets, false))
}

/// Stateful policy runner; keeps the previous workload-aware plan for warm
/// starts.
#[derive(Debug, Clone)]
pub struct PolicyEngine {
    kind: PolicyKind,
    previous_plan: Option<Vec<f64>>,
    /// Evaluate every decentralized planner replica instead of one.
    pub check_replicas: bool,
}

impl PolicyEngine {
    pub fn new(kind: PolicyKind) -> Self {
        PolicyEngine { kind, previous_plan: None, check_replicas: false }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn plan(&mut self, inputs: &PlannerInputs, ctx: &PolicyContext) -> Result<(f64, bool)> {
        let fallback = |e: Error| -> Result<(f64, bool)> {
            match e {
                Error::ModelDivergence { .. } | Error::InvalidState(_) => {
                    log::warn!("planner model failed ({e}); using the load-following rule");
                    Ok((plan_fcu(inputs, &ctx.constants), true))
                }
                other => Err(other),
            }
        };
        match self.kind {
            PolicyKind::DFcuWu | PolicyKind::CFcuWu => Ok((plan_fcu(inputs, &ctx.constants), false)),
            PolicyKind::DFcaWu | PolicyKind::CFcaWu => match plan_fca(inputs, ctx) {
                Ok(b) => Ok((b, false)),
                Err(e) => fallback(e),
            },
            PolicyKind::CFcaWa => {
                if inputs.future_intensity.is_none() {
                    return Err(Error::Precondition("C-FCA-WA needs future intensity estimates".into()));
                }
                match plan_fca_wa(inputs, ctx, self.previous_plan.as_deref()) {
                    Ok(plan) => {
                        let b = plan[0];
                        self.previous_plan = Some(plan);
                        Ok((b, false))
                    }
                    Err(e) => {
                        self.previous_plan = None;
                        fallback(e)
                    }
                }
            }
        }
    }

    pub fn decide(&mut self, inputs: &PlannerInputs, ctx: &PolicyContext) -> Result<PolicyDecision> {
        let n = inputs.n_servers();
        let server = ctx.server;
        let (mut budget, planner_fallback) = self.plan(inputs, ctx)?;
        if !self.kind.is_centralized() && self.check_replicas {
            // Every server runs its own planner on the same broadcast inputs.
            for _ in 1..n {
                let (b, _) = self.plan(inputs, ctx)?;
                if b.to_bits() != budget.to_bits() {
                    return Err(Error::InvalidState(format!(
                        "decentralized planner replicas disagree: {b} vs {budget}"
                    )));
                }
            }
        }
        let idle = n as f64 * server.p_idle_w;
        if budget < idle {
            log::warn!("planned budget {budget:.1} W below idle floor {idle:.1} W; raising it");
            budget = idle;
        }
        let (server_budgets_w, even_split) = if self.kind.is_centralized() {
            let weights: &[f64] = if self.kind.is_workload_aware() {
                inputs.future_intensity.and_then(|f| f.first()).map(Vec::as_slice).unwrap_or(inputs.intensity)
            } else {
                inputs.intensity
            };
            let demand: Vec<f64> = weights.iter().map(|&x| server.demand_unchecked(x)).collect();
            (assign_centralized(budget, weights, &demand, server.p_idle_w)?, false)
        } else {
            assign_decentralized(budget, inputs.server_power_w, inputs.p_rack_w, server.p_idle_w)?
        };
        Ok(PolicyDecision {
            rack_budget_w: budget,
            server_budgets_w,
            messages_sent: if self.kind.is_centralized() { n + 1 } else { n },
            planner_fallback,
            even_split,
        })
    }
}

/// One-shot policy evaluation without warm-start memory.
pub fn run_policy(kind: PolicyKind, inputs: &PlannerInputs, ctx: &PolicyContext) -> Result<PolicyDecision> {
    PolicyEngine::new(kind).decide(inputs, ctx)
}
