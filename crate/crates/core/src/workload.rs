//! Server power and performance model, heterogeneity, and request-weighted
//! metric aggregation.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knee-shaped response of a throttled server. The deficit is the fraction
/// of the server's dynamic power that the budget withholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilityCurve {
    /// Deficit at which every request fails.
    pub knee_fraction: f64,
    /// Exponent of the success loss; larger keeps the curve flat longer.
    pub steepness: f64,
    pub latency_base_ms: f64,
    /// Latency grows by `latency_gain * deficit^latency_exponent` of base.
    pub latency_gain: f64,
    pub latency_exponent: f64,
    /// Requests slower than this are counted as failures.
    pub timeout_ms: f64,
}

impl Default for UtilityCurve {
    fn default() -> Self {
        UtilityCurve {
            knee_fraction: 0.95,
            steepness: 3.5,
            latency_base_ms: 20.0,
            latency_gain: 40.0,
            latency_exponent: 4.0,
            timeout_ms: 1000.0,
        }
    }
}

/// Success rate and mean latency of the requests a server completes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Utility {
    pub success_rate: f64,
    pub avg_latency_ms: f64,
    /// Budget below idle power: the server cannot run at all.
    pub offline: bool,
}

/// Measured `(intensity, budget) -> (success, latency)` profile, bilinearly
/// interpolated. Intensities and budgets form a full grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub intensities: Vec<f64>,
    pub budgets_w: Vec<f64>,
    /// `[intensity][budget]`
    pub success_rate: Vec<Vec<f64>>,
    pub avg_latency_ms: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum UtilityModel {
    Parametric(UtilityCurve),
    Table(UtilityTable),
}

impl Default for UtilityModel {
    fn default() -> Self {
        UtilityModel::Parametric(UtilityCurve::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerModel {
    pub p_idle_w: f64,
    pub p_peak_w: f64,
    pub utility: UtilityModel,
}

impl Default for ServerModel {
    fn default() -> Self {
        ServerModel { p_idle_w: 100.0, p_peak_w: 12_500.0 / 45.0, utility: UtilityModel::default() }
    }
}

impl ServerModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_idle_w > 0.0 && self.p_idle_w < self.p_peak_w && self.p_peak_w.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "server power must satisfy 0 < idle < peak, got idle {} peak {}",
                self.p_idle_w, self.p_peak_w
            )));
        }
        match &self.utility {
            UtilityModel::Parametric(c) => {
                let ok = c.knee_fraction > 0.0
                    && c.steepness > 0.0
                    && c.latency_base_ms > 0.0
                    && c.latency_gain >= 0.0
                    && c.latency_exponent > 0.0
                    && c.timeout_ms >= c.latency_base_ms;
                if !ok {
                    return Err(Error::InvalidParams(format!("bad utility curve {c:?}")));
                }
            }
            UtilityModel::Table(t) => t.validate()?,
        }
        Ok(())
    }

    pub fn dynamic_range_w(&self) -> f64 {
        self.p_peak_w - self.p_idle_w
    }

    pub fn demanded_power(&self, intensity: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&intensity) {
            return Err(Error::InvalidArgument(format!("intensity {intensity} outside [0, 1]")));
        }
        Ok(self.demand_unchecked(intensity))
    }

    #[inline]
    pub(crate) fn demand_unchecked(&self, intensity: f64) -> f64 {
        self.p_idle_w + intensity * self.dynamic_range_w()
    }

    /// Mean intensity at which `n` servers draw `rack_w` in total.
    pub fn intensity_for_rack_power(&self, rack_w: f64, n: usize) -> f64 {
        ((rack_w / n as f64 - self.p_idle_w) / self.dynamic_range_w()).clamp(0.0, 1.0)
    }

    /// Performance of a server at `intensity` held to `budget_w`.
    pub fn utility(&self, budget_w: f64, intensity: f64) -> Utility {
        match &self.utility {
            UtilityModel::Parametric(c) => {
                if budget_w < self.p_idle_w {
                    return Utility { success_rate: 0.0, avg_latency_ms: c.timeout_ms, offline: true };
                }
                let demand = self.demand_unchecked(intensity);
                if budget_w >= demand {
                    return Utility { success_rate: 1.0, avg_latency_ms: c.latency_base_ms, offline: false };
                }
                let deficit = 1.0 - (budget_w - self.p_idle_w) / (demand - self.p_idle_w);
                c.at_deficit(deficit)
            }
            UtilityModel::Table(t) => {
                if budget_w < self.p_idle_w {
                    let latency = t.avg_latency_ms.iter().flatten().copied().fold(0.0, f64::max);
                    return Utility { success_rate: 0.0, avg_latency_ms: latency, offline: true };
                }
                let (s, l) = t.lookup(intensity, budget_w);
                Utility { success_rate: s, avg_latency_ms: l, offline: false }
            }
        }
    }
}

impl UtilityCurve {
    pub fn at_deficit(&self, deficit: f64) -> Utility {
        let d = deficit.clamp(0.0, 1.0);
        let loss = (d / self.knee_fraction).powf(self.steepness).min(1.0);
        let latency = self.latency_base_ms * (1.0 + self.latency_gain * d.powf(self.latency_exponent));
        if latency >= self.timeout_ms {
            return Utility { success_rate: 0.0, avg_latency_ms: self.timeout_ms, offline: false };
        }
        Utility { success_rate: 1.0 - loss, avg_latency_ms: latency, offline: false }
    }
}

impl UtilityTable {
    pub fn validate(&self) -> Result<()> {
        let ni = self.intensities.len();
        let nb = self.budgets_w.len();
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if ni < 1 || nb < 2 || !sorted(&self.intensities) || !sorted(&self.budgets_w) {
            return Err(Error::InvalidParams("utility table axes must be strictly increasing".into()));
        }
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == ni && m.iter().all(|r| r.len() == nb);
        if !shape_ok(&self.success_rate) || !shape_ok(&self.avg_latency_ms) {
            return Err(Error::InvalidParams("utility table is not a full grid".into()));
        }
        Ok(())
    }

    fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
        if x <= axis[0] {
            return (0, 0, 0.0);
        }
        let last = axis.len() - 1;
        if x >= axis[last] {
            return (last, last, 0.0);
        }
        let j = axis.partition_point(|&a| a <= x) - 1;
        (j, j + 1, (x - axis[j]) / (axis[j + 1] - axis[j]))
    }

    pub fn lookup(&self, intensity: f64, budget_w: f64) -> (f64, f64) {
        let (i0, i1, fi) = Self::bracket(&self.intensities, intensity);
        let (b0, b1, fb) = Self::bracket(&self.budgets_w, budget_w);
        let bilerp = |m: &Vec<Vec<f64>>| {
            let lo = m[i0][b0] + fb * (m[i0][b1] - m[i0][b0]);
            let hi = m[i1][b0] + fb * (m[i1][b1] - m[i1][b0]);
            lo + fi * (hi - lo)
        };
        (bilerp(&self.success_rate).clamp(0.0, 1.0), bilerp(&self.avg_latency_ms))
    }

    /// Reads `intensity,budget_w,success_rate,avg_latency_ms` rows.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file)
    }

    pub fn read(reader: impl std::io::Read) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            intensity: f64,
            budget_w: f64,
            success_rate: f64,
            avg_latency_ms: f64,
        }
        let mut rows = Vec::new();
        for r in csv::Reader::from_reader(reader).deserialize() {
            let r: Row = r?;
            rows.push(r);
        }
        let axis = |f: fn(&Row) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let intensities = axis(|r| r.intensity);
        let budgets_w = axis(|r| r.budget_w);
        let mut success_rate = vec![vec![f64::NAN; budgets_w.len()]; intensities.len()];
        let mut avg_latency_ms = success_rate.clone();
        for r in &rows {
            let i = intensities.partition_point(|&x| x < r.intensity);
            let b = budgets_w.partition_point(|&x| x < r.budget_w);
            success_rate[i][b] = r.success_rate;
            avg_latency_ms[i][b] = r.avg_latency_ms;
        }
        if success_rate.iter().flatten().any(|x| x.is_nan()) {
            return Err(Error::InvalidParams("utility table has missing grid cells".into()));
        }
        let t = UtilityTable { intensities, budgets_w, success_rate, avg_latency_ms };
        t.validate()?;
        Ok(t)
    }
}

/// Per-server intensity multipliers, redrawn every update period.
#[derive(Debug, Clone, PartialEq)]
pub struct Heterogeneity {
    n_servers: usize,
    steps_per_update: usize,
    /// One vector of mean-one multipliers per update epoch.
    epochs: Vec<Vec<f64>>,
}

impl Heterogeneity {
    /// Draws `n_epochs` sets of `Normal(1, std_dev)` multipliers, clipped at
    /// zero and renormalized to mean one.
    pub fn generate(
        n_servers: usize,
        std_dev: f64,
        steps_per_update: usize,
        n_epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_servers == 0 || steps_per_update == 0 {
            return Err(Error::InvalidArgument("need at least one server and one step per update".into()));
        }
        if !(std_dev.is_finite() && std_dev >= 0.0) {
            return Err(Error::InvalidArgument(format!("std-dev must be >= 0, got {std_dev}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(1.0, std_dev).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let epochs = (0..n_epochs.max(1))
            .map(|_| {
                let mut m: Vec<f64> = (0..n_servers).map(|_| normal.sample(&mut rng).max(0.0)).collect();
                let mean = m.iter().sum::<f64>() / n_servers as f64;
                if mean > 0.0 {
                    m.iter_mut().for_each(|x| *x /= mean);
                } else {
                    m.iter_mut().for_each(|x| *x = 1.0);
                }
                m
            })
            .collect();
        Ok(Heterogeneity { n_servers, steps_per_update, epochs })
    }

    /// Every server runs at the rack mean.
    pub fn uniform(n_servers: usize) -> Self {
        Heterogeneity { n_servers, steps_per_update: usize::MAX, epochs: vec![vec![1.0; n_servers]] }
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    /// Per-server intensities at `step` for rack mean `mean`, each within
    /// [0, 1] and averaging exactly to `mean` (excess from servers clipped at
    /// full load is spread over the others).
    pub fn intensities_at(&self, step: usize, mean: f64, out: &mut [f64]) {
        let epoch = (step / self.steps_per_update).min(self.epochs.len() - 1);
        spread(&self.epochs[epoch], mean.clamp(0.0, 1.0), out);
    }
}

fn spread(multipliers: &[f64], mean: f64, out: &mut [f64]) {
    let n = multipliers.len();
    for (o, &m) in out.iter_mut().zip(multipliers) {
        *o = mean * m;
    }
    // Water-fill: pin servers above 1 and hand their excess to the rest in
    // proportion to their current share.
    for _ in 0..n {
        let excess: f64 = out.iter().map(|&x| (x - 1.0).max(0.0)).sum();
        if excess <= 0.0 {
            break;
        }
        let free: f64 = out.iter().filter(|&&x| x < 1.0).sum();
        let room: f64 = out.iter().filter(|&&x| x < 1.0).map(|&x| 1.0 - x).sum();
        for x in out.iter_mut() {
            if *x >= 1.0 {
                *x = 1.0;
            } else if free > 0.0 {
                *x += excess * *x / free;
            } else if room > 0.0 {
                *x += excess * (1.0 - *x) / room;
            }
        }
    }
    for x in out.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Materializes per-server series `[server][step]` for a rack-mean series.
pub fn gen_heterogeneity(
    n_servers: usize,
    mean_intensity: &[f64],
    std_dev: f64,
    steps_per_update: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let epochs = mean_intensity.len().div_ceil(steps_per_update.max(1));
    let h = Heterogeneity::generate(n_servers, std_dev, steps_per_update, epochs, seed)?;
    let mut out = vec![Vec::with_capacity(mean_intensity.len()); n_servers];
    let mut buf = vec![0.0; n_servers];
    for (k, &m) in mean_intensity.iter().enumerate() {
        h.intensities_at(k, m, &mut buf);
        for (series, &x) in out.iter_mut().zip(&buf) {
            series.push(x);
        }
    }
    Ok(out)
}

/// Width of the latency histogram bins used for percentiles.
pub const LATENCY_BIN_MS: f64 = 0.01;

/// Request-weighted run metrics. Accumulators merge by addition, so a run
/// split at any point and merged gives the whole-run result.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsAccumulator {
    requests: f64,
    successes: f64,
    latency_sum: f64,
    /// Successful-request weight per latency bin.
    histogram: Vec<f64>,
}

impl MetricsAccumulator {
    pub fn new(timeout_ms: f64) -> Self {
        let bins = (timeout_ms / LATENCY_BIN_MS).ceil() as usize + 1;
        MetricsAccumulator { requests: 0.0, successes: 0.0, latency_sum: 0.0, histogram: vec![0.0; bins] }
    }

    /// Records `requests` requests served with the given utility.
    pub fn record(&mut self, requests: f64, u: Utility) {
        if requests <= 0.0 {
            return;
        }
        self.requests += requests;
        let ok = requests * u.success_rate;
        if ok <= 0.0 {
            return;
        }
        self.successes += ok;
        self.latency_sum += ok * u.avg_latency_ms;
        let bin = ((u.avg_latency_ms / LATENCY_BIN_MS).round() as usize).min(self.histogram.len() - 1);
        self.histogram[bin] += ok;
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.requests += other.requests;
        self.successes += other.successes;
        self.latency_sum += other.latency_sum;
        if other.histogram.len() > self.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0.0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }

    pub fn requests(&self) -> f64 {
        self.requests
    }

    pub fn finish(&self) -> Result<RackMetrics> {
        if !(self.requests > 0.0) {
            return Err(Error::UndefinedMetrics);
        }
        let success_rate = self.successes / self.requests;
        let (avg, p95) = if self.successes > 0.0 {
            let target = 0.95 * self.successes;
            let mut acc = 0.0;
            let mut p95_bin = self.histogram.len() - 1;
            for (k, &w) in self.histogram.iter().enumerate() {
                acc += w;
                if acc >= target * (1.0 - 1e-12) && w > 0.0 {
                    p95_bin = k;
                    break;
                }
            }
            (self.latency_sum / self.successes, p95_bin as f64 * LATENCY_BIN_MS)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(RackMetrics { success_rate, avg_latency_ms: avg, p95_latency_ms: p95 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RackMetrics {
    pub success_rate: f64,
    pub avg_latency_ms: f64,
    pub p95_latency_ms: f64,
}
