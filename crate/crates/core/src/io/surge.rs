//! Trapezoidal surge generator and the two synthetic trace archetypes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trace::PowerTrace;
use crate::error::{Error, Result};

/// Demand step from `base_w` to `base_w + magnitude_w` and back. `width_s`
/// covers both ramps and the plateau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeSpec {
    pub base_w: f64,
    pub magnitude_w: f64,
    pub slope_w_per_s: f64,
    pub width_s: f64,
    #[serde(default = "default_dwell")]
    pub pre_s: f64,
    #[serde(default = "default_dwell")]
    pub post_s: f64,
}

fn default_dwell() -> f64 {
    120.0
}

impl SurgeSpec {
    /// 5.6 kW to 10.3 kW at 78 W/s, eleven minutes wide.
    pub fn canonical() -> Self {
        SurgeSpec {
            base_w: 5600.0,
            magnitude_w: 4700.0,
            slope_w_per_s: 78.0,
            width_s: 660.0,
            pre_s: 120.0,
            post_s: 120.0,
        }
    }

    pub fn ramp_s(&self) -> f64 {
        self.magnitude_w / self.slope_w_per_s
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.base_w, self.magnitude_w, self.slope_w_per_s, self.width_s, self.pre_s, self.post_s]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidSpec("all fields must be finite".into()));
        }
        if self.slope_w_per_s <= 0.0 {
            return Err(Error::InvalidSpec(format!("slope must be > 0, got {}", self.slope_w_per_s)));
        }
        if self.base_w < 0.0 || self.magnitude_w < 0.0 || self.pre_s < 0.0 || self.post_s < 0.0 {
            return Err(Error::InvalidSpec("base, magnitude and dwell times must be >= 0".into()));
        }
        if self.width_s < 2.0 * self.ramp_s() * (1.0 - 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "width {} s cannot hold two {:.1} s ramps",
                self.width_s,
                self.ramp_s()
            )));
        }
        Ok(())
    }

    /// Surge excess over base at `t` seconds after the surge begins.
    pub fn excess_at(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.width_s {
            return 0.0;
        }
        let up = self.slope_w_per_s * t;
        let down = self.slope_w_per_s * (self.width_s - t);
        up.min(down).min(self.magnitude_w)
    }

    pub fn demand_at(&self, t: f64) -> f64 {
        self.base_w + self.excess_at(t - self.pre_s)
    }

    pub fn duration_s(&self) -> f64 {
        self.pre_s + self.width_s + self.post_s
    }
}

pub fn gen_surge(spec: &SurgeSpec, dt: f64) -> Result<PowerTrace> {
    spec.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    let n = (spec.duration_s() / dt + 1e-9).floor() as usize + 1;
    Ok(PowerTrace::new(dt, (0..n).map(|k| spec.demand_at(k as f64 * dt)).collect()))
}

/// A surge shape placed at `start_s` on a flat base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedSurge {
    pub start_s: f64,
    pub magnitude_w: f64,
    pub slope_w_per_s: f64,
    pub width_s: f64,
}

/// Flat `base_w` for `duration_s` with the given surges added on top.
pub fn compose(base_w: f64, duration_s: f64, surges: &[PlacedSurge], dt: f64) -> PowerTrace {
    let n = (duration_s / dt + 1e-9).floor() as usize + 1;
    let shapes: Vec<SurgeSpec> = surges
        .iter()
        .map(|s| SurgeSpec {
            base_w: 0.0,
            magnitude_w: s.magnitude_w,
            slope_w_per_s: s.slope_w_per_s,
            width_s: s.width_s,
            pre_s: s.start_s,
            post_s: 0.0,
        })
        .collect();
    let demand = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            base_w + shapes.iter().map(|s| s.demand_at(t)).sum::<f64>()
        })
        .collect();
    PowerTrace::new(dt, demand)
}

pub const ARCHETYPE_DURATION_S: f64 = 8.0 * 3600.0;

/// Eight flat hours at 5.6 kW with one large surge in the middle.
pub fn single_surge_day(dt: f64) -> PowerTrace {
    let c = SurgeSpec::canonical();
    compose(
        c.base_w,
        ARCHETYPE_DURATION_S,
        &[PlacedSurge {
            start_s: 4.0 * 3600.0,
            magnitude_w: c.magnitude_w,
            slope_w_per_s: c.slope_w_per_s,
            width_s: c.width_s,
        }],
        dt,
    )
}

/// Eight hours at 5.6 kW with a surge every 15-30 minutes of random size,
/// steepness and width. Surges never overlap.
pub fn frequent_surges(dt: f64, seed: u64) -> PowerTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut surges = Vec::new();
    let mut t = 600.0;
    loop {
        let magnitude_w = rng.random_range(2500.0..4700.0);
        let slope_w_per_s = rng.random_range(50.0..120.0);
        let width_s = rng.random_range(360.0..720.0);
        if t + width_s > ARCHETYPE_DURATION_S - 300.0 {
            break;
        }
        surges.push(PlacedSurge { start_s: t, magnitude_w, slope_w_per_s, width_s });
        t += width_s + rng.random_range(600.0..1200.0);
    }
    compose(5600.0, ARCHETYPE_DURATION_S, &surges, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_schedule() {
        let t = gen_surge(&SurgeSpec::canonical(), 0.1).unwrap();
        let at = |s: f64| t.demand_w[(s / 0.1).round() as usize];
        assert_eq!(at(0.0), 5600.0);
        assert_eq!(at(119.9), 5600.0);
        assert!((at(150.0) - (5600.0 + 78.0 * 30.0)).abs() < 1e-9);
        assert!((at(120.0 + 4700.0 / 78.0 + 1.0) - 10_300.0).abs() < 1e-9);
        assert!((at(700.0) - 10_300.0).abs() < 1e-9);
        assert_eq!(at(780.0), 5600.0);
        assert_eq!(at(900.0), 5600.0);
        assert_eq!(t.len(), 9001);
    }

    #[test]
    fn zero_magnitude_is_flat() {
        let spec = SurgeSpec { magnitude_w: 0.0, ..SurgeSpec::canonical() };
        let t = gen_surge(&spec, 0.1).unwrap();
        assert!(t.demand_w.iter().all(|&d| d == 5600.0));
    }

    #[test]
    fn area_matches_trapezoid() {
        let spec = SurgeSpec::canonical();
        let t = gen_surge(&spec, 0.01).unwrap();
        let area: f64 = t.demand_w.windows(2).map(|w| 0.5 * (w[0] + w[1] - 2.0 * spec.base_w) * 0.01).sum();
        let expect = spec.magnitude_w * (spec.width_s - spec.ramp_s());
        assert!((area - expect).abs() / expect < 1e-4, "{area} vs {expect}");
    }

    #[test]
    fn rejects_narrow_width() {
        let spec = SurgeSpec { width_s: 60.0, ..SurgeSpec::canonical() };
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
        let spec = SurgeSpec { slope_w_per_s: 0.0, ..SurgeSpec::canonical() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn archetypes_stay_under_rating() {
        assert!(single_surge_day(1.0).max_demand() <= 10_300.0 + 1e-9);
        let t = frequent_surges(1.0, 7);
        assert!(t.max_demand() <= 10_300.0 + 1e-9);
        assert_eq!(t, frequent_surges(1.0, 7));
    }
}
