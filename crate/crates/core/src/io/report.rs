//! Report files: run and sizing JSON, step, decision, sweep and
//! availability CSVs, plus readers so every emitted file loads back.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::PlantConfig;
use crate::sim::{DecisionRow, Recorder, SimReport, SimSettings, StepRow};
use crate::sizing::SizingResult;

/// Inputs a report was produced from, after defaults and calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: PlantConfig,
    pub settings: SimSettings,
    /// Trace path as given, or a description of a generated trace.
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub provenance: Provenance,
    pub result: SizingResult,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn flush<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Streams step rows, and optionally decision rows, as CSV.
pub struct CsvRecorder<S: Write, D: Write> {
    steps: csv::Writer<S>,
    decisions: Option<csv::Writer<D>>,
}

impl<S: Write, D: Write> CsvRecorder<S, D> {
    pub fn new(steps: S, decisions: Option<D>) -> Self {
        CsvRecorder { steps: csv::Writer::from_writer(steps), decisions: decisions.map(csv::Writer::from_writer) }
    }

    pub fn finish(mut self) -> Result<()> {
        flush(&mut self.steps)?;
        if let Some(d) = self.decisions.as_mut() {
            flush(d)?;
        }
        Ok(())
    }
}

impl<S: Write, D: Write> Recorder for CsvRecorder<S, D> {
    fn step(&mut self, row: &StepRow) -> Result<()> {
        self.steps.serialize(row)?;
        Ok(())
    }

    fn decision(&mut self, row: &DecisionRow) -> Result<()> {
        if let Some(d) = self.decisions.as_mut() {
            d.serialize(row)?;
        }
        Ok(())
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(r: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(r).deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn read_steps(r: impl Read) -> Result<Vec<StepRow>> {
    read_rows(r)
}

pub fn read_decisions(r: impl Read) -> Result<Vec<DecisionRow>> {
    read_rows(r)
}

/// One line of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub policy: crate::policies::PolicyKind,
    pub fraction: f64,
    pub capacity_j: f64,
    pub feasible: bool,
    pub success: f64,
    pub avg_ms: f64,
    pub p95_ms: f64,
    pub unavailability: f64,
    pub capped_periods: usize,
}

pub fn sweep_rows(result: &SizingResult) -> Vec<SweepRow> {
    result
        .points
        .iter()
        .map(|p| SweepRow {
            policy: p.policy,
            fraction: p.fraction,
            capacity_j: p.capacity_j,
            feasible: p.feasible,
            success: p.report.success_rate,
            avg_ms: p.report.avg_latency_ms,
            p95_ms: p.report.p95_latency_ms,
            unavailability: p.report.unavailability,
            capped_periods: p.report.capped_periods,
        })
        .collect()
}

pub fn write_sweep_csv(w: impl Write, result: &SizingResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in sweep_rows(result) {
        out.serialize(row)?;
    }
    flush(&mut out)
}

pub fn read_sweep_csv(r: impl Read) -> Result<Vec<SweepRow>> {
    read_rows(r)
}

/// One line of the availability CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityRow {
    pub fraction: f64,
    pub capacity_j: f64,
    pub unavailability: f64,
}

pub fn write_availability_csv(w: impl Write, rows: &[AvailabilityRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    flush(&mut out)
}

pub fn read_availability_csv(r: impl Read) -> Result<Vec<AvailabilityRow>> {
    read_rows(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;

    #[test]
    fn step_and_decision_round_trip() {
        let step = StepRow {
            t_s: 0.1,
            demand_w: 5600.0,
            p_fc_w: 5599.5,
            esd_delivered_w: 0.5,
            esd_energy_j: 1e5,
            shortfall_w: 0.0,
            served_w: 5600.0,
            rack_budget_w: f64::INFINITY,
            esd_drawn_w: 0.0,
        };
        let dec = DecisionRow {
            t_s: 0.0,
            policy: PolicyKind::CFcaWa,
            rack_budget_w: 9000.0,
            min_server_budget_w: 150.0,
            max_server_budget_w: 250.0,
            messages: 45,
        };
        let (mut s, mut d) = (Vec::new(), Vec::new());
        let mut rec = CsvRecorder::new(&mut s, Some(&mut d));
        rec.step(&step).unwrap();
        rec.decision(&dec).unwrap();
        rec.finish().unwrap();
        assert_eq!(read_steps(s.as_slice()).unwrap(), vec![step]);
        assert_eq!(read_decisions(d.as_slice()).unwrap(), vec![dec]);
    }

    #[test]
    fn availability_round_trip() {
        let rows = vec![
            AvailabilityRow { fraction: 0.0, capacity_j: 0.0, unavailability: 0.25 },
            AvailabilityRow { fraction: 1.0, capacity_j: 83200.0, unavailability: 0.0 },
        ];
        let mut buf = Vec::new();
        write_availability_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_availability_csv(buf.as_slice()).unwrap(), rows);
    }
}
