//! Power and intensity traces: CSV ingestion and resampling onto the
//! simulation grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, TraceError};

/// Rack demand sampled on a uniform grid starting at `start_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub start_s: f64,
    pub period_s: f64,
    pub demand_w: Vec<f64>,
}

impl PowerTrace {
    pub fn new(period_s: f64, demand_w: Vec<f64>) -> Self {
        PowerTrace { start_s: 0.0, period_s, demand_w }
    }

    pub fn len(&self) -> usize {
        self.demand_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand_w.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_s + k as f64 * self.period_s
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 * self.period_s
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.demand_w.iter().enumerate().map(|(k, &d)| (self.time(k), d))
    }

    /// Linear interpolation onto a grid with spacing `period_s` covering the
    /// same span. Grid points that coincide with existing samples (to within
    /// 1e-9 of a period) copy them exactly.
    pub fn resample(&self, period_s: f64) -> Result<PowerTrace> {
        if !(period_s.is_finite() && period_s > 0.0) {
            return Err(Error::InvalidArgument(format!("period must be > 0, got {period_s}")));
        }
        if self.is_empty() {
            return Err(TraceError::Empty.into());
        }
        let span = (self.len() - 1) as f64 * self.period_s;
        let n = (span / period_s + 1e-9).floor() as usize + 1;
        let ratio = period_s / self.period_s;
        let demand_w = (0..n).map(|k| interpolate_uniform(&self.demand_w, k as f64 * ratio)).collect();
        Ok(PowerTrace { start_s: self.start_s, period_s, demand_w })
    }

    pub fn max_demand(&self) -> f64 {
        self.demand_w.iter().copied().fold(0.0, f64::max)
    }

    /// Rejects demand above the plant rating.
    pub fn check_rated(&self, rated_w: f64) -> Result<()> {
        for (t_s, d) in self.samples() {
            if d > rated_w * (1.0 + 1e-12) {
                return Err(TraceError::AboveRated { t_s, demand_w: d, rated_w }.into());
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t_s", "demand_w"])?;
        for (t, d) in self.samples() {
            out.write_record([fmt_num(t), fmt_num(d)])?;
        }
        out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

/// Value of a uniformly sampled series at fractional index `x`.
fn interpolate_uniform(values: &[f64], x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        return values[(nearest as usize).min(values.len() - 1)];
    }
    let i = x.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = x - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Shortest round-tripping decimal form; keeps emitted CSVs diff-friendly.
pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Raw `(t, value)` samples with strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub t_s: Vec<f64>,
    pub value: Vec<f64>,
}

impl Samples {
    /// Linear interpolation onto `start + k * period` covering the samples.
    pub fn to_uniform(&self, period_s: f64) -> Result<PowerTrace> {
        if self.t_s.is_empty() {
            return Err(TraceError::Empty.into());
        }
        if !(period_s.is_finite() && period_s > 0.0) {
            return Err(Error::InvalidArgument(format!("period must be > 0, got {period_s}")));
        }
        let start = self.t_s[0];
        let span = self.t_s[self.t_s.len() - 1] - start;
        let n = (span / period_s + 1e-9).floor() as usize + 1;
        let mut j = 0;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let t = start + k as f64 * period_s;
            while j + 1 < self.t_s.len() && self.t_s[j + 1] <= t + 1e-9 * period_s {
                j += 1;
            }
            let v = if (t - self.t_s[j]).abs() <= 1e-9 * period_s || j + 1 == self.t_s.len() {
                self.value[j]
            } else {
                let frac = (t - self.t_s[j]) / (self.t_s[j + 1] - self.t_s[j]);
                self.value[j] + frac * (self.value[j + 1] - self.value[j])
            };
            out.push(v);
        }
        Ok(PowerTrace { start_s: start, period_s, demand_w: out })
    }
}

fn parse_field(raw: Option<&str>, row: usize, name: &str) -> Result<f64, TraceError> {
    let raw = raw.ok_or_else(|| TraceError::Malformed { row, reason: format!("missing {name}") })?;
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| TraceError::Malformed { row, reason: format!("{name} `{raw}` is not a number") })?;
    if !v.is_finite() {
        return Err(TraceError::NonFinite { row });
    }
    Ok(v)
}

fn header_of(rdr: &mut csv::Reader<impl std::io::Read>) -> Result<Vec<String>> {
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect())
}

/// Either form of trace file.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceFile {
    /// `t_s,demand_w`
    Rack(Samples),
    /// `t_s,server_id,intensity`
    PerServer(ServerIntensities),
}

pub fn read_trace_file(path: &Path) -> Result<TraceFile> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(file)
}

/// Parses either trace layout, dispatching on the header.
pub fn read_trace(reader: impl std::io::Read) -> Result<TraceFile> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header = header_of(&mut rdr)?;
    match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t_s", "demand_w"] => Ok(TraceFile::Rack(read_rack_rows(rdr)?)),
        ["t_s", "server_id", "intensity"] => Ok(TraceFile::PerServer(read_server_rows(rdr)?)),
        [] => Err(TraceError::Empty.into()),
        _ => Err(TraceError::Header {
            expected: "t_s,demand_w or t_s,server_id,intensity".into(),
            found: header.join(","),
        }
        .into()),
    }
}

fn read_rack_rows(mut rdr: csv::Reader<impl std::io::Read>) -> Result<Samples> {
    let mut t_s = Vec::new();
    let mut value = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(TraceError::Malformed { row, reason: format!("expected 2 fields, got {}", rec.len()) }.into());
        }
        let t = parse_field(rec.get(0), row, "t_s")?;
        let d = parse_field(rec.get(1), row, "demand_w")?;
        if d < 0.0 {
            return Err(TraceError::Negative { row, value: d }.into());
        }
        if let Some(&prev) = t_s.last() {
            if t <= prev {
                return Err(TraceError::NonMonotone { row, t_s: t, prev_s: prev }.into());
            }
        }
        t_s.push(t);
        value.push(d);
    }
    if t_s.is_empty() {
        return Err(TraceError::Empty.into());
    }
    Ok(Samples { t_s, value })
}

/// Per-server intensities on a shared time axis, indexed `[server][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerIntensities {
    pub t_s: Vec<f64>,
    pub intensity: Vec<Vec<f64>>,
}

impl ServerIntensities {
    pub fn n_servers(&self) -> usize {
        self.intensity.len()
    }

    /// Each server's series interpolated onto the uniform grid.
    pub fn to_uniform(&self, period_s: f64) -> Result<Vec<Vec<f64>>> {
        self.intensity
            .iter()
            .map(|v| Samples { t_s: self.t_s.clone(), value: v.clone() }.to_uniform(period_s).map(|t| t.demand_w))
            .collect()
    }
}

fn read_server_rows(mut rdr: csv::Reader<impl std::io::Read>) -> Result<ServerIntensities> {
    let mut t_s: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(TraceError::Malformed { row, reason: format!("expected 3 fields, got {}", rec.len()) }.into());
        }
        let t = parse_field(rec.get(0), row, "t_s")?;
        let id: usize =
            rec.get(1).unwrap_or("").trim().parse().map_err(|_| TraceError::Malformed {
                row,
                reason: "server_id must be a non-negative integer".into(),
            })?;
        let x = parse_field(rec.get(2), row, "intensity")?;
        if x < 0.0 {
            return Err(TraceError::Negative { row, value: x }.into());
        }
        if x > 1.0 {
            return Err(TraceError::OutOfRange { row, value: x }.into());
        }
        match t_s.last() {
            Some(&prev) if t == prev => {}
            Some(&prev) if t < prev => {
                return Err(TraceError::NonMonotone { row, t_s: t, prev_s: prev }.into());
            }
            _ => {
                t_s.push(t);
                rows.push(Vec::new());
            }
        }
        rows.last_mut().expect("row group exists").push((id, x));
    }
    if t_s.is_empty() {
        return Err(TraceError::Empty.into());
    }
    let n = rows.iter().flatten().map(|&(id, _)| id + 1).max().unwrap_or(0);
    let mut intensity = vec![vec![f64::NAN; t_s.len()]; n];
    for (k, group) in rows.iter().enumerate() {
        for &(id, x) in group {
            intensity[id][k] = x;
        }
    }
    for (id, series) in intensity.iter().enumerate() {
        if let Some(k) = series.iter().position(|x| x.is_nan()) {
            return Err(TraceError::Malformed {
                row: 0,
                reason: format!("server {id} has no sample at t = {}", t_s[k]),
            }
            .into());
        }
    }
    Ok(ServerIntensities { t_s, intensity })
}

/// Loads a rack trace and resamples it to `dt`.
pub fn load_trace(path: &Path, dt: f64) -> Result<PowerTrace> {
    match read_trace_file(path)? {
        TraceFile::Rack(s) => s.to_uniform(dt),
        TraceFile::PerServer(_) => Err(Error::InvalidArgument(format!(
            "{} is a per-server intensity trace; a rack demand trace was expected",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TraceFile> {
        read_trace(s.as_bytes())
    }

    #[test]
    fn two_row_constant() {
        let TraceFile::Rack(s) = parse("t_s,demand_w\n0,5000\n10,5000\n").unwrap() else {
            panic!("rack trace expected")
        };
        let t = s.to_uniform(0.5).unwrap();
        assert_eq!(t.len(), 21);
        assert!(t.demand_w.iter().all(|&d| d == 5000.0));
    }

    #[test]
    fn negative_row_is_named() {
        let err = parse("t_s,demand_w\n0,5000\n1,-3\n").unwrap_err();
        assert!(matches!(err, Error::Trace(TraceError::Negative { row: 3, .. })), "{err}");
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(parse("t_s,demand_w\n").unwrap_err(), Error::Trace(TraceError::Empty)));
        assert!(matches!(parse("").unwrap_err(), Error::Trace(TraceError::Empty)));
        assert!(matches!(
            parse("t_s,demand_w\n0,1\n0,2\n").unwrap_err(),
            Error::Trace(TraceError::NonMonotone { row: 3, .. })
        ));
        assert!(matches!(
            parse("t_s,demand_w\n0,abc\n").unwrap_err(),
            Error::Trace(TraceError::Malformed { row: 2, .. })
        ));
        assert!(matches!(parse("t_s,demand_w\n0,NaN\n").unwrap_err(), Error::Trace(TraceError::NonFinite { row: 2 })));
        assert!(matches!(parse("time,load\n0,1\n").unwrap_err(), Error::Trace(TraceError::Header { .. })));
    }

    #[test]
    fn per_server_layout() {
        let f = parse("t_s,server_id,intensity\n0,0,0.5\n0,1,0.25\n2,0,0.7\n2,1,0.1\n").unwrap();
        let TraceFile::PerServer(s) = f else { panic!("per-server trace expected") };
        assert_eq!(s.n_servers(), 2);
        let u = s.to_uniform(1.0).unwrap();
        assert!((u[0][1] - 0.6).abs() < 1e-12);
        assert!(matches!(
            parse("t_s,server_id,intensity\n0,0,1.5\n").unwrap_err(),
            Error::Trace(TraceError::OutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn resample_interpolates() {
        let t = PowerTrace::new(1.0, vec![0.0, 10.0, 20.0]);
        let r = t.resample(0.25).unwrap();
        assert_eq!(r.len(), 9);
        assert!((r.demand_w[1] - 2.5).abs() < 1e-12);
        assert_eq!(r.resample(1.0).unwrap().demand_w, t.demand_w);
    }

    #[test]
    fn rated_check() {
        let t = PowerTrace::new(1.0, vec![100.0, 13_000.0]);
        assert!(matches!(t.check_rated(12_500.0), Err(Error::Trace(TraceError::AboveRated { .. }))));
    }
}
