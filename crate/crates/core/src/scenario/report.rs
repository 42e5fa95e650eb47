//! Event-window metrics, cross-variant comparison and file export.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{HarmonicColumns, RunOutput, TraceRow};
use super::{Scenario, ScenarioError};
use crate::extraction::{settling_time, wrap_angle, EventMetrics, RunMetrics};
use crate::observer::ObserverGains;
use crate::steady_state::{responses, ResponseSet};

/// Settling band, relative to the fundamental amplitude of each window.
pub const SETTLING_FRACTION: f64 = 0.02;
/// Frequency band, relative to the true frequency.
pub const FREQUENCY_FRACTION: f64 = 0.01;

/// `[start, end)` windows between consecutive schedule changes; the last one is closed.
pub fn event_windows(scenario: &Scenario) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    edges.extend(scenario.signal.event_times().into_iter().filter(|&t| t < scenario.sim.duration));
    edges.push(f64::INFINITY);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

fn shift(t: Option<f64>, start: f64) -> Option<f64> {
    t.map(|v| v - start)
}

/// Metrics of every event window of a finished run.
pub fn metrics(scenario: &Scenario, output: &RunOutput) -> Result<RunMetrics, ScenarioError> {
    let trace = &output.trace;
    let times: Vec<f64> = trace.iter().map(|r| r.t).collect();
    let e_y: Vec<f64> = trace.iter().map(|r| r.e_y).collect();
    let n = scenario.signal.harmonics().len();
    let column = |i: usize| trace.iter().map(|r| r.harmonics[i].e).collect::<Vec<f64>>();
    let harmonic_errors: Vec<Vec<f64>> = (0..n).map(column).collect();
    let freq_err: Vec<f64> = trace
        .iter()
        .map(|r| {
            let w = scenario.signal.omega_at(r.t);
            (r.omega_hat - w).abs() / w
        })
        .collect();

    let mut events = Vec::new();
    for (start, end) in event_windows(scenario) {
        let lo = times.partition_point(|&t| t < start);
        let hi = times.partition_point(|&t| t < end);
        if lo >= hi {
            // the run stopped before this window
            break;
        }
        let a1 = scenario.signal.amplitudes().segment_at(0, start).amplitude;
        let threshold = SETTLING_FRACTION * a1;
        let settle = settling_time(&times, &e_y, start, end, threshold)?;
        let harmonic_settling = harmonic_errors
            .iter()
            .map(|e| settling_time(&times, e, start, end, threshold).map(|t| shift(t, start)))
            .collect::<Result<Vec<_>, _>>()?;
        let last = &trace[hi - 1];
        let mut amplitude_errors = Vec::with_capacity(n);
        let mut phase_errors = Vec::with_capacity(n);
        for (i, col) in last.harmonics.iter().enumerate() {
            let (a, phi) = scenario.signal.harmonic_polar(i, last.t)?;
            amplitude_errors.push((col.ahat - a).abs());
            phase_errors.push(col.phihat.map(|p| wrap_angle(p - phi)));
        }
        let freq = settling_time(&times, &freq_err, start, end, FREQUENCY_FRACTION)?;
        let w = scenario.signal.omega_at(last.t);
        events.push(EventMetrics {
            start,
            end: end.min(scenario.sim.duration),
            threshold,
            settling_time: shift(settle, start),
            harmonic_settling,
            amplitude_errors,
            phase_errors,
            frequency_settling: shift(freq, start),
            final_frequency_error: (last.omega_hat - w) / w,
        });
    }
    Ok(RunMetrics {
        label: scenario.label.clone(),
        events,
        failure: output.failure.as_ref().map(|f| format!("t = {}: {}", f.t, f.message)),
    })
}

/// Runs several scenarios on separate threads, keeping the input order.
pub fn run_all(scenarios: &[Scenario]) -> Vec<Result<(RunOutput, RunMetrics), ScenarioError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| {
                scope.spawn(move || {
                    let out = super::run(s)?;
                    let m = metrics(s, &out)?;
                    Ok((out, m))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub settling_time: Option<f64>,
    pub fundamental_settling: Option<f64>,
    /// Largest `|e_y|` over the last 10 % of the window.
    pub residual_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventComparison {
    pub start: f64,
    pub end: f64,
    pub rows: Vec<ComparisonRow>,
    /// Labels ordered by fundamental settling time, unsettled last. Empty for a single run.
    pub ranking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub events: Vec<EventComparison>,
}

/// Aligns per-event metrics of runs over the same signal schedule.
pub fn compare(runs: &[(&Scenario, &RunOutput, &RunMetrics)]) -> Result<Comparison, ScenarioError> {
    let Some((first, _, _)) = runs.first() else {
        return Ok(Comparison { events: Vec::new() });
    };
    for (s, _, _) in &runs[1..] {
        if s.signal != first.signal || s.sim.duration != first.sim.duration {
            return Err(ScenarioError::MismatchedSchedules(format!(
                "{} and {} use different signal schedules",
                first.label, s.label
            )));
        }
    }
    let windows = event_windows(first);
    let mut events = Vec::with_capacity(windows.len());
    for (k, &(start, end)) in windows.iter().enumerate() {
        let mut rows = Vec::with_capacity(runs.len());
        for (s, out, m) in runs {
            let ev = m.events.get(k);
            let stop = end.min(s.sim.duration);
            let tail = stop - 0.1 * (stop - start);
            let residual_error =
                out.trace.iter().filter(|r| r.t >= tail && r.t < end).fold(0.0f64, |acc, r| acc.max(r.e_y.abs()));
            rows.push(ComparisonRow {
                label: s.label.clone(),
                settling_time: ev.and_then(|e| e.settling_time),
                fundamental_settling: ev.and_then(|e| e.harmonic_settling.first().copied().flatten()),
                residual_error,
            });
        }
        let ranking = if rows.len() > 1 {
            let mut order: Vec<&ComparisonRow> = rows.iter().collect();
            order.sort_by(|a, b| {
                let key = |r: &ComparisonRow| r.fundamental_settling.unwrap_or(f64::INFINITY);
                key(a).total_cmp(&key(b))
            });
            order.into_iter().map(|r| r.label.clone()).collect()
        } else {
            Vec::new()
        };
        events.push(EventComparison { start, end: end.min(first.sim.duration), rows, ranking });
    }
    Ok(Comparison { events })
}

impl Comparison {
    /// Plain-text table, one block per event.
    pub fn to_table(&self) -> String {
        let fmt = |t: Option<f64>| t.map_or_else(|| "-".to_string(), |v| format!("{:.2} ms", v * 1e3));
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&format!("event [{:.3} s, {:.3} s)\n", ev.start, ev.end));
            out.push_str(&format!(
                "  {:<16} {:>12} {:>12} {:>14}\n",
                "run", "t_set(e_y)", "t_set(e_1)", "max|e_y| tail"
            ));
            for r in &ev.rows {
                out.push_str(&format!(
                    "  {:<16} {:>12} {:>12} {:>14.4e}\n",
                    r.label,
                    fmt(r.settling_time),
                    fmt(r.fundamental_settling),
                    r.residual_error
                ));
            }
            if !ev.ranking.is_empty() {
                out.push_str(&format!("  ranking: {}\n", ev.ranking.join(" < ")));
            }
        }
        out
    }
}

/// CSV header for `n` harmonics.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "y", "yhat", "e_y", "omega_hat"].iter().map(|s| s.to_string()).collect();
    for i in 1..=n {
        for name in ["yhat", "qhat", "ahat", "phihat", "e"] {
            h.push(format!("{name}_{i}"));
        }
    }
    h
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a trace as CSV with 17 significant digits. `n` is the harmonic count.
pub fn write_csv<W: Write>(writer: W, trace: &[TraceRow], n: usize) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(n))?;
    for r in trace {
        let mut rec = vec![num(r.t), num(r.y), num(r.yhat), num(r.e_y), num(r.omega_hat)];
        for c in &r.harmonics {
            rec.extend([num(c.yhat), num(c.qhat), num(c.ahat), num(c.phihat.unwrap_or(f64::NAN)), num(c.e)]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CSV written by [`write_csv`].
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<TraceRow>, ScenarioError> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 5 || (width - 5) % 5 != 0 {
        return Err(ScenarioError::Parse(format!("unexpected CSV width {width}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| ScenarioError::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        let harmonics = v[5..]
            .chunks(5)
            .map(|c| HarmonicColumns {
                yhat: c[0],
                qhat: c[1],
                ahat: c[2],
                phihat: if c[3].is_nan() { None } else { Some(c[3]) },
                e: c[4],
            })
            .collect();
        rows.push(TraceRow { t: v[0], y: v[1], yhat: v[2], e_y: v[3], omega_hat: v[4], harmonics });
    }
    Ok(rows)
}

pub fn write_metrics<W: Write>(writer: W, metrics: &RunMetrics) -> Result<(), ScenarioError> {
    serde_json::to_writer_pretty(writer, metrics).map_err(|e| ScenarioError::Io(e.into()))
}

/// Output locations for [`export`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExportPaths {
    pub csv: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

impl ExportPaths {
    /// `<dir>/<label>.csv` and `<dir>/<label>.metrics.json`.
    pub fn in_dir(dir: &Path, label: &str) -> Self {
        Self { csv: Some(dir.join(format!("{label}.csv"))), metrics: Some(dir.join(format!("{label}.metrics.json"))) }
    }
}

pub fn export(trace: &[TraceRow], n: usize, metrics: &RunMetrics, paths: &ExportPaths) -> Result<(), ScenarioError> {
    if let Some(p) = &paths.csv {
        write_csv(BufWriter::new(File::create(p)?), trace, n)?;
    }
    if let Some(p) = &paths.metrics {
        let mut f = BufWriter::new(File::create(p)?);
        write_metrics(&mut f, metrics)?;
        f.write_all(b"\n")?;
        f.flush()?;
    }
    Ok(())
}

/// Closed-form responses of harmonic `index` over a frequency grid.
pub fn response_grid(
    gains: &ObserverGains,
    omega_hat: f64,
    index: usize,
    omegas: &[f64],
) -> Result<Vec<ResponseSet>, ScenarioError> {
    omegas.iter().map(|&w| responses(gains, omega_hat, w, index).map_err(ScenarioError::from)).collect()
}

pub fn write_response_csv<W: Write>(writer: W, grid: &[ResponseSet]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["omega", "a_y", "phi_y", "a_q", "phi_q", "a_e", "phi_e"])?;
    let p = |v: Option<f64>| num(v.unwrap_or(f64::NAN));
    for r in grid {
        w.write_record([num(r.omega), num(r.a_y), p(r.phi_y), num(r.a_q), p(r.phi_q), num(r.a_e), p(r.phi_e)])?;
    }
    w.flush()?;
    Ok(())
}
