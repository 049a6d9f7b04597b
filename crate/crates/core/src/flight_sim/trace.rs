//! Per-tick attitude traces and the error metrics computed from them.

use super::control::wrap;
use super::SimError;
use std::fmt::Write as _;

pub const AXES: [&str; 3] = ["roll", "pitch", "yaw"];
pub const CSV_HEADER: &str = "t,roll_des,pitch_des,yaw_des,roll,pitch,yaw,stale,fault";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    /// Desired roll, pitch, yaw in degrees.
    pub desired: [f64; 3],
    /// True roll, pitch, yaw in degrees.
    pub actual: [f64; 3],
    /// The controller had no fresh IMU sample this tick.
    pub stale: bool,
    /// An injected fault was active at this tick.
    pub fault: bool,
}

impl TraceRow {
    pub fn error(&self, axis: usize) -> f64 {
        wrap((self.desired[axis] - self.actual[axis]).to_radians()).to_degrees()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttitudeTrace {
    pub rows: Vec<TraceRow>,
}

impl AttitudeTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(80 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let [rd, pd, yd] = r.desired;
            let [ra, pa, ya] = r.actual;
            let _ = writeln!(
                out,
                "{:.6},{rd:.6},{pd:.6},{yd:.6},{ra:.6},{pa:.6},{ya:.6},{},{}",
                r.t, r.stale as u8, r.fault as u8
            );
        }
        out
    }

    /// Lengths of the maximal runs of consecutive stale ticks.
    pub fn stale_runs(&self) -> Vec<usize> {
        runs(self.rows.iter().map(|r| r.stale))
    }

    pub fn fault_runs(&self) -> Vec<usize> {
        runs(self.rows.iter().map(|r| r.fault))
    }

    /// Ticks inside a fault or within `tail` ticks after one.
    pub fn window_mask(&self, tail: usize) -> Vec<bool> {
        let mut since: Option<usize> = None;
        self.rows
            .iter()
            .map(|r| {
                since = if r.fault { Some(0) } else { since.map(|s| s + 1) };
                matches!(since, Some(s) if s <= tail)
            })
            .collect()
    }
}

fn runs(flags: impl Iterator<Item = bool>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = 0;
    for f in flags {
        if f {
            cur += 1;
        } else if cur > 0 {
            out.push(cur);
            cur = 0;
        }
    }
    if cur > 0 {
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisMetrics {
    pub rms: f64,
    pub peak: f64,
    /// Mean |error| inside fault windows and outside them.
    pub window_mean: f64,
    pub outside_mean: f64,
    /// `window_mean / outside_mean`; 0 when both are 0, absent when the
    /// trace has no window or nothing outside one.
    pub ratio: Option<f64>,
    pub window_peak: f64,
    pub outside_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub ticks: usize,
    pub faults: usize,
    pub stale_ticks: usize,
    pub longest_stale_run: usize,
    pub axes: [AxisMetrics; 3],
}

pub fn compute_metrics(trace: &AttitudeTrace, tail: usize) -> Result<Summary, SimError> {
    if trace.rows.is_empty() {
        return Err(SimError::EmptyTrace);
    }
    let mask = trace.window_mask(tail);
    let axes = std::array::from_fn(|axis| {
        let (mut n_in, mut n_out) = (0usize, 0usize);
        let (mut sum_in, mut sum_out, mut sq_out, mut sq) = (0.0, 0.0, 0.0, 0.0);
        let (mut peak, mut window_peak) = (0.0f64, 0.0f64);
        for (r, &inside) in trace.rows.iter().zip(&mask) {
            let e = r.error(axis).abs();
            sq += e * e;
            peak = peak.max(e);
            if inside {
                n_in += 1;
                sum_in += e;
                window_peak = window_peak.max(e);
            } else {
                n_out += 1;
                sum_out += e;
                sq_out += e * e;
            }
        }
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        let (wm, om) = (mean(sum_in, n_in), mean(sum_out, n_out));
        let ratio = match (n_in, n_out) {
            (0, _) | (_, 0) => None,
            _ if wm == 0.0 && om == 0.0 => Some(0.0),
            _ => Some(wm / om),
        };
        AxisMetrics {
            rms: (sq / trace.rows.len() as f64).sqrt(),
            peak,
            window_mean: wm,
            outside_mean: om,
            ratio,
            window_peak,
            outside_rms: mean(sq_out, n_out).sqrt(),
        }
    });
    let stale = trace.stale_runs();
    Ok(Summary {
        ticks: trace.rows.len(),
        faults: trace.fault_runs().len(),
        stale_ticks: stale.iter().sum(),
        longest_stale_run: stale.iter().copied().max().unwrap_or(0),
        axes,
    })
}

fn fmt_ratio(r: Option<f64>) -> String {
    r.map_or_else(|| "na".into(), |r| format!("{r:.6}"))
}

impl Summary {
    pub fn fields(&self) -> Vec<(String, String)> {
        let mut f = vec![
            ("ticks".into(), self.ticks.to_string()),
            ("faults".into(), self.faults.to_string()),
            ("stale_ticks".into(), self.stale_ticks.to_string()),
            ("longest_stale_run".into(), self.longest_stale_run.to_string()),
        ];
        for (name, m) in AXES.iter().zip(&self.axes) {
            f.push((format!("{name}_rms"), format!("{:.6}", m.rms)));
            f.push((format!("{name}_peak"), format!("{:.6}", m.peak)));
            f.push((format!("{name}_window_mean"), format!("{:.6}", m.window_mean)));
            f.push((format!("{name}_outside_mean"), format!("{:.6}", m.outside_mean)));
            f.push((format!("{name}_ratio"), fmt_ratio(m.ratio)));
            f.push((format!("{name}_window_peak"), format!("{:.6}", m.window_peak)));
            f.push((format!("{name}_outside_rms"), format!("{:.6}", m.outside_rms)));
        }
        f
    }

    /// `key=value` lines, each key prefixed with `prefix`.
    pub fn to_kv(&self, prefix: &str) -> String {
        self.fields().into_iter().map(|(k, v)| format!("{prefix}{k}={v}\n")).collect()
    }

    pub fn csv_header() -> String {
        Summary::default().fields().into_iter().map(|(k, _)| k).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }
}
