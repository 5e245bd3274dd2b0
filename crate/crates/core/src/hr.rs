//! Heart-rate estimation from a heartbeat mode by peak counting.
//!
//! The selected mode is smoothed, divided by its envelope and searched for
//! peaks. Heart rate at each output instant comes from a counting window
//! `W_b` whose endpoints sit on peaks. `W_b` lives inside an outer
//! decomposition window `W_a` of length `l_a = 2 * l_b_max` that strides by
//! `l_b_max`; `W_a` moves on as soon as the left end of `W_b` reaches the
//! start of the next `W_a`, which keeps `W_b` inside `W_a` at all times.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::signal::RateTrajectory;

/// Shortest admissible gap between two heartbeat peaks (220 bpm).
pub const MIN_PEAK_INTERVAL: f64 = 0.27;
/// Lowest normalized amplitude a peak may have.
pub const PEAK_THRESHOLD: f64 = 0.5;
pub const HR_OUTPUT_RANGE: (f64, f64) = (36.0, 220.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HrError {
    #[error("heartbeat mode is degenerate (no usable envelope)")]
    Degenerate,
    #[error("not enough peaks around t={0:.2} s for an estimate")]
    NoEstimate(f64),
    #[error("invalid window configuration: {0}")]
    Config(String),
    #[error("trace lasts {duration:.2} s, at least l_a = {required:.2} s is needed")]
    TooShort { duration: f64, required: f64 },
    #[error("{carried} of {total} estimates were carried forward (more than half)")]
    Degraded { carried: usize, total: usize, series: Box<HrSeries> },
    #[error("no window produced an estimate")]
    NoValidEstimate,
    #[error("series spans {0:.2} s, at least 60 s are needed")]
    ShortSeries(f64),
}

/// Centred moving average; the window shrinks at the edges.
pub fn moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let half = width / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Monotone cubic (Fritsch-Carlson) interpolation through `(xs, ys)`,
/// evaluated at `0..n`. Constant outside the knots.
fn pchip(xs: &[f64], ys: &[f64], n: usize) -> Vec<f64> {
    let m = xs.len();
    if m == 1 {
        return vec![ys[0]; n];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..m - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; m];
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for i in 1..m - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let x = i as f64;
        if x <= xs[0] {
            out.push(ys[0]);
            continue;
        }
        if x >= xs[m - 1] {
            out.push(ys[m - 1]);
            continue;
        }
        while xs[seg + 1] < x {
            seg += 1;
        }
        let t = (x - xs[seg]) / h[seg];
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        out.push(h00 * ys[seg] + h10 * h[seg] * d[seg] + h01 * ys[seg + 1] + h11 * h[seg] * d[seg + 1]);
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Upper envelope of `|x|`: cubic interpolation through its local maxima,
/// floored at a tenth of its median.
pub fn envelope(x: &[f64]) -> Result<Vec<f64>, HrError> {
    let n = x.len();
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if abs[i] > abs[i - 1] && abs[i] >= abs[i + 1] {
            xs.push(i as f64);
            ys.push(abs[i]);
        }
    }
    if xs.is_empty() {
        return Err(HrError::Degenerate);
    }
    let mut env = pchip(&xs, &ys, n);
    let floor = 0.1 * median(&env);
    if !(floor > 0.0) {
        return Err(HrError::Degenerate);
    }
    for e in env.iter_mut() {
        *e = e.max(floor);
    }
    Ok(env)
}

/// Smooths a heartbeat mode with a 0.12 s moving average and normalizes it
/// by its envelope, so peaks land near 1 regardless of amplitude drift.
pub fn condition_heartbeat(mode: &[f64], sample_rate: f64) -> Result<Vec<f64>, HrError> {
    if mode.len() < 3 || mode.iter().all(|&v| v == 0.0) {
        return Err(HrError::Degenerate);
    }
    let width = ((0.12 * sample_rate).round() as usize).max(1) | 1;
    let smooth = moving_average(mode, width);
    let env = envelope(&smooth)?;
    Ok(smooth.iter().zip(&env).map(|(s, e)| s / e).collect())
}

/// Sorted peak times in seconds.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PeakTrain {
    pub peak_times: Vec<f64>,
}

impl PeakTrain {
    pub fn new(mut peak_times: Vec<f64>) -> Self {
        peak_times.sort_by(|a, b| a.total_cmp(b));
        Self { peak_times }
    }

    pub fn len(&self) -> usize {
        self.peak_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peak_times.is_empty()
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self { peak_times: self.peak_times.iter().map(|t| t + offset).collect() }
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.peak_times.windows(2).map(|w| w[1] - w[0]).min_by(|a, b| a.total_cmp(b))
    }
}

/// Local maxima of at least [`PEAK_THRESHOLD`], no two closer than
/// [`MIN_PEAK_INTERVAL`]; of two conflicting candidates the taller wins.
/// Peak times are refined to sub-sample accuracy with a parabola.
pub fn detect_peaks(signal: &[f64], sample_rate: f64) -> PeakTrain {
    let n = signal.len();
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let v = signal[i];
        if v >= PEAK_THRESHOLD && v > signal[i - 1] && v >= signal[i + 1] {
            let offset = crate::spectrum::parabolic_offset(signal[i - 1], v, signal[i + 1]);
            candidates.push(((i as f64 + offset) / sample_rate, v));
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let mut kept: Vec<f64> = Vec::new();
    for (t, _) in candidates {
        if kept.iter().all(|k| (k - t).abs() >= MIN_PEAK_INTERVAL) {
            kept.push(t);
        }
    }
    PeakTrain::new(kept)
}

/// Counting-window parameters, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowConfig {
    /// Floor of the counting window length for the first pass.
    pub l_min: f64,
    /// Longest counting window; also the stride of the outer window.
    pub l_b_max: f64,
    /// Range `adapt_lmin` clamps into.
    pub l_min_bounds: (f64, f64),
    /// Spacing of output instants.
    pub cadence: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { l_min: 5.0, l_b_max: 8.0, l_min_bounds: (3.0, 8.0), cadence: 1.0 }
    }
}

impl WindowConfig {
    /// Stride of the outer window.
    pub fn delta_l(&self) -> f64 {
        self.l_b_max
    }

    /// Length of the outer window.
    pub fn l_a(&self) -> f64 {
        2.0 * self.l_b_max
    }

    pub fn with_l_min(self, l_min: f64) -> Self {
        Self { l_min, ..self }
    }

    pub fn validate(&self) -> Result<(), HrError> {
        let (lo, hi) = self.l_min_bounds;
        if !(lo > 0.0 && lo <= hi && hi <= self.l_b_max) {
            return Err(HrError::Config(format!("l_min bounds [{lo}, {hi}] must lie in (0, l_b_max = {}]", self.l_b_max)));
        }
        if !(self.l_min > 0.0 && self.l_min <= self.l_b_max) {
            return Err(HrError::Config(format!("l_min {} must lie in (0, l_b_max]", self.l_min)));
        }
        if !(self.cadence > 0.0) {
            return Err(HrError::Config(format!("cadence must be positive, got {}", self.cadence)));
        }
        Ok(())
    }
}

/// One counting window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountWindow {
    pub start: f64,
    pub end: f64,
    pub peaks: usize,
    pub hr_bpm: f64,
}

impl CountWindow {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Heart rate at `t` from the peaks of `train`.
///
/// The window ends on the last peak at or before `t` and starts on the
/// latest earlier peak that makes it at least `l_min` long (but no longer
/// than `l_b_max`). `N` peaks spanning `l_b` seconds give `(N - 1) / l_b`
/// beats per second.
pub fn count_hr(train: &PeakTrain, cfg: &WindowConfig, t: f64) -> Result<CountWindow, HrError> {
    let p = &train.peak_times;
    let end_idx = match p.iter().rposition(|&x| x <= t) {
        Some(i) => i,
        None => return Err(HrError::NoEstimate(t)),
    };
    // A stale window end means the train has a gap around t.
    if t - p[end_idx] > 60.0 / HR_OUTPUT_RANGE.0 {
        return Err(HrError::NoEstimate(t));
    }
    let end = p[end_idx];
    let mut start_idx = (0..end_idx).rev().find(|&i| end - p[i] >= cfg.l_min).ok_or(HrError::NoEstimate(t))?;
    if end - p[start_idx] > cfg.l_b_max {
        start_idx += 1;
        if start_idx >= end_idx {
            return Err(HrError::NoEstimate(t));
        }
    }
    let start = p[start_idx];
    let beats = (end_idx - start_idx) as f64;
    let hr = (beats / (end - start) * 60.0).clamp(HR_OUTPUT_RANGE.0, HR_OUTPUT_RANGE.1);
    Ok(CountWindow { start, end, peaks: end_idx - start_idx + 1, hr_bpm: hr })
}

/// Counting-window floor for the second pass: about ten beats at the
/// first-pass rate, clamped to `cfg.l_min_bounds`.
pub fn adapt_lmin(prev_hr: f64, cfg: &WindowConfig) -> f64 {
    (600.0 / prev_hr).clamp(cfg.l_min_bounds.0, cfg.l_min_bounds.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    Ok,
    CarryForward,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Ok => "ok",
            Flag::CarryForward => "carry_forward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HrPoint {
    pub time: f64,
    pub hr_bpm: f64,
    /// Counting window length behind the estimate (that of the carried
    /// estimate when flagged).
    pub l_b: f64,
    pub flag: Flag,
    pub window_start: f64,
    pub window_end: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct HrSeries {
    pub points: Vec<HrPoint>,
}

impl HrSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn carried(&self) -> usize {
        self.points.iter().filter(|p| p.flag == Flag::CarryForward).count()
    }

    /// Estimate at the output instant nearest to `t`.
    pub fn at(&self, t: f64) -> Option<&HrPoint> {
        self.points.iter().min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,hr_bpm,l_b_s,flag\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.time, p.hr_bpm, p.l_b, p.flag));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "time_s,hr_bpm,l_b_s,flag" => {}
            _ => return Err("line 1: expected header time_s,hr_bpm,l_b_s,flag".into()),
        }
        let mut points = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(format!("line {}: expected 4 columns", i + 1));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 1));
            let flag = match cols[3] {
                "ok" => Flag::Ok,
                "carry_forward" => Flag::CarryForward,
                other => return Err(format!("line {}: unknown flag {other}", i + 1)),
            };
            let (time, l_b) = (num(cols[0])?, num(cols[2])?);
            points.push(HrPoint { time, hr_bpm: num(cols[1])?, l_b, flag, window_start: time - l_b, window_end: time });
        }
        Ok(Self { points })
    }
}

/// Placement of one outer window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterWindow {
    pub index: usize,
    pub start: f64,
    pub end: f64,
}

/// Outer windows of length `l_a` every `delta_l` seconds, the last one
/// clipped to the trace end.
pub fn outer_windows(duration: f64, cfg: &WindowConfig) -> Vec<OuterWindow> {
    let (l_a, step) = (cfg.l_a(), cfg.delta_l());
    let count = if duration <= l_a { 1 } else { ((duration - l_a) / step - 1e-9).ceil() as usize + 1 };
    (0..count)
        .map(|k| {
            let start = k as f64 * step;
            OuterWindow { index: k, start, end: (start + l_a).min(duration) }
        })
        .collect()
}

/// What the per-window stage returned for one outer window.
pub type StageOutcome = Result<PeakTrain, String>;

/// One output instant of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleEntry {
    pub time: f64,
    pub outer: usize,
    pub outer_start: f64,
    pub outer_end: f64,
    pub l_min: f64,
    /// Counting window, when one exists.
    pub count: Option<CountWindow>,
    /// The outer window moved on at this instant.
    pub advanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeRun {
    pub series: HrSeries,
    pub first_pass: HrSeries,
    pub outer: Vec<OuterWindow>,
    pub schedule: Vec<ScheduleEntry>,
    pub first_schedule: Vec<ScheduleEntry>,
    /// Stage result per outer window (peak times absolute).
    pub trains: Vec<StageOutcome>,
}

fn sweep(
    duration: f64,
    cfg: &WindowConfig,
    outer: &[OuterWindow],
    trains: &[StageOutcome],
    l_min_at: &dyn Fn(usize, f64) -> f64,
) -> (HrSeries, Vec<ScheduleEntry>) {
    let steps = ((duration / cfg.cadence) + 1e-9).floor() as usize;
    let mut k = 0;
    let mut points = Vec::new();
    let mut schedule = Vec::new();
    let mut last: Option<HrPoint> = None;
    for j in 1..=steps {
        let t = j as f64 * cfg.cadence;
        let l_min = l_min_at(j - 1, t);
        let wcfg = cfg.with_l_min(l_min);
        let mut advanced = false;
        let count = loop {
            let count = match &trains[k] {
                Ok(train) => count_hr(train, &wcfg, t).ok(),
                Err(_) => None,
            };
            let left = count.map(|c| c.start).unwrap_or(t - l_min);
            if k + 1 < outer.len() && left >= outer[k + 1].start {
                k += 1;
                advanced = true;
                continue;
            }
            break count;
        };
        schedule.push(ScheduleEntry {
            time: t,
            outer: k,
            outer_start: outer[k].start,
            outer_end: outer[k].end,
            l_min,
            count,
            advanced,
        });
        let point = match count {
            Some(c) => Some(HrPoint {
                time: t,
                hr_bpm: c.hr_bpm,
                l_b: c.length(),
                flag: Flag::Ok,
                window_start: c.start,
                window_end: c.end,
            }),
            None => last.map(|p| HrPoint { time: t, flag: Flag::CarryForward, ..p }),
        };
        if let Some(p) = point {
            if p.flag == Flag::Ok {
                last = Some(p);
            }
            points.push(p);
        }
    }
    (HrSeries { points }, schedule)
}

/// Runs the per-window `stage` on every outer window of `samples` (which may
/// run concurrently), then sweeps the counting window twice: first with
/// `cfg.l_min`, then with the floor adapted to the first-pass rate.
///
/// `stage` receives the window index, its start time and its samples, and
/// returns peak times relative to the window start.
pub fn run_composite_windows<F>(samples: &[f64], sample_rate: f64, cfg: &WindowConfig, stage: F) -> Result<CompositeRun, HrError>
where
    F: Fn(usize, f64, &[f64]) -> StageOutcome + Sync,
{
    cfg.validate()?;
    let duration = samples.len() as f64 / sample_rate;
    if duration + 1e-9 < cfg.l_a() {
        return Err(HrError::TooShort { duration, required: cfg.l_a() });
    }
    let outer = outer_windows(duration, cfg);
    let trains: Vec<StageOutcome> = outer
        .par_iter()
        .map(|w| {
            let a = (w.start * sample_rate).round() as usize;
            let b = ((w.end * sample_rate).round() as usize).min(samples.len());
            stage(w.index, w.start, &samples[a..b]).map(|train| train.shifted(w.start))
        })
        .collect();

    let (first_pass, first_schedule) = sweep(duration, cfg, &outer, &trains, &|_, _| cfg.l_min);
    if first_pass.points.iter().all(|p| p.flag != Flag::Ok) {
        return Err(HrError::NoValidEstimate);
    }
    let first_rate = |t: f64| -> Option<f64> {
        first_pass.points.iter().take_while(|p| p.time <= t + 1e-9).last().map(|p| p.hr_bpm)
    };
    let (series, schedule) = sweep(duration, cfg, &outer, &trains, &|_, t| match first_rate(t) {
        Some(hr) => adapt_lmin(hr, cfg),
        None => cfg.l_min,
    });
    let run = CompositeRun { series, first_pass, outer, schedule, first_schedule, trains };
    let carried = run.series.carried();
    if run.series.is_empty() || run.series.points.iter().all(|p| p.flag != Flag::Ok) {
        return Err(HrError::NoValidEstimate);
    }
    if 2 * carried > run.series.len() {
        return Err(HrError::Degraded { carried, total: run.series.len(), series: Box::new(run.series) });
    }
    Ok(run)
}

/// Mean of `|truth - estimate|` over the series points, with the truth taken
/// as the instantaneous rate at each output instant.
pub fn mean_abs_error(series: &HrSeries, truth: &RateTrajectory) -> Option<f64> {
    if series.is_empty() {
        return None;
    }
    let sum: f64 = series.points.iter().map(|p| (truth.bpm(p.time) - p.hr_bpm).abs()).sum();
    Some(sum / series.len() as f64)
}

/// Stage-level counters carried in the report.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ReportDiagnostics {
    pub outer_windows: usize,
    pub infeasible_windows: usize,
    pub coincidence_windows: usize,
    pub failed_windows: usize,
    pub carried_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrrReport {
    pub initial_hr: f64,
    pub hr_at_60s: f64,
    pub hrr_60: f64,
    pub mean_abs_error: Option<f64>,
    pub true_hrr_60: Option<f64>,
    pub curve: HrSeries,
    pub diagnostics: ReportDiagnostics,
}

impl HrrReport {
    /// `key=value` lines (the curve is written separately as CSV).
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
        let d = &self.diagnostics;
        format!(
            "initial_hr={}\nhr_at_60s={}\nhrr_60={}\nmean_abs_error={}\ntrue_hrr_60={}\npoints={}\nouter_windows={}\ninfeasible_windows={}\ncoincidence_windows={}\nfailed_windows={}\ncarried_points={}\n",
            self.initial_hr,
            self.hr_at_60s,
            self.hrr_60,
            opt(self.mean_abs_error),
            opt(self.true_hrr_60),
            self.curve.len(),
            d.outer_windows,
            d.infeasible_windows,
            d.coincidence_windows,
            d.failed_windows,
            d.carried_points,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Summarizes a recovery curve: first valid estimate, estimate at 60 s, the
/// drop between them, and the mean absolute error against `truth` if given.
pub fn build_report(series: &HrSeries, truth: Option<&RateTrajectory>) -> Result<HrrReport, HrError> {
    let span = series.points.last().map(|p| p.time).unwrap_or(0.0);
    if span + 1e-9 < 60.0 {
        return Err(HrError::ShortSeries(span));
    }
    let initial = series.points.iter().find(|p| p.flag == Flag::Ok).ok_or(HrError::NoValidEstimate)?;
    let at_60 = series.at(60.0).expect("non-empty series");
    Ok(HrrReport {
        initial_hr: initial.hr_bpm,
        hr_at_60s: at_60.hr_bpm,
        hrr_60: initial.hr_bpm - at_60.hr_bpm,
        mean_abs_error: truth.and_then(|t| mean_abs_error(series, t)),
        true_hrr_60: truth.map(|t| t.bpm(initial.time) - t.bpm(at_60.time)),
        curve: series.clone(),
        diagnostics: ReportDiagnostics { carried_points: series.carried(), ..Default::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn uniform_train(spacing: f64, offset: f64, until: f64) -> PeakTrain {
        let mut t = offset;
        let mut v = Vec::new();
        while t <= until {
            v.push(t);
            t += spacing;
        }
        PeakTrain::new(v)
    }

    #[test]
    fn uniform_train_rate() {
        let cfg = WindowConfig::default().with_l_min(3.0);
        for offset in [0.0, 0.13, 0.49] {
            let train = uniform_train(0.5, offset, 30.0);
            for t in [10.0, 17.3, 29.9] {
                let c = count_hr(&train, &cfg, t).unwrap();
                assert!((c.hr_bpm - 120.0).abs() < 1e-9);
                assert!(c.length() >= 3.0 - 1e-9);
            }
        }
    }

    #[test]
    fn long_l_min_gives_no_estimate() {
        let train = uniform_train(0.5, 0.0, 4.0);
        let cfg = WindowConfig::default().with_l_min(6.0);
        assert_eq!(count_hr(&train, &cfg, 4.0), Err(HrError::NoEstimate(4.0)));
        assert!(count_hr(&PeakTrain::default(), &cfg, 4.0).is_err());
    }

    #[test]
    fn chirped_train_matches_window_mean_rate() {
        let traj = RateTrajectory::Linear { start: 160.0, end: 140.0, duration: 10.0 };
        let train = PeakTrain::new(traj.beat_times(10.0));
        let c = count_hr(&train, &WindowConfig::default().with_l_min(3.0), 10.0).unwrap();
        let oracle = traj.mean_bpm(c.start, c.end);
        assert!((c.hr_bpm - oracle).abs() < 1.0, "{} vs {oracle}", c.hr_bpm);
    }

    #[test]
    fn lmin_adaptation() {
        let cfg = WindowConfig::default();
        assert!((adapt_lmin(150.0, &cfg) - 4.0).abs() < 1e-12);
        assert_eq!(adapt_lmin(60.0, &cfg), 8.0);
        assert_eq!(adapt_lmin(220.0, &cfg), 3.0);
        let mut prev = f64::INFINITY;
        for hr in (40..=220).map(f64::from) {
            let l = adapt_lmin(hr, &cfg);
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn unit_sinusoid_peaks() {
        let fs = 100.0;
        let s: Vec<f64> = (0..1000).map(|i| (2.0 * PI * (i as f64 / fs) + PI / 2.0 - 2.0 * PI * 0.5).sin()).collect();
        // cos(2 pi (t - 0.5)) peaks at 0.5, 1.5, ...
        let p = detect_peaks(&s, fs);
        assert_eq!(p.len(), 10);
        for (k, t) in p.peak_times.iter().enumerate() {
            assert!((t - (k as f64 + 0.5)).abs() < 1e-3);
        }
    }

    #[test]
    fn low_bump_is_rejected() {
        let fs = 100.0;
        let mut s = vec![0.0; 400];
        for (c, h) in [(50usize, 1.0), (150, 0.4), (250, 1.0)] {
            for d in 0..10usize {
                let v = h * (1.0 - d as f64 / 10.0);
                s[c + d] = v;
                s[c - d] = v;
            }
        }
        let p = detect_peaks(&s, fs);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn close_candidates_keep_taller() {
        let fs = 100.0;
        let mut s = vec![0.0f64; 200];
        for (c, h) in [(50usize, 0.9), (70, 0.7)] {
            for d in 0..5usize {
                let v = h * (1.0 - d as f64 / 5.0);
                s[c + d] = s[c + d].max(v);
                s[c - d] = s[c - d].max(v);
            }
        }
        let p = detect_peaks(&s, fs);
        assert_eq!(p.peak_times.len(), 1);
        assert!((p.peak_times[0] - 0.5).abs() < 0.01);
    }

    #[test]
    fn ramped_sinusoid_normalizes() {
        let fs = 100.0;
        let n = 1000;
        let s: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (1.0 + 0.4 * t) * (2.0 * PI * 1.5 * t).sin()
            })
            .collect();
        let y = condition_heartbeat(&s, fs).unwrap();
        let train = detect_peaks(&y, fs);
        assert!(train.len() >= 14);
        for t in &train.peak_times {
            let i = (t * fs).round() as usize;
            if (50..n - 50).contains(&i) {
                assert!(y[i] > 0.9 && y[i] < 1.1, "{} at {t}", y[i]);
            }
        }
    }

    #[test]
    fn degenerate_mode_rejected() {
        assert_eq!(condition_heartbeat(&[0.0; 100], 100.0), Err(HrError::Degenerate));
    }

    #[test]
    fn outer_window_layout() {
        let cfg = WindowConfig::default();
        assert_eq!(cfg.delta_l(), 8.0);
        assert_eq!(cfg.l_a(), 16.0);
        let w = outer_windows(60.0, &cfg);
        assert_eq!(w.len(), 7);
        assert_eq!(w[6].start, 48.0);
        assert_eq!(w[6].end, 60.0);
        assert_eq!(outer_windows(16.0, &cfg).len(), 1);
        assert_eq!(outer_windows(24.0, &cfg).len(), 2);
    }

    #[test]
    fn series_csv_round_trip() {
        let s = HrSeries {
            points: vec![HrPoint { time: 5.0, hr_bpm: 121.5, l_b: 4.5, flag: Flag::Ok, window_start: 0.5, window_end: 5.0 }],
        };
        let back = HrSeries::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back.points[0].hr_bpm, 121.5);
        assert_eq!(back.points[0].flag, Flag::Ok);
        assert!(HrSeries::from_csv("bad\n").is_err());
    }

    #[test]
    fn report_of_perfect_linear_estimate() {
        let truth = RateTrajectory::Linear { start: 152.0, end: 120.0, duration: 60.0 };
        let points = (0..=60)
            .map(|i| {
                let t = i as f64;
                HrPoint { time: t, hr_bpm: truth.bpm(t), l_b: 4.0, flag: Flag::Ok, window_start: t - 4.0, window_end: t }
            })
            .collect();
        let r = build_report(&HrSeries { points }, Some(&truth)).unwrap();
        assert!((r.hrr_60 - 32.0).abs() < 1e-9);
        assert_eq!(r.mean_abs_error, Some(0.0));
    }

    #[test]
    fn report_needs_sixty_seconds() {
        let points = vec![HrPoint { time: 30.0, hr_bpm: 100.0, l_b: 4.0, flag: Flag::Ok, window_start: 26.0, window_end: 30.0 }];
        assert!(matches!(build_report(&HrSeries { points }, None), Err(HrError::ShortSeries(_))));
    }

    #[test]
    fn mean_error_by_hand() {
        let truth = RateTrajectory::Constant { bpm: 100.0 };
        let points = [(1.0, 98.0), (2.0, 103.0), (60.0, 100.5)]
            .iter()
            .map(|&(t, hr)| HrPoint { time: t, hr_bpm: hr, l_b: 4.0, flag: Flag::Ok, window_start: t - 4.0, window_end: t })
            .collect();
        let r = build_report(&HrSeries { points }, Some(&truth)).unwrap();
        assert!((r.mean_abs_error.unwrap() - (2.0 + 3.0 + 0.5) / 3.0).abs() < 1e-12);
        assert_eq!(r.hrr_60, 98.0 - 100.5);
    }
}
