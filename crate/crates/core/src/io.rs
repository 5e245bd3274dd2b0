//! Text formats: trace CSV with its `.meta` side-car, and the per-window
//! mode and label dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pipeline::WindowDiagnostic;
use crate::signal::{ChestMotionTrace, GroundTruth, Unit};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl IoError {
    fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse { path: path.to_string(), line, message: message.into() }
    }
}

fn header(unit: Unit) -> &'static str {
    match unit {
        Unit::Millimeters => "time_s,displacement_mm",
        Unit::Radians => "time_s,phase_rad",
    }
}

pub fn trace_to_csv(trace: &ChestMotionTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 24);
    out.push_str(header(trace.unit));
    out.push('\n');
    for (i, v) in trace.samples.iter().enumerate() {
        let _ = writeln!(out, "{},{}", trace.time(i), v);
    }
    out
}

/// Side-car metadata: sample rate, unit, length and, for synthetic traces,
/// the generating models and seed as JSON.
pub fn trace_meta(trace: &ChestMotionTrace) -> String {
    let unit = match trace.unit {
        Unit::Millimeters => "mm",
        Unit::Radians => "rad",
    };
    let mut out = format!("sample_rate={}\nunit={unit}\nsamples={}\n", trace.sample_rate, trace.len());
    if let Some(gt) = &trace.ground_truth {
        let _ = writeln!(out, "seed={}", gt.seed);
        let _ = writeln!(out, "noise_std={}", gt.noise_std);
        let _ = writeln!(out, "ground_truth={}", serde_json::to_string(gt).expect("ground truth serializes"));
    }
    out
}

/// Parses a trace CSV. Without metadata the sample rate comes from the
/// first two time stamps.
pub fn trace_from_csv(text: &str, path: &str) -> Result<ChestMotionTrace, IoError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let unit = match lines.next() {
        Some((_, h)) if h.trim() == header(Unit::Millimeters) => Unit::Millimeters,
        Some((_, h)) if h.trim() == header(Unit::Radians) => Unit::Radians,
        Some((i, h)) => {
            return Err(IoError::parse(path, i + 1, format!("expected header time_s,displacement_mm or time_s,phase_rad, found {h:?}")))
        }
        None => return Err(IoError::parse(path, 1, "empty file")),
    };
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines {
        let (t, v) = line.split_once(',').ok_or_else(|| IoError::parse(path, i + 1, "expected two columns"))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IoError::parse(path, i + 1, format!("not a finite number: {:?}", s.trim())))
        };
        times.push(num(t)?);
        samples.push(num(v)?);
    }
    if samples.len() < 2 {
        return Err(IoError::parse(path, 2, "need at least two samples"));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(IoError::parse(path, 3, "time stamps must increase"));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.max(1.0) + 1e-9 {
            return Err(IoError::parse(path, k + 3, "time stamps are not uniformly spaced"));
        }
    }
    Ok(ChestMotionTrace::new(samples, 1.0 / dt, unit))
}

/// Applies a side-car to a parsed trace: exact sample rate and ground truth.
pub fn apply_meta(trace: &mut ChestMotionTrace, text: &str, path: &str) -> Result<(), IoError> {
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| IoError::parse(path, i + 1, "expected key=value"))?;
        match k.trim() {
            "sample_rate" => {
                trace.sample_rate = v.trim().parse().map_err(|_| IoError::parse(path, i + 1, "bad sample_rate"))?;
            }
            "ground_truth" => {
                let gt: GroundTruth =
                    serde_json::from_str(v.trim()).map_err(|e| IoError::parse(path, i + 1, format!("bad ground_truth: {e}")))?;
                trace.ground_truth = Some(gt);
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io { path: dir.display().to_string(), source })?;
    }
    fs::write(path, contents).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Writes `path` and `path.meta`.
pub fn save_trace(path: &Path, trace: &ChestMotionTrace) -> Result<(), IoError> {
    write_file(path, &trace_to_csv(trace))?;
    write_file(&meta_path(path), &trace_meta(trace))
}

/// Reads a trace and, when present, its side-car.
pub fn load_trace(path: &Path) -> Result<ChestMotionTrace, IoError> {
    let name = path.display().to_string();
    let mut trace = trace_from_csv(&read(path)?, &name)?;
    let meta = meta_path(path);
    if meta.exists() {
        apply_meta(&mut trace, &read(&meta)?, &meta.display().to_string())?;
    }
    Ok(trace)
}

/// `window_start_s,mode_idx,center_freq_hz,energy_share` for every window
/// that produced a decomposition.
pub fn modes_csv(windows: &[WindowDiagnostic]) -> String {
    let mut out = String::from("window_start_s,mode_idx,center_freq_hz,energy_share\n");
    for w in windows {
        let Some(ms) = &w.modes else { continue };
        let e = ms.energies();
        let total: f64 = e.iter().sum();
        for (k, f) in ms.center_freqs.iter().enumerate() {
            let share = if total > 0.0 { e[k] / total } else { 0.0 };
            let _ = writeln!(out, "{},{},{},{}", w.start, k, f, share);
        }
    }
    out
}

/// `window_start_s,mode_idx,label,peak_freq_hz,energy` for every classified
/// window.
pub fn labels_csv(windows: &[WindowDiagnostic]) -> String {
    let mut out = String::from("window_start_s,mode_idx,label,peak_freq_hz,energy\n");
    for w in windows {
        let Some(c) = &w.classification else { continue };
        for (k, l) in c.labels.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", w.start, k, l.label, l.peak_freq, l.energy);
        }
    }
    out
}
