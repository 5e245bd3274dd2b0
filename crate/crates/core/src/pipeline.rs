//! End-to-end estimation: trace in, recovery report out.
//!
//! The trace is band-passed and differenced at its own rate, then reduced to
//! the working rate of the decomposition. Every outer window is decomposed
//! with a searched penalty, its heartbeat mode is picked and turned into a
//! peak train; the composite counting windows turn the trains into a rate
//! curve.

use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::hr::{
    build_report, condition_heartbeat, detect_peaks, run_composite_windows, CompositeRun, HrError, HrSeries,
    HrrReport, ReportDiagnostics, WindowConfig,
};
use crate::modes::{classify_modes, Classification, SelectConfig};
use crate::preprocess::{bandpass, difference, FilterSpec, PreprocessError};
use crate::signal::ChestMotionTrace;
use crate::vmd::{select_alpha, AlphaProbe, AlphaRange, GateThresholds, ModeSet, VmdError, VmdParams};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Vmd(#[from] VmdError),
    #[error(transparent)]
    Hr(#[from] HrError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineConfig {
    #[serde(skip)]
    pub filter: FilterSpec,
    pub vmd: VmdParams,
    pub gates: GateThresholds,
    pub alpha_range: AlphaRange,
    pub select: SelectConfig,
    pub window: WindowConfig,
    /// Rate the decomposition runs at; the trace is decimated by the largest
    /// integer factor that stays at or above it.
    pub working_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter: FilterSpec::default(),
            vmd: VmdParams::default(),
            gates: GateThresholds::default(),
            alpha_range: AlphaRange::default(),
            select: SelectConfig::default(),
            window: WindowConfig::default(),
            working_rate: 20.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, sample_rate: f64) -> Result<(), PipelineError> {
        self.filter.validate(sample_rate)?;
        self.vmd.validate()?;
        self.gates.validate()?;
        self.window.validate()?;
        if !(self.working_rate > 2.0 * self.filter.pass_high) {
            return Err(PipelineError::Config(format!(
                "working rate {} must exceed twice the pass band edge {}",
                self.working_rate, self.filter.pass_high
            )));
        }
        Ok(())
    }

    pub fn decimation(&self, sample_rate: f64) -> usize {
        ((sample_rate / self.working_rate).floor() as usize).max(1)
    }
}

/// What happened inside one outer window.
#[derive(Debug, Clone, Serialize)]
pub struct WindowDiagnostic {
    pub index: usize,
    pub start: f64,
    pub alpha: Option<f64>,
    /// The penalty passed both gates (otherwise the least violating probe
    /// was used).
    pub feasible: bool,
    pub probes: Vec<AlphaProbe>,
    pub classification: Option<Classification>,
    pub peaks: usize,
    pub error: Option<String>,
    #[serde(skip)]
    pub modes: Option<ModeSet>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub series: HrSeries,
    /// Present when the curve covers the first minute.
    pub report: Option<HrrReport>,
    pub run: CompositeRun,
    pub windows: Vec<WindowDiagnostic>,
    /// Differenced, decimated signal the windows were cut from.
    pub working_signal: Vec<f64>,
    pub working_rate: f64,
}

impl PipelineOutput {
    pub fn diagnostics(&self) -> ReportDiagnostics {
        ReportDiagnostics {
            outer_windows: self.windows.len(),
            infeasible_windows: self.windows.iter().filter(|w| w.alpha.is_some() && !w.feasible).count(),
            coincidence_windows: self
                .windows
                .iter()
                .filter(|w| w.classification.as_ref().is_some_and(|c| c.used_coincidence_rule()))
                .count(),
            failed_windows: self.windows.iter().filter(|w| w.error.is_some()).count(),
            carried_points: self.series.carried(),
        }
    }
}

/// Band-pass, difference and decimate. Returns the working signal and rate.
pub fn prepare(trace: &ChestMotionTrace, cfg: &PipelineConfig) -> Result<(Vec<f64>, f64), PipelineError> {
    cfg.validate(trace.sample_rate)?;
    let filtered = bandpass(trace, &cfg.filter)?;
    let diff = difference(&filtered)?;
    let factor = cfg.decimation(trace.sample_rate);
    let samples = diff.samples.iter().step_by(factor).copied().collect();
    Ok((samples, trace.sample_rate / factor as f64))
}

/// Decomposes one window and classifies its modes.
pub fn analyze_window(
    samples: &[f64],
    sample_rate: f64,
    cfg: &PipelineConfig,
) -> (WindowDiagnostic, Option<(ModeSet, Classification)>) {
    let mut diag = WindowDiagnostic {
        index: 0,
        start: 0.0,
        alpha: None,
        feasible: false,
        probes: Vec::new(),
        classification: None,
        peaks: 0,
        error: None,
        modes: None,
    };
    let ms = match select_alpha(samples, sample_rate, &cfg.vmd, &cfg.gates, &cfg.alpha_range) {
        Ok(sel) => {
            diag.alpha = Some(sel.alpha);
            diag.feasible = true;
            diag.probes = sel.probes;
            sel.modes
        }
        Err(VmdError::Infeasible { best_alpha, best, .. }) => {
            diag.alpha = Some(best_alpha);
            *best
        }
        Err(e) => {
            diag.error = Some(e.to_string());
            return (diag, None);
        }
    };
    diag.modes = Some(ms.clone());
    match classify_modes(&ms, &cfg.select) {
        Ok(c) => {
            diag.classification = Some(c.clone());
            (diag, Some((ms, c)))
        }
        Err(e) => {
            diag.error = Some(e.to_string());
            (diag, None)
        }
    }
}

/// Runs the whole chain on a chest-motion trace.
pub fn estimate_trace(trace: &ChestMotionTrace, cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let (working, rate) = prepare(trace, cfg)?;
    let diags: Mutex<Vec<Option<WindowDiagnostic>>> = Mutex::new(Vec::new());
    let run = run_composite_windows(&working, rate, &cfg.window, |index, start, samples| {
        let (mut diag, picked) = analyze_window(samples, rate, cfg);
        diag.index = index;
        diag.start = start;
        let outcome = match picked {
            Some((ms, c)) => match condition_heartbeat(&ms.modes[c.heartbeat], rate) {
                Ok(y) => Ok(detect_peaks(&y, rate)),
                Err(e) => Err(e.to_string()),
            },
            None => Err(diag.error.clone().unwrap_or_default()),
        };
        match &outcome {
            Ok(train) => diag.peaks = train.len(),
            Err(e) => diag.error = Some(e.clone()),
        }
        let mut all = diags.lock().expect("diagnostics lock");
        if all.len() <= index {
            all.resize(index + 1, None);
        }
        all[index] = Some(diag);
        outcome
    })?;
    let windows: Vec<WindowDiagnostic> = diags.into_inner().expect("diagnostics lock").into_iter().flatten().collect();
    let series = run.series.clone();
    let mut out = PipelineOutput { series, report: None, run, windows, working_signal: working, working_rate: rate };
    if let Ok(mut report) = build_report(&out.series, trace.true_rate()) {
        report.diagnostics = out.diagnostics();
        out.report = Some(report);
    }
    Ok(out)
}
