//! Closed-loop evaluation: synthesize, optionally pass through the radar
//! simulator, estimate, and score against the generating trajectory.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{HrShape, RunConfig};
use crate::hr::mean_abs_error;
use crate::io::{labels_csv, modes_csv, trace_meta, trace_to_csv, write_file, IoError};
use crate::pipeline::estimate_trace;
use crate::radar::{phase_to_displacement, simulate_frames, track_target, Target, TargetScene};
use crate::signal::{synthesize_trace, ChestMotionTrace, HeartbeatModel, RateTrajectory, Waveform};

/// How the synthetic chest motion reaches the estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum Acquisition {
    /// The displacement trace is fed in as is.
    Direct,
    /// The trace drives a target in the FMCW simulator and is recovered from
    /// the range-bin phase. `config.target_range`, `drift` and `noise_floor`
    /// place the target.
    Radar {
        /// A second, still-breathing person at this range (m), resting at 70 bpm.
        second_target: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: RunConfig,
    pub acquisition: Acquisition,
    pub repetitions: usize,
    /// Repetition `k` runs with seed `seed_base + k`.
    pub seed_base: u64,
}

impl Scenario {
    pub fn new(name: &str, config: RunConfig, acquisition: Acquisition) -> Self {
        let repetitions = config.repetitions;
        let seed_base = config.seed;
        Self { name: name.into(), config, acquisition, repetitions, seed_base }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.repetitions < 3 {
            return Err(format!("scenario {}: repetitions must be at least 3, got {}", self.name, self.repetitions));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(format!("scenario name {:?} must be a non-empty path component", self.name));
        }
        self.config.validate().map_err(|e| format!("scenario {}: {e}", self.name))
    }
}

/// One repetition of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    /// Mean ΔHR in bpm, or the failure message.
    pub result: Result<f64, String>,
    /// Largest single-instant ΔHR.
    pub max_error: Option<f64>,
    pub coincidence_windows: usize,
    /// Archive files relative to `scenario/rep_k/`.
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub scenario: String,
    pub repetitions: Vec<Repetition>,
}

impl ScoreRow {
    pub fn values(&self) -> Vec<f64> {
        self.repetitions.iter().filter_map(|r| r.result.as_ref().ok().copied()).collect()
    }

    pub fn failed(&self) -> usize {
        self.repetitions.iter().filter(|r| r.result.is_err()).count()
    }

    /// Mean over the successful repetitions.
    pub fn mean(&self) -> Option<f64> {
        let v = self.values();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Sample standard deviation over the successful repetitions.
    pub fn std(&self) -> Option<f64> {
        let v = self.values();
        let m = self.mean()?;
        if v.len() < 2 {
            return Some(0.0);
        }
        Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// `scenario,repetitions,failed,mean_dhr_bpm,std_dhr_bpm,values`, with
    /// per-repetition values joined by `;` and failed cells written as
    /// `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,repetitions,failed,mean_dhr_bpm,std_dhr_bpm,values\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
        for row in &self.rows {
            let cells: Vec<String> = row
                .repetitions
                .iter()
                .map(|r| r.result.as_ref().map_or_else(|_| "failed".to_string(), |v| v.to_string()))
                .collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.scenario,
                row.repetitions.len(),
                row.failed(),
                opt(row.mean()),
                opt(row.std()),
                cells.join(";")
            );
        }
        out
    }

    pub fn archived_reports(&self) -> usize {
        self.rows.iter().flat_map(|r| &r.repetitions).filter(|r| r.files.iter().any(|(n, _)| n == "report.txt")).count()
    }

    /// Writes `scores.csv` and `scenario/rep_k/*` under `root`.
    pub fn write_archive(&self, root: &Path) -> Result<(), IoError> {
        write_file(&root.join("scores.csv"), &self.to_csv())?;
        for row in &self.rows {
            for rep in &row.repetitions {
                let dir = root.join(&row.scenario).join(format!("rep_{}", rep.index));
                for (name, contents) in &rep.files {
                    write_file(&dir.join(name), contents)?;
                }
            }
        }
        Ok(())
    }
}

fn acquire(scenario: &Scenario, cfg: &RunConfig, seed: u64) -> Result<ChestMotionTrace, String> {
    let trace = cfg.synthesize().map_err(|e| format!("synth: {e}"))?;
    let Acquisition::Radar { second_target } = &scenario.acquisition else {
        return Ok(trace);
    };
    let radar = cfg.radar();
    let mut first = Target::new(cfg.target_range, trace.clone());
    first.drift = cfg.drift;
    let mut targets = vec![first];
    if let Some(range) = second_target {
        let resp = cfg.respiration().map_err(|e| format!("synth: {e}"))?;
        let heart = HeartbeatModel::new(RateTrajectory::Constant { bpm: 70.0 }, cfg.heart_amplitude, Waveform::Sinusoid);
        let other = synthesize_trace(Some(&resp), Some(&heart), 0.0, cfg.sample_rate, cfg.duration, seed ^ 0x5eed)
            .map_err(|e| format!("synth: {e}"))?;
        targets.push(Target::new(*range, other));
    }
    let scene = TargetScene { targets, noise_floor: cfg.noise_floor };
    let cube = simulate_frames(&radar, &scene, cfg.duration, seed).map_err(|e| format!("radar: {e}"))?;
    let seq = track_target(&cube, cfg.target_range, cfg.search_width).map_err(|e| format!("radar: {e}"))?;
    let mut recovered = phase_to_displacement(&seq, cube.wavelength());
    recovered.ground_truth = trace.ground_truth;
    Ok(recovered)
}

fn run_repetition(scenario: &Scenario, index: usize) -> Repetition {
    let seed = scenario.seed_base.wrapping_add(index as u64);
    let mut cfg = scenario.config.clone();
    cfg.seed = seed;
    let mut rep = Repetition { index, seed, result: Err(String::new()), max_error: None, coincidence_windows: 0, files: Vec::new() };
    rep.files.push(("config.txt".into(), cfg.to_key_value()));
    let trace = match acquire(scenario, &cfg, seed) {
        Ok(t) => t,
        Err(e) => {
            rep.files.push(("error.txt".into(), format!("{e}\n")));
            rep.result = Err(e);
            return rep;
        }
    };
    rep.files.push(("trace.csv".into(), trace_to_csv(&trace)));
    rep.files.push(("trace.csv.meta".into(), trace_meta(&trace)));
    let out = match estimate_trace(&trace, &cfg.pipeline()) {
        Ok(o) => o,
        Err(e) => {
            let msg = format!("estimate: {e}");
            rep.files.push(("error.txt".into(), format!("{msg}\n")));
            rep.result = Err(msg);
            return rep;
        }
    };
    rep.coincidence_windows = out.diagnostics().coincidence_windows;
    rep.files.push(("hr.csv".into(), out.series.to_csv()));
    rep.files.push(("modes.csv".into(), modes_csv(&out.windows)));
    rep.files.push(("labels.csv".into(), labels_csv(&out.windows)));
    if let Some(report) = &out.report {
        rep.files.push(("report.txt".into(), report.to_key_value()));
        rep.files.push(("report.json".into(), report.to_json()));
    }
    let truth = trace.true_rate().cloned();
    rep.result = match truth.as_ref().and_then(|t| mean_abs_error(&out.series, t)) {
        Some(v) => Ok(v),
        None => Err("no ground truth to score against".into()),
    };
    rep.max_error =
        truth.map(|t| out.series.points.iter().map(|p| (t.bpm(p.time) - p.hr_bpm).abs()).fold(0.0, f64::max));
    rep
}

/// Runs every repetition (concurrently) and collects them in order.
pub fn run_scenario(scenario: &Scenario) -> Result<ScoreRow, String> {
    scenario.validate()?;
    let repetitions = (0..scenario.repetitions).into_par_iter().map(|k| run_repetition(scenario, k)).collect();
    Ok(ScoreRow { scenario: scenario.name.clone(), repetitions })
}

/// Runs the scenarios in order.
pub fn sweep(scenarios: &[Scenario]) -> Result<ScoreTable, String> {
    let rows = scenarios.iter().map(run_scenario).collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreTable { rows })
}

/// The standard scenario set, derived from `base` (which supplies seeds,
/// repetitions and every pipeline setting).
pub fn default_scenarios(base: &RunConfig) -> Vec<Scenario> {
    let with = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    let mut out = vec![
        Scenario::new(
            "clean_constant",
            with(&|c| {
                c.hr_shape = HrShape::Constant;
                c.hr_initial = 110.0;
                c.snr_db = 30.0;
            }),
            Acquisition::Direct,
        ),
        Scenario::new(
            "zero_noise_no_harmonics",
            with(&|c| {
                c.hr_shape = HrShape::Constant;
                c.hr_initial = 90.0;
                c.resp_harmonics = vec![1.0];
                c.snr_db = f64::INFINITY;
            }),
            Acquisition::Direct,
        ),
        Scenario::new("recovery_152_120", base.clone(), Acquisition::Direct),
    ];
    for offset in [40.0, 60.0, 80.0] {
        out.push(Scenario::new(
            &format!("initial_plus_{offset}"),
            with(&|c| {
                c.hr_shape = HrShape::Exponential;
                c.hr_initial = 80.0 + offset;
                c.hr_final = 80.0;
            }),
            Acquisition::Direct,
        ));
    }
    for snr in [10.0, 5.0] {
        out.push(Scenario::new(&format!("snr_{snr}db"), with(&|c| c.snr_db = snr), Acquisition::Direct));
    }
    out.push(Scenario::new("radar_1m", with(&|c| c.snr_db = 30.0), Acquisition::Radar { second_target: None }));
    out.push(Scenario::new(
        "radar_noise_floor",
        with(&|c| {
            c.snr_db = 30.0;
            c.noise_floor = 10.0;
        }),
        Acquisition::Radar { second_target: None },
    ));
    out.push(Scenario::new("radar_two_people", with(&|c| c.snr_db = 30.0), Acquisition::Radar { second_target: Some(2.0) }));
    out.push(Scenario::new("harmonic_coincidence", coincidence_sweep(base), Acquisition::Direct));
    out
}

/// Heart rate ramping linearly from 72 to 40 bpm over the trace, crossing
/// three and then two times the 0.35 Hz breathing rate.
pub fn coincidence_sweep(base: &RunConfig) -> RunConfig {
    let mut c = base.clone();
    c.resp_freq = 0.35;
    c.hr_shape = HrShape::Linear;
    c.hr_initial = 72.0;
    c.hr_final = 40.0;
    c.hr_tau = c.duration;
    c
}
