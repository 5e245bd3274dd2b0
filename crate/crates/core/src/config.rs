//! Flat `key=value` run configuration shared by every subcommand.
//!
//! A config file supplies values, `--set key=value` style overrides replace
//! them, and defaults fill the rest. [`RunConfig::to_key_value`] echoes the
//! resolved configuration in the same syntax, so an echo parses back to an
//! identical config.

use std::fmt::Write as _;

use thiserror::Error;

use crate::hr::WindowConfig;
use crate::modes::SelectConfig;
use crate::pipeline::PipelineConfig;
use crate::preprocess::FilterSpec;
use crate::radar::RadarConfig;
use crate::signal::{
    exponential_recovery, noise_std_for_snr, synthesize_trace, ChestMotionTrace, HeartbeatModel, RateTrajectory,
    RespirationModel, SignalError, Waveform,
};
use crate::vmd::{AlphaRange, GateThresholds, VmdParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: unknown key {key:?}; valid keys: {}", valid.join(", "))]
    UnknownKey { origin: String, key: String, valid: Vec<&'static str> },
    #[error("{origin}: expected key=value, found {text:?}")]
    Syntax { origin: String, text: String },
    #[error("{origin}: bad value for {key}: {message}")]
    BadValue { origin: String, key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invariant(String),
}

/// Conversion between config text and field values.
pub trait ConfigValue: Sized {
    fn parse_value(text: &str) -> Result<Self, String>;
    fn render(&self) -> String;
}

impl ConfigValue for f64 {
    fn parse_value(text: &str) -> Result<Self, String> {
        text.parse::<f64>().map_err(|e| format!("{text:?}: {e}"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for usize {
    fn parse_value(text: &str) -> Result<Self, String> {
        text.parse::<usize>().map_err(|e| format!("{text:?}: {e}"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse_value(text: &str) -> Result<Self, String> {
        text.parse::<u64>().map_err(|e| format!("{text:?}: {e}"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(text: &str) -> Result<Self, String> {
        text.split(',').map(|s| f64::parse_value(s.trim())).collect()
    }
    fn render(&self) -> String {
        self.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl ConfigValue for Waveform {
    fn parse_value(text: &str) -> Result<Self, String> {
        match text {
            "sinusoid" => Ok(Waveform::Sinusoid),
            "pulse_like" => Ok(Waveform::PulseLike),
            other => Err(format!("{other:?}: expected sinusoid or pulse_like")),
        }
    }
    fn render(&self) -> String {
        match self {
            Waveform::Sinusoid => "sinusoid".into(),
            Waveform::PulseLike => "pulse_like".into(),
        }
    }
}

/// Shape of the synthetic heart-rate trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrShape {
    Constant,
    Exponential,
    Linear,
}

impl ConfigValue for HrShape {
    fn parse_value(text: &str) -> Result<Self, String> {
        match text {
            "constant" => Ok(HrShape::Constant),
            "exponential" => Ok(HrShape::Exponential),
            "linear" => Ok(HrShape::Linear),
            other => Err(format!("{other:?}: expected constant, exponential or linear")),
        }
    }
    fn render(&self) -> String {
        match self {
            HrShape::Constant => "constant".into(),
            HrShape::Exponential => "exponential".into(),
            HrShape::Linear => "linear".into(),
        }
    }
}

macro_rules! run_config {
    ($( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr, )*) => {
        /// Every tunable of the synthesizer, simulator and pipeline.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( $(#[doc = $doc])* pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$( stringify!($field), )*];

            /// `Ok(false)` for an unknown key.
            fn set_raw(&mut self, key: &str, value: &str) -> Result<bool, String> {
                match key {
                    $( stringify!($field) => {
                        self.$field = <$ty as ConfigValue>::parse_value(value)?;
                        Ok(true)
                    } )*
                    _ => Ok(false),
                }
            }

            pub fn to_key_value(&self) -> String {
                let mut out = String::new();
                $( let _ = writeln!(out, "{}={}", stringify!($field), ConfigValue::render(&self.$field)); )*
                out
            }
        }
    };
}

run_config! {
    seed: u64 = 1,
    /// Trace length in seconds.
    duration: f64 = 60.0,
    sample_rate: f64 = 100.0,
    resp_freq: f64 = 0.35,
    /// Amplitudes in mm, fundamental first.
    resp_harmonics: Vec<f64> = vec![1.0, 0.3, 0.15, 0.08],
    resp_phase: f64 = 0.0,
    hr_shape: HrShape = HrShape::Exponential,
    hr_initial: f64 = 152.0,
    hr_final: f64 = 120.0,
    /// Time constant (exponential) or ramp duration (linear), seconds.
    hr_tau: f64 = 30.0,
    heart_amplitude: f64 = 0.1,
    waveform: Waveform = Waveform::Sinusoid,
    /// Displacement SNR of the synthetic trace, dB.
    snr_db: f64 = 15.0,
    carrier_freq: f64 = 79e9,
    bandwidth: f64 = 4e9,
    chirp_duration: f64 = 50e-6,
    samples_per_chirp: usize = 256,
    target_range: f64 = 1.0,
    drift: f64 = 0.0,
    noise_floor: f64 = 0.0,
    search_width: usize = 2,
    pass_low: f64 = 0.2,
    pass_high: f64 = 3.4,
    filter_order: usize = 4,
    modes: usize = 6,
    tolerance: f64 = 1e-7,
    max_iters: usize = 500,
    tau: f64 = 0.0,
    mirror_fraction: f64 = 0.1,
    alpha_lo: f64 = 10.0,
    alpha_hi: f64 = 1e6,
    alpha_stop_ratio: f64 = 1.1,
    mu1: f64 = 0.2,
    mu2: f64 = 1e-4,
    working_rate: f64 = 20.0,
    hr_band_low: f64 = 0.6,
    hr_band_high: f64 = 3.4,
    resp_band_low: f64 = 10.0 / 60.0,
    resp_band_high: f64 = 0.7,
    harmonic_tol: f64 = 0.08,
    max_harmonic: usize = 5,
    min_prominence: f64 = 4.0,
    peak_half_width: f64 = 0.3,
    min_in_band_fraction: f64 = 0.5,
    min_energy_share: f64 = 0.03,
    l_min: f64 = 5.0,
    l_b_max: f64 = 8.0,
    l_min_low: f64 = 3.0,
    l_min_high: f64 = 8.0,
    cadence: f64 = 1.0,
    repetitions: usize = 3,
}

impl RunConfig {
    /// Sets one key from text, reporting errors against `origin`.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        match self.set_raw(key, value) {
            Ok(true) => Ok(()),
            Ok(false) => Err(ConfigError::UnknownKey { origin: origin.into(), key: key.into(), valid: Self::KEYS.to_vec() }),
            Err(message) => Err(ConfigError::BadValue { origin: origin.into(), key: key.into(), message }),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            filter: FilterSpec {
                pass_low: self.pass_low,
                pass_high: self.pass_high,
                prototype_order: self.filter_order,
                ..FilterSpec::default()
            },
            vmd: VmdParams {
                modes: self.modes,
                tau: self.tau,
                tolerance: self.tolerance,
                max_iters: self.max_iters,
                mirror_fraction: self.mirror_fraction,
                ..VmdParams::default()
            },
            gates: GateThresholds { mu1: self.mu1, mu2: self.mu2 },
            alpha_range: AlphaRange { lo: self.alpha_lo, hi: self.alpha_hi, stop_ratio: self.alpha_stop_ratio },
            select: SelectConfig {
                hr_band: (self.hr_band_low, self.hr_band_high),
                respiration_band: (self.resp_band_low, self.resp_band_high),
                harmonic_tol: self.harmonic_tol,
                max_harmonic: self.max_harmonic as u32,
                min_prominence: self.min_prominence,
                peak_half_width: self.peak_half_width,
                min_in_band_fraction: self.min_in_band_fraction,
                min_energy_share: self.min_energy_share,
            },
            window: WindowConfig {
                l_min: self.l_min,
                l_b_max: self.l_b_max,
                l_min_bounds: (self.l_min_low, self.l_min_high),
                cadence: self.cadence,
            },
            working_rate: self.working_rate,
        }
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig {
            carrier_freq: self.carrier_freq,
            bandwidth: self.bandwidth,
            chirp_duration: self.chirp_duration,
            samples_per_chirp: self.samples_per_chirp,
            frame_rate: self.sample_rate,
        }
    }

    pub fn respiration(&self) -> Result<RespirationModel, SignalError> {
        RespirationModel::new(self.resp_freq, self.resp_harmonics.clone(), self.resp_phase)
    }

    pub fn trajectory(&self) -> Result<RateTrajectory, SignalError> {
        match self.hr_shape {
            HrShape::Constant => Ok(RateTrajectory::Constant { bpm: self.hr_initial }),
            HrShape::Exponential => exponential_recovery(self.hr_initial, self.hr_final, self.hr_tau),
            HrShape::Linear => Ok(RateTrajectory::Linear { start: self.hr_initial, end: self.hr_final, duration: self.hr_tau }),
        }
    }

    pub fn heartbeat(&self) -> Result<HeartbeatModel, SignalError> {
        Ok(HeartbeatModel::new(self.trajectory()?, self.heart_amplitude, self.waveform))
    }

    /// The synthetic chest-motion trace these settings describe.
    pub fn synthesize(&self) -> Result<ChestMotionTrace, SignalError> {
        let resp = self.respiration()?;
        let heart = self.heartbeat()?;
        let std = noise_std_for_snr(Some(&resp), Some(&heart), self.sample_rate, self.duration, self.snr_db)?;
        synthesize_trace(Some(&resp), Some(&heart), std, self.sample_rate, self.duration, self.seed)
    }

    /// Checks the invariants of every stage's parameters.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invariant(msg));
        if !(self.mu1 > 0.0 && self.mu1 < 1.0) {
            return fail(format!("mu1 must lie in (0, 1), got {}", self.mu1));
        }
        if !(self.mu2 >= 0.0 && self.mu2 < 1.0) {
            return fail(format!("mu2 must be in [0, 1) (an energy ratio below 1), got {}", self.mu2));
        }
        if !(self.alpha_lo > 0.0 && self.alpha_lo < self.alpha_hi) {
            return fail(format!("need 0 < alpha_lo < alpha_hi, got {} and {}", self.alpha_lo, self.alpha_hi));
        }
        if !(self.alpha_stop_ratio > 1.0) {
            return fail(format!("alpha_stop_ratio must exceed 1, got {}", self.alpha_stop_ratio));
        }
        if !(self.hr_band_low > 0.0 && self.hr_band_low < self.hr_band_high) {
            return fail("hr_band_low must be positive and below hr_band_high".into());
        }
        if !(self.resp_band_low > 0.0 && self.resp_band_low < self.resp_band_high) {
            return fail("resp_band_low must be positive and below resp_band_high".into());
        }
        if !(self.harmonic_tol > 0.0 && self.harmonic_tol < 0.5) {
            return fail(format!("harmonic_tol must lie in (0, 0.5), got {}", self.harmonic_tol));
        }
        if self.max_harmonic < 2 {
            return fail("max_harmonic must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.min_in_band_fraction) || !(0.0..1.0).contains(&self.min_energy_share) {
            return fail("min_in_band_fraction must lie in [0, 1] and min_energy_share in [0, 1)".into());
        }
        if self.repetitions < 3 {
            return fail(format!("repetitions must be at least 3, got {}", self.repetitions));
        }
        if !(self.duration > 0.0) {
            return fail(format!("duration must be positive, got {}", self.duration));
        }
        self.pipeline().validate(self.sample_rate).map_err(|e| ConfigError::Invariant(e.to_string()))?;
        self.radar().validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        Ok(())
    }
}

/// Resolves a config from optional file text and `key=value` overrides,
/// then validates it.
pub fn parse_config(file: Option<(&str, &str)>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some((name, text)) = file {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{name}:{}", i + 1);
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { origin: origin.clone(), text: line.into() })?;
            cfg.set(k.trim(), v.trim(), &origin)?;
        }
    }
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Syntax { origin: "--set".into(), text: o.clone() })?;
        cfg.set(k.trim(), v.trim(), "--set")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = parse_config(None, &[]).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.pipeline(), PipelineConfig::default());
    }

    #[test]
    fn override_reaches_gates() {
        let cfg = parse_config(Some(("c.conf", "mu1 = 0.3\n")), &["mu1=0.5".into()]).unwrap();
        assert_eq!(cfg.pipeline().gates.mu1, 0.5);
    }

    #[test]
    fn mu2_above_one_rejected() {
        let err = parse_config(None, &["mu2=1.5".into()]).unwrap_err();
        assert!(err.to_string().contains("mu2 must be in [0, 1)"), "{err}");
    }

    #[test]
    fn unknown_key_lists_valid_ones() {
        let err = parse_config(Some(("c.conf", "# comment\nmu3=1\n")), &[]).unwrap_err();
        let text = err.to_string();
        assert!(text.starts_with("c.conf:2: unknown key \"mu3\""), "{text}");
        assert!(text.contains("mu1") && text.contains("l_b_max"));
    }

    #[test]
    fn echo_parses_back_identically() {
        let cfg = parse_config(None, &["resp_harmonics=1,0.25".into(), "waveform=pulse_like".into(), "seed=9".into()]).unwrap();
        let back = parse_config(Some(("echo", &cfg.to_key_value())), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(RunConfig::KEYS.len(), cfg.to_key_value().lines().count());
    }
}
