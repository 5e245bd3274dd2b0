//! Synthetic chest-motion signals with known ground truth.
//!
//! A chest-motion trace is the sum of a quasi-periodic respiration waveform
//! (a cosine series over the breathing fundamental), a heartbeat waveform
//! whose instantaneous rate follows a [`RateTrajectory`], and white Gaussian
//! noise. The heartbeat phase is integrated in closed form from the rate, so
//! the instantaneous frequency of every synthesized trace is exact.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest admissible breathing rate, 10 breaths per minute.
pub const MIN_RESPIRATION_HZ: f64 = 10.0 / 60.0;
/// Highest harmonic order (counting the fundamental as order 1) kept by the model.
pub const MAX_HARMONIC_ORDER: usize = 6;
/// Admissible heart-rate range of a trajectory, in bpm.
pub const HR_RANGE_BPM: (f64, f64) = (40.0, 220.0);
/// Minimum sample rate of a chest-motion trace.
pub const MIN_SAMPLE_RATE: f64 = 20.0;
/// Sample rate used when none is given.
pub const DEFAULT_SAMPLE_RATE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("respiration fundamental {0} Hz is below the 10 breaths/min floor")]
    RespirationTooSlow(f64),
    #[error("respiration fundamental amplitude must be positive, got {0}")]
    NoFundamental(f64),
    #[error("respiration has {0} nonzero harmonics above the fundamental, at most 5 allowed")]
    TooManyHarmonics(usize),
    #[error("heart rate {bpm:.2} bpm at t={t:.2} s is outside [40, 220] bpm")]
    RateOutOfRange { t: f64, bpm: f64 },
    #[error("heartbeat amplitude {heart} mm must be positive and below the respiration fundamental {resp} mm")]
    HeartAmplitude { heart: f64, resp: f64 },
    #[error("recovery trajectory needs hr_initial >= hr_final > 0, got {initial} -> {final_}")]
    RecoveryOrder { initial: f64, final_: f64 },
    #[error("time constant must be positive, got {0}")]
    TimeConstant(f64),
    #[error("sample rate {0} Hz is below the 20 Hz minimum")]
    SampleRate(f64),
    #[error("duration must be positive, got {0}")]
    Duration(f64),
    #[error("noise standard deviation must be finite and non-negative, got {0}")]
    Noise(f64),
    #[error("trace has {len} samples, expected round({fs} * {duration}) = {expected}")]
    Length { len: usize, fs: f64, duration: f64, expected: usize },
}

/// Quasi-periodic breathing waveform `sum_n a_n cos(n (2 pi f t + phase))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespirationModel {
    pub fundamental_freq: f64,
    /// Cosine-series amplitudes in mm. Element `i` is the coefficient of
    /// harmonic order `i + 1`; the DC term is absent.
    pub harmonic_amplitudes: Vec<f64>,
    pub phase_offset: f64,
}

impl RespirationModel {
    pub fn new(fundamental_freq: f64, harmonic_amplitudes: Vec<f64>, phase_offset: f64) -> Result<Self, SignalError> {
        let model = Self { fundamental_freq, harmonic_amplitudes, phase_offset };
        model.validate()?;
        Ok(model)
    }

    /// A single-cosine breathing model.
    pub fn sinusoid(freq: f64, amplitude: f64) -> Result<Self, SignalError> {
        Self::new(freq, vec![amplitude], 0.0)
    }

    /// Coefficient of harmonic order `n`; `n = 0` (DC) is always zero.
    pub fn amplitude(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.harmonic_amplitudes.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn period(&self) -> f64 {
        1.0 / self.fundamental_freq
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.fundamental_freq >= MIN_RESPIRATION_HZ) {
            return Err(SignalError::RespirationTooSlow(self.fundamental_freq));
        }
        let fundamental = self.amplitude(1);
        if !(fundamental > 0.0) {
            return Err(SignalError::NoFundamental(fundamental));
        }
        let extra = self.harmonic_amplitudes.iter().skip(1).filter(|a| **a != 0.0).count();
        if extra > MAX_HARMONIC_ORDER - 1 || self.harmonic_amplitudes.len() > MAX_HARMONIC_ORDER {
            return Err(SignalError::TooManyHarmonics(extra.max(self.harmonic_amplitudes.len() - 1)));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        let arg = 2.0 * PI * self.fundamental_freq * t + self.phase_offset;
        self.harmonic_amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * arg).cos())
            .sum()
    }
}

/// Instantaneous heart rate as a function of time, in bpm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateTrajectory {
    Constant { bpm: f64 },
    /// `final + (initial - final) * exp(-t / tau)`
    Exponential { initial: f64, final_: f64, time_constant: f64 },
    /// Linear ramp from `start` to `end` over `duration`, constant afterwards.
    Linear { start: f64, end: f64, duration: f64 },
}

impl RateTrajectory {
    pub fn bpm(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { bpm } => bpm,
            Self::Exponential { initial, final_, time_constant } => {
                final_ + (initial - final_) * (-t / time_constant).exp()
            }
            Self::Linear { start, end, duration } => {
                if t >= duration {
                    end
                } else {
                    start + (end - start) * t / duration
                }
            }
        }
    }

    /// Beats elapsed over `[0, t]`, i.e. the integral of `bpm / 60`.
    pub fn beats(&self, t: f64) -> f64 {
        match *self {
            Self::Constant { bpm } => bpm * t / 60.0,
            Self::Exponential { initial, final_, time_constant } => {
                let decay = -(-t / time_constant).exp_m1();
                (final_ * t + (initial - final_) * time_constant * decay) / 60.0
            }
            Self::Linear { start, end, duration } => {
                let ramp_t = t.min(duration);
                let ramp = start * ramp_t + 0.5 * (end - start) * ramp_t * ramp_t / duration;
                let tail = (t - duration).max(0.0) * end;
                (ramp + tail) / 60.0
            }
        }
    }

    /// Mean rate over `[t0, t1]` in bpm.
    pub fn mean_bpm(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 {
            return self.bpm(t0);
        }
        (self.beats(t1) - self.beats(t0)) / (t1 - t0) * 60.0
    }

    /// Times of beats `k = 1, 2, ...` (where the integrated phase crosses a
    /// multiple of a full cycle) inside `[0, duration]`.
    pub fn beat_times(&self, duration: f64) -> Vec<f64> {
        let total = self.beats(duration);
        let mut times = Vec::new();
        let mut k = 1.0;
        while k <= total {
            let (mut lo, mut hi) = (0.0, duration);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if self.beats(mid) < k {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            times.push(0.5 * (lo + hi));
            k += 1.0;
        }
        times
    }
}

/// Heart rate decaying exponentially from `hr_initial` toward `hr_final`.
pub fn exponential_recovery(hr_initial: f64, hr_final: f64, time_constant: f64) -> Result<RateTrajectory, SignalError> {
    if !(time_constant > 0.0) {
        return Err(SignalError::TimeConstant(time_constant));
    }
    if !(hr_final > 0.0 && hr_initial >= hr_final) {
        return Err(SignalError::RecoveryOrder { initial: hr_initial, final_: hr_final });
    }
    if hr_initial == hr_final {
        return Ok(RateTrajectory::Constant { bpm: hr_final });
    }
    Ok(RateTrajectory::Exponential { initial: hr_initial, final_: hr_final, time_constant })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Sinusoid,
    /// Raised-cosine pulse per beat, a quarter of the beat period wide.
    PulseLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeartbeatModel {
    pub rate: RateTrajectory,
    pub amplitude: f64,
    pub waveform: Waveform,
}

impl HeartbeatModel {
    pub fn new(rate: RateTrajectory, amplitude: f64, waveform: Waveform) -> Self {
        Self { rate, amplitude, waveform }
    }

    /// Integrated heartbeat phase in radians; beats sit at multiples of 2 pi.
    pub fn phase(&self, t: f64) -> f64 {
        2.0 * PI * self.rate.beats(t)
    }

    pub fn value(&self, t: f64) -> f64 {
        let cycles = self.rate.beats(t);
        match self.waveform {
            Waveform::Sinusoid => self.amplitude * (2.0 * PI * cycles).cos(),
            Waveform::PulseLike => {
                let u = (cycles + 0.5).rem_euclid(1.0) - 0.5;
                const WIDTH: f64 = 0.25;
                if u.abs() < WIDTH / 2.0 {
                    self.amplitude * 0.5 * (1.0 + (2.0 * PI * u / WIDTH).cos())
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self, duration: f64, resp: Option<&RespirationModel>) -> Result<(), SignalError> {
        // Every trajectory variant is monotone, so checking the endpoints suffices.
        for t in [0.0, duration] {
            let bpm = self.rate.bpm(t);
            if !(HR_RANGE_BPM.0..=HR_RANGE_BPM.1).contains(&bpm) {
                return Err(SignalError::RateOutOfRange { t, bpm });
            }
        }
        let resp_amp = resp.map(|r| r.amplitude(1)).unwrap_or(f64::INFINITY);
        if !(self.amplitude > 0.0 && self.amplitude < resp_amp) {
            return Err(SignalError::HeartAmplitude { heart: self.amplitude, resp: resp_amp });
        }
        Ok(())
    }
}

/// Physical unit carried by a [`ChestMotionTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Millimeters,
    Radians,
}

/// Everything needed to regenerate a synthetic trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub respiration: Option<RespirationModel>,
    pub heartbeat: Option<HeartbeatModel>,
    pub noise_std: f64,
    pub seed: u64,
}

/// A uniformly sampled chest displacement (or phase) sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChestMotionTrace {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub unit: Unit,
    pub ground_truth: Option<GroundTruth>,
}

impl ChestMotionTrace {
    pub fn new(samples: Vec<f64>, sample_rate: f64, unit: Unit) -> Self {
        Self { samples, sample_rate, unit, ground_truth: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self { samples, sample_rate: self.sample_rate, unit: self.unit, ground_truth: self.ground_truth.clone() }
    }

    /// The heart-rate trajectory, when the trace is synthetic.
    pub fn true_rate(&self) -> Option<&RateTrajectory> {
        self.ground_truth.as_ref()?.heartbeat.as_ref().map(|h| &h.rate)
    }

    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

pub fn sample_count(sample_rate: f64, duration: f64) -> usize {
    (sample_rate * duration).round() as usize
}

/// Sum of respiration, heartbeat and white Gaussian noise, sampled at
/// `sample_rate` for `duration` seconds. Either component may be absent.
pub fn synthesize_trace(
    resp: Option<&RespirationModel>,
    heart: Option<&HeartbeatModel>,
    noise_std: f64,
    sample_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<ChestMotionTrace, SignalError> {
    if !(duration > 0.0) {
        return Err(SignalError::Duration(duration));
    }
    if !(sample_rate >= MIN_SAMPLE_RATE) {
        return Err(SignalError::SampleRate(sample_rate));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(SignalError::Noise(noise_std));
    }
    if let Some(r) = resp {
        r.validate()?;
    }
    if let Some(h) = heart {
        h.validate(duration, resp)?;
    }

    let n = sample_count(sample_rate, duration);
    let mut samples = vec![0.0; n];
    if let Some(r) = resp {
        for (i, s) in samples.iter_mut().enumerate() {
            *s += r.value(i as f64 / sample_rate);
        }
    }
    if let Some(h) = heart {
        for (i, s) in samples.iter_mut().enumerate() {
            *s += h.value(i as f64 / sample_rate);
        }
    }
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std).map_err(|_| SignalError::Noise(noise_std))?;
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    Ok(ChestMotionTrace {
        samples,
        sample_rate,
        unit: Unit::Millimeters,
        ground_truth: Some(GroundTruth {
            respiration: resp.cloned(),
            heartbeat: heart.cloned(),
            noise_std,
            seed,
        }),
    })
}

/// Noise standard deviation that puts the noiseless components of a trace at
/// `snr_db` above white noise.
pub fn noise_std_for_snr(
    resp: Option<&RespirationModel>,
    heart: Option<&HeartbeatModel>,
    sample_rate: f64,
    duration: f64,
    snr_db: f64,
) -> Result<f64, SignalError> {
    let clean = synthesize_trace(resp, heart, 0.0, sample_rate, duration, 0)?;
    Ok((clean.power() / 10f64.powf(snr_db / 10.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp() -> RespirationModel {
        RespirationModel::new(0.3, vec![1.0], 0.0).unwrap()
    }

    #[test]
    fn recovery_closed_form() {
        let r = exponential_recovery(152.0, 120.0, 30.0).unwrap();
        let expected = 120.0 + 32.0 * (-2.0f64).exp();
        assert!((r.bpm(60.0) - expected).abs() < 1e-12);
        assert!((r.bpm(60.0) - 124.33).abs() < 0.01);
        let r = exponential_recovery(160.0, 100.0, 30.0).unwrap();
        assert_eq!(r.bpm(0.0), 160.0);
    }

    #[test]
    fn flat_recovery_is_constant() {
        let r = exponential_recovery(120.0, 120.0, 5.0).unwrap();
        for t in [0.0, 1.0, 59.0, 1e4] {
            assert_eq!(r.bpm(t), 120.0);
        }
    }

    #[test]
    fn recovery_rejects_bad_arguments() {
        assert_eq!(exponential_recovery(150.0, 120.0, 0.0), Err(SignalError::TimeConstant(0.0)));
        assert!(matches!(exponential_recovery(100.0, 120.0, 10.0), Err(SignalError::RecoveryOrder { .. })));
    }

    #[test]
    fn beats_integrate_rate() {
        // Trapezoid oracle on a fine grid.
        for traj in [
            RateTrajectory::Exponential { initial: 160.0, final_: 128.0, time_constant: 20.0 },
            RateTrajectory::Linear { start: 150.0, end: 100.0, duration: 30.0 },
        ] {
            let steps = 200_000;
            let t_end = 45.0;
            let h = t_end / steps as f64;
            let mut acc = 0.0;
            for i in 0..steps {
                let (a, b) = (traj.bpm(i as f64 * h), traj.bpm((i + 1) as f64 * h));
                acc += 0.5 * (a + b) * h / 60.0;
            }
            assert!((acc - traj.beats(t_end)).abs() < 1e-6, "{traj:?}");
        }
    }

    #[test]
    fn beat_times_land_on_whole_cycles() {
        let traj = RateTrajectory::Exponential { initial: 150.0, final_: 110.0, time_constant: 25.0 };
        let times = traj.beat_times(20.0);
        assert_eq!(times.len(), traj.beats(20.0).floor() as usize);
        for (k, t) in times.iter().enumerate() {
            assert!((traj.beats(*t) - (k + 1) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn respiration_invariants() {
        assert!(matches!(RespirationModel::sinusoid(0.1, 1.0), Err(SignalError::RespirationTooSlow(_))));
        assert!(matches!(RespirationModel::new(0.3, vec![0.0, 0.2], 0.0), Err(SignalError::NoFundamental(_))));
        assert!(matches!(
            RespirationModel::new(0.3, vec![1.0, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1], 0.0),
            Err(SignalError::TooManyHarmonics(_))
        ));
        let r = RespirationModel::new(0.3, vec![1.0, 0.3, 0.1, 0.05, 0.02, 0.01], 0.0).unwrap();
        assert_eq!(r.amplitude(0), 0.0);
        assert_eq!(r.amplitude(2), 0.3);
        assert_eq!(r.amplitude(9), 0.0);
    }

    #[test]
    fn heartbeat_invariants() {
        let heart = HeartbeatModel::new(RateTrajectory::Constant { bpm: 230.0 }, 0.1, Waveform::Sinusoid);
        let err = synthesize_trace(Some(&resp()), Some(&heart), 0.0, 100.0, 10.0, 0).unwrap_err();
        assert!(matches!(err, SignalError::RateOutOfRange { .. }));
        let heart = HeartbeatModel::new(RateTrajectory::Constant { bpm: 120.0 }, 2.0, Waveform::Sinusoid);
        let err = synthesize_trace(Some(&resp()), Some(&heart), 0.0, 100.0, 10.0, 0).unwrap_err();
        assert!(matches!(err, SignalError::HeartAmplitude { .. }));
    }

    #[test]
    fn trace_length_and_rate() {
        let t = synthesize_trace(Some(&resp()), None, 0.0, 100.0, 12.345, 0).unwrap();
        assert_eq!(t.len(), 1235);
        assert!(matches!(synthesize_trace(Some(&resp()), None, 0.0, 10.0, 5.0, 0), Err(SignalError::SampleRate(_))));
        assert!(matches!(synthesize_trace(Some(&resp()), None, 0.0, 100.0, 0.0, 0), Err(SignalError::Duration(_))));
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let a = synthesize_trace(Some(&resp()), None, 0.05, 100.0, 5.0, 7).unwrap();
        let b = synthesize_trace(Some(&resp()), None, 0.05, 100.0, 5.0, 7).unwrap();
        let c = synthesize_trace(Some(&resp()), None, 0.05, 100.0, 5.0, 8).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn pulse_peaks_on_beats() {
        let heart = HeartbeatModel::new(RateTrajectory::Constant { bpm: 60.0 }, 0.2, Waveform::PulseLike);
        assert!((heart.value(1.0) - 0.2).abs() < 1e-12);
        assert_eq!(heart.value(1.5), 0.0);
        // a quarter-period-wide pulse: zero beyond +-0.125 s
        assert_eq!(heart.value(2.13), 0.0);
        assert!(heart.value(2.1) > 0.0);
    }

    #[test]
    fn snr_noise_level() {
        let r = resp();
        let std = noise_std_for_snr(Some(&r), None, 100.0, 20.0, 10.0).unwrap();
        // 1 mm cosine has power 0.5
        assert!((std * std - 0.05).abs() < 1e-3);
    }
}
