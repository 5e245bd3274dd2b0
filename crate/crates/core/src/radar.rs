//! FMCW front-end simulation and target phase extraction.
//!
//! Each frame carries one dechirped chirp per target: a complex tone whose
//! frequency is proportional to range (one DFT bin per `c / 2B` metres) and
//! whose phase advances by `4 pi dR / lambda`. A range FFT locates the
//! target, and the phase of its bin over frames gives the displacement.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{ChestMotionTrace, Unit, MIN_SAMPLE_RATE};
use crate::spectrum::fft;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum RadarError {
    #[error("invalid radar configuration: {0}")]
    Config(String),
    #[error("target {index} at {range:.3} m is outside the unambiguous range {max:.3} m")]
    OutOfRange { index: usize, range: f64, max: f64 },
    #[error("targets {0} and {1} are less than one range bin apart")]
    TooClose(usize, usize),
    #[error("trace of target {index} lasts {have:.2} s, {need:.2} s requested")]
    TraceTooShort { index: usize, have: f64, need: f64 },
    #[error("target {0} trace must be a displacement in mm")]
    TraceUnit(usize),
    #[error("cube has no frames")]
    Empty,
    #[error("tracking lost at frame {frame}: target peak below 3x the median level for more than 1 s")]
    TrackingLost { frame: usize },
    #[error("malformed radar cube: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    /// Centre of the chirp sweep, Hz.
    pub carrier_freq: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth: f64,
    pub chirp_duration: f64,
    pub samples_per_chirp: usize,
    pub frame_rate: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 79e9,
            bandwidth: 4e9,
            chirp_duration: 50e-6,
            samples_per_chirp: 256,
            frame_rate: 100.0,
        }
    }
}

impl RadarConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Range resolution `c / 2B`.
    pub fn bin_size(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth)
    }

    pub fn unambiguous_range(&self) -> f64 {
        self.samples_per_chirp as f64 * self.bin_size()
    }

    pub fn validate(&self) -> Result<(), RadarError> {
        if !(self.bandwidth > 0.0 && self.carrier_freq > self.bandwidth / 2.0) {
            return Err(RadarError::Config(format!(
                "need bandwidth > 0 and carrier above half the bandwidth (got {} / {})",
                self.carrier_freq, self.bandwidth
            )));
        }
        if !(self.chirp_duration > 0.0) {
            return Err(RadarError::Config("chirp duration must be positive".into()));
        }
        if self.samples_per_chirp < 8 {
            return Err(RadarError::Config("at least 8 samples per chirp".into()));
        }
        if !(self.frame_rate >= MIN_SAMPLE_RATE) {
            return Err(RadarError::Config(format!("frame rate {} below {MIN_SAMPLE_RATE} Hz", self.frame_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Target {
    pub base_range: f64,
    /// Recorded for scene bookkeeping; the point-scatterer model ignores it.
    pub angle: f64,
    /// Chest displacement in mm, positive away from the radar.
    pub trace: ChestMotionTrace,
    /// Slow range drift, m/s.
    pub drift: f64,
}

impl Target {
    pub fn new(base_range: f64, trace: ChestMotionTrace) -> Self {
        Self { base_range, angle: 0.0, trace, drift: 0.0 }
    }

    /// Range in metres at time `t` (trace linearly interpolated).
    pub fn range_at(&self, t: f64) -> f64 {
        let s = &self.trace.samples;
        let x = t * self.trace.sample_rate;
        let i = (x.floor() as usize).min(s.len().saturating_sub(1));
        let frac = x - i as f64;
        let mm = if i + 1 < s.len() { s[i] + frac * (s[i + 1] - s[i]) } else { s[i] };
        self.base_range + self.drift * t + mm * 1e-3
    }
}

#[derive(Debug, Clone)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    /// Complex noise power per IF sample, relative to a unit-amplitude target.
    pub noise_floor: f64,
}

impl TargetScene {
    pub fn single(target: Target) -> Self {
        Self { targets: vec![target], noise_floor: 0.0 }
    }

    pub fn validate(&self, cfg: &RadarConfig, duration: f64) -> Result<(), RadarError> {
        let max = cfg.unambiguous_range();
        for (index, t) in self.targets.iter().enumerate() {
            if t.trace.unit != Unit::Millimeters {
                return Err(RadarError::TraceUnit(index));
            }
            if t.trace.duration() + 1e-9 < duration {
                return Err(RadarError::TraceTooShort { index, have: t.trace.duration(), need: duration });
            }
            for time in [0.0, duration] {
                let range = t.range_at(time);
                if !(range >= 0.0 && range < max) {
                    return Err(RadarError::OutOfRange { index, range, max });
                }
            }
        }
        for i in 0..self.targets.len() {
            for j in i + 1..self.targets.len() {
                if (self.targets[i].base_range - self.targets[j].base_range).abs() < cfg.bin_size() {
                    return Err(RadarError::TooClose(i, j));
                }
            }
        }
        if !(self.noise_floor >= 0.0 && self.noise_floor.is_finite()) {
            return Err(RadarError::Config(format!("noise floor {} must be non-negative", self.noise_floor)));
        }
        Ok(())
    }
}

/// IF samples of every frame, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarCube {
    pub samples: Vec<Complex64>,
    pub frames: usize,
    pub samples_per_chirp: usize,
    pub frame_rate: f64,
    pub bin_size: f64,
    pub carrier_freq: f64,
}

impl RadarCube {
    pub fn frame(&self, m: usize) -> &[Complex64] {
        let n = self.samples_per_chirp;
        &self.samples[m * n..(m + 1) * n]
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Writes the text header followed by little-endian f32 I/Q pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), RadarError> {
        write!(
            w,
            "RADARCUBE v1\nframes={}\nsamples_per_chirp={}\nframe_rate={}\nbin_size={}\ncarrier_freq={}\nend_header\n",
            self.frames, self.samples_per_chirp, self.frame_rate, self.bin_size, self.carrier_freq
        )?;
        let mut buf = Vec::with_capacity(self.samples.len() * 8);
        for c in &self.samples {
            buf.extend_from_slice(&(c.re as f32).to_le_bytes());
            buf.extend_from_slice(&(c.im as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self, RadarError> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != "RADARCUBE v1" {
            return Err(RadarError::Format("missing RADARCUBE v1 magic".into()));
        }
        let (mut frames, mut spc, mut rate, mut bin, mut carrier) = (None, None, None, None, None);
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(RadarError::Format("header not terminated".into()));
            }
            let l = line.trim_end();
            if l == "end_header" {
                break;
            }
            let (k, v) = l.split_once('=').ok_or_else(|| RadarError::Format(format!("bad header line {l:?}")))?;
            let bad = |_| RadarError::Format(format!("bad value for {k}: {v:?}"));
            match k {
                "frames" => frames = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "samples_per_chirp" => spc = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "frame_rate" => rate = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "bin_size" => bin = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "carrier_freq" => carrier = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                other => return Err(RadarError::Format(format!("unknown header key {other}"))),
            }
        }
        let missing = |k: &str| RadarError::Format(format!("header lacks {k}"));
        let frames = frames.ok_or_else(|| missing("frames"))?;
        let samples_per_chirp = spc.ok_or_else(|| missing("samples_per_chirp"))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let expected = frames * samples_per_chirp * 8;
        if bytes.len() != expected {
            return Err(RadarError::Format(format!("expected {expected} payload bytes, found {}", bytes.len())));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|b| {
                let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Ok(Self {
            samples,
            frames,
            samples_per_chirp,
            frame_rate: rate.ok_or_else(|| missing("frame_rate"))?,
            bin_size: bin.ok_or_else(|| missing("bin_size"))?,
            carrier_freq: carrier.ok_or_else(|| missing("carrier_freq"))?,
        })
    }
}

/// Simulates `duration` seconds of frames for the scene.
pub fn simulate_frames(cfg: &RadarConfig, scene: &TargetScene, duration: f64, seed: u64) -> Result<RadarCube, RadarError> {
    cfg.validate()?;
    scene.validate(cfg, duration)?;
    let n = cfg.samples_per_chirp;
    let frames = (duration * cfg.frame_rate).round() as usize;
    // Phase reference at the start of the sweep; the DFT's linear phase over
    // the chirp moves the bin phase to the centre frequency.
    let lambda_start = SPEED_OF_LIGHT / (cfg.carrier_freq - cfg.bandwidth / 2.0);
    let bin = cfg.bin_size();
    let mut samples = vec![Complex64::new(0.0, 0.0); frames * n];
    for m in 0..frames {
        let t = m as f64 / cfg.frame_rate;
        let frame = &mut samples[m * n..(m + 1) * n];
        for target in &scene.targets {
            let r = target.range_at(t);
            let phi0 = 4.0 * PI * r / lambda_start;
            let nu = r / bin;
            for (i, s) in frame.iter_mut().enumerate() {
                *s += Complex64::from_polar(1.0, phi0 + 2.0 * PI * nu * i as f64 / n as f64);
            }
        }
    }
    if scene.noise_floor > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (scene.noise_floor / 2.0).sqrt()).expect("finite noise");
        for s in samples.iter_mut() {
            *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(RadarCube {
        samples,
        frames,
        samples_per_chirp: n,
        frame_rate: cfg.frame_rate,
        bin_size: bin,
        carrier_freq: cfg.carrier_freq,
    })
}

/// Complex range spectrum of every frame, one bin per IF sample.
pub fn range_fft(cube: &RadarCube) -> Result<Vec<Vec<Complex64>>, RadarError> {
    if cube.frames == 0 {
        return Err(RadarError::Empty);
    }
    Ok((0..cube.frames)
        .map(|m| {
            let mut f = cube.frame(m).to_vec();
            fft(&mut f);
            f
        })
        .collect())
}

/// Phase of a tracked target, one value per frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSequence {
    /// Unwrapped and stitched phase, radians.
    pub phase: Vec<f64>,
    /// Per-bin unwrapped phase without the stitching offsets.
    pub unstitched: Vec<f64>,
    pub source_bins: Vec<usize>,
    pub sample_rate: f64,
}

impl PhaseSequence {
    pub fn max_jump(&self) -> f64 {
        max_jump(&self.phase)
    }

    pub fn bin_switches(&self) -> usize {
        self.source_bins.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

pub fn max_jump(phase: &[f64]) -> f64 {
    phase.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Follows the spectral peak near `expected_range` and returns its phase.
///
/// Within a run of frames on one bin the phase is unwrapped as usual. When
/// the peak moves to another bin, the new run is offset so the step across
/// the boundary equals the median of the previous five inter-frame steps.
pub fn track_target(cube: &RadarCube, expected_range: f64, search_width: usize) -> Result<PhaseSequence, RadarError> {
    let bins = select_bins(cube, expected_range, search_width)?;
    Ok(stitch(cube, &bins))
}

/// The per-frame peak bin, searched within `search_width` bins of the
/// previous frame's choice.
pub fn select_bins(cube: &RadarCube, expected_range: f64, search_width: usize) -> Result<Vec<usize>, RadarError> {
    let spectra = range_fft(cube)?;
    let n = cube.samples_per_chirp;
    let start = (expected_range / cube.bin_size).round();
    if !(start >= 0.0 && (start as usize) < n) {
        return Err(RadarError::OutOfRange { index: 0, range: expected_range, max: n as f64 * cube.bin_size });
    }
    let mut prev = start as usize;
    let max_weak = cube.frame_rate.ceil() as usize;
    let mut weak_run = 0;
    let mut bins = Vec::with_capacity(cube.frames);
    for (m, spec) in spectra.iter().enumerate() {
        let mag: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
        let lo = prev.saturating_sub(search_width);
        let hi = (prev + search_width).min(n - 1);
        let mut best = lo;
        for k in lo..=hi {
            if mag[k] > mag[best] {
                best = k;
            }
        }
        let level = median(&mut mag.clone());
        if mag[best] < 3.0 * level || mag[best] == 0.0 {
            weak_run += 1;
            if weak_run > max_weak {
                return Err(RadarError::TrackingLost { frame: m });
            }
        } else {
            weak_run = 0;
        }
        bins.push(best);
        prev = best;
    }
    Ok(bins)
}

/// Phase of `bins[m]` in frame `m`. Each bin's phase is unwrapped over the
/// whole cube; runs on different bins are then joined by the median rule.
pub fn stitch(cube: &RadarCube, bins: &[usize]) -> PhaseSequence {
    let spectra = range_fft(cube).unwrap_or_default();
    let mut unwrapped: std::collections::BTreeMap<usize, Vec<f64>> = std::collections::BTreeMap::new();
    for &b in bins {
        unwrapped.entry(b).or_insert_with(|| {
            let mut out: Vec<f64> = Vec::with_capacity(spectra.len());
            for s in &spectra {
                let raw = s[b].arg();
                let next = match out.last() {
                    Some(&prev) => prev + wrap(raw - prev),
                    None => raw,
                };
                out.push(next);
            }
            out
        });
    }
    let unstitched: Vec<f64> = bins.iter().enumerate().map(|(m, b)| unwrapped[b][m]).collect();
    let mut phase: Vec<f64> = Vec::with_capacity(bins.len());
    for m in 0..bins.len() {
        let next = if m == 0 {
            unstitched[0]
        } else if bins[m] == bins[m - 1] {
            phase[m - 1] + (unstitched[m] - unstitched[m - 1])
        } else {
            let from = m.saturating_sub(6);
            let mut diffs: Vec<f64> = phase[from..m].windows(2).map(|w| w[1] - w[0]).collect();
            phase[m - 1] + if diffs.is_empty() { 0.0 } else { median(&mut diffs) }
        };
        phase.push(next);
    }
    PhaseSequence { phase, unstitched, source_bins: bins.to_vec(), sample_rate: cube.frame_rate }
}

/// `d = lambda * (phi - phi[0]) / (4 pi)`, in mm.
pub fn phase_to_displacement(seq: &PhaseSequence, wavelength: f64) -> ChestMotionTrace {
    let p0 = seq.phase.first().copied().unwrap_or(0.0);
    let samples = seq.phase.iter().map(|p| wavelength * (p - p0) / (4.0 * PI) * 1e3).collect();
    ChestMotionTrace::new(samples, seq.sample_rate, Unit::Millimeters)
}

/// Raw phase exported as a trace in radians.
pub fn phase_trace(seq: &PhaseSequence) -> ChestMotionTrace {
    ChestMotionTrace::new(seq.phase.clone(), seq.sample_rate, Unit::Radians)
}
