//! Picking the heartbeat mode out of a decomposition.
//!
//! Modes are classified in four passes: broadband or peakless modes are
//! noise; the strongest remaining mode in the breathing band is respiration;
//! modes sitting on an integer multiple of the respiration frequency are its
//! harmonics; of what is left, the mode with the tallest spectral peak inside
//! the heart-rate band is the heartbeat. When the heartbeat has merged into a
//! harmonic and nothing else is left, the in-band harmonic with the most
//! energy is taken instead.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::spectrum::{band_energy_fraction, peak_frequency, SpectralPeak};
use crate::vmd::ModeSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("no mode with a peak in the respiration band")]
    NoRespiration,
    #[error("no candidate mode with a peak in the heart-rate band")]
    NoHeartbeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Noise,
    Respiration,
    Harmonic(u32),
    /// Chosen heartbeat mode; carries the harmonic order when it was picked
    /// by the coincidence rule.
    Heartbeat { coincident_harmonic: Option<u32> },
    /// Non-noise mode that is none of the above.
    Other,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Noise => write!(f, "noise"),
            Label::Respiration => write!(f, "respiration"),
            Label::Harmonic(n) => write!(f, "harmonic_{n}"),
            Label::Heartbeat { coincident_harmonic: None } => write!(f, "heartbeat"),
            Label::Heartbeat { coincident_harmonic: Some(n) } => write!(f, "heartbeat_harmonic_{n}"),
            Label::Other => write!(f, "other"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeLabel {
    pub label: Label,
    pub peak_freq: f64,
    pub peak_prominence: f64,
    pub peak_magnitude: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectConfig {
    pub hr_band: (f64, f64),
    pub respiration_band: (f64, f64),
    /// Allowed distance from `n * f_resp`, relative to `f_resp`.
    pub harmonic_tol: f64,
    pub max_harmonic: u32,
    /// Modes whose peak-to-mean spectral ratio is below this are noise.
    pub min_prominence: f64,
    /// Half width in Hz of the band around the peak that must hold most of
    /// a mode's energy.
    pub peak_half_width: f64,
    pub min_in_band_fraction: f64,
    /// Modes holding less than this share of the total mode energy are noise.
    pub min_energy_share: f64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            hr_band: (0.6, 3.4),
            respiration_band: (10.0 / 60.0, 0.7),
            harmonic_tol: 0.08,
            // resp + four harmonics + heartbeat fill the six modes; higher
            // orders carry too little energy to form a mode of their own
            max_harmonic: 5,
            min_prominence: 4.0,
            peak_half_width: 0.3,
            min_in_band_fraction: 0.5,
            min_energy_share: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub labels: Vec<ModeLabel>,
    pub heartbeat: usize,
    pub respiration: usize,
    pub respiration_freq: f64,
}

impl Classification {
    pub fn used_coincidence_rule(&self) -> bool {
        matches!(self.labels[self.heartbeat].label, Label::Heartbeat { coincident_harmonic: Some(_) })
    }

    pub fn heartbeat_freq(&self) -> f64 {
        self.labels[self.heartbeat].peak_freq
    }
}

fn in_band(f: f64, band: (f64, f64)) -> bool {
    f >= band.0 && f <= band.1
}

/// Order-independent comparison key: primary value, then frequency, then
/// energy, so permuting the modes never changes which one wins.
fn rank(primary: f64, l: &ModeLabel) -> (f64, f64, f64) {
    (primary, -l.peak_freq, l.energy)
}

fn cmp_rank(a: (f64, f64, f64), b: (f64, f64, f64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
}

/// Labels every mode of `ms` and returns the chosen heartbeat mode.
pub fn classify_modes(ms: &ModeSet, cfg: &SelectConfig) -> Result<Classification, SelectError> {
    let total: f64 = ms.modes.iter().flatten().map(|v| v * v).sum();
    let mut labels: Vec<ModeLabel> = ms
        .modes
        .iter()
        .map(|mode| {
            let energy: f64 = mode.iter().map(|v| v * v).sum();
            match peak_frequency(mode, ms.sample_rate) {
                Some(SpectralPeak { freq, prominence, magnitude }) => {
                    let concentrated = band_energy_fraction(mode, ms.sample_rate, freq, cfg.peak_half_width);
                    let noise = prominence < cfg.min_prominence
                        || concentrated < cfg.min_in_band_fraction
                        || energy < cfg.min_energy_share * total;
                    ModeLabel {
                        label: if noise { Label::Noise } else { Label::Other },
                        peak_freq: freq,
                        peak_prominence: prominence,
                        peak_magnitude: magnitude,
                        energy,
                    }
                }
                None => ModeLabel {
                    label: Label::Noise,
                    peak_freq: 0.0,
                    peak_prominence: 0.0,
                    peak_magnitude: 0.0,
                    energy,
                },
            }
        })
        .collect();

    let respiration = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.label == Label::Other && in_band(l.peak_freq, cfg.respiration_band))
        .max_by(|(_, a), (_, b)| cmp_rank(rank(a.energy, a), rank(b.energy, b)))
        .map(|(i, _)| i)
        .ok_or(SelectError::NoRespiration)?;
    labels[respiration].label = Label::Respiration;
    let f_resp = labels[respiration].peak_freq;

    for l in labels.iter_mut().filter(|l| l.label == Label::Other) {
        let n = (l.peak_freq / f_resp).round();
        if n >= 2.0 && n <= cfg.max_harmonic as f64 && (l.peak_freq - n * f_resp).abs() <= cfg.harmonic_tol * f_resp {
            l.label = Label::Harmonic(n as u32);
        }
    }

    let direct = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.label == Label::Other && in_band(l.peak_freq, cfg.hr_band))
        .max_by(|(_, a), (_, b)| cmp_rank(rank(a.peak_magnitude, a), rank(b.peak_magnitude, b)))
        .map(|(i, _)| i);

    let heartbeat = match direct {
        Some(i) => {
            labels[i].label = Label::Heartbeat { coincident_harmonic: None };
            i
        }
        None => {
            let i = labels
                .iter()
                .enumerate()
                .filter(|(_, l)| matches!(l.label, Label::Harmonic(_)) && in_band(l.peak_freq, cfg.hr_band))
                .max_by(|(_, a), (_, b)| cmp_rank(rank(a.energy, a), rank(b.energy, b)))
                .map(|(i, _)| i)
                .ok_or(SelectError::NoHeartbeat)?;
            let Label::Harmonic(n) = labels[i].label else { unreachable!() };
            labels[i].label = Label::Heartbeat { coincident_harmonic: Some(n) };
            i
        }
    };

    Ok(Classification { labels, heartbeat, respiration, respiration_freq: f_resp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmd::{tone_mixture, Termination};

    /// A ModeSet whose modes are given pure tones, bypassing the decomposition.
    pub(crate) fn synthetic_modes(tones: &[(f64, f64)], fs: f64, len: usize) -> ModeSet {
        let modes: Vec<Vec<f64>> = tones.iter().map(|&t| tone_mixture(&[t], fs, len)).collect();
        let input = tone_mixture(tones, fs, len);
        let mut sum = vec![0.0; len];
        for m in &modes {
            for (s, v) in sum.iter_mut().zip(m) {
                *s += v;
            }
        }
        ModeSet {
            center_freqs: tones.iter().map(|t| t.0).collect(),
            residual: input.iter().zip(&sum).map(|(f, s)| f - s).collect(),
            input_energy: input.iter().map(|v| v * v).sum(),
            input,
            modes,
            sample_rate: fs,
            alpha: 1.0,
            iterations: 1,
            termination: Termination::Converged,
        }
    }

    #[test]
    fn heartbeat_beyond_harmonics() {
        let ms = synthetic_modes(&[(0.4, 1.0), (0.8, 0.4), (1.2, 0.3), (1.6, 0.2), (2.0, 0.25), (2.3, 0.3)], 20.0, 320);
        let c = classify_modes(&ms, &SelectConfig::default()).unwrap();
        assert_eq!(c.heartbeat, 5);
        assert_eq!(c.respiration, 0);
        assert_eq!(c.labels[1].label, Label::Harmonic(2));
        assert_eq!(c.labels[4].label, Label::Harmonic(5));
        assert!(!c.used_coincidence_rule());
    }

    #[test]
    fn coincident_heartbeat_takes_strongest_harmonic() {
        // heartbeat merged into the third harmonic of 0.4 Hz
        let ms = synthetic_modes(&[(0.4, 1.0), (0.8, 0.2), (1.2, 0.5), (1.6, 0.1)], 20.0, 320);
        let c = classify_modes(&ms, &SelectConfig::default()).unwrap();
        assert_eq!(c.heartbeat, 2);
        assert_eq!(c.labels[2].label, Label::Heartbeat { coincident_harmonic: Some(3) });
    }

    #[test]
    fn two_tones() {
        let ms = synthetic_modes(&[(0.3, 1.0), (1.5, 0.5)], 20.0, 320);
        let c = classify_modes(&ms, &SelectConfig::default()).unwrap();
        assert_eq!((c.respiration, c.heartbeat), (0, 1));
        assert!((c.heartbeat_freq() - 1.5).abs() < 0.02);
    }

    #[test]
    fn nothing_in_heart_band() {
        let ms = synthetic_modes(&[(0.3, 1.0), (4.5, 0.5)], 20.0, 320);
        assert_eq!(classify_modes(&ms, &SelectConfig::default()), Err(SelectError::NoHeartbeat));
        let ms = synthetic_modes(&[(1.3, 1.0), (2.5, 0.5)], 20.0, 320);
        assert_eq!(classify_modes(&ms, &SelectConfig::default()), Err(SelectError::NoRespiration));
    }

    #[test]
    fn zero_and_broadband_modes_are_noise() {
        let mut ms = synthetic_modes(&[(0.3, 1.0), (1.5, 0.5), (2.0, 0.1)], 20.0, 320);
        ms.modes[2] = vec![0.0; 320];
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 1.0).unwrap();
        ms.modes.push((0..320).map(|_| normal.sample(&mut rng)).collect());
        ms.center_freqs.push(5.0);
        let c = classify_modes(&ms, &SelectConfig::default()).unwrap();
        assert_eq!(c.labels[2].label, Label::Noise);
        assert_eq!(c.labels[3].label, Label::Noise);
        assert_eq!(c.heartbeat, 1);
    }

    #[test]
    fn permutation_does_not_change_choice() {
        let ms = synthetic_modes(&[(0.4, 1.0), (0.8, 0.4), (1.2, 0.3), (2.3, 0.25), (1.9, 0.1)], 20.0, 320);
        let chosen = classify_modes(&ms, &SelectConfig::default()).unwrap();
        let order = [3, 1, 4, 0, 2];
        let p = ms.permuted(&order);
        let c = classify_modes(&p, &SelectConfig::default()).unwrap();
        assert_eq!(p.modes[c.heartbeat], ms.modes[chosen.heartbeat]);
    }
}
