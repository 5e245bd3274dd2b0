//! Vital-band conditioning: zero-phase Butterworth band-pass and first
//! difference.
//!
//! The band-pass is realized as a cascade of second-order sections designed
//! by the analog low-pass to band-pass transform followed by the bilinear
//! transform, then run forward and backward so the net response has zero
//! phase and squared magnitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::signal::ChestMotionTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("band edges must satisfy 0 < low ({low}) < high ({high}) < fs/2 ({nyquist})")]
    BadBand { low: f64, high: f64, nyquist: f64 },
    #[error("filter order must be at least 1")]
    Order,
    #[error("difference needs at least 2 samples, got {0}")]
    TooShort(usize),
}

/// Pass band of the vital-sign filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub pass_low: f64,
    pub pass_high: f64,
    /// Attenuation the design must reach at `pass_low / 4` and `1.5 * pass_high`.
    pub stop_attenuation_db: f64,
    /// Order of the Butterworth low-pass prototype. The band-pass has twice
    /// this many poles.
    pub prototype_order: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { pass_low: 0.2, pass_high: 3.4, stop_attenuation_db: 20.0, prototype_order: 4 }
    }
}

impl FilterSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<(), PreprocessError> {
        let nyquist = sample_rate / 2.0;
        if !(self.pass_low > 0.0 && self.pass_low < self.pass_high && self.pass_high < nyquist) {
            return Err(PreprocessError::BadBand { low: self.pass_low, high: self.pass_high, nyquist });
        }
        if self.prototype_order == 0 {
            return Err(PreprocessError::Order);
        }
        Ok(())
    }
}

/// Direct-form II transposed biquad coefficients, `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (self.a[0] + self.a[1] * z1 + self.a[2] * z2)
    }
}

/// A cascade of biquads.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Butterworth band-pass for the given spec at `sample_rate`.
    pub fn butterworth_bandpass(spec: &FilterSpec, sample_rate: f64) -> Result<Self, PreprocessError> {
        spec.validate(sample_rate)?;
        let n = spec.prototype_order;
        // Pre-warp both edges so the digital -3 dB points land exactly.
        let warp = |f: f64| 2.0 * sample_rate * (PI * f / sample_rate).tan();
        let (wl, wh) = (warp(spec.pass_low), warp(spec.pass_high));
        let bw = wh - wl;
        let w0_sq = wl * wh;

        let mut sections = Vec::with_capacity(n);
        for k in 0..n {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta);
            // s^2 - p*bw*s + w0^2 = 0
            let half = p * bw / 2.0;
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                if s.im < 0.0 {
                    continue;
                }
                let z = (2.0 * sample_rate + s) / (2.0 * sample_rate - s);
                // conjugate pole pair, one zero at z = 1 and one at z = -1
                sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [1.0, -2.0 * z.re, z.norm_sqr()] });
            }
        }
        // Normalize to unit gain at the geometric band centre.
        let wc = 2.0 * (w0_sq.sqrt() / (2.0 * sample_rate)).atan();
        for sec in sections.iter_mut() {
            let g = sec.response(wc).norm();
            for b in sec.b.iter_mut() {
                *b /= g;
            }
        }
        Ok(Self { sections })
    }

    /// Magnitude response at `freq` Hz for one forward pass.
    pub fn magnitude(&self, freq: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq / sample_rate;
        self.sections.iter().map(|s| s.response(w).norm()).product()
    }

    /// Causal filtering, with each section's state initialized to the steady
    /// state for a constant input equal to `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let Some(&first) = x.first() else { return y };
        let mut level = first;
        for sec in &self.sections {
            let [b0, b1, b2] = sec.b;
            let [_, a1, a2] = sec.a;
            let dc_gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
            let y_ss = dc_gain * level;
            let mut z2 = b2 * level - a2 * y_ss;
            let mut z1 = y_ss - b0 * level;
            for v in y.iter_mut() {
                let input = *v;
                let out = b0 * input + z1;
                z1 = b1 * input - a1 * out + z2;
                z2 = b2 * input - a2 * out;
                *v = out;
            }
            level = y_ss;
        }
        y
    }

    /// Forward-backward filtering with odd-reflection padding at both ends.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(2.0 * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
        }
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Zero-phase band-pass of a trace.
pub fn bandpass(trace: &ChestMotionTrace, spec: &FilterSpec) -> Result<ChestMotionTrace, PreprocessError> {
    let filter = SosFilter::butterworth_bandpass(spec, trace.sample_rate)?;
    // Three periods of the low edge absorb the start-up transient.
    let pad = (3.0 * trace.sample_rate / spec.pass_low).ceil() as usize;
    Ok(trace.with_samples(filter.filtfilt(&trace.samples, pad)))
}

/// First difference `y[i] = x[i + 1] - x[i]`.
pub fn difference(trace: &ChestMotionTrace) -> Result<ChestMotionTrace, PreprocessError> {
    if trace.len() < 2 {
        return Err(PreprocessError::TooShort(trace.len()));
    }
    let diff = trace.samples.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(trace.with_samples(diff))
}

/// Inverse of [`difference`]: running sum starting from `initial`.
pub fn integrate(diff: &[f64], initial: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(diff.len() + 1);
    let mut acc = initial;
    out.push(acc);
    for d in diff {
        acc += d;
        out.push(acc);
    }
    out
}

/// Amplitude gain of the first difference at frequency `f`: `2 sin(pi f / fs)`.
pub fn difference_gain(f: f64, sample_rate: f64) -> f64 {
    2.0 * (PI * f / sample_rate).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Unit;

    fn tone_trace(f: f64, fs: f64, secs: f64) -> ChestMotionTrace {
        let n = (fs * secs) as usize;
        ChestMotionTrace::new((0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect(), fs, Unit::Millimeters)
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn design_has_unit_centre_gain_and_half_power_edges() {
        let f = SosFilter::butterworth_bandpass(&FilterSpec::default(), 100.0).unwrap();
        assert_eq!(f.sections.len(), 4);
        let centre = (0.2f64 * 3.4).sqrt();
        assert!((f.magnitude(centre, 100.0) - 1.0).abs() < 1e-9);
        for edge in [0.2, 3.4] {
            assert!((f.magnitude(edge, 100.0) - 0.5f64.sqrt()).abs() < 1e-6);
        }
        // stable: all poles inside the unit circle
        for s in &f.sections {
            assert!(s.a[2] < 1.0);
        }
    }

    #[test]
    fn stop_band_tone_is_attenuated() {
        let t = tone_trace(0.05, 100.0, 200.0);
        let y = bandpass(&t, &FilterSpec::default()).unwrap();
        assert!(rms(&y.samples) <= 0.1 * rms(&t.samples));
    }

    #[test]
    fn pass_band_tone_survives() {
        let t = tone_trace(1.0, 100.0, 60.0);
        let y = bandpass(&t, &FilterSpec::default()).unwrap();
        assert!(rms(&y.samples) >= 0.89 * rms(&t.samples));
    }

    #[test]
    fn dc_offset_is_removed() {
        let mut t = tone_trace(1.0, 100.0, 60.0);
        for v in t.samples.iter_mut() {
            *v += 5.0;
        }
        let y = bandpass(&t, &FilterSpec::default()).unwrap();
        let mid = &y.samples[1000..5000];
        let mean = mid.iter().sum::<f64>() / mid.len() as f64;
        assert!(mean.abs() < 1e-3, "{mean}");
    }

    #[test]
    fn nyquist_violation_rejected() {
        let t = tone_trace(1.0, 6.0, 60.0);
        assert!(matches!(bandpass(&t, &FilterSpec::default()), Err(PreprocessError::BadBand { .. })));
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let t = ChestMotionTrace::new(vec![3.0; 10], 100.0, Unit::Millimeters);
        let d = difference(&t).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.samples.iter().all(|&v| v == 0.0));
        assert!(difference(&ChestMotionTrace::new(vec![1.0], 100.0, Unit::Millimeters)).is_err());
    }

    #[test]
    fn difference_gain_matches_closed_form() {
        for f in [0.3, 1.0, 2.0, 3.3] {
            let t = tone_trace(f, 100.0, 20.0);
            let d = difference(&t).unwrap();
            // whole periods in 20 s, so rms * sqrt(2) is the amplitude
            let measured = rms(&d.samples) * 2f64.sqrt();
            assert!((measured - difference_gain(f, 100.0)).abs() < 1e-3 * difference_gain(f, 100.0) + 1e-6);
        }
        let ratio = difference_gain(2.0, 100.0) / difference_gain(0.3, 100.0);
        assert!((ratio - 6.65).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn integrate_inverts_difference() {
        let t = tone_trace(0.7, 100.0, 5.0);
        let d = difference(&t).unwrap();
        let back = integrate(&d.samples, t.samples[0]);
        for (a, b) in back.iter().zip(&t.samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
