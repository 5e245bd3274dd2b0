//! FFT helpers and spectral peak extraction.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub fn fft(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(data.len()).process(data);
}

/// Unnormalized inverse transform.
pub fn ifft(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(data.len()).process(data);
}

/// One-sided magnitude spectrum of a real signal zero-padded to `n_fft`.
/// Returns bins `0..=n_fft/2`.
pub fn magnitude_spectrum(signal: &[f64], n_fft: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(n_fft.max(signal.len()), Complex64::new(0.0, 0.0));
    fft(&mut buf);
    buf[..=buf.len() / 2].iter().map(|c| c.norm()).collect()
}

/// Vertex offset in `(-0.5, 0.5)` of the parabola through three samples.
pub fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom.abs() < f64::MIN_POSITIVE {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Dominant frequency of a real signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// Interpolated peak frequency in Hz.
    pub freq: f64,
    /// Peak magnitude divided by the mean magnitude over all one-sided bins.
    pub prominence: f64,
    /// Interpolated peak magnitude.
    pub magnitude: f64,
}

/// Interpolated spectral peak of `signal` sampled at `fs`.
///
/// The signal is Hann-windowed and zero-padded to four times its length
/// (rounded up to a power of two); the argmax bin is refined with a
/// three-point parabola. Ties go to the lower-frequency bin. Returns `None`
/// for an all-zero or empty signal.
pub fn peak_frequency(signal: &[f64], fs: f64) -> Option<SpectralPeak> {
    let n = signal.len();
    if n < 3 || signal.iter().all(|&x| x == 0.0) {
        return None;
    }
    let windowed: Vec<f64> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            x * w
        })
        .collect();
    let n_fft = (4 * n).next_power_of_two();
    let mag = magnitude_spectrum(&windowed, n_fft);
    let mut best = 0;
    for (i, &m) in mag.iter().enumerate() {
        if m > mag[best] {
            best = i;
        }
    }
    let mean = mag.iter().sum::<f64>() / mag.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    let (offset, magnitude) = if best > 0 && best + 1 < mag.len() {
        let (l, c, r) = (mag[best - 1], mag[best], mag[best + 1]);
        let d = parabolic_offset(l, c, r);
        (d, c - 0.25 * (l - r) * d)
    } else {
        (0.0, mag[best])
    };
    let freq = ((best as f64 + offset) * fs / n_fft as f64).max(0.0);
    Some(SpectralPeak { freq, prominence: mag[best] / mean, magnitude })
}

/// Energy of `signal` within `+-half_width` Hz of `center`, as a fraction of
/// its total energy (computed on the unpadded periodogram).
pub fn band_energy_fraction(signal: &[f64], fs: f64, center: f64, half_width: f64) -> f64 {
    let n = signal.len();
    if n == 0 {
        return 0.0;
    }
    let mag = magnitude_spectrum(signal, n);
    let mut total = 0.0;
    let mut inside = 0.0;
    for (k, m) in mag.iter().enumerate() {
        // interior bins stand for both the positive and negative frequency
        let weight = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
        let e = weight * m * m;
        total += e;
        if ((k as f64 * fs / n as f64) - center).abs() <= half_width {
            inside += e;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}
