//! Variational mode decomposition with gate-driven penalty selection.
//!
//! [`vmd_decompose`] runs the ADMM scheme of variational mode decomposition
//! on the analytic (positive-frequency) spectrum of a mirror-extended
//! signal: every mode is a Wiener-filtered copy of the current residual,
//! centred on its own frequency, and every centre frequency moves to the
//! power-weighted mean of its mode spectrum.
//!
//! [`select_alpha`] chooses the bandwidth penalty. Two diagnostics bound it:
//! the largest Pearson correlation between modes ([`mode_correlation_max`])
//! falls as the penalty grows, and the residual energy ratio
//! ([`energy_loss`]) rises. Bisection in log-space finds a penalty that
//! passes both gates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::spectrum::{fft, ifft};

pub const MIN_SIGNAL_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmdError {
    #[error("signal has {0} samples, at least 64 required")]
    TooShort(usize),
    #[error("signal contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    Params(String),
    #[error("energy loss is undefined for a zero-energy input")]
    ZeroEnergy,
    #[error(
        "no penalty in range passes both gates (best alpha {best_alpha:.3e}: r_max {best_r_max:.4}, p {best_energy_loss:.3e})"
    )]
    Infeasible {
        best_alpha: f64,
        best_r_max: f64,
        best_energy_loss: f64,
        /// Decomposition at `best_alpha`, for callers that fall back to it.
        best: Box<ModeSet>,
    },
}

/// Parameters of one decomposition. `alpha` is expressed against
/// frequencies normalized to the sample rate (cycles per sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VmdParams {
    pub modes: usize,
    pub alpha: f64,
    /// Dual-ascent step; zero lets the residual absorb noise.
    pub tau: f64,
    /// Convergence threshold on the relative squared change of the modes.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Mirror extension on each side, as a fraction of the signal length.
    pub mirror_fraction: f64,
}

impl Default for VmdParams {
    fn default() -> Self {
        Self { modes: 6, alpha: 2000.0, tau: 0.0, tolerance: 1e-7, max_iters: 500, mirror_fraction: 0.1 }
    }
}

impl VmdParams {
    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    pub fn validate(&self) -> Result<(), VmdError> {
        if !(2..=7).contains(&self.modes) {
            return Err(VmdError::Params(format!("mode count {} outside [2, 7]", self.modes)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(VmdError::Params(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tolerance > 0.0) {
            return Err(VmdError::Params(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.tau >= 0.0) || self.max_iters == 0 {
            return Err(VmdError::Params("tau must be non-negative and max_iters positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mirror_fraction) {
            return Err(VmdError::Params(format!("mirror fraction {} outside [0, 1]", self.mirror_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// Output of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSet {
    pub modes: Vec<Vec<f64>>,
    /// Centre frequency of each mode in Hz.
    pub center_freqs: Vec<f64>,
    /// `input - sum(modes)`, chosen so the reconstruction is exact.
    pub residual: Vec<f64>,
    pub input: Vec<f64>,
    pub input_energy: f64,
    pub sample_rate: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn energies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| energy(m)).collect()
    }

    /// Mode indices by descending energy.
    pub fn order_by_energy(&self) -> Vec<usize> {
        let e = self.energies();
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| e[b].total_cmp(&e[a]).then(a.cmp(&b)));
        idx
    }

    /// Mode indices by ascending centre frequency.
    pub fn order_by_frequency(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.center_freqs[a].total_cmp(&self.center_freqs[b]).then(a.cmp(&b)));
        idx
    }

    /// Sample-wise `sum(modes) + residual`, summed in mode order.
    pub fn reconstruct(&self) -> Vec<f64> {
        let sum = mode_sum(&self.modes, self.input.len());
        sum.iter().zip(&self.residual).map(|(s, r)| s + r).collect()
    }

    /// Reorders the modes (and their centre frequencies) by `order`. The
    /// residual is recomputed so the reconstruction stays exact.
    pub fn permuted(&self, order: &[usize]) -> ModeSet {
        let mut modes: Vec<Vec<f64>> = order.iter().map(|&i| self.modes[i].clone()).collect();
        let residual = exact_residual(&self.input, &mut modes);
        ModeSet {
            modes,
            center_freqs: order.iter().map(|&i| self.center_freqs[i]).collect(),
            residual,
            ..self.clone()
        }
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn mode_sum(modes: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    for m in modes {
        for (s, v) in sum.iter_mut().zip(m) {
            *s += v;
        }
    }
    sum
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Residual `f - sum(modes)` such that `sum(modes) + residual == f` holds
/// bit-for-bit under the summation order of [`ModeSet::reconstruct`].
///
/// The rounded difference already satisfies this whenever it is exact. For
/// the rare samples where it is not, nearby floats are tried; failing that,
/// the difference is folded into the last mode, which brings the mode sum
/// close enough to `f` for the subtraction to be exact.
fn exact_residual(input: &[f64], modes: &mut [Vec<f64>]) -> Vec<f64> {
    let n = input.len();
    let mut sum = mode_sum(modes, n);
    let mut residual = Vec::with_capacity(n);
    for i in 0..n {
        let f = input[i];
        let mut r = f - sum[i];
        if sum[i] + r != f {
            r = nudge(f, sum[i], r).unwrap_or_else(|| {
                let last = modes.len() - 1;
                for _ in 0..4 {
                    modes[last][i] += f - sum[i];
                    sum[i] = modes.iter().fold(0.0, |acc, m| acc + m[i]);
                    if let Some(r) = nudge(f, sum[i], f - sum[i]) {
                        return r;
                    }
                }
                // Give the whole sample to the residual.
                for m in modes.iter_mut() {
                    m[i] = 0.0;
                }
                sum[i] = 0.0;
                f
            });
        }
        residual.push(r);
    }
    residual
}

fn nudge(f: f64, s: f64, r: f64) -> Option<f64> {
    if s + r == f {
        return Some(r);
    }
    let (mut up, mut down) = (r, r);
    for _ in 0..8 {
        up = next_up(up);
        down = next_down(down);
        if s + up == f {
            return Some(up);
        }
        if s + down == f {
            return Some(down);
        }
    }
    None
}

/// Decomposes `signal` (sampled at `sample_rate`) into `params.modes`
/// narrow-band modes.
pub fn vmd_decompose(signal: &[f64], sample_rate: f64, params: &VmdParams) -> Result<ModeSet, VmdError> {
    params.validate()?;
    let n = signal.len();
    if n < MIN_SIGNAL_LEN {
        return Err(VmdError::TooShort(n));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(VmdError::NonFinite(i));
    }
    let k_modes = params.modes;

    // Mirror extension.
    let ext_each = ((params.mirror_fraction * n as f64).round() as usize).min(n);
    let left: Vec<f64> = signal[..ext_each].iter().rev().copied().collect();
    let right: Vec<f64> = signal[n - ext_each..].iter().rev().copied().collect();
    let mut ext: Vec<f64> = Vec::with_capacity(n + 2 * ext_each);
    ext.extend(left);
    ext.extend_from_slice(signal);
    ext.extend(right);
    if ext.len() % 2 == 1 {
        ext.push(*ext.last().unwrap());
    }
    let len = ext.len();
    let half = len / 2;

    let mut spectrum: Vec<Complex64> = ext.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut spectrum);
    // Analytic spectrum on bins 0..=half; frequencies in cycles/sample.
    let f_hat: Vec<Complex64> = spectrum[..=half].to_vec();
    let freqs: Vec<f64> = (0..=half).map(|k| k as f64 / len as f64).collect();
    let bins = f_hat.len();

    // Centre frequencies start evenly spread over [0, fs/4].
    let mut omega: Vec<f64> = (0..k_modes).map(|k| 0.25 * (k as f64 + 0.5) / k_modes as f64).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut u_hat = vec![vec![zero; bins]; k_modes];
    let mut lambda = vec![zero; bins];
    let mut sum_all = vec![zero; bins];

    let signal_scale: f64 = f_hat.iter().map(|c| c.norm_sqr()).sum();
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    if signal_scale == 0.0 {
        termination = Termination::Converged;
    } else {
        while iterations < params.max_iters {
            iterations += 1;
            let mut change = 0.0;
            let mut norm = 0.0;
            for k in 0..k_modes {
                let wk = omega[k];
                let mut num = 0.0;
                let mut den = 0.0;
                let mode = &mut u_hat[k];
                for j in 0..bins {
                    let others = sum_all[j] - mode[j];
                    let d = freqs[j] - wk;
                    let updated = (f_hat[j] - others - lambda[j] * 0.5) / (1.0 + params.alpha * d * d);
                    change += (updated - mode[j]).norm_sqr();
                    let p = updated.norm_sqr();
                    norm += p;
                    num += freqs[j] * p;
                    den += p;
                    sum_all[j] = others + updated;
                    mode[j] = updated;
                }
                if den > 0.0 {
                    omega[k] = num / den;
                }
            }
            if params.tau > 0.0 {
                for j in 0..bins {
                    lambda[j] += params.tau * (sum_all[j] - f_hat[j]);
                }
            }
            // Recompute the running sum to keep rounding drift out of it.
            for j in 0..bins {
                sum_all[j] = u_hat.iter().map(|m| m[j]).sum();
            }
            if norm == 0.0 || change / norm < params.tolerance {
                termination = Termination::Converged;
                break;
            }
        }
    }

    // Back to the time domain through the Hermitian extension, then crop.
    let mut modes = Vec::with_capacity(k_modes);
    for mode_hat in &u_hat {
        let mut full = vec![zero; len];
        full[..=half].copy_from_slice(mode_hat);
        for j in 1..half {
            full[len - j] = mode_hat[j].conj();
        }
        full[0] = Complex64::new(full[0].re, 0.0);
        full[half] = Complex64::new(full[half].re, 0.0);
        ifft(&mut full);
        let scale = 1.0 / len as f64;
        modes.push(full[ext_each..ext_each + n].iter().map(|c| c.re * scale).collect::<Vec<f64>>());
    }

    let residual = exact_residual(signal, &mut modes);
    Ok(ModeSet {
        modes,
        center_freqs: omega.iter().map(|w| w * sample_rate).collect(),
        residual,
        input: signal.to_vec(),
        input_energy: energy(signal),
        sample_rate,
        alpha: params.alpha,
        iterations,
        termination,
    })
}

/// Pearson correlation of two equally long sequences, or `None` when either
/// has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let ma = a[..n].iter().sum::<f64>() / nf;
    let mb = b[..n].iter().sum::<f64>() / nf;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va <= 0.0 || vb <= 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Largest absolute Pearson correlation over all pairs of modes. Modes with
/// zero variance are left out; with fewer than two remaining the value is 0.
pub fn mode_correlation_max(ms: &ModeSet) -> f64 {
    correlation_max(&ms.modes)
}

pub fn correlation_max(modes: &[Vec<f64>]) -> f64 {
    let live: Vec<&Vec<f64>> = modes.iter().filter(|m| variance(m) > 0.0).collect();
    let mut best: f64 = 0.0;
    for i in 0..live.len() {
        for j in i + 1..live.len() {
            if let Some(r) = pearson(live[i], live[j]) {
                best = best.max(r.abs());
            }
        }
    }
    best
}

/// Residual energy over input energy.
pub fn energy_loss(ms: &ModeSet) -> Result<f64, VmdError> {
    if !(ms.input_energy > 0.0) {
        return Err(VmdError::ZeroEnergy);
    }
    Ok(energy(&ms.residual) / ms.input_energy)
}

/// Ceilings on the two decomposition diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateThresholds {
    /// Largest admissible pairwise mode correlation.
    pub mu1: f64,
    /// Largest admissible energy-loss ratio.
    pub mu2: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self { mu1: 0.2, mu2: 1e-4 }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<(), VmdError> {
        if !(self.mu1 > 0.0 && self.mu1 < 1.0) {
            return Err(VmdError::Params(format!("mu1 must lie in (0, 1), got {}", self.mu1)));
        }
        if !(self.mu2 >= 0.0 && self.mu2 < 1.0) {
            return Err(VmdError::Params(format!("mu2 must lie in [0, 1), got {}", self.mu2)));
        }
        Ok(())
    }
}

/// Search interval and stopping rule for [`select_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRange {
    pub lo: f64,
    pub hi: f64,
    /// Bisection stops once `hi / lo` falls below this ratio.
    pub stop_ratio: f64,
}

impl Default for AlphaRange {
    fn default() -> Self {
        Self { lo: 10.0, hi: 1e6, stop_ratio: 1.1 }
    }
}

impl AlphaRange {
    /// Upper bound on the number of decompositions a search performs.
    pub fn max_steps(&self) -> usize {
        ((self.hi / self.lo).ln() / self.stop_ratio.ln()).log2().ceil().max(1.0) as usize
    }
}

/// One probe of the penalty search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaProbe {
    pub alpha: f64,
    pub r_max: f64,
    pub energy_loss: f64,
}

impl AlphaProbe {
    pub fn passes(&self, gates: &GateThresholds) -> bool {
        self.r_max <= gates.mu1 && self.energy_loss <= gates.mu2
    }

    /// Log-distance outside the gates; zero when both pass.
    fn violation(&self, gates: &GateThresholds) -> f64 {
        let over = |v: f64, cap: f64| if v <= cap { 0.0 } else if cap > 0.0 { (v / cap).ln() } else { f64::INFINITY };
        over(self.r_max, gates.mu1) + over(self.energy_loss, gates.mu2)
    }
}

/// Result of a successful penalty search.
#[derive(Debug, Clone)]
pub struct AlphaSelection {
    pub alpha: f64,
    pub modes: ModeSet,
    pub probes: Vec<AlphaProbe>,
}

/// Bisects the penalty in log-space for a decomposition with
/// `r_max <= mu1` and `p <= mu2`.
///
/// Aliasing (correlation over the ceiling) moves the lower end up; energy
/// loss over the ceiling moves the upper end down. When both gates fail at
/// once the monotone trade-off leaves no feasible penalty and the search
/// stops early with [`VmdError::Infeasible`].
pub fn select_alpha(
    signal: &[f64],
    sample_rate: f64,
    base: &VmdParams,
    gates: &GateThresholds,
    range: &AlphaRange,
) -> Result<AlphaSelection, VmdError> {
    gates.validate()?;
    if !(range.lo > 0.0 && range.lo < range.hi && range.stop_ratio > 1.0) {
        return Err(VmdError::Params(format!("bad alpha range [{}, {}] / {}", range.lo, range.hi, range.stop_ratio)));
    }
    let input_energy = energy(signal);
    if !(input_energy > 0.0) {
        return Err(VmdError::ZeroEnergy);
    }
    let (mut lo, mut hi) = (range.lo, range.hi);
    let mut probes = Vec::new();
    let mut best: Option<(AlphaProbe, ModeSet)> = None;

    while hi / lo >= range.stop_ratio {
        let alpha = (lo * hi).sqrt();
        let ms = vmd_decompose(signal, sample_rate, &base.with_alpha(alpha))?;
        let probe = AlphaProbe { alpha, r_max: mode_correlation_max(&ms), energy_loss: energy_loss(&ms)? };
        probes.push(probe);
        if probe.passes(gates) {
            return Ok(AlphaSelection { alpha, modes: ms, probes });
        }
        let better = best.as_ref().is_none_or(|(b, _)| probe.violation(gates) < b.violation(gates));
        if better {
            best = Some((probe, ms));
        }
        let aliased = probe.r_max > gates.mu1;
        let lossy = probe.energy_loss > gates.mu2;
        match (aliased, lossy) {
            (true, false) => lo = alpha,
            (false, true) => hi = alpha,
            _ => break,
        }
    }
    let (probe, ms) = best.expect("at least one probe runs");
    Err(VmdError::Infeasible {
        best_alpha: probe.alpha,
        best_r_max: probe.r_max,
        best_energy_loss: probe.energy_loss,
        best: Box::new(ms),
    })
}

/// Diagnostics over a log-spaced penalty sweep, for offline validation of
/// the monotone trade-off the bisection relies on.
pub fn alpha_sweep(
    signal: &[f64],
    sample_rate: f64,
    base: &VmdParams,
    alphas: &[f64],
) -> Result<Vec<AlphaProbe>, VmdError> {
    alphas
        .iter()
        .map(|&alpha| {
            let ms = vmd_decompose(signal, sample_rate, &base.with_alpha(alpha))?;
            Ok(AlphaProbe { alpha, r_max: mode_correlation_max(&ms), energy_loss: energy_loss(&ms)? })
        })
        .collect()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Sum of sinusoids, handy for tests and examples.
pub fn tone_mixture(tones: &[(f64, f64)], sample_rate: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate;
            tones.iter().map(|(f, a)| a * (2.0 * PI * f * t).cos()).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tone() -> Vec<f64> {
        tone_mixture(&[(0.3, 1.0), (1.5, 1.0)], 20.0, 400)
    }

    #[test]
    fn rejects_short_and_non_finite() {
        let p = VmdParams::default();
        assert_eq!(vmd_decompose(&[1.0; 10], 20.0, &p).unwrap_err(), VmdError::TooShort(10));
        let mut s = vec![1.0; 100];
        s[7] = f64::NAN;
        assert_eq!(vmd_decompose(&s, 20.0, &p).unwrap_err(), VmdError::NonFinite(7));
        let bad = VmdParams { modes: 8, ..p };
        assert!(matches!(vmd_decompose(&[1.0; 100], 20.0, &bad), Err(VmdError::Params(_))));
    }

    #[test]
    fn zero_signal_gives_zero_modes() {
        let ms = vmd_decompose(&[0.0; 128], 20.0, &VmdParams::default()).unwrap();
        assert!(ms.modes.iter().flatten().all(|&v| v == 0.0));
        assert!(ms.residual.iter().all(|&v| v == 0.0));
        assert!(ms.converged());
        assert_eq!(energy_loss(&ms), Err(VmdError::ZeroEnergy));
        assert_eq!(mode_correlation_max(&ms), 0.0);
    }

    #[test]
    fn reconstruction_is_bit_exact() {
        let ms = vmd_decompose(&two_tone(), 20.0, &VmdParams { modes: 3, ..Default::default() }).unwrap();
        assert_eq!(ms.reconstruct(), ms.input);
    }

    #[test]
    fn exact_residual_handles_cancellation() {
        let input = vec![1e-20, 3.0, -2.5e-300, 0.1];
        let mut modes = vec![vec![1.0, 1.0, 1e10, 0.7], vec![0.5, 1e-17, -1e10, -0.3]];
        let residual = exact_residual(&input, &mut modes);
        let ms_sum = mode_sum(&modes, 4);
        for i in 0..4 {
            assert_eq!(ms_sum[i] + residual[i], input[i], "sample {i}");
        }
    }

    #[test]
    fn energy_loss_of_half_mode() {
        let f = two_tone();
        let mut modes = vec![f.iter().map(|v| v / 2.0).collect::<Vec<f64>>()];
        let residual = exact_residual(&f, &mut modes);
        let ms = ModeSet {
            modes,
            center_freqs: vec![0.0],
            residual,
            input_energy: energy(&f),
            input: f,
            sample_rate: 20.0,
            alpha: 1.0,
            iterations: 0,
            termination: Termination::Converged,
        };
        assert!((energy_loss(&ms).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn correlation_of_identical_and_orthogonal_modes() {
        let n = 200;
        let s: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).sin()).collect();
        let c: Vec<f64> = (0..n).map(|i| (2.0 * PI * 5.0 * i as f64 / n as f64).cos()).collect();
        assert!((correlation_max(&[s.clone(), s.clone()]) - 1.0).abs() < 1e-12);
        assert!(correlation_max(&[s.clone(), c]) < 1e-12);
        assert_eq!(correlation_max(&[s, vec![0.0; n]]), 0.0);
    }

    #[test]
    fn alpha_search_budget() {
        assert_eq!(AlphaRange::default().max_steps(), 7);
    }

    #[test]
    fn impossible_energy_gate_is_infeasible() {
        let gates = GateThresholds { mu1: 0.2, mu2: 0.0 };
        let base = VmdParams { modes: 2, ..Default::default() };
        match select_alpha(&two_tone(), 20.0, &base, &gates, &AlphaRange::default()) {
            Err(VmdError::Infeasible { best, best_energy_loss, .. }) => {
                assert!(best_energy_loss > 0.0);
                assert_eq!(best.len(), 2);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn orderings() {
        let ms = vmd_decompose(&tone_mixture(&[(0.3, 2.0), (1.5, 1.0)], 20.0, 400), 20.0, &VmdParams {
            modes: 2,
            ..Default::default()
        })
        .unwrap();
        let by_f = ms.order_by_frequency();
        assert!(ms.center_freqs[by_f[0]] < ms.center_freqs[by_f[1]]);
        let by_e = ms.order_by_energy();
        assert_eq!(by_e[0], by_f[0]);
        let swapped = ms.permuted(&[1, 0]);
        assert_eq!(swapped.reconstruct(), swapped.input);
        assert_eq!(swapped.center_freqs[0], ms.center_freqs[1]);
    }
}
