use hrr_core::config::{parse_config, RunConfig};
use hrr_core::hr::{condition_heartbeat, count_hr, detect_peaks, PeakTrain, WindowConfig, MIN_PEAK_INTERVAL, PEAK_THRESHOLD};
use hrr_core::preprocess::{bandpass, FilterSpec};
use hrr_core::signal::{synthesize_trace, ChestMotionTrace, HeartbeatModel, RateTrajectory, RespirationModel, Unit, Waveform};
use hrr_core::vmd::{pearson, vmd_decompose, VmdParams};
use proptest::prelude::*;
use std::f64::consts::PI;

fn tones(fs: f64, n: usize, parts: &[(f64, f64, f64)]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            parts.iter().map(|&(f, a, ph)| a * (2.0 * PI * f * t + ph).sin()).sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_is_a_superposition(
        f_resp in 0.2f64..0.6,
        a1 in 0.5f64..2.0,
        a2 in 0.0f64..0.4,
        hr in 50.0f64..180.0,
        amp in 0.02f64..0.3,
        pulse in any::<bool>(),
    ) {
        let resp = RespirationModel::new(f_resp, vec![a1, a2], 0.3).unwrap();
        let wave = if pulse { Waveform::PulseLike } else { Waveform::Sinusoid };
        let heart = HeartbeatModel::new(RateTrajectory::Constant { bpm: hr }, amp, wave);
        let both = synthesize_trace(Some(&resp), Some(&heart), 0.0, 50.0, 10.0, 0).unwrap();
        let r = synthesize_trace(Some(&resp), None, 0.0, 50.0, 10.0, 0).unwrap();
        let h = synthesize_trace(None, Some(&heart), 0.0, 50.0, 10.0, 0).unwrap();
        for i in 0..both.len() {
            prop_assert_eq!(both.samples[i], r.samples[i] + h.samples[i]);
        }
    }

    #[test]
    fn bandpass_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        f1 in 0.05f64..6.0,
        f2 in 0.05f64..6.0,
        ph in 0.0f64..6.0,
    ) {
        let fs = 50.0;
        let x = tones(fs, 1000, &[(f1, 1.0, ph)]);
        let y = tones(fs, 1000, &[(f2, 0.7, 0.0), (1.1, 0.2, ph)]);
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let spec = FilterSpec::default();
        let run = |s: Vec<f64>| bandpass(&ChestMotionTrace::new(s, fs, Unit::Millimeters), &spec).unwrap().samples;
        let (fx, fy, fm) = (run(x), run(y), run(mix));
        for i in 0..fm.len() {
            prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() <= 1e-9 * (1.0 + a.abs() + b.abs()));
        }
    }

    #[test]
    fn peaks_ignore_amplitude_scale(
        f in 0.8f64..3.0,
        depth in 0.0f64..0.8,
        scale_exp in -6.0f64..6.0,
    ) {
        let fs = 20.0;
        let x: Vec<f64> = (0..320)
            .map(|i| {
                let t = i as f64 / fs;
                (1.0 + depth * (0.3 * t).sin()) * (2.0 * PI * f * t).sin()
            })
            .collect();
        let c = 10f64.powf(scale_exp);
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let p1 = detect_peaks(&condition_heartbeat(&x, fs).unwrap(), fs);
        let p2 = detect_peaks(&condition_heartbeat(&scaled, fs).unwrap(), fs);
        prop_assert_eq!(p1.len(), p2.len());
        for (a, b) in p1.peak_times.iter().zip(&p2.peak_times) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn detected_peaks_respect_floor_and_spacing(
        parts in prop::collection::vec((0.3f64..4.0, 0.1f64..1.0, 0.0f64..6.0), 1..4),
    ) {
        let fs = 20.0;
        let x = tones(fs, 400, &parts);
        let train = detect_peaks(&x, fs);
        if let Some(g) = train.min_gap() {
            prop_assert!(g >= MIN_PEAK_INTERVAL);
        }
        for t in &train.peak_times {
            // refinement moves a peak by at most half a sample
            let lo = (t * fs).floor() as usize;
            prop_assert!(x[lo].max(x[(lo + 1).min(x.len() - 1)]) >= PEAK_THRESHOLD);
        }
    }

    #[test]
    fn uniform_trains_count_exactly(
        bpm in 60.0f64..220.0,
        offset in 0.0f64..1.0,
        l_min in 3.0f64..8.0,
        t in 12.0f64..30.0,
    ) {
        let spacing = 60.0 / bpm;
        let train = PeakTrain::new((0..).map(|k| offset + k as f64 * spacing).take_while(|&p| p < 40.0).collect());
        let cfg = WindowConfig::default().with_l_min(l_min);
        let w = count_hr(&train, &cfg, t).unwrap();
        prop_assert!((w.hr_bpm - bpm).abs() <= 1e-9 * bpm);
        prop_assert!(w.length() >= l_min - 1e-9 || w.length() > cfg.l_b_max - spacing);
        prop_assert!(w.length() <= cfg.l_b_max + 1e-9);
        prop_assert!(w.end <= t && t - w.end < spacing);
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(
        a in prop::collection::vec(-10.0f64..10.0, 8..64),
        shift in -5.0f64..5.0,
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v.sin() * shift + i as f64 * 0.1).collect();
        if let (Some(r1), Some(r2)) = (pearson(&a, &b), pearson(&b, &a)) {
            prop_assert!((r1 - r2).abs() < 1e-12);
            prop_assert!(r1.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn config_echo_round_trips(
        seed in any::<u64>(),
        mu1 in 0.01f64..0.99,
        mu2 in 0.0f64..0.5,
        l_min in 3.0f64..8.0,
        harmonics in prop::collection::vec(0.01f64..1.0, 1..6),
        duration in 20.0f64..300.0,
    ) {
        let mut cfg = RunConfig { seed, mu1, mu2, l_min, duration, ..RunConfig::default() };
        cfg.resp_harmonics = harmonics;
        let back = parse_config(Some(("echo", &cfg.to_key_value())), &[]).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decomposition_reconstructs_exactly(
        samples in prop::collection::vec(-5.0f64..5.0, 64..200),
        alpha in 10.0f64..5000.0,
        modes in 2usize..7,
    ) {
        let params = VmdParams { modes, alpha, max_iters: 60, ..VmdParams::default() };
        let ms = vmd_decompose(&samples, 20.0, &params).unwrap();
        prop_assert_eq!(ms.reconstruct(), samples);
    }
}
