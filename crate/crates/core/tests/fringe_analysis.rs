use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use qdsoa_ramsey::analysis::{
    analytic_envelope, default_cutoff, demodulate, fit_coherence, fringe_series, xfrog_trace, DemodOptions, Envelope,
};
use qdsoa_ramsey::pulse::{compose_pair, synthesize, Launch, PulseSpec, TimeAxis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T0: f64 = 5.170_4e-15;
const NOMINAL: [f64; 4] = [600e-15, 650e-15, 750e-15, 900e-15];

fn launch() -> Launch {
    Launch { mode_area_m2: 0.5e-12, refractive_index: 3.5 }
}

fn omega0() -> f64 {
    PulseSpec::probe().carrier_omega()
}

fn carrier_axis(span: f64) -> TimeAxis {
    let dt = T0 / 40.0;
    TimeAxis { t_start_s: 0.0, dt_s: dt, len: (span / dt) as usize + 1 }
}

/// Gaussian with intensity FWHM `fwhm` and quadratic phase `beta·t²`.
fn chirped(axis: TimeAxis, center: f64, fwhm: f64, beta: f64) -> Vec<f64> {
    (0..axis.len)
        .map(|k| {
            let t = axis.time(k) - center;
            (-2.0 * LN_2 * t * t / (fwhm * fwhm)).exp() * (omega0() * t + beta * t * t).cos()
        })
        .collect()
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn chirped_gaussian_frequency_slope() {
    let fwhm = 150e-15;
    let axis = carrier_axis(2e-12);
    for beta in [0.8 * LN_2 / (fwhm * fwhm), -0.5 * LN_2 / (fwhm * fwhm)] {
        let field = chirped(axis, 1e-12, fwhm, beta);
        let env = analytic_envelope(&field, axis, omega0(), 1.5 * default_cutoff(fwhm), &launch()).unwrap();
        let peak = env.intensity_w.iter().cloned().fold(0.0, f64::max);
        let (mut t, mut w) = (Vec::new(), Vec::new());
        for k in 0..env.len() {
            if env.intensity_w[k] > 0.1 * peak {
                t.push(env.t_s(k));
                w.push(env.inst_freq_rad_per_s[k]);
            }
        }
        // d/dt (ω₀t + βt²) = ω₀ + 2βt.
        let expected = 2.0 * beta;
        let got = slope(&t, &w);
        assert!((got - expected).abs() / expected.abs() < 1e-2, "{got} vs {expected}");
    }
}

#[test]
fn two_pulses_split_near_midpoint() {
    let (pump, probe) = (PulseSpec::pump(), PulseSpec::probe());
    let axis = carrier_axis(2.5e-12);
    let w = compose_pair(&pump, &probe, 600e-15, &launch(), axis, 0.8e-12).unwrap();
    let options = DemodOptions {
        omega0: omega0(),
        cutoff_rad_per_s: default_cutoff(150e-15),
        launch: launch(),
        min_peak_separation_s: 300e-15,
    };
    let rec = demodulate(&w.samples, axis, &options).unwrap();
    let env = &rec.envelope;
    let split = env.t_s(rec.probe_window.start);
    // Unequal energies pull the minimum toward the weaker pulse.
    assert!((split - 1.1e-12).abs() < 30e-15, "{split}");
    let (tp, pp) = env.refined_peak(env.argmax(rec.pump_window.clone()));
    let (ts, ps) = env.refined_peak(env.argmax(rec.probe_window.clone()));
    assert!((tp - 0.8e-12).abs() < 0.05e-15, "{tp}");
    assert!((ts - 1.4e-12).abs() < 0.05e-15, "{ts}");
    assert!((pp - pump.peak_power()).abs() / pump.peak_power() < 1e-3);
    assert!((ps - probe.peak_power()).abs() / probe.peak_power() < 1e-3);
}

/// Envelope sampled on a coarse grid: `exp(-t²/2σ²)·exp(i·b·t²/2)`.
fn gaussian_envelope(len: usize, dt: f64, center: f64, sigma: f64, chirp: f64) -> Envelope {
    let axis = TimeAxis { t_start_s: 0.0, dt_s: dt, len };
    let amplitude: Vec<Complex64> = (0..len)
        .map(|k| {
            let t = k as f64 * dt - center;
            Complex64::from_polar((-t * t / (2.0 * sigma * sigma)).exp(), 0.5 * chirp * t * t)
        })
        .collect();
    Envelope {
        axis,
        omega0: omega0(),
        intensity_w: amplitude.iter().map(|a| a.norm_sqr()).collect(),
        inst_freq_rad_per_s: vec![f64::NAN; len],
        amplitude,
    }
}

#[test]
fn time_marginal_is_intensity_correlation() {
    let dt = 2e-15;
    for (sig_s, sig_g) in [(60e-15, 60e-15), (90e-15, 40e-15), (50e-15, 120e-15)] {
        let signal = gaussian_envelope(1024, dt, 1e-12, sig_s, 0.0);
        let reference = gaussian_envelope(512, dt, 0.5e-12, sig_g, 0.0);
        let s = xfrog_trace(&signal, &reference, 256, 128).unwrap();
        let marginal = s.time_marginal();
        // ∫ e^{-(t-a)²/σs²} e^{-(t-b)²/σg²} dt in closed form.
        let (vs, vg) = (sig_s * sig_s, sig_g * sig_g);
        let expected: Vec<f64> = s
            .delays_s
            .iter()
            .map(|&d| (PI * vs * vg / (vs + vg)).sqrt() * (-(d - 1e-12).powi(2) / (vs + vg)).exp())
            .collect();
        let peak = expected.iter().cloned().fold(0.0, f64::max);
        let rms =
            (marginal.iter().zip(&expected).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / expected.len() as f64).sqrt();
        assert!(rms < 1e-2 * peak, "{sig_s} {sig_g}: rms {}", rms / peak);
    }
}

#[test]
fn spectrogram_tilt_follows_chirp() {
    let dt = 2e-15;
    let reference = gaussian_envelope(256, dt, 0.25e-12, 60e-15, 0.0);
    for chirp in [4e26, -4e26] {
        let signal = gaussian_envelope(1024, dt, 1e-12, 150e-15, chirp);
        let s = xfrog_trace(&signal, &reference, 256, 128).unwrap();
        let (t, w, cov) = s.moments();
        assert!((t - 1e-12).abs() < 2e-15, "{t}");
        assert!((w - omega0()).abs() < 1e-3 * 2.0 * PI / 150e-15, "{}", w - omega0());
        assert_eq!(cov.signum(), chirp.signum(), "{cov}");
    }
}

#[test]
fn coherence_fit_survives_five_percent_noise() {
    let truth = 340e-15;
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> =
            NOMINAL.iter().map(|&d| 0.8 * (-d / truth).exp() * (1.0 + rng.random_range(-0.05..=0.05))).collect();
        let fit = fit_coherence(&NOMINAL, &v).unwrap();
        assert!(!fit.non_decaying);
        worst = worst.max((fit.t_coh_s - truth).abs() / truth);
    }
    assert!(worst < 0.15, "worst relative error {worst}");
}

fn fine_grid(start: f64) -> Vec<f64> {
    (0..13).map(|k| start + k as f64 * 1e-15).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn demodulated_width_matches_synthesis(fwhm_fs in 80.0_f64..250.0) {
        let spec = PulseSpec { fwhm_s: fwhm_fs * 1e-15, ..PulseSpec::probe() };
        let axis = carrier_axis(12.0 * spec.fwhm_s);
        let w = synthesize(&spec, &launch(), axis, 6.0 * spec.fwhm_s).unwrap();
        let env = analytic_envelope(&w.samples, axis, omega0(), default_cutoff(spec.fwhm_s), &launch()).unwrap();
        let peak = env.argmax(0..env.len());
        let width = env.fwhm_around(peak);
        prop_assert!((width - spec.fwhm_s).abs() / spec.fwhm_s < 1e-2, "{}", width);
    }

    #[test]
    fn fringe_phases_are_shift_equivariant(
        phi in -PI..PI,
        delta in -3e-15_f64..3e-15,
        amp in 0.05_f64..0.5,
    ) {
        let x = fine_grid(600e-15);
        let int: Vec<f64> = x.iter().map(|&t| amp * (2.0 * PI * t / T0 + phi).sin() + 1.0).collect();
        let sep: Vec<f64> = x.iter().map(|&t| 0.1e-15 * (2.0 * PI * t / T0 + phi - 1.2).sin() + 600e-15).collect();
        let a = fringe_series(&x, &int, &sep).unwrap();
        let shifted: Vec<f64> = x.iter().map(|t| t + delta).collect();
        let b = fringe_series(&shifted, &int, &sep).unwrap();
        let expect = -2.0 * PI * delta / a.period_s;
        let d_int = Complex64::from_polar(1.0, b.intensity.phase_rad - a.intensity.phase_rad - expect).arg();
        let d_sep = Complex64::from_polar(1.0, b.separation.phase_rad - a.separation.phase_rad - expect).arg();
        prop_assert!(d_int.abs() < 1e-2, "{}", d_int);
        prop_assert!(d_sep.abs() < 1e-2, "{}", d_sep);
        prop_assert!((b.lag_cycles - a.lag_cycles).abs() < 1e-2 / (2.0 * PI));
    }

    #[test]
    fn visibility_is_scale_invariant(
        phi in -PI..PI,
        amp in 0.05_f64..0.9,
        scale in 1e-6_f64..1e6,
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = fine_grid(650e-15);
        let y: Vec<f64> = x
            .iter()
            .map(|&t| amp * (2.0 * PI * t / T0 + phi).sin() + 1.0 + 0.01 * rng.random_range(-1.0..1.0))
            .collect();
        let scaled: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let a = fringe_series(&x, &y, &y).unwrap();
        let b = fringe_series(&x, &scaled, &scaled).unwrap();
        prop_assert!((a.visibility - b.visibility).abs() < 1e-12, "{} vs {}", a.visibility, b.visibility);
    }
}
