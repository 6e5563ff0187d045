mod common;

use std::f64::consts::{LN_2, PI};

use common::BlochOracle;
use qdsoa_ramsey::constants::{angular_frequency, HBAR};
use qdsoa_ramsey::medium::MediumSpec;
use qdsoa_ramsey::solver::SingleCell;

const DIPOLE: f64 = 1.1e-28;

/// No dephasing, no feeding, no decay on the time scales of a pulse.
fn frozen_medium() -> MediumSpec {
    MediumSpec {
        pump_rate_per_s: 0.0,
        t2_s: 1.0,
        tau_es_to_gs_s: 1.0,
        tau_recomb_s: 1.0,
        tau_res_to_es_s: 1.0,
        ..Default::default()
    }
}

fn omega0() -> f64 {
    angular_frequency(1.55e-6)
}

fn dt() -> f64 {
    2.0 * PI / omega0() / 40.0
}

/// Field amplitude whose Rabi frequency times `duration` equals `area`.
fn flat_amplitude(area: f64, duration: f64) -> f64 {
    area / duration * HBAR / DIPOLE
}

/// Steps the solver cell under `e(t)` for `steps` steps; returns `[x, y, ee, es, res]`.
fn solver_run(
    medium: &MediumSpec,
    omega: f64,
    init: (f64, (f64, f64)),
    e: &dyn Fn(f64) -> f64,
    steps: usize,
) -> [f64; 5] {
    let h = dt();
    let mut cell = SingleCell::new(medium, DIPOLE, omega, h);
    cell.set_state(init.0, init.1);
    for n in 0..steps {
        cell.step(e(n as f64 * h), e((n + 1) as f64 * h));
    }
    let s = &cell.state;
    [s.coh_re[0], s.coh_im[0], s.rho_ee[0], s.rho_es[0], s.rho_res[0]]
}

fn oracle_run(medium: &MediumSpec, omega: f64, init: (f64, (f64, f64)), e: &dyn Fn(f64) -> f64, t1: f64) -> [f64; 5] {
    let oracle = BlochOracle::new(medium, DIPOLE, omega);
    oracle.run(e, [init.1 .0, init.1 .1, init.0, 0.0, 0.0], 0.0, t1)
}

fn max_diff(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn flat_pulse(area: f64, duration: f64) -> impl Fn(f64) -> f64 {
    let e0 = flat_amplitude(area, duration);
    let w = omega0();
    move |t: f64| if (0.0..=duration).contains(&t) { e0 * (w * t).sin() } else { 0.0 }
}

#[test]
fn pi_pulse_inverts_and_matches_oracle() {
    let medium = frozen_medium();
    let duration = 1e-12;
    let steps = (duration / dt()).round() as usize;
    let e = flat_pulse(PI, duration);
    let t1 = steps as f64 * dt();
    let init = (1.0, (0.0, 0.0));
    let sim = solver_run(&medium, omega0(), init, &e, steps);
    let reference = oracle_run(&medium, omega0(), init, &e, t1);
    assert!(max_diff(&sim, &reference) < 1e-3, "{sim:?} vs {reference:?}");
    let w = 2.0 * sim[2] - 1.0;
    assert!((w + 1.0).abs() < 1e-3, "inversion after pi pulse {w}");
}

#[test]
fn half_pi_pulse_matches_oracle() {
    let medium = frozen_medium();
    let duration = 1e-12;
    let steps = (duration / dt()).round() as usize;
    let e = flat_pulse(PI / 2.0, duration);
    let init = (0.0, (0.0, 0.0));
    let sim = solver_run(&medium, omega0(), init, &e, steps);
    let reference = oracle_run(&medium, omega0(), init, &e, steps as f64 * dt());
    assert!(max_diff(&sim, &reference) < 1e-3, "{sim:?} vs {reference:?}");
    // Equal superposition: ρ_ee = 1/2 and |ρ_eg| = 1/2.
    assert!((sim[2] - 0.5).abs() < 5e-3, "{}", sim[2]);
    assert!((sim[0].hypot(sim[1]) - 0.5).abs() < 5e-3);
}

#[test]
fn gaussian_pulses_with_relaxation_match_oracle() {
    // Full rate chain and dephasing, 150 fs pulses of several areas.
    let medium = MediumSpec::default();
    let fwhm = 150e-15;
    let peak = 4.0 * fwhm;
    let span = 2.0 * peak;
    let steps = (span / dt()).round() as usize;
    let occ = medium.rates().steady_state();
    for area in [PI / 2.0, PI, 2.0 * PI] {
        // ∫ exp(-2 ln2 t²/τ²) dt = τ sqrt(π / (2 ln 2)).
        let e0 = area / (fwhm * (PI / (2.0 * LN_2)).sqrt()) * HBAR / DIPOLE;
        let w = omega0();
        let e = move |t: f64| {
            let u = t - peak;
            e0 * (-2.0 * LN_2 * u * u / (fwhm * fwhm)).exp() * (w * u).cos()
        };
        let h = dt();
        let mut cell = SingleCell::new(&medium, DIPOLE, w, h);
        for n in 0..steps {
            cell.step(e(n as f64 * h), e((n + 1) as f64 * h));
        }
        let s = &cell.state;
        let sim = [s.coh_re[0], s.coh_im[0], s.rho_ee[0], s.rho_es[0], s.rho_res[0]];
        let oracle = BlochOracle::new(&medium, DIPOLE, w);
        let reference = oracle.run(e, [0.0, 0.0, occ.ee, occ.es, occ.res], 0.0, steps as f64 * h);
        assert!(max_diff(&sim, &reference) < 1e-3, "area {area}: {sim:?} vs {reference:?}");
    }
}

#[test]
fn detuned_group_barely_responds() {
    let medium = frozen_medium();
    let duration = 1e-12;
    let steps = (duration / dt()).round() as usize;
    let e = flat_pulse(PI, duration);
    let bandwidth = 2.0 * PI / duration;
    let init = (1.0, (0.0, 0.0));
    let resonant = solver_run(&medium, omega0(), init, &e, steps);
    let detuned_omega = omega0() + 10.0 * bandwidth;
    let detuned = solver_run(&medium, detuned_omega, init, &e, steps);
    let reference = oracle_run(&medium, detuned_omega, init, &e, steps as f64 * dt());
    let transfer = |s: &[f64; 5]| 1.0 - s[2];
    assert!(transfer(&detuned) < 0.01 * transfer(&resonant), "{} vs {}", transfer(&detuned), transfer(&resonant));
    assert!(max_diff(&detuned, &reference) < 1e-3);
}

#[test]
fn free_precession_over_many_steps_matches_oracle() {
    let medium = MediumSpec::default();
    let steps = 4000;
    let zero = |_: f64| 0.0;
    let init = (0.6, (0.2, -0.3));
    let mut cell = SingleCell::new(&medium, DIPOLE, omega0(), dt());
    cell.set_state(init.0, init.1);
    for _ in 0..steps {
        cell.step(0.0, 0.0);
    }
    let s = &cell.state;
    let sim = [s.coh_re[0], s.coh_im[0], s.rho_ee[0], s.rho_es[0], s.rho_res[0]];
    let reference = oracle_run(&medium, omega0(), init, &zero, steps as f64 * dt());
    assert!(max_diff(&sim, &reference) < 1e-6, "{sim:?} vs {reference:?}");
}
