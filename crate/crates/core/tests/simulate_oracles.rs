//! Closed-loop data generator against a fine-step integrator and its own
//! structural identities.

use nalgebra::DVector;
use num_complex::Complex64;
use sysid_core::maglev::{controller_hinf, plant, PULSE_HEIGHT, THETA_TRUE};
use sysid_core::simulate::{
    closed_loop_system, maglev_defaults, monte_carlo_datasets, simulate_closed_loop, simulate_closed_loop_record, ExperimentSpec,
    NoiseSpec,
};

fn noise_free() -> ExperimentSpec {
    let mut spec = maglev_defaults();
    spec.noise = NoiseSpec::none();
    spec
}

#[test]
fn noise_free_record_matches_rk4() {
    let spec = noise_free();
    let data = simulate_closed_loop(&spec).unwrap();
    let sys = closed_loop_system(&spec.plant.to_ss().unwrap(), &spec.controller.to_ss().unwrap(), 0.0, 0.0).unwrap();
    let r = spec.reference_samples();
    let (a, b) = (sys.a(), sys.b().column(0).into_owned());
    let (cy, dy) = (sys.c().row(1).transpose(), sys.d()[(1, 0)]);
    let sub = 20;
    let h = spec.ts / sub as f64;
    let mut x = DVector::zeros(sys.order());
    let mut peak: f64 = 0.0;
    let mut err: f64 = 0.0;
    for k in 0..data.len() {
        let y = cy.dot(&x) + dy * r[k];
        peak = peak.max(y.abs());
        err = err.max((y - data.y[k]).abs());
        let f = |x: &DVector<f64>| a * x + &b * r[k];
        for _ in 0..sub {
            let k1 = f(&x);
            let k2 = f(&(&x + &k1 * (h / 2.0)));
            let k3 = f(&(&x + &k2 * (h / 2.0)));
            let k4 = f(&(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    assert!(err <= 1e-6 * peak, "{err} vs peak {peak}");
    // bounded response
    assert!(peak < 10.0 * PULSE_HEIGHT * 1.02);
}

#[test]
fn controller_output_reconstructs_input() {
    // u = C_K x_K + D_K (r − y) + σ_ξ ξ at every sample, noise or not
    let spec = maglev_defaults();
    let rec = simulate_closed_loop_record(&spec).unwrap();
    let k = spec.controller.to_ss().unwrap();
    let d = &rec.data;
    let mut worst: f64 = 0.0;
    let scale = d.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..d.len() {
        let xk: f64 = (0..k.order()).map(|j| k.c()[(0, j)] * rec.controller_states[j][i]).sum();
        let u = xk + k.feedthrough() * (d.r_y[i] - d.y[i]) + spec.noise.sigma_xi * rec.xi[i];
        worst = worst.max((u - d.u[i]).abs());
    }
    assert!(worst <= 1e-9 * scale, "{worst} vs {scale}");
}

#[test]
fn steady_state_tracks_reference() {
    let p = plant(&THETA_TRUE);
    let k = controller_hinf();
    let zero = Complex64::new(0.0, 0.0);
    let l0 = (p.eval(zero) * k.eval(zero)).re;
    let t0 = l0 / (1.0 + l0);
    assert!((t0 - 1.0).abs() <= 0.02, "T(0) = {t0}");
    assert!((l0.abs() - 254.4).abs() < 1.0, "loop gain {l0}");

    // late in the pulse the output settles near T(0)·height
    let spec = noise_free();
    let data = simulate_closed_loop(&spec).unwrap();
    let k_end = ((0.05 + 0.25) / spec.ts) as usize - 1;
    let y_end = data.y[k_end];
    assert!((y_end / (t0 * PULSE_HEIGHT) - 1.0).abs() < 0.05, "y = {y_end}");
}

#[test]
fn output_variance_grows_with_sigma_w() {
    let mut spec = maglev_defaults();
    spec.duration = 0.3;
    let clean = {
        let mut s = spec.clone();
        s.noise = NoiseSpec::none();
        simulate_closed_loop(&s).unwrap()
    };
    let index = 2000;
    let variance = |sigma_w: f64| {
        let mut s = spec.clone();
        s.noise.sigma_w = sigma_w;
        s.noise.sigma_xi = 0.0;
        let runs = monte_carlo_datasets(&s, 1000).unwrap();
        let dev: Vec<f64> = runs.iter().map(|d| d.y[index] - clean.y[index]).collect();
        let mean = dev.iter().sum::<f64>() / dev.len() as f64;
        dev.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (dev.len() - 1) as f64
    };
    let (v1, v2, v4) = (variance(1e-4), variance(2e-4), variance(4e-4));
    assert!(v1 < v2 && v2 < v4, "{v1} {v2} {v4}");
    // linear in the noise, so variance scales with its square
    assert!((v4 / v1 - 16.0).abs() < 1e-6 * 16.0);
}

#[test]
fn monte_carlo_contract() {
    let mut spec = maglev_defaults();
    spec.duration = 0.3;
    let single = monte_carlo_datasets(&spec, 1).unwrap();
    assert_eq!(single[0], simulate_closed_loop(&spec).unwrap());
    let runs = monte_carlo_datasets(&spec, 100).unwrap();
    for (i, a) in runs.iter().enumerate() {
        assert_eq!(a.r_y, runs[0].r_y);
        for b in &runs[i + 1..] {
            assert_ne!(a.y, b.y);
        }
    }
}
