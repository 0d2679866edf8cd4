//! Stabilized prediction-error objective and estimator on maglev data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sysid_core::lti::{feedback, Lti, Sign};
use sysid_core::maglev::{controller_hinf, controller_pid, plant, GrayBoxConstants, KI_TRUE, KX_TRUE, THETA_TRUE};
use sysid_core::optimize::OptimizerConfig;
use sysid_core::simulate::{maglev_defaults, simulate_closed_loop, Dataset, NoiseSpec};
use sysid_core::spem::{identify_spem, objective, Predictor, PlantParameterization, PENALTY};

fn data(noisy: bool) -> Dataset {
    let mut spec = maglev_defaults();
    if !noisy {
        spec.noise = NoiseSpec::none();
    }
    simulate_closed_loop(&spec).unwrap()
}

#[test]
fn noise_free_blackbox_recovery() {
    let d = data(false);
    let param = PlantParameterization::blackbox4();
    let res = identify_spem(&param, &controller_hinf(), &d, &OptimizerConfig::with_bounds(param.default_bounds())).unwrap();
    for (got, want) in res.theta_hat.iter().zip(THETA_TRUE) {
        assert!((got / want - 1.0).abs() < 0.01, "{:?}", res.theta_hat);
    }
}

#[test]
fn noise_free_graybox_recovery() {
    let d = data(false);
    let param = PlantParameterization::graybox2(GrayBoxConstants::default());
    let res = identify_spem(&param, &controller_hinf(), &d, &OptimizerConfig::with_bounds(param.default_bounds())).unwrap();
    assert!((res.theta_hat[0] / KI_TRUE - 1.0).abs() < 0.01, "{:?}", res.theta_hat);
    assert!((res.theta_hat[1] / KX_TRUE - 1.0).abs() < 0.01, "{:?}", res.theta_hat);
}

#[test]
fn exact_plant_predicts_under_either_controller() {
    let d = data(false);
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    for k in [controller_hinf(), controller_pid()] {
        let pred = Predictor::new(plant(&THETA_TRUE), k, d.ts).unwrap();
        let y_hat = pred.predict(&d).unwrap();
        let err: Vec<f64> = y_hat.iter().zip(&d.y).map(|(a, b)| a - b).collect();
        assert!(rms(&err) <= 1e-3 * rms(&d.y));
    }
}

#[test]
fn graybox_objective_equals_expanded_blackbox() {
    let d = data(true);
    let k = controller_hinf();
    let gray = PlantParameterization::graybox2(GrayBoxConstants::default());
    let black = PlantParameterization::blackbox4();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let theta = [rng.random_range(0.1..100.0), rng.random_range(1.0..1e4)];
        let a = objective(&theta, &gray, &k, &d);
        let b = objective(&gray.expand(&theta).unwrap(), &black, &k, &d);
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{theta:?}: {a} vs {b}");
    }
}

#[test]
fn penalty_grows_along_unstable_ray() {
    let d = data(false);
    let k = controller_hinf();
    let param = PlantParameterization::blackbox4();
    let mut last = 0.0;
    let mut margins = Vec::new();
    for scale in [1e7, 1e8, 1e9, 1e10] {
        let theta = [scale, THETA_TRUE[1], THETA_TRUE[2], THETA_TRUE[3]];
        let cl = feedback(&param.plant(&theta).unwrap().to_ss().unwrap(), &k.to_ss().unwrap(), Sign::Negative).unwrap();
        let margin = cl.max_instability().unwrap();
        assert!(margin > 0.0);
        margins.push(margin);
        let j = objective(&theta, &param, &k, &d);
        assert!(j > PENALTY && j > last, "{scale}: {j}");
        last = j;
    }
    assert!(margins.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn truth_beats_perturbations() {
    let d = data(false);
    let k = controller_hinf();
    let param = PlantParameterization::blackbox4();
    let j0 = objective(&THETA_TRUE, &param, &k, &d);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        // random direction scaled to between 5% and 50% relative distance
        let dir: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dist = rng.random_range(0.05..0.5);
        let theta: Vec<f64> = THETA_TRUE.iter().zip(&dir).map(|(t, v)| t * (1.0 + dist * v / norm)).collect();
        assert!(j0 <= objective(&theta, &param, &k, &d));
    }
}
