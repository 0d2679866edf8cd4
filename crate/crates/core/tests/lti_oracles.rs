//! LTI machinery against independent oracles: fine-step RK4 integration,
//! bisection on the plant cubic, direct rational evaluation and random
//! realization round trips.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sysid_core::lti::{discretize, feedback, lsim, series, Domain, Hold, Lti, Sign, StateSpace, TransferFunction};
use sysid_core::maglev::{controller_hinf, controller_pid, plant, THETA_TRUE, TS};
use sysid_core::poly;
use sysid_core::simulate::closed_loop_system;

/// Classical RK4 on `ẋ = Ax + Bu(t)`, `y = Cx + Du(t)`, sampling `y` every
/// `sub` substeps of length `h`.
fn rk4(sys: &StateSpace, input: impl Fn(f64) -> f64, h: f64, sub: usize, samples: usize) -> Vec<f64> {
    let (a, b, c, d) = (sys.a(), sys.b().column(0).into_owned(), sys.c().row(0).transpose(), sys.d()[(0, 0)]);
    let f = |x: &DVector<f64>, t: f64| a * x + &b * input(t);
    let mut x = DVector::zeros(sys.order());
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let t0 = k as f64 * h * sub as f64;
        out.push(c.dot(&x) + d * input(t0));
        for i in 0..sub {
            let t = t0 + i as f64 * h;
            let k1 = f(&x, t);
            let k2 = f(&(&x + &k1 * (h / 2.0)), t + h / 2.0);
            let k3 = f(&(&x + &k2 * (h / 2.0)), t + h / 2.0);
            let k4 = f(&(&x + &k3 * h), t + h);
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
    }
    out
}

fn range(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
}

fn maglev_loop() -> StateSpace {
    let cl = closed_loop_system(&plant(&THETA_TRUE).to_ss().unwrap(), &controller_hinf().to_ss().unwrap(), 0.0, 0.0).unwrap();
    // reference to y only
    StateSpace::new(cl.a().clone(), cl.b().columns(0, 1).into_owned(), cl.c().rows(1, 1).into_owned(), cl.d().view((1, 0), (1, 1)).into_owned(), Domain::Continuous).unwrap()
}

#[test]
fn zoh_step_matches_fine_rk4() {
    let sys = maglev_loop();
    let steps = 1000;
    let exact = lsim(&discretize(&sys, TS, Hold::Zoh).unwrap(), &vec![1.0; steps]).unwrap();
    let fine = rk4(&sys, |_| 1.0, TS / 100.0, 100, steps);
    let err = exact.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8 * range(&fine), "{err} vs range {}", range(&fine));
}

#[test]
fn foh_ramp_input_matches_fine_rk4() {
    let sys = maglev_loop();
    let steps = 1000;
    // starts at rest: the discrete state ξ = x − Γ₂u is zero only when u[0] = 0
    let u: Vec<f64> = (0..=steps).map(|k| (k as f64 * 0.013).sin() + 0.3 * (1.0 - (k as f64 * 0.0021).cos())).collect();
    let exact = lsim(&discretize(&sys, TS, Hold::Foh).unwrap(), &u[..steps]).unwrap();
    let interp = |t: f64| {
        let s = t / TS;
        let k = (s.floor() as usize).min(steps - 1);
        let frac = s - k as f64;
        u[k] * (1.0 - frac) + u[k + 1] * frac
    };
    let fine = rk4(&sys, interp, TS / 100.0, 100, steps);
    let err = exact.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8 * range(&fine), "{err} vs range {}", range(&fine));
}

fn random_poly_from_roots(rng: &mut ChaCha8Rng, degree: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    while roots.len() < degree {
        let re = rng.random_range(-10.0..10.0);
        if degree - roots.len() >= 2 && rng.random::<bool>() {
            let im = rng.random_range(0.1..10.0);
            roots.push(Complex64::new(re, im));
            roots.push(Complex64::new(re, -im));
        } else {
            roots.push(Complex64::new(re, 0.0));
        }
    }
    poly::scale(&poly::from_roots(&roots), rng.random_range(0.5..2.0))
}

fn normalized(num: &[f64], den: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let lead = den[0];
    let strip = |p: &[f64]| p.iter().skip_while(|c| **c == 0.0).map(|c| c / lead).collect::<Vec<_>>();
    (strip(num), strip(den))
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let (a, b) = (poly::pad(a, len), poly::pad(b, len));
    let scale = a.iter().map(|c| c.abs()).fold(0.0, f64::max);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn random_tf_ss_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        let den = random_poly_from_roots(&mut rng, n);
        let m = rng.random_range(0..=n);
        let num: Vec<f64> = (0..=m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let tf = TransferFunction::continuous(num.clone(), den.clone()).unwrap();
        let back = tf.to_ss().unwrap().to_tf().unwrap();
        let (n0, d0) = normalized(&num, &den);
        let (n1, d1) = normalized(back.num(), back.den());
        assert!(rel_diff(&d0, &d1) <= 1e-9, "{d0:?} {d1:?}");
        assert!(rel_diff(&n0, &n1) <= 1e-9, "{n0:?} {n1:?}");
    }
}

#[test]
fn plant_has_one_unstable_pole_near_22() {
    let p = plant(&THETA_TRUE);
    let den = p.den().to_vec();
    // bisection on the cubic over a bracket with a sign change
    let (mut lo, mut hi) = (1.0, 100.0);
    assert!(poly::eval_real(&den, lo) < 0.0 && poly::eval_real(&den, hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poly::eval_real(&den, mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let poles = p.poles().unwrap();
    assert_eq!(poles.iter().filter(|z| z.re > 0.0).count(), 1);
    assert!((poles[0].re - lo).abs() < 1e-9 * lo && poles[0].im == 0.0);
    assert!((lo - 22.0).abs() < 1.0);
    assert!(!p.is_stable().unwrap());
}

#[test]
fn controller_poles_and_dc_gain() {
    let k = controller_hinf();
    let mut poles = k.poles().unwrap();
    assert!(k.is_stable().unwrap());
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let expected = [Complex64::new(-399.9, 0.0), Complex64::new(-121.5, -141.1), Complex64::new(-121.5, 141.1), Complex64::new(-0.1, 0.0)];
    for (p, e) in poles.iter().zip(expected) {
        assert!((p - e).norm() < 0.1, "{p} vs {e}");
    }
    let realized = k.to_ss().unwrap().to_tf().unwrap();
    let k0 = realized.eval(Complex64::new(0.0, 0.0)).re;
    assert!((k0 / -2.346e5 - 1.0).abs() < 1e-3, "{k0}");
    // direct rational value at s = 0 agrees
    assert!((k0 / (k.num().last().unwrap() / k.den().last().unwrap()) - 1.0).abs() < 1e-9);
}

#[test]
fn plant_low_frequency_gain() {
    let p = plant(&THETA_TRUE);
    let mag = p.freq_response(&[1e-3]).unwrap().magnitude()[0];
    assert!((mag / (THETA_TRUE[0] / THETA_TRUE[3]).abs() - 1.0).abs() < 1e-5);
    assert!((mag - 1.0842e-3).abs() < 1e-7);
}

#[test]
fn both_controllers_stabilize_plant() {
    let p = plant(&THETA_TRUE).to_ss().unwrap();
    for k in [controller_hinf(), controller_pid()] {
        let cl = feedback(&p, &k.to_ss().unwrap(), Sign::Negative).unwrap();
        assert!(cl.is_stable().unwrap());
        // eigenvalues of the interconnected A agree with the closed-loop characteristic polynomial
        let char_den = poly::add(&poly::mul(plant(&THETA_TRUE).den(), k.den()), &poly::mul(plant(&THETA_TRUE).num(), k.num()));
        let max_re = poly::roots(&char_den).unwrap().iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(max_re < 0.0);
        assert!((cl.max_instability().unwrap() - max_re).abs() < 1e-6 * max_re.abs().max(1.0));
    }
}

#[test]
fn series_response_is_product() {
    let p = plant(&THETA_TRUE);
    let k = controller_hinf();
    let s = series(&p.to_ss().unwrap(), &k.to_ss().unwrap()).unwrap();
    let omega = sysid_core::lti::logspace(1e-1, 1e4, 60);
    let prod = s.freq_response(&omega).unwrap();
    let (fp, fk) = (p.freq_response(&omega).unwrap(), k.freq_response(&omega).unwrap());
    for i in 0..omega.len() {
        let want = fp.value[i] * fk.value[i];
        assert!((prod.value[i] - want).norm() <= 1e-10 * want.norm());
    }
    // and the tf product through polynomial multiplication
    let tf = s.to_tf().unwrap();
    let direct = p.mul(&k).unwrap();
    let (n0, d0) = normalized(direct.num(), direct.den());
    let (n1, d1) = normalized(tf.num(), tf.den());
    assert!(rel_diff(&d0, &d1) < 1e-9 && rel_diff(&n0, &n1) < 1e-9);
}

#[test]
fn closed_loop_a_matrix_is_consistent() {
    let sys = maglev_loop();
    let cl = feedback(&plant(&THETA_TRUE).to_ss().unwrap(), &controller_hinf().to_ss().unwrap(), Sign::Negative).unwrap();
    // controller states enter with opposite sign: the matrices are similar under diag(I, −I)
    let n = cl.order();
    let t = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| if i < 3 { 1.0 } else { -1.0 }));
    let a: &DMatrix<f64> = sys.a();
    assert!((a - &t * cl.a() * &t).norm() <= 1e-9 * a.norm());
}
