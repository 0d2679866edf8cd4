//! Direct closed-loop baselines: ARX least squares, ARMAX prediction error
//! by Gauss–Newton, and AIC order selection.
//!
//! Models use a common order `n` and no dead time:
//! `A(q)y = B(q)u + C(q)ε` with `A = 1 + a1q⁻¹ + …`, `B = b1q⁻¹ + …`,
//! `C = 1 + c1q⁻¹ + …`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lti::{Domain, TransferFunction};
use crate::poly;
use crate::simulate::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolyKind {
    Arx,
    Armax,
}

impl PolyKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PolyKind::Arx => "arx",
            PolyKind::Armax => "armax",
        }
    }

    /// Free parameters at order `n`.
    pub fn parameters(&self, n: usize) -> usize {
        match self {
            PolyKind::Arx => 2 * n,
            PolyKind::Armax => 3 * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    pub kind: PolyKind,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Empty for ARX.
    pub c: Vec<f64>,
    pub n: usize,
    pub ts: f64,
}

impl PolynomialModel {
    /// Coefficients in the order `a, b, c`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).chain(&self.c).copied().collect()
    }
}

fn check_data(data: &Dataset, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if data.len() < 10 * 2 * n {
        return Err(Error::InvalidArgument(format!("{} samples are too few for order {n}", data.len())));
    }
    Ok(())
}

/// Regression rows `k = n..N−1` of `[−y(k−1..k−n), u(k−1..k−n)]`.
fn arx_regression(data: &Dataset, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = data.len() - n;
    let mut phi = DMatrix::zeros(rows, 2 * n);
    let mut target = DVector::zeros(rows);
    for r in 0..rows {
        let k = r + n;
        target[r] = data.y[k];
        for i in 1..=n {
            phi[(r, i - 1)] = -data.y[k - i];
            phi[(r, n + i - 1)] = data.u[k - i];
        }
    }
    (phi, target)
}

/// Least squares through a column-scaled QR factorization. Fails when the
/// scaled triangular factor is numerically singular.
fn least_squares(phi: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let cols = phi.ncols();
    let mut scaled = phi.clone();
    let mut norms = vec![1.0; cols];
    for j in 0..cols {
        let nrm = phi.column(j).norm();
        if nrm == 0.0 {
            return Err(Error::RankDeficient);
        }
        norms[j] = nrm;
        scaled.column_mut(j).unscale_mut(nrm);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let rmax = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| !(r[(i, i)].abs() > 1e-12 * rmax)) {
        return Err(Error::RankDeficient);
    }
    let mut qtb = target.clone();
    qr.q_tr_mul(&mut qtb);
    let x = r.solve_upper_triangular(&qtb.rows(0, cols).into_owned()).ok_or(Error::RankDeficient)?;
    Ok(DVector::from_iterator(cols, x.iter().zip(&norms).map(|(v, s)| v / s)))
}

/// ARX fit; returns the model and the mean squared residual over the
/// regression rows `k = n..N−1`.
pub fn fit_arx(data: &Dataset, n: usize) -> Result<(PolynomialModel, f64)> {
    check_data(data, n)?;
    let (phi, target) = arx_regression(data, n);
    let theta = least_squares(&phi, &target)?;
    let resid = &target - &phi * &theta;
    let v = resid.norm_squared() / (data.len() - n) as f64;
    let model = PolynomialModel {
        kind: PolyKind::Arx,
        a: theta.as_slice()[..n].to_vec(),
        b: theta.as_slice()[n..].to_vec(),
        c: Vec::new(),
        n,
        ts: data.ts,
    };
    Ok((model, v))
}

/// ARX normal-equation residual `‖Φᵀε‖` relative to `‖Φ‖_F·‖y‖`.
pub fn arx_orthogonality(data: &Dataset, model: &PolynomialModel) -> f64 {
    let (phi, target) = arx_regression(data, model.n);
    let theta = DVector::from_iterator(2 * model.n, model.a.iter().chain(&model.b).copied());
    let resid = &target - &phi * &theta;
    (phi.transpose() * resid).norm() / (phi.norm() * target.norm()).max(f64::MIN_POSITIVE)
}

/// One-step prediction errors of an ARMAX parameter vector `[a, b, c]`.
fn armax_residuals(data: &Dataset, n: usize, theta: &[f64]) -> Vec<f64> {
    let (a, rest) = theta.split_at(n);
    let (b, c) = rest.split_at(n);
    let len = data.len();
    let mut eps = vec![0.0; len];
    for k in n..len {
        let mut e = data.y[k];
        for i in 1..=n {
            e += a[i - 1] * data.y[k - i] - b[i - 1] * data.u[k - i] - c[i - 1] * eps[k - i];
        }
        eps[k] = e;
    }
    eps
}

/// Mean of `ε²` over `k = n..N−1`; the first `n` entries are unused.
fn mean_square(eps: &[f64], n: usize) -> f64 {
    eps[n..].iter().map(|e| e * e).sum::<f64>() / (eps.len() - n) as f64
}

/// `C(q)` with every root moved inside the unit circle (`r → 1/r̄`).
fn reflect_c(c: &[f64]) -> Result<Vec<f64>> {
    let mut full = vec![1.0];
    full.extend_from_slice(c);
    let roots = poly::roots(&full)?;
    if roots.iter().all(|r| r.norm() < 1.0) {
        return Ok(c.to_vec());
    }
    let fixed: Vec<Complex64> = roots.iter().map(|&r| if r.norm() >= 1.0 { 1.0 / r.conj() } else { r }).collect();
    Ok(poly::from_roots(&fixed)[1..].to_vec())
}

/// Gauss–Newton iterations actually taken and the loss after each.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaxReport {
    pub iterations: usize,
    pub loss_trace: Vec<f64>,
}

pub fn fit_armax(data: &Dataset, n: usize) -> Result<(PolynomialModel, f64)> {
    let (m, v, _) = fit_armax_report(data, n)?;
    Ok((m, v))
}

/// ARMAX fit from the ARX solution with `C = 1`: Gauss–Newton on the
/// pseudo-regression gradient `ψ = φ/C(q)` with step halving, at most 100
/// iterations, stopping once the relative loss decrease drops below 1e-10.
pub fn fit_armax_report(data: &Dataset, n: usize) -> Result<(PolynomialModel, f64, ArmaxReport)> {
    let (arx, _) = fit_arx(data, n)?;
    let len = data.len();
    let mut theta: Vec<f64> = arx.a.iter().chain(&arx.b).copied().chain(std::iter::repeat_n(0.0, n)).collect();
    let mut eps = armax_residuals(data, n, &theta);
    let mut v = mean_square(&eps, n);
    if !v.is_finite() {
        return Err(Error::Divergent);
    }
    let mut trace = vec![v];
    let mut iterations = 0;
    let rows = len - n;
    let d = 3 * n;
    for _ in 0..100 {
        iterations += 1;
        let c = &theta[2 * n..];
        // ψ(k) = φ(k)/C(q), φ = [−y(k−i), u(k−i), ε(k−i)]
        let mut psi = DMatrix::zeros(rows, d);
        let mut hist = vec![0.0; len * d];
        let mut row = vec![0.0; d];
        for k in n..len {
            for i in 1..=n {
                row[i - 1] = -data.y[k - i];
                row[n + i - 1] = data.u[k - i];
                row[2 * n + i - 1] = eps[k - i];
            }
            for i in 1..=n {
                let prev = &hist[(k - i) * d..(k - i + 1) * d];
                for j in 0..d {
                    row[j] -= c[i - 1] * prev[j];
                }
            }
            for j in 0..d {
                psi[(k - n, j)] = row[j];
            }
            hist[k * d..(k + 1) * d].copy_from_slice(&row);
        }
        let target = DVector::from_column_slice(&eps[n..]);
        let step = match least_squares(&psi, &target) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut mu = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let mut cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + mu * s).collect();
            let reflected = reflect_c(&cand[2 * n..])?;
            cand[2 * n..].copy_from_slice(&reflected);
            let e = armax_residuals(data, n, &cand);
            let vc = mean_square(&e, n);
            if vc.is_finite() && vc <= v {
                accepted = Some((cand, e, vc));
                break;
            }
            mu *= 0.5;
        }
        let Some((cand, e, vc)) = accepted else { break };
        let decrease = (v - vc) / v.max(f64::MIN_POSITIVE);
        theta = cand;
        eps = e;
        v = vc;
        trace.push(v);
        if decrease < 1e-10 {
            break;
        }
    }
    let model = PolynomialModel {
        kind: PolyKind::Armax,
        a: theta[..n].to_vec(),
        b: theta[n..2 * n].to_vec(),
        c: theta[2 * n..].to_vec(),
        n,
        ts: data.ts,
    };
    Ok((model, v, ArmaxReport { iterations, loss_trace: trace }))
}

pub fn fit(data: &Dataset, kind: PolyKind, n: usize) -> Result<(PolynomialModel, f64)> {
    match kind {
        PolyKind::Arx => fit_arx(data, n),
        PolyKind::Armax => fit_armax(data, n),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AicEntry {
    pub n: usize,
    pub loss: f64,
    pub aic: f64,
}

/// Samples from `offset` on.
fn tail(data: &Dataset, offset: usize) -> Result<Dataset> {
    Dataset::new(data.t[offset..].to_vec(), data.r_y[offset..].to_vec(), data.u[offset..].to_vec(), data.y[offset..].to_vec(), data.ts)
}

/// `AIC(n) = N·ln V_n + 2·d_n`; returns the minimizing order, its model and
/// the full table in `n_range` order. Every order is scored on the same
/// residual rows `k = max(n_range)..N−1`.
pub fn select_order_aic(data: &Dataset, kind: PolyKind, n_range: &[usize]) -> Result<(usize, PolynomialModel, Vec<AicEntry>)> {
    let n_max = *n_range.iter().max().ok_or_else(|| Error::InvalidArgument("empty order range".into()))?;
    if data.len() <= n_max {
        return Err(Error::InvalidArgument(format!("{} samples are too few for order {n_max}", data.len())));
    }
    let fits: Vec<(PolynomialModel, f64)> =
        n_range.par_iter().map(|&n| fit(&tail(data, n_max - n)?, kind, n)).collect::<Result<_>>()?;
    let big_n = data.len() as f64;
    let table: Vec<AicEntry> = n_range
        .iter()
        .zip(&fits)
        .map(|(&n, (_, v))| AicEntry { n, loss: *v, aic: big_n * v.ln() + 2.0 * kind.parameters(n) as f64 })
        .collect();
    let best = (0..table.len()).min_by(|&i, &j| table[i].aic.total_cmp(&table[j].aic)).expect("nonempty");
    Ok((table[best].n, fits[best].0.clone(), table))
}

/// `B(q)/A(q)` as a shift-operator transfer function at the model's period.
pub fn polynomial_to_tf(model: &PolynomialModel) -> Result<TransferFunction> {
    let mut num = vec![0.0];
    num.extend_from_slice(&model.b);
    let mut den = vec![1.0];
    den.extend_from_slice(&model.a);
    TransferFunction::new(num, den, Domain::Discrete { ts: model.ts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{lsim, Lti};

    fn dataset(u: Vec<f64>, y: Vec<f64>, ts: f64) -> Dataset {
        let t = (0..u.len()).map(|k| k as f64 * ts).collect();
        let r = vec![0.0; u.len()];
        Dataset::new(t, r, u, y, ts).unwrap()
    }

    fn prbs(len: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                if (s >> 33) & 1 == 1 { 1.0 } else { -1.0 }
            })
            .collect()
    }

    #[test]
    fn noise_free_arx_is_exact() {
        let ts = 0.1;
        let tf = TransferFunction::new(vec![0.0, 0.5, 0.2], vec![1.0, -1.2, 0.5], Domain::Discrete { ts }).unwrap();
        let u = prbs(500, 3);
        let y = lsim(&tf.to_ss().unwrap(), &u).unwrap();
        let data = dataset(u, y, ts);
        let (m, v) = fit_arx(&data, 2).unwrap();
        for (a, b) in m.a.iter().chain(&m.b).zip([-1.2, 0.5, 0.5, 0.2]) {
            assert!((a - b).abs() < 1e-8, "{m:?}");
        }
        assert!(v < 1e-20);
        assert!(arx_orthogonality(&data, &m) < 1e-8);
    }

    #[test]
    fn rank_deficiency_detected() {
        let data = dataset(vec![0.0; 200], vec![0.0; 200], 1.0);
        assert!(matches!(fit_arx(&data, 2), Err(Error::RankDeficient)));
    }

    #[test]
    fn too_short_rejected() {
        let data = dataset(vec![1.0; 30], vec![1.0; 30], 1.0);
        assert!(matches!(fit_arx(&data, 2), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_order_selected() {
        let u = prbs(400, 9);
        let y: Vec<f64> = (0..400).map(|k| if k > 0 { 0.3 * u[k - 1] } else { 0.0 }).collect();
        let data = dataset(u, y.iter().enumerate().map(|(k, v)| v + 1e-3 * ((k * 7 % 13) as f64 - 6.0)).collect(), 1.0);
        let (n, _, table) = select_order_aic(&data, PolyKind::Arx, &[2]).unwrap();
        assert_eq!(n, 2);
        assert_eq!(table.len(), 1);
    }

    #[test]
    fn delay_model() {
        let m = PolynomialModel { kind: PolyKind::Arx, a: vec![0.0], b: vec![1.0], c: vec![], n: 1, ts: 0.01 };
        let tf = polynomial_to_tf(&m).unwrap();
        let fr = tf.freq_response(&[1.0, 10.0, 100.0, std::f64::consts::PI / 0.01]).unwrap();
        for mag in fr.magnitude() {
            assert!((mag - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn c_reflection_keeps_unit_disk() {
        let c = reflect_c(&[-2.5, 1.0]).unwrap(); // roots 2 and 0.5
        let mut full = vec![1.0];
        full.extend(c);
        assert!(poly::roots(&full).unwrap().iter().all(|r| r.norm() < 1.0 + 1e-12));
    }
}
