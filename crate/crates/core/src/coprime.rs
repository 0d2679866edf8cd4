//! Doubly-coprime factorization of a controller and the dual-Youla
//! identification route built on it.
//!
//! For a realization `(A, B, C, D)` of `K`, a feedback gain `F` and an
//! observer gain `L` give
//!
//! ```text
//! D̃ = (A+BF, B, F, 1)        Ñ = (A+BF, B, C+DF, D)        K = Ñ D̃⁻¹
//! D  = (A+LC, L, C, 1)        N = (A+LC, B+LD, C, D)        K = D⁻¹ N
//! D₀ = (A+LC, −(B+LD), F, 1)  N₀ = (A+LC, L, F, 0)          D₀D̃ + N₀Ñ = 1
//! ```
//!
//! Every plant stabilized by `K` under negative feedback is
//! `P = (D₀ − QN)⁻¹(N₀ + QD)` for a stable `Q`.
//!
//! The four left factors share the denominator `det(pI − A − LC)`, so all
//! Youla algebra reduces to polynomial arithmetic on their numerators.
//! Sampled-data algebra uses the delta operator, where closely spaced poles
//! near `q = 1` stay well conditioned.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{balance, eigenvalues};
use crate::lti::{discretize, logspace, DiscreteSimulator, Domain, Hold, Lti, StateSpace, TransferFunction, STABILITY_TOL};
use crate::optimize::{pso_minimize, EstimationResult, Method, OptimizerConfig};
use crate::poly;
use crate::simulate::Dataset;
use crate::spem::PENALTY;

/// Default minimum decay rate (rad/s) of the factor poles.
pub const MIN_DECAY: f64 = 50.0;

/// Relative root distance below which a pole and a zero cancel.
pub const CANCEL_TOL: f64 = 1e-6;

/// 50 log-spaced points over `[1e-2, 1e5]` rad/s.
pub fn standard_grid() -> Vec<f64> {
    logspace(1e-2, 1e5, 50)
}

#[derive(Debug, Clone)]
pub struct CoprimeFactors {
    pub n_k: StateSpace,
    pub d_k: StateSpace,
    pub nt_k: StateSpace,
    pub dt_k: StateSpace,
    pub n_0: StateSpace,
    pub d_0: StateSpace,
    pub controller: TransferFunction,
    /// Balanced realization the factors were built from.
    pub realization: StateSpace,
    pub f: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

/// Target spectrum: unstable eigenvalues mirrored into the left half plane,
/// then every real part capped at `−min_decay`.
pub fn placement_targets(eigs: &[Complex64], min_decay: f64) -> Vec<Complex64> {
    eigs.iter().map(|p| Complex64::new((-p.re.abs()).min(-min_decay), p.im)).collect()
}

/// Row gain `k` with `eig(A − b·k) = poles`, computed on the
/// frequency-scaled pair `(A/ω₀, b)`.
fn ackermann(a: &DMatrix<f64>, b: &DMatrix<f64>, poles: &[Complex64]) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(1, 0));
    }
    let w0 = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let a_s = a / w0;
    let scaled: Vec<Complex64> = poles.iter().map(|p| p / w0).collect();
    let phi = poly::from_roots(&scaled);
    let mut co = DMatrix::zeros(n, n);
    let mut v = b.column(0).into_owned();
    for j in 0..n {
        co.set_column(j, &v);
        v = &a_s * v;
    }
    let sv = co.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-13 * smax) {
        return Err(Error::NotStabilizable);
    }
    let mut phi_a = DMatrix::identity(n, n) * phi[0];
    for &c in &phi[1..] {
        phi_a = &phi_a * &a_s + DMatrix::identity(n, n) * c;
    }
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let z = co.transpose().lu().solve(&en).ok_or(Error::NotStabilizable)?;
    let k = z.transpose() * phi_a * w0;
    Ok(DMatrix::from_row_slice(1, n, k.as_slice()))
}

pub fn doubly_coprime_factorize(k: &TransferFunction) -> Result<CoprimeFactors> {
    doubly_coprime_factorize_with(k, MIN_DECAY)
}

/// Factorization with both gains placing poles by [`placement_targets`].
pub fn doubly_coprime_factorize_with(k: &TransferFunction, min_decay: f64) -> Result<CoprimeFactors> {
    if k.domain() != Domain::Continuous {
        return Err(Error::DomainMismatch);
    }
    if !(min_decay > 0.0) {
        return Err(Error::InvalidArgument("min_decay must be positive".into()));
    }
    let raw = k.to_ss()?;
    let n = raw.order();
    let (a, bv, c) = if n > 0 {
        let (ab, dsc) = balance(raw.a());
        let mut bb = raw.b().clone();
        let mut cc = raw.c().clone();
        for i in 0..n {
            bb[(i, 0)] /= dsc[i];
            cc[(0, i)] *= dsc[i];
        }
        (ab, bb, cc)
    } else {
        (raw.a().clone(), raw.b().clone(), raw.c().clone())
    };
    let d = raw.feedthrough();
    let realization = StateSpace::new(a.clone(), bv.clone(), c.clone(), raw.d().clone(), Domain::Continuous)?;

    let (f, l) = if n > 0 {
        let targets = placement_targets(&eigenvalues(&a)?, min_decay);
        let f = -ackermann(&a, &bv, &targets)?;
        let l = -ackermann(&a.transpose(), &c.transpose(), &targets)?.transpose();
        (f, l)
    } else {
        (DMatrix::zeros(1, 0), DMatrix::zeros(0, 1))
    };
    let af = &a + &bv * &f;
    let al = &a + &l * &c;
    for m in [&af, &al] {
        if m.nrows() > 0 && eigenvalues(m)?.iter().any(|p| p.re >= 0.0) {
            return Err(Error::NotStabilizable);
        }
    }
    let bl = &bv + &l * d;
    let one = DMatrix::from_element(1, 1, 1.0);
    let zero = DMatrix::from_element(1, 1, 0.0);
    let dd = DMatrix::from_element(1, 1, d);
    let ss = |a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>| StateSpace::new(a.clone(), b.clone(), c.clone(), d.clone(), Domain::Continuous);
    Ok(CoprimeFactors {
        dt_k: ss(&af, &bv, &f, &one)?,
        nt_k: ss(&af, &bv, &(&c + &f * d), &dd)?,
        d_k: ss(&al, &l, &c, &one)?,
        n_k: ss(&al, &bl, &c, &dd)?,
        d_0: ss(&al, &(-&bl), &f, &one)?,
        n_0: ss(&al, &l, &f, &zero)?,
        controller: k.clone(),
        realization,
        f,
        l,
    })
}

/// Numerators of the left factors over their shared denominator, in the
/// continuous or delta domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftPolynomials {
    pub den: Vec<f64>,
    pub d_k: Vec<f64>,
    pub n_k: Vec<f64>,
    pub d_0: Vec<f64>,
    pub n_0: Vec<f64>,
    pub domain: Domain,
}

fn siso(g: &StateSpace, out: usize, inp: usize) -> Result<StateSpace> {
    StateSpace::new(
        g.a().clone(),
        g.b().columns(inp, 1).into_owned(),
        g.c().rows(out, 1).into_owned(),
        DMatrix::from_element(1, 1, g.d()[(out, inp)]),
        g.domain(),
    )
}

/// Algebra domain for a system: continuous stays, sampled maps to delta.
fn algebra_domain(domain: Domain) -> Domain {
    match domain {
        Domain::Continuous => Domain::Continuous,
        Domain::Discrete { ts } | Domain::Delta { ts } => Domain::Delta { ts },
    }
}

/// Re-express a transfer function in the delta domain when sampled.
fn to_algebra_domain(tf: &TransferFunction) -> Result<TransferFunction> {
    match tf.domain() {
        Domain::Discrete { .. } => tf.to_ss()?.to_delta()?.to_tf(),
        _ => Ok(tf.clone()),
    }
}

impl CoprimeFactors {
    pub fn order(&self) -> usize {
        self.realization.order()
    }

    /// `[D N; N₀ (1 − D₀)]` as one system with inputs `[u, y]`.
    fn left_bundle(&self) -> Result<StateSpace> {
        let n = self.order();
        let mut b = DMatrix::zeros(n, 2);
        b.columns_mut(0, 1).copy_from(self.d_k.b());
        b.columns_mut(1, 1).copy_from(self.n_k.b());
        let mut c = DMatrix::zeros(2, n);
        c.rows_mut(0, 1).copy_from(self.d_k.c());
        c.rows_mut(1, 1).copy_from(&self.f);
        let d = DMatrix::from_row_slice(2, 2, &[1.0, self.n_k.feedthrough(), 0.0, 0.0]);
        StateSpace::new(self.d_k.a().clone(), b, c, d, Domain::Continuous)
    }

    /// Left factors in `domain`; sampled domains use FOH equivalents
    /// expressed with the delta operator.
    pub fn left_polynomials(&self, domain: Domain) -> Result<LeftPolynomials> {
        let g = self.left_bundle()?;
        let domain = algebra_domain(domain);
        let g = match domain {
            Domain::Continuous => g,
            Domain::Delta { ts } | Domain::Discrete { ts } => discretize(&g, ts, Hold::Foh)?.to_delta()?,
        };
        let d_k = siso(&g, 0, 0)?.to_tf()?;
        let n_k = siso(&g, 0, 1)?.to_tf()?;
        let n_0 = siso(&g, 1, 0)?.to_tf()?;
        let g22 = siso(&g, 1, 1)?.to_tf()?;
        let den = d_k.den().to_vec();
        for t in [&n_k, &n_0, &g22] {
            if t.den() != den.as_slice() {
                return Err(Error::InvalidSystem("left factors lost their shared denominator".into()));
            }
        }
        Ok(LeftPolynomials {
            d_0: poly::trim(&poly::sub(&den, g22.num())),
            d_k: d_k.num().to_vec(),
            n_k: n_k.num().to_vec(),
            n_0: n_0.num().to_vec(),
            den,
            domain,
        })
    }

    /// `max |D₀D̃ + N₀Ñ − 1|` over `omega`.
    pub fn bezout_residual(&self, omega: &[f64]) -> f64 {
        omega
            .iter()
            .map(|&w| {
                let s = Complex64::new(0.0, w);
                (self.d_0.eval(s) * self.dt_k.eval(s) + self.n_0.eval(s) * self.nt_k.eval(s) - 1.0).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |D⁻¹N − K|` and `max |ÑD̃⁻¹ − K|` over `omega`, each relative to
    /// `max(1, |K|)`.
    pub fn factorization_errors(&self, omega: &[f64]) -> (f64, f64) {
        let mut out = (0.0f64, 0.0f64);
        for &w in omega {
            let s = Complex64::new(0.0, w);
            let k = self.controller.eval(s);
            let scale = k.norm().max(1.0);
            out.0 = out.0.max((self.n_k.eval(s) / self.d_k.eval(s) - k).norm() / scale);
            out.1 = out.1.max((self.nt_k.eval(s) / self.dt_k.eval(s) - k).norm() / scale);
        }
        out
    }

    /// Largest real part over the poles of all six factors.
    pub fn max_factor_pole(&self) -> Result<f64> {
        let mut m = f64::NEG_INFINITY;
        for s in [&self.n_k, &self.d_k, &self.nt_k, &self.dt_k, &self.n_0, &self.d_0] {
            m = m.max(s.max_instability()?);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoulaSignals {
    pub alpha: Vec<f64>,
    pub beta_m: Vec<f64>,
    pub ts: f64,
}

/// `α = D·u + N·y`, `β_m = D₀·y − N₀·u`, each filtered by FOH equivalents
/// of the factors from zero initial state.
pub fn youla_signals(data: &Dataset, factors: &CoprimeFactors) -> Result<YoulaSignals> {
    let g = factors.left_bundle()?;
    // on the shared states β_m = y − F·x
    let mut c = g.c().clone();
    for j in 0..factors.order() {
        c[(1, j)] = -c[(1, j)];
    }
    let d = DMatrix::from_row_slice(2, 2, &[1.0, factors.n_k.feedthrough(), 0.0, 1.0]);
    let bundle = StateSpace::new(g.a().clone(), g.b().clone(), c, d, Domain::Continuous)?;
    let sim = DiscreteSimulator::new(&discretize(&bundle, data.ts, Hold::Foh)?)?;
    let mut out = sim.run(&[&data.u, &data.y])?;
    let beta_m = out.pop().expect("beta output");
    let alpha = out.pop().expect("alpha output");
    Ok(YoulaSignals { alpha, beta_m, ts: data.ts })
}

/// `Q = (D₀P − N₀)(D + NP)⁻¹`, stable exactly when `K` stabilizes `P`.
pub fn youla_parameter(plant: &TransferFunction, factors: &CoprimeFactors) -> Result<TransferFunction> {
    let plant = to_algebra_domain(plant)?;
    let lp = factors.left_polynomials(plant.domain())?;
    let (n, d) = (plant.num(), plant.den());
    let num = poly::sub(&poly::mul(&lp.d_0, n), &poly::mul(&lp.n_0, d));
    let den = poly::add(&poly::mul(&lp.d_k, d), &poly::mul(&lp.n_k, n));
    TransferFunction::new(num, den, lp.domain)
}

/// `P̂ = (D₀ − Q̂N)⁻¹(N₀ + Q̂D)` without cancellation; order
/// `order(Q̂) + order(K)`.
pub fn recover_plant_full(q_hat: &TransferFunction, factors: &CoprimeFactors) -> Result<TransferFunction> {
    let q = to_algebra_domain(q_hat)?;
    let lp = factors.left_polynomials(q.domain())?;
    let (qn, qd) = (q.num(), q.den());
    let (n1, n2) = (poly::mul(&lp.n_0, qd), poly::mul(qn, &lp.d_k));
    let (d1, d2) = (poly::mul(&lp.d_0, qd), poly::mul(qn, &lp.n_k));
    let len = n1.len().max(n2.len()).max(d1.len()).max(d2.len());
    let (n1, n2, d1, d2) = (poly::pad(&n1, len), poly::pad(&n2, len), poly::pad(&d1, len), poly::pad(&d2, len));
    let mut num = poly::add(&n1, &n2);
    let mut den = poly::sub(&d1, &d2);
    // drop leading terms that cancel to rounding in both polynomials
    let negligible = |c: f64, a: f64, b: f64| c.abs() <= 1e-12 * (a.abs() + b.abs());
    let mut i = 0;
    while i + 1 < len && negligible(den[i], d1[i], d2[i]) {
        if !negligible(num[i], n1[i], n2[i]) {
            return Err(Error::InvalidSystem("D0 - Q*N has a singular feedthrough".into()));
        }
        i += 1;
    }
    num.drain(..i);
    den.drain(..i);
    if poly::is_zero(&den) {
        return Err(Error::InvalidSystem("D0 - Q*N is identically zero".into()));
    }
    TransferFunction::new(num, den, lp.domain)
}

/// [`recover_plant_full`] followed by pole-zero cancellation at [`CANCEL_TOL`].
pub fn recover_plant(q_hat: &TransferFunction, factors: &CoprimeFactors) -> Result<TransferFunction> {
    cancel_pole_zero(&recover_plant_full(q_hat, factors)?, CANCEL_TOL)
}

/// Remove zero/pole pairs closer than `tol` relative to their magnitude.
pub fn cancel_pole_zero(tf: &TransferFunction, tol: f64) -> Result<TransferFunction> {
    let num = poly::trim(tf.num());
    if poly::is_zero(&num) {
        return TransferFunction::new(vec![0.0], vec![1.0], tf.domain());
    }
    let den = poly::trim(tf.den());
    let zeros = poly::roots(&num)?;
    let mut poles = poly::roots(&den)?;
    let mut kept_zeros = Vec::new();
    for z in zeros {
        let best = poles
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (z - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, dist)) if dist <= tol * z.norm().max(poles[i].norm()) => {
                poles.swap_remove(i);
            }
            _ => kept_zeros.push(z),
        }
    }
    let gain = num[0] / den[0];
    TransferFunction::new(poly::scale(&poly::from_roots(&kept_zeros), gain), poly::from_roots(&poles), tf.domain())
}

/// Settings for the open-loop fit of `Q̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct QFitOptions {
    /// Frequency (rad/s) scaling the delta-operator coefficients and placing
    /// the initial prefilter poles.
    pub bandwidth: f64,
    /// Steiglitz–McBride refinements used for the initial estimate.
    pub refinements: usize,
    /// Swarm settings; bounds and hint are replaced by a box around the
    /// initial estimate.
    pub optimizer: Option<OptimizerConfig>,
    pub seed: u64,
}

impl Default for QFitOptions {
    fn default() -> Self {
        Self { bandwidth: 200.0, refinements: 30, optimizer: None, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct QFit {
    /// Stable delta-domain model from `α` to `β_m`.
    pub q: TransferFunction,
    pub result: EstimationResult,
}

pub fn identify_q(signals: &YoulaSignals, order: usize) -> Result<TransferFunction> {
    Ok(identify_q_with(signals, order, &QFitOptions::default())?.q)
}

/// Output-error model `Q̂(δ) = B(δ)/A(δ)` of degree `order` minimizing
/// `Σ(β_m − Q̂α)²` subject to stability.
///
/// Parameters are the coefficients of `A` and `B` in `δ/ω₀`. The initial
/// estimate comes from prefiltered least squares iterations; the swarm starts
/// around it and a simplex polish finishes.
pub fn identify_q_with(signals: &YoulaSignals, order: usize, opts: &QFitOptions) -> Result<QFit> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let (alpha, beta) = (&signals.alpha, &signals.beta_m);
    if alpha.len() != beta.len() || alpha.len() < 2 * (2 * order + 1) {
        return Err(Error::Dimension("signals too short or of unequal length".into()));
    }
    let mean = alpha.iter().sum::<f64>() / alpha.len() as f64;
    let spread = alpha.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-300) || !(spread > 1e-12 * mean.abs()) {
        return Err(Error::DegenerateInput("alpha is constant".into()));
    }
    if !(opts.bandwidth > 0.0) {
        return Err(Error::InvalidArgument("bandwidth must be positive".into()));
    }
    let model = DeltaModel { n: order, w0: opts.bandwidth, ts: signals.ts };
    let hint = model.prefiltered_fit(alpha, beta, opts.refinements)?;

    let bounds: Vec<(f64, f64)> = hint.iter().map(|&h| (h - (h.abs() + 1.0), h + (h.abs() + 1.0))).collect();
    let mut cfg = match &opts.optimizer {
        Some(c) => OptimizerConfig { bounds: bounds.clone(), ..c.clone() },
        None => OptimizerConfig { seed: opts.seed, ..OptimizerConfig::with_bounds(bounds) },
    };
    cfg.hint = Some(hint);
    let cost = |theta: &[f64]| model.cost(theta, alpha, beta);
    let mut result = pso_minimize(cost, &cfg)?;
    if result.cost >= PENALTY {
        return Err(Error::NoStableCandidate);
    }
    result.method = Method::DualYoula;
    let q = model.transfer_function(&result.theta_hat)?;
    Ok(QFit { q, result })
}

/// Delta-domain rational model with coefficients in the scaled variable
/// `δ/w0`: `θ = [a1..an, b0..bn]`.
struct DeltaModel {
    n: usize,
    w0: f64,
    ts: f64,
}

impl DeltaModel {
    fn split<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        theta.split_at(self.n)
    }

    fn state_space(&self, theta: &[f64]) -> Result<StateSpace> {
        let n = self.n;
        let (a, b) = self.split(theta);
        let mut am = DMatrix::zeros(n, n);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            am[(0, j)] = -a[j] * self.w0;
            c[(0, j)] = b[j + 1] - b[0] * a[j];
        }
        for i in 1..n {
            am[(i, i - 1)] = self.w0;
        }
        let mut bm = DMatrix::zeros(n, 1);
        bm[(0, 0)] = self.w0;
        StateSpace::new(am, bm, c, DMatrix::from_element(1, 1, b[0]), Domain::Delta { ts: self.ts })
    }

    fn transfer_function(&self, theta: &[f64]) -> Result<TransferFunction> {
        let (a, b) = self.split(theta);
        let mut den = vec![1.0];
        let mut num = vec![b[0]];
        let mut w = 1.0;
        for j in 0..self.n {
            w *= self.w0;
            den.push(a[j] * w);
            num.push(b[j + 1] * w);
        }
        TransferFunction::new(num, den, Domain::Delta { ts: self.ts })
    }

    fn cost(&self, theta: &[f64], alpha: &[f64], beta: &[f64]) -> f64 {
        let eval = || -> Result<f64> {
            let ss = self.state_space(theta)?;
            let inst = ss.max_instability()?;
            if !(inst < -STABILITY_TOL) {
                return Ok(PENALTY * (1.0 + inst));
            }
            DiscreteSimulator::new(&ss)?.sse_against(&[alpha], beta)
        };
        match eval() {
            Ok(v) if v.is_finite() => v,
            _ => f64::MAX,
        }
    }

    /// Signals `(δ/w0)^k / A(δ/w0) · s` for `k = 0..=n`.
    fn filter(&self, a: &[f64], s: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let h = self.ts * self.w0;
        let mut out = vec![vec![0.0; s.len()]; n + 1];
        let mut xi = vec![0.0; n];
        for (k, &sk) in s.iter().enumerate() {
            let top = sk - a.iter().zip(&xi).map(|(ai, xv)| ai * xv).sum::<f64>();
            out[n][k] = top;
            for p in 0..n {
                out[p][k] = xi[n - 1 - p];
            }
            for i in (1..n).rev() {
                xi[i] += h * xi[i - 1];
            }
            xi[0] += h * top;
        }
        out
    }

    /// Iterated prefiltered least squares (Steiglitz–McBride in `δ`).
    fn prefiltered_fit(&self, alpha: &[f64], beta: &[f64], refinements: usize) -> Result<Vec<f64>> {
        let n = self.n;
        // start from all prefilter poles at −w0
        let mut a: Vec<f64> = poly::from_roots(&vec![Complex64::new(-1.0, 0.0); n])[1..].to_vec();
        let mut theta = Vec::new();
        for _ in 0..refinements.max(1) {
            let fa = self.filter(&a, alpha);
            let fb = self.filter(&a, beta);
            let rows = alpha.len();
            let mut phi = DMatrix::zeros(rows, 2 * n + 1);
            let mut target = DVector::zeros(rows);
            for k in 0..rows {
                target[k] = fb[n][k];
                for j in 1..=n {
                    phi[(k, j - 1)] = -fb[n - j][k];
                }
                for j in 0..=n {
                    phi[(k, n + j)] = fa[n - j][k];
                }
            }
            let sol = phi.svd(true, true).solve(&target, 1e-12).map_err(|_| Error::RankDeficient)?;
            let next: Vec<f64> = sol.iter().copied().collect();
            let change = if theta.is_empty() {
                f64::INFINITY
            } else {
                next.iter().zip(&theta).map(|(x, y): (&f64, &f64)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
            };
            theta = next;
            a = self.stabilized(&theta[..n])?;
            if change < 1e-10 {
                break;
            }
        }
        // output error is linear in B once A is fixed
        let fa = self.filter(&a, alpha);
        let mut phi = DMatrix::zeros(alpha.len(), n + 1);
        for k in 0..alpha.len() {
            for j in 0..=n {
                phi[(k, j)] = fa[n - j][k];
            }
        }
        let target = DVector::from_column_slice(beta);
        let b = phi.svd(true, true).solve(&target, 1e-12).map_err(|_| Error::RankDeficient)?;
        theta[..n].copy_from_slice(&a);
        theta[n..].copy_from_slice(b.as_slice());
        Ok(theta)
    }

    /// Monic scaled denominator with unstable roots reflected inside the
    /// stability region.
    fn stabilized(&self, a: &[f64]) -> Result<Vec<f64>> {
        let mut full = vec![1.0];
        full.extend_from_slice(a);
        let dom = Domain::Delta { ts: self.ts };
        let roots = poly::roots(&full)?;
        if roots.iter().all(|r| dom.instability(r * self.w0) < -STABILITY_TOL) {
            return Ok(a.to_vec());
        }
        let fixed: Vec<Complex64> = roots
            .iter()
            .map(|r| {
                let mut p = Complex64::new(-r.re.abs(), r.im);
                if dom.instability(p * self.w0) >= -STABILITY_TOL {
                    p = Complex64::new(-1e-3, r.im);
                }
                p
            })
            .collect();
        Ok(poly::from_roots(&fixed)[1..].to_vec())
    }
}
