//! Stabilized prediction-error method.
//!
//! The model output is produced by the simulated loop `(P̂, K̂)` driven by the
//! measured signals: `ŷ = P̂·e`, `e = u + K̂·(y − ŷ)`, which equals
//! `P̂(1 + K̂P̂)⁻¹(u + K̂y)`. Because the simulated loop is stable for every
//! admissible `P̂`, unstable plants can be fitted without divergent
//! predictions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::lti::{discretize, DiscreteSimulator, Domain, Hold, Lti, StateSpace, TransferFunction};
use crate::maglev::{self, GrayBoxConstants};
use crate::optimize::{pso_minimize, EstimationResult, Method, OptimizerConfig};
use crate::simulate::Dataset;

/// Cost scale for parameters whose simulated loop is unstable.
pub const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    /// `θ = [θ1, θ2, θ3, θ4]`, `P = θ1/(p³ + θ2p² + θ3p + θ4)`.
    BlackBox4,
    /// `θ = [K_i, K_x]`, `P = −K_i/((Mp² − K_x)(Lp + R))`.
    GrayBox2,
}

impl ParamKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ParamKind::BlackBox4 => "blackbox4",
            ParamKind::GrayBox2 => "graybox2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParameterization {
    pub kind: ParamKind,
    pub constants: GrayBoxConstants,
}

impl PlantParameterization {
    pub fn blackbox4() -> Self {
        Self { kind: ParamKind::BlackBox4, constants: GrayBoxConstants::default() }
    }

    pub fn graybox2(constants: GrayBoxConstants) -> Self {
        Self { kind: ParamKind::GrayBox2, constants }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ParamKind::BlackBox4 => 4,
            ParamKind::GrayBox2 => 2,
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self.kind {
            ParamKind::BlackBox4 => &["theta1", "theta2", "theta3", "theta4"],
            ParamKind::GrayBox2 => &["K_i", "K_x"],
        }
    }

    /// Black-box coefficients implied by `theta`.
    pub fn expand(&self, theta: &[f64]) -> Result<[f64; 4]> {
        if theta.len() != self.dim() {
            return Err(Error::Dimension(format!("{} expects {} parameters, got {}", self.kind.tag(), self.dim(), theta.len())));
        }
        Ok(match self.kind {
            ParamKind::BlackBox4 => [theta[0], theta[1], theta[2], theta[3]],
            ParamKind::GrayBox2 => {
                let GrayBoxConstants { r, l, m } = self.constants;
                let (ki, kx) = (theta[0], theta[1]);
                [-ki / (m * l), r / l, -kx / m, -kx * r / (m * l)]
            }
        })
    }

    pub fn plant(&self, theta: &[f64]) -> Result<TransferFunction> {
        Ok(maglev::plant(&self.expand(theta)?))
    }

    /// Default search box: ±10× the benchmark magnitude per black-box
    /// coefficient; `K_i ∈ [0.1, 100]`, `K_x ∈ [1, 10⁴]`.
    pub fn default_bounds(&self) -> Vec<(f64, f64)> {
        match self.kind {
            ParamKind::BlackBox4 => maglev::THETA_TRUE.iter().map(|t| (-10.0 * t.abs(), 10.0 * t.abs())).collect(),
            ParamKind::GrayBox2 => vec![(0.1, 100.0), (1.0, 1e4)],
        }
    }
}

/// Continuous realization with inputs `[u, y]` and output `ŷ`, states
/// `[plant; controller]`.
pub fn predictor_system(p_hat: &StateSpace, k_hat: &StateSpace) -> Result<StateSpace> {
    p_hat.require_siso()?;
    k_hat.require_siso()?;
    let (np, nk) = (p_hat.order(), k_hat.order());
    let n = np + nk;
    let (dp, dk) = (p_hat.feedthrough(), k_hat.feedthrough());
    let delta = 1.0 + dk * dp;
    if delta.abs() < 1e-14 {
        return Err(Error::AlgebraicLoop);
    }
    let (ap, bp, cp) = (p_hat.a(), p_hat.b(), p_hat.c());
    let (ak, bk, ck) = (k_hat.a(), k_hat.b(), k_hat.c());
    // e = ex·x + eu·[u, y]
    let mut ex = vec![0.0; n];
    for j in 0..np {
        ex[j] = -dk * cp[(0, j)] / delta;
    }
    for j in 0..nk {
        ex[np + j] = ck[(0, j)] / delta;
    }
    let eu = [1.0 / delta, dk / delta];
    // column driven by e
    let mut g = vec![0.0; n];
    for i in 0..np {
        g[i] = bp[(i, 0)];
    }
    for i in 0..nk {
        g[np + i] = -bk[(i, 0)] * dp;
    }

    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 2);
    a.view_mut((0, 0), (np, np)).copy_from(ap);
    a.view_mut((np, np), (nk, nk)).copy_from(ak);
    for i in 0..nk {
        for j in 0..np {
            a[(np + i, j)] = -bk[(i, 0)] * cp[(0, j)];
        }
        b[(np + i, 1)] = bk[(i, 0)];
    }
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += g[i] * ex[j];
        }
        b[(i, 0)] += g[i] * eu[0];
        b[(i, 1)] += g[i] * eu[1];
    }
    let mut c = DMatrix::zeros(1, n);
    for j in 0..np {
        c[(0, j)] = cp[(0, j)];
    }
    for j in 0..n {
        c[(0, j)] += dp * ex[j];
    }
    let d = DMatrix::from_row_slice(1, 2, &[dp * eu[0], dp * eu[1]]);
    StateSpace::new(a, b, c, d, Domain::Continuous)
}

/// Simulated loop `(P̂, K̂)` sampled with a first-order hold. Only
/// constructible when the loop is stable.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub p_hat: TransferFunction,
    pub k_hat: TransferFunction,
    pub ts: f64,
    sim: DiscreteSimulator,
}

impl Predictor {
    pub fn new(p_hat: TransferFunction, k_hat: TransferFunction, ts: f64) -> Result<Self> {
        let sys = predictor_system(&p_hat.to_ss()?, &k_hat.to_ss()?)?;
        let margin = max_real_eigenvalue(&sys)?;
        if margin >= 0.0 {
            return Err(Error::UnstableLoop(margin));
        }
        let sim = DiscreteSimulator::new(&discretize(&sys, ts, Hold::Foh)?)?;
        Ok(Self { p_hat, k_hat, ts, sim })
    }

    /// `ŷ` from zero initial state, driven by the sampled `u` and `y`.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let mut out = self.sim.run(&[&data.u, &data.y])?;
        Ok(out.swap_remove(0))
    }

    /// `‖y − ŷ‖₂`.
    pub fn error_norm(&self, data: &Dataset) -> Result<f64> {
        Ok(self.sim.sse_against(&[&data.u, &data.y], &data.y)?.sqrt())
    }
}

pub fn predict(pred: &Predictor, data: &Dataset) -> Result<Vec<f64>> {
    pred.predict(data)
}

fn max_real_eigenvalue(sys: &StateSpace) -> Result<f64> {
    if sys.order() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(eigenvalues(sys.a())?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Objective bound to one virtual controller and dataset, with the
/// controller realization cached across evaluations.
#[derive(Debug, Clone)]
pub struct SpemObjective<'a> {
    param: PlantParameterization,
    k_ss: StateSpace,
    data: &'a Dataset,
}

impl<'a> SpemObjective<'a> {
    pub fn new(param: PlantParameterization, k_hat: &TransferFunction, data: &'a Dataset) -> Result<Self> {
        if k_hat.domain() != Domain::Continuous {
            return Err(Error::DomainMismatch);
        }
        Ok(Self { param, k_ss: k_hat.to_ss()?, data })
    }

    /// `‖y − ŷ(θ)‖₂` for a stable simulated loop, otherwise
    /// `PENALTY·(1 + max Re λ)` over the closed-loop poles `λ`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.try_eval(theta).unwrap_or(f64::MAX)
    }

    fn try_eval(&self, theta: &[f64]) -> Result<f64> {
        let p_ss = self.param.plant(theta)?.to_ss()?;
        let sys = predictor_system(&p_ss, &self.k_ss)?;
        let margin = max_real_eigenvalue(&sys)?;
        if !(margin < 0.0) {
            return Ok(PENALTY * (1.0 + margin));
        }
        let sim = DiscreteSimulator::new(&discretize(&sys, self.data.ts, Hold::Foh)?)?;
        let j = sim.sse_against(&[&self.data.u, &self.data.y], &self.data.y)?.sqrt();
        Ok(if j.is_finite() { j } else { f64::MAX })
    }
}

/// Prediction-error cost of `theta`; see [`SpemObjective::eval`].
pub fn objective(theta: &[f64], param: &PlantParameterization, k_hat: &TransferFunction, data: &Dataset) -> f64 {
    match SpemObjective::new(*param, k_hat, data) {
        Ok(obj) => obj.eval(theta),
        Err(_) => f64::MAX,
    }
}

/// Swarm search on the objective followed by the configured polish.
pub fn identify_spem(param: &PlantParameterization, k_hat: &TransferFunction, data: &Dataset, opt: &OptimizerConfig) -> Result<EstimationResult> {
    if data.u.iter().chain(&data.y).all(|&v| v == 0.0) {
        return Err(Error::DegenerateInput("dataset is identically zero".into()));
    }
    if opt.dim() != param.dim() {
        return Err(Error::Dimension(format!("search box has {} coordinates, {} needs {}", opt.dim(), param.kind.tag(), param.dim())));
    }
    let obj = SpemObjective::new(*param, k_hat, data)?;
    let mut result = pso_minimize(|th: &[f64]| obj.eval(th), opt)?;
    if result.cost >= PENALTY {
        return Err(Error::NoStableCandidate);
    }
    result.method = Method::Spem;
    Ok(result)
}
