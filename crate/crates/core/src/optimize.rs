//! Derivative-free minimization: global-best particle swarm with an optional
//! Nelder–Mead polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Local refinement applied to the swarm's best point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Polish {
    None,
    NelderMead { max_evals: usize, tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Search box, one `(lo, hi)` per coordinate.
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub polish: Polish,
    /// Optional starting guess; a fifth of the swarm is drawn within ±50% of it.
    pub hint: Option<Vec<f64>>,
    /// Stop once the best cost improved by less than `stall_tol` (relative)
    /// over this many iterations. Zero disables the test.
    pub stall_iterations: usize,
    pub stall_tol: f64,
}

impl OptimizerConfig {
    /// Constriction-factor coefficients, swarm `max(50, 10·dim)`,
    /// `200·dim` iterations, Nelder–Mead polish.
    pub fn with_bounds(bounds: Vec<(f64, f64)>) -> Self {
        let dim = bounds.len();
        Self {
            swarm_size: (10 * dim).max(50),
            max_iterations: 200 * dim,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            bounds,
            seed: 0,
            polish: Polish::NelderMead { max_evals: 400 * dim.max(1), tol: 1e-10 },
            hint: None,
            stall_iterations: 20,
            stall_tol: 1e-6,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(Error::InvalidArgument("empty search box".into()));
        }
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!("bound {i}: need finite lo < hi, got [{lo}, {hi}]")));
            }
        }
        if self.swarm_size < 2 {
            return Err(Error::InvalidArgument("swarm_size must be at least 2".into()));
        }
        if let Some(h) = &self.hint {
            if h.len() != self.dim() {
                return Err(Error::Dimension(format!("hint has {} entries, box has {}", h.len(), self.dim())));
            }
        }
        if let Polish::NelderMead { tol, .. } = self.polish {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument("polish tolerance must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Spem,
    DualYoula,
    Arx,
    Armax,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Spem => "spem",
            Method::DualYoula => "dual_youla",
            Method::Arx => "arx",
            Method::Armax => "armax",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat: Vec<f64>,
    pub cost: f64,
    pub evaluations: usize,
    /// Best cost after initialization, after each iteration, and after polish.
    pub trace: Vec<f64>,
    pub method: Method,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::MAX
    } else {
        v
    }
}

fn reflect(x: &mut f64, v: &mut f64, lo: f64, hi: f64) {
    if *x < lo {
        *x = lo + (lo - *x);
        *v = -*v;
    } else if *x > hi {
        *x = hi - (*x - hi);
        *v = -*v;
    }
    *x = x.clamp(lo, hi);
}

/// Global-best particle swarm. Random draws are taken sequentially per
/// particle from one seeded stream; evaluations within an iteration run in
/// parallel. The result is fully determined by `(f, config)`.
pub fn pso_minimize<F>(f: F, config: &OptimizerConfig) -> Result<EstimationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let dim = config.dim();
    let n = config.swarm_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width: Vec<f64> = config.bounds.iter().map(|(lo, hi)| hi - lo).collect();
    let vmax: Vec<f64> = width.iter().map(|w| 0.2 * w).collect();

    let seeded = match &config.hint {
        Some(_) => ((n as f64) * 0.2).ceil() as usize,
        None => 0,
    };
    let mut pos = vec![vec![0.0; dim]; n];
    let mut vel = vec![vec![0.0; dim]; n];
    for p in 0..n {
        for j in 0..dim {
            let (lo, hi) = config.bounds[j];
            pos[p][j] = match &config.hint {
                Some(h) if p == 0 => h[j].clamp(lo, hi),
                Some(h) if p < seeded => (h[j] + h[j].abs() * rng.random_range(-0.5..=0.5)).clamp(lo, hi),
                _ => rng.random_range(lo..=hi),
            };
            vel[p][j] = rng.random_range(-vmax[j]..=vmax[j]);
        }
    }

    let evaluate = |pts: &[Vec<f64>]| -> Vec<f64> { pts.par_iter().map(|x| sanitize(f(x))).collect() };
    let mut cost = evaluate(&pos);
    let mut evaluations = n;
    let mut pbest = pos.clone();
    let mut pbest_cost = cost.clone();
    let mut g = 0;
    for p in 1..n {
        if pbest_cost[p] < pbest_cost[g] {
            g = p;
        }
    }
    let mut gbest = pbest[g].clone();
    let mut gbest_cost = pbest_cost[g];
    let mut trace = vec![gbest_cost];

    for _ in 0..config.max_iterations {
        for p in 0..n {
            for j in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let mut v = config.inertia * vel[p][j]
                    + config.cognitive * r1 * (pbest[p][j] - pos[p][j])
                    + config.social * r2 * (gbest[j] - pos[p][j]);
                v = v.clamp(-vmax[j], vmax[j]);
                let mut x = pos[p][j] + v;
                let (lo, hi) = config.bounds[j];
                reflect(&mut x, &mut v, lo, hi);
                pos[p][j] = x;
                vel[p][j] = v;
            }
        }
        cost = evaluate(&pos);
        evaluations += n;
        for p in 0..n {
            if cost[p] < pbest_cost[p] {
                pbest_cost[p] = cost[p];
                pbest[p].clone_from(&pos[p]);
                if cost[p] < gbest_cost {
                    gbest_cost = cost[p];
                    gbest.clone_from(&pos[p]);
                }
            }
        }
        trace.push(gbest_cost);
        let s = config.stall_iterations;
        if s > 0 && trace.len() > s {
            let old = trace[trace.len() - 1 - s];
            if old - gbest_cost <= config.stall_tol * old.abs() {
                break;
            }
        }
    }

    if let Polish::NelderMead { max_evals, tol } = config.polish {
        let boxed = |x: &[f64]| if config.contains(x) { sanitize(f(x)) } else { f64::MAX };
        let nm = nelder_mead(boxed, &gbest, max_evals, tol);
        evaluations += nm.evaluations;
        if nm.cost <= gbest_cost {
            gbest = nm.point;
            gbest_cost = nm.cost;
        }
        trace.push(gbest_cost);
    }

    Ok(EstimationResult { theta_hat: gbest, cost: gbest_cost, evaluations, trace, method: Method::Spem })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub cost: f64,
    pub evaluations: usize,
}

/// Simplex search with reflection 1, expansion 2, contraction 0.5 and
/// shrink 0.5. Stops when every vertex lies within `tol·max(1, |x_best|)`
/// of the best vertex per coordinate, or after `max_evals` evaluations.
pub fn nelder_mead<F>(f: F, x0: &[f64], max_evals: usize, tol: f64) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(f(x))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] = if x[i] != 0.0 { x[i] * 1.05 } else { 2.5e-4 };
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let converged = |s: &[(Vec<f64>, f64)]| {
        let best = &s[0].0;
        s[1..].iter().all(|(x, _)| x.iter().zip(best).all(|(a, b)| (a - b).abs() <= tol * b.abs().max(1.0)))
    };

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if dim == 0 || converged(&simplex) {
            break;
        }
        let worst = simplex[dim].1;
        let second = simplex[dim - 1].1;
        let best = simplex[0].1;
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for j in 0..dim {
                centroid[j] += x[j] / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> { (0..dim).map(|j| centroid[j] + t * (simplex[dim].0[j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < best {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for j in 0..dim {
                v.0[j] = x_best[j] + 0.5 * (v.0[j] - x_best[j]);
            }
            v.1 = eval(&v.0, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, cost) = simplex.swap_remove(0);
    NelderMeadResult { point, cost, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> f64 {
        let c = [1.0, -2.0, 3.0];
        x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum()
    }

    #[test]
    fn convex_bowl() {
        let cfg = OptimizerConfig { seed: 3, ..OptimizerConfig::with_bounds(vec![(-10.0, 10.0); 3]) };
        let r = pso_minimize(bowl, &cfg).unwrap();
        let err: f64 = r.theta_hat.iter().zip([1.0, -2.0, 3.0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-6, "{err}");
        assert_eq!(r.cost, *r.trace.last().unwrap());
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = OptimizerConfig { seed: 11, max_iterations: 30, ..OptimizerConfig::with_bounds(vec![(-5.0, 5.0); 2]) };
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 10.0 * (x[1] + x[0] * x[0]).powi(2);
        let a = pso_minimize(f, &cfg).unwrap();
        let b = pso_minimize(f, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluations_stay_in_box() {
        let cfg = OptimizerConfig { seed: 5, max_iterations: 40, polish: Polish::None, ..OptimizerConfig::with_bounds(vec![(0.0, 1.0), (2.0, 3.0)]) };
        let f = |x: &[f64]| {
            assert!((0.0..=1.0).contains(&x[0]) && (2.0..=3.0).contains(&x[1]), "{x:?}");
            -x[0] - x[1]
        };
        let r = pso_minimize(f, &cfg).unwrap();
        assert!((r.theta_hat[0] - 1.0).abs() < 1e-3 && (r.theta_hat[1] - 3.0).abs() < 1e-3);
    }

    #[test]
    fn hint_is_evaluated() {
        let mut cfg = OptimizerConfig::with_bounds(vec![(-100.0, 100.0); 2]);
        cfg.max_iterations = 0;
        cfg.polish = Polish::None;
        cfg.hint = Some(vec![42.0, -17.0]);
        let r = pso_minimize(|x: &[f64]| (x[0] - 42.0).abs() + (x[1] + 17.0).abs(), &cfg).unwrap();
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn rejects_invalid_box() {
        assert!(pso_minimize(bowl, &OptimizerConfig::with_bounds(vec![(1.0, 1.0); 3])).is_err());
        let mut cfg = OptimizerConfig::with_bounds(vec![(0.0, 1.0)]);
        cfg.swarm_size = 1;
        assert!(pso_minimize(|x: &[f64]| x[0], &cfg).is_err());
    }

    #[test]
    fn nelder_mead_quadratic() {
        let r = nelder_mead(bowl, &[4.0, 4.0, -4.0], 10_000, 1e-12);
        for (a, b) in r.point.iter().zip([1.0, -2.0, 3.0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn nelder_mead_constant_keeps_start() {
        let r = nelder_mead(|_: &[f64]| 7.0, &[0.5, -1.5], 1000, 1e-8);
        assert_eq!(r.point, vec![0.5, -1.5]);
        assert_eq!(r.cost, 7.0);
    }
}
