//! One identification method applied to one dataset.

use num_complex::Complex64;
use sysid_core::coprime::{doubly_coprime_factorize, identify_q_with, recover_plant, youla_signals, QFitOptions};
use sysid_core::direct::{fit, polynomial_to_tf, select_order_aic, AicEntry, PolyKind, PolynomialModel};
use sysid_core::lti::{discretize, feedback, Domain, Hold, Lti, Sign, StateSpace, TransferFunction};
use sysid_core::poly;
use sysid_core::simulate::Dataset;
use sysid_core::spem::{identify_spem, ParamKind};
use sysid_core::Error as CoreError;

use crate::config::{CampaignConfig, MethodSpec};
use crate::error::CliError;

/// Band over which Bode magnitude errors are summarized (rad/s).
pub const BODE_BAND: (f64, f64) = (1.0, 300.0);

/// Identified model in whichever form the method produces.
#[derive(Debug, Clone)]
pub enum Model {
    Continuous(TransferFunction),
    Sampled(TransferFunction),
}

impl Model {
    pub fn transfer_function(&self) -> &TransferFunction {
        match self {
            Model::Continuous(tf) | Model::Sampled(tf) => tf,
        }
    }

    pub fn response(&self, omega: &[f64]) -> Result<Vec<Complex64>, CoreError> {
        Ok(self.transfer_function().freq_response(omega)?.value)
    }

    /// Largest [`Domain::instability`] of the loop closed by the continuous
    /// controller `k`, which is ZOH-sampled to meet a sampled model. Taken
    /// from the roots of `D_P·D_K + N_P·N_K`; a state-space interconnection
    /// is ill-conditioned when the model carries very fast poles.
    pub fn closed_loop_margin(&self, k: &TransferFunction) -> Result<f64, CoreError> {
        let p = self.transfer_function();
        let domain = p.domain();
        let k = match domain {
            Domain::Continuous => k.clone(),
            Domain::Discrete { ts } => discretize(&k.to_ss()?, ts, Hold::Zoh)?.to_tf()?,
            Domain::Delta { ts } => discretize(&k.to_ss()?, ts, Hold::Zoh)?.to_delta()?.to_tf()?,
        };
        let characteristic = poly::add(&poly::mul(p.den(), k.den()), &poly::mul(p.num(), k.num()));
        Ok(poly::roots(&characteristic)?.into_iter().map(|z| domain.instability(z)).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Closed-loop margins within this distance of the stability boundary are
/// below the accuracy of polynomial root finding and reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-6;

pub fn describe_margin(margin: f64) -> &'static str {
    if margin < -MARGINAL_BAND {
        "stable"
    } else if margin <= MARGINAL_BAND {
        "marginal"
    } else {
        "unstable"
    }
}

/// Everything a campaign row or an `identify` report needs.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub cost: f64,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub order: Option<usize>,
    pub aic: Vec<AicEntry>,
    pub trace: Vec<f64>,
    pub model: Model,
}

/// Short failure tag stored in output rows.
pub fn failure_tag(e: &CoreError) -> &'static str {
    match e {
        CoreError::UnstableLoop(_) => "unstable_loop",
        CoreError::NoStableCandidate => "no_stable_candidate",
        CoreError::RankDeficient => "rank_deficient",
        CoreError::Divergent => "divergent",
        CoreError::DegenerateInput(_) => "degenerate_input",
        _ => "error",
    }
}

fn poly_names(model: &PolynomialModel) -> (Vec<String>, Vec<f64>) {
    let mut names = Vec::new();
    for (prefix, coeffs) in [("a", &model.a), ("b", &model.b), ("c", &model.c)] {
        names.extend((1..=coeffs.len()).map(|i| format!("{prefix}{i}")));
    }
    (names, model.coefficients())
}

fn direct(data: &Dataset, kind: PolyKind, orders: &[usize]) -> Result<Estimate, CoreError> {
    let (model, loss, aic) = if orders.len() == 1 {
        let (m, v) = fit(data, kind, orders[0])?;
        (m, v, Vec::new())
    } else {
        let (_, m, table) = select_order_aic(data, kind, orders)?;
        let loss = table.iter().find(|e| e.n == m.n).map_or(f64::NAN, |e| e.loss);
        (m, loss, table)
    };
    let (param_names, params) = poly_names(&model);
    Ok(Estimate {
        cost: loss,
        param_names,
        params,
        order: Some(model.n),
        aic,
        trace: Vec::new(),
        model: Model::Sampled(polynomial_to_tf(&model)?),
    })
}

/// Runs `method` on `data`; `seed` drives any stochastic optimizer.
pub fn run_method(cfg: &CampaignConfig, method: &MethodSpec, data: &Dataset, seed: u64) -> Result<Estimate, CliError> {
    match method {
        MethodSpec::Spem { param, controller, .. } => {
            let param = cfg.parameterization(*param);
            let k_hat = cfg.controller(controller)?;
            let opt = cfg.optimizer(&param, seed);
            let res = identify_spem(&param, &k_hat, data, &opt)?;
            let mut names: Vec<String> = param.names().iter().map(|s| s.to_string()).collect();
            let mut values = res.theta_hat.clone();
            if param.kind == ParamKind::GrayBox2 {
                // implied black-box coordinates, for comparison with blackbox4
                names.extend((1..=4).map(|i| format!("theta{i}")));
                values.extend(param.expand(&res.theta_hat)?);
            }
            Ok(Estimate {
                cost: res.cost,
                param_names: names,
                params: values,
                order: None,
                aic: Vec::new(),
                trace: res.trace,
                model: Model::Continuous(param.plant(&res.theta_hat)?),
            })
        }
        MethodSpec::DualYoula { order, .. } => {
            let k = cfg.controller(&cfg.loop_controller)?;
            let factors = doubly_coprime_factorize(&k)?;
            let signals = youla_signals(data, &factors)?;
            let fit = identify_q_with(&signals, *order, &QFitOptions { seed, ..QFitOptions::default() })?;
            let p_hat = recover_plant(&fit.q, &factors)?;
            let q = &fit.q;
            let mut names: Vec<String> = (0..q.den().len()).map(|i| format!("q_den{i}")).collect();
            names.extend((0..q.num().len()).map(|i| format!("q_num{i}")));
            let params = q.den().iter().chain(q.num()).copied().collect();
            Ok(Estimate {
                cost: fit.result.cost,
                param_names: names,
                params,
                order: Some(*order),
                aic: Vec::new(),
                trace: fit.result.trace,
                model: Model::Sampled(p_hat),
            })
        }
        MethodSpec::Arx { orders, .. } => Ok(direct(data, PolyKind::Arx, orders)?),
        MethodSpec::Armax { orders, .. } => Ok(direct(data, PolyKind::Armax, orders)?),
    }
}

/// Median over the grid points inside [`BODE_BAND`] of
/// `|log10|Ĝ| − log10|G||`.
pub fn bode_error(omega: &[f64], estimate: &[Complex64], truth: &[Complex64]) -> f64 {
    let mut errs: Vec<f64> = omega
        .iter()
        .zip(estimate.iter().zip(truth))
        .filter(|(w, _)| **w >= BODE_BAND.0 && **w <= BODE_BAND.1)
        .map(|(_, (e, t))| (e.norm().log10() - t.norm().log10()).abs())
        .collect();
    if errs.is_empty() {
        return f64::NAN;
    }
    if errs.iter().any(|e| e.is_nan()) {
        return f64::INFINITY;
    }
    errs.sort_by(f64::total_cmp);
    median_sorted(&errs)
}

pub fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Continuous closed-loop pole summary for the experiment loop.
pub fn loop_poles(plant: &TransferFunction, controller: &TransferFunction) -> Result<Vec<Complex64>, CoreError> {
    let cl: StateSpace = feedback(&plant.to_ss()?, &controller.to_ss()?, Sign::Negative)?;
    cl.poles()
}
