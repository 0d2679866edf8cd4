//! Monte-Carlo campaigns: datasets with seeds `base_seed + i`, every
//! configured method on each, CSV artifacts and quartile summaries.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sysid_core::lti::{FrequencyResponse, Lti};
use sysid_core::simulate::simulate_closed_loop;

use crate::config::{CampaignConfig, MethodSpec};
use crate::error::{exit, CliError};
use crate::methods::{bode_error, failure_tag, run_method, Estimate};
use crate::table::{fmt, Table};

/// Outcome of one method on one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub status: String,
    pub estimate: Option<Estimate>,
    pub response: Vec<Complex64>,
    pub bode_error: f64,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.estimate.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct MethodResults {
    pub method: MethodSpec,
    pub records: Vec<RunRecord>,
}

impl MethodResults {
    pub fn label(&self) -> String {
        self.method.label()
    }

    pub fn successes(&self) -> usize {
        self.records.iter().filter(|r| r.ok()).count()
    }
}

#[derive(Debug, Clone)]
pub struct CampaignSummary {
    pub omega: Vec<f64>,
    pub truth: Vec<Complex64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodResults>,
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let (lo, frac) = (pos.floor() as usize, pos - pos.floor());
            if frac == 0.0 {
                v[lo]
            } else {
                v[lo] + frac * (v[lo + 1] - v[lo])
            }
        };
        Some(Quartiles { count: v.len(), min: v[0], q1: at(0.25), median: at(0.5), q3: at(0.75), max: v[v.len() - 1] })
    }
}

fn run_one(cfg: &CampaignConfig, methods: &[MethodSpec], run: usize, omega: &[f64], truth: &[Complex64]) -> Vec<RunRecord> {
    let seed = cfg.base_seed + run as u64;
    let data = cfg.experiment_spec(seed).map_err(|e| e.message).and_then(|s| simulate_closed_loop(&s).map_err(|e| e.to_string()));
    methods
        .iter()
        .map(|m| {
            let fail = |status: &str| RunRecord {
                run,
                seed,
                status: status.to_string(),
                estimate: None,
                response: vec![Complex64::new(f64::NAN, f64::NAN); omega.len()],
                bode_error: f64::NAN,
            };
            let data = match &data {
                Ok(d) => d,
                Err(_) => return fail("simulation_failed"),
            };
            let est = match run_method(cfg, m, data, seed) {
                Ok(e) => e,
                Err(e) => {
                    let tag = match e.code {
                        exit::NO_STABLE_CANDIDATE => "no_stable_candidate",
                        exit::RANK_DEFICIENT => "rank_deficient",
                        exit::UNSTABLE_LOOP => "unstable_loop",
                        _ => "error",
                    };
                    return fail(tag);
                }
            };
            match est.model.response(omega) {
                Ok(response) => {
                    let err = bode_error(omega, &response, truth);
                    RunRecord { run, seed, status: "ok".into(), estimate: Some(est), response, bode_error: err }
                }
                Err(e) => fail(failure_tag(&e)),
            }
        })
        .collect()
}

/// Runs the campaign in memory; runs execute on the worker pool and are
/// reassembled in run order.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignSummary, CliError> {
    cfg.validate()?;
    let omega = cfg.omega_grid.omega();
    let truth = cfg.plant.transfer_function()?.freq_response(&omega)?.value;
    let per_run: Vec<Vec<RunRecord>> = (0..cfg.runs).into_par_iter().map(|run| run_one(cfg, &cfg.methods, run, &omega, &truth)).collect();
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(j, m)| MethodResults { method: m.clone(), records: per_run.iter().map(|r| r[j].clone()).collect() })
        .collect();
    Ok(CampaignSummary { omega, truth, seeds: (0..cfg.runs as u64).map(|i| cfg.base_seed + i).collect(), methods })
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a CampaignConfig,
    seeds: &'a [u64],
    methods: Vec<MetaMethod>,
}

#[derive(Serialize)]
struct MetaMethod {
    label: String,
    succeeded: usize,
    failed: usize,
}

fn theta_table(res: &MethodResults) -> Table {
    let names: Vec<String> = {
        // widest parameter list across runs (direct methods vary with order)
        let mut best: Vec<String> = Vec::new();
        for r in &res.records {
            if let Some(e) = &r.estimate {
                for n in &e.param_names {
                    if !best.contains(n) {
                        best.push(n.clone());
                    }
                }
            }
        }
        sort_poly_names(best)
    };
    let mut header = vec!["run".to_string(), "seed".into(), "status".into(), "cost".into(), "bode_error".into(), "order".into()];
    header.extend(names.iter().cloned());
    let mut t = Table::new(header);
    for r in &res.records {
        let mut row = vec![r.run.to_string(), r.seed.to_string(), r.status.clone()];
        match &r.estimate {
            Some(e) => {
                row.push(fmt(e.cost));
                row.push(fmt(r.bode_error));
                row.push(e.order.map_or(String::new(), |n| n.to_string()));
                for n in &names {
                    row.push(e.param_names.iter().position(|m| m == n).map_or(String::new(), |i| fmt(e.params[i])));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 3 + names.len())),
        }
        t.push(row);
    }
    t
}

/// `a1, a2, …, b1, …` in coefficient order rather than first appearance.
fn sort_poly_names(mut names: Vec<String>) -> Vec<String> {
    let key = |s: &String| {
        let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (p, n) = s.split_at(split);
        (p.to_string(), n.parse::<usize>().unwrap_or(0))
    };
    if names.iter().all(|n| matches!(n.chars().next(), Some('a' | 'b' | 'c')) && n[1..].parse::<usize>().is_ok()) {
        names.sort_by_key(key);
    }
    names
}

fn bode_table(summary: &CampaignSummary, res: &MethodResults) -> Table {
    let mut t = Table::new(["run", "seed", "status", "omega", "mag", "phase_deg"].map(String::from).to_vec());
    for r in &res.records {
        let phase = if r.ok() {
            FrequencyResponse::new(summary.omega.clone(), r.response.clone()).map(|f| f.phase_deg()).unwrap_or_default()
        } else {
            Vec::new()
        };
        for (i, w) in summary.omega.iter().enumerate() {
            t.push(vec![
                r.run.to_string(),
                r.seed.to_string(),
                r.status.clone(),
                fmt(*w),
                fmt(r.response[i].norm()),
                fmt(phase.get(i).copied().unwrap_or(f64::NAN)),
            ]);
        }
    }
    t
}

fn orders_table(res: &MethodResults) -> Option<Table> {
    let orders: Vec<usize> = match &res.method {
        MethodSpec::Arx { orders, .. } | MethodSpec::Armax { orders, .. } => orders.clone(),
        _ => return None,
    };
    let mut header = vec!["run".to_string(), "seed".into(), "status".into(), "selected_n".into()];
    header.extend(orders.iter().map(|n| format!("aic_{n}")));
    let mut t = Table::new(header);
    for r in &res.records {
        let mut row = vec![r.run.to_string(), r.seed.to_string(), r.status.clone()];
        match &r.estimate {
            Some(e) => {
                row.push(e.order.map_or(String::new(), |n| n.to_string()));
                for n in &orders {
                    row.push(e.aic.iter().find(|a| a.n == *n).map_or(String::new(), |a| fmt(a.aic)));
                }
            }
            None => row.extend(std::iter::repeat_n(String::new(), 1 + orders.len())),
        }
        t.push(row);
    }
    Some(t)
}

fn summary_table(summary: &CampaignSummary) -> Table {
    let mut t = Table::new(["method", "quantity", "count", "min", "q1", "median", "q3", "max"].map(String::from).to_vec());
    for res in &summary.methods {
        let ok: Vec<&RunRecord> = res.records.iter().filter(|r| r.ok()).collect();
        let mut quantities: Vec<(String, Vec<f64>)> = vec![
            ("cost".into(), ok.iter().map(|r| r.estimate.as_ref().unwrap().cost).collect()),
            ("bode_error".into(), ok.iter().map(|r| r.bode_error).collect()),
        ];
        let direct = matches!(res.method, MethodSpec::Arx { .. } | MethodSpec::Armax { .. });
        if direct {
            quantities.push(("order".into(), ok.iter().map(|r| r.estimate.as_ref().unwrap().order.unwrap_or(0) as f64).collect()));
        } else if let Some(first) = ok.first() {
            for (i, name) in first.estimate.as_ref().unwrap().param_names.iter().enumerate() {
                quantities.push((name.clone(), ok.iter().map(|r| r.estimate.as_ref().unwrap().params[i]).collect()));
            }
        }
        for (name, values) in quantities {
            let mut row = vec![res.label(), name];
            match Quartiles::of(&values) {
                Some(q) => row.extend([q.count.to_string(), fmt(q.min), fmt(q.q1), fmt(q.median), fmt(q.q3), fmt(q.max)]),
                None => row.extend(["0".to_string(), String::new(), String::new(), String::new(), String::new(), String::new()]),
            }
            t.push(row);
        }
    }
    t
}

/// Writes every artifact into `dir` (created if missing); returns the paths.
pub fn write_outputs(cfg: &CampaignConfig, summary: &CampaignSummary, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for res in &summary.methods {
        let label = res.label();
        let path = dir.join(format!("theta_{label}.csv"));
        theta_table(res).write(&path)?;
        written.push(path);
        let path = dir.join(format!("bode_{label}.csv"));
        bode_table(summary, res).write(&path)?;
        written.push(path);
        if let Some(t) = orders_table(res) {
            let path = dir.join(format!("orders_{label}.csv"));
            t.write(&path)?;
            written.push(path);
        }
    }
    let path = dir.join("summary.csv");
    summary_table(summary).write(&path)?;
    written.push(path);

    let meta = Meta {
        tool: "sysid",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        seeds: &summary.seeds,
        methods: summary
            .methods
            .iter()
            .map(|m| MetaMethod { label: m.label(), succeeded: m.successes(), failed: m.records.len() - m.successes() })
            .collect(),
    };
    let path = dir.join("campaign.meta");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n")?;
    written.push(path);
    Ok(written)
}

/// Every method must succeed on at least 90% of runs.
pub fn campaign_exit_code(summary: &CampaignSummary) -> i32 {
    let healthy = summary.methods.iter().all(|m| 10 * m.successes() >= 9 * m.records.len());
    if healthy {
        exit::OK
    } else {
        exit::CAMPAIGN_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_of_single_value() {
        let q = Quartiles::of(&[3.5]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (3.5, 3.5, 3.5, 3.5, 3.5));
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let q = Quartiles::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
        assert!(Quartiles::of(&[f64::NAN]).is_none());
    }

    #[test]
    fn poly_names_sorted_by_coefficient() {
        let names = ["a1", "b1", "a2", "b2", "a3"].map(String::from).to_vec();
        assert_eq!(sort_poly_names(names), ["a1", "a2", "a3", "b1", "b2"]);
        let theta = ["Ki", "Kx", "theta1"].map(String::from).to_vec();
        assert_eq!(sort_poly_names(theta.clone()), theta);
    }
}
