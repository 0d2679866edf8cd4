//! Subcommand bodies. Each returns the process exit code.

use std::path::{Path, PathBuf};

use sysid_core::lti::{FrequencyResponse, Lti, TransferFunction};
use sysid_core::maglev;
use sysid_core::simulate::{simulate_closed_loop, Dataset};

use crate::campaign::{campaign_exit_code, run_campaign, write_outputs, Quartiles};
use crate::config::{CampaignConfig, MethodSpec};
use crate::error::{exit, CliError};
use crate::methods::{describe_margin, loop_poles, run_method};
use crate::table::{fmt, Table};

fn out_dir(cfg: &CampaignConfig, out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| PathBuf::from(&cfg.output_dir), Path::to_path_buf)
}

fn print_poles(title: &str, poles: &[num_complex::Complex64]) {
    println!("{title}:");
    for p in poles {
        println!("  {} {} {}j", fmt(p.re), if p.im < 0.0 { "-" } else { "+" }, fmt(p.im.abs()));
    }
}

/// Simulates one closed-loop experiment and writes `dataset.csv`.
pub fn cmd_simulate(cfg: &CampaignConfig, out: Option<&Path>, seed: Option<u64>) -> Result<i32, CliError> {
    let plant = cfg.plant.transfer_function()?;
    let k = cfg.controller(&cfg.loop_controller)?;
    let poles = loop_poles(&plant, &k)?;
    print_poles("closed-loop poles", &poles);
    let spec = cfg.experiment_spec(seed.unwrap_or(cfg.base_seed))?;
    let data = simulate_closed_loop(&spec)?;
    let dir = out_dir(cfg, out);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dataset.csv");
    data.write_csv(&path)?;
    println!("wrote {} ({} samples)", path.display(), data.len());
    Ok(exit::OK)
}

/// Runs one method on a recorded dataset.
pub fn cmd_identify(cfg: &CampaignConfig, data: &Path, method: &str, out: Option<&Path>, seed: Option<u64>) -> Result<i32, CliError> {
    let method = MethodSpec::parse(method, cfg)?;
    let data = Dataset::from_csv_file(data)?;
    let est = run_method(cfg, &method, &data, seed.unwrap_or(cfg.base_seed))?;
    let label = method.label();
    let dir = out_dir(cfg, out);
    std::fs::create_dir_all(&dir)?;

    let mut t = Table::new(vec!["name".into(), "value".into()]);
    t.push(vec!["cost".into(), fmt(est.cost)]);
    if let Some(n) = est.order {
        t.push(vec!["order".into(), n.to_string()]);
    }
    for (n, v) in est.param_names.iter().zip(&est.params) {
        t.push(vec![n.clone(), fmt(*v)]);
    }
    for a in &est.aic {
        t.push(vec![format!("aic_{}", a.n), fmt(a.aic)]);
    }
    let path = dir.join(format!("estimate_{label}.csv"));
    t.write(&path)?;
    println!("wrote {}", path.display());

    let mut t = Table::new(vec!["iteration".into(), "cost".into()]);
    for (i, c) in est.trace.iter().enumerate() {
        t.push(vec![i.to_string(), fmt(*c)]);
    }
    let path = dir.join(format!("trace_{label}.csv"));
    t.write(&path)?;

    println!("cost = {}", fmt(est.cost));
    for (n, v) in est.param_names.iter().zip(&est.params) {
        println!("{n} = {}", fmt(*v));
    }
    print_poles("model poles", &est.model.transfer_function().poles()?);
    let k = cfg.controller(&cfg.loop_controller)?;
    let margin = est.model.closed_loop_margin(&k)?;
    println!("loop with '{}' {} (margin {})", cfg.loop_controller, describe_margin(margin), fmt(margin));
    Ok(exit::OK)
}

/// Runs the configured campaign, optionally restricted to one method.
pub fn cmd_montecarlo(cfg: &CampaignConfig, out: Option<&Path>, seed: Option<u64>, method: Option<&str>) -> Result<i32, CliError> {
    let mut cfg = cfg.clone();
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(tag) = method {
        let m = MethodSpec::parse(tag, &cfg)?;
        cfg.methods.retain(|c| c.label() == m.label());
        if cfg.methods.is_empty() {
            cfg.methods.push(m);
        }
    }
    let summary = run_campaign(&cfg)?;
    let dir = out_dir(&cfg, out);
    write_outputs(&cfg, &summary, &dir)?;
    for m in &summary.methods {
        let errs: Vec<f64> = m.records.iter().map(|r| r.bode_error).collect();
        let med = Quartiles::of(&errs).map_or(f64::NAN, |q| q.median);
        println!("{:<24} {:>4}/{:<4} ok  median bode error {}", m.label(), m.successes(), m.records.len(), fmt(med));
    }
    println!("wrote {}", dir.display());
    let code = campaign_exit_code(&summary);
    if code != exit::OK {
        eprintln!("error: a method succeeded on fewer than 90% of runs");
    }
    Ok(code)
}

/// Frequency response of the configured plant, a controller, a unit gain or
/// an explicit black-box parameter vector.
pub fn cmd_freqresp(cfg: &CampaignConfig, model: Option<&str>, theta: Option<&[f64]>, out: Option<&Path>) -> Result<i32, CliError> {
    let (name, tf): (String, TransferFunction) = match (model, theta) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either --model or --theta, not both")),
        (_, Some(th)) => {
            let th: [f64; 4] = th.try_into().map_err(|_| CliError::usage(format!("--theta needs 4 values, got {}", th.len())))?;
            ("theta".into(), maglev::plant(&th))
        }
        (None | Some("plant"), None) => ("plant".into(), cfg.plant.transfer_function()?),
        (Some("unit"), None) => ("unit".into(), TransferFunction::gain(1.0, sysid_core::lti::Domain::Continuous)),
        (Some(c), None) => (c.to_string(), cfg.controller(c)?),
    };
    let omega = cfg.omega_grid.omega();
    let fr: FrequencyResponse = tf.freq_response(&omega)?;
    let mut t = Table::new(["omega", "mag", "phase_deg"].map(String::from).to_vec());
    for ((w, m), p) in omega.iter().zip(fr.magnitude()).zip(fr.phase_deg()) {
        t.push(vec![fmt(*w), fmt(m), fmt(p)]);
    }
    let dir = out_dir(cfg, out);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("freqresp_{name}.csv"));
    t.write(&path)?;
    println!("wrote {}", path.display());
    Ok(exit::OK)
}
