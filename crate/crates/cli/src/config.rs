//! Versioned JSON campaign configuration.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sysid_core::lti::{logspace, Domain, TransferFunction};
use sysid_core::maglev::{self, GrayBoxConstants};
use sysid_core::optimize::{OptimizerConfig, Polish};
use sysid_core::simulate::{ExperimentSpec, NoiseSpec, Reference};
use sysid_core::spem::{ParamKind, PlantParameterization};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub plant: PlantSpec,
    /// Named controllers; `loop_controller` closes the experiment loop, the
    /// rest are available as virtual controllers.
    pub controllers: BTreeMap<String, ControllerSpec>,
    pub loop_controller: String,
    pub experiment: ExperimentConfig,
    pub graybox: GrayBoxConfig,
    pub methods: Vec<MethodSpec>,
    pub runs: usize,
    pub omega_grid: GridSpec,
    pub output_dir: String,
    pub base_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSpec {
    /// `θ1 / (p³ + θ2 p² + θ3 p + θ4)`.
    Theta { theta: [f64; 4] },
    Rational { num: Vec<f64>, den: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Zeros and poles as `[re, im]` pairs.
    Zpk { gain: f64, zeros: Vec<[f64; 2]>, poles: Vec<[f64; 2]> },
    /// `kp·(1 + 1/(ti·p) + td·p/(1 + tau·p))`.
    Pid { kp: f64, ti: f64, td: f64, tau: f64 },
    Rational { num: Vec<f64>, den: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ts: f64,
    pub duration: f64,
    pub pulse: PulseConfig,
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub start: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_w: f64,
    pub sigma_xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrayBoxConfig {
    pub r: f64,
    pub l: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn omega(&self) -> Vec<f64> {
        logspace(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    Blackbox4,
    Graybox2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Spem {
        param: ParamName,
        controller: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    DualYoula {
        order: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Arx {
        orders: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Armax {
        orders: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Spem { label: Some(l), .. }
            | MethodSpec::DualYoula { label: Some(l), .. }
            | MethodSpec::Arx { label: Some(l), .. }
            | MethodSpec::Armax { label: Some(l), .. } => l.clone(),
            MethodSpec::Spem { param, controller, .. } => {
                let p = match param {
                    ParamName::Blackbox4 => "blackbox4",
                    ParamName::Graybox2 => "graybox2",
                };
                format!("spem_{p}_{controller}")
            }
            MethodSpec::DualYoula { order, .. } => format!("dual_youla_{order}"),
            MethodSpec::Arx { .. } => "arx".into(),
            MethodSpec::Armax { .. } => "armax".into(),
        }
    }

    /// Parses `kind[:arg[:arg]]`: `spem[:param[:controller]]`,
    /// `dual_youla[:order]`, `arx[:n]`, `armax[:n]`. Missing arguments fall
    /// back to the config's loop controller and order ranges.
    pub fn parse(tag: &str, config: &CampaignConfig) -> Result<Self, CliError> {
        let parts: Vec<&str> = tag.split(':').collect();
        let bad = || CliError::usage(format!("unknown method '{tag}'"));
        let range_of = |kind: &str| {
            config
                .methods
                .iter()
                .find_map(|m| match (m, kind) {
                    (MethodSpec::Arx { orders, .. }, "arx") | (MethodSpec::Armax { orders, .. }, "armax") => Some(orders.clone()),
                    _ => None,
                })
                .unwrap_or_else(|| (1..=10).collect())
        };
        let order_arg = |s: &str| s.parse::<usize>().map_err(|_| bad());
        match parts.as_slice() {
            ["spem", rest @ ..] if rest.len() <= 2 => {
                let param = match rest.first().copied() {
                    None | Some("blackbox4") => ParamName::Blackbox4,
                    Some("graybox2") => ParamName::Graybox2,
                    _ => return Err(bad()),
                };
                let controller = rest.get(1).map_or_else(|| config.loop_controller.clone(), |s| s.to_string());
                Ok(MethodSpec::Spem { param, controller, label: None })
            }
            ["dual_youla"] => Ok(MethodSpec::DualYoula { order: 7, label: None }),
            ["dual_youla", n] => Ok(MethodSpec::DualYoula { order: order_arg(n)?, label: None }),
            [kind @ ("arx" | "armax"), rest @ ..] if rest.len() <= 1 => {
                let orders = match rest.first() {
                    Some(n) => vec![order_arg(n)?],
                    None => range_of(kind),
                };
                Ok(if *kind == "arx" { MethodSpec::Arx { orders, label: None } } else { MethodSpec::Armax { orders, label: None } })
            }
            _ => Err(bad()),
        }
    }
}

/// Optional swarm settings; unset fields take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swarm_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polish_evaluations: Option<usize>,
    /// Blackbox4 box as `[lo, hi]` per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blackbox4_bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graybox2_bounds: Option<Vec<[f64; 2]>>,
}

fn complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl ControllerSpec {
    pub fn transfer_function(&self) -> Result<TransferFunction, CliError> {
        let tf = match self {
            ControllerSpec::Zpk { gain, zeros, poles } => {
                TransferFunction::from_zpk(&complex(zeros), &complex(poles), *gain, Domain::Continuous)
            }
            ControllerSpec::Pid { kp, ti, td, tau } => Ok(maglev::pid(*kp, *ti, *td, *tau)),
            ControllerSpec::Rational { num, den } => TransferFunction::continuous(num.clone(), den.clone()),
        };
        tf.map_err(|e| CliError::config(format!("controller: {e}")))
    }
}

impl PlantSpec {
    pub fn transfer_function(&self) -> Result<TransferFunction, CliError> {
        match self {
            PlantSpec::Theta { theta } => Ok(maglev::plant(theta)),
            PlantSpec::Rational { num, den } => {
                TransferFunction::continuous(num.clone(), den.clone()).map_err(|e| CliError::config(format!("plant: {e}")))
            }
        }
    }
}

impl CampaignConfig {
    /// The checked-in magnetic-levitation campaign.
    pub fn maglev() -> Self {
        let pair = |z: Complex64| [z.re, z.im];
        let mut controllers = BTreeMap::new();
        controllers.insert(
            "hinf".to_string(),
            ControllerSpec::Zpk {
                gain: -1.197e8,
                zeros: vec![[-9.294, 0.0], [-13.99, 0.0], [-20.9, 0.0]],
                poles: [Complex64::new(-399.9, 0.0), Complex64::new(-0.1, 0.0), Complex64::new(-121.5, 141.1), Complex64::new(-121.5, -141.1)]
                    .into_iter()
                    .map(pair)
                    .collect(),
            },
        );
        controllers.insert("pid".to_string(), ControllerSpec::Pid { kp: -1798.1, ti: 0.1438, td: 0.1778, tau: 8.6336e-4 });
        let g = GrayBoxConstants::default();
        let spem = |param, controller: &str| MethodSpec::Spem { param, controller: controller.into(), label: None };
        CampaignConfig {
            schema_version: SCHEMA_VERSION,
            plant: PlantSpec::Theta { theta: maglev::THETA_TRUE },
            controllers,
            loop_controller: "hinf".into(),
            experiment: ExperimentConfig {
                ts: maglev::TS,
                duration: maglev::DURATION,
                pulse: PulseConfig { start: maglev::PULSE_START, width: maglev::PULSE_WIDTH, height: maglev::PULSE_HEIGHT },
                noise: NoiseConfig { sigma_w: maglev::SIGMA_W, sigma_xi: maglev::SIGMA_XI },
            },
            graybox: GrayBoxConfig { r: g.r, l: g.l, m: g.m },
            methods: vec![
                spem(ParamName::Blackbox4, "hinf"),
                spem(ParamName::Blackbox4, "pid"),
                spem(ParamName::Graybox2, "hinf"),
                spem(ParamName::Graybox2, "pid"),
                MethodSpec::DualYoula { order: 7, label: None },
                MethodSpec::Arx { orders: (1..=10).collect(), label: None },
                MethodSpec::Armax { orders: (1..=10).collect(), label: None },
            ],
            runs: 100,
            omega_grid: GridSpec { lo: 1.0, hi: 1e3, points: 200 },
            output_dir: "out".into(),
            base_seed: 1,
            optimizer: OptimizerOverrides::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        // a campaign.meta file carries the config under "config"
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let value = match value.get("config") {
            Some(inner) if value.get("schema_version").is_none() => inner.clone(),
            _ => value,
        };
        let cfg: CampaignConfig = serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        if self.runs == 0 {
            return Err(CliError::config("runs must be at least 1"));
        }
        let g = &self.omega_grid;
        if !(g.lo > 0.0 && g.hi > g.lo && g.points >= 2) {
            return Err(CliError::config("omega_grid needs 0 < lo < hi and at least 2 points"));
        }
        if !self.controllers.contains_key(&self.loop_controller) {
            return Err(CliError::config(format!("loop_controller '{}' is not defined", self.loop_controller)));
        }
        let mut labels = std::collections::BTreeSet::new();
        for m in &self.methods {
            match m {
                MethodSpec::Spem { controller, .. } if !self.controllers.contains_key(controller) => {
                    return Err(CliError::config(format!("method uses undefined controller '{controller}'")));
                }
                MethodSpec::Arx { orders, .. } | MethodSpec::Armax { orders, .. } if orders.is_empty() || orders.contains(&0) => {
                    return Err(CliError::config("order ranges must be nonempty and positive"));
                }
                MethodSpec::DualYoula { order: 0, .. } => return Err(CliError::config("dual_youla order must be positive")),
                _ => {}
            }
            if !labels.insert(m.label()) {
                return Err(CliError::config(format!("duplicate method label '{}'", m.label())));
            }
        }
        for c in self.controllers.values() {
            c.transfer_function()?;
        }
        self.plant.transfer_function()?;
        self.experiment_spec(self.base_seed)?.validate().map_err(|e| CliError::config(e.to_string()))
    }

    pub fn controller(&self, name: &str) -> Result<TransferFunction, CliError> {
        self.controllers.get(name).ok_or_else(|| CliError::usage(format!("unknown controller '{name}'")))?.transfer_function()
    }

    pub fn graybox_constants(&self) -> GrayBoxConstants {
        GrayBoxConstants { r: self.graybox.r, l: self.graybox.l, m: self.graybox.m }
    }

    pub fn experiment_spec(&self, seed: u64) -> Result<ExperimentSpec, CliError> {
        let e = &self.experiment;
        Ok(ExperimentSpec {
            plant: self.plant.transfer_function()?,
            controller: self.controller(&self.loop_controller)?,
            reference: Reference::Pulse { start: e.pulse.start, width: e.pulse.width, height: e.pulse.height },
            duration: e.duration,
            ts: e.ts,
            noise: NoiseSpec { sigma_w: e.noise.sigma_w, sigma_xi: e.noise.sigma_xi, seed },
        })
    }

    pub fn parameterization(&self, param: ParamName) -> PlantParameterization {
        match param {
            ParamName::Blackbox4 => PlantParameterization::blackbox4(),
            ParamName::Graybox2 => PlantParameterization::graybox2(self.graybox_constants()),
        }
    }

    pub fn optimizer(&self, param: &PlantParameterization, seed: u64) -> OptimizerConfig {
        let o = &self.optimizer;
        let bounds = match param.kind {
            ParamKind::BlackBox4 => o.blackbox4_bounds.as_ref(),
            ParamKind::GrayBox2 => o.graybox2_bounds.as_ref(),
        }
        .map(|b| b.iter().map(|&[lo, hi]| (lo, hi)).collect())
        .unwrap_or_else(|| param.default_bounds());
        let mut cfg = OptimizerConfig::with_bounds(bounds);
        cfg.seed = seed;
        if let Some(v) = o.swarm_size {
            cfg.swarm_size = v;
        }
        if let Some(v) = o.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(v) = o.stall_iterations {
            cfg.stall_iterations = v;
        }
        if let Some(v) = o.polish_evaluations {
            cfg.polish = if v == 0 { Polish::None } else { Polish::NelderMead { max_evals: v, tol: 1e-10 } };
        }
        cfg
    }
}
