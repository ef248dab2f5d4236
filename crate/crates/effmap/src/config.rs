//! Run configuration: TOML or JSON, validated as a whole before any work.

use std::path::{Path, PathBuf};

use effmap_core::cycle::{self, Vehicle};
use effmap_core::ecm::{EcmField, EcmParameters};
use effmap_core::pipeline::{McSettings, PceSettings, UqMethod};
use effmap_core::qoi::{build_grid, GridSpec, OperatingSet};
use effmap_core::reduction::DEFAULT_THRESHOLD;
use effmap_core::space::{ParameterSpace, RandomParameter, SamplingStrategy};
use serde::{Deserialize, Serialize};

use crate::cycle_csv;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: EcmParameters,
    pub space: SpaceConfig,
    pub operating: OperatingConfig,
    pub method: MethodConfig,
    pub reduction: ReductionConfig,
    /// Artifact directory; not echoed into artifacts.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    /// Worker threads; not echoed into artifacts.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: EcmParameters::default(),
            space: SpaceConfig::default(),
            operating: OperatingConfig::default(),
            method: MethodConfig::default(),
            reduction: ReductionConfig::default(),
            output: PathBuf::from("effmap-out"),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    pub parameters: Vec<ParameterConfig>,
}

impl Default for SpaceConfig {
    /// All four circuit parameters, uniform within 5 % of nominal.
    fn default() -> Self {
        Self {
            parameters: EcmField::ALL
                .iter()
                .map(|f| ParameterConfig {
                    name: f.name().into(),
                    nominal: None,
                    halfwidth: Some(0.05),
                    lower: None,
                    upper: None,
                })
                .collect(),
        }
    }
}

/// Either `halfwidth` (relative to nominal) or explicit `lower`/`upper`.
/// The nominal defaults to the model value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatingConfig {
    Grid(GridSpec),
    Cycle(CycleConfig),
}

impl Default for OperatingConfig {
    /// 14 x 18 motoring grid clipped to 232 points under the default rating.
    fn default() -> Self {
        Self::Grid(default_grid())
    }
}

pub fn default_grid() -> GridSpec {
    GridSpec {
        t_min: 0.0,
        t_max: 0.105,
        n_t: 14,
        omega_min: 0.0,
        omega_max: 1600.0,
        n_omega: 18,
        clip_to_envelope: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    /// Cycle CSV; the built-in synthetic profile when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Step of the synthetic profile, s.
    pub step: f64,
    pub vehicle: Vehicle,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            path: None,
            step: 0.5,
            vehicle: Vehicle::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Mc,
    #[default]
    Pce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: MethodKind,
    pub seed: u64,
    pub mc: McConfig,
    pub pce: PceConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            kind: MethodKind::Pce,
            seed: 2024,
            mc: McConfig::default(),
            pce: PceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_samples: usize,
    pub strategy: SamplingStrategy,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_samples: 20_000,
            strategy: SamplingStrategy::PseudoRandom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PceConfig {
    pub degree: u32,
    pub oversampling: f64,
    pub strategy: SamplingStrategy,
}

impl Default for PceConfig {
    fn default() -> Self {
        Self {
            degree: 2,
            oversampling: 2.0,
            strategy: SamplingStrategy::LatinHypercube,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub threshold: f64,
    /// Parameters to fix; selected from the generalized total indices when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<String>>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            fixed: None,
        }
    }
}

impl RunConfig {
    /// Parse a `.json` file as JSON and anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
    }

    pub fn mc_settings(&self) -> McSettings {
        McSettings {
            n_samples: self.method.mc.n_samples,
            seed: self.method.seed,
            strategy: self.method.mc.strategy,
        }
    }

    pub fn pce_settings(&self) -> PceSettings {
        PceSettings {
            degree: self.method.pce.degree,
            oversampling: self.method.pce.oversampling,
            seed: self.method.seed,
            strategy: self.method.pce.strategy,
        }
    }

    pub fn uq_method(&self, kind: MethodKind) -> UqMethod {
        match kind {
            MethodKind::Mc => UqMethod::Mc(self.mc_settings()),
            MethodKind::Pce => UqMethod::Pce(self.pce_settings()),
        }
    }

    /// Check every block and build the study inputs. `base_dir` resolves
    /// relative cycle paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<Study> {
        let ecm = self.model;
        ecm.validate().map_err(|e| keyed("model", e))?;
        let space = self.resolve_space(&ecm)?;
        self.check_method()?;
        if !(self.reduction.threshold.is_finite() && self.reduction.threshold >= 0.0) {
            return Err(CliError::Config(format!(
                "reduction.threshold: must be finite and nonnegative, got {}",
                self.reduction.threshold
            )));
        }
        if let Some(fixed) = &self.reduction.fixed {
            if let Some(bad) = fixed.iter().find(|n| space.index_of(n).is_none()) {
                return Err(CliError::Config(format!("reduction.fixed: unknown parameter `{bad}`")));
            }
        }
        let opset = match &self.operating {
            OperatingConfig::Grid(g) => build_grid(g, &ecm).map_err(|e| keyed("operating", e))?,
            OperatingConfig::Cycle(c) => {
                c.vehicle.validate().map_err(|e| keyed("operating", e))?;
                match &c.path {
                    Some(p) => cycle_csv::load_cycle(&base_dir.join(p), &c.vehicle)?,
                    None => {
                        let (t, v) = cycle::wltp_like(c.step).map_err(|e| keyed("operating.step", e))?;
                        cycle::profile_from_speed(&t, &v, &c.vehicle)?
                    }
                }
            }
        };
        Ok(Study { ecm, space, opset })
    }

    fn resolve_space(&self, ecm: &EcmParameters) -> Result<ParameterSpace> {
        if self.space.parameters.is_empty() {
            return Err(CliError::Config(
                "space.parameters: at least one parameter is required".into(),
            ));
        }
        let mut params = Vec::new();
        for (i, p) in self.space.parameters.iter().enumerate() {
            let key = format!("space.parameters[{i}]");
            let field = EcmField::from_name(&p.name).map_err(|e| keyed(&format!("{key}.name"), e))?;
            let nominal = p.nominal.unwrap_or(ecm.get(field));
            let param = match (p.halfwidth, p.lower, p.upper) {
                (Some(h), None, None) => RandomParameter::relative(&p.name, nominal, h),
                (None, Some(lo), Some(hi)) => RandomParameter::uniform(&p.name, nominal, lo, hi),
                _ => {
                    return Err(CliError::Config(format!(
                        "{key}: give either `halfwidth` or both `lower` and `upper`"
                    )))
                }
            }
            .map_err(|e| keyed(&key, e))?;
            if !(param.lower > 0.0) {
                return Err(CliError::Config(format!(
                    "{key}: `{}` must stay positive, lower bound is {}",
                    p.name, param.lower
                )));
            }
            params.push(param);
        }
        ParameterSpace::new(params).map_err(|e| keyed("space.parameters", e))
    }

    fn check_method(&self) -> Result<()> {
        let m = &self.method;
        if m.mc.n_samples < 2 {
            return Err(CliError::Config(format!(
                "method.mc.n_samples: need at least 2, got {}",
                m.mc.n_samples
            )));
        }
        if !(m.pce.oversampling >= 1.0 && m.pce.oversampling.is_finite()) {
            return Err(CliError::Config(format!(
                "method.pce.oversampling: must be >= 1, got {}",
                m.pce.oversampling
            )));
        }
        if m.pce.degree > 20 {
            return Err(CliError::Config(format!(
                "method.pce.degree: {} is too large",
                m.pce.degree
            )));
        }
        Ok(())
    }
}

fn keyed(key: &str, e: effmap_core::Error) -> CliError {
    match e {
        effmap_core::Error::Config(msg) | effmap_core::Error::Domain(msg) => CliError::Config(format!("{key}: {msg}")),
        other => other.into(),
    }
}

/// Validated inputs shared by all commands.
#[derive(Debug, Clone)]
pub struct Study {
    pub ecm: EcmParameters,
    pub space: ParameterSpace,
    pub opset: OperatingSet,
}
