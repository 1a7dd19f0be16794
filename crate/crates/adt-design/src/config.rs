//! TOML problem files.
//!
//! ```toml
//! [model]
//! stress_dim = 2
//! time_plan = [0.0, 0.5, 1.0]
//! use_condition = [-0.4, -0.2]
//! error_variance = 0.10
//! system_s = 1
//! alpha = 0.5
//!
//! [[component]]
//! basis = ["1", "x1", "x2", "x1*x2", "t", "x1*t", "x2*t", "x1*x2*t"]
//! random_effects = ["1", "t"]
//! sigma_gamma = [[0.36, 0.0], [0.0, 0.10]]
//! beta = [2.30, 1.60, 1.30, 0.02, 0.70, 0.07, 0.08, 0.03]
//! threshold = 5.4
//! ```
//!
//! Unknown keys are rejected.

use std::fs;
use std::path::Path;

use adt_design_core::linalg::Matrix;
use adt_design_core::{
    ComponentSpec, DesignRegion, Interval, ModelSpec, Monomial, OptimizerOptions, SweepSpec,
    SweepTarget,
};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad monomial `{term}`: {reason}")]
    Monomial { term: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] adt_design_core::Error),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub model: ModelSection,
    #[serde(rename = "component")]
    pub components: Vec<ComponentSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub stress_dim: usize,
    pub time_plan: Vec<f64>,
    pub use_condition: Vec<f64>,
    pub error_variance: f64,
    pub system_s: usize,
    pub alpha: f64,
    /// `[lo, hi]` per stress axis; the unit cube when absent.
    pub region: Option<Vec<[f64; 2]>>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub basis: Vec<String>,
    pub random_effects: Vec<String>,
    pub sigma_gamma: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
    pub threshold: f64,
    pub error_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub grid_step: Option<f64>,
    pub max_iterations: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub equivalence_tol: Option<f64>,
    pub prune_threshold: Option<f64>,
    pub report_threshold: Option<f64>,
    pub power: Option<f64>,
    pub grid_cap: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub target: String,
    /// `start:stop:step`
    pub range: Option<String>,
    pub values: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub reoptimize: bool,
}

fn yes() -> bool {
    true
}

/// Parses `1`, `x2`, `t`, `x1^2*t` and similar products.
pub fn parse_monomial(term: &str, stress_dim: usize) -> Result<Monomial, ConfigError> {
    let err = |reason: &str| ConfigError::Monomial {
        term: term.to_string(),
        reason: reason.to_string(),
    };
    let mut stress = vec![0u32; stress_dim];
    let mut time = 0u32;
    for factor in term.split('*').map(str::trim) {
        if factor == "1" {
            continue;
        }
        let (var, power) = match factor.split_once('^') {
            Some((v, p)) => (
                v.trim(),
                p.trim().parse::<u32>().map_err(|_| err("bad exponent"))?,
            ),
            None => (factor, 1),
        };
        if var == "t" {
            time += power;
        } else if let Some(idx) = var.strip_prefix('x') {
            let j: usize = idx.parse().map_err(|_| err("bad variable index"))?;
            if j == 0 || j > stress_dim {
                return Err(err(&format!("stress variable must be x1..x{stress_dim}")));
            }
            stress[j - 1] += power;
        } else {
            return Err(err("factors must be 1, t or x<j>"));
        }
    }
    Ok(Monomial::new(stress, time))
}

/// `start:stop:step`
pub fn parse_range(s: &str) -> Result<(f64, f64, f64), ConfigError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || ConfigError::Invalid(format!("sweep range `{s}` must be start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let m = &self.model;
        let d = m.stress_dim;
        let components = self
            .components
            .iter()
            .map(|c| {
                let fixed_basis = c
                    .basis
                    .iter()
                    .map(|t| parse_monomial(t, d))
                    .collect::<Result<Vec<_>, _>>()?;
                let random_time_exponents = c
                    .random_effects
                    .iter()
                    .map(|t| {
                        let mono = parse_monomial(t, d)?;
                        if !mono.is_pure_time() {
                            return Err(ConfigError::Monomial {
                                term: t.clone(),
                                reason: "random effects must be powers of t".into(),
                            });
                        }
                        Ok(mono.time_exponent)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let n = c.sigma_gamma.len();
                if c.sigma_gamma.iter().any(|row| row.len() != n) {
                    return Err(ConfigError::Invalid(
                        "sigma_gamma must be a square matrix".into(),
                    ));
                }
                Ok(ComponentSpec {
                    fixed_basis,
                    random_time_exponents,
                    sigma_gamma: Matrix::from_rows(&c.sigma_gamma),
                    beta: c.beta.clone(),
                    threshold: c.threshold,
                    error_variance: c.error_variance,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let design_region = match &m.region {
            Some(axes) => {
                DesignRegion(axes.iter().map(|&[lo, hi]| Interval::new(lo, hi)).collect())
            }
            None => DesignRegion::unit_cube(d),
        };
        Ok(ModelSpec {
            components,
            error_variance: m.error_variance,
            time_plan: m.time_plan.clone(),
            stress_dim: d,
            design_region,
            use_condition: m.use_condition.clone(),
            system_s: m.system_s,
            alpha: m.alpha,
            t_max: m.t_max.unwrap_or(ModelSpec::DEFAULT_T_MAX),
        })
    }

    pub fn optimizer_options(&self) -> OptimizerOptions {
        let o = &self.optimizer;
        let d = OptimizerOptions::default();
        OptimizerOptions {
            grid_step: o.grid_step.unwrap_or(d.grid_step),
            max_iterations: o.max_iterations.unwrap_or(d.max_iterations),
            convergence_tol: o.convergence_tol.unwrap_or(d.convergence_tol),
            equivalence_tol: o.equivalence_tol.unwrap_or(d.equivalence_tol),
            prune_threshold: o.prune_threshold.unwrap_or(d.prune_threshold),
            report_threshold: o.report_threshold.unwrap_or(d.report_threshold),
            power: o.power.unwrap_or(d.power),
            grid_cap: o.grid_cap.unwrap_or(d.grid_cap),
        }
    }

    /// Sweep from the `[sweep]` section, with command-line overrides. A
    /// missing range defaults to -2..5 step 0.5 for coefficients and
    /// -1..-0.05 step 0.05 for use-condition coordinates.
    pub fn sweep_spec(
        &self,
        target: Option<&str>,
        range: Option<&str>,
        reoptimize: Option<bool>,
    ) -> Result<SweepSpec, ConfigError> {
        let mut section = self.sweep.as_ref();
        let target: SweepTarget = match (target, section) {
            (Some(t), _) => t.parse()?,
            (None, Some(s)) => s.target.parse()?,
            (None, None) => return Err(ConfigError::Invalid("no sweep target given".into())),
        };
        // a range in the file belongs to the target in the file
        if let Some(s) = section {
            if s.target.parse::<SweepTarget>().ok() != Some(target) {
                section = None;
            }
        }
        let reoptimize = reoptimize
            .or(self.sweep.as_ref().map(|s| s.reoptimize))
            .unwrap_or(true);
        let range = range.or(section.and_then(|s| s.range.as_deref()));
        if let Some(r) = range {
            let (start, stop, step) = parse_range(r)?;
            return Ok(SweepSpec::range(target, start, stop, step, reoptimize)?);
        }
        if let Some(values) = section.and_then(|s| s.values.clone()) {
            return Ok(SweepSpec {
                target,
                values,
                reoptimize,
            });
        }
        let (start, stop, step) = match target {
            SweepTarget::Beta { .. } => (-2.0, 5.0, 0.5),
            SweepTarget::UseCondition(_) => (-1.0, -0.05, 0.05),
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "sweep target {target} needs an explicit range"
                )))
            }
        };
        Ok(SweepSpec::range(target, start, stop, step, reoptimize)?)
    }
}
