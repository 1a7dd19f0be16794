//! One-parameter robustness sweeps.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::criterion::{ApproximateDesign, CriterionContext};
use crate::error::{Error, Result};
use crate::model::{validate_system, DesignRegion, ModelSpec};
use crate::optimizer::{optimize, reported_support, OptimizerOptions};

/// Equal weights on all `2^d` vertices of the region.
pub fn balanced_vertex_design(region: &DesignRegion) -> ApproximateDesign {
    let vertices = region.vertices();
    let w = 1.0 / vertices.len() as f64;
    let n = vertices.len();
    ApproximateDesign::from_parts(vertices, alloc::vec![w; n])
}

/// Parameter varied by a sweep. Indices are zero-based; the textual form
/// (`beta[1][2]`, `x_u[1]`, `alpha`, `threshold[3]`) is one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Beta { component: usize, term: usize },
    UseCondition(usize),
    Alpha,
    Threshold(usize),
}

impl fmt::Display for SweepTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Beta { component, term } => write!(f, "beta[{}][{}]", component + 1, term + 1),
            Self::UseCondition(j) => write!(f, "x_u[{}]", j + 1),
            Self::Alpha => f.write_str("alpha"),
            Self::Threshold(l) => write!(f, "threshold[{}]", l + 1),
        }
    }
}

fn parse_indices(s: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = s;
    while !rest.is_empty() {
        let inner = rest.strip_prefix('[')?;
        let close = inner.find(']')?;
        let i: usize = inner[..close].trim().parse().ok()?;
        out.push(i.checked_sub(1)?);
        rest = &inner[close + 1..];
    }
    Some(out)
}

impl FromStr for SweepTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidSweep(format!("unrecognized sweep target `{s}`"));
        let split = s.find('[').unwrap_or(s.len());
        let (name, idx) = s.split_at(split);
        let idx = parse_indices(idx).ok_or_else(bad)?;
        match (name, idx.as_slice()) {
            ("beta", &[component, term]) => Ok(Self::Beta { component, term }),
            ("x_u", &[j]) => Ok(Self::UseCondition(j)),
            ("alpha", &[]) => Ok(Self::Alpha),
            ("threshold", &[l]) => Ok(Self::Threshold(l)),
            _ => Err(bad()),
        }
    }
}

impl SweepTarget {
    /// Rejects indices that do not exist in `spec`.
    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        let ok = match *self {
            Self::Beta { component, term } => spec
                .components
                .get(component)
                .is_some_and(|c| term < c.beta.len()),
            Self::UseCondition(j) => j < spec.use_condition.len(),
            Self::Alpha => true,
            Self::Threshold(l) => l < spec.r(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSweep(format!(
                "sweep target {self} is out of range"
            )))
        }
    }

    pub fn get(&self, spec: &ModelSpec) -> Result<f64> {
        self.check(spec)?;
        Ok(match *self {
            Self::Beta { component, term } => spec.components[component].beta[term],
            Self::UseCondition(j) => spec.use_condition[j],
            Self::Alpha => spec.alpha,
            Self::Threshold(l) => spec.components[l].threshold,
        })
    }

    /// Copy of `spec` with the target set to `value`.
    pub fn apply(&self, spec: &ModelSpec, value: f64) -> Result<ModelSpec> {
        self.check(spec)?;
        let mut out = spec.clone();
        match *self {
            Self::Beta { component, term } => out.components[component].beta[term] = value,
            Self::UseCondition(j) => out.use_condition[j] = value,
            Self::Alpha => out.alpha = value,
            Self::Threshold(l) => out.components[l].threshold = value,
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub target: SweepTarget,
    pub values: Vec<f64>,
    pub reoptimize: bool,
}

impl SweepSpec {
    /// `start, start + step, ...` up to `stop` inclusive (to rounding).
    pub fn range(
        target: SweepTarget,
        start: f64,
        stop: f64,
        step: f64,
        reoptimize: bool,
    ) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step == 0.0 {
            return Err(Error::InvalidSweep(format!(
                "bad range {start}:{stop}:{step}"
            )));
        }
        let count = (stop - start) / step;
        if count < -1e-9 {
            return Err(Error::InvalidSweep(format!(
                "range {start}:{stop}:{step} is empty"
            )));
        }
        let n = libm::floor(count + 1e-9) as usize;
        let values = (0..=n)
            .map(|i| {
                let v = start + step * i as f64;
                // print as the decimal the user meant
                libm::round(v * 1e12) / 1e12
            })
            .collect();
        Ok(Self {
            target,
            values,
            reoptimize,
        })
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        self.target.check(spec)?;
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("no sweep values".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSweep(format!(
                "sweep value {v} is not finite"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// `F_T(0) >= alpha`; the quantile is zero and efficiencies are undefined.
    Degenerate,
    /// The optimizer stopped before certification.
    NotCertified,
    Failed(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ok => f.write_str("ok"),
            Self::Degenerate => f.write_str("degenerate"),
            Self::NotCertified => f.write_str("not_certified"),
            Self::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: RowStatus,
    pub t_alpha: Option<f64>,
    pub marginal_cdfs_at_quantile: Option<Vec<f64>>,
    /// Re-optimized design at this value.
    pub optimal_design: Option<ApproximateDesign>,
    /// Weights of `optimal_design` on the nominal reported support, followed
    /// by the mass elsewhere.
    pub optimal_weights: Option<Vec<f64>>,
    /// Efficiency of the nominal-value optimum under this value.
    pub efficiency_star: Option<f64>,
    /// Efficiency of the balanced vertex design under this value.
    pub efficiency_bar: Option<f64>,
    pub gap: Option<f64>,
    pub certified: Option<bool>,
}

impl SweepRow {
    fn failed(value: f64, err: impl fmt::Display) -> Self {
        Self {
            value,
            status: RowStatus::Failed(err.to_string()),
            t_alpha: None,
            marginal_cdfs_at_quantile: None,
            optimal_design: None,
            optimal_weights: None,
            efficiency_star: None,
            efficiency_bar: None,
            gap: None,
            certified: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Consolidated optimum under the unmodified nominal values.
    pub nominal_design: ApproximateDesign,
    /// Points labelling `SweepRow::optimal_weights`.
    pub reported_support: Vec<Vec<f64>>,
    pub rows: Vec<SweepRow>,
}

fn sweep_row(
    spec: &ModelSpec,
    sweep: &SweepSpec,
    value: f64,
    nominal: &ApproximateDesign,
    support: &[Vec<f64>],
    options: &OptimizerOptions,
) -> SweepRow {
    let inner = || -> Result<SweepRow> {
        let truth = sweep.target.apply(spec, value)?;
        let model = validate_system(truth)?;
        let ctx = CriterionContext::new(model)?;
        let q = ctx.quantile().clone();
        let mut row = SweepRow {
            value,
            status: RowStatus::Ok,
            t_alpha: Some(q.t),
            marginal_cdfs_at_quantile: Some(q.marginal_cdfs.clone()),
            optimal_design: None,
            optimal_weights: None,
            efficiency_star: None,
            efficiency_bar: None,
            gap: None,
            certified: None,
        };
        if q.degenerate {
            row.status = RowStatus::Degenerate;
            return Ok(row);
        }
        if !sweep.reoptimize {
            return Ok(row);
        }
        let solved = optimize(&ctx, options)?;
        let certified = solved.certified();
        let design = solved.design().clone();
        let opt = ctx.objective(&design)?;
        let star = ctx.objective(nominal)?;
        let bar = ctx.objective(&balanced_vertex_design(&ctx.model().spec().design_region))?;
        let best = opt.min(star).min(bar);
        let mut weights: Vec<f64> = support.iter().map(|x| design.weight_at(x)).collect();
        let other = 1.0 - weights.iter().sum::<f64>();
        weights.push(if other.abs() < 1e-12 { 0.0 } else { other });
        row.efficiency_star = Some(best / star);
        row.efficiency_bar = Some(best / bar);
        row.gap = Some(solved.report.gap);
        row.certified = Some(certified);
        if !certified {
            row.status = RowStatus::NotCertified;
        }
        row.optimal_weights = Some(weights);
        row.optimal_design = Some(design);
        Ok(row)
    };
    inner().unwrap_or_else(|e| SweepRow::failed(value, e))
}

/// Runs the nominal optimization once, then evaluates every sweep value
/// independently. Failures inside a row are reported in its status.
pub fn sweep(
    spec: &ModelSpec,
    sweep: &SweepSpec,
    options: &OptimizerOptions,
) -> Result<SweepResult> {
    sweep.validate(spec)?;
    let ctx = CriterionContext::new(validate_system(spec.clone())?)?;
    let nominal_design = optimize(&ctx, options)?.run.design;
    let reported_support: Vec<Vec<f64>> =
        reported_support(&nominal_design, options.report_threshold)
            .into_iter()
            .map(|(x, _)| x)
            .collect();
    let rows = sweep
        .values
        .iter()
        .map(|&v| sweep_row(spec, sweep, v, &nominal_design, &reported_support, options))
        .collect();
    Ok(SweepResult {
        nominal_design,
        reported_support,
        rows,
    })
}
