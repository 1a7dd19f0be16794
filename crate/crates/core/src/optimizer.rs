//! Multiplicative algorithm and equivalence-theorem certification.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::criterion::{ApproximateDesign, CriterionContext};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::DesignRegion;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub grid_step: f64,
    pub max_iterations: usize,
    /// Relative objective decrease per iteration below which the run may stop.
    pub convergence_tol: f64,
    /// Largest accepted relative gap `max_x d(x, ξ) / Ψ(ξ) − 1`.
    pub equivalence_tol: f64,
    /// Weights below this are zeroed after the run.
    pub prune_threshold: f64,
    /// Smallest weight kept in a reported design.
    pub report_threshold: f64,
    /// Exponent of the multiplicative update. 1/2 is the square-root update
    /// for c-criteria; 1 can cycle between two designs.
    pub power: f64,
    pub grid_cap: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid_step: 0.05,
            max_iterations: 100_000,
            convergence_tol: 1e-9,
            equivalence_tol: 1e-6,
            prune_threshold: 1e-8,
            report_threshold: 1e-3,
            power: 0.5,
            grid_cap: 1_000_000,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grid_step", self.grid_step),
            ("convergence_tol", self.convergence_tol),
            ("equivalence_tol", self.equivalence_tol),
            ("prune_threshold", self.prune_threshold),
            ("report_threshold", self.report_threshold),
            ("power", self.power),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "option {name} = {v} must be positive"
                )));
            }
        }
        if self.max_iterations == 0 || self.grid_cap == 0 {
            return Err(Error::InvalidGrid(
                "max_iterations and grid_cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of checking a design against the equivalence theorem.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub objective_value: f64,
    pub max_sensitivity: f64,
    pub argmax_point: Vec<f64>,
    /// `max_sensitivity / objective_value − 1`
    pub gap: f64,
    pub support_sensitivities: Vec<f64>,
    pub tolerance: f64,
    pub certified: bool,
}

/// Cartesian lattice with spacing `step` on every axis, endpoints included,
/// first axis varying slowest.
pub fn make_grid(region: &DesignRegion, step: f64, cap: usize) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "grid step {step} must be positive"
        )));
    }
    let mut axes = Vec::with_capacity(region.dim());
    let mut size: usize = 1;
    for (j, iv) in region.axes().iter().enumerate() {
        let cells = (iv.hi - iv.lo) / step;
        let n = libm::round(cells);
        if (cells - n).abs() > 1e-9 * cells.max(1.0) || n < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "step {step} does not divide axis {} of length {}",
                j + 1,
                iv.hi - iv.lo
            )));
        }
        let n = n as usize;
        size = size.saturating_mul(n + 1);
        if size > cap {
            return Err(Error::GridTooLarge { size, cap });
        }
        let ticks: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    iv.hi
                } else {
                    iv.lo + (iv.hi - iv.lo) * (i as f64 / n as f64)
                }
            })
            .collect();
        axes.push(ticks);
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for ticks in &axes {
        let mut next = Vec::with_capacity(grid.len() * ticks.len());
        for prefix in &grid {
            for &v in ticks {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        grid = next;
    }
    Ok(grid)
}

/// Default verification grid: the optimization grid refined twice per axis.
pub fn verification_grid(
    region: &DesignRegion,
    options: &OptimizerOptions,
) -> Result<Vec<Vec<f64>>> {
    make_grid(region, options.grid_step / 2.0, options.grid_cap)
}

pub fn equivalence_report(
    ctx: &CriterionContext,
    design: &ApproximateDesign,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<EquivalenceReport> {
    let blocks = ctx.information_blocks(design)?;
    let state = ctx.state_from_blocks(&blocks)?;
    let objective = state.objective;
    let support_sensitivities = design
        .points()
        .iter()
        .map(|x| {
            Ok(CriterionContext::sensitivity_from(
                &state,
                &ctx.unit_information(x)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut max_sensitivity = f64::NEG_INFINITY;
    let mut argmax_point = Vec::new();
    let candidates = grid.iter().zip(core::iter::repeat(None)).chain(
        design
            .points()
            .iter()
            .zip(support_sensitivities.iter().map(Some)),
    );
    for (x, known) in candidates {
        let d = match known {
            Some(&d) => d,
            None => CriterionContext::sensitivity_from(&state, &ctx.unit_information(x)?),
        };
        if d > max_sensitivity {
            max_sensitivity = d;
            argmax_point = x.clone();
        }
    }
    let gap = max_sensitivity / objective - 1.0;
    Ok(EquivalenceReport {
        objective_value: objective,
        max_sensitivity,
        argmax_point,
        gap,
        support_sensitivities,
        tolerance,
        certified: gap <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// Candidates whose weight survived pruning, in candidate order.
    pub design: ApproximateDesign,
    pub iterations: usize,
    /// Both stopping conditions met before `max_iterations`.
    pub converged: bool,
    /// Certification of `design` over the candidate set.
    pub report: EquivalenceReport,
    /// Criterion value at the start of every iteration.
    pub objective_log: Vec<f64>,
    /// No iteration increased the criterion (relative slack 1e-10). Only
    /// guaranteed for `power <= 1/2`.
    pub monotone: bool,
}

fn assemble(units: &[Vec<Matrix>], weights: &[f64], r: usize) -> Vec<Matrix> {
    let mut blocks: Vec<Matrix> = (0..r)
        .map(|l| {
            let p = units[0][l].rows();
            Matrix::zeros(p, p)
        })
        .collect();
    for (unit, &w) in units.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (b, a) in blocks.iter_mut().zip(unit) {
            b.add_scaled(w, a);
        }
    }
    blocks
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
}

/// Multiplicative algorithm `w_i ← w_i (d(x_i, ξ) / Ψ(ξ))^λ` from the uniform
/// design on `candidates`.
pub fn multiplicative(
    ctx: &CriterionContext,
    candidates: &[Vec<f64>],
    options: &OptimizerOptions,
) -> Result<OptimizationResult> {
    options.validate()?;
    if candidates.is_empty() {
        return Err(Error::InvalidDesign("no candidate points".into()));
    }
    let r = ctx.r();
    let units = candidates
        .iter()
        .map(|x| ctx.unit_information(x))
        .collect::<Result<Vec<_>>>()?;
    let n = candidates.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut state = ctx
        .state_from_blocks(&assemble(&units, &weights, r))
        .map_err(|e| Error::Infeasible(format!("{e}")))?;

    let mut log = Vec::new();
    let mut monotone = true;
    let mut converged = false;
    let mut best = (f64::INFINITY, weights.clone());
    let mut d = vec![0.0; n];
    let mut iterations = 0;
    while iterations < options.max_iterations {
        let objective = state.objective;
        for (di, unit) in d.iter_mut().zip(&units) {
            *di = CriterionContext::sensitivity_from(&state, unit).max(0.0);
        }
        let max_d = d.iter().copied().fold(0.0, f64::max);
        let gap = max_d / objective - 1.0;
        if let Some(&prev) = log.last() {
            if objective > prev * (1.0 + 1e-10) {
                monotone = false;
            }
            let decrease = (prev - objective) / prev;
            if decrease <= options.convergence_tol && gap <= options.equivalence_tol {
                converged = true;
                log.push(objective);
                if objective <= best.0 {
                    best = (objective, weights.clone());
                }
                break;
            }
        }
        log.push(objective);
        if objective <= best.0 {
            best = (objective, weights.clone());
        }
        for (w, &di) in weights.iter_mut().zip(&d) {
            let ratio = di / objective;
            *w *= if options.power == 1.0 {
                ratio
            } else {
                libm::pow(ratio, options.power)
            };
        }
        normalize(&mut weights);
        iterations += 1;
        // the iterates can approach a singular optimum
        match ctx.state_from_blocks(&assemble(&units, &weights, r)) {
            Ok(next) => state = next,
            Err(Error::SingularInformation { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    if !converged {
        weights = best.1;
    }

    for w in weights.iter_mut() {
        if *w < options.prune_threshold {
            *w = 0.0;
        }
    }
    normalize(&mut weights);
    let (points, kept): (Vec<_>, Vec<_>) = candidates
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(x, &w)| (x.clone(), w))
        .unzip();
    let design = ApproximateDesign::from_parts(points, kept);
    let report = equivalence_report(ctx, &design, candidates, options.equivalence_tol)?;
    Ok(OptimizationResult {
        design,
        iterations,
        converged,
        report,
        objective_log: log,
        monotone,
    })
}

/// Optimized and certified design on the default grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub run: OptimizationResult,
    /// Certification of `run.design` on the verification grid.
    pub report: EquivalenceReport,
    pub verification_points: usize,
}

impl Solution {
    pub fn design(&self) -> &ApproximateDesign {
        &self.run.design
    }

    pub fn certified(&self) -> bool {
        self.run.converged && self.report.certified
    }
}

/// Multiplicative algorithm on the `grid_step` lattice of the design region,
/// certified on the refined lattice.
pub fn optimize(ctx: &CriterionContext, options: &OptimizerOptions) -> Result<Solution> {
    let region = &ctx.model().spec().design_region;
    let grid = make_grid(region, options.grid_step, options.grid_cap)?;
    let run = multiplicative(ctx, &grid, options)?;
    let fine = verification_grid(region, options)?;
    let report = equivalence_report(ctx, &run.design, &fine, options.equivalence_tol)?;
    Ok(Solution {
        run,
        report,
        verification_points: fine.len(),
    })
}

/// Support points carrying at least `threshold`, with their weights unchanged.
pub fn reported_support(design: &ApproximateDesign, threshold: f64) -> Vec<(Vec<f64>, f64)> {
    design
        .iter()
        .filter(|&(_, w)| w >= threshold)
        .map(|(x, w)| (x.to_vec(), w))
        .collect()
}

/// Closed-form design for extrapolation in a product of simple linear
/// regressions `(1, x_j)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDesign {
    pub design: ApproximateDesign,
    /// Weight on `x_j = 1` of each marginal design.
    pub marginal_weights: Vec<f64>,
    /// Every coordinate of `x_u` lies outside `[0, 1]`; otherwise the formula
    /// is no longer optimal.
    pub extrapolation: bool,
}

pub fn product_extrapolation_design(use_condition: &[f64]) -> Result<ProductDesign> {
    if use_condition.is_empty() || use_condition.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDesign(
            "use condition must be finite and nonempty".into(),
        ));
    }
    let marginal_weights: Vec<f64> = use_condition
        .iter()
        .map(|&x| {
            let a = x.abs();
            a / (1.0 + 2.0 * a)
        })
        .collect();
    let extrapolation = use_condition.iter().all(|&x| !(0.0..=1.0).contains(&x));
    let vertices = DesignRegion::unit_cube(use_condition.len()).vertices();
    let weights: Vec<f64> = vertices
        .iter()
        .map(|v| {
            v.iter()
                .zip(&marginal_weights)
                .map(|(&c, &w)| if c == 1.0 { w } else { 1.0 - w })
                .product()
        })
        .collect();
    Ok(ProductDesign {
        design: ApproximateDesign::from_parts(vertices, weights),
        marginal_weights,
        extrapolation,
    })
}

/// Drops weights below `threshold`, renormalizes and, when a grid is given,
/// merges points closer than half a step into their weighted centroid
/// snapped to the grid.
pub fn consolidate(
    design: &ApproximateDesign,
    threshold: f64,
    grid: Option<(&DesignRegion, f64)>,
) -> Result<ApproximateDesign> {
    let mut kept: Vec<(Vec<f64>, f64)> = design
        .iter()
        .filter(|&(_, w)| w >= threshold)
        .map(|(x, w)| (x.to_vec(), w))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySupport(threshold));
    }
    if let Some((region, step)) = grid {
        // heaviest points seed the clusters
        let mut order: Vec<usize> = (0..kept.len()).collect();
        order.sort_by(|&a, &b| kept[b].1.total_cmp(&kept[a].1).then(a.cmp(&b)));
        let mut clusters: Vec<(Vec<f64>, Vec<f64>, f64, usize)> = Vec::new();
        for i in order {
            let (x, w) = &kept[i];
            let near = clusters.iter_mut().find(|(seed, _, _, _)| {
                seed.iter().zip(x).all(|(a, b)| (a - b).abs() < 0.5 * step)
            });
            match near {
                Some((_, acc, total, first)) => {
                    acc.iter_mut().zip(x).for_each(|(a, b)| *a += w * b);
                    *total += w;
                    *first = (*first).min(i);
                }
                None => clusters.push((x.clone(), x.iter().map(|v| v * w).collect(), *w, i)),
            }
        }
        // restore the input order of the surviving points
        clusters.sort_by_key(|c| c.3);
        let merged: Vec<(Vec<f64>, f64)> = clusters
            .into_iter()
            .map(|(seed, acc, total, _)| {
                let centroid: Vec<f64> = acc
                    .iter()
                    .zip(region.axes())
                    .map(|(a, iv)| {
                        let c = a / total;
                        let cells = libm::round((iv.hi - iv.lo) / step);
                        let k = libm::round((c - iv.lo) / step).clamp(0.0, cells);
                        if k == cells {
                            iv.hi
                        } else {
                            iv.lo + (iv.hi - iv.lo) * (k / cells)
                        }
                    })
                    .collect();
                // a lone point keeps its exact coordinates
                let point = if seed
                    .iter()
                    .zip(&centroid)
                    .all(|(a, b)| (a - b).abs() < 1e-12 * a.abs().max(1.0))
                {
                    seed
                } else {
                    centroid
                };
                (point, total)
            })
            .collect();
        // snapping may land two clusters on one lattice point
        let mut dedup: Vec<(Vec<f64>, f64)> = Vec::new();
        for (x, w) in merged {
            match dedup.iter_mut().find(|(p, _)| *p == x) {
                Some((_, acc)) => *acc += w,
                None => dedup.push((x, w)),
            }
        }
        kept = dedup;
    }
    let total: f64 = kept.iter().map(|(_, w)| w).sum();
    let (points, weights): (Vec<_>, Vec<_>) = kept.into_iter().map(|(x, w)| (x, w / total)).unzip();
    ApproximateDesign::new(points, weights)
}
