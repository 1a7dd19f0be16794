//! Information matrices and the c-criterion for quantile estimation.
//!
//! The gradient of `t_alpha` with respect to the location parameters splits
//! into component blocks `c_l · f_l(x_u, t_alpha)` (up to the common factor
//! `−(∂F_T/∂t)⁻¹`), and the information for `β` is block diagonal, so the
//! criterion of a design `ξ` is `Σ_l c_lᵀ M_βl(ξ)⁻¹ c_l`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::failure::{joint_cdf_partials, FailureSystem, Quantile};
use crate::linalg::{condition_number, dot, Cholesky, Matrix};
use crate::model::{eval_basis, powu, Model};
use crate::normal;

/// Information blocks with a larger spectral condition number count as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Stress settings with nonnegative proportions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateDesign {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ApproximateDesign {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidDesign(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidDesign("design has no support points".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidDesign(
                "support points differ in dimension".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidDesign(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDesign(format!(
                "weights sum to {total}, not 1 (normalization)"
            )));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidDesign(format!(
                        "support point {:?} appears twice",
                        points[i]
                    )));
                }
            }
        }
        Ok(Self { points, weights })
    }

    /// Caller guarantees the invariants (used for grids, which are distinct by
    /// construction, with freshly normalized weights).
    pub(crate) fn from_parts(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), weights.len());
        Self { points, weights }
    }

    /// Equal weights on the given distinct points.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidDesign("design has no support points".into()));
        }
        let weights = alloc::vec![1.0 / n as f64; n];
        let total: f64 = weights.iter().sum();
        Self::new(points, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points
            .iter()
            .map(Vec::as_slice)
            .zip(self.weights.iter().copied())
    }

    /// Weight assigned to `x` (zero when `x` is not a support point).
    pub fn weight_at(&self, x: &[f64]) -> f64 {
        self.iter()
            .filter(|(p, _)| *p == x)
            .fold(0.0, |acc, (_, w)| acc + w)
    }
}

/// `c_l = σ_l(t)⁻¹ φ(h_l(t)) · ∂F_T/∂F_l` at `t = t_alpha`, so that
/// `c_l f_l(x_u, t)` is the gradient of `F_T(t)` in `β_l`.
pub fn c_constants(system: &FailureSystem, t: f64) -> Vec<f64> {
    let marginals = system.marginal_cdfs(t);
    let partials = joint_cdf_partials(&marginals, system.s());
    (0..system.r())
        .map(|l| normal::pdf(system.standardized_margin(l, t)) / system.path_sd(l, t) * partials[l])
        .collect()
}

/// Factorized matrices ready for the criterion and its sensitivity function.
pub(crate) struct InformationState {
    /// `M_βl⁻¹ c_l` per component.
    pub(crate) solved: Vec<Vec<f64>>,
    pub(crate) objective: f64,
}

/// Everything the criterion needs once the nominal values and the quantile
/// are fixed.
#[derive(Debug, Clone)]
pub struct CriterionContext {
    model: Model,
    system: FailureSystem,
    quantile: Quantile,
    c_consts: Vec<f64>,
    c_vectors: Vec<Vec<f64>>,
}

impl CriterionContext {
    pub fn new(model: Model) -> Result<Self> {
        let system = FailureSystem::new(&model)?;
        let quantile = system.quantile(model.spec().alpha)?;
        let c_consts = c_constants(&system, quantile.t);
        let xu = &model.spec().use_condition;
        let c_vectors = (0..model.r())
            .map(|l| {
                let f = eval_basis(&model.component(l).fixed_basis, xu, quantile.t)?;
                Ok(f.into_iter().map(|v| v * c_consts[l]).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            system,
            quantile,
            c_consts,
            c_vectors,
        })
    }

    /// Same context with every `c_l` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.c_consts.iter_mut().for_each(|c| *c *= factor);
        out.c_vectors
            .iter_mut()
            .flatten()
            .for_each(|c| *c *= factor);
        out
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn system(&self) -> &FailureSystem {
        &self.system
    }

    pub fn quantile(&self) -> &Quantile {
        &self.quantile
    }

    pub fn t_alpha(&self) -> f64 {
        self.quantile.t
    }

    pub fn c_constants(&self) -> &[f64] {
        &self.c_consts
    }

    pub fn c_vector(&self, l: usize) -> &[f64] {
        &self.c_vectors[l]
    }

    /// Stacked `c_β = (c_1ᵀ, ..., c_rᵀ)ᵀ`.
    pub fn gradient(&self) -> Vec<f64> {
        self.c_vectors.iter().flatten().copied().collect()
    }

    pub fn r(&self) -> usize {
        self.model.r()
    }

    pub fn stress_dim(&self) -> usize {
        self.model.spec().stress_dim
    }

    /// `F_l(x)ᵀ V_l⁻¹ F_l(x)` for every component.
    pub fn unit_information(&self, x: &[f64]) -> Result<Vec<Matrix>> {
        (0..self.r())
            .map(|l| self.model.unit_information(l, x))
            .collect()
    }

    /// `M_βl(ξ) = Σ_i w_i F_l(x_i)ᵀ V_l⁻¹ F_l(x_i)`
    pub fn info_matrix_component(&self, design: &ApproximateDesign, l: usize) -> Result<Matrix> {
        let p = self.model.component(l).fixed_basis.len();
        let mut m = Matrix::zeros(p, p);
        for (x, w) in design.iter() {
            if w == 0.0 {
                continue;
            }
            m.add_scaled(w, &self.model.unit_information(l, x)?);
        }
        Ok(m)
    }

    pub(crate) fn information_blocks(&self, design: &ApproximateDesign) -> Result<Vec<Matrix>> {
        (0..self.r())
            .map(|l| self.info_matrix_component(design, l))
            .collect()
    }

    pub(crate) fn state_from_blocks(&self, blocks: &[Matrix]) -> Result<InformationState> {
        let mut solved = Vec::with_capacity(blocks.len());
        let mut objective = 0.0;
        for (l, m) in blocks.iter().enumerate() {
            let condition = condition_number(m);
            if !(condition <= CONDITION_LIMIT) {
                return Err(Error::SingularInformation {
                    component: l + 1,
                    condition,
                });
            }
            let ch = Cholesky::new(m).ok_or(Error::SingularInformation {
                component: l + 1,
                condition: f64::INFINITY,
            })?;
            let u = ch.solve(&self.c_vectors[l]);
            objective += dot(&self.c_vectors[l], &u);
            solved.push(u);
        }
        Ok(InformationState { solved, objective })
    }

    /// `d(x, ξ)` from a factorized state and the unit information at `x`.
    pub(crate) fn sensitivity_from(state: &InformationState, unit: &[Matrix]) -> f64 {
        state
            .solved
            .iter()
            .zip(unit)
            .map(|(u, a)| a.quadratic_form(u))
            .sum()
    }

    /// `Σ_l c_lᵀ M_βl(ξ)⁻¹ c_l`
    pub fn objective(&self, design: &ApproximateDesign) -> Result<f64> {
        let blocks = self.information_blocks(design)?;
        Ok(self.state_from_blocks(&blocks)?.objective)
    }

    /// `d(x, ξ) = Σ_l c_lᵀ M_βl⁻¹ F_l(x)ᵀ V_l⁻¹ F_l(x) M_βl⁻¹ c_l`; the
    /// design is optimal iff `max_x d(x, ξ)` equals the criterion value.
    pub fn sensitivity(&self, design: &ApproximateDesign, x: &[f64]) -> Result<f64> {
        Ok(self.sensitivities(design, &[x.to_vec()])?[0])
    }

    pub fn sensitivities(&self, design: &ApproximateDesign, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let blocks = self.information_blocks(design)?;
        let state = self.state_from_blocks(&blocks)?;
        xs.iter()
            .map(|x| Ok(Self::sensitivity_from(&state, &self.unit_information(x)?)))
            .collect()
    }

    /// Location part of the asymptotic variance of `t̂_alpha`, without the
    /// time-scaling factor `(∂F_T/∂t)⁻²` and with the variance-parameter
    /// term taken as zero. Identical to [`Self::objective`].
    pub fn avar(&self, design: &ApproximateDesign) -> Result<f64> {
        self.objective(design)
    }

    /// [`Self::avar`] divided by `(∂F_T/∂t)²` at `t_alpha` (finite differences).
    pub fn scaled_avar(&self, design: &ApproximateDesign) -> Result<f64> {
        let density = self.system.joint_density(self.t_alpha());
        Ok(self.objective(design)? / (density * density))
    }
}

/// `objective(reference) / objective(design)`
pub fn efficiency(
    ctx: &CriterionContext,
    design: &ApproximateDesign,
    reference: &ApproximateDesign,
) -> Result<f64> {
    Ok(ctx.objective(reference)? / ctx.objective(design)?)
}

/// Split of a product-type basis `f(x, t) = f⁽¹⁾(x) ⊗ g(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductStructure {
    /// Stress exponent vectors of `f⁽¹⁾`.
    pub stress_terms: Vec<Vec<u32>>,
    /// Time exponents of `g`.
    pub time_terms: Vec<u32>,
    /// `order[a * q + b]` is the basis index of `f⁽¹⁾_a · g_b`.
    pub order: Vec<usize>,
}

impl ProductStructure {
    pub fn stress_regressors(&self, x: &[f64]) -> Vec<f64> {
        self.stress_terms
            .iter()
            .map(|e| e.iter().zip(x).map(|(&k, &v)| powu(v, k)).product())
            .collect()
    }

    pub fn time_regressors(&self, t: f64) -> Vec<f64> {
        self.time_terms.iter().map(|&e| powu(t, e)).collect()
    }
}

/// Checks the conditions under which the criterion factorizes: identical
/// components (basis, random effects, covariances, error variance) and a
/// fixed basis that is the Kronecker product of a stress basis with `g`.
pub fn product_structure(model: &Model) -> Result<ProductStructure> {
    let first = model.component(0);
    for l in 1..model.r() {
        let c = model.component(l);
        if c.fixed_basis != first.fixed_basis
            || c.random_time_exponents != first.random_time_exponents
            || c.sigma_gamma != first.sigma_gamma
            || model.spec().component_error_variance(l) != model.spec().component_error_variance(0)
        {
            return Err(Error::PreconditionNotMet("components are not identical"));
        }
    }
    let time_terms = first.random_time_exponents.clone();
    let mut stress_terms: Vec<Vec<u32>> = Vec::new();
    for m in &first.fixed_basis {
        if !stress_terms.contains(&m.stress_exponents) {
            stress_terms.push(m.stress_exponents.clone());
        }
    }
    let q = time_terms.len();
    if stress_terms.len() * q != first.fixed_basis.len() {
        return Err(Error::PreconditionNotMet(
            "fixed basis is not of product type",
        ));
    }
    let mut order = Vec::with_capacity(first.fixed_basis.len());
    for s in &stress_terms {
        for &t in &time_terms {
            let idx = first
                .fixed_basis
                .iter()
                .position(|m| &m.stress_exponents == s && m.time_exponent == t)
                .ok_or(Error::PreconditionNotMet(
                    "fixed basis is not of product type",
                ))?;
            order.push(idx);
        }
    }
    Ok(ProductStructure {
        stress_terms,
        time_terms,
        order,
    })
}

/// `M⁽¹⁾(ξ) = Σ_i w_i f⁽¹⁾(x_i) f⁽¹⁾(x_i)ᵀ`
pub fn stress_information(structure: &ProductStructure, design: &ApproximateDesign) -> Matrix {
    let n = structure.stress_terms.len();
    let mut m = Matrix::zeros(n, n);
    for (x, w) in design.iter() {
        let f = structure.stress_regressors(x);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * f[i] * f[j];
            }
        }
    }
    m
}

/// `M⁽²⁾ = Gᵀ V⁻¹ G`, shared by all components.
pub fn time_information(model: &Model) -> Matrix {
    let g = model.random_design_matrix(0);
    g.transpose().matmul(model.covariance_inverse(0)).matmul(&g)
}

/// Criterion through the factorization
/// `Σ_l c_l² · f⁽¹⁾(x_u)ᵀ M⁽¹⁾(ξ)⁻¹ f⁽¹⁾(x_u) · g(t_α)ᵀ (M⁽²⁾)⁻¹ g(t_α)`.
pub fn factorized_objective(ctx: &CriterionContext, design: &ApproximateDesign) -> Result<f64> {
    let model = ctx.model();
    let structure = product_structure(model)?;
    let invert = |m: &Matrix, component: usize| -> Result<Cholesky> {
        let condition = condition_number(m);
        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::SingularInformation {
                component,
                condition,
            });
        }
        Cholesky::new(m).ok_or(Error::SingularInformation {
            component,
            condition,
        })
    };
    let m1 = invert(&stress_information(&structure, design), 1)?;
    let m2 = invert(&time_information(model), 1)?;
    let f1 = structure.stress_regressors(&model.spec().use_condition);
    let g = structure.time_regressors(ctx.t_alpha());
    let stress_part = dot(&f1, &m1.solve(&f1));
    let time_part = dot(&g, &m2.solve(&g));
    let c2: f64 = ctx.c_constants().iter().map(|c| c * c).sum();
    Ok(c2 * stress_part * time_part)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{full_interaction_basis, partial_interaction_basis};
    use crate::model::{validate_system, ComponentSpec, DesignRegion, ModelSpec};
    use alloc::vec;

    fn spec(
        basis: Vec<crate::model::Monomial>,
        betas: &[&[f64]],
        thresholds: &[f64],
        s: usize,
    ) -> ModelSpec {
        ModelSpec {
            components: betas
                .iter()
                .zip(thresholds)
                .map(|(b, &y)| ComponentSpec {
                    fixed_basis: basis.clone(),
                    random_time_exponents: vec![0, 1],
                    sigma_gamma: Matrix::diagonal(&[0.36, 0.10]),
                    beta: b.to_vec(),
                    threshold: y,
                    error_variance: None,
                })
                .collect(),
            error_variance: 0.10,
            time_plan: vec![0.0, 0.5, 1.0],
            stress_dim: 2,
            design_region: DesignRegion::unit_cube(2),
            use_condition: vec![-0.4, -0.2],
            system_s: s,
            alpha: 0.5,
            t_max: 1e6,
        }
    }

    fn table1_ctx() -> CriterionContext {
        let s = spec(
            full_interaction_basis(),
            &[
                &[2.30, 1.60, 1.30, 0.02, 0.70, 0.07, 0.08, 0.03],
                &[2.17, 1.10, 0.84, 0.01, 0.80, 0.03, 0.02, 0.02],
            ],
            &[5.4, 5.8],
            1,
        );
        CriterionContext::new(validate_system(s).unwrap()).unwrap()
    }

    fn vertices() -> Vec<Vec<f64>> {
        DesignRegion::unit_cube(2).vertices()
    }

    #[test]
    fn design_validation() {
        assert!(ApproximateDesign::new(vec![vec![0.0]], vec![1.0]).is_ok());
        assert!(ApproximateDesign::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(ApproximateDesign::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(ApproximateDesign::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn single_point_information() {
        let ctx = table1_ctx();
        let x = vec![0.3, 0.7];
        let d = ApproximateDesign::new(vec![x.clone()], vec![1.0]).unwrap();
        let m = ctx.info_matrix_component(&d, 0).unwrap();
        let f = ctx.model().fixed_design_matrix(0, &x).unwrap();
        let want = f
            .transpose()
            .matmul(ctx.model().covariance_inverse(0))
            .matmul(&f);
        assert_eq!(m, want);
    }

    #[test]
    fn splitting_weight_leaves_information_unchanged() {
        let ctx = table1_ctx();
        let v = vertices();
        let w = [0.4, 0.3, 0.2, 0.1];
        let d = ApproximateDesign::new(v.clone(), w.to_vec()).unwrap();
        let mut split = Matrix::zeros(8, 8);
        for (x, &wi) in v.iter().zip(&w) {
            let a = ctx.model().unit_information(0, x).unwrap();
            split.add_scaled(0.5 * wi, &a);
            split.add_scaled(0.5 * wi, &a);
        }
        assert!(split.max_abs_diff(&ctx.info_matrix_component(&d, 0).unwrap()) < 1e-12);
    }

    #[test]
    fn vertex_design_information_is_nonsingular() {
        let ctx = table1_ctx();
        let d = ApproximateDesign::new(vertices(), vec![0.667, 0.111, 0.190, 0.032]).unwrap();
        let m = ctx.info_matrix_component(&d, 0).unwrap();
        assert_eq!(m.rows(), 8);
        assert!(condition_number(&m) < CONDITION_LIMIT);
    }

    #[test]
    fn objective_scales_quadratically_in_c() {
        let ctx = table1_ctx();
        let d = ApproximateDesign::uniform(vertices()).unwrap();
        let base = ctx.objective(&d).unwrap();
        let twice = ctx.scaled(2.0).objective(&d).unwrap();
        assert!((twice / base - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_point_leaves_objective_unchanged() {
        let ctx = table1_ctx();
        let mut pts = vertices();
        let d = ApproximateDesign::new(pts.clone(), vec![0.6, 0.1, 0.2, 0.1]).unwrap();
        pts.push(vec![0.5, 0.5]);
        let e = ApproximateDesign::new(pts, vec![0.6, 0.1, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!(ctx.objective(&d).unwrap(), ctx.objective(&e).unwrap());
    }

    #[test]
    fn singular_design_is_reported() {
        let ctx = table1_ctx();
        let d = ApproximateDesign::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(
            ctx.objective(&d),
            Err(Error::SingularInformation { component: 1, .. })
        ));
    }

    #[test]
    fn sensitivity_positive_and_averages_to_objective() {
        let ctx = table1_ctx();
        let d = ApproximateDesign::new(vertices(), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let obj = ctx.objective(&d).unwrap();
        let s = ctx.sensitivities(&d, d.points()).unwrap();
        let avg: f64 = s.iter().zip(d.weights()).map(|(a, w)| a * w).sum();
        assert!((avg / obj - 1.0).abs() < 1e-10);
        assert!(ctx.sensitivity(&d, &[0.5, 0.25]).unwrap() > 0.0);
    }

    #[test]
    fn efficiency_is_one_for_reference_and_scale_free() {
        let ctx = table1_ctx();
        let a = ApproximateDesign::new(vertices(), vec![0.667, 0.111, 0.190, 0.032]).unwrap();
        let b = ApproximateDesign::uniform(vertices()).unwrap();
        assert_eq!(efficiency(&ctx, &a, &a).unwrap(), 1.0);
        let e1 = efficiency(&ctx, &b, &a).unwrap();
        let e2 = efficiency(&ctx.scaled(-3.5), &b, &a).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
        assert!(e1 < 1.0);
    }

    #[test]
    fn avar_matches_objective_and_ignores_order() {
        let ctx = table1_ctx();
        let a = ApproximateDesign::new(vertices(), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let mut pts = vertices();
        pts.reverse();
        let b = ApproximateDesign::new(pts, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(ctx.avar(&a).unwrap(), ctx.objective(&a).unwrap());
        assert!((ctx.avar(&a).unwrap() / ctx.avar(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!(ctx.scaled_avar(&a).unwrap() > 0.0);
    }

    #[test]
    fn factorized_objective_requires_product_basis() {
        let s = spec(
            partial_interaction_basis(),
            &[&[3.80, 0.52, 0.72, 2.00, 0.67]],
            &[7.5],
            1,
        );
        let ctx = CriterionContext::new(validate_system(s).unwrap()).unwrap();
        let d = ApproximateDesign::uniform(vertices()).unwrap();
        assert!(matches!(
            factorized_objective(&ctx, &d),
            Err(Error::PreconditionNotMet(_))
        ));
    }

    #[test]
    fn factorized_objective_requires_identical_components() {
        let mut s = spec(
            full_interaction_basis(),
            &[
                &[2.3, 1.6, 1.3, 0.02, 0.7, 0.07, 0.08, 0.03],
                &[2.17, 1.1, 0.84, 0.01, 0.8, 0.03, 0.02, 0.02],
            ],
            &[5.4, 5.8],
            1,
        );
        s.components[1].sigma_gamma = Matrix::diagonal(&[0.30, 0.10]);
        let ctx = CriterionContext::new(validate_system(s).unwrap()).unwrap();
        let d = ApproximateDesign::uniform(vertices()).unwrap();
        assert!(matches!(
            factorized_objective(&ctx, &d),
            Err(Error::PreconditionNotMet(_))
        ));
    }

    #[test]
    fn two_out_of_three_constant_vanishes_without_partner_failures() {
        use crate::failure::TimePolynomial;
        // components 2 and 3 sit far below their thresholds
        let sys = FailureSystem::from_parts(
            vec![
                TimePolynomial::new(vec![5.0, 1.0]),
                TimePolynomial::new(vec![-1e3, 0.0]),
                TimePolynomial::new(vec![-1e3, 0.0]),
            ],
            vec![TimePolynomial::new(vec![0.36, 0.0, 0.1]); 3],
            vec![6.0, 6.0, 6.0],
            2,
            1e6,
        )
        .unwrap();
        let c = c_constants(&sys, 1.0);
        assert_eq!(c[0], 0.0);
    }
}
