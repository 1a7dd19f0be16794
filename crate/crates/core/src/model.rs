//! Multivariate linear mixed-effects degradation model.
//!
//! Component `l` of unit `i` measured at time `t_j` under stress `x_i` reads
//! `y = f_l(x_i, t_j)ᵀ β_l + g_l(t_j)ᵀ γ_il + ε`, with unit random effects
//! `γ_il ~ N(0, Σ_γl)` entering through pure-time functions and
//! measurement error `ε ~ N(0, σ_ε²)`. Each unit contributes the `k`
//! measurements of the time plan, so per component the marginal law of a
//! unit's response vector is `N(F_l β_l, V_l)` with
//! `V_l = G_l Σ_γl G_lᵀ + σ_ε² I_k`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result, ValidationError, ValidationErrors};
use crate::linalg::{symmetric_eigenvalues, Cholesky, Matrix};

/// Relative eigenvalue floor for the positive-definiteness checks.
pub const PD_RELATIVE_TOLERANCE: f64 = 1e-10;

/// `∏_j x_j^{e_j} · t^{e_t}`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub stress_exponents: Vec<u32>,
    pub time_exponent: u32,
}

impl Monomial {
    pub fn new(stress_exponents: Vec<u32>, time_exponent: u32) -> Self {
        Self {
            stress_exponents,
            time_exponent,
        }
    }

    /// Constant term in `d` stress variables.
    pub fn constant(d: usize) -> Self {
        Self::new(alloc::vec![0; d], 0)
    }

    pub fn is_pure_time(&self) -> bool {
        self.stress_exponents.iter().all(|&e| e == 0)
    }

    /// Stress part only, `∏_j x_j^{e_j}`.
    pub fn eval_stress(&self, x: &[f64]) -> f64 {
        self.stress_exponents
            .iter()
            .zip(x)
            .map(|(&e, &xj)| powu(xj, e))
            .product()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        self.eval_stress(x) * powu(t, self.time_exponent)
    }
}

/// `x^e` with `0^0 = 1`.
#[inline]
pub fn powu(x: f64, e: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub fixed_basis: Vec<Monomial>,
    /// `g_l(t)` lists the powers `t^e` for these exponents.
    pub random_time_exponents: Vec<u32>,
    pub sigma_gamma: Matrix,
    pub beta: Vec<f64>,
    pub threshold: f64,
    /// Overrides [`ModelSpec::error_variance`] for this component.
    pub error_variance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Rectangular design region, one closed interval per stress variable.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRegion(pub Vec<Interval>);

impl DesignRegion {
    pub fn unit_cube(d: usize) -> Self {
        Self(alloc::vec![Interval::unit(); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn axes(&self) -> &[Interval] {
        &self.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.0.len() && self.0.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    /// All `2^d` corners, first axis varying slowest.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..(1usize << d))
            .map(|mask| {
                (0..d)
                    .map(|j| {
                        let bit = (mask >> (d - 1 - j)) & 1;
                        if bit == 1 {
                            self.0[j].hi
                        } else {
                            self.0[j].lo
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub components: Vec<ComponentSpec>,
    pub error_variance: f64,
    pub time_plan: Vec<f64>,
    pub stress_dim: usize,
    pub design_region: DesignRegion,
    pub use_condition: Vec<f64>,
    pub system_s: usize,
    pub alpha: f64,
    /// Upper end of the quantile search interval.
    pub t_max: f64,
}

impl ModelSpec {
    pub const DEFAULT_T_MAX: f64 = 1e6;

    pub fn r(&self) -> usize {
        self.components.len()
    }

    pub fn component_error_variance(&self, l: usize) -> f64 {
        self.components[l]
            .error_variance
            .unwrap_or(self.error_variance)
    }
}

/// `F_l(x, t)`, `G_l(t)` and `V_l` for one component at one stress point.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    pub fixed: Matrix,
    pub random: Matrix,
    pub covariance: Matrix,
}

pub fn eval_basis(basis: &[Monomial], x: &[f64], t: f64) -> Result<Vec<f64>> {
    for m in basis {
        if m.stress_exponents.len() != x.len() {
            return Err(Error::DimensionMismatch {
                what: "stress vector",
                expected: m.stress_exponents.len(),
                found: x.len(),
            });
        }
    }
    Ok(basis.iter().map(|m| m.eval(x, t)).collect())
}

/// Rows are `f_l(x, t_j)ᵀ`.
pub fn fixed_design_matrix(
    component: &ComponentSpec,
    x: &[f64],
    time_plan: &[f64],
) -> Result<Matrix> {
    let p = component.fixed_basis.len();
    let mut data = Vec::with_capacity(time_plan.len() * p);
    for &t in time_plan {
        data.extend(eval_basis(&component.fixed_basis, x, t)?);
    }
    Ok(Matrix::from_row_major(time_plan.len(), p, data))
}

/// Rows are `g_l(t_j)ᵀ`.
pub fn random_design_matrix(component: &ComponentSpec, time_plan: &[f64]) -> Matrix {
    let q = component.random_time_exponents.len();
    let mut data = Vec::with_capacity(time_plan.len() * q);
    for &t in time_plan {
        data.extend(component.random_time_exponents.iter().map(|&e| powu(t, e)));
    }
    Matrix::from_row_major(time_plan.len(), q, data)
}

/// `V_l = G_l Σ_γl G_lᵀ + σ_ε² I_k`
pub fn unit_covariance(
    component: &ComponentSpec,
    time_plan: &[f64],
    error_variance: f64,
) -> Matrix {
    let g = random_design_matrix(component, time_plan);
    let mut v = g.matmul(&component.sigma_gamma).matmul(&g.transpose());
    v.add_diagonal(error_variance);
    v
}

pub fn design_matrices(
    component: &ComponentSpec,
    x: &[f64],
    time_plan: &[f64],
    error_variance: f64,
) -> Result<DesignMatrices> {
    Ok(DesignMatrices {
        fixed: fixed_design_matrix(component, x, time_plan)?,
        random: random_design_matrix(component, time_plan),
        covariance: unit_covariance(component, time_plan, error_variance),
    })
}

/// A [`ModelSpec`] that passed validation, together with the inverted unit
/// covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    covariances: Vec<Matrix>,
    covariance_inverses: Vec<Matrix>,
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ModelSpec {
        self.spec
    }

    pub fn r(&self) -> usize {
        self.spec.components.len()
    }

    pub fn component(&self, l: usize) -> &ComponentSpec {
        &self.spec.components[l]
    }

    pub fn covariance(&self, l: usize) -> &Matrix {
        &self.covariances[l]
    }

    pub fn covariance_inverse(&self, l: usize) -> &Matrix {
        &self.covariance_inverses[l]
    }

    pub fn fixed_design_matrix(&self, l: usize, x: &[f64]) -> Result<Matrix> {
        fixed_design_matrix(self.component(l), x, &self.spec.time_plan)
    }

    pub fn random_design_matrix(&self, l: usize) -> Matrix {
        random_design_matrix(self.component(l), &self.spec.time_plan)
    }

    /// Per-unit information `F_l(x)ᵀ V_l⁻¹ F_l(x)` of a single stress point.
    pub fn unit_information(&self, l: usize, x: &[f64]) -> Result<Matrix> {
        let f = self.fixed_design_matrix(l, x)?;
        Ok(f.transpose().matmul(self.covariance_inverse(l)).matmul(&f))
    }
}

fn check_pd(what: &str, m: &Matrix, errors: &mut Vec<ValidationError>) -> bool {
    if !m.is_square() || m.rows() == 0 {
        errors.push(ValidationError::DimensionMismatch {
            what: format!("{what} (square)"),
            expected: m.rows(),
            found: m.cols(),
        });
        return false;
    }
    if m.max_asymmetry() > 1e-12 {
        errors.push(ValidationError::NotPositiveDefinite {
            what: format!("{what} is not symmetric"),
            min_eigenvalue: f64::NAN,
            max_eigenvalue: f64::NAN,
        });
        return false;
    }
    let eig = symmetric_eigenvalues(m);
    let lo = eig[0];
    let hi = eig[eig.len() - 1];
    if !(hi > 0.0 && lo > PD_RELATIVE_TOLERANCE * hi) {
        errors.push(ValidationError::NotPositiveDefinite {
            what: alloc::string::String::from(what),
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        });
        return false;
    }
    true
}

/// Checks every invariant of `spec` and collects all violations.
pub fn validate_system(spec: ModelSpec) -> core::result::Result<Model, ValidationErrors> {
    let mut errors = Vec::new();
    let d = spec.stress_dim;
    let r = spec.components.len();

    if r == 0 {
        errors.push(ValidationError::EmptyModel);
    }
    if d == 0 {
        errors.push(ValidationError::DimensionMismatch {
            what: "stress_dim".into(),
            expected: 1,
            found: 0,
        });
    }
    if spec.time_plan.is_empty() {
        errors.push(ValidationError::BadTimePlan("time plan is empty".into()));
    } else {
        if spec.time_plan.iter().any(|t| !t.is_finite()) || spec.time_plan[0] < 0.0 {
            errors.push(ValidationError::BadTimePlan(
                "time points must be finite and t_1 >= 0".into(),
            ));
        }
        if spec.time_plan.windows(2).any(|w| !(w[1] > w[0])) {
            errors.push(ValidationError::BadTimePlan(format!(
                "time plan {:?} is not strictly increasing",
                spec.time_plan
            )));
        }
    }
    if !(spec.error_variance > 0.0 && spec.error_variance.is_finite()) {
        errors.push(ValidationError::NonFinite(format!(
            "error variance {} must be positive",
            spec.error_variance
        )));
    }
    if r > 0 && !(1..=r).contains(&spec.system_s) {
        errors.push(ValidationError::BadSystemOrder {
            s: spec.system_s,
            r,
        });
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        errors.push(ValidationError::BadAlpha(spec.alpha));
    }
    if !(spec.t_max > 0.0) {
        errors.push(ValidationError::NonFinite(format!(
            "t_max = {} must be positive",
            spec.t_max
        )));
    }
    if spec.use_condition.len() != d {
        errors.push(ValidationError::DimensionMismatch {
            what: "use_condition".into(),
            expected: d,
            found: spec.use_condition.len(),
        });
    }
    if spec.use_condition.iter().any(|v| !v.is_finite()) {
        errors.push(ValidationError::NonFinite("use_condition".into()));
    }
    if spec.design_region.dim() != d {
        errors.push(ValidationError::DimensionMismatch {
            what: "design_region".into(),
            expected: d,
            found: spec.design_region.dim(),
        });
    }
    for (j, iv) in spec.design_region.axes().iter().enumerate() {
        if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
            errors.push(ValidationError::BadRegion(format!(
                "axis {} interval [{}, {}] is empty or not finite",
                j + 1,
                iv.lo,
                iv.hi
            )));
        }
    }

    for (l, c) in spec.components.iter().enumerate() {
        let name = l + 1;
        if c.fixed_basis.is_empty() {
            errors.push(ValidationError::DimensionMismatch {
                what: format!("component {name} fixed_basis"),
                expected: 1,
                found: 0,
            });
        }
        for (q, m) in c.fixed_basis.iter().enumerate() {
            if m.stress_exponents.len() != d {
                errors.push(ValidationError::DimensionMismatch {
                    what: format!("component {name} basis term {} exponents", q + 1),
                    expected: d,
                    found: m.stress_exponents.len(),
                });
            }
        }
        if c.beta.len() != c.fixed_basis.len() {
            errors.push(ValidationError::DimensionMismatch {
                what: format!("component {name} beta"),
                expected: c.fixed_basis.len(),
                found: c.beta.len(),
            });
        }
        if c.beta.iter().any(|b| !b.is_finite()) || !c.threshold.is_finite() {
            errors.push(ValidationError::NonFinite(format!(
                "component {name} beta / threshold"
            )));
        }
        if let Some(ev) = c.error_variance {
            if !(ev > 0.0 && ev.is_finite()) {
                errors.push(ValidationError::NonFinite(format!(
                    "component {name} error variance {ev} must be positive"
                )));
            }
        }
        let q = c.random_time_exponents.len();
        if q == 0 {
            errors.push(ValidationError::DimensionMismatch {
                what: format!("component {name} random_time_exponents"),
                expected: 1,
                found: 0,
            });
        }
        if c.sigma_gamma.rows() != q || c.sigma_gamma.cols() != q {
            errors.push(ValidationError::DimensionMismatch {
                what: format!("component {name} sigma_gamma"),
                expected: q,
                found: c.sigma_gamma.rows(),
            });
        } else if q > 0 && c.sigma_gamma.is_finite() {
            check_pd(
                &format!("component {name} sigma_gamma"),
                &c.sigma_gamma,
                &mut errors,
            );
        } else if q > 0 {
            errors.push(ValidationError::NonFinite(format!(
                "component {name} sigma_gamma"
            )));
        }
        for &e in &c.random_time_exponents {
            let spanned = c
                .fixed_basis
                .iter()
                .any(|m| m.time_exponent == e && m.is_pure_time());
            if !spanned {
                errors.push(ValidationError::SpanViolation {
                    component: name,
                    exponent: e,
                });
            }
        }
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let mut covariances = Vec::with_capacity(r);
    let mut covariance_inverses = Vec::with_capacity(r);
    for (l, c) in spec.components.iter().enumerate() {
        let v = unit_covariance(c, &spec.time_plan, spec.component_error_variance(l));
        if !check_pd(
            &format!("component {} covariance V", l + 1),
            &v,
            &mut errors,
        ) {
            continue;
        }
        match Cholesky::new(&v) {
            Some(ch) => {
                covariance_inverses.push(ch.inverse());
                covariances.push(v);
            }
            None => errors.push(ValidationError::NotPositiveDefinite {
                what: format!("component {} covariance V", l + 1),
                min_eigenvalue: f64::NAN,
                max_eigenvalue: f64::NAN,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    Ok(Model {
        spec,
        covariances,
        covariance_inverses,
    })
}
