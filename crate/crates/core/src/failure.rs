//! Soft-failure time distributions under normal use.
//!
//! At the use condition `x_u` the unit-specific path of component `l` is
//! `μ_l(t) + g_l(t)ᵀ γ`, so the component has failed by time `t` with
//! probability `Φ((μ_l(t) − y_l0) / σ_l(t))` where
//! `σ_l²(t) = g_l(t)ᵀ Σ_γl g_l(t)`. Components fail independently and the
//! system fails once `s` of them have.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::normal;

/// Absolute bisection tolerance on the time axis.
pub const QUANTILE_TIME_TOL: f64 = 1e-12;

/// `Σ_m coefficients[m] · t^m`
#[derive(Debug, Clone, PartialEq)]
pub struct TimePolynomial {
    pub coefficients: Vec<f64>,
}

impl TimePolynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + c)
    }

    /// Highest power with a nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coefficients.iter().rposition(|&c| c != 0.0)
    }

    pub fn coefficient(&self, m: usize) -> f64 {
        self.coefficients.get(m).copied().unwrap_or(0.0)
    }
}

/// Aggregate degradation path `μ_l(t) = f_l(x_u, t)ᵀ β_l` at the use condition.
pub fn mean_path(model: &Model, l: usize) -> TimePolynomial {
    let c = model.component(l);
    let xu = &model.spec().use_condition;
    let top = c
        .fixed_basis
        .iter()
        .map(|m| m.time_exponent)
        .max()
        .unwrap_or(0) as usize;
    let mut coef = vec![0.0; top + 1];
    for (m, b) in c.fixed_basis.iter().zip(&c.beta) {
        coef[m.time_exponent as usize] += b * m.eval_stress(xu);
    }
    TimePolynomial::new(coef)
}

/// `σ_l²(t) = g_l(t)ᵀ Σ_γl g_l(t)` expanded in powers of `t`.
pub fn path_variance(model: &Model, l: usize) -> TimePolynomial {
    let c = model.component(l);
    let e = &c.random_time_exponents;
    let top = e.iter().max().copied().unwrap_or(0) as usize;
    let mut coef = vec![0.0; 2 * top + 1];
    for (a, &ea) in e.iter().enumerate() {
        for (b, &eb) in e.iter().enumerate() {
            coef[(ea + eb) as usize] += c.sigma_gamma[(a, b)];
        }
    }
    TimePolynomial::new(coef)
}

/// Elementary symmetric polynomials `e_0, ..., e_n` of `values`.
fn elementary_symmetric(values: impl Iterator<Item = f64>, n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    let mut seen = 0;
    for v in values {
        seen += 1;
        for k in (1..=seen).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Probability that at least `s` of the independent components have failed,
/// by inclusion–exclusion over the joint-failure probabilities
/// `F_D = ∏_{d∈D} F_d`: `Σ_{m=0}^{r−s} (−1)^m C(m+s−1, m) Σ_{|D|=m+s} F_D`.
///
/// The inner subset sums are elementary symmetric polynomials.
pub fn joint_cdf_from_marginals(marginals: &[f64], s: usize) -> f64 {
    let r = marginals.len();
    assert!(s >= 1 && s <= r, "system order out of range");
    let e = elementary_symmetric(marginals.iter().copied(), r);
    let mut acc = 0.0;
    for m in 0..=r - s {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binomial(m + s - 1, m) * e[m + s];
    }
    acc
}

/// `∂F_T/∂F_l` of [`joint_cdf_from_marginals`] for every component.
pub fn joint_cdf_partials(marginals: &[f64], s: usize) -> Vec<f64> {
    let r = marginals.len();
    (0..r)
        .map(|l| {
            let others = marginals
                .iter()
                .enumerate()
                .filter(|&(d, _)| d != l)
                .map(|(_, &f)| f);
            let e = elementary_symmetric(others, r - 1);
            let mut acc = 0.0;
            for m in 0..=r - s {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binomial(m + s - 1, m) * e[m + s - 1];
            }
            acc
        })
        .collect()
}

/// Solved quantile with the marginal failure probabilities at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantile {
    pub alpha: f64,
    pub t: f64,
    /// `F_T(0) >= alpha`, so the quantile sits at the origin.
    pub degenerate: bool,
    pub marginal_cdfs: Vec<f64>,
    pub joint_cdf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureSystem {
    mean_polys: Vec<TimePolynomial>,
    var_polys: Vec<TimePolynomial>,
    thresholds: Vec<f64>,
    s: usize,
    t_max: f64,
}

impl FailureSystem {
    pub fn new(model: &Model) -> Result<Self> {
        let r = model.r();
        let spec = model.spec();
        Self::from_parts(
            (0..r).map(|l| mean_path(model, l)).collect(),
            (0..r).map(|l| path_variance(model, l)).collect(),
            spec.components.iter().map(|c| c.threshold).collect(),
            spec.system_s,
            spec.t_max,
        )
    }

    /// Checks the path variances for strict positivity on `[0, t_max]`
    /// (uniform and geometric grids plus both endpoints).
    pub fn from_parts(
        mean_polys: Vec<TimePolynomial>,
        var_polys: Vec<TimePolynomial>,
        thresholds: Vec<f64>,
        s: usize,
        t_max: f64,
    ) -> Result<Self> {
        let r = mean_polys.len();
        if var_polys.len() != r {
            return Err(Error::DimensionMismatch {
                what: "variance polynomials",
                expected: r,
                found: var_polys.len(),
            });
        }
        if thresholds.len() != r {
            return Err(Error::DimensionMismatch {
                what: "thresholds",
                expected: r,
                found: thresholds.len(),
            });
        }
        assert!(s >= 1 && s <= r, "system order out of range");
        const N: usize = 2000;
        let mut probes = Vec::with_capacity(2 * N + 2);
        probes.push(0.0);
        probes.push(t_max);
        for i in 1..N {
            probes.push(t_max * i as f64 / N as f64);
            // 1e-9 .. t_max geometrically
            let frac = i as f64 / N as f64;
            probes.push(t_max * libm::pow(1e-9 / t_max.max(1e-9), 1.0 - frac));
        }
        for (l, v) in var_polys.iter().enumerate() {
            for &t in &probes {
                let value = v.eval(t);
                if !(value > 0.0) {
                    return Err(Error::NonPositiveVariance {
                        component: l + 1,
                        t,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            mean_polys,
            var_polys,
            thresholds,
            s,
            t_max,
        })
    }

    pub fn r(&self) -> usize {
        self.mean_polys.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn mean_path(&self, l: usize) -> &TimePolynomial {
        &self.mean_polys[l]
    }

    pub fn path_variance(&self, l: usize) -> &TimePolynomial {
        &self.var_polys[l]
    }

    pub fn threshold(&self, l: usize) -> f64 {
        self.thresholds[l]
    }

    /// `σ_l(t)`
    pub fn path_sd(&self, l: usize, t: f64) -> f64 {
        libm::sqrt(self.var_polys[l].eval(t))
    }

    /// `h_l(t) = (μ_l(t) − y_l0) / σ_l(t)`
    pub fn standardized_margin(&self, l: usize, t: f64) -> f64 {
        (self.mean_polys[l].eval(t) - self.thresholds[l]) / self.path_sd(l, t)
    }

    pub fn marginal_cdf(&self, l: usize, t: f64) -> f64 {
        normal::cdf(self.standardized_margin(l, t))
    }

    pub fn marginal_cdfs(&self, t: f64) -> Vec<f64> {
        (0..self.r()).map(|l| self.marginal_cdf(l, t)).collect()
    }

    pub fn joint_cdf(&self, t: f64) -> f64 {
        joint_cdf_from_marginals(&self.marginal_cdfs(t), self.s)
    }

    /// `t_alpha` with `F_T(t_alpha) = alpha`.
    ///
    /// Brackets by doubling from `t = 1` (capped at `t_max`) and bisects.
    pub fn quantile(&self, alpha: f64) -> Result<Quantile> {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        let f0 = self.joint_cdf(0.0);
        if f0 >= alpha {
            return Ok(Quantile {
                alpha,
                t: 0.0,
                degenerate: true,
                marginal_cdfs: self.marginal_cdfs(0.0),
                joint_cdf: f0,
            });
        }
        let mut lo = 0.0;
        let mut hi = 1.0f64.min(self.t_max);
        loop {
            if self.joint_cdf(hi) >= alpha {
                break;
            }
            if hi >= self.t_max {
                return Err(Error::QuantileUnattainable {
                    alpha,
                    reached: self.joint_cdf(self.t_max),
                    t_max: self.t_max,
                });
            }
            lo = hi;
            hi = (2.0 * hi).min(self.t_max);
        }
        while hi - lo > QUANTILE_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.joint_cdf(mid) >= alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (flo, fhi) = (self.joint_cdf(lo), self.joint_cdf(hi));
        let t = if (flo - alpha).abs() < (fhi - alpha).abs() {
            lo
        } else {
            hi
        };
        Ok(Quantile {
            alpha,
            t,
            degenerate: false,
            marginal_cdfs: self.marginal_cdfs(t),
            joint_cdf: self.joint_cdf(t),
        })
    }

    /// `∂F_T/∂t` by central differences (one-sided at the origin).
    pub fn joint_density(&self, t: f64) -> f64 {
        let h = 1e-6 * t.max(1.0);
        if t > h {
            (self.joint_cdf(t + h) - self.joint_cdf(t - h)) / (2.0 * h)
        } else {
            (self.joint_cdf(t + h) - self.joint_cdf(t)) / h
        }
    }
}
