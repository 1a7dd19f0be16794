#![allow(dead_code)]

use adt_design_core::linalg::Matrix;
use adt_design_core::{
    validate_system, ApproximateDesign, ComponentSpec, CriterionContext, DesignRegion, ModelSpec,
    Monomial,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mono(e1: u32, e2: u32, et: u32) -> Monomial {
    Monomial::new(vec![e1, e2], et)
}

/// (1, x1, x2, x1x2) ⊗ (1, t)
pub fn full_interaction_basis() -> Vec<Monomial> {
    let mut b = Vec::new();
    for et in 0..2 {
        for (e1, e2) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            b.push(mono(e1, e2, et));
        }
    }
    b
}

/// (1, x1, x2, t, x2 t)
pub fn partial_interaction_basis() -> Vec<Monomial> {
    vec![
        mono(0, 0, 0),
        mono(1, 0, 0),
        mono(0, 1, 0),
        mono(0, 0, 1),
        mono(0, 1, 1),
    ]
}

fn build(
    basis: Vec<Monomial>,
    betas: &[&[f64]],
    thresholds: &[f64],
    sigma: [f64; 2],
    error_variance: f64,
    use_condition: [f64; 2],
    s: usize,
) -> ModelSpec {
    ModelSpec {
        components: betas
            .iter()
            .zip(thresholds)
            .map(|(b, &y)| ComponentSpec {
                fixed_basis: basis.clone(),
                random_time_exponents: vec![0, 1],
                sigma_gamma: Matrix::diagonal(&sigma),
                beta: b.to_vec(),
                threshold: y,
                error_variance: None,
            })
            .collect(),
        error_variance,
        time_plan: vec![0.0, 0.5, 1.0],
        stress_dim: 2,
        design_region: DesignRegion::unit_cube(2),
        use_condition: use_condition.to_vec(),
        system_s: s,
        alpha: 0.5,
        t_max: ModelSpec::DEFAULT_T_MAX,
    }
}

/// Bivariate series system with full stress-time interaction.
pub fn example1() -> ModelSpec {
    build(
        full_interaction_basis(),
        &[
            &[2.30, 1.60, 1.30, 0.02, 0.70, 0.07, 0.08, 0.03],
            &[2.17, 1.10, 0.84, 0.01, 0.80, 0.03, 0.02, 0.02],
        ],
        &[5.4, 5.8],
        [0.36, 0.10],
        0.10,
        [-0.4, -0.2],
        1,
    )
}

/// 2-out-of-3 system with partial interaction.
pub fn example2() -> ModelSpec {
    build(
        partial_interaction_basis(),
        &[
            &[3.80, 0.52, 0.72, 2.00, 0.67],
            &[2.20, 0.44, 0.64, 1.50, 0.63],
            &[1.33, 0.30, 0.92, 1.91, 0.80],
        ],
        &[7.5, 5.2, 4.25],
        [0.40, 0.32],
        0.15,
        [-0.5, -0.4],
        2,
    )
}

pub fn context(spec: ModelSpec) -> CriterionContext {
    CriterionContext::new(validate_system(spec).expect("valid spec")).expect("context")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random design with `n` distinct points in the unit square, always
/// including the four vertices so the information is nonsingular.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize) -> ApproximateDesign {
    let mut points = DesignRegion::unit_cube(2).vertices();
    while points.len() < n.max(4) {
        let p = vec![rng.random::<f64>(), rng.random::<f64>()];
        if !points.contains(&p) {
            points.push(p);
        }
    }
    let raw: Vec<f64> = points.iter().map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - head;
    ApproximateDesign::new(points, weights).expect("random design")
}
