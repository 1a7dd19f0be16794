mod common;

use adt_design_core::criterion::{product_structure, stress_information, time_information};
use adt_design_core::failure::joint_cdf_partials;
use adt_design_core::model::{eval_basis, fixed_design_matrix};
use adt_design_core::{
    factorized_objective, joint_cdf_from_marginals, ApproximateDesign, FailureSystem,
};
use common::{context, example1, example2};
use proptest::prelude::*;

fn design_strategy() -> impl Strategy<Value = ApproximateDesign> {
    (
        prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 0..8),
        prop::collection::vec(0.01..1.0f64, 12),
    )
        .prop_map(|(extra, raw)| {
            let mut points = adt_design_core::DesignRegion::unit_cube(2).vertices();
            for (a, b) in extra {
                let p = vec![a, b];
                if !points.contains(&p) {
                    points.push(p);
                }
            }
            let raw = &raw[..points.len()];
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let tail: f64 = w[1..].iter().sum();
            w[0] = 1.0 - tail;
            ApproximateDesign::new(points, w).unwrap()
        })
}

proptest! {
    #[test]
    fn fixed_matrix_rows_are_basis_evaluations(
        x1 in -2.0..2.0f64,
        x2 in -2.0..2.0f64,
        plan in prop::collection::vec(0.0..10.0f64, 1..5),
    ) {
        for spec in [example1(), example2()] {
            let component = &spec.components[0];
            let basis = &component.fixed_basis;
            let x = [x1, x2];
            let f = fixed_design_matrix(component, &x, &plan).unwrap();
            prop_assert_eq!(f.rows(), plan.len());
            for (j, &t) in plan.iter().enumerate() {
                let want = eval_basis(basis, &x, t).unwrap();
                prop_assert_eq!(f.row(j), want.as_slice());
            }
        }
    }

    #[test]
    fn sensitivities_reassemble_the_objective(design in design_strategy()) {
        for ctx in [context(example1()), context(example2())] {
            let obj = ctx.objective(&design).unwrap();
            let d = ctx.sensitivities(&design, design.points()).unwrap();
            let total: f64 = d.iter().zip(design.weights()).map(|(d, w)| d * w).sum();
            prop_assert!((total - obj).abs() <= 1e-10 * obj);
        }
    }

    #[test]
    fn information_is_kronecker_for_product_bases(design in design_strategy()) {
        let ctx = context(example1());
        let structure = product_structure(ctx.model()).unwrap();
        let m1 = stress_information(&structure, &design);
        let m2 = time_information(ctx.model());
        let kron = m1.kronecker(&m2);
        for l in 0..2 {
            let m = ctx.info_matrix_component(&design, l).unwrap();
            let permuted = m.permute_symmetric(&structure.order);
            prop_assert!(permuted.max_abs_diff(&kron) <= 1e-12);
        }
        let full = ctx.objective(&design).unwrap();
        let fact = factorized_objective(&ctx, &design).unwrap();
        prop_assert!((full - fact).abs() <= 1e-10 * full);
    }

    #[test]
    fn efficiency_of_a_design_against_itself_is_one(design in design_strategy()) {
        let ctx = context(example2());
        let e = adt_design_core::efficiency(&ctx, &design, &design).unwrap();
        prop_assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn joint_cdf_is_a_probability_increasing_in_each_margin(
        m in prop::collection::vec(0.0..=1.0f64, 1..6),
        s_frac in 0.0..1.0f64,
    ) {
        let r = m.len();
        let s = 1 + ((s_frac * r as f64) as usize).min(r - 1);
        let f = joint_cdf_from_marginals(&m, s);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        for p in joint_cdf_partials(&m, s) {
            prop_assert!(p >= -1e-12);
        }
    }

    #[test]
    fn quantile_inverts_the_joint_cdf(alpha in 0.05..0.95f64) {
        for ctx in [context(example1()), context(example2())] {
            let sys: &FailureSystem = ctx.system();
            let q = sys.quantile(alpha).unwrap();
            prop_assert!(!q.degenerate);
            prop_assert!((sys.joint_cdf(q.t) - alpha).abs() < 1e-9);
            prop_assert!(sys.joint_cdf(q.t * 0.999) < alpha);
        }
    }
}
