use nodal_core::field::{Kernel, KernelSpec};
use nodal_core::kacrice::{
    condition_on_zero, ergodicity_decay, first_moment_density, second_moment_volume, sphere_det_integral,
    two_point_schur_check, JointGaussianModel, Method, QuadratureSpec, Weight,
};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn bargmann_fock_line_density() {
    // p_f(0) E|grad f| for f(0) ~ N(0,1), grad f ~ N(0, I_2)
    let oracle = (2.0 * PI).powf(-0.5) * (PI / 2.0).sqrt();
    let est = first_moment_density(&KernelSpec::bargmann_fock(2, 1), Weight::Volume, 1_000_000, 0).unwrap();
    assert_eq!(est.estimate.method, Method::MonteCarlo);
    assert!(est.estimate.samples >= 1000);
    assert!((est.estimate.value - oracle).abs() / oracle < 5e-3, "{:?}", est.estimate);
}

#[test]
fn monochromatic_curve_density() {
    // two independent gradients N(0, I_3 / 3): E|g1 x g2| = (1/3) E|h1| E|h2_perp| = (1/3) 2 sqrt(2/pi) sqrt(pi/2)
    let oracle = (2.0 / 3.0) / (2.0 * PI);
    let est = first_moment_density(&KernelSpec::berry(3, 2), Weight::Volume, 1_000_000, 4).unwrap();
    assert!((est.estimate.value - oracle).abs() < 3.0 * est.estimate.half_width + 1e-4, "{:?}", est.estimate);
}

#[test]
fn stationary_value_independent_of_gradient() {
    let model = JointGaussianModel::jet(&KernelSpec::bargmann_fock(2, 1), &[0.4, -1.1], 1).unwrap();
    let c = condition_on_zero(&model).unwrap();
    assert!(c.regression.amax() < 1e-15);
    assert!((c.cov.clone() - nalgebra::DMatrix::identity(2, 2)).amax() < 1e-14);
}

#[test]
fn sphere_chart_regression_matches_hand_solve() {
    // ambient derivatives of (x.y)^d: Cov(f, f) = |x|^{2d}, Cov(d_i f, f) = d |x|^{2d-2} x_i
    let d = 5u32;
    let x = [0.48, 0.6, 0.64];
    let spec = KernelSpec::kostlan(2, 1, d);
    let model = JointGaussianModel::jet(&spec, &x, 1).unwrap();
    let c = condition_on_zero(&model).unwrap();
    let s: f64 = x.iter().map(|v| v * v).sum();
    for i in 0..3 {
        let var = s.powi(d as i32);
        let cross = d as f64 * s.powi(d as i32 - 1) * x[i];
        assert!((c.regression[(i, 0)] + cross / var).abs() < 1e-12);
    }
}

#[test]
fn conditioned_hessian_sample_mean() {
    let model = JointGaussianModel::jet(&KernelSpec::berry(2, 1), &[0.0, 0.0], 2).unwrap();
    let c = condition_on_zero(&model).unwrap();
    let mut rng = nodal_core::rng::batch_rng(11, "test", 0);
    let draws: Vec<_> = (0..100_000).map(|_| c.sample(&mut rng)).collect();
    for k in 2..c.dim() {
        let vals: Vec<f64> = draws.iter().map(|w| w[k]).collect();
        let s = nodal_core::stats::Summary::of(&vals);
        assert!(s.mean.abs() < 3.0 * s.standard_error(), "slot {k}: {s:?}");
    }
}

#[test]
fn schur_closed_forms() {
    let spec = KernelSpec::bargmann_fock(2, 1);
    let c = two_point_schur_check(&spec, &[0.0, 0.0], &[0.3, 0.4]).unwrap();
    // 1 - k(r)^2 with k = exp(-r^2 / 2)
    assert!((c.value - (1.0 - (-0.25f64).exp())).abs() < 1e-14);
    assert!((c.bound - 0.125).abs() < 1e-14 && c.pass);
    let r = 1e-3;
    let c = two_point_schur_check(&spec, &[0.0, 0.0], &[r, 0.0]).unwrap();
    assert!((c.value - (r * r - r.powi(4) / 2.0)).abs() < 1e-15 && c.pass);
}

#[test]
fn bargmann_fock_ergodicity_closed_form() {
    let v = ergodicity_decay(&KernelSpec::bargmann_fock(2, 1), &[10.0]).unwrap();
    // (1 / (pi R^2)) int_{B_R} exp(-|x|^2) dx
    let oracle = (1.0 - (-100f64).exp()) / 100.0;
    assert!((v[0].1 - oracle).abs() < 1e-12);
}

#[test]
fn sphere_integral_exact_values() {
    let e = sphere_det_integral(3, 2, 0.0, 5000, 0).unwrap();
    assert!((e.value - (4.0 * PI).powi(2)).abs() < 1e-9);
    // |det| = sin^2 theta, so the integral is (4 pi)^2 int_0^1 (1 - u^2)^alpha du
    let alpha: f64 = -0.3;
    let beta = PI.sqrt() / 2.0 * libm::tgamma(alpha + 1.0) / libm::tgamma(alpha + 1.5);
    let oracle = (4.0 * PI).powi(2) * beta;
    let e = sphere_det_integral(3, 2, alpha, 2_000_000, 1).unwrap();
    assert!((e.value - oracle).abs() < 3.0 * e.half_width, "{e:?} vs {oracle}");
}

#[test]
fn second_moment_dominates_square_of_mean() {
    let spec = KernelSpec::bargmann_fock(2, 1);
    let q = QuadratureSpec { radial_nodes: 12, transverse_nodes: 6, inner_samples: 2000, ..Default::default() };
    let s = second_moment_volume(&spec, 1.0, &q).unwrap();
    assert!(s.estimate.value >= s.mean.value.powi(2));
    assert!(s.variance >= -s.estimate.half_width);
    assert!((s.mean.value - 2.0).abs() < 0.02);
}

#[test]
fn second_moment_rejects_nonstationary() {
    assert!(second_moment_volume(&KernelSpec::kostlan(2, 1, 3), 1.0, &QuadratureSpec::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schur_bound_holds_near_diagonal(
        x in proptest::array::uniform3(-3.0f64..3.0),
        dir in proptest::array::uniform3(-1.0f64..1.0),
        r in 0.0f64..0.5,
    ) {
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let y: Vec<f64> = (0..3).map(|i| x[i] + r * dir[i] / norm).collect();
        for spec in [KernelSpec::bargmann_fock(3, 1), KernelSpec::berry(3, 2), KernelSpec::black_body(3, 1)] {
            let c = two_point_schur_check(&spec, &x, &y).unwrap();
            prop_assert!(c.pass, "{:?} {:?}", spec.model, c);
        }
    }

    #[test]
    fn two_point_covariance_is_symmetric(x in proptest::array::uniform2(-2.0f64..2.0), y in proptest::array::uniform2(-2.0f64..2.0)) {
        let kernel = Kernel::new(&KernelSpec::berry(2, 1)).unwrap();
        let m = JointGaussianModel::two_point(&kernel, &x, &y).unwrap();
        prop_assert!((m.cov.clone() - m.cov.transpose()).amax() < 1e-14);
        prop_assert!(m.min_eigenvalue() > -1e-10);
    }
}
