use nodal_core::field::{sample_field, Field, Kernel, KernelSpec};
use nodal_core::geometry::{curvature_at, mean_curvature, point_frame, willmore_integrand};
use nodal_core::stats::Summary;
use proptest::prelude::*;

fn specs() -> Vec<(KernelSpec, Vec<f64>)> {
    vec![
        (KernelSpec::bargmann_fock(2, 1).with_radius(3.0), vec![0.7, -1.2]),
        (KernelSpec::bargmann_fock(3, 2).with_radius(2.0), vec![0.3, 0.5, -0.4]),
        (KernelSpec::berry(3, 1), vec![1.3, 2.1, -0.6]),
        (KernelSpec::black_body(2, 1), vec![4.0, 1.5]),
        (KernelSpec::torus(3, 1, 9), vec![0.21, 0.37, 0.83]),
    ]
}

#[test]
fn sphere_polynomial_gradient_along_great_circle() {
    // d/dt f(cos t x + sin t v) at t = 0 is grad f . v for a tangent v
    let f = sample_field(&KernelSpec::kostlan(2, 1, 6), 9).unwrap();
    let x = [0.48, 0.6, 0.64];
    let v = [0.8, 0.0, 0.0];
    let v = {
        let dot: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = (0..3).map(|i| v[i] - dot * x[i]).collect();
        let n = w.iter().map(|c| c * c).sum::<f64>().sqrt();
        w.iter().map(|c| c / n).collect::<Vec<_>>()
    };
    let at = |t: f64| -> Vec<f64> { (0..3).map(|i| t.cos() * x[i] + t.sin() * v[i]).collect() };
    let h = 1e-5;
    let fd = (f.eval(&at(h), 0).unwrap().value[0] - f.eval(&at(-h), 0).unwrap().value[0]) / (2.0 * h);
    let g = f.eval(&x, 1).unwrap().grad;
    let an: f64 = (0..3).map(|i| g[i] * v[i]).sum();
    assert!((fd - an).abs() < 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
}

#[test]
fn jets_match_central_differences() {
    for (spec, x) in specs() {
        let f = sample_field(&spec, 9).unwrap();
        let jet = f.eval(&x, 2).unwrap();
        let d = x.len();
        let scale = jet.value.iter().chain(&jet.grad).fold(1.0f64, |a, v| a.max(v.abs()));
        let h = 1e-5 / Kernel::new(&spec).unwrap().second_spectral_moment().sqrt().max(1.0);
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let (jp, jm) = (f.eval(&xp, 1).unwrap(), f.eval(&xm, 1).unwrap());
            for a in 0..spec.m {
                let fd = (jp.value[a] - jm.value[a]) / (2.0 * h);
                assert!((fd - jet.grad[a * d + i]).abs() < 1e-6 * scale, "{:?} grad {a},{i}", spec.model);
                for j in 0..d {
                    let fd2 = (jp.grad[a * d + j] - jm.grad[a * d + j]) / (2.0 * h);
                    let an = jet.hess[a * d * d + i * d + j];
                    assert!((fd2 - an).abs() < 1e-5 * scale.max(an.abs()), "{:?} hess {a},{i},{j}: {fd2} vs {an}", spec.model);
                }
            }
        }
    }
}

#[test]
fn ensemble_covariance_matches_kernel() {
    let cases = [
        (KernelSpec::bargmann_fock(2, 1).with_radius(2.0), vec![0.2, 0.1], vec![0.9, -0.4]),
        (KernelSpec::berry(2, 1), vec![0.0, 0.0], vec![1.1, 0.5]),
        (KernelSpec::torus(2, 1, 25), vec![0.1, 0.2], vec![0.13, 0.26]),
    ];
    for (spec, x, y) in cases {
        let kernel = Kernel::new(&spec).unwrap();
        let products: Vec<f64> = (0..3000u64)
            .map(|seed| {
                let f = sample_field(&spec, seed).unwrap();
                f.eval(&x, 0).unwrap().value[0] * f.eval(&y, 0).unwrap().value[0]
            })
            .collect();
        let s = Summary::of(&products);
        let exact = kernel.value(&x, &y).unwrap();
        assert!((s.mean - exact).abs() < 4.0 * s.standard_error(), "{:?}: {} vs {exact}", spec.model, s.mean);
    }
}

#[test]
fn realizations_are_reproducible() {
    for (spec, x) in specs() {
        let a = sample_field(&spec, 77).unwrap().eval(&x, 2).unwrap();
        let b = sample_field(&spec, 77).unwrap().eval(&x, 2).unwrap();
        let c = sample_field(&spec, 78).unwrap().eval(&x, 0).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.hess, b.hess);
        assert_ne!(a.value, c.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn round_sphere_curvature(rho in 0.01f64..100.0, theta in 0.1f64..3.0, phi in 0.0f64..6.28, c in 0.1f64..10.0) {
        // c (|x|^2 - rho^2): grad 2c x, hess 2c I
        let x = [rho * theta.sin() * phi.cos(), rho * theta.sin() * phi.sin(), rho * theta.cos()];
        let grad: Vec<f64> = x.iter().map(|v| 2.0 * c * v).collect();
        let mut hess = vec![0.0; 9];
        for i in 0..3 {
            hess[4 * i] = 2.0 * c;
        }
        let frame = point_frame(&grad, 1, 3).unwrap();
        let s = mean_curvature(&frame, &hess).unwrap();
        prop_assert!((s.mean_curvature_norm * rho - 2.0).abs() < 1e-9);
        // the Willmore integrand integrates to 4 pi over the sphere
        prop_assert!((willmore_integrand(&s, 3, 1) * 4.0 * std::f64::consts::PI * rho * rho - 4.0 * std::f64::consts::PI).abs() < 1e-8);
        prop_assert!(s.sff_bound >= s.mean_curvature_norm.powi(2) * (1.0 - 1e-12));
    }

    #[test]
    fn curvature_is_invariant_under_component_mixing(seed in 0u64..500, a in 0.2f64..3.0, b in -2.0f64..2.0) {
        // replacing (f1, f2) by (a f1, f2 + b f1) leaves the zero set unchanged
        let spec = KernelSpec::berry(3, 2);
        let f = sample_field(&spec, seed).unwrap();
        let jet = f.eval(&[0.1, 0.2, 0.3], 2).unwrap();
        let (_, s0) = match curvature_at(&jet) { Ok(v) => v, Err(_) => return Ok(()) };
        let mut mixed = jet.clone();
        for k in 0..3 {
            mixed.grad[k] = a * jet.grad[k];
            mixed.grad[3 + k] = jet.grad[3 + k] + b * jet.grad[k];
        }
        for k in 0..9 {
            mixed.hess[k] = a * jet.hess[k];
            mixed.hess[9 + k] = jet.hess[9 + k] + b * jet.hess[k];
        }
        let (_, s1) = curvature_at(&mixed).unwrap();
        prop_assert!((s0.mean_curvature_norm - s1.mean_curvature_norm).abs() < 1e-7 * s0.mean_curvature_norm.max(1.0));
    }
}
