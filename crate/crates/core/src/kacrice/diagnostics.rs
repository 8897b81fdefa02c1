//! Checks of the nondegeneracy, two-point and ergodicity conditions, and the
//! singular sphere integral.

use super::{mc_estimate, monte_carlo, JointGaussianModel, MomentEstimate};
use crate::error::KacRiceError;
use crate::field::kernel::KernelKind;
use crate::field::plane_wave::PlaneWaveField;
use crate::field::{sample_field, Field, Kernel, KernelSpec, Lattice, Model};
use crate::quadrature::composite;
use crate::topology::sphere_measure;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// `|S^{n-1}|^m E|det(w_a . w_b)|^alpha` for `m` independent uniform points
/// on `S^{n-1}`. No error for divergent exponents: the estimate simply
/// becomes unstable across seeds.
pub fn sphere_det_integral(
    n: usize,
    m: usize,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate, KacRiceError> {
    if !(n > m && m >= 1) || samples == 0 {
        return Err(KacRiceError::InvalidArgument(format!("need n > m >= 1 and samples > 0, got n {n}, m {m}")));
    }
    let scale = sphere_measure(n - 1).powi(m as i32);
    let tag = format!("kacrice/sphere_det/{n}/{m}/{alpha}");
    let stats = monte_carlo(samples, seed, &tag, 1, |rng, out| {
        let w = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norms: Vec<f64> = w.row_iter().map(|r| r.norm()).collect();
        let gram = &w * w.transpose();
        let det = gram.determinant() / norms.iter().map(|v| v * v).product::<f64>();
        out[0] = det.abs().powf(alpha);
    });
    Ok(mc_estimate(stats[0].0, stats[0].1, samples, scale))
}

fn stationary(spec: &KernelSpec) -> Result<Kernel, KacRiceError> {
    let kernel = Kernel::new(spec)?;
    if !kernel.is_stationary() {
        return Err(KacRiceError::Nonstationary(spec.model.tag()));
    }
    Ok(kernel)
}

/// Smallest eigenvalue of the covariance of `(F(x), grad F(x))`.
pub fn k1(spec: &KernelSpec) -> Result<f64, KacRiceError> {
    stationary(spec)?;
    Ok(JointGaussianModel::jet(spec, &vec![0.0; spec.n], 1)?.min_eigenvalue())
}

/// `k1` of one finite plane-wave realization conditional on its wave
/// vectors: values have unit variance and gradients covariance `(1/N) sum k k^T`.
pub fn finite_wave_k1(field: &PlaneWaveField) -> f64 {
    let n = field.n;
    field
        .waves()
        .iter()
        .map(|comp| {
            let mut g = DMatrix::zeros(n, n);
            for w in comp {
                for i in 0..n {
                    for j in 0..n {
                        g[(i, j)] += w.k[i] * w.k[j];
                    }
                }
            }
            g /= comp.len().max(1) as f64;
            SymmetricEigen::new(g).eigenvalues.min().min(1.0)
        })
        .fold(1.0, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurCheck {
    /// Smallest eigenvalue of `Cov(y,y) - Cov(y,x) Cov(x,x)^{-1} Cov(x,y)` on values.
    pub value: f64,
    /// `(k1 / 2) |x - y|^2`.
    pub bound: f64,
    pub k1: f64,
    pub pass: bool,
}

pub fn two_point_schur_check(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<SchurCheck, KacRiceError> {
    let kernel = stationary(spec)?;
    let m = kernel.m;
    let k1 = k1(spec)?;
    let model = JointGaussianModel::two_point(&kernel, x, y)?;
    let cxx = model.cov.view((0, 0), (m, m)).into_owned();
    let cyx = model.cov.view((m, 0), (m, m)).into_owned();
    let cyy = model.cov.view((m, m), (m, m)).into_owned();
    let inv = cxx.try_inverse().ok_or(KacRiceError::SingularCovariance(0.0))?;
    let schur = &cyy - &cyx * inv * cyx.transpose();
    let value = SymmetricEigen::new((&schur + schur.transpose()) * 0.5).eigenvalues.min();
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let bound = 0.5 * k1 * r2;
    // rounding in `k(0)^2 - k(r)^2`
    let tol = 1e-12 * kernel.variance();
    Ok(SchurCheck { value, bound, k1, pass: value >= bound - tol })
}

/// `(R, (m/|B_R|) int_{B_R} k^2)` with `k` normalized to unit variance.
///
/// Isotropic kernels use composite radial Gauss-Legendre. The torus kernel
/// is a finite cosine sum, so the ball average of `cos(2 pi a.x) cos(2 pi b.x)`
/// is used term by term in closed form.
pub fn ergodicity_decay(spec: &KernelSpec, radii: &[f64]) -> Result<Vec<(f64, f64)>, KacRiceError> {
    let kernel = stationary(spec)?;
    let (n, m) = (kernel.n, kernel.m as f64);
    radii
        .iter()
        .map(|&radius| {
            if !(radius > 0.0) {
                return Err(KacRiceError::InvalidArgument(format!("radius {radius}")));
            }
            let avg = match &kernel.kind {
                KernelKind::Torus(lattice) => {
                    let ball = |v: f64| ball_average_cos(n, TAU * radius * v);
                    let mut acc = 0.0;
                    for a in lattice {
                        for b in lattice {
                            let d: f64 = (0..n).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
                            let s: f64 = (0..n).map(|i| (a[i] + b[i]).powi(2)).sum::<f64>().sqrt();
                            acc += 0.5 * (ball(d) + ball(s));
                        }
                    }
                    acc / (lattice.len() as f64).powi(2)
                }
                _ => {
                    let panels = (4.0 * radius).ceil() as usize + 4;
                    let integral: f64 = composite(16, panels, 0.0, radius)
                        .iter()
                        .map(|&(r, w)| w * kernel.isotropic_profile(r).0.powi(2) * r.powi(n as i32 - 1))
                        .sum();
                    n as f64 * integral / radius.powi(n as i32)
                }
            };
            Ok((radius, m * avg))
        })
        .collect()
}

/// Average of `cos(<xi, x>)` over the unit-normalized ball, `a = |xi| R`.
fn ball_average_cos(n: usize, a: f64) -> f64 {
    if a < 1e-6 {
        return 1.0 - a * a / (2.0 * (n as f64 + 2.0));
    }
    match n {
        2 => 2.0 * libm::j1(a) / a,
        3 => 3.0 * (a.sin() - a * a.cos()) / a.powi(3),
        _ => a.sin() / a,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulinskayaReport {
    pub taus: Vec<f64>,
    /// Fraction of seeds whose grid minimum is below each tau.
    pub probabilities: Vec<f64>,
    /// Per-seed grid minimum of `max(|F|, lambda(F))`.
    pub minima: Vec<f64>,
}

/// Frequency over `seeds` of `min_grid max(|F|, lambda_min(grad F)) < tau`
/// on the lattice of spacing `h` covering `[-R, R]^n`.
pub fn bulinskaya_probe(
    spec: &KernelSpec,
    radius: f64,
    taus: &[f64],
    seeds: &[u64],
    h: f64,
) -> Result<BulinskayaReport, KacRiceError> {
    if !(radius > 0.0 && h > 0.0) || taus.iter().any(|t| !(*t >= 0.0)) {
        return Err(KacRiceError::InvalidArgument(format!("radius {radius}, spacing {h}, taus {taus:?}")));
    }
    let mut spec = spec.clone();
    if spec.model == Model::BargmannFock && spec.truncation.radius.is_none() {
        spec = spec.with_radius(radius);
    }
    let (n, m) = (spec.n, spec.m);
    let count = (2.0 * radius / h).round() as usize + 1;
    let lattice = Lattice::new(vec![-radius; n], 2.0 * radius / (count - 1) as f64, vec![count; n]);
    let minima: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let field = sample_field(&spec, seed)?;
            let vals = field.eval_lattice(&lattice, 1)?;
            let mut best = f64::INFINITY;
            for idx in 0..lattice.len() {
                let norm = (0..m).map(|a| vals.value(idx, a).powi(2)).sum::<f64>().sqrt();
                if norm >= best {
                    continue;
                }
                let g = DMatrix::from_fn(m, n, |a, i| vals.grad(idx, a, i));
                let lam = SymmetricEigen::new(&g * g.transpose()).eigenvalues.min().max(0.0).sqrt();
                best = best.min(norm.max(lam));
            }
            Ok(best)
        })
        .collect::<Result<_, KacRiceError>>()?;
    let total = seeds.len().max(1) as f64;
    let probabilities = taus.iter().map(|t| minima.iter().filter(|&&v| v < *t).count() as f64 / total).collect();
    Ok(BulinskayaReport { taus: taus.to_vec(), probabilities, minima })
}

/// Empirical `k2 = sup p_{(F(0), F(z))}(0) |z|^m` over `0 < |z| <= r_max`
/// along the coordinate axes and the main diagonal.
pub fn measure_k2(spec: &KernelSpec, r_max: f64, steps: usize) -> Result<f64, KacRiceError> {
    let kernel = stationary(spec)?;
    let (n, m) = (kernel.n, kernel.m);
    let mut dirs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d
        })
        .collect();
    dirs.push(vec![1.0 / (n as f64).sqrt(); n]);
    let origin = vec![0.0; n];
    let mut sup: f64 = 0.0;
    for dir in &dirs {
        for j in 1..=steps {
            let r = r_max * j as f64 / steps as f64;
            let z: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let model = JointGaussianModel::two_point(&kernel, &origin, &z)?;
            let p = model
                .value_density_at_zero()
                .map_err(|_| KacRiceError::SingularPair { x: origin.clone(), y: z.clone() })?;
            sup = sup.max(p * r.powi(m as i32));
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_integral_m1_is_sphere_area() {
        let e = sphere_det_integral(3, 1, -0.7, 2000, 0).unwrap();
        assert!((e.value - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn schur_at_zero_separation() {
        let spec = KernelSpec::bargmann_fock(2, 1);
        let c = two_point_schur_check(&spec, &[0.3, 0.1], &[0.3, 0.1]).unwrap();
        assert!(c.value.abs() < 1e-15 && c.bound == 0.0 && c.pass);
    }

    #[test]
    fn bulinskaya_zero_tau() {
        let spec = KernelSpec::bargmann_fock(2, 1);
        let rep = bulinskaya_probe(&spec, 1.0, &[0.0, 0.5], &[1, 2, 3], 0.1).unwrap();
        assert_eq!(rep.probabilities[0], 0.0);
        assert!(rep.probabilities[0] <= rep.probabilities[1]);
    }

    #[test]
    fn finite_wave_k1_isotropic_limit() {
        let f = PlaneWaveField::sample(2, 1, 4000, None, 5);
        let k = finite_wave_k1(&f);
        assert!((k - 0.5).abs() < 0.05, "{k}");
    }
}
