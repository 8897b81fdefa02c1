//! First and second moments of the zero-set volume.

use super::{condition_on_zero, mc_estimate, monte_carlo, JointGaussianModel, Method, MomentEstimate, Slot};
use crate::error::KacRiceError;
use crate::field::{Kernel, KernelSpec};
use crate::geometry::{mean_curvature, point_frame, willmore_integrand};
use crate::quadrature::gauss_legendre_on;
use crate::rng::batch_rng;
use crate::stats::Z95;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Cutoff rungs `Q`; the reported Willmore value is the last one.
pub const CUTOFF_LADDER: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Volume,
    Willmore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMoment {
    pub estimate: MomentEstimate,
    /// `p_F(0)`.
    pub density_at_zero: f64,
    /// `(Q, estimate)` per cutoff rung; empty for the volume weight.
    pub rungs: Vec<(f64, MomentEstimate)>,
}

fn stationary_kernel(spec: &KernelSpec) -> Result<Kernel, KacRiceError> {
    let kernel = Kernel::new(spec)?;
    if !kernel.is_stationary() {
        return Err(KacRiceError::Nonstationary(spec.model.tag()));
    }
    Ok(kernel)
}

fn sqrt_gram(grad: &[f64], m: usize, n: usize) -> f64 {
    let g = DMatrix::from_row_slice(m, n, grad);
    (&g * g.transpose()).determinant().max(0.0).sqrt()
}

/// Expected density of `Z(F)` per unit volume, weighted by 1 (volume) or by
/// `|H/(n-m)|^{n-m}` (Willmore). The Willmore integrand is multiplied by the
/// cutoff `min(1, Q / s)` with `s` the second-fundamental-form bound, which
/// increases to 1 as `Q` grows; all rungs share the same draws.
pub fn first_moment_density(
    spec: &KernelSpec,
    weight: Weight,
    samples: usize,
    seed: u64,
) -> Result<FirstMoment, KacRiceError> {
    if samples == 0 {
        return Err(KacRiceError::InvalidArgument("at least one Monte Carlo sample is required".into()));
    }
    let kernel = stationary_kernel(spec)?;
    let (n, m) = (kernel.n, kernel.m);
    let origin = vec![0.0; n];
    let order = if weight == Weight::Volume { 1 } else { 2 };
    let model = JointGaussianModel::jet(spec, &origin, order)?;
    let p0 = model.value_density_at_zero()?;
    let cond = condition_on_zero(&model)?;
    let hess_slots: Vec<(usize, usize, usize)> = model
        .slots
        .iter()
        .skip(m + m * n)
        .map(|s| match *s {
            Slot::Hess { comp, i, j, .. } => (comp, i, j),
            _ => unreachable!("hessian slots follow the gradients"),
        })
        .collect();
    let tag = format!("kacrice/first/{}", spec.hash());
    match weight {
        Weight::Volume => {
            let stats = monte_carlo(samples, seed, &tag, 1, |rng, out| {
                let w = cond.sample(rng);
                out[0] = sqrt_gram(&w.as_slice()[..m * n], m, n);
            });
            Ok(FirstMoment {
                estimate: mc_estimate(stats[0].0, stats[0].1, samples, p0),
                density_at_zero: p0,
                rungs: Vec::new(),
            })
        }
        Weight::Willmore => {
            let stats = monte_carlo(samples, seed, &tag, CUTOFF_LADDER.len(), |rng, out| {
                let w = cond.sample(rng);
                let grad = &w.as_slice()[..m * n];
                let mut hess = vec![0.0; m * n * n];
                for (k, &(c, i, j)) in hess_slots.iter().enumerate() {
                    let v = w[m * n + k];
                    hess[c * n * n + i * n + j] = v;
                    hess[c * n * n + j * n + i] = v;
                }
                let value = point_frame(grad, m, n)
                    .and_then(|f| mean_curvature(&f, &hess))
                    .map(|s| (sqrt_gram(grad, m, n) * willmore_integrand(&s, n, m), s.sff_bound));
                for (o, q) in out.iter_mut().zip(CUTOFF_LADDER) {
                    *o = match value {
                        Ok((v, bound)) if bound > 0.0 => v * (q / bound).min(1.0),
                        Ok((v, _)) => v,
                        Err(_) => 0.0,
                    };
                }
            });
            let rungs: Vec<(f64, MomentEstimate)> = CUTOFF_LADDER
                .iter()
                .zip(&stats)
                .map(|(&q, &(mean, sd))| (q, mc_estimate(mean, sd, samples, p0)))
                .collect();
            Ok(FirstMoment { estimate: rungs.last().unwrap().1.clone(), density_at_zero: p0, rungs })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes along the pyramid axis.
    pub radial_nodes: usize,
    /// Nodes per transverse pyramid coordinate.
    pub transverse_nodes: usize,
    /// Common random draws for the conditional expectation at each node.
    pub inner_samples: usize,
    /// Below this separation the pair density is extrapolated with `|z|^{-m}`.
    pub h_diag: f64,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial_nodes: 24, transverse_nodes: 12, inner_samples: 4000, h_diag: 1e-2, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    /// `E[vol(Z ∩ C_R)^2]`.
    pub estimate: MomentEstimate,
    /// `E[vol(Z ∩ C_R)]`.
    pub mean: MomentEstimate,
    pub variance: f64,
}

/// Two-point density `p_{(F(0), F(z))}(0, 0) E[sqrt det A(0) sqrt det A(z) | F(0) = F(z) = 0]`
/// with its Monte Carlo standard error.
fn pair_density(kernel: &Kernel, z: &[f64], draws: &DMatrix<f64>) -> Result<(f64, f64), KacRiceError> {
    let (n, m) = (kernel.n, kernel.m);
    let origin = vec![0.0; n];
    let model = JointGaussianModel::two_point(kernel, &origin, z)?;
    let singular = || KacRiceError::SingularPair { x: origin.clone(), y: z.to_vec() };
    let p = model.value_density_at_zero().map_err(|_| singular())?;
    let cond = condition_on_zero(&model).map_err(|_| singular())?;
    let samples = draws.ncols();
    let w = &cond.sqrt * draws;
    let vals: Vec<f64> = (0..samples)
        .map(|s| {
            let col = w.column(s);
            let g0: Vec<f64> = (0..m * n).map(|i| col[i]).collect();
            let g1: Vec<f64> = (0..m * n).map(|i| col[m * n + i]).collect();
            sqrt_gram(&g0, m, n) * sqrt_gram(&g1, m, n)
        })
        .collect();
    let s = crate::stats::Summary::of(&vals);
    Ok((p * s.mean, p * s.standard_error()))
}

/// `E[vol(Z ∩ C_R)^2] = ∫ rho_2(z) prod_i (2R - |z_i|) dz` over `[-2R, 2R]^n`.
///
/// Each orthant of the difference cube is split into `n` pyramids with apex
/// at the diagonal `z = 0`; in pyramid coordinates `z = 2R s (u, 1)` the
/// Jacobian `s^{n-1}` absorbs the `|z|^{-m}` singularity, so tensor
/// Gauss-Legendre rules converge without special treatment.
pub fn second_moment_volume(spec: &KernelSpec, radius: f64, q: &QuadratureSpec) -> Result<SecondMoment, KacRiceError> {
    if !(radius > 0.0) || q.radial_nodes == 0 || q.transverse_nodes == 0 || q.inner_samples < 2 {
        return Err(KacRiceError::InvalidArgument(format!("radius {radius}, quadrature {q:?}")));
    }
    let kernel = stationary_kernel(spec)?;
    let (n, m) = (kernel.n, kernel.m);
    let side = 2.0 * radius;
    let dim = 2 * m * n;
    let mut rng = batch_rng(q.seed, "kacrice/second", 0);
    let draws = DMatrix::from_fn(dim, q.inner_samples, |_, _| rng.sample::<f64, _>(StandardNormal));

    let s_rule = gauss_legendre_on(q.radial_nodes, 0.0, 1.0);
    let u_rule = gauss_legendre_on(q.transverse_nodes, 0.0, 1.0);
    let mut nodes: Vec<(Vec<f64>, f64)> = Vec::new();
    let transverse = q.transverse_nodes.pow(n as u32 - 1);
    for signs in 0..1usize << n {
        for face in 0..n {
            for &(s, ws) in &s_rule {
                for t in 0..transverse {
                    let mut z = vec![0.0; n];
                    let mut w = ws * side.powi(n as i32) * s.powi(n as i32 - 1);
                    let mut rem = t;
                    for (i, zi) in z.iter_mut().enumerate() {
                        let u = if i == face {
                            1.0
                        } else {
                            let (u, wu) = u_rule[rem % q.transverse_nodes];
                            rem /= q.transverse_nodes;
                            w *= wu;
                            u
                        };
                        let sign = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
                        *zi = sign * side * s * u;
                    }
                    w *= z.iter().map(|zi| side - zi.abs()).product::<f64>();
                    nodes.push((z, w));
                }
            }
        }
    }
    let contributions: Vec<Result<(f64, f64), KacRiceError>> = nodes
        .par_iter()
        .map(|(z, w)| {
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let (probe, factor) = if r < q.h_diag {
                let t = q.h_diag / r;
                (z.iter().map(|v| v * t).collect::<Vec<_>>(), t.powi(m as i32))
            } else {
                (z.clone(), 1.0)
            };
            let (rho, se) = pair_density(&kernel, &probe, &draws)?;
            Ok((w * factor * rho, w * factor * se))
        })
        .collect();
    let mut value = Vec::with_capacity(nodes.len());
    let mut err = Vec::with_capacity(nodes.len());
    for c in contributions {
        let (v, e) = c?;
        value.push(v);
        err.push(e);
    }
    let second = crate::stats::pairwise_sum(&value);
    // common random numbers: the node errors are correlated, so add them up
    let half_width = Z95 * crate::stats::pairwise_sum(&err);
    let first = first_moment_density(spec, Weight::Volume, 200_000, q.seed)?;
    let vol = side.powi(n as i32);
    let mean = MomentEstimate {
        value: first.estimate.value * vol,
        half_width: first.estimate.half_width * vol,
        samples: first.estimate.samples,
        method: Method::MonteCarlo,
    };
    Ok(SecondMoment {
        variance: second - mean.value * mean.value,
        estimate: MomentEstimate { value: second, half_width, samples: q.inner_samples, method: Method::Quadrature },
        mean,
    })
}

/// Value of the volume integrand for one gradient draw; exposed for tests.
pub fn gram_volume(grad: &DVector<f64>, m: usize, n: usize) -> f64 {
    sqrt_gram(grad.as_slice(), m, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonstationary_is_rejected() {
        let spec = KernelSpec::kostlan(2, 1, 5);
        assert!(matches!(
            first_moment_density(&spec, Weight::Volume, 1000, 0),
            Err(KacRiceError::Nonstationary(_))
        ));
    }

    #[test]
    fn willmore_rungs_are_monotone() {
        let spec = KernelSpec::bargmann_fock(2, 1);
        let fm = first_moment_density(&spec, Weight::Willmore, 20_000, 1).unwrap();
        for w in fm.rungs.windows(2) {
            assert!(w[0].1.value <= w[1].1.value);
        }
    }
}
