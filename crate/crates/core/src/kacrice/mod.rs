//! Kac-Rice moment integrals and the nondegeneracy diagnostics.
//!
//! Joint Gaussian vectors are assembled from analytic kernel derivatives.
//! Conditioning on `F = 0` is a Schur complement; Monte Carlo draws from the
//! conditioned law use a symmetric square root of its covariance.

pub mod diagnostics;
pub mod moments;

pub use diagnostics::{
    bulinskaya_probe, ergodicity_decay, finite_wave_k1, k1, measure_k2, sphere_det_integral, two_point_schur_check,
    BulinskayaReport, SchurCheck,
};
pub use moments::{first_moment_density, second_moment_volume, FirstMoment, QuadratureSpec, SecondMoment, Weight};

use crate::error::KacRiceError;
use crate::field::{Kernel, KernelSpec};
use crate::rng::batch_rng;
use crate::stats::{pairwise_sum, Z95};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative eigenvalue floor below which a conditioning block is singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Draws per Monte Carlo batch; each batch has its own RNG stream.
pub const MC_BATCH: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// 95% half-width.
    pub half_width: f64,
    pub samples: usize,
    pub method: Method,
}

/// What one coordinate of a joint Gaussian vector is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Value { point: usize, comp: usize },
    Grad { point: usize, comp: usize, i: usize },
    Hess { point: usize, comp: usize, i: usize, j: usize },
}

impl Slot {
    fn parts(&self) -> (usize, usize, Vec<usize>) {
        match *self {
            Slot::Value { point, comp } => (point, comp, vec![]),
            Slot::Grad { point, comp, i } => (point, comp, vec![i]),
            Slot::Hess { point, comp, i, j } => (point, comp, vec![i, j]),
        }
    }
}

/// Centered Gaussian vector with named coordinates.
#[derive(Clone, Debug)]
pub struct JointGaussianModel {
    pub n: usize,
    pub m: usize,
    pub slots: Vec<Slot>,
    pub cov: DMatrix<f64>,
}

impl JointGaussianModel {
    /// Builds the covariance of the given slots at the given points.
    pub fn assemble(kernel: &Kernel, points: &[Vec<f64>], slots: Vec<Slot>) -> Result<Self, KacRiceError> {
        let d = slots.len();
        let mut cov = DMatrix::zeros(d, d);
        for a in 0..d {
            let (pa, ca, ia) = slots[a].parts();
            for b in a..d {
                let (pb, cb, ib) = slots[b].parts();
                if ca != cb {
                    continue;
                }
                let v = kernel.derivative(&points[pa], &points[pb], &ia, &ib)?;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        Ok(Self { n: kernel.point_dim(), m: kernel.m, slots, cov })
    }

    /// `(F(x), grad F(x)[, hess F(x)])`: values first, then gradients
    /// component-major, then the upper triangles of the Hessians.
    pub fn jet(spec: &KernelSpec, x: &[f64], order: usize) -> Result<Self, KacRiceError> {
        let kernel = Kernel::new(spec)?;
        let (n, m) = (kernel.point_dim(), spec.m);
        let mut slots: Vec<Slot> = (0..m).map(|comp| Slot::Value { point: 0, comp }).collect();
        if order >= 1 {
            for comp in 0..m {
                slots.extend((0..n).map(|i| Slot::Grad { point: 0, comp, i }));
            }
        }
        if order >= 2 {
            for comp in 0..m {
                for i in 0..n {
                    slots.extend((i..n).map(|j| Slot::Hess { point: 0, comp, i, j }));
                }
            }
        }
        Self::assemble(&kernel, &[x.to_vec()], slots)
    }

    /// `(F(x), F(y), grad F(x), grad F(y))`.
    pub fn two_point(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<Self, KacRiceError> {
        let (n, m) = (kernel.point_dim(), kernel.m);
        let mut slots = Vec::new();
        for point in 0..2 {
            slots.extend((0..m).map(|comp| Slot::Value { point, comp }));
        }
        for point in 0..2 {
            for comp in 0..m {
                slots.extend((0..n).map(|i| Slot::Grad { point, comp, i }));
            }
        }
        Self::assemble(kernel, &[x.to_vec(), y.to_vec()], slots)
    }

    /// Number of leading value slots.
    pub fn value_count(&self) -> usize {
        self.slots.iter().take_while(|s| matches!(s, Slot::Value { .. })).count()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.cov.clone()).eigenvalues.min()
    }

    /// Density of the value block at the origin.
    pub fn value_density_at_zero(&self) -> Result<f64, KacRiceError> {
        let k = self.value_count();
        let block = self.cov.view((0, 0), (k, k)).into_owned();
        check_block(&block)?;
        let det = block.determinant();
        Ok((std::f64::consts::TAU).powf(-(k as f64) / 2.0) / det.sqrt())
    }
}

fn check_block(block: &DMatrix<f64>) -> Result<(), KacRiceError> {
    let eig = SymmetricEigen::new(block.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > SINGULAR_TOL * hi.max(1e-300)) {
        return Err(KacRiceError::SingularCovariance(lo));
    }
    Ok(())
}

/// Law of the non-value slots given that every value slot is zero.
#[derive(Clone, Debug)]
pub struct ConditionedGaussian {
    /// `-Sigma_21 Sigma_11^{-1}`: `W + a V` is independent of `V`.
    pub regression: DMatrix<f64>,
    /// `Sigma_21 Sigma_11^{-1} Sigma_12`, subtracted from `Sigma_22`.
    pub correction: DMatrix<f64>,
    pub cov: DMatrix<f64>,
    /// Symmetric square root of `cov`.
    pub sqrt: DMatrix<f64>,
}

pub fn condition_on_zero(model: &JointGaussianModel) -> Result<ConditionedGaussian, KacRiceError> {
    let k = model.value_count();
    let d = model.slots.len();
    let s11 = model.cov.view((0, 0), (k, k)).into_owned();
    check_block(&s11)?;
    let s21 = model.cov.view((k, 0), (d - k, k)).into_owned();
    let s22 = model.cov.view((k, k), (d - k, d - k)).into_owned();
    let inv = s11.try_inverse().ok_or(KacRiceError::SingularCovariance(0.0))?;
    let gain = &s21 * &inv;
    let correction = &gain * s21.transpose();
    let mut cov = s22 - &correction;
    cov = (&cov + cov.transpose()) * 0.5;
    let sqrt = symmetric_sqrt(&cov);
    Ok(ConditionedGaussian { regression: -gain, correction, cov, sqrt })
}

/// Eigen square root; eigenvalues in `(-1e-12, 0)` are clamped to zero.
pub fn symmetric_sqrt(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    let roots = eig.eigenvalues.map(|l| {
        if l < 0.0 && l < -1e-12 * scale {
            log::warn!("negative conditioned eigenvalue {l:e} clamped");
        }
        l.max(0.0).sqrt()
    });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

impl ConditionedGaussian {
    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let xi = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        &self.sqrt * xi
    }
}

/// Per-output mean and sample standard deviation of `f` over `samples`
/// draws. Batches run in parallel with independent streams and are reduced
/// in batch order, so the result does not depend on the thread count.
pub fn monte_carlo<F>(samples: usize, seed: u64, tag: &str, outputs: usize, f: F) -> Vec<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let batches = samples.div_ceil(MC_BATCH);
    let per_batch: Vec<(Vec<f64>, Vec<f64>)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, tag, b as u64);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            let mut vals = vec![Vec::with_capacity(count); outputs];
            let mut buf = vec![0.0; outputs];
            for _ in 0..count {
                f(&mut rng, &mut buf);
                for (v, x) in vals.iter_mut().zip(&buf) {
                    v.push(*x);
                }
            }
            let sums = vals.iter().map(|v| pairwise_sum(v)).collect();
            let sq = vals.iter().map(|v| pairwise_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>())).collect();
            (sums, sq)
        })
        .collect();
    let n = samples as f64;
    (0..outputs)
        .map(|o| {
            let s = pairwise_sum(&per_batch.iter().map(|b| b.0[o]).collect::<Vec<_>>());
            let q = pairwise_sum(&per_batch.iter().map(|b| b.1[o]).collect::<Vec<_>>());
            let mean = s / n;
            let var = if samples > 1 { ((q - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            (mean, var.sqrt())
        })
        .collect()
}

pub(crate) fn mc_estimate(mean: f64, sd: f64, samples: usize, scale: f64) -> MomentEstimate {
    MomentEstimate {
        value: mean * scale,
        half_width: Z95 * sd * scale.abs() / (samples as f64).sqrt(),
        samples,
        method: Method::MonteCarlo,
    }
}
