//! Gaussian field ensembles: specs, kernels, sampled realizations.

pub mod bargmann_fock;
pub mod kernel;
pub mod kostlan;
pub mod plane_wave;
pub mod sidecar;
pub mod spec;
pub mod spectrum;
pub mod synthetic;
pub mod torus;

pub use kernel::Kernel;
pub use spec::{KernelSpec, Model, Params, SpecBlock, Truncation};

use crate::error::FieldError;
use bargmann_fock::BargmannFockField;
use kostlan::KostlanField;
use nalgebra::DMatrix;
use plane_wave::PlaneWaveField;
use spectrum::RadialSpectrum;
use torus::TorusField;

/// Value, gradient and Hessian of an R^m-valued field at a point.
///
/// `grad` is m x n row-major, `hess` is m x n x n. Both are empty when the
/// requested order is lower.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet {
    pub fn zeros(n: usize, m: usize, order: usize) -> Self {
        Self {
            n,
            m,
            order,
            value: vec![0.0; m],
            grad: if order >= 1 { vec![0.0; m * n] } else { Vec::new() },
            hess: if order >= 2 { vec![0.0; m * n * n] } else { Vec::new() },
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.value.iter_mut().chain(self.grad.iter_mut()).chain(self.hess.iter_mut()).for_each(|v| *v *= s);
    }

    pub fn grad_row(&self, alpha: usize) -> &[f64] {
        &self.grad[alpha * self.n..(alpha + 1) * self.n]
    }

    pub fn hess_of(&self, alpha: usize) -> &[f64] {
        &self.hess[alpha * self.n * self.n..(alpha + 1) * self.n * self.n]
    }

    pub fn grad_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.n, &self.grad)
    }
}

/// Regular grid of `counts[k]` points per axis starting at `origin` with
/// spacing `spacing`. Points are indexed with the first axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub counts: Vec<usize>,
}

impl Lattice {
    pub fn new(origin: Vec<f64>, spacing: f64, counts: Vec<usize>) -> Self {
        Self { origin, spacing, counts }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn index(&self, ijk: &[usize]) -> usize {
        let mut idx = 0;
        for k in (0..self.counts.len()).rev() {
            idx = idx * self.counts[k] + ijk[k];
        }
        idx
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = idx % c;
                idx /= c;
                i
            })
            .collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).iter().enumerate().map(|(k, &i)| self.coord(k, i)).collect()
    }
}

/// Field values (and optionally gradients) on every lattice point.
#[derive(Clone, Debug)]
pub struct LatticeValues {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
}

impl LatticeValues {
    pub fn zeros(lattice: &Lattice, m: usize, order: usize) -> Self {
        let n = lattice.counts.len();
        let len = lattice.len();
        Self {
            n,
            m,
            order,
            values: vec![0.0; len * m],
            grads: if order >= 1 { vec![0.0; len * m * n] } else { Vec::new() },
        }
    }

    pub fn value(&self, idx: usize, alpha: usize) -> f64 {
        self.values[idx * self.m + alpha]
    }

    pub fn grad(&self, idx: usize, alpha: usize, i: usize) -> f64 {
        self.grads[(idx * self.m + alpha) * self.n + i]
    }

    /// Writes the value (`slot = None`) or the `i`-th gradient entry.
    pub fn set(&mut self, idx: usize, alpha: usize, slot: Option<usize>, v: f64) {
        match slot {
            None => self.values[idx * self.m + alpha] = v,
            Some(i) => self.grads[(idx * self.m + alpha) * self.n + i] = v,
        }
    }

    pub fn set_jet(&mut self, idx: usize, jet: &Jet) {
        for alpha in 0..self.m {
            self.values[idx * self.m + alpha] = jet.value[alpha];
            if self.order >= 1 {
                for i in 0..self.n {
                    self.grads[(idx * self.m + alpha) * self.n + i] = jet.grad[alpha * self.n + i];
                }
            }
        }
    }
}

/// Anything that answers jet queries: sampled realizations and synthetic test fields.
pub trait Field: Sync {
    /// Dimension of evaluation points.
    fn dim(&self) -> usize;
    /// Number of components m.
    fn codim(&self) -> usize;
    fn eval(&self, x: &[f64], order: usize) -> Result<Jet, FieldError>;

    /// Values (order 0) or values and gradients (order 1) on a lattice.
    fn eval_lattice(&self, lattice: &Lattice, order: usize) -> Result<LatticeValues, FieldError> {
        let order = order.min(1);
        let mut out = LatticeValues::zeros(lattice, self.codim(), order);
        for idx in 0..lattice.len() {
            let jet = self.eval(&lattice.point(idx), order)?;
            out.set_jet(idx, &jet);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
enum Inner {
    BargmannFock(BargmannFockField),
    Waves(PlaneWaveField),
    Torus(TorusField),
    Kostlan(KostlanField),
}

/// One sampled field, immutable after construction.
#[derive(Clone, Debug)]
pub struct FieldRealization {
    spec: KernelSpec,
    seed: u64,
    inner: Inner,
}

pub fn sample_field(spec: &KernelSpec, seed: u64) -> Result<FieldRealization, FieldError> {
    spec.validate()?;
    let (n, m) = (spec.n, spec.m);
    let inner = match spec.model {
        Model::BargmannFock => {
            let degree = spec.bf_degree()?;
            let radius = spec.truncation.radius.unwrap_or_default();
            Inner::BargmannFock(BargmannFockField::sample(n, m, degree, radius, seed))
        }
        Model::BerryMono => Inner::Waves(PlaneWaveField::sample(n, m, spec.waves(), None, seed)),
        Model::BlackBody | Model::CustomSpectral => {
            let radial = radial_spectrum(spec)?;
            Inner::Waves(PlaneWaveField::sample(n, m, spec.waves(), Some(&radial), seed))
        }
        Model::TorusArithmetic => {
            let lattice = lattice_sphere(n, spec.params.lattice_norm_sq.unwrap_or_default());
            Inner::Torus(TorusField::sample(n, m, lattice, seed))
        }
        Model::Kostlan => Inner::Kostlan(KostlanField::sample(n, m, spec.params.degree.unwrap_or(1), seed)),
    };
    Ok(FieldRealization { spec: spec.clone(), seed, inner })
}

fn radial_spectrum(spec: &KernelSpec) -> Result<RadialSpectrum, FieldError> {
    match spec.model {
        Model::BlackBody => Ok(RadialSpectrum::black_body(spec.n)),
        _ => RadialSpectrum::tabulated(
            spec.n,
            spec.params.spectral_radii.as_deref().unwrap_or_default(),
            spec.params.spectral_density.as_deref().unwrap_or_default(),
        ),
    }
}

impl FieldRealization {
    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// The wave set of a plane-wave realization.
    pub fn plane_waves(&self) -> Option<&PlaneWaveField> {
        match &self.inner {
            Inner::Waves(w) => Some(w),
            _ => None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coefficients(&self) -> Vec<f64> {
        match &self.inner {
            Inner::BargmannFock(f) => f.coefficients().to_vec(),
            Inner::Waves(f) => f.coefficients(),
            Inner::Torus(f) => f.coefficients().to_vec(),
            Inner::Kostlan(f) => f.coefficients().to_vec(),
        }
    }

    /// Rebuilds a realization from a dumped coefficient vector.
    pub fn from_coefficients(spec: KernelSpec, seed: u64, coeffs: Vec<f64>) -> Result<Self, FieldError> {
        spec.validate()?;
        let (n, m) = (spec.n, spec.m);
        let bad = || FieldError::Sidecar("coefficient count does not match the spec".into());
        let inner = match spec.model {
            Model::BargmannFock => {
                let degree = spec.bf_degree()?;
                if coeffs.len() != BargmannFockField::coefficient_count(n, m, degree) {
                    return Err(bad());
                }
                let radius = spec.truncation.radius.unwrap_or_default();
                Inner::BargmannFock(BargmannFockField::from_coefficients(n, m, degree, radius, coeffs))
            }
            Model::BerryMono | Model::BlackBody | Model::CustomSpectral => {
                Inner::Waves(PlaneWaveField::from_coefficients(n, m, &coeffs).ok_or_else(bad)?)
            }
            Model::TorusArithmetic => {
                let lattice = lattice_sphere(n, spec.params.lattice_norm_sq.unwrap_or_default());
                Inner::Torus(TorusField::from_coefficients(n, m, lattice, coeffs).ok_or_else(bad)?)
            }
            Model::Kostlan => Inner::Kostlan(
                KostlanField::from_coefficients(n, m, spec.params.degree.unwrap_or(1), coeffs).ok_or_else(bad)?,
            ),
        };
        Ok(Self { spec, seed, inner })
    }

    /// Variance of each component at a point (lattice count for the torus).
    pub fn component_variance(&self) -> f64 {
        match &self.inner {
            Inner::Torus(f) => f.lattice.len() as f64,
            _ => 1.0,
        }
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FieldError> {
        let out = || FieldError::OutOfDomain { model: self.spec.model.tag(), point: x.to_vec() };
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(out());
        }
        match &self.inner {
            Inner::BargmannFock(f) => {
                if x.iter().any(|v| v.abs() > f.radius + 1e-9) {
                    return Err(out());
                }
            }
            Inner::Kostlan(_) => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (r - 1.0).abs() > 1e-9 {
                    return Err(out());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl Field for FieldRealization {
    fn dim(&self) -> usize {
        self.spec.point_dim()
    }

    fn codim(&self) -> usize {
        self.spec.m
    }

    fn eval(&self, x: &[f64], order: usize) -> Result<Jet, FieldError> {
        if order > 2 {
            return Err(FieldError::UnsupportedDerivative(order));
        }
        self.check_domain(x)?;
        Ok(match &self.inner {
            Inner::BargmannFock(f) => f.jet(x, order),
            Inner::Waves(f) => f.jet(x, order),
            Inner::Torus(f) => f.jet(x, order),
            Inner::Kostlan(f) => f.jet(x, order),
        })
    }

    fn eval_lattice(&self, lattice: &Lattice, order: usize) -> Result<LatticeValues, FieldError> {
        let last = lattice.point(lattice.len().saturating_sub(1));
        self.check_domain(&lattice.origin)?;
        self.check_domain(&last)?;
        Ok(match &self.inner {
            Inner::BargmannFock(f) => f.lattice_values(lattice, order),
            Inner::Waves(f) => f.lattice_values(lattice, order),
            Inner::Torus(f) => f.lattice_values(lattice, order),
            Inner::Kostlan(_) => {
                return Err(FieldError::InvalidSpec("kostlan fields are not evaluated on flat lattices".into()))
            }
        })
    }
}

/// All integer vectors in Z^n with squared norm `norm_sq`, lexicographic.
pub fn lattice_sphere(n: usize, norm_sq: u64) -> Vec<Vec<i64>> {
    let bound = (norm_sq as f64).sqrt().floor() as i64 + 1;
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(k: usize, left: i64, bound: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if k == cur.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in -bound..=bound {
            if v * v <= left {
                cur[k] = v;
                rec(k + 1, left - v * v, bound, cur, out);
            }
        }
    }
    if n > 0 {
        rec(0, norm_sq as i64, bound, &mut cur, &mut out);
    } else if norm_sq == 0 {
        out.push(Vec::new());
    }
    out
}

/// m x m covariance `K(x, y)` at a point pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrixValue {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

pub fn covariance(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<CovarianceMatrixValue, FieldError> {
    let k = Kernel::new(spec)?.value(x, y)?;
    Ok(CovarianceMatrixValue {
        x: x.to_vec(),
        y: y.to_vec(),
        matrix: DMatrix::identity(spec.m, spec.m) * k,
    })
}

/// `K(x + u/L, x + v/L)`. For Kostlan, `x` is on the sphere and `u`, `v`
/// are coordinates in a fixed orthonormal tangent frame at `x`, mapped by
/// the exponential map.
pub fn rescaled_covariance(
    spec: &KernelSpec,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    scale: f64,
) -> Result<CovarianceMatrixValue, FieldError> {
    if !(scale > 0.0) {
        return Err(FieldError::InvalidSpec("rescaling factor must be positive".into()));
    }
    let (p, q) = if spec.model == Model::Kostlan {
        let kernel = Kernel::new(spec)?;
        kernel.check_point(x)?;
        if u.len() != spec.n || v.len() != spec.n {
            return Err(FieldError::OutOfDomain { model: spec.model.tag(), point: u.to_vec() });
        }
        let frame = sphere_tangent_frame(x);
        (sphere_exp(x, &frame, u, scale), sphere_exp(x, &frame, v, scale))
    } else {
        let shift = |w: &[f64]| -> Result<Vec<f64>, FieldError> {
            if w.len() != x.len() {
                return Err(FieldError::OutOfDomain { model: spec.model.tag(), point: w.to_vec() });
            }
            Ok(x.iter().zip(w).map(|(a, b)| a + b / scale).collect())
        };
        (shift(u)?, shift(v)?)
    };
    covariance(spec, &p, &q)
}

/// Orthonormal basis of the tangent space at `x` on the unit sphere, built
/// by Gram-Schmidt on the coordinate axes least aligned with `x`.
pub fn sphere_tangent_frame(x: &[f64]) -> Vec<Vec<f64>> {
    let dim = x.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs()));
    let mut basis: Vec<Vec<f64>> = vec![x.to_vec()];
    for &k in order.iter().take(dim - 1) {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        for b in &basis {
            let d: f64 = e.iter().zip(b).map(|(p, q)| p * q).sum();
            e.iter_mut().zip(b).for_each(|(p, q)| *p -= d * q);
        }
        let norm = e.iter().map(|p| p * p).sum::<f64>().sqrt();
        e.iter_mut().for_each(|p| *p /= norm);
        basis.push(e);
    }
    basis.remove(0);
    basis
}

fn sphere_exp(x: &[f64], frame: &[Vec<f64>], u: &[f64], scale: f64) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for (c, t) in u.iter().zip(frame) {
        w.iter_mut().zip(t).for_each(|(a, b)| *a += c / scale * b);
    }
    let t = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    if t == 0.0 {
        return x.to_vec();
    }
    let (s, c) = t.sin_cos();
    let p: Vec<f64> = x.iter().zip(&w).map(|(a, b)| c * a + s * b / t).collect();
    let norm = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    p.into_iter().map(|a| a / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sphere_counts() {
        assert_eq!(lattice_sphere(2, 1).len(), 4);
        assert_eq!(lattice_sphere(2, 25).len(), 12);
        assert_eq!(lattice_sphere(3, 2).len(), 12);
        assert_eq!(lattice_sphere(3, 9).len(), 30);
        assert!(lattice_sphere(2, 3).is_empty());
        assert_eq!(lattice_sphere(3, 0), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn lattice_indexing_round_trip() {
        let lat = Lattice::new(vec![0.0, 1.0, 2.0], 0.5, vec![3, 4, 5]);
        for idx in 0..lat.len() {
            assert_eq!(lat.index(&lat.multi_index(idx)), idx);
        }
        assert_eq!(lat.point(1), vec![0.5, 1.0, 2.0]);
        assert_eq!(lat.point(3), vec![0.0, 1.5, 2.0]);
    }

    #[test]
    fn tangent_frame_is_orthonormal() {
        let x = [0.48, -0.6, 0.64];
        let f = sphere_tangent_frame(&x);
        assert_eq!(f.len(), 2);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        assert!(dot(&f[0], &x).abs() < 1e-14 && dot(&f[1], &x).abs() < 1e-14);
        assert!((dot(&f[0], &f[0]) - 1.0).abs() < 1e-14 && dot(&f[0], &f[1]).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let spec = KernelSpec::bargmann_fock(2, 1).with_radius(2.0);
        let f = sample_field(&spec, 1).unwrap();
        assert!(f.eval(&[1.0, 1.9], 2).is_ok());
        assert!(matches!(f.eval(&[2.5, 0.0], 0), Err(FieldError::OutOfDomain { .. })));
        assert!(matches!(f.eval(&[0.0], 0), Err(FieldError::OutOfDomain { .. })));
        let k = sample_field(&KernelSpec::kostlan(2, 1, 3), 1).unwrap();
        assert!(k.eval(&[0.0, 0.0, 1.0], 1).is_ok());
        assert!(k.eval(&[0.0, 0.0, 1.1], 1).is_err());
    }
}
