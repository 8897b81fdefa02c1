//! Scalar covariance kernels with analytic derivatives.
//!
//! All models have i.i.d. components, so the matrix covariance is `k I_m`
//! and only the scalar kernel `k(x, y)` is needed. Derivatives are
//! `Cov(d^I f(x), d^J f(y))` for multi-indices given as coordinate lists.

use super::spectrum::{spherical_average, RadialSpectrum};
use super::spec::{KernelSpec, Model};
use crate::error::FieldError;
use std::f64::consts::TAU;

const SPHERE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum KernelKind {
    Gaussian,
    Berry,
    Radial(RadialSpectrum),
    Torus(Vec<[f64; 3]>),
    Kostlan(u32),
}

#[derive(Clone, Debug)]
pub struct Kernel {
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub kind: KernelKind,
}

impl Kernel {
    pub fn new(spec: &KernelSpec) -> Result<Self, FieldError> {
        spec.validate()?;
        let kind = match spec.model {
            Model::BargmannFock => KernelKind::Gaussian,
            Model::BerryMono => KernelKind::Berry,
            Model::BlackBody => KernelKind::Radial(RadialSpectrum::black_body(spec.n)),
            Model::CustomSpectral => KernelKind::Radial(RadialSpectrum::tabulated(
                spec.n,
                spec.params.spectral_radii.as_deref().unwrap_or_default(),
                spec.params.spectral_density.as_deref().unwrap_or_default(),
            )?),
            Model::TorusArithmetic => {
                let l2 = spec.params.lattice_norm_sq.unwrap_or_default();
                let pts = super::lattice_sphere(spec.n, l2);
                if pts.is_empty() {
                    return Err(FieldError::EmptyLatticeSphere(l2));
                }
                KernelKind::Torus(pts.iter().map(|p| padded(p)).collect())
            }
            Model::Kostlan => KernelKind::Kostlan(spec.params.degree.unwrap_or(1)),
        };
        Ok(Self { model: spec.model, n: spec.n, m: spec.m, kind })
    }

    pub fn point_dim(&self) -> usize {
        match self.kind {
            KernelKind::Kostlan(_) => self.n + 1,
            _ => self.n,
        }
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self.kind, KernelKind::Kostlan(_))
    }

    /// `k(x, x)`: lattice count for the torus, 1 otherwise.
    pub fn variance(&self) -> f64 {
        match &self.kind {
            KernelKind::Torus(l) => l.len() as f64,
            _ => 1.0,
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), FieldError> {
        let ok = x.len() == self.point_dim()
            && x.iter().all(|v| v.is_finite())
            && match self.kind {
                KernelKind::Kostlan(_) => (x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= SPHERE_TOL,
                _ => true,
            };
        if ok {
            Ok(())
        } else {
            Err(FieldError::OutOfDomain { model: self.model.tag(), point: x.to_vec() })
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64, FieldError> {
        self.derivative(x, y, &[], &[])
    }

    /// `Cov(d^dx f(x), d^dy f(y))`.
    pub fn derivative(&self, x: &[f64], y: &[f64], dx: &[usize], dy: &[usize]) -> Result<f64, FieldError> {
        self.check_point(x)?;
        self.check_point(y)?;
        let dim = self.point_dim();
        if dx.iter().chain(dy).any(|&i| i >= dim) {
            return Err(FieldError::InvalidSpec(format!("derivative index out of range for dimension {dim}")));
        }
        if let KernelKind::Kostlan(d) = self.kind {
            return Ok(kostlan_derivative(d, x, y, dx, dy));
        }
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let mut idx = dx.to_vec();
        idx.extend_from_slice(dy);
        let sign = if dy.len() % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * self.stationary_derivative(&z, &idx)?)
    }

    /// `d^idx k(z)` for a stationary kernel `k(x - y)`.
    pub fn stationary_derivative(&self, z: &[f64], idx: &[usize]) -> Result<f64, FieldError> {
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        match &self.kind {
            KernelKind::Torus(lattice) => {
                let order = idx.len();
                let mut acc = 0.0;
                for lam in lattice {
                    let theta = TAU * (0..self.n).map(|i| lam[i] * z[i]).sum::<f64>();
                    let mono: f64 = idx.iter().map(|&i| TAU * lam[i]).product();
                    let phase = match order % 4 {
                        0 => theta.cos(),
                        1 => -theta.sin(),
                        2 => -theta.cos(),
                        _ => theta.sin(),
                    };
                    acc += mono * phase;
                }
                Ok(acc)
            }
            KernelKind::Gaussian => {
                let mut counts = [0usize; 3];
                for &i in idx {
                    counts[i] += 1;
                }
                let mut v = (-0.5 * r * r).exp();
                for (i, &c) in counts.iter().enumerate().take(self.n) {
                    let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                    v *= sign * hermite_prob(c, z[i]);
                }
                Ok(v)
            }
            KernelKind::Kostlan(_) => Err(FieldError::InvalidSpec("kostlan kernel is not stationary".into())),
            _ => {
                let (k, q, k2) = self.isotropic_profile(r);
                match idx.len() {
                    0 => Ok(k),
                    1 => Ok(q * z[idx[0]]),
                    2 => {
                        let (i, j) = (idx[0], idx[1]);
                        let delta = if i == j { 1.0 } else { 0.0 };
                        if r == 0.0 {
                            Ok(q * delta)
                        } else {
                            let (ui, uj) = (z[i] / r, z[j] / r);
                            Ok(k2 * ui * uj + q * (delta - ui * uj))
                        }
                    }
                    3 if r == 0.0 => Ok(0.0),
                    4 if r == 0.0 => {
                        let s4 = self.fourth_radial_moment();
                        let n = self.n as f64;
                        let d = |a: usize, b: usize| if idx[a] == idx[b] { 1.0 } else { 0.0 };
                        let pairs = d(0, 1) * d(2, 3) + d(0, 2) * d(1, 3) + d(0, 3) * d(1, 2);
                        Ok(s4 / (n * (n + 2.0)) * pairs)
                    }
                    k => Err(FieldError::UnsupportedDerivative(k)),
                }
            }
        }
    }

    /// `(k(r), k'(r)/r, k''(r))` for the non-Gaussian isotropic kernels.
    pub fn isotropic_profile(&self, r: f64) -> (f64, f64, f64) {
        match &self.kind {
            KernelKind::Berry => spherical_average(self.n, r),
            KernelKind::Radial(spec) => spec.profile(r),
            KernelKind::Gaussian => {
                let k = (-0.5 * r * r).exp();
                (k, -k, (r * r - 1.0) * k)
            }
            _ => (f64::NAN, f64::NAN, f64::NAN),
        }
    }

    fn fourth_radial_moment(&self) -> f64 {
        match &self.kind {
            KernelKind::Berry => 1.0,
            KernelKind::Radial(s) => s.s4,
            KernelKind::Gaussian => (self.n * (self.n + 2)) as f64,
            _ => f64::NAN,
        }
    }

    /// `E|xi|^2` of the normalized spectral measure. For Kostlan this is the
    /// local-limit value `n d` in geodesic units.
    pub fn second_spectral_moment(&self) -> f64 {
        match &self.kind {
            KernelKind::Kostlan(d) => (self.n as f64) * (*d as f64),
            _ => {
                let z = vec![0.0; self.n];
                let lap: f64 = (0..self.n).map(|i| -self.stationary_derivative(&z, &[i, i]).unwrap()).sum();
                lap / self.variance()
            }
        }
    }
}

pub fn second_spectral_moment(spec: &KernelSpec) -> Result<f64, FieldError> {
    Ok(Kernel::new(spec)?.second_spectral_moment())
}

fn padded(p: &[i64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, v) in out.iter_mut().zip(p) {
        *o = *v as f64;
    }
    out
}

/// Probabilists' Hermite polynomial He_k.
fn hermite_prob(k: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = x * b - j as f64 * a;
        a = b;
        b = c;
    }
    b
}

#[derive(Clone, Copy)]
enum Slot {
    X(usize),
    Y(usize),
}

/// Derivatives of `(x . y)^d` via the partition expansion: every block is a
/// single slot (contributing the other point's coordinate) or an x-y pair
/// (contributing a Kronecker delta).
fn kostlan_derivative(d: u32, x: &[f64], y: &[f64], dx: &[usize], dy: &[usize]) -> f64 {
    let s: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slots: Vec<Slot> = dx.iter().map(|&i| Slot::X(i)).chain(dy.iter().map(|&j| Slot::Y(j))).collect();
    let mut total = 0.0;
    partitions(&slots, &mut vec![false; slots.len()], 0, 1.0, x, y, &mut |blocks, weight| {
        total += weight * falling_power(d, blocks, s);
    });
    total
}

fn falling_power(d: u32, k: usize, s: f64) -> f64 {
    if k as u32 > d {
        return 0.0;
    }
    let coef: f64 = (0..k).map(|i| (d - i as u32) as f64).product();
    coef * s.powi((d - k as u32) as i32)
}

fn partitions(
    slots: &[Slot],
    used: &mut Vec<bool>,
    blocks: usize,
    weight: f64,
    x: &[f64],
    y: &[f64],
    emit: &mut dyn FnMut(usize, f64),
) {
    let first = match used.iter().position(|u| !u) {
        Some(p) => p,
        None => return emit(blocks, weight),
    };
    used[first] = true;
    let single = match slots[first] {
        Slot::X(i) => y[i],
        Slot::Y(j) => x[j],
    };
    partitions(slots, used, blocks + 1, weight * single, x, y, emit);
    for other in first + 1..slots.len() {
        if used[other] {
            continue;
        }
        let delta = match (slots[first], slots[other]) {
            (Slot::X(i), Slot::Y(j)) | (Slot::Y(j), Slot::X(i)) => (i == j) as u8 as f64,
            _ => continue,
        };
        if delta == 0.0 {
            continue;
        }
        used[other] = true;
        partitions(slots, used, blocks + 1, weight, x, y, emit);
        used[other] = false;
    }
    used[first] = false;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric_partial(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
        let e = 1e-5;
        let mut a = x.to_vec();
        let mut b = x.to_vec();
        a[i] += e;
        b[i] -= e;
        (f(&a) - f(&b)) / (2.0 * e)
    }

    #[test]
    fn stationary_first_and_second_derivatives_match_differences() {
        let specs = [
            KernelSpec::bargmann_fock(3, 1),
            KernelSpec::berry(3, 1),
            KernelSpec::berry(2, 1),
            KernelSpec::black_body(3, 1),
            KernelSpec::torus(3, 1, 9),
        ];
        let y = [0.1, -0.2, 0.05];
        for spec in &specs {
            let k = Kernel::new(spec).unwrap();
            let n = spec.n;
            let x = [0.37, 0.21, -0.13];
            let (x, y) = (&x[..n], &y[..n]);
            for i in 0..n {
                let f = |p: &[f64]| k.value(p, y).unwrap();
                let num = numeric_partial(&f, x, i);
                let ana = k.derivative(x, y, &[i], &[]).unwrap();
                assert!((num - ana).abs() < 1e-6 * (1.0 + ana.abs()), "{:?} d{i}: {num} {ana}", spec.model);
                for j in 0..n {
                    let g = |p: &[f64]| k.derivative(x, p, &[i], &[]).unwrap();
                    let num = numeric_partial(&g, y, j);
                    let ana = k.derivative(x, y, &[i], &[j]).unwrap();
                    assert!((num - ana).abs() < 1e-5 * (1.0 + ana.abs()), "{:?} d{i}d{j}: {num} {ana}", spec.model);
                }
            }
        }
    }

    #[test]
    fn fourth_moments_at_origin() {
        // BF: d^4 e^{-|z|^2/2} at 0 is 3 for iiii and 1 for iijj.
        let k = Kernel::new(&KernelSpec::bargmann_fock(2, 1)).unwrap();
        let z = [0.0, 0.0];
        assert!((k.stationary_derivative(&z, &[0, 0, 0, 0]).unwrap() - 3.0).abs() < 1e-14);
        assert!((k.stationary_derivative(&z, &[0, 0, 1, 1]).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(k.stationary_derivative(&z, &[0, 0, 0, 1]).unwrap(), 0.0);
        // Berry n = 3: E xi_1^4 = 1/5.
        let b = Kernel::new(&KernelSpec::berry(3, 1)).unwrap();
        let v = b.stationary_derivative(&[0.0; 3], &[2, 2, 2, 2]).unwrap();
        assert!((v - 0.2).abs() < 1e-14);
        assert!(matches!(
            b.stationary_derivative(&[0.1, 0.0, 0.0], &[0, 0, 0, 0]),
            Err(FieldError::UnsupportedDerivative(4))
        ));
    }

    #[test]
    fn kostlan_derivatives_match_feature_sums() {
        // (x.y)^2 = sum_J binom(2,J) x^J y^J over monomials of degree 2 in 3 variables.
        let k = Kernel::new(&KernelSpec::kostlan(2, 1, 2)).unwrap();
        let x = [0.6, 0.0, 0.8];
        let y = [0.0, 0.6, 0.8];
        let feature_grad = |p: &[f64], i: usize| -> Vec<f64> {
            // gradient of each scaled monomial sqrt(binom) p^J wrt p_i
            let mut out = Vec::new();
            for a in 0..3 {
                for b in a..3 {
                    let c: f64 = if a == b { 1.0 } else { 2f64.sqrt() };
                    let mut g = 0.0;
                    if a == i {
                        g += p[b];
                    }
                    if b == i {
                        g += p[a];
                    }
                    out.push(c * g);
                }
            }
            out
        };
        for i in 0..3 {
            for j in 0..3 {
                let expected: f64 = feature_grad(&x, i).iter().zip(feature_grad(&y, j)).map(|(a, b)| a * b).sum();
                let got = k.derivative(&x, &y, &[i], &[j]).unwrap();
                assert!((got - expected).abs() < 1e-12, "{i}{j}: {got} {expected}");
            }
        }
        // Second derivatives in x of s^2 are 2 y_i y_j.
        let got = k.derivative(&x, &y, &[1, 2], &[]).unwrap();
        assert!((got - 2.0 * y[1] * y[2]).abs() < 1e-12);
        // d_x0^2 s^2 = 2 y_0^2, then d_y0^2 gives 4.
        let got = k.derivative(&x, &y, &[0, 0], &[0, 0]).unwrap();
        assert!((got - 4.0).abs() < 1e-12);
    }

    #[test]
    fn kostlan_rejects_off_sphere_points() {
        let k = Kernel::new(&KernelSpec::kostlan(2, 1, 3)).unwrap();
        assert!(matches!(k.value(&[1.0, 1.0, 0.0], &[1.0, 0.0, 0.0]), Err(FieldError::OutOfDomain { .. })));
    }

    #[test]
    fn second_moments() {
        let s = |spec: KernelSpec| second_spectral_moment(&spec).unwrap();
        assert!((s(KernelSpec::bargmann_fock(2, 1)) - 2.0).abs() < 1e-12);
        assert!((s(KernelSpec::berry(3, 2)) - 1.0).abs() < 1e-12);
        let t = s(KernelSpec::torus(3, 2, 9));
        assert!((t - TAU * TAU * 9.0).abs() < 1e-9);
    }
}
