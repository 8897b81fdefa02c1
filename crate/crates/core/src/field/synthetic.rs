//! Deterministic fields given by closures, used for golden shapes and
//! perturbation tests.

use super::{Field, Jet};
use crate::error::FieldError;

/// A field given by its values; derivatives by central differences.
pub struct ImplicitField<F> {
    dim: usize,
    m: usize,
    f: F,
    step: f64,
}

impl<F> ImplicitField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, m: usize, f: F) -> Self {
        Self { dim, m, f, step: 1e-4 }
    }

    fn shifted(&self, x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
        let mut p = x.to_vec();
        for &(i, d) in moves {
            p[i] += d;
        }
        (self.f)(&p)
    }
}

impl<F> Field for ImplicitField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn codim(&self) -> usize {
        self.m
    }

    fn eval(&self, x: &[f64], order: usize) -> Result<Jet, FieldError> {
        if x.len() != self.dim {
            return Err(FieldError::OutOfDomain { model: "implicit", point: x.to_vec() });
        }
        let (n, m, h) = (self.dim, self.m, self.step);
        let mut jet = Jet::zeros(n, m, order);
        jet.value = (self.f)(x);
        if order >= 1 {
            for i in 0..n {
                let a = self.shifted(x, &[(i, h)]);
                let b = self.shifted(x, &[(i, -h)]);
                for alpha in 0..m {
                    jet.grad[alpha * n + i] = (a[alpha] - b[alpha]) / (2.0 * h);
                }
            }
        }
        if order >= 2 {
            for i in 0..n {
                for j in i..n {
                    let vals: Vec<f64> = if i == j {
                        let a = self.shifted(x, &[(i, h)]);
                        let b = self.shifted(x, &[(i, -h)]);
                        (0..m).map(|al| (a[al] - 2.0 * jet.value[al] + b[al]) / (h * h)).collect()
                    } else {
                        let pp = self.shifted(x, &[(i, h), (j, h)]);
                        let pm = self.shifted(x, &[(i, h), (j, -h)]);
                        let mp = self.shifted(x, &[(i, -h), (j, h)]);
                        let mm = self.shifted(x, &[(i, -h), (j, -h)]);
                        (0..m).map(|al| (pp[al] - pm[al] - mp[al] + mm[al]) / (4.0 * h * h)).collect()
                    };
                    for (alpha, v) in vals.into_iter().enumerate() {
                        jet.hess[(alpha * n + i) * n + j] = v;
                        jet.hess[(alpha * n + j) * n + i] = v;
                    }
                }
            }
        }
        Ok(jet)
    }
}

/// `base + delta * other`.
pub struct PerturbedField<'a> {
    pub base: &'a dyn Field,
    pub other: &'a dyn Field,
    pub delta: f64,
}

impl Field for PerturbedField<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn codim(&self) -> usize {
        self.base.codim()
    }

    fn eval(&self, x: &[f64], order: usize) -> Result<Jet, FieldError> {
        let mut a = self.base.eval(x, order)?;
        let b = self.other.eval(x, order)?;
        for (p, q) in a
            .value
            .iter_mut()
            .zip(&b.value)
            .chain(a.grad.iter_mut().zip(&b.grad))
            .chain(a.hess.iter_mut().zip(&b.hess))
        {
            *p += self.delta * q;
        }
        Ok(a)
    }

    fn eval_lattice(
        &self,
        lattice: &super::Lattice,
        order: usize,
    ) -> Result<super::LatticeValues, FieldError> {
        let mut a = self.base.eval_lattice(lattice, order)?;
        let b = self.other.eval_lattice(lattice, order)?;
        for (p, q) in a.values.iter_mut().zip(&b.values).chain(a.grads.iter_mut().zip(&b.grads)) {
            *p += self.delta * q;
        }
        Ok(a)
    }
}
