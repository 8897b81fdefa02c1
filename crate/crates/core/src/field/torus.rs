//! Arithmetic random waves `S(x) = sum_lambda (xi + i eta) e^{2 pi i <lambda, x>}`
//! on the flat torus; components are `Re S` and, for m = 2, `Im S`.

use super::plane_wave::{accumulate_waves, cmul};
use super::{Jet, Lattice, LatticeValues};
use crate::rng::CoefficientStream;
use std::f64::consts::TAU;

#[derive(Clone, Debug)]
pub struct TorusField {
    pub n: usize,
    pub m: usize,
    pub lattice: Vec<Vec<i64>>,
    /// Interleaved `(xi, eta)` per lattice point.
    coeffs: Vec<f64>,
}

impl TorusField {
    pub fn sample(n: usize, m: usize, lattice: Vec<Vec<i64>>, seed: u64) -> Self {
        let mut stream = CoefficientStream::new(seed, "torus_arithmetic");
        let coeffs = stream.normals(0, 2 * lattice.len());
        Self { n, m, lattice, coeffs }
    }

    pub fn from_coefficients(n: usize, m: usize, lattice: Vec<Vec<i64>>, coeffs: Vec<f64>) -> Option<Self> {
        (coeffs.len() == 2 * lattice.len()).then_some(Self { n, m, lattice, coeffs })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let n = self.n;
        // Accumulate the complex sum and its derivatives, then split.
        let mut val = (0.0, 0.0);
        let mut grad = [(0.0, 0.0); 3];
        let mut hess = [[(0.0, 0.0); 3]; 3];
        for (t, lam) in self.lattice.iter().enumerate() {
            let theta = TAU * (0..n).map(|i| lam[i] as f64 * x[i]).sum::<f64>();
            let (s, c) = theta.sin_cos();
            let z = cmul((self.coeffs[2 * t], self.coeffs[2 * t + 1]), (c, s));
            val.0 += z.0;
            val.1 += z.1;
            if order >= 1 {
                for i in 0..n {
                    // multiply by i 2 pi lambda_i
                    let f = TAU * lam[i] as f64;
                    grad[i].0 -= f * z.1;
                    grad[i].1 += f * z.0;
                }
            }
            if order >= 2 {
                for i in 0..n {
                    for j in 0..n {
                        let f = TAU * TAU * (lam[i] * lam[j]) as f64;
                        hess[i][j].0 -= f * z.0;
                        hess[i][j].1 -= f * z.1;
                    }
                }
            }
        }
        let mut jet = Jet::zeros(n, self.m, order);
        for alpha in 0..self.m {
            let part = |z: (f64, f64)| if alpha == 0 { z.0 } else { z.1 };
            jet.value[alpha] = part(val);
            if order >= 1 {
                for i in 0..n {
                    jet.grad[alpha * n + i] = part(grad[i]);
                }
            }
            if order >= 2 {
                for i in 0..n {
                    for j in 0..n {
                        jet.hess[(alpha * n + i) * n + j] = part(hess[i][j]);
                    }
                }
            }
        }
        jet
    }

    pub fn lattice_values(&self, lattice: &Lattice, order: usize) -> LatticeValues {
        let order = order.min(1);
        let mut out = LatticeValues::zeros(lattice, self.m, order);
        let axes: Vec<Vec<f64>> = (0..self.n).map(|k| lattice.axis(k)).collect();
        for alpha in 0..self.m {
            // Im(z w) = Re(-i z w): the second component rotates the phase by -pi/2.
            let terms: Vec<_> = self
                .lattice
                .iter()
                .enumerate()
                .map(|(t, lam)| {
                    let (xi, eta) = (self.coeffs[2 * t], self.coeffs[2 * t + 1]);
                    let (mag, mut phase) = ((xi * xi + eta * eta).sqrt(), eta.atan2(xi));
                    if alpha == 1 {
                        phase -= TAU / 4.0;
                    }
                    let mut k = [0.0; 3];
                    let factors = (0..self.n)
                        .map(|a| {
                            k[a] = TAU * lam[a] as f64;
                            // the magnitude is folded into the first axis
                            let scale = if a == 0 { mag } else { 1.0 };
                            axes[a]
                                .iter()
                                .map(|&x| {
                                    let (s, c) = (k[a] * x).sin_cos();
                                    (scale * c, scale * s)
                                })
                                .collect()
                        })
                        .collect();
                    (k, phase, factors)
                })
                .collect();
            accumulate_waves(&mut out, lattice, alpha, order, &terms, 1.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lattice_sphere;

    #[test]
    fn coefficient_count_and_periodicity() {
        let f = TorusField::sample(3, 2, lattice_sphere(3, 1), 4);
        assert_eq!(f.coefficients().len(), 12);
        let x = [0.13, 0.71, 0.42];
        let a = f.jet(&x, 0);
        let b = f.jet(&[x[0] + 1.0, x[1], x[2] - 2.0], 0);
        for alpha in 0..2 {
            assert!((a.value[alpha] - b.value[alpha]).abs() < 1e-12);
        }
    }

    #[test]
    fn lattice_matches_pointwise() {
        let f = TorusField::sample(3, 2, lattice_sphere(3, 9), 8);
        let lat = Lattice::new(vec![0.0, 0.1, 0.2], 1.0 / 17.0, vec![5, 4, 3]);
        let lv = f.lattice_values(&lat, 1);
        for idx in 0..lat.len() {
            let jet = f.jet(&lat.point(idx), 1);
            for a in 0..2 {
                assert!((lv.value(idx, a) - jet.value[a]).abs() < 1e-9);
                for i in 0..3 {
                    assert!((lv.grad(idx, a, i) - jet.grad[a * 3 + i]).abs() < 1e-8);
                }
            }
        }
    }
}
