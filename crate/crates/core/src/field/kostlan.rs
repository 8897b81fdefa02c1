//! Kostlan polynomials `R_d(x) = sum_{|J| = d} sqrt(binom(d, J)) a_J x^J`
//! on the unit sphere of R^{n+1}. Derivatives are ambient.

use super::Jet;
use crate::rng::CoefficientStream;

#[derive(Clone, Debug)]
pub struct KostlanField {
    /// Sphere dimension; points live in R^{n+1}.
    pub n: usize,
    pub m: usize,
    pub degree: u32,
    exponents: Vec<[u32; 4]>,
    /// `sqrt(binom(d, J))` per monomial.
    scale: Vec<f64>,
    coeffs: Vec<f64>,
}

pub fn monomials(vars: usize, degree: u32) -> Vec<[u32; 4]> {
    let mut out = Vec::new();
    let mut cur = [0u32; 4];
    fn rec(var: usize, vars: usize, left: u32, cur: &mut [u32; 4], out: &mut Vec<[u32; 4]>) {
        if var + 1 == vars {
            cur[var] = left;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[var] = e;
            rec(var + 1, vars, left - e, cur, out);
        }
        cur[var] = 0;
    }
    rec(0, vars, degree, &mut cur, &mut out);
    out
}

impl KostlanField {
    pub fn sample(n: usize, m: usize, degree: u32, seed: u64) -> Self {
        let count = monomials(n + 1, degree).len() * m;
        let coeffs = CoefficientStream::new(seed, "kostlan").normals(0, count);
        Self::from_coefficients(n, m, degree, coeffs).expect("coefficient count matches")
    }

    pub fn from_coefficients(n: usize, m: usize, degree: u32, coeffs: Vec<f64>) -> Option<Self> {
        let exponents = monomials(n + 1, degree);
        if coeffs.len() != exponents.len() * m {
            return None;
        }
        let lf = |k: u32| libm::lgamma(k as f64 + 1.0);
        let scale = exponents
            .iter()
            .map(|j| (0.5 * (lf(degree) - j.iter().map(|&e| lf(e)).sum::<f64>())).exp())
            .collect();
        Some(Self { n, m, degree, exponents, scale, coeffs })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let dim = self.n + 1;
        let d = self.degree as usize;
        let pows: Vec<Vec<f64>> = x
            .iter()
            .map(|&v| {
                let mut p = vec![1.0; d + 1];
                for e in 1..=d {
                    p[e] = p[e - 1] * v;
                }
                p
            })
            .collect();
        // x_i^{e - k} scaled by the falling factorial e (e-1)..(e-k+1).
        let dpow = |i: usize, e: u32, k: u32| -> f64 {
            if k > e {
                return 0.0;
            }
            let ff: f64 = (0..k).map(|t| (e - t) as f64).product();
            ff * pows[i][(e - k) as usize]
        };
        let count = self.exponents.len();
        let mut jet = Jet::zeros(dim, self.m, order);
        for (t, (j, s)) in self.exponents.iter().zip(&self.scale).enumerate() {
            let mut w = [0.0; 2];
            for (alpha, slot) in w.iter_mut().enumerate().take(self.m) {
                *slot = self.coeffs[alpha * count + t] * s;
            }
            let mono: f64 = (0..dim).map(|i| pows[i][j[i] as usize]).product();
            for alpha in 0..self.m {
                jet.value[alpha] += w[alpha] * mono;
            }
            if order == 0 {
                continue;
            }
            for a in 0..dim {
                let g: f64 = (0..dim).map(|i| if i == a { dpow(i, j[i], 1) } else { pows[i][j[i] as usize] }).product();
                for alpha in 0..self.m {
                    jet.grad[alpha * dim + a] += w[alpha] * g;
                }
                if order >= 2 {
                    for b in a..dim {
                        let h: f64 = (0..dim)
                            .map(|i| {
                                let k = (i == a) as u32 + (i == b) as u32;
                                dpow(i, j[i], k)
                            })
                            .product();
                        for alpha in 0..self.m {
                            jet.hess[(alpha * dim + a) * dim + b] += w[alpha] * h;
                            if b != a {
                                jet.hess[(alpha * dim + b) * dim + a] += w[alpha] * h;
                            }
                        }
                    }
                }
            }
        }
        jet
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(3, 2).len(), 6);
        assert_eq!(monomials(4, 3).len(), 20);
        assert!(monomials(3, 5).iter().all(|j| j.iter().sum::<u32>() == 5));
    }

    #[test]
    fn weights_sum_to_norm_power() {
        // sum_J binom(d,J) x^{2J} = |x|^{2d}
        let f = KostlanField::from_coefficients(2, 1, 4, vec![0.0; 15]).unwrap();
        let x = [0.3f64, -0.5, 0.7];
        let s: f64 = f
            .exponents
            .iter()
            .zip(&f.scale)
            .map(|(j, s)| s * s * (0..3).map(|i| x[i].powi(2 * j[i] as i32)).product::<f64>())
            .sum();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((s - r2.powi(4)).abs() < 1e-12);
    }
}
