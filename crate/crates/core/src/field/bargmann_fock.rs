//! Bargmann-Fock realizations `f(x) = sum_J a_J prod_i g_{J_i}(x_i)` with
//! `g_j(x) = e^{-x^2/2} x^j / sqrt(j!)`, truncated at `J_i <= D`.

use super::{Jet, Lattice, LatticeValues};
use crate::rng::CoefficientStream;
use nalgebra::DMatrix;

/// Half-width of the index window kept around the Poisson mode `x^2`, in
/// units of its standard deviation `|x|`, plus a constant.
const WINDOW_SDS: f64 = 10.0;
const WINDOW_PAD: f64 = 12.0;

#[derive(Clone, Debug)]
pub struct BargmannFockField {
    pub n: usize,
    pub m: usize,
    pub degree: usize,
    pub radius: f64,
    coeffs: Vec<f64>,
    half_log_fact: Vec<f64>,
}

/// Basis values on an index window `[lo, lo + len)`, orders 0..=2.
struct Basis {
    lo: usize,
    vals: [Vec<f64>; 3],
}

impl BargmannFockField {
    pub fn coefficient_count(n: usize, m: usize, degree: usize) -> usize {
        m * (degree + 1).pow(n as u32)
    }

    pub fn sample(n: usize, m: usize, degree: usize, radius: f64, seed: u64) -> Self {
        let count = Self::coefficient_count(n, m, degree);
        let mut stream = CoefficientStream::new(seed, "bargmann_fock");
        let coeffs = stream.normals(0, count);
        Self::from_coefficients(n, m, degree, radius, coeffs)
    }

    pub fn from_coefficients(n: usize, m: usize, degree: usize, radius: f64, coeffs: Vec<f64>) -> Self {
        let mut half_log_fact = vec![0.0; degree + 2];
        for j in 1..half_log_fact.len() {
            half_log_fact[j] = half_log_fact[j - 1] + 0.5 * (j as f64).ln();
        }
        Self { n, m, degree, radius, coeffs, half_log_fact }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn block(&self) -> usize {
        (self.degree + 1).pow(self.n as u32)
    }

    fn window(&self, x: f64) -> (usize, usize) {
        let a = x.abs();
        let lo = (a * a - WINDOW_SDS * a - WINDOW_PAD).floor().max(0.0) as usize;
        let hi = ((a * a + WINDOW_SDS * a + WINDOW_PAD).ceil() as usize).min(self.degree);
        (lo.min(hi), hi)
    }

    fn g(&self, j: usize, x: f64) -> f64 {
        if x == 0.0 {
            return if j == 0 { 1.0 } else { 0.0 };
        }
        let mag = (-0.5 * x * x + j as f64 * x.abs().ln() - self.half_log_fact[j]).exp();
        if x < 0.0 && j % 2 == 1 {
            -mag
        } else {
            mag
        }
    }

    fn basis(&self, x: f64, order: usize) -> Basis {
        let (lo, hi) = self.window(x);
        let len = hi - lo + 1;
        let g: Vec<f64> = (lo..=hi).map(|j| self.g(j, x)).collect();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        if order >= 1 {
            // g'_j = sqrt(j) g_{j-1} - x g_j, with g_{lo-1} negligible.
            d1 = (0..len)
                .map(|t| {
                    let j = lo + t;
                    let prev = if t > 0 { g[t - 1] } else { 0.0 };
                    (j as f64).sqrt() * prev - x * g[t]
                })
                .collect();
        }
        if order >= 2 {
            d2 = (0..len)
                .map(|t| {
                    let j = lo + t;
                    let prev = if t > 0 { d1[t - 1] } else { 0.0 };
                    (j as f64).sqrt() * prev - g[t] - x * d1[t]
                })
                .collect();
        }
        Basis { lo, vals: [g, d1, d2] }
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let n = self.n;
        let bases: Vec<Basis> = x.iter().map(|&xi| self.basis(xi, order)).collect();
        let orders = order + 1;
        let widths: Vec<usize> = bases.iter().map(|b| b.vals[0].len()).collect();
        let d1 = self.degree + 1;
        let mut jet = Jet::zeros(n, self.m, order);
        for alpha in 0..self.m {
            // Gather the windowed sub-tensor, then contract axes from last to first.
            let total: usize = widths.iter().product();
            let mut buf = vec![0.0; total];
            let base = alpha * self.block();
            for (flat, slot) in buf.iter_mut().enumerate() {
                let mut rem = flat;
                let mut lin = 0;
                let mut stride = 1;
                for k in (0..n).rev() {
                    let t = rem % widths[k];
                    rem /= widths[k];
                    lin += (bases[k].lo + t) * stride;
                    stride *= d1;
                }
                *slot = self.coeffs[base + lin];
            }
            let mut suffix = 1;
            for k in (0..n).rev() {
                let prefix: usize = widths[..k].iter().product();
                let w = widths[k];
                let mut next = vec![0.0; prefix * orders * suffix];
                for p in 0..prefix {
                    for t in 0..w {
                        let src = &buf[(p * w + t) * suffix..(p * w + t + 1) * suffix];
                        for d in 0..orders {
                            let b = bases[k].vals[d][t];
                            if b == 0.0 {
                                continue;
                            }
                            let dst = &mut next[(p * orders + d) * suffix..(p * orders + d + 1) * suffix];
                            for (o, s) in dst.iter_mut().zip(src) {
                                *o += b * s;
                            }
                        }
                    }
                }
                buf = next;
                suffix *= orders;
            }
            // buf is indexed by (d_0, ..., d_{n-1}) in base `orders`, first axis slowest.
            let at = |ds: &[usize]| {
                let mut idx = 0;
                for &d in ds {
                    idx = idx * orders + d;
                }
                buf[idx]
            };
            let mut ds = vec![0usize; n];
            jet.value[alpha] = at(&ds);
            if order >= 1 {
                for i in 0..n {
                    ds[i] = 1;
                    jet.grad[alpha * n + i] = at(&ds);
                    ds[i] = 0;
                }
            }
            if order >= 2 {
                for i in 0..n {
                    for j in 0..n {
                        ds[i] += 1;
                        ds[j] += 1;
                        jet.hess[(alpha * n + i) * n + j] = at(&ds);
                        ds[i] -= 1;
                        ds[j] -= 1;
                    }
                }
            }
        }
        jet
    }

    fn axis_matrix(&self, coords: &[f64], d: usize) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.degree + 1, coords.len());
        for (c, &x) in coords.iter().enumerate() {
            let b = self.basis(x, d);
            for (t, v) in b.vals[d].iter().enumerate() {
                g[(b.lo + t, c)] = *v;
            }
        }
        g
    }

    /// Separable evaluation of values (and gradients when `order >= 1`) on a lattice.
    pub fn lattice_values(&self, lattice: &Lattice, order: usize) -> LatticeValues {
        let n = self.n;
        let d1 = self.degree + 1;
        let mut out = LatticeValues::zeros(lattice, self.m, order.min(1));
        let coords: Vec<Vec<f64>> = (0..n).map(|k| lattice.axis(k)).collect();
        let mats: Vec<[DMatrix<f64>; 2]> = coords
            .iter()
            .map(|c| [self.axis_matrix(c, 0), if order >= 1 { self.axis_matrix(c, 1) } else { DMatrix::zeros(0, 0) }])
            .collect();
        let mut patterns: Vec<(Vec<usize>, Option<usize>)> = vec![(vec![0; n], None)];
        if order >= 1 {
            for i in 0..n {
                let mut p = vec![0; n];
                p[i] = 1;
                patterns.push((p, Some(i)));
            }
        }
        let c = &lattice.counts;
        for alpha in 0..self.m {
            let block = &self.coeffs[alpha * self.block()..(alpha + 1) * self.block()];
            for (pat, slot) in &patterns {
                if n == 2 {
                    let a = DMatrix::from_row_slice(d1, d1, block);
                    let v = mats[0][pat[0]].transpose() * (a * &mats[1][pat[1]]);
                    for i1 in 0..c[1] {
                        for i0 in 0..c[0] {
                            out.set(i0 + c[0] * i1, alpha, *slot, v[(i0, i1)]);
                        }
                    }
                } else {
                    let a = DMatrix::from_row_slice(d1 * d1, d1, block);
                    let mz = a * &mats[2][pat[2]];
                    let g0t = mats[0][pat[0]].transpose();
                    for i2 in 0..c[2] {
                        let slice = DMatrix::from_fn(d1, d1, |j0, j1| mz[(j0 * d1 + j1, i2)]);
                        let v = &g0t * (slice * &mats[1][pat[1]]);
                        for i1 in 0..c[1] {
                            for i0 in 0..c[0] {
                                out.set(i0 + c[0] * (i1 + c[1] * i2), alpha, *slot, v[(i0, i1)]);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_normalization() {
        // sum_j g_j(x) g_j(y) = e^{-|x-y|^2/2} in one dimension.
        let f = BargmannFockField::from_coefficients(1, 1, 200, 6.0, vec![]);
        for &(x, y) in &[(0.0, 1.0), (3.0, 3.5), (-5.0, -4.2), (2.0, -1.0)] {
            let s: f64 = (0..=200).map(|j| f.g(j, x) * f.g(j, y)).sum();
            let expected = (-0.5f64 * (x - y) * (x - y)).exp();
            assert!((s - expected).abs() < 1e-12, "{x} {y}: {s} {expected}");
        }
    }

    #[test]
    fn lattice_matches_pointwise() {
        for n in [2, 3] {
            let f = BargmannFockField::sample(n, 1, 40, 3.0, 11);
            let lat = Lattice::new(vec![-2.9; n], 0.7, vec![9, 7, 5][..n].to_vec());
            let lv = f.lattice_values(&lat, 1);
            for idx in 0..lat.len() {
                let p = lat.point(idx);
                let jet = f.jet(&p, 1);
                assert!((lv.value(idx, 0) - jet.value[0]).abs() < 1e-10);
                for i in 0..n {
                    assert!((lv.grad(idx, 0, i) - jet.grad[i]).abs() < 1e-9);
                }
            }
        }
    }
}
