//! Random plane-wave superpositions `sqrt(2/N) sum_k cos(<xi_k, x> + phi_k)`.

use super::spectrum::RadialSpectrum;
use super::{Jet, Lattice, LatticeValues};
use crate::rng::CoefficientStream;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    pub k: [f64; 3],
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct PlaneWaveField {
    pub n: usize,
    pub m: usize,
    waves: Vec<Vec<Wave>>,
    amp: f64,
}

impl PlaneWaveField {
    /// Directions uniform on the sphere; radius 1 when `radial` is `None`,
    /// otherwise drawn by inverse CDF.
    pub fn sample(n: usize, m: usize, count: usize, radial: Option<&RadialSpectrum>, seed: u64) -> Self {
        let waves = (0..m)
            .map(|alpha| {
                let mut dirs = CoefficientStream::new(seed, &format!("plane_wave/{alpha}"));
                let mut radii = CoefficientStream::new(seed, &format!("plane_wave_radius/{alpha}"));
                (0..count as u64)
                    .map(|w| {
                        let mut k = [0.0; 3];
                        for (i, slot) in k.iter_mut().enumerate().take(n) {
                            *slot = dirs.normal_at(4 * w + i as u64);
                        }
                        let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let radius = radial.map_or(1.0, |r| r.quantile(radii.uniform_at(w)));
                        k.iter_mut().for_each(|v| *v *= radius / norm);
                        let phase = TAU * dirs.uniform_at(4 * w + 3);
                        Wave { k, phase }
                    })
                    .collect()
            })
            .collect();
        Self::from_waves(n, waves)
    }

    pub fn from_waves(n: usize, waves: Vec<Vec<Wave>>) -> Self {
        let count = waves.first().map_or(1, |w| w.len().max(1));
        Self { n, m: waves.len(), waves, amp: (2.0 / count as f64).sqrt() }
    }

    pub fn waves(&self) -> &[Vec<Wave>] {
        &self.waves
    }

    /// Flattened `(k_1..k_n, phase)` per wave, component-major.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for comp in &self.waves {
            for w in comp {
                out.extend_from_slice(&w.k[..self.n]);
                out.push(w.phase);
            }
        }
        out
    }

    pub fn from_coefficients(n: usize, m: usize, coeffs: &[f64]) -> Option<Self> {
        let per = n + 1;
        if m == 0 || coeffs.len() % (per * m) != 0 {
            return None;
        }
        let count = coeffs.len() / (per * m);
        let waves = coeffs
            .chunks(per * count)
            .map(|comp| {
                comp.chunks(per)
                    .map(|c| {
                        let mut k = [0.0; 3];
                        k[..n].copy_from_slice(&c[..n]);
                        Wave { k, phase: c[n] }
                    })
                    .collect()
            })
            .collect();
        Some(Self::from_waves(n, waves))
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let n = self.n;
        let mut jet = Jet::zeros(n, self.m, order);
        for (alpha, comp) in self.waves.iter().enumerate() {
            for w in comp {
                let theta = w.phase + (0..n).map(|i| w.k[i] * x[i]).sum::<f64>();
                let (s, c) = theta.sin_cos();
                jet.value[alpha] += c;
                if order >= 1 {
                    for i in 0..n {
                        jet.grad[alpha * n + i] -= w.k[i] * s;
                    }
                }
                if order >= 2 {
                    for i in 0..n {
                        for j in 0..n {
                            jet.hess[(alpha * n + i) * n + j] -= w.k[i] * w.k[j] * c;
                        }
                    }
                }
            }
        }
        jet.scale(self.amp);
        jet
    }

    pub fn lattice_values(&self, lattice: &Lattice, order: usize) -> LatticeValues {
        let order = order.min(1);
        let mut out = LatticeValues::zeros(lattice, self.m, order);
        let axes: Vec<Vec<f64>> = (0..self.n).map(|k| lattice.axis(k)).collect();
        for (alpha, comp) in self.waves.iter().enumerate() {
            let terms: Vec<([f64; 3], f64, Vec<Vec<(f64, f64)>>)> = comp
                .iter()
                .map(|w| {
                    let factors = (0..self.n)
                        .map(|a| axes[a].iter().map(|&x| unit(w.k[a] * x)).collect())
                        .collect();
                    (w.k, w.phase, factors)
                })
                .collect();
            accumulate_waves(&mut out, lattice, alpha, order, &terms, self.amp);
        }
        out
    }
}

fn unit(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c, s)
}

/// Adds `amp * Re(e^{i phase} prod_a E_a[i_a])` (and its gradient, whose
/// `a`-th entry is `amp * Re(i k_a ...)`) over all terms.
pub(super) fn accumulate_waves(
    out: &mut LatticeValues,
    lattice: &Lattice,
    alpha: usize,
    order: usize,
    terms: &[([f64; 3], f64, Vec<Vec<(f64, f64)>>)],
    amp: f64,
) {
    let n = lattice.counts.len();
    let c = &lattice.counts;
    let (c1, c2) = (c[1], if n == 3 { c[2] } else { 1 });
    for (k, phase, factors) in terms {
        let p0 = unit(*phase);
        for i2 in 0..c2 {
            let p = if n == 3 { cmul(p0, factors[2][i2]) } else { p0 };
            for i1 in 0..c1 {
                let q = cmul(p, factors[1][i1]);
                let row = c[0] * (i1 + c1 * i2);
                for (i0, e) in factors[0].iter().enumerate() {
                    let (re, im) = cmul(q, *e);
                    let idx = row + i0;
                    out.values[idx * out.m + alpha] += amp * re;
                    if order >= 1 {
                        let g = &mut out.grads[(idx * out.m + alpha) * n..(idx * out.m + alpha + 1) * n];
                        for (a, slot) in g.iter_mut().enumerate() {
                            *slot -= amp * k[a] * im;
                        }
                    }
                }
            }
        }
    }
}

#[inline]
pub(super) fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn berry_waves_have_unit_frequency() {
        let f = PlaneWaveField::sample(3, 2, 128, None, 5);
        for comp in &f.waves {
            for w in comp {
                let r: f64 = w.k.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-12);
                assert!((0.0..TAU).contains(&w.phase));
            }
        }
    }

    #[test]
    fn lattice_matches_pointwise_and_coefficients_round_trip() {
        let bb = RadialSpectrum::black_body(3);
        let f = PlaneWaveField::sample(3, 2, 64, Some(&bb), 9);
        let g = PlaneWaveField::from_coefficients(3, 2, &f.coefficients()).unwrap();
        let lat = Lattice::new(vec![-1.0, -0.5, 0.2], 0.3, vec![4, 5, 3]);
        let lv = g.lattice_values(&lat, 1);
        for idx in 0..lat.len() {
            let jet = f.jet(&lat.point(idx), 1);
            for a in 0..2 {
                assert!((lv.value(idx, a) - jet.value[a]).abs() < 1e-10);
                for i in 0..3 {
                    assert!((lv.grad(idx, a, i) - jet.grad[a * 3 + i]).abs() < 1e-9);
                }
            }
        }
    }
}
