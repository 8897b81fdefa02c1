//! Isotropic spectral measures: spherical averages of plane waves and
//! tabulated radial densities.

use crate::error::FieldError;

/// Spherical average `S(x)` of `exp(i x <e, w>)` over `w` on `S^{n-1}`,
/// together with `S'(x)/x` and `S''(x)`. Only n = 2 and n = 3 occur.
pub fn spherical_average(n: usize, x: f64) -> (f64, f64, f64) {
    let x = x.abs();
    if n == 3 {
        if x < 0.1 {
            let x2 = x * x;
            let s = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0;
            let q = -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0;
            let s2 = -1.0 / 3.0 + x2 / 10.0 - x2 * x2 / 168.0 + x2 * x2 * x2 / 6480.0;
            (s, q, s2)
        } else {
            let (sn, cs) = x.sin_cos();
            let s = sn / x;
            let d = (x * cs - sn) / (x * x);
            (s, d / x, -s - 2.0 * d / x)
        }
    } else {
        let j0 = libm::j0(x);
        let j1_over_x = if x < 1e-4 { 0.5 - x * x / 16.0 } else { libm::j1(x) / x };
        (j0, -j1_over_x, -j0 + j1_over_x)
    }
}

/// Radial law of the frequency `|xi|` on a fine uniform table.
#[derive(Clone, Debug)]
pub struct RadialSpectrum {
    pub n: usize,
    s: Vec<f64>,
    /// Simpson weight times normalized radial pdf.
    w: Vec<f64>,
    cdf: Vec<f64>,
    pub s2: f64,
    pub s4: f64,
}

impl RadialSpectrum {
    /// `density` is the spectral density per unit volume of frequency space,
    /// so the radial pdf is proportional to `s^{n-1} density(s)`.
    pub fn from_density(n: usize, s_min: f64, s_max: f64, intervals: usize, density: impl Fn(f64) -> f64) -> Self {
        let intervals = intervals + intervals % 2;
        let step = (s_max - s_min) / intervals as f64;
        let s: Vec<f64> = (0..=intervals).map(|i| s_min + i as f64 * step).collect();
        let p: Vec<f64> = s.iter().map(|&t| t.powi(n as i32 - 1) * density(t)).collect();
        let mut w: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let c = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * v
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let mut cdf = vec![0.0; s.len()];
        for i in 1..s.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (p[i - 1] + p[i]);
        }
        let last = cdf[s.len() - 1];
        cdf.iter_mut().for_each(|v| *v /= last);
        let s2 = s.iter().zip(&w).map(|(t, wi)| wi * t * t).sum();
        let s4 = s.iter().zip(&w).map(|(t, wi)| wi * t.powi(4)).sum();
        Self { n, s, w, cdf, s2, s4 }
    }

    /// Normalized black-body spectrum `c |z| / (e^{|z|} - 1)`.
    pub fn black_body(n: usize) -> Self {
        Self::from_density(n, 0.0, 60.0, 6000, |t| if t == 0.0 { 1.0 } else { t / t.exp_m1() })
    }

    /// Piecewise-linear interpolation of a user table, zero outside it.
    pub fn tabulated(n: usize, radii: &[f64], density: &[f64]) -> Result<Self, FieldError> {
        if radii.len() != density.len() || radii.len() < 2 {
            return Err(FieldError::InvalidSpec("malformed spectral table".into()));
        }
        let (lo, hi) = (radii[0], radii[radii.len() - 1]);
        let interp = |t: f64| {
            let j = radii.partition_point(|&r| r <= t).clamp(1, radii.len() - 1);
            let (r0, r1) = (radii[j - 1], radii[j]);
            let a = ((t - r0) / (r1 - r0)).clamp(0.0, 1.0);
            density[j - 1] * (1.0 - a) + density[j] * a
        };
        Ok(Self::from_density(n, lo, hi, 4000, interp))
    }

    /// Returns `(k(r), k'(r)/r, k''(r))` of the isotropic covariance.
    pub fn profile(&self, r: f64) -> (f64, f64, f64) {
        let mut acc = (0.0, 0.0, 0.0);
        for (&t, &w) in self.s.iter().zip(&self.w) {
            if w == 0.0 {
                continue;
            }
            let (s, q, s2) = spherical_average(self.n, t * r);
            let t2 = t * t;
            acc.0 += w * s;
            acc.1 += w * t2 * q;
            acc.2 += w * t2 * s2;
        }
        acc
    }

    /// Inverse CDF of the radial law, linear within table cells.
    pub fn quantile(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let a = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.s[j - 1] + a * (self.s[j] - self.s[j - 1])
    }
}

/// Exact n = 3 black-body covariance, `(15/pi^4) (1/r) (1/r^3 - pi^3 cosh(pi r)/sinh^3(pi r))`.
/// Loses precision below r ~ 0.1 through cancellation.
pub fn black_body_exact_3d(r: f64) -> f64 {
    use std::f64::consts::PI;
    let a = PI * r;
    let sh = a.sinh();
    15.0 / PI.powi(4) / r * (1.0 / r.powi(3) - PI.powi(3) * a.cosh() / (sh * sh * sh))
}

/// The two-constant closed form `c1/r^2 - c2 r cosh r / sinh^2 r`, for
/// comparison at r >= 0.1 only.
pub fn black_body_closed_form(r: f64, c1: f64, c2: f64) -> f64 {
    let sh = r.sinh();
    c1 / (r * r) - c2 * r * r.cosh() / (sh * sh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_average_branches_agree() {
        for n in [2, 3] {
            let below = spherical_average(n, 0.0999999);
            let above = spherical_average(n, 0.1000001);
            // the two probes are 2e-7 apart and all derivatives are O(1)
            assert!((below.0 - above.0).abs() < 1e-6);
            assert!((below.1 - above.1).abs() < 1e-6);
            assert!((below.2 - above.2).abs() < 1e-6);
        }
        let (s, q, s2) = spherical_average(3, 0.0);
        assert_eq!(s, 1.0);
        assert!((q + 1.0 / 3.0).abs() < 1e-15 && (s2 + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn spherical_average_derivatives_match_differences() {
        for n in [2, 3] {
            for &x in &[0.3, 1.7, 5.2] {
                let e = 1e-5;
                let d1 = (spherical_average(n, x + e).0 - spherical_average(n, x - e).0) / (2.0 * e);
                let d2 = (spherical_average(n, x + e).0 - 2.0 * spherical_average(n, x).0
                    + spherical_average(n, x - e).0)
                    / (e * e);
                let (_, q, s2) = spherical_average(n, x);
                assert!((q * x - d1).abs() < 1e-8, "n={n} x={x}");
                assert!((s2 - d2).abs() < 1e-4, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn black_body_moments() {
        // E|xi|^2 = Gamma(n+3) zeta(n+3) / (Gamma(n+1) zeta(n+1)).
        let zeta = |s: f64| (1..200000).map(|k| (k as f64).powf(-s)).sum::<f64>();
        let spec = RadialSpectrum::black_body(3);
        let expected = 120.0 * zeta(6.0) / (6.0 * zeta(4.0));
        assert!((spec.s2 - expected).abs() / expected < 1e-6, "{} vs {expected}", spec.s2);
    }

    #[test]
    fn black_body_quadrature_matches_exact_form() {
        let spec = RadialSpectrum::black_body(3);
        for &r in &[0.2, 0.5, 1.0, 2.0, 4.0] {
            let quad = spec.profile(r).0;
            let exact = black_body_exact_3d(r);
            assert!((quad - exact).abs() < 1e-7, "r={r}: {quad} vs {exact}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let spec = RadialSpectrum::tabulated(2, &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((spec.quantile(0.0) - 1.0).abs() < 1e-9);
        assert!((spec.quantile(1.0) - 2.0).abs() < 1e-9);
        // pdf proportional to s on [1,2]: median solves (s^2 - 1)/3 = 1/2.
        assert!((spec.quantile(0.5) - 2.5f64.sqrt()).abs() < 1e-6);
    }
}
