//! Gauss-Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..(order + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Rule mapped to `[a, b]`.
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}

/// Composite rule: `panels` equal panels of `order` points on `[a, b]`.
pub fn composite(order: usize, panels: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let step = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| gauss_legendre_on(order, a + p as f64 * step, a + (p + 1) as f64 * step))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for order in [1, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre(order);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * order - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
            assert!((got - exact).abs() < 1e-12, "order {order}");
            let even = 2 * order - 2;
            let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(even as i32)).sum();
            assert!((got - 2.0 / (even as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_exp() {
        let s: f64 = composite(8, 4, 0.0, 3.0).iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
