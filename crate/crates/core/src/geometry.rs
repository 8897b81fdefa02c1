//! Pointwise extrinsic geometry of `Z(F)`: Gram matrix, tangent frame,
//! mean curvature and a second-fundamental-form bound.

use crate::error::GeometryError;
use crate::field::Jet;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Below this smallest singular value of `grad F` the frame is degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct PointFrame {
    pub n: usize,
    pub m: usize,
    /// `A_{ab} = grad f_a . grad f_b`.
    pub gram: DMatrix<f64>,
    /// Orthonormal basis of `ker grad F`; empty when degenerate.
    pub tangent_basis: Vec<Vec<f64>>,
    pub lambda_min: f64,
    pub degenerate: bool,
    grad: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSummary {
    pub mean_curvature_norm: f64,
    /// `C(n,m) |det A|^{-1} |grad F|^{2(m-1)} |hess F|^2` with
    /// `C(n,m) = (n-m) m n^4`; bounds both `|H|^2` and `|II|^2`.
    pub sff_bound: f64,
}

pub fn sff_constant(n: usize, m: usize) -> f64 {
    ((n - m) * m * n.pow(4)) as f64
}

/// `grad` is the m x n Jacobian, row-major.
pub fn point_frame(grad: &[f64], m: usize, n: usize) -> Result<PointFrame, GeometryError> {
    if grad.len() != m * n || m == 0 || m > n {
        return Err(GeometryError::Shape(format!("gradient of length {} is not {m} x {n}", grad.len())));
    }
    let g = DMatrix::from_row_slice(m, n, grad);
    let gram = &g * g.transpose();
    let eig = SymmetricEigen::new(gram.clone());
    let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lambda_min = smallest.max(0.0).sqrt();
    let degenerate = lambda_min < DEGENERACY_THRESHOLD;
    let tangent_basis = if degenerate { Vec::new() } else { complement_basis(&g) };
    Ok(PointFrame { n, m, gram, tangent_basis, lambda_min, degenerate, grad: g })
}

/// Gram-Schmidt against the gradient rows, then against the coordinate
/// axis with the largest residual, repeated until n - m vectors are found.
fn complement_basis(g: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (m, n) = g.shape();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let project_out = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let d = v.dot(b);
                *v -= b * d;
            }
        }
    };
    for a in 0..m {
        let mut v = g.row(a).transpose();
        project_out(&mut v, &basis);
        let norm = v.norm();
        if norm > 0.0 {
            basis.push(v / norm);
        }
    }
    let mut tangent = Vec::new();
    while basis.len() < n {
        let best = (0..n)
            .map(|k| {
                let mut e = DVector::zeros(n);
                e[k] = 1.0;
                project_out(&mut e, &basis);
                e
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("n > 0");
        let v = &best / best.norm();
        tangent.push(v.iter().cloned().collect());
        basis.push(v);
    }
    tangent
}

/// `hess` is m x n x n. Uses `|H|^2 = sum_ab tr_T(hess f_a) A^{ab} tr_T(hess f_b)`.
pub fn mean_curvature(frame: &PointFrame, hess: &[f64]) -> Result<CurvatureSummary, GeometryError> {
    let (n, m) = (frame.n, frame.m);
    if hess.len() != m * n * n {
        return Err(GeometryError::Shape(format!("hessian of length {} is not {m} x {n} x {n}", hess.len())));
    }
    if frame.degenerate {
        return Err(GeometryError::Degenerate(frame.lambda_min));
    }
    let traces = DVector::from_iterator(
        m,
        (0..m).map(|a| {
            let h = &hess[a * n * n..(a + 1) * n * n];
            frame
                .tangent_basis
                .iter()
                .map(|t| (0..n).map(|i| (0..n).map(|j| t[i] * h[i * n + j] * t[j]).sum::<f64>()).sum::<f64>())
                .sum::<f64>()
        }),
    );
    let inv = frame
        .gram
        .clone()
        .try_inverse()
        .ok_or(GeometryError::Degenerate(frame.lambda_min))?;
    let h2 = traces.dot(&(&inv * &traces)).max(0.0);
    let det = frame.gram.determinant().abs();
    let grad_sq = frame.grad.norm_squared();
    let hess_sq: f64 = hess.iter().map(|v| v * v).sum();
    let sff_bound = sff_constant(n, m) / det * grad_sq.powi(m as i32 - 1) * hess_sq;
    Ok(CurvatureSummary { mean_curvature_norm: h2.sqrt(), sff_bound })
}

/// Scalar route for hypersurfaces: `|Delta f - hess f(nu, nu)| / |grad f|`.
pub fn mean_curvature_scalar(grad: &[f64], hess: &[f64]) -> Result<f64, GeometryError> {
    let n = grad.len();
    if hess.len() != n * n {
        return Err(GeometryError::Shape("hessian must be n x n".into()));
    }
    let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERACY_THRESHOLD {
        return Err(GeometryError::Degenerate(norm));
    }
    let lap: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let nn: f64 = (0..n).map(|i| (0..n).map(|j| grad[i] * hess[i * n + j] * grad[j]).sum::<f64>()).sum::<f64>()
        / (norm * norm);
    Ok((lap - nn).abs() / norm)
}

pub fn willmore_integrand(summary: &CurvatureSummary, n: usize, m: usize) -> f64 {
    let k = n - m;
    (summary.mean_curvature_norm / k as f64).powi(k as i32)
}

/// Frame and curvature from an order-2 jet.
pub fn curvature_at(jet: &Jet) -> Result<(PointFrame, CurvatureSummary), GeometryError> {
    let frame = point_frame(&jet.grad, jet.m, jet.n)?;
    let summary = mean_curvature(&frame, &jet.hess)?;
    Ok((frame, summary))
}
