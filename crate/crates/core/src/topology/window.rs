//! Sliding-window census: the averaged counts of components inside (left)
//! and meeting (right) small cubes `C_r(x)` bracket the count in `C_R`.
//!
//! Centers are the midpoints of a partition of `C_{R -+ r}` into cubes of
//! side `stride`. When `2r`, `2(R - r)` and `2(R + r)` are multiples of the
//! stride the bracket holds exactly for any fixed extraction: a component
//! inside `C_R` lies in at most `(2r/stride)^n` open windows and meets at
//! least that many closed ones.

use super::betti_surface;
use crate::error::TopologyError;
use crate::extract::{extract, ComponentGeometry, GeometryKind, GridSpec};
use crate::field::Field;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub left: f64,
    pub n: usize,
    pub right: f64,
    /// Both inequalities with the one-component allowance.
    pub pass: bool,
    /// Both inequalities without allowance.
    pub exact: bool,
    /// Windowed lower bounds for each Betti sum.
    pub betti_left: Vec<f64>,
    pub betti: Vec<usize>,
    pub betti_pass: bool,
}

/// Extracts `Z(F)` on `C_{R + r}` and evaluates the sandwich.
pub fn window_census(
    field: &dyn Field,
    h: f64,
    radius: f64,
    r: f64,
    stride: f64,
) -> Result<SandwichReport, TopologyError> {
    check_window(radius, r, stride)?;
    let grid = GridSpec::new(radius + r, h, h).map_err(|e| TopologyError::InvalidWindow(e.to_string()))?;
    let ex = extract(field, &grid).map_err(|e| TopologyError::UnderResolved(e.to_string()))?;
    if ex.is_faulty() {
        return Err(TopologyError::UnderResolved(format!(
            "{} under-resolved tetrahedra, faults {:?}",
            ex.under_resolved, ex.faults
        )));
    }
    window_counts(&ex.components, field.dim(), radius, r, stride)
}

fn multiple(x: f64, stride: f64) -> Option<usize> {
    let k = (x / stride).round();
    ((x / stride - k).abs() < 1e-9 && k >= 1.0).then_some(k as usize)
}

fn check_window(radius: f64, r: f64, stride: f64) -> Result<(usize, usize, usize), TopologyError> {
    if !(r > 0.0 && r < radius && stride > 0.0) {
        return Err(TopologyError::InvalidWindow(format!("need 0 < r < R and stride > 0, got r {r}, R {radius}, stride {stride}")));
    }
    match (multiple(2.0 * r, stride), multiple(2.0 * (radius - r), stride), multiple(2.0 * (radius + r), stride)) {
        (Some(k), Some(kl), Some(kr)) => Ok((k, kl, kr)),
        _ => Err(TopologyError::InvalidWindow(format!("stride {stride} does not divide 2r, 2(R-r) and 2(R+r)"))),
    }
}

fn betti_of(c: &ComponentGeometry) -> Vec<usize> {
    match c.kind {
        GeometryKind::Polyline => vec![1, 1],
        GeometryKind::Mesh => betti_surface(c).map(|b| b.to_vec()).unwrap_or_else(|_| vec![1]),
    }
}

/// Sandwich from an already extracted component list covering `C_{R + r}`.
pub fn window_counts(
    components: &[ComponentGeometry],
    n: usize,
    radius: f64,
    r: f64,
    stride: f64,
) -> Result<SandwichReport, TopologyError> {
    let (k, kl, kr) = check_window(radius, r, stride)?;
    let nb = if components.iter().any(|c| c.kind == GeometryKind::Mesh) { 3 } else { 2 };
    let bbox = |c: &ComponentGeometry| {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &c.vertices {
            for t in 0..n {
                lo[t] = lo[t].min(v[t]);
                hi[t] = hi[t].max(v[t]);
            }
        }
        (lo, hi)
    };
    let inside = |c: &ComponentGeometry, half: f64| {
        c.closed && c.vertices.iter().all(|v| v[..n].iter().all(|x| x.abs() < half))
    };

    // N(R) and Betti sums over closed components inside C_R
    let mut count = 0;
    let mut betti = vec![0usize; nb];
    for c in components.iter().filter(|c| inside(c, radius)) {
        count += 1;
        for (l, b) in betti_of(c).iter().enumerate().take(nb) {
            betti[l] += b;
        }
    }

    // left: per inside component, the number of centers whose open window contains it
    let centers = |half: f64, m: usize| -> Vec<f64> { (0..m).map(|j| -half + (j as f64 + 0.5) * stride).collect() };
    let left_centers = centers(radius - r, kl);
    let mut left_sum = 0.0;
    let mut betti_left = vec![0.0; nb];
    for c in components.iter().filter(|c| c.closed) {
        let (lo, hi) = bbox(c);
        let mut windows = 1usize;
        for t in 0..n {
            windows *= left_centers.iter().filter(|&&x| hi[t] - r < x && x < lo[t] + r).count();
        }
        if windows == 0 {
            continue;
        }
        left_sum += windows as f64;
        for (l, b) in betti_of(c).iter().enumerate().take(nb) {
            betti_left[l] += (windows * b) as f64;
        }
    }

    // right: for every center, the components with a vertex or segment in the closed window
    let right_centers = centers(radius + r, kr);
    let boxes: Vec<_> = components.iter().map(bbox).collect();
    let mut right_sum = 0.0;
    let total = right_centers.len().pow(n as u32);
    for idx in 0..total {
        let mut x = [0.0; 3];
        let mut rem = idx;
        for xt in x.iter_mut().take(n) {
            *xt = right_centers[rem % kr];
            rem /= kr;
        }
        for (c, (lo, hi)) in components.iter().zip(&boxes) {
            if (0..n).any(|t| hi[t] < x[t] - r || lo[t] > x[t] + r) {
                continue;
            }
            let meets = c.vertices.iter().any(|v| (0..n).all(|t| (v[t] - x[t]).abs() <= r))
                || c.segments().any(|(a, b)| {
                    let a = [a[0] - x[0], a[1] - x[1], a[2] - x[2]];
                    let b = [b[0] - x[0], b[1] - x[1], b[2] - x[2]];
                    crate::extract::clip_segment(&a, &b, r, n).is_some()
                });
            right_sum += meets as usize as f64;
        }
    }

    let cells = (k as f64).powi(n as i32);
    let left = left_sum / cells;
    let right = right_sum / cells;
    let nf = count as f64;
    let betti_left: Vec<f64> = betti_left.iter().map(|b| b / cells).collect();
    Ok(SandwichReport {
        left,
        n: count,
        right,
        pass: left <= nf + 1.0 && nf <= right + 1.0,
        exact: left <= nf && nf <= right,
        betti_pass: betti_left.iter().zip(&betti).all(|(l, &b)| *l <= b as f64 + 1.0),
        betti_left,
        betti,
    })
}
