//! Codimension-2 zero curves of `F = (f1, f2)` in R^3.
//!
//! A triangle `(a, b, c)` of the triangulation is pierced when the origin
//! lies inside the image triangle `(F(a), F(b), F(c))`, i.e. when the three
//! orientation signs `sign det(F(p), F(q))` along its boundary agree. The
//! sign of each grid edge is computed from its endpoints in a fixed order
//! (ties count as positive), so neighbouring cells always agree and every
//! tetrahedron has an even number of pierced faces.

use super::contour::SegmentGraph;
use super::surface::{corner_offsets, TETS};
use super::{dist, Extraction};
use crate::field::{Field, Lattice, LatticeValues};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WindingAudit {
    /// Voxels with at least one pierced boundary face.
    pub voxels: usize,
    /// Voxels whose outward face windings do not sum to zero.
    pub violations: usize,
}

const NEWTON_TOL: f64 = 1e-8;
const NEWTON_STEPS: usize = 12;
const NEWTON_SLACK: f64 = 0.5;
const INSIDE_TOL: f64 = 1e-9;

struct Signs<'a> {
    f: &'a [f64],
}

impl Signs<'_> {
    fn value(&self, p: usize) -> [f64; 2] {
        [self.f[2 * p], self.f[2 * p + 1]]
    }

    /// Orientation sign of `(0, F(p), F(q))`, antisymmetric in `(p, q)`.
    fn sgn(&self, p: usize, q: usize) -> i32 {
        let (lo, hi, flip) = if p < q { (p, q, 1) } else { (q, p, -1) };
        let (a, b) = (self.value(lo), self.value(hi));
        let det = a[0] * b[1] - a[1] * b[0];
        flip * if det >= 0.0 { 1 } else { -1 }
    }

    /// Winding of the oriented triangle around the origin: +-1 or 0.
    fn winding(&self, a: usize, b: usize, c: usize) -> i32 {
        let s = self.sgn(a, b);
        if s == self.sgn(b, c) && s == self.sgn(c, a) {
            s
        } else {
            0
        }
    }
}

pub(super) fn extract(field: &dyn Field, lattice: &Lattice, values: &LatticeValues, refine: bool) -> Extraction {
    let (c0, c1, c2) = (lattice.counts[0], lattice.counts[1], lattice.counts[2]);
    let signs = Signs { f: &values.values };
    let off = corner_offsets(c0, c1);
    let pos = |idx: usize| -> [f64; 3] {
        let (i, j, k) = (idx % c0, (idx / c0) % c1, idx / (c0 * c1));
        [lattice.coord(0, i), lattice.coord(1, j), lattice.coord(2, k)]
    };
    let mut graph = SegmentGraph::new();
    let mut audit = WindingAudit::default();
    let mut under_resolved = 0;
    let mut faults = Vec::new();
    let face_bits = square_faces();
    for k in 0..c2 - 1 {
        for j in 0..c1 - 1 {
            for i in 0..c0 - 1 {
                let base = i + c0 * (j + c1 * k);
                let corners: Vec<[f64; 2]> = (0..8).map(|b| signs.value(base + off[b])).collect();
                let one_signed = |t: usize| corners.iter().all(|c| c[t] > 0.0) || corners.iter().all(|c| c[t] <= 0.0);
                if one_signed(0) || one_signed(1) {
                    continue;
                }
                // voxel audit: outward windings of the twelve boundary triangles
                let mut total = 0;
                let mut any = false;
                for tri in &face_bits {
                    let w = signs.winding(base + off[tri[0]], base + off[tri[1]], base + off[tri[2]]);
                    any |= w != 0;
                    total += w;
                }
                if any {
                    audit.voxels += 1;
                    if total != 0 {
                        audit.violations += 1;
                    }
                }
                for tet in &TETS {
                    let g = tet.map(|b| base + off[b]);
                    let mut pierced = Vec::with_capacity(4);
                    for skip in 0..4 {
                        let f: Vec<usize> = (0..4).filter(|&t| t != skip).collect();
                        let (a, b, c) = (g[f[0]], g[f[1]], g[f[2]]);
                        if signs.winding(a, b, c) != 0 {
                            let key = triangle_key(&off, base, tet[f[0]], tet[f[1]], tet[f[2]]);
                            let id = graph.vertex(key, || {
                                piercing_point(field, [pos(a), pos(b), pos(c)], [signs.value(a), signs.value(b), signs.value(c)], refine)
                            });
                            pierced.push(id);
                        }
                    }
                    match pierced.len() {
                        0 => {}
                        2 => {
                            if !graph.link(pierced[0], pierced[1]) {
                                faults.push("piercing point with three neighbours".into());
                            }
                        }
                        4 => {
                            under_resolved += 1;
                            graph.link(pierced[0], pierced[1]);
                            graph.link(pierced[2], pierced[3]);
                        }
                        odd => faults.push(format!("tetrahedron with {odd} pierced faces")),
                    }
                }
            }
        }
    }
    let mut components = graph.trace(3);
    let tol = lattice.spacing / 10.0;
    for c in components.iter_mut().filter(|c| !c.closed && c.vertices.len() > 2) {
        let (first, last) = (c.vertices[0], *c.vertices.last().unwrap());
        if dist(&first, &last) <= tol {
            c.vertices.push(first);
            c.closed = true;
            c.touches_boundary = false;
        }
    }
    Extraction { components, under_resolved, winding: Some(audit), faults, ..Default::default() }
}

/// Triangles `(q00, q10, q11)` and `(q00, q11, q01)` of each voxel face,
/// as corner bit patterns, oriented with outward normals.
fn square_faces() -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..3 {
        let (b, c) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        // e_b x e_c is +e_a for a = 0, 2 and -e_a for a = 1
        let natural = if a == 1 { -1 } else { 1 };
        for s in 0..2 {
            let q00 = s << a;
            let (q10, q01, q11) = (q00 | 1 << b, q00 | 1 << c, q00 | 1 << b | 1 << c);
            let outward = if s == 1 { 1 } else { -1 };
            if natural == outward {
                out.push([q00, q10, q11]);
                out.push([q00, q11, q01]);
            } else {
                out.push([q00, q11, q10]);
                out.push([q00, q01, q11]);
            }
        }
    }
    out
}

/// Cell-independent key: lowest vertex plus the two relative corner masks.
fn triangle_key(off: &[usize; 8], base: usize, u: usize, v: usize, w: usize) -> usize {
    let mut c = [u, v, w];
    c.sort_by_key(|x| x.count_ones());
    let lo = c[0];
    (base + off[lo]) * 64 + (c[1] ^ lo) * 8 + (c[2] ^ lo)
}

fn piercing_point(field: &dyn Field, p: [[f64; 3]; 3], f: [[f64; 2]; 3], refine: bool) -> [f64; 3] {
    let m = [[f[1][0] - f[0][0], f[2][0] - f[0][0]], [f[1][1] - f[0][1], f[2][1] - f[0][1]]];
    let (s, t) = solve2(m, [-f[0][0], -f[0][1]]).unwrap_or((1.0 / 3.0, 1.0 / 3.0));
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1], p[2][2] - p[0][2]];
    let at = |s: f64, t: f64| [p[0][0] + s * e1[0] + t * e2[0], p[0][1] + s * e1[1] + t * e2[1], p[0][2] + s * e1[2] + t * e2[2]];
    let linear = at(s, t);
    if !refine {
        return linear;
    }
    let (mut s, mut t) = (s, t);
    for _ in 0..NEWTON_STEPS {
        let x = at(s, t);
        let jet = match field.eval(&x, 1) {
            Ok(j) => j,
            Err(_) => return linear,
        };
        if jet.value[0].hypot(jet.value[1]) <= NEWTON_TOL {
            return if inside(s, t) { x } else { linear };
        }
        let g = |a: usize, e: &[f64; 3]| (0..3).map(|i| jet.grad[a * 3 + i] * e[i]).sum::<f64>();
        let jm = [[g(0, &e1), g(0, &e2)], [g(1, &e1), g(1, &e2)]];
        let (ds, dt) = match solve2(jm, [-jet.value[0], -jet.value[1]]) {
            Some(d) => d,
            None => return linear,
        };
        s += ds;
        t += dt;
        if s < -NEWTON_SLACK || t < -NEWTON_SLACK || s + t > 1.0 + NEWTON_SLACK {
            return linear;
        }
    }
    let x = at(s, t);
    match field.eval(&x, 0) {
        Ok(j) if j.value[0].hypot(j.value[1]) <= NEWTON_TOL && inside(s, t) => x,
        _ => linear,
    }
}

// A converged point outside its own triangle belongs to a neighbouring face
// and would fold the polyline back on itself.
fn inside(s: f64, t: f64) -> bool {
    s >= -INSIDE_TOL && t >= -INSIDE_TOL && s + t <= 1.0 + INSIDE_TOL
}

fn solve2(m: [[f64; 2]; 2], r: [f64; 2]) -> Option<(f64, f64)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if det.abs() <= 1e-14 * scale * scale || !det.is_finite() {
        return None;
    }
    Some(((r[0] * m[1][1] - m[0][1] * r[1]) / det, (m[0][0] * r[1] - m[1][0] * r[0]) / det))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_faces_cover_each_face_twice() {
        let f = square_faces();
        assert_eq!(f.len(), 12);
        // each face's two triangles share its diagonal
        for pair in f.chunks(2) {
            let shared: Vec<_> = pair[0].iter().filter(|c| pair[1].contains(c)).collect();
            assert_eq!(shared.len(), 2);
        }
    }

    #[test]
    fn keys_agree_between_neighbouring_cells() {
        // Triangle on the shared face x = 1 of cells at base 0 and base 1 (c0 = 4, c1 = 4).
        let off = corner_offsets(4, 4);
        let from_left = triangle_key(&off, 0, 1, 3, 7);
        let from_right = triangle_key(&off, 1, 0, 2, 6);
        assert_eq!(from_left, from_right);
    }
}
