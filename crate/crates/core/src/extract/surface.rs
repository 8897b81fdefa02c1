//! Marching tetrahedra on the six-tetrahedron split of each voxel.

use super::contour::interpolate;
use super::{ComponentGeometry, DisjointSet, Extraction};
use crate::field::{Lattice, LatticeValues};
use std::collections::HashMap;

/// Corner bit patterns of the six Kuhn tetrahedra: paths 0 -> e_a -> e_a + e_b -> 7.
pub(super) const TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

pub(super) fn corner_offsets(c0: usize, c1: usize) -> [usize; 8] {
    let mut off = [0; 8];
    for (b, o) in off.iter_mut().enumerate() {
        *o = (b & 1) + c0 * ((b >> 1) & 1) + c0 * c1 * ((b >> 2) & 1);
    }
    off
}

/// Key of the grid edge between two tetrahedron corners (one is a bit-subset of the other).
pub(super) fn edge_key(base: usize, off: &[usize; 8], u: usize, w: usize) -> usize {
    let lo = if u & w == u { u } else { w };
    (base + off[lo]) * 8 + (u ^ w)
}

pub(super) fn extract(lattice: &Lattice, values: &LatticeValues) -> Extraction {
    let (c0, c1, c2) = (lattice.counts[0], lattice.counts[1], lattice.counts[2]);
    let v = &values.values;
    let off = corner_offsets(c0, c1);
    let pos = |idx: usize| -> [f64; 3] {
        let (i, j, k) = (idx % c0, (idx / c0) % c1, idx / (c0 * c1));
        [lattice.coord(0, i), lattice.coord(1, j), lattice.coord(2, k)]
    };
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for k in 0..c2 - 1 {
        for j in 0..c1 - 1 {
            for i in 0..c0 - 1 {
                let base = i + c0 * (j + c1 * k);
                let signs: Vec<bool> = (0..8).map(|b| v[base + off[b]] > 0.0).collect();
                if signs.iter().all(|&s| s) || signs.iter().all(|&s| !s) {
                    continue;
                }
                for tet in &TETS {
                    let pos_c: Vec<usize> = tet.iter().copied().filter(|&c| signs[c]).collect();
                    let neg_c: Vec<usize> = tet.iter().copied().filter(|&c| !signs[c]).collect();
                    if pos_c.is_empty() || neg_c.is_empty() {
                        continue;
                    }
                    let mut cross = |u: usize, w: usize| -> usize {
                        let key = edge_key(base, &off, u, w);
                        *index.entry(key).or_insert_with(|| {
                            let (a, b) = (base + off[u], base + off[w]);
                            points.push(interpolate(&pos(a), &pos(b), v[a], v[b]));
                            points.len() - 1
                        })
                    };
                    let polys: Vec<Vec<usize>> = match (pos_c.len(), neg_c.len()) {
                        (1, 3) => vec![neg_c.iter().map(|&n| cross(pos_c[0], n)).collect()],
                        (3, 1) => vec![pos_c.iter().map(|&p| cross(p, neg_c[0])).collect()],
                        _ => {
                            let (p1, p2, n1, n2) = (pos_c[0], pos_c[1], neg_c[0], neg_c[1]);
                            let q = [cross(p1, n1), cross(p1, n2), cross(p2, n2), cross(p2, n1)];
                            vec![vec![q[0], q[1], q[2]], vec![q[0], q[2], q[3]]]
                        }
                    };
                    // orient normals toward the positive side
                    let centroid = |cs: &[usize]| -> [f64; 3] {
                        let mut c = [0.0; 3];
                        for &b in cs {
                            let p = pos(base + off[b]);
                            (0..3).for_each(|t| c[t] += p[t] / cs.len() as f64);
                        }
                        c
                    };
                    let (cp, cn) = (centroid(&pos_c), centroid(&neg_c));
                    let dir = [cp[0] - cn[0], cp[1] - cn[1], cp[2] - cn[2]];
                    for poly in polys {
                        let (a, b, c) = (points[poly[0]], points[poly[1]], points[poly[2]]);
                        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                        let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                        let nrm = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
                        let dot = nrm[0] * dir[0] + nrm[1] * dir[1] + nrm[2] * dir[2];
                        if dot < 0.0 {
                            faces.push([poly[0], poly[2], poly[1]]);
                        } else {
                            faces.push([poly[0], poly[1], poly[2]]);
                        }
                    }
                }
            }
        }
    }
    split_mesh(points, faces)
}

/// Groups faces into connected meshes and flags closedness.
pub(super) fn split_mesh(points: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Extraction {
    let mut dsu = DisjointSet::new(points.len());
    for f in &faces {
        dsu.union(f[0], f[1]);
        dsu.union(f[1], f[2]);
    }
    let mut groups: HashMap<usize, usize> = HashMap::new();
    let mut buckets: Vec<Vec<[usize; 3]>> = Vec::new();
    for f in &faces {
        let root = dsu.find(f[0]);
        let g = *groups.entry(root).or_insert_with(|| {
            buckets.push(Vec::new());
            buckets.len() - 1
        });
        buckets[g].push(*f);
    }
    let mut faults = Vec::new();
    let mut components = Vec::new();
    for bucket in buckets {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut verts = Vec::new();
        let faces: Vec<[usize; 3]> = bucket
            .iter()
            .map(|f| {
                f.map(|p| {
                    *remap.entry(p).or_insert_with(|| {
                        verts.push(points[p]);
                        verts.len() - 1
                    })
                })
            })
            .collect();
        let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
        for f in &faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if edges.values().any(|&c| c > 2) {
            faults.push("mesh edge shared by more than two faces".to_string());
        }
        let closed = edges.values().all(|&c| c == 2);
        components.push(ComponentGeometry::mesh(verts, faces, closed));
    }
    Extraction { components, faults, ..Default::default() }
}
