//! Marching triangles for scalar fields on a planar grid.

use super::{ComponentGeometry, Extraction};
use crate::field::{Lattice, LatticeValues};
use std::collections::HashMap;

const NONE: usize = usize::MAX;

/// Crossing points keyed by grid edge, with a two-slot adjacency list.
pub(super) struct SegmentGraph {
    pub points: Vec<[f64; 3]>,
    index: HashMap<usize, usize>,
    pub nbrs: Vec<[usize; 2]>,
}

impl SegmentGraph {
    pub fn new() -> Self {
        Self { points: Vec::new(), index: HashMap::new(), nbrs: Vec::new() }
    }

    pub fn vertex(&mut self, key: usize, make: impl FnOnce() -> [f64; 3]) -> usize {
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let id = self.points.len();
        self.points.push(make());
        self.nbrs.push([NONE, NONE]);
        self.index.insert(key, id);
        id
    }

    /// Returns false when a vertex would get a third neighbour.
    pub fn link(&mut self, a: usize, b: usize) -> bool {
        let mut ok = true;
        for (x, y) in [(a, b), (b, a)] {
            let slots = &mut self.nbrs[x];
            if slots[0] == NONE {
                slots[0] = y;
            } else if slots[1] == NONE {
                slots[1] = y;
            } else {
                ok = false;
            }
        }
        ok
    }

    /// Walks chains from degree-1 vertices, then the remaining cycles.
    pub fn trace(&self, dim: usize) -> Vec<ComponentGeometry> {
        let n = self.points.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let degree = |v: usize| self.nbrs[v].iter().filter(|&&x| x != NONE).count();
        let walk = |start: usize, seen: &mut Vec<bool>| -> (Vec<usize>, bool) {
            let mut path = vec![start];
            seen[start] = true;
            let (mut prev, mut cur) = (NONE, start);
            loop {
                let next = self.nbrs[cur].iter().copied().find(|&x| x != NONE && x != prev && !seen[x]);
                match next {
                    Some(nx) => {
                        seen[nx] = true;
                        path.push(nx);
                        prev = cur;
                        cur = nx;
                    }
                    None => {
                        let closes = path.len() > 2 && self.nbrs[cur].contains(&start);
                        return (path, closes);
                    }
                }
            }
        };
        for v in 0..n {
            if !seen[v] && degree(v) <= 1 {
                let (path, _) = walk(v, &mut seen);
                out.push(ComponentGeometry::polyline(dim, path.iter().map(|&i| self.points[i]).collect(), false));
            }
        }
        for v in 0..n {
            if !seen[v] {
                let (mut path, closes) = walk(v, &mut seen);
                if closes {
                    path.push(path[0]);
                }
                out.push(ComponentGeometry::polyline(dim, path.iter().map(|&i| self.points[i]).collect(), closes));
            }
        }
        out
    }
}

pub(super) fn interpolate(a: &[f64; 3], b: &[f64; 3], va: f64, vb: f64) -> [f64; 3] {
    let t = va / (va - vb);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub(super) fn extract(lattice: &Lattice, values: &LatticeValues) -> Extraction {
    let (c0, c1) = (lattice.counts[0], lattice.counts[1]);
    let v = &values.values;
    let pos = |idx: usize| -> [f64; 3] {
        let (i, j) = (idx % c0, idx / c0);
        [lattice.coord(0, i), lattice.coord(1, j), 0.0]
    };
    let mut graph = SegmentGraph::new();
    let mut faults = Vec::new();
    let offsets = [1usize, c0, c0 + 1];
    for j in 0..c1 - 1 {
        for i in 0..c0 - 1 {
            let p00 = i + c0 * j;
            let (p10, p01, p11) = (p00 + 1, p00 + c0, p00 + c0 + 1);
            // (corner, corner, edge base, edge direction)
            let tris: [[(usize, usize, usize, usize); 3]; 2] = [
                [(p00, p10, p00, 0), (p10, p11, p10, 1), (p00, p11, p00, 2)],
                [(p00, p01, p00, 1), (p01, p11, p01, 0), (p00, p11, p00, 2)],
            ];
            for tri in &tris {
                let mut ends = [NONE; 2];
                let mut count = 0;
                for &(a, b, base, dir) in tri {
                    if (v[a] > 0.0) != (v[b] > 0.0) {
                        debug_assert_eq!(base + offsets[dir], b);
                        let id = graph.vertex(base * 3 + dir, || interpolate(&pos(a), &pos(b), v[a], v[b]));
                        if count < 2 {
                            ends[count] = id;
                        }
                        count += 1;
                    }
                }
                if count == 2 && !graph.link(ends[0], ends[1]) {
                    faults.push("crossing vertex with three neighbours".to_string());
                }
            }
        }
    }
    Extraction { components: graph.trace(2), faults, ..Default::default() }
}
