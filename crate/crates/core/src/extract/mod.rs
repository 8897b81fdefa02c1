//! Grid extraction of zero sets.
//!
//! All extractors work on the Freudenthal (Kuhn) triangulation of the
//! regular grid, where `F` is replaced by its piecewise-linear interpolant:
//! marching triangles for curves in the plane, marching tetrahedra for
//! surfaces in space, and a sign-determinant piercing test on tetrahedron
//! faces for codimension-2 curves in space.

mod contour;
mod nodal_curves;
mod surface;

pub use nodal_curves::WindingAudit;

use crate::error::ExtractError;
use crate::field::{Field, KernelSpec, Lattice, LatticeValues};
use std::io::{BufRead, Write};

pub const MAX_CELLS_PER_AXIS: usize = 2048;

/// Grid for extraction on `C_{R + padding}` with nominal cell size `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub radius: f64,
    pub h: f64,
    pub padding: f64,
    /// Newton refinement of codimension-2 piercing points.
    pub refine: bool,
}

impl GridSpec {
    pub fn new(radius: f64, h: f64, padding: f64) -> Result<Self, ExtractError> {
        if !(radius > 0.0) || !(h > 0.0) || !(padding >= 0.0) {
            return Err(ExtractError::InvalidGrid(format!("radius {radius}, h {h}, padding {padding}")));
        }
        let g = Self { radius, h, padding, refine: true };
        g.cells()?;
        Ok(g)
    }

    /// Default resolution: one twelfth of the characteristic wavelength.
    pub fn for_spec(spec: &KernelSpec, radius: f64, padding: f64) -> Result<Self, ExtractError> {
        Self::new(radius, spec.wavelength()? / 12.0, padding)
    }

    pub fn extent(&self) -> f64 {
        self.radius + self.padding
    }

    pub fn cells(&self) -> Result<usize, ExtractError> {
        let cells = (2.0 * self.extent() / self.h - 1e-9).ceil().max(1.0) as usize;
        if cells > MAX_CELLS_PER_AXIS {
            return Err(ExtractError::GridCap(cells));
        }
        Ok(cells)
    }

    /// Lattice covering `[-E, E]^n`; the spacing is shrunk so the cells tile it.
    pub fn lattice(&self, n: usize) -> Result<Lattice, ExtractError> {
        let cells = self.cells()?;
        let e = self.extent();
        Ok(Lattice::new(vec![-e; n], 2.0 * e / cells as f64, vec![cells + 1; n]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Polyline,
    Mesh,
}

impl GeometryKind {
    pub fn tag(self) -> &'static str {
        match self {
            GeometryKind::Polyline => "polyline",
            GeometryKind::Mesh => "mesh",
        }
    }
}

/// One connected component. Points are stored in 3-vectors; `dim` says
/// how many coordinates are meaningful.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentGeometry {
    pub kind: GeometryKind,
    pub dim: usize,
    /// Closed polylines repeat the first vertex at the end.
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub closed: bool,
    /// Meets the boundary of the cube it was last classified against
    /// (the extraction box right after extraction).
    pub touches_boundary: bool,
}

impl ComponentGeometry {
    pub fn polyline(dim: usize, vertices: Vec<[f64; 3]>, closed: bool) -> Self {
        Self { kind: GeometryKind::Polyline, dim, vertices, faces: Vec::new(), closed, touches_boundary: !closed }
    }

    pub fn mesh(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>, closed: bool) -> Self {
        Self { kind: GeometryKind::Mesh, dim: 3, vertices, faces, closed, touches_boundary: !closed }
    }

    /// Polyline from a closed parametric sample; the first vertex is appended.
    pub fn closed_curve(points: Vec<[f64; 3]>) -> Self {
        let mut v = points;
        if let Some(first) = v.first().copied() {
            v.push(first);
        }
        Self::polyline(3, v, true)
    }

    pub fn segments(&self) -> impl Iterator<Item = ([f64; 3], [f64; 3])> + '_ {
        let edges: Vec<(usize, usize)> = match self.kind {
            GeometryKind::Polyline => (1..self.vertices.len()).map(|i| (i - 1, i)).collect(),
            GeometryKind::Mesh => {
                let mut e: Vec<(usize, usize)> = self
                    .faces
                    .iter()
                    .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
                    .map(|(a, b)| (a.min(b), a.max(b)))
                    .collect();
                e.sort_unstable();
                e.dedup();
                e
            }
        };
        edges.into_iter().map(move |(a, b)| (self.vertices[a], self.vertices[b]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| dist(&a, &b)).sum()
    }

    pub fn area(&self) -> f64 {
        self.faces.iter().map(|f| triangle_area(&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]])).sum()
    }

    /// Length of the part of the polyline inside the closed cube `[-r, r]^dim`.
    pub fn clipped_length(&self, r: f64) -> f64 {
        if self.kind != GeometryKind::Polyline {
            return 0.0;
        }
        self.vertices
            .windows(2)
            .map(|w| clip_segment(&w[0], &w[1], r, self.dim).map_or(0.0, |(t0, t1)| (t1 - t0) * dist(&w[0], &w[1])))
            .sum()
    }

    /// Mesh area inside `[-r, r]^3`, assigning each triangle by its centroid.
    pub fn clipped_area(&self, r: f64) -> f64 {
        self.faces
            .iter()
            .filter(|f| {
                let c: Vec<f64> =
                    (0..3).map(|k| (self.vertices[f[0]][k] + self.vertices[f[1]][k] + self.vertices[f[2]][k]) / 3.0).collect();
                c.iter().all(|v| v.abs() <= r)
            })
            .map(|f| triangle_area(&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]))
            .sum()
    }

    fn first_vertex(&self) -> [f64; 3] {
        self.vertices.first().copied().unwrap_or([f64::NAN; 3])
    }
}

/// Sort by first vertex, lexicographically.
pub fn sort_components(components: &mut [ComponentGeometry]) {
    components.sort_by(|a, b| {
        let (p, q) = (a.first_vertex(), b.first_vertex());
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])).then(p[2].total_cmp(&q[2]))
    });
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub(crate) fn triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let w = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()
}

/// Liang-Barsky: parameter interval of segment `a b` inside `[-r, r]^dim`.
pub(crate) fn clip_segment(a: &[f64; 3], b: &[f64; 3], r: f64, dim: usize) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..dim {
        let d = b[k] - a[k];
        for (p, q) in [(-d, a[k] + r), (d, r - a[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Splits components into those inside the open cube `C_R` and those that
/// meet its closed version without being inside. Components disjoint from
/// the closed cube are dropped. Triangles are tested through their edges.
pub fn classify_against_cube(
    components: &[ComponentGeometry],
    r: f64,
) -> (Vec<ComponentGeometry>, Vec<ComponentGeometry>) {
    let mut inside = Vec::new();
    let mut touching = Vec::new();
    for c in components {
        let dim = c.dim;
        let all_inside = c.closed && c.vertices.iter().all(|v| v[..dim].iter().all(|x| x.abs() < r));
        let mut out = c.clone();
        if all_inside {
            out.touches_boundary = false;
            inside.push(out);
        } else if c.vertices.iter().any(|v| v[..dim].iter().all(|x| x.abs() <= r))
            || c.segments().any(|(a, b)| clip_segment(&a, &b, r, dim).is_some())
        {
            out.touches_boundary = true;
            touching.push(out);
        }
    }
    (inside, touching)
}

/// Outcome of one extraction.
#[derive(Clone, Debug, Default)]
pub struct Extraction {
    pub components: Vec<ComponentGeometry>,
    /// Half side of the extraction box.
    pub extent: f64,
    /// Grid spacing actually used.
    pub spacing: f64,
    /// Grid values that were exactly zero and nudged by +1e-12.
    pub nudged: usize,
    /// Tetrahedra with four pierced faces (codimension 2 only).
    pub under_resolved: usize,
    pub winding: Option<WindingAudit>,
    pub faults: Vec<String>,
}

impl Extraction {
    pub fn is_faulty(&self) -> bool {
        !self.faults.is_empty() || self.under_resolved > 0 || self.winding.is_some_and(|w| w.violations > 0)
    }
}

/// Dispatches on `(n, m)`.
pub fn extract(field: &dyn Field, grid: &GridSpec) -> Result<Extraction, ExtractError> {
    match (field.dim(), field.codim()) {
        (2, 1) | (3, 1) => extract_hypersurface(field, grid),
        (3, 2) => extract_nodal_curves(field, grid),
        (n, m) => Err(ExtractError::Codimension { expected: format!("(n, m) in (2,1), (3,1), (3,2); n = {n}"), found: m }),
    }
}

/// Curves (n = 2) or surfaces (n = 3) of a scalar field.
pub fn extract_hypersurface(field: &dyn Field, grid: &GridSpec) -> Result<Extraction, ExtractError> {
    if field.codim() != 1 {
        return Err(ExtractError::Codimension { expected: "1".into(), found: field.codim() });
    }
    let lattice = grid.lattice(field.dim())?;
    let mut values = field.eval_lattice(&lattice, 0)?;
    let nudged = nudge_zeros(&mut values);
    if nudged > 0 {
        log::info!("nudged {nudged} exact zero grid values by +1e-12");
    }
    let mut out = match field.dim() {
        2 => contour::extract(&lattice, &values),
        3 => surface::extract(&lattice, &values),
        n => return Err(ExtractError::InvalidGrid(format!("hypersurface extraction needs n = 2 or 3, got {n}"))),
    };
    out.nudged = nudged;
    finish(&mut out, &lattice);
    Ok(out)
}

/// Codimension-2 curves in R^3.
pub fn extract_nodal_curves(field: &dyn Field, grid: &GridSpec) -> Result<Extraction, ExtractError> {
    if field.codim() != 2 || field.dim() != 3 {
        return Err(ExtractError::Codimension { expected: "2 (in R^3)".into(), found: field.codim() });
    }
    let lattice = grid.lattice(3)?;
    let mut values = field.eval_lattice(&lattice, 0)?;
    let nudged = nudge_zeros(&mut values);
    let mut out = nodal_curves::extract(field, &lattice, &values, grid.refine);
    out.nudged = nudged;
    finish(&mut out, &lattice);
    Ok(out)
}

fn nudge_zeros(values: &mut LatticeValues) -> usize {
    let m = values.m;
    let mut count = 0;
    for idx in 0..values.values.len() / m {
        if values.values[idx * m] == 0.0 {
            values.values[idx * m] = 1e-12;
            count += 1;
        }
    }
    count
}

/// Consecutive polyline vertices closer than this fraction of the grid
/// spacing are merged.
pub const MERGE_FRACTION: f64 = 1e-2;

fn finish(out: &mut Extraction, lattice: &Lattice) {
    let extent = -lattice.origin[0];
    out.extent = extent;
    out.spacing = lattice.spacing;
    let tol = 1e-9 * extent.max(1.0);
    let on_boundary = |v: &[f64; 3], dim: usize| v[..dim].iter().any(|x| x.abs() >= extent - tol);
    // A zero at a grid vertex is crossed on several edges at once, and
    // refined piercing points of faces meeting near the curve can swap order
    // by a fraction of a cell. Both leave sub-resolution folds.
    let merge = MERGE_FRACTION * lattice.spacing;
    for c in out.components.iter_mut().filter(|c| c.kind == GeometryKind::Polyline) {
        c.vertices = merge_close(&c.vertices, c.closed, merge);
    }
    for c in &out.components {
        if c.closed {
            continue;
        }
        let ends: Vec<&[f64; 3]> = match c.kind {
            GeometryKind::Polyline => vec![c.vertices.first().unwrap(), c.vertices.last().unwrap()],
            GeometryKind::Mesh => boundary_vertices(c).into_iter().map(|i| &c.vertices[i]).collect(),
        };
        if ends.iter().any(|v| !on_boundary(v, c.dim)) {
            out.faults.push(format!(
                "open {} with {} vertices ends away from the extraction boundary",
                c.kind.tag(),
                c.vertices.len()
            ));
        }
    }
    sort_components(&mut out.components);
}

/// Drops polyline vertices within `tol` of their predecessor. Closed
/// polylines keep the repeated first vertex at the end.
pub fn merge_close(vertices: &[[f64; 3]], closed: bool, tol: f64) -> Vec<[f64; 3]> {
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if out.last().is_none_or(|l| dist(l, v) > tol) {
            out.push(*v);
        }
    }
    if closed && !out.is_empty() {
        while out.len() > 1 && dist(out.last().unwrap(), &out[0]) <= tol {
            out.pop();
        }
        out.push(out[0]);
    } else if let (Some(&end), Some(last)) = (vertices.last(), out.last_mut()) {
        // open ends sit on the boundary; keep the true endpoint
        *last = end;
    }
    out
}

/// Vertices on edges used by exactly one face.
pub(crate) fn boundary_vertices(c: &ComponentGeometry) -> Vec<usize> {
    let mut edges: Vec<(usize, usize)> =
        c.faces.iter().flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])]).map(|(a, b)| (a.min(b), a.max(b))).collect();
    edges.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        let mut j = i;
        while j < edges.len() && edges[j] == edges[i] {
            j += 1;
        }
        if j - i == 1 {
            out.push(edges[i].0);
            out.push(edges[i].1);
        }
        i = j;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Writes components in the line-based geometry format:
///
/// ```text
/// <kind> <closed 0|1> <touches 0|1> <vertex_count> [<face_count>]
/// <x> <y> [<z>]            one line per vertex
/// <i> <j> <k>              one line per face (meshes only)
/// ```
///
/// Coordinates use Rust's shortest round-trip `f64` formatting.
pub fn write_geometry(components: &[ComponentGeometry], mut w: impl Write) -> std::io::Result<()> {
    for c in components {
        write!(w, "{} {} {} {}", c.kind.tag(), c.closed as u8, c.touches_boundary as u8, c.vertices.len())?;
        if c.kind == GeometryKind::Mesh {
            write!(w, " {}", c.faces.len())?;
        }
        writeln!(w)?;
        for v in &c.vertices {
            let coords: Vec<String> = v[..c.dim].iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{}", coords.join(" "))?;
        }
        for f in &c.faces {
            writeln!(w, "{} {} {}", f[0], f[1], f[2])?;
        }
    }
    Ok(())
}

pub fn read_geometry(r: impl BufRead) -> Result<Vec<ComponentGeometry>, ExtractError> {
    let bad = |msg: &str| ExtractError::Format(msg.to_string());
    let mut lines = r.lines();
    let mut out = Vec::new();
    while let Some(header) = lines.next() {
        let header = header.map_err(|e| bad(&e.to_string()))?;
        if header.trim().is_empty() {
            continue;
        }
        let tok: Vec<&str> = header.split_whitespace().collect();
        let kind = match tok.first() {
            Some(&"polyline") => GeometryKind::Polyline,
            Some(&"mesh") => GeometryKind::Mesh,
            _ => return Err(bad("unknown component kind")),
        };
        let want = if kind == GeometryKind::Mesh { 5 } else { 4 };
        if tok.len() != want {
            return Err(bad("malformed header"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
        let closed = num(tok[1])? == 1;
        let touches = num(tok[2])? == 1;
        let nv = num(tok[3])?;
        let nf = if kind == GeometryKind::Mesh { num(tok[4])? } else { 0 };
        let mut vertices = Vec::with_capacity(nv);
        let mut dim = 0;
        for _ in 0..nv {
            let line = lines.next().ok_or_else(|| bad("truncated vertices"))?.map_err(|e| bad(&e.to_string()))?;
            let xs: Vec<f64> =
                line.split_whitespace().map(|s| s.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("bad float"))?;
            if xs.is_empty() || xs.len() > 3 || (dim != 0 && xs.len() != dim) {
                return Err(bad("inconsistent vertex dimension"));
            }
            dim = xs.len();
            let mut v = [0.0; 3];
            v[..dim].copy_from_slice(&xs);
            vertices.push(v);
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let line = lines.next().ok_or_else(|| bad("truncated faces"))?.map_err(|e| bad(&e.to_string()))?;
            let f: Vec<usize> = line.split_whitespace().map(num).collect::<Result<_, _>>()?;
            if f.len() != 3 || f.iter().any(|&i| i >= nv) {
                return Err(bad("bad face"));
            }
            faces.push([f[0], f[1], f[2]]);
        }
        out.push(ComponentGeometry {
            kind,
            dim: if dim == 0 { 3 } else { dim },
            vertices,
            faces,
            closed,
            touches_boundary: touches,
        });
    }
    Ok(out)
}
