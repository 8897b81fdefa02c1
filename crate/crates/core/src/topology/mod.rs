//! Topological and curvature invariants of extracted components, and the
//! per-cube census.

pub mod knots;
pub mod window;

pub use knots::{knot_classify, InvariantData, KnotLabel, KnotResult};
pub use window::{window_census, SandwichReport};

use crate::error::TopologyError;
use crate::extract::{ComponentGeometry, GeometryKind};
use crate::field::Field;
use crate::geometry::{curvature_at, willmore_integrand};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

/// Betti numbers `(1, 2g, 1)` of a closed orientable triangulated surface.
pub fn betti_surface(mesh: &ComponentGeometry) -> Result<[usize; 3], TopologyError> {
    if mesh.kind != GeometryKind::Mesh {
        return Err(TopologyError::WrongKind("a mesh"));
    }
    let mut edges: HashMap<(usize, usize), u32> = HashMap::new();
    for f in &mesh.faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    if let Some((e, c)) = edges.iter().find(|(_, &c)| c != 2) {
        return Err(TopologyError::NonManifold(format!("edge {e:?} borders {c} faces")));
    }
    let used: std::collections::HashSet<usize> = mesh.faces.iter().flatten().copied().collect();
    let chi = used.len() as i64 - edges.len() as i64 + mesh.faces.len() as i64;
    if chi > 2 || chi % 2 != 0 {
        return Err(TopologyError::NonManifold(format!("Euler characteristic {chi}")));
    }
    let genus = ((2 - chi) / 2) as usize;
    Ok([1, 2 * genus, 1])
}

/// Sum of exterior angles of a closed polyline.
pub fn total_curvature(polyline: &ComponentGeometry) -> Result<f64, TopologyError> {
    if polyline.kind != GeometryKind::Polyline {
        return Err(TopologyError::WrongKind("a polyline"));
    }
    if !polyline.closed {
        return Err(TopologyError::WrongKind("a closed polyline"));
    }
    let pts = distinct_cycle(&polyline.vertices);
    if pts.len() < 3 {
        return Err(TopologyError::TooFewVertices(pts.len()));
    }
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b, c) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - b[0], c[1] - b[1], c[2] - b[2]];
        let nu = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let cos = ((u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) / (nu * nv)).clamp(-1.0, 1.0);
        total += cos.acos();
    }
    Ok(total)
}

/// Vertices of a closed polyline without the repeated endpoint and without
/// consecutive duplicates.
pub(crate) fn distinct_cycle(vertices: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let span = (0..3)
        .map(|i| {
            let (lo, hi) = vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v[i]), b.max(v[i])));
            if hi > lo { hi - lo } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let mut pts = crate::extract::merge_close(vertices, true, 1e-12 * span);
    pts.pop();
    pts
}

/// Discrete Willmore energy of a surface mesh of `Z(f)`: vertex areas (a
/// third of the incident triangle areas) times `|H/2|^2` evaluated from the
/// field's jet. Returns the energy and the number of excluded degenerate vertices.
pub fn mesh_willmore(mesh: &ComponentGeometry, field: &dyn Field) -> Result<(f64, usize), TopologyError> {
    if mesh.kind != GeometryKind::Mesh {
        return Err(TopologyError::WrongKind("a mesh"));
    }
    let mut area = vec![0.0; mesh.vertices.len()];
    for f in &mesh.faces {
        let a = crate::extract::triangle_area(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]) / 3.0;
        for &v in f {
            area[v] += a;
        }
    }
    let (n, m) = (field.dim(), field.codim());
    let mut energy = 0.0;
    let mut excluded = 0;
    for (v, p) in mesh.vertices.iter().enumerate() {
        if area[v] == 0.0 {
            continue;
        }
        let jet = field.eval(&p[..n], 2).map_err(|e| TopologyError::NonManifold(e.to_string()))?;
        match curvature_at(&jet) {
            Ok((_, s)) => energy += area[v] * willmore_integrand(&s, n, m),
            Err(_) => {
                excluded += 1;
                log::debug!("degenerate frame at mesh vertex {v} excluded from the Willmore sum");
            }
        }
    }
    Ok((energy, excluded))
}

/// Largest first-order distance `|f| / |grad f|` from a mesh vertex to the
/// zero set, relative to the mesh's bounding-box diagonal. Sub-resolution
/// bubbles have ratios of order one; their curvature is not measurable.
pub fn mesh_offset_ratio(mesh: &ComponentGeometry, field: &dyn Field) -> Result<f64, TopologyError> {
    let n = field.dim();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut off: f64 = 0.0;
    for p in &mesh.vertices {
        for i in 0..n {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
        let jet = field.eval(&p[..n], 1).map_err(|e| TopologyError::NonManifold(e.to_string()))?;
        let g = jet.grad[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        off = off.max(jet.value[0].abs() / g);
    }
    let diag = (0..n).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt();
    Ok(off / diag)
}

/// Meshes whose vertices stray further than this fraction of their size from
/// the zero set get no Willmore energy.
pub const MESH_FIDELITY: f64 = 0.1;

/// One classified component with its invariants.
#[derive(Clone, Debug)]
pub struct ComponentRecord {
    pub geometry: ComponentGeometry,
    /// `(b0, ..., b_{n-m})`.
    pub betti: Vec<usize>,
    pub total_curvature: Option<f64>,
    pub willmore_energy: Option<f64>,
    pub knot_label: KnotLabel,
    pub invariants: Option<InvariantData>,
    pub fault: bool,
}

impl ComponentRecord {
    /// Computes invariants appropriate to the component type. The field is
    /// needed for the mesh Willmore energy only.
    pub fn build(geometry: ComponentGeometry, field: Option<&dyn Field>) -> Self {
        let mut rec = Self {
            betti: Vec::new(),
            total_curvature: None,
            willmore_energy: None,
            knot_label: KnotLabel::NotApplicable,
            invariants: None,
            fault: false,
            geometry,
        };
        let g = &rec.geometry;
        match g.kind {
            GeometryKind::Polyline => {
                rec.betti = vec![1, g.closed as usize];
                if g.closed {
                    match total_curvature(g) {
                        Ok(k) => {
                            rec.total_curvature = Some(k);
                            rec.willmore_energy = Some(k);
                        }
                        Err(_) => rec.fault = true,
                    }
                    if g.dim == 3 {
                        match knot_classify(g) {
                            Ok(k) => {
                                rec.fault |= k.fault;
                                rec.knot_label = k.label;
                                rec.invariants = Some(k.invariants);
                            }
                            Err(_) => {
                                rec.fault = true;
                                rec.knot_label = KnotLabel::Unknown;
                            }
                        }
                    }
                }
            }
            GeometryKind::Mesh => {
                if g.closed {
                    match betti_surface(g) {
                        Ok(b) => rec.betti = b.to_vec(),
                        Err(_) => {
                            rec.fault = true;
                            rec.betti = vec![1];
                        }
                    }
                    if let Some(f) = field {
                        match mesh_offset_ratio(g, f) {
                            Ok(r) if r <= MESH_FIDELITY => match mesh_willmore(g, f) {
                                Ok((e, _)) => rec.willmore_energy = Some(e),
                                Err(_) => rec.fault = true,
                            },
                            Ok(r) => log::debug!("mesh offset ratio {r:.3}: Willmore energy not measured"),
                            Err(_) => rec.fault = true,
                        }
                    }
                } else {
                    rec.betti = vec![1];
                }
            }
        }
        rec
    }
}

/// Unit sphere volume `|S^k|` for k = 1, 2.
pub fn sphere_measure(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        _ => 2.0 * PI.powf((k as f64 + 1.0) / 2.0) / libm::tgamma((k as f64 + 1.0) / 2.0),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CensusResult {
    /// Components inside the open cube.
    pub n: usize,
    /// Inside plus touching components.
    pub n_star: usize,
    /// Betti sums over closed inside components.
    pub betti_sums: Vec<usize>,
    /// Label counts over inside components.
    pub class_counts: BTreeMap<String, usize>,
    /// `class_counts / n`; `None` when `n = 0`.
    pub mu: Option<BTreeMap<String, f64>>,
    pub faults: usize,
}

/// Aggregates records already classified against the cube: records with
/// `touches_boundary` set count toward `n_star` only.
pub fn census(records: &[ComponentRecord], codim_dim: usize) -> CensusResult {
    let mut out = CensusResult { betti_sums: vec![0; codim_dim + 1], ..Default::default() };
    for r in records {
        out.n_star += 1;
        out.faults += r.fault as usize;
        if r.geometry.touches_boundary {
            continue;
        }
        out.n += 1;
        for (l, b) in r.betti.iter().enumerate().take(codim_dim + 1) {
            out.betti_sums[l] += b;
        }
        *out.class_counts.entry(r.knot_label.to_string()).or_default() += 1;
    }
    if out.n > 0 {
        out.mu = Some(out.class_counts.iter().map(|(k, &v)| (k.clone(), v as f64 / out.n as f64)).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize, r: f64) -> ComponentGeometry {
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                [r * t.cos(), r * t.sin(), 0.0]
            })
            .collect();
        ComponentGeometry::closed_curve(pts)
    }

    #[test]
    fn hexagon_total_curvature() {
        let k = total_curvature(&ring(6, 1.0)).unwrap();
        assert!((k - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn planar_figure_eight_exceeds_two_pi() {
        let pts = (0..200)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 200.0;
                [t.sin(), (2.0 * t).sin() / 2.0, 0.0]
            })
            .collect();
        let k = total_curvature(&ComponentGeometry::closed_curve(pts)).unwrap();
        assert!(k >= 2.0 * PI);
    }

    #[test]
    fn too_few_vertices() {
        let c = ComponentGeometry::closed_curve(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert_eq!(total_curvature(&c), Err(TopologyError::TooFewVertices(2)));
    }

    #[test]
    fn tetrahedron_surface_is_a_sphere() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let f = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let mesh = ComponentGeometry::mesh(v.clone(), f, true);
        assert_eq!(betti_surface(&mesh).unwrap(), [1, 0, 1]);
        let open = ComponentGeometry::mesh(v, vec![[0, 2, 1], [0, 1, 3]], false);
        assert!(matches!(betti_surface(&open), Err(TopologyError::NonManifold(_))));
    }

    fn record(label: KnotLabel, touches: bool) -> ComponentRecord {
        let mut geometry = ring(8, 1.0);
        geometry.touches_boundary = touches;
        ComponentRecord {
            geometry,
            betti: vec![1, 1],
            total_curvature: None,
            willmore_energy: None,
            knot_label: label,
            invariants: None,
            fault: false,
        }
    }

    #[test]
    fn census_counts_and_mu() {
        let empty = census(&[], 1);
        assert_eq!((empty.n, empty.n_star), (0, 0));
        assert!(empty.mu.is_none());
        let recs = vec![
            record(KnotLabel::Unknot, false),
            record(KnotLabel::Unknot, false),
            record(KnotLabel::Unknot, false),
            record(KnotLabel::Table("3_1"), false),
            record(KnotLabel::Unknot, true),
        ];
        let c = census(&recs, 1);
        assert_eq!((c.n, c.n_star), (4, 5));
        assert_eq!(c.betti_sums, vec![4, 4]);
        let mu = c.mu.unwrap();
        assert_eq!(mu["0_1"], 0.75);
        assert_eq!(mu["3_1"], 0.25);
        assert!((mu.values().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
