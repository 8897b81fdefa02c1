//! Knot type of a closed polyline in R^3.
//!
//! Pipeline: vertex-deletion simplification, a generic planar projection,
//! the signed Gauss code with Reidemeister I/II reductions, and the
//! Alexander polynomial from a minor of the Alexander matrix. The minor is
//! evaluated at integer points modulo `2^61 - 1` and interpolated; knot
//! polynomials in our range have coefficients far below the modulus.

use super::distinct_cycle;
use crate::error::TopologyError;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of projection directions tried before giving up.
pub const PROJECTION_ATTEMPTS: usize = 50;
/// Generic projections compared; the one with the fewest crossings wins.
const PROJECTIONS_COMPARED: usize = 5;
/// Above this many reduced crossings the polynomial is not computed.
pub const MAX_CROSSINGS: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KnotLabel {
    Unknot,
    Table(&'static str),
    Composite,
    Unknown,
    NotApplicable,
}

impl fmt::Display for KnotLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotLabel::Unknot => f.write_str("0_1"),
            KnotLabel::Table(name) => f.write_str(name),
            KnotLabel::Composite => f.write_str("composite"),
            KnotLabel::Unknown => f.write_str("unknown"),
            KnotLabel::NotApplicable => f.write_str("not_applicable"),
        }
    }
}

impl KnotLabel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "0_1" | "unknot" => Some(Self::Unknot),
            "composite" => Some(Self::Composite),
            "unknown" => Some(Self::Unknown),
            "not_applicable" => Some(Self::NotApplicable),
            _ => TABLE.iter().find(|e| e.name == s).map(|e| Self::Table(e.name)),
        }
    }

    /// Prime knot with nontrivial type, or a composite.
    pub fn is_nontrivial(&self) -> bool {
        matches!(self, Self::Table(_) | Self::Composite)
    }

    /// Every label string in table order, as used for CSV columns.
    pub fn all() -> Vec<String> {
        let mut out = vec!["0_1".to_string()];
        out.extend(TABLE.iter().map(|e| e.name.to_string()));
        out.extend(["composite", "unknown", "not_applicable"].map(String::from));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantData {
    /// Crossings of the diagram after Reidemeister I/II reductions.
    pub crossings: usize,
    /// `|Delta(-1)|`.
    pub determinant: u64,
    /// Alexander coefficients, lowest degree first, symmetric, positive leading term.
    pub alexander: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnotResult {
    pub label: KnotLabel,
    pub invariants: InvariantData,
    pub fault: bool,
    /// Vertices left after simplification.
    pub simplified_vertices: usize,
}

struct TableEntry {
    name: &'static str,
    crossings: usize,
    alexander: &'static [i64],
}

/// Prime knots through seven crossings. No two share an Alexander polynomial.
const TABLE: &[TableEntry] = &[
    TableEntry { name: "3_1", crossings: 3, alexander: &[1, -1, 1] },
    TableEntry { name: "4_1", crossings: 4, alexander: &[1, -3, 1] },
    TableEntry { name: "5_1", crossings: 5, alexander: &[1, -1, 1, -1, 1] },
    TableEntry { name: "5_2", crossings: 5, alexander: &[2, -3, 2] },
    TableEntry { name: "6_1", crossings: 6, alexander: &[2, -5, 2] },
    TableEntry { name: "6_2", crossings: 6, alexander: &[1, -3, 3, -3, 1] },
    TableEntry { name: "6_3", crossings: 6, alexander: &[1, -3, 5, -3, 1] },
    TableEntry { name: "7_1", crossings: 7, alexander: &[1, -1, 1, -1, 1, -1, 1] },
    TableEntry { name: "7_2", crossings: 7, alexander: &[3, -5, 3] },
    TableEntry { name: "7_3", crossings: 7, alexander: &[2, -3, 3, -3, 2] },
    TableEntry { name: "7_4", crossings: 7, alexander: &[4, -7, 4] },
    TableEntry { name: "7_5", crossings: 7, alexander: &[2, -4, 5, -4, 2] },
    TableEntry { name: "7_6", crossings: 7, alexander: &[1, -5, 7, -5, 1] },
    TableEntry { name: "7_7", crossings: 7, alexander: &[1, -5, 9, -5, 1] },
];

/// Classifies a closed polyline.
pub fn knot_classify(polyline: &crate::extract::ComponentGeometry) -> Result<KnotResult, TopologyError> {
    if polyline.kind != crate::extract::GeometryKind::Polyline || polyline.dim != 3 {
        return Err(TopologyError::WrongKind("a polyline in R^3"));
    }
    if !polyline.closed {
        return Err(TopologyError::WrongKind("a closed polyline"));
    }
    classify_points(&polyline.vertices, true)
}

/// Classifies the closed polygon through `vertices` (a repeated endpoint is
/// ignored), optionally skipping simplification.
pub fn classify_points(vertices: &[[f64; 3]], simplify_first: bool) -> Result<KnotResult, TopologyError> {
    let mut pts = distinct_cycle(vertices);
    if pts.len() < 3 {
        return Err(TopologyError::TooFewVertices(pts.len()));
    }
    if simplify_first {
        pts = simplify(&pts);
    }
    let simplified_vertices = pts.len();
    let unknown = |crossings| KnotResult {
        label: KnotLabel::Unknown,
        invariants: InvariantData { crossings, determinant: 0, alexander: Vec::new() },
        fault: true,
        simplified_vertices,
    };
    let Some(mut diagram) = best_projection(&pts) else {
        log::warn!("no generic projection among {PROJECTION_ATTEMPTS} directions");
        return Ok(unknown(0));
    };
    diagram.reduce();
    let crossings = diagram.crossings();
    if crossings > MAX_CROSSINGS {
        log::warn!("diagram with {crossings} crossings left unclassified");
        return Ok(unknown(crossings));
    }
    let Some(alexander) = diagram.alexander() else {
        return Ok(unknown(crossings));
    };
    let determinant = evaluate_at_minus_one(&alexander);
    let mut label = lookup(&alexander);
    let mut fault = false;
    if let KnotLabel::Table(name) = label {
        let min = TABLE.iter().find(|e| e.name == name).map_or(0, |e| e.crossings);
        if crossings < min {
            // fewer crossings than the crossing number: the diagram is wrong
            label = KnotLabel::Unknown;
            fault = true;
        }
    }
    Ok(KnotResult { label, invariants: InvariantData { crossings, determinant, alexander }, fault, simplified_vertices })
}

/// Table lookup, then products of two nontrivial table polynomials.
pub fn lookup(alexander: &[i64]) -> KnotLabel {
    if alexander == [1] {
        return KnotLabel::Unknot;
    }
    if let Some(e) = TABLE.iter().find(|e| e.alexander == alexander) {
        return KnotLabel::Table(e.name);
    }
    for a in TABLE {
        for b in TABLE {
            if normalize(poly_mul(a.alexander, b.alexander)).as_deref() == Some(alexander) {
                return KnotLabel::Composite;
            }
        }
    }
    KnotLabel::Unknown
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Strips zero ends, requires a palindrome with `|Delta(1)| = 1`, and makes
/// the leading coefficient positive.
pub fn normalize(mut c: Vec<i64>) -> Option<Vec<i64>> {
    while c.last() == Some(&0) {
        c.pop();
    }
    let lead = c.iter().position(|&x| x != 0)?;
    c.drain(..lead);
    if c[c.len() - 1] < 0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    let palindrome = c.iter().eq(c.iter().rev());
    let at_one: i64 = c.iter().sum();
    (palindrome && at_one.abs() == 1).then_some(c)
}

fn evaluate_at_minus_one(c: &[i64]) -> u64 {
    c.iter().enumerate().map(|(i, &x)| if i % 2 == 0 { x } else { -x }).sum::<i64>().unsigned_abs()
}

// ---------------------------------------------------------------- geometry

type P3 = [f64; 3];

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn lerp(a: &P3, b: &P3, t: f64) -> P3 {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

fn diameter(pts: &[P3]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in pts {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    dot(&sub(&hi, &lo), &sub(&hi, &lo)).sqrt()
}

fn point_segment_dist(p: &P3, a: &P3, b: &P3) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 { (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let d = sub(p, &lerp(a, b, t));
    dot(&d, &d).sqrt()
}

fn segment_segment_dist(p1: &P3, q1: &P3, p2: &P3, q2: &P3) -> f64 {
    let (d1, d2, r) = (sub(q1, p1), sub(q2, p2), sub(p1, p2));
    let (a, e, f) = (dot(&d1, &d1), dot(&d2, &d2), dot(&d2, &r));
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return dot(&r, &r).sqrt();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = dot(&d1, &d2);
            let denom = a * e - b * b;
            let s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    let d = sub(&lerp(p1, q1, s), &lerp(p2, q2, t));
    dot(&d, &d).sqrt()
}

fn point_triangle_dist(p: &P3, tri: &[P3; 3]) -> f64 {
    let n = cross(&sub(&tri[1], &tri[0]), &sub(&tri[2], &tri[0]));
    let nn = dot(&n, &n);
    if nn > 0.0 {
        let inside = (0..3).all(|k| {
            let (a, b) = (&tri[k], &tri[(k + 1) % 3]);
            dot(&cross(&sub(b, a), &sub(p, a)), &n) >= 0.0
        });
        if inside {
            return dot(&sub(p, &tri[0]), &n).abs() / nn.sqrt();
        }
    }
    (0..3).map(|k| point_segment_dist(p, &tri[k], &tri[(k + 1) % 3])).fold(f64::INFINITY, f64::min)
}

fn segment_triangle_dist(a: &P3, b: &P3, tri: &[P3; 3]) -> f64 {
    let n = cross(&sub(&tri[1], &tri[0]), &sub(&tri[2], &tri[0]));
    let (da, db) = (dot(&sub(a, &tri[0]), &n), dot(&sub(b, &tri[0]), &n));
    if da * db < 0.0 {
        let hit = lerp(a, b, da / (da - db));
        let inside = (0..3).all(|k| {
            let (u, v) = (&tri[k], &tri[(k + 1) % 3]);
            dot(&cross(&sub(v, u), &sub(&hit, u)), &n) >= 0.0
        });
        if inside {
            return 0.0;
        }
    }
    let mut best = point_triangle_dist(a, tri).min(point_triangle_dist(b, tri));
    for k in 0..3 {
        best = best.min(segment_segment_dist(a, b, &tri[k], &tri[(k + 1) % 3]));
    }
    best
}

#[derive(Clone, Copy)]
struct Aabb {
    lo: P3,
    hi: P3,
}

impl Aabb {
    fn of(points: &[&P3], pad: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k] - pad);
                hi[k] = hi[k].max(p[k] + pad);
            }
        }
        Self { lo, hi }
    }

    fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.lo[k] <= o.hi[k] && o.lo[k] <= self.hi[k])
    }
}

/// Deletes vertices whose triangle with its two neighbours stays clear of
/// every other segment, until no deletion is possible. Such a deletion is
/// an ambient isotopy. Near misses count as hits.
pub fn simplify(points: &[P3]) -> Vec<P3> {
    let mut pts = points.to_vec();
    let tol = 1e-7 * diameter(points).max(f64::MIN_POSITIVE);
    loop {
        let mut removed = false;
        let mut i = 0;
        while i < pts.len() && pts.len() > 3 {
            let n = pts.len();
            let (ia, ic) = ((i + n - 1) % n, (i + 1) % n);
            let tri = [pts[ia], pts[i], pts[ic]];
            let bbox = Aabb::of(&[&tri[0], &tri[1], &tri[2]], tol);
            let blocked = (0..n).any(|s| {
                let e = (s + 1) % n;
                if s == ia || s == i {
                    return false;
                }
                let (mut a, mut b) = (pts[s], pts[e]);
                if e == ia {
                    // segment ending at the triangle corner: test all but its shared end
                    b = lerp(&a, &b, 0.99);
                } else if s == ic {
                    a = lerp(&a, &b, 0.01);
                }
                if !bbox.overlaps(&Aabb::of(&[&a, &b], 0.0)) {
                    return false;
                }
                segment_triangle_dist(&a, &b, &tri) <= tol
            });
            if blocked {
                i += 1;
            } else {
                pts.remove(i);
                removed = true;
            }
        }
        if !removed || pts.len() <= 3 {
            return pts;
        }
    }
}

/// Deterministic, roughly uniform directions on the upper hemisphere.
pub fn projection_directions() -> Vec<P3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..PROJECTION_ATTEMPTS)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / PROJECTION_ATTEMPTS as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64 + 0.1;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

// ---------------------------------------------------------------- diagrams

/// Signed Gauss code: the crossing events in order along the curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagram {
    /// `(crossing, over)` per event; each crossing appears once over and once under.
    pub code: Vec<(usize, bool)>,
    /// `+1` or `-1` per crossing.
    pub signs: Vec<i8>,
}

fn best_projection(pts: &[P3]) -> Option<Diagram> {
    let mut best: Option<Diagram> = None;
    let mut found = 0;
    for d in projection_directions() {
        if let Some(diag) = project(pts, &d) {
            if best.as_ref().is_none_or(|b| diag.crossings() < b.crossings()) {
                best = Some(diag);
            }
            found += 1;
            if found == PROJECTIONS_COMPARED {
                break;
            }
        }
    }
    best
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn point_segment_dist2(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    point_segment_dist(&[p[0], p[1], 0.0], &[a[0], a[1], 0.0], &[b[0], b[1], 0.0])
}

/// Projects along `dir` (viewer at `+dir`). Returns `None` when the
/// projection is not generic at the working tolerance: a vertex close to a
/// non-incident segment, overlapping segments, near-coincident crossings or
/// strands nearly touching in space.
pub fn project(pts: &[P3], dir: &P3) -> Option<Diagram> {
    let n = pts.len();
    let nd = dot(dir, dir).sqrt();
    let d = [dir[0] / nd, dir[1] / nd, dir[2] / nd];
    let helper = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let u = cross(&d, &helper);
    let u = {
        let l = dot(&u, &u).sqrt();
        [u[0] / l, u[1] / l, u[2] / l]
    };
    let w = cross(&d, &u);
    let p2: Vec<[f64; 2]> = pts.iter().map(|p| [dot(p, &u), dot(p, &w)]).collect();
    let z: Vec<f64> = pts.iter().map(|p| dot(p, &d)).collect();
    let tol = 1e-8 * diameter(pts).max(f64::MIN_POSITIVE);
    let seg = |i: usize| (p2[i], p2[(i + 1) % n]);
    let boxes: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let (a, b) = seg(i);
            [a[0].min(b[0]) - tol, a[0].max(b[0]) + tol, a[1].min(b[1]) - tol, a[1].max(b[1]) + tol]
        })
        .collect();
    // (over position, under position, sign, location)
    let mut crossings: Vec<(f64, f64, i8, [f64; 2])> = Vec::new();
    for i in 0..n {
        // consecutive segments must not fold back onto each other
        let (a, b) = seg(i);
        let c = p2[(i + 2) % n];
        if n > 3 && (point_segment_dist2(c, a, b) <= tol || point_segment_dist2(a, b, c) <= tol) {
            return None;
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[0] > bj[1] || bj[0] > bi[1] || bi[2] > bj[3] || bj[2] > bi[3] {
                continue;
            }
            let (c, e) = seg(j);
            let near = point_segment_dist2(a, c, e)
                .min(point_segment_dist2(b, c, e))
                .min(point_segment_dist2(c, a, b))
                .min(point_segment_dist2(e, a, b));
            if near <= tol {
                return None;
            }
            let r = [b[0] - a[0], b[1] - a[1]];
            let q = [e[0] - c[0], e[1] - c[1]];
            let denom = cross2(r, q);
            if denom == 0.0 {
                continue;
            }
            let ac = [c[0] - a[0], c[1] - a[1]];
            let s = cross2(ac, q) / denom;
            let t = cross2(ac, r) / denom;
            if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
                continue;
            }
            let zi = z[i] + s * (z[(i + 1) % n] - z[i]);
            let zj = z[j] + t * (z[(j + 1) % n] - z[j]);
            if (zi - zj).abs() <= tol {
                return None;
            }
            let at = [a[0] + s * r[0], a[1] + s * r[1]];
            let (over, under, od, ud) =
                if zi > zj { (i as f64 + s, j as f64 + t, r, q) } else { (j as f64 + t, i as f64 + s, q, r) };
            let sign = if cross2(od, ud) > 0.0 { 1 } else { -1 };
            crossings.push((over, under, sign, at));
        }
    }
    for (k, x) in crossings.iter().enumerate() {
        for y in &crossings[k + 1..] {
            if (x.3[0] - y.3[0]).hypot(x.3[1] - y.3[1]) <= tol {
                return None;
            }
        }
    }
    let mut events: Vec<(f64, usize, bool)> = Vec::with_capacity(2 * crossings.len());
    for (c, x) in crossings.iter().enumerate() {
        events.push((x.0, c, true));
        events.push((x.1, c, false));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(Diagram { code: events.iter().map(|e| (e.1, e.2)).collect(), signs: crossings.iter().map(|x| x.2).collect() })
}

impl Diagram {
    pub fn crossings(&self) -> usize {
        self.code.len() / 2
    }

    /// Applies Reidemeister I and II reductions visible in the Gauss code
    /// until none remains, then renumbers the crossings.
    pub fn reduce(&mut self) {
        loop {
            let len = self.code.len();
            if len < 2 {
                break;
            }
            let mut kill: Option<Vec<usize>> = None;
            for k in 0..len {
                let (c1, o1) = self.code[k];
                let (c2, o2) = self.code[(k + 1) % len];
                if c1 == c2 {
                    kill = Some(vec![c1]);
                    break;
                }
                if o1 == o2 && self.signs[c1] != self.signs[c2] {
                    let other = |c: usize, skip: usize| (0..len).find(|&t| t != skip && self.code[t].0 == c).unwrap();
                    let (a, b) = (other(c1, k), other(c2, (k + 1) % len));
                    if (a + 1) % len == b || (b + 1) % len == a {
                        kill = Some(vec![c1, c2]);
                        break;
                    }
                }
            }
            match kill {
                Some(dead) => self.code.retain(|e| !dead.contains(&e.0)),
                None => break,
            }
        }
        let mut map = vec![usize::MAX; self.signs.len()];
        let mut signs = Vec::new();
        for e in self.code.iter_mut() {
            if map[e.0] == usize::MAX {
                map[e.0] = signs.len();
                signs.push(self.signs[e.0]);
            }
            e.0 = map[e.0];
        }
        self.signs = signs;
    }

    /// Alexander matrix as `A0 + t A1`: rows are crossings, columns are arcs
    /// (arc k ends at the k-th undercrossing along the curve).
    pub fn alexander_matrix(&self) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
        let n = self.crossings();
        let mut a0 = vec![vec![0i64; n]; n];
        let mut a1 = vec![vec![0i64; n]; n];
        let mut over_arc = vec![0usize; n];
        let mut under_index = vec![0usize; n];
        let mut passed = 0;
        for &(c, over) in &self.code {
            if over {
                over_arc[c] = passed % n;
            } else {
                under_index[c] = passed;
                passed += 1;
            }
        }
        for c in 0..n {
            let (o, i, out) = (over_arc[c], under_index[c], (under_index[c] + 1) % n);
            a0[c][o] += 1;
            a1[c][o] -= 1;
            if self.signs[c] > 0 {
                a1[c][i] += 1;
                a0[c][out] -= 1;
            } else {
                a0[c][i] -= 1;
                a1[c][out] += 1;
            }
        }
        (a0, a1)
    }

    /// Normalized Alexander polynomial, or `None` when the computed minor is
    /// not a valid knot polynomial.
    pub fn alexander(&self) -> Option<Vec<i64>> {
        let n = self.crossings();
        if n <= 1 {
            return Some(vec![1]);
        }
        let (a0, a1) = self.alexander_matrix();
        let size = n - 1;
        let xs: Vec<u64> = (1..=n as u64).collect();
        let ys: Vec<u64> = xs
            .iter()
            .map(|&t| {
                let m: Vec<Vec<u64>> = (0..size)
                    .map(|r| (0..size).map(|c| add(reduce_i(a0[r][c]), mul(reduce_i(a1[r][c]), t))).collect())
                    .collect();
                det_mod(m)
            })
            .collect();
        let coeffs = interpolate(&xs, &ys);
        normalize(coeffs.iter().map(|&c| if c > P / 2 { c as i64 - P as i64 } else { c as i64 }).collect())
    }
}

// ---------------------------------------------------------------- arithmetic mod 2^61 - 1

const P: u64 = (1 << 61) - 1;

fn reduce_i(x: i64) -> u64 {
    x.rem_euclid(P as i64) as u64
}

fn add(a: u64, b: u64) -> u64 {
    (a + b) % P
}

fn subm(a: u64, b: u64) -> u64 {
    (a + P - b) % P
}

fn mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn pow(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, a);
        }
        a = mul(a, a);
        e >>= 1;
    }
    r
}

fn inv(a: u64) -> u64 {
    pow(a, P - 2)
}

fn det_mod(mut m: Vec<Vec<u64>>) -> u64 {
    let n = m.len();
    let mut det = 1;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| m[r][col] != 0) else {
            return 0;
        };
        if piv != col {
            m.swap(piv, col);
            det = subm(0, det);
        }
        det = mul(det, m[col][col]);
        let iv = inv(m[col][col]);
        for r in col + 1..n {
            if m[r][col] == 0 {
                continue;
            }
            let f = mul(m[r][col], iv);
            for c in col..n {
                let v = mul(f, m[col][c]);
                m[r][c] = subm(m[r][c], v);
            }
        }
    }
    det
}

/// Coefficients (lowest first) of the polynomial through `(xs, ys)` mod P.
fn interpolate(xs: &[u64], ys: &[u64]) -> Vec<u64> {
    let n = xs.len();
    let mut out = vec![0u64; n];
    for i in 0..n {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![1u64];
        let mut denom = 1u64;
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut next = vec![0u64; basis.len() + 1];
            for (k, &b) in basis.iter().enumerate() {
                next[k + 1] = add(next[k + 1], b);
                next[k] = subm(next[k], mul(b, xs[j]));
            }
            basis = next;
            denom = mul(denom, subm(xs[i], xs[j]));
        }
        let scale = mul(ys[i], inv(denom));
        for (k, b) in basis.iter().enumerate() {
            out[k] = add(out[k], mul(*b, scale));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_polynomials_are_normalized_and_distinct() {
        for (i, e) in TABLE.iter().enumerate() {
            assert_eq!(normalize(e.alexander.to_vec()).as_deref(), Some(e.alexander), "{}", e.name);
            assert!(TABLE[..i].iter().all(|f| f.alexander != e.alexander));
        }
    }

    #[test]
    fn composite_lookup() {
        assert_eq!(lookup(&[1, -2, 3, -2, 1]), KnotLabel::Composite);
        assert_eq!(lookup(&[1]), KnotLabel::Unknot);
        assert_eq!(lookup(&[1, -3, 1]), KnotLabel::Table("4_1"));
        assert_eq!(lookup(&[3, -7, 3]), KnotLabel::Unknown);
    }

    #[test]
    fn determinant_of_known_polynomials() {
        assert_eq!(evaluate_at_minus_one(&[1, -1, 1]), 3);
        assert_eq!(evaluate_at_minus_one(&[1, -3, 1]), 5);
        assert_eq!(evaluate_at_minus_one(&[1, -3, 5, -3, 1]), 13);
    }

    #[test]
    fn modular_determinant_matches_integer_one() {
        let m = vec![vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 1]];
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(det_mod(m.iter().map(|r| r.iter().map(|&x| reduce_i(x)).collect()).collect()), 0);
        let m = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(det_mod(m.iter().map(|r| r.iter().map(|&x| reduce_i(x)).collect()).collect()), P - 1);
    }

    #[test]
    fn interpolation_recovers_coefficients() {
        // 3 - 2x + x^2
        let xs = [1, 2, 3];
        let ys: Vec<u64> = xs.iter().map(|&x| reduce_i(3 - 2 * x as i64 + (x * x) as i64)).collect();
        assert_eq!(interpolate(&xs, &ys), vec![3, P - 2, 1]);
    }

    #[test]
    fn reidemeister_one_loop_vanishes() {
        let mut d = Diagram { code: vec![(0, true), (0, false)], signs: vec![1] };
        d.reduce();
        assert_eq!(d.crossings(), 0);
        assert_eq!(d.alexander(), Some(vec![1]));
    }

    #[test]
    fn directions_are_unit() {
        for d in projection_directions() {
            assert!((dot(&d, &d) - 1.0).abs() < 1e-12);
        }
    }
}
