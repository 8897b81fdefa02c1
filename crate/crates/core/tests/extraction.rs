use nodal_core::extract::{classify_against_cube, extract, extract_hypersurface, extract_nodal_curves, GridSpec};
use nodal_core::field::synthetic::ImplicitField;
use nodal_core::field::{sample_field, KernelSpec};
use std::f64::consts::PI;

fn grid(r: f64, h: f64, pad: f64) -> GridSpec {
    GridSpec::new(r, h, pad).unwrap()
}

#[test]
fn circle_of_radius_half() {
    let f = ImplicitField::new(2, 1, |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 0.25]);
    let out = extract_hypersurface(&f, &grid(1.0, 0.01, 0.0)).unwrap();
    assert!(out.faults.is_empty());
    assert_eq!(out.components.len(), 1);
    let c = &out.components[0];
    assert!(c.closed);
    assert_eq!(c.vertices.first(), c.vertices.last());
    assert!((c.length() - PI).abs() / PI < 0.01);
    let (inside, touching) = classify_against_cube(&out.components, 1.0);
    assert_eq!((inside.len(), touching.len()), (1, 0));
}

#[test]
fn straight_line_touches_boundary() {
    let f = ImplicitField::new(2, 1, |x: &[f64]| vec![x[0] + 0.0123]);
    let out = extract_hypersurface(&f, &grid(1.0, 0.05, 0.0)).unwrap();
    assert!(out.faults.is_empty());
    assert_eq!(out.components.len(), 1);
    assert!(!out.components[0].closed);
    assert!(out.components[0].touches_boundary);
    let (inside, touching) = classify_against_cube(&out.components, 1.0);
    assert_eq!((inside.len(), touching.len()), (0, 1));
}

#[test]
fn product_of_two_circles() {
    let f = ImplicitField::new(2, 1, |x: &[f64]| {
        let a = x[0] * x[0] + x[1] * x[1] - 0.25;
        let b = (x[0] - 0.6).powi(2) + (x[1] - 0.6).powi(2) - 0.01;
        vec![a * b]
    });
    let out = extract_hypersurface(&f, &grid(1.0, 0.01, 0.0)).unwrap();
    let closed = out.components.iter().filter(|c| c.closed).count();
    assert_eq!(closed, 2);
    assert_eq!(out.components.len(), 2);
}

#[test]
fn sphere_mesh_is_closed_with_euler_two() {
    let f = ImplicitField::new(3, 1, |x: &[f64]| vec![1.0 - x.iter().map(|v| v * v).sum::<f64>()]);
    let out = extract_hypersurface(&f, &grid(1.3, 0.1, 0.0)).unwrap();
    assert!(out.faults.is_empty());
    assert_eq!(out.components.len(), 1);
    let m = &out.components[0];
    assert!(m.closed);
    assert!((m.area() - 4.0 * PI).abs() / (4.0 * PI) < 0.02);
}

#[test]
fn planar_circle_as_codimension_two_curve() {
    let f = ImplicitField::new(3, 2, |x: &[f64]| vec![x[2] + 0.0031, x[0] * x[0] + x[1] * x[1] - 0.25]);
    let out = extract_nodal_curves(&f, &grid(1.0, 0.02, 0.0)).unwrap();
    assert!(!out.is_faulty(), "{:?}", out.faults);
    assert_eq!(out.components.len(), 1);
    let c = &out.components[0];
    assert!(c.closed);
    assert!((c.length() - PI).abs() / PI < 0.02, "{}", c.length());
    let audit = out.winding.unwrap();
    assert!(audit.voxels > 0 && audit.violations == 0);
}

#[test]
fn axis_line_as_codimension_two_curve() {
    let f = ImplicitField::new(3, 2, |x: &[f64]| vec![x[0] - 0.011, x[1] + 0.007]);
    let out = extract(&f, &grid(1.0, 0.1, 0.0)).unwrap();
    assert!(!out.is_faulty());
    assert_eq!(out.components.len(), 1);
    assert!(!out.components[0].closed && out.components[0].touches_boundary);
    assert!((out.components[0].length() - 2.0).abs() < 1e-6);
}

#[test]
fn torus_wave_windings_are_conserved() {
    let spec = KernelSpec::torus(3, 2, 9);
    let field = sample_field(&spec, 3).unwrap();
    let out = extract_nodal_curves(&field, &grid(0.5, 1.0 / 36.0, 0.1)).unwrap();
    let audit = out.winding.unwrap();
    assert!(audit.voxels > 100);
    assert_eq!(audit.violations, 0);
    assert!(out.faults.is_empty(), "{:?}", out.faults);
}
