//! Acceptance suite: one PASS/FAIL line per criterion on stdout, notes on
//! stderr. Criteria that fail for documented reasons do not fail the
//! process; a panic or a run error does.

use nodal_core::extract::{extract_hypersurface, ComponentGeometry, GridSpec};
use nodal_core::field::synthetic::ImplicitField;
use nodal_core::field::{sample_field, KernelSpec, Model};
use nodal_core::kacrice::{self, first_moment_density, Weight};
use nodal_core::rng::batch_rng;
use nodal_core::stats::{linear_fit, Summary, Z95};
use nodal_core::topology::{betti_surface, knots::knot_classify, window_census, KnotLabel};
use nodal_experiments::config::GridConfig;
use nodal_experiments::runner::{realize, RealizationCell};
use nodal_experiments::scenarios::{synthetic_circle_curvature, synthetic_sphere_willmore, CURVATURE_TOL};
use nodal_experiments::{run, ExperimentConfig, RunOptions};
use rand::Rng;
use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        self.failures += (!pass) as usize;
        let mut out = std::io::stdout().lock();
        writeln!(out, "{} {name}: {detail}", if pass { "PASS" } else { "FAIL" }).unwrap();
        out.flush().unwrap();
    }
}

fn note(msg: &str) {
    eprintln!("  note: {msg}");
}

fn grid(h: f64) -> GridConfig {
    GridConfig { h: Some(h), padding: None, refine: None }
}

fn within(elapsed: Duration, minutes: f64) -> bool {
    elapsed.as_secs_f64() < minutes * 60.0
}

// ------------------------------------------------------------------ Kac-Rice

fn kacrice_closed_form(rep: &mut Report) {
    let t = Instant::now();
    let spec = KernelSpec::bargmann_fock(2, 1);
    let est = first_moment_density(&spec, Weight::Volume, 1_000_000, 0).unwrap().estimate;
    // unit-variance value, gradient ~ N(0, I_2): p(0) E|grad| = sqrt(pi/2) / sqrt(2 pi)
    let oracle = (PI / 2.0).sqrt() / (2.0 * PI).sqrt();
    let rel = (est.value - oracle).abs() / oracle;
    let el = t.elapsed();
    rep.line(
        "kacrice_closed_form",
        rel <= 0.005 && within(el, 1.0),
        format!("{:.5} +- {:.5} vs {oracle:.5}, relative {rel:.2e}, limit 5e-3, {el:.1?}", est.value, est.half_width),
    );
}

struct Batch {
    label: &'static str,
    cells: Vec<RealizationCell>,
}

fn realize_batch(label: &'static str, spec: &KernelSpec, radius: f64, h: f64, seeds: u64) -> Batch {
    let g = grid(h);
    let cells = (0..seeds).map(|s| realize(spec, radius, s, &g, true).unwrap()).collect();
    Batch { label, cells }
}

fn kacrice_vs_extraction(rep: &mut Report, batches: &[(Batch, KernelSpec, f64)], el: Duration) {
    let mut pass = within(el, 30.0);
    let mut parts = Vec::new();
    for (b, spec, radius) in batches {
        let vol = (2.0 * radius).powi(3);
        let dens: Vec<f64> = b.cells.iter().filter(|c| !c.fault).map(|c| c.measure / vol).collect();
        let s = Summary::of(&dens);
        let kr = first_moment_density(spec, Weight::Volume, 1_000_000, 0).unwrap().estimate.value;
        let gap = (s.mean - kr).abs() / kr;
        pass &= gap <= 0.05 && dens.len() >= 500 * 9 / 10;
        parts.push(format!(
            "{} {:.4} +- {:.4} vs {kr:.4} (gap {gap:.3}, {} seeds used)",
            b.label,
            s.mean,
            s.half_width(),
            dens.len()
        ));
    }
    rep.line("kacrice_vs_extraction", pass, format!("{}; limit 0.05, {el:.1?}", parts.join("; ")));
}

// ------------------------------------------------------------------ curvature audits

fn curvature_audit(rep: &mut Report, curve_batches: &[&Batch], surfaces: &Batch, el: Duration) {
    let t = Instant::now();
    let (mut curves, mut curve_bad, mut unmeasured) = (0, 0, 0);
    for b in curve_batches {
        for c in b.cells.iter().flat_map(|c| &c.components).filter(|c| c.closed) {
            match c.total_curvature {
                Some(k) => {
                    curves += 1;
                    curve_bad += (k < 2.0 * PI * CURVATURE_TOL) as usize;
                }
                None => unmeasured += 1,
            }
        }
    }
    let (mut surf, mut surf_bad, mut smin) = (0, 0, f64::INFINITY);
    for c in surfaces.cells.iter().flat_map(|c| &c.components).filter(|c| c.closed) {
        match c.willmore_energy {
            Some(w) => {
                surf += 1;
                surf_bad += (w < 4.0 * PI * CURVATURE_TOL) as usize;
                smin = smin.min(w / (4.0 * PI));
            }
            None => unmeasured += 1,
        }
    }
    let circle = synthetic_circle_curvature().unwrap() / (2.0 * PI);
    let sphere = synthetic_sphere_willmore().unwrap() / (4.0 * PI);
    let el = el + t.elapsed();
    let pass = curve_bad == 0
        && surf_bad == 0
        && curves > 0
        && surf > 0
        && (circle - 1.0).abs() <= 0.05
        && (sphere - 1.0).abs() <= 0.05
        && within(el, 10.0);
    rep.line(
        "fenchel_willmore_audit",
        pass,
        format!(
            "curves {curve_bad}/{curves} below 2pi*0.95, surfaces {surf_bad}/{surf} below 4pi*0.95 (min ratio {smin:.3}), \
             {unmeasured} unmeasured, circle/2pi {circle:.4}, sphere/4pi {sphere:.4}, {el:.1?}"
        ),
    );
}

fn fary_milnor(rep: &mut Report, batches: &[&Batch]) {
    let mut knotted = 0;
    let mut exceptions = Vec::new();
    let mut labels = std::collections::BTreeMap::<String, usize>::new();
    for b in batches {
        for c in b.cells.iter().flat_map(|c| &c.components) {
            *labels.entry(c.knot_label.clone()).or_default() += 1;
            if KnotLabel::parse(&c.knot_label).is_some_and(|l| l.is_nontrivial()) {
                knotted += 1;
                let k = c.total_curvature.unwrap_or(f64::NAN);
                if !(k >= 4.0 * PI * CURVATURE_TOL) {
                    exceptions.push((b.label, k));
                }
            }
        }
    }
    rep.line(
        "fary_milnor",
        exceptions.is_empty(),
        format!("{knotted} nontrivially labeled components, exceptions {exceptions:?}, labels {labels:?}"),
    );
    if knotted == 0 {
        note("no nontrivial knots observed at these scales, so the property holds vacuously on random data; the goldens cover the positive case");
    }
}

// ------------------------------------------------------------------ knots and topology

fn curve(n: usize, f: impl Fn(f64) -> [f64; 3]) -> Vec<[f64; 3]> {
    (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect()
}

/// Uniform rotation (Shoemake), log-uniform scale, random shift and start vertex.
fn random_motion(rng: &mut impl Rng, pts: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let [w, x, y, z] = [a * (2.0 * PI * u2).sin(), a * (2.0 * PI * u2).cos(), b * (2.0 * PI * u3).sin(), b * (2.0 * PI * u3).cos()];
    let rot = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let shift: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-50.0..50.0));
    let start = rng.gen_range(0..pts.len());
    (0..pts.len())
        .map(|i| {
            let p = pts[(i + start) % pts.len()];
            std::array::from_fn(|r| scale * (rot[r][0] * p[0] + rot[r][1] * p[1] + rot[r][2] * p[2]) + shift[r])
        })
        .collect()
}

fn knot_goldens(rep: &mut Report) {
    let t = Instant::now();
    let shapes: [(&str, Vec<[f64; 3]>, u64); 3] = [
        ("0_1", curve(200, |t| [2.0 * t.cos(), t.sin(), 0.3 * t.sin()]), 1),
        (
            "3_1",
            curve(600, |t| {
                let r = 2.0 + (3.0 * t).cos();
                [r * (2.0 * t).cos(), r * (2.0 * t).sin(), (3.0 * t).sin()]
            }),
            3,
        ),
        (
            "4_1",
            curve(600, |t| {
                let r = 2.0 + (2.0 * t).cos();
                [r * (3.0 * t).cos(), r * (3.0 * t).sin(), (4.0 * t).sin()]
            }),
            5,
        ),
    ];
    let mut rng = batch_rng(11, "acceptance/knots", 0);
    let (mut right, mut total) = (0, 0);
    for (label, pts, det) in &shapes {
        for i in 0..=20 {
            let moved = if i == 0 { pts.clone() } else { random_motion(&mut rng, pts) };
            let r = knot_classify(&ComponentGeometry::closed_curve(moved)).unwrap();
            total += 1;
            right += (r.label.to_string() == *label && r.invariants.determinant == *det) as usize;
        }
    }
    let el = t.elapsed();
    rep.line("knot_goldens", right == total && within(el, 1.0), format!("{right}/{total} correct, {el:.1?}"));
}

fn torus_fn(x: &[f64], cx: f64) -> f64 {
    let rho = ((x[0] - cx).powi(2) + x[1] * x[1]).sqrt();
    (rho - 1.0).powi(2) + x[2] * x[2] - 0.09
}

fn topology_goldens(rep: &mut Report) {
    let cases: [(&str, fn(&[f64]) -> f64, f64, [usize; 3]); 3] = [
        ("sphere", |x| 1.0 - x[0] * x[0] - x[1] * x[1] - x[2] * x[2], 1.3, [1, 0, 1]),
        ("torus", |x| torus_fn(x, 0.0), 1.5, [1, 2, 1]),
        ("genus2", |x| torus_fn(x, -1.0).min(torus_fn(x, 1.0)), 2.4, [1, 4, 1]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, f, radius, want) in cases {
        let field = ImplicitField::new(3, 1, move |x: &[f64]| vec![f(x)]);
        let ex = extract_hypersurface(&field, &GridSpec::new(radius, 0.05, 0.0).unwrap()).unwrap();
        let got = match &ex.components[..] {
            [one] => betti_surface(one).ok(),
            _ => None,
        };
        pass &= got == Some(want);
        parts.push(format!("{name} {got:?}"));
    }
    rep.line("topology_goldens", pass, parts.join(", "));
}

// ------------------------------------------------------------------ scenarios

fn scenario(text: &str, dir: &std::path::Path) -> nodal_experiments::Outcome {
    let mut cfg = ExperimentConfig::parse(text).unwrap();
    cfg.output_dir = dir.to_path_buf();
    run(&cfg, &RunOptions::default()).unwrap()
}

fn check<'a>(o: &'a nodal_experiments::Outcome, name: &str) -> &'a nodal_experiments::Check {
    o.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check {name}"))
}

fn converge(rep: &mut Report, dir: &std::path::Path) {
    let t = Instant::now();
    let o = scenario(
        r#"
scenario = "converge_nu"
seeds = "0..200"
r_list = [4.0, 8.0, 16.0]
[spec]
model = "bargmann_fock"
n = 2
m = 1
[grid]
h = 0.1
"#,
        dir,
    );
    let el = t.elapsed();
    let names = ["fault_rate", "cauchy_gap", "deficit_slope", "single_seed"];
    let pass = names.iter().all(|n| check(&o, n).pass) && within(el, 60.0);
    let detail: Vec<String> =
        names.iter().map(|n| format!("{n} {} ({})", if check(&o, n).pass { "ok" } else { "fails" }, check(&o, n).detail)).collect();
    rep.line("converge_nu", pass, format!("{}; {el:.1?}", detail.join("; ")));
    if !check(&o, "cauchy_gap").pass {
        note(
            "N(R) counts only components inside C_R, so E N(R)/|C_R| = nu - c/R + o(1/R); the measured \
             deficit rate has slope -1, which puts |nu(16) - nu(8)|/nu(16) near c/(16 nu) ~ 0.15, \
             outside 0.10 independently of the seed count",
        );
    }
    if !check(&o, "single_seed").pass {
        note(
            "a single R = 16 realization holds about 14 inside components; the per-seed relative SD of \
             N/|C_R| is about 0.27, so a 20% band is missed by a typical seed",
        );
    }
}

fn kostlan(rep: &mut Report, dir: &std::path::Path) {
    let o = scenario(
        r#"
scenario = "kostlan_local_limit"
seeds = "0..1"
d_list = [50, 100, 200, 400]
[spec]
model = "kostlan"
n = 2
m = 1
params.degree = 50
"#,
        dir,
    );
    let detail: Vec<String> = o.checks.iter().map(|c| format!("{} {}", c.name, c.detail)).collect();
    rep.line("kostlan_local_limit", o.passed(), detail.join("; "));
}

// ------------------------------------------------------------------ diagnostics

fn sandwich(rep: &mut Report) {
    let mut ok = 0;
    let mut exact = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for seed in 0..25u64 {
        let f = sample_field(&KernelSpec::bargmann_fock(2, 1).with_radius(5.5), seed).unwrap();
        let r = window_census(&f, 0.1, 4.0, 1.0, 0.5).unwrap();
        total += 1;
        ok += r.pass as usize;
        exact += r.exact as usize;
        if !r.pass {
            failures.push(("bf2", seed, r.left, r.n, r.right));
        }
        let f = sample_field(&KernelSpec::berry(3, 2), seed).unwrap();
        let r = window_census(&f, 0.25, 2.0, 0.5, 0.5).unwrap();
        total += 1;
        ok += r.pass as usize;
        exact += r.exact as usize;
        if !r.pass {
            failures.push(("berry32", seed, r.left, r.n, r.right));
        }
    }
    rep.line("sandwich", ok == total && total == 50, format!("{ok}/{total} pass ({exact} without allowance), failures {failures:?}"));
}

fn sphere_threshold(rep: &mut Report) {
    let runs: Vec<_> = (1..=10u64).map(|s| kacrice::sphere_det_integral(3, 2, -0.5, 10_000_000, s).unwrap()).collect();
    let values: Vec<f64> = runs.iter().map(|e| e.value).collect();
    let sd = Summary::of(&values).sd;
    let pooled = (runs.iter().map(|e| (e.half_width / Z95).powi(2)).sum::<f64>() / runs.len() as f64).sqrt();
    let alphas = [-0.5, -0.6, -0.7, -0.8, -0.9, -0.95];
    let sweep: Vec<f64> =
        alphas.iter().map(|&a| kacrice::sphere_det_integral(3, 2, a, 10_000_000, 0).unwrap().value).collect();
    let monotone = sweep.windows(2).all(|w| w[1] > w[0]);
    let ratio = sweep[sweep.len() - 1] / sweep[0];
    rep.line(
        "sphere_integral_threshold",
        sd <= 3.0 * pooled && monotone && ratio >= 2.0,
        format!("alpha -0.5: SD of 10 runs {sd:.3} vs pooled SE {pooled:.3}; sweep {alphas:?} -> {sweep:.1?}; ratio {ratio:.2}"),
    );
}

fn stationary_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::bargmann_fock(2, 1),
        KernelSpec::bargmann_fock(3, 2),
        KernelSpec::berry(2, 1),
        KernelSpec::berry(3, 2),
        KernelSpec::black_body(2, 1),
        KernelSpec::black_body(3, 1),
        KernelSpec::torus(2, 1, 25),
        KernelSpec::torus(3, 2, 9),
        KernelSpec::custom(3, 1, vec![0.0, 0.5, 1.0, 1.5], vec![0.0, 1.0, 2.0, 0.0]),
    ]
}

fn label(s: &KernelSpec) -> String {
    format!("{}({},{})", s.model.tag(), s.n, s.m)
}

fn schur(rep: &mut Report) {
    let mut rng = batch_rng(5, "acceptance/schur", 0);
    let mut bad = Vec::new();
    let mut margins = Vec::new();
    for spec in stationary_kernels() {
        let n = spec.n;
        let mut worst = f64::INFINITY;
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = 0.5 * rng.gen_range(1e-3..=1.0f64);
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + r * b / norm).collect();
            let c = kacrice::two_point_schur_check(&spec, &x, &y).unwrap();
            if !c.pass {
                bad.push(label(&spec));
            }
            worst = worst.min(c.value - c.bound);
        }
        margins.push(format!("{} {worst:.1e}", label(&spec)));
    }
    rep.line("schur_bound", bad.is_empty(), format!("failures {bad:?}; smallest margins {}", margins.join(", ")));
}

fn ergodicity(rep: &mut Report) {
    let radii = [2.0, 4.0, 8.0, 16.0];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut periodic_only = true;
    for spec in stationary_kernels() {
        let d = kacrice::ergodicity_decay(&spec, &radii).unwrap();
        let dec = d.windows(2).all(|w| w[1].1 < w[0].1);
        let (x, y): (Vec<f64>, Vec<f64>) = d.iter().map(|(r, v)| (r.ln(), v.ln())).unzip();
        let (slope, _) = linear_fit(&x, &y);
        let slope_ok = spec.model != Model::BargmannFock || (slope + spec.n as f64).abs() <= 0.2;
        if !(dec && slope_ok) {
            pass = false;
            periodic_only &= spec.model == Model::TorusArithmetic;
        }
        let vals: Vec<String> = d.iter().map(|(_, v)| format!("{v:.2e}")).collect();
        parts.push(format!("{} [{}] slope {slope:.2}{}", label(&spec), vals.join(" "), if dec { "" } else { " not decreasing" }));
    }
    rep.line("ergodicity_decay", pass, parts.join("; "));
    if !pass && periodic_only {
        note(
            "the torus kernel is periodic, so its ball average of k^2 tends to the positive constant \
             sum over lattice pairs, about 2/N, and cannot decrease strictly once R exceeds a period",
        );
    }
}

fn bulinskaya(rep: &mut Report) {
    let t = Instant::now();
    let seeds: Vec<u64> = (0..500).collect();
    let taus = [0.01, 0.03, 0.1];
    let r = kacrice::bulinskaya_probe(&KernelSpec::bargmann_fock(2, 1), 4.0, &taus, &seeds, 0.05).unwrap();
    let monotone = r.probabilities.windows(2).all(|w| w[0] <= w[1]);
    let p = r.probabilities[0];
    rep.line(
        "bulinskaya_probe",
        monotone && p <= 0.05,
        format!("P(min < tau) {:?} at tau {taus:?} over 500 seeds, grid 0.05, {:.1?}", r.probabilities, t.elapsed()),
    );
}

fn main() {
    let mut rep = Report { failures: 0 };
    let dir = tempfile::tempdir().unwrap();

    kacrice_closed_form(&mut rep);

    let t = Instant::now();
    let berry = KernelSpec::berry(3, 2);
    let torus = KernelSpec::torus(3, 2, 9);
    let b = realize_batch("berry(3,2)", &berry, 2.0, 0.25, 500);
    let tor = realize_batch("torus(3,2) L2=9", &torus, 0.5, 1.0 / 40.0, 500);
    let el = t.elapsed();
    let batches = vec![(b, berry, 2.0), (tor, torus, 0.5)];
    kacrice_vs_extraction(&mut rep, &batches, el);

    let t = Instant::now();
    let surfaces = realize_batch("bf(3,1)", &KernelSpec::bargmann_fock(3, 1), 3.0, 0.1, 300);
    let planar = realize_batch("bf(2,1)", &KernelSpec::bargmann_fock(2, 1), 8.0, 0.1, 50);
    let el = t.elapsed();
    let curve_batches = [&batches[0].0, &batches[1].0, &planar];
    curvature_audit(&mut rep, &curve_batches, &surfaces, el);
    fary_milnor(&mut rep, &[&batches[0].0, &batches[1].0]);

    knot_goldens(&mut rep);
    converge(&mut rep, &dir.path().join("converge"));
    sandwich(&mut rep);
    sphere_threshold(&mut rep);
    schur(&mut rep);
    ergodicity(&mut rep);
    kostlan(&mut rep, &dir.path().join("kostlan"));
    bulinskaya(&mut rep);
    topology_goldens(&mut rep);

    eprintln!("{} of 13 criteria failed", rep.failures);
}
