//! The seven scenarios. Each one schedules its cells through the ledger,
//! reduces them single-threaded in key order, writes its CSV/JSON outputs
//! and returns named pass/fail checks.

use crate::config::{ConfigError, ExperimentConfig, Scenario};
use crate::ledger::CellKey;
use crate::output::{self, f, opt, write_csv, write_json, EstimateRecord};
use crate::runner::{open_ledger, realize, run_cells, spec_for_extent, CellStats, RealizationCell, RunError, RunOptions};
use nodal_core::extract::{extract, GridSpec};
use nodal_core::field::synthetic::ImplicitField;
use nodal_core::field::{rescaled_covariance, sample_field, KernelSpec, Model};
use nodal_core::kacrice::{self, first_moment_density, second_moment_volume, QuadratureSpec, Weight};
use nodal_core::rng::batch_rng;
use nodal_core::stats::{linear_fit, wilson_interval, Summary, Z95};
use nodal_core::topology::{mesh_willmore, sphere_measure, total_curvature, KnotLabel};
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

/// Fenchel, Willmore and Fáry-Milnor tolerance on discrete curvature.
pub const CURVATURE_TOL: f64 = 0.95;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub scenario: Scenario,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub stats: CellStats,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs the configured scenario and writes `outcome.json` next to its outputs.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, RunError> {
    std::fs::create_dir_all(&config.output_dir)?;
    let mut ctx = Ctx { cfg: config, opts, hash: config.short_hash(), files: Vec::new(), stats: CellStats::default() };
    let checks = match config.scenario {
        Scenario::ConvergeNu => converge_nu(&mut ctx)?,
        Scenario::KnotCensus => knot_census(&mut ctx)?,
        Scenario::BettiScaling => betti_scaling(&mut ctx)?,
        Scenario::WillmoreAudit => willmore_audit(&mut ctx)?,
        Scenario::KostlanLocalLimit => kostlan_local_limit(&mut ctx)?,
        Scenario::KacriceVsEmpirical => kacrice_vs_empirical(&mut ctx)?,
        Scenario::Diagnostics => diagnostics(&mut ctx)?,
    };
    let outcome = Outcome { scenario: config.scenario, config_hash: ctx.hash, checks, files: ctx.files, stats: ctx.stats };
    write_json(&config.output_dir.join("outcome.json"), "outcome", &outcome)?;
    for c in &outcome.checks {
        log::info!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(outcome)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    opts: &'a RunOptions,
    hash: String,
    files: Vec<PathBuf>,
    stats: CellStats,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.cfg.output_dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn csv(&mut self, schema: &output::Schema, rows: &[Vec<String>]) -> Result<(), RunError> {
        let p = self.path(&format!("{}.csv", schema.name));
        Ok(write_csv(&p, schema, rows)?)
    }

    fn add(&mut self, s: CellStats) {
        self.stats.computed += s.computed;
        self.stats.reused += s.reused;
    }

    /// Realizations for every `(param, seed)` cell.
    fn realizations(
        &mut self,
        params: &[(String, KernelSpec, f64)],
        detail: bool,
    ) -> Result<Vec<(CellKey, RealizationCell)>, RunError> {
        let ledger = open_ledger(self.cfg, self.opts)?;
        let lookup: BTreeMap<&str, (&KernelSpec, f64)> = params.iter().map(|(p, s, r)| (p.as_str(), (s, *r))).collect();
        let keys: Vec<CellKey> = params
            .iter()
            .flat_map(|(p, _, _)| self.cfg.seeds.seeds().into_iter().map(move |s| CellKey::new(p.clone(), s)))
            .collect();
        let grid = &self.cfg.grid;
        let (cells, stats) = run_cells(&ledger, &keys, self.opts.threads, |k| {
            let (spec, radius) = lookup[k.param.as_str()];
            realize(spec, radius, k.seed, grid, detail)
        })?;
        self.add(stats);
        Ok(cells)
    }

    fn realization_rows(&self, cells: &[(CellKey, RealizationCell)]) -> Vec<Vec<String>> {
        cells
            .iter()
            .map(|(k, c)| {
                vec![
                    self.hash.clone(),
                    k.param.clone(),
                    k.seed.to_string(),
                    c.n.to_string(),
                    c.n_star.to_string(),
                    c.betti_sums.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" "),
                    f(c.measure),
                    c.fault.to_string(),
                ]
            })
            .collect()
    }

    fn fault_check(&self, cells: &[(CellKey, RealizationCell)]) -> Check {
        let faults = cells.iter().filter(|(_, c)| c.fault).count();
        let rate = faults as f64 / cells.len().max(1) as f64;
        Check::new(
            "fault_rate",
            rate <= self.cfg.max_fault_rate,
            format!("{faults}/{} faulty realizations, limit {}", cells.len(), self.cfg.max_fault_rate),
        )
    }
}

fn r_param(r: f64) -> String {
    format!("R={r}")
}

fn volume(n: usize, r: f64) -> f64 {
    (2.0 * r).powi(n as i32)
}

fn stationary_only(spec: &KernelSpec, what: &str) -> Result<(), RunError> {
    if !spec.model.is_stationary() {
        return Err(ConfigError::Invalid(format!("{what} needs a stationary spec, got {}", spec.model.tag())).into());
    }
    Ok(())
}

/// Non-faulty cells of one parameter.
fn good<'a>(cells: &'a [(CellKey, RealizationCell)], param: &str) -> Vec<(&'a CellKey, &'a RealizationCell)> {
    cells.iter().filter(|(k, c)| k.param == param && !c.fault).map(|(k, c)| (k, c)).collect()
}

fn summary(values: &[f64]) -> Option<Summary> {
    (!values.is_empty()).then(|| Summary::of(values))
}

fn radius_params(cfg: &ExperimentConfig) -> Vec<(String, KernelSpec, f64)> {
    cfg.r_list.iter().map(|&r| (r_param(r), cfg.spec.clone(), r)).collect()
}

fn converge_nu(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    stationary_only(&cfg.spec, "converge_nu")?;
    let params = radius_params(cfg);
    let cells = ctx.realizations(&params, false)?;
    let first_seed = cfg.seeds.0.start;
    let mut rows = Vec::new();
    // (R, nu mean, deficit mean, first-seed nu)
    let mut per_r: Vec<(f64, f64, f64, Option<f64>)> = Vec::new();
    for (param, _, r) in &params {
        let vol = volume(cfg.spec.n, *r);
        let g = good(&cells, param);
        let nu: Vec<f64> = g.iter().map(|(_, c)| c.n as f64 / vol).collect();
        let deficit: Vec<f64> = g.iter().map(|(_, c)| (c.n_star - c.n) as f64 / vol).collect();
        let first = g.iter().find(|(k, _)| k.seed == first_seed).map(|(_, c)| c.n as f64 / vol);
        let faults = cells.iter().filter(|(k, c)| &k.param == param && c.fault).count();
        let (s, d) = (summary(&nu), summary(&deficit));
        rows.push(vec![
            ctx.hash.clone(),
            f(*r),
            g.len().to_string(),
            faults.to_string(),
            opt(s.map(|s| s.mean)),
            opt(s.map(|s| s.mean - s.half_width())),
            opt(s.map(|s| s.mean + s.half_width())),
            opt(d.map(|d| d.mean)),
            opt(d.map(|d| d.half_width())),
            opt(first),
        ]);
        per_r.push((*r, s.map_or(f64::NAN, |s| s.mean), d.map_or(f64::NAN, |d| d.mean), first));
    }
    ctx.csv(&output::CONVERGE_NU, &rows)?;
    let rrows = ctx.realization_rows(&cells);
    ctx.csv(&output::REALIZATIONS, &rrows)?;

    let mut checks = vec![ctx.fault_check(&cells)];
    if let [.., (r0, a, _, _), (r1, b, _, _)] = per_r[..] {
        let gap = (b - a).abs() / b;
        checks.push(Check::new("cauchy_gap", gap <= 0.10, format!("|nu({r1}) - nu({r0})| / nu({r1}) = {gap:.4}, limit 0.10")));
        let pts: Vec<(f64, f64)> = per_r.iter().filter(|p| p.2 > 0.0).map(|p| (p.0.ln(), p.2.ln())).collect();
        let (slope, pass) = if pts.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let (s, _) = linear_fit(&x, &y);
            (s, (s + 1.0).abs() <= 0.3)
        } else {
            (f64::NAN, false)
        };
        checks.push(Check::new("deficit_slope", pass, format!("log-log slope {slope:.3}, target -1 +- 0.3")));
    }
    if let Some(&(r, mean, _, first)) = per_r.last() {
        let (pass, detail) = match first {
            Some(v) => {
                let rel = (v - mean).abs() / mean;
                (rel <= 0.20, format!("seed {first_seed} at R={r}: {v:.5} vs mean {mean:.5}, relative {rel:.3}, limit 0.20"))
            }
            None => (false, format!("seed {first_seed} at R={r} is faulty")),
        };
        checks.push(Check::new("single_seed", pass, detail));
    }
    Ok(checks)
}

fn knot_census(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let spec = &cfg.spec;
    if !(spec.n == 3 && spec.m == 2) {
        return Err(ConfigError::Invalid("knot_census needs n = 3, m = 2".into()).into());
    }
    let params: Vec<(String, KernelSpec, f64)> = match spec.model {
        Model::TorusArithmetic => {
            let radius = cfg.r_list.first().copied().unwrap_or(0.5);
            let ls = if cfg.l_list.is_empty() {
                vec![spec.params.lattice_norm_sq.unwrap_or_default()]
            } else {
                cfg.l_list.clone()
            };
            ls.into_iter()
                .map(|l| {
                    let mut s = spec.clone();
                    s.params.lattice_norm_sq = Some(l);
                    (format!("L2={l}"), s, radius)
                })
                .collect()
        }
        Model::BerryMono => {
            if cfg.r_list.is_empty() {
                return Err(ConfigError::Invalid("knot_census on BerryMono needs r_list".into()).into());
            }
            radius_params(cfg)
        }
        other => {
            return Err(ConfigError::Invalid(format!("knot_census needs torus or berry, got {}", other.tag())).into())
        }
    };
    let cells = ctx.realizations(&params, true)?;

    let mut rows = Vec::new();
    let mut checks = vec![ctx.fault_check(&cells)];
    let mut nontrivial = 0;
    let mut max_sum_err: f64 = 0.0;
    for (param, _, _) in &params {
        let g = good(&cells, param);
        let faults = cells.iter().filter(|(k, c)| &k.param == param && c.fault).count();
        let component_faults: usize = g.iter().map(|(_, c)| c.component_faults).sum();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        counts.insert("0_1".into(), 0);
        for (_, c) in &g {
            for (label, k) in &c.labels {
                *counts.entry(label.clone()).or_default() += k;
            }
        }
        let total: usize = counts.values().sum();
        let mut mu_sum = 0.0;
        for (label, &count) in &counts {
            let mu = if total > 0 { count as f64 / total as f64 } else { f64::NAN };
            mu_sum += if total > 0 { mu } else { 0.0 };
            if KnotLabel::parse(label).is_some_and(|l| l.is_nontrivial()) {
                nontrivial += count;
            }
            let (lo, hi) = wilson_interval(count, total);
            rows.push(vec![
                ctx.hash.clone(),
                param.clone(),
                label.clone(),
                count.to_string(),
                f(mu),
                f(lo),
                f(hi),
                total.to_string(),
                faults.to_string(),
                component_faults.to_string(),
            ]);
        }
        if total > 0 {
            max_sum_err = max_sum_err.max((mu_sum - 1.0).abs());
        }
    }
    ctx.csv(&output::KNOT_CENSUS, &rows)?;
    let comp_rows = component_rows(&ctx.hash, &cells);
    ctx.csv(&output::COMPONENTS, &comp_rows)?;
    let rrows = ctx.realization_rows(&cells);
    ctx.csv(&output::REALIZATIONS, &rrows)?;

    checks.push(Check::new("mu_sums_to_one", max_sum_err < 1e-9, format!("largest deviation {max_sum_err:.2e}")));
    let exceptions = fary_milnor_exceptions(&cells);
    checks.push(Check::new(
        "fary_milnor",
        exceptions.is_empty(),
        format!("{nontrivial} nontrivial components, exceptions {exceptions:?}"),
    ));
    Ok(checks)
}

/// Cells and curvatures of nontrivially labeled components below `4 pi * 0.95`.
fn fary_milnor_exceptions(cells: &[(CellKey, RealizationCell)]) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for (k, c) in cells {
        for comp in &c.components {
            if KnotLabel::parse(&comp.knot_label).is_some_and(|l| l.is_nontrivial()) {
                let tc = comp.total_curvature.unwrap_or(f64::NAN);
                if !(tc >= 4.0 * PI * CURVATURE_TOL) {
                    out.push((k.id(), tc));
                }
            }
        }
    }
    out
}

fn component_rows(hash: &str, cells: &[(CellKey, RealizationCell)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, c) in cells {
        for (i, comp) in c.components.iter().enumerate() {
            rows.push(vec![
                hash.to_string(),
                k.param.clone(),
                k.seed.to_string(),
                i.to_string(),
                comp.kind.clone(),
                comp.closed.to_string(),
                comp.vertices.to_string(),
                opt(comp.total_curvature),
                opt(comp.willmore_energy),
                comp.knot_label.clone(),
                comp.determinant.map(|d| d.to_string()).unwrap_or_default(),
                comp.alexander.clone().unwrap_or_default(),
                (comp.fault || c.fault).to_string(),
            ]);
        }
    }
    rows
}

fn betti_scaling(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    stationary_only(&cfg.spec, "betti_scaling")?;
    let params = radius_params(cfg);
    let cells = ctx.realizations(&params, false)?;
    let top = cfg.spec.n - cfg.spec.m;
    let mut rows = Vec::new();
    // per l: per-volume means over R
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); top + 1];
    for (param, _, r) in &params {
        let vol = volume(cfg.spec.n, *r);
        let g = good(&cells, param);
        let faults = cells.iter().filter(|(k, c)| &k.param == param && c.fault).count();
        for (l, s) in series.iter_mut().enumerate() {
            let v: Vec<f64> = g.iter().map(|(_, c)| c.betti_sums.get(l).copied().unwrap_or(0) as f64 / vol).collect();
            let sm = summary(&v);
            rows.push(vec![
                ctx.hash.clone(),
                f(*r),
                l.to_string(),
                opt(sm.map(|s| s.mean)),
                opt(sm.map(|s| s.half_width())),
                g.len().to_string(),
                faults.to_string(),
            ]);
            s.push(sm.map_or(f64::NAN, |s| s.mean));
        }
    }
    ctx.csv(&output::BETTI_SCALING, &rows)?;
    let rrows = ctx.realization_rows(&cells);
    ctx.csv(&output::REALIZATIONS, &rrows)?;

    let mut checks = vec![ctx.fault_check(&cells)];
    // Boundedness only: finite per-volume values that do not blow up between
    // the last two radii.
    for (l, s) in series.iter().enumerate() {
        let finite = s.iter().all(|v| v.is_finite());
        let gap = match s[..] {
            [.., a, b] if b > 0.0 => (b - a).abs() / b,
            _ => 0.0,
        };
        checks.push(Check::new(
            &format!("bounded_beta_{l}"),
            finite && gap <= 1.0,
            format!("per-volume values {s:?}, last gap {gap:.3}"),
        ));
    }
    Ok(checks)
}

/// Total curvature of the extracted unit circle `1 - |x|^2 = 0` in the plane.
pub fn synthetic_circle_curvature() -> Result<f64, RunError> {
    let field = ImplicitField::new(2, 1, |x: &[f64]| vec![1.0 - x[0] * x[0] - x[1] * x[1]]);
    let ex = extract(&field, &GridSpec::new(1.5, 0.05, 0.1)?)?;
    let c = ex.components.iter().find(|c| c.closed).ok_or_else(|| std::io::Error::other("no closed circle"))?;
    Ok(total_curvature(c)?)
}

/// Mesh Willmore energy of the extracted unit sphere `1 - |x|^2 = 0`.
pub fn synthetic_sphere_willmore() -> Result<f64, RunError> {
    let field = ImplicitField::new(3, 1, |x: &[f64]| vec![1.0 - x.iter().map(|v| v * v).sum::<f64>()]);
    let ex = extract(&field, &GridSpec::new(1.5, 0.1, 0.2)?)?;
    let c = ex.components.iter().find(|c| c.closed).ok_or_else(|| std::io::Error::other("no closed sphere"))?;
    Ok(mesh_willmore(c, &field)?.0)
}

fn willmore_audit(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let params = radius_params(cfg);
    let cells = ctx.realizations(&params, true)?;
    let hash = ctx.hash.clone();
    let mut rows = Vec::new();
    let row = |source: &str, seed: String, i: String, kind: &str, tc: Option<f64>, we: Option<f64>, label: &str, reference: &str, ratio: f64| {
        vec![
            hash.clone(),
            source.to_string(),
            seed,
            i,
            kind.to_string(),
            opt(tc),
            opt(we),
            label.to_string(),
            reference.to_string(),
            f(ratio),
            (ratio >= CURVATURE_TOL).to_string(),
        ]
    };
    let (mut fenchel, mut fenchel_bad, mut willmore, mut willmore_bad, mut unmeasured) = (0, 0, 0, 0, 0);
    for (k, c) in &cells {
        for (i, comp) in c.components.iter().enumerate() {
            if !comp.closed {
                continue;
            }
            let label_nontrivial = KnotLabel::parse(&comp.knot_label).is_some_and(|l| l.is_nontrivial());
            if comp.kind == "polyline" {
                let Some(tc) = comp.total_curvature else {
                    unmeasured += 1;
                    continue;
                };
                let ratio = tc / (2.0 * PI);
                fenchel += 1;
                fenchel_bad += (ratio < CURVATURE_TOL) as usize;
                rows.push(row(&k.param, k.seed.to_string(), i.to_string(), &comp.kind, Some(tc), None, &comp.knot_label, "2pi", ratio));
                if label_nontrivial {
                    let ratio = tc / (4.0 * PI);
                    rows.push(row(&k.param, k.seed.to_string(), i.to_string(), &comp.kind, Some(tc), None, &comp.knot_label, "4pi", ratio));
                }
            } else {
                let Some(we) = comp.willmore_energy else {
                    unmeasured += 1;
                    continue;
                };
                let ratio = we / (4.0 * PI);
                willmore += 1;
                willmore_bad += (ratio < CURVATURE_TOL) as usize;
                rows.push(row(&k.param, k.seed.to_string(), i.to_string(), &comp.kind, None, Some(we), &comp.knot_label, "4pi", ratio));
            }
        }
    }
    let circle = synthetic_circle_curvature()?;
    let sphere = synthetic_sphere_willmore()?;
    rows.push(row("synthetic_circle", String::new(), "0".into(), "polyline", Some(circle), None, "", "2pi", circle / (2.0 * PI)));
    rows.push(row("synthetic_sphere", String::new(), "0".into(), "mesh", None, Some(sphere), "", "4pi", sphere / (4.0 * PI)));
    ctx.csv(&output::WILLMORE_AUDIT, &rows)?;
    let comp_rows = component_rows(&ctx.hash, &cells);
    ctx.csv(&output::COMPONENTS, &comp_rows)?;

    let mut checks = vec![ctx.fault_check(&cells)];
    checks.push(Check::new(
        "fenchel",
        fenchel_bad == 0,
        format!("{fenchel_bad}/{fenchel} closed curves below 2pi * {CURVATURE_TOL}"),
    ));
    checks.push(Check::new(
        "willmore",
        willmore_bad == 0,
        format!("{willmore_bad}/{willmore} closed surfaces below 4pi * {CURVATURE_TOL}; {unmeasured} unmeasured"),
    ));
    let exceptions = fary_milnor_exceptions(&cells);
    checks.push(Check::new("fary_milnor", exceptions.is_empty(), format!("exceptions {exceptions:?}")));
    let rc = circle / (2.0 * PI);
    checks.push(Check::new("equality_circle", (rc - 1.0).abs() <= 0.05, format!("total curvature / 2pi = {rc:.4}")));
    let rs = sphere / (4.0 * PI);
    checks.push(Check::new("equality_sphere", (rs - 1.0).abs() <= 0.05, format!("Willmore energy / 4pi = {rs:.4}")));

    // E N(R) <= E int_{Z ∩ C_R} |H/k|^k / |S^k| since every closed inside
    // component carries at least |S^k|.
    if cfg.spec.model.is_stationary() {
        let k = cfg.spec.n - cfg.spec.m;
        let w = first_moment_density(&cfg.spec, Weight::Willmore, cfg.mc_samples, 0)?;
        for (param, _, r) in &params {
            let g = good(&cells, param);
            let counts: Vec<f64> = g.iter().map(|(_, c)| c.n as f64).collect();
            let Some(s) = summary(&counts) else { continue };
            let bound = w.estimate.value * volume(cfg.spec.n, *r) / sphere_measure(k);
            checks.push(Check::new(
                &format!("component_bound_{param}"),
                s.mean <= bound + 3.0 * s.standard_error(),
                format!("mean N {:.3} vs Willmore bound {bound:.3} (cutoff {:?})", s.mean, w.rungs.last().map(|r| r.0)),
            ));
        }
    }
    Ok(checks)
}

fn kostlan_local_limit(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    if cfg.spec.model != Model::Kostlan {
        return Err(ConfigError::Invalid("kostlan_local_limit needs a kostlan spec".into()).into());
    }
    let n = cfg.spec.n;
    let step = if n <= 2 { 0.25 } else { 0.5 };
    let ticks: Vec<f64> = (0..=(4.0 / step) as usize).map(|i| -2.0 + i as f64 * step).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..n {
        points = points.into_iter().flat_map(|p| ticks.iter().map(move |t| [p.clone(), vec![*t]].concat())).collect();
    }
    points.retain(|p| p.iter().map(|v| v * v).sum::<f64>() <= 4.0 + 1e-12);
    let mut pole = vec![0.0; n + 1];
    pole[n] = 1.0;

    let mut rows = Vec::new();
    let mut sups = Vec::new();
    let mut diag: f64 = 0.0;
    for &d in &cfg.d_list {
        let spec = KernelSpec::kostlan(n, cfg.spec.m, d);
        let scale = (d as f64).sqrt();
        let mut sup: f64 = 0.0;
        for (i, u) in points.iter().enumerate() {
            for v in &points[i..] {
                let k = rescaled_covariance(&spec, &pole, u, v, scale)?.matrix[(0, 0)];
                let t2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                let diff = (k - (-t2 / 2.0).exp()).abs();
                sup = sup.max(diff);
                if std::ptr::eq(u, v) {
                    diag = diag.max(diff);
                }
            }
        }
        rows.push(vec![ctx.hash.clone(), d.to_string(), f(sup), points.len().to_string()]);
        sups.push((d, sup));
    }
    ctx.csv(&output::KOSTLAN_LOCAL_LIMIT, &rows)?;

    let mut checks = vec![Check::new(
        "decreasing_in_d",
        sups.windows(2).all(|w| w[1].1 < w[0].1),
        format!("{sups:?}"),
    )];
    if let Some(&(_, s)) = sups.iter().find(|(d, _)| *d == 200) {
        checks.push(Check::new("d200_within_0.02", s <= 0.02, format!("sup difference {s:.5}")));
    }
    checks.push(Check::new("diagonal_zero", diag <= 1e-12, format!("largest diagonal difference {diag:.2e}")));
    Ok(checks)
}

fn kacrice_vs_empirical(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    stationary_only(&cfg.spec, "kacrice_vs_empirical")?;
    let params = radius_params(cfg);
    let cells = ctx.realizations(&params, false)?;
    let spec_hash = cfg.spec.hash();
    let first = first_moment_density(&cfg.spec, Weight::Volume, cfg.mc_samples, 0)?;
    let kr = first.estimate.value;
    let mut estimates =
        vec![EstimateRecord::new("first_moment_density", &spec_hash, serde_json::json!({"weight": "volume"}), &first.estimate)];
    let mut rows = Vec::new();
    let mut checks = vec![ctx.fault_check(&cells)];
    for (param, _, r) in &params {
        let vol = volume(cfg.spec.n, *r);
        let g = good(&cells, param);
        let faults = cells.iter().filter(|(k, c)| &k.param == param && c.fault).count();
        let dens: Vec<f64> = g.iter().map(|(_, c)| c.measure / vol).collect();
        let Some(s) = summary(&dens) else { continue };
        let gap = (s.mean - kr).abs() / kr;
        rows.push(vec![
            ctx.hash.clone(),
            "density".into(),
            f(*r),
            g.len().to_string(),
            faults.to_string(),
            f(s.mean),
            f(s.half_width()),
            f(kr),
            f(first.estimate.half_width),
            f(gap),
        ]);
        checks.push(Check::new(
            &format!("density_{param}"),
            gap <= 0.05,
            format!("empirical {:.5} +- {:.5} vs Kac-Rice {kr:.5}, gap {gap:.4}, limit 0.05", s.mean, s.half_width()),
        ));
        if cfg.second_moment {
            let sq: Vec<f64> = g.iter().map(|(_, c)| c.measure * c.measure).collect();
            let e = Summary::of(&sq);
            let sm = second_moment_volume(&cfg.spec, *r, &QuadratureSpec::default())?;
            let v = sm.estimate.value;
            let gap2 = (e.mean - v).abs() / v;
            rows.push(vec![
                ctx.hash.clone(),
                "second_moment".into(),
                f(*r),
                g.len().to_string(),
                faults.to_string(),
                f(e.mean),
                f(e.half_width()),
                f(v),
                f(sm.estimate.half_width),
                f(gap2),
            ]);
            checks.push(Check::new(
                &format!("second_moment_{param}"),
                gap2 <= 0.05,
                format!("empirical {:.4} +- {:.4} vs Kac-Rice {v:.4}, gap {gap2:.4}, limit 0.05", e.mean, e.half_width()),
            ));
            estimates.push(EstimateRecord::new(
                "second_moment_volume",
                &spec_hash,
                serde_json::json!({ "radius": r, "quadrature": QuadratureSpec::default() }),
                &sm.estimate,
            ));
        }
    }
    ctx.csv(&output::KACRICE_VS_EMPIRICAL, &rows)?;
    let rrows = ctx.realization_rows(&cells);
    ctx.csv(&output::REALIZATIONS, &rrows)?;
    let p = ctx.path("estimates.json");
    write_json(&p, "estimates", &serde_json::json!({ "estimates": estimates }))?;
    Ok(checks)
}

#[derive(Serialize)]
struct SchurSummary {
    pairs: usize,
    delta: f64,
    failures: usize,
    smallest_margin: f64,
}

#[derive(Serialize)]
struct SphereSweep {
    n: usize,
    m: usize,
    alphas: Vec<f64>,
    estimates: Vec<EstimateRecord>,
    stability_alpha: f64,
    run_values: Vec<f64>,
    run_sd: f64,
    pooled_se: f64,
}

fn diagnostics(ctx: &mut Ctx) -> Result<Vec<Check>, RunError> {
    let cfg = ctx.cfg;
    let spec = &cfg.spec;
    stationary_only(spec, "diagnostics")?;
    let spec_hash = spec.hash();
    let n = spec.n;
    let mut checks = Vec::new();
    let mut bundle = serde_json::Map::new();

    // two-point Schur bound
    let mut rng = batch_rng(cfg.seeds.0.start, "diagnostics/schur", 0);
    let (mut failures, mut margin) = (0, f64::INFINITY);
    let pairs = 100;
    for _ in 0..pairs {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let r = cfg.delta * rng.gen_range(1e-3..=1.0f64);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + r * b / norm).collect();
        let c = kacrice::two_point_schur_check(spec, &x, &y)?;
        failures += (!c.pass) as usize;
        margin = margin.min(c.value - c.bound);
    }
    checks.push(Check::new("schur", failures == 0, format!("{failures}/{pairs} pairs fail, smallest margin {margin:.3e}")));
    bundle.insert(
        "schur".into(),
        serde_json::to_value(SchurSummary { pairs, delta: cfg.delta, failures, smallest_margin: margin }).map_err(std::io::Error::other)?,
    );

    // nondegeneracy constants
    let k1 = kacrice::k1(spec)?;
    let k2 = kacrice::measure_k2(spec, cfg.delta.max(1.0), 200)?;
    // only plane-wave models have a finite-wave constant; the extent is nominal
    let finite_k1 = match sample_field(&spec_for_extent(spec, 1.0), cfg.seeds.0.start)?.plane_waves() {
        Some(w) => Some(kacrice::finite_wave_k1(w)),
        None => None,
    };
    bundle.insert("k1".into(), serde_json::json!({ "continuum": k1, "finite_waves": finite_k1 }));
    bundle.insert("k2".into(), serde_json::json!(k2));

    // ergodicity decay
    let radii = if cfg.r_list.is_empty() { vec![2.0, 4.0, 8.0, 16.0] } else { cfg.r_list.clone() };
    let decay = kacrice::ergodicity_decay(spec, &radii)?;
    let decreasing = decay.windows(2).all(|w| w[1].1 < w[0].1);
    checks.push(Check::new("ergodicity_decreasing", decreasing, format!("{decay:?}")));
    let (x, y): (Vec<f64>, Vec<f64>) = decay.iter().map(|(r, v)| (r.ln(), v.ln())).unzip();
    let (slope, _) = linear_fit(&x, &y);
    if spec.model == Model::BargmannFock {
        checks.push(Check::new(
            "ergodicity_slope",
            (slope + n as f64).abs() <= 0.2,
            format!("log-log slope {slope:.3}, target {} +- 0.2", -(n as f64)),
        ));
    }
    bundle.insert("ergodicity".into(), serde_json::json!({ "decay": decay, "slope": slope }));

    // Bulinskaya probe
    let h = cfg.grid.h.unwrap_or(0.05);
    let seeds = cfg.seeds.seeds();
    let probe = kacrice::bulinskaya_probe(spec, cfg.probe_radius, &cfg.taus, &seeds, h)?;
    let monotone = probe.probabilities.windows(2).all(|w| w[0] <= w[1]);
    checks.push(Check::new("bulinskaya_monotone", monotone, format!("{:?} at taus {:?}", probe.probabilities, probe.taus)));
    if let Some(i) = probe.taus.iter().position(|t| (*t - 0.01).abs() < 1e-12) {
        let p = probe.probabilities[i];
        checks.push(Check::new("bulinskaya_small_tau", p <= 0.05, format!("P(min < 0.01) = {p:.4} over {} seeds", seeds.len())));
    }
    bundle.insert(
        "bulinskaya".into(),
        serde_json::json!({ "radius": cfg.probe_radius, "spacing": h, "taus": probe.taus, "probabilities": probe.probabilities }),
    );

    // sphere integral sweep; with one component the normalized Gram
    // determinant is identically 1, so codimension-one specs sweep (3, 2)
    let (n, m) = if spec.m >= 2 { (n, spec.m) } else { (3, 2) };
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(|a, b| b.total_cmp(a));
    let mut estimates = Vec::new();
    let mut values = Vec::new();
    for &a in &alphas {
        let e = kacrice::sphere_det_integral(n, m, a, cfg.mc_samples, 0)?;
        values.push(e.value);
        estimates.push(EstimateRecord::new("sphere_det_integral", &spec_hash, serde_json::json!({ "n": n, "m": m, "alpha": a }), &e));
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    checks.push(Check::new("sphere_monotone", increasing, format!("alphas {alphas:?} -> {values:?}")));
    if let (Some(lo), Some(hi)) = (values.first(), values.last()) {
        let ratio = hi / lo;
        checks.push(Check::new("sphere_endpoint_ratio", ratio >= 2.0, format!("ratio {ratio:.3}, limit 2")));
    }
    let stability_alpha = -0.5;
    let runs: Vec<_> = (1..=cfg.stability_runs as u64)
        .map(|s| kacrice::sphere_det_integral(n, m, stability_alpha, cfg.mc_samples, s))
        .collect::<Result<_, _>>()?;
    let run_values: Vec<f64> = runs.iter().map(|e| e.value).collect();
    let run_sd = Summary::of(&run_values).sd;
    let pooled_se = (runs.iter().map(|e| (e.half_width / Z95).powi(2)).sum::<f64>() / runs.len() as f64).sqrt();
    checks.push(Check::new(
        "sphere_stable",
        run_sd <= 3.0 * pooled_se,
        format!("SD of {} run values {run_sd:.4} vs pooled SE {pooled_se:.4}", runs.len()),
    ));
    bundle.insert(
        "sphere_integral".into(),
        serde_json::to_value(SphereSweep { n, m, alphas, estimates, stability_alpha, run_values, run_sd, pooled_se })
            .map_err(std::io::Error::other)?,
    );

    bundle.insert("checks".into(), serde_json::to_value(&checks).map_err(std::io::Error::other)?);
    let p = ctx.path("diagnostics.json");
    write_json(&p, "diagnostics", &serde_json::Value::Object(bundle))?;
    Ok(checks)
}
