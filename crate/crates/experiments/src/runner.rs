//! Cell scheduling and the per-realization census shared by the scenarios.

use crate::config::{ConfigError, ExperimentConfig, GridConfig};
use crate::ledger::{CellKey, LedgerError, RunLedger};
use nodal_core::extract::{classify_against_cube, extract, write_geometry, GeometryKind, GridSpec};
use nodal_core::field::sidecar::write_sidecar;
use nodal_core::field::{sample_field, KernelSpec, Model};
use nodal_core::topology::{census, ComponentRecord};
use nodal_core::{ExtractError, FieldError, KacRiceError, TopologyError};
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    KacRice(#[from] KacRiceError),
}

impl RunError {
    /// 2 for configuration and ledger problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Ledger(_) => 2,
            RunError::Field(FieldError::InvalidSpec(_) | FieldError::Truncation(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub resume: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CellStats {
    pub computed: usize,
    pub reused: usize,
}

/// Runs `f` for every key not already in the ledger and returns all results
/// in key order. Results are recorded as soon as each cell finishes.
pub fn run_cells<T, F>(
    ledger: &Mutex<RunLedger>,
    keys: &[CellKey],
    threads: Option<usize>,
    f: F,
) -> Result<(Vec<(CellKey, T)>, CellStats), RunError>
where
    T: Serialize + DeserializeOwned + Send,
    F: Fn(&CellKey) -> Result<T, RunError> + Sync,
{
    let mut done: BTreeMap<CellKey, T> = BTreeMap::new();
    let mut pending = Vec::new();
    {
        let l = ledger.lock().expect("ledger lock");
        for k in keys {
            match l.load::<T>(k)? {
                Some(v) => {
                    done.insert(k.clone(), v);
                }
                None => pending.push(k.clone()),
            }
        }
    }
    let stats = CellStats { computed: pending.len(), reused: done.len() };
    let work = || -> Result<Vec<(CellKey, T)>, RunError> {
        pending
            .par_iter()
            .map(|k| {
                let v = f(k)?;
                ledger.lock().expect("ledger lock").record(k, &v)?;
                Ok((k.clone(), v))
            })
            .collect()
    };
    let fresh = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| RunError::Io(std::io::Error::other(e)))?
            .install(work)?,
        None => work()?,
    };
    done.extend(fresh);
    let mut out: Vec<(CellKey, T)> = done.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((out, stats))
}

/// Per-component row of a census.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub kind: String,
    pub closed: bool,
    pub vertices: usize,
    pub total_curvature: Option<f64>,
    pub willmore_energy: Option<f64>,
    pub knot_label: String,
    pub determinant: Option<u64>,
    pub alexander: Option<String>,
    pub fault: bool,
}

/// Census of one realization in `C_R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationCell {
    pub n: usize,
    pub n_star: usize,
    pub betti_sums: Vec<usize>,
    pub labels: BTreeMap<String, usize>,
    /// Zero-set length or area inside `C_R`.
    pub measure: f64,
    /// Extraction was under-resolved or inconsistent.
    pub fault: bool,
    pub component_faults: usize,
    /// Inside components, when requested.
    pub components: Vec<ComponentRow>,
}

/// Grid for a census in `C_R` from the config defaults.
pub fn grid_for(spec: &KernelSpec, radius: f64, grid: &GridConfig) -> Result<GridSpec, RunError> {
    let h = match grid.h {
        Some(h) => h,
        None => spec.wavelength()? / 12.0,
    };
    let mut g = GridSpec::new(radius, h, grid.padding.unwrap_or(2.0 * h))?;
    g.refine = grid.refine.unwrap_or(true);
    Ok(g)
}

/// Bargmann-Fock realizations need a truncation radius covering the grid.
pub fn spec_for_extent(spec: &KernelSpec, extent: f64) -> KernelSpec {
    let mut s = spec.clone();
    if s.model == Model::BargmannFock && s.truncation.radius.is_none_or(|r| r < extent) {
        s.truncation.radius = Some(extent);
    }
    s
}

/// Samples, extracts and classifies one realization. With `detail` every
/// inside component gets its invariants, including mesh Willmore energies.
pub fn realize(spec: &KernelSpec, radius: f64, seed: u64, grid: &GridConfig, detail: bool) -> Result<RealizationCell, RunError> {
    let g = grid_for(spec, radius, grid)?;
    let spec = spec_for_extent(spec, g.extent());
    let field = sample_field(&spec, seed)?;
    let ex = extract(&field, &g)?;
    let fault = ex.is_faulty();
    if fault {
        log::warn!("seed {seed}: faulty extraction ({} under-resolved, {:?})", ex.under_resolved, ex.faults);
    }
    let (inside, touching) = classify_against_cube(&ex.components, radius);
    let measure: f64 = inside
        .iter()
        .chain(&touching)
        .map(|c| match c.kind {
            GeometryKind::Polyline => c.clipped_length(radius),
            GeometryKind::Mesh => c.clipped_area(radius),
        })
        .sum();
    let records: Vec<ComponentRecord> =
        inside.into_iter().map(|c| ComponentRecord::build(c, if detail { Some(&field) } else { None })).collect();
    let summary = census(&records, spec.n - spec.m);
    let components = if detail {
        records
            .iter()
            .map(|r| ComponentRow {
                kind: r.geometry.kind.tag().to_string(),
                closed: r.geometry.closed,
                vertices: r.geometry.vertices.len(),
                total_curvature: r.total_curvature,
                willmore_energy: r.willmore_energy,
                knot_label: r.knot_label.to_string(),
                determinant: r.invariants.as_ref().map(|i| i.determinant),
                alexander: r.invariants.as_ref().map(|i| {
                    i.alexander.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
                }),
                fault: r.fault,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(RealizationCell {
        n: summary.n,
        n_star: summary.n + touching.len(),
        betti_sums: summary.betti_sums,
        labels: summary.class_counts,
        measure,
        fault,
        component_faults: summary.faults,
        components,
    })
}

/// Opens the ledger in the config's output directory.
pub fn open_ledger(config: &ExperimentConfig, opts: &RunOptions) -> Result<Mutex<RunLedger>, RunError> {
    std::fs::create_dir_all(&config.output_dir)?;
    Ok(Mutex::new(RunLedger::open(&config.output_dir, &config.hash(), opts.resume)?))
}

fn first_radius(config: &ExperimentConfig) -> Result<f64, RunError> {
    config
        .r_list
        .first()
        .copied()
        .ok_or_else(|| ConfigError::Invalid("r_list must name the census radius".into()).into())
}

/// Writes a coefficient sidecar and its spec block for every seed.
pub fn write_samples(config: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(&config.output_dir)?;
    let spec = match config.r_list.first() {
        Some(&r) => spec_for_extent(&config.spec, grid_for(&config.spec, r, &config.grid)?.extent()),
        None => config.spec.clone(),
    };
    let mut files = Vec::new();
    for seed in config.seeds.seeds() {
        let field = sample_field(&spec, seed)?;
        let bin = config.output_dir.join(format!("field_{seed:010}.bin"));
        let mut buf = Vec::new();
        write_sidecar(&field, &mut buf)?;
        std::fs::write(&bin, buf)?;
        let toml = bin.with_extension("toml");
        std::fs::write(&toml, spec.to_config_block(Some(seed)))?;
        files.extend([bin, toml]);
    }
    Ok(files)
}

/// Extracts every seed at the first radius and writes the components that
/// meet `C_R` in the geometry format.
pub fn write_geometries(config: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(&config.output_dir)?;
    let radius = first_radius(config)?;
    let g = grid_for(&config.spec, radius, &config.grid)?;
    let spec = spec_for_extent(&config.spec, g.extent());
    let mut files = Vec::new();
    for seed in config.seeds.seeds() {
        let field = sample_field(&spec, seed)?;
        let ex = extract(&field, &g)?;
        let (inside, touching) = classify_against_cube(&ex.components, radius);
        let all: Vec<_> = inside.into_iter().chain(touching).collect();
        let path = config.output_dir.join(format!("geometry_{seed:010}.txt"));
        let mut buf = Vec::new();
        write_geometry(&all, &mut buf)?;
        std::fs::write(&path, buf)?;
        files.push(path);
    }
    Ok(files)
}
