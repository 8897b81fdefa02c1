//! Experiment configuration files (TOML).
//!
//! ```toml
//! scenario = "converge_nu"
//! seeds = "0..200"
//! r_list = [4.0, 8.0, 16.0]
//! output_dir = "out/converge"
//!
//! [spec]
//! model = "bargmann_fock"
//! n = 2
//! m = 1
//!
//! [grid]
//! h = 0.1
//! ```

use nodal_core::field::KernelSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ConvergeNu,
    KnotCensus,
    BettiScaling,
    WillmoreAudit,
    KostlanLocalLimit,
    KacriceVsEmpirical,
    Diagnostics,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::ConvergeNu => "converge_nu",
            Scenario::KnotCensus => "knot_census",
            Scenario::BettiScaling => "betti_scaling",
            Scenario::WillmoreAudit => "willmore_audit",
            Scenario::KostlanLocalLimit => "kostlan_local_limit",
            Scenario::KacriceVsEmpirical => "kacrice_vs_empirical",
            Scenario::Diagnostics => "diagnostics",
        }
    }
}

/// Half-open seed range written `a..b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedRange(pub Range<u64>);

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        self.0.clone().collect()
    }

    pub fn len(&self) -> usize {
        (self.0.end.saturating_sub(self.0.start)) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for SeedRange {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::Invalid(format!("seed range `{s}` is not of the form a..b"));
        let (a, b) = s.trim().split_once("..").ok_or_else(bad)?;
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        Ok(SeedRange(a..b))
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.0.start, self.0.end)
    }
}

impl Serialize for SeedRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cell size; defaults to a twelfth of the wavelength.
    pub h: Option<f64>,
    /// Extra margin around the census cube; defaults to `2h`.
    pub padding: Option<f64>,
    /// Newton refinement of nodal-curve vertices.
    pub refine: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub r: f64,
    pub stride: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub spec: KernelSpec,
    pub seeds: SeedRange,
    #[serde(default)]
    pub r_list: Vec<f64>,
    /// Lattice norms `L^2` for the arithmetic torus.
    #[serde(default)]
    pub l_list: Vec<u64>,
    /// Kostlan degrees.
    #[serde(default)]
    pub d_list: Vec<u32>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    /// Compare the second moment as well (kacrice_vs_empirical).
    #[serde(default)]
    pub second_moment: bool,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Largest pair separation in the two-point Schur check.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_fault_rate")]
    pub max_fault_rate: f64,
    /// Half side of the Bulinskaya probe cube.
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    /// Repeated sphere-integral runs for the stability check.
    #[serde(default = "default_stability_runs")]
    pub stability_runs: usize,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_mc() -> usize {
    1_000_000
}
fn default_taus() -> Vec<f64> {
    vec![0.01, 0.03, 0.1]
}
fn default_alphas() -> Vec<f64> {
    vec![-0.25, -0.5, -0.75, -0.95]
}
fn default_delta() -> f64 {
    0.5
}
fn default_fault_rate() -> f64 {
    0.1
}

fn default_probe_radius() -> f64 {
    4.0
}
fn default_stability_runs() -> usize {
    10
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() && self.scenario != Scenario::KostlanLocalLimit {
            return bad(format!("seed range {} is empty", self.seeds));
        }
        if !strictly_increasing(&self.r_list) || self.r_list.iter().any(|r| !(*r > 0.0)) {
            return bad("r_list must be positive and strictly increasing".into());
        }
        if !strictly_increasing(&self.l_list) || !strictly_increasing(&self.d_list) {
            return bad("l_list and d_list must be strictly increasing".into());
        }
        if !strictly_increasing(&self.taus) || self.taus.iter().any(|t| *t < 0.0) {
            return bad("taus must be nonnegative and strictly increasing".into());
        }
        if let Some(h) = self.grid.h {
            if !(h > 0.0) {
                return bad("grid.h must be positive".into());
            }
        }
        if !(self.probe_radius > 0.0) || self.stability_runs < 2 {
            return bad("probe_radius must be positive and stability_runs at least 2".into());
        }
        if self.mc_samples < 1000 {
            return bad("mc_samples must be at least 1000".into());
        }
        let needs_r = matches!(
            self.scenario,
            Scenario::ConvergeNu | Scenario::BettiScaling | Scenario::WillmoreAudit | Scenario::KacriceVsEmpirical
        );
        if needs_r && self.r_list.is_empty() {
            return bad(format!("{} needs a nonempty r_list", self.scenario.tag()));
        }
        if self.scenario == Scenario::KostlanLocalLimit && self.d_list.is_empty() {
            return bad("kostlan_local_limit needs a nonempty d_list".into());
        }
        Ok(())
    }

    /// Hash of everything that determines cell results: the seed range and
    /// output directory are excluded so a ledger can be extended.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.seeds = SeedRange(0..0);
        c.output_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
scenario = "converge_nu"
seeds = "0..20"
r_list = [4.0, 8.0]

[spec]
model = "bargmann_fock"
n = 2
m = 1

[grid]
h = 0.1
"#;

    #[test]
    fn parses_and_hashes() {
        let c = ExperimentConfig::parse(EXAMPLE).unwrap();
        assert_eq!(c.seeds.len(), 20);
        let mut d = c.clone();
        d.seeds = SeedRange(0..50);
        assert_eq!(c.hash(), d.hash());
        d.r_list.push(16.0);
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn rejects_bad_sweeps() {
        assert!(ExperimentConfig::parse(&EXAMPLE.replace("[4.0, 8.0]", "[8.0, 4.0]")).is_err());
        assert!(ExperimentConfig::parse(&EXAMPLE.replace("0..20", "5..5")).is_err());
        assert!(ExperimentConfig::parse(&EXAMPLE.replace("m = 1", "m = 2")).is_err());
        assert!(ExperimentConfig::parse(&EXAMPLE.replace("h = 0.1", "h = 0.1\nbogus = 1")).is_err());
    }
}
