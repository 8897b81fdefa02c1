//! Declarative ensemble description and its key-value config block.

use crate::error::FieldError;
use crate::field::lattice_sphere;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{E, TAU};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    BargmannFock,
    BlackBody,
    BerryMono,
    TorusArithmetic,
    Kostlan,
    CustomSpectral,
}

impl Model {
    pub fn tag(self) -> &'static str {
        match self {
            Model::BargmannFock => "bargmann_fock",
            Model::BlackBody => "black_body",
            Model::BerryMono => "berry_mono",
            Model::TorusArithmetic => "torus_arithmetic",
            Model::Kostlan => "kostlan",
            Model::CustomSpectral => "custom_spectral",
        }
    }

    pub fn is_stationary(self) -> bool {
        !matches!(self, Model::Kostlan)
    }

    pub fn parse(s: &str) -> Option<Model> {
        [
            Model::BargmannFock,
            Model::BlackBody,
            Model::BerryMono,
            Model::TorusArithmetic,
            Model::Kostlan,
            Model::CustomSpectral,
        ]
        .into_iter()
        .find(|m| m.tag() == s)
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Model parameters. Only the fields relevant to the chosen model are read.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Black-body closed-form constants, used only for the large-r cross-check.
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    /// Lattice eigenvalue L^2 for the arithmetic torus waves.
    pub lattice_norm_sq: Option<u64>,
    /// Polynomial degree for Kostlan.
    pub degree: Option<u32>,
    /// Tabulated radial spectral density (density per unit volume of frequency space).
    pub spectral_radii: Option<Vec<f64>>,
    pub spectral_density: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    /// Per-coordinate degree D of the Bargmann-Fock expansion.
    pub degree: Option<usize>,
    /// Number of plane waves per component.
    pub waves: Option<usize>,
    /// Half side of the cube on which a Bargmann-Fock realization is evaluated.
    pub radius: Option<f64>,
}

pub const DEFAULT_WAVES: usize = 4096;
pub const MIN_WAVES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub model: Model,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub truncation: Truncation,
}

/// A spec block as it appears in config files: the spec plus an optional seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecBlock {
    #[serde(flatten)]
    pub spec: KernelSpec,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl KernelSpec {
    pub fn new(model: Model, n: usize, m: usize) -> Self {
        Self { model, n, m, params: Params::default(), truncation: Truncation::default() }
    }

    pub fn bargmann_fock(n: usize, m: usize) -> Self {
        Self::new(Model::BargmannFock, n, m)
    }

    pub fn berry(n: usize, m: usize) -> Self {
        Self::new(Model::BerryMono, n, m)
    }

    pub fn black_body(n: usize, m: usize) -> Self {
        Self::new(Model::BlackBody, n, m)
    }

    pub fn torus(n: usize, m: usize, lattice_norm_sq: u64) -> Self {
        let mut s = Self::new(Model::TorusArithmetic, n, m);
        s.params.lattice_norm_sq = Some(lattice_norm_sq);
        s
    }

    pub fn kostlan(n: usize, m: usize, degree: u32) -> Self {
        let mut s = Self::new(Model::Kostlan, n, m);
        s.params.degree = Some(degree);
        s
    }

    pub fn custom(n: usize, m: usize, radii: Vec<f64>, density: Vec<f64>) -> Self {
        let mut s = Self::new(Model::CustomSpectral, n, m);
        s.params.spectral_radii = Some(radii);
        s.params.spectral_density = Some(density);
        s
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.truncation.radius = Some(radius);
        self
    }

    pub fn with_waves(mut self, waves: usize) -> Self {
        self.truncation.waves = Some(waves);
        self
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let bad = |msg: String| Err(FieldError::InvalidSpec(msg));
        if !(2..=3).contains(&self.n) {
            return bad(format!("ambient dimension n = {} must be 2 or 3", self.n));
        }
        if !(1..=2).contains(&self.m) || self.m >= self.n {
            return bad(format!("codimension m = {} must satisfy 1 <= m < n = {}", self.m, self.n));
        }
        match self.model {
            Model::TorusArithmetic => {
                let l2 = match self.params.lattice_norm_sq {
                    Some(v) => v,
                    None => return bad("torus_arithmetic needs params.lattice_norm_sq".into()),
                };
                if lattice_sphere(self.n, l2).is_empty() {
                    return Err(FieldError::EmptyLatticeSphere(l2));
                }
            }
            Model::Kostlan => match self.params.degree {
                Some(d) if d >= 1 => {}
                _ => return bad("kostlan needs params.degree >= 1".into()),
            },
            Model::CustomSpectral => {
                let (r, d) = match (&self.params.spectral_radii, &self.params.spectral_density) {
                    (Some(r), Some(d)) => (r, d),
                    _ => return bad("custom_spectral needs params.spectral_radii and params.spectral_density".into()),
                };
                if r.len() != d.len() || r.len() < 2 {
                    return bad("spectral table needs two equal-length columns of >= 2 rows".into());
                }
                if r.windows(2).any(|w| w[1] <= w[0]) || r[0] < 0.0 {
                    return bad("spectral radii must be nonnegative and strictly increasing".into());
                }
                if d.iter().any(|v| *v < 0.0 || !v.is_finite()) || d.iter().all(|v| *v == 0.0) {
                    return bad("spectral density must be nonnegative with positive mass".into());
                }
            }
            _ => {}
        }
        if let Some(r) = self.truncation.radius {
            if !(r > 0.0) {
                return bad("truncation.radius must be positive".into());
            }
        }
        if let Some(w) = self.truncation.waves {
            if w < MIN_WAVES {
                return Err(FieldError::Truncation(format!("{w} waves is below the minimum {MIN_WAVES}")));
            }
        }
        Ok(())
    }

    /// Per-coordinate Bargmann-Fock degree: `ceil(e * radius^2 + 40)` unless set.
    pub fn bf_degree(&self) -> Result<usize, FieldError> {
        let radius = self
            .truncation
            .radius
            .ok_or_else(|| FieldError::Truncation("bargmann_fock needs truncation.radius".into()))?;
        let required = required_bf_degree(radius);
        match self.truncation.degree {
            None => Ok(required),
            Some(d) if d >= required => Ok(d),
            Some(d) => Err(FieldError::Truncation(format!(
                "degree {d} leaves a covariance tail above 1e-8 on radius {radius}; need >= {required}"
            ))),
        }
    }

    pub fn waves(&self) -> usize {
        self.truncation.waves.unwrap_or(DEFAULT_WAVES)
    }

    /// Dimension of the points the model is evaluated at (n + 1 for the sphere embedding).
    pub fn point_dim(&self) -> usize {
        if self.model == Model::Kostlan {
            self.n + 1
        } else {
            self.n
        }
    }

    /// Characteristic wavelength `2 pi / sqrt(E|xi|^2)` of the spectral measure.
    pub fn wavelength(&self) -> Result<f64, FieldError> {
        let s2 = crate::field::kernel::second_spectral_moment(self)?;
        Ok(TAU / s2.sqrt())
    }

    /// Canonical flat key-value block; the seed line is appended when given.
    pub fn to_config_block(&self, seed: Option<u64>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model = \"{}\"", self.model.tag());
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "m = {}", self.m);
        let p = &self.params;
        if let Some(v) = p.c1 {
            let _ = writeln!(out, "params.c1 = {}", fmt_float(v));
        }
        if let Some(v) = p.c2 {
            let _ = writeln!(out, "params.c2 = {}", fmt_float(v));
        }
        if let Some(v) = p.degree {
            let _ = writeln!(out, "params.degree = {v}");
        }
        if let Some(v) = p.lattice_norm_sq {
            let _ = writeln!(out, "params.lattice_norm_sq = {v}");
        }
        if let Some(v) = &p.spectral_density {
            let _ = writeln!(out, "params.spectral_density = {}", fmt_array(v));
        }
        if let Some(v) = &p.spectral_radii {
            let _ = writeln!(out, "params.spectral_radii = {}", fmt_array(v));
        }
        let t = &self.truncation;
        if let Some(v) = t.degree {
            let _ = writeln!(out, "truncation.degree = {v}");
        }
        if let Some(v) = t.radius {
            let _ = writeln!(out, "truncation.radius = {}", fmt_float(v));
        }
        if let Some(v) = t.waves {
            let _ = writeln!(out, "truncation.waves = {v}");
        }
        if let Some(s) = seed {
            let _ = writeln!(out, "seed = {s}");
        }
        out
    }

    pub fn from_config_block(text: &str) -> Result<SpecBlock, FieldError> {
        let block: SpecBlock = toml::from_str(text).map_err(|e| FieldError::InvalidSpec(e.to_string()))?;
        block.spec.validate()?;
        Ok(block)
    }

    /// SHA-256 of the canonical block (without seed), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(self.hash_bytes())
    }

    pub fn hash_bytes(&self) -> [u8; 32] {
        Sha256::digest(self.to_config_block(None).as_bytes()).into()
    }
}

pub fn required_bf_degree(radius: f64) -> usize {
    (E * radius * radius + 40.0).ceil() as usize
}

fn fmt_float(v: f64) -> String {
    // Debug keeps a decimal point or exponent, which TOML reads back as a float.
    format!("{v:?}")
}

fn fmt_array(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| fmt_float(*x)).collect();
    format!("[{}]", items.join(", "))
}
