use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mppstat::infer::Centering;
use mppstat::markfn::{MarkFnSpec, MarkFunction, Registry};
use mppstat::pattern::{buffer_width, Band, Bounds, Window};
use mppstat::sim::{CovShape, FiniteRangeCovariance, MixtureSpec};
use mppstat::weights::WeightStrategy;

/// Window extent: a single number for a cube, or one extent per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Extent {
    Cube(f64),
    Box(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorConfig {
    MuHatN,
    MuHatAlpha,
    MuHatWeighted {
        #[serde(default = "default_weights")]
        weights: String,
    },
}

fn default_weights() -> String {
    "equal".into()
}

impl EstimatorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorConfig::MuHatN => "mu_hat_n",
            EstimatorConfig::MuHatAlpha => "mu_hat_alpha",
            EstimatorConfig::MuHatWeighted { .. } => "mu_hat_weighted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovConfig {
    #[serde(default)]
    pub shape: CovShape,
    pub variance: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConfig {
    pub n_mc: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSection {
    #[serde(default = "default_base")]
    pub base_f: String,
    #[serde(default)]
    pub u: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_centering")]
    pub centering: Centering,
}

fn default_base() -> String {
    "first".into()
}

fn default_level() -> f64 {
    0.95
}

fn default_centering() -> Centering {
    Centering::PlugIn
}

/// A JSON experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: MixtureSpec,
    pub window: Extent,
    pub bands: Vec<BandConfig>,
    pub f: MarkFnSpec,
    pub estimators: Vec<EstimatorConfig>,
    pub n_realizations: usize,
    #[serde(default = "one")]
    pub n_replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub covariance: Option<CovConfig>,
    #[serde(default)]
    pub brute_force: Option<BruteForceConfig>,
    #[serde(default)]
    pub clt: Option<CltSection>,
    #[serde(default)]
    pub output: Option<String>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("config is not valid")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.window()?;
        self.bands()?;
        self.mark_function()?;
        if self.n_realizations == 0 || self.n_replicates == 0 {
            bail!("n_realizations and n_replicates must be >= 1");
        }
        if self.estimators.is_empty() {
            bail!("at least one estimator is required");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            bail!("level must be in (0, 1)");
        }
        for e in &self.estimators {
            if let EstimatorConfig::MuHatWeighted { weights } = e {
                self.strategy(weights)?;
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Result<Window> {
        let extent = match &self.window {
            Extent::Cube(t) => vec![*t; self.spec.dim],
            Extent::Box(v) => v.clone(),
        };
        Ok(Window::new(extent)?)
    }

    pub fn bands(&self) -> Result<Vec<Band>> {
        if self.bands.is_empty() {
            bail!("at least one band is required");
        }
        self.bands
            .iter()
            .map(|b| Ok(Band::for_dim(self.spec.dim, b.lo, b.hi)?))
            .collect()
    }

    /// Simulation bounds: the window buffered by the widest band reach.
    pub fn sim_bounds(&self) -> Result<Bounds> {
        let reach = buffer_width(&self.bands()?);
        if !reach.is_finite() {
            bail!("bands must be bounded for simulation");
        }
        Ok(self.window()?.buffered(reach)?)
    }

    pub fn mark_function(&self) -> Result<MarkFunction> {
        Ok(Registry::default().resolve(&self.f)?)
    }

    pub fn covariance(&self) -> Result<Option<FiniteRangeCovariance>> {
        self.covariance
            .as_ref()
            .map(|c| Ok(FiniteRangeCovariance::new(c.shape, c.variance, c.range)?))
            .transpose()
    }

    pub fn strategy(&self, flag: &str) -> Result<WeightStrategy> {
        Ok(WeightStrategy::from_flag(flag, self.covariance()?)?)
    }

    /// Hex SHA-256 of the canonical JSON form of the spec.
    pub fn spec_hash(&self) -> String {
        let json = serde_json::to_string(&self.spec).expect("spec serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Short digest of a weight vector: first 16 hex digits of the SHA-256 of the
/// little-endian bit patterns.
pub fn weights_digest(weights: &[f64]) -> String {
    let mut h = Sha256::new();
    for w in weights {
        h.update(w.to_le_bytes());
    }
    hex(&h.finalize()[..8])
}

/// Parses `--cov-model` / `--cov-params variance,range`.
pub fn cov_from_flags(model: &str, params: &str) -> Result<CovConfig> {
    let shape = match model {
        "spherical" => CovShape::Spherical,
        "truncated_exponential" | "exponential" => CovShape::TruncatedExponential,
        other => bail!("unknown covariance model '{other}'"),
    };
    let nums: Vec<f64> = params
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("--cov-params entry '{s}'")))
        .collect::<Result<_>>()?;
    let [variance, range] = nums[..] else {
        bail!("--cov-params expects 'variance,range'");
    };
    Ok(CovConfig { shape, variance, range })
}
