//! The TOML run configuration. See `docs/config.md` for the schema.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    /// Independent chains, one RNG stream each.
    #[serde(default = "one")]
    pub chains: usize,
    pub kernel: KernelTag,
    /// Trace destination, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adda: Option<AddaSection>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file with a header row, relative to the config file.
    pub path: PathBuf,
    pub response: String,
    /// Binomial trial counts (logistic only); Bernoulli when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<String>,
    /// Explicit design columns; otherwise every column not used elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Vec<String>>,
    #[serde(default)]
    pub intercept: bool,
    /// Subtract column means from the design.
    #[serde(default)]
    pub center: bool,
    /// Center and scale design columns to unit norm.
    #[serde(default)]
    pub standardize: bool,
}

/// Scalar (broadcast) or explicit vector.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(f64),
    List(Vec<f64>),
}

impl VectorSpec {
    pub fn resolve(&self, len: usize, what: &str) -> CliResult<DVector<f64>> {
        match self {
            VectorSpec::Scalar(v) => Ok(DVector::from_element(len, *v)),
            VectorSpec::List(v) if v.len() == len => Ok(DVector::from_column_slice(v)),
            VectorSpec::List(v) => Err(CliError::Validation(format!("{what} has {} entries, expected {len}", v.len()))),
        }
    }
}

/// Scalar multiple of the identity or explicit rows.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn resolve(&self, dim: usize, what: &str) -> CliResult<DMatrix<f64>> {
        match self {
            MatrixSpec::Scalar(v) => Ok(DMatrix::identity(dim, dim) * *v),
            MatrixSpec::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::Validation(format!("{what} must be {dim} x {dim}")));
                }
                Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
            }
        }
    }

    /// Side length implied by explicit rows; `None` for a scalar.
    pub fn dim(&self) -> Option<usize> {
        match self {
            MatrixSpec::Scalar(_) => None,
            MatrixSpec::Rows(r) => Some(r.len()),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VariancePriorConfig {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPriorConfig {
    pub mean: VectorSpec,
    pub precision: MatrixSpec,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuantRegPriorConfig {
    pub mean: VectorSpec,
    pub covariance: MatrixSpec,
    pub n0: f64,
    pub t0: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomEffectConfig {
    /// Data columns forming this term's part of the random-effect design.
    pub columns: Vec<String>,
    pub lambda: MatrixSpec,
    /// Defaults to the identity of the matching size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<MatrixSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Lasso {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance_prior: Option<VariancePriorConfig>,
    },
    ElasticNet {
        lambda1: f64,
        lambda2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance_prior: Option<VariancePriorConfig>,
    },
    Logistic {
        /// Flat when absent, which needs `assert_proper`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prior: Option<GaussianPriorConfig>,
        #[serde(default)]
        assert_proper: bool,
    },
    ProbitGlmm {
        random_effects: Vec<RandomEffectConfig>,
        /// Known fixed effects for the remaining design columns.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<VectorSpec>,
    },
    Robit {
        nu: f64,
        prior: GaussianPriorConfig,
    },
    Quantreg {
        alpha: f64,
        prior: QuantRegPriorConfig,
    },
}

impl ModelConfig {
    pub fn family(&self) -> &'static str {
        match self {
            ModelConfig::Lasso { .. } => "lasso",
            ModelConfig::ElasticNet { .. } => "elastic-net",
            ModelConfig::Logistic { .. } => "logistic",
            ModelConfig::ProbitGlmm { .. } => "probit-glmm",
            ModelConfig::Robit { .. } => "robit",
            ModelConfig::Quantreg { .. } => "quantreg",
        }
    }

    fn supports(&self, kernel: KernelTag) -> bool {
        use KernelTag::*;
        match self {
            ModelConfig::Lasso { .. } | ModelConfig::Logistic { .. } => matches!(kernel, Da | Adda),
            ModelConfig::ElasticNet { .. } | ModelConfig::Robit { .. } => kernel == Da,
            ModelConfig::ProbitGlmm { .. } => matches!(kernel, Da | HaarPxda),
            ModelConfig::Quantreg { .. } => matches!(kernel, TwoBlock | TwoBlockPxda(_)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelTag {
    Da,
    HaarPxda,
    TwoBlock,
    /// Two-block Haar PX-DA; 1 marginalizes the middle density over `u`,
    /// 2 uses the full joint.
    TwoBlockPxda(u8),
    Adda,
}

impl fmt::Display for KernelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelTag::Da => f.write_str("da"),
            KernelTag::HaarPxda => f.write_str("haar-pxda"),
            KernelTag::TwoBlock => f.write_str("two-block"),
            KernelTag::TwoBlockPxda(j) => write!(f, "two-block-pxda:{j}"),
            KernelTag::Adda => f.write_str("adda"),
        }
    }
}

impl FromStr for KernelTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "da" => KernelTag::Da,
            "haar-pxda" => KernelTag::HaarPxda,
            "two-block" => KernelTag::TwoBlock,
            "adda" => KernelTag::Adda,
            _ => match s.strip_prefix("two-block-pxda:").map(str::parse::<u8>) {
                Some(Ok(j @ (1 | 2))) => KernelTag::TwoBlockPxda(j),
                _ => {
                    return Err(format!(
                        "unknown kernel '{s}' (expected da, haar-pxda, two-block, two-block-pxda:1, two-block-pxda:2 or adda)"
                    ))
                }
            },
        })
    }
}

impl TryFrom<String> for KernelTag {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<KernelTag> for String {
    fn from(k: KernelTag) -> String {
        k.to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    /// Discrete-event simulation under the latency model. Deterministic.
    #[default]
    Simulated,
    /// Completion order read from a schedule file. Deterministic.
    Scripted,
    /// Real threads; arrival order depends on the OS scheduler.
    Threaded,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    /// Mean seconds per latent item, per worker or broadcast.
    #[serde(default = "unit_vector")]
    pub item_seconds: VectorSpec,
    /// Coefficient of variation of item durations; 0 makes them fixed.
    #[serde(default = "half")]
    pub variation: f64,
    #[serde(default = "tenth")]
    pub message_seconds: f64,
    #[serde(default = "tenth")]
    pub manager_seconds: f64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self { item_seconds: unit_vector(), variation: half(), message_seconds: tenth(), manager_seconds: tenth() }
    }
}

fn unit_vector() -> VectorSpec {
    VectorSpec::Scalar(1.0)
}

fn half() -> f64 {
    0.5
}

fn tenth() -> f64 {
    0.1
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AddaSection {
    pub blocks: usize,
    pub fraction: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub driver: DriverKind,
    /// Completion schedule for the scripted driver, relative to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<PathBuf>,
    #[serde(default)]
    pub latency: LatencyConfig,
    /// Threaded driver: give up after this long without progress.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_timeout_seconds: Option<f64>,
    /// `(fraction, epsilon)` pairs compared by `adda-report`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Vec<[f64; 2]>>,
}

/// A parsed config plus where it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Input { path: path.into(), source })?;
        let config = RunConfig::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if self.chains == 0 {
            return bad("chains must be positive".into());
        }
        if !self.model.supports(self.kernel) {
            return bad(format!("kernel '{}' is not available for the {} model", self.kernel, self.model.family()));
        }
        if self.data.center && self.data.standardize {
            return bad("center and standardize are exclusive; standardize already centers".into());
        }
        if self.data.intercept && (self.data.center || self.data.standardize) {
            return bad("an intercept column cannot be centered; drop intercept or centering".into());
        }
        if self.data.trials.is_some() && !matches!(self.model, ModelConfig::Logistic { .. }) {
            return bad("a trials column only applies to the logistic model".into());
        }
        match (&self.adda, self.kernel) {
            (None, KernelTag::Adda) => return bad("kernel 'adda' needs an [adda] section".into()),
            (Some(_), k) if k != KernelTag::Adda => return bad(format!("[adda] section given but kernel is '{k}'")),
            _ => {}
        }
        if let Some(a) = &self.adda {
            match (a.driver, &a.schedule) {
                (DriverKind::Scripted, None) => return bad("the scripted driver needs adda.schedule".into()),
                (DriverKind::Simulated | DriverKind::Threaded, Some(_)) => {
                    return bad("adda.schedule only applies to the scripted driver".into())
                }
                _ => {}
            }
            if let Some(t) = a.stall_timeout_seconds {
                if a.driver != DriverKind::Threaded || !(t > 0.0 && t.is_finite()) {
                    return bad("adda.stall_timeout_seconds must be positive and needs the threaded driver".into());
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, so formatting and key order in
    /// the file do not matter but every setting that affects the draws does.
    /// The output path is left out.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&RunConfig { output: None, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
