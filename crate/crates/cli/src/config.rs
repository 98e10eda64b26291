//! Resolved run configurations and the manifest that echoes them.

use std::path::{Path, PathBuf};

use bvsel_core::experiments::{C1Target, Design, Regime, SignalStrength, SyntheticConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_text;

/// TOML integers are signed 64-bit, so seeds travel as strings.
mod seed_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Int(v)) => Ok(Some(v)),
            Some(Raw::Str(s)) => s.trim().parse().map(Some).map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// Beta-prime mixture with a truncated Poisson model prior.
    #[value(name = "betaprime")]
    #[serde(rename = "betaprime")]
    BetaPrime,
    /// Zellner-Siow mixture (quadrature) with a truncated Poisson model prior.
    Zs,
    /// Beta-prime mixture with the `p^{-c2}` size prior.
    Sparsity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Enumerate when the model space fits the budget, otherwise search.
    Auto,
    Enumerate,
    Mh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    pub lambda: f64,
    pub prior: PriorKind,
    pub c2_exponent: f64,
    pub mode: SearchMode,
    pub iters: usize,
    pub burn_in: usize,
    pub chains: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_cap: Option<usize>,
    #[serde(with = "seed_string", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            x: PathBuf::new(),
            y: PathBuf::new(),
            lambda: 1.0,
            prior: PriorKind::BetaPrime,
            c2_exponent: 2.0,
            mode: SearchMode::Auto,
            iters: 100_000,
            burn_in: 10_000,
            chains: 1,
            size_cap: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    pub mc_draws: usize,
    pub zeta_subset_size: usize,
    pub zeta_samples: usize,
    pub superset_cap: usize,
    pub v_constant: f64,
    #[serde(with = "seed_string", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self {
            x: PathBuf::new(),
            y: PathBuf::new(),
            truth: None,
            mc_draws: 1000,
            zeta_subset_size: 6,
            zeta_samples: 1000,
            superset_cap: 2,
            v_constant: bvsel_core::diagnostics::DEFAULT_V_CONSTANT,
            seed: None,
        }
    }
}

/// Synthetic-data parameters shared by the generator and the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub n: usize,
    pub f: f64,
    pub regime: Regime,
    pub c1: C1Target,
    pub c2: SignalStrength,
    pub sigma2: f64,
    pub design: Design,
    pub zeta_subset_size: usize,
    pub zeta_samples: usize,
    #[serde(with = "seed_string", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let s = SyntheticConfig::default();
        Self {
            n: s.n,
            f: s.f,
            regime: s.regime,
            c1: s.c1_target,
            c2: s.c2,
            sigma2: s.sigma2,
            design: s.design,
            zeta_subset_size: s.zeta_subset_size,
            zeta_samples: s.zeta_samples,
            seed: None,
        }
    }
}

impl DataConfig {
    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            n: self.n,
            f: self.f,
            regime: self.regime,
            c1_target: self.c1,
            c2: self.c2,
            sigma2: self.sigma2,
            design: self.design,
            seed: self.seed.unwrap_or(0),
            zeta_subset_size: self.zeta_subset_size,
            zeta_samples: self.zeta_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsistencyConfig {
    pub n_grid: Vec<usize>,
    pub seeds: usize,
    pub lambda: f64,
    pub iters: usize,
    pub burn_in: usize,
    pub chains: usize,
    pub data: DataConfig,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![100, 200, 400, 800],
            seeds: 30,
            lambda: 1.0,
            iters: 20_000,
            burn_in: 2_000,
            chains: 3,
            data: DataConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverfitConfig {
    pub c: usize,
    pub n_grid: Vec<usize>,
    pub seeds: usize,
    pub controlled: bool,
    pub lambda: f64,
    pub samples: usize,
    pub data: DataConfig,
}

impl Default for OverfitConfig {
    fn default() -> Self {
        Self {
            c: 1,
            n_grid: vec![200, 500, 1000, 2000],
            seeds: 20,
            controlled: false,
            lambda: 1.0,
            samples: 2000,
            data: DataConfig { regime: Regime::NLogN { t: 1.0 }, ..DataConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StableConfig {
    pub c: u32,
    pub m: usize,
    pub replicates: usize,
    pub k_frac: f64,
    pub bins: usize,
    #[serde(with = "seed_string", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for StableConfig {
    fn default() -> Self {
        Self { c: 2, m: 100_000, replicates: 2000, k_frac: 0.4, bins: 50, seed: None }
    }
}

/// Echo of a fully resolved run; replaying it reproduces the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub select: Option<SelectConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnose: Option<DiagnoseConfig>,
    #[serde(rename = "gen-data", skip_serializing_if = "Option::is_none")]
    pub gen_data: Option<DataConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencyConfig>,
    #[serde(rename = "overfit-class", skip_serializing_if = "Option::is_none")]
    pub overfit_class: Option<OverfitConfig>,
    #[serde(rename = "stable-sim", skip_serializing_if = "Option::is_none")]
    pub stable_sim: Option<StableConfig>,
}

pub const MANIFEST_FILE: &str = "manifest.toml";

impl Manifest {
    pub fn new(command: &str, threads: Option<usize>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads,
            select: None,
            diagnose: None,
            gen_data: None,
            consistency: None,
            overfit_class: None,
            stable_sim: None,
        }
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Input(format!("manifest serialization: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

/// Parses a config file of the command's shape; absent keys take defaults.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Draws a seed from entropy when none was given.
pub fn resolve_seed(seed: &mut Option<u64>) {
    if seed.is_none() {
        *seed = Some(rand::random());
    }
}

/// Makes input paths absolute so a manifest replays from any directory.
pub fn absolutize(path: &mut PathBuf) -> CliResult<()> {
    if path.as_os_str().is_empty() {
        return Ok(());
    }
    *path = std::fs::canonicalize(&*path).map_err(|e| CliError::io(path.clone(), e))?;
    Ok(())
}
