//! Run configuration read from `--config`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twendo_core::cyclotomic::CycloMatrix;
use twendo_core::geom_params::{AParameter, Ambient, LParameter};
use twendo_core::torus_llc::{RealTorusDatum, ThetaPair};

use crate::error::CliError;

/// The only form of the outer involution supported.
pub const STANDARD_TILDE_J: &str = "standard";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Rank for `endo-data`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Group whose orbits are tabulated; defaults to `GL(N)` with `N` the parameter size.
    #[serde(default)]
    pub ambient: Option<Ambient>,
    #[serde(default)]
    pub parameter: Option<ParameterSpec>,
    /// Twisted datum `(N_O, N_S')` whose element and outer involution act on orbits.
    #[serde(default)]
    pub endoscopic_pair: Option<EndoPair>,
    /// An element acting by conjugation alone, for untwisted endoscopy.
    #[serde(default)]
    pub inner_element: Option<CycloMatrix>,
    #[serde(default)]
    pub tilde_j: Option<String>,
    #[serde(default)]
    pub lift: Option<LiftConfig>,
    #[serde(default)]
    pub torus: Option<TorusConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterSpec {
    A(AParameter),
    L(LParameter),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndoPair {
    pub n_o: usize,
    pub n_s_prime: usize,
}

/// One side of a lifting run: a table built from the parameter or loaded from a file,
/// with optional user-supplied decomposition rows and microlocal entries.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideConfig {
    #[serde(default)]
    pub ambient: Option<Ambient>,
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub chi_rows: Option<PathBuf>,
    #[serde(default)]
    pub microlocal: Option<PathBuf>,
    /// Orbit carrying the microlocal character; defaults to the parameter's orbit.
    #[serde(default)]
    pub orbit: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftConfig {
    pub g: SideConfig,
    pub h: SideConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub datum: RealTorusDatum,
    /// Defaults to the identity on both sides.
    #[serde(default)]
    pub theta: Option<ThetaPair>,
    #[serde(default = "default_bound")]
    pub bound: u32,
}

fn default_bound() -> u32 {
    2
}

/// A parsed configuration with the directory that relative paths refer to.
#[derive(Clone, Debug, Default)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_path(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Loaded::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(j) = &config.tilde_j {
            if j != STANDARD_TILDE_J {
                return Err(CliError::Config(format!("unsupported tilde_j convention {j:?}")));
            }
        }
        if config.endoscopic_pair.is_some() && config.inner_element.is_some() {
            return Err(CliError::Config("give either endoscopic_pair or inner_element, not both".into()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, p: &Path) -> Result<T, CliError> {
        let path = self.resolve(p);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
