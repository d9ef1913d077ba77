//! Run configuration for the command front end.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::BodyDescriptor;
use crate::error::{Error, Result};
use crate::measure::MeasureDescriptor;
use crate::quad::QuadratureSpec;
use crate::verify::{TestFunction, DEFAULT_TOLERANCE};

pub const MAX_DEGREE: usize = 128;
pub const MAX_BOUNDARY_NODES: usize = 8192;
pub const MAX_RADIAL_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Power,
    Verify,
    Scan,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum ScanMode {
    #[serde(rename = "b")]
    #[value(name = "b")]
    B,
    #[serde(rename = "dim-bm")]
    #[value(name = "dim-bm")]
    DimBm,
    #[serde(rename = "logc")]
    #[value(name = "logc")]
    Logc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionBlock {
    #[serde(rename = "N", default = "defaults::degree")]
    pub n: usize,
    #[serde(rename = "M", default = "defaults::boundary")]
    pub m: usize,
    #[serde(rename = "S", default = "defaults::radial")]
    pub s: usize,
    #[serde(default = "defaults::points")]
    pub points: usize,
}

impl Default for ResolutionBlock {
    fn default() -> Self {
        ResolutionBlock {
            n: defaults::degree(),
            m: defaults::boundary(),
            s: defaults::radial(),
            points: defaults::points(),
        }
    }
}

impl ResolutionBlock {
    pub fn validate(&self) -> Result<()> {
        let out = |msg: String| Err(Error::ResolutionOutOfBounds(msg));
        if self.n == 0 || self.n > MAX_DEGREE {
            return out(format!("N = {} not in [1, {MAX_DEGREE}]", self.n));
        }
        if self.m > MAX_BOUNDARY_NODES {
            return out(format!("M = {} exceeds {MAX_BOUNDARY_NODES}", self.m));
        }
        if self.s > MAX_RADIAL_NODES {
            return out(format!("S = {} exceeds {MAX_RADIAL_NODES}", self.s));
        }
        if self.m < 8 * self.n {
            return out(format!("M = {} is below 8 N = {}", self.m, 8 * self.n));
        }
        if self.points > 100_000 {
            return out(format!("points = {} exceeds 100000", self.points));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec> {
        self.validate()?;
        QuadratureSpec::new(self.m, self.s)
    }

    /// Applies `N=..,M=..,S=..,points=..` overrides.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("resolution override `{item}` is not KEY=VALUE")))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("resolution override `{item}` has a non-integer value")))?;
            match key.trim() {
                "N" => self.n = value,
                "M" => self.m = value,
                "S" => self.s = value,
                "points" => self.points = value,
                other => return Err(Error::Config(format!("unknown resolution key `{other}`"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    #[serde(default = "defaults::t_min")]
    pub t_min: f64,
    #[serde(default = "defaults::t_max")]
    pub t_max: f64,
}

impl Default for ScanRange {
    fn default() -> Self {
        ScanRange {
            t_min: defaults::t_min(),
            t_max: defaults::t_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default = "defaults::oracle_degree")]
    pub degree: u32,
    #[serde(default = "defaults::t_step")]
    pub t_step: f64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            samples: defaults::samples(),
            degree: defaults::oracle_degree(),
            t_step: defaults::t_step(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    pub measure: MeasureDescriptor,
    pub body: BodyDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_body: Option<BodyDescriptor>,
    #[serde(default)]
    pub resolution: ResolutionBlock,
    #[serde(default = "defaults::tolerance")]
    pub tolerance: f64,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ScanMode>,
    #[serde(default)]
    pub scan: ScanRange,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default = "defaults::test_functions")]
    pub test_functions: Vec<TestFunction>,
    #[serde(default)]
    pub outputs: Outputs,
    /// Exit code the suite expects from this config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_exit: Option<i32>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.resolution.validate()?;
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, excluding output paths.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs = Outputs::default();
        canonical.expect_exit = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

mod defaults {
    use crate::verify::TestFunction;

    pub fn degree() -> usize {
        crate::operator::DEFAULT_DEGREE
    }
    pub fn boundary() -> usize {
        256
    }
    pub fn radial() -> usize {
        128
    }
    pub fn points() -> usize {
        41
    }
    pub fn tolerance() -> f64 {
        super::DEFAULT_TOLERANCE
    }
    pub fn seed() -> u64 {
        42
    }
    pub fn t_min() -> f64 {
        -1.0
    }
    pub fn t_max() -> f64 {
        1.0
    }
    pub fn samples() -> usize {
        200
    }
    pub fn oracle_degree() -> u32 {
        6
    }
    pub fn t_step() -> f64 {
        0.1
    }
    pub fn test_functions() -> Vec<TestFunction> {
        vec![TestFunction::Psi1]
    }
}
