//! Run configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration. The
//! effective configuration (after command-line overrides) is echoed in full in
//! each JSON sidecar.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use windtube::{DomainSpec, FieldSpec};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Trace,
    Wind,
    Helicity,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Trace => "trace",
            Command::Wind => "wind",
            Command::Helicity => "helicity",
            Command::Verify => "verify",
        }
    }
}

/// Which reference map carries points to the unit cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    /// Harmonic map with a backward `u`-trace per query.
    Harmonic,
    /// Harmonic map interpolated from per-vertex traces.
    HarmonicBulk,
    /// Inverse of the analytic domain embedding.
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    /// Fixed nodes per ring; area-uniform rings when absent.
    pub n_theta: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_r: 16, n_theta: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub trace: f64,
    /// Relative residual of the conjugate-gradient solves.
    pub solver: f64,
    pub solenoidal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace: 1e-8,
            solver: 1e-10,
            solenoidal: windtube::helicity::SOLENOIDAL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub resolution: f64,
    pub map: MapKind,
    pub domain: DomainSpec,
    pub field: FieldSpec,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Verify,
            out: PathBuf::from("windtube-out"),
            resolution: 0.1,
            map: MapKind::Harmonic,
            domain: DomainSpec::unit_cylinder(),
            field: FieldSpec::UniformTwist { k: TAU },
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::config(format!("config: {e}")))
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<(), Failure> {
        fs::create_dir_all(&self.out)
            .map_err(|e| Failure::config(format!("output directory {}: {e}", self.out.display())))?;
        let probe = self.out.join(".windtube-write-test");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| Failure::config(format!("output directory {} is not writable: {e}", self.out.display())))?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Failure::config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("resolution", self.resolution)?;
        positive("tolerances.trace", self.tolerances.trace)?;
        positive("tolerances.solver", self.tolerances.solver)?;
        positive("tolerances.solenoidal", self.tolerances.solenoidal)?;
        if self.grid.n_r == 0 {
            return Err(Failure::config("grid.n_r must be at least 1"));
        }
        if self.grid.n_theta == Some(0) {
            return Err(Failure::config("grid.n_theta must be at least 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
