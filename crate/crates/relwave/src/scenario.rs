//! Scenario configuration: a schema-validated, JSON-compatible description of
//! a run (units, grid, initial state, evolution method, output policy).
//!
//! Unknown keys are rejected at parse time, before any computation, so a
//! typo'd field never silently falls back to a default. Random initial
//! states draw from an explicit 64-bit seed (with a fixed default), so the
//! same config always produces byte-identical artifacts.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispersion::Branch;
use crate::error::RelwaveError;
use crate::grid::{ComplexField, Representation, SpectralGrid};
use crate::units::PhysicalParams;
use crate::wavefield::{self, InitialData};
use crate::Result;

/// Default seed for random initial states; fixed so that configs omitting
/// `seed` are still reproducible.
pub const DEFAULT_SEED: u64 = 0x52454c5741564531; // "RELWAVE1"

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn one() -> f64 {
    1.0
}

/// Physical constants block. Defaults to natural units (m = c = ħ = 1).
/// `box_length`, when given, sets the characteristic length of the
/// dimensionless scaling; it defaults to the grid box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsBlock {
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub speed_of_light: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_length: Option<f64>,
}

impl Default for UnitsBlock {
    fn default() -> Self {
        UnitsBlock {
            mass: 1.0,
            speed_of_light: 1.0,
            hbar: 1.0,
            box_length: None,
        }
    }
}

/// Grid block: dimension, samples per axis, box edge length.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "box")]
    pub box_length: f64,
}

fn default_dim() -> usize {
    1
}

/// Initial-state block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateBlock {
    /// Unit-norm plane wave on a lattice wavenumber.
    PlaneWave { k0: Vec<f64>, branch: Branch },
    /// Unit-norm Gaussian packet.
    Gaussian {
        x0: Vec<f64>,
        k0: Vec<f64>,
        sigma: f64,
        branch: Branch,
    },
    /// Random band-limited spectral amplitudes, drawn from the config seed.
    Random { kmax: f64, branch: Branch },
}

/// Evolution method for the `run` block and the `evolve` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exact two-branch spectral propagator.
    Exact,
    /// Exponential of the order-N truncated generator ((+)-branch states).
    Truncated(usize),
    /// Free Schrödinger reference propagator.
    Schrodinger,
}

impl FromStr for Method {
    type Err = RelwaveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "schrodinger" => Ok(Method::Schrodinger),
            _ => {
                if let Some(order) = s.strip_prefix("truncated:") {
                    let n: usize = order.parse().map_err(|_| {
                        RelwaveError::Validation(format!(
                            "method 'truncated:<N>' needs an integer order, got '{order}'"
                        ))
                    })?;
                    if n == 0 {
                        return Err(RelwaveError::Validation(
                            "truncation order must be at least 1".into(),
                        ));
                    }
                    Ok(Method::Truncated(n))
                } else {
                    Err(RelwaveError::Validation(format!(
                        "unknown method '{s}' (expected exact | truncated:<N> | schrodinger)"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Exact => write!(f, "exact"),
            Method::Truncated(n) => write!(f, "truncated:{n}"),
            Method::Schrodinger => write!(f, "schrodinger"),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Run block: method, horizon, snapshot count, series order for observables.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub method: Method,
    pub t_final: f64,
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_snapshots() -> usize {
    1
}

fn default_order() -> usize {
    3
}

/// Output block: artifact directory and formats to emit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_directory() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_directory(),
            formats: default_formats(),
        }
    }
}

/// Complete scenario description; see module docs for validation rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub units: UnitsBlock,
    pub grid: GridBlock,
    pub state: StateBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ScenarioConfig {
    /// Parse a config from JSON text; unknown keys are rejected with the
    /// offending field path in the message.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| RelwaveError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and parse a config file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Semantic checks beyond the serde schema.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(RelwaveError::Validation(msg));
        if !(1..=3).contains(&self.grid.dim) {
            return fail(format!("grid.dim: must be 1, 2 or 3, got {}", self.grid.dim));
        }
        if self.grid.n < 2 || self.grid.n % 2 != 0 {
            return fail(format!("grid.n: must be even and >= 2, got {}", self.grid.n));
        }
        if !(self.grid.box_length > 0.0) {
            return fail(format!(
                "grid.box: must be positive, got {}",
                self.grid.box_length
            ));
        }
        if !(self.run.t_final >= 0.0) {
            return fail(format!(
                "run.t_final: must be non-negative, got {}",
                self.run.t_final
            ));
        }
        if self.run.snapshots == 0 {
            return fail("run.snapshots: must be at least 1".into());
        }
        if self.run.order == 0 {
            return fail("run.order: must be at least 1".into());
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return fail(format!("output.formats: unknown format '{f}'"));
            }
        }
        let dim = self.grid.dim;
        match &self.state {
            StateBlock::PlaneWave { k0, .. } => {
                if k0.len() != dim {
                    return fail(format!(
                        "state.k0: needs {dim} components, got {}",
                        k0.len()
                    ));
                }
            }
            StateBlock::Gaussian { x0, k0, sigma, .. } => {
                if x0.len() != dim || k0.len() != dim {
                    return fail(format!(
                        "state.x0/state.k0: need {dim} components, got {}/{}",
                        x0.len(),
                        k0.len()
                    ));
                }
                if !(*sigma > 0.0) {
                    return fail(format!("state.sigma: must be positive, got {sigma}"));
                }
            }
            StateBlock::Random { kmax, .. } => {
                if !(*kmax > 0.0) {
                    return fail(format!("state.kmax: must be positive, got {kmax}"));
                }
            }
        }
        // Constructing params validates positivity of the constants.
        self.params()?;
        Ok(())
    }

    /// Physical constants for the run.
    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.units.mass, self.units.speed_of_light, self.units.hbar)
    }

    /// Build the spectral grid.
    pub fn build_grid(&self) -> Result<Arc<SpectralGrid>> {
        SpectralGrid::new(self.grid.dim, self.grid.n, self.grid.box_length)
    }

    /// Construct the configured initial state on `grid`.
    pub fn build_state(&self, grid: &Arc<SpectralGrid>) -> Result<InitialData> {
        let params = self.params()?;
        match &self.state {
            StateBlock::PlaneWave { k0, branch } => {
                wavefield::plane_wave(k0, *branch, grid, &params)
            }
            StateBlock::Gaussian {
                x0,
                k0,
                sigma,
                branch,
            } => wavefield::gaussian_packet(x0, k0, *sigma, *branch, grid, &params),
            StateBlock::Random { kmax, branch } => {
                random_band_limited(grid, *kmax, *branch, self.seed, &params)
            }
        }
    }

    /// Canonical byte representation used for the manifest config hash.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec(self)?)
    }
}

/// Unit-norm random spectral state supported on modes with `|k| <= kmax`,
/// assigned wholly to one branch. Deterministic in the seed.
pub fn random_band_limited(
    grid: &Arc<SpectralGrid>,
    kmax: f64,
    branch: Branch,
    seed: u64,
    params: &PhysicalParams,
) -> Result<InitialData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![Complex64::default(); grid.n_total()];
    let mut populated = 0usize;
    for (flat, v) in values.iter_mut().enumerate() {
        if grid.k_squared(flat) <= kmax * kmax && !grid.on_nyquist(flat) {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            *v = Complex64::new(re, im);
            populated += 1;
        }
    }
    if populated == 0 {
        return Err(RelwaveError::Validation(format!(
            "state.kmax: no lattice modes below kmax = {kmax} (grid dk = {})",
            grid.dk()
        )));
    }
    let psi0 = ComplexField::from_values(grid.clone(), values, Representation::Spectral)?
        .normalized()?;
    let psi_dot0 = psi0.apply_symbol(|flat| {
        let k = grid.k_squared(flat).sqrt();
        let omega = crate::dispersion::omega_branch(k, branch, params);
        match branch {
            Branch::Plus => Complex64::new(0.0, -omega),
            Branch::Minus => Complex64::new(0.0, omega),
        }
    });
    InitialData::new(psi0, psi_dot0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefield::split;

    fn base_config() -> String {
        r#"{
            "grid": { "n": 64, "box": 20.0 },
            "state": { "kind": "gaussian", "x0": [10.0], "k0": [0.3],
                       "sigma": 1.5, "branch": "plus" },
            "run": { "method": "exact", "t_final": 1.0 }
        }"#
        .to_string()
    }

    #[test]
    fn defaults_fill_in_units_output_and_seed() {
        let cfg = ScenarioConfig::from_json(&base_config()).unwrap();
        assert_eq!(cfg.units.mass, 1.0);
        assert_eq!(cfg.grid.dim, 1);
        assert_eq!(cfg.run.snapshots, 1);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.output.formats, vec!["csv", "json"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = base_config().replace("\"grid\"", "\"grdi\"");
        let err = ScenarioConfig::from_json(&bad).unwrap_err();
        assert!(matches!(err, RelwaveError::Validation(_)));
        let bad_nested = base_config().replace("\"n\": 64", "\"n\": 64, \"nn\": 1");
        let err = ScenarioConfig::from_json(&bad_nested).unwrap_err();
        assert!(err.to_string().contains("nn"), "message: {err}");
    }

    #[test]
    fn method_strings_round_trip() {
        for s in ["exact", "truncated:3", "schrodinger"] {
            let m: Method = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("truncated:0".parse::<Method>().is_err());
        assert!("rk4".parse::<Method>().is_err());
        assert!("truncated:x".parse::<Method>().is_err());
    }

    #[test]
    fn semantic_validation_catches_bad_values() {
        for (from, to, field) in [
            ("\"n\": 64", "\"n\": 63", "grid.n"),
            ("\"box\": 20.0", "\"box\": -1.0", "grid.box"),
            ("\"t_final\": 1.0", "\"t_final\": -2.0", "run.t_final"),
            ("\"sigma\": 1.5", "\"sigma\": 0.0", "state.sigma"),
        ] {
            let bad = base_config().replace(from, to);
            let err = ScenarioConfig::from_json(&bad).unwrap_err();
            assert!(err.to_string().contains(field), "{field}: {err}");
        }
    }

    #[test]
    fn random_state_is_deterministic_in_the_seed() {
        let grid = SpectralGrid::new(1, 64, 20.0).unwrap();
        let params = PhysicalParams::natural();
        let a = random_band_limited(&grid, 0.8, Branch::Plus, 7, &params).unwrap();
        let b = random_band_limited(&grid, 0.8, Branch::Plus, 7, &params).unwrap();
        assert_eq!(a.psi0.values(), b.psi0.values());
        let c = random_band_limited(&grid, 0.8, Branch::Plus, 8, &params).unwrap();
        assert_ne!(a.psi0.values(), c.psi0.values());
        // Stays within the requested band and on one branch.
        for (flat, v) in a.psi0.values().iter().enumerate() {
            if grid.k_squared(flat) > 0.64 + 1e-12 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        let amps = split(&a, &params).unwrap();
        assert!(amps.branch_norm_sq(Branch::Minus) < 1e-24);
    }

    #[test]
    fn build_state_produces_unit_norm_fields() {
        let cfg = ScenarioConfig::from_json(&base_config()).unwrap();
        let grid = cfg.build_grid().unwrap();
        let data = cfg.build_state(&grid).unwrap();
        assert!((data.psi0.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_bytes_are_stable() {
        let cfg = ScenarioConfig::from_json(&base_config()).unwrap();
        assert_eq!(
            cfg.canonical_bytes().unwrap(),
            cfg.canonical_bytes().unwrap()
        );
    }
}
