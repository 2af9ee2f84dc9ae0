//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! [model]
//! name = "voter"
//! kernel = "nearest"
//!
//! [params]
//! betas = [0.3, 0.7, 1.0]
//!
//! [geometry]
//! width = 200
//! height = 200
//!
//! [initial]
//! kind = "random"
//! densities = [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]
//!
//! [run]
//! horizon = 500.0
//! sample_interval = 5.0
//! replicates = 10
//! seed = 1
//!
//! [output]
//! dir = "out/voter"
//! ```

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::StirringSpec;
use crate::error::{Error, Result};
use crate::lattice::{CountGrid, RandomStream, StateGrid, TorusGeometry};
use crate::models::{build_model, param_names, ModelSpec, ParamSet, ParamValue};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub params: ParamSet,
    pub geometry: GeometrySection,
    pub initial: InitialCondition,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    /// `nearest` or `box:L`.
    #[serde(default = "default_kernel")]
    pub kernel: String,
}

fn default_kernel() -> String {
    "nearest".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub width: usize,
    pub height: usize,
}

/// How replicate grids are seeded. Random choices use the replicate's own
/// stream, before any dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Independent sites with the given state probabilities.
    Random { densities: Vec<f64> },
    /// Every site in `state`.
    Uniform { state: u8 },
    /// `background` everywhere except `state` at the centre site.
    Center { background: u8, state: u8 },
    /// Columns `x < width/2` drawn from `left`, the rest from `right`.
    Halves { left: Vec<f64>, right: Vec<f64> },
    /// Count models: the same hawk and dove counts at every site.
    Counts { hawks: u32, doves: u32 },
    /// Count models: independent uniform counts in `0..=max`.
    RandomCounts { max_hawks: u32, max_doves: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    pub sample_interval: f64,
    #[serde(default = "one")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    /// Nearest-neighbour exchange at rate `stirring^-2` per pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stirring: Option<f64>,
    /// Persistence threshold for the coexistence verdict.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Fraction of the horizon forming the verdict window.
    #[serde(default = "default_window")]
    pub window_fraction: f64,
}

fn one() -> u64 {
    1
}

fn default_threshold() -> f64 {
    0.05
}

fn default_window() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// No files are written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
    /// Times at which PPM snapshots are written.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    /// RGB per state; the default palette when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette: Option<Vec<[u8; 3]>>,
    /// Wall-clock seconds between checkpoints; none when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_secs: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            snapshots: Vec::new(),
            palette: None,
            checkpoint_secs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        param_names(&self.model.name)?;
        let r = &self.run;
        if !(r.horizon >= 0.0 && r.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "run.horizon must be >= 0, got {}",
                r.horizon
            )));
        }
        if !(r.sample_interval > 0.0 && r.sample_interval.is_finite()) {
            return Err(Error::Config("run.sample_interval must be positive".into()));
        }
        if !(0.0..=1.0).contains(&r.window_fraction) || !(0.0..=1.0).contains(&r.threshold) {
            return Err(Error::Config(
                "run.threshold and run.window_fraction lie in [0, 1]".into(),
            ));
        }
        if let Some(eps) = r.stirring {
            StirringSpec::new(eps).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self
            .output
            .snapshots
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= r.horizon))
        {
            return Err(Error::Config(
                "output.snapshots must lie in [0, horizon]".into(),
            ));
        }
        if let Some(s) = self.output.checkpoint_secs {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config("output.checkpoint_secs must be >= 0".into()));
            }
        }
        TorusGeometry::new(self.geometry.width, self.geometry.height)?;
        // The model itself is checked when built.
        self.build_model()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<TorusGeometry> {
        TorusGeometry::new(self.geometry.width, self.geometry.height)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        build_model(&self.model.name, &self.params, &self.model.kernel)
    }

    /// Sets a numeric model parameter (used by sweeps).
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        let allowed = param_names(&self.model.name)?;
        if !allowed.contains(&key) {
            return Err(Error::Config(format!(
                "`{key}` is not a parameter of {} (expected one of {allowed:?})",
                self.model.name
            )));
        }
        if let Some(existing) = self.params.get(key) {
            if !matches!(existing, ParamValue::Number(_)) {
                return Err(Error::Config(format!("`{key}` is not numeric")));
            }
        }
        self.params
            .insert(key.to_string(), ParamValue::Number(value));
        Ok(())
    }

    /// Sample times `0, dt, 2 dt, ...` up to and including the horizon.
    pub fn sample_times(&self) -> Vec<f64> {
        let r = &self.run;
        let n = (r.horizon / r.sample_interval + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * r.sample_interval).collect();
        if times.last().is_some_and(|t| *t < r.horizon) {
            times.push(r.horizon);
        }
        times
    }
}

fn draw(probabilities: &[f64], rng: &mut RandomStream) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8;
        }
    }
    // Rounding: fall back to the last state with positive mass.
    probabilities.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u8
}

fn check_densities(densities: &[f64], alphabet: usize) -> Result<()> {
    if densities.len() != alphabet {
        return Err(Error::InitialCondition(format!(
            "expected {alphabet} densities, got {}",
            densities.len()
        )));
    }
    if densities.iter().any(|d| !d.is_finite() || *d < 0.0)
        || (densities.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InitialCondition(format!(
            "densities must be non-negative and sum to 1, got {densities:?}"
        )));
    }
    Ok(())
}

impl InitialCondition {
    /// Builds a single-occupancy grid.
    pub fn state_grid(
        &self,
        geometry: TorusGeometry,
        alphabet: usize,
        rng: &mut RandomStream,
    ) -> Result<StateGrid> {
        let check_state = |s: u8| {
            if (s as usize) < alphabet {
                Ok(())
            } else {
                Err(Error::InitialCondition(format!(
                    "state {s} is outside the alphabet 0..{alphabet}"
                )))
            }
        };
        let states: Vec<u8> = match self {
            Self::Random { densities } => {
                check_densities(densities, alphabet)?;
                (0..geometry.sites())
                    .map(|_| draw(densities, rng))
                    .collect()
            }
            Self::Uniform { state } => {
                check_state(*state)?;
                vec![*state; geometry.sites()]
            }
            Self::Center { background, state } => {
                check_state(*background)?;
                check_state(*state)?;
                let mut v = vec![*background; geometry.sites()];
                v[geometry.index(geometry.width() / 2, geometry.height() / 2)] = *state;
                v
            }
            Self::Halves { left, right } => {
                check_densities(left, alphabet)?;
                check_densities(right, alphabet)?;
                (0..geometry.sites())
                    .map(|s| {
                        let (x, _) = geometry.coords(s);
                        draw(
                            if x < geometry.width() / 2 {
                                left
                            } else {
                                right
                            },
                            rng,
                        )
                    })
                    .collect()
            }
            Self::Counts { .. } | Self::RandomCounts { .. } => {
                return Err(Error::InitialCondition(
                    "count initial conditions apply to prisoners-dilemma only".into(),
                ))
            }
        };
        StateGrid::from_states(geometry, alphabet, states)
            .map_err(|e| Error::InitialCondition(e.to_string()))
    }

    /// Builds a hawk/dove count grid.
    pub fn count_grid(&self, geometry: TorusGeometry, rng: &mut RandomStream) -> Result<CountGrid> {
        let n = geometry.sites();
        let (hawks, doves) = match *self {
            Self::Counts { hawks, doves } => (vec![hawks; n], vec![doves; n]),
            Self::RandomCounts {
                max_hawks,
                max_doves,
            } => {
                let mut h = Vec::with_capacity(n);
                let mut d = Vec::with_capacity(n);
                for _ in 0..n {
                    h.push(rng.random_range(0..=max_hawks));
                    d.push(rng.random_range(0..=max_doves));
                }
                (h, d)
            }
            _ => {
                return Err(Error::InitialCondition(
                    "prisoners-dilemma needs `counts` or `random-counts`".into(),
                ))
            }
        };
        CountGrid::from_counts(geometry, hawks, doves)
            .map_err(|e| Error::InitialCondition(e.to_string()))
    }
}
