//! Model registry: canonical names, parameter schemas and defaults.
//!
//! Defaults are the values used in the figures the models were introduced
//! with. Host-pathogen and Prisoner's Dilemma crowding/migration defaults
//! are our own choices (the source gives none).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::voter::{cyclic_matrix, SILVERTOWN};
use super::{
    Catalyst, Colicin, CompetingContact, HostPathogen, ModelSpec, Overgrowth, PrisonersDilemma,
    Sexual, Voter,
};
use crate::error::{Error, Result};
use crate::lattice::DispersalKernel;
use crate::ode::OdeSystem;
use crate::pde::Reaction;

pub const MODEL_NAMES: [&str; 9] = [
    "competing-contact",
    "grass-bushes-trees",
    "host-pathogen",
    "sexual",
    "catalyst",
    "colicin2",
    "colicin3",
    "voter",
    "prisoners-dilemma",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Number(f64),
    List(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

pub type ParamSet = BTreeMap<String, ParamValue>;

pub fn model_names() -> &'static [&'static str] {
    &MODEL_NAMES
}

/// Accepted parameter keys for a model.
pub fn param_names(model: &str) -> Result<&'static [&'static str]> {
    Ok(match model {
        "competing-contact" | "grass-bushes-trees" => &["beta1", "beta2", "delta1", "delta2"],
        "host-pathogen" => &["alpha", "gamma1", "gamma2", "gamma3"],
        "sexual" => &["beta"],
        "catalyst" => &["p", "q", "r", "o2_per_ordered_pair"],
        "colicin2" => &["beta1", "beta2", "delta1", "delta2", "gamma"],
        "colicin3" => &[
            "beta1", "beta2", "beta3", "delta1", "delta2", "delta3", "gamma1", "gamma2",
        ],
        "voter" => &["betas", "lambda", "silvertown"],
        "prisoners-dilemma" => &["a", "b", "c", "d", "kappa", "nu"],
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// Parses `nearest` or `box:L`.
pub fn parse_kernel(spec: &str) -> Result<DispersalKernel> {
    match spec.trim() {
        "nearest" => Ok(DispersalKernel::nearest()),
        s => {
            let range = s
                .strip_prefix("box:")
                .and_then(|l| l.parse::<u32>().ok())
                .ok_or_else(|| {
                    Error::Model(format!("unknown kernel `{s}` (use nearest or box:L)"))
                })?;
            DispersalKernel::box_kernel(range).map_err(|e| Error::Model(e.to_string()))
        }
    }
}

/// Numeric defaults per model. Catalyst `q` defaults to `2 (1 - p)`.
const DEFAULTS: &[(&str, &[(&str, f64)])] = &[
    (
        "competing-contact",
        &[
            ("beta1", 3.9),
            ("beta2", 2.0),
            ("delta1", 2.0),
            ("delta2", 1.0),
        ],
    ),
    (
        "grass-bushes-trees",
        &[
            ("beta1", 5.0),
            ("beta2", 2.0),
            ("delta1", 1.0),
            ("delta2", 1.0),
        ],
    ),
    (
        "host-pathogen",
        &[
            ("alpha", 4.0),
            ("gamma1", 0.5),
            ("gamma2", 2.0),
            ("gamma3", 1.2),
        ],
    ),
    ("sexual", &[("beta", 5.0)]),
    ("catalyst", &[("p", 0.45), ("r", f64::INFINITY)]),
    (
        "colicin2",
        &[
            ("beta1", 3.0),
            ("beta2", 4.0),
            ("delta1", 1.0),
            ("delta2", 1.0),
            ("gamma", 2.5),
        ],
    ),
    (
        "colicin3",
        &[
            ("beta1", 3.0),
            ("beta2", 3.2),
            ("beta3", 4.0),
            ("delta1", 1.0),
            ("delta2", 1.0),
            ("delta3", 1.0),
            ("gamma1", 3.0),
            ("gamma2", 0.5),
        ],
    ),
    (
        "prisoners-dilemma",
        &[
            ("a", -0.6),
            ("b", 0.9),
            ("c", -0.9),
            ("d", 0.7),
            ("kappa", 0.1),
            ("nu", 1.0),
        ],
    ),
];

struct Params<'a> {
    model: &'a str,
    values: &'a ParamSet,
}

impl<'a> Params<'a> {
    fn new(model: &'a str, values: &'a ParamSet) -> Result<Self> {
        let allowed = param_names(model)?;
        if let Some(bad) = values.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Model(format!(
                "{model}: unknown parameter `{bad}` (expected one of {allowed:?})"
            )));
        }
        Ok(Self { model, values })
    }

    fn default(&self, key: &str) -> Option<f64> {
        if self.model == "catalyst" && key == "q" {
            return self.get("p").ok().map(|p| 2.0 * (1.0 - p));
        }
        DEFAULTS
            .iter()
            .find(|(m, _)| *m == self.model)
            .and_then(|(_, d)| d.iter().find(|(k, _)| *k == key))
            .map(|(_, v)| *v)
    }

    fn get(&self, key: &str) -> Result<f64> {
        match self.values.get(key) {
            None => self
                .default(key)
                .ok_or_else(|| Error::Model(format!("{}: missing parameter `{key}`", self.model))),
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(other) => Err(Error::Model(format!(
                "{}: `{key}` must be a number, got {other:?}",
                self.model
            ))),
        }
    }

    fn pair(&self, a: &str, b: &str) -> Result<[f64; 2]> {
        Ok([self.get(a)?, self.get(b)?])
    }

    fn triple(&self, a: &str, b: &str, c: &str) -> Result<[f64; 3]> {
        Ok([self.get(a)?, self.get(b)?, self.get(c)?])
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.values.get(key) {
            None => Ok(false),
            Some(ParamValue::Bool(v)) => Ok(*v),
            Some(other) => Err(Error::Model(format!(
                "{}: `{key}` must be true or false, got {other:?}",
                self.model
            ))),
        }
    }
}

/// Value of a numeric parameter after defaults are applied.
pub fn resolved_param(model: &str, params: &ParamSet, key: &str) -> Result<f64> {
    Params::new(model, params)?.get(key)
}

/// Builds a model from its registry name, parameters and kernel spec.
pub fn build_model(name: &str, params: &ParamSet, kernel: &str) -> Result<ModelSpec> {
    let p = Params::new(name, params)?;
    let kernel = parse_kernel(kernel)?;
    let spec = match name {
        "competing-contact" | "grass-bushes-trees" => {
            let rule = if name == "competing-contact" {
                Overgrowth::VacantOnly
            } else {
                Overgrowth::Hierarchy
            };
            ModelSpec::Site(Arc::new(CompetingContact::with_kernel(
                p.pair("beta1", "beta2")?,
                p.pair("delta1", "delta2")?,
                kernel,
                rule,
            )?))
        }
        "host-pathogen" => ModelSpec::Site(Arc::new(HostPathogen::new(
            p.get("alpha")?,
            p.triple("gamma1", "gamma2", "gamma3")?,
            kernel,
        )?)),
        "sexual" => ModelSpec::Site(Arc::new(Sexual::new(p.get("beta")?, kernel)?)),
        "catalyst" => ModelSpec::Site(Arc::new(Catalyst::new(
            p.get("p")?,
            p.get("q")?,
            p.get("r")?,
            p.flag("o2_per_ordered_pair")?,
        )?)),
        "colicin2" => ModelSpec::Site(Arc::new(Colicin::two_species(
            p.pair("beta1", "beta2")?,
            p.pair("delta1", "delta2")?,
            p.get("gamma")?,
            kernel,
        )?)),
        "colicin3" => ModelSpec::Site(Arc::new(Colicin::three_species(
            p.triple("beta1", "beta2", "beta3")?,
            p.triple("delta1", "delta2", "delta3")?,
            p.pair("gamma1", "gamma2")?,
            kernel,
        )?)),
        "voter" => ModelSpec::Site(Arc::new(Voter::new(voter_matrix(&p)?, kernel)?)),
        "prisoners-dilemma" => ModelSpec::Counts(PrisonersDilemma::new(
            [p.get("a")?, p.get("b")?, p.get("c")?, p.get("d")?],
            p.get("kappa")?,
            p.get("nu")?,
        )?),
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    Ok(spec)
}

/// The reaction terms of the reaction-diffusion limit. Only the sexual and
/// catalyst models have one.
pub fn reaction(name: &str, params: &ParamSet) -> Result<Reaction> {
    let p = Params::new(name, params)?;
    let r = match name {
        "sexual" => Reaction::Sexual {
            beta: p.get("beta")?,
        },
        "catalyst" => Reaction::Catalyst {
            p: p.get("p")?,
            q: p.get("q")?,
            r: p.get("r")?,
        },
        other => {
            return Err(Error::Model(format!(
                "{other} has no reaction-diffusion limit (use sexual or catalyst)"
            )))
        }
    };
    r.validate()?;
    Ok(r)
}

/// The mean-field ODE of a registered model, with the same defaults.
pub fn mean_field(name: &str, params: &ParamSet) -> Result<OdeSystem> {
    let p = Params::new(name, params)?;
    let system =
        match name {
            "competing-contact" => OdeSystem::CompetingContact {
                birth: p.pair("beta1", "beta2")?,
                death: p.pair("delta1", "delta2")?,
            },
            "grass-bushes-trees" => OdeSystem::GrassBushesTrees {
                birth: p.pair("beta1", "beta2")?,
                death: p.pair("delta1", "delta2")?,
            },
            "host-pathogen" => OdeSystem::HostPathogen {
                infection: p.get("alpha")?,
                replacement: p.triple("gamma1", "gamma2", "gamma3")?,
            },
            "sexual" => OdeSystem::Sexual {
                beta: p.get("beta")?,
            },
            "colicin2" => OdeSystem::Colicin2 {
                birth: p.pair("beta1", "beta2")?,
                death: p.pair("delta1", "delta2")?,
                toxin: p.get("gamma")?,
            },
            "colicin3" => OdeSystem::Colicin3 {
                birth: p.triple("beta1", "beta2", "beta3")?,
                death: p.triple("delta1", "delta2", "delta3")?,
                toxin: p.pair("gamma1", "gamma2")?,
            },
            "voter" => OdeSystem::Voter {
                lambda: voter_matrix(&p)?,
            },
            "prisoners-dilemma" => OdeSystem::HawkDove {
                payoff: [p.get("a")?, p.get("b")?, p.get("c")?, p.get("d")?],
                crowding: p.get("kappa")?,
            },
            "catalyst" => return Err(Error::Model(
                "catalyst: the mean-field equations are handled by the reaction-diffusion solver"
                    .into(),
            )),
            other => return Err(Error::UnknownModel(other.to_string())),
        };
    system.validate().map_err(|e| Error::Model(e.to_string()))?;
    Ok(system)
}

fn voter_matrix(p: &Params<'_>) -> Result<Vec<Vec<f64>>> {
    let given = ["betas", "lambda", "silvertown"]
        .iter()
        .filter(|k| p.values.contains_key(**k))
        .count();
    if given > 1 {
        return Err(Error::Model(
            "voter: give only one of `betas`, `lambda`, `silvertown`".into(),
        ));
    }
    if p.flag("silvertown")? {
        return Ok(SILVERTOWN.iter().map(|r| r.to_vec()).collect());
    }
    match p.values.get("lambda") {
        Some(ParamValue::Matrix(m)) => return Ok(m.clone()),
        Some(other) => {
            return Err(Error::Model(format!(
                "voter: `lambda` must be a matrix, got {other:?}"
            )))
        }
        None => {}
    }
    let betas = match p.values.get("betas") {
        None => vec![0.3, 0.7, 1.0],
        Some(ParamValue::List(v)) => v.clone(),
        Some(other) => {
            return Err(Error::Model(format!(
                "voter: `betas` must be a list, got {other:?}"
            )))
        }
    };
    let betas: [f64; 3] = betas
        .try_into()
        .map_err(|_| Error::Model("voter: `betas` needs exactly three rates".into()))?;
    Ok(cyclic_matrix(betas))
}
