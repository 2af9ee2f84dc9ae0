//! The model zoo.
//!
//! Every single-occupancy model implements [`SiteModel`]. A model exposes
//! two views of the same dynamics:
//!
//! * [`SiteModel::flip_rates`] lists the exact rate at which a given site
//!   changes to each other state (plus [`SiteModel::pair_rates`] for the
//!   pair reactions of the catalyst). This is the textbook description and
//!   is what tests compare against.
//! * [`SiteModel::propose`] is what the engine runs. A site in state `s`
//!   carries a clock of constant rate `bounds()[s]`; when it rings the model
//!   picks a channel and returns a [`Proposal`] that the engine accepts with
//!   probability `actual / bound`. Births are attached to the parent, so a
//!   configuration in which nothing can happen has total rate zero.
//!
//! State codes always start at 0. For models whose types are numbered from
//! 1 (host-pathogen, voter) code `c` stands for type `c + 1`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::lattice::{RandomStream, SiteIndex, StateGrid, TrackedGrid};

mod catalyst;
mod colicin;
mod contact;
mod host_pathogen;
mod prisoners;
mod registry;
mod sexual;
mod voter;

pub use catalyst::{instantaneous_reaction, Catalyst, CO, OXYGEN, VACANT};
pub use colicin::Colicin;
pub use contact::{CompetingContact, Overgrowth};
pub use host_pathogen::HostPathogen;
pub use prisoners::{CountAction, IndividualRates, PrisonersDilemma};
pub use registry::{
    build_model, mean_field, model_names, param_names, parse_kernel, reaction, resolved_param,
    ParamSet, ParamValue, MODEL_NAMES,
};
pub use sexual::Sexual;
pub use voter::{cyclic_matrix, Voter, SILVERTOWN};

/// A state change produced by an accepted proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Set {
        site: SiteIndex,
        state: u8,
    },
    SetPair {
        a: SiteIndex,
        sa: u8,
        b: SiteIndex,
        sb: u8,
    },
    Swap {
        a: SiteIndex,
        b: SiteIndex,
    },
}

impl Action {
    pub fn apply(&self, grid: &mut TrackedGrid) {
        match *self {
            Action::Set { site, state } => grid.set(site, state),
            Action::SetPair { a, sa, b, sb } => {
                grid.set(a, sa);
                grid.set(b, sb);
            }
            Action::Swap { a, b } => grid.swap(a, b),
        }
    }
}

/// One thinning proposal: the engine applies `action` with probability
/// `actual / bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub action: Action,
    pub actual: f64,
    pub bound: f64,
}

impl Proposal {
    #[inline]
    pub fn new(action: Action, actual: f64, bound: f64) -> Self {
        Self {
            action,
            actual,
            bound,
        }
    }
}

/// Rate at which a site flips to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipRate {
    pub to: u8,
    pub rate: f64,
}

/// Rate of a joint transition of `site` and its neighbour `other`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRate {
    pub site: SiteIndex,
    pub other: SiteIndex,
    pub to: (u8, u8),
    pub rate: f64,
}

pub trait SiteModel: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn alphabet(&self) -> usize;

    /// Total proposal rate carried by a site in each state.
    fn bounds(&self) -> &[f64];

    /// Called when the clock of `site` rings.
    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal;

    /// Exact single-site transition rates out of the current state of `site`.
    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate>;

    /// Pair transitions on the edges owned by `site` (its +x and +y edges).
    fn pair_rates(&self, _grid: &StateGrid, _site: SiteIndex) -> Vec<PairRate> {
        Vec::new()
    }

    /// Instantaneous follow-up to an accepted action (infinite-rate reactions).
    fn settle(&self, _grid: &mut TrackedGrid, _action: &Action, _rng: &mut RandomStream) {}
}

/// A built model, ready to simulate.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Site(Arc<dyn SiteModel>),
    Counts(PrisonersDilemma),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Site(m) => m.name(),
            ModelSpec::Counts(_) => "prisoners-dilemma",
        }
    }

    pub fn as_site(&self) -> Option<&Arc<dyn SiteModel>> {
        match self {
            ModelSpec::Site(m) => Some(m),
            ModelSpec::Counts(_) => None,
        }
    }
}

/// `sum_y p(y) [state(x - y) = state]`: the weight with which parents of
/// type `state` send offspring onto `site`.
#[inline]
pub(crate) fn incoming_weight(
    grid: &StateGrid,
    site: SiteIndex,
    kernel: &crate::lattice::DispersalKernel,
    state: u8,
) -> f64 {
    let g = grid.geometry();
    kernel
        .offsets()
        .iter()
        .zip(kernel.probabilities())
        .filter(|(&(dx, dy), _)| grid.get(g.offset(site, -dx, -dy)) == state)
        .map(|(_, p)| p)
        .sum()
}

#[inline]
pub(crate) fn accept_or_reject(action: Action, accepted: bool, rate: f64, bound: f64) -> Proposal {
    Proposal::new(action, if accepted { rate } else { 0.0 }, bound)
}

pub(crate) fn check_rates(what: &str, rates: &[f64]) -> crate::error::Result<()> {
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(crate::error::Error::Model(format!(
            "{what}: rates must be finite and non-negative, got {rates:?}"
        )));
    }
    Ok(())
}
