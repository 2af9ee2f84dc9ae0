use rand::Rng;

use super::{
    accept_or_reject, check_rates, incoming_weight, Action, FlipRate, Proposal, SiteModel,
};
use crate::error::Result;
use crate::lattice::{DispersalKernel, RandomStream, SiteIndex, StateGrid};

/// Which occupied states a newborn may overwrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overgrowth {
    /// Births land only on vacant sites (competing contact processes).
    VacantOnly,
    /// A type `i` birth replaces any state `j < i` (grass, bushes, trees).
    Hierarchy,
}

/// Two-type contact process: state 0 vacant, 1 and 2 the two types.
///
/// A type `i` individual dies at rate `death[i-1]` and gives birth at rate
/// `birth[i-1]`, sending the offspring to `x + y` with `y` drawn from its
/// own kernel.
#[derive(Debug, Clone)]
pub struct CompetingContact {
    birth: [f64; 2],
    death: [f64; 2],
    kernels: [DispersalKernel; 2],
    rule: Overgrowth,
    bounds: [f64; 3],
}

impl CompetingContact {
    pub fn new(
        birth: [f64; 2],
        death: [f64; 2],
        kernels: [DispersalKernel; 2],
        rule: Overgrowth,
    ) -> Result<Self> {
        check_rates("contact birth", &birth)?;
        check_rates("contact death", &death)?;
        Ok(Self {
            birth,
            death,
            kernels,
            rule,
            bounds: [0.0, birth[0] + death[0], birth[1] + death[1]],
        })
    }

    /// Same kernel for both types.
    pub fn with_kernel(
        birth: [f64; 2],
        death: [f64; 2],
        kernel: DispersalKernel,
        rule: Overgrowth,
    ) -> Result<Self> {
        Self::new(birth, death, [kernel.clone(), kernel], rule)
    }

    pub fn rule(&self) -> Overgrowth {
        self.rule
    }

    #[inline]
    fn can_overwrite(&self, parent: u8, target: u8) -> bool {
        match self.rule {
            Overgrowth::VacantOnly => target == 0,
            Overgrowth::Hierarchy => target < parent,
        }
    }
}

impl SiteModel for CompetingContact {
    fn name(&self) -> &'static str {
        match self.rule {
            Overgrowth::VacantOnly => "competing-contact",
            Overgrowth::Hierarchy => "grass-bushes-trees",
        }
    }

    fn alphabet(&self) -> usize {
        3
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        let parent = grid.get(site);
        debug_assert!(parent > 0, "vacant sites carry no clock");
        let k = (parent - 1) as usize;
        let (delta, beta) = (self.death[k], self.birth[k]);
        if rng.random::<f64>() * (delta + beta) < delta {
            return Proposal::new(Action::Set { site, state: 0 }, delta, delta);
        }
        let (dx, dy) = self.kernels[k].sample(rng);
        let target = grid.geometry().offset(site, dx, dy);
        let action = Action::Set {
            site: target,
            state: parent,
        };
        accept_or_reject(
            action,
            self.can_overwrite(parent, grid.get(target)),
            beta,
            beta,
        )
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        let state = grid.get(site);
        let mut rates = Vec::with_capacity(2);
        if state > 0 {
            rates.push(FlipRate {
                to: 0,
                rate: self.death[(state - 1) as usize],
            });
        }
        for parent in 1..=2u8 {
            if parent != state && self.can_overwrite(parent, state) {
                let k = (parent - 1) as usize;
                rates.push(FlipRate {
                    to: parent,
                    rate: self.birth[k] * incoming_weight(grid, site, &self.kernels[k], parent),
                });
            }
        }
        rates
    }
}
