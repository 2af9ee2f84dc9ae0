use rand::Rng;

use super::check_rates;
use crate::error::{Error, Result};
use crate::lattice::{square_fraction, CountGrid, RandomStream, SiteIndex};

/// Spatial Prisoner's Dilemma with many hawks and doves per site.
///
/// Per individual: migration to a uniform nearest neighbour at `nu`;
/// crowding death at `kappa (hawks + doves)` of its own site; a game step
/// at `a p + b (1 - p)` for hawks and `c p + d (1 - p)` for doves, where
/// `p` is the hawk fraction in the surrounding 5x5 square. A positive
/// game rate is a birth at the same site, a negative one a death at the
/// absolute rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PrisonersDilemma {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub kappa: f64,
    pub nu: f64,
}

/// Change to a [`CountGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountAction {
    Migrate {
        from: SiteIndex,
        to: SiteIndex,
        hawk: bool,
    },
    Birth {
        site: SiteIndex,
        hawk: bool,
    },
    Death {
        site: SiteIndex,
        hawk: bool,
    },
}

/// Rates felt by one individual at a site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndividualRates {
    pub migration: f64,
    pub crowding_death: f64,
    /// Signed game rate; 0 when the 5x5 square is empty.
    pub game: f64,
}

impl PrisonersDilemma {
    pub fn new(payoff: [f64; 4], kappa: f64, nu: f64) -> Result<Self> {
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("payoffs must be finite".into()));
        }
        check_rates("prisoners-dilemma", &[kappa, nu])?;
        let [a, b, c, d] = payoff;
        Ok(Self {
            a,
            b,
            c,
            d,
            kappa,
            nu,
        })
    }

    /// The payoff matrix `a = -0.6, b = 0.9, c = -0.9, d = 0.7` with the
    /// default crowding `kappa = 0.1` and migration `nu = 1`.
    pub fn standard() -> Self {
        Self::new([-0.6, 0.9, -0.9, 0.7], 0.1, 1.0).expect("valid defaults")
    }

    pub fn game_rate(&self, hawk: bool, p: Option<f64>) -> f64 {
        match p {
            None => 0.0,
            Some(p) if hawk => self.a * p + self.b * (1.0 - p),
            Some(p) => self.c * p + self.d * (1.0 - p),
        }
    }

    /// Bound on `|game rate|` over all `p` in `[0, 1]`.
    pub fn game_bound(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn individual_rates(
        &self,
        grid: &CountGrid,
        site: SiteIndex,
        hawk: bool,
    ) -> IndividualRates {
        IndividualRates {
            migration: self.nu,
            crowding_death: self.kappa * grid.occupancy(site) as f64,
            game: self.game_rate(hawk, square_fraction(grid, site)),
        }
    }

    /// Per-individual proposal rate when no site holds more than
    /// `max_occupancy` individuals.
    pub fn individual_bound(&self, max_occupancy: u32) -> f64 {
        self.nu + self.kappa * max_occupancy as f64 + self.game_bound()
    }

    /// Proposal for one individual at `site`. Returns the action, its
    /// actual rate and the channel bound.
    pub fn propose(
        &self,
        grid: &CountGrid,
        site: SiteIndex,
        hawk: bool,
        max_occupancy: u32,
        rng: &mut RandomStream,
    ) -> (CountAction, f64, f64) {
        let crowd_bound = self.kappa * max_occupancy as f64;
        let u = rng.random::<f64>() * self.individual_bound(max_occupancy);
        if u < self.nu {
            let to = grid.geometry().nearest(site)[rng.random_range(0..4)];
            return (
                CountAction::Migrate {
                    from: site,
                    to,
                    hawk,
                },
                self.nu,
                self.nu,
            );
        }
        if u < self.nu + crowd_bound {
            let rate = self.kappa * grid.occupancy(site) as f64;
            return (CountAction::Death { site, hawk }, rate, crowd_bound);
        }
        let g = self.game_rate(hawk, square_fraction(grid, site));
        let action = if g >= 0.0 {
            CountAction::Birth { site, hawk }
        } else {
            CountAction::Death { site, hawk }
        };
        (action, g.abs(), self.game_bound())
    }
}
