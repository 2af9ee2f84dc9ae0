use rand::Rng;

use super::{
    accept_or_reject, check_rates, incoming_weight, Action, FlipRate, Proposal, SiteModel,
};
use crate::error::{Error, Result};
use crate::lattice::{DispersalKernel, RandomStream, SiteIndex, StateGrid};

/// Colicin competition: a contact process with `k` types in which the last
/// type is sensitive to toxins made by the others.
///
/// `0 -> i` at `beta_i f_i`; `i -> 0` at `delta_i` for producers and
/// `delta_k + sum_i gamma_i f_i` for the sensitive type.
///
/// With two types this is the producer/sensitive model; with three it is
/// the rock-paper-scissors model with two producers.
#[derive(Debug, Clone)]
pub struct Colicin {
    name: &'static str,
    birth: Vec<f64>,
    death: Vec<f64>,
    toxin: Vec<f64>,
    max_toxin: f64,
    kernel: DispersalKernel,
    bounds: Vec<f64>,
}

impl Colicin {
    pub fn new(
        birth: Vec<f64>,
        death: Vec<f64>,
        toxin: Vec<f64>,
        kernel: DispersalKernel,
    ) -> Result<Self> {
        let types = birth.len();
        if !(2..=3).contains(&types) || death.len() != types || toxin.len() != types - 1 {
            return Err(Error::Model(
                "colicin needs 2 or 3 types and one toxin rate per producer".into(),
            ));
        }
        check_rates("colicin birth", &birth)?;
        check_rates("colicin death", &death)?;
        check_rates("colicin toxin", &toxin)?;
        let max_toxin = toxin.iter().copied().fold(0.0, f64::max);
        let mut bounds = vec![0.0];
        for i in 0..types {
            let extra = if i == types - 1 { max_toxin } else { 0.0 };
            bounds.push(birth[i] + death[i] + extra);
        }
        Ok(Self {
            name: if types == 2 { "colicin2" } else { "colicin3" },
            birth,
            death,
            toxin,
            max_toxin,
            kernel,
            bounds,
        })
    }

    /// Producer (type 1) against sensitive (type 2).
    pub fn two_species(
        birth: [f64; 2],
        death: [f64; 2],
        gamma: f64,
        kernel: DispersalKernel,
    ) -> Result<Self> {
        Self::new(birth.to_vec(), death.to_vec(), vec![gamma], kernel)
    }

    /// Two producers (types 1, 2) against a sensitive type 3.
    pub fn three_species(
        birth: [f64; 3],
        death: [f64; 3],
        gamma: [f64; 2],
        kernel: DispersalKernel,
    ) -> Result<Self> {
        Self::new(birth.to_vec(), death.to_vec(), gamma.to_vec(), kernel)
    }

    fn types(&self) -> usize {
        self.birth.len()
    }

    fn sensitive(&self) -> u8 {
        self.types() as u8
    }
}

impl SiteModel for Colicin {
    fn name(&self) -> &'static str {
        self.name
    }

    fn alphabet(&self) -> usize {
        self.types() + 1
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        let state = grid.get(site);
        let k = (state - 1) as usize;
        let (beta, delta) = (self.birth[k], self.death[k]);
        let u = rng.random::<f64>() * self.bounds[state as usize];
        if u < delta {
            return Proposal::new(Action::Set { site, state: 0 }, delta, delta);
        }
        let g = grid.geometry();
        let (dx, dy) = self.kernel.sample(rng);
        let other = g.offset(site, dx, dy);
        if u < delta + beta {
            return accept_or_reject(
                Action::Set { site: other, state },
                grid.get(other) == 0,
                beta,
                beta,
            );
        }
        // Toxin channel, sensitive sites only.
        let neighbor = grid.get(other);
        let rate = if neighbor > 0 && neighbor < self.sensitive() {
            self.toxin[(neighbor - 1) as usize]
        } else {
            0.0
        };
        Proposal::new(Action::Set { site, state: 0 }, rate, self.max_toxin)
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        let state = grid.get(site);
        if state == 0 {
            return (1..=self.types() as u8)
                .map(|i| FlipRate {
                    to: i,
                    rate: self.birth[(i - 1) as usize]
                        * incoming_weight(grid, site, &self.kernel, i),
                })
                .collect();
        }
        let mut rate = self.death[(state - 1) as usize];
        if state == self.sensitive() {
            rate += self
                .toxin
                .iter()
                .enumerate()
                .map(|(i, g)| g * grid.neighbor_weight(site, &self.kernel, i as u8 + 1))
                .sum::<f64>();
        }
        vec![FlipRate { to: 0, rate }]
    }
}
