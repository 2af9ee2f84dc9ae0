use rand::Rng;

use super::{accept_or_reject, check_rates, Action, FlipRate, Proposal, SiteModel};
use crate::error::{Error, Result};
use crate::lattice::{DispersalKernel, RandomStream, SiteIndex, StateGrid};

/// Sexual reproduction: `1 -> 0` at rate 1; a vacant site picks two
/// distinct neighbours at rate `beta` and becomes occupied if both are,
/// i.e. `0 -> 1` at `beta k(k-1) / (n(n-1))`.
#[derive(Debug, Clone)]
pub struct Sexual {
    beta: f64,
    kernel: DispersalKernel,
    bounds: [f64; 2],
}

impl Sexual {
    pub fn new(beta: f64, kernel: DispersalKernel) -> Result<Self> {
        check_rates("sexual", &[beta])?;
        if !kernel.is_uniform() || kernel.len() < 2 {
            return Err(Error::Model(
                "sexual model needs a uniform neighbourhood of at least two sites".into(),
            ));
        }
        Ok(Self {
            beta,
            kernel,
            bounds: [beta, 1.0],
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `beta k (k-1) / (n (n-1))`.
    pub fn birth_rate(&self, occupied: usize) -> f64 {
        let n = self.kernel.len() as f64;
        let k = occupied as f64;
        self.beta * k * (k - 1.0) / (n * (n - 1.0))
    }
}

impl SiteModel for Sexual {
    fn name(&self) -> &'static str {
        "sexual"
    }

    fn alphabet(&self) -> usize {
        2
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        if grid.get(site) == 1 {
            return Proposal::new(Action::Set { site, state: 0 }, 1.0, 1.0);
        }
        let n = self.kernel.len();
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let g = grid.geometry();
        let offsets = self.kernel.offsets();
        let occupied = |k: usize| grid.get(g.offset(site, offsets[k].0, offsets[k].1)) == 1;
        accept_or_reject(
            Action::Set { site, state: 1 },
            occupied(i) && occupied(j),
            self.beta,
            self.beta,
        )
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        if grid.get(site) == 1 {
            return vec![FlipRate { to: 0, rate: 1.0 }];
        }
        let g = grid.geometry();
        let k = self
            .kernel
            .offsets()
            .iter()
            .filter(|&&(dx, dy)| grid.get(g.offset(site, dx, dy)) == 1)
            .count();
        vec![FlipRate {
            to: 1,
            rate: self.birth_rate(k),
        }]
    }
}
