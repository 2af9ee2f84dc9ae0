//! Fast stirring against the reaction-diffusion limit.
//!
//! The sexual model runs on a ring of `length / epsilon` columns and a few
//! rows, with nearest-neighbour exchanges at rate `epsilon^-2`. Space is
//! scaled by `epsilon`, so the column density should follow
//! `u_t = u_xx + u(beta u (1 - u) - 1)`. The initial occupied arc covers
//! half the ring; the configuration is symmetric about the arc's centre,
//! so the ring folds onto a half-length line with reflecting ends, which
//! is what the PDE solves.

use std::sync::Arc;

use rand::Rng;

use crate::engine::{Engine, Simulation, StirringSpec};
use crate::error::{Error, Result};
use crate::lattice::{DispersalKernel, RandomStream, StateGrid, TorusGeometry};
use crate::models::Sexual;
use crate::pde::{integrate_pde, sexual_roots, PdeState, Reaction};

#[derive(Debug, Clone, PartialEq)]
pub struct StirringSetup {
    /// Ring circumference in PDE units.
    pub length: f64,
    pub rows: usize,
    pub horizon: f64,
    /// Coarse-graining block width in PDE units.
    pub block: f64,
    pub seed: u64,
}

impl Default for StirringSetup {
    fn default() -> Self {
        Self {
            length: 40.0,
            rows: 4,
            horizon: 10.0,
            block: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StirringComparison {
    pub beta: f64,
    pub epsilon: f64,
    /// Occupied fraction at the start and at the horizon.
    pub sim_mean: (f64, f64),
    pub pde_mean: (f64, f64),
    /// Block-averaged profiles at the horizon, from the arc centre outwards.
    pub sim_profile: Vec<f64>,
    pub pde_profile: Vec<f64>,
    /// Distance from the centre to the first block below half the
    /// occupied density, if the profile has a front.
    pub sim_front: Option<f64>,
    pub pde_front: Option<f64>,
    pub initial_front: f64,
}

impl StirringComparison {
    /// The occupied mass moved the same way in both.
    pub fn direction_agrees(&self) -> bool {
        let sim = self.sim_mean.1 - self.sim_mean.0;
        let pde = self.pde_mean.1 - self.pde_mean.0;
        sim.signum() == pde.signum()
    }

    pub fn front_agrees(&self) -> bool {
        self.sim_front.is_some() == self.pde_front.is_some()
    }

    pub fn max_profile_gap(&self) -> f64 {
        self.sim_profile
            .iter()
            .zip(&self.pde_profile)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn csv_header() -> &'static str {
        "beta,epsilon,sim_mean_0,sim_mean_t,pde_mean_0,pde_mean_t,sim_front,pde_front,max_gap,direction_agrees,front_agrees"
    }

    pub fn csv_row(&self) -> String {
        let front = |f: Option<f64>| f.map_or("none".to_string(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.beta,
            self.epsilon,
            self.sim_mean.0,
            self.sim_mean.1,
            self.pde_mean.0,
            self.pde_mean.1,
            front(self.sim_front),
            front(self.pde_front),
            self.max_profile_gap(),
            self.direction_agrees(),
            self.front_agrees()
        )
    }
}

fn blocks(values: &[f64], per_block: usize) -> Vec<f64> {
    values
        .chunks_exact(per_block)
        .map(|c| c.iter().sum::<f64>() / per_block as f64)
        .collect()
}

fn front(profile: &[f64], level: f64, block: f64) -> Option<f64> {
    let first_low = profile.iter().position(|v| *v < level)?;
    // A front needs occupied mass behind it.
    (first_low > 0).then_some(first_low as f64 * block)
}

/// Runs one particle system and the matching PDE.
pub fn compare_stirring(
    beta: f64,
    epsilon: f64,
    setup: &StirringSetup,
) -> Result<StirringComparison> {
    let (_, occupied) = sexual_roots(beta)?;
    let columns = (setup.length / epsilon).round() as usize;
    let per_block = (setup.block / epsilon).round() as usize;
    if !columns.is_multiple_of(4) || per_block == 0 || !(columns / 2).is_multiple_of(per_block) {
        return Err(Error::Config(format!(
            "ring of {columns} columns does not split into blocks of {per_block}"
        )));
    }
    let geometry = TorusGeometry::new(columns, setup.rows)?;
    let arc = columns / 2;
    let mut rng = RandomStream::new(setup.seed, 0);
    let states = (0..geometry.sites())
        .map(|s| {
            let (x, _) = geometry.coords(s);
            (x < arc && rng.random::<f64>() < occupied) as u8
        })
        .collect();
    let grid = StateGrid::from_states(geometry, 2, states)?;
    let model = Arc::new(Sexual::new(beta, DispersalKernel::nearest())?);
    let mut engine = Engine::new(model, grid)?.with_stirring(StirringSpec::new(epsilon)?);
    let start = engine.grid().fractions()[1];
    engine.advance_to(setup.horizon, &mut rng);
    let end = engine.grid().fractions()[1];

    // Fold the ring about the arc centre: column pairs at equal distance.
    let centre = columns / 4;
    let folded: Vec<f64> = (0..arc)
        .map(|j| {
            let right = (centre + j) % columns;
            let left = (centre + columns - 1 - j) % columns;
            let occ = (0..setup.rows)
                .map(|y| {
                    engine.grid().get(geometry.index(right, y)) as usize
                        + engine.grid().get(geometry.index(left, y)) as usize
                })
                .sum::<usize>();
            occ as f64 / (2 * setup.rows) as f64
        })
        .collect();

    // Two PDE cells per column.
    let reaction = Reaction::Sexual { beta };
    let dx = epsilon / 2.0;
    let cells = 2 * arc;
    let values = (0..cells)
        .map(|i| if i < cells / 2 { occupied } else { 0.0 })
        .collect();
    let mut pde = PdeState::new(1, dx, reaction.default_dt(dx), values)?;
    let pde_start = pde.mean(0);
    integrate_pde(&reaction, &mut pde, setup.horizon)?;

    let sim_profile = blocks(&folded, per_block);
    let pde_profile = blocks(&pde.component(0), 2 * per_block);
    let level = occupied / 2.0;
    Ok(StirringComparison {
        beta,
        epsilon,
        sim_mean: (start, end),
        pde_mean: (pde_start, pde.mean(0)),
        sim_front: front(&sim_profile, level, setup.block),
        pde_front: front(&pde_profile, level, setup.block),
        sim_profile,
        pde_profile,
        initial_front: setup.length / 4.0,
    })
}
