use super::{accept_or_reject, check_rates, Action, FlipRate, Proposal, SiteModel};
use crate::error::Result;
use crate::lattice::{neighbor_fractions, DispersalKernel, RandomStream, SiteIndex, StateGrid};

const HEALTHY: u8 = 0;
const INFECTED: u8 = 1;
const OTHER: u8 = 2;

/// Host-pathogen model. Codes: 0 healthy host (type 1), 1 infected host
/// (type 2), 2 competing species (type 3).
///
/// | transition | rate            |
/// |------------|-----------------|
/// | 1 -> 2     | `alpha f2`      |
/// | 2 -> 1     | `gamma2 (f1+f2)`|
/// | 3 -> 1     | `gamma3 (f1+f2)`|
/// | 1 -> 3     | `gamma1 f3`     |
/// | 2 -> 3     | `gamma2 f3`     |
#[derive(Debug, Clone)]
pub struct HostPathogen {
    alpha: f64,
    gamma: [f64; 3],
    kernel: DispersalKernel,
    bounds: [f64; 3],
}

impl HostPathogen {
    pub fn new(alpha: f64, gamma: [f64; 3], kernel: DispersalKernel) -> Result<Self> {
        check_rates("host-pathogen", &[alpha, gamma[0], gamma[1], gamma[2]])?;
        Ok(Self {
            alpha,
            gamma,
            kernel,
            bounds: [alpha.max(gamma[0]), gamma[1], gamma[2]],
        })
    }
}

impl SiteModel for HostPathogen {
    fn name(&self) -> &'static str {
        "host-pathogen"
    }

    fn alphabet(&self) -> usize {
        3
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        let (dx, dy) = self.kernel.sample(rng);
        let neighbor = grid.get(grid.geometry().offset(site, dx, dy));
        let [g1, g2, g3] = self.gamma;
        match grid.get(site) {
            HEALTHY => {
                let bound = self.bounds[0];
                match neighbor {
                    INFECTED => Proposal::new(
                        Action::Set {
                            site,
                            state: INFECTED,
                        },
                        self.alpha,
                        bound,
                    ),
                    OTHER => Proposal::new(Action::Set { site, state: OTHER }, g1, bound),
                    _ => accept_or_reject(
                        Action::Set {
                            site,
                            state: HEALTHY,
                        },
                        false,
                        0.0,
                        bound,
                    ),
                }
            }
            // Replaced by offspring of a random neighbour; infected parents
            // produce healthy offspring.
            INFECTED => {
                let to = if neighbor == OTHER { OTHER } else { HEALTHY };
                Proposal::new(Action::Set { site, state: to }, g2, g2)
            }
            _ => accept_or_reject(
                Action::Set {
                    site,
                    state: HEALTHY,
                },
                neighbor != OTHER,
                g3,
                g3,
            ),
        }
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        let f = neighbor_fractions(grid, site, &self.kernel);
        let [g1, g2, g3] = self.gamma;
        let host = f[0] + f[1];
        match grid.get(site) {
            HEALTHY => vec![
                FlipRate {
                    to: INFECTED,
                    rate: self.alpha * f[1],
                },
                FlipRate {
                    to: OTHER,
                    rate: g1 * f[2],
                },
            ],
            INFECTED => vec![
                FlipRate {
                    to: HEALTHY,
                    rate: g2 * host,
                },
                FlipRate {
                    to: OTHER,
                    rate: g2 * f[2],
                },
            ],
            _ => vec![FlipRate {
                to: HEALTHY,
                rate: g3 * host,
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGeometry;
    use crate::models::testing;

    fn grid_with_neighbors(centre: u8, neighbors: [u8; 4]) -> (StateGrid, SiteIndex) {
        let g = TorusGeometry::new(5, 5).unwrap();
        let mut grid = StateGrid::new(g, 3).unwrap();
        let x = g.index(2, 2);
        grid.set(x, centre);
        for (n, s) in g.nearest(x).into_iter().zip(neighbors) {
            grid.set(n, s);
        }
        (grid, x)
    }

    #[test]
    fn infected_site_rates() {
        let m = HostPathogen::new(4.0, [0.5, 2.0, 1.2], DispersalKernel::nearest()).unwrap();
        // f = (0.5, 0.25, 0.25)
        let (grid, x) = grid_with_neighbors(INFECTED, [HEALTHY, HEALTHY, INFECTED, OTHER]);
        let r = m.flip_rates(&grid, x);
        assert_eq!(
            r[0],
            FlipRate {
                to: HEALTHY,
                rate: 1.5
            }
        );
        assert_eq!(
            r[1],
            FlipRate {
                to: OTHER,
                rate: 0.5
            }
        );
    }

    #[test]
    fn healthy_without_infected_neighbors() {
        let m = HostPathogen::new(4.0, [0.5, 2.0, 1.2], DispersalKernel::nearest()).unwrap();
        let (grid, x) = grid_with_neighbors(HEALTHY, [HEALTHY, OTHER, HEALTHY, OTHER]);
        assert_eq!(m.flip_rates(&grid, x)[0].rate, 0.0);
    }

    #[test]
    fn other_species_replaced_by_hosts() {
        let m = HostPathogen::new(4.0, [0.5, 2.0, 1.4], DispersalKernel::nearest()).unwrap();
        let (grid, x) = grid_with_neighbors(OTHER, [HEALTHY, INFECTED, HEALTHY, INFECTED]);
        let r = m.flip_rates(&grid, x);
        assert!((r[0].rate - 1.4).abs() < 1e-15);
    }

    #[test]
    fn audit_and_thinning() {
        let m = HostPathogen::new(4.0, [0.5, 2.0, 1.2], DispersalKernel::nearest()).unwrap();
        testing::audit_bounds(&m, 10_000, 3);
        let mut rng = RandomStream::new(8, 0);
        let grid = testing::random_grid(3, 3, 3, &mut rng);
        testing::thinning_matches_flip_rates(&m, &grid, 4);
    }
}
