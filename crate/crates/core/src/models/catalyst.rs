use rand::Rng;

use super::{accept_or_reject, Action, FlipRate, PairRate, Proposal, SiteModel};
use crate::error::{Error, Result};
use crate::lattice::{RandomStream, SiteIndex, StateGrid, TrackedGrid};

pub const VACANT: u8 = 0;
pub const CO: u8 = 1;
pub const OXYGEN: u8 = 2;

/// Catalytic surface (CO oxidation) on the nearest-neighbour lattice.
///
/// * `0 -> 1` at rate `p` per vacant site;
/// * each unordered pair of adjacent vacant sites becomes `22` at rate
///   `q/4` (`q/2` with `o2_per_ordered_pair`);
/// * each adjacent `12` pair becomes `00` at rate `r/4`. With `r = inf`
///   the reaction is resolved immediately after every deposition.
///
/// O2 is proposed from a vacant site which picks one of its four
/// neighbours, so each endpoint of a vacant pair carries half of the pair
/// rate. Reactions are carried by the CO endpoint alone.
#[derive(Debug, Clone)]
pub struct Catalyst {
    p: f64,
    q: f64,
    r: f64,
    ordered_pairs: bool,
    o2_site_rate: f64,
    bounds: [f64; 3],
}

impl Catalyst {
    pub fn new(p: f64, q: f64, r: f64, ordered_pairs: bool) -> Result<Self> {
        if !(p.is_finite() && p >= 0.0 && q.is_finite() && q >= 0.0) || r.is_nan() || r < 0.0 {
            return Err(Error::Model(format!(
                "catalyst rates must be non-negative (p={p}, q={q}, r={r})"
            )));
        }
        let pair = if ordered_pairs { q / 2.0 } else { q / 4.0 };
        let o2_site_rate = 2.0 * pair;
        let co_rate = if r.is_finite() { r } else { 0.0 };
        Ok(Self {
            p,
            q,
            r,
            ordered_pairs,
            o2_site_rate,
            bounds: [p + o2_site_rate, co_rate, 0.0],
        })
    }

    /// The Ziff-Gulari-Barshad scaling: `q = 2(1 - p)`, `r = inf`.
    pub fn zgb(p: f64) -> Result<Self> {
        Self::new(p, 2.0 * (1.0 - p), f64::INFINITY, false)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn instantaneous(&self) -> bool {
        self.r.is_infinite()
    }

    /// Rate of `00 -> 22` on one unordered vacant pair.
    pub fn pair_deposition_rate(&self) -> f64 {
        self.o2_site_rate / 2.0
    }

    pub fn ordered_pairs(&self) -> bool {
        self.ordered_pairs
    }
}

/// Infinitely fast reaction of the particle just placed at `site`: if it
/// has an opposite-type nearest neighbour, one such neighbour is chosen
/// uniformly and both sites are emptied.
pub fn instantaneous_reaction(grid: &mut TrackedGrid, site: SiteIndex, rng: &mut RandomStream) {
    let own = grid.get(site);
    if own == VACANT {
        return;
    }
    let opposite = if own == CO { OXYGEN } else { CO };
    let neighbors = grid.grid().geometry().nearest(site);
    let mut partners = [0usize; 4];
    let mut n = 0;
    for nb in neighbors {
        if grid.get(nb) == opposite {
            partners[n] = nb;
            n += 1;
        }
    }
    if n > 0 {
        let chosen = partners[rng.random_range(0..n)];
        grid.set(site, VACANT);
        grid.set(chosen, VACANT);
    }
}

impl SiteModel for Catalyst {
    fn name(&self) -> &'static str {
        "catalyst"
    }

    fn alphabet(&self) -> usize {
        3
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        let g = grid.geometry();
        match grid.get(site) {
            VACANT => {
                if rng.random::<f64>() * self.bounds[0] < self.p {
                    return Proposal::new(Action::Set { site, state: CO }, self.p, self.p);
                }
                let other = g.nearest(site)[rng.random_range(0..4)];
                accept_or_reject(
                    Action::SetPair {
                        a: site,
                        sa: OXYGEN,
                        b: other,
                        sb: OXYGEN,
                    },
                    grid.get(other) == VACANT,
                    self.o2_site_rate,
                    self.o2_site_rate,
                )
            }
            CO => {
                let other = g.nearest(site)[rng.random_range(0..4)];
                accept_or_reject(
                    Action::SetPair {
                        a: site,
                        sa: VACANT,
                        b: other,
                        sb: VACANT,
                    },
                    grid.get(other) == OXYGEN,
                    self.r,
                    self.r,
                )
            }
            _ => unreachable!("oxygen sites carry no clock"),
        }
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        if grid.get(site) == VACANT {
            vec![FlipRate {
                to: CO,
                rate: self.p,
            }]
        } else {
            Vec::new()
        }
    }

    fn pair_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<PairRate> {
        let g = grid.geometry();
        let owned = [g.offset(site, 1, 0), g.offset(site, 0, 1)];
        let a = grid.get(site);
        owned
            .into_iter()
            .filter_map(|other| {
                let b = grid.get(other);
                if a == VACANT && b == VACANT {
                    Some(PairRate {
                        site,
                        other,
                        to: (OXYGEN, OXYGEN),
                        rate: self.pair_deposition_rate(),
                    })
                } else if self.r.is_finite() && ((a, b) == (CO, OXYGEN) || (a, b) == (OXYGEN, CO)) {
                    Some(PairRate {
                        site,
                        other,
                        to: (VACANT, VACANT),
                        rate: self.r / 4.0,
                    })
                } else {
                    None
                }
            })
            .collect()
    }

    fn settle(&self, grid: &mut TrackedGrid, action: &Action, rng: &mut RandomStream) {
        if !self.instantaneous() {
            return;
        }
        match *action {
            Action::Set { site, state: CO } => instantaneous_reaction(grid, site, rng),
            Action::SetPair {
                a,
                sa: OXYGEN,
                b,
                sb: OXYGEN,
            } => {
                instantaneous_reaction(grid, a, rng);
                instantaneous_reaction(grid, b, rng);
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGeometry;
    use crate::models::testing;

    #[test]
    fn deposition_and_pair_rates() {
        let m = Catalyst::new(0.45, 1.1, 2.0, false).unwrap();
        let g = TorusGeometry::new(4, 4).unwrap();
        let mut grid = StateGrid::new(g, 3).unwrap();
        assert_eq!(
            m.flip_rates(&grid, 0),
            vec![FlipRate { to: CO, rate: 0.45 }]
        );
        let pairs = m.pair_rates(&grid, 0);
        assert_eq!(pairs.len(), 2);
        assert!(pairs
            .iter()
            .all(|p| p.to == (OXYGEN, OXYGEN) && p.rate == 1.1 / 4.0));

        grid.set(1, CO);
        grid.set(2, OXYGEN);
        let pairs = m.pair_rates(&grid, 1);
        assert!(pairs.contains(&PairRate {
            site: 1,
            other: 2,
            to: (VACANT, VACANT),
            rate: 0.5
        }));
    }

    #[test]
    fn isolated_vacancy_gets_no_oxygen() {
        let m = Catalyst::zgb(0.45).unwrap();
        let g = TorusGeometry::new(4, 4).unwrap();
        let mut grid = StateGrid::filled(g, 3, CO).unwrap();
        grid.set(5, VACANT);
        let mut rng = RandomStream::new(1, 0);
        for _ in 0..1000 {
            let p = m.propose(&grid, 5, &mut rng);
            if let Action::SetPair { .. } = p.action {
                assert_eq!(p.actual, 0.0);
            }
        }
        assert!(m.pair_rates(&grid, 5).is_empty());
    }

    #[test]
    fn ordered_flag_doubles_oxygen_flux() {
        let a = Catalyst::new(0.4, 1.2, f64::INFINITY, false).unwrap();
        let b = Catalyst::new(0.4, 1.2, f64::INFINITY, true).unwrap();
        assert_eq!(b.pair_deposition_rate(), 2.0 * a.pair_deposition_rate());
    }

    #[test]
    fn no_reaction_without_partner() {
        let g = TorusGeometry::new(4, 4).unwrap();
        let mut t = TrackedGrid::new(StateGrid::new(g, 3).unwrap());
        t.set(5, CO);
        let mut rng = RandomStream::new(1, 0);
        instantaneous_reaction(&mut t, 5, &mut rng);
        assert_eq!(t.get(5), CO);
    }

    #[test]
    fn single_partner_always_reacts() {
        let g = TorusGeometry::new(4, 4).unwrap();
        let mut rng = RandomStream::new(1, 0);
        for _ in 0..100 {
            let mut t = TrackedGrid::new(StateGrid::new(g, 3).unwrap());
            t.set(g.index(1, 1), OXYGEN);
            t.set(g.index(2, 1), CO);
            instantaneous_reaction(&mut t, g.index(2, 1), &mut rng);
            assert_eq!(t.count(VACANT), 16);
        }
    }

    #[test]
    fn partner_chosen_uniformly() {
        let g = TorusGeometry::new(5, 5).unwrap();
        let x = g.index(2, 2);
        let nb = g.nearest(x);
        let mut rng = RandomStream::new(77, 0);
        let trials = 100_000;
        let mut hits = [0usize; 3];
        for _ in 0..trials {
            let mut t = TrackedGrid::new(StateGrid::new(g, 3).unwrap());
            for &s in &nb[..3] {
                t.set(s, OXYGEN);
            }
            t.set(x, CO);
            instantaneous_reaction(&mut t, x, &mut rng);
            let k = (0..3).find(|&k| t.get(nb[k]) == VACANT).unwrap();
            hits[k] += 1;
        }
        let p = 1.0 / 3.0;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for h in hits {
            assert!((h as f64 / trials as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn oxygen_atoms_resolve_in_order() {
        // O2 lands on (a, b); a has a CO neighbour, b has one too.
        let g = TorusGeometry::new(6, 6).unwrap();
        let m = Catalyst::zgb(0.5).unwrap();
        let (a, b) = (g.index(2, 2), g.index(3, 2));
        let mut t = TrackedGrid::new(StateGrid::new(g, 3).unwrap());
        t.set(g.index(1, 2), CO);
        t.set(g.index(4, 2), CO);
        let action = Action::SetPair {
            a,
            sa: OXYGEN,
            b,
            sb: OXYGEN,
        };
        action.apply(&mut t);
        let mut rng = RandomStream::new(3, 0);
        m.settle(&mut t, &action, &mut rng);
        assert_eq!(t.count(VACANT), 36);
    }

    #[test]
    fn thinning_reproduces_site_and_pair_rates() {
        let m = Catalyst::new(0.4, 1.2, 2.0, false).unwrap();
        let mut rng = RandomStream::new(12, 0);
        let grid = testing::random_grid(3, 3, 3, &mut rng);
        testing::thinning_matches_flip_rates(&m, &grid, 13);
    }

    #[test]
    fn audit() {
        testing::audit_bounds(&Catalyst::new(0.4, 1.2, 2.0, false).unwrap(), 10_000, 9);
        testing::audit_bounds(&Catalyst::zgb(0.45).unwrap(), 10_000, 10);
    }
}
