//! Exact continuous-time event engine.
//!
//! Every clock in a configuration has a constant rate bound, so the
//! superposition of all clocks is a Poisson process whose rate is the
//! current total bound. Each step draws the holding time at that total,
//! picks a clock proportionally to its bound, and accepts the proposed
//! event with probability `actual / bound`. Rejected proposals only move
//! time forward. The resulting path has the law of the Markov chain with
//! the model's rates.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{CountGrid, RandomStream, SiteIndex, StateGrid, TrackedGrid};
use crate::models::{Action, CountAction, PrisonersDilemma, SiteModel};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimClock {
    pub time: f64,
    /// Accepted events.
    pub events: u64,
    /// Accepted plus rejected proposals.
    pub proposals: u64,
}

/// Nearest-neighbour exchanges ("stirring") at rate `epsilon^-2` per
/// unordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirringSpec {
    epsilon: f64,
}

impl StirringSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Model(format!(
                "stirring epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn pair_rate(&self) -> f64 {
        self.epsilon.powi(-2)
    }

    /// Total exchange rate on a torus: `2 W H` pairs.
    pub fn total_rate(&self, sites: usize) -> f64 {
        2.0 * sites as f64 * self.pair_rate()
    }

    /// Draws one exchange: a uniform site and one of its two owned edges.
    pub fn sample(&self, grid: &StateGrid, rng: &mut RandomStream) -> Action {
        let g = grid.geometry();
        let a = rng.random_range(0..g.sites());
        let b = if rng.random::<bool>() {
            g.offset(a, 1, 0)
        } else {
            g.offset(a, 0, 1)
        };
        Action::Swap { a, b }
    }
}

/// Result of one [`Simulation::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome<A> {
    /// An accepted event. `total_rate` is the bound rate the holding time
    /// `dt` was drawn at.
    Event { action: A, dt: f64, total_rate: f64 },
    /// A rejected proposal; only time advanced.
    Rejected { dt: f64, total_rate: f64 },
    /// The next proposal would fall after the limit; the clock now reads
    /// exactly the limit and nothing else changed.
    Limit,
    /// Total rate is zero: no further events are possible.
    Absorbed,
}

/// Common driver interface for the lattice engines.
pub trait Simulation {
    type Action;

    fn clock(&self) -> &SimClock;

    /// Advances by one proposal, never past `limit`.
    fn step(&mut self, rng: &mut RandomStream, limit: f64) -> StepOutcome<Self::Action>;

    fn force_time(&mut self, time: f64);

    /// Runs until the clock reads `target`. Returns `true` if the process
    /// is absorbed (in which case the clock is still moved to `target`).
    fn advance_to(&mut self, target: f64, rng: &mut RandomStream) -> bool {
        if self.clock().time >= target {
            return false;
        }
        loop {
            match self.step(rng, target) {
                StepOutcome::Limit => return false,
                StepOutcome::Absorbed => {
                    self.force_time(target);
                    return true;
                }
                _ => {}
            }
        }
    }

    /// Runs to `horizon`, calling `observer` at each of `sample_times` that
    /// is not before the current time. Samples see the state at exactly
    /// that time.
    fn run_until<F>(
        &mut self,
        horizon: f64,
        sample_times: &[f64],
        rng: &mut RandomStream,
        mut observer: F,
    ) -> bool
    where
        F: FnMut(f64, &Self),
        Self: Sized,
    {
        let mut absorbed = false;
        for &t in sample_times.iter().filter(|&&t| t <= horizon) {
            if t < self.clock().time {
                continue;
            }
            absorbed |= self.advance_to(t, rng);
            observer(t, self);
        }
        absorbed |= self.advance_to(horizon, rng);
        absorbed
    }
}

/// Engine for single-occupancy models on a [`StateGrid`].
#[derive(Debug, Clone)]
pub struct Engine {
    model: Arc<dyn SiteModel>,
    grid: TrackedGrid,
    clock: SimClock,
    stirring: Option<StirringSpec>,
}

impl Engine {
    pub fn new(model: Arc<dyn SiteModel>, grid: StateGrid) -> Result<Self> {
        if grid.alphabet() != model.alphabet() {
            return Err(Error::Model(format!(
                "{} uses {} states but the grid has {}",
                model.name(),
                model.alphabet(),
                grid.alphabet()
            )));
        }
        Ok(Self {
            model,
            grid: TrackedGrid::new(grid),
            clock: SimClock::default(),
            stirring: None,
        })
    }

    /// Restores an engine from checkpointed parts.
    pub fn from_parts(
        model: Arc<dyn SiteModel>,
        grid: TrackedGrid,
        clock: SimClock,
        stirring: Option<StirringSpec>,
    ) -> Self {
        Self {
            model,
            grid,
            clock,
            stirring,
        }
    }

    pub fn with_stirring(mut self, stirring: StirringSpec) -> Self {
        self.stirring = Some(stirring);
        self
    }

    pub fn stirring(&self) -> Option<StirringSpec> {
        self.stirring
    }

    pub fn model(&self) -> &Arc<dyn SiteModel> {
        &self.model
    }

    pub fn grid(&self) -> &StateGrid {
        self.grid.grid()
    }

    pub fn tracked(&self) -> &TrackedGrid {
        &self.grid
    }

    pub fn into_grid(self) -> StateGrid {
        self.grid.into_grid()
    }

    /// Sum over all clocks of their bound rates.
    pub fn total_rate(&self) -> f64 {
        let sites: f64 = self
            .model
            .bounds()
            .iter()
            .enumerate()
            .map(|(s, b)| self.grid.count(s as u8) as f64 * b)
            .sum();
        sites
            + self
                .stirring
                .map_or(0.0, |s| s.total_rate(self.grid.grid().geometry().sites()))
    }

    fn pick_site(&self, mut u: f64) -> Option<(u8, bool)> {
        let bounds = self.model.bounds();
        let mut last = None;
        for (s, b) in bounds.iter().enumerate() {
            let w = self.grid.count(s as u8) as f64 * b;
            if w > 0.0 {
                if u < w {
                    return Some((s as u8, false));
                }
                u -= w;
                last = Some(s as u8);
            }
        }
        if self.stirring.is_some() {
            return None;
        }
        // Rounding pushed u past the last class.
        last.map(|s| (s, false))
    }

    fn apply(&mut self, action: &Action, rng: &mut RandomStream) {
        action.apply(&mut self.grid);
        if !matches!(action, Action::Swap { .. }) {
            self.model.settle(&mut self.grid, action, rng);
        }
    }

    /// Applies an event directly (tests and initial-condition setup).
    pub fn set_site(&mut self, site: SiteIndex, state: u8) {
        self.grid.set(site, state);
    }
}

impl Simulation for Engine {
    type Action = Action;

    fn clock(&self) -> &SimClock {
        &self.clock
    }

    fn force_time(&mut self, time: f64) {
        debug_assert!(time >= self.clock.time);
        self.clock.time = time;
    }

    fn step(&mut self, rng: &mut RandomStream, limit: f64) -> StepOutcome<Action> {
        let total = self.total_rate();
        if total <= 0.0 {
            return StepOutcome::Absorbed;
        }
        let dt = rng.exponential(total);
        if self.clock.time + dt > limit {
            self.clock.time = limit;
            return StepOutcome::Limit;
        }
        self.clock.time += dt;
        self.clock.proposals += 1;

        let u = rng.uniform() * total;
        let proposal = match self.pick_site(u) {
            Some((state, _)) => {
                let site = self.grid.random_member(state, rng);
                self.model.propose(self.grid.grid(), site, rng)
            }
            None => {
                let stirring = self.stirring.expect("stirring class selected");
                let action = stirring.sample(self.grid.grid(), rng);
                crate::models::Proposal::new(action, 1.0, 1.0)
            }
        };
        let accepted = if proposal.actual >= proposal.bound {
            true
        } else if proposal.actual <= 0.0 {
            false
        } else {
            rng.uniform() * proposal.bound < proposal.actual
        };
        if !accepted {
            return StepOutcome::Rejected {
                dt,
                total_rate: total,
            };
        }
        self.apply(&proposal.action, rng);
        self.clock.events += 1;
        StepOutcome::Event {
            action: proposal.action,
            dt,
            total_rate: total,
        }
    }
}

/// Engine for the Prisoner's Dilemma on a [`CountGrid`].
///
/// Each of the `M` "slots" at every site carries a clock of rate
/// `nu + kappa M + max|payoff|`, where `M` is the current maximum
/// occupancy; slots beyond a site's population are empty and always
/// rejected. `M` is tracked with an occupancy histogram.
#[derive(Debug, Clone)]
pub struct CountEngine {
    model: PrisonersDilemma,
    grid: CountGrid,
    clock: SimClock,
    histogram: Vec<u64>,
    max_occupancy: u32,
}

impl CountEngine {
    pub fn new(model: PrisonersDilemma, grid: CountGrid) -> Self {
        let mut engine = Self {
            model,
            grid,
            clock: SimClock::default(),
            histogram: Vec::new(),
            max_occupancy: 0,
        };
        engine.rebuild_histogram();
        engine
    }

    pub fn from_parts(model: PrisonersDilemma, grid: CountGrid, clock: SimClock) -> Self {
        let mut engine = Self::new(model, grid);
        engine.clock = clock;
        engine
    }

    fn rebuild_histogram(&mut self) {
        let g = *self.grid.geometry();
        let max = (0..g.sites())
            .map(|s| self.grid.occupancy(s))
            .max()
            .unwrap_or(0);
        self.histogram = vec![0; max as usize + 1];
        for s in 0..g.sites() {
            self.histogram[self.grid.occupancy(s) as usize] += 1;
        }
        self.max_occupancy = max;
    }

    fn change_occupancy(&mut self, from: u32, to: u32) {
        self.histogram[from as usize] -= 1;
        if to as usize >= self.histogram.len() {
            self.histogram.resize(to as usize + 1, 0);
        }
        self.histogram[to as usize] += 1;
        if to > self.max_occupancy {
            self.max_occupancy = to;
        }
        while self.max_occupancy > 0 && self.histogram[self.max_occupancy as usize] == 0 {
            self.max_occupancy -= 1;
        }
    }

    fn adjust(&mut self, site: SiteIndex, hawk: bool, delta: i32) {
        let (h, d) = (self.grid.hawks(site), self.grid.doves(site));
        let before = h + d;
        let (h, d) = if hawk {
            (
                h.checked_add_signed(delta).expect("hawk count underflow"),
                d,
            )
        } else {
            (
                h,
                d.checked_add_signed(delta).expect("dove count underflow"),
            )
        };
        self.grid.set(site, h, d);
        self.change_occupancy(before, h + d);
    }

    pub fn grid(&self) -> &CountGrid {
        &self.grid
    }

    pub fn model(&self) -> &PrisonersDilemma {
        &self.model
    }

    pub fn max_occupancy(&self) -> u32 {
        self.max_occupancy
    }

    pub fn total_rate(&self) -> f64 {
        let sites = self.grid.geometry().sites() as f64;
        sites * self.max_occupancy as f64 * self.model.individual_bound(self.max_occupancy)
    }

    fn apply(&mut self, action: CountAction) {
        match action {
            CountAction::Migrate { from, to, hawk } => {
                self.adjust(from, hawk, -1);
                self.adjust(to, hawk, 1);
            }
            CountAction::Birth { site, hawk } => self.adjust(site, hawk, 1),
            CountAction::Death { site, hawk } => self.adjust(site, hawk, -1),
        }
    }
}

impl Simulation for CountEngine {
    type Action = CountAction;

    fn clock(&self) -> &SimClock {
        &self.clock
    }

    fn force_time(&mut self, time: f64) {
        self.clock.time = time;
    }

    fn step(&mut self, rng: &mut RandomStream, limit: f64) -> StepOutcome<CountAction> {
        let total = self.total_rate();
        if total <= 0.0 {
            return StepOutcome::Absorbed;
        }
        let dt = rng.exponential(total);
        if self.clock.time + dt > limit {
            self.clock.time = limit;
            return StepOutcome::Limit;
        }
        self.clock.time += dt;
        self.clock.proposals += 1;

        let site = rng.random_range(0..self.grid.geometry().sites());
        let slot = rng.random_range(0..self.max_occupancy);
        let (h, d) = (self.grid.hawks(site), self.grid.doves(site));
        if slot >= h + d {
            return StepOutcome::Rejected {
                dt,
                total_rate: total,
            };
        }
        let hawk = slot < h;
        let (action, actual, bound) =
            self.model
                .propose(&self.grid, site, hawk, self.max_occupancy, rng);
        let accepted = actual >= bound || (actual > 0.0 && rng.uniform() * bound < actual);
        if !accepted {
            return StepOutcome::Rejected {
                dt,
                total_rate: total,
            };
        }
        self.apply(action);
        self.clock.events += 1;
        StepOutcome::Event {
            action,
            dt,
            total_rate: total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DispersalKernel, TorusGeometry};
    use crate::models::{CompetingContact, Overgrowth, Voter};

    fn contact(beta: f64, delta: f64) -> Arc<dyn SiteModel> {
        Arc::new(
            CompetingContact::with_kernel(
                [beta, 0.0],
                [delta, 1.0],
                DispersalKernel::nearest(),
                Overgrowth::VacantOnly,
            )
            .unwrap(),
        )
    }

    #[test]
    fn empty_contact_grid_is_absorbed() {
        let g = TorusGeometry::new(8, 8).unwrap();
        let mut e = Engine::new(contact(2.0, 1.0), StateGrid::new(g, 3).unwrap()).unwrap();
        let mut rng = RandomStream::new(1, 0);
        assert_eq!(e.step(&mut rng, 10.0), StepOutcome::Absorbed);
        assert!(e.advance_to(5.0, &mut rng));
        assert_eq!(e.clock().time, 5.0);
        assert_eq!(e.grid().counts(), vec![64, 0, 0]);
    }

    #[test]
    fn zero_horizon_changes_nothing() {
        let g = TorusGeometry::new(8, 8).unwrap();
        let mut grid = StateGrid::new(g, 3).unwrap();
        grid.set(3, 1);
        let mut e = Engine::new(contact(2.0, 1.0), grid.clone()).unwrap();
        let mut rng = RandomStream::new(1, 0);
        let mut seen = Vec::new();
        e.run_until(0.0, &[0.0], &mut rng, |t, _| seen.push(t));
        assert_eq!(seen, vec![0.0]);
        assert_eq!(e.clock().events, 0);
        assert_eq!(e.grid(), &grid);
    }

    #[test]
    fn samples_hit_requested_times() {
        let g = TorusGeometry::new(8, 8).unwrap();
        let grid = StateGrid::filled(g, 3, 1).unwrap();
        let mut e = Engine::new(contact(2.0, 1.0), grid).unwrap();
        let mut rng = RandomStream::new(1, 0);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let mut seen = Vec::new();
        e.run_until(1.0, &times, &mut rng, |t, eng| {
            assert_eq!(eng.clock().time, t);
            seen.push(t);
        });
        assert_eq!(seen, times);
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let g = TorusGeometry::new(4, 4).unwrap();
        assert!(Engine::new(contact(1.0, 1.0), StateGrid::new(g, 2).unwrap()).is_err());
    }

    #[test]
    fn stirring_conserves_counts() {
        let g = TorusGeometry::new(10, 10).unwrap();
        let mut rng = RandomStream::new(2, 0);
        let states = (0..100).map(|_| rng.random_range(0..3u8)).collect();
        let grid = StateGrid::from_states(g, 3, states).unwrap();
        let frozen: Arc<dyn SiteModel> =
            Arc::new(Voter::new(vec![vec![0.0; 3]; 3], DispersalKernel::nearest()).unwrap());
        let before = grid.counts();
        let mut e = Engine::new(frozen, grid)
            .unwrap()
            .with_stirring(StirringSpec::new(0.1).unwrap());
        assert!((e.total_rate() - 100.0 * 2.0 * 100.0).abs() < 1e-9);
        for _ in 0..10_000 {
            match e.step(&mut rng, f64::INFINITY) {
                StepOutcome::Event {
                    action: Action::Swap { a, b },
                    ..
                } => {
                    let g = e.grid().geometry();
                    assert!(g.nearest(a).contains(&b));
                }
                other => panic!("unexpected {other:?}"),
            }
            assert_eq!(e.grid().counts(), before);
        }
    }

    #[test]
    fn count_engine_keeps_histogram() {
        let g = TorusGeometry::new(6, 6).unwrap();
        let mut grid = CountGrid::new(g);
        for s in 0..36 {
            grid.set(s, (s % 3) as u32, (s % 4) as u32);
        }
        let mut e = CountEngine::new(PrisonersDilemma::standard(), grid);
        let mut rng = RandomStream::new(3, 0);
        for _ in 0..20_000 {
            if e.step(&mut rng, f64::INFINITY) == StepOutcome::Absorbed {
                break;
            }
            let max = (0..36).map(|s| e.grid().occupancy(s)).max().unwrap();
            assert_eq!(e.max_occupancy(), max);
        }
    }

    #[test]
    fn empty_count_grid_is_absorbed() {
        let g = TorusGeometry::new(6, 6).unwrap();
        let mut e = CountEngine::new(PrisonersDilemma::standard(), CountGrid::new(g));
        let mut rng = RandomStream::new(3, 0);
        assert_eq!(e.step(&mut rng, 1.0), StepOutcome::Absorbed);
    }
}
