//! Torus geometry, dispersal kernels, site grids and the seeded random
//! streams shared by every simulation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Flat index of a lattice site, `y * width + x`.
pub type SiteIndex = usize;

/// A `width x height` lattice with periodic boundaries in both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGeometry {
    width: usize,
    height: usize,
}

impl TorusGeometry {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Lattice(format!(
                "torus must be at least 2x2, got {width}x{height}"
            )));
        }
        if width
            .checked_mul(height)
            .is_none_or(|n| n > u32::MAX as usize)
        {
            return Err(Error::Lattice(format!(
                "torus {width}x{height} is too large"
            )));
        }
        Ok(Self { width, height })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> SiteIndex {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, site: SiteIndex) -> (usize, usize) {
        (site % self.width, site / self.width)
    }

    /// Site reached from `site` by the displacement `(dx, dy)`, wrapping
    /// periodically.
    #[inline]
    pub fn offset(&self, site: SiteIndex, dx: i32, dy: i32) -> SiteIndex {
        let (x, y) = self.coords(site);
        let nx = (x as i64 + dx as i64).rem_euclid(self.width as i64) as usize;
        let ny = (y as i64 + dy as i64).rem_euclid(self.height as i64) as usize;
        ny * self.width + nx
    }

    /// The four nearest neighbours, in the order +x, -x, +y, -y.
    #[inline]
    pub fn nearest(&self, site: SiteIndex) -> [SiteIndex; 4] {
        [
            self.offset(site, 1, 0),
            self.offset(site, -1, 0),
            self.offset(site, 0, 1),
            self.offset(site, 0, -1),
        ]
    }
}

/// Norm used to define the range-`L` neighbourhood `{y : 0 < |y| <= L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelNorm {
    /// `max(|dx|, |dy|)`, giving a `(2L+1)^2 - 1` site box.
    Box,
}

/// Offspring displacement distribution `p(y)` on the square lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersalKernel {
    offsets: Vec<(i32, i32)>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    uniform: bool,
}

impl DispersalKernel {
    pub fn new(offsets: Vec<(i32, i32)>, probabilities: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != probabilities.len() {
            return Err(Error::Lattice(
                "kernel needs one probability per offset and at least one offset".into(),
            ));
        }
        if offsets.contains(&(0, 0)) {
            return Err(Error::Lattice("kernel offset (0,0) is not allowed".into()));
        }
        let mut sorted = offsets.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != offsets.len() {
            return Err(Error::Lattice("kernel offsets must be distinct".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Lattice(
                "kernel probabilities must be non-negative".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Lattice(format!(
                "kernel probabilities sum to {total}, expected 1"
            )));
        }
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let first = probabilities[0];
        let uniform = probabilities.iter().all(|p| *p == first);
        Ok(Self {
            offsets,
            probabilities,
            cumulative,
            uniform,
        })
    }

    /// Uniform kernel on the four nearest neighbours.
    pub fn nearest() -> Self {
        Self::uniform(vec![(1, 0), (-1, 0), (0, 1), (0, -1)])
    }

    /// Uniform kernel on `{y : 0 < |y|_inf <= range}`.
    pub fn box_kernel(range: u32) -> Result<Self> {
        if range == 0 {
            return Err(Error::Lattice("box kernel range must be at least 1".into()));
        }
        let l = range as i32;
        let offsets = (-l..=l)
            .flat_map(|dy| (-l..=l).map(move |dx| (dx, dy)))
            .filter(|&o| o != (0, 0))
            .collect();
        Ok(Self::uniform(offsets))
    }

    fn uniform(offsets: Vec<(i32, i32)>) -> Self {
        let n = offsets.len();
        let p = 1.0 / n as f64;
        let cumulative = (1..=n).map(|k| k as f64 / n as f64).collect();
        Self {
            offsets,
            probabilities: vec![p; n],
            cumulative,
            uniform: true,
        }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Draws one displacement according to `p(y)`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (i32, i32) {
        if self.uniform {
            return self.offsets[rng.random_range(0..self.offsets.len())];
        }
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.offsets[k.min(self.offsets.len() - 1)]
    }
}

/// Per-site state codes `0..alphabet` on a torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGrid {
    geometry: TorusGeometry,
    alphabet: usize,
    states: Vec<u8>,
}

impl StateGrid {
    /// All sites in state 0.
    pub fn new(geometry: TorusGeometry, alphabet: usize) -> Result<Self> {
        Self::filled(geometry, alphabet, 0)
    }

    pub fn filled(geometry: TorusGeometry, alphabet: usize, state: u8) -> Result<Self> {
        Self::check_alphabet(alphabet)?;
        if state as usize >= alphabet {
            return Err(Error::Lattice(format!(
                "state {state} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Self {
            geometry,
            alphabet,
            states: vec![state; geometry.sites()],
        })
    }

    pub fn from_states(geometry: TorusGeometry, alphabet: usize, states: Vec<u8>) -> Result<Self> {
        Self::check_alphabet(alphabet)?;
        if states.len() != geometry.sites() {
            return Err(Error::Lattice(format!(
                "expected {} states, got {}",
                geometry.sites(),
                states.len()
            )));
        }
        if let Some(bad) = states.iter().find(|&&s| s as usize >= alphabet) {
            return Err(Error::Lattice(format!(
                "state {bad} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Self {
            geometry,
            alphabet,
            states,
        })
    }

    fn check_alphabet(alphabet: usize) -> Result<()> {
        if alphabet == 0 || alphabet > u8::MAX as usize {
            return Err(Error::Lattice(format!(
                "unsupported alphabet size {alphabet}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    #[inline]
    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    #[inline]
    pub fn get(&self, site: SiteIndex) -> u8 {
        self.states[site]
    }

    /// Panics if `state` is outside the alphabet.
    #[inline]
    pub fn set(&mut self, site: SiteIndex, state: u8) {
        assert!(
            (state as usize) < self.alphabet,
            "state {state} outside alphabet"
        );
        self.states[site] = state;
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    /// Number of sites in each state.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.alphabet];
        for &s in &self.states {
            counts[s as usize] += 1;
        }
        counts
    }

    /// Fraction of sites in each state.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.states.len() as f64;
        self.counts().into_iter().map(|c| c as f64 / n).collect()
    }

    /// Kernel-weighted fraction of the neighbours of `site` that are in `state`.
    #[inline]
    pub fn neighbor_weight(&self, site: SiteIndex, kernel: &DispersalKernel, state: u8) -> f64 {
        kernel
            .offsets
            .iter()
            .zip(&kernel.probabilities)
            .filter(|(&(dx, dy), _)| self.states[self.geometry.offset(site, dx, dy)] == state)
            .map(|(_, p)| p)
            .sum()
    }
}

/// `(f_0, ..., f_{S-1})`: kernel-weighted fraction of the neighbours of
/// `site` in each state.
pub fn neighbor_fractions(grid: &StateGrid, site: SiteIndex, kernel: &DispersalKernel) -> Vec<f64> {
    let mut f = vec![0.0; grid.alphabet()];
    for (&(dx, dy), p) in kernel.offsets.iter().zip(&kernel.probabilities) {
        f[grid.get(grid.geometry.offset(site, dx, dy)) as usize] += p;
    }
    f
}

/// Per-site hawk and dove counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountGrid {
    geometry: TorusGeometry,
    hawks: Vec<u32>,
    doves: Vec<u32>,
}

impl CountGrid {
    pub fn new(geometry: TorusGeometry) -> Self {
        Self {
            geometry,
            hawks: vec![0; geometry.sites()],
            doves: vec![0; geometry.sites()],
        }
    }

    pub fn from_counts(geometry: TorusGeometry, hawks: Vec<u32>, doves: Vec<u32>) -> Result<Self> {
        if hawks.len() != geometry.sites() || doves.len() != geometry.sites() {
            return Err(Error::Lattice(
                "count vectors must have one entry per site".into(),
            ));
        }
        Ok(Self {
            geometry,
            hawks,
            doves,
        })
    }

    #[inline]
    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    #[inline]
    pub fn hawks(&self, site: SiteIndex) -> u32 {
        self.hawks[site]
    }

    #[inline]
    pub fn doves(&self, site: SiteIndex) -> u32 {
        self.doves[site]
    }

    #[inline]
    pub fn occupancy(&self, site: SiteIndex) -> u32 {
        self.hawks[site] + self.doves[site]
    }

    pub fn set(&mut self, site: SiteIndex, hawks: u32, doves: u32) {
        self.hawks[site] = hawks;
        self.doves[site] = doves;
    }

    pub fn hawk_counts(&self) -> &[u32] {
        &self.hawks
    }

    pub fn dove_counts(&self) -> &[u32] {
        &self.doves
    }

    pub fn total_hawks(&self) -> u64 {
        self.hawks.iter().map(|&h| h as u64).sum()
    }

    pub fn total_doves(&self) -> u64 {
        self.doves.iter().map(|&d| d as u64).sum()
    }

    pub fn population(&self) -> u64 {
        self.total_hawks() + self.total_doves()
    }
}

/// Hawk fraction in the 5x5 square centred at `site` (centre included).
/// `None` when the square holds nobody.
pub fn square_fraction(grid: &CountGrid, site: SiteIndex) -> Option<f64> {
    let mut hawks = 0u64;
    let mut total = 0u64;
    for dy in -2..=2 {
        for dx in -2..=2 {
            let s = grid.geometry.offset(site, dx, dy);
            hawks += grid.hawks[s] as u64;
            total += grid.occupancy(s) as u64;
        }
    }
    (total > 0).then(|| hawks as f64 / total as f64)
}

/// A [`StateGrid`] plus, for each state, the set of sites holding it.
///
/// The sets support O(1) uniform sampling of a site in a given state and
/// O(1) updates. Their internal order is part of the simulation state and
/// is preserved by checkpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackedGrid {
    grid: StateGrid,
    members: Vec<Vec<u32>>,
    position: Vec<u32>,
}

impl TrackedGrid {
    pub fn new(grid: StateGrid) -> Self {
        let mut members = vec![Vec::new(); grid.alphabet()];
        let mut position = vec![0; grid.states.len()];
        for (site, &s) in grid.states.iter().enumerate() {
            position[site] = members[s as usize].len() as u32;
            members[s as usize].push(site as u32);
        }
        Self {
            grid,
            members,
            position,
        }
    }

    /// Rebuilds from explicit member lists (checkpoint restore).
    pub fn from_parts(grid: StateGrid, members: Vec<Vec<u32>>) -> Result<Self> {
        if members.len() != grid.alphabet() {
            return Err(Error::Lattice("member lists do not match alphabet".into()));
        }
        let mut position = vec![u32::MAX; grid.states.len()];
        for (state, list) in members.iter().enumerate() {
            for (k, &site) in list.iter().enumerate() {
                let site = site as usize;
                if site >= position.len()
                    || grid.get(site) as usize != state
                    || position[site] != u32::MAX
                {
                    return Err(Error::Lattice("member lists inconsistent with grid".into()));
                }
                position[site] = k as u32;
            }
        }
        if position.contains(&u32::MAX) {
            return Err(Error::Lattice(
                "member lists do not cover every site".into(),
            ));
        }
        Ok(Self {
            grid,
            members,
            position,
        })
    }

    #[inline]
    pub fn grid(&self) -> &StateGrid {
        &self.grid
    }

    pub fn into_grid(self) -> StateGrid {
        self.grid
    }

    #[inline]
    pub fn get(&self, site: SiteIndex) -> u8 {
        self.grid.get(site)
    }

    #[inline]
    pub fn count(&self, state: u8) -> usize {
        self.members[state as usize].len()
    }

    pub fn members(&self) -> &[Vec<u32>] {
        &self.members
    }

    /// Uniformly chosen site currently in `state`. Panics if there is none.
    #[inline]
    pub fn random_member<R: Rng + ?Sized>(&self, state: u8, rng: &mut R) -> SiteIndex {
        let list = &self.members[state as usize];
        list[rng.random_range(0..list.len())] as usize
    }

    #[inline]
    pub fn set(&mut self, site: SiteIndex, state: u8) {
        let old = self.grid.get(site);
        if old == state {
            return;
        }
        self.grid.set(site, state);
        let pos = self.position[site] as usize;
        let old_list = &mut self.members[old as usize];
        let last = *old_list.last().expect("site must be a member of its state");
        old_list.swap_remove(pos);
        if last as usize != site {
            self.position[last as usize] = pos as u32;
        }
        let new_list = &mut self.members[state as usize];
        self.position[site] = new_list.len() as u32;
        new_list.push(site as u32);
    }

    #[inline]
    pub fn swap(&mut self, a: SiteIndex, b: SiteIndex) {
        let (sa, sb) = (self.get(a), self.get(b));
        if sa != sb {
            self.set(a, sb);
            self.set(b, sa);
        }
    }
}

/// Reproducible random stream: replicate `index` of a run seeded with
/// `seed`. Backed by ChaCha8 with the replicate index as stream id.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { seed, index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Position in the keystream, for checkpoints.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn restore(seed: u64, index: u64, word_pos: u128) -> Self {
        let mut stream = Self::new(seed, index);
        stream.rng.set_word_pos(word_pos);
        stream
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    /// Exponential holding time with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
