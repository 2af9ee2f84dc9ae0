//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use coexist::engine::{Engine, Simulation};
use coexist::lattice::{RandomStream, StateGrid, TorusGeometry};
use coexist::models::{build_model, ModelSpec, ParamSet, ParamValue, SiteModel};

pub fn params(pairs: &[(&str, f64)]) -> ParamSet {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), ParamValue::Number(*v)))
        .collect()
}

pub fn site_model(name: &str, pairs: &[(&str, f64)]) -> Arc<dyn SiteModel> {
    match build_model(name, &params(pairs), "nearest").unwrap() {
        ModelSpec::Site(m) => m,
        ModelSpec::Counts(_) => panic!("{name} is a count model"),
    }
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of an empirical frequency.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Kolmogorov-Smirnov distance between a sample and Exp(rate).
pub fn ks_exponential(samples: &[f64], rate: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let cdf = 1.0 - (-rate * x).exp();
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Generator of a single-type contact process on the 2x2 torus, states
/// encoded as occupancy bitmasks over sites `x + 2y`. On this torus the
/// two horizontal neighbour slots of a site point at the same site, and
/// likewise vertically, so a vacant site is colonised at
/// `birth * (occupied neighbour slots) / 4`.
pub fn contact_2x2_generator(birth: f64, death: f64) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0; 16]; 16];
    let occ = |s: usize, site: usize| ((s >> site) & 1) as f64;
    for (s, row) in q.iter_mut().enumerate() {
        for site in 0..4 {
            let (x, y) = (site % 2, site / 2);
            let horizontal = (1 - x) + 2 * y;
            let vertical = x + 2 * (1 - y);
            let target = s ^ (1 << site);
            let rate = if occ(s, site) == 1.0 {
                death
            } else {
                birth * (2.0 * occ(s, horizontal) + 2.0 * occ(s, vertical)) / 4.0
            };
            row[target] += rate;
            row[s] -= rate;
        }
    }
    q
}

/// Transient distribution `p0 exp(Q t)` by uniformisation.
pub fn uniformize(q: &[Vec<f64>], p0: &[f64], t: f64) -> Vec<f64> {
    let n = q.len();
    let lambda = (0..n).map(|i| -q[i][i]).fold(0.0, f64::max).max(1e-300);
    let mut term = p0.to_vec();
    let mut weight = (-lambda * t).exp();
    let mut out: Vec<f64> = term.iter().map(|v| v * weight).collect();
    let mut mass = weight;
    let mut k = 0;
    while 1.0 - mass > 1e-15 && k < 10_000 {
        k += 1;
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let step = if i == j {
                    1.0 + q[i][i] / lambda
                } else {
                    q[i][j] / lambda
                };
                next[j] += term[i] * step;
            }
        }
        term = next;
        weight *= lambda * t / k as f64;
        mass += weight;
        for (o, v) in out.iter_mut().zip(&term) {
            *o += weight * v;
        }
    }
    out
}

pub fn grid_from_mask(mask: usize) -> StateGrid {
    let g = TorusGeometry::new(2, 2).unwrap();
    let states = (0..4).map(|s| ((mask >> s) & 1) as u8).collect();
    StateGrid::from_states(g, 3, states).unwrap()
}

pub fn mask_of(grid: &StateGrid) -> usize {
    grid.states()
        .iter()
        .enumerate()
        .map(|(i, s)| ((*s != 0) as usize) << i)
        .sum()
}

/// Runs `reps` replicates of `model` from `grid` to `t` and returns the
/// final grids.
pub fn final_grids(
    model: &Arc<dyn SiteModel>,
    grid: &StateGrid,
    t: f64,
    reps: u64,
    seed: u64,
) -> Vec<StateGrid> {
    (0..reps)
        .map(|r| {
            let mut rng = RandomStream::new(seed, r);
            let mut e = Engine::new(model.clone(), grid.clone()).unwrap();
            e.advance_to(t, &mut rng);
            e.into_grid()
        })
        .collect()
}

/// Mean-field right-hand sides written out from the model definitions,
/// kept separate from the library's own implementation.
pub mod transcription {
    pub fn competing_contact(b1: f64, b2: f64, d1: f64, d2: f64, u: [f64; 2]) -> [f64; 2] {
        let [x, y] = u;
        [
            b1 * x * (1.0 - x - y) - d1 * x,
            b2 * y * (1.0 - x - y) - d2 * y,
        ]
    }

    /// Type 2 sees only its own kind as occupied space.
    pub fn grass_bushes_trees(b1: f64, b2: f64, d1: f64, d2: f64, u: [f64; 2]) -> [f64; 2] {
        let [x, y] = u;
        [
            b1 * x * (1.0 - x - y) - d1 * x - b2 * y * x,
            b2 * y * (1.0 - y) - d2 * y,
        ]
    }

    pub fn host_pathogen(alpha: f64, g1: f64, g2: f64, g3: f64, u: [f64; 3]) -> [f64; 3] {
        let [h, i, c] = u;
        [
            (h + i) * (g2 * i + g3 * c) - alpha * h * i - g1 * h * c,
            alpha * h * i - g2 * i,
            c * (g1 * h + g2 * i) - g3 * c * (h + i),
        ]
    }

    pub fn sexual(beta: f64, u: f64) -> f64 {
        -u + beta * u * u * (1.0 - u)
    }

    pub fn colicin2(b1: f64, b2: f64, d1: f64, d2: f64, gamma: f64, u: [f64; 2]) -> [f64; 2] {
        let [p, s] = u;
        let free = 1.0 - p - s;
        [b1 * p * free - d1 * p, b2 * s * free - s * (d2 + gamma * p)]
    }

    pub fn colicin3(b: [f64; 3], d: [f64; 3], g: [f64; 2], u: [f64; 3]) -> [f64; 3] {
        let free = 1.0 - u[0] - u[1] - u[2];
        [
            b[0] * u[0] * free - d[0] * u[0],
            b[1] * u[1] * free - d[1] * u[1],
            b[2] * u[2] * free - u[2] * (d[2] + g[0] * u[0] + g[1] * u[1]),
        ]
    }

    pub fn hawk_dove(payoff: [f64; 4], kappa: f64, u: [f64; 2]) -> [f64; 2] {
        let [h, d] = u;
        let n = h + d;
        if n == 0.0 {
            return [0.0, 0.0];
        }
        let [a, b, c, dd] = payoff;
        [
            h * (a * h / n + b * d / n - kappa * n),
            d * (c * h / n + dd * d / n - kappa * n),
        ]
    }

    /// `lambda[i][j]`: rate at which type `i` takes over a `j` neighbour.
    pub fn voter(lambda: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let gain: f64 = (0..n).map(|j| lambda[i][j] * u[j]).sum();
                let loss: f64 = (0..n).map(|j| lambda[j][i] * u[j]).sum();
                u[i] * (gain - loss)
            })
            .collect()
    }
}
