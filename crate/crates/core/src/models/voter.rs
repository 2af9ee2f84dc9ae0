use super::{Action, FlipRate, Proposal, SiteModel};
use crate::error::{Error, Result};
use crate::lattice::{neighbor_fractions, DispersalKernel, RandomStream, SiteIndex, StateGrid};

/// Multitype biased voter model: a site of type `j` becomes type `i` at
/// rate `f_i lambda[i][j]` ("i eats j").
///
/// Code `c` is type `c + 1`; `lambda` is indexed by codes.
#[derive(Debug, Clone)]
pub struct Voter {
    lambda: Vec<Vec<f64>>,
    kernel: DispersalKernel,
    bounds: Vec<f64>,
}

/// Competition matrix for five grass species, row-major: `[i][j]` is the
/// rate at which species `i + 1` replaces species `j + 1`.
pub const SILVERTOWN: [[f64; 5]; 5] = [
    [0.0, 0.09, 0.32, 0.23, 0.37],
    [0.08, 0.0, 0.16, 0.06, 0.09],
    [0.06, 0.06, 0.0, 0.44, 0.11],
    [0.02, 0.06, 0.05, 0.0, 0.03],
    [0.02, 0.03, 0.05, 0.03, 0.0],
];

impl Voter {
    pub fn new(lambda: Vec<Vec<f64>>, kernel: DispersalKernel) -> Result<Self> {
        let k = lambda.len();
        if !(2..=u8::MAX as usize).contains(&k) || lambda.iter().any(|row| row.len() != k) {
            return Err(Error::Model(
                "voter matrix must be square with at least two types".into(),
            ));
        }
        for (i, row) in lambda.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Model(format!(
                        "voter lambda[{i}][{j}] = {v} is negative"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::Model(
                        "voter matrix must have a zero diagonal".into(),
                    ));
                }
            }
        }
        let bounds = (0..k)
            .map(|j| (0..k).map(|i| lambda[i][j]).fold(0.0, f64::max))
            .collect();
        Ok(Self {
            lambda,
            kernel,
            bounds,
        })
    }

    /// Rock-paper-scissors: 1 eats 3 at `beta1`, 2 eats 1 at `beta2`,
    /// 3 eats 2 at `beta3`.
    pub fn cyclic(beta: [f64; 3], kernel: DispersalKernel) -> Result<Self> {
        Self::new(cyclic_matrix(beta), kernel)
    }

    pub fn silvertown(kernel: DispersalKernel) -> Result<Self> {
        Self::new(SILVERTOWN.iter().map(|r| r.to_vec()).collect(), kernel)
    }

    pub fn lambda(&self) -> &[Vec<f64>] {
        &self.lambda
    }
}

pub fn cyclic_matrix(beta: [f64; 3]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; 3]; 3];
    m[0][2] = beta[0];
    m[1][0] = beta[1];
    m[2][1] = beta[2];
    m
}

impl SiteModel for Voter {
    fn name(&self) -> &'static str {
        "voter"
    }

    fn alphabet(&self) -> usize {
        self.lambda.len()
    }

    fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    fn propose(&self, grid: &StateGrid, site: SiteIndex, rng: &mut RandomStream) -> Proposal {
        let j = grid.get(site);
        let (dx, dy) = self.kernel.sample(rng);
        let i = grid.get(grid.geometry().offset(site, dx, dy));
        Proposal::new(
            Action::Set { site, state: i },
            self.lambda[i as usize][j as usize],
            self.bounds[j as usize],
        )
    }

    fn flip_rates(&self, grid: &StateGrid, site: SiteIndex) -> Vec<FlipRate> {
        let j = grid.get(site) as usize;
        let f = neighbor_fractions(grid, site, &self.kernel);
        (0..self.lambda.len())
            .filter(|&i| i != j)
            .map(|i| FlipRate {
                to: i as u8,
                rate: f[i] * self.lambda[i][j],
            })
            .collect()
    }
}
