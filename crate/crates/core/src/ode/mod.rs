//! Mean-field ODEs: right-hand sides, an adaptive integrator, fixed points
//! with stability classification, invasion predicates and the cyclic
//! conserved quantity.

mod analysis;
mod fixed_points;
mod integrate;

pub use analysis::{
    check_lyapunov, cyclic_equilibrium, invasion_check, CyclicInvariant, Invasion, InvasionResult,
    LyapunovCandidate, LyapunovReport,
};
pub use fixed_points::{
    find_fixed_points, fixed_points_csv, jacobian, Classification, FixedPointReport,
    FixedPointSearch,
};
pub use integrate::{integrate, integrate_to, StepStats, Trajectory};

use crate::error::{Error, Result};

/// The state space a system lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `u_i >= 0`, `sum u_i <= 1` (a vacant state takes up the rest).
    SubSimplex,
    /// `u_i >= 0`, `sum u_i = 1`.
    Simplex,
    /// `0 <= u_i <= upper` in every coordinate.
    Box { upper: f64 },
}

/// A mean-field ODE with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeSystem {
    /// Two contact processes competing for vacant space.
    CompetingContact { birth: [f64; 2], death: [f64; 2] },
    /// Type 2 overgrows type 1; type 2 does not feel type 1.
    GrassBushesTrees { birth: [f64; 2], death: [f64; 2] },
    /// Healthy host, infected host, competitor. Densities sum to 1.
    HostPathogen {
        infection: f64,
        replacement: [f64; 3],
    },
    /// `u (-1 + beta u (1 - u))`.
    Sexual { beta: f64 },
    /// Producer and sensitive strain.
    Colicin2 {
        birth: [f64; 2],
        death: [f64; 2],
        toxin: f64,
    },
    /// Two producers and one sensitive strain.
    Colicin3 {
        birth: [f64; 3],
        death: [f64; 3],
        toxin: [f64; 2],
    },
    /// Hawk and dove densities with payoffs `[a, b, c, d]` and crowding.
    HawkDove { payoff: [f64; 4], crowding: f64 },
    /// Multitype biased voter, `lambda[i][j]` = rate at which `i` eats `j`.
    Voter { lambda: Vec<Vec<f64>> },
}

impl OdeSystem {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CompetingContact { .. } => "competing-contact",
            Self::GrassBushesTrees { .. } => "grass-bushes-trees",
            Self::HostPathogen { .. } => "host-pathogen",
            Self::Sexual { .. } => "sexual",
            Self::Colicin2 { .. } => "colicin2",
            Self::Colicin3 { .. } => "colicin3",
            Self::HawkDove { .. } => "prisoners-dilemma",
            Self::Voter { .. } => "voter",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Sexual { .. } => 1,
            Self::CompetingContact { .. }
            | Self::GrassBushesTrees { .. }
            | Self::Colicin2 { .. }
            | Self::HawkDove { .. } => 2,
            Self::HostPathogen { .. } | Self::Colicin3 { .. } => 3,
            Self::Voter { lambda } => lambda.len(),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            Self::HostPathogen { .. } | Self::Voter { .. } => Domain::Simplex,
            Self::Sexual { .. } => Domain::Box { upper: 1.0 },
            Self::HawkDove { payoff, crowding } => {
                // Each density is capped by its largest per-capita gain over crowding.
                let gain = payoff.iter().fold(0.0f64, |m, v| m.max(*v));
                let upper = if *crowding > 0.0 {
                    (gain / crowding).max(1.0) * 1.5
                } else {
                    10.0
                };
                Domain::Box { upper }
            }
            _ => Domain::SubSimplex,
        }
    }

    /// Rejects negative or non-finite rates and malformed matrices.
    pub fn validate(&self) -> Result<()> {
        let rates: Vec<f64> = match self {
            Self::CompetingContact { birth, death } | Self::GrassBushesTrees { birth, death } => {
                birth.iter().chain(death).copied().collect()
            }
            Self::HostPathogen {
                infection,
                replacement,
            } => std::iter::once(*infection)
                .chain(replacement.iter().copied())
                .collect(),
            Self::Sexual { beta } => vec![*beta],
            Self::Colicin2 {
                birth,
                death,
                toxin,
            } => birth.iter().chain(death).chain([toxin]).copied().collect(),
            Self::Colicin3 {
                birth,
                death,
                toxin,
            } => birth.iter().chain(death).chain(toxin).copied().collect(),
            Self::HawkDove { payoff, crowding } => {
                if payoff.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Ode("payoffs must be finite".into()));
                }
                vec![*crowding]
            }
            Self::Voter { lambda } => {
                let k = lambda.len();
                if k < 2 || lambda.iter().any(|r| r.len() != k) {
                    return Err(Error::Ode(
                        "voter matrix must be square, at least 2x2".into(),
                    ));
                }
                lambda.iter().flatten().copied().collect()
            }
        };
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Ode(format!(
                "{}: rates must be finite and non-negative",
                self.name()
            )));
        }
        Ok(())
    }

    /// Checked evaluation of the right-hand side.
    pub fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dimension() {
            return Err(Error::Ode(format!(
                "{} has dimension {}, got a state of length {}",
                self.name(),
                self.dimension(),
                u.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ode(format!("non-finite state {u:?}")));
        }
        let mut out = vec![0.0; u.len()];
        self.eval(u, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into `out`.
    pub fn eval(&self, u: &[f64], out: &mut [f64]) {
        match self {
            Self::CompetingContact { birth, death } => {
                let vacant = 1.0 - u[0] - u[1];
                for i in 0..2 {
                    out[i] = birth[i] * u[i] * vacant - death[i] * u[i];
                }
            }
            Self::GrassBushesTrees { birth, death } => {
                let vacant = 1.0 - u[0] - u[1];
                out[0] = birth[0] * u[0] * vacant - death[0] * u[0] - birth[1] * u[1] * u[0];
                out[1] = birth[1] * u[1] * (1.0 - u[1]) - death[1] * u[1];
            }
            Self::HostPathogen {
                infection,
                replacement: g,
            } => {
                let a = *infection;
                out[0] = (u[0] + u[1]) * (g[1] * u[1] + g[2] * u[2])
                    - a * u[0] * u[1]
                    - g[0] * u[0] * u[2];
                out[1] = a * u[0] * u[1] - g[1] * u[1];
                out[2] = u[2] * (g[0] * u[0] + g[1] * u[1]) - g[2] * u[2] * (u[0] + u[1]);
            }
            Self::Sexual { beta } => {
                out[0] = u[0] * (-1.0 + beta * u[0] * (1.0 - u[0]));
            }
            Self::Colicin2 {
                birth,
                death,
                toxin,
            } => {
                let vacant = 1.0 - u[0] - u[1];
                out[0] = birth[0] * u[0] * vacant - death[0] * u[0];
                out[1] = birth[1] * u[1] * vacant - u[1] * (death[1] + toxin * u[0]);
            }
            Self::Colicin3 {
                birth,
                death,
                toxin,
            } => {
                let vacant = 1.0 - u[0] - u[1] - u[2];
                out[0] = birth[0] * u[0] * vacant - death[0] * u[0];
                out[1] = birth[1] * u[1] * vacant - death[1] * u[1];
                out[2] = birth[2] * u[2] * vacant
                    - u[2] * (death[2] + toxin[0] * u[0] + toxin[1] * u[1]);
            }
            Self::HawkDove {
                payoff: [a, b, c, d],
                crowding,
            } => {
                let total = u[0] + u[1];
                if total == 0.0 {
                    out[0] = 0.0;
                    out[1] = 0.0;
                    return;
                }
                let (p, q) = (u[0] / total, u[1] / total);
                out[0] = u[0] * (a * p + b * q - crowding * total);
                out[1] = u[1] * (c * p + d * q - crowding * total);
            }
            Self::Voter { lambda } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let s: f64 = (0..u.len())
                        .map(|j| (lambda[i][j] - lambda[j][i]) * u[j])
                        .sum();
                    *o = u[i] * s;
                }
            }
        }
    }

    /// Whether `u` lies in the domain, up to `slack`.
    pub fn contains(&self, u: &[f64], slack: f64) -> bool {
        if u.iter().any(|v| !v.is_finite() || *v < -slack) {
            return false;
        }
        let sum: f64 = u.iter().sum();
        match self.domain() {
            Domain::SubSimplex => sum <= 1.0 + slack,
            Domain::Simplex => (sum - 1.0).abs() <= slack,
            Domain::Box { upper } => u.iter().all(|v| *v <= upper + slack),
        }
    }
}

/// Renders rows of numbers as CSV with a header line.
pub(crate) fn csv_rows(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
