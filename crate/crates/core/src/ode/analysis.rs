use super::{Domain, OdeSystem};
use crate::error::{Error, Result};

/// Invasion predicates: can a rare type grow against a resident
/// equilibrium?
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Invasion {
    /// Type 1 invading type 2 at `u2 = 1 - death2/birth2`.
    GrassBushesTrees { birth: [f64; 2], death: [f64; 2] },
    /// Competitors invading healthy and infected hosts at `u1 = g2/alpha`.
    HostPathogen {
        infection: f64,
        replacement: [f64; 3],
    },
    /// Ordering that gives the two-strain colicin system an interior
    /// equilibrium: `d2/b2 < d1/b1 < (d2 + g)/(b2 + g)`.
    ColicinInterior {
        birth: [f64; 2],
        death: [f64; 2],
        toxin: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvasionResult {
    pub invades: bool,
    /// Left side minus right side; for the colicin chain the smaller of
    /// the two slacks.
    pub margin: f64,
}

pub fn invasion_check(which: &Invasion) -> Result<InvasionResult> {
    let margin = match *which {
        Invasion::GrassBushesTrees {
            birth: [b1, b2],
            death: [d1, d2],
        } => {
            if b2 <= d2 {
                return Err(Error::Ode(format!(
                    "resident extinct: type 2 needs birth > death ({b2} <= {d2})"
                )));
            }
            b1 * d2 / b2 - (d1 + b2 * (b2 - d2) / b2)
        }
        Invasion::HostPathogen {
            infection: a,
            replacement: [g1, g2, g3],
        } => {
            if g2 >= a || a <= 0.0 {
                return Err(Error::Ode(format!(
                    "resident extinct: infection needs gamma2 < alpha ({g2} >= {a})"
                )));
            }
            g1 * g2 / a + g2 * (1.0 - g2 / a) - g3
        }
        Invasion::ColicinInterior {
            birth: [b1, b2],
            death: [d1, d2],
            toxin,
        } => {
            if d1 >= b1 || d2 >= b2 {
                return Err(Error::Ode(
                    "resident extinct: each strain needs birth > death".into(),
                ));
            }
            let mid = d1 / b1;
            (mid - d2 / b2).min((d2 + toxin) / (b2 + toxin) - mid)
        }
    };
    Ok(InvasionResult {
        invades: margin > 0.0,
        margin,
    })
}

/// A scalar function on the state space, with a gradient.
pub trait LyapunovCandidate {
    fn value(&self, u: &[f64]) -> f64;

    /// Central differences unless overridden.
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut x = u.to_vec();
        (0..u.len())
            .map(|i| {
                let h = 1e-6 * u[i].abs().max(1e-2);
                x[i] = u[i] + h;
                let fp = self.value(&x);
                x[i] = u[i] - h;
                let fm = self.value(&x);
                x[i] = u[i];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }
}

impl<F: Fn(&[f64]) -> f64> LyapunovCandidate for F {
    fn value(&self, u: &[f64]) -> f64 {
        self(u)
    }
}

/// `scale * sum_i rho_i log u_i`, constant along the cyclic voter flow.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicInvariant {
    rho: Vec<f64>,
    scale: f64,
}

impl CyclicInvariant {
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// The same function with its sign flipped (convex, as a Lyapunov
    /// candidate).
    pub fn negated(&self) -> Self {
        Self {
            rho: self.rho.clone(),
            scale: -self.scale,
        }
    }
}

impl LyapunovCandidate for CyclicInvariant {
    fn value(&self, u: &[f64]) -> f64 {
        self.scale * self.rho.iter().zip(u).map(|(r, x)| r * x.ln()).sum::<f64>()
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.rho
            .iter()
            .zip(u)
            .map(|(r, x)| self.scale * r / x)
            .collect()
    }
}

/// Interior equilibrium of the rock-paper-scissors voter system and its
/// conserved quantity. With 1 eating 3 at `beta[0]`, 2 eating 1 at
/// `beta[1]` and 3 eating 2 at `beta[2]`, `rho = (b3, b1, b2) / sum`.
pub fn cyclic_equilibrium(beta: [f64; 3]) -> Result<CyclicInvariant> {
    if beta.iter().any(|b| !b.is_finite() || *b <= 0.0) {
        return Err(Error::Ode(format!(
            "cyclic rates must be positive, got {beta:?}"
        )));
    }
    let total: f64 = beta.iter().sum();
    Ok(CyclicInvariant {
        rho: vec![beta[2] / total, beta[0] / total, beta[1] / total],
        scale: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovReport {
    /// Largest `grad(phi) . f(u)` over the samples.
    pub max_derivative: f64,
    /// Largest `|grad(phi) . f(u)|`.
    pub max_abs_derivative: f64,
    pub samples: usize,
    /// Midpoints where `phi` exceeded the chord by more than round-off.
    pub convexity_violations: usize,
}

/// Samples `d phi / dt = grad(phi) . f(u)` at deterministic quasi-random
/// interior points and spot-checks convexity on segments between
/// consecutive samples.
pub fn check_lyapunov(
    phi: &dyn LyapunovCandidate,
    system: &OdeSystem,
    samples: usize,
) -> Result<LyapunovReport> {
    system.validate()?;
    let n = system.dimension();
    let points = interior_points(system.domain(), n, samples);
    let mut out = vec![0.0; n];
    let mut report = LyapunovReport {
        max_derivative: f64::NEG_INFINITY,
        max_abs_derivative: 0.0,
        samples: points.len(),
        convexity_violations: 0,
    };
    for u in &points {
        system.eval(u, &mut out);
        let g = phi.gradient(u);
        let d: f64 = g.iter().zip(&out).map(|(a, b)| a * b).sum();
        if !d.is_finite() {
            return Err(Error::Ode(format!("candidate is not finite at {u:?}")));
        }
        report.max_derivative = report.max_derivative.max(d);
        report.max_abs_derivative = report.max_abs_derivative.max(d.abs());
    }
    for w in points.windows(2) {
        let mid: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let (a, b, m) = (phi.value(&w[0]), phi.value(&w[1]), phi.value(&mid));
        let chord = 0.5 * (a + b);
        if m > chord + 1e-12 * (1.0 + chord.abs()) {
            report.convexity_violations += 1;
        }
    }
    if points.is_empty() {
        report.max_derivative = 0.0;
    }
    Ok(report)
}

fn halton(mut index: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Points bounded away from the faces by 2% of the domain.
fn interior_points(domain: Domain, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let h: Vec<f64> = (0..n)
            .map(|i| halton(index, PRIMES[i % PRIMES.len()]))
            .collect();
        index += 1;
        match domain {
            Domain::Box { upper } => {
                out.push(h.iter().map(|v| upper * (0.02 + 0.96 * v)).collect());
            }
            Domain::SubSimplex => {
                let x: Vec<f64> = h.iter().map(|v| 0.02 + 0.96 * v).collect();
                if x.iter().sum::<f64>() < 0.98 {
                    out.push(x);
                }
            }
            Domain::Simplex => {
                let x: Vec<f64> = h.iter().map(|v| 0.05 + v).collect();
                let s: f64 = x.iter().sum();
                out.push(x.iter().map(|v| v / s).collect());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grass_bushes_trees_threshold() {
        let check = |b1| {
            invasion_check(&Invasion::GrassBushesTrees {
                birth: [b1, 2.0],
                death: [1.0, 1.0],
            })
            .unwrap()
        };
        assert!(check(5.0).invades);
        assert!((check(5.0).margin - 0.5).abs() < 1e-15);
        assert!(!check(3.5).invades);
        assert!(invasion_check(&Invasion::GrassBushesTrees {
            birth: [5.0, 1.0],
            death: [1.0, 1.0]
        })
        .is_err());
    }

    #[test]
    fn host_pathogen_margin() {
        let r = invasion_check(&Invasion::HostPathogen {
            infection: 4.0,
            replacement: [0.5, 2.0, 1.2],
        })
        .unwrap();
        assert!(r.invades);
        assert!((r.margin - 0.05).abs() < 1e-12);
    }

    #[test]
    fn colicin_chain() {
        let r = invasion_check(&Invasion::ColicinInterior {
            birth: [3.0, 4.0],
            death: [1.0, 1.0],
            toxin: 2.5,
        })
        .unwrap();
        assert!(r.invades);
        assert!((r.margin - (1.0 / 3.0 - 0.25)).abs() < 1e-15);
    }

    #[test]
    fn cyclic_equilibrium_values() {
        let h = cyclic_equilibrium([0.3, 0.7, 1.0]).unwrap();
        for (got, want) in h.rho().iter().zip([0.5, 0.15, 0.35]) {
            assert!((got - want).abs() < 1e-15);
        }
        let h = cyclic_equilibrium([1.0, 1.0, 1.0]).unwrap();
        assert!(h.rho().iter().all(|r| (r - 1.0 / 3.0).abs() < 1e-15));
        assert!(cyclic_equilibrium([0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_candidate_has_zero_drift() {
        let s = OdeSystem::Sexual { beta: 5.0 };
        let r = check_lyapunov(&|_: &[f64]| 3.0, &s, 50).unwrap();
        assert_eq!(r.max_derivative, 0.0);
        assert_eq!(r.samples, 50);
    }

    #[test]
    fn halton_points_stay_inside() {
        for (domain, n) in [
            (Domain::SubSimplex, 3),
            (Domain::Simplex, 3),
            (Domain::Box { upper: 2.0 }, 2),
        ] {
            for p in interior_points(domain, n, 200) {
                assert!(p.iter().all(|v| *v > 0.0));
                let s: f64 = p.iter().sum();
                match domain {
                    Domain::SubSimplex => assert!(s < 1.0),
                    Domain::Simplex => assert!((s - 1.0).abs() < 1e-12),
                    Domain::Box { upper } => assert!(p.iter().all(|v| *v < upper)),
                }
            }
        }
    }
}
