//! Dormand-Prince 5(4) with adaptive steps.

use super::{csv_rows, OdeSystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

/// Sampled solution of an ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory holds at least the initial state")
    }

    /// `t,u_0,...,u_{n-1}` at full precision.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("u_{i}")));
        csv_rows(
            &header,
            self.times
                .iter()
                .zip(&self.states)
                .map(|(t, u)| std::iter::once(t).chain(u).map(|v| v.to_string()).collect()),
        )
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights equal the last row of A (first-same-as-last), so E
// holds the difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates to `t_end` and returns the trajectory at `0` and `t_end`.
pub fn integrate_to(system: &OdeSystem, u0: &[f64], t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate(system, u0, &[t_end], tol)
}

/// Integrates from `t = 0` and samples exactly at `times` (non-decreasing,
/// non-negative). The initial state is always the first sample.
///
/// The local error per step is held below `tol * (1 + |u|)` in the RMS
/// norm, i.e. a mixed absolute/relative tolerance.
pub fn integrate(system: &OdeSystem, u0: &[f64], times: &[f64], tol: f64) -> Result<Trajectory> {
    system.validate()?;
    system.rhs(u0)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Ode(format!("tolerance must be positive, got {tol}")));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Ode(
            "sample times must be finite, non-negative and sorted".into(),
        ));
    }

    let n = u0.len();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u0.to_vec()],
        stats: StepStats::default(),
    };
    let mut t = 0.0;
    let mut u = u0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut next = vec![0.0; n];
    system.eval(&u, &mut k[0]);
    traj.stats.evaluations += 1;

    let t_last = times.last().copied().unwrap_or(0.0);
    let mut h = initial_step(&u, &k[0], tol, t_last);

    for &target in times.iter().filter(|&&s| s > 0.0) {
        while t < target {
            let mut step = h.min(target - t);
            let landing = t + step >= target * (1.0 - 1e-15);
            if landing {
                step = target - t;
            }
            if step <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Ode(format!(
                    "step size underflow at t = {t} ({}); the system may be stiff",
                    system.name()
                )));
            }
            for s in 1..7 {
                for i in 0..n {
                    let acc: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
                    stage[i] = u[i] + step * acc;
                }
                system.eval(&stage, &mut k[s]);
            }
            traj.stats.evaluations += 6;
            // Stage 7 was evaluated at the fifth-order solution.
            next.copy_from_slice(&stage);

            let mut err = 0.0;
            for i in 0..n {
                let e: f64 = step * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let scale = tol * (1.0 + u[i].abs().max(next[i].abs()));
                err += (e / scale).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                traj.stats.rejected += 1;
                h = step * 0.2;
                continue;
            }
            if err <= 1.0 {
                t = if landing { target } else { t + step };
                u.copy_from_slice(&next);
                k.swap(0, 6);
                traj.stats.accepted += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step shortened to land on a sample should not shrink `h`.
                h = if landing {
                    h.max(step * factor)
                } else {
                    step * factor
                };
            } else {
                traj.stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ode(format!("solution blew up before t = {target}")));
        }
        traj.times.push(target);
        traj.states.push(u.clone());
    }
    Ok(traj)
}

fn initial_step(u: &[f64], f: &[f64], tol: f64, span: f64) -> f64 {
    let n = u.len() as f64;
    let d0 = (u.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let d1 = (f.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.max(tol.powf(0.2) * 1e-3).min(span.max(1e-6))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_returns_initial_state() {
        let s = OdeSystem::Sexual { beta: 5.0 };
        let t = integrate_to(&s, &[0.3], 0.0, 1e-8).unwrap();
        assert_eq!(t.times, vec![0.0]);
        assert_eq!(t.states, vec![vec![0.3]]);
    }

    #[test]
    fn logistic_matches_closed_form() {
        // Single contact process: u' = u (b (1 - u) - d) is logistic.
        let s = OdeSystem::CompetingContact {
            birth: [3.0, 0.0],
            death: [1.0, 1.0],
        };
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let traj = integrate(&s, &[0.01, 0.0], &times, 1e-11).unwrap();
        let (r, cap, u0) = (2.0f64, 2.0 / 3.0, 0.01);
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let exact = cap / (1.0 + (cap / u0 - 1.0) * (-r * t).exp());
            assert!((u[0] - exact).abs() < 1e-9, "t={t}: {} vs {exact}", u[0]);
        }
        assert_eq!(traj.times.len(), 21);
    }

    #[test]
    fn samples_are_exact_times() {
        let s = OdeSystem::Sexual { beta: 5.0 };
        let times = [0.1, 0.25, 0.25, 3.0];
        let traj = integrate(&s, &[0.9], &times, 1e-8).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.1, 0.25, 0.25, 3.0]);
        assert!(traj.stats.accepted > 0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = OdeSystem::Sexual { beta: 5.0 };
        assert!(integrate_to(&s, &[0.5], 1.0, 0.0).is_err());
        assert!(integrate(&s, &[0.5], &[2.0, 1.0], 1e-6).is_err());
        assert!(integrate_to(&s, &[f64::NAN], 1.0, 1e-6).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let s = OdeSystem::CompetingContact {
            birth: [4.0, 2.0],
            death: [1.0, 1.0],
        };
        let csv = integrate_to(&s, &[0.1, 0.1], 1.0, 1e-8).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,u_0,u_1");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0.1,0.1"));
    }
}
