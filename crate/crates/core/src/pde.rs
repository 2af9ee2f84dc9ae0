//! One-dimensional reaction-diffusion equations `u_t = u_xx + g(u)`.
//!
//! Forward Euler in time, the 3-point Laplacian in space and zero-flux
//! boundaries in cell-centred form, so that with no reaction the discrete
//! mass is conserved exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    /// `g(u) = u (-1 + beta u (1 - u))`.
    Sexual { beta: f64 },
    /// CO and O coverages with adsorption `p`, `q` and reaction `r`.
    Catalyst { p: f64, q: f64, r: f64 },
    /// Pure diffusion of `components` fields.
    Diffusion { components: usize },
}

impl Reaction {
    pub fn components(&self) -> usize {
        match self {
            Self::Sexual { .. } => 1,
            Self::Catalyst { .. } => 2,
            Self::Diffusion { components } => *components,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Sexual { beta } => beta.is_finite() && beta >= 0.0,
            Self::Catalyst { p, q, r } => [p, q, r].iter().all(|v| v.is_finite() && *v >= 0.0),
            Self::Diffusion { components } => components > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Pde(format!(
                "invalid reaction {self:?} (rates must be finite, non-negative)"
            )))
        }
    }

    #[inline]
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        match *self {
            Self::Sexual { beta } => out[0] = u[0] * (-1.0 + beta * u[0] * (1.0 - u[0])),
            Self::Catalyst { p, q, r } => {
                let vacant = 1.0 - u[0] - u[1];
                let react = r * u[0] * u[1];
                out[0] = p * vacant - react;
                out[1] = q * vacant * vacant - react;
            }
            Self::Diffusion { .. } => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    /// The reaction terms at a single point.
    pub fn evaluate(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components()];
        self.apply(u, &mut out);
        out
    }

    /// Largest stable time step for unit diffusivity, times 0.8.
    pub fn default_dt(&self, dx: f64) -> f64 {
        0.8 * stability_limit(dx, self.components())
    }
}

fn stability_limit(dx: f64, components: usize) -> f64 {
    dx * dx / (2.0 * components as f64)
}

/// Cell values on a line of `cells` cells of width `dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    cells: usize,
    components: usize,
    dx: f64,
    dt: f64,
    time: f64,
    /// Cell-major: `values[cell * components + c]`.
    values: Vec<f64>,
}

impl PdeState {
    pub fn new(components: usize, dx: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if components == 0
            || !values.len().is_multiple_of(components)
            || values.len() < 2 * components
        {
            return Err(Error::Pde(
                "need at least two cells of whole component vectors".into(),
            ));
        }
        if !(dx > 0.0 && dx.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Error::Pde(format!(
                "dx and dt must be positive, got {dx}, {dt}"
            )));
        }
        if dt > stability_limit(dx, components) * (1.0 + 1e-12) {
            return Err(Error::Pde(format!(
                "dt = {dt} exceeds the explicit stability limit {}",
                stability_limit(dx, components)
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Pde("cell values must be finite".into()));
        }
        Ok(Self {
            cells: values.len() / components,
            components,
            dx,
            dt,
            time: 0.0,
            values,
        })
    }

    /// Every cell equal to `value`.
    pub fn uniform(cells: usize, dx: f64, dt: f64, value: &[f64]) -> Result<Self> {
        Self::new(value.len(), dx, dt, value.repeat(cells))
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.components)
            .copied()
            .collect()
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.component(c).iter().sum::<f64>() / self.cells as f64
    }

    /// Cell centre of cell `i`.
    pub fn position(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// `x,u_0[,u_1]` per cell.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["x".to_string()];
        header.extend((0..self.components).map(|c| format!("u_{c}")));
        crate::ode::csv_rows(
            &header,
            (0..self.cells).map(|i| {
                std::iter::once(self.position(i))
                    .chain(self.cell(i).iter().copied())
                    .map(|v| v.to_string())
                    .collect()
            }),
        )
    }

    fn step(&mut self, reaction: &Reaction, dt: f64, next: &mut Vec<f64>, scratch: &mut [f64]) {
        let (n, k) = (self.cells, self.components);
        let inv = 1.0 / (self.dx * self.dx);
        next.resize(self.values.len(), 0.0);
        let v = &self.values;
        for i in 0..n {
            let cell = &v[i * k..(i + 1) * k];
            reaction.apply(cell, scratch);
            for c in 0..k {
                let here = cell[c];
                let left = if i > 0 { v[(i - 1) * k + c] } else { here };
                let right = if i + 1 < n { v[(i + 1) * k + c] } else { here };
                let lap = (left - 2.0 * here + right) * inv;
                next[i * k + c] = here + dt * (lap + scratch[c]);
            }
        }
        std::mem::swap(&mut self.values, next);
        self.time += dt;
    }
}

/// Advances `state` by `duration` under `reaction`. The last step is
/// shortened to land exactly on the end time.
pub fn integrate_pde(reaction: &Reaction, state: &mut PdeState, duration: f64) -> Result<()> {
    reaction.validate()?;
    if reaction.components() != state.components {
        return Err(Error::Pde(format!(
            "reaction has {} components, state has {}",
            reaction.components(),
            state.components
        )));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::Pde(format!(
            "duration must be non-negative, got {duration}"
        )));
    }
    let end = state.time + duration;
    let full = (duration / state.dt).floor() as u64;
    let mut next = Vec::with_capacity(state.values.len());
    let mut scratch = vec![0.0; state.components];
    for _ in 0..full {
        state.step(reaction, state.dt, &mut next, &mut scratch);
    }
    let rest = end - state.time;
    if rest > 1e-12 * state.dt {
        state.step(reaction, rest, &mut next, &mut scratch);
    }
    state.time = end;
    if state.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Pde("solution is no longer finite".into()));
    }
    Ok(())
}

/// The two nontrivial zeros `rho1 < rho2` of the sexual reaction.
pub fn sexual_roots(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 4.0 && beta.is_finite()) {
        return Err(Error::Pde(format!(
            "nontrivial zeros need beta > 4, got {beta}"
        )));
    }
    let s = (1.0 - 4.0 / beta).sqrt();
    Ok(((1.0 - s) / 2.0, (1.0 + s) / 2.0))
}

/// `integral_0^rho2 g(y) dy`, from the exact antiderivative.
pub fn speed_integral(beta: f64) -> Result<f64> {
    let (_, r) = sexual_roots(beta)?;
    Ok(-r * r / 2.0 + beta * r.powi(3) / 3.0 - beta * r.powi(4) / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: f64, band: f64) -> Self {
        if value > band {
            Self::Positive
        } else if value < -band {
            Self::Negative
        } else {
            Self::Zero
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Negative => '-',
            Self::Zero => '0',
            Self::Positive => '+',
        }
    }
}

/// Sign of the travelling-wave speed for the sexual reaction: the sign of
/// `integral_0^rho2 g`, with values within `1e-12` of zero reported as zero.
pub fn speed_sign(beta: f64) -> Result<Sign> {
    Ok(Sign::of(speed_integral(beta)?, 1e-12))
}

/// Numerical setup for a front-speed run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSetup {
    pub cells: usize,
    pub dx: f64,
    /// `None` picks 80% of the stability limit.
    pub dt: Option<f64>,
    pub horizon: f64,
    pub sample_interval: f64,
}

impl Default for FrontSetup {
    fn default() -> Self {
        Self {
            cells: 2000,
            dx: 0.1,
            dt: None,
            horizon: 100.0,
            sample_interval: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpeedEstimate {
    /// Positive when the left state invades the right one.
    pub speed: f64,
    /// RMS deviation of the tracked positions from the fitted line.
    pub residual: f64,
    /// Level crossed by the first component.
    pub level: f64,
    /// Time window of the fit.
    pub window: (f64, f64),
    /// `(t, position)` samples over the whole run.
    pub positions: Vec<(f64, f64)>,
}

impl WaveSpeedEstimate {
    pub fn csv_header() -> &'static str {
        "speed,residual,level,t_start,t_end"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.speed, self.residual, self.level, self.window.0, self.window.1
        )
    }
}

/// End states of the standard front: the invading state on the left.
pub fn front_states(reaction: &Reaction) -> Result<(Vec<f64>, Vec<f64>)> {
    match *reaction {
        Reaction::Sexual { beta } => Ok((vec![sexual_roots(beta)?.1], vec![0.0])),
        Reaction::Catalyst { p, q, r } => {
            let eq = catalyst_fixed_points(p, q, r)?;
            let inner = eq
                .iter()
                .find(|e| e.kind == CatalystPoint::Interior)
                .ok_or_else(|| Error::Pde("catalyst has no interior equilibrium".into()))?;
            Ok((inner.point.to_vec(), vec![1.0, 0.0]))
        }
        Reaction::Diffusion { .. } => Err(Error::Pde("pure diffusion has no front".into())),
    }
}

/// Left half at the invading state, right half at the resident state.
pub fn front_profile(reaction: &Reaction, setup: &FrontSetup) -> Result<PdeState> {
    let (left, right) = front_states(reaction)?;
    let dt = setup.dt.unwrap_or_else(|| reaction.default_dt(setup.dx));
    let values = (0..setup.cells)
        .flat_map(|i| {
            if i < setup.cells / 2 {
                left.clone()
            } else {
                right.clone()
            }
        })
        .collect();
    PdeState::new(reaction.components(), setup.dx, dt, values)
}

fn crossing(state: &PdeState, level: f64) -> Option<f64> {
    let u = state.component(0);
    let margin = state.cells / 20;
    (margin..state.cells - 1 - margin).find_map(|i| {
        let (a, b) = (u[i] - level, u[i + 1] - level);
        if a == 0.0 {
            Some(state.position(i))
        } else if a * b < 0.0 {
            Some(state.position(i) + state.dx * a / (a - b))
        } else {
            None
        }
    })
}

/// Runs the standard front and fits its position against time over the
/// second half of the run.
pub fn estimate_front_speed(reaction: &Reaction, setup: &FrontSetup) -> Result<WaveSpeedEstimate> {
    if !(setup.horizon > 0.0 && setup.sample_interval > 0.0) {
        return Err(Error::Pde(
            "horizon and sample interval must be positive".into(),
        ));
    }
    let (left, right) = front_states(reaction)?;
    let level = 0.5 * (left[0] + right[0]);
    let mut state = front_profile(reaction, setup)?;
    let samples = (setup.horizon / setup.sample_interval).round().max(2.0) as usize;
    let mut positions = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        if k > 0 {
            integrate_pde(reaction, &mut state, setup.horizon / samples as f64)?;
        }
        let x = crossing(&state, level).ok_or_else(|| {
            Error::Pde(format!(
                "front left the tracked region by t = {}",
                state.time()
            ))
        })?;
        positions.push((state.time(), x));
    }
    let tail = &positions[positions.len() / 2..];
    let (slope, intercept) = least_squares(tail);
    let residual = (tail
        .iter()
        .map(|(t, x)| (x - (intercept + slope * t)).powi(2))
        .sum::<f64>()
        / tail.len() as f64)
        .sqrt();
    Ok(WaveSpeedEstimate {
        // Position moving right means the left state is spreading.
        speed: slope,
        residual,
        level,
        window: (tail[0].0, tail[tail.len() - 1].0),
        positions,
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(t, x)| (t - mt) * (x - mx)).sum();
    let sxx: f64 = points.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, mx - slope * mt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalBeta {
    pub estimate: f64,
    pub half_width: f64,
    /// `(beta, speed)` at every probe, in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

/// Bisects on the sign of the numerical front speed of the sexual
/// reaction until the bracket half-width is at most `tol`.
pub fn critical_beta(bracket: (f64, f64), tol: f64, setup: &FrontSetup) -> Result<CriticalBeta> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi && lo > 4.0 && tol > 0.0) {
        return Err(Error::Pde(format!(
            "need 4 < lo < hi and tol > 0, got [{lo}, {hi}], {tol}"
        )));
    }
    let mut probes = Vec::new();
    let mut speed = |beta: f64| -> Result<f64> {
        let c = estimate_front_speed(&Reaction::Sexual { beta }, setup)?.speed;
        probes.push((beta, c));
        Ok(c)
    };
    let s_lo = speed(lo)?;
    let s_hi = speed(hi)?;
    if s_lo.signum() == s_hi.signum() {
        return Err(Error::Pde(format!(
            "bracket [{lo}, {hi}] does not change sign (speeds {s_lo:.4}, {s_hi:.4})"
        )));
    }
    while (hi - lo) / 2.0 > tol {
        let mid = 0.5 * (lo + hi);
        if speed(mid)?.signum() == s_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalBeta {
        estimate: 0.5 * (lo + hi),
        half_width: 0.5 * (hi - lo),
        probes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalystPoint {
    /// All CO, `(1, 0)`.
    CoPoisoned,
    /// All O, `(0, 1)`.
    OxygenPoisoned,
    /// `(alpha, beta)` with `alpha < beta`.
    Interior,
    /// `(beta, alpha)`.
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalystEquilibrium {
    pub point: [f64; 2],
    pub kind: CatalystPoint,
    /// Norm of the reaction terms at `point`.
    pub residual: f64,
}

/// Zeros of the catalyst reaction terms. The poisoned states are always
/// present; `(alpha, beta)` and `(beta, alpha)` are added when the
/// discriminant `(q - p)^2 - 4 q p^2 / r` is non-negative, with
/// `alpha, beta = ((q - p) -/+ sqrt(disc)) / (2q)`.
pub fn catalyst_fixed_points(p: f64, q: f64, r: f64) -> Result<Vec<CatalystEquilibrium>> {
    let reaction = Reaction::Catalyst { p, q, r };
    reaction.validate()?;
    if q <= 0.0 || r <= 0.0 || p > q {
        return Err(Error::Pde(format!(
            "catalyst equilibria need q > 0, r > 0 and p <= q (got p={p}, q={q}, r={r})"
        )));
    }
    let at = |point: [f64; 2], kind| {
        let f = reaction.evaluate(&point);
        CatalystEquilibrium {
            point,
            kind,
            residual: f.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    };
    let mut out = vec![
        at([1.0, 0.0], CatalystPoint::CoPoisoned),
        at([0.0, 1.0], CatalystPoint::OxygenPoisoned),
    ];
    let disc = (q - p).powi(2) - 4.0 * q * p * p / r;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let alpha = ((q - p) - s) / (2.0 * q);
        let beta = ((q - p) + s) / (2.0 * q);
        out.push(at([alpha, beta], CatalystPoint::Interior));
        out.push(at([beta, alpha], CatalystPoint::Mirror));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_data_stays_constant() {
        let mut s = PdeState::uniform(50, 0.1, 0.004, &[0.3]).unwrap();
        integrate_pde(&Reaction::Diffusion { components: 1 }, &mut s, 5.0).unwrap();
        assert!(s.component(0).iter().all(|v| *v == 0.3));

        let (_, rho2) = sexual_roots(5.0).unwrap();
        let mut s = PdeState::uniform(50, 0.1, 0.004, &[rho2]).unwrap();
        integrate_pde(&Reaction::Sexual { beta: 5.0 }, &mut s, 5.0).unwrap();
        assert!(s.component(0).iter().all(|v| (v - rho2).abs() < 1e-13));

        let mut s = PdeState::uniform(50, 0.1, 0.002, &[1.0, 0.0]).unwrap();
        integrate_pde(
            &Reaction::Catalyst {
                p: 0.1,
                q: 0.5,
                r: 1.0,
            },
            &mut s,
            5.0,
        )
        .unwrap();
        assert!(s.component(0).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn unstable_step_rejected() {
        assert!(PdeState::uniform(10, 0.1, 0.006, &[0.0]).is_err());
        assert!(PdeState::uniform(10, 0.1, 0.003, &[0.0, 0.0]).is_err());
        assert!(PdeState::uniform(10, 0.1, 0.0025, &[0.0, 0.0]).is_ok());
    }

    #[test]
    fn exact_duration() {
        let mut s = PdeState::uniform(10, 0.1, 0.004, &[0.5]).unwrap();
        integrate_pde(&Reaction::Sexual { beta: 5.0 }, &mut s, 0.0101).unwrap();
        assert_eq!(s.time(), 0.0101);
    }

    #[test]
    fn speed_signs() {
        assert_eq!(speed_sign(4.2).unwrap(), Sign::Negative);
        assert_eq!(speed_sign(4.5).unwrap(), Sign::Zero);
        assert_eq!(speed_sign(5.0).unwrap(), Sign::Positive);
        assert!(speed_sign(4.0).is_err());
        assert_eq!(speed_sign(4.49).unwrap(), Sign::Negative);
        assert_eq!(speed_sign(4.51).unwrap(), Sign::Positive);
    }

    #[test]
    fn catalyst_closed_form() {
        let eq = catalyst_fixed_points(0.1, 0.5, 1.0).unwrap();
        assert_eq!(eq.len(), 4);
        let inner = eq
            .iter()
            .find(|e| e.kind == CatalystPoint::Interior)
            .unwrap();
        assert!((inner.point[0] - 0.0258343).abs() < 1e-6);
        assert!((inner.point[1] - 0.7741657).abs() < 1e-6);
        assert!(eq.iter().all(|e| e.residual <= 1e-10));
        // p = q: negative discriminant leaves the poisoned states only.
        assert_eq!(catalyst_fixed_points(0.3, 0.3, 1.0).unwrap().len(), 2);
    }

    #[test]
    fn same_sign_bracket_rejected() {
        let setup = FrontSetup {
            cells: 600,
            horizon: 30.0,
            ..FrontSetup::default()
        };
        assert!(critical_beta((4.6, 5.0), 0.05, &setup).is_err());
    }

    #[test]
    fn profile_csv() {
        let s = PdeState::uniform(3, 0.5, 0.05, &[0.25]).unwrap();
        assert_eq!(s.to_csv(), "x,u_0\n0.25,0.25\n0.75,0.25\n1.25,0.25\n");
    }
}
