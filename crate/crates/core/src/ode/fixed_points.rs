//! Newton search for equilibria and their linear stability.

use nalgebra::{Complex, DMatrix, DVector};

use super::{csv_rows, Domain, OdeSystem};
use crate::error::{Error, Result};

/// Eigenvalues whose real part lies within this margin of zero count as
/// neither stable nor unstable.
pub const CLASSIFICATION_MARGIN: f64 = 1e-8;

const GRID: usize = 9;
const MAX_NEWTON: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Unstable,
    Saddle,
    /// At least one eigenvalue within the margin of the imaginary axis and
    /// no mix of signs beyond it.
    Marginal,
}

impl Classification {
    pub fn from_eigenvalues(eigenvalues: &[Complex<f64>], margin: f64) -> Self {
        let neg = eigenvalues.iter().filter(|z| z.re < -margin).count();
        let pos = eigenvalues.iter().filter(|z| z.re > margin).count();
        match (neg, pos) {
            (n, 0) if n == eigenvalues.len() => Self::Stable,
            (0, p) if p == eigenvalues.len() => Self::Unstable,
            (n, p) if n > 0 && p > 0 => Self::Saddle,
            _ => Self::Marginal,
        }
    }

    /// Unstable in the sense that some perturbation grows.
    pub fn is_unstable(self) -> bool {
        matches!(self, Self::Unstable | Self::Saddle)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Unstable => "unstable",
            Self::Saddle => "saddle",
            Self::Marginal => "marginal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    pub point: Vec<f64>,
    /// Euclidean norm of the right-hand side at `point`.
    pub residual: f64,
    /// Eigenvalues of the Jacobian. On the simplex (densities summing to 1)
    /// the Jacobian is taken in the `n - 1` free coordinates.
    pub eigenvalues: Vec<Complex<f64>>,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSearch {
    /// Distinct roots, sorted lexicographically.
    pub roots: Vec<FixedPointReport>,
    pub starts: usize,
    /// Starts that did not converge to a root inside the domain.
    pub dropped: usize,
}

/// Central-difference Jacobian of the full right-hand side.
pub fn jacobian(system: &OdeSystem, u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let f = |x: &[f64]| {
        let mut out = vec![0.0; n];
        system.eval(x, &mut out);
        out
    };
    let m = fd_jacobian(&f, u, n);
    (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect()
}

fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], rows: usize) -> DMatrix<f64> {
    let k = x.len();
    let mut m = DMatrix::zeros(rows, k);
    let mut xp = x.to_vec();
    for j in 0..k {
        let h = 1e-5 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        for i in 0..rows {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    m
}

/// A face of the domain: coordinates in `zero` are pinned at 0, `free`
/// are solved for, and on the simplex `dependent` closes the sum.
struct Face {
    n: usize,
    free: Vec<usize>,
    dependent: Option<usize>,
}

impl Face {
    fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.n];
        for (&i, &v) in self.free.iter().zip(x) {
            u[i] = v;
        }
        if let Some(d) = self.dependent {
            u[d] = 1.0 - x.iter().sum::<f64>();
        }
        u
    }

    fn restricted(&self, system: &OdeSystem, x: &[f64]) -> Vec<f64> {
        let u = self.embed(x);
        let mut out = vec![0.0; self.n];
        system.eval(&u, &mut out);
        self.free.iter().map(|&i| out[i]).collect()
    }
}

fn faces(system: &OdeSystem) -> Vec<Face> {
    let n = system.dimension();
    let simplex = system.domain() == Domain::Simplex;
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut nonzero: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
        if simplex {
            let Some(d) = nonzero.pop() else { continue };
            out.push(Face {
                n,
                free: nonzero,
                dependent: Some(d),
            });
        } else {
            out.push(Face {
                n,
                free: nonzero,
                dependent: None,
            });
        }
    }
    out
}

fn starts(k: usize, domain: Domain) -> Vec<Vec<f64>> {
    let scale = match domain {
        Domain::Box { upper } => upper,
        _ => 1.0,
    };
    let axis: Vec<f64> = (0..GRID)
        .map(|i| scale * (0.01 + 0.98 * i as f64 / (GRID - 1) as f64))
        .collect();
    let mut out = Vec::new();
    let total = GRID.pow(k as u32);
    for mut idx in 0..total {
        let mut x = Vec::with_capacity(k);
        for _ in 0..k {
            x.push(axis[idx % GRID]);
            idx /= GRID;
        }
        let keep = match domain {
            Domain::Box { .. } => true,
            _ => x.iter().sum::<f64>() < 1.0,
        };
        if keep {
            out.push(x);
        }
    }
    out
}

fn newton(system: &OdeSystem, face: &Face, mut x: Vec<f64>) -> Option<Vec<f64>> {
    let k = x.len();
    let f = |y: &[f64]| face.restricted(system, y);
    for _ in 0..MAX_NEWTON {
        let r = f(&x);
        if r.iter().all(|v| *v == 0.0) {
            break;
        }
        let j = fd_jacobian(&f, &x, k);
        let step = j.lu().solve(&DVector::from_vec(r))?;
        let size = step.norm();
        if !size.is_finite() {
            return None;
        }
        // Keep wild steps from leaving the region of interest.
        let cap = 0.5 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let shrink = if size > cap { cap / size } else { 1.0 };
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= shrink * si;
        }
        if size <= 1e-15 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    Some(face.embed(&x))
}

fn reduced_jacobian(system: &OdeSystem, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    if system.domain() == Domain::Simplex {
        let f = |x: &[f64]| {
            let mut full = x.to_vec();
            full.push(1.0 - x.iter().sum::<f64>());
            let mut out = vec![0.0; n];
            system.eval(&full, &mut out);
            out.truncate(n - 1);
            out
        };
        fd_jacobian(&f, &u[..n - 1], n - 1)
    } else {
        let f = |x: &[f64]| {
            let mut out = vec![0.0; n];
            system.eval(x, &mut out);
            out
        };
        fd_jacobian(&f, u, n)
    }
}

fn report(system: &OdeSystem, point: Vec<f64>, margin: f64) -> FixedPointReport {
    let residual = norm(&system.rhs(&point).unwrap_or_else(|_| vec![f64::NAN]));
    let j = reduced_jacobian(system, &point);
    let eigenvalues: Vec<Complex<f64>> = if j.nrows() == 0 {
        Vec::new()
    } else {
        j.complex_eigenvalues().iter().copied().collect()
    };
    let classification = Classification::from_eigenvalues(&eigenvalues, margin);
    FixedPointReport {
        point,
        residual,
        eigenvalues,
        classification,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Finds the equilibria of `system` in its domain.
///
/// Newton runs from a 9-per-axis lattice of starts in the interior and on
/// every face (coordinates pinned at 0). A converged point is kept when its
/// full residual is at most `tol` and it lies in the domain; points closer
/// than `10 tol` are merged. Stability uses [`CLASSIFICATION_MARGIN`].
pub fn find_fixed_points(system: &OdeSystem, tol: f64) -> Result<FixedPointSearch> {
    system.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Ode(format!("tolerance must be positive, got {tol}")));
    }
    let domain = system.domain();
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let (mut total, mut dropped) = (0, 0);
    for face in faces(system) {
        for x0 in starts(face.free.len(), domain) {
            total += 1;
            let Some(u) = newton(system, &face, x0) else {
                dropped += 1;
                continue;
            };
            let residual = match system.rhs(&u) {
                Ok(r) => norm(&r),
                Err(_) => f64::INFINITY,
            };
            if residual > tol || !system.contains(&u, 1e-9) {
                dropped += 1;
                continue;
            }
            match found.iter_mut().find(|(p, _)| {
                norm(&p.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 10.0 * tol
            }) {
                Some(existing) if existing.1 > residual => *existing = (u, residual),
                Some(_) => {}
                None => found.push((u, residual)),
            }
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite roots"));
    Ok(FixedPointSearch {
        roots: found
            .into_iter()
            .map(|(u, _)| report(system, u, CLASSIFICATION_MARGIN))
            .collect(),
        starts: total,
        dropped,
    })
}

/// One row per root: coordinates, eigenvalue real/imaginary pairs, class.
pub fn fixed_points_csv(roots: &[FixedPointReport]) -> String {
    let n = roots.first().map_or(0, |r| r.point.len());
    let m = roots.first().map_or(0, |r| r.eigenvalues.len());
    let mut header: Vec<String> = (0..n).map(|i| format!("u_{i}")).collect();
    for i in 0..m {
        header.push(format!("re_{i}"));
        header.push(format!("im_{i}"));
    }
    header.push("residual".into());
    header.push("class".into());
    csv_rows(
        &header,
        roots.iter().map(|r| {
            let mut row: Vec<String> = r.point.iter().map(|v| v.to_string()).collect();
            for z in &r.eigenvalues {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            row.push(r.residual.to_string());
            row.push(r.classification.as_str().into());
            row
        }),
    )
}
