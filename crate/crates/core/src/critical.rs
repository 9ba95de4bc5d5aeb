//! Critical points of a scalar field and the Brouwer degree of its gradient.

use std::cmp::Ordering;

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::ScalarField;
use crate::sampling::norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    pub newton_tol: f64,
    pub degeneracy_tol: f64,
    pub dedupe_tol: f64,
    pub max_newton_steps: usize,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            newton_tol: 1e-10,
            degeneracy_tol: 1e-8,
            dedupe_tol: 1e-6,
            max_newton_steps: 100,
        }
    }
}

/// A nondegenerate zero of `∇f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    #[serde(rename = "x")]
    pub location: Vec<f64>,
    /// Number of negative Hessian eigenvalues.
    pub index: usize,
    pub hess_det_sign: i32,
    pub min_abs_eigenvalue: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriticalError {
    #[error(
        "degenerate critical point at {location:?}: smallest |eigenvalue| {min_abs_eigenvalue:e} \
         is below the degeneracy tolerance (the function is not Morse to working precision)"
    )]
    DegenerateCriticalPoint {
        location: Vec<f64>,
        min_abs_eigenvalue: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Eigen-decomposition of the Hessian at a point, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HessianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, matching `eigenvalues`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub determinant: f64,
}

impl HessianSpectrum {
    pub fn at(field: &ScalarField, x: &[f64]) -> Self {
        let h = field.hessian(x);
        let sym = (&h + h.transpose()) * 0.5;
        let determinant = sym.determinant();
        let eig = SymmetricEigen::new(sym);
        let mut pairs: Vec<(f64, Vec<f64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &v)| (v, eig.eigenvectors.column(k).iter().copied().collect()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
        HessianSpectrum {
            eigenvalues,
            eigenvectors,
            determinant,
        }
    }

    pub fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn min_abs(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Eigenvectors spanning the unstable space of `-∇f` (negative eigenvalues).
    pub fn unstable_basis(&self) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .filter(|(v, _)| **v < 0.0)
            .map(|(_, e)| e.clone())
            .collect()
    }

    /// Eigenvectors spanning the stable space of `-∇f` (positive eigenvalues).
    pub fn stable_basis(&self) -> Vec<Vec<f64>> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .filter(|(v, _)| **v > 0.0)
            .map(|(_, e)| e.clone())
            .collect()
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// `density^dim` points of the uniform grid on `[-half_width, half_width]^dim`.
pub fn seed_grid(dim: usize, half_width: f64, density: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..density)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / (density - 1) as f64)
        .collect();
    let total = density.pow(dim as u32);
    (0..total)
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let v = axis[code % density];
                    code /= density;
                    v
                })
                .collect()
        })
        .collect()
}

/// Newton's method on `∇f = 0` with the Hessian as Jacobian. Steps are
/// halved until `|∇f|` decreases; the Newton direction is always a descent
/// direction for `|∇f|²`. Returns the converged point and its residual.
pub fn newton(
    field: &ScalarField,
    seed: &[f64],
    escape_radius: f64,
    opts: &CriticalOptions,
) -> Option<(Vec<f64>, f64)> {
    let mut x = seed.to_vec();
    let mut grad = field.gradient(&x);
    let mut residual = norm(&grad);
    for _ in 0..opts.max_newton_steps {
        if residual <= opts.newton_tol {
            return Some((x, residual));
        }
        let h = field.hessian(&x);
        let rhs = -DVector::from_vec(grad.clone());
        let step = h.lu().solve(&rhs)?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            let g = field.gradient(&trial);
            let r = norm(&g);
            if r < residual {
                accepted = Some((trial, g, r));
                break;
            }
            alpha *= 0.5;
        }
        let (trial, g, r) = accepted?;
        x = trial;
        grad = g;
        residual = r;
        if !(norm(&x) <= escape_radius) {
            return None;
        }
    }
    (residual <= opts.newton_tol).then_some((x, residual))
}

/// Classifies a converged zero of `∇f`.
pub fn classify(
    field: &ScalarField,
    location: Vec<f64>,
    residual: f64,
    opts: &CriticalOptions,
) -> Result<CriticalPoint, CriticalError> {
    let spectrum = HessianSpectrum::at(field, &location);
    let min_abs_eigenvalue = spectrum.min_abs();
    let index = spectrum.negative_count();
    let parity = if index % 2 == 0 { 1 } else { -1 };
    let det_sign = if spectrum.determinant > 0.0 {
        1
    } else if spectrum.determinant < 0.0 {
        -1
    } else {
        0
    };
    // a determinant whose sign disagrees with the eigenvalue parity means
    // the spectrum is not resolved at working precision
    if !(min_abs_eigenvalue >= opts.degeneracy_tol) || det_sign != parity {
        return Err(CriticalError::DegenerateCriticalPoint {
            location,
            min_abs_eigenvalue,
        });
    }
    Ok(CriticalPoint {
        location,
        index,
        hess_det_sign: det_sign,
        min_abs_eigenvalue,
        residual,
    })
}

/// Seeds Newton's method from the `grid_density^dim` grid on `[-R, R]^dim`
/// and keeps the distinct converged points in the closed ball `B(R)`.
pub fn find_critical_points(
    field: &ScalarField,
    radius: f64,
    grid_density: usize,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPoint>, CriticalError> {
    find_critical_points_seeded(field, radius, &[radius], grid_density, opts)
}

/// Like [`find_critical_points`], with one seed grid per entry of
/// `seed_half_widths`; all converged points are pooled before deduplication.
pub fn find_critical_points_seeded(
    field: &ScalarField,
    radius: f64,
    seed_half_widths: &[f64],
    grid_density: usize,
    opts: &CriticalOptions,
) -> Result<Vec<CriticalPoint>, CriticalError> {
    if !(radius > 0.0) {
        return Err(CriticalError::InvalidArgument(format!(
            "search radius must be positive, got {radius}"
        )));
    }
    if grid_density < 2 {
        return Err(CriticalError::InvalidArgument(format!(
            "grid density must be at least 2, got {grid_density}"
        )));
    }
    let escape = 10.0 * radius.max(1.0);
    let seeds: Vec<Vec<f64>> = seed_half_widths
        .iter()
        .flat_map(|&w| seed_grid(field.dim(), w, grid_density))
        .collect();
    let mut converged: Vec<(Vec<f64>, f64)> = seeds
        .par_iter()
        .filter_map(|s| newton(field, s, escape, opts))
        .filter(|(x, _)| norm(x) <= radius)
        .collect();

    converged.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (x, r) in converged {
        let duplicate = kept
            .iter()
            .any(|(k, _)| crate::sampling::distance(k, &x) < opts.dedupe_tol);
        if !duplicate {
            kept.push((x, r));
        }
    }
    kept.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    kept.into_iter()
        .map(|(x, r)| classify(field, x, r, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degree: i64,
    pub contributions: Vec<(CriticalPoint, i32)>,
}

/// `deg(∇f, B(R)) = Σ sign det Hess f(p)` over the zeros `p` of `∇f`.
pub fn brouwer_degree(points: &[CriticalPoint]) -> DegreeReport {
    let contributions: Vec<(CriticalPoint, i32)> = points
        .iter()
        .map(|p| (p.clone(), p.hess_det_sign))
        .collect();
    DegreeReport {
        degree: contributions.iter().map(|(_, s)| i64::from(*s)).sum(),
        contributions,
    }
}
