//! Scalar fields with exact symbolic gradient and Hessian, the linear
//! homotopy family between two fields, and the properness screen.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::expr::{self, Expr, ParseError};
use crate::sampling::{self, Stream};

/// A smooth function `f: R^dim -> R` together with `∇f` and `Hess f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    f: Expr,
    grad: Vec<Expr>,
    hess: Vec<Vec<Expr>>,
}

impl ScalarField {
    /// Parses `source` and derives the gradient and Hessian symbolically.
    pub fn parse(source: &str, dim: usize) -> Result<Self, ParseError> {
        Ok(Self::from_expr(expr::parse(source, dim)?, dim))
    }

    /// Panics if `f` references a variable beyond `dim`.
    pub fn from_expr(f: Expr, dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        assert!(f.max_var() <= dim, "expression uses x{} in dimension {dim}", f.max_var());
        let f = f.simplify();
        let grad: Vec<Expr> = (1..=dim).map(|i| f.differentiate(i)).collect();
        let hess = grad
            .iter()
            .map(|g| (1..=dim).map(|j| g.differentiate(j)).collect())
            .collect();
        ScalarField { dim, f, grad, hess }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn gradient_exprs(&self) -> &[Expr] {
        &self.grad
    }

    pub fn hessian_exprs(&self) -> &[Vec<Expr>] {
        &self.hess
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.f.evaluate(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.evaluate(x)).collect()
    }

    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        self.grad
            .iter()
            .map(|g| {
                let v = g.evaluate(x);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.hess[i][j].evaluate(x))
    }

    /// The field `-f`; its gradient flow is the time reversal of this one's.
    pub fn negated(&self) -> Self {
        Self::from_expr(Expr::neg(self.f.clone()), self.dim)
    }
}

/// The linear family `f_λ = (1 - λ) f₀ + λ f₁`, `λ ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct FieldFamily {
    start: ScalarField,
    end: ScalarField,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("family endpoints have dimensions {0} and {1}")]
pub struct DimensionMismatch(pub usize, pub usize);

impl FieldFamily {
    pub fn new(start: ScalarField, end: ScalarField) -> Result<Self, DimensionMismatch> {
        if start.dim != end.dim {
            return Err(DimensionMismatch(start.dim, end.dim));
        }
        Ok(FieldFamily { start, end })
    }

    pub fn dim(&self) -> usize {
        self.start.dim
    }

    pub fn endpoints(&self) -> (&ScalarField, &ScalarField) {
        (&self.start, &self.end)
    }

    pub fn at(&self, lambda: f64) -> ScalarField {
        let f = Expr::sum(
            Expr::product(Expr::Const(1.0 - lambda), self.start.f.clone()),
            Expr::product(Expr::Const(lambda), self.end.f.clone()),
        );
        ScalarField::from_expr(f, self.dim())
    }
}

/// Uniform grid of `size` parameter values on `[0, 1]`; `{0}` when `size <= 1`.
pub fn lambda_grid(size: usize) -> Vec<f64> {
    if size <= 1 {
        return vec![0.0];
    }
    (0..size).map(|i| i as f64 / (size - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreenVerdict {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub radii: Vec<f64>,
    /// Minimum sampled `|∇f|` on each sphere.
    pub minima: Vec<f64>,
    pub verdict: ScreenVerdict,
    pub seed: u64,
    pub samples_per_sphere: usize,
}

/// Default screening radii `1, 2, 4, ..., 1024`.
pub fn default_screen_radii() -> Vec<f64> {
    (0..=10).map(|k| f64::from(1u32 << k)).collect()
}

/// Heuristic properness check of `∇f`: the per-sphere minima of `|∇f|`
/// must be finite, end above 1, and be non-decreasing over the last three
/// radii. A pass is evidence, not a proof.
///
/// Panics unless `radii` is non-empty, positive and ascending.
pub fn properness_screen(
    field: &ScalarField,
    radii: &[f64],
    samples_per_sphere: usize,
    seed: u64,
) -> ScreenReport {
    assert!(!radii.is_empty(), "screen needs at least one radius");
    assert!(
        radii[0] > 0.0 && radii.windows(2).all(|w| w[0] < w[1]),
        "screen radii must be positive and ascending"
    );
    let directions =
        sampling::sphere_directions(field.dim(), samples_per_sphere, &mut sampling::rng(seed, Stream::Screen));
    let minima: Vec<f64> = radii
        .iter()
        .map(|&r| {
            directions
                .iter()
                .map(|u| field.gradient_norm(&sampling::scaled(u, r)))
                .fold(f64::INFINITY, |m, v| if v.is_nan() { f64::NAN } else { m.min(v) })
        })
        .collect();
    let tail = &minima[minima.len().saturating_sub(3)..];
    let pass = minima.iter().all(|m| m.is_finite())
        && *minima.last().unwrap() > 1.0
        && tail.windows(2).all(|w| w[0] <= w[1]);
    ScreenReport {
        radii: radii.to_vec(),
        minima,
        verdict: if pass { ScreenVerdict::Pass } else { ScreenVerdict::Warn },
        seed,
        samples_per_sphere,
    }
}

/// Screens every member of the family on the λ grid; passes only if all do.
pub fn screen_family(
    family: &FieldFamily,
    lambda_grid_size: usize,
    radii: &[f64],
    samples_per_sphere: usize,
    seed: u64,
) -> Vec<(f64, ScreenReport)> {
    lambda_grid(lambda_grid_size)
        .into_iter()
        .map(|l| (l, properness_screen(&family.at(l), radii, samples_per_sphere, seed)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares_derivatives() {
        let f = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        assert_eq!(f.gradient_exprs()[0].to_string(), "(2 * x1)");
        assert_eq!(f.gradient_exprs()[1].to_string(), "(2 * x2)");
        let h = f.hessian_exprs();
        assert_eq!(h[0][0], Expr::Const(2.0));
        assert_eq!(h[0][1], Expr::Const(0.0));
        assert_eq!(h[1][0], Expr::Const(0.0));
        assert_eq!(h[1][1], Expr::Const(2.0));
    }

    #[test]
    fn saddle_field_gradient() {
        let g = ScalarField::parse("-x1^2 - x2^2 + x3^2", 3).unwrap();
        let printed: Vec<String> = g.gradient_exprs().iter().map(|e| e.to_string()).collect();
        assert_eq!(printed, ["((-2) * x1)", "((-2) * x2)", "(2 * x3)"]);
        assert_eq!(g.gradient(&[1.0, 2.0, 3.0]), vec![-2.0, -4.0, 6.0]);
    }

    #[test]
    fn linear_field() {
        let f = ScalarField::parse("x1", 1).unwrap();
        assert_eq!(f.gradient_exprs(), &[Expr::Const(1.0)]);
        assert_eq!(f.hessian_exprs(), &[vec![Expr::Const(0.0)]]);
    }

    #[test]
    fn family_endpoints_reproduce_inputs() {
        let f = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        let g = ScalarField::parse("-x1^2 - x2^2 + x1*x2", 2).unwrap();
        let fam = FieldFamily::new(f.clone(), g.clone()).unwrap();
        assert_eq!(fam.at(0.0).expr(), f.expr());
        assert_eq!(fam.at(1.0).expr(), g.expr());
        let mid = fam.at(0.5);
        assert!((mid.value(&[1.0, 2.0]) - 0.5 * (5.0 + -3.0)).abs() < 1e-12);
    }

    #[test]
    fn family_rejects_mismatched_dimensions() {
        let f = ScalarField::parse("x1^2", 1).unwrap();
        let g = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        assert_eq!(FieldFamily::new(f, g).unwrap_err(), DimensionMismatch(1, 2));
    }

    #[test]
    fn lambda_grid_is_uniform() {
        assert_eq!(lambda_grid(1), vec![0.0]);
        assert_eq!(lambda_grid(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(lambda_grid(11)[5], 0.5);
    }

    #[test]
    fn screen_passes_radial_field() {
        let f = ScalarField::parse("x1^2 + x2^2", 2).unwrap();
        let report = properness_screen(&f, &[1.0, 2.0, 4.0, 8.0], 256, 42);
        assert_eq!(report.verdict, ScreenVerdict::Pass);
        for (m, expected) in report.minima.iter().zip([2.0, 4.0, 8.0, 16.0]) {
            assert!((m - expected).abs() < 1e-12, "{m} vs {expected}");
        }
    }

    #[test]
    fn screen_warns_on_constant_gradient() {
        let f = ScalarField::parse("x1", 1).unwrap();
        let report = properness_screen(&f, &[1.0, 2.0, 4.0], 64, 42);
        assert_eq!(report.minima, vec![1.0, 1.0, 1.0]);
        assert_eq!(report.verdict, ScreenVerdict::Warn);
    }

    #[test]
    fn screen_warns_on_periodic_gradient() {
        let f = ScalarField::parse("sin(x1)", 1).unwrap();
        let report = properness_screen(&f, &[1.0, 2.0, 4.0], 64, 42);
        // min |cos r| over the two points ±r of the 1-sphere
        let expected = [0.5403023058681398, 0.4161468365471424, 0.6536436208636119];
        for (m, e) in report.minima.iter().zip(expected) {
            assert!((m - e).abs() < 1e-15);
        }
        assert_eq!(report.verdict, ScreenVerdict::Warn);
    }

    #[test]
    fn screen_detects_flat_axis_of_family_midpoint() {
        let f = ScalarField::parse("x1^2 + x2^2 + x3^2", 3).unwrap();
        let g = ScalarField::parse("-x1^2 - x2^2 + x3^2", 3).unwrap();
        let fam = FieldFamily::new(f, g).unwrap();
        let reports = screen_family(&fam, 11, &default_screen_radii(), 64, 42);
        let (lambda, mid) = &reports[5];
        assert_eq!(*lambda, 0.5);
        assert_eq!(mid.verdict, ScreenVerdict::Warn);
        assert!(reports[0].1.verdict == ScreenVerdict::Pass);
        assert!(reports[10].1.verdict == ScreenVerdict::Pass);
    }
}
