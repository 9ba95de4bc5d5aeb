//! Constructive isolating balls for proper gradient flows.
//!
//! `r1` bounds the region where `|∇f_λ| ≤ 1`, `r2` bounds `|f_λ|` on
//! `B(r1)`, and `B(R)` with `R = 2(r1 + r2)` contains every bounded orbit of
//! every flow in the family. Both radii come from sampling, so
//! [`validate_isolation`] checks the resulting ball a posteriori by
//! integrating the flow from its boundary and from the critical points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::{CriticalPoint, HessianSpectrum};
use crate::field::{lambda_grid, FieldFamily, ScalarField};
use crate::flow::{self, FlowOptions, TerminalState, Trajectory};
use crate::sampling::{self, norm, scaled, Stream};

/// Shell multipliers `s` at which `|∇f_λ| > 1` is checked on `|x| = r1·s`.
pub const SHELL_FACTORS: [f64; 5] = [1.0, 1.5, 2.0, 4.0, 8.0];
/// Candidate `r1` values are `2^k` for `k` in this range.
pub const R1_EXPONENTS: std::ops::RangeInclusive<i32> = -3..=20;
/// Number of shell steps across `B(r1)` when maximizing `|f_λ|`.
pub const R2_SHELLS: usize = 16;
pub const R2_INFLATION: f64 = 1.1;
/// Relative slack on the innermost shell: the preimage of the closed unit
/// ball may touch the sphere `|x| = r1`.
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub seed: u64,
    /// Random directions per sphere; `None` means `64·dim²`.
    pub samples_per_sphere: Option<usize>,
    pub lambda_grid_size: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 42,
            samples_per_sphere: None,
            lambda_grid_size: 11,
        }
    }
}

impl SamplingConfig {
    pub fn samples_for(&self, dim: usize) -> usize {
        self.samples_per_sphere
            .unwrap_or_else(|| sampling::default_samples_per_sphere(dim))
    }
}

/// A single field, or a family sampled on a λ grid.
#[derive(Debug, Clone, Copy)]
pub enum FieldSource<'a> {
    Single(&'a ScalarField),
    Family(&'a FieldFamily),
}

impl FieldSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            FieldSource::Single(f) => f.dim(),
            FieldSource::Family(fam) => fam.dim(),
        }
    }

    pub fn lambda_grid(&self, size: usize) -> Vec<f64> {
        match self {
            FieldSource::Single(_) => vec![0.0],
            FieldSource::Family(_) => lambda_grid(size),
        }
    }

    fn members(&self, size: usize) -> Vec<ScalarField> {
        match self {
            FieldSource::Single(f) => vec![(*f).clone()],
            FieldSource::Family(fam) => lambda_grid(size).into_iter().map(|l| fam.at(l)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallProvenance {
    pub seed: u64,
    pub samples_per_sphere: usize,
    pub shell_factors: Vec<f64>,
    pub r2_shells: usize,
    pub r2_inflation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolatingBall {
    pub r1: f64,
    pub r2: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lambda_grid: Vec<f64>,
    pub provenance: BallProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IsolationFailure {
    /// A probe on the boundary sphere stayed bounded in both time directions.
    BoundedBoundaryProbe,
    /// A connecting orbit from a critical point leaves `B(0.99 R)`.
    OrbitLeavesBall,
    /// A critical point lies outside `B(0.99 R)`.
    CriticalPointOutside,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsolateError {
    #[error("no radius 2^k, k <= 20, keeps |∇f| > 1 outside it (the field looks non-proper)")]
    R1NotFound,
    #[error("B(R) is not isolating ({failure:?}) along the trajectory from {:?}", trajectory.start)]
    IsolationViolation {
        failure: IsolationFailure,
        trajectory: Box<Trajectory>,
        report: Box<ValidationReport>,
    },
}

fn shell_directions(dim: usize, sampling: &SamplingConfig) -> Vec<Vec<Vec<f64>>> {
    let mut rng = sampling::rng(sampling.seed, Stream::Radius);
    let samples = sampling.samples_for(dim);
    SHELL_FACTORS
        .iter()
        .map(|_| sampling::sphere_directions(dim, samples, &mut rng))
        .collect()
}

fn shell_passes(field: &ScalarField, directions: &[Vec<f64>], radius: f64, innermost: bool) -> bool {
    let threshold = if innermost { 1.0 - BOUNDARY_SLACK } else { 1.0 };
    directions.iter().all(|u| {
        let g = field.gradient_norm(&scaled(u, radius));
        if innermost {
            g >= threshold
        } else {
            g > threshold
        }
    })
}

/// Smallest `r1 = 2^k` such that every sampled point on the shells
/// `|x| = r1·s`, `s ∈ SHELL_FACTORS`, has `|∇f_λ(x)| > 1` for every λ.
pub fn compute_r1(source: FieldSource<'_>, sampling: &SamplingConfig) -> Result<f64, IsolateError> {
    let members = source.members(sampling.lambda_grid_size);
    let directions = shell_directions(source.dim(), sampling);
    R1_EXPONENTS
        .map(|k| 2f64.powi(k))
        .find(|&r| {
            members.par_iter().all(|field| {
                SHELL_FACTORS
                    .iter()
                    .zip(&directions)
                    .enumerate()
                    .all(|(i, (s, dirs))| shell_passes(field, dirs, r * s, i == 0))
            })
        })
        .ok_or(IsolateError::R1NotFound)
}

/// `1.1 · max |f_λ(x)|` over the λ grid and the shells `|x| = r1·k/16`.
pub fn compute_r2(source: FieldSource<'_>, r1: f64, sampling: &SamplingConfig) -> f64 {
    let dim = source.dim();
    let members = source.members(sampling.lambda_grid_size);
    let mut rng = sampling::rng(sampling.seed, Stream::Extremum);
    let directions = sampling::sphere_directions(dim, sampling.samples_for(dim), &mut rng);
    let mut points = vec![vec![0.0; dim]];
    for k in 1..=R2_SHELLS {
        let r = r1 * k as f64 / R2_SHELLS as f64;
        points.extend(directions.iter().map(|u| scaled(u, r)));
    }
    let max = members
        .par_iter()
        .map(|field| points.iter().map(|x| field.value(x).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    R2_INFLATION * max
}

pub fn assemble_ball(r1: f64, r2: f64) -> IsolatingBall {
    assert!(r1 > 0.0 && r2 >= 0.0, "need r1 > 0 and r2 >= 0");
    IsolatingBall {
        r1,
        r2,
        radius: 2.0 * (r1 + r2),
        lambda_grid: vec![0.0],
        provenance: BallProvenance {
            seed: 0,
            samples_per_sphere: 0,
            shell_factors: SHELL_FACTORS.to_vec(),
            r2_shells: R2_SHELLS,
            r2_inflation: R2_INFLATION,
        },
    }
}

/// Runs the full construction and records its provenance.
pub fn isolating_ball(
    source: FieldSource<'_>,
    sampling: &SamplingConfig,
) -> Result<IsolatingBall, IsolateError> {
    let r1 = compute_r1(source, sampling)?;
    let r2 = compute_r2(source, r1, sampling);
    let mut ball = assemble_ball(r1, r2);
    ball.lambda_grid = source.lambda_grid(sampling.lambda_grid_size);
    ball.provenance.seed = sampling.seed;
    ball.provenance.samples_per_sphere = sampling.samples_for(source.dim());
    Ok(ball)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub probe_count: usize,
    /// Integration horizon for boundary probes.
    pub horizon: f64,
    /// Displacement along unstable eigenvectors when tracing connecting orbits.
    pub offset: f64,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            probe_count: 16,
            horizon: 50.0,
            offset: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationProvenance {
    pub seed: u64,
    pub samples_per_sphere: usize,
    pub probe_count: usize,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub r1: f64,
    pub r2: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lambda_grid: Vec<f64>,
    pub verdict: Verdict,
    pub escaping_fraction: f64,
    /// Longest time any boundary probe needed to leave `B(8R)`.
    pub max_boundary_dwell: f64,
    pub bounded_orbit_count: usize,
    pub provenance: ValidationProvenance,
}

/// Connecting orbits traced from every critical point of positive index
/// along `±v` for each unstable eigenvector `v`, under `-∇f`. Only
/// trajectories captured by a critical point are returned.
pub fn bounded_orbits(
    field: &ScalarField,
    crit: &[CriticalPoint],
    offset: f64,
    bailout: f64,
    flow_opts: &FlowOptions,
) -> Vec<Trajectory> {
    let starts: Vec<Vec<f64>> = crit
        .iter()
        .filter(|p| p.index > 0)
        .flat_map(|p| {
            HessianSpectrum::at(field, &p.location)
                .unstable_basis()
                .into_iter()
                .flat_map(move |v| {
                    [1.0, -1.0].map(|s| {
                        p.location.iter().zip(&v).map(|(x, e)| x + s * offset * e).collect::<Vec<f64>>()
                    })
                })
        })
        .collect();
    starts
        .par_iter()
        .map(|x0| flow::integrate(field, x0, -1, flow::LIMIT_HORIZON, bailout, crit, flow_opts))
        .filter(|t| matches!(t.terminal, TerminalState::Converged(_)))
        .collect()
}

struct ProbeOutcome {
    escaped: bool,
    dwell: f64,
    forward: Trajectory,
}

fn probe(field: &ScalarField, x0: &[f64], bailout: f64, horizon: f64, crit: &[CriticalPoint], opts: &FlowOptions) -> ProbeOutcome {
    let forward = flow::integrate(field, x0, 1, horizon, bailout, crit, opts);
    if forward.terminal == TerminalState::Escaped {
        let dwell = forward.duration();
        return ProbeOutcome { escaped: true, dwell, forward };
    }
    let backward = flow::integrate(field, x0, -1, horizon, bailout, crit, opts);
    let escaped = backward.terminal == TerminalState::Escaped;
    let dwell = if escaped { backward.duration() } else { horizon };
    ProbeOutcome { escaped, dwell, forward }
}

/// Checks that `B(R)` isolates the bounded invariant set of the flow of `∇f`:
/// probes on `∂B(R)` and `∂B(2R)` must leave `B(8R)` forward or backward in
/// time, and the critical points and the connecting orbits traced from them
/// must stay inside `B(0.99 R)`.
pub fn validate_isolation(
    field: &ScalarField,
    ball: &IsolatingBall,
    crit: &[CriticalPoint],
    opts: &ValidationOptions,
    flow_opts: &FlowOptions,
) -> Result<ValidationReport, IsolateError> {
    let dim = field.dim();
    let radius = ball.radius;
    let bailout = 8.0 * radius;
    let inner = 0.99 * radius;

    let mut rng = sampling::rng(opts.seed, Stream::Probes);
    let starts: Vec<Vec<f64>> = [radius, 2.0 * radius]
        .iter()
        .flat_map(|&r| {
            (0..opts.probe_count)
                .map(|_| scaled(&sampling::random_direction(dim, &mut rng), r))
                .collect::<Vec<_>>()
        })
        .collect();
    let outcomes: Vec<ProbeOutcome> = starts
        .par_iter()
        .map(|x0| probe(field, x0, bailout, opts.horizon, crit, flow_opts))
        .collect();
    let escaped = outcomes.iter().filter(|o| o.escaped).count();
    let escaping_fraction = if outcomes.is_empty() { 1.0 } else { escaped as f64 / outcomes.len() as f64 };
    let max_boundary_dwell = outcomes.iter().map(|o| o.dwell).fold(0.0, f64::max);

    let orbits = bounded_orbits(field, crit, opts.offset, bailout, flow_opts);
    let mut report = ValidationReport {
        r1: ball.r1,
        r2: ball.r2,
        radius,
        lambda_grid: ball.lambda_grid.clone(),
        verdict: Verdict::Pass,
        escaping_fraction,
        max_boundary_dwell,
        bounded_orbit_count: orbits.len(),
        provenance: ValidationProvenance {
            seed: opts.seed,
            samples_per_sphere: ball.provenance.samples_per_sphere,
            probe_count: opts.probe_count,
            horizon: opts.horizon,
        },
    };

    let failure = if let Some(o) = outcomes.into_iter().find(|o| !o.escaped) {
        Some((IsolationFailure::BoundedBoundaryProbe, o.forward))
    } else if let Some(p) = crit.iter().find(|p| norm(&p.location) > inner) {
        let trajectory = Trajectory {
            sign: -1,
            start: p.location.clone(),
            samples: vec![(0.0, p.location.clone())],
            terminal: TerminalState::TimedOut,
            max_error_ratio: 0.0,
            step_underflow: false,
        };
        Some((IsolationFailure::CriticalPointOutside, trajectory))
    } else {
        orbits
            .into_iter()
            .find(|t| t.max_norm() > inner)
            .map(|t| (IsolationFailure::OrbitLeavesBall, t))
    };

    match failure {
        None => Ok(report),
        Some((failure, trajectory)) => {
            report.verdict = Verdict::Fail;
            Err(IsolateError::IsolationViolation {
                failure,
                trajectory: Box::new(trajectory),
                report: Box::new(report),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(src: &str, dim: usize) -> ScalarField {
        ScalarField::parse(src, dim).unwrap()
    }

    #[test]
    fn assemble_examples() {
        assert!((assemble_ball(0.5, 0.275).radius - 1.55).abs() < 1e-15);
        assert_eq!(assemble_ball(1.0, 0.0).radius, 2.0);
        assert_eq!(assemble_ball(0.5, 0.25).radius, 1.5);
    }

    #[test]
    fn radial_field_radii() {
        let f = field("x1^2 + x2^2", 2);
        let cfg = SamplingConfig::default();
        let r1 = compute_r1(FieldSource::Single(&f), &cfg).unwrap();
        assert_eq!(r1, 0.5);
        let r2 = compute_r2(FieldSource::Single(&f), r1, &cfg);
        assert!((r2 - 0.275).abs() < 1e-12, "{r2}");
    }

    #[test]
    fn radial_symmetry_in_higher_dimension() {
        let f = field("x1^2 + x2^2 + x3^2 + x4^2", 4);
        let cfg = SamplingConfig::default();
        let ball = isolating_ball(FieldSource::Single(&f), &cfg).unwrap();
        assert_eq!(ball.r1, 0.5);
        assert!((ball.r2 - 0.275).abs() < 1e-12);
        assert_eq!(ball.radius, 2.0 * (ball.r1 + ball.r2));
        assert_eq!(ball.provenance.samples_per_sphere, 64 * 16);
    }

    #[test]
    fn linear_family_between_model_pair_is_not_proper() {
        let f = field("x1^2 + x2^2 + x3^2", 3);
        let g = field("-x1^2 - x2^2 + x3^2", 3);
        let fam = FieldFamily::new(f, g).unwrap();
        let err = compute_r1(FieldSource::Family(&fam), &SamplingConfig::default()).unwrap_err();
        assert_eq!(err, IsolateError::R1NotFound);
    }

    #[test]
    fn zero_field_has_no_r1() {
        let f = field("0", 2);
        assert_eq!(
            compute_r1(FieldSource::Single(&f), &SamplingConfig::default()),
            Err(IsolateError::R1NotFound)
        );
    }

    #[test]
    fn double_well_r2_covers_value_at_origin() {
        let f = field("(x1^2 - 1)^2 + x2^2", 2);
        let cfg = SamplingConfig::default();
        let r1 = compute_r1(FieldSource::Single(&f), &cfg).unwrap();
        assert_eq!(r1, 2.0);
        let r2 = compute_r2(FieldSource::Single(&f), r1, &cfg);
        // max |f| on B(2) is f(±2, 0) = 9, hit by the structured axis directions
        assert!((r2 - 9.9).abs() < 1e-12, "{r2}");
    }

    #[test]
    fn ball_is_deterministic() {
        let f = field("(x1^2 - 1)^2 + x2^2 + x1*x2", 2);
        let cfg = SamplingConfig::default();
        let a = isolating_ball(FieldSource::Single(&f), &cfg).unwrap();
        let b = isolating_ball(FieldSource::Single(&f), &cfg).unwrap();
        assert_eq!(a, b);
    }
}
