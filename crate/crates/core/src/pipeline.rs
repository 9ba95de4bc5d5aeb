//! End-to-end analysis of one field and comparison of two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::{find_critical_points_seeded, CriticalError, CriticalOptions, CriticalPoint};
use crate::field::{self, FieldFamily, ScalarField, ScreenReport, ScreenVerdict};
use crate::flow::FlowOptions;
use crate::isolate::{
    isolating_ball, validate_isolation, FieldSource, IsolateError, IsolatingBall, SamplingConfig,
    ValidationOptions, ValidationReport,
};
use crate::morse::{build_complex, obstruction_verdict, ConnectionOptions, MorseError, MorseReport, ObstructionVerdict};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub critical: CriticalOptions,
    pub flow: FlowOptions,
    pub sampling: SamplingConfig,
    pub connections: ConnectionOptions,
    pub validation: ValidationOptions,
    pub grid_density: usize,
    pub screen_radii: Vec<f64>,
    /// Skip the properness screen gate before the radius search.
    pub assume_proper: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            critical: CriticalOptions::default(),
            flow: FlowOptions::default(),
            sampling: SamplingConfig::default(),
            connections: ConnectionOptions::default(),
            validation: ValidationOptions::default(),
            grid_density: 9,
            screen_radii: field::default_screen_radii(),
            assume_proper: false,
        }
    }
}

impl AnalysisConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.sampling.seed = seed;
        self.validation.seed = seed;
        self
    }

    pub fn provenance(&self, dim: usize) -> Provenance {
        Provenance {
            seed: self.sampling.seed,
            newton_tol: self.critical.newton_tol,
            degeneracy_tol: self.critical.degeneracy_tol,
            dedupe_tol: self.critical.dedupe_tol,
            step_tol: self.flow.step_tol,
            capture_radius: self.flow.capture_radius,
            resolution: self.connections.resolution,
            grid_density: self.grid_density,
            samples_per_sphere: self.sampling.samples_for(dim),
            lambda_grid_size: self.sampling.lambda_grid_size,
            probe_count: self.validation.probe_count,
            probe_horizon: self.validation.horizon,
            shooting_offset: self.connections.offset,
            arc_tol: self.connections.arc_tol,
        }
    }
}

/// Every parameter a report's numbers depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub newton_tol: f64,
    pub degeneracy_tol: f64,
    pub dedupe_tol: f64,
    pub step_tol: f64,
    pub capture_radius: f64,
    pub resolution: usize,
    pub grid_density: usize,
    pub samples_per_sphere: usize,
    pub lambda_grid_size: usize,
    pub probe_count: usize,
    pub probe_horizon: f64,
    pub shooting_offset: f64,
    pub arc_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("properness screen failed: per-sphere minima of |∇f| are {:?}", .0.minima)]
    NotProper(Box<ScreenReport>),
    #[error(transparent)]
    Isolate(#[from] IsolateError),
    #[error(transparent)]
    Critical(#[from] CriticalError),
    #[error(transparent)]
    Morse(#[from] MorseError),
    #[error("fields have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
}

pub fn screen(field: &ScalarField, cfg: &AnalysisConfig) -> ScreenReport {
    field::properness_screen(
        field,
        &cfg.screen_radii,
        cfg.sampling.samples_for(field.dim()),
        cfg.sampling.seed,
    )
}

/// Screens the field (unless `assume_proper`) and builds its isolating ball.
pub fn ball_for(field: &ScalarField, cfg: &AnalysisConfig) -> Result<IsolatingBall, PipelineError> {
    if !cfg.assume_proper {
        let report = screen(field, cfg);
        if report.verdict == ScreenVerdict::Warn {
            return Err(PipelineError::NotProper(Box::new(report)));
        }
    }
    Ok(isolating_ball(FieldSource::Single(field), &cfg.sampling)?)
}

/// Zeros of `∇f` in `B(R)`, seeded from grids on `[-R, R]^n` and
/// `[-r1, r1]^n`; every zero has `|∇f| = 0 ≤ 1` and so lies in `B(r1)`.
pub fn critical_points(
    field: &ScalarField,
    ball: &IsolatingBall,
    cfg: &AnalysisConfig,
) -> Result<Vec<CriticalPoint>, PipelineError> {
    critical_points_seeded(field, ball, ball.r1, cfg)
}

fn critical_points_seeded(
    field: &ScalarField,
    ball: &IsolatingBall,
    inner_seed: f64,
    cfg: &AnalysisConfig,
) -> Result<Vec<CriticalPoint>, PipelineError> {
    Ok(find_critical_points_seeded(
        field,
        ball.radius,
        &[ball.radius, inner_seed.min(ball.radius)],
        cfg.grid_density,
        &cfg.critical,
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRun {
    pub ball: IsolatingBall,
    pub critical_points: Vec<CriticalPoint>,
    pub validation: ValidationReport,
}

/// Ball, critical points and isolation check for one field.
pub fn radius(field: &ScalarField, cfg: &AnalysisConfig) -> Result<RadiusRun, PipelineError> {
    let ball = ball_for(field, cfg)?;
    let critical_points = critical_points(field, &ball, cfg)?;
    let validation = validate_isolation(field, &ball, &critical_points, &cfg.validation, &cfg.flow)?;
    Ok(RadiusRun {
        ball,
        critical_points,
        validation,
    })
}

/// Full pipeline for one field: ball, critical points, isolation check,
/// Morse complex and Betti numbers.
pub fn analyze(label: &str, field: &ScalarField, cfg: &AnalysisConfig) -> Result<MorseReport, PipelineError> {
    let ball = ball_for(field, cfg)?;
    let seed = ball.r1;
    analyze_in_ball(label, field, ball, seed, cfg)
}

/// Runs the pipeline inside a given ball; `inner_seed` is the half-width of
/// the inner Newton seed grid.
pub fn analyze_in_ball(
    label: &str,
    field: &ScalarField,
    ball: IsolatingBall,
    inner_seed: f64,
    cfg: &AnalysisConfig,
) -> Result<MorseReport, PipelineError> {
    let crit = critical_points_seeded(field, &ball, inner_seed, cfg)?;
    let validation = validate_isolation(field, &ball, &crit, &cfg.validation, &cfg.flow)?;
    let complex = build_complex(field, &crit, &ball, &cfg.connections, &cfg.flow)?;
    Ok(MorseReport::new(
        label,
        ball,
        &crit,
        &complex,
        validation,
        cfg.provenance(field.dim()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    /// One ball isolating every member of the linear family.
    SharedFamily,
    /// The larger of the two endpoint balls.
    PerFieldMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    #[serde(flatten)]
    pub verdict: ObstructionVerdict,
    pub radius_mode: RadiusMode,
    /// Why the shared-family ball was abandoned, if it was.
    pub fallback_reason: Option<String>,
    pub a: MorseReport,
    pub b: MorseReport,
}

fn family_ball(family: &FieldFamily, cfg: &AnalysisConfig) -> Result<IsolatingBall, String> {
    let samples = cfg.sampling.samples_for(family.dim());
    let screens = field::screen_family(
        family,
        cfg.sampling.lambda_grid_size,
        &cfg.screen_radii,
        samples,
        cfg.sampling.seed,
    );
    if let Some((lambda, _)) = screens.iter().find(|(_, r)| r.verdict == ScreenVerdict::Warn) {
        return Err(format!("linear family fails the properness screen at lambda = {lambda}"));
    }
    isolating_ball(FieldSource::Family(family), &cfg.sampling).map_err(|e| format!("linear family: {e}"))
}

/// Analyzes both fields in a common ball and compares their invariants.
pub fn compare(
    label_a: &str,
    a: &ScalarField,
    label_b: &str,
    b: &ScalarField,
    cfg: &AnalysisConfig,
) -> Result<CompareReport, PipelineError> {
    let family =
        FieldFamily::new(a.clone(), b.clone()).map_err(|e| PipelineError::DimensionMismatch(e.0, e.1))?;
    let (ball, inner_seed, radius_mode, fallback_reason) = match family_ball(&family, cfg) {
        Ok(ball) => {
            let seed = ball.r1;
            (ball, seed, RadiusMode::SharedFamily, None)
        }
        Err(reason) => {
            let ball_a = ball_for(a, cfg)?;
            let ball_b = ball_for(b, cfg)?;
            let seed = ball_a.r1.max(ball_b.r1);
            let ball = if ball_b.radius > ball_a.radius { ball_b } else { ball_a };
            (ball, seed, RadiusMode::PerFieldMax, Some(reason))
        }
    };
    let report_a = analyze_in_ball(label_a, a, ball.clone(), inner_seed, cfg)?;
    let report_b = analyze_in_ball(label_b, b, ball, inner_seed, cfg)?;
    Ok(CompareReport {
        verdict: obstruction_verdict(&report_a, &report_b),
        radius_mode,
        fallback_reason,
        a: report_a,
        b: report_b,
    })
}
