mod args;
mod error;
mod input;
mod output;
mod report;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use morseflow::flow::integrate;
use morseflow::isolate::IsolateError;
use morseflow::{brouwer_degree, pipeline, AnalysisConfig, PipelineError};
use serde::Serialize;

use crate::args::{Cli, Command, Format, Tuning};
use crate::error::CliError;
use crate::report::{CriticalPointsReport, RadiusReport, ScreenOutput};

/// A finished command: its JSON payload, text rendering, and file stem.
struct Rendered {
    stem: String,
    json: String,
    text: String,
}

impl Rendered {
    fn new<T: Serialize>(label: &str, command: &str, value: &T, text: String) -> Self {
        let mut json = serde_json::to_string_pretty(value).expect("reports serialize");
        json.push('\n');
        Rendered {
            stem: format!("{label}.{command}"),
            json,
            text,
        }
    }
}

fn config(t: &Tuning) -> AnalysisConfig {
    let mut cfg = AnalysisConfig::default().with_seed(t.seed);
    cfg.critical.newton_tol = t.tol_newton;
    cfg.critical.degeneracy_tol = t.tol_degeneracy;
    cfg.flow.step_tol = t.tol_step;
    cfg.flow.capture_radius = t.capture;
    cfg.connections.resolution = t.resolution as usize;
    cfg.grid_density = t.grid_density as usize;
    cfg.sampling.samples_per_sphere = t.sphere_samples.map(|s| s as usize);
    cfg.assume_proper = t.assume_proper;
    cfg
}

fn emit(tuning: &Tuning, rendered: &Rendered) -> Result<(), CliError> {
    if let Some(dir) = &tuning.out {
        output::write_atomic(dir, &format!("{}.json", rendered.stem), &rendered.json)?;
        output::write_atomic(dir, &format!("{}.txt", rendered.stem), &rendered.text)?;
    }
    let body = match tuning.format {
        Format::Json => &rendered.json,
        Format::Text => &rendered.text,
    };
    print_stdout(body)
}

fn print_stdout(body: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(body.as_bytes())
        .and_then(|()| stdout.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Keeps the offending trajectory of an isolation failure next to the reports.
fn dump_violation(tuning: &Tuning, label: &str, err: &PipelineError) {
    if let (Some(dir), PipelineError::Isolate(IsolateError::IsolationViolation { trajectory, .. })) = (&tuning.out, err) {
        if let Err(e) = output::write_atomic(dir, &format!("{label}.violation.csv"), &trajectory.to_csv()) {
            eprintln!("warning: {e}");
        }
    }
}

fn with_dump<T>(tuning: &Tuning, label: &str, result: Result<T, PipelineError>) -> Result<T, CliError> {
    result.map_err(|e| {
        dump_violation(tuning, label, &e);
        CliError::Pipeline(e)
    })
}

fn critical_points(tuning: &Tuning, cfg: &AnalysisConfig, path: &Path) -> Result<(), CliError> {
    let loaded = input::load(path)?;
    let ball = pipeline::ball_for(&loaded.field, cfg)?;
    let crit = pipeline::critical_points(&loaded.field, &ball, cfg)?;
    let report = CriticalPointsReport::new(
        &loaded.label,
        loaded.field.dim(),
        ball,
        &crit,
        brouwer_degree(&crit),
        cfg.provenance(loaded.field.dim()),
    );
    let text = report::critical_points_text(&report);
    emit(tuning, &Rendered::new(&loaded.label, "critical-points", &report, text))
}

fn radius(tuning: &Tuning, cfg: &AnalysisConfig, path: &Path) -> Result<(), CliError> {
    let loaded = input::load(path)?;
    let run = with_dump(tuning, &loaded.label, pipeline::radius(&loaded.field, cfg))?;
    let report = RadiusReport {
        label: loaded.label.clone(),
        dim: loaded.field.dim(),
        ball: run.ball,
        critical_point_count: run.critical_points.len(),
        validation: run.validation,
        provenance: cfg.provenance(loaded.field.dim()),
    };
    let text = report::radius_text(&report);
    emit(tuning, &Rendered::new(&loaded.label, "radius", &report, text))
}

fn morse(tuning: &Tuning, cfg: &AnalysisConfig, path: &Path) -> Result<(), CliError> {
    let loaded = input::load(path)?;
    let report = with_dump(tuning, &loaded.label, pipeline::analyze(&loaded.label, &loaded.field, cfg))?;
    let text = report::morse_text(&report);
    emit(tuning, &Rendered::new(&loaded.label, "morse", &report, text))
}

fn compare(tuning: &Tuning, cfg: &AnalysisConfig, a: &Path, b: &Path) -> Result<(), CliError> {
    let fa = input::load(a)?;
    let fb = input::load(b)?;
    let stem = format!("{}-{}", fa.label, fb.label);
    let report = with_dump(
        tuning,
        &stem,
        pipeline::compare(&fa.label, &fa.field, &fb.label, &fb.field, cfg),
    )?;
    let text = report::compare_text(&report);
    emit(tuning, &Rendered::new(&stem, "compare", &report, text))
}

fn trace(tuning: &Tuning, cfg: &AnalysisConfig, path: &Path, x0: &[f64], sign: i8, horizon: f64) -> Result<(), CliError> {
    let loaded = input::load(path)?;
    let dim = loaded.field.dim();
    if x0.len() != dim {
        return Err(CliError::Input(format!("--x0 has {} coordinates, the field has dimension {dim}", x0.len())));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Input("--x0 must be finite".to_string()));
    }
    let ball = pipeline::ball_for(&loaded.field, cfg)?;
    let crit = pipeline::critical_points(&loaded.field, &ball, cfg)?;
    let bailout = morseflow::morse::bailout(&ball).max(2.0 * morseflow::sampling::norm(x0));
    let traj = integrate(&loaded.field, x0, sign, horizon, bailout, &crit, &cfg.flow);
    let csv = traj.to_csv();
    if let Some(dir) = &tuning.out {
        output::write_atomic(dir, &format!("{}.trace.csv", loaded.label), &csv)?;
    }
    print_stdout(&csv)
}

fn screen(tuning: &Tuning, cfg: &AnalysisConfig, path: &Path) -> Result<(), CliError> {
    let loaded = input::load(path)?;
    let report = ScreenOutput {
        label: loaded.label.clone(),
        dim: loaded.field.dim(),
        screen: pipeline::screen(&loaded.field, cfg),
    };
    let text = report::screen_text(&report);
    emit(tuning, &Rendered::new(&loaded.label, "screen", &report, text))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = config(&cli.tuning);
    let t = &cli.tuning;
    match &cli.command {
        Command::CriticalPoints { field } => critical_points(t, &cfg, field),
        Command::Radius { field } => radius(t, &cfg, field),
        Command::Morse { field } => morse(t, &cfg, field),
        Command::Compare { a, b } => compare(t, &cfg, a, b),
        Command::Trace {
            field,
            x0,
            sign,
            horizon,
        } => trace(t, &cfg, field, x0, *sign, *horizon),
        Command::Screen { field } => screen(t, &cfg, field),
    }
}

fn main() -> ExitCode {
    // usage errors share exit code 1 with other input errors; clap's
    // default of 2 would collide with the degenerate-point code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
