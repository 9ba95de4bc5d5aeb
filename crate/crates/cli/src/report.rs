//! Report payloads and their plain-text renderings.

use std::fmt::Write as _;

use morseflow::critical::CriticalPoint;
use morseflow::field::ScreenReport;
use morseflow::isolate::{IsolatingBall, ValidationReport};
use morseflow::morse::{CriticalRow, MorseReport};
use morseflow::pipeline::Provenance;
use morseflow::{CompareReport, DegreeReport};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CriticalPointsReport {
    pub label: String,
    pub dim: usize,
    pub ball: IsolatingBall,
    pub critical_points: Vec<CriticalRow>,
    pub degree: i64,
    pub provenance: Provenance,
}

impl CriticalPointsReport {
    pub fn new(label: &str, dim: usize, ball: IsolatingBall, crit: &[CriticalPoint], degree: DegreeReport, provenance: Provenance) -> Self {
        CriticalPointsReport {
            label: label.to_string(),
            dim,
            ball,
            critical_points: crit.iter().map(CriticalRow::from).collect(),
            degree: degree.degree,
            provenance,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RadiusReport {
    pub label: String,
    pub dim: usize,
    pub ball: IsolatingBall,
    pub critical_point_count: usize,
    pub validation: ValidationReport,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize)]
pub struct ScreenOutput {
    pub label: String,
    pub dim: usize,
    #[serde(flatten)]
    pub screen: ScreenReport,
}

fn vector(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.10}")).collect();
    format!("({})", parts.join(", "))
}

fn ball_lines(out: &mut String, ball: &IsolatingBall) {
    let _ = writeln!(out, "r1 = {}", ball.r1);
    let _ = writeln!(out, "r2 = {}", ball.r2);
    let _ = writeln!(out, "R  = {}", ball.radius);
}

fn critical_table(out: &mut String, rows: &[CriticalRow]) {
    let _ = writeln!(out, "{:>3}  {:>5}  {:>4}  {:>12}  {:>10}  x", "#", "index", "sign", "min|eig|", "residual");
    for (i, row) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>3}  {:>5}  {:>+4}  {:>12.4e}  {:>10.2e}  {}",
            i,
            row.index,
            row.hess_det_sign,
            row.min_abs_eigenvalue,
            row.residual,
            vector(&row.x)
        );
    }
}

fn validation_lines(out: &mut String, v: &ValidationReport) {
    let _ = writeln!(
        out,
        "validation: {:?} (escaping fraction {}, max boundary dwell {:.3}, {} bounded orbits)",
        v.verdict, v.escaping_fraction, v.max_boundary_dwell, v.bounded_orbit_count
    );
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn critical_points_text(r: &CriticalPointsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "field {} (n = {})", r.label, r.dim);
    ball_lines(&mut out, &r.ball);
    critical_table(&mut out, &r.critical_points);
    let _ = writeln!(out, "degree = {}", r.degree);
    out
}

pub fn radius_text(r: &RadiusReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "field {} (n = {})", r.label, r.dim);
    ball_lines(&mut out, &r.ball);
    let _ = writeln!(out, "critical points in B(R): {}", r.critical_point_count);
    validation_lines(&mut out, &r.validation);
    out
}

pub fn morse_text(r: &MorseReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "field {} (n = {})", r.label, r.dim);
    ball_lines(&mut out, &r.ball);
    critical_table(&mut out, &r.critical_points);
    for (k, m) in r.boundary_matrices.iter().enumerate() {
        if m.is_empty() || m[0].is_empty() {
            continue;
        }
        let _ = writeln!(out, "∂_{} =", k + 1);
        for row in m {
            let _ = writeln!(out, "  [{}]", join(row));
        }
    }
    let _ = writeln!(out, "betti  = ({})", join(&r.betti));
    let _ = writeln!(out, "degree = {}", r.degree);
    let _ = writeln!(out, "euler  = {}", r.euler);
    validation_lines(&mut out, &r.validation);
    out
}

pub fn compare_text(r: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "proper_homotopic     = {}", r.verdict.proper_homotopic);
    let _ = writeln!(out, "gradient_obstruction = {}", r.verdict.gradient_obstruction);
    let _ = writeln!(out, "gradient_homotopy    = {:?}", r.verdict.gradient_homotopy);
    let _ = writeln!(out, "radius mode: {:?}", r.radius_mode);
    if let Some(reason) = &r.fallback_reason {
        let _ = writeln!(out, "  ({reason})");
    }
    let _ = writeln!(out, "{}", r.verdict.narrative);
    for side in [&r.a, &r.b] {
        let _ = writeln!(out);
        out.push_str(&morse_text(side));
    }
    out
}

pub fn screen_text(r: &ScreenOutput) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "field {} (n = {})", r.label, r.dim);
    let _ = writeln!(out, "{:>8}  min |∇f|", "radius");
    for (radius, min) in r.screen.radii.iter().zip(&r.screen.minima) {
        let _ = writeln!(out, "{radius:>8}  {min:.6e}");
    }
    let _ = writeln!(out, "verdict: {:?}", r.screen.verdict);
    out
}
