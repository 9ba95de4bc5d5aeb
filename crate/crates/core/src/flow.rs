//! Gradient-flow trajectories `ẋ = ±∇f(x)` integrated with the
//! Dormand–Prince 5(4) embedded pair.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoint;
use crate::field::ScalarField;
use crate::sampling::{distance, norm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Mixed absolute/relative local error tolerance per accepted step.
    pub step_tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub capture_radius: f64,
    /// `|∇f|` must also fall below this for a capture.
    pub capture_gradient: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            step_tol: 1e-9,
            initial_step: 1e-3,
            min_step: 1e-14,
            capture_radius: 1e-4,
            capture_gradient: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalState {
    /// Captured by the critical point with this position in the supplied list.
    Converged(usize),
    Escaped,
    TimedOut,
}

impl fmt::Display for TerminalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalState::Converged(id) => write!(f, "converged:{id}"),
            TerminalState::Escaped => f.write_str("escaped"),
            TerminalState::TimedOut => f.write_str("timed_out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `+1` follows `∇f`, `-1` follows `-∇f`.
    pub sign: i8,
    pub start: Vec<f64>,
    /// `(t, x(t))` at the start and after every accepted step.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub terminal: TerminalState,
    /// Largest scaled error estimate among accepted steps (always ≤ 1).
    pub max_error_ratio: f64,
    /// Set when the adaptive step fell below the minimum; the trajectory is
    /// then reported as timed out.
    pub step_underflow: bool,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has a start sample").1
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|(_, x)| norm(x)).fold(0.0, f64::max)
    }

    /// Smallest distance from any sample to `p`.
    pub fn closest_approach(&self, p: &[f64]) -> f64 {
        self.samples
            .iter()
            .map(|(_, x)| distance(x, p))
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `t,x1,...,xn`, one row per sample, and a trailing
    /// `# terminal=<state>` comment line.
    pub fn to_csv(&self) -> String {
        let dim = self.start.len();
        let mut out = String::from("t");
        for i in 1..=dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, x) in &self.samples {
            out.push_str(&t.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out.push_str(&format!("# terminal={}\n", self.terminal));
        out
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`, first-same-as-last).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Stepper<'a> {
    field: &'a ScalarField,
    sign: f64,
}

impl Stepper<'_> {
    fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.field.gradient(x);
        for v in &mut g {
            *v *= self.sign;
        }
        g
    }

    /// One trial step; returns the fifth-order solution, the scaled error
    /// norm and the derivative at the new point.
    fn step(&self, x: &[f64], k1: &[f64], h: f64, tol: f64) -> (Vec<f64>, f64, Vec<f64>) {
        let n = x.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(k1.to_vec());
        for s in 1..7 {
            let y: Vec<f64> = (0..n)
                .map(|i| x[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                .collect();
            k.push(self.rhs(&y));
        }
        let next: Vec<f64> = (0..n)
            .map(|i| x[i] + h * (0..7).map(|j| B[j] * k[j][i]).sum::<f64>())
            .collect();
        let mut acc = 0.0;
        for i in 0..n {
            let err = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let scale = tol + tol * x[i].abs().max(next[i].abs());
            acc += (err / scale).powi(2);
        }
        let err_norm = (acc / n as f64).sqrt();
        let k7 = k.pop().expect("seven stages");
        (next, err_norm, k7)
    }
}

/// Integrates `ẋ = sign·∇f(x)` from `x0` until capture by a point of `crit`,
/// escape beyond `bailout`, or `t = horizon`.
///
/// Panics if `sign` is not `±1`.
pub fn integrate(
    field: &ScalarField,
    x0: &[f64],
    sign: i8,
    horizon: f64,
    bailout: f64,
    crit: &[CriticalPoint],
    opts: &FlowOptions,
) -> Trajectory {
    assert!(sign == 1 || sign == -1, "flow sign must be ±1");
    let stepper = Stepper {
        field,
        sign: f64::from(sign),
    };
    let captured = |x: &[f64]| -> Option<usize> {
        let near = crit
            .iter()
            .position(|p| distance(x, &p.location) < opts.capture_radius)?;
        (field.gradient_norm(x) < opts.capture_gradient).then_some(near)
    };

    let mut traj = Trajectory {
        sign,
        start: x0.to_vec(),
        samples: vec![(0.0, x0.to_vec())],
        terminal: TerminalState::TimedOut,
        max_error_ratio: 0.0,
        step_underflow: false,
    };
    if norm(x0) > bailout {
        traj.terminal = TerminalState::Escaped;
        return traj;
    }
    if let Some(id) = captured(x0) {
        traj.terminal = TerminalState::Converged(id);
        return traj;
    }

    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut k1 = stepper.rhs(&x);
    let mut h = opts.initial_step.min(horizon);
    while t < horizon {
        h = h.min(horizon - t);
        let (next, err, k7) = stepper.step(&x, &k1, h, opts.step_tol);
        let finite = err.is_finite() && next.iter().all(|v| v.is_finite());
        if finite && err <= 1.0 {
            t = if horizon - t <= h { horizon } else { t + h };
            x = next;
            k1 = k7;
            traj.max_error_ratio = traj.max_error_ratio.max(err);
            traj.samples.push((t, x.clone()));
            if norm(&x) > bailout {
                traj.terminal = TerminalState::Escaped;
                return traj;
            }
            if let Some(id) = captured(&x) {
                traj.terminal = TerminalState::Converged(id);
                return traj;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            let factor = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= factor;
            if h < opts.min_step {
                traj.step_underflow = true;
                return traj;
            }
        }
    }
    traj
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    Critical(usize),
    Escaped,
    Unresolved,
}

impl From<TerminalState> for Limit {
    fn from(t: TerminalState) -> Self {
        match t {
            TerminalState::Converged(id) => Limit::Critical(id),
            TerminalState::Escaped => Limit::Escaped,
            TerminalState::TimedOut => Limit::Unresolved,
        }
    }
}

pub const LIMIT_HORIZON: f64 = 200.0;

/// ω-limit under the descent flow `-∇f`, with `bailout` typically `4R`.
pub fn omega_limit(
    field: &ScalarField,
    x0: &[f64],
    crit: &[CriticalPoint],
    bailout: f64,
    opts: &FlowOptions,
) -> Limit {
    integrate(field, x0, -1, LIMIT_HORIZON, bailout, crit, opts)
        .terminal
        .into()
}

/// α-limit under `-∇f`, i.e. the ω-limit of the ascent flow `+∇f`.
pub fn alpha_limit(
    field: &ScalarField,
    x0: &[f64],
    crit: &[CriticalPoint],
    bailout: f64,
    opts: &FlowOptions,
) -> Limit {
    integrate(field, x0, 1, LIMIT_HORIZON, bailout, crit, opts)
        .terminal
        .into()
}
