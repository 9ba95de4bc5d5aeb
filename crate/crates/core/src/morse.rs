//! The local Morse complex over GF(2).
//!
//! Generators are the critical points, graded by Morse index. The boundary
//! `∂_k` counts, mod 2, the flow lines of `-∇f` from an index-`k` point to an
//! index-`k-1` point. Flow lines are found by shooting from a small sphere
//! around one endpoint:
//!
//! * the unstable sphere of the upper point under `-∇f` when it has
//!   dimension 0 or 1 (`k ≤ 2`);
//! * otherwise the stable sphere of the lower point under `+∇f` when that
//!   has dimension 0 or 1 (`k ≥ n - 1`).
//!
//! On a 0-sphere the two shots are classified directly. On a circle the
//! shots are labelled by their limit point and each change of label between
//! neighbouring shots is bisected down to an arc of `arc_tol`; the orbit
//! separating the two basins is the connecting orbit to be counted.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critical::{brouwer_degree, CriticalPoint, HessianSpectrum};
use crate::field::ScalarField;
use crate::flow::{self, FlowOptions, Limit};
use crate::gf2::Gf2Matrix;
use crate::isolate::{IsolatingBall, ValidationReport};
use crate::pipeline::Provenance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionOptions {
    /// Shots per circle.
    pub resolution: usize,
    /// Radius of the shooting sphere around the critical point.
    pub offset: f64,
    /// Bisection stops once the bracketing arc is shorter than this.
    pub arc_tol: f64,
    /// A bottomed-out bracket is attributed to the critical point its
    /// trajectories pass within this distance of.
    pub approach_tol: f64,
    /// Fraction of shots landing directly on the target above which the
    /// data is flagged as non-transverse.
    pub nontransverse_fraction: f64,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        ConnectionOptions {
            resolution: 64,
            offset: 1e-3,
            arc_tol: 1e-8,
            approach_tol: 1e-3,
            nontransverse_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorseError {
    #[error("critical points {from} and {to} have indices {from_index} and {to_index}; connections are counted only for index difference 1")]
    IndexMismatch {
        from: usize,
        to: usize,
        from_index: usize,
        to_index: usize,
    },
    #[error("shooting from critical point {center} could not resolve the orbit on arc [{arc_start}, {arc_end}] (raise the resolution)")]
    UnresolvedOrbit {
        center: usize,
        arc_start: f64,
        arc_end: f64,
    },
    #[error("{fraction:.3} of the shots from critical point {center} land directly on index-{target_index} points; the function does not look Morse-Smale")]
    NonTransverseSuspicion {
        center: usize,
        target_index: usize,
        fraction: f64,
    },
    #[error("connections between indices {index} and {} need a sphere of dimension > 1 at both ends (dimension {dim})", index - 1)]
    UnsupportedDimension { index: usize, dim: usize },
    #[error("∂∂ ≠ 0: index-{} point {row} reaches index-{} point {col} through {chain:?}", index - 2, index)]
    BoundarySquareNonzero {
        index: usize,
        row: usize,
        col: usize,
        chain: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionCount {
    pub parity: u8,
    pub raw_count: usize,
}

struct Shooter<'a> {
    field: &'a ScalarField,
    crit: &'a [CriticalPoint],
    bailout: f64,
    flow: &'a FlowOptions,
    opts: &'a ConnectionOptions,
}

impl Shooter<'_> {
    fn limit(&self, x0: &[f64], sign: i8) -> Limit {
        flow::integrate(self.field, x0, sign, flow::LIMIT_HORIZON, self.bailout, self.crit, self.flow)
            .terminal
            .into()
    }

    fn target(&self, limit: Limit, target_index: usize) -> Option<usize> {
        match limit {
            Limit::Critical(id) if self.crit[id].index == target_index => Some(id),
            _ => None,
        }
    }

    /// Critical points of `target_index` reached by shots from the sphere
    /// spanned by `basis` around `center`, with multiplicity.
    fn located(
        &self,
        center: usize,
        basis: &[Vec<f64>],
        sign: i8,
        target_index: usize,
    ) -> Result<Vec<usize>, MorseError> {
        let origin = &self.crit[center].location;
        let delta = self.opts.offset;
        match basis {
            [v] => {
                let shots: Vec<Vec<f64>> = [1.0, -1.0]
                    .iter()
                    .map(|s| origin.iter().zip(v).map(|(o, e)| o + s * delta * e).collect())
                    .collect();
                Ok(shots
                    .iter()
                    .filter_map(|x| self.target(self.limit(x, sign), target_index))
                    .collect())
            }
            [e1, e2] => self.located_on_circle(center, e1, e2, sign, target_index),
            _ => unreachable!("shooting spheres have dimension 0 or 1"),
        }
    }

    fn located_on_circle(
        &self,
        center: usize,
        e1: &[f64],
        e2: &[f64],
        sign: i8,
        target_index: usize,
    ) -> Result<Vec<usize>, MorseError> {
        let origin = &self.crit[center].location;
        let delta = self.opts.offset;
        let point = |theta: f64| -> Vec<f64> {
            let (s, c) = theta.sin_cos();
            (0..origin.len())
                .map(|i| origin[i] + delta * (c * e1[i] + s * e2[i]))
                .collect()
        };
        let res = self.opts.resolution.max(3);
        let step = TAU / res as f64;
        let labels: Vec<Limit> = (0..res)
            .into_par_iter()
            .map(|j| self.limit(&point(j as f64 * step), sign))
            .collect();

        let mut found: Vec<usize> = labels
            .iter()
            .filter_map(|&l| self.target(l, target_index))
            .collect();
        let fraction = found.len() as f64 / res as f64;
        if fraction > self.opts.nontransverse_fraction {
            return Err(MorseError::NonTransverseSuspicion {
                center,
                target_index,
                fraction,
            });
        }

        let brackets: Vec<(f64, Limit, f64, Limit)> = (0..res)
            .filter_map(|j| {
                let (a, b) = (labels[j], labels[(j + 1) % res]);
                let is_hit = |l| self.target(l, target_index).is_some();
                (a != b && !is_hit(a) && !is_hit(b))
                    .then(|| (j as f64 * step, a, (j + 1) as f64 * step, b))
            })
            .collect();
        let per_bracket: Vec<Result<Vec<usize>, MorseError>> = brackets
            .into_par_iter()
            .map(|b| self.bisect(center, &point, b, sign, target_index))
            .collect();
        for r in per_bracket {
            found.extend(r?);
        }
        found.sort_unstable();
        Ok(found)
    }

    fn bisect(
        &self,
        center: usize,
        point: &(dyn Fn(f64) -> Vec<f64> + Sync),
        bracket: (f64, Limit, f64, Limit),
        sign: i8,
        target_index: usize,
    ) -> Result<Vec<usize>, MorseError> {
        let mut found = Vec::new();
        let mut stack = vec![bracket];
        while let Some((lo, l_lo, hi, l_hi)) = stack.pop() {
            if hi - lo < self.opts.arc_tol {
                found.push(self.identify(center, point, lo, hi, sign, target_index)?);
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let l_mid = self.limit(&point(mid), sign);
            if let Some(id) = self.target(l_mid, target_index) {
                found.push(id);
            } else if l_mid == l_lo {
                stack.push((mid, l_mid, hi, l_hi));
            } else if l_mid == l_hi {
                stack.push((lo, l_lo, mid, l_mid));
            } else {
                stack.push((lo, l_lo, mid, l_mid));
                stack.push((mid, l_mid, hi, l_hi));
            }
        }
        Ok(found)
    }

    /// The separating orbit passes arbitrarily close to the critical point it
    /// converges to; both bracket ends shadow it there before diverging.
    fn identify(
        &self,
        center: usize,
        point: &(dyn Fn(f64) -> Vec<f64> + Sync),
        lo: f64,
        hi: f64,
        sign: i8,
        target_index: usize,
    ) -> Result<usize, MorseError> {
        let trajectories: Vec<flow::Trajectory> = [lo, hi]
            .iter()
            .map(|&theta| {
                flow::integrate(self.field, &point(theta), sign, flow::LIMIT_HORIZON, self.bailout, self.crit, self.flow)
            })
            .collect();
        self.crit
            .iter()
            .enumerate()
            .filter(|(id, p)| p.index == target_index && *id != center)
            .map(|(id, p)| {
                let d = trajectories
                    .iter()
                    .map(|t| t.closest_approach(&p.location))
                    .fold(f64::INFINITY, f64::min);
                (id, d)
            })
            .filter(|(_, d)| *d < self.opts.approach_tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(id, _)| id)
            .ok_or(MorseError::UnresolvedOrbit {
                center,
                arc_start: lo,
                arc_end: hi,
            })
    }
}

enum Route {
    /// Shoot from the unstable sphere of the upper point under `-∇f`.
    Unstable,
    /// Shoot from the stable sphere of the lower point under `+∇f`.
    Stable,
}

fn route(index: usize, dim: usize) -> Result<Route, MorseError> {
    if index <= 2 {
        Ok(Route::Unstable)
    } else if dim + 1 - index <= 2 {
        Ok(Route::Stable)
    } else {
        Err(MorseError::UnsupportedDimension { index, dim })
    }
}

/// Bailout radius used for all shooting: `4R`.
pub fn bailout(ball: &IsolatingBall) -> f64 {
    4.0 * ball.radius
}

/// Counts flow lines of `-∇f` from `crit[from]` (index `k`) to `crit[to]`
/// (index `k - 1`).
pub fn count_connections(
    field: &ScalarField,
    crit: &[CriticalPoint],
    from: usize,
    to: usize,
    ball: &IsolatingBall,
    opts: &ConnectionOptions,
    flow_opts: &FlowOptions,
) -> Result<ConnectionCount, MorseError> {
    let (p, q) = (&crit[from], &crit[to]);
    if p.index != q.index + 1 {
        return Err(MorseError::IndexMismatch {
            from,
            to,
            from_index: p.index,
            to_index: q.index,
        });
    }
    let shooter = Shooter {
        field,
        crit,
        bailout: bailout(ball),
        flow: flow_opts,
        opts,
    };
    let raw_count = match route(p.index, field.dim())? {
        Route::Unstable => {
            let basis = HessianSpectrum::at(field, &p.location).unstable_basis();
            shooter.located(from, &basis, -1, q.index)?.iter().filter(|&&id| id == to).count()
        }
        Route::Stable => {
            let basis = HessianSpectrum::at(field, &q.location).stable_basis();
            shooter.located(to, &basis, 1, p.index)?.iter().filter(|&&id| id == from).count()
        }
    };
    Ok(ConnectionCount {
        parity: (raw_count % 2) as u8,
        raw_count,
    })
}

/// Raw connection counts for every adjacent-index pair, keyed `(from, to)`.
/// Each shooting sphere is sampled once.
pub fn connection_counts(
    field: &ScalarField,
    crit: &[CriticalPoint],
    ball: &IsolatingBall,
    opts: &ConnectionOptions,
    flow_opts: &FlowOptions,
) -> Result<BTreeMap<(usize, usize), usize>, MorseError> {
    let dim = field.dim();
    let shooter = Shooter {
        field,
        crit,
        bailout: bailout(ball),
        flow: flow_opts,
        opts,
    };
    let mut counts = BTreeMap::new();
    for k in 1..=dim {
        let uppers: Vec<usize> = (0..crit.len()).filter(|&i| crit[i].index == k).collect();
        let lowers: Vec<usize> = (0..crit.len()).filter(|&i| crit[i].index == k - 1).collect();
        if uppers.is_empty() || lowers.is_empty() {
            continue;
        }
        match route(k, dim)? {
            Route::Unstable => {
                for &p in &uppers {
                    let basis = HessianSpectrum::at(field, &crit[p].location).unstable_basis();
                    for q in shooter.located(p, &basis, -1, k - 1)? {
                        *counts.entry((p, q)).or_insert(0) += 1;
                    }
                }
            }
            Route::Stable => {
                for &q in &lowers {
                    let basis = HessianSpectrum::at(field, &crit[q].location).stable_basis();
                    for p in shooter.located(q, &basis, 1, k)? {
                        *counts.entry((p, q)).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseComplex {
    pub dim: usize,
    /// `generators[k]` lists the critical-point ids of index `k`.
    pub generators: Vec<Vec<usize>>,
    /// `boundaries[k - 1]` is `∂_k`: rows index `generators[k - 1]`,
    /// columns index `generators[k]`.
    pub boundaries: Vec<Gf2Matrix>,
    pub raw_counts: BTreeMap<(usize, usize), usize>,
}

impl MorseComplex {
    /// Assembles the complex from raw counts and checks `∂∂ = 0`.
    pub fn from_counts(
        dim: usize,
        crit: &[CriticalPoint],
        raw_counts: BTreeMap<(usize, usize), usize>,
    ) -> Result<Self, MorseError> {
        let generators: Vec<Vec<usize>> = (0..=dim)
            .map(|k| (0..crit.len()).filter(|&i| crit[i].index == k).collect())
            .collect();
        let boundaries: Vec<Gf2Matrix> = (1..=dim)
            .map(|k| {
                let (rows, cols) = (&generators[k - 1], &generators[k]);
                let mut m = Gf2Matrix::zeros(rows.len(), cols.len());
                for (r, &q) in rows.iter().enumerate() {
                    for (c, &p) in cols.iter().enumerate() {
                        let n = raw_counts.get(&(p, q)).copied().unwrap_or(0);
                        m.set(r, c, n % 2 == 1);
                    }
                }
                m
            })
            .collect();
        let complex = MorseComplex {
            dim,
            generators,
            boundaries,
            raw_counts,
        };
        complex.check_square_zero()?;
        Ok(complex)
    }

    pub fn boundary(&self, k: usize) -> &Gf2Matrix {
        &self.boundaries[k - 1]
    }

    fn check_square_zero(&self) -> Result<(), MorseError> {
        for k in 2..=self.dim {
            let (outer, inner) = (self.boundary(k - 1), self.boundary(k));
            let square = outer.mul(inner);
            for r in 0..square.rows() {
                for c in 0..square.cols() {
                    if square.get(r, c) {
                        let chain = (0..inner.rows())
                            .filter(|&m| outer.get(r, m) && inner.get(m, c))
                            .map(|m| self.generators[k - 1][m])
                            .collect();
                        return Err(MorseError::BoundarySquareNonzero {
                            index: k,
                            row: self.generators[k - 2][r],
                            col: self.generators[k][c],
                            chain,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn generator_counts(&self) -> Vec<usize> {
        self.generators.iter().map(Vec::len).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        alternating_sum(&self.generator_counts())
    }
}

fn alternating_sum(v: &[usize]) -> i64 {
    v.iter()
        .enumerate()
        .map(|(k, &c)| if k % 2 == 0 { c as i64 } else { -(c as i64) })
        .sum()
}

/// Counts connections for every adjacent-index pair and assembles the complex.
pub fn build_complex(
    field: &ScalarField,
    crit: &[CriticalPoint],
    ball: &IsolatingBall,
    opts: &ConnectionOptions,
    flow_opts: &FlowOptions,
) -> Result<MorseComplex, MorseError> {
    let counts = connection_counts(field, crit, ball, opts, flow_opts)?;
    MorseComplex::from_counts(field.dim(), crit, counts)
}

/// `b_k = dim C_k - rank ∂_k - rank ∂_{k+1}` over GF(2).
pub fn betti_numbers(complex: &MorseComplex) -> Vec<usize> {
    let ranks: Vec<usize> = complex.boundaries.iter().map(Gf2Matrix::rank).collect();
    let rank = |k: usize| -> usize {
        if k == 0 || k > complex.dim {
            0
        } else {
            ranks[k - 1]
        }
    };
    (0..=complex.dim)
        .map(|k| complex.generators[k].len() - rank(k) - rank(k + 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub x: Vec<f64>,
    pub index: usize,
    pub residual: f64,
    pub hess_det_sign: i32,
    pub min_abs_eigenvalue: f64,
}

impl From<&CriticalPoint> for CriticalRow {
    fn from(p: &CriticalPoint) -> Self {
        CriticalRow {
            x: p.location.clone(),
            index: p.index,
            residual: p.residual,
            hess_det_sign: p.hess_det_sign,
            min_abs_eigenvalue: p.min_abs_eigenvalue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub label: String,
    pub dim: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub ball: IsolatingBall,
    pub critical_points: Vec<CriticalRow>,
    /// `boundary_matrices[k - 1]` is `∂_k` as 0/1 rows.
    pub boundary_matrices: Vec<Vec<Vec<u8>>>,
    /// `dim H^q(f, B(R); Z/2)` for `q = 0..=dim`.
    pub betti: Vec<usize>,
    pub degree: i64,
    pub euler: i64,
    pub validation: ValidationReport,
    pub provenance: Provenance,
}

impl MorseReport {
    /// Panics if the Euler characteristic of the complex disagrees with the
    /// alternating sum of its Betti numbers, which rank–nullity forbids.
    pub fn new(
        label: &str,
        ball: IsolatingBall,
        crit: &[CriticalPoint],
        complex: &MorseComplex,
        validation: ValidationReport,
        provenance: Provenance,
    ) -> Self {
        let betti = betti_numbers(complex);
        let euler = complex.euler_characteristic();
        assert_eq!(euler, alternating_sum(&betti), "rank-nullity violated");
        MorseReport {
            label: label.to_string(),
            dim: complex.dim,
            radius: ball.radius,
            ball,
            critical_points: crit.iter().map(CriticalRow::from).collect(),
            boundary_matrices: complex.boundaries.iter().map(Gf2Matrix::to_rows).collect(),
            betti,
            degree: brouwer_degree(crit).degree,
            euler,
            validation,
            provenance,
        }
    }

    pub fn betti_euler(&self) -> i64 {
        alternating_sum(&self.betti)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientHomotopy {
    /// The cohomology differs, so no path of proper gradient fields exists.
    NotGradientHomotopic,
    /// Matching invariants decide nothing about gradient homotopy.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionVerdict {
    pub proper_homotopic: bool,
    pub gradient_obstruction: bool,
    pub gradient_homotopy: GradientHomotopy,
    pub narrative: String,
}

pub fn obstruction_verdict(a: &MorseReport, b: &MorseReport) -> ObstructionVerdict {
    let proper_homotopic = a.dim == b.dim && a.degree == b.degree;
    let gradient_obstruction = a.betti != b.betti;
    let degrees = format!(
        "deg ∇{} = {}, deg ∇{} = {}",
        a.label, a.degree, b.label, b.degree
    );
    let homotopy = if proper_homotopic {
        "equal degrees: the gradients are homotopic as proper maps"
    } else {
        "different degrees: the gradients are not homotopic as proper maps"
    };
    let (gradient_homotopy, cohomology) = if gradient_obstruction {
        (
            GradientHomotopy::NotGradientHomotopic,
            format!(
                "local Morse cohomology differs ({:?} vs {:?}): the gradients are not gradient homotopic",
                a.betti, b.betti
            ),
        )
    } else {
        (
            GradientHomotopy::Inconclusive,
            format!(
                "local Morse cohomology agrees ({:?}): inconclusive for gradient homotopy",
                a.betti
            ),
        )
    };
    ObstructionVerdict {
        proper_homotopic,
        gradient_obstruction,
        gradient_homotopy,
        narrative: format!("{degrees}; {homotopy}. {cohomology}."),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(x: f64, index: usize) -> CriticalPoint {
        CriticalPoint {
            location: vec![x],
            index,
            hess_det_sign: if index % 2 == 0 { 1 } else { -1 },
            min_abs_eigenvalue: 1.0,
            residual: 0.0,
        }
    }

    #[test]
    fn double_well_complex_from_counts() {
        let crit = [point(-1.0, 0), point(0.0, 1), point(1.0, 0)];
        let counts = BTreeMap::from([((1, 0), 1), ((1, 2), 1)]);
        let c = MorseComplex::from_counts(2, &crit, counts).unwrap();
        assert_eq!(c.boundary(1).to_rows(), vec![vec![1], vec![1]]);
        assert_eq!(c.boundary(2).rows(), 1);
        assert_eq!(c.boundary(2).cols(), 0);
        assert_eq!(betti_numbers(&c), vec![1, 0, 0]);
        assert_eq!(c.euler_characteristic(), 1);
    }

    #[test]
    fn single_generator_complexes() {
        let c = MorseComplex::from_counts(3, &[point(0.0, 0)], BTreeMap::new()).unwrap();
        assert_eq!(betti_numbers(&c), vec![1, 0, 0, 0]);
        let c = MorseComplex::from_counts(3, &[point(0.0, 2)], BTreeMap::new()).unwrap();
        assert_eq!(betti_numbers(&c), vec![0, 0, 1, 0]);
        assert!(c.boundaries.iter().all(|m| m.is_zero()));
    }

    #[test]
    fn even_counts_vanish_mod_two() {
        let crit = [point(0.0, 0), point(1.0, 1)];
        let c = MorseComplex::from_counts(1, &crit, BTreeMap::from([((1, 0), 2)])).unwrap();
        assert!(c.boundary(1).is_zero());
        assert_eq!(betti_numbers(&c), vec![1, 1]);
    }

    #[test]
    fn square_nonzero_is_reported_with_chain() {
        // one index-2 point hitting a single saddle that hits a single minimum
        let crit = [point(0.0, 0), point(1.0, 1), point(2.0, 2)];
        let counts = BTreeMap::from([((1, 0), 1), ((2, 1), 1)]);
        let err = MorseComplex::from_counts(2, &crit, counts).unwrap_err();
        assert_eq!(
            err,
            MorseError::BoundarySquareNonzero {
                index: 2,
                row: 0,
                col: 2,
                chain: vec![1]
            }
        );
    }

    #[test]
    fn routes_cover_dimensions_up_to_four() {
        for dim in 1..=4 {
            for k in 1..=dim {
                assert!(route(k, dim).is_ok(), "k={k} dim={dim}");
            }
        }
        assert!(matches!(route(3, 5), Err(MorseError::UnsupportedDimension { .. })));
    }
}
