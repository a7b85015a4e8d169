//! Analytic continuation of `w` along polyline paths in the `z`-plane, and
//! monodromy of closed loops around branch values.
//!
//! Continuation is convention-free: after the starting value no principal
//! branch is ever taken. The marcher steps a fraction of the distance to the
//! branch set, predicts with the implicit-function derivative `-F_z / F_w`
//! and corrects with a frozen-`z` Newton iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Curve, CurveError};
use crate::geom::dist_point_segment;
use crate::{c64, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("path must contain at least one vertex")]
    EmptyPath,
    #[error("consecutive path vertices {0} and {1} coincide")]
    DuplicateVertex(Complex64, Complex64),
    #[error("w_start is off the surface over the first vertex: residual {0:.3e}")]
    BadStart(f64),
    #[error("path comes within {dist:.3e} of branch value {value} (standoff {standoff:.3e})")]
    StandoffViolation {
        value: Complex64,
        dist: f64,
        standoff: f64,
    },
    #[error("continuation step underflow near the branch set at z = {0}")]
    StepUnderflow(Complex64),
    #[error("corrector failed at {progress:.1}% of the path (residual {residual:.3e})")]
    CorrectorFailed { progress: f64, residual: f64 },
    #[error("loop is not closed: first and last vertices differ by {0:.3e}")]
    NotClosed(f64),
    #[error("sheet resolution ambiguous: continued value {0} matches {1} fiber points")]
    AmbiguousSheet(Complex64, usize),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// A polyline in the `z`-plane carrying the `w` value over its first vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ZPath {
    pub vertices: Vec<Complex64>,
    pub w_start: Complex64,
}

/// Result of continuing `w` along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOutcome {
    pub w_end: Complex64,
    /// `w` over every path vertex, starting with `w_start`.
    pub vertex_ws: Vec<Complex64>,
}

impl ZPath {
    pub fn new(vertices: Vec<Complex64>, w_start: Complex64) -> Result<Self, ContinuationError> {
        if vertices.is_empty() {
            return Err(ContinuationError::EmptyPath);
        }
        for pair in vertices.windows(2) {
            if (pair[0] - pair[1]).norm() == 0.0 {
                return Err(ContinuationError::DuplicateVertex(pair[0], pair[1]));
            }
        }
        Ok(ZPath { vertices, w_start })
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().expect("paths are non-empty")
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        self.vertices.len() > 1 && (self.start() - self.end()).norm() <= tol
    }

    pub fn arc_length(&self) -> f64 {
        self.vertices.windows(2).map(|p| (p[1] - p[0]).norm()).sum()
    }

    /// The same polyline with every segment split at its midpoint.
    pub fn refined(&self) -> ZPath {
        let mut vertices = Vec::with_capacity(self.vertices.len() * 2);
        for pair in self.vertices.windows(2) {
            vertices.push(pair[0]);
            vertices.push((pair[0] + pair[1]) / 2.0);
        }
        vertices.push(self.end());
        ZPath { vertices, w_start: self.w_start }
    }

    /// Regular polygon approximation of a circle, closed, starting at angle
    /// `phase`.
    pub fn circle_loop(
        center: Complex64,
        radius: f64,
        sides: usize,
        phase: f64,
        w_start: Complex64,
    ) -> ZPath {
        let mut vertices: Vec<Complex64> = (0..sides)
            .map(|k| {
                center
                    + Complex64::from_polar(
                        radius,
                        phase + 2.0 * std::f64::consts::PI * k as f64 / sides as f64,
                    )
            })
            .collect();
        vertices.push(vertices[0]);
        ZPath { vertices, w_start }
    }
}

// JSON wire format: {"vertices": [[re, im], ...], "w_start": [re, im]}.
#[derive(Serialize, Deserialize)]
struct ZPathJson {
    vertices: Vec<[f64; 2]>,
    w_start: [f64; 2],
}

impl Serialize for ZPath {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ZPathJson {
            vertices: self.vertices.iter().map(|v| [v.re, v.im]).collect(),
            w_start: [self.w_start.re, self.w_start.im],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ZPath {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = ZPathJson::deserialize(deserializer)?;
        ZPath::new(
            raw.vertices.iter().map(|v| c64(v[0], v[1])).collect(),
            c64(raw.w_start[0], raw.w_start[1]),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Checks the standoff invariant of a path against the curve's branch values.
/// When `allow_branch_terminal` is set the final vertex may coincide with a
/// branch value (quadrature use); that value is then exempt on the last
/// segment only.
pub fn validate_path(
    curve: &Curve,
    path: &ZPath,
    standoff: f64,
    allow_branch_terminal: bool,
) -> Result<(), ContinuationError> {
    let branch_values = curve.branch_points()?.values;
    let terminal = path.end();
    let terminal_is_branch = allow_branch_terminal
        && branch_values.iter().any(|v| (v - terminal).norm() <= 10.0 * crate::roots::ROOT_TOL);
    let n_seg = path.vertices.len().saturating_sub(1);
    for (i, pair) in path.vertices.windows(2).enumerate() {
        let last_segment = i + 1 == n_seg;
        for &v in &branch_values {
            if terminal_is_branch && last_segment && (v - terminal).norm() <= 10.0 * crate::roots::ROOT_TOL {
                continue;
            }
            let dist = dist_point_segment(v, pair[0], pair[1]);
            if dist < standoff {
                return Err(ContinuationError::StandoffViolation { value: v, dist, standoff });
            }
        }
    }
    if path.vertices.len() == 1 {
        for &v in &branch_values {
            let dist = (v - path.vertices[0]).norm();
            if dist < standoff && !(terminal_is_branch) {
                return Err(ContinuationError::StandoffViolation { value: v, dist, standoff });
            }
        }
    }
    Ok(())
}

/// Frozen-`z` Newton iteration for `F(z, w) = c`. On failure the error
/// carries the best iterate and its residual so callers can decide whether
/// the rounding floor is acceptable.
pub(crate) fn newton_w(
    curve: &Curve,
    z: Complex64,
    w0: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<Complex64, (Complex64, f64)> {
    let mut w = w0;
    let mut best = w0;
    let mut best_residual = curve.residual(z, w);
    for _ in 0..max_iter {
        if best_residual <= tol {
            return Ok(best);
        }
        let f = curve.eval(z, w) - curve.level();
        let (_, fw) = curve.partials(z, w);
        if fw.norm() == 0.0 {
            return Err((best, best_residual));
        }
        w -= f / fw;
        let residual = curve.residual(z, w);
        if residual < best_residual {
            best = w;
            best_residual = residual;
        }
    }
    if best_residual <= tol {
        Ok(best)
    } else {
        Err((best, best_residual))
    }
}

pub(crate) struct Marcher<'a> {
    pub curve: &'a Curve,
    pub branch_values: &'a [Complex64],
    /// Step length as a fraction of the distance to the branch set.
    pub step_frac: f64,
    /// Steps shorter than this abort with a standoff/underflow error.
    pub min_step: f64,
    pub w_tol: f64,
}

impl<'a> Marcher<'a> {
    pub fn with_defaults(curve: &'a Curve, branch_values: &'a [Complex64]) -> Self {
        Marcher {
            curve,
            branch_values,
            step_frac: 0.1,
            min_step: 1e-13,
            w_tol: 1e-12,
        }
    }

    fn dist_to_branch(&self, z: Complex64) -> f64 {
        self.branch_values
            .iter()
            .map(|v| (z - v).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Continues `w` from `(from, w)` to `to` along the straight segment.
    pub fn march(
        &self,
        from: Complex64,
        w: Complex64,
        to: Complex64,
    ) -> Result<Complex64, ContinuationError> {
        let mut z = from;
        let mut w = w;
        let total = (to - from).norm();
        if total == 0.0 {
            return Ok(w);
        }
        let dir = (to - from) / total;
        let mut travelled = 0.0f64;
        // Generous cap; geometric shrink near the branch set converges fast.
        for _ in 0..200_000 {
            let remaining = total - travelled;
            if remaining <= 0.0 {
                return Ok(w);
            }
            let allowance = self.step_frac * self.dist_to_branch(z);
            let step = remaining.min(allowance);
            if step < self.min_step {
                return Err(ContinuationError::StepUnderflow(z));
            }
            let z_next = z + dir * step;
            let (fz, fw) = self.curve.partials(z, w);
            let predicted = if fw.norm() > 0.0 {
                w - fz / fw * (dir * step)
            } else {
                w
            };
            // Far from the origin the evaluation's rounding floor exceeds any
            // fixed absolute target; track it.
            let tol = self
                .w_tol
                .max(16.0 * f64::EPSILON * self.curve.magnitude(z_next, predicted));
            match newton_w(self.curve, z_next, predicted, tol, 50) {
                Ok(corrected) => {
                    z = z_next;
                    w = corrected;
                    travelled += step;
                }
                Err((_, residual)) => {
                    return Err(ContinuationError::CorrectorFailed {
                        progress: 100.0 * travelled / total,
                        residual,
                    });
                }
            }
        }
        Err(ContinuationError::StepUnderflow(z))
    }
}

/// Continues `w_start` along the whole path; returns the final `w` and the
/// value over every vertex.
pub fn continue_w(
    curve: &Curve,
    path: &ZPath,
    standoff: f64,
) -> Result<ContinuationOutcome, ContinuationError> {
    validate_path(curve, path, standoff, false)?;
    let residual = curve.residual(path.start(), path.w_start);
    if residual > 1e-8 {
        return Err(ContinuationError::BadStart(residual));
    }
    let branch_values = curve.branch_points()?.values;
    let marcher = Marcher::with_defaults(curve, &branch_values);
    let mut vertex_ws = vec![path.w_start];
    let mut w = path.w_start;
    let total = path.arc_length();
    let mut done = 0.0f64;
    for pair in path.vertices.windows(2) {
        w = marcher.march(pair[0], w, pair[1]).map_err(|e| match e {
            // Rescale the per-segment progress to whole-path progress.
            ContinuationError::CorrectorFailed { progress, residual } => {
                let seg = (pair[1] - pair[0]).norm();
                ContinuationError::CorrectorFailed {
                    progress: 100.0 * (done + seg * progress / 100.0) / total,
                    residual,
                }
            }
            other => other,
        })?;
        done += (pair[1] - pair[0]).norm();
        vertex_ws.push(w);
    }
    Ok(ContinuationOutcome { w_end: w, vertex_ws })
}

/// Monodromy permutation of the fiber over the loop's base vertex: entry `l`
/// holds the index of the fiber point that sheet `l` lands on after one
/// traversal. Fiber indices are in the descending `(Re, Im)` order of
/// [`Curve::fiber`].
pub fn monodromy(curve: &Curve, loop_path: &ZPath) -> Result<Vec<usize>, ContinuationError> {
    let tols = Tolerances::default();
    let closure = (loop_path.start() - loop_path.end()).norm();
    if loop_path.vertices.len() < 2 || closure > 1e-12 {
        return Err(ContinuationError::NotClosed(closure));
    }
    validate_path(curve, loop_path, tols.branch_standoff, false)?;
    let base = loop_path.start();
    let fiber = curve.fiber(base)?;
    let branch_values = curve.branch_points()?.values;
    let marcher = Marcher::with_defaults(curve, &branch_values);
    let mut perm = vec![usize::MAX; fiber.len()];
    let mut hit = vec![false; fiber.len()];
    for (l, &w0) in fiber.iter().enumerate() {
        let mut w = w0;
        for pair in loop_path.vertices.windows(2) {
            w = marcher.march(pair[0], w, pair[1])?;
        }
        let matches: Vec<usize> = fiber
            .iter()
            .enumerate()
            .filter(|(_, &f)| (f - w).norm() <= tols.sheet_match_tol)
            .map(|(j, _)| j)
            .collect();
        if matches.len() != 1 || hit[matches[0]] {
            return Err(ContinuationError::AmbiguousSheet(w, matches.len()));
        }
        hit[matches[0]] = true;
        perm[l] = matches[0];
    }
    Ok(perm)
}
