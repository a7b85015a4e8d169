//! Path integrals of the holomorphic 1-form `dz / F_w` on the surface, the
//! plane-coordinate map built from them, and the straightening residual of
//! the Hamiltonian flow.
//!
//! For the preset curve the form is `dz / (2w)`, so the integral from 0 to 1
//! along the real axis is half the edge constant `∫₀¹ (1 - z⁶)^(-1/2) dz`.
//! Quadrature is composite 16-node Gauss-Legendre per segment with adaptive
//! bisection; a segment ending on a branch value is regularized with the
//! substitution `z = b - s²(b - a)`, which turns the inverse-square-root
//! endpoint into an analytic integrand in `s`.

use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

use crate::continuation::{self, ContinuationError, Marcher, ZPath};
use crate::curve::{Curve, CurveError, SurfacePoint};
use crate::flow::FlowTrace;
use crate::roots::ROOT_TOL;
use crate::{c64, Tolerances};

const MAX_DEPTH: usize = 40;

#[derive(Debug, Error)]
pub enum AbelianError {
    #[error(transparent)]
    Path(#[from] ContinuationError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("adaptive quadrature exceeded depth {MAX_DEPTH}")]
    QuadratureDepth,
    #[error("quadrature node at z = {z} is {dist:.3e} from a branch value")]
    NodeNearBranch { z: Complex64, dist: f64 },
    #[error("vertex {0} lies on a branch value but is not the final vertex")]
    BranchVertexNotTerminal(usize),
    #[error("base path must start at the basepoint z = 0, found {0}")]
    BaseNotAtOrigin(Complex64),
    #[error("base path w_start is not on sheet 0 over the basepoint")]
    BaseNotSheetZero,
    #[error("base path ends at {path_end}, expected the point's z = {point_z}")]
    BasePathMismatch { path_end: Complex64, point_z: Complex64 },
    #[error("continued w {continued} differs from the point's w {expected} by more than {tol:.1e}")]
    WrongSheet {
        continued: Complex64,
        expected: Complex64,
        tol: f64,
    },
}

/// Value of a path integral of the form, plus the continued `w` at the
/// path's end (the branch `w` itself for a singular terminal vertex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormIntegral {
    pub value: Complex64,
    pub w_end: Complex64,
}

/// The exact rotation-scaling constant `√2 · e^(3πi/4) = -1 + i` of the
/// plane-coordinate map.
pub fn alpha() -> Complex64 {
    c64(-1.0, 1.0)
}

/// Constants of the plane-coordinate map for the preset curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MapConstants {
    /// `-1 + i`, exactly.
    pub alpha: Complex64,
    /// `f(1)` along `[0, 1]`: the integral of `1/(2w)` to the first branch
    /// value.
    pub edge_length: f64,
    /// `2 · edge_length`: the undivided integral `∫₀¹ (1 - z⁶)^(-1/2) dz`,
    /// without the one-half the form `dz/2w` carries.
    pub edge_constant: f64,
}

/// A plane coordinate `ζ = α · f(z)` together with the base path that
/// selects the branch of the multivalued integral.
#[derive(Debug, Clone, PartialEq)]
pub struct StraightCoordinate {
    pub zeta: Complex64,
    pub base_path: ZPath,
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes
// ---------------------------------------------------------------------------

/// 16-point Gauss-Legendre nodes and weights on [-1, 1], computed once by
/// Newton iteration on the Legendre recurrence.
fn gl16() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(16))
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

// ---------------------------------------------------------------------------
// Quadrature along a continued path
// ---------------------------------------------------------------------------

struct QuadContext<'a> {
    marcher: Marcher<'a>,
    branch_values: &'a [Complex64],
    standoff: f64,
    tol: f64,
}

impl<'a> QuadContext<'a> {
    /// Plain Gauss-Legendre on the segment `[a, b]`, with `w` continued
    /// through the nodes; returns the integral and `w` at `b`.
    fn eval_gl(
        &self,
        a: Complex64,
        wa: Complex64,
        b: Complex64,
    ) -> Result<(Complex64, Complex64), AbelianError> {
        let mid = (a + b) / 2.0;
        let half = (b - a) / 2.0;
        let mut z_prev = a;
        let mut w = wa;
        let mut acc = Complex64::ZERO;
        for &(x, weight) in gl16() {
            let z = mid + half * x;
            let dist = self
                .branch_values
                .iter()
                .map(|v| (z - v).norm())
                .fold(f64::INFINITY, f64::min);
            if dist < self.standoff {
                return Err(AbelianError::NodeNearBranch { z, dist });
            }
            w = self.marcher.march(z_prev, w, z)?;
            let (_, fw) = self.marcher.curve.partials(z, w);
            acc += fw.inv() * weight;
            z_prev = z;
        }
        let w_end = self.marcher.march(z_prev, w, b)?;
        Ok((acc * half, w_end))
    }

    fn adaptive(
        &self,
        a: Complex64,
        wa: Complex64,
        b: Complex64,
        tol: f64,
        depth: usize,
    ) -> Result<(Complex64, Complex64), AbelianError> {
        let (whole, _) = self.eval_gl(a, wa, b)?;
        let mid = (a + b) / 2.0;
        let (left, w_mid) = self.eval_gl(a, wa, mid)?;
        let (right, w_end) = self.eval_gl(mid, w_mid, b)?;
        if (whole - (left + right)).norm() <= tol {
            return Ok((left + right, w_end));
        }
        if depth >= MAX_DEPTH {
            return Err(AbelianError::QuadratureDepth);
        }
        let (il, w_mid) = self.adaptive(a, wa, mid, tol / 2.0, depth + 1)?;
        let (ir, w_end) = self.adaptive(mid, w_mid, b, tol / 2.0, depth + 1)?;
        Ok((il + ir, w_end))
    }
}

/// Marching in the substituted variable `s`, where `z(s) = b - s²(b - a)`
/// and `b` is a branch value. The parameterization is regular down to s = 0.
struct SingularLeg<'a> {
    curve: &'a Curve,
    b: Complex64,
    ba: Complex64, // b - a
}

impl<'a> SingularLeg<'a> {
    fn z_of(&self, s: f64) -> Complex64 {
        self.b - self.ba * (s * s)
    }

    /// Continue `w` from `s_from` down to `s_to` (0 <= s_to < s_from).
    fn march(
        &self,
        s_from: f64,
        w_from: Complex64,
        s_to: f64,
    ) -> Result<Complex64, AbelianError> {
        let mut s = s_from;
        let mut w = w_from;
        for _ in 0..100_000 {
            if s <= s_to {
                return Ok(w);
            }
            let ds = (s - s_to).min((0.2 * s).max(1e-9));
            let s_next = s - ds;
            let (fz, fw) = self.curve.partials(self.z_of(s), w);
            // dw/ds = (-F_z / F_w) · dz/ds, and dz/ds = -2 s (b - a).
            let predicted = if fw.norm() > 0.0 {
                w + fz / fw * (self.ba * (2.0 * s)) * (-ds)
            } else {
                w
            };
            let corrected =
                match continuation::newton_w(self.curve, self.z_of(s_next), predicted, 1e-14, 50) {
                    Ok(w) => w,
                    // Accept the rounding floor when the target is below it.
                    Err((best, residual)) if residual <= 1e-12 => best,
                    Err((_, residual)) => {
                        return Err(AbelianError::Path(ContinuationError::CorrectorFailed {
                            progress: 100.0 * (s_from - s_next) / s_from.max(1e-300),
                            residual,
                        }))
                    }
                };
            w = corrected;
            s = s_next;
        }
        Err(AbelianError::QuadratureDepth)
    }

    /// GL quadrature of the transformed integrand
    /// `h(s) = 2 s (b - a) / F_w(z(s), w(s))` over `[s_lo, s_hi]`, marching
    /// from the known value at `s_hi`.
    fn eval_gl(
        &self,
        s_lo: f64,
        s_hi: f64,
        w_hi: Complex64,
    ) -> Result<Complex64, AbelianError> {
        let mid = (s_lo + s_hi) / 2.0;
        let half = (s_hi - s_lo) / 2.0;
        let mut s_prev = s_hi;
        let mut w = w_hi;
        let mut acc = Complex64::ZERO;
        // Walk the nodes from s_hi downward.
        for &(x, weight) in gl16().iter().rev() {
            let s = mid + half * x;
            w = self.march(s_prev, w, s)?;
            let (_, fw) = self.curve.partials(self.z_of(s), w);
            acc += self.ba * (2.0 * s) * fw.inv() * weight;
            s_prev = s;
        }
        Ok(acc * half)
    }

    fn adaptive(
        &self,
        s_lo: f64,
        s_hi: f64,
        w_hi: Complex64,
        tol: f64,
        depth: usize,
    ) -> Result<Complex64, AbelianError> {
        let whole = self.eval_gl(s_lo, s_hi, w_hi)?;
        let mid = (s_lo + s_hi) / 2.0;
        let w_mid = self.march(s_hi, w_hi, mid)?;
        let top = self.eval_gl(mid, s_hi, w_hi)?;
        let bottom = self.eval_gl(s_lo, mid, w_mid)?;
        if (whole - (top + bottom)).norm() <= tol {
            return Ok(top + bottom);
        }
        if depth >= MAX_DEPTH {
            return Err(AbelianError::QuadratureDepth);
        }
        let t = self.adaptive(mid, s_hi, w_hi, tol / 2.0, depth + 1)?;
        let b = self.adaptive(s_lo, mid, w_mid, tol / 2.0, depth + 1)?;
        Ok(t + b)
    }
}

/// Integrates the holomorphic form `dz / F_w` along the path, continuing `w`
/// from `path.w_start`. A branch value may appear only as the final vertex;
/// the last segment is then integrated in the regularized variable.
pub fn integrate_form(
    curve: &Curve,
    path: &ZPath,
    quad_tol: f64,
) -> Result<FormIntegral, AbelianError> {
    let start_residual = curve.residual(path.start(), path.w_start);
    if start_residual > 1e-8 {
        return Err(AbelianError::Path(ContinuationError::BadStart(start_residual)));
    }
    if path.vertices.len() == 1 {
        return Ok(FormIntegral { value: Complex64::ZERO, w_end: path.w_start });
    }
    let tols = Tolerances::default();
    let branch = curve.branch_points()?;
    let near_branch = |z: Complex64| -> Option<usize> {
        branch
            .points
            .iter()
            .position(|p| (p.z - z).norm() <= 10.0 * ROOT_TOL)
    };
    let last = path.vertices.len() - 1;
    for (i, &v) in path.vertices.iter().enumerate() {
        if near_branch(v).is_some() && i != last {
            return Err(AbelianError::BranchVertexNotTerminal(i));
        }
    }
    let terminal_branch = near_branch(path.end());
    continuation::validate_path(curve, path, tols.branch_standoff, terminal_branch.is_some())?;

    let ctx = QuadContext {
        marcher: Marcher::with_defaults(curve, &branch.values),
        branch_values: &branch.values,
        standoff: tols.branch_standoff,
        tol: quad_tol,
    };
    let mut total = Complex64::ZERO;
    let mut w = path.w_start;
    for (i, pair) in path.vertices.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let singular = i + 1 == path.vertices.len() - 1 && terminal_branch.is_some();
        if singular {
            let leg = SingularLeg { curve, b, ba: b - a };
            total += leg.adaptive(0.0, 1.0, w, ctx.tol, 0)?;
            w = branch.points[terminal_branch.unwrap()].w;
        } else {
            let (value, w_end) = ctx.adaptive(a, w, b, ctx.tol, 0)?;
            total += value;
            w = w_end;
        }
    }
    Ok(FormIntegral { value: total, w_end: w })
}

/// Edge constants of the plane map for the preset curve: the integral to the
/// branch value at `z = 1` and its undivided double.
pub fn map_constants(curve: &Curve, quad_tol: f64) -> Result<MapConstants, AbelianError> {
    let w0 = curve.fiber(Complex64::ZERO)?[0];
    let path = ZPath { vertices: vec![Complex64::ZERO, Complex64::ONE], w_start: w0 };
    let l = integrate_form(curve, &path, quad_tol)?.value;
    Ok(MapConstants {
        alpha: alpha(),
        edge_length: l.re,
        edge_constant: 2.0 * l.re,
    })
}

/// Plane coordinate of a surface point: `ζ = α · f(π(point))` with `f`
/// integrated along `base_path` from the basepoint `(0, sheet 0)`.
pub fn delta(
    curve: &Curve,
    point: &SurfacePoint,
    base_path: &ZPath,
    quad_tol: f64,
) -> Result<StraightCoordinate, AbelianError> {
    let tols = Tolerances::default();
    if base_path.start().norm() > 1e-9 {
        return Err(AbelianError::BaseNotAtOrigin(base_path.start()));
    }
    let sheet0 = curve.fiber(Complex64::ZERO)?[0];
    if (base_path.w_start - sheet0).norm() > tols.sheet_match_tol {
        return Err(AbelianError::BaseNotSheetZero);
    }
    if (base_path.end() - point.z).norm() > 1e-9 {
        return Err(AbelianError::BasePathMismatch {
            path_end: base_path.end(),
            point_z: point.z,
        });
    }
    let integral = integrate_form(curve, base_path, quad_tol)?;
    if (integral.w_end - point.w).norm() > tols.sheet_match_tol {
        return Err(AbelianError::WrongSheet {
            continued: integral.w_end,
            expected: point.w,
            tol: tols.sheet_match_tol,
        });
    }
    Ok(StraightCoordinate { zeta: alpha() * integral.value, base_path: base_path.clone() })
}

/// Maximum deviation of the plane image of a flow trace from the straight
/// line `ζ(0) + α·t`: the computable content of the flow-straightening
/// statement.
pub fn straightening_residual(
    curve: &Curve,
    trace: &FlowTrace,
    base_path: &ZPath,
    quad_tol: f64,
) -> Result<f64, AbelianError> {
    let start = delta(curve, trace.start(), base_path, quad_tol)?;
    let a = alpha();
    let mut cumulative = Complex64::ZERO;
    let mut worst = 0.0f64;
    let mut prev = *trace.start();
    for &(t, p) in trace.samples.iter().skip(1) {
        if (p.z - prev.z).norm() > 0.0 {
            let chord = ZPath { vertices: vec![prev.z, p.z], w_start: prev.w };
            cumulative += integrate_form(curve, &chord, quad_tol)?.value;
        }
        let zeta_t = start.zeta + a * cumulative;
        let ideal = start.zeta + a * (t * trace.direction);
        worst = worst.max((zeta_t - ideal).norm());
        prev = p;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_flow, project_to_surface};
    use crate::special;

    fn curve() -> Curve {
        Curve::w2z6()
    }

    fn straight(to: Complex64) -> ZPath {
        ZPath { vertices: vec![Complex64::ZERO, to], w_start: Complex64::ONE }
    }

    /// Power-series oracle for `f` on the real axis inside the unit disk:
    /// `f(z) = ½ Σ c_k z^(6k+1) / (6k+1)` with `c_k = binom(2k, k) / 4^k`.
    fn series_f(z: f64) -> f64 {
        let mut c = 1.0f64;
        let mut total = 0.0;
        for k in 0..60i32 {
            let e = 6 * k + 1;
            total += 0.5 * c * z.powi(e) / f64::from(e);
            c *= (2.0 * f64::from(k) + 1.0) / (2.0 * f64::from(k) + 2.0);
        }
        total
    }

    #[test]
    fn gl16_integrates_polynomials_exactly() {
        let nodes = gl16();
        assert_eq!(nodes.len(), 16);
        // Exact for degree <= 31.
        let int_pow = |p: i32| -> f64 { nodes.iter().map(|&(x, w)| w * x.powi(p)).sum() };
        assert!((int_pow(0) - 2.0).abs() < 1e-14);
        assert!((int_pow(10) - 2.0 / 11.0).abs() < 1e-14);
        assert!(int_pow(31).abs() < 1e-14);
        let int_exp: f64 = nodes.iter().map(|&(x, w)| w * x.exp()).sum();
        assert!((int_exp - 2.0 * 1.0f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn trivial_path_is_zero() {
        let p = ZPath { vertices: vec![Complex64::ZERO], w_start: Complex64::ONE };
        let out = integrate_form(&curve(), &p, 1e-12).unwrap();
        assert_eq!(out.value, Complex64::ZERO);
    }

    #[test]
    fn short_real_segment_matches_taylor() {
        let out = integrate_form(&curve(), &straight(c64(0.01, 0.0)), 1e-12).unwrap();
        let want = 0.005 + 0.01f64.powi(7) / 28.0;
        assert!((out.value - c64(want, 0.0)).norm() < 1e-14, "got {}", out.value);
    }

    #[test]
    fn half_way_matches_series_oracle() {
        let out = integrate_form(&curve(), &straight(c64(0.5, 0.0)), 1e-12).unwrap();
        let want = series_f(0.5);
        assert!((out.value - c64(want, 0.0)).norm() < 1e-12, "got {} want {want}", out.value);
        // And the continued w agrees with the square root.
        assert!((out.w_end - c64((1.0 - 0.5f64.powi(6)).sqrt(), 0.0)).norm() < 1e-11);
    }

    #[test]
    fn singular_endpoint_matches_beta_identity() {
        let constants = map_constants(&curve(), 1e-12).unwrap();
        let reference = special::edge_constant_reference();
        assert!(
            (constants.edge_constant - reference).abs() <= 1e-8,
            "2L = {} vs Beta {}",
            constants.edge_constant,
            reference
        );
        assert_eq!(constants.alpha, c64(-1.0, 1.0));
        assert_eq!(constants.edge_constant, 2.0 * constants.edge_length);
    }

    #[test]
    fn additivity_along_concatenation() {
        let c = curve();
        let mid = c64(0.2, 0.3);
        let end = c64(-0.1, 0.52);
        let whole = ZPath { vertices: vec![Complex64::ZERO, mid, end], w_start: Complex64::ONE };
        let first = ZPath { vertices: vec![Complex64::ZERO, mid], w_start: Complex64::ONE };
        let f1 = integrate_form(&c, &first, 1e-12).unwrap();
        let second = ZPath { vertices: vec![mid, end], w_start: f1.w_end };
        let f2 = integrate_form(&c, &second, 1e-12).unwrap();
        let total = integrate_form(&c, &whole, 1e-12).unwrap();
        assert!((total.value - (f1.value + f2.value)).norm() <= 1e-10);
    }

    #[test]
    fn rotation_equivariance_sampled() {
        let c = curve();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        for &z in &[c64(0.3, 0.2), c64(-0.25, 0.4), c64(0.1, -0.55), c64(0.62, 0.11)] {
            let f = integrate_form(&c, &straight(z), 1e-12).unwrap().value;
            let f_rot = integrate_form(&c, &straight(rot * z), 1e-12).unwrap().value;
            assert!((f_rot - rot * f).norm() <= 1e-8, "equivariance fails at {z}");
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let c = curve();
        let p = ZPath {
            vertices: vec![Complex64::ZERO, c64(0.3, 0.1), c64(0.2, 0.6)],
            w_start: Complex64::ONE,
        };
        let conj = ZPath {
            vertices: p.vertices.iter().map(|v| v.conj()).collect(),
            w_start: Complex64::ONE,
        };
        let f = integrate_form(&c, &p, 1e-12).unwrap().value;
        let f_conj = integrate_form(&c, &conj, 1e-12).unwrap().value;
        assert!((f_conj - f.conj()).norm() <= 1e-8);
    }

    #[test]
    fn refinement_stability() {
        let c = curve();
        let p = ZPath {
            vertices: vec![Complex64::ZERO, c64(0.4, -0.2), c64(0.1, 0.5)],
            w_start: Complex64::ONE,
        };
        let f = integrate_form(&c, &p, 1e-12).unwrap().value;
        let f_ref = integrate_form(&c, &p.refined(), 1e-12).unwrap().value;
        assert!((f - f_ref).norm() <= 1e-9);
    }

    #[test]
    fn delta_examples() {
        let c = curve();
        let origin = SurfacePoint { z: Complex64::ZERO, w: Complex64::ONE, residual: 0.0, sheet: Some(0) };
        let trivial = ZPath { vertices: vec![Complex64::ZERO], w_start: Complex64::ONE };
        let d = delta(&c, &origin, &trivial, 1e-12).unwrap();
        assert_eq!(d.zeta, Complex64::ZERO);

        let z = c64(0.5, 0.0);
        let w = c64((1.0 - 0.5f64.powi(6)).sqrt(), 0.0);
        let point = SurfacePoint { z, w, residual: 0.0, sheet: Some(0) };
        let d = delta(&c, &point, &straight(z), 1e-12).unwrap();
        let f = integrate_form(&c, &straight(z), 1e-12).unwrap().value;
        assert!((d.zeta - alpha() * f).norm() < 1e-14);

        // Wrong sheet is rejected.
        let wrong = SurfacePoint { z, w: -w, residual: 0.0, sheet: Some(1) };
        assert!(matches!(
            delta(&c, &wrong, &straight(z), 1e-12),
            Err(AbelianError::WrongSheet { .. })
        ));
    }

    #[test]
    fn delta_rotation_equivariance() {
        let c = curve();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 3.0);
        let z = c64(0.35, 0.2);
        let to_point = |z: Complex64| -> (SurfacePoint, ZPath) {
            let path = straight(z);
            let out = integrate_form(&c, &path, 1e-12).unwrap();
            (
                SurfacePoint { z, w: out.w_end, residual: c.residual(z, out.w_end), sheet: Some(0) },
                path,
            )
        };
        let (p1, path1) = to_point(z);
        let (p2, path2) = to_point(rot * z);
        let d1 = delta(&c, &p1, &path1, 1e-12).unwrap();
        let d2 = delta(&c, &p2, &path2, 1e-12).unwrap();
        assert!((d2.zeta - rot * d1.zeta).norm() <= 1e-8);
    }

    #[test]
    fn straightening_examples() {
        let c = curve();
        let start = SurfacePoint { z: Complex64::ZERO, w: Complex64::ONE, residual: 0.0, sheet: Some(0) };
        let base = ZPath { vertices: vec![Complex64::ZERO], w_start: Complex64::ONE };

        let zero_time = integrate_flow(&c, &start, Complex64::ONE, 0.0, 1e-10, 1e-8).unwrap();
        assert_eq!(straightening_residual(&c, &zero_time, &base, 1e-12).unwrap(), 0.0);

        let trace = integrate_flow(&c, &start, Complex64::ONE, 0.3, 1e-10, 1e-8).unwrap();
        let r = straightening_residual(&c, &trace, &base, 1e-12).unwrap();
        assert!(r <= 1e-6, "residual {r}");

        // A start away from the basepoint, reached by a straight base path.
        let z0 = c64(0.3, 0.15);
        let p0 = project_to_surface(&c, z0, Complex64::ONE, 1e-12).unwrap();
        let trace = integrate_flow(&c, &p0, Complex64::ONE, 0.25, 1e-10, 1e-8).unwrap();
        let r = straightening_residual(&c, &trace, &straight(z0), 1e-12).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn delta_stable_under_base_path_refinement() {
        let c = curve();
        let z = c64(0.42, -0.17);
        let base = ZPath {
            vertices: vec![Complex64::ZERO, c64(0.1, -0.3), z],
            w_start: Complex64::ONE,
        };
        let w = integrate_form(&c, &base, 1e-12).unwrap().w_end;
        let point = SurfacePoint { z, w, residual: c.residual(z, w), sheet: Some(0) };
        let d = delta(&c, &point, &base, 1e-12).unwrap();
        let d_ref = delta(&c, &point, &base.refined(), 1e-12).unwrap();
        assert!((d.zeta - d_ref.zeta).norm() <= 1e-9);
    }

    #[test]
    fn map_constants_edge_positive() {
        let constants = map_constants(&curve(), 1e-12).unwrap();
        assert!(constants.edge_length > 0.0);
    }

    #[test]
    fn concurrent_evaluation_is_consistent() {
        // All operations are pure; hammer the same integral from several
        // threads and require identical results.
        let c = curve();
        let reference = integrate_form(&c, &straight(c64(0.45, 0.31)), 1e-12).unwrap().value;
        std::thread::scope(|scope| {
            for _ in 0..4 {
                let c = &c;
                scope.spawn(move || {
                    for _ in 0..5 {
                        let v = integrate_form(c, &straight(c64(0.45, 0.31)), 1e-12)
                            .unwrap()
                            .value;
                        assert_eq!(v, reference);
                    }
                });
            }
        });
    }

    #[test]
    fn branch_vertex_must_be_terminal() {
        let c = curve();
        let p = ZPath {
            vertices: vec![Complex64::ZERO, Complex64::ONE, c64(0.5, 0.0)],
            w_start: Complex64::ONE,
        };
        assert!(matches!(
            integrate_form(&c, &p, 1e-12),
            Err(AbelianError::BranchVertexNotTerminal(1))
        ));
    }
}
