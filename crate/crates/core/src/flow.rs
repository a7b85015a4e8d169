//! Hamiltonian flow integration on the surface with conservation control.
//!
//! The complex-time flow in direction `d` integrates
//! `z' = d * F_w`, `w' = -d * F_z` with an embedded Dormand-Prince 5(4) pair,
//! then snaps `w` back onto the surface after every accepted step. Direction
//! `1` is the `Re F` Hamiltonian flow; direction `XV_SIGN * i` is the `Im F`
//! one.

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{Curve, CurveError, SurfacePoint, XV_SIGN};
use crate::c64;

const NEWTON_MAX_ITER: usize = 50;
const NEAR_BRANCH_FW: f64 = 1e-8;
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("projection did not converge in {NEWTON_MAX_ITER} iterations; last residual {residual:.3e}")]
    ProjectionFailed { residual: f64 },
    #[error("start point is off the surface: {0}")]
    StartOffSurface(#[from] CurveError),
    #[error("start point is a critical point of F")]
    CriticalStart,
    #[error("direction must be a unit complex number, got modulus {0}")]
    BadDirection(f64),
    #[error("time span must be non-negative, got {0}")]
    NegativeTimeSpan(f64),
    #[error("trajectory entered the {radius:.1e} standoff ball around a critical point at t = {t:.6}")]
    NearCriticalPoint {
        t: f64,
        radius: f64,
        partial: Box<FlowTrace>,
    },
    #[error(
        "trajectory left the representable range at t = {t:.6}: the rounding floor of \
         |F - c| at magnitude {magnitude:.3e} exceeds the drift budget {drift_tol:.1e}"
    )]
    DriftFloorExceeded {
        t: f64,
        magnitude: f64,
        drift_tol: f64,
        partial: Box<FlowTrace>,
    },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("integrator exceeded {MAX_STEPS} steps")]
    TooManySteps,
}

/// A time-stamped flow trajectory on the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    /// `(t, point)` samples, `t` strictly increasing from zero.
    pub samples: Vec<(f64, SurfacePoint)>,
    /// Complex-time direction the trace was integrated in.
    pub direction: Complex64,
    /// Largest on-surface residual among the stored samples.
    pub max_drift: f64,
    /// Largest raw residual seen before the post-step projection.
    pub max_raw_drift: f64,
}

impl FlowTrace {
    pub fn start(&self) -> &SurfacePoint {
        &self.samples[0].1
    }

    pub fn end(&self) -> &SurfacePoint {
        &self.samples.last().expect("trace is never empty").1
    }

    /// CSV export: header `t,re_z,im_z,re_w,im_w,residual`, 17 significant
    /// digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re_z,im_z,re_w,im_w,residual\n");
        for (t, p) in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                t, p.z.re, p.z.im, p.w.re, p.w.im, p.residual
            ));
        }
        out
    }
}

/// Newton projection onto the surface: `w <- w - (F - c)/F_w` with `z`
/// frozen; near a branch point (`|F_w| < 1e-8`) it falls back to a joint
/// least-norm Newton update that may also move `z`.
pub fn project_to_surface(
    curve: &Curve,
    z: Complex64,
    w_guess: Complex64,
    surface_tol: f64,
) -> Result<SurfacePoint, FlowError> {
    let mut z = z;
    let mut w = w_guess;
    let mut residual = curve.residual(z, w);
    for _ in 0..NEWTON_MAX_ITER {
        if residual <= surface_tol {
            return Ok(SurfacePoint { z, w, residual, sheet: None });
        }
        let f = curve.eval(z, w) - curve.level();
        let (fz, fw) = curve.partials(z, w);
        if fw.norm() >= NEAR_BRANCH_FW {
            w -= f / fw;
        } else {
            // Least-norm solution of [F_z F_w] · (dz, dw) = -f.
            let denom = fz.norm_sqr() + fw.norm_sqr();
            if denom == 0.0 {
                break; // critical point: no descent direction
            }
            z -= fz.conj() * f / denom;
            w -= fw.conj() * f / denom;
        }
        residual = curve.residual(z, w);
    }
    if residual <= surface_tol {
        return Ok(SurfacePoint { z, w, residual, sheet: None });
    }
    Err(FlowError::ProjectionFailed { residual })
}

// Dormand-Prince 5(4) tableau. Stage times are not needed: the field is
// autonomous.
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type State = [Complex64; 2];

fn rhs(curve: &Curve, direction: Complex64, y: &State) -> State {
    let (fz, fw) = curve.partials(y[0], y[1]);
    [direction * fw, -direction * fz]
}

/// Integrates the flow from `start` for time `t_end >= 0` with per-step error
/// at most `step_tol`, projecting back onto the surface after every accepted
/// step so that every sample keeps `|F - c| <= drift_tol`.
///
/// The surface is non-compact and some trajectories blow up in finite time;
/// when the evaluation's rounding floor outgrows the drift budget the
/// integration aborts with the partial trace rather than return samples that
/// violate the trace invariant.
pub fn integrate_flow(
    curve: &Curve,
    start: &SurfacePoint,
    direction: Complex64,
    t_end: f64,
    step_tol: f64,
    drift_tol: f64,
) -> Result<FlowTrace, FlowError> {
    if (direction.norm() - 1.0).abs() > 1e-9 {
        return Err(FlowError::BadDirection(direction.norm()));
    }
    if t_end < 0.0 || !t_end.is_finite() {
        return Err(FlowError::NegativeTimeSpan(t_end));
    }
    let start = SurfacePoint::on_surface(curve, start.z, start.w, start.sheet, 1e-8)?;
    let critical = curve.critical_points().unwrap_or_default();
    let standoff = 1e-6;
    let dist_to_critical = |z: Complex64, w: Complex64| -> f64 {
        critical
            .iter()
            .map(|&(zc, wc)| ((z - zc).norm_sqr() + (w - wc).norm_sqr()).sqrt())
            .fold(f64::INFINITY, f64::min)
    };
    if dist_to_critical(start.z, start.w) < standoff {
        return Err(FlowError::CriticalStart);
    }

    let mut trace = FlowTrace {
        samples: vec![(0.0, start)],
        direction,
        max_drift: start.residual,
        max_raw_drift: start.residual,
    };
    if t_end == 0.0 {
        return Ok(trace);
    }

    let mut t = 0.0f64;
    let mut y: State = [start.z, start.w];
    let mut h = (1e-2f64).min(t_end);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(FlowError::TooManySteps);
        }
        if h < 1e-14 * t_end.max(1.0) {
            return Err(FlowError::StepUnderflow(t));
        }
        h = h.min(t_end - t);

        let mut k: [State; 7] = [[Complex64::ZERO; 2]; 7];
        k[0] = rhs(curve, direction, &y);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = DP_A[s][j];
                if a != 0.0 {
                    ys[0] += kj[0] * (a * h);
                    ys[1] += kj[1] * (a * h);
                }
            }
            k[s] = rhs(curve, direction, &ys);
        }
        let mut y5 = y;
        let mut err_vec: State = [Complex64::ZERO; 2];
        for (j, kj) in k.iter().enumerate() {
            if DP_B[j] != 0.0 {
                y5[0] += kj[0] * (DP_B[j] * h);
                y5[1] += kj[1] * (DP_B[j] * h);
            }
            if DP_E[j] != 0.0 {
                err_vec[0] += kj[0] * (DP_E[j] * h);
                err_vec[1] += kj[1] * (DP_E[j] * h);
            }
        }
        let err = (err_vec[0].norm_sqr() + err_vec[1].norm_sqr()).sqrt();

        if err <= step_tol {
            t += h;
            let raw = curve.residual(y5[0], y5[1]);
            // Target well below the drift budget, but respect the rounding
            // floor of the evaluation when the trajectory ranges far out.
            let magnitude = curve.magnitude(y5[0], y5[1]);
            let proj_tol = 1e-12f64.max(16.0 * f64::EPSILON * magnitude);
            let projected = project_to_surface(curve, y5[0], y5[1], proj_tol)?;
            if projected.residual > drift_tol {
                return Err(FlowError::DriftFloorExceeded {
                    t,
                    magnitude,
                    drift_tol,
                    partial: Box::new(trace),
                });
            }
            y = [projected.z, projected.w];
            trace.max_raw_drift = trace.max_raw_drift.max(raw);
            trace.max_drift = trace.max_drift.max(projected.residual);
            trace.samples.push((t, projected));
            if dist_to_critical(projected.z, projected.w) < standoff {
                return Err(FlowError::NearCriticalPoint {
                    t,
                    radius: standoff,
                    partial: Box::new(trace),
                });
            }
        }
        // Standard controller with safety factor and clamped growth.
        let scale = if err > 0.0 {
            0.9 * (step_tol / err).powf(0.2)
        } else {
            5.0
        };
        h *= scale.clamp(0.2, 5.0);
    }
    Ok(trace)
}

/// Distance in `R^4` between the two orders of composing the `Re F` and
/// `Im F` flows for times `s` and `t`. Zero bracket means zero defect.
pub fn commutator_defect(
    curve: &Curve,
    start: &SurfacePoint,
    s_time: f64,
    t_time: f64,
    step_tol: f64,
    drift_tol: f64,
) -> Result<f64, FlowError> {
    let dir_u = Complex64::ONE;
    let dir_v = c64(0.0, XV_SIGN);
    let uv = {
        let first = integrate_flow(curve, start, dir_v, t_time, step_tol, drift_tol)?;
        let second = integrate_flow(curve, first.end(), dir_u, s_time, step_tol, drift_tol)?;
        *second.end()
    };
    let vu = {
        let first = integrate_flow(curve, start, dir_u, s_time, step_tol, drift_tol)?;
        let second = integrate_flow(curve, first.end(), dir_v, t_time, step_tol, drift_tol)?;
        *second.end()
    };
    Ok(uv.embed().sub(&vu.embed()).norm())
}
