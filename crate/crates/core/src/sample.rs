//! Seeded random sampling of points and paths used by the audit and tests.

use num_complex::Complex64;
use rand::Rng;

use crate::curve::{Curve, CurveError, SurfacePoint};

/// Uniform point in the closed disk of the given radius.
pub fn random_disk_point<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    Complex64::from_polar(r, th)
}

/// Random points on the surface: `z` uniform in a disk kept clear of the
/// branch values, `w` drawn uniformly from the fiber over `z`.
pub fn random_surface_points<R: Rng>(
    curve: &Curve,
    count: usize,
    radius: f64,
    min_branch_dist: f64,
    rng: &mut R,
) -> Result<Vec<SurfacePoint>, CurveError> {
    let branch_values = curve.branch_points()?.values;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 100_000, "surface sampling starved; disk too constrained");
        let z = random_disk_point(rng, radius);
        if branch_values.iter().any(|v| (z - v).norm() < min_branch_dist) {
            continue;
        }
        let fiber = curve.fiber(z)?;
        if fiber.is_empty() {
            continue;
        }
        let w = fiber[rng.random_range(0..fiber.len())];
        let residual = curve.residual(z, w);
        if residual > 1e-9 {
            continue; // fiber root quality guard
        }
        out.push(SurfacePoint { z, w, residual, sheet: None });
    }
    Ok(out)
}

/// Random endpoints in the unit disk such that the straight segment from the
/// origin to each endpoint stays `min_dist` away from every branch value.
pub fn random_ray_endpoints<R: Rng>(
    count: usize,
    branch_values: &[Complex64],
    min_dist: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 100_000, "endpoint sampling starved");
        let z = random_disk_point(rng, 0.97);
        if z.norm() < 1e-3 {
            continue;
        }
        let clear = branch_values
            .iter()
            .all(|&v| crate::geom::dist_point_segment(v, Complex64::ZERO, z) >= min_dist);
        if clear {
            out.push(z);
        }
    }
    out
}
