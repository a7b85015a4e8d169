//! Small planar geometry helpers shared by continuation and tiling.

use num_complex::Complex64;

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    // Projection parameter clamped to the segment.
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Signed area of a simple polygon (positive when counter-clockwise).
pub fn polygon_area(vertices: &[Complex64]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        twice += a.re * b.im - b.re * a.im;
    }
    0.5 * twice
}

/// Winding-number point-in-polygon test; boundary points count as inside
/// within `tol`.
pub fn point_in_polygon(p: Complex64, vertices: &[Complex64], tol: f64) -> bool {
    let n = vertices.len();
    for i in 0..n {
        if dist_point_segment(p, vertices[i], vertices[(i + 1) % n]) <= tol {
            return true;
        }
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.im <= p.im {
            if b.im > p.im && cross(b - a, p - a) > 0.0 {
                winding += 1;
            }
        } else if b.im <= p.im && cross(b - a, p - a) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn cross(u: Complex64, v: Complex64) -> f64 {
    u.re * v.im - u.im * v.re
}
