//! Bivariate polynomial curves `F(z, w) = c`, their level-set geometry and
//! Hamiltonian vector fields.
//!
//! The coefficient table is indexed by `(degree in z, degree in w)`. A curve
//! of the shape `F = p(w) + q(z)` is detected on construction; separability is
//! what makes critical points and branch points exactly enumerable.
//!
//! Conventions for the real picture on `R^4 = (Re z, Im z, Re w, Im w)`:
//! the fixed 2-form is `Omega = Re(dz ∧ dw)` and a Hamiltonian field solves
//! `Omega(X, ·) = dh`. Under this convention the field of `u = Re F` embeds
//! the holomorphic field `(F_w, -F_z)` component-wise, and the field of
//! `v = Im F` equals [`XV_SIGN`] times the embedding of `i·(F_w, -F_z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots::{self, RootError};
use crate::c64;

/// Empirically verified global sign relating the `Im F` Hamiltonian field to
/// the rotated holomorphic field: `X_v = XV_SIGN * embed(i * X_F)`.
pub const XV_SIGN: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("coefficient table is empty or has total degree zero")]
    DegenerateCurve,
    #[error("operation requires a separable curve p(w) + q(z)")]
    NotSeparable,
    #[error("point ({z}, {w}) is off the surface: residual {residual:.3e} exceeds {tol:.3e}")]
    OffSurface {
        z: Complex64,
        w: Complex64,
        residual: f64,
        tol: f64,
    },
    #[error("curve coefficient for degree ({0}, {1}) listed twice")]
    DuplicateCoefficient(usize, usize),
    #[error(transparent)]
    Roots(#[from] RootError),
}

/// Separable decomposition `F(z, w) = p(w) + q(z)`; the constant term lives
/// in `p`, so the split is unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableParts {
    /// Ascending coefficients of `p(w)`.
    pub w_poly: Vec<Complex64>,
    /// Ascending coefficients of `q(z)`, zero constant term.
    pub z_poly: Vec<Complex64>,
}

/// A plane algebraic curve `F(z, w) = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    coeffs: Vec<Vec<Complex64>>, // coeffs[dz][dw]
    level: Complex64,
    separable: Option<SeparableParts>,
}

/// A point known to lie on the surface, with its residual and, when the
/// provenance is known, the sheet of the branched covering it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub z: Complex64,
    pub w: Complex64,
    /// `|F(z, w) - c|` at construction time.
    pub residual: f64,
    /// Sheet label of the covering `z`-projection, if tracked.
    pub sheet: Option<usize>,
}

/// A tangent vector on `R^4` in the coordinate order
/// `(Re z, Im z, Re w, Im w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTangent(pub [f64; 4]);

/// Which real Hamiltonian to take: the one for `Re F` or for `Im F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianPart {
    RealPart,
    ImagPart,
}

/// Outcome of the regular-value test.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub regular: bool,
    pub critical_points: Vec<(Complex64, Complex64)>,
    pub critical_values: Vec<Complex64>,
}

/// Branch locus of the covering `(z, w) -> z` restricted to the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchData {
    /// Points on `S` where `F_w = 0`.
    pub points: Vec<SurfacePoint>,
    /// Their `z`-projections, sorted by argument.
    pub values: Vec<Complex64>,
    /// Whether the level is a regular value (branch data is still listed when
    /// it is not, so callers can see what went wrong).
    pub level_is_regular: bool,
}

impl SurfacePoint {
    /// Builds a surface point, verifying the residual against `tol`.
    pub fn on_surface(
        curve: &Curve,
        z: Complex64,
        w: Complex64,
        sheet: Option<usize>,
        tol: f64,
    ) -> Result<Self, CurveError> {
        let residual = curve.residual(z, w);
        if residual > tol {
            return Err(CurveError::OffSurface { z, w, residual, tol });
        }
        Ok(SurfacePoint { z, w, residual, sheet })
    }

    /// Euclidean position in `R^4`.
    pub fn embed(&self) -> RealTangent {
        RealTangent([self.z.re, self.z.im, self.w.re, self.w.im])
    }
}

impl RealTangent {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &RealTangent) -> RealTangent {
        let mut out = [0.0; 4];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(&other.0)) {
            *o = a - b;
        }
        RealTangent(out)
    }

    pub fn scale(&self, s: f64) -> RealTangent {
        RealTangent(self.0.map(|x| x * s))
    }
}

/// Embeds a holomorphic tangent `(dz, dw)` into `R^4`.
pub fn embed(pair: (Complex64, Complex64)) -> RealTangent {
    RealTangent([pair.0.re, pair.0.im, pair.1.re, pair.1.im])
}

/// The fixed 2-form `Re(dz ∧ dw)` applied to two real tangents.
pub fn omega(a: &RealTangent, b: &RealTangent) -> f64 {
    let x = a.0;
    let y = b.0;
    (x[0] * y[2] - x[2] * y[0]) - (x[1] * y[3] - x[3] * y[1])
}

impl Curve {
    /// Builds a curve from a dense coefficient table `coeffs[dz][dw]`.
    pub fn new(coeffs: Vec<Vec<Complex64>>, level: Complex64) -> Result<Self, CurveError> {
        let mut table = coeffs;
        // Normalize row lengths.
        let width = table.iter().map(|r| r.len()).max().unwrap_or(0);
        for row in &mut table {
            row.resize(width, Complex64::ZERO);
        }
        let total_degree = table
            .iter()
            .enumerate()
            .flat_map(|(dz, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() != 0.0)
                    .map(move |(dw, _)| dz + dw)
            })
            .max();
        match total_degree {
            None | Some(0) => return Err(CurveError::DegenerateCurve),
            Some(_) => {}
        }
        let separable = detect_separable(&table);
        Ok(Curve { coeffs: table, level, separable })
    }

    /// Builds a curve from sparse `(deg_z, deg_w, coefficient)` entries.
    pub fn from_sparse(
        entries: &[(usize, usize, Complex64)],
        level: Complex64,
    ) -> Result<Self, CurveError> {
        let dz_max = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let dw_max = entries.iter().map(|e| e.1).max().unwrap_or(0);
        let mut table = vec![vec![Complex64::ZERO; dw_max + 1]; dz_max + 1];
        let mut seen = std::collections::HashSet::new();
        for &(dz, dw, a) in entries {
            if !seen.insert((dz, dw)) {
                return Err(CurveError::DuplicateCoefficient(dz, dw));
            }
            table[dz][dw] = a;
        }
        Curve::new(table, level)
    }

    /// Builds a separable curve `p(w) + q(z) = c` from ascending coefficients.
    pub fn separable(
        w_poly: &[Complex64],
        z_poly: &[Complex64],
        level: Complex64,
    ) -> Result<Self, CurveError> {
        let mut table = vec![vec![Complex64::ZERO; w_poly.len().max(1)]; z_poly.len().max(1)];
        for (dw, &a) in w_poly.iter().enumerate() {
            table[0][dw] += a;
        }
        for (dz, &a) in z_poly.iter().enumerate() {
            table[dz][0] += a;
        }
        Curve::new(table, level)
    }

    /// The example curve `w^2 + z^6 = 1`.
    pub fn w2z6() -> Self {
        Curve::separable(
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            &[
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::ONE,
            ],
            Complex64::ONE,
        )
        .expect("preset is well-formed")
    }

    /// Looks up a named preset.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "w2z6" => Some(Curve::w2z6()),
            _ => None,
        }
    }

    pub fn level(&self) -> Complex64 {
        self.level
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn separable_parts(&self) -> Option<&SeparableParts> {
        self.separable.as_ref()
    }

    /// `F(z, w)` by Horner in `w` inside Horner in `z`.
    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for row in self.coeffs.iter().rev() {
            let mut inner = Complex64::ZERO;
            for &a in row.iter().rev() {
                inner = inner * w + a;
            }
            acc = acc * z + inner;
        }
        acc
    }

    /// `(F_z, F_w)`, evaluated exactly via Horner-with-derivative passes.
    pub fn partials(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
        // F_w: differentiate each row in w, then Horner across rows in z.
        let mut fw = Complex64::ZERO;
        // F_z: Horner the row values, carrying the z-derivative.
        let mut fz = Complex64::ZERO;
        let mut f = Complex64::ZERO;
        for row in self.coeffs.iter().rev() {
            let mut val = Complex64::ZERO;
            let mut dweight = Complex64::ZERO;
            for &a in row.iter().rev() {
                dweight = dweight * w + val;
                val = val * w + a;
            }
            fz = fz * z + f;
            f = f * z + val;
            fw = fw * z + dweight;
        }
        (fz, fw)
    }

    /// `|F(z, w) - c|`.
    pub fn residual(&self, z: Complex64, w: Complex64) -> f64 {
        (self.eval(z, w) - self.level).norm()
    }

    /// Sum of the term magnitudes `|a| |z|^dz |w|^dw` plus `|c|`: the scale
    /// that bounds the rounding floor of the residual, which after
    /// cancellation can greatly exceed `eps · |F - c|`.
    pub fn magnitude(&self, z: Complex64, w: Complex64) -> f64 {
        let (zn, wn) = (z.norm(), w.norm());
        let mut acc = 0.0f64;
        for row in self.coeffs.iter().rev() {
            let mut inner = 0.0f64;
            for a in row.iter().rev() {
                inner = inner * wn + a.norm();
            }
            acc = acc * zn + inner;
        }
        acc + self.level.norm()
    }

    /// The holomorphic Hamiltonian field `(F_w, -F_z)`, which contracts with
    /// `dz ∧ dw` to `dF` and is tangent to every level set.
    pub fn hamiltonian_field(&self, z: Complex64, w: Complex64) -> (Complex64, Complex64) {
        let (fz, fw) = self.partials(z, w);
        (fw, -fz)
    }

    /// Solutions `w` of `F(z, w) = c` for fixed `z`, sorted descending by
    /// `(Re, Im)` so that the label order is reproducible. Sheet 0 of the
    /// example curve at `z = 0` is `w = +1` under this order.
    pub fn fiber(&self, z: Complex64) -> Result<Vec<Complex64>, CurveError> {
        let width = self.coeffs.first().map(|r| r.len()).unwrap_or(0);
        let mut poly = vec![Complex64::ZERO; width];
        for (dw, slot) in poly.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for row in self.coeffs.iter().rev() {
                acc = acc * z + row[dw];
            }
            *slot = acc;
        }
        poly[0] -= self.level;
        let mut ws = roots::distinct_roots(&poly)?;
        ws.sort_by(|a, b| {
            (b.re, b.im)
                .partial_cmp(&(a.re, a.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(ws)
    }

    /// Critical points of `F` (both partials zero). Exact enumeration needs
    /// the separable form.
    pub fn critical_points(&self) -> Result<Vec<(Complex64, Complex64)>, CurveError> {
        let parts = self.separable.as_ref().ok_or(CurveError::NotSeparable)?;
        let dp = roots::poly_derivative(&parts.w_poly);
        let dq = roots::poly_derivative(&parts.z_poly);
        let ws = if dp.iter().all(|a| a.norm() == 0.0) {
            Vec::new()
        } else {
            roots::distinct_roots(&dp)?
        };
        let zs = if dq.iter().all(|a| a.norm() == 0.0) {
            Vec::new()
        } else {
            roots::distinct_roots(&dq)?
        };
        let mut out = Vec::new();
        for &zc in &zs {
            for &wc in &ws {
                out.push((zc, wc));
            }
        }
        Ok(out)
    }

    /// Whether the level is a regular value, together with the critical data
    /// that decides it.
    pub fn is_regular_value(&self) -> Result<RegularityReport, CurveError> {
        let parts = self.separable.as_ref().ok_or(CurveError::NotSeparable)?;
        let critical_points = self.critical_points()?;
        let critical_values: Vec<Complex64> = critical_points
            .iter()
            .map(|&(zc, wc)| {
                roots::poly_eval(&parts.w_poly, wc) + roots::poly_eval(&parts.z_poly, zc)
            })
            .collect();
        let regular = critical_values
            .iter()
            .all(|v| (v - self.level).norm() > roots::ROOT_TOL);
        Ok(RegularityReport { regular, critical_points, critical_values })
    }

    /// Branch points of the `z`-projection: surface points with `F_w = 0`.
    pub fn branch_points(&self) -> Result<BranchData, CurveError> {
        let parts = self.separable.as_ref().ok_or(CurveError::NotSeparable)?;
        let dp = roots::poly_derivative(&parts.w_poly);
        let w_stars = if dp.iter().all(|a| a.norm() == 0.0) {
            Vec::new()
        } else {
            roots::distinct_roots(&dp)?
        };
        let mut points = Vec::new();
        for &w_star in &w_stars {
            // Solve q(z) = c - p(w*).
            let target = self.level - roots::poly_eval(&parts.w_poly, w_star);
            let mut shifted = parts.z_poly.clone();
            if shifted.is_empty() {
                shifted.push(Complex64::ZERO);
            }
            shifted[0] -= target;
            if shifted.iter().all(|a| a.norm() == 0.0) {
                continue; // q constant equal to target: no isolated solutions
            }
            if shifted.len() == 1 {
                continue; // constant nonzero: no solutions
            }
            for z_star in roots::distinct_roots(&shifted)? {
                let residual = self.residual(z_star, w_star);
                points.push(SurfacePoint { z: z_star, w: w_star, residual, sheet: None });
            }
        }
        points.sort_by(|a, b| {
            let ka = (arg_in_2pi(a.z), a.z.norm());
            let kb = (arg_in_2pi(b.z), b.z.norm());
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = points.iter().map(|p| p.z).collect();
        let level_is_regular = self.is_regular_value()?.regular;
        Ok(BranchData { points, values, level_is_regular })
    }
}

fn arg_in_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    // Tiny negative noise should not wrap a ~0 argument to ~2π.
    if a < -1e-12 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a.max(0.0)
    }
}

fn detect_separable(table: &[Vec<Complex64>]) -> Option<SeparableParts> {
    for (dz, row) in table.iter().enumerate() {
        for (dw, a) in row.iter().enumerate() {
            if dz > 0 && dw > 0 && a.norm() != 0.0 {
                return None;
            }
        }
    }
    let w_poly: Vec<Complex64> = table.first()?.clone();
    let mut z_poly: Vec<Complex64> = table.iter().map(|row| row[0]).collect();
    z_poly[0] = Complex64::ZERO; // constant term stays with p(w)
    Some(SeparableParts { w_poly, z_poly })
}

/// Real Hamiltonian vector field of `u = Re F` or `v = Im F` with respect to
/// `Omega = Re(dz ∧ dw)`, convention `Omega(X, ·) = dh`.
///
/// The gradient components follow from holomorphy: with `h = u`,
/// `(h_x1, h_y1, h_x2, h_y2) = (Re F_z, -Im F_z, Re F_w, -Im F_w)`, and the
/// form inversion maps a gradient `g` to `(g[2], -g[3], -g[0], g[1])`.
pub fn real_hamiltonian(
    curve: &Curve,
    z: Complex64,
    w: Complex64,
    which: HamiltonianPart,
) -> RealTangent {
    let (fz, fw) = curve.partials(z, w);
    let g = match which {
        HamiltonianPart::RealPart => [fz.re, -fz.im, fw.re, -fw.im],
        HamiltonianPart::ImagPart => [fz.im, fz.re, fw.im, fw.re],
    };
    RealTangent([g[2], -g[3], -g[0], g[1]])
}

/// `Omega(X_u, X_v)` at the given point; identically zero for holomorphic `F`.
pub fn poisson_bracket(curve: &Curve, z: Complex64, w: Complex64) -> f64 {
    let xu = real_hamiltonian(curve, z, w, HamiltonianPart::RealPart);
    let xv = real_hamiltonian(curve, z, w, HamiltonianPart::ImagPart);
    omega(&xu, &xv)
}

// ---------------------------------------------------------------------------
// Serialization: {"coeffs": [[dz, dw, re, im], ...], "c": [re, im]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CurveJson {
    coeffs: Vec<[f64; 4]>,
    c: [f64; 2],
}

impl Serialize for Curve {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut entries = Vec::new();
        for (dz, row) in self.coeffs.iter().enumerate() {
            for (dw, a) in row.iter().enumerate() {
                if a.norm() != 0.0 {
                    entries.push([dz as f64, dw as f64, a.re, a.im]);
                }
            }
        }
        CurveJson { coeffs: entries, c: [self.level.re, self.level.im] }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Curve {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let raw = CurveJson::deserialize(deserializer)?;
        let mut entries = Vec::new();
        for e in &raw.coeffs {
            let (dz, dw) = (e[0], e[1]);
            if dz < 0.0 || dw < 0.0 || dz.fract() != 0.0 || dw.fract() != 0.0 {
                return Err(D::Error::custom("coefficient degrees must be non-negative integers"));
            }
            entries.push((dz as usize, dw as usize, c64(e[2], e[3])));
        }
        Curve::from_sparse(&entries, c64(raw.c[0], raw.c[1])).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn i() -> Complex64 {
        c64(0.0, 1.0)
    }

    #[test]
    fn eval_examples() {
        let curve = Curve::w2z6();
        assert_eq!(curve.eval(c64(0.0, 0.0), c64(1.0, 0.0)), c64(1.0, 0.0));
        assert_eq!(curve.eval(c64(1.0, 0.0), c64(0.0, 0.0)), c64(1.0, 0.0));
        assert_eq!(curve.eval(c64(1.0, 0.0), c64(1.0, 0.0)), c64(2.0, 0.0));
    }

    #[test]
    fn partials_examples() {
        let curve = Curve::w2z6();
        assert_eq!(curve.partials(Complex64::ZERO, Complex64::ZERO), (Complex64::ZERO, Complex64::ZERO));
        assert_eq!(
            curve.partials(c64(1.0, 0.0), c64(1.0, 0.0)),
            (c64(6.0, 0.0), c64(2.0, 0.0))
        );
        // Direct differentiation oracle: 6 i^5 = 6 i.
        let (fz, fw) = curve.partials(i(), c64(2.0, 0.0));
        assert!((fz - 6.0 * i().powu(5)).norm() < 1e-14);
        assert!((fz - c64(0.0, 6.0)).norm() < 1e-14);
        assert!((fw - c64(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_field_examples() {
        let curve = Curve::w2z6();
        assert_eq!(curve.hamiltonian_field(Complex64::ZERO, c64(1.0, 0.0)), (c64(2.0, 0.0), Complex64::ZERO));
        assert_eq!(curve.hamiltonian_field(c64(1.0, 0.0), Complex64::ZERO), (Complex64::ZERO, c64(-6.0, 0.0)));
        // Vanishes exactly at the critical point.
        assert_eq!(curve.hamiltonian_field(Complex64::ZERO, Complex64::ZERO), (Complex64::ZERO, Complex64::ZERO));
    }

    #[test]
    fn field_matches_partials_everywhere() {
        let curve = Curve::w2z6();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let z = sample::random_disk_point(&mut rng, 2.0);
            let w = sample::random_disk_point(&mut rng, 2.0);
            let (fz, fw) = curve.partials(z, w);
            assert_eq!(curve.hamiltonian_field(z, w), (fw, -fz));
        }
    }

    #[test]
    fn field_is_tangent_to_level_sets() {
        let curve = Curve::w2z6();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let z = sample::random_disk_point(&mut rng, 1.5);
            let w = sample::random_disk_point(&mut rng, 1.5);
            let (fz, fw) = curve.partials(z, w);
            let (zdot, wdot) = curve.hamiltonian_field(z, w);
            assert!((fz * zdot + fw * wdot).norm() <= 1e-12);
        }
    }

    #[test]
    fn real_hamiltonian_closed_form_vs_finite_differences() {
        // Independent oracle: central finite differences of u, v over R^4,
        // then the Omega inversion (g[2], -g[3], -g[0], g[1]).
        let curve = Curve::w2z6();
        let h = 1e-5;
        let grad = |part: HamiltonianPart, z: Complex64, w: Complex64| -> [f64; 4] {
            let scalar = |z: Complex64, w: Complex64| -> f64 {
                let f = curve.eval(z, w);
                match part {
                    HamiltonianPart::RealPart => f.re,
                    HamiltonianPart::ImagPart => f.im,
                }
            };
            [
                (scalar(z + h, w) - scalar(z - h, w)) / (2.0 * h),
                (scalar(z + h * i(), w) - scalar(z - h * i(), w)) / (2.0 * h),
                (scalar(z, w + h) - scalar(z, w - h)) / (2.0 * h),
                (scalar(z, w + h * i()) - scalar(z, w - h * i())) / (2.0 * h),
            ]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let z = sample::random_disk_point(&mut rng, 1.2);
            let w = sample::random_disk_point(&mut rng, 1.2);
            for part in [HamiltonianPart::RealPart, HamiltonianPart::ImagPart] {
                let g = grad(part, z, w);
                let oracle = RealTangent([g[2], -g[3], -g[0], g[1]]);
                let got = real_hamiltonian(&curve, z, w, part);
                assert!(got.sub(&oracle).norm() < 1e-7, "fd oracle mismatch at ({z}, {w})");
            }
        }
    }

    #[test]
    fn real_hamiltonian_examples() {
        let curve = Curve::w2z6();
        let xu = real_hamiltonian(&curve, Complex64::ZERO, c64(1.0, 0.0), HamiltonianPart::RealPart);
        assert_eq!(xu.0, [2.0, 0.0, 0.0, 0.0]);
        let xv = real_hamiltonian(&curve, Complex64::ZERO, c64(1.0, 0.0), HamiltonianPart::ImagPart);
        assert_eq!(xv.0, [0.0, -2.0, 0.0, 0.0]);
        let at_crit = real_hamiltonian(&curve, Complex64::ZERO, Complex64::ZERO, HamiltonianPart::RealPart);
        assert_eq!(at_crit.0, [0.0; 4]);
    }

    #[test]
    fn embedding_identities_and_global_sign() {
        let curve = Curve::w2z6();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let z = sample::random_disk_point(&mut rng, 1.4);
            let w = sample::random_disk_point(&mut rng, 1.4);
            let xf = curve.hamiltonian_field(z, w);
            let xu = real_hamiltonian(&curve, z, w, HamiltonianPart::RealPart);
            assert!(xu.sub(&embed(xf)).norm() <= 1e-12);
            let xv = real_hamiltonian(&curve, z, w, HamiltonianPart::ImagPart);
            let rotated = embed((i() * xf.0, i() * xf.1));
            assert!(xv.sub(&rotated.scale(XV_SIGN)).norm() <= 1e-12);
        }
    }

    #[test]
    fn poisson_bracket_examples() {
        let curve = Curve::w2z6();
        assert_eq!(poisson_bracket(&curve, Complex64::ZERO, c64(1.0, 0.0)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let pts = sample::random_surface_points(&curve, 100, 1.2, 0.05, &mut rng).unwrap();
        for p in pts {
            assert!(poisson_bracket(&curve, p.z, p.w).abs() <= 1e-9);
        }
        // Linear F = w: bracket vanishes for any point.
        let linear = Curve::separable(&[Complex64::ZERO, Complex64::ONE], &[], Complex64::ZERO).unwrap();
        assert_eq!(poisson_bracket(&linear, c64(3.0, -2.0), c64(0.5, 0.9)), 0.0);
    }

    #[test]
    fn fields_linearly_independent_off_critical_points() {
        let curve = Curve::w2z6();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let pts = sample::random_surface_points(&curve, 100, 1.2, 0.05, &mut rng).unwrap();
        for p in pts {
            let a = real_hamiltonian(&curve, p.z, p.w, HamiltonianPart::RealPart);
            let b = real_hamiltonian(&curve, p.z, p.w, HamiltonianPart::ImagPart);
            // Smallest singular value of the 2x4 matrix from its Gram matrix.
            let (aa, ab, bb) = (
                a.0.iter().map(|x| x * x).sum::<f64>(),
                a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum::<f64>(),
                b.0.iter().map(|x| x * x).sum::<f64>(),
            );
            let tr = aa + bb;
            let det = aa * bb - ab * ab;
            let smin = ((tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).max(0.0).sqrt();
            let norm = tr.sqrt();
            assert!(smin > 1e-9 * norm, "dependent fields at ({}, {})", p.z, p.w);
        }
    }

    #[test]
    fn regular_value_examples() {
        let curve = Curve::w2z6();
        let report = curve.is_regular_value().unwrap();
        assert!(report.regular);
        assert_eq!(report.critical_points, vec![(Complex64::ZERO, Complex64::ZERO)]);

        let mut degenerate = Curve::w2z6();
        degenerate.level = Complex64::ZERO;
        assert!(!degenerate.is_regular_value().unwrap().regular);

        let w2z2 = Curve::separable(
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            Complex64::ONE,
        )
        .unwrap();
        assert!(w2z2.is_regular_value().unwrap().regular);
    }

    #[test]
    fn non_separable_is_rejected() {
        let mixed = Curve::from_sparse(
            &[(1, 1, Complex64::ONE), (0, 1, Complex64::ONE)],
            Complex64::ZERO,
        )
        .unwrap();
        assert!(mixed.separable_parts().is_none());
        assert_eq!(mixed.is_regular_value(), Err(CurveError::NotSeparable));
        assert_eq!(mixed.branch_points().err(), Some(CurveError::NotSeparable));
    }

    #[test]
    fn branch_points_examples() {
        let curve = Curve::w2z6();
        let data = curve.branch_points().unwrap();
        assert_eq!(data.points.len(), 6);
        assert!(data.level_is_regular);
        for (k, p) in data.points.iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 6.0);
            assert!((p.z - want).norm() < 1e-9, "branch {k}: {} vs {want}", p.z);
            assert!(p.w.norm() < 1e-9);
            assert!(p.residual < 1e-9);
        }

        let w2z2 = Curve::separable(
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            Complex64::ONE,
        )
        .unwrap();
        let data = w2z2.branch_points().unwrap();
        assert_eq!(data.points.len(), 2);
        assert!(data.values.iter().any(|z| (z - c64(1.0, 0.0)).norm() < 1e-10));
        assert!(data.values.iter().any(|z| (z - c64(-1.0, 0.0)).norm() < 1e-10));

        // w^2 - z = 0: one branch point at the origin. dF = (-1, 2w) never
        // vanishes, so the level is regular even though the projection
        // branches there.
        let parabola = Curve::separable(
            &[Complex64::ZERO, Complex64::ZERO, Complex64::ONE],
            &[Complex64::ZERO, -Complex64::ONE],
            Complex64::ZERO,
        )
        .unwrap();
        let data = parabola.branch_points().unwrap();
        assert_eq!(data.points.len(), 1);
        assert!(data.points[0].z.norm() < 1e-12 && data.points[0].w.norm() < 1e-12);
        assert!(data.level_is_regular);
    }

    #[test]
    fn separable_expansion_reproduces_table() {
        let curve = Curve::w2z6();
        let parts = curve.separable_parts().unwrap().clone();
        let rebuilt = Curve::separable(&parts.w_poly, &parts.z_poly, curve.level()).unwrap();
        assert_eq!(rebuilt.coefficients(), curve.coefficients());
    }

    #[test]
    fn fiber_ordering_fixes_sheet_zero() {
        let curve = Curve::w2z6();
        let fiber = curve.fiber(Complex64::ZERO).unwrap();
        assert_eq!(fiber.len(), 2);
        assert!((fiber[0] - c64(1.0, 0.0)).norm() < 1e-10);
        assert!((fiber[1] + c64(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn surface_point_rejects_off_surface() {
        let curve = Curve::w2z6();
        assert!(SurfacePoint::on_surface(&curve, Complex64::ZERO, c64(1.0, 0.0), Some(0), 1e-10).is_ok());
        let err = SurfacePoint::on_surface(&curve, Complex64::ZERO, c64(1.1, 0.0), None, 1e-10);
        assert!(matches!(err, Err(CurveError::OffSurface { .. })));
    }

    #[test]
    fn degenerate_tables_rejected() {
        assert_eq!(Curve::new(vec![], Complex64::ZERO), Err(CurveError::DegenerateCurve));
        assert_eq!(
            Curve::new(vec![vec![c64(3.0, 0.0)]], Complex64::ZERO),
            Err(CurveError::DegenerateCurve)
        );
    }

    #[test]
    fn json_round_trip_and_preset() {
        let curve = Curve::w2z6();
        let text = serde_json::to_string(&curve).unwrap();
        assert!(text.contains("\"coeffs\""));
        let back: Curve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, curve);
        assert!(back.separable_parts().is_some());

        assert!(Curve::preset("w2z6").is_some());
        assert!(Curve::preset("nope").is_none());
    }
}
