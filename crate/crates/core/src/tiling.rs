//! Planar isometries, the order-12 dihedral group, the hexagonal translation
//! lattice and its fundamental domain, and the stellated hexagon.
//!
//! The hexagon `H` with circumradius `edge` is exactly the Voronoi cell of
//! the lattice spanned by the six translations `u_k = √3 · edge ·
//! e^(2πi(1/12 + k/6))`; fundamental-domain reduction is therefore a
//! closest-lattice-point computation, which gives a total and testable
//! algorithm.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::c64;
use crate::geom;

/// An isometry of the plane: `z ↦ rot·z + trans`, or `z ↦ rot·conj(z) +
/// trans` when `reflect` is set. `rot` is kept on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarIsometry {
    pub reflect: bool,
    pub rot: Complex64,
    pub trans: Complex64,
}

impl PlanarIsometry {
    pub fn identity() -> Self {
        PlanarIsometry { reflect: false, rot: Complex64::ONE, trans: Complex64::ZERO }
    }

    /// Rotation about the origin by the given unit complex number.
    pub fn rotation(rot: Complex64) -> Self {
        debug_assert!((rot.norm() - 1.0).abs() <= 1e-12);
        PlanarIsometry { reflect: false, rot, trans: Complex64::ZERO }
    }

    pub fn translation(trans: Complex64) -> Self {
        PlanarIsometry { reflect: false, rot: Complex64::ONE, trans }
    }

    /// Complex conjugation, the reflection in the real axis.
    pub fn conjugation() -> Self {
        PlanarIsometry { reflect: true, rot: Complex64::ONE, trans: Complex64::ZERO }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        if self.reflect {
            self.rot * z.conj() + self.trans
        } else {
            self.rot * z + self.trans
        }
    }

    /// Composition acting as `(self ∘ other)(z) = self(other(z))`.
    pub fn compose(&self, other: &PlanarIsometry) -> PlanarIsometry {
        if self.reflect {
            PlanarIsometry {
                reflect: !other.reflect,
                rot: self.rot * other.rot.conj(),
                trans: self.rot * other.trans.conj() + self.trans,
            }
        } else {
            PlanarIsometry {
                reflect: other.reflect,
                rot: self.rot * other.rot,
                trans: self.rot * other.trans + self.trans,
            }
        }
    }

    pub fn inverse(&self) -> PlanarIsometry {
        if self.reflect {
            // Solving z' = rot·conj(z) + t gives z = rot·conj(z') - rot·conj(t).
            PlanarIsometry {
                reflect: true,
                rot: self.rot,
                trans: -self.rot * self.trans.conj(),
            }
        } else {
            let rot_inv = self.rot.conj();
            PlanarIsometry { reflect: false, rot: rot_inv, trans: -rot_inv * self.trans }
        }
    }

    /// Equality as maps, probed on three generic points.
    pub fn same_action(&self, other: &PlanarIsometry, tol: f64) -> bool {
        const PROBES: [(f64, f64); 3] = [(0.313, 0.717), (-1.25, 0.4), (0.9, -2.1)];
        PROBES.iter().all(|&(re, im)| {
            let z = c64(re, im);
            (self.apply(z) - other.apply(z)).norm() <= tol
        })
    }
}

/// The 60-degree rotation generator.
pub fn hex_rotation() -> PlanarIsometry {
    PlanarIsometry::rotation(Complex64::from_polar(1.0, std::f64::consts::PI / 3.0))
}

/// The conjugation generator.
pub fn real_reflection() -> PlanarIsometry {
    PlanarIsometry::conjugation()
}

/// The twelve elements `{R^k, R^k U}` of the dihedral group of the hexagon,
/// with duplicates merged by their action on generic points.
pub fn dihedral_group() -> Vec<PlanarIsometry> {
    let r = hex_rotation();
    let u = real_reflection();
    let mut out: Vec<PlanarIsometry> = Vec::with_capacity(12);
    let mut push_unique = |g: PlanarIsometry| {
        if !out.iter().any(|h| h.same_action(&g, 1e-12)) {
            out.push(g);
        }
    };
    let mut power = PlanarIsometry::identity();
    for _ in 0..6 {
        push_unique(power);
        push_unique(power.compose(&u));
        power = r.compose(&power);
    }
    out
}

/// Hexagonal tiling data for a chosen edge length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HexLayout {
    pub edge: f64,
}

/// Outcome of reducing one point to the fundamental hexagon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    /// Representative in the closed hexagon.
    pub representative: Complex64,
    /// Integer coordinates of the removed lattice vector in `(u_0, u_1)`.
    pub lattice: (i64, i64),
}

/// Report of a randomized coverage check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub samples: usize,
    pub failures: usize,
    /// Worst signed distance outside the hexagon over all samples.
    pub worst_excess: f64,
    /// Worst deviation of `p - q` from the lattice.
    pub worst_lattice_error: f64,
}

impl HexLayout {
    pub fn new(edge: f64) -> Self {
        assert!(edge > 0.0 && edge.is_finite());
        HexLayout { edge }
    }

    /// Vertices of the hexagon `H` (circumradius = edge length).
    pub fn hex_vertices(&self) -> [Complex64; 6] {
        std::array::from_fn(|k| {
            Complex64::from_polar(self.edge, std::f64::consts::PI / 3.0 * k as f64)
        })
    }

    /// The boundary triangle `T` with vertices `{0, edge·e^(iπ/3),
    /// edge·e^(2iπ/3)}`.
    pub fn triangle(&self) -> [Complex64; 3] {
        [
            Complex64::ZERO,
            Complex64::from_polar(self.edge, std::f64::consts::PI / 3.0),
            Complex64::from_polar(self.edge, 2.0 * std::f64::consts::PI / 3.0),
        ]
    }

    /// The six lattice translations `u_k`, perpendicular to the hexagon's
    /// edges, of length `√3 · edge`.
    pub fn translations(&self) -> [Complex64; 6] {
        std::array::from_fn(|k| {
            Complex64::from_polar(
                3.0f64.sqrt() * self.edge,
                2.0 * std::f64::consts::PI * (1.0 / 12.0 + k as f64 / 6.0),
            )
        })
    }

    /// Basis `(u_0, u_1)` of the translation lattice.
    pub fn lattice_basis(&self) -> (Complex64, Complex64) {
        let u = self.translations();
        (u[0], u[1])
    }

    pub fn hex_area(&self) -> f64 {
        geom::polygon_area(&self.hex_vertices())
    }

    /// Signed excess of `p` over the hexagon: `<= 0` inside, growing past the
    /// boundary. The hexagon's inradius is `√3/2 · edge` in the directions of
    /// the translations.
    pub fn hex_excess(&self, p: Complex64) -> f64 {
        let inradius = 3.0f64.sqrt() / 2.0 * self.edge;
        self.translations()
            .iter()
            .map(|u| {
                let n = u / u.norm();
                p.re * n.re + p.im * n.im - inradius
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: Complex64, tol: f64) -> bool {
        self.hex_excess(p) <= tol
    }
}

/// Reduces `p` modulo the translation lattice into the closed hexagon.
///
/// The nearest lattice point is found by rounding in lattice coordinates and
/// comparing the seven candidates (the rounded point and its six neighbors);
/// near-ties on the Voronoi boundary are broken toward the lexicographically
/// smallest `(m, n)`.
pub fn reduce_to_fundamental(layout: &HexLayout, p: Complex64) -> Reduction {
    let (u0, u1) = layout.lattice_basis();
    let det = u0.re * u1.im - u0.im * u1.re;
    let m_real = (p.re * u1.im - p.im * u1.re) / det;
    let n_real = (u0.re * p.im - u0.im * p.re) / det;
    let m0 = m_real.round() as i64;
    let n0 = n_real.round() as i64;
    // The six lattice neighbors in (m, n) coordinates.
    const NEIGHBORS: [(i64, i64); 7] =
        [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];
    let tie_tol = 1e-12 * 3.0f64.sqrt() * layout.edge;
    let mut best: Option<((i64, i64), f64)> = None;
    for &(dm, dn) in &NEIGHBORS {
        let (m, n) = (m0 + dm, n0 + dn);
        let lattice_point = u0 * m as f64 + u1 * n as f64;
        let dist = (p - lattice_point).norm();
        best = match best {
            None => Some(((m, n), dist)),
            Some((bmn, bdist)) => {
                if dist < bdist - tie_tol || ((dist - bdist).abs() <= tie_tol && (m, n) < bmn) {
                    Some(((m, n), dist))
                } else {
                    Some((bmn, bdist))
                }
            }
        };
    }
    let ((m, n), _) = best.expect("candidate set is non-empty");
    let lattice_point = u0 * m as f64 + u1 * n as f64;
    Reduction { representative: p - lattice_point, lattice: (m, n) }
}

/// Randomized check that lattice translates of the hexagon cover the disk of
/// the given radius: every sample must reduce into the closed hexagon with a
/// lattice offset.
pub fn coverage_check<R: Rng>(
    layout: &HexLayout,
    samples: usize,
    radius: f64,
    rng: &mut R,
) -> CoverageReport {
    let (u0, u1) = layout.lattice_basis();
    let mut failures = 0usize;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_lattice_error = 0.0f64;
    for _ in 0..samples {
        let p = crate::sample::random_disk_point(rng, radius);
        let red = reduce_to_fundamental(layout, p);
        let excess = layout.hex_excess(red.representative);
        let lattice_point = u0 * red.lattice.0 as f64 + u1 * red.lattice.1 as f64;
        let lattice_error = (p - red.representative - lattice_point).norm();
        worst_excess = worst_excess.max(excess);
        worst_lattice_error = worst_lattice_error.max(lattice_error);
        if excess > 1e-9 || lattice_error > 1e-9 {
            failures += 1;
        }
    }
    CoverageReport { samples, failures, worst_excess, worst_lattice_error }
}

/// The stellated hexagon `K`: an equilateral triangle of the same edge length
/// erected on each edge of `H`. Its twelve vertices alternate between the
/// hexagon's vertices and the triangle apexes, and each apex is exactly the
/// lattice translation `u_k`.
pub fn build_stellated(layout: &HexLayout) -> Vec<Complex64> {
    let hex = layout.hex_vertices();
    let u = layout.translations();
    let mut out = Vec::with_capacity(12);
    for k in 0..6 {
        out.push(hex[k]);
        out.push(u[k]);
    }
    out
}

/// For a point in one of the stellation triangles of `K ∖ H`, the index `k`
/// with `τ_k⁻¹(p) ∈ H`, if any.
pub fn stellation_owner(layout: &HexLayout, p: Complex64) -> Option<usize> {
    let u = layout.translations();
    (0..6).find(|&k| layout.contains(p - u[k], 1e-9))
}
