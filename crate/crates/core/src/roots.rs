//! Univariate complex polynomial roots via the Aberth-Ehrlich method.
//!
//! Coefficients are stored in ascending degree order. The solver runs all
//! roots simultaneously, polishes each with a few Newton steps, and offers a
//! variant that merges numerically coincident roots.

use num_complex::Complex64;
use thiserror::Error;

use crate::c64;

/// Convergence tolerance for root iteration.
pub const ROOT_TOL: f64 = 1e-10;
/// Roots closer than this are treated as one root.
pub const DUPLICATE_MERGE_TOL: f64 = 1e-8;

const MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("the zero polynomial has no well-defined root set")]
    ZeroPolynomial,
    #[error("root iteration did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Horner evaluation of `p(x)` for ascending coefficients.
pub fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for &a in coeffs.iter().rev() {
        acc = acc * x + a;
    }
    acc
}

/// Simultaneous Horner evaluation of `p(x)` and `p'(x)`.
pub fn poly_eval_with_derivative(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::ZERO;
    let mut d = Complex64::ZERO;
    for &a in coeffs.iter().rev() {
        d = d * x + p;
        p = p * x + a;
    }
    (p, d)
}

/// Coefficients of `p'` in ascending order.
pub fn poly_derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

/// All roots of `p`, with multiplicity, in no particular order.
///
/// A constant nonzero polynomial has no roots; the zero polynomial is an
/// error. Exact zero roots are split off before iteration so that leading and
/// trailing degeneracies cannot stall the Aberth updates.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, RootError> {
    let max_mag = coeffs.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
    if max_mag == 0.0 || coeffs.is_empty() {
        return Err(RootError::ZeroPolynomial);
    }
    // Trim numerically vanishing leading coefficients.
    let cutoff = max_mag * 1e-14;
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() <= cutoff {
        c.pop();
    }
    let mut found = Vec::new();
    // Peel off roots at the origin.
    while c.len() > 1 && c[0].norm() <= cutoff {
        found.push(Complex64::ZERO);
        c.remove(0);
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(found);
    }
    if n == 1 {
        found.push(-c[0] / c[1]);
        return Ok(found);
    }

    // Initial guesses on a circle; the irrational phase offset breaks the
    // symmetric stalls of pure power polynomials.
    let lead = c[n].norm();
    let cauchy = 1.0 + c[..n].iter().map(|a| a.norm()).fold(0.0f64, f64::max) / lead;
    let inner = (c[0].norm() / lead).powf(1.0 / n as f64).max(1e-3);
    let radius = inner.min(cauchy);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.437;
            radius * c64(th.cos(), th.sin())
        })
        .collect();

    let scale = radius.max(1.0);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let (p, d) = poly_eval_with_derivative(&c, z[k]);
            if p.norm() <= cutoff {
                continue;
            }
            let newton = if d.norm() > 0.0 { p / d } else { p };
            let mut sum = Complex64::ZERO;
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 1e-290 {
                        sum += diff.inv();
                    }
                }
            }
            let denom = Complex64::ONE - newton * sum;
            let step = if denom.norm() > 1e-290 { newton / denom } else { newton };
            z[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= ROOT_TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(RootError::NoConvergence(MAX_ITER));
    }
    // Newton polish.
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (p, d) = poly_eval_with_derivative(&c, *zk);
            if d.norm() > 1e-290 {
                *zk -= p / d;
            }
        }
    }
    found.extend(z);
    Ok(found)
}

/// Roots with near-duplicates merged (averaged) within [`DUPLICATE_MERGE_TOL`].
///
/// A multiple root splits under rounding into a cluster of radius about
/// `eps^(1/m)`, which can exceed the merge tolerance. Clusters detected at a
/// coarser radius are therefore re-centered with a multiplicity-`m` Newton
/// step on their mean; the refinement is kept only when it does not worsen
/// the polynomial residual, so genuinely distinct close roots survive.
pub fn distinct_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>, RootError> {
    let all = roots(coeffs)?;
    let trimmed: Vec<Complex64> = {
        let max_mag = coeffs.iter().map(|a| a.norm()).fold(0.0f64, f64::max);
        let cutoff = max_mag * 1e-14;
        let mut c = coeffs.to_vec();
        while c.len() > 1 && c.last().unwrap().norm() <= cutoff {
            c.pop();
        }
        c
    };
    let refined = refine_clusters(&trimmed, all);
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for r in refined {
        match clusters
            .iter_mut()
            .find(|(c, _)| (*c - r).norm() <= DUPLICATE_MERGE_TOL)
        {
            Some((c, count)) => {
                // Running mean keeps the cluster centered.
                *c = (*c * *count as f64 + r) / (*count as f64 + 1.0);
                *count += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    Ok(clusters.into_iter().map(|(c, _)| c).collect())
}

fn refine_clusters(coeffs: &[Complex64], roots: Vec<Complex64>) -> Vec<Complex64> {
    let detect = 100.0 * DUPLICATE_MERGE_TOL;
    let mut out = roots;
    let mut assigned = vec![false; out.len()];
    for i in 0..out.len() {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        for j in (i + 1)..out.len() {
            if !assigned[j] && (out[i] - out[j]).norm() <= detect * (1.0 + out[i].norm()) {
                members.push(j);
            }
        }
        if members.len() < 2 {
            continue;
        }
        let mean = members.iter().map(|&j| out[j]).sum::<Complex64>() / members.len() as f64;
        let m = members.len() as f64;
        let mut z = mean;
        for _ in 0..5 {
            let (p, d) = poly_eval_with_derivative(coeffs, z);
            if d.norm() < 1e-290 {
                break;
            }
            z -= p * m / d;
        }
        let worst_before = members
            .iter()
            .map(|&j| poly_eval(coeffs, out[j]).norm())
            .fold(0.0f64, f64::max);
        if poly_eval(coeffs, z).norm() <= worst_before.max(1e-300) * 4.0
            && (z - mean).norm() <= detect * (1.0 + mean.norm())
        {
            for &j in &members {
                out[j] = z;
                assigned[j] = true;
            }
        }
    }
    out
}
