//! Euclidean helpers on plain slices.

/// Absolute tolerance for coordinate matching in graph and table lookups.
pub const MATCH_TOL: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `<a - b, c - d>`
#[inline]
pub fn dot_diff(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(c.iter().zip(d))
        .map(|((a, b), (c, d))| (a - b) * (c - d))
        .sum()
}

#[inline]
pub fn approx_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= MATCH_TOL)
}

#[inline]
pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
