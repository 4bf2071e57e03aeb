//! Weighted node sets: the discrete model of a compact `K` with a measure
//! and an external field.
//!
//! A `WeightedCompactSet` is a finite family of projective points `y_k`
//! with positive masses and field values `q(y_k)`. The discrete inner
//! product of two sections `a`, `b` of degree `n` is
//!
//! ```text
//! <a, b> = sum_k mass_k * a(y_k) * conj(b(y_k)) * e^{-2 n phi(y_k)} * e^{-2 n q_k}
//! ```
//!
//! with the Fubini-Study weight `phi` taken in the chart of `y_k`.

use crate::error::{Error, Result};
use crate::geometry::ProjectivePoint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Finite weighted node set with an external field.
#[derive(Debug, Clone)]
pub struct WeightedCompactSet {
    points: Vec<ProjectivePoint>,
    masses: Vec<f64>,
    q_values: Vec<f64>,
}

impl WeightedCompactSet {
    /// Assemble a set from raw parts, validating lengths and finiteness.
    pub fn from_parts(
        points: Vec<ProjectivePoint>,
        masses: Vec<f64>,
        q_values: Vec<f64>,
    ) -> Result<WeightedCompactSet> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("node set must be nonempty".into()));
        }
        if points.len() != masses.len() || points.len() != q_values.len() {
            return Err(Error::InvalidParameter(format!(
                "length mismatch: {} points, {} masses, {} field values",
                points.len(),
                masses.len(),
                q_values.len()
            )));
        }
        if !masses.iter().all(|m| m.is_finite() && *m > 0.0) {
            return Err(Error::InvalidParameter(
                "masses must be finite and positive".into(),
            ));
        }
        if !q_values.iter().all(|q| q.is_finite()) {
            return Err(Error::InvalidParameter(
                "field values must be finite".into(),
            ));
        }
        Ok(WeightedCompactSet {
            points,
            masses,
            q_values,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ProjectivePoint] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q_values
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Number of distinct nodes (pairwise, up to point identity tolerance).
    /// Rank of collocation requires at least `n + 1` distinct nodes.
    pub fn distinct_node_count(&self) -> usize {
        let mut distinct: Vec<&ProjectivePoint> = Vec::new();
        for p in &self.points {
            if !distinct.iter().any(|d| d.approx_eq(p)) {
                distinct.push(p);
            }
        }
        distinct.len()
    }
}

/// Uniform nodes on the circle `|z| = radius`, uniform masses `1/N`, zero
/// field. Quadrature on this set integrates `z^j conj(z)^k` exactly for
/// `j, k <= (N - 2) / 2`.
pub fn circle_set(n_nodes: usize, radius: f64) -> Result<WeightedCompactSet> {
    if n_nodes < 4 {
        return Err(Error::InvalidParameter(format!(
            "circle set needs at least 4 nodes, got {n_nodes}"
        )));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "circle radius must lie in (0, 1], got {radius}"
        )));
    }
    let mut points = Vec::with_capacity(n_nodes);
    for k in 0..n_nodes {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n_nodes as f64;
        points.push(ProjectivePoint::from_zero_chart(Complex64::from_polar(
            radius, th,
        )));
    }
    let mass = 1.0 / n_nodes as f64;
    WeightedCompactSet::from_parts(points, vec![mass; n_nodes], vec![0.0; n_nodes])
}

/// Chebyshev nodes `cos((2k - 1) pi / 2N)` on `[-1, 1]` with uniform masses
/// `1/N` (the arcsine measure discretization) and the field `q = -phi`,
/// which cancels the ambient weight on the node set. Exact for polynomial
/// integrands of degree up to `N - 1`.
pub fn interval_set(n_nodes: usize) -> Result<WeightedCompactSet> {
    if n_nodes < 2 {
        return Err(Error::InvalidParameter(format!(
            "interval set needs at least 2 nodes, got {n_nodes}"
        )));
    }
    let mut points = Vec::with_capacity(n_nodes);
    let mut q = Vec::with_capacity(n_nodes);
    for k in 1..=n_nodes {
        let x = ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n_nodes) as f64).cos();
        let p = ProjectivePoint::from_zero_chart(Complex64::new(x, 0.0));
        q.push(-crate::geometry::fs_weight(&p));
        points.push(p);
    }
    let mass = 1.0 / n_nodes as f64;
    WeightedCompactSet::from_parts(points, vec![mass; n_nodes], q)
}

/// Two concentric uniform circles `|z| = r1` and `|z| = r2` with `N/2`
/// nodes each, uniform masses `1/N`, zero field. No closed-form reference
/// values are provided for this set; it exercises the generic code paths.
pub fn annulus_pair_set(n_nodes: usize, r1: f64, r2: f64) -> Result<WeightedCompactSet> {
    if n_nodes < 8 || n_nodes % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "annulus pair needs an even node count of at least 8, got {n_nodes}"
        )));
    }
    if !(r1 > 0.0 && r1 < r2 && r2 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "annulus radii must satisfy 0 < r1 < r2 <= 1, got r1={r1}, r2={r2}"
        )));
    }
    let half = n_nodes / 2;
    let mut points = Vec::with_capacity(n_nodes);
    for &r in &[r1, r2] {
        for k in 0..half {
            let th = 2.0 * std::f64::consts::PI * k as f64 / half as f64;
            points.push(ProjectivePoint::from_zero_chart(Complex64::from_polar(
                r, th,
            )));
        }
    }
    let mass = 1.0 / n_nodes as f64;
    WeightedCompactSet::from_parts(points, vec![mass; n_nodes], vec![0.0; n_nodes])
}

/// The standard scenarios with closed-form expectations (circle, interval)
/// plus a reference-free stress scenario (annulus pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Circle,
    Interval,
    AnnulusPair,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Circle => "circle",
            Scenario::Interval => "interval",
            Scenario::AnnulusPair => "annulus_pair",
        }
    }

    /// Default node count for degree `n`: enough for exact quadrature of
    /// degree-`n` section products, with a floor that keeps the discrete
    /// extremal problem close to its continuum limit.
    pub fn default_node_count(self, n: usize) -> usize {
        match self {
            Scenario::Circle => (4 * n + 8).max(256),
            Scenario::Interval => (8 * n).max(512),
            Scenario::AnnulusPair => {
                let m = (8 * n).max(512);
                m + m % 2
            }
        }
    }

    /// Build the node set for this scenario.
    pub fn build(self, n_nodes: usize) -> Result<WeightedCompactSet> {
        match self {
            Scenario::Circle => circle_set(n_nodes, 1.0),
            Scenario::Interval => interval_set(n_nodes),
            Scenario::AnnulusPair => annulus_pair_set(n_nodes, 0.5, 1.0),
        }
    }

    /// Largest degree `n` such that the discrete inner product of two
    /// degree-`n` monomial sections equals its continuum counterpart.
    pub fn max_exact_degree(self, n_nodes: usize) -> usize {
        match self {
            Scenario::Circle => n_nodes.saturating_sub(2) / 2,
            Scenario::Interval => n_nodes.saturating_sub(1),
            Scenario::AnnulusPair => (n_nodes / 2).saturating_sub(2) / 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_validate() {
        assert!(circle_set(3, 1.0).is_err());
        assert!(circle_set(8, 0.0).is_err());
        assert!(circle_set(8, 1.5).is_err());
        assert!(interval_set(1).is_err());
        assert!(annulus_pair_set(7, 0.5, 1.0).is_err());
        assert!(annulus_pair_set(8, 0.7, 0.5).is_err());
        assert!(annulus_pair_set(8, 0.0, 0.5).is_err());
    }

    #[test]
    fn from_parts_validates() {
        let p = vec![ProjectivePoint::origin()];
        assert!(WeightedCompactSet::from_parts(vec![], vec![], vec![]).is_err());
        assert!(WeightedCompactSet::from_parts(p.clone(), vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(WeightedCompactSet::from_parts(p.clone(), vec![-1.0], vec![0.0]).is_err());
        assert!(WeightedCompactSet::from_parts(p.clone(), vec![1.0], vec![f64::NAN]).is_err());
        assert!(WeightedCompactSet::from_parts(p, vec![1.0], vec![0.0]).is_ok());
    }

    #[test]
    fn interval_field_cancels_weight() {
        let s = interval_set(16).unwrap();
        for (p, q) in s.points().iter().zip(s.q_values()) {
            assert!((q + crate::geometry::fs_weight(p)).abs() < 1e-15);
        }
    }

    #[test]
    fn builders_are_probability_measures() {
        for set in [
            circle_set(64, 1.0).unwrap(),
            interval_set(33).unwrap(),
            annulus_pair_set(64, 0.5, 1.0).unwrap(),
        ] {
            assert!((set.total_mass() - 1.0).abs() < 1e-12);
            assert_eq!(set.distinct_node_count(), set.len());
        }
    }

    #[test]
    fn scenario_defaults() {
        assert_eq!(Scenario::Circle.default_node_count(64), 264);
        assert_eq!(Scenario::Circle.default_node_count(2), 256);
        assert_eq!(Scenario::Interval.default_node_count(64), 512);
        assert_eq!(Scenario::AnnulusPair.default_node_count(100), 800);
        assert_eq!(Scenario::Circle.max_exact_degree(256), 127);
        assert_eq!(Scenario::Interval.max_exact_degree(512), 511);
        assert_eq!(Scenario::AnnulusPair.max_exact_degree(512), 127);
    }
}
