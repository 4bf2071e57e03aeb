//! Points on the projective line in two affine charts, and the evaluation
//! grid used for convergence scans.
//!
//! A point is stored as a coordinate in one of two charts related by
//! inversion: coordinate `z` in the zero chart names the same point as
//! `w = 1/z` in the infinity chart. Canonical representatives keep
//! `|coord| <= 1 + EPS_CHART`, so every point of the sphere has a
//! representative with a well-bounded coordinate and points near the unit
//! circle are representable in both charts.

use num_complex::Complex64;

/// Canonicalization band: representatives keep `|coord|` at most `1 + EPS_CHART`.
pub const EPS_CHART: f64 = 1e-9;

/// Tolerance for point identity tests.
pub const EPS_POINT: f64 = 1e-12;

/// Which affine chart a coordinate lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Coordinate `z`; `z = 0` is the chart origin.
    Zero,
    /// Coordinate `w = 1/z`; `w = 0` is the point at infinity.
    Infinity,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Zero => Chart::Infinity,
            Chart::Infinity => Chart::Zero,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Chart::Zero => "zero",
            Chart::Infinity => "infinity",
        }
    }
}

/// A point on the projective line, held as a canonical chart coordinate.
#[derive(Debug, Clone, Copy)]
pub struct ProjectivePoint {
    chart: Chart,
    coord: Complex64,
}

impl ProjectivePoint {
    /// Canonicalize a coordinate given in some chart. Coordinates with
    /// `|coord| > 1 + EPS_CHART` are flipped to the other chart.
    pub fn new(chart: Chart, coord: Complex64) -> ProjectivePoint {
        assert!(
            coord.re.is_finite() && coord.im.is_finite(),
            "point coordinate must be finite"
        );
        if coord.norm() <= 1.0 + EPS_CHART {
            ProjectivePoint { chart, coord }
        } else {
            ProjectivePoint {
                chart: chart.other(),
                coord: coord.inv(),
            }
        }
    }

    /// The point with coordinate `z` in the zero chart (canonicalized).
    pub fn from_zero_chart(z: Complex64) -> ProjectivePoint {
        ProjectivePoint::new(Chart::Zero, z)
    }

    /// The point with coordinate `w` in the infinity chart (canonicalized).
    pub fn from_infinity_chart(w: Complex64) -> ProjectivePoint {
        ProjectivePoint::new(Chart::Infinity, w)
    }

    /// Origin of the zero chart (`z = 0`).
    pub fn origin() -> ProjectivePoint {
        ProjectivePoint::from_zero_chart(Complex64::new(0.0, 0.0))
    }

    /// Origin of the infinity chart (the point at infinity).
    pub fn infinity() -> ProjectivePoint {
        ProjectivePoint::from_infinity_chart(Complex64::new(0.0, 0.0))
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn coord(&self) -> Complex64 {
        self.coord
    }

    /// Coordinate of this point in the zero chart, if representable there
    /// without leaving the canonical band by more than inversion allows
    /// (i.e. the point is not too close to infinity).
    pub fn zero_chart_coord(&self) -> Option<Complex64> {
        match self.chart {
            Chart::Zero => Some(self.coord),
            Chart::Infinity => {
                if self.coord.norm() == 0.0 {
                    None
                } else {
                    Some(self.coord.inv())
                }
            }
        }
    }

    /// Approximate identity of projective points, tolerant across charts.
    pub fn approx_eq(&self, other: &ProjectivePoint) -> bool {
        if self.chart == other.chart {
            return (self.coord - other.coord).norm() <= EPS_POINT;
        }
        // Cross-chart: equal iff coord_a * coord_b == 1. Canonical coords are
        // bounded by 1 + EPS_CHART, so the product test is well scaled.
        (self.coord * other.coord - Complex64::new(1.0, 0.0)).norm() <= 4.0 * EPS_POINT
    }
}

/// Fubini-Study weight in the chart of the given point:
/// `phi(coord) = (1/2) ln(1 + |coord|^2)`. The same formula serves both
/// charts; values in different charts of one point differ by `ln|coord|`
/// (the transition cocycle).
pub fn fs_weight(p: &ProjectivePoint) -> f64 {
    chart_weight(p.coord)
}

/// Fubini-Study weight as a function of a raw chart coordinate.
pub fn chart_weight(coord: Complex64) -> f64 {
    0.5 * (coord.norm_sqr()).ln_1p()
}

/// Log of the pointwise metric factor `e^{-n phi}` applied to a section
/// value of magnitude `exp(log_abs_value)` in the chart of `p`.
///
/// The resulting quantity is chart-invariant for an actual section of
/// degree `n`: switching charts multiplies the raw value by `|coord|^n`
/// and the weight compensates exactly.
pub fn section_norm_log(p: &ProjectivePoint, n: usize, log_abs_value: f64) -> f64 {
    log_abs_value - (n as f64) * fs_weight(p)
}

/// Deterministic evaluation grid covering both charts.
///
/// For each chart: radii `i / radial` for `i = 1..=radial` and angles
/// `2 pi a / angular`. The unit-circle ring appears once (the infinity-chart
/// copy is skipped: it names the same circle). Both chart origins are
/// included, giving `2 + (2*radial - 1) * angular` points in a fixed order.
pub fn make_eval_grid(radial: usize, angular: usize) -> Vec<ProjectivePoint> {
    assert!(radial >= 1 && angular >= 1, "grid must be nonempty");
    let mut grid = Vec::with_capacity(2 + (2 * radial - 1) * angular);
    grid.push(ProjectivePoint::origin());
    for i in 1..=radial {
        let r = i as f64 / radial as f64;
        for a in 0..angular {
            let th = 2.0 * std::f64::consts::PI * a as f64 / angular as f64;
            grid.push(ProjectivePoint::new(
                Chart::Zero,
                Complex64::from_polar(r, th),
            ));
        }
    }
    grid.push(ProjectivePoint::infinity());
    for i in 1..radial {
        let r = i as f64 / radial as f64;
        for a in 0..angular {
            let th = 2.0 * std::f64::consts::PI * a as f64 / angular as f64;
            grid.push(ProjectivePoint::new(
                Chart::Infinity,
                Complex64::from_polar(r, th),
            ));
        }
    }
    grid
}
