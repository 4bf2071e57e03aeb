//! Linear-programming oracle for the discrete extremal function.
//!
//! The extremal value `Phi_n(p)` maximizes the field-weighted magnitude at
//! `p` over sections whose field-weighted magnitude is at most one on every
//! node. Replacing each disc constraint `|v| <= 1` by `L` half-plane
//! constraints `Re(e^{-i theta_l} v) <= 1` yields a linear program over the
//! real and imaginary parts of the coefficients whose optimum `V` encloses
//! the true value:
//!
//! ```text
//! cos(pi/L) * V <= Phi_n(p) <= V
//! ```
//!
//! (a polygon-feasible section scaled by `cos(pi/L)` is disc feasible, and
//! the disc is contained in the polygon). This route shares nothing with
//! the reweighting solver beyond the evaluation of the basis sections, so
//! it serves as an independent cross-check.

use crate::error::{Error, Result};
use crate::geometry::ProjectivePoint;
use crate::kernel::{scaled_design, scaled_eval_vec, section_space_dim, select_basis};
use crate::measure::WeightedCompactSet;
use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// Enclosure of `log Phi_n(p)` from the polygonal linear program.
#[derive(Debug, Clone, Copy)]
pub struct LpPhi {
    /// `ln V`: upper bound for `log Phi_n(p)`.
    pub log_value: f64,
    /// `ln V + ln cos(pi/L)`: lower bound for `log Phi_n(p)`.
    pub log_lower: f64,
    /// Number of half-plane constraints per node.
    pub phases: usize,
}

/// Solve the polygonal relaxation with `phases` half-planes per node.
pub fn lp_phi_log(
    set: &WeightedCompactSet,
    n: usize,
    p: &ProjectivePoint,
    phases: usize,
) -> Result<LpPhi> {
    if phases < 4 {
        return Err(Error::InvalidParameter(
            "need at least four half-plane phases".into(),
        ));
    }
    let d = section_space_dim(n);
    if set.len() < d {
        return Err(Error::InvalidParameter(format!(
            "need at least {d} nodes for degree {n}"
        )));
    }
    let basis = select_basis(set);
    let sd = scaled_design(set, n, basis)?;
    let (bvec, shift) = scaled_eval_vec(basis, n, &sd.col_log, p);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Singular("evaluation vector vanishes"));
    }

    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let free = (f64::NEG_INFINITY, f64::INFINITY);
    // One real and one imaginary part per coefficient, in the scaled basis.
    let re_vars: Vec<_> = (0..d)
        .map(|j| problem.add_var(bvec[j].re, free))
        .collect();
    let im_vars: Vec<_> = (0..d)
        .map(|j| problem.add_var(-bvec[j].im, free))
        .collect();

    for k in 0..set.len() {
        for l in 0..phases {
            let theta = 2.0 * std::f64::consts::PI * l as f64 / phases as f64;
            let rot = num_complex::Complex64::from_polar(1.0, -theta);
            let mut terms = Vec::with_capacity(2 * d);
            for j in 0..d {
                let c = rot * sd.rows[(k, j)];
                terms.push((re_vars[j], c.re));
                terms.push((im_vars[j], -c.im));
            }
            problem.add_constraint(terms, ComparisonOp::Le, 1.0);
        }
    }

    let outcome = problem
        .solve()
        .map_err(|e| Error::Lp(format!("polygonal relaxation failed: {e}")))?;
    if !outcome.is_optimal() {
        return Err(Error::Lp(
            "polygonal relaxation stopped without a proven optimum".into(),
        ));
    }
    let solution = outcome
        .into_solution()
        .map_err(|_| Error::Lp("polygonal relaxation was interrupted".into()))?;
    let obj = solution.objective();
    if !(obj > 0.0) {
        return Err(Error::Lp(format!(
            "polygonal relaxation returned nonpositive value {obj}"
        )));
    }
    let log_value = obj.ln() + shift;
    let log_lower = log_value + (std::f64::consts::PI / phases as f64).cos().ln();
    Ok(LpPhi {
        log_value,
        log_lower,
        phases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::circle_set;
    use approx::assert_relative_eq;

    #[test]
    fn circle_origin_exact() {
        // The optimizing section is constant with phase zero at every node,
        // so the relaxation is exact there.
        let set = circle_set(32, 1.0).unwrap();
        let r = lp_phi_log(&set, 2, &ProjectivePoint::origin(), 64).unwrap();
        assert_relative_eq!(r.log_value, std::f64::consts::LN_2, epsilon = 1e-9);
        assert!(r.log_lower <= r.log_value);
    }

    #[test]
    fn circle_exterior_enclosure() {
        // At z = 2 the binding phases sweep the circle, so only the
        // enclosure holds.
        let set = circle_set(32, 1.0).unwrap();
        let p = ProjectivePoint::from_zero_chart(num_complex::Complex64::new(2.0, 0.0));
        let n = 2;
        let exact = 0.5 * n as f64 * (8.0f64 / 5.0).ln();
        let r = lp_phi_log(&set, n, &p, 64).unwrap();
        assert!(
            r.log_lower <= exact + 1e-9 && exact <= r.log_value + 1e-9,
            "enclosure [{}, {}] misses {exact}",
            r.log_lower,
            r.log_value
        );
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let set = circle_set(8, 1.0).unwrap();
        assert!(lp_phi_log(&set, 2, &ProjectivePoint::origin(), 2).is_err());
        assert!(lp_phi_log(&set, 12, &ProjectivePoint::origin(), 8).is_err());
    }
}
