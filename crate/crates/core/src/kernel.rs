//! Discrete Bergman kernels: orthonormalization of the section space
//! against a weighted node set, node diagnostics, and pointwise kernel
//! evaluation.
//!
//! All quantities that grow like `e^{c n}` are carried in log units. The
//! collocation matrix is assembled entrywise in log form, each column is
//! shifted by its maximal log and then renormalized to unit Euclidean
//! norm, so the factored matrix has entries of order one regardless of
//! degree. Node-space quantities (kernel values at nodes, trace, sup) are
//! read off the orthonormal factor `Q` and are accurate independently of
//! the collocation condition number; off-node evaluation goes through the
//! triangular factor.

use crate::error::{Error, Result};
use crate::geometry::{fs_weight, Chart, ProjectivePoint};
use crate::measure::WeightedCompactSet;
use crate::poly::{eval_basis_row, DesignBasis, LogVal};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dimension of the space of degree-`n` sections.
pub fn section_space_dim(n: usize) -> usize {
    n + 1
}

/// Pick the evaluation basis for a node set: Chebyshev when every node is
/// real inside `[-1, 1]` (zero chart), monomial otherwise.
pub fn select_basis(set: &WeightedCompactSet) -> DesignBasis {
    let real_interval = set.points().iter().all(|p| {
        p.chart() == Chart::Zero && p.coord().im.abs() <= 1e-12 && p.coord().re.abs() <= 1.0 + 1e-12
    });
    if real_interval {
        DesignBasis::Chebyshev
    } else {
        DesignBasis::Monomial
    }
}

/// Log-form design row at a point: `log b_j(p) - n phi(p)`, i.e. the basis
/// values with the ambient metric factor folded in (but no field and no
/// mass; those belong to nodes only).
fn eval_log_row(basis: DesignBasis, n: usize, p: &ProjectivePoint) -> Vec<LogVal> {
    let w = (n as f64) * fs_weight(p);
    let mut row = eval_basis_row(basis, n, p);
    for lv in row.iter_mut() {
        lv.log_abs -= w;
    }
    row
}

/// Column-scaled collocation rows without masses:
/// `rows[k][j] = b_j(y_k) e^{-n(q_k + phi_k)} e^{-col_log[j]}`.
///
/// Used by the extremal-function solver, which supplies its own node
/// weights. Column scales are chosen so the largest entry magnitude in
/// each column is one.
pub(crate) struct ScaledDesign {
    pub rows: DMatrix<Complex64>,
    pub col_log: Vec<f64>,
}

pub(crate) fn scaled_design(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
) -> Result<ScaledDesign> {
    let d = section_space_dim(n);
    let nn = set.len();
    let mut logs: Vec<Vec<LogVal>> = Vec::with_capacity(nn);
    for (p, q) in set.points().iter().zip(set.q_values()) {
        let extra = (n as f64) * q;
        let mut row = eval_log_row(basis, n, p);
        for lv in row.iter_mut() {
            lv.log_abs -= extra;
        }
        logs.push(row);
    }
    let mut col_log = vec![f64::NEG_INFINITY; d];
    for row in &logs {
        for (j, lv) in row.iter().enumerate() {
            if lv.log_abs > col_log[j] {
                col_log[j] = lv.log_abs;
            }
        }
    }
    if col_log.iter().any(|c| *c == f64::NEG_INFINITY) {
        return Err(Error::Singular("design column identically zero"));
    }
    let rows = DMatrix::from_fn(nn, d, |k, j| logs[k][j].to_complex_shifted(col_log[j]));
    Ok(ScaledDesign {
        rows,
        col_log,
    })
}

/// Evaluation vector at `p` in the same column scaling as a design:
/// `b_j(p) e^{-n phi(p)} e^{-col_log[j]} e^{-shift}` together with the
/// extra uniform `shift` (max remaining log) taken out.
pub(crate) fn scaled_eval_vec(
    basis: DesignBasis,
    n: usize,
    col_log: &[f64],
    p: &ProjectivePoint,
) -> (DVector<Complex64>, f64) {
    let row = eval_log_row(basis, n, p);
    let mut shift = f64::NEG_INFINITY;
    for (lv, c) in row.iter().zip(col_log) {
        let l = lv.log_abs - c;
        if l > shift {
            shift = l;
        }
    }
    if shift == f64::NEG_INFINITY {
        // All basis elements vanish at p; cannot happen for our bases.
        return (DVector::zeros(row.len()), f64::NEG_INFINITY);
    }
    let v = DVector::from_fn(row.len(), |j, _| {
        row[j].to_complex_shifted(col_log[j] + shift)
    });
    (v, shift)
}

/// An orthonormal basis of the degree-`n` section space with respect to
/// the discrete inner product of a weighted node set.
#[derive(Debug, Clone)]
pub struct OrthonormalSections {
    degree: usize,
    basis: DesignBasis,
    col_log: Vec<f64>,
    /// Orthonormal factor of the weighted design, `N x d`.
    q: DMatrix<Complex64>,
    /// Upper-triangular factor with real positive diagonal; `R^H R` is the
    /// Gram matrix of the scaled basis.
    r: DMatrix<Complex64>,
    node_masses: Vec<f64>,
    node_bergman_log: Vec<f64>,
    trace_log: f64,
    cond_estimate: f64,
}

/// Weighted, column-scaled design matrix with exact unit column norms.
fn weighted_design(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let d = section_space_dim(n);
    if set.len() < d {
        return Err(Error::InvalidParameter(format!(
            "need at least {d} nodes for degree {n}, got {}",
            set.len()
        )));
    }
    let sd = scaled_design(set, n, basis)?;
    let mut a = sd.rows;
    let mut col_log = sd.col_log;
    for (k, m) in set.masses().iter().enumerate() {
        let s = m.sqrt();
        for j in 0..d {
            a[(k, j)] *= s;
        }
    }
    // Exact column renormalization: after this, every column has unit norm
    // and col_log carries the removed scale.
    for j in 0..d {
        let nrm = a.column(j).norm();
        if !(nrm > 0.0) {
            return Err(Error::Singular("weighted design column zero"));
        }
        for k in 0..a.nrows() {
            a[(k, j)] /= nrm;
        }
        col_log[j] += nrm.ln();
    }
    Ok((a, col_log))
}

fn finish(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
    col_log: Vec<f64>,
    q: DMatrix<Complex64>,
    r: DMatrix<Complex64>,
) -> Result<OrthonormalSections> {
    let d = section_space_dim(n);
    // Normalize the triangular factor to a real positive diagonal; the
    // factorization is then unique and routes become comparable.
    let mut q = q;
    let mut r = r;
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for j in 0..d {
        let rjj = r[(j, j)];
        let m = rjj.norm();
        if !(m > 1e-250) {
            return Err(Error::Singular("rank-deficient collocation"));
        }
        dmin = dmin.min(m);
        dmax = dmax.max(m);
        let s = rjj / m;
        let sc = s.conj();
        for l in j..d {
            r[(j, l)] *= sc;
        }
        for k in 0..q.nrows() {
            q[(k, j)] *= s;
        }
    }
    let node_bergman_log: Vec<f64> = (0..set.len())
        .map(|k| q.row(k).norm_squared().ln() - set.masses()[k].ln())
        .collect();
    let trace_log = q.norm_squared().ln();
    Ok(OrthonormalSections {
        degree: n,
        basis,
        col_log,
        q,
        r,
        node_masses: set.masses().to_vec(),
        node_bergman_log,
        trace_log,
        cond_estimate: dmax / dmin,
    })
}

/// Orthonormalize by Householder QR of the weighted design matrix.
pub fn orthonormalize(set: &WeightedCompactSet, n: usize) -> Result<OrthonormalSections> {
    let basis = select_basis(set);
    orthonormalize_with_basis(set, n, basis)
}

pub fn orthonormalize_with_basis(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
) -> Result<OrthonormalSections> {
    let (a, col_log) = weighted_design(set, n, basis)?;
    let qr = a.qr();
    let q = qr.q();
    let r = qr.r();
    finish(set, n, basis, col_log, q, r)
}

/// Orthonormalize through the explicit Gram matrix and its Cholesky factor.
/// Mathematically identical to the QR route; kept as an independent path
/// for cross-checking (it squares the condition number, so prefer
/// `orthonormalize` for production use).
pub fn orthonormalize_via_gram(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
) -> Result<OrthonormalSections> {
    let (a, col_log) = weighted_design(set, n, basis)?;
    let g = a.adjoint() * &a;
    let chol = nalgebra::linalg::Cholesky::new(g)
        .ok_or(Error::Singular("gram matrix not positive definite"))?;
    let l = chol.l();
    // Q = A R^{-1} with R = L^H: solve L X = A^H, then Q = X^H.
    let x = l
        .solve_lower_triangular(&a.adjoint())
        .ok_or(Error::Singular("gram triangular solve"))?;
    let q = x.adjoint();
    let r = l.adjoint();
    finish(set, n, basis, col_log, q, r)
}

impl OrthonormalSections {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        section_space_dim(self.degree)
    }

    pub fn basis(&self) -> DesignBasis {
        self.basis
    }

    pub fn node_count(&self) -> usize {
        self.q.nrows()
    }

    /// Ratio of extreme diagonal entries of the triangular factor: a cheap
    /// lower bound for the collocation condition number.
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    /// True when the collocation is so ill-conditioned that off-node
    /// kernel values may be unreliable.
    pub fn cond_warning(&self) -> bool {
        self.cond_estimate > 1e12
    }

    /// `log( B(y_k) e^{-2 n q_k} )` for every node: the field-weighted
    /// kernel diagonal, computed from the orthonormal factor alone.
    pub fn node_bergman_log(&self) -> &[f64] {
        &self.node_bergman_log
    }

    /// Sup of the field-weighted kernel diagonal over nodes and the index
    /// attaining it (lowest index on ties).
    pub fn bm_constant_log(&self) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (k, &v) in self.node_bergman_log.iter().enumerate() {
            if v > best {
                best = v;
                arg = k;
            }
        }
        (best, arg)
    }

    /// `log` of the mass-weighted trace `sum_k mass_k B(y_k) e^{-2 n q_k}`.
    /// Equals `log(dim)` identically: the n+1 orthonormal sections each
    /// contribute unit norm. Deviation measures factorization quality.
    pub fn weighted_trace_log(&self) -> f64 {
        self.trace_log
    }

    /// Values of the orthonormal sections at `p` (log form, chart of `p`,
    /// ambient weight folded in). The Bergman kernel diagonal at `p` is the
    /// sum of their squared magnitudes.
    pub fn section_values_log(&self, p: &ProjectivePoint) -> Vec<LogVal> {
        let (b, shift) = scaled_eval_vec(self.basis, self.degree, &self.col_log, p);
        let bbar = b.map(|v| v.conj());
        let u = self
            .r
            .adjoint()
            .solve_lower_triangular(&bbar)
            .expect("triangular factor is regular by construction");
        // v_i(p) = conj(u_i) e^{shift}
        (0..u.len())
            .map(|i| {
                let c = u[i].conj();
                let m = c.norm();
                if m == 0.0 {
                    LogVal::zero()
                } else {
                    LogVal {
                        log_abs: m.ln() + shift,
                        phase: c / m,
                    }
                }
            })
            .collect()
    }

    /// `log B_n(p)`: log of the Bergman kernel diagonal at `p`, ambient
    /// weight included (no field off the node set).
    pub fn bergman_log(&self, p: &ProjectivePoint) -> f64 {
        let (b, shift) = scaled_eval_vec(self.basis, self.degree, &self.col_log, p);
        if shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let bbar = b.map(|v| v.conj());
        let u = self
            .r
            .adjoint()
            .solve_lower_triangular(&bbar)
            .expect("triangular factor is regular by construction");
        2.0 * shift + u.norm_squared().ln()
    }

    /// Coefficients of the orthonormal sections in the column-scaled basis,
    /// together with the column scales: section `i` is
    /// `sum_j coeffs[(j, i)] e^{-col_log[j]} b_j`.
    pub fn scaled_coefficients(&self) -> (DMatrix<Complex64>, Vec<f64>) {
        let d = self.dim();
        let rinv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(d, d))
            .expect("triangular factor is regular by construction");
        (rinv, self.col_log.clone())
    }

    /// Kernel value at node `k` in log units (field-weighted diagonal),
    /// same as `node_bergman_log()[k]`.
    pub fn node_value_log(&self, k: usize) -> f64 {
        self.node_bergman_log[k]
    }

    pub fn node_mass(&self, k: usize) -> f64 {
        self.node_masses[k]
    }
}

/// Direct, unscaled monomial Gram matrix
/// `G[j][l] = sum_k mass_k z_k^j conj(z_k)^l e^{-2 n (phi_k + q_k)}`.
///
/// Assembled without any of the factored machinery; serves as an
/// independent reference for inner-product values (sane for moderate `n`
/// where `2^{-n}` does not underflow).
pub fn raw_gram(set: &WeightedCompactSet, n: usize) -> DMatrix<Complex64> {
    let d = section_space_dim(n);
    let mut g = DMatrix::zeros(d, d);
    for ((p, &m), &q) in set
        .points()
        .iter()
        .zip(set.masses())
        .zip(set.q_values())
    {
        let row = eval_basis_row(DesignBasis::Monomial, n, p);
        let wt = m * (-2.0 * (n as f64) * (fs_weight(p) + q)).exp();
        let vals: Vec<Complex64> = row.iter().map(|lv| lv.to_complex_shifted(0.0)).collect();
        for j in 0..d {
            for l in 0..d {
                g[(j, l)] += wt * vals[j] * vals[l].conj();
            }
        }
    }
    g
}

/// Discrete inner product of two sections given by coefficient vectors in
/// the column-scaled basis (as returned by `scaled_coefficients`).
pub fn scaled_pair_inner(
    set: &WeightedCompactSet,
    n: usize,
    basis: DesignBasis,
    col_log: &[f64],
    c1: &DVector<Complex64>,
    c2: &DVector<Complex64>,
) -> Result<Complex64> {
    let sd = scaled_design(set, n, basis)?;
    // scaled_design re-derives its own column scales; adjust to requested.
    let d = section_space_dim(n);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..set.len() {
        let mut v1 = Complex64::new(0.0, 0.0);
        let mut v2 = Complex64::new(0.0, 0.0);
        for j in 0..d {
            let entry = sd.rows[(k, j)] * (sd.col_log[j] - col_log[j]).exp();
            v1 += entry * c1[j];
            v2 += entry * c2[j];
        }
        acc += set.masses()[k] * v1 * v2.conj();
    }
    Ok(acc)
}
