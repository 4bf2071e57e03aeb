//! Log-scale evaluation of section bases on degree-`n` line bundles.
//!
//! A basis element is evaluated as `value = exp(log_abs) * phase` with
//! `|phase| = 1`, so magnitudes that overflow or underflow `f64` (they grow
//! like `e^{c n}`) stay representable through `log_abs` alone.
//!
//! Two bases are supported. In the zero chart the monomial basis element
//! `j` is `z^j`; the Chebyshev basis element is `T_j(z)`. In the infinity
//! chart the same sections read `w^{n-j}` and `w^n T_j(1/w)`.

use crate::geometry::{Chart, ProjectivePoint};
use num_complex::Complex64;

/// Choice of polynomial basis for the section space of degree `n`
/// (dimension `n + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignBasis {
    /// Powers of the zero-chart coordinate. Well conditioned on circles.
    Monomial,
    /// Chebyshev polynomials of the zero-chart coordinate. Well conditioned
    /// on node sets inside `[-1, 1]`, where monomial collocation matrices
    /// have condition numbers growing like `(1 + sqrt(2))^n`.
    Chebyshev,
}

impl DesignBasis {
    pub fn name(self) -> &'static str {
        match self {
            DesignBasis::Monomial => "monomial",
            DesignBasis::Chebyshev => "chebyshev",
        }
    }
}

/// A complex value in log form: `exp(log_abs) * phase`, `|phase| = 1`.
/// `log_abs = -inf` encodes an exact zero (phase is then arbitrary).
#[derive(Debug, Clone, Copy)]
pub struct LogVal {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogVal {
    pub fn zero() -> LogVal {
        LogVal {
            log_abs: f64::NEG_INFINITY,
            phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn from_complex(v: Complex64) -> LogVal {
        let r = v.norm();
        if r == 0.0 {
            LogVal::zero()
        } else {
            LogVal {
                log_abs: r.ln(),
                phase: v / r,
            }
        }
    }

    /// Materialize with an external log shift: `exp(log_abs - shift) * phase`.
    pub fn to_complex_shifted(&self, shift: f64) -> Complex64 {
        if self.log_abs == f64::NEG_INFINITY {
            Complex64::new(0.0, 0.0)
        } else {
            self.phase * (self.log_abs - shift).exp()
        }
    }
}

fn unit_phase(v: Complex64) -> Complex64 {
    let r = v.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        v / r
    }
}

/// Monomial row `j = 0..=n` at `p`, in the chart of `p`.
fn monomial_row(n: usize, p: &ProjectivePoint) -> Vec<LogVal> {
    let c = p.coord();
    let r = c.norm();
    let d = n + 1;
    let mut out = Vec::with_capacity(d);
    if r == 0.0 {
        for j in 0..d {
            // z = 0: only z^0 (zero chart) or w^0, i.e. j = n (infinity chart).
            let hit = match p.chart() {
                Chart::Zero => j == 0,
                Chart::Infinity => j == n,
            };
            out.push(if hit {
                LogVal {
                    log_abs: 0.0,
                    phase: Complex64::new(1.0, 0.0),
                }
            } else {
                LogVal::zero()
            });
        }
        return out;
    }
    let logr = r.ln();
    let ph1 = c / r;
    // exponent of the coordinate for basis element j
    let expo = |j: usize| -> usize {
        match p.chart() {
            Chart::Zero => j,
            Chart::Infinity => n - j,
        }
    };
    let mut phases = Vec::with_capacity(d);
    let mut ph = Complex64::new(1.0, 0.0);
    for _ in 0..d {
        phases.push(ph);
        ph *= ph1;
        ph = unit_phase(ph); // keep the phase on the unit circle
    }
    for j in 0..d {
        let e = expo(j);
        out.push(LogVal {
            log_abs: e as f64 * logr,
            phase: phases[e],
        });
    }
    out
}

/// Branch of `u = z + sqrt(z^2 - 1)` with `|u| >= 1`. The two branches are
/// reciprocal, so one of them always qualifies.
pub(crate) fn joukowski_u(z: Complex64) -> Complex64 {
    let s = (z * z - Complex64::new(1.0, 0.0)).sqrt();
    let u = z + s;
    if u.norm() >= 1.0 {
        u
    } else {
        z - s
    }
}

/// Chebyshev values `T_j(z)` for `j = 0..=n` at complex `z`, in log form,
/// via `T_j = (u^j + u^{-j}) / 2` on the `|u| >= 1` branch.
fn chebyshev_values_u(n: usize, z: Complex64) -> Vec<LogVal> {
    let u = joukowski_u(z);
    let ru = u.norm();
    let log_ru = ru.ln();
    let phu = unit_phase(u);
    let uinv2 = (u * u).inv(); // |u^{-2}| <= 1
    let mut out = Vec::with_capacity(n + 1);
    let mut ph = Complex64::new(1.0, 0.0); // phase(u)^j
    let mut tail = Complex64::new(1.0, 0.0); // u^{-2j}
    for j in 0..=n {
        let one_plus = Complex64::new(1.0, 0.0) + tail;
        let m = one_plus.norm();
        if m == 0.0 {
            out.push(LogVal::zero());
        } else {
            out.push(LogVal {
                log_abs: j as f64 * log_ru + m.ln() - std::f64::consts::LN_2,
                phase: unit_phase(ph * one_plus),
            });
        }
        ph *= phu;
        ph = unit_phase(ph);
        tail *= uinv2;
    }
    // j = 0 is exact: T_0 = 1.
    out[0] = LogVal {
        log_abs: 0.0,
        phase: Complex64::new(1.0, 0.0),
    };
    out
}

/// Chebyshev values at a real `x` in `[-1, 1]` via `T_j = cos(j acos x)`.
fn chebyshev_values_real(n: usize, x: f64) -> Vec<LogVal> {
    if x == 0.0 {
        // cos(j pi / 2) evaluated exactly: 0 for odd j, (-1)^(j/2) for even.
        return (0..=n)
            .map(|j| {
                if j % 2 == 1 {
                    LogVal::zero()
                } else {
                    LogVal {
                        log_abs: 0.0,
                        phase: Complex64::new(if j % 4 == 0 { 1.0 } else { -1.0 }, 0.0),
                    }
                }
            })
            .collect();
    }
    let th = x.clamp(-1.0, 1.0).acos();
    (0..=n)
        .map(|j| {
            let v = (j as f64 * th).cos();
            LogVal::from_complex(Complex64::new(v, 0.0))
        })
        .collect()
}

/// Chebyshev row in the chart of `p`: `T_j(z)` in the zero chart, the
/// section `w^n T_j(1/w)` in the infinity chart.
fn chebyshev_row(n: usize, p: &ProjectivePoint) -> Vec<LogVal> {
    match p.chart() {
        Chart::Zero => {
            let z = p.coord();
            if z.im == 0.0 && z.re.abs() <= 1.0 {
                chebyshev_values_real(n, z.re)
            } else {
                chebyshev_values_u(n, z)
            }
        }
        Chart::Infinity => {
            let w = p.coord();
            if w.norm() == 0.0 {
                // w^n T_j(1/w) -> 0 for j < n; the top element tends to the
                // leading coefficient 2^{n-1} of T_n (1 when n = 0).
                let mut out = vec![LogVal::zero(); n + 1];
                out[n] = LogVal {
                    log_abs: if n == 0 {
                        0.0
                    } else {
                        (n as f64 - 1.0) * std::f64::consts::LN_2
                    },
                    phase: Complex64::new(1.0, 0.0),
                };
                return out;
            }
            let z = w.inv();
            let factor = LogVal::from_complex(w);
            let mut out = if z.im == 0.0 && z.re.abs() <= 1.0 {
                chebyshev_values_real(n, z.re)
            } else {
                chebyshev_values_u(n, z)
            };
            for lv in out.iter_mut() {
                lv.log_abs += n as f64 * factor.log_abs;
                lv.phase = unit_phase(lv.phase * factor.phase.powu(n as u32));
            }
            out
        }
    }
}

/// Values of all basis elements `j = 0..=n` at `p`, in the chart of `p`.
pub fn eval_basis_row(basis: DesignBasis, n: usize, p: &ProjectivePoint) -> Vec<LogVal> {
    match basis {
        DesignBasis::Monomial => monomial_row(n, p),
        DesignBasis::Chebyshev => chebyshev_row(n, p),
    }
}
