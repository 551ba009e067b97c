//! The optimal error-tradeoff curve and the linear lower bounds it envelopes.
//!
//! For an angle `θ` between the two observables, every attainable pair `(ε_a, ε_b)` satisfies
//!
//! ```text
//! ε_a sin φ + ε_b cos φ ≥ √(1 + sin θ sin 2φ) − 1      for all φ ∈ [0, π/2]
//! ```
//!
//! and the envelope of that family is the boundary curve
//!
//! ```text
//! E_a(φ) = (sin φ + sin θ cos φ)/√(1 + sin θ sin 2φ) − sin φ
//! E_b(φ) = (cos φ + sin θ sin φ)/√(1 + sin θ sin 2φ) − cos φ
//! ```
//!
//! Both only depend on `sin θ`, so an obtuse pair is handled by flipping `b → −b`
//! (which turns `θ` into `π − θ`). The coefficient `c = cos θ/√(1 + sin θ sin 2φ)` is the one
//! quantity that keeps the sign of `cos θ`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::bloch::{check_theta, TOL};
use crate::error::{Error, Result};

/// Below this `sin θ` the observables are treated as commuting.
pub const SIN_THETA_CUTOFF: f64 = 1e-9;

/// Gap tolerance separating Forbidden / Boundary / Interior.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Grid size used to seed the minimization in [`classify`].
pub const CLASSIFY_GRID: usize = 1024;

/// A point `(E_a(φ), E_b(φ))` on the optimal curve together with `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub phi: f64,
    pub e_a: f64,
    pub e_b: f64,
    pub c: f64,
}

impl TradeoffPoint {
    pub fn errors(&self) -> ErrorPair {
        ErrorPair {
            eps_a: self.e_a,
            eps_b: self.e_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub eps_a: f64,
    pub eps_b: f64,
}

impl ErrorPair {
    /// Errors must lie in `[0, 2]`; anything above 2 cannot come from a valid observable.
    pub fn new(eps_a: f64, eps_b: f64) -> Result<Self> {
        for (what, v) in [("eps_a", eps_a), ("eps_b", eps_b)] {
            if !v.is_finite() || !(0.0..=2.0 + TOL).contains(&v) {
                return Err(Error::OutOfRange {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: 2.0,
                });
            }
        }
        Ok(Self { eps_a, eps_b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Forbidden,
    Boundary,
    Interior,
}

/// Result of [`classify`]. `witness_phi` minimizes the gap: for a forbidden pair it names a
/// violated bound, for a boundary pair it is the tangent direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub region: Region,
    pub witness_phi: f64,
    pub min_gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTangent {
    pub d_ea_d_sinphi: f64,
    pub d_eb_d_ea: f64,
    /// Set at `φ = 0` or `φ = π/2`, where only a one-sided derivative exists.
    pub one_sided: bool,
}

fn check_phi(phi: f64) -> Result<f64> {
    if !phi.is_finite() || !(-TOL..=FRAC_PI_2 + TOL).contains(&phi) {
        return Err(Error::OutOfRange {
            what: "phi",
            value: phi,
            lo: 0.0,
            hi: FRAC_PI_2,
        });
    }
    Ok(phi.clamp(0.0, FRAC_PI_2))
}

fn noncommuting_sin(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let s = theta.sin();
    if s < SIN_THETA_CUTOFF {
        return Err(Error::DegenerateCommuting { sin_theta: s });
    }
    Ok(s)
}

/// Right-hand side `√(1 + sin θ sin 2φ) − 1` of the bound at `φ`.
#[inline]
pub fn bound_rhs(sin_theta: f64, phi: f64) -> f64 {
    let x = sin_theta * (2.0 * phi).sin();
    x / ((1.0 + x).sqrt() + 1.0)
}

/// `(E_a(φ), E_b(φ))` from `sin θ`, without validation.
///
/// `E_a = (sin φ + sin θ cos φ)/S − sin φ` with `S = √(1 + sin θ sin 2φ)`, rearranged as
/// `sin θ (cos φ − sin φ sin 2φ/(1 + S))/S` to avoid cancellation.
#[inline]
pub fn curve_errors(sin_theta: f64, phi: f64) -> (f64, f64) {
    let (sp, cp) = phi.sin_cos();
    let s2 = 2.0 * sp * cp;
    let root = (1.0 + sin_theta * s2).sqrt();
    let k = s2 / (1.0 + root);
    let e_a = sin_theta * (cp - sp * k) / root;
    let e_b = sin_theta * (sp - cp * k) / root;
    (e_a, e_b)
}

pub fn optimal_point(theta: f64, phi: f64) -> Result<TradeoffPoint> {
    let s = noncommuting_sin(theta)?;
    let phi = check_phi(phi)?;
    let (e_a, e_b) = curve_errors(s, phi);
    let c = theta.cos() / (1.0 + s * (2.0 * phi).sin()).sqrt();
    Ok(TradeoffPoint { phi, e_a, e_b, c })
}

/// `n_points` curve samples on a uniform `φ` grid over `[0, π/2]`, endpoints included.
pub fn curve(theta: f64, n_points: usize) -> Result<Vec<TradeoffPoint>> {
    if n_points < 2 {
        return Err(crate::error::invalid(
            "point count",
            "need at least 2 points",
        ));
    }
    let step = FRAC_PI_2 / (n_points - 1) as f64;
    (0..n_points)
        .map(|i| {
            let phi = if i + 1 == n_points {
                FRAC_PI_2
            } else {
                i as f64 * step
            };
            optimal_point(theta, phi)
        })
        .collect()
}

/// Signed slack of the bound at `φ`; nonnegative iff the bound holds.
pub fn lower_bound_gap(theta: f64, pair: &ErrorPair, phi: f64) -> f64 {
    let (sp, cp) = phi.sin_cos();
    pair.eps_a * sp + pair.eps_b * cp - bound_rhs(theta.sin(), phi)
}

/// Precomputed bound family on a fixed `φ` grid, for repeated gap minimization.
#[derive(Clone, Debug)]
pub struct BoundFamily {
    sin_theta: f64,
    // (φ, sin φ, cos φ, rhs)
    grid: Vec<[f64; 4]>,
}

impl BoundFamily {
    pub fn new(theta: f64, n_grid: usize) -> Result<Self> {
        check_theta(theta)?;
        if n_grid < 3 {
            return Err(crate::error::invalid("grid size", "need at least 3 points"));
        }
        let s = theta.sin();
        let step = FRAC_PI_2 / (n_grid - 1) as f64;
        let grid = (0..n_grid)
            .map(|i| {
                let phi = if i + 1 == n_grid {
                    FRAC_PI_2
                } else {
                    i as f64 * step
                };
                let (sp, cp) = phi.sin_cos();
                [phi, sp, cp, bound_rhs(s, phi)]
            })
            .collect();
        Ok(Self { sin_theta: s, grid })
    }

    fn gap_at(&self, eps_a: f64, eps_b: f64, phi: f64) -> f64 {
        let (sp, cp) = phi.sin_cos();
        eps_a * sp + eps_b * cp - bound_rhs(self.sin_theta, phi)
    }

    /// Grid argmin only: `(φ, gap)`.
    pub fn coarse_min_gap(&self, eps_a: f64, eps_b: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, g) in self.grid.iter().enumerate() {
            let gap = eps_a * g[1] + eps_b * g[2] - g[3];
            if gap < best.1 {
                best = (i, gap);
            }
        }
        best
    }

    /// `min_φ gap(φ)` by a grid scan refined with golden-section search around the grid
    /// minimum. Returns `(φ, gap)`.
    pub fn min_gap(&self, eps_a: f64, eps_b: f64) -> (f64, f64) {
        let (i, coarse) = self.coarse_min_gap(eps_a, eps_b);
        let lo = self.grid[i.saturating_sub(1)][0];
        let hi = self.grid[(i + 1).min(self.grid.len() - 1)][0];
        let f = |phi: f64| self.gap_at(eps_a, eps_b, phi);
        let (phi, gap) = golden_min(f, lo, hi);
        if gap <= coarse {
            (phi, gap)
        } else {
            (self.grid[i][0], coarse)
        }
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Places an error pair relative to the optimal curve by minimizing the bound gap over `φ`.
/// Valid for any pair in `[0, 2]²`, not only for points on the curve.
pub fn classify(theta: f64, pair: &ErrorPair) -> Result<Classification> {
    let family = BoundFamily::new(theta, CLASSIFY_GRID)?;
    let (witness_phi, min_gap) = family.min_gap(pair.eps_a, pair.eps_b);
    let region = if min_gap < -CLASSIFY_TOL {
        Region::Forbidden
    } else if min_gap <= CLASSIFY_TOL {
        Region::Boundary
    } else {
        Region::Interior
    };
    Ok(Classification {
        region,
        witness_phi,
        min_gap,
    })
}

/// Inverts the strictly decreasing map `φ ↦ E_a(φ)` by bisection.
pub fn phi_for_error_a(theta: f64, eps_a: f64) -> Result<f64> {
    let s = noncommuting_sin(theta)?;
    if !eps_a.is_finite() || eps_a < -TOL || eps_a > s + TOL {
        return Err(Error::OutOfRange {
            what: "eps_a",
            value: eps_a,
            lo: 0.0,
            hi: s,
        });
    }
    if eps_a <= 0.0 {
        return Ok(FRAC_PI_2);
    }
    if eps_a >= s {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if curve_errors(s, mid).0 > eps_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pick = |phi: f64| (curve_errors(s, phi).0 - eps_a).abs();
    Ok(if pick(lo) <= pick(hi) { lo } else { hi })
}

/// Closed-form slopes of the curve: `dE_a/d sin φ = c³/cos θ − 1` and `dE_b/dE_a = −tan φ`.
///
/// The first is evaluated as `cos²θ/(1 + sin θ sin 2φ)^{3/2} − 1`, which is the same
/// expression without the removable singularity at `θ = π/2`.
pub fn curve_tangent(theta: f64, phi: f64) -> Result<CurveTangent> {
    let s = noncommuting_sin(theta)?;
    let phi = check_phi(phi)?;
    let root = 1.0 + s * (2.0 * phi).sin();
    let cos2 = theta.cos().powi(2);
    let one_sided = phi <= 0.0 || phi >= FRAC_PI_2;
    let d_eb_d_ea = if phi >= FRAC_PI_2 {
        f64::NEG_INFINITY
    } else {
        -phi.tan()
    };
    Ok(CurveTangent {
        d_ea_d_sinphi: cos2 / (root * root.sqrt()) - 1.0,
        d_eb_d_ea,
        one_sided,
    })
}
