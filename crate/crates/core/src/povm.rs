//! Four-outcome joint POVMs: the optimal boundary construction, the commuting fallback, and
//! joint-measurability tests.

use serde::{Deserialize, Serialize};

use crate::bloch::{
    worst_case_error, BlochVector, HermitianOp, ObservablePair, Outcome, SharpDirection,
    UnsharpObservable, TOL,
};
use crate::error::{invalid, Error, Result};
use crate::tradeoff::{optimal_point, ErrorPair, TradeoffPoint, SIN_THETA_CUTOFF};

/// POVM `{M_μν}` with `μ, ν = ±1`; `μ` labels the `A` outcome and `ν` the `B` outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<PovmElement>", try_from = "Vec<PovmElement>")]
pub struct Povm4 {
    elements: [HermitianOp; 4],
}

/// Serialized form of one POVM element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmElement {
    pub mu: Outcome,
    pub nu: Outcome,
    pub w: f64,
    pub v: BlochVector,
}

/// All `(μ, ν)` labels in storage order.
pub const LABELS: [(Outcome, Outcome); 4] = [
    (Outcome::Plus, Outcome::Plus),
    (Outcome::Plus, Outcome::Minus),
    (Outcome::Minus, Outcome::Plus),
    (Outcome::Minus, Outcome::Minus),
];

fn slot(mu: Outcome, nu: Outcome) -> usize {
    mu.index() * 2 + nu.index()
}

impl Povm4 {
    /// Elements in [`LABELS`] order, validated against [`TOL`].
    pub fn new(elements: [HermitianOp; 4]) -> Result<Self> {
        Self::with_tolerance(elements, TOL)
    }

    pub fn with_tolerance(elements: [HermitianOp; 4], tol: f64) -> Result<Self> {
        let povm = Self { elements };
        if elements
            .iter()
            .any(|e| !e.w.is_finite() || !e.v.is_finite())
        {
            return Err(invalid("POVM", "non-finite coefficients"));
        }
        let min_eig = povm.min_eigenvalue();
        if min_eig < -tol / 2.0 {
            return Err(invalid(
                "POVM",
                format!("element eigenvalue {min_eig:e} < 0"),
            ));
        }
        let res = povm.completeness_residual();
        if res > tol {
            return Err(invalid("POVM", format!("completeness residual {res:e}")));
        }
        Ok(povm)
    }

    pub fn from_fn(f: impl Fn(Outcome, Outcome) -> HermitianOp) -> Result<Self> {
        Self::new(LABELS.map(|(mu, nu)| f(mu, nu)))
    }

    pub(crate) fn from_fn_unchecked(f: impl Fn(Outcome, Outcome) -> HermitianOp) -> Self {
        Self {
            elements: LABELS.map(|(mu, nu)| f(mu, nu)),
        }
    }

    pub fn get(&self, mu: Outcome, nu: Outcome) -> HermitianOp {
        self.elements[slot(mu, nu)]
    }

    pub fn elements(&self) -> &[HermitianOp; 4] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = (Outcome, Outcome, HermitianOp)> + '_ {
        LABELS
            .iter()
            .zip(self.elements.iter())
            .map(|(&(mu, nu), &e)| (mu, nu, e))
    }

    /// Smallest eigenvalue over all four elements.
    pub fn min_eigenvalue(&self) -> f64 {
        self.elements
            .iter()
            .map(HermitianOp::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// `max(|Σw − 2|, |Σv|)`.
    pub fn completeness_residual(&self) -> f64 {
        let sum: HermitianOp = self.elements.iter().copied().sum();
        (sum.w - 2.0).abs().max(sum.v.norm())
    }

    /// `Σ_ν M_μν` gives the `A` marginal, `Σ_μ M_μν` the `B` marginal.
    pub fn marginals(&self) -> MarginalPair {
        let [pp, pm, mp, _] = self.elements;
        let a_plus = pp + pm;
        let b_plus = pp + mp;
        MarginalPair {
            a_marginal: UnsharpObservable::new_unchecked(a_plus.w - 1.0, a_plus.v),
            b_marginal: UnsharpObservable::new_unchecked(b_plus.w - 1.0, b_plus.v),
        }
    }

    /// Worst-case errors of the two marginals against the pair.
    pub fn errors(&self, pair: &ObservablePair) -> ErrorPair {
        let m = self.marginals();
        ErrorPair {
            eps_a: worst_case_error(&pair.a, &m.a_marginal),
            eps_b: worst_case_error(&pair.b, &m.b_marginal),
        }
    }
}

impl From<Povm4> for Vec<PovmElement> {
    fn from(p: Povm4) -> Self {
        p.iter()
            .map(|(mu, nu, e)| PovmElement {
                mu,
                nu,
                w: e.w,
                v: e.v,
            })
            .collect()
    }
}

impl TryFrom<Vec<PovmElement>> for Povm4 {
    type Error = Error;

    fn try_from(list: Vec<PovmElement>) -> Result<Self> {
        if list.len() != 4 {
            return Err(invalid(
                "POVM",
                format!("{} elements, expected 4", list.len()),
            ));
        }
        let mut slots: [Option<HermitianOp>; 4] = [None; 4];
        for e in list {
            let s = &mut slots[slot(e.mu, e.nu)];
            if s.is_some() {
                return Err(invalid("POVM", "duplicate (mu, nu) label"));
            }
            *s = Some(HermitianOp::new(e.w, e.v));
        }
        // All four labels are present: 4 distinct slots were filled.
        Self::with_tolerance(slots.map(Option::unwrap), 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalPair {
    pub a_marginal: UnsharpObservable,
    pub b_marginal: UnsharpObservable,
}

/// Everything produced by the optimal construction at one `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalConstruction {
    pub pair: ObservablePair,
    /// Curve point; `c` carries the sign of `cos θ` of the original pair.
    pub point: TradeoffPoint,
    pub m: BlochVector,
    pub n: BlochVector,
    pub povm: Povm4,
}

/// Optimal joint POVM for `pair` at curve parameter `phi`:
///
/// ```text
/// M_μν = ((1 + μν c) I + (μ m + ν n)·σ)/4
/// m = [a (E_b + (1 − c²) cos φ) sin φ + b c E_a cos φ]/sin θ
/// n = [b (E_a + (1 − c²) sin φ) cos φ + a c E_b sin φ]/sin θ
/// ```
///
/// The vectors are evaluated on the acute representative of the pair (`b → −b` when
/// `a·b < 0`); for an obtuse pair `n` and the `ν` label are flipped back afterwards.
pub fn optimal_construction(pair: &ObservablePair, phi: f64) -> Result<OptimalConstruction> {
    let (reduced, flipped) = pair.reduced();
    let s = reduced.sin_theta();
    if s < SIN_THETA_CUTOFF {
        return Err(Error::DegenerateCommuting { sin_theta: s });
    }
    let point = optimal_point(reduced.theta(), phi)?;
    let TradeoffPoint { phi, e_a, e_b, c } = point;
    let (sp, cp) = phi.sin_cos();
    let (a, b) = (reduced.a.vector(), reduced.b.vector());
    let one_c2 = 1.0 - c * c;

    let m = (a * ((e_b + one_c2 * cp) * sp) + b * (c * e_a * cp)) * (1.0 / s);
    let n = (b * ((e_a + one_c2 * sp) * cp) + a * (c * e_b * sp)) * (1.0 / s);
    let (n, c) = if flipped { (-n, -c) } else { (n, c) };

    let povm = Povm4::from_fn_unchecked(|mu, nu| {
        let (ms, ns) = (mu.sign(), nu.sign());
        HermitianOp::new((1.0 + ms * ns * c) / 2.0, (m * ms + n * ns) * 0.5)
    });
    Ok(OptimalConstruction {
        pair: *pair,
        point: TradeoffPoint { c, ..point },
        m,
        n,
        povm,
    })
}

/// The POVM of [`optimal_construction`].
pub fn optimal_povm(pair: &ObservablePair, phi: f64) -> Result<Povm4> {
    optimal_construction(pair, phi).map(|c| c.povm)
}

/// `h(m, n) = |m + n| + |m − n|`.
pub fn joint_measurability_h(m: &BlochVector, n: &BlochVector) -> f64 {
    (*m + *n).norm() + (*m - *n).norm()
}

/// Joint measurability of two unsharp observables.
///
/// Unbiased observables are jointly measurable iff `|m + n| + |m − n| ≤ 2`. Observables with
/// parallel vectors commute and are always jointly measurable. The general biased criterion is
/// not implemented.
pub fn jointly_measurable(m_obs: &UnsharpObservable, n_obs: &UnsharpObservable) -> Result<bool> {
    let (m, n) = (m_obs.vector, n_obs.vector);
    if m_obs.bias.abs() <= TOL && n_obs.bias.abs() <= TOL {
        return Ok(joint_measurability_h(&m, &n) <= 2.0 + TOL);
    }
    if m.cross(&n).norm() <= TOL {
        return Ok(true);
    }
    Err(Error::UnsupportedCriterion)
}

/// Error-free measurement of `B` jointly with an unsharp `A` of error `eps_a ≥ sin θ`.
///
/// The `A` marginal is `O(ε_a − sin θ, b cos θ)`, which commutes with `b·σ` and has error
/// `(ε_a − sin θ) + |a − b cos θ| = ε_a`. That observable is only valid while
/// `ε_a − sin θ + |cos θ| ≤ 1`; above that the marginal `O(1 − |t|, t b)` is used with `t`
/// (same sign as `cos θ`) solving `1 − |t| + |a − t b| = ε_a`.
pub fn commuting_povm(pair: &ObservablePair, eps_a: f64) -> Result<Povm4> {
    let s = pair.sin_theta();
    let cos = pair.cos_theta();
    if !eps_a.is_finite() || eps_a < s - TOL || eps_a > 2.0 + TOL {
        return Err(Error::OutOfRange {
            what: "eps_a",
            value: eps_a,
            lo: s,
            hi: 2.0,
        });
    }
    let eps_a = eps_a.clamp(s, 2.0);
    let (bias, t) = if eps_a - s + cos.abs() <= 1.0 + TOL {
        (eps_a - s, cos)
    } else {
        let err = |u: f64| 1.0 - u + (1.0 - 2.0 * u * cos.abs() + u * u).max(0.0).sqrt();
        let (mut lo, mut hi) = (0.0, cos.abs());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if err(mid) > eps_a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        (1.0 - u, u.copysign(cos))
    };

    let b = pair.b.vector();
    Povm4::from_fn(|mu, nu| {
        let (ms, ns) = (mu.sign(), nu.sign());
        let alpha = (1.0 + ms * bias + ms * ns * t) / 2.0;
        HermitianOp::new(alpha, b * (ns * alpha))
    })
}

/// Residuals of the tangency conditions at an optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencyResiduals {
    /// `(a − m)·(b − n)`.
    pub dot: f64,
    /// `max(|det(a, b, m)|, |det(a, b, n)|)`; zero iff `m` and `n` lie in the `a`–`b` plane.
    pub coplanarity: f64,
}

pub fn tangency_residuals(
    pair: &ObservablePair,
    m: &BlochVector,
    n: &BlochVector,
) -> TangencyResiduals {
    let (a, b) = (pair.a.vector(), pair.b.vector());
    TangencyResiduals {
        dot: (a - *m).dot(&(b - *n)),
        coplanarity: m.triple(&a, &b).abs().max(n.triple(&a, &b).abs()),
    }
}

/// Sharp measurement of `d·σ` for the `A` label, paired with an independent coin for `ν`:
/// `M_μν = q_ν (I + μ d·σ)/2`.
pub fn sharp_with_coin(dir: SharpDirection, q_plus: f64) -> Result<Povm4> {
    if !(0.0..=1.0).contains(&q_plus) {
        return Err(Error::OutOfRange {
            what: "coin probability",
            value: q_plus,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Povm4::from_fn(|mu, nu| {
        let q = if nu == Outcome::Plus {
            q_plus
        } else {
            1.0 - q_plus
        };
        HermitianOp::new(q, dir.vector() * (mu.sign() * q))
    })
}
