//! Bloch-sphere geometry and 2×2 Hermitian operators in coefficient form.
//!
//! A qubit operator is stored as `(w, v)` and stands for `(w I + v·σ)/2`. Its trace is `w`,
//! its eigenvalues are `(w ± |v|)/2`, so positivity is just `w ≥ |v|`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Global validation tolerance. Every identity in this crate is exact; the slack only absorbs
/// floating-point rounding.
pub const TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const X: Self = Self::new(1.0, 0.0, 0.0);
    pub const Y: Self = Self::new(0.0, 1.0, 0.0);
    pub const Z: Self = Self::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Unit vector along `self`, or `None` for a (numerically) zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > f64::MIN_POSITIVE && n.is_finite() {
            Some(*self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Scalar triple product `self · (b × c)`.
    pub fn triple(&self, b: &Self, c: &Self) -> f64 {
        self.dot(&b.cross(c))
    }
}

impl From<[f64; 3]> for BlochVector {
    fn from(c: [f64; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        v.to_array()
    }
}

impl Add for BlochVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for BlochVector {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for BlochVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<BlochVector> for f64 {
    type Output = BlochVector;
    fn mul(self, v: BlochVector) -> BlochVector {
        v * self
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A unit Bloch vector: the direction of a sharp observable `d·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SharpDirection(BlochVector);

impl SharpDirection {
    pub fn new(v: BlochVector) -> Result<Self> {
        Self::with_tolerance(v, TOL)
    }

    pub fn with_tolerance(v: BlochVector, tol: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(invalid("sharp direction", "non-finite component"));
        }
        let n = v.norm();
        if (n - 1.0).abs() > tol {
            return Err(invalid("sharp direction", format!("norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Normalizes any nonzero finite vector.
    pub fn from_unnormalized(v: BlochVector) -> Result<Self> {
        if !v.is_finite() {
            return Err(invalid("sharp direction", "non-finite component"));
        }
        v.normalized()
            .map(Self)
            .ok_or_else(|| invalid("sharp direction", "zero vector has no direction"))
    }

    pub fn vector(&self) -> BlochVector {
        self.0
    }
}

impl Neg for SharpDirection {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl<'de> Deserialize<'de> for SharpDirection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = BlochVector::deserialize(d)?;
        Self::with_tolerance(v, 1e-9).map_err(serde::de::Error::custom)
    }
}

/// Qubit density operator `(I + r·σ)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub r: BlochVector,
}

impl QubitState {
    pub fn new(r: BlochVector) -> Result<Self> {
        Self::with_tolerance(r, TOL)
    }

    pub fn with_tolerance(r: BlochVector, tol: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(invalid("qubit state", "non-finite Bloch vector"));
        }
        let n = r.norm();
        if n > 1.0 + tol {
            return Err(invalid("qubit state", format!("|r| = {n} exceeds 1")));
        }
        Ok(Self { r })
    }

    pub fn pure(dir: SharpDirection) -> Self {
        Self { r: dir.vector() }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            r: BlochVector::ZERO,
        }
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.r.norm() - 1.0).abs() <= tol
    }
}

/// Outcome label `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn from_bool(plus: bool) -> Self {
        if plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

impl Mul for Outcome {
    type Output = Outcome;
    fn mul(self, o: Outcome) -> Outcome {
        Outcome::from_bool(self == o)
    }
}

impl Neg for Outcome {
    type Output = Outcome;
    fn neg(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Outcome::from_value(v).ok_or_else(|| serde::de::Error::custom("outcome must be +1 or -1"))
    }
}

/// The operator `(w I + v·σ)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HermitianOp {
    pub w: f64,
    pub v: BlochVector,
}

impl HermitianOp {
    pub const ZERO: Self = Self::new(0.0, BlochVector::ZERO);
    pub const IDENTITY: Self = Self::new(2.0, BlochVector::ZERO);

    pub const fn new(w: f64, v: BlochVector) -> Self {
        Self { w, v }
    }

    /// Projector `(I + d·σ)/2` onto the `+1` eigenstate of `d·σ`.
    pub fn projector(dir: SharpDirection) -> Self {
        Self::new(1.0, dir.vector())
    }

    pub fn trace(&self) -> f64 {
        self.w
    }

    /// Both eigenvalues, largest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.v.norm();
        ((self.w + r) / 2.0, (self.w - r) / 2.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        (self.w - self.v.norm()) / 2.0
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.w >= self.v.norm() - tol
    }

    /// `Tr(ρ X)` for the state `ρ = (I + r·σ)/2`.
    pub fn expectation(&self, state: &QubitState) -> f64 {
        (self.w + self.v.dot(&state.r)) / 2.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.w * s, self.v * s)
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (hi, lo) = self.eigenvalues();
        let (fh, fl) = (f(hi), f(lo));
        match self.v.normalized() {
            Some(u) => Self::new(fh + fl, u * (fh - fl)),
            None => Self::new(2.0 * fh, BlochVector::ZERO),
        }
    }

    /// `S^{-1/2}`, defined only for positive definite operators.
    pub fn inv_sqrt(&self) -> Option<Self> {
        if self.min_eigenvalue() <= 0.0 {
            return None;
        }
        Some(self.map_spectrum(|l| 1.0 / l.sqrt()))
    }

    /// The sandwich `K X K` with `K` Hermitian.
    pub fn conjugate_by(&self, k: &HermitianOp) -> Self {
        // With K = αI + β·σ and X = γI + g·σ:
        // KXK = [γ(α² + |β|²) + 2α β·g] I + [2αγ β + 2(β·g) β + (α² − |β|²) g]·σ
        let (alpha, beta) = (k.w / 2.0, k.v * 0.5);
        let (gamma, g) = (self.w / 2.0, self.v * 0.5);
        let bg = beta.dot(&g);
        let bb = beta.norm_sq();
        let scalar = gamma * (alpha * alpha + bb) + 2.0 * alpha * bg;
        let vector = beta * (2.0 * alpha * gamma + 2.0 * bg) + g * (alpha * alpha - bb);
        Self::new(2.0 * scalar, vector * 2.0)
    }
}

impl Add for HermitianOp {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.v + o.v)
    }
}

impl Sub for HermitianOp {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.v - o.v)
    }
}

impl std::iter::Sum for HermitianOp {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, x| acc + x)
    }
}

/// Two-outcome observable `O_μ = (I + μ(x + m·σ))/2`, `μ = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnsharpObservable {
    pub bias: f64,
    pub vector: BlochVector,
}

impl UnsharpObservable {
    pub fn new(bias: f64, vector: BlochVector) -> Result<Self> {
        Self::with_tolerance(bias, vector, TOL)
    }

    pub fn with_tolerance(bias: f64, vector: BlochVector, tol: f64) -> Result<Self> {
        if !bias.is_finite() || !vector.is_finite() {
            return Err(invalid("unsharp observable", "non-finite coefficients"));
        }
        let s = bias.abs() + vector.norm();
        if s > 1.0 + tol {
            return Err(invalid(
                "unsharp observable",
                format!("|x| + |m| = {s} exceeds 1"),
            ));
        }
        Ok(Self { bias, vector })
    }

    /// Skips validation; only for values that are valid by construction.
    pub(crate) fn new_unchecked(bias: f64, vector: BlochVector) -> Self {
        Self { bias, vector }
    }

    pub fn sharp(dir: SharpDirection) -> Self {
        Self::new_unchecked(0.0, dir.vector())
    }

    pub fn unbiased(vector: BlochVector) -> Result<Self> {
        Self::new(0.0, vector)
    }

    /// The POVM element for `outcome`.
    pub fn element(&self, outcome: Outcome) -> HermitianOp {
        let s = outcome.sign();
        HermitianOp::new(1.0 + s * self.bias, self.vector * s)
    }

    /// Born-rule probability `Tr ρ O_μ = (1 + μ(x + m·r))/2`.
    pub fn outcome_probability(&self, state: &QubitState, outcome: Outcome) -> f64 {
        let s = outcome.sign();
        (1.0 + s * (self.bias + self.vector.dot(&state.r))) / 2.0
    }
}

/// Two sharp observables `A = a·σ`, `B = b·σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservablePair {
    pub a: SharpDirection,
    pub b: SharpDirection,
}

impl ObservablePair {
    pub fn new(a: SharpDirection, b: SharpDirection) -> Self {
        Self { a, b }
    }

    /// `a = x̂`, `b = cos θ x̂ + sin θ ẑ`. At `θ = π/2` this is `(σ_x, σ_z)`.
    pub fn canonical(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let a = SharpDirection(BlochVector::X);
        let b = SharpDirection(BlochVector::new(theta.cos(), 0.0, theta.sin()));
        Ok(Self { a, b })
    }

    pub fn sin_theta(&self) -> f64 {
        self.a.vector().cross(&self.b.vector()).norm()
    }

    pub fn cos_theta(&self) -> f64 {
        self.a.vector().dot(&self.b.vector())
    }

    /// Angle between `a` and `b` in `[0, π]`.
    pub fn theta(&self) -> f64 {
        self.sin_theta().atan2(self.cos_theta())
    }

    /// Replaces `b` by `−b` when the angle is obtuse. Returns the flag so callers can undo
    /// the flip on the `B` outcome label.
    pub fn reduced(&self) -> (Self, bool) {
        if self.cos_theta() < 0.0 {
            (Self::new(self.a, -self.b), true)
        } else {
            (*self, false)
        }
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
            lo: 0.0,
            hi: std::f64::consts::PI,
        });
    }
    Ok(())
}

/// Worst-case error `|x| + |a − m|` of `approx` as a measurement of the sharp observable
/// along `target`. This is the largest deviation, over all input states, between the two
/// outcome distributions, measured as the ℓ1 distance.
pub fn worst_case_error(target: &SharpDirection, approx: &UnsharpObservable) -> f64 {
    approx.bias.abs() + (target.vector() - approx.vector).norm()
}

/// A pure state attaining [`worst_case_error`].
///
/// The deviation of the `+` probabilities is `((a − m)·r − x)/2`, so the maximizer is the unit
/// vector along `a − m` flipped against the sign of the bias. When `a = m` every pure state
/// gives the same deviation and `target` itself is returned.
pub fn maximizing_state(target: &SharpDirection, approx: &UnsharpObservable) -> QubitState {
    match (target.vector() - approx.vector).normalized() {
        Some(u) if approx.bias > 0.0 => QubitState { r: -u },
        Some(u) => QubitState { r: u },
        None => QubitState::pure(*target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    type Mat2 = [[C; 2]; 2];

    fn to_matrix(op: &HermitianOp) -> Mat2 {
        let (w, v) = (op.w, op.v);
        [
            [C::new((w + v.z) / 2.0, 0.0), C::new(v.x / 2.0, -v.y / 2.0)],
            [C::new(v.x / 2.0, v.y / 2.0), C::new((w - v.z) / 2.0, 0.0)],
        ]
    }

    fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn min_eig_direct(m: &Mat2) -> f64 {
        let tr = (m[0][0] + m[1][1]).re;
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
        (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0
    }

    fn dir(x: f64, y: f64, z: f64) -> SharpDirection {
        SharpDirection::from_unnormalized(BlochVector::new(x, y, z)).unwrap()
    }

    #[test]
    fn outcome_probability_examples() {
        let z = dir(0.0, 0.0, 1.0);
        let proj = UnsharpObservable::sharp(z);
        let up = QubitState::pure(z);
        let plus_x = QubitState::pure(dir(1.0, 0.0, 0.0));
        assert_eq!(proj.outcome_probability(&up, Outcome::Plus), 1.0);
        assert_eq!(proj.outcome_probability(&plus_x, Outcome::Plus), 0.5);

        let biased = UnsharpObservable::new(0.2, BlochVector::Z * 0.5).unwrap();
        let p = biased.outcome_probability(&up, Outcome::Minus);
        assert!((p - 0.15).abs() < 1e-15);
    }

    #[test]
    fn worst_case_error_examples() {
        let z = dir(0.0, 0.0, 1.0);
        let exact = UnsharpObservable::new(0.0, BlochVector::Z).unwrap();
        let trivial = UnsharpObservable::new(0.0, BlochVector::ZERO).unwrap();
        let always_plus = UnsharpObservable::new(1.0, BlochVector::ZERO).unwrap();
        assert_eq!(worst_case_error(&z, &exact), 0.0);
        assert_eq!(worst_case_error(&z, &trivial), 1.0);
        assert_eq!(worst_case_error(&z, &always_plus), 2.0);
    }

    #[test]
    fn maximizing_state_examples() {
        let z = dir(0.0, 0.0, 1.0);
        let half = UnsharpObservable::new(0.0, BlochVector::Z * 0.5).unwrap();
        assert_eq!(maximizing_state(&z, &half).r, BlochVector::Z);

        let along_x = UnsharpObservable::new(0.0, BlochVector::X).unwrap();
        let r = maximizing_state(&z, &along_x).r;
        let expect = BlochVector::new(-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2);
        assert!((r - expect).norm() < 1e-15);

        let exact = UnsharpObservable::new(0.0, BlochVector::Z).unwrap();
        assert_eq!(maximizing_state(&z, &exact).r, BlochVector::Z);
    }

    #[test]
    fn maximizing_state_attains_error_with_bias() {
        let z = dir(0.0, 0.0, 1.0);
        for bias in [-0.3, 0.3] {
            let obs = UnsharpObservable::new(bias, BlochVector::new(0.4, 0.1, 0.2)).unwrap();
            let st = maximizing_state(&z, &obs);
            let sharp = UnsharpObservable::sharp(z);
            let dev = (sharp.outcome_probability(&st, Outcome::Plus)
                - obs.outcome_probability(&st, Outcome::Plus))
            .abs();
            assert!((2.0 * dev - worst_case_error(&z, &obs)).abs() < 1e-14);
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(SharpDirection::new(BlochVector::new(1.0, 1.0, 0.0)).is_err());
        assert!(SharpDirection::new(BlochVector::new(f64::NAN, 0.0, 0.0)).is_err());
        assert!(SharpDirection::from_unnormalized(BlochVector::ZERO).is_err());
        assert!(QubitState::new(BlochVector::new(1.0, 0.1, 0.0)).is_err());
        assert!(UnsharpObservable::new(0.5, BlochVector::Z * 0.6).is_err());
        assert!(UnsharpObservable::with_tolerance(0.5, BlochVector::Z * 0.6, 0.2).is_ok());
        assert!(ObservablePair::canonical(-0.1).is_err());
        assert!(ObservablePair::canonical(4.0).is_err());
    }

    #[test]
    fn canonical_pair_angle() {
        for theta in [0.0, 0.3, PI / 2.0, 2.5, PI] {
            let p = ObservablePair::canonical(theta).unwrap();
            assert!((p.theta() - theta).abs() < 1e-12);
            assert!((p.sin_theta() - theta.sin()).abs() < 1e-12);
            assert!((p.cos_theta() - theta.cos()).abs() < 1e-12);
        }
        let (red, flipped) = ObservablePair::canonical(2.5).unwrap().reduced();
        assert!(flipped);
        assert!((red.theta() - (PI - 2.5)).abs() < 1e-12);
    }

    #[test]
    fn outcome_algebra() {
        use Outcome::*;
        assert_eq!(Plus * Minus, Minus);
        assert_eq!(Minus * Minus, Plus);
        assert_eq!(-Plus, Minus);
        assert_eq!(Outcome::from_value(-1), Some(Minus));
        assert_eq!(Outcome::from_value(0), None);
    }

    #[test]
    fn serde_shapes() {
        let v = BlochVector::new(1.0, 2.0, 3.0);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[1.0,2.0,3.0]");
        let back: BlochVector = serde_json::from_str("[1.0,2.0,3.0]").unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<SharpDirection>("[1.0,1.0,0.0]").is_err());
        assert_eq!(serde_json::to_string(&Outcome::Minus).unwrap(), "-1");
    }

    fn arb_vec(r: f64) -> impl Strategy<Value = BlochVector> {
        (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| BlochVector::new(x, y, z))
    }

    proptest! {
        #[test]
        fn probabilities_normalize(bias in -0.5f64..0.5, m in arb_vec(0.28), r in arb_vec(0.57)) {
            let obs = UnsharpObservable::new(bias, m).unwrap();
            let st = QubitState::new(r).unwrap();
            let total = obs.outcome_probability(&st, Outcome::Plus)
                + obs.outcome_probability(&st, Outcome::Minus);
            prop_assert!((total - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn psd_test_matches_matrix_eigenvalue(w in -2.0f64..2.0, v in arb_vec(1.5)) {
            let op = HermitianOp::new(w, v);
            let direct = min_eig_direct(&to_matrix(&op));
            prop_assert!((op.min_eigenvalue() - direct).abs() < 1e-12);
            prop_assert_eq!(op.is_psd(0.0), w >= v.norm());
        }

        #[test]
        fn conjugation_matches_matrix_product(
            kw in -2.0f64..2.0, kv in arb_vec(1.0), xw in -2.0f64..2.0, xv in arb_vec(1.0)
        ) {
            let k = HermitianOp::new(kw, kv);
            let x = HermitianOp::new(xw, xv);
            let km = to_matrix(&k);
            let direct = matmul(&matmul(&km, &to_matrix(&x)), &km);
            let ours = to_matrix(&x.conjugate_by(&k));
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((direct[i][j] - ours[i][j]).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn inv_sqrt_whitens(w in 1.0f64..3.0, v in arb_vec(0.55)) {
            let s = HermitianOp::new(w, v);
            let k = s.inv_sqrt().unwrap();
            let id = s.conjugate_by(&k);
            prop_assert!((id.w - 2.0).abs() < 1e-12);
            prop_assert!(id.v.norm() < 1e-12);
        }
    }
}
