//! Brute-force checks that do not go through the closed forms they verify.
//!
//! - [`oracle_worst_case_error`] maximizes the outcome-distribution distance over pure states.
//! - [`povm_region_search`] samples arbitrary four-outcome POVMs, scores their marginal errors
//!   against every linear bound, then refines toward points of the optimal curve.
//! - [`envelope_crosscheck`] intersects neighbouring bound lines and compares the resulting
//!   envelope with the curve.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    check_theta, BlochVector, HermitianOp, ObservablePair, Outcome, QubitState, SharpDirection,
    UnsharpObservable,
};
use crate::error::{Error, Result};
use crate::povm::Povm4;
use crate::tradeoff::{bound_rhs, curve_errors, BoundFamily, ErrorPair, CLASSIFY_GRID};

/// `n` nearly uniform points on the unit sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<BlochVector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            BlochVector::new(rho * c, rho * s, z)
        })
        .collect()
}

/// ℓ1 distance between the outcome distributions of the sharp and the unsharp observable.
fn distribution_distance(
    sharp: &UnsharpObservable,
    approx: &UnsharpObservable,
    r: BlochVector,
) -> f64 {
    let st = QubitState { r };
    Outcome::ALL
        .iter()
        .map(|&o| (sharp.outcome_probability(&st, o) - approx.outcome_probability(&st, o)).abs())
        .sum()
}

fn tangent_basis(r: &BlochVector) -> (BlochVector, BlochVector) {
    let helper = if r.x.abs() < 0.9 {
        BlochVector::X
    } else {
        BlochVector::Y
    };
    let u = r.cross(&helper).normalized().unwrap_or(BlochVector::Z);
    let v = r.cross(&u);
    (u, v)
}

/// Largest distance between the sharp and unsharp outcome distributions over pure states:
/// a Fibonacci grid of `n_grid` states followed by a shrinking-step local ascent on the
/// sphere from the best few grid points.
pub fn oracle_worst_case_error(
    target: &SharpDirection,
    approx: &UnsharpObservable,
    n_grid: usize,
) -> Result<f64> {
    if n_grid < 100 {
        return Err(Error::InfeasibleConfig(format!(
            "state grid of {n_grid} points, need at least 100"
        )));
    }
    let sharp = UnsharpObservable::sharp(*target);
    let f = |r: BlochVector| distribution_distance(&sharp, approx, r);

    let mut scored: Vec<(f64, BlochVector)> = fibonacci_sphere(n_grid)
        .into_iter()
        .map(|r| (f(r), r))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    let spacing = (4.0 * PI / n_grid as f64).sqrt();
    let mut best = scored[0].0;
    for &(start_val, start) in scored.iter().take(4) {
        let (mut r, mut val) = (start, start_val);
        let mut step = spacing;
        while step > 1e-10 {
            let (u, v) = tangent_basis(&r);
            let mut moved = false;
            for (du, dv) in [
                (1.0, 0.0),
                (-1.0, 0.0),
                (0.0, 1.0),
                (0.0, -1.0),
                (1.0, 1.0),
                (1.0, -1.0),
                (-1.0, 1.0),
                (-1.0, -1.0),
            ] {
                let cand = (r + u * (du * step) + v * (dv * step))
                    .normalized()
                    .unwrap_or(r);
                let cv = f(cand);
                if cv > val {
                    r = cand;
                    val = cv;
                    moved = true;
                    break;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Random POVMs to sample and score.
    pub n_random: usize,
    /// Pattern-search polls per refinement run, shared across the smoothing stages.
    pub n_refine: usize,
    pub seed: u64,
    /// Gap below `−tolerance` counts as a violation.
    pub tolerance: f64,
}

impl SearchConfig {
    pub fn quick(seed: u64) -> Self {
        Self {
            n_random: 10_000,
            n_refine: 200,
            seed,
            tolerance: 1e-9,
        }
    }

    pub fn full(seed: u64) -> Self {
        Self {
            n_random: 100_000,
            ..Self::quick(seed)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_random == 0 || self.n_refine == 0 {
            return Err(Error::InfeasibleConfig("counts must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InfeasibleConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Best refined POVM for one target point of the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestPair {
    pub target_phi: f64,
    /// `(E_a, E_b)` at `target_phi`.
    pub curve: ErrorPair,
    pub found: ErrorPair,
    /// `max(ε_a − E_a, ε_b − E_b)`: at most `δ` iff the found pair dominates the curve
    /// point up to `δ` in each coordinate.
    pub excess: f64,
    pub povm: Povm4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub theta: f64,
    pub config: SearchConfig,
    /// POVMs scored, random and refined.
    pub scored: usize,
    /// Draws discarded because the normalizing operator was near singular.
    pub rejected: usize,
    /// Scored POVMs failing the positivity/completeness check. Always expected to be 0.
    pub invalid: usize,
    /// Smallest bound gap seen over all scored POVMs.
    pub min_gap: f64,
    pub violations: usize,
    /// Up to 16 violating pairs, for diagnosis.
    pub violating_pairs: Vec<ErrorPair>,
    pub best_pairs: Vec<BestPair>,
    /// Largest `excess` over `best_pairs`.
    pub max_excess: f64,
}

/// Curve targets used for the attainability part of the search.
pub const TARGETS: usize = 9;
const STARTS_PER_TARGET: usize = 4;
const CHUNK: usize = 4096;
const RANDOM_DIRECTIONS: usize = 256;
const MAX_REPORTED_VIOLATIONS: usize = 16;

/// Unnormalized POVM parameters: element `k` is `G_k = (|v_k| + t_k²) I + v_k·σ` (in `(w, v)`
/// form), always positive. The POVM is `M_k = S^{-1/2} G_k S^{-1/2}` with `S = Σ G_k`, which
/// reaches every four-outcome POVM and is valid whenever `S` is invertible.
type Params = [f64; 16];

fn povm_from_params(p: &Params) -> Option<Povm4> {
    let gens: [HermitianOp; 4] = std::array::from_fn(|k| {
        let v = BlochVector::new(p[4 * k], p[4 * k + 1], p[4 * k + 2]);
        HermitianOp::new(v.norm() + p[4 * k + 3] * p[4 * k + 3], v)
    });
    let total: HermitianOp = gens.iter().copied().sum();
    if total.min_eigenvalue() < 1e-3 * total.w {
        return None;
    }
    let k = total.inv_sqrt()?;
    Some(Povm4::from_fn_unchecked(|mu, nu| {
        gens[mu.index() * 2 + nu.index()].conjugate_by(&k)
    }))
}

fn random_params(rng: &mut ChaCha8Rng) -> Params {
    let mut p = [0.0; 16];
    for k in 0..4 {
        let roll: f64 = rng.gen();
        if roll < 0.1 {
            continue; // zero element
        }
        let z: f64 = rng.gen_range(-1.0..1.0);
        let az: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).sqrt();
        let len: f64 = rng.gen();
        p[4 * k] = len * rho * az.cos();
        p[4 * k + 1] = len * rho * az.sin();
        p[4 * k + 2] = len * z;
        // half the elements rank one
        p[4 * k + 3] = if roll < 0.55 { 0.0 } else { rng.gen() };
    }
    p
}

/// Worst-case errors of the marginals of any POVM against `pair`.
pub fn score_povm(pair: &ObservablePair, povm: &Povm4) -> ErrorPair {
    povm.errors(pair)
}

fn is_valid(povm: &Povm4) -> bool {
    Povm4::new(*povm.elements()).is_ok()
}

fn excess(found: &ErrorPair, curve: (f64, f64)) -> f64 {
    (found.eps_a - curve.0).max(found.eps_b - curve.1)
}

#[derive(Default)]
struct Tally {
    scored: usize,
    rejected: usize,
    invalid: usize,
    min_gap: f64,
    violations: usize,
    violating_pairs: Vec<ErrorPair>,
}

impl Tally {
    fn new() -> Self {
        Self {
            min_gap: f64::INFINITY,
            ..Self::default()
        }
    }

    fn score(&mut self, family: &BoundFamily, tol: f64, povm: &Povm4, errs: &ErrorPair) {
        self.scored += 1;
        if !is_valid(povm) {
            self.invalid += 1;
            return;
        }
        let (_, gap) = family.min_gap(errs.eps_a, errs.eps_b);
        self.min_gap = self.min_gap.min(gap);
        if gap < -tol {
            self.violations += 1;
            if self.violating_pairs.len() < MAX_REPORTED_VIOLATIONS {
                self.violating_pairs.push(*errs);
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.scored += other.scored;
        self.rejected += other.rejected;
        self.invalid += other.invalid;
        self.min_gap = self.min_gap.min(other.min_gap);
        self.violations += other.violations;
        for p in other.violating_pairs {
            if self.violating_pairs.len() < MAX_REPORTED_VIOLATIONS {
                self.violating_pairs.push(p);
            }
        }
        self
    }
}

/// Per-target shortlist of `(objective, params)`.
type Shortlist = Vec<Vec<(f64, Params)>>;

fn push_candidate(list: &mut Vec<(f64, Params)>, obj: f64, p: Params) {
    if list.len() == STARTS_PER_TARGET && list.last().is_some_and(|last| obj >= last.0) {
        return;
    }
    let pos = list.partition_point(|(o, _)| *o <= obj);
    list.insert(pos, (obj, p));
    list.truncate(STARTS_PER_TARGET);
}

fn target_phis() -> Vec<f64> {
    (0..TARGETS)
        .map(|i| FRAC_PI_2 * i as f64 / (TARGETS - 1) as f64)
        .collect()
}

/// Smoothing widths for the refinement stages, coarse to exact.
const SMOOTHING: &[f64] = &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0];

/// `√(x² + w²) − w`, a smooth stand-in for `|x|` that is exact at `w = 0`.
fn soft_abs(x: f64, width: f64) -> f64 {
    if width == 0.0 {
        x.abs()
    } else {
        x.hypot(width) - width
    }
}

/// [`excess`] with `|·|` and `max` replaced by smooth approximations of the given width.
fn smoothed_excess(pair: &ObservablePair, povm: &Povm4, target: (f64, f64), width: f64) -> f64 {
    let mg = povm.marginals();
    let da = soft_abs(mg.a_marginal.bias, width)
        + soft_abs((pair.a.vector() - mg.a_marginal.vector).norm(), width)
        - target.0;
    let db = soft_abs(mg.b_marginal.bias, width)
        + soft_abs((pair.b.vector() - mg.b_marginal.vector).norm(), width)
        - target.1;
    let hi = da.max(db);
    if width == 0.0 {
        hi
    } else {
        hi + width * (((da - hi) / width).exp() + ((db - hi) / width).exp()).ln()
    }
}

/// Derivative-free compass search on `objective` starting at `start` with the given step.
/// Each poll tries the 32 signed coordinate moves and `RANDOM_DIRECTIONS` random unit
/// directions; the step grows after a successful poll and halves after a failed one.
/// Returns the final point and step.
fn pattern_search(
    objective: impl Fn(&Params) -> f64,
    start: Params,
    mut step: f64,
    iterations: usize,
    rng: &mut ChaCha8Rng,
) -> (Params, f64) {
    let (mut x, mut fx) = (start, objective(&start));
    for _ in 0..iterations {
        let mut improved = false;
        for trial in 0..32 + RANDOM_DIRECTIONS {
            let mut dir = [0.0; 16];
            if trial < 32 {
                dir[trial / 2] = if trial % 2 == 0 { 1.0 } else { -1.0 };
            } else {
                let mut norm: f64 = 0.0;
                for d in dir.iter_mut() {
                    *d = rng.gen_range(-1.0..1.0);
                    norm += *d * *d;
                }
                let norm = norm.sqrt();
                dir.iter_mut().for_each(|d| *d /= norm);
            }
            let mut cand = x;
            for (c, d) in cand.iter_mut().zip(dir) {
                *c += step * d;
            }
            let fc = objective(&cand);
            if fc < fx {
                x = cand;
                fx = fc;
                improved = true;
            }
        }
        if improved {
            step = (step * 1.5).min(0.5);
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    (x, step)
}

/// Randomized search over four-outcome POVMs for pairs that break a linear bound, followed
/// by refinement toward `TARGETS` evenly spaced points of the optimal curve.
///
/// Sampling is split into chunks of 4096 draws; chunk `k` uses ChaCha8 keyed by `seed` on
/// stream `k`, so the report does not depend on thread scheduling.
pub fn povm_region_search(theta: f64, config: &SearchConfig) -> Result<SearchReport> {
    config.validate()?;
    check_theta(theta)?;
    if theta <= 0.0 || theta > FRAC_PI_2 {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
            lo: 0.0,
            hi: FRAC_PI_2,
        });
    }
    let pair = ObservablePair::canonical(theta)?;
    let family = BoundFamily::new(theta, CLASSIFY_GRID)?;
    let phis = target_phis();
    let curve: Vec<(f64, f64)> = phis.iter().map(|&p| curve_errors(theta.sin(), p)).collect();
    let tol = config.tolerance;

    let n_chunks = config.n_random.div_ceil(CHUNK);
    let chunks: Vec<(Tally, Shortlist)> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(ci as u64);
            let mut tally = Tally::new();
            let mut shortlist: Shortlist = vec![Vec::new(); TARGETS];
            let len = (config.n_random - ci * CHUNK).min(CHUNK);
            let mut drawn = 0;
            while drawn < len {
                let p = random_params(&mut rng);
                let Some(povm) = povm_from_params(&p) else {
                    tally.rejected += 1;
                    continue;
                };
                drawn += 1;
                let errs = score_povm(&pair, &povm);
                tally.score(&family, tol, &povm, &errs);
                for (t, list) in shortlist.iter_mut().enumerate() {
                    push_candidate(list, excess(&errs, curve[t]), p);
                }
            }
            (tally, shortlist)
        })
        .collect();

    let mut tally = Tally::new();
    let mut shortlist: Shortlist = vec![Vec::new(); TARGETS];
    for (t, s) in chunks {
        tally = tally.merge(t);
        for (list, cand) in shortlist.iter_mut().zip(s) {
            for (obj, p) in cand {
                push_candidate(list, obj, p);
            }
        }
    }

    let refined: Vec<(Tally, BestPair)> = (0..TARGETS)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((1u64 << 40) + t as u64);
            let target = curve[t];
            let mut local = Tally::new();
            let mut best: Option<(f64, Params)> = None;
            for &(_, start) in &shortlist[t] {
                let mut x = start;
                let mut step = 0.05;
                let per_stage = (config.n_refine / SMOOTHING.len()).max(1);
                for &width in SMOOTHING {
                    let objective = |p: &Params| match povm_from_params(p) {
                        Some(povm) => smoothed_excess(&pair, &povm, target, width),
                        None => f64::INFINITY,
                    };
                    (x, step) = pattern_search(objective, x, step, per_stage, &mut rng);
                    step = (step * 4.0).min(0.05);
                }
                let Some(povm) = povm_from_params(&x) else {
                    continue;
                };
                let errs = score_povm(&pair, &povm);
                local.score(&family, tol, &povm, &errs);
                let fx = excess(&errs, target);
                if best.map_or(true, |(b, _)| fx < b) {
                    best = Some((fx, x));
                }
            }
            let (_, x) = best.expect("at least one start per target");
            let povm = povm_from_params(&x).expect("finite objective implies a valid POVM");
            let found = score_povm(&pair, &povm);
            let fx = excess(&found, target);
            let bp = BestPair {
                target_phi: phis[t],
                curve: ErrorPair {
                    eps_a: target.0,
                    eps_b: target.1,
                },
                found,
                excess: fx,
                povm,
            };
            (local, bp)
        })
        .collect();

    let mut best_pairs = Vec::with_capacity(TARGETS);
    for (t, bp) in refined {
        tally = tally.merge(t);
        best_pairs.push(bp);
    }
    let max_excess = best_pairs
        .iter()
        .map(|b| b.excess)
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(SearchReport {
        theta,
        config: *config,
        scored: tally.scored,
        rejected: tally.rejected,
        invalid: tally.invalid,
        min_gap: tally.min_gap,
        violations: tally.violations,
        violating_pairs: tally.violating_pairs,
        best_pairs,
        max_excess,
    })
}

/// Envelope of the bound lines `ε_a sin φ + ε_b cos φ = rhs(φ)`, approximated by intersecting
/// neighbours on an `n_grid` grid. Returns the largest distance from an intersection to the
/// curve point at the midpoint angle.
pub fn envelope_crosscheck(theta: f64, n_grid: usize) -> Result<f64> {
    check_theta(theta)?;
    if n_grid < 100 {
        return Err(Error::InfeasibleConfig(format!(
            "envelope grid of {n_grid} lines, need at least 100"
        )));
    }
    let s = theta.sin();
    let phi = |i: usize| FRAC_PI_2 * i as f64 / (n_grid - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 0..n_grid - 1 {
        let (p1, p2) = (phi(i), phi(i + 1));
        let (s1, c1) = p1.sin_cos();
        let (s2, c2) = p2.sin_cos();
        let (r1, r2) = (bound_rhs(s, p1), bound_rhs(s, p2));
        // Solve [s1 c1; s2 c2] (x, y) = (r1, r2).
        let det = s1 * c2 - c1 * s2;
        let x = (r1 * c2 - c1 * r2) / det;
        let y = (s1 * r2 - r1 * s2) / det;
        let (ea, eb) = curve_errors(s, 0.5 * (p1 + p2));
        worst = worst.max((x - ea).hypot(y - eb));
    }
    Ok(worst)
}
