//! Ancilla-free realization of the optimal POVM and its Monte Carlo simulation.
//!
//! Every boundary POVM factors as
//!
//! ```text
//! M_μν = (1 + μν c)/2 · (I + μ L_{μν}·σ)/2,     L_± = (m ± n)/|m ± n|
//! ```
//!
//! so it can be run by picking `s = ±1` with probability `P_s = (1 + s c)/2` and measuring the
//! sharp observable `L_s`. A shot `(s, μ)` is recorded as the four-outcome label
//! `(μ, ν) = (μ, s·μ)`: the projective outcome is the `A` answer, and agreement of that outcome
//! with the chosen label `s` is the `B` answer. Swapping this convention silently exchanges the
//! two error estimates.

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    maximizing_state, BlochVector, HermitianOp, ObservablePair, Outcome, QubitState,
    SharpDirection, UnsharpObservable,
};
use crate::error::{invalid, Error, Result};
use crate::povm::{optimal_construction, Povm4, LABELS};
use crate::tradeoff::TradeoffPoint;

/// Reconstruction residual above which a POVM is not considered decomposable.
pub const DECOMPOSE_TOL: f64 = 1e-9;

/// Shots per RNG stream. Batch `k` of a run with seed `s` draws from ChaCha8 keyed by `s` on
/// stream `k`, so batches can be generated in any order or in parallel.
pub const BATCH: usize = 1 << 16;

/// Stream offset for the second input state in [`simulate`].
const B_STATE_STREAM: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EconomicProtocol {
    pub c: f64,
    pub l_plus: SharpDirection,
    pub l_minus: SharpDirection,
    pub p_plus: f64,
    pub p_minus: f64,
}

impl EconomicProtocol {
    pub fn direction(&self, s: Outcome) -> SharpDirection {
        match s {
            Outcome::Plus => self.l_plus,
            Outcome::Minus => self.l_minus,
        }
    }

    pub fn selection_probability(&self, s: Outcome) -> f64 {
        match s {
            Outcome::Plus => self.p_plus,
            Outcome::Minus => self.p_minus,
        }
    }

    /// `M_μν = P_{μν} (I + μ L_{μν}·σ)/2`.
    pub fn reassemble(&self) -> Povm4 {
        Povm4::from_fn_unchecked(|mu, nu| {
            let s = mu * nu;
            let p = self.selection_probability(s);
            HermitianOp::new(p, self.direction(s).vector() * (mu.sign() * p))
        })
    }

    /// Analytic `P(s, μ)`: probability of choosing `L_s` and then observing `μ`.
    pub fn joint_probability(&self, state: &QubitState, s: Outcome, mu: Outcome) -> f64 {
        let l = self.direction(s).vector();
        self.selection_probability(s) * (1.0 + mu.sign() * l.dot(&state.r)) / 2.0
    }
}

/// Splits a boundary POVM into two projective measurements chosen at random.
pub fn decompose(povm: &Povm4) -> Result<EconomicProtocol> {
    use Outcome::{Minus, Plus};
    let w = |mu, nu| povm.get(mu, nu).w;
    let c = (w(Plus, Plus) + w(Minus, Minus) - w(Plus, Minus) - w(Minus, Plus)) / 2.0;
    let m = povm.get(Plus, Plus).v + povm.get(Plus, Minus).v;
    let n = povm.get(Plus, Plus).v + povm.get(Minus, Plus).v;

    let fail = Error::DecompositionFailure {
        residual: f64::INFINITY,
    };
    if !(-1.0..=1.0).contains(&c) {
        return Err(fail);
    }
    let l_plus = SharpDirection::from_unnormalized(m + n).map_err(|_| fail.clone())?;
    let l_minus = SharpDirection::from_unnormalized(m - n).map_err(|_| fail.clone())?;
    let protocol = EconomicProtocol {
        c,
        l_plus,
        l_minus,
        p_plus: (1.0 + c) / 2.0,
        p_minus: (1.0 - c) / 2.0,
    };
    let residual = reconstruction_residual(povm, &protocol.reassemble());
    if residual > DECOMPOSE_TOL {
        return Err(Error::DecompositionFailure { residual });
    }
    Ok(protocol)
}

/// Largest coefficient difference between two POVMs.
pub fn reconstruction_residual(a: &Povm4, b: &Povm4) -> f64 {
    LABELS
        .iter()
        .map(|&(mu, nu)| {
            let d = a.get(mu, nu) - b.get(mu, nu);
            d.w.abs().max(d.v.x.abs()).max(d.v.y.abs()).max(d.v.z.abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    /// Which projective measurement `L_s` was chosen.
    pub s: Outcome,
    /// Its outcome.
    pub mu: Outcome,
}

impl ShotRecord {
    /// The four-outcome label `(μ, ν) = (μ, s·μ)`.
    pub fn label(&self) -> (Outcome, Outcome) {
        (self.mu, self.s * self.mu)
    }
}

/// Tally of shots, indexed `[s][μ]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub counts: [[u64; 2]; 2],
}

impl ShotCounts {
    pub fn record(&mut self, shot: ShotRecord) {
        self.counts[shot.s.index()][shot.mu.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, s: Outcome, mu: Outcome) -> u64 {
        self.counts[s.index()][mu.index()]
    }

    /// Shots with `μ = +`, whatever `L_s` was measured: the `A` marginal says `+`.
    pub fn a_plus(&self) -> u64 {
        self.get(Outcome::Plus, Outcome::Plus) + self.get(Outcome::Minus, Outcome::Plus)
    }

    /// Shots with `μ = s`: the `B` marginal says `+`.
    pub fn b_plus(&self) -> u64 {
        self.get(Outcome::Plus, Outcome::Plus) + self.get(Outcome::Minus, Outcome::Minus)
    }

    fn merge(mut self, other: Self) -> Self {
        for s in 0..2 {
            for mu in 0..2 {
                self.counts[s][mu] += other.counts[s][mu];
            }
        }
        self
    }
}

impl<'a> FromIterator<&'a ShotRecord> for ShotCounts {
    fn from_iter<I: IntoIterator<Item = &'a ShotRecord>>(iter: I) -> Self {
        let mut c = ShotCounts::default();
        for r in iter {
            c.record(*r);
        }
        c
    }
}

fn batch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, thresholds: &[f64; 3]) -> ShotRecord {
    // thresholds = [P_+, Pr(μ=+ | L_+), Pr(μ=+ | L_-)]
    let s = Outcome::from_bool(rng.gen::<f64>() < thresholds[0]);
    let p_up = if s == Outcome::Plus {
        thresholds[1]
    } else {
        thresholds[2]
    };
    let mu = Outcome::from_bool(rng.gen::<f64>() < p_up);
    ShotRecord { s, mu }
}

fn thresholds(protocol: &EconomicProtocol, state: &QubitState) -> [f64; 3] {
    let born = |l: SharpDirection| (1.0 + l.vector().dot(&state.r)) / 2.0;
    [
        protocol.p_plus,
        born(protocol.l_plus),
        born(protocol.l_minus),
    ]
}

fn batch_len(n: usize, k: usize) -> usize {
    (n - k * BATCH).min(BATCH)
}

fn check_shots(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("shot count", "need at least one shot"));
    }
    Ok(())
}

fn shots_on(
    protocol: &EconomicProtocol,
    state: &QubitState,
    n: usize,
    seed: u64,
    stream_base: u64,
) -> Vec<ShotRecord> {
    let th = thresholds(protocol, state);
    let mut out = Vec::with_capacity(n);
    for k in 0..n.div_ceil(BATCH) {
        let mut rng = batch_rng(seed, stream_base + k as u64);
        out.extend((0..batch_len(n, k)).map(|_| draw(&mut rng, &th)));
    }
    out
}

fn counts_on(
    protocol: &EconomicProtocol,
    state: &QubitState,
    n: usize,
    seed: u64,
    stream_base: u64,
) -> ShotCounts {
    let th = thresholds(protocol, state);
    (0..n.div_ceil(BATCH))
        .into_par_iter()
        .map(|k| {
            let mut rng = batch_rng(seed, stream_base + k as u64);
            let mut c = ShotCounts::default();
            for _ in 0..batch_len(n, k) {
                c.record(draw(&mut rng, &th));
            }
            c
        })
        .reduce(ShotCounts::default, ShotCounts::merge)
}

/// `n` i.i.d. shots of the protocol on `state`, in order. Deterministic in `seed`.
pub fn sample_shots(
    protocol: &EconomicProtocol,
    state: &QubitState,
    n: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    check_shots(n)?;
    Ok(shots_on(protocol, state, n, seed, 0))
}

/// Same draws as [`sample_shots`], tallied in parallel without materializing the records.
pub fn sample_counts(
    protocol: &EconomicProtocol,
    state: &QubitState,
    n: usize,
    seed: u64,
) -> Result<ShotCounts> {
    check_shots(n)?;
    Ok(counts_on(protocol, state, n, seed, 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_shots: u64,
}

impl ErrorEstimate {
    /// Signed distance from `reference` in standard errors.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference) / self.std_error
    }

    /// `2 (p_sharp − k/n)`, the worst-case error read off from `k` marginal `+` outcomes in
    /// `n` shots when the sharp `+` probability in the same state is `p_sharp`.
    fn from_marginal(p_sharp: f64, k: u64, n: u64) -> Self {
        let nf = n as f64;
        let p_hat = k as f64 / nf;
        // Continuity-adjusted proportion keeps the binomial error positive at k = 0 or k = n.
        let p_adj = (k as f64 + 0.5) / (nf + 1.0);
        Self {
            value: 2.0 * (p_sharp - p_hat),
            std_error: 2.0 * (p_adj * (1.0 - p_adj) / nf).sqrt(),
            n_shots: n,
        }
    }
}

/// The two input states of the error experiment: `r ∝ a − m` and `r ∝ b − n`.
pub fn estimator_states(
    pair: &ObservablePair,
    m: &BlochVector,
    n: &BlochVector,
) -> (QubitState, QubitState) {
    (
        maximizing_state(&pair.a, &UnsharpObservable::new_unchecked(0.0, *m)),
        maximizing_state(&pair.b, &UnsharpObservable::new_unchecked(0.0, *n)),
    )
}

/// Plug-in estimates of `(E_a, E_b)`.
///
/// `counts_a` must come from the state along `a − m` and `counts_b` from the state along
/// `b − n` (see [`estimator_states`]). The sharp probabilities `P(+|A)`, `P(+|B)` are taken
/// analytically in those states.
pub fn estimate_errors(
    counts_a: &ShotCounts,
    counts_b: &ShotCounts,
    pair: &ObservablePair,
    marginal_vectors: (&BlochVector, &BlochVector),
) -> Result<(ErrorEstimate, ErrorEstimate)> {
    let (na, nb) = (counts_a.total(), counts_b.total());
    if na == 0 || nb == 0 {
        return Err(Error::InsufficientData("empty shot stream"));
    }
    let (m, n) = marginal_vectors;
    let (state_a, state_b) = estimator_states(pair, m, n);
    let sharp_a = UnsharpObservable::sharp(pair.a).outcome_probability(&state_a, Outcome::Plus);
    let sharp_b = UnsharpObservable::sharp(pair.b).outcome_probability(&state_b, Outcome::Plus);
    Ok((
        ErrorEstimate::from_marginal(sharp_a, counts_a.a_plus(), na),
        ErrorEstimate::from_marginal(sharp_b, counts_b.b_plus(), nb),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub theta: f64,
    pub phi: f64,
    pub shots: u64,
    pub seed: u64,
    pub analytic: TradeoffPoint,
    pub protocol: EconomicProtocol,
    pub estimate_a: ErrorEstimate,
    pub estimate_b: ErrorEstimate,
    pub z_a: f64,
    pub z_b: f64,
}

/// End-to-end experiment: build the optimal POVM at `phi`, split it into projective
/// measurements, sample `shots` runs in each of the two worst-case states and estimate both
/// errors. The `b − n` state uses RNG streams offset by `2^32` from the `a − m` state.
pub fn simulate(
    pair: &ObservablePair,
    phi: f64,
    shots: usize,
    seed: u64,
) -> Result<SimulationReport> {
    check_shots(shots)?;
    let k = optimal_construction(pair, phi)?;
    let protocol = decompose(&k.povm)?;
    let (state_a, state_b) = estimator_states(pair, &k.m, &k.n);
    let counts_a = counts_on(&protocol, &state_a, shots, seed, 0);
    let counts_b = counts_on(&protocol, &state_b, shots, seed, B_STATE_STREAM);
    let (estimate_a, estimate_b) = estimate_errors(&counts_a, &counts_b, pair, (&k.m, &k.n))?;
    Ok(SimulationReport {
        theta: pair.theta(),
        phi: k.point.phi,
        shots: shots as u64,
        seed,
        analytic: k.point,
        protocol,
        z_a: estimate_a.z_score(k.point.e_a),
        z_b: estimate_b.z_score(k.point.e_b),
        estimate_a,
        estimate_b,
    })
}

/// The raw shot streams behind [`simulate`] with the same arguments: first the `a − m` state,
/// then the `b − n` state.
pub fn simulate_shots(
    pair: &ObservablePair,
    phi: f64,
    shots: usize,
    seed: u64,
) -> Result<(Vec<ShotRecord>, Vec<ShotRecord>)> {
    check_shots(shots)?;
    let k = optimal_construction(pair, phi)?;
    let protocol = decompose(&k.povm)?;
    let (state_a, state_b) = estimator_states(pair, &k.m, &k.n);
    Ok((
        shots_on(&protocol, &state_a, shots, seed, 0),
        shots_on(&protocol, &state_b, shots, seed, B_STATE_STREAM),
    ))
}

/// One CSV row of a shot stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRow {
    pub seed: u64,
    pub index: u64,
    pub s: i8,
    pub mu: i8,
}

/// Writes `seed,index,s,mu` rows with a header.
pub fn write_shots_csv<W: io::Write>(
    writer: W,
    seed: u64,
    shots: &[ShotRecord],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, r) in shots.iter().enumerate() {
        w.serialize(ShotRow {
            seed,
            index: i as u64,
            s: r.s.value(),
            mu: r.mu.value(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shots_csv<R: io::Read>(reader: R) -> Result<Vec<ShotRow>> {
    let mut rd = csv::Reader::from_reader(reader);
    rd.deserialize()
        .map(|row| {
            let row: ShotRow = row.map_err(|e| invalid("shot CSV", e.to_string()))?;
            if Outcome::from_value(row.s.into()).is_none()
                || Outcome::from_value(row.mu.into()).is_none()
            {
                return Err(invalid("shot CSV", "s and mu must be +1 or -1"));
            }
            Ok(row)
        })
        .collect()
}
