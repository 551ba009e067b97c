use std::f64::consts::{FRAC_PI_2, PI};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use jointmeas::oracle::envelope_crosscheck;
use jointmeas::povm::joint_measurability_h;
use jointmeas::protocol::{reconstruction_residual, write_shots_csv};
use jointmeas::tradeoff::{curve, SIN_THETA_CUTOFF};
use jointmeas::{
    classify, commuting_povm, decompose, optimal_construction, optimal_point, phi_for_error_a,
    povm_region_search, score_povm, simulate, simulate_shots, tangency_residuals, BlochVector,
    Classification, EconomicProtocol, Error, ErrorPair, MarginalPair, ObservablePair, Outcome,
    Povm4, Region, SearchConfig, SearchReport, SharpDirection, SimulationReport, TradeoffPoint,
    TOL,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    ClassifyArgs, Cli, Command, ConstructArgs, CurveArgs, Format, Preset, SimulateArgs, VerifyArgs,
};
use crate::output::{sci, write_json, CsvTable, OutputRecord, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(
                Error::Invalid { .. }
                | Error::OutOfRange { .. }
                | Error::DegenerateCommuting { .. },
            ) => 2,
            _ => 1,
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Forbidden,
    Violations,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Forbidden => 3,
            Status::Violations => 4,
        }
    }
}

type CmdResult = Result<Status, CliError>;

pub fn run(cli: Cli, out: impl Write) -> CmdResult {
    let ctx = Ctx {
        format: cli.format,
        degrees: cli.degrees,
    };
    match cli.command {
        Command::Curve(a) => cmd_curve(&ctx, a, out),
        Command::Classify(a) => cmd_classify(&ctx, a, out),
        Command::Construct(a) => cmd_construct(&ctx, a, out),
        Command::Simulate(a) => cmd_simulate(&ctx, a, out),
        Command::Verify(a) => cmd_verify(&ctx, a, out),
    }
}

struct Ctx {
    format: Format,
    degrees: bool,
}

impl Ctx {
    fn angle(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }

    /// Converts and range-checks `θ ∈ [0, π]`.
    fn theta(&self, x: f64) -> Result<f64, CliError> {
        let t = self.angle(x);
        if !t.is_finite() || !(0.0..=PI).contains(&t) {
            return Err(CliError::Usage(format!(
                "--theta must lie in [0, pi] radians, got {t}"
            )));
        }
        Ok(t)
    }

    /// Like [`Ctx::theta`] but also rejects commuting pairs, where no tradeoff exists.
    fn noncommuting_theta(&self, x: f64) -> Result<f64, CliError> {
        let t = self.theta(x)?;
        if t.sin() < SIN_THETA_CUTOFF {
            return Err(commuting_usage(t));
        }
        Ok(t)
    }

    fn phi(&self, x: f64) -> Result<f64, CliError> {
        let p = self.angle(x);
        if !p.is_finite() || !(-TOL..=FRAC_PI_2 + TOL).contains(&p) {
            return Err(CliError::Usage(format!(
                "--phi must lie in [0, pi/2] radians, got {p}"
            )));
        }
        Ok(p.clamp(0.0, FRAC_PI_2))
    }

    fn emit<I: Serialize, P: Serialize>(
        &self,
        out: impl Write,
        command: &str,
        inputs: I,
        payload: P,
        table: impl FnOnce(&P) -> CsvTable,
    ) -> io::Result<()> {
        match self.format {
            Format::Json => write_json(
                out,
                &OutputRecord {
                    schema_version: SCHEMA_VERSION,
                    command,
                    inputs,
                    payload,
                },
            ),
            Format::Csv => table(&payload).write(out),
        }
    }
}

fn commuting_usage(theta: f64) -> CliError {
    CliError::Usage(format!(
        "sin(theta) = {:e} is below the cutoff {SIN_THETA_CUTOFF:e}: the observables commute \
         and can be measured jointly without error (see `construct --eps-a` for the commuting \
         construction)",
        theta.sin()
    ))
}

// ---------------------------------------------------------------------------------------

#[derive(Serialize)]
struct CurveInputs {
    theta: f64,
    points: usize,
}

#[derive(Serialize)]
struct CurvePayload {
    points: Vec<TradeoffPoint>,
}

fn cmd_curve(ctx: &Ctx, a: CurveArgs, out: impl Write) -> CmdResult {
    let theta = ctx.noncommuting_theta(a.theta)?;
    if a.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let points = curve(theta, a.points)?;
    let inputs = CurveInputs {
        theta,
        points: a.points,
    };
    ctx.emit(out, "curve", inputs, CurvePayload { points }, |p| {
        let mut t = CsvTable::new("curve", &["phi", "e_a", "e_b", "c"]);
        for q in &p.points {
            t.push(vec![sci(q.phi), sci(q.e_a), sci(q.e_b), sci(q.c)]);
        }
        t
    })?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------------------

#[derive(Serialize)]
struct ClassifyInputs {
    theta: f64,
    eps_a: f64,
    eps_b: f64,
}

#[derive(Serialize)]
struct ClassifyPayload {
    #[serde(flatten)]
    classification: Classification,
    /// Curve point at the witness angle, when the pair is not commuting.
    witness_point: Option<TradeoffPoint>,
}

fn cmd_classify(ctx: &Ctx, a: ClassifyArgs, out: impl Write) -> CmdResult {
    let theta = ctx.theta(a.theta)?;
    let pair = ErrorPair::new(a.eps_a, a.eps_b)?;
    let classification = classify(theta, &pair)?;
    let witness_point = optimal_point(theta, classification.witness_phi).ok();
    let status = match classification.region {
        Region::Forbidden => Status::Forbidden,
        _ => Status::Ok,
    };
    let inputs = ClassifyInputs {
        theta,
        eps_a: a.eps_a,
        eps_b: a.eps_b,
    };
    let payload = ClassifyPayload {
        classification,
        witness_point,
    };
    ctx.emit(out, "classify", inputs, payload, |p| {
        let mut t = CsvTable::new("classify", &["region", "witness_phi", "min_gap"]);
        let c = &p.classification;
        t.push(vec![
            region_name(c.region).into(),
            sci(c.witness_phi),
            sci(c.min_gap),
        ]);
        t
    })?;
    Ok(status)
}

fn region_name(r: Region) -> &'static str {
    match r {
        Region::Forbidden => "forbidden",
        Region::Boundary => "boundary",
        Region::Interior => "interior",
    }
}

// ---------------------------------------------------------------------------------------

#[derive(Serialize)]
struct ConstructInputs {
    theta: f64,
    phi: Option<f64>,
    eps_a: Option<f64>,
    eps_b: Option<f64>,
    a_dir: BlochVector,
    b_dir: BlochVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Boundary,
    Commuting,
}

#[derive(Serialize)]
struct Checks {
    min_eigenvalue: f64,
    completeness_residual: f64,
    /// `max(|x|, |y|)` of the two marginal biases; only required to vanish on the boundary.
    marginal_bias: f64,
    /// Distance between the scored errors and the requested ones.
    error_residual: f64,
    /// Largest residual of `m·n = c`, `|m ± n| = 1 ± c`, `h(m, n) = 2`, the tangency dot
    /// product and coplanarity. Boundary constructions only.
    identity_residual: Option<f64>,
    decomposition_residual: Option<f64>,
    all_pass: bool,
}

#[derive(Serialize)]
struct ConstructPayload {
    method: Method,
    pair: ObservablePair,
    theta: f64,
    phi: Option<f64>,
    point: Option<TradeoffPoint>,
    /// `(M++ + M-- − M+- − M-+)` weight difference over 2; equals `c` on the boundary.
    c: f64,
    elements: Povm4,
    marginals: MarginalPair,
    errors: ErrorPair,
    protocol: Option<EconomicProtocol>,
    checks: Checks,
}

fn construct_pair(ctx: &Ctx, a: &ConstructArgs) -> Result<(ObservablePair, f64), CliError> {
    match (a.a_dir, a.b_dir, a.theta) {
        (Some(ad), Some(bd), None) => {
            let pair = ObservablePair::new(
                SharpDirection::from_unnormalized(ad)?,
                SharpDirection::from_unnormalized(bd)?,
            );
            Ok((pair, pair.theta()))
        }
        (None, None, Some(t)) => {
            let theta = ctx.theta(t)?;
            Ok((ObservablePair::canonical(theta)?, theta))
        }
        (Some(_), Some(_), Some(_)) => Err(CliError::Usage(
            "give either --theta or --a-dir/--b-dir, not both".into(),
        )),
        _ => Err(CliError::Usage(
            "--theta is required unless both --a-dir and --b-dir are given".into(),
        )),
    }
}

fn cmd_construct(ctx: &Ctx, a: ConstructArgs, out: impl Write) -> CmdResult {
    let (pair, theta) = construct_pair(ctx, &a)?;
    let s = pair.sin_theta();
    let phi_in = a.phi.map(|p| ctx.phi(p)).transpose()?;

    let commuting = match (a.eps_a, a.eps_b) {
        (Some(_), Some(eb)) if eb != 0.0 => {
            return Err(CliError::Usage(
                "--eps-b is only accepted as 0 (error-free B via the commuting construction)"
                    .into(),
            ))
        }
        (Some(ea), Some(_)) => {
            if ea < s - TOL {
                return Err(CliError::Usage(format!(
                    "an error-free B needs --eps-a >= sin(theta) = {s}"
                )));
            }
            true
        }
        (Some(ea), None) => ea > s + TOL || s < SIN_THETA_CUTOFF,
        (None, _) => false,
    };
    if !commuting && s < SIN_THETA_CUTOFF {
        return Err(commuting_usage(theta));
    }

    let target_eps = a.eps_a;
    let (method, phi, point, m_n, povm) = if commuting {
        let eps_a = target_eps.expect("commuting route needs eps_a");
        let povm = commuting_povm(&pair, eps_a)?;
        (Method::Commuting, None, None, None, povm)
    } else {
        let phi = match (phi_in, target_eps) {
            (Some(p), _) => p,
            (None, Some(ea)) => phi_for_error_a(pair.reduced().0.theta(), ea)?,
            (None, None) => unreachable!("clap requires --phi or --eps-a"),
        };
        let k = optimal_construction(&pair, phi)?;
        (
            Method::Boundary,
            Some(k.point.phi),
            Some(k.point),
            Some((k.m, k.n)),
            k.povm,
        )
    };

    let marginals = povm.marginals();
    let errors = povm.errors(&pair);
    let w = |mu, nu| povm.get(mu, nu).w;
    let c = (w(Outcome::Plus, Outcome::Plus) + w(Outcome::Minus, Outcome::Minus)
        - w(Outcome::Plus, Outcome::Minus)
        - w(Outcome::Minus, Outcome::Plus))
        / 2.0;
    let protocol = decompose(&povm).ok();

    let expected = match point {
        Some(p) => (p.e_a, p.e_b),
        None => (target_eps.unwrap_or(0.0), 0.0),
    };
    let error_residual = (errors.eps_a - expected.0)
        .abs()
        .max((errors.eps_b - expected.1).abs());
    let marginal_bias = marginals
        .a_marginal
        .bias
        .abs()
        .max(marginals.b_marginal.bias.abs());
    let identity_residual = m_n.map(|(m, n)| {
        let t = tangency_residuals(&pair, &m, &n);
        [
            (m.dot(&n) - c).abs(),
            ((m + n).norm() - (1.0 + c)).abs(),
            ((m - n).norm() - (1.0 - c)).abs(),
            (joint_measurability_h(&m, &n) - 2.0).abs(),
            t.dot.abs(),
            t.coplanarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    });
    let decomposition_residual = protocol.map(|p| reconstruction_residual(&povm, &p.reassemble()));
    let all_pass = povm.min_eigenvalue() >= -1e-10
        && povm.completeness_residual() <= 1e-12
        && error_residual <= 1e-10
        && match method {
            Method::Boundary => {
                marginal_bias <= 1e-12
                    && identity_residual.is_some_and(|r| r <= 1e-10)
                    && decomposition_residual.is_some_and(|r| r <= 1e-12)
            }
            Method::Commuting => true,
        };
    let checks = Checks {
        min_eigenvalue: povm.min_eigenvalue(),
        completeness_residual: povm.completeness_residual(),
        marginal_bias,
        error_residual,
        identity_residual,
        decomposition_residual,
        all_pass,
    };

    let inputs = ConstructInputs {
        theta,
        phi: phi_in,
        eps_a: a.eps_a,
        eps_b: a.eps_b,
        a_dir: pair.a.vector(),
        b_dir: pair.b.vector(),
    };
    let payload = ConstructPayload {
        method,
        pair,
        theta,
        phi,
        point,
        c,
        elements: povm,
        marginals,
        errors,
        protocol,
        checks,
    };
    ctx.emit(out, "construct", inputs, payload, |p| {
        let mut t = CsvTable::new("construct", &["mu", "nu", "w", "v_x", "v_y", "v_z"]);
        for (mu, nu, e) in p.elements.iter() {
            t.push(vec![
                mu.value().to_string(),
                nu.value().to_string(),
                sci(e.w),
                sci(e.v.x),
                sci(e.v.y),
                sci(e.v.z),
            ]);
        }
        t
    })?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------------------------------

#[derive(Serialize)]
struct SimulateInputs {
    theta: f64,
    phi: f64,
    shots: usize,
    seed: u64,
}

fn cmd_simulate(ctx: &Ctx, a: SimulateArgs, out: impl Write) -> CmdResult {
    let theta = ctx.noncommuting_theta(a.theta)?;
    let phi = ctx.phi(a.phi)?;
    if a.shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    let pair = ObservablePair::canonical(theta)?;
    let report = simulate(&pair, phi, a.shots, a.seed)?;
    if let Some(prefix) = &a.shots_out {
        let (sa, sb) = simulate_shots(&pair, phi, a.shots, a.seed)?;
        for (suffix, shots) in [("_a.csv", &sa), ("_b.csv", &sb)] {
            let path = with_suffix(prefix, suffix);
            let file = File::create(&path).map_err(|source| CliError::File {
                path: path.clone(),
                source,
            })?;
            write_shots_csv(BufWriter::new(file), a.seed, shots).map_err(|e| CliError::File {
                path,
                source: io::Error::other(e),
            })?;
        }
    }
    let inputs = SimulateInputs {
        theta,
        phi,
        shots: a.shots,
        seed: a.seed,
    };
    ctx.emit(out, "simulate", inputs, report, |r: &SimulationReport| {
        let mut t = CsvTable::new(
            "simulate",
            &[
                "observable",
                "estimate",
                "std_error",
                "analytic",
                "z_score",
                "shots",
            ],
        );
        for (name, e, analytic, z) in [
            ("a", r.estimate_a, r.analytic.e_a, r.z_a),
            ("b", r.estimate_b, r.analytic.e_b, r.z_b),
        ] {
            t.push(vec![
                name.into(),
                sci(e.value),
                sci(e.std_error),
                sci(analytic),
                sci(z),
                e.n_shots.to_string(),
            ]);
        }
        t
    })?;
    Ok(Status::Ok)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

// ---------------------------------------------------------------------------------------

/// Envelope grid for the bound-family cross-check and its tolerance.
const ENVELOPE_GRID: usize = 10_000;
const ENVELOPE_TOL: f64 = 1e-6;

#[derive(Serialize)]
struct VerifyInputs {
    theta: Option<f64>,
    preset: &'static str,
    seed: u64,
    povm: Option<String>,
}

#[derive(Serialize)]
struct SearchPayload {
    search: SearchReport,
    envelope_residual: f64,
    envelope_tolerance: f64,
    attainability_tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ScorePayload {
    pair: ObservablePair,
    errors: ErrorPair,
    classification: Classification,
}

#[derive(Deserialize)]
struct PovmDocument {
    elements: Povm4,
    pair: Option<ObservablePair>,
}

fn cmd_verify(ctx: &Ctx, a: VerifyArgs, out: impl Write) -> CmdResult {
    let preset = match a.preset {
        Preset::Quick => "quick",
        Preset::Full => "full",
    };
    let theta = a.theta.map(|t| ctx.theta(t)).transpose()?;
    let inputs = VerifyInputs {
        theta,
        preset,
        seed: a.seed,
        povm: a.povm.as_ref().map(|p| p.display().to_string()),
    };
    match &a.povm {
        Some(path) => verify_povm(ctx, path, theta, inputs, out),
        None => verify_search(ctx, &a, theta.expect("clap requires --theta"), inputs, out),
    }
}

fn verify_search(
    ctx: &Ctx,
    a: &VerifyArgs,
    theta: f64,
    inputs: VerifyInputs,
    out: impl Write,
) -> CmdResult {
    let theta = theta.min(PI - theta);
    if theta.sin() < SIN_THETA_CUTOFF {
        return Err(commuting_usage(theta));
    }
    let (config, attain) = match a.preset {
        Preset::Quick => (SearchConfig::quick(a.seed), 1e-2),
        Preset::Full => (SearchConfig::full(a.seed), 1e-3),
    };
    let search = povm_region_search(theta, &config)?;
    let envelope_residual = envelope_crosscheck(theta, ENVELOPE_GRID)?;
    let pass = search.violations == 0
        && search.invalid == 0
        && search.max_excess <= attain
        && envelope_residual <= ENVELOPE_TOL;
    let payload = SearchPayload {
        search,
        envelope_residual,
        envelope_tolerance: ENVELOPE_TOL,
        attainability_tolerance: attain,
        pass,
    };
    ctx.emit(out, "verify", inputs, payload, |p| {
        let mut t = CsvTable::new(
            "verify",
            &[
                "target_phi",
                "curve_eps_a",
                "curve_eps_b",
                "found_eps_a",
                "found_eps_b",
                "excess",
            ],
        );
        for b in &p.search.best_pairs {
            t.push(vec![
                sci(b.target_phi),
                sci(b.curve.eps_a),
                sci(b.curve.eps_b),
                sci(b.found.eps_a),
                sci(b.found.eps_b),
                sci(b.excess),
            ]);
        }
        t
    })?;
    Ok(if pass { Status::Ok } else { Status::Violations })
}

fn verify_povm(
    ctx: &Ctx,
    path: &Path,
    theta: Option<f64>,
    inputs: VerifyInputs,
    out: impl Write,
) -> CmdResult {
    let file_err = |source| CliError::File {
        path: path.to_owned(),
        source,
    };
    let text = std::fs::read_to_string(path).map_err(file_err)?;
    let doc = parse_povm_document(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a POVM document: {e}", path.display())))?;
    let pair = match (doc.pair, theta) {
        (_, Some(t)) => ObservablePair::canonical(t)?,
        (Some(p), None) => p,
        (None, None) => {
            return Err(CliError::Usage(
                "the POVM file names no observable pair; pass --theta".into(),
            ))
        }
    };
    let errors = score_povm(&pair, &doc.elements);
    let classification = classify(pair.theta(), &ErrorPair::new(errors.eps_a, errors.eps_b)?)?;
    let status = match classification.region {
        Region::Forbidden => Status::Violations,
        _ => Status::Ok,
    };
    let payload = ScorePayload {
        pair,
        errors,
        classification,
    };
    ctx.emit(out, "verify", inputs, payload, |p| {
        let mut t = CsvTable::new("verify", &["eps_a", "eps_b", "region", "min_gap"]);
        t.push(vec![
            sci(p.errors.eps_a),
            sci(p.errors.eps_b),
            region_name(p.classification.region).into(),
            sci(p.classification.min_gap),
        ]);
        t
    })?;
    Ok(status)
}

/// Accepts a full `construct` record, its payload, or a bare list of elements.
fn parse_povm_document(text: &str) -> Result<PovmDocument, serde_json::Error> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(payload) = v.get_mut("payload") {
        v = payload.take();
    }
    if v.is_array() {
        return Ok(PovmDocument {
            elements: serde_json::from_value(v)?,
            pair: None,
        });
    }
    serde_json::from_value(v)
}
