use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use jointmeas::BlochVector;

/// Worst-case error tradeoff for jointly measuring two qubit observables.
///
/// Exit codes: 0 success, 1 internal or I/O error, 2 usage error, 3 classified as forbidden,
/// 4 verification found violations.
#[derive(Debug, Parser)]
#[command(name = "jointmeas", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Read --theta and --phi in degrees. Output is always in radians.
    #[arg(long, global = true)]
    pub degrees: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 10^4 random POVMs, attainability tolerance 1e-2.
    Quick,
    /// 10^5 random POVMs, attainability tolerance 1e-3.
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate (phi, E_a, E_b, c) on a uniform phi grid over [0, pi/2].
    Curve(CurveArgs),
    /// Place an error pair as forbidden, boundary or interior.
    Classify(ClassifyArgs),
    /// Build the joint POVM for a boundary point or the commuting construction.
    Construct(ConstructArgs),
    /// Monte Carlo run of the two-projector protocol with error estimates.
    Simulate(SimulateArgs),
    /// Randomized POVM search against the bounds, or score a constructed POVM.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub eps_a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub eps_b: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["phi", "eps_a"])))]
pub struct ConstructArgs {
    /// Angle between a and b. Not needed when both --a-dir and --b-dir are given.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Target error for A; above sin(theta) the commuting construction is used.
    #[arg(long, allow_negative_numbers = true)]
    pub eps_a: Option<f64>,
    /// Only 0 is accepted: requests the commuting construction with an error-free B.
    #[arg(long, allow_negative_numbers = true, requires = "eps_a")]
    pub eps_b: Option<f64>,
    /// Direction of A as x,y,z (normalized on input).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true, requires = "b_dir")]
    pub a_dir: Option<BlochVector>,
    /// Direction of B as x,y,z (normalized on input).
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true, requires = "a_dir")]
    pub b_dir: Option<BlochVector>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the raw shots to PREFIX_a.csv and PREFIX_b.csv.
    #[arg(long, value_name = "PREFIX")]
    pub shots_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["theta", "povm"])))]
pub struct VerifyArgs {
    /// Angle for the search; obtuse angles are reduced to pi - theta.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Preset::Quick)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Score a POVM (construct output or a bare element list) instead of searching.
    #[arg(long, value_name = "FILE")]
    pub povm: Option<PathBuf>,
}

fn parse_vector(s: &str) -> Result<BlochVector, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] => Ok(BlochVector::new(x, y, z)),
        _ => Err(format!(
            "expected three comma-separated numbers, got {}",
            parts.len()
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn vectors_parse() {
        assert_eq!(
            parse_vector("1, 0,-2").unwrap(),
            BlochVector::new(1.0, 0.0, -2.0)
        );
        assert!(parse_vector("1,2").is_err());
        assert!(parse_vector("a,b,c").is_err());
    }
}
