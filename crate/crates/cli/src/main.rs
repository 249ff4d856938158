mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use izone_core::{DisturbanceKind, Parameter};

#[derive(Parser, Debug)]
#[command(name = "izone", version, about = "Inertia zone identification for power networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute DNW and inertia zones.
    Zones(Common),
    /// Recompute DNW and zones while varying one generator's inertia.
    Sweep(SweepArgs),
    /// First-order eigenvector sensitivity of the DNW operator.
    Sensitivity(SensitivityArgs),
    /// Linear swing simulation and zone coherence scoring.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Svg => "svg",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Case file, or the name of a bundled fixture.
    #[arg(long)]
    pub case: String,
    /// Scenario overlay file or fixture name.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of slow modes used as clustering features.
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// Seeding stops once the relative spread improvement drops below this.
    #[arg(long, default_value_t = 0.15)]
    pub tau: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "izone-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Json, Format::Csv, Format::Svg])]
    pub formats: Vec<Format>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Generator bus whose inertia is varied.
    #[arg(long)]
    pub bus: u32,
    #[arg(long, default_value_t = 2.0)]
    pub h_from: f64,
    #[arg(long, default_value_t = 6.0)]
    pub h_to: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParameterArg {
    All,
    VoltageMag,
    VoltageAng,
    Inertia,
}

impl ParameterArg {
    pub fn parameters(self) -> Vec<Parameter> {
        match self {
            ParameterArg::All => Parameter::ALL.to_vec(),
            ParameterArg::VoltageMag => vec![Parameter::VoltageMag],
            ParameterArg::VoltageAng => vec![Parameter::VoltageAng],
            ParameterArg::Inertia => vec![Parameter::Inertia],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Study {
    /// Perturb each generator bus on its own and average.
    OneAtATime,
    /// Perturb every bus of the parameter's kind at once.
    Joint,
}

#[derive(Args, Debug)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = ParameterArg::All)]
    pub parameter: ParameterArg,
    /// Perturbation magnitude, a fraction of each value unless `--absolute`.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Add epsilon to the targeted values instead of scaling them.
    #[arg(long)]
    pub absolute: bool,
    #[arg(long, value_enum, default_value_t = Study::OneAtATime)]
    pub study: Study,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    PowerStep,
    AngleImpulse,
}

impl From<KindArg> for DisturbanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::PowerStep => DisturbanceKind::PowerStep,
            KindArg::AngleImpulse => DisturbanceKind::AngleImpulse,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Disturbed bus; repeat for a batch.
    #[arg(long = "bus", required = true)]
    pub buses: Vec<u32>,
    #[arg(long, value_enum, default_value_t = KindArg::PowerStep)]
    pub kind: KindArg,
    /// Per-unit power (power_step) or rad (angle_impulse).
    #[arg(long, default_value_t = 0.1)]
    pub size: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_start: f64,
    #[arg(long, default_value_t = 0.1)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
}

fn error_doc(code: &str, message: &str) -> String {
    json!({
        "schema_version": izone_core::SCHEMA_VERSION,
        "error": {"code": code, "message": message},
    })
    .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            eprintln!("{}", error_doc("usage", message.trim()));
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Zones(c) => commands::zones(c),
        Command::Sweep(a) => commands::sweep(a),
        Command::Sensitivity(a) => commands::sensitivity(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match outcome {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_doc(e.code(), &e.to_string()));
            ExitCode::from(e.exit_code())
        }
    }
}
