use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
mod report;

use report::Inputs;

#[derive(Parser)]
#[command(name = "posg-fsc", version)]
#[command(about = "Finite-state controller synthesis for partially observable stochastic games")]
struct Cli {
    /// Print a structured JSON report instead of text
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the grid-world game
    Grid(GridArgs),
    /// Check model, automaton, product, controller or candidate files
    Validate(ValidateArgs),
    /// Build the product of a game and a Rabin automaton
    Product(ProductArgs),
    /// Compose a product with two controllers into a Markov chain
    Compose(ComposeArgs),
    /// Recurrent classes, absorption and satisfaction probability
    Analyze(AnalyzeArgs),
    /// Generate candidate controller structures
    Synthesize(SynthesizeArgs),
    /// Pick the candidate defender with the best worst case
    Maxmin(MaxminArgs),
    /// Tune softmax parameters on fixed structures
    Optimize(OptimizeArgs),
    /// Monte Carlo estimate of the satisfaction probability
    Simulate(SimulateArgs),
    /// Graphviz rendering of the composed chain
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Cell index of the unsafe state; cell 0 is the start
    #[arg(long = "unsafe", default_value_t = 4)]
    pub unsafe_state: usize,
    #[arg(long, default_value_t = 5)]
    pub goal: usize,
    #[arg(long, default_value_t = 0.8)]
    pub p_obs_def: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_obs_adv: f64,
    #[arg(long, default_value_t = 0.8)]
    pub p_move: f64,
    #[arg(long, default_value_t = 0.6)]
    pub p_move_attacked: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dra: Option<PathBuf>,
    #[arg(long)]
    pub product: Option<PathBuf>,
    /// Checked against the game of --product, or of --model
    #[arg(long)]
    pub fsc_def: Option<PathBuf>,
    #[arg(long)]
    pub fsc_adv: Option<PathBuf>,
    #[arg(long)]
    pub candidates: Option<PathBuf>,
}

#[derive(Args)]
pub struct ProductArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Rabin automaton; the built-in reach-avoid-recurrence automaton if omitted
    #[arg(long)]
    pub dra: Option<PathBuf>,
    /// Check the automaton against this formula on all short lasso words
    #[arg(long)]
    pub ltl: Option<String>,
    #[arg(long)]
    pub prune_unreachable: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ControllerInputs {
    #[arg(long)]
    pub product: PathBuf,
    #[arg(long)]
    pub fsc_def: PathBuf,
    #[arg(long)]
    pub fsc_adv: PathBuf,
}

#[derive(Args)]
pub struct ComposeArgs {
    #[command(flatten)]
    pub inputs: ControllerInputs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub inputs: ControllerInputs,
    /// Transitions with probability at most this are not graph edges
    #[arg(long, default_value_t = 0.0)]
    pub edge_eps: f64,
}

#[derive(Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub product: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub g_def: usize,
    #[arg(long, default_value_t = 1)]
    pub g_adv: usize,
    #[arg(long, default_value_t = 0)]
    pub init_def: usize,
    #[arg(long, default_value_t = 0)]
    pub init_adv: usize,
    /// Prune only the entries of the state being processed
    #[arg(long)]
    pub prune_narrow: bool,
    /// Score candidates against every viable adversary structure
    #[arg(long)]
    pub exhaustive_adv: bool,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct MaxminArgs {
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub exhaustive_adv: bool,
    /// Write the selected defender as a uniform controller
    #[arg(long)]
    pub out_def: Option<PathBuf>,
    /// Write its worst-case adversary as a uniform controller
    #[arg(long)]
    pub out_adv: Option<PathBuf>,
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Controller supports fix the structures; probabilities are ignored
    #[command(flatten)]
    pub inputs: ControllerInputs,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step_size: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub fd_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_def: Option<PathBuf>,
    #[arg(long)]
    pub out_adv: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inputs: ControllerInputs,
    #[arg(long, default_value_t = 100_000)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-class counts as CSV on standard output
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
}

#[derive(Args)]
pub struct ExportDotArgs {
    #[command(flatten)]
    pub inputs: ControllerInputs,
    #[arg(long, default_value_t = 0.0)]
    pub edge_eps: f64,
    /// Standard output if omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut inputs = Inputs::new();
    let (name, outcome) = match &cli.command {
        Command::Grid(a) => ("grid", commands::grid(a)),
        Command::Validate(a) => ("validate", commands::validate(a, &mut inputs)),
        Command::Product(a) => ("product", commands::product(a, &mut inputs)),
        Command::Compose(a) => ("compose", commands::compose(a, &mut inputs)),
        Command::Analyze(a) => ("analyze", commands::analyze(a, &mut inputs)),
        Command::Synthesize(a) => ("synthesize", commands::synthesize(a, &mut inputs)),
        Command::Maxmin(a) => ("maxmin", commands::maxmin(a, &mut inputs)),
        Command::Optimize(a) => ("optimize", commands::optimize(a, &mut inputs)),
        Command::Simulate(a) => ("simulate", commands::simulate(a, &mut inputs)),
        Command::ExportDot(a) => ("export-dot", commands::export_dot(a, &mut inputs, cli.json)),
    };
    match outcome {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe downstream is not our failure
            let _ = if cli.json {
                let report = inputs.finish(name, out.result);
                writeln!(
                    stdout,
                    "{}",
                    serde_json::to_string_pretty(&report).expect("reports serialize")
                )
            } else {
                write!(stdout, "{}", out.text)
            };
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
