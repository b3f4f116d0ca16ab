use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fliess_core::format::{
    parse_comm_series_at, parse_series, parse_series_at, parse_signals, parse_trajectory_csv, render_comm_series,
    render_comm_series_json, render_report_json, render_series, render_series_json, render_trajectory_csv,
};
use fliess_core::{
    cauchy, cauchy_inverse, cauchy_inverse_comm, compare_loop_vs_formula, compose, dynamic_feedback, evaluate_fliess,
    group_inverse, mixed_compose, mult_compose, shuffle, shuffle_inverse, simulate_dynamic_loop, simulate_static_loop,
    static_feedback, verify_dynamic_fixed_point, verify_static_fixed_point, wiener_fliess, Alphabet, CommutativeSeries,
    Controller, DeltaSeries, Error, Series, SimConfig, Trajectory,
};

/// Exact truncated Chen-Fliess series algebra and feedback simulation.
#[derive(Parser)]
#[command(name = "fliess", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shuffle product of two series.
    Shuffle(Binary),
    /// Cauchy (catenation) product of two series.
    Cauchy(Binary),
    /// Shuffle inverse of a purely improper series.
    ShuffleInv(Unary),
    /// Cauchy inverse of a purely improper series.
    CauchyInv {
        #[command(flatten)]
        unary: Unary,
        /// Treat the operand as a commutative series (static map).
        #[arg(long)]
        commutative: bool,
    },
    /// Composition product c ∘ d (cascade F_c ∘ F_d).
    Compose(Binary),
    /// Multiplicative mixed composition c ⊓∘ δd.
    MixedCompose(Binary),
    /// Multiplicative composition δc ∘ δd, printed as its series part.
    MultCompose(Binary),
    /// Inverse of δd in the multiplicative feedback group.
    GroupInv(Unary),
    /// Wiener-Fliess composition d ⊓ c of a static map d with a proper series c.
    WfCompose {
        /// Commutative series of the static map.
        #[arg(long)]
        map: PathBuf,
        /// Proper series whose outputs feed the static map.
        #[arg(long)]
        series: PathBuf,
        #[command(flatten)]
        out: AlgebraOutput,
    },
    /// Closed loop under dynamic multiplicative output feedback.
    DynFeedback(Loop),
    /// Closed loop under static multiplicative output feedback.
    StaticFeedback(Loop),
    /// Checks whether a candidate series solves a feedback equation. Exits 1 if not.
    Verify {
        #[arg(long, value_enum)]
        kind: LoopKind,
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Defaults to the candidate's degree.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Simulates the plant open loop or inside a feedback loop; writes CSV.
    Simulate {
        #[arg(long, value_enum)]
        kind: SimKind,
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, required_if_eq_any([("kind", "dynamic"), ("kind", "static")]))]
        controller: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compares the simulated loop with the closed-form feedback series.
    Compare {
        #[arg(long, value_enum)]
        kind: LoopKind,
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

#[derive(Args)]
struct AlgebraOutput {
    /// Truncation degree of the computation.
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Args)]
struct Unary {
    operand: PathBuf,
    #[command(flatten)]
    out: AlgebraOutput,
}

#[derive(Args)]
struct Binary {
    left: PathBuf,
    right: PathBuf,
    #[command(flatten)]
    out: AlgebraOutput,
}

#[derive(Args)]
struct Loop {
    #[arg(long)]
    plant: PathBuf,
    #[arg(long)]
    controller: PathBuf,
    #[command(flatten)]
    out: AlgebraOutput,
}

#[derive(Args)]
struct SimArgs {
    /// Input signals, e.g. `const:1;sin:0.5,2`.
    #[arg(long, conflicts_with = "input_csv", required_unless_present = "input_csv")]
    input: Option<String>,
    /// Sampled input trajectory (`t,ch0,...`); fixes the grid.
    #[arg(long)]
    input_csv: Option<PathBuf>,
    #[arg(long, required_unless_present = "input_csv")]
    tfinal: Option<f64>,
    #[arg(long, required_unless_present = "input_csv")]
    steps: Option<usize>,
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value_t = 1e-12)]
    picard_tol: f64,
    #[arg(long, default_value_t = 200)]
    picard_max_iters: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LoopKind {
    Dynamic,
    Static,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimKind {
    Open,
    Dynamic,
    Static,
}

enum Failure {
    Core(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_owned(), e))
}

fn series(path: &Path, degree: usize) -> CliResult<Series> {
    Ok(parse_series_at(&read(path)?, degree)?)
}

fn comm_series(path: &Path, degree: usize) -> CliResult<CommutativeSeries> {
    Ok(parse_comm_series_at(&read(path)?, degree)?)
}

/// Widens the alphabet of a series whose header-less text did not mention
/// the highest letters. Never shrinks.
fn widen(s: Series, size: usize) -> CliResult<Series> {
    if s.alphabet().size() >= size {
        return Ok(s);
    }
    Ok(s.with_alphabet(Alphabet::new(size)?)?)
}

fn widen_pair(a: Series, b: Series, size: usize) -> CliResult<(Series, Series)> {
    let size = size.max(a.alphabet().size()).max(b.alphabet().size());
    Ok((widen(a, size)?, widen(b, size)?))
}

fn emit(text: &str, out: &Option<PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(path.clone(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_series(s: &Series, out: &AlgebraOutput) -> CliResult<()> {
    let text = match out.format {
        OutputFormat::Text => render_series(s),
        OutputFormat::Json => render_series_json(s),
    };
    emit(&text, &out.out)
}

fn emit_comm(s: &CommutativeSeries, out: &AlgebraOutput) -> CliResult<()> {
    let text = match out.format {
        OutputFormat::Text => render_comm_series(s),
        OutputFormat::Json => render_comm_series_json(s),
    };
    emit(&text, &out.out)
}

fn binary(args: &Binary, op: impl Fn(&Series, &Series) -> fliess_core::Result<Series>) -> CliResult<()> {
    let n = args.out.degree;
    let (a, b) = widen_pair(series(&args.left, n)?, series(&args.right, n)?, 0)?;
    emit_series(&op(&a, &b)?, &args.out)
}

fn delta_pair(args: &Binary) -> CliResult<(Series, DeltaSeries)> {
    let n = args.out.degree;
    let (c, d) = (series(&args.left, n)?, series(&args.right, n)?);
    let size = d.outputs() + 1;
    let (c, d) = widen_pair(c, d, size)?;
    Ok((c, DeltaSeries::new(d)?))
}

fn sim_config(sim: &SimArgs) -> CliResult<(SimConfig, Trajectory)> {
    let (v, t_final, steps) = match &sim.input_csv {
        Some(path) => {
            let v = parse_trajectory_csv(&read(path)?)?;
            let (t, s) = (v.t_final(), v.samples() - 1);
            (Some(v), t, s)
        }
        None => (None, sim.tfinal.unwrap_or_default(), sim.steps.unwrap_or_default()),
    };
    let cfg = SimConfig {
        t_final,
        steps,
        picard_tol: sim.picard_tol,
        picard_max_iters: sim.picard_max_iters,
        degree: sim.degree,
    };
    cfg.validate()?;
    let v = match (v, &sim.input) {
        (Some(v), _) => v,
        (None, Some(spec)) => cfg.sample(&parse_signals(spec)?)?,
        (None, None) => unreachable!("clap requires one input source"),
    };
    Ok((cfg, v))
}

/// Reads a plant and a dynamic controller and sizes their alphabets to each other.
fn dynamic_operands(plant: &Path, controller: &Path, degree: usize) -> CliResult<(Series, Series)> {
    let (c, d) = (series(plant, degree)?, series(controller, degree)?);
    let c_size = d.outputs() + 1;
    let d_size = c.outputs() + 1;
    Ok((widen(c, c_size)?, widen(d, d_size)?))
}

fn static_operands(plant: &Path, controller: &Path, degree: usize) -> CliResult<(Series, CommutativeSeries)> {
    let (c, d) = (series(plant, degree)?, comm_series(controller, degree)?);
    let size = d.outputs() + 1;
    Ok((widen(c, size)?, d))
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Shuffle(args) => binary(&args, shuffle)?,
        Command::Cauchy(args) => binary(&args, cauchy)?,
        Command::Compose(args) => {
            let n = args.out.degree;
            let (c, d) = (series(&args.left, n)?, series(&args.right, n)?);
            let c = widen(c, d.outputs() + 1)?;
            emit_series(&compose(&c, &d)?, &args.out)?;
        }
        Command::MixedCompose(args) => {
            let (c, d) = delta_pair(&args)?;
            emit_series(&mixed_compose(&c, &d)?, &args.out)?;
        }
        Command::MultCompose(args) => {
            let (c, d) = delta_pair(&args)?;
            let c = DeltaSeries::new(c)?;
            emit_series(mult_compose(&c, &d)?.inner(), &args.out)?;
        }
        Command::ShuffleInv(args) => {
            let s = series(&args.operand, args.out.degree)?;
            emit_series(&shuffle_inverse(&s)?, &args.out)?;
        }
        Command::CauchyInv {
            unary,
            commutative: true,
        } => {
            let s = comm_series(&unary.operand, unary.out.degree)?;
            emit_comm(&cauchy_inverse_comm(&s)?, &unary.out)?;
        }
        Command::CauchyInv {
            unary,
            commutative: false,
        } => {
            let s = series(&unary.operand, unary.out.degree)?;
            emit_series(&cauchy_inverse(&s)?, &unary.out)?;
        }
        Command::GroupInv(args) => {
            let d = series(&args.operand, args.out.degree)?;
            let size = d.outputs() + 1;
            emit_series(&group_inverse(&widen(d, size)?)?, &args.out)?;
        }
        Command::WfCompose { map, series: c, out } => {
            let d = comm_series(&map, out.degree)?;
            let c = series(&c, out.degree)?;
            emit_series(&wiener_fliess(&d, &c)?, &out)?;
        }
        Command::DynFeedback(args) => {
            let (c, d) = dynamic_operands(&args.plant, &args.controller, args.out.degree)?;
            emit_series(&dynamic_feedback(&c, &d)?, &args.out)?;
        }
        Command::StaticFeedback(args) => {
            let (c, d) = static_operands(&args.plant, &args.controller, args.out.degree)?;
            emit_series(&static_feedback(&c, &d)?, &args.out)?;
        }
        Command::Verify {
            kind,
            plant,
            controller,
            candidate,
            degree,
        } => {
            let text = read(&candidate)?;
            let degree = match degree {
                Some(n) => n,
                None => parse_series(&text)?.degree(),
            };
            let e = parse_series_at(&text, degree)?;
            let holds = match kind {
                LoopKind::Dynamic => {
                    let (c, d) = dynamic_operands(&plant, &controller, degree)?;
                    verify_dynamic_fixed_point(&c, &d, &widen(e, c.alphabet().size())?)?
                }
                LoopKind::Static => {
                    let (c, d) = static_operands(&plant, &controller, degree)?;
                    verify_static_fixed_point(&c, &d, &widen(e, c.alphabet().size())?)?
                }
            };
            println!("{holds}");
            if !holds {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate {
            kind,
            plant,
            controller,
            sim,
            out,
        } => {
            let (cfg, v) = sim_config(&sim)?;
            let controller = controller.as_deref();
            let y = match kind {
                SimKind::Open => {
                    let c = widen(series(&plant, cfg.degree)?, v.channel_count() + 1)?;
                    evaluate_fliess(&c, &v)?
                }
                SimKind::Dynamic => {
                    let (c, d) = dynamic_operands(&plant, controller.expect("required by clap"), cfg.degree)?;
                    simulate_dynamic_loop(&c, &d, &v, &cfg)?
                }
                SimKind::Static => {
                    let (c, d) = static_operands(&plant, controller.expect("required by clap"), cfg.degree)?;
                    simulate_static_loop(&c, &d, &v, &cfg)?
                }
            };
            emit(&render_trajectory_csv(&y), &out)?;
        }
        Command::Compare {
            kind,
            plant,
            controller,
            sim,
            out,
            format,
        } => {
            let (cfg, v) = sim_config(&sim)?;
            let report = match kind {
                LoopKind::Dynamic => {
                    let (c, d) = dynamic_operands(&plant, &controller, cfg.degree)?;
                    compare_loop_vs_formula(&c, Controller::Dynamic(&d), &v, &cfg)?
                }
                LoopKind::Static => {
                    let (c, d) = static_operands(&plant, &controller, cfg.degree)?;
                    compare_loop_vs_formula(&c, Controller::Static(&d), &v, &cfg)?
                }
            };
            let text = match format {
                OutputFormat::Text => report.to_string(),
                OutputFormat::Json => render_report_json(&report),
            };
            emit(&text, &out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Core(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(e.class().exit_code() as u8)
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("error[E_IO]: {}: {e}", path.display());
            ExitCode::from(3)
        }
    }
}
