//! Command-line front end: `solve`, `verify` and `bench`.
//!
//! Exit codes: 0 success, 1 solver did not reach optimality, 2 bad input,
//! 3 a verification check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::bench;
use crate::conic::{solve, SolverConfig};
use crate::error::Error;
use crate::lqc::{Controller, LqcModel};
use crate::mpc::{MpcModel, TerminalSet};
use crate::problem::{LqcFile, LqcResult, MpcResult, ProblemError, ProblemFile, ResultFile};
use crate::verify::{self, Check};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_OPTIMAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "robust-socp",
    version,
    about = "Robust control problems as second-order cone programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file and print the plan.
    Solve {
        problem: PathBuf,
        /// Defaults to `robust` for lqc files and `mpc` for mpc files.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Initial state, comma separated; overrides the file's value.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        /// Write the result as JSON for `verify`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a result file against its problem.
    Verify {
        problem: PathBuf,
        result: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// Time the scalar benchmark family and emit CSV.
    Bench {
        /// Horizons, comma separated.
        #[arg(long = "N", value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run horizons one at a time (clean timings).
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        serial: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Robust,
    Regret,
    Dr,
    DrRegret,
    Mpc,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Robust => "robust",
            Mode::Regret => "regret",
            Mode::Dr => "dr",
            Mode::DrRegret => "dr-regret",
            Mode::Mpc => "mpc",
        }
    }

    fn parse(name: &str) -> Option<Mode> {
        <Mode as ValueEnum>::from_str(name, false).ok()
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Failure {
        Failure::input(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Solver { .. } => EXIT_NOT_OPTIMAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::input(format!("I/O error: {e}"))
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parses `args` (program name first) and runs the command, writing the
/// report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve {
            problem,
            mode,
            x0,
            out: dest,
        } => cmd_solve(&problem, mode, x0, dest.as_deref(), out),
        Command::Verify {
            problem,
            result,
            x0,
        } => cmd_verify(&problem, &result, x0, out),
        Command::Bench {
            horizons,
            reps,
            out: dest,
            serial,
        } => cmd_bench(horizons, reps, dest.as_deref(), serial, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn controller_for(
    mode: Mode,
    file: &LqcFile,
    num_disturbances: usize,
) -> Result<Controller, Failure> {
    Ok(match mode {
        Mode::Robust => Controller::Robust,
        Mode::Regret => Controller::Regret,
        Mode::Dr => Controller::Dr(file.ambiguity_spec(num_disturbances)?),
        Mode::DrRegret => Controller::DrRegret(file.ambiguity_spec(num_disturbances)?),
        Mode::Mpc => return Err(Failure::input("mode `mpc` needs a problem of kind `mpc`")),
    })
}

fn initial_state(
    flag: Option<Vec<f64>>,
    file: Option<&Vec<f64>>,
    fallback: Option<&Vec<f64>>,
    dim: usize,
) -> Result<DVector<f64>, Failure> {
    let v = flag
        .or_else(|| file.cloned())
        .or_else(|| fallback.cloned())
        .ok_or_else(|| {
            Failure::input("no initial state: pass --x0 or set it in the problem file")
        })?;
    if v.len() != dim {
        return Err(Failure::input(format!(
            "field `x0`: expected {dim} entries, got {}",
            v.len()
        )));
    }
    Ok(DVector::from_vec(v))
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.9}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_solve(
    path: &std::path::Path,
    mode: Option<Mode>,
    x0: Option<Vec<f64>>,
    dest: Option<&std::path::Path>,
    out: &mut dyn Write,
) -> CliResult {
    let problem = ProblemFile::read(path)?;
    let config = SolverConfig::default();
    match problem {
        ProblemFile::Lqc(file) => {
            let mode = mode.unwrap_or(Mode::Robust);
            let spec = file.to_spec()?;
            let x0 = initial_state(x0, file.x0.as_ref(), None, spec.nx())?;
            let controller = controller_for(mode, &file, spec.num_disturbances())?;
            let t0 = Instant::now();
            let model = LqcModel::new(spec)?;
            let prog = model.build(&x0, &controller)?;
            let t1 = Instant::now();
            let sol = solve(&prog.program, &config);
            let t2 = Instant::now();
            writeln!(out, "mode: {}", mode.name())?;
            writeln!(out, "status: {:?}", sol.status)?;
            if !sol.is_optimal() {
                return Ok(EXIT_NOT_OPTIMAL);
            }
            let plan = prog.extract(&sol);
            writeln!(out, "objective: {:.9}", plan.objective)?;
            writeln!(out, "u: {}", fmt_vec(&plan.u))?;
            writeln!(out, "lambda: {:.9}", plan.lambda)?;
            writeln!(
                out,
                "soc_blocks: {}  lmi_dim: {}",
                prog.num_soc_blocks(),
                prog.lmi_dim()
            )?;
            writeln!(
                out,
                "iterations: {}  build_ms: {:.3}  solve_ms: {:.3}",
                plan.iterations,
                (t1 - t0).as_secs_f64() * 1e3,
                (t2 - t1).as_secs_f64() * 1e3
            )?;
            if let Some(dest) = dest {
                ResultFile::Lqc(LqcResult::from_plan(mode.name(), &x0, &plan)).write(dest)?;
            }
        }
        ProblemFile::Mpc(file) => {
            if let Some(m) = mode.filter(|&m| m != Mode::Mpc) {
                return Err(Failure::input(format!(
                    "mode `{}` needs a problem of kind `lqc`",
                    m.name()
                )));
            }
            let spec = file.to_spec()?;
            let x_init = initial_state(x0, file.x_init.as_ref(), None, spec.nx())?;
            let t0 = Instant::now();
            let model = MpcModel::new(spec)?;
            let prog = model.build(&x_init, &TerminalSet::Reconfigurable)?;
            let t1 = Instant::now();
            let raw = solve(&prog.program, &config);
            let t2 = Instant::now();
            writeln!(out, "mode: mpc")?;
            writeln!(out, "status: {:?}", raw.status)?;
            if !raw.is_optimal() {
                return Ok(EXIT_NOT_OPTIMAL);
            }
            let sol = prog.extract(&raw);
            writeln!(out, "objective: {:.9}", sol.objective)?;
            writeln!(out, "center: {}", fmt_vec(&sol.center))?;
            writeln!(out, "radius: {:.9}", sol.radius)?;
            if sol.degenerate_radius {
                writeln!(out, "note: terminal set collapsed to its center")?;
            }
            for (k, x) in sol.states.iter().enumerate() {
                match sol.inputs.get(k) {
                    Some(u) => writeln!(out, "x[{k}] = {}  u[{k}] = {}", fmt_vec(x), fmt_vec(u))?,
                    None => writeln!(out, "x[{k}] = {}", fmt_vec(x))?,
                }
            }
            writeln!(
                out,
                "iterations: {}  build_ms: {:.3}  solve_ms: {:.3}",
                sol.iterations,
                (t1 - t0).as_secs_f64() * 1e3,
                (t2 - t1).as_secs_f64() * 1e3
            )?;
            if let Some(dest) = dest {
                ResultFile::Mpc(MpcResult::from_solution(&sol)).write(dest)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn print_checks(checks: &[Check], out: &mut dyn Write) -> std::io::Result<()> {
    for c in checks {
        writeln!(
            out,
            "{:<28} residual {:>10.3e}  tol {:>8.1e}  {}",
            c.name,
            c.residual,
            c.tol,
            if c.passed { "PASS" } else { "FAIL" }
        )?;
    }
    Ok(())
}

fn cmd_verify(
    problem_path: &std::path::Path,
    result_path: &std::path::Path,
    x0: Option<Vec<f64>>,
    out: &mut dyn Write,
) -> CliResult {
    let problem = ProblemFile::read(problem_path)?;
    let result = ResultFile::read(result_path)?;
    let checks = match (&problem, &result) {
        (ProblemFile::Lqc(file), ResultFile::Lqc(res)) => {
            let mode = Mode::parse(&res.mode).ok_or_else(|| {
                Failure::input(format!("field `mode`: unknown mode `{}`", res.mode))
            })?;
            let spec = file.to_spec()?;
            let x0 = initial_state(x0, Some(&res.x0), None, spec.nx())?;
            let controller = controller_for(mode, file, spec.num_disturbances())?;
            let model = LqcModel::new(spec)?;
            verify::verify_lqc(&model, &x0, &controller, &res.plan())?
        }
        (ProblemFile::Mpc(file), ResultFile::Mpc(res)) => {
            let spec = file.to_spec()?;
            let x_init = initial_state(x0, file.x_init.as_ref(), res.states.first(), spec.nx())?;
            let model = MpcModel::new(spec)?;
            verify::verify_mpc(&model, &x_init, &res.solution())?
        }
        _ => {
            return Err(Failure::input(
                "problem and result files are of different kinds",
            ))
        }
    };
    print_checks(&checks, out)?;
    let passed = verify::all_passed(&checks);
    writeln!(
        out,
        "{}",
        if passed {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_bench(
    horizons: Option<Vec<usize>>,
    reps: usize,
    dest: Option<&std::path::Path>,
    serial: bool,
    out: &mut dyn Write,
) -> CliResult {
    let horizons = horizons.unwrap_or_else(bench::default_horizons);
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Failure::input("`--N` needs positive horizons"));
    }
    if reps == 0 {
        return Err(Failure::input("`--reps` must be at least 1"));
    }
    let records = bench::run_bench(&horizons, reps, serial, &SolverConfig::default())?;
    match dest {
        Some(path) => {
            bench::write_csv(&records, std::fs::File::create(path)?)?;
            writeln!(out, "wrote {} rows to {}", records.len(), path.display())?;
        }
        None => bench::write_csv(&records, out)?,
    }
    Ok(EXIT_OK)
}
