//! Command line front end for the verification suites and tables.
//!
//! Exit codes: 0 on success, 1 when a suite reports failures or
//! inconclusive checks, 2 on usage errors, 3 on IO errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twistkit::report::{
    emit_table, run_suite, SuiteConfig, SuiteKind, TableFormat, TableKind, Tolerances,
};
use twistkit::Error;

#[derive(Parser)]
#[command(name = "twistkit", version, about = "Verification suites and tables for the twist kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ToleranceArgs {
    /// Pullback defect allowed for symplectic maps.
    #[arg(long, env = "TWISTKIT_TOL_SYMPLECTIC")]
    tol_symplectic: Option<f64>,
    /// Radius agreement for intersection tables.
    #[arg(long, env = "TWISTKIT_TOL_RADIUS")]
    tol_radius: Option<f64>,
    /// Action agreement for intersection tables.
    #[arg(long, env = "TWISTKIT_TOL_ACTION")]
    tol_action: Option<f64>,
    /// Endpoint membership defect for clean circles.
    #[arg(long, env = "TWISTKIT_TOL_ENDPOINT")]
    tol_endpoint: Option<f64>,
    /// Transported against differenced Jacobi fields.
    #[arg(long, env = "TWISTKIT_TOL_JACOBI")]
    tol_jacobi: Option<f64>,
    /// Exact map identities.
    #[arg(long, env = "TWISTKIT_TOL_IDENTITY")]
    tol_identity: Option<f64>,
    /// Chart-level graph identities.
    #[arg(long, env = "TWISTKIT_TOL_GRAPH")]
    tol_graph: Option<f64>,
    /// Lagrangian defect of swept handles.
    #[arg(long, env = "TWISTKIT_TOL_HANDLE")]
    tol_handle: Option<f64>,
    /// Sheet tracking and lift endpoints.
    #[arg(long, env = "TWISTKIT_TOL_LIFT")]
    tol_lift: Option<f64>,
    /// First radial moment of the correction profile.
    #[arg(long, env = "TWISTKIT_TOL_MOMENT")]
    tol_moment: Option<f64>,
}

impl ToleranceArgs {
    fn apply(&self, base: Tolerances) -> Tolerances {
        Tolerances {
            symplectic: self.tol_symplectic.unwrap_or(base.symplectic),
            radius: self.tol_radius.unwrap_or(base.radius),
            action: self.tol_action.unwrap_or(base.action),
            endpoint: self.tol_endpoint.unwrap_or(base.endpoint),
            jacobi: self.tol_jacobi.unwrap_or(base.jacobi),
            identity: self.tol_identity.unwrap_or(base.identity),
            graph: self.tol_graph.unwrap_or(base.graph),
            handle: self.tol_handle.unwrap_or(base.handle),
            lift: self.tol_lift.unwrap_or(base.lift),
            moment: self.tol_moment.unwrap_or(base.moment),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print its report.
    Verify {
        /// One of: maslov, geometry, twist, intersections, floer, surgery, all.
        suite: String,
        #[arg(long, default_value_t = 0, env = "TWISTKIT_SEED")]
        seed: u64,
        /// Record wall-clock runtimes (makes reports non-reproducible).
        #[arg(long, env = "TWISTKIT_TIMING")]
        timing: bool,
        /// Output format: text or json.
        #[arg(long, default_value = "text", env = "TWISTKIT_FORMAT")]
        format: String,
        /// Write the report to this file instead of stdout.
        #[arg(long, env = "TWISTKIT_OUT")]
        out: Option<PathBuf>,
        #[command(flatten)]
        tolerances: ToleranceArgs,
    },
    /// Print one of the standard tables.
    Table {
        /// One of: actions, indices, e1page.
        kind: String,
        /// Winding parameter of the underlying twist.
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Output format: json, csv or md.
        #[arg(long, default_value = "csv", env = "TWISTKIT_FORMAT")]
        format: String,
        /// Write the table to this file instead of stdout.
        #[arg(long, env = "TWISTKIT_OUT")]
        out: Option<PathBuf>,
    },
    /// Run every suite and print the JSON report.
    Report {
        #[arg(long, default_value_t = 0, env = "TWISTKIT_SEED")]
        seed: u64,
        #[arg(long, env = "TWISTKIT_TIMING")]
        timing: bool,
        #[arg(long, env = "TWISTKIT_OUT")]
        out: Option<PathBuf>,
        #[command(flatten)]
        tolerances: ToleranceArgs,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), std::io::Error> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

const EXIT_CHECKS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn io_error(err: &std::io::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(EXIT_IO)
}

fn run_and_emit(
    kind: SuiteKind,
    config: &SuiteConfig,
    json: bool,
    out: Option<&PathBuf>,
) -> ExitCode {
    let doc = match run_suite(kind, config) {
        Ok(doc) => doc,
        Err(Error::Usage(msg)) => return usage_error(&msg),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CHECKS);
        }
    };
    let text = if json { doc.to_json() } else { doc.to_text() };
    if let Err(e) = emit(&text, out) {
        return io_error(&e);
    }
    if doc.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECKS)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { suite, seed, timing, format, out, tolerances } => {
            let kind = match SuiteKind::parse(&suite) {
                Ok(k) => k,
                Err(e) => return usage_error(&e.to_string()),
            };
            let json = match format.as_str() {
                "json" => true,
                "text" => false,
                other => return usage_error(&format!("unknown format '{other}'; expected text or json")),
            };
            let config = SuiteConfig {
                seed,
                timing,
                tolerances: tolerances.apply(Tolerances::default()),
            };
            run_and_emit(kind, &config, json, out.as_ref())
        }
        Command::Table { kind, r, format, out } => {
            let kind = match TableKind::parse(&kind) {
                Ok(k) => k,
                Err(e) => return usage_error(&e.to_string()),
            };
            let format = match TableFormat::parse(&format) {
                Ok(f) => f,
                Err(e) => return usage_error(&e.to_string()),
            };
            if r == 0 || r > 8 {
                return usage_error("winding parameter r must lie in 1..=8");
            }
            let text = match emit_table(kind, r, format) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CHECKS);
                }
            };
            match emit(&text, out.as_ref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => io_error(&e),
            }
        }
        Command::Report { seed, timing, out, tolerances } => {
            let config = SuiteConfig {
                seed,
                timing,
                tolerances: tolerances.apply(Tolerances::default()),
            };
            run_and_emit(SuiteKind::All, &config, true, out.as_ref())
        }
    }
}
