//! `spps <command> --problem <file> [flags]`.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use spps_core::basis::Solution;
use spps_core::spectral::EigenResult;

use crate::bench::{experiment_configs, run_configs, worker_threads, BenchRow};
use crate::error::AppError;
use crate::problem::ProblemFile;
use crate::solve::{run_bench, run_bvp, run_eig, run_ivp, solution_rows, Metadata, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "spps",
    version,
    about = "Spectral parameter power series solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Initial value problem; writes x, u, u'.
    SolveIvp,
    /// Two-point boundary value problem; writes x, u, u'.
    SolveBvp,
    /// Eigenvalues inside the search disc; writes λ and residuals.
    Eig,
    /// SPPS against the Runge–Kutta baseline on a problem with `exact`.
    Bench,
    /// The six built-in comparison experiments.
    PaperRepro,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveIvp => "solve-ivp",
            Command::SolveBvp => "solve-bvp",
            Command::Eig => "eig",
            Command::Bench => "bench",
            Command::PaperRepro => "paper-repro",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Problem file (JSON).
    #[arg(long, global = true)]
    pub problem: Option<PathBuf>,
    /// Number of formal powers N.
    #[arg(long, global = true)]
    pub n_powers: Option<usize>,
    /// Number of grid intervals m (rounded up to even).
    #[arg(long, global = true)]
    pub grid_m: Option<usize>,
    /// Spectral parameter as `re,im` (or just `re`).
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_omega)]
    pub omega: Option<Complex64>,
    /// Output file; a `<out>.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Truncation threshold of the series (relative).
    #[arg(long, global = true)]
    pub tail_tolerance: Option<f64>,
}

fn parse_omega(s: &str) -> Result<Complex64, String> {
    let mut parts = s.split(',').map(str::trim);
    let num = |p: Option<&str>| -> Result<f64, String> {
        p.unwrap_or("0")
            .parse::<f64>()
            .map_err(|e| format!("`{s}`: {e}"))
    };
    let re = num(parts.next())?;
    let im = num(parts.next())?;
    if parts.next().is_some() {
        return Err(format!("`{s}`: expected `re,im`"));
    }
    Ok(Complex64::new(re, im))
}

/// Parses arguments, runs the command and prints error JSON on failure.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let json = serde_json::to_string(&e.report()).expect("error report serialises");
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), AppError> {
    let f = &cli.flags;
    let ov = Overrides {
        n_powers: f.n_powers,
        grid_m: f.grid_m,
        omega: f.omega,
        tail_tolerance: f.tail_tolerance,
    };
    let (output, meta) = match cli.command {
        Command::PaperRepro => {
            if f.problem.is_some() {
                return Err(AppError::invalid("paper-repro takes no problem file"));
            }
            paper_repro(&ov)
        }
        cmd => {
            let path = f
                .problem
                .as_deref()
                .ok_or_else(|| AppError::invalid(format!("{} needs --problem", cmd.name())))?;
            let problem = ProblemFile::load(path)?.compile()?;
            match cmd {
                Command::SolveIvp => {
                    let r = run_ivp(&problem, &ov)?;
                    (Output::Solution(r.solution), r.meta)
                }
                Command::SolveBvp => {
                    let r = run_bvp(&problem, &ov)?;
                    (Output::Solution(r.solution), r.meta)
                }
                Command::Eig => {
                    let r = run_eig(&problem, &ov)?;
                    (Output::Eigen(r.eigenvalues), r.meta)
                }
                Command::Bench => {
                    let label = path
                        .file_stem()
                        .map_or("problem".into(), |s| s.to_string_lossy().into_owned());
                    let (rows, meta) = run_bench(&problem, &ov, &label)?;
                    (Output::Bench(rows), meta)
                }
                Command::PaperRepro => unreachable!(),
            }
        }
    };
    emit(&output, &meta, f)
}

fn paper_repro(ov: &Overrides) -> (Output, Metadata) {
    let start = std::time::Instant::now();
    let mut configs = experiment_configs();
    for cfg in &mut configs {
        cfg.n_powers = ov.n_powers.unwrap_or(cfg.n_powers);
        cfg.grid_m = ov.grid_m.unwrap_or(cfg.grid_m);
    }
    let rows = run_configs(&configs, worker_threads());
    let mut meta = Metadata::new("paper-repro");
    meta.interval_a = Some(1.0);
    meta.rows = rows.len();
    meta.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    (Output::Bench(rows), meta)
}

pub enum Output {
    Solution(Solution),
    Eigen(Vec<EigenResult>),
    Bench(Vec<BenchRow>),
}

pub const SOLUTION_HEADER: [&str; 5] = ["x", "re(u)", "im(u)", "re(u')", "im(u')"];
pub const EIGEN_HEADER: [&str; 3] = ["re(lambda)", "im(lambda)", "residual"];

/// One eigenvalue in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub lambda: [f64; 2],
    pub omega: [f64; 2],
    pub residual: f64,
    pub multiplicity_hint: usize,
}

/// One node in JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub x: f64,
    pub u: [f64; 2],
    pub du: [f64; 2],
}

/// The `<out>.meta.json` path for an output file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn emit(output: &Output, meta: &Metadata, f: &Flags) -> Result<(), AppError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |e: io::Error| AppError::Io {
            path: path.clone(),
            message: e.to_string(),
        }
    };
    match &f.out {
        Some(path) => {
            let file = File::create(path).map_err(io_err(path))?;
            let mut w = io::BufWriter::new(file);
            write_output(&mut w, output, f.format)
                .and_then(|_| w.flush())
                .map_err(io_err(path))?;
            let side = sidecar_path(path);
            let json = serde_json::to_string_pretty(meta).expect("metadata serialises");
            std::fs::write(&side, json + "\n").map_err(io_err(&side))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_output(&mut w, output, f.format)
                .and_then(|_| w.flush())
                .map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

pub fn write_output(w: &mut dyn Write, output: &Output, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(w, output),
        Format::Json => {
            let value = match output {
                Output::Solution(s) => serde_json::to_value(
                    solution_rows(s)
                        .map(|(x, u, du)| SolutionRecord {
                            x,
                            u: [u.re, u.im],
                            du: [du.re, du.im],
                        })
                        .collect::<Vec<_>>(),
                ),
                Output::Eigen(list) => serde_json::to_value(
                    list.iter()
                        .map(|e| EigenRecord {
                            lambda: [e.lambda.re, e.lambda.im],
                            omega: [e.omega.re, e.omega.im],
                            residual: e.residual,
                            multiplicity_hint: e.multiplicity_hint,
                        })
                        .collect::<Vec<_>>(),
                ),
                Output::Bench(rows) => serde_json::to_value(rows),
            }
            .map_err(io::Error::other)?;
            serde_json::to_writer_pretty(&mut *w, &value).map_err(io::Error::other)?;
            writeln!(w)
        }
    }
}

fn write_csv(w: &mut dyn Write, output: &Output) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    match output {
        Output::Solution(s) => {
            csv.write_record(SOLUTION_HEADER)?;
            for (x, u, du) in solution_rows(s) {
                csv.write_record([x, u.re, u.im, du.re, du.im].map(number))?;
            }
        }
        Output::Eigen(list) => {
            csv.write_record(EIGEN_HEADER)?;
            for e in list {
                csv.write_record([e.lambda.re, e.lambda.im, e.residual].map(number))?;
            }
        }
        Output::Bench(rows) => {
            for r in rows {
                csv.serialize(r)?;
            }
        }
    }
    csv.flush()
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            -0.30116867893975674,
            6.975736996017278e-16,
            1e300,
            12345.5,
        ] {
            assert_eq!(number(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(number(6.5e-16), "6.5e-16");
        assert_eq!(number(0.25), "0.25");
    }

    #[test]
    fn omega_flag() {
        assert_eq!(parse_omega("1.5,-2").unwrap(), Complex64::new(1.5, -2.0));
        assert_eq!(parse_omega("3").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_omega(" -1 , 0 ").unwrap(), Complex64::new(-1.0, 0.0));
        assert!(parse_omega("1,2,3").is_err());
        assert!(parse_omega("a").is_err());
    }

    #[test]
    fn flags_after_the_command() {
        let cli = Cli::try_parse_from([
            "spps",
            "eig",
            "--problem",
            "p.json",
            "--omega",
            "-1,2",
            "--format",
            "json",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::Eig);
        assert_eq!(cli.flags.omega, Some(Complex64::new(-1.0, 2.0)));
        assert_eq!(cli.flags.format, Format::Json);
        assert_eq!(cli.flags.problem.as_deref(), Some(Path::new("p.json")));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/u.csv")),
            Path::new("out/u.csv.meta.json")
        );
    }

    #[test]
    fn missing_problem_is_reported() {
        let cli = Cli::try_parse_from(["spps", "solve-ivp"]).unwrap();
        let e = run(&cli).unwrap_err();
        assert_eq!((e.module(), e.kind()), ("cli", "invalid_problem"));
    }
}
