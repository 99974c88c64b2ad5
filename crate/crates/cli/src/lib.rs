//! Command-line front end: figure data, exponential-sum certification,
//! Gaussian solves, Monte-Carlo sector estimates and symmetry checks.

pub mod commands;
pub mod csv_out;
pub mod figures;
pub mod grid;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use commands::{CertArgs, McArgs, ProfileSpec, SolveArgs, SymArgs};
use grid::Grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_CERTIFICATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "tracesolve",
    version,
    about = "Trace-space solver experiments and figure data"
)]
pub struct Cli {
    /// TOML file whose `[<subcommand>]` table overrides command-line flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for output files
    #[arg(long, global = true, env = "TRACESOLVE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArg {
    /// Output file (`-` for standard output); defaults to `<out-dir>/<subcommand>.csv`
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Volume ratio F(m, n; delta) for m = 2^k and n = ratio * m
    Fig1 {
        #[arg(long, default_value_t = 1)]
        kmin: u32,
        #[arg(long, default_value_t = 16)]
        kmax: u32,
        #[arg(long, default_value_t = 2)]
        ratio: usize,
        /// Grid start:stop:step for delta
        #[arg(long, default_value_t = figures::FIG1_DELTA)]
        delta: Grid,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Distance to one of the volume-ratio probability bound
    Fig2 {
        /// Particle numbers
        #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16, 24, 32, 40, 48, 56, 64])]
        particles: Vec<usize>,
        /// Grid start:stop:step for epsilon
        #[arg(long, default_value_t = figures::FIG2_EPS)]
        eps: Grid,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Renormalized mollifier transforms in one dimension
    Fig3 {
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 2, 3, 4, 5])]
        orders: Vec<u32>,
        /// Grid start:stop:step for omega
        #[arg(long, default_value_t = figures::FIG3_OMEGA)]
        omega: Grid,
        #[command(flatten)]
        out: OutputArg,
    },
    /// r v(r) at r = 10^s for a grid exponential sum
    Fig4 {
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
        k1: i64,
        #[arg(long, default_value_t = 50, allow_hyphen_values = true)]
        k2: i64,
        /// Grid start:stop:step for s
        #[arg(long, default_value_t = figures::FIG4_S)]
        s: Grid,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Certify an exponential sum for 1/r on [lo, hi], or search one for --tol
    #[command(name = "expsum-cert")]
    ExpsumCert {
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        k1: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        k2: Option<i64>,
        /// Required sup relative error; exit code 4 if not met
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        lo: f64,
        #[arg(long, default_value_t = 1e17)]
        hi: f64,
        #[arg(long, default_value_t = tracesolve::expsum::POINTS_PER_PERIOD)]
        points_per_period: usize,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Solve a problem file with both kernels and report residual and deviation
    Solve {
        /// Problem file (TOML)
        #[arg(long)]
        problem: PathBuf,
        /// Number of sample configurations
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Standard deviation of the sample coordinates
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte-Carlo sector volume estimate with the quadrature sandwich
    Mc {
        /// projection, trace or custom
        #[arg(long, default_value = "trace")]
        profile: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 3)]
        particles: usize,
        /// Singular values for the custom profile
        #[arg(long, value_delimiter = ',')]
        sigmas: Vec<f64>,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out: OutputArg,
    },
    /// Permutation-symmetry checks of the trace map and the solvers
    #[command(name = "sym-check")]
    SymCheck {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6])]
        particles: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Largest particle number for which solutions are checked
        #[arg(long, default_value_t = 3)]
        solve_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fig1 { .. } => "fig1",
            Command::Fig2 { .. } => "fig2",
            Command::Fig3 { .. } => "fig3",
            Command::Fig4 { .. } => "fig4",
            Command::ExpsumCert { .. } => "expsum-cert",
            Command::Solve { .. } => "solve",
            Command::Mc { .. } => "mc",
            Command::SymCheck { .. } => "sym-check",
        }
    }
}

/// Turns the `[<subcommand>]` table of a config file into `(flag, value)`
/// pairs; `value` is `None` for switches.
fn config_flags(path: &Path, subcommand: &str) -> anyhow::Result<Vec<(String, Option<String>)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: toml::Table = toml::from_str(&text).context("config file is not valid TOML")?;
    let Some(section) = doc.get(subcommand) else {
        return Ok(Vec::new());
    };
    let Some(table) = section.as_table() else {
        bail!("config entry [{subcommand}] must be a table");
    };
    let scalar = |v: &toml::Value| -> anyhow::Result<String> {
        Ok(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            other => bail!("unsupported config value {other}"),
        })
    };
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => flags.push((flag, None)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(scalar)
                    .collect::<anyhow::Result<Vec<_>>>()?;
                flags.push((flag, Some(parts.join(","))));
            }
            other => flags.push((flag, Some(scalar(other)?))),
        }
    }
    Ok(flags)
}

fn output_path(out_dir: &Path, out: &OutputArg, default_name: &str) -> PathBuf {
    out.output
        .clone()
        .unwrap_or_else(|| out_dir.join(default_name))
}

/// Maps an error chain to an exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<tracesolve::Error>() {
        Some(tracesolve::Error::Capacity(_)) => EXIT_CAPACITY,
        Some(tracesolve::Error::Certification(_)) => EXIT_CERTIFICATION,
        Some(_) => EXIT_INPUT,
        None => EXIT_FAILURE,
    }
}

/// Parses `args`, applies the config file and runs the subcommand.
pub fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let first = Cli::try_parse_from(&args)?;
    let Some(config) = first.config.clone() else {
        return Ok(first);
    };
    let extra = config_flags(&config, first.command.name())
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::InvalidValue, format!("{e:#}\n")))?;
    // drop command-line occurrences of every configured flag, then append
    // the configured values so that the file wins
    let mut kept: Vec<OsString> = Vec::with_capacity(args.len());
    let mut iter = args.into_iter().peekable();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy().into_owned();
        let hit = extra.iter().find(|(flag, _)| {
            text == *flag
                || text.starts_with(&format!("{flag}="))
                || (flag == "--output" && text == "-o")
        });
        match hit {
            Some((_, Some(_))) if !text.contains('=') => {
                iter.next();
            }
            Some(_) => {}
            None => kept.push(arg),
        }
    }
    for (flag, value) in extra {
        kept.push(flag.into());
        if let Some(v) = value {
            kept.push(v.into());
        }
    }
    Cli::try_parse_from(kept)
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let dir = cli.out_dir.as_path();
    match cli.command {
        Command::Fig1 {
            kmin,
            kmax,
            ratio,
            delta,
            out,
        } => {
            if kmin > kmax || kmax > 30 || ratio < 2 {
                return Err(tracesolve::Error::InvalidInput(
                    "need kmin <= kmax <= 30 and ratio >= 2".into(),
                )
                .into());
            }
            figures::fig1(kmin, kmax, ratio, delta)?
                .write_to(&output_path(dir, &out, "fig1.csv"))?;
        }
        Command::Fig2 {
            particles,
            eps,
            out,
        } => {
            figures::fig2(&particles, eps)?.write_to(&output_path(dir, &out, "fig2.csv"))?;
        }
        Command::Fig3 { orders, omega, out } => {
            let order = |nu: u32| tracesolve::smoothing::KernelOrder::new(nu, 1);
            for &nu in &orders {
                order(nu)?;
            }
            figures::fig3(&orders, omega)?.write_to(&output_path(dir, &out, "fig3.csv"))?;
        }
        Command::Fig4 { h, k1, k2, s, out } => {
            figures::fig4(h, k1, k2, s)?.write_to(&output_path(dir, &out, "fig4.csv"))?;
        }
        Command::ExpsumCert {
            h,
            k1,
            k2,
            tol,
            lo,
            hi,
            points_per_period,
            out,
        } => {
            let grid = match (h, k1, k2) {
                (Some(h), Some(k1), Some(k2)) => Some((h, k1, k2)),
                (None, None, None) => None,
                _ => {
                    return Err(tracesolve::Error::InvalidInput(
                        "--h, --k1 and --k2 must be given together".into(),
                    )
                    .into())
                }
            };
            let (table, failure) = commands::expsum_cert(&CertArgs {
                grid,
                tol,
                lo,
                hi,
                per_period: points_per_period,
            })?;
            table.write_to(&output_path(dir, &out, "expsum-cert.csv"))?;
            if let Some(e) = failure {
                return Err(e.into());
            }
        }
        Command::Solve {
            problem,
            points,
            radius,
            seed,
        } => {
            let outcome = commands::solve(&SolveArgs {
                problem: problem.clone(),
                points,
                radius,
                seed,
            })?;
            let stem = problem
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "problem".into());
            commands::write_text(
                &dir.join(format!("{stem}.operator.toml")),
                &outcome.operator_toml,
            )?;
            commands::write_text(
                &dir.join(format!("{stem}.decoupled.toml")),
                &outcome.decoupled_toml,
            )?;
            outcome
                .report
                .write_to(&dir.join(format!("{stem}.report.csv")))?;
            println!(
                "residual {:.3e}, max relative deviation U vs U~ {:.3e}",
                outcome.residual, outcome.max_rel_dev
            );
        }
        Command::Mc {
            profile,
            m,
            n,
            particles,
            sigmas,
            delta,
            samples,
            seed,
            threads,
            out,
        } => {
            let need = |v: Option<usize>, flag: &str| {
                v.ok_or_else(|| {
                    tracesolve::Error::InvalidInput(format!("profile {profile} needs --{flag}"))
                })
            };
            let spec = match profile.as_str() {
                "projection" => ProfileSpec::Projection {
                    m: need(m, "m")?,
                    n: need(n, "n")?,
                },
                "trace" => ProfileSpec::Trace { particles },
                "custom" => ProfileSpec::Custom {
                    sigmas,
                    n: need(n, "n")?,
                },
                other => {
                    return Err(tracesolve::Error::InvalidInput(format!(
                        "unknown profile {other:?} (projection, trace, custom)"
                    ))
                    .into())
                }
            };
            commands::mc(&McArgs {
                profile: spec,
                delta,
                samples,
                seed,
                threads,
            })?
            .write_to(&output_path(dir, &out, "mc.csv"))?;
        }
        Command::SymCheck {
            particles,
            trials,
            solve_max,
            seed,
            out,
        } => {
            let (table, ok) = commands::sym_check(&SymArgs {
                particles,
                trials,
                solve_max,
                seed,
            })?;
            table.write_to(&output_path(dir, &out, "sym-check.csv"))?;
            if !ok {
                return Err(tracesolve::Error::Certification(
                    "symmetry checks failed, see the output table".into(),
                )
                .into());
            }
        }
    }
    Ok(())
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
