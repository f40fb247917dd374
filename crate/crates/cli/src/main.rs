use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hoplab_cli::config::{geometric_grid, CommandConfig, RunConfig, SpecConfig};
use hoplab_cli::runner;

/// Numerical laboratory for random-hopping operators on the line: exact
/// eigenvalue counting at tiny spectral scales, crossing/well statistics,
/// Brownian oracles, and the spectral-spike estimators built on them.
#[derive(Parser)]
#[command(name = "hoplab", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Weight process, e.g. dyson-gamma:1, two-point:0.9, lognormal:0.5,
    /// constant:1, empirical:FILE, sol-toral, lamplighter:0.9
    #[arg(long)]
    spec: String,
    /// Master seed; every run is a deterministic function of it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all available).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory (default: $HOPLAB_OUT or ./hoplab-runs, plus a
    /// per-run subdirectory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a TOML run configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the seed recorded in the file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral-window estimate at the coupled scale eps = exp(-sqrt(n)/K).
    Spike {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K")]
        k_scale: f64,
        /// Largest odd n at most this is used.
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Verify the transfer count against the inertia count per trial.
        #[arg(long)]
        cross_check: bool,
    },
    /// Local eigenvalue statistics against the Brownian well-count law.
    Local {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: u64,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        t_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        eta_grid: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 20_000)]
        oracle_paths: u64,
    },
    /// Law of the smallest positive eigenvalue vs sigma * sup|B|.
    Smallest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
    },
    /// Small-scale spectral exponent over a geometric eps grid.
    Ns {
        #[command(flatten)]
        common: Common,
        #[arg(long = "K")]
        k_scale: f64,
        /// Geometric grid FROM:TO:POINTS, e.g. 1e-5:1e-14:6.
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 400)]
        trials: u64,
    },
    /// Verify the crossing/well eigenvalue sandwich against exact counts.
    BoundsCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        delta: f64,
        /// Window bound in (0,1); default exp(-sqrt(n)).
        #[arg(long)]
        lambda: Option<f64>,
        /// Enumerate all two-point weight patterns instead of sampling.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Dump the rescaled transfer trajectory of the first instance.
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Brownian-motion oracles (no weight process involved).
    #[command(subcommand)]
    BmOracle(BmOracle),
    /// Walk diagnostics: moments, correlations, extreme log-weights.
    #[command(subcommand)]
    Diag(Diag),
    /// Re-execute a persisted manifest; results.json is byte-identical when
    /// the tool version matches.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BmOracle {
    /// E[#unit crossings on [0, K^2]] / K^2 -> sigma2.
    Renewal {
        #[arg(long, value_delimiter = ',', default_value = "0.25,1.0,4.0")]
        sigma2: Vec<f64>,
        #[arg(long = "K", default_value_t = 10.0)]
        k_scale: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CDF table of sup_{[0,1]}|B|, optionally with an empirical law.
    Sup {
        #[arg(long, value_delimiter = ',')]
        xs: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        /// 0 skips the empirical sampler.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 1e-5)]
        mesh: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tail of the well count against its fitted Gaussian envelope.
    Tail {
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 4.0)]
        sigma2: f64,
        #[arg(long, default_value_t = 6)]
        m_max: u32,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Diag {
    /// E|S_n|^gamma / n^(gamma/2) for gamma = 2, 4 over an n grid.
    Moment {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// Increment correlations over lags with an exponential-decay fit.
    Correlation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        max_lag: usize,
        #[arg(long, default_value_t = 4000)]
        trials: u64,
    },
    /// E max|log a_k| / sqrt(n): must vanish for finite-variance logs.
    BigWeight {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and help still print normally; real parse errors map to
            // the configuration-error exit status.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn default_out(command: &str, seed: u64, explicit: Option<PathBuf>) -> PathBuf {
    if let Some(p) = explicit {
        return p;
    }
    let base = std::env::var_os("HOPLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("hoplab-runs"));
    base.join(format!("{command}-seed{seed}"))
}

fn finish(outcome: runner::RunOutcome) -> u8 {
    println!("artifacts: {}", outcome.out_dir.display());
    if let Some(v) = &outcome.violation {
        eprintln!("invariant violation: {v}");
    }
    outcome.exit_code as u8
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    let (config, out, seed_for_dir): (RunConfig, Option<PathBuf>, u64) = match cli.command {
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = RunConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let seed = cfg.seed;
            (cfg, out, seed)
        }
        Command::Replay { manifest, out } => {
            let out = out.unwrap_or_else(|| {
                manifest
                    .parent()
                    .map(|p| p.join("replay"))
                    .unwrap_or_else(|| PathBuf::from("replay"))
            });
            let outcome = runner::replay(&manifest, &out)?;
            return Ok(finish(outcome));
        }
        Command::Spike {
            common,
            k_scale,
            n,
            trials,
            cross_check,
        } => {
            let spec: SpecConfig = common.spec.parse()?;
            (
                RunConfig {
                    command: CommandConfig::Spike {
                        k_scale,
                        n_target: n,
                        trials,
                    },
                    spec: Some(spec),
                    seed: common.seed,
                    workers: common.workers,
                    cross_check,
                },
                common.out,
                common.seed,
            )
        }
        Command::Local {
            common,
            n,
            t_grid,
            eta_grid,
            trials,
            oracle_paths,
        } => {
            let spec: SpecConfig = common.spec.parse()?;
            (
                RunConfig {
                    command: CommandConfig::Local {
                        n,
                        t_grid,
                        eta_grid,
                        trials,
                        oracle_paths,
                    },
                    spec: Some(spec),
                    seed: common.seed,
                    workers: common.workers,
                    cross_check: false,
                },
                common.out,
                common.seed,
            )
        }
        Command::Smallest { common, n, trials } => {
            let spec: SpecConfig = common.spec.parse()?;
            (
                RunConfig {
                    command: CommandConfig::Smallest { n, trials },
                    spec: Some(spec),
                    seed: common.seed,
                    workers: common.workers,
                    cross_check: false,
                },
                common.out,
                common.seed,
            )
        }
        Command::Ns {
            common,
            k_scale,
            eps,
            trials,
        } => {
            let spec: SpecConfig = common.spec.parse()?;
            let parts: Vec<&str> = eps.split(':').collect();
            let eps_grid = match parts.as_slice() {
                [from, to, points] => {
                    geometric_grid(from.parse()?, to.parse()?, points.parse()?)?
                }
                _ => anyhow::bail!("--eps wants FROM:TO:POINTS"),
            };
            (
                RunConfig {
                    command: CommandConfig::Ns {
                        k_scale,
                        eps_grid,
                        trials,
                    },
                    spec: Some(spec),
                    seed: common.seed,
                    workers: common.workers,
                    cross_check: false,
                },
                common.out,
                common.seed,
            )
        }
        Command::BoundsCheck {
            common,
            n,
            delta,
            lambda,
            exhaustive,
            trials,
            dump_trajectory,
        } => {
            let spec: SpecConfig = common.spec.parse()?;
            (
                RunConfig {
                    command: CommandConfig::BoundsCheck {
                        n,
                        delta,
                        lambda,
                        exhaustive,
                        trials,
                        dump_trajectory,
                    },
                    spec: Some(spec),
                    seed: common.seed,
                    workers: common.workers,
                    cross_check: false,
                },
                common.out,
                common.seed,
            )
        }
        Command::BmOracle(bm) => match bm {
            BmOracle::Renewal {
                sigma2,
                k_scale,
                trials,
                seed,
                workers,
                out,
            } => (
                RunConfig {
                    command: CommandConfig::BmRenewal {
                        sigma2,
                        k_scale,
                        trials,
                    },
                    spec: None,
                    seed,
                    workers,
                    cross_check: false,
                },
                out,
                seed,
            ),
            BmOracle::Sup {
                xs,
                sigma2,
                trials,
                mesh,
                seed,
                workers,
                out,
            } => (
                RunConfig {
                    command: CommandConfig::BmSup {
                        xs,
                        sigma2,
                        trials,
                        mesh,
                    },
                    spec: None,
                    seed,
                    workers,
                    cross_check: false,
                },
                out,
                seed,
            ),
            BmOracle::Tail {
                eta,
                t,
                sigma2,
                m_max,
                trials,
                seed,
                workers,
                out,
            } => (
                RunConfig {
                    command: CommandConfig::BmTail {
                        eta,
                        t,
                        sigma2,
                        m_max,
                        trials,
                    },
                    spec: None,
                    seed,
                    workers,
                    cross_check: false,
                },
                out,
                seed,
            ),
        },
        Command::Diag(diag) => match diag {
            Diag::Moment {
                common,
                n_grid,
                trials,
            } => {
                let spec: SpecConfig = common.spec.parse()?;
                (
                    RunConfig {
                        command: CommandConfig::DiagMoment { n_grid, trials },
                        spec: Some(spec),
                        seed: common.seed,
                        workers: common.workers,
                        cross_check: false,
                    },
                    common.out,
                    common.seed,
                )
            }
            Diag::Correlation {
                common,
                max_lag,
                trials,
            } => {
                let spec: SpecConfig = common.spec.parse()?;
                (
                    RunConfig {
                        command: CommandConfig::DiagCorrelation { max_lag, trials },
                        spec: Some(spec),
                        seed: common.seed,
                        workers: common.workers,
                        cross_check: false,
                    },
                    common.out,
                    common.seed,
                )
            }
            Diag::BigWeight {
                common,
                n_grid,
                trials,
            } => {
                let spec: SpecConfig = common.spec.parse()?;
                (
                    RunConfig {
                        command: CommandConfig::DiagBigWeight { n_grid, trials },
                        spec: Some(spec),
                        seed: common.seed,
                        workers: common.workers,
                        cross_check: false,
                    },
                    common.out,
                    common.seed,
                )
            }
        },
    };
    let out_dir = default_out(config.command.name(), seed_for_dir, out);
    let outcome = runner::run(&config, &out_dir)?;
    Ok(finish(outcome))
}
