use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use kawahara_core::analysis::{besov_norm, box_dimension, LpExponent};
use kawahara_core::config::{InitialSpec, KeyValues, RANDOM_DECAY, RANDOM_H1_NORM};
use kawahara_core::data::make_random_data;
use kawahara_core::experiment::{emit_plot_data, run_dichotomy_experiment, DichotomyConfig, RunManifest};
use kawahara_core::linear::rational_multipliers;
use kawahara_core::normal_form::{estimate_multilinear_constants, verify_representation};
use kawahara_core::solver::evolve;
use kawahara_core::spectral::sobolev_norm;
use kawahara_core::{Error, FourierState, RationalTime, RealGridFunction, Scheme, SolverConfig};

#[derive(Parser)]
#[command(name = "kawahara", version, about = "Rough-data experiments for the periodic Kawahara equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate from initial data and write the trajectory as JSON.
    Evolve {
        #[arg(long, allow_hyphen_values = true)]
        alpha: i32,
        #[arg(long)]
        n_modes: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        t_end: f64,
        /// step:<x>=<v>,… | smoothed-step:<w>:<x>=<v>,… | sobolev:<s>:<seed> | random:<seed> | file:<path>
        #[arg(long)]
        initial: String,
        #[arg(long, default_value_t = 1)]
        record_stride: usize,
        #[arg(long, default_value = "normal-form")]
        scheme: Scheme,
        /// Use the plain 2N+2 product grid.
        #[arg(long)]
        no_dealias: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Translate coefficients of the linear propagator at t = 2πp/q.
    Multipliers {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long)]
        q: u64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the normal-form representation on a solver trajectory.
    VerifyNormalForm {
        #[arg(long)]
        n_modes: usize,
        #[arg(long, allow_hyphen_values = true)]
        alpha: i32,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Quadrature step, a multiple of dt (defaults to dt).
        #[arg(long)]
        quad_dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Box-counting dimension of sampled graph data ("x,value" CSV).
    Dimension {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sobolev norm of a state, or a Besov norm with --besov.
    Norms {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        /// 1, 2 or inf
        #[arg(long)]
        besov: Option<LpExponent>,
    },
    /// Rational versus irrational time experiment from a key-value config.
    Dichotomy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical multilinear constants over random power-law data.
    Constants {
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        s1: f64,
        #[arg(long)]
        n_modes: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        alpha: i32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Done,
    UnreliableFit,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::NumericalAbort { .. } => 3,
        Error::DegenerateFit(_) => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn emit(value: &Value, out: Option<&Path>) -> kawahara_core::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => print_stdout(&text)?,
    }
    Ok(())
}

fn print_stdout(text: &str) -> kawahara_core::Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn check_alpha(alpha: i32) -> kawahara_core::Result<()> {
    if (-1..=1).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must be -1, 0 or 1, got {alpha}")))
    }
}

fn run(command: Command) -> kawahara_core::Result<Outcome> {
    match command {
        Command::Evolve {
            alpha,
            n_modes,
            dt,
            t_end,
            initial,
            record_stride,
            scheme,
            no_dealias,
            out,
            manifest,
        } => {
            let started = Instant::now();
            let spec = InitialSpec::parse(&initial)?;
            let g = spec.build(n_modes).map_err(|e| e.in_stage("initial data"))?;
            let mut cfg = SolverConfig::new(n_modes, dt, t_end, alpha)
                .with_stride(record_stride)
                .with_scheme(scheme);
            cfg.dealias = !no_dealias;
            let tr = evolve(&g, &cfg)?;
            fs::write(&out, serde_json::to_string(&tr)?)?;
            log::info!("{} states written to {}", tr.len(), out.display());
            if let Some(path) = manifest {
                let config = json!({
                    "alpha": alpha,
                    "n_modes": n_modes,
                    "dt": dt,
                    "t_end": t_end,
                    "initial": initial,
                    "record_stride": record_stride,
                    "scheme": scheme.to_string(),
                    "dealias": !no_dealias,
                });
                let seeds = match spec {
                    InitialSpec::Sobolev { seed, .. } | InitialSpec::Random { seed, .. } => vec![seed],
                    _ => Vec::new(),
                };
                let mut m = RunManifest::new("evolve", config, seeds);
                if let Some(input) = spec.input_path() {
                    m.hash_input(input)?;
                }
                m.output_paths.push(out.display().to_string());
                m.timing_seconds = started.elapsed().as_secs_f64();
                m.write(&path)?;
            }
            Ok(Outcome::Done)
        }
        Command::Multipliers { p, q, alpha, out } => {
            check_alpha(alpha)?;
            let rt = RationalTime::new(p, q).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let coeffs: Vec<[f64; 2]> = rational_multipliers(rt, alpha).iter().map(|z| [z.re, z.im]).collect();
            emit(&json!({ "q": rt.q(), "coeffs": coeffs }), out.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::VerifyNormalForm {
            n_modes,
            alpha,
            t_end,
            dt,
            seed,
            quad_dt,
            out,
        } => {
            check_alpha(alpha)?;
            let g = make_random_data(n_modes, RANDOM_DECAY, 1.0, RANDOM_H1_NORM, seed);
            let cfg = SolverConfig::new(n_modes, dt, t_end, alpha).with_scheme(Scheme::Lawson);
            let tr = evolve(&g, &cfg).map_err(|e| e.in_stage("evolve"))?;
            let report = verify_representation(&tr, &g, &tr.symbol(), quad_dt.unwrap_or(dt))?;
            emit(&serde_json::to_value(&report)?, out.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Dimension { input, levels, out } => {
            let f = RealGridFunction::read_csv(&input)?;
            let est = box_dimension(&f, levels)?;
            emit(&serde_json::to_value(&est)?, out.as_deref())?;
            Ok(if est.reliable { Outcome::Done } else { Outcome::UnreliableFit })
        }
        Command::Norms { input, s, besov } => {
            let u = FourierState::read_json(&input)?;
            let value = match besov {
                Some(p) => besov_norm(&u, s, p).value,
                None => sobolev_norm(&u, s),
            };
            emit(&json!(value), None)?;
            Ok(Outcome::Done)
        }
        Command::Dichotomy { config, out } => {
            let started = Instant::now();
            let kv = KeyValues::read(&config)?;
            let cfg = DichotomyConfig::from_keys(&kv)?;
            let report = run_dichotomy_experiment(&cfg)?;
            fs::create_dir_all(&out)?;
            let report_path = out.join("dichotomy_report.json");
            emit(&serde_json::to_value(&report)?, Some(&report_path))?;
            let mut outputs = vec![report_path];
            outputs.extend(emit_plot_data(&report, &out)?);

            let mut m = RunManifest::new("dichotomy", serde_json::to_value(&cfg)?, vec![cfg.seed]);
            m.hash_input(&config)?;
            if let Some(input) = cfg.initial.input_path() {
                m.hash_input(input)?;
            }
            m.output_paths = outputs.iter().map(|p| p.display().to_string()).collect();
            m.timing_seconds = started.elapsed().as_secs_f64();
            m.write(&out.join("manifest.json"))?;
            print_stdout(&serde_json::to_string_pretty(&report.summary)?)?;
            Ok(if report.summary.unreliable_fits > 0 {
                Outcome::UnreliableFit
            } else {
                Outcome::Done
            })
        }
        Command::Constants {
            s,
            s1,
            n_modes,
            trials,
            seed,
            alpha,
            out,
        } => {
            check_alpha(alpha)?;
            let report = estimate_multilinear_constants(s, s1, n_modes, trials, seed, alpha);
            emit(&serde_json::to_value(&report)?, out.as_deref())?;
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::UnreliableFit) => {
            log::warn!("fit quality below threshold");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
