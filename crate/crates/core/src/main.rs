use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use coexist::harness::{
    atomic_write, compare_stirring, run_experiment, sweep, ExperimentConfig, ModelSection,
    StirringComparison, StirringSetup,
};
use coexist::models::{mean_field, reaction, ParamSet};
use coexist::ode::{find_fixed_points, fixed_points_csv, integrate};
use coexist::pde::{
    critical_beta, estimate_front_speed, front_profile, integrate_pde, FrontSetup, Reaction,
    WaveSpeedEstimate,
};
use coexist::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "coexist",
    version,
    about = "Spatial coexistence models: lattice simulation, ODE and PDE limits"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.replicates`.
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model name, when no config is given.
    #[arg(long)]
    model: Option<String>,
    /// Model parameter as `key=value` (TOML value syntax); repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the replicates of an experiment config.
    Sim,
    /// Run the experiment once per value of a parameter.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Write PPM snapshots at the given times (no trace files).
    Snapshot {
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
    /// Integrate the mean-field ODE.
    Ode {
        #[command(flatten)]
        model: ModelArgs,
        /// Initial state, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        initial: Vec<f64>,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        interval: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// List the fixed points of the mean-field ODE with their stability.
    FixedPoints {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Evolve the standard front of the reaction-diffusion limit.
    Pde {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Estimate front speeds, the critical beta, or compare fast stirring.
    Speed {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Bisect the sexual model's critical beta inside `LO,HI`.
        #[arg(long, value_delimiter = ',', value_name = "LO,HI")]
        critical: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.01)]
        critical_tol: f64,
        /// Compare the stirred particle system with the PDE at these epsilons.
        #[arg(long, value_delimiter = ',')]
        stirring: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 2000)]
    cells: usize,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.5)]
    sample_interval: f64,
}

impl GridArgs {
    fn setup(&self) -> FrontSetup {
        FrontSetup {
            cells: self.cells,
            dx: self.dx,
            dt: self.dt,
            horizon: self.horizon,
            sample_interval: self.sample_interval,
        }
    }
}

/// The model part of a config file; other sections are ignored here.
#[derive(Deserialize)]
struct ModelOnly {
    model: ModelSection,
    #[serde(default)]
    params: ParamSet,
}

fn model_and_params(global: &Global, args: &ModelArgs) -> Result<(String, ParamSet)> {
    let (mut name, mut params) = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let m: ModelOnly = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            (Some(m.model.name), m.params)
        }
        None => (None, ParamSet::new()),
    };
    if let Some(m) = &args.model {
        name = Some(m.clone());
    }
    for kv in &args.params {
        let parsed: ParamSet = toml::from_str(kv)
            .map_err(|e| Error::Config(format!("--param {kv}: expected key=value ({e})")))?;
        params.extend(parsed);
    }
    let name = name.ok_or_else(|| Error::Config("give --model or --config".into()))?;
    Ok((name, params))
}

fn load_config(global: &Global) -> Result<ExperimentConfig> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = global.seed {
        config.run.seed = seed;
    }
    if let Some(r) = global.replicates {
        config.run.replicates = r;
    }
    if let Some(out) = &global.out {
        config.output.dir = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

/// Writes to `<out>/<name>` when an output directory is given, else stdout.
fn emit(global: &Global, name: &str, text: &str) -> Result<()> {
    match &global.out {
        Some(dir) => {
            let path = dir.join(name);
            atomic_write(&path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(Path::new("<stdout>"), e)),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Sim => {
            let config = load_config(g)?;
            let result = run_experiment(&config, g.threads)?;
            if config.output.dir.is_none() {
                print!("{}", result.summary_csv());
            }
            eprintln!(
                "{}: {} of {} replicates coexist",
                result.model,
                result.coexisting(),
                result.replicates.len()
            );
        }
        Command::Sweep { param, values } => {
            let config = load_config(g)?;
            let rows = sweep(&config, param, values, g.threads)?;
            for r in rows {
                println!(
                    "{param} = {}: {} of {} coexist",
                    r.value, r.coexisting, r.replicates
                );
            }
        }
        Command::Snapshot { times } => {
            let mut config = load_config(g)?;
            if config.output.dir.is_none() {
                return Err(Error::Config("snapshot needs --out or output.dir".into()));
            }
            config.output.csv = false;
            config.output.snapshots = times.clone();
            config.validate()?;
            run_experiment(&config, g.threads)?;
        }
        Command::Ode {
            model,
            initial,
            t_end,
            interval,
            tol,
        } => {
            let (name, params) = model_and_params(g, model)?;
            let system = mean_field(&name, &params)?;
            if !(*interval > 0.0 && *t_end >= 0.0) {
                return Err(Error::Config("need --interval > 0 and --t-end >= 0".into()));
            }
            let n = (t_end / interval + 1e-9).floor() as usize;
            let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
            if times.last().is_some_and(|t| t < t_end) {
                times.push(*t_end);
            }
            let traj = integrate(&system, initial, &times, *tol)?;
            emit(g, "ode.csv", &traj.to_csv())?;
        }
        Command::FixedPoints { model, tol } => {
            let (name, params) = model_and_params(g, model)?;
            let system = mean_field(&name, &params)?;
            let search = find_fixed_points(&system, *tol)?;
            emit(g, "fixed_points.csv", &fixed_points_csv(&search.roots))?;
        }
        Command::Pde { model, grid } => {
            let (name, params) = model_and_params(g, model)?;
            let r = reaction(&name, &params)?;
            let setup = grid.setup();
            let mut state = front_profile(&r, &setup)?;
            integrate_pde(&r, &mut state, setup.horizon)?;
            emit(g, "pde.csv", &state.to_csv())?;
        }
        Command::Speed {
            model,
            grid,
            critical,
            critical_tol,
            stirring,
        } => {
            let setup = grid.setup();
            if let Some(eps) = stirring {
                let (name, params) = model_and_params(g, model)?;
                let beta = match reaction(&name, &params)? {
                    Reaction::Sexual { beta } => beta,
                    _ => {
                        return Err(Error::Model(
                            "stirring comparison uses the sexual model".into(),
                        ))
                    }
                };
                let stir = StirringSetup {
                    seed: g.seed.unwrap_or(1),
                    ..StirringSetup::default()
                };
                let mut out = format!("{}\n", StirringComparison::csv_header());
                for e in eps {
                    out.push_str(&compare_stirring(beta, *e, &stir)?.csv_row());
                    out.push('\n');
                }
                emit(g, "stirring.csv", &out)?;
            } else if let Some(b) = critical {
                let &[lo, hi] = b.as_slice() else {
                    return Err(Error::Config("--critical takes two values, LO,HI".into()));
                };
                let c = critical_beta((lo, hi), *critical_tol, &setup)?;
                let mut out = String::from("beta,speed\n");
                for (beta, speed) in &c.probes {
                    out.push_str(&format!("{beta},{speed}\n"));
                }
                emit(g, "critical_probes.csv", &out)?;
                eprintln!("critical beta = {} +/- {}", c.estimate, c.half_width);
            } else {
                let (name, params) = model_and_params(g, model)?;
                let est = estimate_front_speed(&reaction(&name, &params)?, &setup)?;
                emit(
                    g,
                    "speed.csv",
                    &format!("{}\n{}\n", WaveSpeedEstimate::csv_header(), est.csv_row()),
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
