use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::checkpoint::{fingerprint, Checkpoint, SavedGrid};
use super::config::ExperimentConfig;
use super::output::{atomic_write, count_snapshot_grid, emit_csv, emit_snapshot, DEFAULT_PALETTE};
use super::species_codes;
use super::trace::{detect_coexistence, CoexistenceVerdict, DensityTrace};
use crate::engine::{CountEngine, Engine, SimClock, Simulation, StirringSpec};
use crate::error::{Error, Result};
use crate::lattice::{RandomStream, StateGrid};
use crate::models::ModelSpec;

/// Checkpoint and interruption controls for a single replicate.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Where the checkpoint lives. Required by the two options below.
    pub checkpoint: Option<PathBuf>,
    /// Minimum wall time between checkpoints, checked at observation times.
    pub every: Option<Duration>,
    /// Stop (after checkpointing) once this many observations are done.
    pub halt_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub trace: DensityTrace,
    pub verdict: CoexistenceVerdict,
    pub absorbed: bool,
    pub clock: SimClock,
    pub final_grid: SavedGrid,
}

/// What [`run_replicate`] ended with.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplicateStatus {
    Finished(Box<ReplicateOutcome>),
    /// Stopped by `halt_after`; the checkpoint holds the state.
    Halted {
        next: usize,
    },
}

enum Sim {
    Sites(Engine),
    Counts(CountEngine),
}

impl Sim {
    fn start(config: &ExperimentConfig, model: &ModelSpec, rng: &mut RandomStream) -> Result<Self> {
        let geometry = config.geometry()?;
        let stirring = config.run.stirring.map(StirringSpec::new).transpose()?;
        match model {
            ModelSpec::Site(m) => {
                let grid = config.initial.state_grid(geometry, m.alphabet(), rng)?;
                let engine = Engine::new(m.clone(), grid)?;
                Ok(Sim::Sites(match stirring {
                    Some(s) => engine.with_stirring(s),
                    None => engine,
                }))
            }
            ModelSpec::Counts(pd) => {
                if stirring.is_some() {
                    return Err(Error::Config(
                        "stirring applies to single-occupancy models".into(),
                    ));
                }
                let grid = config.initial.count_grid(geometry, rng)?;
                Ok(Sim::Counts(CountEngine::new(pd.clone(), grid)))
            }
        }
    }

    fn resume(config: &ExperimentConfig, model: &ModelSpec, ck: &Checkpoint) -> Result<Self> {
        let stirring = config.run.stirring.map(StirringSpec::new).transpose()?;
        match (model, &ck.grid) {
            (ModelSpec::Site(m), SavedGrid::Sites(tracked))
                if tracked.grid().alphabet() == m.alphabet() =>
            {
                Ok(Sim::Sites(Engine::from_parts(
                    m.clone(),
                    tracked.clone(),
                    ck.clock,
                    stirring,
                )))
            }
            (ModelSpec::Counts(pd), SavedGrid::Counts(grid)) => Ok(Sim::Counts(
                CountEngine::from_parts(pd.clone(), grid.clone(), ck.clock),
            )),
            _ => Err(Error::Checkpoint(
                "checkpoint grid does not fit the model".into(),
            )),
        }
    }

    fn empty_trace(&self) -> DensityTrace {
        match self {
            Sim::Sites(e) => DensityTrace::fractions(e.grid().alphabet()),
            Sim::Counts(_) => DensityTrace::counts(),
        }
    }

    fn advance_to(&mut self, t: f64, rng: &mut RandomStream) -> bool {
        match self {
            Sim::Sites(e) => e.advance_to(t, rng),
            Sim::Counts(e) => e.advance_to(t, rng),
        }
    }

    fn clock(&self) -> SimClock {
        match self {
            Sim::Sites(e) => *e.clock(),
            Sim::Counts(e) => *e.clock(),
        }
    }

    fn row(&self) -> Vec<f64> {
        match self {
            Sim::Sites(e) => e.grid().fractions(),
            Sim::Counts(e) => {
                let g = e.grid();
                let n = g.geometry().sites() as f64;
                vec![g.total_hawks() as f64 / n, g.total_doves() as f64 / n]
            }
        }
    }

    fn picture(&self) -> StateGrid {
        match self {
            Sim::Sites(e) => e.grid().clone(),
            Sim::Counts(e) => count_snapshot_grid(e.grid()),
        }
    }

    fn saved(&self) -> SavedGrid {
        match self {
            Sim::Sites(e) => SavedGrid::Sites(e.tracked().clone()),
            Sim::Counts(e) => SavedGrid::Counts(e.grid().clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Observation {
    time: f64,
    sample: bool,
    snapshot: bool,
}

fn schedule(config: &ExperimentConfig) -> Vec<Observation> {
    let mut obs: Vec<Observation> = config
        .sample_times()
        .into_iter()
        .map(|time| Observation {
            time,
            sample: true,
            snapshot: false,
        })
        .collect();
    for &time in &config.output.snapshots {
        match obs.iter_mut().find(|o| o.time == time) {
            Some(o) => o.snapshot = true,
            None => obs.push(Observation {
                time,
                sample: false,
                snapshot: true,
            }),
        }
    }
    obs.sort_by(|a, b| a.time.total_cmp(&b.time));
    obs
}

/// Identifies the part of a config that determines a replicate's path.
pub fn config_fingerprint(config: &ExperimentConfig) -> Result<u64> {
    let mut c = config.clone();
    c.run.replicates = 1;
    c.output.dir = None;
    c.output.csv = true;
    c.output.palette = None;
    c.output.checkpoint_secs = None;
    Ok(fingerprint(&c.to_toml()?))
}

pub fn trace_path(dir: &Path, replicate: u64) -> PathBuf {
    dir.join(format!("replicate_{replicate:03}.csv"))
}

pub fn snapshot_path(dir: &Path, replicate: u64, time: f64) -> PathBuf {
    dir.join(format!("replicate_{replicate:03}_t{time}.ppm"))
}

pub fn checkpoint_path(dir: &Path, replicate: u64) -> PathBuf {
    dir.join(format!("replicate_{replicate:03}.ckpt"))
}

/// Runs (or resumes) one replicate. Replicate `r` draws from stream
/// `(seed, r)`, so its output does not depend on which other replicates
/// run or in what order. Files are written only when `output.dir` is set.
pub fn run_replicate(
    config: &ExperimentConfig,
    model: &ModelSpec,
    replicate: u64,
    resume: Option<Checkpoint>,
    control: &RunControl,
) -> Result<ReplicateStatus> {
    let obs = schedule(config);
    let print = fingerprint_if_needed(config, &resume, control)?;
    let (mut sim, mut rng, mut trace, mut next, mut absorbed) = match resume {
        Some(ck) => {
            if Some(ck.fingerprint) != print
                || ck.replicate != replicate
                || ck.seed != config.run.seed
            {
                return Err(Error::Checkpoint(format!(
                    "checkpoint for replicate {} does not match this configuration",
                    ck.replicate
                )));
            }
            let sim = Sim::resume(config, model, &ck)?;
            let next = ck.next as usize;
            if next > obs.len() {
                return Err(Error::Checkpoint("checkpoint lies past the horizon".into()));
            }
            (sim, ck.rng(), ck.trace, next, ck.absorbed)
        }
        None => {
            let mut rng = RandomStream::new(config.run.seed, replicate);
            let sim = Sim::start(config, model, &mut rng)?;
            let trace = sim.empty_trace();
            (sim, rng, trace, 0, false)
        }
    };

    let dir = config.output.dir.as_deref();
    let palette = config.output.palette.as_deref().unwrap_or(&DEFAULT_PALETTE);
    let save =
        |sim: &Sim, rng: &RandomStream, trace: &DensityTrace, next: usize, absorbed: bool| {
            let path = control
                .checkpoint
                .as_deref()
                .ok_or_else(|| Error::Config("checkpointing needs a checkpoint path".into()))?;
            Checkpoint {
                fingerprint: print.expect("fingerprint computed with a checkpoint path"),
                replicate,
                seed: rng.seed(),
                stream: rng.index(),
                word_pos: rng.word_pos(),
                clock: sim.clock(),
                next: next as u64,
                absorbed,
                trace: trace.clone(),
                grid: sim.saved(),
            }
            .save(path)
        };

    let mut last_save = Instant::now();
    while next < obs.len() {
        if control.halt_after == Some(next) {
            save(&sim, &rng, &trace, next, absorbed)?;
            return Ok(ReplicateStatus::Halted { next });
        }
        let o = obs[next];
        absorbed |= sim.advance_to(o.time, &mut rng);
        if o.sample {
            trace.push(o.time, sim.row());
        }
        if o.snapshot {
            if let Some(dir) = dir {
                emit_snapshot(
                    &sim.picture(),
                    palette,
                    &snapshot_path(dir, replicate, o.time),
                )?;
            }
        }
        next += 1;
        if let Some(every) = control.every {
            if last_save.elapsed() >= every && next < obs.len() {
                save(&sim, &rng, &trace, next, absorbed)?;
                last_save = Instant::now();
            }
        }
    }

    let window = config.run.window_fraction * config.run.horizon;
    let verdict = detect_coexistence(&trace, config.run.threshold, window)?;
    if let Some(dir) = dir {
        if config.output.csv {
            emit_csv(&trace, &trace_path(dir, replicate))?;
        }
    }
    if let Some(path) = &control.checkpoint {
        if path.exists() {
            std::fs::remove_file(path).map_err(|e| Error::io(path, e))?;
        }
    }
    Ok(ReplicateStatus::Finished(Box::new(ReplicateOutcome {
        replicate,
        trace,
        verdict,
        absorbed,
        clock: sim.clock(),
        final_grid: sim.saved(),
    })))
}

fn fingerprint_if_needed(
    config: &ExperimentConfig,
    resume: &Option<Checkpoint>,
    control: &RunControl,
) -> Result<Option<u64>> {
    let needed = resume.is_some() || control.every.is_some() || control.halt_after.is_some();
    if needed && control.checkpoint.is_none() && resume.is_none() {
        return Err(Error::Config(
            "checkpointing needs an output directory".into(),
        ));
    }
    needed.then(|| config_fingerprint(config)).transpose()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub model: &'static str,
    pub replicates: Vec<ReplicateOutcome>,
    /// Trace columns that count as species in the coexistence verdict.
    pub species: Vec<usize>,
}

impl ExperimentResult {
    pub fn coexisting(&self) -> usize {
        self.replicates
            .iter()
            .filter(|r| r.verdict.all_persist(&self.species))
            .count()
    }

    /// One row per replicate, in replicate order.
    pub fn summary_csv(&self) -> String {
        let Some(first) = self.replicates.first() else {
            return "replicate,absorbed,events,coexist\n".into();
        };
        let cols = first.trace.columns();
        let mut out = String::from("replicate,absorbed,events");
        for c in cols {
            out.push_str(&format!(",final_{c}"));
        }
        for c in cols {
            out.push_str(&format!(",persist_{c}"));
        }
        out.push_str(",coexist\n");
        for r in &self.replicates {
            out.push_str(&format!(
                "{},{},{}",
                r.replicate, r.absorbed, r.clock.events
            ));
            let last = r
                .trace
                .last()
                .map(|(_, row)| row.to_vec())
                .unwrap_or_default();
            for v in last {
                out.push_str(&format!(",{v}"));
            }
            for p in &r.verdict.persists {
                out.push_str(&format!(",{p}"));
            }
            out.push_str(&format!(",{}\n", r.verdict.all_persist(&self.species)));
        }
        out
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every replicate of `config`, resuming any checkpoints found in the
/// output directory, and writes `summary.csv` there.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentResult> {
    config.validate()?;
    let model = config.build_model()?;
    let pool = pool(threads)?;
    let replicates = pool.install(|| {
        (0..config.run.replicates)
            .into_par_iter()
            .map(|r| run_one(config, &model, r))
            .collect::<Result<Vec<_>>>()
    })?;
    finish(config, &model, replicates)
}

fn run_one(config: &ExperimentConfig, model: &ModelSpec, r: u64) -> Result<ReplicateOutcome> {
    let dir = config.output.dir.as_deref();
    let checkpoint = dir.map(|d| checkpoint_path(d, r));
    let resume = match &checkpoint {
        Some(p) if p.exists() => Some(Checkpoint::load(p)?),
        _ => None,
    };
    let control = RunControl {
        every: config.output.checkpoint_secs.map(Duration::from_secs_f64),
        checkpoint: checkpoint
            .filter(|_| config.output.checkpoint_secs.is_some() || resume.is_some()),
        halt_after: None,
    };
    match run_replicate(config, model, r, resume, &control)? {
        ReplicateStatus::Finished(o) => Ok(*o),
        ReplicateStatus::Halted { .. } => unreachable!("no halt requested"),
    }
}

fn finish(
    config: &ExperimentConfig,
    model: &ModelSpec,
    replicates: Vec<ReplicateOutcome>,
) -> Result<ExperimentResult> {
    let alphabet = match model {
        ModelSpec::Site(m) => m.alphabet(),
        ModelSpec::Counts(_) => 2,
    };
    let result = ExperimentResult {
        model: model.name(),
        replicates,
        species: species_codes(model.name(), alphabet),
    };
    if let Some(dir) = &config.output.dir {
        atomic_write(&dir.join("summary.csv"), result.summary_csv().as_bytes())?;
    }
    Ok(result)
}

/// Aggregate over the replicates of one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub replicates: usize,
    pub coexisting: usize,
    /// Fraction of replicates in which each column persisted.
    pub persistence: Vec<f64>,
    /// Final densities averaged over replicates.
    pub mean_final: Vec<f64>,
}

impl SweepRow {
    fn from_result(value: f64, result: &ExperimentResult) -> Self {
        let n = result.replicates.len();
        let k = result
            .replicates
            .first()
            .map_or(0, |r| r.trace.columns().len());
        let mut persistence = vec![0.0; k];
        let mut mean_final = vec![0.0; k];
        for r in &result.replicates {
            for i in 0..k {
                persistence[i] += r.verdict.persists[i] as u8 as f64 / n as f64;
                mean_final[i] += r.trace.last().map_or(0.0, |(_, row)| row[i]) / n as f64;
            }
        }
        Self {
            value,
            replicates: n,
            coexisting: result.coexisting(),
            persistence,
            mean_final,
        }
    }
}

pub fn sweep_csv(axis: &str, columns: &[String], rows: &[SweepRow]) -> String {
    let mut out = format!("{axis},replicates,coexisting");
    for c in columns {
        out.push_str(&format!(",persist_{c}"));
    }
    for c in columns {
        out.push_str(&format!(",mean_{c}"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}", r.value, r.replicates, r.coexisting));
        for v in r.persistence.iter().chain(&r.mean_final) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Runs `template` once per value of parameter `axis`. Rows come back in
/// the order of `values`; each point writes into `<dir>/<axis>_<value>`
/// and the table goes to `<dir>/sweep_<axis>.csv`.
pub fn sweep(
    template: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = template.clone();
            c.set_param(axis, v)?;
            if let Some(dir) = &template.output.dir {
                c.output.dir = Some(dir.join(format!("{axis}_{v}")));
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let models = configs
        .iter()
        .map(|c| c.build_model())
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.run.replicates).map(move |r| (i, r)))
        .collect();
    let outcomes = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|&(i, r)| run_one(&configs[i], &models[i], r))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut outcomes = outcomes.into_iter();
    let mut rows = Vec::with_capacity(values.len());
    let mut columns = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        let reps: Vec<_> = outcomes.by_ref().take(c.run.replicates as usize).collect();
        let result = finish(c, &models[i], reps)?;
        if let Some(r) = result.replicates.first() {
            columns = r.trace.columns().to_vec();
        }
        rows.push(SweepRow::from_result(values[i], &result));
    }
    if let Some(dir) = &template.output.dir {
        atomic_write(
            &dir.join(format!("sweep_{axis}.csv")),
            sweep_csv(axis, &columns, &rows).as_bytes(),
        )?;
    }
    Ok(rows)
}
