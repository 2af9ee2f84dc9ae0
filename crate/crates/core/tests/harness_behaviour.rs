use std::path::Path;
use std::process::Command;

use coexist::harness::experiment::{checkpoint_path, run_replicate, ReplicateStatus, RunControl};
use coexist::harness::{
    compare_stirring, run_experiment, DensityTrace, ExperimentConfig, StirringSetup,
};

const CYCLIC: &str = r#"
[model]
name = "voter"

[params]
betas = [0.3, 0.7, 1.0]

[geometry]
width = 24
height = 24

[initial]
kind = "random"
densities = [0.34, 0.33, 0.33]

[run]
horizon = 6.0
sample_interval = 0.5
replicates = 3
seed = 9

[output]
snapshots = [2.0, 6.0]
"#;

fn config_in(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_toml(CYCLIC).unwrap();
    c.output.dir = Some(dir.to_path_buf());
    c
}

/// Every file in `dir`, sorted by name, with its bytes.
fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn reruns_write_identical_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config_in(a.path()), Some(1)).unwrap();
    run_experiment(&config_in(b.path()), Some(2)).unwrap();
    let (fa, fb) = (files(a.path()), files(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"replicate_000.csv"));
    assert!(names.contains(&"replicate_002_t6.ppm"));
    assert!(names.contains(&"summary.csv"));
    assert_eq!(fa, fb);
}

#[test]
fn replicate_output_ignores_the_other_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let full = run_experiment(&config_in(dir.path()), None).unwrap();
    let mut alone = ExperimentConfig::from_toml(CYCLIC).unwrap();
    alone.output.snapshots.clear();
    let model = alone.build_model().unwrap();
    for r in [2, 0] {
        let ReplicateStatus::Finished(o) =
            run_replicate(&alone, &model, r, None, &RunControl::default()).unwrap()
        else {
            panic!("not finished")
        };
        assert_eq!(o.trace, full.replicates[r as usize].trace);
        assert_eq!(o.clock, full.replicates[r as usize].clock);
    }
}

#[test]
fn interrupted_experiment_resumes_to_the_same_files() {
    let (clean, broken) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config_in(clean.path()), Some(1)).unwrap();

    let config = config_in(broken.path());
    let model = config.build_model().unwrap();
    let ck = checkpoint_path(broken.path(), 1);
    let control = RunControl {
        checkpoint: Some(ck.clone()),
        halt_after: Some(5),
        ..RunControl::default()
    };
    let status = run_replicate(&config, &model, 1, None, &control).unwrap();
    assert!(matches!(status, ReplicateStatus::Halted { next: 5 }));
    assert!(ck.exists());

    run_experiment(&config, Some(1)).unwrap();
    assert!(!ck.exists());
    assert_eq!(files(clean.path()), files(broken.path()));
}

#[test]
fn first_row_echoes_the_seeding() {
    let mut c = ExperimentConfig::from_toml(CYCLIC).unwrap();
    c.initial = coexist::harness::InitialCondition::Uniform { state: 1 };
    c.output.snapshots.clear();
    let result = run_experiment(&c, Some(1)).unwrap();
    for r in &result.replicates {
        assert_eq!(r.trace.times()[0], 0.0);
        assert_eq!(r.trace.rows()[0], vec![0.0, 1.0, 0.0]);
        // Proposals still happen, but a single type never changes.
        assert_eq!(r.clock.events, 0);
        assert!(r.trace.rows().iter().all(|row| row == &[0.0, 1.0, 0.0]));
    }
}

#[test]
fn empty_trace_is_a_header() {
    let t = DensityTrace::fractions(3);
    let csv = t.to_csv();
    assert_eq!(csv.lines().count(), 1);
    assert_eq!(DensityTrace::from_csv(&csv).unwrap(), t);
}

#[test]
fn faster_stirring_matches_the_pde() {
    for beta in [4.2, 5.0] {
        for seed in [1, 2] {
            let setup = StirringSetup {
                seed,
                ..StirringSetup::default()
            };
            let c = compare_stirring(beta, 0.1, &setup).unwrap();
            assert!(
                c.direction_agrees(),
                "beta {beta} seed {seed}: {:?} vs {:?}",
                c.sim_mean,
                c.pde_mean
            );
            assert!(c.front_agrees(), "beta {beta} seed {seed}");
        }
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_coexist"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cyclic.toml");
    std::fs::write(&config, CYCLIC).unwrap();
    let config = config.to_str().unwrap();

    let (code, stdout) = cli(&["sim", "--config", config, "--replicates", "1"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("replicate,absorbed,events"));

    let (code, stdout) = cli(&["fixed-points", "--model", "sexual", "--param", "beta=4.5"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 4);

    assert_eq!(cli(&["bogus"]).0, 2);
    assert_eq!(cli(&["speed", "--critical", "4.3"]).0, 2);
    assert_eq!(cli(&["sim"]).0, 2);
    assert_eq!(cli(&["fixed-points", "--model", "nope"]).0, 3);
    assert_eq!(cli(&["sim", "--config", "/nonexistent/x.toml"]).0, 4);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, CYCLIC.replace("horizon = 6.0", "horizon = -1.0")).unwrap();
    assert_eq!(cli(&["sim", "--config", bad.to_str().unwrap()]).0, 2);
}
