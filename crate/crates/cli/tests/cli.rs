use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};
use tomo_cli::generate::{load_instance, MANIFEST};
use tomo_cli::reconstruct::{guard_violations, RECORDS_CSV, RECORDS_JSON};
use tomo_cli::{cmd_generate, cmd_rank_trap, cmd_reconstruct, ExperimentSpec, Manifest, RankTrapSpec};
use tomo_core::diagnostics::construct_spurious_t2;
use tomo_core::herm::random_density;
use tomo_core::objectives::{FitKind, Objective};
use tomo_core::operators::write_data_csv;
use tomo_core::solvers::{pgd_solve, PgdOptions};

fn spec(value: Value) -> ExperimentSpec {
    serde_json::from_value(value).unwrap()
}

fn small_spec() -> ExperimentSpec {
    spec(json!({
        "operator": {"kind": "pauli6"},
        "ensemble": {"count_per_rank": 2, "ranks": [1, 2], "dim": 2},
        "noise": {"scale": 500.0, "enabled": true},
        "solvers": [
            {"solver": "gm", "fit": "nll", "max_iter": 3000},
            {"solver": "gm", "fit": "l2", "max_iter": 3000},
            {"solver": "fgd", "fit": "nll", "max_iter": 3000},
            {"solver": "fgd", "fit": "nll", "rank": 1, "max_iter": 3000, "seed": 3},
            {"solver": "pgd", "fit": "l2"}
        ],
        "seed": 11
    }))
}

fn without_wall_time(records: &[tomo_cli::RunRecord]) -> Value {
    let mut v = serde_json::to_value(records).unwrap();
    for r in v.as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("wall_time");
    }
    v
}

#[test]
fn generate_writes_every_file_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(json!({
        "operator": {"kind": "homodyne_grid", "dim": 4, "bins": 20, "range": [-5.0, 5.0]},
        "ensemble": {"count_per_rank": 1, "ranks": [1, 2, 3, 4], "dim": 4},
        "seed": 5
    }));
    let m = cmd_generate(&s, dir.path()).unwrap();
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("truth_")).count(), 4);
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 8);
    assert!(names.iter().any(|n| n == MANIFEST));
    assert!(!names.iter().any(|n| n.ends_with(".tmp")));

    let loaded = Manifest::load(dir.path()).unwrap();
    assert_eq!(loaded, m);
    for entry in &m.instances {
        let inst = load_instance(dir.path(), entry).unwrap();
        assert_eq!(inst.truth.numerical_rank(1e-10).unwrap(), entry.rank);
        let noisy = inst.noisy.expect("noise enabled");
        for row in noisy.values().row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    // tampering is caught by the digest check
    let first = &m.instances[0];
    fs::write(dir.path().join(&first.exact.path), "0.5,0.5\n").unwrap();
    assert!(load_instance(dir.path(), first).is_err());
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = cmd_generate(&small_spec(), a.path()).unwrap();
    let mb = cmd_generate(&small_spec(), b.path()).unwrap();
    assert_eq!(ma.instances, mb.instances);
    let mut other = small_spec();
    other.seed += 1;
    let mc = cmd_generate(&other, b.path()).unwrap();
    assert_ne!(ma.instances[0].truth.sha256, mc.instances[0].truth.sha256);
}

#[test]
fn reconstruct_is_reproducible_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let s = small_spec();
    cmd_generate(&s, dir.path()).unwrap();
    let first = cmd_reconstruct(&s, dir.path()).unwrap();
    // 4 instances x 2 data kinds x 5 solvers
    assert_eq!(first.len(), 40);
    assert!(dir.path().join(RECORDS_CSV).exists() && dir.path().join(RECORDS_JSON).exists());
    let states = fs::read_dir(dir.path().join("states")).unwrap().count();
    // one state per record plus one reference per fit per noisy instance
    assert_eq!(states, 40 + 4 * 2);

    assert!(guard_violations(&first).is_empty());
    for r in &first {
        assert_eq!(r.trace_distance_oracle.is_some(), r.data == tomo_cli::DataKind::Noisy);
        assert!(r.trace_distance_truth.is_finite() && r.final_objective.is_finite());
    }
    let header = fs::read_to_string(dir.path().join(RECORDS_CSV)).unwrap();
    assert_eq!(
        header.lines().next().unwrap().split(',').collect::<Vec<_>>(),
        tomo_cli::records::RECORD_COLUMNS
    );

    let second = cmd_reconstruct(&s, dir.path()).unwrap();
    assert_eq!(without_wall_time(&first), without_wall_time(&second));
}

#[test]
fn reconstruct_needs_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_reconstruct(&small_spec(), dir.path()).is_err());
}

#[test]
fn rank_trap_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: RankTrapSpec = serde_json::from_value(json!({
        "operator": {"kind": "homodyne_grid", "dim": 3, "bins": 20, "range": [-5.0, 5.0]},
        "true_rank": 2,
        "count": 2,
        "max_iter": 2000,
        "seed": 1
    }))
    .unwrap();
    let out = cmd_rank_trap(&s, dir.path()).unwrap();
    assert_eq!(out.records.len(), 6);
    assert_eq!(out.summary.iter().map(|r| r.start_rank).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(out.summary.iter().all(|r| r.runs == 2));
    for f in ["rank_trap_records.csv", "rank_trap_summary.csv", "rank_trap.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    // rank one cannot reach a rank-two truth
    let low = &out.summary[0];
    assert!(low.median_trace_distance > 1e-3);

    s.start_ranks = Some(vec![0, 1]);
    assert!(cmd_rank_trap(&s, dir.path()).is_err());
}

fn tomo(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tomo")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn write_state(path: &Path, m: &tomo_core::herm::HermitianMatrix) {
    fs::write(path, serde_json::to_string(m).unwrap()).unwrap();
}

fn validate_config(dir: &Path, name: &str, state: &str) -> String {
    let path = dir.join(name);
    let cfg = json!({"operator": {"kind": "pauli6"}, "state": state, "data": "data.csv", "fit": "nll"});
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = construct_spurious_t2(0.5).unwrap();
    let mut csv = Vec::new();
    write_data_csv(&s.data, &mut csv).unwrap();
    fs::write(d.join("data.csv"), csv).unwrap();

    let obj = Objective::new(s.operator.clone(), s.data.clone(), FitKind::NegLogLikelihood).unwrap();
    let (solution, _) = pgd_solve(&tomo_core::herm::DensityLike::maximally_mixed(2, 1.0), &obj, &PgdOptions::default())
        .unwrap();
    write_state(&d.join("oracle.json"), solution.matrix());
    write_state(&d.join("fix.json"), s.rho_fix.matrix());
    write_state(&d.join("random.json"), random_density(2, 2, 99).unwrap().matrix());

    let cfg = validate_config(d, "v_oracle.json", "oracle.json");
    let out_dir = d.join("cert");
    let (code, stdout) = tomo(&["validate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let printed: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(printed["verdict"], "valid");
    let written: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(written, printed);

    let (code, stdout) = tomo(&["validate", "--config", &validate_config(d, "v_fix.json", "fix.json")]);
    assert_eq!(code, 2);
    let printed: Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(printed["verdict"], "spurious");
    assert!(printed["min_eig_Q_restricted"].as_f64().unwrap() < 0.0);

    let (code, _) = tomo(&["validate", "--config", &validate_config(d, "v_rand.json", "random.json")]);
    assert_eq!(code, 3);

    let (code, _) = tomo(&["validate", "--config", &validate_config(d, "v_missing.json", "missing.json")]);
    assert_eq!(code, 1);
    fs::write(d.join("broken.json"), "{").unwrap();
    assert_eq!(tomo(&["validate", "--config", d.join("broken.json").to_str().unwrap()]).0, 1);
    assert_eq!(tomo(&["frobnicate"]).0, 1);
    assert_eq!(tomo(&["--help"]).0, 0);
}

#[test]
fn binary_generate_honours_seed_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    fs::write(&cfg, serde_json::to_string(&small_spec()).unwrap()).unwrap();
    let out = dir.path().join("data");
    let (code, _) = tomo(&["generate", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = Manifest::load(&out).unwrap();
    assert_eq!((m.seed, m.spec.seed), (7, 7));
    assert_eq!(m.spec.output_dir, out);
}
