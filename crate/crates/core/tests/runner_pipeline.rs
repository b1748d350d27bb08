use std::path::PathBuf;

use homotopy_vqe::chemistry::{emit_fcidump, read_fcidump};
use homotopy_vqe::exact::ground_energy;
use homotopy_vqe::runner::sweep::cell_seed;
use homotopy_vqe::runner::{
    emit_plotdata, load_hamiltonian, persist_outcome, read_rows, run_experiment, run_sweep, ExperimentConfig,
    PlotKind, SweepConfig, SweepOptions, CHEMICAL_ACCURACY,
};
use homotopy_vqe::Error;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/beh2").join(name)
}

/// Small transverse-start run; lines of `extra` replace base lines with the same key.
fn quick_config(extra: &str) -> ExperimentConfig {
    let path = data("beh2_r1.326.fcidump");
    let mut lines = vec![
        format!("hamiltonian = \"{}\"", path.display()),
        "bond_length = 1.326".to_string(),
        "initial = \"transverse\"".to_string(),
        "ansatz = { kind = \"hea\", layers = 1 }".to_string(),
        "method = \"aavqe\"".to_string(),
        "optimizer = { kind = \"lbfgs\", max_iter = 40 }".to_string(),
        "steps = 2".to_string(),
    ];
    for e in extra.lines().filter(|l| !l.trim().is_empty()) {
        let key = e.split('=').next().unwrap().trim();
        lines.retain(|l| l.split('=').next().unwrap().trim() != key);
        lines.push(e.to_string());
    }
    ExperimentConfig::from_toml_str(&lines.join("\n")).unwrap()
}

#[test]
fn config_rejects_unknown_fields_and_bad_values() {
    let err = ExperimentConfig::from_toml_str("hamiltonian = \"x\"\nansatz = { kind = \"uccsd\" }\nmethod = \"aavqe\"\nstepz = 3\n")
        .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = ExperimentConfig::from_toml_str("hamiltonian = \"x\"\nansatz = { kind = \"uccsd\" }\nmethod = \"qaoa\"\n")
        .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = ExperimentConfig::from_toml_str(
        "hamiltonian = \"x\"\nansatz = { kind = \"uccsd\" }\nmethod = \"aavqe\"\nstart = \"hf\"\n",
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = ExperimentConfig::from_toml_str("hamiltonian = \"x\"\nansatz = { kind = \"hea\", layers = 0 }\nmethod = \"vaqc\"\n")
        .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn missing_file_is_a_config_error() {
    let mut cfg = quick_config("");
    cfg.hamiltonian = PathBuf::from("/nonexistent/h.fcidump");
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn fock_without_orbital_energies_is_a_config_error() {
    let mut d = read_fcidump(data("beh2_r1.326.fcidump")).unwrap();
    d.orbital_energies = None;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plain.fcidump");
    std::fs::write(&path, emit_fcidump(&d)).unwrap();
    let mut cfg = quick_config("initial = \"fock\"\nstart = \"hf\"");
    cfg.hamiltonian = path.clone();
    assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    // the transverse initial Hamiltonian does not need them
    let mut cfg = quick_config("");
    cfg.hamiltonian = path;
    assert!(run_experiment(&cfg).is_ok());
}

#[test]
fn relative_paths_follow_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    std::fs::create_dir_all(&sub).unwrap();
    std::fs::copy(data("beh2_r1.5.fcidump"), dir.path().join("h.fcidump")).unwrap();
    std::fs::write(
        sub.join("run.toml"),
        "hamiltonian = \"../h.fcidump\"\nansatz = { kind = \"uccsd\" }\nmethod = \"aavqe\"\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(sub.join("run.toml")).unwrap();
    assert!(cfg.hamiltonian_path().exists());
}

#[test]
fn runs_are_reproducible_and_rows_consistent() {
    let cfg = quick_config("seed = 11");
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.row.without_timing(), b.row.without_timing());
    let r = &a.row;
    assert_eq!(r.abs_error, (r.e_final - r.e_fci).abs());
    assert_eq!(r.chem_acc_met, r.abs_error <= CHEMICAL_ACCURACY);
    assert_eq!(r.corrector_calls, 2);
    assert_eq!(r.predictor_calls, 0);
    assert_eq!(r.n_params, 32);
    assert!(r.e_final >= r.e_fci - 1e-9);

    // L-BFGS from the |+⟩ angles is seed-free; the noisy optimizer is not
    let nsgd = "optimizer = { kind = \"nsgd\", epochs = 20 }";
    let x = run_experiment(&quick_config(&format!("seed = 11\n{nsgd}"))).unwrap();
    let y = run_experiment(&quick_config(&format!("seed = 12\n{nsgd}"))).unwrap();
    assert_ne!(x.row.e_final, y.row.e_final);
}

#[test]
fn persisted_rows_round_trip_and_errors_recheck() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&quick_config("")).unwrap();
    let b = run_experiment(&quick_config("method = \"vaqc\"")).unwrap();
    persist_outcome(dir.path(), &a).unwrap();
    persist_outcome(dir.path(), &b).unwrap();
    let rows = read_rows(&dir.path().join("results.csv")).unwrap();
    assert_eq!(rows, vec![a.row.clone(), b.row.clone()]);
    assert!(dir.path().join(format!("traces/{}.jsonl", a.row.key)).exists());
    // oracle re-check from the Hamiltonian file alone
    let mol = load_hamiltonian(&data("beh2_r1.326.fcidump")).unwrap();
    let e_fci = ground_energy(&mol.h1).unwrap();
    for r in rows {
        assert!(((r.e_final - e_fci).abs() - r.abs_error).abs() < 1e-12);
    }
}

#[test]
fn cached_hamiltonian_matches_fcidump() {
    let mol = load_hamiltonian(&data("beh2_r2.fcidump")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let cached = mol.to_cached("beh2_r2.fcidump").unwrap();
    cached.write(&path).unwrap();
    let back = load_hamiltonian(&path).unwrap();
    assert_eq!(back.h1, mol.h1);
    assert_eq!(back.orbital_energies, mol.orbital_energies);
    assert_eq!(back.hf_bitstring, "11110000");
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data("beh2_r2.json")).unwrap()).unwrap();
    assert!((cached.e_fci - sidecar["e_fci"].as_f64().unwrap()).abs() < 1e-6);
}

#[test]
fn hf_start_on_fock_is_refused() {
    let mut cfg = quick_config("initial = \"fock\"\nstart = \"hf\"");
    assert!(matches!(run_experiment(&cfg), Err(Error::Guard(_))));
    cfg.unchecked = true;
    let out = run_experiment(&cfg).unwrap();
    // nothing can move the start: every step reports the Hartree–Fock energy
    let mol = load_hamiltonian(&data("beh2_r1.326.fcidump")).unwrap();
    let hf = homotopy_vqe::statevector::StateVector::init_basis(8, "11110000").unwrap();
    let e_hf = hf.expectation(&mol.h1).unwrap();
    assert!((out.row.e_final - e_hf).abs() < 1e-10);
}

fn sweep_text(axes: &str) -> String {
    format!(
        r#"
hamiltonian_template = "{dir}/beh2_r{{r}}.fcidump"
master_seed = 5

[base]
hamiltonian = "{dir}/beh2_r1.326.fcidump"
ansatz = {{ kind = "hea", layers = 1 }}
initial = "transverse"
method = "aavqe"
optimizer = {{ kind = "lbfgs", max_iter = 20 }}
oracle = false

[axes]
{axes}
"#,
        dir = data("").display().to_string().trim_end_matches('/')
    )
}

#[test]
fn sweep_covers_grid_and_resumes_identically() {
    let cfg = SweepConfig::from_toml_str(&sweep_text(
        "bond_length = [1.326, 3.0]\nlayers = [1, 2]\nschedule = [\"linear\", \"cubic\"]",
    ))
    .unwrap();
    assert_eq!(cfg.cells().unwrap().len(), 8);

    let full = tempfile::tempdir().unwrap();
    let report = run_sweep(&cfg, full.path(), &SweepOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 8);
    assert!(report.failures.is_empty());

    let partial = tempfile::tempdir().unwrap();
    let opts = SweepOptions {
        jobs: Some(2),
        limit: Some(3),
        ..Default::default()
    };
    let first = run_sweep(&cfg, partial.path(), &opts).unwrap();
    assert_eq!(first.rows.len(), 3);
    let second = run_sweep(&cfg, partial.path(), &SweepOptions::default()).unwrap();
    assert_eq!(second.resumed, 3);
    assert_eq!(second.executed, 5);

    let strip = |rows: Vec<homotopy_vqe::runner::ResultRow>| -> Vec<_> { rows.iter().map(|r| r.without_timing()).collect() };
    let a = strip(read_rows(&full.path().join("results.csv")).unwrap());
    let b = strip(read_rows(&partial.path().join("results.csv")).unwrap());
    assert_eq!(a, b);

    // plot tables from the sweep
    let plots = tempfile::tempdir().unwrap();
    let rows = read_rows(&full.path().join("results.csv")).unwrap();
    let files = emit_plotdata(&rows, PlotKind::Heatmap, plots.path()).unwrap();
    assert_eq!(files.len(), 1);
    let heat = std::fs::read_to_string(plots.path().join("heatmap_transverse.csv")).unwrap();
    assert_eq!(heat.lines().next().unwrap(), "layers,r,error_mha");
    assert_eq!(heat.lines().count(), 5);
    emit_plotdata(&rows, PlotKind::DissociationCurve, plots.path()).unwrap();
    let curve = std::fs::read_to_string(plots.path().join("dissociation_curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "r,method,E_final,E_FCI,abs_error");
    emit_plotdata(&rows, PlotKind::BoxplotSummary, plots.path()).unwrap();
    let boxes = std::fs::read_to_string(plots.path().join("boxplot_summary.csv")).unwrap();
    let lines: Vec<&str> = boxes.lines().collect();
    assert_eq!(lines[0], "regime,method,median,q1,q3");
    assert!(lines[1].starts_with("near_equilibrium,AAVQE,"));
    assert!(lines[2].starts_with("far_dissociation,AAVQE,"));
}

#[test]
fn seeds_do_not_depend_on_grid_order() {
    let a = SweepConfig::from_toml_str(&sweep_text("layers = [1, 2]\nsteps = [1, 3]")).unwrap();
    let b = SweepConfig::from_toml_str(&sweep_text("steps = [3, 1]\nlayers = [2, 1]")).unwrap();
    let mut sa: Vec<u64> = a.cells().unwrap().iter().map(|c| c.seed).collect();
    let mut sb: Vec<u64> = b.cells().unwrap().iter().map(|c| c.seed).collect();
    sa.sort();
    sb.sort();
    assert_eq!(sa, sb);
    let cell = &a.cells().unwrap()[0];
    assert_ne!(cell_seed(cell, 5, 0).unwrap(), cell_seed(cell, 5, 1).unwrap());
}

#[test]
fn failing_cells_are_recorded_and_the_sweep_continues() {
    let cfg = SweepConfig::from_toml_str(&sweep_text("initial = [\"fock\", \"transverse\"]")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&cfg, dir.path(), &SweepOptions::default()).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.failures.len(), 1);
    assert!(report.failures[0].1.contains("guard"));
    let failures = std::fs::read_to_string(dir.path().join("failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
}

#[test]
fn empty_grid_gives_empty_table() {
    let cfg = SweepConfig::from_toml_str(&sweep_text("layers = []")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&cfg, dir.path(), &SweepOptions::default()).unwrap();
    assert!(report.rows.is_empty() && report.failures.is_empty());
    let rows = read_rows(&dir.path().join("results.csv")).unwrap();
    assert!(rows.is_empty());
    assert!(emit_plotdata(&rows, PlotKind::Heatmap, dir.path()).is_err());
}

#[test]
fn uccsd_ignores_layer_axis() {
    let text = sweep_text("layers = [1, 2, 3]").replace("kind = \"hea\", layers = 1", "kind = \"uccsd\"");
    let cfg = SweepConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg.cells().unwrap().len(), 1);
}
