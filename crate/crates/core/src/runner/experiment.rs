use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{AnsatzConfig, ExperimentConfig, InitialHamiltonian, StartKind};
use super::hash_hex;
use crate::ansatz::{build_hea, build_uccsd, hf_params_for_hea, plus_params_for_hea, ParamCircuit};
use crate::chemistry::{
    fock_hamiltonian, hf_bitstring, molecular_hamiltonian, read_fcidump, spin_orbital_energies, transverse_hamiltonian,
};
use crate::continuation::{run_observed, ContinuationProblem, Corrector, Predictor, RunTrace};
use crate::derivatives::EnergyFunctional;
use crate::error::{Error, Result};
use crate::exact;
use crate::optimizers::{vqe, LbfgsConfig, OptimizerConfig};
use crate::pauli::Observable;

/// Largest error still counted as chemically accurate, in hartree.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;

/// Qubit Hamiltonian of an active space, as cached by the `hamiltonian` verb.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CachedHamiltonian {
    pub source: String,
    pub n_orbitals: usize,
    pub n_electrons: usize,
    /// Spatial orbital energies of the active orbitals.
    pub orbital_energies: Option<Vec<f64>>,
    pub hf_bitstring: String,
    pub e_fci: f64,
    pub observable: serde_json::Value,
}

#[derive(Clone, Debug)]
pub struct MolecularProblem {
    pub h1: Observable,
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub orbital_energies: Option<Vec<f64>>,
    pub hf_bitstring: String,
}

impl MolecularProblem {
    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals
    }

    pub fn to_cached(&self, source: &str) -> Result<CachedHamiltonian> {
        Ok(CachedHamiltonian {
            source: source.to_string(),
            n_orbitals: self.n_orbitals,
            n_electrons: self.n_electrons,
            orbital_energies: self.orbital_energies.clone(),
            hf_bitstring: self.hf_bitstring.clone(),
            e_fci: exact::ground_energy(&self.h1)?,
            observable: self.h1.to_json(),
        })
    }
}

impl CachedHamiltonian {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Reads an FCIDUMP, or a cached `.json` Hamiltonian.
pub fn load_hamiltonian(path: &Path) -> Result<MolecularProblem> {
    if !path.exists() {
        return Err(Error::Config(format!("Hamiltonian file {} not found", path.display())));
    }
    if path.extension().is_some_and(|e| e == "json") {
        let cached: CachedHamiltonian = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let h1 = Observable::from_json_str(&cached.observable.to_string())?;
        return Ok(MolecularProblem {
            h1,
            n_orbitals: cached.n_orbitals,
            n_electrons: cached.n_electrons,
            orbital_energies: cached.orbital_energies,
            hf_bitstring: cached.hf_bitstring,
        });
    }
    let data = read_fcidump(path)?;
    let h1 = molecular_hamiltonian(&data)?;
    let n_qubits = 2 * data.n_orbitals;
    Ok(MolecularProblem {
        h1,
        n_orbitals: data.n_orbitals,
        n_electrons: data.n_electrons,
        orbital_energies: data.orbital_energies.clone(),
        hf_bitstring: hf_bitstring(data.n_electrons, n_qubits)?,
    })
}

pub fn initial_hamiltonian(kind: InitialHamiltonian, mol: &MolecularProblem) -> Result<Observable> {
    match kind {
        InitialHamiltonian::Fock => {
            let e = mol.orbital_energies.as_ref().ok_or_else(|| {
                Error::Config("Fock initial Hamiltonian needs orbital energies (ORBENERGIES)".into())
            })?;
            if e.len() != mol.n_orbitals {
                return Err(Error::Config(format!(
                    "{} orbital energies for {} orbitals",
                    e.len(),
                    mol.n_orbitals
                )));
            }
            fock_hamiltonian(&spin_orbital_energies(e))
        }
        InitialHamiltonian::Transverse => transverse_hamiltonian(mol.n_qubits()),
    }
}

pub fn build_ansatz(cfg: &AnsatzConfig, mol: &MolecularProblem) -> Result<ParamCircuit> {
    match *cfg {
        AnsatzConfig::Hea { layers } => build_hea(mol.n_qubits(), layers),
        AnsatzConfig::Uccsd => build_uccsd(mol.n_orbitals, mol.n_electrons, &mol.hf_bitstring),
    }
}

/// Everything a run needs, assembled from a config.
#[derive(Debug)]
pub struct PreparedExperiment {
    pub functional: EnergyFunctional,
    pub molecule: MolecularProblem,
    pub theta_start: Vec<f64>,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedExperiment> {
    cfg.validate()?;
    let mol = load_hamiltonian(&cfg.hamiltonian_path())?;
    let h0 = initial_hamiltonian(cfg.initial, &mol)?;
    let circuit = build_ansatz(&cfg.ansatz, &mol)?;
    let f = EnergyFunctional::new(circuit, h0, mol.h1.clone(), cfg.schedule)?;
    let n = mol.n_qubits();
    let theta_start = match (cfg.effective_start(), cfg.ansatz) {
        (StartKind::Zero, _) => vec![0.0; f.n_params()],
        (StartKind::Hf, AnsatzConfig::Hea { layers }) => hf_params_for_hea(n, layers, &mol.hf_bitstring)?,
        (StartKind::Plus, AnsatzConfig::Hea { layers }) => plus_params_for_hea(n, layers)?,
        (StartKind::Relaxed, AnsatzConfig::Hea { layers }) => {
            let mut theta = plus_params_for_hea(n, layers)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0F_5747);
            let d = cfg.relax_perturbation;
            if d > 0.0 {
                theta.iter_mut().for_each(|v| *v += rng.random_range(-d..d));
            }
            let relax = OptimizerConfig::Lbfgs(LbfgsConfig {
                max_iter: 2000,
                ..LbfgsConfig::default()
            });
            vqe(&f, 0.0, &theta, &relax)?.theta_final
        }
        (s, a) => {
            return Err(Error::Config(format!("start '{}' does not apply to {}", s.name(), a.name())));
        }
    };
    Ok(PreparedExperiment {
        functional: f,
        molecule: mol,
        theta_start,
    })
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub key: String,
    pub hamiltonian: String,
    pub bond_length: Option<f64>,
    pub initial: String,
    pub start: String,
    pub ansatz: String,
    pub layers: Option<usize>,
    pub schedule: String,
    pub steps: usize,
    pub method: String,
    pub predictor: String,
    pub corrector: String,
    pub optimizer: String,
    pub seed: u64,
    pub n_qubits: usize,
    pub n_params: usize,
    #[serde(rename = "E_final")]
    pub e_final: f64,
    #[serde(rename = "E_FCI")]
    pub e_fci: f64,
    pub abs_error: f64,
    pub chem_acc_met: bool,
    pub wall_time_s: f64,
    pub predictor_calls: usize,
    pub corrector_calls: usize,
    pub evaluations: u64,
    /// Step flags raised during the run, `;`-separated and deduplicated.
    pub flags: String,
}

impl ResultRow {
    /// Recomputes the derived error columns from the two energies.
    pub fn finalize(mut self) -> Self {
        self.abs_error = (self.e_final - self.e_fci).abs();
        self.chem_acc_met = self.abs_error <= CHEMICAL_ACCURACY;
        self
    }

    pub fn without_timing(&self) -> ResultRow {
        ResultRow {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

/// Stable identity of a config: hash of its canonical JSON form, output
/// location excluded.
pub fn config_key(cfg: &ExperimentConfig) -> Result<String> {
    let mut v = serde_json::to_value(cfg)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("out");
    }
    Ok(hash_hex(v.to_string().as_bytes())[..16].to_string())
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub row: ResultRow,
    pub trace: RunTrace,
    pub theta_final: Vec<f64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let clock = Instant::now();
    let key = config_key(cfg)?;
    let method = cfg.method_config()?;
    let prep = prepare(cfg)?;
    let f = &prep.functional;
    let problem = ContinuationProblem::new(f, prep.theta_start.clone(), cfg.steps, cfg.unchecked)?
        .with_seed(cfg.seed)
        .with_oracle(cfg.oracle);
    let (theta_final, trace) = run_observed(&problem, &method, |r| {
        log::debug!("step {} t = {:.3} E = {:.10}", r.step, r.t, r.energy);
    })?;
    let e_final = f.energy(&theta_final, 1.0)?;
    let e_fci = exact::ground_energy(&prep.molecule.h1)?;
    let mut flags: Vec<String> = trace.records.iter().flat_map(|r| r.flags.iter().cloned()).collect();
    flags.sort();
    flags.dedup();
    let row = ResultRow {
        key,
        hamiltonian: cfg.hamiltonian.display().to_string(),
        bond_length: cfg.bond_length,
        initial: cfg.initial.name().into(),
        start: cfg.effective_start().name().into(),
        ansatz: cfg.ansatz.name().into(),
        layers: cfg.ansatz.layers(),
        schedule: cfg.schedule.name().to_string(),
        steps: cfg.steps,
        method: method.method_name().into(),
        predictor: method.predictor.name().into(),
        corrector: method.corrector.name(),
        optimizer: cfg.optimizer.name().into(),
        seed: cfg.seed,
        n_qubits: prep.molecule.n_qubits(),
        n_params: f.n_params(),
        e_final,
        e_fci,
        abs_error: 0.0,
        chem_acc_met: false,
        wall_time_s: clock.elapsed().as_secs_f64(),
        predictor_calls: if method.predictor == Predictor::None { 0 } else { cfg.steps },
        corrector_calls: if method.corrector == Corrector::None { 0 } else { cfg.steps },
        evaluations: f.evaluations(),
        flags: flags.join(";"),
    }
    .finalize();
    Ok(ExperimentOutcome { row, trace, theta_final })
}

/// Appends rows to a CSV table, writing the header if the file is new or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    if rows.is_empty() {
        w.write_record(RESULT_COLUMNS).map_err(csv_error)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub const RESULT_COLUMNS: [&str; 25] = [
    "key",
    "hamiltonian",
    "bond_length",
    "initial",
    "start",
    "ansatz",
    "layers",
    "schedule",
    "steps",
    "method",
    "predictor",
    "corrector",
    "optimizer",
    "seed",
    "n_qubits",
    "n_params",
    "E_final",
    "E_FCI",
    "abs_error",
    "chem_acc_met",
    "wall_time_s",
    "predictor_calls",
    "corrector_calls",
    "evaluations",
    "flags",
];

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("results table: {other:?}")),
    }
}

/// Writes the trace files and appends the row to `out/results.csv`.
pub fn persist_outcome(out: &Path, outcome: &ExperimentOutcome) -> Result<PathBuf> {
    let traces = out.join("traces");
    outcome.trace.write_all(&traces, &outcome.row.key)?;
    let results = out.join("results.csv");
    append_rows(&results, std::slice::from_ref(&outcome.row))?;
    Ok(results)
}
