//! Electronic-structure input: integrals, fermionic Hamiltonians and their qubit images.

pub mod fcidump;
pub mod fermion;
pub mod hamiltonian;

pub use fcidump::{emit_fcidump, parse_fcidump, read_fcidump, IntegralData};
pub use fermion::{jordan_wigner, jordan_wigner_raw, FermionOperator, FermionTerm, Ladder};
pub use hamiltonian::{
    build_active_hamiltonian, excitation_operator, fock_hamiltonian, fold_core, hf_bitstring,
    molecular_hamiltonian, number_operator, spin_orbital, spin_orbital_energies,
    transverse_hamiltonian,
};
