//! Fermion-to-qubit machinery: ladder operators, the Jordan-Wigner
//! transform, Pauli-sum algebra and a dense statevector backend.

pub mod fermion;
pub mod pauli;
pub mod statevector;

pub use fermion::{
    expand_to_spin_orbitals, jordan_wigner, FermionOperator, FermionTerm, LadderKind, LadderOp,
};
pub use pauli::{PauliAxes, PauliAxis, PauliSum, QubitError};
pub use statevector::{Statevector, MAX_QUBITS};
