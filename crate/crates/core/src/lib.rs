//! Quantum-embedding simulation toolkit.
//!
//! The crate implements density matrix embedding over second-quantized
//! electron integrals, with two interchangeable high-level solvers for the
//! embedded fragment problems: an exact full-CI oracle and a simulated
//! energy-sorting variational quantum eigensolver (ESVQE).
//!
//! Everything numerical is generic over the scalar type through
//! [`scalar::Scalar`]; the aliases below pin the common `f64` instantiations.

pub mod dmet;
pub mod fci;
pub mod integrals;
pub mod linalg;
pub mod meanfield;
pub mod optim;
pub mod qubits;
pub mod rdm;
pub mod scalar;
pub mod vqe;

pub use scalar::Scalar;

/// Default `f64` instantiations of the main domain types.
pub type IntegralSet = integrals::IntegralSet<f64>;
pub type TwoBodyTensor = integrals::TwoBodyTensor<f64>;
pub type OverlapMatrix = integrals::OverlapMatrix<f64>;
pub type MeanFieldState = meanfield::MeanFieldState<f64>;
pub type CorrelationPotential = meanfield::CorrelationPotential<f64>;
pub type ScfConfig = meanfield::ScfConfig<f64>;
pub type RdmPair = rdm::RdmPair<f64>;
pub type FermionOperator = qubits::FermionOperator<f64>;
pub type PauliSum = qubits::PauliSum<f64>;
pub type Statevector = qubits::Statevector<f64>;
pub type VqeConfig = vqe::VqeConfig<f64>;
pub type DmetConfig = dmet::DmetConfig<f64>;
pub type DmetResult = dmet::DmetResult<f64>;
pub type EmbeddingProblem = dmet::EmbeddingProblem<f64>;
pub type FragmentPartition = dmet::FragmentPartition;
