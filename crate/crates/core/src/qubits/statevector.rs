//! Dense statevector backend.
//!
//! Qubit `j` is spin-orbital `j`; bit `j` of an amplitude index (least
//! significant bit = qubit 0) is the occupation of that spin-orbital. The
//! backend is capped at 24 qubits.

use num_complex::Complex;

use crate::qubits::pauli::{PauliAxes, QubitError};
use crate::scalar::Scalar;

pub const MAX_QUBITS: usize = 24;

/// Normalized complex amplitude vector over `2^n_qubits` basis states.
#[derive(Debug, Clone)]
pub struct Statevector<T> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> Statevector<T> {
    fn check_qubits(n_qubits: usize) -> Result<(), QubitError> {
        if n_qubits > MAX_QUBITS {
            return Err(QubitError::TooManyQubits {
                requested: n_qubits,
                max: MAX_QUBITS,
            });
        }
        Ok(())
    }

    /// The basis state `|index>`.
    pub fn computational_basis(n_qubits: usize, index: usize) -> Result<Self, QubitError> {
        Self::check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Ok(Statevector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(
        n_qubits: usize,
        amplitudes: Vec<Complex<T>>,
    ) -> Result<Self, QubitError> {
        Self::check_qubits(n_qubits)?;
        assert_eq!(amplitudes.len(), 1usize << n_qubits);
        let mut sv = Statevector {
            n_qubits,
            amplitudes,
        };
        sv.normalize();
        Ok(sv)
    }

    /// Internal constructor that skips normalization (used where the caller
    /// holds an unnormalized intermediate such as `H |psi>`).
    pub(crate) fn from_amplitudes_unchecked(n_qubits: usize, amplitudes: Vec<Complex<T>>) -> Self {
        Statevector {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |acc, v| acc + v)
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > T::zero() {
            for a in &mut self.amplitudes {
                *a = Complex::new(a.re / norm, a.im / norm);
            }
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector<T>) -> Complex<T> {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * *b
            })
    }

    /// In-place `exp(i theta P)` for a single Pauli string `P`.
    ///
    /// Uses `P^2 = I`: the result is `cos(theta) |psi> + i sin(theta) P |psi>`,
    /// applied pairwise over the flip partners so the norm is preserved.
    pub fn apply_pauli_exponential(&mut self, axes: &PauliAxes, theta: T) {
        let masks = axes.masks();
        let cos = theta.cos();
        let isin = Complex::new(T::zero(), theta.sin());
        if masks.flip == 0 {
            for (basis, amp) in self.amplitudes.iter_mut().enumerate() {
                let phase = masks.phase::<T>(basis as u64);
                *amp *= Complex::new(cos, T::zero()) + isin * phase;
            }
            return;
        }
        let pivot = 1u64 << (63 - masks.flip.leading_zeros());
        for basis in 0..self.amplitudes.len() as u64 {
            if basis & pivot != 0 {
                continue;
            }
            let partner = basis ^ masks.flip;
            let a = self.amplitudes[basis as usize];
            let b = self.amplitudes[partner as usize];
            // P|partner> = phase(partner) |basis>, P|basis> = phase(basis) |partner>
            self.amplitudes[basis as usize] = a * cos + isin * masks.phase::<T>(partner) * b;
            self.amplitudes[partner as usize] = b * cos + isin * masks.phase::<T>(basis) * a;
        }
    }

    /// Returns the evolved copy; see [`Statevector::apply_pauli_exponential`].
    pub fn evolved(&self, axes: &PauliAxes, theta: T) -> Statevector<T> {
        let mut out = self.clone();
        out.apply_pauli_exponential(axes, theta);
        out
    }
}
