//! Sparse Pauli-string algebra.
//!
//! A [`PauliAxes`] is the identity-free map from qubit index to axis that
//! labels one tensor product of Pauli operators; [`PauliSum`] collects such
//! strings with complex coefficients, merging duplicates and pruning
//! coefficients below 1e-12.

use std::collections::BTreeMap;

use num_complex::Complex;
use thiserror::Error;

use crate::qubits::statevector::Statevector;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum QubitError {
    #[error("qubit count mismatch: operator acts on {operator} qubits, state has {state}")]
    QubitMismatch { operator: usize, state: usize },
    #[error("expectation of a non-Hermitian operator: imaginary residue {residue:e}")]
    NonHermitian { residue: f64 },
    #[error("statevector would need {requested} qubits, the dense backend caps at {max}")]
    TooManyQubits { requested: usize, max: usize },
    #[error("dense matrix request for {requested} qubits exceeds the {max}-qubit guard")]
    DenseTooLarge { requested: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Identity-free Pauli string: sorted `(qubit, axis)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PauliAxes(Vec<(usize, PauliAxis)>);

impl PauliAxes {
    pub fn identity() -> Self {
        PauliAxes(Vec::new())
    }

    pub fn single(qubit: usize, axis: PauliAxis) -> Self {
        PauliAxes(vec![(qubit, axis)])
    }

    pub fn from_pairs(mut pairs: Vec<(usize, PauliAxis)>) -> Self {
        pairs.sort_by_key(|&(q, _)| q);
        for window in pairs.windows(2) {
            assert_ne!(window[0].0, window[1].0, "duplicate qubit in Pauli string");
        }
        PauliAxes(pairs)
    }

    pub fn pairs(&self) -> &[(usize, PauliAxis)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.0.last().map(|&(q, _)| q)
    }

    /// Bit masks used by the statevector kernels: qubits flipped (X or Y),
    /// qubits carrying Y, and qubits carrying Z.
    pub fn masks(&self) -> PauliMasks {
        let mut flip = 0u64;
        let mut y = 0u64;
        let mut z = 0u64;
        for &(q, axis) in &self.0 {
            debug_assert!(q < 64);
            match axis {
                PauliAxis::X => flip |= 1 << q,
                PauliAxis::Y => {
                    flip |= 1 << q;
                    y |= 1 << q;
                }
                PauliAxis::Z => z |= 1 << q,
            }
        }
        PauliMasks { flip, y, z }
    }

    /// Product of two Pauli strings. Returns the phase as a power of `i`
    /// (mod 4) together with the resulting axes, so the bookkeeping stays
    /// exact until a complex coefficient is finally needed.
    pub fn product(&self, other: &PauliAxes) -> (u8, PauliAxes) {
        let mut phase = 0u8;
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(qa, ax)), Some(&&(qb, bx))) => {
                    if qa < qb {
                        out.push((qa, ax));
                        a.next();
                    } else if qb < qa {
                        out.push((qb, bx));
                        b.next();
                    } else {
                        let (p, combined) = axis_product(ax, bx);
                        phase = (phase + p) % 4;
                        if let Some(axis) = combined {
                            out.push((qa, axis));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some(&&(qa, ax)), None) => {
                    out.push((qa, ax));
                    a.next();
                }
                (None, Some(&&(qb, bx))) => {
                    out.push((qb, bx));
                    b.next();
                }
                (None, None) => break,
            }
        }
        (phase, PauliAxes(out))
    }

    /// Whether two strings commute (they either commute or anticommute).
    pub fn commutes_with(&self, other: &PauliAxes) -> bool {
        let mut anti = 0usize;
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&(qa, ax)), Some(&&(qb, bx))) => {
                    if qa < qb {
                        a.next();
                    } else if qb < qa {
                        b.next();
                    } else {
                        if ax != bx {
                            anti += 1;
                        }
                        a.next();
                        b.next();
                    }
                }
                _ => break,
            }
        }
        anti.is_multiple_of(2)
    }
}

/// Single-qubit product table: returns (power of i, resulting axis).
fn axis_product(a: PauliAxis, b: PauliAxis) -> (u8, Option<PauliAxis>) {
    use PauliAxis::*;
    if a == b {
        return (0, None);
    }
    match (a, b) {
        (X, Y) => (1, Some(Z)),
        (Y, X) => (3, Some(Z)),
        (Y, Z) => (1, Some(X)),
        (Z, Y) => (3, Some(X)),
        (Z, X) => (1, Some(Y)),
        (X, Z) => (3, Some(Y)),
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PauliMasks {
    pub flip: u64,
    pub y: u64,
    pub z: u64,
}

impl PauliMasks {
    /// Phase picked up when the string acts on basis state `basis`:
    /// `P |basis> = phase * |basis ^ flip>`, phase = i^{#Y} * (-1)^{|basis & (y|z)|}.
    #[inline]
    pub fn phase<T: Scalar>(&self, basis: u64) -> Complex<T> {
        let n_y = self.y.count_ones() as u8;
        let mut phase = match n_y % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        };
        if (basis & (self.y | self.z)).count_ones() % 2 == 1 {
            phase = -phase;
        }
        phase
    }
}

/// Merge-and-prune threshold for Pauli coefficients.
fn prune_tol<T: Scalar>() -> T {
    T::cast(1e-12)
}

/// Linear combination of Pauli strings over a fixed qubit register.
#[derive(Debug, Clone)]
pub struct PauliSum<T> {
    n_qubits: usize,
    terms: BTreeMap<PauliAxes, Complex<T>>,
}

impl<T: Scalar> PauliSum<T> {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliAxes, &Complex<T>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, axes: &PauliAxes) -> Complex<T> {
        self.terms
            .get(axes)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn add_term(&mut self, axes: PauliAxes, coefficient: Complex<T>) {
        if let Some(q) = axes.max_qubit() {
            assert!(q < self.n_qubits, "axis qubit {q} out of register");
        }
        let merged = match self.terms.get(&axes) {
            Some(existing) => *existing + coefficient,
            None => coefficient,
        };
        if merged.norm_sqr().sqrt() <= prune_tol::<T>() {
            self.terms.remove(&axes);
        } else {
            self.terms.insert(axes, merged);
        }
    }

    pub fn scaled(&self, factor: Complex<T>) -> PauliSum<T> {
        let mut out = PauliSum::new(self.n_qubits);
        for (axes, coeff) in &self.terms {
            out.add_term(axes.clone(), *coeff * factor);
        }
        out
    }

    pub fn add_assign(&mut self, other: &PauliSum<T>) {
        assert_eq!(self.n_qubits, other.n_qubits);
        for (axes, coeff) in &other.terms {
            self.add_term(axes.clone(), *coeff);
        }
    }

    /// `<psi| self |psi>` for a Hermitian observable. The complex residue is
    /// checked against 1e-9 before the real part is returned.
    pub fn expectation(&self, psi: &Statevector<T>) -> Result<T, QubitError> {
        if psi.n_qubits() != self.n_qubits {
            return Err(QubitError::QubitMismatch {
                operator: self.n_qubits,
                state: psi.n_qubits(),
            });
        }
        let amps = psi.amplitudes();
        let mut total = Complex::new(T::zero(), T::zero());
        for (axes, coeff) in &self.terms {
            let masks = axes.masks();
            let mut acc = Complex::new(T::zero(), T::zero());
            for (basis, amp) in amps.iter().enumerate() {
                if amp.norm_sqr() == T::zero() {
                    continue;
                }
                let target = basis as u64 ^ masks.flip;
                let phase = masks.phase::<T>(basis as u64);
                acc += amps[target as usize].conj() * phase * *amp;
            }
            total += *coeff * acc;
        }
        let residue = total.im.abs();
        if residue >= T::cast(1e-9) {
            return Err(QubitError::NonHermitian {
                residue: residue.widen(),
            });
        }
        Ok(total.re)
    }

    /// Applies the sum to a state: `|out> = sum_t c_t P_t |psi>`.
    pub fn apply(&self, psi: &Statevector<T>) -> Result<Statevector<T>, QubitError> {
        if psi.n_qubits() != self.n_qubits {
            return Err(QubitError::QubitMismatch {
                operator: self.n_qubits,
                state: psi.n_qubits(),
            });
        }
        let amps = psi.amplitudes();
        let mut out = vec![Complex::new(T::zero(), T::zero()); amps.len()];
        for (axes, coeff) in &self.terms {
            let masks = axes.masks();
            for (basis, amp) in amps.iter().enumerate() {
                if amp.norm_sqr() == T::zero() {
                    continue;
                }
                let target = (basis as u64 ^ masks.flip) as usize;
                let phase = masks.phase::<T>(basis as u64);
                out[target] += *coeff * phase * *amp;
            }
        }
        Ok(Statevector::from_amplitudes_unchecked(psi.n_qubits(), out))
    }

    /// Dense matrix representation, for small-register cross-checks.
    pub fn to_dense(&self) -> Result<Vec<Vec<Complex<T>>>, QubitError> {
        const MAX_DENSE_QUBITS: usize = 12;
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(QubitError::DenseTooLarge {
                requested: self.n_qubits,
                max: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.n_qubits;
        let zero = Complex::new(T::zero(), T::zero());
        let mut m = vec![vec![zero; dim]; dim];
        for (axes, coeff) in &self.terms {
            let masks = axes.masks();
            for basis in 0..dim {
                let target = (basis as u64 ^ masks.flip) as usize;
                let phase = masks.phase::<T>(basis as u64);
                m[target][basis] += *coeff * phase;
            }
        }
        Ok(m)
    }
}
