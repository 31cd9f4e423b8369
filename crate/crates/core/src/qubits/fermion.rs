//! Second-quantized ladder operators and the Jordan-Wigner mapping.
//!
//! Spin-orbital indexing is interleaved: spin-orbital `2p` is the alpha and
//! `2p + 1` the beta component of spatial orbital `p`. Jordan-Wigner maps
//! `a^dag_j -> (X_j - iY_j)/2 (x) Z_{j-1} ... Z_0`.

use num_complex::Complex;

use crate::integrals::IntegralSet;
use crate::qubits::pauli::{PauliAxes, PauliAxis, PauliSum};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderKind {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderOp {
    pub index: usize,
    pub kind: LadderKind,
}

impl LadderOp {
    pub fn create(index: usize) -> Self {
        LadderOp {
            index,
            kind: LadderKind::Create,
        }
    }

    pub fn annihilate(index: usize) -> Self {
        LadderOp {
            index,
            kind: LadderKind::Annihilate,
        }
    }
}

/// One product of ladder operators with a complex coefficient; the operator
/// matrix is `coefficient * ops[0] * ops[1] * ...` applied left to right.
#[derive(Debug, Clone)]
pub struct FermionTerm<T> {
    pub coefficient: Complex<T>,
    pub ops: Vec<LadderOp>,
}

/// Linear combination of ladder-operator products over `n_modes` spin
/// orbitals.
#[derive(Debug, Clone)]
pub struct FermionOperator<T> {
    n_modes: usize,
    terms: Vec<FermionTerm<T>>,
}

impl<T: Scalar> FermionOperator<T> {
    pub fn new(n_modes: usize) -> Self {
        FermionOperator {
            n_modes,
            terms: Vec::new(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[FermionTerm<T>] {
        &self.terms
    }

    pub fn add_term(&mut self, coefficient: Complex<T>, ops: Vec<LadderOp>) {
        for op in &ops {
            assert!(op.index < self.n_modes, "mode index out of range");
        }
        self.terms.push(FermionTerm { coefficient, ops });
    }

    pub fn add_real_term(&mut self, coefficient: T, ops: Vec<LadderOp>) {
        self.add_term(Complex::new(coefficient, T::zero()), ops);
    }

    /// Operator product: concatenates ladder sequences termwise.
    pub fn product(&self, other: &FermionOperator<T>) -> FermionOperator<T> {
        assert_eq!(self.n_modes, other.n_modes);
        let mut out = FermionOperator::new(self.n_modes);
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                out.add_term(a.coefficient * b.coefficient, ops);
            }
        }
        out
    }

    /// Hermitian conjugate: reverses each ladder sequence, swapping
    /// creation and annihilation, and conjugates coefficients.
    pub fn adjoint(&self) -> FermionOperator<T> {
        let mut out = FermionOperator::new(self.n_modes);
        for term in &self.terms {
            let ops: Vec<LadderOp> = term
                .ops
                .iter()
                .rev()
                .map(|op| match op.kind {
                    LadderKind::Create => LadderOp::annihilate(op.index),
                    LadderKind::Annihilate => LadderOp::create(op.index),
                })
                .collect();
            out.add_term(term.coefficient.conj(), ops);
        }
        out
    }

    /// Deterministic canonical view of terms already in normal form (all
    /// creations before annihilations): creators sort ascending, annihilators
    /// descending, signs track the reordering parity, and identical sequences
    /// merge. Terms not in normal form are passed through unchanged.
    pub fn canonicalized(&self) -> FermionOperator<T> {
        use std::collections::BTreeMap;
        let mut merged: BTreeMap<Vec<(usize, bool)>, Complex<T>> = BTreeMap::new();
        let mut passthrough: Vec<FermionTerm<T>> = Vec::new();
        for term in &self.terms {
            let n_create = term
                .ops
                .iter()
                .take_while(|op| op.kind == LadderKind::Create)
                .count();
            let normal_form = term.ops[n_create..]
                .iter()
                .all(|op| op.kind == LadderKind::Annihilate);
            if !normal_form {
                passthrough.push(term.clone());
                continue;
            }
            let mut creators: Vec<usize> = term.ops[..n_create].iter().map(|o| o.index).collect();
            let mut annihilators: Vec<usize> =
                term.ops[n_create..].iter().map(|o| o.index).collect();
            if has_duplicate(&creators) || has_duplicate(&annihilators) {
                continue; // identically zero
            }
            let mut sign = sort_parity(&mut creators);
            // annihilators descending
            sign *= sort_parity(&mut annihilators);
            annihilators.reverse();
            if (annihilators.len() / 2) % 2 == 1 {
                sign = -sign;
            }
            let key: Vec<(usize, bool)> = creators
                .iter()
                .map(|&i| (i, true))
                .chain(annihilators.iter().map(|&i| (i, false)))
                .collect();
            let signed = if sign < 0 {
                -term.coefficient
            } else {
                term.coefficient
            };
            let entry = merged
                .entry(key)
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *entry += signed;
        }
        let mut out = FermionOperator::new(self.n_modes);
        for (key, coefficient) in merged {
            if coefficient.norm_sqr().sqrt() <= T::cast(1e-12) {
                continue;
            }
            let ops = key
                .into_iter()
                .map(|(index, create)| {
                    if create {
                        LadderOp::create(index)
                    } else {
                        LadderOp::annihilate(index)
                    }
                })
                .collect();
            out.terms.push(FermionTerm { coefficient, ops });
        }
        out.terms.extend(passthrough);
        out
    }
}

fn has_duplicate(indices: &[usize]) -> bool {
    for i in 1..indices.len() {
        if indices[..i].contains(&indices[i]) {
            return true;
        }
    }
    false
}

/// Sorts ascending in place, returning the permutation parity (+1 or -1).
fn sort_parity(v: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

/// Expands spatial-orbital integrals into a spin-orbital Hamiltonian:
/// the core constant, `d_pq` on each spin channel and
/// `1/2 (pq|rs) a^dag_{p sigma} a^dag_{r tau} a_{s tau} a_{q sigma}`.
pub fn expand_to_spin_orbitals<T: Scalar>(ints: &IntegralSet<T>) -> FermionOperator<T> {
    let n = ints.n_spatial();
    let mut op = FermionOperator::new(2 * n);
    if ints.core_energy() != T::zero() || n == 0 {
        op.add_real_term(ints.core_energy(), vec![]);
    }
    for p in 0..n {
        for q in 0..n {
            let d = ints.one_body()[[p, q]];
            for spin in 0..2 {
                op.add_real_term(
                    d,
                    vec![
                        LadderOp::create(2 * p + spin),
                        LadderOp::annihilate(2 * q + spin),
                    ],
                );
            }
        }
    }
    let half = T::cast(0.5);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let h = ints.two_body().get(p, q, r, s);
                    if h == T::zero() {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            op.add_real_term(
                                half * h,
                                vec![
                                    LadderOp::create(2 * p + sigma),
                                    LadderOp::create(2 * r + tau),
                                    LadderOp::annihilate(2 * s + tau),
                                    LadderOp::annihilate(2 * q + sigma),
                                ],
                            );
                        }
                    }
                }
            }
        }
    }
    op
}

/// Jordan-Wigner image of a single ladder operator: two Pauli strings.
fn ladder_strings<T: Scalar>(op: LadderOp) -> [(Complex<T>, PauliAxes); 2] {
    let half = T::cast(0.5);
    let mut x_pairs: Vec<(usize, PauliAxis)> = (0..op.index).map(|q| (q, PauliAxis::Z)).collect();
    let mut y_pairs = x_pairs.clone();
    x_pairs.push((op.index, PauliAxis::X));
    y_pairs.push((op.index, PauliAxis::Y));
    let y_coeff = match op.kind {
        LadderKind::Create => Complex::new(T::zero(), -half),
        LadderKind::Annihilate => Complex::new(T::zero(), half),
    };
    [
        (
            Complex::new(half, T::zero()),
            PauliAxes::from_pairs(x_pairs),
        ),
        (y_coeff, PauliAxes::from_pairs(y_pairs)),
    ]
}

/// Jordan-Wigner transform of a full operator into a merged Pauli sum.
pub fn jordan_wigner<T: Scalar>(op: &FermionOperator<T>) -> PauliSum<T> {
    let mut sum = PauliSum::new(op.n_modes());
    for term in op.terms() {
        // running product of (coefficient, string) pairs
        let mut acc: Vec<(Complex<T>, PauliAxes)> = vec![(term.coefficient, PauliAxes::identity())];
        for ladder in &term.ops {
            let factors = ladder_strings::<T>(*ladder);
            let mut next = Vec::with_capacity(acc.len() * 2);
            for (coeff, axes) in &acc {
                for (fc, faxes) in &factors {
                    let (phase_pow, product) = axes.product(faxes);
                    let phase = i_power::<T>(phase_pow);
                    next.push((*coeff * *fc * phase, product));
                }
            }
            acc = next;
        }
        for (coeff, axes) in acc {
            sum.add_term(axes, coeff);
        }
    }
    sum
}

fn i_power<T: Scalar>(pow: u8) -> Complex<T> {
    match pow % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{build_hubbard, IntegralSet, TwoBodyTensor};
    use ndarray::array;

    fn single_orbital_set() -> IntegralSet<f64> {
        let mut two = TwoBodyTensor::zeros(1);
        two.set(0, 0, 0, 0, 0.5);
        IntegralSet::new(2, 0.3, array![[-1.0]], two).unwrap()
    }

    #[test]
    fn single_orbital_expansion_terms() {
        let op = expand_to_spin_orbitals(&single_orbital_set());
        let canonical = op.canonicalized();
        let mut number_terms = 0;
        let mut double_term = None;
        for term in canonical.terms() {
            match term.ops.len() {
                0 => assert!((term.coefficient.re - 0.3).abs() < 1e-15),
                2 => {
                    assert_eq!(term.ops[0].kind, LadderKind::Create);
                    assert_eq!(term.ops[0].index, term.ops[1].index);
                    assert!((term.coefficient.re + 1.0).abs() < 1e-15);
                    number_terms += 1;
                }
                4 => {
                    let idx: Vec<usize> = term.ops.iter().map(|o| o.index).collect();
                    assert_eq!(idx, vec![0, 1, 1, 0]);
                    double_term = Some(term.coefficient.re);
                }
                other => panic!("unexpected ladder length {other}"),
            }
        }
        assert_eq!(number_terms, 2);
        assert!((double_term.unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noninteracting_dimer_term_count() {
        let ints = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        let op = expand_to_spin_orbitals(&ints);
        let one_body_terms = op.terms().iter().filter(|t| t.ops.len() == 2).count();
        let two_body_terms = op.terms().iter().filter(|t| t.ops.len() == 4).count();
        assert_eq!(one_body_terms, 8);
        assert_eq!(two_body_terms, 0);
    }

    #[test]
    fn number_operator_is_textbook_identity() {
        // a^dag_0 a_0 -> (I - Z_0)/2
        let mut op = FermionOperator::<f64>::new(1);
        op.add_real_term(1.0, vec![LadderOp::create(0), LadderOp::annihilate(0)]);
        let sum = jordan_wigner(&op);
        assert_eq!(sum.len(), 2);
        let id = sum.coefficient(&PauliAxes::identity());
        let z = sum.coefficient(&PauliAxes::single(0, PauliAxis::Z));
        assert!((id.re - 0.5).abs() < 1e-15 && id.im.abs() < 1e-15);
        assert!((z.re + 0.5).abs() < 1e-15 && z.im.abs() < 1e-15);
    }

    #[test]
    fn hopping_is_xx_plus_yy() {
        let mut op = FermionOperator::<f64>::new(2);
        op.add_real_term(1.0, vec![LadderOp::create(1), LadderOp::annihilate(0)]);
        op.add_real_term(1.0, vec![LadderOp::create(0), LadderOp::annihilate(1)]);
        let sum = jordan_wigner(&op);
        assert_eq!(sum.len(), 2);
        let xx = PauliAxes::from_pairs(vec![(0, PauliAxis::X), (1, PauliAxis::X)]);
        let yy = PauliAxes::from_pairs(vec![(0, PauliAxis::Y), (1, PauliAxis::Y)]);
        assert!((sum.coefficient(&xx).re - 0.5).abs() < 1e-15);
        assert!((sum.coefficient(&yy).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn total_number_operator_linearity() {
        let n_modes = 5;
        let mut op = FermionOperator::<f64>::new(n_modes);
        for j in 0..n_modes {
            op.add_real_term(1.0, vec![LadderOp::create(j), LadderOp::annihilate(j)]);
        }
        let sum = jordan_wigner(&op);
        let id = sum.coefficient(&PauliAxes::identity());
        assert!((id.re - n_modes as f64 / 2.0).abs() < 1e-14);
        for j in 0..n_modes {
            let z = sum.coefficient(&PauliAxes::single(j, PauliAxis::Z));
            assert!((z.re + 0.5).abs() < 1e-14);
        }
        assert_eq!(sum.len(), n_modes + 1);
    }

    #[test]
    fn adjoint_reverses_and_conjugates() {
        let mut op = FermionOperator::<f64>::new(3);
        op.add_term(
            num_complex::Complex::new(0.0, 2.0),
            vec![LadderOp::create(2), LadderOp::annihilate(0)],
        );
        let adj = op.adjoint();
        let term = &adj.terms()[0];
        assert_eq!(term.ops[0], LadderOp::create(0));
        assert_eq!(term.ops[1], LadderOp::annihilate(2));
        assert!((term.coefficient.im + 2.0).abs() < 1e-15);
    }
}
