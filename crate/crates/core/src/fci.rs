//! Exact ground states by full configuration interaction.
//!
//! The qubit Hamiltonian from the Jordan-Wigner path is restricted to the
//! physical particle-number (and optionally S_z) sector, then the lowest
//! eigenpair is solved densely for small sectors and by restarted Lanczos
//! with full reorthogonalization above that. Reduced density matrices come
//! from direct ladder-operator contraction of the sector eigenvector, which
//! keeps them independent of the Pauli-expectation route used by the
//! variational solver.

use std::collections::HashMap;

use ndarray::{Array2, Array4};
use num_complex::Complex;
use thiserror::Error;

use crate::integrals::IntegralSet;
use crate::linalg::{self, LinalgError};
use crate::qubits::{expand_to_spin_orbitals, jordan_wigner, PauliSum};
use crate::rdm::RdmPair;
use crate::scalar::Scalar;

const ALPHA_BITS: u64 = 0x5555_5555_5555_5555;
const DENSE_DIM_LIMIT: usize = 2000;
/// Guard for the dense sector backend: at most 16 spin orbitals.
pub const MAX_SPIN_ORBITALS: usize = 16;

#[derive(Debug, Error)]
pub enum FciError {
    #[error("problem needs {spin_orbitals} spin orbitals, the sector backend caps at {max}")]
    DimensionGuard { spin_orbitals: usize, max: usize },
    #[error("requested sector (n={n_particles}, ms2={ms2:?}) is empty on {n_modes} modes")]
    EmptySector {
        n_modes: usize,
        n_particles: usize,
        ms2: Option<i32>,
    },
    #[error("operator does not conserve the sector: leakage amplitude {amplitude:e} from basis state {basis}")]
    NonConserving { basis: u64, amplitude: f64 },
    #[error("sector matrix has imaginary residue {residue:e}")]
    ComplexResidue { residue: f64 },
    #[error("Lanczos failed to reach residual {tol:e} (best {best:e})")]
    LanczosStalled { tol: f64, best: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Occupation-mask basis of a fixed particle-number sector, optionally also
/// restricted to fixed `ms2 = n_alpha - n_beta` (spin orbital `2p` is the
/// alpha, `2p + 1` the beta component of spatial orbital `p`).
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_modes: usize,
    n_particles: usize,
    ms2: Option<i32>,
    masks: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

fn mask_ms2(mask: u64) -> i32 {
    let alpha = (mask & ALPHA_BITS).count_ones() as i32;
    let beta = (mask & !ALPHA_BITS).count_ones() as i32;
    alpha - beta
}

impl SectorBasis {
    pub fn new(n_modes: usize, n_particles: usize, ms2: Option<i32>) -> Self {
        assert!(n_modes <= 24, "sector enumeration caps at 24 modes");
        let mut masks = Vec::new();
        for mask in 0..(1u64 << n_modes) {
            if mask.count_ones() as usize != n_particles {
                continue;
            }
            if let Some(target) = ms2 {
                if mask_ms2(mask) != target {
                    continue;
                }
            }
            masks.push(mask);
        }
        let lookup = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        SectorBasis {
            n_modes,
            n_particles,
            ms2,
            masks,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mask(&self, index: usize) -> u64 {
        self.masks[index]
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.lookup.get(&mask).copied()
    }

    /// Index of the aufbau determinant: alpha electrons fill even modes from
    /// the bottom, beta electrons fill odd modes.
    pub fn aufbau_index(&self) -> Option<usize> {
        let (n_alpha, n_beta) = match self.ms2 {
            Some(ms2) => {
                let na = (self.n_particles as i32 + ms2) / 2;
                let nb = self.n_particles as i32 - na;
                if na < 0 || nb < 0 {
                    return None;
                }
                (na as usize, nb as usize)
            }
            None => {
                let na = self.n_particles.div_ceil(2);
                (na, self.n_particles - na)
            }
        };
        let mut mask = 0u64;
        for a in 0..n_alpha {
            mask |= 1 << (2 * a);
        }
        for b in 0..n_beta {
            mask |= 1 << (2 * b + 1);
        }
        self.index_of(mask)
    }
}

/// Applies every Pauli term of `h` to one basis mask, accumulating target
/// amplitudes (including any that leave the sector, which must cancel).
fn column_action<T: Scalar>(h: &PauliSum<T>, mask: u64) -> HashMap<u64, Complex<T>> {
    let mut acc: HashMap<u64, Complex<T>> = HashMap::new();
    for (axes, coeff) in h.terms() {
        let masks = axes.masks();
        let target = mask ^ masks.flip;
        let phase = masks.phase::<T>(mask);
        let entry = acc
            .entry(target)
            .or_insert_with(|| Complex::new(T::zero(), T::zero()));
        *entry += *coeff * phase;
    }
    acc
}

/// Dense sector matrix `<mask_i| H |mask_j>`, Hermitian to 1e-12.
///
/// Individual Pauli strings do leave the sector; their contributions must
/// cancel in the sum, and any net leakage above 1e-12 is reported as a
/// non-conserving operator.
pub fn sector_hamiltonian<T: Scalar>(
    h: &PauliSum<T>,
    basis: &SectorBasis,
) -> Result<Array2<T>, FciError> {
    let dim = basis.len();
    let mut matrix = Array2::zeros((dim, dim));
    let leak_tol = T::cast(1e-12);
    for j in 0..dim {
        let mask_j = basis.mask(j);
        for (target, amplitude) in column_action(h, mask_j) {
            match basis.index_of(target) {
                Some(i) => {
                    if amplitude.im.abs() > leak_tol {
                        return Err(FciError::ComplexResidue {
                            residue: amplitude.im.abs().widen(),
                        });
                    }
                    matrix[[i, j]] = amplitude.re;
                }
                None => {
                    let magnitude = amplitude.norm_sqr().sqrt();
                    if magnitude > leak_tol {
                        return Err(FciError::NonConserving {
                            basis: mask_j,
                            amplitude: magnitude.widen(),
                        });
                    }
                }
            }
        }
    }
    let mut asym = T::zero();
    for i in 0..dim {
        for j in (i + 1)..dim {
            asym = asym.max((matrix[[i, j]] - matrix[[j, i]]).abs());
            let mean = (matrix[[i, j]] + matrix[[j, i]]) / T::cast(2.0);
            matrix[[i, j]] = mean;
            matrix[[j, i]] = mean;
        }
    }
    if asym > T::cast(1e-12) {
        return Err(FciError::ComplexResidue {
            residue: asym.widen(),
        });
    }
    Ok(matrix)
}

/// Sparse row-compressed form of the sector matrix, for the Lanczos path.
fn sector_sparse<T: Scalar>(
    h: &PauliSum<T>,
    basis: &SectorBasis,
) -> Result<Vec<Vec<(usize, T)>>, FciError> {
    let dim = basis.len();
    let leak_tol = T::cast(1e-12);
    let mut columns: Vec<Vec<(usize, T)>> = vec![Vec::new(); dim];
    for j in 0..dim {
        let mask_j = basis.mask(j);
        for (target, amplitude) in column_action(h, mask_j) {
            match basis.index_of(target) {
                Some(i) => {
                    if amplitude.im.abs() > leak_tol {
                        return Err(FciError::ComplexResidue {
                            residue: amplitude.im.abs().widen(),
                        });
                    }
                    if amplitude.re.abs() > leak_tol {
                        columns[j].push((i, amplitude.re));
                    }
                }
                None => {
                    let magnitude = amplitude.norm_sqr().sqrt();
                    if magnitude > leak_tol {
                        return Err(FciError::NonConserving {
                            basis: mask_j,
                            amplitude: magnitude.widen(),
                        });
                    }
                }
            }
        }
    }
    // fixed entry order keeps the matvec (and everything downstream of it)
    // bit-reproducible across runs
    for column in columns.iter_mut() {
        column.sort_by_key(|&(i, _)| i);
    }
    Ok(columns)
}

/// Restarted Lanczos with full reorthogonalization for the lowest eigenpair.
fn lanczos_lowest<T: Scalar>(
    columns: &[Vec<(usize, T)>],
    start_index: usize,
    tol: T,
) -> Result<(T, Vec<T>), FciError> {
    let dim = columns.len();
    let apply = |v: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); dim];
        for (j, col) in columns.iter().enumerate() {
            let vj = v[j];
            if vj == T::zero() {
                continue;
            }
            for &(i, a) in col {
                out[i] += a * vj;
            }
        }
        out
    };
    let mut q = vec![T::zero(); dim];
    q[start_index] = T::one();
    let krylov_cap = 60.min(dim);
    let mut best_residual = T::infinity();

    for _restart in 0..200 {
        let mut vs: Vec<Vec<T>> = vec![q.clone()];
        let mut alphas: Vec<T> = Vec::new();
        let mut betas: Vec<T> = Vec::new();
        for k in 0..krylov_cap {
            let mut w = apply(&vs[k]);
            let alpha = dot(&vs[k], &w);
            alphas.push(alpha);
            for (wi, vi) in w.iter_mut().zip(&vs[k]) {
                *wi -= alpha * *vi;
            }
            if k > 0 {
                let beta_prev = betas[k - 1];
                for (wi, vi) in w.iter_mut().zip(&vs[k - 1]) {
                    *wi -= beta_prev * *vi;
                }
            }
            // full reorthogonalization, twice for numerical safety
            for _ in 0..2 {
                for v in &vs {
                    let overlap = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= overlap * *vi;
                    }
                }
            }
            let beta = dot(&w, &w).sqrt();
            if beta < T::cast(1e-14) || k + 1 == krylov_cap {
                break;
            }
            betas.push(beta);
            for wi in w.iter_mut() {
                *wi /= beta;
            }
            vs.push(w);
        }
        let m = alphas.len();
        let mut trid = Array2::zeros((m, m));
        for i in 0..m {
            trid[[i, i]] = alphas[i];
            if i + 1 < m {
                trid[[i, i + 1]] = betas[i];
                trid[[i + 1, i]] = betas[i];
            }
        }
        let eig = linalg::sym_eigen(&trid)?;
        let theta = eig.values[0];
        let mut ritz = vec![T::zero(); dim];
        for (k, v) in vs.iter().enumerate() {
            let w = eig.vectors[[k, 0]];
            for (ri, vi) in ritz.iter_mut().zip(v) {
                *ri += w * *vi;
            }
        }
        let norm = dot(&ritz, &ritz).sqrt();
        for r in ritz.iter_mut() {
            *r /= norm;
        }
        let hr = apply(&ritz);
        let mut residual = T::zero();
        for i in 0..dim {
            let r = hr[i] - theta * ritz[i];
            residual += r * r;
        }
        let residual = residual.sqrt();
        best_residual = best_residual.min(residual);
        if residual < tol {
            return Ok((theta, ritz));
        }
        q = ritz;
    }
    Err(FciError::LanczosStalled {
        tol: tol.widen(),
        best: best_residual.widen(),
    })
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn annihilate(mask: u64, mode: usize) -> Option<(u64, i32)> {
    let bit = 1u64 << mode;
    if mask & bit == 0 {
        return None;
    }
    let parity = (mask & (bit - 1)).count_ones();
    let sign = if parity.is_multiple_of(2) { 1 } else { -1 };
    Some((mask & !bit, sign))
}

fn create(mask: u64, mode: usize) -> Option<(u64, i32)> {
    let bit = 1u64 << mode;
    if mask & bit != 0 {
        return None;
    }
    let parity = (mask & (bit - 1)).count_ones();
    let sign = if parity.is_multiple_of(2) { 1 } else { -1 };
    Some((mask | bit, sign))
}

/// Spin-traced RDMs by direct ladder contraction of a sector vector.
pub fn rdms_from_sector_vector<T: Scalar>(
    vector: &[T],
    basis: &SectorBasis,
    n_spatial: usize,
) -> RdmPair<T> {
    let mut one = Array2::zeros((n_spatial, n_spatial));
    let mut two = Array4::zeros((n_spatial, n_spatial, n_spatial, n_spatial));
    for (j, &cj) in vector.iter().enumerate() {
        if cj == T::zero() {
            continue;
        }
        let mask = basis.mask(j);
        for p in 0..n_spatial {
            for q in 0..n_spatial {
                for sigma in 0..2 {
                    let Some((m1, s1)) = annihilate(mask, 2 * q + sigma) else {
                        continue;
                    };
                    let Some((m2, s2)) = create(m1, 2 * p + sigma) else {
                        continue;
                    };
                    if let Some(i) = basis.index_of(m2) {
                        let sign = T::cast((s1 * s2) as f64);
                        one[[p, q]] += sign * vector[i] * cj;
                    }
                }
            }
        }
        // two_rdm[p][q][r][s] = sum <a+_{p sigma} a+_{q tau} a_{r tau} a_{s sigma}>
        for s in 0..n_spatial {
            for sigma in 0..2 {
                let Some((m1, s1)) = annihilate(mask, 2 * s + sigma) else {
                    continue;
                };
                for r in 0..n_spatial {
                    for tau in 0..2 {
                        let Some((m2, s2)) = annihilate(m1, 2 * r + tau) else {
                            continue;
                        };
                        for q in 0..n_spatial {
                            let Some((m3, s3)) = create(m2, 2 * q + tau) else {
                                continue;
                            };
                            for p in 0..n_spatial {
                                let Some((m4, s4)) = create(m3, 2 * p + sigma) else {
                                    continue;
                                };
                                if let Some(i) = basis.index_of(m4) {
                                    let sign = T::cast((s1 * s2 * s3 * s4) as f64);
                                    two[[p, q, r, s]] += sign * vector[i] * cj;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    RdmPair {
        one_rdm: one,
        two_rdm: two,
    }
}

/// Exact ground-state solution of an integral set in a fixed sector.
#[derive(Debug, Clone)]
pub struct FciSolution<T> {
    pub energy: T,
    pub rdms: RdmPair<T>,
    pub ground_vector: Vec<T>,
}

/// Full CI over the Jordan-Wigner Hamiltonian restricted to the
/// `(n_electrons, ms2)` sector. The energy includes the core constant.
pub fn fci_ground_state<T: Scalar>(
    ints: &IntegralSet<T>,
    n_electrons: usize,
    ms2: i32,
) -> Result<FciSolution<T>, FciError> {
    let spin_orbitals = 2 * ints.n_spatial();
    if spin_orbitals > MAX_SPIN_ORBITALS {
        return Err(FciError::DimensionGuard {
            spin_orbitals,
            max: MAX_SPIN_ORBITALS,
        });
    }
    let basis = SectorBasis::new(spin_orbitals, n_electrons, Some(ms2));
    if basis.is_empty() {
        return Err(FciError::EmptySector {
            n_modes: spin_orbitals,
            n_particles: n_electrons,
            ms2: Some(ms2),
        });
    }
    let hamiltonian = jordan_wigner(&expand_to_spin_orbitals(ints));
    let dim = basis.len();
    let (energy, ground_vector) = if dim < DENSE_DIM_LIMIT {
        let matrix = sector_hamiltonian(&hamiltonian, &basis)?;
        let eig = linalg::sym_eigen(&matrix)?;
        let vector: Vec<T> = (0..dim).map(|i| eig.vectors[[i, 0]]).collect();
        (eig.values[0], vector)
    } else {
        let columns = sector_sparse(&hamiltonian, &basis)?;
        let start = basis.aufbau_index().unwrap_or(0);
        lanczos_lowest(&columns, start, T::cast(1e-10))?
    };
    let rdms = rdms_from_sector_vector(&ground_vector, &basis, ints.n_spatial());
    Ok(FciSolution {
        energy,
        rdms,
        ground_vector,
    })
}

/// Closed-form ground energy of the two-site half-filled Hubbard model,
/// `(U - sqrt(U^2 + 16 t^2)) / 2`; used as an analytic oracle in tests.
pub fn hubbard_dimer_ground_energy<T: Scalar>(u: T, t: T) -> T {
    let sixteen = T::cast(16.0);
    (u - (u * u + sixteen * t * t).sqrt()) / T::cast(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{build_hubbard, IntegralSet, TwoBodyTensor};
    use crate::qubits::{FermionOperator, LadderOp};
    use crate::rdm::energy_from_rdms;
    use ndarray::array;

    #[test]
    fn sector_enumeration_counts() {
        let basis = SectorBasis::new(4, 2, Some(0));
        // two alpha-beta pairs over two spatial orbitals: 2 * 2 = 4 states
        assert_eq!(basis.len(), 4);
        let all = SectorBasis::new(4, 2, None);
        assert_eq!(all.len(), 6);
    }

    #[test]
    fn number_operator_sector_matrix_is_identity_scaled() {
        let mut op = FermionOperator::<f64>::new(4);
        for j in 0..4 {
            op.add_real_term(1.0, vec![LadderOp::create(j), LadderOp::annihilate(j)]);
        }
        let h = jordan_wigner(&op);
        let basis = SectorBasis::new(4, 2, None);
        let m = sector_hamiltonian(&h, &basis).unwrap();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((m[[i, j]] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn hopping_block_has_jw_sign_convention() {
        let mut op = FermionOperator::<f64>::new(2);
        op.add_real_term(1.0, vec![LadderOp::create(1), LadderOp::annihilate(0)]);
        op.add_real_term(1.0, vec![LadderOp::create(0), LadderOp::annihilate(1)]);
        let h = jordan_wigner(&op);
        let basis = SectorBasis::new(2, 1, None);
        let m = sector_hamiltonian(&h, &basis).unwrap();
        // basis masks ascend: 0b01 then 0b10
        assert_eq!(basis.mask(0), 0b01);
        assert_eq!(basis.mask(1), 0b10);
        assert!((m[[0, 1]] - 1.0).abs() < 1e-14);
        assert!((m[[1, 0]] - 1.0).abs() < 1e-14);
        assert!(m[[0, 0]].abs() < 1e-14 && m[[1, 1]].abs() < 1e-14);
    }

    #[test]
    fn nonconserving_operator_rejected() {
        let mut op = FermionOperator::<f64>::new(2);
        op.add_real_term(1.0, vec![LadderOp::create(1)]);
        let h = jordan_wigner(&op);
        let basis = SectorBasis::new(2, 1, None);
        assert!(matches!(
            sector_hamiltonian(&h, &basis),
            Err(FciError::NonConserving { .. })
        ));
    }

    #[test]
    fn single_orbital_closed_shell() {
        let mut two = TwoBodyTensor::zeros(1);
        two.set(0, 0, 0, 0, 0.5);
        let ints: IntegralSet<f64> = IntegralSet::new(2, 0.3, array![[-1.0]], two).unwrap();
        let solution = fci_ground_state(&ints, 2, 0).unwrap();
        assert!((solution.energy + 1.2).abs() < 1e-12);
        assert!((solution.rdms.one_rdm[[0, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hubbard_dimer_matches_analytic_energy() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let solution = fci_ground_state(&ints, 2, 0).unwrap();
        let expected = hubbard_dimer_ground_energy(4.0f64, 1.0);
        assert!((expected + 0.8284271).abs() < 1e-7);
        assert!((solution.energy - expected).abs() < 1e-12);
        solution.rdms.validate(2, 1e-9).unwrap();
    }

    #[test]
    fn noninteracting_chain_fills_orbitals() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let solution = fci_ground_state(&ints, 4, 0).unwrap();
        let eig = linalg::sym_eigen(ints.one_body()).unwrap();
        let expected = 2.0 * (eig.values[0] + eig.values[1]);
        assert!((solution.energy - expected).abs() < 1e-11);
    }

    #[test]
    fn energy_closes_from_rdms() {
        let ints = build_hubbard::<f64>(3, 0.7, 2.5, false, Some(2)).unwrap();
        let solution = fci_ground_state(&ints, 2, 0).unwrap();
        let recomputed = energy_from_rdms(&ints, &solution.rdms);
        assert!((recomputed - solution.energy).abs() < 1e-10);
    }

    #[test]
    fn ground_energy_below_hf_reference() {
        let ints = build_hubbard::<f64>(4, 1.0, 6.0, false, None).unwrap();
        let mf = crate::meanfield::run_rhf(&ints, None, &Default::default()).unwrap();
        let solution = fci_ground_state(&ints, 4, 0).unwrap();
        assert!(solution.energy <= mf.energy + 1e-12);
    }

    #[test]
    fn empty_sector_is_an_error() {
        let ints = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        assert!(matches!(
            fci_ground_state(&ints, 1, 0),
            Err(FciError::EmptySector { .. })
        ));
    }

    #[test]
    fn dimension_guard_enforced() {
        let ints = build_hubbard::<f64>(9, 1.0, 0.0, false, None).unwrap();
        assert!(matches!(
            fci_ground_state(&ints, 8, 0),
            Err(FciError::DimensionGuard { .. })
        ));
    }

    #[test]
    fn large_sector_uses_lanczos_and_fills_orbitals() {
        // half-filled 8-site chain: the S_z = 0 sector has dimension 4900,
        // above the dense threshold; with U = 0 the exact energy is the
        // aufbau orbital sum
        let ints = build_hubbard::<f64>(8, 1.0, 0.0, false, None).unwrap();
        let solution = fci_ground_state(&ints, 8, 0).unwrap();
        let eig = linalg::sym_eigen(ints.one_body()).unwrap();
        let expected = 2.0 * (0..4).map(|k| eig.values[k]).sum::<f64>();
        assert!((solution.energy - expected).abs() < 1e-9);
        solution.rdms.validate(8, 1e-8).unwrap();
    }

    #[test]
    fn large_interacting_sector_keeps_the_invariants() {
        let ints = build_hubbard::<f64>(8, 1.0, 4.0, false, None).unwrap();
        let solution = fci_ground_state(&ints, 8, 0).unwrap();
        let mf = crate::meanfield::run_rhf(&ints, None, &Default::default()).unwrap();
        assert!(solution.energy < mf.energy);
        solution.rdms.validate(8, 1e-8).unwrap();
        let closure = energy_from_rdms(&ints, &solution.rdms);
        assert!((closure - solution.energy).abs() < 1e-9);
    }

    #[test]
    fn lanczos_agrees_with_dense_on_hubbard_chain() {
        let ints = build_hubbard::<f64>(6, 1.0, 4.0, false, None).unwrap();
        let hamiltonian = jordan_wigner(&expand_to_spin_orbitals(&ints));
        let basis = SectorBasis::new(12, 6, Some(0));
        let dense = sector_hamiltonian(&hamiltonian, &basis).unwrap();
        let eig = linalg::sym_eigen(&dense).unwrap();
        let columns = sector_sparse(&hamiltonian, &basis).unwrap();
        let (energy, vector) =
            lanczos_lowest(&columns, basis.aufbau_index().unwrap(), 1e-10).unwrap();
        assert!((energy - eig.values[0]).abs() < 1e-9);
        let norm: f64 = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
    }
}
