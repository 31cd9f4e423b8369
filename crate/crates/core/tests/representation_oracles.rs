//! Cross-representation consistency: the Jordan-Wigner/Pauli route is
//! checked against a brute-force ladder-operator matrix builder that knows
//! nothing about Pauli algebra, and the sector restriction is checked
//! against the full dense matrix.

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qdmet_core::fci::{fci_ground_state, sector_hamiltonian, SectorBasis};
use qdmet_core::integrals::{build_hubbard, parse_fcidump, IntegralSet, TwoBodyTensor};
use qdmet_core::linalg;
use qdmet_core::qubits::{
    expand_to_spin_orbitals, jordan_wigner, FermionOperator, LadderKind, LadderOp, PauliAxes,
    PauliAxis, PauliSum, Statevector,
};
use qdmet_core::rdm::energy_from_rdms;

type C64 = Complex<f64>;

/// Dense matrix of a ladder-operator sum over the full Fock space, built by
/// direct occupation-mask bookkeeping (no Pauli algebra involved).
fn dense_fermion_matrix(op: &FermionOperator<f64>) -> Vec<Vec<C64>> {
    let dim = 1usize << op.n_modes();
    let zero = C64::new(0.0, 0.0);
    let mut matrix = vec![vec![zero; dim]; dim];
    for term in op.terms() {
        for basis in 0..dim {
            let mut mask = basis as u64;
            let mut sign = 1i32;
            let mut alive = true;
            for ladder in term.ops.iter().rev() {
                let bit = 1u64 << ladder.index;
                let parity = (mask & (bit - 1)).count_ones();
                match ladder.kind {
                    LadderKind::Annihilate => {
                        if mask & bit == 0 {
                            alive = false;
                            break;
                        }
                        if parity % 2 == 1 {
                            sign = -sign;
                        }
                        mask &= !bit;
                    }
                    LadderKind::Create => {
                        if mask & bit != 0 {
                            alive = false;
                            break;
                        }
                        if parity % 2 == 1 {
                            sign = -sign;
                        }
                        mask |= bit;
                    }
                }
            }
            if alive {
                matrix[mask as usize][basis] += term.coefficient * sign as f64;
            }
        }
    }
    matrix
}

fn max_matrix_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let dim = a.len();
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![vec![zero; dim]; dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn random_operator(rng: &mut ChaCha8Rng, n_modes: usize, n_terms: usize) -> FermionOperator<f64> {
    let mut op = FermionOperator::new(n_modes);
    for _ in 0..n_terms {
        let len = rng.random_range(0..=4);
        let ops: Vec<LadderOp> = (0..len)
            .map(|_| {
                let index = rng.random_range(0..n_modes);
                if rng.random::<bool>() {
                    LadderOp::create(index)
                } else {
                    LadderOp::annihilate(index)
                }
            })
            .collect();
        op.add_real_term(rng.random::<f64>() - 0.5, ops);
    }
    op
}

#[test]
fn jordan_wigner_matches_brute_force_ladder_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let op = random_operator(&mut rng, 3, 4);
        let via_jw = jordan_wigner(&op).to_dense().unwrap();
        let direct = dense_fermion_matrix(&op);
        assert!(max_matrix_diff(&via_jw, &direct) < 1e-10);
    }
}

#[test]
fn jordan_wigner_is_an_algebra_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..25 {
        let a = random_operator(&mut rng, 3, 3);
        let b = random_operator(&mut rng, 3, 3);
        let lhs = jordan_wigner(&a.product(&b)).to_dense().unwrap();
        let rhs = matmul(
            &jordan_wigner(&a).to_dense().unwrap(),
            &jordan_wigner(&b).to_dense().unwrap(),
        );
        assert!(max_matrix_diff(&lhs, &rhs) < 1e-10);
    }
}

#[test]
fn spin_orbital_hamiltonian_is_hermitian() {
    let mut two = TwoBodyTensor::zeros(2);
    two.set(0, 0, 0, 0, 0.7);
    two.set(1, 1, 1, 1, 0.7);
    two.set(0, 0, 1, 1, 0.3);
    two.set(1, 0, 1, 0, 0.15);
    let one = ndarray::array![[-1.2, -0.4], [-0.4, -0.9]];
    let ints: IntegralSet<f64> = IntegralSet::new(2, 0.1, one, two).unwrap();
    let dense = dense_fermion_matrix(&expand_to_spin_orbitals(&ints));
    let dim = dense.len();
    for i in 0..dim {
        for j in 0..dim {
            assert!((dense[i][j] - dense[j][i].conj()).norm() < 1e-12);
        }
    }
}

#[test]
fn sector_restriction_agrees_with_full_dense_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..15 {
        // random number-conserving operator on 3 modes
        let mut op = FermionOperator::<f64>::new(3);
        for _ in 0..4 {
            let i = rng.random_range(0..3);
            let j = rng.random_range(0..3);
            let c = rng.random::<f64>() - 0.5;
            op.add_real_term(c, vec![LadderOp::create(i), LadderOp::annihilate(j)]);
            op.add_real_term(c, vec![LadderOp::create(j), LadderOp::annihilate(i)]);
        }
        let h = jordan_wigner(&op);
        let dense = h.to_dense().unwrap();
        for n_particles in 0..=3usize {
            let basis = SectorBasis::new(3, n_particles, None);
            let restricted = sector_hamiltonian(&h, &basis).unwrap();
            for i in 0..basis.len() {
                for j in 0..basis.len() {
                    let full = dense[basis.mask(i) as usize][basis.mask(j) as usize];
                    assert!((full.re - restricted[[i, j]]).abs() < 1e-12);
                    assert!(full.im.abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn sector_spectrum_is_contained_in_full_jw_spectrum() {
    let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
    let h = jordan_wigner(&expand_to_spin_orbitals(&ints));
    let dense = h.to_dense().unwrap();
    let dim = dense.len();
    let mut real = Array2::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            assert!(dense[i][j].im.abs() < 1e-12);
            real[[i, j]] = dense[i][j].re;
        }
    }
    let full = linalg::sym_eigen(&real).unwrap();
    let basis = SectorBasis::new(4, 2, Some(0));
    let sector = sector_hamiltonian(&h, &basis).unwrap();
    let sector_eig = linalg::sym_eigen(&sector).unwrap();
    for &value in sector_eig.values.iter() {
        let hit = full.values.iter().any(|&v| (v - value).abs() < 1e-10);
        assert!(
            hit,
            "sector eigenvalue {value} missing from the full spectrum"
        );
    }
}

#[test]
fn fci_energy_invariant_under_orthogonal_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let ints = build_hubbard::<f64>(3, 1.0, 2.0, false, Some(2)).unwrap();
    let reference = fci_ground_state(&ints, 2, 0).unwrap().energy;
    for _ in 0..3 {
        // random orthogonal map by Gram-Schmidt on a random matrix
        let n = 3;
        let mut q: Array2<f64> = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                q[[i, j]] = rng.random::<f64>() - 0.5;
            }
        }
        for col in 0..n {
            for prev in 0..col {
                let dot = (0..n).map(|r| q[[r, col]] * q[[r, prev]]).sum::<f64>();
                for r in 0..n {
                    q[[r, col]] -= dot * q[[r, prev]];
                }
            }
            let norm = (0..n)
                .map(|r| q[[r, col]] * q[[r, col]])
                .sum::<f64>()
                .sqrt();
            for r in 0..n {
                q[[r, col]] /= norm;
            }
        }
        let rotated = ints.rotated(&q).unwrap();
        let energy = fci_ground_state(&rotated, 2, 0).unwrap().energy;
        assert!((energy - reference).abs() < 1e-9);
    }
}

#[test]
fn fixture_round_trips_bit_identically() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/h2_0.7414.fcidump"
    ))
    .unwrap();
    let first: IntegralSet<f64> = parse_fcidump(&text).unwrap();
    let rewritten = qdmet_core::integrals::write_fcidump(&first);
    let second: IntegralSet<f64> = parse_fcidump(&rewritten).unwrap();
    assert_eq!(first.n_spatial(), second.n_spatial());
    assert_eq!(first.n_electrons(), second.n_electrons());
    assert!(first.core_energy() == second.core_energy());
    assert_eq!(first.one_body(), second.one_body());
    assert_eq!(first.two_body(), second.two_body());
}

#[test]
fn fixture_energy_closure_from_rdms() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/h2_0.7414.fcidump"
    ))
    .unwrap();
    let ints: IntegralSet<f64> = parse_fcidump(&text).unwrap();
    let solution = fci_ground_state(&ints, 2, 0).unwrap();
    let closure = energy_from_rdms(&ints, &solution.rdms);
    assert!((closure - solution.energy).abs() < 1e-10);
}

#[test]
fn random_hermitian_pauli_expectation_matches_dense_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n_qubits = 3;
    let dim = 1usize << n_qubits;
    for _ in 0..10 {
        let mut h = PauliSum::<f64>::new(n_qubits);
        for _ in 0..6 {
            let mut pairs = Vec::new();
            for q in 0..n_qubits {
                match rng.random_range(0..4) {
                    0 => pairs.push((q, PauliAxis::X)),
                    1 => pairs.push((q, PauliAxis::Y)),
                    2 => pairs.push((q, PauliAxis::Z)),
                    _ => {}
                }
            }
            h.add_term(
                PauliAxes::from_pairs(pairs),
                C64::new(rng.random::<f64>() - 0.5, 0.0),
            );
        }
        let mut amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in amps.iter_mut() {
            *a /= norm;
        }
        let psi = Statevector::from_amplitudes(n_qubits, amps.clone()).unwrap();
        let fast = h.expectation(&psi).unwrap();
        let dense = h.to_dense().unwrap();
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                quad += amps[i].conj() * dense[i][j] * amps[j];
            }
        }
        assert!(quad.im.abs() < 1e-10);
        assert!((quad.re - fast).abs() < 1e-10);
    }
}
