//! Energy-sorting variational quantum eigensolver on the statevector
//! backend.
//!
//! The solver builds the full singles-and-doubles excitation pool above a
//! Hartree-Fock reference, ranks every operator by the energy gain of a
//! one-parameter optimization, keeps those above the screening threshold and
//! variationally optimizes the retained first-order-Trotter ansatz. Reduced
//! density matrices are measured as Jordan-Wigner Pauli expectations.

use num_complex::Complex;
use thiserror::Error;

use crate::integrals::{IntegralError, IntegralSet};
use crate::meanfield::{run_rhf, ScfConfig, ScfError};
use crate::optim;
use crate::qubits::{
    expand_to_spin_orbitals, jordan_wigner, FermionOperator, LadderOp, PauliAxes, PauliSum,
    QubitError, Statevector,
};
use crate::rdm::RdmPair;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum VqeError {
    #[error("reference needs {n_electrons} electrons on {n_qubits} qubits")]
    Overfull { n_qubits: usize, n_electrons: usize },
    #[error("excitation generator is not anti-Hermitian after mapping: residue {residue:e}")]
    NotAntiHermitian { residue: f64 },
    #[error(transparent)]
    Qubit(#[from] QubitError),
    #[error(transparent)]
    Scf(#[from] ScfError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
}

/// Spin-conserving excitation above the reference determinant, in
/// spin-orbital indices. For doubles `virt.0 > virt.1` and `occ.0 > occ.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationOp {
    Single {
        virt: usize,
        occ: usize,
    },
    Double {
        virt: (usize, usize),
        occ: (usize, usize),
    },
}

impl ExcitationOp {
    /// Deterministic ordering key: singles before doubles, then index tuples.
    pub fn order_key(&self) -> (u8, usize, usize, usize, usize) {
        match *self {
            ExcitationOp::Single { virt, occ } => (0, virt, occ, 0, 0),
            ExcitationOp::Double { virt, occ } => (1, virt.0, virt.1, occ.0, occ.1),
        }
    }

    /// The anti-Hermitian generator `T - T^dag`.
    pub fn generator<T: Scalar>(&self, n_modes: usize) -> FermionOperator<T> {
        let mut op = FermionOperator::new(n_modes);
        match *self {
            ExcitationOp::Single { virt, occ } => {
                op.add_real_term(
                    T::one(),
                    vec![LadderOp::create(virt), LadderOp::annihilate(occ)],
                );
                op.add_real_term(
                    -T::one(),
                    vec![LadderOp::create(occ), LadderOp::annihilate(virt)],
                );
            }
            ExcitationOp::Double { virt, occ } => {
                op.add_real_term(
                    T::one(),
                    vec![
                        LadderOp::create(virt.0),
                        LadderOp::create(virt.1),
                        LadderOp::annihilate(occ.0),
                        LadderOp::annihilate(occ.1),
                    ],
                );
                op.add_real_term(
                    -T::one(),
                    vec![
                        LadderOp::create(occ.1),
                        LadderOp::create(occ.0),
                        LadderOp::annihilate(virt.1),
                        LadderOp::annihilate(virt.0),
                    ],
                );
            }
        }
        op
    }
}

/// Solver controls. `epsilon` is the screening threshold on `|delta E|`;
/// the one-parameter screening scans `theta` in
/// `[-bracket_half_width, bracket_half_width]`.
#[derive(Debug, Clone)]
pub struct VqeConfig<T> {
    pub epsilon: T,
    pub optimizer_tol: T,
    pub max_evals: usize,
    pub bracket_half_width: T,
    pub screen_grid: usize,
    pub analytic_gradient: bool,
    /// Iterative pool fine-tuning after screening: dropped operators are
    /// re-admitted largest-|delta E| first until an addition improves the
    /// energy by less than 1e-8. Off by default.
    pub fine_tuning: bool,
}

impl<T: Scalar> Default for VqeConfig<T> {
    fn default() -> Self {
        VqeConfig {
            epsilon: T::cast(1e-5),
            optimizer_tol: T::cast(1e-7),
            max_evals: 20_000,
            bracket_half_width: T::cast(std::f64::consts::PI),
            screen_grid: 33,
            analytic_gradient: false,
            fine_tuning: false,
        }
    }
}

/// Computational-basis determinant with the lowest `n_electrons`
/// spin-orbitals occupied.
pub fn hf_reference<T: Scalar>(
    n_qubits: usize,
    n_electrons: usize,
) -> Result<Statevector<T>, VqeError> {
    if n_electrons > n_qubits {
        return Err(VqeError::Overfull {
            n_qubits,
            n_electrons,
        });
    }
    let index = (1usize << n_electrons) - 1;
    Ok(Statevector::computational_basis(n_qubits, index)?)
}

/// All S_z-conserving single and double excitations from the occupied to the
/// virtual spin orbitals of a closed-shell reference, in deterministic order.
pub fn build_pool(n_spatial: usize, n_electrons: usize) -> Vec<ExcitationOp> {
    let n_modes = 2 * n_spatial;
    let occupied: Vec<usize> = (0..n_electrons).collect();
    let virtuals: Vec<usize> = (n_electrons..n_modes).collect();
    let spin = |so: usize| so % 2;
    let mut pool = Vec::new();
    for &p in &virtuals {
        for &r in &occupied {
            if spin(p) == spin(r) {
                pool.push(ExcitationOp::Single { virt: p, occ: r });
            }
        }
    }
    for (i, &p) in virtuals.iter().enumerate() {
        for &q in virtuals.iter().take(i) {
            for (k, &r) in occupied.iter().enumerate() {
                for &s in occupied.iter().take(k) {
                    if spin(p) + spin(q) == spin(r) + spin(s) {
                        pool.push(ExcitationOp::Double {
                            virt: (p, q),
                            occ: (r, s),
                        });
                    }
                }
            }
        }
    }
    pool.sort_by_key(|op| op.order_key());
    pool
}

/// Jordan-Wigner image of a generator as `(axes, beta)` pairs with
/// `JW(T - T^dag) = sum_k i beta_k P_k`; the Pauli strings of one generator
/// mutually commute, so the per-operator exponential factorizes exactly.
#[derive(Debug, Clone)]
pub struct CompiledGenerator<T> {
    pub terms: Vec<(PauliAxes, T)>,
}

pub fn compile_generator<T: Scalar>(
    op: &ExcitationOp,
    n_qubits: usize,
) -> Result<CompiledGenerator<T>, VqeError> {
    let sum = jordan_wigner(&op.generator::<T>(n_qubits));
    let mut terms = Vec::with_capacity(sum.len());
    for (axes, coeff) in sum.terms() {
        if coeff.re.abs() > T::cast(1e-12) {
            return Err(VqeError::NotAntiHermitian {
                residue: coeff.re.abs().widen(),
            });
        }
        terms.push((axes.clone(), coeff.im));
    }
    for (i, (a, _)) in terms.iter().enumerate() {
        for (b, _) in terms.iter().skip(i + 1) {
            debug_assert!(a.commutes_with(b), "generator image must commute termwise");
        }
    }
    Ok(CompiledGenerator { terms })
}

/// Applies `exp(theta (T - T^dag))` through its commuting Pauli factors.
fn apply_generator_exponential<T: Scalar>(
    psi: &mut Statevector<T>,
    generator: &CompiledGenerator<T>,
    theta: T,
) {
    for (axes, beta) in &generator.terms {
        psi.apply_pauli_exponential(axes, theta * *beta);
    }
}

/// Applies `G = sum_k i beta_k P_k` itself (not the exponential); used by the
/// adjoint-mode analytic gradient.
fn apply_generator<T: Scalar>(
    psi: &Statevector<T>,
    generator: &CompiledGenerator<T>,
    n_qubits: usize,
) -> Statevector<T> {
    let mut sum = PauliSum::new(n_qubits);
    for (axes, beta) in &generator.terms {
        sum.add_term(axes.clone(), Complex::new(T::zero(), *beta));
    }
    sum.apply(psi).expect("qubit counts match")
}

/// Ordered ansatz: operators, parameters and pre-compiled generators.
#[derive(Debug, Clone)]
pub struct AnsatzState<T> {
    pub ops: Vec<ExcitationOp>,
    pub thetas: Vec<T>,
    compiled: Vec<CompiledGenerator<T>>,
    n_qubits: usize,
}

impl<T: Scalar> AnsatzState<T> {
    pub fn new(n_qubits: usize, ops: Vec<ExcitationOp>, thetas: Vec<T>) -> Result<Self, VqeError> {
        assert_eq!(ops.len(), thetas.len());
        let compiled = ops
            .iter()
            .map(|op| compile_generator(op, n_qubits))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AnsatzState {
            ops,
            thetas,
            compiled,
            n_qubits,
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// First-order Trotter application: operators in list order, the commuting
/// Pauli factors of each operator applied sequentially.
pub fn apply_ansatz<T: Scalar>(
    reference: &Statevector<T>,
    ansatz: &AnsatzState<T>,
) -> Statevector<T> {
    debug_assert_eq!(reference.n_qubits(), ansatz.n_qubits());
    let mut psi = reference.clone();
    for (generator, &theta) in ansatz.compiled.iter().zip(&ansatz.thetas) {
        apply_generator_exponential(&mut psi, generator, theta);
    }
    psi.normalize();
    psi
}

/// One screened pool entry: energy gain, optimal one-parameter angle, operator.
#[derive(Debug, Clone)]
pub struct ScreenedEntry<T> {
    pub delta_e: T,
    pub theta_opt: T,
    pub op: ExcitationOp,
}

/// Screened pool sorted by `|delta_e|` descending (ties broken by operator
/// index tuples) together with the reference energy.
#[derive(Debug, Clone)]
pub struct ScreenedPool<T> {
    pub entries: Vec<ScreenedEntry<T>>,
    pub reference_energy: T,
}

/// Ranks each pool operator by the energy gain of a one-parameter
/// minimization of `<ref| e^{-theta G} H e^{theta G} |ref>` and keeps the
/// operators with `|delta E| > epsilon` (everything at `epsilon = 0`).
pub fn screen_pool<T: Scalar>(
    pool: &[ExcitationOp],
    h: &PauliSum<T>,
    reference: &Statevector<T>,
    epsilon: T,
    cfg: &VqeConfig<T>,
) -> Result<ScreenedPool<T>, VqeError> {
    let reference_energy = h.expectation(reference)?;
    let mut entries = Vec::new();
    for op in pool {
        let generator = compile_generator::<T>(op, h.n_qubits())?;
        let mut energy_at = |theta: T| -> T {
            let mut psi = reference.clone();
            apply_generator_exponential(&mut psi, &generator, theta);
            h.expectation(&psi).expect("Hermitian Hamiltonian")
        };
        let (theta_opt, energy_min) = optim::minimize_scalar(
            &mut energy_at,
            -cfg.bracket_half_width,
            cfg.bracket_half_width,
            cfg.screen_grid,
            T::cast(1e-8),
        );
        let delta_e = energy_min - reference_energy;
        let keep = if epsilon == T::zero() {
            true
        } else {
            delta_e.abs() > epsilon
        };
        if keep {
            entries.push(ScreenedEntry {
                delta_e,
                theta_opt,
                op: *op,
            });
        }
    }
    entries.sort_by(|a, b| {
        b.delta_e
            .abs()
            .partial_cmp(&a.delta_e.abs())
            .expect("finite energies")
            .then_with(|| a.op.order_key().cmp(&b.op.order_key()))
    });
    Ok(ScreenedPool {
        entries,
        reference_energy,
    })
}

/// Variational minimization outcome.
#[derive(Debug, Clone)]
pub struct VqeOutcome<T> {
    pub energy: T,
    pub thetas: Vec<T>,
    pub evaluations: usize,
    pub gradient_norm: T,
    pub converged: bool,
    pub iterations: Vec<optim::QuasiNewtonIteration<T>>,
}

/// Quasi-Newton energy minimization over the ansatz parameters. Gradients
/// are central finite differences with step 1e-6 by default; the analytic
/// adjoint-mode gradient sits behind `cfg.analytic_gradient` and must agree.
pub fn vqe_minimize<T: Scalar>(
    h: &PauliSum<T>,
    reference: &Statevector<T>,
    ops: &[ExcitationOp],
    theta0: Vec<T>,
    cfg: &VqeConfig<T>,
) -> Result<VqeOutcome<T>, VqeError> {
    let ansatz = AnsatzState::new(h.n_qubits(), ops.to_vec(), theta0.clone())?;
    let compiled = ansatz.compiled.clone();
    let reference = reference.clone();
    let h_ref = h;

    let mut energy_of = |thetas: &[T]| -> T {
        let mut psi = reference.clone();
        for (generator, &theta) in compiled.iter().zip(thetas) {
            apply_generator_exponential(&mut psi, generator, theta);
        }
        h_ref.expectation(&psi).expect("Hermitian Hamiltonian")
    };

    let fd_step = T::cast(1e-6);
    let analytic = cfg.analytic_gradient;
    let compiled_for_grad = ansatz.compiled.clone();
    let reference_for_grad = reference.clone();
    let mut gradient = move |f: &mut dyn FnMut(&[T]) -> T, x: &[T]| -> (Vec<T>, usize) {
        if analytic {
            let g = analytic_gradient(h_ref, &reference_for_grad, &compiled_for_grad, x);
            (g, 1)
        } else {
            optim::central_difference_gradient(f, x, fd_step)
        }
    };

    let outcome = optim::bfgs_minimize(
        &mut energy_of,
        &mut gradient,
        theta0,
        cfg.optimizer_tol,
        cfg.max_evals,
    );
    Ok(VqeOutcome {
        energy: outcome.value,
        thetas: outcome.x,
        evaluations: outcome.evaluations,
        gradient_norm: outcome.gradient_norm,
        converged: outcome.converged,
        iterations: outcome.trace,
    })
}

/// Adjoint-mode gradient of the Trotterized expectation:
/// `dE/dtheta_k = 2 Re <lambda_k | G_k | phi_k>` with a single backward sweep.
pub fn analytic_gradient<T: Scalar>(
    h: &PauliSum<T>,
    reference: &Statevector<T>,
    compiled: &[CompiledGenerator<T>],
    thetas: &[T],
) -> Vec<T> {
    let n_qubits = h.n_qubits();
    let mut phi = reference.clone();
    for (generator, &theta) in compiled.iter().zip(thetas) {
        apply_generator_exponential(&mut phi, generator, theta);
    }
    let mut lambda = h.apply(&phi).expect("qubit counts match");
    let mut grads = vec![T::zero(); thetas.len()];
    for k in (0..thetas.len()).rev() {
        let g_phi = apply_generator(&phi, &compiled[k], n_qubits);
        let overlap = lambda.inner(&g_phi);
        grads[k] = T::cast(2.0) * overlap.re;
        apply_generator_exponential(&mut phi, &compiled[k], -thetas[k]);
        apply_generator_exponential(&mut lambda, &compiled[k], -thetas[k]);
    }
    grads
}

/// Spin-traced RDMs measured as Jordan-Wigner Pauli expectations.
pub fn measure_rdms<T: Scalar>(psi: &Statevector<T>, n_spatial: usize) -> RdmPair<T> {
    let n_qubits = psi.n_qubits();
    assert_eq!(n_qubits, 2 * n_spatial, "statevector must hold 2 L qubits");
    let mut one = ndarray::Array2::zeros((n_spatial, n_spatial));
    for p in 0..n_spatial {
        for q in 0..=p {
            let mut op = FermionOperator::<T>::new(n_qubits);
            for sigma in 0..2 {
                op.add_real_term(
                    T::one(),
                    vec![
                        LadderOp::create(2 * p + sigma),
                        LadderOp::annihilate(2 * q + sigma),
                    ],
                );
            }
            let herm = symmetrized_expectation(&op, psi);
            one[[p, q]] = herm;
            one[[q, p]] = herm;
        }
    }
    let mut two = ndarray::Array4::zeros((n_spatial, n_spatial, n_spatial, n_spatial));
    for p in 0..n_spatial {
        for q in 0..n_spatial {
            for r in 0..n_spatial {
                for s in 0..n_spatial {
                    // two_rdm[p][q][r][s] = two_rdm[q][p][s][r]: compute one
                    // representative per pair-swap orbit
                    if (q, p, s, r) < (p, q, r, s) {
                        continue;
                    }
                    let mut op = FermionOperator::<T>::new(n_qubits);
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            op.add_real_term(
                                T::one(),
                                vec![
                                    LadderOp::create(2 * p + sigma),
                                    LadderOp::create(2 * q + tau),
                                    LadderOp::annihilate(2 * r + tau),
                                    LadderOp::annihilate(2 * s + sigma),
                                ],
                            );
                        }
                    }
                    let value = symmetrized_expectation(&op, psi);
                    two[[p, q, r, s]] = value;
                    two[[q, p, s, r]] = value;
                }
            }
        }
    }
    RdmPair {
        one_rdm: one,
        two_rdm: two,
    }
}

/// Expectation of `(A + A^dag) / 2`, which is real for any state; for the
/// RDM entries of a real ground state this equals the plain expectation.
fn symmetrized_expectation<T: Scalar>(op: &FermionOperator<T>, psi: &Statevector<T>) -> T {
    let half = Complex::new(T::cast(0.5), T::zero());
    let mut herm = jordan_wigner(op).scaled(half);
    let adj = jordan_wigner(&op.adjoint()).scaled(half);
    herm.add_assign(&adj);
    herm.expectation(psi).expect("Hermitian by construction")
}

/// Full ESVQE pipeline for one integral set (screening table included).
#[derive(Debug, Clone)]
pub struct EsvqeSolution<T> {
    pub energy: T,
    pub rdms: RdmPair<T>,
    pub screened: ScreenedPool<T>,
    pub outcome: VqeOutcome<T>,
    pub n_qubits: usize,
}

/// Solves an embedded (or small full) problem with the energy-sorting VQE:
/// mean-field canonicalization, pool screening at `cfg.epsilon`, warm-started
/// quasi-Newton optimization, and RDM measurement rotated back to the input
/// basis.
pub fn esvqe_solve<T: Scalar>(
    ints: &IntegralSet<T>,
    n_electrons: usize,
    cfg: &VqeConfig<T>,
    scf: &ScfConfig<T>,
) -> Result<EsvqeSolution<T>, VqeError> {
    let n_spatial = ints.n_spatial();
    let n_qubits = 2 * n_spatial;

    // canonicalize on the embedded mean field so the reference determinant
    // is the Hartree-Fock state of this problem
    let problem = ints.clone().with_n_electrons(n_electrons)?;
    let mf = run_rhf(&problem, None, scf)?;
    let ints_mo = problem.rotated(&mf.coefficients)?;

    let hamiltonian = jordan_wigner(&expand_to_spin_orbitals(&ints_mo));
    let reference = hf_reference::<T>(n_qubits, n_electrons)?;
    let pool = build_pool(n_spatial, n_electrons);
    let screened = screen_pool(&pool, &hamiltonian, &reference, cfg.epsilon, cfg)?;

    let mut ops: Vec<ExcitationOp> = screened.entries.iter().map(|e| e.op).collect();
    let theta0: Vec<T> = screened
        .entries
        .iter()
        .map(|e| e.theta_opt * T::cast(0.5))
        .collect();
    let mut outcome = vqe_minimize(&hamiltonian, &reference, &ops, theta0, cfg)?;

    if cfg.fine_tuning {
        let full = screen_pool(&pool, &hamiltonian, &reference, T::zero(), cfg)?;
        for entry in &full.entries {
            if ops.contains(&entry.op) {
                continue;
            }
            let mut extended = ops.clone();
            extended.push(entry.op);
            let mut theta = outcome.thetas.clone();
            theta.push(entry.theta_opt * T::cast(0.5));
            let refined = vqe_minimize(&hamiltonian, &reference, &extended, theta, cfg)?;
            let improvement = outcome.energy - refined.energy;
            if refined.energy < outcome.energy {
                ops = extended;
                outcome = refined;
            }
            if improvement < T::cast(1e-8) {
                break;
            }
        }
    }

    let ansatz = AnsatzState::new(n_qubits, ops, outcome.thetas.clone())?;
    let psi = apply_ansatz(&reference, &ansatz);
    let rdms_mo = measure_rdms(&psi, n_spatial);
    let rdms = rdms_mo.rotated(&mf.coefficients);

    Ok(EsvqeSolution {
        energy: outcome.energy,
        rdms,
        screened,
        outcome,
        n_qubits,
    })
}
