//! The embedding engine: bath construction from the mean-field one-body
//! density, projector and embedding-Hamiltonian assembly in the interacting
//! bath formulation, the global chemical-potential constraint loop, the
//! correlation-potential fitting mode and democratic evaluation of the total
//! energy.

use std::time::Instant;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::fci::fci_ground_state;
use crate::integrals::{IntegralError, IntegralSet};
use crate::linalg::{self, LinalgError};
use crate::meanfield::{run_rhf, CorrelationPotential, MeanFieldState, ScfConfig, ScfError};
use crate::optim;
use crate::rdm::{RdmError, RdmPair};
use crate::scalar::Scalar;
use crate::vqe::{esvqe_solve, VqeConfig};

#[derive(Debug, Error)]
pub enum DmetError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("fragment {fragment} covers every orbital, leaving no environment")]
    EmptyEnvironment { fragment: usize },
    #[error("bath count {n_bath} exceeds the fragment size {n_fragment}")]
    BathBound { n_bath: usize, n_fragment: usize },
    #[error("chemical-potential response is flat (|df/dmu| = {derivative:e}); trace: {trace:?}")]
    MuStall {
        derivative: f64,
        trace: Vec<(f64, f64)>,
    },
    #[error("solver failed on fragment {fragment}: {message}")]
    Solver { fragment: usize, message: String },
    #[error("fragment {fragment} returned inconsistent density matrices: {source}")]
    Rdm { fragment: usize, source: RdmError },
    #[error("missing result for fragment {fragment}")]
    MissingFragment { fragment: usize },
    #[error("correlation-potential fit needs the u = 0 mean field of the same system")]
    FitReferenceMismatch,
    #[error(transparent)]
    Scf(#[from] ScfError),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Fragment orbital sets together with per-fragment inactive orbitals that
/// stay at the mean-field level.
#[derive(Debug, Clone)]
pub struct FragmentPartition {
    fragments: Vec<Vec<usize>>,
    inactive: Vec<Vec<usize>>,
}

impl FragmentPartition {
    pub fn new(fragments: Vec<Vec<usize>>) -> Result<Self, DmetError> {
        let n = fragments.len();
        Self::with_inactive(fragments, vec![Vec::new(); n])
    }

    pub fn with_inactive(
        fragments: Vec<Vec<usize>>,
        inactive: Vec<Vec<usize>>,
    ) -> Result<Self, DmetError> {
        if fragments.is_empty() {
            return Err(DmetError::InvalidPartition("no fragments given".into()));
        }
        if inactive.len() != fragments.len() {
            return Err(DmetError::InvalidPartition(format!(
                "{} fragments but {} inactive sets",
                fragments.len(),
                inactive.len()
            )));
        }
        let mut fragments = fragments;
        let mut inactive = inactive;
        for set in fragments.iter_mut().chain(inactive.iter_mut()) {
            set.sort_unstable();
        }
        for (idx, frag) in fragments.iter().enumerate() {
            if frag.is_empty() {
                return Err(DmetError::InvalidPartition(format!(
                    "fragment {idx} is empty"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for orb in fragments.iter().chain(inactive.iter()).flatten() {
            if !seen.insert(*orb) {
                return Err(DmetError::InvalidPartition(format!(
                    "orbital {orb} appears in more than one set"
                )));
            }
        }
        Ok(FragmentPartition {
            fragments,
            inactive,
        })
    }

    pub fn fragments(&self) -> &[Vec<usize>] {
        &self.fragments
    }

    pub fn inactive(&self) -> &[Vec<usize>] {
        &self.inactive
    }

    pub fn n_fragments(&self) -> usize {
        self.fragments.len()
    }

    pub fn inactive_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.inactive.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn validate_for(&self, n_spatial: usize) -> Result<(), DmetError> {
        for orb in self.fragments.iter().chain(self.inactive.iter()).flatten() {
            if *orb >= n_spatial {
                return Err(DmetError::InvalidPartition(format!(
                    "orbital {orb} out of range for {n_spatial} orbitals"
                )));
            }
        }
        Ok(())
    }

    /// Every orbital must be owned by a fragment or an inactive set for the
    /// democratic energy to be well defined.
    pub fn require_coverage(&self, n_spatial: usize) -> Result<(), DmetError> {
        self.validate_for(n_spatial)?;
        let owned: usize = self.fragments.iter().map(|f| f.len()).sum::<usize>()
            + self.inactive.iter().map(|f| f.len()).sum::<usize>();
        if owned != n_spatial {
            return Err(DmetError::InvalidPartition(format!(
                "{owned} of {n_spatial} orbitals are owned; democratic evaluation needs full coverage"
            )));
        }
        Ok(())
    }
}

/// Bath and core orbitals from the environment block of the mean-field
/// one-body density, expressed over the environment orbital indices.
#[derive(Debug, Clone)]
pub struct BathDecomposition<T> {
    pub environment: Vec<usize>,
    pub bath_orbitals: Array2<T>,
    pub bath_occupations: Array1<T>,
    pub core_orbitals: Array2<T>,
}

impl<T: Scalar> BathDecomposition<T> {
    pub fn n_bath(&self) -> usize {
        self.bath_orbitals.ncols()
    }

    pub fn n_core(&self) -> usize {
        self.core_orbitals.ncols()
    }
}

/// Diagonalizes the environment block of the mean-field density; eigenvalues
/// strictly inside `(eta, 2 - eta)` become bath orbitals (descending, signs
/// fixed by the eigensolver), eigenvalues at the doubly-occupied end become
/// core orbitals, and the rest is discarded virtual environment.
pub fn build_bath<T: Scalar>(
    one_rdm_mf: &Array2<T>,
    fragment: &[usize],
    eta: T,
) -> Result<BathDecomposition<T>, DmetError> {
    let l = one_rdm_mf.nrows();
    linalg::check_symmetric(one_rdm_mf, T::cast(1e-10))?;
    let in_fragment: std::collections::HashSet<usize> = fragment.iter().copied().collect();
    for &orb in fragment {
        if orb >= l {
            return Err(DmetError::InvalidPartition(format!(
                "fragment orbital {orb} out of range"
            )));
        }
    }
    let environment: Vec<usize> = (0..l).filter(|i| !in_fragment.contains(i)).collect();
    if environment.is_empty() {
        return Err(DmetError::EmptyEnvironment { fragment: 0 });
    }
    let n_env = environment.len();
    let mut env_block = Array2::zeros((n_env, n_env));
    for (bi, &i) in environment.iter().enumerate() {
        for (bj, &j) in environment.iter().enumerate() {
            env_block[[bi, bj]] = one_rdm_mf[[i, j]];
        }
    }
    let eig = linalg::sym_eigen(&env_block)?;
    let two = T::cast(2.0);
    let mut bath_cols: Vec<usize> = Vec::new();
    let mut core_cols: Vec<usize> = Vec::new();
    // descending eigenvalue order
    for k in (0..n_env).rev() {
        let v = eig.values[k];
        if v >= two - eta {
            core_cols.push(k);
        } else if v > eta {
            bath_cols.push(k);
        }
    }
    let n_fragment = fragment.len();
    if bath_cols.len() > n_fragment {
        return Err(DmetError::BathBound {
            n_bath: bath_cols.len(),
            n_fragment,
        });
    }
    let mut bath_orbitals = Array2::zeros((n_env, bath_cols.len()));
    let mut bath_occupations = Array1::zeros(bath_cols.len());
    for (out, &k) in bath_cols.iter().enumerate() {
        bath_occupations[out] = eig.values[k];
        for row in 0..n_env {
            bath_orbitals[[row, out]] = eig.vectors[[row, k]];
        }
    }
    let mut core_orbitals = Array2::zeros((n_env, core_cols.len()));
    for (out, &k) in core_cols.iter().enumerate() {
        for row in 0..n_env {
            core_orbitals[[row, out]] = eig.vectors[[row, k]];
        }
    }
    Ok(BathDecomposition {
        environment,
        bath_orbitals,
        bath_occupations,
        core_orbitals,
    })
}

/// Fragment-plus-bath Hamiltonian in the interacting bath formulation, with
/// the core Coulomb/exchange field folded into the one-body part, the core
/// determinant energy folded into the constant, and the chemical potential
/// subtracted on the fragment diagonal.
#[derive(Debug, Clone)]
pub struct EmbeddingProblem<T> {
    pub ints: IntegralSet<T>,
    pub n_emb_electrons: usize,
    pub n_fragment: usize,
    pub projector: Array2<T>,
    pub mu: T,
    /// Core-field contribution `P^T (J_core - K_core/2) P`; kept separate so
    /// energy evaluation can weight it differently from the bare one-body
    /// part.
    pub core_field: Array2<T>,
}

impl<T: Scalar> EmbeddingProblem<T> {
    pub fn n_orbitals(&self) -> usize {
        self.ints.n_spatial()
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals()
    }

    /// One-body matrix used for energy evaluation: the chemical-potential
    /// shift removed and the core field halved, so that summing fragment
    /// energies counts each embedded-core interaction exactly once.
    pub fn energy_one_body(&self) -> Array2<T> {
        let n = self.n_orbitals();
        let mut h = self.ints.one_body().clone();
        let half = T::cast(0.5);
        for p in 0..n {
            for q in 0..n {
                h[[p, q]] -= half * self.core_field[[p, q]];
            }
        }
        for r in 0..self.n_fragment {
            h[[r, r]] += self.mu;
        }
        h
    }
}

pub fn build_embedding_hamiltonian<T: Scalar>(
    ints: &IntegralSet<T>,
    fragment: &[usize],
    bath: &BathDecomposition<T>,
    mu: T,
) -> Result<EmbeddingProblem<T>, DmetError> {
    let l = ints.n_spatial();
    let n_fragment = fragment.len();
    let n_bath = bath.n_bath();
    let n_emb = n_fragment + n_bath;
    if bath.environment.len() + n_fragment != l {
        return Err(DmetError::InvalidPartition(format!(
            "bath was built for {} environment orbitals, integrals have {}",
            bath.environment.len(),
            l - n_fragment
        )));
    }

    let mut projector = Array2::zeros((l, n_emb));
    for (col, &orb) in fragment.iter().enumerate() {
        projector[[orb, col]] = T::one();
    }
    for b in 0..n_bath {
        for (row, &orb) in bath.environment.iter().enumerate() {
            projector[[orb, n_fragment + b]] = bath.bath_orbitals[[row, b]];
        }
    }
    // orthonormality of the embedding map
    let gram = projector.t().dot(&projector);
    let eye_err = linalg::max_abs_diff(&gram, &Array2::eye(n_emb));
    if eye_err > T::cast(1e-10) {
        return Err(DmetError::InvalidPartition(format!(
            "projector columns deviate from orthonormality by {:e}",
            eye_err.widen()
        )));
    }

    // spin-summed core density over the full basis
    let n_core = bath.n_core();
    let mut core_density = Array2::zeros((l, l));
    if n_core > 0 {
        let two = T::cast(2.0);
        for (ri, &i) in bath.environment.iter().enumerate() {
            for (rj, &j) in bath.environment.iter().enumerate() {
                let mut acc = T::zero();
                for c in 0..n_core {
                    acc += bath.core_orbitals[[ri, c]] * bath.core_orbitals[[rj, c]];
                }
                core_density[[i, j]] = two * acc;
            }
        }
    }
    let half = T::cast(0.5);
    let (core_field_full, core_energy_fold) = if n_core > 0 {
        let j = ints.coulomb_field(&core_density);
        let k = ints.exchange_field(&core_density);
        let mut field = j;
        field.zip_mut_with(&k, |jv, &kv| *jv -= half * kv);
        let mut fold = T::zero();
        for p in 0..l {
            for q in 0..l {
                fold += core_density[[p, q]] * (ints.one_body()[[q, p]] + half * field[[q, p]]);
            }
        }
        (field, fold)
    } else {
        (Array2::zeros((l, l)), T::zero())
    };

    let bare = projector.t().dot(ints.one_body()).dot(&projector);
    let core_field = projector.t().dot(&core_field_full).dot(&projector);
    let mut one_body = Array2::zeros((n_emb, n_emb));
    for p in 0..n_emb {
        for q in 0..=p {
            let sym =
                (bare[[p, q]] + core_field[[p, q]] + bare[[q, p]] + core_field[[q, p]]) * half;
            one_body[[p, q]] = sym;
            one_body[[q, p]] = sym;
        }
    }
    for r in 0..n_fragment {
        one_body[[r, r]] -= mu;
    }
    let mut core_field_sym = Array2::zeros((n_emb, n_emb));
    for p in 0..n_emb {
        for q in 0..=p {
            let sym = (core_field[[p, q]] + core_field[[q, p]]) * half;
            core_field_sym[[p, q]] = sym;
            core_field_sym[[q, p]] = sym;
        }
    }

    let two_body = ints.two_body().transformed(&projector);
    let n_emb_electrons = ints.n_electrons().checked_sub(2 * n_core).ok_or_else(|| {
        DmetError::InvalidPartition(format!(
            "{} core orbitals hold more electrons than the system has",
            n_core
        ))
    })?;
    let embedded = IntegralSet::new(
        n_emb_electrons,
        ints.core_energy() + core_energy_fold,
        one_body,
        two_body,
    )?;
    Ok(EmbeddingProblem {
        ints: embedded,
        n_emb_electrons,
        n_fragment,
        projector,
        mu,
        core_field: core_field_sym,
    })
}

/// Identity embedding: the whole orbital space treated as one fragment.
fn identity_embedding<T: Scalar>(ints: &IntegralSet<T>) -> EmbeddingProblem<T> {
    let l = ints.n_spatial();
    EmbeddingProblem {
        ints: ints.clone(),
        n_emb_electrons: ints.n_electrons(),
        n_fragment: l,
        projector: Array2::eye(l),
        mu: T::zero(),
        core_field: Array2::zeros((l, l)),
    }
}

/// Signed electron-count deviation
/// `sum_A sum_{r in fragment positions} D^A_rr + N_mf - N_occ`;
/// the constraint cost is its square.
pub fn electron_deviation<T: Scalar>(
    fragment_rdms: &[RdmPair<T>],
    partition: &FragmentPartition,
    n_mf: T,
    n_occ: usize,
) -> T {
    let mut total = n_mf - T::cast(n_occ as f64);
    for (rdms, fragment) in fragment_rdms.iter().zip(partition.fragments()) {
        for r in 0..fragment.len() {
            total += rdms.one_rdm[[r, r]];
        }
    }
    total
}

/// Energy and density matrices of one embedded solve.
#[derive(Debug, Clone)]
pub struct SolverOutput<T> {
    pub energy: T,
    pub rdms: RdmPair<T>,
    pub converged: bool,
}

/// High-level solver callable on embedding problems.
pub trait EmbeddedSolver<T: Scalar>: Sync {
    fn solve(&self, problem: &EmbeddingProblem<T>) -> Result<SolverOutput<T>, String>;
    fn name(&self) -> &'static str;
}

/// Exact diagonalization backend.
pub struct FciSolver;

impl<T: Scalar> EmbeddedSolver<T> for FciSolver {
    fn solve(&self, problem: &EmbeddingProblem<T>) -> Result<SolverOutput<T>, String> {
        let solution = fci_ground_state(&problem.ints, problem.n_emb_electrons, 0)
            .map_err(|e| e.to_string())?;
        Ok(SolverOutput {
            energy: solution.energy,
            rdms: solution.rdms,
            converged: true,
        })
    }

    fn name(&self) -> &'static str {
        "fci"
    }
}

/// Energy-sorting VQE backend.
pub struct EsvqeSolver<T> {
    pub vqe: VqeConfig<T>,
    pub scf: ScfConfig<T>,
}

impl<T: Scalar> EmbeddedSolver<T> for EsvqeSolver<T> {
    fn solve(&self, problem: &EmbeddingProblem<T>) -> Result<SolverOutput<T>, String> {
        let solution = esvqe_solve(&problem.ints, problem.n_emb_electrons, &self.vqe, &self.scf)
            .map_err(|e| e.to_string())?;
        Ok(SolverOutput {
            energy: solution.energy,
            rdms: solution.rdms,
            converged: solution.outcome.converged,
        })
    }

    fn name(&self) -> &'static str {
        "esvqe"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmetMode {
    SingleShot,
    ActiveSpace,
    CorrelationFitting,
}

#[derive(Debug, Clone)]
pub struct DmetConfig<T> {
    /// Electron-count tolerance of the chemical-potential loop.
    pub tau: T,
    /// Bath eigenvalue threshold.
    pub eta: T,
    pub mu_max_iter: usize,
    /// Central-difference step of the Newton derivative in mu.
    pub mu_step: T,
    /// Weight of the inactive-block term in the correlation-fit cost.
    pub gamma: T,
    pub mode: DmetMode,
    pub fit_max_outer: usize,
    pub fit_decrease_tol: T,
    pub fit_initial_step: T,
}

impl<T: Scalar> Default for DmetConfig<T> {
    fn default() -> Self {
        DmetConfig {
            tau: T::cast(1e-5),
            eta: T::cast(1e-6),
            mu_max_iter: 30,
            mu_step: T::cast(1e-4),
            gamma: T::one(),
            mode: DmetMode::SingleShot,
            fit_max_outer: 50,
            fit_decrease_tol: T::cast(1e-8),
            fit_initial_step: T::cast(0.05),
        }
    }
}

/// Per-fragment outcome at the final chemical potential.
#[derive(Debug, Clone)]
pub struct FragmentResult<T> {
    pub problem: EmbeddingProblem<T>,
    pub rdms: RdmPair<T>,
    pub solver_energy: T,
    /// Democratic share of the total energy.
    pub energy_share: T,
}

/// One accepted point of the chemical-potential iteration.
#[derive(Debug, Clone)]
pub struct MuIteration<T> {
    pub iteration: usize,
    pub mu: T,
    pub deviation: T,
    pub fragment_energies: Vec<T>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct DmetResult<T> {
    pub total_energy: T,
    pub mu_star: T,
    pub fragment_results: Vec<FragmentResult<T>>,
    pub iterations: Vec<MuIteration<T>>,
    pub converged: bool,
    /// Spin orbitals of the largest embedded problem.
    pub n_qubits: usize,
    /// Best-cost history of the correlation-potential fit, when that mode ran.
    pub fit_history: Vec<T>,
}

struct FragmentSolve<T> {
    problem: EmbeddingProblem<T>,
    rdms: RdmPair<T>,
    solver_energy: T,
}

fn solve_all_fragments<T: Scalar>(
    ints: &IntegralSet<T>,
    partition: &FragmentPartition,
    baths: &[BathDecomposition<T>],
    solver: &dyn EmbeddedSolver<T>,
    mu: T,
) -> Result<Vec<FragmentSolve<T>>, DmetError> {
    let mut solves = Vec::with_capacity(partition.n_fragments());
    for (index, fragment) in partition.fragments().iter().enumerate() {
        let problem = build_embedding_hamiltonian(ints, fragment, &baths[index], mu)?;
        let output = solver
            .solve(&problem)
            .map_err(|message| DmetError::Solver {
                fragment: index,
                message,
            })?;
        if !output.converged {
            return Err(DmetError::Solver {
                fragment: index,
                message: "solver reported an unconverged result".into(),
            });
        }
        output
            .rdms
            .validate(problem.n_emb_electrons, T::cast(1e-5))
            .map_err(|source| DmetError::Rdm {
                fragment: index,
                source,
            })?;
        solves.push(FragmentSolve {
            problem,
            rdms: output.rdms,
            solver_energy: output.energy,
        });
    }
    Ok(solves)
}

/// Number of mean-field electrons in the inactive orbitals; fixed across the
/// chemical-potential loop.
fn inactive_electron_count<T: Scalar>(partition: &FragmentPartition, mf: &MeanFieldState<T>) -> T {
    partition
        .inactive_union()
        .iter()
        .map(|&r| mf.one_rdm[[r, r]])
        .sum()
}

/// Newton-Raphson root search on the signed electron deviation `f(mu)` with
/// a central-difference derivative. The bath is built once from the fixed
/// mean-field density; `mu` enters only the embedding Hamiltonians.
pub fn optimize_mu<T: Scalar>(
    ints: &IntegralSet<T>,
    partition: &FragmentPartition,
    solver: &dyn EmbeddedSolver<T>,
    cfg: &DmetConfig<T>,
    mf: &MeanFieldState<T>,
) -> Result<DmetResult<T>, DmetError> {
    partition.require_coverage(ints.n_spatial())?;
    let baths: Vec<BathDecomposition<T>> = partition
        .fragments()
        .iter()
        .map(|fragment| build_bath(&mf.one_rdm, fragment, cfg.eta))
        .collect::<Result<_, _>>()?;
    let n_mf = inactive_electron_count(partition, mf);
    let n_occ = ints.n_electrons();

    let clock = Instant::now();
    let mut iterations: Vec<MuIteration<T>> = Vec::new();
    let evaluate = |mu: T,
                    iterations: Option<&mut Vec<MuIteration<T>>>|
     -> Result<(T, Vec<FragmentSolve<T>>), DmetError> {
        let solves = solve_all_fragments(ints, partition, &baths, solver, mu)?;
        let rdms: Vec<RdmPair<T>> = solves.iter().map(|s| s.rdms.clone()).collect();
        let deviation = electron_deviation(&rdms, partition, n_mf, n_occ);
        if let Some(trace) = iterations {
            trace.push(MuIteration {
                iteration: trace.len(),
                mu,
                deviation,
                fragment_energies: solves.iter().map(|s| s.solver_energy).collect(),
                wall_seconds: clock.elapsed().as_secs_f64(),
            });
        }
        Ok((deviation, solves))
    };

    let mut mu = T::zero();
    let (mut deviation, mut solves) = evaluate(mu, Some(&mut iterations))?;
    let mut converged = deviation.abs() < cfg.tau;

    if !converged {
        for _ in 0..cfg.mu_max_iter {
            let step = cfg.mu_step;
            let plus = evaluate(mu + step, None)?.0;
            let minus = evaluate(mu - step, None)?.0;
            let derivative = (plus - minus) / (T::cast(2.0) * step);
            if derivative.abs() < T::cast(1e-12) {
                return Err(DmetError::MuStall {
                    derivative: derivative.widen(),
                    trace: iterations
                        .iter()
                        .map(|it| (it.mu.widen(), it.deviation.widen()))
                        .collect(),
                });
            }
            let mut delta = deviation / derivative;
            let cap = T::one();
            if delta.abs() > cap {
                delta = if delta > T::zero() { cap } else { -cap };
            }
            mu -= delta;
            let (dev, new_solves) = evaluate(mu, Some(&mut iterations))?;
            deviation = dev;
            solves = new_solves;
            if deviation.abs() < cfg.tau {
                converged = true;
                break;
            }
        }
    }

    let (total_energy, shares) = democratic_energy_shares(&solves, partition, ints, Some(mf))?;
    let n_qubits = solves
        .iter()
        .map(|s| s.problem.n_qubits())
        .max()
        .unwrap_or(0);
    let fragment_results = solves
        .into_iter()
        .zip(shares)
        .map(|(s, share)| FragmentResult {
            problem: s.problem,
            rdms: s.rdms,
            solver_energy: s.solver_energy,
            energy_share: share,
        })
        .collect();
    Ok(DmetResult {
        total_energy,
        mu_star: mu,
        fragment_results,
        iterations,
        converged,
        n_qubits,
        fit_history: Vec::new(),
    })
}

/// Democratic total energy: every embedded Hamiltonian term is weighted by
/// the fraction of its embedding-basis indices that are fragment indices
/// (1/2 per one-body index, 1/4 per two-body index), contracted with that
/// fragment's density matrices; the chemical-potential shift is removed and
/// the core field half-weighted before contraction. Inactive orbitals
/// contribute at the mean-field level.
pub fn democratic_energy<T: Scalar>(
    fragment_results: &[FragmentResult<T>],
    partition: &FragmentPartition,
    ints: &IntegralSet<T>,
    mf: Option<&MeanFieldState<T>>,
) -> Result<T, DmetError> {
    let solves: Vec<FragmentSolve<T>> = fragment_results
        .iter()
        .map(|r| FragmentSolve {
            problem: r.problem.clone(),
            rdms: r.rdms.clone(),
            solver_energy: r.solver_energy,
        })
        .collect();
    Ok(democratic_energy_shares(&solves, partition, ints, mf)?.0)
}

fn democratic_energy_shares<T: Scalar>(
    solves: &[FragmentSolve<T>],
    partition: &FragmentPartition,
    ints: &IntegralSet<T>,
    mf: Option<&MeanFieldState<T>>,
) -> Result<(T, Vec<T>), DmetError> {
    if solves.len() != partition.n_fragments() {
        return Err(DmetError::MissingFragment {
            fragment: solves.len(),
        });
    }
    partition.require_coverage(ints.n_spatial())?;
    let half = T::cast(0.5);
    let quarter = T::cast(0.25);
    let mut shares = Vec::with_capacity(solves.len());
    for solve in solves {
        let n_emb = solve.problem.n_orbitals();
        let n_frag = solve.problem.n_fragment;
        let h_energy = solve.problem.energy_one_body();
        let weight1 = |p: usize, q: usize| -> T {
            let owned = (p < n_frag) as usize + (q < n_frag) as usize;
            T::cast(owned as f64) * half
        };
        let mut share = T::zero();
        for p in 0..n_emb {
            for q in 0..n_emb {
                let w = weight1(p, q);
                if w == T::zero() {
                    continue;
                }
                share += w * h_energy[[p, q]] * solve.rdms.one_rdm[[p, q]];
            }
        }
        for p in 0..n_emb {
            for q in 0..n_emb {
                for r in 0..n_emb {
                    for s in 0..n_emb {
                        let owned = (p < n_frag) as usize
                            + (q < n_frag) as usize
                            + (r < n_frag) as usize
                            + (s < n_frag) as usize;
                        if owned == 0 {
                            continue;
                        }
                        let v = solve.problem.ints.two_body().get(p, q, r, s);
                        if v == T::zero() {
                            continue;
                        }
                        let w = T::cast(owned as f64) * quarter;
                        share += half * w * v * solve.rdms.two_rdm[[p, r, s, q]];
                    }
                }
            }
        }
        shares.push(share);
    }
    let mut total = ints.core_energy() + shares.iter().copied().sum::<T>();

    let inactive = partition.inactive_union();
    if !inactive.is_empty() {
        let mf = mf.ok_or(DmetError::FitReferenceMismatch)?;
        let density = &mf.one_rdm;
        let j = ints.coulomb_field(density);
        let k = ints.exchange_field(density);
        let l = ints.n_spatial();
        for &i in &inactive {
            let mut e = T::zero();
            for q in 0..l {
                let field = j[[i, q]] - half * k[[i, q]];
                e += (ints.one_body()[[i, q]] + half * field) * density[[q, i]];
            }
            total += e;
        }
    }
    Ok((total, shares))
}

/// Correlation-potential fitting cost
/// `L(u) = sum_A sum_{rs in fragment} (D^frag_rs - D_mf(u)_rs)^2
///  + gamma sum_{rs in inactive} (D_mf(u)_rs - D_mf(0)_rs)^2`.
pub fn correlation_fit_cost<T: Scalar>(
    u: &CorrelationPotential<T>,
    fragment_results: &[FragmentResult<T>],
    mf_of_u: &MeanFieldState<T>,
    mf_reference: &MeanFieldState<T>,
    partition: &FragmentPartition,
    gamma: T,
) -> Result<T, DmetError> {
    if fragment_results.len() != partition.n_fragments() {
        return Err(DmetError::MissingFragment {
            fragment: fragment_results.len(),
        });
    }
    u.validate_pattern(partition.fragments())?;
    if mf_of_u.one_rdm.dim() != mf_reference.one_rdm.dim() {
        return Err(DmetError::FitReferenceMismatch);
    }
    let mut cost = T::zero();
    for (result, fragment) in fragment_results.iter().zip(partition.fragments()) {
        for (ri, &orb_r) in fragment.iter().enumerate() {
            for (si, &orb_s) in fragment.iter().enumerate() {
                let diff = result.rdms.one_rdm[[ri, si]] - mf_of_u.one_rdm[[orb_r, orb_s]];
                cost += diff * diff;
            }
        }
    }
    let inactive = partition.inactive_union();
    for &r in &inactive {
        for &s in &inactive {
            let diff = mf_of_u.one_rdm[[r, s]] - mf_reference.one_rdm[[r, s]];
            cost += gamma * diff * diff;
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Fci,
    Esvqe,
}

fn make_solver<T: Scalar>(
    kind: SolverKind,
    scf: &ScfConfig<T>,
    vqe: &VqeConfig<T>,
) -> Box<dyn EmbeddedSolver<T>> {
    match kind {
        SolverKind::Fci => Box::new(FciSolver),
        SolverKind::Esvqe => Box::new(EsvqeSolver {
            vqe: vqe.clone(),
            scf: scf.clone(),
        }),
    }
}

/// Parameter packing for the correlation potential: the upper triangle of
/// each fragment block, fragments in order.
fn unpack_potential<T: Scalar>(
    params: &[T],
    partition: &FragmentPartition,
    n_spatial: usize,
) -> CorrelationPotential<T> {
    let mut u = CorrelationPotential::zeros(n_spatial);
    let mut cursor = 0;
    for fragment in partition.fragments() {
        for (i, &orb_i) in fragment.iter().enumerate() {
            for &orb_j in fragment.iter().skip(i) {
                u.set(orb_i, orb_j, params[cursor]);
                cursor += 1;
            }
        }
    }
    debug_assert_eq!(cursor, params.len());
    u
}

fn potential_dimension(partition: &FragmentPartition) -> usize {
    partition
        .fragments()
        .iter()
        .map(|f| f.len() * (f.len() + 1) / 2)
        .sum()
}

/// Full DMET driver.
///
/// `single_shot` solves the mean field once and iterates the global chemical
/// potential; `active_space` solves one fragment without any constraint;
/// `correlation_fitting` wraps single-shot runs in a derivative-free search
/// over the fragment-block correlation potential.
pub fn run_dmet<T: Scalar>(
    ints: &IntegralSet<T>,
    partition: &FragmentPartition,
    solver_kind: SolverKind,
    cfg: &DmetConfig<T>,
    scf: &ScfConfig<T>,
    vqe: &VqeConfig<T>,
) -> Result<DmetResult<T>, DmetError> {
    let solver = make_solver(solver_kind, scf, vqe);
    match cfg.mode {
        DmetMode::SingleShot => {
            let mf = run_rhf(ints, None, scf)?;
            optimize_mu(ints, partition, solver.as_ref(), cfg, &mf)
        }
        DmetMode::ActiveSpace => {
            if partition.n_fragments() != 1 {
                return Err(DmetError::InvalidPartition(
                    "active-space mode takes exactly one fragment".into(),
                ));
            }
            if !partition.inactive_union().is_empty() {
                return Err(DmetError::InvalidPartition(
                    "active-space mode does not take inactive orbitals".into(),
                ));
            }
            partition.validate_for(ints.n_spatial())?;
            let fragment = &partition.fragments()[0];
            let problem = if fragment.len() == ints.n_spatial() {
                identity_embedding(ints)
            } else {
                let mf = run_rhf(ints, None, scf)?;
                let bath = build_bath(&mf.one_rdm, fragment, cfg.eta)?;
                build_embedding_hamiltonian(ints, fragment, &bath, T::zero())?
            };
            let output = solver
                .solve(&problem)
                .map_err(|message| DmetError::Solver {
                    fragment: 0,
                    message,
                })?;
            output
                .rdms
                .validate(problem.n_emb_electrons, T::cast(1e-5))
                .map_err(|source| DmetError::Rdm {
                    fragment: 0,
                    source,
                })?;
            let n_qubits = problem.n_qubits();
            Ok(DmetResult {
                total_energy: output.energy,
                mu_star: T::zero(),
                fragment_results: vec![FragmentResult {
                    problem,
                    rdms: output.rdms,
                    solver_energy: output.energy,
                    energy_share: output.energy,
                }],
                iterations: Vec::new(),
                converged: output.converged,
                n_qubits,
                fit_history: Vec::new(),
            })
        }
        DmetMode::CorrelationFitting => {
            partition.require_coverage(ints.n_spatial())?;
            let mf_reference = run_rhf(ints, None, scf)?;
            let dim = potential_dimension(partition);
            let mut inner_cfg = cfg.clone();
            inner_cfg.mode = DmetMode::SingleShot;
            let mut cost = |params: &[T]| -> Result<T, DmetError> {
                let u = unpack_potential(params, partition, ints.n_spatial());
                let mf_u = run_rhf(ints, Some(&u), scf)?;
                let inner = optimize_mu(ints, partition, solver.as_ref(), &inner_cfg, &mf_u)?;
                correlation_fit_cost(
                    &u,
                    &inner.fragment_results,
                    &mf_u,
                    &mf_reference,
                    partition,
                    cfg.gamma,
                )
            };
            let outcome = optim::nelder_mead(
                &mut cost,
                vec![T::zero(); dim],
                cfg.fit_initial_step,
                cfg.fit_decrease_tol,
                cfg.fit_max_outer,
            )?;
            let u = unpack_potential(&outcome.x, partition, ints.n_spatial());
            let mf_u = run_rhf(ints, Some(&u), scf)?;
            let mut result = optimize_mu(ints, partition, solver.as_ref(), &inner_cfg, &mf_u)?;
            result.fit_history = outcome.history;
            result.converged = result.converged && outcome.converged;
            Ok(result)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fci::{fci_ground_state, hubbard_dimer_ground_energy};
    use crate::integrals::build_hubbard;
    use ndarray::array;

    fn default_cfg() -> DmetConfig<f64> {
        DmetConfig::default()
    }

    #[test]
    fn partition_rejects_overlap_and_empty() {
        assert!(FragmentPartition::new(vec![vec![0], vec![0]]).is_err());
        assert!(FragmentPartition::new(vec![vec![]]).is_err());
        assert!(FragmentPartition::with_inactive(vec![vec![0]], vec![vec![0]]).is_err());
        let p = FragmentPartition::new(vec![vec![1, 0]]).unwrap();
        assert_eq!(p.fragments()[0], vec![0, 1]);
    }

    #[test]
    fn bath_of_dimer_density_is_single_unit_orbital() {
        let density: Array2<f64> = array![[1.0, 1.0], [1.0, 1.0]];
        let bath = build_bath(&density, &[0], 1e-6).unwrap();
        assert_eq!(bath.n_bath(), 1);
        assert_eq!(bath.n_core(), 0);
        assert!((bath.bath_occupations[0] - 1.0).abs() < 1e-12);
        assert!((bath.bath_orbitals[[0, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_fragment_yields_no_bath() {
        // block-diagonal idempotent density: fragment {0} disconnected
        let density: Array2<f64> = array![
            [2.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 1.0, 0.0],
            [0.0, 1.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0]
        ];
        let bath = build_bath(&density, &[0], 1e-6).unwrap();
        assert_eq!(bath.n_bath(), 0);
        for v in bath.bath_occupations.iter() {
            assert!(*v > 1e-6 && *v < 2.0 - 1e-6);
        }
        // environment eigenvalues are exactly {0, 2}
        assert_eq!(bath.n_core(), 1);
    }

    #[test]
    fn six_site_two_site_fragment_bath_count() {
        let ints = build_hubbard::<f64>(6, 1.0, 0.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let bath = build_bath(&mf.one_rdm, &[0, 1], 1e-6).unwrap();
        assert_eq!(bath.n_bath(), 2);
        assert_eq!(bath.n_core(), 1);
        for v in bath.bath_occupations.iter() {
            assert!(*v > 1e-6 && *v < 2.0 - 1e-6);
        }
    }

    #[test]
    fn full_fragment_environment_rejected() {
        let density: Array2<f64> = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            build_bath(&density, &[0, 1], 1e-6),
            Err(DmetError::EmptyEnvironment { .. })
        ));
    }

    #[test]
    fn embedding_spans_full_space_for_dimer_fragment() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let bath = build_bath(&mf.one_rdm, &[0], 1e-6).unwrap();
        let problem = build_embedding_hamiltonian(&ints, &[0], &bath, 0.0).unwrap();
        assert_eq!(problem.n_orbitals(), 2);
        assert_eq!(problem.n_emb_electrons, 2);
        // square orthogonal projector: the embedded spectrum matches the full one
        let emb = fci_ground_state(&problem.ints, 2, 0).unwrap();
        let full = fci_ground_state(&ints, 2, 0).unwrap();
        assert!((emb.energy - full.energy).abs() < 1e-10);
    }

    #[test]
    fn mu_shift_hits_exactly_one_diagonal() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let bath = build_bath(&mf.one_rdm, &[0], 1e-6).unwrap();
        let base = build_embedding_hamiltonian(&ints, &[0], &bath, 0.0).unwrap();
        let shifted = build_embedding_hamiltonian(&ints, &[0], &bath, 0.1).unwrap();
        let mut diffs = Vec::new();
        for p in 0..2 {
            for q in 0..2 {
                let d = shifted.ints.one_body()[[p, q]] - base.ints.one_body()[[p, q]];
                if d.abs() > 1e-13 {
                    diffs.push(((p, q), d));
                }
            }
        }
        assert_eq!(diffs.len(), 1);
        assert_eq!(diffs[0].0, (0, 0));
        assert!((diffs[0].1 + 0.1).abs() < 1e-13);
    }

    #[test]
    fn noninteracting_embedding_reproduces_mean_field_occupation() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let bath = build_bath(&mf.one_rdm, &[0], 1e-6).unwrap();
        let problem = build_embedding_hamiltonian(&ints, &[0], &bath, 0.0).unwrap();
        let solution = fci_ground_state(&problem.ints, problem.n_emb_electrons, 0).unwrap();
        assert!((solution.rdms.one_rdm[[0, 0]] - mf.one_rdm[[0, 0]]).abs() < 1e-8);
    }

    #[test]
    fn deviation_is_additive() {
        let partition = FragmentPartition::new(vec![vec![0], vec![1]]).unwrap();
        let mut one_a = Array2::zeros((2, 2));
        one_a[[0, 0]] = 1.1;
        let mut one_b = Array2::zeros((2, 2));
        one_b[[0, 0]] = 1.1;
        let rdms = vec![
            RdmPair {
                one_rdm: one_a,
                two_rdm: ndarray::Array4::zeros((2, 2, 2, 2)),
            },
            RdmPair {
                one_rdm: one_b,
                two_rdm: ndarray::Array4::zeros((2, 2, 2, 2)),
            },
        ];
        let dev: f64 = electron_deviation(&rdms, &partition, 0.0, 2);
        assert!((dev - 0.2).abs() < 1e-14);
    }

    #[test]
    fn democratic_weights_sum_to_one_over_owning_fragments() {
        // two fragments covering four orbitals; each full-basis index tuple is
        // owned once, so per-term weights over fragments add to 1
        let partition = FragmentPartition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let owner = |orb: usize| -> usize {
            partition
                .fragments()
                .iter()
                .position(|f| f.contains(&orb))
                .unwrap()
        };
        for tuple in [(0usize, 1usize), (0, 2), (3, 1)] {
            let total: f64 = (0..2)
                .map(|frag| {
                    let owned =
                        (owner(tuple.0) == frag) as usize + (owner(tuple.1) == frag) as usize;
                    owned as f64 / 2.0
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
        for tuple in [(0usize, 1usize, 2usize, 3usize), (0, 0, 1, 2), (3, 3, 3, 0)] {
            let total: f64 = (0..2)
                .map(|frag| {
                    let owned = (owner(tuple.0) == frag) as usize
                        + (owner(tuple.1) == frag) as usize
                        + (owner(tuple.2) == frag) as usize
                        + (owner(tuple.3) == frag) as usize;
                    owned as f64 / 4.0
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimer_single_shot_recovers_exact_energy() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1]]).unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        // symmetric half filling: the constraint is satisfied at mu = 0
        assert_eq!(result.iterations.len(), 1);
        assert!(result.mu_star.abs() < 1e-12);
        let exact = hubbard_dimer_ground_energy(4.0, 1.0);
        assert!((result.total_energy - exact).abs() < 1e-8);
        assert_eq!(result.n_qubits, 4);
    }

    #[test]
    fn noninteracting_chain_matches_mean_field() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let partition = FragmentPartition::new((0..4).map(|i| vec![i]).collect()).unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert!((result.total_energy - mf.energy).abs() < 1e-8);
    }

    #[test]
    fn noninteracting_chain_with_inactive_orbital_stays_exact() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let partition = FragmentPartition::with_inactive(
            vec![vec![0], vec![1], vec![2]],
            vec![vec![], vec![], vec![3]],
        )
        .unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert!((result.total_energy - mf.energy).abs() < 1e-8);
    }

    #[test]
    fn active_space_full_fragment_equals_fci() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0, 1, 2, 3]]).unwrap();
        let mut cfg = default_cfg();
        cfg.mode = DmetMode::ActiveSpace;
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &cfg,
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        let exact = fci_ground_state(&ints, 4, 0).unwrap();
        assert!((result.total_energy - exact.energy).abs() < 1e-10);
        assert!(result.iterations.is_empty());
        assert_eq!(result.mu_star, 0.0);
    }

    #[test]
    fn mu_budget_zero_reports_unconverged_with_single_trace_entry() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, Some(2)).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mut cfg = default_cfg();
        cfg.mu_max_iter = 0;
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &cfg,
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations.len(), 1);
    }

    #[test]
    fn quarter_filled_chain_newton_converges() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, Some(2)).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        let last = result.iterations.last().unwrap();
        assert!(last.deviation.abs() < 1e-5);
        assert!(result.iterations.len() > 1, "expected genuine Newton steps");
    }

    /// Solver double whose fragment occupations ignore the chemical
    /// potential entirely.
    struct FlatSolver;

    impl EmbeddedSolver<f64> for FlatSolver {
        fn solve(&self, problem: &EmbeddingProblem<f64>) -> Result<SolverOutput<f64>, String> {
            // valid pair of density matrices (right trace, consistent partial
            // trace) whose fragment occupation never responds to mu: 0.1
            // electrons shifted from the bath onto the fragment position
            let n = problem.n_orbitals();
            let n_emb = problem.n_emb_electrons as f64;
            let mut one = Array2::zeros((n, n));
            for p in 0..n {
                one[[p, p]] = n_emb / n as f64;
            }
            one[[0, 0]] += 0.1;
            one[[n - 1, n - 1]] -= 0.1;
            let mut two = ndarray::Array4::zeros((n, n, n, n));
            let weight = (n_emb - 1.0) / n_emb;
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            two[[p, q, r, s]] = weight * one[[p, s]] * one[[q, r]];
                        }
                    }
                }
            }
            Ok(SolverOutput {
                energy: 0.0,
                rdms: RdmPair {
                    one_rdm: one,
                    two_rdm: two,
                },
                converged: true,
            })
        }

        fn name(&self) -> &'static str {
            "flat"
        }
    }

    #[test]
    fn flat_response_raises_mu_stall() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let err = optimize_mu(&ints, &partition, &FlatSolver, &default_cfg(), &mf).unwrap_err();
        match err {
            DmetError::MuStall { trace, .. } => assert!(!trace.is_empty()),
            other => panic!("expected a stall, got {other}"),
        }
    }

    /// Solver double that fails on a chosen fragment index.
    struct FailingSolver {
        hits: std::sync::atomic::AtomicUsize,
        fail_at: usize,
    }

    impl EmbeddedSolver<f64> for FailingSolver {
        fn solve(&self, problem: &EmbeddingProblem<f64>) -> Result<SolverOutput<f64>, String> {
            let hit = self
                .hits
                .fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if hit == self.fail_at {
                return Err("synthetic breakdown".into());
            }
            FciSolver.solve(problem)
        }

        fn name(&self) -> &'static str {
            "failing"
        }
    }

    #[test]
    fn solver_failure_carries_fragment_index() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let solver = FailingSolver {
            hits: std::sync::atomic::AtomicUsize::new(0),
            fail_at: 2,
        };
        let err = optimize_mu(&ints, &partition, &solver, &default_cfg(), &mf).unwrap_err();
        match err {
            DmetError::Solver { fragment, message } => {
                assert_eq!(fragment, 2);
                assert!(message.contains("synthetic breakdown"));
            }
            other => panic!("expected a solver failure, got {other}"),
        }
    }

    #[test]
    fn active_space_subset_is_exact_without_interaction() {
        // for a one-body problem the fragment+bath determinant carries the
        // whole mean field, so the active-space total equals the global one
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, false, None).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let partition = FragmentPartition::new(vec![vec![1, 2]]).unwrap();
        let cfg = DmetConfig {
            mode: DmetMode::ActiveSpace,
            ..default_cfg()
        };
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &cfg,
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!((result.total_energy - mf.energy).abs() < 1e-8);
        assert!(result.n_qubits <= 8);
    }

    #[test]
    fn correlation_fit_cost_terms() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1]]).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        // u = 0, fragment blocks equal to the mean field -> both terms vanish
        let u = CorrelationPotential::zeros(2);
        let cost =
            correlation_fit_cost(&u, &result.fragment_results, &mf, &mf, &partition, 1.0).unwrap();
        // diagonal fragment occupations match at half filling by symmetry
        assert!(cost < 1e-10);
        // gamma has no effect when no inactive orbitals exist
        let cost_gamma =
            correlation_fit_cost(&u, &result.fragment_results, &mf, &mf, &partition, 123.0)
                .unwrap();
        assert_eq!(cost, cost_gamma);
    }

    #[test]
    fn fit_cost_counts_squared_discrepancies() {
        // one fragment diagonal off by 0.1 -> cost 0.01, gamma inert
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1]]).unwrap();
        let mf = run_rhf(&ints, None, &Default::default()).unwrap();
        let mut result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        let bumped = result.fragment_results[0].rdms.one_rdm[[0, 0]] + 0.1;
        result.fragment_results[0].rdms.one_rdm[[0, 0]] = bumped;
        let u = CorrelationPotential::zeros(2);
        let cost =
            correlation_fit_cost(&u, &result.fragment_results, &mf, &mf, &partition, 7.0).unwrap();
        assert!((cost - 0.01).abs() < 1e-9);
    }

    #[test]
    fn correlation_fitting_mode_runs_and_reduces_cost() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mut cfg = default_cfg();
        cfg.mode = DmetMode::CorrelationFitting;
        cfg.fit_max_outer = 15;
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &cfg,
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!(!result.fit_history.is_empty());
        let first = result.fit_history.first().unwrap();
        let best = result
            .fit_history
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(best <= *first + 1e-12);
        // the final answer stays a valid single-shot result
        let last = result.iterations.last().unwrap();
        assert!(last.deviation.abs() < 1e-5);
    }

    #[test]
    fn esvqe_solver_matches_fci_on_dimer_dmet() {
        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let partition = FragmentPartition::new(vec![vec![0], vec![1]]).unwrap();
        let fci = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        let vqe = run_dmet(
            &ints,
            &partition,
            SolverKind::Esvqe,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        assert!((fci.total_energy - vqe.total_energy).abs() < 1e-6);
    }

    #[test]
    fn two_copy_block_problem_is_twice_the_single_copy() {
        // two non-interacting dimer copies in one integral set
        let dimer = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        let mut one = Array2::zeros((4, 4));
        one[[0, 1]] = -1.0;
        one[[1, 0]] = -1.0;
        one[[2, 3]] = -1.0;
        one[[3, 2]] = -1.0;
        let mut two = crate::integrals::TwoBodyTensor::zeros(4);
        for i in 0..4 {
            two.set(i, i, i, i, 4.0);
        }
        let ints = IntegralSet::new(4, 0.0, one, two).unwrap();
        let partition = FragmentPartition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let result = run_dmet(
            &ints,
            &partition,
            SolverKind::Fci,
            &default_cfg(),
            &Default::default(),
            &VqeConfig::default(),
        )
        .unwrap();
        let single = fci_ground_state(&dimer, 2, 0).unwrap();
        assert!(result.converged);
        assert!((result.total_energy - 2.0 * single.energy).abs() < 1e-8);
    }
}
