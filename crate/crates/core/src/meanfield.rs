//! Restricted Hartree-Fock over an orthonormal orbital basis, optionally
//! augmented with a correlation potential on fragment blocks.
//!
//! The Fock matrix is `F = d + u + sum_rs D_rs [(pq|rs) - 1/2 (pr|qs)]` with
//! the spin-summed density `D = 2 C_occ C_occ^T`, and the energy is
//! `core + 1/2 sum_pq D_pq (d + u + F)_qp`.

use ndarray::Array2;
use thiserror::Error;

use crate::integrals::IntegralSet;
use crate::linalg::{self, LinalgError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ScfError {
    #[error("restricted SCF needs an even electron count, got {0}")]
    OddElectronCount(usize),
    #[error("{n_electrons} electrons exceed the capacity of {n_spatial} spatial orbitals")]
    TooManyElectrons {
        n_electrons: usize,
        n_spatial: usize,
    },
    #[error(
        "SCF did not converge in {iterations} iterations (last density residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },
    #[error("degenerate frontier orbitals: HOMO-LUMO gap {gap:e} below 1e-9")]
    DegenerateFrontier { gap: f64 },
    #[error("correlation potential breaks the fragment-block pattern at ({row},{col})")]
    PotentialPattern { row: usize, col: usize },
    #[error("index {index} out of range for {size} orbitals")]
    IndexRange { index: usize, size: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// SCF iteration controls. Damping is plain density mixing; DIIS over Fock
/// matrices can be switched on for harder cases.
#[derive(Debug, Clone)]
pub struct ScfConfig<T> {
    pub density_tol: T,
    pub max_iter: usize,
    pub damping: T,
    pub use_diis: bool,
    pub diis_subspace: usize,
}

impl<T: Scalar> Default for ScfConfig<T> {
    fn default() -> Self {
        ScfConfig {
            density_tol: T::cast(1e-10),
            max_iter: 200,
            damping: T::cast(0.5),
            use_diis: false,
            diis_subspace: 8,
        }
    }
}

/// One SCF step of the structured iteration trace.
#[derive(Debug, Clone)]
pub struct ScfIteration<T> {
    pub iteration: usize,
    pub energy: T,
    pub density_residual: T,
}

/// Converged restricted mean-field solution.
#[derive(Debug, Clone)]
pub struct MeanFieldState<T> {
    pub coefficients: Array2<T>,
    pub orbital_energies: ndarray::Array1<T>,
    pub n_occ_spatial: usize,
    pub one_rdm: Array2<T>,
    pub energy: T,
    pub scf_trace: Vec<ScfIteration<T>>,
}

impl<T: Scalar> MeanFieldState<T> {
    /// Extracts the sub-matrix of the one-body RDM at given rows/columns.
    pub fn rdm_block(&self, rows: &[usize], cols: &[usize]) -> Result<Array2<T>, ScfError> {
        let size = self.one_rdm.nrows();
        for &i in rows.iter().chain(cols.iter()) {
            if i >= size {
                return Err(ScfError::IndexRange { index: i, size });
            }
        }
        let mut block = Array2::zeros((rows.len(), cols.len()));
        for (bi, &i) in rows.iter().enumerate() {
            for (bj, &j) in cols.iter().enumerate() {
                block[[bi, bj]] = self.one_rdm[[i, j]];
            }
        }
        Ok(block)
    }
}

/// Extraction helper matching the state method; kept as a free function for
/// symmetry with the other module operations.
pub fn mean_field_rdm_block<T: Scalar>(
    state: &MeanFieldState<T>,
    rows: &[usize],
    cols: &[usize],
) -> Result<Array2<T>, ScfError> {
    state.rdm_block(rows, cols)
}

/// Symmetric one-body potential that is nonzero only inside fragment
/// diagonal blocks.
#[derive(Debug, Clone)]
pub struct CorrelationPotential<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> CorrelationPotential<T> {
    pub fn zeros(n: usize) -> Self {
        CorrelationPotential {
            matrix: Array2::zeros((n, n)),
        }
    }

    pub fn from_matrix(matrix: Array2<T>) -> Result<Self, ScfError> {
        linalg::check_symmetric(&matrix, T::cast(1e-12))?;
        Ok(CorrelationPotential { matrix })
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.matrix[[row, col]] = value;
        self.matrix[[col, row]] = value;
    }

    /// Verifies that entries live only inside the diagonal blocks spanned by
    /// the given fragment orbital sets.
    pub fn validate_pattern(&self, fragments: &[Vec<usize>]) -> Result<(), ScfError> {
        let n = self.matrix.nrows();
        let mut owner = vec![usize::MAX; n];
        for (f, frag) in fragments.iter().enumerate() {
            for &orb in frag {
                owner[orb] = f;
            }
        }
        for r in 0..n {
            for c in 0..n {
                if self.matrix[[r, c]] != T::zero()
                    && (owner[r] == usize::MAX || owner[r] != owner[c])
                {
                    return Err(ScfError::PotentialPattern { row: r, col: c });
                }
            }
        }
        Ok(())
    }
}

/// Spin-summed aufbau density from occupied orbital columns.
fn density_from_orbitals<T: Scalar>(c: &Array2<T>, n_occ: usize) -> Array2<T> {
    let n = c.nrows();
    let mut d = Array2::zeros((n, n));
    let two = T::cast(2.0);
    for p in 0..n {
        for q in 0..=p {
            let mut acc = T::zero();
            for mo in 0..n_occ {
                acc += c[[p, mo]] * c[[q, mo]];
            }
            d[[p, q]] = two * acc;
            d[[q, p]] = two * acc;
        }
    }
    d
}

struct FockSolution<T> {
    energies: ndarray::Array1<T>,
    orbitals: Array2<T>,
    density: Array2<T>,
}

fn solve_fock<T: Scalar>(fock: &Array2<T>, n_occ: usize) -> Result<FockSolution<T>, ScfError> {
    let eig = linalg::sym_eigen(fock)?;
    let n = fock.nrows();
    if n_occ > 0 && n_occ < n {
        let gap = (eig.values[n_occ] - eig.values[n_occ - 1]).abs();
        if gap < T::cast(1e-9) {
            return Err(ScfError::DegenerateFrontier { gap: gap.widen() });
        }
    }
    let density = density_from_orbitals(&eig.vectors, n_occ);
    Ok(FockSolution {
        energies: eig.values,
        orbitals: eig.vectors,
        density,
    })
}

/// Self-consistent restricted Hartree-Fock.
pub fn run_rhf<T: Scalar>(
    ints: &IntegralSet<T>,
    u: Option<&CorrelationPotential<T>>,
    cfg: &ScfConfig<T>,
) -> Result<MeanFieldState<T>, ScfError> {
    let n = ints.n_spatial();
    if !ints.n_electrons().is_multiple_of(2) {
        return Err(ScfError::OddElectronCount(ints.n_electrons()));
    }
    let n_occ = ints.n_electrons() / 2;
    if n_occ > n {
        return Err(ScfError::TooManyElectrons {
            n_electrons: ints.n_electrons(),
            n_spatial: n,
        });
    }

    let mut h = ints.one_body().clone();
    if let Some(pot) = u {
        h += pot.matrix();
    }
    let g = |d: &Array2<T>| -> Array2<T> {
        let j = ints.coulomb_field(d);
        let k = ints.exchange_field(d);
        let half = T::cast(0.5);
        let mut out = j;
        out.zip_mut_with(&k, |jv, &kv| *jv -= half * kv);
        out
    };
    let energy_of = |d: &Array2<T>, f: &Array2<T>| -> T {
        let half = T::cast(0.5);
        let mut acc = T::zero();
        for p in 0..n {
            for q in 0..n {
                acc += d[[p, q]] * (h[[q, p]] + f[[q, p]]);
            }
        }
        ints.core_energy() + half * acc
    };

    // core guess
    let mut current = solve_fock(&h, n_occ)?.density;
    let mut trace = Vec::new();
    let mut diis: Vec<(Array2<T>, Array2<T>)> = Vec::new();

    for iteration in 0..cfg.max_iter {
        let fock = &h + &g(&current);
        let solution = solve_fock(&fock, n_occ)?;
        let residual = linalg::max_abs_diff(&solution.density, &current);
        let fock_raw = &h + &g(&solution.density);
        let energy = energy_of(&solution.density, &fock_raw);
        trace.push(ScfIteration {
            iteration,
            energy,
            density_residual: residual,
        });
        if residual < cfg.density_tol {
            return Ok(MeanFieldState {
                coefficients: solution.orbitals,
                orbital_energies: solution.energies,
                n_occ_spatial: n_occ,
                one_rdm: solution.density,
                energy,
                scf_trace: trace,
            });
        }
        if cfg.use_diis {
            let commutator = fock_raw.dot(&solution.density) - solution.density.dot(&fock_raw);
            diis.push((fock_raw, commutator));
            if diis.len() > cfg.diis_subspace {
                diis.remove(0);
            }
            current = if diis.len() >= 2 {
                let extrapolated = diis_extrapolate(&diis)?;
                solve_fock(&extrapolated, n_occ)?.density
            } else {
                solution.density
            };
        } else {
            let alpha = cfg.damping;
            let mut mixed = current.clone();
            mixed.zip_mut_with(&solution.density, |old, &new| {
                *old = alpha * *old + (T::one() - alpha) * new;
            });
            current = mixed;
        }
    }
    let residual = trace
        .last()
        .map(|s| s.density_residual.widen())
        .unwrap_or(f64::INFINITY);
    Err(ScfError::NotConverged {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Pulay mixing: minimizes the norm of the extrapolated commutator residual
/// subject to coefficients summing to one.
fn diis_extrapolate<T: Scalar>(history: &[(Array2<T>, Array2<T>)]) -> Result<Array2<T>, ScfError> {
    let m = history.len();
    let mut b = Array2::zeros((m + 1, m + 1));
    for i in 0..m {
        for j in 0..m {
            let dot = history[i]
                .1
                .iter()
                .zip(history[j].1.iter())
                .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            b[[i, j]] = dot;
        }
        b[[i, m]] = -T::one();
        b[[m, i]] = -T::one();
    }
    let mut rhs = ndarray::Array1::zeros(m + 1);
    rhs[m] = -T::one();
    let coeffs = linalg::solve_dense(&b, &rhs)?;
    let shape = history[0].0.dim();
    let mut fock = Array2::zeros(shape);
    for (i, (f, _)) in history.iter().enumerate() {
        fock.zip_mut_with(f, |acc, &v| *acc += coeffs[i] * v);
    }
    Ok(fock)
}
