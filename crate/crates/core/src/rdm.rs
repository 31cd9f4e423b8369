//! Spin-traced reduced density matrices.
//!
//! `one_rdm[p][q] = sum_sigma <a^dag_{p sigma} a_{q sigma}>` and
//! `two_rdm[p][q][r][s] = sum_{sigma tau} <a^dag_{p sigma} a^dag_{q tau}
//! a_{r tau} a_{s sigma}>` over spatial orbitals. With this pairing the
//! partial trace obeys `sum_q two_rdm[p][q][q][s] = (N - 1) one_rdm[p][s]`
//! and the electronic energy closes as
//! `E = core + sum d_pq one_rdm[p][q] + 1/2 sum (pq|rs) two_rdm[p][r][s][q]`.

use ndarray::{Array2, Array4};
use thiserror::Error;

use crate::integrals::IntegralSet;
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RdmError {
    #[error(
        "one-body RDM trace {trace} deviates from electron count {expected} by more than {tol}"
    )]
    Trace { trace: f64, expected: f64, tol: f64 },
    #[error("one-body RDM asymmetry {asymmetry} exceeds tolerance")]
    Asymmetry { asymmetry: f64 },
    #[error("one-body RDM eigenvalue {eigenvalue} outside [0, 2] within slack")]
    OccupationRange { eigenvalue: f64 },
    #[error("partial-trace mismatch {residual} between two- and one-body RDMs")]
    PartialTrace { residual: f64 },
}

/// One- and two-body reduced density matrices of an embedded solution.
#[derive(Debug, Clone)]
pub struct RdmPair<T> {
    pub one_rdm: Array2<T>,
    pub two_rdm: Array4<T>,
}

impl<T: Scalar> RdmPair<T> {
    pub fn n_spatial(&self) -> usize {
        self.one_rdm.nrows()
    }

    /// Checks the structural invariants at a solver tolerance.
    pub fn validate(&self, n_electrons: usize, tol: T) -> Result<(), RdmError> {
        let n = self.n_spatial();
        let trace = (0..n).map(|p| self.one_rdm[[p, p]]).sum::<T>();
        let expected = T::cast(n_electrons as f64);
        if (trace - expected).abs() > tol {
            return Err(RdmError::Trace {
                trace: trace.widen(),
                expected: expected.widen(),
                tol: tol.widen(),
            });
        }
        if let Err(linalg::LinalgError::NotSymmetric { asymmetry }) =
            linalg::check_symmetric(&self.one_rdm, tol)
        {
            return Err(RdmError::Asymmetry { asymmetry });
        }
        let eig = linalg::sym_eigen(&self.one_rdm).expect("symmetric one-body RDM");
        let slack = T::cast(1e-8) + tol;
        for &v in eig.values.iter() {
            if v < -slack || v > T::cast(2.0) + slack {
                return Err(RdmError::OccupationRange {
                    eigenvalue: v.widen(),
                });
            }
        }
        let n_minus_one = T::cast(n_electrons as f64 - 1.0);
        let mut worst = T::zero();
        for p in 0..n {
            for s in 0..n {
                let mut acc = T::zero();
                for q in 0..n {
                    acc += self.two_rdm[[p, q, q, s]];
                }
                worst = worst.max((acc - n_minus_one * self.one_rdm[[p, s]]).abs());
            }
        }
        // the contraction sums n entries, so give it a matching slack
        if worst > tol * T::cast((n.max(1)) as f64) + T::cast(1e-10) {
            return Err(RdmError::PartialTrace {
                residual: worst.widen(),
            });
        }
        Ok(())
    }

    /// Rotates both RDMs with the orbital map `c` (rows: target basis,
    /// columns: source basis): `D' = c D c^T` and the four-index analogue.
    pub fn rotated(&self, c: &Array2<T>) -> RdmPair<T> {
        let n = self.n_spatial();
        let m = c.nrows();
        assert_eq!(c.ncols(), n);
        let one = c.dot(&self.one_rdm).dot(&c.t());

        // four successive half-transforms of the two-body RDM
        let mut t1 = Array4::<T>::zeros((m, n, n, n));
        for i in 0..m {
            for p in 0..n {
                let w = c[[i, p]];
                if w == T::zero() {
                    continue;
                }
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            t1[[i, q, r, s]] += w * self.two_rdm[[p, q, r, s]];
                        }
                    }
                }
            }
        }
        let mut t2 = Array4::<T>::zeros((m, m, n, n));
        for i in 0..m {
            for j in 0..m {
                for q in 0..n {
                    let w = c[[j, q]];
                    if w == T::zero() {
                        continue;
                    }
                    for r in 0..n {
                        for s in 0..n {
                            t2[[i, j, r, s]] += w * t1[[i, q, r, s]];
                        }
                    }
                }
            }
        }
        let mut t3 = Array4::<T>::zeros((m, m, m, n));
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for r in 0..n {
                        let w = c[[k, r]];
                        if w == T::zero() {
                            continue;
                        }
                        for s in 0..n {
                            t3[[i, j, k, s]] += w * t2[[i, j, r, s]];
                        }
                    }
                }
            }
        }
        let mut two = Array4::<T>::zeros((m, m, m, m));
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let mut acc = T::zero();
                        for s in 0..n {
                            acc += c[[l, s]] * t3[[i, j, k, s]];
                        }
                        two[[i, j, k, l]] = acc;
                    }
                }
            }
        }
        RdmPair {
            one_rdm: one,
            two_rdm: two,
        }
    }
}

/// Contracts integrals with an [`RdmPair`]:
/// `E = core + sum d_pq D_pq + 1/2 sum (pq|rs) two_rdm[p][r][s][q]`.
pub fn energy_from_rdms<T: Scalar>(ints: &IntegralSet<T>, rdms: &RdmPair<T>) -> T {
    let n = ints.n_spatial();
    assert_eq!(rdms.n_spatial(), n);
    let mut energy = ints.core_energy();
    for p in 0..n {
        for q in 0..n {
            energy += ints.one_body()[[p, q]] * rdms.one_rdm[[p, q]];
        }
    }
    let half = T::cast(0.5);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = ints.two_body().get(p, q, r, s);
                    if v == T::zero() {
                        continue;
                    }
                    energy += half * v * rdms.two_rdm[[p, r, s, q]];
                }
            }
        }
    }
    energy
}
