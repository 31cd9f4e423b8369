//! Second-quantized Hamiltonian data in an orthonormal orbital basis.
//!
//! An [`IntegralSet`] holds the scalar core energy, the one-body matrix and
//! the two-body tensor in chemists' notation `(pq|rs)` over spatial orbitals.
//! The tensor is backed by a canonical array exploiting the full 8-fold
//! permutational symmetry, so querying any of the eight index images of an
//! entry returns bit-identical values.

use std::fmt::Write as _;

use ndarray::Array2;
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IntegralError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conflicting duplicate entry at line {line}: {message}")]
    Duplicate { line: usize, message: String },
    #[error("overlap matrix is not positive definite: smallest eigenvalue {eigenvalue}")]
    Conditioning { eigenvalue: f64 },
    #[error("dimension mismatch: {message}")]
    Dimension { message: String },
    #[error("electron count {n_electrons} out of range for {n_spatial} spatial orbitals")]
    ElectronCount {
        n_electrons: usize,
        n_spatial: usize,
    },
    #[error("hubbard lattice needs at least one site")]
    EmptyLattice,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Two-electron integrals `(pq|rs)` with 8-fold symmetry-reduced storage.
///
/// The canonical slot of `(pq|rs)` is addressed through composite pair
/// indices: `pq` with `p >= q`, `rs` with `r >= s`, and `pq >= rs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyTensor<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> TwoBodyTensor<T> {
    pub fn zeros(n: usize) -> Self {
        let pairs = n * (n + 1) / 2;
        TwoBodyTensor {
            n,
            data: vec![T::zero(); pairs * (pairs + 1) / 2],
        }
    }

    pub fn n_spatial(&self) -> usize {
        self.n
    }

    #[inline]
    fn pair(p: usize, q: usize) -> usize {
        let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
        hi * (hi + 1) / 2 + lo
    }

    #[inline]
    fn slot(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let pq = Self::pair(p, q);
        let rs = Self::pair(r, s);
        let (hi, lo) = if pq >= rs { (pq, rs) } else { (rs, pq) };
        hi * (hi + 1) / 2 + lo
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.data[self.slot(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, value: T) {
        let slot = self.slot(p, q, r, s);
        self.data[slot] = value;
    }

    /// Iterates over canonical representatives `((p, q, r, s), value)` with
    /// `p >= q`, `r >= s` and `pair(p,q) >= pair(r,s)`.
    pub fn iter_canonical(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), T)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |p| {
            (0..=p).flat_map(move |q| {
                let pq = Self::pair(p, q);
                (0..n).flat_map(move |r| {
                    (0..=r).filter_map(move |s| {
                        if Self::pair(r, s) > pq {
                            None
                        } else {
                            Some(((p, q, r, s), self.get(p, q, r, s)))
                        }
                    })
                })
            })
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    /// Four-index basis change: `out(tu|vw) = sum_{pqrs} c_pt c_qu c_rv c_sw (pq|rs)`.
    ///
    /// Runs as four successive half-transforms instead of the naive eight-fold
    /// loop, which keeps the cost at O(n^5) for the desk-scale bases in play.
    pub fn transformed(&self, c: &Array2<T>) -> TwoBodyTensor<T> {
        let n = self.n;
        let m = c.ncols();
        assert_eq!(c.nrows(), n, "transform rows must match tensor dimension");

        // stage 0: unpack to a dense buffer indexed [p][q][r][s]
        let idx4 =
            |a: usize, b: usize, cc: usize, d: usize, dim1: usize, dim2: usize, dim3: usize| {
                ((a * dim1 + b) * dim2 + cc) * dim3 + d
            };
        let mut t0 = vec![T::zero(); n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        t0[idx4(p, q, r, s, n, n, n)] = self.get(p, q, r, s);
                    }
                }
            }
        }
        // contract index p -> t
        let mut t1 = vec![T::zero(); m * n * n * n];
        for t in 0..m {
            for p in 0..n {
                let w = c[[p, t]];
                if w == T::zero() {
                    continue;
                }
                for q in 0..n {
                    for r in 0..n {
                        for s in 0..n {
                            t1[idx4(t, q, r, s, n, n, n)] =
                                t1[idx4(t, q, r, s, n, n, n)] + w * t0[idx4(p, q, r, s, n, n, n)];
                        }
                    }
                }
            }
        }
        drop(t0);
        let mut t2 = vec![T::zero(); m * m * n * n];
        for t in 0..m {
            for u in 0..m {
                for q in 0..n {
                    let w = c[[q, u]];
                    if w == T::zero() {
                        continue;
                    }
                    for r in 0..n {
                        for s in 0..n {
                            t2[idx4(t, u, r, s, m, n, n)] =
                                t2[idx4(t, u, r, s, m, n, n)] + w * t1[idx4(t, q, r, s, n, n, n)];
                        }
                    }
                }
            }
        }
        drop(t1);
        let mut t3 = vec![T::zero(); m * m * m * n];
        for t in 0..m {
            for u in 0..m {
                for v in 0..m {
                    for r in 0..n {
                        let w = c[[r, v]];
                        if w == T::zero() {
                            continue;
                        }
                        for s in 0..n {
                            t3[idx4(t, u, v, s, m, m, n)] =
                                t3[idx4(t, u, v, s, m, m, n)] + w * t2[idx4(t, u, r, s, m, n, n)];
                        }
                    }
                }
            }
        }
        drop(t2);
        let mut out = TwoBodyTensor::zeros(m);
        for t in 0..m {
            for u in 0..=t {
                let pair_tu = Self::pair(t, u);
                for v in 0..m {
                    for w in 0..=v {
                        if Self::pair(v, w) > pair_tu {
                            continue;
                        }
                        let mut acc = T::zero();
                        for s in 0..n {
                            acc += c[[s, w]] * t3[idx4(t, u, v, s, m, m, n)];
                        }
                        out.set(t, u, v, w, acc);
                    }
                }
            }
        }
        out
    }
}

/// Second-quantized Hamiltonian: core constant, one-body matrix and
/// chemists'-notation two-body tensor over spatial orbitals.
#[derive(Debug, Clone)]
pub struct IntegralSet<T> {
    n_spatial: usize,
    n_electrons: usize,
    core_energy: T,
    one_body: Array2<T>,
    two_body: TwoBodyTensor<T>,
}

impl<T: Scalar> IntegralSet<T> {
    pub fn new(
        n_electrons: usize,
        core_energy: T,
        one_body: Array2<T>,
        two_body: TwoBodyTensor<T>,
    ) -> Result<Self, IntegralError> {
        let n_spatial = one_body.nrows();
        if one_body.ncols() != n_spatial || two_body.n_spatial() != n_spatial {
            return Err(IntegralError::Dimension {
                message: format!(
                    "one-body is {}x{}, two-body dimension {}",
                    one_body.nrows(),
                    one_body.ncols(),
                    two_body.n_spatial()
                ),
            });
        }
        if n_electrons > 2 * n_spatial {
            return Err(IntegralError::ElectronCount {
                n_electrons,
                n_spatial,
            });
        }
        linalg::check_symmetric(&one_body, T::zero())?;
        Ok(IntegralSet {
            n_spatial,
            n_electrons,
            core_energy,
            one_body,
            two_body,
        })
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn core_energy(&self) -> T {
        self.core_energy
    }

    pub fn one_body(&self) -> &Array2<T> {
        &self.one_body
    }

    pub fn two_body(&self) -> &TwoBodyTensor<T> {
        &self.two_body
    }

    pub fn with_n_electrons(mut self, n_electrons: usize) -> Result<Self, IntegralError> {
        if n_electrons > 2 * self.n_spatial {
            return Err(IntegralError::ElectronCount {
                n_electrons,
                n_spatial: self.n_spatial,
            });
        }
        self.n_electrons = n_electrons;
        Ok(self)
    }

    pub fn with_core_energy(mut self, core_energy: T) -> Self {
        self.core_energy = core_energy;
        self
    }

    /// Coulomb field `J_pq = sum_rs D_rs (pq|rs)` of a spin-summed density.
    pub fn coulomb_field(&self, density: &Array2<T>) -> Array2<T> {
        let n = self.n_spatial;
        let mut j = Array2::zeros((n, n));
        for p in 0..n {
            for q in 0..=p {
                let mut acc = T::zero();
                for r in 0..n {
                    for s in 0..n {
                        acc += density[[r, s]] * self.two_body.get(p, q, r, s);
                    }
                }
                j[[p, q]] = acc;
                j[[q, p]] = acc;
            }
        }
        j
    }

    /// Exchange field `K_pq = sum_rs D_rs (pr|qs)` of a spin-summed density.
    pub fn exchange_field(&self, density: &Array2<T>) -> Array2<T> {
        let n = self.n_spatial;
        let mut k = Array2::zeros((n, n));
        for p in 0..n {
            for q in 0..=p {
                let mut acc = T::zero();
                for r in 0..n {
                    for s in 0..n {
                        acc += density[[r, s]] * self.two_body.get(p, r, q, s);
                    }
                }
                k[[p, q]] = acc;
                k[[q, p]] = acc;
            }
        }
        k
    }

    /// Rotates the integrals into a new basis given by the column map `c`
    /// (old basis rows, new basis columns). Core energy and electron count
    /// carry over unchanged.
    pub fn rotated(&self, c: &Array2<T>) -> Result<IntegralSet<T>, IntegralError> {
        if c.nrows() != self.n_spatial {
            return Err(IntegralError::Dimension {
                message: format!(
                    "rotation has {} rows, integrals have {} orbitals",
                    c.nrows(),
                    self.n_spatial
                ),
            });
        }
        let m = c.ncols();
        let rotated_raw = c.t().dot(&self.one_body).dot(c);
        let mut one = Array2::zeros((m, m));
        for p in 0..m {
            for q in 0..=p {
                let sym = (rotated_raw[[p, q]] + rotated_raw[[q, p]]) / T::cast(2.0);
                one[[p, q]] = sym;
                one[[q, p]] = sym;
            }
        }
        let two = self.two_body.transformed(c);
        IntegralSet::new(self.n_electrons, self.core_energy, one, two)
    }
}

/// Real symmetric positive-definite overlap matrix of a non-orthogonal basis.
#[derive(Debug, Clone)]
pub struct OverlapMatrix<T>(Array2<T>);

impl<T: Scalar> OverlapMatrix<T> {
    pub fn new(s: Array2<T>) -> Result<Self, IntegralError> {
        if s.nrows() != s.ncols() {
            return Err(IntegralError::Dimension {
                message: format!("overlap is {}x{}", s.nrows(), s.ncols()),
            });
        }
        linalg::check_symmetric(&s, T::cast(1e-12))?;
        Ok(OverlapMatrix(s))
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.0
    }
}

/// Symmetric (Lowdin) orthogonalization: transforms the integrals with
/// `X = S^(-1/2)` so the resulting basis has unit overlap.
pub fn lowdin_orthogonalize<T: Scalar>(
    ints: &IntegralSet<T>,
    s: &OverlapMatrix<T>,
) -> Result<IntegralSet<T>, IntegralError> {
    let n = ints.n_spatial();
    if s.matrix().nrows() != n {
        return Err(IntegralError::Dimension {
            message: format!(
                "overlap is {}x{}, integrals have {} orbitals",
                s.matrix().nrows(),
                s.matrix().ncols(),
                n
            ),
        });
    }
    let eig = linalg::sym_eigen(s.matrix())?;
    let smallest = if n > 0 { eig.values[0] } else { T::one() };
    if smallest <= T::cast(1e-10) {
        return Err(IntegralError::Conditioning {
            eigenvalue: smallest.widen(),
        });
    }
    let mut x = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = T::zero();
            for k in 0..n {
                acc += eig.vectors[[i, k]] * eig.vectors[[j, k]] / eig.values[k].sqrt();
            }
            x[[i, j]] = acc;
        }
    }
    ints.rotated(&x)
}

/// One-dimensional Hubbard lattice: hopping `-t` on chain bonds (plus the
/// wraparound bond when periodic with at least three sites) and on-site
/// repulsion `u`. Electron count defaults to half filling.
pub fn build_hubbard<T: Scalar>(
    n_sites: usize,
    t: T,
    u: T,
    periodic: bool,
    n_electrons: Option<usize>,
) -> Result<IntegralSet<T>, IntegralError> {
    if n_sites == 0 {
        return Err(IntegralError::EmptyLattice);
    }
    let mut one = Array2::zeros((n_sites, n_sites));
    for i in 0..n_sites.saturating_sub(1) {
        one[[i, i + 1]] = -t;
        one[[i + 1, i]] = -t;
    }
    if periodic && n_sites >= 3 {
        one[[0, n_sites - 1]] = -t;
        one[[n_sites - 1, 0]] = -t;
    }
    let mut two = TwoBodyTensor::zeros(n_sites);
    for i in 0..n_sites {
        two.set(i, i, i, i, u);
    }
    IntegralSet::new(n_electrons.unwrap_or(n_sites), T::zero(), one, two)
}

// ---------------------------------------------------------------------------
// FCIDUMP interchange format
// ---------------------------------------------------------------------------

/// Parses FCIDUMP text: a `&FCI ... &END` namelist header (a bare `/` also
/// terminates it) followed by `value i j k l` lines with 1-based indices.
pub fn parse_fcidump<T: Scalar>(text: &str) -> Result<IntegralSet<T>, IntegralError> {
    let mut norb: Option<usize> = None;
    let mut nelec: Option<usize> = None;
    let mut body_start = 0usize;

    // The header may span several lines; scan token-wise until the
    // terminator. ORBSYM/ISYM/MS2 and unknown keys are accepted and ignored.
    let lines: Vec<&str> = text.lines().collect();
    let mut in_header = true;
    let mut saw_magic = false;
    'header: for (line_no, line) in lines.iter().enumerate() {
        if !in_header {
            break;
        }
        for raw in line.split(|c: char| c.is_whitespace() || c == ',') {
            let token = raw.trim();
            if token.is_empty() {
                continue;
            }
            if !saw_magic {
                if token.to_ascii_uppercase().starts_with("&FCI") {
                    saw_magic = true;
                    continue;
                }
                return Err(IntegralError::Parse {
                    line: line_no + 1,
                    message: "expected &FCI namelist header".into(),
                });
            }
            let upper = token.to_ascii_uppercase();
            if upper == "&END" || upper == "/" {
                in_header = false;
                body_start = line_no + 1;
                continue 'header;
            }
            if let Some((key, value)) = token.split_once('=') {
                let key = key.trim().to_ascii_uppercase();
                let value = value.trim();
                match key.as_str() {
                    "NORB" => {
                        norb = Some(parse_usize(value, line_no + 1, "NORB")?);
                    }
                    "NELEC" => {
                        nelec = Some(parse_usize(value, line_no + 1, "NELEC")?);
                    }
                    // MS2, ORBSYM, ISYM and any other namelist keys are
                    // validated as integers where simple but otherwise unused.
                    _ => {}
                }
            }
            // Bare tokens continue an array-valued key such as ORBSYM; skip.
        }
    }
    if in_header {
        return Err(IntegralError::Parse {
            line: lines.len(),
            message: "header never terminated with &END or /".into(),
        });
    }
    let norb = norb.ok_or(IntegralError::Parse {
        line: body_start,
        message: "header is missing NORB".into(),
    })?;
    let nelec = nelec.ok_or(IntegralError::Parse {
        line: body_start,
        message: "header is missing NELEC".into(),
    })?;

    let mut one = Array2::zeros((norb, norb));
    let mut two = TwoBodyTensor::zeros(norb);
    let mut core = T::zero();
    // first-seen values for duplicate detection, keyed by canonical slot
    let mut seen_one: std::collections::HashMap<(usize, usize), (f64, usize)> =
        std::collections::HashMap::new();
    let mut seen_two: std::collections::HashMap<(usize, usize), (f64, usize)> =
        std::collections::HashMap::new();
    let mut seen_core: Option<(f64, usize)> = None;

    for (line_no, line) in lines.iter().enumerate().skip(body_start) {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let value_tok = parts.next().unwrap();
        let value = parse_float(value_tok, line_no + 1)?;
        let mut idx = [0usize; 4];
        for slot in idx.iter_mut() {
            let tok = parts.next().ok_or(IntegralError::Parse {
                line: line_no + 1,
                message: "expected four orbital indices".into(),
            })?;
            *slot = parse_usize(tok, line_no + 1, "orbital index")?;
        }
        if parts.next().is_some() {
            return Err(IntegralError::Parse {
                line: line_no + 1,
                message: "trailing tokens after the four indices".into(),
            });
        }
        for &i in &idx {
            if i > norb {
                return Err(IntegralError::Parse {
                    line: line_no + 1,
                    message: format!("index {i} exceeds NORB={norb}"),
                });
            }
        }
        let [i, j, k, l] = idx;
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some((prev, prev_line)) = seen_core {
                    if (prev - value).abs() > 1e-10 {
                        return Err(IntegralError::Duplicate {
                            line: line_no + 1,
                            message: format!(
                                "core energy {value} conflicts with {prev} from line {prev_line}"
                            ),
                        });
                    }
                }
                seen_core = Some((value, line_no + 1));
                core = T::cast(value);
            }
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = (i.max(j) - 1, i.min(j) - 1);
                if let Some(&(prev, prev_line)) = seen_one.get(&key) {
                    if (prev - value).abs() > 1e-10 {
                        return Err(IntegralError::Duplicate {
                            line: line_no + 1,
                            message: format!(
                                "one-body ({i},{j}) = {value} conflicts with {prev} from line {prev_line}"
                            ),
                        });
                    }
                }
                seen_one.insert(key, (value, line_no + 1));
                one[[i - 1, j - 1]] = T::cast(value);
                one[[j - 1, i - 1]] = T::cast(value);
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let pq = TwoBodyTensor::<T>::pair(i - 1, j - 1);
                let rs = TwoBodyTensor::<T>::pair(k - 1, l - 1);
                let key = (pq.max(rs), pq.min(rs));
                if let Some(&(prev, prev_line)) = seen_two.get(&key) {
                    if (prev - value).abs() > 1e-10 {
                        return Err(IntegralError::Duplicate {
                            line: line_no + 1,
                            message: format!(
                                "two-body ({i}{j}|{k}{l}) = {value} conflicts with {prev} from line {prev_line}"
                            ),
                        });
                    }
                }
                seen_two.insert(key, (value, line_no + 1));
                two.set(i - 1, j - 1, k - 1, l - 1, T::cast(value));
            }
            _ => {
                return Err(IntegralError::Parse {
                    line: line_no + 1,
                    message: format!("unsupported index pattern ({i} {j} {k} {l})"),
                });
            }
        }
    }

    IntegralSet::new(nelec, core, one, two)
}

fn parse_usize(token: &str, line: usize, what: &str) -> Result<usize, IntegralError> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| IntegralError::Parse {
            line,
            message: format!("cannot parse {what} from {token:?}"),
        })
}

fn parse_float(token: &str, line: usize) -> Result<f64, IntegralError> {
    // Fortran writers often use D exponents.
    let normalized = token.replace(['D', 'd'], "E");
    normalized.parse::<f64>().map_err(|_| IntegralError::Parse {
        line,
        message: format!("cannot parse value from {token:?}"),
    })
}

/// Writes canonical-representative FCIDUMP text; zero-valued entries are
/// omitted and values carry 17 significant digits so a re-parse reproduces
/// the set exactly.
pub fn write_fcidump<T: Scalar>(ints: &IntegralSet<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "&FCI NORB={},NELEC={},MS2={},",
        ints.n_spatial(),
        ints.n_electrons(),
        ints.n_electrons() % 2
    );
    let _ = writeln!(out, "&END");
    for ((p, q, r, s), value) in ints.two_body().iter_canonical() {
        if value == T::zero() {
            continue;
        }
        let _ = writeln!(
            out,
            "{:.16E} {} {} {} {}",
            value.widen(),
            p + 1,
            q + 1,
            r + 1,
            s + 1
        );
    }
    for p in 0..ints.n_spatial() {
        for q in 0..=p {
            let value = ints.one_body()[[p, q]];
            if value == T::zero() {
                continue;
            }
            let _ = writeln!(out, "{:.16E} {} {} 0 0", value.widen(), p + 1, q + 1);
        }
    }
    if ints.core_energy() != T::zero() {
        let _ = writeln!(out, "{:.16E} 0 0 0 0", ints.core_energy().widen());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn parse_single_orbital_example() {
        let text = "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n0.3 0 0 0 0\n";
        let ints: IntegralSet<f64> = parse_fcidump(text).unwrap();
        assert_eq!(ints.n_spatial(), 1);
        assert_eq!(ints.n_electrons(), 2);
        assert_eq!(ints.core_energy(), 0.3);
        assert_eq!(ints.one_body()[[0, 0]], -1.0);
        assert_eq!(ints.two_body().get(0, 0, 0, 0), 0.5);
    }

    #[test]
    fn parse_requires_norb() {
        let text = "&FCI NELEC=2,MS2=0,\n&END\n";
        let err = parse_fcidump::<f64>(text).unwrap_err();
        assert!(matches!(err, IntegralError::Parse { .. }));
        assert!(err.to_string().contains("NORB"));
    }

    #[test]
    fn parse_rejects_out_of_range_index() {
        let text = "&FCI NORB=2,NELEC=2,\n&END\n1.0 3 1 0 0\n";
        let err = parse_fcidump::<f64>(text).unwrap_err();
        assert!(err.to_string().contains("exceeds NORB"));
    }

    #[test]
    fn parse_rejects_conflicting_duplicates() {
        let text = "&FCI NORB=1,NELEC=2,\n&END\n0.5 1 1 1 1\n0.6 1 1 1 1\n";
        let err = parse_fcidump::<f64>(text).unwrap_err();
        assert!(matches!(err, IntegralError::Duplicate { line: 4, .. }));
    }

    #[test]
    fn parse_accepts_fortran_d_exponents() {
        let text = "&FCI NORB=1,NELEC=2,\n&END\n5.0D-01 1 1 1 1\n-1.0d0 1 1 0 0\n";
        let ints: IntegralSet<f64> = parse_fcidump(text).unwrap();
        assert_eq!(ints.two_body().get(0, 0, 0, 0), 0.5);
        assert_eq!(ints.one_body()[[0, 0]], -1.0);
    }

    #[test]
    fn overlap_must_be_symmetric() {
        let s = array![[1.0, 0.2], [0.3, 1.0]];
        assert!(OverlapMatrix::new(s).is_err());
    }

    #[test]
    fn parse_accepts_slash_terminator_and_orbsym() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n/\n-1.0 1 2 0 0\n";
        let ints: IntegralSet<f64> = parse_fcidump(text).unwrap();
        assert_eq!(ints.one_body()[[0, 1]], -1.0);
        assert_eq!(ints.one_body()[[1, 0]], -1.0);
    }

    #[test]
    fn write_single_orbital_has_one_two_body_line() {
        let text = "&FCI NORB=1,NELEC=2,MS2=0,\n&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n0.3 0 0 0 0\n";
        let ints: IntegralSet<f64> = parse_fcidump(text).unwrap();
        let written = write_fcidump(&ints);
        let two_body_lines = written
            .lines()
            .filter(|l| {
                let toks: Vec<&str> = l.split_whitespace().collect();
                toks.len() == 5 && toks[1..].iter().all(|t| *t != "0")
            })
            .count();
        assert_eq!(two_body_lines, 1);
    }

    #[test]
    fn write_empty_set_is_header_only() {
        let ints: IntegralSet<f64> =
            IntegralSet::new(0, 0.0, Array2::zeros((0, 0)), TwoBodyTensor::zeros(0)).unwrap();
        let written = write_fcidump(&ints);
        assert_eq!(written.lines().count(), 2);
        assert!(written.starts_with("&FCI"));
    }

    #[test]
    fn hubbard_dimer_topology() {
        let ints = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        assert_eq!(ints.one_body(), &array![[0.0, -1.0], [-1.0, 0.0]]);
        assert!(ints.two_body().is_zero());
        assert_eq!(ints.n_electrons(), 2);

        let ints = build_hubbard::<f64>(2, 1.0, 4.0, false, None).unwrap();
        assert_eq!(ints.two_body().get(0, 0, 0, 0), 4.0);
        assert_eq!(ints.two_body().get(1, 1, 1, 1), 4.0);
        assert_eq!(ints.two_body().get(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn hubbard_periodic_ring_bond_count() {
        let ints = build_hubbard::<f64>(4, 1.0, 0.0, true, None).unwrap();
        let nonzero = ints.one_body().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 8);
    }

    #[test]
    fn hubbard_periodic_dimer_not_double_counted() {
        let open = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        let ring = build_hubbard::<f64>(2, 1.0, 0.0, true, None).unwrap();
        assert_eq!(open.one_body(), ring.one_body());
    }

    #[test]
    fn hubbard_zero_sites_rejected() {
        assert!(build_hubbard::<f64>(0, 1.0, 0.0, false, None).is_err());
    }

    #[test]
    fn hubbard_round_trips_through_fcidump() {
        let ints = build_hubbard::<f64>(4, 1.0, 4.0, false, None).unwrap();
        let reparsed: IntegralSet<f64> = parse_fcidump(&write_fcidump(&ints)).unwrap();
        assert_eq!(reparsed.n_electrons(), ints.n_electrons());
        assert_eq!(reparsed.one_body(), ints.one_body());
        assert_eq!(reparsed.two_body(), ints.two_body());
    }

    #[test]
    fn lowdin_identity_overlap_is_identity_map() {
        let ints = build_hubbard::<f64>(3, 1.0, 2.0, false, None).unwrap();
        let s = OverlapMatrix::new(Array2::eye(3)).unwrap();
        let out = lowdin_orthogonalize(&ints, &s).unwrap();
        assert!(linalg::max_abs_diff(out.one_body(), ints.one_body()) < 1e-14);
        let again = lowdin_orthogonalize(&out, &s).unwrap();
        assert!(linalg::max_abs_diff(again.one_body(), out.one_body()) < 1e-14);
    }

    #[test]
    fn lowdin_2x2_closed_form() {
        let ints = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        let s_mat: Array2<f64> = array![[1.0, 0.5], [0.5, 1.0]];
        let s = OverlapMatrix::new(s_mat.clone()).unwrap();
        // reconstruct X from the transform and verify X^T S X = I
        let eig = linalg::sym_eigen(&s_mat).unwrap();
        assert!((eig.values[0] - 0.5).abs() < 1e-14);
        assert!((eig.values[1] - 1.5).abs() < 1e-14);
        let out = lowdin_orthogonalize(&ints, &s).unwrap();
        // spectrum preservation vs the generalized problem via Cholesky
        let l00 = 1.0f64.sqrt();
        let l10 = 0.5 / l00;
        let l11 = (1.0 - l10 * l10).sqrt();
        // L^-1 d L^-T for d = [[0,-1],[-1,0]]
        let d = [[0.0, -1.0], [-1.0, 0.0]];
        let linv = [[1.0 / l00, 0.0], [-l10 / (l00 * l11), 1.0 / l11]];
        let mut gen = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += linv[i][a] * d[a][b] * linv[j][b];
                    }
                }
                gen[i][j] = acc;
            }
        }
        let tr = gen[0][0] + gen[1][1];
        let det = gen[0][0] * gen[1][1] - gen[0][1] * gen[1][0];
        let disc = (tr * tr / 4.0 - det).sqrt();
        let expected = [tr / 2.0 - disc, tr / 2.0 + disc];
        let eig_out = linalg::sym_eigen(out.one_body()).unwrap();
        assert!((eig_out.values[0] - expected[0]).abs() < 1e-10);
        assert!((eig_out.values[1] - expected[1]).abs() < 1e-10);
    }

    #[test]
    fn lowdin_rejects_singular_overlap() {
        let ints = build_hubbard::<f64>(2, 1.0, 0.0, false, None).unwrap();
        let s = OverlapMatrix::new(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            lowdin_orthogonalize(&ints, &s),
            Err(IntegralError::Conditioning { .. })
        ));
    }

    #[test]
    fn two_body_symmetry_images_identical() {
        let mut two = TwoBodyTensor::<f64>::zeros(4);
        two.set(3, 1, 2, 0, 0.125);
        let images = [
            (3, 1, 2, 0),
            (1, 3, 2, 0),
            (3, 1, 0, 2),
            (1, 3, 0, 2),
            (2, 0, 3, 1),
            (0, 2, 3, 1),
            (2, 0, 1, 3),
            (0, 2, 1, 3),
        ];
        for (p, q, r, s) in images {
            assert_eq!(two.get(p, q, r, s), 0.125);
        }
    }

    proptest! {
        #[test]
        fn fcidump_round_trip_is_identity(
            n in 1usize..5,
            seed in any::<u64>(),
        ) {
            let mut state = seed | 1;
            let mut next = || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            let mut one = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..=i {
                    let v = next();
                    one[[i, j]] = v;
                    one[[j, i]] = v;
                }
            }
            let mut two = TwoBodyTensor::zeros(n);
            for p in 0..n {
                for q in 0..=p {
                    for r in 0..=p {
                        for s in 0..=r {
                            two.set(p, q, r, s, next());
                        }
                    }
                }
            }
            let ints = IntegralSet::new(n, next(), one, two).unwrap();
            let reparsed: IntegralSet<f64> = parse_fcidump(&write_fcidump(&ints)).unwrap();
            prop_assert_eq!(reparsed.n_spatial(), ints.n_spatial());
            prop_assert!((reparsed.core_energy() - ints.core_energy()).abs() < 1e-12);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((reparsed.one_body()[[i,j]] - ints.one_body()[[i,j]]).abs() < 1e-12);
                }
            }
            for ((p,q,r,s), v) in ints.two_body().iter_canonical() {
                prop_assert!((reparsed.two_body().get(p,q,r,s) - v).abs() < 1e-12);
            }
        }
    }
}
