#!/usr/bin/env python3
"""Generates the hydrogen-chain FCIDUMP fixtures used by the test suite.

Minimal-basis (STO-3G) integrals for collinear hydrogen arrangements are
evaluated analytically (s-type Gaussians only), symmetrically orthogonalized
with S^(-1/2) so each orbital stays atom-centered, and written in FCIDUMP
form. Run from the repository root:

    python3 tools/make_h_fixtures.py

Outputs land in fixtures/.
"""

import os

import numpy as np
from scipy.special import erf

ANGSTROM_TO_BOHR = 1.0 / 0.529177210903

# STO-3G hydrogen 1s: exponents and contraction coefficients for normalized
# primitives
EXPONENTS = np.array([3.425250914, 0.6239137298, 0.1688554040])
COEFFS = np.array([0.1543289673, 0.5353281423, 0.4446345422])

H2_BOND_ANGSTROM = 0.7414
H4_GAPS_ANGSTROM = [1.0, 1.5, 2.0, 2.5, 30.0]


def boys_f0(t):
    if t < 1e-12:
        return 1.0 - t / 3.0
    return 0.5 * np.sqrt(np.pi / t) * erf(np.sqrt(t)) / np.sqrt(1.0)


def prim_norm(alpha):
    return (2.0 * alpha / np.pi) ** 0.75


def overlap_prim(a, b, ra, rb):
    p = a + b
    ab2 = np.dot(ra - rb, ra - rb)
    return prim_norm(a) * prim_norm(b) * (np.pi / p) ** 1.5 * np.exp(-a * b / p * ab2)


def kinetic_prim(a, b, ra, rb):
    p = a + b
    mu = a * b / p
    ab2 = np.dot(ra - rb, ra - rb)
    pref = mu * (3.0 - 2.0 * mu * ab2)
    return prim_norm(a) * prim_norm(b) * pref * (np.pi / p) ** 1.5 * np.exp(-mu * ab2)


def nuclear_prim(a, b, ra, rb, rc, charge):
    p = a + b
    mu = a * b / p
    ab2 = np.dot(ra - rb, ra - rb)
    rp = (a * ra + b * rb) / p
    pc2 = np.dot(rp - rc, rp - rc)
    return (
        -charge
        * prim_norm(a)
        * prim_norm(b)
        * (2.0 * np.pi / p)
        * np.exp(-mu * ab2)
        * boys_f0(p * pc2)
    )


def eri_prim(a, b, c, d, ra, rb, rc, rd):
    p = a + b
    q = c + d
    ab2 = np.dot(ra - rb, ra - rb)
    cd2 = np.dot(rc - rd, rc - rd)
    rp = (a * ra + b * rb) / p
    rq = (c * rc + d * rd) / q
    pq2 = np.dot(rp - rq, rp - rq)
    norms = prim_norm(a) * prim_norm(b) * prim_norm(c) * prim_norm(d)
    pref = 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q))
    return norms * pref * np.exp(-a * b / p * ab2 - c * d / q * cd2) * boys_f0(
        p * q / (p + q) * pq2
    )


def build_ao_integrals(centers):
    n = len(centers)
    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            for ai, ci in zip(EXPONENTS, COEFFS):
                for aj, cj in zip(EXPONENTS, COEFFS):
                    w = ci * cj
                    s[i, j] += w * overlap_prim(ai, aj, centers[i], centers[j])
                    t[i, j] += w * kinetic_prim(ai, aj, centers[i], centers[j])
                    for rc in centers:
                        v[i, j] += w * nuclear_prim(
                            ai, aj, centers[i], centers[j], rc, 1.0
                        )
    eri = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    acc = 0.0
                    for ai, ci in zip(EXPONENTS, COEFFS):
                        for aj, cj in zip(EXPONENTS, COEFFS):
                            for ak, ck in zip(EXPONENTS, COEFFS):
                                for al, cl in zip(EXPONENTS, COEFFS):
                                    acc += (
                                        ci
                                        * cj
                                        * ck
                                        * cl
                                        * eri_prim(
                                            ai,
                                            aj,
                                            ak,
                                            al,
                                            centers[i],
                                            centers[j],
                                            centers[k],
                                            centers[l],
                                        )
                                    )
                    eri[i, j, k, l] = acc
    return s, t + v, eri


def lowdin(s):
    vals, vecs = np.linalg.eigh(s)
    if vals.min() <= 1e-10:
        raise ValueError(f"overlap nearly singular: {vals.min()}")
    return vecs @ np.diag(vals ** -0.5) @ vecs.T


def orthogonalize(s, h, eri):
    x = lowdin(s)
    h_oao = x.T @ h @ x
    eri_oao = np.einsum("pi,qj,rk,sl,pqrs->ijkl", x, x, x, x, eri, optimize=True)
    return h_oao, eri_oao


def nuclear_repulsion(centers):
    e = 0.0
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            e += 1.0 / np.linalg.norm(centers[i] - centers[j])
    return e


def write_fcidump(path, h, eri, e_nuc, n_electrons):
    n = h.shape[0]
    lines = [f"&FCI NORB={n},NELEC={n_electrons},MS2=0,", "&END"]

    def pair(p, q):
        hi, lo = max(p, q), min(p, q)
        return hi * (hi + 1) // 2 + lo

    for p in range(n):
        for q in range(p + 1):
            for r in range(n):
                for s_ in range(r + 1):
                    if pair(r, s_) > pair(p, q):
                        continue
                    value = eri[p, q, r, s_]
                    if abs(value) < 1e-14:
                        continue
                    lines.append(
                        f"{value:.16E} {p + 1} {q + 1} {r + 1} {s_ + 1}"
                    )
    for p in range(n):
        for q in range(p + 1):
            value = h[p, q]
            if abs(value) < 1e-14:
                continue
            lines.append(f"{value:.16E} {p + 1} {q + 1} 0 0")
    lines.append(f"{e_nuc:.16E} 0 0 0 0")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"wrote {path} ({n} orbitals, E_nuc = {e_nuc:.10f})")


def quick_rhf(h, eri, n_electrons, e_nuc):
    """Plain damped RHF in the orthonormal basis, for a sanity printout."""
    n = h.shape[0]
    n_occ = n_electrons // 2
    vals, vecs = np.linalg.eigh(h)
    c = vecs[:, :n_occ]
    d = 2.0 * c @ c.T
    for _ in range(300):
        j = np.einsum("pqrs,rs->pq", eri, d)
        k = np.einsum("prqs,rs->pq", eri, d)
        f = h + j - 0.5 * k
        vals, vecs = np.linalg.eigh(f)
        c = vecs[:, :n_occ]
        d_new = 2.0 * c @ c.T
        if np.abs(d_new - d).max() < 1e-12:
            d = d_new
            break
        d = 0.5 * d + 0.5 * d_new
    j = np.einsum("pqrs,rs->pq", eri, d)
    k = np.einsum("prqs,rs->pq", eri, d)
    f = h + j - 0.5 * k
    return e_nuc + 0.5 * np.einsum("pq,qp->", d, h + f)


def chain(positions_angstrom):
    return [
        np.array([x * ANGSTROM_TO_BOHR, 0.0, 0.0]) for x in positions_angstrom
    ]


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "fixtures")
    os.makedirs(out_dir, exist_ok=True)

    # isolated H2 at the fixed intra-pair bond length
    centers = chain([0.0, H2_BOND_ANGSTROM])
    s, h, eri = build_ao_integrals(centers)
    h_oao, eri_oao = orthogonalize(s, h, eri)
    e_nuc = nuclear_repulsion(centers)
    write_fcidump(
        os.path.join(out_dir, "h2_0.7414.fcidump"), h_oao, eri_oao, e_nuc, 2
    )
    print(f"  RHF sanity: {quick_rhf(h_oao, eri_oao, 2, e_nuc):.8f} Ha")

    # two H2 units separated by a widening gap between the inner atoms
    r0 = H2_BOND_ANGSTROM
    for gap in H4_GAPS_ANGSTROM:
        positions = [0.0, r0, r0 + gap, 2 * r0 + gap]
        centers = chain(positions)
        s, h, eri = build_ao_integrals(centers)
        h_oao, eri_oao = orthogonalize(s, h, eri)
        e_nuc = nuclear_repulsion(centers)
        name = f"h4_pair_gap{gap:.1f}.fcidump"
        write_fcidump(os.path.join(out_dir, name), h_oao, eri_oao, e_nuc, 4)
        print(f"  RHF sanity: {quick_rhf(h_oao, eri_oao, 4, e_nuc):.8f} Ha")


if __name__ == "__main__":
    main()
