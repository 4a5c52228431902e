"""Chain Hamiltonians for qubit-mediated and cavity-mediated coupling.

The chain is open (hopping sum runs to M-1) with parameters uniform
across sites.  Qubit-mediated chains hop excitations through
sigma+_j sigma-_{j+1} + h.c.; cavity-mediated chains through
a_dag_j a_{j+1} + h.c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import scipy.sparse as sp

from .hilbert import SectorBasis, SparseOperator, embed, site_operators
from .polariton import COUPLING_KINDS, JCParams


@dataclass(frozen=True)
class LatticeParams:
    """Full specification of a uniform open chain."""

    M: int
    coupling_kind: str
    J: float
    jc: JCParams
    n_max: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.coupling_kind not in COUPLING_KINDS:
            raise ValueError(
                f"coupling_kind must be one of {COUPLING_KINDS}, "
                f"got {self.coupling_kind!r}"
            )

    @property
    def site_dim(self) -> int:
        return 2 * (self.n_max + 1)

    @property
    def full_dim(self) -> int:
        return self.site_dim**self.M


def site_hamiltonian(p: JCParams, n_max: int) -> SparseOperator:
    """Single-site Hamiltonian omega_q P_up + omega_c n + g(a_dag sigma- + a sigma+)."""
    ops = site_operators(n_max)
    h = (
        p.omega_q * ops["n_qubit"]
        + p.omega_c * ops["n_fock"]
        + p.g * (ops["a_dag"] @ ops["sigma_minus"] + ops["a"] @ ops["sigma_plus"])
    )
    return SparseOperator(h.csr, hermitian=True)


def lattice_hamiltonian(lp: LatticeParams) -> SparseOperator:
    """Full chain Hamiltonian: on-site terms plus nearest-neighbour hopping."""
    ops = site_operators(lp.n_max)
    h_site = site_hamiltonian(lp.jc, lp.n_max)
    h = embed(h_site, 0, lp)
    for j in range(1, lp.M):
        h = h + embed(h_site, j, lp)
    if lp.coupling_kind == "QQ":
        raise_op, lower_op = ops["sigma_plus"], ops["sigma_minus"]
    else:
        raise_op, lower_op = ops["a_dag"], ops["a"]
    for j in range(lp.M - 1):
        hop = embed(raise_op, j, lp) @ embed(lower_op, j + 1, lp)
        h = h + lp.J * SparseOperator(hop.csr + hop.dagger().csr, hermitian=True)
    return SparseOperator(h.csr, hermitian=True)


def sector_hamiltonian(lp: LatticeParams, basis: SectorBasis) -> SparseOperator:
    """Chain Hamiltonian restricted to one excitation sector.

    Built directly from the sector occupation tuples, never touching the
    full product space, so large-M sectors stay cheap.  Agrees exactly
    with projecting lattice_hamiltonian onto the same basis.
    """
    if basis.sites != lp.M or basis.n_max != lp.n_max:
        raise ValueError("sector basis does not match lattice parameters")
    index_of = {occ: k for k, occ in enumerate(basis.occupations)}
    p = lp.jc
    rows, cols, vals = [], [], []

    def push(row_occ, col, amp):
        row = index_of.get(row_occ)
        if row is None:  # partner pushed out of the truncated space
            return
        rows.append(row)
        cols.append(col)
        vals.append(amp)

    for col, occ in enumerate(basis.occupations):
        diag = sum(f * p.omega_c + q * p.omega_q for f, q in occ)
        rows.append(col)
        cols.append(col)
        vals.append(diag)
        occ_list = list(occ)
        for j, (f, q) in enumerate(occ):
            # on-site a_dag sigma- and a sigma+
            if q == 1 and f + 1 <= lp.n_max:
                new = occ_list.copy()
                new[j] = (f + 1, 0)
                push(tuple(new), col, p.g * math.sqrt(f + 1))
            if q == 0 and f >= 1:
                new = occ_list.copy()
                new[j] = (f - 1, 1)
                push(tuple(new), col, p.g * math.sqrt(f))
        if lp.J == 0.0:
            continue
        for j in range(lp.M - 1):
            f1, q1 = occ[j]
            f2, q2 = occ[j + 1]
            if lp.coupling_kind == "QQ":
                if q1 == 1 and q2 == 0:
                    new = occ_list.copy()
                    new[j], new[j + 1] = (f1, 0), (f2, 1)
                    push(tuple(new), col, lp.J)
                if q1 == 0 and q2 == 1:
                    new = occ_list.copy()
                    new[j], new[j + 1] = (f1, 1), (f2, 0)
                    push(tuple(new), col, lp.J)
            else:
                if f1 >= 1 and f2 + 1 <= lp.n_max:
                    new = occ_list.copy()
                    new[j], new[j + 1] = (f1 - 1, q1), (f2 + 1, q2)
                    push(tuple(new), col, lp.J * math.sqrt(f1 * (f2 + 1)))
                if f2 >= 1 and f1 + 1 <= lp.n_max:
                    new = occ_list.copy()
                    new[j], new[j + 1] = (f1 + 1, q1), (f2 - 1, q2)
                    push(tuple(new), col, lp.J * math.sqrt(f2 * (f1 + 1)))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
    return SparseOperator(mat, hermitian=True)


def excitation_operator(lp: LatticeParams, site: int | None = None) -> SparseOperator:
    """Excitation number N_j = a_dag a + sigma+ sigma- at one site, or the total.

    site=None returns sum_j N_j.  Diagonal in the product basis.
    """
    ops = site_operators(lp.n_max)
    n_local = ops["n_fock"] + ops["n_qubit"]
    if site is not None:
        if not 0 <= site < lp.M:
            raise ValueError(f"site {site} out of range for M={lp.M}")
        return embed(n_local, site, lp)
    total = embed(n_local, 0, lp)
    for j in range(1, lp.M):
        total = total + embed(n_local, j, lp)
    return total
