"""Product Hilbert spaces for chains of qubit-oscillator sites.

Each site carries a two-level system (qubit) tensored with a truncated
oscillator (Fock states 0..n_max).  Local basis ordering is fock-major,
qubit-minor: local index = 2*fock + qubit with qubit 0 = down, 1 = up.
Across the chain, site 0 is the slowest tensor factor, so the full-space
index of a product state is sum_j local_j * d**(M-1-j) with d = 2*(n_max+1).
This ordering is fixed so operator dumps are bit-reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator

import numpy as np
import scipy.sparse as sp

if TYPE_CHECKING:
    from .lattice import LatticeParams

PRUNE_TOL = 1e-15
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SiteBasis:
    """Ordered local basis for one qubit-oscillator site."""

    n_max: int
    states: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        states = tuple(
            (fock, qubit)
            for fock in range(self.n_max + 1)
            for qubit in (0, 1)
        )
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, fock: int, qubit: int) -> int:
        if not (0 <= fock <= self.n_max and qubit in (0, 1)):
            raise ValueError(f"state ({fock},{qubit}) outside basis")
        return 2 * fock + qubit


class SparseOperator:
    """Complex sparse matrix over an explicitly enumerated product basis.

    Thin wrapper around a CSR matrix.  Entries with magnitude below
    PRUNE_TOL are dropped at construction.  If ``hermitian`` is claimed
    the deviation ‖A − A†‖_max must be at most HERMITIAN_TOL.
    """

    def __init__(self, mat, hermitian: bool = False):
        mat = sp.csr_matrix(mat, dtype=np.complex128)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        mat.sum_duplicates()
        # drop stored near-zeros so nnz counts are meaningful
        mask = np.abs(mat.data) >= PRUNE_TOL
        if not mask.all():
            coo = mat.tocoo()
            keep = np.abs(coo.data) >= PRUNE_TOL
            mat = sp.csr_matrix(
                (coo.data[keep], (coo.row[keep], coo.col[keep])),
                shape=mat.shape,
            )
        mat.sort_indices()
        if hermitian:
            defect = abs(mat - mat.conjugate().T)
            worst = defect.max() if defect.nnz else 0.0
            if worst > HERMITIAN_TOL:
                raise ValueError(
                    f"operator claimed hermitian but ‖A-A†‖_max = {worst:.3e}"
                )
        self._csr = mat
        self.hermitian = bool(hermitian)

    # -- construction helpers -------------------------------------------

    @classmethod
    def from_dense(cls, arr, hermitian: bool = False) -> "SparseOperator":
        return cls(sp.csr_matrix(np.asarray(arr, dtype=np.complex128)), hermitian)

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sp.identity(dim, dtype=np.complex128, format="csr"), hermitian=True)

    # -- views ------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._csr.shape[0]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def csr(self) -> sp.csr_matrix:
        """Row-compressed view for fast repeated application."""
        return self._csr

    @property
    def entries(self) -> Iterator[tuple[int, int, complex]]:
        """Coordinate-format entries in (row, col, value) order."""
        coo = self._csr.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            yield int(coo.row[k]), int(coo.col[k]), complex(coo.data[k])

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def element(self, row: int, col: int) -> complex:
        return complex(self._csr[row, col])

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def trace(self) -> complex:
        return complex(self._csr.diagonal().sum())

    def max_abs(self) -> float:
        return float(np.abs(self._csr.data).max()) if self._csr.nnz else 0.0

    # -- algebra -----------------------------------------------------------

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self._csr.conjugate().T, hermitian=self.hermitian)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(
            self._csr + other._csr, hermitian=self.hermitian and other.hermitian
        )

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(
            self._csr - other._csr, hermitian=self.hermitian and other.hermitian
        )

    def __mul__(self, scalar: complex) -> "SparseOperator":
        herm = self.hermitian and abs(complex(scalar).imag) == 0.0
        return SparseOperator(self._csr * scalar, hermitian=herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self._csr @ other._csr, hermitian=False)
        return self._csr @ other

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self._csr @ vec

    def commutator_norm(self, other: "SparseOperator") -> float:
        """‖[A, B]‖_max, the largest entry of the commutator."""
        comm = self._csr @ other._csr - other._csr @ self._csr
        return float(np.abs(comm.data).max()) if comm.nnz else 0.0

    def expectation(self, vec: np.ndarray) -> complex:
        return complex(np.vdot(vec, self._csr @ vec))

    def __repr__(self):
        return (
            f"SparseOperator(dim={self.dim}, nnz={self.nnz}, "
            f"hermitian={self.hermitian})"
        )


def site_operators(n_max: int) -> dict[str, SparseOperator]:
    """Local operators on SiteBasis(n_max).

    Returns {a, a_dag, sigma_minus, sigma_plus, n_fock, n_qubit}.  The
    annihilator is truncated, so a_dag|n_max> = 0.
    """
    basis = SiteBasis(n_max)
    d = basis.dim
    a = np.zeros((d, d), dtype=np.complex128)
    for fock in range(1, n_max + 1):
        for qubit in (0, 1):
            a[basis.index(fock - 1, qubit), basis.index(fock, qubit)] = np.sqrt(fock)
    sm = np.zeros((d, d), dtype=np.complex128)
    for fock in range(n_max + 1):
        sm[basis.index(fock, 0), basis.index(fock, 1)] = 1.0
    n_fock = np.diag([fock for fock, _ in basis.states]).astype(np.complex128)
    n_qubit = np.diag([qubit for _, qubit in basis.states]).astype(np.complex128)
    return {
        "a": SparseOperator.from_dense(a),
        "a_dag": SparseOperator.from_dense(a.conj().T),
        "sigma_minus": SparseOperator.from_dense(sm),
        "sigma_plus": SparseOperator.from_dense(sm.conj().T),
        "n_fock": SparseOperator.from_dense(n_fock, hermitian=True),
        "n_qubit": SparseOperator.from_dense(n_qubit, hermitian=True),
    }


def embed(op: SparseOperator, site: int, params: "LatticeParams") -> SparseOperator:
    """Tensor a site-local operator into the full chain space.

    Identity on every other site; site 0 is the slowest factor.
    """
    m = params.M
    d = 2 * (params.n_max + 1)
    if not 0 <= site < m:
        raise ValueError(f"site {site} out of range for M={m}")
    if op.dim != d:
        raise ValueError(
            f"operator dim {op.dim} does not match site dim {d}"
        )
    left = sp.identity(d**site, dtype=np.complex128, format="csr")
    right = sp.identity(d ** (m - site - 1), dtype=np.complex128, format="csr")
    full = sp.kron(sp.kron(left, op.csr, format="csr"), right, format="csr")
    return SparseOperator(full, hermitian=op.hermitian)


@dataclass(frozen=True)
class SectorBasis:
    """Basis of the fixed total-excitation subspace of an M-site chain.

    ``full_indices[k]`` is the full-space index of sector state k; states
    are ordered by ascending full-space index.  Excitation of a product
    state is sum_j (fock_j + qubit_j).
    """

    sites: int
    n_max: int
    n_total: int
    full_indices: np.ndarray
    occupations: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def dim(self) -> int:
        return len(self.full_indices)

    @property
    def full_dim(self) -> int:
        return (2 * (self.n_max + 1)) ** self.sites

    def sector_index(self, full_index: int) -> int:
        """Position of a full-space index inside the sector, or -1."""
        pos = int(np.searchsorted(self.full_indices, full_index))
        if pos < len(self.full_indices) and self.full_indices[pos] == full_index:
            return pos
        return -1

    def project_vector(self, vec: np.ndarray) -> np.ndarray:
        """Restrict a full-space vector to the sector (drops components)."""
        return vec[self.full_indices]

    def embed_vector(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros(self.full_dim, dtype=np.complex128)
        out[self.full_indices] = vec
        return out

    def project_operator(self, op: SparseOperator) -> SparseOperator:
        """Restrict a full-space operator to the sector rows and columns."""
        if op.dim != self.full_dim:
            raise ValueError(
                f"operator dim {op.dim} does not match full dim {self.full_dim}"
            )
        sub = op.csr[self.full_indices, :][:, self.full_indices]
        return SparseOperator(sub, hermitian=op.hermitian)


def sector_basis(M: int, n_max: int, n_total: int) -> SectorBasis:
    """Enumerate all product states with total excitation n_total.

    An unsatisfiable n_total yields an empty basis rather than an error.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not 0 <= n_total <= M * (n_max + 1):
        raise ValueError(
            f"n_total={n_total} outside [0, {M * (n_max + 1)}] for M={M}, n_max={n_max}"
        )
    basis = SiteBasis(n_max)
    d = basis.dim
    indices = []
    occs = []
    # site 0 slowest: itertools.product walks full-space indices in order
    for locs in itertools.product(range(d), repeat=M):
        exc = sum((k >> 1) + (k & 1) for k in locs)
        if exc != n_total:
            continue
        full = 0
        for k in locs:
            full = full * d + k
        indices.append(full)
        occs.append(tuple(basis.states[k] for k in locs))
    return SectorBasis(
        sites=M,
        n_max=n_max,
        n_total=n_total,
        full_indices=np.asarray(indices, dtype=np.int64),
        occupations=tuple(occs),
    )
