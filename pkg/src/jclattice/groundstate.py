"""Sector ground states and the excitation-variance order parameter.

The equilibrium diagnostic is the lowest-energy state of the chain in
the subspace with one excitation per site (n_total = M) and the local
variance var(N_j) = <N_j^2> - <N_j>^2 of its excitation numbers: near
zero when repulsion pins one polariton per site, of order one when
effective hopping wins and excitations delocalize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ConvergenceError
from .hilbert import SectorBasis, sector_basis
from .lattice import LatticeParams, sector_hamiltonian
from .polariton import MINUS, mixing_angle

DENSE_CUTOFF = 512
DEGENERACY_GAP = 1e-8


@dataclass(frozen=True)
class SectorGroundState:
    """Lowest eigenpair of the chain inside one excitation sector."""

    params: LatticeParams
    n_total: int
    basis: SectorBasis
    energy: float
    amplitudes: np.ndarray
    residual: float
    spectral_gap: float
    near_degenerate: bool


def sector_ground_state(
    lp: LatticeParams, n_total: int, method: str = "auto"
) -> SectorGroundState:
    """Ground state within the n_total sector.

    Dense diagonalization up to DENSE_CUTOFF states, Lanczos-type
    iteration beyond, always started from the fixed uniform vector so
    repeated runs are bit-identical.  Flags near-degeneracy when the
    first spectral gap drops below 1e-8 g.
    """
    if method not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    basis = sector_basis(lp.M, lp.n_max, n_total)
    if basis.dim == 0:
        raise ValueError(f"sector n_total={n_total} is empty")
    h = sector_hamiltonian(lp, basis)
    if method == "auto":
        method = "dense" if basis.dim <= DENSE_CUTOFF else "iterative"
    if method == "dense" or basis.dim < 3:
        evals, evecs = np.linalg.eigh(h.to_dense())
        energy = float(evals[0])
        vec = evecs[:, 0]
        gap = float(evals[1] - evals[0]) if basis.dim > 1 else math.inf
    else:
        v0 = np.ones(basis.dim) / math.sqrt(basis.dim)
        try:
            evals, evecs = spla.eigsh(h.csr, k=2, which="SA", v0=v0)
        except spla.ArpackNoConvergence as exc:
            if exc.eigenvalues is None or len(exc.eigenvalues) == 0:
                raise ConvergenceError(str(exc), residual=math.inf) from exc
            vec = exc.eigenvectors[:, 0]
            res = float(np.linalg.norm(h.apply(vec) - exc.eigenvalues[0] * vec))
            raise ConvergenceError(str(exc), residual=res) from exc
        order = np.argsort(evals)
        energy = float(evals[order[0]])
        vec = evecs[:, order[0]]
        gap = float(evals[order[1]] - evals[order[0]])
    # fix the global phase: largest-magnitude amplitude real positive
    pivot = int(np.argmax(np.abs(vec)))
    phase = vec[pivot] / abs(vec[pivot])
    vec = (vec / phase).astype(np.complex128)
    vec = vec / np.linalg.norm(vec)
    residual = float(np.linalg.norm(h.apply(vec) - energy * vec))
    return SectorGroundState(
        params=lp,
        n_total=n_total,
        basis=basis,
        energy=energy,
        amplitudes=vec,
        residual=residual,
        spectral_gap=gap,
        near_degenerate=bool(gap < DEGENERACY_GAP * lp.jc.g),
    )


def _site_excitations(basis: SectorBasis) -> np.ndarray:
    """Per-site excitation number of every sector basis state, shape (dim, M)."""
    return np.array(
        [[f + q for f, q in occ] for occ in basis.occupations], dtype=float
    )


def site_occupations(state: SectorGroundState) -> np.ndarray:
    """<N_j> for every site."""
    weights = np.abs(state.amplitudes) ** 2
    return weights @ _site_excitations(state.basis)


def excitation_variance(state: SectorGroundState, site: int) -> float:
    """var(N_j) = <N_j^2> - <N_j>^2 at one site; N_j is diagonal here."""
    if not 0 <= site < state.params.M:
        raise ValueError(f"site {site} out of range for M={state.params.M}")
    n_vals = _site_excitations(state.basis)[:, site]
    weights = np.abs(state.amplitudes) ** 2
    mean = float(weights @ n_vals)
    var = float(weights @ n_vals**2) - mean**2
    return max(var, 0.0)


def central_site(M: int) -> int:
    """Zero-based index of the reporting site ceil(M/2) (one-based)."""
    return (M + 1) // 2 - 1


def _minus_amplitude(fock: int, qubit: int, n: int, theta: float) -> float:
    """<fock,qubit|n,-> for the lower dressed state of manifold n."""
    if n == 0:
        return 1.0 if (fock, qubit) == (0, 0) else 0.0
    if (fock, qubit) == (n, 0):
        return math.cos(theta)
    if (fock, qubit) == (n - 1, 1):
        return -math.sin(theta)
    return 0.0


def species_leakage(state: SectorGroundState) -> float:
    """Ground-state weight outside products of lower-branch polaritons.

    Zero at J=0; stays small while the upper branch is energetically
    protected, which is the regime where the single-species effective
    model applies.
    """
    lp = state.params
    thetas = [mixing_angle(n, lp.jc) for n in range(lp.n_max + 1)]
    occs = state.basis.occupations
    covered = 0.0
    # products of |n_j,-> with sum n_j = n_total form an orthonormal set
    for ns in product(range(lp.n_max + 1), repeat=lp.M):
        if sum(ns) != state.n_total:
            continue
        overlap = 0.0 + 0.0j
        for k, occ in enumerate(occs):
            amp = 1.0
            for (f, q), n in zip(occ, ns):
                amp *= _minus_amplitude(f, q, n, thetas[n])
                if amp == 0.0:
                    break
            if amp != 0.0:
                overlap += amp * state.amplitudes[k]
        covered += abs(overlap) ** 2
    return max(0.0, 1.0 - covered)


# re-exported so callers picking apart the leakage can label the species
LOWER_SPECIES = MINUS
