"""Exact many-spin oracle for the collective-mode reduction.

N two-level spins at frequency omega_c couple with individual strengths
g_k to a single qubit at omega_q.  Rewriting the spin ensemble in terms
of the collective mode a = (1/(sqrt(N) g_bar)) sum_k g_k tau-_k turns the
model into a Jaynes-Cummings site with enhanced coupling
g = sqrt(sum_k |g_k|^2), up to corrections that vanish at low
polarization.  This module propagates the exact model and quantifies
those corrections instead of assuming them away.

Tensor factor order is [qubit, spin_1, ..., spin_N] with the qubit
slowest, so a full-space basis index reads q*2^N + sum_k s_k*2^(N-k).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError
from .hilbert import SparseOperator

CAPACITY_BITS = 16  # hard guard: 2^(N+1) <= 2^16

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
_P_UP = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=np.complex128)


@dataclass(frozen=True)
class SpinEnsembleParams:
    """Qubit plus inhomogeneously coupled spin ensemble."""

    omega_q: float
    omega_c: float
    couplings: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "couplings", tuple(float(g) for g in self.couplings))
        if len(self.couplings) < 1:
            raise ValueError("need at least one spin")
        if all(g == 0.0 for g in self.couplings):
            raise ValueError("at least one coupling must be nonzero")

    @property
    def N(self) -> int:
        return len(self.couplings)

    @property
    def g_bar(self) -> float:
        """Root-mean-square coupling."""
        return math.sqrt(sum(g * g for g in self.couplings) / self.N)

    @property
    def g_collective(self) -> float:
        """Enhanced coupling sqrt(sum |g_k|^2) = sqrt(N) * g_bar."""
        return math.sqrt(sum(g * g for g in self.couplings))


def _embed_qubit(op2: np.ndarray, pos: int, total: int) -> sp.csr_matrix:
    """Place a 2x2 operator at factor position pos (0 = slowest) of total qubits."""
    left = sp.identity(2**pos, dtype=np.complex128, format="csr")
    right = sp.identity(2 ** (total - pos - 1), dtype=np.complex128, format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op2), format="csr"), right, format="csr")


def _check_capacity(n_spins: int):
    if n_spins + 1 > CAPACITY_BITS:
        raise CapacityError(
            f"{n_spins} spins need a 2^{n_spins + 1}-dimensional space; "
            f"the exact oracle is capped at 2^{CAPACITY_BITS}"
        )


def spin_ensemble_hamiltonian(p: SpinEnsembleParams) -> SparseOperator:
    """H = omega_q P_up(qubit) + omega_c sum_k P_up(k) + sum_k g_k (tau+_k sigma- + h.c.)."""
    _check_capacity(p.N)
    total = p.N + 1
    h = p.omega_q * _embed_qubit(_P_UP, 0, total)
    sm_qubit = _embed_qubit(_SIGMA_MINUS, 0, total)
    for k in range(1, total):
        h = h + p.omega_c * _embed_qubit(_P_UP, k, total)
        gk = p.couplings[k - 1]
        if gk != 0.0:
            flip = _embed_qubit(_SIGMA_MINUS, k, total).conjugate().T @ sm_qubit
            h = h + gk * (flip + flip.conjugate().T)
    return SparseOperator(h, hermitian=True)


def collective_lowering(p: SpinEnsembleParams) -> SparseOperator:
    """Collective mode a = (1/(sqrt(N) g_bar)) sum_k g_k tau-_k on the spin space."""
    norm = math.sqrt(p.N) * p.g_bar
    a = sp.csr_matrix((2**p.N, 2**p.N), dtype=np.complex128)
    for k in range(p.N):
        a = a + (p.couplings[k] / norm) * _embed_qubit(_SIGMA_MINUS, k, p.N)
    return SparseOperator(a)


@dataclass(frozen=True)
class DickeState:
    """Renormalized collective excitation (a_dag)^n |0> / sqrt(n!).

    raw_norm is the norm before renormalization; its deviation from 1 is
    a low-polarization diagnostic (exactly 1 for n <= 1 and for uniform
    couplings at any n).
    """

    n: int
    vector: np.ndarray
    raw_norm: float


def dicke_state(n: int, p: SpinEnsembleParams) -> DickeState:
    """Collective n-excitation state over the N-spin space."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n > p.N:
        raise ValueError(f"collective tower truncates at N={p.N}, got n={n}")
    _check_capacity(p.N)
    vec = np.zeros(2**p.N, dtype=np.complex128)
    vec[0] = 1.0  # all spins down
    if n == 0:
        return DickeState(0, vec, 1.0)
    a_dag = collective_lowering(p).dagger()
    for _ in range(n):
        vec = a_dag.apply(vec)
    vec = vec / math.sqrt(math.factorial(n))
    raw = float(np.linalg.norm(vec))
    return DickeState(n, vec / raw, raw)


def commutator_defect(state: np.ndarray, p: SpinEnsembleParams) -> float:
    """<state| [a, a_dag] |state> - 1, computed from the exact commutator.

    Zero for the vacuum; bounded below by -2 (fully inverted ensemble).
    """
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state must be unit norm, got {norm}")
    a = collective_lowering(p)
    a_dag = a.dagger()
    comm = a @ a_dag - a_dag @ a
    return float(comm.expectation(state).real) - 1.0


def _popcount_sector(n_bits: int, n_total: int) -> np.ndarray:
    idx = [i for i in range(2**n_bits) if bin(i).count("1") == n_total]
    return np.asarray(idx, dtype=np.int64)


class _SectorPropagator:
    """Exact propagation of a sparse Hamiltonian restricted to one sector."""

    def __init__(self, h: SparseOperator, indices: np.ndarray, psi0_full: np.ndarray):
        sub = h.csr[indices, :][:, indices].toarray()
        self.indices = indices
        self.evals, self.evecs = np.linalg.eigh(sub)
        self.coef0 = self.evecs.conj().T @ psi0_full[indices]

    def at(self, t: float) -> np.ndarray:
        """Sector components of the state at time t."""
        return self.evecs @ (np.exp(-1j * self.evals * t) * self.coef0)


@dataclass(frozen=True)
class ReductionErrorTrace:
    """Trace-distance history between exact and collective-mode dynamics."""

    times: np.ndarray
    errors: np.ndarray
    leakage: np.ndarray

    @property
    def max_error(self) -> float:
        return float(self.errors.max())


def reduction_error(
    p: SpinEnsembleParams,
    n_total: int,
    t_final: float,
    samples: int = 101,
) -> ReductionErrorTrace:
    """Exact spin model vs JC model with g = g_collective, same initial state.

    Starts from qubit excited, ensemble in the (n_total - 1)-excitation
    Dicke state.  At each sampled time the exact state is projected onto
    the qubit (x) Dicke-tower subspace (n <= n_total); weight outside the
    tower is leakage and counts as error.  Returns the trace-distance
    history against the two-level JC reduction.
    """
    if not 1 <= n_total <= p.N:
        raise ValueError(f"n_total must be in [1, N={p.N}], got {n_total}")
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    _check_capacity(p.N)

    times = np.linspace(0.0, t_final, samples)

    # exact side: restrict to the conserved-excitation sector
    h_exact = spin_ensemble_hamiltonian(p)
    dicke_init = dicke_state(n_total - 1, p)
    psi0 = np.zeros(2 ** (p.N + 1), dtype=np.complex128)
    psi0[(1 << p.N):] = dicke_init.vector  # qubit up block
    sector = _popcount_sector(p.N + 1, n_total)
    prop_exact = _SectorPropagator(h_exact, sector, psi0)

    # reduced side: JC site with the collective coupling, Fock cutoff n_total
    from .lattice import site_hamiltonian
    from .polariton import JCParams

    jc = JCParams(omega_q=p.omega_q, omega_c=p.omega_c, g=p.g_collective)
    h_jc = site_hamiltonian(jc, n_max=n_total)
    site_dim = 2 * (n_total + 1)
    psi0_jc = np.zeros(site_dim, dtype=np.complex128)
    psi0_jc[2 * (n_total - 1) + 1] = 1.0  # |fock = n_total - 1, up>
    prop_jc = _SectorPropagator(h_jc, np.arange(site_dim), psi0_jc)

    # overlap rows: <q, Dicke_n| restricted to the sector, labelled by the
    # JC site index 2n + q
    towers = [dicke_state(n, p).vector for n in range(n_total + 1)]
    overlap = np.zeros((site_dim, len(sector)), dtype=np.complex128)
    for n, tower in enumerate(towers):
        for q in (0, 1):
            full = np.zeros(2 ** (p.N + 1), dtype=np.complex128)
            full[(q << p.N):((q + 1) << p.N)] = tower
            overlap[2 * n + q, :] = full.conj()[sector]

    errors = np.empty(samples)
    leakage = np.empty(samples)
    for i, t in enumerate(times):
        psi_exact = prop_exact.at(t)
        phi = overlap @ psi_exact  # unnormalized projected amplitudes
        rho_exact = np.outer(phi, phi.conj())
        leakage[i] = max(0.0, 1.0 - float(np.vdot(phi, phi).real))
        psi_jc = prop_jc.at(t)
        rho_jc = np.outer(psi_jc, psi_jc.conj())
        diff_evals = np.linalg.eigvalsh(rho_exact - rho_jc)
        errors[i] = 0.5 * float(np.abs(diff_evals).sum())
    return ReductionErrorTrace(times=times, errors=errors, leakage=leakage)
