"""Zero-temperature Lindblad dynamics of the chain.

Evolves the density matrix under
    drho/dt = -i[H, rho] + sum_j (gamma_c L_{a_j}[rho] + gamma_q L_{s-_j}[rho])
with L_O[rho] = O rho O^dag - (O^dag O rho + rho O^dag O)/2, starting
from the product of one lower polariton per site, and records the
two-excitation probability P2 per site along the way.

Both jump operators only remove excitations, so the dynamics stays in
the subspace with total excitation <= the initial value; evolution is
restricted to that reachable subspace by default (a full-space mode
exists for validation).  The Hamiltonian can be rotated to the frame of
omega_c * N_total: every recorded observable commutes with N_total, so
traces are frame-independent while the integrator sees much smaller
frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import _engine
from .errors import IntegrationQualityError, StiffnessError
from .hilbert import SparseOperator, embed, sector_basis, site_operators
from .lattice import LatticeParams, excitation_operator, lattice_hamiltonian
from .polariton import MINUS, dressed_site_vector

POSITIVITY_RAISE = 1e-5
MIN_QUAD_SAMPLES = 200
_STATE_STACK_BYTES = 32 << 20


@dataclass(frozen=True)
class DissipationRates:
    """Uniform decay rates, angular frequency units."""

    gamma_q: float
    gamma_c: float

    def __post_init__(self):
        if self.gamma_q < 0 or self.gamma_c < 0:
            raise ValueError("decay rates must be nonnegative")


class DensityMatrix:
    """Dense density matrix with on-demand physicality diagnostics."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got {matrix.shape}")
        self.matrix = matrix

    @classmethod
    def from_pure(cls, vec: np.ndarray) -> "DensityMatrix":
        vec = np.asarray(vec, dtype=np.complex128)
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace_deviation(self) -> float:
        return abs(complex(np.trace(self.matrix)) - 1.0)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def purity(self) -> float:
        return float(np.real(np.sum(np.abs(self.matrix) ** 2)))


@dataclass(frozen=True)
class DynamicsTrace:
    """Sampled observables and diagnostics of one trajectory."""

    times: np.ndarray
    p2_per_site: np.ndarray  # (samples, M)
    p2_mean: np.ndarray
    n_total_expect: np.ndarray
    trace_dev: np.ndarray
    herm_defect: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray

    def __post_init__(self):
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")
        if self.p2_per_site.max(initial=0.0) > 1 + 1e-9:
            raise ValueError("P2 exceeded 1 beyond tolerance")
        if self.p2_per_site.min(initial=0.0) < 0.0:
            raise ValueError("negative P2 beyond tolerance")

    @property
    def sites(self) -> int:
        return self.p2_per_site.shape[1]


def jump_operators(
    lp: LatticeParams, rates: DissipationRates
) -> list[tuple[SparseOperator, float]]:
    """Per-site decay channels (operator, rate), zero-rate channels dropped."""
    ops = site_operators(lp.n_max)
    jumps = []
    for j in range(lp.M):
        if rates.gamma_c > 0:
            jumps.append((embed(ops["a"], j, lp), rates.gamma_c))
        if rates.gamma_q > 0:
            jumps.append((embed(ops["sigma_minus"], j, lp), rates.gamma_q))
    return jumps


def lindblad_rhs(
    rho: DensityMatrix,
    h: SparseOperator,
    jumps: list[tuple[SparseOperator, float]],
) -> DensityMatrix:
    """One application of the generator; reference implementation."""
    if h.dim != rho.dim:
        raise ValueError(f"H dim {h.dim} does not match rho dim {rho.dim}")
    r = rho.matrix
    hc = h.csr
    out = -1j * (hc @ r - r @ hc)
    for op, rate in jumps:
        if op.dim != rho.dim:
            raise ValueError("jump operator dimension mismatch")
        l = op.csr
        ldl = (l.conj().T @ l).toarray()
        out = out + rate * ((l @ r) @ l.conj().T - 0.5 * (ldl @ r + r @ ldl))
    return DensityMatrix(np.asarray(out))


def initial_polariton_product(lp: LatticeParams) -> DensityMatrix:
    """Pure product of one lower polariton |1,-> per site."""
    site_vec = dressed_site_vector(1, MINUS, lp.jc, lp.n_max)
    vec = site_vec
    for _ in range(lp.M - 1):
        vec = np.kron(vec, site_vec)
    return DensityMatrix.from_pure(vec)


def _local_index(full_index: int, site: int, lp: LatticeParams) -> int:
    d = lp.site_dim
    return (full_index // d ** (lp.M - 1 - site)) % d


def p2_expectation(rho: DensityMatrix, lp: LatticeParams, site: int) -> float:
    """Probability of exactly two excitations at one site.

    The projector covers the full local n=2 manifold: Fock 2 with qubit
    down plus Fock 1 with qubit up, so it is polariton-species blind.
    """
    if lp.n_max < 2:
        raise ValueError("P2 projector needs Fock level 2, so n_max >= 2")
    if not 0 <= site < lp.M:
        raise ValueError(f"site {site} out of range for M={lp.M}")
    if rho.dim != lp.full_dim:
        raise ValueError("rho is not in the full product space")
    mask = _p2_masks(lp, np.arange(lp.full_dim))[site]
    return float(np.real(np.diag(rho.matrix)[mask].sum()))


def _p2_masks(lp: LatticeParams, indices: np.ndarray) -> list[np.ndarray]:
    """Boolean diagonal masks of the per-site two-excitation projectors."""
    d = lp.site_dim
    masks = []
    for j in range(lp.M):
        local = (indices // d ** (lp.M - 1 - j)) % d
        masks.append((local == 4) | (local == 3))  # (2,down)=4, (1,up)=3
    return masks


def reachable_indices(lp: LatticeParams, n_top: int) -> np.ndarray:
    """Full-space indices of all sectors with n_total <= n_top, ascending."""
    parts = [
        sector_basis(lp.M, lp.n_max, n).full_indices for n in range(n_top + 1)
    ]
    return np.sort(np.concatenate(parts))


def _initial_excitation_ceiling(rho: DensityMatrix, lp: LatticeParams) -> int:
    n_diag = np.real(excitation_operator(lp).diagonal()).round().astype(int)
    support = np.abs(rho.matrix).max(axis=1) > 1e-14
    if not support.any():
        raise ValueError("initial state has no support")
    return int(n_diag[support].max())


def _csr_stack(mats: list[sp.csr_matrix], dim: int):
    """Concatenate CSR arrays; block q's rows start at offset q*(dim+1)."""
    if not mats:
        return (
            np.zeros(0, np.int64),
            np.zeros(0, np.int64),
            np.zeros(0, np.complex128),
        )
    ptrs, idxs, data = [], [], []
    offset = 0
    for m in mats:
        m = m.tocsr()
        m.sort_indices()
        ptrs.append(m.indptr.astype(np.int64) + offset)
        idxs.append(m.indices.astype(np.int64))
        data.append(m.data.astype(np.complex128))
        offset += m.nnz
    return np.concatenate(ptrs), np.concatenate(idxs), np.concatenate(data)


def evolve(
    rho0: DensityMatrix,
    lp: LatticeParams,
    rates: DissipationRates,
    t_final: float,
    sample_count: int = 1025,
    *,
    restrict: bool = True,
    rotating_frame: bool = True,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    engine: str = "compiled",
    max_steps: int = 20_000_000,
) -> DynamicsTrace:
    """Integrate the master equation and sample observables.

    Adaptive embedded Runge-Kutta pair with per-step local error rtol
    (relative) / atol (absolute).  engine="compiled" runs the sparse
    direct-RHS stepper; engine="reference" runs scipy's RK45 on the same
    right-hand side as an independent cross-check.
    """
    if t_final <= 0:
        raise ValueError(f"t_final must be positive, got {t_final}")
    if sample_count < 2:
        raise ValueError(f"need at least 2 samples, got {sample_count}")
    if engine not in ("compiled", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    if lp.n_max < 2:
        raise ValueError("P2 recording needs Fock level 2, so n_max >= 2")
    if rho0.dim != lp.full_dim:
        raise ValueError("rho0 is not in the full product space")

    h_op = lattice_hamiltonian(lp)
    if rotating_frame and lp.jc.omega_c != 0.0:
        h_op = h_op - lp.jc.omega_c * excitation_operator(lp)
    jumps = jump_operators(lp, rates)

    if restrict:
        n_top = _initial_excitation_ceiling(rho0, lp)
        idx = reachable_indices(lp, n_top)
    else:
        idx = np.arange(lp.full_dim)
    h_sub = h_op.csr[idx, :][:, idx]
    jump_subs = [(op.csr[idx, :][:, idx], rate) for op, rate in jumps]
    rho_work = np.ascontiguousarray(rho0.matrix[np.ix_(idx, idx)])
    leak = abs(float(np.trace(rho0.matrix).real) - float(np.trace(rho_work).real))
    if leak > 1e-12:
        raise ValueError(
            f"initial state has weight {leak:.3e} outside the reachable subspace"
        )

    times = np.linspace(0.0, t_final, sample_count)
    if engine == "compiled":
        stack_iter = _run_compiled(
            rho_work, h_sub, jump_subs, times, rtol, atol, max_steps
        )
    else:
        stack_iter = _run_reference(rho_work, h_sub, jump_subs, times, rtol, atol)

    masks = [m[idx] for m in _p2_masks(lp, np.arange(lp.full_dim))]
    n_diag = np.real(excitation_operator(lp).diagonal())[idx]

    p2 = np.empty((sample_count, lp.M))
    n_tot = np.empty(sample_count)
    trace_dev = np.empty(sample_count)
    herm = np.empty(sample_count)
    min_eig = np.empty(sample_count)
    purity = np.empty(sample_count)
    pos = 0
    for stack in stack_iter:
        count = stack.shape[0]
        diags = np.real(np.einsum("sii->si", stack))
        for j, mask in enumerate(masks):
            p2[pos : pos + count, j] = diags[:, mask].sum(axis=1)
        n_tot[pos : pos + count] = diags @ n_diag
        trace_dev[pos : pos + count] = np.abs(diags.sum(axis=1) - 1.0)
        herm[pos : pos + count] = np.abs(
            stack - stack.conj().transpose(0, 2, 1)
        ).max(axis=(1, 2))
        hermitized = 0.5 * (stack + stack.conj().transpose(0, 2, 1))
        min_eig[pos : pos + count] = np.linalg.eigvalsh(hermitized)[:, 0]
        purity[pos : pos + count] = np.sum(np.abs(stack) ** 2, axis=(1, 2))
        pos += count
    assert pos == sample_count

    worst_defect = max(0.0, -float(min_eig.min()))
    if worst_defect > POSITIVITY_RAISE:
        raise IntegrationQualityError(
            f"positivity defect {worst_defect:.3e} exceeds {POSITIVITY_RAISE:g}"
        )
    # past the quality gate, any negative P2 is eigenvalue-level noise
    p2 = np.maximum(p2, 0.0)
    return DynamicsTrace(
        times=times,
        p2_per_site=p2,
        p2_mean=p2.mean(axis=1),
        n_total_expect=n_tot,
        trace_dev=trace_dev,
        herm_defect=herm,
        min_eig=min_eig,
        purity=purity,
    )


def _effective_hamiltonian(h_sub, jump_subs):
    heff = sp.csr_matrix(h_sub, dtype=np.complex128)
    for l, rate in jump_subs:
        heff = heff - 0.5j * rate * (l.conj().T @ l)
    heff.sort_indices()
    return heff


def _run_compiled(rho_work, h_sub, jump_subs, times, rtol, atol, max_steps):
    """Yield chunks of sampled states from the compiled stepper."""
    dim = rho_work.shape[0]
    heff = _effective_hamiltonian(h_sub, jump_subs)
    scaled = [sp.csr_matrix(l * math.sqrt(rate)) for l, rate in jump_subs]
    jp, ji, jd = _csr_stack(scaled, dim)
    ajp, aji, ajd = _csr_stack([m.conj().T.tocsr() for m in scaled], dim)
    hp = heff.indptr.astype(np.int64)
    hi = heff.indices.astype(np.int64)
    hd = heff.data.astype(np.complex128)

    scale = max(1.0, float(np.abs(hd).max(initial=0.0)))
    h_step = 1e-3 / scale
    chunk = max(2, min(len(times), _STATE_STACK_BYTES // (16 * dim * dim)))
    start = 0
    budget = max_steps
    while start < len(times) - 1:
        stop = min(start + chunk, len(times))
        seg = times[start:stop] if start == 0 else times[start - 1 : stop]
        outs, nsteps, h_step, status = _engine.integrate(
            rho_work,
            hp,
            hi,
            hd,
            jp,
            ji,
            jd,
            ajp,
            aji,
            ajd,
            len(scaled),
            seg,
            rtol,
            atol,
            _engine.DP_A,
            _engine.DP_B5,
            _engine.DP_ERR,
            h_step,
            budget,
        )
        budget -= nsteps
        if status == _engine.STATUS_STEP_UNDERFLOW:
            raise StiffnessError("integrator step size underflowed")
        if status == _engine.STATUS_STEP_BUDGET or budget <= 0:
            raise StiffnessError(
                f"step budget exhausted ({max_steps} steps)"
            )
        rho_work = np.ascontiguousarray(outs[-1])
        yield outs if start == 0 else outs[1:]
        start = stop


def _run_reference(rho_work, h_sub, jump_subs, times, rtol, atol):
    """scipy RK45 on the same RHS; independent of the compiled path."""
    dim = rho_work.shape[0]
    hc = sp.csr_matrix(h_sub)
    ldl = [(sp.csr_matrix(l), rate, (l.conj().T @ l).toarray()) for l, rate in jump_subs]

    def rhs(_t, y):
        r = y.reshape(dim, dim)
        out = -1j * (hc @ r - r @ hc)
        for l, rate, m in ldl:
            out = out + rate * ((l @ r) @ l.conj().T - 0.5 * (m @ r + r @ m))
        return np.asarray(out).ravel()

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        rho_work.ravel(),
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise StiffnessError(f"reference integrator failed: {sol.message}")
    yield np.ascontiguousarray(sol.y.T.reshape(len(times), dim, dim))


def averaged_p2(trace: DynamicsTrace, T: float) -> float:
    """Time average (1/T) int_0^T P2(t) dt by trapezoidal quadrature."""
    times = trace.times
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if T > times[-1] + 1e-12 * max(1.0, times[-1]):
        raise ValueError(f"T={T} exceeds the last sample time {times[-1]}")
    inside = times <= T
    count = int(inside.sum())
    if count < MIN_QUAD_SAMPLES:
        raise ValueError(
            f"only {count} samples in [0, T]; need at least {MIN_QUAD_SAMPLES}"
        )
    t_in = times[inside]
    f_in = trace.p2_mean[inside]
    total = float(np.trapezoid(f_in, t_in))
    if t_in[-1] < T:  # linear closure of the last partial interval
        t0, t1 = t_in[-1], times[count]
        f0, f1 = f_in[-1], trace.p2_mean[count]
        f_t = f0 + (f1 - f0) * (T - t0) / (t1 - t0)
        total += 0.5 * (f0 + f_t) * (T - t0)
    return total / T
