"""Closed-form single-site polariton analytics.

Dressed-state energies and mixing angles of one qubit-oscillator site,
the hopping coefficients that arise when qubit or oscillator operators
are expanded in the dressed basis, the effective polariton repulsion
delta and effective inter-site coupling J_eff, and the rotating-frame
phase frequencies that justify dropping species-mixing hopping terms.

Species convention: the lower branch is MINUS = -1, the upper PLUS = +1.
Coefficient matrices are indexed [alpha, beta] with 0 = minus, 1 = plus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoCrossingError

MINUS = -1
PLUS = +1

COUPLING_KINDS = ("QQ", "CC")


@dataclass(frozen=True)
class JCParams:
    """Single-site parameters, all angular frequencies with hbar = 1."""

    omega_q: float
    omega_c: float
    g: float

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError(f"g must be positive, got {self.g}")

    @property
    def delta(self) -> float:
        """Detuning omega_q - omega_c; derived, never stored."""
        return self.omega_q - self.omega_c

    def with_delta(self, delta: float) -> "JCParams":
        """Same g and omega_c, qubit retuned to the requested detuning."""
        return JCParams(omega_q=self.omega_c + delta, omega_c=self.omega_c, g=self.g)


def _check_species(species: int) -> int:
    if species not in (MINUS, PLUS):
        raise ValueError(f"species must be {MINUS} or {PLUS}, got {species}")
    return species


def polariton_energy(n: int, species: int, p: JCParams) -> float:
    """Dressed-state energy E_{n,±} = n*omega_c + delta/2 ± sqrt(n g² + delta²/4).

    The n=0 manifold is the unique ground state with energy 0; species is
    ignored there.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 0.0
    _check_species(species)
    root = math.sqrt(n * p.g**2 + p.delta**2 / 4)
    return n * p.omega_c + p.delta / 2 + species * root


def mixing_angle(n: int, p: JCParams) -> float:
    """Mixing angle theta_n of the n-excitation doublet.

    theta_0 := 0 by convention (the arctan form is 0/0 there, and this
    choice makes the hopping-coefficient formulas reproduce the action of
    sigma+ and a_dag on the ground state).  For n >= 1 the branch is
    chosen so theta -> pi/4 as delta -> 0+ and theta in (pi/4, pi/2) for
    negative detuning.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n == 0:
        return 0.0
    return 0.5 * math.atan2(p.g * math.sqrt(n), p.delta / 2)


def hop_coeffs_qubit(n: int, p: JCParams) -> np.ndarray:
    """Coefficients s_{n,alpha,beta} of sigma+ in the dressed basis.

    sigma+ |n,alpha> = sum_beta s_{n,alpha,beta} |n+1,beta>, indexed
    [alpha, beta] with 0 = minus, 1 = plus.
    """
    th_n = mixing_angle(n, p)
    th_m = mixing_angle(n + 1, p)
    s = np.empty((2, 2))
    s[0, 0] = -math.cos(th_n) * math.sin(th_m)
    s[0, 1] = math.cos(th_n) * math.cos(th_m)
    s[1, 0] = -math.sin(th_n) * math.sin(th_m)
    s[1, 1] = math.sin(th_n) * math.cos(th_m)
    return s


def hop_coeffs_cavity(n: int, p: JCParams) -> np.ndarray:
    """Coefficients t_{n,alpha,beta} of a_dag in the dressed basis.

    a_dag |n,alpha> = sum_beta t_{n,alpha,beta} |n+1,beta>, indexed like
    hop_coeffs_qubit.  Weights sqrt(n+1), sqrt(n) come from the photon
    content of the two dressed components.
    """
    th_n = mixing_angle(n, p)
    th_m = mixing_angle(n + 1, p)
    rt_up = math.sqrt(n + 1)
    rt_dn = math.sqrt(n)
    t = np.empty((2, 2))
    t[0, 0] = math.cos(th_n) * math.cos(th_m) * rt_up + math.sin(th_n) * math.sin(th_m) * rt_dn
    t[0, 1] = math.cos(th_n) * math.sin(th_m) * rt_up - math.sin(th_n) * math.cos(th_m) * rt_dn
    t[1, 0] = math.sin(th_n) * math.cos(th_m) * rt_up - math.cos(th_n) * math.sin(th_m) * rt_dn
    t[1, 1] = math.sin(th_n) * math.sin(th_m) * rt_up + math.cos(th_n) * math.cos(th_m) * rt_dn
    return t


def effective_repulsion(p: JCParams) -> float:
    """Extra energy to place two lower polaritons on one site.

    delta = -sqrt(2 g² + Delta²/4) + 2 sqrt(g² + Delta²/4) - Delta/2,
    identical to E_{2,-} - 2 E_{1,-}.
    """
    d = p.delta
    return (
        -math.sqrt(2 * p.g**2 + d**2 / 4)
        + 2 * math.sqrt(p.g**2 + d**2 / 4)
        - d / 2
    )


def effective_coupling(J: float, p: JCParams, kind: str) -> float:
    """Effective lower-polariton hopping strength |J_eff|.

    QQ chains: J * s_{0,--} * s_{1,--}; CC chains: J * t_{0,--} * t_{1,--}.
    Reported as a magnitude, which is what the comparison with the
    repulsion delta uses.
    """
    if J < 0:
        raise ValueError(f"J must be >= 0, got {J}")
    if kind not in COUPLING_KINDS:
        raise ValueError(f"kind must be one of {COUPLING_KINDS}, got {kind!r}")
    if kind == "QQ":
        c0 = hop_coeffs_qubit(0, p)[0, 0]
        c1 = hop_coeffs_qubit(1, p)[0, 0]
    else:
        c0 = hop_coeffs_cavity(0, p)[0, 0]
        c1 = hop_coeffs_cavity(1, p)[0, 0]
    return abs(J * c0 * c1)


def crossing_detuning(
    J: float,
    p: JCParams,
    kind: str,
    delta_max: float | None = None,
    rtol: float = 1e-10,
) -> float:
    """Detuning Delta* where the repulsion crosses the effective coupling.

    Solves delta_rep(Delta) = J_eff(Delta) by bracketing bisection on
    Delta in [0, 1000 g] (overridable upper end).  If the chain is
    already delocalized at resonance (J_eff >= delta_rep at Delta = 0)
    the boundary sits at Delta* = 0.  A bracket without sign change
    raises NoCrossingError carrying both endpoint values.
    """
    if J <= 0:
        raise ValueError(f"J must be positive, got {J}")
    if delta_max is None:
        delta_max = 1e3 * p.g

    def f(delta: float) -> float:
        q = p.with_delta(delta)
        return effective_repulsion(q) - effective_coupling(J, q, kind)

    lo, hi = 0.0, float(delta_max)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo <= 0.0:
        return 0.0
    if f_hi > 0.0:
        raise NoCrossingError(
            f"no crossing of delta_rep and J_eff({kind}) for Delta in "
            f"[0, {delta_max:g}]: f(0)={f_lo:.6g}, f(max)={f_hi:.6g}",
            f_lo,
            f_hi,
        )
    tol = rtol * max(hi, p.g)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        tol = rtol * max(abs(hi), p.g)
    return 0.5 * (lo + hi)


def rwa_phase_frequency(
    n: int,
    n_prime: int,
    alpha: int,
    alpha_prime: int,
    beta: int,
    beta_prime: int,
    p: JCParams,
) -> float:
    """Rotating-frame frequency of a two-site hopping term.

    The interaction-picture phase of the term that raises site j from
    (n, alpha) to (n+1, beta) while lowering its neighbour from
    (n'+1, beta') to (n', alpha') rotates at
    (E_{n+1,beta} - E_{n,alpha}) - (E_{n'+1,beta'} - E_{n',alpha'}).
    Terms with |frequency| much larger than J may be dropped under the
    rotating-wave approximation.
    """
    if n < 0 or n_prime < 0:
        raise ValueError("excitation indices must be >= 0")
    up = polariton_energy(n + 1, beta, p) - polariton_energy(n, alpha, p)
    dn = polariton_energy(n_prime + 1, beta_prime, p) - polariton_energy(
        n_prime, alpha_prime, p
    )
    return up - dn


def dressed_site_vector(
    n: int, species: int, p: JCParams, n_max: int
) -> np.ndarray:
    """|n,±> as amplitudes over the fock-major site basis (index 2*fock+qubit).

    Phase fixed so the |n,down> component is real nonnegative:
    |n,-> = cos(theta)|n,down> - sin(theta)|n-1,up>,
    |n,+> = sin(theta)|n,down> + cos(theta)|n-1,up>.
    """
    if n < 0 or n > n_max:
        raise ValueError(f"n={n} outside [0, n_max={n_max}]")
    vec = np.zeros(2 * (n_max + 1), dtype=np.complex128)
    if n == 0:
        vec[0] = 1.0
        return vec
    _check_species(species)
    th = mixing_angle(n, p)
    if species == MINUS:
        vec[2 * n] = math.cos(th)
        vec[2 * (n - 1) + 1] = -math.sin(th)
    else:
        vec[2 * n] = math.sin(th)
        vec[2 * (n - 1) + 1] = math.cos(th)
    return vec


@dataclass(frozen=True)
class PolaritonTable:
    """All closed-form dressed-state data for one (g, Delta) point.

    Arrays are indexed by manifold n = 0..n_max; s[n] and t[n] are the
    2x2 coefficient matrices [alpha, beta] with 0 = minus, 1 = plus.
    """

    params: JCParams
    n_max: int
    J: float
    theta: np.ndarray
    E_minus: np.ndarray
    E_plus: np.ndarray
    s: np.ndarray
    t: np.ndarray
    delta_rep: float
    j_eff_qq: float
    j_eff_cc: float


def polariton_table(p: JCParams, n_max: int, J: float = 0.0) -> PolaritonTable:
    """Tabulate angles, energies and hopping coefficients up to n_max."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    ns = range(n_max + 1)
    theta = np.array([mixing_angle(n, p) for n in ns])
    e_minus = np.array([polariton_energy(n, MINUS, p) for n in ns])
    e_plus = np.array([polariton_energy(n, PLUS, p) for n in ns])
    s = np.stack([hop_coeffs_qubit(n, p) for n in ns])
    t = np.stack([hop_coeffs_cavity(n, p) for n in ns])
    return PolaritonTable(
        params=p,
        n_max=n_max,
        J=J,
        theta=theta,
        E_minus=e_minus,
        E_plus=e_plus,
        s=s,
        t=t,
        delta_rep=effective_repulsion(p),
        j_eff_qq=effective_coupling(J, p, "QQ") if J > 0 else 0.0,
        j_eff_cc=effective_coupling(J, p, "CC") if J > 0 else 0.0,
    )
