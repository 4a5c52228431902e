"""Chain Hamiltonians: spectra, conservation laws, dressed-basis elements."""

import math

import numpy as np
import pytest

from jclattice.hilbert import sector_basis, site_operators
from jclattice.lattice import (
    LatticeParams,
    excitation_operator,
    lattice_hamiltonian,
    site_hamiltonian,
)
from jclattice.polariton import (
    MINUS,
    JCParams,
    mixing_angle,
    polariton_energy,
)


def make_lp(M=2, kind="QQ", J=0.1, delta=0.0, n_max=2, omega_c=5.0, g=1.0):
    jc = JCParams(omega_q=omega_c + delta, omega_c=omega_c, g=g)
    return LatticeParams(M=M, coupling_kind=kind, J=J, jc=jc, n_max=n_max)


def test_site_hamiltonian_nmax1_resonant_spectrum():
    # oracle: dense 4x4 diagonalization; at n_max=1 the |1,up> state is
    # left uncoupled by truncation and sits at omega_c + omega_q
    omega_c = 5.0
    g = 1.0
    h = site_hamiltonian(JCParams(omega_c, omega_c, g), n_max=1)
    evals = np.sort(np.linalg.eigvalsh(h.to_dense()))
    expected = np.sort([0.0, omega_c - g, omega_c + g, omega_c + omega_c])
    assert np.allclose(evals, expected, atol=1e-12)


def test_site_hamiltonian_weak_coupling_diagonal():
    # g below the sparse prune tolerance leaves only the bare diagonal
    p = JCParams(omega_q=4.2, omega_c=5.0, g=1e-16)
    h = site_hamiltonian(p, n_max=2).to_dense()
    bare = []
    for fock in range(3):
        for qubit in (0, 1):
            bare.append(fock * 5.0 + qubit * 4.2)
    assert np.allclose(h, np.diag(bare), atol=0.0)


def test_site_hamiltonian_commutes_with_local_number():
    ops = site_operators(3)
    n_local = ops["n_fock"] + ops["n_qubit"]
    h = site_hamiltonian(JCParams(5.7, 5.0, 0.8), n_max=3)
    assert h.commutator_norm(n_local) < 1e-12


def test_single_site_lattice_ignores_coupling():
    for kind in ("QQ", "CC"):
        lp = make_lp(M=1, kind=kind, J=0.7)
        h_chain = lattice_hamiltonian(lp).to_dense()
        h_site = site_hamiltonian(lp.jc, lp.n_max).to_dense()
        assert np.allclose(h_chain, h_site, atol=0.0)


def test_single_site_spectrum_matches_closed_forms():
    # full truncated-site spectrum: {0} U {E_n±, n<=n_max} U the lone
    # |n_max, up> level stranded by the Fock cutoff
    for delta in (0.0, 1.3, -0.8, 12.0):
        g, omega_c, n_max = 1.0, 5.0, 3
        p = JCParams(omega_c + delta, omega_c, g)
        h = site_hamiltonian(p, n_max)
        evals = np.sort(np.linalg.eigvalsh(h.to_dense()))
        expected = [0.0]
        for n in range(1, n_max + 1):
            expected.append(polariton_energy(n, MINUS, p))
            expected.append(polariton_energy(n, +1, p))
        expected.append(p.omega_q + n_max * p.omega_c)
        assert np.allclose(evals, np.sort(expected), atol=1e-10)


def test_decoupled_chain_sector_ground_energy():
    # J=0, M=2: ground state of the 2-excitation sector is two lower
    # polaritons, one per site
    lp = make_lp(M=2, J=0.0, delta=0.6)
    h = lattice_hamiltonian(lp)
    sb = sector_basis(2, lp.n_max, 2)
    evals = np.linalg.eigvalsh(sb.project_operator(h).to_dense())
    assert evals[0] == pytest.approx(
        2 * polariton_energy(1, MINUS, lp.jc), abs=1e-12
    )


def qq_cc_agree_at_zero_hopping(delta):
    h_qq = lattice_hamiltonian(make_lp(kind="QQ", J=0.0, delta=delta))
    h_cc = lattice_hamiltonian(make_lp(kind="CC", J=0.0, delta=delta))
    return np.allclose(h_qq.to_dense(), h_cc.to_dense(), atol=0.0)


def test_qq_cc_agree_at_zero_hopping():
    assert qq_cc_agree_at_zero_hopping(0.0)
    assert qq_cc_agree_at_zero_hopping(2.4)


def dressed_site_vector(n, species, p, n_max):
    """|n,±> as a coefficient vector over the fock-major site basis."""
    dim = 2 * (n_max + 1)
    vec = np.zeros(dim, complex)
    if n == 0:
        vec[0] = 1.0  # |0,down>
        return vec
    th = mixing_angle(n, p)
    idx_down = 2 * n  # |n, down>
    idx_up = 2 * (n - 1) + 1  # |n-1, up>
    if species == MINUS:
        vec[idx_down] = math.cos(th)
        vec[idx_up] = -math.sin(th)
    else:
        vec[idx_down] = math.sin(th)
        vec[idx_up] = math.cos(th)
    return vec


@pytest.mark.parametrize("kind", ["QQ", "CC"])
@pytest.mark.parametrize("delta", [0.0, 1.7])
def test_two_site_dressed_matrix_element(kind, delta):
    # <(2,-);(0)| H |(1,-);(1,-)> reduces to the product of two hopping
    # coefficients because the on-site parts cannot change per-site
    # excitation numbers
    from jclattice.polariton import hop_coeffs_cavity, hop_coeffs_qubit

    J = 0.37
    lp = make_lp(M=2, kind=kind, J=J, delta=delta)
    h = lattice_hamiltonian(lp)
    bra = np.kron(
        dressed_site_vector(2, MINUS, lp.jc, lp.n_max),
        dressed_site_vector(0, MINUS, lp.jc, lp.n_max),
    )
    ket = np.kron(
        dressed_site_vector(1, MINUS, lp.jc, lp.n_max),
        dressed_site_vector(1, MINUS, lp.jc, lp.n_max),
    )
    elem = np.vdot(bra, h.apply(ket))
    coeffs = hop_coeffs_qubit if kind == "QQ" else hop_coeffs_cavity
    expected = J * coeffs(1, lp.jc)[0, 0] * coeffs(0, lp.jc)[0, 0]
    assert elem.real == pytest.approx(expected, abs=1e-12)
    assert abs(elem.imag) < 1e-14


def test_excitation_operator_site_and_total():
    lp = make_lp(M=3, J=0.2)
    n1 = excitation_operator(lp, 1)
    dense = n1.to_dense()
    assert np.allclose(dense, np.diag(np.diag(dense)))
    total = excitation_operator(lp)
    acc = excitation_operator(lp, 0).to_dense()
    for j in (1, 2):
        acc = acc + excitation_operator(lp, j).to_dense()
    assert np.allclose(total.to_dense(), acc, atol=0.0)
    with pytest.raises(ValueError):
        excitation_operator(lp, 3)
    with pytest.raises(ValueError):
        excitation_operator(lp, -1)


def test_dressed_state_local_excitation():
    lp = make_lp(M=2, delta=0.9)
    n0 = excitation_operator(lp, 0)
    vec = np.kron(
        dressed_site_vector(1, MINUS, lp.jc, lp.n_max),
        dressed_site_vector(0, MINUS, lp.jc, lp.n_max),
    )
    assert n0.expectation(vec).real == pytest.approx(1.0, abs=1e-14)


def test_total_excitation_on_sector_states():
    lp = make_lp(M=2, n_max=2)
    total = excitation_operator(lp)
    for n_total in (1, 2, 3):
        sb = sector_basis(2, 2, n_total)
        for k in range(sb.dim):
            vec = np.zeros(sb.full_dim, complex)
            vec[sb.full_indices[k]] = 1.0
            assert total.expectation(vec).real == pytest.approx(n_total, abs=1e-14)


@pytest.mark.parametrize("kind", ["QQ", "CC"])
def test_hamiltonian_conserves_total_excitation(kind):
    rng = np.random.default_rng(11)
    for m in (2, 3, 5):
        delta = rng.uniform(-2, 8)
        j = rng.uniform(0.01, 1.0)
        g = rng.uniform(0.5, 2.0)
        lp = make_lp(M=m, kind=kind, J=j, delta=delta, n_max=2, g=g)
        h = lattice_hamiltonian(lp)
        n_tot = excitation_operator(lp)
        assert h.commutator_norm(n_tot) < 1e-12
        assert (h - h.dagger()).max_abs() <= 1e-12


def test_lattice_params_validation():
    jc = JCParams(5.0, 5.0, 1.0)
    with pytest.raises(ValueError):
        LatticeParams(M=0, coupling_kind="QQ", J=0.1, jc=jc, n_max=2)
    with pytest.raises(ValueError):
        LatticeParams(M=2, coupling_kind="ZZ", J=0.1, jc=jc, n_max=2)
    with pytest.raises(ValueError):
        LatticeParams(M=2, coupling_kind="QQ", J=-0.1, jc=jc, n_max=2)
    with pytest.raises(ValueError):
        LatticeParams(M=2, coupling_kind="QQ", J=0.1, jc=jc, n_max=0)
