"""Closed-form polariton analytics against independent exact values."""

import math

import numpy as np
import pytest

from jclattice.errors import NoCrossingError
from jclattice.polariton import (
    MINUS,
    PLUS,
    JCParams,
    crossing_detuning,
    effective_coupling,
    effective_repulsion,
    hop_coeffs_cavity,
    hop_coeffs_qubit,
    mixing_angle,
    polariton_energy,
    polariton_table,
    rwa_phase_frequency,
)

G = 1.0


def params(delta=0.0, omega_c=5.0, g=G):
    return JCParams(omega_q=omega_c + delta, omega_c=omega_c, g=g)


def test_ground_energy_zero():
    for delta in (-2.0, 0.0, 3.7):
        assert polariton_energy(0, MINUS, params(delta)) == 0.0
        assert polariton_energy(0, PLUS, params(delta)) == 0.0


def test_resonant_vacuum_rabi_splitting():
    p = params(0.0)
    assert polariton_energy(1, MINUS, p) == pytest.approx(p.omega_c - G, abs=1e-14)
    assert polariton_energy(1, PLUS, p) == pytest.approx(p.omega_c + G, abs=1e-14)


def test_second_manifold_resonant():
    p = params(0.0)
    assert polariton_energy(2, MINUS, p) == pytest.approx(
        2 * p.omega_c - math.sqrt(2) * G, abs=1e-14
    )


def test_energy_rejects_negative_n():
    with pytest.raises(ValueError):
        polariton_energy(-1, MINUS, params())
    with pytest.raises(ValueError):
        polariton_energy(1, 0, params())


def test_jcparams_invariants():
    with pytest.raises(ValueError):
        JCParams(1.0, 1.0, 0.0)
    p = params(2.5)
    assert p.delta == pytest.approx(2.5)
    assert p.with_delta(-1.0).delta == pytest.approx(-1.0)
    assert p.with_delta(-1.0).omega_c == p.omega_c


def test_mixing_angle_branches():
    assert mixing_angle(0, params(0.0)) == 0.0
    assert mixing_angle(1, params(0.0)) == pytest.approx(math.pi / 4, abs=1e-14)
    assert mixing_angle(1, params(1e6)) == pytest.approx(0.0, abs=1e-5)
    # negative detuning lands on the (pi/4, pi/2) branch
    th = mixing_angle(1, params(-2.0))
    assert math.pi / 4 < th < math.pi / 2
    # half-angle identity: tan(2 theta) = g sqrt(n) / (delta/2)
    for n in (1, 2, 3):
        for delta in (0.5, 4.0):
            th = mixing_angle(n, params(delta))
            assert math.tan(2 * th) == pytest.approx(
                G * math.sqrt(n) / (delta / 2), rel=1e-12
            )


def test_qubit_hop_coeffs_resonant():
    p = params(0.0)
    s0 = hop_coeffs_qubit(0, p)
    s1 = hop_coeffs_qubit(1, p)
    # theta_0 = 0, theta_1 = theta_2 = pi/4
    assert s0[0, 0] == pytest.approx(-1 / math.sqrt(2), abs=1e-14)
    assert s0[0, 1] == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert s0[1, 0] == pytest.approx(0.0, abs=1e-14)
    assert s1[0, 0] == pytest.approx(-0.5, abs=1e-14)
    assert s1[1, 1] == pytest.approx(0.5, abs=1e-14)


def test_qubit_hop_coeffs_dispersive_limit():
    p = params(1e8)
    for n in (0, 1, 2):
        s = hop_coeffs_qubit(n, p)
        assert s[0, 1] == pytest.approx(1.0, abs=1e-7)
        assert abs(s[0, 0]) < 1e-7
        assert abs(s[1, 0]) < 1e-7


def test_cavity_hop_coeffs_resonant():
    p = params(0.0)
    t0 = hop_coeffs_cavity(0, p)
    t1 = hop_coeffs_cavity(1, p)
    assert t0[0, 0] == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert t1[0, 0] == pytest.approx((math.sqrt(2) + 1) / 2, abs=1e-14)
    assert t1[0, 0] == pytest.approx(1.20711, abs=5e-6)


def test_cavity_hop_coeffs_dispersive_limit():
    p = params(1e8)
    for n in (0, 1, 3):
        t = hop_coeffs_cavity(n, p)
        assert t[0, 0] == pytest.approx(math.sqrt(n + 1), abs=1e-6)


def test_effective_repulsion_values():
    # resonance: (2 - sqrt(2)) g
    assert effective_repulsion(params(0.0)) == pytest.approx(
        (2 - math.sqrt(2)) * G, abs=1e-14
    )
    # delta = 2g: -sqrt(3) + 2 sqrt(2) - 1, in units of g
    assert effective_repulsion(params(2.0)) == pytest.approx(
        (-math.sqrt(3) + 2 * math.sqrt(2) - 1) * G, abs=1e-14
    )
    assert effective_repulsion(params(2.0)) == pytest.approx(0.09637, abs=1e-5)


def test_effective_repulsion_asymptotics():
    delta = 30.0
    exact = effective_repulsion(params(delta))
    assert exact == pytest.approx(2 * G**4 / delta**3, rel=0.15)


def test_effective_repulsion_matches_spectral_combination():
    for delta in (-1.0, 0.0, 2.0, 17.3):
        p = params(delta)
        spectral = polariton_energy(2, MINUS, p) - 2 * polariton_energy(1, MINUS, p)
        assert effective_repulsion(p) == pytest.approx(spectral, abs=1e-12)


def test_effective_coupling_resonant():
    p = params(0.0)
    assert effective_coupling(1.0, p, "QQ") == pytest.approx(
        1 / (2 * math.sqrt(2)), abs=1e-14
    )
    assert effective_coupling(1.0, p, "CC") == pytest.approx(
        (math.sqrt(2) + 1) / (2 * math.sqrt(2)), abs=1e-14
    )
    assert effective_coupling(1.0, p, "CC") == pytest.approx(0.85355, abs=5e-6)
    assert effective_coupling(2.0, p, "QQ") == pytest.approx(
        2 * effective_coupling(1.0, p, "QQ"), abs=1e-14
    )


def test_effective_coupling_dispersive_scaling():
    delta = 300.0
    got = effective_coupling(1.0, params(delta), "QQ")
    assert got == pytest.approx(math.sqrt(2) * G**2 / delta**2, rel=2e-3)


def test_effective_coupling_validation():
    with pytest.raises(ValueError):
        effective_coupling(1.0, params(), "XY")
    with pytest.raises(ValueError):
        effective_coupling(-1.0, params(), "QQ")


def test_crossing_detuning_qq_asymptote():
    # dispersive estimate: delta_rep = 2g^4/D^3 meets j_eff = sqrt(2) J g^2/D^2
    # at D* = sqrt(2) g^2 / J
    J = 0.1
    got = crossing_detuning(J, params(), "QQ")
    assert got == pytest.approx(math.sqrt(2) * G**2 / J, rel=0.10)
    # the crossing really is a crossing
    p_star = params(got)
    assert effective_repulsion(p_star) == pytest.approx(
        effective_coupling(J, p_star, "QQ"), rel=1e-6
    )


def test_crossing_detuning_cc_below_qq():
    for J in (0.05, 0.1, 0.3):
        qq = crossing_detuning(J, params(), "QQ")
        cc = crossing_detuning(J, params(), "CC")
        assert cc < qq


def test_crossing_detuning_already_delocalized():
    # strong J: effective coupling exceeds repulsion at resonance
    assert crossing_detuning(2.0, params(), "QQ") == 0.0


def test_crossing_detuning_no_crossing():
    # tiny J pushes the crossing far beyond the default bracket
    with pytest.raises(NoCrossingError) as exc:
        crossing_detuning(1e-4, params(), "QQ")
    assert exc.value.f_lo > 0
    assert exc.value.f_hi > 0


def test_rwa_phase_frequencies():
    p = params(0.0)
    assert rwa_phase_frequency(1, 1, MINUS, MINUS, PLUS, PLUS, p) == pytest.approx(
        0.0, abs=1e-14
    )
    # interconversion term detuned by the vacuum Rabi splitting
    assert rwa_phase_frequency(0, 0, MINUS, MINUS, MINUS, PLUS, p) == pytest.approx(
        -2 * G, abs=1e-14
    )
    # species-mixing frequencies grow with detuning
    f1 = abs(rwa_phase_frequency(0, 0, MINUS, MINUS, MINUS, PLUS, params(50.0)))
    f2 = abs(rwa_phase_frequency(0, 0, MINUS, MINUS, MINUS, PLUS, params(100.0)))
    assert f2 > f1 > 10 * G


def test_polariton_table_invariants():
    for delta in (0.0, 1.5, 20.0):
        tab = polariton_table(params(delta), n_max=4, J=0.2)
        assert np.all(tab.E_plus[1:] >= tab.E_minus[1:])
        assert np.all(tab.theta >= 0.0)
        assert np.all(tab.theta <= math.pi / 4 + 1e-15)
        # orthonormal 2x2 dressed-state map for each manifold
        for th in tab.theta[1:]:
            u = np.array(
                [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
            )
            assert np.allclose(u.T @ u, np.eye(2), atol=1e-15)
        assert tab.delta_rep == pytest.approx(effective_repulsion(params(delta)))
        assert tab.j_eff_qq == pytest.approx(
            effective_coupling(0.2, params(delta), "QQ")
        )


def test_resonant_equal_weight_superpositions():
    tab = polariton_table(params(0.0), n_max=3)
    for th in tab.theta[1:]:
        assert abs(math.cos(th)) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
        assert abs(math.sin(th)) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
