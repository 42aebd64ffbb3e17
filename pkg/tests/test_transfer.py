import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from solcqed.core import (
    DegenerateParametersError,
    InternalConsistencyError,
    ReducedParams,
    State2,
)
from solcqed import transfer as tr

from conftest import grid_params

angles = st.floats(1e-3, 4 * math.pi)
signed = st.floats(-4 * math.pi, 4 * math.pi)


def amplitude_ode(eta, delta, n_segments, c0=(1.0, 0.0)):
    """Integrate dc_e/dt = -i (eta/2) s(t) e^{-i delta t} c_g and its partner, tau = 1."""
    y = np.array(c0, dtype=complex)
    for m in range(1, n_segments + 1):
        s = 1.0 if m % 2 else -1.0

        def rhs(t, c):
            return [-0.5j * eta * s * np.exp(-1j * delta * t) * c[1],
                    -0.5j * eta * s * np.exp(1j * delta * t) * c[0]]

        sol = solve_ivp(rhs, (m - 1, m), y, method="DOP853", rtol=1e-12, atol=1e-13)
        y = sol.y[:, -1]
    return y


# -- segment and cell matrices ------------------------------------------------

def test_segment_resonant_pi_pulse():
    u = tr.segment_unitary(1, ReducedParams(math.pi, 0.0))
    assert abs(u.u11) < 1e-15
    assert u.u12 == pytest.approx(-1j, abs=1e-15)


def test_segment_zero_coupling():
    u = tr.segment_unitary(1, ReducedParams(0.0, 2 * math.pi))
    assert u.u11 == pytest.approx(1.0, abs=1e-14)
    assert abs(u.u12) < 1e-15


def test_segment_index_changes_offdiagonal_phase():
    r = ReducedParams(1.0, 0.7)
    u1, u2 = tr.segment_unitary(1, r), tr.segment_unitary(2, r)
    assert u2.u12 / u1.u12 == pytest.approx(-cmath.exp(0.7j), abs=1e-14)
    assert u2.u11 == u1.u11


def test_segment_identity_at_origin():
    u = tr.segment_unitary(3, ReducedParams(0.0, 0.0))
    assert (u.u11, u.u12, u.u21, u.u22) == (1, 0, 0, 1)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_unit_cell_on_resonance_is_identity(k):
    t = tr.unit_cell(k, ReducedParams(1.7, 0.0))
    assert t.unitarity_defect() < 1e-14
    assert abs(t.u11 - 1) < 1e-14 and abs(t.u12) < 1e-14


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_unit_cell_matches_closed_form(k):
    r = ReducedParams(1.0, 1.0)
    a, b = tr.unit_cell(k, r), tr.unit_cell_closed(k, r)
    for x, y in zip((a.u11, a.u12, a.u21, a.u22), (b.u11, b.u12, b.u21, b.u22)):
        assert abs(x - y) < 1e-12


def test_unit_cell_k_dependence_is_a_phase():
    r = ReducedParams(1.3, 0.4)
    t1, t3 = tr.unit_cell(1, r), tr.unit_cell(3, r)
    assert abs(t3.u11 - t1.u11) < 1e-14
    assert abs(t3.u12 - t1.u12 * cmath.exp(4j * 0.4)) < 1e-14
    assert abs(t3.u21 - t1.u21 * cmath.exp(-4j * 0.4)) < 1e-14


def test_reduced_cell_limits():
    t = tr.reduced_cell(ReducedParams(2.1, 0.0))
    assert abs(t.u11 - 1) < 1e-15 and abs(t.u12) < 1e-15
    d = 0.9
    t = tr.reduced_cell(ReducedParams(0.0, d))
    assert abs(t.u11 - (1 - 2 * math.sin(d / 2) ** 2 - 1j * math.sin(d))) < 1e-15
    assert abs(t.u11 - cmath.exp(-1j * d)) < 1e-15
    assert abs(t.u12) == 0


@pytest.mark.parametrize("k", range(1, 6))
def test_reduced_cell_moduli_match_unit_cell(k):
    r = ReducedParams(1.0, 1.0)
    a, b = tr.reduced_cell(r), tr.unit_cell(k, r)
    for x, y in zip((a.u11, a.u12, a.u21, a.u22), (b.u11, b.u12, b.u21, b.u22)):
        assert abs(abs(x) - abs(y)) < 1e-14


def test_matrices_unitary_and_unimodular_bulk():
    rng = np.random.default_rng(11)
    r = ReducedParams(rng.uniform(0, 4 * math.pi, 10_000), rng.uniform(0, 4 * math.pi, 10_000))
    for u in (tr.segment_unitary(1, r), tr.segment_unitary(4, r), tr.unit_cell(3, r),
              tr.reduced_cell(r), tr.reduced_cell_power(5, r)):
        assert u.unitarity_defect() < 1e-12
        assert np.max(np.abs(u.det() - 1)) < 1e-12


def test_as_array_shape():
    r = ReducedParams(np.ones(4), np.zeros(4))
    assert tr.segment_unitary(1, r).as_array().shape == (4, 2, 2)


# -- Chebyshev angle and ratio --------------------------------------------------

def test_cell_angle_on_resonance_is_degenerate():
    a = tr.cell_angle(ReducedParams(1.0, 0.0))
    assert a.xi == 0.0 and a.cos_xi == 1.0 and a.degenerate


def test_cell_angle_on_branch_circle():
    th = math.pi / 10
    a = tr.cell_angle(ReducedParams(math.pi * math.sin(th), math.pi * math.cos(th)))
    # substitute phi = pi, sin^2(phi/2) = 1: cos xi = 1 - 2 cos^2(pi/10)
    assert a.cos_xi == pytest.approx(-0.8090169943749472, abs=1e-15)
    assert a.cos_xi**2 + a.sin_xi**2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("d", [0.3, 2.0, 3.0])
def test_cell_angle_without_coupling_equals_detuning(d):
    a = tr.cell_angle(ReducedParams(0.0, d))
    assert a.xi == pytest.approx(d, abs=1e-14)
    assert a.cos_xi == pytest.approx(math.cos(d), abs=1e-15)


def test_cell_angle_rejects_origin():
    with pytest.raises(DegenerateParametersError):
        tr.cell_angle(ReducedParams(0.0, 0.0))


def test_chebyshev_ratio_examples():
    a = tr.cell_angle(ReducedParams(1.1, 0.8))
    assert tr.chebyshev_ratio(1, a) == pytest.approx(1.0, abs=1e-15)
    assert tr.chebyshev_ratio(2, a) == pytest.approx(2 * a.cos_xi, abs=1e-14)
    assert tr.chebyshev_ratio(0, a) == 0.0
    assert tr.chebyshev_ratio(-1, a) == pytest.approx(-1.0)
    flagged = tr.cell_angle(ReducedParams(1.0, 0.0))
    assert tr.chebyshev_ratio(5, flagged) == 5.0


def test_chebyshev_ratio_near_pi_degeneracy():
    # xi = pi: sin(k xi)/sin xi -> k (-1)^(k-1)
    angle = tr._angle_from_weight(1.0)
    assert angle.degenerate
    assert [tr.chebyshev_ratio(k, angle) for k in (1, 2, 3, 4)] == [1, -2, 3, -4]


@given(st.floats(1e-9, math.pi - 1e-9), st.integers(1, 20))
def test_chebyshev_ratio_is_u_polynomial(xi, k):
    angle = tr._angle_from_weight(math.sin(xi / 2) ** 2)
    brute = sum(math.cos((k - 1 - 2 * j) * angle.xi) for j in range(k))
    assert tr.chebyshev_ratio(k, angle) == pytest.approx(brute, abs=1e-9 * k**2)


# -- evolution and emission ---------------------------------------------------

def test_evolve_resonant_pi_pulse():
    s = tr.evolve_sequential(ReducedParams(math.pi, 0.0, 1), State2.excited())
    assert s.ground_probability == pytest.approx(1.0, abs=1e-15)


def test_evolve_even_on_resonance_returns():
    s = tr.evolve_sequential(ReducedParams(2.3, 0.0, 2))
    assert abs(s.c_e - 1) < 1e-14 and abs(s.c_g) < 1e-15


def test_evolve_matches_closed_form():
    r = ReducedParams(1.3, 0.9, 4)
    assert tr.evolve_sequential(r).ground_probability == pytest.approx(
        tr.emission_closed(r), abs=1e-12)


def test_norm_conservation_long_sequences():
    rng = np.random.default_rng(3)
    eta, delta = rng.uniform(0, 4 * math.pi, 500), rng.uniform(-4 * math.pi, 4 * math.pi, 500)
    for n in (1, 7, 16, 33, 64):
        s = tr.evolve_sequential(ReducedParams(eta, delta, n))
        assert np.max(np.abs(np.abs(s.c_e) ** 2 + np.abs(s.c_g) ** 2 - 1)) < 1e-10


@pytest.mark.parametrize("eta,delta,n", [(1.3, 0.9, 1), (2.0, -1.1, 4), (0.7, 3.0, 7), (5.0, 2.2, 10)])
def test_emission_direct_matches_amplitude_ode(eta, delta, n):
    c = amplitude_ode(eta, delta, n)
    assert tr.emission_direct(ReducedParams(eta, delta, n)) == pytest.approx(
        abs(c[1]) ** 2, abs=1e-9)


@pytest.mark.parametrize("eta,delta,n", [(1.3, 0.9, 3), (2.0, 1.7, 4)])
def test_segment_product_is_amplitude_ode_with_reversed_detuning(eta, delta, n):
    # the segment matrices propagate the amplitude equations with delta -> -delta
    c = amplitude_ode(eta, -delta, n)
    s = tr.evolve_sequential(ReducedParams(eta, delta, n))
    assert abs(s.c_e - c[0]) < 1e-9 and abs(s.c_g - c[1]) < 1e-9


def test_emission_direct_values():
    assert tr.emission_direct(ReducedParams(math.pi, 0.0, 1)) == pytest.approx(1.0, abs=1e-15)
    eta = np.linspace(0.05, 4 * math.pi, 40)
    for n in (2, 4, 6):
        assert np.max(tr.emission_direct(ReducedParams(eta, 0.0, n))) < 1e-15
    odd = [tr.emission_direct(ReducedParams(eta, 0.0, n)) for n in (3, 5, 7)]
    for p in odd:
        assert np.max(np.abs(p - np.sin(eta / 2) ** 2)) < 1e-13


def test_emission_closed_two_segments_against_formula():
    eta, delta = 2.0, 1.0
    phi = math.hypot(eta, delta)
    expected = 4 * eta**2 * delta**2 / phi**4 * math.sin(phi / 2) ** 4
    r = ReducedParams(eta, delta, 2)
    assert tr.emission_closed(r) == pytest.approx(expected, abs=1e-15)
    assert tr.emission_direct(r) == pytest.approx(expected, abs=1e-12)


def test_emission_closed_phase_matched_five():
    th = math.pi / 10
    r = ReducedParams(math.pi * math.sin(th), math.pi * math.cos(th), 5)
    assert tr.emission_closed(r) == pytest.approx(1.0, abs=1e-12)


def test_emission_closed_origin():
    assert tr.emission_closed(ReducedParams(0.0, 0.0, 3)) == 0.0


@settings(max_examples=300)
@given(st.integers(1, 16), angles, signed)
def test_emission_closed_matches_direct(n, eta, delta):
    r = ReducedParams(eta, delta, n)
    assert tr.emission_closed(r) == pytest.approx(tr.emission_direct(r), abs=1e-10)


def test_emission_closed_near_degenerate_xi():
    # |sin xi| straddling the 1e-6 switch: both branches must agree with the product
    eta = 2.0
    for d in (1e-8, 5e-7, 1e-6, 2e-6, 1e-5):
        for n in (2, 3, 8, 15):
            r = ReducedParams(eta, d, n)
            assert tr.emission_closed(r) == pytest.approx(tr.emission_direct(r), abs=1e-12)


def test_out_of_range_probability_is_internal_error():
    with pytest.raises(InternalConsistencyError):
        tr._checked_probability(np.array([0.2, 1.01]))
    assert tr._checked_probability(1 + 5e-10) == 1.0


@settings(max_examples=200)
@given(st.integers(1, 12), angles, signed)
def test_parity(n, eta, delta):
    p = tr.emission_direct(ReducedParams(eta, delta, n))
    assert tr.emission_direct(ReducedParams(eta, -delta, n)) == pytest.approx(p, abs=1e-12)
    assert tr.emission_direct(ReducedParams(-eta, delta, n)) == pytest.approx(p, abs=1e-12)


@given(st.integers(1, 16), st.floats(0, 20), st.floats(-20, 20))
def test_bounds(n, eta, delta):
    r = ReducedParams(eta, delta, n)
    for p in (tr.emission_direct(r), tr.emission_closed(r)):
        assert 0.0 <= p <= 1.0


# -- tabulated polynomials -----------------------------------------------------

def _x(eta, delta):
    phi = math.hypot(eta, delta)
    return (delta / phi) ** 2 * math.sin(phi / 2) ** 2


def test_table_three_and_four_rows():
    eta, delta = 1.7, 0.6
    phi = math.hypot(eta, delta)
    p1 = (eta / phi) ** 2 * math.sin(phi / 2) ** 2
    p2 = 4 * eta**2 * delta**2 / phi**4 * math.sin(phi / 2) ** 4
    x = _x(eta, delta)
    r = ReducedParams(eta, delta)
    assert tr.table_polynomial(3, r) == pytest.approx(p1 * (1 - 4 * x) ** 2, rel=1e-14)
    assert tr.table_polynomial(4, r) == pytest.approx(p2 * (2 - 4 * x) ** 2, rel=1e-14)


def test_table_six_matches_direct():
    r = ReducedParams(2.0, 1.5, 6)
    assert tr.table_polynomial(6, r) == pytest.approx(tr.emission_direct(r), abs=1e-10)


@pytest.mark.parametrize("n", [0, 9])
def test_table_unsupported(n):
    with pytest.raises(tr.UnsupportedSegmentCount):
        tr.table_polynomial(n, ReducedParams(1.0, 1.0))


def test_misprinted_odd_form_disagrees(acceptance_grid):
    # bracket term 4 delta^2 / phi (instead of phi^2) breaks agreement with the product
    r = grid_params(acceptance_grid, 5)
    phi, s = r.phi, np.sin(r.phi / 2)
    angle = tr._angle_from_weight((r.delta / phi * s) ** 2)
    bad = (r.eta / phi * s) ** 2 * (
        (1 - 4 * r.delta**2 / phi * s**2) * tr.chebyshev_ratio(2, angle)
        - tr.chebyshev_ratio(1, angle)) ** 2
    assert np.max(np.abs(bad - tr.emission_direct(r))) > 1.0
    assert np.max(np.abs(tr.emission_closed(r) - tr.emission_direct(r))) < 1e-12


# -- phase-factor elimination ---------------------------------------------------

@pytest.mark.parametrize("k", [1, 2, 3, 6])
def test_phase_stripped_power_keeps_ground_amplitude(k):
    rng = np.random.default_rng(k)
    r = ReducedParams(rng.uniform(0, 4 * math.pi, 500), rng.uniform(0, 4 * math.pi, 500))
    full = tr.unit_cell(1, r)
    for j in range(2, k + 1):
        full = tr.unit_cell(j, r) @ full
    stripped = tr.reduced_cell_power(k, r)
    assert np.max(np.abs(np.abs(full.u21) - np.abs(stripped.u21))) < 1e-12


def test_reduced_cell_power_matches_repeated_product():
    r = ReducedParams(1.2, 2.5)
    cell = tr.reduced_cell(r)
    acc = tr.Unitary2.identity()
    for k in range(0, 7):
        pw = tr.reduced_cell_power(k, r)
        for x, y in zip((acc.u11, acc.u12, acc.u21, acc.u22), (pw.u11, pw.u12, pw.u21, pw.u22)):
            assert abs(x - y) < 1e-13
        acc = cell @ acc
