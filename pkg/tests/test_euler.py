import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statfv import GasParams
from statfv.errors import NonPhysicalState
from statfv import euler

from conftest import random_primitive_states

GAS = GasParams()

physical_state = st.tuples(
    st.floats(0.05, 20.0),     # rho
    st.floats(-5.0, 5.0),      # wx
    st.floats(-5.0, 5.0),      # wy
    st.floats(0.01, 50.0),     # p
)


def test_gamma_must_exceed_one():
    with pytest.raises(ValueError):
        GasParams(gamma=1.0)


def test_to_conserved_rest_state():
    u = euler.to_conserved(np.array([1.0, 0.0, 0.0, 1.0]), GAS)
    # E = p/(gamma-1) = 2.5 up to the rounding of gamma-1 itself
    assert np.allclose(u, [1.0, 0.0, 0.0, 2.5], rtol=1e-15, atol=0)


def test_to_conserved_shear_states():
    # the two states of the shear-layer datum; E = p/(gamma-1) + rho|w|^2/2
    left = euler.to_conserved(np.array([2.0, -0.5, 0.0, 2.5]), GAS)
    assert np.allclose(left, [2.0, -1.0, 0.0, 6.5], rtol=1e-15, atol=0)
    right = euler.to_conserved(np.array([1.0, 0.5, 0.0, 2.5]), GAS)
    assert np.allclose(right, [1.0, 0.5, 0.0, 6.375], rtol=1e-15, atol=0)


def test_to_primitive_examples():
    q = euler.to_primitive(np.array([1.0, 0.0, 0.0, 2.5]), GAS)
    assert np.allclose(q, [1.0, 0.0, 0.0, 1.0], rtol=1e-15, atol=0)
    q = euler.to_primitive(np.array([2.0, -1.0, 0.0, 6.5]), GAS)
    assert np.allclose(q, [2.0, -0.5, 0.0, 2.5], rtol=1e-15)


def test_to_primitive_rejects_negative_energy():
    with pytest.raises(NonPhysicalState):
        euler.to_primitive(np.array([1.0, 0.0, 0.0, -1.0]), GAS)
    with pytest.raises(NonPhysicalState):
        euler.to_primitive(np.array([-1.0, 0.0, 0.0, 1.0]), GAS)


def test_round_trip_bulk():
    rng = np.random.default_rng(1)
    q = random_primitive_states(rng, 10_000)
    back = euler.to_primitive(euler.to_conserved(q, GAS), GAS)
    assert np.allclose(back, q, rtol=1e-13, atol=0)


@given(physical_state)
@settings(max_examples=200, deadline=None)
def test_round_trip_property(state):
    q = np.array(state)
    back = euler.to_primitive(euler.to_conserved(q, GAS), GAS)
    assert np.allclose(back, q, rtol=1e-12, atol=1e-13)


def test_flux_rest_state():
    u = euler.to_conserved(np.array([1.0, 0.0, 0.0, 1.0]), GAS)
    f = euler.physical_flux(u, 0, GAS)
    assert np.allclose(f, [0.0, 1.0, 0.0, 0.0], atol=1e-15)


def test_flux_shear_left_state():
    u = np.array([2.0, -1.0, 0.0, 6.5])
    f = euler.physical_flux(u, 0, GAS)
    # rho*wx^2 + p = 0.5 + 2.5, (E+p)*wx = 9 * (-0.5)
    assert np.allclose(f, [-1.0, 3.0, 0.0, -4.5], rtol=1e-15, atol=1e-15)


@given(physical_state)
@settings(max_examples=100, deadline=None)
def test_flux_axis_symmetry(state):
    rho, wx, wy, p = state
    u = euler.to_conserved(np.array([rho, wx, wy, p]), GAS)
    swapped = euler.to_conserved(np.array([rho, wy, wx, p]), GAS)
    fy = euler.physical_flux(u, 1, GAS)
    fx = euler.physical_flux(swapped, 0, GAS)
    # y-flux of u equals the x-flux of the velocity-swapped state, with
    # the momentum components exchanged
    assert np.allclose(fy[[0, 2, 1, 3]], fx, rtol=1e-14, atol=1e-14)


def test_max_wave_speed_values():
    u = euler.to_conserved(np.array([1.0, 0.0, 0.0, 1.0]), GAS)
    assert np.isclose(euler.max_wave_speed(u, 0, GAS), np.sqrt(1.4), rtol=1e-15)
    u = np.array([2.0, -1.0, 0.0, 6.5])
    assert np.isclose(euler.max_wave_speed(u, 0, GAS), 0.5 + np.sqrt(1.75), rtol=1e-14)


@given(physical_state)
@settings(max_examples=100, deadline=None)
def test_wave_speed_dominates_velocity(state):
    q = np.array(state)
    u = euler.to_conserved(q, GAS)
    assert euler.max_wave_speed(u, 0, GAS) >= abs(q[1])
    assert euler.max_wave_speed(u, 1, GAS) >= abs(q[2])


def test_wave_speed_scale_invariance():
    q = np.array([1.0, 0.3, -0.2, 2.0])
    u = euler.to_conserved(q, GAS)
    q4 = np.array([4.0, 0.3, -0.2, 8.0])
    u4 = euler.to_conserved(q4, GAS)
    assert np.isclose(euler.max_wave_speed(u, 0, GAS),
                      euler.max_wave_speed(u4, 0, GAS), rtol=1e-14)


def test_entropy_reference_zero():
    u = euler.to_conserved(np.array([1.0, 0.2, -0.1, 1.0]), GAS)
    # p = rho = 1 makes log(p/rho^gamma) = 0
    assert abs(euler.entropy(u, GAS)) < 1e-14


def test_entropy_isentropic_state_is_uniform():
    rng = np.random.default_rng(2)
    rho = 0.5 + rng.random(50)
    s0 = 1.3
    p = s0 * rho ** GAS.gamma
    q = np.stack([rho, np.zeros(50), np.zeros(50), p])
    eta = euler.entropy(euler.to_conserved(q, GAS), GAS)
    assert np.allclose(eta / rho, eta[0] / rho[0], rtol=1e-12)


def test_entropy_midpoint_convexity():
    rng = np.random.default_rng(3)
    qa = random_primitive_states(rng, 500)
    qb = random_primitive_states(rng, 500)
    ua = euler.to_conserved(qa, GAS)
    ub = euler.to_conserved(qb, GAS)
    mid = 0.5 * (ua + ub)
    lhs = euler.entropy(mid, GAS)
    rhs = 0.5 * (euler.entropy(ua, GAS) + euler.entropy(ub, GAS))
    assert np.all(lhs <= rhs + 1e-10)
