import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ksflow.errors import DegenerateFiber, ZeroBasePoint
from ksflow.quat_hopf import (
    I0,
    I1,
    I2,
    I3,
    Quaternion,
    bilinear_constraint,
    circle_act,
    fiber_average_inverse_square,
    hopf,
    hopf_distance,
    ks_lift,
    ks_matrix,
    ks_project,
    qmul,
    re_product_identity_residual,
    section,
)

# |K(z)| squares entries twice, so keep them clear of the underflow range
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False).filter(
    lambda v: v == 0 or abs(v) > 1e-60)
vec4 = arrays(np.float64, 4, elements=finite)
vec3 = arrays(np.float64, 3, elements=finite)


def test_basis_products():
    assert I1 * I2 == -I3
    for e in (I1, I2, I3):
        assert e * e == -I0
    assert I2 * I3 == -I1
    assert I3 * I1 == -I2


def test_product_matches_matrix_product():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = Quaternion.from_array(rng.normal(size=4))
        b = Quaternion.from_array(rng.normal(size=4))
        m = a.to_matrix() @ b.to_matrix()
        assert np.allclose((a * b).to_matrix(), m, atol=1e-13)
        assert np.allclose(Quaternion.from_matrix(m).to_array(), (a * b).to_array())


def test_hopf_examples():
    assert np.allclose(hopf([1, 0, 0, 0]), [1, 0, 0])
    assert np.allclose(hopf([0, 1, 0, 0]), [-1, 0, 0])
    assert np.allclose(hopf([1, 1, 0, 0]) / 2, [0, 1, 0])
    assert np.allclose(hopf([1, 0, 1, 0]) / 2, [0, 0, 1])


def test_hopf_against_matrix_oracle():
    rng = np.random.default_rng(1)
    for z in rng.normal(size=(50, 4)):
        w1 = complex(z[0], z[3])
        w2 = complex(z[2], z[1])
        prod = w1 * w2.conjugate()
        expected = [abs(w1) ** 2 - abs(w2) ** 2, -2 * prod.imag, 2 * prod.real]
        # K = (|w1|^2 - |w2|^2, 2 Im(conj(w1) w2), 2 Re(w1 conj(w2)))
        assert np.allclose(hopf(z), expected, atol=1e-12)


def test_quaternion_input_is_read_in_algebra_coordinates():
    q = Quaternion(0.3, -1.2, 0.5, 2.0)
    assert np.allclose(hopf(q), hopf(q.to_ks()))
    assert np.allclose(Quaternion.from_ks(q.to_ks()).to_array(), q.to_array())


@given(vec4)
def test_hopf_norm_property(z):
    r2 = z @ z
    assert abs(np.linalg.norm(hopf(z)) - r2) <= 8 * np.spacing(max(r2, 1e-300)) + 1e-300


@given(vec4, vec4)
def test_re_product_property(a, b):
    scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1e-300)
    assert abs(re_product_identity_residual(a, b)) <= 1e-13 * scale + 1e-300


@given(vec4, st.floats(0, 2 * np.pi))
def test_circle_action_preserves_hopf(z, theta):
    assert np.allclose(hopf(circle_act(theta, z)), hopf(z), atol=1e-11 * (1 + z @ z))


def test_circle_action_is_left_multiplication_by_exponential():
    rng = np.random.default_rng(2)
    z = rng.normal(size=4)
    theta = 0.7
    e = Quaternion(np.cos(theta), np.sin(theta), 0.0, 0.0)
    expected = (e * Quaternion.from_ks(z)).to_ks()
    assert np.allclose(circle_act(theta, z), expected)


def test_ks_matrix_properties():
    rng = np.random.default_rng(3)
    for z in rng.normal(size=(20, 4)):
        L = ks_matrix(z)
        assert np.allclose(L @ z, hopf(z))
        assert np.allclose(L @ L.T, (z @ z) * np.eye(3))
        # dK = 2 Lambda dz
        h = 1e-6
        jac = np.stack([(hopf(z + h * e) - hopf(z - h * e)) / (2 * h) for e in np.eye(4)], 1)
        assert np.allclose(jac, 2 * L, atol=1e-8)


def test_section_charts_and_angle():
    x = np.array([0.3, -0.4, 1.2])
    z = section(x, 0.0)
    assert np.allclose(hopf(z), x)
    assert z[3] == 0.0 and z[0] > 0  # J+: z0 + i z3 real positive
    y = np.array([-0.3, -0.4, 1.2])
    w = section(y, 0.0)
    assert np.allclose(hopf(w), y)
    assert w[1] == 0.0 and w[2] > 0  # J-: z2 + i z1 real positive
    assert np.allclose(section(x, 1.1), circle_act(1.1, z))


def test_section_rejects_origin():
    with pytest.raises(ZeroBasePoint):
        section([0.0, 0.0, 0.0])
    with pytest.raises(ZeroBasePoint):
        ks_project(np.zeros(4), np.ones(4))


@given(vec3.filter(lambda v: np.linalg.norm(v) > 1e-3), vec3, st.floats(0, 2 * np.pi))
@settings(max_examples=200)
def test_lift_project_round_trip(x, xi, theta):
    lift = ks_lift(x, xi, theta)
    xb, xib = ks_project(lift)
    assert np.allclose(xb, x, rtol=1e-12, atol=1e-12 * np.linalg.norm(x))
    assert np.allclose(xib, xi, rtol=1e-11, atol=1e-11 * (1 + np.linalg.norm(xi)))
    assert abs(lift.constraint) <= 1e-12 * (1 + np.linalg.norm(lift.z) * np.linalg.norm(lift.zeta))


def test_constraint_vanishes_on_fiber_direction_only():
    rng = np.random.default_rng(4)
    z = rng.normal(size=4)
    fiber_dir = (circle_act(1e-6, z) - circle_act(-1e-6, z)) / 2e-6
    assert abs(bilinear_constraint(z, fiber_dir)) > 0.1
    assert abs(bilinear_constraint(z, 2 * ks_matrix(z).T @ rng.normal(size=3))) < 1e-12


def test_hopf_distance():
    rng = np.random.default_rng(5)
    Z = rng.normal(size=(100, 4))
    X = rng.normal(size=(100, 4))
    ref = np.linalg.norm(hopf(Z) - hopf(X), axis=1)
    assert np.allclose(hopf_distance(Z, X), ref, rtol=1e-10)


def test_fiber_integral_closed_form():
    Z = np.array([1.0, 0.2, -0.3, 0.1])
    X = np.array([0.1, 0.9, 0.4, -0.2])
    d = np.linalg.norm(hopf(Z) - hopf(X))
    assert fiber_average_inverse_square(Z, X) == pytest.approx(2 * np.pi / d, rel=1e-12)


def test_fiber_integral_degenerate():
    Z = np.array([1.0, 0.2, -0.3, 0.1])
    with pytest.raises(DegenerateFiber):
        fiber_average_inverse_square(Z, circle_act(0.3, Z))


def test_qmul_associative():
    rng = np.random.default_rng(6)
    a, b, c = rng.normal(size=(3, 4))
    assert np.allclose(qmul(qmul(a, b), c), qmul(a, qmul(b, c)))
