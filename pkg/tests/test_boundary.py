import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horolab import DegenerateInputError, DomainError, NumericFailure
from horolab.boundary import (
    BoundaryPoint,
    angle_gap,
    busemann_array,
    busemann_closed,
    busemann_numeric,
    connecting_point,
    forward_endpoint,
    gromov_product,
)
from horolab.flow import UnitTangent, hyperbolic_endpoint
from horolab.metric import hyperbolic_distance

points = st.builds(lambda r, a: r * complex(math.cos(a), math.sin(a)), st.floats(0, 0.85), st.floats(0, 6.28))
angles = st.floats(0, 6.28)


def test_boundary_point_normalizes():
    assert BoundaryPoint(-0.5).alpha == pytest.approx(2 * math.pi - 0.5)
    assert BoundaryPoint(2 * math.pi).alpha == 0.0
    assert angle_gap(0.1, 2 * math.pi - 0.1) == pytest.approx(0.2)


@given(angles, points, points, points)
@settings(max_examples=50, deadline=None)
def test_busemann_cocycle_and_bound(a, p, q, r):
    b_qp = busemann_closed(a, q, p).value
    assert b_qp == pytest.approx(busemann_closed(a, q, r).value + busemann_closed(a, r, p).value, abs=1e-9)
    assert abs(b_qp) <= float(hyperbolic_distance(p, q)) + 1e-9
    assert busemann_closed(a, p, p).value == pytest.approx(0.0, abs=1e-15)
    assert float(busemann_array(np.array([a]), q, p)[0]) == pytest.approx(b_qp, abs=1e-12)


def test_busemann_along_ray_is_minus_t():
    v = UnitTangent(0j, 0.4)
    q = 0.5 * np.exp(0.4j)
    assert busemann_closed(0.4, q, 0j).value == pytest.approx(-float(hyperbolic_distance(0j, q)), abs=1e-12)
    assert hyperbolic_endpoint(v) == pytest.approx(0.4)


def test_busemann_numeric_matches_closed_form(hyp):
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = 0.6 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        q = 0.6 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        v = UnitTangent(p, 2 * math.pi * rng.random())
        b, seq = busemann_numeric(hyp, v, q, details=True)
        assert b.value == pytest.approx(busemann_closed(b.xi, q, p).value, abs=1e-6)
        vals = [s[1] for s in seq]
        assert all(x >= y - 1e-9 for x, y in zip(vals, vals[1:]))


def test_busemann_numeric_eps_zero(pert0):
    v = UnitTangent(0.1j, 0.3)
    q = 0.2 - 0.3j
    b = busemann_numeric(pert0, v, q, tol=1e-5)
    assert b.value == pytest.approx(busemann_closed(hyperbolic_endpoint(v), q, v.base).value, abs=1e-5)


def test_busemann_numeric_perturbed(pert):
    v = UnitTangent(0.1j, 0.3)
    q = 0.3 + 0.2j
    b = busemann_numeric(pert, v, q, tol=1e-5)
    # bounded by the Riemannian distance, which is at most the hyperbolic one
    assert abs(b.value) <= float(hyperbolic_distance(q, v.base))


def test_forward_endpoint(hyp, pert0):
    v = UnitTangent(0.3 + 0.1j, 2.2)
    assert forward_endpoint(hyp, v, dt=1e-2).alpha == pytest.approx(hyperbolic_endpoint(v), abs=1e-8)
    assert forward_endpoint(pert0, v, dt=1e-2).alpha == pytest.approx(hyperbolic_endpoint(v), abs=1e-8)
    with pytest.raises(DomainError):
        forward_endpoint(hyp, v, T=5.0)


def test_busemann_numeric_failure_reported(hyp):
    with pytest.raises(NumericFailure):
        busemann_numeric(hyp, UnitTangent(0j, 0.0), 0.5j, tol=1e-30, t_max=16.0)


@given(angles, st.floats(0.05, 3.1))
@settings(max_examples=30, deadline=None)
def test_gromov_product_at_origin(hyp, a, sep):
    """beta_0(xi, eta) = -2 log sin(phi / 2) with phi the angle between xi and eta."""
    val = gromov_product(hyp, a, a + sep, 0j)
    assert val == pytest.approx(-2 * math.log(math.sin(sep / 2)), abs=1e-9)


def test_gromov_product_independent_of_q(hyp):
    xi, eta, p = 0.3, 2.5, 0.2 - 0.1j
    ref = gromov_product(hyp, xi, eta, p)
    for s in (-2.0, 0.5, 3.0):
        q = connecting_point(xi, eta, p, s)
        assert gromov_product(hyp, xi, eta, p, q) == pytest.approx(ref, abs=1e-9)


def test_gromov_product_rejects_equal_points(hyp, pert):
    with pytest.raises(DegenerateInputError):
        gromov_product(hyp, 1.0, 1.0, 0j)
    with pytest.raises(DomainError):
        gromov_product(pert, 1.0, 2.0, 0j)
