import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horolab import BudgetExceeded, DomainError, Isometry, count_series, enumerate_orbit, reduce_to_domain
from horolab.fuchsian import apply, compose, default_margin, inverse, translation_to_origin
from horolab.metric import hyperbolic_distance


def random_isometry(rho, alpha, beta):
    return Isometry(complex(math.cosh(rho)) * complex(math.cos(alpha), math.sin(alpha)),
                    math.sinh(rho) * complex(math.cos(beta), math.sin(beta)))


isometries = st.builds(random_isometry, st.floats(0, 2), st.floats(0, 6.3), st.floats(0, 6.3))


@given(isometries, isometries, isometries)
@settings(max_examples=40, deadline=None)
def test_isometry_algebra(f, g, h):
    # renormalizing |a|^2 - |b|^2 = 1 costs a relative error of order eps |a|^2,
    # so entries of size |a| carry an absolute error of order eps |a|^3
    left = compose(compose(f, g), h)
    assert left.close_to(compose(f, compose(g, h)), tol=1e-12 + 1e-15 * abs(left.a) ** 3)
    assert compose(f, inverse(f)).close_to(Isometry(1 + 0j, 0j), tol=1e-12 + 1e-15 * abs(f.a) ** 6)
    assert f.det == pytest.approx(1.0, abs=1e-12 * abs(f.a) ** 2)
    z = 0.3 - 0.1j
    assert apply(compose(f, g), z) == pytest.approx(apply(f, apply(g, z)), abs=1e-12)


@given(isometries, st.floats(0, 0.9), st.floats(0, 6.3))
@settings(max_examples=40, deadline=None)
def test_isometries_preserve_distance(g, r, a):
    x, y = 0.2 + 0.1j, r * complex(math.cos(a), math.sin(a))
    d = float(hyperbolic_distance(x, y))
    assert float(hyperbolic_distance(apply(g, x), apply(g, y))) == pytest.approx(d, abs=1e-9)


def test_translation_to_origin():
    w = 0.4 - 0.3j
    assert abs(apply(translation_to_origin(w), w)) < 1e-15


def test_relation_and_area(group):
    rel = group.relation_product()
    assert rel.close_to(Isometry(1 + 0j, 0j), tol=1e-9)
    assert np.allclose(group.interior_angles(), math.pi / 4, atol=1e-9)
    # angle defect: (8 - 2) pi - 8 * pi/4 = 4 pi = -2 pi chi
    assert group.area() == pytest.approx(4 * math.pi, abs=1e-9)
    for g in group.generators:
        assert g.det == pytest.approx(1.0, abs=1e-12)
        assert 2 * math.acosh(abs(g.a)) == pytest.approx(group.translation_length, abs=1e-12)


def test_generators_pair_sides(group):
    """Each generator carries one octagon side onto the opposite one."""
    v = group.octagon
    for k, g in enumerate(group.generators):
        mids = [0.5 * (v[j] + v[(j + 1) % 8]) for j in range(8)]
        img = apply(g, 0j)
        # g(0) is the reflection of 0 across one side: at twice the inradius
        assert float(hyperbolic_distance(0j, img)) == pytest.approx(2 * group.inradius, abs=1e-12)
        assert min(abs(np.angle(img / m)) for m in mids) < 1e-9


def test_reduce_to_domain(group):
    rng = np.random.default_rng(1)
    z = 0.97 * np.sqrt(rng.random(50)) * np.exp(2j * math.pi * rng.random(50))
    for p in z:
        r, g = reduce_to_domain(group, p)
        assert group.contains(r)
        assert abs(apply(g, p) - r) < 1e-9


def test_orbit_ball_sorted_and_centered(group):
    ball = enumerate_orbit(group, 0j, 0j, 6.0)
    assert np.all(np.diff(ball.distances) >= 0)
    assert ball.distances[0] == 0.0
    assert np.allclose(hyperbolic_distance(0j, ball.points), ball.distances, atol=1e-9)
    assert ball.words()[0] == "e"
    assert ball.count(2 * group.inradius + 1e-9) == 9


def test_orbit_words_reproduce_points(group):
    ball = enumerate_orbit(group, 0j, 0.1j, 4.0)
    idx = {c: k for k, c in enumerate("abcdABCD")}
    for word, p in zip(ball.words()[:60], ball.points[:60]):
        g = group.word([]) if word == "e" else group.word([idx[c] for c in word])
        assert abs(apply(g, 0.1j) - p) < 1e-9


@pytest.mark.parametrize("radius", [6.0, 8.0, 10.0])
def test_prune_safety(group, radius):
    x, y = 0j, 0j
    c = default_margin(group, x, y)
    a = enumerate_orbit(group, x, y, radius, margin=c)
    b = enumerate_orbit(group, x, y, radius, margin=c + 2)
    assert len(a) == len(b)


def test_fixed_margin_six_is_safe_at_small_radius(group):
    a = enumerate_orbit(group, 0j, 0j, 6.0, margin=6.0)
    b = enumerate_orbit(group, 0j, 0j, 6.0, margin=8.0)
    assert len(a) == len(b)


def test_counts_equivariant_and_symmetric(group):
    x, y = 0.1 + 0.05j, -0.05 + 0.1j
    g = group.word([0, 5, 2])
    t = [4.0, 6.0, 8.0]
    base = count_series(group, x, y, t).value
    moved = count_series(group, apply(g, x), apply(g, y), t).value
    swapped = count_series(group, y, x, t).value
    assert np.array_equal(base, moved)
    assert np.array_equal(base, swapped)


def test_budget_exceeded_carries_partial(group):
    with pytest.raises(BudgetExceeded) as info:
        enumerate_orbit(group, 0j, 0j, 12.0, budget=1000)
    assert info.value.partial is not None
    assert len(info.value.partial) > 0


def test_count_series_validation(group):
    with pytest.raises(DomainError):
        count_series(group, 0j, 0j, [3.0, 2.0])


def test_orbit_csv(group, tmp_path):
    ball = enumerate_orbit(group, 0j, 0j, 3.0)
    path = tmp_path / "orbit.csv"
    ball.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "gamma_word,x_re,x_im,dist"
    assert len(lines) == len(ball) + 1


def test_count_series_nondecreasing(group):
    s = count_series(group, 0.2j, -0.1, np.arange(0.5, 9.01, 0.5))
    assert np.all(np.diff(s.value) >= 0)
    assert s.value[0] >= 1 or s.value[0] == 0
