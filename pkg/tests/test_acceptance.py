"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

import itertools
import math
import time

import numpy as np
import pytest

from horolab import (
    HyperbolicMetric,
    Isometry,
    NumericFailure,
    PerturbedMetric,
    build_genus2_group,
    count_series,
    enumerate_orbit,
    reduce_to_domain,
)
from horolab.asymptotics import entropy_fit, gauss_bonnet_check, growth_series, katok_identity, tr_u_average
from horolab.boundary import busemann_closed, busemann_numeric
from horolab.flow import UnitTangent, sphere_area
from horolab.fuchsian import apply, compose, default_margin, inverse
from horolab.measures import calibrate_kappa, margulis_c, ps_cocycle_check, shadow_ratio, sphere_measure
from horolab.metric import hyperbolic_distance

RESULTS = {}


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    RESULTS[n] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def hyp():
    return HyperbolicMetric()


@pytest.fixture(scope="module")
def group():
    return build_genus2_group()


@pytest.fixture(scope="module")
def margulis(hyp):
    return margulis_c(hyp, 0j, 1.0, 10.0, 360, 1e-3)


def test_c01_sphere_area(hyp):
    start = time.perf_counter()
    errs = [abs(sphere_area(hyp, 0j, t, 360, 1e-3) / (2 * math.pi * math.sinh(t)) - 1) for t in (1, 2, 3, 5)]
    elapsed = time.perf_counter() - start
    ok = max(errs) < 1e-6 and elapsed < 10
    assert record(1, ok, f"sphere area max rel err {max(errs):.2e} (< 1e-6), {elapsed:.2f} s (< 10 s)")


def test_c02_margulis(margulis):
    closed = math.pi * (1 + math.exp(-20) - 2 * math.exp(-10))
    e_pi, e_closed = abs(margulis.c - math.pi), abs(margulis.c - closed)
    ok = e_pi < 1e-3 and e_closed < 2e-3 and margulis.cauchy_gap < 2e-3
    assert record(
        2, ok, f"c(10) = {margulis.c:.8f}, |c - pi| {e_pi:.2e}, |c - closed| {e_closed:.2e}, gap {margulis.cauchy_gap:.2e}"
    )


def test_c03_sphere_mass(hyp, margulis):
    nu = sphere_measure(hyp, 0j, 8.0, 2048, 1.0, 1e-3)
    err = abs(nu.mass - math.pi)
    agree = abs(nu.mass - margulis.c)
    ok = err < 1e-3 and agree <= 2 * margulis.cauchy_gap
    assert record(3, ok, f"mass(nu_0^8) - pi = {nu.mass - math.pi:.2e}, |mass - c| {agree:.2e} <= {2 * margulis.cauchy_gap:.2e}")


def test_c04_busemann(hyp):
    rng = np.random.default_rng(2024)
    worst, bound_ok, monotone_ok = 0.0, True, True
    for _ in range(50):
        p = 0.7 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        q = 0.7 * math.sqrt(rng.random()) * np.exp(2j * math.pi * rng.random())
        v = UnitTangent(p, 2 * math.pi * rng.random())
        try:
            b = busemann_numeric(hyp, v, q)
        except NumericFailure:
            monotone_ok = False
            continue
        worst = max(worst, abs(b.value - busemann_closed(b.xi, q, p).value))
        bound_ok &= abs(b.value) <= float(hyperbolic_distance(p, q)) + 1e-9
    ok = worst < 1e-6 and bound_ok and monotone_ok
    assert record(4, ok, f"max |numeric - closed| {worst:.2e} over 50 samples, bound {bound_ok}, monotone {monotone_ok}")


def test_c05_ps_cocycle(hyp):
    nu_p = sphere_measure(hyp, 0j, 10.0, 2048, 1.0, 1e-3)
    nu_q = sphere_measure(hyp, 0.3 + 0j, 10.0, 2048, 1.0, 1e-3)
    dev = ps_cocycle_check(nu_p, nu_q, 1.0)
    assert record(5, dev < 1e-2, f"max log-deviation {dev:.2e} (< 1e-2)")


def test_c06_shadow(hyp):
    nu = sphere_measure(hyp, 0j, 8.0, 16384, 1.0, 1e-2)
    ratios = [shadow_ratio(nu, math.tanh(d / 2) * np.exp(0.3j), 1.0) for d in range(1, 7)]
    span = max(ratios) / min(ratios)
    assert record(6, span < 4, f"shadow ratios {', '.join(f'{r:.3f}' for r in ratios)}; span {span:.3f} (< 4)")


def test_c07_orbit_counting(group):
    start = time.perf_counter()
    s = count_series(group, 0j, 0j, [11.0, 12.0, 13.0])
    ratio = s.value * np.exp(-s.t)
    near = np.all(np.abs(ratio / 0.25 - 1) < 0.15)
    var = float(np.max(np.abs(np.diff(ratio)) / ratio[:-1]))
    c = default_margin(group, 0j, 0j)
    prune = all(
        len(enumerate_orbit(group, 0j, 0j, r, margin=c)) == len(enumerate_orbit(group, 0j, 0j, r, margin=c + 2))
        for r in (6.0, 8.0, 10.0)
    )
    elapsed = time.perf_counter() - start
    ok = near and var < 0.1 and prune and elapsed < 60
    assert record(
        7, ok,
        f"a_t e^-t = {', '.join(f'{r:.4f}' for r in ratio)} (0.25 +- 15%), variation {var:.3f}, "
        f"prune-safe {prune}, {elapsed:.1f} s",
    )


def test_c08_kappa(hyp, group):
    pairs = [(0j, 0j), (0.1 + 0.05j, -0.05 + 0.1j), (0.3 - 0.1j, 0.2j)]
    ks = [calibrate_kappa(hyp, group, x, y, 1.0, 10.0, 1024, dt=1e-2).kappa for x, y in pairs]
    target = 1 / (2 * math.pi)
    near = all(abs(k / target - 1) < 0.1 for k in ks)
    stable = (max(ks) - min(ks)) / min(ks) < 0.1
    assert record(8, near and stable, f"kappa {', '.join(f'{k:.4f}' for k in ks)} vs 1/(2 pi) = {target:.4f}")


def test_c09_rigidity(hyp, group):
    tru = tr_u_average(hyp, 64, group=group, details=True)
    pert = PerturbedMetric(group, eps=0.01)
    gb = [gauss_bonnet_check(m, group) for m in (PerturbedMetric(group, eps=0.0), pert)]
    gb_err = [abs(g / (4 * math.pi) - 1) for g in gb]
    katok = katok_identity(hyp, group, 1.0)
    ok = (
        abs(tru["trU"] - 1) < 1e-6
        and abs(tru["second"] - 1) < 1e-6
        and max(gb_err) < 5e-3
        and abs(katok - 1) < 0.02
    )
    assert record(
        9, ok,
        f"trU {tru['trU']:.10f}, second {tru['second']:.10f}, Gauss-Bonnet rel err "
        f"{gb_err[0]:.2e}/{gb_err[1]:.2e}, Katok {katok:.4f}",
    )


def test_c10_group(group):
    rel = group.relation_product()
    rel_ok = rel.close_to(Isometry(1 + 0j, 0j), tol=1e-9)
    area_err = abs(group.area() - 4 * math.pi)
    f, g, h = group.generators[0], group.generators[3], group.generators[6]
    alg = [
        compose(compose(f, g), h).close_to(compose(f, compose(g, h)), tol=1e-12 * 50),
        compose(f, inverse(f)).close_to(Isometry(1 + 0j, 0j), tol=1e-12 * 10),
        abs(apply(compose(f, g), 0.2j) - apply(f, apply(g, 0.2j))) < 1e-12,
        all(abs(k.det - 1) < 1e-12 for k in group.generators),
    ]
    ok = rel_ok and area_err < 1e-9 and all(alg)
    assert record(10, ok, f"relation {rel_ok}, area defect err {area_err:.1e}, algebra {all(alg)}")


def test_c11_perturbed(hyp, group):
    pert = PerturbedMetric(group, eps=0.01)
    k_ok = pert.k_max <= -1e-6
    p0 = PerturbedMetric(group, eps=0.0)
    # eps = 0 reproduces the hyperbolic metric-dependent criteria
    s_err = max(abs(sphere_area(p0, 0j, t, 360, 1e-2) / (2 * math.pi * math.sinh(t)) - 1) for t in (1, 2, 3, 5))
    m0 = margulis_c(p0, 0j, 1.0, 10.0, 64, 1e-2)
    mass0 = sphere_measure(p0, 0j, 8.0, 512, 1.0, 1e-2).mass
    v = UnitTangent(0.1j, 0.3)
    b0 = busemann_numeric(p0, v, 0.2 - 0.3j, tol=1e-5).value
    b_err = abs(b0 - busemann_closed(busemann_numeric(hyp, v, 0.2 - 0.3j).xi, 0.2 - 0.3j, 0.1j).value)
    tru0 = tr_u_average(p0, 16, group=group, details=True)
    k0 = calibrate_kappa(p0, group, 0j, 0j, 1.0, 8.0, 512, dt=1e-2).kappa
    eps0_ok = (
        s_err < 1e-6
        and abs(m0.c - math.pi) < 1e-3
        and m0.cauchy_gap < 2e-3
        and abs(mass0 - math.pi) < 1e-3
        and b_err < 1e-5
        and abs(tru0["trU"] - 1) < 1e-6
        and abs(tru0["second"] - 1) < 1e-6
        and abs(k0 * 2 * math.pi - 1) < 0.1
    )
    # entropy over two windows
    s, _ = growth_series(pert, 0j, np.arange(0.25, 10.01, 0.25), 64, 1e-2)
    h1, h2 = entropy_fit(s, (6.0, 8.0)).h, entropy_fit(s, (8.0, 10.0)).h
    h_ok = abs(h1 - h2) / h2 < 0.02
    # log-Lipschitz bound for the c-map on a 5x5 grid
    half = float(abs(group.octagon[0])) / math.sqrt(2)
    axis = np.linspace(-half, half, 5)
    pts, cs, gaps = [], [], []
    for xv, yv in itertools.product(axis, axis):
        z = complex(xv, yv)
        est = margulis_c(pert, reduce_to_domain(group, z)[0], h2, 8.0, 64, 1e-2)
        pts.append(z)
        cs.append(est.c)
        gaps.append(est.cauchy_gap)
    shrink = math.exp(-pert.eps)
    slack = min(
        h2 * shrink * float(hyperbolic_distance(pts[i], pts[j])) + 2 * max(gaps) - abs(math.log(cs[i] / cs[j]))
        for i, j in itertools.combinations(range(len(pts)), 2)
    )
    lip_ok = slack >= 0
    ok = k_ok and eps0_ok and h_ok and lip_ok
    assert record(
        11, ok,
        f"K max {pert.k_max:.3f} <= 0, eps=0 reproduces hyperbolic {eps0_ok}, "
        f"h windows {h1:.5f}/{h2:.5f}, c-map Lipschitz slack {slack:.2e}",
    )


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
