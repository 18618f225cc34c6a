"""Boundary circle of the disk: forward endpoints, Busemann functions, Gromov products."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, NumericFailure
from .flow import DEFAULT_DT, Sweep, UnitTangent, shoot_distance
from .metric import as_point, hyperbolic_distance, one_minus_abs2

TWO_PI = 2 * math.pi
ENDPOINT_TOL = 1e-6
MAX_ENDPOINT_HORIZON = 160.0
# shooting towards c(t) is conditioned up to about t = 16 (J grows like e^t)
MAX_PERTURBED_BUSEMANN_T = 16.0
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class BoundaryPoint:
    alpha: float

    def __post_init__(self):
        a = math.fmod(float(self.alpha), TWO_PI)
        if a < 0:
            a += TWO_PI
        if a >= TWO_PI:
            a = 0.0
        object.__setattr__(self, "alpha", a)

    @property
    def point(self):
        return complex(math.cos(self.alpha), math.sin(self.alpha))


def as_boundary(xi):
    return xi if isinstance(xi, BoundaryPoint) else BoundaryPoint(xi)


def angle_gap(a, b):
    """Distance between angles on the circle, in [0, pi]."""
    d = np.mod(np.subtract(a, b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class BusemannValue:
    value: float
    xi: BoundaryPoint
    q: complex
    p: complex

    def __float__(self):
        return self.value


def _checked(value, xi, q, p, slack=1e-9):
    d = float(hyperbolic_distance(q, p))
    if abs(value) > d * (1 + 1e-9) + slack:
        raise NumericFailure("Busemann value exceeds d(p, q)", value=value, distance=d)
    return BusemannValue(float(value), xi, q, p)


def forward_endpoint(metric, v, T=10.0, dt=DEFAULT_DT, tol=ENDPOINT_TOL):
    """v^+ as the endpoint of the hyperbolic geodesic tangent to phi^T(v).

    The horizon doubles until two successive estimates agree to ``tol`` radians.
    """
    if T < 10:
        raise DomainError("endpoint horizon must be at least 10")
    sw = Sweep(metric, np.array([v.base]), np.array([v.theta]), dt=dt)
    sw.run(T)
    prev = sw.tangent_endpoints()[0]
    while 2 * T <= MAX_ENDPOINT_HORIZON:
        T *= 2
        sw.run(T)
        cur = sw.tangent_endpoints()[0]
        if angle_gap(cur, prev) < tol:
            return BoundaryPoint(cur)
        prev = cur
    raise NumericFailure("forward endpoint did not converge", horizon=T)


def busemann_closed(xi, q, p):
    """b_xi(q, p) = log[(1-|p|^2)|q-xi|^2 / ((1-|q|^2)|p-xi|^2)] on the hyperbolic disk."""
    xi = as_boundary(xi)
    q, p = as_point(q), as_point(p)
    e = xi.point
    val = math.log(one_minus_abs2(p) / one_minus_abs2(q)) + 2 * math.log(abs(q - e) / abs(p - e))
    return _checked(val, xi, q, p)


def busemann_array(alpha, q, p):
    """Vectorized closed form over boundary angles ``alpha`` (no bound check)."""
    e = np.exp(1j * np.asarray(alpha, dtype=float))
    return np.log(one_minus_abs2(p) / one_minus_abs2(q)) + 2 * np.log(np.abs(q - e) / np.abs(p - e))


def busemann_numeric(metric, v, q, tol=1e-8, t0=4.0, dt=None, t_max=None, details=False):
    """Limit definition b(q, p) = lim d(q, c(t)) - t along the geodesic c of ``v`` (p = base of v).

    Evaluated at t = t0, 2 t0, 4 t0, ... until successive values differ by less
    than ``tol``.  The sequence must be nonincreasing.
    """
    q, p = as_point(q), v.base
    hyper = metric.kind == "hyperbolic"
    if dt is None:
        dt = 1e-2
    if t_max is None:
        t_max = 64.0 if hyper else MAX_PERTURBED_BUSEMANN_T
    sw = Sweep(metric, np.array([p]), np.array([v.theta]), dt=dt)
    seq = []
    t = t0
    while t <= t_max:
        sw.run(t)
        if hyper:
            d = float(sw.distance_to(q)[0])
        else:
            d = float(shoot_distance(metric, q, complex(sw.points()[0]), dt=dt))
        seq.append((t, d - t))
        if len(seq) > 1:
            diff = seq[-1][1] - seq[-2][1]
            if diff > MONOTONE_SLACK * max(1.0, t):
                raise NumericFailure("Busemann sequence increased", sequence=seq)
            if abs(diff) < tol:
                val = _checked(seq[-1][1], BoundaryPoint(float(sw.tangent_endpoints()[0])), q, p)
                return (val, seq) if details else val
        t *= 2
    raise NumericFailure("Busemann limit did not converge", sequence=seq)


def _connecting(xi, eta, p):
    """Closest point to p on the geodesic (xi, eta), plus the map back from p-centred coordinates."""
    s = math.sqrt(one_minus_abs2(p))
    # T(z) = (z - p)/(1 - conj(p) z) moves p to 0
    fwd = lambda z: (z - p) / (1 - np.conj(p) * z)
    back = lambda z: (z + p) / (1 + np.conj(p) * z)
    a, b = fwd(xi.point), fwd(eta.point)
    half = 0.5 * float(angle_gap(np.angle(a), np.angle(b)))
    mid = a + b
    m = mid / abs(mid) if abs(mid) > 1e-15 else 1j * a
    r = (1 - math.sin(half)) / math.cos(half) if half < math.pi / 2 - 1e-15 else 0.0
    return back(r * m), back, fwd, (a, b), s


def connecting_point(xi, eta, p, s):
    """Point on the geodesic (xi, eta) at signed distance s from its closest point to p."""
    xi, eta = as_boundary(xi), as_boundary(eta)
    q0, back, fwd, _, _ = _connecting(xi, eta, as_point(p))
    # move q0 to 0; the geodesic becomes a diameter through 0
    c = fwd(q0)
    a = (fwd(eta.point) - c) / (1 - np.conj(c) * fwd(eta.point))
    e = a / abs(a)
    z = math.tanh(s / 2) * e
    return complex(back((z + c) / (1 + np.conj(c) * z)))


def gromov_product(metric, xi, eta, p, q=None):
    """beta_p(xi, eta) = -(b_xi(q, p) + b_eta(q, p)) for q on the connecting geodesic."""
    if metric.kind != "hyperbolic":
        raise DomainError("gromov_product is available for the hyperbolic metric only")
    xi, eta = as_boundary(xi), as_boundary(eta)
    if angle_gap(xi.alpha, eta.alpha) < 1e-12:
        raise DegenerateInputError("Gromov product needs distinct boundary points")
    p = as_point(p)
    if q is None:
        q = _connecting(xi, eta, p)[0]
    q = as_point(q)
    return -(busemann_closed(xi, q, p).value + busemann_closed(eta, q, p).value)
