"""Geodesic flow, scalar Jacobi fields and the Riccati equation on a conformal disk metric.

A unit tangent vector at ``z`` with direction angle ``theta`` is
``e^{i theta} / lambda(z)``.  With ``g = grad log lambda`` (encoded as a complex
number) the geodesic equations read

    z' = e^{i theta} / lambda,    theta' = Im(e^{-i theta} g) / lambda,

so the g-speed is one by construction.  In dimension two the normal Jacobi
field is a scalar with J'' + K J = 0.

Long geodesics are integrated in a moving frame: whenever a frame point leaves
the disk of radius 0.95 it is pulled back by an isometry of the metric and the
accumulated map ``G`` (true point = G(frame point)) is updated.  This keeps the
coordinates well conditioned at any distance from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConjugatePointError, DomainError, HorizonError, NumericFailure
from .metric import HORIZON, as_point, hyperbolic_distance, one_minus_abs2

DEFAULT_DT = 1e-3
MAX_RICCATI_HORIZON = 160.0


@dataclass(frozen=True)
class UnitTangent:
    base: complex
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        object.__setattr__(self, "theta", float(self.theta))

    def flip(self):
        return UnitTangent(self.base, self.theta + math.pi)


@dataclass(frozen=True)
class GeodesicRecord:
    times: np.ndarray
    points: np.ndarray
    thetas: np.ndarray
    dt: float

    @property
    def samples(self):
        return list(zip(self.times.tolist(), self.points.tolist(), self.thetas.tolist()))

    def arc_length(self, metric):
        """Midpoint quadrature of lambda |dz| between consecutive samples."""
        z = self.points
        mid = 0.5 * (z[1:] + z[:-1])
        return float(np.sum(metric.factor(mid) * np.abs(np.diff(z))))


@dataclass(frozen=True)
class JacobiState:
    J: float
    dJ: float
    t: float


# --- moving-frame sweep -----------------------------------------------------------


def _frame_to_disk(ga, gb, w):
    den = np.conj(gb) * w + np.conj(ga)
    return (ga * w + gb) / den, one_minus_abs2(w) / np.abs(den) ** 2, -2 * np.angle(den)


class Sweep:
    """Vectorized RK4 integration of a family of geodesics with optional Jacobi fields.

    State: frame point ``w``, frame angle ``th``, accumulated map ``(ga, gb)``
    and, if requested, ``(J, dJ)`` together with the trapezoid integral of J.
    """

    def __init__(self, metric, z0, theta0, jacobi=None, dt=DEFAULT_DT):
        if dt <= 0:
            raise DomainError("dt must be positive")
        theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
        z0 = np.broadcast_to(np.asarray(z0, dtype=complex), theta0.shape).copy()
        if np.any(one_minus_abs2(z0) <= 0):
            raise DomainError("start point is not in the open disk")
        self.metric = metric
        self.dt = float(dt)
        self.t = 0.0
        self.ga = np.ones_like(z0)
        self.gb = np.zeros_like(z0)
        # start in a well-conditioned frame
        self.w, self.th = z0, theta0.copy()
        self._recenter()
        self.jacobi = jacobi is not None
        self.positive = False
        if self.jacobi:
            J0, dJ0 = jacobi
            # J(0) = 0, J'(0) > 0 must stay positive when K <= 0
            self.positive = J0 == 0 and dJ0 > 0
            self.J = np.full(theta0.shape, float(J0))
            self.dJ = np.full(theta0.shape, float(dJ0))
            self.intJ = np.zeros(theta0.shape)
        self.k_lo = np.inf
        self.k_hi = -np.inf

    @classmethod
    def from_state(cls, metric, dt, w, th, ga, gb, J=None, dJ=None):
        sw = cls.__new__(cls)
        sw.metric, sw.dt, sw.t = metric, float(dt), 0.0
        sw.w, sw.th, sw.ga, sw.gb = w.copy(), th.copy(), ga.copy(), gb.copy()
        sw.jacobi = J is not None
        sw.positive = False
        if sw.jacobi:
            sw.J, sw.dJ, sw.intJ = J.copy(), dJ.copy(), np.zeros_like(J)
        sw.k_lo, sw.k_hi = np.inf, -np.inf
        return sw

    def snapshot(self, mask):
        st = (self.w[mask], self.th[mask], self.ga[mask], self.gb[mask])
        if self.jacobi:
            st += (self.J[mask], self.dJ[mask])
        return st

    @property
    def size(self):
        return self.w.size

    def _recenter(self):
        w, th, moved, a, b = self.metric.recenter(self.w, self.th)
        if a is None:
            return
        self.w, self.th = w, th
        # G <- G o phi^{-1} with phi^{-1} = (conj a, -b).  No renormalization:
        # |a|^2 - |b|^2 cancels catastrophically once G is far from the identity.
        ga, gb = self.ga[moved], self.gb[moved]
        self.ga[moved] = ga * np.conj(a) - gb * np.conj(b)
        self.gb[moved] = -ga * b + gb * a

    def _rhs(self, w, th, J):
        lam, grad, K = self.metric.local(w, curvature=self.jacobi)
        e = np.exp(1j * th)
        dw = e / lam
        dth = (np.conj(e) * grad).imag / lam
        if self.jacobi:
            self.k_lo = min(self.k_lo, float(K.min()))
            self.k_hi = max(self.k_hi, float(K.max()))
            return dw, dth, K
        return dw, dth, None

    def step(self, h):
        w, th = self.w, self.th
        if self.jacobi:
            J, dJ = self.J, self.dJ
            k1w, k1t, K1 = self._rhs(w, th, J)
            k1J, k1d = dJ, -K1 * J
            k2w, k2t, K2 = self._rhs(w + 0.5 * h * k1w, th + 0.5 * h * k1t, None)
            k2J, k2d = dJ + 0.5 * h * k1d, -K2 * (J + 0.5 * h * k1J)
            k3w, k3t, K3 = self._rhs(w + 0.5 * h * k2w, th + 0.5 * h * k2t, None)
            k3J, k3d = dJ + 0.5 * h * k2d, -K3 * (J + 0.5 * h * k2J)
            k4w, k4t, K4 = self._rhs(w + h * k3w, th + h * k3t, None)
            k4J, k4d = dJ + h * k3d, -K4 * (J + h * k3J)
            Jn = J + h / 6 * (k1J + 2 * k2J + 2 * k3J + k4J)
            self.dJ = dJ + h / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
            self.intJ = self.intJ + 0.5 * h * (J + Jn)
            self.J = Jn
            if self.positive and np.any(Jn <= 0):
                raise ConjugatePointError(
                    "Jacobi field vanished: conjugate point along a geodesic",
                    t=self.t + h,
                    count=int(np.sum(Jn <= 0)),
                )
        else:
            k1w, k1t, _ = self._rhs(w, th, None)
            k2w, k2t, _ = self._rhs(w + 0.5 * h * k1w, th + 0.5 * h * k1t, None)
            k3w, k3t, _ = self._rhs(w + 0.5 * h * k2w, th + 0.5 * h * k2t, None)
            k4w, k4t, _ = self._rhs(w + h * k3w, th + h * k3t, None)
        self.w = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        self.th = th + h / 6 * (k1t + 2 * k2t + 2 * k3t + k4t)
        self.t += h
        self._recenter()

    def run(self, T, on_step=None):
        """Advance to time ``T`` with fixed steps; a shorter last step lands exactly on T."""
        t0 = self.t
        n = int(math.ceil((T - t0) / self.dt - 1e-9))
        for k in range(n):
            h = T - (t0 + k * self.dt) if k == n - 1 else self.dt
            self.step(h)
            self.t = T if k == n - 1 else t0 + (k + 1) * self.dt
            if on_step is not None and on_step(self, k + 1):
                break
        return self

    # --- disk-coordinate views ----------------------------------------------------

    def points(self):
        z, _, _ = _frame_to_disk(self.ga, self.gb, self.w)
        return z

    def boundary_gap(self):
        """1 - |z|^2 of the true points, computed without cancellation."""
        return _frame_to_disk(self.ga, self.gb, self.w)[1]

    def directions(self):
        return self.th + _frame_to_disk(self.ga, self.gb, self.w)[2]

    def tangent_endpoints(self):
        """Endpoint of the hyperbolic geodesic tangent to the current vector (angle)."""
        e = np.exp(1j * self.th)
        end = (e + self.w) / (1 + np.conj(self.w) * e)
        xi = (self.ga * end + self.gb) / (np.conj(self.gb) * end + np.conj(self.ga))
        return np.mod(np.angle(xi), 2 * math.pi)

    def distance_to(self, q):
        """Hyperbolic distance from the true points to ``q``, evaluated as d(G^-1 q, w).

        1 - |G^-1 q|^2 = (1 - |q|^2) / |a - conj(b) q|^2 keeps this accurate even
        when G^-1 q is numerically on the unit circle.
        """
        q = np.asarray(q, dtype=complex)
        den = self.ga - np.conj(self.gb) * q
        qi = (np.conj(self.ga) * q - self.gb) / den
        sq = one_minus_abs2(q) / np.abs(den) ** 2
        return 2 * np.arcsinh(np.abs(qi - self.w) / np.sqrt(sq * one_minus_abs2(self.w)))

    def pull_back(self, q):
        q = np.asarray(q, dtype=complex)
        return (np.conj(self.ga) * q - self.gb) / (-np.conj(self.gb) * q + self.ga)


def _jacobi_sweep(metric, z0, theta0, J0=0.0, dJ0=1.0, dt=DEFAULT_DT):
    return Sweep(metric, z0, theta0, jacobi=(J0, dJ0), dt=dt)


# --- public operations ------------------------------------------------------------


def hyperbolic_geodesic(v, t):
    """Closed-form hyperbolic geodesic: (e^{i th} tanh(t/2) + z0) / (1 + conj(z0) e^{i th} tanh(t/2))."""
    e = np.exp(1j * v.theta) * np.tanh(np.asarray(t, dtype=float) / 2)
    return (e + v.base) / (1 + np.conj(v.base) * e)


def hyperbolic_endpoint(v):
    e = np.exp(1j * v.theta)
    xi = (e + v.base) / (1 + np.conj(v.base) * e)
    return float(np.mod(np.angle(xi), 2 * math.pi))


def integrate_geodesic(metric, v0, T, dt=DEFAULT_DT, every=1):
    """Integrate the geodesic from ``v0`` for time ``T`` and record every ``every``-th step.

    Raises :class:`HorizonError` when a sample is numerically on the boundary
    circle in disk coordinates (``|z| >= 1 - 1e-12``).
    """
    if T < 0:
        raise DomainError("T must be nonnegative")
    sw = Sweep(metric, np.array([v0.base]), np.array([v0.theta]), dt=dt)
    gap_limit = 1 - HORIZON**2
    times, pts, ths = [0.0], [v0.base], [v0.theta]

    def grab(s, k):
        if k % every == 0 or s.t >= T - 1e-12:
            if s.boundary_gap()[0] <= gap_limit:
                raise HorizonError("geodesic reached the numerical boundary", t=s.t)
            times.append(s.t)
            pts.append(complex(s.points()[0]))
            ths.append(float(s.directions()[0]))
        return False

    if T > 0:
        sw.run(T, grab)
    return GeodesicRecord(np.array(times), np.array(pts), np.array(ths), float(dt))


def jacobi_evolve(metric, v0, J0, dJ0, T, dt=DEFAULT_DT):
    """Co-integrate (J, J') with J'' + K J = 0 along the geodesic of ``v0``."""
    if T < 0:
        raise DomainError("T must be nonnegative")
    if T == 0:
        return JacobiState(float(J0), float(dJ0), 0.0)
    sw = _jacobi_sweep(metric, np.array([v0.base]), np.array([v0.theta]), J0, dJ0, dt)
    sw.run(T)
    return JacobiState(float(sw.J[0]), float(sw.dJ[0]), float(T))


def riccati_batch(metric, base, theta, T, dt):
    """Horospherical U at t = 0, 2dt, 4dt, ... for a family of geodesics.

    K is sampled on each forward geodesic at t_k = k dt, then the reversed
    equation dU/ds = -U^2 - K is integrated from U = 0 at t = T by RK4 with
    step 2 dt, using the sample at the midpoint.  Returns (U, K) of shapes
    (n/2 + 1, m) and (n + 1, m) together with the step 2 dt.
    """
    n = int(round(T / dt))
    n += n % 2
    sw = Sweep(metric, base, theta, dt=dt)
    K = np.empty((n + 1, sw.size))
    K[0] = metric.local(sw.w, curvature=True)[2]

    def grab(s, k):
        K[k] = metric.local(s.w, curvature=True)[2]
        return False

    sw.run(n * dt, grab)
    h = 2 * dt
    U = np.empty((n // 2 + 1, sw.size))
    u = np.zeros(sw.size)
    U[-1] = u
    for m in range(n // 2, 0, -1):
        k0, km, k1 = K[2 * m], K[2 * m - 1], K[2 * m - 2]
        f1 = -u * u - k0
        f2 = -(u + 0.5 * h * f1) ** 2 - km
        f3 = -(u + 0.5 * h * f2) ** 2 - km
        f4 = -(u + h * f3) ** 2 - k1
        u = u + h / 6 * (f1 + 2 * f2 + 2 * f3 + f4)
        U[m - 1] = u
    return U, K, h


def riccati_limit(metric, base, theta, T=20.0, dt=DEFAULT_DT, tol=1e-8):
    """Vectorized Riccati limit with horizon doubling.

    Returns a dict: ``U`` (value at t = 0), ``second`` (-U' + U^2 at t = 0,
    with U' from a one-sided fourth-order difference), ``k_min`` and ``k_max``
    (curvature range along each geodesic), the certified horizon and the
    change under the last doubling.
    """
    if T <= 0:
        raise DomainError("horizon must be positive")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    base = np.broadcast_to(np.asarray(base, dtype=complex), theta.shape)
    prev = None
    while T <= MAX_RICCATI_HORIZON:
        U, K, h = riccati_batch(metric, base, theta, T, dt)
        if prev is not None:
            change = np.abs(U[0] - prev[0][0])
            if np.all(change < tol):
                U0, K0, h0 = prev
                dU = (-25 * U0[0] + 48 * U0[1] - 36 * U0[2] + 16 * U0[3] - 3 * U0[4]) / (12 * h0)
                return {
                    "U": U0[0],
                    "second": -dU + U0[0] ** 2,
                    "k_min": K0.min(axis=0),
                    "k_max": K0.max(axis=0),
                    "horizon": T / 2,
                    "change": float(change.max()),
                }
        prev = (U, K, h)
        T *= 2
    raise NumericFailure("Riccati limit did not converge", horizon=T / 2)


def riccati_limit_curvature(metric, v, T=20.0, dt=DEFAULT_DT, tol=1e-8, details=False):
    """Mean curvature U of the horocycle through the base of ``v`` centred at its forward endpoint.

    The value at horizon T is certified by recomputing at 2T; the horizon
    keeps doubling until successive values agree to ``tol``.
    """
    res = riccati_limit(metric, np.array([v.base]), np.array([v.theta]), T, dt, tol)
    if not details:
        return float(res["U"][0])
    return {k: (float(val[0]) if isinstance(val, np.ndarray) else val) for k, val in res.items()}


def sphere_sweep(metric, x, t_grid, n_dirs=360, dt=DEFAULT_DT):
    """Jacobi sweep from ``x``; returns (s_t, b_t) on ``t_grid`` and the final sweep.

    s_t = sum_i J_i(t) 2pi/n and b_t = sum_i int_0^t J_i 2pi/n (trapezoid in time).
    """
    if n_dirs < 8:
        raise DomainError("n_dirs must be at least 8")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t grid must be nonnegative and increasing")
    theta = 2 * math.pi * np.arange(n_dirs) / n_dirs
    sw = _jacobi_sweep(metric, as_point(x), theta, 0.0, 1.0, dt)
    w = 2 * math.pi / n_dirs
    s = np.zeros(t_grid.size)
    b = np.zeros(t_grid.size)
    for i, t in enumerate(t_grid):
        if t > sw.t:
            sw.run(t)
        if t > 0:
            s[i] = float(np.sum(sw.J)) * w
            b[i] = float(np.sum(sw.intJ)) * w
    return s, b, sw


def sphere_area(metric, x, t, n_dirs=360, dt=DEFAULT_DT):
    """s_t(x) = int_0^{2pi} J_theta(t) d theta with J(0) = 0, J'(0) = 1."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    return float(sphere_sweep(metric, x, [t], n_dirs, dt)[0][0])


def ball_volume(metric, x, t, n_dirs=360, dt=DEFAULT_DT):
    """b_t(x) = int_0^t s_tau(x) d tau, accumulated along the same Jacobi sweep."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if t == 0:
        return 0.0
    return float(sphere_sweep(metric, x, [t], n_dirs, dt)[1][0])


# --- shooting ---------------------------------------------------------------------


def _hyperbolic_direction(x, y):
    """Direction angle at x of the hyperbolic geodesic towards y."""
    s = math.sqrt(one_minus_abs2(x))
    yy = (y - x) / (1 - np.conj(x) * y)
    return np.angle(yy) if s > 0 else 0.0


def _local_target(sw, targets):
    """Along-track and signed cross-track coordinates of targets relative to each vector.

    Uses coordinates centred at the current point with the direction along +real;
    for a point y there, tanh(along) = 2 Re y / (1 + |y|^2) and
    sinh(cross) = 2 Im y / (1 - |y|^2).
    """
    q = sw.pull_back(targets)
    y = (q - sw.w) / (1 - np.conj(sw.w) * q) * np.exp(-1j * sw.th)
    r2 = np.abs(y) ** 2
    along = np.arctanh(np.clip(2 * y.real / (1 + r2), -1 + 1e-16, 1 - 1e-16))
    cross = np.arcsinh(2 * y.imag / (1 - r2))
    return along, cross


def _crossings(metric, x, phi, targets, t_max, dt):
    """Integrate from x in directions ``phi`` until each passes its target.

    The state at the first step past the target is corrected by one RK4 step of
    (negative) length equal to the along-track overshoot.  Returns the arrival
    time, the signed cross-track miss and J at arrival.
    """
    sw = _jacobi_sweep(metric, x, phi, 0.0, 1.0, dt)
    n = phi.size
    done = np.zeros(n, dtype=bool)
    t_pass = np.zeros(n)
    over = np.zeros(n)
    state = [np.zeros(n, dtype=complex), np.zeros(n), np.zeros(n, dtype=complex),
             np.zeros(n, dtype=complex), np.zeros(n), np.zeros(n)]

    def check(s, k):
        along, _ = _local_target(s, targets)
        new = ~done & (along <= 0)
        if new.any():
            for dst, src in zip(state, s.snapshot(new)):
                dst[new] = src
            t_pass[new] = s.t
            over[new] = along[new]
            done[new] = True
        return bool(done.all())

    check(sw, 0)
    if not done.all():
        sw.run(t_max, check)
    if not done.all():
        raise NumericFailure("shooting geodesic did not reach its target", missing=int((~done).sum()))
    fix = Sweep.from_state(metric, dt, *state)
    fix.step(over)
    along, cross = _local_target(fix, targets)
    return t_pass + over + along, cross, fix.J


def shoot_distance(metric, x, y, tol=1e-10, dt=None, max_iter=100):
    """Distance from x to each y by safeguarded Newton shooting on the initial angle.

    The signed miss m(phi) of the geodesic from x decreases in phi with
    derivative -J(t*) (J the Jacobi field with J(0) = 0, J'(0) = 1), so the
    Newton update is phi + m / J.  Each target keeps a sign bracket; steps that
    leave it are replaced by bisection.  The hyperbolic direction is the
    starting guess.
    """
    scalar = np.ndim(y) == 0
    x = as_point(x)
    ys = np.atleast_1d(np.asarray(y, dtype=complex))
    if dt is None:
        dt = 1e-2 if metric.kind == "perturbed" else DEFAULT_DT
    out = np.zeros(ys.size)
    d_h = hyperbolic_distance(x, ys)
    idx = np.nonzero(d_h > 0)[0]
    if idx.size == 0:
        return float(out[0]) if scalar else out
    tg = ys[idx]
    phi = np.array([_hyperbolic_direction(x, q) for q in tg])
    lo = np.full(phi.size, -np.inf)
    hi = np.full(phi.size, np.inf)
    # lambda_pert <= lambda_hyp, so the perturbed distance is at most d_hyp
    t_max = float(d_h[idx].max()) + 1.0
    for _ in range(max_iter):
        t_hit, miss, jac = _crossings(metric, x, phi, tg, t_max, dt)
        lo = np.where(miss > 0, np.maximum(lo, phi), lo)
        hi = np.where(miss < 0, np.minimum(hi, phi), hi)
        ok = jac > 0
        step = np.where(ok, miss / np.where(ok, jac, 1.0), 0.0)
        # cosh d = cosh(t) cosh(miss) locally, so the distance error is about
        # miss^2 / 2 and a miss of 0.1 sqrt(tol) suffices; angle updates at
        # roundoff level are final as well
        if np.all((np.abs(miss) <= 0.1 * math.sqrt(tol)) | (np.abs(step) <= 1e-14 * (1 + np.abs(phi)))):
            break
        new = phi + np.clip(np.where(ok, step, np.sign(miss) * 0.2), -0.2, 0.2)
        bracketed = np.isfinite(lo) & np.isfinite(hi)
        outside = bracketed & ((new <= lo) | (new >= hi))
        phi = np.where(outside, 0.5 * (lo + hi), new)
    else:
        raise NumericFailure("shooting did not converge", worst=float(np.abs(miss).max()))
    out[idx] = t_hit
    return float(out[0]) if scalar else out
