"""Boundary measures: sphere measures nu_x^R, density checks, shadows and Margulis constants.

nu_x^R puts one atom per initial direction theta_i at x, located at the forward
endpoint of the geodesic, with weight e^{-hR} J_i(R) 2pi/n.  Its total mass is
e^{-hR} s_R(x).  Densities with respect to arc length on the circle are
estimated as weight / local atom spacing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import TWO_PI, angle_gap, busemann_array
from .errors import DegenerateInputError, DomainError, PairingError
from .flow import DEFAULT_DT, _hyperbolic_direction, sphere_sweep
from .fuchsian import apply, count_series
from .metric import as_point, hyperbolic_distance


@dataclass(frozen=True)
class BoundaryMeasure:
    basepoint: complex
    R: float
    h: float
    angles: np.ndarray
    weights: np.ndarray
    directions: np.ndarray = field(repr=False, default=None)
    metric_kind: str = "hyperbolic"

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise DomainError("atom weights must be nonnegative")
        order = np.argsort(self.angles, kind="stable")
        object.__setattr__(self, "angles", np.asarray(self.angles, dtype=float)[order])
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float)[order])
        if self.directions is not None:
            object.__setattr__(self, "directions", np.asarray(self.directions, dtype=float)[order])

    @property
    def mass(self):
        return float(np.sum(self.weights))

    def __len__(self):
        return self.angles.size

    def spacing(self):
        """Local arc length per atom, (a_{i+1} - a_{i-1}) / 2 on the circle."""
        a = self.angles
        nxt = np.roll(a, -1)
        nxt[-1] += TWO_PI
        prv = np.roll(a, 1)
        prv[0] -= TWO_PI
        return 0.5 * (nxt - prv)

    def log_density(self):
        return np.log(self.weights) - np.log(self.spacing())

    def normalized(self):
        return self.weights / self.mass

    def to_dict(self):
        return {
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "R": self.R,
            "h": self.h,
            "mass": self.mass,
            "atoms": [{"angle": float(a), "weight": float(w)} for a, w in zip(self.angles, self.weights)],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        atoms = d["atoms"]
        return cls(
            complex(*d["basepoint"]),
            float(d["R"]),
            float(d["h"]),
            np.array([a["angle"] for a in atoms]),
            np.array([a["weight"] for a in atoms]),
        )


@dataclass(frozen=True)
class MargulisEstimate:
    x: complex
    c: float
    t_max: float
    cauchy_gap: float
    c_previous: float
    sphere_mass: float

    @property
    def mass_agrees(self):
        return abs(self.sphere_mass - self.c) <= 2 * self.cauchy_gap

    def to_dict(self):
        return {
            "x": [self.x.real, self.x.imag],
            "c": self.c,
            "tMax": self.t_max,
            "cauchyGap": self.cauchy_gap,
            "cPrevious": self.c_previous,
            "sphereMass": self.sphere_mass,
        }


def sphere_measure(metric, x, R, n_dirs=2048, h=1.0, dt=DEFAULT_DT):
    """nu_x^R from a Jacobi sweep of ``n_dirs`` equally spaced directions."""
    if R < 1:
        raise DomainError("R must be at least 1")
    if h <= 0:
        raise DomainError("h must be positive")
    x = as_point(x)
    _, _, sw = sphere_sweep(metric, x, [R], n_dirs, dt)
    theta = 2 * math.pi * np.arange(n_dirs) / n_dirs
    w = math.exp(-h * R) * sw.J * (2 * math.pi / n_dirs)
    return BoundaryMeasure(x, float(R), float(h), sw.tangent_endpoints(), w, theta, metric.kind)


def pushforward(measure, g):
    """Image of a boundary measure under the isometry ``g`` (basepoint moves with it)."""
    e = np.exp(1j * measure.angles)
    img = np.mod(np.angle(apply(g, e)), TWO_PI)
    return BoundaryMeasure(
        complex(apply(g, measure.basepoint)), measure.R, measure.h, img, measure.weights, None, measure.metric_kind
    )


def _pair(nu_a, nu_b):
    """Index of the nearest atom of ``nu_b`` for each atom of ``nu_a``."""
    b = nu_b.angles
    ext = np.concatenate([b[-1:] - TWO_PI, b, b[:1] + TWO_PI])
    j = np.searchsorted(ext, nu_a.angles)
    left, right = ext[j - 1], ext[np.minimum(j, ext.size - 1)]
    pick = np.where(nu_a.angles - left <= right - nu_a.angles, j - 1, j)
    gap = angle_gap(nu_a.angles, ext[pick])
    grid = 2 * math.pi / len(nu_b)
    if np.any(gap > 2 * grid):
        raise PairingError("unmatched atoms", worst_gap=float(gap.max()), grid=grid)
    return (pick - 1) % len(nu_b)


def log_density_gap(nu_a, nu_b):
    """max |log density_a - log density_b| under nearest-atom pairing."""
    k = _pair(nu_a, nu_b)
    return float(np.max(np.abs(nu_a.log_density() - nu_b.log_density()[k])))


def ps_cocycle_check(nu_p, nu_q, h=None):
    """max over atoms of |log(dnu_q / dnu_p)(xi) + h b_xi(q, p)|.

    Densities are compared at the angle of each q-atom, paired with the nearest
    p-atom.  The Busemann function is the hyperbolic closed form.
    """
    h = nu_p.h if h is None else h
    if nu_p.basepoint == nu_q.basepoint and len(nu_p) == len(nu_q) and np.array_equal(nu_p.angles, nu_q.angles):
        return float(np.max(np.abs(nu_q.log_density() - nu_p.log_density())))
    k = _pair(nu_q, nu_p)
    b = busemann_array(nu_q.angles, nu_q.basepoint, nu_p.basepoint)
    return float(np.max(np.abs(nu_q.log_density() - nu_p.log_density()[k] + h * b)))


def shadow_ratio(nu_p, x, rho=1.0, h=None):
    """nu_p(shadow of B(x, rho) seen from p) * e^{h d(p, x)} on the hyperbolic disk.

    A direction at p at angle Delta from the direction of x passes within
    rho of x iff sinh(rho) >= sinh(d) sin(Delta) (Delta <= pi/2) or d <= rho.
    """
    if nu_p.metric_kind != "hyperbolic":
        raise DomainError("shadow_ratio uses the hyperbolic closed form")
    if nu_p.directions is None:
        raise DomainError("measure carries no initial directions")
    if rho < 1:
        raise DomainError("rho must be at least 1")
    h = nu_p.h if h is None else h
    p, x = nu_p.basepoint, as_point(x)
    d = float(hyperbolic_distance(p, x))
    if d <= rho:
        inside = np.ones(len(nu_p), dtype=bool)
    else:
        delta = angle_gap(nu_p.directions, _hyperbolic_direction(p, x))
        inside = (delta <= math.pi / 2) & (math.sinh(d) * np.sin(delta) <= math.sinh(rho))
    if not inside.any():
        raise DegenerateInputError("empty shadow: increase rho or the number of directions")
    return float(np.sum(nu_p.weights[inside]) * math.exp(h * d))


def normalized_busemann_integral(nu_x, y, h=None):
    """int e^{-h b_xi(y, x)} d(nu_x / mass)(xi); equals c(y)/c(x) in the limit."""
    h = nu_x.h if h is None else h
    b = busemann_array(nu_x.angles, as_point(y), nu_x.basepoint)
    return float(np.sum(np.exp(-h * b) * nu_x.normalized()))


def margulis_c(metric, x, h=1.0, t_max=10.0, n_dirs=360, dt=DEFAULT_DT):
    """c(x) ~ h b_t(x) e^{-ht} at t = t_max, with the Cauchy gap against t = 0.8 t_max.

    The sphere mass e^{-h t_max} s_{t_max}(x) comes from the same sweep.
    """
    if h <= 0 or t_max <= 0:
        raise DomainError("h and t_max must be positive")
    x = as_point(x)
    t_prev = 0.8 * t_max
    s, b, _ = sphere_sweep(metric, x, [t_prev, t_max], n_dirs, dt)
    c_prev = h * b[0] * math.exp(-h * t_prev)
    c = h * b[1] * math.exp(-h * t_max)
    mass = s[1] * math.exp(-h * t_max)
    return MargulisEstimate(x, float(c), float(t_max), float(abs(c - c_prev)), float(c_prev), float(mass))


@dataclass(frozen=True)
class MargulisXY:
    value: float
    mass_x: float
    busemann_sum: float
    R: float


def margulis_c_xy(metric, x, y, h=1.0, R=10.0, n_dirs=1024, dt=DEFAULT_DT, nu_x=None):
    """c(x, y) with mu~_y the push of nu_x to directions at y (p = x).

    The double sum factorizes into mass(nu_x) * sum_xi e^{-h b_xi(y, x)} w_x(xi).
    On the hyperbolic disk b is the closed form; otherwise the density property
    is used and the second factor is the mass of nu_y.
    """
    x, y = as_point(x), as_point(y)
    if nu_x is None:
        nu_x = sphere_measure(metric, x, R, n_dirs, h, dt)
    if metric.kind == "hyperbolic":
        second = float(np.sum(np.exp(-h * busemann_array(nu_x.angles, y, x)) * nu_x.weights))
    else:
        second = sphere_measure(metric, y, R, n_dirs, h, dt).mass
    return MargulisXY(nu_x.mass * second, nu_x.mass, second, float(R))


@dataclass(frozen=True)
class KappaEstimate:
    kappa: float
    c_xy: float
    count_ratios: tuple
    t_samples: tuple


def calibrate_kappa(metric, group, x, y, h=1.0, R=10.0, n_dirs=1024, t_grid=(11.0, 12.0, 13.0), budget=None, dt=DEFAULT_DT):
    """kappa with kappa^2 = mean over the top three t of h a_t(x, y) e^{-ht} / c_nu(x, y)."""
    t_grid = tuple(float(t) for t in t_grid)
    if len(t_grid) < 3:
        raise DegenerateInputError("counting series too short for calibration")
    kwargs = {} if budget is None else {"budget": budget}
    series = count_series(group, as_point(x), as_point(y), t_grid, **kwargs)
    top = np.arange(len(t_grid))[-3:]
    ratios = tuple(float(h * series.value[i] * math.exp(-h * series.t[i])) for i in top)
    cxy = margulis_c_xy(metric, x, y, h, R, n_dirs, dt).value
    kappa = math.sqrt(float(np.mean(ratios)) / cxy)
    return KappaEstimate(kappa, cxy, ratios, tuple(float(series.t[i]) for i in top))
