"""Entropy fits, horocycle-curvature averages and the two-dimensional rigidity identities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError
from .flow import DEFAULT_DT, riccati_limit, sphere_sweep
from .fuchsian import build_genus2_group
from .measures import sphere_measure
from .metric import as_point, one_minus_abs2
from .series import GrowthSeries

__all__ = [
    "GrowthSeries",
    "EntropyEstimate",
    "growth_series",
    "entropy_fit",
    "tr_u_average",
    "rigidity_defect",
    "gauss_bonnet_check",
    "domain_volume",
    "katok_identity",
    "EULER_CHARACTERISTIC",
]

EULER_CHARACTERISTIC = -2


@dataclass(frozen=True)
class EntropyEstimate:
    h: float
    window: tuple
    fit_residual: float
    intercept: float
    n_samples: int

    def to_dict(self):
        return {
            "h": self.h,
            "window": list(self.window),
            "fitResidual": self.fit_residual,
            "intercept": self.intercept,
            "nSamples": self.n_samples,
        }


def growth_series(metric, x, t_grid, n_dirs=360, dt=DEFAULT_DT):
    """Sphere-area and ball-volume series from one Jacobi sweep."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise DomainError("growth series need positive times")
    s, b, _ = sphere_sweep(metric, as_point(x), t_grid, n_dirs, dt)
    return GrowthSeries(t_grid, s, "sphereArea"), GrowthSeries(t_grid, b, "ballVolume")


def entropy_fit(series, window=None):
    """Least-squares slope of log(value) against t over ``window``.

    The default window is [0.6 tMax, tMax].  The residual is the largest
    absolute deviation of log(value) from the fitted line.
    """
    if window is None:
        t_max = float(series.t[-1])
        window = (0.6 * t_max, t_max)
    t, v = series.window(*window)
    if t.size < 5:
        raise DegenerateInputError(f"window {window} holds {t.size} samples, need at least 5")
    if np.any(v <= 0):
        raise DomainError("entropy fit needs positive values")
    y = np.log(v)
    slope, intercept = np.polyfit(t, y, 1)
    resid = float(np.max(np.abs(y - (slope * t + intercept))))
    if slope <= 0:
        raise DomainError("fitted growth rate is not positive")
    return EntropyEstimate(float(slope), (float(window[0]), float(window[1])), resid, float(intercept), int(t.size))


# --- Liouville sampling in the octagon ------------------------------------------


def sample_octagon(group, n, rng):
    """Hyperbolic-area uniform points in the Dirichlet octagon (rejection from a hyperbolic disk)."""
    rc = group.circumradius
    out = []
    while len(out) < n:
        m = 2 * (n - len(out)) + 16
        d = np.arccosh(1 + rng.random(m) * (math.cosh(rc) - 1))
        z = np.tanh(d / 2) * np.exp(2j * math.pi * rng.random(m))
        for p in z:
            if group.contains(p) and len(out) < n:
                out.append(p)
    return np.array(out)


def tr_u_average(metric, n_geodesics=64, T=20.0, seed=0, group=None, dt=1e-2, details=False):
    """Average of the horocycle curvature tr U over Liouville-distributed unit vectors.

    Base points are uniform for the metric's area in the octagon (hyperbolic
    samples reweighted by (lambda / lambda_hyp)^2) and directions are uniform.
    With ``details`` the average of -tr U' + (tr U)^2 is returned as well.
    """
    if n_geodesics < 1:
        raise DomainError("need at least one geodesic")
    if group is None:
        group = getattr(metric, "group", None) or build_genus2_group()
    rng = np.random.default_rng(seed)
    base = sample_octagon(group, n_geodesics, rng)
    theta = 2 * math.pi * rng.random(n_geodesics)
    wts = metric.factor(base) * one_minus_abs2(base) / 2
    wts = wts**2 / np.sum(wts**2)
    res = riccati_limit(metric, base, theta, T, dt)
    value = float(np.sum(wts * res["U"]))
    if not details:
        return value
    return {
        "trU": value,
        "second": float(np.sum(wts * res["second"])),
        "sqrt_minus_k_min": float(np.sqrt(-res["k_max"].max())),
        "sqrt_minus_k_max": float(np.sqrt(-res["k_min"].min())),
        "horizon": res["horizon"],
        "nGeodesics": int(n_geodesics),
        "seed": int(seed),
    }


def rigidity_defect(metric, x, h=1.0, R=10.0, n_dirs=256, T=20.0, dt=1e-2, details=False):
    """|h - sum_i trU(x, xi_i) mubar_i| with mubar the normalized sphere measure at x."""
    x = as_point(x)
    nu = sphere_measure(metric, x, R, n_dirs, h, dt)
    res = riccati_limit(metric, np.full(n_dirs, x), nu.directions, T, dt)
    integral = float(np.sum(res["U"] * nu.normalized()))
    defect = abs(h - integral)
    if details:
        return {"defect": defect, "integral": integral, "trU_min": float(res["U"].min()), "trU_max": float(res["U"].max())}
    return defect


# --- quadrature over the octagon ----------------------------------------------------


def _octagon_cells(group, n_radial, n_angular):
    """Midpoints and hyperbolic areas of polar cells filling the octagon.

    The octagon is the union of 8 geodesic triangles (0, v_k, v_{k+1}).  Rays
    from 0 are geodesics; the side opposite 0 lies on the circle orthogonal to
    the unit circle with centre distance c = (1 + s^2)/(2s), s = tanh(r_in/2),
    so the ray at angle offset D from the side normal leaves the triangle at
    Euclidean radius c cos D - sqrt(c^2 cos^2 D - 1).
    """
    s0 = math.tanh(group.inradius / 2)
    c = (1 + s0 * s0) / (2 * s0)
    half = math.pi / 8
    # angular midpoints within one sector, offset from the side normal
    da = 2 * half / n_angular
    off = -half + (np.arange(n_angular) + 0.5) * da
    cosd = np.cos(off)
    t_edge = c * cosd - np.sqrt(c * c * cosd * cosd - 1)
    d_edge = 2 * np.arctanh(t_edge)
    u = (np.arange(n_radial) + 0.5) / n_radial
    d = d_edge[:, None] * u[None, :]
    dd = d_edge[:, None] / n_radial
    area = np.sinh(d) * dd * da
    pts, areas = [], []
    for k in range(8):
        phi = k * math.pi / 4 + off
        pts.append(np.tanh(d / 2) * np.exp(1j * phi)[:, None])
        areas.append(area)
    return np.concatenate([p.ravel() for p in pts]), np.concatenate([a.ravel() for a in areas])


def domain_volume(metric, group, n_radial=35, n_angular=35):
    """Riemannian area of the octagon by midpoint quadrature."""
    z, area = _octagon_cells(group, n_radial, n_angular)
    ratio = metric.factor(z) * one_minus_abs2(z) / 2
    return float(np.sum(ratio**2 * area))


def gauss_bonnet_check(metric, group, n_radial=35, n_angular=35):
    """int_F (-K) dVol over the octagon; 4 pi for genus 2."""
    z, area = _octagon_cells(group, n_radial, n_angular)
    ratio = metric.factor(z) * one_minus_abs2(z) / 2
    return float(np.sum(-metric.curvature(z) * ratio**2 * area))


def katok_identity(metric, group, h, volume=None, euler=EULER_CHARACTERISTIC):
    """h^2 Vol(M) / (-2 pi E); equal to 1 exactly for constant curvature -1 surfaces."""
    if volume is None:
        volume = domain_volume(metric, group)
    return float(h * h * volume / (-2 * math.pi * euler))
