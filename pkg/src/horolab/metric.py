"""Conformal metrics lambda(z)^2 |dz|^2 on the open unit disk.

Points are Python complex numbers ``u + iv``.  Two kinds are provided: the
hyperbolic metric ``2 / (1 - |z|^2)`` and a perturbation of it by a bump
function summed over a Fuchsian orbit, which is exactly invariant under the
group and has variable curvature K <= 0.

Gradients are encoded as complex numbers ``d/du + i d/dv``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, HorizonError, MetricInvalidError

HORIZON = 1 - 1e-12
RECENTER_RADIUS = 0.95
# hyperbolic radius around 0 that a recentred frame never leaves
FRAME_COVER = 4.2
VALIDATION_GRID = 200
VALIDATION_KMAX = -1e-6


def as_point(p):
    """Coerce ``complex``, ``(u, v)`` or a 2-array into a complex point in the open disk."""
    if isinstance(p, complex):
        z = p
    elif np.ndim(p) == 0:
        z = complex(p)
    else:
        u, v = p
        z = complex(float(u), float(v))
    if not abs(z) < 1:
        raise DomainError(f"point {z} is not in the open unit disk")
    return z


def one_minus_abs2(z):
    r = np.abs(z)
    return (1 - r) * (1 + r)


def hyperbolic_distance(x, y):
    """Hyperbolic distance in the disk, d = 2 asinh(|x - y| / sqrt((1-|x|^2)(1-|y|^2)))."""
    sx, sy = one_minus_abs2(x), one_minus_abs2(y)
    if np.any(sx <= 0) or np.any(sy <= 0):
        raise DomainError("hyperbolic_distance needs points in the open disk")
    return 2 * np.arcsinh(np.abs(np.subtract(x, y)) / np.sqrt(sx * sy))


# --- bump profile phi(r) = (1 - (r/r0)^2)^3 on [0, r0] ---------------------------


def bump(r, r0):
    s = (r / r0) ** 2
    return np.where(r < r0, (1 - s) ** 3, 0.0)


def bump_laplacian(r, r0):
    """Hyperbolic Laplacian phi'' + coth(r) phi' of the radial bump."""
    s = (r / r0) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        r_coth = np.where(r > 1e-8, r / np.tanh(r), 1.0)
    val = -6 * (1 - s) ** 2 / r0**2 + 24 * r**2 * (1 - s) / r0**4 - 6 * r_coth * (1 - s) ** 2 / r0**2
    return np.where(r < r0, val, 0.0)


class HyperbolicMetric:
    """Constant curvature -1."""

    kind = "hyperbolic"
    eps = 0.0
    frame_limit = HORIZON

    def factor(self, z):
        return 2 / one_minus_abs2(z)

    def log_factor_grad(self, z):
        return 2 * z / one_minus_abs2(z)

    def curvature(self, z):
        return -np.ones(np.shape(z))

    def local(self, z, curvature=True):
        sz = one_minus_abs2(z)
        K = -np.ones(np.shape(z)) if curvature else None
        return 2 / sz, 2 * z / sz, K

    def recenter(self, w, theta):
        """Move frames with |w| > 0.95 to the origin by z -> (z - w)/(1 - conj(w) z).

        These maps preserve directions at w, so theta is unchanged.  Returns
        ``(w, theta, moved, a, b)`` where ``(a, b)`` is the isometry applied
        to the moved entries.
        """
        moved = np.abs(w) > RECENTER_RADIUS
        if not moved.any():
            return w, theta, moved, None, None
        wm = w[moved]
        s = np.sqrt(one_minus_abs2(wm))
        a, b = 1 / s + 0j, -wm / s
        w = w.copy()
        w[moved] = 0
        return w, theta, moved, a, b

    def describe(self):
        return {"kind": "hyperbolic"}


class PerturbedMetric:
    """lambda = lambda_hyp * exp(-eps * S) with S the group-invariant bump sum.

    S(z) = sum over gamma of phi(d(z, gamma z0)).  Curvature is
    K = exp(2 eps S) * (-1 + eps * Lap_hyp S), evaluated analytically.  The
    construction is rejected when K > -1e-6 anywhere on a 200x200 grid over
    the octagon's bounding box.
    """

    kind = "perturbed"

    def __init__(self, group, eps=0.01, bump_radius=0.3, bump_center=0.3 + 0.2j, validate=True):
        from .fuchsian import enumerate_orbit

        if eps < 0:
            raise DomainError("perturbation amplitude must be nonnegative")
        if not 0 < bump_radius < group.translation_length / 2:
            raise DomainError("bump radius must be in (0, translation_length / 2)")
        self.group = group
        self.eps = float(eps)
        self.bump_radius = float(bump_radius)
        self.bump_center = as_point(bump_center)
        self.frame_limit = math.tanh(FRAME_COVER / 2)
        ball = enumerate_orbit(group, 0j, self.bump_center, FRAME_COVER + self.bump_radius)
        self.centers = ball.points.copy()
        self._sc = one_minus_abs2(self.centers)
        self._u2max = math.sinh(self.bump_radius / 2) ** 2
        self.k_min = self.k_max = None
        if validate:
            self._validate()

    def _validate(self, n=VALIDATION_GRID):
        rho = abs(self.group.octagon[0])
        g = np.linspace(-rho, rho, n)
        z = (g[:, None] + 1j * g[None, :]).ravel()
        z = z[np.abs(z) < 1]
        k = self.curvature(z)
        self.k_min, self.k_max = float(k.min()), float(k.max())
        if self.k_max > VALIDATION_KMAX:
            raise MetricInvalidError(
                f"max curvature {self.k_max:.3g} > {VALIDATION_KMAX} for eps={self.eps}, "
                f"r0={self.bump_radius}"
            )

    # frame-local evaluation: |z| <= frame_limit so the centre list covers every bump
    def _check_frame(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z) > self.frame_limit):
            raise HorizonError("point lies outside the recentred frame cover")
        return z

    def _reduce(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(one_minus_abs2(z) <= 0):
            raise DomainError("point is not in the open unit disk")
        far = np.abs(z) > self.frame_limit
        if far.any():
            z = z.copy()
            z[far] = self.group.reduce_batch(z[far])[0]
        return z

    def local(self, z, curvature=True):
        """``(lambda, grad log lambda, K)`` at frame points; K is None unless requested.

        Only (point, centre) pairs inside a bump support are evaluated.
        """
        z = self._check_frame(z)
        shape = z.shape
        z = z.ravel()
        sz = one_minus_abs2(z)
        diff = z[:, None] - self.centers[None, :]
        d2 = diff.real**2 + diff.imag**2
        U = d2 / (sz[:, None] * self._sc[None, :])
        i, j = np.nonzero(U < self._u2max)
        S = np.zeros(z.size)
        grad = 2 * z / sz
        lap = None
        if i.size:
            Ui, r0 = U[i, j], self.bump_radius
            u = np.sqrt(Ui)
            r = 2 * np.arcsinh(u)
            q = 1 - (r / r0) ** 2
            S += np.bincount(i, q**3, minlength=z.size)
            with np.errstate(invalid="ignore", divide="ignore"):
                dr_dU = np.where(u > 1e-150, 1 / (u * np.sqrt(1 + u * u)), 0.0)
            # grad U = (2 diff sz + 2 z |diff|^2) / (sz^2 sc)
            gU = 2 * (diff[i, j] * sz[i] + z[i] * d2[i, j]) / (sz[i] ** 2 * self._sc[j])
            dphi = -6 * r * q**2 / r0**2
            g = dphi * dr_dU * gU
            grad = grad - self.eps * (
                np.bincount(i, g.real, minlength=z.size) + 1j * np.bincount(i, g.imag, minlength=z.size)
            )
            if curvature:
                lap = np.bincount(i, bump_laplacian(r, r0), minlength=z.size)
        lam = 2 / sz * np.exp(-self.eps * S)
        K = None
        if curvature:
            K = np.exp(2 * self.eps * S) * (-1 + self.eps * (lap if lap is not None else 0.0))
            K = K.reshape(shape)
        return lam.reshape(shape), grad.reshape(shape), K

    def bump_sum(self, z):
        return self._raw_sum(self._reduce(z))

    def _raw_sum(self, z):
        U = np.abs(z[..., None] - self.centers) ** 2 / (one_minus_abs2(z)[..., None] * self._sc)
        r = 2 * np.arcsinh(np.sqrt(U))
        return bump(r, self.bump_radius).sum(axis=-1)

    def factor(self, z):
        z = self._reduce(z)
        return 2 / one_minus_abs2(z) * np.exp(-self.eps * self._raw_sum(z))

    def log_factor_grad(self, z):
        return self.local(z, curvature=False)[1]

    def curvature(self, z):
        return self.local(self._reduce(z))[2]

    def recenter(self, w, theta):
        """Pull frames with |w| > 0.95 back into the Dirichlet octagon by group elements."""
        moved = np.abs(w) > RECENTER_RADIUS
        if not moved.any():
            return w, theta, moved, None, None
        wm = w[moved]
        wr, a, b = self.group.reduce_batch(wm)
        w = w.copy()
        theta = theta.copy()
        w[moved] = wr
        theta[moved] = theta[moved] - 2 * np.angle(np.conj(b) * wm + np.conj(a))
        return w, theta, moved, a, b

    @property
    def factor_deviation(self):
        """max |lambda_pert / lambda_hyp - 1| = 1 - exp(-eps) since 0 <= S <= 1."""
        return 1 - math.exp(-self.eps)

    def describe(self):
        return {
            "kind": "perturbed",
            "eps": self.eps,
            "bump_radius": self.bump_radius,
            "bump_center": [self.bump_center.real, self.bump_center.imag],
        }


def conformal_factor(metric, z):
    return float(metric.factor(np.array([as_point(z)]))[0])


def curvature_at(metric, z):
    k = float(metric.curvature(np.array([as_point(z)]))[0])
    if k > 1e-9:
        raise MetricInvalidError(f"positive curvature {k} at {z}")
    return k


def curvature_fd(metric, z, step=1e-4):
    """Finite-difference oracle K = -lambda^-2 Lap log lambda (5-point stencil).

    Truncation error is O(step^2) times the fourth derivatives of log lambda;
    with step 1e-4 roundoff contributes about 1e-16 / step^2 = 1e-8.
    """
    z = as_point(z)
    pts = np.array([z, z + step, z - step, z + 1j * step, z - 1j * step])
    f = np.log(metric.factor(pts))
    lap = (f[1] + f[2] + f[3] + f[4] - 4 * f[0]) / step**2
    return float(-lap / np.exp(2 * f[0]))


def invariant_bump_sum(group, z, r0, z0):
    """Sum of phi(d(z, gamma z0)) over every orbit point within r0 of z.

    Enumerates the orbit around ``z`` directly, independent of the reduction
    used inside :class:`PerturbedMetric`.
    """
    from .fuchsian import enumerate_orbit

    z = as_point(z)
    ball = enumerate_orbit(group, z, as_point(z0), r0)
    return float(bump(ball.distances, r0).sum())


def perturbed_distance(metric, x, y, tol=1e-10):
    """Riemannian distance by shooting geodesics from x towards y."""
    from .flow import shoot_distance

    if metric.kind != "perturbed":
        raise DomainError("perturbed_distance needs a perturbed metric")
    return shoot_distance(metric, as_point(x), as_point(y), tol=tol)


def distance(metric, x, y):
    """Closed form for the hyperbolic metric, shooting otherwise."""
    if metric.kind == "hyperbolic":
        return float(hyperbolic_distance(as_point(x), as_point(y)))
    return perturbed_distance(metric, x, y)
