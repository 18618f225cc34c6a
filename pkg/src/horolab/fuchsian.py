"""Genus-2 Fuchsian group: disk isometries, the regular octagon, orbit enumeration.

Isometries of the unit disk are stored as SU(1,1) pairs ``(a, b)`` acting by
``z -> (a z + b) / (conj(b) z + conj(a))``.  The group is generated by the
eight side pairings of the regular octagon with interior angles pi/4; the
generator with index ``k`` translates the origin towards the midpoint of
side ``k`` (direction ``k * pi / 4``) and index ``(k + 4) % 8`` is its inverse.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DomainError, NumericFailure
from .metric import as_point, hyperbolic_distance, one_minus_abs2
from .series import GrowthSeries

DEFAULT_BUDGET = 5_000_000
# long words carry relative rounding error of order |a|^2 * eps, distinct
# elements differ by O(1), so a loose tolerance is safe
DEDUPE_RTOL = 1e-6
LETTERS = "abcdABCD"

# generic weights for the sort key used by the tolerant dedupe
_KEY_WEIGHTS = (0.7548776662466927, 0.3183098861837907, 0.5772156649015329, 0.2887880950866024)


@dataclass(frozen=True)
class Isometry:
    a: complex
    b: complex

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other):
        return compose(self, other)

    def inverse(self):
        return inverse(self)

    @property
    def det(self):
        return abs(self.a) ** 2 - abs(self.b) ** 2

    def matrix(self):
        return np.array([[self.a, self.b], [self.b.conjugate(), self.a.conjugate()]])

    def close_to(self, other, tol=1e-12, projective=True):
        d = abs(self.a - other.a) + abs(self.b - other.b)
        if projective:
            d = min(d, abs(self.a + other.a) + abs(self.b + other.b))
        return d <= tol


IDENTITY = Isometry(1 + 0j, 0j)


def apply(g, z):
    """Moebius action of ``g`` on a point or an array of points."""
    if isinstance(z, (complex, float, int)) or np.ndim(z) == 0:
        z = complex(z)
        return (g.a * z + g.b) / (g.b.conjugate() * z + g.a.conjugate())
    z = np.asarray(z, dtype=complex)
    return (g.a * z + g.b) / (np.conj(g.b) * z + np.conj(g.a))


def _normalize(a, b):
    s = math.sqrt(abs(a) ** 2 - abs(b) ** 2)
    return Isometry(complex(a / s), complex(b / s))


def compose(g, h):
    """``g @ h``: apply ``h`` first.  Renormalizes |a|^2 - |b|^2 = 1."""
    a = g.a * h.a + g.b * h.b.conjugate()
    b = g.a * h.b + g.b * h.a.conjugate()
    return _normalize(a, b)


def inverse(g):
    return Isometry(g.a.conjugate(), -g.b)


def translation_to_origin(w):
    """The isometry z -> (z - w) / (1 - conj(w) z); it fixes directions at w."""
    s = math.sqrt(one_minus_abs2(w))
    return Isometry(complex(1 / s), complex(-w / s))


def moebius_derivative_arg(a, b, z):
    """arg of the derivative of (a, b) at z; works on arrays."""
    return -2.0 * np.angle(np.conj(b) * z + np.conj(a))


@dataclass(frozen=True)
class SurfaceGroup:
    generators: tuple
    octagon: np.ndarray
    relation_word: tuple
    circumradius: float
    inradius: float
    _ga: np.ndarray = field(repr=False, compare=False, default=None)
    _gb: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "_ga", np.array([g.a for g in self.generators]))
        object.__setattr__(self, "_gb", np.array([g.b for g in self.generators]))

    @property
    def translation_length(self):
        return 2.0 * self.inradius

    @staticmethod
    def inverse_index(k):
        return (k + 4) % 8

    def word(self, indices):
        g = IDENTITY
        for k in indices:
            g = compose(g, self.generators[k])
        return g

    def relation_product(self):
        return self.word(self.relation_word)

    def interior_angles(self):
        """Angle of the octagon at each vertex, measured after moving the vertex to 0."""
        v = self.octagon
        angles = []
        for k in range(8):
            t = translation_to_origin(v[k])
            prev, nxt = apply(t, v[k - 1]), apply(t, v[(k + 1) % 8])
            ang = abs(np.angle(nxt / prev))
            angles.append(ang)
        return np.array(angles)

    def area(self):
        """Hyperbolic area from the angle defect of the measured interior angles."""
        return 6 * math.pi - float(self.interior_angles().sum())

    def contains(self, z, tol=1e-9):
        """Closed Dirichlet domain test: d(0, z) <= d(0, g z) for all generators."""
        z = np.asarray(z, dtype=complex)
        d0 = hyperbolic_distance(0j, z)
        for k in range(8):
            if np.any(hyperbolic_distance(0j, apply(self.generators[k], z)) < d0 - tol):
                return False
        return True

    def reduce_batch(self, z, max_iter=200):
        """Vectorized greedy descent into the Dirichlet domain.

        Returns ``(z_reduced, a, b)`` with ``z_reduced = (a z + b)/(conj(b) z + conj(a))``.
        """
        z = np.array(z, dtype=complex, copy=True)
        a = np.ones_like(z)
        b = np.zeros_like(z)
        ga, gb = self._ga, self._gb
        active = np.ones(z.shape, dtype=bool)
        for _ in range(max_iter):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                return z, a, b
            w = z[idx]
            images = (ga[None, :] * w[:, None] + gb[None, :]) / (
                np.conj(gb)[None, :] * w[:, None] + np.conj(ga)[None, :]
            )
            # d(0, .) is monotone in |.|; compare radii directly
            r_img = np.abs(images)
            best = np.argmin(r_img, axis=1)  # first index wins ties
            r_best = r_img[np.arange(idx.size), best]
            improve = r_best < np.abs(w) - 1e-15
            done = idx[~improve]
            active[done] = False
            mv = idx[improve]
            k = best[improve]
            z[mv] = images[improve, k]
            # accumulate: new = g_k o old
            a_old, b_old = a[mv], b[mv]
            a[mv] = ga[k] * a_old + gb[k] * np.conj(b_old)
            b[mv] = ga[k] * b_old + gb[k] * np.conj(a_old)
        raise NumericFailure("reduce_to_domain did not terminate", remaining=int(active.sum()))


def build_genus2_group():
    """Regular octagon with interior angle pi/4 and its eight side pairings."""
    n, target = 8, math.pi / 4

    def angle_at(r):
        # right triangle centre / vertex / side midpoint: cosh r = cot(pi/n) cot(alpha/2)
        return 2 * math.atan(1 / (math.cosh(r) * math.tan(math.pi / n)))

    lo, hi = 0.1, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if angle_at(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    else:
        raise NumericFailure("circumradius bisection did not converge")
    rc = 0.5 * (lo + hi)
    ri = math.atanh(math.tanh(rc) * math.cos(math.pi / n))
    rho = math.tanh(rc / 2)
    octagon = rho * np.exp(1j * (2 * np.arange(8) + 1) * math.pi / 8)
    gens = tuple(
        Isometry(complex(math.cosh(ri)), complex(math.sinh(ri) * np.exp(1j * k * math.pi / 4)))
        for k in range(8)
    )
    group = SurfaceGroup(gens, octagon, (0, 3, 6, 1, 4, 7, 2, 5), rc, ri)
    _validate(group)
    return group


def _validate(group):
    if not group.relation_product().close_to(IDENTITY, tol=1e-9):
        raise NumericFailure("surface relation does not close", product=str(group.relation_product()))
    if np.max(np.abs(group.interior_angles() - math.pi / 4)) > 1e-9:
        raise NumericFailure("octagon angles are not pi/4")
    if abs(group.area() - 4 * math.pi) > 1e-8:
        raise NumericFailure("octagon area is not 4 pi")
    for g in group.generators:
        if abs(g.det - 1) > 1e-12:
            raise NumericFailure("generator is not normalized")


def reduce_to_domain(group, z):
    """Return ``(z', gamma)`` with ``z' = gamma(z)`` in the closed Dirichlet octagon."""
    z = as_point(z)
    zr, a, b = group.reduce_batch(np.array([z]))
    return complex(zr[0]), Isometry(complex(a[0]), complex(b[0]))


@dataclass
class OrbitBall:
    """Orbit points gamma y within distance ``radius`` of ``center``."""

    center: complex
    seed: complex
    radius: float
    points: np.ndarray
    distances: np.ndarray
    word_lengths: np.ndarray
    _parent: np.ndarray = field(repr=False)
    _letter: np.ndarray = field(repr=False)
    _node: np.ndarray = field(repr=False)
    complete: bool = True
    nodes_expanded: int = 0

    def __len__(self):
        return len(self.points)

    def count(self, t):
        return int(np.searchsorted(self.distances, t, side="right"))

    def words(self):
        out = []
        for node in self._node:
            letters = []
            while self._parent[node] >= 0:
                letters.append(LETTERS[self._letter[node]])
                node = self._parent[node]
            out.append("".join(reversed(letters)) or "e")
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gamma_word", "x_re", "x_im", "dist"])
            for word, p, d in zip(self.words(), self.points, self.distances):
                w.writerow([word, repr(float(p.real)), repr(float(p.imag)), repr(float(d))])


def default_margin(group, x, y):
    """Provably sufficient pruning margin for the breadth-first enumeration.

    If x and y lie in the octagon F, the segment from x to gamma y crosses a
    chain of tiles F = tau_0 F, ..., tau_k F = gamma F in which consecutive
    tiles share a side, so consecutive tau differ by a generator.  A point p
    of the segment lies in tau F, hence d(x, tau y) <= d(x, p) + d(p, tau 0)
    + d(0, y) <= R + circumradius + |y|.  For general x, y every gamma with
    d(x, gamma y) <= R has d(0, gamma 0) <= R + |x| + |y| and the same chain
    argument from 0 gives R + circumradius + 2(|x| + |y|).
    """
    if group.contains(x) and group.contains(y):
        return group.circumradius + hyperbolic_distance(0j, y) + 1e-9
    return group.circumradius + 2 * (hyperbolic_distance(0j, x) + hyperbolic_distance(0j, y)) + 1e-9


def _dedupe_new(ca, cb, ra, rb, rtol=DEDUPE_RTOL):
    """Mask of candidates (ca, cb) that are new w.r.t. (ra, rb) and each other.

    Elements are compared up to sign with tolerance ``rtol * |a|``.
    """
    n_ref = ra.size
    va = np.concatenate([ra, ca])
    vb = np.concatenate([rb, cb])
    w0, w1, w2, w3 = _KEY_WEIGHTS
    key = np.abs(w0 * va.real + w1 * va.imag + w2 * vb.real + w3 * vb.imag)
    scale = np.abs(va)
    order = np.argsort(key, kind="stable")
    ks, sa, sb, ss = key[order], va[order], vb[order], scale[order]
    dup = np.zeros(va.size, dtype=bool)
    m = ks.size
    j = 1
    while j < m:
        win = (ks[j:] - ks[:-j]) <= 4 * rtol * ss[:-j]
        if not win.any():
            break
        i = np.nonzero(win)[0]
        k = i + j
        tol = rtol * np.maximum(ss[i], ss[k])
        same = np.minimum(
            np.abs(sa[i] - sa[k]) + np.abs(sb[i] - sb[k]),
            np.abs(sa[i] + sa[k]) + np.abs(sb[i] + sb[k]),
        ) <= tol
        i, k = order[i[same]], order[k[same]]
        # keep references and, among candidates, the first occurrence
        loser = np.where((i < n_ref) | ((k >= n_ref) & (i < k)), k, i)
        dup[loser] = True
        j += 1
    return ~dup[n_ref:]


def enumerate_orbit(group, x, y, radius, margin=None, budget=DEFAULT_BUDGET):
    """Breadth-first search over reduced words collecting gamma y with d(x, gamma y) <= radius.

    A word is expanded only while d(x, gamma y) <= radius + margin.  Since
    neighbours of a node discovered in layer k live in layers k-1, k or k+1,
    duplicates are resolved against the two most recent layers only.
    """
    x, y = as_point(x), as_point(y)
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    if margin is None:
        margin = default_margin(group, x, y)
    if margin < 0:
        raise DomainError("margin must be nonnegative")
    bound = radius + margin
    ga, gb = group._ga, group._gb
    inv_of = np.array([SurfaceGroup.inverse_index(k) for k in range(8)])
    sx = one_minus_abs2(x)
    sy = one_minus_abs2(y)

    A = [np.array([1 + 0j])]
    B = [np.array([0j])]
    P = [np.array([-1])]
    L = [np.array([-1], dtype=np.int8)]
    D = [np.array([hyperbolic_distance(x, y)])]
    W = [np.array([0])]
    total = 1
    prev_a = prev_b = np.empty(0, dtype=complex)
    cur_a, cur_b, cur_last = A[0], B[0], L[0]
    cur_offset = 0
    depth = 0
    complete = True
    while cur_a.size:
        depth += 1
        na = cur_a[:, None] * ga[None, :] + cur_b[:, None] * np.conj(gb)[None, :]
        nb = cur_a[:, None] * gb[None, :] + cur_b[:, None] * np.conj(ga)[None, :]
        parent = np.broadcast_to(np.arange(cur_a.size)[:, None] + cur_offset, na.shape)
        letter = np.broadcast_to(np.arange(8, dtype=np.int8)[None, :], na.shape)
        reduced = letter != np.where(cur_last[:, None] >= 0, inv_of[cur_last.clip(0)][:, None], -1)
        na, nb, parent, letter = na[reduced], nb[reduced], parent[reduced], letter[reduced]
        den = np.conj(nb) * y + np.conj(na)
        img = (na * y + nb) / den
        s_img = sy / np.abs(den) ** 2
        dist = 2 * np.arcsinh(np.abs(x - img) / np.sqrt(sx * s_img))
        keep = dist <= bound
        na, nb, parent, letter, img, dist = na[keep], nb[keep], parent[keep], letter[keep], img[keep], dist[keep]
        norm = np.sqrt(np.abs(na) ** 2 - np.abs(nb) ** 2)
        na, nb = na / norm, nb / norm
        fresh = _dedupe_new(na, nb, np.concatenate([prev_a, cur_a]), np.concatenate([prev_b, cur_b]))
        na, nb, parent, letter, dist = na[fresh], nb[fresh], parent[fresh], letter[fresh], dist[fresh]
        prev_a, prev_b = cur_a, cur_b
        cur_offset = total
        cur_a, cur_b, cur_last = na, nb, letter
        A.append(na)
        B.append(nb)
        P.append(parent)
        L.append(letter)
        D.append(dist)
        W.append(np.full(na.size, depth))
        total += na.size
        if total > budget:
            complete = False
            break

    a_all, b_all = np.concatenate(A), np.concatenate(B)
    d_all = np.concatenate(D)
    sel = np.nonzero(d_all <= radius)[0]
    sel = sel[np.argsort(d_all[sel], kind="stable")]
    pts = (a_all[sel] * y + b_all[sel]) / (np.conj(b_all[sel]) * y + np.conj(a_all[sel]))
    ball = OrbitBall(
        center=x,
        seed=y,
        radius=float(radius),
        points=pts,
        distances=d_all[sel],
        word_lengths=np.concatenate(W)[sel],
        _parent=np.concatenate(P),
        _letter=np.concatenate(L),
        _node=sel,
        complete=complete,
        nodes_expanded=total,
    )
    if not complete:
        raise BudgetExceeded(f"orbit enumeration exceeded budget of {budget} words", partial=ball)
    return ball


def count_series(group, x, y, t_grid, margin=None, budget=DEFAULT_BUDGET):
    """a_t(x, y) on ``t_grid`` from a single enumeration at the largest radius.

    x is first moved into the octagon by a group element h, and hy is replaced
    by its representative in the octagon; counts are unchanged by either step.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be a nonempty increasing sequence")
    # a_t(x, y) = a_t(hx, hy) because h Gamma h^-1 = Gamma, and the orbit of y
    # is that of any translate; with both points in the octagon the pruning
    # margin is small
    x, y = as_point(x), as_point(y)
    x, h = reduce_to_domain(group, x)
    y, _ = reduce_to_domain(group, complex(apply(h, y)))
    ball = enumerate_orbit(group, x, y, float(t_grid[-1]), margin=margin, budget=budget)
    counts = np.searchsorted(ball.distances, t_grid, side="right")
    return GrowthSeries(t_grid, counts.astype(float), "orbitCount")
