"""Bounded convex domains with analytic ray-exit distances.

Domains are described by closed-form boundary formulas rather than meshes, so
the exit distance along a ray is available to machine precision and varies
continuously with the base point and direction.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from .errors import InvalidInput, PreconditionViolation

UNIT_TOL = 1e-12

KINDS = ("ball", "ellipsoid", "superellipsoid", "polytope")


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    """A bounded open convex set in R^n.

    Use the constructors :meth:`ball`, :meth:`ellipsoid`,
    :meth:`superellipsoid`, :meth:`box` and :meth:`polytope` rather than
    calling the class directly.
    """

    kind: str
    center: np.ndarray
    radii: np.ndarray = None
    exponent: float = 2.0
    normals: np.ndarray = None
    offsets: np.ndarray = None
    vertices: np.ndarray = None
    _diameter: float = field(default=None, repr=False)

    # -- constructors -----------------------------------------------------

    @classmethod
    def ball(cls, center, radius):
        center = _point(center)
        if not radius > 0:
            raise InvalidInput("radius must be positive")
        return cls("ball", center, radii=np.full(center.size, float(radius)))

    @classmethod
    def ellipsoid(cls, center, radii):
        center = _point(center)
        radii = np.asarray(radii, dtype=float)
        if radii.shape != center.shape or np.any(radii <= 0):
            raise InvalidInput("ellipsoid needs one positive semi-axis per coordinate")
        return cls("ellipsoid", center, radii=radii)

    @classmethod
    def superellipsoid(cls, center, radii, exponent):
        """The set sum_i |(x_i - c_i)/a_i|^p < 1, with C^1 boundary for p > 1."""
        center = _point(center)
        radii = np.asarray(radii, dtype=float)
        if radii.shape != center.shape or np.any(radii <= 0):
            raise InvalidInput("superellipsoid needs one positive semi-axis per coordinate")
        if not exponent > 1:
            raise InvalidInput("superellipsoid exponent must exceed 1")
        return cls("superellipsoid", center, radii=radii, exponent=float(exponent))

    @classmethod
    def box(cls, lower, upper):
        lower, upper = _point(lower), _point(upper)
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise InvalidInput("box needs lower < upper in every coordinate")
        n = lower.size
        normals = np.vstack([np.eye(n), -np.eye(n)])
        offsets = np.concatenate([upper, -lower])
        corners = np.array([[(upper if b else lower)[i] for i, b in enumerate(bits)]
                            for bits in np.ndindex(*(2,) * n)])
        return cls("polytope", 0.5 * (lower + upper), normals=normals, offsets=offsets,
                   vertices=corners)

    @classmethod
    def polytope(cls, vertices):
        """Convex hull of a vertex list (at least n + 1 affinely independent points)."""
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if vertices.shape[1] < 2:
            raise InvalidInput("dimension must be at least 2")
        try:
            hull = ConvexHull(vertices)
        except Exception as exc:  # qhull raises its own error type
            raise InvalidInput(f"degenerate vertex set: {exc}") from exc
        eq = hull.equations
        norms = np.linalg.norm(eq[:, :-1], axis=1)
        normals = eq[:, :-1] / norms[:, None]
        offsets = -eq[:, -1] / norms
        verts = vertices[hull.vertices]
        return cls("polytope", verts.mean(axis=0), normals=normals, offsets=offsets,
                   vertices=verts)

    # -- basic properties -------------------------------------------------

    @property
    def dim(self):
        return self.center.size

    @property
    def is_c1(self):
        """Whether the boundary is C^1 (polytopes are not)."""
        return self.kind != "polytope"

    def bounding_box(self):
        if self.kind == "polytope":
            return self.vertices.min(axis=0), self.vertices.max(axis=0)
        return self.center - self.radii, self.center + self.radii

    # -- queries ----------------------------------------------------------

    def contains(self, x):
        """True where ``x`` lies in the open domain; vectorised over leading axes."""
        x = self._check_points(x)
        return self._level(x) < 0.0

    def boundary_distance(self, x, direction):
        """Distance from ``x`` to the boundary along the unit vector ``direction``.

        Both arguments broadcast over leading axes. Raises
        :class:`PreconditionViolation` if a base point is not inside the
        domain and :class:`InvalidInput` if a direction is not unit length
        within 1e-12.
        """
        x = self._check_points(x)
        d = self._check_points(direction)
        norm = np.linalg.norm(d, axis=-1)
        if np.any(np.abs(norm - 1.0) > UNIT_TOL):
            raise InvalidInput("direction must be a unit vector")
        d = d / norm[..., None]
        if not np.all(self._level(x) < 0.0):
            raise PreconditionViolation("base point outside the domain")
        return self.exit_distance(x, d)

    def exit_distance(self, x, d):
        """Unchecked ray-exit distance; ``x`` inside (or on) the domain, ``d`` unit."""
        x, d = np.broadcast_arrays(np.asarray(x, float), np.asarray(d, float))
        if self.kind == "ball":
            y = x - self.center
            r = self.radii[0]
            b = np.einsum("...i,...i", y, d)
            c = np.einsum("...i,...i", y, y) - r * r
            return -b + np.sqrt(np.maximum(b * b - c, 0.0))
        if self.kind == "ellipsoid":
            y = (x - self.center) / self.radii
            e = d / self.radii
            a = np.einsum("...i,...i", e, e)
            b = np.einsum("...i,...i", y, e)
            c = np.einsum("...i,...i", y, y) - 1.0
            return (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
        if self.kind == "polytope":
            num = self.offsets - x @ self.normals.T
            den = d @ self.normals.T
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                hit = np.where(den > 1e-300, num / den, np.inf)
            return np.maximum(hit.min(axis=-1), 0.0)
        return self._superellipsoid_exit(x, d)

    def diameter(self):
        if self._diameter is None:
            object.__setattr__(self, "_diameter", self._compute_diameter())
        return self._diameter

    # -- internals --------------------------------------------------------

    def _check_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise InvalidInput(f"expected points of dimension {self.dim}, got shape {x.shape}")
        return x

    def _level(self, x):
        """Negative inside, zero on the boundary, positive outside."""
        if self.kind == "ball":
            y = x - self.center
            return np.einsum("...i,...i", y, y) - self.radii[0] ** 2
        if self.kind == "ellipsoid":
            y = (x - self.center) / self.radii
            return np.einsum("...i,...i", y, y) - 1.0
        if self.kind == "polytope":
            return (x @ self.normals.T - self.offsets).max(axis=-1)
        y = np.abs((x - self.center) / self.radii)
        return np.sum(y ** self.exponent, axis=-1) - 1.0

    def _superellipsoid_exit(self, x, d):
        p = self.exponent
        y = (x - self.center) / self.radii
        e = d / self.radii

        def f(s):
            return np.sum(np.abs(y + s[..., None] * e) ** p, axis=-1) - 1.0

        shape = y.shape[:-1]
        lo = np.zeros(shape)
        # the body lies inside the ball of radius sqrt(n) * max(radii)
        hi = np.full(shape, 2.0 * np.sqrt(self.dim) * self.radii.max() / np.abs(d).max(axis=-1).clip(1e-300))
        hi = np.maximum(hi, 2.0 * np.sqrt(self.dim) * self.radii.max())
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            inside = f(mid) < 0.0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(hi, 1.0)):
                break
        return 0.5 * (lo + hi)

    def _compute_diameter(self):
        if self.kind == "ball":
            return 2.0 * self.radii[0]
        if self.kind == "ellipsoid":
            return 2.0 * self.radii.max()
        if self.kind == "polytope":
            v = self.vertices
            return max(np.linalg.norm(a - b) for a, b in combinations(v, 2))
        # centrally symmetric: diameter is twice the largest centre-to-boundary distance
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(4096, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        centers = np.broadcast_to(self.center, dirs.shape)
        r = self.exit_distance(centers, dirs)
        start = dirs[np.argmax(r)]

        def neg_radius(v):
            u = v / np.linalg.norm(v)
            return -float(self.exit_distance(self.center, u))

        best = minimize(neg_radius, start, method="Nelder-Mead",
                        options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        return 2.0 * max(-best.fun, r.max())


def _point(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise InvalidInput("dimension must be at least 2")
    return x
