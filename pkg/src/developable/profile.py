"""Curvature profiles and the fixed bump mollifier.

A profile is a bundle of scalar components on ``[0, length]``: the front
curvatures ``kappa_i``, the twists ``kappa_{i_j}`` (``i < j``) and the normal
curvature ``kappa_n``. Every component is a vectorised callable that knows a
uniform bound and its breakpoints (points where it fails to be smooth).

Mollification uses the normalised bump ``eta(y) = C exp(-1/(1 - y^2))`` on
``(-1, 1)`` scaled to support radius ``r``. Components are extended by their
end values outside ``[0, length]`` before convolving. Piecewise constant and
piecewise linear components are convolved in closed form through the tabulated
antiderivatives ``G0 = int eta`` and ``G1 = int y eta``; any other component
goes through a fixed 32-point Gauss rule per smooth piece of the kernel support.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidInput

GAUSS_NODES = 32
# the kernel derivatives steepen near the support ends, so those pieces are split
_KERNEL_SPLITS = (-1.0, -0.9, -0.7, 0.0, 0.7, 0.9, 1.0)
_TABLE_SIZE = 4097


# -- the bump kernel ------------------------------------------------------


def _bump_raw(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    out[inside] = np.exp(-1.0 / (1.0 - yi * yi))
    return out


_BUMP_MASS = 2.0 * quad(lambda y: float(_bump_raw(y)), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]


def bump(y, order=0):
    """The normalised kernel ``eta`` or its first or second derivative."""
    y = np.asarray(y, dtype=float)
    eta = _bump_raw(y) / _BUMP_MASS
    if order == 0:
        return eta
    inside = np.abs(y) < 1.0
    q = np.where(inside, 1.0 - y * y, 1.0)
    g1 = -2.0 * y / q**2
    if order == 1:
        return np.where(inside, g1 * eta, 0.0)
    if order == 2:
        g2 = -(2.0 + 6.0 * y * y) / q**3
        return np.where(inside, (g2 + g1 * g1) * eta, 0.0)
    raise InvalidInput("kernel derivatives are available up to order 2")


def _build_tables():
    y = np.linspace(-1.0, 1.0, _TABLE_SIZE)
    xg, wg = np.polynomial.legendre.leggauss(8)
    a, b = y[:-1], y[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * xg
    eta = bump(nodes)
    c0 = np.concatenate([[0.0], np.cumsum((eta * wg).sum(axis=1) * half)])
    c1 = np.concatenate([[0.0], np.cumsum((nodes * eta * wg).sum(axis=1) * half)])
    c0 /= c0[-1]
    # symmetrise so that G0(0) = 1/2 and G1 is even exactly
    g0 = 0.5 * (c0 + 1.0 - c0[::-1])
    g1 = 0.5 * (c1 + c1[::-1])
    g1[0] = g1[-1] = 0.0
    eta_nodes = bump(y)
    return (CubicHermiteSpline(y, g0, eta_nodes),
            CubicHermiteSpline(y, g1, y * eta_nodes))


_G0_SPLINE, _G1_SPLINE = _build_tables()


def bump_cdf(y):
    """``G0(y) = int_{-1}^{y} eta``, clamped to 0 and 1 outside the support."""
    y = np.asarray(y, dtype=float)
    inner = _G0_SPLINE(np.clip(y, -1.0, 1.0))
    return np.where(y <= -1.0, 0.0, np.where(y >= 1.0, 1.0, inner))


def bump_first_moment(y):
    """``G1(y) = int_{-1}^{y} u eta(u) du``, zero outside the support."""
    y = np.asarray(y, dtype=float)
    inner = _G1_SPLINE(np.clip(y, -1.0, 1.0))
    return np.where(np.abs(y) >= 1.0, 0.0, inner)


# -- components -----------------------------------------------------------


class Component:
    """Base class for scalar profile components."""

    bound: float = 0.0
    breakpoints: tuple = ()

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t, order=1):
        raise InvalidInput(f"{type(self).__name__} has no analytic derivative")

    def restricted(self, length):
        """Copy whose values outside ``[0, length]`` are the end values."""
        return Clamped(self, length)

    def mollified(self, width, length):
        return Mollified(self.restricted(length), width, length)


@dataclass(frozen=True)
class Constant(Component):
    value: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value))

    def derivative(self, t, order=1):
        return np.zeros(np.shape(t))

    @property
    def bound(self):
        return abs(self.value)

    def restricted(self, length):
        return self

    def mollified(self, width, length):
        return self


@dataclass(frozen=True)
class PiecewiseConstant(Component):
    """Right-continuous step function: ``values[k]`` on ``[breaks[k-1], breaks[k])``."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        if len(self.values) != b.size + 1:
            raise InvalidInput("a step function needs one more value than breaks")
        if np.any(np.diff(b) <= 0):
            raise InvalidInput("breaks must be strictly increasing")
        object.__setattr__(self, "breaks", tuple(map(float, b)))
        object.__setattr__(self, "values", tuple(map(float, self.values)))

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, np.asarray(t, dtype=float), side="right")
        return np.asarray(self.values)[idx]

    def derivative(self, t, order=1):
        return np.zeros(np.shape(t))

    @property
    def bound(self):
        return max(abs(v) for v in self.values)

    @property
    def breakpoints(self):
        return self.breaks

    def restricted(self, length):
        keep = [k for k, b in enumerate(self.breaks) if 0.0 < b < length]
        if not keep:
            return Constant(float(self(np.array(0.5 * length))))
        values = [self.values[keep[0]]] + [self.values[k + 1] for k in keep]
        return PiecewiseConstant(tuple(self.breaks[k] for k in keep), tuple(values))

    def mollified(self, width, length):
        return Mollified(self.restricted(length), width, length)


@dataclass(frozen=True)
class PiecewiseLinear(Component):
    """Linear interpolation through ``(knots, values)``, constant beyond the ends."""

    knots: tuple
    values: tuple

    def __post_init__(self):
        x = np.asarray(self.knots, dtype=float)
        if x.size < 1 or len(self.values) != x.size:
            raise InvalidInput("knots and values must have equal nonzero length")
        if np.any(np.diff(x) <= 0):
            raise InvalidInput("knots must be strictly increasing")
        object.__setattr__(self, "knots", tuple(map(float, x)))
        object.__setattr__(self, "values", tuple(map(float, self.values)))

    @cached_property
    def _arrays(self):
        x, v = np.asarray(self.knots), np.asarray(self.values)
        slopes = np.diff(v) / np.diff(x) if x.size > 1 else np.zeros(0)
        kinks = np.diff(np.concatenate([[0.0], slopes, [0.0]]))
        return x, v, kinks

    def __call__(self, t):
        x, v, _ = self._arrays
        return np.interp(np.asarray(t, dtype=float), x, v)

    def derivative(self, t, order=1):
        x, v, _ = self._arrays
        if order != 1:
            return np.zeros(np.shape(t))
        slopes = np.concatenate([[0.0], np.diff(v) / np.diff(x), [0.0]])
        return slopes[np.searchsorted(x, np.asarray(t, dtype=float), side="right")]

    @property
    def bound(self):
        return max(abs(v) for v in self.values)

    @property
    def breakpoints(self):
        return self.knots

    def restricted(self, length):
        x, v, _ = self._arrays
        inner = (x > 0.0) & (x < length)
        xs = np.concatenate([[0.0], x[inner], [length]])
        return PiecewiseLinear(tuple(xs), tuple(self(xs)))

    def mollified(self, width, length):
        return Mollified(self.restricted(length), width, length)


@dataclass(frozen=True, eq=False)
class Function(Component):
    """A user-supplied vectorised callable with a declared uniform bound."""

    func: object
    declared_bound: float
    breaks: tuple = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.func(t), dtype=float), t.shape).copy()

    @property
    def bound(self):
        return float(self.declared_bound)

    @property
    def breakpoints(self):
        return tuple(self.breaks)


@dataclass(frozen=True, eq=False)
class Clamped(Component):
    base: Component
    length: float

    def __call__(self, t):
        return self.base(np.clip(np.asarray(t, dtype=float), 0.0, self.length))

    @property
    def bound(self):
        return self.base.bound

    @property
    def breakpoints(self):
        return tuple(b for b in self.base.breakpoints if 0.0 < b < self.length) + (0.0, self.length)

    def restricted(self, length):
        return self


@dataclass(frozen=True, eq=False)
class Product(Component):
    left: Component
    right: Component

    def __call__(self, t):
        return self.left(t) * self.right(t)

    def derivative(self, t, order=1):
        if order == 1:
            return self.left.derivative(t, 1) * self.right(t) + self.left(t) * self.right.derivative(t, 1)
        if order == 2:
            return (self.left.derivative(t, 2) * self.right(t)
                    + 2.0 * self.left.derivative(t, 1) * self.right.derivative(t, 1)
                    + self.left(t) * self.right.derivative(t, 2))
        raise InvalidInput("derivatives are available up to order 2")

    @property
    def bound(self):
        return self.left.bound * self.right.bound

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.left.breakpoints) | set(self.right.breakpoints)))


@dataclass(frozen=True, eq=False)
class Mollified(Component):
    """Convolution of ``base`` (already extended by end values) with the bump of radius ``width``."""

    base: Component
    width: float
    length: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidInput("mollifier width must be positive")

    @property
    def bound(self):
        return self.base.bound

    @property
    def breakpoints(self):
        return ()

    def __call__(self, t):
        return self._apply(np.asarray(t, dtype=float), 0)

    def derivative(self, t, order=1):
        if order not in (1, 2):
            raise InvalidInput("derivatives are available up to order 2")
        return self._apply(np.asarray(t, dtype=float), order)

    def _apply(self, t, order):
        base, r = self.base, self.width
        if isinstance(base, PiecewiseConstant):
            out = np.full(t.shape, base.values[0]) if order == 0 else np.zeros(t.shape)
            jumps = np.diff(base.values)
            for b, dv in zip(base.breaks, jumps):
                z = (t - b) / r
                if order == 0:
                    out += dv * bump_cdf(z)
                else:
                    out += dv * bump(z, order - 1) / r**order
            return out
        if isinstance(base, PiecewiseLinear):
            x, v, kinks = base._arrays
            out = np.full(t.shape, v[0]) if order == 0 else np.zeros(t.shape)
            for xk, ck in zip(x, kinks):
                if ck == 0.0:
                    continue
                z = (t - xk) / r
                if order == 0:
                    out += ck * ((t - xk) * bump_cdf(z) - r * bump_first_moment(z))
                elif order == 1:
                    out += ck * bump_cdf(z)
                else:
                    out += ck * bump(z) / r
            return out
        return self._gauss(t, order)

    def _gauss(self, t, order):
        """``r^-k int eta^(k)(y) f(t - r y) dy`` with the y-range split at kinks of f."""
        r = self.width
        flat = t.ravel()
        cuts = np.asarray(sorted(set(self.base.breakpoints) | {0.0, self.length}), dtype=float)
        splits = (flat[:, None] - cuts[None, :]) / r
        splits = np.concatenate([splits, np.tile(_KERNEL_SPLITS, (flat.size, 1))], axis=1)
        splits = np.sort(np.clip(splits, -1.0, 1.0), axis=1)
        a, b = splits[:, :-1], splits[:, 1:]
        xg, wg = np.polynomial.legendre.leggauss(GAUSS_NODES)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        y = mid[..., None] + half[..., None] * xg
        vals = self.base(flat[:, None, None] - r * y)
        integrand = bump(y, order) * vals * wg
        total = (integrand.sum(axis=-1) * half).sum(axis=-1)
        return (total / r**order).reshape(t.shape)


@dataclass(frozen=True, eq=False)
class Cutoff(Component):
    """``psi1(m (t - ell_star)) psi2(m t) base(t)``: vanishes near both ends."""

    base: Component
    m: float
    ell_star: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return psi1(self.m * (t - self.ell_star)) * psi2(self.m * t) * self.base(t)

    @property
    def bound(self):
        return self.base.bound

    @property
    def breakpoints(self):
        return self.base.breakpoints


def _f(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def psi2(x):
    """Smooth step: 0 for ``x <= 1``, 1 for ``x >= 2``, symmetric about 1.5."""
    a, b = _f(np.asarray(x, dtype=float) - 1.0), _f(2.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def psi1(x):
    """Mirror of :func:`psi2`: 1 for ``x <= -2``, 0 for ``x >= -1``."""
    return psi2(-np.asarray(x, dtype=float))


# -- profiles -------------------------------------------------------------


def as_component(c):
    if isinstance(c, Component):
        return c
    if np.isscalar(c):
        return Constant(float(c))
    raise InvalidInput(f"cannot interpret {c!r} as a profile component")


def twist_pairs(n):
    """Index pairs ``(i, j)``, ``1 <= i < j <= n-1``, in storage order."""
    return [(i, j) for i in range(1, n) for j in range(i + 1, n)]


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """Curvature data generating the domain frame and the Darboux frame.

    Parameters
    ----------
    length : float
        Arclength ``ell`` of the leading curve.
    kappa : tuple of Component
        Front curvatures ``kappa_1 .. kappa_{n-1}``.
    twist : tuple of Component
        Twists ``kappa_{i_j}`` ordered as :func:`twist_pairs`.
    normal : Component
        Normal curvature ``kappa_n`` of the image curve.
    """

    length: float
    kappa: tuple
    twist: tuple = ()
    normal: Component = Constant(0.0)

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidInput("profile length must be positive")
        kappa = tuple(as_component(c) for c in self.kappa)
        twist = tuple(as_component(c) for c in self.twist)
        if len(kappa) < 1:
            raise InvalidInput("need at least one front curvature (n >= 2)")
        n = len(kappa) + 1
        if len(twist) == 0 and n > 2:
            twist = tuple(Constant(0.0) for _ in twist_pairs(n))
        if len(twist) != len(twist_pairs(n)):
            raise InvalidInput(f"n = {n} needs {len(twist_pairs(n))} twist components")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "twist", twist)
        object.__setattr__(self, "normal", as_component(self.normal))
        self._check_bounds()

    def _check_bounds(self):
        t = np.linspace(0.0, self.length, 1025)
        for c in self.components:
            if np.any(np.abs(c(t)) > c.bound * (1 + 1e-12) + 1e-300):
                raise InvalidInput("a component exceeds its declared bound")

    @classmethod
    def constant(cls, length, kappa, twist=(), normal=0.0):
        return cls(length, tuple(Constant(float(k)) for k in kappa),
                   tuple(Constant(float(k)) for k in twist), Constant(float(normal)))

    @property
    def n(self):
        return len(self.kappa) + 1

    @property
    def components(self):
        return self.kappa + self.twist + (self.normal,)

    @property
    def bound(self):
        """Largest declared bound over all components."""
        return max(c.bound for c in self.components)

    @property
    def domain_bound(self):
        return max(c.bound for c in self.kappa + self.twist)

    @property
    def breakpoints(self):
        pts = set()
        for c in self.components:
            pts.update(b for b in c.breakpoints if 0.0 < b < self.length)
        return tuple(sorted(pts))

    def generator(self, t):
        """Skew matrix ``K(t)`` of the domain frame equation, shape ``t.shape + (n, n)``."""
        return _domain_generator(self.n, [c(t) for c in self.kappa],
                                 [c(t) for c in self.twist], np.shape(t))

    def darboux_generator(self, t):
        """``(n+1) x (n+1)`` extension coupling the tangent to the normal through ``kappa_n``."""
        return darboux_from_domain(self.generator(t), self.normal(t))

    def mollified(self, m):
        """Every component convolved with the bump of radius ``1/m``."""
        if not m >= 1:
            raise InvalidInput("smoothing index must be at least 1")
        r = 1.0 / m
        return CurvatureProfile(
            self.length,
            tuple(c.mollified(r, self.length) for c in self.kappa),
            tuple(c.mollified(r, self.length) for c in self.twist),
            self.normal.mollified(r, self.length))

    def with_components(self, kappa=None, twist=None, normal=None):
        return CurvatureProfile(self.length,
                                self.kappa if kappa is None else tuple(kappa),
                                self.twist if twist is None else tuple(twist),
                                self.normal if normal is None else normal)

    def sample(self, t):
        """Array with columns ``kappa_1.., twists.., kappa_n`` at times ``t``."""
        t = np.asarray(t, dtype=float)
        return np.stack([c(t) for c in self.components], axis=-1)

    def column_names(self):
        n = self.n
        return ([f"k{i}" for i in range(1, n)]
                + [f"k{i}_{j}" for i, j in twist_pairs(n)] + ["kn"])


def _domain_generator(n, kappa, twist, shape):
    K = np.zeros(tuple(shape) + (n, n))
    for i, k in enumerate(kappa, start=1):
        K[..., 0, i] = k
        K[..., i, 0] = -k
    for (i, j), k in zip(twist_pairs(n), twist):
        K[..., i, j] = k
        K[..., j, i] = -k
    return K


def darboux_from_domain(K, kappa_n):
    n = K.shape[-1]
    out = np.zeros(K.shape[:-2] + (n + 1, n + 1))
    out[..., :n, :n] = K
    out[..., 0, n] = kappa_n
    out[..., n, 0] = -np.asarray(kappa_n)
    return out
