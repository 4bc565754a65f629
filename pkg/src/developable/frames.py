"""Integration of the skew-symmetric frame equations.

Both the domain frame (rows ``gamma', N_1, ..., N_{n-1}``) and the Darboux
frame along the image curve (rows ``gamma~', v_1, ..., v_{n-1}, n``) satisfy
``F' = K(t) F`` with ``K`` skew. On each grid cell the generator is frozen at
the cell midpoint and the step is the exact exponential, so frames stay in
SO(n) up to rounding. The curve itself is advanced with the exact integral
``int_0^h exp(s K) ds`` of the tangent row, which makes the discrete solution
the exact solution of a piecewise-constant curvature profile. That profile is
exposed as the *effective* curvature and is what the immersion uses, so every
derived quantity is consistent with the integrated frames.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import InvalidInput, StepTooCoarse
from .profile import CurvatureProfile, darboux_from_domain

ORTHO_TOL = 1e-10
_SMALL_ANGLE = 1e-3


def skew_exp(K, sigma):
    """``exp(sigma K)`` and ``int_0^sigma exp(u K) du`` for stacked skew ``K``.

    ``K`` has shape ``(..., d, d)`` and ``sigma`` broadcasts against the
    leading axes. Dimensions 2 and 3 use the Rodrigues closed form, higher
    dimensions the augmented-matrix exponential.
    """
    K = np.asarray(K, dtype=float)
    d = K.shape[-1]
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), K.shape[:-2])
    if d <= 3:
        A = sigma[..., None, None] * K
        A2 = A @ A
        theta2 = 0.5 * np.sum(A * A, axis=(-2, -1))
        theta = np.sqrt(theta2)
        small = theta < _SMALL_ANGLE
        th = np.where(small, 1.0, theta)
        # sin(x)/x, (1 - cos x)/x^2, (x - sin x)/x^3 with Taylor branches near 0
        a = np.where(small, 1 - theta2 / 6 + theta2**2 / 120, np.sin(th) / th)
        b = np.where(small, 0.5 - theta2 / 24 + theta2**2 / 720, (1 - np.cos(th)) / th**2)
        c = np.where(small, 1 / 6 - theta2 / 120 + theta2**2 / 5040, (th - np.sin(th)) / th**3)
        eye = np.eye(d)
        E = eye + a[..., None, None] * A + b[..., None, None] * A2
        W = sigma[..., None, None] * (eye + b[..., None, None] * A + c[..., None, None] * A2)
        return E, W
    aug = np.zeros(K.shape[:-2] + (2 * d, 2 * d))
    aug[..., :d, :d] = K
    aug[..., :d, d:] = np.eye(d)
    big = expm(aug * sigma[..., None, None])
    return big[..., :d, :d], big[..., :d, d:]


def check_frame(F, name="frame"):
    """Raise :class:`InvalidInput` unless ``F`` is orthogonal with determinant +1."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix")
    if np.max(np.abs(F @ F.T - np.eye(F.shape[0]))) > ORTHO_TOL:
        raise InvalidInput(f"{name} is not orthogonal to {ORTHO_TOL}")
    if abs(np.linalg.det(F) - 1.0) > ORTHO_TOL:
        raise InvalidInput(f"{name} must be positively oriented (det +1)")
    return F


def make_grid(length, step, breakpoints=()):
    """Uniform grid of spacing at most ``step`` with the breakpoints inserted."""
    if not step > 0:
        raise InvalidInput("step must be positive")
    cells = int(np.ceil(length / step - 1e-9))
    grid = np.linspace(0.0, length, cells + 1)
    if breakpoints:
        bp = np.asarray([b for b in breakpoints if 0.0 < b < length])
        if bp.size:
            # drop uniform nodes that would leave a sliver next to a breakpoint
            gap = np.min(np.abs(grid[:, None] - bp[None, :]), axis=1)
            keep = (gap > 1e-3 * step) | (grid == 0.0) | (grid == length)
            grid = np.union1d(grid[keep], bp)
    return grid


@dataclass(frozen=True, eq=False)
class FrameSolution:
    """Piecewise-exact solution of ``F' = K F`` with the curve ``x' = F[0]``.

    Attributes
    ----------
    grid : ndarray, shape (M+1,)
    points : ndarray, shape (M+1, d)
        Curve positions at the grid times.
    frames : ndarray, shape (M+1, d, d)
        Frames at the grid times, rows orthonormal.
    generators : ndarray, shape (M, d, d)
        Frozen generator of each cell.
    """

    grid: np.ndarray
    points: np.ndarray
    frames: np.ndarray
    generators: np.ndarray

    @property
    def dim(self):
        return self.frames.shape[-1]

    def cell(self, t):
        """Index of the cell containing each ``t`` (the last cell owns ``ell``)."""
        t = np.asarray(t, dtype=float)
        return np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 2)

    def state(self, t):
        """Continuous ``(points, frames)`` at arbitrary times ``t`` in ``[0, ell]``."""
        t = np.asarray(t, dtype=float)
        c = self.cell(t)
        sigma = t - self.grid[c]
        E, W = skew_exp(self.generators[c], sigma)
        frames = E @ self.frames[c]
        points = self.points[c] + (W[..., 0, :, None] * self.frames[c]).sum(axis=-2)
        return points, frames

    def orthogonality_drift(self):
        F = self.frames
        eye = np.eye(self.dim)
        return float(np.max(np.abs(F @ np.swapaxes(F, -1, -2) - eye)))

    def determinant_drift(self):
        return float(np.max(np.abs(np.linalg.det(self.frames) - 1.0)))


def integrate_frame(generator, grid, frame0, origin):
    """Advance ``frame0`` and ``origin`` across ``grid`` with midpoint-frozen generators.

    ``generator`` maps an array of times to stacked skew matrices.
    """
    frame0 = np.asarray(frame0, dtype=float)
    d = frame0.shape[0]
    mids = 0.5 * (grid[:-1] + grid[1:])
    gens = generator(mids)
    E, W = skew_exp(gens, np.diff(grid))
    M = grid.size - 1
    frames = np.empty((M + 1, d, d))
    points = np.empty((M + 1, d))
    frames[0], points[0] = frame0, origin
    F, x = frame0.copy(), np.asarray(origin, dtype=float).copy()
    eye3 = 3.0 * np.eye(d)
    for k in range(M):
        x = x + W[k, 0] @ F
        F = E[k] @ F
        # one Newton-Schulz polar step removes rounding drift
        F = 0.5 * F @ (eye3 - F.T @ F)
        frames[k + 1], points[k + 1] = F, x
    return FrameSolution(grid, points, frames, gens)


def _check_step(step, bound, length):
    if not step > 0:
        raise InvalidInput("step must be positive")
    if step > length / 10 * (1 + 1e-12):
        raise StepTooCoarse(f"step {step} exceeds length/10 = {length / 10}")
    if step * bound > 0.5:
        raise StepTooCoarse(f"step * curvature bound = {step * bound:.3g} > 0.5")


def integrate_domain_frame(profile: CurvatureProfile, initial, step, origin=None):
    """Integrate the domain frame and the leading curve ``gamma``.

    Parameters
    ----------
    profile : CurvatureProfile
    initial : (n, n) array
        Initial frame with rows ``gamma'(0), N_1(0), ...``; orthogonal, det +1.
    step : float
        Target grid spacing; profile breakpoints are added to the grid.
    origin : array, optional
        ``gamma(0)``, default the origin.
    """
    n = profile.n
    F0 = check_frame(initial, "initial domain frame")
    if F0.shape != (n, n):
        raise InvalidInput(f"initial frame must be {n}x{n}")
    _check_step(step, profile.domain_bound, profile.length)
    grid = make_grid(profile.length, step, profile.breakpoints)
    origin = np.zeros(n) if origin is None else np.asarray(origin, dtype=float)
    return integrate_frame(profile.generator, grid, F0, origin)


def integrate_darboux_frame(profile: CurvatureProfile, initial, step, origin=None, grid=None):
    """Integrate the Darboux frame ``(gamma~', v_1, ..., v_{n-1}, n)`` and ``gamma~``."""
    n = profile.n
    F0 = check_frame(initial, "initial Darboux frame")
    if F0.shape != (n + 1, n + 1):
        raise InvalidInput(f"initial Darboux frame must be {n + 1}x{n + 1}")
    _check_step(step, profile.bound, profile.length)
    if grid is None:
        grid = make_grid(profile.length, step, profile.breakpoints)
    origin = np.zeros(n + 1) if origin is None else np.asarray(origin, dtype=float)
    return integrate_frame(profile.darboux_generator, grid, F0, origin)


def default_target_frame(domain_frame):
    """Embed the domain frame in the first ``n`` coordinates with normal ``e_{n+1}``."""
    n = domain_frame.shape[0]
    T = np.zeros((n + 1, n + 1))
    T[:n, :n] = domain_frame
    T[n, n] = 1.0
    return T


@dataclass(frozen=True, eq=False)
class FramedCurve:
    """Leading curve with its domain frame and the Darboux frame of its image.

    Build with :meth:`build`. ``target`` may be ``None`` for a curve that only
    carries the domain side (the intermediate curves of the smoothing pipeline).
    """

    profile: CurvatureProfile
    domain: FrameSolution
    target: FrameSolution = None

    @classmethod
    def build(cls, profile, frame0, step, target_frame0=None, origin=None,
              target_origin=None, with_target=True):
        dom = integrate_domain_frame(profile, frame0, step, origin)
        tgt = None
        if with_target:
            T0 = default_target_frame(dom.frames[0]) if target_frame0 is None else target_frame0
            tgt = integrate_darboux_frame(profile, T0, step, target_origin, grid=dom.grid)
        return cls(profile, dom, tgt)

    @property
    def n(self):
        return self.profile.n

    @property
    def length(self):
        return self.profile.length

    @property
    def grid(self):
        return self.domain.grid

    @property
    def step(self):
        return float(np.max(np.diff(self.grid)))

    def effective_kappa(self, t):
        """Frozen front curvatures ``(kappa_1 .. kappa_{n-1})`` of the cell containing ``t``."""
        return self.domain.generators[self.domain.cell(t), 0, 1:]

    def effective_normal(self, t):
        """Frozen normal curvature ``kappa_n`` of the cell containing ``t``."""
        if self.target is None:
            return np.zeros(np.shape(t))
        return self.target.generators[self.target.cell(t), 0, -1]

    def state(self, t):
        """``(gamma, D, gamma~, T)`` at times ``t``; target entries are ``None`` if absent."""
        g, D = self.domain.state(t)
        if self.target is None:
            return g, D, None, None
        gt, T = self.target.state(t)
        return g, D, gt, T

    def orthogonality_drift(self):
        drift = self.domain.orthogonality_drift()
        if self.target is not None:
            drift = max(drift, self.target.orthogonality_drift())
        return drift


__all__ = [
    "FrameSolution", "FramedCurve", "check_frame", "darboux_from_domain",
    "default_target_frame", "integrate_darboux_frame", "integrate_domain_frame",
    "integrate_frame", "make_grid", "skew_exp",
]
