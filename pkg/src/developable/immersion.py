"""Developable isometric immersions built on a framed leading curve.

The chart ``Phi(t, s) = gamma(t) + sum_i s_i N_i(t)`` covers the region
``Omega(gamma)`` swept by the leading fronts. The immersion is affine on each
front::

    u(Phi(t, s)) = gamma~(t) + sum_i s_i v_i(t)

so its gradient depends on ``t`` only and its Hessian is the rank-one tensor
``kappa_n n / (1 - s.kappa) gamma' (x) gamma'``. Curvatures are the effective
(cell-frozen) ones of the integrated curve; see :mod:`developable.frames`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import golden

from .domain import ConvexDomain
from .errors import (DegenerateGeometry, InconsistentImmersion, InvalidInput,
                     NotCovered, PreconditionViolation)
from .frames import FramedCurve

PARALLEL_TOL = 1e-12
ROUNDTRIP_TOL = 1e-9


def sphere_directions(n, count=64):
    """Fixed grid on the unit sphere of ``R^{n-1}``: ``+-1`` for n = 2, a uniform circle for n = 3."""
    if n == 2:
        return np.array([[1.0], [-1.0]])
    if n == 3:
        th = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    raise InvalidInput("sphere grids are provided for n = 2 and n = 3")


@dataclass(frozen=True)
class RulingDistances:
    """Boundary distance ``S``, front-intersection distance ``L`` and the minimising ``t~``."""

    S: float
    L: float
    t_min: float = None


@dataclass
class ValidationReport:
    min_jacobian: float
    jacobian_witness: tuple
    min_margin: float
    margin_witness: tuple
    isometry_residual: float
    grid_spacing: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    def summary(self):
        lines = [f"passed={self.passed}",
                 f"min_jacobian={float(self.min_jacobian)!r}",
                 f"jacobian_witness={self.jacobian_witness}",
                 f"min_margin={float(self.min_margin)!r}",
                 f"margin_witness={self.margin_witness}",
                 f"isometry_residual={float(self.isometry_residual)!r}",
                 f"grid_spacing={float(self.grid_spacing)!r}"]
        lines += [f"check.{k}={v}" for k, v in self.checks.items()]
        return "\n".join(lines)


@dataclass(frozen=True)
class SobolevNorms:
    """Squared L2 norms of ``u``, ``grad u``, ``hess u`` over ``Omega(gamma)`` and its volume."""

    l2: float
    grad: float
    hess: float
    volume: float


@dataclass(frozen=True)
class ChartQuadrature:
    """Nodes ``(t, s)`` of a rule on ``Sigma^gamma`` with chart weights and Jacobians."""

    t: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray

    @property
    def measure(self):
        return self.weights * self.jacobian


def gauss_panels(breaks, nodes, max_panel=None):
    """Composite Gauss-Legendre rule over consecutive ``breaks``."""
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    edges = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        pieces = 1 if max_panel is None else max(1, int(np.ceil((b - a) / max_panel - 1e-9)))
        edges.extend(np.linspace(a, b, pieces + 1)[1:])
    edges = np.asarray(edges)
    a, b = edges[:-1], edges[1:]
    t = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * xg
    w = (0.5 * (b - a))[:, None] * wg
    return t.ravel(), w.ravel()


class DevelopableImmersion:
    """An immersion ``u: Omega(gamma) -> R^{n+1}`` generated by a framed leading curve.

    Parameters
    ----------
    curve : FramedCurve
        Must carry the Darboux side.
    domain : ConvexDomain
        The leading curve must stay inside it.
    extend_affine : bool
        Evaluate points of the domain beyond the first or last front by the
        affine isometry frozen on that front instead of raising ``not-covered``.
    """

    def __init__(self, curve: FramedCurve, domain: ConvexDomain, extend_affine=False):
        if curve.target is None:
            raise InvalidInput("the framed curve has no Darboux frame")
        if domain.dim != curve.n:
            raise InvalidInput("domain and curve dimensions differ")
        self.curve = curve
        self.domain = domain
        self.extend_affine = extend_affine
        self.n = curve.n
        if not np.all(domain.contains(curve.domain.points)):
            raise PreconditionViolation("the leading curve leaves the domain")
        self._scale = max(domain.diameter(), curve.length)

    # -- chart ------------------------------------------------------------

    @property
    def length(self):
        return self.curve.length

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12) or np.any(t > self.length + 1e-12):
            raise InvalidInput("t outside [0, ell]")
        return np.clip(t, 0.0, self.length)

    def _s(self, s, shape):
        s = np.asarray(s, dtype=float)
        if s.shape[-1:] != (self.n - 1,):
            if self.n == 2 and s.shape == shape:
                s = s[..., None]
            else:
                raise InvalidInput(f"front coordinates need {self.n - 1} components")
        return s

    def phi(self, t, s):
        """``gamma(t) + sum_i s_i N_i(t)``; no containment check."""
        t = self._check_t(t)
        s = self._s(s, t.shape)
        g, D, _, _ = self.curve.state(t)
        return g + np.einsum("...i,...ij->...j", s, D[..., 1:, :])

    def jacobian(self, t, s):
        """``1 - sum_i s_i kappa_i(t)``, the determinant of ``D Phi``."""
        t = self._check_t(t)
        s = self._s(s, t.shape)
        return 1.0 - np.einsum("...i,...i->...", s, self.curve.effective_kappa(t))

    def evaluate(self, t, s, check=True):
        """``gamma~(t) + sum_i s_i v_i(t)``; raises ``not-covered`` outside the domain."""
        t = self._check_t(t)
        s = self._s(s, t.shape)
        g, D, gt, T = self.curve.state(t)
        if check:
            x = g + np.einsum("...i,...ij->...j", s, D[..., 1:, :])
            if not np.all(self.domain.contains(x)):
                raise NotCovered("chart point outside the domain")
        return gt + np.einsum("...i,...ij->...j", s, T[..., 1:self.n, :])

    def gradient(self, t):
        """``(n+1) x n`` gradient on the front through ``gamma(t)``."""
        t = self._check_t(t)
        _, D, _, T = self.curve.state(t)
        return _gradient(D, T, self.n)

    def _bending(self, t, s):
        J = self.jacobian(t, s)
        if np.any(J <= 0):
            raise InconsistentImmersion("Jacobian is not positive at a requested point")
        return self.curve.effective_normal(t) / J

    def second_fundamental_form(self, t, s):
        """``A = kappa_n / (1 - s.kappa) gamma' (x) gamma'``."""
        t = self._check_t(t)
        c = self._bending(t, s)
        _, D = self.curve.domain.state(t)
        tan = D[..., 0, :]
        return c[..., None, None] * tan[..., :, None] * tan[..., None, :]

    def hessian(self, t, s):
        """Tensor ``H[j, k, l] = d_j d_k u^l``, shape ``(..., n, n, n+1)``."""
        t = self._check_t(t)
        A = self.second_fundamental_form(t, s)
        _, _, _, T = self.curve.state(t)
        return A[..., None] * T[..., None, None, -1, :]

    def normal(self, t):
        t = self._check_t(t)
        return self.curve.target.state(t)[1][..., -1, :]

    # -- inverse chart ----------------------------------------------------

    def locate(self, x):
        """Chart coordinates of physical points.

        Returns ``(t, s, side)`` where ``side`` is 0 for covered points, -1
        before the first front and +1 after the last one. Uncovered points get
        the coordinates of the nearest end front.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.n,):
            raise InvalidInput(f"points must have dimension {self.n}")
        shape = x.shape[:-1]
        xf = x.reshape(-1, self.n)
        N = xf.shape[0]
        t = np.empty(N)
        side = np.zeros(N, dtype=int)
        grid = self.curve.grid
        gam = self.curve.domain.points
        tan = self.curve.domain.frames[:, 0, :]
        offset = np.einsum("ij,ij->i", gam, tan)
        tol = 1e-12 * self._scale
        chunk = max(1, int(4e6 // grid.size))
        for lo in range(0, N, chunk):
            xs = xf[lo:lo + chunk]
            g = xs @ tan.T - offset
            ahead = g > 0
            ahead[:, 0] = g[:, 0] >= -tol
            ahead[:, -1] = g[:, -1] > tol
            changes = np.count_nonzero(ahead[:, 1:] != ahead[:, :-1], axis=1)
            if np.any(changes > 1):
                bad = lo + int(np.argmax(changes > 1))
                raise InconsistentImmersion("a point lies on several leading fronts",
                                            witness=tuple(xf[bad]))
            none = changes == 0
            side[lo:lo + chunk][none] = np.where(ahead[none, 0], 1, -1)
            k = np.argmax(ahead[:, 1:] != ahead[:, :-1], axis=1)
            rows = np.arange(xs.shape[0])
            t[lo:lo + chunk] = self._solve_front(xs, grid[k], grid[k + 1], g[rows, k], g[rows, k + 1])
        t = np.where(side == 1, self.length, np.where(side == -1, 0.0, t))
        g, D = self.curve.domain.state(t)
        s = np.einsum("nj,nij->ni", xf - g, D[:, 1:, :])
        covered = side == 0
        if np.any(covered):
            resid = np.abs(np.einsum("nj,nj->n", xf - g, D[:, 0, :]))[covered]
            if resid.size and resid.max() > ROUNDTRIP_TOL:
                raise InconsistentImmersion(f"inverse chart residual {resid.max():.3g}")
        return t.reshape(shape), s.reshape(shape + (self.n - 1,)), side.reshape(shape)

    def _solve_front(self, x, lo, hi, glo, ghi):
        """Root of ``g(t) = (x - gamma(t)).gamma'(t)`` in ``[lo, hi]``; ``g' = -J``."""
        denom = glo - ghi
        t = np.where(denom != 0, lo + (hi - lo) * np.clip(glo / np.where(denom != 0, denom, 1.0), 0, 1), lo)
        for _ in range(60):
            gam, D = self.curve.domain.state(t)
            d = x - gam
            g = np.einsum("nj,nj->n", d, D[:, 0, :])
            s = np.einsum("nj,nij->ni", d, D[:, 1:, :])
            J = 1.0 - np.einsum("ni,ni->n", s, self.curve.effective_kappa(t))
            lo = np.where(g > 0, t, lo)
            hi = np.where(g > 0, hi, t)
            step = np.where(J > 0, g / np.where(J > 0, J, 1.0), np.nan)
            cand = t + step
            ok = np.isfinite(cand) & (cand >= lo) & (cand <= hi)
            new = np.where(ok, cand, 0.5 * (lo + hi))
            done = np.max(np.abs(new - t)) <= 1e-15 * max(1.0, self.length)
            t = new
            if done:
                break
        return t

    def phi_inverse(self, x):
        """``(t, s)`` with ``Phi(t, s) = x`` for covered points of the domain."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.domain.contains(x)):
            raise PreconditionViolation("point outside the domain")
        t, s, side = self.locate(x)
        if np.any(side != 0):
            raise NotCovered("point not covered by any leading front")
        return t, s

    def fields_at(self, x, order=2):
        """``u``, ``grad u`` and (if ``order == 2``) ``hess u`` at physical points."""
        t, s, side = self.locate(x)
        if np.any(side != 0) and not self.extend_affine:
            raise NotCovered("point not covered by any leading front")
        g, D, gt, T = self.curve.state(t)
        grad = _gradient(D, T, self.n)
        covered = side == 0
        # off the chart: frozen affine map of the nearest end front
        value = np.where(covered[..., None],
                         gt + np.einsum("...i,...ij->...j", s, T[..., 1:self.n, :]),
                         gt + np.einsum("...ij,...j->...i", grad, np.asarray(x) - g))
        if order < 2:
            return value, grad, None
        J = 1.0 - np.einsum("...i,...i->...", s, self.curve.effective_kappa(t))
        if np.any(J[covered] <= 0):
            raise InconsistentImmersion("Jacobian is not positive at a requested point")
        c = np.where(covered, self.curve.effective_normal(t) / np.where(covered, J, 1.0), 0.0)
        tan = D[..., 0, :]
        hess = (c[..., None, None, None] * tan[..., :, None, None] * tan[..., None, :, None]
                * T[..., None, None, -1, :])
        return value, grad, hess

    def value_at(self, x):
        return self.fields_at(x, order=0)[0]

    def gradient_at(self, x):
        return self.fields_at(x, order=1)[1]

    def hessian_at(self, x):
        return self.fields_at(x)[2]

    # -- ruling distances -------------------------------------------------

    def ruling_distances(self, t, s_dir):
        """``S`` and ``L`` along the front direction ``sum_i s_i N_i(t)``.

        ``L`` is the grid infimum over ``t~`` of the Cramer-rule hitting
        distance, including the focal limit ``1/(s.kappa)`` of the adjacent
        cells, refined by golden-section search around the grid minimiser.
        """
        t = float(self._check_t(t))
        s_dir = np.asarray(s_dir, dtype=float).reshape(self.n - 1)
        if abs(np.linalg.norm(s_dir) - 1.0) > 1e-12:
            raise InvalidInput("s_dir must be a unit vector")
        s_dir = s_dir / np.linalg.norm(s_dir)
        g, D = self.curve.domain.state(t)
        w = s_dir @ D[1:]
        S = float(self.domain.boundary_distance(g, w))

        grid = self.curve.grid
        others = np.abs(grid - t) > 1e-12 * max(1.0, self.length)
        cand = np.full(grid.size, np.inf)
        cand[others] = self._cramer(g, D, s_dir, self.curve.domain.points[others],
                                    self.curve.domain.frames[others])
        L = float(cand.min())
        t_min = float(grid[np.argmin(cand)]) if np.isfinite(L) else None
        # focal limit t~ -> t on either side
        for cell in {int(self.curve.domain.cell(t)), int(self.curve.domain.cell(t - 1e-12))}:
            kd = float(s_dir @ self.curve.domain.generators[cell, 0, 1:])
            if kd > PARALLEL_TOL and 1.0 / kd < L:
                L, t_min = 1.0 / kd, t
        if np.isfinite(L) and t_min != t:
            k = int(np.argmin(cand))
            a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]

            def f(tt):
                gg, DD = self.curve.domain.state(np.array([tt]))
                if abs(tt - t) <= 1e-12:
                    return np.inf
                return float(self._cramer(g, D, s_dir, gg, DD)[0])

            try:
                tt, fv, _ = golden(f, brack=(a, grid[k], b), tol=1e-8, full_output=True)
                if a <= tt <= b and fv < L:
                    L, t_min = float(fv), float(tt)
            except (ValueError, RuntimeError):
                pass
        return RulingDistances(S, L, t_min)

    def _cramer(self, g, D, s_dir, gam_t, frames_t):
        """Hitting distance of the ray from ``g`` along ``s.N`` on the fronts ``frames_t``."""
        n = self.n
        Nt = frames_t[:, 1:, :]
        m = Nt.shape[0]
        h = np.empty((m, n - 1))
        for i in range(n - 1):
            mat = np.concatenate([Nt, np.broadcast_to(D[1 + i], (m, 1, n))], axis=1)
            h[:, i] = np.linalg.det(mat)
        mat = np.concatenate([Nt, (g - gam_t)[:, None, :]], axis=1)
        H = np.linalg.det(mat)
        parallel = np.all(np.abs(h) < PARALLEL_TOL, axis=1)
        if np.any(~parallel & (np.abs(H) < 1e-14 * self._scale)):
            raise DegenerateGeometry("non-parallel fronts with vanishing H")
        hs = h @ s_dir
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(parallel, 0.0, -hs / np.where(parallel, 1.0, H))
            return np.where(c > 0, 1.0 / np.where(c > 0, c, 1.0), np.inf)

    def safety_table(self, t_index=None, dirs=None):
        """Bulk ``(S, L)`` on grid times x directions using the dot-product form of ``h_i`` and ``H``.

        Since ``det[gamma', N_1, ..., N_{n-1}] = 1``, a determinant with the
        fronts of ``t~`` and a last row ``w`` equals ``(-1)^(n-1) w.gamma'(t~)``.
        """
        n = self.n
        grid = self.curve.grid
        if t_index is None:
            t_index = np.arange(grid.size)
        if dirs is None:
            dirs = sphere_directions(n)
        gam = self.curve.domain.points
        fr = self.curve.domain.frames
        tan = fr[:, 0, :]
        ki = self.curve.domain.generators[:, 0, 1:]
        offset = np.einsum("mj,mj->m", gam, tan)
        S = np.empty((t_index.size, dirs.shape[0]))
        L = np.full((t_index.size, dirs.shape[0]), np.inf)
        for row, k in enumerate(t_index):
            w = dirs @ fr[k, 1:, :]
            S[row] = self.domain.exit_distance(gam[k], w)
            h = fr[k, 1:, :] @ tan.T              # (n-1, M+1), sign cancels in c
            H = tan @ gam[k] - offset
            mask = np.arange(grid.size) != k
            hs = dirs @ h[:, mask]                 # (ndir, M)
            Hm = H[mask]
            parallel = np.all(np.abs(h[:, mask]) < PARALLEL_TOL, axis=0)
            with np.errstate(divide="ignore", invalid="ignore"):
                c = np.where(parallel, 0.0, -hs / np.where(parallel, 1.0, Hm))
                hit = np.where(c > 0, 1.0 / np.where(c > 0, c, 1.0), np.inf)
            L[row] = hit.min(axis=1)
            for cell in {max(k - 1, 0), min(k, grid.size - 2)}:
                kd = dirs @ ki[cell]
                with np.errstate(divide="ignore"):
                    L[row] = np.minimum(L[row], np.where(kd > PARALLEL_TOL, 1.0 / np.where(kd > PARALLEL_TOL, kd, 1.0), np.inf))
        return S, L

    # -- validation -------------------------------------------------------

    def validate(self, max_times=400, radii=32, dirs=None):
        """Check Jacobian positivity, ``L > S`` and the isometry identity on grids."""
        n = self.n
        grid = self.curve.grid
        dirs = sphere_directions(n) if dirs is None else dirs
        fr = self.curve.domain.frames
        gam = self.curve.domain.points
        # Jacobian on (every grid time) x (directions) x (radii S j / radii)
        S_all = np.stack([self.domain.exit_distance(gam, dirs[d] @ fr[:, 1:, :]) for d in range(dirs.shape[0])], axis=1)
        min_j, wit_j = np.inf, None
        for side, cells in (("left", np.clip(np.arange(grid.size) - 1, 0, None)),
                            ("right", np.clip(np.arange(grid.size), None, grid.size - 2))):
            kd = self.curve.domain.generators[cells, 0, 1:] @ dirs.T     # (M+1, ndir)
            frac = np.arange(radii + 1) / radii
            J = 1.0 - S_all[:, :, None] * frac[None, None, :] * kd[:, :, None]
            idx = np.unravel_index(np.argmin(J), J.shape)
            if J[idx] < min_j:
                min_j = float(J[idx])
                wit_j = (float(grid[idx[0]]), tuple(float(v) for v in dirs[idx[1]]), float(S_all[idx[0], idx[1]] * frac[idx[2]]))
        stride = max(1, int(np.ceil(grid.size / max_times)))
        t_index = np.arange(0, grid.size, stride)
        if t_index[-1] != grid.size - 1:
            t_index = np.append(t_index, grid.size - 1)
        S, L = self.safety_table(t_index, dirs)
        gap = L - S
        idx = np.unravel_index(np.argmin(gap), gap.shape)
        min_gap = float(gap[idx])
        wit_m = (float(grid[t_index[idx[0]]]), tuple(float(v) for v in dirs[idx[1]]))
        G = _gradient(fr, self.curve.target.frames, n)
        resid = float(np.max(np.abs(np.swapaxes(G, -1, -2) @ G - np.eye(n))))
        return ValidationReport(
            min_jacobian=min_j, jacobian_witness=wit_j,
            min_margin=min_gap, margin_witness=wit_m,
            isometry_residual=resid, grid_spacing=float(np.max(np.diff(grid))),
            checks={"jacobian": min_j > 0, "fronts": min_gap > 0, "isometry": resid <= 1e-9})

    # -- quadrature -------------------------------------------------------

    def chart_quadrature(self, t_nodes=64, s_nodes=64, r_nodes=32, theta_nodes=64,
                         max_panel=None, extra_breaks=()):
        """Product rule on ``Sigma^gamma``: Gauss in ``t`` per panel, then a segment or polar rule."""
        ell = self.length
        breaks = sorted({0.0, ell, *self.curve.profile.breakpoints,
                         *(b for b in extra_breaks if 0.0 < b < ell)})
        t, wt = gauss_panels(np.asarray(breaks), t_nodes, max_panel)
        g, D = self.curve.domain.state(t)
        n = self.n
        if n == 2:
            N1 = D[:, 1, :]
            sp = self.domain.exit_distance(g, N1)
            sm = self.domain.exit_distance(g, -N1)
            xg, wg = np.polynomial.legendre.leggauss(s_nodes)
            mid, half = 0.5 * (sp - sm), 0.5 * (sp + sm)
            s = mid[:, None] + half[:, None] * xg
            w = wt[:, None] * half[:, None] * wg
            tt = np.broadcast_to(t[:, None], s.shape)
            s = s.reshape(-1, 1)
        elif n == 3:
            th = 2.0 * np.pi * np.arange(theta_nodes) / theta_nodes
            dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
            w_dirs = np.einsum("da,tai->tdi", dirs, D[:, 1:, :])
            R = self.domain.exit_distance(g[:, None, :], w_dirs)            # (T, ndir)
            xg, wg = np.polynomial.legendre.leggauss(r_nodes)
            r = 0.5 * R[..., None] * (xg + 1.0)                             # (T, ndir, nr)
            w = (wt[:, None, None] * (2.0 * np.pi / theta_nodes)
                 * 0.5 * R[..., None] * wg * r)
            s = r[..., None] * dirs[None, :, None, :]
            tt = np.broadcast_to(t[:, None, None], r.shape)
            s = s.reshape(-1, 2)
        else:
            raise InvalidInput("chart quadrature is implemented for n = 2 and n = 3")
        tt = tt.ravel()
        J = 1.0 - np.einsum("ni,ni->n", s, self.curve.effective_kappa(tt))
        return ChartQuadrature(tt, s, w.ravel(), J)

    def sobolev_norms(self, quadrature=None, check=True, **rule):
        """Squared ``L^2`` norms of ``u``, ``grad u``, ``hess u`` by the change of variables ``x = Phi(t, s)``."""
        if check:
            rep = self.validate()
            if not (rep.checks["jacobian"] and rep.checks["fronts"]):
                raise PreconditionViolation("immersion failed validation", witness=rep.jacobian_witness)
        q = quadrature if quadrature is not None else self.chart_quadrature(**rule)
        _, D, gt, T = self.curve.state(q.t)
        u = gt + np.einsum("ni,nij->nj", q.s, T[:, 1:self.n, :])
        G = _gradient(D, T, self.n)
        H = self.hessian(q.t, q.s)
        mu = q.measure
        return SobolevNorms(
            l2=float(np.sum(mu * np.einsum("nj,nj->n", u, u))),
            grad=float(np.sum(mu * np.sum(G * G, axis=(-2, -1)))),
            hess=float(np.sum(mu * np.sum(H * H, axis=(-3, -2, -1)))),
            volume=float(np.sum(mu)))


def _gradient(D, T, n):
    return np.einsum("...ai,...aj->...ij", T[..., :n, :], D)
