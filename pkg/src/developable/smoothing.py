"""Smooth approximation of a nonsmooth developable immersion.

Given an immersion ``u`` with a uniform safety margin ``rho`` between the
front-intersection distance ``L`` and the boundary distance ``S``, each stage
``m`` of the pipeline

1. mollifies the front curvatures at width ``1/m`` and integrates a trial
   curve ``Gamma_m``;
2. computes the flattening factor ``lambda_m = min(1, 1 / sup (S + rho/2) s.kappa)``
   on the sphere grid;
3. multiplies the mollified curvatures by ``lambda_m``;
4. replaces ``lambda_m`` by its mollification at width ``1/(4m)`` so the
   curvatures become smooth, and checks the inequality again with ``rho/4``;
5. integrates the final curve ``gamma_m`` and checks it with ``rho/8``;
6. checks the Jacobian floor ``min(rho / 16 d, 1/2)``.

The normal curvature is mollified, switched off near both ends with the
``psi_1 psi_2`` cutoffs and integrated into the Darboux frame of ``u_m``.
Inequalities are checked at the cell midpoints of the integration grid, where
the effective curvatures are sampled.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (InvalidInput, MarginViolation, StageFailure,
                     WindowCollapsed)
from .frames import FramedCurve, integrate_domain_frame
from .immersion import DevelopableImmersion, sphere_directions
from .profile import Cutoff, PiecewiseLinear, Product

INEQ_TOL = 1e-9


@dataclass(frozen=True)
class SmoothingConfig:
    """Parameters of the smoothing pipeline.

    Attributes
    ----------
    schedule : tuple of int
        Increasing smoothing indices ``m``.
    rho : float
        Safety margin, at most the measured :func:`margin_check` value.
    sphere_points : int
        Directions on the circle for ``n = 3`` (``n = 2`` always uses ``+-1``).
    radii : int
        Radius samples per direction in the Jacobian check.
    cutoff_scale : float
        Multiplier on ``m`` inside the endpoint cutoffs.
    step : float or None
        Integration step; defaults to the grid spacing of the input curve.
    refine_factor : float
        Step 4 mollifies ``lambda_m`` at width ``1/(refine_factor m)``.
    t_nodes, s_nodes : int
        Gauss nodes per ``t`` panel and per front segment in the error report.
    """

    schedule: tuple = (4, 8, 16, 32)
    rho: float = 1.0
    sphere_points: int = 256
    radii: int = 32
    cutoff_scale: float = 1.0
    step: float = None
    refine_factor: float = 4.0
    t_nodes: int = 16
    s_nodes: int = 48

    def __post_init__(self):
        sched = tuple(int(m) for m in self.schedule)
        if not sched:
            raise InvalidInput("the m-schedule is empty")
        if any(b <= a for a, b in zip(sched[:-1], sched[1:])) or sched[0] < 1:
            raise InvalidInput("the m-schedule must be positive and increasing")
        if not self.rho > 0:
            raise InvalidInput("rho must be positive")
        object.__setattr__(self, "schedule", sched)


@dataclass(frozen=True, eq=False)
class SmoothingStageRecord:
    """Intermediates and verification results of one pipeline stage."""

    m: int
    mollified: object
    trial_curve: object
    lambda_times: np.ndarray
    lambda_values: np.ndarray
    flattened: object
    final: object
    curve: object
    inequalities: dict
    jacobian_min: float
    jacobian_floor: float
    ell_star: float = None
    normal: object = None
    immersion: object = None
    validation: object = None
    witnesses: dict = field(default_factory=dict)

    def summary(self):
        lines = [f"m={self.m}"]
        for k, v in self.inequalities.items():
            lines.append(f"{k}={float(v)!r}")
        lines += [f"jacobian_min={float(self.jacobian_min)!r}", f"jacobian_floor={float(self.jacobian_floor)!r}",
                  f"lambda_min={float(self.lambda_values.min())!r}",
                  f"lambda_below_one_fraction={self.lambda_deficit_fraction()!r}"]
        if self.ell_star is not None:
            lines.append(f"ell_star={float(self.ell_star)!r}")
        if self.validation is not None:
            lines.append(f"isometry_residual={float(self.validation.isometry_residual)!r}")
        return "\n".join(lines)

    def lambda_deficit_fraction(self, tol=1e-3):
        return float(np.mean(self.lambda_values < 1.0 - tol))


def _dirs(n, count):
    return sphere_directions(n, count)


def _midpoint_sup(curve_sol, kappa_mid, domain, rho_slack, dirs):
    """``max_dir (S(t, dir) + slack)(dir . kappa)`` at the cell midpoints of ``curve_sol``."""
    mids = 0.5 * (curve_sol.grid[:-1] + curve_sol.grid[1:])
    g, D = curve_sol.state(mids)
    w = np.einsum("da,tai->tdi", dirs, D[:, 1:, :])
    S = domain.exit_distance(g[:, None, :], w)
    val = (S + rho_slack) * (kappa_mid @ dirs.T)
    k = np.argmax(val, axis=1)
    return mids, val[np.arange(mids.size), k], k


def margin_check(imm: DevelopableImmersion, dirs=None, max_times=400):
    """Measured margin ``inf (L - S)`` over the validation grid (``inf`` if fronts never meet).

    Raises :class:`MarginViolation` with a ``(t, s_dir)`` witness when it is
    not positive.
    """
    rep = imm.validate(max_times=max_times, dirs=dirs)
    if not rep.min_margin > 0:
        raise MarginViolation(f"L - S = {rep.min_margin:.6g} <= 0", witness=rep.margin_witness)
    return rep.min_margin


def flatten_factor(trial_curve, domain, rho, dirs):
    """``lambda_m`` at the cell midpoints of the trial curve ``Gamma_m``.

    Returns ``(times, values)``; values lie in ``(0, 1]``.
    """
    kappa = trial_curve.generators[:, 0, 1:]
    mids, sup, _ = _midpoint_sup(trial_curve, kappa, domain, 0.5 * rho, dirs)
    with np.errstate(divide="ignore"):
        lam = np.where(sup > 0, np.minimum(1.0, 1.0 / np.where(sup > 0, sup, 1.0)), 1.0)
    return mids, lam


def endpoint_cutoff(component, m, ell_star, scale=1.0):
    """``psi1(m (t - ell*)) psi2(m t) kappa_n(t)``, zero on ``[0, 1/m]`` and ``[ell* - 1/m, ell]``."""
    mm = scale * m
    if ell_star <= 2.0 / mm:
        raise WindowCollapsed(f"ell* = {ell_star:.6g} <= 2/m = {2.0 / mm:.6g}")
    return Cutoff(component, mm, float(ell_star))


def _plane_range(curve, domain, dirs):
    """Base point, front basis and radial extents of the last leading plane of ``curve``."""
    ell = curve.grid[-1]
    g, D = curve.state(np.array(ell))
    basis = D[1:, :]
    S = domain.exit_distance(np.broadcast_to(g, (dirs.shape[0], g.size)), dirs @ basis)
    return g, basis, S


def compute_ell_star(curve_m, curve, domain, dirs=None):
    """Largest ``t`` whose front of ``curve_m`` misses the closed last leading plane of ``curve``.

    Both arguments are :class:`~developable.frames.FrameSolution` domain
    solutions. Returns ``ell`` when the last plane of ``curve`` lies behind
    the last front of ``curve_m`` (so ``Omega(gamma)`` is inside
    ``Omega(gamma_m)``). Otherwise the grid scan is refined by bisection.
    """
    n = curve.dim
    dirs = _dirs(n, 256) if dirs is None else dirs
    ell = float(curve.grid[-1])
    p0, basis, S = _plane_range(curve, domain, dirs)
    tol = 1e-12 * max(1.0, domain.diameter())

    def ranges(points, frames):
        tan = frames[..., 0, :]
        a = np.einsum("...j,...j->...", p0 - points, tan)
        b = tan @ basis.T                               # (..., n-1)
        proj = S * (b @ dirs.T)                         # (..., ndir)
        return a + np.minimum(proj.min(axis=-1), 0.0), a + np.maximum(proj.max(axis=-1), 0.0)

    lo_end, hi_end = ranges(curve_m.points[-1], curve_m.frames[-1])
    if hi_end <= tol:
        return ell
    lo, hi = ranges(curve_m.points, curve_m.frames)
    misses = (lo > tol) | (hi < -tol)
    if np.all(misses):
        return ell
    if not np.any(misses):
        return 0.0
    k = int(np.nonzero(misses)[0].max())
    if k == curve_m.grid.size - 1:
        return ell
    a, b = curve_m.grid[k], curve_m.grid[k + 1]
    for _ in range(60):
        mid = 0.5 * (a + b)
        pts, frs = curve_m.state(np.array(mid))
        l, h = ranges(pts, frs)
        if (l > tol) or (h < -tol):
            a = mid
        else:
            b = mid
        if b - a <= 1e-14 * ell:
            break
    return float(a)


def _check(name, values, mids, dirs_idx, dirs, bound, inequalities, witnesses):
    worst = int(np.argmax(values))
    inequalities[name] = float(values[worst])
    witnesses[name] = (float(mids[worst]), tuple(float(v) for v in dirs[dirs_idx[worst]]))
    if values[worst] > bound + INEQ_TOL:
        raise StageFailure(f"{name}: {values[worst]!r} > {bound}", witness=witnesses[name],
                           inequality=name)


def jacobian_floor_check(curve_sol, domain, dirs, radii=32):
    """Minimum of ``1 - r dir.kappa`` over grid times, directions and ``r = S j / radii``."""
    grid = curve_sol.grid
    g, fr = curve_sol.points, curve_sol.frames
    S = np.stack([domain.exit_distance(g, d @ fr[:, 1:, :]) for d in dirs], axis=1)
    frac = np.arange(radii + 1) / radii
    best = (np.inf, None)
    for cells in (np.clip(np.arange(grid.size) - 1, 0, None), np.clip(np.arange(grid.size), None, grid.size - 2)):
        kd = curve_sol.generators[cells, 0, 1:] @ dirs.T
        J = 1.0 - S[:, :, None] * frac * kd[:, :, None]
        idx = np.unravel_index(np.argmin(J), J.shape)
        if J[idx] < best[0]:
            best = (float(J[idx]), (float(grid[idx[0]]), tuple(map(float, dirs[idx[1]])), float(S[idx[:2]] * frac[idx[2]])))
    return best


def build_smooth_curve(imm: DevelopableImmersion, config: SmoothingConfig, m: int):
    """Steps 1 to 6 on the domain side; returns a record without the Darboux data."""
    domain = imm.domain
    if not domain.is_c1:
        raise InvalidInput("the smoothing pipeline needs a C^1 domain (polytopes are rejected)")
    profile = imm.curve.profile
    n = profile.n
    dirs = _dirs(n, config.sphere_points)
    rho = config.rho
    step = config.step or imm.curve.step
    F0 = imm.curve.domain.frames[0]
    x0 = imm.curve.domain.points[0]
    ell = profile.length
    inequalities, witnesses = {}, {}

    # Step 1: mollified curvatures and the trial curve
    mol = profile.mollified(m)
    trial = integrate_domain_frame(mol, F0, step, x0)
    if not np.all(domain.contains(trial.points)):
        raise StageFailure("trial curve leaves the domain", inequality="containment")

    # Step 2: flattening factor
    lam_t, lam = flatten_factor(trial, domain, rho, dirs)
    lam_pl = PiecewiseLinear(tuple(lam_t), tuple(lam))

    # Step 3: flattened curvatures satisfy the rho/2 inequality on the same grid
    flattened = mol.with_components(kappa=[Product(lam_pl, k) for k in mol.kappa])
    mids, sup, k = _midpoint_sup(trial, flattened.sample(lam_t)[:, :n - 1], domain, 0.5 * rho, dirs)
    _check("curvature_rho2", sup, mids, k, dirs, 1.0, inequalities, witnesses)

    # Step 4: smooth flattening factor; check rho/4 against the trial curve
    lam_smooth = lam_pl.mollified(1.0 / (config.refine_factor * m), ell)
    final = mol.with_components(kappa=[Product(lam_smooth, kc) for kc in mol.kappa])
    mids, sup, k = _midpoint_sup(trial, final.sample(lam_t)[:, :n - 1], domain, 0.25 * rho, dirs)
    _check("curvature_rho4", sup, mids, k, dirs, 1.0, inequalities, witnesses)

    # Step 5: the final curve, checked with rho/8 at its own effective curvatures
    curve = integrate_domain_frame(final, F0, step, x0)
    if not np.all(domain.contains(curve.points)):
        raise StageFailure("smoothed curve leaves the domain", inequality="containment")
    mids, sup, k = _midpoint_sup(curve, curve.generators[:, 0, 1:], domain, 0.125 * rho, dirs)
    _check("curvature_rho8", sup, mids, k, dirs, 1.0, inequalities, witnesses)

    # Step 6: Jacobian floor
    floor = min(rho / (16.0 * domain.diameter()), 0.5)
    jmin, jwit = jacobian_floor_check(curve, domain, dirs, config.radii)
    witnesses["jacobian"] = jwit
    if jmin < floor - INEQ_TOL:
        raise StageFailure(f"Jacobian {jmin!r} below floor {floor!r}", witness=jwit, inequality="jacobian")

    return SmoothingStageRecord(
        m=m, mollified=mol, trial_curve=trial, lambda_times=lam_t, lambda_values=lam,
        flattened=flattened, final=final, curve=curve, inequalities=inequalities,
        jacobian_min=jmin, jacobian_floor=float(floor), witnesses=witnesses)


def build_smooth_immersion(record: SmoothingStageRecord, imm: DevelopableImmersion,
                           config: SmoothingConfig):
    """Cut off the normal curvature, integrate the Darboux frame and assemble ``u_m``.

    Returns a copy of ``record`` carrying ``ell_star``, the cut-off normal
    curvature, ``u_m`` and its validation report. ``u_m`` extends affinely
    beyond its end fronts.
    """
    m = record.m
    profile = imm.curve.profile
    domain = imm.domain
    n = profile.n
    step = config.step or imm.curve.step
    ell_star = compute_ell_star(record.curve, imm.curve.domain, domain, _dirs(n, config.sphere_points))
    normal = endpoint_cutoff(profile.normal.mollified(1.0 / m, profile.length), m, ell_star,
                             config.cutoff_scale)
    full = record.final.with_components(normal=normal)
    curve = FramedCurve.build(full, imm.curve.domain.frames[0], step,
                              target_frame0=imm.curve.target.frames[0],
                              origin=imm.curve.domain.points[0],
                              target_origin=imm.curve.target.points[0])
    u_m = DevelopableImmersion(curve, domain, extend_affine=True)
    rep = u_m.validate(dirs=_dirs(n, 64) if n == 3 else None)
    if not rep.passed:
        failed = [k for k, v in rep.checks.items() if not v]
        raise StageFailure(f"u_m failed validation: {failed}", witness=rep.jacobian_witness,
                           inequality=failed[0])
    return replace(record, ell_star=ell_star, normal=normal, immersion=u_m, validation=rep)


def run_stage(imm, config, m):
    return build_smooth_immersion(build_smooth_curve(imm, config, m), imm, config)


def run_pipeline(imm, config: SmoothingConfig, threads=1):
    """All stages of the schedule, in schedule order; stages may run on worker threads."""
    if threads <= 1:
        return [run_stage(imm, config, m) for m in config.schedule]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda m: run_stage(imm, config, m), config.schedule))


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    l2: float
    grad: float
    hess: float
    sliver_volume: float

    @property
    def total(self):
        return self.l2 + self.grad + self.hess


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple

    @property
    def errors(self):
        return np.array([r.total for r in self.rows])

    @property
    def monotone(self):
        e = self.errors
        return bool(np.all(np.diff(e) < 0))

    @property
    def ratio(self):
        e = self.errors
        return float(e[-1] / e[0]) if e[0] > 0 else 0.0

    def table(self):
        head = "m,l2,grad,hess,total,sliver_volume"
        body = [f"{r.m},{r.l2:.17g},{r.grad:.17g},{r.hess:.17g},{r.total:.17g},{r.sliver_volume:.17g}"
                for r in self.rows]
        return "\n".join([head] + body)


def feature_breaks(records, ell):
    """Panel breaks where the ``u_m`` integrands change character."""
    pts = set()
    for rec in records:
        m = rec.m
        pts.update([1.0 / m, 2.0 / m])
        if rec.ell_star is not None:
            pts.update([rec.ell_star - 2.0 / m, rec.ell_star - 1.0 / m])
        for b in rec.final.breakpoints + rec.mollified.breakpoints:
            pts.update([b - 1.0 / m, b + 1.0 / m])
    return tuple(p for p in sorted(pts) if 0.0 < p < ell)


def sliver_volume(imm, u_m, samples=20000, seed=0):
    """Monte Carlo volume of ``Omega(gamma) \\ Omega(gamma_m)`` with a fixed seed."""
    lo, hi = imm.domain.bounding_box()
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random((samples, lo.size))
    x = x[imm.domain.contains(x)]
    box = float(np.prod(hi - lo))
    if x.size == 0:
        return 0.0
    _, _, side = imm.locate(x)
    _, _, side_m = u_m.locate(x)
    return box * float(np.count_nonzero((side == 0) & (side_m != 0))) / samples


def convergence_report(imm: DevelopableImmersion, records, config: SmoothingConfig = None,
                       seed=0):
    """Squared ``W^{2,2}`` distance between ``u`` and each ``u_m`` over ``Omega(gamma)``.

    Both maps are evaluated at the physical nodes ``x = Phi(t, s)`` of one
    chart rule for ``u``; ``u_m`` is pulled back through its own inverse chart
    and uses its affine extension off its fronts.
    """
    config = config or SmoothingConfig()
    ms = [r.m for r in records]
    q = imm.chart_quadrature(t_nodes=config.t_nodes, s_nodes=config.s_nodes,
                             max_panel=1.0 / (2.0 * max(ms)),
                             extra_breaks=feature_breaks(records, imm.length))
    x = imm.phi(q.t, q.s)
    _, D, gt, T = imm.curve.state(q.t)
    u = gt + np.einsum("ni,nij->nj", q.s, T[:, 1:imm.n, :])
    G = np.einsum("nai,naj->nij", T[:, :imm.n, :], D)
    H = imm.hessian(q.t, q.s)
    mu = q.measure
    rows = []
    for rec in records:
        um, Gm, Hm = rec.immersion.fields_at(x)
        rows.append(ConvergenceRow(
            m=rec.m,
            l2=float(np.sum(mu * np.sum((um - u) ** 2, axis=-1))),
            grad=float(np.sum(mu * np.sum((Gm - G) ** 2, axis=(-2, -1)))),
            hess=float(np.sum(mu * np.sum((Hm - H) ** 2, axis=(-3, -2, -1)))),
            sliver_volume=sliver_volume(imm, rec.immersion, seed=seed)))
    return ConvergenceReport(tuple(rows))


def frame_distance(curve_a, curve_b, times):
    """``sup_t |F_a(t) - F_b(t)|_inf`` over the sample ``times``."""
    _, Fa = curve_a.state(times)
    _, Fb = curve_b.state(times)
    return float(np.max(np.abs(Fa - Fb)))
