"""Empirical developability checks on sampled maps.

A :class:`SampledMap` holds values of a map ``u: Omega -> R^{n+1}`` on the
nodes of a regular lattice, masked to the domain. From it we estimate the
gradient and Hessian by finite differences, measure the isometry defect,
compute the unit normal and the second fundamental form, and split the nodes
into flat bodies and ruled points with their ruling hyperplanes.

The sharpness probe integrates ``|hess u|^p`` of the cone family over shells
around the apex and decides whether the integrals settle (``p < 2``) or keep
growing by a fixed amount per halving of the inner radius (``p = 2``).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.interpolate import RegularGridInterpolator

from .errors import InsufficientResolution, InvalidInput
from .gluing import unit_normal


@dataclass(frozen=True, eq=False)
class SampledMap:
    """Values on a masked regular lattice.

    Attributes
    ----------
    origin : ndarray, shape (n,)
        Coordinates of node ``(0, ..., 0)``.
    h : float
        Lattice spacing.
    mask : ndarray of bool, shape ``shape``
        Nodes inside the domain.
    values : ndarray, shape ``shape + (n+1,)``
        Map values; entries outside the mask are NaN.
    """

    origin: np.ndarray
    h: float
    mask: np.ndarray
    values: np.ndarray

    @property
    def n(self):
        return self.mask.ndim

    @property
    def shape(self):
        return self.mask.shape

    def nodes(self):
        axes = [self.origin[i] + self.h * np.arange(s) for i, s in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @classmethod
    def from_function(cls, func, domain, h, mask=None):
        """Sample ``func`` (vectorised over points) on the lattice covering ``domain``."""
        lo, hi = domain.bounding_box()
        shape = tuple(int(np.floor((b - a) / h)) + 1 for a, b in zip(lo, hi))
        origin = np.asarray(lo, dtype=float)
        axes = [origin[i] + h * np.arange(s) for i, s in enumerate(shape)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        inside = domain.contains(pts)
        if mask is not None:
            inside &= mask(pts)
        sample = np.asarray(func(pts[inside]), dtype=float)
        values = np.full(shape + (sample.shape[-1],), np.nan)
        values[inside] = sample
        return cls(origin, float(h), inside, values)

    @classmethod
    def from_immersion(cls, imm, h):
        """Sample an immersion on the covered part of its domain."""

        def covered(pts):
            _, _, side = imm.locate(pts)
            return side == 0

        return cls.from_function(imm.value_at, imm.domain, h, mask=covered)

    @classmethod
    def from_points(cls, points, values, h=None):
        """Rebuild the lattice from scattered node coordinates (as read from CSV)."""
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if points.ndim != 2 or values.shape[0] != points.shape[0]:
            raise InvalidInput("points and values must have one row per node")
        origin = points.min(axis=0)
        if h is None:
            diffs = np.concatenate([np.diff(np.unique(points[:, i])) for i in range(points.shape[1])])
            if diffs.size == 0:
                raise InsufficientResolution("a single node carries no derivative information")
            h = float(np.min(diffs))
        idx = np.rint((points - origin) / h).astype(int)
        if np.max(np.abs(idx * h + origin - points)) > 1e-6 * h:
            raise InvalidInput("nodes do not lie on a regular lattice")
        shape = tuple(idx.max(axis=0) + 1)
        mask = np.zeros(shape, dtype=bool)
        vals = np.full(shape + (values.shape[1],), np.nan)
        mask[tuple(idx.T)] = True
        vals[tuple(idx.T)] = values
        return cls(origin, h, mask, vals)


@dataclass(frozen=True, eq=False)
class Fields:
    """Finite-difference estimates on a :class:`SampledMap`.

    ``grad`` has shape ``shape + (n+1, n)`` and ``hess`` ``shape + (n, n, n+1)``;
    both are NaN where undefined. ``interior`` marks nodes with a full
    ``3^n`` stencil; ``boundary_layer`` marks masked nodes outside it.
    """

    smap: SampledMap
    grad: np.ndarray
    hess: np.ndarray
    grad_mask: np.ndarray
    interior: np.ndarray

    @property
    def boundary_layer(self):
        return self.smap.mask & ~self.interior


def _shift(a, axis, k, fill=np.nan):
    out = np.full_like(a, fill)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if k > 0:
        src[axis], dst[axis] = slice(k, None), slice(None, -k)
    else:
        src[axis], dst[axis] = slice(None, k), slice(-k, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _shift_mask(m, axis, k):
    return _shift(m.astype(float), axis, k, fill=0.0).astype(bool)


def estimate_fields(smap: SampledMap):
    """Gradient (central, one-sided at the mask edge) and symmetric Hessian on the interior."""
    n, h = smap.n, smap.h
    f, mask = smap.values, smap.mask
    interior = ndimage.binary_erosion(mask, structure=np.ones((3,) * n), border_value=0)
    if not interior.any():
        extent = min(int(np.ptp(np.nonzero(mask)[i])) if mask.any() else 0 for i in range(n))
        raise InsufficientResolution("no node has a full stencil inside the mask",
                                     min_h=h * max(extent, 1) / 5.0)
    grad = np.full(smap.shape + (f.shape[-1], n), np.nan)
    for j in range(n):
        fp, fm = _shift(f, j, 1), _shift(f, j, -1)
        mp, mm = _shift_mask(mask, j, 1), _shift_mask(mask, j, -1)
        fp2, fm2 = _shift(f, j, 2), _shift(f, j, -2)
        mp2, mm2 = _shift_mask(mask, j, 2), _shift_mask(mask, j, -2)
        central = (fp - fm) / (2 * h)
        forward = (-3 * f + 4 * fp - fp2) / (2 * h)
        backward = (3 * f - 4 * fm + fm2) / (2 * h)
        g = np.where((mp & mm)[..., None], central,
                     np.where((mp & mp2)[..., None], forward,
                              np.where((mm & mm2)[..., None], backward, np.nan)))
        grad[..., j] = np.where(mask[..., None], g, np.nan)
    grad_mask = mask & np.all(np.isfinite(grad), axis=(-2, -1))

    hess = np.full(smap.shape + (n, n, f.shape[-1]), np.nan)
    for j in range(n):
        hess[..., j, j, :] = (_shift(f, j, 1) - 2 * f + _shift(f, j, -1)) / h**2
        for k in range(j + 1, n):
            pp = _shift(_shift(f, j, 1), k, 1)
            pm = _shift(_shift(f, j, 1), k, -1)
            mp = _shift(_shift(f, j, -1), k, 1)
            mm = _shift(_shift(f, j, -1), k, -1)
            mixed = (pp - pm - mp + mm) / (4 * h**2)
            hess[..., j, k, :] = mixed
            hess[..., k, j, :] = mixed
    hess[~interior] = np.nan
    return Fields(smap, grad, hess, grad_mask, interior)


def isometry_residual(fields: Fields):
    """Per-node ``|grad^T grad - I|_inf`` and its maximum over interior nodes."""
    G = fields.grad
    n = G.shape[-1]
    res = np.max(np.abs(np.swapaxes(G, -1, -2) @ G - np.eye(n)), axis=(-2, -1))
    res = np.where(fields.grad_mask, res, np.nan)
    vals = res[fields.interior]
    return res, float(np.max(vals)) if vals.size else np.nan


def normal_field(fields: Fields, degenerate_tol=1e-8):
    """Unit normals by cofactor expansion; returns ``(normals, degenerate)``."""
    G = np.where(fields.grad_mask[..., None, None], fields.grad, 0.0)
    n1 = G.shape[-2]
    comps = []
    for k in range(n1):
        e = np.zeros(n1)
        e[k] = 1.0
        mat = np.concatenate([G, np.broadcast_to(e[:, None], G.shape[:-1] + (1,))], axis=-1)
        comps.append(np.linalg.det(mat))
    raw = np.stack(comps, axis=-1)
    norm = np.linalg.norm(raw, axis=-1)
    degenerate = fields.grad_mask & (norm < degenerate_tol)
    ok = fields.grad_mask & ~degenerate
    normals = np.full(raw.shape, np.nan)
    normals[ok] = raw[ok] / norm[ok][:, None]
    return normals, degenerate


@dataclass(frozen=True, eq=False)
class SecondForm:
    A: np.ndarray
    symmetry_defect: float
    max_minor: float
    codazzi_defect: float
    minors: np.ndarray


def _max_minor(A):
    n = A.shape[-1]
    out = np.zeros(A.shape[:-2])
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(n):
                for l in range(j + 1, n):
                    out = np.maximum(out, np.abs(A[..., i, j] * A[..., k, l] - A[..., i, l] * A[..., k, j]))
    return out


def second_form_field(fields: Fields, normals):
    """``A_jk = <u_,jk, n>`` with symmetry, rank-one and Codazzi defects over interior nodes."""
    A = np.einsum("...jkl,...l->...jk", fields.hess, normals)
    inner = fields.interior & np.all(np.isfinite(A), axis=(-2, -1))
    n = A.shape[-1]
    sym = np.abs(A - np.swapaxes(A, -1, -2)).max(axis=(-2, -1))
    minors = _max_minor(A)
    h = fields.smap.h
    codazzi = np.zeros(A.shape[:-2])
    for k in range(n):
        dk = (_shift(A, k, 1) - _shift(A, k, -1)) / (2 * h)
        for j in range(n):
            if j == k:
                continue
            dj = (_shift(A, j, 1) - _shift(A, j, -1)) / (2 * h)
            # d_k A_ij - d_j A_ik for all i
            codazzi = np.maximum(codazzi, np.nan_to_num(np.abs(dk[..., :, j] - dj[..., :, k]).max(axis=-1), nan=0.0))
    cod_ok = inner.copy()
    for j in range(n):
        cod_ok &= _shift_mask(inner, j, 1) & _shift_mask(inner, j, -1)
    minors = np.where(inner, minors, np.nan)
    return SecondForm(
        A=np.where(inner[..., None, None], A, np.nan),
        symmetry_defect=float(np.max(sym[inner])) if inner.any() else np.nan,
        max_minor=float(np.nanmax(minors)) if inner.any() else np.nan,
        codazzi_defect=float(np.max(codazzi[cod_ok])) if cod_ok.any() else np.nan,
        minors=minors)


@dataclass
class BodyInfo:
    label: int
    size: int
    boundary_planes: int
    strict: bool


@dataclass
class RulingPartition:
    """Node classification: ``kind`` 0 unclassified/boundary layer, 1 flat body, 2 ruled.

    ``label`` holds the body id for flat nodes and the direction-cluster id for
    ruled nodes (-1 elsewhere). ``normals`` are unit normals of the ruling
    hyperplanes at ruled nodes.
    """

    mask: np.ndarray
    kind: np.ndarray
    label: np.ndarray
    normals: np.ndarray
    bodies: list
    cluster_normals: np.ndarray
    tau_flat: float
    tau_ruling: float
    noisy: bool
    competing: np.ndarray
    segments_checked: int = 0
    segments_failed: int = 0
    notes: dict = field(default_factory=dict)

    def summary(self):
        lines = [f"bodies={len(self.bodies)}",
                 f"ruled_nodes={int(np.count_nonzero(self.kind == 2))}",
                 f"flat_nodes={int(np.count_nonzero(self.kind == 1))}",
                 f"unclassified_nodes={int(np.count_nonzero(self.mask & (self.kind == 0)))}",
                 f"ruling_clusters={len(self.cluster_normals)}",
                 f"tau_flat={self.tau_flat!r}", f"tau_ruling={self.tau_ruling!r}",
                 f"noisy={self.noisy}", f"competing_nodes={int(np.count_nonzero(self.competing))}",
                 f"segments_checked={self.segments_checked}", f"segments_failed={self.segments_failed}"]
        for b in self.bodies:
            lines.append(f"body.{b.label}=size:{b.size},boundary_planes:{b.boundary_planes},strict:{b.strict}")
        for i, v in enumerate(self.cluster_normals):
            lines.append(f"cluster.{i}=" + ",".join(f"{c:.17g}" for c in v))
        return "\n".join(lines)


def _tensor_norm(H):
    """Frobenius norm over the last three axes, zero where undefined."""
    return np.sqrt(np.sum(np.nan_to_num(H) ** 2, axis=(-3, -2, -1)))


def _canonical(v):
    """Sign convention: the largest-magnitude component is positive."""
    idx = np.argmax(np.abs(v), axis=-1)
    s = np.sign(np.take_along_axis(v, idx[..., None], axis=-1))
    s[s == 0] = 1.0
    return v * s


def _angle(a, b):
    return np.arccos(np.clip(np.abs(a @ b.T), 0.0, 1.0))


def cluster_directions(normals, tol=2e-2):
    """Greedy leaders at ``tol/2`` merged by complete linkage at ``tol``; returns ``(labels, centres)``."""
    leaders, lab = [], np.empty(len(normals), dtype=int)
    for i, v in enumerate(normals):
        if leaders:
            ang = _angle(np.asarray(leaders), v[None])[:, 0]
            j = int(np.argmin(ang))
            if ang[j] <= tol / 2:
                lab[i] = j
                continue
        leaders.append(v)
        lab[i] = len(leaders) - 1
    L = np.asarray(leaders)
    if len(L) > 1:
        d = _angle(L, L)
        cond = d[np.triu_indices(len(L), 1)]
        merged = fcluster(linkage(cond, method="complete"), t=tol, criterion="distance") - 1
    else:
        merged = np.zeros(len(L), dtype=int)
    labels = merged[lab]
    centres = []
    for c in range(merged.max() + 1 if len(L) else 0):
        members = normals[labels == c]
        ref = members[0]
        aligned = members * np.sign(members @ ref)[:, None]
        m = aligned.mean(axis=0)
        centres.append(_canonical(m / np.linalg.norm(m)))
    return labels, np.asarray(centres)


def _segment_variation(fields, start_idx, direction, interp, tau, samples=24):
    """Max ``|grad u(p) - grad u(x)|`` along the segment from node ``x`` to the mask edge."""
    smap = fields.smap
    x = smap.origin + smap.h * np.asarray(start_idx)
    g0 = fields.grad[tuple(start_idx)]
    lo = smap.origin
    hi = smap.origin + smap.h * (np.asarray(smap.shape) - 1)
    # march until the interpolated gradient is undefined (outside the mask)
    ts = smap.h * np.arange(1, 4 * max(smap.shape))
    pts = x + ts[:, None] * direction
    inside = np.all((pts >= lo) & (pts <= hi), axis=1)
    pts = pts[inside]
    if pts.size == 0:
        return 0.0
    vals = interp(pts)
    ok = np.all(np.isfinite(vals), axis=(-2, -1))
    stop = int(np.argmin(ok)) if not ok.all() else ok.size
    if stop == 0:
        return 0.0
    pick = np.unique(np.linspace(0, stop - 1, min(samples, stop)).astype(int))
    return float(np.max(np.abs(vals[pick] - g0)))


def detect_rulings(fields: Fields, second: SecondForm = None, normals=None,
                   cluster_tol=2e-2, verify_stride=None):
    """Split interior nodes into flat bodies and ruled nodes with ruling hyperplanes."""
    smap = fields.smap
    n = smap.n
    _, res_max = isometry_residual(fields)
    if not res_max <= 0.1:
        raise InvalidInput(f"isometry residual {res_max:.3g} exceeds 0.1")
    if normals is None:
        normals, _ = normal_field(fields)
    if second is None:
        second = second_form_field(fields, normals)
    A = second.A
    valid = fields.interior & np.all(np.isfinite(A), axis=(-2, -1))
    normA = np.where(valid, np.linalg.norm(np.nan_to_num(A), axis=(-2, -1)), np.nan)
    vals = np.sort(normA[valid])
    decile = vals[: max(1, vals.size // 10)]
    tau_flat = max(1e-6, min(10.0 * float(np.median(decile)), 0.1 * float(np.median(vals))))
    flat = valid & (normA <= tau_flat)
    ruled = valid & ~flat

    kind = np.zeros(smap.shape, dtype=int)
    kind[flat], kind[ruled] = 1, 2
    label = np.full(smap.shape, -1, dtype=int)
    hyp = np.full(smap.shape + (n,), np.nan)
    competing = np.zeros(smap.shape, dtype=bool)

    idx = np.argwhere(ruled)
    cluster_normals = np.zeros((0, n))
    noisy = False
    checked = failed = 0
    max_hess = float(np.max(_tensor_norm(fields.hess)))
    extent = smap.h * np.linalg.norm(np.asarray(smap.shape) - 1)
    tau_ruling = float(1e-3 * max_hess * extent)
    if idx.size:
        Ar = A[ruled]
        _, sv, vt = np.linalg.svd(Ar)
        top = _canonical(vt[:, 0, :])
        ratio = sv[:, 1] / np.maximum(sv[:, 0], 1e-300) if n > 1 else np.zeros(len(sv))
        noisy_nodes = ratio > 0.1
        noisy = bool(np.mean(noisy_nodes) > 0.05)
        hyp[ruled] = top
        labs, cluster_normals = cluster_directions(top, cluster_tol)
        label[ruled] = labs
        comp = np.zeros(len(idx), dtype=bool)
        comp |= noisy_nodes

        # verify constancy of grad u along the detected hyperplane
        axes = [smap.origin[i] + smap.h * np.arange(s) for i, s in enumerate(smap.shape)]
        gfield = np.where(fields.grad_mask[..., None, None], fields.grad, np.nan)
        interp = RegularGridInterpolator(axes, gfield, bounds_error=False, fill_value=np.nan)
        stride = verify_stride or max(1, len(idx) // 400)
        for r in range(0, len(idx), stride):
            nv = top[r]
            basis = np.linalg.svd(nv[None, :])[2][1:]
            worst = 0.0
            for d in basis:
                for sgn in (1.0, -1.0):
                    worst = max(worst, _segment_variation(fields, idx[r], sgn * d, interp, tau_ruling))
            checked += 1
            if worst > tau_ruling:
                failed += 1
                comp[r] = True
        competing[ruled] = comp

    bodies = []
    body_lab, nb = ndimage.label(flat, structure=np.ones((3,) * n))
    if nb:
        grown_struct = np.ones((3,) * n)
        for b in range(1, nb + 1):
            comp_mask = body_lab == b
            label[comp_mask] = b - 1
            ring = ndimage.binary_dilation(comp_mask, structure=grown_struct, iterations=2) & ruled
            planes = 0
            if ring.any():
                pts = smap.origin + smap.h * np.argwhere(ring)
                nrm = hyp[ring]
                offs = np.einsum("ij,ij->i", pts, nrm)
                key = np.stack([label[ring], np.rint(offs / (4 * smap.h))], axis=1)
                planes = len(np.unique(key, axis=0))
            bodies.append(BodyInfo(b - 1, int(comp_mask.sum()), planes, planes > 2))
    return RulingPartition(smap.mask, kind, label, hyp, bodies, cluster_normals, tau_flat, tau_ruling,
                           noisy, competing, checked, failed)


# -- cone family and the sharpness probe ----------------------------------


def cone_map(x):
    """``(r/2 cos 2t, r/2 sin 2t, sqrt(3) r/2)`` at ``x = (r cos t, r sin t)``; extra coordinates pass through."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    th = np.arctan2(x[..., 1], x[..., 0])
    head = np.stack([0.5 * r * np.cos(2 * th), 0.5 * r * np.sin(2 * th), 0.5 * np.sqrt(3.0) * r], axis=-1)
    return np.concatenate([head, x[..., 2:]], axis=-1)


def cone_shell_oracle(p, a, b):
    """``int_{a<r<b} |hess u|^p`` for the cone map, with ``|hess u| = sqrt(3)/r``."""
    c = 2.0 * np.pi * 3.0 ** (p / 2.0)
    if abs(p - 2.0) < 1e-14:
        return c * np.log(b / a)
    return c * (b ** (2.0 - p) - a ** (2.0 - p)) / (2.0 - p)


@dataclass(frozen=True)
class ProbeResult:
    p: float
    verdict: str
    eps: np.ndarray
    increments: np.ndarray
    oracle: np.ndarray
    ratios: np.ndarray
    per_halving: np.ndarray

    @property
    def cumulative(self):
        return np.cumsum(self.increments)

    def table(self):
        head = "eps_outer,eps_inner,increment,oracle,per_halving"
        rows = [f"{a:.17g},{b:.17g},{d:.17g},{o:.17g},{q:.17g}"
                for a, b, d, o, q in zip(self.eps[:-1], self.eps[1:], self.increments, self.oracle, self.per_halving)]
        return "\n".join([head] + rows)


def default_schedule(levels=6, start=0.25, factor=4.0):
    return start / factor ** np.arange(levels + 1)


def shell_integral(func, p, inner, outer, h):
    """Node-sum ``h^2 sum |hess u|^p`` over ``inner < r <= outer`` from finite differences."""
    half = outer + 3 * h
    m = int(np.ceil(half / h))
    ax = h * (np.arange(-m, m + 1) + 0.5)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
    r = np.hypot(X[..., 0], X[..., 1])
    mask = (r > inner - 3 * h) & (r < outer + 3 * h)
    values = np.full(X.shape[:-1] + (3,), np.nan)
    values[mask] = func(X[mask])
    smap = SampledMap(np.array([ax[0], ax[0]]), h, mask, values)
    flds = estimate_fields(smap)
    hn = _tensor_norm(flds.hess)
    shell = (r > inner) & (r <= outer)
    if not np.all(flds.interior[shell]):
        raise InsufficientResolution("shell nodes lack a full stencil", min_h=inner / 4)
    return float(h * h * np.sum(hn[shell] ** p))


def sharpness_probe(p, schedule=None, resolution=32, h=None, func=cone_map):
    """Verdict on the finiteness of ``int |hess u|^p`` near the cone apex.

    Parameters
    ----------
    p : float
        Exponent in ``(1, 3)``.
    schedule : sequence of float
        Decreasing radii ``eps_0 > eps_1 > ...``; shell ``k`` is
        ``eps_{k+1} < r <= eps_k``. Default ``0.25 * 4^-k``, k = 0..6.
    resolution : int
        Nodes per inner radius when ``h`` is not fixed (``h = eps_{k+1}/resolution``).
    h : float, optional
        A fixed lattice spacing for all shells; every radius must be at least ``4 h``.

    Returns
    -------
    ProbeResult
        ``converges`` when every successive increment ratio is below 0.7,
        ``diverges`` when increments per halving of the radius stay within
        20% of their mean or never decrease, ``inconclusive`` otherwise.
    """
    if not 1.0 < p < 3.0:
        raise InvalidInput("p must lie in (1, 3)")
    eps = default_schedule() if schedule is None else np.asarray(schedule, dtype=float)
    if eps.size < 3 or np.any(np.diff(eps) >= 0) or eps[-1] <= 0:
        raise InvalidInput("schedule must hold at least three decreasing positive radii")
    if h is not None and eps[-1] < 4 * h:
        raise InsufficientResolution(f"inner radius {eps[-1]:.3g} below 4h", min_h=eps[-1] / 4)
    inc, orc = [], []
    for outer, inner in zip(eps[:-1], eps[1:]):
        hk = h if h is not None else inner / resolution
        inc.append(shell_integral(func, p, inner, outer, hk))
        orc.append(cone_shell_oracle(p, inner, outer))
    inc, orc = np.asarray(inc), np.asarray(orc)
    ratios = inc[1:] / inc[:-1]
    per_halving = inc / np.log2(eps[:-1] / eps[1:])
    if np.all(ratios < 0.7):
        verdict = "converges"
    elif np.max(np.abs(per_halving / per_halving.mean() - 1.0)) <= 0.2 or np.all(ratios >= 1.0):
        verdict = "diverges"
    else:
        verdict = "inconclusive"
    return ProbeResult(float(p), verdict, eps, inc, orc, ratios, per_halving)


def holder_quotients(fields: Fields, exponent=0.5, pairs=2000, seed=0):
    """Largest ``|grad u(x) - grad u(y)| / |x - y|^exponent`` over random node pairs."""
    idx = np.argwhere(fields.grad_mask)
    if len(idx) < 2:
        return np.nan
    rng = np.random.default_rng(seed)
    a = idx[rng.integers(len(idx), size=pairs)]
    b = idx[rng.integers(len(idx), size=pairs)]
    keep = np.any(a != b, axis=1)
    a, b = a[keep], b[keep]
    ga = fields.grad[tuple(a.T)]
    gb = fields.grad[tuple(b.T)]
    dist = fields.smap.h * np.linalg.norm(a - b, axis=1)
    q = np.linalg.norm(ga - gb, axis=(-2, -1)) / dist**exponent
    return float(np.max(q))


__all__ = [
    "BodyInfo", "Fields", "ProbeResult", "RulingPartition", "SampledMap", "SecondForm",
    "cluster_directions", "cone_map", "cone_shell_oracle", "detect_rulings", "estimate_fields",
    "holder_quotients", "isometry_residual", "normal_field", "second_form_field",
    "sharpness_probe", "unit_normal",
]
