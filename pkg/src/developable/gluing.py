"""Rigid gluing of arms and bodies along shared affine interfaces.

Each piece is defined on the whole domain (arms through their affine
extension, bodies as a single affine isometry). A link between two pieces is
an interface hyperplane ``{x : (x - x0).nu = 0}`` near which both are affine.
The second piece is moved by the unique rigid motion of ``R^{n+1}`` matching
its value, gradient and unit normal to the first one at ``x0``. Links must
form a tree; the first piece of each component stays fixed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidTopology, NotGlueable

AFFINE_TOL = 1e-10


def unit_normal(grad):
    """Generalised cross product of the gradient columns, via cofactors.

    ``grad`` has shape ``(..., n+1, n)``; the result satisfies
    ``det[grad | normal] > 0`` and has unit length.
    """
    grad = np.asarray(grad, dtype=float)
    n1 = grad.shape[-2]
    comps = []
    for k in range(n1):
        e = np.zeros(n1)
        e[k] = 1.0
        mat = np.concatenate([grad, np.broadcast_to(e[:, None], grad.shape[:-1] + (1,))], axis=-1)
        comps.append(np.linalg.det(mat))
    nrm = np.stack(comps, axis=-1)
    return nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)


@dataclass(frozen=True)
class AffinePiece:
    """The affine isometry ``x -> value0 + grad (x - x0)``."""

    x0: np.ndarray
    value0: np.ndarray
    grad: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grad, dtype=float)
        if np.max(np.abs(g.T @ g - np.eye(g.shape[1]))) > 1e-9:
            raise InvalidInput("affine piece is not isometric")

    def fields_at(self, x, order=2):
        x = np.asarray(x, dtype=float)
        val = self.value0 + (x - self.x0) @ np.asarray(self.grad).T
        grad = np.broadcast_to(self.grad, x.shape[:-1] + np.shape(self.grad))
        n = x.shape[-1]
        n1 = n + 1
        hess = np.zeros(x.shape[:-1] + (n, n, n1)) if order >= 2 else None
        return val, grad, hess


@dataclass(frozen=True)
class RigidMotion:
    """``y -> R y + b`` on ``R^{n+1}``."""

    R: np.ndarray
    b: np.ndarray

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim))

    def compose(self, other):
        """``self`` after ``other``."""
        return RigidMotion(self.R @ other.R, self.R @ other.b + self.b)

    @property
    def angle(self):
        """Largest rotation angle of ``R`` (radians)."""
        ev = np.linalg.eigvals(self.R)
        return float(np.max(np.abs(np.angle(ev))))

    @property
    def translation(self):
        return float(np.linalg.norm(self.b))


@dataclass(frozen=True)
class Link:
    """Interface between pieces ``a`` and ``b``; ``nu`` points from ``a`` into ``b``."""

    a: int
    b: int
    x0: np.ndarray
    nu: np.ndarray


@dataclass
class GluedMap:
    """Composite map; each point is evaluated by the piece owning its cell of the interface arrangement."""

    pieces: list
    motions: list
    links: list
    link_motions: list
    domain: object

    def owner(self, x):
        x = np.asarray(x, dtype=float)
        owner = np.full(x.shape[:-1], -1, dtype=int)
        for p in range(len(self.pieces)):
            inside = np.ones(x.shape[:-1], dtype=bool)
            for lk in self.links:
                side = (x - lk.x0) @ lk.nu
                if lk.a == p:
                    inside &= side < 0
                elif lk.b == p:
                    inside &= side >= 0
            owner = np.where(inside & (owner < 0), p, owner)
        return owner

    def piece_fields(self, p, x, order=2):
        val, grad, hess = self.pieces[p].fields_at(x, order)
        mot = self.motions[p]
        val = val @ mot.R.T + mot.b
        grad = np.einsum("ij,...jk->...ik", mot.R, grad)
        if hess is not None:
            hess = np.einsum("ij,...abj->...abi", mot.R, hess)
        return val, grad, hess

    def fields_at(self, x, order=2):
        x = np.asarray(x, dtype=float)
        own = self.owner(x)
        n = x.shape[-1]
        val = np.zeros(x.shape[:-1] + (n + 1,))
        grad = np.zeros(x.shape[:-1] + (n + 1, n))
        hess = np.zeros(x.shape[:-1] + (n, n, n + 1))
        for p in range(len(self.pieces)):
            sel = own == p
            if np.any(sel):
                v, g, h = self.piece_fields(p, x[sel], order)
                val[sel], grad[sel] = v, g
                if h is not None:
                    hess[sel] = h
        return val, grad, hess

    def interface_jumps(self, samples=64):
        """Max value and gradient jumps across each link, sampled on its interface inside the domain."""
        out = []
        for lk in self.links:
            pts = interface_samples(self.domain, lk, samples)
            va, ga, _ = self.piece_fields(lk.a, pts, order=1)
            vb, gb, _ = self.piece_fields(lk.b, pts, order=1)
            out.append((float(np.max(np.abs(va - vb))), float(np.max(np.abs(ga - gb)))))
        return out


def interface_samples(domain, link, samples):
    """Points of the interface hyperplane inside the domain (a line or disc of samples)."""
    n = link.x0.size
    nu = link.nu / np.linalg.norm(link.nu)
    basis = np.linalg.svd(nu[None, :])[2][1:]          # (n-1, n) orthonormal complement
    if n == 2:
        dirs = np.array([[1.0], [-1.0]])
    else:
        th = 2 * np.pi * np.arange(16) / 16
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    reach = domain.exit_distance(np.broadcast_to(link.x0, (dirs.shape[0], n)), dirs @ basis)
    frac = (np.arange(samples) + 0.5) / samples
    pts = link.x0 + (frac[:, None, None] * reach[None, :, None]) * (dirs @ basis)[None]
    return pts.reshape(-1, n)


def _is_affine_near(piece, domain, link, samples=16, offset=1e-6):
    pts = interface_samples(domain, link, samples)
    for shift in (-offset, offset):
        x = pts + shift * link.nu
        x = x[domain.contains(x)]
        _, _, h = piece.fields_at(x)
        if h is not None and np.max(np.abs(h), initial=0.0) > AFFINE_TOL:
            return False
    return True


def matching_motion(piece_a, motion_a, piece_b, x0):
    """Rigid motion placing ``piece_b`` so value, gradient and normal agree with placed ``piece_a`` at ``x0``."""
    va, ga, _ = piece_a.fields_at(x0[None], order=1)
    va = motion_a.R @ va[0] + motion_a.b
    ga = motion_a.R @ ga[0]
    vb, gb, _ = piece_b.fields_at(x0[None], order=1)
    Fa = np.column_stack([ga, unit_normal(ga)])
    Fb = np.column_stack([gb[0], unit_normal(gb[0])])
    R = Fa @ Fb.T
    return RigidMotion(R, va - R @ vb[0])


def glue_arms(pieces, domain, interfaces=None, links=None, check_affine=True):
    """Glue pieces into one map with rigid motions along a tree of interfaces.

    Parameters
    ----------
    pieces : list
        Objects with ``fields_at(x, order)``, for example
        :class:`~developable.immersion.DevelopableImmersion` with
        ``extend_affine=True`` or :class:`AffinePiece`.
    domain : ConvexDomain
    interfaces : list of (x0, nu), optional
        Chain form: interface ``k`` joins piece ``k`` to piece ``k+1``.
    links : list of (a, b, x0, nu), optional
        General form; must be acyclic.

    Returns
    -------
    GluedMap
        A single piece without links is returned as it is.
    """
    if len(pieces) == 1 and not interfaces and not links:
        return pieces[0]
    if interfaces is not None and links is not None:
        raise InvalidInput("give either a chain of interfaces or a list of links")
    if links is None:
        interfaces = interfaces or []
        if len(interfaces) != max(len(pieces) - 1, 0):
            raise InvalidInput("a chain of k pieces needs k - 1 interfaces")
        links = [(k, k + 1, x0, nu) for k, (x0, nu) in enumerate(interfaces)]
    links = [Link(int(a), int(b), np.asarray(x0, float), np.asarray(nu, float) / np.linalg.norm(nu))
             for a, b, x0, nu in links]

    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for lk in links:
        if not (0 <= lk.a < len(pieces) and 0 <= lk.b < len(pieces)) or lk.a == lk.b:
            raise InvalidInput(f"bad link {lk.a}-{lk.b}")
        ra, rb = find(lk.a), find(lk.b)
        if ra == rb:
            raise InvalidTopology(f"link {lk.a}-{lk.b} closes a cycle")
        parent[ra] = rb

    if check_affine:
        for lk in links:
            for p in (lk.a, lk.b):
                if not _is_affine_near(pieces[p], domain, lk):
                    raise NotGlueable(f"piece {p} is not affine at the interface {lk.a}-{lk.b}",
                                      witness=tuple(lk.x0))

    dim = domain.dim + 1
    motions = [None] * len(pieces)
    link_motions = [None] * len(links)
    for start in range(len(pieces)):
        if motions[start] is not None:
            continue
        motions[start] = RigidMotion.identity(dim)
        frontier = [start]
        while frontier:
            p = frontier.pop(0)
            for li, lk in enumerate(links):
                q = lk.b if lk.a == p else lk.a if lk.b == p else None
                if q is None or motions[q] is not None:
                    continue
                motions[q] = matching_motion(pieces[p], motions[p], pieces[q], lk.x0)
                link_motions[li] = motions[q].compose(
                    RigidMotion(motions[p].R.T, -motions[p].R.T @ motions[p].b))
                frontier.append(q)
    return GluedMap(list(pieces), motions, links, link_motions, domain)
