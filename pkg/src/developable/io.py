"""Plain-text formats: CSV tables, OBJ meshes and key=value reports.

Floats are written with 17 significant digits so tables round-trip exactly.
CSV files have a single header row of column names.

Profile tables
    ``t, k1 .. k{n-1}, k{i}_{j} (i < j, row-major), kn``; read back as
    piecewise-linear components through the listed knots.
Field tables (``n = 2`` and ``n = 3``)
    ``t, s1 .. s{n-1}, x1 .. xn, u1 .. u{n+1}, A, J`` with ``A`` the Frobenius
    norm of the second fundamental form and ``J`` the chart Jacobian.
Sampled maps
    ``x1 .. xn, u1 .. u{n+1}``, one row per lattice node inside the domain.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInput
from .profile import CurvatureProfile, PiecewiseLinear


def fmt(x):
    """17-significant-digit text for a float (``inf``/``nan`` spelled out)."""
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    """Return ``(header, data)``; raises :class:`ConfigError` on malformed files."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ConfigError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
    if data.size == 0:
        data = np.zeros((0, len(header)))
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: rows do not match the header width")
    return header, data


def write_report(path, items):
    """``key=value`` lines; a dict or an iterable of pairs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pairs = items.items() if isinstance(items, dict) else items
    lines = []
    for k, v in pairs:
        if isinstance(v, (float, np.floating)):
            v = fmt(v)
        lines.append(f"{k}={v}")
    path.write_text("\n".join(lines) + "\n")


def read_report(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


# -- profiles --------------------------------------------------------------


def profile_table(profile: CurvatureProfile, times=None, samples=1001):
    """``(header, rows)`` sampling the profile; times default to a uniform grid plus breakpoints."""
    if times is None:
        times = np.union1d(np.linspace(0.0, profile.length, samples), profile.breakpoints)
    times = np.asarray(times, dtype=float)
    return ["t"] + profile.column_names(), np.column_stack([times, profile.sample(times)])


def write_profile_csv(path, profile, times=None, samples=1001):
    header, rows = profile_table(profile, times, samples)
    write_csv(path, header, rows)


def profile_from_table(header, data):
    """Rebuild a profile with piecewise-linear components from a profile table."""
    if not header or header[0] != "t":
        raise ConfigError("profile table must start with a 't' column")
    ncols = len(header) - 1
    # ncols = (n - 1) + (n - 1)(n - 2)/2 + 1
    n = next((k for k in range(2, 12) if (k - 1) + (k - 1) * (k - 2) // 2 + 1 == ncols), None)
    if n is None:
        raise ConfigError(f"profile table has {ncols} curvature columns, which fits no dimension")
    expected = ["t"] + CurvatureProfile.constant(1.0, [0.0] * (n - 1)).column_names()
    if header != expected:
        raise ConfigError(f"profile columns must be {','.join(expected)}")
    t = data[:, 0]
    if t.size < 2 or np.any(np.diff(t) <= 0) or abs(t[0]) > 1e-12:
        raise ConfigError("profile times must start at 0 and increase strictly")
    comps = [PiecewiseLinear(tuple(t), tuple(data[:, c])) for c in range(1, len(header))]
    kappa = comps[: n - 1]
    twist = comps[n - 1:-1]
    try:
        return CurvatureProfile(float(t[-1]), tuple(kappa), tuple(twist), comps[-1])
    except InvalidInput as exc:
        raise ConfigError(str(exc)) from exc


def read_profile_csv(path):
    return profile_from_table(*read_csv(path))


# -- immersion exports -------------------------------------------------------


def chart_lattice(imm, t_count=65, s_count=33, inset=1e-9):
    """Chart points ``(t, s)`` covering ``Sigma^gamma`` for ``n = 2``; shape ``(t_count, s_count)``."""
    if imm.n != 2:
        raise InvalidInput("the (t, s) lattice is defined for n = 2")
    t = np.linspace(0.0, imm.length, t_count)
    g, D = imm.curve.domain.state(t)
    N1 = D[:, 1, :]
    sp = imm.domain.exit_distance(g, N1) * (1 - inset)
    sm = imm.domain.exit_distance(g, -N1) * (1 - inset)
    frac = np.linspace(0.0, 1.0, s_count)
    s = -sm[:, None] + (sp + sm)[:, None] * frac[None, :]
    return np.broadcast_to(t[:, None], s.shape).copy(), s


def write_obj(path, imm, t_count=65, s_count=33):
    """Image surface on the ``(t, s)`` lattice; each quad split along its lower-left to upper-right diagonal."""
    T, S = chart_lattice(imm, t_count, s_count)
    U = imm.evaluate(T, S, check=False)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# developable surface, {t_count} x {s_count} (t, s) lattice"]
    for p in U.reshape(-1, 3):
        lines.append("v " + " ".join(fmt(c) for c in p))

    def vid(i, j):
        return i * s_count + j + 1

    for i in range(t_count - 1):
        for j in range(s_count - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    path.write_text("\n".join(lines) + "\n")
    return U


def read_obj_vertices(path):
    return np.array([[float(v) for v in line.split()[1:]]
                     for line in Path(path).read_text().splitlines() if line.startswith("v ")])


def field_rows(imm, t=None, s=None, t_count=65, s_count=33):
    """Rows ``(t, s.., x.., u.., |A|, J)`` at chart points (default: the OBJ lattice)."""
    if t is None:
        t, s = chart_lattice(imm, t_count, s_count)
        t, s = t.ravel(), s.ravel()[:, None]
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float).reshape(t.size, imm.n - 1)
    x = imm.phi(t, s)
    u = imm.evaluate(t, s, check=False)
    A = imm.second_fundamental_form(t, s)
    J = imm.jacobian(t, s)
    return np.column_stack([t, s, x, u, np.sqrt(np.sum(A * A, axis=(-2, -1))), J])


def field_header(n):
    return (["t"] + [f"s{i}" for i in range(1, n)] + [f"x{i}" for i in range(1, n + 1)]
            + [f"u{i}" for i in range(1, n + 2)] + ["A", "J"])


def write_fields_csv(path, imm, **kw):
    write_csv(path, field_header(imm.n), field_rows(imm, **kw))


def curve_table(curve):
    """Grid times with ``gamma``, domain frame rows, ``gamma~`` and Darboux frame rows, flattened."""
    n = curve.n
    d, tg = curve.domain, curve.target
    head = ["t"] + [f"g{i}" for i in range(1, n + 1)]
    head += [f"D{a}{b}" for a in range(n) for b in range(n)]
    cols = [d.grid, d.points, d.frames.reshape(len(d.grid), -1)]
    if tg is not None:
        head += [f"gt{i}" for i in range(1, n + 2)]
        head += [f"T{a}{b}" for a in range(n + 1) for b in range(n + 1)]
        cols += [tg.points, tg.frames.reshape(len(tg.grid), -1)]
    return head, np.column_stack(cols)


# -- sampled maps ----------------------------------------------------------


def write_samples_csv(path, smap):
    pts = smap.nodes()[smap.mask]
    vals = smap.values[smap.mask]
    n = smap.n
    head = [f"x{i}" for i in range(1, n + 1)] + [f"u{i}" for i in range(1, n + 2)]
    write_csv(path, head, np.column_stack([pts, vals]))


def read_samples_csv(path, h=None):
    from .analyzer import SampledMap

    header, data = read_csv(path)
    n = sum(1 for c in header if c.startswith("x"))
    if n < 1 or len(header) != 2 * n + 1:
        raise ConfigError("sample table needs columns x1..xn, u1..u{n+1}")
    return SampledMap.from_points(data[:, :n], data[:, n:], h=h)


def write_labels_csv(path, partition, smap):
    """Per masked node: coordinates, ``kind`` (0 unclassified, 1 body, 2 ruled), label, hyperplane normal."""
    n = smap.n
    m = smap.mask
    pts = smap.nodes()[m]
    normals = np.nan_to_num(partition.normals[m])
    head = ([f"x{i}" for i in range(1, n + 1)] + ["kind", "label"]
            + [f"nu{i}" for i in range(1, n + 1)] + ["competing"])
    rows = np.column_stack([pts, partition.kind[m], partition.label[m], normals,
                            partition.competing[m].astype(float)])
    write_csv(path, head, rows)


__all__ = [
    "chart_lattice", "curve_table", "field_header", "field_rows", "fmt", "profile_from_table",
    "profile_table", "read_csv", "read_obj_vertices", "read_profile_csv", "read_report",
    "read_samples_csv", "write_csv", "write_fields_csv", "write_labels_csv", "write_obj",
    "write_profile_csv", "write_report", "write_samples_csv",
]
