"""Command line entry point: ``developable build|smooth|analyze``.

Usage::

    developable build   --config job.ini --out outdir [--threads N] [--seed S]
    developable smooth  --config job.ini --out outdir
    developable analyze --config job.ini --out outdir

The thread count may also be set with ``DEVELOPABLE_THREADS``; when set it
overrides ``--threads``.

Exit codes: 0 success, 2 validation failure (including any library error
raised while building), 3 margin violation, 4 parse error. The error name and
witness go to stderr.

Config grammar (INI sections, ``key = value``, ``#`` comments; vectors are
comma separated, matrix rows separated by ``;``; relative paths resolve
against the config file)::

    [domain]
    kind = ball | ellipsoid | superellipsoid | box | polytope
    center = 0, 0            # ball, ellipsoid, superellipsoid
    radius = 1               # ball
    radii = 1.5, 0.6         # ellipsoid, superellipsoid
    exponent = 4             # superellipsoid
    lower = 0, 0             # box
    upper = 1, 1             # box
    vertices = 0,0; 1,0; 0,1 # polytope

    [profile]
    length = 1.8
    csv = profile.csv        # a profile table (see developable.io), or inline:
    k1 = 0.5                 # constant
    kn = piecewise 0.9 | 0, 1        # breaks | values, right-continuous
    k1_2 = linear 0, 1.8 | 0, 0.3    # knots | values
    # omitted components are zero; dimension n = number of k<i> keys + 1,
    # or set explicitly with  n = 3

    [frame]
    domain = 1, 0; 0, 1      # rows gamma'(0), N_1(0), ...; default identity
    origin = -0.9, 0
    target = ...             # (n+1)x(n+1) Darboux frame; default embeds the domain frame
    target_origin = 0, 0, 0

    [grid]
    step = 1e-3
    t_count = 65             # export lattice (n = 2)
    s_count = 33

    [smoothing]
    schedule = 4, 8, 16, 32
    rho = auto               # auto = min(1, measured margin)
    sphere_points = 256
    cutoff_scale = 1

    [analyze]
    samples = samples.csv    # x1..xn,u1..u{n+1}; or a built-in map on [domain]:
    map = cylinder | cone | flat | build
    h = 5e-3

    [probe]
    p = 1.5, 2
    levels = 6
    resolution = 32

Outputs
-------
build
    ``profile.csv``, ``curve.csv``, ``validation.txt`` (including squared
    Sobolev norms for n = 2, 3), and for n = 2 ``mesh.obj`` and ``fields.csv``.
smooth
    ``m_<m>/`` per stage with ``profile.csv``, ``lambda.csv``, ``curve.csv``,
    ``summary.txt``; ``convergence.csv`` with columns
    ``m, error, l2, grad, hess, sliver_volume, min_jacobian, margin`` and
    ``summary.txt``.
analyze
    ``labels.csv``, ``partition.txt``, ``defects.txt`` and
    ``probe_p<p>.csv`` per probed exponent with ``probe.txt`` holding the
    verdicts.
"""

import argparse
import configparser
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .analyzer import (SampledMap, cone_map, detect_rulings, estimate_fields, holder_quotients,
                       isometry_residual, normal_field, second_form_field, sharpness_probe,
                       default_schedule)
from .domain import ConvexDomain
from .errors import ConfigError, DevelopableError, MarginViolation
from .frames import FramedCurve
from .immersion import DevelopableImmersion
from .profile import Constant, CurvatureProfile, PiecewiseConstant, PiecewiseLinear, twist_pairs
from .smoothing import SmoothingConfig, convergence_report, margin_check, run_pipeline

THREADS_ENV = "DEVELOPABLE_THREADS"
EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_MARGIN, EXIT_PARSE = 0, 1, 2, 3, 4


# -- config parsing ------------------------------------------------------------


def _vector(text, key):
    try:
        return np.array([float(v) for v in text.replace(" ", "").split(",") if v != ""])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma separated numbers, got {text!r}") from exc


def _matrix(text, key):
    rows = [_vector(r, key) for r in text.split(";") if r.strip()]
    if not rows or len({r.size for r in rows}) != 1:
        raise ConfigError(f"{key}: rows must have equal length")
    return np.vstack(rows)


def _float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"[{section.name}] missing {key}")
        return default
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: not a number") from exc


def _int(section, key, default):
    try:
        return int(section.get(key, default))
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: not an integer") from exc


def load_config(path):
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cfg.optionxform = str
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    cfg.base = Path(path).resolve().parent
    return cfg


def _section(cfg, name):
    if not cfg.has_section(name):
        raise ConfigError(f"missing [{name}] section")
    return cfg[name]


def parse_domain(cfg):
    sec = _section(cfg, "domain")
    kind = sec.get("kind", "").strip()
    try:
        if kind == "ball":
            return ConvexDomain.ball(_vector(sec["center"], "center"), _float(sec, "radius"))
        if kind == "ellipsoid":
            return ConvexDomain.ellipsoid(_vector(sec["center"], "center"), _vector(sec["radii"], "radii"))
        if kind == "superellipsoid":
            return ConvexDomain.superellipsoid(_vector(sec["center"], "center"),
                                               _vector(sec["radii"], "radii"), _float(sec, "exponent"))
        if kind == "box":
            return ConvexDomain.box(_vector(sec["lower"], "lower"), _vector(sec["upper"], "upper"))
        if kind == "polytope":
            return ConvexDomain.polytope(_matrix(sec["vertices"], "vertices"))
    except KeyError as exc:
        raise ConfigError(f"[domain] missing {exc.args[0]}") from exc
    raise ConfigError(f"[domain] unknown kind {kind!r}")


def parse_component(text, key):
    text = text.strip()
    for tag, cls in (("piecewise", PiecewiseConstant), ("linear", PiecewiseLinear)):
        if text.startswith(tag):
            parts = text[len(tag):].split("|")
            if len(parts) != 2:
                raise ConfigError(f"{key}: expected '{tag} <breaks> | <values>'")
            try:
                return cls(tuple(_vector(parts[0], key)), tuple(_vector(parts[1], key)))
            except DevelopableError as exc:
                raise ConfigError(f"{key}: {exc}") from exc
    try:
        return Constant(float(text))
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read component {text!r}") from exc


def parse_profile(cfg):
    sec = _section(cfg, "profile")
    if "csv" in sec:
        return io.read_profile_csv(cfg.base / sec["csv"])
    length = _float(sec, "length")
    n = _int(sec, "n", 0)
    if n == 0:
        n = 1 + sum(1 for k in sec if k[1:].isdigit() and k.startswith("k"))
        n = max(n, 2)
    kappa = tuple(parse_component(sec[f"k{i}"], f"k{i}") if f"k{i}" in sec else Constant(0.0)
                  for i in range(1, n))
    twist = tuple(parse_component(sec[f"k{i}_{j}"], f"k{i}_{j}") if f"k{i}_{j}" in sec else Constant(0.0)
                  for i, j in twist_pairs(n))
    normal = parse_component(sec["kn"], "kn") if "kn" in sec else Constant(0.0)
    try:
        return CurvatureProfile(length, kappa, twist, normal)
    except DevelopableError as exc:
        raise ConfigError(f"[profile] {exc}") from exc


def parse_curve(cfg, profile):
    n = profile.n
    sec = cfg["frame"] if cfg.has_section("frame") else {}
    F0 = _matrix(sec["domain"], "domain") if "domain" in sec else np.eye(n)
    origin = _vector(sec["origin"], "origin") if "origin" in sec else np.zeros(n)
    T0 = _matrix(sec["target"], "target") if "target" in sec else None
    torigin = _vector(sec["target_origin"], "target_origin") if "target_origin" in sec else None
    grid = cfg["grid"] if cfg.has_section("grid") else {}
    step = float(grid.get("step", min(1e-3, profile.length / 10)))
    return FramedCurve.build(profile, F0, step, target_frame0=T0, origin=origin, target_origin=torigin)


def parse_smoothing(cfg):
    if not cfg.has_section("smoothing"):
        cfg.add_section("smoothing")
    sec = cfg["smoothing"]
    schedule = tuple(int(v) for v in _vector(sec.get("schedule", "4, 8, 16, 32"), "schedule"))
    rho = sec.get("rho", "auto").strip()
    conf = SmoothingConfig(schedule=schedule,
                           sphere_points=_int(sec, "sphere_points", 256),
                           radii=_int(sec, "radii", 32),
                           cutoff_scale=float(sec.get("cutoff_scale", 1.0)))
    return conf, (None if rho == "auto" else float(rho))


def thread_count(cli_value):
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
    return max(1, cli_value or 1)


# -- commands ------------------------------------------------------------------


def _export_curve(out, imm):
    io.write_profile_csv(out / "profile.csv", imm.curve.profile)
    io.write_csv(out / "curve.csv", *io.curve_table(imm.curve))


def cmd_build(cfg, out, threads=1, seed=0):
    domain = parse_domain(cfg)
    profile = parse_profile(cfg)
    curve = parse_curve(cfg, profile)
    imm = DevelopableImmersion(curve, domain)
    rep = imm.validate()
    _export_curve(out, imm)
    items = [(k, v) for k, v in (line.split("=", 1) for line in rep.summary().splitlines())]
    if rep.checks["jacobian"] and rep.checks["fronts"] and imm.n in (2, 3):
        norms = imm.sobolev_norms(check=False)
        items += [("norm_l2_sq", norms.l2), ("norm_grad_sq", norms.grad),
                  ("norm_hess_sq", norms.hess), ("volume", norms.volume)]
    if imm.n == 2 and rep.checks["jacobian"]:
        grid = cfg["grid"] if cfg.has_section("grid") else {}
        tc, sc = int(grid.get("t_count", 65)), int(grid.get("s_count", 33))
        io.write_obj(out / "mesh.obj", imm, tc, sc)
        io.write_fields_csv(out / "fields.csv", imm, t_count=tc, s_count=sc)
    io.write_report(out / "validation.txt", items)
    if not rep.passed:
        failed = [k for k, v in rep.checks.items() if not v]
        print(f"validation-failure: {','.join(failed)}", file=sys.stderr)
        print(f"jacobian_witness={rep.jacobian_witness} min_jacobian={rep.min_jacobian!r}", file=sys.stderr)
        print(f"margin_witness={rep.margin_witness} min_margin={rep.min_margin!r}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_smooth(cfg, out, threads=1, seed=0):
    domain = parse_domain(cfg)
    profile = parse_profile(cfg)
    imm = DevelopableImmersion(parse_curve(cfg, profile), domain)
    conf, rho = parse_smoothing(cfg)
    margin = margin_check(imm, max_times=400)
    rho_used = min(1.0, margin) if rho is None else rho
    if rho_used > margin:
        raise MarginViolation(f"configured rho = {rho_used} exceeds the measured margin {margin}")
    conf = replace(conf, rho=rho_used)
    records = run_pipeline(imm, conf, threads=threads)
    report = convergence_report(imm, records, conf, seed=seed)
    rows = []
    for rec, row in zip(records, report.rows):
        stage = out / f"m_{rec.m:03d}"
        io.write_profile_csv(stage / "profile.csv", rec.immersion.curve.profile)
        io.write_csv(stage / "lambda.csv", ["t", "lambda"],
                     np.column_stack([rec.lambda_times, rec.lambda_values]))
        io.write_csv(stage / "curve.csv", *io.curve_table(rec.immersion.curve))
        io.write_report(stage / "summary.txt",
                        [tuple(line.split("=", 1)) for line in rec.summary().splitlines()])
        rows.append([rec.m, row.total, row.l2, row.grad, row.hess, row.sliver_volume,
                     rec.validation.min_jacobian, rec.validation.min_margin])
    io.write_csv(out / "convergence.csv",
                 ["m", "error", "l2", "grad", "hess", "sliver_volume", "min_jacobian", "margin"], rows)
    io.write_report(out / "summary.txt", [
        ("measured_margin", "unbounded" if np.isinf(margin) else io.fmt(margin)),
        ("rho", rho_used), ("schedule", ",".join(str(m) for m in conf.schedule)),
        ("monotone", report.monotone), ("ratio_last_first", report.ratio), ("seed", seed)])
    print(report.table())
    return EXIT_OK


def _builtin_map(name, cfg):
    if name == "cylinder":
        return lambda x: np.stack([np.sin(x[..., 0]), x[..., 1], 1 - np.cos(x[..., 0])], axis=-1)
    if name == "cone":
        return cone_map
    if name == "flat":
        return lambda x: np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
    raise ConfigError(f"[analyze] unknown map {name!r}")


def _sampled_map(cfg):
    sec = _section(cfg, "analyze")
    h = float(sec["h"]) if "h" in sec else None
    if "samples" in sec:
        return io.read_samples_csv(cfg.base / sec["samples"], h=h)
    name = sec.get("map", "").strip()
    if h is None:
        raise ConfigError("[analyze] needs h for a built-in map")
    domain = parse_domain(cfg)
    if name == "build":
        imm = DevelopableImmersion(parse_curve(cfg, parse_profile(cfg)), domain, extend_affine=True)
        return SampledMap.from_immersion(imm, h)
    return SampledMap.from_function(_builtin_map(name, cfg), domain, h)


def cmd_analyze(cfg, out, threads=1, seed=0):
    smap = _sampled_map(cfg)
    fields = estimate_fields(smap)
    _, res = isometry_residual(fields)
    normals, degenerate = normal_field(fields)
    second = second_form_field(fields, normals)
    part = detect_rulings(fields, second, normals)
    io.write_labels_csv(out / "labels.csv", part, smap)
    io.write_report(out / "partition.txt",
                    [tuple(line.split("=", 1)) for line in part.summary().splitlines()])
    io.write_report(out / "defects.txt", [
        ("h", smap.h), ("nodes", int(smap.mask.sum())), ("interior_nodes", int(fields.interior.sum())),
        ("isometry_residual", res), ("symmetry_defect", second.symmetry_defect),
        ("max_minor", second.max_minor), ("codazzi_defect", second.codazzi_defect),
        ("degenerate_normals", int(degenerate.sum())),
        ("holder_half_quotient", holder_quotients(fields, 0.5, seed=seed)), ("seed", seed)])
    if cfg.has_section("probe"):
        sec = cfg["probe"]
        schedule = default_schedule(levels=_int(sec, "levels", 6))
        verdicts = []
        for p in _vector(sec.get("p", "1.5, 2"), "p"):
            res_p = sharpness_probe(p, schedule, resolution=_int(sec, "resolution", 32))
            (out / f"probe_p{p:g}.csv").write_text(res_p.table() + "\n")
            print(f"probe p={p:g}: {res_p.verdict}")
            verdicts.append((f"p{p:g}", res_p.verdict))
        io.write_report(out / "probe.txt", verdicts)
    print(part.summary())
    return EXIT_OK


COMMANDS = {"build": cmd_build, "smooth": cmd_smooth, "analyze": cmd_analyze}


def build_parser():
    ap = argparse.ArgumentParser(prog="developable",
                                 description="Build, smooth and analyze developable isometric immersions.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI job file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--threads", type=int, default=1,
                    help=f"worker threads (overridden by ${THREADS_ENV})")
    ap.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo estimates")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        threads = thread_count(args.threads)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, threads=threads, seed=args.seed)
    except ConfigError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except MarginViolation as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness={exc.witness}", file=sys.stderr)
        return EXIT_MARGIN
    except DevelopableError as exc:
        print(f"{exc.name}: {exc}", file=sys.stderr)
        if exc.witness is not None:
            print(f"witness={exc.witness}", file=sys.stderr)
        if getattr(exc, "min_h", None) is not None:
            print(f"min_h={exc.min_h!r}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
