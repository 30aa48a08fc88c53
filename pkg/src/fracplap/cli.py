"""Experiment configuration, orchestration, and result emission.

One binary, several subcommands::

  fracplap polarize --input u.csv --a 0.25 --s 0.5 --p 2
  fracplap eigen --p 2 --s 0.5 --domain domain.json
  fracplap lens  --p 2 --s 0.5 --q 3 --domain domain.json
  fracplap payne --mode eigen --domain domain.json --report out.json
  fracplap verify-inequalities --sweep 10000 --p-list 1.5,2,3

Exit codes: 0 all checks passed, 2 an inequality/invariant violation was
detected, 1 operational error.  Outputs are byte-stable for identical inputs
and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .energy import GridFunction, Nonlinearity
from .errors import ConfigError, FracplapError, ParameterError
from .kernel import build_kernel
from .lattice import (
    LatticeDomain,
    ReflectionParam,
    Window,
    make_steiner_domain,
    shape_half_width,
)
from .payne import run_payne_experiment
from .pointwise import four_point_sweep, partial_scaling_sweep, signed_combination_sweep
from .polarization import equality_case, polarization_pairing_deficit, polarize

__all__ = ["ExperimentConfig", "load_config", "emit_results", "load_domain", "main"]

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    mode: str
    p: float
    s: float
    domain: dict | None = None
    q: float | None = None
    tol: float = 1e-8
    multistarts: int = 3
    seed: int = 0
    tau_rel: float = 1e-8
    touch_factor: float = 2.0
    threads: int = 1
    sweep: int = 10000
    p_list: list = field(default_factory=lambda: [1.5, 2.0, 3.0])

    def to_dict(self) -> dict:
        return asdict(self)


_MODES = ("eigen", "lens", "payne", "polarize", "verify-inequalities")


def _validate(cfg: ExperimentConfig):
    if cfg.mode not in _MODES:
        raise ConfigError("$.mode", f"unknown mode {cfg.mode!r}; expected one of {_MODES}")
    if not (0.0 < cfg.s < 1.0):
        raise ConfigError("$.s", "order must be in (0,1)")
    if cfg.p <= 1.0:
        raise ConfigError("$.p", "exponent p must exceed 1")
    if cfg.mode == "lens":
        if cfg.q is None:
            raise ConfigError("$.q", "lens mode requires q")
        if cfg.q <= cfg.p:
            raise ConfigError("$.q", "superhomogeneity violated: q must exceed p")
    if cfg.multistarts < 1:
        raise ConfigError("$.multistarts", "multistarts must be at least 1")
    if cfg.threads < 1:
        raise ConfigError("$.threads", "threads must be at least 1")
    if cfg.domain is not None:
        _validate_domain(cfg.domain)


def _validate_domain(spec: dict):
    for key in ("dim", "h", "box", "shape"):
        if key not in spec:
            raise ConfigError(f"$.domain.{key}", "missing required key")
    if spec["dim"] not in (1, 2):
        raise ConfigError("$.domain.dim", "dim must be 1 or 2")
    if spec["h"] <= 0:
        raise ConfigError("$.domain.h", "spacing h must be positive")
    box = spec["box"]
    if len(box) != spec["dim"]:
        raise ConfigError("$.domain.box", "box must list one half-width per axis")
    shape = spec["shape"]
    if "kind" not in shape:
        raise ConfigError("$.domain.shape.kind", "missing shape kind")


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment configuration, filling defaults."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("$", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"$.{sorted(unknown)[0]}", "unknown configuration key")
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError("$", str(exc))
    _validate(cfg)
    return cfg


def load_domain(spec: dict) -> LatticeDomain:
    """Build the lattice domain described by a JSON domain spec."""
    _validate_domain(spec)
    hw = shape_half_width(spec["shape"]["kind"], spec["shape"].get("params", {}))
    return make_steiner_domain(hw, tuple(float(b) for b in spec["box"]), float(spec["h"]))


def _fmt(value) -> str:
    return repr(float(value))


def write_grid_csv(u: GridFunction, path: str | Path):
    """One row per node, coordinates then value, lexicographic in coords."""
    coords = u.window.coords_matrix()
    vals = u.flat()
    order = np.lexsort(tuple(coords[:, d] for d in reversed(range(u.window.dim))))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{d + 1}" for d in range(u.window.dim)] + ["value"])
        for i in order:
            w.writerow([_fmt(c) for c in coords[i]] + [_fmt(vals[i])])


def read_grid_csv(path: str | Path) -> GridFunction:
    """Inverse of write_grid_csv; infers the window from the coordinates."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    dim = len(header) - 1
    if dim not in (1, 2):
        raise ParameterError("grid CSV must have 1 or 2 coordinate columns")
    data = np.array([[float(x) for x in row] for row in body])
    axes = []
    for d in range(dim):
        vals = np.unique(data[:, d])
        diffs = np.diff(vals)
        if diffs.size == 0:
            raise ParameterError("grid CSV must span more than one node per axis")
        h = diffs.min()
        if not np.allclose(diffs, h, rtol=0, atol=1e-9 * h):
            raise ParameterError(f"coordinates along axis {d} are not uniformly spaced")
        axes.append((vals, h))
    h = axes[0][1]
    for vals, hd in axes:
        if abs(hd - h) > 1e-9 * h:
            raise ParameterError("anisotropic spacing is not supported")
    offsets = tuple(int(round(vals[0] / h - 0.5)) for vals, _ in axes)
    shape = tuple(len(vals) for vals, _ in axes)
    window = Window(h, offsets, shape)
    values = np.zeros(shape)
    for row in data:
        idx = tuple(int(round(row[d] / h - 0.5)) - offsets[d] for d in range(dim))
        values[idx] = row[dim]
    return GridFunction(window, values)


def write_mask_csv(domain: LatticeDomain, path: str | Path):
    coords = domain.window.coords_matrix()
    inside = domain.mask.ravel().astype(int)
    order = np.lexsort(tuple(coords[:, d] for d in reversed(range(domain.dim))))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{d + 1}" for d in range(domain.dim)] + ["inside"])
        for i in order:
            w.writerow([_fmt(c) for c in coords[i]] + [str(inside[i])])


def emit_results(report, fmt: str, path: str | Path):
    """Serialize a report (dict-like) as versioned JSON or a GridFunction as
    CSV; identical inputs give byte-identical files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        if not isinstance(report, GridFunction):
            raise ParameterError("csv emission expects a grid function")
        write_grid_csv(report, path)
        return
    if fmt != "json":
        raise ParameterError(f"unknown output format {fmt!r}")
    if isinstance(report, ExperimentConfig):
        # bare dump so that load_config(emit(cfg)) round-trips
        path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
        return
    payload = report.to_dict() if hasattr(report, "to_dict") else report
    doc = {"schema_version": SCHEMA_VERSION, "report": _jsonable(payload)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, GridFunction):
        return {"window": repr(obj.window), "values": obj.values.tolist()}
    return obj


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracplap",
        description="lattice experiments for the nonlocal p-Laplacian: "
        "polarization, eigenpairs, nodal solutions, nodal-set geometry",
    )
    parser.add_argument("--config", help="JSON config; flags override its values")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="multistart parallelism (default: FRAC_PLAP_THREADS or 1)",
    )
    parser.add_argument("--out", default=".", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("polarize", help="polarize a grid function and report the deficits")
    sp.add_argument("--input", required=True, help="grid function CSV")
    sp.add_argument("--a", type=float, required=True, help="reflection offset (multiple of h/2)")
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--variant", choices=["P", "Ptilde"], default="P")

    se = sub.add_parser("eigen", help="first eigenpair and second eigenvalue")
    se.add_argument("--p", type=float)
    se.add_argument("--s", type=float)
    se.add_argument("--domain", help="domain spec JSON")
    se.add_argument("--tol", type=float, default=None)
    se.add_argument("--multistarts", type=int, default=None)

    sl = sub.add_parser("lens", help="least energy nodal solution")
    sl.add_argument("--p", type=float)
    sl.add_argument("--s", type=float)
    sl.add_argument("--q", type=float)
    sl.add_argument("--domain")
    sl.add_argument("--tol", type=float, default=None)
    sl.add_argument("--multistarts", type=int, default=None)

    sy = sub.add_parser("payne", help="nodal-set geometry experiment")
    sy.add_argument("--mode", choices=["eigen", "lens"], default="eigen")
    sy.add_argument("--p", type=float)
    sy.add_argument("--s", type=float)
    sy.add_argument("--q", type=float)
    sy.add_argument("--domain")
    sy.add_argument("--report", default=None, help="report JSON path")

    sv = sub.add_parser("verify-inequalities", help="random sweeps of the scalar bounds")
    sv.add_argument("--sweep", type=int, default=None)
    sv.add_argument("--p-list", default=None, help="comma-separated exponents")
    return parser


def _merge_config(args) -> ExperimentConfig:
    base: dict = {}
    if args.config:
        base = load_config(args.config).to_dict()
    mode = args.command
    base["mode"] = mode

    def take(key, value):
        if value is not None:
            base[key] = value

    take("seed", args.seed)
    threads = args.threads
    if threads is None and "threads" not in base:
        env = os.environ.get("FRAC_PLAP_THREADS")
        threads = int(env) if env else None
    take("threads", threads)
    for key in ("p", "s", "q", "tol", "multistarts"):
        take(key, getattr(args, key, None))
    if getattr(args, "domain", None):
        base["domain"] = json.loads(Path(args.domain).read_text())
    if getattr(args, "sweep", None) is not None:
        base["sweep"] = args.sweep
    if getattr(args, "p_list", None):
        base["p_list"] = [float(x) for x in args.p_list.split(",")]
    base.setdefault("p", 2.0)
    base.setdefault("s", 0.5)
    cfg = ExperimentConfig(**base)
    _validate(cfg)
    return cfg


def _cmd_polarize(cfg: ExperimentConfig, args, out: Path) -> int:
    u = read_grid_csv(args.input)
    refl = ReflectionParam.from_value(args.a, u.window.h)
    ug = u.embed_closed(refl)
    k = build_kernel(ug.window, cfg.s, cfg.p)
    pol = polarize(ug, refl, args.variant)
    emit_results(pol, "csv", out / "polarized.csv")
    deficit = polarization_pairing_deficit(ug, refl, k)
    case, _ = equality_case(ug, refl, k)
    report = {
        "a": args.a,
        "variant": args.variant,
        "deficit_plus": deficit.deficit_plus,
        "deficit_minus": deficit.deficit_minus,
        "seminorm_deficit": deficit.seminorm_deficit,
        "eps_num": deficit.eps_num,
        "nonnegative": deficit.ok,
        "equality_case": case.value,
    }
    emit_results(report, "json", out / "polarize_report.json")
    return 0 if deficit.ok else 2


def _cmd_eigen(cfg: ExperimentConfig, out: Path) -> int:
    from .eigensolver import second_eigen_mu2

    domain = load_domain(cfg.domain)
    k = build_kernel(domain.window, cfg.s, cfg.p)
    rep = second_eigen_mu2(
        domain,
        k,
        cfg.p,
        tol=cfg.tol,
        multistarts=cfg.multistarts,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    emit_results(rep, "json", out / "eigen_report.json")
    emit_results(rep.u2, "csv", out / "u2.csv")
    ok = rep.mu2 >= rep.lambda1 - cfg.tol * rep.mu2
    return 0 if ok else 2


def _cmd_lens(cfg: ExperimentConfig, out: Path) -> int:
    from .nehari import lens_minimize

    domain = load_domain(cfg.domain)
    k = build_kernel(domain.window, cfg.s, cfg.p)
    nl = Nonlinearity.power(cfg.p, cfg.q)
    rep = lens_minimize(
        domain,
        k,
        nl,
        tol=cfg.tol,
        multistarts=cfg.multistarts,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    emit_results(rep, "json", out / "lens_report.json")
    emit_results(rep.u, "csv", out / "u.csv")
    ok = rep.m > 0 and rep.g_identity_gap <= 1e-8
    return 0 if ok else 2


def _cmd_payne(cfg: ExperimentConfig, args, out: Path) -> int:
    domain = load_domain(cfg.domain)
    write_mask_csv(domain, out / "mask.csv")
    rep = run_payne_experiment(
        domain,
        cfg.s,
        cfg.p,
        mode=args.mode,
        q=cfg.q,
        tol=cfg.tol,
        multistarts=cfg.multistarts,
        seed=cfg.seed,
        tau_rel=cfg.tau_rel,
        touch_factor=cfg.touch_factor,
        threads=cfg.threads,
    )
    path = Path(args.report) if args.report else out / "payne_report.json"
    emit_results(rep, "json", path)
    sweep_ok = all(entry["nonnegative"] for entry in rep.polarization_sweep)
    return 0 if (rep.supports_touch and sweep_ok) else 2


def _cmd_verify(cfg: ExperimentConfig, out: Path) -> int:
    summary = {"four_point": [], "signed_combination": [], "partial_scaling": []}
    for p in cfg.p_list:
        summary["four_point"].append(four_point_sweep(cfg.sweep, p, seed=cfg.seed))
        summary["signed_combination"].append(
            signed_combination_sweep(10 * cfg.sweep, p, seed=cfg.seed)
        )
        summary["partial_scaling"].append(
            partial_scaling_sweep(10 * cfg.sweep, p, seed=cfg.seed)
        )
    ok = all(entry["ok"] for block in summary.values() for entry in block)
    summary["ok"] = ok
    emit_results(summary, "json", out / "inequalities_report.json")
    return 0 if ok else 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "polarize":
            code = _cmd_polarize(cfg, args, out)
        elif args.command == "eigen":
            code = _cmd_eigen(cfg, out)
        elif args.command == "lens":
            code = _cmd_lens(cfg, out)
        elif args.command == "payne":
            code = _cmd_payne(cfg, args, out)
        elif args.command == "verify-inequalities":
            code = _cmd_verify(cfg, out)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError("$.command", f"unknown command {args.command!r}")
    except FracplapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
