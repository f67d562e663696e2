"""Command-line front end: tables and reports as CSV or JSON.

Exit codes: 0 success, 2 invalid flags, 3 numerical failure (or a missed
target).  Errors are one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
COMMANDS = (
    "density", "moments", "laguerre-roots", "zeta", "flow",
    "reflections", "pde-check", "convergence",
)


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    t: float | None = None
    n: int | None = None
    k: int | None = None
    L: int | None = None
    grid: int | None = 721  # None: 8n for laguerre-roots
    samples: int | None = None
    seed: int = 42
    tol: float = 1e-10
    out: str | None = None
    format: str = "csv"
    theta_re: float = 0.0
    theta_im: float = 0.0
    x: float = 1.0
    h: float = 1e-3
    alpha: float = 0.0
    input: str = "atom"
    target: float | None = None
    angles_out: str | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="circleflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", default=None, help="output path (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--tol", type=float, default=1e-10)
        sp.add_argument("--seed", type=int, default=42)
        return sp

    sp = common(sub.add_parser("density", help="theta,density table of Pi_t"))
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--grid", type=int, default=721)

    sp = common(sub.add_parser("moments", help="ell,p_ell,moment table"))
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--L", type=int, default=10)

    sp = common(sub.add_parser("laguerre-roots", help="angle,multiplicity of L_{n,k}"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--grid", type=int, default=None)

    sp = common(sub.add_parser("zeta", help="solve zeta - t tan zeta = theta"))
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--theta-re", type=float, default=0.0)
    sp.add_argument("--theta-im", type=float, default=0.0)

    sp = common(sub.add_parser("flow", help="repeated differentiation of a real-rooted trig polynomial"))
    sp.add_argument("--n", type=int, required=True, help="number of zeros 2d")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--L", type=int, default=3)
    sp.add_argument("--input", choices=("atom", "uniform"), default="atom")
    sp.add_argument("--alpha", type=float, default=0.0)

    sp = common(sub.add_parser("reflections", help="Monte Carlo products of random reflections"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--angles-out", default=None, help="also write pooled eigen angles here")

    sp = common(sub.add_parser("pde-check", help="residual of the flow PDE for delta_1 at t > 1"))
    sp.add_argument("--t", type=float, default=2.0)
    sp.add_argument("--L", type=int, default=80)
    sp.add_argument("--x", type=float, default=1.0)
    sp.add_argument("--h", type=float, default=1e-3)
    sp.add_argument("--target", type=float, default=1e-4)

    sp = common(sub.add_parser("convergence", help="Laguerre zeros against Pi_t"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--L", type=int, default=4)
    sp.add_argument("--target", type=float, default=0.05)
    return p


def parse_config(argv) -> RunConfig:
    ns = _parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    validate(cfg)
    return cfg


def _pos(name, v, allow_zero=False):
    if v is None:
        return
    if isinstance(v, float) and not math.isfinite(v):
        raise UsageError(f"--{name} must be finite")
    if v < 0 or (v == 0 and not allow_zero):
        raise UsageError(f"--{name} must be {'non-negative' if allow_zero else 'positive'}, got {v}")


def validate(cfg: RunConfig) -> None:
    c = cfg.command
    _pos("t", cfg.t, allow_zero=False)
    _pos("n", cfg.n)
    _pos("k", cfg.k, allow_zero=True)
    _pos("L", cfg.L)
    _pos("grid", cfg.grid)
    _pos("samples", cfg.samples)
    _pos("tol", cfg.tol)
    _pos("h", cfg.h)
    if not 0 <= cfg.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    if c == "density" and cfg.grid < 2:
        raise UsageError("--grid must be at least 2")
    if c == "moments" and cfg.L > 200:
        raise UsageError("--L must be at most 200")
    if c == "laguerre-roots" and cfg.grid is not None and cfg.grid < 4 * cfg.n:
        raise UsageError(f"--grid must be at least 4n = {4 * cfg.n}")
    if c == "zeta" and cfg.theta_im < 0:
        raise UsageError("--theta-im must be >= 0")
    if c == "flow" and cfg.n > 128:
        raise UsageError("--n must be at most 128")
    if c == "reflections":
        if cfg.n > 64:
            raise UsageError("--n must be at most 64")
        if cfg.samples > 1_000_000:
            raise UsageError("--samples must be at most 1000000")
    if c == "pde-check":
        if not cfg.t > 1:
            raise UsageError("--t must exceed 1 for the PDE check")
        if cfg.L > 128:
            raise UsageError("--L must be at most 128")
        if cfg.h >= cfg.t:
            raise UsageError("--h must be smaller than --t")
    if c == "convergence" and round(cfg.t * cfg.n) < 1:
        raise UsageError("round(t n) must be at least 1")


# ---------------------------------------------------------------------------
# Formatting


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def render_table(header, rows, fmt, extra: dict | None = None, comment: str | None = None) -> str:
    if fmt == "json":
        obj = {"columns": list(header), "rows": [[_jsonable(x) for x in r] for r in rows]}
        if extra:
            obj.update({k: _jsonable(v) if not isinstance(v, dict) else v for k, v in extra.items()})
        return json.dumps(obj, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    if comment:
        buf.write(f"# {comment}\n")
    return buf.getvalue()


def render_report(d: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({k: _jsonable(v) for k, v in d.items()}, sort_keys=True) + "\n"
    keys = list(d)
    return ",".join(keys) + "\n" + ",".join(_fmt(d[k]) for k in keys) + "\n"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".circleflow-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Commands; each returns (text, exit_code)


def _grid(n: int) -> np.ndarray:
    return -math.pi + 2 * math.pi * np.arange(n) / n


def cmd_density(cfg: RunConfig):
    from .unitary_poisson import atom_weight, density

    rows = [(float(th), density(cfg.t, th)) for th in _grid(cfg.grid)]
    w = atom_weight(cfg.t)
    extra = {"atom": {"angle": 0.0, "weight": w}}
    return render_table(("theta", "density"), rows, cfg.format, extra, f"atom,0.0,{w!r}"), EXIT_OK


def cmd_moments(cfg: RunConfig):
    from .unitary_poisson import moment_table

    tab = moment_table(cfg.t, cfg.L)
    rows = [(l, p, m) for l, (p, m) in sorted(tab.entries.items())]
    return render_table(("ell", "p_ell", "moment"), rows, cfg.format), EXIT_OK


def cmd_laguerre_roots(cfg: RunConfig):
    from .polycore import roots_on_circle

    r = roots_on_circle((cfg.n, cfg.k), cfg.grid)
    return render_table(("angle", "multiplicity"), r.pairs(), cfg.format), EXIT_OK


def cmd_zeta(cfg: RunConfig):
    from .zetasolver import zeta

    v = zeta(cfg.t, complex(cfg.theta_re, cfg.theta_im))
    d = {
        "zeta_re": v.zeta.real, "zeta_im": v.zeta.imag, "residual": v.residual,
        "iterations": v.iterations, "method": v.method,
    }
    code = EXIT_OK if v.residual <= max(cfg.tol, 1e-9) * max(1.0, abs(v.zeta)) else EXIT_NUMERIC
    return render_report(d, cfg.format), code


def cmd_flow(cfg: RunConfig):
    from .experiments import derivative_flow
    from .polycore import EmpiricalAngles, wrap_angle

    if cfg.input == "atom":
        ea = EmpiricalAngles([wrap_angle(cfg.alpha)], [cfg.n])
    else:
        rng = np.random.default_rng(cfg.seed)
        ea = EmpiricalAngles.from_samples(rng.uniform(-math.pi, math.pi, cfg.n))
    rep = derivative_flow(ea, cfg.t, cfg.L or 3)
    d = rep.as_dict()
    d.pop("runtime_ms")
    return render_report(d, cfg.format), EXIT_OK


def cmd_reflections(cfg: RunConfig):
    from .experiments import expected_charpoly, pooled_angles, reflections_mc

    run = reflections_mc(cfg.n, cfg.k, cfg.samples, cfg.seed, keep_angles=cfg.angles_out is not None)
    target = expected_charpoly(cfg.n, cfg.k)
    d = {"n": run.n, "k": run.k, "samples": run.samples, "seed": run.seed, "skipped": run.skipped,
         "max_unit_dev": run.max_unit_dev}
    for j, (c, s, g) in enumerate(zip(run.estimated_charpoly, run.charpoly_se, target)):
        d[f"coef_{j}"] = float(c)
        d[f"se_{j}"] = float(s)
        d[f"target_{j}"] = float(g)
    if cfg.angles_out:
        ea = pooled_angles(run.eigen_angles)
        write_atomic(cfg.angles_out, render_table(("angle", "multiplicity"), ea.pairs(), cfg.format))
    return render_report(d, cfg.format), EXIT_OK


def cmd_pde_check(cfg: RunConfig):
    from .series_engine import pde_residual

    L = cfg.L or 80
    res = pde_residual(np.ones(L), cfg.t, cfg.x, cfg.h, L)
    d = {"t": cfg.t, "x": cfg.x, "h_t": cfg.h, "L": L, "residual": res, "target": cfg.target}
    return render_report(d, cfg.format), EXIT_OK if res <= cfg.target else EXIT_NUMERIC


def cmd_convergence(cfg: RunConfig):
    from .experiments import laguerre_convergence

    rep = laguerre_convergence(cfg.n, cfg.t, cfg.L or 4)
    d = rep.as_dict()
    d.pop("runtime_ms")  # keeps repeated runs byte-identical
    d["target"] = cfg.target
    return render_report(d, cfg.format), EXIT_OK if rep.kolmogorov <= cfg.target else EXIT_NUMERIC


DISPATCH = {
    "density": cmd_density,
    "moments": cmd_moments,
    "laguerre-roots": cmd_laguerre_roots,
    "zeta": cmd_zeta,
    "flow": cmd_flow,
    "reflections": cmd_reflections,
    "pde-check": cmd_pde_check,
    "convergence": cmd_convergence,
}


def _fail(code: int, kind: str, msg: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(msg).split()), "exit": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] in ("-h", "--help") or (len(argv) >= 2 and argv[1] in ("-h", "--help")):
        _parser().print_help() if len(argv) == 1 else _parser().parse_known_args(argv)
        return EXIT_OK
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        return _fail(EXIT_USAGE, "usage", str(e))
    try:
        text, code = DISPATCH[cfg.command](cfg)
    except (ValueError, TypeError) as e:
        return _fail(EXIT_USAGE, type(e).__name__, str(e))
    except (ArithmeticError, RuntimeError) as e:
        return _fail(EXIT_NUMERIC, type(e).__name__, str(e))
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
