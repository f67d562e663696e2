"""Tabulate how fast the zeros of L_{n, round(tn)} approach the limiting law.

One row per (t, n): moment errors, Kolmogorov distance, smallest positive zero
angle and wall time.  Prints CSV to stdout unless --out is given.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from circleflow.cli import render_table, write_atomic
from circleflow.experiments import laguerre_convergence


@dataclass
class TableConfig:
    ns: tuple = (50, 100, 200, 400)
    ts: tuple = (0.3, 0.5, 1.0, 1.5)
    lmax: int = 3
    out: str | None = None


def build(cfg: TableConfig) -> tuple[tuple, list]:
    header = ("t", "n", "k") + tuple(f"moment_error_{l}" for l in range(1, cfg.lmax + 1)) + (
        "kolmogorov", "min_positive_angle", "runtime_ms")
    rows = []
    for t in cfg.ts:
        for n in cfg.ns:
            r = laguerre_convergence(n, t, lmax=cfg.lmax)
            rows.append((t, n, r.k, *map(float, r.moment_errors), r.kolmogorov,
                         r.min_positive_angle, round(r.runtime_ms, 1)))
    return header, rows


def _ints(s):
    return tuple(int(x) for x in s.split(","))


def _floats(s):
    return tuple(float(x) for x in s.split(","))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=_ints, default=TableConfig.ns, help="comma separated")
    ap.add_argument("--ts", type=_floats, default=TableConfig.ts, help="comma separated")
    ap.add_argument("--lmax", type=int, default=TableConfig.lmax)
    ap.add_argument("--out")
    cfg = TableConfig(**vars(ap.parse_args(argv)))
    text = render_table(*build(cfg), "csv")
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
