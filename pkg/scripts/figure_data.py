"""Write the CSV data behind the zero plots, density curves and moment tables.

Usage: python3 scripts/figure_data.py [--out DIR] [--n 400] [--grid 2001]
"""
from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from circleflow.cli import render_table, write_atomic
from circleflow.polycore import roots_on_circle
from circleflow.unitary_poisson import atom_weight, density, moment_table


@dataclass
class FigureConfig:
    out: str = "figure_data"
    n: int = 400
    # k = floor(t n) for these t
    root_ts: tuple = (Fraction(1, 7), Fraction(3, 7), Fraction(5, 7), Fraction(1))
    density_ts: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    grid: int = 2001
    L: int = 12
    moment_ts: tuple = (0.5, 1.0, 2.0)
    fmt: str = "csv"
    written: list = field(default_factory=list)


def _tag(x) -> str:
    return str(float(x)).replace(".", "p")


def _write(cfg: FigureConfig, name: str, text: str):
    path = os.path.join(cfg.out, name)
    write_atomic(path, text)
    cfg.written.append(path)


def zeros(cfg: FigureConfig):
    for t in cfg.root_ts:
        k = int(t * cfg.n)
        r = roots_on_circle((cfg.n, k))
        _write(cfg, f"roots_n{cfg.n}_k{k}.csv", render_table(("angle", "multiplicity"), r.pairs(), cfg.fmt))


def densities(cfg: FigureConfig):
    th = np.linspace(-np.pi, np.pi, cfg.grid)
    for t in cfg.density_ts:
        rows = [(float(x), density(t, x)) for x in th]
        w = atom_weight(t)
        extra = {"atom": {"angle": 0.0, "weight": w}}
        text = render_table(("theta", "density"), rows, cfg.fmt, extra, f"atom,0.0,{w!r}")
        _write(cfg, f"density_t{_tag(t)}.csv", text)


def moments(cfg: FigureConfig):
    for t in cfg.moment_ts:
        tab = moment_table(t, cfg.L)
        rows = [(l, p, m) for l, (p, m) in sorted(tab.entries.items())]
        _write(cfg, f"moments_t{_tag(t)}.csv", render_table(("ell", "p_ell", "moment"), rows, cfg.fmt))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=FigureConfig.out)
    ap.add_argument("--n", type=int, default=FigureConfig.n)
    ap.add_argument("--grid", type=int, default=FigureConfig.grid)
    ns = ap.parse_args(argv)
    cfg = FigureConfig(out=ns.out, n=ns.n, grid=ns.grid)
    os.makedirs(cfg.out, exist_ok=True)
    zeros(cfg)
    densities(cfg)
    moments(cfg)
    for p in cfg.written:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
