"""Desk-scale checks of the finite-n theory against the limiting laws."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from flint import acb, acb_poly

from ._prec import workprec
from .polycore import (
    EmpiricalAngles,
    UnitPoly,
    apply_D,
    empirical_moments,
    ffm_conv,
    laguerre,
    laguerre_int_coeffs,
    poly_from_angles,
    roots_on_circle,
    wrap_angle,
)
from .series_engine import conv_moments
from .unitary_poisson import atom_weight, cdf_many, moment
from .zetasolver import cot_stable, zeta

__all__ = [
    "ConvergenceReport",
    "ReflectionRun",
    "derivative_flow",
    "expected_charpoly",
    "kolmogorov",
    "laguerre_convergence",
    "log_growth_check",
    "minimal_angle",
    "poisson_limit_finite_n",
    "reflections_mc",
    "worker_count",
]

DEGENERATE_M1 = 1e-8
BLOCK = 4096
UNIT_TOL = 1e-8


def worker_count() -> int:
    """CIRCLEFLOW_THREADS if set (at least 1), else min(4, cpu count)."""
    env = os.environ.get("CIRCLEFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


@dataclass
class ConvergenceReport:
    n: int
    k: int
    t: float
    moment_errors: np.ndarray
    kolmogorov: float
    min_positive_angle: float
    runtime_ms: float
    degraded: bool = False
    passthrough: bool = False
    empirical_moments: np.ndarray | None = None
    predicted_moments: np.ndarray | None = None

    def as_dict(self) -> dict:
        out = {
            "n": self.n,
            "k": self.k,
            "t": self.t,
            "kolmogorov": self.kolmogorov,
            "min_positive_angle": self.min_positive_angle,
            "runtime_ms": self.runtime_ms,
            "degraded": self.degraded,
            "passthrough": self.passthrough,
        }
        for i, e in enumerate(np.atleast_1d(self.moment_errors), 1):
            out[f"moment_error_{i}"] = float(e)
        return out


@dataclass
class ReflectionRun:
    n: int
    k: int
    samples: int
    seed: int
    eigen_angles: np.ndarray | None
    estimated_charpoly: np.ndarray  # monic, ascending powers
    charpoly_se: np.ndarray
    skipped: int = 0
    max_unit_dev: float = 0.0
    max_det_dev: float = 0.0


# ---------------------------------------------------------------------------
# Kolmogorov distance with a fixed cut at -pi


def _arc_mass(t: float, a: float, length, closed_right: bool):
    """Pi_t mass of the arc from a (inclusive) over the given lengths."""
    length = np.asarray(length, dtype=float)
    a0 = wrap_angle(a)
    b = a0 + length
    inside = b < math.pi
    bb = np.where(inside, b, b - 2 * math.pi)
    left_b, right_b = cdf_many(t, bb)
    fb = right_b if closed_right else left_b
    left_a = cdf_many(t, np.array([a0]))[0][0]
    return np.where(inside, fb - left_a, (1.0 - left_a) + fb)


def _ref_cdf(t: float, rot: EmpiricalAngles | None, x: np.ndarray):
    """Left and right CDF values at x of sum_j w_j (Pi_t rotated by alpha_j)."""
    if rot is None:
        return cdf_many(t, x)
    left = np.zeros_like(x)
    right = np.zeros_like(x)
    for alpha, w in zip(rot.angles, rot.mults / rot.total):
        start = -math.pi - alpha
        ln = x + math.pi  # arc [-pi, x] pulled back by alpha
        left += w * np.where(ln > 0, _arc_mass(t, start, ln, False), 0.0)
        right += w * _arc_mass(t, start, ln, True)
    return left, right


def kolmogorov(emp: EmpiricalAngles, t: float, rot: EmpiricalAngles | None = None) -> float:
    """sup |F_emp - F_ref| on [-pi, pi) for the reference Pi_t (optionally a rotation mixture).

    Both step functions are compared at every jump of either side, from the
    left and at the point, which attains the supremum for monotone CDFs.
    """
    pts = [emp.angles, [-math.pi]]
    if atom_weight(t) > 0:
        pts.append([0.0] if rot is None else rot.angles)
    x = np.unique(np.concatenate(pts))
    cum = np.concatenate([[0], np.cumsum(emp.mults)]) / emp.total
    idx_right = np.searchsorted(emp.angles, x, side="right")
    idx_left = np.searchsorted(emp.angles, x, side="left")
    e_right, e_left = cum[idx_right], cum[idx_left]
    r_left, r_right = _ref_cdf(t, rot, x)
    d = max(np.max(np.abs(e_right - r_right)), np.max(np.abs(e_left - r_left)))
    return float(min(max(d, 0.0), 1.0))


# ---------------------------------------------------------------------------


def _min_positive(a: EmpiricalAngles) -> float:
    pos = a.angles[a.angles > 0]
    return float(pos[0]) if pos.size else math.nan


def laguerre_convergence(n: int, t: float, lmax: int = 4, grid: int | None = None) -> ConvergenceReport:
    """Zeros of L_{n,k}, k = round(t n), against Pi_{k/n}."""
    t0 = time.perf_counter()
    n = int(n)
    k = int(round(t * n))
    if k == 0:
        # L_{n,0} = (z-1)^n: the law stays at delta_1
        z = np.zeros(lmax)
        return ConvergenceReport(n, 0, 0.0, z, 0.0, math.nan, 0.0, passthrough=True)
    roots = roots_on_circle((n, k), grid)
    te = k / n
    emp = empirical_moments(roots, lmax)
    ref = np.array([moment(te, l) for l in range(1, lmax + 1)])
    ks = kolmogorov(roots, te)
    ms = (time.perf_counter() - t0) * 1e3
    return ConvergenceReport(
        n, k, te, np.abs(emp - ref), ks, _min_positive(roots), ms,
        empirical_moments=emp, predicted_moments=ref,
    )


def derivative_flow(angles: EmpiricalAngles, t: float, lmax: int = 3) -> ConvergenceReport:
    """Differentiate prod sin((theta - theta_j)/2) k = round(t n) times and compare.

    The prediction is nu (x) Pi_{k/n} through the series pipeline.  With
    |m_1(nu)| < 1e-8 that pipeline is undefined; the report is then flagged
    degraded, moment errors are NaN and the Kolmogorov distance is taken
    against the mixture of copies of Pi_{k/n} rotated to the input angles.
    """
    t0 = time.perf_counter()
    n = angles.total
    k = int(round(t * n))
    p = poly_from_angles(angles)
    q = apply_D(p, k) if k else p
    known = [(a, m - k) for a, m in angles.pairs() if m > k]
    known_ea = EmpiricalAngles.from_pairs(known) if known else None
    roots = roots_on_circle(q, known=known_ea)
    te = k / n
    emp = empirical_moments(roots, lmax)
    m_in = empirical_moments(angles, lmax)
    degraded = abs(m_in[0]) < DEGENERATE_M1
    if k == 0:
        pred = m_in
        ks = 0.0
    elif degraded:
        pred = np.full(lmax, np.nan + 0j)
        ks = kolmogorov(roots, te, rot=angles)
    else:
        pred = conv_moments(m_in, te, lmax)
        ks = kolmogorov(roots, te, rot=angles) if len(angles) == 1 else math.nan
    ms = (time.perf_counter() - t0) * 1e3
    return ConvergenceReport(
        n, k, te, np.abs(emp - pred), ks, _min_positive(roots), ms,
        degraded=degraded, passthrough=(k == 0),
        empirical_moments=emp, predicted_moments=pred,
    )


def _laguerre_at(n: int, k: int, theta: complex, min_bits: int = 60):
    """(log|g(z)|, z g'(z)/g(z)) at z = exp(i theta), g = sum b_j z^j, certified."""
    b = laguerre_int_coeffs(n, k)
    db = [j * x for j, x in enumerate(b)]
    bits = 2 * n + 64
    for _ in range(8):
        with workprec(bits):
            zz = (acb(0, 1) * acb(theta.real, theta.imag)).exp()
            v = acb_poly(list(b))(zz)
            dv = acb_poly(db)(zz)  # z L'(z) in the same integer scaling
            if v.rel_accuracy_bits() >= min_bits and dv.rel_accuracy_bits() >= min_bits:
                return float(abs(v).log()), complex(dv / v)
        bits *= 2
    raise ArithmeticError(f"could not resolve L_{{{n},{k}}} at theta={theta}")


def log_growth_check(n: int, k: int, theta: complex):
    """(lhs_log, lhs_logderiv, rhs_log, rhs_logderiv) for W_{n,k}(theta).

    lhs_log = log|W|/n; lhs_logderiv = W'/W (not divided by n); the limits
    use t = k/n.
    """
    theta = complex(theta)
    if theta.imag < 0.2:
        raise ValueError("log_growth_check needs Im(theta) >= 0.2")
    n, k = int(n), int(k)
    logv, zld = _laguerre_at(n, k, theta)
    # W = (i/2)^k g(z) e^{-i n theta/2} / ((2i)^n k!)
    lhs_log = (logv - k * math.log(2) + n * theta.imag / 2 - n * math.log(2) - math.lgamma(k + 1)) / n
    lhs_ld = 1j * zld - 0.5j * n
    t = k / n
    zt = zeta(t, theta / 2).zeta
    rhs_log = math.log(abs(np.sin(zt))) - t * math.log(abs(2 * zt - theta))
    rhs_ld = t / (2 * zt - theta)
    return lhs_log, complex(lhs_ld), rhs_log, complex(rhs_ld)


def log_deriv_identity_gap(t: float, theta: complex) -> float:
    """|cot(zeta_t(theta/2))/2 - t/(2 zeta_t(theta/2) - theta)|."""
    zt = zeta(t, complex(theta) / 2).zeta
    return abs(0.5 * cot_stable(zt) - t / (2 * zt - theta))


def minimal_angle(n: int, t: float) -> float:
    """Smallest positive root angle of L_{n,k}, k = round(t n) < n."""
    k = int(round(t * n))
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    return _min_positive(roots_on_circle((int(n), k)))


def poisson_limit_finite_n(n: int, t: float, lmax: int = 4) -> dict:
    """k-fold finite free power of L_{n,1}, checked against the closed form and Pi_{k/n}."""
    n = int(n)
    k = int(round(t * n))
    base = laguerre(n, 1)
    acc = laguerre(n, 0)
    for _ in range(k):
        acc = ffm_conv(acc, base)
    closed = laguerre(n, k)
    a, b = acc.scaled_coeffs() * math.exp(acc.offset - closed.offset), closed.scaled_coeffs()
    closed_err = float(np.max(np.abs(a - b)))
    if k == 0:
        errs = np.zeros(lmax)
    else:
        emp = empirical_moments(roots_on_circle((n, k)), lmax)
        errs = np.abs(emp - np.array([moment(k / n, l) for l in range(1, lmax + 1)]))
    return {"n": n, "k": k, "t": k / n, "closed_form_error": closed_err, "moment_errors": errs}


# ---------------------------------------------------------------------------
# Random reflections


def expected_charpoly(n: int, k: int) -> np.ndarray:
    """Monic ascending coefficients of ((z+1)(z-1)^{n-1})^{(x)_n k}."""
    base = np.polynomial.polynomial.polyfromroots([-1.0] + [1.0] * (n - 1))
    p = UnitPoly.from_coeffs(base, prec=256)
    acc = UnitPoly.from_coeffs(np.polynomial.polynomial.polyfromroots([1.0] * n), prec=256)
    for _ in range(k):
        acc = ffm_conv(acc, p)
    c = np.array([complex(x) for x in acc.balls])
    return (c / c[-1]).real


def _block(n: int, k: int, size: int, seed: int, block: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    u = rng.standard_normal((size, k, n))
    u /= np.linalg.norm(u, axis=2, keepdims=True)
    m = np.broadcast_to(np.eye(n), (size, n, n)).copy()
    for j in range(k):
        v = u[:, j, :]
        # M <- M (I - 2 v v^T)
        mv = np.einsum("bij,bj->bi", m, v)
        m -= 2 * mv[:, :, None] * v[:, None, :]
    try:
        lam = np.linalg.eigvals(m)
        bad = np.zeros(size, dtype=bool)
    except np.linalg.LinAlgError:
        lam = np.zeros((size, n), dtype=complex)
        bad = np.ones(size, dtype=bool)
        for i in range(size):
            try:
                lam[i] = np.linalg.eigvals(m[i])
                bad[i] = False
            except np.linalg.LinAlgError:
                pass
    dev = np.max(np.abs(np.abs(lam) - 1), axis=1)
    bad |= ~(dev <= UNIT_TOL)
    det_dev = np.abs(np.prod(lam, axis=1) - (-1) ** k)
    lam = lam[~bad]
    # characteristic polynomial prod (z - lambda), ascending coefficients
    c = np.ones((lam.shape[0], 1), dtype=complex)
    for j in range(n):
        nc = np.zeros((c.shape[0], c.shape[1] + 1), dtype=complex)
        nc[:, 1:] += c
        nc[:, :-1] -= lam[:, j : j + 1] * c
        c = nc
    c = c.real
    ang = np.angle(lam).ravel()
    return {
        "sum": c.sum(axis=0),
        "sumsq": (c * c).sum(axis=0),
        "count": lam.shape[0],
        "skipped": int(bad.sum()),
        "angles": wrap_angle(ang),
        "max_dev": float(dev[~bad].max()) if (~bad).any() else 0.0,
        "max_det": float(det_dev[~bad].max()) if (~bad).any() else 0.0,
    }


def pooled_angles(angles: np.ndarray, decimals: int = 9) -> EmpiricalAngles:
    """Eigen angles rounded to ``decimals`` and pooled; values within 1e-8 of +-pi go to -pi."""
    a = np.round(np.asarray(angles, dtype=float), decimals)
    a = np.where(np.abs(a) > math.pi - 1e-8, -math.pi, a)
    return EmpiricalAngles.from_samples(a)


def reflections_mc(n: int, k: int, samples: int, seed: int = 42, keep_angles: bool = True) -> ReflectionRun:
    """Products of k Haar-random reflections of R^n, sampled in fixed-size blocks.

    Block b uses the generator SeedSequence([seed, b]), so results do not
    depend on the worker count.
    """
    n, k, samples = int(n), int(k), int(samples)
    if not 1 <= n <= 64:
        raise ValueError("n must lie in 1..64")
    if not 1 <= samples <= 1_000_000:
        raise ValueError("samples must lie in 1..1e6")
    if k < 0:
        raise ValueError("k must be >= 0")
    sizes = [BLOCK] * (samples // BLOCK)
    if samples % BLOCK:
        sizes.append(samples % BLOCK)
    jobs = list(enumerate(sizes))
    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        res = list(ex.map(lambda bs: _block(n, k, bs[1], seed, bs[0]), jobs))
    count = sum(r["count"] for r in res)
    skipped = sum(r["skipped"] for r in res)
    if skipped > 0.01 * samples:
        raise ArithmeticError(f"{skipped} of {samples} samples failed the eigen check")
    tot = np.array([math.fsum(col) for col in zip(*[r["sum"] for r in res])])
    tot2 = np.array([math.fsum(col) for col in zip(*[r["sumsq"] for r in res])])
    mean = tot / count
    var = np.maximum(tot2 / count - mean * mean, 0.0) * count / max(count - 1, 1)
    se = np.sqrt(var / count)
    angles = np.concatenate([r["angles"] for r in res]) if keep_angles else None
    return ReflectionRun(
        n, k, samples, int(seed), angles, mean, se, skipped,
        max(r["max_dev"] for r in res), max(r["max_det"] for r in res),
    )
