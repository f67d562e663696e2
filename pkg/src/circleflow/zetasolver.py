"""Principal branch of zeta - t tan(zeta) = theta on the closed upper half-plane.

zeta_t(theta) is the H-valued solution with zeta - theta -> i t high in H.
It is the limit of x -> theta + t tan(x) from any start in H; Newton polishes
the result.  Real theta near the branch points +-x_t (t < 1) or 0 (t = 1) get
Puiseux seeds, and the real stretch |theta| <= x_t of the sub-critical
branch is solved by bracketing on the increasing real branch.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from flint import arb, fmpq
from scipy.optimize import brentq

from ._prec import workprec
from .series_engine import TruncSeries

__all__ = [
    "BranchData",
    "ZetaError",
    "ZetaValue",
    "branch_data",
    "cot_stable",
    "fixed_point",
    "r_func",
    "r_taylor",
    "tan_stable",
    "v_func",
    "x_t",
    "y_axis",
    "y_tilde_axis",
    "zeta",
]

CRIT_WINDOW = 1e-12
PUISEUX_WINDOW = 0.05
FP_STEPS = 64
NEWTON_STEPS = 60
RESID_TOL = 1e-12
BRANCH_RESID_TOL = 1e-9
HALF_PI = 0.5 * math.pi


class ZetaError(ArithmeticError):
    def __init__(self, msg: str, trace: list | None = None):
        self.trace = list(trace or [])
        super().__init__(msg + (f"; trace={self.trace}" if self.trace else ""))


@dataclass(frozen=True)
class ZetaValue:
    zeta: complex
    residual: float
    iterations: int
    method: str  # fixed_point | newton | puiseux_seeded | real_branch


@dataclass(frozen=True)
class BranchData:
    t: float
    regime: str  # sub | crit | super
    x_t: float | None
    y0: float | None
    ytilde0: float


def _check_t(t) -> float:
    t = float(t)
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"t must be positive and finite, got {t}")
    return t


def tan_stable(z: complex) -> complex:
    """tan via exp(2iz), safe for large |Im z|."""
    z = complex(z)
    if z.imag < 0:
        return tan_stable(z.conjugate()).conjugate()
    e = cmath.exp(2j * z)
    return 1j * (1 - e) / (1 + e)


def cot_stable(z: complex) -> complex:
    z = complex(z)
    if z.imag < 0:
        return cot_stable(z.conjugate()).conjugate()
    if z.imag == 0:
        return complex(1.0 / math.tan(z.real), 0.0)
    e = cmath.exp(2j * z)
    return 1j * (e + 1) / (e - 1)


def _residual(t: float, z: complex, theta: complex) -> float:
    return abs(z - t * tan_stable(z) - theta)


def x_t(t: float) -> float:
    """arccos(sqrt t) - sqrt(t (1 - t)) for 0 < t <= 1, cancellation-free near 1."""
    t = _check_t(t)
    if t >= 1:
        return 0.0
    s = math.sqrt((1 - t) / t)
    if s < 0.1:
        # atan(s) - s/(1+s^2) = sum_m (-1)^{m+1} 2m/(2m+1) s^{2m+1}
        return sum((-1) ** (m + 1) * (2 * m) / (2 * m + 1) * s ** (2 * m + 1) for m in range(1, 16))
    return math.atan(s) - s / (1 + s * s)


def _regime(t: float) -> str:
    if abs(t - 1) <= CRIT_WINDOW:
        return "crit"
    return "sub" if t < 1 else "super"


def y_axis(t: float, tau: float) -> float:
    """y > tau solving y - t tanh y = tau; tau = 0 gives y_t(0) (0 for t <= 1)."""
    t = _check_t(t)
    tau = float(tau)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        if t <= 1:
            return 0.0
        lo = 0.5 * math.sqrt(3 * (t - 1) / t)
        return brentq(lambda y: y - t * math.tanh(y), min(lo, 1.0), t + 1, xtol=1e-15, rtol=1e-15)
    f = lambda y: y - t * math.tanh(y) - tau
    return brentq(f, tau, tau + t + 1, xtol=1e-15, rtol=1e-15)


def y_tilde_axis(t: float, tau: float) -> float:
    """y > 0 solving y - t coth y = tau."""
    t = _check_t(t)
    tau = float(tau)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    f = lambda y: y - t / math.tanh(y) - tau
    lo = 0.5 * math.sqrt(t)  # y - t/y < 0 there, and coth y > 1/y
    hi = tau + t + 1
    while f(hi) <= 0:
        hi *= 2
    return brentq(f, min(lo, hi / 2), hi, xtol=1e-15, rtol=1e-15)


def branch_data(t: float) -> BranchData:
    t = _check_t(t)
    reg = _regime(t)
    return BranchData(
        t=t,
        regime=reg,
        x_t=x_t(t) if reg == "sub" else None,
        y0=y_axis(t, 0.0) if reg == "super" else None,
        ytilde0=y_tilde_axis(t, 0.0),
    )


# ---------------------------------------------------------------------------
# Solver


def fixed_point(t: float, theta: complex, x0: complex | None = None, steps: int = FP_STEPS, tol: float = 0.0):
    """Iterate x -> theta + t tan x from x0 (default theta + i t).

    Returns (x, steps_taken); stops early when consecutive iterates differ by
    at most ``tol``.
    """
    x = complex(theta) + 1j * t if x0 is None else complex(x0)
    for i in range(1, steps + 1):
        nx = theta + t * tan_stable(x)
        if abs(nx - x) <= tol:
            return nx, i
        x = nx
    return x, steps


def _newton(t: float, theta: complex, z: complex, floor_im: float, steps: int = NEWTON_STEPS):
    """Damped Newton on g(z) = z - t tan z - theta, kept above Im = floor_im."""
    g = z - t * tan_stable(z) - theta
    for i in range(1, steps + 1):
        tz = tan_stable(z)
        dg = 1 - t * (1 + tz * tz)
        if dg == 0:
            return z, i, False
        step = g / dg
        lam = 1.0
        for _ in range(40):
            nz = z - lam * step
            if nz.imag > floor_im:
                ng = nz - t * tan_stable(nz) - theta
                if abs(ng) <= abs(g) or abs(ng) < 1e-15:
                    break
            lam *= 0.5
        else:
            return z, i, False
        done = abs(nz - z) <= 4e-16 * max(1.0, abs(nz))
        z, g = nz, ng
        if done or abs(g) <= 2e-16 * max(1.0, abs(z), t * abs(tz)):
            return z, i, True
    return z, steps, abs(g) <= RESID_TOL


def _sqrt_lower(w: complex) -> complex:
    """sqrt continuous on the closed lower half-plane with sqrt(1) = 1, sqrt(-1) = -i."""
    w = complex(w)
    # -w lies in the closed upper half-plane; force +0.0 so -1 maps to +i
    return -1j * cmath.sqrt(complex(-w.real, -w.imag if w.imag != 0 else 0.0))


def _puiseux_seed(t: float, theta: complex) -> complex:
    """Seed near the branch point theta = x_t (Re theta > 0)."""
    a = math.acos(math.sqrt(t))
    c = (t / (1 - t)) ** 0.25
    return a - c * _sqrt_lower(x_t(t) - theta)


def _cubic_seed(theta: complex) -> complex:
    """Seed near theta = 0 at t = 1: u - (2/15) w with u^3 = w = -3 theta."""
    w = -3 * complex(theta)
    im = w.imag if w.imag < 0 else -0.0
    phi = math.atan2(im, w.real)  # in [-pi, 0]
    u = abs(w) ** (1 / 3) * cmath.exp(1j * (phi + 2 * math.pi) / 3)
    return u - 2 * w / 15


def _reflect(v: ZetaValue) -> ZetaValue:
    z = v.zeta
    return ZetaValue(complex(-z.real, z.imag), v.residual, v.iterations, v.method)


def _finish(t, theta, z, its, method, tol=RESID_TOL):
    res = _residual(t, z, theta)
    scale = max(1.0, abs(theta))
    ok = res <= tol * scale and (z.imag > theta.imag or (theta.imag == 0 and z.imag >= 0))
    return ZetaValue(z, res, its, method), ok


def _solve_general(t: float, theta: complex, trace: list) -> ZetaValue:
    x, n1 = fixed_point(t, theta, steps=FP_STEPS, tol=0.0)
    trace.append(("fixed_point", n1, _residual(t, x, theta)))
    z, n2, conv = _newton(t, theta, x, theta.imag)
    v, ok = _finish(t, theta, z, n1 + n2, "newton")
    if ok:
        if n2 == 0:
            return ZetaValue(v.zeta, v.residual, v.iterations, "fixed_point")
        return v
    trace.append(("newton", n2, v.residual))
    # slow fallback: long fixed-point run, then polish again
    x, n3 = fixed_point(t, theta, x0=x, steps=200_000, tol=1e-15)
    z, n4, _ = _newton(t, theta, x, theta.imag)
    v, ok = _finish(t, theta, z, n1 + n2 + n3 + n4, "fixed_point")
    trace.append(("fallback", n3 + n4, v.residual))
    if not ok:
        raise ZetaError(f"no convergence for t={t}, theta={theta}", trace)
    return v


def _solve_seeded(t: float, theta: complex, seed: complex, trace: list) -> ZetaValue | None:
    floor = theta.imag
    z = seed if seed.imag > floor else complex(seed.real, floor + 1e-3)
    z, n, _ = _newton(t, theta, z, floor)
    v, ok = _finish(t, theta, z, n, "puiseux_seeded", BRANCH_RESID_TOL)
    trace.append(("puiseux_seeded", n, v.residual))
    return v if ok else None


def _solve_reduced(t: float, theta: complex) -> ZetaValue:
    """theta with Re theta in [-pi/2, pi/2) when theta is real."""
    reg = _regime(t)
    trace: list = []
    if theta.imag == 0:
        th = theta.real
        if th < 0:
            return _reflect(_solve_reduced(t, complex(-th, 0.0)))
        if reg != "super" and th == 0:
            return ZetaValue(0j, 0.0, 0, "real_branch")
        if reg == "sub":
            xt = x_t(t)
            a = math.acos(math.sqrt(t))
            if th >= xt:
                if th - xt <= 4e-16:
                    return ZetaValue(complex(a, 0.0), _residual(t, a, th), 0, "real_branch")
            else:
                f = lambda z: z - t * math.tan(z) - th
                z = brentq(f, 0.0, a, xtol=1e-16, rtol=1e-15, maxiter=200)
                res = abs(f(z))
                return ZetaValue(complex(z, 0.0), res, 0, "real_branch")
            if th < xt + PUISEUX_WINDOW:
                v = _solve_seeded(t, theta, _puiseux_seed(t, theta), trace)
                if v is not None:
                    return v
        elif reg == "crit" and th < PUISEUX_WINDOW:
            v = _solve_seeded(t, theta, _cubic_seed(theta), trace)
            if v is not None:
                return v
    else:
        # near-real points next to the branch point still benefit from the seed
        if reg == "sub" and theta.imag < PUISEUX_WINDOW:
            xt = x_t(t)
            for sgn in (1, -1):
                d = sgn * theta.real - xt
                if abs(d) < PUISEUX_WINDOW:
                    th = complex(sgn * theta.real, theta.imag)
                    v = _solve_seeded(t, th, _puiseux_seed(t, th), trace)
                    if v is not None:
                        return v if sgn == 1 else _reflect(v)
        elif reg == "crit" and abs(theta) < PUISEUX_WINDOW:
            v = _solve_seeded(t, theta, _cubic_seed(theta), trace)
            if v is not None:
                return v
    return _solve_general(t, theta, trace)


def zeta(t: float, theta: complex) -> ZetaValue:
    """zeta_t(theta) for Im theta >= 0.

    Real theta is reduced mod pi into [-pi/2, pi/2) and shifted back.
    """
    t = _check_t(t)
    theta = complex(theta)
    if not (math.isfinite(theta.real) and math.isfinite(theta.imag)):
        raise ValueError("theta must be finite")
    if theta.imag < 0:
        raise ValueError("zeta needs Im(theta) >= 0")
    if theta.imag == 0:
        theta = complex(theta.real, 0.0)
        k = math.floor((theta.real + HALF_PI) / math.pi)
        if k != 0:
            v = _solve_reduced(t, complex(theta.real - k * math.pi, 0.0))
            z = v.zeta + k * math.pi
            return ZetaValue(z, _residual(t, z, theta), v.iterations, v.method)
    return _solve_reduced(t, theta)


# ---------------------------------------------------------------------------
# Disk functions


def _theta_of_z(z: complex) -> complex:
    """theta with exp(2 i theta) = z, Im theta >= 0, Re theta in (-pi/2, pi/2]."""
    return complex(0.5 * cmath.phase(z), -0.5 * math.log(abs(z)))


def r_func(t: float, z: complex) -> complex:
    """r_t(z) = (zeta_t(theta) - theta)/(i t) with z = exp(2 i theta), |z| <= 1."""
    t = _check_t(t)
    z = complex(z)
    if abs(z) > 1 + 1e-15:
        raise ValueError("r_func needs |z| <= 1")
    if z == 0:
        return 1 + 0j
    th = _theta_of_z(z)
    if abs(z) >= 1:
        th = complex(th.real, 0.0)
    v = zeta(t, th)
    # t tan(zeta) = zeta - theta = i t r
    r = -1j * tan_stable(v.zeta)
    if v.zeta.imag == 0:
        r = complex(0.0, r.imag)
    return r


def r_residual(t: float, z: complex, r: complex) -> float:
    return abs(z * (1 + r) - cmath.exp(2 * t * r) * (1 - r))


def v_func(t: float, z: complex) -> complex:
    """v_t(z) = (1 - r)/(1 + r), the solution of v exp(2t(1-v)/(1+v)) = z."""
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("v_func needs |z| < 1")
    r = r_func(t, z)
    return (1 - r) / (1 + r)


@lru_cache(maxsize=256)
def _q_coeffs(m: int) -> tuple:
    """Coefficients C(m+1, j+1)/j! of q_m."""
    out = []
    fact = 1
    for j in range(m + 1):
        if j:
            fact *= j
        out.append(fmpq(comb(m + 1, j + 1), fact))
    return tuple(out)


def _q_eval(m: int, x: fmpq) -> fmpq:
    acc = fmpq(0)
    for c in reversed(_q_coeffs(m)):
        acc = acc * x + c
    return acc


def r_taylor(t: float, L: int) -> TruncSeries:
    """Taylor coefficients of r_t at 0, c_0 = 1.

    q_{l-1}(-4 l t) is evaluated exactly in rationals (t is taken as the exact
    binary value of the float); the factor exp(-2 l t) is applied in ball
    arithmetic, since q grows like exp(2 l t) while c_l stays bounded.
    """
    t = _check_t(t)
    if not 1 <= L <= 200:
        raise ValueError("L must lie in 1..200")
    f = Fraction(t)
    tq = fmpq(f.numerator, f.denominator)
    c = np.zeros(L + 1, dtype=complex)
    c[0] = 1
    with workprec(192):
        for ell in range(1, L + 1):
            q = _q_eval(ell - 1, -4 * ell * tq)
            val = arb(q) * (-2 * ell * arb(tq)).exp()
            c[ell] = float(2 * (-1) ** ell * val / ell)
    return TruncSeries(c, "s")
