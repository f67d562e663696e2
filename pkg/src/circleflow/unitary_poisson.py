"""The free unitary Poisson law Pi_t on the circle.

Angles are in radians with the atom (t < 1) sitting at angle 0.  The density
is (1/2pi) Re(1/r_t(e^{i theta})) = -(1/2pi) Im cot zeta_t(theta/2).  CDFs are
integrated in a coordinate s that straightens the edge singularities:
theta = e + s^2 beyond the square-root edge e = 2 x_t (t < 1), theta = s^3 at
t = 1, and theta = s otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from flint import arb, fmpq
from scipy.integrate import quad, quad_vec
from scipy.interpolate import CubicHermiteSpline

from ._prec import workprec
from .polycore import EmpiricalAngles
from .zetasolver import _regime, _check_t, cot_stable, r_func, x_t, zeta

__all__ = [
    "CircularLaw",
    "MomentTable",
    "QuadratureError",
    "atom_weight",
    "cdf",
    "cdf_many",
    "circular_law",
    "density",
    "density_fourier",
    "moment",
    "moment_quadrature",
    "moment_table",
    "p_coeffs",
    "p_value",
    "psi",
    "quantile",
    "s_sigma",
    "sample",
]

QUAD_TOL = 1e-8
TINY_MOMENT = 1e-50
TABLE_PANELS = 2048


class QuadratureError(ArithmeticError):
    def __init__(self, achieved: float, msg: str = "quadrature did not converge"):
        self.achieved = float(achieved)
        super().__init__(f"{msg} (achieved {self.achieved:.3g})")


@dataclass(frozen=True)
class CircularLaw:
    t: float
    atoms: tuple  # ((angle, weight), ...)
    ac_total: float
    support_gap: tuple | None = None

    def density(self, theta: float) -> float:
        return density(self.t, theta)

    def moment(self, ell: int) -> float:
        return moment(self.t, ell)


@dataclass(frozen=True)
class MomentTable:
    t: float
    entries: dict = field(default_factory=dict)  # ell -> (p_ell(t), moment)

    def tiny(self) -> list[int]:
        """Orders whose moment underflows the reporting threshold."""
        return [l for l, (_, m) in self.entries.items() if 0 < abs(m) < TINY_MOMENT]


def atom_weight(t: float) -> float:
    t = _check_t(t)
    return 1.0 - t if t < 1 and _regime(t) == "sub" else 0.0


def circular_law(t: float) -> CircularLaw:
    t = _check_t(t)
    w = atom_weight(t)
    atoms = ((0.0, w),) if w > 0 else ()
    gap = None
    if _regime(t) == "sub":
        e = 2 * x_t(t)
        gap = (-e, e)
    return CircularLaw(t, atoms, 1.0 - w, gap)


def _edge(t: float) -> float:
    return 2 * x_t(t) if _regime(t) == "sub" else 0.0


def density(t: float, theta: float) -> float:
    """Density of the absolutely continuous part; math.inf at (t=1, theta=0)."""
    t = _check_t(t)
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    reg = _regime(t)
    a = abs(theta)
    if reg == "sub" and a <= 2 * x_t(t):
        return 0.0
    if reg == "crit" and theta == 0:
        return math.inf
    z = zeta(t, 0.5 * theta).zeta
    return max(0.0, -cot_stable(z).imag / (2 * math.pi))


# ---------------------------------------------------------------------------
# Moments


@lru_cache(maxsize=None)
def p_coeffs(ell: int) -> tuple:
    """Exact rational coefficients of p_ell(t) (ascending powers of t)."""
    ell = abs(int(ell))
    if ell == 0:
        return (fmpq(1),)
    n = ell - 1
    c = [fmpq(0)] * ell
    c[0] = fmpq(1)
    # common denominator D of all s (s + 1), s = a + b; integer accumulation
    D = math.lcm(*[s * (s + 1) for s in range(1, ell)]) if ell > 1 else 1
    w = [0] + [D // (s * (s + 1)) << s for s in range(1, ell)]
    row = [math.comb(n, a) for a in range(ell)]
    for a in range(1, ell):
        m = n - a
        acc, cb = 0, 1  # cb = C(m, b)
        for b in range(0, ell - a):
            term = cb * w[a + b]
            acc += -term if b & 1 else term
            cb = cb * (m - b) // (b + 1)
        # multinomial(n; a, b, c) = C(n, a) C(n - a, b); the 1/2 cancels 2^{a+b+1}
        c[a] = fmpq(acc * row[a] * (2 * ell) ** a, D * math.factorial(a - 1))
    return tuple(c)


def _exact_t(t: float) -> fmpq:
    f = Fraction(float(t))
    return fmpq(f.numerator, f.denominator)


def p_value(t: float, ell: int) -> fmpq:
    """p_ell(t) exactly, with t read as its binary value."""
    tq = _exact_t(t)
    acc = fmpq(0)
    for c in reversed(p_coeffs(ell)):
        acc = acc * tq + c
    return acc


def moment(t: float, ell: int) -> float:
    """exp(-2|l| t) p_|l|(t); p is exact, so no cancellation is lost."""
    t = _check_t(t)
    ell = abs(int(ell))
    if ell == 0:
        return 1.0
    with workprec(128):
        return float(arb(p_value(t, ell)) * (-2 * ell * arb(_exact_t(t))).exp())


def moment_table(t: float, L: int = 64) -> MomentTable:
    t = _check_t(t)
    ent = {0: (1.0, 1.0)}
    for ell in range(1, int(L) + 1):
        with workprec(128):
            pv = arb(p_value(t, ell))
            p = float(pv) if abs(pv) < arb(2) ** 1000 else math.copysign(math.inf, float(pv.mid().sgn()))
        ent[ell] = (p, moment(t, ell))
    return MomentTable(t, ent)


def psi(t: float, z: complex) -> complex:
    """psi-transform 1/(2 r_t(z)) - 1/2 on the open disk."""
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("psi needs |z| < 1")
    return 0.5 / r_func(t, z) - 0.5


def s_sigma(t: float, z: complex) -> tuple[complex, complex]:
    """(S(z), Sigma(z)) = (exp(t/(z+1/2)), exp(2t(1-z)/(1+z)))."""
    t = _check_t(t)
    z = complex(z)
    if z == -0.5:
        raise ValueError("S has a pole at z = -1/2")
    if z == -1:
        raise ValueError("Sigma has a pole at z = -1")
    return complex(np.exp(t / (z + 0.5))), complex(np.exp(2 * t * (1 - z) / (1 + z)))


def density_fourier(t: float, theta: float, L: int) -> float:
    """Truncated Fourier series; for t < 1 it is the density of the continuous part."""
    t = _check_t(t)
    if int(L) < 1:
        raise ValueError("L must be >= 1")
    ell = np.arange(1, int(L) + 1)
    m = np.array([moment(t, l) for l in ell])
    c0 = 1.0
    if _regime(t) == "sub":
        m = m - (1 - t)
        c0 = t
    return float(c0 / (2 * math.pi) + np.dot(m, np.cos(ell * theta)) / math.pi)


# ---------------------------------------------------------------------------
# Quadrature in the straightened coordinate s


def _s_max(t: float) -> float:
    reg = _regime(t)
    if reg == "sub":
        return math.sqrt(math.pi - _edge(t))
    if reg == "crit":
        return math.pi ** (1 / 3)
    return math.pi


def _theta_of_s(t: float, s):
    reg = _regime(t)
    if reg == "sub":
        return _edge(t) + s * s
    if reg == "crit":
        return s ** 3
    return s


def _s_of_theta(t: float, th: float) -> float:
    """Inverse map on [0, pi]; theta inside the gap maps to 0."""
    reg = _regime(t)
    if reg == "sub":
        return math.sqrt(max(th - _edge(t), 0.0))
    if reg == "crit":
        return th ** (1 / 3)
    return th


def _jac(t: float, s):
    reg = _regime(t)
    if reg == "sub":
        return 2 * s
    if reg == "crit":
        return 3 * s * s
    return 1.0


def _g(t: float, s: float) -> float:
    """Density pulled back to s: f(theta(s)) theta'(s)."""
    if s == 0 and _regime(t) == "crit":
        # f ~ (1/2pi)(sqrt3/4)^{1/3} theta^{-1/3}, theta' = 3 s^2
        return 0.0
    return density(t, _theta_of_s(t, s)) * _jac(t, s)


def _quad_s(t: float, s0: float, s1: float) -> float:
    if s1 <= s0:
        return 0.0
    val, err = quad(lambda s: _g(t, s), s0, s1, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > QUAD_TOL:
        raise QuadratureError(err)
    return val


def _half_mass(t: float) -> float:
    """Mass of the continuous part on [0, pi] (one half by symmetry)."""
    return 0.5 * (1.0 - atom_weight(t))


def cdf(t: float, theta: float) -> float:
    """Pi_t([-pi, theta]); right-continuous, the atom is included at theta >= 0."""
    t = _check_t(t)
    theta = float(theta)
    if not -math.pi - 1e-12 <= theta <= math.pi + 1e-12:
        raise ValueError("theta must lie in [-pi, pi]")
    if theta <= -math.pi:
        return 0.0  # no atom at -pi
    w = atom_weight(t)
    half = _half_mass(t)
    inner = _quad_s(t, 0.0, _s_of_theta(t, min(abs(theta), math.pi)))
    val = half + w + inner if theta >= 0 else half - inner
    return min(1.0, max(0.0, val))


def cdf_many(t: float, thetas) -> tuple[np.ndarray, np.ndarray]:
    """(cdf(theta-), cdf(theta)) for many angles.

    Interpolates the Gauss-Legendre panel table with a cubic Hermite spline
    in s (its derivative is the pulled-back density), accurate to ~1e-11.
    """
    t = _check_t(t)
    th = np.asarray(thetas, dtype=float)
    w = atom_weight(t)
    half = _half_mass(t)
    a = np.minimum(np.abs(th), math.pi)
    s = np.array([_s_of_theta(t, x) for x in a.ravel()])
    cum = _cdf_spline(t)(s).reshape(a.shape)
    right = np.where(th >= 0, half + w + cum, half - cum)
    left = np.where(th > 0, half + w + cum, half - cum)
    left = np.where(th == 0, half, left)
    right = np.where(th <= -math.pi, 0.0, right)
    left = np.where(th <= -math.pi, 0.0, left)
    return np.clip(left, 0, 1), np.clip(right, 0, 1)


def quantile(t: float, u: float, tol: float = 1e-10) -> float:
    """Smallest theta with cdf(theta) >= u, by bisection."""
    t = _check_t(t)
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    w = atom_weight(t)
    half = _half_mass(t)
    if half <= u <= half + w:
        return 0.0
    lo, hi = (-math.pi, 0.0) if u < half else (0.0, math.pi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cdf(t, mid) >= u:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=16)
def _panel_table(t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(s edges, cumulative mass on [0, theta(s)], pulled-back density at the edges)."""
    smax = _s_max(t)
    edges = np.linspace(0.0, smax, TABLE_PANELS + 1)
    x, wq = np.polynomial.legendre.leggauss(8)
    cum = np.zeros(edges.size)
    for i in range(TABLE_PANELS):
        a, b = edges[i], edges[i + 1]
        nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
        cum[i + 1] = cum[i] + 0.5 * (b - a) * sum(wi * _g(t, si) for wi, si in zip(wq, nodes))
    scale = _half_mass(t) / cum[-1]  # absorb the ~1e-12 panel error into the scale
    g = np.array([_g(t, si) for si in edges])
    return edges, cum * scale, g * scale


def _inverse_table(t: float) -> tuple[np.ndarray, np.ndarray]:
    edges, cum, _ = _panel_table(t)
    return edges, cum


@lru_cache(maxsize=16)
def _cdf_spline(t: float) -> CubicHermiteSpline:
    edges, cum, g = _panel_table(t)
    return CubicHermiteSpline(edges, cum, g, extrapolate=False)


def sample(t: float, n: int, seed=42, rng: np.random.Generator | None = None) -> EmpiricalAngles:
    """n inverse-CDF draws; the atom draws land exactly on angle 0."""
    t = _check_t(t)
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = rng if rng is not None else np.random.default_rng(seed)
    u = gen.random(n)
    w = atom_weight(t)
    half = _half_mass(t)
    edges, cum = _inverse_table(t)
    out = np.zeros(n)
    hi = u > half + w
    lo = u < half
    out[hi] = _theta_of_s(t, np.interp(u[hi] - half - w, cum, edges))
    out[lo] = -_theta_of_s(t, np.interp(half - u[lo], cum, edges))
    return EmpiricalAngles.from_samples(out)


def moment_quadrature(t: float, lmax: int) -> np.ndarray:
    """Moments 1..lmax by quadrature of the density plus the atom."""
    t = _check_t(t)
    ell = np.arange(1, int(lmax) + 1)

    def f(s):
        th = _theta_of_s(t, s)
        return 2 * np.cos(ell * th) * _g(t, s)

    val, err = quad_vec(f, 0.0, _s_max(t), epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > QUAD_TOL:
        raise QuadratureError(err)
    return val + atom_weight(t)
