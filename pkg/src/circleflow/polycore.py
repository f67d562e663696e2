"""Polynomials with all roots on the unit circle.

Coefficients live in flint ``acb`` balls.  The circular Laguerre family has
exact integer data, and its trigonometric sums cancel by hundreds of decimal
digits close to the real axis, so every sign decision is certified in ball
arithmetic with precision raised on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from flint import acb, acb_poly, arb, fmpz, fmpz_poly

from ._prec import workprec

__all__ = [
    "EmpiricalAngles",
    "RootCountError",
    "TrigEval",
    "TrigValue",
    "UnitPoly",
    "apply_D",
    "empirical_moments",
    "ffm_conv",
    "laguerre",
    "laguerre_int_coeffs",
    "poly_from_angles",
    "psi_empirical",
    "roots_on_circle",
    "trig_eval",
    "trig_laguerre",
    "wrap_angle",
]

BISECT_TOL = 1e-12
GRID_FACTOR = 8
MAX_REFINEMENTS = 4
MAX_FROM_ANGLES = 128
LOG_MAG_LIMIT = 700.0
BASE_BITS = 64


class RootCountError(RuntimeError):
    """Fewer (or more) sign changes than the degree demands."""

    def __init__(self, found: int, expected: int, detail: str = ""):
        self.found = int(found)
        self.expected = int(expected)
        msg = f"found {self.found} roots on the circle, expected {self.expected}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def wrap_angle(x):
    """Map angles into [-pi, pi)."""
    x = np.asarray(x, dtype=float)
    y = np.mod(x + math.pi, 2 * math.pi) - math.pi
    # mod can round up to exactly 2pi - pi = pi
    y = np.where(y >= math.pi, -math.pi, y)
    # angles already in range pass through bit-exact
    y = np.where((x >= -math.pi) & (x < math.pi), x, y)
    return float(y) if np.ndim(y) == 0 else y


# ---------------------------------------------------------------------------
# Empirical measures


@dataclass(frozen=True, eq=False)
class EmpiricalAngles:
    """Multiset of angles in [-pi, pi) with positive integer multiplicities."""

    angles: np.ndarray
    mults: np.ndarray

    def __post_init__(self):
        a = np.array(self.angles, dtype=float).ravel()
        m = np.array(self.mults, dtype=np.int64).ravel()
        if a.shape != m.shape:
            raise ValueError("angles and multiplicities differ in length")
        if a.size == 0:
            raise ValueError("empty angle set")
        if np.any(m <= 0):
            raise ValueError("multiplicities must be positive")
        if np.any(~np.isfinite(a)) or np.any(a < -math.pi) or np.any(a >= math.pi):
            raise ValueError("angles must lie in [-pi, pi)")
        if np.any(np.diff(a) <= 0):
            raise ValueError("angles must be strictly increasing")
        a.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "mults", m)

    @classmethod
    def from_samples(cls, values) -> "EmpiricalAngles":
        a = wrap_angle(np.atleast_1d(np.asarray(values, dtype=float)))
        u, c = np.unique(a, return_counts=True)
        return cls(u, c)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int]]) -> "EmpiricalAngles":
        acc: dict[float, int] = {}
        for ang, mult in pairs:
            if int(mult) <= 0:
                continue
            w = wrap_angle(ang)
            acc[w] = acc.get(w, 0) + int(mult)
        keys = sorted(acc)
        return cls(np.array(keys), np.array([acc[x] for x in keys]))

    @property
    def total(self) -> int:
        return int(self.mults.sum())

    def pairs(self) -> list[tuple[float, int]]:
        return [(float(a), int(m)) for a, m in zip(self.angles, self.mults)]

    def expanded(self) -> np.ndarray:
        return np.repeat(self.angles, self.mults)

    def __len__(self):
        return len(self.angles)

    def __repr__(self):
        return f"EmpiricalAngles(distinct={len(self)}, total={self.total})"


def empirical_moments(a: EmpiricalAngles, lmax: int) -> np.ndarray:
    """m_l = (1/total) sum mult_j exp(i l theta_j), l = 1..lmax."""
    if int(lmax) < 1:
        raise ValueError("lmax must be >= 1")
    ell = np.arange(1, int(lmax) + 1)[:, None]
    w = a.mults / a.total
    return np.exp(1j * ell * a.angles[None, :]) @ w


def psi_empirical(a: EmpiricalAngles, theta: complex) -> complex:
    """psi-transform of the empirical measure evaluated at exp(i theta)."""
    theta = complex(theta)
    if not theta.imag > 0:
        raise ValueError("psi_empirical needs Im(theta) > 0")
    # cot(w/2) = i (e^{iw} + 1) / (e^{iw} - 1), stable for Im w > 0
    e = np.exp(1j * (theta + a.angles))
    cot = 1j * (e + 1) / (e - 1)
    return complex(0.5j * np.dot(a.mults, cot) / a.total - 0.5)


# ---------------------------------------------------------------------------
# UnitPoly


def _as_acb(x) -> acb:
    if isinstance(x, acb):
        return x
    if isinstance(x, (int, fmpz, arb)):
        return acb(x)
    z = complex(x)
    return acb(z.real, z.imag)


def _log_abs(c: acb) -> float:
    if c.is_zero():
        return -math.inf
    return float(abs(c).log())


@dataclass(frozen=True, eq=False)
class UnitPoly:
    """Degree-n polynomial a_0 + ... + a_n z^n stored as acb balls.

    ``coeffs`` is a plain complex array when every |log a_j| <= 700 and None
    otherwise; ``log_form`` is always available.
    """

    balls: tuple
    prec: int = 128
    self_inversive: bool = False

    def __post_init__(self):
        b = tuple(_as_acb(c) for c in self.balls)
        if len(b) < 2:
            raise ValueError("degree must be at least 1")
        if b[-1].is_zero():
            raise ValueError("leading coefficient is zero")
        object.__setattr__(self, "balls", b)
        object.__setattr__(self, "prec", int(self.prec))

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, prec: int = 128, self_inversive: bool = False):
        with workprec(prec):
            return cls(tuple(_as_acb(c) for c in coeffs), prec, self_inversive)

    @property
    def n(self) -> int:
        return len(self.balls) - 1

    @cached_property
    def log_form(self) -> tuple[np.ndarray, np.ndarray]:
        """(phase, log_mag) per coefficient; phase is 1 for a zero coefficient."""
        phase = np.ones(self.n + 1, dtype=complex)
        logm = np.full(self.n + 1, -np.inf)
        with workprec(self.prec):
            for j, c in enumerate(self.balls):
                r = abs(c)
                if not r > 0:  # exact zero or a ball straddling it
                    continue
                logm[j] = float(r.log())
                phase[j] = complex(c / r)
        phase.setflags(write=False)
        logm.setflags(write=False)
        return phase, logm

    @property
    def offset(self) -> float:
        """Shared log-scale offset M = max log|a_j|."""
        return float(np.max(self.log_form[1]))

    def scaled_coeffs(self) -> np.ndarray:
        """a_j * exp(-M), always representable."""
        phase, logm = self.log_form
        return phase * np.exp(logm - self.offset)

    @cached_property
    def coeffs(self) -> np.ndarray | None:
        logm = self.log_form[1]
        if np.any(np.abs(logm[np.isfinite(logm)]) > LOG_MAG_LIMIT):
            return None
        out = np.array([complex(c) for c in self.balls])
        out.setflags(write=False)
        return out

    def __call__(self, z) -> complex:
        with workprec(self.prec):
            return complex(acb_poly(list(self.balls))(_as_acb(z)))

    def trig(self, theta: float) -> acb:
        """exp(-i n theta / 2) P(exp(i theta)) as a ball."""
        with workprec(self.prec):
            th = arb(theta)
            s, c = th.sin_cos()
            hs, hc = (-th * self.n / 2).sin_cos()
            return acb_poly(list(self.balls))(acb(c, s)) * acb(hc, hs)

    def is_self_inversive(self, tol: float = 1e-12) -> bool:
        c = self.scaled_coeffs()
        return bool(np.max(np.abs(c - np.conj(c[::-1]))) <= tol)

    def self_inversive_phase(self) -> acb:
        """Unit omega with omega*P self-inversive (defined up to sign)."""
        with workprec(self.prec):
            r = self.balls[-1].conjugate() / self.balls[0]
            return (r / abs(r)).sqrt()

    def normalized(self) -> "UnitPoly":
        if self.self_inversive:
            return self
        w = self.self_inversive_phase()
        with workprec(self.prec):
            b = tuple(w * c for c in self.balls)
        return UnitPoly(b, self.prec, True)

    def __repr__(self):
        return f"UnitPoly(n={self.n}, prec={self.prec}, self_inversive={self.self_inversive})"


@lru_cache(maxsize=64)
def laguerre_int_coeffs(n: int, k: int) -> tuple:
    """Integers b_j with L_{n,k}(z) = (i/2)^k sum_j b_j z^j."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    out = []
    binom = 1
    for j in range(n + 1):
        sgn = -1 if (n - j) % 2 else 1
        out.append(fmpz(sgn * binom * (2 * j - n) ** k))
        binom = binom * (n - j) // (j + 1)
    return tuple(out)


def _check_nk(n, k):
    if not isinstance(n, (int, np.integer)) or not isinstance(k, (int, np.integer)):
        raise TypeError("n and k must be integers")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return int(n), int(k)


def laguerre(n: int, k: int) -> UnitPoly:
    """Circular Laguerre polynomial L_{n,k} = D_n^k (z-1)^n, exact coefficients."""
    n, k = _check_nk(n, k)
    b = laguerre_int_coeffs(n, k)
    bits = max(int(x).bit_length() for x in b) + 64
    prec = max(128, bits)
    unit = [acb(1), acb(0, 1), acb(-1), acb(0, -1)][k % 4]
    with workprec(prec):
        scale = unit * arb(2) ** (-k)  # exact: power of two
        balls = tuple(scale * x for x in b)
    return UnitPoly(balls, prec, self_inversive=(n % 2 == 0))


def apply_D(p: UnitPoly, k: int = 1) -> UnitPoly:
    """a_j -> (i (j - n/2))^k a_j."""
    if k < 0:
        raise ValueError("k must be >= 0")
    n = p.n
    with workprec(p.prec):
        balls = tuple(c * acb(0, arb(2 * j - n) / 2) ** k for j, c in enumerate(p.balls))
    return UnitPoly(balls, p.prec, p.self_inversive)


def ffm_conv(p: UnitPoly, q: UnitPoly) -> UnitPoly:
    """Finite free multiplicative convolution of two degree-n polynomials."""
    if p.n != q.n:
        raise ValueError(f"degree mismatch: {p.n} vs {q.n}")
    n = p.n
    prec = max(p.prec, q.prec)
    out = []
    binom = 1
    with workprec(prec):
        for j in range(n + 1):
            c = p.balls[j] * q.balls[j] / binom
            out.append(-c if (n - j) % 2 else c)
            binom = binom * (n - j) // (j + 1)
    # for odd n the product is self-inversive only up to the factor i
    si = p.self_inversive and q.self_inversive and n % 2 == 0
    return UnitPoly(tuple(out), prec, si)


def poly_from_angles(angles: EmpiricalAngles) -> UnitPoly:
    """Self-inversive polynomial whose trig form is prod sin((theta - theta_j)/2)."""
    n = angles.total
    if n > MAX_FROM_ANGLES:
        raise ValueError(
            f"degree {n} exceeds {MAX_FROM_ANGLES}; use the trigonometric form instead"
        )
    th = angles.expanded()
    prec = max(128, 4 * n + 128)
    with workprec(prec):
        ths = [_angle_arb(x) for x in th]
        poly = acb_poly.from_roots([_unit_arb(x) for x in ths])
        hs, hc = (-sum(ths, arb(0)) / 2).sin_cos()
        lead = acb(hc, hs) / acb(0, 2) ** n
        balls = tuple(lead * c for c in poly.coeffs())
    return UnitPoly(balls, prec, True)


# ---------------------------------------------------------------------------
# Trigonometric evaluation


class _TrigPair(NamedTuple):
    value_scaled: float
    log_offset: float


class TrigValue(_TrigPair):
    """(value_scaled, log_offset); the imaginary residue rides along as an attribute."""

    def __new__(cls, value_scaled, log_offset, imag_residue=0.0):
        self = super().__new__(cls, value_scaled, log_offset)
        self.imag_residue = float(imag_residue)
        return self


@dataclass(frozen=True, eq=False)
class TrigEval:
    """T_{n,k}(theta) = sum_j c_j exp(i (j - n/2) theta) in scaled form.

    ``log_c`` holds log|c_j| - M, so its maximum is 0; ``ints`` are the exact
    integers b_j with c_j = (i/2)^k b_j.
    """

    n: int
    k: int
    ints: tuple
    log_c: np.ndarray
    M: float

    @property
    def max_bits(self) -> int:
        return 2 * max(int(x).bit_length() for x in self.ints) + 1024


def trig_laguerre(n: int, k: int) -> TrigEval:
    n, k = _check_nk(n, k)
    b = laguerre_int_coeffs(n, k)
    logb = np.array([-np.inf if x == 0 else _log_int(int(x)) for x in b]) - k * math.log(2)
    M = float(np.max(logb))
    log_c = logb - M
    log_c.setflags(write=False)
    return TrigEval(n, k, b, log_c, M)


def _log_int(x: int) -> float:
    x = abs(x)
    sh = max(x.bit_length() - 60, 0)
    return math.log(x >> sh) + sh * math.log(2)


def _angle_arb(x: float) -> arb:
    """Angle as a ball; the float -pi stands for z = -1 itself."""
    x = float(x)
    return -arb.pi() if x == -math.pi else arb(x)


def _unit_arb(theta: arb) -> acb:
    s, c = theta.sin_cos()
    return acb(c, s)


def trig_eval(te: TrigEval, theta: float) -> TrigValue:
    """Real value of T_{n,k}(theta) / exp(M) (T/i for odd n).

    Evaluated with ball arithmetic until 60 correct bits or the precision cap;
    when the scaled value would underflow, log_offset absorbs the magnitude
    and value_scaled is +-1.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    n, k = te.n, te.k
    bits = BASE_BITS + 2 * n
    while True:
        with workprec(bits):
            th = arb(theta)
            g = acb_poly(list(te.ints))(_unit_arb(th)) * _unit_arb(-th * n / 2)
            # T = (i/2)^k g, reported as T / i^(n mod 2)
            rot = (k - (n % 2)) % 4
            g = [g, g * acb(0, 1), -g, g * acb(0, -1)][rot]
            val = g.real * (arb(2) ** (-k)) * arb(-te.M).exp()
            im = g.imag * (arb(2) ** (-k)) * arb(-te.M).exp()
            if val.is_zero() or val.rel_accuracy_bits() >= 60 or bits >= te.max_bits:
                break
        bits *= 2
    v = float(val.mid())
    if v != 0.0 and abs(v) < 1e-300:
        with workprec(bits):
            off = float(abs(val.mid()).log())
        return TrigValue(math.copysign(1.0, v), te.M + off, 0.0)
    return TrigValue(v, te.M, abs(float(im.mid())))


# ---------------------------------------------------------------------------
# Root extraction


class _CircleSign:
    """Certified sign of Re/Im[rot * exp(-i m theta/2) q(exp(i theta))]."""

    def __init__(self, coeffs, max_bits: int, rot: acb | None = None, imag: bool = False):
        self._coeffs = list(coeffs)
        self._m = len(self._coeffs) - 1
        self._rot = rot
        self._imag = imag
        self._bits = BASE_BITS
        self._max_bits = max(int(max_bits), BASE_BITS)
        self._polys: dict[int, acb_poly] = {}
        self.evaluations = 0

    def _poly(self, bits):
        p = self._polys.get(bits)
        if p is None:
            with workprec(bits):
                p = acb_poly(self._coeffs)
            self._polys[bits] = p
        return p

    def value(self, theta: float, bits: int) -> arb:
        with workprec(bits):
            th = arb(theta)
            v = self._poly(bits)(_unit_arb(th)) * _unit_arb(-th * self._m / 2)
            if self._rot is not None:
                v = v * self._rot
            return v.imag if self._imag else v.real

    def __call__(self, theta: float) -> int:
        self.evaluations += 1
        bits = self._bits
        while True:
            v = self.value(theta, bits)
            if v > 0 or v < 0:
                self._bits = bits
                return 1 if v > 0 else -1
            if bits >= self._max_bits:
                mid = float(v.mid())
                return (mid > 0) - (mid < 0)
            bits = min(2 * bits, self._max_bits)


def _bisect(sign, a: float, b: float, sa: int, tol: float) -> float:
    while b - a > tol:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        sm = sign(m)
        if sm == 0:
            return m
        if sm == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _scan(sign, lo: float, hi: float, npts: int, tol: float) -> list[float]:
    xs = np.linspace(lo, hi, npts + 1)
    sg = [sign(float(x)) for x in xs]
    roots = []
    for i in range(npts):
        s0, s1 = sg[i], sg[i + 1]
        if s0 == 0:
            roots.append(float(xs[i]))
        elif s1 != 0 and s0 != s1:
            roots.append(_bisect(sign, float(xs[i]), float(xs[i + 1]), s0, tol))
    return roots


def _search(sign, lo, hi, npts, expected, tol=BISECT_TOL):
    found = []
    for _ in range(MAX_REFINEMENTS + 1):
        found = _scan(sign, lo, hi, npts, tol)
        if len(found) >= expected:
            break
        npts *= 2
    if len(found) != expected:
        raise RootCountError(len(found), expected, f"after grid refinement to {npts} points")
    return found


def _deflate_int(q: fmpz_poly, root: int) -> tuple[fmpz_poly, int]:
    lin = fmpz_poly([-root, 1])
    m = 0
    while q.degree() > 0:
        qq, r = divmod(q, lin)
        if r != 0:
            break
        q, m = qq, m + 1
    return q, m


def _laguerre_roots(n: int, k: int, grid: int) -> EmpiricalAngles:
    q = fmpz_poly(list(laguerre_int_coeffs(n, k)))
    q, m_one = _deflate_int(q, 1)
    q, m_minus = _deflate_int(q, -1)
    if k < n and m_one < n - k:
        raise RootCountError(m_one, n - k, "multiplicity at z=1 below n-k")
    pairs = [(0.0, m_one), (-math.pi, m_minus)]
    m = q.degree()
    if m > 0:
        c = [int(x) for x in q.coeffs()]
        if c == c[::-1]:
            imag = False
        elif c == [-x for x in c[::-1]]:
            imag = True
        else:  # pragma: no cover - integer symmetry is structural
            raise ArithmeticError("deflated Laguerre factor lost its symmetry")
        bits = 2 * max(x.bit_length() for x in c) + 1024
        sign = _CircleSign(c, bits, imag=imag)
        # real coefficients: roots come in conjugate pairs, search (0, pi)
        half = _search(sign, 0.0, math.pi, max(grid // 2, 4), m // 2)
        for r in half:
            pairs += [(r, 1), (-r, 1)]
    return EmpiricalAngles.from_pairs(pairs)


def _synthetic_div(balls: list, w: acb) -> list:
    n = len(balls) - 1
    out = [None] * n
    acc = balls[n]
    out[n - 1] = acc
    for j in range(n - 1, 0, -1):
        acc = balls[j] + w * acc
        out[j - 1] = acc
    return out


def _generic_roots(p: UnitPoly, grid: int, known: EmpiricalAngles | None) -> EmpiricalAngles:
    balls = list(p.balls)
    pairs = []
    with workprec(p.prec):
        if known is not None:
            for ang, mult in known.pairs():
                w = _unit_arb(_angle_arb(ang))
                for _ in range(mult):
                    balls = _synthetic_div(balls, w)
                pairs.append((ang, mult))
        m = len(balls) - 1
        if m > 0:
            r = balls[-1].conjugate() / balls[0]
            rot = (r / abs(r)).sqrt()
    if m < 0:
        raise ValueError("known roots exceed the degree")
    if m > 0:
        sign = _CircleSign(balls, 2 * p.prec, rot=rot)
        for r in _search(sign, -math.pi, math.pi, grid, m):
            pairs.append((r, 1))
    return EmpiricalAngles.from_pairs(pairs)


def roots_on_circle(p, grid: int | None = None, known: EmpiricalAngles | None = None) -> EmpiricalAngles:
    """Root angles of a circle polynomial, with multiplicities.

    ``p`` is a UnitPoly or an (n, k) Laguerre index.  For Laguerre input the
    roots at z = +-1 are split off exactly over the integers.  ``known`` lists
    roots (with multiplicity) to divide out before the sign-change search.
    """
    if isinstance(p, tuple):
        n, k = _check_nk(*p)
        grid = GRID_FACTOR * n if grid is None else int(grid)
        if grid < 4 * n:
            raise ValueError(f"grid {grid} below 4n = {4 * n}")
        return _laguerre_roots(n, k, grid)
    if not isinstance(p, UnitPoly):
        raise TypeError("expected UnitPoly or (n, k)")
    grid = GRID_FACTOR * p.n if grid is None else int(grid)
    if grid < 4 * p.n:
        raise ValueError(f"grid {grid} below 4n = {4 * p.n}")
    return _generic_roots(p, grid, known)
