"""Truncated power series on the unit disk and the psi -> S -> psi pipeline.

Moments of nu (x) Pi_t are obtained by multiplying the S-transform of nu with
the closed-form S-transform of the free unitary Poisson law and inverting
back.  Everything is plain complex128; the heavy lifting is compositional
inversion by Newton iteration with order doubling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SeriesError",
    "TruncSeries",
    "compose",
    "conv_moments",
    "exp_series",
    "identity",
    "invert",
    "invert_lagrange",
    "pde_density",
    "pde_residual",
    "pde_terms",
    "psi_to_eta",
    "eta_to_psi",
    "poisson_S_series",
    "poisson_sigma_series",
    "psi_series",
    "psi_to_S",
    "S_to_psi",
]

INVERT_TOL = 1e-14


class SeriesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TruncSeries:
    """c_0 + c_1 z + ... + c_L z^L + O(z^{L+1})."""

    coeffs: np.ndarray
    kind: str = "psi"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size < 2:
            raise SeriesError("order must be at least 1")
        if self.kind not in ("psi", "s"):
            raise SeriesError(f"unknown series kind {self.kind!r}")
        if self.kind == "psi" and c[0] != 0:
            raise SeriesError("psi-kind series must have c_0 = 0")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, j):
        return self.coeffs[j]

    def truncate(self, L: int) -> "TruncSeries":
        return TruncSeries(self.coeffs[: L + 1], self.kind)

    def __call__(self, z):
        """Horner evaluation of the truncated polynomial."""
        return np.polyval(self.coeffs[::-1], z)

    def __add__(self, other):
        if isinstance(other, TruncSeries):
            L = min(self.order, other.order)
            c = self.coeffs[: L + 1] + other.coeffs[: L + 1]
        else:
            c = self.coeffs.copy()
            c[0] += other
        return _auto(c)

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(-self.coeffs, self.kind)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TruncSeries):
            L = min(self.order, other.order)
            c = _mul(self.coeffs[: L + 1], other.coeffs[: L + 1], L)
        else:
            c = self.coeffs * other
        return _auto(c)

    __rmul__ = __mul__

    def derivative(self) -> "TruncSeries":
        c = self.coeffs[1:] * np.arange(1, self.order + 1)
        if c.size < 2:
            c = np.append(c, 0)
        return _auto(c)

    def reciprocal(self) -> "TruncSeries":
        return TruncSeries(_recip(self.coeffs), "s")

    def shift_down(self) -> "TruncSeries":
        """f(z)/z for a series with c_0 = 0 (drops one order)."""
        if self.coeffs[0] != 0:
            raise SeriesError("series not divisible by z")
        return _auto(self.coeffs[1:])

    def __repr__(self):
        return f"TruncSeries(order={self.order}, kind={self.kind})"


def _auto(c) -> TruncSeries:
    c = np.asarray(c, dtype=complex)
    return TruncSeries(c, "psi" if c[0] == 0 else "s")


def _mul(a: np.ndarray, b: np.ndarray, L: int) -> np.ndarray:
    return np.convolve(a, b)[: L + 1]


def _recip(a: np.ndarray) -> np.ndarray:
    if a[0] == 0:
        raise SeriesError("reciprocal needs c_0 != 0")
    L = a.size - 1
    b = np.zeros(L + 1, dtype=complex)
    b[0] = 1 / a[0]
    for n in range(1, L + 1):
        b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1][:n]) / a[0]
    return b


def identity(L: int) -> TruncSeries:
    c = np.zeros(L + 1, dtype=complex)
    c[1] = 1
    return TruncSeries(c)


def psi_series(moments: Sequence[complex]) -> TruncSeries:
    """psi(z) = sum_{l>=1} m_l z^l from m_1..m_L."""
    m = np.asarray(moments, dtype=complex).ravel()
    return TruncSeries(np.concatenate([[0], m]))


def _compose_arrays(f: np.ndarray, g: np.ndarray, L: int) -> np.ndarray:
    deg = min(f.size - 1, L)
    out = np.zeros(L + 1, dtype=complex)
    out[0] = f[deg]
    g = g[: L + 1]
    for j in range(deg - 1, -1, -1):
        out = _mul(out, g, L)
        out[0] += f[j]
    return out


def compose(outer: TruncSeries, inner: TruncSeries) -> TruncSeries:
    """outer(inner(z)) truncated at the smaller order."""
    if inner.coeffs[0] != 0:
        raise SeriesError("inner series must have c_0 = 0")
    L = min(outer.order, inner.order)
    return _auto(_compose_arrays(outer.coeffs, inner.coeffs, L))


def invert(s: TruncSeries) -> TruncSeries:
    """Compositional inverse by Newton iteration with doubling order."""
    if s.coeffs[0] != 0:
        raise SeriesError("inversion needs c_0 = 0")
    c1 = s.coeffs[1]
    if abs(c1) <= INVERT_TOL:
        raise SeriesError(
            "first moment vanishes: the measure has no psi-inverse at 0 "
            "(its S-transform is undefined)"
        )
    L = s.order
    f = s.coeffs
    df = f[1:] * np.arange(1, L + 1)
    g = np.zeros(2, dtype=complex)
    g[1] = 1 / c1
    N = 1
    while True:
        N = min(2 * N, L)
        g = np.concatenate([g, np.zeros(N + 1 - g.size, dtype=complex)])
        for _ in range(2 if N == L else 1):
            fg = _compose_arrays(f[: N + 1], g, N)
            fg[1] -= 1
            dfg = _compose_arrays(df[:N], g, N)
            g = g - _mul(fg, _recip(dfg), N)
        if N == L:
            break
    g[0] = 0
    return TruncSeries(g)


def invert_lagrange(s: TruncSeries) -> TruncSeries:
    """Reference inverse from the Lagrange formula [z^n] g = [w^{n-1}] (w/f)^n / n."""
    if abs(s.coeffs[1]) <= INVERT_TOL:
        raise SeriesError("first coefficient vanishes")
    L = s.order
    h = _recip(s.coeffs[1:])  # w / f(w), order L-1
    g = np.zeros(L + 1, dtype=complex)
    p = np.ones(1, dtype=complex)
    for n in range(1, L + 1):
        p = _mul(p, h, L - 1) if p.size > 1 or n > 1 else h.copy()
        g[n] = p[n - 1] / n if n - 1 < p.size else 0
    return TruncSeries(g)


def exp_series(s: TruncSeries) -> TruncSeries:
    """exp(s) by the recurrence n e_n = sum_k k s_k e_{n-k}."""
    a = s.coeffs
    L = s.order
    ka = a * np.arange(L + 1)
    e = np.zeros(L + 1, dtype=complex)
    e[0] = np.exp(a[0])
    for n in range(1, L + 1):
        e[n] = np.dot(ka[1 : n + 1], e[n - 1 :: -1][:n]) / n
    return TruncSeries(e, "s")


def poisson_S_series(t: float, L: int) -> TruncSeries:
    """exp(t / (z + 1/2)) = exp(2t / (1 + 2z)), expanded at 0."""
    inner = 2 * t * (-2.0) ** np.arange(L + 1)
    return exp_series(TruncSeries(inner.astype(complex), "s"))


def poisson_sigma_series(t: float, L: int) -> TruncSeries:
    """exp(2t (1 - z) / (1 + z)) expanded at 0."""
    ell = np.arange(L + 1)
    inner = np.where(ell == 0, 2 * t, 4 * t * (-1.0) ** ell)
    return exp_series(TruncSeries(inner.astype(complex), "s"))


def psi_to_S(s: TruncSeries) -> TruncSeries:
    """S(z) = (1 + z)/z * psi^{-1}(z); order drops by one."""
    g = invert(s).shift_down()
    c = g.coeffs.copy()
    c[1:] += g.coeffs[:-1]
    return TruncSeries(c, "s")


def S_to_psi(S: TruncSeries) -> TruncSeries:
    """Inverse of psi_to_S: psi^{-1}(z) = z/(1+z) S(z)."""
    L = S.order + 1
    geo = (-1.0) ** np.arange(L)
    ginv = np.concatenate([[0], _mul(S.coeffs, geo, L - 1)])
    return invert(TruncSeries(ginv))


def _check_moments(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex).ravel()
    if m.size < 1:
        raise SeriesError("need at least one moment")
    if not np.all(np.isfinite(m)):
        raise SeriesError("moments must be finite")
    return m


def psi_to_eta(s: TruncSeries) -> TruncSeries:
    """eta = psi / (1 + psi)."""
    one = s.coeffs.copy()
    one[0] = 1
    return TruncSeries(_mul(s.coeffs, _recip(one), s.order))


def eta_to_psi(e: TruncSeries) -> TruncSeries:
    """psi = eta / (1 - eta)."""
    one = -e.coeffs
    one[0] = 1
    return TruncSeries(_mul(e.coeffs, _recip(one), e.order))


def conv_moments(
    m: Sequence[complex], t: float, L: int | None = None, route: str = "sigma"
) -> np.ndarray:
    """Moments m_1..m_L of nu (x) Pi_t from those of nu.

    route="sigma" multiplies eta^{-1}(z) = z Sigma(z) by exp(2t(1-z)/(1+z)),
    whose coefficients stay O(t l); route="S" multiplies psi^{-1} by
    exp(t/(z+1/2)), whose coefficients grow like 2^l and lose all accuracy
    past l ~ 60 for t < 1.  The uniform law (all moments zero) is absorbing
    and returned unchanged; any other input needs m_1 != 0.
    """
    m = _check_moments(m)
    if t < 0 or not math.isfinite(t):
        raise SeriesError("t must be finite and >= 0")
    L = m.size if L is None else int(L)
    if L > m.size or L < 1:
        raise SeriesError(f"order {L} outside 1..{m.size}")
    m = m[:L]
    if not np.any(m):
        return np.zeros(L, dtype=complex)
    if abs(m[0]) <= INVERT_TOL:
        raise SeriesError(
            "m_1 = 0: the measure is outside the class with an S-transform"
        )
    if t == 0:
        return m.copy()
    if route == "S":
        # the (1+z)/z factors cancel: psi_t^{-1} = psi_nu^{-1} * S_Pi
        ginv = invert(psi_series(m)) * poisson_S_series(t, L)
        return invert(ginv).coeffs[1:]
    if route != "sigma":
        raise SeriesError(f"unknown route {route!r}")
    einv = invert(psi_to_eta(psi_series(m))) * poisson_sigma_series(t, L)
    return eta_to_psi(invert(einv)).coeffs[1:]


def pde_terms(m: np.ndarray, x: float) -> tuple[float, float, float, float]:
    """(u, u_x, Hu, (Hu)_x) at x for u = (1/2pi) Re(1 + 2 sum m_l e^{-ilx}).

    H is the periodic conjugate function, multiplier -i sgn(l).
    """
    m = np.asarray(m, dtype=complex)
    ell = np.arange(1, m.size + 1)
    e = m * np.exp(-1j * ell * x)
    u = (1 + 2 * e.real.sum()) / (2 * math.pi)
    ux = 2 * (ell * e.imag).sum() / (2 * math.pi)
    # coefficient of e^{-ilx} is m_l (l < 0 in Fourier index): H multiplies by +i
    Hu = 2 * (1j * e).real.sum() / (2 * math.pi)
    Hux = 2 * (ell * (1j * e).imag).sum() / (2 * math.pi)
    return float(u), float(ux), float(Hu), float(Hux)


def pde_density(m: Sequence[complex], t: float, x: float, L: int) -> float:
    """u_t(x), the density of nu (x) Pi_t from L Fourier modes."""
    if L > 128 or L < 1:
        raise SeriesError("L must lie in 1..128")
    mt = conv_moments(m, t, L)
    return pde_terms(mt, x)[0]


def pde_residual(m: Sequence[complex], t: float, x: float, h_t: float = 1e-3, L: int = 80) -> float:
    """|du/dt + (1/pi) d/dx arctan(Hu/u)| with a central difference in t."""
    if not t > 1:
        raise SeriesError("the residual check needs t > 1")
    if not 0 < h_t < t:
        raise SeriesError("h_t must be positive and smaller than t")
    m = _check_moments(m)
    mt = conv_moments(m, t, L)
    u, ux, Hu, Hux = pde_terms(mt, x)
    if u <= 1e-6:
        raise SeriesError(f"u = {u:.3g} too small for a stable arctan")
    up = pde_terms(conv_moments(m, t + h_t, L), x)[0]
    um = pde_terms(conv_moments(m, t - h_t, L), x)[0]
    du_dt = (up - um) / (2 * h_t)
    flux_x = (u * Hux - Hu * ux) / (u * u + Hu * Hu)
    return abs(du_dt + flux_x / math.pi)
