import math

import numpy as np
import pytest

from circleflow.polycore import empirical_moments, ffm_conv, laguerre, roots_on_circle
from circleflow.polycore import EmpiricalAngles, UnitPoly
from circleflow._prec import workprec
from flint import acb, acb_poly, arb
from circleflow.series_engine import (
    SeriesError,
    S_to_psi,
    TruncSeries,
    compose,
    conv_moments,
    exp_series,
    identity,
    invert,
    invert_lagrange,
    pde_density,
    pde_residual,
    pde_terms,
    poisson_S_series,
    poisson_sigma_series,
    psi_series,
    psi_to_S,
)
from circleflow.unitary_poisson import density, moment


def geometric(L, a=1.0):
    return psi_series([a**l for l in range(1, L + 1)])


def test_truncseries_kinds():
    with pytest.raises(SeriesError):
        TruncSeries([1.0, 2.0], "psi")
    with pytest.raises(SeriesError):
        TruncSeries([0.0])
    with pytest.raises(SeriesError):
        TruncSeries([0.0, 1.0], "xyz")
    s = TruncSeries([2.0, 1.0, 3.0], "s")
    assert s.order == 2
    assert (s * s.reciprocal()).coeffs == pytest.approx([1, 0, 0])
    assert (s + 1).coeffs[0] == 3 and (s + 1).coeffs[1] == 1
    assert s(0.5) == pytest.approx(2 + 0.5 + 0.75)
    assert s.derivative().coeffs == pytest.approx([1, 6])
    with pytest.raises(SeriesError):
        s.shift_down()


def test_invert_identity_and_mobius():
    L = 12
    np.testing.assert_allclose(invert(identity(L)).coeffs, identity(L).coeffs)
    g = invert(geometric(L))
    np.testing.assert_allclose(g.coeffs[1:], [(-1) ** (j + 1) for j in range(1, L + 1)], atol=1e-13)


def test_invert_rejects_degenerate():
    with pytest.raises(SeriesError, match="first moment"):
        invert(TruncSeries([0, 0, 1.0]))
    with pytest.raises(SeriesError):
        invert(TruncSeries([1.0, 1.0], "s"))


def test_invert_matches_lagrange_oracle():
    rng = np.random.default_rng(2)
    c = np.concatenate([[0, 1.3 - 0.2j], rng.normal(size=14) + 1j * rng.normal(size=14)])
    s = TruncSeries(c)
    np.testing.assert_allclose(invert(s).coeffs, invert_lagrange(s).coeffs, rtol=1e-10, atol=1e-10)


def test_invert_composition_residual():
    rng = np.random.default_rng(3)
    L = 21
    c = np.concatenate([[0, 0.8], 0.5 ** np.arange(2, L + 1) * rng.normal(size=L - 1)])
    s = TruncSeries(c)
    g = invert(s)
    res = compose(s, g).coeffs - identity(L).coeffs
    assert np.max(np.abs(res)) <= 1e-10 * max(1.0, np.max(np.abs(g.coeffs)))


def test_invert_poisson_psi_closed_form():
    # psi^{-1}(w) = w/(1+w) exp(t/(w+1/2))
    t, L = 0.7, 12
    m = [moment(t, l) for l in range(1, L + 1)]
    got = invert(psi_series(m)).coeffs
    geo = np.concatenate([[0], (-1.0) ** np.arange(L)])
    want = np.convolve(geo, poisson_S_series(t, L).coeffs)[: L + 1]
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


def test_compose_units():
    rng = np.random.default_rng(4)
    s = TruncSeries(np.concatenate([[0], rng.normal(size=8)]))
    np.testing.assert_allclose(compose(s, identity(8)).coeffs, s.coeffs)
    np.testing.assert_allclose(compose(identity(8), s).coeffs, s.coeffs)
    with pytest.raises(SeriesError):
        compose(s, TruncSeries([1.0, 1.0], "s"))


def test_compose_brute_force():
    f = TruncSeries([0.0, 1.0, 2.0, -1.0])
    g = TruncSeries([0.0, 0.5, 1.0, 0.0])
    # f(g) = g + 2 g^2 - g^3 truncated at z^3
    g1 = np.polynomial.Polynomial([0, 0.5, 1.0])
    want = (g1 + 2 * g1**2 - g1**3).coef[:4]
    np.testing.assert_allclose(compose(f, g).coeffs, want)


def test_exp_series():
    s = exp_series(TruncSeries([0.0, 1.0, 0, 0, 0, 0], "psi"))
    np.testing.assert_allclose(s.coeffs, [1 / math.factorial(j) for j in range(6)], rtol=1e-15)


def test_poisson_series_closed_forms():
    t = 0.4
    S = poisson_S_series(t, 40)
    Sig = poisson_sigma_series(t, 40)
    assert S.coeffs[0] == pytest.approx(math.exp(2 * t))
    assert Sig.coeffs[0] == pytest.approx(math.exp(2 * t))
    for z in (0.05, -0.1 + 0.05j):
        assert S(z) == pytest.approx(np.exp(t / (z + 0.5)), rel=1e-12)
        assert Sig(z) == pytest.approx(np.exp(2 * t * (1 - z) / (1 + z)), rel=1e-12)


def test_psi_to_S_examples():
    L = 10
    np.testing.assert_allclose(psi_to_S(psi_series(np.ones(L))).coeffs, np.r_[1, np.zeros(L - 1)], atol=1e-13)
    a = np.exp(0.9j)
    S = psi_to_S(psi_series([a**l for l in range(1, L + 1)]))
    np.testing.assert_allclose(S.coeffs, np.r_[1 / a, np.zeros(L - 1)], atol=1e-13)
    t = 0.5
    S = psi_to_S(psi_series([moment(t, l) for l in range(1, L + 1)]))
    np.testing.assert_allclose(S.coeffs, poisson_S_series(t, L - 1).coeffs, rtol=1e-10)
    back = S_to_psi(S)
    np.testing.assert_allclose(back.coeffs[1:], [moment(t, l) for l in range(1, L + 1)], rtol=1e-10)


# ---------------------------------------------------------------- conv_moments

def test_conv_moments_printed_coefficients():
    rng = np.random.default_rng(6)
    for _ in range(5):
        m1, m2, m3 = rng.normal(size=3) + 1j * rng.normal(size=3)
        t = rng.uniform(0.1, 2)
        got = conv_moments([m1, m2, m3], t)
        want = [
            math.exp(-2 * t) * m1,
            math.exp(-4 * t) * (4 * t * m1**2 + m2),
            math.exp(-6 * t) * (-8 * t * m1**3 + 24 * t**2 * m1**3 + 12 * t * m1 * m2 + m3),
        ]
        np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-13)


def test_conv_moments_delta_one_and_rotation():
    t, L = 0.9, 12
    exact = np.array([moment(t, l) for l in range(1, L + 1)])
    np.testing.assert_allclose(conv_moments(np.ones(L), t), exact, rtol=1e-12)
    a = 1.3
    rot = np.exp(1j * a * np.arange(1, L + 1))
    np.testing.assert_allclose(conv_moments(rot, t), rot * exact, rtol=1e-12, atol=1e-15)


def test_conv_moments_routes_agree_small_order():
    m = np.array([0.8, 0.5 + 0.1j, 0.3, 0.2j, 0.1])
    np.testing.assert_allclose(conv_moments(m, 1.2, route="S"), conv_moments(m, 1.2), rtol=1e-11)
    with pytest.raises(SeriesError):
        conv_moments(m, 1.2, route="bogus")


def test_conv_moments_errors():
    with pytest.raises(SeriesError, match="m_1"):
        conv_moments([0.0, 1.0, 0.0, 1.0], 0.5)  # (delta_1 + delta_-1)/2
    with pytest.raises(SeriesError):
        conv_moments([1.0], -1.0)
    with pytest.raises(SeriesError):
        conv_moments([1.0, 1.0], 1.0, L=3)
    np.testing.assert_array_equal(conv_moments([0.5, 0.25], 0.0), [0.5, 0.25])
    np.testing.assert_array_equal(conv_moments(np.zeros(4), 1.0), np.zeros(4))


def test_conv_moments_large_L_stable():
    for t in (0.3, 1.0, 2.0):
        got = conv_moments(np.ones(160), t).real
        exact = np.array([moment(t, l) for l in range(1, 161)])
        assert np.max(np.abs(got - exact)) <= 1e-6


def test_finite_n_agreement_monotone():
    # mu[p (x)_n L_{n,k}] against nu (x) Pi_{k/n}; p has two atoms of mass 1/2
    errs = []
    for n in (50, 100, 200):
        h, k = n // 2, n // 4
        ang = EmpiricalAngles([-math.pi, 0.5], [h, h])
        q = ffm_conv(_two_atom_poly(n), laguerre(n, k))
        # an atom of multiplicity h keeps multiplicity h - k
        emp = empirical_moments(roots_on_circle(q.normalized(), known=EmpiricalAngles([-math.pi, 0.5], [h - k, h - k])), 4)
        pred = conv_moments(empirical_moments(ang, 4), k / n)
        errs.append(np.max(np.abs(emp - pred)))
    assert errs[0] > errs[1] > errs[2]


def _two_atom_poly(n):
    h = n // 2
    prec = 4 * n + 128
    with workprec(prec):
        a = acb(arb(0.5).cos(), arb(0.5).sin())
        poly = (acb_poly([1, 1]) ** h) * (acb_poly([-a, 1]) ** h)
        return UnitPoly(tuple(poly.coeffs()), prec).normalized()


# ---------------------------------------------------------------- PDE

def test_pde_terms_uniform():
    u, ux, Hu, Hux = pde_terms(np.zeros(5), 0.7)
    assert u == pytest.approx(1 / (2 * math.pi))
    assert ux == Hu == Hux == 0.0


def test_pde_density_matches_density():
    for x in (0.5, 1.0, 2.8):
        assert pde_density(np.ones(60), 2.0, x, 60) == pytest.approx(density(2.0, x), abs=1e-5)
    with pytest.raises(SeriesError):
        pde_density(np.ones(200), 2.0, 0.0, 129)


def test_pde_density_uniform_limit():
    assert pde_density(np.ones(20), 25.0, 1.0, 20) == pytest.approx(1 / (2 * math.pi), abs=1e-15)


def test_pde_first_coefficient_decay():
    m = np.array([0.6 + 0.2j, 0.3, 0.1])
    for t in (0.5, 1.5):
        assert conv_moments(m, t)[0] == pytest.approx(math.exp(-2 * t) * m[0], rel=1e-14)


def test_pde_residual_values():
    assert pde_residual(np.zeros(10), 2.0, 1.0, 1e-3, 10) == 0.0
    r = pde_residual(np.ones(80), 2.0, 1.0, 1e-3, 80)
    assert r <= 1e-4
    with pytest.raises(SeriesError):
        pde_residual(np.ones(10), 0.5, 1.0)
    with pytest.raises(SeriesError):
        pde_residual(np.ones(10), 2.0, 1.0, h_t=3.0)
