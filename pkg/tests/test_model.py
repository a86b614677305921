import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mginf_busy.model import (
    DomainError,
    Exponential,
    ExtrapolationError,
    QueueParams,
    SpecialFamily,
    Tabulated,
    busy_kernel,
    equilibrium_cdf,
    equilibrium_pdf,
    service_cdf,
)

# 1 - (1 - e^-1) / (e^-1 (e - 1) + 1), evaluated with mpmath at 30 digits
SPECIAL_G_AT_1 = 0.612699836780282039483095584644
# 0.5 e^-2 exp(-0.5 (1 - e^-2)), mpmath
EXP_KERNEL_LAM05_T2 = 0.0439158692037671976749642192277


def uniform_02():
    t = np.linspace(0.0, 2.0, 201)
    return Tabulated(t, t / 2.0)


def special_betas(params):
    lo, hi = SpecialFamily.beta_range(params)
    return [lo, 0.3 * lo, 0.0, 0.5 * hi, hi]


MODELS = [
    (Exponential(), QueueParams(0.5, 1.0)),
    (SpecialFamily(0.0), QueueParams(1.0, 1.0)),
    (SpecialFamily(0.25), QueueParams(1.0, 1.0)),
    (uniform_02(), QueueParams(0.8, 1.0)),
]


def test_params_derive_rho():
    p = QueueParams(0.7, 1.3)
    assert p.rho == 0.7 * 1.3
    with pytest.raises(AttributeError):
        p.rho = 3.0


@pytest.mark.parametrize("lam, alpha", [(0.0, 1.0), (1.0, -1.0), (math.inf, 1.0)])
def test_params_reject_nonpositive(lam, alpha):
    with pytest.raises(DomainError):
        QueueParams(lam, alpha)


def test_exponential_service_cdf():
    assert service_cdf(Exponential(), QueueParams(1.0, 1.0), 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert service_cdf(Exponential(), QueueParams(1.0, 1.0), 0.0) == 0.0


def test_special_family_atom_and_value():
    p = QueueParams(1.0, 1.0)
    assert service_cdf(SpecialFamily(0.0), p, 0.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert service_cdf(SpecialFamily(0.0), p, 1.0) == pytest.approx(SPECIAL_G_AT_1, abs=1e-14)


def test_special_family_matches_direct_form():
    p = QueueParams(0.8, 1.5)
    lam, rho = p.lam, p.rho
    t = np.linspace(0, 5, 51)
    for beta in special_betas(p):
        a = lam + beta
        naive = 1 - (1 - math.exp(-rho)) * a / (lam * math.exp(-rho) * (np.exp(a * t) - 1) + lam)
        np.testing.assert_allclose(service_cdf(SpecialFamily(beta), p, t), naive, atol=1e-14)


def test_special_family_no_overflow():
    p = QueueParams(1.0, 1.0)
    g = service_cdf(SpecialFamily(0.5), p, np.array([0.0, 800.0, 1e6]))
    assert np.all(np.isfinite(g)) and g[-1] == 1.0


def test_special_family_beta_range_is_closed():
    p = QueueParams(1.0, 1.0)
    lo, hi = SpecialFamily.beta_range(p)
    for beta in (lo, hi):
        service_cdf(SpecialFamily(beta), p, 1.0)
    for beta in (lo - 1e-3, hi + 1e-3):
        with pytest.raises(DomainError):
            service_cdf(SpecialFamily(beta), p, 1.0)


@pytest.mark.parametrize("scale", [0, 1, 2, 3, 4])
def test_special_family_is_a_cdf_on_its_range(scale):
    p = QueueParams(1.3, 0.7)
    beta = special_betas(p)[scale]
    t = np.linspace(0, 60, 6001)
    g = service_cdf(SpecialFamily(beta), p, t)
    assert np.all(np.isfinite(g))
    assert np.all(np.diff(g) >= -1e-15)
    assert 0 <= g[0] and g[-1] == pytest.approx(1.0, abs=1e-12)


def test_special_family_mean_is_alpha():
    p = QueueParams(0.6, 2.0)
    for beta in special_betas(p)[1:]:
        mean, _ = integrate.quad(lambda x: 1 - service_cdf(SpecialFamily(beta), p, x), 0, np.inf)
        assert mean == pytest.approx(p.alpha, rel=1e-8)


def test_negative_time_rejected():
    p = QueueParams(1.0, 1.0)
    for fn in (service_cdf, equilibrium_cdf, equilibrium_pdf, busy_kernel):
        with pytest.raises(DomainError):
            fn(Exponential(), p, -0.1)


def test_equilibrium_exponential():
    p = QueueParams(1.0, 1.0)
    assert equilibrium_cdf(Exponential(), p, 0.0) == 0.0
    assert equilibrium_pdf(Exponential(), p, 0.0) == 1.0
    p2 = QueueParams(1.0, 2.0)
    assert equilibrium_cdf(Exponential(), p2, 2.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)


def test_equilibrium_tabulated_uniform():
    model, p = uniform_02(), QueueParams(1.0, 1.0)
    assert equilibrium_cdf(model, p, 1.0) == pytest.approx(0.75, abs=1e-14)
    quad, _ = integrate.quad(lambda x: 1 - model.cdf(x), 0, 1)
    assert equilibrium_cdf(model, p, 1.0) == pytest.approx(quad, abs=1e-12)
    assert equilibrium_cdf(model, p, 5.0) == pytest.approx(1.0)


@pytest.mark.parametrize("model, params", MODELS)
def test_equilibrium_cdf_is_integral_of_pdf(model, params):
    for t in (0.3, 1.0, 2.5):
        quad, _ = integrate.quad(lambda x: equilibrium_pdf(model, params, x), 0, t, points=[0.0])
        assert equilibrium_cdf(model, params, t) == pytest.approx(quad, abs=1e-10)


def test_kernel_at_origin():
    assert busy_kernel(Exponential(), QueueParams(1.0, 1.0), 0.0) == 1.0
    p = QueueParams(1.0, 1.0)
    g0 = service_cdf(SpecialFamily(0.0), p, 0.0)
    assert busy_kernel(SpecialFamily(0.0), p, 0.0) == pytest.approx(p.lam * (1 - g0), abs=1e-15)


def test_kernel_exponential_against_quadrature():
    model, p = Exponential(), QueueParams(0.5, 1.0)
    area, _ = integrate.quad(lambda x: 1 - service_cdf(model, p, x), 0, 2.0)
    oracle = p.lam * (1 - service_cdf(model, p, 2.0)) * math.exp(-p.lam * area)
    assert busy_kernel(model, p, 2.0) == pytest.approx(oracle, abs=1e-14)
    assert busy_kernel(model, p, 2.0) == pytest.approx(EXP_KERNEL_LAM05_T2, abs=1e-15)


@pytest.mark.parametrize("model, params", MODELS)
def test_kernel_forms_agree(model, params):
    # direct form with the exponent by adaptive quadrature, against rho f e^{-rho F}
    for t in np.linspace(0, 6, 25):
        area, _ = integrate.quad(lambda x: 1 - service_cdf(model, params, x), 0, t,
                                 epsabs=1e-13, epsrel=1e-13, limit=200)
        direct = params.lam * (1 - service_cdf(model, params, t)) * math.exp(-params.lam * area)
        excess = params.rho * equilibrium_pdf(model, params, t) * math.exp(
            -params.rho * equilibrium_cdf(model, params, t))
        assert direct == pytest.approx(excess, abs=1e-10)
        assert busy_kernel(model, params, t) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("model, params", MODELS)
def test_kernel_mass(model, params):
    mass, _ = integrate.quad(lambda x: busy_kernel(model, params, x), 0, np.inf, limit=200)
    assert mass == pytest.approx(-math.expm1(-params.rho), abs=1e-8)
    c = busy_kernel(model, params, np.linspace(0, 30, 3001))
    assert np.all(c >= 0) and np.all(c <= params.lam)


def test_kernel_finite_at_beta_endpoints():
    p = QueueParams(1.0, 0.4)
    lo, hi = SpecialFamily.beta_range(p)
    t = np.linspace(0, 1000, 10001)
    for beta in (lo, hi):
        assert np.all(np.isfinite(busy_kernel(SpecialFamily(beta), p, t)))
    assert np.all(busy_kernel(SpecialFamily(lo), p, t) == 0.0)


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(0.05, 5.0),
    rho=st.floats(0.05, 3.0),
    frac=st.floats(0.0, 1.0),
)
def test_special_quantile_round_trip(lam, rho, frac):
    p = QueueParams.from_rho(lam, rho)
    lo, hi = SpecialFamily.beta_range(p)
    model = SpecialFamily(lo + frac * (hi - lo))
    u = np.linspace(0.0, 0.999, 200)
    x = model.quantile(p, u)
    g = service_cdf(model, p, x)
    atom = model.atom(p)
    above = u > atom
    np.testing.assert_allclose(g[above], u[above], atol=1e-10)
    assert np.all(x[~above] == 0.0)


def test_tabulated_validation():
    t = np.array([0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        Tabulated(t, np.array([0.0, 0.6, 0.5]))
    with pytest.raises(ValueError, match="defective"):
        Tabulated(t, np.array([0.0, 0.5, 0.9]))
    with pytest.raises(ValueError):
        Tabulated(np.array([0.0, 2.0, 1.0]), np.array([0.0, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Tabulated(np.array([0.5, 1.0, 2.0]), np.array([0.0, 0.5, 1.0]))


def test_tabulated_extrapolation():
    full = uniform_02()
    assert full.cdf(10.0) == 1.0
    near = Tabulated(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 1.0 - 5e-7]))
    with pytest.raises(ExtrapolationError):
        near.cdf(3.0)


def test_tabulated_alpha_must_match_table_mean():
    with pytest.raises(DomainError):
        service_cdf(uniform_02(), QueueParams(1.0, 1.5), 1.0)


def test_tabulated_csv_round_trip(tmp_path):
    model = uniform_02()
    path = tmp_path / "g.csv"
    model.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,G"
    back = Tabulated.from_csv(path)
    np.testing.assert_allclose(back.G, model.G)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,0\n1,1\n")
    with pytest.raises(ValueError, match="header"):
        Tabulated.from_csv(bad)


def test_tabulated_quantile_inverts_with_atom():
    model = Tabulated(np.array([0.0, 1.0, 2.0, 3.0]), np.array([0.2, 0.2, 0.6, 1.0]))
    u = np.array([0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0])
    np.testing.assert_allclose(model.quantile(None, u), [0, 0, 0, 1.5, 2.0, 2.5, 3.0])
