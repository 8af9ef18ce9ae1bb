import math

import numpy as np
import pytest

from deposition.bricklayer import GibbsParams, RateFunction, sample_sites
from deposition.errors import OutOfRange
from deposition.hydroflux import (HydroFlux, MacroState, ThermoTable, flux_jacobian_eigs,
                                  fug_from_macro, hydro_table, low_density_c, low_density_kappa,
                                  macro_flux, macro_from_fug, rescaled_flux_limit)

TABLE = ThermoTable()


@pytest.fixture
def params(rng):
    return rng.uniform(0.05, 3.0, 100), np.exp(rng.uniform(-1.0, 1.0, 100))


def test_symmetry_suite(params):
    lam, th = params
    assert TABLE.symmetry_defect(lam, th) < 1e-10
    rho, u = macro_from_fug(lam, th, TABLE)
    lam_m, th_m = fug_from_macro((rho, -u), TABLE)
    np.testing.assert_allclose(lam_m, lam, rtol=1e-10)
    np.testing.assert_allclose(th_m, 1 / th, rtol=1e-10)


def test_round_trip(params):
    lam, th = params
    ms = macro_from_fug(lam, th, TABLE)
    lam2, th2 = fug_from_macro(ms, TABLE)
    np.testing.assert_allclose(lam2, lam, rtol=1e-10)
    np.testing.assert_allclose(th2, th, rtol=1e-10)
    back = macro_from_fug(lam2, th2, TABLE)
    np.testing.assert_allclose(back.rho, ms.rho, rtol=1e-10)
    np.testing.assert_allclose(back.u, ms.u, rtol=1e-10, atol=1e-12)


def test_scalar_round_trip_both_parities():
    for parity in (0, 1):
        table = ThermoTable(parity)
        ms = macro_from_fug(0.8, 1.2, table)
        assert fug_from_macro(ms, table) == pytest.approx((0.8, 1.2), rel=1e-10)


def test_unit_tilt_and_zero_slope():
    assert abs(macro_from_fug(1.3, 1.0, TABLE).u) < 1e-15
    lam, th = fug_from_macro(MacroState(1.3, 0.0), TABLE)
    assert th == pytest.approx(1.0, abs=1e-12)
    assert macro_flux(MacroState(1.3, 0.0), TABLE)[0] == pytest.approx(0.0, abs=1e-12)
    assert macro_from_fug(1e-9, 1.2, TABLE).rho < 1e-8


def test_flux_example_and_mirror():
    ms = macro_from_fug(0.8, 1.2, TABLE)
    j1, j2 = macro_flux(ms, TABLE)
    assert j1 == pytest.approx(0.8 * (1.2 - 1 / 1.2), rel=1e-9)
    assert j2 == pytest.approx(0.8 * (1.2 + 1 / 1.2), rel=1e-9)
    assert (round(j1, 5), round(j2, 5)) == (0.29333, 1.62667)
    m1, m2 = macro_flux(ms.mirror(), TABLE)
    assert m1 == pytest.approx(-j1, rel=1e-9) and m2 == pytest.approx(j2, rel=1e-9)


def test_jacobian_matches_fd_and_is_positive_definite(params):
    lam, th = params
    J = TABLE.jacobian(lam, th)
    h = 1e-6
    for k, (dl, dt) in enumerate(((h * lam, 0 * th), (0 * lam, h * th))):
        up = macro_from_fug(lam + dl, th + dt, TABLE)
        dn = macro_from_fug(lam - dl, th - dt, TABLE)
        step = 2 * (dl + dt)
        np.testing.assert_allclose((up.rho - dn.rho) / step, J[:, 0, k], rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose((up.u - dn.u) / step, J[:, 1, k], rtol=1e-6, atol=1e-8)
    cov = TABLE.moments(lam, th).covariance
    assert np.all(np.linalg.eigvalsh(cov)[:, 0] > 0)


def test_moments_and_covariance_against_samples(rng):
    n, z = sample_sites(GibbsParams(0.8, 1.2), 200_000, rng)
    ms = macro_from_fug(0.8, 1.2, TABLE)
    for x, target in ((n, ms.rho), (z, ms.u)):
        assert abs(x.mean() - target) < 3 * x.std(ddof=1) / math.sqrt(x.size)
    cov = TABLE.moments(0.8, 1.2).covariance
    # standard error of each sample covariance entry from its per-sample products
    dn, dz = n - n.mean(), z - z.mean()
    for a, b, (i, j) in ((dn, dn, (0, 0)), (dn, dz, (0, 1)), (dz, dz, (1, 1))):
        prod = a * b
        assert abs(prod.mean() - cov[i, j]) < 3 * prod.std(ddof=1) / math.sqrt(prod.size)


def test_flux_consistency_with_microscopics(rng):
    rf = RateFunction(1.0)
    n, z = sample_sites(GibbsParams(0.8, 1.2), 200_000, rng)
    j1, j2 = macro_flux(macro_from_fug(0.8, 1.2, TABLE), TABLE)
    for x, target in ((n * (rf.r(z) - rf.r(-z)), j1), (n * (rf.r(z) + rf.r(-z)), j2)):
        assert abs(x.mean() - target) < 3 * x.std(ddof=1) / math.sqrt(x.size)


def test_speeds_match_numerical_jacobian():
    lam, th = 0.8, 1.2
    ms = macro_from_fug(lam, th, TABLE)
    h = 1e-6
    cols = []
    for d in ((h, 0.0), (0.0, h)):
        up = macro_flux((ms.rho + d[0], ms.u + d[1]), TABLE)
        dn = macro_flux((ms.rho - d[0], ms.u - d[1]), TABLE)
        cols.append((np.array(up) - np.array(dn)) / (2 * h))
    ev = np.sort(np.linalg.eigvals(np.column_stack(cols)).real)
    assert flux_jacobian_eigs(lam, th, TABLE) == pytest.approx(tuple(ev), rel=1e-6)


def test_low_density_c_series():
    ref = math.fsum(z * (z - 1) * math.exp(-z * z / 2) for z in range(-40, 41, 2))
    assert low_density_c(1.0, 0) == pytest.approx(1 / ref, rel=1e-14)
    assert low_density_c(1.0, 0) == pytest.approx(0.915, abs=5e-4)
    ref1 = math.fsum(z * (z - 1) * math.exp(-z * z / 2) for z in range(-41, 42, 2))
    assert low_density_c(1.0, 1) == pytest.approx(1 / ref1, rel=1e-14)
    assert low_density_c(50.0, 0) > 1e20
    assert low_density_c(2000.0, 0) == math.inf


@pytest.mark.parametrize("parity", [0, 1])
def test_low_density_slopes(parity):
    table = ThermoTable(parity)
    rho = 1e-6
    us = np.array([1e-4, 2e-4, 4e-4])
    lam, th = fug_from_macro((np.full(3, rho), us), table)
    slope = np.polyfit(us, th - 1.0, 1)[0]
    assert slope == pytest.approx(low_density_c(1.0, parity, normalized=True), rel=1e-3)
    rhos = np.array([1e-7, 2e-7, 4e-7])
    lam, _ = fug_from_macro((rhos, np.zeros(3)), table)
    assert np.polyfit(rhos, lam, 1)[0] == pytest.approx(low_density_kappa(1.0, parity), rel=1e-4)


def test_rescaled_deviations_decrease():
    rng = np.random.default_rng(3)
    states = list(zip(rng.uniform(0.5, 2.0, 20), rng.uniform(-1.0, 1.0, 20)))
    d = [rescaled_flux_limit(states, a, TABLE).total for a in (1.0, 0.1, 0.01)]
    assert d[0] > d[1] > d[2]
    with pytest.raises(ValueError):
        rescaled_flux_limit(states, 2.0, TABLE)


def test_hydro_table_rows():
    rows = hydro_table([0.5, 1.0], [0.8, 1.0, 1.25], TABLE)
    assert len(rows) == 6
    for r in rows:
        assert r["J_rho"] == pytest.approx(r["lambda"] * (r["theta"] - 1 / r["theta"]))
        if r["theta"] == 1.0:
            assert r["J_rho"] == 0.0 and abs(r["u"]) < 1e-15


def test_interpolated_flux_model():
    model = HydroFlux.regular((0.2, 2.0), (-1.0, 1.0), (61, 61), TABLE)
    rho = np.array([0.5, 1.0, 1.7])
    u = np.array([-0.4, 0.1, 0.8])
    j1, j2 = model.flux(rho, u)
    e1, e2 = macro_flux((rho, u), TABLE)
    np.testing.assert_allclose(j1, e1, atol=2e-3)
    np.testing.assert_allclose(j2, e2, atol=2e-3)
    slow, fast = model.speeds(rho, u)
    assert np.all(slow < fast)
    with pytest.raises(OutOfRange):
        model.flux(np.array([3.0]), np.array([0.0]))


def test_flux_model_from_rows():
    rows = hydro_table(np.linspace(0.3, 2.0, 25), np.exp(np.linspace(-0.6, 0.6, 25)), TABLE)
    model = HydroFlux.from_rows(rows, TABLE)
    ms = macro_from_fug(1.0, 1.1, TABLE)
    j1, j2 = model.flux(np.array([ms.rho]), np.array([ms.u]))
    e1, e2 = macro_flux(ms, TABLE)
    assert j1[0] == pytest.approx(e1, abs=5e-3) and j2[0] == pytest.approx(e2, abs=5e-3)
