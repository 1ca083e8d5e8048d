import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatdens import laws
from heatdens.density import DensityGrid, density_grid
from heatdens.diagnostics import (ResampledGridWarning, classify, convergence_report, density_moments,
                                  exact_bb_moments, expected_exp, hypothesis_report, l1_distance, l2_exp_sum,
                                  lipschitz_estimate, tail_sum, tn_phi1_lower_bound)
from heatdens.models import uniform_diffusion
from heatdens.series import EvalPoint

PI2 = np.pi ** 2
U = np.linspace(-3, 3, 121)


def _grid(f):
    return DensityGrid(U, f)


densities = st.lists(st.floats(0, 5), min_size=U.size, max_size=U.size).map(np.array)


@settings(max_examples=40, deadline=None)
@given(densities, densities, densities)
def test_l1_is_a_pseudometric(a, b, c):
    ga, gb, gc = _grid(a), _grid(b), _grid(c)
    assert l1_distance(ga, ga) == 0.0
    assert l1_distance(ga, gb) == l1_distance(gb, ga)
    assert l1_distance(ga, gc) <= l1_distance(ga, gb) + l1_distance(gb, gc) + 1e-12


def test_l1_resamples_with_warning():
    g1 = DensityGrid(U, np.exp(-U ** 2))
    g2 = DensityGrid(U[::2], np.exp(-U[::2] ** 2))
    with pytest.warns(ResampledGridWarning):
        d = l1_distance(g1, g2)
    assert d < 1e-3


def test_density_moments_of_normal():
    u = np.linspace(-20, 20, 8001)
    mass, mean, var = density_moments(DensityGrid(u, 2 * np.exp(-0.5 * (u - 1) ** 2 / 4) / np.sqrt(8 * np.pi)))
    assert mass == pytest.approx(2.0, rel=1e-9)
    assert mean == pytest.approx(1.0, rel=1e-9) and var == pytest.approx(4.0, rel=1e-6)


def test_expected_exp_closed_forms():
    d = uniform_diffusion(1.0, 2.0)
    assert expected_exp(d, 3.0) == pytest.approx((np.exp(-3) - np.exp(-6)) / 3, rel=1e-14)
    assert expected_exp(uniform_diffusion(1.5, 1.5), 2.0) == pytest.approx(np.exp(-3.0))
    assert expected_exp(d, 0.0) == 1.0


def test_exact_bb_moments_value():
    point = EvalPoint(0.5, 0.1)
    n = np.array([1.0, 3.0])
    c = 2 * n * n * PI2 * 0.1
    ref = np.sum(2 / (n * n * PI2) * (np.exp(-c) - np.exp(-2 * c)) / c)
    mean, var = exact_bb_moments(point, 3, uniform_diffusion(1.0, 2.0))
    assert mean == 0.0 and type(var) is float
    assert var == pytest.approx(ref, rel=1e-13)


def test_exact_bb_variance_decreases_in_time():
    d = uniform_diffusion(1.0, 2.0)
    v = [exact_bb_moments(EvalPoint(0.5, t), 6, d)[1] for t in np.linspace(0.05, 1, 20)]
    assert np.all(np.diff(v) < 0)


def test_lipschitz_constants():
    # sup |phi'| = 1/sqrt(2 pi e); quartic maximum at z^4 = 3/5
    assert lipschitz_estimate(laws.normal()) == pytest.approx(1 / np.sqrt(2 * np.pi * np.e), rel=1e-5)
    z = 0.6 ** 0.25
    ref = np.sqrt(2) / np.pi * 4 * z ** 3 / 1.6 ** 2
    assert lipschitz_estimate(laws.quartic()) == pytest.approx(ref, rel=1e-5)
    assert lipschitz_estimate(laws.uniform_unit_variance()) is None


def test_tail_and_l2_sums_match_direct_series():
    d = uniform_diffusion(1.0, 2.0)
    n = np.arange(2, 60, dtype=float)
    c = (n * n - 2) * PI2 * 0.1
    total, rem = tail_sum(d, 0.1)
    assert total == pytest.approx(np.sum((np.exp(-c) - np.exp(-2 * c)) / c), rel=1e-13)
    assert 0.0 <= rem < 1e-300
    m = np.arange(1, 60, dtype=float)
    c2 = 2 * m * m * PI2 * 0.1
    assert l2_exp_sum(d, 0.1) == pytest.approx(np.sum(np.sqrt((np.exp(-c2) - np.exp(-2 * c2)) / c2)), rel=1e-13)


def test_tn_phi1_lower_bound_for_bridge(bb_model):
    # phi_1 = sqrt(2) sin(pi y) has sine coefficient sqrt(2)/2 (coefficients int_0^1 f sin)
    val = tn_phi1_lower_bound(bb_model.process, bb_model.diffusion, EvalPoint(0.5, 0.1), 3)
    assert val == pytest.approx(np.sqrt(2) / 2 * np.exp(-0.2 * PI2), rel=1e-12)


FIXTURES = {
    "bb_model": {"teor1": (True, []), "teor2": (True, []), "teor3": (True, [])},
    "bm_model": {"teor1": (True, []), "teor2": (False, ["Fourier coefficients are not independent"]),
                 "teor3": (True, [])},
    "quartic_model": {"teor1": (False, ["coefficients are not jointly Gaussian"]), "teor2": (True, []),
                      "teor3": (True, [])},
    "uniform_xi_model": {"teor1": (False, ["coefficients are not jointly Gaussian"]),
                         "teor2": (False, ["f_A1 not Lipschitz (f_xi1 not Lipschitz)"]),
                         "teor3": (False, ["f_xi1 not Lipschitz"])},
}


@pytest.mark.parametrize("fixture", sorted(FIXTURES))
def test_hypothesis_verdict_fixtures(request, fixture):
    rep = hypothesis_report(request.getfixturevalue(fixture), EvalPoint(0.5, 0.1), 3)
    got = {k: (v["holds"], v["reasons"]) for k, v in rep.verdicts.items()}
    assert got == FIXTURES[fixture]


def test_hypothesis_report_sigma_inv(bb_model, bm_model):
    p = EvalPoint(0.5, 0.1)
    assert hypothesis_report(bb_model, p, 3).sigma_inv_11 == pytest.approx(PI2 / 2, rel=1e-12)
    assert hypothesis_report(bm_model, p, 3).sigma_inv_11 == pytest.approx(PI2 / 2 - PI2 / 7, rel=1e-9)


@pytest.mark.parametrize("d,verdict", [([0.2, 0.5], "diverging"), ([0.5, 0.5], "diverging"),
                                       ([1e-2, 1e-4], "converging"), ([0.3, 0.2, 0.1], "converging"),
                                       ([2e-4, 5e-4], "converging"), ([0.01, 0.02], "stalled"),
                                       ([0.2, 0.1, 0.15], "stalled")])
def test_classify(d, verdict):
    assert classify(d) == verdict


def test_convergence_report_for_bridge(bb_model):
    rep = convergence_report((0.7, 1.0), [2, 3, 4], "bb_fast", bb_model)
    assert [p[:2] for p in rep.pairs] == [(2, 3), (3, 4)]
    assert rep.verdict == "converging"
    assert rep.context["grid_points"] > 0 and len(rep.context["masses"]) == 3


def test_convergence_report_validates_orders(bb_model):
    with pytest.raises(ValueError):
        convergence_report((0.5, 0.1), [3, 2], "bb_fast", bb_model)


def test_convergence_pairs_use_shared_grid(bb_model):
    with warnings.catch_warnings():
        warnings.simplefilter("error", ResampledGridWarning)
        convergence_report((0.5, 0.1), [2, 3], "bb_fast", bb_model)
