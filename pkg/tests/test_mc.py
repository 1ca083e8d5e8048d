import numpy as np
import pytest

from heatdens.density import DensityGrid, density_grid
from heatdens.diagnostics import exact_bb_moments
from heatdens.errors import DegenerateDistributionError
from heatdens.mc import (STREAM_SIZE, SampleSet, ecdf_distance, grid_cdf, kde_density, sample_from_grid, sample_solution,
                         silverman_bandwidth)
from heatdens.series import EvalPoint


def test_samples_are_reproducible(bb_model, p05):
    a = sample_solution(bb_model, p05, 3, 70_000, seed=5)
    b = sample_solution(bb_model, p05, 3, 70_000, seed=5)
    c = sample_solution(bb_model, p05, 3, 70_000, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_full_streams_do_not_depend_on_sample_count(bb_model, p05):
    short = sample_solution(bb_model, p05, 3, STREAM_SIZE, seed=1)
    long = sample_solution(bb_model, p05, 3, 2 * STREAM_SIZE + 5, seed=1)
    assert np.array_equal(short.values, long.values[:STREAM_SIZE])


def test_sample_set_is_read_only(bb_model, p05):
    s = sample_solution(bb_model, p05, 2, 100)
    with pytest.raises(ValueError):
        s.values[0] = 1.0
    assert s.provenance["model_digest"] == bb_model.digest()


def test_bb_sample_variance_matches_closed_form(bb_model, p05):
    s = sample_solution(bb_model, p05, 3, 200_000, seed=2)
    var = exact_bb_moments(p05, 3, bb_model.diffusion)[1]
    assert abs(s.mean()) < 4 * np.sqrt(var / s.n)
    assert s.variance() == pytest.approx(var, rel=0.02)


def test_kl_route_samples_match_fourier_route(bb_model):
    point = EvalPoint(0.7, 0.3)
    kl = sample_solution(bb_model, point, 4, 100_000, seed=3, route="kl")
    g = density_grid(point, 3, "bb_fast", bb_model)
    assert ecdf_distance(kl, g) < 0.01


def test_ecdf_distance_of_exact_quantiles_is_small():
    u = np.linspace(-8, 8, 4001)
    g = DensityGrid(u, np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi))
    from scipy import stats
    x = stats.norm.ppf((np.arange(10_000) + 0.5) / 10_000)
    assert ecdf_distance(x, g) < 1e-4


def test_grid_cdf_and_inverse_sampling():
    u = np.linspace(0, 1, 101)
    g = DensityGrid(u, np.ones_like(u))
    cdf = grid_cdf(g)
    assert cdf[0] == 0 and cdf[-1] == 1 and np.allclose(cdf, u)
    draws = sample_from_grid(g, 20_000, seed=0)
    assert ecdf_distance(draws, g) < 0.02


def test_kde_recovers_normal_density():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(20_000)
    u = np.linspace(-3, 3, 61)
    kde = kde_density(SampleSet(x, 0), grid_abscissae=u)
    assert np.max(np.abs(kde.f - np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi))) < 0.02
    assert kde.meta["bandwidth"] == pytest.approx(silverman_bandwidth(x))


def test_kde_rejects_degenerate_and_small_samples():
    with pytest.raises(DegenerateDistributionError):
        kde_density(np.full(2000, 0.3))
    with pytest.raises(ValueError):
        kde_density(np.arange(10.0))


def test_sampler_argument_validation(bb_model, p05):
    with pytest.raises(ValueError):
        sample_solution(bb_model, p05, 3, 0)
    with pytest.raises(ValueError):
        sample_solution(bb_model, p05, 3, 10, route="euler")
