import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatdens import laws
from heatdens.errors import DegeneracyError, InvalidLawError, SingularCovarianceError, UnsupportedLawError
from heatdens.models import (CoeffModel, ProcessSpec, build_coeff_model, fourier_coeff_cov, fourier_coeff_mean,
                             gaussian_conditional_params, kl_truncation, make_brownian_bridge_process,
                             make_brownian_motion_process, make_general_sine_process, sigma_inv_11,
                             uniform_diffusion)

PI2 = np.pi ** 2


def bm_cov_exact(n, m):
    # closed form of 4 int int min(y,z) sin(n pi y) sin(m pi z), derived symbolically
    return 4 * (-1) ** (n + m) / (n * m * PI2) + (2 / (n * n * PI2) if n == m else 0.0)


def test_bb_covariance_diagonal():
    bb = make_brownian_bridge_process()
    assert fourier_coeff_cov(bb, 2, 2) == pytest.approx(2 / (4 * PI2), rel=1e-12)
    assert abs(fourier_coeff_cov(bb, 1, 2)) < 1e-14


@pytest.mark.parametrize("n,m", [(1, 1), (1, 2), (2, 2), (1, 3), (2, 5), (6, 6)])
def test_bm_covariance_matches_closed_form(n, m):
    assert fourier_coeff_cov(make_brownian_motion_process(), n, m) == pytest.approx(bm_cov_exact(n, m),
                                                                                    rel=1e-10, abs=1e-14)


def test_bm_offdiagonal_value():
    assert fourier_coeff_cov(make_brownian_motion_process(), 1, 2) == pytest.approx(-2 / PI2, rel=1e-12)


def test_covariance_symmetric_bitwise():
    bm = make_brownian_motion_process()
    for n in range(1, 5):
        for m in range(1, 5):
            assert fourier_coeff_cov(bm, n, m) == fourier_coeff_cov(bm, m, n)


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_bm_sigma_inv_11_sherman_morrison(N):
    # Sigma_N = D + v v^T with D = diag(2/(n^2 pi^2)), v_n = 2 (-1)^n / (n pi)
    sigma = build_coeff_model(make_brownian_motion_process(), N).sigma
    assert sigma_inv_11(sigma) == pytest.approx(PI2 / 2 - PI2 / (2 * N + 1), rel=1e-9)


def test_bm_sigma_has_full_rank():
    sigma = build_coeff_model(make_brownian_motion_process(), 6).sigma
    sv = np.linalg.svd(sigma, compute_uv=False)
    assert sv[1] / sv[0] > 1e-3


def test_bb_marginal_variances():
    cm = build_coeff_model(make_brownian_bridge_process(), 6)
    assert cm.kind == "independent"
    for n, law in enumerate(cm.marginals, start=1):
        assert law.mean_var()[1] == pytest.approx(2 / (n * n * PI2), abs=1e-10)


def test_quartic_process_marginal_density():
    proc = make_general_sine_process("inverse_cube_log", laws.quartic())
    law = build_coeff_model(proc, 2).marginals[0]
    s = np.sqrt(2.0)  # nu_1 = 1
    a = np.linspace(-4, 4, 17)
    assert np.allclose(law.evaluate(a), laws.quartic().pdf(a / s) / s, rtol=1e-14)


def test_sampling_matches_coefficient_moments():
    proc = make_general_sine_process("inverse_cube_log", laws.uniform_unit_variance())
    rng = np.random.default_rng(11)
    n_draw = 100_000
    for n in (1, 2, 3):
        xi = proc.xi_law(n).sample(rng, n_draw)
        a = np.sqrt(2) * np.sqrt(proc.nus(n)[-1]) * xi
        var = fourier_coeff_cov(proc, n, n)
        assert abs(a.mean() - fourier_coeff_mean(proc, n)) < 4 * np.sqrt(var / n_draw)
        assert a.var() == pytest.approx(var, rel=0.05)


def test_sigma_inv_11_examples():
    assert sigma_inv_11(np.eye(3)) == pytest.approx(1.0)
    d = np.diag([2 / (n * n * PI2) for n in (1, 2, 3)])
    assert sigma_inv_11(d) == pytest.approx(PI2 / 2, rel=1e-12)


def test_sigma_inv_11_rejects_rank_one():
    v = np.array([-1.0, 0.5, -1 / 3])
    with pytest.raises(SingularCovarianceError):
        sigma_inv_11(4 / PI2 * np.outer(v, v))


def test_conditional_independent_case():
    m, c = gaussian_conditional_params([0, 0], np.eye(2), 1, [5.0])
    assert m[0] == 0.0 and c[0, 0] == 1.0


def test_conditional_two_by_two():
    m, c = gaussian_conditional_params([0, 0], [[2, 1], [1, 2]], 1, [2.0])
    assert m[0] == pytest.approx(1.0) and c[0, 0] == pytest.approx(1.5)


def test_conditional_degenerate_variance():
    v = np.array([-1.0, 0.5])
    with pytest.raises(DegeneracyError):
        gaussian_conditional_params([0, 0], 4 / PI2 * np.outer(v, v), 1, [0.1])


def test_conditional_singular_block_reports_condition_number():
    s = np.eye(3)
    s[1:, 1:] = [[1, 1], [1, 1]]
    with pytest.raises(DegeneracyError) as info:
        gaussian_conditional_params(np.zeros(3), s, 1, [0, 0])
    assert info.value.condition_number > 1e12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-0.9, 0.9), st.floats(-3, 3))
def test_conditional_block_diagonal_returns_head_block(s1, s2, rho, a):
    head = np.array([[s1, rho * np.sqrt(s1 * s2)], [rho * np.sqrt(s1 * s2), s2]])
    sigma = np.zeros((3, 3))
    sigma[:2, :2] = head
    sigma[2, 2] = 1.7
    _, c = gaussian_conditional_params(np.zeros(3), sigma, 2, [a])
    assert np.array_equal(c, 0.5 * (head + head.T))


def test_general_sine_rejects_non_summable():
    with pytest.raises(InvalidLawError):
        make_general_sine_process(lambda j: 1.0 / j, laws.normal())


def test_general_sine_rejects_bad_xi_law():
    with pytest.raises(InvalidLawError):
        make_general_sine_process("bridge", laws.normal(0, 1.5))


def test_general_sine_finite_list():
    proc = make_general_sine_process([1.0, 0.25], laws.normal())
    assert np.allclose(proc.nus(3), [1.0, 0.25, 0.0])
    assert proc.tail_bound(1) == 0.25


def test_unknown_nu_rule():
    with pytest.raises(InvalidLawError):
        make_general_sine_process("harmonic", laws.normal())


def test_bb_eigenpairs_are_normalized():
    for pair in make_brownian_bridge_process().eigenpairs(5):
        assert pair.norm_error() < 1e-12


def test_bm_eigen_sine_coeffs_match_covariance():
    bm = make_brownian_motion_process()
    M = 200
    ph = bm.eigen_sine_coeffs(M, 2)
    cov12 = 4 * np.sum(bm.nus(M) * ph[:, 0] * ph[:, 1])
    assert cov12 == pytest.approx(-2 / PI2, abs=1e-5)


def test_kl_truncation_meets_tail_tolerance():
    bb = make_brownian_bridge_process()
    M = kl_truncation(bb, tol=1e-4)
    assert bb.tail_bound(M) < 1e-4 <= bb.tail_bound(M - 1)


def test_non_gaussian_non_sine_process_unsupported():
    proc = ProcessSpec("custom", lambda y: 0 * y, lambda j: 1.0 / j ** 2, make_brownian_motion_process().phi_fn,
                       lambda j: laws.quartic(), True, False, tail_bound=lambda M: 1.0 / M)
    with pytest.raises(UnsupportedLawError):
        build_coeff_model(proc, 2)


def test_coeff_model_requires_symmetry():
    with pytest.raises(ValueError):
        CoeffModel.joint_gaussian([0, 0], [[1, 0.5], [0.4, 1]])


def test_coeff_model_rejects_negative_definite():
    with pytest.raises(DegeneracyError):
        CoeffModel.joint_gaussian([0, 0], [[1, 0], [0, -1e-6]])


@pytest.mark.parametrize("lo,hi", [(0.0, 1.0), (-1.0, 1.0), (2.0, 1.0)])
def test_diffusion_support_validation(lo, hi):
    with pytest.raises(InvalidLawError):
        uniform_diffusion(lo, hi)


def test_point_mass_diffusion():
    d = uniform_diffusion(1.5, 1.5)
    a, w = d.nodes(64)
    assert a.tolist() == [1.5] and w.tolist() == [1.0]
    assert np.all(d.sample(np.random.default_rng(0), 4) == 1.5)


def test_zero_eigenvalue_gives_point_mass_coefficient():
    gauss = build_coeff_model(make_general_sine_process([1.0], laws.normal()), 2)
    assert gauss.kind == "joint_gaussian" and gauss.sigma[1, 1] == 0.0
    with pytest.raises(DegeneracyError):
        build_coeff_model(make_general_sine_process([1.0], laws.quartic()), 2)
