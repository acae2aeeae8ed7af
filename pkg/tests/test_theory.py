import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modspec import (Architecture, ConsistencyError, DatasetParams,
                     ParameterError, TrajectoryConfig, analytic_svd,
                     build_dataset, covariances, deep_mode_value,
                     enumerate_full_rank_probability,
                     exact_rank_probability_3features, mode_spectrum,
                     predicted_norms, shallow_mode_value)

FIG3 = DatasetParams(n_x=3, n_y=1, k_x=3, k_y=1, r=1.0)

SMALL_GRID = [
    DatasetParams(n_x, n_y, k_x, k_y, r)
    for n_x in (1, 2, 3)
    for n_y in range(1, n_x + 1)
    for k_x in (1, 2)
    for k_y in (1, 2)
    for r in (1.0, 2.0)
]


# --- mode spectrum --------------------------------------------------------------

def test_fig3_spectrum_values():
    spec = mode_spectrum(FIG3)
    assert spec.lambda1 == pytest.approx(math.sqrt(99) / 8, abs=1e-12)
    assert spec.lambda2 == pytest.approx(math.sqrt(11) / 8, abs=1e-12)
    assert spec.lambda3 == pytest.approx(math.sqrt(3) / 8, abs=1e-12)
    assert spec.delta1 == pytest.approx(1.375)
    assert spec.delta2 == pytest.approx(0.375)
    assert spec.pi1_star == pytest.approx(0.9045, abs=5e-5)
    assert spec.pi2_star == pytest.approx(0.3015, abs=5e-5)
    assert spec.pi3_star == pytest.approx(0.5774, abs=5e-5)
    assert (spec.mult1, spec.mult2, spec.mult3) == (1, 2, 5)


def test_spectrum_fully_compositional():
    spec = mode_spectrum(DatasetParams(n_x=2, n_y=1, k_x=0, k_y=0, r=1.0))
    assert spec.lambda1 == 1.0 and spec.delta1 == 1.0 and spec.pi1_star == 1.0
    assert spec.lambda2 == 0.0 and spec.lambda3 == 0.0
    assert spec.delta2 == 0.0 and spec.pi3_star is None


def test_spectrum_ny_equals_nx_drops_middle_mode():
    params = DatasetParams(n_x=2, n_y=2, k_x=1, k_y=1, r=1.0)
    spec = mode_spectrum(params)
    assert spec.mult2 == 0 and spec.lambda2 == 0.0
    sv = np.linalg.svd(covariances(build_dataset(params)).sigma_yx, compute_uv=False)
    distinct = sorted({round(v, 9) for v in sv if v > 1e-9}, reverse=True)
    assert len(distinct) == 2
    assert distinct[0] == pytest.approx(spec.lambda1, abs=1e-9)
    assert distinct[1] == pytest.approx(spec.lambda3, abs=1e-9)


@pytest.mark.parametrize("params", SMALL_GRID)
def test_spectrum_matches_numerical_svd(params):
    spec = mode_spectrum(params)
    sv = np.linalg.svd(covariances(build_dataset(params)).sigma_yx, compute_uv=False)
    expected = ([spec.lambda1] * spec.mult1 + [spec.lambda2] * spec.mult2
                + [spec.lambda3] * spec.mult3)
    assert np.allclose(np.sort(sv)[::-1][:len(expected)], np.sort(expected)[::-1], atol=1e-9)
    assert spec.mult1 + spec.mult2 + spec.mult3 == \
        np.linalg.matrix_rank(covariances(build_dataset(params)).sigma_yx, tol=1e-9)


# --- trajectories --------------------------------------------------------------

def _cfg(pi0=1e-2, eps=0.002, n_x=3):
    return TrajectoryConfig(pi0=pi0, epsilon=eps, n_x=n_x)


def test_deep_starts_at_pi0():
    assert deep_mode_value(1.2, 1.3, _cfg(pi0=0.37), 0) == pytest.approx(0.37)


def test_deep_reaches_asymptote():
    cfg = _cfg(pi0=0.01)
    lam, delta = 1.2437342964, 1.375
    t = 10 * cfg.tau / lam
    assert deep_mode_value(lam, delta, cfg, t) == pytest.approx(lam / delta, abs=1e-4)


def test_deep_zero_lambda_decays():
    cfg = _cfg()
    assert deep_mode_value(0.0, 0.375, cfg, 100) == 0.0
    assert deep_mode_value(0.0, 0.375, cfg, 0) == cfg.pi0


def test_deep_rejects_bad_delta():
    with pytest.raises(ParameterError):
        deep_mode_value(1.0, 0.0, _cfg(), 1)


def test_shallow_starts_at_pi0():
    assert shallow_mode_value(0.5, 1.0, _cfg(pi0=0.2), 0) == pytest.approx(0.2)


def test_shallow_asymptote():
    cfg = _cfg(pi0=1e-6)
    val = shallow_mode_value(1.2437342964, 1.375, cfg, 100 * cfg.tau)
    assert val == pytest.approx(0.9045, abs=1e-4)


def test_shallow_fixed_point():
    lam, delta = 0.9, 1.5
    cfg = _cfg(pi0=lam / delta)
    t = np.array([0.0, 1.0, 10.0, 500.0])
    assert np.allclose(shallow_mode_value(lam, delta, cfg, t), lam / delta)


def test_tau_identity():
    cfg = TrajectoryConfig(pi0=1e-6, epsilon=0.02, n_x=3)
    assert cfg.tau * cfg.epsilon * 2 ** 3 == pytest.approx(1.0)


def test_pi0_must_be_positive():
    with pytest.raises(ParameterError):
        TrajectoryConfig(pi0=0.0, epsilon=0.01, n_x=3)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.05, 3.0), delta=st.floats(0.05, 3.0),
       frac=st.floats(1e-6, 0.999))
def test_deep_monotone_below_asymptote(lam, delta, frac):
    cfg = TrajectoryConfig(pi0=frac * lam / delta, epsilon=0.01, n_x=2)
    t = np.linspace(0, 50 * cfg.tau / lam, 300)
    vals = deep_mode_value(lam, delta, cfg, t)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all(vals > 0)
    assert np.all(vals <= max(cfg.pi0, lam / delta) + 1e-12)


# --- closed-form SVD ------------------------------------------------------------

@pytest.mark.parametrize("params", SMALL_GRID)
def test_analytic_svd_invariants(params):
    d = build_dataset(params)
    svd = analytic_svd(d)
    cov = covariances(d)
    m = svd.u_matrix.shape[1]
    assert np.abs(svd.u_matrix.T @ svd.u_matrix - np.eye(m)).max() < 1e-9
    assert np.abs(svd.v_matrix.T @ svd.v_matrix - np.eye(svd.v_matrix.shape[1])).max() < 1e-9
    assert np.linalg.norm(svd.reconstruct_sigma_yx() - cov.sigma_yx) < 1e-9
    assert np.linalg.norm(svd.reconstruct_sigma_x() - cov.sigma_x) < 1e-9


def test_analytic_svd_mode_count_and_distinct_values():
    for params in SMALL_GRID:
        svd = analytic_svd(build_dataset(params))
        spec = mode_spectrum(params)
        assert len(svd.s_values) == params.n_examples
        nonzero = sorted({round(v, 9) for v in svd.s_values if v > 1e-12}, reverse=True)
        expected = sorted({round(v, 9) for v in
                           (spec.lambda1, spec.lambda2, spec.lambda3) if v > 1e-12},
                          reverse=True)
        assert nonzero == expected


def test_analytic_svd_single_bit_diag():
    d = build_dataset(DatasetParams(n_x=1, n_y=1, k_x=1, k_y=1, r=1.0))
    svd = analytic_svd(d)
    assert sorted(svd.d_values, reverse=True) == pytest.approx([1.5, 0.5])


def test_analytic_svd_reduced_forms():
    for params in (DatasetParams(2, 1, 0, 2, 1.5),   # no input blocks
                   DatasetParams(2, 1, 2, 0, 1.5),   # no output blocks
                   DatasetParams(2, 2, 0, 0, 1.0),   # fully compositional
                   DatasetParams(3, 0, 1, 1, 2.0)):  # no compositional output
        d = build_dataset(params)
        svd = analytic_svd(d)
        cov = covariances(d)
        assert np.linalg.norm(svd.reconstruct_sigma_yx() - cov.sigma_yx) < 1e-9
        assert np.linalg.norm(svd.reconstruct_sigma_x() - cov.sigma_x) < 1e-9


def test_analytic_svd_self_check_guards(monkeypatch):
    d = build_dataset(FIG3)
    import modspec.theory as theory
    real = theory._spectrum_values

    def broken(P, k_x, k_y, r):
        lam1, lam2, lam3, d1, d2 = real(P, k_x, k_y, r)
        return lam1 * 1.01, lam2, lam3, d1, d2

    monkeypatch.setattr(theory, "_spectrum_values", broken)
    with pytest.raises(ConsistencyError):
        analytic_svd(d)


# --- predicted norms -------------------------------------------------------------

def _pinv_map(params, feature_choice="first"):
    cov = covariances(build_dataset(params, feature_choice=feature_choice))
    return cov.sigma_yx @ np.linalg.pinv(cov.sigma_x)


def test_dense_norm_asymptotes_match_pinv_oracle():
    cfg = TrajectoryConfig(pi0=1e-4, epsilon=0.002, n_x=3)
    t_inf = np.array([0.0, 80 * cfg.tau])
    curves = predicted_norms(FIG3, Architecture.dense(), cfg, t_inf)
    m = _pinv_map(FIG3)
    ny, nx = 1, 3
    assert curves.comp_comp[-1] == pytest.approx(8.0 / 11.0, abs=1e-10)
    assert curves.comp_comp[-1] == pytest.approx(np.linalg.norm(m[:ny, :nx]), abs=1e-9)
    assert curves.noncomp_comp[-1] == pytest.approx(np.linalg.norm(m[:ny, nx:]), abs=1e-9)
    assert curves.comp_noncomp[-1] == pytest.approx(np.linalg.norm(m[ny:, :nx]), abs=1e-9)
    assert curves.noncomp_noncomp[-1] == pytest.approx(np.linalg.norm(m[ny:, nx:]), abs=1e-9)


def test_fully_partitioned_cross_norms_zero():
    cfg = TrajectoryConfig(pi0=1e-4, epsilon=0.002, n_x=3)
    t = np.linspace(0, 5000, 64)
    curves = predicted_norms(FIG3, Architecture.fully_partitioned(), cfg, t)
    assert np.all(curves.noncomp_comp == 0.0)
    assert np.all(curves.comp_noncomp == 0.0)
    assert curves.comp_comp[-1] == pytest.approx(math.sqrt(1), abs=1e-6)


def test_norms_homogeneous_in_small_pi0():
    cfg = TrajectoryConfig(pi0=1e-6, epsilon=0.002, n_x=3)
    curves = predicted_norms(FIG3, Architecture.dense(), cfg, np.array([0.0]))
    for arr in (curves.comp_comp, curves.noncomp_comp,
                curves.comp_noncomp, curves.noncomp_noncomp):
        assert arr[0] < 1e-5


def test_imperfect_extremes_recover_dense_and_output_partitioned():
    params = DatasetParams(n_x=3, n_y=1, k_x=3, k_y=2, r=1.0)
    cfg = TrajectoryConfig(pi0=1e-5, epsilon=0.002, n_x=3)
    t = np.linspace(0, 4000, 160)
    dense = predicted_norms(params, Architecture.dense(), cfg, t)
    left_all = predicted_norms(params, Architecture.imperfect_partition(2, 0), cfg, t)
    for a, b in zip(dense.as_dict().values(), left_all.as_dict().values()):
        assert np.array_equal(a, b)
    op = predicted_norms(params, Architecture.output_partitioned(), cfg, t)
    right_all = predicted_norms(params, Architecture.imperfect_partition(0, 2), cfg, t)
    for a, b in zip(op.as_dict().values(), right_all.as_dict().values()):
        assert np.array_equal(a, b)


def test_imperfect_partition_counts_validated():
    cfg = TrajectoryConfig(pi0=1e-5, epsilon=0.002, n_x=3)
    with pytest.raises(ParameterError):
        predicted_norms(FIG3, Architecture.imperfect_partition(2, 1), cfg, [0.0, 1.0])


def test_shallow_variant_uses_shallow_form():
    cfg = TrajectoryConfig(pi0=1e-3, epsilon=0.002, n_x=3)
    t = np.array([0.0, 30.0])
    sh = predicted_norms(FIG3, Architecture.shallow(), cfg, t)
    dp = predicted_norms(FIG3, Architecture.dense(), cfg, t)
    # the shallow form moves immediately; the deep form is still in its plateau
    assert sh.comp_comp[1] > 10 * dp.comp_comp[1]


# --- exact rank probability --------------------------------------------------------

def test_exact_rank_probability_values():
    assert exact_rank_probability_3features(3) == pytest.approx(32.0 / 56.0, abs=1e-15)
    assert exact_rank_probability_3features(1) == 0.0
    assert exact_rank_probability_3features(2) == 0.0
    for size in (5, 6, 7, 8):
        assert exact_rank_probability_3features(size) == 1.0
    # the sequential argument evaluates to 0.91 after rounding
    assert exact_rank_probability_3features(4) == pytest.approx(0.91, abs=5e-3)


def test_exact_rank_probability_agrees_with_enumeration():
    for size in range(1, 9):
        assert exact_rank_probability_3features(size) == pytest.approx(
            enumerate_full_rank_probability(3, size), abs=1e-12)


def test_exact_rank_probability_range():
    with pytest.raises(ParameterError):
        exact_rank_probability_3features(0)
    with pytest.raises(ParameterError):
        exact_rank_probability_3features(9)
