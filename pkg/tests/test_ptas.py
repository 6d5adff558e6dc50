import json
import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relu_regress.data import Dataset, LabelModel, MarginalSpec, generate, random_unit
from relu_regress.errors import ConfigError, EmptyRegion, SizeOverflow, ZeroDirection
from relu_regress.numerics import least_squares, make_rng
from relu_regress.ptas import (
    MultiPoly,
    PiecewiseHypothesis,
    PtasConfig,
    RegionPartition,
    estimate_opt,
    eval_piecewise,
    fit_band_poly,
    fit_plus_region,
    monomial_exponents,
    monomial_features,
    monomial_matrix,
    partition,
    piecewise_loss,
    ptas_train,
    region_losses,
)
from relu_regress.surrogate import LinearModel, SolverConfig, pgd_train, select_min_gradient, square_loss


def gaussian_ds(m, d, w_star, labels=None, seed=0, tag="x"):
    ds, gt = generate(MarginalSpec("gaussian", d), labels or LabelModel(), w_star, m, make_rng(seed, tag))
    return ds, gt


# --- config --------------------------------------------------------------------


def test_config_defaults():
    cfg = PtasConfig(eta_accuracy=0.5)
    assert cfg.resolved_degree() == 8
    assert cfg.resolved_gamma() == pytest.approx(max(math.sqrt(math.log(2)), 0.5))
    assert PtasConfig(eta_accuracy=1.0).resolved_degree() == 1


def test_degree_cap_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert PtasConfig(eta_accuracy=0.2).resolved_degree() == 12
    assert "capped" in caplog.text


@pytest.mark.parametrize(
    "kwargs", [{"eta_accuracy": 0.0}, {"eta_accuracy": 1.5}, {"gamma": -1.0}, {"opt_estimate": -0.1}, {"opt_estimate": "x"}]
)
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        PtasConfig(**kwargs).validate()


# --- monomials -----------------------------------------------------------------


def test_monomial_features_examples():
    a, b = 1.5, -2.0
    np.testing.assert_allclose(monomial_features([a, b], 2), [1, a, b, a * a, a * b, b * b])
    np.testing.assert_array_equal(monomial_features([3.0, 4.0, 5.0], 0), [1.0])
    np.testing.assert_array_equal(monomial_features([2.0], 3), [1, 2, 4, 8])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 6))
def test_monomial_count_and_order(d, k):
    exps = monomial_exponents(d, k)
    assert len(exps) == math.comb(d + k, k)
    assert len(set(exps)) == len(exps)
    degs = [sum(e) for e in exps]
    assert degs == sorted(degs)
    x = make_rng(d * 10 + k).standard_normal(d)
    direct = [np.prod(x ** np.array(e)) for e in exps]
    np.testing.assert_allclose(monomial_features(x, k), direct, rtol=1e-12, atol=1e-12)


def test_monomial_size_overflow():
    with pytest.raises(SizeOverflow):
        monomial_matrix(np.zeros((1, 50)), 8)


# --- partition -----------------------------------------------------------------


def test_partition_examples():
    ds = Dataset([[0.6, 1.0], [0.2, -3.0], [-0.7, 0.0], [0.5, 9.0], [-0.5, 1.0]], np.zeros(5))
    minus, band, plus = partition([1.0, 0.0], 0.5, ds)
    assert plus.tolist() == [0]
    assert band.tolist() == [1, 3, 4]
    assert minus.tolist() == [2]
    minus, band, plus = partition([1.0, 0.0], 1e300, ds)
    assert band.tolist() == [0, 1, 2, 3, 4] and minus.size == plus.size == 0


def test_partition_zero_direction():
    with pytest.raises(ZeroDirection):
        partition([0.0, 0.0], 1.0, Dataset([[1.0, 1.0]], [0.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.floats(1e-3, 5.0))
def test_partition_complete_and_disjoint(seed, t):
    rng = make_rng(seed)
    d = int(rng.integers(1, 5))
    ds = Dataset(rng.standard_normal((50, d)), np.zeros(50))
    w = rng.standard_normal(d) + 1e-3
    parts = partition(w, t, ds)
    allidx = np.concatenate(parts)
    assert allidx.size == 50 and np.unique(allidx).size == 50


# --- opt estimate ----------------------------------------------------------------


def test_estimate_opt_floor_and_zero_model():
    w = np.array([0.6, 0.0])
    ds, _ = gaussian_ds(1000, 2, w)
    assert estimate_opt(ds, LinearModel(w)) == 1e-6
    y = np.full(10, math.sqrt(0.3))
    assert estimate_opt(Dataset(np.ones((10, 2)), y), LinearModel.zero(2)) == pytest.approx(0.3)


# --- region fits -----------------------------------------------------------------


def test_band_fit_recovers_linear_labels():
    rng = make_rng(3)
    X = rng.standard_normal((2000, 3))
    c = np.array([0.5, -1.0, 0.25])
    ds = Dataset(X, X @ c)
    poly, l1, ok = fit_band_poly(ds, np.arange(2000), 3)
    terms = poly.terms
    for j in range(3):
        e = [0, 0, 0]
        e[j] = 1
        assert terms[tuple(e)] == pytest.approx(c[j], abs=1e-8)
    others = [v for a, v in terms.items() if sum(a) != 1]
    assert max(abs(v) for v in others) <= 1e-8
    assert ok and l1 == pytest.approx(1.75, abs=1e-7)


def test_band_fit_degree_zero_is_mean():
    rng = make_rng(4)
    ds = Dataset(rng.standard_normal((100, 2)), rng.random(100))
    idx = np.arange(0, 100, 3)
    poly, _, _ = fit_band_poly(ds, idx, 0)
    assert poly.coeffs[0] == pytest.approx(ds.y[idx].mean(), abs=1e-12)


def test_band_fit_empty():
    with pytest.raises(EmptyRegion):
        fit_band_poly(Dataset([[1.0]], [0.0]), [], 2)


def _band_mse(ds, idx, k):
    poly, _, _ = fit_band_poly(ds, idx, k)
    r = poly(ds.X[idx]) - ds.y[idx]
    return float(np.mean(r * r))


def test_band_fit_monotone_in_degree_relu_labels():
    w_star = random_unit(make_rng(5), 2)
    ds, _ = gaussian_ds(400_000, 2, w_star, seed=5)
    w = w_star + 0.05 * make_rng(6).standard_normal(2)
    _, band, _ = partition(w, 0.35, ds)
    assert band.size >= 100_000
    band = band[:100_000]
    mses = [_band_mse(ds, band, k) for k in (2, 4, 6, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(mses, mses[1:]))


def test_plus_fit_recovers_linear():
    w_star = np.array([0.3, -0.4, 0.5])
    rng = make_rng(7)
    X = rng.standard_normal((60, 3))
    ds = Dataset(X, X @ w_star)
    np.testing.assert_allclose(fit_plus_region(ds, np.arange(60)), w_star, atol=1e-6)


def test_plus_fit_zero_labels_and_projection():
    X = make_rng(8).standard_normal((40, 2))
    np.testing.assert_allclose(fit_plus_region(Dataset(X, np.zeros(40)), np.arange(40)), 0.0, atol=1e-14)
    big = np.array([3.0, 0.0])
    w = fit_plus_region(Dataset(X, X @ big), np.arange(40), W=1.0)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    with pytest.raises(EmptyRegion):
        fit_plus_region(Dataset(X, np.zeros(40)), [])


def test_region_optimality_certificates():
    w_star = random_unit(make_rng(9), 3)
    ds, _ = gaussian_ds(20_000, 3, w_star, LabelModel("zeroing_band", a=0.3), seed=9)
    w_const = w_star + np.array([0.05, -0.03, 0.02])
    _, _, plus = partition(w_const, 0.2, ds)
    Xp, yp = ds.X[plus], ds.y[plus]
    w_ls = least_squares(Xp, yp)  # pre-projection

    def loss(w):
        return float(np.mean((Xp @ w - yp) ** 2))

    assert loss(w_ls) <= loss(w_star) + 1e-12
    assert loss(w_ls) <= loss(w_const) + 1e-12


# --- hypothesis evaluation -------------------------------------------------------


def _toy_hypothesis():
    poly = MultiPoly(2, 1, np.array([7.0, 1.0, 1.0]))
    return PiecewiseHypothesis(RegionPartition([1.0, 0.0], 0.5), np.array([2.0, 3.0]), poly)


def test_eval_piecewise_branches():
    h = _toy_hypothesis()
    assert eval_piecewise(h, [-0.9, 4.0]) == 0.0
    assert eval_piecewise(h, [0.5, 1.0]) == pytest.approx(8.5)  # boundary belongs to the band
    assert eval_piecewise(h, [-0.5, 1.0]) == pytest.approx(7.5)
    assert eval_piecewise(h, [1.0, 1.0]) == pytest.approx(5.0)


def test_loss_decomposition():
    h = _toy_hypothesis()
    rng = make_rng(10)
    ds = Dataset(rng.standard_normal((5000, 2)), rng.random(5000))
    reg = region_losses(h, ds)
    total = sum(reg[r]["fraction"] * reg[r]["loss"] for r in ("minus", "band", "plus"))
    assert total == pytest.approx(piecewise_loss(h, ds), abs=1e-12)
    assert reg["total"] == pytest.approx(total, abs=1e-12)
    assert sum(reg[r]["count"] for r in ("minus", "band", "plus")) == 5000


def test_zero_region_loss_on_clean_data():
    w_star = random_unit(make_rng(11), 3)
    ds, _ = gaussian_ds(50_000, 3, w_star, seed=11)
    w = w_star + np.array([0.1, 0.0, -0.1])
    minus, _, _ = partition(w, 0.2, ds)
    h = PiecewiseHypothesis(RegionPartition(w, 0.2), np.zeros(3), MultiPoly.zero(3))
    direct = np.sum(np.maximum(ds.X[minus] @ w_star, 0) ** 2) / ds.m
    reg = region_losses(h, ds)
    assert reg["minus"]["loss"] * reg["minus"]["fraction"] == pytest.approx(direct, rel=1e-12, abs=1e-15)


def test_hypothesis_json_round_trip():
    h = _toy_hypothesis()
    obj = json.loads(json.dumps(h.to_dict()))
    assert set(obj) == {"w", "t", "w_plus", "band_poly", "provenance"}
    assert obj["band_poly"]["terms"][1] == {"alpha": [1, 0], "c": 1.0}
    back = PiecewiseHypothesis.from_dict(obj)
    X = make_rng(12).standard_normal((100, 2))
    np.testing.assert_array_equal(back.predict(X), h.predict(X))


# --- end to end --------------------------------------------------------------------


def _pipeline(labels, d, m, seed):
    w_star = random_unit(make_rng(seed, "w"), d)
    train, _ = gaussian_ds(m, d, w_star, labels, seed, "train")
    fresh, _ = gaussian_ds(20_000, d, w_star, labels, seed, "fresh")
    hold, gt = gaussian_ds(20_000, d, w_star, labels, seed, "hold")
    trace = pgd_train(train, "relu", SolverConfig(step_size=0.2, max_iters=1000, grad_tol=1e-10))
    return train, hold, gt, select_min_gradient(trace, fresh)


def test_ptas_clean_no_worse():
    train, hold, _, const = _pipeline(LabelModel(), 3, 50_000, 20)
    h = ptas_train(train, hold, PtasConfig(eta_accuracy=0.5), const)
    assert piecewise_loss(h, hold) <= square_loss(const, hold) + 0.01


@pytest.mark.slow
def test_ptas_improves_on_zeroing_band():
    train, hold, gt, const = _pipeline(LabelModel("zeroing_band", a=0.3), 3, 200_000, 21)
    assert estimate_opt(hold, const) <= 10 * gt.opt_ref
    h = ptas_train(train, hold, PtasConfig(eta_accuracy=0.5, gamma=1.6), const)
    assert piecewise_loss(h, hold) < square_loss(const, hold)


def test_ptas_huge_gamma_falls_back_to_polynomial():
    train, hold, _, const = _pipeline(LabelModel(), 2, 5_000, 22)
    h = ptas_train(train, hold, PtasConfig(eta_accuracy=0.5, gamma=1e9, degree=3), const)
    assert set(h.provenance["degradation"]) == {"empty_plus", "empty_minus"}
    np.testing.assert_array_equal(h.w_plus, np.zeros(2))
    poly, _, _ = fit_band_poly(train, np.arange(train.m), 3)
    np.testing.assert_allclose(h.predict(hold.X), poly(hold.X), atol=1e-12)


def test_ptas_rejects_zero_direction():
    ds = Dataset(np.ones((3, 2)), np.zeros(3))
    with pytest.raises(ZeroDirection):
        ptas_train(ds, ds, PtasConfig(), LinearModel.zero(2))
