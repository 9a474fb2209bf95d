import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wildrefit.core import InvalidInputError, apply_method, constant_method, identity_method
from wildrefit.predictors import projection_predictor, tikhonov_fit, tikhonov_method
from wildrefit.wild import (
    WildConfig,
    compute_residuals,
    draw_signs,
    run_wild_replicate,
    wild_optimism,
    wild_responses,
)


def test_compute_residuals_examples(rng):
    y = rng.standard_normal(5)
    np.testing.assert_array_equal(compute_residuals(y, y), np.zeros(5))
    np.testing.assert_array_equal(compute_residuals([1, 2], [0, 1]), [1, 1])
    np.testing.assert_allclose(compute_residuals(y, tikhonov_fit(y, 0.0)), 0.0, atol=1e-14)
    with pytest.raises(InvalidInputError):
        compute_residuals([1, 2], [1, 2, 3])


def test_draw_signs_support_and_determinism():
    s = draw_signs(10_000, 7)
    assert set(np.unique(s)) <= {-1.0, 1.0}
    np.testing.assert_array_equal(s, draw_signs(10_000, 7))
    assert not np.array_equal(s, draw_signs(10_000, 8))
    with pytest.raises(InvalidInputError):
        draw_signs(0, 1)


def test_draw_signs_prefix_stable():
    # entry i depends only on (seed, i)
    np.testing.assert_array_equal(draw_signs(50, 3), draw_signs(200, 3)[:50])


def test_draw_signs_balanced():
    n = 100_000
    ok = sum(abs(draw_signs(n, seed).mean()) <= 3 / np.sqrt(n) for seed in range(100))
    assert ok >= 99


def test_wild_responses_examples():
    np.testing.assert_array_equal(wild_responses([0, 0], [1, 2], [1, -1], 2.0), [2, -4])
    fhat = np.array([0.5, -1.0, 2.0])
    np.testing.assert_allclose(wild_responses(fhat, [1, 2, 3], [1, 1, 1], 1e-300), fhat)
    y = np.array([1.0, 0.25, -3.0])
    np.testing.assert_array_equal(wild_responses(fhat, y - fhat, np.ones(3), 1.0), y)
    # in general f + (y - f) == y holds to rounding
    y = np.array([1.0, 0.2, -3.0])
    np.testing.assert_array_max_ulp(wild_responses(fhat, y - fhat, np.ones(3), 1.0), y, 2)
    with pytest.raises(InvalidInputError):
        wild_responses([0, 0], [1, 2], [1, -1], 0.0)
    with pytest.raises(InvalidInputError):
        wild_responses([0, 0], [1, 2, 3], [1, -1, 1], 1.0)


def test_wild_optimism_examples():
    assert wild_optimism([1, -1], [1, 1], [2, 2], [0, 0]) == 0.0
    f = np.array([1.0, 2.0])
    assert wild_optimism([1, 1], [3, 4], f, f) == 0.0


def test_wild_config_validation():
    with pytest.raises(InvalidInputError):
        WildConfig(rho=0.0)
    with pytest.raises(InvalidInputError):
        WildConfig(rho=1.0, seed=-1)


@given(
    st.integers(2, 40).flatmap(
        lambda n: arrays(np.float64, n, elements=st.floats(-10, 10))
    ),
    st.floats(0.01, 10),
    st.integers(0, 2**32),
)
def test_replicate_reconstruction(y, rho, seed):
    m = tikhonov_method(0.2)
    fhat = apply_method(m, y)
    rep = run_wild_replicate(m, y, fhat, WildConfig(rho=rho, seed=seed))
    np.testing.assert_allclose(
        rep.wild_responses - rep.fhat, rho * rep.signs * rep.residuals, atol=1e-12
    )
    assert rep.wild_radius == pytest.approx(
        np.sqrt(np.mean((rep.wild_fit - rep.fhat) ** 2)), abs=1e-12
    )
    assert rep.wild_optimism == pytest.approx(
        np.mean(rep.signs * rep.residuals * (rep.wild_fit - rep.fhat)), abs=1e-12
    )


def test_identity_closed_forms(rng):
    for seed in range(100):
        y = rng.standard_normal(30)
        pilot = y.mean() + 0 * y
        rho = rng.uniform(0.1, 5)
        rep = run_wild_replicate(identity_method(), y, y, WildConfig(rho, seed, pilot))
        wn = np.sqrt(np.mean((y - pilot) ** 2))
        assert rep.wild_radius == pytest.approx(rho * wn, rel=1e-10)
        assert rep.wild_optimism == pytest.approx(rho * wn**2, rel=1e-10)


def test_constant_projection_closed_form(rng):
    y = rng.standard_normal(25)
    m = constant_method()
    fhat = apply_method(m, y)
    rep = run_wild_replicate(m, y, fhat, WildConfig(1.7, 4))
    a = np.mean(rep.signs * rep.residuals)
    np.testing.assert_allclose(rep.wild_fit, fhat + 1.7 * a, atol=1e-12)
    assert rep.wild_optimism == pytest.approx(1.7 * a**2, abs=1e-12)


def test_counts_one_method_call(rng):
    calls = []
    base = tikhonov_method(0.1)

    from wildrefit.core import PredictorMethod

    m = PredictorMethod("counted", lambda u: calls.append(1) or base.fit(u))
    y = rng.standard_normal(12)
    fhat = base(y)
    run_wild_replicate(m, y, fhat, WildConfig(1.0, 0))
    assert len(calls) == 1


def test_replicates_bit_identical(rng):
    m = tikhonov_method(0.05)
    y = rng.standard_normal(50)
    fhat = m(y)
    a = run_wild_replicate(m, y, fhat, WildConfig(1.3, 99))
    b = run_wild_replicate(m, y, fhat, WildConfig(1.3, 99))
    np.testing.assert_array_equal(a.wild_fit, b.wild_fit)
    assert a.wild_optimism == b.wild_optimism


def test_zero_residuals_give_zero_optimism():
    m = projection_predictor({"kind": "box", "lower": -1, "upper": 1})
    y = np.array([0.1, -0.5, 0.9])
    rep = run_wild_replicate(m, y, m(y), WildConfig(2.0, 1))
    assert rep.wild_optimism == 0.0
    assert rep.wild_radius == 0.0
    assert rep.b2 is None


def test_constrained_optimism_nonnegative(rng):
    m = projection_predictor({"kind": "monotone"})
    for seed in range(50):
        y = np.cumsum(rng.standard_normal(20)) * 0.1 + rng.standard_normal(20)
        rep = run_wild_replicate(m, y, m(y), WildConfig(rng.uniform(0.2, 4), seed))
        assert rep.wild_optimism >= -1e-10


def test_radius_monotone_for_projection(rng):
    m = projection_predictor({"kind": "monotone"})
    y = rng.standard_normal(40)
    fhat = m(y)
    radii = [
        run_wild_replicate(m, y, fhat, WildConfig(rho, 5)).wild_radius
        for rho in np.geomspace(0.1, 10, 20)
    ]
    assert np.all(np.diff(radii) >= -1e-8)


def test_pilot_length_checked(rng):
    y = rng.standard_normal(5)
    with pytest.raises(InvalidInputError):
        run_wild_replicate(identity_method(), y, y, WildConfig(1.0, 0, np.zeros(4)))
