import numpy as np
import pytest
from scipy.stats import ks_2samp

from wildrefit.core import InvalidInputError
from wildrefit.datagen import (
    NoiseSpec,
    SignalSpec,
    design_points,
    draw_noise,
    gaussian_kernel,
    make_nrsfm_scene,
    make_signal,
    step_signal,
    total_variation,
)


def direct_blur(base, std):
    """Reflective-boundary Gaussian blur by explicit summation."""
    n = base.size
    k = gaussian_kernel(std)
    half = k.size // 2
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(-half, half + 1):
            idx = i + j
            # half-sample symmetric reflection: ... b1 b0 | b0 b1 ... b_{n-1} | b_{n-1} ...
            while idx < 0 or idx >= n:
                idx = -idx - 1 if idx < 0 else 2 * n - idx - 1
            acc += k[j + half] * base[idx]
        out[i] = acc
    return out


def test_unsmoothed_signal_has_three_levels():
    f = make_signal(SignalSpec(gamma=0.0))
    assert set(np.unique(f)) == {0.0, 1.0, -0.5}
    np.testing.assert_array_equal(f, step_signal(SignalSpec()))


def test_constant_levels_stay_constant():
    spec = SignalSpec(gamma=0.05, levels=(0.7, 0.7, 0.7))
    np.testing.assert_allclose(make_signal(spec), 0.7, atol=1e-12)


def test_blur_matches_direct_summation():
    spec = SignalSpec(gamma=0.02)
    f = make_signal(spec)
    oracle = direct_blur(step_signal(spec), spec.gamma * spec.n)
    np.testing.assert_allclose(f, oracle, atol=1e-12)
    assert abs(f.mean() - step_signal(spec).mean()) <= 1e-3


def test_design_points():
    np.testing.assert_allclose(design_points(4), [0.25, 0.5, 0.75, 1.0])


def test_total_variation_shrinks_with_gamma():
    tvs = [total_variation(make_signal(SignalSpec(gamma=g))) for g in np.linspace(0, 0.1, 11)]
    assert np.all(np.diff(tvs) <= 1e-12)


@pytest.mark.parametrize(
    "kw",
    [dict(n=2), dict(gamma=-0.1), dict(breakpoints=(0.7, 0.3)), dict(levels=(1.0, 2.0))],
)
def test_signal_spec_validation(kw):
    with pytest.raises(InvalidInputError):
        SignalSpec(**kw)


def test_generators_are_pure():
    spec = NoiseSpec(kind="student_t", seed=11)
    np.testing.assert_array_equal(draw_noise(spec, 100), draw_noise(spec, 100))
    a = make_nrsfm_scene(seed=3)
    b = make_nrsfm_scene(seed=3)
    np.testing.assert_array_equal(a.Y, b.Y)


def test_student_t_variance():
    w = draw_noise(NoiseSpec(kind="student_t", dof=6, scale=1.0, seed=1), 1_000_000)
    assert w.var() == pytest.approx(1.5, rel=0.05)


def test_hetero_band_region_scales():
    n = 100_000
    spec = NoiseSpec(kind="hetero_band", sigma0=0.05, sigma1=1.0, band=(1 / 3, 2 / 3), seed=2)
    w = draw_noise(spec, n)
    x = design_points(n)
    inside = (x >= 1 / 3) & (x <= 2 / 3)
    assert w[inside].std() == pytest.approx(1.0, rel=0.05)
    assert w[~inside].std() == pytest.approx(0.05, rel=0.05)
    np.testing.assert_array_equal(spec.stddev(n)[inside], 1.0)


def test_gaussian_mean_small():
    n = 1_000_000
    w = draw_noise(NoiseSpec(kind="gaussian", sigma=0.3, seed=3), n)
    assert abs(w.mean()) <= 4 * 0.3 / np.sqrt(n)


@pytest.mark.parametrize(
    "spec",
    [
        NoiseSpec(kind="gaussian", sigma=0.3, seed=4),
        NoiseSpec(kind="student_t", dof=6, seed=5),
        NoiseSpec(kind="hetero_band", seed=6),
    ],
)
def test_sign_flip_symmetry(spec):
    w = draw_noise(spec, 100_000)
    # two-sample KS critical value at level 0.01 for equal sizes n: 1.628 * sqrt(2/n)
    stat = ks_2samp(w, -w).statistic
    assert stat < 1.628 * np.sqrt(2 / w.size)


@pytest.mark.parametrize(
    "kw",
    [
        dict(kind="student_t", dof=2.0),
        dict(kind="student_t", scale=0.0),
        dict(kind="hetero_band", sigma0=0.0),
        dict(kind="hetero_band", band=(0.5, 1.2)),
        dict(kind="laplace"),
    ],
)
def test_noise_spec_validation(kw):
    with pytest.raises(InvalidInputError):
        NoiseSpec(**kw)


def test_nrsfm_noiseless_and_cameras():
    sc = make_nrsfm_scene(m=40, p=10, rank=3, sigma=0.0, seed=0)
    np.testing.assert_array_equal(sc.Y, sc.R.apply(sc.S_star))
    for block in sc.R.blocks:
        np.testing.assert_allclose(block @ block.T, np.eye(2), atol=1e-10)


def test_nrsfm_rank():
    sc = make_nrsfm_scene(m=40, p=10, rank=3, sigma=0.25, seed=1)
    s = np.linalg.svd(sc.S_star, compute_uv=False)
    assert int((s > 1e-9 * s[0]).sum()) == 3
    assert sc.Y.shape == (80, 10)
    assert sc.S_star.shape == (120, 10)


def test_nrsfm_noise_level():
    sc = make_nrsfm_scene(m=200, p=50, rank=2, sigma=0.25, seed=2)
    assert (sc.Y - sc.clean).std() == pytest.approx(0.25, rel=0.03)


def test_nrsfm_validation():
    with pytest.raises(InvalidInputError):
        make_nrsfm_scene(m=1, p=2, rank=3)
    with pytest.raises(InvalidInputError):
        make_nrsfm_scene(m=0)
