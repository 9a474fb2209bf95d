"""Deterministic synthetic data: smoothed step signals, noise, NRSFM scenes."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .core import InvalidInputError
from .predictors import CameraMatrix


@dataclass(frozen=True)
class SignalSpec:
    """Three-level step function on ``x_i = i/n``, blurred by a Gaussian.

    ``gamma`` is the blur standard deviation in units of the [0, 1] domain.
    """

    n: int = 301
    gamma: float = 0.0
    levels: tuple = (0.0, 1.0, -0.5)
    breakpoints: tuple = (0.35, 0.7)

    def __post_init__(self):
        if int(self.n) < 3:
            raise InvalidInputError("signal needs n >= 3")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidInputError("gamma must be finite and >= 0")
        if len(self.levels) != 3 or not all(math.isfinite(v) for v in self.levels):
            raise InvalidInputError("levels must be three finite reals")
        if len(self.breakpoints) != 2:
            raise InvalidInputError("breakpoints must be two reals")
        b1, b2 = self.breakpoints
        if not 0 < b1 < b2 < 1:
            raise InvalidInputError("breakpoints must satisfy 0 < b1 < b2 < 1")


def design_points(n):
    return np.arange(1, n + 1) / n


def step_signal(spec):
    x = design_points(spec.n)
    b1, b2 = spec.breakpoints
    return np.select([x < b1, x < b2], [spec.levels[0], spec.levels[1]], spec.levels[2]).astype(float)


def gaussian_kernel(std, truncate=6.0):
    half = max(1, int(math.ceil(truncate * std)))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / std) ** 2)
    return k / k.sum()


def make_signal(spec):
    """Evaluate the step function and blur it with reflective boundaries."""
    base = step_signal(spec)
    std = spec.gamma * spec.n
    if std == 0:
        return base
    k = gaussian_kernel(std)
    half = k.size // 2
    padded = np.pad(base, half, mode="symmetric")
    return np.convolve(padded, k, mode="valid")


def total_variation(f):
    return float(np.abs(np.diff(f)).sum())


@dataclass(frozen=True)
class NoiseSpec:
    """Independent symmetric noise.

    ``kind`` is ``"gaussian"`` (uses ``sigma``), ``"student_t"`` (``dof``,
    ``scale``) or ``"hetero_band"`` (``sigma0`` outside ``band``, ``sigma1``
    inside, band given on the [0, 1] design).
    """

    kind: str = "gaussian"
    sigma: float = 0.3
    dof: float = 6.0
    scale: float = 1.0
    sigma0: float = 0.05
    sigma1: float = 1.0
    band: tuple = (1 / 3, 2 / 3)
    seed: int = 0

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma >= 0:
                raise InvalidInputError("sigma must be >= 0")
        elif self.kind == "student_t":
            if not self.dof > 2:
                raise InvalidInputError("student_t needs dof > 2 for finite variance")
            if not self.scale > 0:
                raise InvalidInputError("scale must be > 0")
        elif self.kind == "hetero_band":
            if not (self.sigma0 > 0 and self.sigma1 > 0):
                raise InvalidInputError("sigma0 and sigma1 must be > 0")
            lo, hi = self.band
            if not 0 <= lo <= hi <= 1:
                raise InvalidInputError("band must be a sub-interval of [0, 1]")
        else:
            raise InvalidInputError(f"unknown noise kind {self.kind!r}")

    def stddev(self, n):
        """Per-point noise standard deviations."""
        if self.kind == "gaussian":
            return np.full(n, float(self.sigma))
        if self.kind == "student_t":
            return np.full(n, self.scale * math.sqrt(self.dof / (self.dof - 2)))
        x = design_points(n)
        inside = (x >= self.band[0]) & (x <= self.band[1])
        return np.where(inside, self.sigma1, self.sigma0)


def draw_noise(spec, n):
    """Draw ``n`` noise values; a pure function of ``(spec, n)``."""
    if int(n) < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "gaussian":
        return spec.sigma * rng.standard_normal(n)
    if spec.kind == "student_t":
        return spec.scale * rng.standard_t(spec.dof, n)
    return spec.stddev(n) * rng.standard_normal(n)


@dataclass(frozen=True)
class NrsfmScene:
    m: int
    p: int
    rank: int
    S_star: np.ndarray
    R: CameraMatrix
    Y: np.ndarray
    sigma: float
    seed: int

    @property
    def clean(self):
        """Noiseless observations ``R @ S_star``."""
        return self.R.apply(self.S_star)


def random_cameras(m, rng):
    rots = Rotation.random(m, random_state=rng).as_matrix()
    return CameraMatrix(rots[:, :2, :])


def make_nrsfm_scene(m=40, p=10, rank=3, sigma=0.25, seed=0):
    """Synthetic scene ``Y = R S* + W`` with exact-rank ``S*`` and random cameras."""
    m, p, rank = int(m), int(p), int(rank)
    if m < 1 or p < 1 or rank < 1:
        raise InvalidInputError("m, p and rank must be >= 1")
    if rank > min(3 * m, p):
        raise InvalidInputError(f"rank {rank} infeasible for a {3 * m} x {p} shape matrix")
    if not sigma >= 0:
        raise InvalidInputError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    S_star = rng.standard_normal((3 * m, rank)) @ rng.standard_normal((rank, p))
    R = random_cameras(m, rng)
    Y = R.apply(S_star)
    if sigma > 0:
        Y = Y + sigma * rng.standard_normal(Y.shape)
    return NrsfmScene(m, p, rank, S_star, R, Y, float(sigma), seed)
