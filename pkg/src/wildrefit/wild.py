"""One pass of wild refitting: residuals, Rademacher signs, refit, wild optimism."""

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    InvalidInputError,
    apply_method,
    as_sample,
    check_same_length,
    emp_norm,
)


def compute_residuals(y, pilot):
    """Residuals ``y - pilot`` of the recentering predictor."""
    y = as_sample(y, "y")
    pilot = as_sample(pilot, "pilot")
    check_same_length(y, pilot)
    return y - pilot


def draw_signs(n, seed):
    """Rademacher signs from a counter-based (Philox) stream keyed by ``seed``.

    Entry ``i`` depends only on ``(seed, i)``.
    """
    n = int(n)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    bitgen = np.random.Philox(key=int(seed) % 2**64)
    # one 64-bit counter output per index; use its lowest bit
    bits = bitgen.random_raw(n) & np.uint64(1)
    return np.where(bits == 1, 1.0, -1.0)


def _check_rho(rho):
    rho = float(rho)
    if not (rho > 0 and math.isfinite(rho)):
        raise InvalidInputError(f"rho must be positive and finite, got {rho}")
    return rho


def wild_responses(fhat, residuals, signs, rho):
    """``fhat + rho * signs * residuals``."""
    fhat = as_sample(fhat, "fhat")
    residuals = as_sample(residuals, "residuals")
    signs = np.asarray(signs, dtype=float)
    check_same_length(fhat, residuals, signs)
    return fhat + _check_rho(rho) * (signs * residuals)


def wild_optimism(signs, residuals, fwild, fhat):
    """``mean(signs * residuals * (fwild - fhat))``."""
    residuals = as_sample(residuals, "residuals")
    fwild = as_sample(fwild, "fwild")
    fhat = as_sample(fhat, "fhat")
    signs = np.asarray(signs, dtype=float)
    n = check_same_length(signs, residuals, fwild, fhat)
    return float(np.dot(signs * residuals, fwild - fhat) / n)


@dataclass(frozen=True)
class WildConfig:
    """Noise scale, sign seed, and optional explicit pilot (default: ``fhat``)."""

    rho: float
    seed: int = 0
    pilot: np.ndarray | None = None

    def __post_init__(self):
        _check_rho(self.rho)
        if int(self.seed) < 0 or int(self.seed) >= 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        if self.pilot is not None:
            object.__setattr__(self, "pilot", as_sample(self.pilot, "pilot"))


@dataclass(frozen=True)
class WildReplicate:
    residuals: np.ndarray
    signs: np.ndarray
    wild_responses: np.ndarray
    wild_fit: np.ndarray
    fhat: np.ndarray
    wild_radius: float
    wild_optimism: float
    rho: float
    seed: int

    @property
    def b1(self):
        return self.wild_radius

    @property
    def b2(self):
        """``2 * Opt / r``; ``None`` when the wild radius is zero."""
        if self.wild_radius > 0:
            return 2.0 * self.wild_optimism / self.wild_radius
        return None


def replicate_from_parts(m, fhat, residuals, signs, rho, seed=0):
    """Refit on ``fhat + rho * signs * residuals``; one call to the method."""
    ytil = wild_responses(fhat, residuals, signs, rho)
    fwild = apply_method(m, ytil)
    return WildReplicate(
        residuals=residuals,
        signs=signs,
        wild_responses=ytil,
        wild_fit=fwild,
        fhat=fhat,
        wild_radius=emp_norm(fwild - fhat),
        wild_optimism=wild_optimism(signs, residuals, fwild, fhat),
        rho=float(rho),
        seed=int(seed),
    )


def run_wild_replicate(m, y, fhat, cfg):
    """Run the three wild-refitting steps for one ``(rho, seed)``.

    ``fhat`` must already equal ``M(y)``; it is not recomputed.
    """
    y = as_sample(y, "y")
    fhat = as_sample(fhat, "fhat")
    n = check_same_length(y, fhat)
    pilot = fhat if cfg.pilot is None else cfg.pilot
    if pilot.shape[0] != n:
        raise InvalidInputError(f"pilot has length {pilot.shape[0]}, expected {n}")
    residuals = compute_residuals(y, pilot)
    signs = draw_signs(n, cfg.seed)
    return replicate_from_parts(m, fhat, residuals, signs, cfg.rho, cfg.seed)
