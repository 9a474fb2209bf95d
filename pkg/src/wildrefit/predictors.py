"""Reference black-box predictors.

Smoothers on an equispaced 1-D grid (Tikhonov, total variation), exact
Euclidean projections onto simple convex sets, and nuclear-norm-ball
constrained least squares for the structure-from-motion model.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    InvalidInputError,
    NumericError,
    PredictorMethod,
    apply_method,
    as_sample,
    check_same_length,
    emp_inner,
    emp_norm_sq,
)

SVD_RTOL = 1e-12


def _check_lam(lam):
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise InvalidInputError(f"lambda must be finite and >= 0, got {lam}")
    return lam


@dataclass(frozen=True)
class TikhonovParams:
    lam: float

    def __post_init__(self):
        _check_lam(self.lam)


@dataclass(frozen=True)
class TVParams:
    lam: float

    def __post_init__(self):
        _check_lam(self.lam)


@dataclass(frozen=True)
class NuclearBallParams:
    """Settings for :func:`nuclear_ball_ls`.

    ``step=None`` means 1/L with L = ||R||_2^2 estimated by power iteration.
    """

    radius: float
    max_iters: int = 5000
    step: float | None = None
    tol: float = 1e-13

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius < 0:
            raise InvalidInputError("radius must be finite and >= 0")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be positive")
        if self.step is not None and not self.step > 0:
            raise InvalidInputError("step must be positive")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")


def _params(p, cls):
    if isinstance(p, cls):
        return p
    return cls(float(p))


# -- 1-D smoothers ----------------------------------------------------------


def tikhonov_fit(y, p):
    """Minimize ``mean((y - f)**2) + lam * sum(diff(f)**2)``.

    Solves ``(I + n*lam*D^T D) f = y`` with the Thomas algorithm. ``p`` is a
    :class:`TikhonovParams` or a bare float.
    """
    lam = _params(p, TikhonovParams).lam
    y = as_sample(y, "y")
    n = y.shape[0]
    if n < 2:
        raise InvalidInputError("tikhonov_fit needs n >= 2")
    if lam == 0.0:
        return y.copy()
    c = n * lam
    diag = np.full(n, 1.0 + 2.0 * c)
    diag[0] = diag[-1] = 1.0 + c
    off = np.full(n - 1, -c)
    return kernels.tridiag_solve(off, diag, off, y)


def tikhonov_matrix(n, lam):
    """Dense ``I + n*lam*D^T D`` (for oracles and diagnostics)."""
    d = np.diff(np.eye(n), axis=0)
    return np.eye(n) + n * lam * d.T @ d


def tv_fit(y, p):
    """Exact minimizer of ``mean((y - f)**2) + lam * sum(|diff(f)|)``."""
    lam = _params(p, TVParams).lam
    y = as_sample(y, "y")
    n = y.shape[0]
    if n < 2:
        raise InvalidInputError("tv_fit needs n >= 2")
    if lam == 0.0:
        return y.copy()
    # rescale to the 0.5*||y - f||^2 + lam' * TV(f) form the kernel solves
    return kernels.tv1d_denoise(y, 0.5 * n * lam)


def tv_objective(y, f, lam):
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    return float(np.mean((y - f) ** 2) + lam * np.abs(np.diff(f)).sum())


def tikhonov_objective(y, f, lam):
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    return float(np.mean((y - f) ** 2) + lam * (np.diff(f) ** 2).sum())


def _bisect_multiplier(penalty_at, budget, hi, max_iters=200):
    """Smallest multiplier whose fit satisfies ``penalty_at(mu) <= budget``.

    ``penalty_at`` must be non-increasing in ``mu``; returns the fit at the
    feasible end of the final bracket.
    """
    pen, fit = penalty_at(hi)
    while pen > budget:
        hi *= 2.0
        pen, fit = penalty_at(hi)
    lo = 0.0
    best = fit
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        pen, fit = penalty_at(mid)
        if pen > budget:
            lo = mid
        else:
            hi, best = mid, fit
            if pen >= budget * (1 - 1e-15):
                break
    return best


def tikhonov_ball_fit(y, budget):
    """Projection onto ``{f : sum(diff(f)**2) <= budget}``."""
    y = as_sample(y, "y")
    budget = _check_lam(budget)
    n = y.shape[0]
    if n < 2:
        raise InvalidInputError("tikhonov_ball_fit needs n >= 2")
    if (np.diff(y) ** 2).sum() <= budget:
        return y.copy()
    if budget == 0.0:
        return np.full(n, y.mean())

    def penalty_at(mu):
        f = tikhonov_fit(y, mu / n)
        return float((np.diff(f) ** 2).sum()), f

    return _bisect_multiplier(penalty_at, budget, hi=1.0)


def tv_ball_fit(y, budget):
    """Projection onto ``{f : sum(|diff(f)|) <= budget}``."""
    y = as_sample(y, "y")
    budget = _check_lam(budget)
    n = y.shape[0]
    if n < 2:
        raise InvalidInputError("tv_ball_fit needs n >= 2")
    if np.abs(np.diff(y)).sum() <= budget:
        return y.copy()
    if budget == 0.0:
        return np.full(n, y.mean())

    def penalty_at(lam):
        f = kernels.tv1d_denoise(y, lam)
        return float(np.abs(np.diff(f)).sum()), f

    # beyond this weight the TV solution is constant
    lam_max = float(np.abs(np.cumsum(y - y.mean())).max()) + 1e-300
    return _bisect_multiplier(penalty_at, budget, hi=lam_max)


def tikhonov_ball_method(budget, n=None):
    """Constraint-form Tikhonov: exact projection onto a roughness ellipsoid."""
    budget = _check_lam(budget)
    return PredictorMethod(
        f"tikhonov_ball(c={budget:g})", lambda u: tikhonov_ball_fit(u, budget),
        is_convex_class=True, n=n,
    )


def tv_ball_method(budget, n=None):
    """Constraint-form TV: exact projection onto a total-variation ball."""
    budget = _check_lam(budget)
    return PredictorMethod(
        f"tv_ball(c={budget:g})", lambda u: tv_ball_fit(u, budget),
        is_convex_class=True, n=n,
    )


def tikhonov_method(lam, n=None):
    p = TikhonovParams(float(lam))
    return PredictorMethod(f"tikhonov(lam={p.lam:g})", lambda u: tikhonov_fit(u, p), n=n)


def tv_method(lam, n=None):
    p = TVParams(float(lam))
    return PredictorMethod(f"tv(lam={p.lam:g})", lambda u: tv_fit(u, p), n=n)


# -- projections onto convex sets --------------------------------------------


@dataclass(frozen=True)
class Box:
    """Coordinate-wise interval ``lower <= f_i <= upper``."""

    lower: float | tuple = -1.0
    upper: float | tuple = 1.0


@dataclass(frozen=True)
class ConstantInterval:
    """Constant vectors ``c * 1`` with ``lower <= c <= upper``."""

    lower: float = -math.inf
    upper: float = math.inf


@dataclass(frozen=True)
class MonotoneCone:
    """Monotone sequences; non-decreasing unless ``increasing=False``."""

    increasing: bool = True


def set_from_dict(spec):
    """Build a set description from a config mapping with a ``kind`` key."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    kinds = {"box": Box, "constants": ConstantInterval, "monotone": MonotoneCone}
    if kind not in kinds:
        raise InvalidInputError(f"unknown set kind {kind!r}; expected one of {sorted(kinds)}")
    try:
        if kind == "box":
            spec = {k: tuple(v) if isinstance(v, list) else v for k, v in spec.items()}
        return kinds[kind](**spec)
    except TypeError as exc:
        raise InvalidInputError(str(exc)) from exc


def projection_predictor(set_spec, n=None):
    """Exact Euclidean projection onto a closed convex set, as a method."""
    if isinstance(set_spec, dict):
        set_spec = set_from_dict(set_spec)

    if isinstance(set_spec, Box):
        lo = np.asarray(set_spec.lower, dtype=float)
        hi = np.asarray(set_spec.upper, dtype=float)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InvalidInputError("box needs lower <= upper")
        if n is not None and (lo.size not in (1, n) or hi.size not in (1, n)):
            raise InvalidInputError("box bounds do not match n")

        def fit(u):
            return np.clip(u, lo, hi)

        return PredictorMethod("box_projection", fit, is_convex_class=True, n=n)

    if isinstance(set_spec, ConstantInterval):
        lo, hi = float(set_spec.lower), float(set_spec.upper)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise InvalidInputError("constant interval needs lower <= upper")

        def fit(u):
            return np.full_like(u, min(max(u.mean(), lo), hi))

        return PredictorMethod("constant_projection", fit, is_convex_class=True, n=n)

    if isinstance(set_spec, MonotoneCone):
        if set_spec.increasing:
            fit = kernels.pav_increasing
        else:

            def fit(u):
                return -kernels.pav_increasing(-u)

        return PredictorMethod("monotone_projection", fit, is_convex_class=True, n=n)

    raise InvalidInputError(f"unsupported set specification: {set_spec!r}")


def check_firm_nonexpansive(m, fstar_vals, u, slack=1e-9):
    """Evaluate ``||M(f*+u) - M(f*)||^2 <= <u, M(f*+u) - M(f*)>``.

    Returns ``(lhs, rhs, holds)``.
    """
    fstar_vals = as_sample(fstar_vals, "fstar")
    u = as_sample(u, "u")
    check_same_length(fstar_vals, u)
    diff = apply_method(m, fstar_vals + u) - apply_method(m, fstar_vals)
    lhs = emp_norm_sq(diff)
    rhs = emp_inner(u, diff)
    return lhs, rhs, bool(lhs <= rhs + slack)


# -- nuclear-norm ball ----------------------------------------------------


def project_l1_simplex(s, r):
    """Project a nonnegative vector onto ``{x >= 0, sum(x) <= r}``."""
    s = np.asarray(s, dtype=float)
    if s.sum() <= r:
        return s.copy()
    if r <= 0:
        return np.zeros_like(s)
    u = np.sort(s)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, u.size + 1)
    hits = np.flatnonzero(u - (css - r) / idx > 0)
    # index 0 always qualifies in exact arithmetic; rounding can lose it when r is tiny
    k = hits[-1] if hits.size else 0
    theta = (css[k] - r) / (k + 1)
    return np.maximum(s - theta, 0.0)


def project_nuclear_ball(S, r):
    """Frobenius projection of ``S`` onto ``{||S||_* <= r}``."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise InvalidInputError("S must be a matrix")
    if not np.all(np.isfinite(S)):
        raise NumericError("S contains non-finite entries")
    r = float(r)
    if r < 0:
        raise InvalidInputError("radius must be >= 0")
    try:
        U, s, Vt = np.linalg.svd(S, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
    if s.size == 0:
        return S.copy()
    s = np.where(s > SVD_RTOL * s[0], s, 0.0)
    if s.sum() <= r:
        return S.copy()
    t = project_l1_simplex(s, r)
    keep = t > 0
    return (U[:, keep] * t[keep]) @ Vt[keep]


def nuclear_norm(S):
    return float(np.linalg.svd(np.asarray(S, dtype=float), compute_uv=False).sum())


@dataclass(frozen=True)
class CameraMatrix:
    """Block-diagonal 2m x 3m projection built from m 2x3 blocks."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim != 3 or b.shape[1:] != (2, 3):
            raise InvalidInputError("camera blocks must have shape (m, 2, 3)")
        gram = np.einsum("kij,klj->kil", b, b)
        if not np.allclose(gram, np.eye(2), atol=1e-10, rtol=0):
            raise InvalidInputError("camera blocks must have orthonormal rows")
        object.__setattr__(self, "blocks", b)

    @property
    def m(self):
        return self.blocks.shape[0]

    def apply(self, S):
        """``R @ S`` for a 3m x p matrix ``S``."""
        p = S.shape[1]
        out = np.einsum("kij,kjp->kip", self.blocks, S.reshape(self.m, 3, p))
        return out.reshape(2 * self.m, p)

    def adjoint(self, Z):
        """``R.T @ Z`` for a 2m x p matrix ``Z``."""
        p = Z.shape[1]
        out = np.einsum("kji,kjp->kip", self.blocks, Z.reshape(self.m, 2, p))
        return out.reshape(3 * self.m, p)

    def dense(self):
        R = np.zeros((2 * self.m, 3 * self.m))
        for k, blk in enumerate(self.blocks):
            R[2 * k:2 * k + 2, 3 * k:3 * k + 3] = blk
        return R


def spectral_norm_sq(R, iters=50):
    """Power-method estimate of ``||R||_2^2``."""
    x = np.ones((3 * R.m, 1)) / math.sqrt(3 * R.m)
    val = 0.0
    for _ in range(iters):
        z = R.adjoint(R.apply(x))
        val = float(np.linalg.norm(z))
        if val == 0.0:
            return 0.0
        x = z / val
    return val


def _ls_objective(Y, R, S):
    resid = Y - R.apply(S)
    return float(np.vdot(resid, resid))


def nuclear_ball_ls(Y, R, p, return_history=False):
    """Projected gradient for ``min ||Y - R S||_F^2  s.t.  ||S||_* <= radius``.

    Starts from the projection of ``R^T Y``; stops when the relative
    objective decrease falls below ``p.tol`` or after ``p.max_iters``
    iterations. The objective is checked to be non-increasing every step.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != 2 * R.m:
        raise InvalidInputError(f"Y must be {2 * R.m} x p, got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise NumericError("Y contains non-finite entries")
    step = p.step
    if step is None:
        lip = spectral_norm_sq(R)
        step = 1.0 / lip if lip > 0 else 1.0
    S = project_nuclear_ball(R.adjoint(Y), p.radius)
    obj = _ls_objective(Y, R, S)
    history = [obj]
    # roundoff floor for the monotonicity check
    slack = 1e-12 * (float(np.vdot(Y, Y)) + obj)
    for _ in range(int(p.max_iters)):
        if obj == 0.0:
            break
        grad = R.adjoint(R.apply(S) - Y)
        S_new = project_nuclear_ball(S - step * grad, p.radius)
        obj_new = _ls_objective(Y, R, S_new)
        if not math.isfinite(obj_new):
            raise NumericError("objective became non-finite")
        if obj_new > obj + slack:
            raise NumericError(f"objective increased from {obj!r} to {obj_new!r}")
        decrease = obj - obj_new
        if obj_new <= obj:
            S, obj = S_new, obj_new
            history.append(obj)
        if decrease <= p.tol * max(obj, 1e-300):
            break
    if return_history:
        return S, history
    return S


def nuclear_ball_method(R, num_points, params):
    """Wrap :func:`nuclear_ball_ls` as a method on flattened ``2m x p`` responses.

    Fitted values are ``R @ S_hat``, flattened row-major.
    """
    if isinstance(params, (int, float)):
        params = NuclearBallParams(float(params))
    shape = (2 * R.m, int(num_points))

    def fit(u):
        S = nuclear_ball_ls(u.reshape(shape), R, params)
        return R.apply(S).ravel()

    return PredictorMethod(
        f"nuclear_ball(r={params.radius:g})",
        fit,
        is_convex_class=True,
        n=shape[0] * shape[1],
    )
