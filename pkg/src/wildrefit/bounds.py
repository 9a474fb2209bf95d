"""Turning wild replicates into bounds on estimation error and MSE.

The wild complexity W(r) is evaluated through the identity
``W(||fwild - fhat||) = wild optimism``, so every quantity here costs one
method call per noise scale.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    InvalidInputError,
    MethodError,
    NumericError,
    WildRefitError,
    apply_method,
    as_sample,
    check_same_length,
    emp_inner,
    emp_norm,
    emp_norm_sq,
)
from .wild import compute_residuals, draw_signs, replicate_from_parts

MONOTONE_SLACK = 1e-8


def default_rho_grid(num=24, lo=0.25, hi=8.0):
    return np.geomspace(lo, hi, num)


class UnreachableTargetError(WildRefitError):
    """No noise scale gives the requested wild radius.

    ``side`` is ``"below"`` when even rho -> 0 overshoots the target and
    ``"above"`` when the largest tried rho falls short.
    """

    def __init__(self, message, side, rho=None):
        super().__init__(message)
        self.side = side
        self.rho = rho


class NonMonotoneWarning(UserWarning):
    """The wild radius decreased while the noise scale increased."""


@dataclass(frozen=True)
class RhoSweepPoint:
    rho: float
    r_tilde: float
    w_complexity: float
    b1: float
    b2: float | None


@dataclass(frozen=True)
class RiskReport:
    rho_star: float
    r_bound: float
    mse_bound: float
    optimism_bound: float
    rho_opt: float
    crossing_status: str
    sweep: list = field(repr=False)
    seed: int = 0
    pilot_tag: str = "fhat"


@dataclass(frozen=True)
class OracleDiagnostics:
    fstar: np.ndarray = field(repr=False)
    fdagger: np.ndarray = field(repr=False)
    true_mse: float
    true_optimism: float
    empirical_excess: float
    rhat: float
    h_term: float
    pilot_error: float
    t: float
    r: float
    w_infnorm: float


class Crossing(NamedTuple):
    rho_star: float
    r_bound: float
    status: str  # "crossing", "b1_dominates" or "no_crossing"


class Selection(NamedTuple):
    label: str
    bounds: dict
    errors: dict


def _setup(y, fhat, seed, pilot):
    y = as_sample(y, "y")
    fhat = as_sample(fhat, "fhat")
    n = check_same_length(y, fhat)
    residuals = compute_residuals(y, fhat if pilot is None else pilot)
    return fhat, residuals, draw_signs(n, seed)


def _check_grid(rho_grid):
    grid = np.asarray(rho_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidInputError("rho grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise InvalidInputError("rho grid must hold positive finite values")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("rho grid must be strictly ascending")
    return grid


def sweep_from_parts(m, fhat, residuals, signs, rho_grid, seed=0):
    points = []
    for rho in _check_grid(rho_grid):
        try:
            rep = replicate_from_parts(m, fhat, residuals, signs, rho, seed)
        except MethodError as exc:
            raise MethodError(exc.method_name, f"at rho={rho:g}: {exc}") from exc
        points.append(
            RhoSweepPoint(
                rho=float(rho),
                r_tilde=rep.wild_radius,
                w_complexity=rep.wild_optimism,
                b1=rep.b1,
                b2=rep.b2,
            )
        )
    return points


def rho_sweep(m, y, fhat, seed, rho_grid, pilot=None):
    """One replicate per noise scale, all sharing the sign vector from ``seed``."""
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    return sweep_from_parts(m, fhat, residuals, signs, rho_grid, seed)


def calibrate_from_parts(m, fhat, residuals, signs, target_r, tol, rho_max=8.0, seed=0,
                         max_bisections=200):
    """Bisect on rho until the wild radius is within ``tol`` of ``target_r``.

    Returns the replicate at the accepted rho.
    """
    target_r = float(target_r)
    tol = float(tol)
    if not (target_r > 0 and math.isfinite(target_r)):
        raise InvalidInputError("target radius must be positive and finite")
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    if not rho_max > 0:
        raise InvalidInputError("rho_max must be positive")

    def rep_at(rho):
        return replicate_from_parts(m, fhat, residuals, signs, rho, seed)

    floor = emp_norm(apply_method(m, fhat) - fhat)
    if floor > target_r + tol:
        raise UnreachableTargetError(
            f"wild radius at rho -> 0 is already {floor:.6g} > target {target_r:.6g}",
            "below",
        )

    hi = float(rho_max)
    ceiling = hi * 2.0**20
    rep_hi = rep_at(hi)
    while rep_hi.wild_radius < target_r - tol:
        if hi >= ceiling:
            raise UnreachableTargetError(
                f"wild radius {rep_hi.wild_radius:.6g} at rho={hi:.6g} stays below "
                f"target {target_r:.6g}; the constraint set is too small",
                "above",
                hi,
            )
        hi *= 2.0
        rep_hi = rep_at(hi)
    if abs(rep_hi.wild_radius - target_r) <= tol:
        return rep_hi

    lo, r_lo, r_hi = 0.0, floor, rep_hi.wild_radius
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        rep = rep_at(mid)
        r_mid = rep.wild_radius
        if r_mid < r_lo - MONOTONE_SLACK or r_mid > r_hi + MONOTONE_SLACK:
            warnings.warn(
                f"wild radius not monotone in rho near rho={mid:.6g}",
                NonMonotoneWarning,
                stacklevel=3,
            )
        if abs(r_mid - target_r) <= tol:
            return rep
        if r_mid < target_r:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    raise NumericError(
        f"calibration stalled at rho~{hi:.6g}: radius jumps over target {target_r:.6g}"
    )


def calibrate_rho(m, y, fhat, seed, target_r, tol=1e-10, rho_max=8.0, pilot=None):
    """Noise scale at which the wild radius equals ``target_r`` (within ``tol``)."""
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    rep = calibrate_from_parts(m, fhat, residuals, signs, target_r, tol, rho_max, seed)
    return rep.rho


def wild_complexity_at(m, y, fhat, seed, r, tol=1e-10, rho_max=8.0, pilot=None):
    """W(r): wild optimism of the replicate calibrated to radius ``r``."""
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    rep = calibrate_from_parts(m, fhat, residuals, signs, r, tol, rho_max, seed)
    return rep.wild_optimism


def ball_sup_replicate(m, fhat, weights, signs, radius, tol=1e-10, rho_max=8.0, seed=0):
    """Replicate attaining ``sup <signs*weights, f - fhat>`` over the radius ball.

    Refits on ``fhat + rho*signs*weights`` at the calibrated rho. A target
    beyond the reachable range is clamped to the nearest end (rho -> 0, or
    the largest rho tried). Returns ``None`` for all-zero weights or a
    zero radius.
    """
    if not np.any(weights) or radius <= 0:
        return None
    try:
        return calibrate_from_parts(m, fhat, weights, signs, radius, tol, rho_max, seed)
    except UnreachableTargetError as exc:
        rho = 1e-12 if exc.side == "below" else exc.rho
        return replicate_from_parts(m, fhat, weights, signs, rho, seed)


def ball_sup(m, fhat, weights, signs, radius, tol=1e-10, rho_max=8.0):
    rep = ball_sup_replicate(m, fhat, weights, signs, radius, tol, rho_max)
    return 0.0 if rep is None else rep.wild_optimism


def find_crossing(sweep):
    """Locate where B1 - B2 changes sign, refined by linear interpolation in rho.

    Points with undefined B2 are skipped. If B1 >= B2 already at the first
    usable point, that point is returned (``"b1_dominates"``); if B1 < B2
    throughout, the last point is returned (``"no_crossing"``). Off the
    crossing ``r_bound`` is ``max(B1, B2)``.
    """
    pts = [p for p in sweep if p.b2 is not None]
    if len(pts) < 2:
        raise InvalidInputError("need at least two sweep points with defined B2")
    rho = np.array([p.rho for p in pts])
    b1 = np.array([p.b1 for p in pts])
    b2 = np.array([p.b2 for p in pts])
    diff = b1 - b2
    if diff[0] >= 0:
        return Crossing(float(rho[0]), float(max(b1[0], b2[0])), "b1_dominates")
    above = np.nonzero(diff >= 0)[0]
    if above.size == 0:
        return Crossing(float(rho[-1]), float(max(b1[-1], b2[-1])), "no_crossing")
    k = int(above[0])
    if diff[k] == 0:
        return Crossing(float(rho[k]), float(b1[k]), "crossing")
    frac = -diff[k - 1] / (diff[k] - diff[k - 1])
    rho_star = rho[k - 1] + frac * (rho[k] - rho[k - 1])
    r_bound = b1[k - 1] + frac * (b1[k] - b1[k - 1])
    return Crossing(float(rho_star), float(r_bound), "crossing")


def refine_crossing(m, y, fhat, seed, sweep, tol=1e-10, pilot=None, max_bisections=100):
    """High-accuracy crossing: bisect on rho for B1 = B2 inside the grid bracket."""
    coarse = find_crossing(sweep)
    if coarse.status != "crossing":
        return coarse
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    pts = [p for p in sweep if p.b2 is not None]
    k = next(i for i, p in enumerate(pts) if p.b1 - p.b2 >= 0)
    lo, hi = pts[k - 1].rho, pts[k].rho
    rep = None
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        rep = replicate_from_parts(m, fhat, residuals, signs, mid, seed)
        if rep.b2 is None:
            lo = mid
            continue
        d = rep.b1 - rep.b2
        if abs(d) <= tol:
            break
        if d < 0:
            lo = mid
        else:
            hi = mid
    return Crossing(rep.rho, max(rep.b1, rep.b2 if rep.b2 is not None else 0.0), "crossing")


def _mse_from_replicate(y, fhat, rep):
    excess = max(0.0, emp_norm_sq(y - fhat) - emp_norm_sq(rep.residuals))
    return excess + 2.0 * rep.wild_optimism


def mse_upper_bound(m, y, fhat, seed, rho, pilot=None):
    """Wild MSE estimate ``max(0, ||y-fhat||^2 - ||w~||^2) + 2*Opt_rho``.

    With the default pilot (``fhat``) the first term vanishes. Returns
    ``(bound, replicate)``.
    """
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    rep = replicate_from_parts(m, fhat, residuals, signs, rho, seed)
    return _mse_from_replicate(y, fhat, rep), rep


def risk_report(m, y, fhat, seed, rho_grid=None, pilot=None, tol=1e-10):
    """Sweep, crossing bound on the estimation error, then the optimism bound.

    The optimism bound is the wild optimism at the rho whose wild radius is
    twice the crossing bound.
    """
    grid = default_rho_grid() if rho_grid is None else rho_grid
    y = as_sample(y, "y")
    fhat, residuals, signs = _setup(y, fhat, seed, pilot)
    sweep = sweep_from_parts(m, fhat, residuals, signs, grid, seed)
    if sum(p.b2 is not None for p in sweep) < 2:
        # zero residuals (or a frozen refit): no crossing to locate
        cross = Crossing(sweep[0].rho, max(p.b1 for p in sweep), "degenerate")
    else:
        cross = find_crossing(sweep)
    rep = None
    if cross.r_bound > 0:
        rep = ball_sup_replicate(m, fhat, residuals, signs, 2.0 * cross.r_bound, tol, seed=seed)
    opt = 0.0 if rep is None else rep.wild_optimism
    rep_rho = cross.rho_star if rep is None else rep.rho
    excess = max(0.0, emp_norm_sq(y - fhat) - emp_norm_sq(residuals))
    return RiskReport(
        rho_star=cross.rho_star,
        r_bound=cross.r_bound,
        mse_bound=excess + 2.0 * opt,
        optimism_bound=opt,
        rho_opt=rep_rho,
        crossing_status=cross.status,
        sweep=sweep,
        seed=int(seed),
        pilot_tag="fhat" if pilot is None else "explicit",
    )


def model_select(candidates, y, seed, rho, pilot=None):
    """Pick the candidate with the smallest wild MSE bound at ``rho``.

    ``candidates`` is a sequence of ``(label, method)``. Failing candidates
    are dropped and their errors recorded; ties go to the earliest label.
    """
    candidates = list(candidates)
    if not candidates:
        raise InvalidInputError("model_select needs at least one candidate")
    labels = [lab for lab, _ in candidates]
    if len(set(labels)) != len(labels):
        raise InvalidInputError("candidate labels must be unique")
    y = as_sample(y, "y")
    bounds, errors = {}, {}
    for label, method in candidates:
        try:
            fhat = apply_method(method, y)
            bounds[label], _ = mse_upper_bound(method, y, fhat, seed, rho, pilot)
        except WildRefitError as exc:
            errors[label] = str(exc)
    if not bounds:
        raise MethodError("model_select", "; ".join(f"{k}: {v}" for k, v in errors.items()))
    best = min(bounds, key=lambda lab: (bounds[lab], labels.index(lab)))
    return Selection(best, bounds, errors)


def deviation_term(r, approx_err, w_infnorm, t, n):
    """``(3r + ||f_dagger - f*||) * 2 ||w||_inf t / sqrt(n)``."""
    return (3.0 * r + approx_err) * (2.0 * w_infnorm * t / math.sqrt(n))


def oracle_diagnostics(m, y, fhat, fstar, pilot=None, seed=0, t=2.0, r=1.0, tol=1e-10):
    """Truth-dependent quantities, available only when ``fstar`` is known."""
    y = as_sample(y, "y")
    fhat = as_sample(fhat, "fhat")
    fstar = as_sample(fstar, "fstar")
    n = check_same_length(y, fhat, fstar)
    if not t > 0:
        raise InvalidInputError("t must be positive")
    if not r >= 0:
        raise InvalidInputError("r must be nonnegative")
    pilot_vals = fhat if pilot is None else as_sample(pilot, "pilot")
    check_same_length(y, pilot_vals)
    fdagger = apply_method(m, fstar)
    w = y - fstar
    w_inf = float(np.max(np.abs(w)))
    signs = draw_signs(n, seed)
    pilot_error = ball_sup(m, fhat, pilot_vals - fstar, signs, 2.0 * r, tol)
    return OracleDiagnostics(
        fstar=fstar,
        fdagger=fdagger,
        true_mse=emp_norm_sq(fhat - fstar),
        true_optimism=emp_inner(w, fhat - fstar),
        empirical_excess=emp_norm_sq(y - fhat) - emp_norm_sq(w),
        rhat=emp_norm(fhat - fdagger),
        h_term=deviation_term(r, emp_norm(fdagger - fstar), w_inf, t, n),
        pilot_error=pilot_error,
        t=float(t),
        r=float(r),
        w_infnorm=w_inf,
    )


class OptimismCheck(NamedTuple):
    true_optimism: float
    wild_optimism: float
    h_term: float
    pilot_error: float
    holds: bool


def optimism_bound_check(m, y, fhat, fstar, seed, r, t=2.0, pilot=None, tol=1e-10):
    """Compare true optimism with wild optimism + deviation + pilot terms.

    The wild optimism is taken at the rho whose wild radius is ``2r``.
    """
    diag = oracle_diagnostics(m, y, fhat, fstar, pilot, seed, t, r, tol)
    fhat_s, residuals, signs = _setup(y, fhat, seed, pilot)
    wild_opt = ball_sup(m, fhat_s, residuals, signs, 2.0 * r, tol)
    rhs = wild_opt + diag.h_term + diag.pilot_error
    return OptimismCheck(
        diag.true_optimism, wild_opt, diag.h_term, diag.pilot_error,
        bool(diag.true_optimism <= rhs),
    ), diag
