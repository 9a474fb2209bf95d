"""Fixed-design vector geometry and the black-box predictor contract.

Everything in the package works on length-``n`` float64 arrays holding
function values at the design points; covariates are never stored here.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class WildRefitError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(WildRefitError, ValueError):
    """Malformed or inconsistent input."""


class MethodError(WildRefitError, RuntimeError):
    """A predictor failed internally."""

    def __init__(self, method_name, message):
        super().__init__(f"method {method_name!r} failed: {message}")
        self.method_name = method_name


class NumericError(WildRefitError, ArithmeticError):
    """Non-finite values or a failed numerical routine."""


def as_sample(a, name="vector"):
    """Validate and return ``a`` as a 1-D finite float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InvalidInputError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def check_same_length(*arrays):
    n = arrays[0].shape[0]
    for a in arrays[1:]:
        if a.shape[0] != n:
            raise InvalidInputError(f"length mismatch: {n} vs {a.shape[0]}")
    return n


def emp_norm(a):
    """Empirical norm ``sqrt(mean(a**2))``."""
    a = as_sample(a)
    return float(np.sqrt(np.dot(a, a) / a.shape[0]))


def emp_norm_sq(a):
    a = as_sample(a)
    return float(np.dot(a, a) / a.shape[0])


def emp_inner(a, b):
    """Empirical inner product ``mean(a * b)``."""
    a = as_sample(a, "a")
    b = as_sample(b, "b")
    n = check_same_length(a, b)
    return float(np.dot(a, b) / n)


@dataclass(frozen=True)
class EmpiricalGeometry:
    """Norm and inner product over a fixed design of ``n`` points."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidInputError("n must be a positive integer")

    def _check(self, a):
        a = as_sample(a)
        if a.shape[0] != self.n:
            raise InvalidInputError(f"expected length {self.n}, got {a.shape[0]}")
        return a

    def norm(self, a):
        return emp_norm(self._check(a))

    def inner(self, a, b):
        return emp_inner(self._check(a), self._check(b))


@dataclass(frozen=True)
class PredictorMethod:
    """A black-box map from a response vector to fitted values.

    ``fit`` must be a pure function of its argument; ``n`` (if set) pins the
    design size the method was configured for.
    """

    name: str
    fit: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    is_convex_class: bool = False
    deterministic: bool = True
    n: int | None = None

    def __call__(self, u):
        return apply_method(self, u)


def apply_method(m, u):
    """Return ``M(u)``, wrapping solver failures in :class:`MethodError`."""
    u = as_sample(u, "responses")
    if m.n is not None and u.shape[0] != m.n:
        raise InvalidInputError(
            f"method {m.name!r} configured for n={m.n}, got {u.shape[0]} responses"
        )
    try:
        out = m.fit(u.copy())
    except WildRefitError as exc:
        if isinstance(exc, MethodError):
            raise
        raise MethodError(m.name, str(exc)) from exc
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise MethodError(m.name, str(exc)) from exc
    out = np.asarray(out, dtype=np.float64)
    if out.shape != u.shape:
        raise MethodError(m.name, f"fit returned shape {out.shape}, expected {u.shape}")
    if not np.all(np.isfinite(out)):
        raise MethodError(m.name, "fit returned non-finite values")
    return out


def identity_method(n=None):
    """Unconstrained least squares: interpolates the responses."""
    return PredictorMethod("identity", lambda u: u, is_convex_class=True, n=n)


def constant_method(n=None):
    """Projection onto constant vectors."""
    return PredictorMethod(
        "constant", lambda u: np.full_like(u, u.mean()), is_convex_class=True, n=n
    )
