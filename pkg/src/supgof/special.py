"""Special functions behind Poisson/binomial tail control.

This module implements the deviation-exponent function ``h`` together with
its inverse on the nonnegative half-line, the piecewise rate surrogate
``gamma_rate``, the (principal, nonnegative-branch) Lambert W function, and
the Bennett-type tail bounds built from ``h``.  Everything here is a pure
function of its inputs and safe for concurrent use.

Conventions
-----------
* ``h(x) = (1+x)*log(1+x) - x`` for ``x > -1`` with the boundary value
  ``h(-1) = 1``; natural logarithms throughout.
* ``h_inverse`` inverts the restriction of ``h`` to ``[0, inf)`` only.
* Bounds that are probabilities by contract are clamped to ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SolverError",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "h",
    "h_inverse",
    "gamma_rate",
    "lambert_w",
    "bennett_upper_tail_bound",
    "bennett_two_sided_bound",
    "binomial_bennett_bound",
]


class SolverError(RuntimeError):
    """An iterative solver failed to converge within its iteration cap."""


@dataclass(frozen=True)
class ToleranceConfig:
    """Convergence policy for the iterative inversions in this module.

    rel_tol is measured relative to ``max(target, 1)``, so it acts as an
    absolute tolerance for small targets and a relative one for large
    targets.  abs_tol guards bracket widths near zero.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise ValueError(f"abs_tol must be positive, got {self.abs_tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")


DEFAULT_TOL = ToleranceConfig()

# Below this point the direct formula for h loses all significant digits to
# cancellation; the alternating series x^2/2 - x^3/6 + x^4/12 - x^5/20 is
# then exact to double precision.
_H_SERIES_CUTOFF = 1e-4


def _h_scalar(x: float) -> float:
    if math.isnan(x) or x < -1.0:
        raise ValueError(f"h is defined on [-1, inf), got {x!r}")
    if x == -1.0:
        return 1.0
    ax = abs(x)
    if ax < _H_SERIES_CUTOFF:
        return x * x * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 12.0 - x / 20.0)))
    return (1.0 + x) * math.log1p(x) - x


def h(x):
    """Deviation exponent ``(1+x)log(1+x) - x`` with ``h(-1) = 1``.

    Accepts scalars or arrays; nonnegative everywhere on the domain and
    strictly increasing on ``[0, inf)``.
    """
    if np.ndim(x) == 0:
        return _h_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < -1.0):
        raise ValueError("h is defined on [-1, inf)")
    out = np.empty_like(arr)
    small = np.abs(arr) < _H_SERIES_CUTOFF
    boundary = arr == -1.0
    large = ~small & ~boundary
    xs = arr[small]
    out[small] = xs * xs * (0.5 + xs * (-1.0 / 6.0 + xs * (1.0 / 12.0 - xs / 20.0)))
    xl = arr[large]
    out[large] = (1.0 + xl) * np.log1p(xl) - xl
    out[boundary] = 1.0
    return out


def _h_prime(x: float) -> float:
    return math.log1p(x)


def gamma_rate(x):
    """Piecewise rate surrogate: ``sqrt(x)`` for ``x <= 1``, ``x/log(e x)`` above.

    Continuous at 1 (both branches equal 1) and equivalent to ``h_inverse``
    up to universal constants.
    """
    if np.ndim(x) == 0:
        xf = float(x)
        if math.isnan(xf) or xf < 0.0:
            raise ValueError(f"gamma_rate is defined on [0, inf), got {x!r}")
        if xf <= 1.0:
            return math.sqrt(xf)
        return xf / (1.0 + math.log(xf))
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ValueError("gamma_rate is defined on [0, inf)")
    return np.where(arr <= 1.0, np.sqrt(arr), arr / (1.0 + np.log(np.maximum(arr, 1.0))))


def _h_inverse_scalar(y: float, tol: ToleranceConfig) -> float:
    if math.isnan(y) or y < 0.0:
        raise ValueError(f"h_inverse is defined on [0, inf), got {y!r}")
    if y == 0.0:
        return 0.0
    # Stop strictly inside the contract tolerance so callers see margin.
    target_tol = 0.25 * tol.rel_tol * max(y, 1.0)

    # Seed from the order-correct surrogate, then bracket.
    lo = 0.0
    hi = max(2.0 * math.sqrt(y), 4.0 * y / (1.0 + math.log(max(y, 1.0))) + 2.0)
    for _ in range(tol.max_iter):
        if _h_scalar(hi) >= y:
            break
        hi *= 2.0
    else:
        raise SolverError(f"h_inverse bracket search failed for y={y!r}")

    x = gamma_rate(y)
    if not (lo < x < hi):
        x = 0.5 * (lo + hi)
    for _ in range(tol.max_iter):
        fx = _h_scalar(x) - y
        if abs(fx) <= target_tol:
            return x
        if fx > 0.0:
            hi = x
        else:
            lo = x
        dfx = _h_prime(x)
        step_ok = dfx > 0.0
        if step_ok:
            x_new = x - fx / dfx
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if hi - lo <= tol.abs_tol:
            return 0.5 * (lo + hi)
        x = x_new
    raise SolverError(f"h_inverse did not converge for y={y!r}")


def h_inverse(y, tol: ToleranceConfig = DEFAULT_TOL):
    """Inverse of ``h`` restricted to ``[0, inf)``.

    Returns ``x >= 0`` with ``|h(x) - y| <= rel_tol * max(y, 1)``; monotone
    nondecreasing in ``y`` and exact at 0.  Scalars or arrays.
    """
    if np.ndim(y) == 0:
        return _h_inverse_scalar(float(y), tol)
    arr = np.asarray(y, dtype=float)
    return np.array([_h_inverse_scalar(float(v), tol) for v in arr.ravel()]).reshape(arr.shape)


def lambert_w(x, tol: ToleranceConfig = DEFAULT_TOL):
    """Principal-branch Lambert W on ``[0, inf)``: solves ``w * e**w = x``.

    Halley iteration seeded with ``log(1+x)``, with a bisection fallback on
    ``[0, x]`` if an iterate escapes.
    """
    if np.ndim(x) != 0:
        arr = np.asarray(x, dtype=float)
        return np.array([lambert_w(float(v), tol) for v in arr.ravel()]).reshape(arr.shape)
    xf = float(x)
    if math.isnan(xf) or xf < 0.0:
        raise ValueError(f"lambert_w is defined on [0, inf), got {x!r}")
    if xf == 0.0:
        return 0.0
    target_tol = tol.rel_tol * max(xf, 1.0)
    w = math.log1p(xf)
    lo, hi = 0.0, max(xf, 1.0)
    for _ in range(tol.max_iter):
        ew = math.exp(w)
        f = w * ew - xf
        if abs(f) <= target_tol:
            return w
        if f > 0.0:
            hi = min(hi, w)
        else:
            lo = max(lo, w)
        # Halley step for f(w) = w e^w - x.
        denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0)
        w_new = w - f / denom if denom != 0.0 else math.nan
        if not (lo < w_new < hi):
            w_new = 0.5 * (lo + hi)
        w = w_new
    raise SolverError(f"lambert_w did not converge for x={x!r}")


def bennett_upper_tail_bound(rho, u):
    """Poisson upper-tail bound ``exp(-rho*h(u))`` on ``P{Poisson(rho) >= rho(1+u)}``."""
    rho_arr = np.asarray(rho, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(rho_arr)) or np.any(rho_arr <= 0.0):
        raise ValueError("rho must be positive and finite")
    if np.any(np.isnan(u_arr)) or np.any(u_arr < 0.0):
        raise ValueError("u must be nonnegative")
    out = np.exp(-rho_arr * h(u_arr))
    return float(out) if np.ndim(rho) == 0 and np.ndim(u) == 0 else out


def bennett_two_sided_bound(rho, u):
    """Two-sided Poisson bound ``min(1, 2*exp(-rho*h(u)))``."""
    out = np.minimum(1.0, 2.0 * bennett_upper_tail_bound(rho, u))
    return float(out) if np.ndim(out) == 0 else out


def binomial_bennett_bound(n, pi, u):
    """Two-sided binomial bound ``min(1, 2*exp(-n*pi*(1-pi)*h(u)))``.

    The variance factor ``n*pi*(1-pi)`` may vanish (degenerate cells); the
    bound then clamps to 1.
    """
    n_arr = np.asarray(n, dtype=float)
    pi_arr = np.asarray(pi, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(n_arr)) or np.any(n_arr < 1):
        raise ValueError("n must be a positive count")
    if np.any(np.isnan(pi_arr)) or np.any(pi_arr < 0.0) or np.any(pi_arr > 1.0):
        raise ValueError("pi must lie in [0, 1]")
    if np.any(np.isnan(u_arr)) or np.any(u_arr < 0.0):
        raise ValueError("u must be nonnegative")
    variance = n_arr * pi_arr * (1.0 - pi_arr)
    out = np.minimum(1.0, 2.0 * np.exp(-variance * h(u_arr)))
    if np.ndim(n) == 0 and np.ndim(pi) == 0 and np.ndim(u) == 0:
        return float(out)
    return out
