"""Adaptive quadrature helpers shared by the Lévy, Orlicz and kernel modules.

Everything here wraps :func:`scipy.integrate.quad` (QUADPACK, Gauss-Kronrod
panels) and adds the two things the rest of the package needs on top of it:
substitutions that tame algebraic endpoint singularities, and a dyadic panel
series that decides whether an improper integral converges at all.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

RTOL = 1e-9
ATOL = 1e-12


class QuadratureError(RuntimeError):
    """Raised when an integral does not converge to the requested tolerance."""

    def __init__(self, message: str, partial: dict | None = None):
        super().__init__(message)
        self.partial = dict(partial or {})


class DivergenceError(QuadratureError):
    """Raised when an integral is infinite (as opposed to merely hard)."""


def quad(func: Callable[[float], float], a: float, b: float, *, rtol: float = RTOL,
         atol: float = ATOL, limit: int = 400, points: Sequence[float] | None = None,
         what: str = "integral", loose: float = 1e-6, weight: str | None = None,
         wvar: float | None = None) -> float:
    """``scipy.integrate.quad`` that raises instead of warning.

    QUADPACK often flags roundoff even when the returned estimate is fine, so
    a warning is only fatal if the reported error exceeds ``loose`` relative
    to the value (or absolute, for tiny values).
    """
    if a == b:
        return 0.0
    kwargs = dict(epsabs=atol, epsrel=rtol, limit=limit, full_output=1)
    if points is not None and math.isfinite(a) and math.isfinite(b):
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = pts
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = integrate.quad(func, a, b, **kwargs)
    value, err = out[0], out[1]
    if not math.isfinite(value):
        raise DivergenceError(f"{what}: non-finite value on [{a}, {b}]", {"value": value})
    if len(out) > 3 and err > loose * max(1.0, abs(value)):
        raise QuadratureError(
            f"{what}: no convergence on [{a}, {b}] (value={value:.6g}, err={err:.2g})",
            {"value": value, "error": err},
        )
    return float(value)


def quad_complex(func: Callable[[float], complex], a: float, b: float, **kw) -> complex:
    re = quad(lambda x: func(x).real, a, b, **kw)
    im = quad(lambda x: func(x).imag, a, b, **kw)
    return complex(re, im)


def quad_from_zero(func: Callable[[float], float], b: float, **kw) -> float:
    """Integrate ``func`` over ``(0, b]`` when it may blow up at ``0``.

    Uses ``x = b e^{-v}``: a power singularity ``x^{-k}`` with ``k < 1``
    becomes an exponentially decaying, smooth integrand on ``[0, inf)``. The
    range stops near ``x = 1e-300``, or higher if ``func`` overflows there.
    The remaining tail is added in closed form from the local decay rate,
    which matters as ``k`` nears 1.
    """
    if b <= 0:
        return 0.0

    def g(v):
        x = b * math.exp(-v)
        return func(x) * x

    def safe(v):
        try:
            with np.errstate(all="ignore"):
                y = g(v)
        except (OverflowError, ZeroDivisionError):
            return None
        return y if math.isfinite(y) else None

    # deepest cutoff at which the integrand is still representable
    for floor in (1e-300, 1e-200, 1e-100, 1e-50, 1e-25):
        top = max(math.log(b / floor), 2.0)
        g1, g0 = safe(top), safe(top - 1.0)
        if g1 is not None and g0 is not None:
            break
    else:
        raise DivergenceError(f"{kw.get('what', 'integral')}: integrand not finite near 0",
                              {"value": math.nan})
    body = quad(g, 0.0, top, **kw)
    if abs(g1) <= 1e-15 * max(1.0, abs(body)):
        return body
    rate = math.log(abs(g0 / g1)) if g0 and g0 / g1 > 0 else 0.0
    if not rate > 0:
        raise DivergenceError(f"{kw.get('what', 'integral')}: integrand does not decay at 0",
                              {"value": body})
    return body + g1 / rate


def quad_log_range(func: Callable[[float], float], a: float, b: float, **kw) -> float:
    """Integrate over ``[a, b]`` (``0 < a < b``) in the variable ``log x``."""
    if b <= a:
        return 0.0

    def g(v):
        x = math.exp(v)
        return func(x) * x

    return quad(g, math.log(a), math.log(b), **kw)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def gauss_legendre(func: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """Fixed 24-point Gauss-Legendre rule on ``[a, b]`` (vectorised ``func``)."""
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) + half * _GL_NODES
    return float(half * np.dot(_GL_WEIGHTS, func(x)))


@dataclass
class SeriesResult:
    """Outcome of a dyadic panel series; ``panels`` holds the per-panel sums."""

    value: float
    converged: bool
    remainder: float
    panels: list = field(default_factory=list)


def panel_series(panel: Callable[[int], float], *, tol: float = 1e-10,
                 max_panels: int = 400, min_panels: int = 8,
                 ratio_cap: float = 0.97, stall: int = 12) -> SeriesResult:
    """Sum non-negative panel contributions ``panel(0), panel(1), ...``.

    The series is declared convergent once the geometric remainder bound
    ``v_k * rho / (1 - rho)`` drops below ``tol``, where ``rho`` is the worst
    of the last three successive ratios. It is declared divergent when the
    ratio stays at or above 1 for ``stall`` consecutive panels, or when
    ``max_panels`` is exhausted. All-zero tails converge immediately.
    """
    values: list[float] = []
    total = 0.0
    non_decreasing = 0
    for k in range(max_panels):
        v = panel(k)
        if not math.isfinite(v):
            return SeriesResult(math.inf, False, math.inf, values + [v])
        v = max(float(v), 0.0)
        values.append(v)
        total += v
        if k >= 1 and values[-2] > 0 and v >= values[-2]:
            non_decreasing += 1
        else:
            non_decreasing = 0
        if non_decreasing >= stall and k >= min_panels:
            return SeriesResult(math.inf, False, math.inf, values)
        if k + 1 < min_panels:
            continue
        tail = values[-4:]
        if all(t == 0.0 for t in tail[-2:]):
            return SeriesResult(total, True, 0.0, values)
        ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1) if tail[i] > 0]
        if not ratios:
            continue
        rho = max(ratios)
        if rho < ratio_cap:
            remainder = v * rho / (1.0 - rho)
            if remainder < tol:
                return SeriesResult(total + remainder, True, remainder, values)
    return SeriesResult(math.inf, False, math.inf, values)
