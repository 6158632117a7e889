"""Recovery of the driving Lévy path from a CTMA path.

* OU(lam):        L_t - L_s = X_t - X_s + lam int_s^t X_u du
* anticipating:   int_0^t X_s ds = L_t + X_t - X_0
* Gamma(alpha):   int_0^inf X_{t-u} phi_{-alpha-1}(u) du = k_alpha int e^{-(t-s)} dL_s,
                  for -1 < alpha < 0, followed by the OU identity with lam = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .quadrature import quad
from .simulate import CoverageError, Grid, IncrementPath, SamplePath, aggregate, convolve

DEFAULT_HORIZON = 40.0


class DomainError(ValueError):
    """Parameter outside the range where an identity holds."""


@dataclass(frozen=True)
class RecoveryResult:
    """Recovered ``L`` (pinned to 0 at the first grid point) and how it was obtained."""

    recovered: SamplePath
    method: str
    quadrature_records: dict = field(default_factory=dict)


def _trapezoid_cells(x: SamplePath) -> np.ndarray:
    v = x.values
    return 0.5 * x.grid.dt * (v[1:] + v[:-1])


def _pinned(x: SamplePath, increments: np.ndarray) -> SamplePath:
    return SamplePath(x.grid, np.concatenate([[0.0], np.cumsum(increments)]))


def langevin_recover(x: SamplePath, lam: float) -> RecoveryResult:
    """``dL_i = X_i - X_{i-1} + lam * trapezoid(X; t_{i-1}, t_i)``, summed from 0."""
    if x.grid.n < 2:
        raise ValueError("need at least two points")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    d = np.diff(x.values) + lam * _trapezoid_cells(x)
    return RecoveryResult(_pinned(x, d), "langevin",
                          {"lambda": lam, "rule": "trapezoid", "dt": x.grid.dt})


def anticipating_recover(x: SamplePath) -> RecoveryResult:
    """``L(t) = trapezoid(X; t0, t) - X(t) + X(t0)``."""
    if x.grid.n < 2:
        raise ValueError("need at least two points")
    d = _trapezoid_cells(x) - np.diff(x.values)
    return RecoveryResult(_pinned(x, d), "anticipating", {"rule": "trapezoid", "dt": x.grid.dt})


# -- gamma kernel -------------------------------------------------------------------------


def _check_alpha(alpha: float) -> None:
    if not -1.0 < alpha < 0.0:
        raise DomainError(
            f"alpha = {alpha} outside (-1, 0): the mu-weight u^(-alpha-1) e^(-u) has "
            "infinite mass for alpha >= 0 and the gamma-to-OU identity does not hold")


def k_alpha_quadrature(alpha: float) -> float:
    """``int_0^1 x^alpha (1 - x)^(-alpha-1) dx`` by algebraic-weight quadrature."""
    val, _ = integrate.quad(lambda x: 1.0, 0.0, 1.0, weight="alg", wvar=(alpha, -alpha - 1.0),
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return float(val)


def k_alpha(alpha: float) -> float:
    """``k_alpha = B(alpha + 1, -alpha) = -pi / sin(pi alpha)`` for ``-1 < alpha < 0``.

    Cross-checked against direct quadrature of the defining integral.
    """
    _check_alpha(alpha)
    value = -math.pi / math.sin(math.pi * alpha)
    check = k_alpha_quadrature(alpha)
    if abs(check - value) > 1e-8 * value:
        raise ArithmeticError(f"k_alpha({alpha}): closed form {value} vs quadrature {check}")
    return value


def _lower_gamma(a: float, x: np.ndarray) -> np.ndarray:
    return special.gamma(a) * special.gammainc(a, x)


def mu_hat_weights(alpha: float, dt: float, horizon: float) -> np.ndarray:
    """Product-integration weights of ``phi_{-alpha-1}`` against piecewise-linear data.

    ``c_m = int phi_{-alpha-1}(u) hat_m(u) du`` with ``hat_m`` the unit hat at
    ``m dt``, so that ``sum_m c_m X(t - m dt)`` integrates the linear
    interpolant of ``X`` exactly. Cell moments come from incomplete gamma
    functions, which keeps the integrable singularity at ``u = 0`` exact.
    """
    _check_alpha(alpha)
    beta = -alpha - 1.0
    n = int(math.ceil(horizon / dt - 1e-9))
    edges = dt * np.arange(n + 1)
    a0 = np.diff(_lower_gamma(beta + 1.0, edges))
    a1 = np.diff(_lower_gamma(beta + 2.0, edges))
    m = np.arange(n)
    c = np.zeros(n + 1)
    c[:-1] += ((m + 1) * dt * a0 - a1) / dt
    c[1:] += (a1 - m * dt * a0) / dt
    return c


def gamma_to_ou(x: SamplePath, alpha: float, horizon: float = DEFAULT_HORIZON) -> SamplePath:
    """``Y(t) = (1/k_alpha) int_0^horizon X(t - u) phi_{-alpha-1}(u) du``.

    The output lives on the sub-grid of ``x`` that has ``horizon`` worth of
    history; for a Gamma(alpha) CTMA ``X``, ``Y`` approximates the OU(1)
    CTMA driven by the same Lévy path.
    """
    _check_alpha(alpha)
    dt = x.grid.dt
    c = mu_hat_weights(alpha, dt, horizon)
    if x.grid.n < len(c):
        raise CoverageError(
            f"path spans {x.grid.n * dt:.6g} time units but gamma_to_ou needs "
            f"{(len(c) - 1) * dt:.6g} of history plus one point", horizon)
    y = convolve(x.values, c) / k_alpha(alpha)
    return SamplePath(Grid(x.grid.t0 + (len(c) - 1) * dt, dt, len(y)), y)


def gamma_recover(x: SamplePath, alpha: float, horizon: float = DEFAULT_HORIZON) -> RecoveryResult:
    """``langevin_recover(gamma_to_ou(x, alpha, horizon), 1)``."""
    y = gamma_to_ou(x, alpha, horizon)
    res = langevin_recover(y, 1.0)
    records = {"alpha": alpha, "horizon": horizon, "k_alpha": k_alpha(alpha),
               "mu_weights": "hat product integration (incomplete gamma moments)",
               "ou_stage_t0": y.grid.t0, "langevin": res.quadrature_records}
    return RecoveryResult(res.recovered, "gamma", records)


# -- diagnostics ------------------------------------------------------------------------


def mu_mass(alpha: float, cutoff: float, horizon: float = DEFAULT_HORIZON) -> float:
    """``int_cutoff^horizon u^(-alpha-1) e^(-u) du`` (defined for every real alpha)."""
    beta = -alpha - 1.0
    # u = e^v turns the power singularity into a smooth exponential
    return quad(lambda v: math.exp((beta + 1.0) * v - math.exp(v)), math.log(cutoff),
                math.log(horizon), what="mu mass")


def mu_mass_diagnostic(alpha: float, cutoffs, horizon: float = DEFAULT_HORIZON) -> dict:
    """Truncated ``mu`` masses as the cutoff at ``u = 0`` shrinks.

    For ``alpha > 0`` the mass grows like ``cutoff^(-alpha) / alpha``; the
    fitted log-log slope is reported next to that prediction.
    """
    cutoffs = np.asarray(sorted(cutoffs, reverse=True), dtype=float)
    masses = np.array([mu_mass(alpha, c, horizon) for c in cutoffs])
    slope = float(np.polyfit(np.log(cutoffs[-3:]), np.log(masses[-3:]), 1)[0])
    growing = bool(np.all(np.diff(masses) > 0))
    diverges = alpha >= 0 and growing and (alpha == 0 or slope < -0.5 * alpha)
    return {"alpha": alpha, "cutoffs": cutoffs.tolist(), "masses": masses.tolist(),
            "loglog_slope": slope, "predicted_slope": -alpha if alpha > 0 else 0.0,
            "diverges": bool(diverges)}


def truncated_transform_diagnostic(x: SamplePath, alpha: float, cutoffs,
                                   horizon: float = DEFAULT_HORIZON) -> dict:
    """Mean of ``int_cutoff^horizon X(t - u) mu(du)`` over the path, per cutoff.

    Shows the transform of a positive path blowing up with the mu mass when
    ``alpha > 0``.
    """
    dt = x.grid.dt
    beta = -alpha - 1.0
    n = int(math.ceil(horizon / dt - 1e-9))
    u = dt * (np.arange(n) + 0.5)
    base = u ** beta * np.exp(-u) * dt
    means = []
    for c in sorted(cutoffs, reverse=True):
        w = np.where(u >= c, base, 0.0)
        if x.grid.n < len(w):
            raise CoverageError("path too short for the diagnostic horizon", horizon)
        means.append(float(np.mean(convolve(x.values, w))))
    return {"cutoffs": sorted(cutoffs, reverse=True), "mean_transform": means}


# -- errors --------------------------------------------------------------------------------


def recovery_error(truth: IncrementPath, recovered: RecoveryResult) -> tuple[float, float]:
    """Sup and RMS difference between the true and recovered ``L``.

    Both are pinned to 0 at the first common grid time. Truth increments on
    a finer grid are aggregated to the recovered spacing first.
    """
    rec = recovered.recovered
    dt = rec.grid.dt
    if not math.isclose(truth.grid.dt, dt, rel_tol=1e-9):
        factor = dt / truth.grid.dt
        if abs(factor - round(factor)) > 1e-6 or factor < 1:
            raise ValueError("recovered grid spacing is not a multiple of the truth spacing")
        phase = (rec.grid.t0 - truth.grid.t0) / truth.grid.dt
        skip = int(round(phase)) % int(round(factor))
        if skip:
            sub = IncrementPath(Grid(truth.grid.t0 + skip * truth.grid.dt, truth.grid.dt,
                                     truth.grid.n - skip), truth.increments[skip:])
        else:
            sub = truth
        truth = aggregate(sub, int(round(factor)))
    L = truth.levy_path()
    offset = (rec.grid.t0 - L.grid.t0) / dt
    j0 = int(round(offset))
    if abs(offset - j0) > 1e-6:
        raise ValueError("grids are not aligned")
    i0 = max(0, -j0)
    j0 = max(0, j0)
    n = min(rec.grid.n - i0, L.grid.n - j0)
    if n < 1:
        raise ValueError("truth and recovered paths do not overlap")
    a = L.values[j0:j0 + n] - L.values[j0]
    b = rec.values[i0:i0 + n] - rec.values[i0]
    d = b - a
    return float(np.max(np.abs(d))), float(np.sqrt(np.mean(d * d)))


def path_scale(truth: IncrementPath, t_lo: float, t_hi: float) -> float:
    """Standard deviation of the true ``L`` on ``[t_lo, t_hi]``, pinned to 0 at ``t_lo``."""
    L = truth.levy_path().restrict(t_lo, t_hi)
    v = L.values - L.values[0]
    return float(np.std(v))
