"""Young functions induced by a Lévy triplet, Luxemburg norms and membership tests.

For a triplet ``(gamma, b, nu)``

    H(r)     = | gamma r + int [tau(x r) - r tau(x)] nu(dx) |
    Psi(r)   = sup_{|c| <= 1} H(c r) + b r^2 + int 1 ^ (r x)^2 nu(dx)
    Psi_p(r) = sup_{|c| <= 1} H(c r) + b r^2
               + int [|x r|^p 1{|x r| > 1} + |x r|^2 1{|x r| <= 1}] nu(dx)

and a kernel ``f`` is in ``L_Psi`` iff ``int Psi(|f(s)|) ds < inf``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import interpolate, optimize

from .kernels import Kernel, RuleVerdict, integrability_rule
from .levy import LevyTriplet, truncate
from .quadrature import DivergenceError, QuadratureError, SeriesResult, panel_series, quad

# tabulation range and density for measures with a density part
TABLE_DECADES = (-15.0, 15.0)
TABLE_PER_DECADE = 12
CHEB_NODES = 65


class NotInOrliczClass(ValueError):
    """The kernel is not in the Orlicz class of the Young function."""


class InconsistentVerdict(RuntimeError):
    """Closed-form rule and quadrature disagree; tolerances must be tightened."""


# -- H and the jump parts --------------------------------------------------------------


def _h_jumps(triplet: LevyTriplet, r: float) -> float:
    """``int [tau(x r) - r tau(x)] nu(dx)`` (signed, without the drift)."""
    nu = triplet.nu
    if r == 0.0 or nu.is_zero:
        return 0.0
    ar = abs(r)
    g = lambda x: truncate(x * r) - r * truncate(x)
    # the integrand vanishes where both |x| <= 1 and |x r| <= 1, and is bounded
    if ar <= 1.0:
        return nu.integrate(g, lo=1.0, breaks=(1.0 / ar,), what="H(r)")
    return nu.integrate(g, lo=1.0 / ar, breaks=(1.0,), what="H(r)")


def h_function(triplet: LevyTriplet, r: float) -> float:
    """``H(r) = |gamma r + int [tau(x r) - r tau(x)] nu(dx)|``."""
    r = float(r)
    if r == 0.0:
        return 0.0
    return abs(triplet.gamma * r + _h_jumps(triplet, r))


def _nu_part(triplet: LevyTriplet, r: float, p: float) -> float:
    """``int [|x r|^p 1{|x r| > 1} + |x r|^2 1{|x r| <= 1}] nu(dx)``."""
    nu = triplet.nu
    if r == 0.0 or nu.is_zero:
        return 0.0
    ar = abs(r)

    def g(x):
        y = abs(x) * ar
        return y * y if y <= 1.0 else y ** p

    return nu.integrate(g, order=2.0, growth=p, breaks=(1.0 / ar,), what="Psi jump part")


def _atom_h(triplet: LevyTriplet, t: np.ndarray) -> np.ndarray:
    out = triplet.gamma * t
    for x, m in triplet.nu.atoms:
        xt = x * t
        out = out + m * (xt / np.maximum(1.0, np.abs(xt)) - t * truncate(x))
    return np.abs(out)


def _atom_nu_part(triplet: LevyTriplet, r: np.ndarray, p: float) -> np.ndarray:
    out = np.zeros_like(r)
    for x, m in triplet.nu.atoms:
        y = np.abs(x * r)
        out += m * np.where(y <= 1.0, y * y, y ** p)
    return out


# -- Young functions ------------------------------------------------------------------


@dataclass(frozen=True)
class YoungFunction:
    """An even Young function ``r -> Psi(r)`` with a record of its origin.

    ``provenance`` names the triplet and the variant (``"Psi"`` or
    ``"Psi_p"``); ``method`` is ``"exact"`` (direct evaluation) or
    ``"tabulated"`` (log-grid interpolation, for measures with a density).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    provenance: dict
    method: str = "exact"

    def __call__(self, r):
        arr = np.abs(np.asarray(r, dtype=float))
        out = self.evaluator(np.atleast_1d(arr))
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def check_invariants(self, grid=None) -> dict:
        """Evenness, ``Psi(0) = 0``, positivity, monotonicity and a Delta_2 constant."""
        if grid is None:
            grid = np.logspace(-6, 6, 241)
        r = np.asarray(grid, dtype=float)
        v = self(r)
        v2 = self(2.0 * r)
        even = bool(np.array_equal(self(-r), v))
        positive = bool(np.all(v > 0))
        monotone = bool(np.all(np.diff(v) >= -1e-12 * np.abs(v[1:])))
        K = float(np.max(v2 / v)) if positive else math.inf
        return {"even": even, "zero_at_zero": self(0.0) == 0.0, "positive": positive,
                "monotone": monotone, "delta2_K": K, "ok": even and positive and monotone
                and self(0.0) == 0.0 and math.isfinite(K)}


def _cheb_sup(h: Callable[[np.ndarray], np.ndarray], r: float, extra=(),
              refine: bool = True) -> float:
    """``sup_{|c| <= 1} h(c r)``: Chebyshev-Lobatto scan, then local refinement.

    ``extra`` adds candidate points (kinks); with ``refine=False`` the scan
    plus candidates is taken as exact, which holds for piecewise-linear ``h``.
    """
    c = np.cos(np.pi * np.arange(CHEB_NODES) / (CHEB_NODES - 1))
    t = np.concatenate([c * r, [x for x in extra if abs(x) <= abs(r)]])
    vals = h(t)
    j = int(np.argmax(vals))
    best = float(vals[j])
    if refine and j < CHEB_NODES:
        lo, hi = c[min(j + 1, CHEB_NODES - 1)] * r, c[max(j - 1, 0)] * r
        lo, hi = min(lo, hi), max(lo, hi)
        if hi > lo:
            res = optimize.minimize_scalar(lambda s: -float(h(np.array([s]))[0]),
                                           bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-12 * max(1.0, abs(r))})
            best = max(best, -float(res.fun))
    return best


def _exact_evaluator(triplet: LevyTriplet, p: float):
    """Direct evaluation for triplets without a density part.

    ``H`` is then piecewise linear with kinks at ``+-1/|x|`` for each atom
    ``x``, so its sup over ``[-r, r]`` is attained at ``+-r`` or a kink.
    """
    kinks = []
    for x, _ in triplet.nu.atoms:
        kinks += [1.0 / abs(x), -1.0 / abs(x)]
    h = lambda t: _atom_h(triplet, np.asarray(t, dtype=float))

    def ev(r):
        r = np.asarray(r, dtype=float)
        sup = np.array([_cheb_sup(h, float(x), kinks, refine=False) if x > 0 else 0.0 for x in r])
        return sup + triplet.b * r * r + _atom_nu_part(triplet, r, p)

    return ev


@dataclass(frozen=True)
class _Table:
    logr: np.ndarray
    sup: np.ndarray
    jump: np.ndarray


@functools.lru_cache(maxsize=64)
def _tabulate(triplet: LevyTriplet, p: float) -> _Table:
    lo, hi = TABLE_DECADES
    n = int(round((hi - lo) * TABLE_PER_DECADE)) + 1
    logr = np.linspace(lo, hi, n) * math.log(10.0)
    r = np.exp(logr)
    h = np.array([max(h_function(triplet, x), h_function(triplet, -x)) for x in r])
    sup = np.maximum.accumulate(h)
    jump = np.array([_nu_part(triplet, x, p) for x in r])
    return _Table(logr, sup, jump)


def _power_extend(logr: np.ndarray, vals: np.ndarray):
    """Interpolant in ``log r`` with power-law extrapolation beyond the table."""
    pos = vals > 0
    if not np.any(pos):
        return lambda lr: np.zeros_like(lr)
    if np.all(pos):
        inner = interpolate.PchipInterpolator(logr, np.log(vals))
        f_in = lambda lr: np.exp(inner(lr))
    else:
        inner = interpolate.PchipInterpolator(logr, vals)
        f_in = inner

    def slope(i, j):
        if vals[i] > 0 and vals[j] > 0:
            return (math.log(vals[j]) - math.log(vals[i])) / (logr[j] - logr[i])
        return None

    s_hi = slope(-2, -1)
    s_lo = slope(0, 1)

    def f(lr):
        out = np.empty_like(lr)
        mid = (lr >= logr[0]) & (lr <= logr[-1])
        out[mid] = f_in(lr[mid])
        up = lr > logr[-1]
        out[up] = vals[-1] * np.exp(s_hi * (lr[up] - logr[-1])) if s_hi is not None else vals[-1]
        down = lr < logr[0]
        out[down] = vals[0] * np.exp(s_lo * (lr[down] - logr[0])) if s_lo is not None else 0.0
        return out

    return f


def _tabulated_evaluator(triplet: LevyTriplet, p: float):
    table = _tabulate(triplet, p)
    sup_f = _power_extend(table.logr, table.sup)
    jump_f = _power_extend(table.logr, table.jump)

    def ev(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        if np.any(pos):
            lr = np.log(r[pos])
            out[pos] = sup_f(lr) + jump_f(lr) + triplet.b * r[pos] ** 2
        return out

    return ev


@functools.lru_cache(maxsize=64)
def young_psi_p(triplet: LevyTriplet, p: float) -> YoungFunction:
    """``Psi_p`` of the triplet; ``p = 0`` gives ``Psi`` itself.

    Raises :class:`DivergenceError` ("L lacks finite p-moment") when
    ``int_{|x|>1} |x|^p nu(dx)`` is infinite.
    """
    p = float(p)
    if p < 0:
        raise ValueError("p must be non-negative")
    if triplet.gamma == 0.0 and triplet.b == 0.0 and triplet.nu.is_zero:
        raise ValueError("the zero triplet induces no Young function")
    if p > 0 and not triplet.nu.is_zero:
        try:
            triplet.nu.moment_tail(p)
        except DivergenceError as exc:
            raise DivergenceError(f"L lacks finite {p}-moment: {exc}") from exc
    prov = {"triplet": triplet.spec or repr(triplet), "variant": "Psi" if p == 0 else "Psi_p",
            "p": p}
    if triplet.nu.density is None:
        return YoungFunction(_exact_evaluator(triplet, p), prov, "exact")
    return YoungFunction(_tabulated_evaluator(triplet, p), prov, "tabulated")


def young_psi(triplet: LevyTriplet) -> YoungFunction:
    """``Psi(r) = sup_{|c|<=1} H(c r) + b r^2 + int 1 ^ (r x)^2 nu(dx)``."""
    return young_psi_p(triplet, 0.0)


def complementary_young(psi: YoungFunction, x: float) -> float:
    """``sup_{y >= 0} (|x| y - Psi(y))``; ``math.inf`` when unbounded."""
    x = abs(float(x))
    if x == 0.0:
        return 0.0
    y = np.logspace(-12, 15, 541)
    d = x * y - psi(y)
    j = int(np.argmax(d))
    if j == len(y) - 1 and d[-1] > d[-2]:
        return math.inf
    if d[j] <= 0.0:
        lo, hi = 0.0, y[min(j + 1, len(y) - 1)]
    else:
        lo, hi = y[max(j - 1, 0)], y[min(j + 1, len(y) - 1)]
    res = optimize.minimize_scalar(lambda v: -(x * v - psi(v)), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-14 * hi})
    return max(0.0, float(d[j]), -float(res.fun))


# -- Phi integrals ---------------------------------------------------------------------


def _panel_integral(g: Callable[[float], float], a: float, b: float, points) -> float:
    pts = [p for p in points if a < p < b]
    return quad(g, a, b, points=pts or None, what="Phi panel", loose=1e-7)


def _side_series(psi: YoungFunction, f: Kernel, sign: int, scale: float,
                 tol: float) -> tuple[SeriesResult, SeriesResult]:
    """Dyadic panels of ``int Psi(|f(s)|/scale) ds`` on one half-line, near 0 and near inf."""
    points = [sign * p for p in getattr(f, "breakpoints", ())]
    points = [p for p in points if p > 0]

    def g(s):
        return float(psi(abs(float(f(sign * s))) / scale))

    def g_log(u):
        s = math.exp(u)
        return g(s) * s

    def near(k):
        a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        lp = [math.log(p) for p in points if a < p < b]
        return _panel_integral(g_log, math.log(a), math.log(b), lp)

    def far(k):
        a, b = 2.0 ** k, 2.0 ** (k + 1)
        return _panel_integral(g, a, b, points)

    return panel_series(near, tol=tol), panel_series(far, tol=tol)


@dataclass
class PhiIntegral:
    value: float
    converged: bool
    remainder: float
    panels: dict = field(default_factory=dict)


def phi_integral(psi: YoungFunction, f: Kernel, scale: float = 1.0,
                 tol: float = 1e-10) -> PhiIntegral:
    """``int Psi(|f(s)| / scale) ds`` as a sum of dyadic panel series.

    Declared finite iff every series converges with remainder bound below
    ``tol``.
    """
    lo, hi = f.interval
    sides = ([1] if hi > 0 else []) + ([-1] if lo < 0 else [])
    total, rem, ok, panels = 0.0, 0.0, True, {}
    for sign in sides:
        try:
            a, b = _side_series(psi, f, sign, scale, tol)
        except DivergenceError:
            return PhiIntegral(math.inf, False, math.inf, panels)
        for name, res in (("near0", a), ("far", b)):
            panels[f"{'+' if sign > 0 else '-'}{name}"] = len(res.panels)
            total += res.value
            rem += res.remainder
            ok = ok and res.converged
    if not ok:
        return PhiIntegral(math.inf, False, math.inf, panels)
    return PhiIntegral(total, True, rem, panels)


def luxemburg_norm(psi: YoungFunction, f: Kernel, *, tol: float = 1e-8) -> float:
    """``inf{a > 0 : int Psi(|f(s)| / a) ds <= 1}``.

    The constraint integral is decreasing in ``a``; the bracket grows
    geometrically until it straddles 1 and Brent's method finishes. The
    returned ``a`` satisfies ``|int Psi(|f|/a) - 1| <= tol``.
    """
    one = phi_integral(psi, f, 1.0)
    if not one.converged:
        raise NotInOrliczClass("kernel not in L_Psi")
    if one.value == 0.0:
        return 0.0
    cache = {}

    def excess(log_a):
        if log_a not in cache:
            res = phi_integral(psi, f, math.exp(log_a), tol=tol * 1e-3)
            if not res.converged:
                raise NotInOrliczClass("kernel not in L_Psi")
            cache[log_a] = res.value - 1.0
        return cache[log_a]

    cache[0.0] = one.value - 1.0
    lo = hi = 0.0
    step = math.log(2.0)
    while excess(lo) < 0:
        lo -= step
        step *= 2
    step = math.log(2.0)
    while excess(hi) > 0:
        hi += step
        step *= 2
    if excess(lo) == 0.0:
        return math.exp(lo)
    if excess(hi) == 0.0:
        return math.exp(hi)
    root = optimize.brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(excess(root)) > tol:
        raise QuadratureError(f"Luxemburg constraint missed: excess {excess(root):.3g}")
    return math.exp(root)


# -- membership -----------------------------------------------------------------------


@dataclass
class IntegrabilityReport:
    """Verdicts on ``f`` in ``L_Psi`` (and optionally ``L_Psi_p``) with evidence."""

    member_of_L_psi: bool
    member_of_L_psi_p: bool | None = None
    p: float | None = None
    analytic_rule: str | None = None
    quadrature_value: float | None = None
    luxemburg_norm: float | None = None
    rule_conditions: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        return clean({k: getattr(self, k) for k in self.__dataclass_fields__})


def membership(triplet: LevyTriplet, f: Kernel, p: float | None = None, *,
               with_norm: bool = False) -> IntegrabilityReport:
    """Decide ``f`` in ``L_Psi`` numerically and, where a closed-form rule exists, by rule.

    Raises :class:`InconsistentVerdict` if the two disagree.
    """
    psi = young_psi(triplet)
    phi = phi_integral(psi, f)
    rule: RuleVerdict = integrability_rule(f, triplet)
    if rule.member is not None and rule.member != phi.converged:
        raise InconsistentVerdict(
            f"rule {rule.rule} says member={rule.member} but the Phi-integral "
            f"{'converged' if phi.converged else 'diverged'} (panels {phi.panels}); "
            "tighten the quadrature tolerance")
    report = IntegrabilityReport(
        member_of_L_psi=phi.converged,
        analytic_rule=None if rule.member is None else rule.rule,
        quadrature_value=phi.value,
        rule_conditions=rule.conditions,
    )
    report.notes.append(f"panels {phi.panels}, remainder bound {phi.remainder:.3g}")
    if p is not None:
        report.p = float(p)
        try:
            psi_p = young_psi_p(triplet, p)
        except DivergenceError as exc:
            report.member_of_L_psi_p = False
            report.notes.append(str(exc))
        else:
            report.member_of_L_psi_p = phi_integral(psi_p, f).converged
    if with_norm and phi.converged:
        report.luxemburg_norm = luxemburg_norm(psi, f)
    return report
