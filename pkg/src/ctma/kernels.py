"""Moving-average kernels: evaluation, Fourier transforms, cell averages,
integrability rules and invertibility predicates.

Fourier convention throughout: ``fhat(xi) = (2 pi)^{-1/2} int f(s) e^{i xi s} ds``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg, optimize, special

from .levy import LevyTriplet
from .quadrature import (
    DivergenceError,
    gauss_legendre,
    quad,
    quad_from_zero,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


class Kernel:
    """Base class for deterministic kernels ``f``.

    Subclasses set ``family``, ``support`` (``"causal"``, ``"anticausal"`` or
    ``"two-sided"``), ``singularity`` (exponent of an integrable blow-up at
    ``s = 0``, or 0) and implement ``_eval``.
    """

    family = "kernel"
    support = "causal"
    singularity = 0.0

    @property
    def local_power(self) -> float | None:
        """Exponent ``a`` with ``f(s) ~ s^a g(s)``, ``g`` smooth, near ``0+``.

        ``None`` when no special treatment is needed at 0.
        """
        return self.singularity if self.singularity < 0 else None
    # -- evaluation -----------------------------------------------------------

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        out = self._eval(np.atleast_1d(s_arr))
        return out.reshape(s_arr.shape) if s_arr.ndim else float(out[0])

    def _eval(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def interval(self) -> tuple[float, float]:
        return {"causal": (0.0, math.inf), "anticausal": (-math.inf, 0.0),
                "two-sided": (-math.inf, math.inf)}[self.support]

    def horizon(self, tol: float = 1e-12) -> float:
        """Distance from 0 beyond which ``|f| < tol`` on the support."""
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError

    # -- integrals ------------------------------------------------------------

    def panels(self) -> list[tuple[float, float, bool]]:
        """``(a, b, singular_at_a)`` pieces covering the support."""
        lo, hi = self.interval
        pieces = []
        if lo < 0.0:
            pieces += [(lo, -1.0, False), (-1.0, 0.0, False)]
        if hi > 0.0:
            pieces += [(0.0, 1.0, self.singularity < 0.0), (1.0, hi, False)]
        return pieces

    def integrate(self, g: Callable[[float], float], *, what: str = "kernel integral") -> float:
        """``int g(f(s)) ds`` over the support (``g(0)`` is assumed to be 0)."""
        total = 0.0
        for a, b, singular in self.panels():
            fn = lambda s: g(self(s))
            if singular:
                total += quad_from_zero(lambda u, a=a: fn(a + u), b - a, what=what)
            else:
                total += quad(fn, a, b, what=what)
        return total

    def l2_norm(self) -> float:
        return math.sqrt(self.integrate(lambda v: v * v, what="L2 norm"))

    def l1_norm(self) -> float:
        return self.integrate(abs, what="L1 norm")

    def cell_weights(self, dt: float, k0: int, k1: int) -> np.ndarray:
        """Cell averages ``(1/dt) int_{k dt}^{(k+1) dt} f(u) du`` for ``k0 <= k < k1``."""
        ks = np.arange(k0, k1)
        out = np.empty(len(ks))
        for i, k in enumerate(ks):
            a, b = k * dt, (k + 1) * dt
            if k == 0 and self.singularity < 0.0:
                out[i] = quad_from_zero(lambda u: float(self(u)), dt) / dt
            else:
                out[i] = gauss_legendre(self._eval, a, b) / dt
        return out

    def weight_range(self, dt: float, horizon: float) -> tuple[int, int]:
        """Lag-cell index range ``[k0, k1)`` covering the support up to ``horizon``."""
        n = int(math.ceil(horizon / dt - 1e-9))
        lo, hi = self.interval
        k0 = 0 if lo >= 0.0 else -n
        k1 = 0 if hi <= 0.0 else n
        return k0, k1

    # -- Fourier --------------------------------------------------------------

    def fourier(self, xi):
        """Closed-form Fourier transform (normalised convention)."""
        return fourier_numeric(self, xi)


# -- families ---------------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class OUKernel(Kernel):
    """``e^{-lam s}`` on ``s >= 0``."""

    lam: float = 1.0
    family = "ou"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("OU kernel needs lambda > 0")

    def _eval(self, s):
        out = np.zeros_like(s)
        m = s >= 0
        out[m] = np.exp(-self.lam * s[m])
        return out

    def horizon(self, tol=1e-12):
        return math.log(1.0 / tol) / self.lam

    def cell_weights(self, dt, k0, k1):
        k = np.arange(k0, k1, dtype=float)
        w = np.exp(-self.lam * k * dt) * (-np.expm1(-self.lam * dt)) / (self.lam * dt)
        w[k < 0] = 0.0
        return w

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 1.0 / (SQRT_2PI * (self.lam - 1j * xi))

    def spec(self):
        return {"family": "ou", "lambda": self.lam}


@dataclass(frozen=True, eq=True)
class AnticipatingOUKernel(Kernel):
    """``e^{lam s}`` on ``s <= 0`` (so that ``X_t = int_t^inf e^{-lam(s-t)} dL_s``)."""

    lam: float = 1.0
    family = "anticipating_ou"
    support = "anticausal"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("anticipating OU kernel needs lambda > 0")

    def _eval(self, s):
        out = np.zeros_like(s)
        m = s <= 0
        out[m] = np.exp(self.lam * s[m])
        return out

    def horizon(self, tol=1e-12):
        return math.log(1.0 / tol) / self.lam

    def cell_weights(self, dt, k0, k1):
        k = np.arange(k0, k1, dtype=float)
        # cell [k dt, (k+1) dt] with k < 0
        w = np.exp(self.lam * (k + 1) * dt) * (-np.expm1(-self.lam * dt)) / (self.lam * dt)
        w[k >= 0] = 0.0
        return w

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        return 1.0 / (SQRT_2PI * (self.lam + 1j * xi))

    def spec(self):
        return {"family": "anticipating_ou", "lambda": self.lam}


@dataclass(frozen=True, eq=True)
class GammaKernel(Kernel):
    """``e^{-s} s^alpha`` on ``s > 0`` (``alpha > -1``)."""

    alpha: float = 0.0
    family = "gamma"

    def __post_init__(self):
        if not self.alpha > -1:
            raise ValueError("gamma kernel needs alpha > -1")

    @property
    def singularity(self):
        return min(self.alpha, 0.0)

    @property
    def local_power(self):
        return None if float(self.alpha).is_integer() else self.alpha

    def _eval(self, s):
        out = np.zeros_like(s)
        m = s > 0
        out[m] = np.exp(-s[m]) * s[m] ** self.alpha
        return out

    def horizon(self, tol=1e-12):
        s = max(1.0, self.alpha + 1.0)
        while math.exp(-s) * s ** self.alpha >= tol or (self.alpha > 0 and s < self.alpha):
            s *= 1.25
        lo, hi = s / 1.25, s
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if math.exp(-mid) * mid ** self.alpha >= tol:
                lo = mid
            else:
                hi = mid
        return hi

    def lower_gamma(self, x):
        """``int_0^x u^alpha e^{-u} du`` (lower incomplete gamma)."""
        return special.gamma(self.alpha + 1) * special.gammainc(self.alpha + 1, x)

    def cell_weights(self, dt, k0, k1):
        a = self.alpha + 1.0
        k = np.arange(max(k0, 0), max(k1, 0), dtype=float)
        lo, hi = k * dt, (k + 1) * dt
        # difference of P near 0, of Q in the tail, to avoid cancellation
        use_p = hi <= a
        diff = np.where(use_p, special.gammainc(a, hi) - special.gammainc(a, lo),
                        special.gammaincc(a, lo) - special.gammaincc(a, hi))
        w = special.gamma(a) * diff / dt
        out = np.zeros(k1 - k0)
        out[max(k0, 0) - k0:] = w
        return out

    def fourier(self, xi):
        xi = np.asarray(xi, dtype=float)
        return special.gamma(self.alpha + 1) / SQRT_2PI * (1.0 - 1j * xi) ** (-self.alpha - 1)

    def spec(self):
        return {"family": "gamma", "alpha": self.alpha}


@dataclass(frozen=True)
class CarmaStructure:
    """State-space pieces of a CARMA(p, q) kernel ``b' e^{As} e_p``."""

    a: tuple  # a_1 .. a_p
    b: tuple  # b_0 .. b_{p-1}
    companion: np.ndarray = field(repr=False, compare=False)
    b_vector: np.ndarray = field(repr=False, compare=False)

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        nz = [j for j, c in enumerate(self.b) if c != 0]
        return max(nz)

    def a_polynomial(self) -> np.ndarray:
        """Coefficients of ``a(z) = z^p + a_1 z^{p-1} + ... + a_p``, highest degree first."""
        return np.array([1.0, *self.a])

    def b_polynomial(self) -> np.ndarray:
        """Coefficients of ``b(z) = b_0 + b_1 z + ... + b_q z^q``, highest degree first."""
        return np.array(self.b[: self.q + 1][::-1], dtype=float)

    def a_roots(self) -> np.ndarray:
        return np.roots(self.a_polynomial())

    def b_roots(self) -> np.ndarray:
        return np.roots(self.b_polynomial()) if self.q > 0 else np.array([])

    @property
    def stationary(self) -> bool:
        return bool(np.all(self.a_roots().real < 0))


def companion_matrix(a) -> np.ndarray:
    """Companion matrix with ones on the superdiagonal and last row ``-a_p, ..., -a_1``."""
    p = len(a)
    A = np.zeros((p, p))
    A[np.arange(p - 1), np.arange(1, p)] = 1.0
    A[-1, :] = -np.asarray(a, dtype=float)[::-1]
    return A


@dataclass(frozen=True, eq=False)
class CarmaKernel(Kernel):
    """CARMA(p, q) kernel ``g(s) = b' e^{As} e_p`` on ``s > 0``."""

    a: tuple = (1.0,)
    b: tuple = (1.0,)
    family = "carma"

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        p = len(a)
        if p < 1:
            raise ValueError("CARMA needs at least one autoregressive coefficient")
        if len(b) > p:
            if any(b[p:]):
                raise ValueError("CARMA needs p > q (b_j = 0 for j >= p)")
            b = b[:p]
        b = b + (0.0,) * (p - len(b))
        if not any(b):
            raise ValueError("CARMA needs b_q != 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        A = companion_matrix(a)
        object.__setattr__(self, "structure",
                           CarmaStructure(a, b, A, np.array(b)))

    def _eval(self, s):
        st = self.structure
        out = np.zeros_like(s)
        for i, si in enumerate(s):
            if si > 0:
                out[i] = st.b_vector @ linalg.expm(st.companion * si)[:, -1]
        return out

    def _states(self, dt: float, n: int) -> np.ndarray:
        """``e^{A k dt} e_p`` for ``k = 0..n`` by repeated multiplication."""
        st = self.structure
        E = linalg.expm(st.companion * dt)
        v = np.zeros((n + 1, st.p))
        v[0, -1] = 1.0
        for k in range(n):
            v[k + 1] = E @ v[k]
        return v

    def horizon(self, tol=1e-12):
        rate = -float(np.max(self.structure.a_roots().real))
        if rate <= 0:
            raise ValueError("non-stationary CARMA kernel has no decay horizon")
        s = math.log(1.0 / tol) / rate
        scale = max(1.0, float(np.max(np.abs(self(np.linspace(0, s, 200))))))
        return (math.log(scale / tol) + self.structure.p * 2.0) / rate

    def cell_weights(self, dt, k0, k1):
        st = self.structure
        kk0, kk1 = max(k0, 0), max(k1, 0)
        out = np.zeros(k1 - k0)
        if kk1 <= kk0:
            return out
        states = self._states(dt, kk1)[kk0:]
        # (1/dt) b' A^{-1} (e^{A(k+1)dt} - e^{A k dt}) e_p
        c = linalg.solve(st.companion.T, st.b_vector)
        w = (states[1:] - states[:-1]) @ c / dt
        out[kk0 - k0:] = w
        return out

    def transfer(self, xi):
        """Unnormalised transform ``b(-i xi) / a(-i xi)``."""
        z = -1j * np.asarray(xi, dtype=float)
        st = self.structure
        return np.polyval(st.b_polynomial(), z) / np.polyval(st.a_polynomial(), z)

    def fourier(self, xi):
        return self.transfer(xi) / SQRT_2PI

    def spec(self):
        return {"family": "carma", "a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True, eq=False)
class CustomKernel(Kernel):
    """Kernel given by an evaluator on ``[lo, hi]``.

    ``singularity < 0`` declares an integrable blow-up ``~ (s - lo)^singularity``
    at the left end (with ``lo = 0``). ``tail_horizon`` is where ``|f|`` falls
    below 1e-12 for unbounded supports.
    """

    func: Callable = None
    lo: float = 0.0
    hi: float = 1.0
    singularity: float = 0.0
    tail_horizon: float | None = None
    name: str = "custom"
    meta: dict = field(default_factory=dict)
    family = "custom"

    def __post_init__(self):
        if self.func is None:
            raise ValueError("custom kernel needs an evaluator")
        if not self.lo < self.hi:
            raise ValueError("custom kernel needs lo < hi")
        if self.singularity < 0 and self.lo != 0.0:
            raise ValueError("singular custom kernels must start at 0")
        if math.isinf(self.hi) or math.isinf(self.lo):
            if self.tail_horizon is None:
                raise ValueError("unbounded custom kernel needs a tail horizon")

    @classmethod
    def indicator(cls, a: float, b: float) -> "CustomKernel":
        """``1_{(a, b]}``."""
        return cls(func=lambda s: ((s > a) & (s <= b)).astype(float), lo=a, hi=b,
                   name="indicator", meta={"a": a, "b": b})

    @property
    def support(self):
        if self.lo >= 0:
            return "causal"
        if self.hi <= 0:
            return "anticausal"
        return "two-sided"

    @property
    def interval(self):
        return (self.lo, self.hi)

    @property
    def breakpoints(self):
        """Finite support edges, where the integrand of a panel may jump."""
        return tuple(x for x in (self.lo, self.hi) if math.isfinite(x) and x != 0.0)

    def _eval(self, s):
        out = np.zeros_like(s)
        m = (s >= self.lo) & (s <= self.hi)
        if self.singularity < 0:
            m &= s > self.lo
        out[m] = np.asarray(self.func(s[m]), dtype=float)
        return out

    def horizon(self, tol=1e-12):
        if self.tail_horizon is not None:
            return float(self.tail_horizon)
        return max(abs(self.lo), abs(self.hi))

    def panels(self):
        a, b = self.lo, self.hi
        pieces = []
        if self.singularity < 0:
            mid = a + 1.0 if b - a > 1.0 else b
            pieces.append((a, mid, True))
            a = mid
        brk = [x for x in (-1.0, 0.0, 1.0) if a < x < b]
        edges = [a, *brk, b]
        pieces += [(x, y, False) for x, y in zip(edges[:-1], edges[1:]) if y > x]
        return pieces

    def integrate(self, g, *, what="kernel integral"):
        if self.name == "indicator":
            return g(1.0) * (self.hi - self.lo)
        return super().integrate(g, what=what)

    def weight_range(self, dt, horizon):
        lo = self.lo if math.isfinite(self.lo) else -horizon
        hi = self.hi if math.isfinite(self.hi) else horizon
        return int(math.floor(lo / dt + 1e-9)), int(math.ceil(hi / dt - 1e-9))

    def cell_weights(self, dt, k0, k1):
        if self.name == "indicator":
            k = np.arange(k0, k1, dtype=float)
            a, b = self.meta["a"], self.meta["b"]
            overlap = np.clip(np.minimum((k + 1) * dt, b) - np.maximum(k * dt, a), 0.0, None)
            return overlap / dt
        return super().cell_weights(dt, k0, k1)

    def fourier(self, xi):
        return fourier_numeric(self, xi)

    def spec(self):
        return {"family": "custom", "name": self.name, "lo": self.lo, "hi": self.hi,
                "singularity": self.singularity, **self.meta}


def sampled_kernel(values, dt: float, support: str = "causal", start: float | None = None):
    """Custom kernel interpolating equally spaced samples (CLI ``custom`` family)."""
    values = np.asarray(values, dtype=float)
    if start is None:
        start = {"causal": 0.0, "anticausal": -(len(values) - 1) * dt,
                 "two-sided": -(len(values) - 1) * dt / 2}[support]
    grid = start + dt * np.arange(len(values))

    def func(s):
        return np.interp(s, grid, values, left=0.0, right=0.0)

    return CustomKernel(func=func, lo=float(grid[0]), hi=float(grid[-1]), name="samples",
                        meta={"dt": dt, "n": len(values), "support": support})


# -- Fourier transforms -------------------------------------------------------------


def _filon_coefficients(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^1 (1-t) e^{i theta t} dt`` and ``int_0^1 t e^{i theta t} dt``."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-4
    t = np.where(small, 1.0, theta)
    e = np.exp(1j * t)
    i0 = (e - 1.0) / (1j * t)
    i1 = e / (1j * t) - (e - 1.0) / (1j * t) ** 2
    s = theta
    i0_s = 1.0 + 1j * s / 2 - s ** 2 / 6 - 1j * s ** 3 / 24
    i1_s = 0.5 + 1j * s / 3 - s ** 2 / 8 - 1j * s ** 3 / 30
    i0 = np.where(small, i0_s, i0)
    i1 = np.where(small, i1_s, i1)
    return i0 - i1, i1


def fourier_numeric(kernel: Kernel, xi, dt: float = 1e-3, tol: float = 1e-12):
    """Fourier transform of the kernel sampled on a grid of spacing ``dt``.

    Linear interpolation between samples with exact oscillatory weights
    (Filon-trapezoid); the support is truncated where ``|f| < tol``. A
    declared singularity at 0 is handled by 60-point Gauss-Jacobi quadrature
    with weight ``s^singularity`` on a head interval ``[0, h]``, with ``h`` a
    grid multiple no longer than 1 and short enough to resolve the largest
    ``|xi|``. Kernels that behave like a non-integer power at 0 (see
    ``Kernel.local_power``) use the same head, since linear interpolation of
    ``s^a`` converges only like ``dt^(1+a)``.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    lo, hi = kernel.interval
    H = kernel.horizon(tol)
    lo = max(lo, -H)
    hi = min(hi, H)
    k_lo = int(math.floor(lo / dt))
    head = np.zeros(len(xi_arr), dtype=complex)
    a = kernel.local_power
    if a is not None and lo >= 0.0:
        h = min(1.0, 40.0 / (1.0 + float(np.max(np.abs(xi_arr)))), hi)
        h = max(dt, dt * math.floor(h / dt))
        nodes, weights = special.roots_jacobi(60, 0.0, a)
        # map [-1, 1] -> [0, h]; weight (1+x)^a -> (2 s/h)^a
        s = 0.5 * h * (nodes + 1.0)
        smooth = kernel(s) * s ** (-a)
        scale = (0.5 * h) ** (a + 1)
        head = scale * (np.exp(1j * np.outer(xi_arr, s)) @ (weights * smooth))
        k_lo = int(round(h / dt))
    k_hi = int(math.ceil(hi / dt))
    grid = dt * np.arange(k_lo, k_hi + 1)
    f = kernel(grid)
    # one-sided limits where the grid touches a support endpoint at 0
    if grid[0] == 0.0 and lo == 0.0:
        f[0] = kernel(1e-300)
    if grid[-1] == 0.0 and hi == 0.0:
        f[-1] = kernel(-1e-300)
    A, B = _filon_coefficients(xi_arr * dt)
    out = np.empty(len(xi_arr), dtype=complex)
    for j, x in enumerate(xi_arr):
        ph = np.exp(1j * x * grid)
        out[j] = dt * (A[j] * np.dot(f[:-1], ph[:-1]) + B[j] * np.dot(f[1:], ph[:-1]))
    out = (out + head) / SQRT_2PI
    return out if np.ndim(xi) else complex(out[0])


# -- invertibility ------------------------------------------------------------------


@dataclass(frozen=True)
class InvertibilityReport:
    invertible: bool
    reason: str
    min_modulus: float | None = None
    argmin: float | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.invertible


def is_invertible(kernel: Kernel, xi_grid=None, root_tol: float = 1e-9) -> InvertibilityReport:
    """Non-vanishing Fourier transform test.

    Closed-form families are decided analytically. For custom kernels the
    transform is scanned on ``xi_grid``; "no zero detected" is evidence,
    not a proof.
    """
    if isinstance(kernel, (OUKernel, GammaKernel, AnticipatingOUKernel)):
        return InvertibilityReport(True, f"{kernel.family}: closed-form transform has no real zeros")
    if isinstance(kernel, CarmaKernel):
        st = kernel.structure
        broots = st.b_roots()
        aroots = st.a_roots()
        details = {"b_roots": [complex(r) for r in broots], "a_roots": [complex(r) for r in aroots]}
        on_axis = [r for r in broots if abs(r.real) <= root_tol * max(1.0, abs(r))]
        if on_axis:
            return InvertibilityReport(False, "b has a root on the imaginary axis", details=details)
        common = [r for r in broots
                  if np.min(np.abs(aroots - r)) <= root_tol * max(1.0, abs(r))]
        if common:
            return InvertibilityReport(False, "a and b share a root", details=details)
        return InvertibilityReport(True, "b has no imaginary-axis roots and no root in common with a",
                                   details=details)
    if xi_grid is None:
        xi_grid = np.linspace(-50.0, 50.0, 2001)
    xi_grid = np.asarray(xi_grid, dtype=float)
    mod = np.abs(fourier_numeric(kernel, xi_grid))
    top = float(np.max(mod))
    # refine the deepest interior local minima: a zero between grid points
    # only shows up as a dip on the scan
    best, arg = float(np.min(mod)), float(xi_grid[int(np.argmin(mod))])
    interior = np.flatnonzero((mod[1:-1] <= mod[:-2]) & (mod[1:-1] <= mod[2:])) + 1
    for j in interior[np.argsort(mod[interior])][:8]:
        res = optimize.minimize_scalar(lambda x: abs(fourier_numeric(kernel, x)),
                                       bounds=(xi_grid[j - 1], xi_grid[j + 1]),
                                       method="bounded", options={"xatol": 1e-10})
        if res.fun < best:
            best, arg = float(res.fun), float(res.x)
    ok = bool(best > 1e-6 * max(1.0, top))
    reason = "no zero detected on the scanned grid" if ok else "transform vanishes on the grid"
    return InvertibilityReport(ok, reason, best, arg,
                               {"grid": [float(xi_grid[0]), float(xi_grid[-1]), len(xi_grid)],
                                "refined_minima": int(min(8, len(interior)))})


# -- integrability rules ------------------------------------------------------------


@dataclass
class RuleVerdict:
    """Closed-form integrability verdict with the integrals it relied on."""

    member: bool | None
    rule: str
    conditions: dict = field(default_factory=dict)


def _finite(value_fn) -> tuple[bool, float]:
    try:
        return True, float(value_fn())
    except DivergenceError:
        return False, math.inf


def integrability_rule(kernel: Kernel, triplet: LevyTriplet) -> RuleVerdict:
    """Known necessary-and-sufficient conditions for ``f`` in ``L_Psi``."""
    nu = triplet.nu
    log_ok, log_val = _finite(nu.log_moment)
    cond = {"log_moment": {"value": log_val, "ok": log_ok}}
    if isinstance(kernel, (OUKernel, AnticipatingOUKernel)):
        return RuleVerdict(log_ok, "log-moment", cond)
    if isinstance(kernel, CarmaKernel):
        stat = kernel.structure.stationary
        cond["a_roots_negative"] = {"value": [complex(r) for r in kernel.structure.a_roots()],
                                    "ok": stat}
        if not stat:
            return RuleVerdict(False, "carma-nonstationary", cond)
        return RuleVerdict(log_ok, "log-moment", cond)
    if isinstance(kernel, GammaKernel):
        al = kernel.alpha
        if al > -0.5:
            cond["2a"] = {"value": al, "ok": True}
            return RuleVerdict(log_ok, "2(a)", cond)
        b_ok = triplet.b == 0
        if al == -0.5:
            ok, val = _finite(lambda: nu.small_power(2.0, log_factor=True))
            cond["2b"] = {"value": val, "ok": ok and b_ok, "b_zero": b_ok}
            return RuleVerdict(log_ok and ok and b_ok, "2(b)", cond)
        ok, val = _finite(lambda: nu.small_power(-1.0 / al))
        cond["2c"] = {"value": val, "ok": ok and b_ok, "b_zero": b_ok}
        return RuleVerdict(log_ok and ok and b_ok, "2(c)", cond)
    return RuleVerdict(None, "none", cond)


# -- spec parsing ---------------------------------------------------------------------


def kernel_from_spec(spec: dict, base_dir=None) -> Kernel:
    """Build a kernel from the configuration schema shared with the CLI.

    Unknown keys are rejected.
    """
    spec = dict(spec)
    family = spec.pop("family", None)
    try:
        if family == "ou":
            kernel = OUKernel(float(spec.pop("lambda", 1.0)))
        elif family == "gamma":
            kernel = GammaKernel(float(spec.pop("alpha")))
        elif family == "carma":
            kernel = CarmaKernel(tuple(spec.pop("a")), tuple(spec.pop("b")))
        elif family == "anticipating_ou":
            kernel = AnticipatingOUKernel(float(spec.pop("lambda", 1.0)))
        elif family == "indicator":
            kernel = CustomKernel.indicator(float(spec.pop("a", 0.0)), float(spec.pop("b", 1.0)))
        elif family == "custom":
            import pathlib

            path = pathlib.Path(spec.pop("samples_file"))
            if base_dir is not None and not path.is_absolute():
                path = pathlib.Path(base_dir) / path
            values = np.loadtxt(path, delimiter=",", ndmin=1)
            kernel = sampled_kernel(values, float(spec.pop("dt")), spec.pop("support", "causal"))
        else:
            raise ValueError(f"unknown kernel family {family!r}")
    except KeyError as exc:
        raise ValueError(f"kernel {family!r} missing parameter {exc}") from exc
    if spec:
        raise ValueError(f"kernel {family!r}: unknown keys {sorted(spec)}")
    return kernel
