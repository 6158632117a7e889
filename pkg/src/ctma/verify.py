"""Law-level and functional-analytic checks.

* characteristic functions of ``X_t = int f(t - s) dL_s``: theory vs Monte Carlo;
* an L^2 proxy for the density of kernel translates;
* the Fubini condition for mixing a stationary kernel against a measure ``mu``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels import CustomKernel, GammaKernel, Kernel
from .levy import LevyTriplet, cumulant_psi
from .orlicz import membership
from .quadrature import DivergenceError, QuadratureError, panel_series, quad
from .simulate import Grid, iter_increment_blocks, kernel_weights

THETA_GRID = np.round(np.arange(-5.0, 5.0 + 1e-9, 0.25), 10)
Z95 = 1.959963984540054


# -- characteristic functions --------------------------------------------------------


def theoretical_cf(triplet: LevyTriplet, kernel: Kernel, theta: float) -> complex:
    """``exp(int psi(theta f(s)) ds)``."""
    theta = float(theta)
    if theta == 0.0:
        return 1.0 + 0j
    try:
        re = kernel.integrate(lambda v: cumulant_psi(triplet, theta * v).real, what="Re cumulant")
        im = kernel.integrate(lambda v: cumulant_psi(triplet, theta * v).imag, what="Im cumulant")
    except QuadratureError as exc:
        raise QuadratureError(f"cumulant of the stochastic integral at theta={theta}: {exc}",
                              exc.partial) from exc
    return cmath.exp(complex(re, im))


@dataclass
class CfReport:
    theta_grid: np.ndarray
    empirical_cf: np.ndarray
    theoretical_cf: np.ndarray | None
    mc_halfwidth: np.ndarray
    max_excess: float | None = None
    fraction_outside: float | None = None
    n_samples: int = 0

    def compare(self, theoretical) -> "CfReport":
        """Fill in the theory column and the band statistics."""
        th = np.asarray(theoretical, dtype=complex)
        d = np.maximum(np.abs(self.empirical_cf.real - th.real),
                       np.abs(self.empirical_cf.imag - th.imag))
        hw = self.mc_halfwidth
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(hw > 0, d / hw, np.where(d == 0, 0.0, np.inf))
        self.theoretical_cf = th
        self.max_excess = float(np.max(ratio))
        self.fraction_outside = float(np.mean(ratio > 1.0))
        return self

    def to_dict(self) -> dict:
        out = {"theta": self.theta_grid.tolist(),
               "empirical_re": self.empirical_cf.real.tolist(),
               "empirical_im": self.empirical_cf.imag.tolist(),
               "halfwidth": self.mc_halfwidth.tolist(),
               "max_excess": self.max_excess, "fraction_outside": self.fraction_outside,
               "n_samples": self.n_samples}
        if self.theoretical_cf is not None:
            out["theoretical_re"] = self.theoretical_cf.real.tolist()
            out["theoretical_im"] = self.theoretical_cf.imag.tolist()
        return out


class _CfAccumulator:
    """Order-independent sums of ``cos``/``sin`` and their squares per theta."""

    def __init__(self, theta):
        self.theta = np.asarray(theta, dtype=float)
        self.parts = {k: [[] for _ in self.theta] for k in ("c", "s", "cc", "ss")}
        self.n = 0

    def add(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        ph = np.outer(self.theta, x)
        c, s = np.cos(ph), np.sin(ph)
        for j in range(len(self.theta)):
            self.parts["c"][j].append(math.fsum(c[j]))
            self.parts["s"][j].append(math.fsum(s[j]))
            self.parts["cc"][j].append(math.fsum(c[j] * c[j]))
            self.parts["ss"][j].append(math.fsum(s[j] * s[j]))
        self.n += len(x)

    def report(self) -> CfReport:
        n = self.n
        tot = {k: np.array([math.fsum(v) for v in vals]) for k, vals in self.parts.items()}
        mc, ms = tot["c"] / n, tot["s"] / n
        vc = np.maximum(tot["cc"] / n - mc ** 2, 0.0) * n / max(n - 1, 1)
        vs = np.maximum(tot["ss"] / n - ms ** 2, 0.0) * n / max(n - 1, 1)
        emp = mc + 1j * ms
        emp[self.theta == 0.0] = 1.0
        hw = Z95 * np.sqrt(np.maximum(vc, vs) / n)
        hw[self.theta == 0.0] = 0.0
        return CfReport(self.theta.copy(), emp, None, hw, n_samples=n)


def empirical_cf(samples, theta_grid=THETA_GRID) -> CfReport:
    """``(1/N) sum exp(i theta X_k)`` with 95% half-widths ``1.96 sqrt(v/N)``.

    ``v`` is the larger of the sample variances of the real and imaginary parts.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("need at least one sample")
    acc = _CfAccumulator(theta_grid)
    for start in range(0, x.size, 1 << 14):
        acc.add(x[start:start + (1 << 14)])
    return acc.report()


def stationary_samples(triplet: LevyTriplet, kernel: Kernel, n_paths: int, seed: int,
                       dt: float = 0.05, warmup: float | None = None):
    """Yield blocks of one stationary draw ``X(t*)`` per independent path."""
    if warmup is None:
        warmup = kernel.horizon(1e-12)
    w, k0, k1 = kernel_weights(kernel, dt, warmup)
    # X(t*) = sum_k w_k dL_{-1-k}: cells run forward in time, lags backward
    rev = w[::-1]
    for block in iter_increment_blocks(triplet, dt, len(w), n_paths, seed):
        yield block @ rev


def cf_agreement(triplet: LevyTriplet, kernel: Kernel, n_paths: int, seed: int, *,
                 theta_grid=THETA_GRID, dt: float = 0.05, warmup: float | None = None) -> CfReport:
    """Monte Carlo CF of ``X(t*)`` against ``theoretical_cf`` on ``theta_grid``."""
    acc = _CfAccumulator(theta_grid)
    for x in stationary_samples(triplet, kernel, n_paths, seed, dt, warmup):
        acc.add(x)
    rep = acc.report()
    theory = [theoretical_cf(triplet, kernel, th) for th in rep.theta_grid]
    return rep.compare(theory)


# -- density of translates ----------------------------------------------------------


@dataclass
class ResidualCurve:
    """Least-squares residuals of a target against growing sets of kernel translates.

    An L^2 proxy: residuals are discrete L^2 norms, not Orlicz norms.
    """

    shift_counts: np.ndarray
    residual_norms: np.ndarray
    target: dict
    kernel: dict
    target_norm: float = 0.0
    shifts: list = field(default_factory=list)
    norm: str = "discrete L2 (dt-weighted); proxy for the Orlicz-space claim"

    def __post_init__(self):
        if len(self.shift_counts) != len(self.residual_norms):
            raise ValueError("lengths differ")
        if np.any(np.asarray(self.residual_norms) < 0):
            raise ValueError("negative residual")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shift_counts"] = np.asarray(self.shift_counts).tolist()
        d["residual_norms"] = np.asarray(self.residual_norms).tolist()
        return d


def dyadic_shifts(count: int, lo: float = 0.0, hi: float = 1.0) -> list[float]:
    """``hi`` followed by the base-2 van der Corput points ``0, 1/2, 1/4, 3/4, ...`` on ``[lo, hi)``.

    Every prefix of length ``2^j + 1`` is the uniform grid of step ``2^-j``
    (plus ``hi``), so prefixes refine the previous ones.
    """
    out = [hi]
    k = 0
    while len(out) < count:
        x, denom, n = 0.0, 1.0, k
        while n:
            denom *= 2.0
            x += (n & 1) / denom
            n >>= 1
        out.append(lo + (hi - lo) * x)
        k += 1
    return out[:count]


def graded_shifts(count: int, lo: float = -1.0, mid: float = 0.0, hi: float = 1.0,
                  frac: float = 0.25, q: float = 2.0) -> list[float]:
    """Nested shifts on ``[lo, hi]`` clustered at ``lo``, ``mid`` and ``hi``.

    The van der Corput sequence of :func:`dyadic_shifts` is mapped onto
    ``[lo, mid]`` (its first ``frac`` of ``[0, 1)``) and ``[mid, hi]`` with
    the grading ``v^q / (v^q + (1 - v)^q)``. Translates of a kernel that is
    singular at 0 need coefficient densities that blow up where the target
    jumps, which graded points resolve far better than uniform ones.
    """
    u = np.asarray(dyadic_shifts(count, 0.0, 1.0))

    def grade(v):
        return v ** q / (v ** q + (1.0 - v) ** q)

    left = lo + (mid - lo) * grade(np.clip(u / frac, 0.0, 1.0))
    right = mid + (hi - mid) * grade(np.clip((u - frac) / (1.0 - frac), 0.0, 1.0))
    return [float(x) for x in np.where(u < frac, left, right)]


def density_residual(kernel: Kernel, target: Kernel, shifts, grid: Grid, *,
                     counts=None, ridge: float = 1e-12) -> ResidualCurve:
    """Residual of projecting ``target`` onto ``span{f(t_i - .)}`` for prefixes of ``shifts``.

    Ridge-regularised least squares (augmented system, weight ``dt``).
    """
    shifts = [float(t) for t in shifts]
    if counts is None:
        counts = list(range(1, len(shifts) + 1))
    s = grid.times
    sw = math.sqrt(grid.dt)
    y = sw * target(s)
    A = np.column_stack([sw * kernel(t - s) for t in shifts])
    res = []
    for m in counts:
        Am = A[:, :m]
        aug = np.vstack([Am, math.sqrt(ridge) * np.eye(m)])
        rhs = np.concatenate([y, np.zeros(m)])
        coef, _, rank, _ = np.linalg.lstsq(aug, rhs, rcond=None)
        if rank < m:
            raise np.linalg.LinAlgError(f"design with {m} shifts is rank deficient even with ridge")
        res.append(float(np.linalg.norm(Am @ coef - y)))
    return ResidualCurve(np.asarray(counts), np.asarray(res), target.spec(), kernel.spec(),
                         float(np.linalg.norm(y)), shifts)


# -- Fubini condition ------------------------------------------------------------------


@dataclass
class FubiniReport:
    holds: bool
    mu_mass: float
    mu_finite: bool
    psi1_member: bool | None
    psi1_integral: float | None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("mu_mass", "psi1_integral"):
            if isinstance(d[k], float) and not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d


def measure_mass(density: Kernel, lo: float, hi: float, tol: float = 1e-10) -> tuple[bool, float]:
    """``int_lo^hi |density(u)| du`` with a dyadic panel series toward ``lo`` and ``inf``."""
    g = lambda u: abs(float(density(u)))
    head = min(1.0, hi - lo)

    def near(k):
        a, b = lo + head * 2.0 ** (-k - 1), lo + head * 2.0 ** (-k)
        return quad(lambda v: g(math.exp(v)) * math.exp(v), math.log(a), math.log(b),
                    what="mu panel") if lo == 0.0 else quad(g, a, b, what="mu panel")

    try:
        a = panel_series(near, tol=tol)
    except DivergenceError:
        return False, math.inf
    if not a.converged:
        return False, math.inf
    total = a.value
    if math.isfinite(hi):
        if hi > lo + head:
            total += quad(g, lo + head, hi, what="mu mass")
        return True, total
    start = lo + head

    def far(k):
        return quad(g, start + (2.0 ** k - 1.0), start + (2.0 ** (k + 1) - 1.0), what="mu panel")

    b = panel_series(far, tol=tol)
    if not b.converged:
        return False, math.inf
    return True, total + b.value


def mu_weight(alpha: float, horizon: float = 40.0) -> Kernel:
    """Density ``u^(-alpha-1) e^(-u)`` on ``u > 0``, for any real ``alpha``.

    For ``-1 < alpha < 0`` this is the gamma kernel with exponent ``-alpha-1``;
    otherwise the singularity at 0 is not integrable and the mass is infinite.
    """
    beta = -alpha - 1.0
    if beta > -1.0:
        return GammaKernel(beta)

    def dens(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = u[pos] ** beta * np.exp(-u[pos])
        return out

    return CustomKernel(func=dens, lo=0.0, hi=math.inf, singularity=beta, tail_horizon=horizon,
                        name="mu_weight", meta={"alpha": alpha})


def fubini_condition(g: Kernel, mu_density: Kernel, triplet: LevyTriplet,
                     domain=(0.0, math.inf)) -> FubiniReport:
    """``mu(domain) < inf`` and ``g`` in ``L_{Psi_1}``, for ``f(u, s) = g(u - s)``."""
    lo, hi = float(domain[0]), float(domain[1])
    finite, mass = measure_mass(mu_density, lo, hi)
    notes = []
    if not finite:
        notes.append("mu has infinite mass on the domain")
        return FubiniReport(False, mass, False, None, None, notes)
    rep = membership(triplet, g, p=1.0)
    notes += rep.notes
    member = bool(rep.member_of_L_psi_p)
    value = None
    if member:
        from .orlicz import phi_integral, young_psi_p

        value = phi_integral(young_psi_p(triplet, 1.0), g).value
    return FubiniReport(member, mass, True, member, value, notes)
