"""Homogeneous scalar Lévy triplets, Lévy measures and stochastic-integral laws.

Conventions: the truncation function is ``tau(x) = x / max(1, |x|)`` and the
cumulant of ``L_1`` is

    psi(z) = i gamma z - b z^2 / 2 + int [e^{izx} - 1 - i z tau(x)] nu(dx).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .quadrature import (
    DivergenceError,
    QuadratureError,
    quad,
    quad_from_zero,
    quad_log_range,
)

SIDES = ("positive", "negative", "both")


def truncate(x):
    """Truncation function ``x / (1 v |x|)``; works on scalars and arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        return x / max(1.0, abs(x))
    x = np.asarray(x, dtype=float)
    return x / np.maximum(1.0, np.abs(x))


@dataclass(frozen=True)
class TailBound:
    """Envelope of a Lévy density for ``|x| >= 1``.

    ``kind`` is ``"exp"`` (``scale * exp(-index |x|)``), ``"power"``
    (``scale * |x|^(-1-index)``) or ``"compact"`` (zero beyond ``index``).
    """

    kind: str
    index: float
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exp", "power", "compact"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.index <= 0:
            raise ValueError("tail index must be positive")

    def moment_finite(self, growth: float) -> bool:
        """Whether ``int_{|x|>1} |x|^growth nu(dx)`` is finite under this tail."""
        if self.kind == "power":
            return growth < self.index
        return True

    def cutoff(self, growth: float = 0.0, tol: float = 1e-13) -> float:
        """A radius beyond which ``int |x|^growth nu(dx)`` is below ``tol``."""
        if self.kind == "compact":
            return float(self.index)
        if self.kind == "power":
            a = self.index - growth
            if a <= 0:
                raise DivergenceError(
                    f"moment of order {growth} is infinite for a power tail of index {self.index}")
            return max(2.0, (self.scale / (a * tol)) ** (1.0 / a))
        x = 1.0 + 30.0 / self.index
        while self.scale * x ** (growth + 1) * math.exp(-self.index * x) / self.index > tol:
            x *= 1.5
        return x


@dataclass(frozen=True)
class LevyMeasure:
    """A Lévy measure on the real line minus the origin.

    Either a finite list of ``atoms`` (location, mass), or a ``density`` with
    metadata: ``singularity`` is the exponent ``beta`` in
    ``nu(x) <= C |x|^(-beta)`` near zero, ``tail`` bounds it away from zero,
    and ``support`` restricts it to one half-line. Both parts may be present.
    ``family``/``params`` record where it came from (used for serialisation
    and exact samplers).
    """

    atoms: tuple = ()
    density: Callable[[float], float] | None = None
    singularity: float = 0.0
    tail: TailBound | None = None
    support: str = "both"
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for x, m in atoms:
            if x == 0.0:
                raise ValueError("Lévy measures put no mass at the origin")
            if m < 0 or not math.isfinite(m):
                raise ValueError(f"atom mass must be finite and non-negative, got {m}")
        if self.support not in SIDES:
            raise ValueError(f"support must be one of {SIDES}")
        if self.density is not None:
            # x^2 * |x|^{-beta} must be integrable at 0
            if self.singularity >= 3.0:
                raise ValueError(
                    f"singularity exponent {self.singularity} >= 3: int 1^x^2 nu(dx) diverges")
            if self.tail is None:
                raise ValueError("density-kind Lévy measures need a tail descriptor")
            self.integrate(lambda x: min(1.0, x * x), order=2, what="int 1^x^2 nu(dx)")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls) -> "LevyMeasure":
        return cls(family="zero")

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float]]) -> "LevyMeasure":
        return cls(atoms=tuple(atoms), family="atoms")

    @property
    def is_zero(self) -> bool:
        return self.density is None and all(m == 0 for _, m in self.atoms)

    @property
    def finite_activity(self) -> bool:
        if self.density is None:
            return True
        return self.singularity < 1.0

    def sides(self) -> tuple[int, ...]:
        return {"positive": (1,), "negative": (-1,), "both": (1, -1)}[self.support]

    def _dens(self, x: float) -> float:
        return float(self.density(x))

    # -- integration ----------------------------------------------------------

    def integrate(self, g: Callable[[float], float], *, order: float = 0.0,
                  growth: float = 0.0, lo: float = 0.0, hi: float = math.inf,
                  breaks: Sequence[float] = (), what: str = "nu-integral") -> float:
        """``int_{lo < |x| <= hi} g(x) nu(dx)`` for a real integrand ``g``.

        ``order`` is the vanishing order of ``g`` at 0 (``|g(x)| = O(|x|^order)``)
        and ``growth`` its polynomial growth at infinity; both are used to
        decide divergence up front and to choose the tail cutoff.
        """
        total = 0.0
        for x, m in self.atoms:
            if lo < abs(x) <= hi and m:
                total += m * g(x)
        if self.density is None:
            return total
        if lo == 0.0 and order - self.singularity <= -1.0:
            raise DivergenceError(
                f"{what}: integrand of order {order} against a density with "
                f"singularity {self.singularity} diverges at 0")
        if hi == math.inf and not self.tail.moment_finite(growth):
            raise DivergenceError(f"{what}: tail moment of order {growth} is infinite")
        xmax = min(hi, self.tail.cutoff(growth))
        cuts = sorted({c for c in (1.0, *[abs(b) for b in breaks]) if lo < c < xmax})
        for sign in self.sides():
            def f(x, sign=sign):
                return g(sign * x) * self._dens(sign * x)

            edges = [lo, *cuts, xmax]
            for a, b in zip(edges[:-1], edges[1:]):
                if b <= a:
                    continue
                if a == 0.0:
                    total += quad_from_zero(f, b, what=what)
                else:
                    total += quad_log_range(f, a, b, what=what)
        return total

    def mass(self, lo: float, hi: float, left_closed: bool = False) -> float:
        """``nu((lo, hi])`` (or ``nu([lo, hi))``) for an interval avoiding 0."""
        if lo < 0.0 < hi:
            raise ValueError("interval contains the origin")
        if hi <= lo:
            return 0.0
        if left_closed:
            total = sum(m for x, m in self.atoms if lo <= x < hi)
        else:
            total = sum(m for x, m in self.atoms if lo < x <= hi)
        if self.density is None:
            return total
        sign = 1 if hi > 0 else -1
        if (sign, self.support) in ((1, "negative"), (-1, "positive")):
            return total
        a, b = sorted((abs(lo), abs(hi)))
        dens = lambda x: self._dens(sign * x)
        if a == 0.0:
            if not self.finite_activity:
                return math.inf
            total += quad_from_zero(dens, min(b, 1.0), what="nu mass")
            a = 1.0
        b = min(b, self.tail.cutoff(0.0))
        if b > a:
            total += quad_log_range(dens, a, b, what="nu mass", loose=1e-5)
        return total

    def moment_tail(self, p: float) -> float:
        """``int_{|x|>1} |x|^p nu(dx)``; raises DivergenceError when infinite."""
        return self.integrate(lambda x: abs(x) ** p, lo=1.0, growth=p,
                              what=f"int_|x|>1 |x|^{p} nu(dx)")

    def log_moment(self) -> float:
        """``int_{|x|>1} log|x| nu(dx)``."""
        return self.integrate(lambda x: math.log(abs(x)), lo=1.0, growth=1e-9,
                              what="int_|x|>1 log|x| nu(dx)")

    def small_power(self, q: float, log_factor: bool = False) -> float:
        """``int_{|x|<=1} |x|^q [|log|x||] nu(dx)``; DivergenceError when infinite."""
        if log_factor:
            g = lambda x: abs(x) ** q * abs(math.log(abs(x)))
        else:
            g = lambda x: abs(x) ** q
        order = q - (1e-9 if log_factor else 0.0)
        return self.integrate(g, order=order, hi=1.0, what=f"int_|x|<=1 |x|^{q} nu(dx)")

    def small_jump_variance(self, eps: float) -> float:
        """``int_{|x|<=eps} x^2 nu(dx)``."""
        if eps <= 0:
            return 0.0
        return self.integrate(lambda x: x * x, order=2, hi=eps, what="small-jump variance")

    def tail_mass(self, eps: float) -> float:
        """``nu(|x| > eps)``."""
        if eps == 0.0 and not self.finite_activity:
            return math.inf
        return self.integrate(lambda x: 1.0, order=0.0, lo=eps, what="tail mass")

    # -- jump sampling --------------------------------------------------------

    def jump_sampler(self, eps: float = 0.0):
        """Return ``(rate, draw)`` for the jumps with ``|x| > eps``.

        ``draw(rng, k)`` returns ``k`` i.i.d. jump sizes from the normalised
        restriction of the measure. Exact for atoms, normal and two-sided
        exponential jump laws and power (stable) tails; otherwise by a
        tabulated inverse CDF on a logarithmic grid.
        """
        if self.density is None:
            locs = np.array([x for x, m in self.atoms if abs(x) > eps and m > 0])
            masses = np.array([m for x, m in self.atoms if abs(x) > eps and m > 0])
            rate = float(masses.sum())
            if rate == 0.0:
                return 0.0, lambda rng, k: np.zeros(k)
            probs = masses / rate

            def draw_atoms(rng, k):
                return locs[rng.choice(len(locs), size=k, p=probs)]

            return rate, draw_atoms
        if self.atoms:
            raise NotImplementedError("mixed atom/density measures cannot be sampled")
        fam, par = self.family, self.params
        if fam == "compound_normal" and eps == 0.0:
            mu, sd = par["mean"], par["sd"]
            return float(par["rate"]), lambda rng, k: rng.normal(mu, sd, k)
        if fam == "compound_two_sided_exponential" and eps == 0.0:
            p, up, down = par["p_up"], par["eta_up"], par["eta_down"]

            def draw_tse(rng, k):
                up_mask = rng.random(k) < p
                mags = np.where(up_mask, rng.exponential(1.0 / up, k),
                                -rng.exponential(1.0 / down, k))
                return mags

            return float(par["rate"]), draw_tse
        if fam == "alpha_stable":
            a, cp, cm = par["index"], par["c_plus"], par["c_minus"]
            eps = max(eps, 1e-300)
            mp, mm = cp * eps ** -a / a, cm * eps ** -a / a
            rate = mp + mm

            def draw_stable(rng, k):
                sign = np.where(rng.random(k) < mp / rate, 1.0, -1.0)
                return sign * eps * rng.random(k) ** (-1.0 / a)

            return rate, draw_stable
        return self._tabulated_sampler(eps)

    def _tabulated_sampler(self, eps: float):
        if eps <= 0.0 and not self.finite_activity:
            raise ValueError("infinite-activity measure needs a positive jump threshold")
        xmax = self.tail.cutoff(0.0, tol=1e-10)
        start = max(eps, 1e-12)
        tables = []
        rates = []
        for sign in self.sides():
            grid = np.geomspace(start, xmax, 1500)
            seg = np.array([
                quad(lambda x: self._dens(sign * x), a, b, loose=1e-4)
                for a, b in zip(grid[:-1], grid[1:])
            ])
            head = 0.0
            if eps <= 0.0:
                head = quad_from_zero(lambda x: self._dens(sign * x), start)
            cdf = np.concatenate([[head], head + np.cumsum(seg)])
            tables.append((sign, grid, cdf))
            rates.append(cdf[-1])
        rate = float(sum(rates))

        def draw_tab(rng, k):
            out = np.empty(k)
            side = rng.random(k) * rate
            u = rng.random(k)
            acc = 0.0
            for (sign, grid, cdf), r in zip(tables, rates):
                mask = (side >= acc) & (side < acc + r)
                target = u[mask] * cdf[-1]
                logx = np.interp(target, cdf, np.log(grid))
                out[mask] = sign * np.exp(logx)
                acc += r
            return out

        return rate, draw_tab

    def to_spec(self) -> dict:
        return {"family": self.family, **self.params}


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet ``(gamma, b, nu)`` of a scalar Lévy process."""

    gamma: float = 0.0
    b: float = 0.0
    nu: LevyMeasure = field(default_factory=LevyMeasure.zero)
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.b >= 0 and math.isfinite(self.b)):
            raise ValueError(f"Gaussian variance must be non-negative, got {self.b}")
        if not math.isfinite(self.gamma):
            raise ValueError("drift must be finite")

    def mean(self) -> float:
        """``E L_1 = gamma + int (x - tau(x)) nu(dx)``; DivergenceError if no first moment."""
        return self.gamma + self.nu.integrate(lambda x: x - truncate(x), lo=1.0, growth=1.0,
                                              what="first moment")

    def centered(self) -> "LevyTriplet":
        """Same ``b`` and ``nu`` with the drift adjusted so that ``E L_1 = 0``."""
        return LevyTriplet(self.gamma - self.mean(), self.b, self.nu,
                           {**self.spec, "centered": True})

    def tau_compensator(self, eps: float = 0.0) -> float:
        """``int_{|x|>eps} tau(x) nu(dx)`` (finite for ``eps > 0`` or finite activity)."""
        return self.nu.integrate(lambda x: truncate(x), order=1.0, lo=eps,
                                 what="tau compensator")


@dataclass(frozen=True)
class IntegralLaw:
    """Triplet and cumulant of ``int f(s) dL_s``.

    ``nu_f(lo, hi)`` evaluates the pushed-forward Lévy measure on the interval
    ``(lo, hi]`` (which must not contain 0).
    """

    gamma_f: float
    b_f: float
    nu_f: Callable[[float, float], float]
    cumulant: Callable[[float], complex]


def _psi_jump_integrand(z: float):
    """Real and imaginary parts of ``e^{izx} - 1 - i z tau(x)``, stable near 0."""

    def re(x):
        y = z * x
        return -2.0 * math.sin(0.5 * y) ** 2

    def im(x):
        y = z * x
        if abs(x) <= 1.0:
            if abs(y) < 1e-3:
                return -y ** 3 / 6.0 + y ** 5 / 120.0
            return math.sin(y) - y
        return math.sin(y) - z * truncate(x)

    return re, im


HIGH_FREQUENCY = 64.0
MAX_PERIODS = 512
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _density_mid_transform(nu: LevyMeasure, z: float, a: float) -> complex:
    """``int_{a < |x| <= 1} (e^{izx} - 1 - i z x) nu(dx)`` for the density part."""
    w = abs(z)
    out = 0j
    for sign in nu.sides():
        d = lambda v, sign=sign: nu._dens(sign * v)
        f = _fourier(lambda v, sign=sign: _dens_array(nu, sign * v), w, a, 1.0)
        m0 = quad_log_range(d, a, 1.0, what="Re psi")
        m1 = quad_log_range(lambda v: v * d(v), a, 1.0, what="Im psi")
        out += complex(f.real - m0, sign * math.copysign(1.0, z) * (f.imag - w * m1))
    return out


def _fourier(d: Callable[[np.ndarray], np.ndarray], w: float, lo: float, hi: float) -> complex:
    """``int_lo^hi d(x) e^{iwx} dx`` for a positive, vectorised density ``d``.

    Doubling pieces from ``lo``, each cut into one 8-point Gauss-Legendre panel
    per period. Once ``MAX_PERIODS`` panels are spent the remainder is smooth on
    the scale ``1/w`` and two integration-by-parts boundary terms finish it.
    QUADPACK's weighted rules keep global state and crash inside an outer
    ``quad``, so they are avoided.
    """
    period = 2.0 * math.pi / w
    xs, ws = [], []
    budget = MAX_PERIODS
    left = lo
    while left < hi and budget > 0:
        right = min(hi, 2.0 * left)
        m = max(1, int(math.ceil((right - left) / period)))
        if m > budget:
            m = budget
            right = left + m * period
        e = np.linspace(left, right, m + 1)
        half = 0.5 * np.diff(e)[:, None]
        xs.append(((0.5 * (e[:-1] + e[1:]))[:, None] + half * _GL_NODES[None, :]).ravel())
        ws.append((half * _GL_WEIGHTS[None, :]).ravel())
        budget -= m
        left = right
    x = np.concatenate(xs)
    wt = np.concatenate(ws)
    dx = wt * d(x)
    out = complex(np.dot(dx, np.cos(w * x)), np.dot(dx, np.sin(w * x)))
    if left < hi:
        out += _boundary_terms(d, w, hi, upper=True) - _boundary_terms(d, w, left)
    return out


def _boundary_terms(d, w: float, x: float, upper: bool = False) -> complex:
    """``e^{iwx} (d/(iw) + d'/w^2)``; one-sided (left limit) at an upper endpoint."""
    h = 1e-4 * x
    if upper:
        x = x * (1.0 - 1e-12)
        v = d(np.array([x - 2 * h, x - h, x]))
        val, d1 = v[2], (3 * v[2] - 4 * v[1] + v[0]) / (2 * h)
    else:
        v = d(np.array([x - h, x, x + h]))
        val, d1 = v[1], (v[2] - v[0]) / (2 * h)
    return cmath.exp(1j * w * x) * (val / (1j * w) + d1 / (w * w))


def _dens_array(nu: LevyMeasure, x: np.ndarray) -> np.ndarray:
    try:
        d = np.asarray(nu.density(x), dtype=float)
        if d.shape == x.shape:
            return d
    except (TypeError, ValueError):
        pass
    return np.fromiter((nu._dens(v) for v in x), dtype=float, count=x.size)


def _density_tail_transform(nu: LevyMeasure, z: float) -> complex:
    """``int_{|x|>1} (e^{izx} - 1 - i z sgn x) nu(dx)`` for the density part."""
    out = 0j
    w = abs(z)
    for sign in nu.sides():
        mass = nu.integrate(lambda x: 1.0 if sign * x > 0 else 0.0, lo=1.0, what="tail mass")
        f = _fourier(lambda v, sign=sign: _dens_array(nu, sign * v), w, 1.0,
                     nu.tail.cutoff(0.0))
        s = math.copysign(1.0, z) * f.imag
        out += complex(f.real - mass, sign * s - sign * z * mass)
    return out
def cumulant_psi(triplet: LevyTriplet, z: float) -> complex:
    """Lévy-Khintchine exponent ``log E exp(i z L_1)``."""
    z = float(z)
    if z == 0.0:
        return 0j
    value = complex(-0.5 * triplet.b * z * z, triplet.gamma * z)
    nu = triplet.nu
    if nu.is_zero:
        return value
    re, im = _psi_jump_integrand(z)
    if nu.density is None:
        brk = (1.0 / abs(z),)
        return value + complex(nu.integrate(re, order=2.0, breaks=brk, what="Re psi"),
                               nu.integrate(im, order=2.0, breaks=brk, what="Im psi"))
    if abs(z) > HIGH_FREQUENCY:
        # many oscillations on [1/|z|, 1]: Fourier-weighted quadrature there
        a = 1.0 / abs(z)
        value += complex(
            nu.integrate(re, order=2.0, hi=a, what="Re psi"),
            nu.integrate(im, order=2.0, hi=a, what="Im psi"),
        )
        value += _density_mid_transform(nu, z, a)
    else:
        brk = (1.0 / abs(z),) if abs(z) > 1 else ()
        value += complex(
            nu.integrate(re, order=2.0, hi=1.0, breaks=brk, what="Re psi"),
            nu.integrate(im, order=2.0, hi=1.0, breaks=brk, what="Im psi"),
        )
    if nu.atoms:
        far = LevyMeasure(atoms=tuple((x, m) for x, m in nu.atoms if abs(x) > 1.0))
        value += complex(far.integrate(re, lo=1.0), far.integrate(im, lo=1.0))
    return value + _density_tail_transform(nu, z)


def cumulant_psi_atoms(triplet: LevyTriplet, z: float) -> complex:
    """Closed-form exponent for atom-only measures (independent of the quadrature path)."""
    if triplet.nu.density is not None:
        raise ValueError("closed form only available for atom measures")
    value = 1j * triplet.gamma * z - 0.5 * triplet.b * z * z
    for x, m in triplet.nu.atoms:
        value += m * (np.exp(1j * z * x) - 1.0 - 1j * z * truncate(x))
    return complex(value)


def integral_law(triplet: LevyTriplet, f) -> IntegralLaw:
    """Triplet ``(gamma^f, B^f, nu^f)`` and cumulant of ``int f(s) dL_s``.

    ``f`` is a :class:`ctma.kernels.Kernel`. Membership in the Orlicz class is
    checked defensively through finiteness of the three components.
    """
    nu = triplet.nu
    try:
        b_f = triplet.b * f.integrate(lambda v: v * v) if triplet.b else 0.0
    except QuadratureError as exc:
        raise QuadratureError(f"B^f diverged: {exc}", exc.partial) from exc

    def drift_density(v: float) -> float:
        if v == 0.0:
            return 0.0
        out = triplet.gamma * v
        if not nu.is_zero:
            out += nu.integrate(lambda x: truncate(x * v) - v * truncate(x),
                                lo=min(1.0, 1.0 / abs(v)), breaks=(1.0, 1.0 / abs(v)),
                                what="gamma^f inner")
        return out

    try:
        gamma_f = f.integrate(drift_density)
    except QuadratureError as exc:
        raise QuadratureError(f"gamma^f diverged: {exc}", exc.partial) from exc

    def nu_f(lo: float, hi: float) -> float:
        if lo < 0.0 < hi:
            raise ValueError("nu^f is only evaluated on sets bounded away from 0")
        if nu.is_zero:
            return 0.0

        def pushed(v):
            if v == 0.0:
                return 0.0
            if v > 0:
                return nu.mass(lo / v, hi / v)
            # {x : v x in (lo, hi]} = [hi/v, lo/v) for v < 0
            return nu.mass(hi / v, lo / v, left_closed=True)

        try:
            return f.integrate(pushed)
        except QuadratureError as exc:
            raise QuadratureError(f"nu^f diverged: {exc}", exc.partial) from exc

    def cumulant(theta: float) -> complex:
        theta = float(theta)
        if theta == 0.0:
            return 0j
        re = f.integrate(lambda v: cumulant_psi(triplet, v * theta).real)
        im = f.integrate(lambda v: cumulant_psi(triplet, v * theta).imag)
        return complex(re, im)

    return IntegralLaw(gamma_f, b_f, nu_f, cumulant)


# -- named families ------------------------------------------------------------

def gaussian(b: float = 1.0, gamma: float = 0.0) -> LevyTriplet:
    return LevyTriplet(gamma, b, LevyMeasure.zero(), {"family": "gaussian", "b": b})


def compound_poisson(rate: float, jumps: str | Sequence = "atoms", *, atoms=None,
                     mean: float = 0.0, sd: float = 1.0, p_up: float = 0.5,
                     eta_up: float = 1.0, eta_down: float = 1.0, b: float = 0.0,
                     gamma: float | None = None, centered: bool = False) -> LevyTriplet:
    """Compound Poisson triplet with ``rate`` jumps per unit time.

    ``jumps`` selects the jump law: ``"atoms"`` (``atoms`` is a list of
    ``(location, probability)``), ``"normal"`` or ``"two_sided_exponential"``.
    By default the drift is chosen so that the process has no drift besides
    its jumps (``gamma = int tau dnu``); ``centered=True`` makes ``E L_1 = 0``.
    """
    if rate < 0:
        raise ValueError("rate must be non-negative")
    spec = {"family": "compound_poisson", "rate": rate, "jumps": jumps}
    if jumps == "atoms":
        atoms = atoms if atoms is not None else [(1.0, 1.0)]
        total = sum(p for _, p in atoms)
        if not math.isclose(total, 1.0, rel_tol=1e-9):
            raise ValueError("atom probabilities must sum to 1")
        nu = LevyMeasure(atoms=tuple((x, rate * p) for x, p in atoms), family="atoms",
                         params={"atoms": [list(a) for a in atoms]})
        spec["atoms"] = [list(a) for a in atoms]
    elif jumps == "normal":
        if sd <= 0:
            raise ValueError("sd must be positive")
        c = rate / (sd * math.sqrt(2 * math.pi))
        nu = LevyMeasure(
            density=lambda x: c * math.exp(-0.5 * ((x - mean) / sd) ** 2),
            tail=TailBound("compact", abs(mean) + 40.0 * sd),
            family="compound_normal", params={"rate": rate, "mean": mean, "sd": sd})
        spec.update(mean=mean, sd=sd)
    elif jumps == "two_sided_exponential":
        cu, cd = rate * p_up * eta_up, rate * (1 - p_up) * eta_down

        def dens(x):
            return cu * math.exp(-eta_up * x) if x > 0 else cd * math.exp(eta_down * x)

        nu = LevyMeasure(density=dens, tail=TailBound("exp", min(eta_up, eta_down), max(cu, cd)),
                         family="compound_two_sided_exponential",
                         params={"rate": rate, "p_up": p_up, "eta_up": eta_up,
                                 "eta_down": eta_down})
        spec.update(p_up=p_up, eta_up=eta_up, eta_down=eta_down)
    else:
        raise ValueError(f"unknown jump law {jumps!r}")
    if gamma is None:
        gamma = nu.integrate(lambda x: truncate(x), order=1.0, what="tau compensator")
    trip = LevyTriplet(gamma, b, nu, spec)
    return trip.centered() if centered else trip


def gamma_subordinator(shape: float, rate: float) -> LevyTriplet:
    """Gamma subordinator: ``nu(dx) = shape x^-1 e^{-rate x} dx`` on ``x > 0``, no drift."""
    if shape <= 0 or rate <= 0:
        raise ValueError("shape and rate must be positive")
    nu = LevyMeasure(density=lambda x: shape * math.exp(-rate * x) / x if x > 0 else 0.0,
                     singularity=1.0, tail=TailBound("exp", rate, shape), support="positive",
                     family="gamma_subordinator", params={"shape": shape, "rate": rate})
    # gamma = int tau dnu = shape [ (1 - e^{-rate}) / rate + E_1(rate) ]
    gamma = shape * ((1.0 - math.exp(-rate)) / rate + float(special.exp1(rate)))
    return LevyTriplet(gamma, 0.0, nu, {"family": "gamma_subordinator", "shape": shape,
                                        "rate": rate})


def alpha_stable(index: float, skew: float = 0.0, scale: float = 1.0,
                 gamma: float = 0.0) -> LevyTriplet:
    """Stable Lévy measure ``c_+ x^{-1-index}`` / ``c_- |x|^{-1-index}``.

    ``c_+ + c_-`` is normalised so that the symmetric part of the exponent is
    ``-scale^index |z|^index``.
    """
    if not 0 < index < 2:
        raise ValueError("stability index must lie in (0, 2)")
    if not -1 <= skew <= 1:
        raise ValueError("skew must lie in [-1, 1]")
    if index == 1.0:
        total = 2.0 * scale / math.pi
    else:
        total = scale ** index / (-special.gamma(-index) * math.cos(math.pi * index / 2))
    cp, cm = total * (1 + skew) / 2, total * (1 - skew) / 2
    support = "both"
    if skew == 1:
        support = "positive"
    elif skew == -1:
        support = "negative"

    def dens(x):
        return (cp if x > 0 else cm) * abs(x) ** (-1.0 - index)

    nu = LevyMeasure(density=dens, singularity=1.0 + index,
                     tail=TailBound("power", index, max(cp, cm)), support=support,
                     family="alpha_stable",
                     params={"index": index, "skew": skew, "scale": scale,
                             "c_plus": cp, "c_minus": cm})
    return LevyTriplet(gamma, 0.0, nu, {"family": "alpha_stable", "index": index,
                                        "skew": skew, "scale": scale})


_EXPR_NAMES = {name: getattr(np, name) for name in (
    "exp", "log", "sqrt", "abs", "sin", "cos", "tanh", "pi", "sign", "minimum", "maximum")}


def custom_density(expression: str, singularity: float, tail: dict | TailBound,
                   support: str = "both", gamma: float = 0.0, b: float = 0.0) -> LevyTriplet:
    """Lévy measure given by a numpy expression in ``x`` plus its metadata."""
    code = compile(expression, "<nu-density>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NAMES and name != "x":
            raise ValueError(f"name {name!r} not allowed in a density expression")

    def dens(x):
        return float(eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "x": x}))

    if isinstance(tail, dict):
        tail = TailBound(**tail)
    nu = LevyMeasure(density=dens, singularity=singularity, tail=tail, support=support,
                     family="custom_density",
                     params={"expression": expression, "singularity": singularity,
                             "tail": {"kind": tail.kind, "index": tail.index,
                                      "scale": tail.scale}, "support": support})
    return LevyTriplet(gamma, b, nu, {"family": "custom_density", **nu.params})


def triplet_from_spec(spec: dict) -> LevyTriplet:
    """Build a triplet from the configuration schema shared with the CLI."""
    spec = dict(spec)
    family = spec.pop("family", None)
    centered = spec.pop("centered", False)
    builders = {
        "gaussian": gaussian,
        "compound_poisson": compound_poisson,
        "gamma_subordinator": gamma_subordinator,
        "alpha_stable": alpha_stable,
        "custom_density": custom_density,
    }
    if family not in builders:
        raise ValueError(f"unknown Lévy family {family!r}; expected one of {sorted(builders)}")
    if family == "compound_poisson" and "atoms" in spec:
        spec["atoms"] = [tuple(a) for a in spec["atoms"]]
    try:
        trip = builders[family](**spec)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {exc}") from exc
    if centered:
        trip = trip.centered()
    return LevyTriplet(trip.gamma, trip.b, trip.nu, {"family": family, **spec,
                                                     **({"centered": True} if centered else {})})
